//! Rearrangement inequalities on Euclidean grids, each evaluated as a
//! [`CheckResult`] with both sides and the slack between them.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{convolve, gradient_magnitude, ScalarField};
use crate::rearrange::rearrange_field;
use crate::report::{scale, CheckResult};

/// Relative tolerance for relations that hold exactly up to summation order.
pub const EXACT_REL_TOL: f64 = 1e-12;
/// Relative tolerance for relations evaluated through convolutions or convex penalties.
pub const FUNCTIONAL_REL_TOL: f64 = 1e-10;
/// Discretization band for gradient-based quotients.
pub const SOBOLEV_REL_TOL: f64 = 0.02;

/// `‖f‖_p = ‖f*‖_p`.
pub fn check_lp_preservation(f: &ScalarField, p: f64) -> Result<CheckResult> {
    check_exponent(p)?;
    let fstar = rearrange_field(f)?;
    let (lhs, rhs) = (f.lp_norm(p), fstar.lp_norm(p));
    Ok(CheckResult::eq(format!("lp_preservation[p={p}]"), lhs, rhs, EXACT_REL_TOL * scale(lhs, rhs)))
}

/// `∫ f g <= ∫ f* g*`.
pub fn check_hardy_littlewood(f: &ScalarField, g: &ScalarField) -> Result<CheckResult> {
    f.check_grid(g)?;
    let (fs, gs) = (rearrange_field(f)?, rearrange_field(g)?);
    let lhs = f.inner(g)?;
    let rhs = fs.inner(&gs)?;
    Ok(CheckResult::le("hardy_littlewood", lhs, rhs, EXACT_REL_TOL * scale(lhs, rhs)))
}

/// `∫ f X_{g <= s} >= ∫ f* X_{g* <= s}`.
pub fn check_complement_lemma(f: &ScalarField, g: &ScalarField, s: f64) -> Result<CheckResult> {
    f.check_grid(g)?;
    let (fs, gs) = (rearrange_field(f)?, rearrange_field(g)?);
    let masked = |a: &ScalarField, b: &ScalarField| -> f64 {
        let sum: f64 = a.values().iter().zip(b.values()).filter(|(_, &bv)| bv <= s).map(|(&av, _)| av).sum();
        sum * a.grid().cell_volume()
    };
    let lhs = masked(f, g);
    let rhs = masked(&fs, &gs);
    Ok(CheckResult::ge("complement_lemma", lhs, rhs, EXACT_REL_TOL * scale(lhs, rhs)))
}

/// `‖f* - g*‖_p <= ‖f - g‖_p`.
pub fn check_lp_contraction(f: &ScalarField, g: &ScalarField, p: f64) -> Result<CheckResult> {
    check_exponent(p)?;
    f.check_grid(g)?;
    let (fs, gs) = (rearrange_field(f)?, rearrange_field(g)?);
    let lhs = f.zip_map(g, |a, b| a - b)?.lp_norm(p);
    let rhs = fs.zip_map(&gs, |a, b| a - b)?.lp_norm(p);
    Ok(CheckResult::ge(format!("lp_contraction[p={p}]"), lhs, rhs, EXACT_REL_TOL * scale(lhs, rhs)))
}

/// Convex penalties with `J(0) = 0` accepted by [`check_nonexpansivity`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConvexPenalty {
    /// `|x|^p`, `p >= 1`.
    AbsPower(f64),
    /// `max(x, 0)^2`.
    PositivePartSquared,
    /// `0` for `x <= 0`, `x^2 / 2` on `(0, 1)`, `x - 1/2` beyond.
    SmoothHinge,
}

impl ConvexPenalty {
    pub fn abs_power(p: f64) -> Result<Self> {
        if p >= 1.0 && p.is_finite() {
            Ok(Self::AbsPower(p))
        } else {
            Err(Error::InvalidArgument(format!("|x|^p needs finite p >= 1, got {p}")))
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Self::AbsPower(p) => x.abs().powf(p),
            Self::PositivePartSquared => x.max(0.0).powi(2),
            Self::SmoothHinge => {
                if x <= 0.0 {
                    0.0
                } else if x < 1.0 {
                    0.5 * x * x
                } else {
                    x - 0.5
                }
            }
        }
    }
}

impl fmt::Display for ConvexPenalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::AbsPower(p) => write!(f, "abs^{p}"),
            Self::PositivePartSquared => write!(f, "pos^2"),
            Self::SmoothHinge => write!(f, "smooth_hinge"),
        }
    }
}

impl FromStr for ConvexPenalty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pos^2" | "pos2" => Ok(Self::PositivePartSquared),
            "smooth_hinge" | "hinge" => Ok(Self::SmoothHinge),
            _ => match s.strip_prefix("abs^").map(str::parse::<f64>) {
                Some(Ok(p)) => Self::abs_power(p),
                _ => Err(Error::InvalidArgument(format!("penalty '{s}' is not in the catalogue"))),
            },
        }
    }
}

/// `∫ J(f* - g*) <= ∫ J(f - g)`.
pub fn check_nonexpansivity(f: &ScalarField, g: &ScalarField, j: ConvexPenalty) -> Result<CheckResult> {
    f.check_grid(g)?;
    let (fs, gs) = (rearrange_field(f)?, rearrange_field(g)?);
    let cv = f.grid().cell_volume();
    let energy = |a: &ScalarField, b: &ScalarField| -> f64 {
        a.values().iter().zip(b.values()).map(|(x, y)| j.eval(x - y)).sum::<f64>() * cv
    };
    let lhs = energy(f, g);
    let rhs = energy(&fs, &gs);
    Ok(CheckResult::ge(format!("nonexpansivity[{j}]"), lhs, rhs, FUNCTIONAL_REL_TOL * scale(lhs, rhs)))
}

/// `I(f, g, h) = ∫ f(x) (g * h)(x) dx` with `h` read as a kernel.
pub fn riesz_functional(f: &ScalarField, g: &ScalarField, h: &ScalarField) -> Result<f64> {
    f.inner(&convolve(g, h)?)
}

/// `I(f, g, h) <= I(f*, g*, h*)`.
pub fn check_riesz(f: &ScalarField, g: &ScalarField, h: &ScalarField) -> Result<CheckResult> {
    f.check_grid(g)?;
    f.check_grid(h)?;
    let lhs = riesz_functional(f, g, h)?;
    let rhs = riesz_functional(&rearrange_field(f)?, &rearrange_field(g)?, &rearrange_field(h)?)?;
    Ok(CheckResult::le("riesz", lhs, rhs, FUNCTIONAL_REL_TOL * scale(lhs, rhs)))
}

/// Sobolev quotient `‖∇f‖_p / ‖f‖_{p*}` with `p* = np / (n - p)`.
pub fn sobolev_quotient(f: &ScalarField, p: f64) -> Result<f64> {
    let n = f.grid().dim() as f64;
    if !(p >= 1.0 && p < n) {
        return Err(Error::InvalidArgument(format!("Sobolev quotient needs 1 <= p < n = {n}, got {p}")));
    }
    let pstar = n * p / (n - p);
    Ok(gradient_magnitude(f).lp_norm(p) / f.lp_norm(pstar))
}

/// The Sobolev quotient does not increase under rearrangement (within a 2% band).
pub fn check_sobolev_quotient(f: &ScalarField, p: f64) -> Result<CheckResult> {
    let rhs = sobolev_quotient(f, p)?;
    let lhs = sobolev_quotient(&rearrange_field(f)?, p)?;
    Ok(CheckResult::le(format!("sobolev_quotient[p={p}]"), lhs, rhs, SOBOLEV_REL_TOL * rhs))
}

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("exponent must lie in [1, inf], got {p}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{random_smooth_field, Grid, RegionMask};

    fn grid() -> Grid {
        Grid::cube(2, 32, 1.0).unwrap()
    }

    #[test]
    fn lp_preservation_cases() {
        let g = grid();
        let c = ScalarField::constant(g.clone(), 1.7);
        let r = check_lp_preservation(&c, 2.0).unwrap();
        assert_eq!(r.lhs, r.rhs);
        let f = random_smooth_field(&g, 1, 3).unwrap();
        // sorted-values oracle
        let mut sorted = f.values().to_vec();
        sorted.sort_by(f64::total_cmp);
        let oracle = (sorted.iter().map(|v| v * v).sum::<f64>() * g.cell_volume()).sqrt();
        let r = check_lp_preservation(&f, 2.0).unwrap();
        assert!(r.pass);
        assert!((r.rhs - oracle).abs() <= 1e-12 * oracle);
        let r = check_lp_preservation(&f, f64::INFINITY).unwrap();
        assert_eq!(r.lhs, r.rhs);
        assert!(check_lp_preservation(&f, 0.5).is_err());
    }

    #[test]
    fn hardy_littlewood_cases() {
        let g = grid();
        let f = random_smooth_field(&g, 2, 3).unwrap();
        let c = ScalarField::constant(g.clone(), 2.0);
        let r = check_hardy_littlewood(&f, &c).unwrap();
        assert!((r.lhs - r.rhs).abs() <= 1e-12 * r.lhs);
        assert!((r.lhs - 2.0 * f.lp_norm(1.0)).abs() <= 1e-12 * r.lhs);

        let r = check_hardy_littlewood(&f, &f).unwrap();
        assert!((r.lhs - r.rhs).abs() <= 1e-12 * r.lhs);

        let a = RegionMask::from_fn(g.clone(), |x| x[0] > 0.2);
        let b = RegionMask::from_fn(g.clone(), |x| x[1] < -0.1 && x[0] > -0.5);
        let r = check_hardy_littlewood(&a.indicator(), &b.indicator()).unwrap();
        assert_eq!(r.lhs, a.intersection(&b).unwrap().volume());
        assert_eq!(r.rhs, a.volume().min(b.volume()));
        assert!(r.pass);

        let other = ScalarField::zeros(Grid::cube(2, 8, 1.0).unwrap());
        assert!(matches!(check_hardy_littlewood(&f, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn hardy_littlewood_equality_for_monotone_transform() {
        let f = random_smooth_field(&grid(), 11, 4).unwrap();
        let g = f.map(|v| v * v).unwrap();
        let r = check_hardy_littlewood(&f, &g).unwrap();
        assert!(r.slack.abs() <= 1e-12 * scale(r.lhs, r.rhs));
    }

    #[test]
    fn complement_lemma_cases() {
        let g = grid();
        let f = random_smooth_field(&g, 3, 3).unwrap();
        let h = random_smooth_field(&g, 4, 2).unwrap();
        let all = check_complement_lemma(&f, &h, h.max()).unwrap();
        assert!((all.lhs - f.lp_norm(1.0)).abs() < 1e-12 && (all.rhs - f.lp_norm(1.0)).abs() < 1e-12);
        let pos = h.map(|v| v + 1.0).unwrap();
        let none = check_complement_lemma(&f, &pos, 0.5).unwrap();
        assert_eq!((none.lhs, none.rhs), (0.0, 0.0));
        let mut vals = h.values().to_vec();
        vals.sort_by(f64::total_cmp);
        let median = vals[vals.len() / 2];
        assert!(check_complement_lemma(&f, &h, median).unwrap().pass);
    }

    #[test]
    fn contraction_cases() {
        let g = grid();
        let f = random_smooth_field(&g, 5, 3).unwrap();
        let zero = ScalarField::zeros(g.clone());
        let r = check_lp_contraction(&f, &zero, 2.0).unwrap();
        assert!((r.lhs - r.rhs).abs() <= 1e-12 * r.lhs);
        let twice = f.scale(2.0);
        let r = check_lp_contraction(&f, &twice, 1.0).unwrap();
        assert!((r.lhs - r.rhs).abs() <= 1e-12 * r.lhs);
        let h = random_smooth_field(&g, 6, 3).unwrap();
        assert!(check_lp_contraction(&f, &h, 1.0).unwrap().pass);
    }

    #[test]
    fn nonexpansivity_cases() {
        let g = grid();
        let f = random_smooth_field(&g, 7, 3).unwrap();
        let h = random_smooth_field(&g, 8, 3).unwrap();
        let sq = check_nonexpansivity(&f, &h, ConvexPenalty::abs_power(2.0).unwrap()).unwrap();
        let l2 = check_lp_contraction(&f, &h, 2.0).unwrap();
        assert!((sq.lhs - l2.lhs * l2.lhs).abs() <= 1e-12 * sq.lhs);
        assert!((sq.rhs - l2.rhs * l2.rhs).abs() <= 1e-12 * sq.rhs);
        let same = check_nonexpansivity(&f, &f, ConvexPenalty::SmoothHinge).unwrap();
        assert_eq!((same.lhs, same.rhs), (0.0, 0.0));
        assert!(check_nonexpansivity(&f, &h, ConvexPenalty::PositivePartSquared).unwrap().pass);
        assert!(check_nonexpansivity(&h, &f, ConvexPenalty::SmoothHinge).unwrap().pass);
    }

    #[test]
    fn penalty_catalogue_parsing() {
        assert_eq!("abs^2".parse::<ConvexPenalty>().unwrap(), ConvexPenalty::AbsPower(2.0));
        assert_eq!("pos^2".parse::<ConvexPenalty>().unwrap(), ConvexPenalty::PositivePartSquared);
        assert!("abs^0.5".parse::<ConvexPenalty>().is_err());
        assert!("exp".parse::<ConvexPenalty>().is_err());
    }

    fn gaussian(g: &Grid, s: f64, amp: f64) -> ScalarField {
        ScalarField::from_fn(g.clone(), |x| amp * (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * s * s)).exp()).unwrap()
    }

    #[test]
    fn riesz_with_delta_reduces_to_hardy_littlewood() {
        let g = grid();
        let f = random_smooth_field(&g, 9, 3).unwrap();
        let h = random_smooth_field(&g, 10, 3).unwrap();
        let mut d = vec![0.0; g.len()];
        d[g.ravel(&g.kernel_center())] = 1.0 / g.cell_volume();
        let delta = ScalarField::new(g.clone(), d).unwrap();
        let r = check_riesz(&f, &h, &delta).unwrap();
        let hl = check_hardy_littlewood(&f, &h).unwrap();
        assert!((r.lhs - hl.lhs).abs() <= 1e-12 * scale(r.lhs, hl.lhs));
        assert!((r.rhs - hl.rhs).abs() <= 1e-12 * scale(r.rhs, hl.rhs));
    }

    #[test]
    fn riesz_fixed_points_and_random_triples() {
        let g = grid();
        let (a, b, k) = (gaussian(&g, 0.3, 1.0), gaussian(&g, 0.2, 2.0), gaussian(&g, 0.1, 1.0));
        let r = check_riesz(&a, &b, &k).unwrap();
        assert!(r.slack.abs() <= 1e-12 * scale(r.lhs, r.rhs));
        for seed in 0..5 {
            let f = random_smooth_field(&g, 100 + seed, 3).unwrap();
            let h = random_smooth_field(&g, 200 + seed, 3).unwrap();
            assert!(check_riesz(&f, &h, &k).unwrap().pass);
        }
    }

    #[test]
    fn sobolev_quotient_cases() {
        let g = Grid::cube(2, 64, 1.0).unwrap();
        let radial = gaussian(&g, 0.15, 1.0);
        let r = check_sobolev_quotient(&radial, 1.0).unwrap();
        assert!(r.slack.abs() < 1e-9 * r.rhs);
        let f = random_smooth_field(&g, 12, 3).unwrap();
        assert!(check_sobolev_quotient(&f, 1.0).unwrap().pass);
        let q1 = sobolev_quotient(&f, 1.0).unwrap();
        let q2 = sobolev_quotient(&f.scale(2.0), 1.0).unwrap();
        assert!((q1 - q2).abs() <= 1e-12 * q1);
        assert!(check_sobolev_quotient(&f, 2.0).is_err());
    }
}
