//! Symmetric decreasing rearrangement of masks and fields on Euclidean grids.
//!
//! All cells of a grid have the same measure, so the rearrangement of a mask
//! is "the first `k` cells in radial order" and the rearrangement of a field
//! is a permutation of its values: the `k`-th largest value goes to the `k`-th
//! cell in radial order. Every identity that holds for the continuum
//! rearrangement (equimeasurability, commuting with super-level sets, ...)
//! therefore holds exactly, bit for bit.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::grid::{Grid, RegionMask, ScalarField};
use crate::report::CheckResult;

/// Cells sorted by distance of their center from the origin, ties broken by
/// lexicographically ascending coordinates.
#[derive(Debug)]
pub struct RadialOrder {
    grid: Grid,
    order: Vec<usize>,
    rank: Vec<usize>,
}

type OrderKey = (Vec<usize>, Vec<u64>);

fn cache() -> &'static Mutex<HashMap<OrderKey, Arc<RadialOrder>>> {
    static CACHE: OnceLock<Mutex<HashMap<OrderKey, Arc<RadialOrder>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

impl RadialOrder {
    /// Builds the order without touching the shared cache.
    pub fn build(grid: &Grid) -> Self {
        let n = grid.len();
        let mut order: Vec<usize> = (0..n).collect();
        if grid.is_isotropic() {
            let key: Vec<i64> = (0..n).map(|i| grid.doubled_offset3(i).iter().map(|d| d * d).sum()).collect();
            // flat index order is lexicographic coordinate order, so a stable
            // sort on the distance key applies the tie-break for free
            order.sort_by_key(|&i| key[i]);
        } else {
            let h = grid.spacing3();
            let key: Vec<f64> = (0..n)
                .map(|i| {
                    let d = grid.doubled_offset3(i);
                    (0..3).map(|a| (d[a] as f64 * h[a]).powi(2)).sum()
                })
                .collect();
            order.sort_by(|&a, &b| key[a].total_cmp(&key[b]));
        }
        let mut rank = vec![0; n];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        Self { grid: grid.clone(), order, rank }
    }

    /// Shared, cached order for a grid (keyed by shape and spacing).
    pub fn of(grid: &Grid) -> Arc<RadialOrder> {
        let key = (grid.shape().to_vec(), grid.spacing().iter().map(|h| h.to_bits()).collect());
        let mut map = cache().lock().unwrap_or_else(|e| e.into_inner());
        map.entry(key).or_insert_with(|| Arc::new(Self::build(grid))).clone()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Cell indices in radial order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Position of a cell in the radial order.
    pub fn rank(&self, cell: usize) -> usize {
        self.rank[cell]
    }

    /// Squared distance of a cell center from the origin.
    pub fn radius_squared(&self, cell: usize) -> f64 {
        let d = self.grid.doubled_offset3(cell);
        let h = self.grid.spacing3();
        (0..3).map(|a| (0.5 * d[a] as f64 * h[a]).powi(2)).sum()
    }
}

/// Sampled distribution function `t ↦ Vol({f > t})`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionTable {
    pub thresholds: Vec<f64>,
    pub measures: Vec<f64>,
}

impl DistributionTable {
    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }
}

/// `μ_f(t) = Vol({f > t})` at each threshold.
pub fn distribution_function(f: &ScalarField, thresholds: &[f64]) -> Result<DistributionTable> {
    if thresholds.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("thresholds must be strictly increasing".into()));
    }
    let mut sorted = f.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let cv = f.grid().cell_volume();
    let measures = thresholds
        .iter()
        .map(|&t| {
            let above = sorted.len() - sorted.partition_point(|&v| v <= t);
            above as f64 * cv
        })
        .collect();
    Ok(DistributionTable { thresholds: thresholds.to_vec(), measures })
}

/// Sorted distinct values of a field.
pub fn distinct_values(f: &ScalarField) -> Vec<f64> {
    let mut v = f.values().to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// The centered ball of equal volume: the first `|A|` cells in radial order.
pub fn rearrange_mask(mask: &RegionMask) -> RegionMask {
    let order = RadialOrder::of(mask.grid());
    let mut out = RegionMask::empty(mask.grid().clone());
    for &i in &order.order()[..mask.count()] {
        out.set(i, true);
    }
    out
}

/// Symmetric decreasing rearrangement of a non-negative field.
pub fn rearrange_field(f: &ScalarField) -> Result<ScalarField> {
    f.check_nonnegative()?;
    let order = RadialOrder::of(f.grid());
    let mut sorted = f.values().to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut out = vec![0.0; sorted.len()];
    for (&cell, v) in order.order().iter().zip(sorted) {
        out[cell] = v;
    }
    ScalarField::new(f.grid().clone(), out)
}

/// `μ_f(t) = μ_{f*}(t)` at every stored value `t`; `lhs` is the largest
/// difference, which must vanish.
pub fn check_equimeasurability(f: &ScalarField) -> Result<CheckResult> {
    let t = distinct_values(f);
    let a = distribution_function(f, &t)?;
    let b = distribution_function(&rearrange_field(f)?, &t)?;
    let worst = a.measures.iter().zip(&b.measures).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(CheckResult::le("equimeasurability", worst, 0.0, 0.0))
}

/// Compares `rearrange_field(X_A)` with `X_{A*}` cell by cell.
pub fn rearranged_char_equals_char_of_rearranged(mask: &RegionMask) -> CheckResult {
    let lhs = rearrange_field(&mask.indicator()).expect("indicator is non-negative");
    let rhs = rearrange_mask(mask).indicator();
    let mismatched = lhs.values().iter().zip(rhs.values()).filter(|(a, b)| a != b).count();
    CheckResult::exact_match("char_of_rearranged", mismatched, mask.grid().cell_volume())
}

/// Compares `{f* > t}` with `{f > t}*` cell by cell.
pub fn level_set_commutes(f: &ScalarField, t: f64) -> Result<CheckResult> {
    if t < 0.0 {
        return Err(Error::InvalidArgument("level must be non-negative".into()));
    }
    let fstar = rearrange_field(f)?;
    let lhs = fstar.super_level(t);
    let rhs = rearrange_mask(&f.super_level(t));
    let mismatched = lhs.members().iter().zip(rhs.members()).filter(|(a, b)| a != b).count();
    Ok(CheckResult::exact_match("level_set_commutes", mismatched, f.grid().cell_volume()))
}

/// Evaluates `f(x) = ∫_0^∞ X_{f>t}(x) dt` at one cell. The integrand is
/// piecewise constant between consecutive distinct values, so the integral is
/// a finite sum of level increments.
pub fn layer_cake_eval(f: &ScalarField, cell: usize) -> f64 {
    let x = f.values()[cell];
    let mut levels = distinct_values(f);
    levels.retain(|&v| v > 0.0);
    // Neumaier-compensated telescoping sum of (v_k - v_{k-1}) over levels below f(x)
    let (mut sum, mut comp, mut prev) = (0.0f64, 0.0f64, 0.0f64);
    for &v in levels.iter().take_while(|&&v| v <= x) {
        // indicator of {f > prev} at x is 1 here
        let d = v - prev;
        let err = (v - d) - prev;
        for term in [d, err] {
            let t = sum + term;
            comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
            sum = t;
        }
        prev = v;
    }
    sum + comp
}

/// `p ∫_0^∞ μ_f(t) t^{p-1} dt`, integrated exactly over the piecewise-constant
/// distribution function. Equals `‖f‖_p^p` for non-negative `f`.
pub fn lp_power_from_distribution(f: &ScalarField, p: f64) -> Result<f64> {
    f.check_nonnegative()?;
    let levels = distinct_values(f);
    let table = distribution_function(f, &levels)?;
    let mut total = 0.0;
    let mut prev = 0.0f64;
    for (k, &v) in levels.iter().enumerate() {
        if v <= 0.0 {
            continue;
        }
        // on (prev, v) the measure is Vol{f >= v} = Vol{f > levels[k-1]}
        let mu = if k == 0 { f.grid().len() as f64 * f.grid().cell_volume() } else { table.measures[k - 1] };
        total += mu * (v.powf(p) - prev.powf(p));
        prev = v;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::random_smooth_field;

    fn line(values: &[f64]) -> ScalarField {
        let g = Grid::uniform(1, values.len(), 1.0).unwrap();
        ScalarField::new(g, values.to_vec()).unwrap()
    }

    #[test]
    fn one_dimensional_example() {
        // centers -1.5,-0.5,0.5,1.5 -> radial ranks: -0.5, 0.5, -1.5, 1.5
        let f = line(&[0.0, 3.0, 1.0, 2.0]);
        assert_eq!(rearrange_field(&f).unwrap().values(), &[1.0, 3.0, 2.0, 0.0]);
    }

    #[test]
    fn radial_order_breaks_ties_lexicographically() {
        let g = Grid::uniform(2, 2, 1.0).unwrap();
        let o = RadialOrder::build(&g);
        assert_eq!(o.order(), &[0, 1, 2, 3]);
        let g = Grid::uniform(2, 4, 1.0).unwrap();
        let o = RadialOrder::build(&g);
        // inner four cells first: (1,1),(1,2),(2,1),(2,2)
        assert_eq!(&o.order()[..4], &[5, 6, 9, 10]);
        let d: Vec<f64> = o.order().iter().map(|&i| o.radius_squared(i)).collect();
        assert!(d.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn anisotropic_order_is_monotone() {
        let g = Grid::new(vec![7, 5], vec![0.3, 0.7], vec![0.0, 0.0]).unwrap();
        let o = RadialOrder::build(&g);
        let d: Vec<f64> = o.order().iter().map(|&i| o.radius_squared(i)).collect();
        assert!(d.windows(2).all(|w| w[0] <= w[1]));
        let mut sorted = o.order().to_vec();
        sorted.sort();
        assert_eq!(sorted, (0..35).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_negative_values() {
        let f = line(&[0.0, -1.0, 2.0]);
        assert!(matches!(rearrange_field(&f), Err(Error::NegativeValue { index: 1, .. })));
    }

    #[test]
    fn fixed_points() {
        let g = Grid::uniform(2, 9, 1.0).unwrap();
        let c = ScalarField::constant(g.clone(), 2.5);
        assert_eq!(rearrange_field(&c).unwrap(), c);

        let ball = rearrange_mask(&RegionMask::from_fn(g.clone(), |x| x[0] > 1.0));
        assert_eq!(rearrange_mask(&ball), ball);
        assert_eq!(rearrange_field(&ball.indicator()).unwrap(), ball.indicator());

        let empty = RegionMask::empty(g);
        assert_eq!(rearrange_mask(&empty), empty);
    }

    #[test]
    fn ten_cell_mask_goes_to_innermost_cells() {
        let g = Grid::uniform(2, 16, 1.0).unwrap();
        let mut a = RegionMask::empty(g.clone());
        for i in [0, 17, 33, 100, 120, 200, 201, 202, 250, 255] {
            a.set(i, true);
        }
        let star = rearrange_mask(&a);
        assert_eq!(star.volume(), a.volume());
        // oracle: sort all cells by (r^2, coordinates) directly
        let mut cells: Vec<(f64, Vec<usize>, usize)> = (0..g.len())
            .map(|i| {
                let x = g.cell_center(i);
                (x[0] * x[0] + x[1] * x[1], g.unravel(i), i)
            })
            .collect();
        cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let expect: Vec<usize> = cells[..10].iter().map(|c| c.2).collect();
        let mut got: Vec<usize> = star.member_indices().collect();
        got.sort();
        let mut expect_sorted = expect.clone();
        expect_sorted.sort();
        assert_eq!(got, expect_sorted);
    }

    #[test]
    fn distribution_matches_brute_force_count() {
        let g = Grid::uniform(2, 4, 0.5).unwrap();
        let vals = vec![3.0, 0.0, 7.0, 1.0, 2.0, 2.0, 5.0, 4.0, 0.0, 6.0, 1.0, 3.0, 8.0, 2.0, 0.0, 1.0];
        let f = ScalarField::new(g, vals.clone()).unwrap();
        let ts: Vec<f64> = (-1..10).map(|t| t as f64 + 0.5).chain([9.5, 10.0]).collect::<Vec<_>>();
        let ts: Vec<f64> = {
            let mut t = ts;
            t.dedup();
            t
        };
        let table = distribution_function(&f, &ts).unwrap();
        for (t, m) in table.thresholds.iter().zip(&table.measures) {
            let count = vals.iter().filter(|&&v| v > *t).count();
            assert_eq!(*m, count as f64 * 0.25);
        }
        let star = rearrange_field(&f).unwrap();
        assert_eq!(distribution_function(&star, &ts).unwrap(), table);
        assert!(distribution_function(&f, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn constant_distribution() {
        let g = Grid::uniform(2, 3, 1.0).unwrap();
        let f = ScalarField::constant(g, 2.0);
        let t = distribution_function(&f, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(t.measures, vec![9.0, 0.0, 0.0]);
    }

    #[test]
    fn char_and_level_set_checks() {
        let g = Grid::uniform(2, 12, 1.0).unwrap();
        assert!(rearranged_char_equals_char_of_rearranged(&RegionMask::empty(g.clone())).pass);
        let a = RegionMask::from_fn(g.clone(), |x| (x[0] - 2.0).abs() + x[1].abs() < 3.0);
        assert!(rearranged_char_equals_char_of_rearranged(&a).pass);

        let f = random_smooth_field(&g, 9, 3).unwrap();
        let above = level_set_commutes(&f, f.max() + 1.0).unwrap();
        assert!(above.pass);
        assert!(level_set_commutes(&f, -1.0).is_err());
        let pos = f.map(|v| v + 1.0).unwrap();
        let r = level_set_commutes(&pos, 0.0).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn layer_cake_reproduces_values() {
        let g = Grid::uniform(2, 4, 1.0).unwrap();
        let f = ScalarField::new(g, (0..16).map(|i| ((i * 7) % 5) as f64).collect()).unwrap();
        for i in 0..16 {
            assert_eq!(layer_cake_eval(&f, i), f.values()[i]);
        }
        let g = Grid::uniform(2, 10, 0.1).unwrap();
        let f = random_smooth_field(&g, 5, 3).unwrap();
        for i in 0..g.len() {
            assert_eq!(layer_cake_eval(&f, i), f.values()[i], "cell {i}");
        }
    }

    #[test]
    fn cavalieri_power_formula_on_integer_field() {
        let g = Grid::uniform(2, 4, 0.5).unwrap();
        let vals: Vec<f64> = vec![3., 0., 7., 1., 2., 2., 5., 4., 0., 6., 1., 3., 8., 2., 0., 1.];
        let f = ScalarField::new(g, vals.clone()).unwrap();
        for p in [1.0, 2.0, 3.0, 1.5] {
            let oracle: f64 = vals.iter().map(|v: &f64| v.powf(p)).sum::<f64>() * 0.25;
            let got = lp_power_from_distribution(&f, p).unwrap();
            assert!((got - oracle).abs() <= 1e-12 * oracle, "p={p}: {got} vs {oracle}");
        }
    }
}
