//! Dirichlet Poisson problems, heat smoothing and the elliptic comparison
//! checks (Talenti, gradient norms, potentials, Faber-Krahn).
//!
//! The operator is the standard `2n+1`-point negative Laplacian restricted to
//! the cells of a domain mask; cells outside the domain (or outside the grid)
//! carry the value zero.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{shift3, Grid, RegionMask, ScalarField};
use crate::perimeter::gaussian_blur;
use crate::rearrange::{rearrange_field, rearrange_mask, RadialOrder};
use crate::report::{scale, CheckResult};

pub const CG_REL_TOL: f64 = 1e-10;
pub const TALENTI_BAND: f64 = 0.02;
pub const GRADIENT_REL_TOL: f64 = 0.01;
pub const ENERGY_IDENTITY_REL_TOL: f64 = 0.01;
pub const FABER_KRAHN_REL_TOL: f64 = 0.01;
pub const POTENTIAL_REL_TOL: f64 = 1e-3;
pub const EIGEN_REL_TOL: f64 = 1e-10;

const MISSING: u32 = u32::MAX;

/// The masked negative Laplacian in compressed form: unknowns are the domain
/// cells in row-major order.
struct MaskedLaplacian {
    cells: Vec<usize>,
    neighbours: Vec<[u32; 6]>,
    inv_h2: [f64; 3],
    diag: f64,
}

impl MaskedLaplacian {
    fn new(omega: &RegionMask) -> Self {
        let grid = omega.grid();
        let cells: Vec<usize> = omega.member_indices().collect();
        let mut local = vec![MISSING; grid.len()];
        for (k, &c) in cells.iter().enumerate() {
            local[c] = k as u32;
        }
        let h = grid.spacing3();
        let dim = grid.dim();
        let mut inv_h2 = [0.0; 3];
        for a in 3 - dim..3 {
            inv_h2[a] = 1.0 / (h[a] * h[a]);
        }
        let diag = 2.0 * inv_h2.iter().sum::<f64>();
        let neighbours = cells
            .iter()
            .map(|&c| {
                let mut nb = [MISSING; 6];
                for a in 3 - dim..3 {
                    for (s, slot) in [(-1isize, 2 * a), (1, 2 * a + 1)] {
                        let mut o = [0; 3];
                        o[a] = s;
                        if let Some(j) = shift3(grid, c, o) {
                            nb[slot] = local[j];
                        }
                    }
                }
                nb
            })
            .collect();
        Self { cells, neighbours, inv_h2, diag }
    }

    fn len(&self) -> usize {
        self.cells.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (k, (out, nb)) in y.iter_mut().zip(&self.neighbours).enumerate() {
            let mut acc = self.diag * x[k];
            for a in 0..3 {
                for j in [nb[2 * a], nb[2 * a + 1]] {
                    if j != MISSING {
                        acc -= self.inv_h2[a] * x[j as usize];
                    }
                }
            }
            *out = acc;
        }
    }

    fn gather(&self, f: &ScalarField) -> Vec<f64> {
        self.cells.iter().map(|&c| f.values()[c]).collect()
    }

    fn scatter(&self, grid: &Grid, x: &[f64]) -> ScalarField {
        let mut v = vec![0.0; grid.len()];
        for (&c, &xi) in self.cells.iter().zip(x) {
            v[c] = xi;
        }
        ScalarField::from_parts_unchecked(grid.clone(), v)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients from the starting guess `x`; returns (iterations, relative residual).
fn conjugate_gradient(op: &MaskedLaplacian, b: &[f64], x: &mut [f64], max_iter: usize) -> Result<(usize, f64)> {
    let n = op.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok((0, 0.0));
    }
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let target = CG_REL_TOL * bnorm;
    let mut it = 0;
    while rr.sqrt() > target {
        if it >= max_iter {
            return Err(Error::NoConvergence { iterations: it, residual: rr.sqrt() / bnorm });
        }
        op.apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        it += 1;
    }
    Ok((it, rr.sqrt() / bnorm))
}

fn max_iterations(grid: &Grid) -> usize {
    50 * grid.shape().iter().copied().max().unwrap_or(1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoissonSolution {
    pub u: ScalarField,
    /// Relative residual `‖f - A u‖ / ‖f‖`.
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Solves `-Δu = f` in `Ω` with `u = 0` outside `Ω`.
pub fn solve_poisson(f: &ScalarField, omega: &RegionMask) -> Result<PoissonSolution> {
    if !f.grid().same_cells(omega.grid()) {
        return Err(Error::GridMismatch);
    }
    if omega.is_empty() {
        return Err(Error::EmptyDomain);
    }
    if let Some(i) = (0..f.grid().len()).find(|&i| !omega.contains(i) && f.values()[i] != 0.0) {
        return Err(Error::InvalidArgument(format!("source is non-zero outside the domain at cell {i}")));
    }
    let op = MaskedLaplacian::new(omega);
    let b = op.gather(f);
    let mut x = vec![0.0; op.len()];
    let (iterations, residual_norm) = conjugate_gradient(&op, &b, &mut x, max_iterations(f.grid()))?;
    Ok(PoissonSolution { u: op.scatter(f.grid(), &x), residual_norm, iterations })
}

/// Discrete Dirichlet energy `Σ_faces ((u_i - u_j) / h)^2 · cell volume`, with
/// faces to the outside of the grid included (the field is zero there). For a
/// solution of the discrete problem it equals `∫ u f` exactly.
pub fn dirichlet_energy(u: &ScalarField) -> f64 {
    let grid = u.grid();
    let dim = grid.dim();
    let h = grid.spacing3();
    let v = u.values();
    let mut total = 0.0;
    for i in 0..grid.len() {
        for a in 3 - dim..3 {
            let mut o = [0; 3];
            o[a] = 1;
            let next = shift3(grid, i, o).map_or(0.0, |j| v[j]);
            total += ((next - v[i]) / h[a]).powi(2);
            o[a] = -1;
            if shift3(grid, i, o).is_none() {
                total += (v[i] / h[a]).powi(2);
            }
        }
    }
    total * grid.cell_volume()
}

fn nonnegative_part(u: &ScalarField) -> ScalarField {
    ScalarField::from_parts_unchecked(u.grid().clone(), u.values().iter().map(|&x| x.max(0.0)).collect())
}

fn check_source(f: &ScalarField) -> Result<()> {
    f.check_nonnegative()?;
    if f.grid().dim() < 2 {
        return Err(Error::InvalidArgument("comparison checks need n >= 2".into()));
    }
    Ok(())
}

/// The centered disk (ball) inscribed in the grid, one cell clear of the
/// edge. It is its own rearrangement.
pub fn talenti_domain(grid: &Grid) -> RegionMask {
    let half = grid.shape().iter().zip(grid.spacing()).map(|(&n, &h)| 0.5 * n as f64 * h).fold(f64::INFINITY, f64::min);
    let r = half - grid.max_spacing();
    rearrange_mask(&RegionMask::from_fn(grid.clone(), |x| x.iter().map(|v| v * v).sum::<f64>() < r * r))
}

/// The pair `u = solve(f)`, `v = solve(f*)` on [`talenti_domain`]; `f` must
/// vanish outside it.
pub fn talenti_pair(f: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    check_source(f)?;
    let omega = talenti_domain(f.grid());
    let u = solve_poisson(f, &omega)?.u;
    let v = solve_poisson(&rearrange_field(f)?, &omega)?.u;
    Ok((u, v))
}

/// `u* <= v` cellwise up to `2%` of `max v`. `lhs` is `max(u* - v)`.
pub fn check_talenti(f: &ScalarField) -> Result<CheckResult> {
    let (u, v) = talenti_pair(f)?;
    // roundoff-level negatives of a non-negative solution are dropped
    let ustar = rearrange_field(&nonnegative_part(&u))?;
    let worst = ustar.values().iter().zip(v.values()).map(|(a, b)| a - b).fold(f64::MIN, f64::max);
    Ok(CheckResult::le("talenti", worst, 0.0, TALENTI_BAND * v.max()))
}

/// `‖∇u‖_2 <= ‖∇v‖_2`, plus the identity `‖∇u‖_2^2 = ∫ u f`.
pub fn check_gradient_domination(f: &ScalarField) -> Result<[CheckResult; 2]> {
    let (u, v) = talenti_pair(f)?;
    let gu = dirichlet_energy(&u).sqrt();
    let gv = dirichlet_energy(&v).sqrt();
    let energy = gu * gu;
    let work = u.inner(f)?;
    Ok([
        CheckResult::le("gradient_domination", gu, gv, GRADIENT_REL_TOL * gv),
        CheckResult::eq("energy_identity", energy, work, ENERGY_IDENTITY_REL_TOL * energy.abs()),
    ])
}

/// Convolution with the unit-mass truncated kernel `e^{-|x|^2 / 4t}`.
pub fn heat_smooth(f: &ScalarField, t: f64) -> Result<ScalarField> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time must be positive, got {t}")));
    }
    let sigma = (2.0 * t).sqrt();
    let grid = f.grid();
    if grid.shape().iter().zip(grid.spacing()).any(|(&n, &h)| 5.0 * sigma > n as f64 * h) {
        return Err(Error::InvalidArgument("heat kernel is wider than the grid".into()));
    }
    Ok(gaussian_blur(f, sigma))
}

/// `∫ heat(f) f <= ∫ heat(f*) f*`.
pub fn check_heat_functional(f: &ScalarField, t: f64) -> Result<CheckResult> {
    let fstar = rearrange_field(f)?;
    let i = heat_smooth(f, t)?.inner(f)?;
    let j = heat_smooth(&fstar, t)?.inner(&fstar)?;
    Ok(CheckResult::le(format!("heat_functional[t={t}]"), i, j, 1e-10 * scale(i, j)))
}

/// Newtonian potential `Σ_y f(y) / |x - y| · cell volume` in three dimensions
/// (constant factor omitted). The singular self term uses the ball of equal volume.
pub fn newtonian_potential(f: &ScalarField) -> Result<ScalarField> {
    let grid = f.grid();
    if grid.dim() != 3 {
        return Err(Error::InvalidArgument("potential checks are three-dimensional only".into()));
    }
    let s = grid.shape3();
    let h = grid.spacing3();
    let cv = grid.cell_volume();
    let r_eq = (3.0 * cv / (4.0 * PI)).cbrt();
    let self_weight = 2.0 * PI * r_eq * r_eq;
    let mut table = vec![0.0; s[0] * s[1] * s[2]];
    for (k, w) in table.iter_mut().enumerate() {
        let d = [k / (s[1] * s[2]), (k / s[2]) % s[1], k % s[2]];
        let r: f64 = (0..3).map(|a| (d[a] as f64 * h[a]).powi(2)).sum::<f64>().sqrt();
        *w = if k == 0 { self_weight } else { cv / r };
    }
    let sources: Vec<([usize; 3], f64)> =
        f.values().iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, &v)| (grid.unravel3(i), v)).collect();
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.unravel3(i);
            sources
                .iter()
                .map(|(y, v)| {
                    let d = [0, 1, 2].map(|a| x[a].abs_diff(y[a]));
                    v * table[(d[0] * s[1] + d[1]) * s[2] + d[2]]
                })
                .sum()
        })
        .collect();
    ScalarField::new(grid.clone(), values)
}

/// `∫_B u* <= ∫_B v` for ten centered balls, `u` and `v` the potentials of
/// `f` and `f*`. Reports the ball with the smallest relative slack.
pub fn check_potential_domination(f: &ScalarField) -> Result<CheckResult> {
    f.check_nonnegative()?;
    let grid = f.grid();
    let u = newtonian_potential(f)?;
    let v = newtonian_potential(&rearrange_field(f)?)?;
    let mut top = u.values().to_vec();
    top.sort_by(|a, b| b.total_cmp(a));
    let order = RadialOrder::of(grid);
    let h = grid.spacing3();
    let half = grid.shape3().iter().zip(h).map(|(&n, hh)| 0.5 * n as f64 * hh).fold(f64::INFINITY, f64::min);
    let cv = grid.cell_volume();
    let mut worst: Option<CheckResult> = None;
    for j in 1..=10 {
        let r = half * j as f64 / 10.0;
        let k = order.order().iter().take_while(|&&c| order.radius_squared(c) <= r * r).count();
        let lhs: f64 = top[..k].iter().sum::<f64>() * cv;
        let rhs: f64 = order.order()[..k].iter().map(|&c| v.values()[c]).sum::<f64>() * cv;
        let res = CheckResult::le(format!("potential_domination[r={r:.4}]"), lhs, rhs, POTENTIAL_REL_TOL * rhs.abs());
        if worst
            .as_ref()
            .is_none_or(|w| res.slack / res.tol.max(f64::MIN_POSITIVE) < w.slack / w.tol.max(f64::MIN_POSITIVE))
        {
            worst = Some(res);
        }
    }
    Ok(worst.expect("ten radii").with_name("potential_domination"))
}

/// Number of face-connected components of a mask.
pub fn component_count(mask: &RegionMask) -> usize {
    let grid = mask.grid();
    let dim = grid.dim();
    let mut seen = vec![false; grid.len()];
    let mut components = 0;
    let mut stack = Vec::new();
    for start in mask.member_indices() {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            for a in 3 - dim..3 {
                for s in [-1isize, 1] {
                    let mut o = [0; 3];
                    o[a] = s;
                    if let Some(j) = shift3(grid, i, o) {
                        if mask.contains(j) && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
    }
    components
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult {
    pub lambda1: f64,
    /// Unit `L^2` norm, non-negative.
    pub eigenfield: ScalarField,
    /// `‖A φ - λ φ‖ / (λ ‖φ‖)`.
    pub residual: f64,
}

/// Principal Dirichlet eigenvalue of `-Δ` on a connected domain by inverse
/// power iteration with warm-started inner solves.
pub fn smallest_dirichlet_eigenvalue(omega: &RegionMask) -> Result<EigenResult> {
    if omega.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let components = component_count(omega);
    if components > 1 {
        return Err(Error::Disconnected { components });
    }
    let grid = omega.grid();
    let op = MaskedLaplacian::new(omega);
    let n = op.len();
    let mut x = vec![1.0; n];
    let mut ax = vec![0.0; n];
    let mut lambda = f64::NAN;
    let max_outer = 1000;
    let inner = max_iterations(grid);
    let mut converged = false;
    for _ in 0..max_outer {
        let norm = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        op.apply(&x, &mut ax);
        let next = dot(&x, &ax);
        if (next - lambda).abs() <= EIGEN_REL_TOL * next {
            lambda = next;
            converged = true;
            break;
        }
        lambda = next;
        let mut y: Vec<f64> = x.iter().map(|v| v / lambda).collect();
        conjugate_gradient(&op, &x, &mut y, inner)?;
        x = y;
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: max_outer, residual: f64::NAN });
    }
    op.apply(&x, &mut ax);
    let residual = ax.iter().zip(&x).map(|(a, v)| (a - lambda * v).powi(2)).sum::<f64>().sqrt() / lambda;
    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    let l2 = (dot(&x, &x) * grid.cell_volume()).sqrt();
    let values: Vec<f64> = x.iter().map(|v| (v / l2).max(0.0)).collect();
    Ok(EigenResult { lambda1: lambda, eigenfield: op.scatter(grid, &values), residual })
}

/// `λ1(Ω) >= λ1(Ω*)`.
pub fn check_faber_krahn(omega: &RegionMask) -> Result<CheckResult> {
    let a = smallest_dirichlet_eigenvalue(omega)?.lambda1;
    let b = smallest_dirichlet_eigenvalue(&rearrange_mask(omega))?.lambda1;
    Ok(CheckResult::ge("faber_krahn", a, b, FABER_KRAHN_REL_TOL * b))
}

/// Principal Dirichlet eigenvalue of the `n`-ball of the given radius by
/// shooting on the radial equation `u'' + (n-1)/r u' + λ u = 0`.
pub fn ball_eigenvalue_shooting(n: usize, radius: f64) -> Result<f64> {
    if n < 1 || !(radius > 0.0) {
        return Err(Error::InvalidArgument("need n >= 1 and a positive radius".into()));
    }
    let steps = 20_000;
    let crosses = |lambda: f64| -> bool {
        let nf = n as f64;
        let r0 = radius * 1e-6;
        let mut r = r0;
        let mut u = 1.0 - lambda * r0 * r0 / (2.0 * nf);
        let mut du = -lambda * r0 / nf;
        let dr = (radius - r0) / steps as f64;
        let rhs = |r: f64, u: f64, du: f64| (du, -(nf - 1.0) / r * du - lambda * u);
        for _ in 0..steps {
            let k1 = rhs(r, u, du);
            let k2 = rhs(r + 0.5 * dr, u + 0.5 * dr * k1.0, du + 0.5 * dr * k1.1);
            let k3 = rhs(r + 0.5 * dr, u + 0.5 * dr * k2.0, du + 0.5 * dr * k2.1);
            let k4 = rhs(r + dr, u + dr * k3.0, du + dr * k3.1);
            u += dr / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            du += dr / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            r += dr;
            if u <= 0.0 {
                return true;
            }
        }
        false
    };
    let mut lo = 0.0;
    let mut hi = 1.0 / (radius * radius);
    while !crosses(hi) {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if crosses(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
