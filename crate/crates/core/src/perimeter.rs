//! Perimeter estimators for masks, the co-area identity, Minkowski sums and
//! the isoperimetric family of inequalities.
//!
//! The Minkowski-content estimator is the reference perimeter used by the
//! inequality checks. Face counting is kept only as an anisotropic baseline:
//! it converges to the `l1` length of the boundary, not to its Euclidean length.
//!
//! Lattice balls are not round. A discrete dilation by the cells within
//! distance `δ` behaves like a dilation by their convex hull, whose mean
//! half-width is a little below `δ`; likewise the half-ball first moment used
//! by the convolution estimator differs from its continuum value. Both
//! estimators therefore normalize by the matching quantity of the lattice
//! ball actually used, which reduces to `δ` (resp. `δ^{n+1} / C(n)`) in the
//! continuum limit.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::grid::{correlate_taps, gradient_magnitude, shift3, unit_ball_volume, Grid, RegionMask, ScalarField};
use crate::rearrange::{rearrange_field, rearrange_mask};
use crate::report::{scale, CheckResult};

/// Default Minkowski radius for inequality checks, in cells.
pub const CANONICAL_DELTA_CELLS: f64 = 3.0;
pub const MINKOWSKI_DELTA_CELLS: f64 = 4.0;
pub const CONVOLUTION_DELTA_CELLS: f64 = 6.0;
pub const SMOOTHING_WIDTH_CELLS: f64 = 3.0;

pub const ISOPERIMETRIC_REL_TOL: f64 = 0.03;
pub const POLYA_SZEGO_REL_TOL: f64 = 0.02;
pub const COAREA_REL_TOL: f64 = 0.02;
pub const POLYGON_REL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PerimeterMethod {
    FaceCount,
    SmoothedGradient,
    Minkowski,
    Convolution,
}

impl std::str::FromStr for PerimeterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "face_count" | "faces" => Ok(Self::FaceCount),
            "smoothed_gradient" | "gradient" => Ok(Self::SmoothedGradient),
            "minkowski" => Ok(Self::Minkowski),
            "convolution" => Ok(Self::Convolution),
            _ => Err(Error::InvalidArgument(format!("unknown perimeter method '{s}'"))),
        }
    }
}

impl std::fmt::Display for PerimeterMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::FaceCount => "face_count",
            Self::SmoothedGradient => "smoothed_gradient",
            Self::Minkowski => "minkowski",
            Self::Convolution => "convolution",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerimeterEstimate {
    pub method: PerimeterMethod,
    pub value: f64,
    /// `δ` or smoothing width, in length units (zero for face counting).
    pub parameter: f64,
}

/// Lattice offsets within Euclidean distance `δ` of the origin, with the
/// normalizing constants of that discrete ball.
#[derive(Debug)]
pub struct LatticeBall {
    pub offsets: Vec<[isize; 3]>,
    pub radius: f64,
    /// Mean over directions of the support function (half the mean width).
    pub mean_half_width: f64,
    /// Mean over directions `u` of `Σ_b max(<b, u>, 0) · cell volume`.
    pub half_first_moment: f64,
}

type BallKey = (usize, [u64; 3], u64);

fn ball_cache() -> &'static Mutex<HashMap<BallKey, Arc<LatticeBall>>> {
    static CACHE: OnceLock<Mutex<HashMap<BallKey, Arc<LatticeBall>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

impl LatticeBall {
    pub fn of(grid: &Grid, radius: f64) -> Arc<LatticeBall> {
        let key = (grid.dim(), grid.spacing3().map(f64::to_bits), radius.to_bits());
        let mut map = ball_cache().lock().unwrap_or_else(|e| e.into_inner());
        map.entry(key).or_insert_with(|| Arc::new(Self::build(grid, radius))).clone()
    }

    fn build(grid: &Grid, radius: f64) -> Self {
        let dim = grid.dim();
        let h = grid.spacing3();
        let reach = [0, 1, 2].map(|a| if a < 3 - dim { 0 } else { (radius / h[a]).floor() as isize });
        let r2 = radius * radius * (1.0 + 1e-12);
        let mut offsets = Vec::new();
        for i in -reach[0]..=reach[0] {
            for j in -reach[1]..=reach[1] {
                for k in -reach[2]..=reach[2] {
                    let o = [i, j, k];
                    let d2: f64 = (0..3).map(|a| (o[a] as f64 * h[a]).powi(2)).sum();
                    if d2 <= r2 {
                        offsets.push(o);
                    }
                }
            }
        }
        let phys: Vec<[f64; 3]> = offsets.iter().map(|o| [0, 1, 2].map(|a| o[a] as f64 * h[a])).collect();
        let support =
            |u: [f64; 3]| phys.iter().map(|b| b[0] * u[0] + b[1] * u[1] + b[2] * u[2]).fold(f64::MIN, f64::max);
        let mean_half_width = match dim {
            1 => support([0.0, 0.0, 1.0]),
            2 => {
                let m = 4096;
                (0..m)
                    .map(|j| {
                        let t = 2.0 * PI * j as f64 / m as f64;
                        support([0.0, t.cos(), t.sin()])
                    })
                    .sum::<f64>()
                    / m as f64
            }
            _ => {
                // Fibonacci sphere directions
                let m = 4096;
                let golden = PI * (3.0 - 5f64.sqrt());
                (0..m)
                    .map(|j| {
                        let z = 1.0 - (2.0 * j as f64 + 1.0) / m as f64;
                        let r = (1.0 - z * z).sqrt();
                        let t = golden * j as f64;
                        support([z, r * t.cos(), r * t.sin()])
                    })
                    .sum::<f64>()
                    / m as f64
            }
        };
        // E[max(u_1, 0)] over the unit sphere in R^n
        let n = dim as f64;
        let kappa = statrs::function::gamma::gamma(n / 2.0)
            / (2.0 * PI.sqrt() * statrs::function::gamma::gamma((n + 1.0) / 2.0));
        let norm_sum: f64 = phys.iter().map(|b| (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt()).sum();
        let half_first_moment = kappa * norm_sum * grid.cell_volume();
        Self { offsets, radius, mean_half_width, half_first_moment }
    }
}

/// Members with at least one face neighbour outside the set (or outside the grid).
fn boundary_members(mask: &RegionMask) -> Vec<usize> {
    let grid = mask.grid();
    let dim = grid.dim();
    mask.member_indices()
        .filter(|&i| {
            (3 - dim..3).any(|a| {
                [-1isize, 1].iter().any(|&s| {
                    let mut o = [0; 3];
                    o[a] = s;
                    shift3(grid, i, o).is_none_or(|j| !mask.contains(j))
                })
            })
        })
        .collect()
}

/// Dilation of `mask` by a set of offsets that contains the origin. Only
/// boundary members need to be expanded: the nearest member to any covered
/// cell always has a neighbour outside the set.
fn dilate_by_ball(mask: &RegionMask, offsets: &[[isize; 3]]) -> Result<RegionMask> {
    let mut out = mask.clone();
    for i in boundary_members(mask) {
        for &o in offsets {
            let j = shift3(mask.grid(), i, o).ok_or(Error::MarginOverflow)?;
            out.set(j, true);
        }
    }
    Ok(out)
}

fn check_resolution(grid: &Grid, param: f64, what: &str) -> Result<()> {
    let need = 2.0 * grid.max_spacing();
    if param < need * (1.0 - 1e-12) {
        Err(Error::UnderResolved(format!("{what} {param} is below two cells ({need})")))
    } else {
        Ok(())
    }
}

/// Total measure of faces separating members from non-members (or the grid
/// exterior). In one dimension this is the number of boundary points.
pub fn perimeter_face_count(mask: &RegionMask) -> PerimeterEstimate {
    let grid = mask.grid();
    let dim = grid.dim();
    let h = grid.spacing3();
    let cv = grid.cell_volume();
    let mut total = 0.0;
    for i in mask.member_indices() {
        for a in 3 - dim..3 {
            let face = if dim == 1 { 1.0 } else { cv / h[a] };
            for s in [-1isize, 1] {
                let mut o = [0; 3];
                o[a] = s;
                if shift3(grid, i, o).is_none_or(|j| !mask.contains(j)) {
                    total += face;
                }
            }
        }
    }
    PerimeterEstimate { method: PerimeterMethod::FaceCount, value: total, parameter: 0.0 }
}

/// `Per(A) ≈ Vol((A + B_δ) \ A) / δ`, with `δ` replaced by the mean half-width
/// of the lattice ball.
pub fn perimeter_minkowski(mask: &RegionMask, delta: f64) -> Result<PerimeterEstimate> {
    let grid = mask.grid();
    check_resolution(grid, delta, "Minkowski radius")?;
    let ball = LatticeBall::of(grid, delta);
    let value = if mask.is_empty() {
        0.0
    } else {
        let grown = dilate_by_ball(mask, &ball.offsets)?;
        (grown.count() - mask.count()) as f64 * grid.cell_volume() / ball.mean_half_width
    };
    Ok(PerimeterEstimate { method: PerimeterMethod::Minkowski, value, parameter: delta })
}

/// `C(n) = (n + 1) / ω_{n-1}`.
pub fn convolution_constant(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument("convolution estimator needs n >= 2".into()));
    }
    Ok((n as f64 + 1.0) / unit_ball_volume(n - 1)?)
}

/// `Per(A) ≈ C(n) / δ^{n+1} ∫_A (X_{A^c} * X_{B_δ})`. The factor
/// `δ^{n+1} / C(n)` is the half-ball first moment, evaluated for the lattice ball.
pub fn perimeter_convolution(mask: &RegionMask, delta: f64) -> Result<PerimeterEstimate> {
    let grid = mask.grid();
    convolution_constant(grid.dim())?;
    check_resolution(grid, delta, "convolution radius")?;
    let ball = LatticeBall::of(grid, delta);
    let mut pairs = 0usize;
    for i in mask.member_indices() {
        for &o in &ball.offsets {
            if shift3(grid, i, o).is_none_or(|j| !mask.contains(j)) {
                pairs += 1;
            }
        }
    }
    let cv = grid.cell_volume();
    let integral = pairs as f64 * cv * cv;
    Ok(PerimeterEstimate {
        method: PerimeterMethod::Convolution,
        value: integral / ball.half_first_moment,
        parameter: delta,
    })
}

/// Separable Gaussian mollification with standard deviation `sigma`,
/// truncated at `5 sigma` and normalized to unit discrete mass per axis.
pub(crate) fn gaussian_blur(f: &ScalarField, sigma: f64) -> ScalarField {
    let grid = f.grid();
    let h = grid.spacing3();
    let mut out = f.clone();
    for a in 3 - grid.dim()..3 {
        let reach = (5.0 * sigma / h[a]).ceil() as isize;
        let mut taps: Vec<([isize; 3], f64)> = (-reach..=reach)
            .map(|k| {
                let mut o = [0; 3];
                o[a] = k;
                let x = k as f64 * h[a];
                (o, (-x * x / (2.0 * sigma * sigma)).exp())
            })
            .collect();
        let mass: f64 = taps.iter().map(|t| t.1).sum();
        taps.iter_mut().for_each(|t| t.1 /= mass);
        out = correlate_taps(&out, &taps, 1.0, false);
    }
    out
}

/// `Per(A) ≈ ∫ |∇ φ_δ|` with `φ_δ` the indicator mollified by a Gaussian of the given width.
pub fn perimeter_smoothed_gradient(mask: &RegionMask, width: f64) -> Result<PerimeterEstimate> {
    check_resolution(mask.grid(), width, "smoothing width")?;
    let phi = gaussian_blur(&mask.indicator(), width);
    Ok(PerimeterEstimate {
        method: PerimeterMethod::SmoothedGradient,
        value: gradient_magnitude(&phi).lp_norm(1.0),
        parameter: width,
    })
}

/// Runs one estimator; `parameter` of `None` picks the recommended default.
pub fn estimate_perimeter(
    mask: &RegionMask,
    method: PerimeterMethod,
    parameter: Option<f64>,
) -> Result<PerimeterEstimate> {
    let h = mask.grid().max_spacing();
    match method {
        PerimeterMethod::FaceCount => Ok(perimeter_face_count(mask)),
        PerimeterMethod::Minkowski => perimeter_minkowski(mask, parameter.unwrap_or(MINKOWSKI_DELTA_CELLS * h)),
        PerimeterMethod::Convolution => perimeter_convolution(mask, parameter.unwrap_or(CONVOLUTION_DELTA_CELLS * h)),
        PerimeterMethod::SmoothedGradient => {
            perimeter_smoothed_gradient(mask, parameter.unwrap_or(SMOOTHING_WIDTH_CELLS * h))
        }
    }
}

/// The reference perimeter for inequality checks.
pub fn canonical_perimeter(mask: &RegionMask) -> Result<f64> {
    Ok(perimeter_minkowski(mask, CANONICAL_DELTA_CELLS * mask.grid().max_spacing())?.value)
}

/// `t_i = i · max / count` for `i = 1..=count` (zero excluded).
pub fn uniform_thresholds(max: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|i| max * i as f64 / count as f64).collect()
}

/// `∫ |∇f|` against `∫_0^∞ Per({f > t}) dt`. The level integral is a
/// trapezoid rule over the given thresholds; the first panel `[0, t_1]`
/// reuses the perimeter at `t_1` since `{f > 0}` is excluded.
pub fn coarea_check(f: &ScalarField, thresholds: &[f64], delta: f64) -> Result<CheckResult> {
    if thresholds.is_empty() || thresholds[0] <= 0.0 || thresholds.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("thresholds must be positive and strictly increasing".into()));
    }
    let lhs = gradient_magnitude(f).lp_norm(1.0);
    let per = thresholds
        .iter()
        .map(|&t| perimeter_minkowski(&f.super_level(t), delta).map(|p| p.value))
        .collect::<Result<Vec<f64>>>()?;
    let mut rhs = per[0] * thresholds[0];
    for k in 1..per.len() {
        rhs += 0.5 * (per[k] + per[k - 1]) * (thresholds[k] - thresholds[k - 1]);
    }
    Ok(CheckResult::eq("coarea", lhs, rhs, COAREA_REL_TOL * lhs.abs().max(rhs.abs())))
}

/// Default critical-gradient cutoff `1e-6 · max |∇f|`.
pub fn default_epsilon(f: &ScalarField) -> f64 {
    1e-6 * gradient_magnitude(f).max()
}

/// `Vol({t < f <= t + δt} ∩ {|∇f| > ε}) / δt`.
pub fn coarea_density(f: &ScalarField, t: f64, dt: f64, eps: f64) -> Result<f64> {
    if !(dt > 0.0 && eps > 0.0) {
        return Err(Error::InvalidArgument("slab width and cutoff must be positive".into()));
    }
    let grad = gradient_magnitude(f);
    let count = f.values().iter().zip(grad.values()).filter(|(&v, &g)| v > t && v <= t + dt && g > eps).count();
    Ok(count as f64 * f.grid().cell_volume() / dt)
}

/// Rearrangement does not lose non-critical slab volume:
/// `density(f*) >= density(f)`, up to one cell.
pub fn check_critical_density(f: &ScalarField, t: f64, dt: f64) -> Result<CheckResult> {
    let fstar = rearrange_field(f)?;
    let eps = default_epsilon(f);
    let lhs = coarea_density(&fstar, t, dt, eps)?;
    let rhs = coarea_density(f, t, dt, eps)?;
    Ok(CheckResult::ge("critical_density", lhs, rhs, f.grid().cell_volume() / dt))
}

/// `A + B`, with `B` read as offsets from [`Grid::kernel_center`].
pub fn minkowski_sum(a: &RegionMask, b: &RegionMask) -> Result<RegionMask> {
    if !a.grid().same_cells(b.grid()) {
        return Err(Error::GridMismatch);
    }
    let grid = a.grid();
    let c = grid.kernel_center3();
    let offsets: Vec<[isize; 3]> = b
        .member_indices()
        .map(|k| {
            let idx = grid.unravel3(k);
            [0, 1, 2].map(|x| idx[x] as isize - c[x] as isize)
        })
        .collect();
    let mut out = RegionMask::empty(grid.clone());
    for i in a.member_indices() {
        for &o in &offsets {
            let j = shift3(grid, i, o).ok_or(Error::MarginOverflow)?;
            out.set(j, true);
        }
    }
    Ok(out)
}

/// Volume of the Minkowski sum of the two sets read as unions of closed cells.
/// Each pair of cells sums to a box twice the cell size, so this is the lattice
/// sum grown by one cell along every axis.
pub fn cell_union_sum_volume(a: &RegionMask, b: &RegionMask) -> Result<f64> {
    let lattice = minkowski_sum(a, b)?;
    let dim = a.grid().dim();
    let corners: Vec<[isize; 3]> = (0..1usize << dim)
        .map(|bits| {
            let mut o = [0; 3];
            for k in 0..dim {
                o[3 - dim + k] = ((bits >> k) & 1) as isize;
            }
            o
        })
        .collect();
    let mut grown = RegionMask::empty(a.grid().clone());
    for i in lattice.member_indices() {
        for &o in &corners {
            grown.set(shift3(a.grid(), i, o).ok_or(Error::MarginOverflow)?, true);
        }
    }
    Ok(grown.volume())
}

/// `Vol(A + B)^{1/n} >= Vol(A)^{1/n} + Vol(B)^{1/n}`, tolerance one cell's
/// `n`-th root volume.
pub fn check_brunn_minkowski(a: &RegionMask, b: &RegionMask) -> Result<CheckResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("Brunn-Minkowski needs non-empty sets".into()));
    }
    let n = a.grid().dim() as f64;
    let lhs = cell_union_sum_volume(a, b)?.powf(1.0 / n);
    let rhs = a.volume().powf(1.0 / n) + b.volume().powf(1.0 / n);
    Ok(CheckResult::ge("brunn_minkowski", lhs, rhs, a.grid().cell_volume().powf(1.0 / n)))
}

/// `Per(A) >= n ω_n^{1/n} Vol(A)^{(n-1)/n}`.
pub fn check_sharp_isoperimetric(mask: &RegionMask) -> Result<CheckResult> {
    let n = mask.grid().dim();
    if n < 2 {
        return Err(Error::InvalidArgument("isoperimetric check needs n >= 2".into()));
    }
    let lhs = canonical_perimeter(mask)?;
    let nf = n as f64;
    let rhs = nf * unit_ball_volume(n)?.powf(1.0 / nf) * mask.volume().powf((nf - 1.0) / nf);
    Ok(CheckResult::ge("sharp_isoperimetric", lhs, rhs, ISOPERIMETRIC_REL_TOL * rhs))
}

/// `Per(A) >= Per(A*)`.
pub fn check_isoperimetric_mask(mask: &RegionMask) -> Result<CheckResult> {
    if mask.grid().dim() < 2 {
        return Err(Error::InvalidArgument("isoperimetric check needs n >= 2".into()));
    }
    let lhs = canonical_perimeter(mask)?;
    let rhs = canonical_perimeter(&rearrange_mask(mask))?;
    Ok(CheckResult::ge("isoperimetric", lhs, rhs, ISOPERIMETRIC_REL_TOL * rhs))
}

/// `‖∇f‖_p >= ‖∇f*‖_p`.
pub fn check_polya_szego(f: &ScalarField, p: f64) -> Result<CheckResult> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p must lie in [1, inf), got {p}")));
    }
    let lhs = gradient_magnitude(f).lp_norm(p);
    let rhs = gradient_magnitude(&rearrange_field(f)?).lp_norm(p);
    Ok(CheckResult::ge(format!("polya_szego[p={p}]"), lhs, rhs, POLYA_SZEGO_REL_TOL * lhs))
}

/// Simple planar polygon with counter-clockwise vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<[f64; 2]>,
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_touch(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

impl Polygon {
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidPolygon("need at least three vertices".into()));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite vertex".into()));
        }
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            if a == b {
                return Err(Error::InvalidPolygon(format!("repeated vertex {i}")));
            }
            for j in i + 1..n {
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // shared endpoint only; reject folding back onto the previous edge
                    let shared = if j == i + 1 { b } else { a };
                    let (p, q) = if j == i + 1 { (a, d) } else { (b, c) };
                    if orient(p, shared, q) == 0.0
                        && (q[0] - shared[0]) * (p[0] - shared[0]) + (q[1] - shared[1]) * (p[1] - shared[1]) > 0.0
                    {
                        return Err(Error::InvalidPolygon(format!("edges {i} and {j} overlap")));
                    }
                } else if segments_touch(a, b, c, d) {
                    return Err(Error::InvalidPolygon(format!("edges {i} and {j} intersect")));
                }
            }
        }
        let poly = Self { vertices };
        if poly.signed_area() <= 0.0 {
            return Err(Error::InvalidPolygon("vertices must be counter-clockwise".into()));
        }
        Ok(poly)
    }

    /// Regular `n`-gon with the given circumradius.
    pub fn regular(n: usize, radius: f64) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / n as f64;
                    [radius * t.cos(), radius * t.sin()]
                })
                .collect(),
        )
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// Shoelace area (positive for counter-clockwise order).
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .sum()
    }
}

/// `L^2 >= 4 π A`.
pub fn check_planar_polygon(poly: &Polygon) -> CheckResult {
    let l2 = poly.perimeter().powi(2);
    let a4 = 4.0 * PI * poly.signed_area();
    CheckResult::ge("planar_isoperimetric", l2, a4, POLYGON_REL_TOL * scale(l2, a4))
}
