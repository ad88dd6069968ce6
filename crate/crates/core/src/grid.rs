//! Uniform rectangular grids in one to three dimensions, the fields and masks
//! sampled on them, and the basic measure/derivative/convolution operations.
//!
//! Cells are stored row-major (last axis fastest). Coordinates handed out by
//! this module are relative to the grid origin, which sits at the center of
//! the domain and doubles as the rearrangement center.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    shape: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
}

impl Grid {
    pub fn new(shape: Vec<usize>, spacing: Vec<f64>, origin: Vec<f64>) -> Result<Self> {
        let dim = shape.len();
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if spacing.len() != dim || origin.len() != dim {
            return Err(Error::InvalidGrid("shape, spacing and origin must have equal length".into()));
        }
        if shape.contains(&0) {
            return Err(Error::InvalidGrid("every axis needs at least one cell".into()));
        }
        if spacing.iter().any(|&h| !(h.is_finite() && h > 0.0)) {
            return Err(Error::InvalidGrid("spacings must be positive and finite".into()));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { shape, spacing, origin })
    }

    /// `dim`-dimensional grid with `n` cells of width `h` per axis, centered at zero.
    pub fn uniform(dim: usize, n: usize, h: f64) -> Result<Self> {
        Self::new(vec![n; dim], vec![h; dim], vec![0.0; dim])
    }

    /// `n` cells per axis covering the cube `[-half_width, half_width]^dim`.
    pub fn cube(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        Self::uniform(dim, n, 2.0 * half_width / n as f64)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn is_isotropic(&self) -> bool {
        self.spacing.iter().all(|&h| h == self.spacing[0])
    }

    /// Shape padded in front with unit axes to exactly three entries.
    pub(crate) fn shape3(&self) -> [usize; 3] {
        let mut s = [1; 3];
        s[3 - self.dim()..].copy_from_slice(&self.shape);
        s
    }

    pub(crate) fn spacing3(&self) -> [f64; 3] {
        let mut s = [1.0; 3];
        s[3 - self.dim()..].copy_from_slice(&self.spacing);
        s
    }

    pub(crate) fn unravel3(&self, flat: usize) -> [usize; 3] {
        let s = self.shape3();
        [flat / (s[1] * s[2]), (flat / s[2]) % s[1], flat % s[2]]
    }

    pub(crate) fn ravel3(&self, idx: [usize; 3]) -> usize {
        let s = self.shape3();
        (idx[0] * s[1] + idx[1]) * s[2] + idx[2]
    }

    /// Multi-index of a flat cell index.
    pub fn unravel(&self, flat: usize) -> Vec<usize> {
        self.unravel3(flat)[3 - self.dim()..].to_vec()
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Twice the origin-relative coordinate of a cell center in units of the
    /// spacing: `2 i - (n - 1)`. Integer, so radial ties are exact.
    pub(crate) fn doubled_offset3(&self, flat: usize) -> [i64; 3] {
        let s = self.shape3();
        let idx = self.unravel3(flat);
        [0, 1, 2].map(|a| 2 * idx[a] as i64 - (s[a] as i64 - 1))
    }

    /// Origin-relative center of one cell.
    pub fn cell_center(&self, flat: usize) -> Vec<f64> {
        let d = self.doubled_offset3(flat);
        let h = self.spacing3();
        (3 - self.dim()..3).map(|a| 0.5 * d[a] as f64 * h[a]).collect()
    }

    /// Index of the cell that plays the role of the kernel origin in
    /// [`convolve`]: the first cell of the radial order, i.e. the nearest to
    /// the origin with lexicographically smallest coordinates.
    pub fn kernel_center(&self) -> Vec<usize> {
        self.shape.iter().map(|&n| (n - 1) / 2).collect()
    }

    pub(crate) fn kernel_center3(&self) -> [usize; 3] {
        self.shape3().map(|n| (n - 1) / 2)
    }

    /// True when `other` has the same shape and spacing (origins may differ).
    pub fn same_cells(&self, other: &Grid) -> bool {
        self.shape == other.shape && self.spacing == other.spacing
    }

    /// Cells on the outer ring: any index at the first or last position of an
    /// axis with at least three cells.
    pub fn is_boundary_cell(&self, flat: usize) -> bool {
        let s = self.shape3();
        let idx = self.unravel3(flat);
        (0..3).any(|a| s[a] >= 3 && (idx[a] == 0 || idx[a] == s[a] - 1))
    }
}

/// Origin-relative cell centers in row-major order.
pub fn cell_centers(grid: &Grid) -> Vec<Vec<f64>> {
    (0..grid.len()).map(|i| grid.cell_center(i)).collect()
}

/// Volume of the unit ball in `n` dimensions, `pi^(n/2) / Gamma(n/2 + 1)`.
pub fn unit_ball_volume(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument("unit ball needs n >= 1".into()));
    }
    let half = n as f64 / 2.0;
    Ok(std::f64::consts::PI.powf(half) / statrs::function::gamma::gamma(half + 1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    /// Samples `f` at every origin-relative cell center.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.cell_center(i))).collect();
        Self::new(grid, values)
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `∫ f` as a cell sum.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// `‖f‖_p` with the cell-volume measure; `p = ∞` gives the max norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm(&self.values, self.grid.cell_volume(), p)
    }

    /// `∫ f g`.
    pub fn inner(&self, other: &ScalarField) -> Result<f64> {
        self.check_grid(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ScalarField> {
        ScalarField::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        self.check_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        ScalarField::new(self.grid.clone(), values)
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    /// Mask of the strict super-level set `{f > t}`.
    pub fn super_level(&self, t: f64) -> RegionMask {
        RegionMask { grid: self.grid.clone(), members: self.values.iter().map(|&v| v > t).collect() }
    }

    /// Whether the outer ring of cells is identically zero.
    pub fn is_compact(&self) -> bool {
        (0..self.grid.len()).all(|i| !self.grid.is_boundary_cell(i) || self.values[i] == 0.0)
    }

    pub(crate) fn check_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid.same_cells(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub(crate) fn check_nonnegative(&self) -> Result<()> {
        match self.values.iter().position(|&v| v < 0.0) {
            Some(index) => Err(Error::NegativeValue { index, value: self.values[index] }),
            None => Ok(()),
        }
    }
}

pub(crate) fn lp_norm(values: &[f64], cell_volume: f64, p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        values.iter().map(|v| v.abs()).sum::<f64>() * cell_volume
    } else if p == 2.0 {
        (values.iter().map(|v| v * v).sum::<f64>() * cell_volume).sqrt()
    } else {
        (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * cell_volume).powf(1.0 / p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionMask {
    grid: Grid,
    members: Vec<bool>,
}

impl RegionMask {
    pub fn new(grid: Grid, members: Vec<bool>) -> Result<Self> {
        if members.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: members.len() });
        }
        Ok(Self { grid, members })
    }

    pub fn empty(grid: Grid) -> Self {
        let members = vec![false; grid.len()];
        Self { grid, members }
    }

    pub fn full(grid: Grid) -> Self {
        let members = vec![true; grid.len()];
        Self { grid, members }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> bool) -> Self {
        let members = (0..grid.len()).map(|i| f(&grid.cell_center(i))).collect();
        Self { grid, members }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn contains(&self, flat: usize) -> bool {
        self.members[flat]
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&m| m)
    }

    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    pub fn indicator(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.members.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn complement(&self) -> RegionMask {
        Self { grid: self.grid.clone(), members: self.members.iter().map(|m| !m).collect() }
    }

    pub fn intersection(&self, other: &RegionMask) -> Result<RegionMask> {
        if !self.grid.same_cells(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let members = self.members.iter().zip(&other.members).map(|(&a, &b)| a && b).collect();
        Ok(Self { grid: self.grid.clone(), members })
    }

    pub fn union(&self, other: &RegionMask) -> Result<RegionMask> {
        if !self.grid.same_cells(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let members = self.members.iter().zip(&other.members).map(|(&a, &b)| a || b).collect();
        Ok(Self { grid: self.grid.clone(), members })
    }

    pub fn member_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    /// Shifts every member by an integer cell offset; fails if a member leaves the grid.
    pub fn translate(&self, offset: &[isize]) -> Result<RegionMask> {
        if offset.len() != self.grid.dim() {
            return Err(Error::InvalidArgument("offset dimension mismatch".into()));
        }
        let mut off3 = [0isize; 3];
        off3[3 - offset.len()..].copy_from_slice(offset);
        let mut out = RegionMask::empty(self.grid.clone());
        for i in self.member_indices() {
            let j = shift3(&self.grid, i, off3).ok_or(Error::MarginOverflow)?;
            out.members[j] = true;
        }
        Ok(out)
    }

    pub(crate) fn set(&mut self, flat: usize, value: bool) {
        self.members[flat] = value;
    }
}

/// Flat index of `flat + offset`, or `None` when it leaves the grid.
pub(crate) fn shift3(grid: &Grid, flat: usize, offset: [isize; 3]) -> Option<usize> {
    let s = grid.shape3();
    let idx = grid.unravel3(flat);
    let mut out = [0usize; 3];
    for a in 0..3 {
        let j = idx[a] as isize + offset[a];
        if j < 0 || j >= s[a] as isize {
            return None;
        }
        out[a] = j as usize;
    }
    Some(grid.ravel3(out))
}

/// Volume of a mask: member count times cell volume.
pub fn volume(mask: &RegionMask) -> f64 {
    mask.volume()
}

/// `|∇f|` by central differences in the interior and one-sided differences at
/// the ends of each axis. Axes with a single cell contribute nothing.
pub fn gradient_magnitude(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let s = grid.shape3();
    let h = grid.spacing3();
    let strides = [s[1] * s[2], s[2], 1];
    let v = f.values();
    let mut out = vec![0.0; v.len()];
    for (flat, o) in out.iter_mut().enumerate() {
        let idx = grid.unravel3(flat);
        let mut sq = 0.0;
        for a in 0..3 {
            let n = s[a];
            if n < 2 {
                continue;
            }
            let st = strides[a];
            let d = if idx[a] == 0 {
                (v[flat + st] - v[flat]) / h[a]
            } else if idx[a] == n - 1 {
                (v[flat] - v[flat - st]) / h[a]
            } else {
                (v[flat + st] - v[flat - st]) / (2.0 * h[a])
            };
            sq += d * d;
        }
        *o = sq.sqrt();
    }
    ScalarField::from_parts_unchecked(grid.clone(), out)
}

/// Discrete convolution `(f * g)(x_i) = Σ_j f(x_j) g(x_i - x_j) · cell volume`.
///
/// `g` is read as a kernel whose zero offset sits at [`Grid::kernel_center`];
/// everything outside the grid is zero.
pub fn convolve(f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
    f.check_grid(g)?;
    let grid = f.grid();
    let c = grid.kernel_center3();
    let taps: Vec<([isize; 3], f64)> = g
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(k, &w)| {
            let idx = grid.unravel3(k);
            ([0, 1, 2].map(|a| idx[a] as isize - c[a] as isize), w)
        })
        .collect();
    Ok(correlate_taps(f, &taps, grid.cell_volume(), true))
}

/// Sums `scale * w * f(x - o)` (or `f(x + o)` when `flip` is false) over the taps.
pub(crate) fn correlate_taps(f: &ScalarField, taps: &[([isize; 3], f64)], scale: f64, flip: bool) -> ScalarField {
    let grid = f.grid();
    let s = grid.shape3();
    let s3 = [s[0] as isize, s[1] as isize, s[2] as isize];
    let v = f.values();
    let mut out = vec![0.0; v.len()];
    for &(o, w) in taps {
        let o = if flip { o.map(|x| -x) } else { o };
        let w = w * scale;
        // source index = target index + o
        let lo = [0, 1, 2].map(|a| (-o[a]).max(0));
        let hi = [0, 1, 2].map(|a| (s3[a] - o[a]).min(s3[a]));
        if (0..3).any(|a| lo[a] >= hi[a]) {
            continue;
        }
        for i0 in lo[0]..hi[0] {
            for i1 in lo[1]..hi[1] {
                let row_t = (i0 * s3[1] + i1) * s3[2];
                let row_s = ((i0 + o[0]) * s3[1] + i1 + o[1]) * s3[2] + o[2];
                let src = &v[(row_s + lo[2]) as usize..(row_s + hi[2]) as usize];
                let dst = &mut out[(row_t + lo[2]) as usize..(row_t + hi[2]) as usize];
                for (d, &x) in dst.iter_mut().zip(src) {
                    *d += w * x;
                }
            }
        }
    }
    ScalarField::from_parts_unchecked(grid.clone(), out)
}

/// Sum of `k` positive Gaussian bumps with random amplitudes, widths and
/// centers, tapered to zero near the edges and zeroed on the outer ring of
/// cells. Uses ChaCha8 seeded with `seed`.
pub fn random_smooth_field(grid: &Grid, seed: u64, k: usize) -> Result<ScalarField> {
    if k < 1 {
        return Err(Error::InvalidArgument("need at least one bump".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let half: Vec<f64> = grid.shape().iter().zip(grid.spacing()).map(|(&n, &h)| 0.5 * n as f64 * h).collect();
    let extent = 2.0 * half.iter().copied().fold(f64::INFINITY, f64::min);
    let bumps: Vec<(f64, f64, Vec<f64>)> = (0..k)
        .map(|_| {
            let amp = rng.gen_range(0.5..1.5);
            let sigma = rng.gen_range(0.04..0.09) * extent;
            let center = (0..dim).map(|_| rng.gen_range(-0.15..0.15) * extent).collect();
            (amp, sigma, center)
        })
        .collect();
    let taper = |s: f64| {
        let s = s.abs();
        if s <= 0.7 {
            1.0
        } else if s >= 1.0 {
            0.0
        } else {
            (0.5 * std::f64::consts::PI * (s - 0.7) / 0.3).cos().powi(2)
        }
    };
    let values: Vec<f64> = (0..grid.len())
        .map(|i| {
            if grid.is_boundary_cell(i) {
                return 0.0;
            }
            let x = grid.cell_center(i);
            let window: f64 = x.iter().zip(&half).map(|(&xa, &ha)| taper(xa / ha)).product();
            window
                * bumps
                    .iter()
                    .map(|(amp, sigma, c)| {
                        let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                        amp * (-r2 / (2.0 * sigma * sigma)).exp()
                    })
                    .sum::<f64>()
        })
        .collect();
    ScalarField::new(grid.clone(), values)
}
