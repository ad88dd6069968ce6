//! Seeded test inputs: convex masks, simple polygons, balls and smooth sources.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{random_smooth_field, Grid, RegionMask, ScalarField};
use crate::perimeter::{gaussian_blur, Polygon};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn half_extent(grid: &Grid) -> f64 {
    grid.shape().iter().zip(grid.spacing()).map(|(&n, &h)| 0.5 * n as f64 * h).fold(f64::INFINITY, f64::min)
}

/// Centered ball of the given radius.
pub fn ball_mask(grid: &Grid, radius: f64) -> RegionMask {
    RegionMask::from_fn(grid.clone(), |x| x.iter().map(|v| v * v).sum::<f64>() < radius * radius)
}

/// Axis-aligned box with the given half-widths, shifted by `center`.
pub fn box_mask(grid: &Grid, center: &[f64], half: &[f64]) -> RegionMask {
    RegionMask::from_fn(grid.clone(), |x| x.iter().zip(center).zip(half).all(|((v, c), h)| (v - c).abs() < *h))
}

/// Counter-clockwise convex hull (monotone chain), collinear points dropped.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

fn inside_convex(hull: &[[f64; 2]], x: [f64; 2]) -> bool {
    let n = hull.len();
    (0..n).all(|i| {
        let (a, b) = (hull[i], hull[(i + 1) % n]);
        (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]) > 0.0
    })
}

/// Random convex set: the hull of random points (planar grids) or a random
/// rotated ellipsoid (three-dimensional grids), kept inside `reach` times the
/// half-extent of the grid.
pub fn random_convex_mask(grid: &Grid, rng: &mut impl Rng, reach: f64) -> Result<RegionMask> {
    let r = reach * half_extent(grid);
    match grid.dim() {
        2 => loop {
            let k = rng.gen_range(3..12);
            let c = [rng.gen_range(-0.2..0.2) * r, rng.gen_range(-0.2..0.2) * r];
            let pts: Vec<[f64; 2]> = (0..k)
                .map(|_| {
                    let t = rng.gen_range(0.0..std::f64::consts::TAU);
                    let s = rng.gen_range(0.3..0.8) * r;
                    [c[0] + s * t.cos(), c[1] + s * t.sin()]
                })
                .collect();
            let hull = convex_hull(&pts);
            if hull.len() < 3 {
                continue;
            }
            let m = RegionMask::from_fn(grid.clone(), |x| inside_convex(&hull, [x[0], x[1]]));
            if m.count() >= 16 {
                return Ok(m);
            }
        },
        3 => {
            let axes = [0, 1, 2].map(|_| rng.gen_range(0.3..0.8) * r);
            let (a, b) = (rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.0..std::f64::consts::TAU));
            let (ca, sa, cb, sb) = (a.cos(), a.sin(), b.cos(), b.sin());
            Ok(RegionMask::from_fn(grid.clone(), |x| {
                let y = [ca * x[0] - sa * x[1], sa * x[0] + ca * x[1], x[2]];
                let z = [y[0], cb * y[1] - sb * y[2], sb * y[1] + cb * y[2]];
                z.iter().zip(&axes).map(|(v, s)| (v / s).powi(2)).sum::<f64>() < 1.0
            }))
        }
        _ => Err(Error::InvalidArgument("convex samples need n = 2 or 3".into())),
    }
}

/// Random star-shaped (hence simple) counter-clockwise polygon.
pub fn random_simple_polygon(rng: &mut impl Rng, max_vertices: usize) -> Result<Polygon> {
    let n = rng.gen_range(3..=max_vertices.max(3));
    loop {
        let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let verts: Vec<[f64; 2]> = angles
            .iter()
            .map(|&t| {
                let r = rng.gen_range(0.2..2.0);
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        if let Ok(p) = Polygon::new(verts) {
            return Ok(p);
        }
    }
}

/// Gaussian mixture with one to four bumps.
pub fn gaussian_mixture(grid: &Grid, seed: u64) -> Result<ScalarField> {
    let k = 1 + (rng(seed).gen_range(0..4usize));
    random_smooth_field(grid, seed, k)
}

/// Off-center source: either a mollified square or a pair of bumps, placed
/// away from the center and cut off outside the disk of radius `0.9` times
/// the half-extent.
pub fn off_center_source(grid: &Grid, seed: u64) -> Result<ScalarField> {
    let cut = 0.9 * half_extent(grid);
    let inside = ball_mask(grid, cut);
    let raw = raw_off_center_source(grid, seed)?;
    ScalarField::new(
        grid.clone(),
        raw.values().iter().zip(inside.members()).map(|(&v, &m)| if m { v } else { 0.0 }).collect(),
    )
}

fn raw_off_center_source(grid: &Grid, seed: u64) -> Result<ScalarField> {
    let mut rng = rng(seed);
    let r = half_extent(grid);
    let dim = grid.dim();
    let center: Vec<f64> =
        (0..dim).map(|_| rng.gen_range(0.15..0.4) * r * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
    if seed.is_multiple_of(2) {
        let side = rng.gen_range(0.1..0.25) * r;
        let sq = box_mask(grid, &center, &vec![side; dim]);
        Ok(gaussian_blur(&sq.indicator(), 2.0 * grid.max_spacing()))
    } else {
        let other: Vec<f64> = center.iter().map(|c| -0.5 * c + rng.gen_range(-0.1..0.1) * r).collect();
        let (s1, s2) = (rng.gen_range(0.05..0.12) * r, rng.gen_range(0.05..0.12) * r);
        let amp = rng.gen_range(0.3..1.0);
        ScalarField::from_fn(grid.clone(), |x| {
            let d1: f64 = x.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum();
            let d2: f64 = x.iter().zip(&other).map(|(a, b)| (a - b).powi(2)).sum();
            (-d1 / (2.0 * s1 * s1)).exp() + amp * (-d2 / (2.0 * s2 * s2)).exp()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_interior_points() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5], [0.5, 0.0]];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!(Polygon::new(h).is_ok());
    }

    #[test]
    fn convex_masks_are_seeded_and_nonempty() {
        let g = Grid::cube(2, 64, 1.0).unwrap();
        let a = random_convex_mask(&g, &mut rng(4), 0.8).unwrap();
        let b = random_convex_mask(&g, &mut rng(4), 0.8).unwrap();
        assert_eq!(a, b);
        assert!(a.count() >= 16);
        let g3 = Grid::cube(3, 16, 1.0).unwrap();
        assert!(!random_convex_mask(&g3, &mut rng(1), 0.8).unwrap().is_empty());
    }

    #[test]
    fn polygons_are_valid() {
        let mut r = rng(9);
        for _ in 0..50 {
            let p = random_simple_polygon(&mut r, 12).unwrap();
            assert!(p.signed_area() > 0.0);
        }
    }

    #[test]
    fn sources_are_nonnegative() {
        let g = Grid::cube(2, 48, 1.0).unwrap();
        for seed in 0..4 {
            let f = off_center_source(&g, seed).unwrap();
            assert!(f.min() >= 0.0 && f.max() > 0.0);
            assert!(gaussian_mixture(&g, seed).unwrap().is_compact());
        }
    }
}
