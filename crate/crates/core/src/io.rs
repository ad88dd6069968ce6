//! JSON file formats for fields, masks, manifold grids and polygons.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, RegionMask, ScalarField};
use crate::manifold::{ManifoldField, WeightedRadialGrid};
use crate::perimeter::Polygon;

#[derive(Debug, Serialize, Deserialize)]
struct FieldFile {
    dim: usize,
    shape: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MaskFile {
    dim: usize,
    shape: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    members: Vec<u8>,
}

fn grid_from(dim: usize, shape: Vec<usize>, spacing: Vec<f64>, origin: Vec<f64>) -> Result<Grid> {
    if shape.len() != dim {
        return Err(Error::InvalidGrid(format!("dim is {dim} but shape has {} entries", shape.len())));
    }
    Grid::new(shape, spacing, origin)
}

pub fn field_from_json(text: &str) -> Result<ScalarField> {
    let f: FieldFile = serde_json::from_str(text)?;
    ScalarField::new(grid_from(f.dim, f.shape, f.spacing, f.origin)?, f.values)
}

pub fn field_to_json(f: &ScalarField) -> Result<String> {
    let g = f.grid();
    Ok(serde_json::to_string(&FieldFile {
        dim: g.dim(),
        shape: g.shape().to_vec(),
        spacing: g.spacing().to_vec(),
        origin: g.origin().to_vec(),
        values: f.values().to_vec(),
    })?)
}

pub fn mask_from_json(text: &str) -> Result<RegionMask> {
    let m: MaskFile = serde_json::from_str(text)?;
    if let Some(i) = m.members.iter().position(|&b| b > 1) {
        return Err(Error::InvalidArgument(format!("mask entry {i} is not 0 or 1")));
    }
    RegionMask::new(grid_from(m.dim, m.shape, m.spacing, m.origin)?, m.members.iter().map(|&b| b == 1).collect())
}

pub fn mask_to_json(m: &RegionMask) -> Result<String> {
    let g = m.grid();
    Ok(serde_json::to_string(&MaskFile {
        dim: g.dim(),
        shape: g.shape().to_vec(),
        spacing: g.spacing().to_vec(),
        origin: g.origin().to_vec(),
        members: m.members().iter().map(|&b| b as u8).collect(),
    })?)
}

#[derive(Debug, Deserialize)]
struct RadialGridFile {
    r_edges: Vec<f64>,
    phi: Vec<f64>,
    sigma_measure: f64,
    #[serde(default)]
    sigma_cells: Option<Vec<f64>>,
}

pub fn radial_grid_from_json(text: &str) -> Result<WeightedRadialGrid> {
    let g: RadialGridFile = serde_json::from_str(text)?;
    WeightedRadialGrid::new(g.r_edges, g.phi, g.sigma_measure, g.sigma_cells)
}

pub fn radial_grid_to_json(g: &WeightedRadialGrid) -> Result<String> {
    Ok(serde_json::to_string(g)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifoldValuesFile {
    values: Vec<f64>,
}

/// `{"values": [...]}` laid out radial-major, on a grid read separately.
pub fn manifold_field_from_json(text: &str, grid: WeightedRadialGrid) -> Result<ManifoldField> {
    let v: ManifoldValuesFile = serde_json::from_str(text)?;
    ManifoldField::new(grid, v.values)
}

pub fn manifold_field_to_json(f: &ManifoldField) -> Result<String> {
    Ok(serde_json::to_string(&ManifoldValuesFile { values: f.values().to_vec() })?)
}

/// `[[x, y], ...]`, counter-clockwise.
pub fn polygon_from_json(text: &str) -> Result<Polygon> {
    let v: Vec<[f64; 2]> = serde_json::from_str(text)?;
    Polygon::new(v)
}

pub fn polygon_to_json(p: &Polygon) -> Result<String> {
    Ok(serde_json::to_string(p.vertices())?)
}

pub fn read_field(path: &Path) -> Result<ScalarField> {
    field_from_json(&std::fs::read_to_string(path)?)
}

pub fn read_mask(path: &Path) -> Result<RegionMask> {
    mask_from_json(&std::fs::read_to_string(path)?)
}

pub fn read_radial_grid(path: &Path) -> Result<WeightedRadialGrid> {
    radial_grid_from_json(&std::fs::read_to_string(path)?)
}

pub fn read_polygon(path: &Path) -> Result<Polygon> {
    polygon_from_json(&std::fs::read_to_string(path)?)
}
