//! Voxel grids between cores, filled by piecewise-linear (Delaunay
//! barycentric) or discrete natural-neighbor interpolation, with a
//! distance-to-nearest-sample uncertainty field.
//!
//! All geometry here runs in voxel-index space: column centres and 1 cm
//! depth slices sit on integer coordinates and one step along any axis is
//! one unit. Results therefore depend on the chosen `cell_xy_cm`.

pub mod delaunay;
pub mod grid;
pub mod linear;
pub mod nearest;
pub mod sibson;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, CatalogError, Selection};
use crate::geo::{make_frame, GeoError, LocalFrame};

pub use grid::{
    clip_mask, extract_virtual_core, AxisCut, ClipSpec, GridDocument, GridSpec, Method,
    VirtualCore, VirtualHorizon, VoxelGrid,
};
pub use linear::{check_geometry, LinearInterpolator};
pub use nearest::{nearest_sample_field, NearestField};
pub use sibson::sibson_scatter;

pub const DEFAULT_MAX_VOXELS: usize = 2_000_000;

/// Horizontal cell sizes must be whole multiples of this (the core diameter).
pub const CELL_MULTIPLE_CM: u32 = 7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpError {
    #[error("grid size {0} cm is not a positive multiple of 7 cm")]
    InvalidGrid(u32),
    #[error("grid too large: {count} voxels exceeds the cap of {cap}")]
    TooLarge { count: u128, cap: usize },
    #[error("no sample data for parameter `{0}` in the selection")]
    NoData(String),
    #[error("{0}; use the sibson method instead")]
    Degenerate(String),
    #[error("sample from core `{core_id}` at {depth_cm} cm lies outside the grid")]
    OutsideGrid { core_id: String, depth_cm: u32 },
    #[error("position ({lat}, {lon}) is outside the grid extent")]
    OutOfBounds { lat: f64, lon: f64 },
    #[error("malformed grid document: {0}")]
    Format(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridLimits {
    pub max_voxels: usize,
}

impl Default for GridLimits {
    fn default() -> Self {
        Self {
            max_voxels: DEFAULT_MAX_VOXELS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    /// Metres east/north in the grid frame.
    pub x: f64,
    pub y: f64,
    /// The 1 cm slice `[depth_cm, depth_cm + 1)`.
    pub depth_cm: u32,
    pub value: f64,
    pub core_id: String,
    pub top_cm: u32,
    pub bottom_cm: u32,
}

/// A voxel holding real sample data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub voxel: usize,
    pub ix: usize,
    pub iy: usize,
    pub iz: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatheredPoints {
    pub points: Vec<SamplePoint>,
    pub warnings: Vec<String>,
}

pub fn check_cell_size(cell_xy_cm: u32) -> Result<(), InterpError> {
    if cell_xy_cm == 0 || !cell_xy_cm.is_multiple_of(CELL_MULTIPLE_CM) {
        return Err(InterpError::InvalidGrid(cell_xy_cm));
    }
    Ok(())
}

/// Grid over the selection hull, centred on it and padded by
/// `padding_cells` on every side. Depth runs to the deepest horizon that
/// carries `parameter`.
pub fn build_grid_spec(
    catalog: &Catalog,
    selection: &Selection,
    parameter: &str,
    cell_xy_cm: u32,
    padding_cells: u32,
    limits: GridLimits,
) -> Result<GridSpec, InterpError> {
    check_cell_size(cell_xy_cm)?;
    let mut nz = 0u32;
    for id in &selection.core_ids {
        for h in catalog.horizons_of(id)? {
            if h.params.contains_key(parameter) {
                nz = nz.max(h.bottom_cm);
            }
        }
    }
    if nz == 0 {
        return Err(InterpError::NoData(parameter.to_owned()));
    }

    let hull = selection.hull;
    let frame = make_frame(hull.center())?;
    let width_m = (hull.east() - hull.west()) * frame.meters_per_deg_lon;
    let height_m = (hull.north() - hull.south()) * frame.meters_per_deg_lat;
    let cell_m = cell_xy_cm as f64 / 100.0;
    let pad = 2 * padding_cells as u128;
    let nx = (width_m / cell_m).floor() as u128 + 1 + pad;
    let ny = (height_m / cell_m).floor() as u128 + 1 + pad;
    let count = nx * ny * nz as u128;
    if count > limits.max_voxels as u128 {
        return Err(InterpError::TooLarge {
            count,
            cap: limits.max_voxels,
        });
    }
    let (nx, ny) = (nx as usize, ny as usize);
    let x0_m = -(nx as f64) * cell_m / 2.0;
    let y0_m = -(ny as f64) * cell_m / 2.0;
    Ok(GridSpec {
        origin: frame.unproject(x0_m, y0_m)?,
        frame,
        x0_m,
        y0_m,
        cell_xy_cm,
        cell_z_cm: 1,
        nx,
        ny,
        nz: nz as usize,
    })
}

/// One point per core per centimetre of every horizon carrying `parameter`.
/// Points from different cores at the same position and depth are averaged.
pub fn gather_sample_points(
    catalog: &Catalog,
    selection: &Selection,
    parameter: &str,
    frame: &LocalFrame,
) -> Result<GatheredPoints, InterpError> {
    let mut raw = Vec::new();
    for id in &selection.core_ids {
        let core = catalog
            .core(id)
            .ok_or_else(|| CatalogError::UnknownCore(id.clone()))?;
        let (x, y) = frame.project(core.position);
        for h in catalog.horizons_of(id)? {
            let Some(&value) = h.params.get(parameter) else {
                continue;
            };
            for depth_cm in h.top_cm..h.bottom_cm {
                raw.push(SamplePoint {
                    x,
                    y,
                    depth_cm,
                    value,
                    core_id: id.clone(),
                    top_cm: h.top_cm,
                    bottom_cm: h.bottom_cm,
                });
            }
        }
    }
    if raw.is_empty() {
        return Err(InterpError::NoData(parameter.to_owned()));
    }
    Ok(merge_coincident(raw))
}

fn mean_sorted(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Averages points sharing `(x, y, depth)`; the merged point keeps the
/// first occurrence's slot and joins the core ids.
pub fn merge_coincident(points: Vec<SamplePoint>) -> GatheredPoints {
    let mut groups: BTreeMap<(u64, u64, u32), Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        groups
            .entry((p.x.to_bits(), p.y.to_bits(), p.depth_cm))
            .or_default()
            .push(i);
    }
    if groups.len() == points.len() {
        return GatheredPoints {
            points,
            warnings: Vec::new(),
        };
    }
    let mut merged_into: Vec<Option<usize>> = vec![None; points.len()];
    let mut warnings = Vec::new();
    for members in groups.values().filter(|m| m.len() > 1) {
        let first = members[0];
        for &m in &members[1..] {
            merged_into[m] = Some(first);
        }
    }
    let mut out = Vec::with_capacity(groups.len());
    for (i, p) in points.iter().enumerate() {
        if merged_into[i].is_some() {
            continue;
        }
        let members = &groups[&(p.x.to_bits(), p.y.to_bits(), p.depth_cm)];
        if members.len() == 1 {
            out.push(p.clone());
            continue;
        }
        let mut values: Vec<f64> = members.iter().map(|&m| points[m].value).collect();
        let mut ids: Vec<&str> = members
            .iter()
            .map(|&m| points[m].core_id.as_str())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        let mut merged = p.clone();
        merged.value = mean_sorted(&mut values);
        merged.core_id = ids.join("+");
        warnings.push(format!(
            "cores {} coincide at {} cm; averaged {} values",
            ids.join(", "),
            p.depth_cm,
            members.len()
        ));
        out.push(merged);
    }
    GatheredPoints {
        points: out,
        warnings,
    }
}

/// Snaps points to the voxels containing them. Points sharing a voxel become
/// one site carrying their mean. Sites are returned sorted by voxel index.
pub fn snap_to_sites(points: &[SamplePoint], spec: &GridSpec) -> Result<Vec<Site>, InterpError> {
    let mut by_voxel: BTreeMap<usize, (usize, usize, usize, Vec<f64>)> = BTreeMap::new();
    for p in points {
        let outside = || InterpError::OutsideGrid {
            core_id: p.core_id.clone(),
            depth_cm: p.depth_cm,
        };
        let (ix, iy) = spec.column_of(p.x, p.y).ok_or_else(outside)?;
        let iz = p.depth_cm as usize;
        if iz >= spec.nz {
            return Err(outside());
        }
        by_voxel
            .entry(spec.index(ix, iy, iz))
            .or_insert_with(|| (ix, iy, iz, Vec::new()))
            .3
            .push(p.value);
    }
    Ok(by_voxel
        .into_iter()
        .map(|(voxel, (ix, iy, iz, mut values))| Site {
            voxel,
            ix,
            iy,
            iz,
            value: if values.len() == 1 {
                values[0]
            } else {
                mean_sorted(&mut values)
            },
        })
        .collect())
}

/// `d(q) / max d`, so sample voxels get 0 and the farthest voxel exactly 1.
/// A grid with no positive distance is uniformly 0.
pub fn uncertainty_field(grid: &mut VoxelGrid, field: &NearestField) {
    let max = field.max_dist2();
    grid.uncertainty = if max == 0 {
        vec![0.0; field.dist2.len()]
    } else {
        let max_d = (max as f64).sqrt();
        field
            .dist2
            .iter()
            .map(|&d2| (d2 as f64).sqrt() / max_d)
            .collect()
    };
}

fn assemble(
    spec: &GridSpec,
    parameter: &str,
    method: Method,
    mut values: Vec<Option<f64>>,
    sites: &[Site],
    field: &NearestField,
) -> VoxelGrid {
    let mut sample_mask = vec![false; spec.len()];
    for s in sites {
        sample_mask[s.voxel] = true;
        values[s.voxel] = Some(s.value);
    }
    let mut grid = VoxelGrid {
        spec: spec.clone(),
        parameter: parameter.to_owned(),
        method,
        values,
        uncertainty: Vec::new(),
        sample_mask,
    };
    uncertainty_field(&mut grid, field);
    grid
}

pub fn interpolate_linear(
    points: &[SamplePoint],
    spec: &GridSpec,
    parameter: &str,
) -> Result<VoxelGrid, InterpError> {
    let sites = snap_to_sites(points, spec)?;
    let interp = LinearInterpolator::new(points, spec)?;
    let field = nearest_sample_field(&sites, spec);
    Ok(assemble(
        spec,
        parameter,
        Method::Linear,
        interp.fill(spec),
        &sites,
        &field,
    ))
}

pub fn interpolate_sibson(
    points: &[SamplePoint],
    spec: &GridSpec,
    parameter: &str,
) -> Result<VoxelGrid, InterpError> {
    let sites = snap_to_sites(points, spec)?;
    if sites.is_empty() {
        return Err(InterpError::NoData(parameter.to_owned()));
    }
    let field = nearest_sample_field(&sites, spec);
    let values = sibson_scatter(&sites, &field, spec)
        .into_iter()
        .map(Some)
        .collect();
    Ok(assemble(
        spec,
        parameter,
        Method::Sibson,
        values,
        &sites,
        &field,
    ))
}

pub fn interpolate(
    method: Method,
    points: &[SamplePoint],
    spec: &GridSpec,
    parameter: &str,
) -> Result<VoxelGrid, InterpError> {
    match method {
        Method::Linear => interpolate_linear(points, spec, parameter),
        Method::Sibson => interpolate_sibson(points, spec, parameter),
    }
}
