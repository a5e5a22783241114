use serde::{Deserialize, Serialize};

use super::InterpError;
use crate::geo::{GeoPoint, LocalFrame};

pub const GRID_FORMAT: &str = "voxel-grid";
pub const GRID_FORMAT_VERSION: u32 = 1;

/// Anisotropic voxel lattice. Voxel `(ix, iy, iz)` covers
/// `[x0 + ix·cell, x0 + (ix+1)·cell)` east, the same north, and depth
/// `[iz, iz+1)` cm below the seafloor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Southwest corner.
    pub origin: GeoPoint,
    pub frame: LocalFrame,
    /// Southwest corner in `frame` metres.
    pub x0_m: f64,
    pub y0_m: f64,
    pub cell_xy_cm: u32,
    pub cell_z_cm: u32,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_xy_m(&self) -> f64 {
        self.cell_xy_cm as f64 / 100.0
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.ny + iy) * self.nx + ix
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let ix = idx % self.nx;
        let rest = idx / self.nx;
        (ix, rest % self.ny, rest / self.ny)
    }

    /// Centre of column `(ix, iy)` in frame metres.
    pub fn column_center_m(&self, ix: usize, iy: usize) -> (f64, f64) {
        let c = self.cell_xy_m();
        (
            self.x0_m + (ix as f64 + 0.5) * c,
            self.y0_m + (iy as f64 + 0.5) * c,
        )
    }

    /// Continuous index-space coordinates; column centres sit on integers.
    pub fn to_index_space(&self, x_m: f64, y_m: f64) -> (f64, f64) {
        let c = self.cell_xy_m();
        ((x_m - self.x0_m) / c - 0.5, (y_m - self.y0_m) / c - 0.5)
    }

    /// Column containing a point in frame metres. Points within a hair of the
    /// outer edge are assigned to the edge column.
    pub fn column_of(&self, x_m: f64, y_m: f64) -> Option<(usize, usize)> {
        let c = self.cell_xy_m();
        let locate = |v: f64, origin: f64, n: usize| {
            let u = (v - origin) / c;
            const EDGE: f64 = 1e-9;
            if !(-EDGE..=n as f64 + EDGE).contains(&u) {
                return None;
            }
            Some((u.floor().max(0.0) as usize).min(n - 1))
        };
        Some((
            locate(x_m, self.x0_m, self.nx)?,
            locate(y_m, self.y0_m, self.ny)?,
        ))
    }

    pub fn column_of_geo(&self, p: GeoPoint) -> Option<(usize, usize)> {
        let (x, y) = self.frame.project(p);
        self.column_of(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Linear,
    Sibson,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Linear => "linear",
            Method::Sibson => "sibson",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Method::Linear),
            "sibson" | "natural-neighbor" | "natural_neighbor" => Ok(Method::Sibson),
            other => Err(format!(
                "unknown method `{other}` (expected linear or sibson)"
            )),
        }
    }
}

/// Dense voxel arrays, all in index order (`ix` fastest, then `iy`, then `iz`).
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub spec: GridSpec,
    pub parameter: String,
    pub method: Method,
    /// `None` marks an empty voxel (outside the linear method's hull).
    pub values: Vec<Option<f64>>,
    pub uncertainty: Vec<f64>,
    pub sample_mask: Vec<bool>,
}

impl VoxelGrid {
    pub fn value_range(&self) -> Option<(f64, f64)> {
        self.values
            .iter()
            .flatten()
            .fold(None, |acc, &v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }

    pub fn to_document(&self) -> GridDocument {
        let range = self.value_range();
        GridDocument {
            format: GRID_FORMAT.to_owned(),
            version: GRID_FORMAT_VERSION,
            parameter: self.parameter.clone(),
            method: self.method,
            spec: self.spec.clone(),
            value_min: range.map(|r| r.0),
            value_max: range.map(|r| r.1),
            values: self.values.clone(),
            uncertainty: self.uncertainty.clone(),
            sample_mask: self.sample_mask.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("grid documents are serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, InterpError> {
        let doc: GridDocument =
            serde_json::from_str(text).map_err(|e| InterpError::Format(e.to_string()))?;
        doc.into_grid()
    }
}

/// Wire and file form of a [`VoxelGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDocument {
    pub format: String,
    pub version: u32,
    pub parameter: String,
    pub method: Method,
    pub spec: GridSpec,
    pub value_min: Option<f64>,
    pub value_max: Option<f64>,
    pub values: Vec<Option<f64>>,
    pub uncertainty: Vec<f64>,
    pub sample_mask: Vec<bool>,
}

impl GridDocument {
    pub fn into_grid(self) -> Result<VoxelGrid, InterpError> {
        if self.format != GRID_FORMAT || self.version != GRID_FORMAT_VERSION {
            return Err(InterpError::Format(format!(
                "unsupported grid format `{}` version {}",
                self.format, self.version
            )));
        }
        let n = self.spec.len();
        if self.values.len() != n || self.uncertainty.len() != n || self.sample_mask.len() != n {
            return Err(InterpError::Format(format!(
                "array lengths {}/{}/{} do not match {n} voxels",
                self.values.len(),
                self.uncertainty.len(),
                self.sample_mask.len()
            )));
        }
        Ok(VoxelGrid {
            spec: self.spec,
            parameter: self.parameter,
            method: self.method,
            values: self.values,
            uncertainty: self.uncertainty,
            sample_mask: self.sample_mask,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualHorizon {
    pub horizon: String,
    pub top_cm: u32,
    pub bottom_cm: u32,
    pub value: Option<f64>,
    pub uncertainty: f64,
    pub interpolated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualCore {
    pub position: GeoPoint,
    pub parameter: String,
    pub method: Method,
    pub cell_xy_cm: u32,
    pub horizons: Vec<VirtualHorizon>,
}

/// The vertical voxel column under `p`, one record per centimetre.
pub fn extract_virtual_core(grid: &VoxelGrid, p: GeoPoint) -> Result<VirtualCore, InterpError> {
    let spec = &grid.spec;
    let (ix, iy) = spec.column_of_geo(p).ok_or(InterpError::OutOfBounds {
        lat: p.lat(),
        lon: p.lon(),
    })?;
    let horizons = (0..spec.nz)
        .map(|iz| {
            let i = spec.index(ix, iy, iz);
            VirtualHorizon {
                horizon: format!("{}-{} cm", iz, iz + 1),
                top_cm: iz as u32,
                bottom_cm: iz as u32 + 1,
                value: grid.values[i],
                uncertainty: grid.uncertainty[i],
                interpolated: !grid.sample_mask[i],
            }
        })
        .collect();
    Ok(VirtualCore {
        position: p,
        parameter: grid.parameter.clone(),
        method: grid.method,
        cell_xy_cm: spec.cell_xy_cm,
        horizons,
    })
}

/// A single-ended cut along one axis at voxel index `at`. The cut region is
/// `index >= at`, or `index < at` when flipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisCut {
    pub at: usize,
    #[serde(default)]
    pub flip: bool,
}

impl AxisCut {
    fn cuts(&self, i: usize) -> bool {
        (i >= self.at) != self.flip
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClipSpec {
    pub value_range: Option<(f64, f64)>,
    pub x: Option<AxisCut>,
    pub y: Option<AxisCut>,
    pub z: Option<AxisCut>,
}

/// Per-voxel visibility. A voxel is hidden when its value falls outside
/// `value_range` (empty voxels count as outside), or when it lies inside
/// every active axis cut at once.
pub fn clip_mask(grid: &VoxelGrid, clip: &ClipSpec) -> Vec<bool> {
    let spec = &grid.spec;
    let cuts = [clip.x, clip.y, clip.z];
    let any_cut = cuts.iter().any(Option::is_some);
    grid.values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let in_range = match clip.value_range {
                None => true,
                Some((lo, hi)) => v.is_some_and(|v| v >= lo && v <= hi),
            };
            let (ix, iy, iz) = spec.coords(i);
            let removed = any_cut
                && cuts
                    .iter()
                    .zip([ix, iy, iz])
                    .all(|(cut, idx)| cut.is_none_or(|c| c.cuts(idx)));
            in_range && !removed
        })
        .collect()
}
