//! The interpolation request shared by the headless CLI and the HTTP
//! service, so both produce byte-identical grid documents.

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, CatalogError};
use crate::interp::{
    build_grid_spec, check_geometry, gather_sample_points, interpolate, GridLimits, GridSpec,
    InterpError, Method, SamplePoint, VoxelGrid,
};
use crate::vsup::{normalize_value, VsupError, VsupQuantizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VsupParams {
    pub layers: u32,
    pub branching: u32,
}

impl Default for VsupParams {
    fn default() -> Self {
        let q = VsupQuantizer::default();
        Self {
            layers: q.layers(),
            branching: q.branching(),
        }
    }
}

impl VsupParams {
    pub fn quantizer(&self) -> Result<VsupQuantizer, VsupError> {
        VsupQuantizer::new(self.layers, self.branching)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterpolationRequest {
    pub method: Method,
    pub parameter: String,
    pub cell_xy_cm: u32,
    pub core_ids: Vec<String>,
    #[serde(default)]
    pub padding_cells: u32,
    #[serde(default)]
    pub vsup: VsupParams,
}

impl InterpolationRequest {
    /// Same request with core ids sorted and deduplicated; the result does
    /// not depend on their order.
    pub fn canonical(&self) -> Self {
        let mut req = self.clone();
        req.core_ids.sort();
        req.core_ids.dedup();
        req
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationOutput {
    pub grid: VoxelGrid,
    pub warnings: Vec<String>,
}

/// A validated request with its grid and sample points, ready to run. All
/// input errors surface here; only the numerical fill remains.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedInterpolation {
    pub method: Method,
    pub parameter: String,
    pub spec: GridSpec,
    pub points: Vec<SamplePoint>,
    pub warnings: Vec<String>,
}

pub fn prepare_interpolation(
    catalog: &Catalog,
    request: &InterpolationRequest,
    limits: GridLimits,
) -> Result<PreparedInterpolation, InterpError> {
    if catalog.parameter(&request.parameter).is_none() {
        return Err(CatalogError::UnknownParameter(request.parameter.clone()).into());
    }
    let selection = catalog.select_ids(&request.core_ids)?;
    let spec = build_grid_spec(
        catalog,
        &selection,
        &request.parameter,
        request.cell_xy_cm,
        request.padding_cells,
        limits,
    )?;
    let gathered = gather_sample_points(catalog, &selection, &request.parameter, &spec.frame)?;
    if request.method == Method::Linear {
        check_geometry(&gathered.points, &spec)?;
    }
    Ok(PreparedInterpolation {
        method: request.method,
        parameter: request.parameter.clone(),
        spec,
        points: gathered.points,
        warnings: gathered.warnings,
    })
}

impl PreparedInterpolation {
    pub fn run(self) -> Result<InterpolationOutput, InterpError> {
        let grid = interpolate(self.method, &self.points, &self.spec, &self.parameter)?;
        Ok(InterpolationOutput {
            grid,
            warnings: self.warnings,
        })
    }
}

pub fn run_interpolation(
    catalog: &Catalog,
    request: &InterpolationRequest,
    limits: GridLimits,
) -> Result<InterpolationOutput, InterpError> {
    prepare_interpolation(catalog, request, limits)?.run()
}

/// Per-voxel palette bins; `None` for empty voxels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VsupBins {
    pub layers: u32,
    pub branching: u32,
    pub value_min: f64,
    pub value_max: f64,
    pub layer: Vec<Option<u32>>,
    pub bin: Vec<Option<u32>>,
}

/// Quantizes every voxel, normalizing values against `[value_min, value_max]`.
pub fn vsup_bins(grid: &VoxelGrid, q: &VsupQuantizer, value_min: f64, value_max: f64) -> VsupBins {
    let (layer, bin) = grid
        .values
        .iter()
        .zip(&grid.uncertainty)
        .map(|(v, &u)| match v {
            Some(v) => {
                let b = q.quantize(normalize_value(*v, value_min, value_max), u);
                (Some(b.layer), Some(b.bin))
            }
            None => (None, None),
        })
        .unzip();
    VsupBins {
        layers: q.layers(),
        branching: q.branching(),
        value_min,
        value_max,
        layer,
        bin,
    }
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, HashMap};

    use chrono::NaiveDate;

    use super::*;
    use crate::catalog::{Core, SampleHorizon};
    use crate::geo::GeoPoint;

    fn catalog() -> Catalog {
        let cores = [
            ("A", 23.9540, -108.8630),
            ("B", 23.9545, -108.8624),
            ("C", 23.9548, -108.8631),
        ]
        .iter()
        .map(|&(id, lat, lon)| Core {
            core_id: id.into(),
            location_name: "Auka".into(),
            date: NaiveDate::from_ymd_opt(2018, 11, 14).unwrap(),
            core_fate: "Geochem".into(),
            position: GeoPoint::new(lat, lon).unwrap(),
            extra_measurements: BTreeMap::new(),
        })
        .collect();
        let horizons = ["A", "B", "C"]
            .iter()
            .enumerate()
            .flat_map(|(i, id)| {
                (0..6).map(move |top| SampleHorizon {
                    core_id: id.to_string(),
                    top_cm: top * 2,
                    bottom_cm: top * 2 + 2,
                    params: [("Sulfide".to_owned(), i as f64 + top as f64 * 0.5)].into(),
                })
            })
            .collect();
        Catalog::new(cores, horizons, vec![], &HashMap::new()).unwrap()
    }

    fn request(method: Method, ids: &[&str]) -> InterpolationRequest {
        InterpolationRequest {
            method,
            parameter: "Sulfide".into(),
            cell_xy_cm: 777,
            core_ids: ids.iter().map(|s| s.to_string()).collect(),
            padding_cells: 0,
            vsup: VsupParams::default(),
        }
    }

    #[test]
    fn core_order_does_not_matter() {
        let cat = catalog();
        let a = run_interpolation(
            &cat,
            &request(Method::Sibson, &["C", "A", "B"]),
            GridLimits::default(),
        )
        .unwrap();
        let b = run_interpolation(
            &cat,
            &request(Method::Sibson, &["A", "B", "C"]),
            GridLimits::default(),
        )
        .unwrap();
        assert_eq!(a.grid.to_json(), b.grid.to_json());
        assert_eq!(
            request(Method::Sibson, &["C", "A", "C"])
                .canonical()
                .core_ids,
            vec!["A".to_owned(), "C".to_owned()]
        );
    }

    #[test]
    fn linear_runs_with_three_cores_and_leaves_empties() {
        let cat = catalog();
        let out = run_interpolation(
            &cat,
            &request(Method::Linear, &["A", "B", "C"]),
            GridLimits::default(),
        )
        .unwrap();
        let g = &out.grid;
        assert_eq!(g.spec.nz, 12);
        assert!(g.values.iter().any(Option::is_none));
        let info = cat.parameter("Sulfide").unwrap();
        let bins = vsup_bins(
            g,
            &VsupParams::default().quantizer().unwrap(),
            info.observed_min,
            info.observed_max,
        );
        for (v, (l, b)) in g.values.iter().zip(bins.layer.iter().zip(&bins.bin)) {
            assert_eq!(v.is_some(), l.is_some());
            assert_eq!(l.is_some(), b.is_some());
        }
        // Sample voxels have zero uncertainty and so sit in the finest layer.
        for (i, m) in g.sample_mask.iter().enumerate() {
            if *m {
                assert_eq!(bins.layer[i], Some(3));
            }
        }
    }

    #[test]
    fn errors_propagate() {
        let cat = catalog();
        assert!(matches!(
            run_interpolation(
                &cat,
                &request(Method::Linear, &["A", "B"]),
                GridLimits::default()
            ),
            Err(InterpError::Degenerate(_))
        ));
        assert!(matches!(
            run_interpolation(
                &cat,
                &request(Method::Sibson, &["Z"]),
                GridLimits::default()
            ),
            Err(InterpError::Catalog(_))
        ));
        let mut unknown = request(Method::Sibson, &["A"]);
        unknown.parameter = "Sulfate".into();
        assert_eq!(
            prepare_interpolation(&cat, &unknown, GridLimits::default()),
            Err(InterpError::Catalog(CatalogError::UnknownParameter(
                "Sulfate".into()
            )))
        );
        let mut bad = request(Method::Sibson, &["A"]);
        bad.cell_xy_cm = 75;
        assert_eq!(
            run_interpolation(&cat, &bad, GridLimits::default()),
            Err(InterpError::InvalidGrid(75))
        );
    }

    #[test]
    fn request_json_defaults() {
        let req: InterpolationRequest = serde_json::from_str(
            r#"{"method":"sibson","parameter":"Sulfide","cell_xy_cm":77,"core_ids":["A"]}"#,
        )
        .unwrap();
        assert_eq!(req.padding_cells, 0);
        assert_eq!(
            req.vsup,
            VsupParams {
                layers: 4,
                branching: 2
            }
        );
    }
}
