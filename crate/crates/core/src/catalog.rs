//! In-memory catalog of cores, sample horizons, parameters and map layers.
//!
//! A [`Catalog`] is an immutable snapshot. Reloading builds a new one and the
//! caller swaps it in whole.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{bounding_rect, GeoPoint, GeoRect};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("unknown core `{0}`")]
    UnknownCore(String),
    #[error("duplicate core id `{0}`")]
    DuplicateCore(String),
    #[error("no cores inside the selection rectangle")]
    EmptySelection,
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("core `{core_id}`: horizon {top}-{bottom} cm overlaps {other_top}-{other_bottom} cm")]
    OverlappingHorizons {
        core_id: String,
        top: u32,
        bottom: u32,
        other_top: u32,
        other_bottom: u32,
    },
    #[error("invalid filter: date_from {0} is after date_to {1}")]
    InvalidFilter(NaiveDate, NaiveDate),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Core {
    pub core_id: String,
    pub location_name: String,
    pub date: NaiveDate,
    pub core_fate: String,
    pub position: GeoPoint,
    #[serde(default)]
    pub extra_measurements: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleHorizon {
    pub core_id: String,
    pub top_cm: u32,
    pub bottom_cm: u32,
    /// Sparse: a parameter absent from the map is missing for this horizon.
    pub params: BTreeMap<String, f64>,
}

impl SampleHorizon {
    pub fn thickness_cm(&self) -> u32 {
        self.bottom_cm - self.top_cm
    }

    pub fn label(&self) -> String {
        format!("{}-{} cm", self.top_cm, self.bottom_cm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ParameterKind {
    Physicochemical,
    Geochemical,
    Biological,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterInfo {
    pub name: String,
    pub kind: ParameterKind,
    pub observed_min: f64,
    pub observed_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Bathymetry,
    Photomosaic,
    Backscatter,
    Lidar,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapLayer {
    pub layer_id: String,
    pub title: String,
    pub kind: MapKind,
    /// Absolute path, resolved at load time.
    pub image_ref: PathBuf,
    pub bounds: GeoRect,
    pub native_resolution_cm: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoreFilter {
    pub location_name: Option<String>,
    pub date_from: Option<NaiveDate>,
    pub date_to: Option<NaiveDate>,
    pub core_fate: Option<String>,
}

impl CoreFilter {
    pub fn validate(&self) -> Result<(), CatalogError> {
        match (self.date_from, self.date_to) {
            (Some(a), Some(b)) if a > b => Err(CatalogError::InvalidFilter(a, b)),
            _ => Ok(()),
        }
    }

    pub fn matches(&self, core: &Core) -> bool {
        self.location_name
            .as_ref()
            .is_none_or(|l| *l == core.location_name)
            && self.core_fate.as_ref().is_none_or(|f| *f == core.core_fate)
            && self.date_from.is_none_or(|d| core.date >= d)
            && self.date_to.is_none_or(|d| core.date <= d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub core_ids: Vec<String>,
    pub hull: GeoRect,
}

/// One row of a depth profile resampled to a common step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampledEntry {
    pub depth_cm: u32,
    pub value: Option<f64>,
    /// Label of the source horizon; repeated on every duplicated entry.
    pub horizon: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreProfile {
    pub core_id: String,
    pub entries: Vec<ResampledEntry>,
}

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    cores: Vec<Core>,
    core_index: HashMap<String, usize>,
    horizons: HashMap<String, Vec<SampleHorizon>>,
    orphan_horizons: Vec<SampleHorizon>,
    parameters: BTreeMap<String, ParameterInfo>,
    maps: Vec<MapLayer>,
}

impl Catalog {
    /// Builds a snapshot. Horizons referencing unknown cores are retained
    /// separately and reported via [`Catalog::orphan_horizons`].
    pub fn new(
        mut cores: Vec<Core>,
        horizons: Vec<SampleHorizon>,
        maps: Vec<MapLayer>,
        kinds: &HashMap<String, ParameterKind>,
    ) -> Result<Self, CatalogError> {
        cores.sort_by(|a, b| (a.date, &a.core_id).cmp(&(b.date, &b.core_id)));
        let mut core_index = HashMap::with_capacity(cores.len());
        for (i, c) in cores.iter().enumerate() {
            if core_index.insert(c.core_id.clone(), i).is_some() {
                return Err(CatalogError::DuplicateCore(c.core_id.clone()));
            }
        }

        let mut parameters: BTreeMap<String, ParameterInfo> = BTreeMap::new();
        let mut by_core: HashMap<String, Vec<SampleHorizon>> = HashMap::new();
        let mut orphan_horizons = Vec::new();
        for h in horizons {
            for (name, &v) in &h.params {
                parameters
                    .entry(name.clone())
                    .and_modify(|p| {
                        p.observed_min = p.observed_min.min(v);
                        p.observed_max = p.observed_max.max(v);
                    })
                    .or_insert_with(|| ParameterInfo {
                        name: name.clone(),
                        kind: kinds.get(name).copied().unwrap_or_default(),
                        observed_min: v,
                        observed_max: v,
                    });
            }
            if core_index.contains_key(&h.core_id) {
                by_core.entry(h.core_id.clone()).or_default().push(h);
            } else {
                orphan_horizons.push(h);
            }
        }
        for (core_id, list) in by_core.iter_mut() {
            list.sort_by_key(|h| (h.top_cm, h.bottom_cm));
            for pair in list.windows(2) {
                if pair[1].top_cm < pair[0].bottom_cm {
                    return Err(CatalogError::OverlappingHorizons {
                        core_id: core_id.clone(),
                        top: pair[1].top_cm,
                        bottom: pair[1].bottom_cm,
                        other_top: pair[0].top_cm,
                        other_bottom: pair[0].bottom_cm,
                    });
                }
            }
        }

        Ok(Self {
            cores,
            core_index,
            horizons: by_core,
            orphan_horizons,
            parameters,
            maps,
        })
    }

    /// All cores, ordered by (date, core id).
    pub fn cores(&self) -> &[Core] {
        &self.cores
    }

    pub fn core(&self, core_id: &str) -> Option<&Core> {
        self.core_index.get(core_id).map(|&i| &self.cores[i])
    }

    pub fn parameters(&self) -> impl Iterator<Item = &ParameterInfo> {
        self.parameters.values()
    }

    pub fn parameter(&self, name: &str) -> Option<&ParameterInfo> {
        self.parameters.get(name)
    }

    pub fn maps(&self) -> &[MapLayer] {
        &self.maps
    }

    pub fn map(&self, layer_id: &str) -> Option<&MapLayer> {
        self.maps.iter().find(|m| m.layer_id == layer_id)
    }

    pub fn orphan_horizons(&self) -> &[SampleHorizon] {
        &self.orphan_horizons
    }

    pub fn horizon_count(&self) -> usize {
        self.horizons.values().map(Vec::len).sum::<usize>() + self.orphan_horizons.len()
    }

    /// Every horizon in the snapshot, attached ones first in core order.
    pub fn all_horizons(&self) -> impl Iterator<Item = &SampleHorizon> {
        self.cores
            .iter()
            .flat_map(|c| self.horizons.get(&c.core_id).into_iter().flatten())
            .chain(self.orphan_horizons.iter())
    }

    pub fn filter_cores(&self, filter: &CoreFilter) -> Vec<&Core> {
        self.cores.iter().filter(|c| filter.matches(c)).collect()
    }

    pub fn select_in_rect(
        &self,
        filter: &CoreFilter,
        rect: &GeoRect,
    ) -> Result<Selection, CatalogError> {
        let ids: Vec<String> = self
            .filter_cores(filter)
            .into_iter()
            .filter(|c| rect.contains(c.position))
            .map(|c| c.core_id.clone())
            .collect();
        self.select_ids(&ids)
    }

    /// Selection from explicit ids, deduplicated and kept in catalog order.
    pub fn select_ids<S: AsRef<str>>(&self, ids: &[S]) -> Result<Selection, CatalogError> {
        let mut wanted = BTreeSet::new();
        for id in ids {
            let id = id.as_ref();
            let idx = self
                .core_index
                .get(id)
                .ok_or_else(|| CatalogError::UnknownCore(id.to_owned()))?;
            wanted.insert(*idx);
        }
        if wanted.is_empty() {
            return Err(CatalogError::EmptySelection);
        }
        let cores: Vec<&Core> = wanted.into_iter().map(|i| &self.cores[i]).collect();
        let positions: Vec<GeoPoint> = cores.iter().map(|c| c.position).collect();
        Ok(Selection {
            core_ids: cores.iter().map(|c| c.core_id.clone()).collect(),
            hull: bounding_rect(&positions).expect("selection is non-empty"),
        })
    }

    pub fn horizons_of(&self, core_id: &str) -> Result<&[SampleHorizon], CatalogError> {
        if !self.core_index.contains_key(core_id) {
            return Err(CatalogError::UnknownCore(core_id.to_owned()));
        }
        Ok(self.horizons.get(core_id).map_or(&[], Vec::as_slice))
    }

    /// Smallest horizon thickness over the given cores, `None` if none have horizons.
    pub fn smallest_step<S: AsRef<str>>(&self, core_ids: &[S]) -> Option<u32> {
        core_ids
            .iter()
            .filter_map(|id| self.horizons.get(id.as_ref()))
            .flatten()
            .map(SampleHorizon::thickness_cm)
            .min()
    }

    /// Resample each selected core's profile to the smallest horizon
    /// thickness in the selection. A horizon `k` steps thick yields `k`
    /// entries sharing its value and label; uncovered depths are missing.
    pub fn resample_to_smallest_step(
        &self,
        selection: &Selection,
        parameter: &str,
    ) -> Result<Vec<CoreProfile>, CatalogError> {
        if !self.parameters.contains_key(parameter) {
            return Err(CatalogError::UnknownParameter(parameter.to_owned()));
        }
        let step = self.smallest_step(&selection.core_ids).unwrap_or(1);
        selection
            .core_ids
            .iter()
            .map(|id| self.resample_core(id, parameter, step))
            .collect()
    }

    pub fn resample_core(
        &self,
        core_id: &str,
        parameter: &str,
        step: u32,
    ) -> Result<CoreProfile, CatalogError> {
        let step = step.max(1);
        let horizons = self.horizons_of(core_id)?;
        let mut entries = Vec::new();
        if let (Some(first), Some(last_bottom)) =
            (horizons.first(), horizons.iter().map(|h| h.bottom_cm).max())
        {
            let mut depth = first.top_cm;
            let mut cursor = 0;
            while depth < last_bottom {
                while cursor < horizons.len() && horizons[cursor].bottom_cm <= depth {
                    cursor += 1;
                }
                let entry = match horizons.get(cursor) {
                    Some(h) if h.top_cm <= depth => ResampledEntry {
                        depth_cm: depth,
                        value: h.params.get(parameter).copied(),
                        horizon: Some(h.label()),
                    },
                    _ => ResampledEntry {
                        depth_cm: depth,
                        value: None,
                        horizon: None,
                    },
                };
                entries.push(entry);
                depth += step;
            }
        }
        Ok(CoreProfile {
            core_id: core_id.to_owned(),
            entries,
        })
    }
}
