//! Parsing and validation of core tables, sample tables and map manifests,
//! and the on-disk workspace layout that bundles them.
//!
//! Row-level problems never abort a load; they are collected in an
//! [`IngestReport`] with 1-based row numbers (the header is row 1). Only
//! structural problems such as a missing required column are fatal.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{
    Catalog, CatalogError, Core, MapKind, MapLayer, ParameterKind, SampleHorizon,
};
use crate::geo::{GeoPoint, GeoRect};

pub const CORES_FILE: &str = "cores.csv";
pub const SAMPLES_FILE: &str = "samples.csv";
pub const MAPS_FILE: &str = "maps.json";
pub const PARAMETERS_FILE: &str = "parameters.json";
pub const ANNOTATIONS_FILE: &str = "annotations.json";
pub const IMAGES_DIR: &str = "images";

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{file}: missing required column `{column}`")]
    MissingColumn { file: String, column: String },
    #[error("{file}: {message}")]
    Csv { file: String, message: String },
    #[error("invalid date `{0}`: expected MM-DD-YY or YYYY-MM-DD")]
    Date(String),
    #[error("map manifest: {0}")]
    Manifest(String),
    #[error("map manifest: duplicate layer id `{0}`")]
    DuplicateLayer(String),
    #[error("parameter manifest: {0}")]
    ParameterManifest(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowMessage {
    pub source: String,
    pub row: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub cores_loaded: usize,
    pub horizons_loaded: usize,
    pub parameters_discovered: usize,
    pub warnings: Vec<RowMessage>,
    pub errors: Vec<RowMessage>,
}

impl IngestReport {
    pub fn succeeded(&self) -> bool {
        self.errors.is_empty()
    }

    fn warn(&mut self, source: &str, row: usize, message: impl Into<String>) {
        self.warnings.push(RowMessage {
            source: source.to_owned(),
            row,
            message: message.into(),
        });
    }

    fn error(&mut self, source: &str, row: usize, message: impl Into<String>) {
        self.errors.push(RowMessage {
            source: source.to_owned(),
            row,
            message: message.into(),
        });
    }

    fn absorb(&mut self, other: IngestReport) {
        self.warnings.extend(other.warnings);
        self.errors.extend(other.errors);
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "cores_loaded={}\nhorizons_loaded={}\nparameters_discovered={}\nwarnings={}\nerrors={}\n",
            self.cores_loaded,
            self.horizons_loaded,
            self.parameters_discovered,
            self.warnings.len(),
            self.errors.len()
        );
        for m in &self.errors {
            let _ = writeln!(out, "error: {} row {}: {}", m.source, m.row, m.message);
        }
        for m in &self.warnings {
            let _ = writeln!(out, "warning: {} row {}: {}", m.source, m.row, m.message);
        }
        out
    }
}

/// Accepts `MM-DD-YY` (years 2000-2099) and ISO `YYYY-MM-DD`.
pub fn parse_date(text: &str) -> Result<NaiveDate, IngestError> {
    let t = text.trim();
    let fail = || IngestError::Date(t.to_owned());
    let parts: Vec<&str> = t.split('-').collect();
    if parts.len() != 3
        || parts
            .iter()
            .any(|p| p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()))
    {
        return Err(fail());
    }
    let num = |s: &str| s.parse::<u32>().map_err(|_| fail());
    let (year, month, day) = match (parts[0].len(), parts[1].len(), parts[2].len()) {
        (4, 2, 2) => (num(parts[0])? as i32, num(parts[1])?, num(parts[2])?),
        (1..=2, 1..=2, 2) => (2000 + num(parts[2])? as i32, num(parts[0])?, num(parts[1])?),
        _ => return Err(fail()),
    };
    NaiveDate::from_ymd_opt(year, month, day).ok_or_else(fail)
}

/// Parses `"a-b cm"` (suffix optional, whitespace tolerated) into `(a, b)`.
pub fn parse_horizon(text: &str) -> Result<(u32, u32), String> {
    let t = text.trim();
    let t = match t.len().checked_sub(2) {
        Some(cut) if t.is_char_boundary(cut) && t[cut..].eq_ignore_ascii_case("cm") => {
            t[..cut].trim_end()
        }
        _ => t,
    };
    let (a, b) = t
        .split_once('-')
        .ok_or_else(|| format!("malformed horizon `{text}`: expected `top-bottom cm`"))?;
    let parse = |s: &str| {
        s.trim().parse::<u32>().map_err(|_| {
            format!(
                "malformed horizon `{text}`: `{}` is not a whole number of cm",
                s.trim()
            )
        })
    };
    let (top, bottom) = (parse(a)?, parse(b)?);
    if bottom <= top {
        return Err(format!(
            "horizon `{text}`: bottom {bottom} must exceed top {top}"
        ));
    }
    Ok((top, bottom))
}

fn normalize_header(h: &str) -> String {
    h.chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

struct Table {
    headers: Vec<String>,
    normalized: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    fn column(&self, file: &str, name: &str) -> Result<usize, IngestError> {
        let key = normalize_header(name);
        self.normalized
            .iter()
            .position(|h| *h == key)
            .ok_or_else(|| IngestError::MissingColumn {
                file: file.to_owned(),
                column: name.to_owned(),
            })
    }
}

fn read_table(file: &str, text: &str, report: &mut IngestReport) -> Result<Table, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| IngestError::Csv {
            file: file.to_owned(),
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_owned)
        .collect();
    let normalized = headers.iter().map(|h| normalize_header(h)).collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        match record {
            Ok(r) => {
                if r.iter().all(str::is_empty) {
                    continue;
                }
                rows.push((row, r.iter().map(str::to_owned).collect()));
            }
            Err(e) => report.error(file, row, e.to_string()),
        }
    }
    Ok(Table {
        headers,
        normalized,
        rows,
    })
}

fn cell(row: &[String], idx: usize) -> &str {
    row.get(idx).map_or("", String::as_str)
}

fn parse_number(s: &str) -> Option<Result<f64, ()>> {
    if s.is_empty() {
        return None;
    }
    Some(s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or(()))
}

const CORE_COLUMNS: [&str; 6] = [
    "Core ID",
    "Location",
    "Date",
    "Core Fate",
    "Latitude",
    "Longitude",
];

pub fn parse_core_csv(text: &str) -> Result<(Vec<Core>, IngestReport), IngestError> {
    let (cores, report) = parse_core_rows(text)?;
    Ok((cores.into_iter().map(|(_, c)| c).collect(), report))
}

fn parse_core_rows(text: &str) -> Result<(Vec<(usize, Core)>, IngestReport), IngestError> {
    let mut report = IngestReport::default();
    let table = read_table(CORES_FILE, text, &mut report)?;
    let mut idx = [0usize; 6];
    for (slot, name) in idx.iter_mut().zip(CORE_COLUMNS) {
        *slot = table.column(CORES_FILE, name)?;
    }
    let [id_col, loc_col, date_col, fate_col, lat_col, lon_col] = idx;
    // A combined core+sample table carries a Horizon column; its other
    // columns are sample parameters, not core-level measurements.
    let combined = table.column(CORES_FILE, "Horizon").is_ok();
    let extra_cols: Vec<usize> = if combined {
        Vec::new()
    } else {
        (0..table.headers.len())
            .filter(|i| !idx.contains(i))
            .collect()
    };

    let mut cores: Vec<(usize, Core)> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (row, cells) in &table.rows {
        let row = *row;
        let core_id = cell(cells, id_col);
        if core_id.is_empty() {
            report.error(CORES_FILE, row, "empty Core ID");
            continue;
        }
        let date = match parse_date(cell(cells, date_col)) {
            Ok(d) => d,
            Err(e) => {
                report.error(CORES_FILE, row, e.to_string());
                continue;
            }
        };
        let coord = |col: usize, name: &str| {
            cell(cells, col)
                .parse::<f64>()
                .map_err(|_| format!("unparseable {name} `{}`", cell(cells, col)))
        };
        let position = match (coord(lat_col, "Latitude"), coord(lon_col, "Longitude")) {
            (Ok(lat), Ok(lon)) => match GeoPoint::new(lat, lon) {
                Ok(p) => p,
                Err(e) => {
                    report.error(CORES_FILE, row, e.to_string());
                    continue;
                }
            },
            (Err(e), _) | (_, Err(e)) => {
                report.error(CORES_FILE, row, e);
                continue;
            }
        };
        let mut extra_measurements = BTreeMap::new();
        for &c in &extra_cols {
            if let Some(Ok(v)) = parse_number(cell(cells, c)) {
                extra_measurements.insert(table.headers[c].clone(), v);
            }
        }
        let core = Core {
            core_id: core_id.to_owned(),
            location_name: cell(cells, loc_col).to_owned(),
            date,
            core_fate: cell(cells, fate_col).to_owned(),
            position,
            extra_measurements,
        };
        match seen.get(core_id) {
            Some(&i) if cores[i].1 == core => {}
            Some(&i) => report.error(
                CORES_FILE,
                row,
                format!(
                    "duplicate Core ID `{core_id}` conflicts with row {}",
                    cores[i].0
                ),
            ),
            None => {
                seen.insert(core_id.to_owned(), cores.len());
                cores.push((row, core));
            }
        }
    }
    report.cores_loaded = cores.len();
    Ok((cores, report))
}

/// Core-level identity columns that may appear in a combined table and are
/// never treated as sample parameters.
const SAMPLE_SKIPPED_COLUMNS: [&str; 5] = ["location", "date", "corefate", "latitude", "longitude"];

pub fn parse_sample_csv(text: &str) -> Result<(Vec<SampleHorizon>, IngestReport), IngestError> {
    let (rows, report) = parse_sample_rows(text)?;
    Ok((rows.into_iter().map(|(_, h)| h).collect(), report))
}

fn parse_sample_rows(
    text: &str,
) -> Result<(Vec<(usize, SampleHorizon)>, IngestReport), IngestError> {
    let mut report = IngestReport::default();
    let table = read_table(SAMPLES_FILE, text, &mut report)?;
    let id_col = table.column(SAMPLES_FILE, "Core ID")?;
    let hz_col = table.column(SAMPLES_FILE, "Horizon")?;
    let param_cols: Vec<usize> = (0..table.headers.len())
        .filter(|&i| i != id_col && i != hz_col)
        .filter(|&i| !SAMPLE_SKIPPED_COLUMNS.contains(&table.normalized[i].as_str()))
        .collect();

    let mut out = Vec::new();
    for (row, cells) in &table.rows {
        let row = *row;
        let core_id = cell(cells, id_col);
        if core_id.is_empty() {
            report.error(SAMPLES_FILE, row, "empty Core ID");
            continue;
        }
        let (top_cm, bottom_cm) = match parse_horizon(cell(cells, hz_col)) {
            Ok(h) => h,
            Err(e) => {
                report.error(SAMPLES_FILE, row, e);
                continue;
            }
        };
        let mut params = BTreeMap::new();
        for &c in &param_cols {
            match parse_number(cell(cells, c)) {
                None => {}
                Some(Ok(v)) => {
                    params.insert(table.headers[c].clone(), v);
                }
                Some(Err(())) => report.warn(
                    SAMPLES_FILE,
                    row,
                    format!(
                        "column `{}`: `{}` is not a finite number, treated as missing",
                        table.headers[c],
                        cell(cells, c)
                    ),
                ),
            }
        }
        out.push((
            row,
            SampleHorizon {
                core_id: core_id.to_owned(),
                top_cm,
                bottom_cm,
                params,
            },
        ));
    }
    report.horizons_loaded = out.len();
    Ok((out, report))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestLayer {
    pub id: String,
    pub title: String,
    pub kind: String,
    pub image: String,
    pub west: f64,
    pub east: f64,
    pub south: f64,
    pub north: f64,
    pub native_resolution_cm: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MapManifest {
    pub layers: Vec<ManifestLayer>,
}

fn map_kind(s: &str) -> Option<MapKind> {
    Some(match s.trim().to_ascii_lowercase().as_str() {
        "bathymetry" => MapKind::Bathymetry,
        "photomosaic" => MapKind::Photomosaic,
        "backscatter" => MapKind::Backscatter,
        "lidar" => MapKind::Lidar,
        "other" => MapKind::Other,
        _ => return None,
    })
}

pub fn is_png(path: &Path) -> bool {
    use std::io::Read;
    let mut sig = [0u8; 8];
    fs::File::open(path)
        .and_then(|mut f| f.read_exact(&mut sig))
        .is_ok()
        && sig == PNG_SIGNATURE
}

/// Loads the map manifest; `image` paths resolve against `base_dir`.
/// Invalid layers are dropped and reported with their 1-based position.
pub fn load_map_manifest(
    text: &str,
    base_dir: &Path,
) -> Result<(Vec<MapLayer>, IngestReport), IngestError> {
    let manifest: MapManifest =
        serde_json::from_str(text).map_err(|e| IngestError::Manifest(e.to_string()))?;
    let mut ids = BTreeSet::new();
    for l in &manifest.layers {
        if !ids.insert(l.id.as_str()) {
            return Err(IngestError::DuplicateLayer(l.id.clone()));
        }
    }
    let mut report = IngestReport::default();
    let mut layers = Vec::new();
    for (i, l) in manifest.layers.iter().enumerate() {
        let row = i + 1;
        let bounds = match GeoRect::new(l.west, l.east, l.south, l.north) {
            Ok(b) if !b.is_degenerate() => b,
            Ok(_) => {
                report.error(
                    MAPS_FILE,
                    row,
                    format!("layer `{}`: degenerate bounds", l.id),
                );
                continue;
            }
            Err(e) => {
                report.error(MAPS_FILE, row, format!("layer `{}`: {e}", l.id));
                continue;
            }
        };
        let image_ref = base_dir.join(&l.image);
        if !image_ref.is_file() {
            report.error(
                MAPS_FILE,
                row,
                format!(
                    "layer `{}`: image `{}` not found",
                    l.id,
                    image_ref.display()
                ),
            );
            continue;
        }
        if !is_png(&image_ref) {
            report.error(
                MAPS_FILE,
                row,
                format!(
                    "layer `{}`: `{}` is not a PNG file",
                    l.id,
                    image_ref.display()
                ),
            );
            continue;
        }
        let kind = map_kind(&l.kind).unwrap_or_else(|| {
            report.warn(
                MAPS_FILE,
                row,
                format!("layer `{}`: unknown kind `{}`, using `other`", l.id, l.kind),
            );
            MapKind::Other
        });
        if !(l.native_resolution_cm.is_finite() && l.native_resolution_cm > 0.0) {
            report.error(
                MAPS_FILE,
                row,
                format!("layer `{}`: native_resolution_cm must be positive", l.id),
            );
            continue;
        }
        layers.push(MapLayer {
            layer_id: l.id.clone(),
            title: l.title.clone(),
            kind,
            image_ref,
            bounds,
            native_resolution_cm: l.native_resolution_cm,
        });
    }
    Ok((layers, report))
}

/// Optional column manifest: `{"<parameter>": "<kind>", ...}`.
pub fn parse_parameter_kinds(text: &str) -> Result<HashMap<String, ParameterKind>, IngestError> {
    serde_json::from_str(text).map_err(|e| IngestError::ParameterManifest(e.to_string()))
}

pub struct MapSource<'a> {
    pub manifest: &'a str,
    pub base_dir: &'a Path,
}

pub fn build_workspace(
    core_csv: &str,
    sample_csv: &str,
    maps: Option<MapSource<'_>>,
    kinds: &HashMap<String, ParameterKind>,
) -> Result<(Catalog, IngestReport), IngestError> {
    let (cores, mut report) = parse_core_rows(core_csv)?;
    let (horizons, sample_report) = parse_sample_rows(sample_csv)?;
    report.absorb(sample_report);

    let known: HashMap<&str, ()> = cores
        .iter()
        .map(|(_, c)| (c.core_id.as_str(), ()))
        .collect();
    let mut accepted: Vec<(usize, SampleHorizon)> = Vec::with_capacity(horizons.len());
    let mut by_core: HashMap<String, Vec<usize>> = HashMap::new();
    for (row, h) in horizons {
        let overlap = by_core.get(&h.core_id).and_then(|list| {
            list.iter()
                .map(|&i| &accepted[i])
                .find(|(_, o)| h.top_cm < o.bottom_cm && o.top_cm < h.bottom_cm)
        });
        if let Some((other_row, o)) = overlap {
            report.error(
                SAMPLES_FILE,
                row,
                format!(
                    "core `{}`: horizon {} overlaps {} from row {other_row}",
                    h.core_id,
                    h.label(),
                    o.label()
                ),
            );
            continue;
        }
        if !known.contains_key(h.core_id.as_str()) {
            report.warn(
                SAMPLES_FILE,
                row,
                format!("horizon references unknown core `{}`", h.core_id),
            );
        }
        by_core
            .entry(h.core_id.clone())
            .or_default()
            .push(accepted.len());
        accepted.push((row, h));
    }

    let layers = match maps {
        Some(src) => {
            let (layers, map_report) = load_map_manifest(src.manifest, src.base_dir)?;
            report.absorb(map_report);
            layers
        }
        None => Vec::new(),
    };

    let catalog = Catalog::new(
        cores.into_iter().map(|(_, c)| c).collect(),
        accepted.into_iter().map(|(_, h)| h).collect(),
        layers,
        kinds,
    )?;
    report.cores_loaded = catalog.cores().len();
    report.horizons_loaded = catalog.horizon_count();
    report.parameters_discovered = catalog.parameters().count();
    Ok((catalog, report))
}

/// Writes every horizon back out as a sample table. Values use the shortest
/// decimal representation that parses back to the same binary64.
pub fn export_samples_csv(catalog: &Catalog) -> String {
    let names: Vec<&str> = catalog.parameters().map(|p| p.name.as_str()).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["Core ID", "Horizon"];
    header.extend(&names);
    w.write_record(&header).expect("in-memory write");
    for h in catalog.all_horizons() {
        let mut rec = vec![h.core_id.clone(), h.label()];
        rec.extend(
            names
                .iter()
                .map(|n| h.params.get(*n).map(|v| v.to_string()).unwrap_or_default()),
        );
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// An ingested workspace directory.
pub struct Workspace {
    pub root: PathBuf,
    pub catalog: Catalog,
    pub report: IngestReport,
}

fn read_text(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(io_err(path))
}

impl Workspace {
    /// Loads `cores.csv`, `samples.csv`, and the optional `maps.json` and
    /// `parameters.json` from `root`.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, IngestError> {
        let root = root.as_ref().to_path_buf();
        let cores = read_text(&root.join(CORES_FILE))?;
        let samples = read_text(&root.join(SAMPLES_FILE))?;
        let maps_path = root.join(MAPS_FILE);
        let manifest = if maps_path.is_file() {
            Some(read_text(&maps_path)?)
        } else {
            None
        };
        let params_path = root.join(PARAMETERS_FILE);
        let kinds = if params_path.is_file() {
            parse_parameter_kinds(&read_text(&params_path)?)?
        } else {
            HashMap::new()
        };
        let maps = manifest.as_deref().map(|m| MapSource {
            manifest: m,
            base_dir: &root,
        });
        let (catalog, report) = build_workspace(&cores, &samples, maps, &kinds)?;
        Ok(Self {
            root,
            catalog,
            report,
        })
    }

    /// Validates the inputs and lays them out under `out`. Map images are
    /// copied to `images/<layer id>.png` and the manifest rewritten to match.
    pub fn create(
        cores_csv: &Path,
        samples_csv: &Path,
        maps_json: Option<&Path>,
        parameters_json: Option<&Path>,
        out: &Path,
    ) -> Result<Self, IngestError> {
        let cores = read_text(cores_csv)?;
        let samples = read_text(samples_csv)?;
        let manifest_text = maps_json.map(read_text).transpose()?;
        let params_text = parameters_json.map(read_text).transpose()?;
        let kinds = params_text
            .as_deref()
            .map(parse_parameter_kinds)
            .transpose()?
            .unwrap_or_default();
        let base_dir = maps_json.and_then(Path::parent).unwrap_or(Path::new("."));
        let maps = manifest_text.as_deref().map(|m| MapSource {
            manifest: m,
            base_dir,
        });
        let (_, report) = build_workspace(&cores, &samples, maps, &kinds)?;

        fs::create_dir_all(out.join(IMAGES_DIR)).map_err(io_err(out))?;
        let write = |name: &str, text: &str| {
            let p = out.join(name);
            fs::write(&p, text).map_err(io_err(&p))
        };
        write(CORES_FILE, &cores)?;
        write(SAMPLES_FILE, &samples)?;
        if let Some(text) = &params_text {
            write(PARAMETERS_FILE, text)?;
        }
        if let Some(text) = &manifest_text {
            let mut manifest: MapManifest =
                serde_json::from_str(text).map_err(|e| IngestError::Manifest(e.to_string()))?;
            for layer in &mut manifest.layers {
                let src = base_dir.join(&layer.image);
                if !src.is_file() {
                    continue;
                }
                let rel = format!("{IMAGES_DIR}/{}.png", layer.id);
                let dst = out.join(&rel);
                fs::copy(&src, &dst).map_err(io_err(&src))?;
                layer.image = rel;
            }
            write(
                MAPS_FILE,
                &serde_json::to_string_pretty(&manifest).expect("serializable"),
            )?;
        }
        let ann = out.join(ANNOTATIONS_FILE);
        if !ann.exists() {
            crate::annotate::AnnotationLog::default()
                .persist(&ann)
                .map_err(|e| IngestError::Manifest(e.to_string()))?;
        }

        let mut ws = Self::open(out)?;
        ws.report.warnings = report.warnings;
        ws.report.errors = report.errors;
        Ok(ws)
    }

    pub fn annotations_path(&self) -> PathBuf {
        self.root.join(ANNOTATIONS_FILE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CORES: &str = "Core ID,Location,Date,Core Fate,Latitude,Longitude,Temperature\n\
        NA091_020,Auka - Matterhorn,11-01-17,Geochem,23.954198,-108.862394,3.1\n\
        S0193_PC5,Auka - Diane's vent,11-14-18,Geochem,23.954822,-108.863020,\n";

    const SAMPLES: &str = "Core ID,Horizon,Sulfate,Sulfide,Taxa 1,Taxa 2\n\
        NA091_020,2-3 cm,22.98,5.14,0.1358,0\n\
        NA091_020,3-4 cm,17.97,4.6,50.497,0\n\
        S0193_PC5,1-2 cm,8.85,3.78,0.4464,37.1574\n";

    #[test]
    fn dates() {
        assert_eq!(
            parse_date("11-01-17").unwrap(),
            NaiveDate::from_ymd_opt(2017, 11, 1).unwrap()
        );
        assert_eq!(
            parse_date("2018-11-14").unwrap(),
            NaiveDate::from_ymd_opt(2018, 11, 14).unwrap()
        );
        assert_eq!(
            parse_date(" 1-5-99 ").unwrap(),
            NaiveDate::from_ymd_opt(2099, 1, 5).unwrap()
        );
        for bad in [
            "31-31-99",
            "2018/11/14",
            "",
            "11-01-2017x",
            "02-30-20",
            "18-11-14-1",
        ] {
            let err = parse_date(bad).unwrap_err().to_string();
            assert!(
                err.contains("MM-DD-YY") && err.contains("YYYY-MM-DD"),
                "{err}"
            );
        }
    }

    #[test]
    fn horizons() {
        assert_eq!(parse_horizon("2-3 cm"), Ok((2, 3)));
        assert_eq!(parse_horizon("  0 - 3CM "), Ok((0, 3)));
        assert_eq!(parse_horizon("10-13"), Ok((10, 13)));
        assert!(parse_horizon("3-2 cm").is_err());
        assert!(parse_horizon("3-3 cm").is_err());
        assert!(parse_horizon("abc").is_err());
        assert!(parse_horizon("1.5-2 cm").is_err());
        assert!(parse_horizon("-1-2").is_err());
    }

    #[test]
    fn core_table_row() {
        let (cores, report) = parse_core_csv(CORES).unwrap();
        assert!(report.succeeded());
        assert_eq!(cores.len(), 2);
        let c = &cores[0];
        assert_eq!(c.core_id, "NA091_020");
        assert_eq!(c.location_name, "Auka - Matterhorn");
        assert_eq!(c.date, NaiveDate::from_ymd_opt(2017, 11, 1).unwrap());
        assert_eq!(c.core_fate, "Geochem");
        assert_eq!(c.position.lat(), 23.954198);
        assert_eq!(c.position.lon(), -108.862394);
        assert_eq!(c.extra_measurements["Temperature"], 3.1);
        assert!(cores[1].extra_measurements.is_empty());
    }

    #[test]
    fn core_header_is_case_and_space_insensitive() {
        let text = "coreid, LOCATION ,date,corefate,LATITUDE,longitude\nA,x,2020-01-01,Live,1,2\n";
        let (cores, report) = parse_core_csv(text).unwrap();
        assert!(report.succeeded());
        assert_eq!(cores.len(), 1);
    }

    #[test]
    fn core_errors() {
        let err = parse_core_csv("Core ID,Location,Date,Latitude,Longitude\n").unwrap_err();
        assert!(
            matches!(err, IngestError::MissingColumn { ref column, .. } if column == "Core Fate")
        );

        let (cores, report) =
            parse_core_csv("Core ID,Location,Date,Core Fate,Latitude,Longitude\n").unwrap();
        assert!(cores.is_empty() && report.succeeded());

        let text = "Core ID,Location,Date,Core Fate,Latitude,Longitude\n\
            A,x,2020-01-01,Live,abc,2\n\
            B,x,2020-01-01,Live,1,2\n\
            B,x,2020-01-01,Live,1,2\n\
            B,y,2020-01-01,Live,1,2\n";
        let (cores, report) = parse_core_csv(text).unwrap();
        assert_eq!(cores.len(), 1);
        assert_eq!(report.errors.len(), 2);
        assert_eq!(report.errors[0].row, 2);
        assert!(report.errors[0].message.contains("Latitude"));
        assert_eq!(report.errors[1].row, 5);
    }

    #[test]
    fn sample_rows() {
        let (hs, report) = parse_sample_csv(SAMPLES).unwrap();
        assert!(report.succeeded());
        assert_eq!(hs.len(), 3);
        assert_eq!((hs[1].top_cm, hs[1].bottom_cm), (3, 4));
        assert_eq!(hs[1].params["Sulfate"], 17.97);
        assert_eq!(hs[0].params["Taxa 2"], 0.0);

        let text = "Core ID,Horizon,P\nA,3-2 cm,1\nA,0-1,\nA,1-2,xyz\n";
        let (hs, report) = parse_sample_csv(text).unwrap();
        assert_eq!(hs.len(), 2);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].row, 2);
        assert!(hs[0].params.is_empty());
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(report.warnings[0].row, 4);
    }

    #[test]
    fn combined_table_skips_core_columns() {
        let text = "Core ID,Location,Date,Core Fate,Latitude,Longitude,Horizon,Sulfate\n\
            NA091_020,Auka - Matterhorn,11-01-17,Geochem,23.954198,-108.862394,2-3 cm,22.98\n";
        let (hs, report) = parse_sample_csv(text).unwrap();
        assert!(report.warnings.is_empty());
        assert_eq!(hs[0].params.keys().collect::<Vec<_>>(), ["Sulfate"]);
        let (cores, report) = parse_core_csv(text).unwrap();
        assert!(report.succeeded());
        assert_eq!(cores.len(), 1);
    }

    #[test]
    fn build_reports_orphans_and_overlaps() {
        let samples = format!("{SAMPLES}GHOST,0-1 cm,1,2,3,4\nNA091_020,2-5 cm,1,,,\n");
        let (cat, report) = build_workspace(CORES, &samples, None, &HashMap::new()).unwrap();
        assert_eq!(report.cores_loaded, 2);
        assert_eq!(report.horizons_loaded, 4);
        assert_eq!(report.parameters_discovered, 4);
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(report.warnings[0].row, 5);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].row, 6);
        assert_eq!(cat.orphan_horizons().len(), 1);
        let s = cat.parameter("Sulfate").unwrap();
        assert_eq!((s.observed_min, s.observed_max), (1.0, 22.98));
    }

    #[test]
    fn export_round_trips_bits() {
        let samples = "Core ID,Horizon,A,B\nX,0-1,0.1,1e-300\nX,1-2,3.141592653589793,-0\nX,2-5,12345678901234567890,\n";
        let cores = "Core ID,Location,Date,Core Fate,Latitude,Longitude\nX,l,2020-01-01,Live,1,2\n";
        let (cat, _) = build_workspace(cores, samples, None, &HashMap::new()).unwrap();
        let exported = export_samples_csv(&cat);
        let (again, _) = parse_sample_csv(&exported).unwrap();
        let (orig, _) = parse_sample_csv(samples).unwrap();
        assert_eq!(orig.len(), again.len());
        for (a, b) in orig.iter().zip(&again) {
            assert_eq!(a.params.len(), b.params.len());
            for (k, v) in &a.params {
                assert_eq!(v.to_bits(), b.params[k].to_bits(), "{k}");
            }
        }
    }

    #[test]
    fn ingest_is_deterministic() {
        let a = build_workspace(CORES, SAMPLES, None, &HashMap::new()).unwrap();
        let b = build_workspace(CORES, SAMPLES, None, &HashMap::new()).unwrap();
        assert_eq!(a.1, b.1);
        assert_eq!(a.0.cores(), b.0.cores());
        assert_eq!(export_samples_csv(&a.0), export_samples_csv(&b.0));
    }

    fn write_png(path: &Path) {
        let mut bytes = PNG_SIGNATURE.to_vec();
        bytes.extend_from_slice(b"rest-of-file");
        fs::write(path, bytes).unwrap();
    }

    #[test]
    fn manifest_validation() {
        let dir = tempfile::tempdir().unwrap();
        write_png(&dir.path().join("bathy.png"));
        fs::write(dir.path().join("fake.png"), b"not a png").unwrap();
        let manifest = r#"{"layers":[
            {"id":"bathy","title":"LASS bathymetry","kind":"bathymetry","image":"bathy.png","west":-108.87,"east":-108.86,"south":23.95,"north":23.96,"native_resolution_cm":5},
            {"id":"mosaic","title":"Mosaic","kind":"photomosaic","image":"missing.png","west":-108.87,"east":-108.86,"south":23.95,"north":23.96,"native_resolution_cm":5},
            {"id":"flat","title":"Flat","kind":"lidar","image":"bathy.png","west":-108.87,"east":-108.87,"south":23.95,"north":23.96,"native_resolution_cm":2},
            {"id":"fake","title":"Fake","kind":"other","image":"fake.png","west":-108.87,"east":-108.86,"south":23.95,"north":23.96,"native_resolution_cm":2},
            {"id":"odd","title":"Odd","kind":"sidescan","image":"bathy.png","west":-108.87,"east":-108.86,"south":23.95,"north":23.96,"native_resolution_cm":2}
        ]}"#;
        let (layers, report) = load_map_manifest(manifest, dir.path()).unwrap();
        assert_eq!(
            layers
                .iter()
                .map(|l| l.layer_id.as_str())
                .collect::<Vec<_>>(),
            ["bathy", "odd"]
        );
        assert_eq!(layers[1].kind, MapKind::Other);
        assert_eq!(
            report.errors.iter().map(|e| e.row).collect::<Vec<_>>(),
            [2, 3, 4]
        );
        assert_eq!(report.warnings.len(), 1);

        let dup = r#"{"layers":[
            {"id":"a","title":"","kind":"lidar","image":"bathy.png","west":0,"east":1,"south":0,"north":1,"native_resolution_cm":1},
            {"id":"a","title":"","kind":"lidar","image":"bathy.png","west":0,"east":1,"south":0,"north":1,"native_resolution_cm":1}]}"#;
        assert!(matches!(
            load_map_manifest(dup, dir.path()),
            Err(IngestError::DuplicateLayer(_))
        ));
    }

    #[test]
    fn workspace_create_and_open() {
        let src = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        fs::write(src.path().join("c.csv"), CORES).unwrap();
        fs::write(src.path().join("s.csv"), SAMPLES).unwrap();
        fs::create_dir(src.path().join("img")).unwrap();
        write_png(&src.path().join("img/b.png"));
        fs::write(
            src.path().join("maps.json"),
            r#"{"layers":[{"id":"bathy","title":"B","kind":"bathymetry","image":"img/b.png","west":-108.87,"east":-108.86,"south":23.95,"north":23.96,"native_resolution_cm":5}]}"#,
        )
        .unwrap();
        fs::write(
            src.path().join("p.json"),
            r#"{"Sulfate":"geochemical","Taxa 1":"biological"}"#,
        )
        .unwrap();
        let ws = Workspace::create(
            &src.path().join("c.csv"),
            &src.path().join("s.csv"),
            Some(&src.path().join("maps.json")),
            Some(&src.path().join("p.json")),
            out.path(),
        )
        .unwrap();
        assert!(ws.report.succeeded());
        assert_eq!(ws.catalog.maps().len(), 1);
        assert!(out.path().join("images/bathy.png").is_file());
        assert!(ws.annotations_path().is_file());
        assert_eq!(
            ws.catalog.parameter("Sulfate").unwrap().kind,
            ParameterKind::Geochemical
        );
        assert_eq!(
            ws.catalog.parameter("Sulfide").unwrap().kind,
            ParameterKind::Unknown
        );

        let reopened = Workspace::open(out.path()).unwrap();
        assert_eq!(reopened.catalog.cores(), ws.catalog.cores());
    }
}
