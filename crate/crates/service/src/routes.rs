use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequest, FromRequestParts, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use chrono::{NaiveDate, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use seafloor_core::annotate::{AnnotationLog, AnnotationStroke};
use seafloor_core::catalog::{CoreFilter, CoreProfile, MapKind, SampleHorizon};
use seafloor_core::geo::{GeoPoint, GeoRect};
use seafloor_core::ingest::parse_date;
use seafloor_core::interp::{clip_mask, extract_virtual_core, ClipSpec, VirtualCore};
use seafloor_core::pipeline::InterpolationRequest;
use seafloor_core::vsup::{PaletteEntry, VsupQuantizer, PALETTES};
use seafloor_core::{Core, Selection};

use crate::error::ApiError;
use crate::jobs::{Job, JobOutput, JobState};
use crate::AppState;

/// `Json` with rejections mapped onto the API error envelope.
pub struct ApiJson<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ApiError;

    async fn from_request(req: axum::extract::Request, state: &S) -> Result<Self, ApiError> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| ApiJson(v))
            .map_err(|e: JsonRejection| {
                ApiError::new(e.status(), "malformed_request", e.body_text())
            })
    }
}

pub struct ApiQuery<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for ApiQuery<T> {
    type Rejection = ApiError;

    async fn from_request_parts(
        parts: &mut axum::http::request::Parts,
        state: &S,
    ) -> Result<Self, ApiError> {
        axum::extract::Query::<T>::from_request_parts(parts, state)
            .await
            .map(|q| ApiQuery(q.0))
            .map_err(|e: QueryRejection| ApiError::bad_request("malformed_request", e.body_text()))
    }
}

fn date_param(name: &str, value: Option<&str>) -> Result<Option<NaiveDate>, ApiError> {
    value
        .filter(|v| !v.is_empty())
        .map(|v| {
            parse_date(v).map_err(|e| ApiError::bad_request("invalid_date", format!("{name}: {e}")))
        })
        .transpose()
}

#[derive(Debug, Default, Deserialize)]
pub struct CoreQuery {
    location: Option<String>,
    from: Option<String>,
    to: Option<String>,
    fate: Option<String>,
}

impl CoreQuery {
    fn filter(&self) -> Result<CoreFilter, ApiError> {
        let nonempty = |s: &Option<String>| s.clone().filter(|s| !s.is_empty());
        let filter = CoreFilter {
            location_name: nonempty(&self.location),
            date_from: date_param("from", self.from.as_deref())?,
            date_to: date_param("to", self.to.as_deref())?,
            core_fate: nonempty(&self.fate),
        };
        filter.validate()?;
        Ok(filter)
    }
}

pub async fn list_cores(
    State(state): State<AppState>,
    ApiQuery(q): ApiQuery<CoreQuery>,
) -> Result<Json<Vec<Core>>, ApiError> {
    let filter = q.filter()?;
    Ok(Json(
        state
            .catalog
            .filter_cores(&filter)
            .into_iter()
            .cloned()
            .collect(),
    ))
}

pub async fn get_core(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Core>, ApiError> {
    state
        .catalog
        .core(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found("unknown_core", format!("unknown core `{id}`")))
}

#[derive(Debug, Deserialize)]
pub struct HorizonQuery {
    parameter: Option<String>,
    /// Comma-separated ids whose finest horizon sets the step.
    selection: Option<String>,
    step: Option<u32>,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum HorizonsResponse {
    Raw {
        core_id: String,
        horizons: Vec<SampleHorizon>,
    },
    Resampled(CoreProfile),
}

pub async fn core_horizons(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiQuery(q): ApiQuery<HorizonQuery>,
) -> Result<Json<HorizonsResponse>, ApiError> {
    let cat = &state.catalog;
    let horizons = cat.horizons_of(&id)?;
    let Some(parameter) = q.parameter.filter(|p| !p.is_empty()) else {
        return Ok(Json(HorizonsResponse::Raw {
            core_id: id,
            horizons: horizons.to_vec(),
        }));
    };
    if cat.parameter(&parameter).is_none() {
        return Err(ApiError::not_found(
            "unknown_parameter",
            format!("unknown parameter `{parameter}`"),
        ));
    }
    let step = match q.step {
        Some(0) => {
            return Err(ApiError::bad_request(
                "invalid_step",
                "step must be positive",
            ))
        }
        Some(s) => s,
        None => {
            let mut ids: Vec<String> = q
                .selection
                .as_deref()
                .unwrap_or("")
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
            for other in &ids {
                cat.horizons_of(other)?;
            }
            ids.push(id.clone());
            cat.smallest_step(&ids).unwrap_or(1)
        }
    };
    Ok(Json(HorizonsResponse::Resampled(
        cat.resample_core(&id, &parameter, step)?,
    )))
}

pub async fn list_parameters(State(state): State<AppState>) -> impl IntoResponse {
    Json(state.catalog.parameters().cloned().collect::<Vec<_>>())
}

#[derive(Debug, Serialize)]
pub struct MapView {
    layer_id: String,
    title: String,
    kind: MapKind,
    bounds: GeoRect,
    native_resolution_cm: f64,
    image_url: String,
}

pub async fn list_maps(State(state): State<AppState>) -> Json<Vec<MapView>> {
    Json(
        state
            .catalog
            .maps()
            .iter()
            .map(|m| MapView {
                layer_id: m.layer_id.clone(),
                title: m.title.clone(),
                kind: m.kind,
                bounds: m.bounds,
                native_resolution_cm: m.native_resolution_cm,
                image_url: format!("/api/maps/{}/image", m.layer_id),
            })
            .collect(),
    )
}

pub async fn map_image(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let layer = state
        .catalog
        .map(&id)
        .ok_or_else(|| ApiError::not_found("unknown_map", format!("unknown map layer `{id}`")))?;
    let bytes = tokio::fs::read(&layer.image_ref)
        .await
        .map_err(|e| ApiError::not_found("image_missing", format!("map layer `{id}`: {e}")))?;
    Ok(([(header::CONTENT_TYPE, "image/png")], bytes).into_response())
}

#[derive(Debug, Deserialize)]
pub struct SelectionQuery {
    west: f64,
    east: f64,
    south: f64,
    north: f64,
    location: Option<String>,
    from: Option<String>,
    to: Option<String>,
    fate: Option<String>,
}

pub async fn select(
    State(state): State<AppState>,
    ApiQuery(q): ApiQuery<SelectionQuery>,
) -> Result<Json<Selection>, ApiError> {
    let rect = GeoRect::new(q.west, q.east, q.south, q.north)?;
    let filter = CoreQuery {
        location: q.location,
        from: q.from,
        to: q.to,
        fate: q.fate,
    }
    .filter()?;
    Ok(Json(state.catalog.select_in_rect(&filter, &rect)?))
}

#[derive(Serialize)]
pub struct Submitted {
    job_id: String,
    status: &'static str,
}

pub async fn submit_interpolation(
    State(state): State<AppState>,
    ApiJson(req): ApiJson<InterpolationRequest>,
) -> Result<(StatusCode, Json<Submitted>), ApiError> {
    let job_id = state.jobs.submit(&state.catalog, req)?;
    let status = state.jobs.get(&job_id).map_or("queued", |j| j.state.name());
    Ok((StatusCode::ACCEPTED, Json(Submitted { job_id, status })))
}

fn job(state: &AppState, id: &str) -> Result<Job, ApiError> {
    state.jobs.get(id).ok_or_else(|| {
        ApiError::not_found("unknown_job", format!("unknown interpolation job `{id}`"))
    })
}

fn finished(state: &AppState, id: &str) -> Result<Arc<JobOutput>, ApiError> {
    match job(state, id)?.state {
        JobState::Done(out) => Ok(out),
        JobState::Failed(e) => Err(e),
        other => Err(ApiError::new(
            StatusCode::CONFLICT,
            "job_not_ready",
            format!("job `{id}` is {}", other.name()),
        )),
    }
}

fn json_response(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

pub async fn get_interpolation(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let job = job(&state, &id)?;
    let body =
        serde_json::to_string(&job.view(&id)).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(json_response(body))
}

/// The bare grid document, byte-identical to the headless output file.
pub async fn get_grid(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let out = finished(&state, &id)?;
    Ok(json_response(out.grid_json.get().to_owned()))
}

#[derive(Serialize)]
pub struct ClipResponse {
    visible: Vec<bool>,
    visible_count: usize,
}

pub async fn clip(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(spec): ApiJson<ClipSpec>,
) -> Result<Json<ClipResponse>, ApiError> {
    let out = finished(&state, &id)?;
    let visible = clip_mask(&out.grid, &spec);
    let visible_count = visible.iter().filter(|v| **v).count();
    Ok(Json(ClipResponse {
        visible,
        visible_count,
    }))
}

#[derive(Debug, Deserialize)]
pub struct VirtualCoreRequest {
    job_id: String,
    lat: f64,
    lon: f64,
}

pub async fn virtual_core(
    State(state): State<AppState>,
    ApiJson(req): ApiJson<VirtualCoreRequest>,
) -> Result<Json<VirtualCore>, ApiError> {
    let out = finished(&state, &req.job_id)?;
    let p = GeoPoint::new(req.lat, req.lon)?;
    Ok(Json(extract_virtual_core(&out.grid, p)?))
}

pub async fn list_palettes() -> Json<&'static [&'static str]> {
    Json(&PALETTES)
}

#[derive(Debug, Deserialize)]
pub struct PaletteQuery {
    layers: Option<u32>,
    branching: Option<u32>,
}

#[derive(Serialize)]
pub struct PaletteResponse {
    palette_id: String,
    layers: u32,
    branching: u32,
    entries: Vec<PaletteEntry>,
}

pub async fn palette(
    Path(id): Path<String>,
    ApiQuery(q): ApiQuery<PaletteQuery>,
) -> Result<Json<PaletteResponse>, ApiError> {
    let d = VsupQuantizer::default();
    let quantizer = VsupQuantizer::new(
        q.layers.unwrap_or(d.layers()),
        q.branching.unwrap_or(d.branching()),
    )?;
    let entries = quantizer.palette_table(&id)?;
    Ok(Json(PaletteResponse {
        palette_id: id,
        layers: quantizer.layers(),
        branching: quantizer.branching(),
        entries,
    }))
}

pub async fn get_annotations(State(state): State<AppState>) -> Json<AnnotationLog> {
    Json(state.annotations.lock().await.clone())
}

#[derive(Debug, Deserialize)]
pub struct NewStroke {
    stroke_id: Option<String>,
    color_index: u8,
    path: Vec<GeoPoint>,
    note: Option<String>,
    created_at: Option<chrono::DateTime<Utc>>,
}

#[derive(Serialize)]
pub struct LogResponse {
    changed: bool,
    #[serde(flatten)]
    log: AnnotationLog,
}

/// Applies `f` under the annotation lock and persists the result; the
/// in-memory log is only replaced once the file write succeeds.
async fn mutate_annotations<F>(state: &AppState, f: F) -> Result<Json<LogResponse>, ApiError>
where
    F: FnOnce(&mut AnnotationLog) -> Result<bool, ApiError>,
{
    let mut guard = state.annotations.lock().await;
    let mut next = guard.clone();
    let changed = f(&mut next)?;
    if changed {
        next.persist(&state.annotations_path)?;
        *guard = next.clone();
    }
    Ok(Json(LogResponse { changed, log: next }))
}

pub async fn add_stroke(
    State(state): State<AppState>,
    ApiJson(s): ApiJson<NewStroke>,
) -> Result<(StatusCode, Json<LogResponse>), ApiError> {
    let res = mutate_annotations(&state, |log| {
        let id = match s.stroke_id {
            Some(id) if !id.is_empty() => id,
            _ => (log.applied.len() + 1..)
                .map(|n| format!("stroke-{n}"))
                .find(|id| !log.contains_id(id))
                .expect("unbounded range"),
        };
        let stroke = AnnotationStroke::new(
            id,
            s.color_index,
            s.path,
            s.note,
            s.created_at.unwrap_or_else(Utc::now),
        )?;
        log.add_stroke(stroke)?;
        Ok(true)
    })
    .await?;
    Ok((StatusCode::CREATED, res))
}

pub async fn undo(State(state): State<AppState>) -> Result<Json<LogResponse>, ApiError> {
    mutate_annotations(&state, |log| Ok(log.undo())).await
}

pub async fn redo(State(state): State<AppState>) -> Result<Json<LogResponse>, ApiError> {
    mutate_annotations(&state, |log| Ok(log.redo())).await
}

#[derive(Serialize)]
pub struct DateRange {
    from: NaiveDate,
    to: NaiveDate,
}

#[derive(Serialize)]
pub struct WorkspaceSummary {
    core_count: usize,
    horizon_count: usize,
    parameter_count: usize,
    map_count: usize,
    annotation_count: usize,
    date_range: Option<DateRange>,
    /// Core count per named location.
    locations: BTreeMap<String, usize>,
    /// Core count per core fate.
    fates: BTreeMap<String, usize>,
    parameters: Vec<String>,
    ingest_warnings: usize,
    ingest_errors: usize,
}

pub async fn workspace(State(state): State<AppState>) -> Json<WorkspaceSummary> {
    let cat = &state.catalog;
    let mut locations = BTreeMap::new();
    let mut fates = BTreeMap::new();
    for c in cat.cores() {
        *locations.entry(c.location_name.clone()).or_insert(0) += 1;
        *fates.entry(c.core_fate.clone()).or_insert(0) += 1;
    }
    let dates = cat.cores().iter().map(|c| c.date);
    let date_range = dates
        .clone()
        .min()
        .zip(dates.max())
        .map(|(from, to)| DateRange { from, to });
    Json(WorkspaceSummary {
        core_count: cat.cores().len(),
        horizon_count: cat.horizon_count(),
        parameter_count: cat.parameters().count(),
        map_count: cat.maps().len(),
        annotation_count: state.annotations.lock().await.applied.len(),
        date_range,
        locations,
        fates,
        parameters: cat.parameters().map(|p| p.name.clone()).collect(),
        ingest_warnings: state.report.warnings.len(),
        ingest_errors: state.report.errors.len(),
    })
}

pub async fn ingest_reserved() -> ApiError {
    ApiError::new(
        StatusCode::NOT_IMPLEMENTED,
        "not_implemented",
        "incremental ingest is not available; re-run the ingest command and restart",
    )
}

pub async fn api_not_found() -> ApiError {
    ApiError::not_found("unknown_endpoint", "no such endpoint")
}
