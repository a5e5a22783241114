use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use seafloor_core::annotate::AnnotateError;
use seafloor_core::catalog::CatalogError;
use seafloor_core::geo::GeoError;
use seafloor_core::interp::InterpError;
use seafloor_core::vsup::VsupError;

/// An error response: `{"error": {"code", "message", ...}}` with a matching
/// HTTP status. `code` is stable and meant for programs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub voxel_count: Option<u128>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            voxel_count: None,
        }
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    error: &'a ApiError,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(Envelope { error: &self })).into_response()
    }
}

impl From<CatalogError> for ApiError {
    fn from(e: CatalogError) -> Self {
        let code = match e {
            CatalogError::UnknownCore(_) => return Self::not_found("unknown_core", e.to_string()),
            CatalogError::UnknownParameter(_) => {
                return Self::not_found("unknown_parameter", e.to_string())
            }
            CatalogError::EmptySelection => "empty_selection",
            CatalogError::InvalidFilter(..) => "invalid_filter",
            CatalogError::DuplicateCore(_) | CatalogError::OverlappingHorizons { .. } => {
                return Self::internal(e.to_string())
            }
        };
        Self::bad_request(code, e.to_string())
    }
}

impl From<GeoError> for ApiError {
    fn from(e: GeoError) -> Self {
        Self::bad_request("invalid_coordinates", e.to_string())
    }
}

impl From<InterpError> for ApiError {
    fn from(e: InterpError) -> Self {
        let message = e.to_string();
        match e {
            InterpError::InvalidGrid(_) => Self::bad_request("invalid_grid", message),
            InterpError::TooLarge { count, .. } => Self {
                voxel_count: Some(count),
                ..Self::new(StatusCode::UNPROCESSABLE_ENTITY, "grid_too_large", message)
            },
            InterpError::NoData(_) => Self::bad_request("no_data", message),
            InterpError::Degenerate(_) => {
                Self::new(StatusCode::CONFLICT, "degenerate_geometry", message)
            }
            InterpError::OutOfBounds { .. } => Self::bad_request("out_of_bounds", message),
            InterpError::Format(_) => Self::bad_request("invalid_grid_document", message),
            InterpError::Geo(g) => g.into(),
            InterpError::Catalog(c) => c.into(),
            InterpError::OutsideGrid { .. } => Self::internal(message),
        }
    }
}

impl From<VsupError> for ApiError {
    fn from(e: VsupError) -> Self {
        match e {
            VsupError::UnknownPalette(_) => Self::not_found("unknown_palette", e.to_string()),
            _ => Self::bad_request("invalid_vsup", e.to_string()),
        }
    }
}

impl From<AnnotateError> for ApiError {
    fn from(e: AnnotateError) -> Self {
        match e {
            AnnotateError::ColorIndex(_) | AnnotateError::PathTooShort(_) => {
                Self::bad_request("invalid_stroke", e.to_string())
            }
            AnnotateError::DuplicateId(_) => {
                Self::new(StatusCode::CONFLICT, "duplicate_stroke", e.to_string())
            }
            AnnotateError::Io(_) | AnnotateError::Json(_) => Self::internal(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(
            ApiError::from(InterpError::InvalidGrid(10)).status,
            StatusCode::BAD_REQUEST
        );
        let big = ApiError::from(InterpError::TooLarge { count: 9, cap: 1 });
        assert_eq!(
            (big.status, big.voxel_count),
            (StatusCode::UNPROCESSABLE_ENTITY, Some(9))
        );
        let deg = ApiError::from(InterpError::Degenerate("coplanar".into()));
        assert_eq!(deg.status, StatusCode::CONFLICT);
        assert!(deg.message.contains("sibson"));
        let unknown = ApiError::from(InterpError::Catalog(CatalogError::UnknownCore("X".into())));
        assert_eq!(
            (unknown.status, unknown.code),
            (StatusCode::NOT_FOUND, "unknown_core")
        );
        assert_eq!(
            ApiError::from(InterpError::OutOfBounds { lat: 0.0, lon: 0.0 }).code,
            "out_of_bounds"
        );
    }

    #[test]
    fn envelope_shape() {
        let body = serde_json::to_value(Envelope {
            error: &ApiError::bad_request("invalid_grid", "nope"),
        })
        .unwrap();
        assert_eq!(
            body,
            serde_json::json!({"error": {"code": "invalid_grid", "message": "nope"}})
        );
    }
}
