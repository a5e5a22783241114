//! Map annotations with a linear undo/redo history.
//!
//! Strokes are stored in geographic coordinates, so a stroke drawn over one
//! map layer lines up with every other layer.

use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::GeoPoint;

pub const PALETTE_SIZE: u8 = 6;

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("color index {0} outside 0..{PALETTE_SIZE}")]
    ColorIndex(u8),
    #[error("stroke needs at least 2 points, got {0}")]
    PathTooShort(usize),
    #[error("stroke id `{0}` already in use")]
    DuplicateId(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("malformed annotation file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationStroke {
    pub stroke_id: String,
    pub color_index: u8,
    pub path: Vec<GeoPoint>,
    /// Anchored at the first point of `path`.
    pub note: Option<String>,
    pub created_at: DateTime<Utc>,
}

impl AnnotationStroke {
    pub fn new(
        stroke_id: impl Into<String>,
        color_index: u8,
        path: Vec<GeoPoint>,
        note: Option<String>,
        created_at: DateTime<Utc>,
    ) -> Result<Self, AnnotateError> {
        let stroke = Self {
            stroke_id: stroke_id.into(),
            color_index,
            path,
            note,
            created_at,
        };
        stroke.validate()?;
        Ok(stroke)
    }

    pub fn validate(&self) -> Result<(), AnnotateError> {
        if self.color_index >= PALETTE_SIZE {
            return Err(AnnotateError::ColorIndex(self.color_index));
        }
        if self.path.len() < 2 {
            return Err(AnnotateError::PathTooShort(self.path.len()));
        }
        Ok(())
    }

    pub fn note_anchor(&self) -> GeoPoint {
        self.path[0]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationLog {
    pub applied: Vec<AnnotationStroke>,
    /// Top of the stack is the last element.
    pub undone: Vec<AnnotationStroke>,
}

impl AnnotationLog {
    /// Appends a stroke and clears the redo stack.
    pub fn add_stroke(&mut self, stroke: AnnotationStroke) -> Result<(), AnnotateError> {
        stroke.validate()?;
        if self.applied.iter().any(|s| s.stroke_id == stroke.stroke_id) {
            return Err(AnnotateError::DuplicateId(stroke.stroke_id));
        }
        self.applied.push(stroke);
        self.undone.clear();
        Ok(())
    }

    /// Returns `false` when there was nothing to undo.
    pub fn undo(&mut self) -> bool {
        match self.applied.pop() {
            Some(s) => {
                self.undone.push(s);
                true
            }
            None => false,
        }
    }

    pub fn redo(&mut self) -> bool {
        match self.undone.pop() {
            Some(s) => {
                self.applied.push(s);
                true
            }
            None => false,
        }
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.applied
            .iter()
            .chain(&self.undone)
            .any(|s| s.stroke_id == id)
    }

    /// Number of strokes ever kept (applied and undone).
    pub fn len(&self) -> usize {
        self.applied.len() + self.undone.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn persist(&self, path: &Path) -> Result<(), AnnotateError> {
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(self)?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, AnnotateError> {
        let log: Self = serde_json::from_slice(&fs::read(path)?)?;
        for s in log.applied.iter().chain(&log.undone) {
            s.validate()?;
        }
        Ok(log)
    }
}
