//! Sediment-core sampling analysis: catalog and ingest of core and sample
//! tables, 3D interpolation between cores with an uncertainty field,
//! uncertainty palette quantization, and map annotations.

pub mod annotate;
pub mod catalog;
pub mod geo;
pub mod ingest;
pub mod interp;
pub mod pipeline;
pub mod vsup;

pub use catalog::{Catalog, Core, CoreFilter, SampleHorizon, Selection};
pub use geo::{GeoPoint, GeoRect, LocalFrame};
pub use interp::{GridSpec, Method, VoxelGrid};
