//! Toolkit for field-survey datasets stored as GeoJSON feature collections.
//!
//! A dataset is one `FeatureCollection` whose collection `properties` carry
//! the dataset metadata (`Nome`, `Descrizione`, `umapKey`, `WebPageURL`) and
//! whose features are typed by the `ulsp_type` property. The crate covers the
//! whole lifecycle of such a dataset:
//!
//! * [`schema`]: data model, format registry, validation and canonical form
//! * [`ingest`]: lenient GeoJSON, Gaia GPS exports and CSV tables
//! * [`transform`]: merge, filter, retype and property reconciliation
//! * [`export`]: canonical GeoJSON, GPX 1.1, uMap layer files and CSV
//! * [`qr`]: offline transfer of a dataset as a sequence of QR text frames
//! * [`publisher`]: dataset repository directories and the global layer set
//!
//! Batch work (global layers, vignette downloads) runs on rayon when the
//! `parallel` feature is enabled, see [`exec`].

pub mod exec;
pub mod export;
pub mod ingest;
pub mod publisher;
pub mod qr;
pub mod schema;
pub mod transform;

mod diag;
mod text;

pub use diag::{Diagnostic, Outcome};
pub use schema::{
    canonicalize, classify_feature, validate_dataset, CollectionMeta, FeatureKind, FieldKind,
    FieldSpec, FormatRegistry, Geometry, Position, UlspDataset, UlspFeature, ValidationReport,
};
