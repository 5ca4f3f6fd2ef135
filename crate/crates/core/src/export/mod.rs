//! Writers for the formats a dataset is delivered in.

mod csv;
pub mod geojson;
mod gpx;
mod umap;

pub use self::csv::to_csv;
pub use geojson::serialize_geojson;
pub use gpx::to_gpx;
pub use umap::{popup_text, to_umap_layers, Layer, UmapExport};
pub(crate) use geojson::to_pretty_bytes;
pub(crate) use umap::{layer_bytes, layer_features};

use crate::schema::FeatureKind;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExportError {
    #[error("CSV export supports point kinds only, not {0}")]
    UnsupportedKind(FeatureKind),
}
