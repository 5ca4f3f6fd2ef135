//! Parsers turning source documents into datasets.

mod csv;
mod gaia;
mod geojson;

pub use self::csv::{import_csv, CsvImport, RowError};
pub use gaia::{gaia_split, GaiaMapping};
pub use geojson::parse_geojson;

use crate::schema::FeatureKind;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("malformed JSON at line {line}, column {column} (byte {offset}): {message}")]
    Parse {
        line: usize,
        column: usize,
        offset: usize,
        message: String,
    },
    #[error("{0}")]
    Structure(String),
    #[error("CSV import supports point kinds only, not {0}")]
    UnsupportedKind(FeatureKind),
    #[error("CSV header lacks the required column {0:?}")]
    MissingColumn(&'static str),
    #[error("CSV: {0}")]
    Csv(String),
}

pub(crate) fn parse_json(source: &[u8]) -> Result<serde_json::Value, IngestError> {
    serde_json::from_slice(source).map_err(|e| IngestError::Parse {
        line: e.line(),
        column: e.column(),
        offset: crate::text::byte_offset(source, e.line(), e.column()),
        message: e.to_string(),
    })
}

/// The `features` array of a FeatureCollection document.
pub(crate) fn collection_parts(
    doc: &serde_json::Value,
) -> Result<(&[serde_json::Value], Option<&serde_json::Map<String, serde_json::Value>>), IngestError> {
    let obj = doc
        .as_object()
        .ok_or_else(|| IngestError::Structure("top-level value is not a JSON object".into()))?;
    match obj.get("type").and_then(|t| t.as_str()) {
        Some("FeatureCollection") => {}
        Some(other) => {
            return Err(IngestError::Structure(format!(
                "top-level type is {other:?}, expected \"FeatureCollection\""
            )))
        }
        None => return Err(IngestError::Structure("top-level object has no \"type\"".into())),
    }
    let features = match obj.get("features") {
        None | Some(serde_json::Value::Null) => &[][..],
        Some(serde_json::Value::Array(items)) => items.as_slice(),
        Some(_) => return Err(IngestError::Structure("\"features\" is not an array".into())),
    };
    Ok((features, obj.get("properties").and_then(|p| p.as_object())))
}
