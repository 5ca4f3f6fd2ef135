use serde_json::Value;

use super::IngestError;
use crate::schema::{FeatureKind, FormatRegistry, Geometry, Position, UlspFeature, ID_KEY};

/// A data row that could not be turned into a feature. `line` is the
/// 1-based line of the record in the source (the header is line 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct CsvImport {
    pub features: Vec<UlspFeature>,
    pub rejected: Vec<RowError>,
}

impl CsvImport {
    pub fn rows(&self) -> usize {
        self.features.len() + self.rejected.len()
    }
}

/// Imports one feature per data row. `lat` and `lon` are required columns;
/// `ele` and `ulsp_id` are read when present; columns named after a field of
/// `kind` become recognized values, all others unrecognized text.
pub fn import_csv(source: &[u8], kind: FeatureKind, reg: &FormatRegistry) -> Result<CsvImport, IngestError> {
    if !kind.is_point_kind() {
        return Err(IngestError::UnsupportedKind(kind));
    }
    let source = source.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(source);
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| IngestError::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let column = |name: &str| header.iter().position(|h| h == name);
    let lat_col = column("lat").ok_or(IngestError::MissingColumn("lat"))?;
    let lon_col = column("lon").ok_or(IngestError::MissingColumn("lon"))?;
    let ele_col = column("ele");
    let id_col = column(ID_KEY);

    let mut out = CsvImport::default();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                out.rejected.push(RowError { line, message: e.to_string() });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let cell = |i: usize| record.get(i).unwrap_or("").trim();

        let coord = |i: usize, name: &str| -> Result<f64, String> {
            cell(i)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("{name} {:?} is not a number", cell(i)))
        };
        let position = coord(lat_col, "lat").and_then(|lat| {
            let lon = coord(lon_col, "lon")?;
            let ele = match ele_col.map(cell).filter(|s| !s.is_empty()) {
                None => None,
                Some(_) => Some(coord(ele_col.unwrap(), "ele")?),
            };
            Ok(Position { lon, lat, ele })
        });
        let position = match position {
            Ok(p) => p,
            Err(message) => {
                out.rejected.push(RowError { line, message });
                continue;
            }
        };

        let mut f = UlspFeature::new(kind, Geometry::Point(position));
        if let Some(i) = id_col {
            f.id = cell(i).to_string();
        }
        for (i, name) in header.iter().enumerate() {
            if [Some(lat_col), Some(lon_col), ele_col, id_col].contains(&Some(i)) || name.is_empty() {
                continue;
            }
            let value = cell(i);
            if value.is_empty() {
                continue;
            }
            if reg.has_field(kind, name) {
                f.recognized.insert(name.clone(), value.to_string());
            } else {
                f.unrecognized.insert(name.clone(), Value::String(value.to_string()));
            }
        }
        reg.order_recognized(kind, &mut f.recognized);
        out.features.push(f);
    }
    Ok(out)
}
