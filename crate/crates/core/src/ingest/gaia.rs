use serde_json::Value;

use super::{collection_parts, parse_json, IngestError};
use crate::schema::{
    canonicalize, CollectionMeta, FeatureKind, FieldKind, FormatRegistry, Geometry, Position,
    UlspDataset, UlspFeature,
};
use crate::text::value_to_text;
use crate::{Diagnostic, Outcome};

/// Property keys read from a Gaia GPS GeoJSON export.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaiaMapping {
    pub track_name_key: String,
    pub waypoint_name_key: String,
    pub waypoint_notes_key: String,
    pub waypoint_photo_key: String,
}

impl Default for GaiaMapping {
    fn default() -> Self {
        Self {
            track_name_key: "title".into(),
            waypoint_name_key: "title".into(),
            waypoint_notes_key: "notes".into(),
            waypoint_photo_key: "photos".into(),
        }
    }
}

impl GaiaMapping {
    pub fn check(&self) -> Result<(), IngestError> {
        for (name, key) in [
            ("track_name_key", &self.track_name_key),
            ("waypoint_name_key", &self.waypoint_name_key),
            ("waypoint_notes_key", &self.waypoint_notes_key),
            ("waypoint_photo_key", &self.waypoint_photo_key),
        ] {
            if key.trim().is_empty() {
                return Err(IngestError::Structure(format!("Gaia mapping {name} is empty")));
            }
        }
        Ok(())
    }
}

/// Converts a Gaia GPS export: tracks become `Percorso`, waypoints `POI`.
///
/// The result is canonical and carries a placeholder dataset name
/// (`gaia-<crc32 of the source>`) until metadata is edited.
pub fn gaia_split(
    source: &[u8],
    mapping: &GaiaMapping,
    reg: &FormatRegistry,
) -> Result<Outcome<UlspDataset>, IngestError> {
    mapping.check()?;
    let doc = parse_json(source)?;
    let (features, _) = collection_parts(&doc)?;

    let mut warnings = Vec::new();
    let mut out = Vec::new();
    let (mut tracks, mut waypoints) = (0usize, 0usize);
    for (i, raw) in features.iter().enumerate() {
        let subject = format!("source #{i}");
        let props = raw
            .get("properties")
            .and_then(Value::as_object)
            .cloned()
            .unwrap_or_default();
        let geometry = raw.get("geometry").unwrap_or(&Value::Null);
        let gtype = geometry.get("type").and_then(Value::as_str).unwrap_or("null");
        let coords = geometry.get("coordinates").unwrap_or(&Value::Null);

        match gtype {
            "Point" => {
                let Some(pos) = position(coords) else {
                    warnings.push(Diagnostic::new(subject, "geometry", "malformed Point, skipped"));
                    continue;
                };
                if !pos.in_range() {
                    warnings.push(Diagnostic::new(subject, "geometry", "coordinate out of range, skipped"));
                    continue;
                }
                waypoints += 1;
                let mut f = UlspFeature::new(FeatureKind::Poi, Geometry::Point(pos));
                let mut props = props;
                let name = take_text(&mut props, &mapping.waypoint_name_key)
                    .unwrap_or_else(|| format!("POI {waypoints}"));
                set_or_keep(&mut f, reg, "Nome", &mapping.waypoint_name_key, name);
                if let Some(notes) = take_text(&mut props, &mapping.waypoint_notes_key) {
                    set_or_keep(&mut f, reg, "Descrizione", &mapping.waypoint_notes_key, notes);
                }
                if let Some(photos) = props.remove(&mapping.waypoint_photo_key) {
                    let image_key = reg.first_of(FeatureKind::Poi, FieldKind::ImageUrl).map(|s| s.key.clone());
                    match (first_photo(&photos), image_key) {
                        (Some(url), Some(key)) => {
                            f.recognized.insert(key, url);
                            if photos.as_array().is_some_and(|a| a.len() > 1) {
                                f.unrecognized.insert(mapping.waypoint_photo_key.clone(), photos);
                            }
                        }
                        _ => {
                            f.unrecognized.insert(mapping.waypoint_photo_key.clone(), photos);
                        }
                    }
                }
                finish(f, props, reg, &mut out);
            }
            "LineString" | "MultiLineString" => {
                let lines = match gtype {
                    "LineString" => line(coords).map(|l| vec![l]),
                    _ => coords.as_array().and_then(|ls| ls.iter().map(line).collect()),
                };
                let lines: Vec<_> = lines.unwrap_or_default().into_iter().filter(|l| l.len() >= 2).collect();
                if lines.is_empty() {
                    warnings.push(Diagnostic::new(subject, "geometry", "track without a usable line, skipped"));
                    continue;
                }
                if lines.iter().flatten().any(|p| !p.in_range()) {
                    warnings.push(Diagnostic::new(subject, "geometry", "coordinate out of range, skipped"));
                    continue;
                }
                tracks += 1;
                let mut f = UlspFeature::new(FeatureKind::Percorso, Geometry::MultiLineString(lines));
                let mut props = props;
                let name = take_text(&mut props, &mapping.track_name_key)
                    .unwrap_or_else(|| format!("Percorso {tracks}"));
                set_or_keep(&mut f, reg, "Nome", &mapping.track_name_key, name);
                finish(f, props, reg, &mut out);
            }
            other => warnings.push(Diagnostic::new(
                subject,
                "geometry",
                format!("{other} geometry is not convertible, skipped"),
            )),
        }
    }

    if out.is_empty() {
        warnings.push(Diagnostic::collection("", "export contains no convertible tracks or waypoints"));
    }
    let nome = format!("gaia-{:08x}", crc32fast::hash(source));
    let ds = canonicalize(&UlspDataset::new(CollectionMeta::named(nome), out));
    Ok(Outcome::new(ds, warnings))
}

fn take_text(props: &mut serde_json::Map<String, Value>, key: &str) -> Option<String> {
    let text = value_to_text(&props.remove(key)?);
    Some(text).filter(|t| !t.trim().is_empty())
}

/// Writes `field` when the registry knows it for the feature's kind, else
/// keeps the value under its source key.
fn set_or_keep(f: &mut UlspFeature, reg: &FormatRegistry, field: &str, source_key: &str, value: String) {
    if reg.has_field(f.kind, field) {
        f.recognized.insert(field.to_string(), value);
    } else {
        f.unrecognized.insert(source_key.to_string(), Value::String(value));
    }
}

fn finish(
    mut f: UlspFeature,
    props: serde_json::Map<String, Value>,
    reg: &FormatRegistry,
    out: &mut Vec<UlspFeature>,
) {
    for (k, v) in props {
        if !f.recognized.contains_key(&k) {
            f.unrecognized.insert(k, v);
        }
    }
    reg.order_recognized(f.kind, &mut f.recognized);
    out.push(f);
}

/// First photo URL: a plain string, the first string of a list, or the
/// `url`/`fullsize_url` member of a photo object.
fn first_photo(v: &Value) -> Option<String> {
    match v {
        Value::String(s) if !s.trim().is_empty() => Some(s.clone()),
        Value::Array(items) => items.first().and_then(first_photo),
        Value::Object(obj) => ["url", "fullsize_url"]
            .iter()
            .find_map(|k| obj.get(*k).and_then(first_photo)),
        _ => None,
    }
}

fn position(v: &Value) -> Option<Position> {
    let a = v.as_array()?;
    let n: Option<Vec<f64>> = a.iter().map(Value::as_f64).collect();
    match n?.as_slice() {
        [lon, lat] => Some(Position::new(*lon, *lat)),
        [lon, lat, ele, ..] => Some(Position::with_ele(*lon, *lat, *ele)),
        _ => None,
    }
}

fn line(v: &Value) -> Option<Vec<Position>> {
    v.as_array()?.iter().map(position).collect()
}
