use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde_json::{Map, Value};

use super::{collection_parts, parse_json, IngestError};
use crate::schema::{
    classify_feature, CollectionMeta, FeatureKind, FormatRegistry, Geometry, Position,
    UlspDataset, UlspFeature, ID_KEY, TYPE_KEY,
};
use crate::text::value_to_text;

/// Parses any GeoJSON FeatureCollection. Nothing is dropped: properties
/// outside the registry land in `unrecognized`, geometries other than Point
/// and MultiLineString are kept verbatim on `Unknown` features.
pub fn parse_geojson(source: &[u8], reg: &FormatRegistry) -> Result<UlspDataset, IngestError> {
    let doc = parse_json(source)?;
    let (features, properties) = collection_parts(&doc)?;

    let mut ds = UlspDataset::default();
    if let Some(props) = properties {
        let (meta, extra) = meta_from_properties(props);
        ds.meta = meta;
        ds.extra_meta = extra;
    }
    ds.features = features
        .iter()
        .enumerate()
        .map(|(i, f)| {
            f.as_object()
                .map(|obj| feature_from_object(obj, reg))
                .ok_or_else(|| IngestError::Structure(format!("feature #{i} is not an object")))
        })
        .collect::<Result<_, _>>()?;
    Ok(ds)
}

fn meta_from_properties(props: &Map<String, Value>) -> (CollectionMeta, BTreeMap<String, Value>) {
    let text = |k: &str| props.get(k).map(value_to_text).unwrap_or_default();
    let url = |k: &str| Some(text(k)).filter(|s| !s.trim().is_empty());
    let meta = CollectionMeta {
        nome: text("Nome"),
        descrizione: text("Descrizione"),
        umap_key: url("umapKey"),
        web_page_url: url("WebPageURL"),
    };
    let extra = props
        .iter()
        .filter(|(k, _)| !matches!(k.as_str(), "Nome" | "Descrizione" | "umapKey" | "WebPageURL"))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    (meta, extra)
}

pub(crate) fn feature_from_object(obj: &Map<String, Value>, reg: &FormatRegistry) -> UlspFeature {
    let empty = Map::new();
    let props = obj.get("properties").and_then(Value::as_object).unwrap_or(&empty);
    let raw_geometry = obj.get("geometry").cloned().unwrap_or(Value::Null);
    let geometry = parse_geometry(&raw_geometry);

    let mut kind = classify_feature(props, geometry.type_name());
    if matches!(geometry, Geometry::Other(_)) {
        kind = FeatureKind::Unknown;
    }

    let mut feature = UlspFeature::new(kind, geometry);
    if kind == FeatureKind::Unknown {
        feature.raw_type = props.get(TYPE_KEY).cloned();
    }
    feature.id = props.get(ID_KEY).map(value_to_text).unwrap_or_default();

    let mut recognized = IndexMap::new();
    for (key, value) in props {
        if key == TYPE_KEY || key == ID_KEY {
            continue;
        }
        if reg.has_field(kind, key) {
            recognized.insert(key.clone(), value_to_text(value));
        } else {
            feature.unrecognized.insert(key.clone(), value.clone());
        }
    }
    reg.order_recognized(kind, &mut recognized);
    feature.recognized = recognized;
    feature
}

fn parse_position(v: &Value) -> Option<Position> {
    let coords = v.as_array()?;
    let nums: Option<Vec<f64>> = coords.iter().map(Value::as_f64).collect();
    match nums?.as_slice() {
        [lon, lat] => Some(Position::new(*lon, *lat)),
        [lon, lat, ele] => Some(Position::with_ele(*lon, *lat, *ele)),
        _ => None,
    }
}

fn parse_line(v: &Value) -> Option<Vec<Position>> {
    v.as_array()?.iter().map(parse_position).collect()
}

/// Point and MultiLineString become typed geometries; anything else,
/// including malformed coordinates, is carried as raw JSON.
pub(crate) fn parse_geometry(raw: &Value) -> Geometry {
    let typed = match raw.get("type").and_then(Value::as_str) {
        Some("Point") => raw.get("coordinates").and_then(parse_position).map(Geometry::Point),
        Some("MultiLineString") => raw
            .get("coordinates")
            .and_then(Value::as_array)
            .and_then(|lines| lines.iter().map(parse_line).collect::<Option<Vec<_>>>())
            .map(Geometry::MultiLineString),
        _ => None,
    };
    typed.unwrap_or_else(|| Geometry::Other(raw.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn parse(v: Value) -> UlspDataset {
        parse_geojson(v.to_string().as_bytes(), &FormatRegistry::default()).unwrap()
    }

    #[test]
    fn minimal_collection() {
        let ds = parse_geojson(br#"{"type":"FeatureCollection","features":[]}"#, &FormatRegistry::default()).unwrap();
        assert!(ds.features.is_empty());
        assert_eq!(ds.meta, CollectionMeta::default());
    }

    #[test]
    fn meta_and_poi() {
        let ds = parse(json!({
            "type": "FeatureCollection",
            "properties": {"Nome": "Fase1", "umapKey": "", "progetto": "ulsp"},
            "features": [{
                "type": "Feature",
                "properties": {"ulsp_type": "POI", "Nome": "Rocca", "speed": 2},
                "geometry": {"type": "Point", "coordinates": [10.5, 43.9, 300]}
            }]
        }));
        assert_eq!(ds.meta.nome, "Fase1");
        assert_eq!(ds.meta.umap_key, None);
        assert_eq!(ds.extra_meta["progetto"], json!("ulsp"));
        let f = &ds.features[0];
        assert_eq!(f.kind, FeatureKind::Poi);
        assert_eq!(f.field("Nome"), Some("Rocca"));
        assert_eq!(f.unrecognized["speed"], json!(2));
        assert_eq!(f.geometry, Geometry::Point(Position::with_ele(10.5, 43.9, 300.0)));
    }

    #[test]
    fn malformed_reports_offset() {
        match parse_geojson(b"{", &FormatRegistry::default()).unwrap_err() {
            IngestError::Parse { offset, .. } => assert_eq!(offset, 1),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn non_collection_rejected() {
        let err = parse_geojson(br#"{"type":"Feature"}"#, &FormatRegistry::default()).unwrap_err();
        assert!(matches!(err, IngestError::Structure(_)));
    }

    #[test]
    fn other_geometries_pass_through() {
        let line = json!({"type": "LineString", "coordinates": [[1, 2], [3, 4]]});
        let ds = parse(json!({
            "type": "FeatureCollection",
            "features": [
                {"type": "Feature", "properties": {"ulsp_type": "Percorso", "Nome": "x"}, "geometry": line},
                {"type": "Feature", "properties": null, "geometry": null}
            ]
        }));
        assert_eq!(ds.features[0].kind, FeatureKind::Unknown);
        assert_eq!(ds.features[0].raw_type, Some(json!("Percorso")));
        assert_eq!(ds.features[0].geometry, Geometry::Other(line));
        assert_eq!(ds.features[0].unrecognized["Nome"], json!("x"));
        assert_eq!(ds.features[1].geometry, Geometry::Other(Value::Null));
    }

    #[test]
    fn recognized_in_registry_order() {
        let ds = parse(json!({
            "type": "FeatureCollection",
            "features": [{
                "type": "Feature",
                "properties": {"Tags": ["grotta", "acqua"], "ulsp_id": 7, "Nome": "G", "ulsp_type": "POI"},
                "geometry": {"type": "Point", "coordinates": [1, 2]}
            }]
        }));
        let f = &ds.features[0];
        assert_eq!(f.id, "7");
        assert_eq!(f.recognized.keys().collect::<Vec<_>>(), ["Nome", "Tags"]);
        assert_eq!(f.field("Tags"), Some("grotta, acqua"));
    }
}
