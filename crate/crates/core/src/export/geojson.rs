use serde_json::{Map, Value};

use crate::schema::{Geometry, Position, UlspDataset, UlspFeature, ID_KEY, TYPE_KEY};

fn position_value(p: &Position) -> Value {
    let mut coords = vec![Value::from(p.lon), Value::from(p.lat)];
    if let Some(ele) = p.ele {
        coords.push(Value::from(ele));
    }
    Value::Array(coords)
}

pub(crate) fn geometry_value(g: &Geometry) -> Value {
    match g {
        Geometry::Point(p) => {
            let mut m = Map::new();
            m.insert("type".into(), "Point".into());
            m.insert("coordinates".into(), position_value(p));
            Value::Object(m)
        }
        Geometry::MultiLineString(lines) => {
            let coords = lines
                .iter()
                .map(|line| Value::Array(line.iter().map(position_value).collect()))
                .collect();
            let mut m = Map::new();
            m.insert("type".into(), "MultiLineString".into());
            m.insert("coordinates".into(), Value::Array(coords));
            Value::Object(m)
        }
        Geometry::Other(v) => v.clone(),
    }
}

/// Feature `properties` in canonical key order: kind, id, recognized fields
/// (registry order), unrecognized keys (sorted).
pub(crate) fn properties_value(f: &UlspFeature) -> Map<String, Value> {
    let mut props = Map::new();
    if f.kind.is_concrete() {
        props.insert(TYPE_KEY.into(), f.kind.name().into());
    } else if let Some(raw) = &f.raw_type {
        props.insert(TYPE_KEY.into(), raw.clone());
    }
    if !f.id.is_empty() {
        props.insert(ID_KEY.into(), f.id.clone().into());
    }
    for (k, v) in &f.recognized {
        props.insert(k.clone(), v.clone().into());
    }
    for (k, v) in &f.unrecognized {
        props.insert(k.clone(), v.clone());
    }
    props
}

pub(crate) fn feature_with_properties(props: Map<String, Value>, geometry: &Geometry) -> Value {
    let mut m = Map::new();
    m.insert("type".into(), "Feature".into());
    m.insert("properties".into(), Value::Object(props));
    m.insert("geometry".into(), geometry_value(geometry));
    Value::Object(m)
}

pub(crate) fn feature_value(f: &UlspFeature) -> Value {
    feature_with_properties(properties_value(f), &f.geometry)
}

pub(crate) fn meta_value(ds: &UlspDataset) -> Map<String, Value> {
    let meta = &ds.meta;
    let mut props = Map::new();
    props.insert("Nome".into(), meta.nome.clone().into());
    props.insert("Descrizione".into(), meta.descrizione.clone().into());
    props.insert("umapKey".into(), meta.umap_key.clone().unwrap_or_default().into());
    props.insert("WebPageURL".into(), meta.web_page_url.clone().unwrap_or_default().into());
    for (k, v) in &ds.extra_meta {
        props.insert(k.clone(), v.clone());
    }
    props
}

pub(crate) fn collection_value(properties: Map<String, Value>, features: Vec<Value>) -> Value {
    let mut m = Map::new();
    m.insert("type".into(), "FeatureCollection".into());
    m.insert("properties".into(), Value::Object(properties));
    m.insert("features".into(), Value::Array(features));
    Value::Object(m)
}

/// Pretty JSON, two-space indent, trailing newline.
pub(crate) fn to_pretty_bytes(v: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("JSON values always serialize");
    out.push(b'\n');
    out
}

/// Serializes a dataset as GeoJSON in canonical key order. Output is
/// byte-deterministic; apply [`crate::canonicalize`] first to get the
/// canonical form.
pub fn serialize_geojson(ds: &UlspDataset) -> Vec<u8> {
    let features = ds.features.iter().map(feature_value).collect();
    to_pretty_bytes(&collection_value(meta_value(ds), features))
}
