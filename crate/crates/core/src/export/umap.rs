use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use super::geojson::{feature_with_properties, meta_value, properties_value, to_pretty_bytes};
use crate::schema::{FeatureKind, FieldKind, FormatRegistry, UlspDataset, UlspFeature};
use crate::transform::feature_tags;

/// One uMap layer file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    /// Kind name; the file is `<name>.geojson`.
    pub name: String,
    pub count: usize,
    pub bytes: Vec<u8>,
}

impl Layer {
    pub fn file_name(&self) -> String {
        format!("{}.geojson", self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UmapExport {
    pub layers: Vec<Layer>,
    pub manifest: Vec<u8>,
    /// Features of unknown kind, not placed in any layer.
    pub skipped: usize,
}

/// URL of the published repository of a dataset, when the registry names a
/// repository base.
pub(crate) fn repository_url(ds: &UlspDataset, reg: &FormatRegistry) -> Option<String> {
    let base = reg.repository_base_url.as_deref()?.trim_end_matches('/');
    (!ds.meta.nome.is_empty()).then(|| format!("{base}/{}", ds.meta.nome))
}

/// Popup text in uMap's directive syntax: a heading with the name, the
/// description, an image embed, the tags and links to the feature URL, the
/// dataset web page and the dataset repository, each only when set.
pub fn popup_text(f: &UlspFeature, ds: &UlspDataset, reg: &FormatRegistry, dataset_prefix: bool) -> String {
    let mut lines = Vec::new();
    if dataset_prefix {
        lines.push(format!("**{}**", ds.meta.nome));
    }
    lines.push(format!("# {}", f.display_name()));
    if let Some(desc) = f.field("Descrizione") {
        lines.push(desc.to_string());
    }
    if let Some(img) = reg.first_of(f.kind, FieldKind::ImageUrl).and_then(|s| f.field(&s.key)) {
        lines.push(format!("{{{{{img}}}}}"));
    }
    let tags: Vec<&str> = feature_tags(f, reg).collect();
    if !tags.is_empty() {
        lines.push(format!("Tag: {}", tags.join(", ")));
    }
    if let Some(spec) = reg.first_of(f.kind, FieldKind::Url) {
        if let Some(url) = f.field(&spec.key) {
            lines.push(format!("[[{url}|{}]]", spec.label));
        }
    }
    if let Some(url) = &ds.meta.web_page_url {
        lines.push(format!("[[{url}|Pagina web]]"));
    }
    if let Some(url) = repository_url(ds, reg) {
        lines.push(format!("[[{url}|Repository del dataset]]"));
    }
    lines.join("\n")
}

fn icon_for(f: &UlspFeature, reg: &FormatRegistry) -> Option<String> {
    feature_tags(f, reg)
        .find_map(|t| reg.icon_map.get(t).cloned())
        .or_else(|| reg.style(f.kind).and_then(|s| s.icon.clone()))
}

fn umap_feature(f: &UlspFeature, ds: &UlspDataset, reg: &FormatRegistry, dataset_prefix: bool) -> Value {
    let mut props = properties_value(f);
    props.insert("name".into(), f.display_name().into());
    props.insert("description".into(), popup_text(f, ds, reg, dataset_prefix).into());
    if f.kind.is_point_kind() {
        let mut options = Map::new();
        if let Some(style) = reg.style(f.kind) {
            options.insert("color".into(), style.color.clone().into());
        }
        if let Some(icon) = icon_for(f, reg) {
            options.insert("iconUrl".into(), icon.into());
        }
        props.insert("_umap_options".into(), Value::Object(options));
    }
    feature_with_properties(props, &f.geometry)
}

/// Layer features grouped by kind, plus the number of unknown-kind features.
pub(crate) fn layer_features(
    ds: &UlspDataset,
    reg: &FormatRegistry,
    dataset_prefix: bool,
) -> (BTreeMap<FeatureKind, Vec<Value>>, usize) {
    let mut layers: BTreeMap<FeatureKind, Vec<Value>> = BTreeMap::new();
    let mut skipped = 0;
    for f in &ds.features {
        if f.kind.is_concrete() {
            layers.entry(f.kind).or_default().push(umap_feature(f, ds, reg, dataset_prefix));
        } else {
            skipped += 1;
        }
    }
    (layers, skipped)
}

pub(crate) fn layer_bytes(kind: FeatureKind, features: Vec<Value>, reg: &FormatRegistry) -> Layer {
    let mut options = Map::new();
    options.insert("name".into(), kind.name().into());
    if let Some(style) = reg.style(kind) {
        options.insert("color".into(), style.color.clone().into());
    }
    let count = features.len();
    let mut doc = Map::new();
    doc.insert("type".into(), "FeatureCollection".into());
    doc.insert("_umap_options".into(), Value::Object(options));
    doc.insert("features".into(), Value::Array(features));
    Layer {
        name: kind.name().to_string(),
        count,
        bytes: to_pretty_bytes(&Value::Object(doc)),
    }
}

fn manifest_meta(ds: &UlspDataset) -> Value {
    Value::Object(meta_value(ds))
}

/// One GeoJSON layer file per kind present, ready for uMap import, plus a
/// JSON manifest `{dataset, layers: [{name, count}], skipped}`.
pub fn to_umap_layers(ds: &UlspDataset, reg: &FormatRegistry) -> UmapExport {
    let (grouped, skipped) = layer_features(ds, reg, false);
    let layers: Vec<Layer> = grouped
        .into_iter()
        .map(|(kind, features)| layer_bytes(kind, features, reg))
        .collect();
    let manifest = json!({
        "dataset": manifest_meta(ds),
        "layers": layers.iter().map(|l| json!({"name": l.name, "count": l.count})).collect::<Vec<_>>(),
        "skipped": skipped,
    });
    UmapExport {
        layers,
        manifest: to_pretty_bytes(&manifest),
        skipped,
    }
}
