//! Dataset data model, format registry, validation and canonical form.

mod canonical;
mod registry;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde_json::Value;

pub use canonical::{canonicalize, round_coord, COORD_DECIMALS};
pub use registry::{
    FieldKind, FieldSpec, FormatRegistry, KindStyle, RegistryError, DEFAULT_REGISTRY_JSON,
};
pub use validate::{validate_dataset, ValidationReport};

/// Property key selecting the feature kind.
pub const TYPE_KEY: &str = "ulsp_type";
/// Property key holding the stable feature identity.
pub const ID_KEY: &str = "ulsp_id";

/// The six feature kinds plus `Unknown` for anything unclassifiable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureKind {
    Sito,
    Poi,
    QrTag,
    Risorsa,
    Percorso,
    Itinerario,
    Unknown,
}

/// Geometry family a concrete kind requires.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryClass {
    Point,
    Line,
}

impl FeatureKind {
    pub const CONCRETE: [FeatureKind; 6] = [
        FeatureKind::Sito,
        FeatureKind::Poi,
        FeatureKind::QrTag,
        FeatureKind::Risorsa,
        FeatureKind::Percorso,
        FeatureKind::Itinerario,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Sito => "Sito",
            FeatureKind::Poi => "POI",
            FeatureKind::QrTag => "QRtag",
            FeatureKind::Risorsa => "Risorsa",
            FeatureKind::Percorso => "Percorso",
            FeatureKind::Itinerario => "Itinerario",
            FeatureKind::Unknown => "Unknown",
        }
    }

    /// Exact, case-sensitive lookup among the six concrete names.
    pub fn from_name(name: &str) -> Option<FeatureKind> {
        Self::CONCRETE.into_iter().find(|k| k.name() == name)
    }

    pub fn geometry_class(self) -> Option<GeometryClass> {
        match self {
            FeatureKind::Sito | FeatureKind::Poi | FeatureKind::QrTag | FeatureKind::Risorsa => {
                Some(GeometryClass::Point)
            }
            FeatureKind::Percorso | FeatureKind::Itinerario => Some(GeometryClass::Line),
            FeatureKind::Unknown => None,
        }
    }

    pub fn is_point_kind(self) -> bool {
        self.geometry_class() == Some(GeometryClass::Point)
    }

    pub fn is_concrete(self) -> bool {
        self != FeatureKind::Unknown
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown feature kind {0:?}")]
pub struct UnknownKindName(pub String);

impl FromStr for FeatureKind {
    type Err = UnknownKindName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureKind::from_name(s).ok_or_else(|| UnknownKindName(s.to_string()))
    }
}

/// Returns the kind named by `ulsp_type` when it is one of the six names.
/// The geometry type is deliberately ignored: a mismatch is reported by
/// validation, not folded into classification.
pub fn classify_feature(raw_properties: &serde_json::Map<String, Value>, _geometry_type: &str) -> FeatureKind {
    raw_properties
        .get(TYPE_KEY)
        .and_then(Value::as_str)
        .and_then(FeatureKind::from_name)
        .unwrap_or(FeatureKind::Unknown)
}

/// WGS84 position in decimal degrees, elevation in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub lon: f64,
    pub lat: f64,
    pub ele: Option<f64>,
}

impl Position {
    pub fn new(lon: f64, lat: f64) -> Self {
        Self { lon, lat, ele: None }
    }

    pub fn with_ele(lon: f64, lat: f64, ele: f64) -> Self {
        Self { lon, lat, ele: Some(ele) }
    }

    pub fn in_range(&self) -> bool {
        (-180.0..=180.0).contains(&self.lon) && (-90.0..=90.0).contains(&self.lat)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(Position),
    MultiLineString(Vec<Vec<Position>>),
    /// Any other GeoJSON geometry (or `null`), carried through verbatim.
    Other(Value),
}

impl Geometry {
    pub fn class(&self) -> Option<GeometryClass> {
        match self {
            Geometry::Point(_) => Some(GeometryClass::Point),
            Geometry::MultiLineString(_) => Some(GeometryClass::Line),
            Geometry::Other(_) => None,
        }
    }

    pub fn type_name(&self) -> &str {
        match self {
            Geometry::Point(_) => "Point",
            Geometry::MultiLineString(_) => "MultiLineString",
            Geometry::Other(v) => v.get("type").and_then(Value::as_str).unwrap_or("null"),
        }
    }

    pub fn positions(&self) -> Box<dyn Iterator<Item = &Position> + '_> {
        match self {
            Geometry::Point(p) => Box::new(std::iter::once(p)),
            Geometry::MultiLineString(lines) => Box::new(lines.iter().flatten()),
            Geometry::Other(_) => Box::new(std::iter::empty()),
        }
    }
}

/// One geolocated record of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct UlspFeature {
    /// Value of `ulsp_id`; empty until [`canonicalize`] assigns one.
    pub id: String,
    pub kind: FeatureKind,
    /// The source `ulsp_type` value of an `Unknown` feature, re-emitted as is.
    pub raw_type: Option<Value>,
    pub geometry: Geometry,
    /// Registry fields of `kind`, kept in registry order.
    pub recognized: IndexMap<String, String>,
    pub unrecognized: BTreeMap<String, Value>,
}

impl UlspFeature {
    pub fn new(kind: FeatureKind, geometry: Geometry) -> Self {
        Self {
            id: String::new(),
            kind,
            raw_type: None,
            geometry,
            recognized: IndexMap::new(),
            unrecognized: BTreeMap::new(),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Sets a recognized value without reordering; see
    /// [`FormatRegistry::order_recognized`].
    pub fn with_field(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.recognized.insert(key.into(), value.into());
        self
    }

    pub fn with_extra(mut self, key: impl Into<String>, value: Value) -> Self {
        self.unrecognized.insert(key.into(), value);
        self
    }

    pub fn field(&self, key: &str) -> Option<&str> {
        self.recognized.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    /// `Nome` when set, else the id.
    pub fn display_name(&self) -> &str {
        self.field("Nome").unwrap_or(&self.id)
    }
}

/// Collection-level metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CollectionMeta {
    pub nome: String,
    pub descrizione: String,
    pub umap_key: Option<String>,
    pub web_page_url: Option<String>,
}

impl CollectionMeta {
    pub fn named(nome: impl Into<String>) -> Self {
        Self {
            nome: nome.into(),
            ..Self::default()
        }
    }

    /// Invariant violations as (field, message) pairs.
    pub fn problems(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if self.nome.trim().is_empty() {
            out.push(("Nome", "dataset name is empty".to_string()));
        }
        for (field, value) in [("umapKey", &self.umap_key), ("WebPageURL", &self.web_page_url)] {
            if let Some(v) = value {
                if let Err(e) = url::Url::parse(v.trim()) {
                    out.push((field, format!("not an absolute URL ({e}): {v:?}")));
                }
            }
        }
        out
    }
}

/// One FeatureCollection: metadata plus ordered features.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UlspDataset {
    pub meta: CollectionMeta,
    pub features: Vec<UlspFeature>,
    /// Collection properties other than the four metadata keys.
    pub extra_meta: BTreeMap<String, Value>,
}

impl UlspDataset {
    pub fn new(meta: CollectionMeta, features: Vec<UlspFeature>) -> Self {
        Self {
            meta,
            features,
            extra_meta: BTreeMap::new(),
        }
    }

    pub fn feature(&self, id: &str) -> Option<&UlspFeature> {
        self.features.iter().find(|f| f.id == id)
    }

    pub fn count_by_kind(&self) -> BTreeMap<FeatureKind, usize> {
        let mut counts = BTreeMap::new();
        for f in &self.features {
            *counts.entry(f.kind).or_insert(0) += 1;
        }
        counts
    }
}
