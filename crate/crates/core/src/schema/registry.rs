use std::collections::{BTreeMap, HashSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::FeatureKind;

/// The shipped default registry document.
pub const DEFAULT_REGISTRY_JSON: &str = include_str!("../../data/default_registry.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Text,
    Longtext,
    Url,
    ImageUrl,
    Tags,
    Number,
    Enum,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub key: String,
    pub label: String,
    pub kind: FieldKind,
    #[serde(default)]
    pub options: Vec<String>,
    #[serde(default)]
    pub required: bool,
}

/// Per-kind map styling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindStyle {
    pub color: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub icon: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("registry is not valid JSON at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("registry has no entry for kind {0}")]
    MissingKind(&'static str),
    #[error("registry names unknown kind {0:?}")]
    UnknownKind(String),
    #[error("registry field {kind}.{key}: {message}")]
    Field {
        kind: String,
        key: String,
        message: String,
    },
}

#[derive(Deserialize)]
struct RawRegistry {
    version: String,
    kinds: IndexMap<String, Vec<FieldSpec>>,
    #[serde(default)]
    icon_map: IndexMap<String, String>,
    #[serde(default)]
    styles: IndexMap<String, KindStyle>,
    #[serde(default)]
    repository_base_url: Option<String>,
}

/// Machine-readable description of the feature kinds and their fields.
#[derive(Debug, Clone, PartialEq)]
pub struct FormatRegistry {
    pub version: String,
    kinds: BTreeMap<FeatureKind, Vec<FieldSpec>>,
    /// Tag text to icon identifier, in document order.
    pub icon_map: IndexMap<String, String>,
    pub styles: BTreeMap<FeatureKind, KindStyle>,
    /// Base URL under which dataset repositories are published; the
    /// repository of a dataset is `<base>/<Nome>`.
    pub repository_base_url: Option<String>,
}

impl Default for FormatRegistry {
    fn default() -> Self {
        Self::load(DEFAULT_REGISTRY_JSON.as_bytes()).expect("shipped registry is valid")
    }
}

impl FormatRegistry {
    pub fn load(source: &[u8]) -> Result<Self, RegistryError> {
        let raw: RawRegistry = serde_json::from_slice(source).map_err(|e| RegistryError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;

        let mut kinds = BTreeMap::new();
        for (name, fields) in raw.kinds {
            let kind = FeatureKind::from_name(&name).ok_or_else(|| RegistryError::UnknownKind(name.clone()))?;
            check_fields(&name, &fields)?;
            kinds.insert(kind, fields);
        }
        if let Some(missing) = FeatureKind::CONCRETE.into_iter().find(|k| !kinds.contains_key(k)) {
            return Err(RegistryError::MissingKind(missing.name()));
        }

        let mut styles = BTreeMap::new();
        for (name, style) in raw.styles {
            let kind = FeatureKind::from_name(&name).ok_or(RegistryError::UnknownKind(name))?;
            styles.insert(kind, style);
        }

        Ok(Self {
            version: raw.version,
            kinds,
            icon_map: raw.icon_map,
            styles,
            repository_base_url: raw.repository_base_url,
        })
    }

    /// Field list of a kind; empty for `Unknown`.
    pub fn fields(&self, kind: FeatureKind) -> &[FieldSpec] {
        self.kinds.get(&kind).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn field(&self, kind: FeatureKind, key: &str) -> Option<&FieldSpec> {
        self.fields(kind).iter().find(|f| f.key == key)
    }

    pub fn has_field(&self, kind: FeatureKind, key: &str) -> bool {
        self.field(kind, key).is_some()
    }

    /// First field of the given field kind, e.g. the image URL of a POI.
    pub fn first_of(&self, kind: FeatureKind, field_kind: FieldKind) -> Option<&FieldSpec> {
        self.fields(kind).iter().find(|f| f.kind == field_kind)
    }

    pub fn style(&self, kind: FeatureKind) -> Option<&KindStyle> {
        self.styles.get(&kind)
    }

    /// Reorders a recognized map to registry order. Keys unknown to the
    /// registry go last, in their current order.
    pub fn order_recognized(&self, kind: FeatureKind, recognized: &mut IndexMap<String, String>) {
        let fields = self.fields(kind);
        let rank = |k: &str| fields.iter().position(|f| f.key == k).unwrap_or(usize::MAX);
        recognized.sort_by(|a, _, b, _| rank(a).cmp(&rank(b)));
    }

    /// Checks a value against the field's type constraints.
    pub fn check_value(&self, spec: &FieldSpec, value: &str) -> Result<(), String> {
        match spec.kind {
            FieldKind::Enum if !spec.options.iter().any(|o| o == value) => Err(format!(
                "{value:?} is not one of the options {:?}",
                spec.options
            )),
            FieldKind::Number if value.trim().parse::<f64>().map_or(true, |n| !n.is_finite()) => {
                Err(format!("{value:?} is not a number"))
            }
            _ => Ok(()),
        }
    }
}

fn check_fields(kind: &str, fields: &[FieldSpec]) -> Result<(), RegistryError> {
    let mut seen = HashSet::new();
    for f in fields {
        let err = |message: &str| RegistryError::Field {
            kind: kind.to_string(),
            key: f.key.clone(),
            message: message.to_string(),
        };
        if f.key.trim().is_empty() {
            return Err(err("empty key"));
        }
        if f.key == super::TYPE_KEY || f.key == super::ID_KEY {
            return Err(err("reserved key"));
        }
        if !seen.insert(f.key.as_str()) {
            return Err(err("duplicate key"));
        }
        match (f.kind, f.options.is_empty()) {
            (FieldKind::Enum, true) => return Err(err("enum field has no options")),
            (k, false) if k != FieldKind::Enum => return Err(err("options on a non-enum field")),
            _ => {}
        }
    }
    Ok(())
}
