//! Dataset algebra behind the editing workflow. Every operation returns a
//! new dataset and leaves features it does not target untouched.

use std::collections::{BTreeSet, HashMap};

use indexmap::IndexMap;

use crate::schema::{canonicalize, CollectionMeta, FeatureKind, FieldKind, FormatRegistry, UlspDataset, UlspFeature};
use crate::text::{tag_tokens, value_to_text};
use crate::{Diagnostic, Outcome};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransformError {
    #[error("no feature with id {0:?}")]
    UnknownId(String),
    #[error("{target} is not a concrete kind")]
    NotConcrete { target: FeatureKind },
    #[error("cannot retype {id:?} from {from} to {target}: geometry class differs")]
    GeometryMismatch {
        id: String,
        from: FeatureKind,
        target: FeatureKind,
    },
    #[error("{key:?} is not a field of {kind}")]
    UnknownField { kind: FeatureKind, key: String },
    #[error("illegal value for {key:?}: {message}")]
    IllegalValue { key: String, message: String },
    #[error("feature {id:?} has no unrecognized property {key:?}")]
    MissingKey { id: String, key: String },
    #[error("invalid metadata: {}", .0.iter().map(|(f, m)| format!("{f}: {m}")).collect::<Vec<_>>().join("; "))]
    InvalidMeta(Vec<(String, String)>),
    #[error("filter needs at least one of kinds, ids or tag")]
    EmptyFilter,
}

/// Concatenates datasets in order. Metadata comes from the first part; when
/// two features share an id the later one replaces the earlier, and each
/// collision is reported as a warning. An empty list gives an empty dataset.
pub fn merge(parts: &[UlspDataset]) -> Outcome<UlspDataset> {
    if parts.is_empty() {
        return Outcome::clean(UlspDataset::default());
    }
    let parts: Vec<UlspDataset> = parts.iter().map(canonicalize).collect();
    let all: Vec<&UlspFeature> = parts.iter().flat_map(|p| &p.features).collect();

    let mut last: HashMap<&str, usize> = HashMap::new();
    for (i, f) in all.iter().enumerate() {
        last.insert(&f.id, i);
    }
    let mut warnings = Vec::new();
    let mut features = Vec::with_capacity(last.len());
    for (i, f) in all.iter().enumerate() {
        if last[f.id.as_str()] == i {
            features.push((*f).clone());
        } else {
            warnings.push(Diagnostic::new(
                &f.id,
                "ulsp_id",
                "duplicate id, replaced by a later occurrence",
            ));
        }
    }
    let mut merged = UlspDataset::new(parts[0].meta.clone(), features);
    merged.extra_meta = parts[0].extra_meta.clone();
    Outcome::new(canonicalize(&merged), warnings)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    Keep,
    Drop,
}

/// Feature selection. A feature matches when it satisfies every criterion
/// present; empty sets count as absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterSpec {
    pub kinds: Option<BTreeSet<FeatureKind>>,
    pub ids: Option<BTreeSet<String>>,
    pub tag: Option<String>,
    pub mode: FilterMode,
}

impl FilterSpec {
    pub fn keep() -> Self {
        Self {
            kinds: None,
            ids: None,
            tag: None,
            mode: FilterMode::Keep,
        }
    }

    pub fn drop() -> Self {
        Self {
            mode: FilterMode::Drop,
            ..Self::keep()
        }
    }

    pub fn kinds(mut self, kinds: impl IntoIterator<Item = FeatureKind>) -> Self {
        self.kinds = Some(kinds.into_iter().collect());
        self
    }

    pub fn ids<S: Into<String>>(mut self, ids: impl IntoIterator<Item = S>) -> Self {
        self.ids = Some(ids.into_iter().map(Into::into).collect());
        self
    }

    pub fn tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = Some(tag.into());
        self
    }

    fn kinds_set(&self) -> Option<&BTreeSet<FeatureKind>> {
        self.kinds.as_ref().filter(|s| !s.is_empty())
    }

    fn ids_set(&self) -> Option<&BTreeSet<String>> {
        self.ids.as_ref().filter(|s| !s.is_empty())
    }

    fn tag_text(&self) -> Option<&str> {
        self.tag.as_deref().map(str::trim).filter(|t| !t.is_empty())
    }

    pub fn check(&self) -> Result<(), TransformError> {
        if self.kinds_set().is_none() && self.ids_set().is_none() && self.tag_text().is_none() {
            return Err(TransformError::EmptyFilter);
        }
        Ok(())
    }

    pub fn matches(&self, f: &UlspFeature, reg: &FormatRegistry) -> bool {
        self.kinds_set().map_or(true, |k| k.contains(&f.kind))
            && self.ids_set().map_or(true, |ids| ids.contains(&f.id))
            && self.tag_text().map_or(true, |tag| feature_tags(f, reg).any(|t| t == tag))
    }
}

/// Tokens of the feature's tags field.
pub fn feature_tags<'a>(f: &'a UlspFeature, reg: &FormatRegistry) -> impl Iterator<Item = &'a str> {
    let tags = reg
        .first_of(f.kind, FieldKind::Tags)
        .and_then(|spec| f.field(&spec.key))
        .unwrap_or("");
    tag_tokens(tags)
}

pub fn filter(ds: &UlspDataset, spec: &FilterSpec, reg: &FormatRegistry) -> Result<UlspDataset, TransformError> {
    spec.check()?;
    let keep = spec.mode == FilterMode::Keep;
    let mut out = ds.clone();
    out.features.retain(|f| spec.matches(f, reg) == keep);
    Ok(out)
}

fn position_of(ds: &UlspDataset, id: &str) -> Result<usize, TransformError> {
    ds.features
        .iter()
        .position(|f| f.id == id)
        .ok_or_else(|| TransformError::UnknownId(id.to_string()))
}

/// Changes a feature's kind within the same geometry class. Recognized
/// values the target does not know move to `unrecognized`; unrecognized
/// values named like a target field are promoted. Nothing is deleted.
pub fn retype(
    ds: &UlspDataset,
    id: &str,
    target: FeatureKind,
    reg: &FormatRegistry,
) -> Result<UlspDataset, TransformError> {
    if !target.is_concrete() {
        return Err(TransformError::NotConcrete { target });
    }
    let i = position_of(ds, id)?;
    let mut out = ds.clone();
    let f = &mut out.features[i];
    if f.geometry.class() != target.geometry_class() {
        return Err(TransformError::GeometryMismatch {
            id: id.to_string(),
            from: f.kind,
            target,
        });
    }

    let mut recognized = IndexMap::new();
    for (k, v) in std::mem::take(&mut f.recognized) {
        if reg.has_field(target, &k) {
            recognized.insert(k, v);
        } else {
            f.unrecognized.insert(k, serde_json::Value::String(v));
        }
    }
    let promoted: Vec<String> = f
        .unrecognized
        .keys()
        .filter(|k| reg.has_field(target, k))
        .cloned()
        .collect();
    for k in promoted {
        let v = f.unrecognized.remove(&k).expect("key listed above");
        recognized.insert(k, value_to_text(&v));
    }
    reg.order_recognized(target, &mut recognized);
    f.recognized = recognized;
    f.kind = target;
    f.raw_type = None;
    Ok(out)
}

/// Replaces the collection metadata wholesale.
pub fn set_metadata(ds: &UlspDataset, meta: CollectionMeta) -> Result<UlspDataset, TransformError> {
    let problems = meta.problems();
    if !problems.is_empty() {
        return Err(TransformError::InvalidMeta(
            problems.into_iter().map(|(f, m)| (f.to_string(), m)).collect(),
        ));
    }
    let mut out = ds.clone();
    out.meta = meta;
    Ok(out)
}

fn checked_field<'r>(
    reg: &'r FormatRegistry,
    kind: FeatureKind,
    key: &str,
    value: Option<&str>,
) -> Result<&'r crate::FieldSpec, TransformError> {
    let spec = reg.field(kind, key).ok_or_else(|| TransformError::UnknownField {
        kind,
        key: key.to_string(),
    })?;
    if let Some(v) = value.filter(|v| !v.trim().is_empty()) {
        if spec.kind == FieldKind::Enum {
            reg.check_value(spec, v.trim())
                .map_err(|message| TransformError::IllegalValue { key: key.to_string(), message })?;
        }
    }
    Ok(spec)
}

/// Sets (`Some`) or clears (`None`) recognized values of one feature.
/// All changes are checked before any is applied.
pub fn edit_properties(
    ds: &UlspDataset,
    id: &str,
    changes: &IndexMap<String, Option<String>>,
    reg: &FormatRegistry,
) -> Result<UlspDataset, TransformError> {
    let i = position_of(ds, id)?;
    let kind = ds.features[i].kind;
    for (key, value) in changes {
        checked_field(reg, kind, key, value.as_deref())?;
    }
    let mut out = ds.clone();
    let f = &mut out.features[i];
    for (key, value) in changes {
        match value {
            Some(v) => {
                f.recognized.insert(key.clone(), v.clone());
            }
            None => {
                f.recognized.shift_remove(key);
            }
        }
    }
    reg.order_recognized(kind, &mut f.recognized);
    Ok(out)
}

/// Moves an unrecognized value into a recognized field.
pub fn adopt_property(
    ds: &UlspDataset,
    id: &str,
    from_key: &str,
    to_key: &str,
    reg: &FormatRegistry,
) -> Result<UlspDataset, TransformError> {
    let i = position_of(ds, id)?;
    let f = &ds.features[i];
    let value = f.unrecognized.get(from_key).ok_or_else(|| TransformError::MissingKey {
        id: id.to_string(),
        key: from_key.to_string(),
    })?;
    let text = value_to_text(value);
    checked_field(reg, f.kind, to_key, Some(&text))?;

    let mut out = ds.clone();
    let f = &mut out.features[i];
    f.unrecognized.remove(from_key);
    f.recognized.insert(to_key.to_string(), text);
    reg.order_recognized(f.kind, &mut f.recognized);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Discard {
    All,
    Keys(BTreeSet<String>),
}

pub fn discard_unrecognized(ds: &UlspDataset, id: &str, keys: &Discard) -> Result<UlspDataset, TransformError> {
    let i = position_of(ds, id)?;
    let mut out = ds.clone();
    let f = &mut out.features[i];
    match keys {
        Discard::All => f.unrecognized.clear(),
        Discard::Keys(keys) => f.unrecognized.retain(|k, _| !keys.contains(k)),
    }
    Ok(out)
}
