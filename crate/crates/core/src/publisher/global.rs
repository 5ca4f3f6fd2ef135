use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use super::PublishError;
use crate::exec::Execution;
use crate::export::{layer_bytes, layer_features, to_pretty_bytes, UmapExport};
use crate::schema::{canonicalize, FeatureKind, FormatRegistry, UlspDataset};

/// Per-kind layers over the features of every dataset, each popup prefixed
/// with its dataset name. Datasets are processed with `exec`; layer order
/// and content follow the input order regardless.
pub fn publish_global(
    all: &[UlspDataset],
    reg: &FormatRegistry,
    exec: Execution,
) -> Result<UmapExport, PublishError> {
    let mut seen = BTreeSet::new();
    let duplicates: BTreeSet<String> = all
        .iter()
        .filter(|ds| !seen.insert(ds.meta.nome.trim()))
        .map(|ds| ds.meta.nome.trim().to_string())
        .collect();
    if !duplicates.is_empty() {
        return Err(PublishError::DuplicateNames(duplicates.into_iter().collect()));
    }

    let per_dataset = exec.map(all, |ds| {
        let ds = canonicalize(ds);
        let (layers, skipped) = layer_features(&ds, reg, true);
        (ds.meta.nome.clone(), ds.features.len(), layers, skipped)
    });

    let mut grouped: BTreeMap<FeatureKind, Vec<Value>> = BTreeMap::new();
    let mut datasets = Vec::with_capacity(per_dataset.len());
    let mut skipped_total = 0;
    for (nome, count, layers, skipped) in per_dataset {
        datasets.push(json!({"Nome": nome, "features": count, "skipped": skipped}));
        skipped_total += skipped;
        for (kind, features) in layers {
            grouped.entry(kind).or_default().extend(features);
        }
    }
    let layers: Vec<_> = grouped
        .into_iter()
        .map(|(kind, features)| layer_bytes(kind, features, reg))
        .collect();
    let manifest = json!({
        "datasets": datasets,
        "layers": layers.iter().map(|l| json!({"name": l.name, "count": l.count})).collect::<Vec<_>>(),
        "skipped": skipped_total,
    });
    Ok(UmapExport {
        layers,
        manifest: to_pretty_bytes(&manifest),
        skipped: skipped_total,
    })
}
