use std::collections::HashMap;

use serde::Serialize;

use super::{FeatureKind, FormatRegistry, Geometry, UlspDataset, UlspFeature};
use crate::Diagnostic;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Diagnostic>,
    pub warnings: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Checks a dataset against the structural invariants and the registry.
/// Never fails: every problem ends up in the report.
pub fn validate_dataset(ds: &UlspDataset, reg: &FormatRegistry) -> ValidationReport {
    let mut report = ValidationReport::default();

    for (field, message) in ds.meta.problems() {
        report.errors.push(Diagnostic::collection(field, message));
    }
    if ds.meta.umap_key.is_none() {
        report.warnings.push(Diagnostic::collection("umapKey", "no uMap link"));
    }
    if ds.meta.web_page_url.is_none() {
        report.warnings.push(Diagnostic::collection("WebPageURL", "no web page link"));
    }

    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (index, feature) in ds.features.iter().enumerate() {
        let subject = subject_of(feature, index);
        if feature.id.is_empty() {
            report
                .warnings
                .push(Diagnostic::new(&subject, "ulsp_id", "missing id, one is assigned on canonicalization"));
        } else if let Some(first) = seen.insert(&feature.id, index) {
            report.errors.push(Diagnostic::new(
                &subject,
                "ulsp_id",
                format!("duplicate id, also used by feature #{first}"),
            ));
        }
        check_feature(feature, &subject, reg, &mut report);
    }
    report
}

fn subject_of(feature: &UlspFeature, index: usize) -> String {
    if feature.id.is_empty() {
        format!("#{index}")
    } else {
        feature.id.clone()
    }
}

fn check_feature(f: &UlspFeature, subject: &str, reg: &FormatRegistry, report: &mut ValidationReport) {
    match f.kind.geometry_class() {
        None => report.warnings.push(Diagnostic::new(
            subject,
            "ulsp_type",
            "unknown feature kind, ignored by exports",
        )),
        Some(class) if f.geometry.class() != Some(class) => report.errors.push(Diagnostic::new(
            subject,
            "geometry",
            format!("kind/geometry mismatch: {} with {} geometry", f.kind, f.geometry.type_name()),
        )),
        Some(_) => {}
    }

    if let Geometry::MultiLineString(lines) = &f.geometry {
        if lines.is_empty() {
            report.errors.push(Diagnostic::new(subject, "geometry", "MultiLineString has no lines"));
        }
        if let Some(i) = lines.iter().position(|l| l.len() < 2) {
            report.errors.push(Diagnostic::new(
                subject,
                "geometry",
                format!("line {i} has fewer than 2 positions"),
            ));
        }
    }
    if let Some(p) = f.geometry.positions().find(|p| !p.in_range()) {
        report.errors.push(Diagnostic::new(
            subject,
            "geometry",
            format!("coordinate out of range: lon {}, lat {}", p.lon, p.lat),
        ));
    }

    if f.kind != FeatureKind::Unknown {
        for spec in reg.fields(f.kind) {
            match f.field(&spec.key) {
                None if spec.required => report.errors.push(Diagnostic::new(
                    subject,
                    &spec.key,
                    "missing required field",
                )),
                Some(value) => {
                    if let Err(message) = reg.check_value(spec, value) {
                        report.errors.push(Diagnostic::new(subject, &spec.key, message));
                    }
                }
                None => {}
            }
        }
        for key in f.recognized.keys().filter(|k| !reg.has_field(f.kind, k)) {
            report.errors.push(Diagnostic::new(
                subject,
                key,
                format!("not a field of {}", f.kind),
            ));
        }
    }

    for key in f.unrecognized.keys() {
        report
            .warnings
            .push(Diagnostic::new(subject, key, "unrecognized property"));
    }
}
