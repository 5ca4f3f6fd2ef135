use std::fmt::Write;

use crate::schema::{FeatureKind, Geometry, UlspDataset, UlspFeature};

const EXCERPT_CHARS: usize = 120;

fn cell(text: &str) -> String {
    text.replace('\\', "\\\\")
        .replace('|', "\\|")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn excerpt(f: &UlspFeature) -> String {
    let desc = f.field("Descrizione").unwrap_or("");
    let mut out: String = desc.chars().take(EXCERPT_CHARS).collect();
    if desc.chars().count() > EXCERPT_CHARS {
        out.push('…');
    }
    cell(&out)
}

/// Markdown overview of a dataset: title, description, map and web links,
/// a count per kind and one table per kind present. No timestamps, so the
/// output depends on the dataset alone.
pub fn render_readme(ds: &UlspDataset) -> Vec<u8> {
    let mut md = String::new();
    let meta = &ds.meta;
    let _ = writeln!(md, "# {}\n", meta.nome);
    if !meta.descrizione.is_empty() {
        let _ = writeln!(md, "{}\n", meta.descrizione);
    }
    if meta.umap_key.is_some() || meta.web_page_url.is_some() {
        if let Some(url) = &meta.umap_key {
            let _ = writeln!(md, "- Mappa uMap: <{url}>");
        }
        if let Some(url) = &meta.web_page_url {
            let _ = writeln!(md, "- Pagina web: <{url}>");
        }
        md.push('\n');
    }

    let counts = ds.count_by_kind();
    md.push_str("## Contenuto\n\n| Tipo | Elementi |\n| --- | ---: |\n");
    for kind in FeatureKind::CONCRETE {
        let _ = writeln!(md, "| {kind} | {} |", counts.get(&kind).copied().unwrap_or(0));
    }
    if let Some(n) = counts.get(&FeatureKind::Unknown) {
        let _ = writeln!(md, "| (non classificati) | {n} |");
    }

    for kind in FeatureKind::CONCRETE {
        let features: Vec<&UlspFeature> = ds.features.iter().filter(|f| f.kind == kind).collect();
        if features.is_empty() {
            continue;
        }
        let _ = writeln!(md, "\n## {kind}\n");
        if kind.is_point_kind() {
            md.push_str("| Nome | Coordinate | Descrizione |\n| --- | --- | --- |\n");
        } else {
            md.push_str("| Nome | Descrizione |\n| --- | --- |\n");
        }
        for f in features {
            let name = cell(f.display_name());
            match (&f.geometry, kind.is_point_kind()) {
                (Geometry::Point(p), true) => {
                    let _ = writeln!(md, "| {name} | {:.6}, {:.6} | {} |", p.lat, p.lon, excerpt(f));
                }
                (_, true) => {
                    let _ = writeln!(md, "| {name} |  | {} |", excerpt(f));
                }
                (_, false) => {
                    let _ = writeln!(md, "| {name} | {} |", excerpt(f));
                }
            }
        }
    }
    md.into_bytes()
}
