use std::fmt::Write;

use crate::schema::{Geometry, GeometryClass, Position, UlspDataset, UlspFeature};
use crate::{Diagnostic, Outcome};

const HEADER: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<gpx version="1.1" creator="fieldatlas" xmlns="http://www.topografix.com/GPX/1/1" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" xsi:schemaLocation="http://www.topografix.com/GPX/1/1 http://www.topografix.com/GPX/1/1/gpx.xsd">
"#;

/// XML text with markup escaped and characters XML 1.0 forbids removed.
fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\t' | '\n' | '\r' => out.push(c),
            c if (c as u32) < 0x20 || c == '\u{FFFE}' || c == '\u{FFFF}' => {}
            c => out.push(c),
        }
    }
    out
}

fn element(out: &mut String, indent: &str, name: &str, text: &str) {
    let _ = writeln!(out, "{indent}<{name}>{}</{name}>", escape(text));
}

/// GPX longitude is `[-180, 180)`; the 180th meridian is written as -180.
fn lat_lon_attrs(p: &Position) -> String {
    let lon = if p.lon == 180.0 { -180.0 } else { p.lon };
    format!(r#"lat="{}" lon="{}""#, p.lat, lon)
}

fn point_body(out: &mut String, indent: &str, p: &Position) {
    if let Some(ele) = p.ele {
        let _ = writeln!(out, "{indent}<ele>{ele}</ele>");
    }
}

fn write_wpt(out: &mut String, f: &UlspFeature, p: &Position) {
    let _ = writeln!(out, "  <wpt {}>", lat_lon_attrs(p));
    point_body(out, "    ", p);
    element(out, "    ", "name", f.display_name());
    if let Some(desc) = f.field("Descrizione") {
        element(out, "    ", "desc", desc);
    }
    element(out, "    ", "type", f.kind.name());
    out.push_str("  </wpt>\n");
}

fn write_trk(out: &mut String, f: &UlspFeature, lines: &[Vec<Position>]) {
    out.push_str("  <trk>\n");
    element(out, "    ", "name", f.display_name());
    if let Some(desc) = f.field("Descrizione") {
        element(out, "    ", "desc", desc);
    }
    element(out, "    ", "type", f.kind.name());
    for line in lines {
        out.push_str("    <trkseg>\n");
        for p in line {
            if p.ele.is_some() {
                let _ = writeln!(out, "      <trkpt {}>", lat_lon_attrs(p));
                point_body(out, "        ", p);
                out.push_str("      </trkpt>\n");
            } else {
                let _ = writeln!(out, "      <trkpt {}/>", lat_lon_attrs(p));
            }
        }
        out.push_str("    </trkseg>\n");
    }
    out.push_str("  </trk>\n");
}

/// GPX 1.1 document: point kinds become `wpt`, line kinds `trk` with one
/// `trkseg` per line. Waypoints come first, then tracks, each in dataset
/// order. Features of unknown kind, with a geometry not matching their kind,
/// or with out-of-range coordinates are skipped and reported as warnings.
pub fn to_gpx(ds: &UlspDataset) -> Outcome<Vec<u8>> {
    let mut out = String::from(HEADER);
    let meta = &ds.meta;
    if !meta.nome.is_empty() || !meta.descrizione.is_empty() {
        out.push_str("  <metadata>\n");
        if !meta.nome.is_empty() {
            element(&mut out, "    ", "name", &meta.nome);
        }
        if !meta.descrizione.is_empty() {
            element(&mut out, "    ", "desc", &meta.descrizione);
        }
        out.push_str("  </metadata>\n");
    }

    let mut warnings = Vec::new();
    let mut skip = |f: &UlspFeature, why: &str| warnings.push(Diagnostic::new(&f.id, "", format!("not exported to GPX: {why}")));
    // The schema orders every wpt before the first trk.
    let mut tracks = String::new();
    for f in &ds.features {
        if f.geometry.positions().any(|p| !p.in_range()) {
            skip(f, "coordinate out of range");
            continue;
        }
        match (f.kind.geometry_class(), &f.geometry) {
            (Some(GeometryClass::Point), Geometry::Point(p)) => write_wpt(&mut out, f, p),
            (Some(GeometryClass::Line), Geometry::MultiLineString(lines)) => write_trk(&mut tracks, f, lines),
            (None, _) => skip(f, "unknown kind"),
            _ => skip(f, "geometry does not match kind"),
        }
    }
    out.push_str(&tracks);
    out.push_str("</gpx>\n");
    Outcome::new(out.into_bytes(), warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{CollectionMeta, FeatureKind};

    fn count(doc: &str, tag: &str) -> usize {
        doc.matches(&format!("<{tag}>")).count() + doc.matches(&format!("<{tag} ")).count()
    }

    #[test]
    fn one_poi() {
        let f = UlspFeature::new(FeatureKind::Poi, Geometry::Point(Position::with_ele(10.5, 43.9, 120.0)))
            .with_id("p")
            .with_field("Nome", "Rocca & Torre")
            .with_field("Descrizione", "x<y");
        let out = to_gpx(&UlspDataset::new(CollectionMeta::named("D"), vec![f]));
        let doc = String::from_utf8(out.value).unwrap();
        assert_eq!((count(&doc, "wpt"), count(&doc, "trk")), (1, 0));
        assert!(doc.contains(r#"<wpt lat="43.9" lon="10.5">"#));
        assert!(doc.contains("<ele>120</ele>"));
        assert!(doc.contains("<name>Rocca &amp; Torre</name>"));
        assert!(doc.contains("<desc>x&lt;y</desc>"));
    }

    #[test]
    fn track_segments() {
        let line = vec![Position::new(1.0, 1.0), Position::new(2.0, 2.0)];
        let f = UlspFeature::new(FeatureKind::Percorso, Geometry::MultiLineString(vec![line.clone(), line]))
            .with_id("t");
        let doc = String::from_utf8(to_gpx(&UlspDataset::new(CollectionMeta::default(), vec![f])).value).unwrap();
        assert_eq!(count(&doc, "trk"), 1);
        assert_eq!(count(&doc, "trkseg"), 2);
        assert!(doc.contains("<name>t</name>"));
        assert!(!doc.contains("<metadata>"));
    }

    #[test]
    fn unknown_skipped_and_empty_valid() {
        let f = UlspFeature::new(FeatureKind::Unknown, Geometry::Point(Position::new(1.0, 1.0)));
        let out = to_gpx(&UlspDataset::new(CollectionMeta::default(), vec![f]));
        assert_eq!(out.warnings.len(), 1);
        let doc = String::from_utf8(out.value).unwrap();
        assert_eq!(count(&doc, "wpt"), 0);
        assert!(doc.ends_with("</gpx>\n"));
    }

    #[test]
    fn antimeridian_and_control_chars() {
        assert_eq!(lat_lon_attrs(&Position::new(180.0, 0.0)), r#"lat="0" lon="-180""#);
        assert_eq!(escape("a\u{1}b'"), "ab&apos;");
    }
}
