//! Structural validator for GPX 1.1 documents, written from the published
//! XSD (http://www.topografix.com/GPX/1/1/gpx.xsd). It covers the element
//! types a writer of waypoints and tracks can emit: sequences with their
//! cardinalities, required attributes, coordinate ranges and the lexical
//! form of `xsd:decimal`. Extension content is accepted unchecked, as the
//! schema's `processContents="lax"` allows.

use roxmltree::{Document, Node};

pub const GPX_NS: &str = "http://www.topografix.com/GPX/1/1";

const UNBOUNDED: usize = usize::MAX;

#[derive(Clone, Copy)]
enum Content {
    Text,
    Decimal,
    Complex(&'static [(&'static str, usize, usize)]),
    Any,
}

fn content_of(name: &str) -> Content {
    use Content::*;
    match name {
        "gpx" => Complex(&[("metadata", 0, 1), ("wpt", 0, UNBOUNDED), ("rte", 0, UNBOUNDED), ("trk", 0, UNBOUNDED), ("extensions", 0, 1)]),
        "metadata" => Complex(&[
            ("name", 0, 1), ("desc", 0, 1), ("author", 0, 1), ("copyright", 0, 1), ("link", 0, UNBOUNDED),
            ("time", 0, 1), ("keywords", 0, 1), ("bounds", 0, 1), ("extensions", 0, 1),
        ]),
        "wpt" | "rtept" | "trkpt" => Complex(&[
            ("ele", 0, 1), ("time", 0, 1), ("magvar", 0, 1), ("geoidheight", 0, 1), ("name", 0, 1), ("cmt", 0, 1),
            ("desc", 0, 1), ("src", 0, 1), ("link", 0, UNBOUNDED), ("sym", 0, 1), ("type", 0, 1), ("fix", 0, 1),
            ("sat", 0, 1), ("hdop", 0, 1), ("vdop", 0, 1), ("pdop", 0, 1), ("ageofdgpsdata", 0, 1), ("dgpsid", 0, 1),
            ("extensions", 0, 1),
        ]),
        "rte" => Complex(&[
            ("name", 0, 1), ("cmt", 0, 1), ("desc", 0, 1), ("src", 0, 1), ("link", 0, UNBOUNDED), ("number", 0, 1),
            ("type", 0, 1), ("extensions", 0, 1), ("rtept", 0, UNBOUNDED),
        ]),
        "trk" => Complex(&[
            ("name", 0, 1), ("cmt", 0, 1), ("desc", 0, 1), ("src", 0, 1), ("link", 0, UNBOUNDED), ("number", 0, 1),
            ("type", 0, 1), ("extensions", 0, 1), ("trkseg", 0, UNBOUNDED),
        ]),
        "trkseg" => Complex(&[("trkpt", 0, UNBOUNDED), ("extensions", 0, 1)]),
        "link" => Complex(&[("text", 0, 1), ("type", 0, 1)]),
        "ele" | "magvar" | "geoidheight" | "hdop" | "vdop" | "pdop" | "ageofdgpsdata" => Decimal,
        "extensions" => Any,
        _ => Text,
    }
}

pub fn is_decimal(s: &str) -> bool {
    let s = s.strip_prefix(['-', '+']).unwrap_or(s);
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    (!int.is_empty() || !frac.is_empty())
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.bytes().all(|b| b.is_ascii_digit())
}

fn decimal_attr(node: Node, name: &str, lo: f64, hi: f64, hi_inclusive: bool) -> Result<(), String> {
    let raw = node
        .attribute(name)
        .ok_or_else(|| format!("<{}> lacks required attribute {name}", node.tag_name().name()))?;
    if !is_decimal(raw) {
        return Err(format!("{name}=\"{raw}\" is not an xsd:decimal"));
    }
    let v: f64 = raw.parse().unwrap();
    let below_hi = if hi_inclusive { v <= hi } else { v < hi };
    if v < lo || !below_hi {
        return Err(format!("{name}=\"{raw}\" out of range"));
    }
    Ok(())
}

fn check_element(node: Node) -> Result<(), String> {
    let name = node.tag_name().name();
    if node.tag_name().namespace() != Some(GPX_NS) {
        return Err(format!("<{name}> is not in the GPX 1.1 namespace"));
    }
    if matches!(name, "wpt" | "rtept" | "trkpt") {
        decimal_attr(node, "lat", -90.0, 90.0, true)?;
        decimal_attr(node, "lon", -180.0, 180.0, false)?;
    }
    if name == "link" && node.attribute("href").is_none() {
        return Err("<link> lacks href".into());
    }
    match content_of(name) {
        Content::Any => Ok(()),
        Content::Text | Content::Decimal => {
            if let Some(child) = node.children().find(Node::is_element) {
                return Err(format!("<{name}> may not contain <{}>", child.tag_name().name()));
            }
            let text: String = node.children().filter_map(|c| c.text()).collect();
            if matches!(content_of(name), Content::Decimal) && !is_decimal(text.trim()) {
                return Err(format!("<{name}>{text}</{name}> is not an xsd:decimal"));
            }
            Ok(())
        }
        Content::Complex(seq) => {
            if let Some(t) = node.children().filter(|c| c.is_text()).filter_map(|c| c.text()).find(|t| !t.trim().is_empty()) {
                return Err(format!("<{name}> has character content {t:?}"));
            }
            let children: Vec<Node> = node.children().filter(Node::is_element).collect();
            let mut pos = 0;
            for &(part, min, max) in seq {
                let mut n = 0;
                while pos < children.len() && children[pos].tag_name().name() == part {
                    n += 1;
                    pos += 1;
                }
                if n < min || n > max {
                    return Err(format!("<{name}> has {n} <{part}>, allowed {min}..{max}"));
                }
            }
            if pos < children.len() {
                return Err(format!("<{}> not allowed at this position inside <{name}>", children[pos].tag_name().name()));
            }
            children.into_iter().try_for_each(check_element)
        }
    }
}

/// Counts of the top-level collections of a valid document.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct GpxSummary {
    pub waypoints: usize,
    pub tracks: usize,
    pub track_points: usize,
}

pub fn validate_gpx(bytes: &[u8]) -> Result<GpxSummary, String> {
    let text = std::str::from_utf8(bytes).map_err(|e| format!("not UTF-8: {e}"))?;
    let doc = Document::parse(text).map_err(|e| format!("not well-formed: {e}"))?;
    let root = doc.root_element();
    if root.tag_name().name() != "gpx" {
        return Err("root element is not <gpx>".into());
    }
    if root.attribute("version") != Some("1.1") {
        return Err("version attribute must be 1.1".into());
    }
    if root.attribute("creator").is_none() {
        return Err("creator attribute is required".into());
    }
    check_element(root)?;
    let count = |n: &str| root.children().filter(|c| c.tag_name().name() == n).count();
    Ok(GpxSummary {
        waypoints: count("wpt"),
        tracks: count("trk"),
        track_points: root.descendants().filter(|c| c.tag_name().name() == "trkpt").count(),
    })
}
