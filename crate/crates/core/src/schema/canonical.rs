use std::collections::{HashMap, HashSet};

use serde_json::Value;
use uuid::Uuid;

use super::{Geometry, Position, UlspDataset};
use crate::export::geojson::feature_value;

/// Coordinates are stored with this many decimals (about 0.1 m).
pub const COORD_DECIMALS: i32 = 6;

// Namespace for ids derived from feature content.
const ID_NAMESPACE: Uuid = Uuid::from_u128(0x6f1d_29a4_3c57_4b8e_9a0e_52d1_7c0b_e4f3);

pub fn round_coord(x: f64) -> f64 {
    let scale = 10f64.powi(COORD_DECIMALS);
    let r = (x * scale).round() / scale;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn round_position(p: &mut Position) {
    p.lon = round_coord(p.lon);
    p.lat = round_coord(p.lat);
    p.ele = p.ele.map(round_coord);
}

fn trim_in_place(s: &mut String) {
    let t = s.trim();
    if t.len() != s.len() {
        *s = t.to_string();
    }
}

/// Brings a dataset to canonical form: coordinates rounded to
/// [`COORD_DECIMALS`], text trimmed, empty recognized values dropped and an
/// id assigned to every feature lacking one.
///
/// Assigned ids are name-based UUIDs over the feature's canonical content and
/// its occurrence number among identical id-less features, so the function
/// is pure and idempotent.
pub fn canonicalize(ds: &UlspDataset) -> UlspDataset {
    let mut out = ds.clone();

    trim_in_place(&mut out.meta.nome);
    trim_in_place(&mut out.meta.descrizione);
    for url in [&mut out.meta.umap_key, &mut out.meta.web_page_url] {
        if let Some(u) = url.as_mut() {
            trim_in_place(u);
        }
        if url.as_deref() == Some("") {
            *url = None;
        }
    }

    for f in &mut out.features {
        trim_in_place(&mut f.id);
        match &mut f.geometry {
            Geometry::Point(p) => round_position(p),
            Geometry::MultiLineString(lines) => lines.iter_mut().flatten().for_each(round_position),
            Geometry::Other(_) => {}
        }
        f.recognized.values_mut().for_each(trim_in_place);
        f.recognized.retain(|_, v| !v.is_empty());
        for v in f.unrecognized.values_mut() {
            if let Value::String(s) = v {
                trim_in_place(s);
            }
        }
    }

    let mut taken: HashSet<String> = out
        .features
        .iter()
        .filter(|f| !f.id.is_empty())
        .map(|f| f.id.clone())
        .collect();
    let mut occurrences: HashMap<String, u64> = HashMap::new();
    for f in out.features.iter_mut().filter(|f| f.id.is_empty()) {
        let content = feature_value(f).to_string();
        let n = occurrences.entry(content.clone()).or_insert(0);
        let id = loop {
            let mut name = content.clone().into_bytes();
            name.extend_from_slice(&n.to_le_bytes());
            *n += 1;
            let id = Uuid::new_v5(&ID_NAMESPACE, &name).to_string();
            if !taken.contains(&id) {
                break id;
            }
        };
        taken.insert(id.clone());
        f.id = id;
    }
    out
}
