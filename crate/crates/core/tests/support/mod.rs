//! Test fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod gpx_schema;

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use fieldatlas_core::publisher::{FetchError, Fetcher};
use fieldatlas_core::schema::FieldKind;
use fieldatlas_core::{CollectionMeta, FeatureKind, FormatRegistry, Geometry, Position, UlspDataset, UlspFeature};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

const WORDS: &[&str] = &[
    "grotta", "rocca", "sentiero", "fonte", "castello", "chiesa", "mulino", "ponte", "Garfagnana",
    "Serchio", "cà", "l'eremo", "\"citato\"", "a,b", "pipe|x", "<tag>", "&", "ñ", "città",
];

pub fn text(rng: &mut StdRng, words: usize) -> String {
    let n = rng.gen_range(1..=words.max(1));
    let mut s: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect();
    if rng.gen_bool(0.1) {
        s.push("\nriga due");
    }
    let mut out = s.join(" ");
    if rng.gen_bool(0.2) {
        out = format!("  {out} ");
    }
    out
}

fn coord(rng: &mut StdRng, max: f64) -> f64 {
    let v: f64 = rng.gen_range(-max..=max);
    if rng.gen_bool(0.5) {
        (v * 1e9).round() / 1e9
    } else {
        (v * 1e3).round() / 1e3
    }
}

pub fn position(rng: &mut StdRng) -> Position {
    let mut p = Position::new(coord(rng, 180.0), coord(rng, 90.0));
    if rng.gen_bool(0.3) {
        p.ele = Some((rng.gen_range(-50.0..3000.0f64) * 100.0).round() / 100.0);
    }
    p
}

pub fn geometry_for(rng: &mut StdRng, kind: FeatureKind) -> Geometry {
    if kind.is_point_kind() || (kind == FeatureKind::Unknown && rng.gen_bool(0.5)) {
        return Geometry::Point(position(rng));
    }
    if kind == FeatureKind::Unknown {
        return Geometry::Other(json!({"type": "Polygon", "coordinates": [[[1.5, 2.0], [3.0, 4.25], [1.5, 2.0]]]}));
    }
    let lines = rng.gen_range(1..=3);
    Geometry::MultiLineString(
        (0..lines)
            .map(|_| (0..rng.gen_range(2..=6)).map(|_| position(rng)).collect())
            .collect(),
    )
}

fn field_value(rng: &mut StdRng, spec: &fieldatlas_core::FieldSpec) -> String {
    match spec.kind {
        FieldKind::Enum => spec.options.choose(rng).unwrap().clone(),
        FieldKind::Number => format!("{}", rng.gen_range(0..5000)),
        FieldKind::Url | FieldKind::ImageUrl => format!("https://img.example.org/{}.jpg", rng.gen_range(0..1000)),
        FieldKind::Tags => {
            let n = rng.gen_range(1..=3);
            (0..n).map(|_| *["grotta", "chiesa", "acqua", "panorama"].choose(rng).unwrap()).collect::<Vec<_>>().join(", ")
        }
        FieldKind::Text => text(rng, 3),
        FieldKind::Longtext => text(rng, 12),
    }
}

fn raw_value(rng: &mut StdRng) -> Value {
    match rng.gen_range(0..6) {
        0 => json!(rng.gen_range(-1000..1000)),
        1 => json!(rng.gen_range(0.0..100.0f64)),
        2 => json!(rng.gen_bool(0.5)),
        3 => json!([text(rng, 1), rng.gen_range(0..9)]),
        4 => json!({"nested": text(rng, 2), "n": null}),
        _ => json!(text(rng, 4)),
    }
}

pub struct GenOptions {
    pub kinds: Vec<FeatureKind>,
    pub unknown_share: f64,
    pub id_share: f64,
    pub extras: bool,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self {
            kinds: FeatureKind::CONCRETE.to_vec(),
            unknown_share: 0.05,
            id_share: 0.7,
            extras: true,
        }
    }
}

/// A feature that conforms to the registry (required fields present, enum
/// and number values legal).
pub fn feature(rng: &mut StdRng, kind: FeatureKind, reg: &FormatRegistry, opts: &GenOptions) -> UlspFeature {
    let mut f = UlspFeature::new(kind, geometry_for(rng, kind));
    if rng.gen_bool(opts.id_share) {
        f.id = format!("id-{:016x}", rng.gen::<u64>());
    }
    for spec in reg.fields(kind) {
        if spec.required || rng.gen_bool(0.4) {
            f.recognized.insert(spec.key.clone(), field_value(rng, spec));
        }
    }
    if kind == FeatureKind::Unknown {
        if rng.gen_bool(0.5) {
            f.raw_type = Some(json!(["sito", "poi", "Strada"].choose(rng).unwrap()));
        }
        f.unrecognized.insert("Nome".into(), json!(text(rng, 2)));
    }
    if opts.extras {
        for _ in 0..rng.gen_range(0..3) {
            let key = ["speed", "time_created", "colore", "note", "z-order", "Nome_alt"].choose(rng).unwrap();
            if !reg.has_field(kind, key) {
                f.unrecognized.insert(key.to_string(), raw_value(rng));
            }
        }
    }
    f
}

pub fn meta(rng: &mut StdRng) -> CollectionMeta {
    CollectionMeta {
        nome: format!("Fase{}-{}", rng.gen_range(1..9), rng.gen_range(100000..999999)),
        descrizione: text(rng, 10),
        umap_key: rng.gen_bool(0.7).then(|| format!("https://umap.openstreetmap.fr/it/map/m_{}", rng.gen_range(0..99999))),
        web_page_url: rng.gen_bool(0.7).then(|| format!("https://example.org/dataset/{}", rng.gen_range(0..99999))),
    }
}

pub fn dataset(rng: &mut StdRng, max_features: usize, reg: &FormatRegistry, opts: &GenOptions) -> UlspDataset {
    let n = rng.gen_range(0..=max_features);
    let features = (0..n)
        .map(|_| {
            let kind = if rng.gen_bool(opts.unknown_share) {
                FeatureKind::Unknown
            } else {
                *opts.kinds.choose(rng).unwrap()
            };
            feature(rng, kind, reg, opts)
        })
        .collect();
    let mut ds = UlspDataset::new(meta(rng), features);
    if opts.extras && rng.gen_bool(0.3) {
        ds.extra_meta.insert("progetto".into(), json!("PRIN"));
    }
    ds
}

/// Encodes an RGB test image of the given size as PNG.
pub fn png_image(width: u32, height: u32) -> Vec<u8> {
    let img = image::RgbImage::from_fn(width, height, |x, y| image::Rgb([(x % 251) as u8, (y % 241) as u8, 128]));
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png).unwrap();
    out.into_inner()
}

/// Serves canned bytes by URL; anything else is not found.
#[derive(Default)]
pub struct FakeFetcher {
    pub responses: HashMap<String, Vec<u8>>,
    pub calls: AtomicUsize,
}

impl FakeFetcher {
    pub fn with(mut self, url: &str, bytes: Vec<u8>) -> Self {
        self.responses.insert(url.to_string(), bytes);
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Fetcher for FakeFetcher {
    fn fetch(&self, url: &str) -> Result<Vec<u8>, FetchError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.responses.get(url).cloned().ok_or(FetchError::NotFound)
    }
}

/// Decodes the single QR code in a PNG with an independent reader.
pub fn decode_qr_png(png: &[u8]) -> String {
    let img = image::load_from_memory(png).unwrap().to_luma8();
    let mut prepared = rqrr::PreparedImage::prepare(img);
    let grids = prepared.detect_grids();
    assert_eq!(grids.len(), 1, "expected exactly one QR code");
    let (_, content) = grids[0].decode().expect("QR decodes");
    content
}
