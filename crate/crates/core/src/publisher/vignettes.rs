use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::imageops::FilterType;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::fetch::Fetcher;
use super::{io_err, write_if_changed, PublishError, WriteStats};
use crate::exec::Execution;
use crate::schema::{FieldKind, FormatRegistry, UlspDataset};

pub const VIGNETTE_MAX_SIDE: u32 = 800;
pub const VIGNETTE_JPEG_QUALITY: u8 = 85;
pub const INDEX_FILE: &str = ".index.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FetchFailure {
    pub id: String,
    pub url: String,
    pub reason: String,
}

/// Outcome of a vignette run. `attempted == succeeded + failed.len()`;
/// vignettes already up to date are counted in `skipped`, not attempted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FetchReport {
    pub attempted: usize,
    pub succeeded: usize,
    pub skipped: usize,
    pub failed: Vec<FetchFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct IndexEntry {
    url: String,
    sha256: String,
}

/// Sidecar index: vignette file name to source URL and content hash.
type VignetteIndex = BTreeMap<String, IndexEntry>;

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Target size: longest side at most [`VIGNETTE_MAX_SIDE`], never upscaled.
pub fn vignette_size(width: u32, height: u32) -> (u32, u32) {
    let longest = width.max(height);
    if longest <= VIGNETTE_MAX_SIDE {
        return (width, height);
    }
    let scale = f64::from(VIGNETTE_MAX_SIDE) / f64::from(longest);
    let side = |v: u32| ((f64::from(v) * scale).round() as u32).clamp(1, VIGNETTE_MAX_SIDE);
    (side(width), side(height))
}

/// Decodes an image, downsizes it and re-encodes it as JPEG.
pub fn make_vignette(source: &[u8]) -> Result<Vec<u8>, String> {
    let img = image::load_from_memory(source).map_err(|e| format!("cannot decode image: {e}"))?;
    let (w, h) = vignette_size(img.width(), img.height());
    let img = if (w, h) == (img.width(), img.height()) {
        img
    } else {
        img.resize_exact(w, h, FilterType::Triangle)
    };
    let rgb = img.to_rgb8();
    let mut out = Vec::new();
    JpegEncoder::new_with_quality(&mut out, VIGNETTE_JPEG_QUALITY)
        .encode_image(&rgb)
        .map_err(|e| format!("cannot encode JPEG: {e}"))?;
    Ok(out)
}

/// Features with an image URL, as (id, url), in dataset order.
fn image_jobs(ds: &UlspDataset, reg: &FormatRegistry) -> Vec<(String, String)> {
    ds.features
        .iter()
        .filter_map(|f| {
            let spec = reg.first_of(f.kind, FieldKind::ImageUrl)?;
            Some((f.id.clone(), f.field(&spec.key)?.to_string()))
        })
        .collect()
}

pub(crate) fn fetch_into(
    ds: &UlspDataset,
    reg: &FormatRegistry,
    fetcher: &dyn Fetcher,
    root: &Path,
    exec: Execution,
    stats: &mut WriteStats,
) -> Result<FetchReport, PublishError> {
    let dir = root.join("vignettes");
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let index_path = dir.join(INDEX_FILE);
    let old_index: VignetteIndex = std::fs::read(&index_path)
        .ok()
        .and_then(|b| serde_json::from_slice(&b).ok())
        .unwrap_or_default();

    let jobs = image_jobs(ds, reg);
    let mut report = FetchReport::default();
    let mut index = VignetteIndex::new();
    let mut pending = Vec::new();
    for (id, url) in &jobs {
        let file = format!("{}.jpg", super::file_stem(id));
        let current = old_index.get(&file).filter(|e| e.url == *url).and_then(|e| {
            let bytes = std::fs::read(dir.join(&file)).ok()?;
            (sha256_hex(&bytes) == e.sha256).then(|| e.clone())
        });
        match current {
            Some(entry) => {
                report.skipped += 1;
                index.insert(file, entry);
            }
            None => pending.push((id.clone(), url.clone(), file)),
        }
    }

    let results = exec.map(&pending, |(_, url, _)| {
        fetcher
            .fetch(url)
            .map_err(|e| e.to_string())
            .and_then(|bytes| make_vignette(&bytes))
    });
    for ((id, url, file), result) in pending.into_iter().zip(results) {
        report.attempted += 1;
        match result {
            Ok(jpeg) => {
                write_if_changed(&dir.join(&file), &jpeg, stats)?;
                index.insert(file, IndexEntry { url, sha256: sha256_hex(&jpeg) });
                report.succeeded += 1;
            }
            Err(reason) => report.failed.push(FetchFailure { id, url, reason }),
        }
    }

    let wanted: BTreeSet<String> = index.keys().cloned().collect();
    remove_stale(&dir, "jpg", &wanted)?;
    let mut bytes = serde_json::to_vec_pretty(&index).expect("index serializes");
    bytes.push(b'\n');
    write_if_changed(&index_path, &bytes, stats)?;
    Ok(report)
}

/// Deletes `*.<ext>` files of `dir` whose name is not in `wanted`.
pub(crate) fn remove_stale(dir: &Path, ext: &str, wanted: &BTreeSet<String>) -> Result<(), PublishError> {
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        if path.extension().and_then(|e| e.to_str()) == Some(ext) && !wanted.contains(&name) {
            std::fs::remove_file(&path).map_err(io_err(&path))?;
        }
    }
    Ok(())
}

/// Downloads and resizes the image of every feature that has one into
/// `<root>/vignettes/<ulsp_id>.jpg`. Per-image failures are reported, never
/// fatal; vignettes whose source URL and content are unchanged are skipped.
pub fn fetch_vignettes(
    ds: &UlspDataset,
    reg: &FormatRegistry,
    fetcher: &dyn Fetcher,
    root: &Path,
    exec: Execution,
) -> Result<FetchReport, PublishError> {
    fetch_into(ds, reg, fetcher, root, exec, &mut WriteStats::default())
}
