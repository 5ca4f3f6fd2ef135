//! Dataset repository directories and the consolidated global layer set.

mod fetch;
mod global;
mod qrtags;
mod readme;
mod vignettes;

use std::path::{Path, PathBuf};

pub use fetch::{FetchError, Fetcher, HttpFetcher, OfflineFetcher};
pub use global::publish_global;
pub use qrtags::{qrtag_url, render_qrtags};
pub use readme::render_readme;
pub use vignettes::{
    fetch_vignettes, make_vignette, vignette_size, FetchFailure, FetchReport, INDEX_FILE,
    VIGNETTE_JPEG_QUALITY, VIGNETTE_MAX_SIDE,
};

use crate::exec::Execution;
use crate::export::{serialize_geojson, to_gpx};
use crate::schema::{canonicalize, validate_dataset, FormatRegistry, UlspDataset, ValidationReport};
use crate::Diagnostic;

/// Concurrent image downloads during [`publish`].
pub const DEFAULT_FETCH_PARALLELISM: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum PublishError {
    #[error("dataset has {} validation error(s)", .0.errors.len())]
    Invalid(ValidationReport),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("QR rendering failed: {0}")]
    Render(String),
    #[error("duplicate dataset names: {}", .0.join(", "))]
    DuplicateNames(Vec<String>),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PublishError + '_ {
    move |source| PublishError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Bytes actually written to disk; unchanged files are not rewritten.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WriteStats {
    pub files_written: usize,
    pub bytes_written: u64,
}

pub(crate) fn write_if_changed(path: &Path, bytes: &[u8], stats: &mut WriteStats) -> Result<bool, PublishError> {
    if std::fs::read(path).is_ok_and(|old| old == bytes) {
        return Ok(false);
    }
    std::fs::write(path, bytes).map_err(io_err(path))?;
    stats.files_written += 1;
    stats.bytes_written += bytes.len() as u64;
    Ok(true)
}

/// Dataset name made safe for use as a file name.
pub fn file_stem(nome: &str) -> String {
    let mut stem: String = nome
        .chars()
        .map(|c| match c {
            '/' | '\\' | ':' | '*' | '?' | '"' | '<' | '>' | '|' => '_',
            c if c.is_control() => '_',
            c => c,
        })
        .collect();
    if stem.starts_with('.') {
        stem.replace_range(0..1, "_");
    }
    stem
}

/// Paths of a published dataset repository.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepoLayout {
    pub root: PathBuf,
    pub dataset: PathBuf,
    pub readme: PathBuf,
    pub gpx: PathBuf,
    pub vignettes: PathBuf,
    pub qrtags: PathBuf,
}

impl RepoLayout {
    pub fn new(root: &Path, nome: &str) -> Self {
        let stem = file_stem(nome);
        Self {
            root: root.to_path_buf(),
            dataset: root.join(format!("{stem}.geojson")),
            readme: root.join("README.md"),
            gpx: root.join(format!("{stem}.gpx")),
            vignettes: root.join("vignettes"),
            qrtags: root.join("qrtags"),
        }
    }

    /// Root entry names, sorted.
    pub fn entry_names(&self) -> Vec<String> {
        let mut names: Vec<String> = [&self.dataset, &self.readme, &self.gpx, &self.vignettes, &self.qrtags]
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        names.sort();
        names
    }
}

#[derive(Debug, Clone)]
pub struct PublishReport {
    pub layout: RepoLayout,
    pub fetch: FetchReport,
    pub qrtags: usize,
    pub written: WriteStats,
    pub warnings: Vec<Diagnostic>,
}

/// Writes the repository of one dataset under `root`: canonical GeoJSON,
/// README, GPX, vignettes and QR tags. Invalid datasets are refused before
/// anything is written. Re-running on unchanged input writes nothing.
pub fn publish(
    ds: &UlspDataset,
    reg: &FormatRegistry,
    root: &Path,
    fetcher: &dyn Fetcher,
    exec: Execution,
) -> Result<PublishReport, PublishError> {
    let ds = canonicalize(ds);
    let validation = validate_dataset(&ds, reg);
    if !validation.is_valid() {
        return Err(PublishError::Invalid(validation));
    }

    let layout = RepoLayout::new(root, &ds.meta.nome);
    std::fs::create_dir_all(root).map_err(io_err(root))?;
    let mut written = WriteStats::default();
    write_if_changed(&layout.dataset, &serialize_geojson(&ds), &mut written)?;
    write_if_changed(&layout.readme, &render_readme(&ds), &mut written)?;
    let gpx = to_gpx(&ds);
    write_if_changed(&layout.gpx, &gpx.value, &mut written)?;

    let fetch = vignettes::fetch_into(&ds, reg, fetcher, root, exec, &mut written)?;
    let qr = qrtags::render_into(&ds, reg, root, &mut written)?;

    let mut warnings = validation.warnings;
    warnings.extend(gpx.warnings);
    warnings.extend(qr.warnings);
    Ok(PublishReport {
        layout,
        fetch,
        qrtags: qr.value,
        written,
        warnings,
    })
}
