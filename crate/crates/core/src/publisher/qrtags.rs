use std::collections::BTreeSet;
use std::path::Path;

use qrcode::EcLevel;

use super::vignettes::remove_stale;
use super::{io_err, write_if_changed, PublishError, WriteStats};
use crate::qr::render_png;
use crate::schema::{FeatureKind, FieldKind, FormatRegistry, UlspDataset, UlspFeature};
use crate::{Diagnostic, Outcome};

/// URL encoded in a QR tag: the feature's own URL field, else the dataset
/// web page with the feature id as fragment.
pub fn qrtag_url(f: &UlspFeature, ds: &UlspDataset, reg: &FormatRegistry) -> Option<String> {
    reg.first_of(f.kind, FieldKind::Url)
        .and_then(|spec| f.field(&spec.key))
        .map(str::to_string)
        .or_else(|| ds.meta.web_page_url.as_ref().map(|page| format!("{page}#{}", f.id)))
}

pub(crate) fn render_into(
    ds: &UlspDataset,
    reg: &FormatRegistry,
    root: &Path,
    stats: &mut WriteStats,
) -> Result<Outcome<usize>, PublishError> {
    let dir = root.join("qrtags");
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut warnings = Vec::new();
    let mut wanted = BTreeSet::new();
    for f in ds.features.iter().filter(|f| f.kind == FeatureKind::QrTag) {
        let Some(url) = qrtag_url(f, ds, reg) else {
            warnings.push(Diagnostic::new(&f.id, "URL", "no URL and no dataset web page, QR tag skipped"));
            continue;
        };
        let png = render_png(&url, EcLevel::Q).map_err(|e| PublishError::Render(e.to_string()))?;
        let file = format!("{}.png", super::file_stem(&f.id));
        write_if_changed(&dir.join(&file), &png, stats)?;
        wanted.insert(file);
    }
    remove_stale(&dir, "png", &wanted)?;
    Ok(Outcome::new(wanted.len(), warnings))
}

/// Writes `<root>/qrtags/<ulsp_id>.png` (error correction Q) for every QRtag
/// feature that has a URL to point to. Returns the number of files.
pub fn render_qrtags(ds: &UlspDataset, reg: &FormatRegistry, root: &Path) -> Result<Outcome<usize>, PublishError> {
    render_into(ds, reg, root, &mut WriteStats::default())
}
