use super::ExportError;
use crate::schema::{FeatureKind, FormatRegistry, Geometry, UlspDataset, ID_KEY};

/// CSV table of one point kind: `lat,lon,ele,ulsp_id` followed by the kind's
/// registry fields in registry order. Unrecognized properties are not
/// exported. Features whose geometry is not a Point are left out.
pub fn to_csv(ds: &UlspDataset, kind: FeatureKind, reg: &FormatRegistry) -> Result<Vec<u8>, ExportError> {
    if !kind.is_point_kind() {
        return Err(ExportError::UnsupportedKind(kind));
    }
    let fields = reg.fields(kind);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header = vec!["lat", "lon", "ele", ID_KEY];
    header.extend(fields.iter().map(|f| f.key.as_str()));
    w.write_record(&header).expect("writing to memory");

    for f in ds.features.iter().filter(|f| f.kind == kind) {
        let Geometry::Point(p) = &f.geometry else { continue };
        let mut row = vec![
            p.lat.to_string(),
            p.lon.to_string(),
            p.ele.map(|e| e.to_string()).unwrap_or_default(),
            f.id.clone(),
        ];
        row.extend(fields.iter().map(|spec| f.field(&spec.key).unwrap_or("").to_string()));
        w.write_record(&row).expect("writing to memory");
    }
    Ok(w.into_inner().expect("flushing to memory"))
}
