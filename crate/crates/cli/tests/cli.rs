use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fieldatlas_core::export::{serialize_geojson, to_gpx};
use fieldatlas_core::ingest::parse_geojson;
use fieldatlas_core::transform::{adopt_property, filter, merge, retype, set_metadata, FilterSpec};
use fieldatlas_core::{canonicalize, CollectionMeta, FeatureKind, FormatRegistry};
use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fieldatlas"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_json(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_vec_pretty(v).unwrap()).unwrap();
    path
}

fn point(kind: &str, id: &str, lon: f64, lat: f64, props: Value) -> Value {
    let mut properties = json!({"ulsp_type": kind, "ulsp_id": id});
    properties.as_object_mut().unwrap().extend(props.as_object().unwrap().clone());
    json!({"type": "Feature", "geometry": {"type": "Point", "coordinates": [lon, lat]}, "properties": properties})
}

fn sample() -> Value {
    json!({
        "type": "FeatureCollection",
        "properties": {"Nome": "Fase1-230714-Ghivizzano", "Descrizione": "Rilievo", "umapKey": "https://umap.openstreetmap.fr/it/map/g_1", "WebPageURL": "https://example.org/g"},
        "features": [
            point("Sito", "s1", 10.43, 44.02, json!({"Nome": "Rocca", "Immagine": "https://img.invalid/rocca.jpg", "name": "Rocca vecchia"})),
            point("POI", "p1", 10.44, 44.03, json!({"Nome": "Fonte", "Tags": "acqua, grotta"})),
            point("POI", "p2", 10.45, 44.04, json!({"Nome": "Mulino"})),
            point("QRtag", "q1", 10.46, 44.05, json!({"Nome": "Cartello"})),
            {"type": "Feature", "geometry": {"type": "MultiLineString", "coordinates": [[[10.4, 44.0], [10.41, 44.01]]]},
             "properties": {"ulsp_type": "Percorso", "ulsp_id": "t1", "Nome": "Salita"}}
        ]
    })
}

fn dataset_at(path: &Path) -> fieldatlas_core::UlspDataset {
    parse_geojson(&std::fs::read(path).unwrap(), &FormatRegistry::default()).unwrap()
}

#[test]
fn validate_reports_error_count_and_exit_status() {
    let tmp = tempfile::tempdir().unwrap();
    let valid = write_json(tmp.path(), "valid.geojson", &sample());
    let out = run(&["validate", p(&valid)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).starts_with("0 errors"));

    let mut bad = sample();
    bad["features"][1]["properties"]["ulsp_id"] = json!("s1");
    let bad = write_json(tmp.path(), "bad.geojson", &bad);
    let out = run(&["validate", p(&bad)]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).starts_with("1 errors"));
    assert!(stderr(&out).contains("error: s1"));
}

#[test]
fn json_diagnostics_are_parseable_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let mut ds = sample();
    ds["features"][2]["properties"]["speed"] = json!(4.5);
    let file = write_json(tmp.path(), "d.geojson", &ds);
    let out = run(&["--json", "validate", p(&file)]);
    assert_eq!(code(&out), 0);
    let summary: Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(summary, json!({"errors": 0, "warnings": 2}));
    let lines: Vec<Value> = stderr(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(lines.iter().all(|l| l["level"] == "warning" && l["subject"].is_string() && l["field"].is_string() && l["message"].is_string()));
    assert!(lines.iter().any(|l| l["subject"] == "p2" && l["field"] == "speed"));
}

#[test]
fn usage_errors_exit_two_and_name_the_flag() {
    let out = run(&["validate", "x.geojson", "--bogus"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--bogus"));
    let out = run(&["filter", "x.geojson", "--keep", "--kind", "Strada"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--kind"));
    assert!(stdout(&out).is_empty());
}

#[test]
fn missing_input_is_a_runtime_failure() {
    let out = run(&["info", "/nonexistent/file.geojson"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("/nonexistent/file.geojson"));
}

#[test]
fn info_counts_kinds() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write_json(tmp.path(), "d.geojson", &sample());
    let out = run(&["--json", "info", p(&file)]);
    let info: Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(info["features"], 5);
    assert_eq!(info["kinds"], json!({"Sito": 1, "POI": 2, "QRtag": 1, "Percorso": 1}));
    assert_eq!(info["Nome"], "Fase1-230714-Ghivizzano");
}

#[test]
fn filter_keep_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write_json(tmp.path(), "d.geojson", &sample());
    let out_path = tmp.path().join("out.geojson");
    let out = run(&["filter", p(&file), "--keep", "--kind", "POI", "-o", p(&out_path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let ds = dataset_at(&out_path);
    assert_eq!(ds.features.len(), 2);
    assert!(ds.features.iter().all(|f| f.kind == FeatureKind::Poi));

    let out = run(&["filter", p(&file), "--drop", "--tag", "grotta"]);
    let ds = parse_geojson(&out.stdout, &FormatRegistry::default()).unwrap();
    assert_eq!(ds.features.len(), 4);
    assert!(ds.feature("p1").is_none());
}

#[test]
fn split_gaia_names_dataset_after_file() {
    let tmp = tempfile::tempdir().unwrap();
    let gaia = json!({"type": "FeatureCollection", "features": [
        {"type": "Feature", "geometry": {"type": "LineString", "coordinates": [[10.4, 44.0], [10.5, 44.1]]}, "properties": {"title": "Traccia"}},
        {"type": "Feature", "geometry": {"type": "Point", "coordinates": [10.4, 44.0]}, "properties": {"title": "Pozzo", "notes": "cisterna"}}
    ]});
    let input = write_json(tmp.path(), "Fase2-230801-Barga.json", &gaia);
    let out_path = tmp.path().join("out.geojson");
    let out = run(&["split-gaia", p(&input), "-o", p(&out_path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let ds = dataset_at(&out_path);
    assert_eq!(ds.meta.nome, "Fase2-230801-Barga");
    assert_eq!(ds.count_by_kind().get(&FeatureKind::Percorso), Some(&1));
    assert_eq!(ds.features[1].field("Descrizione"), Some("cisterna"));
    let out = run(&["validate", p(&out_path)]);
    assert_eq!(code(&out), 0);
}

#[test]
fn from_csv_reports_skipped_rows_with_line_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("punti.csv");
    std::fs::write(&csv, "lat,lon,Nome\n43.9,10.5,Rocca\nx,10.5,Rotto\n").unwrap();
    let out = run(&["from-csv", p(&csv), "--kind", "POI"]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("line 3"));
    let ds = parse_geojson(&out.stdout, &FormatRegistry::default()).unwrap();
    assert_eq!(ds.meta.nome, "punti");
    assert_eq!(ds.features.len(), 1);
    assert_eq!(run(&["from-csv", p(&csv), "--kind", "Percorso"]).status.code(), Some(1));
}

#[test]
fn set_meta_rejects_bad_url() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write_json(tmp.path(), "d.geojson", &sample());
    let out = run(&["set-meta", p(&file), "--umap-key", "not a url"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("umapKey"));
    let out = run(&["set-meta", p(&file), "--nome", "Nuovo", "--web-page-url", ""]);
    assert_eq!(code(&out), 0);
    let ds = parse_geojson(&out.stdout, &FormatRegistry::default()).unwrap();
    assert_eq!(ds.meta.nome, "Nuovo");
    assert_eq!(ds.meta.web_page_url, None);
    assert_eq!(ds.meta.descrizione, "Rilievo");
}

#[test]
fn qr_encode_decode_round_trip_and_missing_frame() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write_json(tmp.path(), "d.geojson", &sample());
    let frames = tmp.path().join("frames");
    let out = run(&["qr", "encode", p(&file), "--max-chars", "64", "-o", p(&frames)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let n: usize = stdout(&out).split_whitespace().next().unwrap().parse().unwrap();
    assert!(n > 2);
    assert!(frames.join("frame-0000.png").exists());

    let decoded = tmp.path().join("back.geojson");
    let out = run(&["qr", "decode", p(&frames), "-o", p(&decoded)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let expected = serialize_geojson(&canonicalize(&dataset_at(&file)));
    assert_eq!(std::fs::read(&decoded).unwrap(), expected);

    std::fs::remove_file(frames.join("frame-0001.txt")).unwrap();
    let out = run(&["qr", "decode", p(&frames)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("missing frames: 1"));
    assert!(stdout(&out).is_empty());
}

#[test]
fn publish_offline_completes_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write_json(tmp.path(), "d.geojson", &sample());
    let repo = tmp.path().join("repo");
    let out = run(&["--json", "publish", p(&file), "-o", p(&repo), "--offline"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(report["fetch"]["attempted"], 1);
    assert_eq!(report["fetch"]["failed"][0]["id"], "s1");
    assert_eq!(report["qrtags"], 1);
    for entry in ["Fase1-230714-Ghivizzano.geojson", "Fase1-230714-Ghivizzano.gpx", "README.md", "vignettes", "qrtags/q1.png"] {
        assert!(repo.join(entry).exists(), "{entry}");
    }
    assert!(stderr(&out).contains("rocca.jpg"));

    let again = run(&["--json", "publish", p(&file), "-o", p(&repo), "--offline"]);
    let report: Value = serde_json::from_str(stdout(&again).trim()).unwrap();
    assert_eq!(report["bytes_written"], 0);
}

#[test]
fn publish_refuses_invalid_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let mut bad = sample();
    bad["features"][0]["properties"]["ulsp_type"] = json!("Percorso");
    let file = write_json(tmp.path(), "bad.geojson", &bad);
    let repo = tmp.path().join("repo");
    let out = run(&["publish", p(&file), "-o", p(&repo), "--offline"]);
    assert_eq!(code(&out), 1);
    assert!(!repo.exists());
}

#[test]
fn export_formats() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write_json(tmp.path(), "d.geojson", &sample());
    let out = run(&["export", "gpx", p(&file)]);
    assert_eq!(code(&out), 0);
    assert_eq!(out.stdout, to_gpx(&canonicalize(&dataset_at(&file))).value);

    let layers = tmp.path().join("layers");
    let out = run(&["export", "umap", p(&file), "-o", p(&layers)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut names: Vec<_> = std::fs::read_dir(&layers).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["POI.geojson", "Percorso.geojson", "QRtag.geojson", "Sito.geojson", "manifest.json"]);

    let out = run(&["export", "csv", p(&file), "--kind", "POI"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("lat,lon,ele,ulsp_id,Nome"));
    assert_eq!(stdout(&out).lines().count(), 3);
}

#[test]
fn publish_global_over_repositories() {
    let tmp = tempfile::tempdir().unwrap();
    let sources = tmp.path().join("datasets");
    std::fs::create_dir_all(sources.join("repo-b")).unwrap();
    write_json(&sources, "a.geojson", &sample());
    let mut other = sample();
    other["properties"]["Nome"] = json!("Fase2-230801-Barga");
    write_json(&sources.join("repo-b"), "Fase2-230801-Barga.geojson", &other);
    let global = tmp.path().join("global");
    let out = run(&["publish-global", p(&sources), "-o", p(&global)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let manifest: Value = serde_json::from_slice(&std::fs::read(global.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["datasets"].as_array().unwrap().len(), 2);
    let total: u64 = manifest["layers"].as_array().unwrap().iter().map(|l| l["count"].as_u64().unwrap()).sum();
    assert_eq!(total, 10);

    write_json(&sources, "dup.geojson", &other);
    let out = run(&["publish-global", p(&sources), "-o", p(&global)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("Fase2-230801-Barga"));
}

#[test]
fn registry_dump_and_override() {
    let out = run(&["registry", "--dump"]);
    assert_eq!(code(&out), 0);
    let dumped: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(dumped["kinds"]["Sito"].as_array().unwrap().len(), 22);

    let tmp = tempfile::tempdir().unwrap();
    let mut custom = dumped.clone();
    custom["kinds"]["POI"].as_array_mut().unwrap().push(json!({"key": "speed", "label": "Velocita", "kind": "number"}));
    let reg_path = write_json(tmp.path(), "formats.json", &custom);
    let mut ds = sample();
    ds["features"][2]["properties"]["speed"] = json!("veloce");
    let file = write_json(tmp.path(), "d.geojson", &ds);
    assert_eq!(code(&run(&["validate", p(&file)])), 0);
    let out = run(&["--registry", p(&reg_path), "validate", p(&file)]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));

    let broken = tmp.path().join("broken.json");
    std::fs::write(&broken, "{\"version\": ").unwrap();
    let out = run(&["--registry", p(&broken), "registry", "--dump"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn quiet_suppresses_warnings_only() {
    let tmp = tempfile::tempdir().unwrap();
    let mut ds = sample();
    ds["properties"]["umapKey"] = json!("");
    let file = write_json(tmp.path(), "d.geojson", &ds);
    let out = run(&["--quiet", "validate", p(&file)]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).is_empty());
}

/// A curation session run through the CLI gives the same bytes as the
/// library operations applied directly.
#[test]
fn session_matches_library_operations() {
    let reg = FormatRegistry::default();
    let tmp = tempfile::tempdir().unwrap();
    let a = write_json(tmp.path(), "a.geojson", &sample());
    let b_value = json!({"type": "FeatureCollection", "properties": {"Nome": "B"}, "features": [
        point("POI", "b1", 10.5, 44.1, json!({"Nome": "Ponte", "descr": "ponte romanico"})),
        point("POI", "p2", 10.45, 44.04, json!({"Nome": "Mulino nuovo"}))
    ]});
    let b = write_json(tmp.path(), "b.geojson", &b_value);
    let step = |name: &str| tmp.path().join(name);

    let cli_steps: [Vec<String>; 6] = [
        vec!["merge".into(), p(&a).into(), p(&b).into(), "-o".into(), p(&step("1.geojson")).into()],
        vec!["filter".into(), p(&step("1.geojson")).into(), "--drop".into(), "--id".into(), "q1".into(), "-o".into(), p(&step("2.geojson")).into()],
        vec!["adopt".into(), p(&step("2.geojson")).into(), "--id".into(), "b1".into(), "--from".into(), "descr".into(), "--to".into(), "Descrizione".into(), "-o".into(), p(&step("3.geojson")).into()],
        vec!["retype".into(), p(&step("3.geojson")).into(), "--id".into(), "p1".into(), "--to".into(), "Sito".into(), "-o".into(), p(&step("4.geojson")).into()],
        vec!["set-meta".into(), p(&step("4.geojson")).into(), "--nome".into(), "Sessione".into(), "-o".into(), p(&step("5.geojson")).into()],
        vec!["export".into(), "gpx".into(), p(&step("5.geojson")).into(), "-o".into(), p(&step("out.gpx")).into()],
    ];
    for args in &cli_steps {
        let out = bin().args(args).output().unwrap();
        assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
    }

    let ds = merge(&[dataset_at(&a), dataset_at(&b)]).value;
    let ds = filter(&ds, &FilterSpec::drop().ids(["q1"]), &reg).unwrap();
    let ds = adopt_property(&ds, "b1", "descr", "Descrizione", &reg).unwrap();
    let ds = retype(&ds, "p1", FeatureKind::Sito, &reg).unwrap();
    let mut meta: CollectionMeta = ds.meta.clone();
    meta.nome = "Sessione".into();
    let ds = set_metadata(&ds, meta).unwrap();

    assert_eq!(std::fs::read(step("5.geojson")).unwrap(), serialize_geojson(&canonicalize(&ds)));
    assert_eq!(std::fs::read(step("out.gpx")).unwrap(), to_gpx(&canonicalize(&ds)).value);
    assert_eq!(ds.feature("p2").unwrap().field("Nome"), Some("Mulino nuovo"));
}
