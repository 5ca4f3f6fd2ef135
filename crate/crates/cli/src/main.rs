use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use fieldatlas_core::exec::Execution;
use fieldatlas_core::export::{serialize_geojson, to_csv, to_gpx, to_umap_layers, UmapExport};
use fieldatlas_core::ingest::{gaia_split, import_csv, parse_geojson, GaiaMapping};
use fieldatlas_core::publisher::{
    publish, publish_global, Fetcher, HttpFetcher, OfflineFetcher, PublishError, DEFAULT_FETCH_PARALLELISM,
};
use fieldatlas_core::qr::{assemble, decode_frame, encode_frames, render_png, Assembly, EcLevel, DEFAULT_MAX_CHUNK_CHARS};
use fieldatlas_core::schema::DEFAULT_REGISTRY_JSON;
use fieldatlas_core::transform::{
    adopt_property, discard_unrecognized, edit_properties, filter, merge, retype, set_metadata, Discard, FilterSpec,
};
use fieldatlas_core::{canonicalize, validate_dataset, CollectionMeta, Diagnostic, FeatureKind, FormatRegistry, UlspDataset};
use indexmap::IndexMap;
use serde_json::json;

/// Field-survey dataset toolkit: validate, convert, edit, transfer and
/// publish GeoJSON datasets.
#[derive(Parser)]
#[command(name = "fieldatlas", version)]
struct Cli {
    /// Format registry JSON to use instead of the built-in one.
    #[arg(long, global = true, value_name = "FILE")]
    registry: Option<PathBuf>,
    /// Only print errors on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    /// Diagnostics and summaries as JSON lines.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a dataset against the registry; exits 1 when it has errors.
    Validate { file: PathBuf },
    /// Show dataset metadata and feature counts per kind.
    Info { file: PathBuf },
    /// Convert a Gaia GPS export into a dataset of Percorso and POI features.
    SplitGaia {
        input: PathBuf,
        #[command(flatten)]
        mapping: MappingArgs,
        /// Dataset name; defaults to the input file name without extension.
        #[arg(long)]
        nome: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Build a dataset of one point kind from a CSV table.
    FromCsv {
        csv: PathBuf,
        #[arg(long, value_parser = parse_kind)]
        kind: FeatureKind,
        /// Dataset name; defaults to the input file name without extension.
        #[arg(long)]
        nome: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Concatenate datasets; later features replace earlier ones with the same id.
    Merge {
        #[arg(required = true, num_args = 1..)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Keep or drop the features matching every given criterion.
    #[command(group(ArgGroup::new("mode").required(true).args(["keep", "drop"])))]
    Filter {
        file: PathBuf,
        #[arg(long)]
        keep: bool,
        #[arg(long)]
        drop: bool,
        #[arg(long = "kind", value_parser = parse_kind)]
        kinds: Vec<FeatureKind>,
        #[arg(long = "id")]
        ids: Vec<String>,
        #[arg(long)]
        tag: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Change the kind of one feature.
    Retype {
        file: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long, value_parser = parse_kind)]
        to: FeatureKind,
        #[command(flatten)]
        out: Output,
    },
    /// Replace dataset metadata; omitted options keep their current value and
    /// an empty URL clears it.
    SetMeta {
        file: PathBuf,
        #[arg(long)]
        nome: Option<String>,
        #[arg(long)]
        descrizione: Option<String>,
        #[arg(long)]
        umap_key: Option<String>,
        #[arg(long)]
        web_page_url: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Set or remove recognized properties of one feature.
    Edit {
        file: PathBuf,
        #[arg(long)]
        id: String,
        /// KEY=VALUE, repeatable.
        #[arg(long = "set", value_parser = parse_assignment)]
        set: Vec<(String, String)>,
        /// Key to remove, repeatable.
        #[arg(long = "unset")]
        unset: Vec<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Move an unrecognized property of one feature onto a registry field.
    Adopt {
        file: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[command(flatten)]
        out: Output,
    },
    /// Remove unrecognized properties of one feature (all unless --key is given).
    Discard {
        file: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long = "key")]
        keys: Vec<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Write GPX, uMap layers or CSV.
    Export {
        format: ExportFormat,
        file: PathBuf,
        /// Point kind to export (csv only).
        #[arg(long, value_parser = parse_kind, required_if_eq("format", "csv"))]
        kind: Option<FeatureKind>,
        /// Output file, or directory for umap.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Offline transfer of a dataset as QR frames.
    #[command(subcommand)]
    Qr(QrCommand),
    /// Write the repository directory of one dataset.
    Publish {
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Do not download images; every vignette is reported as skipped.
        #[arg(long)]
        offline: bool,
        /// Concurrent downloads.
        #[arg(long, default_value_t = DEFAULT_FETCH_PARALLELISM)]
        jobs: usize,
    },
    /// Build the global per-kind layer set from a directory of datasets.
    PublishGlobal {
        dir: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Show the format registry in use.
    #[command(group(ArgGroup::new("action").required(true).args(["dump"])))]
    Registry {
        #[arg(long)]
        dump: bool,
    },
}

#[derive(Subcommand)]
enum QrCommand {
    /// Write frame-NNNN.txt and frame-NNNN.png for every frame.
    Encode {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_CHUNK_CHARS)]
        max_chars: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Reassemble a dataset from frame texts (directories of .txt files, or
    /// files holding one frame per line).
    Decode {
        #[arg(required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Gpx,
    Umap,
    Csv,
}

#[derive(Args)]
struct Output {
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MappingArgs {
    #[arg(long, default_value = "title")]
    track_name_key: String,
    #[arg(long, default_value = "title")]
    waypoint_name_key: String,
    #[arg(long, default_value = "notes")]
    notes_key: String,
    #[arg(long, default_value = "photos")]
    photos_key: String,
}

fn parse_kind(s: &str) -> Result<FeatureKind, String> {
    s.parse::<FeatureKind>().map_err(|e| {
        let names: Vec<_> = FeatureKind::CONCRETE.iter().map(|k| k.name()).collect();
        format!("{e}; expected one of {}", names.join(", "))
    })
}

fn parse_assignment(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))
}

/// A failure that ends the command with exit status 1.
struct Failure(String);

impl<E: Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Run = Result<(), Failure>;

struct Ui {
    quiet: bool,
    json: bool,
}

impl Ui {
    fn diagnostic(&self, level: &str, d: &Diagnostic) {
        if self.quiet && level != "error" {
            return;
        }
        if self.json {
            let line = json!({"level": level, "subject": d.subject, "field": d.field, "message": d.message});
            eprintln!("{line}");
        } else {
            eprintln!("{level}: {d}");
        }
    }

    fn warnings(&self, ds: &[Diagnostic]) {
        ds.iter().for_each(|d| self.diagnostic("warning", d));
    }

    fn errors(&self, ds: &[Diagnostic]) {
        ds.iter().for_each(|d| self.diagnostic("error", d));
    }

    fn note(&self, text: impl Display) {
        if !self.quiet && !self.json {
            eprintln!("{text}");
        }
    }

    fn failure(&self, message: &str) {
        if self.json {
            eprintln!("{}", json!({"level": "error", "subject": "", "field": "", "message": message}));
        } else {
            eprintln!("error: {message}");
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn load(path: &Path, reg: &FormatRegistry) -> Result<UlspDataset, Failure> {
    parse_geojson(&read(path)?, reg).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn write_out(out: &Option<PathBuf>, bytes: &[u8]) -> Run {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| Failure(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn write_dataset(out: &Output, ds: &UlspDataset) -> Run {
    write_out(&out.output, &serialize_geojson(&canonicalize(ds)))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn create_dir(dir: &Path) -> Run {
    std::fs::create_dir_all(dir).map_err(|e| Failure(format!("{}: {e}", dir.display())))
}

fn write_layers(dir: &Path, export: &UmapExport) -> Run {
    create_dir(dir)?;
    for layer in &export.layers {
        let path = dir.join(layer.file_name());
        std::fs::write(&path, &layer.bytes).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    }
    let path = dir.join("manifest.json");
    std::fs::write(&path, &export.manifest).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

/// Frame texts from directories (every `.txt` file, sorted) and files (one
/// frame per non-empty line).
fn collect_frame_texts(inputs: &[PathBuf]) -> Result<Vec<String>, Failure> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)
                .map_err(|e| Failure(format!("{}: {e}", input.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "txt"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    let mut texts = Vec::new();
    for file in files {
        let content = String::from_utf8(read(&file)?).map_err(|_| Failure(format!("{}: not UTF-8 text", file.display())))?;
        texts.extend(content.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string));
    }
    Ok(texts)
}

/// Dataset files of a directory: `*.geojson` directly inside it and one
/// level down (published repositories), sorted by path.
fn dataset_files(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let is_geojson = |p: &Path| p.is_file() && p.extension().is_some_and(|e| e == "geojson");
    let mut out = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Failure(format!("{}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry?.path();
        if path.is_dir() {
            for inner in std::fs::read_dir(&path)? {
                let inner = inner?.path();
                if is_geojson(&inner) {
                    out.push(inner);
                }
            }
        } else if is_geojson(&path) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Runs the command. `Ok(false)` means the data was rejected (exit 1) after
/// its diagnostics were printed.
fn run(cli: Cli, ui: &Ui) -> Result<bool, Failure> {
    let reg = match &cli.registry {
        Some(path) => FormatRegistry::load(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))?,
        None => FormatRegistry::default(),
    };

    match cli.command {
        Command::Validate { file } => {
            let ds = load(&file, &reg)?;
            let report = validate_dataset(&ds, &reg);
            ui.errors(&report.errors);
            ui.warnings(&report.warnings);
            if cli.json {
                println!("{}", json!({"errors": report.errors.len(), "warnings": report.warnings.len()}));
            } else {
                println!("{} errors, {} warnings", report.errors.len(), report.warnings.len());
            }
            return Ok(report.is_valid());
        }
        Command::Info { file } => {
            let ds = load(&file, &reg)?;
            let counts = ds.count_by_kind();
            if cli.json {
                let kinds: serde_json::Map<_, _> = counts.iter().map(|(k, n)| (k.name().to_string(), json!(n))).collect();
                let info = json!({
                    "Nome": ds.meta.nome,
                    "Descrizione": ds.meta.descrizione,
                    "umapKey": ds.meta.umap_key,
                    "WebPageURL": ds.meta.web_page_url,
                    "features": ds.features.len(),
                    "kinds": kinds,
                });
                println!("{info}");
            } else {
                println!("Nome: {}", ds.meta.nome);
                if !ds.meta.descrizione.is_empty() {
                    println!("Descrizione: {}", ds.meta.descrizione);
                }
                if let Some(u) = &ds.meta.umap_key {
                    println!("umapKey: {u}");
                }
                if let Some(u) = &ds.meta.web_page_url {
                    println!("WebPageURL: {u}");
                }
                println!("features: {}", ds.features.len());
                for (kind, n) in counts {
                    println!("  {:<10} {n}", kind.name());
                }
            }
        }
        Command::SplitGaia { input, mapping, nome, out } => {
            let mapping = GaiaMapping {
                track_name_key: mapping.track_name_key,
                waypoint_name_key: mapping.waypoint_name_key,
                waypoint_notes_key: mapping.notes_key,
                waypoint_photo_key: mapping.photos_key,
            };
            let split = gaia_split(&read(&input)?, &mapping, &reg).map_err(|e| Failure(format!("{}: {e}", input.display())))?;
            ui.warnings(&split.warnings);
            let mut meta = split.value.meta.clone();
            meta.nome = nome.unwrap_or_else(|| stem(&input));
            let ds = set_metadata(&split.value, meta)?;
            write_dataset(&out, &ds)?;
            ui.note(format_args!("{} features", ds.features.len()));
        }
        Command::FromCsv { csv, kind, nome, out } => {
            let import = import_csv(&read(&csv)?, kind, &reg).map_err(|e| Failure(format!("{}: {e}", csv.display())))?;
            for row in &import.rejected {
                ui.diagnostic("warning", &Diagnostic::new(format!("line {}", row.line), "", format!("row skipped: {}", row.message)));
            }
            let meta = CollectionMeta::named(nome.unwrap_or_else(|| stem(&csv)));
            let ds = UlspDataset::new(meta, import.features);
            write_dataset(&out, &ds)?;
            ui.note(format_args!("{} rows imported, {} skipped", ds.features.len(), import.rejected.len()));
        }
        Command::Merge { files, out } => {
            let parts = files.iter().map(|f| load(f, &reg)).collect::<Result<Vec<_>, _>>()?;
            let merged = merge(&parts);
            ui.warnings(&merged.warnings);
            write_dataset(&out, &merged.value)?;
        }
        Command::Filter { file, keep, drop: _, kinds, ids, tag, out } => {
            let mut spec = if keep { FilterSpec::keep() } else { FilterSpec::drop() };
            spec = spec.kinds(kinds).ids(ids);
            if let Some(tag) = tag {
                spec = spec.tag(tag);
            }
            let ds = filter(&load(&file, &reg)?, &spec, &reg)?;
            write_dataset(&out, &ds)?;
        }
        Command::Retype { file, id, to, out } => {
            let ds = retype(&canonicalize(&load(&file, &reg)?), &id, to, &reg)?;
            write_dataset(&out, &ds)?;
        }
        Command::SetMeta { file, nome, descrizione, umap_key, web_page_url, out } => {
            let ds = load(&file, &reg)?;
            let mut meta = ds.meta.clone();
            if let Some(v) = nome {
                meta.nome = v;
            }
            if let Some(v) = descrizione {
                meta.descrizione = v;
            }
            let url = |v: String| Some(v).filter(|v| !v.trim().is_empty());
            if let Some(v) = umap_key {
                meta.umap_key = url(v);
            }
            if let Some(v) = web_page_url {
                meta.web_page_url = url(v);
            }
            write_dataset(&out, &set_metadata(&ds, meta)?)?;
        }
        Command::Edit { file, id, set, unset, out } => {
            let mut changes: IndexMap<String, Option<String>> = set.into_iter().map(|(k, v)| (k, Some(v))).collect();
            changes.extend(unset.into_iter().map(|k| (k, None)));
            let ds = edit_properties(&canonicalize(&load(&file, &reg)?), &id, &changes, &reg)?;
            write_dataset(&out, &ds)?;
        }
        Command::Adopt { file, id, from, to, out } => {
            let ds = adopt_property(&canonicalize(&load(&file, &reg)?), &id, &from, &to, &reg)?;
            write_dataset(&out, &ds)?;
        }
        Command::Discard { file, id, keys, out } => {
            let which = if keys.is_empty() { Discard::All } else { Discard::Keys(keys.into_iter().collect()) };
            let ds = discard_unrecognized(&canonicalize(&load(&file, &reg)?), &id, &which)?;
            write_dataset(&out, &ds)?;
        }
        Command::Export { format, file, kind, output } => {
            let ds = canonicalize(&load(&file, &reg)?);
            match format {
                ExportFormat::Gpx => {
                    let gpx = to_gpx(&ds);
                    ui.warnings(&gpx.warnings);
                    write_out(&output, &gpx.value)?;
                }
                ExportFormat::Csv => {
                    let kind = kind.expect("clap requires --kind for csv");
                    write_out(&output, &to_csv(&ds, kind, &reg)?)?;
                }
                ExportFormat::Umap => {
                    let Some(dir) = output else {
                        return Err(Failure("umap export needs an output directory (-o)".into()));
                    };
                    let export = to_umap_layers(&ds, &reg);
                    write_layers(&dir, &export)?;
                    ui.note(format_args!("{} layers, {} features skipped", export.layers.len(), export.skipped));
                }
            }
        }
        Command::Qr(QrCommand::Encode { file, max_chars, output }) => {
            let ds = load(&file, &reg)?;
            let frames = encode_frames(&ds, max_chars)?;
            create_dir(&output)?;
            for (i, text) in frames.iter().enumerate() {
                let base = output.join(format!("frame-{i:04}"));
                std::fs::write(base.with_extension("txt"), format!("{text}\n"))?;
                std::fs::write(base.with_extension("png"), render_png(text, EcLevel::M)?)?;
            }
            if cli.json {
                println!("{}", json!({"frames": frames.len()}));
            } else {
                println!("{} frames", frames.len());
            }
        }
        Command::Qr(QrCommand::Decode { inputs, out }) => {
            let frames = collect_frame_texts(&inputs)?
                .iter()
                .map(|t| decode_frame(t))
                .collect::<Result<Vec<_>, _>>()?;
            match assemble(frames, &reg)? {
                Assembly::Complete(ds) => write_dataset(&out, &ds)?,
                Assembly::Missing(missing) => {
                    let list: Vec<String> = missing.iter().map(usize::to_string).collect();
                    if cli.json {
                        eprintln!("{}", json!({"level": "error", "subject": "transfer", "field": "", "message": "missing frames", "missing": missing}));
                    } else {
                        eprintln!("error: missing frames: {}", list.join(", "));
                    }
                    return Ok(false);
                }
            }
        }
        Command::Publish { file, output, offline, jobs } => {
            let ds = load(&file, &reg)?;
            let http;
            let fetcher: &dyn Fetcher = if offline {
                &OfflineFetcher
            } else {
                http = HttpFetcher::default();
                &http
            };
            let report = match publish(&ds, &reg, &output, fetcher, Execution::Parallel(jobs.max(1))) {
                Err(PublishError::Invalid(validation)) => {
                    ui.errors(&validation.errors);
                    ui.failure(&format!("dataset has {} errors; nothing written", validation.errors.len()));
                    return Ok(false);
                }
                other => other?,
            };
            ui.warnings(&report.warnings);
            for f in &report.fetch.failed {
                ui.diagnostic("warning", &Diagnostic::new(&f.id, "vignette", format!("{} skipped: {}", f.url, f.reason)));
            }
            let summary = json!({
                "root": report.layout.root.display().to_string(),
                "files_written": report.written.files_written,
                "bytes_written": report.written.bytes_written,
                "qrtags": report.qrtags,
                "fetch": report.fetch,
            });
            if cli.json {
                println!("{summary}");
            } else if !cli.quiet {
                println!(
                    "{}: {} files written ({} bytes); vignettes {} fetched, {} unchanged, {} skipped; {} QR tags",
                    report.layout.root.display(),
                    report.written.files_written,
                    report.written.bytes_written,
                    report.fetch.succeeded,
                    report.fetch.skipped,
                    report.fetch.failed.len(),
                    report.qrtags
                );
            }
        }
        Command::PublishGlobal { dir, output } => {
            let files = dataset_files(&dir)?;
            let all = files.iter().map(|f| load(f, &reg)).collect::<Result<Vec<_>, _>>()?;
            let export = publish_global(&all, &reg, Execution::Auto)?;
            write_layers(&output, &export)?;
            ui.note(format_args!("{} datasets, {} layers", all.len(), export.layers.len()));
        }
        Command::Registry { dump: _ } => {
            let bytes = match &cli.registry {
                Some(path) => read(path)?,
                None => DEFAULT_REGISTRY_JSON.as_bytes().to_vec(),
            };
            write_out(&None, &bytes)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let ui = Ui { quiet: cli.quiet, json: cli.json };
    match run(cli, &ui) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(message)) => {
            ui.failure(&message);
            ExitCode::from(1)
        }
    }
}
