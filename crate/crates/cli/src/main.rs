//! `geodoc`: validate, convert, inspect and serve scene files.

use std::collections::BTreeMap;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde_json::json;

use geodoc_core::scene::ParseError;
use geodoc_core::{
    import_legacy_episode, parse_scene, serialize_scene, validate_scene, GuidedScene, Scene,
};
use geodoc_service::{AppState, ServiceConfig};

/// Exit code for input that could not be read or parsed, or bad usage.
const EXIT_UNUSABLE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "geodoc", version, about = "Geolocated multimedia scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a scene file; exits 1 when it has problems, 2 when it cannot be parsed.
    Validate {
        scene: PathBuf,
        /// Print the report as JSON on stdout.
        #[arg(long)]
        json: bool,
    },
    /// Convert a legacy episode file into a scene.
    ImportLegacy {
        input: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Scene id to use instead of the default.
        #[arg(long)]
        id: Option<String>,
        /// Scene title to use instead of the default.
        #[arg(long)]
        title: Option<String>,
    },
    /// Summarize the contents of a scene file.
    Inspect {
        scene: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run the HTTP service.
    Serve {
        /// Directory of scene files, or a single scene file.
        #[arg(long, env = "GEODOC_SCENE_DIR")]
        scene_dir: PathBuf,
        /// Where content blobs and the session journal are kept.
        #[arg(long, env = "GEODOC_DATA_DIR", default_value = "./geodoc-data")]
        data_dir: PathBuf,
        #[arg(long, env = "GEODOC_LISTEN", default_value = "127.0.0.1:8080")]
        listen: String,
        /// Browser origin allowed to call the API (`*` for any).
        #[arg(long, env = "GEODOC_VIEWER_ORIGIN")]
        viewer_origin: Option<String>,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();

    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { scene, json } => validate(&scene, json),
        Command::ImportLegacy {
            input,
            output,
            id,
            title,
        } => import_legacy(&input, output.as_deref(), id, title),
        Command::Inspect { scene, json } => inspect(&scene, json),
        Command::Serve {
            scene_dir,
            data_dir,
            listen,
            viewer_origin,
        } => serve(scene_dir, data_dir, &listen, viewer_origin),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(EXIT_UNUSABLE)
    })
}

fn parse_error_json(e: &ParseError) -> serde_json::Value {
    match e {
        ParseError::Syntax {
            offset,
            line,
            column,
            message,
        } => {
            json!({"kind": "syntax", "offset": offset, "line": line, "column": column, "message": message})
        }
        ParseError::Field { path, message } => {
            json!({"kind": "field", "field_path": path, "message": message})
        }
    }
}

fn print_json(value: &serde_json::Value) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn load(path: &Path) -> anyhow::Result<Result<Scene, ParseError>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_scene(&bytes))
}

fn validate(path: &Path, as_json: bool) -> anyhow::Result<ExitCode> {
    let scene = match load(path)? {
        Ok(scene) => scene,
        Err(e) => {
            if as_json {
                print_json(&json!({"valid": false, "parse_error": parse_error_json(&e)}))?;
            }
            eprintln!("{}: {e}", path.display());
            return Ok(ExitCode::from(EXIT_UNUSABLE));
        }
    };
    let report = validate_scene(&scene);
    if as_json {
        print_json(&json!({"valid": report.is_empty(), "findings": report.findings}))?;
    } else if report.is_empty() {
        println!("{}: ok", path.display());
    } else {
        for f in &report.findings {
            println!(
                "{}: {} at {}: {}",
                path.display(),
                f.code,
                f.path,
                f.message
            );
        }
    }
    Ok(if report.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn import_legacy(
    input: &Path,
    output: Option<&Path>,
    id: Option<String>,
    title: Option<String>,
) -> anyhow::Result<ExitCode> {
    let bytes = std::fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let mut scene = match import_legacy_episode(&bytes) {
        Ok(scene) => scene,
        Err(e) => {
            eprintln!("{}: {e}", input.display());
            return Ok(ExitCode::from(EXIT_UNUSABLE));
        }
    };
    if let Some(id) = id {
        scene.scene_id = id;
    }
    if let Some(title) = title {
        scene.title = title;
    }
    let report = validate_scene(&scene);
    for f in &report.findings {
        eprintln!("warning: {} at {}: {}", f.code, f.path, f.message);
    }
    let canonical = serialize_scene(&scene);
    match output {
        Some(path) => {
            std::fs::write(path, &canonical)
                .with_context(|| format!("writing {}", path.display()))?;
            eprintln!(
                "imported {} documents into {}",
                scene.documents.len(),
                path.display()
            );
        }
        None => std::io::stdout().lock().write_all(&canonical)?,
    }
    Ok(if report.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn inspect(path: &Path, as_json: bool) -> anyhow::Result<ExitCode> {
    let scene = match load(path)? {
        Ok(scene) => scene,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return Ok(ExitCode::from(EXIT_UNUSABLE));
        }
    };
    let mut kinds: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &scene.documents {
        *kinds.entry(doc.kind.as_str()).or_default() += 1;
    }
    let entities = &scene.entities;
    let summary = json!({
        "id": scene.scene_id,
        "title": scene.title,
        "documents": scene.documents.len(),
        "document_kinds": kinds,
        "entities": {
            "pins": entities.pins.len(),
            "web_boards": entities.web_boards.len(),
            "extended_documents": entities.extended_documents.len(),
            "slideshows": entities.slideshows.len(),
        },
        "guidance": {
            "mode": scene.default_mode(),
            "prerequisite_rules": scene.guidance.graph.prerequisites.len(),
            "order_length": scene.guidance.graph.order.len(),
        },
        "layers": scene.layer_refs.len(),
        "tilesets": scene.tileset_refs.len(),
        "problems": validate_scene(&scene).findings.len(),
    });
    if as_json {
        print_json(&summary)?;
        return Ok(ExitCode::SUCCESS);
    }
    println!("{} ({})", scene.scene_id, scene.title);
    println!("documents: {}", scene.documents.len());
    for (kind, n) in &kinds {
        println!("  {kind}: {n}");
    }
    println!(
        "entities: {} pins, {} web boards, {} extended documents, {} slideshows",
        entities.pins.len(),
        entities.web_boards.len(),
        entities.extended_documents.len(),
        entities.slideshows.len()
    );
    println!(
        "guidance: {} ({} prerequisite rules, tour of {})",
        scene.default_mode(),
        scene.guidance.graph.prerequisites.len(),
        scene.guidance.graph.order.len()
    );
    println!(
        "layers: {}, tilesets: {}",
        scene.layer_refs.len(),
        scene.tileset_refs.len()
    );
    println!("problems: {}", summary["problems"]);
    Ok(ExitCode::SUCCESS)
}

fn serve(
    scene_dir: PathBuf,
    data_dir: PathBuf,
    listen: &str,
    viewer_origin: Option<String>,
) -> anyhow::Result<ExitCode> {
    let addr: SocketAddr = listen
        .parse()
        .with_context(|| format!("invalid listen address {listen:?}"))?;
    let mut config = ServiceConfig::new(scene_dir, data_dir);
    config.viewer_origin = viewer_origin;
    let state = AppState::open(config).context("loading scenes")?;

    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        eprintln!("listening on {}", listener.local_addr()?);
        geodoc_service::serve(listener, state, geodoc_service::shutdown_signal()).await?;
        Ok(ExitCode::SUCCESS)
    })
}
