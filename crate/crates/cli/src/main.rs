//! `seafloor`: build and check workspaces, run interpolations headlessly,
//! export virtual cores, and launch the local service.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 degenerate geometry.

use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use seafloor_core::annotate::AnnotationLog;
use seafloor_core::geo::GeoPoint;
use seafloor_core::ingest::{IngestReport, Workspace};
use seafloor_core::interp::{
    extract_virtual_core, GridLimits, InterpError, Method, VoxelGrid, DEFAULT_MAX_VOXELS,
};
use seafloor_core::pipeline::{run_interpolation, InterpolationRequest, VsupParams};
use seafloor_service::{serve, ServiceConfig, DEFAULT_BIND, DEFAULT_PORT};

#[derive(Debug, Parser)]
#[command(
    name = "seafloor",
    version,
    about = "Seafloor sediment core workspaces and volumetric interpolation"
)]
struct Cli {
    /// Print machine-readable JSON instead of plain text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate core and sample tables and lay them out as a workspace.
    Ingest {
        /// Core-level CSV.
        #[arg(long)]
        cores: PathBuf,
        /// Sample-level CSV.
        #[arg(long)]
        samples: PathBuf,
        /// Map layer manifest (JSON); images resolve relative to it.
        #[arg(long)]
        maps: Option<PathBuf>,
        /// Parameter kind manifest (JSON).
        #[arg(long)]
        params: Option<PathBuf>,
        /// Workspace directory to create or refresh.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run every ingest and annotation check on an existing workspace.
    Validate {
        #[arg(long)]
        workspace: PathBuf,
    },
    /// Interpolate one parameter over the selected cores.
    Interp {
        #[arg(long)]
        workspace: PathBuf,
        /// Parameter (column) name.
        #[arg(long)]
        param: String,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Horizontal cell size in cm; a multiple of 7.
        #[arg(long)]
        grid_cm: u32,
        /// Core ids to include.
        #[arg(long, num_args = 1.., required = true)]
        cores: Vec<String>,
        /// Extra empty cells around the selection on each side.
        #[arg(long, default_value_t = 0)]
        padding: u32,
        /// Refuse grids with more voxels than this.
        #[arg(long, default_value_t = DEFAULT_MAX_VOXELS)]
        max_voxels: usize,
        /// Output grid document.
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the voxel column under a position as a virtual core.
    VirtualCore {
        /// Grid document written by `interp`.
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lat: f64,
        #[arg(long, allow_hyphen_values = true)]
        lon: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API and browser workspace for one workspace directory.
    Serve {
        #[arg(long, env = "DEEPSEE_WORKSPACE")]
        workspace: PathBuf,
        #[arg(long, env = "DEEPSEE_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, env = "DEEPSEE_BIND", default_value = DEFAULT_BIND)]
        bind: IpAddr,
        /// Interpolation jobs running at once.
        #[arg(long, env = "DEEPSEE_CONCURRENCY", default_value_t = 1)]
        concurrency: usize,
        #[arg(long, env = "DEEPSEE_MAX_VOXELS", default_value_t = DEFAULT_MAX_VOXELS)]
        max_voxels: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Linear,
    Sibson,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Linear => Method::Linear,
            MethodArg::Sibson => Method::Sibson,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Data(String),
    Degenerate(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Data(_) => 2,
            Failure::Degenerate(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Data(m) | Failure::Degenerate(m) => m,
        }
    }
}

fn data(e: impl std::fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

impl From<InterpError> for Failure {
    fn from(e: InterpError) -> Self {
        match e {
            InterpError::Degenerate(_) => Failure::Degenerate(e.to_string()),
            other => data(other),
        }
    }
}

fn print_report(report: &IngestReport, as_json: bool) {
    if as_json {
        println!(
            "{}",
            serde_json::to_string_pretty(report).expect("reports serialize")
        );
    } else {
        print!("{}", report.summary());
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn ingest(
    cores: &Path,
    samples: &Path,
    maps: Option<&Path>,
    params: Option<&Path>,
    out: &Path,
    as_json: bool,
) -> Result<(), Failure> {
    let ws = Workspace::create(cores, samples, maps, params, out).map_err(data)?;
    print_report(&ws.report, as_json);
    if ws.report.succeeded() {
        Ok(())
    } else {
        Err(data(format!("{} ingest error(s)", ws.report.errors.len())))
    }
}

fn validate(workspace: &Path, as_json: bool) -> Result<(), Failure> {
    let ws = Workspace::open(workspace).map_err(data)?;
    let annotations = ws.annotations_path();
    let strokes = if annotations.is_file() {
        AnnotationLog::load(&annotations)
            .map_err(|e| data(format!("{}: {e}", annotations.display())))?
            .len()
    } else {
        0
    };
    if as_json {
        println!(
            "{}",
            serde_json::to_string_pretty(
                &json!({"report": ws.report, "annotation_strokes": strokes})
            )
            .expect("reports serialize")
        );
    } else {
        print!("{}", ws.report.summary());
        println!("annotation_strokes={strokes}");
    }
    if ws.report.succeeded() {
        Ok(())
    } else {
        Err(data(format!(
            "{} validation error(s)",
            ws.report.errors.len()
        )))
    }
}

fn interp(
    workspace: &Path,
    request: InterpolationRequest,
    limits: GridLimits,
    out: &Path,
    as_json: bool,
) -> Result<(), Failure> {
    let ws = Workspace::open(workspace).map_err(data)?;
    let result = run_interpolation(&ws.catalog, &request, limits)?;
    write_file(out, &result.grid.to_json())?;
    let s = &result.grid.spec;
    if as_json {
        println!(
            "{}",
            json!({
                "out": out,
                "nx": s.nx,
                "ny": s.ny,
                "nz": s.nz,
                "voxels": s.len(),
                "warnings": result.warnings,
            })
        );
    } else {
        for w in &result.warnings {
            eprintln!("warning: {w}");
        }
        println!(
            "wrote {} ({}x{}x{} voxels)",
            out.display(),
            s.nx,
            s.ny,
            s.nz
        );
    }
    Ok(())
}

fn virtual_core(grid: &Path, lat: f64, lon: f64, out: &Path, as_json: bool) -> Result<(), Failure> {
    let text =
        std::fs::read_to_string(grid).map_err(|e| data(format!("{}: {e}", grid.display())))?;
    let grid = VoxelGrid::from_json(&text)?;
    let position = GeoPoint::new(lat, lon).map_err(data)?;
    let core = extract_virtual_core(&grid, position)?;
    write_file(
        out,
        &serde_json::to_string_pretty(&core).expect("virtual cores serialize"),
    )?;
    if as_json {
        println!("{}", json!({"out": out, "horizons": core.horizons.len()}));
    } else {
        println!("wrote {} ({} horizons)", out.display(), core.horizons.len());
    }
    Ok(())
}

fn run_server(config: ServiceConfig, addr: SocketAddr, as_json: bool) -> Result<(), Failure> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(data)?;
    runtime
        .block_on(serve(config, addr, |bound| {
            if as_json {
                println!("{}", json!({"listening": format!("http://{bound}")}));
            } else {
                println!("listening on http://{bound}");
            }
        }))
        .map_err(data)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let as_json = cli.json;
    match cli.command {
        Command::Ingest {
            cores,
            samples,
            maps,
            params,
            out,
        } => ingest(
            &cores,
            &samples,
            maps.as_deref(),
            params.as_deref(),
            &out,
            as_json,
        ),
        Command::Validate { workspace } => validate(&workspace, as_json),
        Command::Interp {
            workspace,
            param,
            method,
            grid_cm,
            cores,
            padding,
            max_voxels,
            out,
        } => {
            let request = InterpolationRequest {
                method: method.into(),
                parameter: param,
                cell_xy_cm: grid_cm,
                core_ids: cores,
                padding_cells: padding,
                vsup: VsupParams::default(),
            };
            interp(
                &workspace,
                request,
                GridLimits { max_voxels },
                &out,
                as_json,
            )
        }
        Command::VirtualCore {
            grid,
            lat,
            lon,
            out,
        } => virtual_core(&grid, lat, lon, &out, as_json),
        Command::Serve {
            workspace,
            port,
            bind,
            concurrency,
            max_voxels,
        } => {
            let config = ServiceConfig {
                concurrency,
                limits: GridLimits { max_voxels },
                ..ServiceConfig::new(workspace)
            };
            run_server(config, SocketAddr::new(bind, port), as_json)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let as_json = cli.json;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if as_json {
                eprintln!(
                    "{}",
                    json!({"error": {"exit_code": f.code(), "message": f.message()}})
                );
            } else {
                eprintln!("error: {}", f.message());
            }
            ExitCode::from(f.code())
        }
    }
}
