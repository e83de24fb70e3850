//! Batch front door for the resonance pipeline: parses a run
//! configuration, executes exactly one command, and persists JSON, CSV,
//! and SVG artifacts.  Every artifact embeds the tool version and a
//! SHA-256 hash of the configuration and model inputs, and identical
//! configuration plus seed produces byte-identical output.
//!
//! Exit codes separate plumbing from findings: configuration problems
//! exit 2 and computation failures exit 3, while a report that records a
//! failing certificate is still a successful run (exit 0).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::Parser;
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use cuspfunnel::dynamics::{self, IntegrateOpts};
use cuspfunnel::escape;
use cuspfunnel::geometry::{self, End, HypothesisGrid, ZeroVolumePlan};
use cuspfunnel::operators::{self, Grid1D, ResonanceReport, ScanPlan, Scheme, Variant};
use cuspfunnel::scaling::{self, SymbolGrid};
use cuspfunnel::ModelSurface;

/// The bundled example surface, usable as `model = bundled:parabolic-cylinder`.
pub const BUNDLED_PARABOLIC_CYLINDER: &str =
    include_str!("../models/parabolic-cylinder.model");

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum RunError {
    /// Bad configuration: exit code 2.
    Config(anyhow::Error),
    /// A computation could not produce a report at all: exit code 3.
    Compute(anyhow::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Compute(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        match self {
            RunError::Config(e) => format!("config error: {e:#}"),
            RunError::Compute(e) => format!("computation error: {e:#}"),
        }
    }
}

fn config_err<E: Into<anyhow::Error>>(e: E) -> RunError {
    RunError::Config(e.into())
}

fn compute_err<E: Into<anyhow::Error>>(e: E) -> RunError {
    RunError::Compute(e.into())
}

#[derive(Debug, Parser)]
#[command(name = "cuspfunnel", version, about = "Resonance pipeline batch runner")]
pub struct Cli {
    /// Run configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Command override; otherwise the config's `command` key is used.
    #[arg(long)]
    pub command: Option<String>,
    /// Output directory override.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = library default).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Seed override for randomized commands.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// One fully resolved run: the parsed configuration plus the loaded model.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: String,
    pub out: PathBuf,
    pub seed: u64,
    pub jobs: usize,
    pub model: ModelSurface,
    /// Hex SHA-256 over the config text and the model text.
    pub config_hash: String,
    // [contour]
    pub contour_end: End,
    pub contour_alpha: f64,
    pub contour_r: f64,
    pub contour_width: f64,
    // [scan]
    pub h_list: Vec<f64>,
    pub window_c: f64,
    pub n_base: usize,
    pub n_high: usize,
    pub scheme: Scheme,
    pub max_modes: usize,
    pub scan_r_base: f64,
    // [resolvent]
    pub resolvent_points: usize,
    pub resolvent_radius: f64,
    pub resolvent_n: usize,
    // [geodesics]
    pub geodesic_count: usize,
    pub geodesic_traces: usize,
    // [escape]
    pub escape_alpha_cusp: Option<f64>,
    pub escape_alpha_funnel: f64,
}

fn parse_f64(section: &str, key: &str, v: &str) -> Result<f64, RunError> {
    v.parse::<f64>()
        .map_err(|_| config_err(anyhow!("[{section}] {key}: expected a number, got `{v}`")))
}

fn parse_usize(section: &str, key: &str, v: &str) -> Result<usize, RunError> {
    v.parse::<usize>()
        .map_err(|_| config_err(anyhow!("[{section}] {key}: expected an integer, got `{v}`")))
}

/// Loads and validates a configuration file, applying CLI overrides.
pub fn load_config(cli: &Cli) -> Result<RunConfig, RunError> {
    let text = std::fs::read_to_string(&cli.config)
        .with_context(|| format!("reading {}", cli.config.display()))
        .map_err(config_err)?;

    let mut command: Option<String> = None;
    let mut out = PathBuf::from("artifacts");
    let mut seed = 1u64;
    let mut jobs = 0usize;
    let mut model_ref = String::from("bundled:parabolic-cylinder");
    let mut contour_end = End::Cusp;
    let mut contour_alpha = 0.0f64;
    let mut contour_r = 5.0f64;
    let mut contour_width = 0.05f64;
    let mut h_list = vec![0.1f64];
    let mut window_c = 0.5f64;
    let mut n_base = 1024usize;
    let mut n_high = 512usize;
    let mut scheme = Scheme::Fd4;
    let mut max_modes = 64usize;
    let mut scan_r_base = operators::SCAN_R_BASE;
    let mut resolvent_points = 17usize;
    let mut resolvent_radius = 1.0f64;
    let mut resolvent_n = 256usize;
    let mut geodesic_count = 100usize;
    let mut geodesic_traces = 4usize;
    let mut escape_alpha_cusp: Option<f64> = None;
    let mut escape_alpha_funnel = 1.0f64;

    let mut section = String::from("run");
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            match section.as_str() {
                "run" | "contour" | "scan" | "resolvent" | "geodesics" | "escape" => {}
                other => return Err(config_err(anyhow!("line {line_no}: unknown section `{other}`"))),
            }
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_err(anyhow!("line {line_no}: expected `key = value`")))?;
        let (key, value) = (key.trim(), value.trim());
        match (section.as_str(), key) {
            ("run", "command") => command = Some(value.to_string()),
            ("run", "out") => out = PathBuf::from(value),
            ("run", "seed") => seed = parse_usize("run", key, value)? as u64,
            ("run", "jobs") => jobs = parse_usize("run", key, value)?,
            ("run", "model") => model_ref = value.to_string(),
            ("contour", "end") => {
                contour_end = match value {
                    "cusp" => End::Cusp,
                    "funnel" => End::Funnel,
                    other => {
                        return Err(config_err(anyhow!("[contour] end: `{other}` is not cusp|funnel")))
                    }
                }
            }
            ("contour", "alpha") => contour_alpha = parse_f64("contour", key, value)?,
            ("contour", "r") => contour_r = parse_f64("contour", key, value)?,
            ("contour", "width") => contour_width = parse_f64("contour", key, value)?,
            ("scan", "h") => {
                h_list = value
                    .split([' ', ','])
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_f64("scan", "h", s))
                    .collect::<Result<_, _>>()?;
            }
            ("scan", "window_c") => window_c = parse_f64("scan", key, value)?,
            ("scan", "n_base") => n_base = parse_usize("scan", key, value)?,
            ("scan", "n_high") => n_high = parse_usize("scan", key, value)?,
            ("scan", "max_modes") => max_modes = parse_usize("scan", key, value)?,
            ("scan", "r_base") => scan_r_base = parse_f64("scan", key, value)?,
            ("scan", "scheme") => {
                scheme = match value {
                    "fd4" => Scheme::Fd4,
                    "chebyshev" => Scheme::Chebyshev,
                    other => {
                        return Err(config_err(anyhow!("[scan] scheme: `{other}` is not fd4|chebyshev")))
                    }
                }
            }
            ("resolvent", "points") => resolvent_points = parse_usize("resolvent", key, value)?,
            ("resolvent", "radius") => resolvent_radius = parse_f64("resolvent", key, value)?,
            ("resolvent", "n") => resolvent_n = parse_usize("resolvent", key, value)?,
            ("geodesics", "count") => geodesic_count = parse_usize("geodesics", key, value)?,
            ("geodesics", "traces") => geodesic_traces = parse_usize("geodesics", key, value)?,
            ("escape", "alpha_cusp") => {
                escape_alpha_cusp = if value == "auto" {
                    None
                } else {
                    Some(parse_f64("escape", key, value)?)
                }
            }
            ("escape", "alpha_funnel") => escape_alpha_funnel = parse_f64("escape", key, value)?,
            (s, k) => return Err(config_err(anyhow!("line {line_no}: unexpected key `{k}` in [{s}]"))),
        }
    }

    let model_text = if let Some(name) = model_ref.strip_prefix("bundled:") {
        match name {
            "parabolic-cylinder" => BUNDLED_PARABOLIC_CYLINDER.to_string(),
            other => return Err(config_err(anyhow!("no bundled model `{other}`"))),
        }
    } else {
        let path = if Path::new(&model_ref).is_absolute() {
            PathBuf::from(&model_ref)
        } else {
            cli.config.parent().unwrap_or(Path::new(".")).join(&model_ref)
        };
        std::fs::read_to_string(&path)
            .with_context(|| format!("reading model {}", path.display()))
            .map_err(config_err)?
    };
    let model = ModelSurface::parse(&model_text).map_err(config_err)?;

    let command = cli
        .command
        .clone()
        .or(command)
        .ok_or_else(|| config_err(anyhow!("no command given (config `command` or --command)")))?;
    if let Some(o) = &cli.out {
        out = o.clone();
    }
    if let Some(s) = cli.seed {
        seed = s;
    }
    if cli.jobs > 0 {
        jobs = cli.jobs;
    }

    for &h in &h_list {
        if !(h > 0.0 && h < 1.0) {
            return Err(config_err(anyhow!("[scan] h must lie in (0, 1), got {h}")));
        }
    }
    if !(window_c > 0.0) {
        return Err(config_err(anyhow!("[scan] window_c must be positive")));
    }

    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hasher.update(model_text.as_bytes());
    let config_hash = hex(&hasher.finalize());

    Ok(RunConfig {
        command,
        out,
        seed,
        jobs,
        model,
        config_hash,
        contour_end,
        contour_alpha,
        contour_r,
        contour_width,
        h_list,
        window_c,
        n_base,
        n_high,
        scheme,
        max_modes,
        scan_r_base,
        resolvent_points,
        resolvent_radius,
        resolvent_n,
        geodesic_count,
        geodesic_traces,
        escape_alpha_cusp,
        escape_alpha_funnel,
    })
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        write!(s, "{b:02x}").expect("hex write");
    }
    s
}

/// Artifact writer: stamps every file with the tool version and the
/// configuration hash.
struct Artifacts<'a> {
    dir: PathBuf,
    hash: &'a str,
    written: Vec<String>,
}

impl<'a> Artifacts<'a> {
    fn new(dir: &Path, hash: &'a str) -> Result<Self, RunError> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(compute_err)?;
        Ok(Artifacts { dir: dir.to_path_buf(), hash, written: Vec::new() })
    }

    fn json(&mut self, name: &str, report: serde_json::Value) -> Result<(), RunError> {
        let envelope = serde_json::json!({
            "tool": "cuspfunnel",
            "version": VERSION,
            "config_sha256": self.hash,
            "report": report,
        });
        let text = serde_json::to_string_pretty(&envelope).expect("json artifact");
        self.raw(name, &(text + "\n"))
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), RunError> {
        let header = if name.ends_with(".svg") {
            format!("<!-- cuspfunnel {VERSION} config sha256 {} -->\n", self.hash)
        } else {
            format!("# cuspfunnel {VERSION} config sha256 {}\n", self.hash)
        };
        self.raw(name, &(header + body))
    }

    fn raw(&mut self, name: &str, body: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        std::fs::write(&path, body)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(compute_err)?;
        self.written.push(name.to_string());
        Ok(())
    }
}

/// Parses the config and runs its command; returns the list of artifact
/// file names on success.
pub fn execute(cli: &Cli) -> Result<Vec<String>, RunError> {
    let cfg = load_config(cli)?;
    if cfg.jobs > 0 {
        // Ignore failure: the pool can only be initialized once per process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build_global();
    }
    run(&cfg)
}

pub fn run(cfg: &RunConfig) -> Result<Vec<String>, RunError> {
    let mut art = Artifacts::new(&cfg.out, &cfg.config_hash)?;
    match cfg.command.as_str() {
        "validate-geometry" => validate_geometry(cfg, &mut art)?,
        "trace-geodesics" => trace_geodesics(cfg, &mut art)?,
        "build-contour" => build_contour(cfg, &mut art)?,
        "verify-symbols" => verify_symbols(cfg, &mut art)?,
        "verify-escape" => verify_escape(cfg, &mut art)?,
        "compute-resonances" => compute_resonances(cfg, &mut art)?,
        "scan-resolvent" => scan_resolvent(cfg, &mut art)?,
        "zero-volume" => zero_volume(cfg, &mut art)?,
        other => return Err(config_err(anyhow!("unknown command `{other}`"))),
    }
    Ok(art.written.clone())
}

fn validate_geometry(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), RunError> {
    let report = geometry::validate_surface(&cfg.model, &HypothesisGrid::default())
        .map_err(compute_err)?;
    let value = serde_json::to_value(&report).expect("report value");
    art.json("validate.json", value)?;
    art.text("validate.jsonl", &report.to_json_lines())?;
    if !report.pass() {
        for check in report.checks.iter().filter(|c| !c.pass) {
            eprintln!("finding: hypothesis check {} fails (margin {})", check.id, check.margin);
        }
    }
    Ok(())
}

fn trace_geodesics(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), RunError> {
    let opts = IntegrateOpts::default();
    let report = dynamics::classify_batch(&cfg.model, cfg.geodesic_count, cfg.seed, &opts)
        .map_err(compute_err)?;
    art.json("geodesics.json", serde_json::to_value(&report).expect("report value"))?;
    // A few representative traces for plotting.
    for k in 0..cfg.geodesic_traces {
        let angle = std::f64::consts::PI * (k as f64 + 0.5) / cfg.geodesic_traces as f64;
        let alpha = angle.sin().powi(2);
        let setup = dynamics::FlowSetup::global(&cfg.model, alpha).map_err(compute_err)?;
        let (w, _) = setup.warp_weight(0.0);
        let rho = (1.0 - w * alpha).max(0.0).sqrt() * angle.cos().signum();
        let traj = dynamics::integrate(
            &setup,
            dynamics::PhasePoint { r: 0.0, rho },
            &opts,
        )
        .map_err(compute_err)?;
        art.text(&format!("trajectory_{k}.csv"), &traj.to_csv())?;
    }
    Ok(())
}

fn model_contour(cfg: &RunConfig, end: End, alpha: f64) -> Result<scaling::ContourSpec, RunError> {
    scaling::build_contour_with_width(
        end,
        cfg.contour_r,
        cfg.model.theta,
        alpha,
        cfg.model.profile(end),
        cfg.contour_width,
    )
    .map_err(compute_err)
}

fn build_contour(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), RunError> {
    let c = model_contour(cfg, cfg.contour_end, cfg.contour_alpha)?;
    art.text("contour.csv", &c.to_csv(400))?;
    art.text("contour.svg", &c.to_svg(400, 640.0, 360.0))?;
    art.json(
        "contour.json",
        serde_json::json!({
            "end": format!("{:?}", c.end),
            "branch": format!("{:?}", c.branch),
            "alpha": c.alpha,
            "r_base": c.r_base,
            "theta": c.theta,
            "width": c.width,
            "r_free": c.r_free,
            "breakpoints": c.breakpoints.iter()
                .map(|b| serde_json::json!({"label": b.label, "r": b.r}))
                .collect::<Vec<_>>(),
        }),
    )
}

fn verify_symbols(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), RunError> {
    let c = model_contour(cfg, cfg.contour_end, cfg.contour_alpha)?;
    let report = scaling::verify_symbol_bounds(
        cfg.contour_end,
        &c,
        cfg.model.profile(cfg.contour_end),
        &SymbolGrid::default(),
    )
    .map_err(compute_err)?;
    if !report.pass() {
        eprintln!("finding: symbol bounds fail for alpha = {}", c.alpha);
    }
    let value: serde_json::Value =
        serde_json::from_str(&report.to_json()).expect("round-trips");
    art.json("symbol_bounds.json", value)
}

fn verify_escape(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), RunError> {
    let alpha_cusp = match cfg.escape_alpha_cusp {
        Some(a) => a,
        None => scaling::cusp_small_alpha_sweep(cfg.contour_r, cfg.model.theta, &cfg.model.cusp, 1)
            .map_err(compute_err)?[0],
    };
    let cusp_c = model_contour(cfg, End::Cusp, alpha_cusp)?;
    let funnel_c = model_contour(cfg, End::Funnel, cfg.escape_alpha_funnel)?;
    let constants = escape::EscapeConstants::from_contours(&cusp_c, &funnel_c);
    let set = escape::build_escape(&cfg.model, cfg.contour_r, &constants).map_err(compute_err)?;
    let report = escape::verify_escape(&set, &cusp_c, &funnel_c, &escape::EscapeGrid::default(), None)
        .map_err(compute_err)?;
    if !report.pass() {
        eprintln!("finding: escape positivity fails; see escape.json");
    }
    let value: serde_json::Value = serde_json::from_str(&report.to_json()).expect("round-trips");
    art.json("escape.json", value)?;
    for (field, name) in [
        (&set.funnel, "escape_funnel.csv"),
        (&set.cusp, "escape_cusp.csv"),
        (&set.core, "escape_core.csv"),
    ] {
        art.text(name, &escape::field_csv(field, 120, 41).map_err(compute_err)?)?;
    }
    Ok(())
}

fn scan_plan(cfg: &RunConfig) -> ScanPlan {
    ScanPlan {
        n_base: cfg.n_base,
        n_high: cfg.n_high,
        window_c: cfg.window_c,
        max_modes: cfg.max_modes,
        scheme: cfg.scheme,
        r_base: cfg.scan_r_base,
        ..ScanPlan::default()
    }
}

fn compute_resonances(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), RunError> {
    let plan = scan_plan(cfg);
    let mut summary = Vec::new();
    for &h in &cfg.h_list {
        let report = operators::resonance_scan(&cfg.model, h, &plan).map_err(compute_err)?;
        let tag = format!("{h}").replace('.', "p");
        let value: serde_json::Value =
            serde_json::from_str(&report.to_json()).expect("round-trips");
        art.json(&format!("resonances_h{tag}.json"), value)?;
        art.text(&format!("resonances_h{tag}.csv"), &report.to_csv())?;
        art.text(&format!("resonances_h{tag}.svg"), &resonance_svg(&report))?;
        if report.window_occupied() {
            eprintln!("finding: window occupied at h = {h}");
        }
        summary.push(serde_json::json!({
            "h": h,
            "verdict": report.verdict,
            "kappa": report.kappa,
            "window_radius": report.window_radius,
            "mode_cutoff": report.mode_cutoff,
        }));
    }
    let kappa = summary
        .iter()
        .filter_map(|s| s["kappa"].as_f64())
        .fold(f64::INFINITY, f64::min);
    art.json(
        "resonances_summary.json",
        serde_json::json!({
            "runs": summary,
            "fitted_kappa": if kappa.is_finite() { kappa } else { 0.0 },
        }),
    )
}

/// SVG resonance map: the scan circle, the shaded window, and the
/// eigenvalues (refinement-stable ones emphasized).
fn resonance_svg(report: &ResonanceReport) -> String {
    let half = 1.1 * report.scan_radius;
    let size = 600.0;
    let map = |x: f64, y: f64| ((x + half) / (2.0 * half) * size, (half - y) / (2.0 * half) * size);
    let circle_path = |r: f64| {
        let mut d = String::new();
        for i in 0..=96 {
            let a = 2.0 * std::f64::consts::PI * i as f64 / 96.0;
            let (x, y) = map(r * a.cos(), r * a.sin());
            let _ = write!(d, "{}{x:.2},{y:.2} ", if i == 0 { "M" } else { "L" });
        }
        d + "Z"
    };
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {size} {size}\">\n"
    );
    let _ = writeln!(
        svg,
        "  <path d=\"{}\" fill=\"none\" stroke=\"#888888\" stroke-width=\"1\"/>",
        circle_path(report.scan_radius)
    );
    let _ = writeln!(
        svg,
        "  <path d=\"{}\" fill=\"#dddddd\" stroke=\"#000000\" stroke-width=\"1.5\"/>",
        circle_path(report.window_radius)
    );
    for e in &report.eigenvalues {
        let (x, y) = map(e.zeta_re, e.zeta_im);
        if e.stable {
            let _ = writeln!(svg, "  <circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"#000000\"/>");
        } else {
            let _ = writeln!(
                svg,
                "  <circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"1.5\" fill=\"#aaaaaa\"/>"
            );
        }
    }
    svg + "</svg>\n"
}

fn scan_resolvent(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), RunError> {
    let h = cfg.h_list[0];
    let theta = cfg.model.theta;
    let cc = scaling::build_contour(End::Cusp, cfg.scan_r_base, theta, 0.0, &cfg.model.cusp)
        .map_err(compute_err)?;
    let cf = scaling::build_contour(End::Funnel, cfg.scan_r_base, theta, 0.0, &cfg.model.funnel)
        .map_err(compute_err)?;
    let span = cc.last_breakpoint().max(cf.last_breakpoint()) + 6.0;
    let grid = Grid1D::new(-span, span, cfg.resolvent_n, cfg.scheme).map_err(compute_err)?;
    let op = operators::build_mode_operator(&cfg.model, &cc, &cf, 0, 0.0, h, &grid, Variant::Scaled)
        .map_err(compute_err)?;
    let m = cfg.resolvent_points.max(2);
    let mut zetas = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            zetas.push(Complex64::new(
                -cfg.resolvent_radius + 2.0 * cfg.resolvent_radius * i as f64 / (m - 1) as f64,
                -cfg.resolvent_radius + 2.0 * cfg.resolvent_radius * j as f64 / (m - 1) as f64,
            ));
        }
    }
    let floors = operators::resolvent_floor(&op, &zetas).map_err(compute_err)?;
    let mut csv = String::from("zeta_re,zeta_im,sigma_min\n");
    let mut min = f64::INFINITY;
    let mut at = Complex64::new(0.0, 0.0);
    for (z, s) in &floors {
        let _ = writeln!(csv, "{},{},{s:.12e}", z.re, z.im);
        if *s < min {
            min = *s;
            at = *z;
        }
    }
    art.text("resolvent.csv", &csv)?;
    art.json(
        "resolvent.json",
        serde_json::json!({
            "h": h,
            "grid_n": cfg.resolvent_n,
            "points": m * m,
            "min_sigma": min,
            "min_at": {"re": at.re, "im": at.im},
        }),
    )
}

fn zero_volume(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), RunError> {
    let result =
        geometry::zero_volume(&cfg.model, &ZeroVolumePlan::default()).map_err(compute_err)?;
    art.json("zero_volume.json", serde_json::to_value(&result).expect("result value"))
}
