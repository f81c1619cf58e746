use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::json;

use levelcurv::app::{
    detect_jumps, emit, parse_config, scan, CurvatureProfile, EmitError, JumpParams, OutputFormat, ScanConfig,
};
use levelcurv::curvature::totals;
use levelcurv::levelset::{extract_level, CellRule};
use levelcurv::oracle::{mc_estimate_on, Sampling};
use levelcurv::sphimage::{escape_diagnostic, rasterize, strata_areas, EscapeParams, SpherePartition};
use levelcurv::{parse, ScalarField, Vec3};

/// `println!` that exits quietly once stdout is closed, as when piped into
/// `head`.
macro_rules! out {
    (raw $($arg:tt)*) => {{
        use std::io::Write as _;
        if let Err(e) = write!(std::io::stdout(), $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
        }
    }};
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        if let Err(e) = writeln!(std::io::stdout(), $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
        }
    }};
}

/// Total curvature of level sets of a closed-form function.
#[derive(Parser)]
#[command(name = "levelcurv", version)]
struct Cli {
    /// Flat `key = value` file; command-line flags win over its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan t and tabulate K(t), |K|(t).
    Profile(ScanArgs),
    /// Scan t and report discontinuities of |K|.
    Jumps {
        #[command(flatten)]
        scan: ScanArgs,
        #[arg(long)]
        refine_budget: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        escape_epsilon: Option<f64>,
    },
    /// Mesh integral against the projection-count Monte-Carlo estimate.
    Oracle {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rasterize the Gauss image of one level.
    GaussImage {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
        #[arg(long)]
        cells: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trace the curves where the Gauss map equals a direction near a level.
    Escape {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, allow_hyphen_values = true)]
        c: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        direction: Option<String>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct FieldArgs {
    #[arg(long, allow_hyphen_values = true)]
    function: Option<String>,
    #[arg(long)]
    arity: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    /// Grid cell size, or `adaptive`.
    #[arg(long)]
    cell: Option<String>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long, allow_hyphen_values = true)]
    t_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_max: Option<f64>,
    #[arg(long)]
    n_t: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plot: bool,
    /// Also write the mesh of this level as OBJ.
    #[arg(long, allow_hyphen_values = true)]
    export_mesh: Option<f64>,
}

enum Failure {
    Usage(String),
    Numeric(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numeric(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) | Failure::Io(m) => m,
        }
    }
}

impl From<EmitError> for Failure {
    fn from(e: EmitError) -> Self {
        match e {
            EmitError::EmptyProfile => Failure::Numeric(e.to_string()),
            _ => Failure::Io(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

/// Flag values backed by the config file.
struct Settings(BTreeMap<String, String>);

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Settings(BTreeMap::new())) };
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        parse_config(&text).map(Settings).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Failure::Usage(format!("config: bad value for {key}: {v}"))),
        }
    }

    fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T> {
        self.get(flag, key)?.ok_or_else(|| Failure::Usage(format!("missing --{key}")))
    }

    fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.get(None, key)?.unwrap_or(false))
    }
}

struct Field {
    field: ScalarField,
    radius: f64,
    cell: CellRule,
}

fn field_from(s: &Settings, a: FieldArgs) -> Result<Field> {
    let text: String = s.require(a.function, "function")?;
    let arity: usize = s.or(a.arity, "arity", 2)?;
    let field = parse(&text, arity).map_err(|e| Failure::Usage(format!("function: {e}")))?;
    let radius = s.or(a.radius, "radius", 10.0)?;
    let cell = match s.get(a.cell, "cell")?.as_deref() {
        None | Some("adaptive") => CellRule::ADAPTIVE,
        Some(v) => CellRule::Fixed(v.parse().map_err(|_| Failure::Usage(format!("bad --cell {v}")))?),
    };
    Ok(Field { field, radius, cell })
}

fn to_stdout(value: &serde_json::Value) {
    out!("{}", serde_json::to_string_pretty(value).expect("json values serialize"));
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

struct Scanned {
    field: Field,
    profile: CurvatureProfile,
    out: Option<PathBuf>,
    plot: bool,
    export: Option<f64>,
}

fn run_scan(s: &Settings, a: ScanArgs) -> Result<Scanned> {
    let out = s.get(a.out, "out")?;
    let plot = s.flag(a.plot, "plot")?;
    let export = s.get(a.export_mesh, "export-mesh")?;
    let t_min = s.require(a.t_min, "t-min")?;
    let t_max = s.require(a.t_max, "t-max")?;
    let n_t = s.or(a.n_t, "n-t", 41)?;
    let f = field_from(s, a.field)?;
    let cfg = ScanConfig::new(t_min, t_max, n_t, f.radius, f.cell);
    let profile = scan(&f.field, &cfg).map_err(|e| Failure::Usage(e.to_string()))?;
    info!("scanned {} levels, {} failed", profile.len(), profile.failures.len());
    if profile.failures.len() == profile.len() {
        return Err(Failure::Numeric(format!("every level failed: {}", profile.failures[0].message)));
    }
    Ok(Scanned { field: f, profile, out, plot, export })
}

fn export_mesh(f: &Field, t: f64, dir: &Path) -> Result<PathBuf> {
    let mesh = extract_level(&f.field, t, f.radius, f.cell.cell_for(t)).map_err(|e| Failure::Numeric(e.to_string()))?;
    create_dir(dir)?;
    let path = dir.join(format!("mesh_t{t}.obj"));
    mesh.export_obj(&path).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn formats(plot: bool) -> Vec<OutputFormat> {
    let mut f = vec![OutputFormat::Csv, OutputFormat::Json];
    if plot {
        f.push(OutputFormat::Svg);
    }
    f
}

fn run(cli: Cli) -> Result<()> {
    let s = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Profile(a) => {
            let Scanned { field: f, profile, out, plot, export } = run_scan(&s, a)?;
            match &out {
                Some(dir) => {
                    for p in emit(&profile, None, &formats(plot), dir, "profile")? {
                        out!("wrote {}", p.display());
                    }
                }
                None => out!(raw "{}", levelcurv::app::profile_csv(&profile)?),
            }
            if let Some(t) = export {
                let p = export_mesh(&f, t, out.as_deref().unwrap_or(Path::new(".")))?;
                out!("wrote {}", p.display());
            }
        }
        Command::Jumps { scan: a, refine_budget, threshold, escape_epsilon } => {
            let Scanned { field: f, profile, out, plot, export } = run_scan(&s, a)?;
            let params = JumpParams {
                refine_budget: s.or(refine_budget, "refine-budget", JumpParams::default().refine_budget)?,
                threshold: s.get(threshold, "threshold")?,
                escape_epsilon: s.get(escape_epsilon, "escape-epsilon")?,
                ..JumpParams::default()
            };
            let report = detect_jumps(&f.field, &profile, &params);
            out!("threshold {}", report.threshold);
            for j in &report.jumps {
                out!(
                    "jump c={} left={} right={} value={} kind={} K_continuous={}",
                    j.c,
                    j.left_limit,
                    j.right_limit,
                    j.value_at_c.map_or("absent".to_string(), |v| v.to_string()),
                    j.kind.as_str(),
                    j.k_continuous
                );
            }
            if let Some(dir) = &out {
                for p in emit(&profile, Some(&report), &formats(plot), dir, "jumps")? {
                    out!("wrote {}", p.display());
                }
            }
            if let Some(t) = export {
                let p = export_mesh(&f, t, out.as_deref().unwrap_or(Path::new(".")))?;
                out!("wrote {}", p.display());
            }
        }
        Command::Oracle { field, t, samples, seed } => {
            let t = s.require(t, "t")?;
            let samples = s.or(samples, "samples", 500)?;
            // Low-discrepancy directions unless a seed asks for random ones.
            let sampling = match s.get(seed, "seed")? {
                Some(seed) => Sampling::Random { seed },
                None => Sampling::LowDiscrepancy { seed: 0 },
            };
            let f = field_from(&s, field)?;
            let h = f.cell.cell_for(t);
            let mesh = extract_level(&f.field, t, f.radius, h).map_err(|e| Failure::Numeric(e.to_string()))?;
            let tot = totals(&mesh);
            let mc = mc_estimate_on(&f.field, &mesh, samples, sampling);
            if mc.n_used == 0 && !mesh.is_empty() {
                return Err(Failure::Numeric("every sampled direction was rejected".into()));
            }
            to_stdout(&json!({
                "K_est": mc.k_est, "absK_est": mc.abs_k_est,
                "stderr": mc.stderr, "stderr_signed": mc.stderr_signed,
                "n_used": mc.n_used, "n_rejected": mc.n_rejected,
                "t": t, "R": f.radius, "h": h,
                "mesh": { "K": tot.k_total, "absK": tot.k_abs },
            }));
        }
        Command::GaussImage { field, t, cells, out } => {
            let t = s.require(t, "t")?;
            let out = s.get(out, "out")?;
            let f = field_from(&s, field)?;
            let partition = match s.get(cells, "cells")? {
                Some(m) if m > 0 => SpherePartition::new(f.field.arity(), m),
                Some(_) => return Err(Failure::Usage("--cells must be positive".into())),
                None => SpherePartition::default_for(f.field.arity()),
            };
            let mesh =
                extract_level(&f.field, t, f.radius, f.cell.cell_for(t)).map_err(|e| Failure::Numeric(e.to_string()))?;
            let raster = rasterize(&mesh, &partition);
            let strata: BTreeMap<String, f64> = strata_areas(&raster).into_iter().map(|(k, a)| (k.to_string(), a)).collect();
            to_stdout(&json!({
                "t": t, "cells": partition.len(),
                "covered_area": raster.covered_area(),
                "abs_total": raster.abs_total(),
                "signed_total": raster.signed_total(),
                "flagged": raster.flagged.iter().filter(|f| **f).count(),
                "strata": strata,
            }));
            if let Some(dir) = out {
                create_dir(&dir)?;
                let path = dir.join("gauss_image.csv");
                raster.export_csv(&path).map_err(|e| io_err(&path, e))?;
                out!("wrote {}", path.display());
            }
        }
        Command::Escape { field, c, direction, epsilon, out } => {
            let c = s.require(c, "c")?;
            let dir_text: String = s.require(direction, "direction")?;
            let epsilon = s.or(epsilon, "epsilon", 0.1)?;
            let out = s.get(out, "out")?;
            let f = field_from(&s, field)?;
            let comps: std::result::Result<Vec<f64>, _> = dir_text.split(',').map(|p| p.trim().parse::<f64>()).collect();
            let comps = comps.map_err(|_| Failure::Usage(format!("bad --direction {dir_text}")))?;
            if comps.len() != f.field.arity() || comps.iter().all(|v| *v == 0.0) {
                return Err(Failure::Usage(format!("--direction needs {} non-zero components", f.field.arity())));
            }
            let u = Vec3::new(comps[0], comps[1], comps.get(2).copied().unwrap_or(0.0));
            let params =
                EscapeParams { epsilon, radius: f.radius, cell: f.cell.cell_for(c.abs() + 0.5 * epsilon), max_steps: 5000 };
            let report = escape_diagnostic(&f.field, c, &u, &params);
            let comps: Vec<_> = report
                .components
                .iter()
                .map(|k| {
                    json!({
                        "points": k.points.len(), "f_min": k.f_min, "f_max": k.f_max,
                        "crosses_c": k.crosses_c, "exits_ball": k.exits_ball,
                        "stalled": k.stalled, "closed": k.closed,
                    })
                })
                .collect();
            to_stdout(&json!({
                "c": c, "direction": [u.x, u.y, u.z], "epsilon": epsilon, "seeds": report.seeds,
                "one_sided_escape": report.has_one_sided_escape(), "components": comps,
            }));
            if let Some(dir) = out {
                create_dir(&dir)?;
                let path = dir.join("escape.json");
                let text = serde_json::to_string_pretty(&report).expect("escape report serializes");
                std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
                out!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
