use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use snowflake::bounds::{
    bound_from_test_function, compute_eigen, sweep, write_sweep_csv, BoundSettings, EigenSettings,
    SweepConfig,
};
use snowflake::certificate::{certify, CertificateConfig, Verdict};
use snowflake::conformal::SnowflakeParams;
use snowflake::quadrature::TrapezoidSettings;
use snowflake::render::{render_scene, write_csv, write_svg_annotated, SceneConfig, SnowflakeRealization, TraceSettings};
use snowflake::table::{run_table, select_rows, write_table_csv, TableConfig, TABLE1};
use snowflake::test_function::{fit_values, FitForm};
use snowflake::transfer::{read_eigenvector_csv, EigenSummary};
use snowflake::Error;

const VERSION: &str = env!("CARGO_PKG_VERSION");

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_CERT_FAILED: u8 = 3;

/// Lower bounds for the integral means spectrum of random conformal snowflakes.
#[derive(Parser, Debug)]
#[command(name = "snowflake", version)]
struct Cli {
    /// Flat TOML file with default parameter values; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Discretized operator and its main eigenvalue.
    Eigen(EigenArgs),
    /// log_k λ over a grid of (k, l).
    Sweep(SweepArgs),
    /// Semi-rigorous bound from a fitted test function.
    Bound(BoundArgs),
    /// Recompute rows of the reference spectrum table.
    Table(TableArgs),
    /// Rigorous certificate for β(1) (k = 13, l = 73, s = 1.002).
    Certify(CertifyArgs),
    /// Render a finite snowflake approximation to SVG.
    Render(RenderArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct Snowflake {
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    l: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
struct Discretization {
    /// Radial grid size.
    #[arg(long = "N", short = 'N')]
    n: Option<usize>,
    /// Angular grid size.
    #[arg(long = "M", short = 'M')]
    m: Option<usize>,
    /// Override the critical radius.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    eigen_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args, Debug)]
struct EigenArgs {
    #[command(flatten)]
    flake: Snowflake,
    #[command(flatten)]
    disc: Discretization,
    /// Output directory for eigenvector.csv and eigen.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    /// Values of k: comma list or inclusive range `a..b`.
    #[arg(long)]
    ks: Option<String>,
    /// Values of l: comma list or range `a..b[:step]`.
    #[arg(long)]
    ls: Option<String>,
    #[command(flatten)]
    disc: Discretization,
    /// Also compute the fitted bound for the best cell.
    #[arg(long)]
    bound_best: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[command(flatten)]
    flake: Snowflake,
    #[command(flatten)]
    disc: Discretization,
    /// Eigenvector CSV (`r,v`) to fit instead of recomputing it.
    #[arg(long)]
    eigenvector: Option<PathBuf>,
    /// Radii at which Pν/ν is evaluated.
    #[arg(long)]
    points: Option<usize>,
    /// Relative tolerance of the doubling trapezoid rule.
    #[arg(long)]
    quad_tol: Option<f64>,
    /// `rational` (degrees 5/1), `rational:P/Q`, or `linear`.
    #[arg(long)]
    fit: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TableArgs {
    /// Comma list of t values; default all rows.
    #[arg(long, allow_hyphen_values = true)]
    rows: Option<String>,
    #[arg(long)]
    s: Option<f64>,
    #[command(flatten)]
    disc: Discretization,
    /// Also compute fitted bounds.
    #[arg(long)]
    bound: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    /// JSON certificate path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Text report path.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[command(flatten)]
    flake: Snowflake,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Chord tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Render the whole boundary circle instead of a small arc.
    #[arg(long)]
    full_boundary: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional CSV of polyline points.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Flat configuration file; every key is optional and unknown keys are
/// rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    t: Option<f64>,
    k: Option<u32>,
    l: Option<f64>,
    s: Option<f64>,
    #[serde(alias = "N")]
    n: Option<usize>,
    #[serde(alias = "M")]
    m: Option<usize>,
    radius: Option<f64>,
    eigen_tol: Option<f64>,
    max_iter: Option<usize>,
    ks: Option<String>,
    ls: Option<String>,
    points: Option<usize>,
    nodes: Option<usize>,
    quad_tol: Option<f64>,
    fit: Option<String>,
    rows: Option<String>,
    depth: Option<usize>,
    seed: Option<u64>,
    tol: Option<f64>,
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
    CertificateFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() || matches!(e, Error::Io(_)) {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, Failure> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn require<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T, Failure> {
    match flag.or(file) {
        Some(v) => Ok(v),
        None => usage(format!("missing required parameter --{name}")),
    }
}

fn snowflake_params(a: &Snowflake, cfg: &FileConfig) -> Result<SnowflakeParams, Failure> {
    let t = require(a.t, cfg.t, "t")?;
    let k = require(a.k, cfg.k, "k")?;
    let l = require(a.l, cfg.l, "l")?;
    let s = a.s.or(cfg.s).unwrap_or(1.0);
    Ok(SnowflakeParams::new(t, k, l, s)?)
}

fn eigen_settings(d: &Discretization, cfg: &FileConfig) -> EigenSettings {
    let def = EigenSettings::default();
    EigenSettings {
        tol: d.eigen_tol.or(cfg.eigen_tol).unwrap_or(def.tol),
        max_iter: d.max_iter.or(cfg.max_iter).unwrap_or(def.max_iter),
        radius_tol: def.radius_tol,
    }
}

fn grid_size(d: &Discretization, cfg: &FileConfig, n: usize, m: usize) -> (usize, usize) {
    (d.n.or(cfg.n).unwrap_or(n), d.m.or(cfg.m).unwrap_or(m))
}

/// Comment lines describing the run, without timestamps.
fn metadata(command: &str, fields: &[(&str, String)]) -> Vec<String> {
    let mut lines = vec![format!("snowflake {VERSION} {command}")];
    lines.extend(fields.iter().map(|(k, v)| format!("{k} = {v}")));
    lines
}

fn write_with_header(path: &Path, header: &[String], body: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
    for line in header {
        writeln!(f, "# {line}")?;
    }
    f.write_all(body)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, header: &[String], value: &T) -> Result<(), Failure> {
    #[derive(Serialize)]
    struct Wrapped<'a, T> {
        meta: &'a [String],
        result: &'a T,
    }
    let body = serde_json::to_vec_pretty(&Wrapped { meta: header, result: value }).map_err(Error::from)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, body).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

fn params_fields(p: &SnowflakeParams) -> Vec<(&'static str, String)> {
    vec![
        ("t", p.t.to_string()),
        ("k", p.k.to_string()),
        ("l", p.slit.l.to_string()),
        ("s", p.slit.s.to_string()),
    ]
}

fn cmd_eigen(a: &EigenArgs, cfg: &FileConfig) -> CmdResult {
    let params = snowflake_params(&a.flake, cfg)?;
    let (n, m) = grid_size(&a.disc, cfg, 1000, 500);
    let settings = eigen_settings(&a.disc, cfg);
    let (tm, eig) = compute_eigen(&params, n, m, a.disc.radius.or(cfg.radius), &settings)?;
    let summary = EigenSummary::new(&tm, &eig);
    println!("R = {:.6}", summary.radius);
    println!("lambda = {:.10}", summary.lambda);
    println!("log_k lambda = {:.6}", summary.log_k_lambda);
    println!("residual = {:.3e} after {} iterations", summary.residual, summary.iterations);
    if summary.clamped_above + summary.clamped_below > 0 {
        println!(
            "clamped targets: {} above, {} below",
            summary.clamped_above, summary.clamped_below
        );
    }
    if let Some(dir) = a.out.as_ref().or(cfg.out.as_ref()) {
        let mut fields = params_fields(&params);
        fields.extend([("N", n.to_string()), ("M", m.to_string()), ("R", tm.grid.radius.to_string())]);
        let header = metadata("eigen", &fields);
        let mut body = Vec::new();
        eig.write_csv(&tm.grid.r, &mut body)?;
        write_with_header(&dir.join("eigenvector.csv"), &header, &body)?;
        write_json(&dir.join("eigen.json"), &header, &summary)?;
    }
    Ok(())
}

/// `2,3,5` or `4..8` (inclusive) or `10..40:5`.
fn parse_list(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Usage(format!("cannot parse list {spec:?}"));
    if let Some((a, rest)) = spec.split_once("..") {
        let (b, step) = match rest.split_once(':') {
            Some((b, st)) => (b, st.trim().parse::<f64>().map_err(|_| bad())?),
            None => (rest, 1.0),
        };
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        if step.is_nan() || step <= 0.0 || b < a {
            return Err(bad());
        }
        let count = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|i| a + step * i as f64).collect());
    }
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

fn cmd_sweep(a: &SweepArgs, cfg: &FileConfig) -> CmdResult {
    let t = require(a.t, cfg.t, "t")?;
    let ks = parse_list(&require(a.ks.clone(), cfg.ks.clone(), "ks")?)?;
    let ls = parse_list(&require(a.ls.clone(), cfg.ls.clone(), "ls")?)?;
    if let Some(k) = ks.iter().find(|k| k.fract() != 0.0 || **k < 2.0) {
        return usage(format!("k = {k} must be an integer >= 2"));
    }
    let (n, m) = grid_size(&a.disc, cfg, 400, 200);
    let sc = SweepConfig {
        t,
        s: a.s.or(cfg.s).unwrap_or(1.0),
        ks: ks.iter().map(|&k| k as u32).collect(),
        ls,
        n,
        m,
        eigen: eigen_settings(&a.disc, cfg),
        bound_best: a.bound_best.then(BoundSettings::default),
    };
    let records = sweep(&sc);
    let mut body = Vec::new();
    write_sweep_csv(&records, &mut body)?;
    let header = metadata(
        "sweep",
        &[
            ("t", t.to_string()),
            ("s", sc.s.to_string()),
            ("N", n.to_string()),
            ("M", m.to_string()),
        ],
    );
    match a.out.as_ref().or(cfg.out.as_ref()) {
        Some(path) => write_with_header(path, &header, &body)?,
        None => std::io::stdout().write_all(&body)?,
    }
    if let Some(best) = records.iter().find(|r| r.error.is_none()) {
        eprintln!(
            "best: k = {}, l = {}, log_k lambda = {:.6}",
            best.k,
            best.l,
            best.log_k_lambda.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

fn parse_fit(spec: &str) -> Result<FitForm, Failure> {
    match spec {
        "linear" => Ok(FitForm::PiecewiseLinear),
        "rational" => Ok(FitForm::default()),
        other => {
            let degrees = other
                .strip_prefix("rational:")
                .and_then(|d| d.split_once('/'))
                .and_then(|(p, q)| Some((p.parse().ok()?, q.parse().ok()?)));
            match degrees {
                Some((num_degree, den_degree)) => Ok(FitForm::Rational {
                    num_degree,
                    den_degree,
                }),
                None => usage(format!("unknown fit form {other:?}")),
            }
        }
    }
}

fn cmd_bound(a: &BoundArgs, cfg: &FileConfig) -> CmdResult {
    let params = snowflake_params(&a.flake, cfg)?;
    let form = parse_fit(a.fit.as_deref().or(cfg.fit.as_deref()).unwrap_or("rational"))?;
    let settings = BoundSettings {
        n_points: a.points.or(cfg.points).unwrap_or(BoundSettings::default().n_points),
        quad: TrapezoidSettings {
            tol: a.quad_tol.or(cfg.quad_tol).unwrap_or(TrapezoidSettings::default().tol),
            ..TrapezoidSettings::default()
        },
    };
    let (radii, values) = match &a.eigenvector {
        Some(path) => read_eigenvector_csv(path)?,
        None => {
            let (n, m) = grid_size(&a.disc, cfg, 1000, 500);
            let (tm, eig) = compute_eigen(&params, n, m, a.disc.radius.or(cfg.radius), &eigen_settings(&a.disc, cfg))?;
            println!("log_k lambda = {:.6}", eig.log_k(params.k));
            (tm.grid.r.clone(), eig.vector)
        }
    };
    let radius = match a.disc.radius.or(cfg.radius) {
        Some(r) => r,
        None => params.critical_radius(EigenSettings::default().radius_tol)?,
    };
    let nu = fit_values(&radii, &values, (1.0, radius), form)?;
    let bound = bound_from_test_function(&params, &nu, radius, &settings)?;
    println!("min P(nu)/nu = {:.6} at r = {:.4}", bound.min_ratio, bound.argmin_r);
    println!("beta(t) >= {:.6} (semi-rigorous)", bound.beta_lower);
    if let Some(path) = a.out.as_ref().or(cfg.out.as_ref()) {
        #[derive(Serialize)]
        struct Out<'a> {
            test_function: &'a snowflake::test_function::TestFunction,
            bound: &'a snowflake::bounds::BoundResult,
        }
        let mut fields = params_fields(&params);
        fields.push(("points", settings.n_points.to_string()));
        write_json(path, &metadata("bound", &fields), &Out { test_function: &nu, bound: &bound })?;
    }
    Ok(())
}

fn cmd_table(a: &TableArgs, cfg: &FileConfig) -> CmdResult {
    let rows = match a.rows.as_ref().or(cfg.rows.as_ref()) {
        Some(spec) => {
            let ts = parse_list(spec)?;
            let rows = select_rows(&ts);
            if let Some(t) = ts.iter().find(|t| !rows.iter().any(|r| (r.t - **t).abs() < 1e-9)) {
                return usage(format!("no table row with t = {t}"));
            }
            rows
        }
        None => TABLE1.to_vec(),
    };
    let (n, m) = grid_size(&a.disc, cfg, 2000, 1000);
    let tc = TableConfig {
        n,
        m,
        s: a.s.or(cfg.s).unwrap_or(1.0),
        eigen: eigen_settings(&a.disc, cfg),
        bound: a.bound.then(BoundSettings::default),
    };
    let records = run_table(&rows, &tc);
    let mut body = Vec::new();
    write_table_csv(&records, &mut body)?;
    let header = metadata(
        "table",
        &[("N", n.to_string()), ("M", m.to_string()), ("s", tc.s.to_string())],
    );
    match a.out.as_ref().or(cfg.out.as_ref()) {
        Some(path) => write_with_header(path, &header, &body)?,
        None => std::io::stdout().write_all(&body)?,
    }
    Ok(())
}

fn cmd_certify(a: &CertifyArgs, cfg: &FileConfig) -> CmdResult {
    let def = CertificateConfig::default();
    let cc = CertificateConfig {
        points: a.points.or(cfg.points).unwrap_or(def.points),
        nodes: a.nodes.or(cfg.nodes).unwrap_or(def.nodes),
        ..def
    };
    let cert = certify(&cc)?;
    let mut text = Vec::new();
    cert.write_report(&mut text)?;
    std::io::stdout().write_all(&text)?;
    let header = metadata(
        "certify",
        &[("points", cc.points.to_string()), ("nodes", cc.nodes.to_string())],
    );
    if let Some(path) = a.out.as_ref().or(cfg.out.as_ref()) {
        write_json(path, &header, &cert)?;
    }
    if let Some(path) = &a.report {
        write_with_header(path, &header, &text)?;
    }
    match cert.verdict {
        Verdict::Pass => Ok(()),
        Verdict::Failed => Err(Failure::CertificateFailed),
    }
}

fn cmd_render(a: &RenderArgs, cfg: &FileConfig) -> CmdResult {
    let flake = Snowflake {
        t: a.flake.t.or(cfg.t).or(Some(1.0)),
        ..a.flake.clone()
    };
    let params = snowflake_params(&flake, cfg)?;
    let depth = a.depth.or(cfg.depth).unwrap_or(3);
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let real = SnowflakeRealization::random(params, depth, seed)?;
    let mut sc = SceneConfig::figure(params.k);
    if a.full_boundary {
        sc.arc = None;
    }
    sc.trace = TraceSettings {
        tol: a.tol.or(cfg.tol).unwrap_or(sc.trace.tol),
        ..sc.trace
    };
    let scene = render_scene(&real, &sc)?;
    for c in &scene.curves {
        println!(
            "{}: {} points, length {:.3}{}",
            c.label,
            c.points.len(),
            c.length(),
            if c.complete { "" } else { " (partial)" }
        );
    }
    let mut fields = params_fields(&params);
    fields.extend([
        ("depth", depth.to_string()),
        ("seed", seed.to_string()),
        ("angles", format!("{:?}", real.angles)),
        ("tol", sc.trace.tol.to_string()),
    ]);
    let header = metadata("render", &fields);
    let path = a
        .out
        .clone()
        .or(cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("snowflake.svg"));
    let mut body = Vec::new();
    write_svg_annotated(&scene, Some(&header.join("; ")), &mut body)?;
    fs::write(&path, body).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
    if let Some(csv_path) = &a.csv {
        let mut body = Vec::new();
        write_csv(&scene, &mut body)?;
        write_with_header(csv_path, &header, &body)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> CmdResult {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return usage("--jobs must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let cfg = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Eigen(a) => cmd_eigen(a, &cfg),
        Command::Sweep(a) => cmd_sweep(a, &cfg),
        Command::Bound(a) => cmd_bound(a, &cfg),
        Command::Table(a) => cmd_table(a, &cfg),
        Command::Certify(a) => cmd_certify(a, &cfg),
        Command::Render(a) => cmd_render(a, &cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
        Err(Failure::CertificateFailed) => {
            eprintln!("certificate FAILED");
            ExitCode::from(EXIT_CERT_FAILED)
        }
    }
}
