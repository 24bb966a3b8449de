use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thirring::decomposition::{delgado_split, verify_mass1};
use thirring::experiments::{run_study, unknown_study, StudySpec, STUDIES};
use thirring::geometry::{NullGrid, Span};
use thirring::io;
use thirring::model::{generate_on_grid, DataSpec, InitialData, ModelParams, Profile};
use thirring::norms::NormReport;
use thirring::solver::{solve_local, LocalSolution, Scheme, SolverConfig};

use crate::config::{ConfigError, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Core(thirring::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::Core(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => e.fmt(f),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<thirring::Error> for CliError {
    fn from(e: thirring::Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Serialize)]
struct Manifest<'a, E: Serialize> {
    command: &'a str,
    version: &'a str,
    config: BTreeMap<String, String>,
    files: BTreeMap<String, String>,
    #[serde(flatten)]
    extra: E,
}

/// Write `files` and a manifest with their hashes into a fresh directory.
fn emit<E: Serialize>(cfg: &RunConfig, command: &str, files: &[(&str, String)], extra: E) -> Result<PathBuf> {
    let root = PathBuf::from(cfg.str("out").unwrap_or("results"));
    let dir = io::timestamped_dir(&root, command)?;
    let mut hashes = BTreeMap::new();
    for (name, text) in files {
        io::write_text(&dir.join(name), text)?;
        hashes.insert(name.to_string(), io::content_hash(text.as_bytes()));
    }
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.resolved(),
        files: hashes,
        extra,
    };
    io::write_json(&dir.join("manifest.json"), &manifest)?;
    println!("{}", dir.display());
    Ok(dir)
}

fn profile_f(cfg: &RunConfig, kind: &str) -> Result<Profile> {
    Ok(match kind {
        "zero" => Profile::Zero,
        "gaussian" => Profile::Gaussian {
            amplitude: cfg.f64_or("f_amplitude", 1.0)?,
            width: cfg.f64_or("f_width", 0.3)?,
            center: cfg.f64_or("f_center", -0.1)?,
            wavenumber: cfg.f64_or("f_wavenumber", 0.0)?,
        },
        "box" => Profile::Box {
            height: cfg.f64_or("box_height", 1.0)?,
            a: cfg.f64_or("box_a", -0.5)?,
            b: cfg.f64_or("box_b", 0.5)?,
        },
        "box_family" => Profile::BoxFamily {
            width: cfg.f64_or("box_width", 0.25)?,
            center: cfg.f64_or("f_center", 0.0)?,
        },
        "sobolev_random" => Profile::SobolevRandom {
            s: cfg.f64_or("sobolev_s", 0.3)?,
            delta: cfg.f64_or("sobolev_delta", 0.1)?,
            a: cfg.f64_or("box_a", -0.5)?,
            b: cfg.f64_or("box_b", 0.5)?,
            modes: cfg.usize("sobolev_modes")?.unwrap_or(48),
            amplitude: cfg.f64_or("f_amplitude", 1.0)?,
        },
        other => {
            return Err(ConfigError(format!(
                "unknown data {other:?}; expected zero, gaussian, box, box_family, sobolev_random or file"
            ))
            .into())
        }
    })
}

fn profile_g(cfg: &RunConfig, kind: &str) -> Result<Profile> {
    Ok(match kind {
        "gaussian" => Profile::Gaussian {
            amplitude: cfg.f64_or("g_amplitude", 0.8)?,
            width: cfg.f64_or("g_width", 0.25)?,
            center: cfg.f64_or("g_center", 0.2)?,
            wavenumber: cfg.f64_or("g_wavenumber", 0.0)?,
        },
        _ => Profile::Zero,
    })
}

fn data_spec(cfg: &RunConfig) -> Result<DataSpec> {
    let kind = cfg.require("data")?;
    let spec = DataSpec::new(
        profile_f(cfg, kind)?,
        profile_g(cfg, kind)?,
        cfg.u64("seed")?.unwrap_or(0),
    );
    spec.source()?;
    Ok(spec)
}

fn params(cfg: &RunConfig) -> Result<ModelParams<f64>> {
    Ok(ModelParams::new(cfg.required_f64("m")?, cfg.required_f64("lambda")?)?)
}

fn solver_config(cfg: &mut RunConfig, lambda: f64) -> Result<SolverConfig<f64>> {
    let mut sc = SolverConfig::for_coupling(lambda);
    if let Some(s) = cfg.str("scheme") {
        sc.scheme = s.parse::<Scheme>()?;
    }
    sc.tol = cfg.f64_or("tol", sc.tol)?;
    sc.max_iter = cfg.usize("max_iter")?.unwrap_or(sc.max_iter);
    sc.epsilon_small = cfg.f64_or("epsilon", sc.epsilon_small)?;
    sc.span = match cfg.str("span") {
        None | Some("forward") => Span::Forward,
        Some("full") => Span::Full,
        Some(other) => return Err(ConfigError(format!("span must be forward or full, got {other:?}")).into()),
    };
    sc.validate()?;
    cfg.default_to("scheme", format!("{:?}", sc.scheme).to_lowercase());
    cfg.default_to("tol", sc.tol);
    cfg.default_to("max_iter", sc.max_iter);
    cfg.default_to("epsilon", sc.epsilon_small);
    cfg.default_to("span", format!("{:?}", sc.span).to_lowercase());
    Ok(sc)
}

fn grid_and_data(cfg: &mut RunConfig) -> Result<(NullGrid<f64>, InitialData<f64>)> {
    if cfg.require("data")? == "file" {
        let path = cfg.require("file")?.to_string();
        let text = std::fs::read_to_string(&path)
            .map_err(|e| ConfigError(format!("cannot read data file {path}: {e}")))?;
        let data = io::parse_initial_data(&text)?;
        let n = data.len();
        let radius = data.h * (n - 1) as f64 / 2.0;
        let grid = NullGrid::centered(data.x0 + radius, radius, n)?;
        if let Some(given) = cfg.usize("n")? {
            if given != n {
                return Err(ConfigError(format!("n = {given} but {path} has {n} samples")).into());
            }
        }
        cfg.default_to("n", n);
        cfg.default_to("R", radius);
        cfg.set("file", &path, "file").expect("known key");
        return Ok((grid, data));
    }
    let grid = NullGrid::centered(cfg.f64_or("center", 0.0)?, cfg.required_f64("R")?, cfg.required_usize("n")?)?;
    let data = generate_on_grid(&data_spec(cfg)?, &grid)?;
    Ok((grid, data))
}

#[derive(Serialize)]
struct SolveSummary {
    scheme: Scheme,
    iterations: usize,
    converged: bool,
    iteration_differences: Vec<f64>,
    charge: f64,
    warnings: Vec<String>,
}

fn run_solve(cfg: &mut RunConfig) -> Result<(NullGrid<f64>, InitialData<f64>, ModelParams<f64>, SolverConfig<f64>, LocalSolution<f64>)> {
    let p = params(cfg)?;
    let (grid, data) = grid_and_data(cfg)?;
    let sc = solver_config(cfg, p.lambda)?;
    let sol = solve_local(&data, &p, &grid, &sc)?;
    Ok((grid, data, p, sc, sol))
}

fn summary(sc: &SolverConfig<f64>, data: &InitialData<f64>, sol: &LocalSolution<f64>) -> SolveSummary {
    SolveSummary {
        scheme: sc.scheme,
        iterations: sol.iterations(),
        converged: sol.converged,
        iteration_differences: sol.diagnostics.clone(),
        charge: data.charge(),
        warnings: sol.warnings.clone(),
    }
}

pub fn solve(mut cfg: RunConfig) -> Result<u8> {
    let (grid, data, _, sc, sol) = run_solve(&mut cfg)?;
    let files = [
        ("data.csv", io::initial_data_csv(&data)),
        ("fields.csv", io::solution_csv(&grid, sc.span, &sol.fields.psi, &sol.fields.phi)),
        ("slices.csv", io::slices_csv(&sol.fields.forward_slices(&grid))),
    ];
    emit(&cfg, "solve", &files, summary(&sc, &data, &sol))?;
    Ok(0)
}

#[derive(Serialize)]
struct DecomposeSummary {
    #[serde(flatten)]
    solve: SolveSummary,
    residual_sum: f64,
    mass1_residual: f64,
    mass1_l2: f64,
    linf_n: f64,
    modulus_defect: f64,
}

pub fn decompose(mut cfg: RunConfig) -> Result<u8> {
    let (grid, data, p, sc, sol) = run_solve(&mut cfg)?;
    let split = delgado_split(&sol.fields, &data, &p, &grid);
    let mass1 = verify_mass1(&split, &sol.fields, &p, &grid);
    let files = [("decomposition.csv", io::decomposition_csv(&grid, &split))];
    let extra = DecomposeSummary {
        solve: summary(&sc, &data, &sol),
        residual_sum: split.residual_sum,
        mass1_residual: split.mass1_residual,
        mass1_l2: mass1.l2,
        linf_n: split.linf_n,
        modulus_defect: split.modulus_defect,
    };
    emit(&cfg, "decompose", &files, extra)?;
    Ok(0)
}

pub fn norms(mut cfg: RunConfig) -> Result<u8> {
    let path = cfg.require("input")?.to_string();
    let s = cfg.required_f64("s")?;
    let component = cfg.str("component").unwrap_or("psi").to_string();
    cfg.default_to("component", &component);
    let text = std::fs::read_to_string(&path).map_err(|e| ConfigError(format!("cannot read {path}: {e}")))?;
    let sample = io::parse_sample(&text, &component, cfg.f64("time")?)?;
    let report = NormReport::of(&sample, s)?;
    let json = io::to_json_pretty(&report)?;
    print!("{json}");
    if cfg.has("out") {
        emit(&cfg, "norms", &[("norms.json", json)], ())?;
    }
    Ok(0)
}

fn study_spec(name: &str, cfg: &RunConfig) -> Result<StudySpec> {
    if !STUDIES.contains(&name) {
        return Err(ConfigError(unknown_study(name).to_string()).into());
    }
    let mut spec = StudySpec::preset(name)?;
    if cfg.has("data") {
        if cfg.str("data") == Some("file") {
            return Err(ConfigError("studies take analytic data, not data = file".into()).into());
        }
        spec.data = data_spec(cfg)?;
    }
    if let Some(v) = cfg.f64("m")? {
        spec.m = v;
    }
    if let Some(v) = cfg.f64("lambda")? {
        spec.lambda = v;
    }
    if let Some(v) = cfg.f64("R")? {
        spec.radius = v;
    }
    if let Some(v) = cfg.usize_list("ladder")? {
        spec.ladder = v;
    }
    if let Some(n) = cfg.usize("n")? {
        spec.ladder = vec![n];
    }
    if let Some(s) = cfg.str("scheme") {
        spec.scheme = s.parse()?;
    }
    if let Some(v) = cfg.f64("tol")? {
        spec.tol = v;
    }
    if let Some(v) = cfg.usize("max_iter")? {
        spec.max_iter = v;
    }
    if let Some(v) = cfg.f64("t_end")? {
        spec.t_end = v;
    }
    if let Some(v) = cfg.u64("seed")? {
        spec.seed = v;
    }
    if let Some(v) = cfg.f64_list("taus")? {
        spec.taus = v;
    }
    if let Some(v) = cfg.f64_list("deltas")? {
        spec.deltas = v;
    }
    if let Some(v) = cfg.f64("s")? {
        spec.s = v;
    }
    if let Some(v) = cfg.f64("epsilon")? {
        spec.epsilon = v;
    }
    if let Some(v) = cfg.f64("spacing")? {
        spec.spacing = v;
    }
    if let Some(v) = cfg.f64("trace_every")? {
        spec.trace_every = v;
    }
    if let Some(v) = cfg.f64_list("widths")? {
        spec.widths = v;
    }
    Ok(spec)
}

pub fn study(name: &str, cfg: RunConfig) -> Result<u8> {
    let spec = study_spec(name, &cfg)?;
    let outcome = run_study(&spec)?;
    let root = PathBuf::from(cfg.str("out").unwrap_or("results"));
    let dir = outcome.write(Path::new(&root))?;
    for v in &outcome.verdicts {
        println!("{} {}: {:.6e} (bound {:.6e}) {}", v.status, v.criterion, v.value, v.bound, v.detail);
    }
    println!("{}", dir.display());
    Ok(if outcome.pass() { 0 } else { 2 })
}
