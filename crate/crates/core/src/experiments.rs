//! Scripted studies with pass/fail verdicts.
//!
//! Each study returns a [`StudyOutcome`]: a numeric table, one verdict per
//! checked property, and optionally a JSON log. [`StudyOutcome::write`]
//! stores them under `<root>/<study>/<timestamp>/`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::{boundedness_stress, StressSetup};
use crate::error::{Error, Result};
use crate::geometry::{NodeField, NullGrid, Span};
use crate::io;
use crate::model::{charge, generate_data, massless_exact_on_grid, DataSource, DataSpec, InitialData, ModelParams, Profile};
use crate::norms::{check_inequalities, hs_norm, CheckerConfig, FunctionSample};
use crate::quadrature::log_log_slope;
use crate::scalar::C;
use crate::solver::{continue_globally_with, glue_solve, solve_local, ContinuationConfig, GlueMode, Scheme, SolverConfig};

pub const STUDIES: [&str; 8] = [
    "convergence",
    "conservation",
    "scaling",
    "reversal",
    "lipschitz",
    "rough_longtime",
    "boundedness",
    "inequalities",
];

/// Inputs of a study. Fields that a study does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySpec {
    pub name: String,
    pub data: DataSpec,
    pub m: f64,
    pub lambda: f64,
    /// Half-width of the data interval / diamond.
    pub radius: f64,
    /// Node counts per rung, coarse to fine; each rung halves the spacing.
    pub ladder: Vec<usize>,
    pub scheme: Scheme,
    pub tol: f64,
    pub max_iter: usize,
    pub t_end: f64,
    pub seed: u64,
    pub taus: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Regularity for `H^s` traces and inequality checks.
    pub s: f64,
    pub epsilon: f64,
    /// Spacing for the long-time run.
    pub spacing: f64,
    /// Time between recorded `H^s` values in the long-time run.
    pub trace_every: f64,
    pub widths: Vec<f64>,
}

impl StudySpec {
    /// Default configuration of a named study.
    pub fn preset(name: &str) -> Result<Self> {
        let gauss = DataSpec::new(Profile::gaussian(1.0, 0.3, -0.1), Profile::gaussian(0.8, 0.25, 0.2), 0);
        let mut spec = Self {
            name: name.to_string(),
            data: gauss,
            m: 0.0,
            lambda: 1.0,
            radius: 1.0,
            ladder: vec![129, 257, 513],
            scheme: Scheme::Marching,
            tol: 1e-12,
            max_iter: 200,
            t_end: 1.0,
            seed: 0,
            taus: vec![0.5, 2.0],
            deltas: vec![1e-2, 1e-3, 1e-4],
            s: 0.1,
            epsilon: 0.1,
            spacing: 1.0 / 512.0,
            trace_every: 0.5,
            widths: (1..=6).map(|k| 0.5f64.powi(k)).collect(),
        };
        match name {
            "convergence" => {}
            "conservation" => {
                spec.data = DataSpec::new(Profile::gaussian(0.25, 0.4, -0.2), Profile::gaussian(0.2, 0.35, 0.3), 0);
                spec.m = 1.0;
                spec.radius = 4.0;
                spec.ladder = vec![257, 513, 1025];
            }
            "scaling" => {
                spec.m = 1.0;
                spec.ladder = vec![65, 129, 257];
            }
            "reversal" => {
                spec.m = 0.5;
                spec.ladder = vec![65, 129, 257];
            }
            "lipschitz" => {
                spec.data = DataSpec::new(Profile::gaussian(0.2, 0.3, -0.1), Profile::gaussian(0.15, 0.25, 0.2), 0);
                spec.m = 0.1;
                spec.radius = 2.0;
                spec.ladder = vec![257];
            }
            "rough_longtime" => {
                spec.data = DataSpec::new(Profile::unit_box(0.0, 1.0), Profile::Zero, 0);
                spec.m = 1.0;
                spec.radius = 12.0;
                spec.spacing = 1.0 / 768.0;
            }
            "boundedness" => {
                let setup = StressSetup::default();
                spec.data = DataSpec::new(Profile::BoxFamily { width: 0.5, center: 0.0 }, setup.partner, 0);
                spec.m = 1.0;
                spec.radius = setup.radius;
                spec.ladder = vec![setup.n];
            }
            "inequalities" => {
                spec.s = 0.2;
                spec.seed = 7;
            }
            other => return Err(unknown_study(other)),
        }
        Ok(spec)
    }

    fn params(&self) -> Result<ModelParams<f64>> {
        ModelParams::new(self.m, self.lambda)
    }

    fn solver(&self, span: Span) -> SolverConfig<f64> {
        SolverConfig {
            scheme: self.scheme,
            tol: self.tol,
            max_iter: self.max_iter,
            span,
            ..SolverConfig::for_coupling(self.lambda)
        }
    }

    fn source(&self) -> Result<DataSource> {
        DataSpec {
            seed: self.seed,
            ..self.data.clone()
        }
        .source()
    }

    fn check(&self) -> Result<()> {
        self.params()?;
        self.solver(Span::Forward).validate()?;
        if !(self.radius > 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {}", self.radius)));
        }
        if self.ladder.iter().any(|&n| n < 5 || (n - 1) % 2 != 0) {
            return Err(Error::InvalidArgument(format!(
                "ladder entries must be odd and at least 5, got {:?}",
                self.ladder
            )));
        }
        if self.ladder.windows(2).any(|w| w[1] != 2 * w[0] - 1) {
            return Err(Error::InvalidArgument(format!(
                "each ladder rung must halve the spacing (n -> 2n - 1), got {:?}",
                self.ladder
            )));
        }
        Ok(())
    }
}

pub fn unknown_study(name: &str) -> Error {
    Error::InvalidArgument(format!("unknown study {name:?}; available: {}", STUDIES.join(", ")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    /// `PASS` or `FAIL`.
    pub status: String,
    pub pass: bool,
    pub value: f64,
    pub bound: f64,
    pub detail: String,
}

impl Verdict {
    fn new(criterion: &str, pass: bool, value: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self {
            criterion: criterion.to_string(),
            status: if pass { "PASS" } else { "FAIL" }.to_string(),
            pass,
            value,
            bound,
            detail: detail.into(),
        }
    }

    fn at_most(criterion: &str, value: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self::new(criterion, value <= bound, value, bound, detail)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyOutcome {
    pub study: String,
    pub spec: StudySpec,
    pub verdicts: Vec<Verdict>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub log: Option<serde_json::Value>,
}

#[derive(Serialize)]
struct VerdictFile<'a> {
    study: &'a str,
    pass: bool,
    verdicts: &'a [Verdict],
}

#[derive(Serialize)]
struct Manifest<'a> {
    study: &'a str,
    version: &'a str,
    spec: &'a StudySpec,
    table_sha256: String,
}

impl StudyOutcome {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn csv(&self) -> String {
        let header: Vec<&str> = self.header.iter().map(String::as_str).collect();
        io::table_csv(&header, &self.rows)
    }

    pub fn verdict_json(&self) -> Result<String> {
        io::to_json_pretty(&VerdictFile {
            study: &self.study,
            pass: self.pass(),
            verdicts: &self.verdicts,
        })
    }

    /// Write `<study>.csv`, `verdict.json`, `manifest.json` and, if present,
    /// `log.json` into a fresh timestamped directory under `root`.
    pub fn write(&self, root: &Path) -> Result<PathBuf> {
        let dir = io::timestamped_dir(root, &self.study)?;
        self.write_into(&dir)?;
        Ok(dir)
    }

    pub fn write_into(&self, dir: &Path) -> Result<()> {
        let csv = self.csv();
        io::write_text(&dir.join(format!("{}.csv", self.study)), &csv)?;
        io::write_text(&dir.join("verdict.json"), &self.verdict_json()?)?;
        io::write_json(
            &dir.join("manifest.json"),
            &Manifest {
                study: &self.study,
                version: env!("CARGO_PKG_VERSION"),
                spec: &self.spec,
                table_sha256: io::content_hash(csv.as_bytes()),
            },
        )?;
        if let Some(log) = &self.log {
            io::write_json(&dir.join("log.json"), log)?;
        }
        Ok(())
    }
}

/// Frozen regression constants: `bound = C h^2`, keyed by study and by the
/// `f/g` profile names of the data (falling back to `default`).
#[derive(Debug, Clone, Deserialize)]
pub struct Baselines {
    pub conservation: BTreeMap<String, f64>,
    pub reversal: BTreeMap<String, f64>,
}

impl Baselines {
    pub fn frozen() -> Self {
        serde_json::from_str(include_str!("../baselines/regression.json")).expect("baseline file is valid JSON")
    }

    pub fn lookup(table: &BTreeMap<String, f64>, data: &DataSpec) -> (f64, String) {
        let key = data_key(data);
        match table.get(&key) {
            Some(&c) => (c, key),
            None => (table.get("default").copied().unwrap_or(f64::NAN), "default".to_string()),
        }
    }
}

pub fn data_key(data: &DataSpec) -> String {
    format!("{}/{}", data.f.name(), data.g.name())
}

pub fn run_study(spec: &StudySpec) -> Result<StudyOutcome> {
    match spec.name.as_str() {
        "convergence" => convergence_study(spec),
        "conservation" => conservation_study(spec),
        "scaling" => scaling_study(spec),
        "reversal" => reversal_study(spec),
        "lipschitz" => lipschitz_study(spec),
        "rough_longtime" => rough_longtime_study(spec),
        "boundedness" => boundedness_study(spec),
        "inequalities" => inequalities_study(spec),
        other => Err(unknown_study(other)),
    }
}

fn outcome(spec: &StudySpec, header: &[&str], rows: Vec<Vec<f64>>, verdicts: Vec<Verdict>) -> StudyOutcome {
    StudyOutcome {
        study: spec.name.clone(),
        spec: spec.clone(),
        verdicts,
        header: header.iter().map(|s| s.to_string()).collect(),
        rows,
        log: None,
    }
}

fn pair_sup_diff(a: (&NodeField<f64>, &NodeField<f64>), b: (&NodeField<f64>, &NodeField<f64>), span: Span) -> f64 {
    a.0.sup_diff(b.0, span).max(a.1.sup_diff(b.1, span))
}

fn slope_verdict(criterion: &str, hs: &[f64], errs: &[f64]) -> (f64, Verdict) {
    let slope = log_log_slope(hs, errs);
    let pass = (1.7..=2.3).contains(&slope);
    (slope, Verdict::new(criterion, pass, slope, 2.0, "least-squares slope of log error against log h, pass in [1.7, 2.3]"))
}

/// Sup-norm error against the closed form (`m = 0`) or between successive
/// rungs (`m != 0`), and its fitted order.
pub fn convergence_study(spec: &StudySpec) -> Result<StudyOutcome> {
    spec.check()?;
    let params = spec.params()?;
    let src = spec.source()?;
    let config = spec.solver(Span::Forward);
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    let mut verdicts = Vec::new();
    if spec.m == 0.0 {
        if spec.ladder.len() < 3 {
            return Err(Error::InvalidArgument("convergence needs at least 3 rungs".into()));
        }
        for &n in &spec.ladder {
            let grid = NullGrid::new(spec.radius, n)?;
            let data = src.sample_on(&grid);
            let sol = solve_local(&data, &params, &grid, &config)?;
            let (psi, phi) = massless_exact_on_grid(&src, spec.lambda, &grid, Span::Forward)?;
            hs.push(grid.h);
            errs.push(pair_sup_diff((&sol.fields.psi, &sol.fields.phi), (&psi, &phi), Span::Forward));
        }
    } else {
        if spec.ladder.len() < 3 {
            return Err(Error::InvalidArgument("convergence needs at least 3 rungs".into()));
        }
        // Differences of successive rungs: one fewer than the rungs, so a
        // three-rung ladder is extended by one refinement to fit three points.
        let mut ladder = spec.ladder.clone();
        if ladder.len() == 3 {
            ladder.push(2 * ladder[2] - 1);
        }
        let mut prev: Option<(NullGrid<f64>, NodeField<f64>, NodeField<f64>)> = None;
        for &n in &ladder {
            let grid = NullGrid::new(spec.radius, n)?;
            let data = src.sample_on(&grid);
            let sol = solve_local(&data, &params, &grid, &config)?;
            if let Some((cg, cpsi, cphi)) = &prev {
                let mut e = 0.0f64;
                for j in 0..cg.n {
                    for i in j..cg.n {
                        let dp = (cpsi.get(i, j) - sol.fields.psi.get(2 * i, 2 * j)).norm();
                        let df = (cphi.get(i, j) - sol.fields.phi.get(2 * i, 2 * j)).norm();
                        e = e.max(dp).max(df);
                    }
                }
                hs.push(cg.h);
                errs.push(e);
            }
            prev = Some((grid, sol.fields.psi, sol.fields.phi));
        }
    }
    if spec.m == 0.0 && spec.lambda == 0.0 {
        let worst = errs.iter().copied().fold(0.0, f64::max);
        verdicts.push(Verdict::at_most("transport_exact", worst, 1e-13, "pure transport is exact on the lattice"));
    } else {
        verdicts.push(slope_verdict("order", &hs, &errs).1);
    }
    let rows = hs.iter().zip(&errs).map(|(&h, &e)| vec![h, e]).collect();
    Ok(outcome(spec, &["h", "error"], rows, verdicts))
}

/// Relative charge drift along the lab-frame slices of a single-diamond
/// solve up to `t_end`.
pub fn charge_drift(data: &InitialData<f64>, params: &ModelParams<f64>, t_end: f64, config: &SolverConfig<f64>) -> Result<(f64, Vec<(f64, f64)>)> {
    let sol = glue_solve(data, params, t_end, config, GlueMode::Single)?;
    let q0 = data.charge();
    let curve: Vec<(f64, f64)> = sol.slices.iter().map(|s| (s.t, charge(&s.psi, &s.phi, s.h))).collect();
    let drift = curve
        .iter()
        .map(|&(_, q)| if q0 > 0.0 { (q - q0).abs() / q0 } else { q.abs() })
        .fold(0.0, f64::max);
    Ok((drift, curve))
}

pub fn conservation_study(spec: &StudySpec) -> Result<StudyOutcome> {
    spec.check()?;
    let params = spec.params()?;
    let src = spec.source()?;
    let config = spec.solver(Span::Forward);
    let (c, key) = Baselines::lookup(&Baselines::frozen().conservation, &spec.data);
    let mut rows = Vec::new();
    let mut drifts = Vec::new();
    let mut verdicts = Vec::new();
    for &n in &spec.ladder {
        let grid = NullGrid::new(spec.radius, n)?;
        let data = src.sample_on(&grid);
        let (drift, curve) = charge_drift(&data, &params, spec.t_end, &config)?;
        let q0 = data.charge();
        for (t, q) in curve {
            rows.push(vec![grid.h, t, q, if q0 > 0.0 { (q - q0).abs() / q0 } else { q.abs() }]);
        }
        let bound = c * grid.h * grid.h;
        verdicts.push(Verdict::at_most(
            &format!("drift_n{n}"),
            drift,
            bound,
            format!("max relative drift <= C h^2 with frozen C = {c:e} ({key})"),
        ));
        drifts.push(drift);
    }
    for (k, w) in drifts.windows(2).enumerate() {
        verdicts.push(Verdict::new(
            &format!("order_{}_{}", spec.ladder[k], spec.ladder[k + 1]),
            w[1] <= w[0] / 3.0 || w[0] < 1e-14,
            w[1],
            w[0] / 3.0,
            "halving h must cut the drift by at least 3",
        ));
    }
    Ok(outcome(spec, &["h", "t", "charge", "relative_drift"], rows, verdicts))
}

/// Compare `tau^(1/2) psi(tau t, tau x)` against the solve of the rescaled
/// problem (`m -> tau m`) at the same spacing, on common nodes.
pub fn scaling_study(spec: &StudySpec) -> Result<StudyOutcome> {
    spec.check()?;
    let params = spec.params()?;
    let src = spec.source()?;
    let config = spec.solver(Span::Forward);
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for &tau in &spec.taus {
        let inv = 1.0 / tau;
        let (up, down) = (tau.round(), inv.round());
        let ok = (tau == up && up >= 1.0) || (inv == down && down >= 1.0);
        if !ok || !(tau > 0.0) {
            return Err(Error::InvalidArgument(format!("tau must be an integer or its reciprocal, got {tau}")));
        }
        let scaled_params = ModelParams::new(tau * spec.m, spec.lambda)?;
        let scaled_src = src.scaled(tau);
        let mut hs = Vec::new();
        let mut errs = Vec::new();
        for &n in &spec.ladder {
            let grid = NullGrid::new(spec.radius, n)?;
            let sol = solve_local(&src.sample_on(&grid), &params, &grid, &config)?;
            let nb = ((n - 1) as f64 / tau).round() as usize + 1;
            let sgrid = NullGrid::new(spec.radius / tau, nb)?;
            let ssol = solve_local(&scaled_src.sample_on(&sgrid), &scaled_params, &sgrid, &config)?;
            // Node ia of the original run sits at tau * alpha of node ia / tau.
            let map = |ia: usize| -> Option<usize> {
                let ib = ia as f64 / tau;
                (ib.fract() == 0.0).then_some(ib as usize)
            };
            let amp = tau.sqrt();
            let mut e = 0.0f64;
            for ja in 0..n {
                for ia in ja..n {
                    if let (Some(ib), Some(jb)) = (map(ia), map(ja)) {
                        let dp = (sol.fields.psi.get(ia, ja) * amp - ssol.fields.psi.get(ib, jb)).norm();
                        let df = (sol.fields.phi.get(ia, ja) * amp - ssol.fields.phi.get(ib, jb)).norm();
                        e = e.max(dp).max(df);
                    }
                }
            }
            rows.push(vec![tau, grid.h, e]);
            hs.push(grid.h);
            errs.push(e);
        }
        let worst = errs.iter().copied().fold(0.0, f64::max);
        if worst <= 1e-13 {
            verdicts.push(Verdict::at_most(&format!("tau_{tau}"), worst, 1e-13, "exact agreement"));
        } else {
            let (_, mut v) = slope_verdict(&format!("tau_{tau}"), &hs, &errs);
            v.detail = format!("{}; largest difference {worst:e}", v.detail);
            verdicts.push(v);
        }
    }
    Ok(outcome(spec, &["tau", "h", "sup_difference"], rows, verdicts))
}

/// Backward half of a full-span solve against the forward solve of the
/// reversed problem `(g, f, -m, -lambda)`.
pub fn reversal_study(spec: &StudySpec) -> Result<StudyOutcome> {
    spec.check()?;
    let params = spec.params()?;
    let src = spec.source()?;
    let (c, key) = Baselines::lookup(&Baselines::frozen().reversal, &spec.data);
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for &n in &spec.ladder {
        let grid = NullGrid::new(spec.radius, n)?;
        let data = src.sample_on(&grid);
        let full = solve_local(&data, &params, &grid, &spec.solver(Span::Full))?;
        let rev = solve_local(&data.swapped(), &params.reversed(), &grid, &spec.solver(Span::Forward))?;
        let mut e = 0.0f64;
        for j in 0..n {
            for i in j..n {
                // psi'(t, x) = phi(-t, x): (alpha, beta) -> (beta, alpha).
                let dp = (rev.fields.psi.get(i, j) - full.fields.phi.get(j, i)).norm();
                let df = (rev.fields.phi.get(i, j) - full.fields.psi.get(j, i)).norm();
                e = e.max(dp).max(df);
            }
        }
        rows.push(vec![grid.h, e]);
        let bound = (c * grid.h * grid.h).max(1e-13);
        verdicts.push(Verdict::at_most(
            &format!("reversal_n{n}"),
            e,
            bound,
            format!("sup difference <= max(C h^2, 1e-13) with frozen C = {c:e} ({key})"),
        ));
    }
    Ok(outcome(spec, &["h", "sup_difference"], rows, verdicts))
}

/// Unit-`L^2` perturbation direction: two random Gaussian bumps per
/// component, with phases, drawn from `seed`.
fn perturbation(seed: u64, data: &InitialData<f64>) -> (Vec<C<f64>>, Vec<C<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1f5e_d00d);
    let span = data.h * (data.len() - 1) as f64;
    let mut make = || {
        let bumps: Vec<(f64, f64, f64, f64)> = (0..2)
            .map(|_| {
                (
                    data.x0 + span * rng.gen_range(0.35..0.65),
                    span * rng.gen_range(0.03..0.08),
                    rng.gen_range(0.5..1.0),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        (0..data.len())
            .map(|k| {
                let x = data.x(k);
                bumps
                    .iter()
                    .map(|&(c, w, a, th)| C::from_polar(a * (-((x - c) / w).powi(2)).exp(), th))
                    .sum::<C<f64>>()
            })
            .collect::<Vec<_>>()
    };
    let (ef, eg) = (make(), make());
    let norm = charge(&ef, &eg, data.h).sqrt();
    (ef.iter().map(|v| v / norm).collect(), eg.iter().map(|v| v / norm).collect())
}

pub fn lipschitz_study(spec: &StudySpec) -> Result<StudyOutcome> {
    spec.check()?;
    let params = spec.params()?;
    let src = spec.source()?;
    let config = spec.solver(Span::Forward);
    let n = *spec.ladder.last().ok_or_else(|| Error::InvalidArgument("empty ladder".into()))?;
    let grid = NullGrid::new(spec.radius, n)?;
    let data = src.sample_on(&grid);
    let base = glue_solve(&data, &params, spec.t_end, &config, GlueMode::Single)?;
    let (ef, eg) = perturbation(spec.seed, &data);
    let size = data.charge().sqrt();
    let mut rows = Vec::new();
    let mut ratios = Vec::new();
    for &d in &spec.deltas {
        if d == 0.0 {
            continue;
        }
        let delta = d * size;
        let mut pert = data.clone();
        for k in 0..pert.len() {
            pert.f[k] += ef[k] * delta;
            pert.g[k] += eg[k] * delta;
        }
        let dd: (Vec<_>, Vec<_>) = (
            pert.f.iter().zip(&data.f).map(|(a, b)| a - b).collect(),
            pert.g.iter().zip(&data.g).map(|(a, b)| a - b).collect(),
        );
        let data_diff = charge(&dd.0, &dd.1, data.h).sqrt();
        let sol = glue_solve(&pert, &params, spec.t_end, &config, GlueMode::Single)?;
        let sol_diff = sol
            .slices
            .iter()
            .zip(&base.slices)
            .map(|(a, b)| {
                let dp: Vec<_> = a.psi.iter().zip(&b.psi).map(|(x, y)| x - y).collect();
                let df: Vec<_> = a.phi.iter().zip(&b.phi).map(|(x, y)| x - y).collect();
                charge(&dp, &df, a.h).sqrt()
            })
            .fold(0.0, f64::max);
        let ratio = sol_diff / data_diff;
        rows.push(vec![d, data_diff, sol_diff, ratio]);
        ratios.push(ratio);
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    let spread = hi / lo;
    let verdicts = vec![Verdict::new(
        "stable_ratio",
        ratios.len() >= 2 && spread < 2.0,
        spread,
        2.0,
        format!("measured Lipschitz ratios in [{lo:.6}, {hi:.6}]"),
    )];
    Ok(outcome(spec, &["delta", "data_l2_difference", "solution_linf_l2_difference", "ratio"], rows, verdicts))
}

fn profile_width(p: &Profile) -> f64 {
    match *p {
        Profile::Zero => 0.0,
        Profile::Gaussian { width, .. } => width,
        Profile::Box { a, b, .. } => b - a,
        Profile::BoxFamily { width, .. } => width,
        Profile::SobolevRandom { a, b, .. } => b - a,
    }
}

/// Continue to `T = 10 x` the data width while recording the `H^s` norm of
/// the slices every `trace_every`.
pub fn rough_longtime_study(spec: &StudySpec) -> Result<StudyOutcome> {
    let params = spec.params()?;
    let width = profile_width(&spec.data.f).max(profile_width(&spec.data.g));
    let t_target = if width > 0.0 { 10.0 * width } else { spec.t_end };
    let h = spec.spacing;
    let count = (2.0 * spec.radius / h).round() as usize + 1;
    let data: InitialData<f64> = generate_data(
        &DataSpec {
            seed: spec.seed,
            ..spec.data.clone()
        },
        -spec.radius,
        h,
        count,
    )?;
    let solver = spec.solver(Span::Forward);
    let config = ContinuationConfig {
        epsilon: spec.epsilon,
        ..ContinuationConfig::new(solver)
    };
    let s = spec.s;
    let mut trace: Vec<Vec<f64>> = Vec::new();
    let mut trace_err: Option<Error> = None;
    let mut next = 0.0;
    let (log, end) = continue_globally_with(&data, &params, t_target, &config, |slice| {
        if slice.t + 1e-12 < next || trace_err.is_some() {
            return;
        }
        let eval = || -> Result<f64> {
            let a = hs_norm(&FunctionSample::psi_of(slice)?, s)?;
            let b = hs_norm(&FunctionSample::phi_of(slice)?, s)?;
            Ok((a * a + b * b).sqrt())
        };
        match eval() {
            Ok(v) => trace.push(vec![slice.t, v, charge(&slice.psi, &slice.phi, slice.h)]),
            Err(e) => trace_err = Some(e),
        }
        while next <= slice.t + 1e-12 {
            next += spec.trace_every;
        }
    });
    if let Some(e) = trace_err {
        return Err(e);
    }
    let mut verdicts = Vec::new();
    verdicts.push(Verdict::new(
        "reached_target",
        end.is_ok(),
        log.final_time,
        t_target,
        log.abort.clone().unwrap_or_else(|| "no abort".into()),
    ));
    let min_r = log.min_radius().unwrap_or(0.0);
    verdicts.push(Verdict::new(
        "min_step_radius",
        min_r > 4.0 * h,
        min_r,
        4.0 * h,
        "smallest step radius must exceed 4h",
    ));
    let vals: Vec<f64> = trace.iter().map(|r| r[1]).collect();
    let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(l, u), &v| (l.min(v), u.max(v)));
    let spread = if lo > 0.0 { hi / lo } else if hi == 0.0 { 1.0 } else { f64::INFINITY };
    verdicts.push(Verdict::new(
        "bounded_hs_trace",
        spread < 100.0,
        spread,
        100.0,
        format!("max/min of the H^{s} trace over {} samples", vals.len()),
    ));
    let mut out = outcome(spec, &["t", "hs_norm", "charge"], trace, verdicts);
    out.log = Some(serde_json::to_value(&log)?);
    Ok(out)
}

pub fn boundedness_study(spec: &StudySpec) -> Result<StudyOutcome> {
    let params = spec.params()?;
    let setup = StressSetup {
        radius: spec.radius,
        n: *spec.ladder.last().ok_or_else(|| Error::InvalidArgument("empty ladder".into()))?,
        partner: spec.data.g.clone(),
    };
    let rows = boundedness_stress(&params, &spec.widths, &setup, &spec.solver(Span::Forward))?;
    let (lo, hi) = rows.iter().fold((f64::INFINITY, 0.0f64), |(l, u), r| (l.min(r.ratio), u.max(r.ratio)));
    let verdicts = vec![Verdict::new(
        "uniform_bound",
        hi / lo < 2.0,
        hi / lo,
        2.0,
        "max over widths of (max_t ||psi_N||_inf / charge) divided by the min",
    )];
    let table = rows.iter().map(|r| vec![r.width, r.sup_f, r.max_psi_n, r.ratio]).collect();
    Ok(outcome(spec, &["w", "sup_f", "max_psi_n", "ratio"], table, verdicts))
}

pub fn inequalities_study(spec: &StudySpec) -> Result<StudyOutcome> {
    let report = check_inequalities(&CheckerConfig {
        s: spec.s,
        seed: spec.seed,
        ..CheckerConfig::default()
    })?;
    let verdicts = report
        .verdicts
        .iter()
        .map(|v| {
            Verdict::new(
                &v.inequality,
                v.pass,
                v.drift,
                2.0,
                format!("max ratio {:.6} (coarse) vs {:.6} (doubled family and resolution)", v.coarse, v.fine),
            )
        })
        .collect();
    let names = crate::norms::INEQUALITIES;
    let rows = report
        .rows
        .iter()
        .map(|r| {
            let idx = names.iter().position(|n| *n == r.inequality).unwrap_or(0) as f64;
            vec![idx, r.family_size as f64, r.max_ratio, r.spacing]
        })
        .collect();
    Ok(outcome(spec, &["inequality", "family_size", "max_ratio", "resolution"], rows, verdicts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_spec(name: &str) -> StudySpec {
        StudySpec {
            data: DataSpec::zero(),
            ladder: vec![33, 65, 129],
            ..StudySpec::preset(name).unwrap()
        }
    }

    #[test]
    fn presets_exist_and_unknown_is_rejected() {
        for name in STUDIES {
            assert_eq!(StudySpec::preset(name).unwrap().name, name);
        }
        let err = StudySpec::preset("nosuch").unwrap_err().to_string();
        assert!(err.contains("convergence") && err.contains("rough_longtime"));
    }

    #[test]
    fn pure_transport_is_exact() {
        let spec = StudySpec {
            lambda: 0.0,
            ladder: vec![33, 65, 129],
            ..StudySpec::preset("convergence").unwrap()
        };
        let out = convergence_study(&spec).unwrap();
        assert!(out.pass(), "{:?}", out.verdicts);
        assert!(out.rows.iter().all(|r| r[1] <= 1e-13));
    }

    #[test]
    fn zero_data_studies() {
        let out = conservation_study(&StudySpec { radius: 1.0, t_end: 0.5, ..zero_spec("conservation") }).unwrap();
        assert!(out.rows.iter().all(|r| r[3] == 0.0));
        let out = reversal_study(&zero_spec("reversal")).unwrap();
        assert!(out.pass());
        assert!(out.rows.iter().all(|r| r[1] == 0.0));
    }

    #[test]
    fn unit_scaling_is_identity() {
        let spec = StudySpec {
            taus: vec![1.0],
            ladder: vec![33, 65, 129],
            ..StudySpec::preset("scaling").unwrap()
        };
        let out = scaling_study(&spec).unwrap();
        assert!(out.rows.iter().all(|r| r[2] == 0.0));
        assert!(out.pass());
    }

    #[test]
    fn massless_free_scaling_and_reversal_are_exact() {
        let base = StudySpec {
            m: 0.0,
            lambda: 0.0,
            ladder: vec![33, 65, 129],
            ..StudySpec::preset("scaling").unwrap()
        };
        let out = scaling_study(&base).unwrap();
        assert!(out.rows.iter().all(|r| r[2] <= 1e-13), "{:?}", out.rows);
        let out = reversal_study(&StudySpec { name: "reversal".into(), ..base }).unwrap();
        assert!(out.rows.iter().all(|r| r[1] <= 1e-13));
    }

    #[test]
    fn transport_lipschitz_ratio_is_one() {
        let spec = StudySpec {
            m: 0.0,
            lambda: 0.0,
            ladder: vec![129],
            ..StudySpec::preset("lipschitz").unwrap()
        };
        let out = lipschitz_study(&spec).unwrap();
        // Odd slices sit half a cell off the data nodes, so the discrete
        // L^2 norms agree only to O(h^2).
        for r in &out.rows {
            assert!((r[3] - 1.0).abs() < 1e-5, "{r:?}");
        }
    }

    #[test]
    fn zero_data_longtime_passes() {
        let spec = StudySpec {
            data: DataSpec::zero(),
            radius: 2.0,
            spacing: 1.0 / 128.0,
            t_end: 1.0,
            ..StudySpec::preset("rough_longtime").unwrap()
        };
        let out = rough_longtime_study(&spec).unwrap();
        assert!(out.pass(), "{:?}", out.verdicts);
    }

    #[test]
    fn ladder_validation() {
        let bad = StudySpec {
            ladder: vec![33, 64],
            ..StudySpec::preset("convergence").unwrap()
        };
        assert!(convergence_study(&bad).is_err());
        let bad = StudySpec {
            ladder: vec![33, 65],
            ..StudySpec::preset("convergence").unwrap()
        };
        assert!(convergence_study(&bad).is_err());
        let short = StudySpec {
            m: 1.0,
            ladder: vec![17, 33, 65],
            ..StudySpec::preset("convergence").unwrap()
        };
        assert_eq!(convergence_study(&short).unwrap().rows.len(), 3);
    }

    #[test]
    fn outcome_files() {
        let out = reversal_study(&zero_spec("reversal")).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let dir = out.write(tmp.path()).unwrap();
        for f in ["reversal.csv", "verdict.json", "manifest.json"] {
            assert!(dir.join(f).is_file(), "{f}");
        }
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("verdict.json")).unwrap()).unwrap();
        assert_eq!(v["pass"], true);
    }
}
