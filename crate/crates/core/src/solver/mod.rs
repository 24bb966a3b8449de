//! Local solutions on a diamond by Picard iteration of the characteristic
//! integral equations
//!
//! ```text
//! psi*(alpha, beta) = f(beta) + 1/2 int_beta^alpha F*(gamma, beta) dgamma
//! phi*(alpha, beta) = g(alpha) - 1/2 int_alpha^beta G*(alpha, gamma) dgamma
//! ```
//!
//! (`F`, `G` the right-hand sides), a cell-by-cell marching solver for the
//! same discrete equations, gluing of overlapping diamonds, and the global
//! continuation loop.
//!
//! All integrals use the composite trapezoid rule on the lattice, so the
//! Picard fixed point and the marching solution satisfy the same algebraic
//! system.

mod continuation;
mod glue;
mod marching;

pub use continuation::{
    concentration_radius, continue_globally, continue_globally_with, ConcentrationRadius,
    ContinuationConfig, ContinuationLog, ContinuationStep,
};
pub use glue::{glue_solve, glue_solve_backward, GlueMode, LabSolution};
pub use marching::solve_marching;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{NullGrid, Span};
use crate::model::{rhs_phi, rhs_psi, InitialData, ModelParams, SpinorPair};
use crate::scalar::{Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Picard,
    Marching,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "picard" => Ok(Scheme::Picard),
            "marching" => Ok(Scheme::Marching),
            other => Err(Error::Unknown {
                what: "scheme",
                name: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    pub scheme: Scheme,
    /// Sup-norm tolerance on successive Picard iterates.
    pub tol: T,
    pub max_iter: usize,
    /// Smallness threshold on local data; only used for warnings and for the
    /// continuation window test.
    pub epsilon_small: T,
    pub span: Span,
}

impl<T: Real> SolverConfig<T> {
    /// Defaults with `epsilon_small = 0.1 / max(1, |lambda|)`.
    pub fn for_coupling(lambda: T) -> Self {
        Self {
            scheme: Scheme::Picard,
            tol: T::lit(1e-12),
            max_iter: 200,
            epsilon_small: T::lit(0.1) / T::one().max(lambda.abs()),
            span: Span::Forward,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.epsilon_small > T::zero() && self.epsilon_small < T::one()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon_small must lie in (0, 1), got {}",
                self.epsilon_small
            )));
        }
        Ok(())
    }
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self::for_coupling(T::one())
    }
}

/// A solution on one diamond together with its iteration history.
#[derive(Debug, Clone)]
pub struct LocalSolution<T> {
    pub fields: SpinorPair<T>,
    pub grid: NullGrid<T>,
    /// Sup-norm difference between successive iterates (empty for marching).
    pub diagnostics: Vec<T>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl<T: Real> LocalSolution<T> {
    pub fn iterations(&self) -> usize {
        self.diagnostics.len()
    }

    /// Successive ratios `d_{k+1} / d_k` of the iteration differences.
    pub fn contraction_ratios(&self) -> Vec<T> {
        self.diagnostics
            .windows(2)
            .filter(|w| w[0] > T::zero())
            .map(|w| w[1] / w[0])
            .collect()
    }
}

/// One application of the integral map to `fields`.
pub fn picard_step<T: Real>(
    fields: &SpinorPair<T>,
    data: &InitialData<T>,
    params: &ModelParams<T>,
    grid: &NullGrid<T>,
) -> SpinorPair<T> {
    let n = grid.n;
    let span = fields.span;
    let c = grid.h * T::lit(0.25);
    let mut out = SpinorPair::zeros(n, span);

    // psi along beta-rows: d psi*/d alpha = F*/2, starting on the diagonal.
    out.psi
        .values
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(j, row)| {
            let rhs = |i: usize| rhs_psi(fields.phi.get(i, j), fields.psi.get(i, j), params);
            row[j] = data.f[j];
            let mut prev = rhs(j);
            for i in j + 1..n {
                let cur = rhs(i);
                row[i] = row[i - 1] + (prev + cur) * c;
                prev = cur;
            }
            if span == Span::Full {
                let mut prev = rhs(j);
                for i in (0..j).rev() {
                    let cur = rhs(i);
                    row[i] = row[i + 1] - (prev + cur) * c;
                    prev = cur;
                }
            }
        });

    // phi along alpha-columns: d phi*/d beta = -G*/2.
    let columns: Vec<Vec<C<T>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let rhs = |j: usize| rhs_phi(fields.psi.get(i, j), fields.phi.get(i, j), params);
            let mut col = vec![C::new(T::zero(), T::zero()); n];
            col[i] = data.g[i];
            let mut prev = rhs(i);
            for j in (0..i).rev() {
                let cur = rhs(j);
                col[j] = col[j + 1] + (prev + cur) * c;
                prev = cur;
            }
            if span == Span::Full {
                let mut prev = rhs(i);
                for j in i + 1..n {
                    let cur = rhs(j);
                    col[j] = col[j - 1] - (prev + cur) * c;
                    prev = cur;
                }
            }
            col
        })
        .collect();
    for (i, col) in columns.into_iter().enumerate() {
        for (j, v) in col.into_iter().enumerate() {
            out.phi.set(i, j, v);
        }
    }
    out
}

/// Hypotheses of the local existence theorem that the discrete problem
/// does not strictly need; reported, never enforced.
fn smallness_warnings<T: Real>(
    data: &InitialData<T>,
    params: &ModelParams<T>,
    grid: &NullGrid<T>,
    config: &SolverConfig<T>,
) -> Vec<String> {
    let mut warnings = Vec::new();
    if params.m != T::zero() {
        let cap = T::one() / (T::lit(16.0) * params.m.abs());
        if grid.radius >= cap {
            warnings.push(format!(
                "diamond radius {} is not below 1/(16|m|) = {}",
                grid.radius, cap
            ));
        }
    }
    let size = data.l2_sum();
    if size >= config.epsilon_small {
        warnings.push(format!(
            "local data size ||f|| + ||g|| = {} is not below epsilon = {}",
            size, config.epsilon_small
        ));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    warnings
}

/// Solve on one diamond with the scheme selected in `config`.
pub fn solve_local<T: Real>(
    data: &InitialData<T>,
    params: &ModelParams<T>,
    grid: &NullGrid<T>,
    config: &SolverConfig<T>,
) -> Result<LocalSolution<T>> {
    config.validate()?;
    data.check_matches(grid)?;
    match config.scheme {
        Scheme::Marching => {
            let mut sol = solve_marching(data, params, grid, config.span)?;
            sol.warnings = smallness_warnings(data, params, grid, config);
            Ok(sol)
        }
        Scheme::Picard => solve_picard(data, params, grid, config),
    }
}

fn solve_picard<T: Real>(
    data: &InitialData<T>,
    params: &ModelParams<T>,
    grid: &NullGrid<T>,
    config: &SolverConfig<T>,
) -> Result<LocalSolution<T>> {
    let warnings = smallness_warnings(data, params, grid, config);
    let mut current = SpinorPair::free_transport(data, config.span);
    let mut diffs: Vec<T> = Vec::new();
    for _ in 0..config.max_iter {
        let next = picard_step(&current, data, params, grid);
        let d = next.sup_diff(&current);
        diffs.push(d);
        current = next;
        if !d.is_finite() {
            break;
        }
        if d <= config.tol {
            return Ok(LocalSolution {
                fields: current,
                grid: *grid,
                diagnostics: diffs,
                converged: true,
                warnings,
            });
        }
    }
    let last_diff = diffs.last().copied().unwrap_or(T::nan());
    let last_ratio = match diffs.len() {
        0 | 1 => f64::NAN,
        k => (diffs[k - 1] / diffs[k - 2]).to_f64_lossy(),
    };
    Err(Error::NoConvergence {
        iterations: diffs.len(),
        last_diff: last_diff.to_f64_lossy(),
        last_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_on_grid, massless_exact_on_grid, DataSpec, Profile};

    fn gaussian_pair(amp: f64) -> DataSpec {
        DataSpec::new(
            Profile::gaussian(amp, 0.25, -0.1),
            Profile::Gaussian {
                amplitude: amp,
                width: 0.2,
                center: 0.15,
                wavenumber: 3.0,
            },
            0,
        )
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let grid = NullGrid::new(1.0, 33).unwrap();
        let data = InitialData::zeros(-1.0, grid.h, 33);
        let params = ModelParams::new(1.0, 1.0).unwrap();
        let start = SpinorPair::zeros(33, Span::Forward);
        let next = picard_step(&start, &data, &params, &grid);
        assert_eq!(next, start);
        let sol = solve_local(&data, &params, &grid, &SolverConfig::default()).unwrap();
        assert_eq!(sol.iterations(), 1);
        assert!(sol.converged);
    }

    #[test]
    fn free_problem_is_reproduced_in_one_step() {
        let grid = NullGrid::new(1.0, 33).unwrap();
        let data = generate_on_grid(&gaussian_pair(1.0), &grid).unwrap();
        let params = ModelParams::new(0.0, 0.0).unwrap();
        let mut junk = SpinorPair::zeros(33, Span::Full);
        for v in junk.psi.values.iter_mut().chain(junk.phi.values.iter_mut()) {
            *v = C::new(0.3, -1.0);
        }
        let next = picard_step(&junk, &data, &params, &grid);
        assert_eq!(next, SpinorPair::free_transport(&data, Span::Full));
    }

    #[test]
    fn small_data_contracts() {
        let grid = NullGrid::new(0.5, 65).unwrap();
        let spec = gaussian_pair(1.0);
        let mut data = generate_on_grid(&spec, &grid).unwrap();
        let scale = 0.05 / data.l2_sum();
        for v in data.f.iter_mut().chain(data.g.iter_mut()) {
            *v = *v * scale;
        }
        let params = ModelParams::new(0.1, 1.0).unwrap();
        let s0 = SpinorPair::free_transport(&data, Span::Forward);
        let s1 = picard_step(&s0, &data, &params, &grid);
        let s2 = picard_step(&s1, &data, &params, &grid);
        assert!(s2.sup_diff(&s1) < s1.sup_diff(&s0));
    }

    #[test]
    fn picard_matches_massless_oracle() {
        let grid = NullGrid::new(1.0, 129).unwrap();
        let spec = gaussian_pair(1.0);
        let data = generate_on_grid(&spec, &grid).unwrap();
        let params = ModelParams::new(0.0, 1.0).unwrap();
        let sol = solve_local(&data, &params, &grid, &SolverConfig::default()).unwrap();
        let (psi, phi) = massless_exact_on_grid(&spec.source().unwrap(), 1.0, &grid, Span::Forward).unwrap();
        let err = sol.fields.psi.sup_diff(&psi, Span::Forward).max(sol.fields.phi.sup_diff(&phi, Span::Forward));
        assert!(err < 5e-3, "error {err}");
    }

    #[test]
    fn converged_solution_is_a_fixed_point() {
        let grid = NullGrid::new(0.75, 65).unwrap();
        let data = generate_on_grid(&gaussian_pair(1.0), &grid).unwrap();
        let params = ModelParams::new(0.5, 1.0).unwrap();
        let config = SolverConfig::default();
        let sol = solve_local(&data, &params, &grid, &config).unwrap();
        let again = picard_step(&sol.fields, &data, &params, &grid);
        assert!(again.sup_diff(&sol.fields) <= config.tol);
        assert_eq!(sol.fields.psi.diagonal(), data.f);
        assert_eq!(sol.fields.phi.diagonal(), data.g);
    }

    #[test]
    fn forced_non_convergence_reports_ratio() {
        let grid = NullGrid::new(1.0, 33).unwrap();
        let data = generate_on_grid(&gaussian_pair(1.0), &grid).unwrap();
        let params = ModelParams::new(1.0, 1.0).unwrap();
        let config = SolverConfig {
            max_iter: 2,
            ..SolverConfig::default()
        };
        match solve_local(&data, &params, &grid, &config) {
            Err(Error::NoConvergence { iterations, last_ratio, .. }) => {
                assert_eq!(iterations, 2);
                assert!(last_ratio.is_finite());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn warnings_for_large_radius_and_data() {
        let grid = NullGrid::new(1.0, 33).unwrap();
        let data = generate_on_grid(&gaussian_pair(1.0), &grid).unwrap();
        let params = ModelParams::new(1.0, 1.0).unwrap();
        let sol = solve_local(&data, &params, &grid, &SolverConfig::default()).unwrap();
        assert_eq!(sol.warnings.len(), 2);
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::<f64>::default();
        c.tol = 0.0;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::<f64>::default();
        c.epsilon_small = 1.5;
        assert!(c.validate().is_err());
        assert_eq!(SolverConfig::<f64>::for_coupling(4.0).epsilon_small, 0.025);
        assert!("nosuch".parse::<Scheme>().is_err());
    }

    #[test]
    fn single_precision_runs() {
        let grid = NullGrid::<f32>::new(0.5, 33).unwrap();
        let data = generate_on_grid(&gaussian_pair(0.3), &grid).unwrap();
        let params = ModelParams::new(0.5f32, 1.0).unwrap();
        let config = SolverConfig { tol: 1e-6f32, ..SolverConfig::default() };
        let sol = solve_local(&data, &params, &grid, &config).unwrap();
        assert!(sol.converged);
    }
}
