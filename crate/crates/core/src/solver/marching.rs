use rayon::prelude::*;

use super::LocalSolution;
use crate::error::{Error, Result};
use crate::geometry::{NullGrid, Span};
use crate::model::{rhs_phi, rhs_psi, InitialData, ModelParams, SpinorPair};
use crate::scalar::{imag, Real, C};

const MAX_INNER: usize = 8;
const INNER_TOL: f64 = 1e-13;

/// Solve the trapezoidal characteristic equations one anti-diagonal at a
/// time, moving outward from `t = 0`.
///
/// Each node couples to its two upstream neighbours through a single
/// trapezoid cell:
///
/// ```text
/// psi(i, j) = psi(i-1, j) + h/4 (F(i-1, j) + F(i, j))
/// phi(i, j) = phi(i, j+1) + h/4 (G(i, j+1) + G(i, j))
/// ```
///
/// The implicit endpoint is resolved by alternating the two equations; each
/// is linear in its own unknown, so every half-step is an exact solve.
pub fn solve_marching<T: Real>(
    data: &InitialData<T>,
    params: &ModelParams<T>,
    grid: &NullGrid<T>,
    span: Span,
) -> Result<LocalSolution<T>> {
    data.check_matches(grid)?;
    let n = grid.n;
    let c = grid.h * T::lit(0.25);
    let mut fields = SpinorPair::zeros(n, span);
    for i in 0..n {
        fields.psi.set(i, i, data.f[i]);
        fields.phi.set(i, i, data.g[i]);
    }

    let mut ks: Vec<isize> = (1..n as isize).collect();
    if span == Span::Full {
        ks.extend((1..n as isize).map(|k| -k));
    }
    for k in ks {
        let nodes: Vec<(usize, usize)> = grid.antidiagonal(k).collect();
        let sigma = if k > 0 { T::one() } else { -T::one() };
        let updates: Vec<Result<(C<T>, C<T>)>> = nodes
            .par_iter()
            .map(|&(i, j)| {
                // Upstream nodes one cell closer to the diagonal.
                let (ip, jp) = if k > 0 { (i - 1, j + 1) } else { (i + 1, j - 1) };
                let psi_up = fields.psi.get(ip, j);
                let phi_up = fields.phi.get(i, jp);
                let f_up = rhs_psi(fields.phi.get(ip, j), psi_up, params);
                let g_up = rhs_phi(fields.psi.get(i, jp), phi_up, params);
                cell_update(psi_up + f_up * c * sigma, phi_up + g_up * c * sigma, g_up, c * sigma, params)
                    .ok_or(Error::CellNoConvergence { alpha: i, beta: j })
            })
            .collect();
        for (&(i, j), u) in nodes.iter().zip(updates) {
            let (psi, phi) = u?;
            fields.psi.set(i, j, psi);
            fields.phi.set(i, j, phi);
        }
    }
    Ok(LocalSolution {
        fields,
        grid: *grid,
        diagnostics: Vec::new(),
        converged: true,
        warnings: Vec::new(),
    })
}

/// Solve `psi = a + c F(phi, psi)`, `phi = b + c G(psi, phi)` for one node.
fn cell_update<T: Real>(
    a: C<T>,
    b: C<T>,
    g_up: C<T>,
    c: T,
    p: &ModelParams<T>,
) -> Option<(C<T>, C<T>)> {
    let two = T::lit(2.0);
    let tol = T::lit(INNER_TOL);
    let solve_psi = |phi: C<T>| (a + imag(-c * p.m) * phi) / (C::new(T::one(), two * c * p.lambda * phi.norm_sqr()));
    let solve_phi = |psi: C<T>| (b + imag(-c * p.m) * psi) / (C::new(T::one(), two * c * p.lambda * psi.norm_sqr()));

    // Explicit predictor for phi.
    let mut phi = b + g_up * c;
    let mut psi = solve_psi(phi);
    for _ in 0..MAX_INNER {
        let phi_new = solve_phi(psi);
        let psi_new = solve_psi(phi_new);
        let dphi = (phi_new - phi).norm();
        let dpsi = (psi_new - psi).norm();
        phi = phi_new;
        psi = psi_new;
        let scale = T::one() + phi.norm() + psi.norm();
        if !(phi.norm().is_finite() && psi.norm().is_finite()) {
            return None;
        }
        if dphi <= tol * scale && dpsi <= tol * scale {
            return Some((psi, phi));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_on_grid, massless_exact_on_grid, DataSpec, Profile};
    use crate::solver::{picard_step, solve_local, SolverConfig};

    fn spec() -> DataSpec {
        DataSpec::new(Profile::gaussian(1.0, 0.3, -0.1), Profile::gaussian(0.8, 0.25, 0.2), 0)
    }

    #[test]
    fn zero_data() {
        let grid = NullGrid::new(1.0, 17).unwrap();
        let data = InitialData::zeros(-1.0, grid.h, 17);
        let sol = solve_marching(&data, &ModelParams::new(1.0, 1.0).unwrap(), &grid, Span::Full).unwrap();
        assert_eq!(sol.fields, SpinorPair::zeros(17, Span::Full));
    }

    #[test]
    fn agrees_with_picard_fixed_point() {
        let grid = NullGrid::new(1.0, 129).unwrap();
        let data = generate_on_grid(&spec(), &grid).unwrap();
        let params = ModelParams::new(1.0, 1.0).unwrap();
        for span in [Span::Forward, Span::Full] {
            let config = SolverConfig { span, ..SolverConfig::default() };
            let picard = solve_local(&data, &params, &grid, &config).unwrap();
            let march = solve_marching(&data, &params, &grid, span).unwrap();
            let d = picard.fields.sup_diff(&march.fields);
            assert!(d <= 10.0 * config.tol, "difference {d:e}");
            // The marching solution is itself a discrete fixed point.
            let step = picard_step(&march.fields, &data, &params, &grid);
            assert!(step.sup_diff(&march.fields) <= 1e-11);
        }
    }

    #[test]
    fn massless_error_is_second_order() {
        let src = spec().source().unwrap();
        let params = ModelParams::new(0.0, 1.0).unwrap();
        let mut errs = Vec::new();
        for n in [65, 129, 257] {
            let grid = NullGrid::new(1.0, n).unwrap();
            let data = generate_on_grid(&spec(), &grid).unwrap();
            let sol = solve_marching(&data, &params, &grid, Span::Forward).unwrap();
            let (psi, phi) = massless_exact_on_grid(&src, 1.0, &grid, Span::Forward).unwrap();
            errs.push(sol.fields.psi.sup_diff(&psi, Span::Forward).max(sol.fields.phi.sup_diff(&phi, Span::Forward)));
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..4.5).contains(&ratio), "ratio {ratio}, errors {errs:?}");
        }
    }
}
