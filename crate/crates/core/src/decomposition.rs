//! Splitting a solution into a part whose modulus is transported data and a
//! part with zero data driven by the mass term:
//!
//! ```text
//! d_a psi_L = -i lambda |phi|^2 psi_L               psi_L = f on the diagonal
//! d_a psi_N = -i lambda |phi|^2 psi_N - i m phi / 2  psi_N = 0 on the diagonal
//! ```
//!
//! and the mirror equations for `phi` along `beta`. The phase is integrated
//! exactly, so `|psi_L*(alpha, beta)| = |f(beta)|` holds to rounding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{NodeField, NullGrid, Span};
use crate::model::{generate_on_grid, DataSpec, InitialData, ModelParams, Profile, SpinorPair};
use crate::scalar::{czero, imag, Real, C};
use crate::solver::{solve_local, SolverConfig};

#[derive(Debug, Clone)]
pub struct DecompositionResult<T> {
    pub psi_l: NodeField<T>,
    pub phi_l: NodeField<T>,
    pub psi_n: NodeField<T>,
    pub phi_n: NodeField<T>,
    pub span: Span,
    /// `max(sup |psi - psi_L - psi_N|, sup |phi - phi_L - phi_N|)`.
    pub residual_sum: T,
    /// Sup residual of the mass identity for the N-parts.
    pub mass1_residual: T,
    /// `max_t (||psi_N(t)||_inf + ||phi_N(t)||_inf)`.
    pub linf_n: T,
    /// `max | |psi_L*| - |f(beta)| |` and the same for `phi_L`.
    pub modulus_defect: T,
}

/// One characteristic line: nodes ordered outward from the diagonal, the
/// first being the diagonal node.
struct Line<T> {
    /// Signed step of the integration variable.
    step: T,
    nodes: Vec<(usize, usize)>,
}

fn psi_lines<T: Real>(n: usize, h: T, span: Span) -> Vec<Line<T>> {
    let mut out = Vec::new();
    for j in 0..n {
        out.push(Line {
            step: h,
            nodes: (j..n).map(|i| (i, j)).collect(),
        });
        if span == Span::Full {
            out.push(Line {
                step: -h,
                nodes: (0..=j).rev().map(|i| (i, j)).collect(),
            });
        }
    }
    out
}

fn phi_lines<T: Real>(n: usize, h: T, span: Span) -> Vec<Line<T>> {
    let mut out = Vec::new();
    for i in 0..n {
        out.push(Line {
            step: -h,
            nodes: (0..=i).rev().map(|j| (i, j)).collect(),
        });
        if span == Span::Full {
            out.push(Line {
                step: h,
                nodes: (i..n).map(|j| (i, j)).collect(),
            });
        }
    }
    out
}

/// Integrate `d u = (i k(s) u + src(s)) ds` from `u = u0` with the phase
/// integrated exactly and the source by the trapezoid rule in the
/// integrating-factor form. Returns `(u_L, u_N)` at each node of the line.
fn split_line<T: Real>(u0: C<T>, step: T, k: &[T], src: &[C<T>]) -> (Vec<C<T>>, Vec<C<T>>) {
    let len = k.len();
    let half = step * T::lit(0.5);
    let mut theta = T::zero();
    let mut acc = czero::<T>();
    let mut prev = czero::<T>();
    let mut lin = Vec::with_capacity(len);
    let mut non = Vec::with_capacity(len);
    for q in 0..len {
        if q > 0 {
            theta = theta + half * (k[q - 1] + k[q]);
        }
        let rot = C::from_polar(T::one(), theta);
        let cur = src[q] * rot.conj();
        if q > 0 {
            acc = acc + (prev + cur) * half;
        }
        prev = cur;
        lin.push(u0 * rot);
        non.push(acc * rot);
    }
    (lin, non)
}

/// Split a converged solution on `grid`.
pub fn delgado_split<T: Real>(
    solution: &SpinorPair<T>,
    data: &InitialData<T>,
    params: &ModelParams<T>,
    grid: &NullGrid<T>,
) -> DecompositionResult<T> {
    let n = grid.n;
    let span = solution.span;
    let (m, lambda) = (params.m, params.lambda);
    let half_m = m * T::lit(0.5);

    // psi along beta-rows: k = -lambda |phi|^2, source -i m phi / 2.
    let rows: Vec<_> = psi_lines(n, grid.h, span)
        .into_par_iter()
        .map(|line| {
            let k: Vec<T> = line.nodes.iter().map(|&(i, j)| -lambda * solution.phi.get(i, j).norm_sqr()).collect();
            let src: Vec<C<T>> = line.nodes.iter().map(|&(i, j)| imag(-half_m) * solution.phi.get(i, j)).collect();
            let (_, j) = line.nodes[0];
            let (l, nn) = split_line(data.f[j], line.step, &k, &src);
            (line.nodes, l, nn)
        })
        .collect();
    // phi along alpha-columns: d_b phi = i lambda |psi|^2 phi + i m psi / 2.
    let cols: Vec<_> = phi_lines(n, grid.h, span)
        .into_par_iter()
        .map(|line| {
            let k: Vec<T> = line.nodes.iter().map(|&(i, j)| lambda * solution.psi.get(i, j).norm_sqr()).collect();
            let src: Vec<C<T>> = line.nodes.iter().map(|&(i, j)| imag(half_m) * solution.psi.get(i, j)).collect();
            let (i, _) = line.nodes[0];
            let (l, nn) = split_line(data.g[i], line.step, &k, &src);
            (line.nodes, l, nn)
        })
        .collect();

    let mut psi_l = NodeField::zeros(n);
    let mut psi_n = NodeField::zeros(n);
    let mut phi_l = NodeField::zeros(n);
    let mut phi_n = NodeField::zeros(n);
    for (nodes, l, nn) in &rows {
        for (q, &(i, j)) in nodes.iter().enumerate() {
            psi_l.set(i, j, l[q]);
            psi_n.set(i, j, nn[q]);
        }
    }
    for (nodes, l, nn) in &cols {
        for (q, &(i, j)) in nodes.iter().enumerate() {
            phi_l.set(i, j, l[q]);
            phi_n.set(i, j, nn[q]);
        }
    }

    let mut residual_sum = T::zero();
    let mut modulus_defect = T::zero();
    for j in 0..n {
        for i in 0..n {
            if !span.contains(i, j) {
                continue;
            }
            let rp = solution.psi.get(i, j) - psi_l.get(i, j) - psi_n.get(i, j);
            let rf = solution.phi.get(i, j) - phi_l.get(i, j) - phi_n.get(i, j);
            residual_sum = residual_sum.max(rp.norm()).max(rf.norm());
            let dp = (psi_l.get(i, j).norm() - data.f[j].norm()).abs();
            let df = (phi_l.get(i, j).norm() - data.g[i].norm()).abs();
            modulus_defect = modulus_defect.max(dp).max(df);
        }
    }

    let mut result = DecompositionResult {
        psi_l,
        phi_l,
        psi_n,
        phi_n,
        span,
        residual_sum,
        mass1_residual: T::zero(),
        linf_n: T::zero(),
        modulus_defect,
    };
    result.linf_n = n_part_linf(&result, grid);
    result.mass1_residual = verify_mass1(&result, solution, params, grid).sup;
    result
}

fn n_part_linf<T: Real>(r: &DecompositionResult<T>, grid: &NullGrid<T>) -> T {
    let n = grid.n as isize;
    let ks: Vec<isize> = match r.span {
        Span::Forward => (0..n).collect(),
        Span::Full => (1 - n..n).collect(),
    };
    ks.into_iter()
        .map(|k| {
            let (mut a, mut b) = (T::zero(), T::zero());
            for (i, j) in grid.antidiagonal(k) {
                a = a.max(r.psi_n.get(i, j).norm());
                b = b.max(r.phi_n.get(i, j).norm());
            }
            a + b
        })
        .fold(T::zero(), T::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mass1Report<T> {
    /// Sup over nodes of both identities' residuals.
    pub sup: T,
    /// Node-weighted `L^2` residual, `(h^2 sum r^2)^(1/2)`.
    pub l2: T,
}

/// Residuals of
///
/// ```text
/// |psi_N*(a, b)|^2 =  m int_b^a Im(phi* conj psi_N*)(g, b) dg
/// |phi_N*(a, b)|^2 = -m int_a^b Im(psi* conj phi_N*)(a, g) dg
/// ```
///
/// with both integrals by the trapezoid rule along the characteristic.
pub fn verify_mass1<T: Real>(
    result: &DecompositionResult<T>,
    solution: &SpinorPair<T>,
    params: &ModelParams<T>,
    grid: &NullGrid<T>,
) -> Mass1Report<T> {
    let n = grid.n;
    let m = params.m;
    let eval = |line: &Line<T>, lhs: &dyn Fn(usize, usize) -> T, dens: &dyn Fn(usize, usize) -> T| {
        let half = line.step * T::lit(0.5);
        let mut acc = T::zero();
        let mut out = Vec::with_capacity(line.nodes.len());
        for (q, &(i, j)) in line.nodes.iter().enumerate() {
            if q > 0 {
                let (pi, pj) = line.nodes[q - 1];
                acc = acc + half * (dens(pi, pj) + dens(i, j));
            }
            out.push(lhs(i, j) - acc);
        }
        out
    };
    let psi_res: Vec<T> = psi_lines(n, grid.h, result.span)
        .par_iter()
        .flat_map_iter(|line| {
            eval(
                line,
                &|i, j| result.psi_n.get(i, j).norm_sqr(),
                &|i, j| m * (solution.phi.get(i, j) * result.psi_n.get(i, j).conj()).im,
            )
        })
        .collect();
    let phi_res: Vec<T> = phi_lines(n, grid.h, result.span)
        .par_iter()
        .flat_map_iter(|line| {
            eval(
                line,
                &|i, j| result.phi_n.get(i, j).norm_sqr(),
                &|i, j| -m * (solution.psi.get(i, j) * result.phi_n.get(i, j).conj()).im,
            )
        })
        .collect();
    let all = psi_res.iter().chain(&phi_res);
    let sup = all.clone().map(|r| r.abs()).fold(T::zero(), T::max);
    let l2 = (all.map(|&r| r * r).sum::<T>() * grid.h * grid.h).sqrt();
    Mass1Report { sup, l2 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressRow {
    pub width: f64,
    pub sup_f: f64,
    pub max_psi_n: f64,
    pub charge: f64,
    /// `max_psi_n / charge`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressSetup {
    /// Half-width of the diamond.
    pub radius: f64,
    pub n: usize,
    /// Fixed partner component `g`.
    pub partner: Profile,
}

impl Default for StressSetup {
    fn default() -> Self {
        Self {
            radius: 1.0,
            n: 1025,
            partner: Profile::Gaussian {
                amplitude: (1.0 / (0.25 * (std::f64::consts::PI / 2.0).sqrt())).sqrt(),
                width: 0.25,
                center: 0.0,
                wavenumber: 0.0,
            },
        }
    }
}

/// For each width, solve with `f` the unit-charge box of that width centred
/// at the origin and `g` the partner, split, and record `max_t ||psi_N||_inf`.
pub fn boundedness_stress(
    params: &ModelParams<f64>,
    widths: &[f64],
    setup: &StressSetup,
    config: &SolverConfig<f64>,
) -> Result<Vec<StressRow>> {
    let grid = NullGrid::new(setup.radius, setup.n)?;
    widths
        .iter()
        .map(|&w| {
            let spec = DataSpec::new(Profile::BoxFamily { width: w, center: 0.0 }, setup.partner.clone(), 0);
            let data = generate_on_grid(&spec, &grid)?;
            let sol = solve_local(&data, params, &grid, config)?;
            let split = delgado_split(&sol.fields, &data, params, &grid);
            let mut max_psi_n = 0.0f64;
            for k in 0..grid.n as isize {
                for (i, j) in grid.antidiagonal(k) {
                    max_psi_n = max_psi_n.max(split.psi_n.get(i, j).norm());
                }
            }
            let charge = data.charge();
            Ok(StressRow {
                width: w,
                sup_f: data.f.iter().map(|v| v.norm()).fold(0.0, f64::max),
                max_psi_n,
                charge,
                ratio: max_psi_n / charge,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Scheme;

    fn spec() -> DataSpec {
        DataSpec::new(Profile::gaussian(1.0, 0.3, -0.1), Profile::gaussian(0.8, 0.25, 0.2), 0)
    }

    fn run(m: f64, n: usize, span: Span) -> (DecompositionResult<f64>, SpinorPair<f64>, InitialData<f64>) {
        let grid = NullGrid::new(1.0, n).unwrap();
        let data = generate_on_grid(&spec(), &grid).unwrap();
        let params = ModelParams::new(m, 1.0).unwrap();
        let config = SolverConfig { scheme: Scheme::Marching, span, ..SolverConfig::default() };
        let sol = solve_local(&data, &params, &grid, &config).unwrap();
        (delgado_split(&sol.fields, &data, &params, &grid), sol.fields, data)
    }

    #[test]
    fn massless_n_parts_vanish() {
        let (r, sol, _) = run(0.0, 65, Span::Full);
        assert_eq!(r.psi_n.sup_norm(Span::Full), 0.0);
        assert_eq!(r.phi_n.sup_norm(Span::Full), 0.0);
        assert_eq!(r.linf_n, 0.0);
        assert_eq!(r.mass1_residual, 0.0);
        // psi = psi_L up to the scheme's own phase quadrature.
        assert!(r.psi_l.sup_diff(&sol.psi, Span::Full) < 1e-3);
    }

    #[test]
    fn zero_data_gives_zero_parts() {
        let grid = NullGrid::new(1.0, 33).unwrap();
        let data = InitialData::zeros(-1.0, grid.h, 33);
        let sol = SpinorPair::zeros(33, Span::Forward);
        let r = delgado_split(&sol, &data, &ModelParams::new(1.0, 1.0).unwrap(), &grid);
        for f in [&r.psi_l, &r.phi_l, &r.psi_n, &r.phi_n] {
            assert_eq!(f.sup_norm(Span::Full), 0.0);
        }
    }

    #[test]
    fn diagonal_values() {
        let (r, _, data) = run(1.0, 65, Span::Forward);
        for i in 0..65 {
            assert_eq!(r.psi_l.get(i, i), data.f[i]);
            assert_eq!(r.phi_l.get(i, i), data.g[i]);
            assert_eq!(r.psi_n.get(i, i).norm(), 0.0);
            assert_eq!(r.phi_n.get(i, i).norm(), 0.0);
        }
    }

    #[test]
    fn modulus_is_transported_exactly() {
        for span in [Span::Forward, Span::Full] {
            let (r, _, _) = run(1.0, 129, span);
            assert!(r.modulus_defect <= 1e-12, "{}", r.modulus_defect);
        }
    }

    #[test]
    fn residuals_are_second_order() {
        let mut res = Vec::new();
        let mut mass = Vec::new();
        for n in [65, 129, 257] {
            let (r, _, _) = run(1.0, n, Span::Forward);
            res.push(r.residual_sum);
            mass.push(r.mass1_residual);
        }
        for v in [&res, &mass] {
            assert!(v[0] / v[1] > 3.0 && v[1] / v[2] > 3.0, "{v:?}");
        }
    }
}
