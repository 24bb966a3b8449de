use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve_local, LocalSolution, SolverConfig};
use crate::error::{Error, Result};
use crate::geometry::{NullGrid, Slice, Span};
use crate::model::{InitialData, ModelParams};
use crate::scalar::{Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum GlueMode<T> {
    /// One diamond spanning the whole data interval.
    Single,
    /// Overlapping diamonds of the given radius with centres one radius
    /// apart; requires `T <= radius / 2`.
    Tiled { radius: T },
}

/// Lab-frame solution on `[0, T] x [x_min + T, x_max - T]`, one slice per
/// lattice time `k h / 2`.
#[derive(Debug, Clone)]
pub struct LabSolution<T> {
    pub slices: Vec<Slice<T>>,
    pub tiles: usize,
    /// Largest disagreement seen between overlapping tiles (zero for a
    /// single diamond).
    pub overlap_disagreement: T,
    /// Total Picard iterations over all diamonds.
    pub iterations: usize,
}

impl<T: Real> LabSolution<T> {
    pub fn last(&self) -> &Slice<T> {
        self.slices.last().expect("a lab solution has at least the t = 0 slice")
    }

    /// Largest nodal difference between two solutions on the same slices.
    pub fn sup_diff(&self, other: &Self) -> T {
        self.slices
            .iter()
            .zip(&other.slices)
            .flat_map(|(a, b)| {
                a.psi
                    .iter()
                    .zip(&b.psi)
                    .chain(a.phi.iter().zip(&b.phi))
                    .map(|(u, v)| (u - v).norm())
            })
            .fold(T::zero(), T::max)
    }
}

/// Solve forward to time `t_end` from data sampled on `[x0, x0 + (N-1) h]`.
pub fn glue_solve<T: Real>(
    data: &InitialData<T>,
    params: &ModelParams<T>,
    t_end: T,
    config: &SolverConfig<T>,
    mode: GlueMode<T>,
) -> Result<LabSolution<T>> {
    let n_big = data.len();
    if n_big < 2 {
        return Err(Error::InvalidArgument("glue_solve needs at least two samples".into()));
    }
    let h = data.h;
    let half_width = data.h * T::from_usize_lossy(n_big - 1) * T::lit(0.5);
    let center = data.x0 + half_width;
    let big = NullGrid::centered(center, half_width, n_big)?;
    if !(t_end >= T::zero() && t_end < half_width) {
        return Err(Error::InvalidArgument(format!(
            "end time {t_end} must satisfy 0 <= T < L = {half_width}"
        )));
    }
    let kmax = big.slice_index(t_end, Span::Forward)? as usize;
    let config = SolverConfig {
        span: Span::Forward,
        ..*config
    };

    // offsets (in lattice units) of each diamond's left corner.
    let (offsets, tile_n) = match mode {
        GlueMode::Single => (vec![0usize], n_big),
        GlueMode::Tiled { radius } => {
            let r = (radius / h).round();
            let r_idx = r.to_usize().unwrap_or(0);
            if r_idx == 0 || ((radius / h) - r).abs() > T::lit(1e-9) * r {
                return Err(Error::InvalidArgument(format!(
                    "tile radius {radius} must be a positive multiple of the spacing {h}"
                )));
            }
            if kmax > r_idx {
                return Err(Error::InvalidArgument(format!(
                    "end time {t_end} exceeds half the tile radius {radius}"
                )));
            }
            let tile_n = 2 * r_idx + 1;
            if tile_n > n_big {
                return Err(Error::InvalidArgument(format!(
                    "tile radius {radius} exceeds the data half-width {half_width}"
                )));
            }
            let mut offsets: Vec<usize> = (0..).map(|j| j * r_idx).take_while(|o| o + tile_n <= n_big).collect();
            if offsets.last().map_or(true, |&o| o + tile_n < n_big) {
                offsets.push(n_big - tile_n);
            }
            (offsets, tile_n)
        }
    };

    let solutions: Vec<LocalSolution<T>> = offsets
        .par_iter()
        .map(|&o| {
            let local = data.window(o, tile_n);
            let radius = big.h * T::from_usize_lossy(tile_n - 1) * T::lit(0.5);
            let grid = NullGrid {
                center: local.x0 + radius,
                radius,
                n: tile_n,
                h: big.h,
            };
            solve_local(&local, params, &grid, &config)
        })
        .collect::<Result<_>>()?;

    let bound = T::lit(10.0) * config.tol;
    let mut disagreement = T::zero();
    let mut slices = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        let len = n_big - k;
        let mut psi: Vec<Option<C<T>>> = vec![None; len];
        let mut phi: Vec<Option<C<T>>> = vec![None; len];
        for (tile, (&o, sol)) in offsets.iter().zip(&solutions).enumerate() {
            for (i, j) in sol.grid.antidiagonal(k as isize) {
                let slot = j + o;
                let (a, b) = (sol.fields.psi.get(i, j), sol.fields.phi.get(i, j));
                match (psi[slot], phi[slot]) {
                    (Some(pa), Some(pb)) => {
                        let d = (pa - a).norm().max((pb - b).norm());
                        disagreement = disagreement.max(d);
                        if d > bound {
                            return Err(Error::OverlapMismatch {
                                left: tile.saturating_sub(1),
                                right: tile,
                                disagreement: d.to_f64_lossy(),
                                bound: bound.to_f64_lossy(),
                            });
                        }
                    }
                    _ => {
                        psi[slot] = Some(a);
                        phi[slot] = Some(b);
                    }
                }
            }
        }
        // Restrict to the rectangle |x - center| <= L - T.
        let trim = (kmax - k).div_ceil(2);
        let hi = len - trim;
        let mut out_psi = Vec::with_capacity(hi.saturating_sub(trim));
        let mut out_phi = Vec::with_capacity(hi.saturating_sub(trim));
        for slot in trim..hi {
            match (psi[slot], phi[slot]) {
                (Some(a), Some(b)) => {
                    out_psi.push(a);
                    out_phi.push(b);
                }
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "tiles leave slice {k} uncovered at sample {slot}"
                    )))
                }
            }
        }
        let t = big.slice_time(k as isize);
        slices.push(Slice {
            t,
            x0: data.x0 + t + h * T::from_usize_lossy(trim),
            h,
            psi: out_psi,
            phi: out_phi,
        });
    }

    Ok(LabSolution {
        slices,
        tiles: offsets.len(),
        overlap_disagreement: disagreement,
        iterations: solutions.iter().map(|s| s.iterations()).sum(),
    })
}

/// Solve backward to time `-t_end` through the reversal symmetry: with
/// `psi'(t, x) = phi(-t, x)`, `phi'(t, x) = psi(-t, x)` the reversed pair
/// solves the system with `(-m, -lambda)` and data `(g, f)`.
pub fn glue_solve_backward<T: Real>(
    data: &InitialData<T>,
    params: &ModelParams<T>,
    t_end: T,
    config: &SolverConfig<T>,
    mode: GlueMode<T>,
) -> Result<LabSolution<T>> {
    let mut sol = glue_solve(&data.swapped(), &params.reversed(), t_end, config, mode)?;
    for s in &mut sol.slices {
        std::mem::swap(&mut s.psi, &mut s.phi);
        s.t = -s.t;
    }
    Ok(sol)
}
