//! Lab and null coordinates, diamonds, the uniform null lattice and
//! extraction of constant-time slices.
//!
//! Null coordinates are `alpha = x + t`, `beta = x - t`. The lattice covers
//! the square `[c - R, c + R]^2` in `(alpha, beta)`, which is the lab-frame
//! causal diamond of half-width `R` centred at `x = c`. Node `(i, j)` sits at
//! `alpha_i = c - R + i h`, `beta_j = c - R + j h`, so `t = (i - j) h / 2` and
//! every anti-diagonal `i - j = k` is a time slice.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{czero, Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabPoint<T> {
    pub t: T,
    pub x: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullPoint<T> {
    pub alpha: T,
    pub beta: T,
}

pub fn lab_to_null<T: Real>(p: LabPoint<T>) -> NullPoint<T> {
    NullPoint {
        alpha: p.x + p.t,
        beta: p.x - p.t,
    }
}

pub fn null_to_lab<T: Real>(q: NullPoint<T>) -> LabPoint<T> {
    let half = T::lit(0.5);
    LabPoint {
        t: (q.alpha - q.beta) * half,
        x: (q.alpha + q.beta) * half,
    }
}

/// Causal diamond `{ |t + y - x0| <= R, |t - y + x0| <= R }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diamond<T> {
    pub center: T,
    pub radius: T,
}

impl<T: Real> Diamond<T> {
    pub fn new(center: T, radius: T) -> Result<Self> {
        if !(radius > T::zero()) || !center.is_finite() || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "diamond needs finite center and radius > 0, got center {center}, radius {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, p: LabPoint<T>) -> bool {
        (p.t + p.x - self.center).abs() <= self.radius
            && (p.t - p.x + self.center).abs() <= self.radius
    }
}

/// Which part of the null square carries data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Span {
    /// Nodes with `alpha >= beta`, i.e. `t >= 0`.
    #[default]
    Forward,
    /// The whole square, `-R <= t <= R`.
    Full,
}

impl Span {
    #[inline]
    pub fn contains(self, i: usize, j: usize) -> bool {
        match self {
            Span::Forward => i >= j,
            Span::Full => true,
        }
    }
}

/// Uniform square lattice on a diamond in null coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullGrid<T> {
    pub center: T,
    pub radius: T,
    pub n: usize,
    pub h: T,
}

impl<T: Real> NullGrid<T> {
    /// Grid centred at the origin with `n` nodes per axis.
    pub fn new(radius: T, n: usize) -> Result<Self> {
        Self::centered(T::zero(), radius, n)
    }

    pub fn centered(center: T, radius: T, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 nodes per axis, got {n}"
            )));
        }
        if !(radius > T::zero()) || !radius.is_finite() || !center.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid radius must be finite and positive, got {radius}"
            )));
        }
        let h = (radius + radius) / T::from_usize_lossy(n - 1);
        Ok(Self {
            center,
            radius,
            n,
            h,
        })
    }

    /// Grid with spacing `h`; the diameter `2 R` must be an integer multiple
    /// of `h`.
    pub fn with_spacing(center: T, radius: T, h: T) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(Error::InvalidArgument(format!("spacing must be positive, got {h}")));
        }
        let cells = ((radius + radius) / h).round();
        let n = cells.to_usize().unwrap_or(0) + 1;
        let grid = Self::centered(center, radius, n)?;
        let rel = ((grid.h - h) / h).abs();
        if rel > T::lit(1e-9) {
            return Err(Error::InvalidArgument(format!(
                "diameter {} is not an integer multiple of spacing {h}",
                radius + radius
            )));
        }
        Ok(grid)
    }

    pub fn diamond(&self) -> Diamond<T> {
        Diamond {
            center: self.center,
            radius: self.radius,
        }
    }

    #[inline]
    pub fn alpha(&self, i: usize) -> T {
        self.center - self.radius + T::from_usize_lossy(i) * self.h
    }

    #[inline]
    pub fn beta(&self, j: usize) -> T {
        self.center - self.radius + T::from_usize_lossy(j) * self.h
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> NullPoint<T> {
        NullPoint {
            alpha: self.alpha(i),
            beta: self.beta(j),
        }
    }

    #[inline]
    pub fn lab(&self, i: usize, j: usize) -> LabPoint<T> {
        null_to_lab(self.node(i, j))
    }

    /// Spatial positions of the `t = 0` samples (the diagonal).
    pub fn initial_positions(&self) -> Vec<T> {
        (0..self.n).map(|i| self.alpha(i)).collect()
    }

    /// Flat storage index of node `(i, j)`; beta-rows are contiguous.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Time of anti-diagonal `k = i - j`.
    #[inline]
    pub fn slice_time(&self, k: isize) -> T {
        T::lit(k as f64) * self.h * T::lit(0.5)
    }

    /// Anti-diagonal index for time `t`, if `t` is on the lattice.
    pub fn slice_index(&self, t: T, span: Span) -> Result<isize> {
        let half_h = self.h * T::lit(0.5);
        let raw = t / half_h;
        let k = raw.round();
        let kmax = (self.n - 1) as isize;
        let lo = match span {
            Span::Forward => 0,
            Span::Full => -kmax,
        };
        let tol = T::lit(1e-9) * T::one().max(raw.abs());
        let ki = k.to_isize().unwrap_or(isize::MAX);
        if (raw - k).abs() > tol || ki < lo || ki > kmax {
            let below = (raw.floor().to_isize().unwrap_or(lo)).clamp(lo, kmax);
            let above = (raw.ceil().to_isize().unwrap_or(kmax)).clamp(lo, kmax);
            return Err(Error::TimeNotOnLattice {
                requested: t.to_f64_lossy(),
                below: self.slice_time(below).to_f64_lossy(),
                above: self.slice_time(above).to_f64_lossy(),
            });
        }
        Ok(ki)
    }

    /// Node indices `(i, j)` on anti-diagonal `k`, ordered by increasing `x`.
    pub fn antidiagonal(&self, k: isize) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n;
        let a = k.unsigned_abs();
        let count = n.saturating_sub(a);
        (0..count).map(move |m| if k >= 0 { (m + a, m) } else { (m, m + a) })
    }
}

/// Complex samples on every node of a [`NullGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField<T> {
    pub n: usize,
    pub values: Vec<C<T>>,
}

impl<T: Real> NodeField<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![czero(); n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C<T> {
        self.values[j * self.n + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C<T>) {
        self.values[j * self.n + i] = v;
    }

    /// Sup norm over nodes in `span`.
    pub fn sup_norm(&self, span: Span) -> T {
        let mut m = T::zero();
        for j in 0..self.n {
            for i in 0..self.n {
                if span.contains(i, j) {
                    m = m.max(self.get(i, j).norm());
                }
            }
        }
        m
    }

    pub fn sup_diff(&self, other: &Self, span: Span) -> T {
        let mut m = T::zero();
        for j in 0..self.n {
            for i in 0..self.n {
                if span.contains(i, j) {
                    m = m.max((self.get(i, j) - other.get(i, j)).norm());
                }
            }
        }
        m
    }

    pub fn diagonal(&self) -> Vec<C<T>> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }
}

/// A constant-time cut through the solution: samples of both components at
/// equally spaced positions `x0 + m h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice<T> {
    pub t: T,
    pub x0: T,
    pub h: T,
    pub psi: Vec<C<T>>,
    pub phi: Vec<C<T>>,
}

impl<T: Real> Slice<T> {
    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn x(&self, m: usize) -> T {
        self.x0 + T::from_usize_lossy(m) * self.h
    }

    pub fn positions(&self) -> Vec<T> {
        (0..self.len()).map(|m| self.x(m)).collect()
    }
}

/// Extract the samples of both fields at time `t` without interpolation.
///
/// `t` must be a multiple of `h / 2`; the returned slice has `n - |k|`
/// samples where `k = 2 t / h`.
pub fn time_slice<T: Real>(
    grid: &NullGrid<T>,
    psi: &NodeField<T>,
    phi: &NodeField<T>,
    span: Span,
    t: T,
) -> Result<Slice<T>> {
    let k = grid.slice_index(t, span)?;
    Ok(slice_at(grid, psi, phi, k))
}

/// Slice at anti-diagonal `k` (no validation beyond the index range).
pub fn slice_at<T: Real>(
    grid: &NullGrid<T>,
    psi: &NodeField<T>,
    phi: &NodeField<T>,
    k: isize,
) -> Slice<T> {
    let (mut ps, mut ph) = (Vec::new(), Vec::new());
    for (i, j) in grid.antidiagonal(k) {
        ps.push(psi.get(i, j));
        ph.push(phi.get(i, j));
    }
    let t = grid.slice_time(k);
    Slice {
        t,
        x0: grid.center - grid.radius + t.abs(),
        h: grid.h,
        psi: ps,
        phi: ph,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lab_to_null_examples() {
        let q = lab_to_null(LabPoint { t: 1.0, x: 2.0 });
        assert_eq!((q.alpha, q.beta), (3.0, 1.0));
        let q = lab_to_null(LabPoint { t: 0.0, x: 0.7 });
        assert_eq!((q.alpha, q.beta), (0.7, 0.7));
        let q = lab_to_null(LabPoint { t: 0.3, x: 0.0 });
        assert_eq!((q.alpha, q.beta), (0.3, -0.3));
    }

    #[test]
    fn null_to_lab_examples() {
        let p = null_to_lab(NullPoint { alpha: 3.0, beta: 1.0 });
        assert_eq!((p.t, p.x), (1.0, 2.0));
        let p = null_to_lab(NullPoint { alpha: -0.25, beta: -0.25 });
        assert_eq!((p.t, p.x), (0.0, -0.25));
    }

    #[test]
    fn round_trip_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let p = LabPoint {
                t: rng.gen_range(-10.0f64..10.0),
                x: rng.gen_range(-10.0..10.0),
            };
            let back = null_to_lab(lab_to_null(p));
            assert!((back.t - p.t).abs() <= 1e-14 * 10.0);
            assert!((back.x - p.x).abs() <= 1e-14 * 10.0);
            let q = NullPoint {
                alpha: rng.gen_range(-1.0f64..1.0),
                beta: rng.gen_range(-1.0..1.0),
            };
            let back = lab_to_null(null_to_lab(q));
            assert!((back.alpha - q.alpha).abs() <= 1e-14);
            assert!((back.beta - q.beta).abs() <= 1e-14);
        }
    }

    #[test]
    fn diamond_membership() {
        let d = Diamond::new(1.0, 0.5).unwrap();
        assert!(d.contains(LabPoint { t: 0.0, x: 1.5 }));
        assert!(d.contains(LabPoint { t: 0.5, x: 1.0 }));
        assert!(!d.contains(LabPoint { t: 0.3, x: 1.4 }));
        assert!(Diamond::new(0.0, 0.0).is_err());
    }

    #[test]
    fn grid_endpoints_and_diagonal() {
        let g = NullGrid::new(1.0, 9).unwrap();
        assert_eq!(g.h, 0.25);
        assert_eq!(g.alpha(0), -1.0);
        assert_eq!(g.beta(8), 1.0);
        for i in 0..g.n {
            assert_eq!(g.lab(i, i).t, 0.0);
        }
    }

    #[test]
    fn forward_nodes_are_inside_and_injective() {
        let g = NullGrid::centered(0.5f64, 1.0, 17).unwrap();
        let d = g.diamond();
        let mut seen = std::collections::HashSet::new();
        for j in 0..g.n {
            for i in j..g.n {
                let p = g.lab(i, j);
                assert!(p.t >= 0.0);
                assert!(d.contains(p));
                assert!(seen.insert((p.t.to_bits(), p.x.to_bits())));
            }
        }
    }

    #[test]
    fn slice_sizes_and_rejection() {
        let g = NullGrid::new(1.0, 9).unwrap();
        let mut psi = NodeField::zeros(9);
        let phi = NodeField::zeros(9);
        for i in 0..9 {
            psi.set(i, i, C::new(i as f64, 0.0));
        }
        let s0 = time_slice(&g, &psi, &phi, Span::Forward, 0.0).unwrap();
        assert_eq!(s0.len(), 9);
        assert_eq!(s0.psi, psi.diagonal());
        let s1 = time_slice(&g, &psi, &phi, Span::Forward, g.h / 2.0).unwrap();
        assert_eq!(s1.len(), 8);
        assert_eq!(s1.x0, -1.0 + g.h / 2.0);
        let err = time_slice(&g, &psi, &phi, Span::Forward, 0.3).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("0.25") && msg.contains("0.375"), "{msg}");
        assert!(time_slice(&g, &psi, &phi, Span::Forward, -0.125).is_err());
        assert_eq!(
            time_slice(&g, &psi, &phi, Span::Full, -0.125).unwrap().len(),
            8
        );
    }
}
