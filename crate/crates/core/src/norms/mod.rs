//! Function-space quantities on sampled data: Lebesgue, fractional Sobolev,
//! `W^{1,q}` and mixed null-direction norms, the concentration function,
//! the reflection extension and numerical checks of the interval
//! inequalities.

mod gagliardo;
mod inequalities;

pub use gagliardo::{extended_seminorm_sq, gagliardo_seminorm_sq, hs_norm, weighted_intensity};
pub use inequalities::{
    check_inequalities, embedding_ratio, hardy_ratio, product_ratio, sobolev_ratio, test_family,
    tiling_ratio, CheckerConfig, InequalityReport, InequalityVerdict, INEQUALITIES, InequalityRow, TestFunction,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{NodeField, Slice};
use crate::quadrature::trapezoid_weight;
use crate::scalar::{Real, C};

/// Uniformly spaced complex samples on `[a, a + (n - 1) h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSample<T> {
    pub a: T,
    pub h: T,
    pub values: Vec<C<T>>,
}

impl<T: Real> FunctionSample<T> {
    pub fn new(a: T, h: T, values: Vec<C<T>>) -> Result<Self> {
        if values.len() < 4 {
            return Err(Error::InvalidArgument(format!(
                "a function sample needs at least 4 values, got {}",
                values.len()
            )));
        }
        if !(h > T::zero()) || !a.is_finite() {
            return Err(Error::InvalidArgument(format!("bad sample geometry a = {a}, h = {h}")));
        }
        Ok(Self { a, h, values })
    }

    /// Samples of `f` at `n` equally spaced points of `[a, b]`.
    pub fn from_fn(a: f64, b: f64, n: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        if n < 2 || !(b > a) {
            return Err(Error::InvalidArgument(format!("cannot sample [{a}, {b}] with {n} points")));
        }
        let h = (b - a) / (n - 1) as f64;
        let values = (0..n)
            .map(|k| {
                let v = f(a + k as f64 * h);
                C::new(T::lit(v.re), T::lit(v.im))
            })
            .collect();
        Self::new(T::lit(a), T::lit(h), values)
    }

    pub fn from_real_fn(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(a, b, n, |x| Complex64::new(f(x), 0.0))
    }

    pub fn psi_of(slice: &Slice<T>) -> Result<Self> {
        Self::new(slice.x0, slice.h, slice.psi.clone())
    }

    pub fn phi_of(slice: &Slice<T>) -> Result<Self> {
        Self::new(slice.x0, slice.h, slice.phi.clone())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, k: usize) -> T {
        self.a + T::from_usize_lossy(k) * self.h
    }

    pub fn b(&self) -> T {
        self.x(self.values.len() - 1)
    }

    /// Pointwise map of the samples.
    pub fn map(&self, f: impl Fn(C<T>) -> C<T>) -> Self {
        Self {
            a: self.a,
            h: self.h,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Samples with `x` in `[lo, hi]` (up to rounding).
    pub fn restrict(&self, lo: T, hi: T) -> Result<Self> {
        let eps = T::lit(1e-9) * self.h;
        let first = ((lo - self.a) / self.h - eps).ceil().max(T::zero()).to_usize().unwrap_or(0);
        let last = ((hi - self.a) / self.h + eps).floor().to_usize().unwrap_or(0).min(self.len() - 1);
        if last < first + 3 {
            return Err(Error::InvalidArgument(format!("[{lo}, {hi}] holds fewer than 4 samples")));
        }
        Self::new(self.x(first), self.h, self.values[first..=last].to_vec())
    }
}

/// Exponents tied to a regularity `s`: `1/2 = 1/p + s` and `1/q = 1 - 2s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec<T> {
    pub s: T,
    pub p: T,
    pub q: T,
}

impl<T: Real> NormSpec<T> {
    pub fn new(s: T) -> Result<Self> {
        check_s(s)?;
        let half = T::lit(0.5);
        Ok(Self {
            s,
            p: T::one() / (half - s),
            q: T::one() / (T::one() - s - s),
        })
    }
}

pub(crate) fn check_s<T: Real>(s: T) -> Result<()> {
    if s > T::zero() && s < T::lit(0.5) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("regularity s = {s} must lie in (0, 1/2)")))
    }
}

/// Reflection extension from `[-R, R]` to `[-2R, 2R]` with the taper
/// `rho(x) = 1 - (10 u^3 - 15 u^4 + 6 u^5)`, `u = (|x| - R) / R`, on
/// `R <= |x| <= 2R`; `rho = 1` inside and `0` outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionSpec<T> {
    pub radius: T,
}

impl<T: Real> ExtensionSpec<T> {
    pub fn rho(&self, x: T) -> T {
        let u = (x.abs() - self.radius) / self.radius;
        if u <= T::zero() {
            T::one()
        } else if u >= T::one() {
            T::zero()
        } else {
            let u3 = u * u * u;
            T::one() - u3 * (T::lit(10.0) - T::lit(15.0) * u + T::lit(6.0) * u * u)
        }
    }
}

/// `E f(x) = rho(x) f(+-2R - x)` for `+-x > R`, `f` on `[-R, R]`.
pub fn extend<T: Real>(f: &FunctionSample<T>, spec: &ExtensionSpec<T>) -> Result<FunctionSample<T>> {
    let r = spec.radius;
    let m = f.len() - 1;
    let q = m / 2;
    let tol = T::lit(1e-9) * f.h;
    if m % 2 != 0 || (f.a + r).abs() > tol || (f.b() - r).abs() > tol {
        return Err(Error::InvalidArgument(format!(
            "extension needs samples on [-R, R] = [{}, {r}] with an even number of cells",
            -r
        )));
    }
    let values = (0..=4 * q)
        .map(|k| {
            let x = f.x(0) - r + T::from_usize_lossy(k) * f.h;
            if k < q {
                f.values[q - k] * spec.rho(x)
            } else if k <= 3 * q {
                f.values[k - q]
            } else {
                f.values[5 * q - k] * spec.rho(x)
            }
        })
        .collect();
    FunctionSample::new(f.a - r, f.h, values)
}

/// Trapezoidal `L^p` norm, or the sample maximum for `p = inf`.
pub fn lp_norm<T: Real>(f: &FunctionSample<T>, p: T) -> Result<T> {
    lp_of(&f.values, f.h, p)
}

fn lp_of<T: Real>(v: &[C<T>], h: T, p: T) -> Result<T> {
    if !(p >= T::one()) {
        return Err(Error::InvalidArgument(format!("L^p needs p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(v.iter().map(|z| z.norm()).fold(T::zero(), T::max));
    }
    let n = v.len();
    let s: T = v
        .iter()
        .enumerate()
        .map(|(k, z)| trapezoid_weight::<T>(k, n) * z.norm().powf(p))
        .sum();
    Ok((s * h).powf(T::one() / p))
}

/// Second-order finite-difference derivative: central inside, one-sided at
/// the ends.
pub fn derivative<T: Real>(v: &[C<T>], h: T) -> Vec<C<T>> {
    let n = v.len();
    let two_h = h + h;
    (0..n)
        .map(|k| {
            if k == 0 {
                (v[0] * T::lit(-3.0) + v[1] * T::lit(4.0) - v[2]) / two_h
            } else if k + 1 == n {
                (v[n - 1] * T::lit(3.0) - v[n - 2] * T::lit(4.0) + v[n - 3]) / two_h
            } else {
                (v[k + 1] - v[k - 1]) / two_h
            }
        })
        .collect()
}

/// `||f||_{L^q} + ||f'||_{L^q}`.
pub fn w1q_norm<T: Real>(f: &FunctionSample<T>, q: T) -> Result<T> {
    Ok(lp_of(&f.values, f.h, q)? + lp_of(&derivative(&f.values, f.h), f.h, q)?)
}

fn mixed_norm<T: Real>(field: &NodeField<T>, h: T, along_alpha: bool) -> T {
    let n = field.n;
    let at = |outer: usize, inner: usize| if along_alpha { field.get(outer, inner) } else { field.get(inner, outer) };
    let l2 = |v: &[C<T>]| {
        v.iter()
            .enumerate()
            .map(|(k, z)| trapezoid_weight::<T>(k, n) * z.norm_sqr())
            .sum::<T>()
            .sqrt()
            * h.sqrt()
    };
    // lines[outer][inner]: outer is the sup/derivative direction.
    let lines: Vec<Vec<C<T>>> = (0..n).map(|o| (0..n).map(|i| at(o, i)).collect()).collect();
    let sup = lines.iter().map(|l| l2(l)).fold(T::zero(), T::max);
    let mut deriv = T::zero();
    // Differentiate across lines, then transpose back to (outer, inner).
    let cols: Vec<Vec<C<T>>> = (0..n)
        .map(|inner| derivative(&lines.iter().map(|l| l[inner]).collect::<Vec<_>>(), h))
        .collect();
    for o in 0..n {
        let line: Vec<C<T>> = cols.iter().map(|c| c[o]).collect();
        deriv = deriv + trapezoid_weight::<T>(o, n) * l2(&line);
    }
    sup + deriv * h
}

/// `||psi*||_{L^inf_alpha L^2_beta} + ||d_alpha psi*||_{L^1_alpha L^2_beta}`
/// of a field stored on a full square grid with spacing `h`.
pub fn yr_norm<T: Real>(psi: &NodeField<T>, h: T) -> T {
    mixed_norm(psi, h, true)
}

/// The same with the roles of `alpha` and `beta` exchanged.
pub fn xr_norm<T: Real>(phi: &NodeField<T>, h: T) -> T {
    mixed_norm(phi, h, false)
}

/// `||psi*||_{L^2_beta L^inf_alpha}`.
pub fn l2_beta_linf_alpha<T: Real>(psi: &NodeField<T>, h: T) -> T {
    let n = psi.n;
    let s: T = (0..n)
        .map(|j| {
            let m = (0..n).map(|i| psi.get(i, j).norm_sqr()).fold(T::zero(), T::max);
            trapezoid_weight::<T>(j, n) * m
        })
        .sum();
    (s * h).sqrt()
}

/// `sup_x int_{|x - y| < r} |f|^2 + |g|^2 dy` for samples with spacing `h`,
/// the density read as piecewise linear. Windows are clipped to the sampled
/// interval; centres range over nodes and nodes shifted by `+-r`.
pub fn concentration_function<T: Real>(f: &[C<T>], g: &[C<T>], h: T, r: T) -> T {
    let n = f.len().max(g.len());
    if n < 2 {
        return T::zero();
    }
    let rho: Vec<T> = (0..n)
        .map(|k| f.get(k).map_or(T::zero(), |v| v.norm_sqr()) + g.get(k).map_or(T::zero(), |v| v.norm_sqr()))
        .collect();
    let mut cum = vec![T::zero(); n];
    for k in 1..n {
        cum[k] = cum[k - 1] + (rho[k - 1] + rho[k]) * h * T::lit(0.5);
    }
    let len = h * T::from_usize_lossy(n - 1);
    // Cumulative mass at position x in [0, len].
    let at = |x: T| -> T {
        let x = x.max(T::zero()).min(len);
        let k = (x / h).floor().to_usize().unwrap_or(0).min(n - 2);
        let t = x - h * T::from_usize_lossy(k);
        cum[k] + rho[k] * t + (rho[k + 1] - rho[k]) * t * t / (h + h)
    };
    let mut best = T::zero();
    for k in 0..n {
        let x = h * T::from_usize_lossy(k);
        for c in [x, x - r, x + r] {
            best = best.max(at(c + r) - at(c - r));
        }
    }
    best
}

/// Summary of one sampled function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub interval: [f64; 2],
    pub samples: usize,
    pub l2: f64,
    pub linf: f64,
    pub lp: f64,
    pub seminorm: f64,
    pub hs: f64,
    pub w1q: f64,
}

impl NormReport {
    pub fn of<T: Real>(f: &FunctionSample<T>, s: T) -> Result<Self> {
        let spec = NormSpec::new(s)?;
        let l2 = lp_norm(f, T::lit(2.0))?;
        let semi = gagliardo_seminorm_sq(f, s)?;
        Ok(Self {
            s: s.to_f64_lossy(),
            p: spec.p.to_f64_lossy(),
            q: spec.q.to_f64_lossy(),
            interval: [f.a.to_f64_lossy(), f.b().to_f64_lossy()],
            samples: f.len(),
            l2: l2.to_f64_lossy(),
            linf: lp_norm(f, T::infinity())?.to_f64_lossy(),
            lp: lp_norm(f, spec.p)?.to_f64_lossy(),
            seminorm: semi.sqrt().to_f64_lossy(),
            hs: (l2 * l2 + semi).sqrt().to_f64_lossy(),
            w1q: w1q_norm(f, spec.q)?.to_f64_lossy(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{NullGrid, Span};
    use crate::model::{generate_data, DataSpec, Profile, SpinorPair};

    fn box01(n: usize) -> FunctionSample<f64> {
        FunctionSample::from_real_fn(0.0, 1.0, n, |_| 1.0).unwrap()
    }

    #[test]
    fn lp_examples() {
        assert!((lp_norm(&box01(65), 2.0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(lp_norm(&box01(65), f64::INFINITY).unwrap(), 1.0);
        let lin = FunctionSample::from_real_fn(0.0, 1.0, 1025, |x| x).unwrap();
        assert!((lp_norm(&lin, 2.0).unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-6);
        assert!(lp_norm(&lin, 0.5).is_err());
    }

    #[test]
    fn sample_validation() {
        assert!(FunctionSample::<f64>::new(0.0, 0.1, vec![C::new(0.0, 0.0); 3]).is_err());
        assert!(FunctionSample::<f64>::new(0.0, 0.0, vec![C::new(0.0, 0.0); 8]).is_err());
        assert!(hs_norm(&box01(9), 0.5).is_err());
        assert!(hs_norm(&box01(9), 0.0).is_err());
    }

    #[test]
    fn norm_spec_ranges() {
        let n = NormSpec::new(0.2f64).unwrap();
        assert!((1.0 / (n.p as f64) + 0.2 - 0.5).abs() < 1e-15);
        assert!((1.0 / (n.q as f64) - 0.6).abs() < 1e-15);
        for s in [0.01, 0.1, 0.24] {
            let n = NormSpec::new(s).unwrap();
            assert!(n.p > 2.0 && n.p < 4.0 && n.q > 1.0 && n.q < 2.0);
        }
    }

    #[test]
    fn w1q_examples() {
        let c = FunctionSample::<f64>::from_real_fn(0.0, 1.0, 33, |_| 2.5).unwrap();
        assert!((w1q_norm(&c, 1.5).unwrap() - 2.5).abs() < 1e-13);
        let lin = FunctionSample::from_real_fn(0.0, 1.0, 2049, |x| x).unwrap();
        let expect = (1.0f64 / 3.0).sqrt() + 1.0;
        assert!((w1q_norm(&lin, 2.0).unwrap() - expect).abs() < 1e-6);
    }

    #[test]
    fn w1q_gaussian_is_second_order() {
        // int e^{-2x^2} = sqrt(pi/2), int 16 x^2 e^{-4x^2}... use q = 2 with width 1:
        // ||e^{-x^2}||_2^2 = sqrt(pi/2), ||2x e^{-x^2}||_2^2 = sqrt(pi/2).
        let exact = 2.0 * (std::f64::consts::PI / 2.0).sqrt().sqrt();
        let mut errs = Vec::new();
        for n in [161, 321, 641] {
            let f = FunctionSample::from_real_fn(-8.0, 8.0, n, |x| (-x * x).exp()).unwrap();
            errs.push((w1q_norm(&f, 2.0).unwrap() - exact).abs());
        }
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    }

    #[test]
    fn concentration_examples() {
        let zero = vec![C::new(0.0, 0.0); 33];
        assert_eq!(concentration_function(&zero, &zero, 0.1, 0.5), 0.0);
        let spec = DataSpec::new(Profile::unit_box(0.0, 1.0), Profile::Zero, 0);
        let d = generate_data::<f64>(&spec, -1.0, 1.0 / 64.0, 193).unwrap();
        assert!((concentration_function(&d.f, &d.g, d.h, 1.0) - 1.0).abs() < 1e-12);
        assert!((concentration_function(&d.f, &d.g, d.h, 0.25) - 0.5).abs() < 1e-12);
        let mut last = 0.0;
        for k in 1..40 {
            let c = concentration_function(&d.f, &d.g, d.h, k as f64 * 0.03);
            assert!(c >= last && c <= 1.0 + 1e-12);
            last = c;
        }
    }

    #[test]
    fn extension_properties() {
        let r = 1.0;
        let spec = ExtensionSpec { radius: r };
        assert_eq!(spec.rho(r), 1.0);
        assert_eq!(spec.rho(-r), 1.0);
        assert_eq!(spec.rho(2.0 * r), 0.0);
        assert!((0..400).all(|k| spec.rho(-3.0 + 0.015 * k as f64).abs() <= 1.0));

        let c = FunctionSample::from_real_fn(-1.0, 1.0, 65, |_| 2.0).unwrap();
        let e = extend(&c, &spec).unwrap();
        assert_eq!(e.len(), 129);
        for k in 0..e.len() {
            assert!((e.values[k].re - 2.0 * spec.rho(e.x(k))).abs() < 1e-14);
        }
        let lin = FunctionSample::from_real_fn(-1.0, 1.0, 65, |x| x).unwrap();
        let e = extend(&lin, &spec).unwrap();
        for k in 0..e.len() {
            let x = e.x(k);
            if x >= r {
                assert!((e.values[k].re - spec.rho(x) * (2.0 * r - x)).abs() < 1e-13);
            }
            if x.abs() <= r {
                assert!((e.values[k].re - x).abs() < 1e-13);
            }
        }
        assert!(lp_norm(&e, 2.0).unwrap() <= 2.0 * lp_norm(&lin, 2.0).unwrap());
        assert!(extend(&FunctionSample::from_real_fn(-1.0, 0.9, 64, |x| x).unwrap(), &spec).is_err());
    }

    #[test]
    fn yr_norm_of_free_field() {
        let n = 65;
        let grid = NullGrid::new(1.0, n).unwrap();
        let spec = DataSpec::new(Profile::gaussian(1.0, 0.3, 0.1), Profile::gaussian(0.7, 0.4, -0.2), 0);
        let d = generate_data::<f64>(&spec, -1.0, grid.h, n).unwrap();
        let free = SpinorPair::free_transport(&d, Span::Full);
        let fl2 = lp_norm(&FunctionSample::new(d.x0, d.h, d.f.clone()).unwrap(), 2.0).unwrap();
        let gl2 = lp_norm(&FunctionSample::new(d.x0, d.h, d.g.clone()).unwrap(), 2.0).unwrap();
        assert!((yr_norm(&free.psi, grid.h) - fl2).abs() < 1e-13);
        assert!((xr_norm(&free.phi, grid.h) - gl2).abs() < 1e-13);
        assert_eq!(yr_norm(&NodeField::<f64>::zeros(n), grid.h), 0.0);
    }

    #[test]
    fn homogeneity() {
        let f = FunctionSample::<f64>::from_real_fn(-1.0, 1.0, 129, |x| (3.0 * x).sin() + x * x).unwrap();
        let c = C::new(-2.0, 1.5);
        let g = f.map(|v| v * c);
        let (a, b) = (hs_norm(&f, 0.3).unwrap(), hs_norm(&g, 0.3).unwrap());
        assert!((b - c.norm() * a).abs() < 1e-12 * b);
    }

    #[test]
    fn report_serializes() {
        let r = NormReport::of(&box01(33), 0.25).unwrap();
        let js = serde_json::to_string(&r).unwrap();
        let back: NormReport = serde_json::from_str(&js).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.seminorm, 0.0);
    }
}
