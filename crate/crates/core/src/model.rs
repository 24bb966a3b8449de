//! The Thirring system
//!
//! ```text
//! (d/dt + d/dx) psi = -i m phi - 2 i lambda |phi|^2 psi
//! (d/dt - d/dx) phi = -i m psi - 2 i lambda |psi|^2 phi
//! ```
//!
//! together with its conserved charge, initial-data families and the exact
//! massless solution used as a convergence oracle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{slice_at, time_slice, NodeField, NullGrid, Slice, Span};
use crate::quadrature::trapezoid_weight;
use crate::scalar::{imag, Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub m: T,
    pub lambda: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(m: T, lambda: T) -> Result<Self> {
        if !m.is_finite() || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "mass and coupling must be finite, got m = {m}, lambda = {lambda}"
            )));
        }
        Ok(Self { m, lambda })
    }

    /// Parameters of the time-reversed problem.
    pub fn reversed(self) -> Self {
        Self {
            m: -self.m,
            lambda: -self.lambda,
        }
    }
}

/// Right-hand side of the `psi` equation.
#[inline]
pub fn rhs_psi<T: Real>(phi: C<T>, psi: C<T>, p: &ModelParams<T>) -> C<T> {
    let two = T::lit(2.0);
    imag(-p.m) * phi + imag(-two * p.lambda * phi.norm_sqr()) * psi
}

/// Right-hand side of the `phi` equation.
#[inline]
pub fn rhs_phi<T: Real>(psi: C<T>, phi: C<T>, p: &ModelParams<T>) -> C<T> {
    let two = T::lit(2.0);
    imag(-p.m) * psi + imag(-two * p.lambda * psi.norm_sqr()) * phi
}

/// Trapezoidal charge `int |psi|^2 + |phi|^2 dx` of samples with spacing `h`.
pub fn charge<T: Real>(psi: &[C<T>], phi: &[C<T>], h: T) -> T {
    let n = psi.len().max(phi.len());
    let mut acc = T::zero();
    for k in 0..n {
        let a = psi.get(k).map_or(T::zero(), |v| v.norm_sqr());
        let b = phi.get(k).map_or(T::zero(), |v| v.norm_sqr());
        acc = acc + trapezoid_weight::<T>(k, n) * (a + b);
    }
    acc * h
}

/// Analytic description of one spinor component at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Zero,
    /// `amplitude * exp(-((x - center) / width)^2) * exp(i wavenumber x)`
    Gaussian {
        amplitude: f64,
        width: f64,
        center: f64,
        wavenumber: f64,
    },
    /// `height` on `(a, b)`; nodes sitting exactly on a jump carry half the
    /// intensity (`height / sqrt 2`) so trapezoidal charge is exact.
    Box { height: f64, a: f64, b: f64 },
    /// Box of width `w` and height `w^(-1/2)` centred at `center`: unit
    /// charge, sup norm growing as `w -> 0`.
    BoxFamily { width: f64, center: f64 },
    /// `amplitude * sum_{n <= modes} n^-(s + 1/2 + delta) e^{i theta_n}
    /// sin(n pi (x - a) / (b - a))` on `[a, b]`, zero outside; phases
    /// `theta_n` drawn from the data seed.
    SobolevRandom {
        s: f64,
        delta: f64,
        a: f64,
        b: f64,
        modes: usize,
        amplitude: f64,
    },
}

impl Profile {
    pub fn gaussian(amplitude: f64, width: f64, center: f64) -> Self {
        Profile::Gaussian {
            amplitude,
            width,
            center,
            wavenumber: 0.0,
        }
    }

    /// Gaussian with unit charge `int |f|^2 = charge`.
    pub fn gaussian_with_charge(charge: f64, width: f64, center: f64) -> Self {
        let amplitude = (charge / (width * (PI / 2.0).sqrt())).sqrt();
        Self::gaussian(amplitude, width, center)
    }

    pub fn unit_box(a: f64, b: f64) -> Self {
        Profile::Box { height: 1.0, a, b }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Profile::Zero => "zero",
            Profile::Gaussian { .. } => "gaussian",
            Profile::Box { .. } => "box",
            Profile::BoxFamily { .. } => "box_family",
            Profile::SobolevRandom { .. } => "sobolev_random",
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        match *self {
            Profile::Gaussian { width, .. } if !(width > 0.0) => {
                bad(format!("gaussian width must be positive, got {width}"))
            }
            Profile::Box { a, b, .. } if !(b > a) => {
                bad(format!("box interval must have positive width, got [{a}, {b}]"))
            }
            Profile::BoxFamily { width, .. } if !(width > 0.0) => {
                bad(format!("box_family width must be positive, got {width}"))
            }
            Profile::SobolevRandom { s, delta, a, b, modes, .. } => {
                if !(b > a) {
                    bad(format!("sobolev_random support must have positive width, got [{a}, {b}]"))
                } else if !(s >= 0.0) || !(delta >= 0.0) {
                    bad(format!("sobolev_random needs s >= 0 and delta >= 0, got s = {s}, delta = {delta}"))
                } else if modes == 0 {
                    bad("sobolev_random needs at least one mode".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// One materialized component: `tau^(1/2) * profile(tau * x)`.
#[derive(Debug, Clone)]
pub struct Component {
    profile: Profile,
    phases: Vec<f64>,
    tau: f64,
}

impl Component {
    pub fn new(profile: Profile, seed: u64) -> Result<Self> {
        profile.validate()?;
        let phases = match profile {
            Profile::SobolevRandom { modes, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..modes).map(|_| rng.gen_range(0.0..2.0 * PI)).collect()
            }
            _ => Vec::new(),
        };
        Ok(Self {
            profile,
            phases,
            tau: 1.0,
        })
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    fn base_value(&self, x: f64) -> Complex64 {
        match self.profile {
            Profile::Zero => Complex64::new(0.0, 0.0),
            Profile::Gaussian {
                amplitude,
                width,
                center,
                wavenumber,
            } => {
                let u = (x - center) / width;
                Complex64::from_polar(amplitude * (-u * u).exp(), wavenumber * x)
            }
            Profile::Box { height, a, b } => box_value(height, a, b, x),
            Profile::BoxFamily { width, center } => {
                box_value(width.powf(-0.5), center - 0.5 * width, center + 0.5 * width, x)
            }
            Profile::SobolevRandom {
                s,
                delta,
                a,
                b,
                amplitude,
                ..
            } => {
                if x < a || x > b {
                    return Complex64::new(0.0, 0.0);
                }
                let len = b - a;
                let decay = s + 0.5 + delta;
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &theta) in self.phases.iter().enumerate() {
                    let n = (k + 1) as f64;
                    let amp = n.powf(-decay) * (n * PI * (x - a) / len).sin();
                    acc += Complex64::from_polar(amp, theta);
                }
                acc * amplitude
            }
        }
    }

    pub fn value(&self, x: f64) -> Complex64 {
        self.base_value(self.tau * x) * self.tau.sqrt()
    }

    /// Exact or high-accuracy `int_a^b |value|^2 dx`.
    pub fn intensity_integral(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return -self.intensity_integral(b, a);
        }
        // tau |f(tau x)|^2 integrates to int_{tau a}^{tau b} |f|^2.
        let (a, b) = (self.tau * a, self.tau * b);
        match self.profile {
            Profile::Zero => 0.0,
            Profile::Gaussian {
                amplitude,
                width,
                center,
                ..
            } => {
                let r2 = std::f64::consts::SQRT_2;
                let scale = amplitude * amplitude * width * (PI / 2.0).sqrt() / 2.0;
                scale * (libm::erf(r2 * (b - center) / width) - libm::erf(r2 * (a - center) / width))
            }
            Profile::Box { height, a: lo, b: hi } => height * height * overlap(a, b, lo, hi),
            Profile::BoxFamily { width, center } => {
                overlap(a, b, center - 0.5 * width, center + 0.5 * width) / width
            }
            Profile::SobolevRandom { a: lo, b: hi, modes, .. } => {
                let (a, b) = (a.max(lo), b.min(hi));
                if b <= a {
                    return 0.0;
                }
                // Composite Gauss-Legendre, several panels per half-period.
                let panels = (8 * modes).max(16);
                gauss_legendre(|x| self.base_value(x).norm_sqr(), a, b, panels)
            }
        }
    }
}

fn box_value(height: f64, a: f64, b: f64, x: f64) -> Complex64 {
    let v = if x > a && x < b {
        height
    } else if x == a || x == b {
        height * std::f64::consts::FRAC_1_SQRT_2
    } else {
        0.0
    };
    Complex64::new(v, 0.0)
}

fn overlap(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    (b.min(hi) - a.max(lo)).max(0.0)
}

fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const NODES: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
        0.236_926_885_056_189_08,
    ];
    let w = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * w;
        for (x, wt) in NODES.iter().zip(WEIGHTS) {
            acc += wt * f(mid + 0.5 * w * x);
        }
    }
    acc * 0.5 * w
}

/// Serializable description of a full initial-data pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub f: Profile,
    pub g: Profile,
    pub seed: u64,
}

impl DataSpec {
    pub fn new(f: Profile, g: Profile, seed: u64) -> Self {
        Self { f, g, seed }
    }

    pub fn zero() -> Self {
        Self::new(Profile::Zero, Profile::Zero, 0)
    }

    pub fn source(&self) -> Result<DataSource> {
        Ok(DataSource {
            f: Component::new(self.f.clone(), self.seed)?,
            g: Component::new(self.g.clone(), self.seed.wrapping_add(0x9e37_79b9_7f4a_7c15))?,
        })
    }
}

/// Materialized analytic data `(f, g)`, evaluable anywhere.
#[derive(Debug, Clone)]
pub struct DataSource {
    pub f: Component,
    pub g: Component,
}

impl DataSource {
    /// Rescaled data `f_tau(x) = tau^(1/2) f(tau x)` (same for `g`).
    pub fn scaled(&self, tau: f64) -> Self {
        let mut out = self.clone();
        out.f.tau *= tau;
        out.g.tau *= tau;
        out
    }

    /// `(g, f)`: initial data of the time-reversed problem.
    pub fn swapped(&self) -> Self {
        Self {
            f: self.g.clone(),
            g: self.f.clone(),
        }
    }

    pub fn sample<T: Real>(&self, x0: T, h: T, count: usize) -> InitialData<T> {
        let mut f = Vec::with_capacity(count);
        let mut g = Vec::with_capacity(count);
        for k in 0..count {
            let x = (x0 + T::from_usize_lossy(k) * h).to_f64_lossy();
            let (a, b) = (self.f.value(x), self.g.value(x));
            f.push(C::new(T::lit(a.re), T::lit(a.im)));
            g.push(C::new(T::lit(b.re), T::lit(b.im)));
        }
        InitialData {
            x0,
            h,
            f,
            g,
            spec: None,
        }
    }

    pub fn sample_on<T: Real>(&self, grid: &NullGrid<T>) -> InitialData<T> {
        self.sample(grid.alpha(0), grid.h, grid.n)
    }
}

/// Samples of `(f, g)` on a uniform `x` grid, plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData<T> {
    pub x0: T,
    pub h: T,
    pub f: Vec<C<T>>,
    pub g: Vec<C<T>>,
    pub spec: Option<DataSpec>,
}

impl<T: Real> InitialData<T> {
    pub fn zeros(x0: T, h: T, count: usize) -> Self {
        Self {
            x0,
            h,
            f: vec![C::new(T::zero(), T::zero()); count],
            g: vec![C::new(T::zero(), T::zero()); count],
            spec: None,
        }
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn x(&self, k: usize) -> T {
        self.x0 + T::from_usize_lossy(k) * self.h
    }

    pub fn charge(&self) -> T {
        charge(&self.f, &self.g, self.h)
    }

    /// `||f||_2 + ||g||_2`.
    pub fn l2_sum(&self) -> T {
        charge(&self.f, &[], self.h).sqrt() + charge(&[], &self.g, self.h).sqrt()
    }

    /// Check that the samples live on the diagonal of `grid`.
    pub fn check_matches(&self, grid: &NullGrid<T>) -> Result<()> {
        let tol = T::lit(1e-9) * grid.h;
        if self.len() != grid.n
            || (self.h - grid.h).abs() > tol
            || (self.x0 - grid.alpha(0)).abs() > tol
        {
            return Err(Error::InvalidArgument(format!(
                "initial data ({} samples from {} step {}) does not match grid ({} nodes from {} step {})",
                self.len(),
                self.x0,
                self.h,
                grid.n,
                grid.alpha(0),
                grid.h
            )));
        }
        Ok(())
    }

    /// The contiguous window of samples `[start, start + count)`.
    pub fn window(&self, start: usize, count: usize) -> Self {
        Self {
            x0: self.x(start),
            h: self.h,
            f: self.f[start..start + count].to_vec(),
            g: self.g[start..start + count].to_vec(),
            spec: self.spec.clone(),
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            x0: self.x0,
            h: self.h,
            f: self.g.clone(),
            g: self.f.clone(),
            spec: self.spec.as_ref().map(|s| DataSpec::new(s.g.clone(), s.f.clone(), s.seed)),
        }
    }
}

/// Samples of both components on the nodes of a [`NullGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorPair<T> {
    pub psi: NodeField<T>,
    pub phi: NodeField<T>,
    pub span: Span,
}

impl<T: Real> SpinorPair<T> {
    pub fn zeros(n: usize, span: Span) -> Self {
        Self {
            psi: NodeField::zeros(n),
            phi: NodeField::zeros(n),
            span,
        }
    }

    /// Solution of the free problem: `psi = f(beta)`, `phi = g(alpha)`.
    pub fn free_transport(data: &InitialData<T>, span: Span) -> Self {
        let n = data.len();
        let mut out = Self::zeros(n, span);
        for j in 0..n {
            for i in 0..n {
                if span.contains(i, j) {
                    out.psi.set(i, j, data.f[j]);
                    out.phi.set(i, j, data.g[i]);
                }
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.psi.n
    }

    /// Largest nodal difference of either component.
    pub fn sup_diff(&self, other: &Self) -> T {
        self.psi
            .sup_diff(&other.psi, self.span)
            .max(self.phi.sup_diff(&other.phi, self.span))
    }

    pub fn slice(&self, grid: &NullGrid<T>, t: T) -> Result<Slice<T>> {
        time_slice(grid, &self.psi, &self.phi, self.span, t)
    }

    /// All forward slices `t = 0, h/2, ..., R`.
    pub fn forward_slices(&self, grid: &NullGrid<T>) -> Vec<Slice<T>> {
        (0..grid.n as isize)
            .map(|k| slice_at(grid, &self.psi, &self.phi, k))
            .collect()
    }
}

/// Sample `spec` at `count` points `x0 + k h`.
pub fn generate_data<T: Real>(spec: &DataSpec, x0: T, h: T, count: usize) -> Result<InitialData<T>> {
    if !(h > T::zero()) {
        return Err(Error::InvalidArgument(format!("sample spacing must be positive, got {h}")));
    }
    let mut data = spec.source()?.sample(x0, h, count);
    data.spec = Some(spec.clone());
    Ok(data)
}

/// Sample `spec` on the diagonal of `grid`.
pub fn generate_on_grid<T: Real>(spec: &DataSpec, grid: &NullGrid<T>) -> Result<InitialData<T>> {
    generate_data(spec, grid.alpha(0), grid.h, grid.n)
}

/// Exact solution for `m = 0`:
///
/// ```text
/// psi(t, x) = f(x - t) exp(-i lambda int_{x-t}^{x+t} |g|^2)
/// phi(t, x) = g(x + t) exp(-i lambda int_{x-t}^{x+t} |f|^2)
/// ```
///
/// Both moduli are transported unchanged, which decouples the phases.
pub fn massless_exact(
    data: &DataSource,
    m: f64,
    lambda: f64,
    t: f64,
    x: f64,
) -> Result<(Complex64, Complex64)> {
    if m != 0.0 {
        return Err(Error::InvalidArgument(format!(
            "the closed-form solution only exists for m = 0, got m = {m}"
        )));
    }
    let (lo, hi) = (x - t, x + t);
    let psi = data.f.value(lo) * Complex64::from_polar(1.0, -lambda * data.g.intensity_integral(lo, hi));
    let phi = data.g.value(hi) * Complex64::from_polar(1.0, -lambda * data.f.intensity_integral(lo, hi));
    Ok((psi, phi))
}

/// [`massless_exact`] at every node of `grid` inside `span`.
pub fn massless_exact_on_grid<T: Real>(
    data: &DataSource,
    lambda: f64,
    grid: &NullGrid<T>,
    span: Span,
) -> Result<(NodeField<f64>, NodeField<f64>)> {
    let n = grid.n;
    let mut psi = NodeField::zeros(n);
    let mut phi = NodeField::zeros(n);
    for j in 0..n {
        for i in 0..n {
            if span.contains(i, j) {
                let p = grid.lab(i, j);
                let (a, b) = massless_exact(data, 0.0, lambda, p.t.to_f64_lossy(), p.x.to_f64_lossy())?;
                psi.set(i, j, a);
                phi.set(i, j, b);
            }
        }
    }
    Ok((psi, phi))
}
