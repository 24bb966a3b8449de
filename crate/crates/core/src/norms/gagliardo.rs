//! Gagliardo seminorm of sampled data.
//!
//! The samples are read as a piecewise-linear interpolant and its double
//! integral is evaluated cell pair by cell pair. Equal and adjacent cells
//! use closed forms (finite for `s < 1/2`); cells further apart use
//! Gauss-Legendre moments of the kernel.

use rayon::prelude::*;

use super::{check_s, FunctionSample};
use crate::error::Result;
use crate::quadrature::{gauss_legendre, trapezoid_weight};
use crate::scalar::{Real, C};

/// `int int_{[0,1]^2} u^2 (u + v)^(-1-2s)` and `int int uv (u + v)^(-1-2s)`.
pub(crate) fn adjacent_moments(s: f64) -> (f64, f64) {
    let b = -2.0 * s;
    // int_0^1 u^2 (1 + u)^c du and int_0^1 u (1 + u)^c du via w = 1 + u.
    let m2 = |c: f64| {
        let p = |w: f64| w.powf(c + 3.0) / (c + 3.0) - 2.0 * w.powf(c + 2.0) / (c + 2.0) + w.powf(c + 1.0) / (c + 1.0);
        p(2.0) - p(1.0)
    };
    let m1 = |c: f64| {
        let p = |w: f64| w.powf(c + 2.0) / (c + 2.0) - w.powf(c + 1.0) / (c + 1.0);
        p(2.0) - p(1.0)
    };
    let tail = 1.0 / (b + 3.0);
    let j20 = (m2(b) - tail) / b;
    let j11 = (m1(b + 1.0) - tail) / (b + 1.0) - (m2(b) - tail) / b;
    (j20, j11)
}

/// `int_I int_I |f(x) - f(y)|^2 / |x - y|^(1 + 2s) dx dy` over the sampled
/// interval.
pub fn gagliardo_seminorm_sq<T: Real>(f: &FunctionSample<T>, s: T) -> Result<T> {
    check_s(s)?;
    let v = &f.values;
    let h = f.h;
    let two = T::lit(2.0);
    let hs = h.powf(T::one() - two * s);

    let diffs: Vec<C<T>> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let same = two * hs / ((two - two * s) * (T::lit(3.0) - two * s));
    let near_same: T = diffs.iter().map(|d| d.norm_sqr()).sum::<T>() * same;
    let (j20, j11) = adjacent_moments(s.to_f64_lossy());
    let (j20, j11) = (T::lit(j20), T::lit(j11));
    let near_adj: T = diffs
        .windows(2)
        .map(|d| (d[0].norm_sqr() + d[1].norm_sqr()) * j20 + two * (d[0] * d[1].conj()).re * j11)
        .sum::<T>()
        * hs
        * two;

    // Cells d >= 2 apart: the kernel is smooth on the pair, so the moments
    // below are exact to rounding.
    let cells = diffs.len();
    let rule = gauss_legendre(12);
    let moments: Vec<[T; 6]> = (0..cells)
        .map(|d| {
            let mut m = [0.0f64; 6];
            if d >= 2 {
                for &(u, wu) in &rule {
                    for &(v, wv) in &rule {
                        let k = wu * wv * (d as f64 + v - u).powf(-1.0 - 2.0 * s.to_f64_lossy());
                        for (slot, val) in m.iter_mut().zip([1.0, u, v, u * u, v * v, u * v]) {
                            *slot += k * val;
                        }
                    }
                }
            }
            m.map(T::lit)
        })
        .collect();
    // Row partials are collected before summing so the result does not
    // depend on how rayon splits the work.
    let rows: Vec<T> = (0..cells)
        .into_par_iter()
        .map(|k| {
            let c = diffs[k];
            let mut acc = T::zero();
            for l in k + 2..cells {
                let [m00, m10, m01, m20, m02, m11] = moments[l - k];
                let a = v[l] - v[k];
                let b = diffs[l];
                acc = acc + a.norm_sqr() * m00 + b.norm_sqr() * m02 + c.norm_sqr() * m20
                    + two * ((a * b.conj()).re * m01 - (a * c.conj()).re * m10 - (b * c.conj()).re * m11);
            }
            acc
        })
        .collect();
    let far = rows.into_iter().sum::<T>() * two * hs;
    Ok(near_same + near_adj + far)
}

/// `(||f||_{L^2}^2 + seminorm^2)^(1/2)` on the sampled interval.
pub fn hs_norm<T: Real>(f: &FunctionSample<T>, s: T) -> Result<T> {
    let semi = gagliardo_seminorm_sq(f, s)?;
    Ok((l2_sq(f) + semi).sqrt())
}

pub(crate) fn l2_sq<T: Real>(f: &FunctionSample<T>) -> T {
    let n = f.values.len();
    f.values
        .iter()
        .enumerate()
        .map(|(k, v)| trapezoid_weight::<T>(k, n) * v.norm_sqr())
        .sum::<T>()
        * f.h
}

/// `int_I |f(x)|^2 |x - y|^(-2s) dx`, integrating the piecewise-linear
/// interpolant of `|f|^2` exactly against the kernel.
pub fn weighted_intensity<T: Real>(f: &FunctionSample<T>, y: T, s: T) -> T {
    let two = T::lit(2.0);
    let e0 = T::one() - two * s;
    let e1 = two - two * s;
    let k0 = |z: T| z.signum() * z.abs().powf(e0) / e0;
    let k1 = |z: T| z.abs().powf(e1) / e1;
    let h = f.h;
    let mut acc = T::zero();
    for k in 0..f.values.len() - 1 {
        let (r0, r1) = (f.values[k].norm_sqr(), f.values[k + 1].norm_sqr());
        let z0 = f.x(k) - y;
        let z1 = z0 + h;
        let slope = (r1 - r0) / h;
        let base = r0 - slope * z0;
        acc = acc + base * (k0(z1) - k0(z0)) + slope * (k1(z1) - k1(z0));
    }
    acc
}

/// Whole-line seminorm squared of the zero extension of `f` outside its
/// interval: the interval seminorm plus the two exterior tails.
pub fn extended_seminorm_sq<T: Real>(f: &FunctionSample<T>, s: T) -> Result<T> {
    let inner = gagliardo_seminorm_sq(f, s)?;
    let tails = (weighted_intensity(f, f.a, s) + weighted_intensity(f, f.b(), s)) / s;
    Ok(inner + tails)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> FunctionSample<f64> {
        FunctionSample::from_real_fn(a, b, n, f).unwrap()
    }

    // Midpoint rule on an m x m grid, skipping the diagonal cells.
    fn brute(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize, s: f64) -> f64 {
        let h = (b - a) / m as f64;
        let mid: Vec<f64> = (0..m).map(|k| a + (k as f64 + 0.5) * h).collect();
        let vals: Vec<f64> = mid.iter().map(|&x| f(x)).collect();
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    acc += (vals[i] - vals[j]).powi(2) / (mid[i] - mid[j]).abs().powf(1.0 + 2.0 * s);
                }
            }
        }
        acc * h * h
    }

    #[test]
    fn moments_match_quadrature() {
        for s in [0.05, 0.25, 0.45] {
            let (j20, j11) = adjacent_moments(s);
            let m = 2000;
            let (mut a, mut b) = (0.0, 0.0);
            for i in 0..m {
                for j in 0..m {
                    let u = (i as f64 + 0.5) / m as f64;
                    let v = (j as f64 + 0.5) / m as f64;
                    let k = (u + v).powf(-1.0 - 2.0 * s);
                    a += u * u * k;
                    b += u * v * k;
                }
            }
            let w = 1.0 / (m * m) as f64;
            assert!((a * w - j20).abs() < 1e-3 * j20, "s = {s}: {} vs {j20}", a * w);
            assert!((b * w - j11).abs() < 1e-3 * j11, "s = {s}: {} vs {j11}", b * w);
        }
    }

    #[test]
    fn linear_function_closed_form() {
        // |x - y|^(1 - 2s) integrated over [-1, 1]^2.
        let s = 0.25;
        let exact = 2.0 * 2f64.powf(2.5) / (1.5 * 2.5);
        let f = sample(-1.0, 1.0, 257, |x| x);
        let got = gagliardo_seminorm_sq(&f, s).unwrap();
        assert!((got - exact).abs() < 1e-3 * exact, "{got} vs {exact}");
    }

    #[test]
    fn smooth_function_matches_brute_force() {
        let g = |x: f64| (-4.0 * x * x).exp() * (3.0 * x).cos();
        for s in [0.1, 0.3] {
            let f = sample(-1.0, 1.0, 129, g);
            let got = gagliardo_seminorm_sq(&f, s).unwrap();
            let oracle = brute(g, -1.0, 1.0, 1280, s);
            assert!((got - oracle).abs() < 0.01 * oracle, "s = {s}: {got} vs {oracle}");
        }
    }

    #[test]
    fn constants_have_zero_seminorm() {
        let f = sample(-2.0, 2.0, 65, |_| 3.0);
        assert_eq!(gagliardo_seminorm_sq(&f, 0.2).unwrap(), 0.0);
        let l2 = super::super::lp_norm(&f, 2.0).unwrap();
        assert_eq!(hs_norm(&f, 0.2).unwrap(), l2);
        assert!((l2 - 6.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_intensity_of_constant() {
        let f = sample(0.0, 1.0, 33, |_| 1.0);
        let s = 0.3;
        // int_0^1 x^(-0.6) dx = 1 / 0.4
        assert!((weighted_intensity(&f, 0.0, s) - 2.5).abs() < 1e-12);
        let inside = weighted_intensity(&f, 0.5, s);
        assert!((inside - 2.0 * 0.5f64.powf(0.4) / 0.4).abs() < 1e-12);
    }

    #[test]
    fn extended_seminorm_of_box() {
        // Indicator of [0, 1]: 2 int_0^1 (x^(-2s) + (1 - x)^(-2s)) / (2s) dx.
        let s = 0.2;
        let exact = 2.0 / (2.0 * s) * 2.0 / (1.0 - 2.0 * s);
        let f = sample(0.0, 1.0, 65, |_| 1.0);
        let got = extended_seminorm_sq(&f, s).unwrap();
        assert!((got - exact).abs() < 1e-12 * exact, "{got} vs {exact}");
    }
}
