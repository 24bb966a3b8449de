//! Small quadrature and fitting helpers shared across modules.

use crate::scalar::Real;

/// Composite trapezoid weight (in units of `h`) of node `k` out of `n`.
#[inline]
pub fn trapezoid_weight<T: Real>(k: usize, n: usize) -> T {
    if n <= 1 {
        T::zero()
    } else if k == 0 || k + 1 == n {
        T::lit(0.5)
    } else {
        T::one()
    }
}

/// `h * sum w_k v_k` with trapezoid weights.
pub fn trapezoid<T: Real>(values: impl ExactSizeIterator<Item = T>, h: T) -> T {
    let n = values.len();
    values
        .enumerate()
        .map(|(k, v)| trapezoid_weight::<T>(k, n) * v)
        .sum::<T>()
        * h
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                // Legendre recurrence for P_n(x) and P_n'(x).
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    (p0, p1) = (p1, ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k);
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            ((1.0 - x) / 2.0, 1.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(6);
        for p in 0..12 {
            let got: f64 = rule.iter().map(|(x, w)| w * x.powi(p)).sum();
            assert!((got - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "degree {p}: {got}");
        }
    }

    #[test]
    fn slope_of_power_law() {
        let x = [0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|h| 3.0 * h * h).collect();
        assert!((log_log_slope(&x, &y) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_of_linear_is_exact() {
        let v = (0..11).map(|k| k as f64 / 10.0);
        assert!((trapezoid(v, 0.1) - 0.5).abs() < 1e-15);
    }
}
