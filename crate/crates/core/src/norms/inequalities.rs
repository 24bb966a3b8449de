//! Measured constants for the interval inequalities used by the local
//! theory: Hardy, Sobolev embedding, the product estimate, tiling of the
//! whole-line norm, and the null-frame embedding `L^2_beta L^inf_alpha`.
//!
//! Each checker returns `LHS / RHS` for one test function. The
//! constants are not known explicitly, so the report records the largest ratio over a
//! seeded family and whether it is stable when both the family and the
//! resolution are doubled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gagliardo::{extended_seminorm_sq, hs_norm, l2_sq, weighted_intensity};
use super::{l2_beta_linf_alpha, lp_norm, w1q_norm, yr_norm, FunctionSample, NormSpec};
use crate::error::Result;
use crate::geometry::NodeField;
use crate::model::{Component, Profile};
use crate::scalar::C;

/// One member of a seeded test family.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub component: Component,
}

impl TestFunction {
    pub fn name(&self) -> &'static str {
        self.component.profile().name()
    }

    pub fn sample(&self, a: f64, b: f64, n: usize) -> Result<FunctionSample<f64>> {
        FunctionSample::from_fn(a, b, n, |x| self.component.value(x))
    }
}

fn member_rng(seed: u64, k: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// `size` functions living in `[lo, hi]`, cycling through Gaussians, boxes
/// and rough random sine series. Member `k` depends only on `(seed, k)`, so
/// a larger family extends a smaller one.
pub fn test_family(seed: u64, size: usize, lo: f64, hi: f64) -> Result<Vec<TestFunction>> {
    let len = hi - lo;
    (0..size)
        .map(|k| {
            let mut rng = member_rng(seed, k);
            let profile = match k % 3 {
                0 => Profile::Gaussian {
                    amplitude: rng.gen_range(0.5..2.0),
                    width: rng.gen_range(0.05..0.25) * len,
                    center: lo + rng.gen_range(0.3..0.7) * len,
                    wavenumber: rng.gen_range(-8.0..8.0) / len,
                },
                1 => {
                    let a = lo + rng.gen_range(0.1..0.5) * len;
                    Profile::Box {
                        height: rng.gen_range(0.5..2.0),
                        a,
                        b: a + rng.gen_range(0.1..0.4) * len,
                    }
                }
                _ => {
                    let a = lo + rng.gen_range(0.05..0.3) * len;
                    Profile::SobolevRandom {
                        s: 0.3,
                        delta: 0.1,
                        a,
                        b: a + rng.gen_range(0.3..0.6) * len,
                        modes: 48,
                        amplitude: rng.gen_range(0.5..2.0),
                    }
                }
            };
            Ok(TestFunction {
                component: Component::new(profile, rng.gen())?,
            })
        })
        .collect()
}

/// `max_y ||f(x) |x - y|^-s||_{L^2_x(I)} / |f|_{H^s}` over the given `y`,
/// where the seminorm is that of the zero extension to the whole line.
pub fn hardy_ratio(f: &FunctionSample<f64>, s: f64, ys: &[f64]) -> Result<f64> {
    let rhs = extended_seminorm_sq(f, s)?.sqrt();
    Ok(ys
        .iter()
        .map(|&y| weighted_intensity(f, y, s).sqrt() / rhs)
        .fold(0.0, f64::max))
}

/// `||f||_{L^p} / ||f||_{H^s}` with `1/2 = 1/p + s`.
pub fn sobolev_ratio(f: &FunctionSample<f64>, s: f64) -> Result<f64> {
    let spec = NormSpec::new(s)?;
    Ok(lp_norm(f, spec.p)? / hs_norm(f, s)?)
}

/// `|| |g|^2 f ||_{H^s}` against
/// `||g||_inf^2 ||f||_{H^s} + ||g||_inf ||g||_{W^{1,q}} ||f||_{L^p}`.
pub fn product_ratio(f: &FunctionSample<f64>, g: &FunctionSample<f64>, s: f64) -> Result<f64> {
    let spec = NormSpec::new(s)?;
    let prod = FunctionSample::new(
        f.a,
        f.h,
        f.values.iter().zip(&g.values).map(|(a, b)| a * b.norm_sqr()).collect(),
    )?;
    let ginf = lp_norm(g, f64::INFINITY)?;
    let rhs = ginf * ginf * hs_norm(f, s)? + ginf * w1q_norm(g, spec.q)? * lp_norm(f, spec.p)?;
    Ok(hs_norm(&prod, s)? / rhs)
}

/// Whole-line `H^s` norm of the zero extension against
/// `(sum_j ||f||_{H^s([j - 1, j + 1])}^2)^(1/2)` over integer `j` with
/// `[j - 1, j + 1]` inside the sampled interval.
pub fn tiling_ratio(f: &FunctionSample<f64>, s: f64) -> Result<f64> {
    let lhs = (l2_sq(f) + extended_seminorm_sq(f, s)?).sqrt();
    let lo = (f.a + 1.0 - 1e-9).ceil() as i64;
    let hi = (f.b() - 1.0 + 1e-9).floor() as i64;
    let mut rhs = 0.0;
    for j in lo..=hi {
        let piece = f.restrict(j as f64 - 1.0, j as f64 + 1.0)?;
        rhs += hs_norm(&piece, s)?.powi(2);
    }
    Ok(lhs / rhs.sqrt())
}

/// `||psi*||_{L^2_beta L^inf_alpha} / ||psi||_{Y_R}`.
pub fn embedding_ratio(psi: &NodeField<f64>, h: f64) -> f64 {
    l2_beta_linf_alpha(psi, h) / yr_norm(psi, h)
}

/// Smooth random field on the square `[-1, 1]^2` of null coordinates.
fn random_field(seed: u64, k: usize, n: usize) -> NodeField<f64> {
    let mut rng = member_rng(seed ^ 0x51ed_270b, k);
    let bumps: Vec<[f64; 7]> = (0..3)
        .map(|_| {
            [
                rng.gen_range(0.2..1.5),
                rng.gen_range(-0.8..0.8),
                rng.gen_range(0.1..0.6),
                rng.gen_range(-0.8..0.8),
                rng.gen_range(0.1..0.6),
                rng.gen_range(-6.0..6.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            ]
        })
        .collect();
    let h = 2.0 / (n - 1) as f64;
    let mut field = NodeField::zeros(n);
    for j in 0..n {
        for i in 0..n {
            let (a, b) = (-1.0 + i as f64 * h, -1.0 + j as f64 * h);
            let mut v = C::new(0.0, 0.0);
            for &[amp, ca, wa, cb, wb, k, th] in &bumps {
                let ua = (a - ca) / wa;
                let ub = (b - cb) / wb;
                v += C::from_polar(amp * (-ua * ua - ub * ub).exp(), k * a + th);
            }
            field.set(i, j, v);
        }
    }
    field
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckerConfig {
    pub s: f64,
    pub seed: u64,
    /// Family size at the coarse level; the fine level doubles it.
    pub family_size: usize,
    /// Samples per unit length at the coarse level; the fine level doubles it.
    pub per_unit: usize,
}

impl Default for CheckerConfig {
    fn default() -> Self {
        Self {
            s: 0.2,
            seed: 7,
            family_size: 50,
            per_unit: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityRow {
    pub inequality: String,
    pub family_size: usize,
    pub spacing: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityVerdict {
    pub inequality: String,
    pub coarse: f64,
    pub fine: f64,
    /// `max(fine / coarse, coarse / fine)`.
    pub drift: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub config: CheckerConfig,
    pub rows: Vec<InequalityRow>,
    pub verdicts: Vec<InequalityVerdict>,
}

impl InequalityReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

pub const INEQUALITIES: [&str; 5] = ["hardy", "sobolev", "product", "tiling", "embedding"];

fn max_ratio(name: &str, cfg: &CheckerConfig, size: usize, per_unit: usize) -> Result<f64> {
    let s = cfg.s;
    let n_on = |len: f64| (len * per_unit as f64).round() as usize + 1;
    let ratios: Vec<f64> = match name {
        "hardy" => {
            let fam = test_family(cfg.seed, size, -1.0, 1.0)?;
            let ys = [-1.0, -0.4, 0.0, 0.3, 1.0, 1.5];
            fam.par_iter()
                .map(|t| hardy_ratio(&t.sample(-1.0, 1.0, n_on(2.0))?, s, &ys))
                .collect::<Result<_>>()?
        }
        "sobolev" => {
            let fam = test_family(cfg.seed, size, -1.0, 1.0)?;
            fam.par_iter()
                .map(|t| sobolev_ratio(&t.sample(-1.0, 1.0, n_on(2.0))?, s))
                .collect::<Result<_>>()?
        }
        "product" => {
            let fam = test_family(cfg.seed, size, -2.0, 2.0)?;
            let partners = test_family(cfg.seed ^ 0xabcd, 3 * size, -2.0, 2.0)?;
            fam.par_iter()
                .enumerate()
                .map(|(k, t)| {
                    // Gaussian partners only: the estimate needs g in W^{1,q}.
                    let g = partners[3 * k].sample(-2.0, 2.0, n_on(4.0))?;
                    product_ratio(&t.sample(-2.0, 2.0, n_on(4.0))?, &g, s)
                })
                .collect::<Result<_>>()?
        }
        "tiling" => {
            let fam = test_family(cfg.seed, size, -3.0, 3.0)?;
            fam.par_iter()
                .map(|t| tiling_ratio(&t.sample(-4.0, 4.0, n_on(8.0))?, s))
                .collect::<Result<_>>()?
        }
        "embedding" => {
            let n = n_on(2.0);
            let h = 2.0 / (n - 1) as f64;
            (0..size)
                .into_par_iter()
                .map(|k| embedding_ratio(&random_field(cfg.seed, k, n), h))
                .collect()
        }
        other => {
            return Err(crate::error::Error::Unknown {
                what: "inequality",
                name: other.to_string(),
            })
        }
    };
    Ok(ratios.into_iter().fold(0.0, |m: f64, r| if r.is_nan() { f64::NAN } else { m.max(r) }))
}

/// Run every checker at the configured level and at twice the family size
/// and resolution.
pub fn check_inequalities(cfg: &CheckerConfig) -> Result<InequalityReport> {
    NormSpec::new(cfg.s)?;
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for name in INEQUALITIES {
        let mut level = Vec::new();
        for (size, per_unit) in [(cfg.family_size, cfg.per_unit), (2 * cfg.family_size, 2 * cfg.per_unit)] {
            let m = max_ratio(name, cfg, size, per_unit)?;
            rows.push(InequalityRow {
                inequality: name.to_string(),
                family_size: size,
                spacing: 1.0 / per_unit as f64,
                max_ratio: m,
            });
            level.push(m);
        }
        let (coarse, fine) = (level[0], level[1]);
        let drift = (fine / coarse).max(coarse / fine);
        verdicts.push(InequalityVerdict {
            inequality: name.to_string(),
            coarse,
            fine,
            drift,
            pass: coarse.is_finite() && fine.is_finite() && coarse > 0.0 && drift < 2.0,
        });
    }
    Ok(InequalityReport {
        config: *cfg,
        rows,
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_is_prefix_stable() {
        let a = test_family(3, 6, -1.0, 1.0).unwrap();
        let b = test_family(3, 12, -1.0, 1.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.component.profile(), y.component.profile());
            assert_eq!(x.component.value(0.1), y.component.value(0.1));
        }
        let names: Vec<_> = a.iter().map(|t| t.name()).collect();
        assert_eq!(&names[..3], &["gaussian", "box", "sobolev_random"]);
    }

    #[test]
    fn product_of_constants_is_at_most_one() {
        let f = FunctionSample::from_real_fn(-2.0, 2.0, 129, |_| 1.7).unwrap();
        let g = FunctionSample::from_real_fn(-2.0, 2.0, 129, |_| 0.6).unwrap();
        let r = product_ratio(&f, &g, 0.2).unwrap();
        assert!(r <= 1.0 + 1e-12, "{r}");
        assert!(r > 0.0);
    }

    #[test]
    fn hardy_with_vanishing_neighbourhood() {
        // f = 0 near y = 0: both sides finite.
        let f = FunctionSample::from_real_fn(-1.0, 1.0, 257, |x| if x.abs() > 0.3 { x } else { 0.0 }).unwrap();
        let r = hardy_ratio(&f, 0.2, &[0.0]).unwrap();
        assert!(r.is_finite() && r > 0.0);
    }

    #[test]
    fn tiling_ratio_is_stable_for_gaussian() {
        let g = |x: f64| (-x * x).exp();
        let a = tiling_ratio(&FunctionSample::from_real_fn(-4.0, 4.0, 257, g).unwrap(), 0.2).unwrap();
        let b = tiling_ratio(&FunctionSample::from_real_fn(-4.0, 4.0, 513, g).unwrap(), 0.2).unwrap();
        assert!(a.is_finite() && (a / b - 1.0).abs() < 0.05, "{a} {b}");
    }

    #[test]
    fn embedding_constant_is_one() {
        for k in 0..5 {
            let n = 33;
            let r = embedding_ratio(&random_field(1, k, n), 2.0 / (n - 1) as f64);
            assert!(r <= 1.0 + 1e-2, "{r}");
        }
    }
}
