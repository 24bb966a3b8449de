use serde::{Deserialize, Serialize};

use super::{glue_solve, GlueMode, SolverConfig};
use crate::error::{Error, Result};
use crate::geometry::Slice;
use crate::model::{charge, InitialData, ModelParams};
use crate::norms::concentration_function;
use crate::scalar::{czero, Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConcentrationRadius<T> {
    /// Largest dyadic radius whose windows all hold less than `epsilon`.
    Found { radius: T, mass: T },
    /// Even the smallest admissible window (radius >= h) holds `epsilon`.
    TooConcentrated { smallest: T, mass: T },
}

impl<T: Real> ConcentrationRadius<T> {
    pub fn radius(&self) -> Option<T> {
        match *self {
            ConcentrationRadius::Found { radius, .. } => Some(radius),
            ConcentrationRadius::TooConcentrated { .. } => None,
        }
    }
}

/// Largest `r` in `{r_max 2^-k, k >= 0, r >= h}` with
/// `sup_x int_{|x - y| < r} |f|^2 + |g|^2 dy < epsilon`.
pub fn concentration_radius<T: Real>(
    f: &[C<T>],
    g: &[C<T>],
    h: T,
    epsilon: T,
    r_max: T,
) -> ConcentrationRadius<T> {
    let mut r = r_max;
    let mut mass = concentration_function(f, g, h, r);
    loop {
        if mass < epsilon {
            return ConcentrationRadius::Found { radius: r, mass };
        }
        let next = r * T::lit(0.5);
        if next < h {
            return ConcentrationRadius::TooConcentrated { smallest: r, mass };
        }
        r = next;
        mass = concentration_function(f, g, h, r);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig<T> {
    pub solver: SolverConfig<T>,
    /// Window-charge threshold for choosing the step radius.
    pub epsilon: T,
    /// Largest window radius tried.
    pub r_max: T,
}

impl<T: Real> ContinuationConfig<T> {
    pub fn new(solver: SolverConfig<T>) -> Self {
        Self {
            epsilon: solver.epsilon_small,
            solver,
            r_max: T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationStep<T> {
    /// Start time of the step.
    pub t: T,
    /// Diamond radius used for the step; the step advances by `radius / 2`.
    pub radius: T,
    pub window_radius: T,
    pub window_mass: T,
    pub charge: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationLog<T> {
    pub steps: Vec<ContinuationStep<T>>,
    pub final_time: T,
    pub final_charge: T,
    pub abort: Option<String>,
}

impl<T: Real> ContinuationLog<T> {
    pub fn min_radius(&self) -> Option<T> {
        self.steps.iter().map(|s| s.radius).reduce(T::min)
    }
}

/// Advance `data` to `t_target` by repeated local solves on tiles whose
/// size follows the concentration function.
pub fn continue_globally<T: Real>(
    data: &InitialData<T>,
    params: &ModelParams<T>,
    t_target: T,
    config: &ContinuationConfig<T>,
) -> Result<(ContinuationLog<T>, Slice<T>)> {
    let (log, end) = continue_globally_with(data, params, t_target, config, |_| {});
    end.map(|s| (log, s))
}

/// As [`continue_globally`], calling `observe` on the initial slice and on
/// the slice reached after every step. The log is returned even when the run
/// aborts.
///
/// The computational interval stays fixed; samples within `T_j` of either
/// end are refilled with zeros after each step, which is exact as long as
/// the solution has not reached the ends (checked before every step).
/// `t_target` is rounded down to a multiple of the spacing.
pub fn continue_globally_with<T: Real>(
    data: &InitialData<T>,
    params: &ModelParams<T>,
    t_target: T,
    config: &ContinuationConfig<T>,
    mut observe: impl FnMut(&Slice<T>),
) -> (ContinuationLog<T>, Result<Slice<T>>) {
    let h = data.h;
    let mut log = ContinuationLog {
        steps: Vec::new(),
        final_time: T::zero(),
        final_charge: data.charge(),
        abort: None,
    };
    let mut slice = Slice {
        t: T::zero(),
        x0: data.x0,
        h,
        psi: data.f.clone(),
        phi: data.g.clone(),
    };
    observe(&slice);
    if !(t_target > T::zero()) {
        let err = Error::InvalidArgument(format!("target time must be positive, got {t_target}"));
        log.abort = Some(err.to_string());
        return (log, Err(err));
    }
    let total_steps = (t_target / h + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
    let mut done = 0usize;
    let cap = (params.m != T::zero()).then(|| T::one() / (T::lit(16.0) * params.m.abs()));

    let result = (|| -> Result<()> {
        while done < total_steps {
            let t = T::from_usize_lossy(done) * h;
            let cr = concentration_radius(&slice.psi, &slice.phi, h, config.epsilon, config.r_max);
            let (window_radius, window_mass) = match cr {
                ConcentrationRadius::Found { radius, mass } => (radius, mass),
                ConcentrationRadius::TooConcentrated { smallest, .. } => {
                    return Err(Error::ConcentrationSuspected {
                        t: t.to_f64_lossy(),
                        radius: (smallest * T::lit(0.5)).to_f64_lossy(),
                        min_radius: (h + h).to_f64_lossy(),
                    })
                }
            };
            // Radius in units of 2h, strictly below the mass cap.
            let mut units = (window_radius * T::lit(0.5) / (h + h)).floor().to_usize().unwrap_or(0);
            if let Some(cap) = cap {
                while units > 0 && T::from_usize_lossy(units) * (h + h) >= cap {
                    units -= 1;
                }
            }
            let radius = T::from_usize_lossy(units) * (h + h);
            if units == 0 {
                return Err(Error::ConcentrationSuspected {
                    t: t.to_f64_lossy(),
                    radius: radius.to_f64_lossy(),
                    min_radius: (h + h).to_f64_lossy(),
                });
            }
            let advance = units.min(total_steps - done);
            check_edges(&slice, 2 * units, t)?;

            let current = InitialData {
                x0: slice.x0,
                h,
                f: slice.psi.clone(),
                g: slice.phi.clone(),
                spec: None,
            };
            let sol = glue_solve(
                &current,
                params,
                T::from_usize_lossy(advance) * h,
                &config.solver,
                GlueMode::Tiled { radius },
            )?;
            log.steps.push(ContinuationStep {
                t,
                radius,
                window_radius,
                window_mass,
                charge: current.charge(),
            });
            let end = sol.last();
            let mut psi = vec![czero(); advance];
            psi.extend_from_slice(&end.psi);
            psi.resize(current.len(), czero());
            let mut phi = vec![czero(); advance];
            phi.extend_from_slice(&end.phi);
            phi.resize(current.len(), czero());
            done += advance;
            slice = Slice {
                t: T::from_usize_lossy(done) * h,
                x0: current.x0,
                h,
                psi,
                phi,
            };
            observe(&slice);
        }
        Ok(())
    })();

    log.final_time = slice.t;
    log.final_charge = charge(&slice.psi, &slice.phi, h);
    match result {
        Ok(()) => (log, Ok(slice)),
        Err(e) => {
            log.abort = Some(e.to_string());
            (log, Err(e))
        }
    }
}

/// The solution must vanish within `width` samples of both ends.
fn check_edges<T: Real>(slice: &Slice<T>, width: usize, t: T) -> Result<()> {
    let n = slice.len();
    let width = width.min(n);
    let peak = slice
        .psi
        .iter()
        .chain(&slice.phi)
        .map(|v| v.norm())
        .fold(T::zero(), T::max);
    let edge = (0..width)
        .chain(n - width..n)
        .map(|k| slice.psi[k].norm().max(slice.phi[k].norm()))
        .fold(T::zero(), T::max);
    if edge > T::lit(1e-12) * (T::one() + peak) {
        return Err(Error::DomainExhausted {
            t: t.to_f64_lossy(),
            amplitude: edge.to_f64_lossy(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_data, DataSpec, Profile};
    use crate::solver::Scheme;

    #[test]
    fn radius_of_unit_box() {
        let spec = DataSpec::new(Profile::unit_box(0.0, 1.0), Profile::Zero, 0);
        let d: InitialData<f64> = generate_data(&spec, -2.0, 1.0 / 256.0, 1025).unwrap();
        match concentration_radius(&d.f, &d.g, d.h, 0.5, 0.5) {
            ConcentrationRadius::Found { radius, mass } => {
                assert_eq!(radius, 0.125);
                assert!((mass - 0.25).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_data_and_large_epsilon_give_r_max() {
        let zero = InitialData::<f64>::zeros(-1.0, 1.0 / 64.0, 129);
        assert_eq!(concentration_radius(&zero.f, &zero.g, zero.h, 0.1, 0.5).radius(), Some(0.5));
        let spec = DataSpec::new(Profile::unit_box(0.0, 1.0), Profile::Zero, 0);
        let d: InitialData<f64> = generate_data(&spec, -2.0, 1.0 / 64.0, 257).unwrap();
        assert_eq!(concentration_radius(&d.f, &d.g, d.h, 1.01, 4.0).radius(), Some(4.0));
    }

    #[test]
    fn radius_is_monotone_in_epsilon() {
        let spec = DataSpec::new(Profile::gaussian(1.0, 0.3, 0.0), Profile::gaussian(0.5, 0.2, 0.4), 0);
        let d: InitialData<f64> = generate_data(&spec, -2.0, 1.0 / 128.0, 513).unwrap();
        let mut last = f64::INFINITY;
        for k in 0..8 {
            let eps = 0.8 * 0.5f64.powi(k);
            let r = concentration_radius(&d.f, &d.g, d.h, eps, 1.0).radius().unwrap_or(0.0);
            assert!(r <= last);
            last = r;
        }
    }

    #[test]
    fn too_concentrated_is_flagged() {
        let spec = DataSpec::new(Profile::BoxFamily { width: 1.0 / 64.0, center: 0.0 }, Profile::Zero, 0);
        let d: InitialData<f64> = generate_data(&spec, -1.0, 1.0 / 128.0, 257).unwrap();
        assert!(concentration_radius(&d.f, &d.g, d.h, 0.1, 1.0).radius().is_none());
        let params = ModelParams::new(1.0, 1.0).unwrap();
        let config = ContinuationConfig::new(SolverConfig::default());
        match continue_globally(&d, &params, 0.5, &config) {
            Err(Error::ConcentrationSuspected { .. }) => {}
            other => panic!("expected concentration abort, got {other:?}"),
        }
    }

    #[test]
    fn zero_data_reaches_target_in_maximal_steps() {
        let zero = InitialData::<f64>::zeros(-4.0, 1.0 / 32.0, 257);
        let params = ModelParams::new(0.0, 1.0).unwrap();
        let config = ContinuationConfig::new(SolverConfig::default());
        let (log, end) = continue_globally(&zero, &params, 0.5, &config).unwrap();
        assert_eq!(log.steps.len(), 2);
        assert!(log.steps.iter().all(|s| s.radius == 0.5 && s.window_radius == 1.0));
        assert_eq!(end.t, 0.5);
        assert!(end.psi.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn gaussian_continuation_conserves_charge() {
        let spec = DataSpec::new(Profile::gaussian(0.4, 0.3, 0.0), Profile::gaussian(0.4, 0.3, 0.0), 0);
        let d: InitialData<f64> = generate_data(&spec, -4.0, 1.0 / 128.0, 1025).unwrap();
        let params = ModelParams::new(1.0, 1.0).unwrap();
        let solver = SolverConfig { scheme: Scheme::Marching, ..SolverConfig::default() };
        let config = ContinuationConfig::new(solver);
        let mut times = Vec::new();
        let (log, end) = continue_globally_with(&d, &params, 1.0, &config, |s| times.push(s.t));
        let end = end.unwrap();
        assert_eq!(end.t, 1.0);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert!(log.steps.windows(2).all(|w| w[1].t > w[0].t));
        assert!(log.steps.iter().all(|s| s.radius < 1.0 / 16.0));
        let q0 = d.charge();
        assert!((log.final_charge - q0).abs() / q0 < 1e-3);
    }
}
