//! Numerical laboratory for the massive Thirring model
//!
//! ```text
//! (d_t + d_x) psi = -i m phi - 2 i lambda |phi|^2 psi
//! (d_t - d_x) phi = -i m psi - 2 i lambda |psi|^2 phi
//! ```
//!
//! in null coordinates `alpha = x + t`, `beta = x - t`. Kernels are generic
//! over the real scalar ([`Real`], implemented for `f32` and `f64`); the
//! aliases at the crate root fix `f64`.

pub mod decomposition;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod model;
pub mod norms;
pub mod quadrature;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type Grid = geometry::NullGrid<f64>;
pub type Field = geometry::NodeField<f64>;
pub type TimeSlice = geometry::Slice<f64>;
pub type Params = model::ModelParams<f64>;
pub type Data = model::InitialData<f64>;
pub type Spinor = model::SpinorPair<f64>;
pub type Config = solver::SolverConfig<f64>;
pub type Solution = solver::LocalSolution<f64>;
pub type Sample = norms::FunctionSample<f64>;
