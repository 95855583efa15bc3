//! Nonlinear filtering of a scalar diffusion: simulation, the dense
//! density solver, the finite-dimensional projection filter in the balanced
//! chart, and the Kalman-Bucy oracle for linear models.

mod basis;
mod dense;
mod evaluate;
mod fields;
mod kalman;
mod model;
mod projection;
mod sde;

pub use basis::{project_hk, BasisSpec, SubmanifoldBasis, MAX_CONDITION};
pub use dense::{density_moments, run_dense_filter, DenseOperator, DenseOptions, DenseTrajectory, DENSITY_FLOOR, FROZEN_NODES};
pub use evaluate::{compare_densities, evaluate_run, EvaluationRow};
pub use fields::{coefficient_fields, coefficient_fields_fd, diffusion_v, drift_u, hbar, CoefficientFields};
pub use kalman::{kalman_bucy, stationary_riccati, KalmanTrajectory};
pub use model::FilterModel;
pub use projection::{initial_coefficients, run_projection_filter, ProjectionTrajectory, BLOW_UP_NORM};
pub use sde::{simulate_sde, Prior, SdePath};
