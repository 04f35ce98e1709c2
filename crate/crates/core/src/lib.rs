//! Structure-preserving integrators for matrix ODEs whose solutions are
//! symmetric positive definite, such as covariance and Riccati equations.
//!
//! ```
//! use spdflow_core::{integrate, make_case_study, Case, Congruence, Rkmk4};
//!
//! let case = make_case_study(Case::One);
//! let tr = integrate(&Rkmk4::new(Congruence), &case.model(), &case.p0, &case.grid()).unwrap();
//! assert!(tr.all_spd());
//! ```

pub mod actions;
pub mod error;
pub mod integrators;
pub mod manifold;
pub mod matcore;
pub mod models;
pub mod random;

pub use actions::{Congruence, HomogeneousAction, Siegel};
pub use error::{Error, Result};
pub use integrators::{
    integrate, integrate_partial, reference_trajectory, Euler, LieEuler, RiemannianRk4, Rk4, Rkmk4, Stepper, Trajectory,
};
pub use manifold::{affine_distance, affine_exp, step_bounds, StepBounds};
pub use matcore::{Mat, SpdMat, SymMat};
pub use models::{make_case_study, make_case_study_with, Case, CovarianceModel, Pairing};
