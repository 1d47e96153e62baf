//! Essential convergence rates of optimizer ODEs.
//!
//! Simulates time-rescaled optimizer dynamics with explicit Runge–Kutta
//! methods whose step is capped by the stability domain, and measures how
//! fast the resulting discrete iterates converge.
//!
//! ```
//! use essrate::prelude::*;
//!
//! let f = Objective::quadratic(vec![10.0, 1.0], 1.0, 10.0).unwrap();
//! let g = Dynamics::new(Model::GradientFlow, f, Rescaling::linear(0.1)).unwrap();
//! assert!((g.spectral_radius(&[1.0, 1.0], 0.0).unwrap() - 1.0).abs() < 1e-12);
//! ```

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod linalg;
pub mod objective;
pub mod plot;
pub mod reproduce;
pub mod stability;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::analysis::{
        essential_check, fit_rate, rescaling_slope_limit, shifted_b_sweep, tail_spectral_radius,
        theorem_bound_check, FitKind, RateFit,
    };
    pub use crate::dynamics::{verify_equivalence, Dynamics, Metric, Model, Rescaling};
    pub use crate::error::{Error, Result};
    pub use crate::integrate::{run, run_armijo, StepPolicy, StopRule, Trajectory};
    pub use crate::objective::Objective;
    pub use crate::stability::RkMethod;
}
