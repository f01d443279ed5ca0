//! Proximal inertial gradient descent for composite problems `F = f + g`.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every numerical
//! piece: the problem abstraction and its instance library, closed-form prox
//! operators, the inertia/stepsize schedules, the full-gradient, cyclic and
//! stochastic block solvers, a FISTA reference solver, Lyapunov/inequality
//! audits with rate fitting, and a heavy-ball ODE integrator.
//!
//! Everything touching the file system lives in the `pigd-lab` crate.
//!
//! ```
//! use pigd_core::library::{make_instance, InstanceSpec, ProblemKind};
//! use pigd_core::schedule::{BetaRule, ParamSchedule, Variant};
//! use pigd_core::solver::{run_pigd, RunConfig};
//!
//! let spec = InstanceSpec::new(ProblemKind::Quadratic, 8).with_conditioning(10.0);
//! let problem = make_instance(&spec).unwrap();
//! let schedule = ParamSchedule::new(BetaRule::Constant { beta0: 0.5 }, 0.9, Variant::Full, 1).unwrap();
//! let trace = run_pigd(&problem, &schedule, &[1.0; 8], &RunConfig::new(200)).unwrap();
//! assert!(trace.entries.last().unwrap().lyapunov < 1e-6);
//! ```
#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod diagnostics;
pub mod error;
pub mod library;
pub mod linalg;
pub mod math;
pub mod ode;
pub mod problem;
pub mod prox;
pub mod reference;
pub mod rng;
pub mod smooth;
pub mod schedule;
pub mod solver;

pub use error::{Error, Result};
pub use problem::{BlockPartition, CompositeProblem, IterateState, SmoothFunction, SolutionSet};
pub use prox::ProxKind;
pub use schedule::{BetaRule, ParamSchedule, Variant};
pub use solver::{RunConfig, Trace, TraceEntry};
