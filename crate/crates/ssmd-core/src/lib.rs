//! Stochastic subgradient mirror descent (SSMD) with stepsize-weighted
//! iterate averaging.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs plus an explicitly passed random stream, so runs
//! can be fanned out freely by a caller.
//!
//! Layout:
//!
//! * [`mirror`]: distance-generating functions, Bregman distances, prox step.
//! * [`feasible`]: the capped-box budget set and the probability simplex.
//! * [`stepsize`]: the three stepsize rules and checks of their conditions.
//! * [`averaging`]: the `1/alpha`-weighted running average.
//! * [`solver`]: the iteration engines, traces and theoretical bounds.
//! * [`utility`]: the stochastic piecewise-linear utility benchmark.
//! * [`synthetic`]: small problems with closed-form optima.
//! * [`normal`], [`rng`]: the Gaussian routines and the seeded stream.
#![no_std]

extern crate alloc;

pub mod averaging;
pub mod error;
pub mod feasible;
pub mod mirror;
pub mod normal;
pub mod rng;
pub mod solver;
pub mod stepsize;
pub mod synthetic;
pub mod utility;
pub mod vector;

pub use averaging::{AverageState, UniformAverage};
pub use error::{Error, Result};
pub use feasible::FeasibleSet;
pub use mirror::MirrorMap;
pub use solver::{OracleSample, ProblemHandle, RunTrace, StochasticOracle, TraceOptions};
pub use stepsize::{ScheduleKind, StepsizeSchedule};
pub use utility::{AffinePiece, Envelope, InstanceLabel, UtilityInstance};
pub use vector::Vector;

/// Feasibility tolerance used by precondition checks (max constraint
/// violation, l-infinity).
pub const FEASIBILITY_TOL: f64 = 1e-9;
