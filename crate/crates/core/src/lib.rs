//! Data-driven reachability analysis with a-posteriori probabilistic certificates.
//!
//! The crate estimates forward reachable sets and reach tubes of dynamical
//! systems from simulated scenarios, fits minimum-volume radial-basis-function
//! sublevel sets to the samples, and certifies the result on fresh holdout
//! scenarios via exact binomial tail inversion. A wait-and-judge scenario
//! baseline and a Lipschitz-bump demonstration of the exponential cost of
//! de-randomizing such bounds round out the toolkit.
//!
//! Modules:
//! - [`stats`]: binomial tail arithmetic, holdout certificates, baselines.
//! - [`sim`]: system models, RK4 integration, seeded scenario generation.
//! - [`rbf`] / [`fit`]: RBF sublevel-set estimates and the constrained fitter.
//! - [`tube`]: time-varying RBF reach tubes.
//! - [`derand`]: Lipschitz bump family and zeroth-order query lower bounds.
//! - [`experiments`]: declarative experiment runner and CSV/JSON persistence.

pub mod derand;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod rbf;
pub mod seeds;
pub mod sim;
pub mod stats;
pub mod tube;

pub use error::{Error, Result};
