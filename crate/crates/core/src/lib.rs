//! tasklab: a multi-task reinforcement-learning task-sampling laboratory.
//!
//! The crate trains policy-gradient agents on suites of small gridworld
//! tasks while an adaptive sampler decides which task to draw next. Six
//! sampling strategies share one contract; the flagship strategy allocates
//! interactions to the tasks furthest from their reference returns via
//! mirror ascent on the probability simplex. An experiment harness runs
//! seeded sweeps, writes CSV/SVG artifacts, and checks the sampler's
//! convergence guarantee on synthetic games.

pub mod envs;
pub mod gap;
pub mod harness;
pub mod oracles;
pub mod policy;
pub mod rng;
pub mod samplers;
pub mod simplex;
