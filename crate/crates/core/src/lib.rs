//! Exact finite-scale machinery for the induced dynamics of a topological
//! system on its space of probability measures.
//!
//! The crate is organised around a handful of finite objects:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`spaces`] | truncated full shifts, subshifts of finite type and `×a` circle grids, Bowen metrics |
//! | [`measures`] | finitely supported measures, pushforward, the `π`, `f_m`, `Θ`, `Ξ` embeddings |
//! | [`transport`] | exact 1-Wasserstein distance with dual certificates, dynamical Wasserstein metrics |
//! | [`independence`] | independence sets, block summaries `q_m`/`I^m`, anchor points |
//! | [`cube`] | faces of simplices, box covers of generalized cubes, order and separation |
//! | [`entropy`] | separated/spanning counts, entropy-at-scale estimates, rate fitting |
//! | [`checks`] | one runnable checker per quantitative lemma, exact margins |
//! | [`experiment`] | experiment configs, deterministic work queue, CSV/SVG output |
//!
//! Measure weights are exact [`Q`] rationals throughout; ground distances are
//! small exact rationals ([`Dist`]). Floating point only appears in fitting
//! routines and in the optional float transport mode.

pub mod checks;
pub mod cube;
pub mod entropy;
mod error;
pub mod experiment;
pub mod independence;
pub mod measures;
pub mod rational;
pub mod spaces;
pub mod transport;

pub use error::{Error, Result};
pub use rational::{Dist, Q};
