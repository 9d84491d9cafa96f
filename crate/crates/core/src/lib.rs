//! Classical dilations of finite-state Markov evolutions.
//!
//! Every Markov chain on a finite state space `E` can be driven by a
//! deterministic, invertible, time-homogeneous global dynamics on
//! `E × G^ℤ`, where the environment `G^ℤ` starts in a random product state.
//! This crate builds that construction end to end:
//!
//! * [`model`]: stochastic matrices, deterministic maps, distributions and the
//!   matrix-product evolution of observables.
//! * [`decompose`]: convex decompositions of stochastic matrices into
//!   deterministic matrices (full product formula and a sparse greedy one).
//! * [`dilation`]: the environment alphabet `G = E × L`, the invertible
//!   coupling `φ`, the global dynamics `α = θ∘φ₁`, and the cocycle `φ_t`.
//! * [`chain`]: trajectory simulation, exact path laws and Markov-property
//!   verification of the dilated process.
//! * [`quantum`]: the unitary extension `V` of `φ`, Kraus channels, the
//!   quantum stochastic flow, the windowed automorphism `J`, and the
//!   classical/quantum agreement checks.
//! * [`cli`]: the `markov-dilation` command-line front end.
//!
//! States are 0-based throughout; the distinguished environment symbol
//! component is `j = 0`.

pub mod chain;
pub mod cli;
pub mod decompose;
pub mod dilation;
mod error;
pub mod io;
pub mod model;
pub mod quantum;
pub mod report;

pub use error::{Error, Result};
