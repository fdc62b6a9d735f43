//! Inference engine for credal networks: directed acyclic graphical models
//! whose local conditional models are *sets* of probability distributions.
//!
//! The crate is organized around a propositional [`model::CredalNetwork`] and a
//! relational front end ([`relational`]) that grounds first-order probability
//! formulas into propositional networks. Inference is provided by three
//! families of algorithms:
//!
//! - [`oracle`]: exact ground truth by exhaustive vertex enumeration over the
//!   strong extension, plus plain Bayesian variable elimination and the
//!   hill-climbing search used to seed the global solver;
//! - [`mlp`]: the query bound expressed as an explicit multilinear program,
//!   solved by branch-and-bound over linear relaxations, with fractional
//!   handling for conditional queries;
//! - [`propagation`]: interval message passing — exact 2U on Boolean
//!   polytrees, A/R+ and A/R++ outer approximations, iterated partial
//!   evaluation, and loopy 2U.
//!
//! The crate is `no_std` (with `alloc`); anything that needs wall-clock time
//! receives it through [`util::Clock`].

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod model;
pub mod relational;
pub mod oracle;
pub mod mlp;
pub mod propagation;
pub mod util;

pub use model::{
    CredalNetwork, IntervalResult, LocalCredalSpec, MultilinearConstraint, ParamId, Query,
    RelOp, SolveStatus, Variable,
};
