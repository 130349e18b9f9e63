//! fairlens: audit and repair of discrimination effects in categorical data,
//! grounded in a causal Bayesian-network model.
//!
//! The pipeline: load a [`data::Dataset`], obtain a causal [`graph::Dag`]
//! (given, or learned via [`learn::pc_learn`]), pick the protected attribute
//! C and decision E, then [`audit::certify`] the data against a risk-
//! difference threshold and, if violations surface, rewrite either the model
//! ([`repair::mgraph_repair`]) or the records ([`repair::mdata_repair`]).
//!
//! Heavy loops (counting, sampling, independence tests) run data-parallel on
//! rayon when the default `parallel` feature is on; the same code paths fall
//! back to sequential iteration without it, and [`exec::force_sequential`]
//! flips the behaviour at runtime for benchmarking.

pub mod audit;
pub mod bayes;
pub mod data;
pub mod error;
pub mod exec;
pub mod graph;
pub mod learn;
pub mod repair;
pub mod synth;

pub use data::{Assignment, Attribute, ContingencyTable, Dataset, Roles, Schema};
pub use error::{Error, Result};
pub use graph::{BlockSet, Dag, TopoSplit};
