//! Learning general policies for classical planning domains.
//!
//! The crate wires a STRIPS-style planning frontend, explicit state-space
//! expansion with exact dynamic-programming oracles, a small reverse-mode
//! differentiation engine, a relational graph neural network over planning
//! states, actor-critic trainers, and a policy execution/evaluation runtime.

pub mod diff;
pub mod fixtures;
pub mod gnn;
pub mod pddl;
pub mod runtime;
pub mod selfcheck;
pub mod space;
pub mod train;
