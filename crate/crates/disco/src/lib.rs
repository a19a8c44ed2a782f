// Index-parallel loops over per-step layers read more clearly with an
// explicit step variable.
#![allow(clippy::needless_range_loop)]

pub mod agents;
pub mod dist;
pub mod eluder;
pub mod env;
pub mod error;
pub mod files;
pub mod func_class;
pub mod harness;
pub mod jsonf;
