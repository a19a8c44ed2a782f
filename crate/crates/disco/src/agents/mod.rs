//! Confidence-set agents: the optimistic bandit pair, the online-RL agent,
//! the pessimistic offline selector, and the bound arithmetic they share.

pub mod bounds;
pub mod cb;
pub mod offline;
pub mod online;
