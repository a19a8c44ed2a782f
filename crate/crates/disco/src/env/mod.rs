//! Environments: contextual bandits and tabular MDPs with grid-valued costs,
//! plus distributional Bellman operators, exact return laws, occupancies,
//! coverage ratios and seeded sampling.

mod cb;
mod mdp;
mod policy;

pub use cb::{CbEnv, ContextSchedule};
pub use mdp::{
    bellman_dist_pi, bellman_dist_star, concentrability, occupancy, occupancy_from, optimal,
    return_distribution, return_distribution_with, return_tables, sample_episode,
    sample_offline_dataset, DataDist, InitialStates, Start, TabularMdp,
};
pub use policy::Policy;
