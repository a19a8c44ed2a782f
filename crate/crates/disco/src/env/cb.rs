//! Contextual-bandit environments with grid-valued cost laws.

use rand::Rng;

use crate::dist::{sample_from_weights, GridDist, MASS_SUM_TOL};
use crate::error::{Error, Result};

/// How contexts arrive over episodes: i.i.d. draws from a fixed distribution,
/// or an explicit (oblivious-adversary) sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum ContextSchedule {
    Iid(Vec<f64>),
    Explicit(Vec<usize>),
}

/// A contextual bandit: finite contexts and actions, one cost law per pair.
#[derive(Debug, Clone)]
pub struct CbEnv {
    n_contexts: usize,
    n_actions: usize,
    grid_size: usize,
    // costs[x * n_actions + a]
    costs: Vec<GridDist>,
    schedule: ContextSchedule,
}

impl CbEnv {
    pub fn new(
        n_contexts: usize,
        n_actions: usize,
        costs: Vec<GridDist>,
        schedule: ContextSchedule,
    ) -> Result<Self> {
        if n_contexts == 0 || n_actions == 0 {
            return Err(Error::DomainMismatch(
                "need at least one context and one action".into(),
            ));
        }
        if costs.len() != n_contexts * n_actions {
            return Err(Error::DomainMismatch(format!(
                "expected {} cost laws, got {}",
                n_contexts * n_actions,
                costs.len()
            )));
        }
        let grid_size = costs[0].grid_size();
        for d in &costs {
            if d.grid_size() != grid_size {
                return Err(Error::GridMismatch(grid_size, d.grid_size()));
            }
        }
        match &schedule {
            ContextSchedule::Iid(w) => {
                if w.len() != n_contexts {
                    return Err(Error::DomainMismatch(format!(
                        "context distribution has {} entries for {} contexts",
                        w.len(),
                        n_contexts
                    )));
                }
                let sum: f64 = w.iter().sum();
                if (sum - 1.0).abs() > MASS_SUM_TOL || w.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                    return Err(Error::RowNotNormalized { sum });
                }
            }
            ContextSchedule::Explicit(seq) => {
                if let Some(&x) = seq.iter().find(|&&x| x >= n_contexts) {
                    return Err(Error::DomainMismatch(format!(
                        "scheduled context {x} out of range"
                    )));
                }
            }
        }
        Ok(CbEnv {
            n_contexts,
            n_actions,
            grid_size,
            costs,
            schedule,
        })
    }

    pub fn n_contexts(&self) -> usize {
        self.n_contexts
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn cost_law(&self, x: usize, a: usize) -> &GridDist {
        &self.costs[x * self.n_actions + a]
    }

    pub fn mean_cost(&self, x: usize, a: usize) -> f64 {
        self.cost_law(x, a).mean()
    }

    /// Best (minimum) mean cost at context `x` and its lowest-index argmin.
    pub fn best_action(&self, x: usize) -> (usize, f64) {
        let mut best_a = 0;
        let mut best = f64::INFINITY;
        for a in 0..self.n_actions {
            let m = self.mean_cost(x, a);
            if m < best {
                best = m;
                best_a = a;
            }
        }
        (best_a, best)
    }

    /// Context for episode `k` (0-based). Explicit schedules consume no
    /// randomness and must cover episode `k`; i.i.d. schedules draw once.
    pub fn context_at<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<usize> {
        match &self.schedule {
            ContextSchedule::Iid(w) => Ok(sample_from_weights(w, rng)),
            ContextSchedule::Explicit(seq) => seq.get(k).copied().ok_or_else(|| {
                Error::Scenario(format!(
                    "context schedule has {} entries but episode {} was requested",
                    seq.len(),
                    k
                ))
            }),
        }
    }

    /// Draws a cost grid index from `C(x, a)`, consuming one `f64`.
    pub fn sample_cost<R: Rng + ?Sized>(&self, x: usize, a: usize, rng: &mut R) -> usize {
        self.cost_law(x, a).sample_idx(rng)
    }
}
