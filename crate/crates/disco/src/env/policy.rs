//! Per-step stochastic policies over finite, possibly layered state spaces.

use rand::Rng;

use crate::dist::{sample_from_weights, MASS_SUM_TOL};
use crate::error::{Error, Result};

/// A policy `(h, x) -> distribution over actions`. Deterministic policies are
/// point masses on one action per `(h, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    // probs[h][x][a]
    probs: Vec<Vec<Vec<f64>>>,
}

impl Policy {
    pub fn new(probs: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        for step in &probs {
            for row in step {
                let mut sum = 0.0;
                for (idx, &p) in row.iter().enumerate() {
                    if p < 0.0 || !p.is_finite() {
                        return Err(Error::NegativeMass { idx, value: p });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > MASS_SUM_TOL {
                    return Err(Error::RowNotNormalized { sum });
                }
            }
        }
        Ok(Policy { probs })
    }

    /// Deterministic policy from an action table `actions[h][x]`.
    pub fn deterministic(actions: &[Vec<usize>], n_actions: usize) -> Result<Self> {
        let mut probs = Vec::with_capacity(actions.len());
        for step in actions {
            let mut rows = Vec::with_capacity(step.len());
            for &a in step {
                if a >= n_actions {
                    return Err(Error::DomainMismatch(format!(
                        "action {a} out of range (A = {n_actions})"
                    )));
                }
                let mut row = vec![0.0; n_actions];
                row[a] = 1.0;
                rows.push(row);
            }
            probs.push(rows);
        }
        Ok(Policy { probs })
    }

    /// Uniform policy over `n_actions` for state layout `n_states[h]`.
    pub fn uniform(n_states: &[usize], n_actions: usize) -> Self {
        let probs = n_states
            .iter()
            .map(|&nx| vec![vec![1.0 / n_actions as f64; n_actions]; nx])
            .collect();
        Policy { probs }
    }

    pub fn horizon(&self) -> usize {
        self.probs.len()
    }

    pub fn n_states_at(&self, h: usize) -> usize {
        self.probs[h].len()
    }

    pub fn n_actions(&self) -> usize {
        self.probs[0][0].len()
    }

    pub fn action_probs(&self, h: usize, x: usize) -> &[f64] {
        &self.probs[h][x]
    }

    /// Samples an action. Point-mass rows return their action without
    /// consuming randomness, so deterministic policies never advance the
    /// generator.
    pub fn sample_action<R: Rng + ?Sized>(&self, h: usize, x: usize, rng: &mut R) -> usize {
        let row = &self.probs[h][x];
        if let Some(a) = row.iter().position(|&p| p == 1.0) {
            return a;
        }
        sample_from_weights(row, rng)
    }
}
