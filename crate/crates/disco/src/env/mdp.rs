//! Finite-horizon tabular MDPs with grid-valued cost distributions.
//!
//! State spaces are layered: step `h` has its own finite state set, and
//! transitions at step `h` land in the step `h+1` layer. Construction
//! certifies normalization — the maximum achievable cumulative cost over all
//! trajectories, computed by backward max-recursion over grid supports, must
//! fit on the grid — so distributional Bellman backups of true return laws
//! never clamp.

use rand::Rng;

use crate::dist::{convolve_clamped, mixture, sample_from_weights, GridDist, MASS_SUM_TOL};
use crate::env::Policy;
use crate::error::{Error, Result};
use crate::func_class::{CondDistTable, SampleRL};

/// Initial states: a fixed distribution `d_1`, or an explicit per-episode
/// sequence (the oblivious-adversary setting).
#[derive(Debug, Clone, PartialEq)]
pub enum InitialStates {
    Dist(Vec<f64>),
    Schedule(Vec<usize>),
}

/// A per-step data distribution `nu_h` over state-action pairs, used for
/// offline dataset generation and coverage ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct DataDist {
    // per_h[h][x * n_actions + a]
    per_h: Vec<Vec<f64>>,
}

impl DataDist {
    pub fn new(per_h: Vec<Vec<f64>>) -> Result<Self> {
        for row in &per_h {
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
        Ok(DataDist { per_h })
    }

    pub fn horizon(&self) -> usize {
        self.per_h.len()
    }

    pub fn weights(&self, h: usize) -> &[f64] {
        &self.per_h[h]
    }
}

/// A finite-horizon MDP with explicit transition kernels and grid-valued cost
/// laws; immutable after construction.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    horizon: usize,
    grid_size: usize,
    n_actions: usize,
    n_states: Vec<usize>,
    // costs[h][x * n_actions + a]
    costs: Vec<Vec<GridDist>>,
    // transitions[h][x * n_actions + a] -> probs over states at h+1 (len H-1)
    transitions: Vec<Vec<Vec<f64>>>,
    initial: InitialStates,
    max_return_idx: usize,
}

impl TabularMdp {
    pub fn new(
        n_states: Vec<usize>,
        n_actions: usize,
        costs: Vec<Vec<GridDist>>,
        transitions: Vec<Vec<Vec<f64>>>,
        initial: InitialStates,
    ) -> Result<Self> {
        let horizon = n_states.len();
        if horizon == 0 || n_actions == 0 {
            return Err(Error::DomainMismatch(
                "need at least one step and one action".into(),
            ));
        }
        if n_states.contains(&0) {
            return Err(Error::DomainMismatch("every step needs a state".into()));
        }
        if costs.len() != horizon {
            return Err(Error::DomainMismatch(format!(
                "cost tables cover {} steps, horizon is {horizon}",
                costs.len()
            )));
        }
        let grid_size = costs
            .first()
            .and_then(|step| step.first())
            .map(|d| d.grid_size())
            .ok_or_else(|| Error::DomainMismatch("no cost laws given".into()))?;
        for (h, step) in costs.iter().enumerate() {
            if step.len() != n_states[h] * n_actions {
                return Err(Error::DomainMismatch(format!(
                    "step {h}: expected {} cost laws, got {}",
                    n_states[h] * n_actions,
                    step.len()
                )));
            }
            for d in step {
                if d.grid_size() != grid_size {
                    return Err(Error::GridMismatch(grid_size, d.grid_size()));
                }
            }
        }
        if transitions.len() + 1 != horizon {
            return Err(Error::DomainMismatch(format!(
                "expected {} transition tables, got {}",
                horizon - 1,
                transitions.len()
            )));
        }
        for (h, step) in transitions.iter().enumerate() {
            if step.len() != n_states[h] * n_actions {
                return Err(Error::DomainMismatch(format!(
                    "step {h}: expected {} transition rows, got {}",
                    n_states[h] * n_actions,
                    step.len()
                )));
            }
            for row in step {
                if row.len() != n_states[h + 1] {
                    return Err(Error::DomainMismatch(format!(
                        "step {h}: transition row has {} entries, next layer has {}",
                        row.len(),
                        n_states[h + 1]
                    )));
                }
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
        match &initial {
            InitialStates::Dist(w) => {
                if w.len() != n_states[0] {
                    return Err(Error::DomainMismatch(format!(
                        "initial distribution has {} entries for {} states",
                        w.len(),
                        n_states[0]
                    )));
                }
                let sum: f64 = w.iter().sum();
                if (sum - 1.0).abs() > MASS_SUM_TOL || w.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                    return Err(Error::RowNotNormalized { sum });
                }
            }
            InitialStates::Schedule(seq) => {
                if let Some(&x) = seq.iter().find(|&&x| x >= n_states[0]) {
                    return Err(Error::DomainMismatch(format!(
                        "scheduled initial state {x} out of range"
                    )));
                }
            }
        }

        let mdp = TabularMdp {
            horizon,
            grid_size,
            n_actions,
            n_states,
            costs,
            transitions,
            initial,
            max_return_idx: 0,
        };
        let max_idx = mdp.compute_max_return_idx();
        if max_idx > grid_size - 1 {
            return Err(Error::NotCertified {
                max_idx,
                grid_max: grid_size - 1,
            });
        }
        Ok(TabularMdp {
            max_return_idx: max_idx,
            ..mdp
        })
    }

    /// Backward max-recursion over grid supports: the largest cumulative-cost
    /// grid index reachable from any state at step 0. Exact in integer
    /// arithmetic.
    fn compute_max_return_idx(&self) -> usize {
        let h_last = self.horizon - 1;
        let mut worst: Vec<usize> = (0..self.n_states[h_last])
            .map(|x| {
                (0..self.n_actions)
                    .map(|a| self.cost_law(h_last, x, a).max_support_idx())
                    .max()
                    .unwrap()
            })
            .collect();
        for h in (0..h_last).rev() {
            worst = (0..self.n_states[h])
                .map(|x| {
                    (0..self.n_actions)
                        .map(|a| {
                            let tail = self.transition(h, x, a)
                                .iter()
                                .enumerate()
                                .filter(|(_, &p)| p > 0.0)
                                .map(|(x_next, _)| worst[x_next])
                                .max()
                                .unwrap_or(0);
                            self.cost_law(h, x, a).max_support_idx() + tail
                        })
                        .max()
                        .unwrap()
                })
                .collect();
        }
        worst.into_iter().max().unwrap()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_states(&self, h: usize) -> usize {
        self.n_states[h]
    }

    pub fn n_states_per_step(&self) -> &[usize] {
        &self.n_states
    }

    /// Certificate value: the largest cumulative-cost grid index over all
    /// trajectories. Always at most `grid_size - 1`.
    pub fn certificate_max_idx(&self) -> usize {
        self.max_return_idx
    }

    pub fn cost_law(&self, h: usize, x: usize, a: usize) -> &GridDist {
        &self.costs[h][x * self.n_actions + a]
    }

    pub fn transition(&self, h: usize, x: usize, a: usize) -> &[f64] {
        &self.transitions[h][x * self.n_actions + a]
    }

    pub fn initial(&self) -> &InitialStates {
        &self.initial
    }

    /// Initial state for episode `k`: schedules consume no randomness,
    /// distributions draw once.
    pub fn initial_state<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<usize> {
        match &self.initial {
            InitialStates::Dist(w) => Ok(sample_from_weights(w, rng)),
            InitialStates::Schedule(seq) => seq.get(k).copied().ok_or_else(|| {
                Error::Scenario(format!(
                    "initial-state schedule has {} entries but episode {} was requested",
                    seq.len(),
                    k
                ))
            }),
        }
    }

    /// The initial distribution `d_1`; schedules report empirical frequencies.
    pub fn initial_dist(&self) -> Vec<f64> {
        match &self.initial {
            InitialStates::Dist(w) => w.clone(),
            InitialStates::Schedule(seq) => {
                let mut w = vec![0.0; self.n_states[0]];
                for &x in seq {
                    w[x] += 1.0;
                }
                let n = seq.len().max(1) as f64;
                for p in &mut w {
                    *p /= n;
                }
                w
            }
        }
    }
}

fn check_f_next(mdp: &TabularMdp, f_next: Option<&CondDistTable>, h: usize) -> Result<()> {
    let terminal = h + 1 == mdp.horizon();
    match f_next {
        None if terminal => Ok(()),
        None => Err(Error::DomainMismatch(format!(
            "step {h} is not terminal but no next-step table was given"
        ))),
        Some(_) if terminal => Err(Error::DomainMismatch(format!(
            "step {h} is terminal but a next-step table was given"
        ))),
        Some(f) => {
            if f.n_states() != mdp.n_states(h + 1) || f.n_actions() != mdp.n_actions() {
                return Err(Error::DomainMismatch(format!(
                    "next-step table has domain {}x{}, step {} has {}x{}",
                    f.n_states(),
                    f.n_actions(),
                    h + 1,
                    mdp.n_states(h + 1),
                    mdp.n_actions()
                )));
            }
            if f.grid_size() != mdp.grid_size() {
                return Err(Error::GridMismatch(mdp.grid_size(), f.grid_size()));
            }
            Ok(())
        }
    }
}

/// Distributional Bellman backup under a fixed policy:
/// `(T_h f)(x,a) = law of c + y` with `c ~ C_h(x,a)`, `x' ~ P_h(x,a)`,
/// `a' ~ pi(x')`, `y ~ f_next(x',a')`. At the terminal step the result is
/// `C_H` itself. Errors if any convolution clamps.
pub fn bellman_dist_pi(
    mdp: &TabularMdp,
    f_next: Option<&CondDistTable>,
    pi: &Policy,
    h: usize,
) -> Result<CondDistTable> {
    check_f_next(mdp, f_next, h)?;
    let continuation = f_next
        .map(|f| {
            (0..mdp.n_states(h + 1))
                .map(|x_next| {
                    let probs = pi.action_probs(h + 1, x_next);
                    let comps: Vec<(f64, &GridDist)> = probs
                        .iter()
                        .enumerate()
                        .map(|(a, &w)| (w, f.dist(x_next, a)))
                        .collect();
                    mixture(&comps)
                })
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    backup_with_continuation(mdp, continuation.as_deref(), h)
}

/// Distributional Bellman optimality backup: as [`bellman_dist_pi`] but with
/// the greedy next action `a' = argmin_a mean f_next(x', a)`, ties broken
/// toward the lowest action index.
pub fn bellman_dist_star(
    mdp: &TabularMdp,
    f_next: Option<&CondDistTable>,
    h: usize,
) -> Result<CondDistTable> {
    check_f_next(mdp, f_next, h)?;
    let continuation = f_next.map(|f| {
        (0..mdp.n_states(h + 1))
            .map(|x_next| f.dist(x_next, f.greedy_action(x_next)).clone())
            .collect::<Vec<_>>()
    });
    backup_with_continuation(mdp, continuation.as_deref(), h)
}

fn backup_with_continuation(
    mdp: &TabularMdp,
    continuation: Option<&[GridDist]>,
    h: usize,
) -> Result<CondDistTable> {
    let nx = mdp.n_states(h);
    let na = mdp.n_actions();
    let mut dists = Vec::with_capacity(nx * na);
    for x in 0..nx {
        for a in 0..na {
            let cost = mdp.cost_law(h, x, a);
            let d = match continuation {
                None => cost.clone(),
                Some(cont) => {
                    let probs = mdp.transition(h, x, a);
                    let comps: Vec<(f64, &GridDist)> = probs
                        .iter()
                        .enumerate()
                        .map(|(x_next, &w)| (w, &cont[x_next]))
                        .collect();
                    let mixed = mixture(&comps)?;
                    let (d, clamped) = convolve_clamped(cost, &mixed)?;
                    if clamped {
                        return Err(Error::Clamped);
                    }
                    d
                }
            };
            dists.push(d);
        }
    }
    CondDistTable::new(format!("backup_h{h}"), nx, na, dists)
}

/// Exact conditional return laws `Z_h(x, a)` for every step under `pi`,
/// computed by backward application of [`bellman_dist_pi`].
pub fn return_tables(mdp: &TabularMdp, pi: &Policy) -> Result<Vec<CondDistTable>> {
    let horizon = mdp.horizon();
    let mut tables: Vec<CondDistTable> = Vec::with_capacity(horizon);
    for h in (0..horizon).rev() {
        let next = tables.last();
        let t = bellman_dist_pi(mdp, next, pi, h)?;
        tables.push(t);
    }
    tables.reverse();
    Ok(tables)
}

/// Where a return distribution is rooted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    /// From state `x` at step `h`, first action drawn from the policy.
    State(usize, usize),
    /// From the pair `(x, a)` at step `h`.
    StateAction(usize, usize, usize),
    /// From step 0 with `x_1 ~ d_1`.
    InitialDist,
}

/// Exact law of the cumulative cost from the given start under `pi`. Its mean
/// is the value and its variance is the return variance.
pub fn return_distribution(mdp: &TabularMdp, pi: &Policy, start: Start) -> Result<GridDist> {
    let tables = return_tables(mdp, pi)?;
    return_distribution_with(mdp, &tables, pi, start)
}

/// As [`return_distribution`], reusing precomputed return tables.
pub fn return_distribution_with(
    mdp: &TabularMdp,
    tables: &[CondDistTable],
    pi: &Policy,
    start: Start,
) -> Result<GridDist> {
    match start {
        Start::StateAction(h, x, a) => Ok(tables[h].dist(x, a).clone()),
        Start::State(h, x) => {
            let probs = pi.action_probs(h, x);
            let comps: Vec<(f64, &GridDist)> = probs
                .iter()
                .enumerate()
                .map(|(a, &w)| (w, tables[h].dist(x, a)))
                .collect();
            mixture(&comps)
        }
        Start::InitialDist => {
            let d1 = mdp.initial_dist();
            let per_state: Vec<GridDist> = (0..mdp.n_states(0))
                .map(|x| return_distribution_with(mdp, tables, pi, Start::State(0, x)))
                .collect::<Result<Vec<_>>>()?;
            let comps: Vec<(f64, &GridDist)> = d1
                .iter()
                .zip(&per_state)
                .map(|(&w, d)| (w, d))
                .collect();
            mixture(&comps)
        }
    }
}

/// Optimal policy and conditional optimal return laws `Z*_h`, via exact
/// distributional value iteration with the optimality backup from the
/// terminal step. Ties in the greedy extraction go to the lowest action.
pub fn optimal(mdp: &TabularMdp) -> Result<(Policy, Vec<CondDistTable>)> {
    let horizon = mdp.horizon();
    let mut tables: Vec<CondDistTable> = Vec::with_capacity(horizon);
    for h in (0..horizon).rev() {
        let next = tables.last();
        let t = bellman_dist_star(mdp, next, h)?;
        tables.push(t);
    }
    tables.reverse();
    let actions: Vec<Vec<usize>> = tables
        .iter()
        .enumerate()
        .map(|(h, t)| (0..mdp.n_states(h)).map(|x| t.greedy_action(x)).collect())
        .collect();
    let pi = Policy::deterministic(&actions, mdp.n_actions())?;
    Ok((pi, tables))
}

/// Exact occupancy measures `d_h(x, a)` under `pi` from the step-0 state
/// distribution `x1_dist`; each layer sums to 1.
pub fn occupancy(mdp: &TabularMdp, pi: &Policy, x1_dist: &[f64]) -> Result<Vec<Vec<f64>>> {
    if x1_dist.len() != mdp.n_states(0) {
        return Err(Error::DomainMismatch(format!(
            "initial distribution has {} entries for {} states",
            x1_dist.len(),
            mdp.n_states(0)
        )));
    }
    let na = mdp.n_actions();
    let mut state_dist = x1_dist.to_vec();
    let mut out = Vec::with_capacity(mdp.horizon());
    for h in 0..mdp.horizon() {
        let nx = mdp.n_states(h);
        let mut layer = vec![0.0; nx * na];
        for x in 0..nx {
            let px = state_dist[x];
            if px == 0.0 {
                continue;
            }
            for (a, &pa) in pi.action_probs(h, x).iter().enumerate() {
                layer[x * na + a] = px * pa;
            }
        }
        if h + 1 < mdp.horizon() {
            let mut next = vec![0.0; mdp.n_states(h + 1)];
            for x in 0..nx {
                for a in 0..na {
                    let w = layer[x * na + a];
                    if w == 0.0 {
                        continue;
                    }
                    for (x_next, &p) in mdp.transition(h, x, a).iter().enumerate() {
                        next[x_next] += w * p;
                    }
                }
            }
            state_dist = next;
        }
        out.push(layer);
    }
    Ok(out)
}

/// Occupancies of the roll-in that starts at the pair `(x0, a0)` at step `h0`:
/// zero before `h0`, a point mass on `(x0, a0)` at `h0`, and `pi` thereafter.
pub fn occupancy_from(
    mdp: &TabularMdp,
    pi: &Policy,
    h0: usize,
    x0: usize,
    a0: usize,
) -> Result<Vec<Vec<f64>>> {
    let na = mdp.n_actions();
    let mut out: Vec<Vec<f64>> = (0..mdp.horizon())
        .map(|h| vec![0.0; mdp.n_states(h) * na])
        .collect();
    out[h0][x0 * na + a0] = 1.0;
    if h0 + 1 == mdp.horizon() {
        return Ok(out);
    }
    let mut state_dist = vec![0.0; mdp.n_states(h0 + 1)];
    for (x_next, &p) in mdp.transition(h0, x0, a0).iter().enumerate() {
        state_dist[x_next] = p;
    }
    for h in h0 + 1..mdp.horizon() {
        let nx = mdp.n_states(h);
        for x in 0..nx {
            let px = state_dist[x];
            if px == 0.0 {
                continue;
            }
            for (a, &pa) in pi.action_probs(h, x).iter().enumerate() {
                out[h][x * na + a] = px * pa;
            }
        }
        if h + 1 < mdp.horizon() {
            let mut next = vec![0.0; mdp.n_states(h + 1)];
            for x in 0..nx {
                for a in 0..na {
                    let w = out[h][x * na + a];
                    if w == 0.0 {
                        continue;
                    }
                    for (x_next, &p) in mdp.transition(h, x, a).iter().enumerate() {
                        next[x_next] += w * p;
                    }
                }
            }
            state_dist = next;
        }
    }
    Ok(out)
}

/// Single-policy concentrability `max_h max_(x,a) d_h(x,a) / nu_h(x,a)` of the
/// comparator's occupancy (from `d_1`) against the data distribution.
/// `infinity` when the comparator visits a pair that `nu` never covers.
pub fn concentrability(mdp: &TabularMdp, pi_tilde: &Policy, nu: &DataDist) -> Result<f64> {
    if nu.horizon() != mdp.horizon() {
        return Err(Error::DomainMismatch(format!(
            "data distribution covers {} steps, horizon is {}",
            nu.horizon(),
            mdp.horizon()
        )));
    }
    let occ = occupancy(mdp, pi_tilde, &mdp.initial_dist())?;
    let mut worst: f64 = 0.0;
    for h in 0..mdp.horizon() {
        for (d, &n) in occ[h].iter().zip(nu.weights(h)) {
            if *d > 0.0 {
                if n == 0.0 {
                    return Ok(f64::INFINITY);
                }
                worst = worst.max(d / n);
            }
        }
    }
    Ok(worst)
}

/// Rolls one episode from `x1` under `pi`. Per step the generator is consumed
/// in the order action (stochastic rows only), cost, next state.
pub fn sample_episode<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    pi: &Policy,
    x1: usize,
    rng: &mut R,
) -> Vec<SampleRL> {
    let mut out = Vec::with_capacity(mdp.horizon());
    let mut x = x1;
    for h in 0..mdp.horizon() {
        let a = pi.sample_action(h, x, rng);
        let cost_idx = mdp.cost_law(h, x, a).sample_idx(rng);
        let next = if h + 1 < mdp.horizon() {
            Some(sample_from_weights(mdp.transition(h, x, a), rng))
        } else {
            None
        };
        out.push(SampleRL { h, x, a, cost_idx, next });
        if let Some(x_next) = next {
            x = x_next;
        }
    }
    out
}

/// Draws `n` i.i.d. transitions per step: `(x,a) ~ nu_h`, `c ~ C_h(x,a)`,
/// `x' ~ P_h(x,a)` (`None` at the terminal step).
pub fn sample_offline_dataset<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    nu: &DataDist,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<SampleRL>>> {
    if nu.horizon() != mdp.horizon() {
        return Err(Error::DomainMismatch(format!(
            "data distribution covers {} steps, horizon is {}",
            nu.horizon(),
            mdp.horizon()
        )));
    }
    let na = mdp.n_actions();
    let mut data = Vec::with_capacity(mdp.horizon());
    for h in 0..mdp.horizon() {
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let pair = sample_from_weights(nu.weights(h), rng);
            let (x, a) = (pair / na, pair % na);
            let cost_idx = mdp.cost_law(h, x, a).sample_idx(rng);
            let next = if h + 1 < mdp.horizon() {
                Some(sample_from_weights(mdp.transition(h, x, a), rng))
            } else {
                None
            };
            rows.push(SampleRL { h, x, a, cost_idx, next });
        }
        data.push(rows);
    }
    Ok(data)
}
