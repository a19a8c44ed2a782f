//! Finite conditional-distribution classes and their MLE confidence sets.
//!
//! A class member is a [`CondDistTable`]: a total map `(x, a) -> GridDist`
//! over a finite state/action domain. A [`FiniteClass`] holds one finite list
//! of members per step `h`; the product structure over steps is represented by
//! index tuples. Confidence sets keep every member (or member tuple) whose
//! log-likelihood is within `beta` of the per-step maximum.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;

use crate::dist::{convolve_clamped, mixture, GridDist};
use crate::env::Policy;
use crate::error::{Error, Result};

/// One candidate conditional cost/return law: `(x, a) -> GridDist`, total over
/// a declared finite domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CondDistTable {
    id: String,
    n_states: usize,
    n_actions: usize,
    // dists[x * n_actions + a]
    dists: Vec<GridDist>,
}

impl CondDistTable {
    pub fn new(
        id: impl Into<String>,
        n_states: usize,
        n_actions: usize,
        dists: Vec<GridDist>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::DomainMismatch(
                "table needs at least one state and one action".into(),
            ));
        }
        if dists.len() != n_states * n_actions {
            return Err(Error::DomainMismatch(format!(
                "expected {} distributions, got {}",
                n_states * n_actions,
                dists.len()
            )));
        }
        let grid = dists[0].grid_size();
        for d in &dists {
            if d.grid_size() != grid {
                return Err(Error::GridMismatch(grid, d.grid_size()));
            }
        }
        Ok(CondDistTable {
            id: id.into(),
            n_states,
            n_actions,
            dists,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn grid_size(&self) -> usize {
        self.dists[0].grid_size()
    }

    pub fn dist(&self, x: usize, a: usize) -> &GridDist {
        &self.dists[x * self.n_actions + a]
    }

    pub fn mean(&self, x: usize, a: usize) -> f64 {
        self.dist(x, a).mean()
    }

    /// Lowest-index action minimizing the mean at state `x`.
    pub fn greedy_action(&self, x: usize) -> usize {
        let mut best_a = 0;
        let mut best = f64::INFINITY;
        for a in 0..self.n_actions {
            let m = self.mean(x, a);
            if m < best {
                best = m;
                best_a = a;
            }
        }
        best_a
    }
}

/// A finite class of conditional distributions, one member list per step.
/// `H = 1` is the contextual-bandit case.
#[derive(Debug, Clone)]
pub struct FiniteClass {
    // members[h][i]
    members: Vec<Vec<CondDistTable>>,
}

impl FiniteClass {
    pub fn new(members: Vec<Vec<CondDistTable>>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::DomainMismatch("class needs at least one step".into()));
        }
        let grid = members[0]
            .first()
            .ok_or_else(|| Error::DomainMismatch("empty member list at step 0".into()))?
            .grid_size();
        for (h, step) in members.iter().enumerate() {
            let first = step
                .first()
                .ok_or_else(|| Error::DomainMismatch(format!("empty member list at step {h}")))?;
            for m in step {
                if m.grid_size() != grid {
                    return Err(Error::GridMismatch(grid, m.grid_size()));
                }
                if m.n_states() != first.n_states() || m.n_actions() != first.n_actions() {
                    return Err(Error::DomainMismatch(format!(
                        "step {h}: member {} has domain {}x{}, expected {}x{}",
                        m.id(),
                        m.n_states(),
                        m.n_actions(),
                        first.n_states(),
                        first.n_actions()
                    )));
                }
            }
        }
        Ok(FiniteClass { members })
    }

    pub fn horizon(&self) -> usize {
        self.members.len()
    }

    pub fn grid_size(&self) -> usize {
        self.members[0][0].grid_size()
    }

    pub fn n_actions(&self) -> usize {
        self.members[0][0].n_actions()
    }

    pub fn members_at(&self, h: usize) -> &[CondDistTable] {
        &self.members[h]
    }

    pub fn member(&self, h: usize, i: usize) -> &CondDistTable {
        &self.members[h][i]
    }

    /// `|F| = prod_h |F_h|`, the size of the product class.
    pub fn product_size(&self) -> usize {
        self.members
            .iter()
            .map(|step| step.len())
            .fold(1usize, |acc, n| acc.saturating_mul(n))
    }

    /// All member index tuples in lexicographic order (step 0 most
    /// significant).
    pub fn tuples(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(self.product_size());
        let mut current = vec![0usize; self.horizon()];
        loop {
            out.push(current.clone());
            let mut h = self.horizon();
            loop {
                if h == 0 {
                    return out;
                }
                h -= 1;
                current[h] += 1;
                if current[h] < self.members[h].len() {
                    break;
                }
                current[h] = 0;
            }
        }
    }
}

/// One contextual-bandit observation; the cost is stored as a grid index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleCB {
    pub x: usize,
    pub a: usize,
    pub cost_idx: usize,
}

/// One RL transition observation at step `h` (0-based); `next` is `None` at
/// the terminal step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleRL {
    pub h: usize,
    pub x: usize,
    pub a: usize,
    pub cost_idx: usize,
    pub next: Option<usize>,
}

/// Log-likelihood `sum_i log f(c_i | x_i, a_i)`; `-inf` if any observed cost
/// has zero mass under `f`.
pub fn loglik_cb(f: &CondDistTable, data: &[SampleCB]) -> f64 {
    let mut total = 0.0;
    for s in data {
        let p = f.dist(s.x, s.a).mass(s.cost_idx);
        if p == 0.0 {
            return f64::NEG_INFINITY;
        }
        total += p.ln();
    }
    total
}

/// A contextual-bandit confidence set: member indices within `beta` of the
/// maximum log-likelihood. `degenerate` is set when every member had
/// log-likelihood `-inf`, in which case the whole class is returned.
#[derive(Debug, Clone, PartialEq)]
pub struct CbConfSet {
    pub indices: Vec<usize>,
    pub degenerate: bool,
}

/// `{ f : L_CB(f, data) >= max_g L_CB(g, data) - beta }` over the step-0
/// member list. Members with `-inf` likelihood are excluded unless all are
/// `-inf` (then the full class is returned and flagged degenerate). The MLE
/// always qualifies, so the set is never empty.
pub fn confset_cb(class: &FiniteClass, data: &[SampleCB], beta: f64) -> CbConfSet {
    let members = class.members_at(0);
    let logliks: Vec<f64> = members.iter().map(|f| loglik_cb(f, data)).collect();
    confset_from_logliks(&logliks, beta)
}

fn confset_from_logliks(logliks: &[f64], beta: f64) -> CbConfSet {
    let max = logliks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return CbConfSet {
            indices: (0..logliks.len()).collect(),
            degenerate: true,
        };
    }
    let indices = logliks
        .iter()
        .enumerate()
        .filter(|(_, &l)| l.is_finite() && l >= max - beta)
        .map(|(i, _)| i)
        .collect();
    CbConfSet {
        indices,
        degenerate: false,
    }
}

/// How the next-step action `a'` is chosen when forming regression targets:
/// greedily w.r.t. the candidate next-step table, or following a fixed policy.
#[derive(Clone, Copy)]
pub enum TargetPolicy<'a> {
    Greedy,
    Follow(&'a Policy),
}

/// The conditional law of `c + y` given an observed `(c, x')`, where
/// `y ~ f_next(x', a')` and `a'` is chosen per `mode`. Terminal transitions
/// give the point mass at `c`. Errors if the convolution clamps, which means
/// the environment's normalization certificate was violated.
pub fn rl_target(
    grid_size: usize,
    f_next: Option<&CondDistTable>,
    sample: &SampleRL,
    mode: TargetPolicy,
) -> Result<GridDist> {
    let delta_c = GridDist::point_mass(grid_size, sample.cost_idx)?;
    let (Some(f_next), Some(x_next)) = (f_next, sample.next) else {
        return Ok(delta_c);
    };
    let continuation = match mode {
        TargetPolicy::Greedy => f_next.dist(x_next, f_next.greedy_action(x_next)).clone(),
        TargetPolicy::Follow(pi) => {
            let probs = pi.action_probs(sample.h + 1, x_next);
            let comps: Vec<(f64, &GridDist)> = probs
                .iter()
                .enumerate()
                .map(|(a, &w)| (w, f_next.dist(x_next, a)))
                .collect();
            mixture(&comps)?
        }
    };
    let (target, clamped) = convolve_clamped(&delta_c, &continuation)?;
    if clamped {
        return Err(Error::Clamped);
    }
    Ok(target)
}

/// How observed targets are scored: `Exact` takes the expectation of
/// `log f_h(z | x, a)` under the target law (a finite sum on the grid);
/// `Sampled` draws one `z` per observation from the run's generator.
pub enum LossMode<'a> {
    Exact,
    Sampled(&'a mut ChaCha8Rng),
}

/// Temporal-difference log-likelihood of `f_h` at step `h`:
/// `sum_i score(f_h, z_i)` with `z_i ~ rl_target(f_next, sample_i)`.
/// `-inf` propagates exactly as in [`loglik_cb`].
pub fn loglik_rl(
    f_h: &CondDistTable,
    f_next: Option<&CondDistTable>,
    data_h: &[SampleRL],
    target: TargetPolicy,
    mut mode: LossMode,
) -> Result<f64> {
    let grid_size = f_h.grid_size();
    let mut total = 0.0;
    for s in data_h {
        let law = rl_target(grid_size, f_next, s, target)?;
        let fd = f_h.dist(s.x, s.a);
        match &mut mode {
            LossMode::Exact => {
                for (z, &w) in law.masses().iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let p = fd.mass(z);
                    if p == 0.0 {
                        return Ok(f64::NEG_INFINITY);
                    }
                    total += w * p.ln();
                }
            }
            LossMode::Sampled(rng) => {
                let z = law.sample_idx(*rng);
                let p = fd.mass(z);
                if p == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                total += p.ln();
            }
        }
        if total == f64::NEG_INFINITY {
            return Ok(total);
        }
    }
    Ok(total)
}

/// An RL confidence set over member index tuples `(f_1, ..., f_H)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RlConfSet {
    /// Feasible tuples in lexicographic order.
    pub tuples: Vec<Vec<usize>>,
    /// Set when some per-step maximization saw only `-inf` likelihoods; the
    /// constraint at that slot is then vacuous.
    pub degenerate: bool,
}

/// `{ (f_1..f_H) : forall h, L_RL(f_h, f_{h+1}, D_h) >= max_g L_RL(g, f_{h+1}, D_h) - beta }`
/// with `f_{H+1}` terminal.
///
/// The per-step maxima are computed once per choice of `f_{h+1}` and reused
/// across all tuples sharing it. With exact-mode scoring, observations are
/// grouped by `(x, a, c, x')` so the cost is governed by the number of
/// distinct transitions rather than the dataset size.
pub fn confset_rl(
    class: &FiniteClass,
    data: &[Vec<SampleRL>],
    beta: f64,
    target: TargetPolicy,
    mut mode: LossMode,
) -> Result<RlConfSet> {
    let horizon = class.horizon();
    if data.len() != horizon {
        return Err(Error::DomainMismatch(format!(
            "got datasets for {} steps, class horizon is {horizon}",
            data.len()
        )));
    }
    let grid_size = class.grid_size();

    // ok[h][next_choice][g]: feasibility of member g at step h when the
    // next-step member is `next_choice` (index into F_{h+1}; a single slot at
    // the terminal step).
    let mut ok: Vec<Vec<Vec<bool>>> = Vec::with_capacity(horizon);
    let mut degenerate = false;

    for h in 0..horizon {
        let n_next = if h + 1 < horizon {
            class.members_at(h + 1).len()
        } else {
            1
        };
        let n_members = class.members_at(h).len();
        let grouped = match mode {
            LossMode::Exact => Some(group_samples(&data[h])),
            LossMode::Sampled(_) => None,
        };
        let mut ok_h = Vec::with_capacity(n_next);
        for j in 0..n_next {
            let f_next = if h + 1 < horizon {
                Some(class.member(h + 1, j))
            } else {
                None
            };
            let mut logliks = Vec::with_capacity(n_members);
            match (&grouped, &mut mode) {
                (Some(groups), _) => {
                    let targets = group_targets(grid_size, f_next, groups, target)?;
                    for g in class.members_at(h) {
                        logliks.push(grouped_loglik(g, groups, &targets));
                    }
                }
                (None, LossMode::Sampled(rng)) => {
                    // One target draw per observation, shared across members:
                    // the target law depends on f_{h+1}, not on the member
                    // being scored.
                    let mut draws = Vec::with_capacity(data[h].len());
                    for s in &data[h] {
                        let law = rl_target(grid_size, f_next, s, target)?;
                        draws.push(law.sample_idx(*rng));
                    }
                    for g in class.members_at(h) {
                        let mut total = 0.0;
                        for (s, &z) in data[h].iter().zip(&draws) {
                            let p = g.dist(s.x, s.a).mass(z);
                            if p == 0.0 {
                                total = f64::NEG_INFINITY;
                                break;
                            }
                            total += p.ln();
                        }
                        logliks.push(total);
                    }
                }
                (None, LossMode::Exact) => unreachable!(),
            }
            let set = confset_from_logliks(&logliks, beta);
            degenerate |= set.degenerate;
            let mut ok_row = vec![false; n_members];
            for &i in &set.indices {
                ok_row[i] = true;
            }
            ok_h.push(ok_row);
        }
        ok.push(ok_h);
    }

    let tuples = class
        .tuples()
        .into_iter()
        .filter(|t| {
            (0..horizon).all(|h| {
                let j = if h + 1 < horizon { t[h + 1] } else { 0 };
                ok[h][j][t[h]]
            })
        })
        .collect();
    Ok(RlConfSet { tuples, degenerate })
}

type TransitionKey = (usize, usize, usize, Option<usize>);

fn group_samples(data: &[SampleRL]) -> Vec<(TransitionKey, usize, usize)> {
    // (key, count, h) sorted by key for a deterministic evaluation order.
    let mut map: BTreeMap<TransitionKey, (usize, usize)> = BTreeMap::new();
    for s in data {
        let e = map.entry((s.x, s.a, s.cost_idx, s.next)).or_insert((0, s.h));
        e.0 += 1;
    }
    map.into_iter().map(|(k, (c, h))| (k, c, h)).collect()
}

fn group_targets(
    grid_size: usize,
    f_next: Option<&CondDistTable>,
    groups: &[(TransitionKey, usize, usize)],
    target: TargetPolicy,
) -> Result<Vec<GridDist>> {
    groups
        .iter()
        .map(|&((x, a, cost_idx, next), _, h)| {
            let s = SampleRL {
                h,
                x,
                a,
                cost_idx,
                next,
            };
            rl_target(grid_size, f_next, &s, target)
        })
        .collect()
}

fn grouped_loglik(
    g: &CondDistTable,
    groups: &[(TransitionKey, usize, usize)],
    targets: &[GridDist],
) -> f64 {
    let mut total = 0.0;
    for (((x, a, _, _), count, _), law) in groups.iter().zip(targets) {
        let fd = g.dist(*x, *a);
        let mut contrib = 0.0;
        for (z, &w) in law.masses().iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let p = fd.mass(z);
            if p == 0.0 {
                return f64::NEG_INFINITY;
            }
            contrib += w * p.ln();
        }
        total += *count as f64 * contrib;
    }
    total
}

/// Width of a confidence set at `(x, a)`: the spread `max - min` of member
/// means over the set, computed exactly by enumeration. Indices refer to the
/// step-0 member list.
pub fn width(confset: &[usize], class: &FiniteClass, x: usize, a: usize) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &i in confset {
        let m = class.member(0, i).mean(x, a);
        lo = lo.min(m);
        hi = hi.max(m);
    }
    if confset.is_empty() {
        return 0.0;
    }
    hi - lo
}
