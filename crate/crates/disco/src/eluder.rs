//! Brute-force oracle for the l1 distributional eluder dimension of tiny
//! instances.
//!
//! The dimension is the length of the longest sequence `d_1, ..., d_L` drawn
//! from the distribution family (repeats allowed) such that for some
//! threshold `eps >= eps0` and every position `t` there is a function `f`
//! with `|E_{d_t} f| > eps` while `sum_{i<t} |E_{d_i} f| <= eps`.
//!
//! A function that witnesses some position adds more than `eps` to its own
//! budget, so it can never witness again; the dimension is therefore at most
//! the number of functions, which caps the search depth.
//!
//! The search is a depth-first enumeration over sequences that carries the
//! exact set of thresholds still feasible for the prefix, represented as a
//! union of half-open intervals. Witness budgets are running sums of realized
//! expectation values, so the feasible-threshold intervals can open at points
//! that are not themselves realized values; tracking intervals rather than
//! scanning a fixed candidate set keeps the search exact.

use serde::{Deserialize, Serialize};

use crate::env::{occupancy, CbEnv, Policy, TabularMdp};
use crate::dist::triangular_discrimination;
use crate::error::{Error, Result};
use crate::func_class::FiniteClass;

/// Hard cap on the distribution family; the sequence search is exponential,
/// so larger instances are refused rather than silently ground through.
pub const MAX_DISTS: usize = 12;

/// A point set, a finite family of real functions on it, a finite family of
/// distributions over it, and a threshold floor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EluderInstance {
    pub n_points: usize,
    /// `functions[f][s]`: value of function `f` at point `s`.
    pub functions: Vec<Vec<f64>>,
    /// `dists[d][s]`: probability of point `s` under distribution `d`.
    pub dists: Vec<Vec<f64>>,
    pub epsilon0: f64,
    /// Only the l1 case is implemented.
    pub norm_p: u8,
}

impl EluderInstance {
    pub fn new(
        n_points: usize,
        functions: Vec<Vec<f64>>,
        dists: Vec<Vec<f64>>,
        epsilon0: f64,
    ) -> Result<Self> {
        let inst = EluderInstance {
            n_points,
            functions,
            dists,
            epsilon0,
            norm_p: 1,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.norm_p != 1 {
            return Err(Error::Schema(format!(
                "only the l1 eluder dimension is supported, got p = {}",
                self.norm_p
            )));
        }
        if self.epsilon0 <= 0.0 || self.epsilon0.is_nan() {
            return Err(Error::Schema(format!(
                "threshold must be positive, got {}",
                self.epsilon0
            )));
        }
        for f in &self.functions {
            if f.len() != self.n_points {
                return Err(Error::Schema(format!(
                    "function has {} values for {} points",
                    f.len(),
                    self.n_points
                )));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::Schema("function values must be finite".into()));
            }
        }
        for d in &self.dists {
            if d.len() != self.n_points {
                return Err(Error::Schema(format!(
                    "distribution has {} entries for {} points",
                    d.len(),
                    self.n_points
                )));
            }
            let sum: f64 = d.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || d.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                return Err(Error::RowNotNormalized { sum });
            }
        }
        Ok(())
    }
}

/// The exact dimension plus one witnessing sequence of distribution indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EluderResult {
    pub dim: usize,
    pub witness: Vec<usize>,
}

/// Default threshold when none is supplied: `1 / K`.
pub fn default_threshold(episodes: usize) -> f64 {
    1.0 / episodes as f64
}

type Intervals = Vec<(f64, f64)>;

fn intersect(a: &Intervals, b: &Intervals) -> Intervals {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo < hi {
            out.push((lo, hi));
        }
        if a[i].1 <= b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

fn union_sorted(mut parts: Intervals) -> Intervals {
    parts.sort_by(|a, b| a.partial_cmp(b).expect("finite interval endpoints"));
    let mut out: Intervals = Vec::new();
    for (lo, hi) in parts {
        if let Some(last) = out.last_mut() {
            if lo <= last.1 {
                last.1 = last.1.max(hi);
                continue;
            }
        }
        out.push((lo, hi));
    }
    out
}

/// Exact l1 eluder dimension by exhaustive sequence search.
pub fn eluder_dim(inst: &EluderInstance) -> Result<EluderResult> {
    inst.validate()?;
    if inst.dists.len() > MAX_DISTS {
        return Err(Error::SizeGuard {
            what: "eluder distribution family",
            size: inst.dists.len(),
            limit: MAX_DISTS,
        });
    }
    // exps[d][f] = E_{d} f, memoized once.
    let exps: Vec<Vec<f64>> = inst
        .dists
        .iter()
        .map(|d| {
            inst.functions
                .iter()
                .map(|f| f.iter().zip(d).map(|(v, p)| v * p).sum::<f64>())
                .collect()
        })
        .collect();

    let n_funcs = inst.functions.len();
    let mut best = EluderResult {
        dim: 0,
        witness: Vec::new(),
    };
    let mut seq: Vec<usize> = Vec::new();
    let mut budgets = vec![0.0f64; n_funcs];
    let feasible: Intervals = vec![(inst.epsilon0, f64::INFINITY)];
    dfs(
        inst,
        &exps,
        &mut seq,
        &mut budgets,
        &feasible,
        &mut best,
        n_funcs,
    );
    Ok(best)
}

fn dfs(
    inst: &EluderInstance,
    exps: &[Vec<f64>],
    seq: &mut Vec<usize>,
    budgets: &mut Vec<f64>,
    feasible: &Intervals,
    best: &mut EluderResult,
    depth_cap: usize,
) {
    if seq.len() > best.dim {
        best.dim = seq.len();
        best.witness = seq.clone();
    }
    if seq.len() == depth_cap {
        return;
    }
    for d in 0..inst.dists.len() {
        // Thresholds this element can extend the sequence at: some function
        // must clear it at `d` while its accumulated budget stays below it.
        let mut parts: Intervals = Vec::new();
        for (f, &e) in exps[d].iter().enumerate() {
            let lo = inst.epsilon0.max(budgets[f]);
            let hi = e.abs();
            if lo < hi {
                parts.push((lo, hi));
            }
        }
        if parts.is_empty() {
            continue;
        }
        let next = intersect(feasible, &union_sorted(parts));
        if next.is_empty() {
            continue;
        }
        seq.push(d);
        let saved: Vec<f64> = budgets.clone();
        for (f, b) in budgets.iter_mut().enumerate() {
            *b += exps[d][f].abs();
        }
        dfs(inst, exps, seq, budgets, &next, best, depth_cap);
        *budgets = saved;
        seq.pop();
    }
}

/// Bandit eluder instance: points are state-action pairs, the distribution
/// family is all point masses, and each class member contributes the map
/// `(x,a) -> D(f(x,a) || C(x,a))` against the true cost law.
pub fn build_cb_instance(
    class: &FiniteClass,
    env: &CbEnv,
    epsilon0: f64,
) -> Result<EluderInstance> {
    if class.horizon() != 1 {
        return Err(Error::DomainMismatch(format!(
            "bandit instance needs a one-step class, got horizon {}",
            class.horizon()
        )));
    }
    let n_points = env.n_contexts() * env.n_actions();
    let mut functions = Vec::with_capacity(class.members_at(0).len());
    for member in class.members_at(0) {
        let mut values = Vec::with_capacity(n_points);
        for x in 0..env.n_contexts() {
            for a in 0..env.n_actions() {
                values.push(triangular_discrimination(
                    member.dist(x, a),
                    env.cost_law(x, a),
                )?);
            }
        }
        functions.push(values);
    }
    let dists = (0..n_points)
        .map(|z| {
            let mut d = vec![0.0; n_points];
            d[z] = 1.0;
            d
        })
        .collect();
    EluderInstance::new(n_points, functions, dists, epsilon0)
}

/// Which step-level instance to build for RL classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EluderMode {
    /// Functions over state-action pairs, distributions are policy
    /// occupancies `d_h^pi(x, a)`.
    QType,
    /// Functions over states (uniform-action averaged), distributions are
    /// state occupancies `d_h^pi(x)`.
    VType,
}

/// RL eluder instance at step `h`: each product-class tuple contributes the
/// divergence residual of `f_h` against the optimality backup of `f_{h+1}`,
/// and the distribution family is the occupancies of the supplied policies
/// from the MDP's initial distribution.
pub fn build_rl_instance(
    class: &FiniteClass,
    mdp: &TabularMdp,
    policies: &[Policy],
    h: usize,
    mode: EluderMode,
    epsilon0: f64,
) -> Result<EluderInstance> {
    let horizon = class.horizon();
    if h >= horizon {
        return Err(Error::DomainMismatch(format!(
            "step {h} out of range for horizon {horizon}"
        )));
    }
    let na = mdp.n_actions();
    let nx = mdp.n_states(h);

    // Residual tables per (f_h, f_{h+1}) pair; deduplicating over the pair
    // rather than ranging over full tuples gives the same function family.
    let next_choices: Vec<Option<usize>> = if h + 1 < horizon {
        (0..class.members_at(h + 1).len()).map(Some).collect()
    } else {
        vec![None]
    };
    let mut pair_values: Vec<Vec<f64>> = Vec::new();
    for j in &next_choices {
        let f_next = j.map(|j| class.member(h + 1, j));
        let target = crate::env::bellman_dist_star(mdp, f_next, h)?;
        for member in class.members_at(h) {
            let mut values = Vec::with_capacity(nx * na);
            for x in 0..nx {
                for a in 0..na {
                    values.push(triangular_discrimination(
                        member.dist(x, a),
                        target.dist(x, a),
                    )?);
                }
            }
            pair_values.push(values);
        }
    }

    let d1 = mdp.initial_dist();
    let mut dists = Vec::with_capacity(policies.len());
    for pi in policies {
        let occ = occupancy(mdp, pi, &d1)?;
        dists.push(occ[h].clone());
    }

    match mode {
        EluderMode::QType => EluderInstance::new(nx * na, pair_values, dists, epsilon0),
        EluderMode::VType => {
            let functions = pair_values
                .iter()
                .map(|vals| {
                    (0..nx)
                        .map(|x| {
                            (0..na).map(|a| vals[x * na + a]).sum::<f64>() / na as f64
                        })
                        .collect()
                })
                .collect();
            let dists = dists
                .into_iter()
                .map(|layer| {
                    (0..nx)
                        .map(|x| (0..na).map(|a| layer[x * na + a]).sum::<f64>())
                        .collect()
                })
                .collect();
            EluderInstance::new(nx, functions, dists, epsilon0)
        }
    }
}

/// `max_h` of the per-step dimension.
pub fn rl_dimension(
    class: &FiniteClass,
    mdp: &TabularMdp,
    policies: &[Policy],
    mode: EluderMode,
    epsilon0: f64,
) -> Result<usize> {
    let mut dim = 0;
    for h in 0..class.horizon() {
        let inst = build_rl_instance(class, mdp, policies, h, mode, epsilon0)?;
        dim = dim.max(eluder_dim(&inst)?.dim);
    }
    Ok(dim)
}
