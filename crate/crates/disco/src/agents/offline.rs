//! Offline RL with pessimistic policy selection: per candidate policy, fit
//! the MLE confidence set under that policy's Bellman operator, take the
//! worst (highest) in-set estimate of its value, and return the policy whose
//! pessimistic estimate is best.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::agents::cb::BetaSpec;
use crate::dist::{triangular_discrimination, INEQ_SLACK};
use crate::env::{
    bellman_dist_pi, concentrability, occupancy, return_distribution, sample_offline_dataset,
    DataDist, Policy, Start, TabularMdp,
};
use crate::error::{Error, Result};
use crate::func_class::{confset_rl, FiniteClass, LossMode, SampleRL, TargetPolicy};

/// Run parameters for one offline run. The comparator indexes into the policy
/// class and is the policy the guarantees are stated against.
#[derive(Debug, Clone, Serialize)]
pub struct OfflineRunConfig {
    pub n_samples: usize,
    pub delta: f64,
    pub beta: BetaSpec,
    pub seed: u64,
    pub comparator: usize,
}

pub fn auto_beta_offline(
    horizon: usize,
    n_policies: usize,
    class_size: usize,
    delta: f64,
) -> f64 {
    ((horizon as f64) * (n_policies as f64) * (class_size as f64) / delta).ln()
}

/// Per-policy evaluation record.
#[derive(Debug, Clone, Serialize)]
pub struct PolicyEval {
    pub pessimistic_value: f64,
    pub true_value: f64,
    /// `V^pi <= pessimistic_value` (the pessimism event for this policy).
    pub pessimism_ok: bool,
    pub chosen_tuple: Vec<usize>,
    pub set_size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OfflineSummary {
    pub n_samples: usize,
    pub horizon: usize,
    pub delta: f64,
    pub beta: f64,
    pub n_policies: usize,
    pub product_class_size: usize,
    /// Index of the selected policy.
    pub chosen: usize,
    /// Exact value of the selected policy from `d_1`.
    pub v_hat: f64,
    /// Exact value of the comparator.
    pub v_comparator: f64,
    pub suboptimality: f64,
    /// Exact `Var(Z^{comparator})` from `d_1`.
    pub var_comparator: f64,
    /// Single-policy concentrability of the comparator against `nu`.
    #[serde(with = "crate::jsonf")]
    pub concentrability: f64,
    /// `Delta = sum_h E_{comparator}[ D(f_h || T^pi_h f_{h+1}) ]` for the
    /// comparator's pessimistic tuple, via exact occupancies.
    pub delta_comparator: f64,
    /// `sum_h E_{nu_h}[ D(f_h || T^pi_h f_{h+1}) ]` for the same tuple.
    pub nu_delta: f64,
    pub all_pessimistic: bool,
    /// Whenever pessimism held for every policy: `v_hat - v_comparator <=
    /// 4 sqrt(2e var H Delta) + (4 sqrt(12) + 5) H^1.5 Delta`.
    pub decomposition_ok: bool,
    /// `Delta <= concentrability * nu_delta`.
    pub change_of_measure_ok: bool,
    pub per_policy: Vec<PolicyEval>,
}

pub fn pdisco_run(
    mdp: &TabularMdp,
    class: &FiniteClass,
    policies: &[Policy],
    nu: &DataDist,
    cfg: &OfflineRunConfig,
) -> Result<OfflineSummary> {
    if policies.is_empty() {
        return Err(Error::Scenario("policy class must be nonempty".into()));
    }
    if cfg.comparator >= policies.len() {
        return Err(Error::Scenario(format!(
            "comparator index {} out of range ({} policies)",
            cfg.comparator,
            policies.len()
        )));
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::Scenario(format!(
            "delta must be in (0,1), got {}",
            cfg.delta
        )));
    }
    let horizon = mdp.horizon();
    let beta = cfg.beta.resolve(auto_beta_offline(
        horizon,
        policies.len(),
        class.product_size(),
        cfg.delta,
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let data = sample_offline_dataset(mdp, nu, cfg.n_samples, &mut rng)?;
    pdisco_on_dataset(mdp, class, policies, nu, &data, beta, cfg)
}

/// Pessimistic selection on an already-drawn dataset.
pub fn pdisco_on_dataset(
    mdp: &TabularMdp,
    class: &FiniteClass,
    policies: &[Policy],
    nu: &DataDist,
    data: &[Vec<SampleRL>],
    beta: f64,
    cfg: &OfflineRunConfig,
) -> Result<OfflineSummary> {
    let horizon = mdp.horizon();
    let d1 = mdp.initial_dist();
    let initial_value = |f1: &crate::func_class::CondDistTable, pi: &Policy| -> f64 {
        let mut v = 0.0;
        for (x, &w) in d1.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (a, &pa) in pi.action_probs(0, x).iter().enumerate() {
                if pa > 0.0 {
                    v += w * pa * f1.mean(x, a);
                }
            }
        }
        v
    };

    let mut per_policy = Vec::with_capacity(policies.len());
    let mut chosen = 0usize;
    let mut chosen_value = f64::INFINITY;
    for (idx, pi) in policies.iter().enumerate() {
        let set = confset_rl(class, data, beta, TargetPolicy::Follow(pi), LossMode::Exact)?;
        if set.tuples.is_empty() {
            return Err(Error::EmptyConfidenceSet { h: 0 });
        }
        // Pessimistic estimate: the largest in-set initial value under pi.
        let mut best_tuple = &set.tuples[0];
        let mut pess = f64::NEG_INFINITY;
        for t in &set.tuples {
            let v = initial_value(class.member(0, t[0]), pi);
            if v > pess {
                pess = v;
                best_tuple = t;
            }
        }
        let true_value = return_distribution(mdp, pi, Start::InitialDist)?.mean();
        per_policy.push(PolicyEval {
            pessimistic_value: pess,
            true_value,
            pessimism_ok: true_value <= pess + INEQ_SLACK,
            chosen_tuple: best_tuple.clone(),
            set_size: set.tuples.len(),
        });
        if pess < chosen_value {
            chosen_value = pess;
            chosen = idx;
        }
    }

    let comparator = cfg.comparator;
    let pi_comp = &policies[comparator];
    let comp_tuple = &per_policy[comparator].chosen_tuple;
    let comp_members: Vec<&crate::func_class::CondDistTable> = comp_tuple
        .iter()
        .enumerate()
        .map(|(h, &i)| class.member(h, i))
        .collect();

    // Divergence residuals of the comparator's pessimistic tuple under the
    // comparator's own Bellman operator, averaged exactly under both the
    // comparator occupancy and the data distribution.
    let occ = occupancy(mdp, pi_comp, &d1)?;
    let mut delta_comp = 0.0;
    let mut nu_delta = 0.0;
    for h in 0..horizon {
        let f_next = if h + 1 < horizon {
            Some(comp_members[h + 1])
        } else {
            None
        };
        let target = bellman_dist_pi(mdp, f_next, pi_comp, h)?;
        for x in 0..mdp.n_states(h) {
            for a in 0..mdp.n_actions() {
                let idx = x * mdp.n_actions() + a;
                let occ_w = occ[h][idx];
                let nu_w = nu.weights(h)[idx];
                if occ_w == 0.0 && nu_w == 0.0 {
                    continue;
                }
                let dd =
                    triangular_discrimination(comp_members[h].dist(x, a), target.dist(x, a))?;
                delta_comp += occ_w * dd;
                nu_delta += nu_w * dd;
            }
        }
    }

    let z_comp = return_distribution(mdp, pi_comp, Start::InitialDist)?;
    let var_comp = z_comp.variance();
    let conc = concentrability(mdp, pi_comp, nu)?;
    let v_hat = per_policy[chosen].true_value;
    let v_comp = per_policy[comparator].true_value;
    let suboptimality = v_hat - v_comp;
    let all_pessimistic = per_policy.iter().all(|p| p.pessimism_ok);

    let h_f = horizon as f64;
    let rhs = 4.0 * (2.0 * std::f64::consts::E * var_comp * h_f * delta_comp).sqrt()
        + (4.0 * 12f64.sqrt() + 5.0) * h_f.powf(1.5) * delta_comp;
    let decomposition_ok = !all_pessimistic || suboptimality <= rhs + INEQ_SLACK;
    let change_of_measure_ok =
        conc == f64::INFINITY || delta_comp <= conc * nu_delta + INEQ_SLACK;

    Ok(OfflineSummary {
        n_samples: cfg.n_samples,
        horizon,
        delta: cfg.delta,
        beta,
        n_policies: policies.len(),
        product_class_size: class.product_size(),
        chosen,
        v_hat,
        v_comparator: v_comp,
        suboptimality,
        var_comparator: var_comp,
        concentrability: conc,
        delta_comparator: delta_comp,
        nu_delta,
        all_pessimistic,
        decomposition_ok,
        change_of_measure_ok,
        per_policy,
    })
}
