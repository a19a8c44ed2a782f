//! Online RL with distributional confidence sets: each episode picks the
//! member tuple with the lowest optimistic initial value, acts greedily with
//! respect to it, and refits the per-step MLE confidence set on the growing
//! datasets. Exact environment quantities (values, return variances,
//! occupancy-weighted divergence residuals) are logged so the regret
//! decomposition can be checked per episode rather than estimated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::agents::cb::BetaSpec;
use crate::dist::{sample_from_weights, triangular_discrimination, INEQ_SLACK};
use crate::env::{
    bellman_dist_pi, bellman_dist_star, occupancy, optimal, return_tables, sample_episode,
    Policy, TabularMdp,
};
use crate::error::{Error, Result};
use crate::func_class::{CondDistTable, FiniteClass, LossMode, SampleRL, TargetPolicy};

/// Run parameters for one online-RL run.
#[derive(Debug, Clone, Serialize)]
pub struct OnlineRunConfig {
    pub episodes: usize,
    pub delta: f64,
    pub beta: BetaSpec,
    /// Uniform-action exploration: spend `H` rollouts per episode, each
    /// rolling the greedy policy in for `h` steps and taking one uniform
    /// action.
    pub uae: bool,
    pub seed: u64,
}

pub fn auto_beta_online(horizon: usize, episodes: usize, class_size: usize, delta: f64) -> f64 {
    ((horizon as f64) * (episodes as f64) * (class_size as f64) / delta).ln()
}

/// Per-episode record with every quantity of the second-order decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct OnlineEpisodeLog {
    pub k: usize,
    pub x1: usize,
    pub regret_inst: f64,
    pub regret_cum: f64,
    /// Exact `Var(Z^{pi_k}(x_1))` of the played policy.
    pub var_z: f64,
    /// Exact `Delta_k = sum_h E_{pi_k}[ D(f_h || T*_h f_{h+1}) ]`.
    pub delta_k: f64,
    pub optimism: bool,
    /// Whenever optimism held:
    /// `regret <= 4 sqrt((2e var + 12 H^2 Delta) H Delta) + 5 H Delta`.
    pub decomposition_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OnlineSummary {
    pub episodes: usize,
    pub horizon: usize,
    pub delta: f64,
    pub beta: f64,
    pub uae: bool,
    pub product_class_size: usize,
    pub cumulative_regret: f64,
    pub sum_var: f64,
    pub sum_delta: f64,
    /// `sum_k V*(x_1k)`.
    pub sum_v_star: f64,
    pub optimism_frequency: f64,
    pub all_optimistic: bool,
    pub decomposition_all_ok: bool,
    /// `(1/K) sum_k (V^{pi_k}(x_1k) - V*(x_1k))`: the exact suboptimality of
    /// the uniform mixture over played policies.
    pub mixture_suboptimality: f64,
    pub final_set_size: usize,
    /// Closure diagnostic: whether every member's greedy backup image is
    /// itself a member. `None` when the class exceeds the exhaustive-check
    /// guard. Informational; runs proceed either way.
    pub bellman_complete_star: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct OnlineRunResult {
    pub logs: Vec<OnlineEpisodeLog>,
    pub summary: OnlineSummary,
    /// Greedy action tables of the played policies, `policies[k][h][x]`.
    pub policies: Vec<Vec<Vec<usize>>>,
}

pub fn odisco_run(
    mdp: &TabularMdp,
    class: &FiniteClass,
    cfg: &OnlineRunConfig,
) -> Result<OnlineRunResult> {
    if cfg.episodes == 0 {
        return Err(Error::Scenario("need at least one episode".into()));
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::Scenario(format!(
            "delta must be in (0,1), got {}",
            cfg.delta
        )));
    }
    check_class_domain(mdp, class)?;

    let horizon = mdp.horizon();
    let beta = cfg.beta.resolve(auto_beta_online(
        horizon,
        cfg.episodes,
        class.product_size(),
        cfg.delta,
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let (_, z_star) = optimal(mdp)?;
    let v_star = |x: usize| {
        (0..mdp.n_actions())
            .map(|a| z_star[0].mean(x, a))
            .fold(f64::INFINITY, f64::min)
    };

    let bellman_complete_star =
        check_bellman_complete(mdp, class, &[], 1e-9, COMPLETENESS_CHECK_MAX_PAIRS).ok();

    let mut data: Vec<Vec<SampleRL>> = vec![Vec::new(); horizon];
    let mut tuples = class.tuples();

    let mut logs = Vec::with_capacity(cfg.episodes);
    let mut policies = Vec::with_capacity(cfg.episodes);
    let mut regret_cum = 0.0;
    let mut sum_var = 0.0;
    let mut sum_delta = 0.0;
    let mut sum_v_star = 0.0;
    let mut optimistic_count = 0usize;
    let mut decomposition_all_ok = true;

    for k in 0..cfg.episodes {
        let x1 = mdp.initial_state(k, &mut rng)?;

        // Optimistic tuple: lowest initial LCB, ties toward the earliest
        // tuple in lexicographic order.
        let mut best_value = f64::INFINITY;
        let mut chosen = &tuples[0];
        for t in &tuples {
            let f1 = class.member(0, t[0]);
            let v = (0..mdp.n_actions())
                .map(|a| f1.mean(x1, a))
                .fold(f64::INFINITY, f64::min);
            if v < best_value {
                best_value = v;
                chosen = t;
            }
        }
        let chosen: Vec<&CondDistTable> = chosen
            .iter()
            .enumerate()
            .map(|(h, &i)| class.member(h, i))
            .collect();
        let greedy_actions: Vec<Vec<usize>> = chosen
            .iter()
            .enumerate()
            .map(|(h, f)| (0..mdp.n_states(h)).map(|x| f.greedy_action(x)).collect())
            .collect();
        let pi_k = Policy::deterministic(&greedy_actions, mdp.n_actions())?;

        let optimism = best_value <= v_star(x1) + INEQ_SLACK;
        if optimism {
            optimistic_count += 1;
        }

        // Exact diagnostics of the played policy.
        let z_k = return_tables(mdp, &pi_k)?;
        let a1 = greedy_actions[0][x1];
        let v_k = z_k[0].mean(x1, a1);
        let var_z = z_k[0].dist(x1, a1).variance();
        let regret_inst = v_k - v_star(x1);

        let mut x1_dist = vec![0.0; mdp.n_states(0)];
        x1_dist[x1] = 1.0;
        let occ = occupancy(mdp, &pi_k, &x1_dist)?;
        let mut delta_k = 0.0;
        for h in 0..horizon {
            let f_next = if h + 1 < horizon { Some(chosen[h + 1]) } else { None };
            let target = bellman_dist_star(mdp, f_next, h)?;
            for x in 0..mdp.n_states(h) {
                for a in 0..mdp.n_actions() {
                    let w = occ[h][x * mdp.n_actions() + a];
                    if w == 0.0 {
                        continue;
                    }
                    delta_k += w
                        * triangular_discrimination(chosen[h].dist(x, a), target.dist(x, a))?;
                }
            }
        }

        let h_f = horizon as f64;
        let rhs = 4.0
            * ((2.0 * std::f64::consts::E * var_z + 12.0 * h_f * h_f * delta_k)
                * h_f
                * delta_k)
                .sqrt()
            + 5.0 * h_f * delta_k;
        let decomposition_ok = !optimism || regret_inst <= rhs + INEQ_SLACK;
        decomposition_all_ok &= decomposition_ok;

        regret_cum += regret_inst;
        sum_var += var_z;
        sum_delta += delta_k;
        sum_v_star += v_star(x1);
        logs.push(OnlineEpisodeLog {
            k,
            x1,
            regret_inst,
            regret_cum,
            var_z,
            delta_k,
            optimism,
            decomposition_ok,
        });
        policies.push(greedy_actions);

        // Data collection. Without UAE: one on-policy trajectory. With UAE:
        // one tuple per step, reached by rolling the greedy policy in
        // (transitions only; intermediate costs are irrelevant and not drawn)
        // and taking a uniformly random action.
        if !cfg.uae {
            for s in sample_episode(mdp, &pi_k, x1, &mut rng) {
                data[s.h].push(s);
            }
        } else {
            for h in 0..horizon {
                let mut x = x1;
                for t in 0..h {
                    let a = pi_k.sample_action(t, x, &mut rng);
                    x = sample_from_weights(mdp.transition(t, x, a), &mut rng);
                }
                let a: usize = sample_from_weights(
                    &vec![1.0 / mdp.n_actions() as f64; mdp.n_actions()],
                    &mut rng,
                );
                let cost_idx = mdp.cost_law(h, x, a).sample_idx(&mut rng);
                let next = if h + 1 < horizon {
                    Some(sample_from_weights(mdp.transition(h, x, a), &mut rng))
                } else {
                    None
                };
                data[h].push(SampleRL { h, x, a, cost_idx, next });
            }
        }

        let set = crate::func_class::confset_rl(
            class,
            &data,
            beta,
            TargetPolicy::Greedy,
            LossMode::Exact,
        )?;
        if set.tuples.is_empty() {
            return Err(Error::EmptyConfidenceSet { h: 0 });
        }
        tuples = set.tuples;
    }

    let summary = OnlineSummary {
        episodes: cfg.episodes,
        horizon,
        delta: cfg.delta,
        beta,
        uae: cfg.uae,
        product_class_size: class.product_size(),
        cumulative_regret: regret_cum,
        sum_var,
        sum_delta,
        sum_v_star,
        optimism_frequency: optimistic_count as f64 / cfg.episodes as f64,
        all_optimistic: optimistic_count == cfg.episodes,
        decomposition_all_ok,
        mixture_suboptimality: regret_cum / cfg.episodes as f64,
        final_set_size: tuples.len(),
        bellman_complete_star,
    };
    Ok(OnlineRunResult {
        logs,
        summary,
        policies,
    })
}

fn check_class_domain(mdp: &TabularMdp, class: &FiniteClass) -> Result<()> {
    if class.horizon() != mdp.horizon() {
        return Err(Error::DomainMismatch(format!(
            "class horizon {} vs MDP horizon {}",
            class.horizon(),
            mdp.horizon()
        )));
    }
    if class.grid_size() != mdp.grid_size() {
        return Err(Error::GridMismatch(class.grid_size(), mdp.grid_size()));
    }
    for h in 0..mdp.horizon() {
        let m = &class.members_at(h)[0];
        if m.n_states() != mdp.n_states(h) || m.n_actions() != mdp.n_actions() {
            return Err(Error::DomainMismatch(format!(
                "class domain at step {h} is {}x{}, MDP has {}x{}",
                m.n_states(),
                m.n_actions(),
                mdp.n_states(h),
                mdp.n_actions()
            )));
        }
    }
    Ok(())
}

/// Default guard on the exhaustive completeness diagnostic.
pub const COMPLETENESS_CHECK_MAX_PAIRS: usize = 10_000;

/// Exhaustive distributional-completeness check: for every next-step member
/// and for the optimality backup plus every supplied policy, the Bellman
/// image must coincide with some same-step member (within `tol` per mass).
/// Exponential in class size, so guarded by `max_pairs`.
pub fn check_bellman_complete(
    mdp: &TabularMdp,
    class: &FiniteClass,
    policies: &[Policy],
    tol: f64,
    max_pairs: usize,
) -> Result<bool> {
    let horizon = mdp.horizon();
    let mut pairs = 0usize;
    for h in 0..horizon.saturating_sub(1) {
        pairs = pairs.saturating_add(class.members_at(h + 1).len() * (1 + policies.len()));
    }
    if pairs > max_pairs {
        return Err(Error::SizeGuard {
            what: "bellman-completeness member-operator pairs",
            size: pairs,
            limit: max_pairs,
        });
    }
    for h in 0..horizon.saturating_sub(1) {
        for f_next in class.members_at(h + 1) {
            let mut images = vec![bellman_dist_star(mdp, Some(f_next), h)?];
            for pi in policies {
                images.push(bellman_dist_pi(mdp, Some(f_next), pi, h)?);
            }
            for image in images {
                let found = class.members_at(h).iter().any(|g| {
                    (0..mdp.n_states(h)).all(|x| {
                        (0..mdp.n_actions()).all(|a| {
                            image
                                .dist(x, a)
                                .masses()
                                .iter()
                                .zip(g.dist(x, a).masses())
                                .all(|(p, q)| (p - q).abs() <= tol)
                        })
                    })
                });
                if !found {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
