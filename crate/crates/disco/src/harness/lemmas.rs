//! Executable forms of the divergence and MDP identities: random-instance
//! generators plus a checker that asserts every inequality and reports the
//! worst observed slack. A failing case is serialized so it can be replayed
//! from its seed and case index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dist::{
    hellinger_sq, triangular_discrimination, GridDist, INEQ_SLACK,
};
use crate::env::{
    bellman_dist_pi, occupancy, occupancy_from, return_tables, InitialStates, Policy, Start,
    TabularMdp,
};
use crate::error::Result;
use crate::func_class::CondDistTable;

/// Outcome of one named inequality/identity check over many random cases.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaCheck {
    pub name: String,
    pub cases: usize,
    /// Largest `lhs - rhs` seen (negative values mean margin); for identities
    /// the largest absolute deviation.
    pub worst_slack: f64,
    pub pass: bool,
    /// Serialized JSON of the first failing case, for replay.
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub rows: Vec<LemmaCheck>,
    pub pass: bool,
}

impl LemmaReport {
    fn from_rows(rows: Vec<LemmaCheck>) -> Self {
        let pass = rows.iter().all(|r| r.pass);
        LemmaReport { rows, pass }
    }
}

#[derive(Serialize)]
struct PairCase<'a> {
    seed: u64,
    case: usize,
    grid_size: usize,
    f: &'a [f64],
    g: &'a [f64],
    lhs: f64,
    rhs: f64,
}

/// Random grid distribution. Styles rotate through dense, sparse, and
/// point-mass shapes so zero-mass grid points are exercised.
pub fn random_grid_dist<R: Rng + ?Sized>(rng: &mut R, grid_size: usize, style: usize) -> GridDist {
    let mut masses = vec![0.0; grid_size];
    match style % 4 {
        0 | 3 => {
            for m in masses.iter_mut() {
                let u: f64 = rng.random();
                *m = -(1.0 - u).ln();
            }
        }
        1 => {
            let mut any = false;
            for m in masses.iter_mut() {
                if rng.random::<f64>() < 0.5 {
                    let u: f64 = rng.random();
                    *m = -(1.0 - u).ln();
                    any = true;
                }
            }
            if !any {
                let idx = (rng.random::<f64>() * grid_size as f64) as usize;
                masses[idx.min(grid_size - 1)] = 1.0;
            }
        }
        _ => {
            let idx = (rng.random::<f64>() * grid_size as f64) as usize;
            masses[idx.min(grid_size - 1)] = 1.0;
        }
    }
    let sum: f64 = masses.iter().sum();
    for m in masses.iter_mut() {
        *m /= sum;
    }
    GridDist::new(masses).expect("normalized random masses")
}

/// Divergence suite: the Hellinger sandwich and the three mean/variance
/// inequalities, on `count` random pairs per grid size plus the disjoint
/// point-mass corner pair.
pub fn check_divergence_lemmas(count: usize, grid_sizes: &[usize], seed: u64) -> LemmaReport {
    let mut sandwich = Checker::new("hellinger_sandwich");
    let mut eq1 = Checker::new("mean_diff_conditional");
    let mut eq2 = Checker::new("mean_diff_unconditional");
    let mut eq3 = Checker::new("variance_diff");

    for &m in grid_sizes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ m as u64);
        for case in 0..count {
            let (f, g) = if case == 0 {
                // adversarial corner: disjoint point masses at the ends
                (
                    GridDist::point_mass(m, 0).expect("grid"),
                    GridDist::point_mass(m, m - 1).expect("grid"),
                )
            } else {
                (
                    random_grid_dist(&mut rng, m, case),
                    random_grid_dist(&mut rng, m, case / 2 + 1),
                )
            };
            let dt = triangular_discrimination(&f, &g).expect("same grid");
            let h2 = hellinger_sq(&f, &g).expect("same grid");
            let mean_gap = (f.mean() - g.mean()).abs();

            let ctx = |lhs: f64, rhs: f64| {
                serde_json::to_string(&PairCase {
                    seed,
                    case,
                    grid_size: m,
                    f: f.masses(),
                    g: g.masses(),
                    lhs,
                    rhs,
                })
                .expect("serializable case")
            };

            sandwich.check(2.0 * h2, dt, &ctx);
            sandwich.check(dt, 4.0 * h2, &ctx);
            if dt <= 0.5 {
                eq1.check(
                    mean_gap,
                    2.0 * ((f.variance() + g.variance()) * dt).sqrt(),
                    &ctx,
                );
            }
            eq2.check(mean_gap, 4.0 * (f.variance() * dt).sqrt() + 5.0 * dt, &ctx);
            eq3.check(
                (f.variance() - g.variance()).abs(),
                4.0 * ((f.variance() + dt) * dt).sqrt(),
                &ctx,
            );
        }
    }
    LemmaReport::from_rows(vec![
        sandwich.finish(),
        eq1.finish(),
        eq2.finish(),
        eq3.finish(),
    ])
}

struct Checker {
    name: &'static str,
    cases: usize,
    worst: f64,
    counterexample: Option<String>,
}

impl Checker {
    fn new(name: &'static str) -> Self {
        Checker {
            name,
            cases: 0,
            worst: f64::NEG_INFINITY,
            counterexample: None,
        }
    }

    fn check(&mut self, lhs: f64, rhs: f64, ctx: &dyn Fn(f64, f64) -> String) {
        self.cases += 1;
        let slack = lhs - rhs;
        if slack > self.worst {
            self.worst = slack;
        }
        if slack > INEQ_SLACK && self.counterexample.is_none() {
            self.counterexample = Some(ctx(lhs, rhs));
        }
    }

    fn check_identity(&mut self, lhs: f64, rhs: f64, ctx: &dyn Fn(f64, f64) -> String) {
        self.cases += 1;
        let dev = (lhs - rhs).abs();
        if dev > self.worst {
            self.worst = dev;
        }
        if dev > INEQ_SLACK && self.counterexample.is_none() {
            self.counterexample = Some(ctx(lhs, rhs));
        }
    }

    fn finish(self) -> LemmaCheck {
        LemmaCheck {
            name: self.name.to_string(),
            cases: self.cases,
            worst_slack: if self.cases == 0 {
                0.0
            } else {
                self.worst
            },
            pass: self.counterexample.is_none(),
            counterexample: self.counterexample,
        }
    }
}

/// Knobs for the random MDP generator.
#[derive(Debug, Clone, Copy)]
pub struct RandomMdpParams {
    pub max_horizon: usize,
    pub max_states: usize,
    pub max_actions: usize,
    pub grid_size: usize,
    /// Upper bound on the number of distinct trajectories; instances above it
    /// are regenerated.
    pub max_trajectories: Option<usize>,
}

impl Default for RandomMdpParams {
    fn default() -> Self {
        RandomMdpParams {
            max_horizon: 3,
            max_states: 3,
            max_actions: 2,
            grid_size: 7,
            max_trajectories: None,
        }
    }
}

fn random_usize<R: Rng + ?Sized>(rng: &mut R, lo: usize, hi: usize) -> usize {
    let u: f64 = rng.random();
    lo + ((u * (hi - lo + 1) as f64) as usize).min(hi - lo)
}

fn random_dist_with_support<R: Rng + ?Sized>(
    rng: &mut R,
    grid_size: usize,
    max_idx: usize,
    sparse: bool,
) -> GridDist {
    let mut masses = vec![0.0; grid_size];
    let mut any = false;
    for m in masses.iter_mut().take(max_idx + 1) {
        if !sparse || rng.random::<f64>() < 0.6 {
            let u: f64 = rng.random();
            *m = -(1.0 - u).ln();
            any = true;
        }
    }
    if !any {
        masses[random_usize(rng, 0, max_idx)] = 1.0;
    }
    let sum: f64 = masses.iter().sum();
    for m in masses.iter_mut() {
        *m /= sum;
    }
    GridDist::new(masses).expect("normalized random masses")
}

fn random_prob_row<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len)
        .map(|_| {
            let u: f64 = rng.random();
            -(1.0 - u).ln()
        })
        .collect();
    let sum: f64 = row.iter().sum();
    for p in row.iter_mut() {
        *p /= sum;
    }
    row
}

/// Number of distinct trajectories (over all initial states): product of
/// action, cost-support and positive-transition branching.
pub fn trajectory_count(mdp: &TabularMdp) -> usize {
    let horizon = mdp.horizon();
    let mut counts: Vec<usize> = vec![1; mdp.n_states(horizon - 1)];
    for h in (0..horizon).rev() {
        let here: Vec<usize> = (0..mdp.n_states(h))
            .map(|x| {
                (0..mdp.n_actions())
                    .map(|a| {
                        let supp = mdp
                            .cost_law(h, x, a)
                            .masses()
                            .iter()
                            .filter(|&&p| p > 0.0)
                            .count();
                        let succ: usize = if h + 1 < horizon {
                            mdp.transition(h, x, a)
                                .iter()
                                .enumerate()
                                .filter(|(_, &p)| p > 0.0)
                                .map(|(x_next, _)| counts[x_next])
                                .sum()
                        } else {
                            1
                        };
                        supp * succ
                    })
                    .sum()
            })
            .collect();
        counts = here;
        if h == 0 {
            break;
        }
    }
    counts.iter().sum()
}

/// Random certified MDP. Per-step cost supports share the budget
/// `(grid_size - 1) / horizon`, so the normalization certificate always
/// holds. With `max_trajectories` set, sparse cost supports and transitions
/// are drawn until the trajectory count fits.
pub fn random_mdp<R: Rng + ?Sized>(rng: &mut R, params: &RandomMdpParams) -> TabularMdp {
    loop {
        let horizon = random_usize(rng, 1, params.max_horizon);
        let step_budget = (params.grid_size - 1) / horizon;
        assert!(step_budget >= 1, "grid too small for this horizon");
        let n_actions = random_usize(rng, 1, params.max_actions);
        let n_states: Vec<usize> = (0..horizon)
            .map(|_| random_usize(rng, 1, params.max_states))
            .collect();
        let sparse = params.max_trajectories.is_some();
        let costs: Vec<Vec<GridDist>> = (0..horizon)
            .map(|h| {
                (0..n_states[h] * n_actions)
                    .map(|_| random_dist_with_support(rng, params.grid_size, step_budget, sparse))
                    .collect()
            })
            .collect();
        let transitions: Vec<Vec<Vec<f64>>> = (0..horizon.saturating_sub(1))
            .map(|h| {
                (0..n_states[h] * n_actions)
                    .map(|_| {
                        if sparse && n_states[h + 1] > 1 && rng.random::<f64>() < 0.5 {
                            let mut row = vec![0.0; n_states[h + 1]];
                            row[random_usize(rng, 0, n_states[h + 1] - 1)] = 1.0;
                            row
                        } else {
                            random_prob_row(rng, n_states[h + 1])
                        }
                    })
                    .collect()
            })
            .collect();
        let initial = if rng.random::<f64>() < 0.5 {
            InitialStates::Dist(random_prob_row(rng, n_states[0]))
        } else {
            let mut w = vec![0.0; n_states[0]];
            w[random_usize(rng, 0, n_states[0] - 1)] = 1.0;
            InitialStates::Dist(w)
        };
        let mdp = TabularMdp::new(n_states, n_actions, costs, transitions, initial)
            .expect("budgeted supports always certify");
        if let Some(cap) = params.max_trajectories {
            if trajectory_count(&mdp) > cap {
                continue;
            }
        }
        return mdp;
    }
}

/// Random stochastic policy for an MDP.
pub fn random_policy<R: Rng + ?Sized>(rng: &mut R, mdp: &TabularMdp) -> Policy {
    let probs = (0..mdp.horizon())
        .map(|h| {
            (0..mdp.n_states(h))
                .map(|_| random_prob_row(rng, mdp.n_actions()))
                .collect()
        })
        .collect();
    Policy::new(probs).expect("random rows are normalized")
}

/// Random deterministic policy for an MDP.
pub fn random_deterministic_policy<R: Rng + ?Sized>(rng: &mut R, mdp: &TabularMdp) -> Policy {
    let actions: Vec<Vec<usize>> = (0..mdp.horizon())
        .map(|h| {
            (0..mdp.n_states(h))
                .map(|_| random_usize(rng, 0, mdp.n_actions() - 1))
                .collect()
        })
        .collect();
    Policy::deterministic(&actions, mdp.n_actions()).expect("valid action indices")
}

/// Random candidate return tables `f_1..f_H`, with supports capped so that
/// applying the distributional backup at any step never clamps: the table
/// used as the continuation at step `h` may occupy at most
/// `grid_size - 1 - max-cost-support(h)` grid indices.
pub fn random_tables<R: Rng + ?Sized>(rng: &mut R, mdp: &TabularMdp) -> Vec<CondDistTable> {
    (0..mdp.horizon())
        .map(|h| {
            let cap = if h == 0 {
                mdp.grid_size() - 1
            } else {
                let max_cost = (0..mdp.n_states(h - 1) * mdp.n_actions())
                    .map(|i| {
                        mdp.cost_law(h - 1, i / mdp.n_actions(), i % mdp.n_actions())
                            .max_support_idx()
                    })
                    .max()
                    .expect("nonempty step");
                mdp.grid_size() - 1 - max_cost
            };
            let dists = (0..mdp.n_states(h) * mdp.n_actions())
                .map(|_| random_dist_with_support(rng, mdp.grid_size(), cap, false))
                .collect();
            CondDistTable::new(format!("rand_h{h}"), mdp.n_states(h), mdp.n_actions(), dists)
                .expect("matching domain")
        })
        .collect()
}

#[derive(Serialize)]
struct TripleCase {
    seed: u64,
    case: usize,
    horizon: usize,
    h: usize,
    x: usize,
    a: usize,
    lhs: f64,
    rhs: f64,
}

/// MDP suite: performance-difference identity, law of total variance, and
/// the per-pair change-of-variance inequality, each on `count` random
/// `(f, pi, MDP)` triples.
pub fn check_mdp_lemmas(count: usize, seed: u64) -> Result<LemmaReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pd = Checker::new("performance_difference");
    let mut ltv = Checker::new("law_of_total_variance");
    let mut cov = Checker::new("change_of_variance");
    let params = RandomMdpParams::default();

    for case in 0..count {
        let mdp = random_mdp(&mut rng, &params);
        // Alternate between stochastic and deterministic policies: the
        // per-step variance decomposition reduces to the cost-plus-next-value
        // form only when the policy carries no action randomness.
        let pi = if case % 2 == 0 {
            random_policy(&mut rng, &mdp)
        } else {
            random_deterministic_policy(&mut rng, &mdp)
        };
        let tables = random_tables(&mut rng, &mdp);
        let horizon = mdp.horizon();
        let na = mdp.n_actions();

        let z = return_tables(&mdp, &pi)?;
        let x1 = 0usize;
        let mut x1_dist = vec![0.0; mdp.n_states(0)];
        x1_dist[x1] = 1.0;
        let occ = occupancy(&mdp, &pi, &x1_dist)?;

        let ctx = |h: usize, x: usize, a: usize, lhs: f64, rhs: f64| {
            serde_json::to_string(&TripleCase {
                seed,
                case,
                horizon,
                h,
                x,
                a,
                lhs,
                rhs,
            })
            .expect("serializable case")
        };

        // Backups of the candidate tables and their divergence residuals.
        let mut backups = Vec::with_capacity(horizon);
        for h in 0..horizon {
            let f_next = if h + 1 < horizon { Some(&tables[h + 1]) } else { None };
            backups.push(bellman_dist_pi(&mdp, f_next, &pi, h)?);
        }
        let residual = |h: usize, x: usize, a: usize| -> Result<f64> {
            triangular_discrimination(tables[h].dist(x, a), backups[h].dist(x, a))
        };

        // Performance difference: V(x1) - fbar_1(x1, pi) equals the
        // occupancy-weighted sum of backup-vs-table mean gaps.
        let v_pi = crate::env::return_distribution_with(&mdp, &z, &pi, Start::State(0, x1))?
            .mean();
        let f1_pi: f64 = pi
            .action_probs(0, x1)
            .iter()
            .enumerate()
            .map(|(a, &w)| w * tables[0].mean(x1, a))
            .sum();
        let mut rhs = 0.0;
        for h in 0..horizon {
            for x in 0..mdp.n_states(h) {
                for a in 0..na {
                    let w = occ[h][x * na + a];
                    if w == 0.0 {
                        continue;
                    }
                    rhs += w * (backups[h].mean(x, a) - tables[h].mean(x, a));
                }
            }
        }
        pd.check_identity(v_pi - f1_pi, rhs, &|lhs, rhs| ctx(0, x1, 0, lhs, rhs));

        // Law of total variance: the per-step conditional variances of cost
        // plus next value sum to Var(Z(x1)) once the action-selection
        // variance of a stochastic policy is accounted for. Deterministic
        // policies have no action terms, so the sum alone is the identity;
        // for stochastic policies it is a lower bound.
        let z_x1 =
            crate::env::return_distribution_with(&mdp, &z, &pi, Start::State(0, x1))?;
        let action_var = |h: usize, x: usize| -> f64 {
            let probs = pi.action_probs(h, x);
            let mean: f64 = probs
                .iter()
                .enumerate()
                .map(|(a, &pw)| pw * z[h].mean(x, a))
                .sum();
            probs
                .iter()
                .enumerate()
                .map(|(a, &pw)| {
                    let d = z[h].mean(x, a) - mean;
                    pw * d * d
                })
                .sum()
        };
        let mut cost_next_sum = 0.0;
        let mut action_sum = action_var(0, x1);
        for h in 0..horizon {
            for x in 0..mdp.n_states(h) {
                for a in 0..na {
                    let w = occ[h][x * na + a];
                    if w == 0.0 {
                        continue;
                    }
                    let cost_var = mdp.cost_law(h, x, a).variance();
                    let (next_var, next_action_var) = if h + 1 < horizon {
                        let probs = mdp.transition(h, x, a);
                        let values: Vec<f64> = (0..mdp.n_states(h + 1))
                            .map(|x_next| {
                                pi.action_probs(h + 1, x_next)
                                    .iter()
                                    .enumerate()
                                    .map(|(a_next, &pw)| pw * z[h + 1].mean(x_next, a_next))
                                    .sum()
                            })
                            .collect();
                        let mean: f64 =
                            probs.iter().zip(&values).map(|(&p, &v)| p * v).sum();
                        let nv = probs
                            .iter()
                            .zip(&values)
                            .map(|(&p, &v)| p * (v - mean) * (v - mean))
                            .sum();
                        let nav = probs
                            .iter()
                            .enumerate()
                            .map(|(x_next, &p)| p * action_var(h + 1, x_next))
                            .sum();
                        (nv, nav)
                    } else {
                        (0.0, 0.0)
                    };
                    cost_next_sum += w * (cost_var + next_var);
                    action_sum += w * next_action_var;
                }
            }
        }
        ltv.check_identity(z_x1.variance(), cost_next_sum + action_sum, &|lhs, rhs| {
            ctx(0, x1, 0, lhs, rhs)
        });
        // the cost-plus-next-value form never exceeds the full variance
        ltv.check(cost_next_sum, z_x1.variance(), &|lhs, rhs| {
            ctx(0, x1, 1, lhs, rhs)
        });

        // Change of variance at every (h, x, a):
        // Var(f_h(x,a)) <= 2e Var(Z_h(x,a)) + 12 H (H-h) Delta_h(x,a),
        // with Delta_h the residual mass of the roll-in from (h, x, a).
        for h in 0..horizon {
            for x in 0..mdp.n_states(h) {
                for a in 0..na {
                    let roll = occupancy_from(&mdp, &pi, h, x, a)?;
                    let mut delta_h = 0.0;
                    for t in h..horizon {
                        for xt in 0..mdp.n_states(t) {
                            for at in 0..na {
                                let w = roll[t][xt * na + at];
                                if w == 0.0 {
                                    continue;
                                }
                                delta_h += w * residual(t, xt, at)?;
                            }
                        }
                    }
                    let var_f = tables[h].dist(x, a).variance();
                    let var_z = z[h].dist(x, a).variance();
                    let bound = 2.0 * std::f64::consts::E * var_z
                        + 12.0 * horizon as f64 * (horizon - h) as f64 * delta_h;
                    cov.check(var_f, bound, &|lhs, rhs| ctx(h, x, a, lhs, rhs));
                }
            }
        }
    }
    Ok(LemmaReport::from_rows(vec![
        pd.finish(),
        ltv.finish(),
        cov.finish(),
    ]))
}

/// Full lemma battery: divergence checks on `pair_count` pairs per grid size
/// in `{2, 11, 51}`, MDP checks on `triple_count` random triples.
pub fn check_lemmas(pair_count: usize, triple_count: usize, seed: u64) -> Result<LemmaReport> {
    let mut rows = check_divergence_lemmas(pair_count, &[2, 11, 51], seed).rows;
    rows.extend(check_mdp_lemmas(triple_count, seed)?.rows);
    Ok(LemmaReport {
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}
