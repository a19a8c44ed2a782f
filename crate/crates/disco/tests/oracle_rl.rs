//! Straight-line reference simulations of the online and offline RL agents,
//! implemented directly over raw mass vectors: confidence sets recomputed
//! from scratch each round, tuples enumerated naively, and the generator
//! consumed in the same documented order as the library agents. Matched
//! seeds must reproduce the library's choices exactly.

#![allow(clippy::needless_range_loop)]

mod common;

use disco::agents::cb::{distucb_run, BetaSpec, CbRunConfig};
use disco::agents::offline::{pdisco_run, OfflineRunConfig};
use disco::agents::online::{odisco_run, OnlineRunConfig};
use disco::dist::GridDist;
use disco::env::{CbEnv, ContextSchedule, InitialStates, TabularMdp};
use disco::func_class::{CondDistTable, FiniteClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Raw mirrors of the instance data
// ---------------------------------------------------------------------------

struct RawMdp {
    horizon: usize,
    n_actions: usize,
    n_states: Vec<usize>,
    costs: Vec<Vec<Vec<f64>>>,
    trans: Vec<Vec<Vec<f64>>>,
    initial: Vec<f64>,
}

fn raw_mdp(mdp: &TabularMdp) -> RawMdp {
    let horizon = mdp.horizon();
    let na = mdp.n_actions();
    RawMdp {
        horizon,
        n_actions: na,
        n_states: (0..horizon).map(|h| mdp.n_states(h)).collect(),
        costs: (0..horizon)
            .map(|h| {
                (0..mdp.n_states(h) * na)
                    .map(|i| mdp.cost_law(h, i / na, i % na).masses().to_vec())
                    .collect()
            })
            .collect(),
        trans: (0..horizon.saturating_sub(1))
            .map(|h| {
                (0..mdp.n_states(h) * na)
                    .map(|i| mdp.transition(h, i / na, i % na).to_vec())
                    .collect()
            })
            .collect(),
        initial: mdp.initial_dist(),
    }
}

/// members[h][i][x*A+a] -> masses
type RawClass = Vec<Vec<Vec<Vec<f64>>>>;

fn raw_class(class: &FiniteClass) -> RawClass {
    (0..class.horizon())
        .map(|h| {
            class
                .members_at(h)
                .iter()
                .map(|m| {
                    (0..m.n_states() * m.n_actions())
                        .map(|i| {
                            m.dist(i / m.n_actions(), i % m.n_actions())
                                .masses()
                                .to_vec()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn mean_of(masses: &[f64]) -> f64 {
    let top = (masses.len() - 1) as f64;
    masses
        .iter()
        .enumerate()
        .map(|(i, &m)| m * i as f64 / top)
        .sum()
}

fn draw(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        cum += w;
        if u < cum {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap()
}

fn greedy(member: &[Vec<f64>], x: usize, n_actions: usize) -> usize {
    let mut best = f64::INFINITY;
    let mut best_a = 0;
    for a in 0..n_actions {
        let m = mean_of(&member[x * n_actions + a]);
        if m < best {
            best = m;
            best_a = a;
        }
    }
    best_a
}

type RawSample = (usize, usize, usize, Option<usize>);

/// Exact expected log-likelihood of member `g` at step `h` on `data`, with
/// targets built from `f_next` under the greedy rule (`None` for a fixed
/// policy's action, passed via `next_action`).
fn naive_loglik(
    g: &[Vec<f64>],
    f_next: Option<&[Vec<f64>]>,
    data: &[RawSample],
    n_actions: usize,
    next_action: Option<&dyn Fn(usize) -> usize>,
) -> f64 {
    let mut total = 0.0;
    for &(x, a, c, nx) in data {
        let gd = &g[x * n_actions + a];
        match (f_next, nx) {
            (Some(fnext), Some(nx)) => {
                let a_next = match next_action {
                    Some(f) => f(nx),
                    None => greedy(fnext, nx, n_actions),
                };
                let row = &fnext[nx * n_actions + a_next];
                for (y, &w) in row.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let z = c + y;
                    assert!(z < gd.len(), "clamped target in oracle");
                    let p = gd[z];
                    if p == 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    total += w * p.ln();
                }
            }
            _ => {
                let p = gd[c];
                if p == 0.0 {
                    return f64::NEG_INFINITY;
                }
                total += p.ln();
            }
        }
    }
    total
}

/// Feasible member tuples: per step and next-member choice, keep members
/// within `beta` of the maximum (all, when every likelihood is -inf).
fn naive_confset(
    class: &RawClass,
    data: &[Vec<RawSample>],
    beta: f64,
    n_actions: usize,
    next_action: Option<&dyn Fn(usize, usize) -> usize>,
) -> Vec<Vec<usize>> {
    let horizon = class.len();
    let mut ok: Vec<Vec<Vec<bool>>> = Vec::new();
    for h in 0..horizon {
        let n_next = if h + 1 < horizon { class[h + 1].len() } else { 1 };
        let mut ok_h = Vec::new();
        for j in 0..n_next {
            let f_next = if h + 1 < horizon {
                Some(class[h + 1][j].as_slice())
            } else {
                None
            };
            let step_action = next_action.map(|f| {
                let h_next = h + 1;
                move |x: usize| f(h_next, x)
            });
            let logliks: Vec<f64> = class[h]
                .iter()
                .map(|g| {
                    naive_loglik(
                        g,
                        f_next,
                        &data[h],
                        n_actions,
                        step_action
                            .as_ref()
                            .map(|f| f as &dyn Fn(usize) -> usize),
                    )
                })
                .collect();
            let max = logliks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let row: Vec<bool> = if max == f64::NEG_INFINITY {
                vec![true; logliks.len()]
            } else {
                logliks
                    .iter()
                    .map(|&l| l.is_finite() && l >= max - beta)
                    .collect()
            };
            ok_h.push(row);
        }
        ok.push(ok_h);
    }
    // lexicographic product enumeration
    let mut tuples = Vec::new();
    let mut current = vec![0usize; horizon];
    'outer: loop {
        let feasible = (0..horizon).all(|h| {
            let j = if h + 1 < horizon { current[h + 1] } else { 0 };
            ok[h][j][current[h]]
        });
        if feasible {
            tuples.push(current.clone());
        }
        let mut h = horizon;
        loop {
            if h == 0 {
                break 'outer;
            }
            h -= 1;
            current[h] += 1;
            if current[h] < class[h].len() {
                break;
            }
            current[h] = 0;
        }
    }
    tuples
}

struct ReferenceEpisode {
    actions: Vec<Vec<usize>>,
    collected: Vec<RawSample>,
}

fn reference_odisco(
    mdp: &RawMdp,
    class: &RawClass,
    episodes: usize,
    beta: f64,
    uae: bool,
    seed: u64,
) -> Vec<ReferenceEpisode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let na = mdp.n_actions;
    let mut data: Vec<Vec<RawSample>> = vec![Vec::new(); mdp.horizon];
    let mut tuples = naive_confset(class, &data, beta, na, None);
    let mut out = Vec::new();
    for _ in 0..episodes {
        let x1 = draw(&mdp.initial, &mut rng);
        // optimistic tuple
        let mut best = f64::INFINITY;
        let mut chosen = tuples[0].clone();
        for t in &tuples {
            let f0 = &class[0][t[0]];
            let v = (0..na)
                .map(|a| mean_of(&f0[x1 * na + a]))
                .fold(f64::INFINITY, f64::min);
            if v < best {
                best = v;
                chosen = t.clone();
            }
        }
        let actions: Vec<Vec<usize>> = (0..mdp.horizon)
            .map(|h| {
                (0..mdp.n_states[h])
                    .map(|x| greedy(&class[h][chosen[h]], x, na))
                    .collect()
            })
            .collect();
        // data collection, mirroring the documented draw order
        let mut collected = Vec::new();
        if !uae {
            let mut x = x1;
            for h in 0..mdp.horizon {
                let a = actions[h][x];
                let c = draw(&mdp.costs[h][x * na + a], &mut rng);
                let nx = if h + 1 < mdp.horizon {
                    Some(draw(&mdp.trans[h][x * na + a], &mut rng))
                } else {
                    None
                };
                data[h].push((x, a, c, nx));
                collected.push((x, a, c, nx));
                if let Some(nx) = nx {
                    x = nx;
                }
            }
        } else {
            for h in 0..mdp.horizon {
                let mut x = x1;
                for t in 0..h {
                    let a = actions[t][x];
                    x = draw(&mdp.trans[t][x * na + a], &mut rng);
                }
                let uniform = vec![1.0 / na as f64; na];
                let a = draw(&uniform, &mut rng);
                let c = draw(&mdp.costs[h][x * na + a], &mut rng);
                let nx = if h + 1 < mdp.horizon {
                    Some(draw(&mdp.trans[h][x * na + a], &mut rng))
                } else {
                    None
                };
                data[h].push((x, a, c, nx));
                collected.push((x, a, c, nx));
            }
        }
        tuples = naive_confset(class, &data, beta, na, None);
        assert!(!tuples.is_empty());
        let _ = chosen;
        out.push(ReferenceEpisode { actions, collected });
    }
    out
}

#[test]
fn online_agent_matches_reference_without_uae() {
    let mdp = common::online_mdp();
    let class = common::online_class();
    let raw = raw_mdp(&mdp);
    let rawc = raw_class(&class);
    let episodes = 60;
    let delta = 0.1;
    for seed in [0u64, 5, 91] {
        let cfg = OnlineRunConfig {
            episodes,
            delta,
            beta: BetaSpec::Auto,
            uae: false,
            seed,
        };
        let run = odisco_run(&mdp, &class, &cfg).unwrap();
        let reference = reference_odisco(&raw, &rawc, episodes, run.summary.beta, false, seed);
        for (k, (log, r)) in run.logs.iter().zip(&reference).enumerate() {
            assert_eq!(run.policies[k], r.actions, "policies diverged at k={k}");
            let _ = log;
        }
    }
}

#[test]
fn online_agent_matches_reference_with_uae() {
    let mdp = common::online_mdp();
    let class = common::online_class();
    let raw = raw_mdp(&mdp);
    let rawc = raw_class(&class);
    let episodes = 40;
    for seed in [3u64, 44] {
        let cfg = OnlineRunConfig {
            episodes,
            delta: 0.1,
            beta: BetaSpec::Auto,
            uae: true,
            seed,
        };
        let run = odisco_run(&mdp, &class, &cfg).unwrap();
        let reference = reference_odisco(&raw, &rawc, episodes, run.summary.beta, true, seed);
        for (k, r) in reference.iter().enumerate() {
            assert_eq!(run.policies[k], r.actions, "policies diverged at k={k}");
        }
        // with UAE every episode contributes one tuple per step
        assert_eq!(
            reference.iter().map(|r| r.collected.len()).sum::<usize>(),
            episodes * mdp.horizon()
        );
    }
}

#[test]
fn online_at_horizon_one_reduces_to_the_bandit_agent() {
    // generic single-context instance with pairwise-distinct member means,
    // so both tie-breaking orders coincide
    let masses: [[&[f64]; 2]; 3] = [
        [&[0.3, 0.3, 0.2, 0.1, 0.1], &[0.1, 0.2, 0.3, 0.2, 0.2]],
        [&[0.1, 0.1, 0.3, 0.3, 0.2], &[0.4, 0.2, 0.2, 0.1, 0.1]],
        [&[0.2, 0.25, 0.25, 0.15, 0.15], &[0.15, 0.2, 0.25, 0.2, 0.2]],
    ];
    let mut means: Vec<f64> = Vec::new();
    for rows in &masses {
        for row in rows {
            means.push(mean_of(row));
        }
    }
    for i in 0..means.len() {
        for j in 0..i {
            assert!((means[i] - means[j]).abs() > 1e-9, "instance must be tie-free");
        }
    }

    let episodes = 150;
    let truth: Vec<GridDist> = masses[0]
        .iter()
        .map(|m| GridDist::new(m.to_vec()).unwrap())
        .collect();
    let env = CbEnv::new(
        1,
        2,
        truth.clone(),
        ContextSchedule::Explicit(vec![0; episodes]),
    )
    .unwrap();
    let members: Vec<CondDistTable> = masses
        .iter()
        .enumerate()
        .map(|(i, rows)| {
            CondDistTable::new(
                format!("m{i}"),
                1,
                2,
                rows.iter()
                    .map(|m| GridDist::new(m.to_vec()).unwrap())
                    .collect(),
            )
            .unwrap()
        })
        .collect();
    let class = FiniteClass::new(vec![members]).unwrap();

    let mdp = TabularMdp::new(
        vec![1],
        2,
        vec![truth],
        vec![],
        InitialStates::Schedule(vec![0; episodes]),
    )
    .unwrap();

    for seed in [0u64, 9, 1234] {
        let cb_cfg = CbRunConfig {
            episodes,
            delta: 0.1,
            // match the online auto rate ln(H K |F| / delta) with H = 1
            beta: BetaSpec::Auto,
            seed,
        };
        let cb = distucb_run(&env, &class, &cb_cfg).unwrap();
        let on_cfg = OnlineRunConfig {
            episodes,
            delta: 0.1,
            beta: BetaSpec::Auto,
            uae: false,
            seed,
        };
        let on = odisco_run(&mdp, &class, &on_cfg).unwrap();
        assert_eq!(cb.summary.beta, on.summary.beta);
        let cb_actions: Vec<usize> = cb.logs.iter().map(|l| l.a).collect();
        let on_actions: Vec<usize> = on.policies.iter().map(|p| p[0][0]).collect();
        assert_eq!(cb_actions, on_actions, "action sequences diverged, seed {seed}");
        // identical regret accounting as well
        for (lc, lo) in cb.logs.iter().zip(&on.logs) {
            assert!((lc.regret_inst - lo.regret_inst).abs() < 1e-12);
        }
    }
}

#[test]
fn deterministic_mdp_with_singleton_true_class_has_zero_regret() {
    // deterministic two-step chain; the class holds exactly the optimal
    // return tables, so every episode plays optimally
    let mdp = TabularMdp::new(
        vec![1, 1],
        2,
        vec![
            vec![
                GridDist::point_mass(5, 1).unwrap(),
                GridDist::point_mass(5, 2).unwrap(),
            ],
            vec![
                GridDist::point_mass(5, 1).unwrap(),
                GridDist::point_mass(5, 2).unwrap(),
            ],
        ],
        vec![vec![vec![1.0], vec![1.0]]],
        InitialStates::Dist(vec![1.0]),
    )
    .unwrap();
    let (_, z_star) = disco::env::optimal(&mdp).unwrap();
    let class = FiniteClass::new(vec![vec![z_star[0].clone()], vec![z_star[1].clone()]]).unwrap();
    let cfg = OnlineRunConfig {
        episodes: 50,
        delta: 0.1,
        beta: BetaSpec::Auto,
        uae: false,
        seed: 5,
    };
    let run = odisco_run(&mdp, &class, &cfg).unwrap();
    assert_eq!(run.summary.cumulative_regret, 0.0);
    assert!(run.logs.iter().all(|l| l.regret_inst == 0.0 && l.optimism));
    assert_eq!(run.summary.bellman_complete_star, Some(true));
}

#[test]
fn offline_singleton_policy_class_returns_that_policy() {
    let mdp = common::online_mdp();
    let class = common::offline_class();
    let policies = vec![common::offline_policies().remove(2)]; // worst policy only
    let nu = common::offline_nu();
    let cfg = OfflineRunConfig {
        n_samples: 100,
        delta: 0.1,
        beta: BetaSpec::Auto,
        seed: 1,
        comparator: 0,
    };
    let s = pdisco_run(&mdp, &class, &policies, &nu, &cfg).unwrap();
    assert_eq!(s.chosen, 0);
    assert_eq!(s.suboptimality, 0.0);
}

#[test]
fn offline_singleton_class_gives_exact_pessimistic_values() {
    // class = exactly the return tuple of each policy; the pessimistic value
    // then equals the true value and the selector returns the argmin
    let mdp = common::online_mdp();
    let policies = common::offline_policies();
    let z_good = disco::env::return_tables(&mdp, &policies[0]).unwrap();
    let class = FiniteClass::new(vec![vec![z_good[0].clone()], vec![z_good[1].clone()]]).unwrap();
    let nu = common::offline_nu();
    let cfg = OfflineRunConfig {
        n_samples: 150,
        delta: 0.1,
        beta: BetaSpec::Auto,
        seed: 2,
        comparator: 0,
    };
    let pis = vec![policies[0].clone()];
    let s = pdisco_run(&mdp, &class, &pis, &nu, &cfg).unwrap();
    assert!((s.per_policy[0].pessimistic_value - s.per_policy[0].true_value).abs() < 1e-12);
    assert_eq!(s.chosen, 0);
}

// ---------------------------------------------------------------------------
// Offline reference
// ---------------------------------------------------------------------------

fn reference_pdisco(
    mdp: &RawMdp,
    class: &RawClass,
    policies: &[Vec<Vec<usize>>],
    nu: &[Vec<f64>],
    n: usize,
    beta: f64,
    seed: u64,
) -> (usize, Vec<f64>) {
    let na = mdp.n_actions;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // dataset, mirroring the documented draw order (pair, cost, next)
    let mut data: Vec<Vec<RawSample>> = Vec::new();
    for h in 0..mdp.horizon {
        let mut rows = Vec::new();
        for _ in 0..n {
            let pair = draw(&nu[h], &mut rng);
            let (x, a) = (pair / na, pair % na);
            let c = draw(&mdp.costs[h][x * na + a], &mut rng);
            let nx = if h + 1 < mdp.horizon {
                Some(draw(&mdp.trans[h][x * na + a], &mut rng))
            } else {
                None
            };
            rows.push((x, a, c, nx));
        }
        data.push(rows);
    }
    let mut values = Vec::new();
    for pi in policies {
        let pi_clone = pi.clone();
        let action = move |h: usize, x: usize| pi_clone[h][x];
        let tuples = naive_confset(class, &data, beta, na, Some(&action));
        assert!(!tuples.is_empty());
        let mut pess = f64::NEG_INFINITY;
        for t in &tuples {
            let f0 = &class[0][t[0]];
            let v: f64 = mdp
                .initial
                .iter()
                .enumerate()
                .map(|(x, &w)| w * mean_of(&f0[x * na + pi[0][x]]))
                .sum();
            if v > pess {
                pess = v;
            }
        }
        values.push(pess);
    }
    let mut chosen = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[chosen] {
            chosen = i;
        }
    }
    (chosen, values)
}

#[test]
fn offline_agent_matches_reference() {
    let mdp = common::online_mdp();
    let class = common::offline_class();
    let policies = common::offline_policies();
    let nu = common::offline_nu();
    let raw = raw_mdp(&mdp);
    let rawc = raw_class(&class);
    let raw_pis: Vec<Vec<Vec<usize>>> = vec![
        vec![vec![0], vec![0, 0]],
        vec![vec![1], vec![0, 0]],
        vec![vec![1], vec![1, 1]],
    ];
    let raw_nu: Vec<Vec<f64>> = vec![vec![0.5, 0.5], vec![0.25; 4]];
    for (seed, n) in [(0u64, 200usize), (7, 500), (21, 1000)] {
        let cfg = OfflineRunConfig {
            n_samples: n,
            delta: 0.1,
            beta: BetaSpec::Auto,
            seed,
            comparator: 0,
        };
        let summary = pdisco_run(&mdp, &class, &policies, &nu, &cfg).unwrap();
        let (chosen, values) =
            reference_pdisco(&raw, &rawc, &raw_pis, &raw_nu, n, summary.beta, seed);
        assert_eq!(summary.chosen, chosen, "seed {seed} n {n}");
        for (p, v) in summary.per_policy.iter().zip(&values) {
            assert!(
                (p.pessimistic_value - v).abs() < 1e-12,
                "pessimistic values diverged: {} vs {v}",
                p.pessimistic_value
            );
        }
    }
}
