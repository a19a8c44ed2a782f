//! Straight-line reference simulation of the optimistic bandit loop,
//! implemented independently of the library's incremental agent: the
//! confidence set is recomputed from scratch on the full history every
//! episode, and the generator is consumed in the same documented order
//! (context draw for i.i.d. schedules, then one cost draw per episode).
//! Matched seeds must produce identical trajectories.

use disco::agents::cb::{distucb_run, BetaSpec, CbRunConfig};
use disco::dist::GridDist;
use disco::env::{CbEnv, ContextSchedule};
use disco::func_class::{CondDistTable, FiniteClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Raw description of a bandit instance for the reference simulator: mass
/// vectors only, no library types.
struct RawInstance {
    n_actions: usize,
    /// `true_costs[x][a]` -> mass vector.
    true_costs: Vec<Vec<Vec<f64>>>,
    /// `members[i][x][a]` -> mass vector.
    members: Vec<Vec<Vec<Vec<f64>>>>,
    /// explicit context schedule
    schedule: Vec<usize>,
}

fn mean_of(masses: &[f64]) -> f64 {
    let top = (masses.len() - 1) as f64;
    masses
        .iter()
        .enumerate()
        .map(|(i, &m)| m * i as f64 / top)
        .sum()
}

fn draw(masses: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, &w) in masses.iter().enumerate() {
        cum += w;
        if u < cum {
            return i;
        }
    }
    masses.iter().rposition(|&w| w > 0.0).unwrap()
}

/// One full run of the optimistic likelihood agent, recomputing everything
/// naively. Returns the `(x, a, cost_idx)` trajectory.
fn reference_run(inst: &RawInstance, episodes: usize, beta: f64, seed: u64) -> Vec<(usize, usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_members = inst.members.len();
    let mut history: Vec<(usize, usize, usize)> = Vec::new();
    let mut out = Vec::new();
    for k in 0..episodes {
        let x = inst.schedule[k];
        // full recomputation of the confidence set on the history
        let logliks: Vec<f64> = (0..n_members)
            .map(|i| {
                let mut total = 0.0;
                for &(hx, ha, hc) in &history {
                    let p = inst.members[i][hx][ha][hc];
                    if p == 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    total += p.ln();
                }
                total
            })
            .collect();
        let max = logliks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let set: Vec<usize> = if max == f64::NEG_INFINITY {
            (0..n_members).collect()
        } else {
            (0..n_members)
                .filter(|&i| logliks[i].is_finite() && logliks[i] >= max - beta)
                .collect()
        };
        // lowest LCB, ties toward the lower action index
        let mut best_a = 0usize;
        let mut lcb = f64::INFINITY;
        for a in 0..inst.n_actions {
            for &i in &set {
                let m = mean_of(&inst.members[i][x][a]);
                if m < lcb {
                    lcb = m;
                    best_a = a;
                }
            }
        }
        let c = draw(&inst.true_costs[x][best_a], &mut rng);
        history.push((x, best_a, c));
        out.push((x, best_a, c));
    }
    out
}

fn bernoulli_instance() -> (RawInstance, CbEnv, FiniteClass) {
    // two contexts, two actions, grid {0, .5, 1}; realizable 4-member class
    let raw_costs: Vec<Vec<Vec<f64>>> = vec![
        vec![vec![0.5, 0.2, 0.3], vec![0.2, 0.2, 0.6]],
        vec![vec![0.1, 0.3, 0.6], vec![0.6, 0.2, 0.2]],
    ];
    let member_masses: Vec<Vec<Vec<Vec<f64>>>> = vec![
        raw_costs.clone(), // truth
        vec![
            vec![vec![0.2, 0.2, 0.6], vec![0.5, 0.2, 0.3]],
            vec![vec![0.6, 0.2, 0.2], vec![0.1, 0.3, 0.6]],
        ],
        vec![
            vec![vec![0.4, 0.2, 0.4], vec![0.3, 0.4, 0.3]],
            vec![vec![0.3, 0.4, 0.3], vec![0.4, 0.2, 0.4]],
        ],
        vec![
            vec![vec![0.6, 0.2, 0.2], vec![0.1, 0.3, 0.6]],
            vec![vec![0.2, 0.2, 0.6], vec![0.5, 0.2, 0.3]],
        ],
    ];
    let schedule: Vec<usize> = (0..400).map(|k| (k * 7 + k / 3) % 2).collect();

    let env = CbEnv::new(
        2,
        2,
        raw_costs
            .iter()
            .flat_map(|row| row.iter().map(|m| GridDist::new(m.clone()).unwrap()))
            .collect(),
        ContextSchedule::Explicit(schedule.clone()),
    )
    .unwrap();
    let members = member_masses
        .iter()
        .enumerate()
        .map(|(i, tab)| {
            CondDistTable::new(
                format!("m{i}"),
                2,
                2,
                tab.iter()
                    .flat_map(|row| row.iter().map(|m| GridDist::new(m.clone()).unwrap()))
                    .collect(),
            )
            .unwrap()
        })
        .collect();
    let class = FiniteClass::new(vec![members]).unwrap();
    let raw = RawInstance {
        n_actions: 2,
        true_costs: raw_costs,
        members: member_masses,
        schedule,
    };
    (raw, env, class)
}

#[test]
fn agent_matches_straight_line_reference_on_matched_seeds() {
    let (raw, env, class) = bernoulli_instance();
    let episodes = 200;
    let delta = 0.1;
    let beta = ((episodes * 4) as f64 / delta).ln();
    for seed in [0u64, 1, 17, 123456] {
        let cfg = CbRunConfig {
            episodes,
            delta,
            beta: BetaSpec::Auto,
            seed,
        };
        let run = distucb_run(&env, &class, &cfg).unwrap();
        assert!((run.summary.beta - beta).abs() < 1e-12);
        let reference = reference_run(&raw, episodes, beta, seed);
        let agent: Vec<(usize, usize, usize)> =
            run.logs.iter().map(|l| (l.x, l.a, l.cost_idx)).collect();
        assert_eq!(agent, reference, "trajectory diverged for seed {seed}");
    }
}

#[test]
fn mle_concentration_holds_in_most_seeds() {
    // realizable class: in at least a 1 - delta - slack fraction of seeds the
    // cumulative divergence of every confidence-set member against the truth
    // stays below beta at every episode
    let (_, env, class) = bernoulli_instance();
    let seeds = 40u64;
    let delta = 0.1;
    let mut ok = 0;
    for seed in 0..seeds {
        let cfg = CbRunConfig {
            episodes: 300,
            delta,
            beta: BetaSpec::Auto,
            seed: 1000 + seed,
        };
        let run = distucb_run(&env, &class, &cfg).unwrap();
        if run.summary.mle_concentration_ok {
            ok += 1;
        }
    }
    let needed = ((1.0 - delta - 0.05) * seeds as f64).ceil() as u64;
    assert!(ok >= needed, "concentration held in {ok}/{seeds} seeds");
}
