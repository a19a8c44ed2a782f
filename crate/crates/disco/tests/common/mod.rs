//! Hand-built instances shared across integration tests: a two-step MDP with
//! known optimal values, realizable classes for the online and offline
//! agents, and the bandit instances behind the rate and shape tests.

#![allow(dead_code)]

use disco::dist::GridDist;
use disco::env::{CbEnv, ContextSchedule, DataDist, InitialStates, Policy, TabularMdp};
use disco::func_class::{CondDistTable, FiniteClass};

pub fn d(masses: &[f64]) -> GridDist {
    GridDist::new(masses.to_vec()).unwrap()
}

pub fn point(m: usize, i: usize) -> GridDist {
    GridDist::point_mass(m, i).unwrap()
}

/// Two-step MDP on grid {0, .25, .5, .75, 1}: one initial state, two
/// second-step states reached deterministically by the first action.
/// Optimal value 0.25 via action 0; the alternative path costs 0.3.
pub fn online_mdp() -> TabularMdp {
    TabularMdp::new(
        vec![1, 2],
        2,
        vec![
            // s0: a0 costs .25 and goes to t0; a1 costs 0 and goes to t1
            vec![point(5, 1), point(5, 0)],
            // t0: a0 free, a1 costs .25 ; t1: a0 ~ {0:.4, .5:.6}, a1 costs .5
            vec![
                point(5, 0),
                point(5, 1),
                d(&[0.4, 0.0, 0.6, 0.0, 0.0]),
                point(5, 2),
            ],
        ],
        vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
        InitialStates::Dist(vec![1.0]),
    )
    .unwrap()
}

fn table(id: &str, n_states: usize, rows: &[&[f64]]) -> CondDistTable {
    CondDistTable::new(
        id,
        n_states,
        rows.len() / n_states,
        rows.iter().map(|m| d(m)).collect(),
    )
    .unwrap()
}

/// Realizable two-step class for the online agent: the step-0 list contains
/// the exact optimal return table, the step-1 list contains the true cost
/// table. 3 x 3 members.
pub fn online_class() -> FiniteClass {
    let f0 = vec![
        // exact optimal returns
        table(
            "z_star",
            1,
            &[&[0.0, 1.0, 0.0, 0.0, 0.0], &[0.4, 0.0, 0.6, 0.0, 0.0]],
        ),
        // optimistic about action 1
        table(
            "low_a1",
            1,
            &[&[0.0, 1.0, 0.0, 0.0, 0.0], &[0.7, 0.0, 0.3, 0.0, 0.0]],
        ),
        // diffuse
        table(
            "diffuse",
            1,
            &[&[0.1, 0.5, 0.4, 0.0, 0.0], &[0.3, 0.2, 0.5, 0.0, 0.0]],
        ),
    ];
    let f1 = vec![
        // true cost table
        table(
            "c_true",
            2,
            &[
                &[1.0, 0.0, 0.0, 0.0, 0.0],
                &[0.0, 1.0, 0.0, 0.0, 0.0],
                &[0.4, 0.0, 0.6, 0.0, 0.0],
                &[0.0, 0.0, 1.0, 0.0, 0.0],
            ],
        ),
        // optimistic about (t1, a0)
        table(
            "t1_low",
            2,
            &[
                &[1.0, 0.0, 0.0, 0.0, 0.0],
                &[0.0, 1.0, 0.0, 0.0, 0.0],
                &[0.6, 0.0, 0.4, 0.0, 0.0],
                &[0.0, 0.0, 1.0, 0.0, 0.0],
            ],
        ),
        // noisy everywhere
        table(
            "noisy",
            2,
            &[
                &[0.8, 0.2, 0.0, 0.0, 0.0],
                &[0.2, 0.6, 0.2, 0.0, 0.0],
                &[0.5, 0.0, 0.5, 0.0, 0.0],
                &[0.0, 0.5, 0.5, 0.0, 0.0],
            ],
        ),
    ];
    FiniteClass::new(vec![f0, f1]).unwrap()
}

/// Deterministic policies over [`online_mdp`]: the optimal one, a mid-value
/// one (wrong first action, right second), and the worst one.
pub fn offline_policies() -> Vec<Policy> {
    vec![
        Policy::deterministic(&[vec![0], vec![0, 0]], 2).unwrap(), // value .25
        Policy::deterministic(&[vec![1], vec![0, 0]], 2).unwrap(), // value .30
        Policy::deterministic(&[vec![1], vec![1, 1]], 2).unwrap(), // value .50
    ]
}

/// Class containing the exact return tuple of every policy in
/// [`offline_policies`]: 3 x 2 members.
pub fn offline_class() -> FiniteClass {
    let f0 = vec![
        table(
            "z_good",
            1,
            &[&[0.0, 1.0, 0.0, 0.0, 0.0], &[0.4, 0.0, 0.6, 0.0, 0.0]],
        ),
        table(
            "z_bad",
            1,
            &[&[0.0, 0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0, 0.0]],
        ),
        table(
            "low_a1",
            1,
            &[&[0.0, 1.0, 0.0, 0.0, 0.0], &[0.7, 0.0, 0.3, 0.0, 0.0]],
        ),
    ];
    let f1 = vec![
        table(
            "c_true",
            2,
            &[
                &[1.0, 0.0, 0.0, 0.0, 0.0],
                &[0.0, 1.0, 0.0, 0.0, 0.0],
                &[0.4, 0.0, 0.6, 0.0, 0.0],
                &[0.0, 0.0, 1.0, 0.0, 0.0],
            ],
        ),
        table(
            "noisy",
            2,
            &[
                &[0.8, 0.2, 0.0, 0.0, 0.0],
                &[0.2, 0.6, 0.2, 0.0, 0.0],
                &[0.5, 0.0, 0.5, 0.0, 0.0],
                &[0.0, 0.5, 0.5, 0.0, 0.0],
            ],
        ),
    ];
    FiniteClass::new(vec![f0, f1]).unwrap()
}

/// Uniform data distribution over the pairs of [`online_mdp`].
pub fn offline_nu() -> DataDist {
    DataDist::new(vec![vec![0.5, 0.5], vec![0.25; 4]]).unwrap()
}

/// Deterministic realizable bandit instance with |F| = 8 on grid
/// {0, .2, .4, .6, .8, 1}: truth plays point masses at .2 (action 0) and
/// .6 (action 1); the other members claim point masses elsewhere and die on
/// a single observation of any pair they are wrong about.
pub fn deterministic_cb_8(episodes: usize) -> (CbEnv, FiniteClass) {
    let truth_a0 = point(6, 1);
    let truth_a1 = point(6, 3);
    let env = CbEnv::new(
        1,
        2,
        vec![truth_a0.clone(), truth_a1.clone()],
        ContextSchedule::Explicit(vec![0; episodes]),
    )
    .unwrap();
    let mut members = Vec::new();
    for (i, a0_idx) in [0usize, 1, 2, 4].into_iter().enumerate() {
        for (j, a1_idx) in [0usize, 3].into_iter().enumerate() {
            members.push(
                CondDistTable::new(
                    format!("m{i}{j}"),
                    1,
                    2,
                    vec![point(6, a0_idx), point(6, a1_idx)],
                )
                .unwrap(),
            );
        }
    }
    assert_eq!(members.len(), 8);
    let class = FiniteClass::new(vec![members]).unwrap();
    (env, class)
}

/// Bandit family whose per-context variance scales with `sigma2` while the
/// arm means stay fixed: the suboptimal arm 0 has mean 1/2 and variance
/// exactly `sigma2`; the optimal arm 1 has mean 1/4 and variance `sigma2/4`.
/// The wrong members share one full-support claim that makes arm 0 look
/// best, so exploration cost is governed by how fast that claim's likelihood
/// falls off — slower the noisier the truth.
pub fn variance_scaled_cb(sigma2: f64, episodes: usize) -> (CbEnv, FiniteClass) {
    assert!((0.0..=0.25).contains(&sigma2));
    let w = 4.0 * sigma2;
    let truth_a0 = d(&[w / 2.0, 0.0, 1.0 - w, 0.0, w / 2.0]);
    let truth_a1 = d(&[w / 2.0, 1.0 - w, w / 2.0, 0.0, 0.0]);
    assert!((truth_a0.mean() - 0.5).abs() < 1e-12);
    assert!((truth_a0.variance() - sigma2).abs() < 1e-12);
    assert!((truth_a1.mean() - 0.25).abs() < 1e-12);
    assert!((truth_a1.variance() - sigma2 / 4.0).abs() < 1e-12);
    let env = CbEnv::new(
        1,
        2,
        vec![truth_a0.clone(), truth_a1.clone()],
        ContextSchedule::Explicit(vec![0; episodes]),
    )
    .unwrap();

    let claim_a0: &[f64] = &[0.8, 0.1, 0.02, 0.04, 0.04]; // mean .105
    let truth = CondDistTable::new("truth", 1, 2, vec![truth_a0, truth_a1]).unwrap();
    let claims = [
        ("claim_a", &[0.1, 0.6, 0.1, 0.1, 0.1][..]),
        ("claim_b", &[0.2, 0.4, 0.2, 0.1, 0.1][..]),
        ("claim_c", &[0.1, 0.5, 0.2, 0.1, 0.1][..]),
    ]
    .into_iter()
    .map(|(id, a1)| CondDistTable::new(id, 1, 2, vec![d(claim_a0), d(a1)]).unwrap());
    let mut members = vec![truth];
    members.extend(claims);
    let class = FiniteClass::new(vec![members]).unwrap();
    (env, class)
}

/// Gap-regime bandit: optimal arm mean .2 (variance .06), deterministic
/// suboptimal arm at .5, so the mean-weighted min-gap is 1.5 and the
/// variance-weighted one is infinite. Two members undercut the suboptimal
/// arm and die at a fixed likelihood rate; one harmless member overestimates
/// the optimal arm.
pub fn gap_cb(episodes: usize) -> (CbEnv, FiniteClass) {
    let truth_a0 = d(&[0.6, 0.4, 0.0]);
    let truth_a1 = point(3, 1);
    let env = CbEnv::new(
        1,
        2,
        vec![truth_a0.clone(), truth_a1.clone()],
        ContextSchedule::Explicit(vec![0; episodes]),
    )
    .unwrap();
    let members = vec![
        CondDistTable::new("truth", 1, 2, vec![truth_a0.clone(), truth_a1]).unwrap(),
        CondDistTable::new("under_a1", 1, 2, vec![truth_a0.clone(), d(&[0.8, 0.2, 0.0])])
            .unwrap(),
        CondDistTable::new("under_a1b", 1, 2, vec![truth_a0, d(&[0.65, 0.35, 0.0])]).unwrap(),
        CondDistTable::new("over_a0", 1, 2, vec![d(&[0.4, 0.6, 0.0]), point(3, 1)]).unwrap(),
    ];
    let class = FiniteClass::new(vec![members]).unwrap();
    (env, class)
}

/// Offline instance with a fast, step-shaped rate: deterministic costs,
/// thin coverage of the optimal arm, and a ladder of members that overstate
/// the optimal arm's cost until the likelihood gap crosses `beta`. The
/// selected policy flips from the covered suboptimal arm to the optimal one
/// as the dataset grows, so the suboptimality drops to exactly zero.
pub fn offline_deterministic_instance() -> (TabularMdp, FiniteClass, Vec<Policy>, DataDist) {
    let mdp = TabularMdp::new(
        vec![1],
        2,
        vec![vec![point(5, 1), point(5, 2)]], // costs .25 and .5
        vec![],
        InitialStates::Dist(vec![1.0]),
    )
    .unwrap();
    let mut members = vec![
        CondDistTable::new("truth", 1, 2, vec![point(5, 1), point(5, 2)]).unwrap(),
    ];
    // claims keep mass m on the observed cost .25 and move the rest to 1,
    // putting their mean above the alternative arm's .5 while they survive
    for i in 0..15 {
        let m = 0.66 - 0.02 * i as f64;
        members.push(
            CondDistTable::new(
                format!("over_{i}"),
                1,
                2,
                vec![d(&[0.0, m, 0.0, 0.0, 1.0 - m]), point(5, 2)],
            )
            .unwrap(),
        );
    }
    let class = FiniteClass::new(vec![members]).unwrap();
    let policies = vec![
        Policy::deterministic(&[vec![0]], 2).unwrap(), // optimal, value .25
        Policy::deterministic(&[vec![1]], 2).unwrap(), // value .5
    ];
    let nu = DataDist::new(vec![vec![0.02, 0.98]]).unwrap();
    (mdp, class, policies, nu)
}

/// Offline instance with a `1/sqrt(N)`-shaped rate: five arms with values
/// 0.40..0.50, one overstating claim per non-worst arm, and claim likelihood
/// gaps graded so the claims die out at geometrically spaced dataset sizes.
/// The selected arm walks down the value ladder as the dataset grows.
pub fn offline_stochastic_instance() -> (TabularMdp, FiniteClass, Vec<Policy>, DataDist) {
    let n_arms = 5usize;
    let means = [0.40, 0.43, 0.46, 0.49, 0.52];
    // claims lift each arm's pessimistic mean to ~0.53 while alive; their
    // per-sample likelihood gaps are tuned so that claim j dies near dataset
    // size n_j under the coverage below
    let shifts = [0.13, 0.10, 0.07, 0.04];
    let target_n = [5600.0, 1400.0, 700.0, 350.0];
    // thin coverage of the best arm keeps its overstating claim alive past
    // the sweep's largest dataset
    let nu_weights = [0.03, 0.2425, 0.2425, 0.2425, 0.2425];
    let beta = ((n_arms * n_arms) as f64 / 0.1).ln();

    // truth on support {0, .5, 1}: mass c at 1 tunes the claim's likelihood
    // gap; scan c for the best match to the target gap
    let solve_arm = |mu: f64, shift: f64, target_kl: f64| -> (Vec<f64>, Vec<f64>) {
        let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
        let lo = (2.0 * mu - 1.0).max(0.0) + 1e-4;
        let mut c = lo;
        while c <= mu - 1e-4 {
            let b = 2.0 * (mu - c);
            let a = 1.0 - b - c;
            if a > shift + 1e-4 && a >= 0.0 && b >= 0.0 {
                let kl = a * (a / (a - shift)).ln() + c * (c / (c + shift)).ln();
                let err = (kl - target_kl).abs();
                let truth = vec![a, 0.0, b, 0.0, c];
                let claim = vec![a - shift, 0.0, b, 0.0, c + shift];
                if best.as_ref().is_none_or(|(e, _, _)| err < *e) {
                    best = Some((err, truth, claim));
                }
            }
            c += 1e-4;
        }
        let (err, truth, claim) = best.expect("solvable arm");
        assert!(err < 0.5 * target_kl, "arm tuning off by {err}");
        (truth, claim)
    };

    let mut truth_rows: Vec<GridDist> = Vec::new();
    let mut claim_rows: Vec<Option<GridDist>> = Vec::new();
    for j in 0..n_arms {
        if j + 1 < n_arms {
            let target_kl = beta / (nu_weights[j] * target_n[j]);
            let (t, cl) = solve_arm(means[j], shifts[j], target_kl);
            truth_rows.push(d(&t));
            claim_rows.push(Some(d(&cl)));
        } else {
            // worst arm: three-point with mean .52, no claim
            truth_rows.push(d(&[0.26, 0.0, 0.44, 0.0, 0.30]));
            claim_rows.push(None);
        }
    }
    // fix the worst arm's mean exactly at .5 with the symmetric two-point
    assert!((truth_rows[n_arms - 1].mean() - means[n_arms - 1]).abs() < 1e-12);

    let mdp = TabularMdp::new(
        vec![1],
        n_arms,
        vec![truth_rows.clone()],
        vec![],
        InitialStates::Dist(vec![1.0]),
    )
    .unwrap();
    let mut members = vec![CondDistTable::new("truth", 1, n_arms, truth_rows.clone()).unwrap()];
    for (j, claim) in claim_rows.iter().enumerate() {
        if let Some(cl) = claim {
            let mut rows = truth_rows.clone();
            rows[j] = cl.clone();
            members.push(CondDistTable::new(format!("claim_{j}"), 1, n_arms, rows).unwrap());
        }
    }
    let class = FiniteClass::new(vec![members]).unwrap();
    let policies: Vec<Policy> = (0..n_arms)
        .map(|j| Policy::deterministic(&[vec![j]], n_arms).unwrap())
        .collect();
    let nu = DataDist::new(vec![nu_weights.to_vec()]).unwrap();
    (mdp, class, policies, nu)
}
