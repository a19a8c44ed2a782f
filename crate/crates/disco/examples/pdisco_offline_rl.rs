//! Offline policy selection by pessimism on a fixed dataset: per-policy
//! confidence sets, worst-case value estimates, coverage constants, and the
//! dataset-size sweep that exposes the convergence rate.
//!
//! ```bash
//! cargo run -p disco --example pdisco_offline_rl
//! ```

use disco::agents::cb::BetaSpec;
use disco::agents::offline::{pdisco_run, OfflineRunConfig};
use disco::dist::GridDist;
use disco::env::{DataDist, InitialStates, Policy, TabularMdp};
use disco::func_class::{CondDistTable, FiniteClass};
use disco::harness::scenario::{log_log_slope, median};

fn main() {
    // one state, two arms: the optimal arm costs .25 deterministically but is
    // thinly covered; a ladder of members overstates its cost until enough
    // data kills them off
    let mdp = TabularMdp::new(
        vec![1],
        2,
        vec![vec![
            GridDist::point_mass(5, 1).unwrap(),
            GridDist::point_mass(5, 2).unwrap(),
        ]],
        vec![],
        InitialStates::Dist(vec![1.0]),
    )
    .unwrap();
    let mut members = vec![CondDistTable::new(
        "truth",
        1,
        2,
        vec![
            GridDist::point_mass(5, 1).unwrap(),
            GridDist::point_mass(5, 2).unwrap(),
        ],
    )
    .unwrap()];
    for i in 0..6 {
        let m = 0.66 - 0.04 * i as f64;
        members.push(
            CondDistTable::new(
                format!("overstate_{i}"),
                1,
                2,
                vec![
                    GridDist::new(vec![0.0, m, 0.0, 0.0, 1.0 - m]).unwrap(),
                    GridDist::point_mass(5, 2).unwrap(),
                ],
            )
            .unwrap(),
        );
    }
    let class = FiniteClass::new(vec![members]).unwrap();
    let policies = vec![
        Policy::deterministic(&[vec![0]], 2).unwrap(), // value .25, thin coverage
        Policy::deterministic(&[vec![1]], 2).unwrap(), // value .50, well covered
    ];
    let nu = DataDist::new(vec![vec![0.05, 0.95]]).unwrap();

    let cfg = OfflineRunConfig {
        n_samples: 400,
        delta: 0.1,
        beta: BetaSpec::Auto,
        seed: 3,
        comparator: 0,
    };
    let s = pdisco_run(&mdp, &class, &policies, &nu, &cfg).unwrap();
    println!("N = 400, beta {:.3}:", s.beta);
    for (i, p) in s.per_policy.iter().enumerate() {
        println!(
            "  policy {i}: pessimistic value {:.4}, true value {:.4}, pessimism ok: {}, set size {}",
            p.pessimistic_value, p.true_value, p.pessimism_ok, p.set_size
        );
    }
    println!(
        "  chosen policy {} with suboptimality {:.4} vs the comparator",
        s.chosen, s.suboptimality
    );
    println!(
        "  coverage constant {:.1}; divergence mass: comparator {:.5} <= coverage * data {:.5}",
        s.concentrability,
        s.delta_comparator,
        s.concentrability * s.nu_delta
    );

    // rate sweep: median suboptimality over 20 seeds per dataset size
    println!("\ndataset-size sweep (median over 20 seeds):");
    let mut pts = Vec::new();
    for n in [100usize, 200, 400, 800, 1600] {
        let mut subs = Vec::new();
        for seed in 0..20u64 {
            let cfg = OfflineRunConfig {
                n_samples: n,
                delta: 0.1,
                beta: BetaSpec::Auto,
                seed,
                comparator: 0,
            };
            subs.push(pdisco_run(&mdp, &class, &policies, &nu, &cfg).unwrap().suboptimality);
        }
        let m = median(&subs);
        println!("  N = {n:<5} median suboptimality {m:.4}");
        pts.push((n as f64, m));
    }
    println!("log-log slope: {:.3}", log_log_slope(&pts));
}
