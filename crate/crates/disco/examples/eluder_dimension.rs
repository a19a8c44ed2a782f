//! The exact l1 eluder dimension on small instances: hand-checkable cases,
//! threshold monotonicity, and the instance induced by a bandit class's
//! divergence residuals.
//!
//! ```bash
//! cargo run -p disco --example eluder_dimension
//! ```

use disco::dist::GridDist;
use disco::eluder::{build_cb_instance, default_threshold, eluder_dim, EluderInstance};
use disco::env::{CbEnv, ContextSchedule};
use disco::func_class::{CondDistTable, FiniteClass};

fn main() {
    // indicators on two points, point-mass distributions: each function can
    // "surprise" once, so the longest sequence has length two
    let inst = EluderInstance::new(
        2,
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        0.5,
    )
    .unwrap();
    let res = eluder_dim(&inst).unwrap();
    println!("two indicators on two points: dimension {} witness {:?}", res.dim, res.witness);

    // repeating a distribution blows the witness budget
    let inst = EluderInstance::new(1, vec![vec![0.6]], vec![vec![1.0]], 0.3).unwrap();
    println!("single function, repeated distribution: dimension {}", eluder_dim(&inst).unwrap().dim);

    // dimension is non-increasing in the threshold
    let functions = vec![vec![0.9, 0.1, 0.3], vec![0.2, 0.8, 0.1], vec![0.3, 0.3, 0.6]];
    let dists = vec![
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![0.4, 0.3, 0.3],
    ];
    print!("threshold sweep:");
    for eps in [0.05, 0.2, 0.5, 0.85] {
        let inst = EluderInstance::new(3, functions.clone(), dists.clone(), eps).unwrap();
        print!(" eps={eps}: {}", eluder_dim(&inst).unwrap().dim);
    }
    println!();

    // the bandit-induced instance: functions are divergence residuals of the
    // class members against the true cost law, distributions are point
    // masses on context-action pairs, and the default threshold is 1/K
    let truth_a0 = GridDist::new(vec![0.6, 0.4, 0.0]).unwrap();
    let truth_a1 = GridDist::point_mass(3, 1).unwrap();
    let env = CbEnv::new(
        1,
        2,
        vec![truth_a0.clone(), truth_a1.clone()],
        ContextSchedule::Explicit(vec![0]),
    )
    .unwrap();
    let members = vec![
        CondDistTable::new("truth", 1, 2, vec![truth_a0.clone(), truth_a1.clone()]).unwrap(),
        CondDistTable::new(
            "under",
            1,
            2,
            vec![truth_a0, GridDist::new(vec![0.8, 0.2, 0.0]).unwrap()],
        )
        .unwrap(),
        CondDistTable::new(
            "wild",
            1,
            2,
            vec![
                GridDist::new(vec![0.1, 0.2, 0.7]).unwrap(),
                GridDist::new(vec![0.3, 0.3, 0.4]).unwrap(),
            ],
        )
        .unwrap(),
    ];
    let class = FiniteClass::new(vec![members]).unwrap();
    let episodes = 5000;
    let inst = build_cb_instance(&class, &env, default_threshold(episodes)).unwrap();
    let res = eluder_dim(&inst).unwrap();
    println!(
        "bandit-induced instance at threshold 1/{episodes}: dimension {} witness {:?}",
        res.dim, res.witness
    );
}
