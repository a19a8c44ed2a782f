//! Likelihood confidence sets over a finite class: how the set and its width
//! shrink with data, and how temporal-difference targets extend the idea to
//! multi-step classes.
//!
//! ```bash
//! cargo run -p disco --example confidence_sets
//! ```

use disco::dist::GridDist;
use disco::env::{sample_episode, InitialStates, Policy, TabularMdp};
use disco::func_class::{
    confset_cb, confset_rl, width, CondDistTable, FiniteClass, LossMode, SampleCB, TargetPolicy,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn member(id: &str, rows: &[&[f64]]) -> CondDistTable {
    CondDistTable::new(
        id,
        1,
        rows.len(),
        rows.iter()
            .map(|m| GridDist::new(m.to_vec()).unwrap())
            .collect(),
    )
    .unwrap()
}

fn main() {
    // one context, two actions, five candidate models; member 0 is the truth
    let members = vec![
        member("truth", &[&[0.5, 0.3, 0.2], &[0.2, 0.3, 0.5]]),
        member("close", &[&[0.45, 0.35, 0.2], &[0.25, 0.3, 0.45]]),
        member("swapped", &[&[0.2, 0.3, 0.5], &[0.5, 0.3, 0.2]]),
        member("flat", &[&[0.34, 0.33, 0.33], &[0.33, 0.33, 0.34]]),
        member("sharp", &[&[0.9, 0.05, 0.05], &[0.05, 0.05, 0.9]]),
    ];
    let class = FiniteClass::new(vec![members]).unwrap();
    let truth = class.member(0, 0).clone();

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut data: Vec<SampleCB> = Vec::new();
    let beta = 3.0;
    println!("beta = {beta}; growing an i.i.d. history on both actions:");
    for round in 0..6 {
        for _ in 0..round * 8 {
            let a = usize::from(data.len().is_multiple_of(2));
            let cost_idx = truth.dist(0, a).sample_idx(&mut rng);
            data.push(SampleCB { x: 0, a, cost_idx });
        }
        let set = confset_cb(&class, &data, beta);
        let ids: Vec<&str> = set
            .indices
            .iter()
            .map(|&i| class.member(0, i).id())
            .collect();
        println!(
            "  n = {:<3} set = {:?} width(a0) = {:.4} width(a1) = {:.4}",
            data.len(),
            ids,
            width(&set.indices, &class, 0, 0),
            width(&set.indices, &class, 0, 1),
        );
    }

    // sets are nested in beta on a fixed history
    print!("nestedness in beta:");
    for beta in [0.0, 0.5, 2.0, 8.0] {
        print!(" beta={beta}: {}", confset_cb(&class, &data, beta).indices.len());
    }
    println!();

    // the multi-step version fits each step against targets built from the
    // next-step member: cost plus greedy continuation
    let mdp = TabularMdp::new(
        vec![1, 1],
        2,
        vec![
            vec![
                GridDist::point_mass(5, 1).unwrap(),
                GridDist::point_mass(5, 0).unwrap(),
            ],
            vec![
                GridDist::new(vec![0.5, 0.5, 0.0, 0.0, 0.0]).unwrap(),
                GridDist::point_mass(5, 2).unwrap(),
            ],
        ],
        vec![vec![vec![1.0], vec![1.0]]],
        InitialStates::Dist(vec![1.0]),
    )
    .unwrap();
    let f1 = vec![
        member(
            "q_a0",
            &[&[0.0, 0.5, 0.5, 0.0, 0.0], &[0.5, 0.5, 0.0, 0.0, 0.0]],
        ),
        member(
            "q_flat",
            &[&[0.25, 0.25, 0.25, 0.25, 0.0], &[0.3, 0.4, 0.3, 0.0, 0.0]],
        ),
    ];
    let f2 = vec![
        member(
            "c_true",
            &[&[0.5, 0.5, 0.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0, 0.0]],
        ),
        member(
            "c_wrong",
            &[&[0.1, 0.9, 0.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0, 0.0]],
        ),
    ];
    let rl_class = FiniteClass::new(vec![f1, f2]).unwrap();
    let pi = Policy::deterministic(&[vec![0], vec![0]], 2).unwrap();
    let mut rl_data = vec![Vec::new(), Vec::new()];
    for _ in 0..40 {
        for s in sample_episode(&mdp, &pi, 0, &mut rng) {
            rl_data[s.h].push(s);
        }
    }
    let set = confset_rl(&rl_class, &rl_data, 2.0, TargetPolicy::Greedy, LossMode::Exact).unwrap();
    println!(
        "two-step confidence set after 40 episodes: {} of {} member tuples",
        set.tuples.len(),
        rl_class.product_size()
    );
    for t in &set.tuples {
        println!(
            "  ({}, {})",
            rl_class.member(0, t[0]).id(),
            rl_class.member(1, t[1]).id()
        );
    }
}
