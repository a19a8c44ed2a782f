//! Exact environment quantities on a small two-step MDP: conditional return
//! laws, values, occupancy measures and coverage ratios — no Monte Carlo
//! anywhere.
//!
//! ```bash
//! cargo run -p disco --example return_distributions
//! ```

use disco::dist::GridDist;
use disco::env::{
    concentrability, occupancy, optimal, return_distribution, DataDist, InitialStates, Policy,
    Start, TabularMdp,
};

fn main() {
    // grid {0, .25, .5, .75, 1}; one initial state, two terminal-layer states
    let mdp = TabularMdp::new(
        vec![1, 2],
        2,
        vec![
            vec![
                GridDist::point_mass(5, 1).unwrap(), // a0 costs .25
                GridDist::point_mass(5, 0).unwrap(), // a1 free
            ],
            vec![
                GridDist::point_mass(5, 0).unwrap(),
                GridDist::point_mass(5, 1).unwrap(),
                GridDist::new(vec![0.4, 0.0, 0.6, 0.0, 0.0]).unwrap(),
                GridDist::point_mass(5, 2).unwrap(),
            ],
        ],
        vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
        InitialStates::Dist(vec![1.0]),
    )
    .unwrap();
    println!(
        "normalization certificate: max cumulative cost reaches grid index {} of {}",
        mdp.certificate_max_idx(),
        mdp.grid_size() - 1
    );

    // exact optimal policy and return law via distributional value iteration
    let (pi_star, z_star) = optimal(&mdp).unwrap();
    let q0: Vec<f64> = (0..2).map(|a| z_star[0].mean(0, a)).collect();
    println!("optimal first-step action values: {q0:?}");
    let z = return_distribution(&mdp, &pi_star, Start::State(0, 0)).unwrap();
    println!(
        "optimal return law: {:?} (value {:.3}, variance {:.4})",
        z.masses(),
        z.mean(),
        z.variance()
    );

    // a stochastic policy and its exact on-policy quantities
    let pi = Policy::new(vec![
        vec![vec![0.5, 0.5]],
        vec![vec![1.0, 0.0], vec![0.7, 0.3]],
    ])
    .unwrap();
    let z_pi = return_distribution(&mdp, &pi, Start::State(0, 0)).unwrap();
    println!(
        "mixed policy: value {:.4}, variance {:.4}",
        z_pi.mean(),
        z_pi.variance()
    );
    let occ = occupancy(&mdp, &pi, &[1.0]).unwrap();
    for (h, layer) in occ.iter().enumerate() {
        println!("occupancy at step {h}: {layer:?}");
    }

    // single-policy coverage of the optimal policy under two data
    // distributions: one covering, one missing a visited pair
    let nu_uniform = DataDist::new(vec![vec![0.5, 0.5], vec![0.25; 4]]).unwrap();
    println!(
        "concentrability vs uniform data: {:.2}",
        concentrability(&mdp, &pi_star, &nu_uniform).unwrap()
    );
    let nu_hole = DataDist::new(vec![vec![0.0, 1.0], vec![0.25; 4]]).unwrap();
    println!(
        "concentrability vs data missing (s0, a0): {}",
        concentrability(&mdp, &pi_star, &nu_hole).unwrap()
    );
}
