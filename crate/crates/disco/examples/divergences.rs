//! Grid-distribution arithmetic and the divergence inequalities that drive
//! the confidence-set machinery.
//!
//! ```bash
//! cargo run -p disco --example divergences
//! ```

use disco::dist::{
    convolve_clamped, hellinger_sq, mixture, triangular_discrimination, GridDist,
};
use disco::harness::lemmas::check_divergence_lemmas;

fn main() {
    // distributions live on the uniform grid {0, 1/(M-1), ..., 1}
    let fair = GridDist::new(vec![0.5, 0.5]).unwrap();
    let tilted = GridDist::new(vec![0.25, 0.75]).unwrap();
    println!("fair coin:   mean {:.3}, variance {:.3}", fair.mean(), fair.variance());
    println!("tilted coin: mean {:.3}, variance {:.4}", tilted.mean(), tilted.variance());

    let dt = triangular_discrimination(&fair, &tilted).unwrap();
    let h2 = hellinger_sq(&fair, &tilted).unwrap();
    println!("triangular discrimination D = {dt:.6}");
    println!("squared Hellinger        H2 = {h2:.6}");
    println!("sandwich 2 H2 <= D <= 4 H2: {:.6} <= {:.6} <= {:.6}", 2.0 * h2, dt, 4.0 * h2);

    // the mean-difference bound that powers optimism: |f - g| in terms of
    // variance and divergence
    let gap = (fair.mean() - tilted.mean()).abs();
    let rhs = 4.0 * (fair.variance() * dt).sqrt() + 5.0 * dt;
    println!("mean gap {gap:.4} <= 4 sqrt(Var D) + 5 D = {rhs:.4}");

    // convolution adds independent costs; overflow mass would be clamped to
    // the top grid point and flagged
    let step = GridDist::new(vec![0.5, 0.5, 0.0, 0.0, 0.0]).unwrap();
    let (two_steps, clamped) = convolve_clamped(&step, &step).unwrap();
    println!("two-step cost law: {:?} (clamped: {clamped})", two_steps.masses());

    let d0 = GridDist::point_mass(5, 0).unwrap();
    let d1 = GridDist::point_mass(5, 4).unwrap();
    let mix = mixture(&[(0.25, &d0), (0.75, &d1)]).unwrap();
    println!("mixture .25 delta_0 + .75 delta_1: mean {:.3}", mix.mean());

    // the full random battery the acceptance suite runs at 10^4 pairs
    let report = check_divergence_lemmas(2000, &[2, 11, 51], 7);
    println!("\nrandom-pair battery (2000 pairs per grid size):");
    for row in &report.rows {
        println!(
            "  {:<28} {:>6} cases  worst slack {:+.2e}  {}",
            row.name,
            row.cases,
            row.worst_slack,
            if row.pass { "ok" } else { "VIOLATED" }
        );
    }
}
