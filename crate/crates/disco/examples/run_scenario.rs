//! Scenario files end to end: load one of the shipped scenarios, execute the
//! sweep, inspect the per-seed CSV series and the aggregate report, and show
//! that the run-generator derivation is reproducible.
//!
//! ```bash
//! cargo run -p disco --example run_scenario
//! ```

use std::path::Path;

use disco::files::load_scenario;
use disco::harness::rng::{derive_rng, derive_seed};
use disco::harness::scenario::run_scenario;
use rand::Rng;

fn main() {
    // every run's generator comes from (master seed, scenario name, seed)
    let seed = derive_seed(0, "cb-bernoulli", 3);
    let mut rng = derive_rng(0, "cb-bernoulli", 3);
    let first: f64 = rng.random();
    println!("derived run seed {seed:#018x}, first draw {first:.6}");

    let path = Path::new("scenarios/cb_bernoulli.json");
    let scenario = match load_scenario(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("run this example from the workspace root: {e}");
            std::process::exit(1);
        }
    };
    println!(
        "scenario {:?}: {} seeds, checks {:?}",
        scenario.name,
        scenario.seeds.len(),
        scenario.checks
    );

    let out = tempfile::tempdir().unwrap();
    let report = run_scenario(&scenario, Path::new("scenarios"), out.path()).unwrap();
    println!(
        "beta {:.4}; regret median {:.3}, interquartile range {:.3}",
        report.beta, report.aggregates.metric_median, report.aggregates.metric_iqr
    );
    if let Some(f) = report.aggregates.optimism_fraction {
        println!("all-episode optimism fraction: {f:.3}");
    }
    if let Some(b) = report.aggregates.baseline_metric_median {
        println!("squared-loss baseline regret median: {b:.3}");
    }
    for check in &report.checks {
        println!(
            "  [{}] {} — {}",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }

    let dir = out.path().join(&report.scenario);
    let mut files: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    println!("outputs in {}:", dir.display());
    for f in &files {
        println!("  {f}");
    }
    let csv = std::fs::read_to_string(dir.join("cb_seed0.csv")).unwrap();
    println!("first lines of cb_seed0.csv:");
    for line in csv.lines().take(4) {
        println!("  {line}");
    }
}
