//! Thin batch CLI over the library: scenario runners, the eluder oracle, the
//! lemma battery and bound reports. Configs in, CSV/JSON out; exit code 0 iff
//! every requested check passes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use disco::error::{Error, Result};
use disco::files::{self, ScenarioSpec};
use disco::harness::{lemmas, report, resolve_out_dir, scenario};

#[derive(Parser)]
#[command(
    name = "disco",
    about = "Distributional confidence-set bandit/RL experiment runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a contextual-bandit scenario file.
    RunCb {
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory (overridden by DISCO_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an online-RL scenario file.
    RunOnline {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an offline-RL scenario file.
    RunOffline {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the exact l1 eluder dimension of an instance file and print
    /// the witnessing sequence.
    Eluder {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Check the divergence and MDP lemma batteries on random instances.
    CheckLemmas {
        /// Random distribution pairs per grid size.
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
        /// Random (tables, policy, MDP) triples.
        #[arg(long, default_value_t = 1_000)]
        triples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate bound shapes against a finished sweep report.
    Report {
        /// Path to a sweep report.json.
        #[arg(long)]
        sweep: PathBuf,
        /// Eluder dimension of the instance (from `eluder` or configuration).
        #[arg(long, default_value_t = 1)]
        d: usize,
    },
}

fn run_scenario_kind(scenario_path: &Path, out: Option<PathBuf>, expect: &str) -> Result<bool> {
    let file = files::load_scenario(scenario_path)?;
    let kind = match &file.spec {
        ScenarioSpec::Cb { .. } => "cb",
        ScenarioSpec::OnlineRl { .. } => "online-rl",
        ScenarioSpec::OfflineRl { .. } => "offline-rl",
    };
    if kind != expect {
        return Err(Error::Scenario(format!(
            "scenario kind is {kind:?}, this subcommand runs {expect:?}"
        )));
    }
    let base_dir = scenario_path
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let out_dir = resolve_out_dir(out);
    let report = scenario::run_scenario(&file, &base_dir, &out_dir)?;
    println!(
        "scenario {}: {} runs, beta {:.6}, metric median {:.6}",
        report.scenario,
        report.rows.len(),
        report.beta,
        report.aggregates.metric_median
    );
    for check in &report.checks {
        println!(
            "  [{}] {} ({})",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    println!(
        "report written to {}",
        out_dir.join(&report.scenario).join("report.json").display()
    );
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::RunCb { scenario, out } => run_scenario_kind(&scenario, out, "cb"),
        Command::RunOnline { scenario, out } => run_scenario_kind(&scenario, out, "online-rl"),
        Command::RunOffline { scenario, out } => run_scenario_kind(&scenario, out, "offline-rl"),
        Command::Eluder { instance } => {
            let text = fs::read_to_string(&instance)?;
            let file: files::EluderFile = serde_json::from_str(&text)?;
            let inst = files::build_eluder_instance(&file)?;
            let result = disco::eluder::eluder_dim(&inst)?;
            println!("dimension: {}", result.dim);
            println!(
                "witness: {}",
                result
                    .witness
                    .iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join(" -> ")
            );
            Ok(true)
        }
        Command::CheckLemmas {
            pairs,
            triples,
            seed,
        } => {
            let report = lemmas::check_lemmas(pairs, triples, seed)?;
            for row in &report.rows {
                println!(
                    "  [{}] {} ({} cases, worst slack {:+.3e})",
                    if row.pass { "PASS" } else { "FAIL" },
                    row.name,
                    row.cases,
                    row.worst_slack
                );
                if let Some(ce) = &row.counterexample {
                    println!("    counterexample: {ce}");
                }
            }
            Ok(report.pass)
        }
        Command::Report { sweep, d } => {
            let text = fs::read_to_string(&sweep)?;
            let sweep: serde_json::Value = serde_json::from_str(&text)?;
            let sweep = sweep_from_value(sweep)?;
            let bound = report::report_bounds(&sweep, d)?;
            println!("{}", serde_json::to_string_pretty(&bound)?);
            Ok(true)
        }
    }
}

/// Rehydrates the row fields of a serialized sweep report; only the fields
/// the bound report consumes are needed.
fn sweep_from_value(v: serde_json::Value) -> Result<scenario::SweepReport> {
    let get = |v: &serde_json::Value, key: &str| -> Result<serde_json::Value> {
        v.get(key)
            .cloned()
            .ok_or_else(|| Error::Schema(format!("sweep report missing {key:?}")))
    };
    let rows_v = get(&v, "rows")?;
    let rows_arr = rows_v
        .as_array()
        .ok_or_else(|| Error::Schema("rows must be an array".into()))?;
    let mut rows = Vec::with_capacity(rows_arr.len());
    for r in rows_arr {
        rows.push(scenario::SeedRow {
            seed: get(r, "seed")?.as_u64().unwrap_or(0),
            derived_seed: get(r, "derived_seed")?.as_u64().unwrap_or(0),
            n_samples: r.get("n_samples").and_then(|x| x.as_u64()).map(|x| x as usize),
            metric: get(r, "metric")?.as_f64().unwrap_or(0.0),
            sum_var: get(r, "sum_var")?.as_f64().unwrap_or(0.0),
            sum_v_star: r.get("sum_v_star").and_then(|x| x.as_f64()),
            all_optimistic: r.get("all_optimistic").and_then(|x| x.as_bool()),
            all_pessimistic: r.get("all_pessimistic").and_then(|x| x.as_bool()),
            mle_concentration_ok: r.get("mle_concentration_ok").and_then(|x| x.as_bool()),
            decomposition_ok: r.get("decomposition_ok").and_then(|x| x.as_bool()),
            cb_per_episode_ok: r.get("cb_per_episode_ok").and_then(|x| x.as_bool()),
            tail_zero_second_half: r.get("tail_zero_second_half").and_then(|x| x.as_bool()),
            baseline_metric: r.get("baseline_metric").and_then(|x| x.as_f64()),
            summary: get(r, "summary")?,
        });
    }
    let metrics: Vec<f64> = rows.iter().map(|r| r.metric).collect();
    let sum_vars: Vec<f64> = rows.iter().map(|r| r.sum_var).collect();
    let per_n_median = v
        .get("aggregates")
        .and_then(|a| a.get("per_n_median"))
        .and_then(|p| serde_json::from_value(p.clone()).ok());
    let slope = v
        .get("aggregates")
        .and_then(|a| a.get("slope"))
        .and_then(|s| s.as_f64());
    Ok(scenario::SweepReport {
        schema: scenario::SWEEP_SCHEMA.to_string(),
        scenario: get(&v, "scenario")?.as_str().unwrap_or("").to_string(),
        kind: get(&v, "kind")?.as_str().unwrap_or("").to_string(),
        beta: get(&v, "beta")?.as_f64().unwrap_or(0.0),
        delta: get(&v, "delta")?.as_f64().unwrap_or(0.0),
        seeds: serde_json::from_value(get(&v, "seeds")?)?,
        aggregates: scenario::Aggregates {
            metric_median: scenario::median(&metrics),
            metric_iqr: scenario::iqr(&metrics),
            sum_var_median: scenario::median(&sum_vars),
            optimism_fraction: None,
            pessimism_fraction: None,
            baseline_metric_median: None,
            per_n_median,
            slope,
        },
        rows,
        checks: Vec::new(),
        pass: true,
    })
}
