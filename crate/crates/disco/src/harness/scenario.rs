//! Scenario execution: resolve a scenario file, run every seed (and dataset
//! size, for offline sweeps), write per-run CSV series and an aggregate JSON
//! report, and evaluate the scenario's named checks. Outputs are a pure
//! function of the scenario and its seed list.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::agents::cb::{
    cb_bound_report, distucb_run, gap_quantities, regcb_tuned, CbRunConfig, CbRunResult,
};
use crate::agents::offline::{pdisco_run, OfflineRunConfig};
use crate::agents::online::{odisco_run, OnlineRunConfig, OnlineRunResult};
use crate::error::{Error, Result};
use crate::files::{
    build_cb_env, build_class, build_mdp, build_nu, build_policy, ScenarioFile, ScenarioSpec,
};
use crate::harness::rng::derive_seed;

pub const SWEEP_SCHEMA: &str = "sweep-report.v1";
pub const CB_CSV_SCHEMA: &str = "cb-episodes.v1";
pub const ONLINE_CSV_SCHEMA: &str = "online-episodes.v1";

/// One run's promoted metrics; the full summary is echoed as JSON.
#[derive(Debug, Clone, Serialize)]
pub struct SeedRow {
    pub seed: u64,
    pub derived_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    /// Cumulative regret (bandit/online) or suboptimality (offline).
    pub metric: f64,
    pub sum_var: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sum_v_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub all_optimistic: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub all_pessimistic: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mle_concentration_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cb_per_episode_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_zero_second_half: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_metric: Option<f64>,
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregates {
    pub metric_median: f64,
    pub metric_iqr: f64,
    pub sum_var_median: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimism_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pessimism_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_metric_median: Option<f64>,
    /// Offline sweeps: median suboptimality per dataset size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_n_median: Option<Vec<(usize, f64)>>,
    /// Offline sweeps with at least two sizes: least-squares slope of
    /// `ln median` against `ln N` (medians floored at 1e-12).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub schema: String,
    pub scenario: String,
    pub kind: String,
    pub beta: f64,
    pub delta: f64,
    pub seeds: Vec<u64>,
    pub rows: Vec<SeedRow>,
    pub aggregates: Aggregates,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn quantile_nearest(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((v.len() - 1) as f64 * q).floor() as usize;
    v[idx]
}

pub fn iqr(values: &[f64]) -> f64 {
    quantile_nearest(values, 0.75) - quantile_nearest(values, 0.25)
}

/// Least-squares slope of `ln y` against `ln x`, with `y` floored at 1e-12.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(x, _)| x.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, y)| y.max(1e-12).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn render_cb_csv(run: &CbRunResult) -> String {
    let mut out = String::new();
    out.push_str(&format!("# schema: {CB_CSV_SCHEMA}\n"));
    out.push_str("k,x,a,c,regret_inst,regret_cum,var_true,delta_k,lcb,optimism_flag\n");
    for l in &run.logs {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            l.k,
            l.x,
            l.a,
            l.cost,
            l.regret_inst,
            l.regret_cum,
            l.var_true,
            l.delta_k,
            l.lcb,
            u8::from(l.optimism)
        ));
    }
    out
}

fn render_online_csv(run: &OnlineRunResult) -> String {
    let mut out = String::new();
    out.push_str(&format!("# schema: {ONLINE_CSV_SCHEMA}\n"));
    out.push_str("k,regret_inst,regret_cum,var_Zk,Delta_k,optimism_flag\n");
    for l in &run.logs {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            l.k,
            l.regret_inst,
            l.regret_cum,
            l.var_z,
            l.delta_k,
            u8::from(l.optimism)
        ));
    }
    out
}

fn tail_zero(regret_cum: &[f64]) -> bool {
    if regret_cum.is_empty() {
        return true;
    }
    let half = regret_cum.len() / 2;
    let start = if half == 0 { 0.0 } else { regret_cum[half - 1] };
    regret_cum.last().unwrap() - start == 0.0
}

struct ParsedCheck {
    name: String,
    args: Vec<f64>,
}

fn parse_check(raw: &str) -> Result<ParsedCheck> {
    let raw = raw.trim();
    if let Some(open) = raw.find('(') {
        if !raw.ends_with(')') {
            return Err(Error::Scenario(format!("malformed check {raw:?}")));
        }
        let name = raw[..open].to_string();
        let args = raw[open + 1..raw.len() - 1]
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Scenario(format!("bad check argument in {raw:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(ParsedCheck { name, args })
    } else {
        Ok(ParsedCheck {
            name: raw.to_string(),
            args: Vec::new(),
        })
    }
}

/// Frequency-check slack below `1 - delta`, absorbing binomial noise over the
/// seed list.
pub const FREQUENCY_SLACK: f64 = 0.05;

/// Executes a scenario: every `(seed [, dataset size])` run, per-run CSV
/// files under `out_dir/<scenario name>/`, one aggregate `report.json`, and
/// the scenario's checks. Rerunning with the same file yields byte-identical
/// outputs.
pub fn run_scenario(
    scenario: &ScenarioFile,
    base_dir: &Path,
    out_dir: &Path,
) -> Result<SweepReport> {
    let dir = out_dir.join(&scenario.name);
    fs::create_dir_all(&dir)?;

    let mut rows: Vec<SeedRow> = Vec::new();
    let mut beta_echo = 0.0;
    let delta_echo;
    let kind_name;
    let mut rerun_matches = true;

    match &scenario.spec {
        ScenarioSpec::Cb { env, class, config } => {
            kind_name = "cb";
            let env = build_cb_env(&env.resolve(base_dir)?)?;
            let class = build_class(&class.resolve(base_dir)?)?;
            let gaps = gap_quantities(&env);
            delta_echo = config.delta;
            for (i, &seed) in scenario.seeds.iter().enumerate() {
                let cfg = CbRunConfig {
                    episodes: config.episodes,
                    delta: config.delta,
                    beta: config.beta,
                    seed: derive_seed(scenario.master_seed, &scenario.name, seed),
                };
                let run = distucb_run(&env, &class, &cfg)?;
                beta_echo = run.summary.beta;
                let csv = render_cb_csv(&run);
                fs::write(dir.join(format!("cb_seed{seed}.csv")), &csv)?;
                if i == 0 {
                    let rerun = distucb_run(&env, &class, &cfg)?;
                    rerun_matches = render_cb_csv(&rerun) == csv;
                }
                let report = cb_bound_report(&run.logs, &run.summary, &gaps, 1);
                let regret_series: Vec<f64> = run.logs.iter().map(|l| l.regret_cum).collect();
                let mut summary_value = serde_json::to_value(&run.summary)?;
                let mut baseline_metric = None;
                if config.baseline {
                    let (b_beta, b_run, grid) = regcb_tuned(&env, &class, &cfg)?;
                    baseline_metric = Some(b_run.summary.cumulative_regret);
                    summary_value["baseline"] = serde_json::json!({
                        "beta": b_beta,
                        "cumulative_regret": b_run.summary.cumulative_regret,
                        "grid": grid,
                    });
                }
                rows.push(SeedRow {
                    seed,
                    derived_seed: cfg.seed,
                    n_samples: None,
                    metric: run.summary.cumulative_regret,
                    sum_var: run.summary.sum_var,
                    sum_v_star: Some(run.summary.sum_v_star),
                    all_optimistic: Some(run.summary.all_optimistic),
                    all_pessimistic: None,
                    mle_concentration_ok: Some(run.summary.mle_concentration_ok),
                    decomposition_ok: None,
                    cb_per_episode_ok: Some(
                        report.eq2_per_episode_ok && report.lstar_per_episode_ok,
                    ),
                    tail_zero_second_half: Some(tail_zero(&regret_series)),
                    baseline_metric,
                    summary: summary_value,
                });
            }
        }
        ScenarioSpec::OnlineRl { mdp, class, config } => {
            kind_name = "online-rl";
            let mdp = build_mdp(&mdp.resolve(base_dir)?)?;
            let class = build_class(&class.resolve(base_dir)?)?;
            delta_echo = config.delta;
            for (i, &seed) in scenario.seeds.iter().enumerate() {
                let cfg = OnlineRunConfig {
                    episodes: config.episodes,
                    delta: config.delta,
                    beta: config.beta,
                    uae: config.uae,
                    seed: derive_seed(scenario.master_seed, &scenario.name, seed),
                };
                let run = odisco_run(&mdp, &class, &cfg)?;
                beta_echo = run.summary.beta;
                let csv = render_online_csv(&run);
                fs::write(dir.join(format!("online_seed{seed}.csv")), &csv)?;
                if i == 0 {
                    let rerun = odisco_run(&mdp, &class, &cfg)?;
                    rerun_matches = render_online_csv(&rerun) == csv;
                }
                let regret_series: Vec<f64> = run.logs.iter().map(|l| l.regret_cum).collect();
                rows.push(SeedRow {
                    seed,
                    derived_seed: cfg.seed,
                    n_samples: None,
                    metric: run.summary.cumulative_regret,
                    sum_var: run.summary.sum_var,
                    sum_v_star: Some(run.summary.sum_v_star),
                    all_optimistic: Some(run.summary.all_optimistic),
                    all_pessimistic: None,
                    mle_concentration_ok: None,
                    decomposition_ok: Some(run.summary.decomposition_all_ok),
                    cb_per_episode_ok: None,
                    tail_zero_second_half: Some(tail_zero(&regret_series)),
                    baseline_metric: None,
                    summary: serde_json::to_value(&run.summary)?,
                });
            }
        }
        ScenarioSpec::OfflineRl {
            mdp,
            class,
            policies,
            nu,
            config,
        } => {
            kind_name = "offline-rl";
            let mdp_file = mdp.resolve(base_dir)?;
            let mdp = build_mdp(&mdp_file)?;
            let class = build_class(&class.resolve(base_dir)?)?;
            let pis = policies
                .iter()
                .map(|p| build_policy(p, &mdp_file))
                .collect::<Result<Vec<_>>>()?;
            let comparator = policies
                .iter()
                .position(|p| p.name() == config.comparator)
                .ok_or_else(|| {
                    Error::Scenario(format!(
                        "comparator {:?} not in the policy class",
                        config.comparator
                    ))
                })?;
            let nu = build_nu(nu, &mdp_file)?;
            delta_echo = config.delta;
            if config.n_samples.is_empty() {
                return Err(Error::Scenario("n_samples must not be empty".into()));
            }
            for &n in &config.n_samples {
                for (i, &seed) in scenario.seeds.iter().enumerate() {
                    let cfg = OfflineRunConfig {
                        n_samples: n,
                        delta: config.delta,
                        beta: config.beta,
                        seed: derive_seed(scenario.master_seed, &scenario.name, seed),
                        comparator,
                    };
                    let summary = pdisco_run(&mdp, &class, &pis, &nu, &cfg)?;
                    beta_echo = summary.beta;
                    if i == 0 {
                        let rerun = pdisco_run(&mdp, &class, &pis, &nu, &cfg)?;
                        rerun_matches &= serde_json::to_string(&rerun)?
                            == serde_json::to_string(&summary)?;
                    }
                    rows.push(SeedRow {
                        seed,
                        derived_seed: cfg.seed,
                        n_samples: Some(n),
                        metric: summary.suboptimality,
                        sum_var: summary.var_comparator,
                        sum_v_star: Some(summary.v_comparator),
                        all_optimistic: None,
                        all_pessimistic: Some(summary.all_pessimistic),
                        mle_concentration_ok: None,
                        decomposition_ok: Some(
                            summary.decomposition_ok && summary.change_of_measure_ok,
                        ),
                        cb_per_episode_ok: None,
                        tail_zero_second_half: None,
                        baseline_metric: None,
                        summary: serde_json::to_value(&summary)?,
                    });
                }
            }
        }
    }

    let metrics: Vec<f64> = rows.iter().map(|r| r.metric).collect();
    let sum_vars: Vec<f64> = rows.iter().map(|r| r.sum_var).collect();
    let fraction = |f: &dyn Fn(&SeedRow) -> Option<bool>| -> Option<f64> {
        let flags: Vec<bool> = rows.iter().filter_map(f).collect();
        if flags.is_empty() {
            None
        } else {
            Some(flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64)
        }
    };
    let per_n_median: Option<Vec<(usize, f64)>> = if rows.iter().any(|r| r.n_samples.is_some()) {
        let mut ns: Vec<usize> = rows.iter().filter_map(|r| r.n_samples).collect();
        ns.sort_unstable();
        ns.dedup();
        Some(
            ns.into_iter()
                .map(|n| {
                    let vals: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.n_samples == Some(n))
                        .map(|r| r.metric)
                        .collect();
                    (n, median(&vals))
                })
                .collect(),
        )
    } else {
        None
    };
    let slope = per_n_median.as_ref().and_then(|pts| {
        if pts.len() >= 2 {
            Some(log_log_slope(
                &pts.iter().map(|&(n, m)| (n as f64, m)).collect::<Vec<_>>(),
            ))
        } else {
            None
        }
    });
    let baseline_vals: Vec<f64> = rows.iter().filter_map(|r| r.baseline_metric).collect();
    let aggregates = Aggregates {
        metric_median: median(&metrics),
        metric_iqr: iqr(&metrics),
        sum_var_median: median(&sum_vars),
        optimism_fraction: fraction(&|r| r.all_optimistic),
        pessimism_fraction: fraction(&|r| r.all_pessimistic),
        baseline_metric_median: if baseline_vals.is_empty() {
            None
        } else {
            Some(median(&baseline_vals))
        },
        per_n_median,
        slope,
    };

    let mut checks = Vec::new();
    for raw in &scenario.checks {
        let parsed = parse_check(raw)?;
        let threshold = 1.0 - delta_echo - FREQUENCY_SLACK;
        let (pass, detail) = match parsed.name.as_str() {
            "optimism_frequency" => {
                let f = aggregates
                    .optimism_fraction
                    .ok_or_else(|| Error::Scenario("no optimism flags recorded".into()))?;
                (f >= threshold, format!("fraction {f:.4} vs {threshold:.4}"))
            }
            "pessimism_frequency" => {
                let f = aggregates
                    .pessimism_fraction
                    .ok_or_else(|| Error::Scenario("no pessimism flags recorded".into()))?;
                (f >= threshold, format!("fraction {f:.4} vs {threshold:.4}"))
            }
            "episode_decomposition" => {
                let ok = rows.iter().all(|r| r.decomposition_ok.unwrap_or(true));
                (ok, "decomposition inequalities on flagged runs".into())
            }
            "cb_per_episode" => {
                let ok = rows.iter().all(|r| r.cb_per_episode_ok.unwrap_or(true));
                (ok, "per-episode mean-gap and self-bounding checks".into())
            }
            "mle_concentration" => {
                let f = fraction(&|r| r.mle_concentration_ok)
                    .ok_or_else(|| Error::Scenario("no concentration flags recorded".into()))?;
                (f >= threshold, format!("fraction {f:.4} vs {threshold:.4}"))
            }
            "tail_zero_second_half" => {
                let ok = rows
                    .iter()
                    .all(|r| r.tail_zero_second_half.unwrap_or(true));
                (ok, "zero regret growth over the second half".into())
            }
            "rerun_determinism" => (
                rerun_matches,
                "first-seed rerun produced identical output".into(),
            ),
            "slope_below" => {
                let bound = *parsed.args.first().ok_or_else(|| {
                    Error::Scenario("slope_below needs one argument".into())
                })?;
                let s = slope.ok_or_else(|| {
                    Error::Scenario("slope check needs an offline n sweep".into())
                })?;
                (s <= bound, format!("slope {s:.4} vs bound {bound}"))
            }
            "slope_between" => {
                if parsed.args.len() != 2 {
                    return Err(Error::Scenario("slope_between needs two arguments".into()));
                }
                let s = slope.ok_or_else(|| {
                    Error::Scenario("slope check needs an offline n sweep".into())
                })?;
                let (lo, hi) = (parsed.args[0], parsed.args[1]);
                (s >= lo && s <= hi, format!("slope {s:.4} in [{lo}, {hi}]"))
            }
            other => {
                return Err(Error::Scenario(format!("unknown check {other:?}")));
            }
        };
        checks.push(CheckResult {
            name: raw.clone(),
            pass,
            detail,
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    let report = SweepReport {
        schema: SWEEP_SCHEMA.to_string(),
        scenario: scenario.name.clone(),
        kind: kind_name.to_string(),
        beta: beta_echo,
        delta: delta_echo,
        seeds: scenario.seeds.clone(),
        rows,
        aggregates,
        checks,
        pass,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(dir.join("report.json"), text)?;
    Ok(report)
}
