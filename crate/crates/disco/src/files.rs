//! Versioned JSON schemas for environments, function classes, policies,
//! eluder instances and scenarios, with loaders that validate every invariant
//! on the way in. States and actions are named in files; the declared list
//! order defines the in-memory indices.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dist::GridDist;
use crate::env::{
    CbEnv, ContextSchedule, DataDist, InitialStates, Policy, TabularMdp,
};
use crate::error::{Error, Result};
use crate::func_class::{CondDistTable, FiniteClass};

pub const CB_ENV_SCHEMA: &str = "cb-env.v1";
pub const MDP_SCHEMA: &str = "tabular-mdp.v1";
pub const CLASS_SCHEMA: &str = "finite-class.v1";
pub const ELUDER_SCHEMA: &str = "eluder-instance.v1";
pub const SCENARIO_SCHEMA: &str = "scenario.v1";

fn check_schema(found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::Schema(format!(
            "expected schema {expected:?}, found {found:?}"
        )));
    }
    Ok(())
}

/// Either an inline value or a reference to another JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaybeFile<T> {
    File { file: PathBuf },
    Inline(T),
}

impl<T: DeserializeOwned + Clone> MaybeFile<T> {
    pub fn resolve(&self, base_dir: &Path) -> Result<T> {
        match self {
            MaybeFile::Inline(v) => Ok(v.clone()),
            MaybeFile::File { file } => {
                let path = if file.is_absolute() {
                    file.clone()
                } else {
                    base_dir.join(file)
                };
                let text = fs::read_to_string(&path)?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }
}

fn name_index(names: &[String], what: &str) -> Result<BTreeMap<String, usize>> {
    let mut map = BTreeMap::new();
    for (i, n) in names.iter().enumerate() {
        if map.insert(n.clone(), i).is_some() {
            return Err(Error::Schema(format!("duplicate {what} name {n:?}")));
        }
    }
    Ok(map)
}

fn lookup(map: &BTreeMap<String, usize>, name: &str, what: &str) -> Result<usize> {
    map.get(name)
        .copied()
        .ok_or_else(|| Error::Schema(format!("unknown {what} {name:?}")))
}

type MassTable = BTreeMap<String, BTreeMap<String, Vec<f64>>>;

fn table_to_dists(
    table: &MassTable,
    states: &[String],
    actions: &[String],
    context: &str,
) -> Result<Vec<GridDist>> {
    let mut out = Vec::with_capacity(states.len() * actions.len());
    for s in states {
        let row = table
            .get(s)
            .ok_or_else(|| Error::Schema(format!("{context}: missing state {s:?}")))?;
        for a in actions {
            let masses = row
                .get(a)
                .ok_or_else(|| Error::Schema(format!("{context}: missing ({s:?}, {a:?})")))?;
            out.push(GridDist::new(masses.clone())?);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Contextual-bandit environment files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CbEnvFile {
    pub schema: String,
    pub grid_size: usize,
    pub contexts: Vec<String>,
    pub actions: Vec<String>,
    /// `costs[context][action] = mass vector of length grid_size`.
    pub costs: MassTable,
    pub schedule: ScheduleFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleFile {
    /// i.i.d. context draws from these weights (aligned with `contexts`).
    Iid(Vec<f64>),
    /// Explicit context-name sequence, one entry per episode.
    Explicit(Vec<String>),
}

pub fn build_cb_env(file: &CbEnvFile) -> Result<CbEnv> {
    check_schema(&file.schema, CB_ENV_SCHEMA)?;
    let ctx_idx = name_index(&file.contexts, "context")?;
    let costs = table_to_dists(&file.costs, &file.contexts, &file.actions, "costs")?;
    for d in &costs {
        if d.grid_size() != file.grid_size {
            return Err(Error::GridMismatch(file.grid_size, d.grid_size()));
        }
    }
    let schedule = match &file.schedule {
        ScheduleFile::Iid(w) => ContextSchedule::Iid(w.clone()),
        ScheduleFile::Explicit(seq) => ContextSchedule::Explicit(
            seq.iter()
                .map(|n| lookup(&ctx_idx, n, "context"))
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    CbEnv::new(file.contexts.len(), file.actions.len(), costs, schedule)
}

// ---------------------------------------------------------------------------
// Tabular MDP files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpFile {
    pub schema: String,
    pub grid_size: usize,
    pub actions: Vec<String>,
    /// One entry per step; the last step carries no transitions.
    pub steps: Vec<MdpStepFile>,
    pub initial: InitialFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpStepFile {
    pub states: Vec<String>,
    pub costs: MassTable,
    /// `transitions[state][action] = weights over next-step states`; absent
    /// at the terminal step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transitions: Option<MassTable>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialFile {
    /// Weights aligned with the step-0 state list.
    Dist(Vec<f64>),
    /// Explicit initial-state names, one per episode.
    Schedule(Vec<String>),
}

pub fn build_mdp(file: &MdpFile) -> Result<TabularMdp> {
    check_schema(&file.schema, MDP_SCHEMA)?;
    let horizon = file.steps.len();
    let mut n_states = Vec::with_capacity(horizon);
    let mut costs = Vec::with_capacity(horizon);
    let mut transitions = Vec::with_capacity(horizon.saturating_sub(1));
    for (h, step) in file.steps.iter().enumerate() {
        name_index(&step.states, "state")?;
        n_states.push(step.states.len());
        let step_costs = table_to_dists(
            &step.costs,
            &step.states,
            &file.actions,
            &format!("step {h} costs"),
        )?;
        for d in &step_costs {
            if d.grid_size() != file.grid_size {
                return Err(Error::GridMismatch(file.grid_size, d.grid_size()));
            }
        }
        costs.push(step_costs);
        let terminal = h + 1 == horizon;
        match (&step.transitions, terminal) {
            (None, true) => {}
            (Some(_), true) => {
                return Err(Error::Schema(format!(
                    "step {h} is terminal but declares transitions"
                )));
            }
            (None, false) => {
                return Err(Error::Schema(format!(
                    "step {h} needs transitions (only the last step may omit them)"
                )));
            }
            (Some(table), false) => {
                let mut rows = Vec::with_capacity(step.states.len() * file.actions.len());
                for s in &step.states {
                    let row = table.get(s).ok_or_else(|| {
                        Error::Schema(format!("step {h} transitions: missing state {s:?}"))
                    })?;
                    for a in &file.actions {
                        let probs = row.get(a).ok_or_else(|| {
                            Error::Schema(format!(
                                "step {h} transitions: missing ({s:?}, {a:?})"
                            ))
                        })?;
                        rows.push(probs.clone());
                    }
                }
                transitions.push(rows);
            }
        }
    }
    let initial = match &file.initial {
        InitialFile::Dist(w) => InitialStates::Dist(w.clone()),
        InitialFile::Schedule(seq) => {
            let idx = name_index(&file.steps[0].states, "state")?;
            InitialStates::Schedule(
                seq.iter()
                    .map(|n| lookup(&idx, n, "initial state"))
                    .collect::<Result<Vec<_>>>()?,
            )
        }
    };
    TabularMdp::new(n_states, file.actions.len(), costs, transitions, initial)
}

// ---------------------------------------------------------------------------
// Finite-class files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassFile {
    pub schema: String,
    pub grid_size: usize,
    pub actions: Vec<String>,
    /// One entry per step; `H = 1` for bandit classes.
    pub steps: Vec<ClassStepFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassStepFile {
    pub states: Vec<String>,
    pub members: Vec<ClassMemberFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassMemberFile {
    pub id: String,
    /// `table[state][action] = mass vector of length grid_size`.
    pub table: MassTable,
}

pub fn build_class(file: &ClassFile) -> Result<FiniteClass> {
    check_schema(&file.schema, CLASS_SCHEMA)?;
    let mut steps = Vec::with_capacity(file.steps.len());
    for (h, step) in file.steps.iter().enumerate() {
        name_index(&step.states, "state")?;
        let mut members = Vec::with_capacity(step.members.len());
        for m in &step.members {
            let dists = table_to_dists(
                &m.table,
                &step.states,
                &file.actions,
                &format!("step {h} member {:?}", m.id),
            )?;
            for d in &dists {
                if d.grid_size() != file.grid_size {
                    return Err(Error::GridMismatch(file.grid_size, d.grid_size()));
                }
            }
            members.push(CondDistTable::new(
                m.id.clone(),
                step.states.len(),
                file.actions.len(),
                dists,
            )?);
        }
        steps.push(members);
    }
    FiniteClass::new(steps)
}

// ---------------------------------------------------------------------------
// Policies and data distributions
// ---------------------------------------------------------------------------

/// Policy specification: a deterministic action name per `(step, state)`, or
/// explicit action weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolicyFile {
    Deterministic {
        name: String,
        actions: Vec<BTreeMap<String, String>>,
    },
    Stochastic {
        name: String,
        probs: Vec<BTreeMap<String, BTreeMap<String, f64>>>,
    },
}

impl PolicyFile {
    pub fn name(&self) -> &str {
        match self {
            PolicyFile::Deterministic { name, .. } => name,
            PolicyFile::Stochastic { name, .. } => name,
        }
    }
}

pub fn build_policy(file: &PolicyFile, mdp_file: &MdpFile) -> Result<Policy> {
    let actions = name_index(&mdp_file.actions, "action")?;
    match file {
        PolicyFile::Deterministic { name, actions: steps } => {
            if steps.len() != mdp_file.steps.len() {
                return Err(Error::Schema(format!(
                    "policy {name:?} covers {} steps, MDP has {}",
                    steps.len(),
                    mdp_file.steps.len()
                )));
            }
            let mut table = Vec::with_capacity(steps.len());
            for (h, step) in steps.iter().enumerate() {
                let mut row = Vec::with_capacity(mdp_file.steps[h].states.len());
                for s in &mdp_file.steps[h].states {
                    let a = step.get(s).ok_or_else(|| {
                        Error::Schema(format!("policy {name:?}: missing state {s:?} at step {h}"))
                    })?;
                    row.push(lookup(&actions, a, "action")?);
                }
                table.push(row);
            }
            Policy::deterministic(&table, mdp_file.actions.len())
        }
        PolicyFile::Stochastic { name, probs } => {
            if probs.len() != mdp_file.steps.len() {
                return Err(Error::Schema(format!(
                    "policy {name:?} covers {} steps, MDP has {}",
                    probs.len(),
                    mdp_file.steps.len()
                )));
            }
            let mut table = Vec::with_capacity(probs.len());
            for (h, step) in probs.iter().enumerate() {
                let mut rows = Vec::with_capacity(mdp_file.steps[h].states.len());
                for s in &mdp_file.steps[h].states {
                    let weights = step.get(s).ok_or_else(|| {
                        Error::Schema(format!("policy {name:?}: missing state {s:?} at step {h}"))
                    })?;
                    let mut row = vec![0.0; mdp_file.actions.len()];
                    for (a, &w) in weights {
                        row[lookup(&actions, a, "action")?] = w;
                    }
                    rows.push(row);
                }
                table.push(rows);
            }
            Policy::new(table)
        }
    }
}

/// Data-distribution specification: per-step weights over `(state, action)`.
pub type NuFile = Vec<BTreeMap<String, BTreeMap<String, f64>>>;

pub fn build_nu(nu: &NuFile, mdp_file: &MdpFile) -> Result<DataDist> {
    let actions = name_index(&mdp_file.actions, "action")?;
    if nu.len() != mdp_file.steps.len() {
        return Err(Error::Schema(format!(
            "data distribution covers {} steps, MDP has {}",
            nu.len(),
            mdp_file.steps.len()
        )));
    }
    let mut per_h = Vec::with_capacity(nu.len());
    for (h, step) in nu.iter().enumerate() {
        let states = name_index(&mdp_file.steps[h].states, "state")?;
        let mut row = vec![0.0; mdp_file.steps[h].states.len() * mdp_file.actions.len()];
        for (s, weights) in step {
            let x = lookup(&states, s, "state")?;
            for (a, &w) in weights {
                row[x * mdp_file.actions.len() + lookup(&actions, a, "action")?] = w;
            }
        }
        per_h.push(row);
    }
    DataDist::new(per_h)
}

// ---------------------------------------------------------------------------
// Eluder instance files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EluderFile {
    pub schema: String,
    pub n_points: usize,
    pub functions: Vec<Vec<f64>>,
    pub dists: Vec<Vec<f64>>,
    pub epsilon0: f64,
}

pub fn build_eluder_instance(file: &EluderFile) -> Result<crate::eluder::EluderInstance> {
    check_schema(&file.schema, ELUDER_SCHEMA)?;
    crate::eluder::EluderInstance::new(
        file.n_points,
        file.functions.clone(),
        file.dists.clone(),
        file.epsilon0,
    )
}

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

use crate::agents::cb::BetaSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub schema: String,
    pub name: String,
    #[serde(default)]
    pub master_seed: u64,
    pub seeds: Vec<u64>,
    /// Named result checks evaluated after the sweep; the process exit code
    /// reflects them.
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(flatten)]
    pub spec: ScenarioSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioSpec {
    Cb {
        env: MaybeFile<CbEnvFile>,
        class: MaybeFile<ClassFile>,
        config: CbScenarioConfig,
    },
    OnlineRl {
        mdp: MaybeFile<MdpFile>,
        class: MaybeFile<ClassFile>,
        config: OnlineScenarioConfig,
    },
    OfflineRl {
        mdp: MaybeFile<MdpFile>,
        class: MaybeFile<ClassFile>,
        policies: Vec<PolicyFile>,
        nu: NuFile,
        config: OfflineScenarioConfig,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CbScenarioConfig {
    pub episodes: usize,
    pub delta: f64,
    pub beta: BetaSpec,
    /// Also run the squared-loss baseline over its tuning grid.
    #[serde(default)]
    pub baseline: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OnlineScenarioConfig {
    pub episodes: usize,
    pub delta: f64,
    pub beta: BetaSpec,
    #[serde(default)]
    pub uae: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OfflineScenarioConfig {
    /// Dataset sizes to sweep; one entry for a single-size run.
    pub n_samples: Vec<usize>,
    pub delta: f64,
    pub beta: BetaSpec,
    /// Name of the comparator policy (must appear in `policies`).
    pub comparator: String,
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile> {
    let text = fs::read_to_string(path)?;
    let file: ScenarioFile = serde_json::from_str(&text)?;
    check_schema(&file.schema, SCENARIO_SCHEMA)?;
    if file.seeds.is_empty() {
        return Err(Error::Scenario("seed list must not be empty".into()));
    }
    let mut sorted = file.seeds.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != file.seeds.len() {
        return Err(Error::Scenario("seeds must be distinct".into()));
    }
    Ok(file)
}
