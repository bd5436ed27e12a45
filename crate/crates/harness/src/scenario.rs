//! Scenario files: parsing with field-level diagnostics, resolution into a
//! runnable scenario, execution and output.

use std::fs;
use std::path::{Path, PathBuf};

use opinion_core::dynamics::{
    boundedness_check, sign_pattern, IntegratorSettings, ModelParams, Saturation, TabulatedSaturation,
};
use opinion_core::graph::generators::{complete, directed_ring, fixture10};
use opinion_core::graph::{GraphFile, SignedGraph};
use opinion_core::rng::substream;
use opinion_core::switching::{
    run_schedule, BistableSystem, InstantSwitchOutcome, ScheduledSwitch, SwitchKind, Verdict,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::svg;

/// Prediction margin used when the scenario does not set `eps`.
pub const DEFAULT_EPS: f64 = 0.05;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub graph: GraphSource,
    pub params: ParamsConfig,
    pub x0: X0Spec,
    #[serde(default)]
    pub switches: Vec<SwitchConfig>,
    pub dt: Option<f64>,
    pub horizon: f64,
    pub seed: Option<u64>,
    pub eps: Option<f64>,
    #[serde(default)]
    pub svg: bool,
}

/// `"builtin:fixture10"`, `"builtin:complete:N"`, `"builtin:ring:N"`, a path
/// to a graph file, or an inline graph.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    Reference(String),
    Inline(GraphFile),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub d: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub u: AttentionConfig,
    #[serde(default)]
    pub saturation: SaturationConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AttentionConfig {
    Uniform(f64),
    PerAgent(Vec<f64>),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SaturationConfig {
    #[default]
    Tanh,
    /// `S` on `0 = x_0 < ... < x_m`, extended oddly.
    Table { x: Vec<f64>, y: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum X0Spec {
    Explicit(Vec<f64>),
    Generated(X0Mode),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum X0Mode {
    /// `x1*` (or `x2*`) plus uniform noise in `[-perturbation, perturbation]`.
    NearEquilibrium {
        perturbation: f64,
        seed: Option<u64>,
        #[serde(default)]
        branch: Branch,
    },
    /// Uniform in `[-scale, scale]^n`.
    Uniform {
        #[serde(default = "default_scale")]
        scale: f64,
        seed: Option<u64>,
    },
}

fn default_scale() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    #[default]
    X1,
    X2,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchMode {
    #[default]
    Instant,
    Smooth,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchConfig {
    pub t: f64,
    /// 1-based.
    pub agents: Vec<usize>,
    #[serde(default)]
    pub mode: SwitchMode,
    pub tau_a: Option<f64>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            HarnessError::Config(format!("field `{path}`: {inner}"))
        })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// Resolves a graph reference relative to `base`.
pub fn load_graph(spec: &str, base: &Path) -> Result<SignedGraph, HarnessError> {
    if let Some(rest) = spec.strip_prefix("builtin:") {
        let mut parts = rest.split(':');
        let name = parts.next().unwrap_or_default();
        let size = parts
            .next()
            .map(|s| s.parse::<usize>().map_err(|_| HarnessError::Config(format!("bad size in `{spec}`"))))
            .transpose()?;
        return match (name, size) {
            ("fixture10", None) => Ok(fixture10()),
            ("complete", Some(n)) if n >= 1 => Ok(complete(n)),
            ("ring", Some(n)) if n >= 1 => Ok(directed_ring(n)),
            _ => Err(HarnessError::Config(format!(
                "unknown builtin graph `{spec}` (expected fixture10, complete:N or ring:N)"
            ))),
        };
    }
    let path = base.join(spec);
    let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let file: GraphFile = serde_path_to_error::deserialize(de)
        .map_err(|e| HarnessError::Config(format!("{}: field `{}`: {}", path.display(), e.path(), e.inner())))?;
    Ok(file.to_graph()?)
}

/// `[-scale, scale]^n` from substream 0 of `seed`.
pub fn uniform_initial_state(n: usize, scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = substream(seed, 0);
    (0..n).map(|_| rng.random_range(-scale..=scale)).collect()
}

pub fn build_params(cfg: &ParamsConfig, n: usize) -> Result<ModelParams, HarnessError> {
    let u = match &cfg.u {
        AttentionConfig::Uniform(u) => vec![*u; n],
        AttentionConfig::PerAgent(u) => {
            if u.len() != n {
                return Err(HarnessError::Config(format!(
                    "field `params.u`: expected {n} entries, got {}",
                    u.len()
                )));
            }
            u.clone()
        }
    };
    let saturation = match &cfg.saturation {
        SaturationConfig::Tanh => Saturation::Tanh,
        SaturationConfig::Table { x, y } => Saturation::Tabulated(TabulatedSaturation::new(x.clone(), y.clone())?),
    };
    let p = ModelParams {
        d: cfg.d,
        alpha: cfg.alpha,
        gamma: cfg.gamma,
        u,
        saturation,
    };
    p.validate()?;
    Ok(p)
}

/// A fully resolved scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub graph: SignedGraph,
    pub params: ModelParams,
    pub x0: Vec<f64>,
    pub events: Vec<ScheduledSwitch>,
    pub settings: IntegratorSettings,
    /// Edge time constant when any switch is smooth; edges then relax from
    /// `t = 0`.
    pub edge_tau: Option<f64>,
    pub eps: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub dt: Option<f64>,
}

impl Scenario {
    pub fn resolve(cfg: &ScenarioConfig, base: &Path, overrides: &Overrides) -> Result<Self, HarnessError> {
        let graph = match &cfg.graph {
            GraphSource::Reference(s) => load_graph(s, base)?,
            GraphSource::Inline(file) => file.to_graph()?,
        };
        let n = graph.n();
        let params = build_params(&cfg.params, n)?;
        let seed = overrides.seed.or(cfg.seed).unwrap_or(0);

        let mut events = Vec::with_capacity(cfg.switches.len());
        let mut edge_tau = None;
        for (j, sw) in cfg.switches.iter().enumerate() {
            let field = format!("switches[{j}]");
            let mut agents = Vec::with_capacity(sw.agents.len());
            for &a in &sw.agents {
                if a == 0 || a > n {
                    return Err(HarnessError::Config(format!(
                        "field `{field}.agents`: unknown agent {a} (graph has agents 1..={n})"
                    )));
                }
                agents.push(a - 1);
            }
            let kind = match sw.mode {
                SwitchMode::Instant => SwitchKind::Instant,
                SwitchMode::Smooth => {
                    let tau_a = sw
                        .tau_a
                        .ok_or_else(|| HarnessError::Config(format!("field `{field}.tau_a`: required for smooth switches")))?;
                    if !(tau_a > 0.0) {
                        return Err(HarnessError::Config(format!("field `{field}.tau_a`: must be > 0")));
                    }
                    edge_tau.get_or_insert(tau_a);
                    SwitchKind::Smooth { tau_a }
                }
            };
            events.push(ScheduledSwitch { t: sw.t, agents, kind });
        }

        let x0 = match &cfg.x0 {
            X0Spec::Explicit(x) => {
                if x.len() != n {
                    return Err(HarnessError::Config(format!("field `x0`: expected {n} entries, got {}", x.len())));
                }
                x.clone()
            }
            X0Spec::Generated(X0Mode::Uniform { scale, seed: s }) => uniform_initial_state(n, *scale, s.unwrap_or(seed)),
            X0Spec::Generated(X0Mode::NearEquilibrium {
                perturbation,
                seed: s,
                branch,
            }) => {
                let system = BistableSystem::analyze(&graph, &params)?;
                let base = match branch {
                    Branch::X1 => &system.pair.x1,
                    Branch::X2 => &system.pair.x2,
                };
                let noise = uniform_initial_state(n, *perturbation, s.unwrap_or(seed));
                base.iter().zip(&noise).map(|(a, b)| a + b).collect()
            }
        };

        let default_dt = if edge_tau.is_some() {
            IntegratorSettings::EDGE_DT
        } else {
            IntegratorSettings::DEFAULT_DT
        };
        let settings = IntegratorSettings::new(overrides.dt.or(cfg.dt).unwrap_or(default_dt), cfg.horizon);
        settings.steps()?;
        Ok(Self {
            graph,
            params,
            x0,
            events,
            settings,
            edge_tau,
            eps: cfg.eps.unwrap_or(DEFAULT_EPS),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictionRecord {
    pub t: f64,
    pub predicted_pattern: Option<Vec<i8>>,
    pub confident: bool,
    pub margin: f64,
    pub projection: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub n: usize,
    pub horizon: f64,
    pub dt: f64,
    pub samples: usize,
    pub final_state: Vec<f64>,
    pub final_pattern: Vec<i8>,
    /// Agents (1-based) with each final sign.
    pub positive_agents: Vec<usize>,
    pub negative_agents: Vec<usize>,
    pub predictions: Vec<PredictionRecord>,
    pub verdict: Option<Verdict>,
    pub bounded_r2: bool,
    pub notes: Vec<String>,
}

pub struct ScenarioRun {
    pub outcome: InstantSwitchOutcome,
    pub summary: Summary,
}

pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioRun, HarnessError> {
    let mut notes = Vec::new();
    let predictor = if scenario.params.uniform_u().is_none() {
        notes.push("analysis predicates skipped (heterogeneous u)".to_string());
        None
    } else {
        match BistableSystem::analyze(&scenario.graph, &scenario.params) {
            Ok(system) => Some((system, scenario.eps)),
            Err(e) => {
                notes.push(format!("predictions skipped: {e}"));
                None
            }
        }
    };
    let outcome = run_schedule(
        &scenario.x0,
        &scenario.graph,
        &scenario.params,
        scenario.events.clone(),
        &scenario.settings,
        scenario.edge_tau,
        predictor,
    )?;
    let summary = summarize(&outcome, &scenario.params, notes);
    Ok(ScenarioRun { outcome, summary })
}

pub fn summarize(outcome: &InstantSwitchOutcome, params: &ModelParams, notes: Vec<String>) -> Summary {
    let traj = &outcome.trajectory;
    let final_state = traj.final_state().to_vec();
    let final_pattern = sign_pattern(&final_state);
    let by_sign = |s: i8| -> Vec<usize> { (0..final_pattern.len()).filter(|&i| final_pattern[i] == s).map(|i| i + 1).collect() };
    Summary {
        n: final_state.len(),
        horizon: traj.samples.last().map(|s| s.t).unwrap_or(0.0),
        dt: traj.dt,
        samples: traj.samples.len(),
        positive_agents: by_sign(1),
        negative_agents: by_sign(-1),
        final_pattern: final_pattern.clone(),
        final_state,
        predictions: outcome
            .predictions
            .iter()
            .map(|(t, p)| PredictionRecord {
                t: *t,
                predicted_pattern: p.predicted_pattern.clone(),
                confident: p.confident,
                margin: p.margin,
                projection: p.projection,
            })
            .collect(),
        verdict: outcome.verdict.clone(),
        bounded_r2: boundedness_check(traj, params, 2.0),
        notes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Files written for a run.
#[derive(Debug, Clone, Default)]
pub struct Written {
    pub paths: Vec<PathBuf>,
}

pub fn write_file(path: &Path, bytes: &[u8], written: &mut Written) -> Result<(), HarnessError> {
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))?;
    written.paths.push(path.to_path_buf());
    Ok(())
}

/// Trajectory, events, summary, optional edges and SVG under `out/prefix_*`.
pub fn write_run(
    run: &ScenarioRun,
    out: &Path,
    prefix: &str,
    format: Format,
    with_svg: bool,
) -> Result<Written, HarnessError> {
    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let mut written = Written::default();
    let traj = &run.outcome.trajectory;
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            traj.write_csv(&mut buf).map_err(|e| HarnessError::io(out, e))?;
            write_file(&out.join(format!("{prefix}_trajectory.csv")), &buf, &mut written)?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Row<'a> {
                t: f64,
                x: &'a [f64],
            }
            let rows: Vec<Row> = traj.samples.iter().map(|s| Row { t: s.t, x: &s.x }).collect();
            let text = serde_json::to_string(&rows).expect("rows serialize");
            write_file(&out.join(format!("{prefix}_trajectory.json")), text.as_bytes(), &mut written)?;
        }
    }
    if traj.edges.is_some() {
        let mut buf = Vec::new();
        traj.write_edges_csv(&mut buf).map_err(|e| HarnessError::io(out, e))?;
        write_file(&out.join(format!("{prefix}_edges.csv")), &buf, &mut written)?;
    }
    write_file(&out.join(format!("{prefix}_events.json")), traj.events_json().as_bytes(), &mut written)?;
    let summary = serde_json::to_string_pretty(&run.summary).expect("summary serializes");
    write_file(&out.join(format!("{prefix}_summary.json")), summary.as_bytes(), &mut written)?;
    if with_svg {
        let plot = svg::time_series(traj, &format!("{prefix}: opinions"));
        write_file(&out.join(format!("{prefix}.svg")), plot.as_bytes(), &mut written)?;
    }
    Ok(written)
}
