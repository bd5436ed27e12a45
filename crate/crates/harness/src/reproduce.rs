//! Figure presets. Each preset is an ordinary scenario config, so the same
//! run can be replayed through `simulate`.

use std::path::Path;
use std::str::FromStr;

use opinion_core::dynamics::sign_pattern;
use opinion_core::graph::generators::fixture10;
use opinion_core::graph::GraphFile;
use opinion_core::switching::{design_pattern, PatternSpec};
use serde::Serialize;
use serde_json::json;

use crate::error::HarnessError;
use crate::scenario::{run_scenario, write_run, Format, Overrides, Scenario, ScenarioConfig, ScenarioRun, Written};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig4,
    Fig5,
}

impl FromStr for Figure {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig2" => Ok(Self::Fig2),
            "fig4" => Ok(Self::Fig4),
            "fig5" => Ok(Self::Fig5),
            _ => Err(HarnessError::Config(format!("unknown figure `{s}` (expected fig2, fig4 or fig5)"))),
        }
    }
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fig2 => "fig2",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
        }
    }
}

pub const FIG2_U: f64 = 0.324;
pub const FIG4_U: f64 = 0.294;
pub const FIG4_SWITCH_T: f64 = 15.0;
pub const FIG5_U: f64 = 0.315;
pub const FIG5_TAU: f64 = 0.01;
pub const HORIZON: f64 = 30.0;

/// The preset as a scenario config document.
pub fn preset_config(figure: Figure, seed: u64) -> serde_json::Value {
    let params = |u: f64| json!({"d": 1.0, "alpha": 1.2, "gamma": 1.3, "u": u});
    let x0 = json!({"mode": "uniform", "scale": 0.1, "seed": seed});
    match figure {
        Figure::Fig2 => {
            let pattern = PatternSpec::from_switching_set(10, &[0, 1, 2]).expect("agents exist");
            let g = design_pattern(&fixture10(), &pattern).expect("fixture is all-positive");
            json!({
                "graph": serde_json::to_value(GraphFile::from(&g)).expect("graph serializes"),
                "params": params(FIG2_U),
                "x0": x0,
                "horizon": HORIZON,
                "dt": 0.01,
                "seed": seed,
                "svg": true,
            })
        }
        Figure::Fig4 => json!({
            "graph": "builtin:fixture10",
            "params": params(FIG4_U),
            "x0": x0,
            "switches": [{"t": FIG4_SWITCH_T, "agents": [1], "mode": "instant"}],
            "horizon": HORIZON,
            "dt": 0.01,
            "seed": seed,
            "svg": true,
        }),
        Figure::Fig5 => json!({
            "graph": "builtin:fixture10",
            "params": params(FIG5_U),
            "x0": x0,
            "switches": [
                {"t": 10.0, "agents": [1, 2], "mode": "smooth", "tau_a": FIG5_TAU},
                {"t": 15.0, "agents": [3], "mode": "smooth", "tau_a": FIG5_TAU},
            ],
            "horizon": HORIZON,
            "dt": 0.001,
            "seed": seed,
            "svg": true,
        }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FigureVerdict {
    pub figure: &'static str,
    pub claim: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub struct Reproduction {
    pub run: ScenarioRun,
    pub verdict: FigureVerdict,
    pub config: serde_json::Value,
}

fn agents(list: impl Iterator<Item = usize>) -> Vec<usize> {
    list.map(|i| i + 1).collect()
}

fn judge(figure: Figure, run: &ScenarioRun) -> FigureVerdict {
    let traj = &run.outcome.trajectory;
    let last = sign_pattern(traj.final_state());
    let n = last.len();
    match figure {
        Figure::Fig2 => {
            let pos = last.iter().filter(|&&s| s > 0).count();
            let neg = last.iter().filter(|&&s| s < 0).count();
            let passed = (pos, neg) == (3, 7) || (pos, neg) == (7, 3);
            FigureVerdict {
                figure: "fig2",
                claim: "exactly 3 agents share one sign and 7 the other",
                passed,
                detail: format!("{pos} positive, {neg} negative, pattern {last:?}"),
            }
        }
        Figure::Fig4 => {
            let before = sign_pattern(traj.state_at(FIG4_SWITCH_T));
            let flipped = agents((0..n).filter(|&i| before[i] != last[i]));
            FigureVerdict {
                figure: "fig4",
                claim: "only agent 1 changes sign after the switch at t = 15",
                passed: flipped == [1],
                detail: format!("pattern at t = 15 {before:?}, final {last:?}, changed agents {flipped:?}"),
            }
        }
        Figure::Fig5 => {
            let group = last[0];
            let passed = group != 0
                && last[..3].iter().all(|&s| s == group)
                && last[3..].iter().all(|&s| s == -group);
            FigureVerdict {
                figure: "fig5",
                claim: "agents 1-3 hold the sign opposite to agents 4-10 at t = 30",
                passed,
                detail: format!("final pattern {last:?}"),
            }
        }
    }
}

pub fn reproduce(figure: Figure, seed: u64) -> Result<Reproduction, HarnessError> {
    let config = preset_config(figure, seed);
    let cfg = ScenarioConfig::from_json(&config.to_string())?;
    let scenario = Scenario::resolve(&cfg, Path::new("."), &Overrides::default())?;
    let run = run_scenario(&scenario)?;
    let verdict = judge(figure, &run);
    Ok(Reproduction { run, verdict, config })
}

/// Writes the run under `out/<figure>_*` plus the preset config and verdict.
pub fn write_reproduction(rep: &Reproduction, out: &Path, format: Format) -> Result<Written, HarnessError> {
    let name = rep.verdict.figure;
    let mut written = write_run(&rep.run, out, name, format, true)?;
    let config = serde_json::to_string_pretty(&rep.config).expect("config serializes");
    crate::scenario::write_file(&out.join(format!("{name}_config.json")), config.as_bytes(), &mut written)?;
    let verdict = serde_json::to_string_pretty(&rep.verdict).expect("verdict serializes");
    crate::scenario::write_file(&out.join(format!("{name}_verdict.json")), verdict.as_bytes(), &mut written)?;
    Ok(written)
}
