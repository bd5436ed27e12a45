use serde::Serialize;

use super::{predict_post_switch, BistableSystem, EdgeDynamicsState, SwitchPrediction, SwitchingError};
use crate::dynamics::{
    integrate_with, sign_pattern, DynamicsError, EventHook, IntegratorSettings, Interaction, ModelParams, Network,
    Trajectory, TrajectoryEvent,
};
use crate::graph::{SignedGraph, SwitchingAssignment};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwitchKind {
    Instant,
    Smooth { tau_a: f64 },
}

/// Toggles `θ` of `agents` (0-based) at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledSwitch {
    pub t: f64,
    pub agents: Vec<usize>,
    pub kind: SwitchKind,
}

/// Applies a switch schedule relative to the initial graph and records a
/// prediction at every switch when a bistable analysis is available.
pub struct ScheduleHook {
    g0: SignedGraph,
    events: Vec<ScheduledSwitch>,
    next: usize,
    theta: SwitchingAssignment,
    engage_at_start: Option<f64>,
    predictor: Option<(BistableSystem, f64)>,
    predictions: Vec<(f64, SwitchPrediction)>,
}

impl ScheduleHook {
    pub fn new(g0: &SignedGraph, events: Vec<ScheduledSwitch>) -> Result<Self, SwitchingError> {
        let n = g0.n();
        for (j, ev) in events.iter().enumerate() {
            if !ev.t.is_finite() {
                return Err(SwitchingError::InvalidSchedule(format!("switch {} has non-finite time", j + 1)));
            }
            if j > 0 && ev.t < events[j - 1].t {
                return Err(SwitchingError::InvalidSchedule("switch times must be sorted".into()));
            }
            if let Some(&bad) = ev.agents.iter().find(|&&a| a >= n) {
                return Err(SwitchingError::UnknownAgent(bad + 1));
            }
            if let SwitchKind::Smooth { tau_a } = ev.kind {
                if !(tau_a > 0.0 && tau_a.is_finite()) {
                    return Err(SwitchingError::InvalidSchedule(format!("tau_a must be > 0 (got {tau_a})")));
                }
            }
        }
        Ok(Self {
            g0: g0.clone(),
            events,
            next: 0,
            theta: SwitchingAssignment::identity(n),
            engage_at_start: None,
            predictor: None,
            predictions: Vec::new(),
        })
    }

    /// Runs the edges under the relaxation law from `t = 0`.
    pub fn with_edge_dynamics(mut self, tau_a: f64) -> Result<Self, SwitchingError> {
        if !(tau_a > 0.0 && tau_a.is_finite()) {
            return Err(SwitchingError::InvalidSchedule(format!("tau_a must be > 0 (got {tau_a})")));
        }
        self.engage_at_start = Some(tau_a);
        Ok(self)
    }

    /// `system` must describe the initial graph.
    pub fn with_predictor(mut self, system: BistableSystem, eps: f64) -> Self {
        self.predictor = Some((system, eps));
        self
    }

    pub fn predictions(&self) -> &[(f64, SwitchPrediction)] {
        &self.predictions
    }

    /// Cumulative switching relative to the initial graph.
    pub fn theta(&self) -> &SwitchingAssignment {
        &self.theta
    }

    fn relaxing(&self, network: &Network, tau_a: f64) -> Result<EdgeDynamicsState, SwitchingError> {
        EdgeDynamicsState::from_parts(
            &self.g0,
            self.theta.clone(),
            Some(network.interaction().weights()),
            tau_a,
        )
    }

    fn apply(&mut self, t: f64, x: &[f64], network: &mut Network) -> Result<Vec<TrajectoryEvent>, SwitchingError> {
        if let Some(tau_a) = self.engage_at_start.take() {
            *network = Network::Relaxing(self.relaxing(network, tau_a)?);
            return Ok(Vec::new());
        }
        let ev = self.events[self.next].clone();
        self.next += 1;
        let w = SwitchingAssignment::from_set(self.g0.n(), &ev.agents)?;
        let agents = w.switching_set();
        if let (SwitchKind::Instant, Network::Fixed(_)) = (ev.kind, &*network) {
            self.theta = self.theta.compose(&w)?;
            *network = Network::Fixed(Interaction::from_graph(&self.g0.switch(&self.theta)?));
        } else {
            if let (SwitchKind::Smooth { tau_a }, Network::Fixed(_)) = (ev.kind, &*network) {
                *network = Network::Relaxing(self.relaxing(network, tau_a)?);
            }
            let Network::Relaxing(state) = network else {
                unreachable!("fixed networks handled above")
            };
            if let SwitchKind::Smooth { tau_a } = ev.kind {
                state.set_tau_a(tau_a)?;
            }
            for &a in &agents {
                state.toggle(a)?;
            }
            if ev.kind == SwitchKind::Instant {
                state.snap_to_targets();
            }
            self.theta = state.theta().clone();
        }
        if let Some((system, eps)) = &self.predictor {
            let after = system.switched(&self.theta)?;
            self.predictions.push((t, predict_post_switch(x, &after, *eps)?));
        }
        let kind = match ev.kind {
            SwitchKind::Instant => "instant",
            SwitchKind::Smooth { .. } => "smooth",
        };
        let labels: Vec<String> = agents.iter().map(|a| (a + 1).to_string()).collect();
        let cumulative: Vec<String> = self.theta.switching_set().iter().map(|a| (a + 1).to_string()).collect();
        Ok(vec![TrajectoryEvent {
            t,
            kind: kind.to_string(),
            detail: format!("toggle agents [{}]; W = {{{}}}", labels.join(","), cumulative.join(",")),
        }])
    }
}

impl EventHook for ScheduleHook {
    fn next_time(&self) -> Option<f64> {
        if self.engage_at_start.is_some() {
            return Some(0.0);
        }
        self.events.get(self.next).map(|e| e.t)
    }

    fn fire(&mut self, t: f64, x: &[f64], network: &mut Network) -> Result<Vec<TrajectoryEvent>, DynamicsError> {
        self.apply(t, x, network).map_err(|e| DynamicsError::Event(e.to_string()))
    }
}

/// Final sign pattern against the last emitted prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub predicted: Vec<i8>,
    pub observed: Vec<i8>,
    pub confident: bool,
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstantSwitchOutcome {
    pub trajectory: Trajectory,
    pub predictions: Vec<(f64, SwitchPrediction)>,
    /// `None` when no switch produced a signed prediction.
    pub verdict: Option<Verdict>,
}

impl InstantSwitchOutcome {
    fn assemble(trajectory: Trajectory, hook: ScheduleHook) -> Self {
        let observed = sign_pattern(trajectory.final_state());
        let verdict = hook.predictions.last().and_then(|(_, pred)| {
            pred.predicted_pattern.as_ref().map(|predicted| Verdict {
                matches: *predicted == observed,
                predicted: predicted.clone(),
                observed: observed.clone(),
                confident: pred.confident,
            })
        });
        Self {
            trajectory,
            predictions: hook.predictions,
            verdict,
        }
    }

    pub fn prediction(&self) -> Option<&SwitchPrediction> {
        self.predictions.last().map(|(_, p)| p)
    }
}

/// Runs `events` on `g` with optional edge dynamics from the start and an
/// optional predictor for the initial graph.
pub fn run_schedule(
    x0: &[f64],
    g: &SignedGraph,
    p: &ModelParams,
    events: Vec<ScheduledSwitch>,
    settings: &IntegratorSettings,
    edge_dynamics: Option<f64>,
    predictor: Option<(BistableSystem, f64)>,
) -> Result<InstantSwitchOutcome, SwitchingError> {
    let mut hook = ScheduleHook::new(g, events)?;
    if let Some(tau_a) = edge_dynamics {
        hook = hook.with_edge_dynamics(tau_a)?;
    }
    if let Some((system, eps)) = predictor {
        hook = hook.with_predictor(system, eps);
    }
    let traj = integrate_with(x0, g, p, settings, &mut hook)?;
    Ok(InstantSwitchOutcome::assemble(traj, hook))
}

/// Integrates on `g`, replaces it by `switch(g, w)` at `t_switch` and
/// predicts the post-switch equilibrium from the state at that moment.
pub fn run_instantaneous_switch(
    x0: &[f64],
    g: &SignedGraph,
    w: &SwitchingAssignment,
    p: &ModelParams,
    t_switch: f64,
    settings: &IntegratorSettings,
    eps: f64,
) -> Result<InstantSwitchOutcome, SwitchingError> {
    if !(t_switch < settings.horizon) {
        return Err(SwitchingError::InvalidSchedule(format!(
            "t_switch = {t_switch} must precede the horizon {}",
            settings.horizon
        )));
    }
    let system = BistableSystem::analyze(g, p)?;
    let events = vec![ScheduledSwitch {
        t: t_switch,
        agents: w.switching_set(),
        kind: SwitchKind::Instant,
    }];
    run_schedule(x0, g, p, events, settings, None, Some((system, eps)))
}

/// Co-integrates opinions and edges; each trigger `(t, agent)` toggles
/// `θ_agent` (0-based). Predictions are attached when `g` is bistable at `p`.
pub fn run_smooth_switch(
    x0: &[f64],
    g: &SignedGraph,
    triggers: &[(f64, usize)],
    p: &ModelParams,
    tau_a: f64,
    settings: &IntegratorSettings,
    eps: f64,
) -> Result<InstantSwitchOutcome, SwitchingError> {
    let events = triggers
        .iter()
        .map(|&(t, agent)| ScheduledSwitch {
            t,
            agents: vec![agent],
            kind: SwitchKind::Smooth { tau_a },
        })
        .collect();
    let predictor = BistableSystem::analyze(g, p).ok().map(|s| (s, eps));
    run_schedule(x0, g, p, events, settings, Some(tau_a), predictor)
}
