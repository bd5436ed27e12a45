//! Pattern design by switching, instantaneous and smooth switching runs, and
//! region-of-attraction predictions for the post-switch equilibrium.

mod edges;
mod epsilon;
mod schedule;

pub use edges::EdgeDynamicsState;
pub use epsilon::{estimate_epsilon, EpsilonEstimate, EpsilonSettings, SAFETY_FACTOR};
pub use schedule::{
    run_instantaneous_switch, run_schedule, run_smooth_switch, InstantSwitchOutcome, ScheduleHook, ScheduledSwitch,
    SwitchKind, Verdict,
};

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{find_equilibria, sign_pattern, DynamicsError, EquilibriumPair, ModelParams};
use crate::graph::{GraphError, SignedGraph, SwitchingAssignment};
use crate::spectral::{leading_eigenpair, BifurcationThresholds, SpectralError, SpectralSummary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SwitchingError {
    #[error("graph must have an all-positive signature")]
    NotAllPositive,
    #[error("graph is not strongly connected")]
    NotStronglyConnected,
    #[error("graph is not structurally balanced")]
    NotBalanced,
    #[error("u = {u} lies outside the bistable window ({u_star}, {u_two})")]
    OutsideBistableWindow { u: f64, u_star: f64, u_two: f64 },
    #[error("unknown agent {0}")]
    UnknownAgent(usize),
    #[error("invalid switch schedule: {0}")]
    InvalidSchedule(String),
    #[error("no basin-boundary crossing found along any sampled direction; enlarge s_max")]
    BisectionFailed,
    #[error("estimated eps {eps_hat} is not below the equilibrium ratio {min_ratio}")]
    AssumptionViolated { eps_hat: f64, min_ratio: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Task1,
    Task2,
}

/// Per-agent target task; agents labeled `Task2` form the switching set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSpec {
    pub labels: Vec<Task>,
}

impl PatternSpec {
    pub fn from_switching_set(n: usize, w: &[usize]) -> Result<Self, SwitchingError> {
        let assignment = SwitchingAssignment::from_set(n, w)?;
        Ok(Self {
            labels: assignment
                .theta()
                .iter()
                .map(|&t| if t < 0 { Task::Task2 } else { Task::Task1 })
                .collect(),
        })
    }

    pub fn switching_set(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == Task::Task2).collect()
    }

    pub fn assignment(&self) -> SwitchingAssignment {
        let theta = self.labels.iter().map(|t| if *t == Task::Task2 { -1 } else { 1 }).collect();
        SwitchingAssignment::from_theta(theta).expect("labels map to +-1")
    }
}

/// `switch(g, W)` for an all-positive strongly connected `g`.
pub fn design_pattern(g_positive: &SignedGraph, pattern: &PatternSpec) -> Result<SignedGraph, SwitchingError> {
    if pattern.labels.len() != g_positive.n() {
        return Err(GraphError::DimensionMismatch {
            expected: g_positive.n(),
            actual: pattern.labels.len(),
        }
        .into());
    }
    if !g_positive.is_all_positive() {
        return Err(SwitchingError::NotAllPositive);
    }
    if !g_positive.is_strongly_connected() {
        return Err(SwitchingError::NotStronglyConnected);
    }
    Ok(g_positive.switch(&pattern.assignment())?)
}

/// Everything needed to predict transitions on a balanced graph operated in
/// its bistable window.
#[derive(Debug, Clone, PartialEq)]
pub struct BistableSystem {
    pub graph: SignedGraph,
    pub params: ModelParams,
    /// Certificate `θ` with `switch(graph, θ)` all-positive.
    pub certificate: SwitchingAssignment,
    pub spectrum: SpectralSummary,
    pub thresholds: BifurcationThresholds,
    pub u: f64,
    pub pair: EquilibriumPair,
}

impl BistableSystem {
    pub fn analyze(g: &SignedGraph, p: &ModelParams) -> Result<Self, SwitchingError> {
        p.check_dim(g.n())?;
        let u = p.require_uniform_u()?;
        let cert = g.balance_certificate();
        let Some(theta) = cert.theta() else {
            return Err(SwitchingError::NotBalanced);
        };
        let spectrum = leading_eigenpair(g)?;
        let thresholds = p.thresholds(&spectrum)?;
        if !thresholds.in_bistable_window(u) {
            return Err(SwitchingError::OutsideBistableWindow {
                u,
                u_star: thresholds.u_star,
                u_two: thresholds.u_two,
            });
        }
        let eq = find_equilibria(g, p, &spectrum, &Default::default())?;
        let pair = eq.pair.ok_or(SwitchingError::OutsideBistableWindow {
            u,
            u_star: thresholds.u_star,
            u_two: thresholds.u_two,
        })?;
        Ok(Self {
            graph: g.clone(),
            params: p.clone(),
            certificate: theta.clone(),
            spectrum,
            thresholds,
            u,
            pair,
        })
    }

    /// The system on `switch(graph, w)`, obtained by conjugating vectors with
    /// `Θ` instead of recomputing them.
    pub fn switched(&self, w: &SwitchingAssignment) -> Result<Self, SwitchingError> {
        let graph = self.graph.switch(w)?;
        let spectrum = SpectralSummary {
            v_star: w.apply(&self.spectrum.v_star),
            w_star: w.apply(&self.spectrum.w_star),
            w_unit: w.apply(&self.spectrum.w_unit),
            ..self.spectrum.clone()
        };
        let x1 = w.apply(&self.pair.x1);
        let x2 = x1.iter().map(|v| -v).collect();
        Ok(Self {
            graph,
            params: self.params.clone(),
            certificate: self.certificate.compose(w)?,
            spectrum,
            thresholds: self.thresholds.clone(),
            u: self.u,
            pair: EquilibriumPair {
                x1,
                x2,
                residual: self.pair.residual,
            },
        })
    }

    /// `|<w*, x>| / ‖x‖²` minimized over the two stable equilibria.
    pub fn min_equilibrium_ratio(&self) -> f64 {
        let r = |x: &[f64]| self.spectrum.project_unit(x).abs() / x.iter().map(|v| v * v).sum::<f64>();
        r(&self.pair.x1).min(r(&self.pair.x2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchPrediction {
    /// `None` when the projection is too close to zero to emit a sign.
    pub predicted_equilibrium: Option<Vec<f64>>,
    pub predicted_pattern: Option<Vec<i8>>,
    pub confident: bool,
    /// `|<w*, x>| - eps ‖x‖²`.
    pub margin: f64,
    pub projection: f64,
    /// `+1`, `-1`, or `0` when uncertain.
    pub projection_sign: i8,
    pub eps: f64,
}

/// Relative tie threshold on the projection.
pub const TIE_TOL: f64 = 1e-12;

/// Which equilibrium of `system` attracts `x_now`, from the projection on the
/// unit-norm `w*`.
pub fn predict_post_switch(x_now: &[f64], system: &BistableSystem, eps: f64) -> Result<SwitchPrediction, SwitchingError> {
    if x_now.len() != system.graph.n() {
        return Err(GraphError::DimensionMismatch {
            expected: system.graph.n(),
            actual: x_now.len(),
        }
        .into());
    }
    let norm2: f64 = x_now.iter().map(|v| v * v).sum();
    let projection = system.spectrum.project_unit(x_now);
    let margin = projection.abs() - eps * norm2;
    if projection.abs() <= TIE_TOL * norm2 || norm2 == 0.0 {
        return Ok(SwitchPrediction {
            predicted_equilibrium: None,
            predicted_pattern: None,
            confident: false,
            margin,
            projection,
            projection_sign: 0,
            eps,
        });
    }
    let (sign, target) = if projection > 0.0 {
        (1, &system.pair.x1)
    } else {
        (-1, &system.pair.x2)
    };
    Ok(SwitchPrediction {
        predicted_pattern: Some(sign_pattern(target)),
        predicted_equilibrium: Some(target.clone()),
        confident: margin > 0.0,
        margin,
        projection,
        projection_sign: sign,
        eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generators::{complete, fixture10};

    fn fig4_params() -> ModelParams {
        ModelParams::homogeneous(10, 1.0, 1.2, 1.3, 0.294)
    }

    #[test]
    fn thirty_seventy_design() {
        let g = fixture10();
        let pattern = PatternSpec::from_switching_set(10, &[0, 1, 2]).unwrap();
        let gw = design_pattern(&g, &pattern).unwrap();
        let sys = BistableSystem::analyze(&gw, &ModelParams::homogeneous(10, 1.0, 1.2, 1.3, 0.324)).unwrap();
        let neg = sign_pattern(&sys.pair.x1).iter().filter(|&&s| s < 0).count();
        assert!(neg == 3 || neg == 7);
        assert_eq!(pattern.switching_set(), vec![0, 1, 2]);
    }

    #[test]
    fn empty_and_full_sets_give_agreement() {
        let g = fixture10();
        for w in [vec![], (0..10).collect::<Vec<_>>()] {
            let gw = design_pattern(&g, &PatternSpec::from_switching_set(10, &w).unwrap()).unwrap();
            let sys = BistableSystem::analyze(&gw, &fig4_params()).unwrap();
            let pat = sign_pattern(&sys.pair.x1);
            assert!(pat.iter().all(|&s| s == pat[0]));
        }
    }

    #[test]
    fn design_rejects_signed_or_disconnected_input() {
        let g = fixture10().switch(&SwitchingAssignment::from_set(10, &[2]).unwrap()).unwrap();
        let pat = PatternSpec::from_switching_set(10, &[0]).unwrap();
        assert_eq!(design_pattern(&g, &pat).unwrap_err(), SwitchingError::NotAllPositive);
        let disconnected = SignedGraph::new(2, []).unwrap();
        let pat2 = PatternSpec::from_switching_set(2, &[0]).unwrap();
        assert_eq!(design_pattern(&disconnected, &pat2).unwrap_err(), SwitchingError::NotStronglyConnected);
    }

    #[test]
    fn single_agent_switch_flips_only_that_agent() {
        let g = fixture10();
        let sys = BistableSystem::analyze(&g, &fig4_params()).unwrap();
        let w = SwitchingAssignment::from_set(10, &[0]).unwrap();
        let after = sys.switched(&w).unwrap();
        let pred = predict_post_switch(&sys.pair.x1, &after, 0.05).unwrap();
        assert!(pred.confident);
        let before = sign_pattern(&sys.pair.x1);
        let predicted = pred.predicted_pattern.unwrap();
        for i in 0..10 {
            assert_eq!(predicted[i], if i == 0 { -before[i] } else { before[i] });
        }
    }

    #[test]
    fn full_switch_keeps_pattern() {
        let g = fixture10();
        let sys = BistableSystem::analyze(&g, &fig4_params()).unwrap();
        let after = sys.switched(&SwitchingAssignment::all(10)).unwrap();
        let pred = predict_post_switch(&sys.pair.x1, &after, 0.05).unwrap();
        assert_eq!(pred.predicted_pattern.unwrap(), sign_pattern(&sys.pair.x1));
    }

    #[test]
    fn conjugated_system_matches_direct_analysis() {
        let g = fixture10();
        let sys = BistableSystem::analyze(&g, &fig4_params()).unwrap();
        let w = SwitchingAssignment::from_set(10, &[1, 4, 8]).unwrap();
        let a = sys.switched(&w).unwrap();
        let b = BistableSystem::analyze(&g.switch(&w).unwrap(), &fig4_params()).unwrap();
        let err = a.pair.x1.iter().zip(&b.pair.x1).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn tie_is_uncertain() {
        let g = complete(2);
        let p = ModelParams::homogeneous(2, 1.0, 1.2, 1.3, 0.5);
        let sys = BistableSystem::analyze(&g, &p).unwrap();
        let pred = predict_post_switch(&[0.2, -0.2], &sys, 0.05).unwrap();
        assert_eq!(pred.projection_sign, 0);
        assert!(pred.predicted_equilibrium.is_none() && !pred.confident);
    }

    #[test]
    fn rejects_unbalanced_and_subcritical() {
        let bad = SignedGraph::from_signs(3, &[0, 1, -1, 1, 0, 1, -1, 1, 0]).unwrap();
        let p = ModelParams::homogeneous(3, 1.0, 1.2, 1.3, 0.5);
        assert_eq!(BistableSystem::analyze(&bad, &p).unwrap_err(), SwitchingError::NotBalanced);
        let low = ModelParams::homogeneous(3, 1.0, 1.2, 1.3, 0.01);
        assert!(matches!(
            BistableSystem::analyze(&complete(3), &low),
            Err(SwitchingError::OutsideBistableWindow { .. })
        ));
    }
}
