use crate::dynamics::Interaction;
use crate::graph::{GraphError, SignedGraph, SwitchingAssignment};

use super::SwitchingError;

/// Edge weights relaxing as `τ_a ȧ_ik = -a_ik + a_ik(0) θ_i θ_k`.
///
/// Only edges present in the initial graph are stored, so zero entries of
/// `a(0)` stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDynamicsState {
    current: Interaction,
    endpoints: Vec<(usize, usize)>,
    initial: Vec<f64>,
    targets: Vec<f64>,
    theta: SwitchingAssignment,
    tau_a: f64,
}

impl EdgeDynamicsState {
    /// Edges at rest on the signature of `g0`, with `θ = +1`.
    pub fn new(g0: &SignedGraph, tau_a: f64) -> Result<Self, SwitchingError> {
        Self::from_parts(g0, SwitchingAssignment::identity(g0.n()), None, tau_a)
    }

    /// `a(0)` taken from `g0`, the current weights from `current` (defaults to
    /// the targets of `theta`).
    pub fn from_parts(
        g0: &SignedGraph,
        theta: SwitchingAssignment,
        current: Option<&[f64]>,
        tau_a: f64,
    ) -> Result<Self, SwitchingError> {
        if !(tau_a > 0.0 && tau_a.is_finite()) {
            return Err(SwitchingError::InvalidSchedule(format!("tau_a must be > 0 (got {tau_a})")));
        }
        if theta.len() != g0.n() {
            return Err(GraphError::DimensionMismatch {
                expected: g0.n(),
                actual: theta.len(),
            }
            .into());
        }
        let mut net = Interaction::from_graph(g0);
        let endpoints = net.endpoints();
        let initial = net.weights().to_vec();
        let th = theta.theta();
        let targets: Vec<f64> = endpoints
            .iter()
            .zip(&initial)
            .map(|(&(i, k), a0)| a0 * f64::from(th[i] * th[k]))
            .collect();
        match current {
            Some(w) if w.len() == targets.len() => net.weights_mut().copy_from_slice(w),
            Some(w) => {
                return Err(GraphError::DimensionMismatch {
                    expected: targets.len(),
                    actual: w.len(),
                }
                .into())
            }
            None => net.weights_mut().copy_from_slice(&targets),
        }
        Ok(Self {
            current: net,
            endpoints,
            initial,
            targets,
            theta,
            tau_a,
        })
    }

    pub fn interaction(&self) -> &Interaction {
        &self.current
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        self.current.weights_mut()
    }

    pub fn endpoints(&self) -> &[(usize, usize)] {
        &self.endpoints
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn theta(&self) -> &SwitchingAssignment {
        &self.theta
    }

    pub fn tau_a(&self) -> f64 {
        self.tau_a
    }

    pub fn set_tau_a(&mut self, tau_a: f64) -> Result<(), SwitchingError> {
        if !(tau_a > 0.0 && tau_a.is_finite()) {
            return Err(SwitchingError::InvalidSchedule(format!("tau_a must be > 0 (got {tau_a})")));
        }
        self.tau_a = tau_a;
        Ok(())
    }

    /// Flips `θ_agent`; only targets of incident edges change.
    pub fn toggle(&mut self, agent: usize) -> Result<(), SwitchingError> {
        let n = self.theta.len();
        if agent >= n {
            return Err(SwitchingError::UnknownAgent(agent + 1));
        }
        let mut th = self.theta.theta().to_vec();
        th[agent] = -th[agent];
        self.theta = SwitchingAssignment::from_theta(th)?;
        let th = self.theta.theta();
        for (e, &(i, k)) in self.endpoints.iter().enumerate() {
            if i == agent || k == agent {
                self.targets[e] = self.initial[e] * f64::from(th[i] * th[k]);
            }
        }
        Ok(())
    }

    /// Jumps every weight to its target.
    pub fn snap_to_targets(&mut self) {
        let targets = self.targets.clone();
        self.current.weights_mut().copy_from_slice(&targets);
    }

    /// `ȧ = (target - a) / τ_a` for the weights `a`.
    pub fn derivative(&self, a: &[f64], out: &mut [f64]) {
        let inv = 1.0 / self.tau_a;
        for ((o, t), a) in out.iter_mut().zip(&self.targets).zip(a) {
            *o = (t - a) * inv;
        }
    }

    /// Integer signature the weights converge to: `switch(g0, θ)`.
    pub fn limiting_graph(&self, g0: &SignedGraph) -> Result<SignedGraph, SwitchingError> {
        Ok(g0.switch(&self.theta)?)
    }
}
