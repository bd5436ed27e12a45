use super::{DynamicsError, Interaction, ModelParams, Saturation, Trajectory};
use crate::graph::SignedGraph;
use crate::spectral::leading_eigenpair;

pub const SIMPSON_PANELS: usize = 64;
/// Allowed increase of `V` between consecutive samples.
pub const QUADRATURE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovReport {
    pub values: Vec<f64>,
    /// Largest `V(t_{k+1}) - V(t_k)`, clamped at zero.
    pub max_increase: f64,
    pub non_increasing: bool,
}

fn primitive(s: &Saturation, y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let m = SIMPSON_PANELS;
    let h = y / m as f64;
    let mut acc = s.value(0.0) + s.value(y);
    for j in 1..m {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * s.value(j as f64 * h);
    }
    acc * h / 3.0
}

/// `V(x) = Σ_i ∫_0^{(Ã x)_i} S(η) dη` with `Ã = α I + γ A`.
pub fn lyapunov_value(x: &[f64], g: &SignedGraph, p: &ModelParams) -> Result<f64, DynamicsError> {
    if x.len() != g.n() {
        return Err(DynamicsError::DimensionMismatch {
            expected: g.n(),
            actual: x.len(),
        });
    }
    let net = Interaction::from_graph(g);
    Ok(value_on(x, &net, p, &mut vec![0.0; x.len()]))
}

fn value_on(x: &[f64], net: &Interaction, p: &ModelParams, y: &mut [f64]) -> f64 {
    net.network_input(x, p.alpha, p.gamma, y);
    y.iter().map(|&f| primitive(&p.saturation, f)).sum()
}

/// Evaluates `V` along a subcritical trajectory.
pub fn lyapunov_check(traj: &Trajectory, g: &SignedGraph, p: &ModelParams) -> Result<LyapunovReport, DynamicsError> {
    p.check_dim(g.n())?;
    p.validate()?;
    let u = p.require_uniform_u()?;
    let spec = leading_eigenpair(g)?;
    let th = p.thresholds(&spec)?;
    if u >= th.u_star {
        return Err(DynamicsError::PreconditionViolated(format!(
            "u = {u} is not below u* = {}",
            th.u_star
        )));
    }
    let net = Interaction::from_graph(g);
    let mut y = vec![0.0; g.n()];
    let values: Vec<f64> = traj.samples.iter().map(|s| value_on(&s.x, &net, p, &mut y)).collect();
    let max_increase = values.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(LyapunovReport {
        non_increasing: max_increase <= QUADRATURE_TOL,
        values,
        max_increase,
    })
}
