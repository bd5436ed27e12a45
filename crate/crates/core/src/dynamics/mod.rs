//! Opinion dynamics `ẋ = -d x + U S(α x + γ A x)`.
//!
//! The network term is evaluated on a sparse [`Interaction`], which carries
//! integer signs for a fixed graph and real weights while edges relax during
//! smooth switching.

mod equilibria;
mod integrate;
mod lyapunov;
mod saturation;

pub use equilibria::{find_equilibria, newton_refine, Equilibria, EquilibriumPair, EquilibriumSettings};
pub use integrate::{
    boundedness_check, integrate, integrate_with, EdgeTrace, EventHook, IntegratorSettings, Network, NoEvents,
    OpinionState, Stepper, Trajectory, TrajectoryEvent,
};
pub use lyapunov::{lyapunov_check, lyapunov_value, LyapunovReport, SIMPSON_PANELS};
pub use saturation::{Saturation, TabulatedSaturation};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::graph::SignedGraph;
use crate::spectral::{BifurcationThresholds, SpectralError, SpectralSummary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid saturation function: {0}")]
    InvalidSaturation(String),
    #[error("analysis requires homogeneous attention u")]
    HeterogeneousU,
    #[error("state became non-finite at t = {0}")]
    NonFiniteState(f64),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("equilibrium search did not converge: {0}")]
    NoConvergence(String),
    #[error("singular Jacobian during Newton refinement")]
    NewtonSingular,
    #[error("event hook failed: {0}")]
    Event(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub d: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Per-agent attention.
    pub u: Vec<f64>,
    pub saturation: Saturation,
}

impl ModelParams {
    /// Homogeneous attention with `S = tanh`.
    pub fn homogeneous(n: usize, d: f64, alpha: f64, gamma: f64, u: f64) -> Self {
        Self {
            d,
            alpha,
            gamma,
            u: vec![u; n],
            saturation: Saturation::Tanh,
        }
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let finite = self.d.is_finite() && self.alpha.is_finite() && self.gamma.is_finite();
        if !finite || self.d <= 0.0 || self.gamma <= 0.0 || self.alpha < 0.0 {
            return Err(DynamicsError::InvalidParams(format!(
                "need d > 0, gamma > 0, alpha >= 0 (got d={}, alpha={}, gamma={})",
                self.d, self.alpha, self.gamma
            )));
        }
        if let Some(bad) = self.u.iter().find(|u| !(u.is_finite() && **u >= 0.0)) {
            return Err(DynamicsError::InvalidParams(format!("attention must be finite and >= 0, got {bad}")));
        }
        Ok(())
    }

    pub fn check_dim(&self, n: usize) -> Result<(), DynamicsError> {
        if self.u.len() != n {
            return Err(DynamicsError::DimensionMismatch {
                expected: n,
                actual: self.u.len(),
            });
        }
        Ok(())
    }

    /// Common attention value when all agents share it.
    pub fn uniform_u(&self) -> Option<f64> {
        let first = *self.u.first()?;
        self.u.iter().all(|&u| u == first).then_some(first)
    }

    pub fn require_uniform_u(&self) -> Result<f64, DynamicsError> {
        self.uniform_u().ok_or(DynamicsError::HeterogeneousU)
    }

    pub fn with_u(&self, u: f64) -> Self {
        Self {
            u: vec![u; self.u.len()],
            ..self.clone()
        }
    }

    pub fn max_u(&self) -> f64 {
        self.u.iter().copied().fold(0.0, f64::max)
    }

    /// Half-width `r max_j u_j / d` of the forward-invariant box.
    pub fn box_radius(&self, r: f64) -> f64 {
        r * self.max_u() / self.d
    }

    pub fn thresholds(&self, spec: &SpectralSummary) -> Result<BifurcationThresholds, SpectralError> {
        crate::spectral::thresholds(spec, self.d, self.alpha, self.gamma)
    }
}

/// Compressed-row weighted adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    n: usize,
    row_start: Vec<usize>,
    col: Vec<usize>,
    weight: Vec<f64>,
}

impl Interaction {
    pub fn from_graph(g: &SignedGraph) -> Self {
        let n = g.n();
        let mut row_start = vec![0; n + 1];
        let mut col = Vec::with_capacity(g.edges().len());
        let mut weight = Vec::with_capacity(g.edges().len());
        for e in g.edges() {
            row_start[e.from + 1] += 1;
            col.push(e.to);
            weight.push(e.sign as f64);
        }
        for i in 0..n {
            row_start[i + 1] += row_start[i];
        }
        Self {
            n,
            row_start,
            col,
            weight,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.col.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weight
    }

    /// `(from, to)` for every edge, in storage order.
    pub fn endpoints(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| (self.row_start[i]..self.row_start[i + 1]).map(move |e| (i, e)))
            .map(|(i, e)| (i, self.col[e]))
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for e in self.row_start[i]..self.row_start[i + 1] {
                m[(i, self.col[e])] = self.weight[e];
            }
        }
        m
    }

    /// `y = α x + γ A x`.
    pub fn network_input(&self, x: &[f64], alpha: f64, gamma: f64, y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for e in self.row_start[i]..self.row_start[i + 1] {
                acc += self.weight[e] * x[self.col[e]];
            }
            y[i] = alpha * x[i] + gamma * acc;
        }
    }
}

/// Right-hand side into a caller-provided buffer. Dimensions are assumed
/// checked.
pub(crate) fn rhs_into(x: &[f64], net: &Interaction, p: &ModelParams, out: &mut [f64]) {
    net.network_input(x, p.alpha, p.gamma, out);
    for i in 0..x.len() {
        out[i] = -p.d * x[i] + p.u[i] * p.saturation.value(out[i]);
    }
}

pub fn rhs(x: &[f64], g: &SignedGraph, p: &ModelParams) -> Result<Vec<f64>, DynamicsError> {
    check_state(x, g.n())?;
    p.check_dim(g.n())?;
    let mut out = vec![0.0; x.len()];
    rhs_into(x, &Interaction::from_graph(g), p, &mut out);
    Ok(out)
}

fn check_state(x: &[f64], n: usize) -> Result<(), DynamicsError> {
    if x.len() != n {
        return Err(DynamicsError::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    Ok(())
}

/// `J(x) = -d I + u diag(S'(Ã x)) Ã` with `Ã = α I + γ A`.
pub fn jacobian(x: &[f64], g: &SignedGraph, p: &ModelParams) -> Result<DMatrix<f64>, DynamicsError> {
    check_state(x, g.n())?;
    p.check_dim(g.n())?;
    p.require_uniform_u()?;
    Ok(jacobian_unchecked(x, &Interaction::from_graph(g), p))
}

pub(crate) fn jacobian_unchecked(x: &[f64], net: &Interaction, p: &ModelParams) -> DMatrix<f64> {
    let n = x.len();
    let mut y = vec![0.0; n];
    net.network_input(x, p.alpha, p.gamma, &mut y);
    let mut tilde = net.to_dense() * p.gamma;
    for i in 0..n {
        tilde[(i, i)] += p.alpha;
    }
    let mut j = DMatrix::zeros(n, n);
    for i in 0..n {
        let gain = p.u[i] * p.saturation.slope(y[i]);
        for k in 0..n {
            j[(i, k)] = gain * tilde[(i, k)];
        }
        j[(i, i)] -= p.d;
    }
    j
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sign_pattern(x: &[f64]) -> Vec<i8> {
    x.iter()
        .map(|&v| {
            if v > 0.0 {
                1
            } else if v < 0.0 {
                -1
            } else {
                0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::dense_eigenvalues;
    use crate::graph::generators::{complete, fixture10, random_signed};
    use crate::spectral::leading_eigenpair;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn origin_is_equilibrium() {
        let g = fixture10();
        let p = ModelParams::homogeneous(10, 1.0, 1.2, 1.3, 0.3);
        assert!(rhs(&[0.0; 10], &g, &p).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_agent() {
        // -0.5 + tanh(0.6), reference from a 30-digit evaluation
        let g = SignedGraph::new(1, []).unwrap();
        let p = ModelParams::homogeneous(1, 1.0, 1.2, 1.3, 1.0);
        let f = rhs(&[0.5], &g, &p).unwrap()[0];
        assert!((f - 0.037_049_566_998_035_286).abs() < 1e-15, "{f}");
    }

    #[test]
    fn odd_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let g = random_signed(8, 0.3, &mut rng);
            let p = ModelParams::homogeneous(8, 1.0, 1.2, 1.3, rng.random_range(0.0..1.0));
            let x: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let a = rhs(&x, &g, &p).unwrap();
            let b = rhs(&neg, &g, &p).unwrap();
            assert!(a.iter().zip(&b).all(|(a, b)| *a == -*b));
        }
    }

    #[test]
    fn dimension_checks() {
        let g = fixture10();
        let p = ModelParams::homogeneous(10, 1.0, 1.2, 1.3, 0.3);
        assert!(matches!(rhs(&[0.0; 3], &g, &p), Err(DynamicsError::DimensionMismatch { .. })));
        let short = ModelParams::homogeneous(4, 1.0, 1.2, 1.3, 0.3);
        assert!(matches!(rhs(&[0.0; 10], &g, &short), Err(DynamicsError::DimensionMismatch { .. })));
    }

    #[test]
    fn jacobian_at_origin() {
        let g = complete(10);
        let u = 0.05;
        let p = ModelParams::homogeneous(10, 1.0, 1.2, 1.3, u);
        let j = jacobian(&[0.0; 10], &g, &p).unwrap();
        let expected = (DMatrix::identity(10, 10) * 1.2 + g.adjacency_matrix() * 1.3) * u - DMatrix::identity(10, 10);
        assert!((&j - expected).amax() < 1e-15);
        let s = leading_eigenpair(&g).unwrap();
        let top = dense_eigenvalues(&j).unwrap()[0];
        assert!((top.re - (-1.0 + u * (1.2 + 1.3 * s.lambda_star))).abs() < 1e-10);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        for _ in 0..10 {
            let g = random_signed(7, 0.4, &mut rng);
            let p = ModelParams::homogeneous(7, 1.0, 1.2, 1.3, 0.4);
            let x: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
            let j = jacobian(&x, &g, &p).unwrap();
            for k in 0..7 {
                let mut plus = x.clone();
                let mut minus = x.clone();
                plus[k] += h;
                minus[k] -= h;
                let fp = rhs(&plus, &g, &p).unwrap();
                let fm = rhs(&minus, &g, &p).unwrap();
                for i in 0..7 {
                    let fd = (fp[i] - fm[i]) / (2.0 * h);
                    assert!((j[(i, k)] - fd).abs() <= 1e-5, "J[{i},{k}] = {} vs {fd}", j[(i, k)]);
                }
            }
        }
    }

    #[test]
    fn jacobian_rejects_heterogeneous_attention() {
        let g = complete(3);
        let mut p = ModelParams::homogeneous(3, 1.0, 1.2, 1.3, 0.3);
        p.u[1] = 0.4;
        assert_eq!(jacobian(&[0.0; 3], &g, &p), Err(DynamicsError::HeterogeneousU));
        assert!(rhs(&[0.1, 0.2, 0.3], &g, &p).is_ok());
    }

    #[test]
    fn param_validation() {
        let good = ModelParams::homogeneous(3, 1.0, 0.0, 1.3, 0.0);
        assert!(good.validate().is_ok());
        for bad in [
            ModelParams { d: 0.0, ..good.clone() },
            ModelParams { gamma: 0.0, ..good.clone() },
            ModelParams { alpha: -0.1, ..good.clone() },
            good.with_u(-1.0),
            good.with_u(f64::NAN),
        ] {
            assert!(matches!(bad.validate(), Err(DynamicsError::InvalidParams(_))));
        }
    }
}
