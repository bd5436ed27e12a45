//! Leading eigenpair, second eigenvalue and the bifurcation thresholds
//! `u* = d / (α + γ λ*)` and `u₂ = d / (α + γ Re λ₂)`.

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::eigen::{dense_eigenvalues, EigenError};
use crate::graph::{BalanceCertificate, SignedGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("graph is not strongly connected")]
    NotStronglyConnected,
    #[error("no real, simple, strictly dominant eigenvalue")]
    NoRealDominantEigenvalue,
    #[error("power iteration did not settle within {0} iterations")]
    PowerIterationStalled(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("α + γλ* = {0} is not positive")]
    DegenerateDirection(f64),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITERS: usize = 100_000;
pub const SIMPLICITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSummary {
    pub lambda_star: f64,
    /// Unit Euclidean norm.
    pub v_star: Vec<f64>,
    /// Scaled so that `<w*, v*> = 1`.
    pub w_star: Vec<f64>,
    /// `w*` rescaled to unit norm, for projection tests.
    pub w_unit: Vec<f64>,
    /// `-inf` when there is no second eigenvalue (n = 1).
    #[serde(serialize_with = "finite_or_null")]
    pub lambda2_re: f64,
    pub simple: bool,
}

impl SpectralSummary {
    /// `<w*, (v*)^3>`, elementwise cube.
    pub fn cubic_coefficient(&self) -> f64 {
        self.w_star.iter().zip(&self.v_star).map(|(w, v)| w * v * v * v).sum()
    }

    pub fn project_unit(&self, x: &[f64]) -> f64 {
        self.w_unit.iter().zip(x).map(|(w, x)| w * x).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationThresholds {
    pub u_star: f64,
    /// `+inf` when `Re λ₂ <= -α/γ`; serialized as `null`.
    #[serde(serialize_with = "finite_or_null")]
    pub u_two: f64,
    pub cubic_ok: bool,
    pub pitchfork_valid: bool,
}

impl BifurcationThresholds {
    /// `u* < u` and `u < u₂` whenever `u₂` is finite.
    pub fn in_bistable_window(&self, u: f64) -> bool {
        u > self.u_star && u < self.u_two
    }
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

/// Leading eigenpair of the signed adjacency matrix.
///
/// Balanced graphs are handled on their all-positive representative, where
/// Perron-Frobenius guarantees a positive dominant eigenvector; eigenvectors
/// are mapped back through `Θ`. Unbalanced graphs go through the dense solver
/// and inverse iteration.
pub fn leading_eigenpair(g: &SignedGraph) -> Result<SpectralSummary, SpectralError> {
    if !g.is_strongly_connected() {
        return Err(SpectralError::NotStronglyConnected);
    }
    let a = g.adjacency_matrix();
    let eigenvalues = dense_eigenvalues(&a)?;

    let (lambda_star, v, w) = match g.balance_certificate() {
        BalanceCertificate::Balanced(theta) => {
            let positive = g.switch(&theta).expect("certificate matches graph").adjacency_matrix();
            let (lambda, v_pos) = perron_vector(&positive)?;
            let (_, w_pos) = perron_vector(&positive.transpose())?;
            (lambda, theta.apply(&v_pos), theta.apply(&w_pos))
        }
        BalanceCertificate::Unbalanced(_) => {
            let top = eigenvalues[0];
            let scale = top.norm().max(1.0);
            if top.im.abs() > 1e-10 * scale {
                return Err(SpectralError::NoRealDominantEigenvalue);
            }
            if let Some(next) = eigenvalues.get(1) {
                if top.re - next.re <= SIMPLICITY_TOL * scale {
                    return Err(SpectralError::NoRealDominantEigenvalue);
                }
            }
            let v = null_vector(&a, top.re)?;
            let w = null_vector(&a.transpose(), top.re)?;
            (top.re, orient(v), w)
        }
    };

    // second eigenvalue: drop the dense eigenvalue closest to λ*
    let closest = eigenvalues
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            let da = (a.re - lambda_star).hypot(a.im);
            let db = (b.re - lambda_star).hypot(b.im);
            da.total_cmp(&db)
        })
        .map(|(i, _)| i)
        .expect("n >= 1");
    let lambda2_re = eigenvalues
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != closest)
        .map(|(_, z)| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let simple = lambda_star - lambda2_re > SIMPLICITY_TOL * lambda_star.abs().max(1.0);

    let v_norm = norm(&v);
    let v_star: Vec<f64> = v.iter().map(|x| x / v_norm).collect();
    let dot: f64 = w.iter().zip(&v_star).map(|(a, b)| a * b).sum();
    if dot.abs() < 1e-14 {
        return Err(SpectralError::NoRealDominantEigenvalue);
    }
    let w_star: Vec<f64> = w.iter().map(|x| x / dot).collect();
    let w_norm = norm(&w_star);
    let w_unit = w_star.iter().map(|x| x / w_norm).collect();

    Ok(SpectralSummary {
        lambda_star,
        v_star,
        w_star,
        w_unit,
        lambda2_re,
        simple,
    })
}

/// Thresholds for homogeneous attention. Only `d`, `α`, `γ` are read.
pub fn thresholds(
    spec: &SpectralSummary,
    d: f64,
    alpha: f64,
    gamma: f64,
) -> Result<BifurcationThresholds, SpectralError> {
    if !(d > 0.0) || !(gamma > 0.0) || !(alpha >= 0.0) || !d.is_finite() || !gamma.is_finite() || !alpha.is_finite() {
        return Err(SpectralError::InvalidParams(format!(
            "need d > 0, gamma > 0, alpha >= 0 (got d={d}, alpha={alpha}, gamma={gamma})"
        )));
    }
    let gain = alpha + gamma * spec.lambda_star;
    if !(gain > 0.0) {
        return Err(SpectralError::DegenerateDirection(gain));
    }
    let u_star = d / gain;
    let u_two = if spec.lambda2_re > -alpha / gamma {
        d / (alpha + gamma * spec.lambda2_re)
    } else {
        f64::INFINITY
    };
    let cubic_ok = spec.cubic_coefficient() > 0.0;
    Ok(BifurcationThresholds {
        u_star,
        u_two,
        cubic_ok,
        pitchfork_valid: spec.simple && cubic_ok,
    })
}

/// Perron root and positive eigenvector of a nonnegative irreducible matrix.
///
/// Iterates on `m + I`, which is primitive, so the Perron root is strictly
/// dominant in modulus even for periodic graphs such as a directed cycle.
fn perron_vector(m: &DMatrix<f64>) -> Result<(f64, Vec<f64>), SpectralError> {
    let n = m.nrows();
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut rho_prev = f64::NAN;
    for _ in 0..POWER_MAX_ITERS {
        let y = m * &x + &x;
        let rho = x.dot(&y);
        let y_norm = y.norm();
        let next = y / y_norm;
        let residual = (m * &next - &next * (rho - 1.0)).amax();
        let settled = (rho - rho_prev).abs() <= POWER_TOL * rho.abs().max(1.0);
        x = next;
        if settled && residual <= 1e-11 * rho.abs().max(1.0) {
            let lambda = x.dot(&(m * &x));
            return Ok((lambda, x.iter().map(|v| v.abs()).collect()));
        }
        rho_prev = rho;
    }
    Err(SpectralError::PowerIterationStalled(POWER_MAX_ITERS))
}

/// Inverse iteration for the eigenvector of a known real eigenvalue.
fn null_vector(m: &DMatrix<f64>, lambda: f64) -> Result<Vec<f64>, SpectralError> {
    let n = m.nrows();
    let perturb = 1e-10 * lambda.abs().max(1.0);
    let shifted = m - DMatrix::identity(n, n) * (lambda + perturb);
    let lu = shifted.lu();
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.1 * i as f64);
    x /= x.norm();
    for _ in 0..50 {
        let Some(y) = lu.solve(&x) else {
            return Err(SpectralError::NoRealDominantEigenvalue);
        };
        let next = &y / y.norm();
        let change = (&next - &x).amax().min((&next + &x).amax());
        x = next;
        if change < 1e-14 {
            break;
        }
    }
    Ok(x.iter().copied().collect())
}

/// Sign convention without a positive representative: positive entry sum,
/// falling back to a positive largest-magnitude entry.
fn orient(v: Vec<f64>) -> Vec<f64> {
    let sum: f64 = v.iter().sum();
    let flip = if sum.abs() > 1e-12 {
        sum < 0.0
    } else {
        v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m }) < 0.0
    };
    if flip {
        v.into_iter().map(|x| -x).collect()
    } else {
        v
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
