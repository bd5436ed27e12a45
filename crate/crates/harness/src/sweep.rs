//! Attention sweeps through the pitchfork.

use opinion_core::dynamics::{find_equilibria, jacobian, EquilibriumSettings, ModelParams};
use opinion_core::eigen::dense_eigenvalues;
use opinion_core::graph::SignedGraph;
use opinion_core::spectral::{leading_eigenpair, SpectralSummary};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::HarnessError;
use crate::svg::{scatter, Series};

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub u: Vec<f64>,
    /// Rightmost real part of the origin Jacobian.
    pub origin_rightmost: Vec<f64>,
    pub origin_stable: Vec<bool>,
    /// `‖x1*(u)‖₂`, zero where only the origin exists.
    pub branch_norm: Vec<f64>,
    /// `<ŵ, x1*>` and `<ŵ, x2*>`, `ŵ` the unit left eigenvector.
    pub projection_x1: Vec<f64>,
    pub projection_x2: Vec<f64>,
    /// Linear interpolation of the rightmost eigenvalue across its sign
    /// change on the grid.
    pub u_hat: Option<f64>,
    pub u_star: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub u_two: f64,
    pub grid_step: f64,
}

fn finite_or_null<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

fn origin_rightmost(g: &SignedGraph, p: &ModelParams) -> Result<f64, HarnessError> {
    let j = jacobian(&vec![0.0; g.n()], g, p)?;
    Ok(dense_eigenvalues(&j)?[0].re)
}

struct Point {
    rightmost: f64,
    norm: f64,
    p1: f64,
    p2: f64,
}

fn evaluate(g: &SignedGraph, p: &ModelParams, spec: &SpectralSummary, eq: &EquilibriumSettings) -> Result<Point, HarnessError> {
    let rightmost = origin_rightmost(g, p)?;
    let found = find_equilibria(g, p, spec, eq)?;
    Ok(match found.pair {
        Some(pair) => Point {
            rightmost,
            norm: pair.x1.iter().map(|v| v * v).sum::<f64>().sqrt(),
            p1: spec.project_unit(&pair.x1),
            p2: spec.project_unit(&pair.x2),
        },
        None => Point {
            rightmost,
            norm: 0.0,
            p1: 0.0,
            p2: 0.0,
        },
    })
}

/// `steps + 1` evenly spaced values of `u` in `[u_min, u_max]`, evaluated in
/// parallel.
pub fn sweep(g: &SignedGraph, p: &ModelParams, u_min: f64, u_max: f64, steps: usize) -> Result<SweepResult, HarnessError> {
    if !(u_min >= 0.0 && u_max > u_min) || steps == 0 {
        return Err(HarnessError::Config(format!(
            "sweep range [{u_min}, {u_max}] with {steps} steps is empty"
        )));
    }
    let spec = leading_eigenpair(g)?;
    let th = p.thresholds(&spec)?;
    if !(u_min < th.u_star && th.u_star < u_max) {
        return Err(HarnessError::Config(format!(
            "sweep range [{u_min}, {u_max}] does not straddle u* = {}",
            th.u_star
        )));
    }
    let h = (u_max - u_min) / steps as f64;
    let grid: Vec<f64> = (0..=steps).map(|k| u_min + h * k as f64).collect();
    let eq = EquilibriumSettings::default();
    let points: Vec<Point> = grid
        .par_iter()
        .map(|&u| evaluate(g, &p.with_u(u), &spec, &eq))
        .collect::<Result<_, _>>()?;
    let rightmost: Vec<f64> = points.iter().map(|q| q.rightmost).collect();
    let u_hat = rightmost.windows(2).zip(grid.windows(2)).find_map(|(r, u)| {
        (r[0] < 0.0 && r[1] >= 0.0).then(|| u[0] + (u[1] - u[0]) * (-r[0]) / (r[1] - r[0]))
    });
    Ok(SweepResult {
        origin_stable: rightmost.iter().map(|&r| r < 0.0).collect(),
        origin_rightmost: rightmost,
        branch_norm: points.iter().map(|q| q.norm).collect(),
        projection_x1: points.iter().map(|q| q.p1).collect(),
        projection_x2: points.iter().map(|q| q.p2).collect(),
        u: grid,
        u_hat,
        u_star: th.u_star,
        u_two: th.u_two,
        grid_step: h,
    })
}

/// Pitchfork diagram: `u` against the projections of both branches.
pub fn pitchfork_svg(result: &SweepResult, title: &str) -> String {
    let origin: Vec<(f64, f64)> = result.u.iter().map(|&u| (u, 0.0)).collect();
    let pick = |proj: &[f64]| -> Vec<(f64, f64)> {
        result
            .u
            .iter()
            .zip(proj)
            .zip(&result.branch_norm)
            .filter(|(_, &n)| n > 0.0)
            .map(|((&u, &y), _)| (u, y))
            .collect()
    };
    scatter(
        &[
            Series {
                label: "origin",
                points: origin,
            },
            Series {
                label: "x1*",
                points: pick(&result.projection_x1),
            },
            Series {
                label: "x2*",
                points: pick(&result.projection_x2),
            },
        ],
        title,
        "u",
        "<w, x>",
    )
}

/// Bisects the sign change of the origin's rightmost eigenvalue on
/// `[lo, hi]`.
pub fn origin_crossing(g: &SignedGraph, p: &ModelParams, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64, HarnessError> {
    let (r_lo, r_hi) = (origin_rightmost(g, &p.with_u(lo))?, origin_rightmost(g, &p.with_u(hi))?);
    if !(r_lo < 0.0 && r_hi >= 0.0) {
        return Err(HarnessError::Numerical(format!(
            "no sign change on [{lo}, {hi}] ({r_lo}, {r_hi})"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if origin_rightmost(g, &p.with_u(mid))? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchFit {
    pub exponent: f64,
    pub u: Vec<f64>,
    pub norms: Vec<f64>,
}

/// Least-squares slope of `log ‖x1*‖` against `log (u − u*)` at
/// `u = u*(1 + 10^k)`, `k` evenly spaced in `[k_lo, k_hi]`.
pub fn fit_branch_exponent(g: &SignedGraph, p: &ModelParams, k_lo: f64, k_hi: f64, points: usize) -> Result<BranchFit, HarnessError> {
    if points < 2 || !(k_hi > k_lo) {
        return Err(HarnessError::Config("branch fit needs at least two exponents".into()));
    }
    let spec = leading_eigenpair(g)?;
    let u_star = p.thresholds(&spec)?.u_star;
    let eq = EquilibriumSettings::default();
    let ks: Vec<f64> = (0..points).map(|j| k_lo + (k_hi - k_lo) * j as f64 / (points - 1) as f64).collect();
    let us: Vec<f64> = ks.iter().map(|k| u_star * (1.0 + 10f64.powf(*k))).collect();
    let norms: Vec<f64> = us
        .par_iter()
        .map(|&u| evaluate(g, &p.with_u(u), &spec, &eq).map(|q| q.norm))
        .collect::<Result<_, _>>()?;
    if norms.iter().any(|&n| n <= 0.0) {
        return Err(HarnessError::Numerical("branch missing above u*".into()));
    }
    let xs: Vec<f64> = us.iter().map(|u| (u - u_star).ln()).collect();
    let ys: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(BranchFit {
        exponent: sxy / sxx,
        u: us,
        norms,
    })
}
