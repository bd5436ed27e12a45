use nalgebra::DVector;

use super::integrate::Stepper;
use super::{jacobian_unchecked, rhs_into, sup_norm, DynamicsError, Interaction, ModelParams};
use crate::graph::SignedGraph;
use crate::spectral::SpectralSummary;

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSettings {
    pub seed_scale: f64,
    pub dt: f64,
    pub max_time: f64,
    pub settle_tol: f64,
    pub settle_steps: usize,
    pub newton_tol: f64,
    pub newton_accept: f64,
    pub newton_max_iters: usize,
}

impl Default for EquilibriumSettings {
    fn default() -> Self {
        Self {
            seed_scale: 0.1,
            dt: 0.01,
            max_time: 500.0,
            settle_tol: 1e-6,
            settle_steps: 100,
            newton_tol: 1e-12,
            newton_accept: 1e-10,
            newton_max_iters: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumPair {
    /// Oriented so that `<w*, x1> > 0`.
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    /// `‖rhs(x1)‖∞`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibria {
    pub u: f64,
    pub u_star: f64,
    /// `None` when `u <= u*`.
    pub pair: Option<EquilibriumPair>,
}

impl Equilibria {
    pub fn origin_only(&self) -> bool {
        self.pair.is_none()
    }
}

/// Nonzero equilibria born at the pitchfork, or none below it.
pub fn find_equilibria(
    g: &SignedGraph,
    p: &ModelParams,
    spec: &SpectralSummary,
    settings: &EquilibriumSettings,
) -> Result<Equilibria, DynamicsError> {
    let n = g.n();
    p.check_dim(n)?;
    p.validate()?;
    let u = p.require_uniform_u()?;
    let th = p.thresholds(spec)?;
    if !th.pitchfork_valid {
        return Err(DynamicsError::PreconditionViolated(
            "pitchfork conditions fail (leading eigenvalue not simple or cubic coefficient not positive)".into(),
        ));
    }
    if u <= th.u_star {
        return Ok(Equilibria {
            u,
            u_star: th.u_star,
            pair: None,
        });
    }

    let net = Interaction::from_graph(g);
    let seed: Vec<f64> = spec.v_star.iter().map(|v| settings.seed_scale * v).collect();
    let settled = settle(seed, &net, p, settings)?;

    let lambda_tilde = p.alpha + p.gamma * spec.lambda_star;
    let amplitude = (3.0 * (u * lambda_tilde - p.d) / (u * lambda_tilde.powi(3) * spec.cubic_coefficient())).sqrt();
    let fallback: Vec<f64> = spec.v_star.iter().map(|v| amplitude * v).collect();

    let scale = p.box_radius(1.0);
    let mut last_err = DynamicsError::NoConvergence("no candidate".into());
    for start in [settled, fallback] {
        match newton_on(start, &net, p, settings) {
            Ok((x, residual)) if sup_norm(&x) > 1e-9 * scale.max(1e-300) => {
                let mut x1 = x;
                if spec.project_unit(&x1) < 0.0 {
                    x1.iter_mut().for_each(|v| *v = -*v);
                }
                let x2 = x1.iter().map(|v| -v).collect();
                return Ok(Equilibria {
                    u,
                    u_star: th.u_star,
                    pair: Some(EquilibriumPair { x1, x2, residual }),
                });
            }
            Ok(_) => last_err = DynamicsError::NoConvergence("refinement collapsed onto the origin".into()),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// Integrates until `‖rhs‖∞ < settle_tol` holds for `settle_steps`
/// consecutive steps or `max_time` elapses.
fn settle(
    mut x: Vec<f64>,
    net: &Interaction,
    p: &ModelParams,
    settings: &EquilibriumSettings,
) -> Result<Vec<f64>, DynamicsError> {
    let mut stepper = Stepper::new(x.len(), settings.dt);
    let mut f = vec![0.0; x.len()];
    let mut calm = 0;
    let steps = (settings.max_time / settings.dt).ceil() as usize;
    for k in 0..steps {
        stepper.step(&mut x, net, p);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFiniteState((k + 1) as f64 * settings.dt));
        }
        rhs_into(&x, net, p, &mut f);
        if sup_norm(&f) < settings.settle_tol {
            calm += 1;
            if calm >= settings.settle_steps {
                break;
            }
        } else {
            calm = 0;
        }
    }
    Ok(x)
}

/// Damped Newton iteration on `rhs(x) = 0`. Returns the refined point and its
/// residual.
pub fn newton_refine(
    x0: &[f64],
    g: &SignedGraph,
    p: &ModelParams,
    settings: &EquilibriumSettings,
) -> Result<(Vec<f64>, f64), DynamicsError> {
    p.check_dim(g.n())?;
    if x0.len() != g.n() {
        return Err(DynamicsError::DimensionMismatch {
            expected: g.n(),
            actual: x0.len(),
        });
    }
    newton_on(x0.to_vec(), &Interaction::from_graph(g), p, settings)
}

fn newton_on(
    mut x: Vec<f64>,
    net: &Interaction,
    p: &ModelParams,
    settings: &EquilibriumSettings,
) -> Result<(Vec<f64>, f64), DynamicsError> {
    let n = x.len();
    let mut f = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut f_trial = vec![0.0; n];
    rhs_into(&x, net, p, &mut f);
    let mut res = sup_norm(&f);
    for _ in 0..settings.newton_max_iters {
        if res <= settings.newton_tol {
            break;
        }
        let j = jacobian_unchecked(&x, net, p);
        let rhs = DVector::from_iterator(n, f.iter().map(|v| -v));
        let delta = j.lu().solve(&rhs).ok_or(DynamicsError::NewtonSingular)?;
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NewtonSingular);
        }
        let mut step = 1.0;
        loop {
            for i in 0..n {
                trial[i] = x[i] + step * delta[i];
            }
            rhs_into(&trial, net, p, &mut f_trial);
            let r = sup_norm(&f_trial);
            if r <= res || step < 1e-10 {
                break;
            }
            step *= 0.5;
        }
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut f, &mut f_trial);
        res = sup_norm(&f);
    }
    if res <= settings.newton_accept {
        Ok((x, res))
    } else {
        Err(DynamicsError::NoConvergence(format!("Newton residual {res:.3e}")))
    }
}
