//! Monte-Carlo estimate of the bound `|<w*, x>| < ε ‖x‖²` on the basin
//! boundary between the two stable equilibria.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::{BistableSystem, SwitchingError};
use crate::dynamics::{rhs_into, sup_norm, Interaction, Stepper};
use crate::rng::substream;

pub const SAFETY_FACTOR: f64 = 1.25;

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSettings {
    pub n_directions: usize,
    pub seed: u64,
    pub safety_factor: f64,
    /// Box parameter of `Ω_r`; rays stop at half its radius.
    pub r: f64,
    pub bisect_tol: f64,
    /// Half-width of the bisection bracket along `w*`, relative to the
    /// offset `s` in the hyperplane.
    pub bracket: f64,
    pub dt: f64,
    pub settle_tol: f64,
    pub settle_steps: usize,
    pub max_time: f64,
}

impl Default for EpsilonSettings {
    fn default() -> Self {
        Self {
            n_directions: 200,
            seed: 0,
            safety_factor: SAFETY_FACTOR,
            r: 2.0,
            bisect_tol: 1e-6,
            bracket: 1.0,
            dt: 0.01,
            settle_tol: 1e-6,
            settle_steps: 100,
            max_time: 2000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonEstimate {
    pub eps_hat: f64,
    /// Boundary points found.
    pub samples: usize,
    pub directions: usize,
    pub max_boundary_ratio: f64,
    pub min_equilibrium_ratio: f64,
    pub s_max: f64,
}

impl EpsilonEstimate {
    pub fn valid(&self) -> bool {
        self.eps_hat < self.min_equilibrium_ratio
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Basin {
    Plus,
    Minus,
    /// Settled at the saddle: the start lies on the boundary.
    Origin,
}

struct Classifier<'a> {
    system: &'a BistableSystem,
    net: Interaction,
    settings: &'a EpsilonSettings,
}

impl Classifier<'_> {
    fn classify(&self, mut x: Vec<f64>) -> Basin {
        let p = &self.system.params;
        let mut stepper = Stepper::new(x.len(), self.settings.dt);
        let mut f = vec![0.0; x.len()];
        let steps = (self.settings.max_time / self.settings.dt).ceil() as usize;
        let mut calm = 0;
        for _ in 0..steps {
            stepper.step(&mut x, &self.net, p);
            rhs_into(&x, &self.net, p, &mut f);
            if sup_norm(&f) < self.settings.settle_tol {
                calm += 1;
                if calm >= self.settings.settle_steps {
                    break;
                }
            } else {
                calm = 0;
            }
        }
        let dist = |y: &[f64]| x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let d_plus = dist(&self.system.pair.x1);
        let d_minus = dist(&self.system.pair.x2);
        let d_origin = x.iter().map(|v| v * v).sum::<f64>();
        if d_origin < d_plus && d_origin < d_minus {
            Basin::Origin
        } else if d_plus <= d_minus {
            Basin::Plus
        } else {
            Basin::Minus
        }
    }

    /// Boundary point on the segment `base + β w`, `β ∈ [lo, hi]`, if the
    /// endpoints fall in different basins.
    fn bisect(&self, base: &[f64], w: &[f64], mut lo: f64, mut hi: f64) -> Option<Vec<f64>> {
        let at = |b: f64| base.iter().zip(w).map(|(x, d)| x + b * d).collect::<Vec<f64>>();
        let c_lo = self.classify(at(lo));
        let c_hi = self.classify(at(hi));
        if c_lo == c_hi || c_lo == Basin::Origin || c_hi == Basin::Origin {
            return None;
        }
        while hi - lo > self.settings.bisect_tol {
            let mid = 0.5 * (lo + hi);
            match self.classify(at(mid)) {
                Basin::Origin => return Some(at(mid)),
                c if c == c_lo => lo = mid,
                _ => hi = mid,
            }
        }
        Some(at(0.5 * (lo + hi)))
    }

    /// Boundary crossing on the ray `s dir`, `s ∈ [s_lo, s_max]`.
    #[cfg(test)]
    fn on_ray(&self, dir: &[f64], s_lo: f64, s_max: f64) -> Option<Vec<f64>> {
        self.bisect(&vec![0.0; dir.len()], dir, s_lo, s_max)
    }
}

/// Samples the basin boundary and returns `safety_factor` times the largest
/// ratio `|<w*, x>| / ‖x‖²` found there.
///
/// The boundary is tangent to the hyperplane `<w*, x> = 0` at the origin, so a
/// ray from the origin rarely crosses it inside `Ω_r`. Each sample instead
/// fixes a random offset `s q` in the hyperplane and bisects the line
/// `s q + β w*` for the crossing. Sample `j` is drawn from its own substream of
/// `seed`, so a run with more directions refines a run with fewer.
pub fn estimate_epsilon(system: &BistableSystem, settings: &EpsilonSettings) -> Result<EpsilonEstimate, SwitchingError> {
    let n = system.graph.n();
    let s_max = 0.5 * system.params.box_radius(settings.r);
    let w = &system.spectrum.w_unit;
    let classifier = Classifier {
        system,
        net: Interaction::from_graph(&system.graph),
        settings,
    };

    let ratios: Vec<f64> = (0..settings.n_directions)
        .into_par_iter()
        .filter_map(|j| {
            let mut rng = substream(settings.seed, j as u64);
            let mut q: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let along: f64 = q.iter().zip(w).map(|(a, b)| a * b).sum();
            q.iter_mut().zip(w).for_each(|(a, b)| *a -= along * b);
            let q_norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            if q_norm == 0.0 {
                return None;
            }
            // keep the whole segment inside half the box radius
            let reach = s_max / (1.0 + settings.bracket * settings.bracket).sqrt();
            let s = reach * rng.random_range(0.05..=1.0);
            let base: Vec<f64> = q.iter().map(|v| s * v / q_norm).collect();
            let half = settings.bracket * s;
            let x = classifier.bisect(&base, w, -half, half)?;
            let norm2: f64 = x.iter().map(|v| v * v).sum();
            let proj: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
            Some(proj.abs() / norm2)
        })
        .collect();

    if ratios.is_empty() {
        return Err(SwitchingError::BisectionFailed);
    }
    let max_boundary_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let eps_hat = settings.safety_factor * max_boundary_ratio;
    let min_equilibrium_ratio = system.min_equilibrium_ratio();
    if min_equilibrium_ratio <= eps_hat {
        return Err(SwitchingError::AssumptionViolated {
            eps_hat,
            min_ratio: min_equilibrium_ratio,
        });
    }
    Ok(EpsilonEstimate {
        eps_hat,
        samples: ratios.len(),
        directions: settings.n_directions,
        max_boundary_ratio,
        min_equilibrium_ratio,
        s_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ModelParams;
    use crate::graph::generators::fixture10;

    fn system() -> BistableSystem {
        BistableSystem::analyze(&fixture10(), &ModelParams::homogeneous(10, 1.0, 1.2, 1.3, 0.294)).unwrap()
    }

    #[test]
    fn perron_direction_has_no_crossing() {
        let sys = system();
        let settings = EpsilonSettings::default();
        let c = Classifier {
            system: &sys,
            net: Interaction::from_graph(&sys.graph),
            settings: &settings,
        };
        let s_max = 0.5 * sys.params.box_radius(2.0);
        assert!(c.on_ray(&sys.spectrum.v_star, 1e-3 * s_max, s_max).is_none());
    }

    #[test]
    fn estimate_is_valid() {
        let sys = system();
        let settings = EpsilonSettings {
            n_directions: 8,
            seed: 3,
            ..Default::default()
        };
        let est = estimate_epsilon(&sys, &settings).unwrap();
        assert!(est.valid() && est.samples > 0, "{est:?}");
        assert!(est.eps_hat > 0.0 && est.eps_hat < 1.0);
    }
}
