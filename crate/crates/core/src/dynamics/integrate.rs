//! Classical fixed-step RK4 with scheduled events.
//!
//! Events fire at the sample nearest their scheduled time, before the step
//! that leaves that sample. A hook may replace the fixed interaction (an
//! instantaneous switch) or hand the edges over to the relaxation law, after
//! which opinions and edge weights are integrated as one state.

use std::io::{self, Write};

use serde::Serialize;

use super::{rhs_into, DynamicsError, Interaction, ModelParams};
use crate::graph::SignedGraph;
use crate::switching::EdgeDynamicsState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub dt: f64,
    pub horizon: f64,
}

impl IntegratorSettings {
    pub const DEFAULT_DT: f64 = 0.01;
    /// Step used whenever edge dynamics are active.
    pub const EDGE_DT: f64 = 0.001;

    pub fn new(dt: f64, horizon: f64) -> Self {
        Self { dt, horizon }
    }

    pub fn steps(&self) -> Result<usize, DynamicsError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(DynamicsError::InvalidParams(format!(
                "need dt > 0 and horizon > 0 (got dt={}, horizon={})",
                self.dt, self.horizon
            )));
        }
        Ok(((self.horizon / self.dt).round() as usize).max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpinionState {
    pub t: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryEvent {
    pub t: f64,
    #[serde(rename = "type")]
    pub kind: String,
    pub detail: String,
}

/// Edge weights recorded from `first_sample` on.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTrace {
    pub endpoints: Vec<(usize, usize)>,
    pub first_sample: usize,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub samples: Vec<OpinionState>,
    pub params: ModelParams,
    /// Graph the run started on.
    pub graph: SignedGraph,
    pub events: Vec<TrajectoryEvent>,
    pub edges: Option<EdgeTrace>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        &self.samples.last().expect("at least the initial sample").x
    }

    /// Sample nearest to `t`.
    pub fn state_at(&self, t: f64) -> &[f64] {
        let idx = ((t / self.dt).round().max(0.0) as usize).min(self.samples.len() - 1);
        &self.samples[idx].x
    }

    /// `t,x_1,...,x_N` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.graph.n();
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=n).map(|i| format!("x_{i}")))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for s in &self.samples {
            write!(out, "{:.16e}", s.t)?;
            for v in &s.x {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// `t,a_i_k,...` for every recorded edge (1-based labels).
    pub fn write_edges_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let Some(trace) = &self.edges else {
            return Ok(());
        };
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain(trace.endpoints.iter().map(|(i, k)| format!("a_{}_{}", i + 1, k + 1)))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (j, row) in trace.values.iter().enumerate() {
            write!(out, "{:.16e}", self.samples[trace.first_sample + j].t)?;
            for v in row {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn events_json(&self) -> String {
        serde_json::to_string_pretty(&self.events).expect("events serialize")
    }
}

/// Coupling in force during a step.
#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    Fixed(Interaction),
    Relaxing(EdgeDynamicsState),
}

impl Network {
    pub fn interaction(&self) -> &Interaction {
        match self {
            Self::Fixed(net) => net,
            Self::Relaxing(state) => state.interaction(),
        }
    }
}

pub trait EventHook {
    /// Time of the next pending event.
    fn next_time(&self) -> Option<f64>;
    /// Applies the next pending event and consumes it.
    fn fire(&mut self, t: f64, x: &[f64], network: &mut Network) -> Result<Vec<TrajectoryEvent>, DynamicsError>;
}

pub struct NoEvents;

impl EventHook for NoEvents {
    fn next_time(&self) -> Option<f64> {
        None
    }

    fn fire(&mut self, _: f64, _: &[f64], _: &mut Network) -> Result<Vec<TrajectoryEvent>, DynamicsError> {
        Ok(Vec::new())
    }
}

/// RK4 workspace. Reusable across steps and across network changes.
#[derive(Debug, Clone)]
pub struct Stepper {
    dt: f64,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
    // edge-state buffers, sized lazily
    ka: [Vec<f64>; 4],
    tmp_a: Vec<f64>,
    scratch: Option<Interaction>,
}

impl Stepper {
    pub fn new(n: usize, dt: f64) -> Self {
        Self {
            dt,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            ka: std::array::from_fn(|_| Vec::new()),
            tmp_a: Vec::new(),
            scratch: None,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One step on a fixed interaction.
    pub fn step(&mut self, x: &mut [f64], net: &Interaction, p: &ModelParams) {
        let h = self.dt;
        let n = x.len();
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        rhs_into(x, net, p, k1);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        rhs_into(tmp, net, p, k2);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        rhs_into(tmp, net, p, k3);
        for i in 0..n {
            tmp[i] = x[i] + h * k3[i];
        }
        rhs_into(tmp, net, p, k4);
        let h6 = h / 6.0;
        for i in 0..n {
            x[i] += h6 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
    }

    /// One step of the joint opinion/edge system.
    pub fn step_relaxing(&mut self, x: &mut [f64], edges: &mut EdgeDynamicsState, p: &ModelParams) {
        let h = self.dt;
        let n = x.len();
        let m = edges.interaction().edge_count();
        if self.tmp_a.len() != m {
            self.ka = std::array::from_fn(|_| vec![0.0; m]);
            self.tmp_a = vec![0.0; m];
        }
        let scratch = self.scratch.get_or_insert_with(|| edges.interaction().clone());
        if scratch.edge_count() != m {
            *scratch = edges.interaction().clone();
        }
        let a = edges.interaction().weights().to_vec();
        let [k1, k2, k3, k4] = &mut self.k;
        let [ka1, ka2, ka3, ka4] = &mut self.ka;
        let (tmp, tmp_a) = (&mut self.tmp, &mut self.tmp_a);

        scratch.weights_mut().copy_from_slice(&a);
        rhs_into(x, scratch, p, k1);
        edges.derivative(&a, ka1);

        let mut stage = |kx: &[f64], ka: &[f64], f: f64, kx_out: &mut [f64], ka_out: &mut [f64]| {
            for i in 0..n {
                tmp[i] = x[i] + f * h * kx[i];
            }
            for e in 0..m {
                tmp_a[e] = a[e] + f * h * ka[e];
            }
            scratch.weights_mut().copy_from_slice(tmp_a);
            rhs_into(tmp, scratch, p, kx_out);
            edges.derivative(tmp_a, ka_out);
        };
        stage(k1, ka1, 0.5, k2, ka2);
        stage(k2, ka2, 0.5, k3, ka3);
        stage(k3, ka3, 1.0, k4, ka4);

        let h6 = h / 6.0;
        for i in 0..n {
            x[i] += h6 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
        let w = edges.weights_mut();
        for e in 0..m {
            w[e] = a[e] + h6 * (ka1[e] + 2.0 * (ka2[e] + ka3[e]) + ka4[e]);
        }
    }
}

pub fn integrate(
    x0: &[f64],
    g: &SignedGraph,
    p: &ModelParams,
    settings: &IntegratorSettings,
) -> Result<Trajectory, DynamicsError> {
    integrate_with(x0, g, p, settings, &mut NoEvents)
}

pub fn integrate_with(
    x0: &[f64],
    g: &SignedGraph,
    p: &ModelParams,
    settings: &IntegratorSettings,
    hook: &mut dyn EventHook,
) -> Result<Trajectory, DynamicsError> {
    let n = g.n();
    if x0.len() != n {
        return Err(DynamicsError::DimensionMismatch {
            expected: n,
            actual: x0.len(),
        });
    }
    p.check_dim(n)?;
    p.validate()?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::NonFiniteState(0.0));
    }
    let steps = settings.steps()?;
    let dt = settings.dt;

    let mut network = Network::Fixed(Interaction::from_graph(g));
    let mut stepper = Stepper::new(n, dt);
    let mut x = x0.to_vec();
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(OpinionState { t: 0.0, x: x.clone() });
    let mut events = Vec::new();
    let mut trace: Option<EdgeTrace> = None;

    for k in 0..steps {
        let t = k as f64 * dt;
        while let Some(te) = hook.next_time() {
            if te >= t + 0.5 * dt {
                break;
            }
            events.extend(hook.fire(t, &x, &mut network)?);
        }
        if let Network::Relaxing(state) = &network {
            let tr = trace.get_or_insert_with(|| EdgeTrace {
                endpoints: state.interaction().endpoints(),
                first_sample: k,
                values: Vec::new(),
            });
            if tr.values.len() + tr.first_sample == k {
                tr.values.push(state.interaction().weights().to_vec());
            }
        }

        match &mut network {
            Network::Fixed(net) => stepper.step(&mut x, net, p),
            Network::Relaxing(state) => stepper.step_relaxing(&mut x, state, p),
        }

        let t_next = (k + 1) as f64 * dt;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFiniteState(t_next));
        }
        samples.push(OpinionState { t: t_next, x: x.clone() });
        if let (Some(tr), Network::Relaxing(state)) = (&mut trace, &network) {
            tr.values.push(state.interaction().weights().to_vec());
        }
    }

    Ok(Trajectory {
        dt,
        samples,
        params: p.clone(),
        graph: g.clone(),
        events,
        edges: trace,
    })
}

/// Whether every sample stays in `Ω_r = { |x_i| < r max_j u_j / d }`.
///
/// Forward invariance only concerns runs that start inside `Ω_r`; a run whose
/// initial state lies outside (for instance any nonzero start with `u = 0`)
/// is reported as satisfying the check.
pub fn boundedness_check(traj: &Trajectory, p: &ModelParams, r: f64) -> bool {
    let radius = p.box_radius(r);
    let inside = |x: &[f64]| x.iter().all(|v| v.abs() < radius);
    if !inside(&traj.samples[0].x) {
        return true;
    }
    traj.samples.iter().all(|s| inside(&s.x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generators::{complete, fixture10};
    use crate::spectral::leading_eigenpair;

    #[test]
    fn pure_decay_without_attention() {
        let g = fixture10();
        let p = ModelParams::homogeneous(10, 1.0, 1.2, 1.3, 0.0);
        let x0: Vec<f64> = (0..10).map(|i| 0.1 * i as f64 - 0.45).collect();
        let traj = integrate(&x0, &g, &p, &IntegratorSettings::new(0.01, 1.0)).unwrap();
        let expected: Vec<f64> = x0.iter().map(|v| v / std::f64::consts::E).collect();
        let err = traj.final_state().iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-6, "{err}");
        assert!(boundedness_check(&traj, &p, 2.0));
    }

    #[test]
    fn sampling_grid() {
        let g = complete(3);
        let p = ModelParams::homogeneous(3, 1.0, 1.2, 1.3, 0.3);
        let traj = integrate(&[0.1, 0.0, -0.1], &g, &p, &IntegratorSettings::new(0.01, 2.0)).unwrap();
        assert_eq!(traj.samples.len(), 201);
        for (k, s) in traj.samples.iter().enumerate() {
            assert_eq!(s.t, k as f64 * 0.01);
        }
        assert!(traj.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn subcritical_run_converges_to_origin() {
        let g = complete(10);
        let p0 = ModelParams::homogeneous(10, 1.0, 1.2, 1.3, 0.0);
        let s = leading_eigenpair(&g).unwrap();
        let u_star = p0.thresholds(&s).unwrap().u_star;
        let p = p0.with_u(0.8 * u_star);
        let x0: Vec<f64> = (0..10).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.02).collect();
        let traj = integrate(&x0, &g, &p, &IntegratorSettings::new(0.01, 100.0)).unwrap();
        assert!(traj.final_state().iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn supercritical_positive_start_reaches_positive_equilibrium() {
        let g = complete(10);
        let p0 = ModelParams::homogeneous(10, 1.0, 1.2, 1.3, 0.0);
        let s = leading_eigenpair(&g).unwrap();
        let p = p0.with_u(1.5 * p0.thresholds(&s).unwrap().u_star);
        let x0: Vec<f64> = (0..10).map(|i| 0.01 + 0.001 * i as f64).collect();
        let traj = integrate(&x0, &g, &p, &IntegratorSettings::new(0.01, 100.0)).unwrap();
        let end = traj.final_state();
        assert!(end.iter().all(|&v| v > 1e-3));
        let mut f = vec![0.0; 10];
        rhs_into(end, &Interaction::from_graph(&g), &p, &mut f);
        assert!(super::super::sup_norm(&f) < 1e-8);
    }

    #[test]
    fn start_near_box_edge_stays_inside() {
        let g = fixture10();
        let p = ModelParams::homogeneous(10, 1.0, 1.2, 1.3, 0.294);
        let edge = 0.99 * p.box_radius(2.0);
        let x0: Vec<f64> = (0..10).map(|i| if i % 3 == 0 { -edge } else { edge }).collect();
        let traj = integrate(&x0, &g, &p, &IntegratorSettings::new(0.01, 30.0)).unwrap();
        assert!(boundedness_check(&traj, &p, 2.0));
    }

    #[test]
    fn odd_symmetry_of_the_flow_is_exact() {
        let g = fixture10();
        let p = ModelParams::homogeneous(10, 1.0, 1.2, 1.3, 0.3);
        let x0: Vec<f64> = (0..10).map(|i| ((i * 7 % 10) as f64 - 4.5) * 0.03).collect();
        let neg: Vec<f64> = x0.iter().map(|v| -v).collect();
        let settings = IntegratorSettings::new(0.01, 20.0);
        let a = integrate(&x0, &g, &p, &settings).unwrap();
        let b = integrate(&neg, &g, &p, &settings).unwrap();
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            assert!(sa.x.iter().zip(&sb.x).all(|(u, v)| *u == -*v));
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let g = fixture10();
        let p = ModelParams::homogeneous(10, 1.0, 1.2, 1.3, 0.3);
        let x0: Vec<f64> = (0..10).map(|i| ((i * 3 % 10) as f64 - 4.0) * 0.05).collect();
        let horizon = 5.0;
        let run = |dt: f64| integrate(&x0, &g, &p, &IntegratorSettings::new(dt, horizon)).unwrap().final_state().to_vec();
        let dt = 0.1;
        let reference = run(dt / 8.0);
        let err = |x: &[f64]| x.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let coarse = err(&run(dt));
        let fine = err(&run(dt / 2.0));
        let ratio = coarse / fine;
        assert!((8.0..=32.0).contains(&ratio), "error ratio {ratio}");
    }

    #[test]
    fn rejects_bad_settings() {
        let g = complete(2);
        let p = ModelParams::homogeneous(2, 1.0, 1.2, 1.3, 0.3);
        assert!(integrate(&[0.0, 0.0], &g, &p, &IntegratorSettings::new(0.0, 1.0)).is_err());
        assert!(integrate(&[0.0, 0.0], &g, &p, &IntegratorSettings::new(0.1, -1.0)).is_err());
        assert!(matches!(
            integrate(&[f64::NAN, 0.0], &g, &p, &IntegratorSettings::new(0.1, 1.0)),
            Err(DynamicsError::NonFiniteState(_))
        ));
    }

    #[test]
    fn csv_layout() {
        let g = complete(2);
        let p = ModelParams::homogeneous(2, 1.0, 1.2, 1.3, 0.3);
        let traj = integrate(&[0.1, -0.2], &g, &p, &IntegratorSettings::new(0.5, 1.0)).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x_1,x_2");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0.0000000000000000e0,1.0000000000000001e-1,-2.0000000000000001e-1");
        let parsed: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(parsed, traj.samples[1].x[0]);
    }
}
