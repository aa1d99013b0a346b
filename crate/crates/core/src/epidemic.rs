//! Networked SIS/SIR dynamics: next-generation-matrix construction,
//! fixed-step integration to the disease-free equilibrium, and the
//! level-of-penetration check against the reproduction number.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::matrix::Matrix;

pub const DEFAULT_STEP: f64 = 0.01;
pub const DEFAULT_T_MAX: f64 = 2000.0;
/// Infection level below which a state counts as a disease-free equilibrium.
pub const DFE_THRESHOLD: f64 = 1e-8;
/// Slack on the penetration inequality, absorbing truncation and
/// finite-horizon effects.
pub const PENETRATION_TOLERANCE: f64 = 1e-3;

const CLAMP_TOLERANCE: f64 = 1e-12;
const ESCAPE_TOLERANCE: f64 = 1e-6;
const CONSERVATION_TOLERANCE: f64 = 1e-9;
const MAX_TOTAL_STEPS: f64 = 1e7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpidemicKind {
    Sis,
    Sir,
}

impl std::str::FromStr for EpidemicKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sis" => Ok(EpidemicKind::Sis),
            "sir" => Ok(EpidemicKind::Sir),
            other => Err(Error::argument(format!("unknown model {other:?} (expected sis or sir)"))),
        }
    }
}

impl std::fmt::Display for EpidemicKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EpidemicKind::Sis => f.write_str("sis"),
            EpidemicKind::Sir => f.write_str("sir"),
        }
    }
}

/// Transmission rates `b`, per-node recovery rates `gamma`, and the model
/// kind. Rates are in inverse time units.
#[derive(Clone, Debug)]
pub struct EpidemicSystem {
    b: Matrix,
    gamma: Vec<f64>,
    kind: EpidemicKind,
}

impl EpidemicSystem {
    pub fn new(b: Matrix, gamma: Vec<f64>, kind: EpidemicKind) -> Result<Self> {
        if !b.is_square() {
            return Err(Error::argument(format!(
                "transmission matrix must be square, got {}x{}",
                b.rows(),
                b.cols()
            )));
        }
        if !b.is_finite() || b.as_slice().iter().any(|&v| v < 0.0) {
            return Err(Error::argument("transmission rates must be finite and nonnegative"));
        }
        if gamma.len() != b.n() {
            return Err(Error::argument(format!(
                "expected {} recovery rates, got {}",
                b.n(),
                gamma.len()
            )));
        }
        if gamma.iter().any(|&g| !(g.is_finite() && g > 0.0)) {
            return Err(Error::argument("recovery rates must be finite and positive"));
        }
        Ok(EpidemicSystem { b, gamma, kind })
    }

    /// System whose transmission matrix is the graph's weight matrix.
    pub fn from_graph(graph: &WeightedGraph, gamma: Vec<f64>, kind: EpidemicKind) -> Result<Self> {
        EpidemicSystem::new(graph.weights().clone(), gamma, kind)
    }

    pub fn n(&self) -> usize {
        self.b.n()
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn kind(&self) -> EpidemicKind {
        self.kind
    }

    /// Next-generation matrix: row i of the transmission matrix divided by
    /// the node's recovery rate. Its spectral radius is the reproduction
    /// number of the system.
    pub fn next_generation(&self) -> Matrix {
        let n = self.n();
        let mut w = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                w.set(i, j, self.b.get(i, j) / self.gamma[i]);
            }
        }
        w
    }
}

/// Population fractions per node at time `t`. SIS dynamics keep `r` at zero.
#[derive(Clone, Debug, Serialize)]
pub struct EpidemicState {
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub t: f64,
}

/// Outcome of one integration run.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub state: EpidemicState,
    /// Whether the run ended at a detected disease-free equilibrium rather
    /// than at the time horizon.
    pub dfe_reached: bool,
    pub steps: usize,
    /// Sampled states when a stride was requested, always including the
    /// initial and final state; empty otherwise.
    pub trajectory: Vec<EpidemicState>,
}

/// Default initial condition: one percent infected everywhere.
pub fn default_initial(n: usize) -> (Vec<f64>, Vec<f64>) {
    (vec![0.99; n], vec![0.01; n])
}

fn rhs(system: &EpidemicSystem, y: &[f64], dy: &mut [f64]) {
    let n = system.n();
    let s = &y[..n];
    let x = &y[n..2 * n];
    let bx = system.b.matvec(x);
    match system.kind {
        EpidemicKind::Sis => {
            for i in 0..n {
                let dx = s[i] * bx[i] - system.gamma[i] * x[i];
                dy[i] = -dx;
                dy[n + i] = dx;
                dy[2 * n + i] = 0.0;
            }
        }
        EpidemicKind::Sir => {
            for i in 0..n {
                let flow = s[i] * bx[i];
                let recovery = system.gamma[i] * x[i];
                dy[i] = -flow;
                dy[n + i] = flow - recovery;
                dy[2 * n + i] = recovery;
            }
        }
    }
}

fn snapshot(y: &[f64], n: usize, t: f64) -> EpidemicState {
    EpidemicState {
        s: y[..n].to_vec(),
        x: y[n..2 * n].to_vec(),
        r: y[2 * n..].to_vec(),
        t,
    }
}

fn max_infection(y: &[f64], n: usize) -> f64 {
    y[n..2 * n].iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
}

fn clamp_and_check(y: &mut [f64], t: f64) -> Result<()> {
    for v in y.iter_mut() {
        if *v < -ESCAPE_TOLERANCE || *v > 1.0 + ESCAPE_TOLERANCE {
            return Err(Error::Instability(format!(
                "state component {v} left [0, 1] at t={t}; reduce the step size"
            )));
        }
        if *v < 0.0 && *v >= -CLAMP_TOLERANCE {
            *v = 0.0;
        } else if *v > 1.0 && *v <= 1.0 + CLAMP_TOLERANCE {
            *v = 1.0;
        }
    }
    Ok(())
}

fn check_conservation(y: &[f64], n: usize, t: f64) -> Result<()> {
    for i in 0..n {
        let total = y[i] + y[n + i] + y[2 * n + i];
        if (total - 1.0).abs() > CONSERVATION_TOLERANCE {
            return Err(Error::Instability(format!(
                "per-node conservation drifted to {total} at t={t}; reduce the step size"
            )));
        }
    }
    Ok(())
}

/// Integrates the system with fixed-step fourth-order Runge-Kutta from
/// `(s0, x0)` until the time horizon or a disease-free equilibrium. SIR runs
/// put the initial remainder `1 − s0 − x0` into `r`; SIS runs require
/// `s0 + x0 = 1` per node. `sample_stride` records every stride-th step into
/// the returned trajectory.
pub fn simulate(
    system: &EpidemicSystem,
    s0: &[f64],
    x0: &[f64],
    step: f64,
    t_max: f64,
    sample_stride: Option<usize>,
) -> Result<Simulation> {
    let n = system.n();
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::argument(format!("step must be positive, got {step}")));
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::argument(format!("time horizon must be positive, got {t_max}")));
    }
    if t_max / step > MAX_TOTAL_STEPS {
        return Err(Error::argument(format!(
            "horizon {t_max} at step {step} needs more than {MAX_TOTAL_STEPS:e} steps"
        )));
    }
    if s0.len() != n || x0.len() != n {
        return Err(Error::argument(format!(
            "initial vectors must have length {n}, got {} and {}",
            s0.len(),
            x0.len()
        )));
    }
    if sample_stride == Some(0) {
        return Err(Error::argument("sampling stride must be positive"));
    }
    for i in 0..n {
        let in_unit = |v: f64| (-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&v);
        if !in_unit(s0[i]) || !in_unit(x0[i]) {
            return Err(Error::argument(format!(
                "initial fractions at node {i} lie outside [0, 1]: s={}, x={}",
                s0[i], x0[i]
            )));
        }
        let total = s0[i] + x0[i];
        if total > 1.0 + CONSERVATION_TOLERANCE {
            return Err(Error::argument(format!(
                "initial fractions at node {i} sum to {total} > 1"
            )));
        }
        if system.kind == EpidemicKind::Sis && (total - 1.0).abs() > CONSERVATION_TOLERANCE {
            return Err(Error::argument(format!(
                "SIS needs s0 + x0 = 1 per node, got {total} at node {i}"
            )));
        }
    }

    let mut y = vec![0.0f64; 3 * n];
    for i in 0..n {
        y[i] = s0[i].clamp(0.0, 1.0);
        y[n + i] = x0[i].clamp(0.0, 1.0);
        y[2 * n + i] = match system.kind {
            EpidemicKind::Sis => 0.0,
            EpidemicKind::Sir => (1.0 - y[i] - y[n + i]).max(0.0),
        };
    }

    let total_steps = (t_max / step).ceil() as usize;
    let mut trajectory = Vec::new();
    if sample_stride.is_some() {
        trajectory.push(snapshot(&y, n, 0.0));
    }
    if max_infection(&y, n) < DFE_THRESHOLD {
        return Ok(Simulation {
            state: snapshot(&y, n, 0.0),
            dfe_reached: true,
            steps: 0,
            trajectory,
        });
    }

    let mut k1 = vec![0.0f64; 3 * n];
    let mut k2 = vec![0.0f64; 3 * n];
    let mut k3 = vec![0.0f64; 3 * n];
    let mut k4 = vec![0.0f64; 3 * n];
    let mut stage = vec![0.0f64; 3 * n];
    let mut dfe_reached = false;
    let mut steps = 0usize;
    let mut t = 0.0f64;

    for idx in 1..=total_steps {
        rhs(system, &y, &mut k1);
        for i in 0..3 * n {
            stage[i] = y[i] + 0.5 * step * k1[i];
        }
        rhs(system, &stage, &mut k2);
        for i in 0..3 * n {
            stage[i] = y[i] + 0.5 * step * k2[i];
        }
        rhs(system, &stage, &mut k3);
        for i in 0..3 * n {
            stage[i] = y[i] + step * k3[i];
        }
        rhs(system, &stage, &mut k4);
        for i in 0..3 * n {
            y[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t = idx as f64 * step;
        steps = idx;
        clamp_and_check(&mut y, t)?;
        check_conservation(&y, n, t)?;
        if let Some(stride) = sample_stride {
            if idx % stride == 0 {
                trajectory.push(snapshot(&y, n, t));
            }
        }
        if max_infection(&y, n) < DFE_THRESHOLD {
            dfe_reached = true;
            break;
        }
    }

    let state = snapshot(&y, n, t);
    if let Some(stride) = sample_stride {
        if steps % stride != 0 {
            trajectory.push(state.clone());
        }
    }
    Ok(Simulation { state, dfe_reached, steps, trajectory })
}

/// Result of comparing the equilibrium susceptibility profile against the
/// reciprocal reproduction number.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PenetrationCheck {
    pub min_s: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks `minᵢ s*ᵢ ≤ 1/R0` (within `PENETRATION_TOLERANCE`) at a detected
/// disease-free equilibrium.
pub fn check_penetration(state: &EpidemicState, r0: f64) -> Result<PenetrationCheck> {
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(Error::argument(format!("reproduction number must be positive, got {r0}")));
    }
    let peak = state.x.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    if peak >= DFE_THRESHOLD {
        return Err(Error::argument(format!(
            "state at t={} is not a disease-free equilibrium (max infection {peak:e})",
            state.t
        )));
    }
    let min_s = state.s.iter().fold(f64::INFINITY, |acc, &v| acc.min(v));
    let bound = 1.0 / r0;
    Ok(PenetrationCheck { min_s, bound, holds: min_s <= bound + PENETRATION_TOLERANCE })
}
