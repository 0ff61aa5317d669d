//! The perturbed 4-D isotropic oscillator `H = H2 + ε H6` and its reference flow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, Output};

/// Canonical coordinates `(q, Q)`; `p[i]` is the momentum conjugate to `q[i]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct CartesianState {
    pub q: [f64; 4],
    pub p: [f64; 4],
}

impl CartesianState {
    pub fn new(q: [f64; 4], p: [f64; 4]) -> Self {
        CartesianState { q, p }
    }

    pub fn from_array(x: &[f64]) -> Self {
        let mut s = CartesianState::default();
        s.q.copy_from_slice(&x[..4]);
        s.p.copy_from_slice(&x[4..8]);
        s
    }

    pub fn to_array(&self) -> [f64; 8] {
        let mut x = [0.0; 8];
        x[..4].copy_from_slice(&self.q);
        x[4..].copy_from_slice(&self.p);
        x
    }

    /// `Σ q_i²`.
    pub fn rho(&self) -> f64 {
        self.q.iter().map(|v| v * v).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.p.iter()).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub epsilon: f64,
    pub beta: f64,
    /// Regularization constant `h/4` for the energy level `h`.
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(omega: f64, epsilon: f64, beta: f64, gamma: f64) -> Self {
        ModelParams { omega, epsilon, beta, gamma }
    }

    pub fn alpha(&self) -> f64 {
        self.beta * self.beta - 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega must be > 0, got {}", self.omega)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidParameter("beta must be finite".into()));
        }
        Ok(())
    }

    /// Checks needed before using the Delaunay chart.
    pub fn validate_for_charts(&self) -> Result<()> {
        self.validate()?;
        if self.omega != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "chart and normal-form operations assume omega = 1, got {}",
                self.omega
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be > 0, got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Values of `H2`, `Ξ` and `L1` fixing a reduced space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralValues {
    pub n: f64,
    pub xi: f64,
    pub l: f64,
}

impl IntegralValues {
    pub fn new(n: f64, xi: f64, l: f64) -> Self {
        IntegralValues { n, xi, l }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n > 0.0) || self.xi.abs() > self.n || self.l.abs() > self.n {
            return Err(Error::InvalidParameter(format!(
                "need n > 0, |xi| <= n, |l| <= n; got n={}, xi={}, l={}",
                self.n, self.xi, self.l
            )));
        }
        Ok(())
    }
}

pub fn h2(s: &CartesianState, omega: f64) -> f64 {
    let kin: f64 = s.p.iter().map(|v| v * v).sum();
    0.5 * kin + 0.5 * omega * omega * s.rho()
}

/// Sextic perturbation `ρ (β² (a − b)² + 4ab)`, `a = q1² + q2²`, `b = q3² + q4²`.
pub fn h6(q: &[f64; 4], beta: f64) -> f64 {
    let a = q[0] * q[0] + q[1] * q[1];
    let b = q[2] * q[2] + q[3] * q[3];
    let d = a - b;
    (a + b) * (beta * beta * d * d + 4.0 * a * b)
}

pub fn h6_gradient(q: &[f64; 4], beta: f64) -> [f64; 4] {
    let a = q[0] * q[0] + q[1] * q[1];
    let b = q[2] * q[2] + q[3] * q[3];
    let rho = a + b;
    let b2 = beta * beta;
    let f = b2 * (a - b) * (a - b) + 4.0 * a * b;
    let fa = 2.0 * b2 * (a - b) + 4.0 * b;
    let fb = -2.0 * b2 * (a - b) + 4.0 * a;
    let ga = 2.0 * (f + rho * fa);
    let gb = 2.0 * (f + rho * fb);
    [ga * q[0], ga * q[1], gb * q[2], gb * q[3]]
}

pub fn hamiltonian(s: &CartesianState, p: &ModelParams) -> f64 {
    h2(s, p.omega) + p.epsilon * h6(&s.q, p.beta)
}

/// `(Ξ, L1)`.
pub fn first_integrals(s: &CartesianState) -> (f64, f64) {
    let (q, m) = (&s.q, &s.p);
    let pi11 = q[0] * m[1] - m[0] * q[1];
    let pi16 = q[2] * m[3] - m[2] * q[3];
    (pi16 + pi11, pi16 - pi11)
}

/// `(∂H/∂Q, −∂H/∂q)`.
pub fn vector_field(s: &CartesianState, p: &ModelParams) -> CartesianState {
    let g6 = h6_gradient(&s.q, p.beta);
    let w2 = p.omega * p.omega;
    let mut out = CartesianState::default();
    for i in 0..4 {
        out.q[i] = s.p[i];
        out.p[i] = -(w2 * s.q[i] + p.epsilon * g6[i]);
    }
    out
}

/// Field of the regularized Hamiltonian `(H − h)/(4ρ)` on its zero level, i.e.
/// the physical field divided by `4ρ`.
pub fn regularized_vector_field(s: &CartesianState, p: &ModelParams) -> CartesianState {
    let mut v = vector_field(s, p);
    let k = 0.25 / s.rho();
    for i in 0..4 {
        v.q[i] *= k;
        v.p[i] *= k;
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub state: CartesianState,
    pub h: f64,
    pub xi: f64,
    pub l1: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    fn drift(&self, f: impl Fn(&TrajectoryPoint) -> f64) -> f64 {
        let Some(first) = self.points.first() else {
            return 0.0;
        };
        let v0 = f(first);
        self.points.iter().map(|p| (f(p) - v0).abs()).fold(0.0, f64::max)
    }

    /// `max |H(t) − H(0)| / |H(0)|`.
    pub fn max_rel_energy_drift(&self) -> f64 {
        let h0 = self.points.first().map(|p| p.h.abs()).unwrap_or(1.0);
        self.drift(|p| p.h) / if h0 > 0.0 { h0 } else { 1.0 }
    }

    pub fn max_xi_drift(&self) -> f64 {
        self.drift(|p| p.xi)
    }

    pub fn max_l1_drift(&self) -> f64 {
        self.drift(|p| p.l1)
    }

    pub fn last(&self) -> Option<&TrajectoryPoint> {
        self.points.last()
    }
}

fn record(t: f64, y: &[f64], p: &ModelParams) -> TrajectoryPoint {
    let state = CartesianState::from_array(y);
    let (xi, l1) = first_integrals(&state);
    TrajectoryPoint { t, state, h: hamiltonian(&state, p), xi, l1 }
}

fn run(
    state0: &CartesianState,
    p: &ModelParams,
    t_end: f64,
    tol: f64,
    output: Output<'_>,
    regularized: bool,
) -> Result<Trajectory> {
    p.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be > 0, got {tol}")));
    }
    if !state0.is_finite() {
        return Err(Error::InvalidParameter("initial state is not finite".into()));
    }
    let mut traj = Trajectory::default();
    let opts = ode::Options::with_tol(tol);
    ode::dopri5(
        |_, y, dy| {
            let st = CartesianState::from_array(y);
            let v = if regularized { regularized_vector_field(&st, p) } else { vector_field(&st, p) };
            dy[..4].copy_from_slice(&v.q);
            dy[4..].copy_from_slice(&v.p);
        },
        0.0,
        &state0.to_array(),
        t_end,
        output,
        &opts,
        |t, y| traj.points.push(record(t, y, p)),
    )?;
    Ok(traj)
}

/// Adaptive integration recording every accepted step.
pub fn integrate(state0: &CartesianState, p: &ModelParams, t_end: f64, tol: f64) -> Result<Trajectory> {
    run(state0, p, t_end, tol, Output::EveryStep, false)
}

/// Adaptive integration recording only at `times` (increasing, starting at or after 0).
pub fn integrate_at(state0: &CartesianState, p: &ModelParams, times: &[f64], tol: f64) -> Result<Trajectory> {
    let t_end = times.last().copied().unwrap_or(0.0);
    run(state0, p, t_end, tol, Output::At(times), false)
}

/// Like [`integrate_at`] for the regularized field, so `t` is the fictitious
/// time in which the Kepler mean anomaly advances uniformly.
pub fn integrate_regularized_at(
    state0: &CartesianState,
    p: &ModelParams,
    times: &[f64],
    tol: f64,
) -> Result<Trajectory> {
    if !(state0.rho() > 0.0) {
        return Err(Error::InvalidParameter("regularized flow needs rho > 0".into()));
    }
    let t_end = times.last().copied().unwrap_or(0.0);
    run(state0, p, t_end, tol, Output::At(times), true)
}
