//! Projective Euler, projective Andoyer and 4-D Delaunay charts, with the
//! Kepler solver and the `K ↔ G` connection.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, CartesianState, IntegralValues};

/// Inputs closer than this to a singular set are rejected.
pub const GUARD: f64 = 1e-8;

/// `Ξ = XI_PER_U1 · U1`, measured through the Euler chart.
pub const XI_PER_U1: f64 = -2.0;
/// `L1 = L1_PER_U3 · U3`.
pub const L1_PER_U3: f64 = -2.0;

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerPoint {
    pub rho: f64,
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
    pub P: f64,
    pub Phi: f64,
    pub Theta: f64,
    pub Psi: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AndoyerPoint {
    pub rho: f64,
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub P: f64,
    pub U1: f64,
    pub U2: f64,
    pub U3: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelaunayPoint {
    pub ell: f64,
    pub g: f64,
    pub u1: f64,
    pub u3: f64,
    pub L: f64,
    pub G: f64,
    pub U1: f64,
    pub U3: f64,
}

/// A point tagged with the chart it lives in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "chart", rename_all = "lowercase")]
pub enum ChartPoint {
    Cartesian(CartesianState),
    Euler(EulerPoint),
    Andoyer(AndoyerPoint),
    Delaunay(DelaunayPoint),
}

impl ChartPoint {
    /// Map to Cartesian coordinates; `gamma` is only used by the Delaunay chart.
    pub fn to_cartesian(&self, gamma: f64) -> Result<CartesianState> {
        match self {
            ChartPoint::Cartesian(s) => Ok(*s),
            ChartPoint::Euler(p) => euler_to_cartesian(p),
            ChartPoint::Andoyer(p) => euler_to_cartesian(&andoyer_to_euler(p)?),
            ChartPoint::Delaunay(p) => delaunay_to_cartesian(p, gamma),
        }
    }
}

/// Wrap into `(−π, π]`.
pub fn wrap_pi(x: f64) -> f64 {
    let y = x - TAU * ((x + PI) / TAU).floor();
    if y <= -PI {
        y + TAU
    } else {
        y
    }
}

/// Representative of `(φ, ψ)` modulo the lattice spanned by `(2π, 2π)` and
/// `(2π, −2π)`: `ψ ∈ (−π, π]`, `φ ∈ [0, 4π)`.
pub fn normalize_euler_angles(phi: f64, psi: f64) -> (f64, f64) {
    // α1 = (φ − ψ)/2 and α2 = (φ + ψ)/2 are the honest 2π-periodic angles
    let a1 = 0.5 * (phi - psi);
    let a2 = 0.5 * (phi + psi);
    let mut a1 = a1.rem_euclid(TAU);
    let a2 = a2.rem_euclid(TAU);
    let mut psi = a2 - a1;
    if psi > PI {
        a1 += TAU;
        psi -= TAU;
    } else if psi <= -PI {
        a1 -= TAU;
        psi += TAU;
    }
    let phi = (a1 + a2).rem_euclid(2.0 * TAU);
    (phi, psi)
}

pub fn euler_to_cartesian(ep: &EulerPoint) -> Result<CartesianState> {
    if !(ep.rho > GUARD) {
        return Err(Error::ChartSingularity(format!("rho = {} is not positive", ep.rho)));
    }
    if !(ep.theta > GUARD && ep.theta < PI - GUARD) {
        return Err(Error::ChartSingularity(format!("theta = {} is not interior", ep.theta)));
    }
    let sr = ep.rho.sqrt();
    let (s, c) = (0.5 * ep.theta).sin_cos();
    let (sa1, ca1) = (0.5 * (ep.phi - ep.psi)).sin_cos();
    let (sa2, ca2) = (0.5 * (ep.phi + ep.psi)).sin_cos();
    let (r1, r2) = (sr * s, sr * c);
    let q = [r1 * ca1, r1 * sa1, r2 * sa2, r2 * ca2];
    let pr1 = 2.0 * sr * ep.P * s + 2.0 * ep.Theta / sr * c;
    let pr2 = 2.0 * sr * ep.P * c - 2.0 * ep.Theta / sr * s;
    let pa1 = ep.Phi - ep.Psi;
    let pa2 = ep.Phi + ep.Psi;
    let p = [
        pr1 * ca1 - pa1 / r1 * sa1,
        pr1 * sa1 + pa1 / r1 * ca1,
        pr2 * sa2 + pa2 / r2 * ca2,
        pr2 * ca2 - pa2 / r2 * sa2,
    ];
    Ok(CartesianState::new(q, p))
}

pub fn cartesian_to_euler(st: &CartesianState) -> Result<EulerPoint> {
    let [q1, q2, q3, q4] = st.q;
    let [p1, p2, p3, p4] = st.p;
    let a = q1 * q1 + q2 * q2;
    let b = q3 * q3 + q4 * q4;
    let rho = a + b;
    if !(a > GUARD * GUARD * rho && b > GUARD * GUARD * rho && rho > GUARD) {
        return Err(Error::ChartSingularity("(q1²+q2²)(q3²+q4²) vanishes".to_string()));
    }
    let (r1, r2) = (a.sqrt(), b.sqrt());
    let sr = rho.sqrt();
    let (s, c) = (r1 / sr, r2 / sr);
    let theta = 2.0 * r1.atan2(r2);
    let (phi, psi) = normalize_euler_angles(q2.atan2(q1) + q3.atan2(q4), q3.atan2(q4) - q2.atan2(q1));
    let pr1 = (q1 * p1 + q2 * p2) / r1;
    let pr2 = (q3 * p3 + q4 * p4) / r2;
    let pa1 = q1 * p2 - q2 * p1;
    let pa2 = q4 * p3 - q3 * p4;
    Ok(EulerPoint {
        rho,
        phi,
        theta,
        psi,
        P: (q1 * p1 + q2 * p2 + q3 * p3 + q4 * p4) / (2.0 * rho),
        Phi: 0.5 * (pa1 + pa2),
        Theta: 0.5 * sr * (pr1 * c - pr2 * s),
        Psi: 0.5 * (pa2 - pa1),
    })
}

/// `H2` written in Euler variables (`ω` general).
pub fn h2_euler(ep: &EulerPoint, omega: f64) -> f64 {
    let st = ep.theta.sin();
    let ang = ep.Psi * ep.Psi + ep.Phi * ep.Phi - 2.0 * ep.Phi * ep.Psi * ep.theta.cos();
    0.5 * omega * omega * ep.rho + 2.0 * ep.rho * ep.P * ep.P + 2.0 / ep.rho * (ep.Theta * ep.Theta + ang / (st * st))
}

/// `c1 = U1/U2`, `c2 = U3/U2` and the matching sines.
fn andoyer_cosines(u1m: f64, u2m: f64, u3m: f64) -> Result<(f64, f64, f64, f64)> {
    if !(u2m > GUARD) || !(u2m - u1m.abs() > GUARD * u2m) || !(u2m - u3m.abs() > GUARD * u2m) {
        return Err(Error::ChartSingularity(format!("need |U1|, |U3| < U2 (U1 = {u1m}, U2 = {u2m}, U3 = {u3m})")));
    }
    let (c1, c2) = (u1m / u2m, u3m / u2m);
    Ok((c1, c2, (1.0 - c1 * c1).sqrt(), (1.0 - c2 * c2).sqrt()))
}

/// Spherical-triangle angles `(A, B)` opposite the sides of length `arccos c2`, `arccos c1`.
fn triangle_angles(c1: f64, c2: f64, s1: f64, s2: f64, ct: f64, st: f64, su2: f64) -> (f64, f64) {
    let a = (s2 * su2 / st).atan2((c2 - ct * c1) / (s1 * st));
    let b = (s1 * su2 / st).atan2((c1 - ct * c2) / (s2 * st));
    (a, b)
}

pub fn euler_to_andoyer(ep: &EulerPoint) -> Result<AndoyerPoint> {
    let (st, ct) = ep.theta.sin_cos();
    if !(st > GUARD) {
        return Err(Error::ChartSingularity(format!("sin(theta) = {st}")));
    }
    let ang = ep.Psi * ep.Psi + ep.Phi * ep.Phi - 2.0 * ep.Phi * ep.Psi * ct;
    let u2m = (ep.Theta * ep.Theta + ang / (st * st)).sqrt();
    let (c1, c2, s1, s2) = andoyer_cosines(ep.Psi, u2m, ep.Phi)?;
    let su2 = ep.Theta * st / (u2m * s1 * s2);
    let cu2 = (ct - c1 * c2) / (s1 * s2);
    let u2 = su2.atan2(cu2);
    let (a, b) = triangle_angles(c1, c2, s1, s2, ct, st, su2);
    Ok(AndoyerPoint { rho: ep.rho, u1: ep.psi + a, u2, u3: ep.phi + b, P: ep.P, U1: ep.Psi, U2: u2m, U3: ep.Phi })
}

pub fn andoyer_to_euler(ap: &AndoyerPoint) -> Result<EulerPoint> {
    let (c1, c2, s1, s2) = andoyer_cosines(ap.U1, ap.U2, ap.U3)?;
    let (su2, cu2) = ap.u2.sin_cos();
    let ct = (c1 * c2 + s1 * s2 * cu2).clamp(-1.0, 1.0);
    let theta = ct.acos();
    let st = theta.sin();
    if !(st > GUARD) {
        return Err(Error::ChartSingularity(format!("sin(theta) = {st}")));
    }
    let (a, b) = triangle_angles(c1, c2, s1, s2, ct, st, su2);
    let (phi, psi) = normalize_euler_angles(ap.u3 - b, ap.u1 - a);
    Ok(EulerPoint { rho: ap.rho, phi, theta, psi, P: ap.P, Phi: ap.U3, Theta: ap.U2 * s1 * s2 * su2 / st, Psi: ap.U1 })
}

/// Solve `E − e sin E = ℓ`; continuous in `ℓ`.
pub fn kepler_solve(ell: f64, e: f64) -> f64 {
    if e == 0.0 {
        return ell;
    }
    let m = wrap_pi(ell);
    let shift = ell - m;
    // f(E) = E − e sinE − m is increasing, with a root in [−π, π]
    let (mut lo, mut hi) = (-PI, PI);
    let mut x = if e < 0.8 { m + e * m.sin() } else { PI.copysign(m) * 0.5 + 0.5 * m };
    for _ in 0..100 {
        let f = x - e * x.sin() - m;
        if f.abs() < 1e-15 {
            break;
        }
        if f > 0.0 {
            hi = hi.min(x);
        } else {
            lo = lo.max(x);
        }
        let fp = 1.0 - e * x.cos();
        let mut nx = x - f / fp;
        if !(nx > lo && nx < hi) {
            nx = 0.5 * (lo + hi);
        }
        if nx == x {
            break;
        }
        x = nx;
    }
    x + shift
}

#[derive(Debug, Clone, Copy)]
struct Orbit {
    a: f64,
    eta: f64,
    e: f64,
}

fn orbit(l: f64, g: f64, gamma: f64) -> Result<Orbit> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
    }
    if !(l > 0.0) || !(g > GUARD) || g > l * (1.0 + 1e-15) {
        return Err(Error::ChartSingularity(format!("need 0 < G ≤ L (L = {l}, G = {g})")));
    }
    let eta = (g / l).min(1.0);
    Ok(Orbit { a: l * l / gamma, eta, e: (1.0 - eta * eta).max(0.0).sqrt() })
}

/// True anomaly from the eccentric one, on the same branch as `E`.
fn true_anomaly(big_e: f64, e: f64, eta: f64) -> f64 {
    let (se, ce) = big_e.sin_cos();
    let f0 = (eta * se).atan2(ce - e);
    big_e + wrap_pi(f0 - big_e)
}

pub fn delaunay_to_andoyer(dp: &DelaunayPoint, gamma: f64) -> Result<AndoyerPoint> {
    let o = orbit(dp.L, dp.G, gamma)?;
    andoyer_cosines(dp.U1, dp.G, dp.U3)?;
    let big_e = kepler_solve(dp.ell, o.e);
    let (se, ce) = big_e.sin_cos();
    let rho = o.a * (1.0 - o.e * ce);
    Ok(AndoyerPoint {
        rho,
        u1: dp.u1,
        u2: dp.g + true_anomaly(big_e, o.e, o.eta),
        u3: dp.u3,
        P: dp.L * o.e * se / rho,
        U1: dp.U1,
        U2: dp.G,
        U3: dp.U3,
    })
}

pub fn andoyer_to_delaunay(ap: &AndoyerPoint, gamma: f64) -> Result<DelaunayPoint> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
    }
    if !(ap.rho > GUARD) {
        return Err(Error::ChartSingularity(format!("rho = {}", ap.rho)));
    }
    andoyer_cosines(ap.U1, ap.U2, ap.U3)?;
    let g = ap.U2;
    let energy = 0.5 * (ap.P * ap.P + g * g / (ap.rho * ap.rho)) - gamma / ap.rho;
    if !(energy < 0.0) {
        return Err(Error::OutOfDomain(format!("Kepler energy {energy} is not negative")));
    }
    let l = gamma / (-2.0 * energy).sqrt();
    let o = orbit(l, g, gamma)?;
    let ecos = 1.0 - ap.rho / o.a;
    let esin = ap.rho * ap.P / l;
    let e = ecos.hypot(esin);
    if o.e <= 1e-12 || e <= 1e-12 {
        return Err(Error::DegenerateEccentricity);
    }
    let big_e = esin.atan2(ecos);
    let ell = big_e - esin;
    let f = true_anomaly(big_e, o.e, o.eta);
    Ok(DelaunayPoint { ell, g: ap.u2 - f, u1: ap.u1, u3: ap.u3, L: l, G: g, U1: ap.U1, U3: ap.U3 })
}

pub fn delaunay_to_cartesian(dp: &DelaunayPoint, gamma: f64) -> Result<CartesianState> {
    euler_to_cartesian(&andoyer_to_euler(&delaunay_to_andoyer(dp, gamma)?)?)
}

pub fn cartesian_to_delaunay(s: &CartesianState, gamma: f64) -> Result<DelaunayPoint> {
    andoyer_to_delaunay(&euler_to_andoyer(&cartesian_to_euler(s)?)?, gamma)
}

/// `½(P² + U2²/ρ²) − γ/ρ` evaluated directly in Andoyer variables.
pub fn kepler_form(ap: &AndoyerPoint, gamma: f64) -> f64 {
    0.5 * (ap.P * ap.P + ap.U2 * ap.U2 / (ap.rho * ap.rho)) - gamma / ap.rho
}

/// Regularized Hamiltonian `(H2 − 4γ)/(4ρ) − 1/8` through the full chart
/// chain (`ω = 1`); equals `−γ²/(2L²)`.
pub fn composed_h0(dp: &DelaunayPoint, gamma: f64) -> Result<f64> {
    let s = delaunay_to_cartesian(dp, gamma)?;
    Ok((model::h2(&s, 1.0) - 4.0 * gamma) / (4.0 * s.rho()) - 0.125)
}

/// `G ≥ 0` with `4G² = ½(n² + ξ² + l²) − ½K² − N`.
#[allow(non_snake_case)]
pub fn connection_G(k: f64, n: f64, iv: &IntegralValues) -> Result<f64> {
    let r = 0.5 * (iv.n * iv.n + iv.xi * iv.xi + iv.l * iv.l) - 0.5 * k * k - n;
    if !(r > 0.0) {
        return Err(Error::OutOfDomain(format!("connection radicand {r} is not positive")));
    }
    Ok(0.5 * r.sqrt())
}

/// `L` on the shell `H0 = −1/8` for the regularization constant `gamma`.
pub fn on_shell_l(gamma: f64) -> f64 {
    2.0 * gamma
}
