//! Relative equilibria of the first-order normalized system.
//!
//! Momenta are scaled so that `L = 1`; then `η = G`, `w = U1`, `z = U3` and the
//! equilibrium conditions depend on `(w, z, α)` only. The torus conditions are
//! solved in `u = η²`, where `∂P/∂G = 0` at `sin g = 0` reads
//! `Rp(u)·√X2(u) ± Qp(u) = 0` with `X2 = (1 − u)(u − w²)(u − z²)`; the sign is
//! `+` for `g = 0` and `−` for `g = π`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charts::{connection_G, delaunay_to_cartesian, on_shell_l, DelaunayPoint};
use crate::invariants::{reduced_rhs, thrice_reduced_point};
use crate::model::IntegralValues;
use crate::normalform::order1_with_gaps;
use crate::poly::{real_roots, Poly};
use crate::scalar::{Dual, Scalar};
use crate::{Error, Result};

/// Branch acceptance: `|Rp X ± Qp| ≤ BRANCH_TOL · (X Σ|r_i|u^i + Σ|q_i|u^i)`.
pub const BRANCH_TOL: f64 = 1e-8;
/// `P ≡ 0` when every coefficient is below this.
pub const CONTINUUM_TOL: f64 = 1e-12;
/// Roots this close to `u = max(w², z²)` sit on the chart boundary.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// `u = η²` with its distances to `1`, `w²` and `z²`. Measured from the
/// nearer end they stay accurate where `1 − u` or `u − w²` would cancel.
#[derive(Debug, Clone, Copy)]
struct Gaps {
    u: f64,
    d0: f64,
    d1: f64,
    d2: f64,
}

impl Gaps {
    fn from_u(u: f64, w: f64, z: f64) -> Self {
        Gaps { u, d0: 1.0 - u, d1: u - w * w, d2: u - z * z }
    }
}

#[derive(Debug, Clone, Copy)]
enum Anchor {
    Circular,
    Lower,
}

/// The degree-6 polynomial in `η` with its coefficients as commonly printed.
/// Its roots do not solve the torus conditions; see [`TorusPolynomial`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaPolynomial {
    pub a: [f64; 7],
    pub w: f64,
    pub z: f64,
    pub alpha: f64,
}

impl EtaPolynomial {
    pub fn eval(&self, eta: f64) -> f64 {
        Poly::new(self.a.to_vec()).eval(eta)
    }
}

pub fn assemble_eta_poly(w: f64, z: f64, alpha: f64) -> EtaPolynomial {
    let a = alpha;
    let (w2, z2) = (w * w, z * z);
    let (w4, z4) = (w2 * w2, z2 * z2);
    let (w6, z6) = (w4 * w2, z4 * z2);
    let a2 = a * a;
    let c6 = -9.0 - 24.0 * a - 16.0 * a2;
    let c5 =
        w2 * (16.0 * a2 + 9.0 - a2 * z2 + 24.0 * a) + 9.0 + 24.0 * a + 16.0 * a2 + z2 * (24.0 * a + 9.0 + 16.0 * a2);
    let c4 = w2 * (24.0 * a2 + 18.0 * a * z2 + 6.0 * a - 9.0 - 9.0 * z2 + 30.0 * a2 * z2 * w2)
        + z2 * (6.0 * a + 24.0 * a2 - 9.0);
    let c3 = w4 * (-40.0 * a2 - 42.0 * a * z2 - 30.0 * a - 34.0 * a2 * z2 + 2.0 * z4) + 9.0 * z2 * w2
        - 30.0 * z2
        - 40.0 * a2 * z2
        - 40.0 * a2 * z4
        + a * w2 * (198.0 * z2 - 34.0 * a * z4 + 30.0 + 285.0 * a * z2 + 40.0 * a + 42.0 * z4)
        - 30.0 * a * z4;
    let c2 = a
        * (30.0 * w4 + 42.0 * z4 * w4 + 192.0 * z2 * w4 + 15.0 * a * w4 - 17.0 * a * z4 * w4 + 266.0 * a * z2 * w4
            - 30.0 * z4
            + 266.0 * a * z4 * w2
            + 192.0 * z4 * w2
            + 180.0 * z2 * w2
            + 290.0 * a * z2 * w2
            + 15.0 * a * z4);
    let c1 = a2
        * (25.0 * w4 - w6 * z6 + 27.0 * w6 * z4 - 51.0 * w6 * z2 + 25.0 * w6 + 27.0 * z6 * w4
            - 139.0 * z4 * w4
            - 225.0 * z2 * w4
            + 25.0 * z6
            + 25.0 * z4
            - 51.0 * z6 * w2
            - 225.0 * z4 * w2
            - 50.0 * z2 * w2)
        + 150.0 * z2 * w4
        + 150.0 * z4 * w2
        + 162.0 * z4 * w4;
    let c0 = 5.0
        * a
        * (a * w6 * z4 - 3.0 * a * w6 * z6 - 5.0 * a * w6
            + 7.0 * a * w6 * z2
            + 24.0 * z4 * w4
            + a * z6 * w4
            + 5.0 * a * z2 * w4
            + 18.0 * a * z4 * w4
            - 5.0 * a * z6
            + 5.0 * a * z4 * w2
            + 7.0 * a * z6 * w2);
    EtaPolynomial { a: [c0, c1, c2, c3, c4, c5, c6], w, z, alpha }
}

/// Pre-squaring pieces of the torus condition and the squared polynomial
/// `P(u) = Rp² X2 − Qp²` (degree 9 in `u`).
#[derive(Debug, Clone)]
pub struct TorusPolynomial {
    pub w: f64,
    pub z: f64,
    pub alpha: f64,
    pub rp: Poly,
    pub qp: Poly,
    pub x2: Poly,
    pub p: Poly,
}

impl TorusPolynomial {
    pub fn new(w: f64, z: f64, alpha: f64) -> Self {
        let (w2, z2) = (w * w, z * z);
        let u = Poly::new(vec![0.0, 1.0]);
        let bw = Poly::linear(w2);
        let bz = Poly::linear(z2);
        let x2 = Poly::new(vec![1.0, -1.0]).mul(&bw).mul(&bz);
        // 16 u² (C01 + C21) / a²
        let na = Poly::new(vec![5.0, -3.0])
            .mul(&Poly::new(vec![2.0 * alpha * w2 * z2, 0.0, 2.0]).add(&bw.mul(&bz).scale(alpha)))
            .add(&x2.scale(5.0 * alpha));
        let rp = u.mul(&na.deriv()).sub(&na.scale(2.0));
        let qp = Poly::linear(10.0)
            .mul(&x2)
            .add(&Poly::new(vec![0.0, 2.5, -0.5]).mul(&x2.deriv()))
            .scale(-4.0 * alpha * w * z);
        // cancellation leaves roundoff where exact zeros belong (u = 0 roots)
        let p = rp.mul(&rp).mul(&x2).sub(&qp.mul(&qp)).flushed(1e-14);
        TorusPolynomial { w, z, alpha, rp, qp, x2, p }
    }

    /// `(Rp X + Qp, Rp X − Qp, scale)` at `u`, where `X = √X2` and `scale` is
    /// the size of the terms, `X Σ|r_i|u^i + Σ|q_i|u^i`.
    pub fn branches(&self, u: f64) -> (f64, f64, f64) {
        self.branches_at(&Gaps::from_u(u, self.w, self.z))
    }

    fn branches_at(&self, g: &Gaps) -> (f64, f64, f64) {
        let x = (g.d0 * g.d1 * g.d2).max(0.0).sqrt();
        let (rp, qp) = self.rp_qp(g);
        let rx = rp * x;
        (rx + qp, rx - qp, x * self.rp.eval_abs(g.u) + self.qp.eval_abs(g.u))
    }

    /// `(Rp, Qp)` in factored form; the expanded polynomials lose digits when
    /// `u` is close to `w²`, `z²` or 1.
    fn rp_qp(&self, g: &Gaps) -> (f64, f64) {
        let (u, a) = (g.u, self.alpha);
        let (w2, z2) = (self.w * self.w, self.z * self.z);
        let x2 = g.d0 * g.d1 * g.d2;
        let dx2 = g.d0 * (g.d1 + g.d2) - g.d1 * g.d2;
        let inner = 2.0 * u * u + 2.0 * a * w2 * z2 + a * g.d1 * g.d2;
        let na = (5.0 - 3.0 * u) * inner + 5.0 * a * x2;
        let dna = -3.0 * inner + (5.0 - 3.0 * u) * (4.0 * u + a * (g.d1 + g.d2)) + 5.0 * a * dx2;
        let rp = u * dna - 2.0 * na;
        let qp = -4.0 * a * self.w * self.z * ((u - 10.0) * x2 + 0.5 * u * (5.0 - u) * dx2);
        (rp, qp)
    }

    /// Gaps at `u = 1 − v²` or `u = max(w², z²) + v²`.
    fn gaps(&self, anchor: Anchor, v: f64) -> Gaps {
        let (w2, z2, v2) = (self.w * self.w, self.z * self.z, v * v);
        match anchor {
            Anchor::Circular => Gaps { u: 1.0 - v2, d0: v2, d1: (1.0 - w2) - v2, d2: (1.0 - z2) - v2 },
            Anchor::Lower => {
                let wz = (self.w - self.z) * (self.w + self.z);
                if wz >= 0.0 {
                    Gaps { u: w2 + v2, d0: (1.0 - w2) - v2, d1: v2, d2: wz + v2 }
                } else {
                    Gaps { u: z2 + v2, d0: (1.0 - z2) - v2, d1: v2 - wz, d2: v2 }
                }
            }
        }
    }

    /// Parametrize `u` from the nearer end of `[max(w², z²), 1]`.
    fn anchor_of(&self, u: f64) -> (Anchor, f64) {
        let lo = (self.w * self.w).max(self.z * self.z);
        if 1.0 - u < u - lo {
            (Anchor::Circular, (1.0 - u).sqrt())
        } else {
            (Anchor::Lower, (u - lo).sqrt())
        }
    }

    pub fn is_continuum(&self) -> bool {
        self.p.max_abs() < CONTINUUM_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Torus3,
    Torus2U1,
    Torus2U3,
    Periodic,
}

impl EquilibriumKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EquilibriumKind::Torus3 => "torus3",
            EquilibriumKind::Torus2U1 => "torus2_u1",
            EquilibriumKind::Torus2U3 => "torus2_u3",
            EquilibriumKind::Periodic => "periodic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodicCase {
    /// `cos g = 1`, `U1 = U3`
    I,
    /// `cos g = −1`, `U1 = U3`
    II,
    /// `U1 = U3 = 0`, only at `α = −3/4`
    C2Zero,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub kind: EquilibriumKind,
    pub eta: f64,
    pub g: f64,
    pub L: f64,
    pub G: f64,
    pub U1: f64,
    pub U3: f64,
    pub alpha: f64,
    pub residual: f64,
    pub case: Option<PeriodicCase>,
    pub c2_zero: bool,
    pub flags: Vec<String>,
}

impl EquilibriumRecord {
    pub fn delaunay(&self, ell: f64, u1: f64, u3: f64) -> DelaunayPoint {
        DelaunayPoint { ell, g: self.g, u1, u3, L: self.L, G: self.G, U1: self.U1, U3: self.U3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRoot {
    pub eta: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tori3 {
    pub records: Vec<EquilibriumRecord>,
    pub rejected: Vec<RejectedRoot>,
    /// `P ≡ 0`: every `η` solves the conditions.
    pub continuum: bool,
}

fn check_wz(w: f64, z: f64) -> Result<()> {
    if !(w.abs() < 1.0 && z.abs() < 1.0) {
        return Err(Error::OutOfDomain(format!("need |w| < 1 and |z| < 1, got w={w}, z={z}")));
    }
    if !w.is_finite() || !z.is_finite() {
        return Err(Error::InvalidParameter("non-finite w or z".into()));
    }
    Ok(())
}

fn beta_of(alpha: f64) -> f64 {
    (alpha + 1.0).max(0.0).sqrt()
}

/// `∂K/∂(G, U1, U3)` of the order-1 kernel `K = C01 + C11 cos g + C21 cos 2g`
/// at `L = 1`, `γ = 1`. Terms whose coefficient vanishes identically are skipped
/// so the square roots inside `C11` are never differentiated at zero.
#[allow(non_snake_case)]
pub fn kernel_gradient(G: f64, U1: f64, U3: f64, cos_g: f64, alpha: f64) -> [f64; 3] {
    let gaps = Gaps { u: G * G, d0: 1.0 - G * G, d1: G * G - U1 * U1, d2: G * G - U3 * U3 };
    gradient_with_gaps(G, U1, U3, &gaps, cos_g, alpha)
}

#[allow(non_snake_case)]
fn gradient_with_gaps(G: f64, U1: f64, U3: f64, gaps: &Gaps, cos_g: f64, alpha: f64) -> [f64; 3] {
    type D = Dual<3>;
    let g = D::var(G, 0);
    let e = if gaps.d0 > 0.0 {
        let e = gaps.d0.sqrt();
        Dual { v: e, d: [-G / e, 0.0, 0.0] }
    } else {
        (D::constant(1.0) - g * g).sqrt()
    };
    // G² − U_i², then 1 − (U_i/G)²
    let sx1 = Dual { v: gaps.d1, d: [2.0 * G, -2.0 * U1, 0.0] } / (g * g);
    let sx2 = Dual { v: gaps.d2, d: [2.0 * G, 0.0, -2.0 * U3] } / (g * g);
    let c = order1_with_gaps(D::constant(1.0), g, D::var(U1, 1), D::var(U3, 2), e, sx1, sx2, 1.0, beta_of(alpha));
    let cos2g = 2.0 * cos_g * cos_g - 1.0;
    let skip_c11 = alpha == 0.0 || U1 == 0.0 || U3 == 0.0;
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = c[0].d[i] + cos2g * c[2].d[i];
        if !skip_c11 {
            out[i] += cos_g * c[1].d[i];
        }
    }
    out
}

/// Polish one branch equation in the anchor variable: widen a bracket around
/// `v0` until the branch changes sign, then bisect. Without a sign change
/// within 5% the isolated root is kept.
fn polish(tp: &TorusPolynomial, anchor: Anchor, v0: f64, plus: bool) -> Gaps {
    let f = |v: f64| {
        let (p, m, _) = tp.branches_at(&tp.gaps(anchor, v));
        if plus {
            p
        } else {
            m
        }
    };
    let f0 = f(v0);
    if f0 == 0.0 {
        return tp.gaps(anchor, v0);
    }
    let mut delta = 1e-10;
    let bracket = loop {
        if delta > 5e-2 {
            break None;
        }
        let (lo, hi) = (v0 * (1.0 - delta), v0 * (1.0 + delta));
        let (flo, fhi) = (f(lo), f(hi));
        // prefer the side nearer v0 when both change sign
        if (flo > 0.0) != (f0 > 0.0) && (fhi > 0.0) != (f0 > 0.0) {
            break Some(if flo.abs() < fhi.abs() { (lo, v0) } else { (v0, hi) });
        }
        if (flo > 0.0) != (f0 > 0.0) {
            break Some((lo, v0));
        }
        if (fhi > 0.0) != (f0 > 0.0) {
            break Some((v0, hi));
        }
        delta *= 4.0;
    };
    let Some((mut a, mut b)) = bracket else {
        return tp.gaps(anchor, v0);
    };
    let fa_pos = f(a) > 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return tp.gaps(anchor, m);
        }
        if (fm > 0.0) == fa_pos {
            a = m;
        } else {
            b = m;
        }
    }
    let v = if f(a).abs() < f(b).abs() { a } else { b };
    tp.gaps(anchor, v)
}

pub fn solve_tori3(w: f64, z: f64, alpha: f64) -> Result<Tori3> {
    check_wz(w, z)?;
    let tp = TorusPolynomial::new(w, z, alpha);
    if tp.is_continuum() {
        return Ok(Tori3 { records: Vec::new(), rejected: Vec::new(), continuum: true });
    }
    let lo = (w * w).max(z * z);
    // With Qp ≡ 0 the squared polynomial only doubles the roots of Rp.
    let target = if tp.qp.is_zero() { tp.rp.mul(&tp.x2).flushed(1e-14) } else { tp.p.clone() };
    let roots = real_roots(&target, 0.0, 1.0);
    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for u in roots {
        let eta = u.sqrt();
        if u <= 0.0 {
            continue;
        }
        if (u - lo).abs() <= BOUNDARY_TOL && lo > 0.0 {
            rejected.push(RejectedRoot { eta, reason: "chart_boundary".into() });
            continue;
        }
        if u < lo {
            let (plus, minus, scale) = tp.branches(u);
            let ok = plus.abs().min(minus.abs()) <= BRANCH_TOL * scale;
            let reason = if ok { "outside_domain" } else { "squaring" };
            rejected.push(RejectedRoot { eta, reason: reason.into() });
            continue;
        }
        let record = |g: f64, eta: f64, residual: f64, flags: Vec<String>| EquilibriumRecord {
            kind: EquilibriumKind::Torus3,
            eta,
            g,
            L: 1.0,
            G: eta,
            U1: w,
            U3: z,
            alpha,
            residual,
            case: None,
            c2_zero: z == 0.0,
            flags,
        };
        if 1.0 - u <= 1e-14 {
            let (plus, minus, scale) = tp.branches(u);
            let r = plus.abs().max(minus.abs());
            if plus.abs().min(minus.abs()) > BRANCH_TOL * scale {
                rejected.push(RejectedRoot { eta, reason: "squaring".into() });
            } else {
                let residual = if r == 0.0 { 0.0 } else { r / scale };
                records.push(record(0.0, 1.0, residual, vec!["g_degenerate".into()]));
            }
            continue;
        }
        let (anchor, v0) = tp.anchor_of(u);
        let (mut any, mut added) = (false, false);
        for (plus, g) in [(true, 0.0), (false, PI)] {
            let gaps = polish(&tp, anchor, v0, plus);
            let (p, m, scale) = tp.branches_at(&gaps);
            if (if plus { p } else { m }).abs() <= BRANCH_TOL * scale {
                any = true;
                let eta = gaps.u.sqrt();
                // neighbouring roots of P can polish onto the same branch root
                if records.iter().any(|r| r.g == g && (r.eta - eta).abs() <= 1e-12) {
                    continue;
                }
                added = true;
                let residual = gradient_with_gaps(eta, w, z, &gaps, g.cos().round(), alpha)[0].abs();
                records.push(record(g, eta, residual, Vec::new()));
            }
        }
        if !any {
            rejected.push(RejectedRoot { eta, reason: "squaring".into() });
        } else if !added {
            rejected.push(RejectedRoot { eta, reason: "duplicate".into() });
        }
    }
    Ok(Tori3 { records, rejected, continuum: false })
}

fn case_i_alpha(e: f64) -> f64 {
    3.0 * e * (3.0 + 2.0 * e).powi(2) / (3.0 * e.powi(4) + 2.0 * e.powi(3) - 10.0 * e * e - 3.0 * e + 8.0)
}

fn case_ii_alpha(e: f64) -> f64 {
    -3.0 * e * (3.0 - 2.0 * e).powi(2) / (3.0 * e.powi(4) - 2.0 * e.powi(3) - 10.0 * e * e + 3.0 * e + 8.0)
}

fn case_i_c2sq(e: f64) -> f64 {
    (1.0 + 3.0 * e + e * e) / ((3.0 + 2.0 * e) * (1.0 + e))
}

fn case_ii_c2sq(e: f64) -> f64 {
    (1.0 - 3.0 * e + e * e) / ((2.0 * e - 3.0) * (e - 1.0))
}

/// `|U1| = |U3|` as printed for the periodic orbits, with `cos g = ±1`.
pub fn printed_periodic_u(e: f64, cos_g: f64) -> f64 {
    let ec = e * cos_g;
    let num = if cos_g > 0.0 {
        ec * (4.0 + 5.0 * ec + e * e) + 1.0 - e * e
    } else {
        ec * (-4.0 + 5.0 * ec - e * e) + 1.0 - e * e
    };
    let den = if cos_g > 0.0 {
        ec * (5.0 * ec + 8.0 + 2.0 * e * e) + 3.0 + 2.0 * e * e
    } else {
        ec * (5.0 * ec - 8.0 - 2.0 * e * e) + 3.0 + 2.0 * e * e
    };
    (num / den).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicBranch {
    pub case: PeriodicCase,
    pub alpha: f64,
    /// `NaN` for the `c2 = 0` family, which exists for every `e`.
    pub e: f64,
    pub c2sq: f64,
    pub g: f64,
    /// Max of `|∂K/∂G|, |∂K/∂U1|, |∂K/∂U3|` at the branch point.
    pub residual: f64,
    /// Same residual with `U1 = U3 = 0` imposed.
    pub u_zero_residual: f64,
    /// Same residual with the printed `|U1| = |U3|` read as the momenta.
    pub printed_u_residual: f64,
    /// Same residual with the printed expression read as `(U/G)²`.
    pub printed_ratio_residual: f64,
}

impl PeriodicBranch {
    pub fn to_record(&self) -> EquilibriumRecord {
        let e = if self.e.is_nan() { 0.5 } else { self.e };
        let eta = (1.0 - e * e).sqrt();
        let u = self.c2sq.sqrt() * eta;
        let mut flags = Vec::new();
        if self.e.is_nan() {
            flags.push("continuum_e".into());
        }
        EquilibriumRecord {
            kind: EquilibriumKind::Periodic,
            eta,
            g: self.g,
            L: 1.0,
            G: eta,
            U1: u,
            U3: u,
            alpha: self.alpha,
            residual: self.residual,
            case: Some(self.case),
            c2_zero: self.case == PeriodicCase::C2Zero,
            flags,
        }
    }
}

fn periodic_residual(e: f64, u: f64, cos_g: f64, alpha: f64) -> f64 {
    let eta = (1.0 - e * e).sqrt();
    if !(u.abs() < eta) {
        return f64::INFINITY;
    }
    kernel_gradient(eta, u, u, cos_g, alpha).iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn branch_point(case: PeriodicCase, alpha: f64, e: f64, c2sq: f64) -> PeriodicBranch {
    let cos_g = if case == PeriodicCase::II { -1.0 } else { 1.0 };
    let eta = (1.0 - e * e).sqrt();
    let pu = printed_periodic_u(e, cos_g);
    PeriodicBranch {
        case,
        alpha,
        e,
        c2sq,
        g: if cos_g > 0.0 { 0.0 } else { PI },
        residual: periodic_residual(e, c2sq.sqrt() * eta, cos_g, alpha),
        u_zero_residual: periodic_residual(e, 0.0, cos_g, alpha),
        printed_u_residual: periodic_residual(e, pu, cos_g, alpha),
        printed_ratio_residual: periodic_residual(e, pu * eta, cos_g, alpha),
    }
}

/// Roots of `f(e) = target` on `(0, 1)` from a sign scan plus bisection.
fn solve_on_unit(f: impl Fn(f64) -> f64, target: f64) -> Vec<f64> {
    let n = 4096;
    let h = |e: f64| f(e) - target;
    let mut out = Vec::new();
    let mut prev_e = 1e-9;
    let mut prev = h(prev_e);
    for i in 1..n {
        let e = i as f64 / n as f64;
        let v = h(e);
        if prev == 0.0 {
            out.push(prev_e);
        } else if v.is_finite() && prev.is_finite() && (v > 0.0) != (prev > 0.0) {
            let (mut lo, mut hi) = (prev_e, e);
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if (h(m) > 0.0) == (prev > 0.0) {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            let r = 0.5 * (lo + hi);
            // reject sign flips across a pole
            if h(r).abs() < 1e-9 * (1.0 + target.abs()) {
                out.push(r);
            }
        }
        prev_e = e;
        prev = v;
    }
    out
}

pub fn periodic_branches(alpha: f64) -> Vec<PeriodicBranch> {
    let mut out = Vec::new();
    if (alpha + 0.75).abs() < 1e-12 {
        let mut b = branch_point(PeriodicCase::C2Zero, alpha, 0.5, 0.0);
        b.e = f64::NAN;
        out.push(b);
    }
    for e in solve_on_unit(case_i_alpha, alpha) {
        let c2sq = case_i_c2sq(e);
        if c2sq > 0.0 && c2sq < 1.0 {
            out.push(branch_point(PeriodicCase::I, alpha, e, c2sq));
        }
    }
    for e in solve_on_unit(case_ii_alpha, alpha) {
        let c2sq = case_ii_c2sq(e);
        if c2sq > 0.0 && c2sq < 1.0 {
            out.push(branch_point(PeriodicCase::II, alpha, e, c2sq));
        }
    }
    out
}

/// An equilibrium pushed into the thrice-reduced space.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub K: f64,
    pub N: f64,
    pub S: f64,
    pub iv: IntegralValues,
    /// `(dK/dt, dN/dt, dS/dt)`
    pub rhs: [f64; 3],
    pub residual: f64,
    /// `|connection_G(K, N) − G|`
    pub connection_defect: f64,
}

/// Map a record through the charts at `γ = 1/2` (so `L = 1` is on shell) and
/// evaluate the reduced right-hand sides there.
pub fn cross_validate(rec: &EquilibriumRecord, beta: f64) -> Result<CrossCheck> {
    let gamma = 0.5;
    debug_assert!((on_shell_l(gamma) - rec.L).abs() < 1e-15);
    let dp = rec.delaunay(0.3, 0.2, -0.4);
    let st = delaunay_to_cartesian(&dp, gamma)?;
    let pt = thrice_reduced_point(&st);
    let rhs = reduced_rhs(pt.K, pt.N, pt.S, &pt.iv, beta);
    let residual = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cg = connection_G(pt.K, pt.N, &pt.iv)?;
    Ok(CrossCheck { K: pt.K, N: pt.N, S: pt.S, iv: pt.iv, rhs, residual, connection_defect: (cg - rec.G).abs() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// `(alpha, w, z)` grid indices; `w` and `z` are `None` for periodic rows.
    pub index: (usize, Option<usize>, Option<usize>),
    pub alpha: f64,
    pub w: f64,
    pub z: f64,
    pub record: Option<EquilibriumRecord>,
    pub flags: Vec<String>,
}

fn cell_rows(ia: usize, iw: usize, iz: usize, alpha: f64, w: f64, z: f64) -> Vec<SweepRow> {
    let row = |record, flags| SweepRow { index: (ia, Some(iw), Some(iz)), alpha, w, z, record, flags };
    match solve_tori3(w, z, alpha) {
        Err(e) => vec![row(None, vec![format!("error: {e}")])],
        Ok(t) if t.continuum => vec![row(None, vec!["continuum".into()])],
        Ok(t) => {
            let mut rows: Vec<SweepRow> = t.records.into_iter().map(|r| row(Some(r), Vec::new())).collect();
            for r in t.rejected {
                rows.push(row(None, vec![format!("rejected:{}:{:.16e}", r.reason, r.eta)]));
            }
            if rows.is_empty() {
                rows.push(row(None, vec!["no_roots".into()]));
            }
            rows
        }
    }
}

fn alpha_rows(ia: usize, alpha: f64) -> Vec<SweepRow> {
    periodic_branches(alpha)
        .into_iter()
        .map(|b| {
            let r = b.to_record();
            SweepRow { index: (ia, None, None), alpha, w: r.U1, z: r.U3, record: Some(r), flags: Vec::new() }
        })
        .collect()
}

/// Torus and periodic equilibria over the grid, ordered by grid index. The
/// result does not depend on `workers`.
pub fn sweep(alphas: &[f64], ws: &[f64], zs: &[f64], workers: usize) -> Result<Vec<SweepRow>> {
    if alphas.iter().chain(ws).chain(zs).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("grid values must be finite".into()));
    }
    let mut cells = Vec::new();
    for (ia, _) in alphas.iter().enumerate() {
        for iw in 0..ws.len() {
            for iz in 0..zs.len() {
                cells.push((ia, Some((iw, iz))));
            }
        }
        cells.push((ia, None));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let chunks: Vec<Vec<SweepRow>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(ia, c)| match c {
                Some((iw, iz)) => cell_rows(ia, iw, iz, alphas[ia], ws[iw], zs[iz]),
                None => alpha_rows(ia, alphas[ia]),
            })
            .collect()
    });
    Ok(chunks.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_polynomial_examples() {
        let p = assemble_eta_poly(0.0, 0.0, 1.0);
        assert_eq!(p.a, [0.0, 0.0, 0.0, 0.0, 0.0, 49.0, -49.0]);
        let p = assemble_eta_poly(0.3, -0.2, 0.7);
        assert!((p.a[6] + 9.0 + 24.0 * 0.7 + 16.0 * 0.49).abs() < 1e-12);
        assert!(assemble_eta_poly(0.0, 0.0, -0.75).a.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn derived_polynomial_at_origin() {
        // P(u) = 4 (3 + 4α)² u⁸ (1 − u) when w = z = 0
        let alpha = 0.4;
        let tp = TorusPolynomial::new(0.0, 0.0, alpha);
        for u in [0.2f64, 0.5, 0.9] {
            let want = 4.0 * (3.0 + 4.0 * alpha).powi(2) * u.powi(8) * (1.0 - u);
            assert!((tp.p.eval(u) - want).abs() < 1e-12);
        }
        assert_eq!(tp.p.degree(), 9);
    }

    #[test]
    fn circular_family() {
        let t = solve_tori3(0.0, 0.0, 1.0).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].eta, 1.0);
        assert!(t.records[0].residual < 1e-10);
        assert!(t.records[0].flags.contains(&"g_degenerate".to_string()));
        assert!(solve_tori3(0.0, 0.0, -0.75).unwrap().continuum);
    }

    #[test]
    fn periodic_limits() {
        let b = periodic_branches(1e-6);
        let i = b.iter().find(|b| b.case == PeriodicCase::I).unwrap();
        assert!(i.e < 1e-5 && (i.c2sq - 1.0 / 3.0).abs() < 1e-5);
        assert!(periodic_branches(-0.75).iter().any(|b| b.case == PeriodicCase::C2Zero));
        let b = periodic_branches(1.0);
        let i = b.iter().find(|b| b.case == PeriodicCase::I).unwrap();
        assert!(i.residual < 1e-8, "{}", i.residual);
    }

    #[test]
    fn out_of_domain() {
        assert!(solve_tori3(1.0, 0.0, 0.5).is_err());
    }
}
