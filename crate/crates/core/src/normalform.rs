//! Delaunay normal form of the regularized perturbation `H6/(4ρ)`: first- and
//! second-order kernels, the first-order generator `W1`, a finite-difference
//! oracle for the second order, and the normalized flow.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::charts::{self, DelaunayPoint};
use crate::error::{Error, Result};
use crate::model::{self, ModelParams};
use crate::ode::{self, Output};
use crate::scalar::{Dual, Scalar};

mod order2_tables;

pub const DEFAULT_QUADRATURE: usize = 512;

/// `H6` at the Cartesian image of `dp`.
pub fn h6_delaunay(dp: &DelaunayPoint, p: &ModelParams) -> Result<f64> {
    let s = charts::delaunay_to_cartesian(dp, p.gamma)?;
    Ok(model::h6(&s.q, p.beta))
}

/// The regularized perturbation `H6/(4ρ)` through the chart chain.
pub fn perturbation_delaunay(dp: &DelaunayPoint, p: &ModelParams) -> Result<f64> {
    let s = charts::delaunay_to_cartesian(dp, p.gamma)?;
    Ok(model::h6(&s.q, p.beta) / (4.0 * s.rho()))
}

/// Same function written directly on the Kepler ellipse; no chart singularities.
pub fn perturbation_closed(dp: &DelaunayPoint, p: &ModelParams) -> Result<f64> {
    let m = Momenta::new(dp.L, dp.G, dp.U1, dp.U3, p.gamma)?;
    let big_e = charts::kepler_solve(dp.ell, m.e);
    let (se, ce) = big_e.sin_cos();
    let rho = m.a * (1.0 - m.e * ce);
    let (sg, cg) = dp.g.sin_cos();
    let x = m.c1 * m.c2 * rho + m.s1 * m.s2 * (cg * m.a * (ce - m.e) - sg * m.a * m.eta * se);
    Ok(0.25 * (rho * rho + p.alpha() * x * x))
}

/// Trapezoidal mean of a 2π-periodic function over `n` equispaced nodes.
pub fn average_over_ell<F: FnMut(f64) -> f64>(mut f: F, n: usize) -> f64 {
    let n = n.max(1);
    (0..n).map(|k| f(TAU * k as f64 / n as f64)).sum::<f64>() / n as f64
}

pub fn try_average_over_ell<F: FnMut(f64) -> Result<f64>>(mut f: F, n: usize) -> Result<f64> {
    let n = n.max(1);
    let mut acc = 0.0;
    for k in 0..n {
        acc += f(TAU * k as f64 / n as f64)?;
    }
    Ok(acc / n as f64)
}

/// State functions of the momenta.
#[derive(Debug, Clone, Copy)]
struct Momenta {
    a: f64,
    eta: f64,
    e: f64,
    c1: f64,
    c2: f64,
    s1: f64,
    s2: f64,
}

impl Momenta {
    #[allow(non_snake_case)]
    fn new(L: f64, G: f64, U1: f64, U3: f64, gamma: f64) -> Result<Self> {
        check_momenta(L, G, U1, U3, gamma)?;
        let eta = (G / L).min(1.0);
        let (c1, c2) = (U1 / G, U3 / G);
        Ok(Momenta {
            a: L * L / gamma,
            eta,
            e: (1.0 - eta * eta).max(0.0).sqrt(),
            c1,
            c2,
            s1: (1.0 - c1 * c1).max(0.0).sqrt(),
            s2: (1.0 - c2 * c2).max(0.0).sqrt(),
        })
    }
}

#[allow(non_snake_case)]
fn check_momenta(L: f64, G: f64, U1: f64, U3: f64, gamma: f64) -> Result<()> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
    }
    if !(G > 0.0) || !(L > 0.0) || G > L * (1.0 + 1e-12) {
        return Err(Error::OutOfDomain(format!("need 0 < G ≤ L (L = {L}, G = {G})")));
    }
    if U1.abs() > G || U3.abs() > G {
        return Err(Error::OutOfDomain(format!("need |U1|, |U3| ≤ G (U1 = {U1}, U3 = {U3}, G = {G})")));
    }
    Ok(())
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NFCoefficientsOrder1 {
    pub C01: f64,
    pub C11: f64,
    pub C21: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NFCoefficientsOrder2 {
    pub C02: f64,
    pub C12: f64,
    pub C22: f64,
    pub C32: f64,
    pub C42: f64,
}

impl NFCoefficientsOrder2 {
    pub fn as_array(&self) -> [f64; 5] {
        [self.C02, self.C12, self.C22, self.C32, self.C42]
    }
}

/// Shared state functions for the closed forms, generic so momentum partials can be exact.
struct Shape<T> {
    a: T,
    inv_l2: T,
    e: T,
    e2: T,
    c1c2: T,
    x1: T,
    x2: T,
    s1s2: T,
    ss2: T,
}

#[allow(non_snake_case)]
fn shape<T: Scalar>(L: T, G: T, U1: T, U3: T, gamma: f64) -> Shape<T> {
    let one = T::cst(1.0);
    let eta = G / L;
    let e2 = one - eta * eta;
    let (x1, x2) = ((U1 / G).sq(), (U3 / G).sq());
    shape_with(L, G, e2.sqrt(), e2, U1, U3, one - x1, one - x2, gamma)
}

/// `sx1 = 1 − (U1/G)²`, `sx2 = 1 − (U3/G)²`.
#[allow(non_snake_case, clippy::too_many_arguments)]
fn shape_with<T: Scalar>(L: T, G: T, e: T, e2: T, U1: T, U3: T, sx1: T, sx2: T, gamma: f64) -> Shape<T> {
    let one = T::cst(1.0);
    let (c1, c2) = (U1 / G, U3 / G);
    let (x1, x2) = (c1 * c1, c2 * c2);
    let ss2 = sx1 * sx2;
    Shape { a: (L * L).scale(1.0 / gamma), inv_l2: one / (L * L), e, e2, c1c2: c1 * c2, x1, x2, s1s2: ss2.sqrt(), ss2 }
}

/// `[C01, C11, C21]` for momenta of any scalar type.
#[allow(non_snake_case)]
pub fn order1_generic<T: Scalar>(L: T, G: T, U1: T, U3: T, gamma: f64, beta: f64) -> [T; 3] {
    order1_from_shape(shape(L, G, U1, U3, gamma), beta)
}

/// As [`order1_generic`] with `e`, `1 − (U1/G)²` and `1 − (U3/G)²` supplied by
/// the caller. Recomputed from rounded momenta they keep few digits near
/// `G = L` or `|U_i| = G`.
#[allow(non_snake_case, clippy::too_many_arguments)]
pub fn order1_with_gaps<T: Scalar>(L: T, G: T, U1: T, U3: T, e: T, sx1: T, sx2: T, gamma: f64, beta: f64) -> [T; 3] {
    order1_from_shape(shape_with(L, G, e, e * e, U1, U3, sx1, sx2, gamma), beta)
}

fn order1_from_shape<T: Scalar>(s: Shape<T>, beta: f64) -> [T; 3] {
    let alpha = beta * beta - 1.0;
    let a2 = s.a * s.a;
    let c01 =
        (a2 * (T::cst(2.0) + s.e2.scale(3.0)) * (T::cst(2.0) + (s.x1 * s.x2).scale(2.0 * alpha) + s.ss2.scale(alpha)))
            .scale(1.0 / 16.0);
    let c11 = (a2 * (T::cst(4.0) + s.e2) * s.e * s.c1c2 * s.s1s2).scale(-0.25 * alpha);
    let c21 = (a2 * s.e2 * s.ss2).scale(5.0 / 16.0 * alpha);
    [c01, c11, c21]
}

#[allow(non_snake_case)]
pub fn order1_coeffs(L: f64, G: f64, U1: f64, U3: f64, gamma: f64, beta: f64) -> Result<NFCoefficientsOrder1> {
    check_momenta(L, G, U1, U3, gamma)?;
    let [C01, C11, C21] = order1_generic(L, G, U1, U3, gamma, beta);
    Ok(NFCoefficientsOrder1 { C01, C11, C21 })
}

/// Evaluate `Σ coef · α^i x1^j x2^k y^m`.
fn poly<T: Scalar>(table: &[(f64, u32, u32, u32, u32)], alpha: f64, x1: T, x2: T, y: T) -> T {
    let mut acc = T::cst(0.0);
    for &(c, i, j, k, m) in table {
        acc = acc + (x1.powi(j) * x2.powi(k) * y.powi(m)).scale(c * alpha.powi(i as i32));
    }
    acc
}

/// Second-order kernel `⟨{H1 + ⟨H1⟩, W1}⟩` as `[k0..k4]`, the coefficients of `cos(k g)`.
#[allow(non_snake_case)]
pub fn order2_generic<T: Scalar>(L: T, G: T, U1: T, U3: T, gamma: f64, beta: f64) -> [T; 5] {
    let al = beta * beta - 1.0;
    let s = shape(L, G, U1, U3, gamma);
    let a6l = s.a.powi(6) * s.inv_l2;
    let (x1, x2, y) = (s.x1, s.x2, s.e2);
    let k0 = a6l * poly(order2_tables::POLY0, al, x1, x2, y).scale(1.0 / 3072.0);
    let k1 = a6l * s.c1c2 * s.e * s.s1s2 * poly(order2_tables::POLY1, al, x1, x2, y).scale(-al / 384.0);
    let k2 = a6l * y * s.ss2 * poly(order2_tables::POLY2, al, x1, x2, y).scale(al / 768.0);
    let k3 = a6l * s.c1c2 * s.e * y * s.s1s2 * s.ss2 * (y.scale(11.0) - T::cst(52.0)).scale(-5.0 * al * al / 384.0);
    let k4 = a6l * y * y * (s.ss2 * s.ss2).scale(-205.0 * al * al / 3072.0);
    [k0, k1, k2, k3, k4]
}

/// Second-order kernel coefficients, derived by Lie-transform averaging and
/// checked against `second_order_oracle`.
#[allow(non_snake_case)]
pub fn order2_coeffs(L: f64, G: f64, U1: f64, U3: f64, gamma: f64, beta: f64) -> Result<NFCoefficientsOrder2> {
    check_momenta(L, G, U1, U3, gamma)?;
    let [C02, C12, C22, C32, C42] = order2_generic(L, G, U1, U3, gamma, beta);
    Ok(NFCoefficientsOrder2 { C02, C12, C22, C32, C42 })
}

/// `Λ_{n,i} = c1² + (−1)^i c2² + (−1)^i n c1² c2²`.
pub fn lambda(n: f64, i: i32, x1: f64, x2: f64) -> f64 {
    let sgn = if i % 2 == 0 { 1.0 } else { -1.0 };
    x1 + sgn * x2 + sgn * n * x1 * x2
}

/// The second-order coefficients in their commonly printed form. They do not
/// agree with the oracle; kept for comparison only.
#[allow(non_snake_case)]
pub fn order2_coeffs_printed(L: f64, G: f64, U1: f64, U3: f64, gamma: f64, beta: f64) -> Result<NFCoefficientsOrder2> {
    let m = Momenta::new(L, G, U1, U3, gamma)?;
    let al = beta * beta - 1.0;
    let a2 = al * al;
    let (x1, x2) = (m.c1 * m.c1, m.c2 * m.c2);
    let (e, ss) = (m.e, m.s1 * m.s2);
    let e2 = e * e;
    let l31 = lambda(3.0, 1, x1, x2);
    let l21 = lambda(2.0, 1, x1, x2);
    let l52 = lambda(5.0, 2, x1, x2);
    let p = x1 * x2;
    let q = x1 * x1 + x2 * x2;
    let mixed = x2 * x2 * x1 + x2 * x1 * x1;
    let C02 = -60.0 * a2 * p * ss * ss * e2.powi(3)
        + (a2 / 8.0 * (1139.0 * p * p - 1486.0 * mixed + 579.0 * q + 1268.0 * p - 518.0 * (x1 + 2.0 * x2) - 61.0)
            + 63.0 * (al * l31 - 1.0))
            * e2
            * e2
        + (a2 * (2089.0 * p * p - 1756.0 * mixed + 399.0 * q + 2048.0 * p - 628.0 * (x1 + x2) + 229.0)
            - 396.0 * (al * l31 - 1.0))
            * e2
        + (a2 * (557.0 * p * p - 382.0 * mixed + 17.0 * q + 308.0 * p - 22.0 * (x1 + x2) + 5.0)
            - 96.0 * (al * l31 - 1.0));
    let C12 = m.c1
        * m.c2
        * ss
        * ((-155.0 * a2 * (l21 + 41.0 * p + 36.0) + 192.0) * e.powi(5)
            - (447.0 * a2 * (l21 - 19.0 * p - 290.0) + 708.0 * al + 2.0) * e.powi(3)
            - (67.0 * a2 * (l21 + p + 27.0) - 1200.0 * al - 16.0) * e);
    let C22 = ss
        * (-60.0 * a2 * p * e.powi(6)
            + (-a2 / 2.0 * (71.0 * l52 + 8.0 * p - 14.0) - 57.0 * al) * e.powi(4)
            + (a2 * (-147.0 * l21 + 25.0 * p - 66.0) + 486.0 * al + 3.0) * e2);
    let C32 = m.c1 * m.c2 * (ss * ss * ss) * a2 * (85.0 * e.powi(5) + 10.0 * e.powi(3));
    let C42 = -95.0 / 8.0 * a2 * ss * ss * e.powi(4);
    Ok(NFCoefficientsOrder2 { C02, C12, C22, C32, C42 })
}

/// First-order generator, zero-mean primitive in `ℓ` of `(L³/γ²)(H1 − ⟨H1⟩)`.
pub fn w1(dp: &DelaunayPoint, p: &ModelParams) -> Result<f64> {
    let m = Momenta::new(dp.L, dp.G, dp.U1, dp.U3, p.gamma)?;
    let al = p.alpha();
    let (e, eta) = (m.e, m.eta);
    let (ss, cc) = (m.s1 * m.s2, m.c1 * m.c2);
    let (sg, cg) = dp.g.sin_cos();
    let (e2, e3, e4) = (e * e, e * e * e, e * e * e * e);
    let eta2 = eta * eta;
    let cst = -al * e * eta * ss * sg * (-cc * e2 - 4.0 * cc + 5.0 * cg * e * ss) / 16.0;
    let c1 = -al * eta * ss * sg * (-cc * e2 - 4.0 * cc + 5.0 * cg * e * ss) / 8.0;
    let s1 = (3.0 * al * cc * cc * e3 - 8.0 * al * cc * cc * e - 4.0 * al * cc * cg * e4 * ss
        + 6.0 * al * cc * cg * e2 * ss
        + 8.0 * al * cc * cg * ss
        + 4.0 * al * cg * cg * e3 * ss * ss
        - 9.0 * al * cg * cg * e * ss * ss
        + al * e * eta2 * ss * ss * sg * sg
        + 3.0 * e3
        - 8.0 * e)
        / 16.0;
    let c2 = al * eta * ss * sg * (-2.0 * cc * e + cg * (1.0 + e2) * ss) / 8.0;
    let s2 = (3.0 * al * cc * cc * e2 - 2.0 * al * cc * cg * e3 * ss - 4.0 * al * cc * cg * e * ss
        + 2.0 * al * cg * cg * e2 * ss * ss
        + al * cg * cg * ss * ss
        - al * eta2 * ss * ss * sg * sg
        + 3.0 * e2)
        / 16.0;
    let c3 = -al * e * eta * ss * sg * (-cc * e + cg * ss) / 24.0;
    let s3 = -e
        * (al * cc * cc * e2 - 2.0 * al * cc * cg * e * ss + al * cg * cg * ss * ss - al * eta2 * ss * ss * sg * sg
            + e2)
        / 48.0;
    let big_e = charts::kepler_solve(dp.ell, e);
    let h = |k: f64| (k * big_e).sin_cos();
    let ((sn1, cs1), (sn2, cs2), (sn3, cs3)) = (h(1.0), h(2.0), h(3.0));
    let br = cst + c1 * cs1 + s1 * sn1 + c2 * cs2 + s2 * sn2 + c3 * cs3 + s3 * sn3;
    Ok(m.a.powi(4) / dp.L * br)
}

/// `∂W1/∂ℓ · γ²/L³ − (H1 − ⟨H1⟩)`; derivative by a five-point stencil.
pub fn homological_residual(dp: &DelaunayPoint, p: &ModelParams, quadrature_n: usize) -> Result<f64> {
    let h = 1e-3;
    let at = |k: f64| w1(&DelaunayPoint { ell: dp.ell + k * h, ..*dp }, p);
    let dw = (-at(2.0)? + 8.0 * at(1.0)? - 8.0 * at(-1.0)? + at(-2.0)?) / (12.0 * h);
    let mean = try_average_over_ell(|l| perturbation_delaunay(&DelaunayPoint { ell: l, ..*dp }, p), quadrature_n)?;
    let h1 = perturbation_delaunay(dp, p)?;
    Ok(dw * p.gamma * p.gamma / dp.L.powi(3) - (h1 - mean))
}

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    pub g_nodes: usize,
    pub ell_nodes: usize,
    pub avg_nodes: usize,
    pub h: f64,
    pub tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { g_nodes: 16, ell_nodes: 256, avg_nodes: 256, h: 1e-3, tol: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Coefficients of `cos(k g)`, `k = 0..4`.
    pub cos: [f64; 5],
    /// Coefficients of `sin(k g)`; `sin[0]` is always 0.
    pub sin: [f64; 5],
    /// Largest `|cos(k g)|` coefficient for `k = 5..g_nodes/2`.
    pub higher: f64,
    pub error_estimate: f64,
}

/// Canonical bracket in `(ℓ, g; L, G)` of `F = H1 + ⟨H1⟩` and `W1` along a
/// g-circle, Fourier-analyzed in g.
#[allow(non_snake_case)]
fn oracle_pass(
    L: f64,
    G: f64,
    U1: f64,
    U3: f64,
    p: &ModelParams,
    o: &OracleOptions,
    h: f64,
    ell_nodes: usize,
) -> Result<([f64; 5], [f64; 5], f64)> {
    let point = |ell: f64, g: f64, L: f64, G: f64| DelaunayPoint { ell, g, u1: 0.0, u3: 0.0, L, G, U1, U3 };
    let stencil_h = |f: &dyn Fn(f64) -> Result<f64>, h: f64| -> Result<f64> {
        Ok((-f(2.0 * h)? + 8.0 * f(h)? - 8.0 * f(-h)? + f(-2.0 * h)?) / (12.0 * h))
    };
    // e is not smooth at G = L; keep momentum steps well inside L − G
    let hm = h.min(0.02 * (L - G) * h / o.h);
    let stencil = |f: &dyn Fn(f64) -> Result<f64>| stencil_h(f, h);
    let stencil_m = |f: &dyn Fn(f64) -> Result<f64>| stencil_h(f, hm);
    let mean =
        |g: f64, L: f64, G: f64| try_average_over_ell(|l| perturbation_delaunay(&point(l, g, L, G), p), o.avg_nodes);
    let ng = o.g_nodes;
    let mut values = Vec::with_capacity(ng);
    for j in 0..ng {
        let g = TAU * j as f64 / ng as f64;
        // ⟨H1⟩ does not depend on ℓ
        let dm_dg = stencil(&|d| mean(g + d, L, G))?;
        let dm_dl = stencil_m(&|d| mean(g, L + d, G))?;
        let dm_dgg = stencil_m(&|d| mean(g, L, G + d))?;
        let mut acc = 0.0;
        for k in 0..ell_nodes {
            let ell = TAU * k as f64 / ell_nodes as f64;
            let pf =
                |dl: f64, dg: f64, dL: f64, dG: f64| perturbation_delaunay(&point(ell + dl, g + dg, L + dL, G + dG), p);
            let wf = |dl: f64, dg: f64, dL: f64, dG: f64| w1(&point(ell + dl, g + dg, L + dL, G + dG), p);
            let f_l = stencil(&|d| pf(d, 0.0, 0.0, 0.0))?;
            let f_g = stencil(&|d| pf(0.0, d, 0.0, 0.0))? + dm_dg;
            let f_bl = stencil_m(&|d| pf(0.0, 0.0, d, 0.0))? + dm_dl;
            let f_bg = stencil_m(&|d| pf(0.0, 0.0, 0.0, d))? + dm_dgg;
            let w_l = stencil(&|d| wf(d, 0.0, 0.0, 0.0))?;
            let w_g = stencil(&|d| wf(0.0, d, 0.0, 0.0))?;
            let w_bl = stencil_m(&|d| wf(0.0, 0.0, d, 0.0))?;
            let w_bg = stencil_m(&|d| wf(0.0, 0.0, 0.0, d))?;
            acc += f_l * w_bl - f_bl * w_l + f_g * w_bg - f_bg * w_g;
        }
        values.push(acc / ell_nodes as f64);
    }
    let mut cos = [0.0; 5];
    let mut sin = [0.0; 5];
    let coef = |k: usize, trig: fn(f64) -> f64| {
        let w = if k == 0 { 1.0 } else { 2.0 };
        w * values.iter().enumerate().map(|(j, v)| v * trig(k as f64 * TAU * j as f64 / ng as f64)).sum::<f64>()
            / ng as f64
    };
    for k in 0..5 {
        cos[k] = coef(k, f64::cos);
        sin[k] = coef(k, f64::sin);
    }
    let higher = (5..=ng / 2).map(|k| coef(k, f64::cos).abs()).fold(0.0, f64::max);
    Ok((cos, sin, higher))
}

/// Numerical second-order kernel: finite-difference brackets of `w1` and
/// `perturbation_delaunay`, averaged over `ℓ`, Fourier-analyzed in `g`.
/// The error estimate is the change when the stencil step is doubled and the
/// `ℓ` grid halved.
#[allow(non_snake_case)]
pub fn second_order_oracle(
    L: f64,
    G: f64,
    U1: f64,
    U3: f64,
    p: &ModelParams,
    o: &OracleOptions,
) -> Result<OracleResult> {
    check_momenta(L, G, U1, U3, p.gamma)?;
    let (cos, sin, higher) = oracle_pass(L, G, U1, U3, p, o, o.h, o.ell_nodes)?;
    let (cos2, sin2, _) = oracle_pass(L, G, U1, U3, p, o, 2.0 * o.h, o.ell_nodes / 2)?;
    let scale = cos.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    let diff =
        cos.iter().zip(cos2.iter()).chain(sin.iter().zip(sin2.iter())).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let error_estimate = diff / scale;
    if error_estimate > o.tol {
        return Err(Error::OracleTolerance { estimate: error_estimate, tol: o.tol });
    }
    Ok(OracleResult { cos, sin, higher, error_estimate })
}

/// Normalized kernel `Σ C_k cos kg` (plus `ε/2 Σ K_k cos kg` at order 2) with
/// exact partials in `(L, G, U1, U3)` and `g`.
#[derive(Debug, Clone, Copy)]
pub struct KernelValue {
    pub value: f64,
    /// `∂/∂(L, G, U1, U3)`.
    pub d_momenta: [f64; 4],
    pub d_g: f64,
}

pub fn kernel(dp: &DelaunayPoint, p: &ModelParams, order: u8) -> Result<KernelValue> {
    if order != 1 && order != 2 {
        return Err(Error::InvalidParameter(format!("order must be 1 or 2, got {order}")));
    }
    check_momenta(dp.L, dp.G, dp.U1, dp.U3, p.gamma)?;
    let v = |x: f64, i: usize| Dual::<4>::var(x, i);
    let (l, g, u1, u3) = (v(dp.L, 0), v(dp.G, 1), v(dp.U1, 2), v(dp.U3, 3));
    let mut coeffs: Vec<Dual<4>> = order1_generic(l, g, u1, u3, p.gamma, p.beta).to_vec();
    if order == 2 {
        let k2 = order2_generic(l, g, u1, u3, p.gamma, p.beta);
        coeffs.resize(5, Dual::constant(0.0));
        for (c, k) in coeffs.iter_mut().zip(k2.iter()) {
            *c = *c + k.scale(0.5 * p.epsilon);
        }
    }
    let mut out = KernelValue { value: 0.0, d_momenta: [0.0; 4], d_g: 0.0 };
    for (k, c) in coeffs.iter().enumerate() {
        let (s, cs) = (k as f64 * dp.g).sin_cos();
        out.value += c.v * cs;
        out.d_g -= k as f64 * c.v * s;
        for i in 0..4 {
            out.d_momenta[i] += c.d[i] * cs;
        }
    }
    let finite = out.value.is_finite() && out.d_g.is_finite() && out.d_momenta.iter().all(|x| x.is_finite());
    if !finite {
        return Err(Error::DegenerateEccentricity);
    }
    Ok(out)
}

/// Tangent of the normalized flow, in the same layout as `DelaunayPoint`.
pub fn normalized_rhs(dp: &DelaunayPoint, p: &ModelParams, order: u8) -> Result<DelaunayPoint> {
    let k = kernel(dp, p, order)?;
    let eps = p.epsilon;
    Ok(DelaunayPoint {
        ell: p.gamma * p.gamma / dp.L.powi(3) + eps * k.d_momenta[0],
        g: eps * k.d_momenta[1],
        u1: eps * k.d_momenta[2],
        u3: eps * k.d_momenta[3],
        L: 0.0,
        G: -eps * k.d_g,
        U1: 0.0,
        U3: 0.0,
    })
}

fn to_arr(d: &DelaunayPoint) -> [f64; 8] {
    [d.ell, d.g, d.u1, d.u3, d.L, d.G, d.U1, d.U3]
}

fn from_arr(x: &[f64]) -> DelaunayPoint {
    DelaunayPoint { ell: x[0], g: x[1], u1: x[2], u3: x[3], L: x[4], G: x[5], U1: x[6], U3: x[7] }
}

/// Integrate the normalized system and report the state at `times`.
pub fn integrate_normalized(
    dp0: &DelaunayPoint,
    p: &ModelParams,
    order: u8,
    times: &[f64],
    tol: f64,
) -> Result<Vec<(f64, DelaunayPoint)>> {
    normalized_rhs(dp0, p, order)?;
    let t_end = times.last().copied().unwrap_or(0.0);
    let mut out = Vec::with_capacity(times.len());
    let mut failure = None;
    ode::dopri5(
        |_, y, dy| match normalized_rhs(&from_arr(y), p, order) {
            Ok(t) => dy.copy_from_slice(&to_arr(&t)),
            Err(e) => {
                failure.get_or_insert(e);
                dy.iter_mut().for_each(|v| *v = f64::NAN);
            }
        },
        0.0,
        &to_arr(dp0),
        t_end,
        Output::At(times),
        &ode::Options::with_tol(tol),
        |t, y| out.push((t, from_arr(y))),
    )
    .map_err(|e| failure.clone().unwrap_or(e))?;
    Ok(out)
}

/// Mean `(g, G)` seen by the direct flow against the normalized flow.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowFlowSample {
    pub s: f64,
    pub g_direct: f64,
    pub G_direct: f64,
    pub g_normal: f64,
    pub G_normal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlowFlowComparison {
    pub epsilon: f64,
    /// `γ = h/4` for the energy `h` of the initial state.
    pub gamma: f64,
    pub period: f64,
    pub samples: Vec<SlowFlowSample>,
    /// `max (|ΔG| + G |Δg|)` over the samples.
    pub max_error: f64,
}

/// Unwrap an angle sequence so consecutive values differ by less than π.
fn unwrap(v: &mut [f64]) {
    for i in 1..v.len() {
        let d = v[i] - v[i - 1];
        v[i] -= TAU * (d / TAU).round();
    }
}

/// Compare the normalized flow of the given order with the direct regularized flow
/// over fictitious time `1/ε`.
///
/// The direct flow starts at the Cartesian image of `dp0`; `γ` is reset to
/// `H/4` there so the run stays on the zero level of the regularized
/// Hamiltonian. Osculating `(g, G, L, U1, U3)` are averaged over windows of one
/// Kepler period `T = 2π L³/γ²` (256 nodes); the first window's average seeds
/// the normalized flow at `s = T/2`, later windows are centred at `checks`
/// equally spaced times up to `1/ε`.
pub fn slow_flow_comparison(
    dp0: &DelaunayPoint,
    p: &ModelParams,
    order: u8,
    checks: usize,
    tol: f64,
) -> Result<SlowFlowComparison> {
    if !(p.epsilon > 0.0) {
        return Err(Error::InvalidParameter("slow-flow comparison needs epsilon > 0".into()));
    }
    let s0 = charts::delaunay_to_cartesian(dp0, p.gamma)?;
    let gamma = model::hamiltonian(&s0, p) / 4.0;
    let q = ModelParams { gamma, ..*p };
    let l0 = charts::cartesian_to_delaunay(&s0, gamma)?.L;
    let period = TAU * l0.powi(3) / (gamma * gamma);
    let nodes = 256;
    let horizon = 1.0 / p.epsilon;
    let checks = checks.max(1);
    let centres: Vec<f64> =
        std::iter::once(0.5 * period).chain((1..=checks).map(|k| horizon * k as f64 / checks as f64)).collect();
    let mut times = Vec::with_capacity(centres.len() * nodes);
    for c in &centres {
        for j in 0..nodes {
            times.push(c - 0.5 * period + period * j as f64 / nodes as f64);
        }
    }
    let traj = model::integrate_regularized_at(&s0, &q, &times, tol)?;
    let osc: Vec<DelaunayPoint> =
        traj.points.iter().map(|pt| charts::cartesian_to_delaunay(&pt.state, gamma)).collect::<Result<_>>()?;
    let means: Vec<DelaunayPoint> = osc
        .chunks(nodes)
        .map(|w| {
            let mut g: Vec<f64> = w.iter().map(|d| d.g).collect();
            unwrap(&mut g);
            let avg = |f: &dyn Fn(&DelaunayPoint) -> f64| w.iter().map(f).sum::<f64>() / nodes as f64;
            DelaunayPoint {
                ell: w[0].ell,
                g: g.iter().sum::<f64>() / nodes as f64,
                u1: w[0].u1,
                u3: w[0].u3,
                L: avg(&|d| d.L),
                G: avg(&|d| d.G),
                U1: avg(&|d| d.U1),
                U3: avg(&|d| d.U3),
            }
        })
        .collect();
    let start = means[0];
    let rel: Vec<f64> = centres[1..].iter().map(|c| c - centres[0]).collect();
    let nf = integrate_normalized(&start, &q, order, &rel, tol)?;
    let mut samples = Vec::with_capacity(checks);
    let mut max_error: f64 = 0.0;
    for (k, (_, d)) in nf.iter().enumerate() {
        let m = &means[k + 1];
        let dg = charts::wrap_pi(d.g - m.g);
        let err = (d.G - m.G).abs() + m.G * dg.abs();
        max_error = max_error.max(err);
        samples.push(SlowFlowSample { s: centres[k + 1], g_direct: m.g, G_direct: m.G, g_normal: d.g, G_normal: d.G });
    }
    Ok(SlowFlowComparison { epsilon: p.epsilon, gamma, period, samples, max_error })
}
