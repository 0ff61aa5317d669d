//! Quadratic invariants, the reduced spaces they cut out, and the flow on the
//! thrice-reduced surface `4N² + 4S² = f(K)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CartesianState, IntegralValues};
use crate::ode::{self, Output};
use crate::scalar::{Dual, Scalar};

/// `π1..π16`; `pi[0]` is `π1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiVector {
    pub pi: [f64; 16],
}

impl PiVector {
    /// One-based access, `get(11)` is `π11`.
    pub fn get(&self, i: usize) -> f64 {
        self.pi[i - 1]
    }

    /// Largest violation of `sym_ij² + anti_ij² = π_i π_j` over the six pairs.
    pub fn identity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, (i, j)) in PAIRS.iter().enumerate() {
            let sym = self.pi[4 + k];
            let anti = self.pi[10 + k];
            let r = sym * sym + anti * anti - self.pi[*i] * self.pi[*j];
            worst = worst.max(r.abs());
        }
        worst
    }
}

const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

fn pi_generic<T: Scalar>(x: &[T; 8]) -> [T; 16] {
    let q = &x[..4];
    let m = &x[4..];
    let mut out = [T::cst(0.0); 16];
    for i in 0..4 {
        out[i] = m[i] * m[i] + q[i] * q[i];
    }
    for (k, &(i, j)) in PAIRS.iter().enumerate() {
        out[4 + k] = m[i] * m[j] + q[i] * q[j];
        out[10 + k] = q[i] * m[j] - m[i] * q[j];
    }
    out
}

pub fn pi_map(s: &CartesianState) -> PiVector {
    PiVector { pi: pi_generic(&s.to_array()) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct KLJVector {
    pub h2: f64,
    pub xi: f64,
    pub k: [f64; 3],
    pub l: [f64; 3],
    pub j: [f64; 8],
}

fn klj_generic<T: Scalar>(p: &[T; 16]) -> (T, T, [T; 3], [T; 3], [T; 8]) {
    let pi = |i: usize| p[i - 1];
    let half = T::cst(0.5);
    let h2 = half * (pi(1) + pi(2) + pi(3) + pi(4));
    let xi = pi(16) + pi(11);
    let k = [half * (pi(3) + pi(4) - pi(1) - pi(2)), pi(8) - pi(7), -pi(6) - pi(9)];
    let l = [pi(16) - pi(11), pi(12) + pi(15), pi(14) - pi(13)];
    let j = [
        half * (pi(1) - pi(2) - pi(3) + pi(4)),
        half * (pi(1) - pi(2) + pi(3) - pi(4)),
        pi(8) + pi(7),
        pi(5) + pi(10),
        pi(5) - pi(10),
        pi(6) - pi(9),
        pi(12) - pi(15),
        pi(14) + pi(13),
    ];
    (h2, xi, k, l, j)
}

pub fn klj_map(pv: &PiVector) -> KLJVector {
    let (h2, xi, k, l, j) = klj_generic(&pv.pi);
    KLJVector { h2, xi, k, l, j }
}

/// `(Σ K_i² + Σ L_i² − H2² − Ξ², Σ K_i L_i − H2 Ξ)`.
pub fn second_space_residuals(kv: &KLJVector) -> (f64, f64) {
    let sq = |v: &[f64; 3]| v.iter().map(|x| x * x).sum::<f64>();
    let r1 = sq(&kv.k) + sq(&kv.l) - kv.h2 * kv.h2 - kv.xi * kv.xi;
    let r2 = kv.k.iter().zip(kv.l.iter()).map(|(a, b)| a * b).sum::<f64>() - kv.h2 * kv.xi;
    (r1, r2)
}

/// Orbit map of the `Ξ` action: `(K1, K2, K3, L1, L2, L3, H2, Ξ)`.
pub fn orbit_map_2(pv: &PiVector) -> [f64; 8] {
    let kv = klj_map(pv);
    [kv.k[0], kv.k[1], kv.k[2], kv.l[0], kv.l[1], kv.l[2], kv.h2, kv.xi]
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThriceReducedPoint {
    pub M: f64,
    pub N: f64,
    pub Z: f64,
    pub S: f64,
    pub K: f64,
    pub iv: IntegralValues,
}

#[allow(non_snake_case)]
fn thrice_generic<T: Scalar>(k: &[T; 3], l: &[T; 3]) -> [T; 5] {
    let half = T::cst(0.5);
    let M = half * (k[1] * k[1] + k[2] * k[2] + l[1] * l[1] + l[2] * l[2]);
    let N = half * (k[1] * k[1] + k[2] * k[2] - l[1] * l[1] - l[2] * l[2]);
    let Z = k[1] * l[1] + k[2] * l[2];
    let S = k[1] * l[2] - k[2] * l[1];
    [M, N, Z, S, k[0]]
}

pub fn thrice_map(kv: &KLJVector) -> ThriceReducedPoint {
    let [m, n, z, s, k] = thrice_generic(&kv.k, &kv.l);
    ThriceReducedPoint { M: m, N: n, Z: z, S: s, K: k, iv: IntegralValues::new(kv.h2, kv.xi, kv.l[0]) }
}

/// Orbit map of the `L1` action.
pub fn orbit_map_3(kv: &KLJVector) -> ThriceReducedPoint {
    thrice_map(kv)
}

pub fn thrice_reduced_point(s: &CartesianState) -> ThriceReducedPoint {
    thrice_map(&klj_map(&pi_map(s)))
}

impl ThriceReducedPoint {
    /// Point on the reduced surface at height `k` and azimuth `angle` in the `(N, S)` plane.
    pub fn on_surface(iv: IntegralValues, k: f64, angle: f64) -> Result<Self> {
        let f = f_of_k(k, &iv);
        if f < 0.0 {
            return Err(Error::OutOfDomain(format!("f(K) < 0 at K = {k}")));
        }
        let r = 0.5 * f.sqrt();
        let (n, s) = (r * angle.cos(), r * angle.sin());
        Ok(ThriceReducedPoint {
            M: 0.5 * (iv.n * iv.n + iv.xi * iv.xi - k * k - iv.l * iv.l),
            N: n,
            Z: iv.n * iv.xi - k * iv.l,
            S: s,
            K: k,
            iv,
        })
    }

    /// Residuals of the five defining relations, in the order
    /// `K² + l² + 2M − n² − ξ²`, `K l + Z − n ξ`, `M² − N² − Z² − S²`.
    pub fn relation_residuals(&self) -> [f64; 3] {
        let iv = &self.iv;
        [
            self.K * self.K + iv.l * iv.l + 2.0 * self.M - iv.n * iv.n - iv.xi * iv.xi,
            self.K * iv.l + self.Z - iv.n * iv.xi,
            self.M * self.M - self.N * self.N - self.Z * self.Z - self.S * self.S,
        ]
    }

    pub fn casimir(&self) -> f64 {
        4.0 * self.N * self.N + 4.0 * self.S * self.S - f_of_k(self.K, &self.iv)
    }
}

/// Index order used by the bracket table: `M, N, Z, S, K, L1`.
pub const TABLE_NAMES: [&str; 6] = ["M", "N", "Z", "S", "K", "L1"];

/// The closed-form Lie–Poisson table, with an optional sign flip used to check
/// that verification actually detects a wrong entry.
#[derive(Debug, Clone, Copy, Default)]
pub struct BracketTable {
    pub flip: Option<(usize, usize)>,
}

impl BracketTable {
    /// `{f_i, f_j}` for the invariants `f = (M, N, Z, S, K, L1)` with values `v`.
    pub fn entry(&self, i: usize, j: usize, v: &[f64; 6]) -> f64 {
        let [m, n, z, s, k, l] = *v;
        let km = k * m - l * z;
        let t = [
            [0.0, 4.0 * k * s, 0.0, -4.0 * k * n, 0.0, 0.0],
            [-4.0 * k * s, 0.0, -4.0 * l * s, -4.0 * km, 4.0 * s, 0.0],
            [0.0, 4.0 * l * s, 0.0, -4.0 * l * n, 0.0, 0.0],
            [4.0 * k * n, 4.0 * km, 4.0 * l * n, 0.0, -4.0 * n, 0.0],
            [0.0, -4.0 * s, 0.0, 4.0 * n, 0.0, 0.0],
            [0.0; 6],
        ];
        let x = t[i][j];
        match self.flip {
            Some((a, b)) if (a, b) == (i, j) || (a, b) == (j, i) => -x,
            _ => x,
        }
    }
}

/// Values and exact gradients of `(M, N, Z, S, K, L1)` with respect to `(q, Q)`.
fn table_functions(s: &CartesianState) -> [Dual<8>; 6] {
    let x = s.to_array();
    let xd: [Dual<8>; 8] = std::array::from_fn(|i| Dual::var(x[i], i));
    let p = pi_generic(&xd);
    let (_, _, k, l, _) = klj_generic(&p);
    let [m, n, z, sv, kk] = thrice_generic(&k, &l);
    [m, n, z, sv, kk, l[0]]
}

/// Canonical bracket `Σ ∂f/∂q ∂g/∂Q − ∂f/∂Q ∂g/∂q`.
pub fn canonical_bracket(df: &[f64; 8], dg: &[f64; 8]) -> f64 {
    (0..4).map(|i| df[i] * dg[i + 4] - df[i + 4] * dg[i]).sum()
}

/// All 36 brackets computed by the chain rule, and the table values.
pub fn bracket_matrix(s: &CartesianState, table: &BracketTable) -> ([[f64; 6]; 6], [[f64; 6]; 6]) {
    let f = table_functions(s);
    let v: [f64; 6] = std::array::from_fn(|i| f[i].v);
    let mut num = [[0.0; 6]; 6];
    let mut tab = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            num[i][j] = canonical_bracket(&f[i].d, &f[j].d);
            tab[i][j] = table.entry(i, j, &v);
        }
    }
    (num, tab)
}

/// Largest `|computed − table|` over the 15 independent pairs.
pub fn bracket_table_check_with(s: &CartesianState, table: &BracketTable) -> f64 {
    let (num, tab) = bracket_matrix(s, table);
    let mut worst: f64 = 0.0;
    for i in 0..6 {
        for j in (i + 1)..6 {
            worst = worst.max((num[i][j] - tab[i][j]).abs());
        }
    }
    worst
}

pub fn bracket_table_check(s: &CartesianState) -> f64 {
    bracket_table_check_with(s, &BracketTable::default())
}

/// `((n+ξ)² − (K+l)²)((n−ξ)² − (K−l)²)`.
pub fn f_of_k(k: f64, iv: &IntegralValues) -> f64 {
    let (n, xi, l) = (iv.n, iv.xi, iv.l);
    ((n + xi).powi(2) - (k + l).powi(2)) * ((n - xi).powi(2) - (k - l).powi(2))
}

/// The four roots of `f`, `(k1, k2, k3, k4)`.
pub fn f_roots(iv: &IntegralValues) -> [f64; 4] {
    let (n, xi, l) = (iv.n, iv.xi, iv.l);
    [-l - n - xi, l + n - xi, l - n + xi, -l + n + xi]
}

/// Interval of `K` on which `f(K) ≥ 0` and the reduced surface lives.
pub fn feasible_interval(iv: &IntegralValues) -> Result<(f64, f64)> {
    let empty = || Error::EmptyReducedSpace { n: iv.n, xi: iv.xi, l: iv.l };
    if !(iv.n > 0.0) || !iv.xi.is_finite() || !iv.l.is_finite() {
        return Err(empty());
    }
    let [k1, k2, k3, k4] = f_roots(iv);
    let (l, xi) = (iv.l, iv.xi);
    let interval = if l < xi && -l < xi {
        Some((k3, k2))
    } else if l > xi && -l < xi {
        Some((k3, k4))
    } else if l < xi && -l > xi {
        Some((k1, k2))
    } else if l > xi && -l > xi {
        Some((k1, k4))
    } else {
        None
    };
    let (lo, hi) = match interval {
        Some(iv) => iv,
        None => tie_interval(iv, [k1, k2, k3, k4]),
    };
    if lo > hi {
        return Err(empty());
    }
    Ok((lo, hi))
}

/// `l = ±ξ`: pick, by a sign scan of `f`, the gap between consecutive roots on which `f ≥ 0`.
fn tie_interval(iv: &IntegralValues, roots: [f64; 4]) -> (f64, f64) {
    let mut r = roots.to_vec();
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    r.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));
    let scale = iv.n * iv.n * iv.n * iv.n;
    let mut best = (r[0], r[0]);
    for w in r.windows(2) {
        let (a, b) = (w[0], w[1]);
        let ok = (1..1000).all(|i| {
            let k = a + (b - a) * i as f64 / 1000.0;
            f_of_k(k, iv) >= -1e-12 * scale
        });
        if ok && b - a > best.1 - best.0 {
            best = (a, b);
        }
    }
    best
}

/// Thrice-reduced Hamiltonian (first-order normal form of `H6`).
pub fn reduced_h3(pt: &ThriceReducedPoint, beta: f64) -> f64 {
    let IntegralValues { n, xi, l } = pt.iv;
    let b2 = beta * beta;
    0.75 * n * (3.0 * b2 - 2.0) * pt.K * pt.K
        + xi * l * (1.0 - b2) * pt.K
        + 0.5 * n * (4.0 - b2) * pt.N
        + n.powi(3) * (1.5 + 0.25 * b2)
        - (l * l + xi * xi) * (0.5 * b2 + 1.0) * 0.5 * n
}

/// `(dK/dt, dN/dt, dS/dt)` from the bracket table and `reduced_h3`.
pub fn reduced_rhs(k: f64, n_: f64, s: f64, iv: &IntegralValues, beta: f64) -> [f64; 3] {
    let IntegralValues { n, xi, l } = *iv;
    let b2 = beta * beta;
    let dh_dk = 1.5 * n * (3.0 * b2 - 2.0) * k + xi * l * (1.0 - b2);
    let dh_dn = 0.5 * n * (4.0 - b2);
    let m = 0.5 * (n * n + xi * xi - k * k - l * l);
    let z = n * xi - k * l;
    [-4.0 * dh_dn * s, 4.0 * dh_dk * s, -4.0 * dh_dk * n_ + 4.0 * dh_dn * (k * m - l * z)]
}

/// The three right-hand sides exactly as they are usually printed; kept to
/// document that the `dS/dt` line disagrees with the bracket table.
pub fn reduced_rhs_as_printed(k: f64, n_: f64, s: f64, iv: &IntegralValues, beta: f64) -> [f64; 3] {
    let IntegralValues { n, xi, l } = *iv;
    let b2 = beta * beta;
    [
        2.0 * n * (b2 - 4.0) * s,
        2.0 * (3.0 * n * (3.0 * b2 - 2.0) * k + 2.0 * xi * l * (1.0 - b2)) * s,
        n * (b2 - 4.0) * (k * k - (xi * xi + l * l + n * n)) * k
            - (3.0 * b2 - 2.0) * (6.0 * n * k * n_ + 4.0 * xi * l * (b2 - 1.0) * n_ + 2.0 * l * n * n * xi),
    ]
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedSample {
    pub t: f64,
    pub K: f64,
    pub N: f64,
    pub S: f64,
    pub h3: f64,
    pub casimir: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReducedTrajectory {
    pub samples: Vec<ReducedSample>,
}

impl ReducedTrajectory {
    pub fn max_casimir_drift(&self) -> f64 {
        let c0 = self.samples.first().map(|s| s.casimir).unwrap_or(0.0);
        self.samples.iter().map(|s| (s.casimir - c0).abs()).fold(0.0, f64::max)
    }

    pub fn max_h3_drift(&self) -> f64 {
        let h0 = self.samples.first().map(|s| s.h3).unwrap_or(0.0);
        self.samples.iter().map(|s| (s.h3 - h0).abs()).fold(0.0, f64::max)
    }

    pub fn max_k_drift(&self) -> f64 {
        let k0 = self.samples.first().map(|s| s.K).unwrap_or(0.0);
        self.samples.iter().map(|s| (s.K - k0).abs()).fold(0.0, f64::max)
    }
}

fn reduced_run(
    pt0: &ThriceReducedPoint,
    beta: f64,
    t_end: f64,
    tol: f64,
    output: Output<'_>,
) -> Result<ReducedTrajectory> {
    let scale = pt0.iv.n.powi(4).max(1.0);
    if pt0.casimir().abs() > 1e-10 * scale {
        return Err(Error::OutOfDomain(format!(
            "initial point is off the reduced surface (casimir {:e})",
            pt0.casimir()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be > 0, got {tol}")));
    }
    let iv = pt0.iv;
    let mut out = ReducedTrajectory::default();
    ode::dopri5(
        |_, y, dy| dy.copy_from_slice(&reduced_rhs(y[0], y[1], y[2], &iv, beta)),
        0.0,
        &[pt0.K, pt0.N, pt0.S],
        t_end,
        output,
        &ode::Options::with_tol(tol),
        |t, y| {
            let p = ThriceReducedPoint {
                M: 0.5 * (iv.n * iv.n + iv.xi * iv.xi - y[0] * y[0] - iv.l * iv.l),
                N: y[1],
                Z: iv.n * iv.xi - y[0] * iv.l,
                S: y[2],
                K: y[0],
                iv,
            };
            out.samples.push(ReducedSample {
                t,
                K: y[0],
                N: y[1],
                S: y[2],
                h3: reduced_h3(&p, beta),
                casimir: p.casimir(),
            })
        },
    )?;
    Ok(out)
}

/// Integrate the reduced system, recording every accepted step.
pub fn reduced_flow(pt0: &ThriceReducedPoint, beta: f64, t_end: f64, tol: f64) -> Result<ReducedTrajectory> {
    reduced_run(pt0, beta, t_end, tol, Output::EveryStep)
}

pub fn reduced_flow_at(pt0: &ThriceReducedPoint, beta: f64, times: &[f64], tol: f64) -> Result<ReducedTrajectory> {
    let t_end = times.last().copied().unwrap_or(0.0);
    reduced_run(pt0, beta, t_end, tol, Output::At(times))
}

/// `(K, √f(K)/2)` on `npts` equally spaced points of the feasible interval.
pub fn surface_profile(iv: &IntegralValues, npts: usize) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = feasible_interval(iv)?;
    let npts = npts.max(2);
    Ok((0..npts)
        .map(|i| {
            let k = lo + (hi - lo) * i as f64 / (npts - 1) as f64;
            (k, 0.5 * f_of_k(k, iv).max(0.0).sqrt())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_examples() {
        let s = CartesianState::new([1.0, 0.0, 0.0, 0.0], [0.0; 4]);
        let pv = pi_map(&s);
        assert_eq!(pv.get(1), 1.0);
        assert!(pv.pi[1..].iter().all(|&v| v == 0.0));
        let s = CartesianState::new([1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]);
        let pv = pi_map(&s);
        for i in 1..=16 {
            let want = if [1, 2, 11].contains(&i) { 1.0 } else { 0.0 };
            assert_eq!(pv.get(i), want, "pi{i}");
        }
    }

    #[test]
    fn klj_examples() {
        let mut pv = PiVector { pi: [0.0; 16] };
        pv.pi[0] = 1.0;
        let kv = klj_map(&pv);
        assert_eq!((kv.h2, kv.k[0], kv.j[0], kv.j[1]), (0.5, -0.5, 0.5, 0.5));
        assert_eq!(kv.xi, 0.0);
        let mut pv = PiVector { pi: [0.0; 16] };
        pv.pi[10] = 1.0;
        pv.pi[15] = 1.0;
        let kv = klj_map(&pv);
        assert_eq!((kv.xi, kv.l[0]), (2.0, 0.0));
        assert_eq!(klj_map(&PiVector { pi: [0.0; 16] }), KLJVector::default());
    }

    #[test]
    fn second_space_examples() {
        let s = CartesianState::new([1.0, 0.0, 0.0, 0.0], [0.0; 4]);
        assert_eq!(second_space_residuals(&klj_map(&pi_map(&s))), (0.0, 0.0));
        let kv = KLJVector { k: [1.0, 0.0, 0.0], ..Default::default() };
        assert_eq!(second_space_residuals(&kv).0, 1.0);
    }

    #[test]
    fn thrice_examples() {
        let kv = KLJVector { k: [0.0, 1.0, 0.0], l: [0.0, 0.0, 1.0], ..Default::default() };
        let p = thrice_map(&kv);
        assert_eq!((p.M, p.N, p.Z, p.S, p.K), (1.0, 0.0, 0.0, 1.0, 0.0));
        let p = thrice_map(&KLJVector::default());
        assert_eq!((p.M, p.N, p.Z, p.S, p.K), (0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn table_row_k_against_n() {
        let v = [0.0, 0.0, 0.0, 1.0, 0.3, 0.0];
        assert_eq!(BracketTable::default().entry(4, 1, &v), -4.0);
        let flipped = BracketTable { flip: Some((4, 1)) };
        assert_eq!(flipped.entry(4, 1, &v), 4.0);
        assert_eq!(flipped.entry(1, 4, &v), -4.0);
    }

    #[test]
    fn interval_examples() {
        let iv = IntegralValues::new(1.0, 0.5, 0.25);
        assert_eq!(f_roots(&iv), [-1.75, 0.75, -0.25, 1.25]);
        assert_eq!(feasible_interval(&iv).unwrap(), (-0.25, 0.75));
        let iv = IntegralValues::new(2.0, 0.0, 0.0);
        assert_eq!(f_of_k(1.0, &iv), 9.0);
        let (lo, hi) = feasible_interval(&iv).unwrap();
        assert_eq!((lo, hi), (-2.0, 2.0));
        assert_eq!(f_of_k(lo, &iv), 0.0);
        assert!(feasible_interval(&IntegralValues::new(0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn tie_cases_pick_nonnegative_gap() {
        for (xi, l) in [(0.3, 0.3), (0.3, -0.3), (-0.2, 0.2), (0.0, 0.0)] {
            let iv = IntegralValues::new(1.0, xi, l);
            let (lo, hi) = feasible_interval(&iv).unwrap();
            assert!(hi > lo);
            for i in 0..=100 {
                let k = lo + (hi - lo) * i as f64 / 100.0;
                assert!(f_of_k(k, &iv) >= -1e-12);
            }
        }
    }

    #[test]
    fn h3_examples() {
        let iv = IntegralValues::new(1.0, 0.0, 0.0);
        let p = ThriceReducedPoint { M: 0.0, N: 1.0, Z: 0.0, S: 0.7, K: 1.0, iv };
        assert!((reduced_h3(&p, 0.0) - 2.0).abs() < 1e-15);
        let mut q = p;
        q.N = -3.0;
        assert_eq!(reduced_h3(&p, 2.0), reduced_h3(&q, 2.0));
    }

    #[test]
    fn rhs_agrees_with_printed_except_ds() {
        let iv = IntegralValues::new(1.0, 0.3, 0.1);
        let (a, b) = (reduced_rhs(0.2, 0.1, 0.05, &iv, 1.3), reduced_rhs_as_printed(0.2, 0.1, 0.05, &iv, 1.3));
        assert!((a[0] - b[0]).abs() < 1e-15);
        assert!((a[1] - b[1]).abs() < 1e-15);
        assert!((a[2] - b[2]).abs() > 1e-3);
    }
}
