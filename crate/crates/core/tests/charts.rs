use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resonance_core::charts::*;
use resonance_core::invariants::thrice_reduced_point;
use resonance_core::model::{self, CartesianState};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_euler(r: &mut ChaCha8Rng) -> EulerPoint {
    EulerPoint {
        rho: r.gen_range(0.3..2.0),
        phi: r.gen_range(0.0..4.0 * PI),
        theta: r.gen_range(0.1..PI - 0.1),
        psi: r.gen_range(-PI + 1e-3..PI),
        P: r.gen_range(-1.0..1.0),
        Phi: r.gen_range(-1.0..1.0),
        Theta: r.gen_range(-1.0..1.0),
        Psi: r.gen_range(-1.0..1.0),
    }
}

fn random_andoyer(r: &mut ChaCha8Rng) -> AndoyerPoint {
    loop {
        let u2m: f64 = r.gen_range(0.5..2.0);
        let ap = AndoyerPoint {
            rho: r.gen_range(0.3..2.0),
            u1: r.gen_range(-PI..PI),
            u2: r.gen_range(-PI..PI),
            u3: r.gen_range(-PI..PI),
            P: r.gen_range(-1.0..1.0),
            U1: u2m * r.gen_range(-0.95..0.95),
            U2: u2m,
            U3: u2m * r.gen_range(-0.95..0.95),
        };
        let (c1, c2) = (ap.U1 / u2m, ap.U3 / u2m);
        let ct = c1 * c2 + ((1.0 - c1 * c1) * (1.0 - c2 * c2)).sqrt() * ap.u2.cos();
        if 1.0 - ct.abs() > 1e-3 {
            return ap;
        }
    }
}

#[allow(non_snake_case)]
fn random_delaunay(r: &mut ChaCha8Rng) -> DelaunayPoint {
    let L: f64 = r.gen_range(0.5..2.0);
    let e: f64 = r.gen_range(0.05..0.95);
    let G = L * (1.0 - e * e).sqrt();
    DelaunayPoint {
        ell: r.gen_range(-PI..PI),
        g: r.gen_range(-PI..PI),
        u1: r.gen_range(-PI..PI),
        u3: r.gen_range(-PI..PI),
        L,
        G,
        U1: G * r.gen_range(-0.9..0.9),
        U3: G * r.gen_range(-0.9..0.9),
    }
}

fn cart_dist(a: &CartesianState, b: &CartesianState) -> f64 {
    a.to_array().iter().zip(b.to_array().iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn angle_dist(a: f64, b: f64) -> f64 {
    wrap_pi(a - b).abs()
}

#[test]
fn euler_example_and_h2_formula() {
    let mut r = rng(1);
    for _ in 0..200 {
        let ep = random_euler(&mut r);
        let s = euler_to_cartesian(&ep).unwrap();
        for omega in [1.0, 0.7] {
            let (a, b) = (model::h2(&s, omega), h2_euler(&ep, omega));
            assert!((a - b).abs() < 1e-11 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }
}

#[test]
fn euler_roundtrip() {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let ep = random_euler(&mut r);
        let s = euler_to_cartesian(&ep).unwrap();
        let back = cartesian_to_euler(&s).unwrap();
        let d = [
            back.rho - ep.rho,
            back.theta - ep.theta,
            angle_dist(back.phi, ep.phi),
            angle_dist(back.psi, ep.psi),
            back.P - ep.P,
            back.Phi - ep.Phi,
            back.Theta - ep.Theta,
            back.Psi - ep.Psi,
        ];
        worst = d.iter().fold(worst, |m, x| m.max(x.abs()));
        assert!(cart_dist(&euler_to_cartesian(&back).unwrap(), &s) < 1e-10);
    }
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn andoyer_roundtrip_and_u2_identity() {
    let mut r = rng(3);
    for _ in 0..1000 {
        let ap = random_andoyer(&mut r);
        let ep = andoyer_to_euler(&ap).unwrap();
        let st = ep.theta.sin();
        let u2sq = ep.Theta * ep.Theta
            + (ep.Psi * ep.Psi + ep.Phi * ep.Phi - 2.0 * ep.Phi * ep.Psi * ep.theta.cos()) / (st * st);
        assert!((u2sq - ap.U2 * ap.U2).abs() < 1e-10 * ap.U2 * ap.U2);
        let back = euler_to_andoyer(&ep).unwrap();
        for (x, y) in [(back.U1, ap.U1), (back.U2, ap.U2), (back.U3, ap.U3), (back.P, ap.P), (back.rho, ap.rho)] {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
        assert!(angle_dist(back.u2, ap.u2) < 1e-10);
        // u1, u3 come back up to a joint lattice shift: compare images
        let s0 = euler_to_cartesian(&ep).unwrap();
        let s1 = euler_to_cartesian(&andoyer_to_euler(&back).unwrap()).unwrap();
        assert!(cart_dist(&s0, &s1) < 1e-10);
    }
}

#[test]
fn delaunay_roundtrip() {
    let mut r = rng(4);
    for _ in 0..1000 {
        let dp = random_delaunay(&mut r);
        let gamma = r.gen_range(0.3..2.0);
        let ap = delaunay_to_andoyer(&dp, gamma).unwrap();
        let back = andoyer_to_delaunay(&ap, gamma).unwrap();
        for (x, y) in [(back.L, dp.L), (back.G, dp.G), (back.U1, dp.U1), (back.U3, dp.U3)] {
            assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()), "{x} vs {y}");
        }
        for (x, y) in [(back.ell, dp.ell), (back.g, dp.g), (back.u1, dp.u1), (back.u3, dp.u3)] {
            assert!(angle_dist(x, y) < 1e-9, "{x} vs {y}");
        }
    }
}

#[test]
fn cartesian_delaunay_cartesian() {
    let mut r = rng(5);
    let mut n = 0;
    while n < 300 {
        let dp = random_delaunay(&mut r);
        let gamma = 0.7;
        let Ok(s) = delaunay_to_cartesian(&dp, gamma) else { continue };
        let back = cartesian_to_delaunay(&s, gamma).unwrap();
        let s2 = delaunay_to_cartesian(&back, gamma).unwrap();
        assert!(cart_dist(&s, &s2) < 1e-9);
        n += 1;
    }
}

/// `JᵀΩJ − Ω` for a map whose input and output are ordered (coordinates, momenta).
fn symplectic_defect(f: impl Fn(&[f64; 8]) -> [f64; 8], x: &[f64; 8]) -> f64 {
    let h = 2e-5;
    let mut jac = [[0.0; 8]; 8];
    for j in 0..8 {
        let at = |k: f64| {
            let mut y = *x;
            y[j] += k * h;
            f(&y)
        };
        let (f2, f1, m1, m2) = (at(2.0), at(1.0), at(-1.0), at(-2.0));
        for i in 0..8 {
            jac[i][j] = (-f2[i] + 8.0 * f1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h);
        }
    }
    let mut worst: f64 = 0.0;
    for a in 0..8 {
        for b in 0..8 {
            let mut v = 0.0;
            for k in 0..4 {
                v += jac[k][a] * jac[k + 4][b] - jac[k + 4][a] * jac[k][b];
            }
            let omega = if b == a + 4 {
                1.0
            } else if a == b + 4 {
                -1.0
            } else {
                0.0
            };
            worst = worst.max((v - omega).abs());
        }
    }
    worst
}

#[test]
fn charts_are_symplectic() {
    let mut r = rng(6);
    for _ in 0..100 {
        let ep = random_euler(&mut r);
        let x = [ep.rho, ep.phi, ep.theta, ep.psi, ep.P, ep.Phi, ep.Theta, ep.Psi];
        let d = symplectic_defect(
            |x| {
                let p = EulerPoint {
                    rho: x[0],
                    phi: x[1],
                    theta: x[2],
                    psi: x[3],
                    P: x[4],
                    Phi: x[5],
                    Theta: x[6],
                    Psi: x[7],
                };
                euler_to_cartesian(&p).unwrap().to_array()
            },
            &x,
        );
        assert!(d < 1e-8, "euler {d}");

        let ap = random_andoyer(&mut r);
        let x = [ap.rho, ap.u1, ap.u2, ap.u3, ap.P, ap.U1, ap.U2, ap.U3];
        let d = symplectic_defect(
            |x| {
                let p = AndoyerPoint { rho: x[0], u1: x[1], u2: x[2], u3: x[3], P: x[4], U1: x[5], U2: x[6], U3: x[7] };
                euler_to_cartesian(&andoyer_to_euler(&p).unwrap()).unwrap().to_array()
            },
            &x,
        );
        assert!(d < 1e-8, "andoyer {d}");

        let dp = random_delaunay(&mut r);
        let x = [dp.ell, dp.g, dp.u1, dp.u3, dp.L, dp.G, dp.U1, dp.U3];
        let Ok(ap) = delaunay_to_andoyer(&dp, 0.8) else { continue };
        if andoyer_to_euler(&ap).is_err() {
            continue;
        }
        let d = symplectic_defect(
            |x| {
                let p = DelaunayPoint { ell: x[0], g: x[1], u1: x[2], u3: x[3], L: x[4], G: x[5], U1: x[6], U3: x[7] };
                delaunay_to_cartesian(&p, 0.8).unwrap().to_array()
            },
            &x,
        );
        assert!(d < 1e-8, "delaunay {d} {dp:?}");
    }
}

#[test]
fn frozen_integral_identification() {
    let mut r = rng(7);
    for _ in 0..500 {
        let ep = random_euler(&mut r);
        let s = euler_to_cartesian(&ep).unwrap();
        let (xi, l1) = model::first_integrals(&s);
        assert!((xi - XI_PER_U1 * ep.Psi).abs() < 1e-12, "{xi} {}", ep.Psi);
        assert!((l1 - L1_PER_U3 * ep.Phi).abs() < 1e-12);
    }
    assert_eq!((XI_PER_U1, L1_PER_U3), (-2.0, -2.0));
}

#[test]
fn composed_h0_is_kepler_energy() {
    let mut r = rng(8);
    let mut n = 0;
    while n < 100 {
        let mut dp = random_delaunay(&mut r);
        dp.G *= 2.0 / dp.L;
        dp.U1 *= 2.0 / dp.L;
        dp.U3 *= 2.0 / dp.L;
        dp.L = 2.0;
        let Ok(h) = composed_h0(&dp, 1.0) else { continue };
        assert!((h + 0.125).abs() < 1e-12, "{h}");
        n += 1;
    }
    // angle independence at fixed momenta
    let base = random_delaunay(&mut r);
    let mut vals = Vec::new();
    for i in 0..100 {
        let t = i as f64;
        let dp = DelaunayPoint { ell: 0.37 * t, g: 1.1 * t, u1: 2.3 * t, u3: -0.7 * t, ..base };
        if let Ok(h) = composed_h0(&dp, 0.6) {
            vals.push(h);
        }
    }
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(vals.len() > 80 && hi - lo < 1e-10);
    assert!((lo + 0.18 / (base.L * base.L)).abs() < 1e-12);
    // on shell: L = 2γ gives −1/8
    let dp = DelaunayPoint { L: on_shell_l(0.25), G: 0.4, U1: 0.1, U3: -0.2, ..base };
    assert!((composed_h0(&dp, 0.25).unwrap() + 0.125).abs() < 1e-13);
}

#[test]
fn connection_matches_chart_chain() {
    let mut r = rng(9);
    let mut n = 0;
    while n < 300 {
        let q: [f64; 4] = std::array::from_fn(|_| r.gen_range(-1.0..1.0));
        let p: [f64; 4] = std::array::from_fn(|_| r.gen_range(-1.0..1.0));
        let s = CartesianState::new(q, p);
        let Ok(ap) = cartesian_to_euler(&s).and_then(|e| euler_to_andoyer(&e)) else { continue };
        let tp = thrice_reduced_point(&s);
        let g = connection_G(tp.K, tp.N, &tp.iv).unwrap();
        assert!((g - ap.U2).abs() < 1e-10 * (1.0 + g), "{g} vs {}", ap.U2);
        n += 1;
    }
}

#[test]
fn chart_point_json() {
    let dp = DelaunayPoint { ell: 0.1, g: 0.2, u1: 0.3, u3: 0.4, L: 1.0, G: 0.8, U1: 0.1, U3: 0.2 };
    let cp = ChartPoint::Delaunay(dp);
    let json = serde_json::to_string(&cp).unwrap();
    assert!(json.contains("\"chart\":\"delaunay\""));
    let back: ChartPoint = serde_json::from_str(&json).unwrap();
    assert_eq!(back, cp);
}
