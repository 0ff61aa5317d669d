//! Monomials `(coef, α power, c1² power, c2² power, e² power)` of the
//! second-order kernel polynomials.

/// `cos 0g`, prefactor `a⁶/(3072 L²)`.
pub const POLY0: &[(f64, u32, u32, u32, u32)] = &[
    (432.0, 2, 2, 2, 3),
    (2025.0, 2, 2, 2, 2),
    (-7096.0, 2, 2, 2, 1),
    (-2536.0, 2, 2, 2, 0),
    (-528.0, 2, 2, 1, 3),
    (-2554.0, 2, 2, 1, 2),
    (6752.0, 2, 2, 1, 1),
    (2480.0, 2, 2, 1, 0),
    (1001.0, 2, 2, 0, 2),
    (-1672.0, 2, 2, 0, 1),
    (56.0, 2, 2, 0, 0),
    (-528.0, 2, 1, 2, 3),
    (-2554.0, 2, 1, 2, 2),
    (6752.0, 2, 1, 2, 1),
    (2480.0, 2, 1, 2, 0),
    (624.0, 2, 1, 1, 3),
    (5148.0, 2, 1, 1, 2),
    (-12608.0, 2, 1, 1, 1),
    (-3232.0, 2, 1, 1, 0),
    (-2562.0, 2, 1, 0, 2),
    (4704.0, 2, 1, 0, 1),
    (-16.0, 2, 1, 0, 0),
    (1001.0, 2, 0, 2, 2),
    (-1672.0, 2, 0, 2, 1),
    (56.0, 2, 0, 2, 0),
    (-2562.0, 2, 0, 1, 2),
    (4704.0, 2, 0, 1, 1),
    (-16.0, 2, 0, 1, 0),
    (1561.0, 2, 0, 0, 2),
    (-3032.0, 2, 0, 0, 1),
    (-40.0, 2, 0, 0, 0),
    (1512.0, 1, 1, 1, 2),
    (-9504.0, 1, 1, 1, 1),
    (-2304.0, 1, 1, 1, 0),
    (-504.0, 1, 1, 0, 2),
    (3168.0, 1, 1, 0, 1),
    (768.0, 1, 1, 0, 0),
    (-504.0, 1, 0, 1, 2),
    (3168.0, 1, 0, 1, 1),
    (768.0, 1, 0, 1, 0),
    (504.0, 1, 0, 0, 2),
    (-3168.0, 1, 0, 0, 1),
    (-768.0, 1, 0, 0, 0),
    (504.0, 0, 0, 0, 2),
    (-3168.0, 0, 0, 0, 1),
    (-768.0, 0, 0, 0, 0),
];

/// `cos g`, prefactor `−α a⁶ c1c2 e s1s2/(384 L²)`.
pub const POLY1: &[(f64, u32, u32, u32, u32)] = &[
    (381.0, 1, 1, 1, 2),
    (-552.0, 1, 1, 1, 1),
    (-1264.0, 1, 1, 1, 0),
    (-257.0, 1, 1, 0, 2),
    (184.0, 1, 1, 0, 1),
    (688.0, 1, 1, 0, 0),
    (-257.0, 1, 0, 1, 2),
    (184.0, 1, 0, 1, 1),
    (688.0, 1, 0, 1, 0),
    (329.0, 1, 0, 0, 2),
    (-320.0, 1, 0, 0, 1),
    (-1072.0, 1, 0, 0, 0),
    (228.0, 0, 0, 0, 2),
    (-600.0, 0, 0, 0, 1),
    (-1344.0, 0, 0, 0, 0),
];

/// `cos 2g`, prefactor `α a⁶ e² s1²s2²/(768 L²)`.
pub const POLY2: &[(f64, u32, u32, u32, u32)] = &[
    (108.0, 1, 1, 1, 2),
    (239.0, 1, 1, 1, 1),
    (-1782.0, 1, 1, 1, 0),
    (-185.0, 1, 1, 0, 1),
    (390.0, 1, 1, 0, 0),
    (-185.0, 1, 0, 1, 1),
    (390.0, 1, 0, 1, 0),
    (237.0, 1, 0, 0, 1),
    (-666.0, 1, 0, 0, 0),
    (474.0, 0, 0, 0, 1),
    (-1332.0, 0, 0, 0, 0),
];
