//! Dense real polynomials and Sturm-sequence root isolation.

/// Coefficients in ascending order: `c[0] + c[1] x + ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn new(mut c: Vec<f64>) -> Self {
        while c.len() > 1 && *c.last().unwrap() == 0.0 {
            c.pop();
        }
        if c.is_empty() {
            c.push(0.0);
        }
        Poly(c)
    }

    pub fn constant(c: f64) -> Self {
        Poly::new(vec![c])
    }

    /// `x − r`
    pub fn linear(r: f64) -> Self {
        Poly::new(vec![-r, 1.0])
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// `Σ |c_i| |x|^i`, the size of the terms summed by [`Poly::eval`].
    pub fn eval_abs(&self, x: f64) -> f64 {
        let x = x.abs();
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c.abs())
    }

    pub fn deriv(&self) -> Poly {
        if self.0.len() == 1 {
            return Poly::constant(0.0);
        }
        Poly::new(self.0.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect())
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.0.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        Poly::new((0..n).map(|i| self.0.get(i).unwrap_or(&0.0) + o.0.get(i).unwrap_or(&0.0)).collect())
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.scale(-1.0))
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut c = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }

    /// Remainder of the division by `d`; coefficients below `rel · max|self|`
    /// are flushed to zero.
    fn rem(&self, d: &Poly, rel: f64) -> Poly {
        let mut r = self.0.clone();
        let dn = d.degree();
        let lead = d.0[dn];
        let tol = rel * self.max_abs().max(d.max_abs());
        while r.len() > dn && r.len() > 1 {
            let k = r.len() - 1 - dn;
            let f = r[r.len() - 1] / lead;
            for (i, &dc) in d.0.iter().enumerate() {
                r[k + i] -= f * dc;
            }
            r.pop();
        }
        for c in r.iter_mut() {
            if c.abs() <= tol {
                *c = 0.0;
            }
        }
        Poly::new(r)
    }

    /// Zero every coefficient below `rel · max|c|`.
    pub fn flushed(&self, rel: f64) -> Poly {
        let tol = rel * self.max_abs();
        Poly::new(self.0.iter().map(|&c| if c.abs() < tol { 0.0 } else { c }).collect())
    }

    fn normalized(&self) -> Poly {
        let m = self.max_abs();
        if m == 0.0 {
            self.clone()
        } else {
            self.scale(1.0 / m)
        }
    }
}

/// Sturm chain `p, p', −rem(p, p'), ...`, each element scaled to unit max coefficient.
pub fn sturm_sequence(p: &Poly) -> Vec<Poly> {
    let mut seq = vec![p.normalized()];
    let d = p.deriv().normalized();
    if d.is_zero() {
        return seq;
    }
    seq.push(d);
    loop {
        let n = seq.len();
        let r = seq[n - 2].rem(&seq[n - 1], 1e-13).scale(-1.0);
        if r.is_zero() {
            break;
        }
        seq.push(r.normalized());
        if seq.last().unwrap().degree() == 0 {
            break;
        }
    }
    seq
}

pub fn sign_changes(seq: &[Poly], x: f64) -> usize {
    let mut prev = 0.0;
    let mut n = 0;
    for p in seq {
        let v = p.eval(x);
        if v == 0.0 {
            continue;
        }
        if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
            n += 1;
        }
        prev = v;
    }
    n
}

/// Distinct real roots of `p` in `(a, b]`, ascending. Roots up to `1e-9·max(1, |b|)`
/// beyond `b` are reported at `b`, so a root sitting on the endpoint is not lost
/// to the roundoff sign of `p(b)`.
pub fn real_roots(p: &Poly, a: f64, b: f64) -> Vec<f64> {
    if p.is_zero() || p.degree() == 0 || !(a < b) {
        return Vec::new();
    }
    // factor out x^k so a multiple root at the origin does not upset the chain
    let k = p.0.iter().take_while(|&&c| c == 0.0).count();
    let mut out = Vec::new();
    if k > 0 && a < 0.0 && 0.0 <= b {
        out.push(0.0);
    }
    let p = &Poly::new(p.0[k..].to_vec());
    if p.degree() == 0 {
        return out;
    }
    let seq = sturm_sequence(p);
    let slack = 1e-9 * b.abs().max(1.0);
    isolate(p, &seq, a, b + slack, 0, &mut out);
    for r in out.iter_mut() {
        *r = r.min(b);
    }
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    out.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1.0));
    out
}

fn count(seq: &[Poly], a: f64, b: f64) -> usize {
    sign_changes(seq, a).saturating_sub(sign_changes(seq, b))
}

fn isolate(p: &Poly, seq: &[Poly], a: f64, b: f64, depth: usize, out: &mut Vec<f64>) {
    let n = count(seq, a, b);
    if n == 0 {
        return;
    }
    if n == 1 || depth > 60 || b - a < 1e-14 * b.abs().max(1.0) {
        if let Some(r) = refine(p, a, b) {
            let scale = p.0.iter().enumerate().fold(0.0, |m, (i, c)| m + (c * r.abs().powi(i as i32)).abs());
            if p.eval(r).abs() <= 1e-9 * scale {
                out.push(r);
            }
        }
        return;
    }
    let mut m = 0.5 * (a + b);
    if p.eval(m) == 0.0 {
        out.push(m);
        m += 1e-3 * (b - a);
    }
    isolate(p, seq, a, m, depth + 1, out);
    isolate(p, seq, m, b, depth + 1, out);
}

/// Single root in `(a, b]`: bisection on a sign change, otherwise on the
/// derivative (even multiplicity), then Newton polishing.
fn refine(p: &Poly, a: f64, b: f64) -> Option<f64> {
    if p.eval(b) == 0.0 {
        return Some(b);
    }
    let dp = p.deriv();
    let target = if (p.eval(a) > 0.0) != (p.eval(b) > 0.0) {
        p.clone()
    } else if (dp.eval(a) > 0.0) != (dp.eval(b) > 0.0) {
        dp.clone()
    } else {
        return None;
    };
    let (mut lo, mut hi) = (a, b);
    let flo = target.eval(lo) > 0.0;
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        let fm = target.eval(m);
        if fm == 0.0 {
            lo = m;
            hi = m;
            break;
        }
        if (fm > 0.0) == flo {
            lo = m;
        } else {
            hi = m;
        }
    }
    let mut x = 0.5 * (lo + hi);
    let dt = target.deriv();
    for _ in 0..3 {
        let d = dt.eval(x);
        if d == 0.0 {
            break;
        }
        let nx = x - target.eval(x) / d;
        if !(nx > a && nx <= b) || target.eval(nx).abs() > target.eval(x).abs() {
            break;
        }
        x = nx;
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_roots(r: &[f64]) -> Poly {
        r.iter().fold(Poly::constant(1.0), |p, &x| p.mul(&Poly::linear(x)))
    }

    #[test]
    fn finds_simple_roots() {
        let p = from_roots(&[0.1, 0.35, 0.351, 0.9, 1.0, -0.5, 3.0]);
        let r = real_roots(&p, 0.0, 1.0);
        assert_eq!(r.len(), 5);
        for (x, y) in r.iter().zip([0.1, 0.35, 0.351, 0.9, 1.0]) {
            assert!((x - y).abs() < 1e-12, "{x} {y}");
        }
    }

    #[test]
    fn double_root() {
        let p = from_roots(&[0.4, 0.4, 0.7]);
        let r = real_roots(&p, 0.0, 1.0);
        assert_eq!(r.len(), 2);
        assert!((r[0] - 0.4).abs() < 1e-7);
    }

    #[test]
    fn no_roots() {
        let p = Poly::new(vec![1.0, 0.0, 1.0]);
        assert!(real_roots(&p, -5.0, 5.0).is_empty());
    }

    #[test]
    fn arithmetic() {
        let p = Poly::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(p.deriv(), Poly::new(vec![2.0, 6.0]));
        assert_eq!(p.eval(2.0), 17.0);
        assert_eq!(p.sub(&p), Poly::constant(0.0));
    }
}
