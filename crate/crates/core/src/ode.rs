//! Dormand–Prince 5(4) with a PI step-size controller.
//!
//! No dense output: when output times are requested the step is clamped so
//! that it lands on them exactly.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    /// Steps below `h_min_rel * max(1, |t|)` count as underflow.
    pub h_min_rel: f64,
    pub max_steps: usize,
}

impl Options {
    pub fn with_tol(tol: f64) -> Self {
        Options { rtol: tol, atol: tol, h_init: None, h_min_rel: 1e-14, max_steps: 50_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evals: usize,
}

/// Where the observer is called.
#[derive(Debug, Clone, Copy)]
pub enum Output<'a> {
    /// After the initial point and every accepted step.
    EveryStep,
    /// Only at these (increasing) times; times outside `[t0, t_end]` are ignored.
    At(&'a [f64]),
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Integrate `y' = f(t, y)` from `t0` to `t_end`, calling `observe(t, y)` per `output`.
pub fn dopri5<F, O>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    output: Output<'_>,
    opts: &Options,
    mut observe: O,
) -> Result<Stats>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
{
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::InvalidParameter("tolerances must be positive".into()));
    }
    if !(t_end >= t0) {
        return Err(Error::InvalidParameter("t_end must not precede t0".into()));
    }
    let n = y0.len();
    let mut stats = Stats::default();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];

    let targets: &[f64] = match output {
        Output::EveryStep => &[],
        Output::At(ts) => ts,
    };
    let mut next = 0usize;
    while next < targets.len() && targets[next] < t0 {
        next += 1;
    }
    let emit_at = |idx: &mut usize, t: f64, y: &[f64], observe: &mut O| {
        while *idx < targets.len() && targets[*idx] == t {
            observe(t, y);
            *idx += 1;
        }
    };

    match output {
        Output::EveryStep => observe(t, &y),
        Output::At(_) => emit_at(&mut next, t, &y, &mut observe),
    }
    if t_end == t0 {
        return Ok(stats);
    }

    f(t, &y, &mut k1);
    stats.evals += 1;
    let mut h = match opts.h_init {
        Some(h) => h,
        None => initial_step(&mut f, t, &y, &k1, opts, t_end - t0, &mut stats),
    };
    let mut err_old: f64 = 1e-4;
    let mut last_reject = false;

    loop {
        if t >= t_end {
            break;
        }
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::IntegrationFailure { t, state: y, reason: "maximum number of steps exceeded".into() });
        }
        let mut stop = t_end;
        if next < targets.len() && targets[next] < stop {
            stop = targets[next];
        }
        let h_ctrl = h;
        let mut landing = false;
        if t + h >= stop || (stop - t - h) < 1e-12 * h {
            h = stop - t;
            landing = true;
        }
        if h < opts.h_min_rel * t.abs().max(1.0) {
            return Err(Error::IntegrationFailure { t, state: y, reason: format!("step size underflow (h = {h:e})") });
        }

        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, &ytmp, &mut k6);
        for i in 0..n {
            ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t + h, &ynew, &mut k7);
        stats.evals += 6;

        let mut err = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sk) * (e / sk);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            stats.rejected += 1;
            h *= FAC_MIN;
            last_reject = true;
            continue;
        }

        let expo = 0.2 - BETA * 0.75;
        if err <= 1.0 {
            stats.accepted += 1;
            let mut fac = err.powf(expo) / err_old.powf(BETA) / SAFE;
            fac = fac.clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            if last_reject {
                h_new = h_new.min(h);
            }
            err_old = err.max(1e-4);
            last_reject = false;
            t = if landing { stop } else { t + h };
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            match output {
                Output::EveryStep => observe(t, &y),
                Output::At(_) => emit_at(&mut next, t, &y, &mut observe),
            }
            if !landing {
                h = h_new;
            } else {
                // the clamped step says little about the natural step size
                h = h_new.max(h_ctrl);
            }
        } else {
            stats.rejected += 1;
            let fac = (err.powf(expo) / SAFE).min(1.0 / FAC_MIN);
            h /= fac;
            last_reject = true;
        }
    }
    Ok(stats)
}

fn initial_step<F>(f: &mut F, t: f64, y: &[f64], f0: &[f64], opts: &Options, span: f64, stats: &mut Stats) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..n {
        let sk = opts.atol + opts.rtol * y[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(span);
    let y1: Vec<f64> = (0..n).map(|i| y[i] + h * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    f(t + h, &y1, &mut f1);
    stats.evals += 1;
    let mut der2 = 0.0;
    for i in 0..n {
        let sk = opts.atol + opts.rtol * y[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
    (100.0 * h).min(h1).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let opts = Options::with_tol(1e-10);
        let mut last = (0.0, 0.0);
        dopri5(|_, y, dy| dy[0] = -y[0], 0.0, &[1.0], 3.0, Output::EveryStep, &opts, |t, y| last = (t, y[0])).unwrap();
        assert_eq!(last.0, 3.0);
        assert!((last.1 - (-3.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn lands_on_output_times() {
        let opts = Options::with_tol(1e-9);
        let ts = [0.0, 0.5, 1.0, 2.5];
        let mut seen = Vec::new();
        dopri5(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[0.0, 1.0],
            2.5,
            Output::At(&ts),
            &opts,
            |t, y| seen.push((t, y[0])),
        )
        .unwrap();
        assert_eq!(seen.len(), 4);
        for (t, x) in seen {
            assert!((x - t.sin()).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn underflow_reports_last_state() {
        let opts = Options::with_tol(1e-8);
        // blows up at t = 1
        let r = dopri5(|_, y, dy| dy[0] = y[0] * y[0], 0.0, &[1.0], 2.0, Output::EveryStep, &opts, |_, _| {});
        match r {
            Err(Error::IntegrationFailure { t, state, .. }) => {
                assert!((t - 1.0).abs() < 1e-6, "t={t} y={state:?}");
                assert!(state[0] > 10.0);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
