//! Dormand–Prince 5(4) with the fourth-order continuous extension.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    /// Relative to the integration span.
    pub h_min_rel: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-12, h_init: None, h_min_rel: 1e-14, max_steps: 2_000_000 }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, ..Self::default() }
    }
}

/// One accepted step, with dense output over `[t0, t1]`.
pub struct Step<'a, const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: &'a [f64; N],
    pub y1: &'a [f64; N],
    rcont: &'a [[f64; N]; 5],
}

impl<const N: usize> Step<'_, N> {
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let th = if h == 0.0 { 0.0 } else { (t - self.t0) / h };
        let th1 = 1.0 - th;
        let r = self.rcont;
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
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
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let s = h * c;
        for i in 0..N {
            out[i] += s * k[i];
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end >= t0`, calling `on_step` after
/// every accepted step. Returns the final time and state (earlier if the
/// callback stops the integration).
pub fn integrate<const N: usize, F, C>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    mut on_step: C,
) -> Result<(f64, [f64; N])>
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]),
    C: FnMut(&Step<'_, N>) -> Control,
{
    let span = t_end - t0;
    if span < 0.0 || !span.is_finite() {
        return Err(Error::InvalidParams(format!("integration span {span} must be finite and non-negative")));
    }
    if span == 0.0 {
        return Ok((t0, y0));
    }
    let h_min = opts.h_min_rel * span.max(1.0);
    let scale = |a: f64, b: f64| opts.atol + opts.rtol * a.abs().max(b.abs());

    let mut t = t0;
    let mut y = y0;
    let mut k1 = [0.0; N];
    f(t, &y, &mut k1);

    let mut h = match opts.h_init {
        Some(h) => h.min(span),
        None => {
            let mut d0 = 0.0;
            let mut d1 = 0.0;
            for i in 0..N {
                let sc = scale(y[i], y[i]);
                d0 += (y[i] / sc).powi(2);
                d1 += (k1[i] / sc).powi(2);
            }
            let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            h0.min(span)
        }
    };

    let mut steps = 0usize;
    let mut last_rejected = false;
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = ([0.0; N], [0.0; N], [0.0; N], [0.0; N], [0.0; N], [0.0; N]);
    loop {
        if steps >= opts.max_steps {
            return Err(Error::StepFailure { t, h });
        }
        steps += 1;
        let last = t + h >= t_end - 1e-15 * span;
        if last {
            h = t_end - t;
        }

        f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]), &mut k2);
        f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]), &mut k3);
        f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]), &mut k4);
        f(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]), &mut k5);
        f(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]), &mut k6);
        let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let t1 = if last { t_end } else { t + h };
        f(t1, &y1, &mut k7);

        let mut err = 0.0;
        let mut finite = true;
        for i in 0..N {
            if !y1[i].is_finite() || !k7[i].is_finite() {
                finite = false;
                break;
            }
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            err += (e / scale(y[i], y1[i])).powi(2);
        }
        if !finite {
            h *= 0.25;
            last_rejected = true;
            if h < h_min {
                return Err(Error::NonFiniteState { t });
            }
            continue;
        }
        let err = (err / N as f64).sqrt();

        if err <= 1.0 {
            let mut rcont = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * k7[i] - bspl;
                rcont[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let ctl = on_step(&Step { t0: t, t1, y0: &y, y1: &y1, rcont: &rcont });
            t = t1;
            y = y1;
            k1 = k7;
            if last || ctl == Control::Stop {
                return Ok((t, y));
            }
            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h *= fac;
            last_rejected = false;
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            last_rejected = true;
        }
        if h < h_min {
            return Err(Error::StepFailure { t, h });
        }
    }
}

/// Locates a sign change of `g` inside one accepted step by bisection on the
/// dense output. Returns `None` if `g` has the same sign at both ends or
/// vanishes at the start of the step (that crossing belongs to the previous step).
pub fn locate_event<const N: usize, G>(step: &Step<'_, N>, g: G) -> Option<(f64, [f64; N])>
where
    G: Fn(&[f64; N]) -> f64,
{
    let (mut a, mut b) = (step.t0, step.t1);
    let (mut ga, gb) = (g(step.y0), g(step.y1));
    if ga == 0.0 || ga.signum() == gb.signum() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(&step.interpolate(m));
        if gm == 0.0 {
            return Some((m, step.interpolate(m)));
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    let t = 0.5 * (a + b);
    Some((t, step.interpolate(t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_one_period() {
        let opts = OdeOptions::with_tol(1e-12);
        let (_, y) = integrate(
            |_, y: &[f64; 2], dy: &mut [f64; 2]| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            [1.0, 0.0],
            2.0 * std::f64::consts::PI,
            &opts,
            |_| Control::Continue,
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10, "{y:?}");
    }

    #[test]
    fn dense_output_is_accurate_inside_steps() {
        let opts = OdeOptions::with_tol(1e-10);
        let mut worst: f64 = 0.0;
        integrate(
            |_, y: &[f64; 1], dy: &mut [f64; 1]| dy[0] = y[0],
            0.0,
            [1.0],
            3.0,
            &opts,
            |s| {
                for k in 1..4 {
                    let t = s.t0 + (s.t1 - s.t0) * k as f64 / 4.0;
                    worst = worst.max((s.interpolate(t)[0] - t.exp()).abs() / t.exp());
                }
                Control::Continue
            },
        )
        .unwrap();
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn event_location_finds_quarter_period() {
        let opts = OdeOptions::with_tol(1e-12);
        let mut hit = None;
        integrate(
            |_, y: &[f64; 2], dy: &mut [f64; 2]| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            [1.0, 0.0],
            3.0,
            &opts,
            |s| match locate_event(s, |y| y[0]) {
                Some((t, _)) if hit.is_none() => {
                    hit = Some(t);
                    Control::Stop
                }
                _ => Control::Continue,
            },
        )
        .unwrap();
        assert!((hit.unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }
}
