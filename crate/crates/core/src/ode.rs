//! Dormand–Prince 5(4) integrator with PI step-size control and the
//! classical fourth-order continuous extension.

use crate::error::{Error, Result};

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

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerance {
    pub fn uniform(tol: f64) -> Self {
        Tolerance { rtol: tol, atol: tol }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub tol: Tolerance,
    pub max_steps: usize,
    /// Upper bound on |h|; `0` means unbounded.
    pub max_step: f64,
}

impl Settings {
    pub fn new(tol: f64) -> Self {
        Settings { tol: Tolerance::uniform(tol), max_steps: 50_000_000, max_step: 0.0 }
    }
}

/// One accepted step, with its dense-output polynomial.
pub struct Step<'a> {
    pub t0: f64,
    pub h: f64,
    pub y0: &'a [f64],
    pub y1: &'a [f64],
    cont: &'a [Vec<f64>; 5],
}

impl Step<'_> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Interpolated state at `t` in `[t0, t0 + h]`.
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let [r1, r2, r3, r4, r5] = self.cont;
        for i in 0..out.len() {
            out[i] = r1[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i])));
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// What the observer asks the integrator to do after a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// `f` may fail (for example outside the domain of a coefficient); a failing
/// stage is treated like a rejected step and the step is shrunk. `observe` is
/// called after every accepted step and may stop the integration early.
pub fn integrate<F, O>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    settings: &Settings,
    mut observe: O,
) -> Result<(Vec<f64>, f64, Stats)>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    O: FnMut(&Step<'_>) -> Control,
{
    let dim = y0.len();
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut stats = Stats::default();
    let mut t = t0;
    let mut y = y0.to_vec();
    if t_end == t0 {
        return Ok((y, t, stats));
    }
    let tol = settings.tol;
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; dim]);
    let mut ytmp = vec![0.0; dim];
    let mut ynew = vec![0.0; dim];
    let mut cont: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; dim]);

    f(t, &y, &mut k[0])?;
    stats.evaluations += 1;
    let mut h = dir * initial_step(&mut f, t, &y, &k[0], tol, &mut stats)?.min((t_end - t0).abs());
    if settings.max_step > 0.0 {
        h = dir * h.abs().min(settings.max_step);
    }
    let mut err_prev: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        if stats.accepted + stats.rejected >= settings.max_steps {
            return Err(Error::TooManySteps { t });
        }
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        if h.abs() <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }

        let attempt = (|| -> Result<f64> {
            let (k1, rest) = k.split_at_mut(1);
            let k1 = &k1[0];
            let [k2, k3, k4, k5, k6, k7] = rest else { unreachable!() };
            for i in 0..dim {
                ytmp[i] = y[i] + h * A21 * k1[i];
            }
            f(t + C2 * h, &ytmp, k2)?;
            for i in 0..dim {
                ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            f(t + C3 * h, &ytmp, k3)?;
            for i in 0..dim {
                ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(t + C4 * h, &ytmp, k4)?;
            for i in 0..dim {
                ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(t + C5 * h, &ytmp, k5)?;
            for i in 0..dim {
                ytmp[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            f(t + h, &ytmp, k6)?;
            for i in 0..dim {
                ynew[i] = y[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            f(t + h, &ynew, k7)?;
            let mut acc = 0.0;
            for i in 0..dim {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = tol.atol + tol.rtol * y[i].abs().max(ynew[i].abs());
                acc += (e / sc) * (e / sc);
            }
            Ok((acc / dim as f64).sqrt())
        })();
        stats.evaluations += 6;

        let err = match attempt {
            Ok(e) if e.is_finite() => e,
            // failed stage evaluation or non-finite estimate: shrink hard
            _ => {
                stats.rejected += 1;
                last_rejected = true;
                h *= 0.25;
                continue;
            }
        };

        if err <= 1.0 {
            // dense output coefficients
            for i in 0..dim {
                let dy = ynew[i] - y[i];
                let bspl = h * k[0][i] - dy;
                cont[0][i] = y[i];
                cont[1][i] = dy;
                cont[2][i] = bspl;
                cont[3][i] = dy - h * k[6][i] - bspl;
                cont[4][i] = h
                    * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i]
                        + D7 * k[6][i]);
            }
            let step = Step { t0: t, h, y0: &y, y1: &ynew, cont: &cont };
            let control = observe(&step);
            stats.accepted += 1;
            t += h;
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6);
            if control == Control::Stop || (t - t_end) * dir >= 0.0 {
                return Ok((y, t, stats));
            }
            // PI controller (Hairer's constants for order 5)
            let beta = 0.04;
            let expo = 0.2 - 0.75 * beta;
            let mut fac = err.max(1e-10).powf(expo) / err_prev.powf(beta) / 0.9;
            fac = fac.clamp(0.1, 5.0);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = dir * h_new.abs().min(h.abs());
            }
            err_prev = err.max(1e-4);
            last_rejected = false;
            h = h_new;
        } else {
            stats.rejected += 1;
            last_rejected = true;
            let fac = (err.powf(0.2) / 0.9).min(10.0);
            h /= fac;
        }
        if settings.max_step > 0.0 && h.abs() > settings.max_step {
            h = dir * settings.max_step;
        }
    }
}

fn initial_step<F>(f: &mut F, t: f64, y: &[f64], f0: &[f64], tol: Tolerance, stats: &mut Stats) -> Result<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let dim = y.len();
    let sc: Vec<f64> = y.iter().map(|v| tol.atol + tol.rtol * v.abs()).collect();
    let rms = |v: &dyn Fn(usize) -> f64| ((0..dim).map(|i| (v(i) / sc[i]).powi(2)).sum::<f64>() / dim as f64).sqrt();
    let d0 = rms(&|i| y[i]);
    let d1 = rms(&|i| f0[i]);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = (0..dim).map(|i| y[i] + h0 * f0[i]).collect();
    let mut f1 = vec![0.0; dim];
    if f(t + h0, &y1, &mut f1).is_err() {
        return Ok(h0);
    }
    stats.evaluations += 1;
    let d2 = rms(&|i| f1[i] - f0[i]) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_accuracy() {
        let settings = Settings::new(1e-10);
        let (y, t, stats) = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0, 0.0],
            10.0,
            &settings,
            |_| Control::Continue,
        )
        .unwrap();
        assert_eq!(t, 10.0);
        assert!((y[0] - 10f64.cos()).abs() < 1e-8, "{}", y[0]);
        assert!((y[1] + 10f64.sin()).abs() < 1e-8);
        assert!(stats.accepted > 10);
    }

    #[test]
    fn dense_output_is_accurate() {
        let settings = Settings::new(1e-10);
        let mut worst: f64 = 0.0;
        integrate(
            |_, y, dy| {
                dy[0] = y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            2.0,
            &settings,
            |step| {
                let mut out = [0.0];
                for j in 0..=4 {
                    let t = step.t0 + step.h * j as f64 / 4.0;
                    step.interpolate(t, &mut out);
                    worst = worst.max((out[0] - t.exp()).abs() / t.exp());
                }
                Control::Continue
            },
        )
        .unwrap();
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn backward_integration() {
        let settings = Settings::new(1e-10);
        let (y, _, _) = integrate(
            |_, y, dy| {
                dy[0] = -2.0 * y[0];
                Ok(())
            },
            1.0,
            &[1.0],
            0.0,
            &settings,
            |_| Control::Continue,
        )
        .unwrap();
        assert!((y[0] - 2f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn blow_up_underflows() {
        let settings = Settings::new(1e-8);
        let r = integrate(
            |_, y, dy| {
                if y[0] > 1e12 {
                    return Err(Error::Invalid("blow-up".into()));
                }
                dy[0] = y[0] * y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            2.0,
            &settings,
            |_| Control::Continue,
        );
        assert!(matches!(r, Err(Error::StepUnderflow { .. })), "{r:?}");
    }
}
