use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::nlls::{nlls_fit, NllsOptions};
use super::resonance::{initial_notch_guess, NotchProblem};
use super::S21Trace;
use crate::{Error, Result};

/// Smooth complex background `(a₀ + a₁x) · exp(i(θ₀ + θ₁x))` with
/// `x = (f − center)/span`. The phase slope is the cable delay,
/// `τ = −θ₁ / (2π span)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub center: f64,
    pub span: f64,
    pub amp0: f64,
    pub amp1: f64,
    pub phase0: f64,
    pub phase1: f64,
}

impl Baseline {
    pub fn eval(&self, f: f64) -> Complex64 {
        let x = (f - self.center) / self.span;
        Complex64::from_polar(self.amp0 + self.amp1 * x, self.phase0 + self.phase1 * x)
    }

    /// Cable delay [s].
    pub fn delay(&self) -> f64 {
        -self.phase1 / (2.0 * PI * self.span)
    }

    pub(crate) fn from_params(center: f64, span: f64, p: &[f64]) -> Self {
        Baseline {
            center,
            span,
            amp0: p[0],
            amp1: p[1],
            phase0: p[2],
            phase1: p[3],
        }
    }

    fn params(&self) -> [f64; 4] {
        [self.amp0, self.amp1, self.phase0, self.phase1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessOptions {
    /// Fraction of points, split evenly between both ends, treated as
    /// off-resonance.
    pub wing_fraction: f64,
    /// After the wing estimate, refit the baseline jointly with a notch
    /// model over the whole trace. Removes the bias from resonance tails
    /// that leak into the wings.
    pub refine: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            wing_fraction: 0.2,
            refine: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    /// `S21 / baseline`.
    pub trace: S21Trace,
    pub baseline: Baseline,
    pub refined: bool,
}

/// Removes the complex background (amplitude slope and offset, cable delay
/// and phase offset) so that `|S21| ≈ 1` away from resonance.
pub fn preprocess_trace(trace: &S21Trace, options: &PreprocessOptions) -> Result<Preprocessed> {
    let n = trace.len();
    let per_wing = ((options.wing_fraction * n as f64) / 2.0).round() as usize;
    if per_wing < 2 || 2 * per_wing >= n {
        return Err(Error::InsufficientData {
            needed: 2 * 2,
            got: 2 * per_wing.min(n / 2),
        });
    }
    let freq = trace.freq();
    let center = 0.5 * (freq[0] + freq[n - 1]);
    let span = trace.span();
    let x: Vec<f64> = freq.iter().map(|f| (f - center) / span).collect();
    let wings: Vec<usize> = (0..per_wing).chain(n - per_wing..n).collect();

    let mags: Vec<f64> = wings.iter().map(|&i| trace.s21[i].norm()).collect();
    let wx: Vec<f64> = wings.iter().map(|&i| x[i]).collect();
    let (amp0, amp1) = line_fit(&wx, &mags);
    let (phase0, phase1) = wing_phase(trace, &x, per_wing);
    let mut baseline = Baseline {
        center,
        span,
        amp0,
        amp1,
        phase0,
        phase1,
    };

    let mut refined = false;
    if options.refine {
        let normalized: Vec<Complex64> = freq
            .iter()
            .zip(&trace.s21)
            .map(|(&f, &s)| s / baseline.eval(f))
            .collect();
        match initial_notch_guess(freq, &normalized) {
            Ok(guess) => {
                let problem = NotchProblem::new(freq, &trace.s21, &guess, Some((center, span)));
                let mut init = problem.encode(&guess).to_vec();
                init.extend_from_slice(&baseline.params());
                let mut bounds = problem.bounds();
                bounds.lower.extend([f64::NEG_INFINITY; 4]);
                bounds.upper.extend([f64::INFINITY; 4]);
                let sol = nlls_fit(&problem, &init, &bounds, &NllsOptions::default())?;
                baseline = Baseline::from_params(center, span, &sol.params[4..]);
                refined = true;
            }
            Err(Error::NoDip { .. }) => {}
            Err(e) => return Err(e),
        }
    }

    let s21 = freq
        .iter()
        .zip(&trace.s21)
        .map(|(&f, &s)| s / baseline.eval(f))
        .collect();
    Ok(Preprocessed {
        trace: S21Trace::new(freq.to_vec(), s21, trace.power_dbm)?,
        baseline,
        refined,
    })
}

fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - xm) * (b - ym);
        sxx += (a - xm) * (a - xm);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (ym - slope * xm, slope)
}

fn unwrap(phases: &mut [f64]) {
    for i in 1..phases.len() {
        let d = phases[i] - phases[i - 1];
        phases[i] -= 2.0 * PI * (d / (2.0 * PI)).round();
    }
}

/// Linear phase through both wings. Each wing is unwrapped on its own, then
/// the right wing is moved by the multiple of 2π that best continues the
/// pooled within-wing slope.
fn wing_phase(trace: &S21Trace, x: &[f64], per_wing: usize) -> (f64, f64) {
    let n = trace.len();
    let mut left: Vec<f64> = trace.s21[..per_wing].iter().map(|v| v.arg()).collect();
    let mut right: Vec<f64> = trace.s21[n - per_wing..].iter().map(|v| v.arg()).collect();
    unwrap(&mut left);
    unwrap(&mut right);
    let xl = &x[..per_wing];
    let xr = &x[n - per_wing..];
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (xlm, xrm, plm, prm) = (mean(xl), mean(xr), mean(&left), mean(&right));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (xs, ps, xm, pm) in [(xl, &left, xlm, plm), (xr, &right, xrm, prm)] {
        for (a, b) in xs.iter().zip(ps.iter()) {
            sxy += (a - xm) * (b - pm);
            sxx += (a - xm) * (a - xm);
        }
    }
    let pooled = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let predicted = plm + pooled * (xrm - xlm);
    let shift = 2.0 * PI * ((predicted - prm) / (2.0 * PI)).round();
    right.iter_mut().for_each(|p| *p += shift);
    let xs: Vec<f64> = xl.iter().chain(xr).copied().collect();
    let ps: Vec<f64> = left.into_iter().chain(right).collect();
    line_fit(&xs, &ps)
}
