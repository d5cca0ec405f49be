use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::nlls::{nlls_fit, Bounds, LeastSquaresProblem, NllsOptions};
use super::notch::notch_response;
use super::preprocess::{preprocess_trace, Baseline, PreprocessOptions};
use super::{NotchParams, S21Trace};
use crate::parallel::{map_indexed, Execution};
use crate::{Error, Result};

const MIN_POINTS: usize = 20;
const NO_DIP_RATIO: f64 = 0.99;
const MIN_SPAN_LINEWIDTHS: f64 = 3.0;
const PHI_LIMIT: f64 = FRAC_PI_2 - 1e-6;
const LN_Q_MAX: f64 = 25.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Remove the background before fitting. Switch off only for traces that
    /// are already normalized.
    pub preprocess: bool,
    pub preprocess_options: PreprocessOptions,
    pub nlls: NllsOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            preprocess: true,
            preprocess_options: PreprocessOptions::default(),
            nlls: NllsOptions::default(),
        }
    }
}

/// One-sigma uncertainties from the scaled covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceUncertainties {
    pub f0: f64,
    pub q: f64,
    pub qc: f64,
    pub phi: f64,
    pub qi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceFit {
    pub params: NotchParams,
    /// Loaded quality factor.
    pub q: f64,
    pub uncertainties: ResonanceUncertainties,
    /// RMS of the complex residual components after normalization.
    pub residual_rms: f64,
    pub singular: bool,
    pub iterations: usize,
    pub baseline: Option<Baseline>,
    pub power_dbm: Option<f64>,
}

/// Fits the notch model to a single-resonance trace.
pub fn fit_resonance(trace: &S21Trace, options: &FitOptions) -> Result<ResonanceFit> {
    if trace.len() < MIN_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_POINTS,
            got: trace.len(),
        });
    }
    let (normalized, baseline) = if options.preprocess {
        let pre = preprocess_trace(trace, &options.preprocess_options)?;
        (pre.trace, Some(pre.baseline))
    } else {
        (trace.clone(), None)
    };
    let freq = normalized.freq();
    let guess = initial_notch_guess(freq, &normalized.s21)?;
    let span = normalized.span();
    if span < MIN_SPAN_LINEWIDTHS * guess.f0 / guess.q {
        return Err(Error::domain(
            "trace span",
            span,
            "narrower than three linewidths",
        ));
    }

    let problem = NotchProblem::new(freq, &normalized.s21, &guess, None);
    let sol = nlls_fit(
        &problem,
        &problem.encode(&guess),
        &problem.bounds(),
        &options.nlls,
    )?;
    let (f0, q, qc, phi) = problem.decode(&sol.params);
    let inv_qi = 1.0 / q - phi.cos() / qc;
    if !(inv_qi > 0.0) {
        return Err(Error::Unphysical {
            quantity: "Qi",
            value: 1.0 / inv_qi,
        });
    }
    let qi = 1.0 / inv_qi;

    let cov = &sol.covariance;
    let sd = |i: usize| cov[(i, i)].max(0.0).sqrt();
    // dQi/d(u, ln Q, ln Qc, φ)
    let grad = [
        0.0,
        qi * qi / q,
        -qi * qi * phi.cos() / qc,
        -qi * qi * phi.sin() / qc,
    ];
    let mut var_qi = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            var_qi += grad[a] * cov[(a, b)] * grad[b];
        }
    }

    Ok(ResonanceFit {
        params: NotchParams { f0, qi, qc, phi },
        q,
        uncertainties: ResonanceUncertainties {
            f0: problem.w_ref * sd(0),
            q: q * sd(1),
            qc: qc * sd(2),
            phi: sd(3),
            qi: var_qi.max(0.0).sqrt(),
        },
        residual_rms: sol.residual_rms,
        singular: sol.singular,
        iterations: sol.iterations,
        baseline,
        power_dbm: trace.power_dbm,
    })
}

/// Fits every trace independently; results keep the input order.
pub fn fit_resonances(
    traces: &[S21Trace],
    options: &FitOptions,
    exec: Execution,
) -> Vec<Result<ResonanceFit>> {
    map_indexed(traces.len(), exec, |i| fit_resonance(&traces[i], options))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct NotchGuess {
    pub f0: f64,
    pub q: f64,
    pub qc: f64,
    pub phi: f64,
}

/// Starting point from the trace shape: `f0` at the deepest point, `Q` from
/// the half-power width of `|1 − S21|²`, `Qc` from the depth, `φ` from the
/// direction of `1 − S21` on resonance.
pub(crate) fn initial_notch_guess(freq: &[f64], s21: &[Complex64]) -> Result<NotchGuess> {
    let n = s21.len();
    let wing = (n / 10).max(1);
    let level = s21[..wing]
        .iter()
        .chain(&s21[n - wing..])
        .map(|v| v.norm())
        .sum::<f64>()
        / (2 * wing) as f64;
    let (i_min, min) = s21
        .iter()
        .map(|v| v.norm())
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("trace is non-empty");
    let ratio = min / level;
    if !(ratio <= NO_DIP_RATIO) {
        return Err(Error::NoDip { ratio });
    }

    let depth2: Vec<f64> = s21.iter().map(|v| (level - v).norm_sqr()).collect();
    let half = 0.5 * depth2[i_min];
    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = i_min;
        for i in range {
            if depth2[i] < half {
                let t = (depth2[prev] - half) / (depth2[prev] - depth2[i]);
                return Some((freq[i] - freq[prev]) * t + freq[prev]);
            }
            prev = i;
        }
        None
    };
    let left = crossing(&mut (0..i_min).rev());
    let right = crossing(&mut (i_min + 1..n));
    let f0 = freq[i_min];
    let width = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (f0 - l),
        (None, Some(r)) => 2.0 * (r - f0),
        (None, None) => 0.5 * (freq[n - 1] - freq[0]),
    }
    .max(freq[1] - freq[0]);
    let q = f0 / width;
    let dip = Complex64::new(1.0, 0.0) - s21[i_min] / level;
    let qc = q / dip.norm().max(1e-6);
    Ok(NotchGuess {
        f0,
        q,
        qc,
        phi: dip.arg().clamp(-1.2, 1.2),
    })
}

/// Notch model residuals over `(u, ln Q, ln Qc, φ)` with
/// `f0 = f_ref + u · w_ref`, optionally multiplied by a [`Baseline`] whose
/// four parameters follow.
pub(crate) struct NotchProblem<'a> {
    freq: &'a [f64],
    data: &'a [Complex64],
    f_ref: f64,
    w_ref: f64,
    baseline: Option<(f64, f64)>,
}

impl<'a> NotchProblem<'a> {
    pub fn new(
        freq: &'a [f64],
        data: &'a [Complex64],
        guess: &NotchGuess,
        baseline: Option<(f64, f64)>,
    ) -> Self {
        NotchProblem {
            freq,
            data,
            f_ref: guess.f0,
            w_ref: guess.f0 / guess.q,
            baseline,
        }
    }

    pub fn encode(&self, g: &NotchGuess) -> [f64; 4] {
        [
            (g.f0 - self.f_ref) / self.w_ref,
            g.q.ln().min(LN_Q_MAX),
            g.qc.ln().min(LN_Q_MAX),
            g.phi.clamp(-PHI_LIMIT, PHI_LIMIT),
        ]
    }

    pub fn decode(&self, p: &[f64]) -> (f64, f64, f64, f64) {
        (self.f_ref + p[0] * self.w_ref, p[1].exp(), p[2].exp(), p[3])
    }

    pub fn bounds(&self) -> Bounds {
        let n = self.freq.len();
        Bounds {
            lower: vec![
                (self.freq[0] - self.f_ref) / self.w_ref,
                0.0,
                0.0,
                -PHI_LIMIT,
            ],
            upper: vec![
                (self.freq[n - 1] - self.f_ref) / self.w_ref,
                LN_Q_MAX,
                LN_Q_MAX,
                PHI_LIMIT,
            ],
        }
    }
}

impl LeastSquaresProblem for NotchProblem<'_> {
    fn num_residuals(&self) -> usize {
        2 * self.freq.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        let (f0, q, qc, phi) = self.decode(p);
        let bl = self
            .baseline
            .map(|(center, span)| Baseline::from_params(center, span, &p[4..8]));
        for (i, (&f, &d)) in self.freq.iter().zip(self.data).enumerate() {
            let mut model = notch_response(f, f0, q, qc, phi);
            if let Some(b) = &bl {
                model *= b.eval(f);
            }
            let r = model - d;
            out[2 * i] = r.re;
            out[2 * i + 1] = r.im;
        }
    }
}
