use serde::{Deserialize, Serialize};

use super::nlls::{nlls_fit, Bounds, FnProblem, NllsOptions};
use crate::constants::{HBAR, K_B};
use crate::error::positive;
use crate::{Error, Result};

/// One point of a power sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlsPoint {
    pub n_photons: f64,
    pub qi: f64,
    pub sigma_qi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlsUncertainties {
    pub f_delta0: f64,
    pub n_c: f64,
    pub q_others: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlsFit {
    /// Filling factor times low-power TLS loss tangent.
    pub f_delta0: f64,
    /// Critical photon number.
    pub n_c: f64,
    /// Power-independent internal Q.
    pub q_others: f64,
    pub temperature: f64,
    pub frequency: f64,
    pub uncertainties: TlsUncertainties,
    /// Weighted residual RMS.
    pub residual_rms: f64,
}

impl TlsFit {
    pub fn qi_at(&self, n_photons: f64) -> f64 {
        tls_internal_q(
            n_photons,
            self.f_delta0,
            self.n_c,
            self.q_others,
            thermal_factor(self.temperature, self.frequency),
        )
    }
}

/// `tanh(ħω / 2 k_B T)`.
pub fn thermal_factor(temperature: f64, frequency: f64) -> f64 {
    let omega = 2.0 * std::f64::consts::PI * frequency;
    (HBAR * omega / (2.0 * K_B * temperature)).tanh()
}

/// `Qi = ( Fδ⁰ · thermal / √(1 + n/n_c) + 1/Q_others )⁻¹`.
pub fn tls_internal_q(n: f64, f_delta0: f64, n_c: f64, q_others: f64, thermal: f64) -> f64 {
    1.0 / (f_delta0 * thermal / (1.0 + n / n_c).sqrt() + 1.0 / q_others)
}

/// Minimum relative variation of Qi across the sweep for the TLS term to be
/// distinguishable from a constant.
const MIN_QI_VARIATION: f64 = 1e-6;

/// Weighted (1/σ²) fit of the TLS saturation model to a power sweep.
///
/// The thermal factor is fixed by `temperature` and `frequency`.
pub fn fit_tls(sweep: &[TlsPoint], temperature: f64, frequency: f64) -> Result<TlsFit> {
    positive("temperature", temperature)?;
    positive("frequency", frequency)?;
    if sweep.len() < 5 {
        return Err(Error::InsufficientData {
            needed: 5,
            got: sweep.len(),
        });
    }
    for p in sweep {
        positive("photon number", p.n_photons)?;
        positive("Qi", p.qi)?;
        positive("sigma Qi", p.sigma_qi)?;
    }
    let n_min = sweep
        .iter()
        .map(|p| p.n_photons)
        .fold(f64::INFINITY, f64::min);
    let n_max = sweep.iter().map(|p| p.n_photons).fold(0.0, f64::max);
    if (n_max / n_min).log10() < 3.0 {
        return Err(Error::DegenerateSweep(
            "photon numbers span fewer than 3 decades",
        ));
    }
    let q_min = sweep.iter().map(|p| p.qi).fold(f64::INFINITY, f64::min);
    let q_max = sweep.iter().map(|p| p.qi).fold(0.0, f64::max);
    if q_max / q_min - 1.0 < MIN_QI_VARIATION {
        return Err(Error::DegenerateSweep(
            "Qi shows no power dependence; Q_others is unidentifiable",
        ));
    }

    let thermal = thermal_factor(temperature, frequency);
    let init = initial_guess(sweep, thermal, n_min, n_max);

    let points = sweep.to_vec();
    let problem = FnProblem::new(points.len(), move |p: &[f64], out: &mut [f64]| {
        let (fd, nc, qo) = (p[0].exp(), p[1].exp(), p[2].exp());
        for (o, pt) in out.iter_mut().zip(&points) {
            *o = (tls_internal_q(pt.n_photons, fd, nc, qo, thermal) - pt.qi) / pt.sigma_qi;
        }
    });
    let bounds = Bounds {
        lower: vec![(1e-12f64).ln(), (n_min * 1e-4).ln(), (10.0f64).ln()],
        upper: vec![(1.0f64).ln(), (n_max * 1e4).ln(), (1e12f64).ln()],
    };
    let mut start = init.map(f64::ln).to_vec();
    for j in 0..3 {
        start[j] = start[j].clamp(bounds.lower[j], bounds.upper[j]);
    }
    let sol = nlls_fit(&problem, &start, &bounds, &NllsOptions::default())?;
    let values: Vec<f64> = sol.params.iter().map(|v| v.exp()).collect();
    Ok(TlsFit {
        f_delta0: values[0],
        n_c: values[1],
        q_others: values[2],
        temperature,
        frequency,
        uncertainties: TlsUncertainties {
            f_delta0: values[0] * sol.uncertainties[0],
            n_c: values[1] * sol.uncertainties[1],
            q_others: values[2] * sol.uncertainties[2],
        },
        residual_rms: sol.residual_rms,
    })
}

/// For a fixed `n_c` the loss `1/Qi = A h(n) + B` is linear in `(A, B)`;
/// scan `n_c` on a log grid and keep the best weighted linear fit.
fn initial_guess(sweep: &[TlsPoint], thermal: f64, n_min: f64, n_max: f64) -> [f64; 3] {
    let lo = (n_min * 1e-2).log10();
    let hi = (n_max * 1e2).log10();
    let steps = 200;
    let mut best = (f64::INFINITY, [1e-6, n_min.max(1.0), 1e6]);
    for k in 0..=steps {
        let nc = 10f64.powf(lo + (hi - lo) * k as f64 / steps as f64);
        let (mut s_ww, mut s_wh, mut s_whh, mut s_wy, mut s_why) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for p in sweep {
            let h = thermal / (1.0 + p.n_photons / nc).sqrt();
            let y = 1.0 / p.qi;
            let sig = p.sigma_qi / (p.qi * p.qi);
            let w = 1.0 / (sig * sig);
            s_ww += w;
            s_wh += w * h;
            s_whh += w * h * h;
            s_wy += w * y;
            s_why += w * h * y;
        }
        let det = s_ww * s_whh - s_wh * s_wh;
        if det.abs() < f64::MIN_POSITIVE {
            continue;
        }
        let a = (s_ww * s_why - s_wh * s_wy) / det;
        let b = (s_whh * s_wy - s_wh * s_why) / det;
        if !(a > 0.0 && b > 0.0) {
            continue;
        }
        let chi2: f64 = sweep
            .iter()
            .map(|p| {
                let model = tls_internal_q(p.n_photons, a, nc, 1.0 / b, thermal);
                ((model - p.qi) / p.sigma_qi).powi(2)
            })
            .sum();
        if chi2 < best.0 {
            best = (chi2, [a, nc, 1.0 / b]);
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sweep(fd: f64, nc: f64, qo: f64, t: f64, f: f64) -> Vec<TlsPoint> {
        let th = thermal_factor(t, f);
        (0..=28)
            .map(|i| {
                let n = 10f64.powf(-1.0 + i as f64 * 0.25);
                let qi = tls_internal_q(n, fd, nc, qo, th);
                TlsPoint {
                    n_photons: n,
                    qi,
                    sigma_qi: 0.01 * qi,
                }
            })
            .collect()
    }

    #[test]
    fn thermal_factor_at_base_temperature() {
        let x = HBAR * 2.0 * std::f64::consts::PI * 6.636e9 / K_B;
        assert!((x - 0.3185).abs() < 1e-4, "{x}");
        let th = thermal_factor(0.013, 6.636e9);
        assert!((1.0 - th) < 1e-9 && th <= 1.0);
    }

    #[test]
    fn noiseless_round_trip() {
        let data = sweep(2e-7, 10.0, 5e6, 0.013, 6.636e9);
        let fit = fit_tls(&data, 0.013, 6.636e9).unwrap();
        assert!((fit.f_delta0 / 2e-7 - 1.0).abs() < 1e-2);
        assert!((fit.n_c / 10.0 - 1.0).abs() < 1e-2);
        assert!((fit.q_others / 5e6 - 1.0).abs() < 1e-2);
        let q1 = fit.qi_at(1.0);
        assert!((q1 / 2.5e6 - 1.0).abs() < 0.1, "{q1}");
        assert!((fit.qi_at(1e15) / fit.q_others - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fitted_curve_monotone() {
        for (fd, nc, qo) in [(2e-7, 10.0, 5e6), (1e-6, 0.5, 1e6), (5e-8, 1e3, 2e7)] {
            let data = sweep(fd, nc, qo, 0.02, 5e9);
            let fit = fit_tls(&data, 0.02, 5e9).unwrap();
            let mut prev = 0.0;
            for i in 0..200 {
                let q = fit.qi_at(10f64.powf(-3.0 + i as f64 * 0.06));
                assert!(q >= prev);
                prev = q;
            }
        }
    }

    #[test]
    fn preconditions() {
        let data = sweep(2e-7, 10.0, 5e6, 0.013, 6.636e9);
        assert!(matches!(
            fit_tls(&data[..4], 0.013, 6.636e9),
            Err(Error::InsufficientData { .. })
        ));
        assert!(matches!(
            fit_tls(&data[..10], 0.013, 6.636e9),
            Err(Error::DegenerateSweep(_))
        ));
        let flat: Vec<TlsPoint> = data
            .iter()
            .map(|p| TlsPoint {
                qi: 1e6,
                sigma_qi: 1e4,
                ..*p
            })
            .collect();
        assert!(matches!(
            fit_tls(&flat, 0.013, 6.636e9),
            Err(Error::DegenerateSweep(_))
        ));
    }
}
