use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{linear_fit_mse, ChipDesign, ThicknessModel};
use crate::kinetic::KineticMode;
use crate::parallel::{try_map_indexed, Execution};
use crate::resonator::ResonatorModel;
use crate::{Error, Result};

/// Generator used for thickness draws. Trial `t` uses a `ChaCha8Rng` seeded
/// from the run seed with its stream set to `t`, so every trial is
/// independent of scheduling.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng/rand_chacha-0.9 seed_from_u64(seed), stream=trial";

const MAX_REJECTIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    /// Per-trial MSE of the linear fit [MHz²].
    pub mse_samples: Vec<f64>,
    /// Per-trial mean of `f_realized − f_target` [MHz].
    pub delta_f_samples: Vec<f64>,
    pub seed: u64,
    pub n_trials: usize,
}

impl McResult {
    pub fn mean_mse(&self) -> f64 {
        mean(&self.mse_samples)
    }

    pub fn mean_delta_f(&self) -> f64 {
        mean(&self.delta_f_samples)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Propagates thickness disorder to chip-level frequency statistics.
///
/// Resonator lengths are solved so that every resonator hits its target at
/// `tm.d_nominal` including the kinetic term; each trial then draws new
/// thicknesses and re-evaluates the frequencies.
pub fn run_monte_carlo(
    chip: &ChipDesign,
    tm: &ThicknessModel,
    n_trials: usize,
    seed: u64,
) -> Result<McResult> {
    run_monte_carlo_with(chip, tm, n_trials, seed, Execution::default())
}

pub fn run_monte_carlo_with(
    chip: &ChipDesign,
    tm: &ThicknessModel,
    n_trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<McResult> {
    tm.validate()?;
    if n_trials == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut nominal = *chip;
    nominal.geom.d = tm.d_nominal;
    let models = nominal.design(KineticMode::Full)?;
    let targets = nominal.target_frequencies();

    let trials = try_map_indexed(n_trials, exec, |t| {
        run_trial(&models, &targets, tm, seed, t as u64)
    })?;
    let (mse_samples, delta_f_samples) = trials.into_iter().unzip();
    Ok(McResult {
        mse_samples,
        delta_f_samples,
        seed,
        n_trials,
    })
}

fn run_trial(
    models: &[ResonatorModel],
    targets: &[f64],
    tm: &ThicknessModel,
    seed: u64,
    trial: u64,
) -> Result<(f64, f64)> {
    let n = models.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let mut freqs_mhz = Vec::with_capacity(n);
    let mut shift_sum = 0.0;
    for (i, model) in models.iter().enumerate() {
        let d = draw_thickness(&mut rng, tm, i, n, model.geom.w)?;
        let f = model.at_thickness(d)?.f_full;
        freqs_mhz.push(f * 1e-6);
        shift_sum += (f - targets[i]) * 1e-6;
    }
    let fit = linear_fit_mse(&freqs_mhz)?;
    Ok((fit.mse, shift_sum / n as f64))
}

fn draw_thickness(
    rng: &mut ChaCha8Rng,
    tm: &ThicknessModel,
    i: usize,
    n: usize,
    w: f64,
) -> Result<f64> {
    let centre = tm.mean_thickness(i, n);
    let feasible = |d: f64| d > 0.0 && d < w;
    if tm.sigma_d == 0.0 {
        // no randomness consumed
        return if feasible(centre) {
            Ok(centre)
        } else {
            Err(Error::RejectionLimit {
                resonator: i,
                attempts: 1,
            })
        };
    }
    for _ in 0..MAX_REJECTIONS {
        let z: f64 = StandardNormal.sample(rng);
        let d = centre + tm.sigma_d * z;
        if feasible(d) {
            return Ok(d);
        }
    }
    Err(Error::RejectionLimit {
        resonator: i,
        attempts: MAX_REJECTIONS,
    })
}
