use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::fit::{notch_s21, NotchParams, S21Trace};
use crate::{Error, Result};

/// Separation, in units of the widest linewidth, below which neighbouring
/// resonances are reported as overlapping.
const OVERLAP_LINEWIDTHS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTrace {
    pub trace: S21Trace,
    /// Some pair of resonances is closer than ten linewidths, so the
    /// product-of-notches approximation is questionable.
    pub overlapping: bool,
}

/// Composite feedline transmission: the product of every resonator's notch
/// response, plus complex Gaussian noise with standard deviation
/// `noise_sigma` on each of the real and imaginary parts.
pub fn synthesize_s21(
    resonators: &[NotchParams],
    freq: &[f64],
    noise_sigma: f64,
    seed: u64,
) -> Result<SyntheticTrace> {
    if let Some(i) = freq.windows(2).position(|p| !(p[1] > p[0])) {
        return Err(Error::GridOrdering { index: i + 1 });
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::domain("noise_sigma", noise_sigma, "must be >= 0"));
    }
    for r in resonators {
        r.validate()?;
    }
    let mut s21: Vec<Complex64> = freq
        .iter()
        .map(|&f| {
            resonators
                .iter()
                .map(|r| notch_s21(f, r))
                .product::<Complex64>()
        })
        .collect();
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_sigma).expect("sigma checked above");
        for v in &mut s21 {
            let re = normal.sample(&mut rng);
            let im = normal.sample(&mut rng);
            *v += Complex64::new(re, im);
        }
    }
    Ok(SyntheticTrace {
        trace: S21Trace::new(freq.to_vec(), s21, None)?,
        overlapping: overlapping(resonators),
    })
}

fn overlapping(resonators: &[NotchParams]) -> bool {
    let mut sorted: Vec<&NotchParams> = resonators.iter().collect();
    sorted.sort_by(|a, b| a.f0.total_cmp(&b.f0));
    sorted.windows(2).any(|p| {
        let width = p[0].linewidth().max(p[1].linewidth());
        p[1].f0 - p[0].f0 < OVERLAP_LINEWIDTHS * width
    })
}
