use std::f64::consts::PI;

use crate::{Error, Result};

const MAX_AGM_STEPS: usize = 64;

/// Complete elliptic integral of the first kind, `K(k) = ∫₀^{π/2} dθ / √(1 − k² sin²θ)`.
///
/// **Takes the modulus `k`, not the parameter `m = k²`.** Evaluated through the
/// arithmetic-geometric mean, `K(k) = π / (2 AGM(1, k'))`.
pub fn elliptic_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::domain("elliptic modulus k", k, "must lie in [0, 1)"));
    }
    if k == 0.0 {
        return Ok(PI / 2.0);
    }
    let mut a = 1.0_f64;
    let mut b = complementary_modulus(k);
    for _ in 0..MAX_AGM_STEPS {
        if (a - b).abs() <= f64::EPSILON * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    Ok(PI / (a + b))
}

/// `k' = √(1 − k²)`, evaluated as `√((1 − k)(1 + k))` to keep precision near `k → 1`.
pub fn complementary_modulus(k: f64) -> f64 {
    ((1.0 - k) * (1.0 + k)).sqrt()
}
