use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Least-squares line through `(index, value)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Mean squared residual, divisor `n`.
    pub mse: f64,
}

impl LinearFit {
    pub fn predict(&self, index: usize) -> f64 {
        self.intercept + self.slope * index as f64
    }
}

/// Ordinary least squares of `values[i]` against `i`, reporting the mean
/// squared residual as the deviation-from-linearity metric.
///
/// Units of `mse` are the square of the input units (MHz² for frequencies
/// given in MHz).
pub fn linear_fit_mse(values: &[f64]) -> Result<LinearFit> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let nf = n as f64;
    let x_mean = 0.5 * (nf - 1.0);
    let y_mean = values.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in values.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    let mse = values
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let r = (y - y_mean) - slope * (i as f64 - x_mean);
            r * r
        })
        .sum::<f64>()
        / nf;
    Ok(LinearFit {
        slope,
        intercept: y_mean - slope * x_mean,
        mse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use scpw_oracles::ols_brute_force;

    #[test]
    fn exact_line_has_zero_mse() {
        let f = [
            6595.0, 6625.0, 6655.0, 6685.0, 6715.0, 6745.0, 6775.0, 6805.0,
        ];
        let fit = linear_fit_mse(&f).unwrap();
        assert_eq!(fit.mse, 0.0);
        assert_eq!(fit.slope, 30.0);
        assert_eq!(fit.intercept, 6595.0);
    }

    #[test]
    fn hand_worked_example() {
        let fit = linear_fit_mse(&[0.0, 0.0, 3.0, 0.0]).unwrap();
        assert!((fit.slope - 0.3).abs() < 1e-15);
        assert!((fit.intercept - 0.3).abs() < 1e-15);
        assert!((fit.mse - 1.575).abs() < 1e-15);
        let (m, c, e) = ols_brute_force(&[0.0, 0.0, 3.0, 0.0]);
        assert!((m - 0.3).abs() < 1e-6 && (c - 0.3).abs() < 1e-6);
        assert!((e - 1.575).abs() < 1e-9);
    }

    #[test]
    fn needs_two_points() {
        assert!(linear_fit_mse(&[1.0]).is_err());
        assert!(linear_fit_mse(&[]).is_err());
        assert_eq!(linear_fit_mse(&[1.0, 5.0]).unwrap().mse, 0.0);
    }

    proptest! {
        #[test]
        fn shift_invariance(values in prop::collection::vec(-100.0f64..100.0, 2..12), shift in -1e4f64..1e4) {
            let a = linear_fit_mse(&values).unwrap();
            let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
            let b = linear_fit_mse(&shifted).unwrap();
            prop_assert!((a.mse - b.mse).abs() <= 1e-9 * (1.0 + a.mse));
            prop_assert!((b.intercept - a.intercept - shift).abs() < 1e-8 * (1.0 + shift.abs()));
        }

        #[test]
        fn brute_force_agrees(values in prop::collection::vec(-10.0f64..10.0, 3..9)) {
            let fit = linear_fit_mse(&values).unwrap();
            let (_, _, brute) = ols_brute_force(&values);
            prop_assert!(fit.mse <= brute + 1e-12);
            prop_assert!(brute - fit.mse < 1e-9 * (1.0 + fit.mse));
        }
    }
}
