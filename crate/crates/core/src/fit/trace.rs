use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Complex transmission sampled on a strictly increasing frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S21Trace {
    freq: Vec<f64>,
    pub s21: Vec<Complex64>,
    /// Source power the trace was taken at [dBm], when known.
    pub power_dbm: Option<f64>,
}

impl S21Trace {
    pub fn new(freq: Vec<f64>, s21: Vec<Complex64>, power_dbm: Option<f64>) -> Result<Self> {
        if freq.len() != s21.len() {
            return Err(Error::domain(
                "trace length",
                s21.len() as f64,
                "frequency and S21 vectors differ in length",
            ));
        }
        if let Some(i) = freq.iter().position(|f| !f.is_finite()) {
            return Err(Error::domain("frequency", freq[i], "must be finite"));
        }
        if let Some(v) = s21.iter().find(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::domain("S21", v.re, "must be finite"));
        }
        if let Some(i) = freq.windows(2).position(|p| !(p[1] > p[0])) {
            return Err(Error::GridOrdering { index: i + 1 });
        }
        Ok(S21Trace {
            freq,
            s21,
            power_dbm,
        })
    }

    pub fn freq(&self) -> &[f64] {
        &self.freq
    }

    pub fn len(&self) -> usize {
        self.freq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq.is_empty()
    }

    pub fn span(&self) -> f64 {
        match (self.freq.first(), self.freq.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Copy restricted to `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> Result<Self> {
        let (freq, s21) = self
            .freq
            .iter()
            .zip(&self.s21)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(f, s)| (*f, *s))
            .unzip();
        S21Trace::new(freq, s21, self.power_dbm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let one = Complex64::new(1.0, 0.0);
        assert!(S21Trace::new(vec![1.0, 2.0], vec![one], None).is_err());
        assert!(matches!(
            S21Trace::new(vec![1.0, 3.0, 2.0], vec![one; 3], None),
            Err(Error::GridOrdering { index: 2 })
        ));
        assert!(S21Trace::new(vec![1.0, f64::NAN], vec![one; 2], None).is_err());
        assert!(S21Trace::new(
            vec![1.0, 2.0],
            vec![one, Complex64::new(f64::NAN, 0.0)],
            None
        )
        .is_err());
        let t = S21Trace::new(vec![1.0, 2.0, 3.0], vec![one; 3], Some(-30.0)).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.window(1.5, 3.0).unwrap().len(), 2);
    }
}
