//! Decay-rate regressions: two-variable power laws in the boundary defining
//! functions and exponential decay in time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Smallest sample count accepted by the corner power-law fit.
pub const MIN_DECAY_SAMPLES: usize = 100;

/// Fit of `q ≈ C rho1^a1 rho2^a2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponents: [f64; 2],
    pub constant: f64,
    /// Coefficient of determination of the log-log regression.
    pub r_squared: f64,
    pub samples: usize,
    /// Nodes dropped because the quantity was at or below the noise floor.
    pub below_floor: usize,
    /// Set when the quantity sits at the noise floor, so the exponents carry
    /// no information.
    pub degenerate: bool,
}

impl DecayFit {
    pub fn passes(&self, min_exponent: f64, min_r2: f64) -> bool {
        !self.degenerate && self.exponents.iter().all(|&a| a >= min_exponent) && self.r_squared >= min_r2
    }
}

fn r_squared(y: &[f64], resid: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let res: f64 = resid.iter().map(|v| v * v).sum();
    if tot == 0.0 {
        if res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - res / tot
    }
}

/// Least squares of `log q` against `(1, log rho1, log rho2)` over samples
/// `(rho1, rho2, q)`. Values at or below `floor` are skipped; if the
/// largest value is itself at the floor the fit is flagged degenerate.
pub fn power_law_fit(samples: &[(f64, f64, f64)], floor: f64) -> Result<DecayFit> {
    if samples.len() < MIN_DECAY_SAMPLES {
        return Err(Error::InsufficientSamples {
            have: samples.len(),
            need: MIN_DECAY_SAMPLES,
        });
    }
    let peak = samples.iter().map(|s| s.2).fold(0.0, f64::max);
    let kept: Vec<&(f64, f64, f64)> = samples.iter().filter(|s| s.2 > floor && s.0 > 0.0 && s.1 > 0.0).collect();
    let below_floor = samples.len() - kept.len();
    if peak <= floor {
        return Ok(DecayFit {
            exponents: [0.0, 0.0],
            constant: peak,
            r_squared: 0.0,
            samples: samples.len(),
            below_floor,
            degenerate: true,
        });
    }
    if kept.len() < MIN_DECAY_SAMPLES {
        return Err(Error::InsufficientSamples {
            have: kept.len(),
            need: MIN_DECAY_SAMPLES,
        });
    }
    let rows: Vec<Vec<f64>> = kept.iter().map(|s| vec![1.0, s.0.ln(), s.1.ln()]).collect();
    let y: Vec<f64> = kept.iter().map(|s| s.2.ln()).collect();
    let (c, resid) = linalg::least_squares(&rows, &y)?;
    Ok(DecayFit {
        exponents: [c[1], c[2]],
        constant: c[0].exp(),
        r_squared: r_squared(&y, &resid),
        samples: kept.len(),
        below_floor,
        degenerate: false,
    })
}

/// Fit of `q(t) ≈ C exp(-a t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub constant: f64,
    pub rate: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Log-linear least squares of `(t, q)` pairs with `q > 0`.
pub fn exponential_fit(series: &[(f64, f64)], min_samples: usize) -> Result<RateFit> {
    let kept: Vec<&(f64, f64)> = series.iter().filter(|s| s.1 > 0.0 && s.1.is_finite()).collect();
    if kept.len() < min_samples.max(2) {
        return Err(Error::InsufficientSamples {
            have: kept.len(),
            need: min_samples.max(2),
        });
    }
    let rows: Vec<Vec<f64>> = kept.iter().map(|s| vec![1.0, s.0]).collect();
    let y: Vec<f64> = kept.iter().map(|s| s.1.ln()).collect();
    let (c, resid) = linalg::least_squares(&rows, &y)?;
    Ok(RateFit {
        constant: c[0].exp(),
        rate: -c[1],
        r_squared: r_squared(&y, &resid),
        samples: kept.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_power_law_is_recovered() {
        let mut s = Vec::new();
        for i in 1..=12 {
            for j in 1..=12 {
                let (r1, r2) = (0.5f64.powi(i), 0.6f64.powi(j));
                s.push((r1, r2, 2.0 * r1.powf(0.45) * r2.powf(0.45)));
            }
        }
        let f = power_law_fit(&s, 0.0).unwrap();
        assert!((f.exponents[0] - 0.45).abs() < 1e-12 && (f.exponents[1] - 0.45).abs() < 1e-12);
        assert!((f.constant - 2.0).abs() < 1e-11 && f.r_squared > 1.0 - 1e-12);
        assert!(f.passes(0.4, 0.9));
        assert!(matches!(power_law_fit(&s[..50], 0.0), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn noise_floor_is_flagged() {
        let s: Vec<_> = (0..200).map(|i| (0.1 + i as f64 * 1e-3, 0.2, 1e-15)).collect();
        let f = power_law_fit(&s, 1e-12).unwrap();
        assert!(f.degenerate && !f.passes(0.0, 0.0));
    }

    #[test]
    fn exponential_rates() {
        let s: Vec<_> = (0..40).map(|i| (0.25 * i as f64, 3.0 * (-0.7 * 0.25 * i as f64).exp())).collect();
        let f = exponential_fit(&s, 20).unwrap();
        assert!((f.rate - 0.7).abs() < 1e-10 && (f.constant - 3.0).abs() < 1e-10);
        let flat: Vec<_> = (0..40).map(|i| (i as f64, 1.0 + 0.01 * i as f64)).collect();
        assert!(exponential_fit(&flat, 20).unwrap().rate <= 0.0);
        assert!(exponential_fit(&s[..5], 20).is_err());
    }
}
