//! Power-law fits `value ≈ e^{intercept} · N^{exponent}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(ln N, ln value)`.
pub fn scaling_fit(n_values: &[f64], merit_values: &[f64]) -> Result<ScalingFit> {
    if n_values.len() != merit_values.len() {
        return Err(Error::DimensionMismatch {
            expected: n_values.len(),
            found: merit_values.len(),
        });
    }
    if n_values.len() < 2
        || n_values
            .iter()
            .chain(merit_values)
            .any(|&v| !(v > 0.0) || !v.is_finite())
    {
        return Err(Error::DegenerateFit);
    }
    let xs: Vec<f64> = n_values.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = merit_values.iter().map(|v| v.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit);
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok(ScalingFit {
        exponent,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let ns: Vec<f64> = (2..=50).map(|n| n as f64).collect();
        let vs: Vec<f64> = ns.iter().map(|n| 3.0 * n.powf(-0.5)).collect();
        let fit = scaling_fit(&ns, &vs).unwrap();
        assert!((fit.exponent + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_has_zero_slope() {
        let fit = scaling_fit(&[2.0, 3.0, 10.0], &[0.8, 0.8, 0.8]).unwrap();
        assert!(fit.exponent.abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(scaling_fit(&[2.0], &[1.0]).is_err());
        assert!(scaling_fit(&[2.0, 3.0], &[1.0, -1.0]).is_err());
        assert!(scaling_fit(&[2.0, 2.0], &[1.0, 3.0]).is_err());
        assert!(scaling_fit(&[2.0, 3.0], &[1.0]).is_err());
    }
}
