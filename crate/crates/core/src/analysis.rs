//! Cross-method comparisons: Jarzynski free-energy estimates from any kind
//! of work data, and L1 distances between work densities on a shared grid.

use serde::{Deserialize, Serialize};

use crate::characteristic::CharacteristicGrid;
use crate::error::{Error, Result};
use crate::spectra::{invert, WorkHistogram};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Semiclassical,
    ClassicalMc,
    Quantum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JarzynskiReport {
    pub beta: f64,
    pub delta_f_estimate: f64,
    pub delta_f_reference: f64,
    pub stderr: f64,
    pub method: Method,
}

impl JarzynskiReport {
    pub fn deviation(&self) -> f64 {
        self.delta_f_estimate - self.delta_f_reference
    }

    /// `|deviation| / stderr` (infinite for an exact estimate that misses).
    pub fn z_score(&self) -> f64 {
        let d = self.deviation().abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

/// A free-energy estimate `-ln<exp(-beta W)> / beta` with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JarzynskiEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

impl JarzynskiEstimate {
    pub fn report(&self, beta: f64, reference: f64, method: Method) -> JarzynskiReport {
        JarzynskiReport {
            beta,
            delta_f_estimate: self.estimate,
            delta_f_reference: reference,
            stderr: self.stderr,
            method,
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::range("beta", "must be positive and finite"));
    }
    Ok(())
}

/// Direct sample estimate, with a delta-method standard error.
///
/// Exponents are shifted by the smallest work value, and the mean of
/// `exp(-beta (W - W_min)) - 1` is accumulated with `expm1` so that the
/// small-`beta` limit keeps full precision. Values are summed in sorted
/// order, making the result independent of sample order.
pub fn jarzynski_from_samples(values: &[f64], beta: f64) -> Result<JarzynskiEstimate> {
    check_beta(beta)?;
    if values.is_empty() {
        return Err(Error::range("values", "no work samples"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let w_min = sorted[0];
    if !w_min.is_finite() || !sorted[sorted.len() - 1].is_finite() {
        return Err(Error::DegenerateMean(f64::NAN));
    }
    let n = sorted.len() as f64;
    // Largest W first: the smallest terms are added first.
    let terms: Vec<f64> = sorted.iter().rev().map(|w| (-beta * (w - w_min)).exp_m1()).collect();
    let mean_m1 = terms.iter().sum::<f64>() / n;
    let mean = 1.0 + mean_m1;
    if !(mean > 0.0) {
        return Err(Error::DegenerateMean(mean));
    }
    let var = if sorted.len() > 1 {
        terms.iter().map(|t| (t - mean_m1).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(JarzynskiEstimate {
        estimate: w_min - mean_m1.ln_1p() / beta,
        stderr: (var / n).sqrt() / (beta * mean),
    })
}

/// Estimate from a broadened density: `sum exp(-beta W) P(W) dW` over the
/// bins, divided by the Gaussian bias `exp(beta^2 eps^2 / 2)`.
pub fn jarzynski_from_histogram(hist: &WorkHistogram, beta: f64) -> Result<JarzynskiEstimate> {
    check_beta(beta)?;
    let centers = hist.centers();
    let shift = centers[0];
    let coeffs: Vec<f64> = centers.iter().map(|w| (-beta * (w - shift)).exp()).collect();
    let sum = coeffs
        .iter()
        .zip(&hist.density)
        .map(|(c, p)| c * p)
        .sum::<f64>()
        * hist.bin_width;
    if !(sum > 0.0 && sum.is_finite()) {
        return Err(Error::DegenerateMean(sum));
    }
    let bias = 0.5 * beta * hist.broadening * hist.broadening;
    let se = hist.functional_stderr(&coeffs);
    Ok(JarzynskiEstimate {
        estimate: shift - sum.ln() / beta + bias,
        stderr: se / (beta * sum),
    })
}

/// Inverts `g` with broadening `eps` and applies [`jarzynski_from_histogram`].
pub fn jarzynski_from_characteristic(
    g: &CharacteristicGrid,
    beta: f64,
    broadening: f64,
) -> Result<JarzynskiEstimate> {
    jarzynski_from_histogram(&invert(g, broadening)?, beta)
}

/// `sum |a - b| dW`.
pub fn l1_distance(a: &WorkHistogram, b: &WorkHistogram) -> Result<f64> {
    a.same_grid(b)?;
    Ok(a.density
        .iter()
        .zip(&b.density)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        * a.bin_width)
}

/// A distance and its statistical error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub value: f64,
    pub stderr: f64,
}

/// L1 distance with an error from the replicate histograms of both inputs:
/// with `s = sign(a - b)` fixed, the distance is the linear functional
/// `sum s (a - b) dW`, whose errors from independent inputs add in
/// quadrature.
pub fn l1_with_error(a: &WorkHistogram, b: &WorkHistogram) -> Result<Distance> {
    let value = l1_distance(a, b)?;
    let signs: Vec<f64> = a
        .density
        .iter()
        .zip(&b.density)
        .map(|(x, y)| if x > y { 1.0 } else if x < y { -1.0 } else { 0.0 })
        .collect();
    let (ea, eb) = (a.functional_stderr(&signs), b.functional_stderr(&signs));
    Ok(Distance {
        value,
        stderr: ea.hypot(eb),
    })
}

/// For each consecutive pair, whether the second value lies below the first
/// by more than `k` combined standard errors.
pub fn significant_decreases(series: &[Distance], k: f64) -> Vec<bool> {
    series
        .windows(2)
        .map(|w| w[0].value - w[1].value > k * w[0].stderr.hypot(w[1].stderr))
        .collect()
}

/// One labelled cross-method comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub beta: f64,
    pub hbar: Option<f64>,
    pub l1: f64,
    pub l1_stderr: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristic::UGrid;
    use crate::spectra::histogram_from_spikes;
    use num_complex::Complex64;

    #[test]
    fn constant_work_is_exact() {
        let e = jarzynski_from_samples(&[3.25; 17], 0.7).unwrap();
        assert_eq!(e.estimate, 3.25);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn high_temperature_gives_the_mean() {
        let values: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1 - 4.0).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let e = jarzynski_from_samples(&values, 1e-8).unwrap();
        assert!((e.estimate - mean).abs() < 1e-6);
    }

    #[test]
    fn order_does_not_matter() {
        let values: Vec<f64> = (0..500).map(|i| (i as f64 * 0.731).sin() * 50.0).collect();
        let mut rev = values.clone();
        rev.reverse();
        let a = jarzynski_from_samples(&values, 0.05).unwrap();
        let b = jarzynski_from_samples(&rev, 0.05).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unit_characteristic_gives_zero_free_energy() {
        let grid = UGrid::from_window(-100.0, 100.0, 128).unwrap();
        let beta = 2f64.powi(-7);
        let g = CharacteristicGrid::exact(grid, vec![Complex64::new(1.0, 0.0); grid.len()], 1.0, beta);
        let e = jarzynski_from_characteristic(&g, beta, 2.0 * grid.w_step()).unwrap();
        assert!(e.estimate.abs() < 1e-8, "{e:?}");
    }

    #[test]
    fn l1_bounds() {
        let grid = UGrid::from_window(-100.0, 100.0, 128).unwrap();
        let eps = 2.0 * grid.w_step();
        let a = histogram_from_spikes(&grid, [(-50.0, 1.0)], eps).unwrap();
        let b = histogram_from_spikes(&grid, [(50.0, 1.0)], eps).unwrap();
        assert_eq!(l1_distance(&a, &a).unwrap(), 0.0);
        assert!((l1_distance(&a, &b).unwrap() - 2.0).abs() < 1e-9);
        let c = histogram_from_spikes(&grid, [(50.0, 1.0)], 3.0 * eps).unwrap();
        assert!(matches!(l1_distance(&a, &c), Err(Error::GridMismatch(_))));
    }
}
