//! Work densities on the Fourier-dual grid of a [`UGrid`].
//!
//! Two routes lead onto the same grid:
//! * [`invert`] takes any characteristic function and applies the discrete
//!   inverse transform `P(W_j) = du / 2pi sum_k exp(-i u_k W_j) G(u_k)` over
//!   the conjugate-symmetric grid, optionally damping `G` by
//!   `exp(-eps^2 u^2 / 2)`;
//! * [`bin_spikes`] places weighted delta spikes directly, each smeared into a
//!   periodic Gaussian of width `eps`.
//!
//! For `eps` of a couple of bin widths the two agree to about `exp(-2 pi^2)`
//! of the peak height, so distributions from either route can be compared
//! bin for bin.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::characteristic::{batch_bounds, replicate_stderr, CharacteristicGrid, Replicate, UGrid, REPLICATES};
use crate::error::{Error, Result};

/// `|G(u_max)|` (after damping) above this flags a too narrow work window.
pub const ALIASING_LIMIT: f64 = 0.01;

/// Histogram bins reaching further than this many widths from a spike are skipped.
const SPIKE_REACH: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkHistogram {
    pub w_min: f64,
    pub w_max: f64,
    pub bin_width: f64,
    pub density: Vec<f64>,
    pub error: Vec<f64>,
    pub total_mass: f64,
    pub broadening: f64,
    /// `max |Im| / max |Re|` of the inverse transform (zero for binned spikes).
    pub imag_residue: f64,
    pub replicates: Vec<Replicate<f64>>,
}

impl WorkHistogram {
    fn on_grid(grid: &UGrid, density: Vec<f64>, broadening: f64) -> Self {
        let bw = grid.w_step();
        let w_min = grid.w_origin - 0.5 * bw;
        let total_mass = density.iter().sum::<f64>() * bw;
        Self {
            w_min,
            w_max: w_min + bw * density.len() as f64,
            bin_width: bw,
            error: vec![0.0; density.len()],
            density,
            total_mass,
            broadening,
            imag_residue: 0.0,
            replicates: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.len())
            .map(|j| self.w_min + (j as f64 + 0.5) * self.bin_width)
            .collect()
    }

    /// `sum W P(W) dW`.
    pub fn mean(&self) -> f64 {
        self.centers()
            .iter()
            .zip(&self.density)
            .map(|(w, p)| w * p)
            .sum::<f64>()
            * self.bin_width
    }

    /// Same bins and same broadening.
    pub fn same_grid(&self, other: &WorkHistogram) -> Result<()> {
        let tol = 1e-12 * self.bin_width.abs().max(1.0);
        if self.len() != other.len()
            || (self.w_min - other.w_min).abs() > tol
            || (self.bin_width - other.bin_width).abs() > tol
        {
            return Err(Error::GridMismatch(format!(
                "[{}, {}) x {} vs [{}, {}) x {}",
                self.w_min,
                self.w_max,
                self.len(),
                other.w_min,
                other.w_max,
                other.len()
            )));
        }
        if (self.broadening - other.broadening).abs() > tol {
            return Err(Error::GridMismatch(format!(
                "broadening {} vs {}",
                self.broadening, other.broadening
            )));
        }
        Ok(())
    }

    /// Standard error of `sum_j c_j P_j dW` from the replicate histograms.
    pub fn functional_stderr(&self, coeffs: &[f64]) -> f64 {
        if self.replicates.len() < 2 {
            return 0.0;
        }
        let fractions: Vec<f64> = self.replicates.iter().map(|r| r.fraction).collect();
        let values: Vec<f64> = self
            .replicates
            .iter()
            .map(|r| {
                r.values
                    .iter()
                    .zip(coeffs)
                    .map(|(p, c)| p * c)
                    .sum::<f64>()
                    * self.bin_width
            })
            .collect();
        replicate_stderr(&fractions, &values)
    }

    /// Mass within `1e-6` of one and no bin below `-3` error bars (plus a
    /// round-off floor).
    pub fn check_invariants(&self) -> Result<()> {
        if (self.total_mass - 1.0).abs() > 1e-6 {
            return Err(Error::range(
                "total_mass",
                format!("{} is not 1 within 1e-6", self.total_mass),
            ));
        }
        let peak = self.density.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (j, (p, e)) in self.density.iter().zip(&self.error).enumerate() {
            if *p < -3.0 * e - 1e-9 * peak.max(1e-300) {
                return Err(Error::range(
                    "density",
                    format!("bin {j}: {p} below -3 x error {e}"),
                ));
            }
        }
        Ok(())
    }

    /// CSV with columns `w,density,error` (bin centres).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "w,density,error")?;
        for ((w, p), e) in self.centers().iter().zip(&self.density).zip(&self.error) {
            writeln!(out, "{w:e},{p:e},{e:e}")?;
        }
        Ok(())
    }
}

/// Inverse transform of `u >= 0` samples extended by conjugation. Returns the
/// real part and the imaginary residue.
fn inverse_transform(grid: &UGrid, values: &[Complex64], damp: &[f64]) -> (Vec<f64>, f64) {
    let n = grid.half_len;
    let len = grid.w_len();
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for k in 0..=n {
        let phase = Complex64::from_polar(1.0, -grid.u(k) * grid.w_origin);
        let h = values[k] * phase * damp[k];
        if k == 0 {
            buf[0] = h;
        } else if k == n {
            buf[n] = Complex64::new(h.re, 0.0);
        } else {
            buf[k] = h;
            buf[len - k] = h.conj();
        }
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let scale = grid.du / TAU;
    let max_re = buf.iter().fold(0.0f64, |m, z| m.max(z.re.abs()));
    let max_im = buf.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    let residue = if max_re > 0.0 { max_im / max_re } else { max_im };
    (buf.iter().map(|z| z.re * scale).collect(), residue)
}

fn damping(grid: &UGrid, broadening: f64) -> Vec<f64> {
    (0..=grid.half_len)
        .map(|k| (-0.5 * (broadening * grid.u(k)).powi(2)).exp())
        .collect()
}

/// Work density from a characteristic function, with Gaussian broadening
/// `eps` applied as the factor `exp(-eps^2 u^2 / 2)` on `G`.
pub fn invert(g: &CharacteristicGrid, broadening: f64) -> Result<WorkHistogram> {
    let grid = &g.grid;
    if !(broadening >= 0.0 && broadening.is_finite()) {
        return Err(Error::range("broadening", "must be non-negative and finite"));
    }
    if g.g_values.len() != grid.len() {
        return Err(Error::AsymmetricGrid(format!(
            "{} values for {} grid points",
            g.g_values.len(),
            grid.len()
        )));
    }
    if g.g_values[0].im.abs() > 1e-12 {
        return Err(Error::AsymmetricGrid(format!(
            "G(0) = {} is not real",
            g.g_values[0]
        )));
    }
    let damp = damping(grid, broadening);
    let edge = g.g_values[grid.half_len].norm() * damp[grid.half_len];
    if edge > ALIASING_LIMIT {
        return Err(Error::AliasingSuspect { magnitude: edge });
    }

    let (density, residue) = inverse_transform(grid, &g.g_values, &damp);
    let mut hist = WorkHistogram::on_grid(grid, density, broadening);
    hist.imag_residue = residue;

    if g.replicates.len() >= 2 {
        hist.replicates = g
            .replicates
            .iter()
            .map(|r| Replicate {
                fraction: r.fraction,
                values: inverse_transform(grid, &r.values, &damp).0,
            })
            .collect();
        hist.error = replicate_bin_errors(&hist.replicates, hist.len());
    } else {
        hist.error = propagated_errors(g, &damp);
    }
    Ok(hist)
}

fn replicate_bin_errors(reps: &[Replicate<f64>], len: usize) -> Vec<f64> {
    let fractions: Vec<f64> = reps.iter().map(|r| r.fraction).collect();
    (0..len)
        .map(|j| {
            let vals: Vec<f64> = reps.iter().map(|r| r.values[j]).collect();
            replicate_stderr(&fractions, &vals)
        })
        .collect()
}

/// Linear propagation of per-point errors, treating grid points as
/// independent.
fn propagated_errors(g: &CharacteristicGrid, damp: &[f64]) -> Vec<f64> {
    let grid = &g.grid;
    let n = grid.half_len;
    let scale = grid.du / TAU;
    if g.stderr_re.iter().chain(&g.stderr_im).all(|s| *s == 0.0) {
        return vec![0.0; grid.w_len()];
    }
    grid.w_nodes()
        .iter()
        .map(|w| {
            let mut var = 0.0;
            for k in 0..=n {
                let mult = if k == 0 || k == n { 1.0 } else { 2.0 };
                let (s, c) = (grid.u(k) * w).sin_cos();
                let a = mult * damp[k];
                var += a * a * (c * c * g.stderr_re[k].powi(2) + s * s * g.stderr_im[k].powi(2));
            }
            scale * var.sqrt()
        })
        .collect()
}

/// `G(u_k) = sum_j P_j exp(i u_k W_j) dW` for `k = 0..=half_len`.
pub fn forward_transform(hist: &WorkHistogram, grid: &UGrid) -> Vec<Complex64> {
    let nodes = grid.w_nodes();
    (0..=grid.half_len)
        .map(|k| {
            let u = grid.u(k);
            nodes
                .iter()
                .zip(&hist.density)
                .map(|(w, p)| Complex64::from_polar(*p, u * w))
                .sum::<Complex64>()
                * hist.bin_width
        })
        .collect()
}

/// Densities of weighted delta spikes at positions `x`, each replaced by a
/// periodic Gaussian of width `eps` sampled at the nodes (or, for `eps = 0`,
/// dropped into the nearest node).
pub fn bin_spikes<I>(grid: &UGrid, spikes: I, broadening: f64) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    if !(broadening >= 0.0 && broadening.is_finite()) {
        return Err(Error::range("broadening", "must be non-negative and finite"));
    }
    let len = grid.w_len();
    let dw = grid.w_step();
    let mut density = vec![0.0; len];
    let wrap = |i: i64| i.rem_euclid(len as i64) as usize;
    if broadening == 0.0 {
        for (x, weight) in spikes {
            let c = ((x - grid.w_origin) / dw).round() as i64;
            density[wrap(c)] += weight / dw;
        }
        return Ok(density);
    }
    let reach = (SPIKE_REACH * broadening / dw).ceil() as i64;
    let norm = 1.0 / ((TAU).sqrt() * broadening);
    let inv_two_var = 1.0 / (2.0 * broadening * broadening);
    for (x, weight) in spikes {
        let c = ((x - grid.w_origin) / dw).round() as i64;
        for o in -reach..=reach {
            let i = c + o;
            let d = grid.w_origin + i as f64 * dw - x;
            density[wrap(i)] += weight * norm * (-d * d * inv_two_var).exp();
        }
    }
    Ok(density)
}

/// Histogram of equally weighted work samples, with replicate batches.
pub fn histogram_from_samples(values: &[f64], grid: &UGrid, broadening: f64) -> Result<WorkHistogram> {
    if values.is_empty() {
        return Err(Error::range("values", "no work samples"));
    }
    use rayon::prelude::*;
    let bounds = batch_bounds(values.len(), REPLICATES);
    let parts: Vec<Vec<f64>> = bounds
        .par_iter()
        .map(|&(lo, hi)| {
            let w = 1.0 / (hi - lo) as f64;
            bin_spikes(grid, values[lo..hi].iter().map(|&x| (x, w)), broadening)
        })
        .collect::<Result<_>>()?;
    let n = values.len() as f64;
    let mut density = vec![0.0; grid.w_len()];
    let mut replicates = Vec::with_capacity(parts.len());
    for (&(lo, hi), part) in bounds.iter().zip(parts) {
        let fraction = (hi - lo) as f64 / n;
        for (d, p) in density.iter_mut().zip(&part) {
            *d += fraction * p;
        }
        replicates.push(Replicate {
            fraction,
            values: part,
        });
    }
    let mut hist = WorkHistogram::on_grid(grid, density, broadening);
    if replicates.len() >= 2 {
        hist.error = replicate_bin_errors(&replicates, hist.len());
        hist.replicates = replicates;
    }
    Ok(hist)
}

/// Histogram of weighted spikes (no sampling noise).
pub fn histogram_from_spikes<I>(grid: &UGrid, spikes: I, broadening: f64) -> Result<WorkHistogram>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let density = bin_spikes(grid, spikes, broadening)?;
    Ok(WorkHistogram::on_grid(grid, density, broadening))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> UGrid {
        UGrid::from_window(-100.0, 100.0, 128).unwrap()
    }

    fn exact(grid: UGrid, f: impl Fn(f64) -> Complex64) -> CharacteristicGrid {
        let vals = grid.u_values().iter().map(|&u| f(u)).collect();
        CharacteristicGrid::exact(grid, vals, 1.0, 1.0)
    }

    fn zero_node(grid: &UGrid) -> usize {
        (-grid.w_origin / grid.w_step()).round() as usize
    }

    #[test]
    fn unit_characteristic_is_a_delta_at_zero() {
        let g = grid();
        let eps = 2.0 * g.w_step();
        let h = invert(&exact(g, |_| Complex64::new(1.0, 0.0)), eps).unwrap();
        assert!((h.total_mass - 1.0).abs() < 1e-12);
        let j0 = zero_node(&g);
        let near: f64 = h.density[j0 - 20..=j0 + 20].iter().sum::<f64>() * h.bin_width;
        assert!((near - 1.0).abs() < 1e-8);
        assert!(h.centers()[j0].abs() < 1e-9);
    }

    #[test]
    fn shift_theorem_places_spike() {
        let g = grid();
        let j = 150usize;
        let w0 = g.w_nodes()[j];
        // Without broadening the spike is a single bin.
        let tiny = UGrid::new(g.du, g.half_len, g.w_origin).unwrap();
        let cg = exact(tiny, |u| Complex64::from_polar(1.0, w0 * u));
        let h = invert(&cg, 0.0);
        // |G(u_max)| = 1 without damping.
        assert!(matches!(h, Err(Error::AliasingSuspect { .. })));
        let h = invert(&cg, 2.0 * g.w_step()).unwrap();
        let argmax = h
            .density
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax, j);
        assert!((h.mean() - w0).abs() < 1e-8);
    }

    #[test]
    fn both_routes_agree_for_a_spike() {
        let g = grid();
        let eps = 2.0 * g.w_step();
        let x = 13.37;
        let h1 = invert(&exact(g, |u| Complex64::from_polar(1.0, x * u)), eps).unwrap();
        let h2 = histogram_from_spikes(&g, [(x, 1.0)], eps).unwrap();
        h1.same_grid(&h2).unwrap();
        for (a, b) in h1.density.iter().zip(&h2.density) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!((h2.total_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inversion_round_trips_on_interior_points() {
        let g = grid();
        // A Gaussian work density centred at 7 with width 9.
        let cg = exact(g, |u| Complex64::from_polar((-0.5 * 81.0 * u * u).exp(), 7.0 * u));
        let h = invert(&cg, 0.0).unwrap();
        assert!(h.imag_residue < 1e-8);
        let back = forward_transform(&h, &g);
        for k in 0..g.half_len {
            assert!((back[k] - cg.g_values[k]).norm() < 1e-10);
        }
        assert!((h.total_mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn asymmetric_grid_is_rejected() {
        let g = grid();
        let mut cg = exact(g, |_| Complex64::new(1.0, 0.0));
        cg.g_values.pop();
        assert!(matches!(invert(&cg, 1.0), Err(Error::AsymmetricGrid(_))));
    }

    #[test]
    fn grid_mismatch_is_detected() {
        let a = histogram_from_spikes(&grid(), [(0.0, 1.0)], 1.0).unwrap();
        let b = histogram_from_spikes(&UGrid::from_window(-50.0, 50.0, 128).unwrap(), [(0.0, 1.0)], 1.0)
            .unwrap();
        assert!(a.same_grid(&b).is_err());
        let c = histogram_from_spikes(&grid(), [(0.0, 1.0)], 2.0).unwrap();
        assert!(a.same_grid(&c).is_err());
    }

    #[test]
    fn sample_histogram_has_replicates_and_unit_mass() {
        let values: Vec<f64> = (0..10_000).map(|i| ((i * 7919) % 1000) as f64 / 10.0 - 50.0).collect();
        let h = histogram_from_samples(&values, &grid(), 2.0).unwrap();
        assert!((h.total_mass - 1.0).abs() < 1e-10);
        assert_eq!(h.replicates.len(), REPLICATES);
        h.check_invariants().unwrap();
    }
}
