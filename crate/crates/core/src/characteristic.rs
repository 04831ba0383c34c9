//! Characteristic functions `G(u) = <exp(i u W)>` of the work.
//!
//! The semiclassical estimator averages `exp(i Delta S(x0, u hbar) / hbar)`
//! over Boltzmann-distributed initial conditions of the unperturbed billiard.
//! Each trajectory is propagated once, up to `u_max hbar`, and `Delta S` is
//! read off at every grid time.
//!
//! Only `u >= 0` is stored; `G(-u) = conj(G(u))` is implied and applied by
//! [`CharacteristicGrid::value_at`].
//!
//! Samples are split into contiguous replicate batches whose boundaries
//! depend only on the sample count. Batches are reduced in index order, so
//! the result does not depend on how many workers ran them, and the batch
//! estimates give error bars for any linear functional of `G`.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BilliardGeometry;
use crate::potential::QuenchPotential;
use crate::sampler::{sample_shell_point, stream_rng, PhasePoint, ThermalEnsemble};
use crate::trajectory::{action_checkpoints, DEFAULT_MAX_BOUNCES};

/// Number of replicate batches kept alongside every Monte Carlo estimate.
pub const REPLICATES: usize = 64;

/// Uniform grid `u_k = k du`, `k = 0..=half_len`, together with the origin of
/// its dual work grid `W_j = w_origin + j dW`, `dW = 2 pi / (2 half_len du)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UGrid {
    pub du: f64,
    pub half_len: usize,
    pub w_origin: f64,
}

impl UGrid {
    pub fn new(du: f64, half_len: usize, w_origin: f64) -> Result<Self> {
        if !(du > 0.0 && du.is_finite()) {
            return Err(Error::range("du", "must be positive and finite"));
        }
        if half_len == 0 {
            return Err(Error::range("u_points", "grid needs at least two points"));
        }
        if !w_origin.is_finite() {
            return Err(Error::range("w_origin", "must be finite"));
        }
        Ok(Self {
            du,
            half_len,
            w_origin,
        })
    }

    /// Grid whose dual covers `[w_min, w_max)` with `2 half_len` nodes:
    /// `du = 2 pi / (w_max - w_min)`. The origin is snapped down to a multiple
    /// of `dW` so that `W = 0` is always a node.
    pub fn from_window(w_min: f64, w_max: f64, half_len: usize) -> Result<Self> {
        if !(w_max > w_min) || !w_min.is_finite() || !w_max.is_finite() {
            return Err(Error::range("window", "need finite w_min < w_max"));
        }
        let du = TAU / (w_max - w_min);
        let dw = (w_max - w_min) / (2 * half_len) as f64;
        let origin = (w_min / dw).floor() * dw;
        Self::new(du, half_len, origin)
    }

    pub fn len(&self) -> usize {
        self.half_len + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn u(&self, k: usize) -> f64 {
        k as f64 * self.du
    }

    pub fn u_values(&self) -> Vec<f64> {
        (0..=self.half_len).map(|k| self.u(k)).collect()
    }

    pub fn u_max(&self) -> f64 {
        self.u(self.half_len)
    }

    /// Number of nodes in the work grid.
    pub fn w_len(&self) -> usize {
        2 * self.half_len
    }

    pub fn w_step(&self) -> f64 {
        TAU / (self.w_len() as f64 * self.du)
    }

    pub fn w_nodes(&self) -> Vec<f64> {
        let dw = self.w_step();
        (0..self.w_len())
            .map(|j| self.w_origin + j as f64 * dw)
            .collect()
    }

    /// Length of the periodic work window.
    pub fn w_period(&self) -> f64 {
        TAU / self.du
    }
}

/// One batch's contribution: `fraction` of the samples, and its own estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replicate<T> {
    pub fraction: f64,
    pub values: Vec<T>,
}

/// Standard error of `sum_b fraction_b f_b` from replicate values `f_b`.
pub fn replicate_stderr(fractions: &[f64], values: &[f64]) -> f64 {
    let k = values.len();
    if k < 2 {
        return 0.0;
    }
    let mean: f64 = fractions.iter().zip(values).map(|(w, v)| w * v).sum();
    let ss: f64 = fractions
        .iter()
        .zip(values)
        .map(|(w, v)| w * w * (v - mean) * (v - mean))
        .sum();
    (ss * k as f64 / (k - 1) as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicGrid {
    pub grid: UGrid,
    pub g_values: Vec<Complex64>,
    pub stderr_re: Vec<f64>,
    pub stderr_im: Vec<f64>,
    pub n_samples: usize,
    pub n_failed: usize,
    /// Zero marks the classical limit.
    pub hbar: f64,
    pub beta: f64,
    pub replicates: Vec<Replicate<Complex64>>,
}

impl CharacteristicGrid {
    /// Noise-free grid (exact `G`, no replicates).
    pub fn exact(grid: UGrid, g_values: Vec<Complex64>, hbar: f64, beta: f64) -> Self {
        let n = g_values.len();
        Self {
            grid,
            g_values,
            stderr_re: vec![0.0; n],
            stderr_im: vec![0.0; n],
            n_samples: 0,
            n_failed: 0,
            hbar,
            beta,
            replicates: Vec::new(),
        }
    }

    pub fn u_values(&self) -> Vec<f64> {
        self.grid.u_values()
    }

    /// `G(k du)` for any signed index within the grid.
    pub fn value_at(&self, k: isize) -> Complex64 {
        let g = self.g_values[k.unsigned_abs()];
        if k < 0 {
            g.conj()
        } else {
            g
        }
    }

    /// `(u, G(u))` on the full symmetric grid `k = -half_len..=half_len`.
    pub fn mirrored(&self) -> (Vec<f64>, Vec<Complex64>) {
        let n = self.grid.half_len as isize;
        (-n..=n)
            .map(|k| (k as f64 * self.grid.du, self.value_at(k)))
            .unzip()
    }

    /// Per-point standard error magnitude `sqrt(se_re^2 + se_im^2)`.
    pub fn stderr(&self) -> Vec<f64> {
        self.stderr_re
            .iter()
            .zip(&self.stderr_im)
            .map(|(a, b)| a.hypot(*b))
            .collect()
    }

    /// `G(0) = 1` exactly and `|G| <= 1 + 5 sigma + 1e-12` pointwise.
    pub fn check_invariants(&self) -> Result<()> {
        if self.g_values.len() != self.grid.len() {
            return Err(Error::AsymmetricGrid(format!(
                "{} values for a grid of {}",
                self.g_values.len(),
                self.grid.len()
            )));
        }
        if self.g_values[0] != Complex64::new(1.0, 0.0) {
            return Err(Error::range("G(0)", format!("{} != 1", self.g_values[0])));
        }
        for (k, (g, se)) in self.g_values.iter().zip(self.stderr()).enumerate() {
            if g.norm() > 1.0 + 5.0 * se + 1e-12 {
                return Err(Error::range(
                    "G(u)",
                    format!("|G| = {} at index {k} exceeds 1", g.norm()),
                ));
            }
        }
        Ok(())
    }

    /// CSV with columns `u,re_g,im_g,stderr_re,stderr_im` on `u >= 0`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "u,re_g,im_g,stderr_re,stderr_im")?;
        for (k, g) in self.g_values.iter().enumerate() {
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e}",
                self.grid.u(k),
                g.re,
                g.im,
                self.stderr_re[k],
                self.stderr_im[k]
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    pub max_bounces: u64,
    /// Largest tolerated fraction of failed samples.
    pub failure_tolerance: f64,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            max_bounces: DEFAULT_MAX_BOUNCES,
            failure_tolerance: 1e-3,
        }
    }
}

/// Running sums of `cos`, `sin` and their squares per grid point.
#[derive(Clone, Debug)]
struct PhaseSums {
    n: usize,
    failed: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
    cos2: Vec<f64>,
    sin2: Vec<f64>,
}

impl PhaseSums {
    fn new(len: usize) -> Self {
        Self {
            n: 0,
            failed: 0,
            cos: vec![0.0; len],
            sin: vec![0.0; len],
            cos2: vec![0.0; len],
            sin2: vec![0.0; len],
        }
    }

    fn push_phases(&mut self, phases: impl Iterator<Item = f64>) {
        self.n += 1;
        for (k, phi) in phases.enumerate() {
            let (s, c) = phi.sin_cos();
            self.cos[k] += c;
            self.sin[k] += s;
            self.cos2[k] += c * c;
            self.sin2[k] += s * s;
        }
    }

    fn merge(&mut self, other: &PhaseSums) {
        self.n += other.n;
        self.failed += other.failed;
        for k in 0..self.cos.len() {
            self.cos[k] += other.cos[k];
            self.sin[k] += other.sin[k];
            self.cos2[k] += other.cos2[k];
            self.sin2[k] += other.sin2[k];
        }
    }

    fn mean(&self) -> Vec<Complex64> {
        let n = self.n as f64;
        self.cos
            .iter()
            .zip(&self.sin)
            .map(|(c, s)| Complex64::new(c / n, s / n))
            .collect()
    }

    /// Per-sample variances of the real and imaginary summands.
    fn variances(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n as f64;
        let var = |sum: &[f64], sq: &[f64]| -> Vec<f64> {
            sum.iter()
                .zip(sq)
                .map(|(s, q)| {
                    if self.n < 2 {
                        0.0
                    } else {
                        ((q - s * s / n) / (n - 1.0)).max(0.0)
                    }
                })
                .collect()
        };
        (var(&self.cos, &self.cos2), var(&self.sin, &self.sin2))
    }
}

pub(crate) fn batch_bounds(n: usize, batches: usize) -> Vec<(usize, usize)> {
    let k = batches.min(n).max(1);
    (0..k).map(|b| (b * n / k, (b + 1) * n / k)).collect()
}

fn check_failures(failed: usize, total: usize, tolerance: f64) -> Result<()> {
    if failed as f64 > tolerance * total as f64 {
        return Err(Error::TooManyFailures {
            failed,
            total,
            tolerance,
        });
    }
    Ok(())
}

fn phase_vector(
    x0: PhasePoint,
    times: &[f64],
    hbar: f64,
    geom: &BilliardGeometry,
    pot: &QuenchPotential,
    max_bounces: u64,
) -> Result<Vec<f64>> {
    let mut ds = action_checkpoints(x0, times, geom, pot, max_bounces)?;
    for v in &mut ds {
        *v /= hbar;
    }
    Ok(ds)
}

/// Semiclassical `G(u) = mean_j exp(i Delta S(x0_j, u hbar) / hbar)`.
pub fn estimate_gsc(
    ensemble: &ThermalEnsemble,
    grid: &UGrid,
    hbar: f64,
    geom: &BilliardGeometry,
    pot: &QuenchPotential,
    opts: &EstimatorOptions,
) -> Result<CharacteristicGrid> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::range("hbar", "must be positive and finite"));
    }
    if ensemble.is_empty() {
        return Err(Error::range("ensemble", "no samples"));
    }
    let times: Vec<f64> = grid.u_values().iter().map(|u| u * hbar).collect();
    let len = grid.len();
    let bounds = batch_bounds(ensemble.len(), REPLICATES);

    let batches: Vec<PhaseSums> = bounds
        .par_iter()
        .map(|&(lo, hi)| {
            let mut sums = PhaseSums::new(len);
            for x0 in &ensemble.points[lo..hi] {
                match phase_vector(*x0, &times, hbar, geom, pot, opts.max_bounces) {
                    Ok(phases) => sums.push_phases(phases.into_iter()),
                    Err(e) => {
                        log::debug!("sample rejected: {e}");
                        sums.failed += 1;
                    }
                }
            }
            sums
        })
        .collect();

    finish(grid, hbar, ensemble.beta, ensemble.len(), batches, opts)
}

fn finish(
    grid: &UGrid,
    hbar: f64,
    beta: f64,
    total: usize,
    batches: Vec<PhaseSums>,
    opts: &EstimatorOptions,
) -> Result<CharacteristicGrid> {
    let mut all = PhaseSums::new(grid.len());
    for b in &batches {
        all.merge(b);
    }
    check_failures(all.failed, total, opts.failure_tolerance)?;
    if all.n == 0 {
        return Err(Error::TooManyFailures {
            failed: all.failed,
            total,
            tolerance: opts.failure_tolerance,
        });
    }
    let (var_re, var_im) = all.variances();
    let n = all.n as f64;
    let replicates = batches
        .iter()
        .filter(|b| b.n > 0)
        .map(|b| Replicate {
            fraction: b.n as f64 / n,
            values: b.mean(),
        })
        .collect();
    Ok(CharacteristicGrid {
        grid: *grid,
        g_values: all.mean(),
        stderr_re: var_re.iter().map(|v| (v / n).sqrt()).collect(),
        stderr_im: var_im.iter().map(|v| (v / n).sqrt()).collect(),
        n_samples: all.n,
        n_failed: all.failed,
        hbar,
        beta,
        replicates,
    })
}

/// Energy-shell estimator: `G(u) = sum_m w_m <exp(i Delta S / hbar)>_m` with
/// `w_m ~ exp(-beta E_m)` and `samples_per_shell` microcanonical draws
/// (uniform position, uniform momentum direction, `|p| = sqrt(E_m)`) on each
/// shell. Shell `m`, draw `i` reads RNG stream `m * samples_per_shell + i`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_gsc_shell(
    beta: f64,
    grid: &UGrid,
    hbar: f64,
    geom: &BilliardGeometry,
    pot: &QuenchPotential,
    energies: &[f64],
    samples_per_shell: usize,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<CharacteristicGrid> {
    if energies.is_empty() {
        return Err(Error::range("states", "need at least one shell energy"));
    }
    if energies.windows(2).any(|w| w[1] <= w[0]) || energies[0] < 0.0 {
        return Err(Error::range("states", "energies must be non-negative and increasing"));
    }
    if !(hbar > 0.0 && beta > 0.0) {
        return Err(Error::range("hbar", "hbar and beta must be positive"));
    }
    if samples_per_shell == 0 {
        return Err(Error::range("samples_per_shell", "must be at least 1"));
    }
    let times: Vec<f64> = grid.u_values().iter().map(|u| u * hbar).collect();
    let len = grid.len();
    let groups = batch_bounds(samples_per_shell, REPLICATES);

    // Per shell: one PhaseSums per replicate group.
    let shells: Vec<Vec<PhaseSums>> = energies
        .par_iter()
        .enumerate()
        .map(|(m, &energy)| {
            groups
                .iter()
                .map(|&(lo, hi)| {
                    let mut sums = PhaseSums::new(len);
                    for i in lo..hi {
                        let stream = (m * samples_per_shell + i) as u64;
                        let mut rng = stream_rng(seed, stream);
                        let res = sample_shell_point(geom, energy, &mut rng).and_then(|x0| {
                            phase_vector(x0, &times, hbar, geom, pot, opts.max_bounces)
                        });
                        match res {
                            Ok(phases) => sums.push_phases(phases.into_iter()),
                            Err(_) => sums.failed += 1,
                        }
                    }
                    sums
                })
                .collect()
        })
        .collect();

    let total = energies.len() * samples_per_shell;
    let failed: usize = shells.iter().flatten().map(|s| s.failed).sum();
    check_failures(failed, total, opts.failure_tolerance)?;

    let e_min = energies[0];
    let weights: Vec<f64> = energies.iter().map(|e| (-beta * (e - e_min)).exp()).collect();
    let norm: f64 = weights.iter().sum();

    let mut g = vec![Complex64::new(0.0, 0.0); len];
    let mut var_re = vec![0.0; len];
    let mut var_im = vec![0.0; len];
    let mut reps: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); len]; groups.len()];
    let mut rep_norm = vec![0.0; groups.len()];
    for (m, shell) in shells.iter().enumerate() {
        let mut all = PhaseSums::new(len);
        for s in shell {
            all.merge(s);
        }
        if all.n == 0 {
            return Err(Error::TooManyFailures {
                failed: all.failed,
                total: samples_per_shell,
                tolerance: opts.failure_tolerance,
            });
        }
        let w = weights[m];
        let mean = all.mean();
        let (vr, vi) = all.variances();
        let n = all.n as f64;
        for k in 0..len {
            g[k] += mean[k] * w;
            var_re[k] += w * w * vr[k] / n;
            var_im[k] += w * w * vi[k] / n;
        }
        for (b, s) in shell.iter().enumerate() {
            if s.n == 0 {
                continue;
            }
            rep_norm[b] += w;
            for (acc, v) in reps[b].iter_mut().zip(s.mean()) {
                *acc += v * w;
            }
        }
    }
    for v in &mut g {
        *v /= norm;
    }
    let replicates = groups
        .iter()
        .zip(reps)
        .zip(&rep_norm)
        .filter(|(_, &rn)| rn > 0.0)
        .map(|((&(lo, hi), vals), &rn)| Replicate {
            fraction: (hi - lo) as f64 / samples_per_shell as f64,
            values: vals.into_iter().map(|v| v / rn).collect(),
        })
        .collect();
    Ok(CharacteristicGrid {
        grid: *grid,
        g_values: g,
        stderr_re: var_re.iter().map(|v| v.sqrt() / norm).collect(),
        stderr_im: var_im.iter().map(|v| v.sqrt() / norm).collect(),
        n_samples: total - failed,
        n_failed: failed,
        hbar,
        beta,
        replicates,
    })
}

/// `G(u) = mean exp(i u W)` of a set of work values (the classical limit).
pub fn characteristic_from_work(values: &[f64], grid: &UGrid, beta: f64) -> Result<CharacteristicGrid> {
    if values.is_empty() {
        return Err(Error::range("values", "no work samples"));
    }
    let len = grid.len();
    let bounds = batch_bounds(values.len(), REPLICATES);
    let batches: Vec<PhaseSums> = bounds
        .par_iter()
        .map(|&(lo, hi)| {
            let mut sums = PhaseSums::new(len);
            for &w in &values[lo..hi] {
                sums.push_phases((0..len).map(|k| grid.u(k) * w));
            }
            sums
        })
        .collect();
    finish(grid, 0.0, beta, values.len(), batches, &EstimatorOptions::default())
}
