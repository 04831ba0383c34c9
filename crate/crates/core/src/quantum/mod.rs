//! Exact quantum reference on a finite-difference grid: the two-point
//! measurement work distribution, its characteristic function and the
//! quantum Jarzynski identity.

mod container;
mod grid;
mod planner;

pub use container::{read_spectra, write_spectra, CONTAINER_MAGIC, CONTAINER_VERSION};
pub use grid::{build_hamiltonians, GridDomain, GridSpec, SparseSymmetric, MIN_SITES};
pub use planner::{mean_level_spacing, plan_basis, weyl_count, weyl_energy, BasisPlan, BASIS_RATIO, CONVERGED_KH};

use std::io::Write;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characteristic::{CharacteristicGrid, UGrid};
use crate::error::{Error, Result};
use crate::potential::QuenchPotential;
use crate::spectra::{histogram_from_spikes, WorkHistogram};

/// Relative residual bound `|H v - lambda v| <= RESIDUAL_TOL * |H|`.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Bound on `max |V^T V - I|`.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;
/// Largest Boltzmann weight the top decile of retained states may carry.
pub const TRUNCATION_LIMIT: f64 = 0.01;
/// Steps between direct re-evaluations of the phase recurrence.
const REANCHOR: usize = 64;

/// Lowest eigenpairs, eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

/// Lowest `n_states` eigenpairs of a symmetric matrix (dense solve).
pub fn eigensolve(h: &SparseSymmetric, n_states: usize) -> Result<Eigenpairs> {
    if n_states == 0 || n_states > h.dim {
        return Err(Error::range(
            "n_states",
            format!("must lie in 1..={} (the matrix dimension)", h.dim),
        ));
    }
    let dense = h.to_dense();
    let evd = dense
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::ConvergenceFailure(format!("dense eigensolver: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..h.dim).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    order.truncate(n_states);
    let values: Vec<f64> = order.iter().map(|&i| s[i]).collect();
    let vectors = Mat::from_fn(h.dim, n_states, |r, c| u[(r, order[c])]);
    let pairs = Eigenpairs { values, vectors };
    verify_eigenpairs(h, &pairs)?;
    Ok(pairs)
}

/// Residual and orthonormality checks of the solver contract.
pub fn verify_eigenpairs(h: &SparseSymmetric, pairs: &Eigenpairs) -> Result<()> {
    let norm = h.norm_bound();
    let n = h.dim;
    let k = pairs.values.len();
    let worst = (0..k)
        .into_par_iter()
        .map(|c| {
            let v: Vec<f64> = (0..n).map(|r| pairs.vectors[(r, c)]).collect();
            let mut hv = vec![0.0; n];
            h.apply(&v, &mut hv);
            let lambda = pairs.values[c];
            hv.iter()
                .zip(&v)
                .map(|(a, b)| (a - lambda * b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .reduce(|| 0.0, f64::max);
    if !(worst <= RESIDUAL_TOL * norm) {
        return Err(Error::ConvergenceFailure(format!(
            "eigen-residual {worst:e} exceeds {RESIDUAL_TOL:e} x |H| = {:e}",
            RESIDUAL_TOL * norm
        )));
    }
    let gram = pairs.vectors.transpose() * &pairs.vectors;
    let mut off = 0.0f64;
    for j in 0..k {
        for i in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            off = off.max((gram[(i, j)] - target).abs());
        }
    }
    if !(off <= ORTHONORMALITY_TOL) {
        return Err(Error::ConvergenceFailure(format!(
            "eigenvectors deviate from orthonormality by {off:e}"
        )));
    }
    Ok(())
}

/// `P(n|m) = <n_f|m_0>^2` for the retained initial states `m` (rows) and
/// final states `n` (columns), row-major.
pub fn transition_matrix(initial: &Eigenpairs, fin: &Eigenpairs) -> Result<Vec<f64>> {
    if initial.vectors.nrows() != fin.vectors.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "initial eigenvectors have {} components, final ones {}",
            initial.vectors.nrows(),
            fin.vectors.nrows()
        )));
    }
    let overlap = initial.vectors.transpose() * &fin.vectors;
    let (rows, cols) = (overlap.nrows(), overlap.ncols());
    let mut p = Vec::with_capacity(rows * cols);
    for m in 0..rows {
        for n in 0..cols {
            p.push(overlap[(m, n)].powi(2));
        }
    }
    Ok(p)
}

/// Spectra of `H_{xi_0}` and `H_{xi_f}` with the transition probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuenchSpectra {
    pub domain: GridDomain,
    /// Retained initial levels (`n_states` of them), increasing.
    pub e0: Vec<f64>,
    /// Final levels available as transition targets, increasing.
    pub ef: Vec<f64>,
    /// `P(n|m)`, `n_states` rows of `ef.len()` entries.
    pub transition: Vec<f64>,
    pub n_states: usize,
    pub hbar: f64,
    pub grid_h: f64,
    /// Dimension of the discretised Hilbert space.
    pub n_sites: usize,
}

impl QuenchSpectra {
    /// Diagonalises both Hamiltonians, keeping `n_keep` initial and `n_final`
    /// final states.
    pub fn compute(
        grid: &GridSpec,
        pot: &QuenchPotential,
        hbar: f64,
        n_keep: usize,
        n_final: usize,
    ) -> Result<Self> {
        if n_keep > n_final {
            return Err(Error::range("n_keep", "may not exceed the number of final states"));
        }
        let (h0, hf) = build_hamiltonians(grid, pot, hbar)?;
        let initial = eigensolve(&h0, n_keep)?;
        let fin = eigensolve(&hf, n_final)?;
        let transition = transition_matrix(&initial, &fin)?;
        let spectra = Self {
            domain: grid.domain,
            e0: initial.values,
            ef: fin.values,
            transition,
            n_states: n_keep,
            hbar,
            grid_h: grid.h,
            n_sites: grid.len(),
        };
        spectra.check_invariants()?;
        Ok(spectra)
    }

    /// Every eigenstate of the grid is retained on both sides.
    pub fn is_full(&self) -> bool {
        self.n_states == self.n_sites && self.ef.len() == self.n_sites
    }

    pub fn n_final(&self) -> usize {
        self.ef.len()
    }

    pub fn row(&self, m: usize) -> &[f64] {
        let n = self.ef.len();
        &self.transition[m * n..(m + 1) * n]
    }

    pub fn check_invariants(&self) -> Result<()> {
        let nf = self.ef.len();
        if self.e0.len() != self.n_states || self.transition.len() != self.n_states * nf {
            return Err(Error::DimensionMismatch(format!(
                "{} initial levels, {} final levels, {} transition entries",
                self.e0.len(),
                nf,
                self.transition.len()
            )));
        }
        if let Some(p) = self.transition.iter().find(|p| !(**p >= 0.0 && **p <= 1.0 + 1e-12)) {
            return Err(Error::ConvergenceFailure(format!("transition probability {p} outside [0, 1]")));
        }
        let full = nf == self.n_sites;
        for m in 0..self.n_states {
            let s: f64 = self.row(m).iter().sum();
            let bad = if full { (s - 1.0).abs() > 1e-8 } else { s > 1.0 + 1e-8 };
            if bad {
                return Err(Error::ConvergenceFailure(format!("transition row {m} sums to {s}")));
            }
        }
        Ok(())
    }

    /// Normalised Boltzmann weights of the retained initial states.
    pub fn boltzmann_weights(&self, beta: f64) -> Result<Vec<f64>> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::range("beta", "must be positive and finite"));
        }
        let e_min = self.e0[0];
        let mut w: Vec<f64> = self.e0.iter().map(|e| (-beta * (e - e_min)).exp()).collect();
        let z: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= z);
        Ok(w)
    }

    /// Boltzmann weight carried by the highest tenth of the retained states.
    pub fn top_decile_weight(&self, beta: f64) -> Result<f64> {
        let w = self.boltzmann_weights(beta)?;
        let d = (w.len() / 10).max(1);
        Ok(w[w.len() - d..].iter().sum())
    }

    /// Weights, with `TruncationDominates` if a truncated basis is too small
    /// for this temperature.
    fn checked_weights(&self, beta: f64) -> Result<Vec<f64>> {
        let w = self.boltzmann_weights(beta)?;
        if self.n_states < self.n_sites {
            let weight = self.top_decile_weight(beta)?;
            if weight > TRUNCATION_LIMIT {
                return Err(Error::TruncationDominates { weight, beta });
            }
        }
        Ok(w)
    }

    /// Writes `m,n,e0_m,ef_n,p` for every transition above `threshold`.
    pub fn write_transitions_csv<W: Write>(&self, mut out: W, threshold: f64) -> std::io::Result<()> {
        writeln!(out, "m,n,e0_m,ef_n,p")?;
        for m in 0..self.n_states {
            for (n, p) in self.row(m).iter().enumerate() {
                if *p > threshold {
                    writeln!(out, "{m},{n},{:.17e},{:.17e},{:.17e}", self.e0[m], self.ef[n], p)?;
                }
            }
        }
        Ok(())
    }

    /// Writes `index,e0,ef` (blank where a side has fewer levels).
    pub fn write_levels_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,e0,ef")?;
        for i in 0..self.e0.len().max(self.ef.len()) {
            let a = self.e0.get(i).map(|e| format!("{e:.17e}")).unwrap_or_default();
            let b = self.ef.get(i).map(|e| format!("{e:.17e}")).unwrap_or_default();
            writeln!(out, "{i},{a},{b}")?;
        }
        Ok(())
    }
}

/// `(W, weight)` spikes of the two-point measurement distribution.
fn spikes(spectra: &QuenchSpectra, weights: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(spectra.transition.len());
    for (m, wm) in weights.iter().enumerate() {
        for (n, p) in spectra.row(m).iter().enumerate() {
            out.push((spectra.ef[n] - spectra.e0[m], wm * p));
        }
    }
    out
}

/// Work distribution binned on the dual grid of `grid`.
pub fn quantum_work_distribution(
    spectra: &QuenchSpectra,
    beta: f64,
    grid: &UGrid,
    broadening: f64,
) -> Result<WorkHistogram> {
    let weights = spectra.checked_weights(beta)?;
    histogram_from_spikes(grid, spikes(spectra, &weights), broadening)
}

/// Mean work `sum w_m P(n|m) (E^f_n - E^0_m)`.
pub fn quantum_mean_work(spectra: &QuenchSpectra, beta: f64) -> Result<f64> {
    let weights = spectra.checked_weights(beta)?;
    Ok(spikes(spectra, &weights).iter().map(|(w, p)| w * p).sum())
}

/// `G(u) = sum w_m P(n|m) exp(i u (E^f_n - E^0_m))` on the non-negative grid.
pub fn quantum_characteristic(spectra: &QuenchSpectra, beta: f64, grid: &UGrid) -> Result<CharacteristicGrid> {
    let weights = spectra.checked_weights(beta)?;
    let len = grid.len();
    let du = grid.du;
    let rows: Vec<Vec<Complex64>> = (0..spectra.n_states)
        .into_par_iter()
        .map(|m| {
            let mut acc = vec![Complex64::new(0.0, 0.0); len];
            for (n, p) in spectra.row(m).iter().enumerate() {
                let amp = weights[m] * p;
                if amp == 0.0 {
                    continue;
                }
                let dw = spectra.ef[n] - spectra.e0[m];
                let step = Complex64::from_polar(1.0, du * dw);
                let mut z = Complex64::new(1.0, 0.0);
                for (k, a) in acc.iter_mut().enumerate() {
                    if k % REANCHOR == 0 {
                        z = Complex64::from_polar(1.0, k as f64 * du * dw);
                    }
                    *a += amp * z;
                    z *= step;
                }
            }
            acc
        })
        .collect();
    let mut g = vec![Complex64::new(0.0, 0.0); len];
    for row in &rows {
        for (a, b) in g.iter_mut().zip(row) {
            *a += b;
        }
    }
    // Exactly one at the origin, as the weights are normalised up to rounding.
    g[0] = Complex64::new(1.0, 0.0);
    Ok(CharacteristicGrid::exact(*grid, g, spectra.hbar, beta))
}

/// Both sides of the quantum Jarzynski identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumJarzynski {
    /// `<exp(-beta W)>` from the double sum.
    pub lhs: f64,
    /// `Z_f / Z_0` over the retained levels.
    pub rhs: f64,
    pub beta: f64,
}

impl QuantumJarzynski {
    pub fn delta_f(&self) -> f64 {
        -self.rhs.ln() / self.beta
    }

    pub fn delta_f_from_work(&self) -> f64 {
        -self.lhs.ln() / self.beta
    }

    pub fn relative_deviation(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.rhs
    }
}

pub fn quantum_jarzynski(spectra: &QuenchSpectra, beta: f64) -> Result<QuantumJarzynski> {
    spectra.checked_weights(beta)?;
    let shift = spectra.e0[0].min(spectra.ef[0]);
    let boltz = |e: f64| (-beta * (e - shift)).exp();
    let z0: f64 = spectra.e0.iter().map(|e| boltz(*e)).sum();
    let zf: f64 = spectra.ef.iter().map(|e| boltz(*e)).sum();
    let fin: Vec<f64> = spectra.ef.iter().map(|e| boltz(*e)).collect();
    let mut num = 0.0;
    for m in 0..spectra.n_states {
        num += spectra.row(m).iter().zip(&fin).map(|(p, f)| p * f).sum::<f64>();
    }
    Ok(QuantumJarzynski {
        lhs: num / z0,
        rhs: zf / z0,
        beta,
    })
}
