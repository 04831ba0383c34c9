//! The shared setting in which the three methods are compared: one billiard,
//! one quench, one work grid and one broadening, with per-run seeds derived
//! from a single run seed.

use serde::{Deserialize, Serialize};

use crate::characteristic::{estimate_gsc, CharacteristicGrid, EstimatorOptions, UGrid};
use crate::classical::{pilot_window, sample_classical_work, ClassicalWorkSample};
use crate::config::RunConfig;
use crate::error::Result;
use crate::geometry::BilliardGeometry;
use crate::potential::QuenchPotential;
use crate::quantum::{
    plan_basis, quantum_work_distribution, BASIS_RATIO, weyl_count, GridDomain, GridSpec, QuenchSpectra, CONVERGED_KH,
};
use crate::sampler::{derive_seed, sample_ensemble};
use crate::spectra::{histogram_from_samples, invert, WorkHistogram};

/// Purpose tags for [`derive_seed`].
pub const TAG_PILOT: u64 = 1;
pub const TAG_SEMICLASSICAL: u64 = 2;
pub const TAG_CLASSICAL: u64 = 3;

/// Seed of the run of kind `tag` at `(beta, hbar)`; `hbar = 0` for classical
/// runs.
pub fn run_seed(seed: u64, tag: u64, beta: f64, hbar: f64) -> u64 {
    derive_seed(derive_seed(derive_seed(seed, tag), beta.to_bits()), hbar.to_bits())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub geom: BilliardGeometry,
    pub pot: QuenchPotential,
    pub grid: UGrid,
    pub broadening: f64,
    pub seed: u64,
    pub opts: EstimatorOptions,
}

#[derive(Clone, Debug)]
pub struct SemiclassicalRun {
    pub beta: f64,
    pub hbar: f64,
    pub seed: u64,
    pub g: CharacteristicGrid,
    pub hist: WorkHistogram,
}

#[derive(Clone, Debug)]
pub struct ClassicalRun {
    pub sample: ClassicalWorkSample,
    pub hist: WorkHistogram,
}

impl Study {
    /// Work window from a pilot classical sample, padded on both sides.
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let geom = cfg.geometry()?;
        let pot = cfg.potential()?;
        let pilot_seed = derive_seed(cfg.seed, TAG_PILOT);
        let (lo, hi) = pilot_window(&geom, &pot, cfg.pilot_samples, pilot_seed, cfg.window_padding)?;
        let grid = UGrid::from_window(lo, hi, cfg.half_len)?;
        Ok(Self {
            geom,
            pot,
            broadening: cfg.broadening_bins * grid.w_step(),
            grid,
            seed: cfg.seed,
            opts: cfg.estimator_options(),
        })
    }

    pub fn semiclassical(&self, beta: f64, hbar: f64, n: usize) -> Result<SemiclassicalRun> {
        let seed = run_seed(self.seed, TAG_SEMICLASSICAL, beta, hbar);
        let ensemble = sample_ensemble(&self.geom, beta, n, seed)?;
        let g = estimate_gsc(&ensemble, &self.grid, hbar, &self.geom, &self.pot, &self.opts)?;
        let hist = invert(&g, self.broadening)?;
        Ok(SemiclassicalRun {
            beta,
            hbar,
            seed,
            g,
            hist,
        })
    }

    pub fn classical(&self, beta: f64, n: usize) -> Result<ClassicalRun> {
        let seed = run_seed(self.seed, TAG_CLASSICAL, beta, 0.0);
        let sample = sample_classical_work(&self.geom, &self.pot, beta, n, seed)?;
        let hist = histogram_from_samples(&sample.values, &self.grid, self.broadening)?;
        Ok(ClassicalRun { sample, hist })
    }

    pub fn quantum(&self, spectra: &QuenchSpectra, beta: f64) -> Result<WorkHistogram> {
        quantum_work_distribution(spectra, beta, &self.grid, self.broadening)
    }
}

/// Grid and basis sizes for the quantum reference.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumBasis {
    pub grid: GridSpec,
    pub n_keep: usize,
    pub n_final: usize,
}

/// Chooses the finite-difference grid and basis for `hbar`, sized for the
/// hottest `beta` via Weyl's law unless fixed explicitly, and never larger
/// than `max_sites` lattice sites. A capped basis may be too small for the
/// hottest temperatures; that shows up later as `TruncationDominates`.
pub fn quantum_basis(
    geom: &BilliardGeometry,
    hbar: f64,
    beta: f64,
    spacing: Option<f64>,
    states: Option<usize>,
    max_sites: usize,
) -> Result<QuantumBasis> {
    let domain = GridDomain::Stadium(*geom);
    let (a, l) = (domain.area(), domain.perimeter());
    let grid = match spacing {
        Some(h) => GridSpec::new(domain, h)?,
        None => {
            let plan = plan_basis(&domain, hbar, beta, 0, 0.5)?;
            let mut h = plan.h.max((a / max_sites as f64).sqrt());
            loop {
                let grid = GridSpec::new(domain, h)?;
                if grid.len() <= max_sites {
                    break grid;
                }
                h *= 1.02;
            }
        }
    };
    let h = grid.h;
    let e_conv = (CONVERGED_KH * hbar / h).powi(2);
    let converged = (weyl_count(a, l, hbar, e_conv).floor() as usize).clamp(1, grid.len());
    let n_final = converged;
    let n_keep = states
        .unwrap_or(((n_final as f64) / BASIS_RATIO).floor() as usize)
        .clamp(1, n_final);
    Ok(QuantumBasis { grid, n_keep, n_final })
}

/// Diagonalises on the chosen basis.
pub fn quantum_spectra(basis: &QuantumBasis, pot: &QuenchPotential, hbar: f64) -> Result<QuenchSpectra> {
    QuenchSpectra::compute(&basis.grid, pot, hbar, basis.n_keep, basis.n_final)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_by_purpose_and_point() {
        let a = run_seed(1, TAG_SEMICLASSICAL, 0.5, 1.0);
        assert_ne!(a, run_seed(1, TAG_SEMICLASSICAL, 0.5, 0.5));
        assert_ne!(a, run_seed(1, TAG_CLASSICAL, 0.5, 1.0));
        assert_ne!(a, run_seed(2, TAG_SEMICLASSICAL, 0.5, 1.0));
        assert_eq!(a, run_seed(1, TAG_SEMICLASSICAL, 0.5, 1.0));
    }

    #[test]
    fn basis_respects_site_budget() {
        let geom = BilliardGeometry::default();
        let b = quantum_basis(&geom, 1.0, 2f64.powi(-12), None, None, 1500).unwrap();
        assert!(b.grid.len() <= 1500);
        assert!(b.n_final as f64 >= 2.0 * b.n_keep as f64);
        let cold = quantum_basis(&geom, 1.0, 2f64.powi(-4), None, None, 4000).unwrap();
        assert!(cold.grid.len() < 4000);
    }
}
