//! Basis-size planning from Weyl's law for the Dirichlet Laplacian,
//! `N(E) ~ (A k^2 - L k) / (4 pi)` with `E = hbar^2 k^2` (mass 1/2).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::grid::GridDomain;
use super::TRUNCATION_LIMIT;

/// Largest `k h` at which a finite-difference level counts as converged
/// (about 10% eigenvalue error for the 5-point stencil).
pub const CONVERGED_KH: f64 = 1.1;
/// Final-basis size relative to the retained initial states.
pub const BASIS_RATIO: f64 = 2.2;

/// Smoothed number of levels below `energy`.
pub fn weyl_count(area: f64, perimeter: f64, hbar: f64, energy: f64) -> f64 {
    if energy <= 0.0 {
        return 0.0;
    }
    let k = energy.sqrt() / hbar;
    ((area * k * k - perimeter * k) / (4.0 * PI)).max(0.0)
}

/// Energy at which the smoothed count reaches `count`.
pub fn weyl_energy(area: f64, perimeter: f64, hbar: f64, count: f64) -> f64 {
    // Positive root of A k^2 - L k - 4 pi N = 0.
    let k = (perimeter + (perimeter * perimeter + 16.0 * PI * area * count).sqrt()) / (2.0 * area);
    hbar * hbar * k * k
}

/// `dE/dN = 4 pi hbar^2 / A` (leading Weyl term).
pub fn mean_level_spacing(area: f64, hbar: f64) -> f64 {
    4.0 * PI * hbar * hbar / area
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisPlan {
    pub hbar: f64,
    /// Hottest temperature the basis must serve.
    pub beta: f64,
    pub n_keep: usize,
    pub n_final: usize,
    /// Grid spacing at which `n_final` levels satisfy `k h <= CONVERGED_KH`.
    pub h: f64,
    /// Predicted Boltzmann weight of the top decile of the retained states.
    pub top_decile_weight: f64,
}

/// Smallest basis whose top decile carries at most `safety * 1%` of the
/// Boltzmann weight at `beta`, with a final basis of at least
/// `max(2.2 n_keep, min_final)` converged levels.
pub fn plan_basis(domain: &GridDomain, hbar: f64, beta: f64, min_final: usize, safety: f64) -> Result<BasisPlan> {
    if !(hbar > 0.0 && beta > 0.0 && safety > 0.0 && safety <= 1.0) {
        return Err(Error::range("plan", "hbar and beta must be positive, safety in (0, 1]"));
    }
    let (a, l) = (domain.area(), domain.perimeter());
    let energy = |j: usize| weyl_energy(a, l, hbar, j as f64 + 0.5);
    let decile = |n: usize| -> f64 {
        let w: Vec<f64> = (0..n).map(|j| (-beta * (energy(j) - energy(0))).exp()).collect();
        let z: f64 = w.iter().sum();
        let d = (n / 10).max(1);
        w[n - d..].iter().sum::<f64>() / z
    };
    let mut n_keep = 10;
    while decile(n_keep) > safety * TRUNCATION_LIMIT {
        n_keep += 1;
        if n_keep > 1_000_000 {
            return Err(Error::range("beta", "temperature too high for a finite basis"));
        }
    }
    let n_final = ((BASIS_RATIO * n_keep as f64).ceil() as usize).max(min_final);
    let e_top = weyl_energy(a, l, hbar, n_final as f64);
    let h = CONVERGED_KH * hbar / e_top.sqrt();
    Ok(BasisPlan {
        hbar,
        beta,
        n_keep,
        n_final,
        h,
        top_decile_weight: decile(n_keep),
    })
}
