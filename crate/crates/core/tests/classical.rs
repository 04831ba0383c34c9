//! Classical work statistics and free energies against independent Monte
//! Carlo, brute-force grids and exact limits.

use chaowork::classical::{
    classical_free_energy_difference, conditional_final_energies, density_of_states, partition_ratio,
    sample_classical_work, work_support,
};
use chaowork::geometry::{BilliardGeometry, Vec2};
use chaowork::potential::{GaussianForm, QuenchPotential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::ks_two_sample;

/// `(mean V, min V, max V)` over the default stadium from a midpoint grid of
/// spacing `h`.
fn grid_statistics(pot: &QuenchPotential, h: f64) -> (f64, f64, f64) {
    let geom = BilliardGeometry::default();
    let (nx, ny) = ((2.0 / h).round() as usize, (1.0 / h).round() as usize);
    let (mut sum, mut count, mut lo, mut hi) = (0.0, 0usize, f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..nx {
        for j in 0..ny {
            let q = Vec2::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            if geom.contains(q) {
                let v = pot.eval(q);
                sum += v;
                count += 1;
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    (sum / count as f64, lo, hi)
}

fn all_positive() -> QuenchPotential {
    let mut bumps = QuenchPotential::default().gaussians().to_vec();
    for b in &mut bumps {
        b.sign = 1.0;
    }
    QuenchPotential::new(bumps, 0.1, 0.0, 85.0, GaussianForm::Isotropic).unwrap()
}

#[test]
fn work_distribution_does_not_depend_on_temperature() {
    let geom = BilliardGeometry::default();
    let pot = QuenchPotential::default();
    let mut hot = sample_classical_work(&geom, &pot, 2f64.powi(-13), 50_000, 1).unwrap().values;
    let mut cold = sample_classical_work(&geom, &pot, 2f64.powi(-7), 50_000, 2).unwrap().values;
    let p = ks_two_sample(&mut hot, &mut cold);
    assert!(p > 0.001, "p = {p}");
}

#[test]
fn infinite_temperature_limit_is_the_mean_work() {
    let geom = BilliardGeometry::default();
    let pot = QuenchPotential::default();
    let (mean_v, _, _) = grid_statistics(&pot, 1.0 / 2000.0);
    let mean_w = pot.strength() * mean_v;
    let df = classical_free_energy_difference(&geom, &pot, 1e-8).unwrap();
    // Next order is -beta Var(W) / 2 ~ 1e-5; the grid mean is good to ~1e-5.
    assert!((df - mean_w).abs() < 1e-4 * mean_w.abs().max(1.0), "{df} vs {mean_w}");
}

#[test]
fn quadrature_matches_uniform_monte_carlo() {
    let geom = BilliardGeometry::default();
    let pot = QuenchPotential::default();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let n = 4_000_000;
    let work: Vec<f64> = (0..n)
        .map(|_| loop {
            let q = Vec2::new(2.0 * rng.random::<f64>(), rng.random::<f64>());
            if geom.contains(q) {
                break pot.delta_h(q);
            }
        })
        .collect();
    for beta in [2f64.powi(-7), 2f64.powi(-9), 2f64.powi(-11)] {
        let terms: Vec<f64> = work.iter().map(|w| (-beta * w).exp()).collect();
        let mean = terms.iter().sum::<f64>() / n as f64;
        let var = terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        let ratio = partition_ratio(&geom, &pot, beta).unwrap();
        assert!((ratio - mean).abs() < 4.0 * se, "beta {beta}: {ratio} vs {mean} +- {se}");
    }
}

#[test]
fn free_energy_decreases_with_inverse_temperature() {
    let geom = BilliardGeometry::default();
    let pot = QuenchPotential::default();
    let (w_min, _) = work_support(&geom, &pot);
    let (mean_v, _, _) = grid_statistics(&pot, 1.0 / 1000.0);
    let mean_w = pot.strength() * mean_v;
    let sweep: Vec<f64> = (-13..=0)
        .map(|e| classical_free_energy_difference(&geom, &pot, 2f64.powi(e)).unwrap())
        .collect();
    for pair in sweep.windows(2) {
        assert!(pair[1] < pair[0], "{pair:?}");
    }
    // Jensen below, the smallest work above.
    assert!(sweep[0] <= mean_w + 1e-3);
    assert!(sweep.iter().all(|df| *df >= w_min));
}

#[test]
fn positive_bumps_give_positive_work_and_free_energy() {
    let geom = BilliardGeometry::default();
    let pot = all_positive();
    let sample = sample_classical_work(&geom, &pot, 0.01, 20_000, 4).unwrap();
    assert!(sample.values.iter().all(|w| *w > 0.0));
    for beta in [2f64.powi(-12), 2f64.powi(-6), 0.5] {
        let df = classical_free_energy_difference(&geom, &pot, beta).unwrap();
        assert!(df > 0.0 && df <= sample.mean() * 1.01, "beta {beta}: {df}");
    }
    // Flipping every sign turns all work negative.
    let flipped = pot.with_signs_flipped();
    assert!(classical_free_energy_difference(&geom, &flipped, 0.01).unwrap() < 0.0);
}

#[test]
fn density_of_states_reproduces_the_free_partition_function() {
    let geom = BilliardGeometry::default();
    for beta in [2f64.powi(-12), 0.01, 1.0] {
        // Midpoint Laplace transform out to 40 / beta.
        let n = 200_000;
        let h = 40.0 / beta / n as f64;
        let laplace: f64 = (0..n)
            .map(|k| {
                let e = (k as f64 + 0.5) * h;
                (-beta * e).exp() * density_of_states(&geom, e)
            })
            .sum::<f64>()
            * h;
        let z0 = std::f64::consts::PI * geom.area() / beta;
        assert!((laplace - z0).abs() < 1e-6 * z0, "beta {beta}: {laplace} vs {z0}");
    }
    assert_eq!(density_of_states(&geom, -1.0), 0.0);
}

#[test]
fn integrated_density_matches_a_phase_space_count() {
    // Phase-space volume below E, counted on uniform draws over a box.
    let geom = BilliardGeometry::default();
    let (e, p_max) = (3.0, 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 2_000_000;
    let hits = (0..n)
        .filter(|_| {
            let q = Vec2::new(2.0 * rng.random::<f64>(), rng.random::<f64>());
            let p = Vec2::new(p_max * (2.0 * rng.random::<f64>() - 1.0), p_max * (2.0 * rng.random::<f64>() - 1.0));
            geom.contains(q) && p.norm_sq() < e
        })
        .count();
    let box_volume = 2.0 * (2.0 * p_max) * (2.0 * p_max);
    let fraction = hits as f64 / n as f64;
    let counted = fraction * box_volume;
    let se = (fraction * (1.0 - fraction) / n as f64).sqrt() * box_volume;
    // The density is flat, so the volume below E is g E.
    let expected = density_of_states(&geom, e) * e;
    assert!((counted - expected).abs() < 4.0 * se, "{counted} vs {expected} +- {se}");
}

#[test]
fn support_brackets_a_dense_scan() {
    let geom = BilliardGeometry::default();
    let pot = QuenchPotential::default();
    let (_, v_lo, v_hi) = grid_statistics(&pot, 1.0 / 2000.0);
    let (w_lo, w_hi) = work_support(&geom, &pot);
    let s = pot.strength();
    assert!(w_lo <= s * v_lo + 1e-9 && w_hi >= s * v_hi - 1e-9);
    // The refined extrema are no further out than the scan resolution allows.
    assert!(s * v_lo - w_lo < 1e-3 * s && w_hi - s * v_hi < 1e-3 * s);
    let sample = sample_classical_work(&geom, &pot, 0.1, 100_000, 5).unwrap();
    assert!(sample.values.iter().all(|w| *w >= w_lo && *w <= w_hi));
}

#[test]
fn conditional_final_energies_are_shifted_work() {
    let geom = BilliardGeometry::default();
    let pot = QuenchPotential::default();
    let e0 = 250.0;
    // Far from the bumps W is ~1e-40, while H_f - e0 carries ~1e-13 of
    // rounding from |p|^2. Quantising both samples to 1e-9 removes that
    // spurious cluster of near-ties.
    let quantise = |w: f64| (w * 1e9).round() / 1e9;
    let mut finals: Vec<f64> = conditional_final_energies(&geom, &pot, e0, 40_000, 6)
        .unwrap()
        .into_iter()
        .map(|e| quantise(e - e0))
        .collect();
    let mut work: Vec<f64> = sample_classical_work(&geom, &pot, 0.3, 40_000, 7)
        .unwrap()
        .values
        .into_iter()
        .map(quantise)
        .collect();
    let p = ks_two_sample(&mut finals, &mut work);
    assert!(p > 0.001, "p = {p}");
}
