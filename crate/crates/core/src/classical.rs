//! Classical reference for the sudden quench.
//!
//! For an instantaneous switch the work done on a phase point is just the
//! energy jump `W = H_f(x0) - H_0(x0) = (xi_f - xi_0) V(q0)`. Because the
//! initial Hamiltonian has no potential, positions are uniform and the work
//! distribution does not depend on temperature; the momentum is drawn only
//! to keep the sampling path identical to the semiclassical one.
//!
//! Phase-space measures carry no `h^D` factor; every reported quantity is a
//! ratio in which it cancels.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BilliardGeometry, Vec2};
use crate::potential::{GaussianForm, QuenchPotential};
use crate::sampler::{sample_point, sample_shell_point, stream_rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalWorkSample {
    pub values: Vec<f64>,
    pub beta: f64,
    pub n: usize,
    pub seed: u64,
}

impl ClassicalWorkSample {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

pub fn sample_classical_work(
    geom: &BilliardGeometry,
    pot: &QuenchPotential,
    beta: f64,
    n: usize,
    seed: u64,
) -> Result<ClassicalWorkSample> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::range("beta", "must be positive and finite"));
    }
    if n == 0 {
        return Err(Error::range("n", "need at least one sample"));
    }
    let values = (0..n as u64)
        .into_par_iter()
        .map(|k| sample_point(geom, beta, seed, k).map(|x| pot.delta_h(x.q)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassicalWorkSample {
        values,
        beta,
        n,
        seed,
    })
}

/// Work window `[min - pad * range, max + pad * range]` from a pilot sample
/// of `Delta H(q0)`.
pub fn pilot_window(
    geom: &BilliardGeometry,
    pot: &QuenchPotential,
    n: usize,
    seed: u64,
    pad: f64,
) -> Result<(f64, f64)> {
    // Temperature is irrelevant for W; any beta gives the same positions.
    let sample = sample_classical_work(geom, pot, 1.0, n, seed)?;
    let (lo, hi) = sample
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &w| (a.min(w), b.max(w)));
    let range = (hi - lo).max(1e-12);
    Ok((lo - pad * range, hi + pad * range))
}

/// `g(E)` of the free billiard Hamiltonian `|p|^2`: the shell measure
/// `A * int d^2p delta(E - p^2) = pi A`, independent of `E`.
pub fn density_of_states(geom: &BilliardGeometry, energy: f64) -> f64 {
    if energy > 0.0 {
        PI * geom.area()
    } else {
        0.0
    }
}

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

const GL_ORDER: usize = 10;
const MAX_LEVELS: usize = 9;

/// `int f(q) d^2q` over the billiard on `panels x panels` Gauss-Legendre
/// panels in the rectangle and in polar coordinates on the quarter disk.
fn integrate_domain(geom: &BilliardGeometry, panels: usize, f: &(dyn Fn(Vec2) -> f64 + Sync)) -> f64 {
    let (x, w) = gauss_legendre(GL_ORDER);
    let (r, l) = (geom.radius(), geom.straight());
    let c = geom.arc_center();
    let rule = |a: f64, b: f64| -> Vec<(f64, f64)> {
        let h = (b - a) / panels as f64;
        (0..panels)
            .flat_map(|p| {
                let lo = a + p as f64 * h;
                x.iter()
                    .zip(&w)
                    .map(move |(xi, wi)| (lo + 0.5 * h * (xi + 1.0), 0.5 * h * wi))
            })
            .collect()
    };
    let ys = rule(0.0, r);
    let rect = if l > 0.0 {
        let xs = rule(0.0, l);
        // Columns in parallel, summed in a fixed order for reproducibility.
        xs.par_iter()
            .map(|&(xq, wx)| ys.iter().map(|&(yq, wy)| wx * wy * f(Vec2::new(xq, yq))).sum::<f64>())
            .collect::<Vec<f64>>()
            .iter()
            .sum::<f64>()
    } else {
        0.0
    };
    let rhos = rule(0.0, r);
    let thetas = rule(0.0, FRAC_PI_2);
    let disk = rhos
        .par_iter()
        .map(|&(rho, wr)| {
            thetas
                .iter()
                .map(|&(th, wt)| {
                    let (s, co) = th.sin_cos();
                    wr * wt * rho * f(c + Vec2::new(rho * co, rho * s))
                })
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum::<f64>();
    rect + disk
}

/// Refines the panel count until the relative change drops below `tol`.
fn converged_integral(geom: &BilliardGeometry, tol: f64, f: &(dyn Fn(Vec2) -> f64 + Sync)) -> Result<f64> {
    let mut panels = 2;
    let mut prev = integrate_domain(geom, panels, f);
    for _ in 0..MAX_LEVELS {
        panels *= 2;
        let next = integrate_domain(geom, panels, f);
        // Relative, with a floor far below anything that can matter once
        // the area is added back.
        if (next - prev).abs() <= tol * next.abs().max(1e-14 * geom.area()) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureNonConvergence {
        tolerance: tol,
        levels: MAX_LEVELS,
    })
}

/// `ln(Z_f / Z_0)` of the classical partition functions. Momentum integrals
/// cancel, leaving `int exp(-beta xi V)` over positions. Each position
/// integral is computed as `A + int expm1(-beta xi V)` with the excess
/// converged to relative precision, so the small-`beta` limit keeps its
/// accuracy.
pub fn log_partition_ratio(geom: &BilliardGeometry, pot: &QuenchPotential, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::range("beta", "must be positive and finite"));
    }
    if pot.strength() == 0.0 {
        return Ok(0.0);
    }
    if pot.form() == GaussianForm::Saddle {
        return Err(Error::range(
            "gaussian_form",
            "partition functions need the isotropic form",
        ));
    }
    let area = geom.area();
    let log_z = |xi: f64| -> Result<f64> {
        if xi == 0.0 {
            return Ok(0.0);
        }
        let excess = converged_integral(geom, 1e-8, &|q| (-beta * xi * pot.eval(q)).exp_m1())?;
        Ok((excess / area).ln_1p())
    };
    Ok(log_z(pot.xi_f())? - log_z(pot.xi_0())?)
}

/// `Z_f / Z_0` of the classical partition functions.
pub fn partition_ratio(geom: &BilliardGeometry, pot: &QuenchPotential, beta: f64) -> Result<f64> {
    Ok(log_partition_ratio(geom, pot, beta)?.exp())
}

/// `Delta F = -ln(Z_f / Z_0) / beta`.
pub fn classical_free_energy_difference(
    geom: &BilliardGeometry,
    pot: &QuenchPotential,
    beta: f64,
) -> Result<f64> {
    let log_ratio = log_partition_ratio(geom, pot, beta)?;
    if !log_ratio.is_finite() {
        return Err(Error::DegenerateMean(log_ratio.exp()));
    }
    Ok(-log_ratio / beta)
}

fn gradient(pot: &QuenchPotential, q: Vec2) -> Vec2 {
    let s2 = pot.sigma() * pot.sigma();
    pot.gaussians().iter().fold(Vec2::ZERO, |acc, g| {
        let d = q - g.center;
        let e = g.sign * (-d.norm_sq() / (2.0 * s2)).exp();
        acc + d * (-e / s2)
    })
}

fn clamp_into(geom: &BilliardGeometry, q: Vec2) -> Vec2 {
    let (lo, hi) = geom.bounding_box();
    let mut p = Vec2::new(q.x.clamp(lo.x, hi.x), q.y.clamp(lo.y, hi.y));
    if p.x > geom.straight() {
        let c = geom.arc_center();
        let d = p - c;
        if d.norm() > geom.radius() {
            p = c + d * (geom.radius() / d.norm());
        }
    }
    p
}

/// Projected gradient ascent of `sign * V` from `start`.
fn climb(geom: &BilliardGeometry, pot: &QuenchPotential, start: Vec2, sign: f64) -> f64 {
    let f = |q: Vec2| sign * pot.eval(q);
    let mut q = clamp_into(geom, start);
    let mut val = f(q);
    let mut step = 0.01 * pot.sigma();
    for _ in 0..2000 {
        let g = gradient(pot, q) * sign;
        let Some(dir) = g.normalized() else { break };
        let cand = clamp_into(geom, q + dir * step);
        let cv = f(cand);
        if cv > val {
            q = cand;
            val = cv;
            step *= 1.5;
        } else {
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        }
    }
    val
}

/// `(min V, max V)` over the closed billiard, from a scan at resolution
/// `sigma / 20` polished by multi-start gradient ascent.
pub fn potential_range(geom: &BilliardGeometry, pot: &QuenchPotential) -> (f64, f64) {
    let (_, hi) = geom.bounding_box();
    let h = pot.sigma() / 20.0;
    let nx = (hi.x / h).ceil() as usize;
    let ny = (hi.y / h).ceil() as usize;
    let mut lo_v = (f64::INFINITY, Vec2::ZERO);
    let mut hi_v = (f64::NEG_INFINITY, Vec2::ZERO);
    for i in 0..=nx {
        for j in 0..=ny {
            let q = Vec2::new((i as f64 * h).min(hi.x), (j as f64 * h).min(hi.y));
            if !geom.contains_within(q, 1e-12) {
                continue;
            }
            let v = pot.eval(q);
            if v < lo_v.0 {
                lo_v = (v, q);
            }
            if v > hi_v.0 {
                hi_v = (v, q);
            }
        }
    }
    let mut starts: Vec<Vec2> = pot.gaussians().iter().map(|g| g.center).collect();
    starts.push(lo_v.1);
    starts.push(hi_v.1);
    let vmax = starts
        .iter()
        .map(|&s| climb(geom, pot, s, 1.0))
        .fold(hi_v.0, f64::max);
    let vmin = -starts
        .iter()
        .map(|&s| climb(geom, pot, s, -1.0))
        .fold(-lo_v.0, f64::max);
    (vmin, vmax)
}

/// Bounds `(W_min, W_max)` on every sudden-quench work value.
pub fn work_support(geom: &BilliardGeometry, pot: &QuenchPotential) -> (f64, f64) {
    let (a, b) = potential_range(geom, pot);
    let s = pot.strength();
    if s >= 0.0 {
        (s * a, s * b)
    } else {
        (s * b, s * a)
    }
}

/// Validation routine for the quench shortcut: final energies `H_f(x0)` for
/// `n` microcanonical points on the shell `H_0 = e0`. For a quench these are
/// `e0 + (xi_f - xi_0) V(q0)`, so the conditional final-energy distribution
/// is the work distribution shifted by `e0`.
pub fn conditional_final_energies(
    geom: &BilliardGeometry,
    pot: &QuenchPotential,
    e0: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..n as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k);
            let x = sample_shell_point(geom, e0, &mut rng)?;
            // H_f(x) = |p|^2 + xi_f V(q), evaluated from the phase point itself.
            Ok(x.energy() + pot.xi_f() * pot.eval(x.q) - pot.xi_0() * pot.eval(x.q))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(GL_ORDER);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // Exact up to degree 19.
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((i - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn quadrature_reproduces_area() {
        let g = BilliardGeometry::default();
        let a = converged_integral(&g, 1e-12, &|_| 1.0).unwrap();
        assert!((a - g.area()).abs() < 1e-13);
    }

    #[test]
    fn trivial_free_energies() {
        let g = BilliardGeometry::default();
        let off = QuenchPotential::default().with_xi_f(0.0);
        assert_eq!(partition_ratio(&g, &off, 0.01).unwrap(), 1.0);
        assert_eq!(classical_free_energy_difference(&g, &off, 0.01).unwrap(), 0.0);
        let pot = QuenchPotential::default();
        let r = partition_ratio(&g, &pot, 1e-8).unwrap();
        assert!((r - 1.0).abs() < 1e-6);
    }

    #[test]
    fn positive_bumps_raise_free_energy() {
        let g = BilliardGeometry::default();
        let pot = QuenchPotential::default();
        let mut all_pos = pot.gaussians().to_vec();
        for b in &mut all_pos {
            b.sign = 1.0;
        }
        let pos = QuenchPotential::new(all_pos, 0.1, 0.0, 85.0, GaussianForm::Isotropic).unwrap();
        let r = partition_ratio(&g, &pos, 2f64.powi(-10)).unwrap();
        assert!(r < 1.0);
        assert!(classical_free_energy_difference(&g, &pos, 2f64.powi(-10)).unwrap() > 0.0);
    }

    #[test]
    fn density_of_states_is_flat() {
        let g = BilliardGeometry::default();
        for e in [0.1, 1.0, 1e4] {
            assert_eq!(density_of_states(&g, e), PI * (1.0 + PI / 4.0));
        }
        // int_0^inf exp(-beta E) g dE = pi A / beta = Z_0.
        let beta = 0.37;
        assert!((density_of_states(&g, 1.0) / beta - PI * g.area() / beta).abs() < 1e-12);
    }

    #[test]
    fn zero_quench_gives_zero_work() {
        let g = BilliardGeometry::default();
        let off = QuenchPotential::default().with_xi_f(0.0);
        let s = sample_classical_work(&g, &off, 0.1, 500, 3).unwrap();
        assert!(s.values.iter().all(|w| *w == 0.0));
    }

    #[test]
    fn support_brackets_samples() {
        let g = BilliardGeometry::default();
        let pot = QuenchPotential::default();
        let (lo, hi) = work_support(&g, &pot);
        assert!(lo < 0.0 && hi > 0.0);
        assert!(hi <= 85.0 * 1.001 && lo >= -85.0 * 1.001);
        let s = sample_classical_work(&g, &pot, 1.0, 20_000, 8).unwrap();
        assert!(s.values.iter().all(|w| *w >= lo - 1e-9 && *w <= hi + 1e-9));
    }

    #[test]
    fn shell_conditional_matches_shortcut() {
        let g = BilliardGeometry::default();
        let pot = QuenchPotential::default();
        let e0 = 250.0;
        // Shell and thermal draws share the position stream, so each final
        // energy is exactly e0 + W of the same index.
        let ef = conditional_final_energies(&g, &pot, e0, 2000, 4).unwrap();
        let w = sample_classical_work(&g, &pot, 1.0, 2000, 4).unwrap();
        for (f, w) in ef.iter().zip(&w.values) {
            assert!((f - e0 - w).abs() < 1e-9);
        }
    }
}
