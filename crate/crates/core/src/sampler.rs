//! Boltzmann initial conditions for the force-free billiard Hamiltonian
//! `H(q, p) = p_x^2 + p_y^2` (mass 1/2).
//!
//! Every draw is a pure function of `(seed, index)`: sample `k` reads from
//! ChaCha8 stream `k` keyed by `seed`, so parallel generation over disjoint
//! index ranges reproduces the serial result bit for bit. Gaussian
//! components use the Box-Muller transform
//! `sqrt(-2 ln u1) * (cos 2 pi u2, sin 2 pi u2)` with `u1 = 1 - U[0, 1)`.

use std::f64::consts::TAU;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BilliardGeometry, Vec2};

/// Zero acceptances after this many proposals means the geometry is broken.
pub const MAX_PROPOSALS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: Vec2,
    pub p: Vec2,
}

impl PhasePoint {
    pub fn new(q: Vec2, p: Vec2) -> Self {
        Self { q, p }
    }

    /// `H = |p|^2`.
    pub fn energy(&self) -> f64 {
        self.p.norm_sq()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThermalEnsemble {
    pub points: Vec<PhasePoint>,
    pub beta: f64,
    pub seed: u64,
}

impl ThermalEnsemble {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// CSV with columns `qx,qy,px,py`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "qx,qy,px,py")?;
        for pt in &self.points {
            writeln!(out, "{:e},{:e},{:e},{:e}", pt.q.x, pt.q.y, pt.p.x, pt.p.y)?;
        }
        Ok(())
    }
}

/// SplitMix64 finaliser, used to derive independent seeds for separate
/// purposes (pilot window, ensembles, classical samples) from one run seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The RNG substream owned by sample `index` of a run keyed by `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Pair of independent standard normals (Box-Muller).
pub fn standard_normal_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (TAU * u2).sin_cos();
    (r * c, r * s)
}

/// Uniform position by rejection from the bounding box.
pub fn sample_position<R: Rng + ?Sized>(geom: &BilliardGeometry, rng: &mut R) -> Result<Vec2> {
    let (_, hi) = geom.bounding_box();
    for _ in 0..MAX_PROPOSALS {
        let q = Vec2::new(hi.x * rng.random::<f64>(), hi.y * rng.random::<f64>());
        if geom.contains(q) {
            return Ok(q);
        }
    }
    Err(Error::RejectionStall {
        proposals: MAX_PROPOSALS,
    })
}

/// Momentum with density proportional to `exp(-beta |p|^2)`: independent
/// components of variance `1 / (2 beta)`.
pub fn sample_momentum<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> Vec2 {
    let std = (0.5 / beta).sqrt();
    let (a, b) = standard_normal_pair(rng);
    Vec2::new(std * a, std * b)
}

/// Point on the energy shell `|p|^2 = energy`: uniform position, uniform
/// momentum direction.
pub fn sample_shell_point<R: Rng + ?Sized>(
    geom: &BilliardGeometry,
    energy: f64,
    rng: &mut R,
) -> Result<PhasePoint> {
    let q = sample_position(geom, rng)?;
    let (s, c) = (TAU * rng.random::<f64>()).sin_cos();
    let p = energy.max(0.0).sqrt();
    Ok(PhasePoint::new(q, Vec2::new(p * c, p * s)))
}

/// Sample `index` of the thermal run keyed by `seed`.
pub fn sample_point(
    geom: &BilliardGeometry,
    beta: f64,
    seed: u64,
    index: u64,
) -> Result<PhasePoint> {
    let mut rng = stream_rng(seed, index);
    let q = sample_position(geom, &mut rng)?;
    let p = sample_momentum(beta, &mut rng);
    Ok(PhasePoint::new(q, p))
}

pub fn sample_ensemble(
    geom: &BilliardGeometry,
    beta: f64,
    n: usize,
    seed: u64,
) -> Result<ThermalEnsemble> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::range("beta", "must be positive and finite"));
    }
    if n == 0 {
        return Err(Error::range("n", "ensemble needs at least one sample"));
    }
    let points = (0..n as u64)
        .into_par_iter()
        .map(|k| sample_point(geom, beta, seed, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(ThermalEnsemble { points, beta, seed })
}
