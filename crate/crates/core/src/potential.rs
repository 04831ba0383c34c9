//! The quench perturbation: a signed sum of Gaussians, and its exact integral
//! along straight free-flight segments.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Segments farther than this many widths from a centre skip that Gaussian.
pub const CUTOFF_WIDTHS: f64 = 8.0;

/// Shape of each bump.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianForm {
    /// `exp(-[(x - xi)^2 + (y - yi)^2] / (2 sigma^2))`.
    #[default]
    Isotropic,
    /// `exp(-[(x - xi)^2 - (y - yi)^2] / (2 sigma^2))`, the literally printed
    /// saddle form, kept only for sensitivity checks. Integrated numerically.
    Saddle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub center: Vec2,
    pub sign: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuenchPotential {
    gaussians: Vec<Gaussian>,
    sigma: f64,
    xi_0: f64,
    xi_f: f64,
    form: GaussianForm,
}

impl Default for QuenchPotential {
    fn default() -> Self {
        let centers = [(0.2, 0.4), (0.67, 0.5), (0.5, 0.15), (0.3, 0.75)];
        let signs = [1.0, -1.0, 1.0, -1.0];
        Self {
            gaussians: centers
                .iter()
                .zip(signs)
                .map(|(&(x, y), sign)| Gaussian {
                    center: Vec2::new(x, y),
                    sign,
                })
                .collect(),
            sigma: 0.1,
            xi_0: 0.0,
            xi_f: 85.0,
            form: GaussianForm::Isotropic,
        }
    }
}

impl QuenchPotential {
    pub fn new(
        gaussians: Vec<Gaussian>,
        sigma: f64,
        xi_0: f64,
        xi_f: f64,
        form: GaussianForm,
    ) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::range("sigma", "must be positive and finite"));
        }
        if !xi_0.is_finite() || !xi_f.is_finite() {
            return Err(Error::range("xi_f", "quench strengths must be finite"));
        }
        if gaussians.iter().any(|g| g.sign != 1.0 && g.sign != -1.0) {
            return Err(Error::range("signs", "each sign must be +1 or -1"));
        }
        Ok(Self {
            gaussians,
            sigma,
            xi_0,
            xi_f,
            form,
        })
    }

    pub fn gaussians(&self) -> &[Gaussian] {
        &self.gaussians
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn xi_0(&self) -> f64 {
        self.xi_0
    }

    pub fn xi_f(&self) -> f64 {
        self.xi_f
    }

    pub fn form(&self) -> GaussianForm {
        self.form
    }

    /// Quench amplitude `xi_f - xi_0` multiplying `V` in `Delta H`.
    pub fn strength(&self) -> f64 {
        self.xi_f - self.xi_0
    }

    pub fn with_xi_f(&self, xi_f: f64) -> Self {
        Self { xi_f, ..self.clone() }
    }

    pub fn with_signs_flipped(&self) -> Self {
        let mut out = self.clone();
        for g in &mut out.gaussians {
            g.sign = -g.sign;
        }
        out
    }

    /// Unit-amplitude potential `V(q)`.
    pub fn eval(&self, q: Vec2) -> f64 {
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        self.gaussians
            .iter()
            .map(|g| {
                let d = q - g.center;
                let r2 = match self.form {
                    GaussianForm::Isotropic => d.x * d.x + d.y * d.y,
                    GaussianForm::Saddle => d.x * d.x - d.y * d.y,
                };
                g.sign * (-r2 * inv).exp()
            })
            .sum()
    }

    /// `Delta H(q) = (xi_f - xi_0) V(q)`.
    pub fn delta_h(&self, q: Vec2) -> f64 {
        self.strength() * self.eval(q)
    }

    /// `int_0^duration V(q0 + direction * speed * tau) d tau`.
    ///
    /// Exact (error-function) evaluation for isotropic Gaussians; the saddle
    /// form falls back to composite Simpson.
    pub fn segment_integral(&self, q0: Vec2, direction: Vec2, speed: f64, duration: f64) -> f64 {
        if duration <= 0.0 {
            return 0.0;
        }
        if self.form == GaussianForm::Saddle {
            return self.segment_integral_simpson(q0, direction, speed, duration);
        }
        let length = speed * duration;
        if length == 0.0 {
            return duration * self.eval(q0);
        }
        let sigma = self.sigma;
        let cutoff_sq = (CUTOFF_WIDTHS * sigma).powi(2);
        let inv_two_var = 1.0 / (2.0 * sigma * sigma);
        let z_scale = 1.0 / (std::f64::consts::SQRT_2 * sigma);
        let prefactor = sigma * (PI / 2.0).sqrt() / speed;

        let mut total = 0.0;
        for g in &self.gaussians {
            let a = q0 - g.center;
            let along = direction.dot(a);
            let perp = direction.cross(a);
            let perp_sq = perp * perp;
            let closest = (-along).clamp(0.0, length);
            let along_closest = along + closest;
            if perp_sq + along_closest * along_closest > cutoff_sq {
                continue;
            }
            let z1 = along * z_scale;
            let z2 = (along + length) * z_scale;
            total += g.sign * prefactor * (-perp_sq * inv_two_var).exp() * erf_diff(z1, z2);
        }
        total
    }

    /// Composite Simpson along the segment, starting from a step of at most
    /// `sigma / 5` in path length and halving it (reusing samples) until two
    /// successive estimates agree to 1e-10 relative.
    pub fn segment_integral_simpson(
        &self,
        q0: Vec2,
        direction: Vec2,
        speed: f64,
        duration: f64,
    ) -> f64 {
        const MAX_HALVINGS: u32 = 12;
        if duration <= 0.0 {
            return 0.0;
        }
        let v = direction * speed;
        let f = |tau: f64| self.eval(q0 + v * tau);
        let mut panels = ((speed * duration / (self.sigma / 5.0)).ceil() as usize).max(1);
        let mut h = duration / panels as f64;
        // Trapezoid sums T_n; Simpson is (4 T_2n - T_n) / 3.
        let mut trapezoid = h * (0.5 * (f(0.0) + f(duration)) + (1..panels).map(|k| f(k as f64 * h)).sum::<f64>());
        let mut simpson = f64::NAN;
        for _ in 0..MAX_HALVINGS {
            let midpoints: f64 = (0..panels).map(|k| f((k as f64 + 0.5) * h)).sum();
            let refined = 0.5 * trapezoid + 0.5 * h * midpoints;
            let next = (4.0 * refined - trapezoid) / 3.0;
            panels *= 2;
            h *= 0.5;
            trapezoid = refined;
            let converged = (next - simpson).abs() <= 1e-10 * next.abs().max(1e-12 * duration);
            simpson = next;
            if converged {
                break;
            }
        }
        simpson
    }
}

/// `erf(z2) - erf(z1)` for `z1 <= z2` without catastrophic cancellation in
/// the tails.
fn erf_diff(z1: f64, z2: f64) -> f64 {
    if z1 >= 0.0 {
        libm::erfc(z1) - libm::erfc(z2)
    } else if z2 <= 0.0 {
        libm::erfc(-z2) - libm::erfc(-z1)
    } else {
        libm::erf(z2) - libm::erf(z1)
    }
}
