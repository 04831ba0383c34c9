//! Free flight with specular bounces, and the action difference
//! `Delta S(x0, t) = int_0^t Delta H(x(tau)) d tau` along the unperturbed orbit.
//!
//! With mass 1/2 the velocity is `dq/dt = 2p`, so a particle of momentum `p`
//! moves at speed `2|p|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{reflect_lenient, BilliardGeometry, BoundaryHit, Vec2, NUDGE};
use crate::potential::QuenchPotential;
use crate::sampler::PhasePoint;

pub const DEFAULT_MAX_BOUNCES: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlightSegment {
    pub start: Vec2,
    pub direction: Vec2,
    pub speed: f64,
    pub duration: f64,
}

impl FlightSegment {
    pub fn end(&self) -> Vec2 {
        self.start + self.direction * (self.speed * self.duration)
    }
}

/// Incremental propagator. The next boundary hit is cached, so splitting a
/// flight into many short advances costs one intersection per bounce.
#[derive(Clone, Debug)]
pub struct Flight<'g> {
    geom: &'g BilliardGeometry,
    q: Vec2,
    direction: Vec2,
    speed: f64,
    /// Remaining path length to the cached hit, and the hit.
    pending: Option<(f64, BoundaryHit)>,
    bounces: u64,
    max_bounces: u64,
}

impl<'g> Flight<'g> {
    pub fn new(geom: &'g BilliardGeometry, x0: PhasePoint, max_bounces: u64) -> Self {
        let pn = x0.p.norm();
        let direction = x0.p.normalized().unwrap_or(Vec2::new(1.0, 0.0));
        Self {
            geom,
            q: x0.q,
            direction,
            speed: 2.0 * pn,
            pending: None,
            bounces: 0,
            max_bounces,
        }
    }

    pub fn position(&self) -> Vec2 {
        self.q
    }

    pub fn bounces(&self) -> u64 {
        self.bounces
    }

    pub fn phase_point(&self) -> PhasePoint {
        PhasePoint::new(self.q, self.direction * (0.5 * self.speed))
    }

    /// Moves forward by `dt`, handing each straight piece to `visit`.
    pub fn advance(&mut self, dt: f64, mut visit: impl FnMut(&FlightSegment)) -> Result<()> {
        if self.speed == 0.0 {
            visit(&FlightSegment {
                start: self.q,
                direction: self.direction,
                speed: 0.0,
                duration: dt,
            });
            return Ok(());
        }
        let mut left = dt;
        while left > 0.0 {
            let (to_hit, hit) = match self.pending {
                Some(p) => p,
                None => {
                    let hit = self.geom.first_hit(self.q, self.direction)?;
                    (hit.path_length, hit)
                }
            };
            let path = self.speed * left;
            if path < to_hit {
                let seg = FlightSegment {
                    start: self.q,
                    direction: self.direction,
                    speed: self.speed,
                    duration: left,
                };
                visit(&seg);
                self.q = seg.end();
                self.pending = Some((to_hit - path, hit));
                return Ok(());
            }
            let duration = to_hit / self.speed;
            visit(&FlightSegment {
                start: self.q,
                direction: self.direction,
                speed: self.speed,
                duration,
            });
            left -= duration;
            self.bounce(&hit)?;
        }
        Ok(())
    }

    fn bounce(&mut self, hit: &BoundaryHit) -> Result<()> {
        self.bounces += 1;
        if self.bounces > self.max_bounces {
            return Err(Error::BounceLimitExceeded {
                limit: self.max_bounces,
            });
        }
        let n = hit.inward_normal;
        if self.direction.dot(n) < 0.0 {
            self.direction = reflect_lenient(self.direction, n);
        }
        self.q = hit.point + n * NUDGE;
        self.pending = None;
        Ok(())
    }
}

/// Final phase point and the straight segments travelled in time `t`.
pub fn propagate(
    x0: PhasePoint,
    t: f64,
    geom: &BilliardGeometry,
    max_bounces: u64,
) -> Result<(PhasePoint, Vec<FlightSegment>)> {
    if !(t >= 0.0) {
        return Err(Error::range("t", "propagation time must be non-negative"));
    }
    let mut flight = Flight::new(geom, x0, max_bounces);
    let mut segments = Vec::new();
    if t == 0.0 || x0.p == Vec2::ZERO {
        segments.push(FlightSegment {
            start: x0.q,
            direction: flight.direction,
            speed: flight.speed,
            duration: t,
        });
        return Ok((x0, segments));
    }
    flight.advance(t, |s| segments.push(*s))?;
    Ok((flight.phase_point(), segments))
}

/// `Delta S(x0, t)`, with `Delta H = (xi_f - xi_0) V`.
pub fn action_difference(
    x0: PhasePoint,
    t: f64,
    geom: &BilliardGeometry,
    pot: &QuenchPotential,
    max_bounces: u64,
) -> Result<f64> {
    Ok(action_checkpoints(x0, &[t], geom, pot, max_bounces)?[0])
}

/// `Delta S(x0, t_k)` for non-decreasing `times`, from a single propagation.
pub fn action_checkpoints(
    x0: PhasePoint,
    times: &[f64],
    geom: &BilliardGeometry,
    pot: &QuenchPotential,
    max_bounces: u64,
) -> Result<Vec<f64>> {
    let strength = pot.strength();
    let mut out = Vec::with_capacity(times.len());
    if strength == 0.0 {
        out.resize(times.len(), 0.0);
        return Ok(out);
    }
    let mut flight = Flight::new(geom, x0, max_bounces);
    let mut now = 0.0;
    let mut integral = 0.0;
    for &t in times {
        if !(t >= now) {
            return Err(Error::range("times", "checkpoints must be non-negative and sorted"));
        }
        if t > now {
            flight.advance(t - now, |s| {
                integral += pot.segment_integral(s.start, s.direction, s.speed, s.duration);
            })?;
            now = t;
        }
        out.push(strength * integral);
    }
    Ok(out)
}
