//! The desymmetrized (quarter) stadium billiard.
//!
//! Placement convention: the rectangle `[0, l] x [0, r]` joined to the quarter
//! disk of radius `r` centred at `(l, 0)`, so the bounding box is
//! `[0, l + r] x [0, r]`. The four walls are the bottom segment `y = 0`, the
//! left segment `x = 0`, the top segment `y = r` (for `x <= l`) and the arc.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary tolerance in length units.
pub const TOL_GEOM: f64 = 1e-10;
/// Distance a reflected point is pushed along the inward normal.
pub const NUDGE: f64 = 1e-12;
/// Rays with `|d . n|` below this are treated as grazing.
pub const TOL_GRAZING: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Unit vector along `self`; `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wall {
    Bottom,
    Top,
    Left,
    Arc,
}

/// Where a ray leaves the billiard.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryHit {
    pub point: Vec2,
    pub path_length: f64,
    pub inward_normal: Vec2,
    pub wall: Wall,
    /// Set when a second wall was hit within [`TOL_GEOM`]; the normal is then
    /// the bisector of the two wall normals.
    pub corner: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilliardGeometry {
    radius: f64,
    straight: f64,
}

impl Default for BilliardGeometry {
    fn default() -> Self {
        Self {
            radius: 1.0,
            straight: 1.0,
        }
    }
}

impl BilliardGeometry {
    pub fn new(radius: f64, straight: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::range("radius", "must be positive and finite"));
        }
        if !(straight >= 0.0 && straight.is_finite()) {
            return Err(Error::range("straight_length", "must be non-negative and finite"));
        }
        Ok(Self { radius, straight })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn straight(&self) -> f64 {
        self.straight
    }

    pub fn arc_center(&self) -> Vec2 {
        Vec2::new(self.straight, 0.0)
    }

    pub fn area(&self) -> f64 {
        self.straight * self.radius + PI * self.radius * self.radius / 4.0
    }

    pub fn perimeter(&self) -> f64 {
        let (r, l) = (self.radius, self.straight);
        (l + r) + r + l + PI * r / 2.0
    }

    /// Lower-left and upper-right corners of the bounding box.
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        (
            Vec2::ZERO,
            Vec2::new(self.straight + self.radius, self.radius),
        )
    }

    /// Strict interior test.
    pub fn contains(&self, q: Vec2) -> bool {
        if !(q.x > 0.0 && q.y > 0.0) {
            return false;
        }
        if q.x < self.straight {
            q.y < self.radius
        } else {
            let dx = q.x - self.straight;
            dx * dx + q.y * q.y < self.radius * self.radius
        }
    }

    /// Closed-region test with slack `tol` on every wall.
    pub fn contains_within(&self, q: Vec2, tol: f64) -> bool {
        if q.x < -tol || q.y < -tol {
            return false;
        }
        if q.x <= self.straight {
            q.y <= self.radius + tol
        } else {
            (q - self.arc_center()).norm() <= self.radius + tol
        }
    }

    /// Signed distance-like residual of `q` against the equation of `wall`.
    pub fn wall_residual(&self, wall: Wall, q: Vec2) -> f64 {
        match wall {
            Wall::Bottom => q.y,
            Wall::Top => q.y - self.radius,
            Wall::Left => q.x,
            Wall::Arc => (q - self.arc_center()).norm() - self.radius,
        }
    }

    fn candidates(&self, origin: Vec2, dir: Vec2) -> impl Iterator<Item = (f64, Wall)> {
        let (r, l) = (self.radius, self.straight);
        let mut out: [Option<(f64, Wall)>; 4] = [None; 4];

        if dir.y < 0.0 {
            let t = -origin.y / dir.y;
            let x = origin.x + t * dir.x;
            if x >= -TOL_GEOM && x <= l + r + TOL_GEOM {
                out[0] = Some((t, Wall::Bottom));
            }
        }
        if dir.y > 0.0 {
            let t = (r - origin.y) / dir.y;
            let x = origin.x + t * dir.x;
            if x >= -TOL_GEOM && x <= l + TOL_GEOM {
                out[1] = Some((t, Wall::Top));
            }
        }
        if dir.x < 0.0 {
            let t = -origin.x / dir.x;
            let y = origin.y + t * dir.y;
            if y >= -TOL_GEOM && y <= r + TOL_GEOM {
                out[2] = Some((t, Wall::Left));
            }
        }
        // The arc is only ever hit from inside the disk, i.e. at the larger root.
        let f = origin - self.arc_center();
        let b = f.dot(dir);
        let c = f.norm_sq() - r * r;
        let disc = b * b - c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            // Stable form of -b + sqrt(disc).
            let t = if b <= 0.0 { -b + sq } else { -c / (b + sq) };
            let p = origin + dir * t;
            if p.x >= l - TOL_GEOM && p.y >= -TOL_GEOM {
                out[3] = Some((t, Wall::Arc));
            }
        }
        out.into_iter()
            .flatten()
            .filter(|(t, _)| *t > TOL_GEOM && t.is_finite())
    }

    fn project_onto(&self, wall: Wall, p: Vec2) -> Vec2 {
        match wall {
            Wall::Bottom => Vec2::new(p.x, 0.0),
            Wall::Top => Vec2::new(p.x, self.radius),
            Wall::Left => Vec2::new(0.0, p.y),
            Wall::Arc => {
                let c = self.arc_center();
                match (p - c).normalized() {
                    Some(u) => c + u * self.radius,
                    None => p,
                }
            }
        }
    }

    pub fn inward_normal(&self, wall: Wall, p: Vec2) -> Vec2 {
        match wall {
            Wall::Bottom => Vec2::new(0.0, 1.0),
            Wall::Top => Vec2::new(0.0, -1.0),
            Wall::Left => Vec2::new(1.0, 0.0),
            Wall::Arc => (self.arc_center() - p)
                .normalized()
                .unwrap_or(Vec2::new(-1.0, 0.0)),
        }
    }

    /// Nearest boundary intersection of the ray `origin + s * direction`,
    /// `s > TOL_GEOM`.
    pub fn first_hit(&self, origin: Vec2, direction: Vec2) -> Result<BoundaryHit> {
        if !self.contains_within(origin, TOL_GEOM) || (direction.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::NoHit { origin, direction });
        }
        let mut best: Option<(f64, Wall)> = None;
        let mut second: Option<(f64, Wall)> = None;
        for cand in self.candidates(origin, direction) {
            match best {
                None => best = Some(cand),
                Some(b) if cand.0 < b.0 => {
                    second = best;
                    best = Some(cand);
                }
                Some(_) => {
                    if second.is_none_or(|s| cand.0 < s.0) {
                        second = Some(cand);
                    }
                }
            }
        }
        let (t, wall) = best.ok_or(Error::NoHit { origin, direction })?;
        let raw = origin + direction * t;
        let point = self.project_onto(wall, raw);
        let mut normal = self.inward_normal(wall, point);
        let mut corner = false;
        if let Some((t2, wall2)) = second {
            if t2 - t < TOL_GEOM {
                let n2 = self.inward_normal(wall2, point);
                // Tangent junctions (top/arc at (l, r)) have parallel normals.
                if normal.dot(n2) < 1.0 - 1e-12 {
                    if let Some(bis) = (normal + n2).normalized() {
                        normal = bis;
                        corner = true;
                    }
                }
            }
        }
        Ok(BoundaryHit {
            point,
            path_length: t,
            inward_normal: normal,
            wall,
            corner,
        })
    }
}

/// Specular reflection `d - 2 (d . n) n` of an incoming direction.
///
/// Returns [`Error::GrazingRay`] when `|d . n| < TOL_GRAZING`; see
/// [`reflect_lenient`] for the variant used during propagation.
pub fn reflect(direction: Vec2, inward_normal: Vec2) -> Result<Vec2> {
    let dn = direction.dot(inward_normal);
    if dn.abs() < TOL_GRAZING {
        return Err(Error::GrazingRay { dot: dn });
    }
    Ok(mirror(direction, inward_normal, dn))
}

/// Reflects even grazing rays, logging a warning instead of failing.
pub fn reflect_lenient(direction: Vec2, inward_normal: Vec2) -> Vec2 {
    let dn = direction.dot(inward_normal);
    if dn.abs() < TOL_GRAZING {
        log::warn!("grazing reflection, |d.n| = {:e}", dn.abs());
    }
    mirror(direction, inward_normal, dn)
}

#[inline]
fn mirror(d: Vec2, n: Vec2, dn: f64) -> Vec2 {
    let out = d - n * (2.0 * dn);
    // Keep the direction a unit vector over millions of bounces.
    out.normalized().unwrap_or(out)
}
