//! Finite-difference discretisation of `H = -hbar^2 lap + xi V` with
//! Dirichlet walls: a square lattice of spacing `h`, restricted to sites
//! strictly inside the domain (curved walls become a staircase).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BilliardGeometry, Vec2};
use crate::potential::QuenchPotential;

/// Fewest interior sites accepted by [`GridSpec::new`].
pub const MIN_SITES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GridDomain {
    Stadium(BilliardGeometry),
    /// `[0, width] x [0, height]`; both sides must be multiples of `h`.
    /// Used to check the discretisation against the analytic spectrum.
    Rectangle { width: f64, height: f64 },
}

impl GridDomain {
    pub fn area(&self) -> f64 {
        match self {
            GridDomain::Stadium(g) => g.area(),
            GridDomain::Rectangle { width, height } => width * height,
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            GridDomain::Stadium(g) => g.perimeter(),
            GridDomain::Rectangle { width, height } => 2.0 * (width + height),
        }
    }

    fn extent(&self) -> (f64, f64) {
        match self {
            GridDomain::Stadium(g) => {
                let (_, hi) = g.bounding_box();
                (hi.x, hi.y)
            }
            GridDomain::Rectangle { width, height } => (*width, *height),
        }
    }

    /// Strictly inside, with sites closer than `margin` to a wall treated as
    /// lying on it.
    fn interior(&self, q: Vec2, margin: f64) -> bool {
        match self {
            GridDomain::Stadium(g) => {
                if q.x <= margin || q.y <= margin {
                    return false;
                }
                if q.x < g.straight() - margin {
                    q.y < g.radius() - margin
                } else {
                    (q - g.arc_center()).norm() < g.radius() - margin
                        && (q.x >= g.straight() || q.y < g.radius() - margin)
                }
            }
            GridDomain::Rectangle { width, height } => {
                q.x > margin && q.y > margin && q.x < width - margin && q.y < height - margin
            }
        }
    }
}

/// Interior lattice sites `(i h, j h)` of a domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub domain: GridDomain,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    /// Lattice indices `(i, j)` of the interior sites, row by row.
    pub sites: Vec<(usize, usize)>,
    #[serde(skip)]
    lookup: Vec<Option<usize>>,
}

impl GridSpec {
    pub fn new(domain: GridDomain, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::range("grid_spacing", "must be positive and finite"));
        }
        if let GridDomain::Rectangle { width, height } = domain {
            for side in [width, height] {
                let cells = side / h;
                if (cells - cells.round()).abs() > 1e-9 {
                    return Err(Error::range(
                        "grid_spacing",
                        "rectangle sides must be integer multiples of h",
                    ));
                }
            }
        }
        let (xmax, ymax) = domain.extent();
        let nx = (xmax / h).ceil() as usize + 1;
        let ny = (ymax / h).ceil() as usize + 1;
        let margin = 1e-9 * h;
        let mut sites = Vec::new();
        let mut lookup = vec![None; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let q = Vec2::new(i as f64 * h, j as f64 * h);
                if domain.interior(q, margin) {
                    lookup[j * nx + i] = Some(sites.len());
                    sites.push((i, j));
                }
            }
        }
        if sites.len() < MIN_SITES {
            return Err(Error::GridTooCoarse {
                sites: sites.len(),
                required: MIN_SITES,
            });
        }
        Ok(Self {
            domain,
            h,
            nx,
            ny,
            sites,
            lookup,
        })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn position(&self, site: usize) -> Vec2 {
        let (i, j) = self.sites[site];
        Vec2::new(i as f64 * self.h, j as f64 * self.h)
    }

    fn index(&self, i: isize, j: isize) -> Option<usize> {
        if i < 0 || j < 0 || i as usize >= self.nx || j as usize >= self.ny {
            return None;
        }
        self.lookup[j as usize * self.nx + i as usize]
    }

    /// Interior neighbours of a site (missing neighbours are Dirichlet zeros).
    pub fn neighbours(&self, site: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.sites[site];
        let (i, j) = (i as isize, j as isize);
        [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
            .into_iter()
            .filter_map(move |(a, b)| self.index(a, b))
    }
}

/// Symmetric matrix stored as its diagonal plus the strictly upper
/// off-diagonal entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymmetric {
    pub dim: usize,
    pub diag: Vec<f64>,
    /// `(row, col, value)` with `row < col`.
    pub upper: Vec<(usize, usize, f64)>,
}

impl SparseSymmetric {
    pub fn to_dense(&self) -> faer::Mat<f64> {
        let mut m = faer::Mat::<f64>::zeros(self.dim, self.dim);
        for (i, d) in self.diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        for &(i, j, v) in &self.upper {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, d), xi) in y.iter_mut().zip(&self.diag).zip(x) {
            *yi = d * xi;
        }
        for &(i, j, v) in &self.upper {
            y[i] += v * x[j];
            y[j] += v * x[i];
        }
    }

    /// Max absolute row sum, an upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        let mut rows: Vec<f64> = self.diag.iter().map(|d| d.abs()).collect();
        for &(i, j, v) in &self.upper {
            rows[i] += v.abs();
            rows[j] += v.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }
}

/// `(H_0, H_f)`: the 5-point kinetic operator `hbar^2 / h^2 (4 - neighbours)`
/// plus `xi_0 V` and `xi_f V` on the diagonal.
pub fn build_hamiltonians(
    grid: &GridSpec,
    pot: &QuenchPotential,
    hbar: f64,
) -> Result<(SparseSymmetric, SparseSymmetric)> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::range("hbar", "must be positive and finite"));
    }
    let scale = hbar * hbar / (grid.h * grid.h);
    let n = grid.len();
    let mut upper = Vec::with_capacity(2 * n);
    for s in 0..n {
        for t in grid.neighbours(s) {
            if s < t {
                upper.push((s, t, -scale));
            }
        }
    }
    let v: Vec<f64> = (0..n).map(|s| pot.eval(grid.position(s))).collect();
    let diag = |xi: f64| -> Vec<f64> { v.iter().map(|vs| 4.0 * scale + xi * vs).collect() };
    let h0 = SparseSymmetric {
        dim: n,
        diag: diag(pot.xi_0()),
        upper: upper.clone(),
    };
    let hf = SparseSymmetric {
        dim: n,
        diag: diag(pot.xi_f()),
        upper,
    };
    Ok((h0, hf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_grid_counts() {
        let g = GridSpec::new(GridDomain::Rectangle { width: 1.0, height: 0.5 }, 0.05).unwrap();
        assert_eq!(g.len(), 19 * 9);
        let g = GridSpec::new(GridDomain::Rectangle { width: 1.0, height: 0.5 }, 0.3);
        assert!(g.is_err());
    }

    #[test]
    fn stadium_sites_are_inside() {
        let geom = BilliardGeometry::default();
        let g = GridSpec::new(GridDomain::Stadium(geom), 1.0 / 30.0).unwrap();
        assert!(g.len() > 1000);
        for s in 0..g.len() {
            assert!(geom.contains(g.position(s)));
        }
        // Roughly area / h^2 sites.
        let expected = geom.area() * 900.0;
        assert!((g.len() as f64 - expected).abs() < 0.1 * expected);
    }

    #[test]
    fn too_coarse() {
        let r = GridSpec::new(GridDomain::Stadium(BilliardGeometry::default()), 0.25);
        assert!(matches!(r, Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn hamiltonians_are_symmetric_and_share_kinetics() {
        let grid = GridSpec::new(GridDomain::Stadium(BilliardGeometry::default()), 0.1).unwrap();
        let pot = QuenchPotential::default();
        let (h0, hf) = build_hamiltonians(&grid, &pot, 1.0).unwrap();
        let d = h0.to_dense();
        let mut asym = 0.0f64;
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                asym = asym.max((d[(i, j)] - d[(j, i)]).abs());
            }
        }
        assert_eq!(asym, 0.0);
        assert_eq!(h0.upper, hf.upper);

        let (a, b) = build_hamiltonians(&grid, &pot.with_xi_f(0.0), 1.0).unwrap();
        assert_eq!(a, b);
    }
}
