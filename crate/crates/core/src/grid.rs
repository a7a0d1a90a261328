//! Periodic grids on a flat torus and scalar fields over them.
//!
//! The desk model is the torus `C / L(Z + tau Z)` with `Im(tau) > 0` and the
//! edge scale `L` chosen so the total area equals a prescribed normalization.
//! Grid coordinates are `(s, t)` in the unit square, `z = L (s + tau t)`,
//! sampled at `s = i/n`, `t = j/n`, with periodic wrap-around.

use num_complex::Complex64;

use crate::{Error, Result, C64};

/// Flat-torus computation domain.
#[derive(Clone, Copy, Debug)]
pub struct TorusDomain {
    /// Modulus of the torus; `Im(tau) > 0`.
    pub tau: C64,
    /// Grid resolution per side (even, at least 8).
    pub n: usize,
    /// Total area of the fundamental cell.
    pub area: f64,
}

impl TorusDomain {
    pub fn new(tau: C64, n: usize, area: f64) -> Result<Self> {
        if tau.im <= 0.0 {
            return Err(Error::InvalidInput("torus modulus needs Im(tau) > 0".into()));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "grid resolution must be even and >= 8, got {n}"
            )));
        }
        if !(area > 0.0) {
            return Err(Error::InvalidInput("area normalization must be positive".into()));
        }
        Ok(TorusDomain { tau, n, area })
    }

    /// Square torus `tau = i`, unit area.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(C64::new(0.0, 1.0), n, 1.0)
    }

    /// Edge scale `L` with `L^2 Im(tau) = area`.
    pub fn edge_scale(&self) -> f64 {
        (self.area / self.tau.im).sqrt()
    }

    /// Complex coordinate of node `(i, j)`.
    pub fn node(&self, i: usize, j: usize) -> C64 {
        let l = self.edge_scale();
        let s = i as f64 / self.n as f64;
        let t = j as f64 / self.n as f64;
        (C64::new(s, 0.0) + self.tau * t) * l
    }

    /// Area of one grid cell.
    pub fn cell_area(&self) -> f64 {
        self.area / (self.n * self.n) as f64
    }

    /// Coefficients `(c_s, c_t)` with `d/dz = c_s d/ds + c_t d/dt` in the
    /// unit-square parametrization.
    pub fn dz_coeffs(&self) -> (C64, C64) {
        let l = self.edge_scale();
        let denom = 2.0 * l * self.tau.im;
        let i = C64::new(0.0, 1.0);
        (i * self.tau.conj() / denom, -i / denom)
    }

    /// Coefficients `(c_s, c_t)` with `d/dzbar = c_s d/ds + c_t d/dt`.
    pub fn dzbar_coeffs(&self) -> (C64, C64) {
        let (cs, ct) = self.dz_coeffs();
        (cs.conj(), ct.conj())
    }

    /// Coefficients `(c_ss, c_st, c_tt)` with
    /// `d^2/dz dzbar = c_ss d_ss + c_st d_st + c_tt d_tt` (all real).
    pub fn dzdzbar_coeffs(&self) -> (f64, f64, f64) {
        let l = self.edge_scale();
        let denom = 4.0 * l * l * self.tau.im * self.tau.im;
        (self.tau.norm_sqr() / denom, -2.0 * self.tau.re / denom, 1.0 / denom)
    }
}

/// Periodic `n x n` grid of values.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    pub n: usize,
    pub v: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut v = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                v.push(f(i, j));
            }
        }
        Grid { n, v }
    }

    pub fn constant(n: usize, value: T) -> Self {
        Grid { n, v: vec![value; n * n] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &T {
        // Periodic wrap; callers may pass i, j in 0..2n when stenciling.
        &self.v[(i % self.n) + self.n * (j % self.n)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        let n = self.n;
        &mut self.v[(i % n) + n * (j % n)]
    }

    pub fn map<U: Clone>(&self, mut f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid { n: self.n, v: self.v.iter().map(|x| f(x)).collect() }
    }
}

/// A complex scalar field: a single constant or a periodic grid of values.
#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Const(C64),
    Grid(Grid<C64>),
}

impl Field {
    pub fn zero() -> Self {
        Field::Const(C64::new(0.0, 0.0))
    }

    pub fn constant(z: C64) -> Self {
        Field::Const(z)
    }

    /// Value at node `(i, j)` (constants are position-independent).
    pub fn at(&self, i: usize, j: usize) -> C64 {
        match self {
            Field::Const(z) => *z,
            Field::Grid(g) => *g.at(i, j),
        }
    }

    /// Grid resolution if grid-valued.
    pub fn resolution(&self) -> Option<usize> {
        match self {
            Field::Const(_) => None,
            Field::Grid(g) => Some(g.n),
        }
    }

    /// Sup norm over nodes (or the constant's modulus).
    pub fn sup(&self) -> f64 {
        match self {
            Field::Const(z) => z.norm(),
            Field::Grid(g) => g.v.iter().map(|z| z.norm()).fold(0.0, f64::max),
        }
    }

    /// `true` if identically zero (to tolerance `tol` in sup norm).
    pub fn is_zero(&self, tol: f64) -> bool {
        self.sup() <= tol
    }

    /// Apply a pointwise map.
    pub fn map(&self, mut f: impl FnMut(C64) -> C64) -> Field {
        match self {
            Field::Const(z) => Field::Const(f(*z)),
            Field::Grid(g) => Field::Grid(g.map(|z| f(*z))),
        }
    }

    /// Resample on an `n x n` grid (constants broadcast; grids must match).
    pub fn require_compatible(&self, n: usize) -> Result<()> {
        match self.resolution() {
            Some(m) if m != n => Err(Error::InvalidInput(format!(
                "field grid resolution {m} does not match domain resolution {n}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Centered first difference in `s` (unit-square spacing `1/n`).
pub fn d_s(g: &Grid<Complex64>, i: usize, j: usize) -> C64 {
    let n = g.n;
    (g.at(i + 1, j) - g.at(i + n - 1, j)) * (0.5 * n as f64)
}

/// Centered first difference in `t`.
pub fn d_t(g: &Grid<Complex64>, i: usize, j: usize) -> C64 {
    let n = g.n;
    (g.at(i, j + 1) - g.at(i, j + n - 1)) * (0.5 * n as f64)
}

/// Centered second difference in `s`.
pub fn d_ss(g: &Grid<Complex64>, i: usize, j: usize) -> C64 {
    let n = g.n;
    (g.at(i + 1, j) + g.at(i + n - 1, j) - g.at(i, j) * 2.0) * ((n * n) as f64)
}

/// Centered second difference in `t`.
pub fn d_tt(g: &Grid<Complex64>, i: usize, j: usize) -> C64 {
    let n = g.n;
    (g.at(i, j + 1) + g.at(i, j + n - 1) - g.at(i, j) * 2.0) * ((n * n) as f64)
}

/// Centered mixed difference.
pub fn d_st(g: &Grid<Complex64>, i: usize, j: usize) -> C64 {
    let n = g.n;
    (g.at(i + 1, j + 1) - g.at(i + 1, j + n - 1) - g.at(i + n - 1, j + 1)
        + g.at(i + n - 1, j + n - 1))
        * (0.25 * (n * n) as f64)
}
