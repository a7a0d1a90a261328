//! Numerical solution of the self-duality system `F_h + [phi, phi^{*h}] = 0`
//! for the normal-form family on a flat-torus desk model, in diagonal and
//! full-Hermitian-metric modes.
//!
//! # Conventions
//!
//! The residual is the `dz dzbar`-coefficient matrix
//!
//! ```text
//! R = h^-1 (d_zbar h) h^-1 (d_z h) - h^-1 (d_z d_zbar h)   (curvature)
//!   + diag(k1, k2, -k1, -k2)                               (background)
//!   + [Phi, h^-1 Phi^dagger h]                             (bracket)
//! ```
//!
//! with the overall sign fixed so that `phi = 0`, flat metric gives zero
//! residual and the constant-coefficient system has real solutions.
//!
//! The constant "degree background" `(k1, k2)` stands in for the positive
//! line-bundle degrees of the genus >= 2 setting, which the flat torus
//! cannot carry. It defaults to zero; when `nu` is identically zero the
//! system has no solution on the bare torus (the first diagonal equation
//! integrates to a strictly positive quantity), so [`Background::auto`]
//! selects the canonical background `(1, 0)`, which restores unique
//! solvability and gives `(u1, u2) = (0, 0)` for `(mu, nu) = (1, 0)`.
//!
//! For diagonal metrics `diag(e^u1, e^u2, e^-u1, e^-u2)` the discrete
//! curvature is defined on the log variables (`-d_z d_zbar u_k` by the
//! 9-point stencil); for full metrics it is assembled entrywise from the
//! metric matrices. The bracket term always goes through the matrix engine;
//! the scalar reduction exists only inside the independent
//! [`constant_oracle`].

use rand::{Rng, SeedableRng};

use crate::grid::{Grid, TorusDomain};
use crate::higgs::{build_sl4, stability_flag, HiggsData, MatField, StabilityFlag, ZERO_TOL};
use crate::{Error, Result, C64, M2, M4};

/// Default convergence target for the residual sup-norm.
pub const DEFAULT_TOL: f64 = 1e-11;

/// Solution mode.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Diagonal,
    Full,
}

/// Constant background curvature `diag(k1, k2, -k1, -k2)` standing in for
/// the line-bundle degrees of the compact setting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Background {
    pub k1: f64,
    pub k2: f64,
}

impl Background {
    pub const ZERO: Background = Background { k1: 0.0, k2: 0.0 };

    pub fn new(k1: f64, k2: f64) -> Self {
        Background { k1, k2 }
    }

    /// Canonical choice for the data: zero, unless `nu` is identically zero,
    /// in which case `(1, 0)` (see module docs).
    pub fn auto(h: &HiggsData) -> Self {
        if h.nu.sup() <= ZERO_TOL {
            Background { k1: 1.0, k2: 0.0 }
        } else {
            Background::ZERO
        }
    }

    fn matrix(&self) -> M4 {
        let mut m = M4::zeros();
        m[(0, 0)] = C64::new(self.k1, 0.0);
        m[(1, 1)] = C64::new(self.k2, 0.0);
        m[(2, 2)] = C64::new(-self.k1, 0.0);
        m[(3, 3)] = C64::new(-self.k2, 0.0);
        m
    }
}

/// The Hermitian metric unknown.
#[derive(Clone, Debug)]
pub enum MetricField {
    /// `diag(e^u1, e^u2, e^-u1, e^-u2)`.
    Diagonal { u1: Grid<f64>, u2: Grid<f64> },
    /// Per-node Hermitian positive-definite 2x2 block `H`, extended to rank
    /// 4 as `H + (H^T)^-1`.
    Full { h: Grid<M2> },
}

impl MetricField {
    /// Flat metric (identity) of the given mode and resolution.
    pub fn flat(mode: Mode, n: usize) -> Self {
        match mode {
            Mode::Diagonal => MetricField::Diagonal {
                u1: Grid::constant(n, 0.0),
                u2: Grid::constant(n, 0.0),
            },
            Mode::Full => MetricField::Full { h: Grid::constant(n, M2::identity()) },
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            MetricField::Diagonal { .. } => Mode::Diagonal,
            MetricField::Full { .. } => Mode::Full,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            MetricField::Diagonal { u1, .. } => u1.n,
            MetricField::Full { h } => h.n,
        }
    }

    /// 2x2 upper block at a node.
    pub fn h2(&self, i: usize, j: usize) -> M2 {
        match self {
            MetricField::Diagonal { u1, u2 } => {
                let mut m = M2::zeros();
                m[(0, 0)] = C64::new(u1.at(i, j).exp(), 0.0);
                m[(1, 1)] = C64::new(u2.at(i, j).exp(), 0.0);
                m
            }
            MetricField::Full { h } => *h.at(i, j),
        }
    }

    /// Rank-4 metric at a node: `blockdiag(H, (H^T)^-1)`.
    pub fn h4(&self, i: usize, j: usize) -> M4 {
        let h2 = self.h2(i, j);
        let w = h2.transpose().try_inverse().expect("positive definite block");
        let mut m = M4::zeros();
        for r in 0..2 {
            for c in 0..2 {
                m[(r, c)] = h2[(r, c)];
                m[(r + 2, c + 2)] = w[(r, c)];
            }
        }
        m
    }

    /// Verify Hermitian positive definiteness at every node.
    pub fn check_pd(&self) -> Result<()> {
        match self {
            MetricField::Diagonal { u1, u2 } => {
                for v in u1.v.iter().chain(u2.v.iter()) {
                    if !v.is_finite() {
                        return Err(Error::InvalidInput("non-finite metric exponent".into()));
                    }
                }
                Ok(())
            }
            MetricField::Full { h } => {
                for m in &h.v {
                    let (a, d, b) = (m[(0, 0)], m[(1, 1)], m[(0, 1)]);
                    let herm = a.im.abs() < 1e-12
                        && d.im.abs() < 1e-12
                        && (m[(1, 0)] - b.conj()).norm() < 1e-12;
                    let pd = a.re > 0.0 && d.re > 0.0 && a.re * d.re - b.norm_sqr() > 0.0;
                    if !(herm && pd) {
                        return Err(Error::InvalidInput(
                            "metric block not Hermitian positive definite".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// Sup of the off-diagonal modulus of the 2x2 block (0 in diagonal mode).
    pub fn offdiag_sup(&self) -> f64 {
        match self {
            MetricField::Diagonal { .. } => 0.0,
            MetricField::Full { h } => {
                h.v.iter().map(|m| m[(0, 1)].norm()).fold(0.0, f64::max)
            }
        }
    }

    /// Sup-norm of the entrywise difference of the 2x2 blocks.
    pub fn sup_diff(&self, other: &MetricField) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let d = self.h2(i, j) - other.h2(i, j);
                worst = worst.max(d.iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
        worst
    }
}

/// Solve diagnostics.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual_sup: f64,
    pub residual_l2: f64,
    pub converged: bool,
    /// Sup of the metric block's off-diagonal modulus (full mode; 0 for
    /// diagonal mode).
    pub offdiag_sup: f64,
}

/// Initial guess for [`solve`].
#[derive(Clone, Debug)]
pub enum Init {
    /// Flat (identity) metric.
    Flat,
    /// Flat metric plus a seeded random perturbation (non-diagonal in full
    /// mode).
    Random(u64),
    /// Explicit starting metric (mode must match).
    Metric(MetricField),
}

/// Tunable solve parameters.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Residual sup-norm target.
    pub tol: f64,
    /// Maximum outer (Newton) iterations.
    pub max_iter: usize,
    /// Background override; `None` selects [`Background::auto`].
    pub background: Option<Background>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: DEFAULT_TOL, max_iter: 60, background: None }
    }
}

// ---------------------------------------------------------------------------
// Stencils
// ---------------------------------------------------------------------------

/// `d_z d_zbar` of a real scalar grid by the 9-point stencil.
fn lap(g: &Grid<f64>, i: usize, j: usize, c: (f64, f64, f64)) -> f64 {
    let n = g.n;
    let nn = (n * n) as f64;
    let dss = (g.at(i + 1, j) + g.at(i + n - 1, j) - 2.0 * g.at(i, j)) * nn;
    let dtt = (g.at(i, j + 1) + g.at(i, j + n - 1) - 2.0 * g.at(i, j)) * nn;
    let dst = (g.at(i + 1, j + 1) - g.at(i + 1, j + n - 1) - g.at(i + n - 1, j + 1)
        + g.at(i + n - 1, j + n - 1))
        * (0.25 * nn);
    c.0 * dss + c.1 * dst + c.2 * dtt
}

fn m4_scale(m: &M4, s: f64) -> M4 {
    m.map(|z| z * s)
}

fn m4_scale_c(m: &M4, s: C64) -> M4 {
    m.map(|z| z * s)
}

/// First differences of an `M4` grid combined into `d_z` and `d_zbar`.
fn m4_dz_dzbar(g: &Grid<M4>, i: usize, j: usize, dom: &TorusDomain) -> (M4, M4) {
    let n = g.n;
    let half_n = 0.5 * n as f64;
    let ds = m4_scale(&(g.at(i + 1, j) - g.at(i + n - 1, j)), half_n);
    let dt = m4_scale(&(g.at(i, j + 1) - g.at(i, j + n - 1)), half_n);
    let (cs, ct) = dom.dz_coeffs();
    let dz = m4_scale_c(&ds, cs) + m4_scale_c(&dt, ct);
    let dzb = m4_scale_c(&ds, cs.conj()) + m4_scale_c(&dt, ct.conj());
    (dz, dzb)
}

/// `d_z d_zbar` of an `M4` grid by the 9-point stencil.
fn m4_dzdzbar(g: &Grid<M4>, i: usize, j: usize, dom: &TorusDomain) -> M4 {
    let n = g.n;
    let nn = (n * n) as f64;
    let dss = m4_scale(&(g.at(i + 1, j) + g.at(i + n - 1, j) - m4_scale(g.at(i, j), 2.0)), nn);
    let dtt = m4_scale(&(g.at(i, j + 1) + g.at(i, j + n - 1) - m4_scale(g.at(i, j), 2.0)), nn);
    let dst = m4_scale(
        &(g.at(i + 1, j + 1) - g.at(i + 1, j + n - 1) - g.at(i + n - 1, j + 1)
            + g.at(i + n - 1, j + n - 1)),
        0.25 * nn,
    );
    let (css, cst, ctt) = dom.dzdzbar_coeffs();
    m4_scale(&dss, css) + m4_scale(&dst, cst) + m4_scale(&dtt, ctt)
}

// ---------------------------------------------------------------------------
// Residual
// ---------------------------------------------------------------------------

fn phi_star(phi: &M4, h4: &M4, h4inv: &M4) -> M4 {
    h4inv * phi.adjoint() * h4
}

/// Pointwise bracket term `[Phi, Phi^{*h}]`.
fn bracket_term(phi: &M4, h4: &M4, h4inv: &M4) -> M4 {
    let ps = phi_star(phi, h4, h4inv);
    phi * ps - ps * phi
}

/// Background contribution, symmetrized to stay self-adjoint with respect
/// to the metric (it equals `diag(k1,k2,-k1,-k2)` whenever the metric block
/// is diagonal).
fn background_term(bg: &Background, h4: &M4, h4inv: &M4) -> M4 {
    let k = bg.matrix();
    m4_scale(&(k + h4inv * k * h4), 0.5)
}

/// Residual of an arbitrary 4x4 matrix field against a metric (the Higgs
/// path is [`residual`]; this entry point also accepts synthetic fields).
pub fn residual_matrix(
    phi: &MatField,
    m: &MetricField,
    dom: &TorusDomain,
    bg: &Background,
) -> Result<Grid<M4>> {
    let n = dom.n;
    if m.n() != n {
        return Err(Error::InvalidInput(format!(
            "metric resolution {} does not match domain {}",
            m.n(),
            n
        )));
    }
    if let Some(k) = phi.resolution() {
        if k != n {
            return Err(Error::InvalidInput(format!(
                "field resolution {k} does not match domain {n}"
            )));
        }
    }
    m.check_pd()?;

    let out = match m {
        MetricField::Diagonal { u1, u2 } => {
            let c = dom.dzdzbar_coeffs();
            Grid::from_fn(n, |i, j| {
                let h4 = m.h4(i, j);
                let h4inv = h4.try_inverse().expect("diagonal metric invertible");
                let d1 = lap(u1, i, j, c);
                let d2 = lap(u2, i, j, c);
                let mut curv = M4::zeros();
                curv[(0, 0)] = C64::new(-d1, 0.0);
                curv[(1, 1)] = C64::new(-d2, 0.0);
                curv[(2, 2)] = C64::new(d1, 0.0);
                curv[(3, 3)] = C64::new(d2, 0.0);
                curv + background_term(bg, &h4, &h4inv)
                    + bracket_term(&phi.at(i, j), &h4, &h4inv)
            })
        }
        MetricField::Full { .. } => {
            let h4g = Grid::from_fn(n, |i, j| m.h4(i, j));
            Grid::from_fn(n, |i, j| {
                let h4 = *h4g.at(i, j);
                let h4inv = h4.try_inverse().expect("positive definite metric");
                let (dz, dzb) = m4_dz_dzbar(&h4g, i, j, dom);
                let dzz = m4_dzdzbar(&h4g, i, j, dom);
                let full = h4inv * dzb * h4inv * dz - h4inv * dzz;
                // The lower metric block is determined by the upper one, so
                // its curvature equation is the negative transpose of the
                // upper block. Enforcing that exactly (instead of finite-
                // differencing the derived block, which agrees only up to
                // truncation error) keeps the discrete residual exactly
                // block-structured.
                let mut curv = M4::zeros();
                for a in 0..2 {
                    for b in 0..2 {
                        curv[(a, b)] = full[(a, b)];
                        curv[(a + 2, b + 2)] = -full[(b, a)];
                    }
                }
                curv + background_term(bg, &h4, &h4inv)
                    + bracket_term(&phi.at(i, j), &h4, &h4inv)
            })
        }
    };
    Ok(out)
}

/// Residual of Higgs data against a metric.
pub fn residual(
    h: &HiggsData,
    m: &MetricField,
    dom: &TorusDomain,
    bg: &Background,
) -> Result<Grid<M4>> {
    if let Some(k) = h.resolution() {
        if k != dom.n {
            return Err(Error::InvalidInput(format!(
                "Higgs field resolution {k} does not match domain {}",
                dom.n
            )));
        }
    }
    residual_matrix(&build_sl4(h).phi, m, dom, bg)
}

fn residual_norms(r: &Grid<M4>, dom: &TorusDomain) -> (f64, f64) {
    let mut sup: f64 = 0.0;
    let mut l2 = 0.0;
    for m in &r.v {
        let mut f2 = 0.0;
        for z in m.iter() {
            sup = sup.max(z.norm());
            f2 += z.norm_sqr();
        }
        l2 += f2 * dom.cell_area();
    }
    (sup, l2.sqrt())
}

// ---------------------------------------------------------------------------
// Constant-data oracle
// ---------------------------------------------------------------------------

/// Algebraic system of the constant-data equations, assembled by the matrix
/// engine: the `(0,0)` and `(1,1)` entries of background + bracket at the
/// diagonal metric `diag(e^u1, e^u2, e^-u1, e^-u2)`.
fn constant_system(mu: C64, nu: C64, bg: &Background, u1: f64, u2: f64) -> (f64, f64) {
    let h = HiggsData::constants(2, 2, mu, nu, C64::new(0.0, 0.0)).expect("constant data");
    let phi = match build_sl4(&h).phi {
        MatField::Const(m) => m,
        MatField::Grid(_) => unreachable!("constant data"),
    };
    let mut h4 = M4::zeros();
    h4[(0, 0)] = C64::new(u1.exp(), 0.0);
    h4[(1, 1)] = C64::new(u2.exp(), 0.0);
    h4[(2, 2)] = C64::new((-u1).exp(), 0.0);
    h4[(3, 3)] = C64::new((-u2).exp(), 0.0);
    let h4inv = h4.try_inverse().expect("diagonal");
    let r = background_term(bg, &h4, &h4inv) + bracket_term(&phi, &h4, &h4inv);
    (r[(0, 0)].re, r[(1, 1)].re)
}

/// Solve the 2-variable constant-data system by damped Newton with a
/// finite-difference Jacobian, independent of the PDE machinery.
///
/// Preconditions: `mu != 0` (and `q2 = 0` is implicit: the system is the
/// diagonal family). The torus domain only fixes the (irrelevant) area
/// normalization; the result is domain-independent.
pub fn constant_oracle(
    mu: C64,
    nu: C64,
    _dom: &TorusDomain,
    bg: &Background,
) -> Result<(f64, f64)> {
    if mu.norm() <= ZERO_TOL {
        return Err(Error::Precondition("constant oracle requires mu != 0".into()));
    }
    if nu.norm() <= ZERO_TOL && bg.k1 <= 0.0 {
        return Err(Error::NoConvergence(
            "constant system with nu = 0 has no solution without a positive k1 background \
             (the first equation is a sum of strictly positive terms); use Background::auto"
                .into(),
        ));
    }
    let f = |u: (f64, f64)| constant_system(mu, nu, bg, u.0, u.1);
    let norm = |r: (f64, f64)| r.0.abs().max(r.1.abs());
    let mut u = (0.0, 0.0);
    let mut r = f(u);
    for _ in 0..200 {
        if norm(r) < 1e-13 {
            return Ok(u);
        }
        // Central-difference Jacobian.
        let eps = 1e-6;
        let j11 = (f((u.0 + eps, u.1)).0 - f((u.0 - eps, u.1)).0) / (2.0 * eps);
        let j12 = (f((u.0, u.1 + eps)).0 - f((u.0, u.1 - eps)).0) / (2.0 * eps);
        let j21 = (f((u.0 + eps, u.1)).1 - f((u.0 - eps, u.1)).1) / (2.0 * eps);
        let j22 = (f((u.0, u.1 + eps)).1 - f((u.0, u.1 - eps)).1) / (2.0 * eps);
        let det = j11 * j22 - j12 * j21;
        if det.abs() < 1e-300 {
            break;
        }
        let du = (-(j22 * r.0 - j12 * r.1) / det, -(-j21 * r.0 + j11 * r.1) / det);
        // Backtracking line search.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = (u.0 + t * du.0, u.1 + t * du.1);
            let rc = f(cand);
            if norm(rc) < norm(r) {
                u = cand;
                r = rc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm(r) < 1e-13 {
        Ok(u)
    } else {
        Err(Error::NoConvergence(format!(
            "constant oracle stalled at u = ({:.6}, {:.6}), residual {:.3e} \
             (mu = {mu}, nu = {nu}, background = ({}, {}))",
            u.0,
            u.1,
            norm(r),
            bg.k1,
            bg.k2
        )))
    }
}

// ---------------------------------------------------------------------------
// Diagonal-mode Newton solver
// ---------------------------------------------------------------------------

struct DiagState {
    u1: Grid<f64>,
    u2: Grid<f64>,
}

/// Scalar residual pair at every node (bracket part via the matrix engine).
fn diag_residual(
    s: &DiagState,
    phi: &MatField,
    dom: &TorusDomain,
    bg: &Background,
) -> (Grid<f64>, Grid<f64>) {
    let n = dom.n;
    let c = dom.dzdzbar_coeffs();
    let mut r1 = Grid::constant(n, 0.0);
    let mut r2 = Grid::constant(n, 0.0);
    for j in 0..n {
        for i in 0..n {
            let mut h4 = M4::zeros();
            let (a, b) = (s.u1.at(i, j).exp(), s.u2.at(i, j).exp());
            h4[(0, 0)] = C64::new(a, 0.0);
            h4[(1, 1)] = C64::new(b, 0.0);
            h4[(2, 2)] = C64::new(1.0 / a, 0.0);
            h4[(3, 3)] = C64::new(1.0 / b, 0.0);
            let h4inv = h4.try_inverse().expect("diagonal");
            let alg = background_term(bg, &h4, &h4inv) + bracket_term(&phi.at(i, j), &h4, &h4inv);
            *r1.at_mut(i, j) = -lap(&s.u1, i, j, c) + alg[(0, 0)].re;
            *r2.at_mut(i, j) = -lap(&s.u2, i, j, c) + alg[(1, 1)].re;
        }
    }
    (r1, r2)
}

/// Pointwise 2x2 Hessian of the algebraic part (the convex potential
/// `|nu|^2 e^{2u1}/2 + |mu|^2 e^{2u2}/2 + e^{-u1-u2}`); verified against
/// the matrix engine in tests.
fn diag_hessian(h: &HiggsData, s: &DiagState, i: usize, j: usize) -> (f64, f64, f64) {
    let nu2 = h.nu.at(i, j).norm_sqr();
    let mu2 = h.mu.at(i, j).norm_sqr();
    let e = (-s.u1.at(i, j) - s.u2.at(i, j)).exp();
    let h11 = 2.0 * nu2 * (2.0 * s.u1.at(i, j)).exp() + e;
    let h22 = 2.0 * mu2 * (2.0 * s.u2.at(i, j)).exp() + e;
    (h11, e, h22)
}

fn grid_sup(g: &Grid<f64>) -> f64 {
    g.v.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Jacobi-preconditioned conjugate gradients on the Newton system
/// `(-d_z d_zbar + Hess) delta = -r`, matrix-free.
#[allow(clippy::too_many_arguments)]
fn diag_newton_step(
    h: &HiggsData,
    s: &DiagState,
    r1: &Grid<f64>,
    r2: &Grid<f64>,
    dom: &TorusDomain,
) -> (Grid<f64>, Grid<f64>) {
    let n = dom.n;
    let c = dom.dzdzbar_coeffs();
    let hess: Grid<(f64, f64, f64)> = Grid::from_fn(n, |i, j| diag_hessian(h, s, i, j));
    let apply = |v1: &Grid<f64>, v2: &Grid<f64>| -> (Grid<f64>, Grid<f64>) {
        let mut o1 = Grid::constant(n, 0.0);
        let mut o2 = Grid::constant(n, 0.0);
        for j in 0..n {
            for i in 0..n {
                let (h11, h12, h22) = *hess.at(i, j);
                *o1.at_mut(i, j) = -lap(v1, i, j, c) + h11 * v1.at(i, j) + h12 * v2.at(i, j);
                *o2.at_mut(i, j) = -lap(v2, i, j, c) + h12 * v1.at(i, j) + h22 * v2.at(i, j);
            }
        }
        (o1, o2)
    };
    // Jacobi diagonal of the operator.
    let stencil_diag = 2.0 * (n * n) as f64 * (c.0 + c.2);
    let prec = |w1: &Grid<f64>, w2: &Grid<f64>| -> (Grid<f64>, Grid<f64>) {
        let mut o1 = Grid::constant(n, 0.0);
        let mut o2 = Grid::constant(n, 0.0);
        for j in 0..n {
            for i in 0..n {
                let (h11, _, h22) = *hess.at(i, j);
                *o1.at_mut(i, j) = w1.at(i, j) / (stencil_diag + h11);
                *o2.at_mut(i, j) = w2.at(i, j) / (stencil_diag + h22);
            }
        }
        (o1, o2)
    };
    let dot = |a1: &Grid<f64>, a2: &Grid<f64>, b1: &Grid<f64>, b2: &Grid<f64>| -> f64 {
        let mut s = 0.0;
        for k in 0..n * n {
            s += a1.v[k] * b1.v[k] + a2.v[k] * b2.v[k];
        }
        s
    };
    let axpy = |y1: &mut Grid<f64>, y2: &mut Grid<f64>, a: f64, x1: &Grid<f64>, x2: &Grid<f64>| {
        for k in 0..n * n {
            y1.v[k] += a * x1.v[k];
            y2.v[k] += a * x2.v[k];
        }
    };

    // CG for A x = b with b = -r.
    let mut x1 = Grid::constant(n, 0.0);
    let mut x2 = Grid::constant(n, 0.0);
    let mut res1 = r1.map(|v| -v);
    let mut res2 = r2.map(|v| -v);
    let (mut z1, mut z2) = prec(&res1, &res2);
    let mut p1 = z1.clone();
    let mut p2 = z2.clone();
    let mut rz = dot(&res1, &res2, &z1, &z2);
    let b_norm = dot(&res1, &res2, &res1, &res2).sqrt().max(1e-300);
    for _ in 0..20 * n + 200 {
        if dot(&res1, &res2, &res1, &res2).sqrt() < 1e-12 * b_norm {
            break;
        }
        let (ap1, ap2) = apply(&p1, &p2);
        let alpha = rz / dot(&p1, &p2, &ap1, &ap2);
        axpy(&mut x1, &mut x2, alpha, &p1, &p2);
        axpy(&mut res1, &mut res2, -alpha, &ap1, &ap2);
        let (nz1, nz2) = prec(&res1, &res2);
        let rz_new = dot(&res1, &res2, &nz1, &nz2);
        let beta = rz_new / rz;
        rz = rz_new;
        z1 = nz1;
        z2 = nz2;
        for k in 0..n * n {
            p1.v[k] = z1.v[k] + beta * p1.v[k];
            p2.v[k] = z2.v[k] + beta * p2.v[k];
        }
    }
    (x1, x2)
}

/// Damped relaxation sweep (pointwise Jacobi on the nonlinear system),
/// used as a fallback when a Newton step fails to reduce the residual.
fn diag_relax(
    h: &HiggsData,
    s: &mut DiagState,
    phi: &MatField,
    dom: &TorusDomain,
    bg: &Background,
) {
    let n = dom.n;
    let c = dom.dzdzbar_coeffs();
    let stencil_diag = 2.0 * (n * n) as f64 * (c.0 + c.2);
    let (r1, r2) = diag_residual(s, phi, dom, bg);
    for j in 0..n {
        for i in 0..n {
            let (h11, _, h22) = diag_hessian(h, s, i, j);
            let w = 0.8;
            *s.u1.at_mut(i, j) -= w * r1.at(i, j) / (stencil_diag + h11);
            *s.u2.at_mut(i, j) -= w * r2.at(i, j) / (stencil_diag + h22);
        }
    }
}

fn solve_diagonal(
    h: &HiggsData,
    dom: &TorusDomain,
    init: Init,
    opts: &SolveOptions,
    bg: &Background,
) -> Result<(MetricField, SolveReport)> {
    let n = dom.n;
    let phi = build_sl4(h).phi;
    let mut s = match init {
        Init::Flat => DiagState { u1: Grid::constant(n, 0.0), u2: Grid::constant(n, 0.0) },
        Init::Random(seed) => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            DiagState {
                u1: Grid::from_fn(n, |_, _| rng.gen_range(-0.5..0.5)),
                u2: Grid::from_fn(n, |_, _| rng.gen_range(-0.5..0.5)),
            }
        }
        Init::Metric(MetricField::Diagonal { u1, u2 }) => {
            if u1.n != n {
                return Err(Error::InvalidInput("initial metric resolution mismatch".into()));
            }
            DiagState { u1, u2 }
        }
        Init::Metric(MetricField::Full { .. }) => {
            return Err(Error::InvalidInput("diagonal solve needs a diagonal initial metric".into()))
        }
    };

    let (mut r1, mut r2) = diag_residual(&s, &phi, dom, bg);
    let mut sup = grid_sup(&r1).max(grid_sup(&r2));
    let mut iters = 0;
    while sup > opts.tol && iters < opts.max_iter {
        iters += 1;
        let (d1, d2) = diag_newton_step(h, &s, &r1, &r2, dom);
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let cand = DiagState {
                u1: Grid::from_fn(n, |i, j| s.u1.at(i, j) + t * d1.at(i, j)),
                u2: Grid::from_fn(n, |i, j| s.u2.at(i, j) + t * d2.at(i, j)),
            };
            let (c1, c2) = diag_residual(&cand, &phi, dom, bg);
            let cs = grid_sup(&c1).max(grid_sup(&c2));
            if cs < sup {
                s = cand;
                r1 = c1;
                r2 = c2;
                sup = cs;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            // Fallback: relaxation sweeps, then resume Newton.
            for _ in 0..50 {
                diag_relax(h, &mut s, &phi, dom, bg);
            }
            let (c1, c2) = diag_residual(&s, &phi, dom, bg);
            r1 = c1;
            r2 = c2;
            let new_sup = grid_sup(&r1).max(grid_sup(&r2));
            if new_sup >= sup {
                break; // genuinely stuck
            }
            sup = new_sup;
        }
    }

    let m = MetricField::Diagonal { u1: s.u1, u2: s.u2 };
    let full_res = residual(h, &m, dom, bg)?;
    let (residual_sup, residual_l2) = residual_norms(&full_res, dom);
    let converged = residual_sup <= opts.tol.max(sup) && sup <= opts.tol;
    let report = SolveReport {
        iterations: iters,
        residual_sup,
        residual_l2,
        converged,
        offdiag_sup: 0.0,
    };
    if !converged {
        return Err(Error::NoConvergence(format!(
            "diagonal solve stalled after {iters} iterations, residual sup {residual_sup:.3e}"
        )));
    }
    Ok((m, report))
}

// ---------------------------------------------------------------------------
// Full-mode Newton-Krylov solver
// ---------------------------------------------------------------------------

/// Pack/unpack the Hermitian block `H = [[a, b], [conj b, d]]` as 4 reals
/// per node: `[a, d, re b, im b]`.
fn unpack_metric(x: &[f64], n: usize) -> Grid<M2> {
    Grid::from_fn(n, |i, j| {
        let k = 4 * (i + n * j);
        let b = C64::new(x[k + 2], x[k + 3]);
        M2::new(C64::new(x[k], 0.0), b, b.conj(), C64::new(x[k + 1], 0.0))
    })
}

/// Reduced residual: the Hermitian part of `H * R_V` per node (4 reals),
/// where `R_V` is the upper 2x2 block of the matrix residual. For metrics
/// of the split form the matrix residual is block diagonal and
/// `H * R_V` is Hermitian up to roundoff, so this captures the full
/// residual content on a square system.
fn full_reduced_residual(
    phi: &MatField,
    hgrid: &Grid<M2>,
    dom: &TorusDomain,
    bg: &Background,
) -> Result<Vec<f64>> {
    let n = dom.n;
    let m = MetricField::Full { h: hgrid.clone() };
    let r = residual_matrix(phi, &m, dom, bg)?;
    let mut out = vec![0.0; 4 * n * n];
    for j in 0..n {
        for i in 0..n {
            let rm = r.at(i, j);
            let rv = M2::new(rm[(0, 0)], rm[(0, 1)], rm[(1, 0)], rm[(1, 1)]);
            let hr = hgrid.at(i, j) * rv;
            let herm = (hr + hr.adjoint()).map(|z| z * 0.5);
            let k = 4 * (i + n * j);
            out[k] = herm[(0, 0)].re;
            out[k + 1] = herm[(1, 1)].re;
            out[k + 2] = herm[(0, 1)].re;
            out[k + 3] = herm[(0, 1)].im;
        }
    }
    Ok(out)
}

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn vec_sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn is_pd(x: &[f64], n: usize) -> bool {
    for k in (0..4 * n * n).step_by(4) {
        let (a, d) = (x[k], x[k + 1]);
        let b2 = x[k + 2] * x[k + 2] + x[k + 3] * x[k + 3];
        if !(a > 0.0 && d > 0.0 && a * d - b2 > 0.0) {
            return false;
        }
    }
    true
}

/// Unpreconditioned BiCGSTAB for the (nonsymmetric) Newton system, with the
/// matrix-vector product supplied as a closure.
fn bicgstab(
    matvec: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = b.to_vec();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let b_norm = vec_norm(b).max(1e-300);
    for _ in 0..max_iter {
        if vec_norm(&r) < tol * b_norm {
            break;
        }
        let rho_new: f64 = r0.iter().zip(&r).map(|(a, b)| a * b).sum();
        if rho_new.abs() < 1e-300 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for k in 0..n {
            p[k] = r[k] + beta * (p[k] - omega * v[k]);
        }
        v = matvec(&p);
        let r0v: f64 = r0.iter().zip(&v).map(|(a, b)| a * b).sum();
        if r0v.abs() < 1e-300 {
            break;
        }
        alpha = rho / r0v;
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        if vec_norm(&s) < tol * b_norm {
            for k in 0..n {
                x[k] += alpha * p[k];
            }
            r = s;
            break;
        }
        let t = matvec(&s);
        let tt: f64 = t.iter().map(|x| x * x).sum();
        if tt < 1e-300 {
            break;
        }
        omega = t.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>() / tt;
        for k in 0..n {
            x[k] += alpha * p[k] + omega * s[k];
            r[k] = s[k] - omega * t[k];
        }
    }
    if std::env::var_os("SP4_SOLVER_TRACE").is_some() {
        eprintln!("  bicgstab final rel res {:.3e}", vec_norm(&r) / b_norm);
    }
    x
}

fn solve_full(
    h: &HiggsData,
    dom: &TorusDomain,
    init: Init,
    opts: &SolveOptions,
    bg: &Background,
) -> Result<(MetricField, SolveReport)> {
    let n = dom.n;
    let phi = build_sl4(h).phi;
    let mut x: Vec<f64> = match init {
        Init::Flat => {
            let mut x = vec![0.0; 4 * n * n];
            for k in (0..4 * n * n).step_by(4) {
                x[k] = 1.0;
                x[k + 1] = 1.0;
            }
            x
        }
        Init::Random(seed) => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut x = vec![0.0; 4 * n * n];
            for k in (0..4 * n * n).step_by(4) {
                x[k] = 1.0 + rng.gen_range(-0.2..0.2);
                x[k + 1] = 1.0 + rng.gen_range(-0.2..0.2);
                x[k + 2] = rng.gen_range(-0.2..0.2);
                x[k + 3] = rng.gen_range(-0.2..0.2);
            }
            x
        }
        Init::Metric(MetricField::Full { h: hg }) => {
            if hg.n != n {
                return Err(Error::InvalidInput("initial metric resolution mismatch".into()));
            }
            let mut x = vec![0.0; 4 * n * n];
            for j in 0..n {
                for i in 0..n {
                    let m = hg.at(i, j);
                    let k = 4 * (i + n * j);
                    x[k] = m[(0, 0)].re;
                    x[k + 1] = m[(1, 1)].re;
                    x[k + 2] = m[(0, 1)].re;
                    x[k + 3] = m[(0, 1)].im;
                }
            }
            x
        }
        Init::Metric(MetricField::Diagonal { u1, u2 }) => {
            if u1.n != n {
                return Err(Error::InvalidInput("initial metric resolution mismatch".into()));
            }
            let mut x = vec![0.0; 4 * n * n];
            for j in 0..n {
                for i in 0..n {
                    let k = 4 * (i + n * j);
                    x[k] = u1.at(i, j).exp();
                    x[k + 1] = u2.at(i, j).exp();
                }
            }
            x
        }
    };
    if !is_pd(&x, n) {
        return Err(Error::InvalidInput("initial metric not positive definite".into()));
    }

    let eval = |x: &[f64]| -> Result<Vec<f64>> {
        full_reduced_residual(&phi, &unpack_metric(x, n), dom, bg)
    };

    let mut r = eval(&x)?;
    let mut sup = vec_sup(&r);
    let mut iters = 0;
    // Pseudo-transient continuation: shift the Jacobian by `shift * I` and
    // shrink the shift with the residual (switched evolution relaxation), so
    // far-from-solution steps are damped implicit-Euler steps while the
    // method reduces to plain Newton near the solution.
    let mut shift = sup;
    let mut stalls = 0usize;
    while sup > opts.tol && iters < opts.max_iter {
        iters += 1;
        // Matrix-free Jacobian action by central differences around x.
        let scale = vec_sup(&x).max(1.0);
        let x_base = x.clone();
        let mut matvec = |v: &[f64]| -> Vec<f64> {
            let vn = vec_norm(v);
            if vn == 0.0 {
                return vec![0.0; v.len()];
            }
            let eps = 1e-7 * scale / vn;
            let xp: Vec<f64> = x_base.iter().zip(v).map(|(a, b)| a + eps * b).collect();
            let xm: Vec<f64> = x_base.iter().zip(v).map(|(a, b)| a - eps * b).collect();
            let rp = full_reduced_residual(&phi, &unpack_metric(&xp, n), dom, bg)
                .unwrap_or_else(|_| vec![f64::NAN; v.len()]);
            let rm = full_reduced_residual(&phi, &unpack_metric(&xm, n), dom, bg)
                .unwrap_or_else(|_| vec![f64::NAN; v.len()]);
            rp.iter()
                .zip(&rm)
                .zip(v)
                .map(|((a, b), vi)| (a - b) / (2.0 * eps) + shift * vi)
                .collect()
        };
        let b: Vec<f64> = r.iter().map(|v| -v).collect();
        let krylov_tol = 1e-4_f64.min(sup).max(1e-10);
        let delta = bicgstab(&mut matvec, &b, krylov_tol, 60 * n);
        // Damped update with a positive-definiteness safeguard.
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let cand: Vec<f64> = x.iter().zip(&delta).map(|(a, b)| a + t * b).collect();
            if is_pd(&cand, n) {
                if let Ok(rc) = eval(&cand) {
                    let cs = vec_sup(&rc);
                    if cs < sup {
                        shift *= (cs / sup).min(0.7);
                        x = cand;
                        r = rc;
                        sup = cs;
                        improved = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if std::env::var_os("SP4_SOLVER_TRACE").is_some() {
            eprintln!("full iter {iters}: sup {sup:.3e} improved {improved} t {t:.3e} shift {shift:.3e}");
        }
        if !improved {
            // Retreat to a more strongly damped pseudo-timestep before
            // declaring a stall.
            stalls += 1;
            shift = shift * 10.0 + sup;
            if stalls > 5 {
                break;
            }
        } else {
            stalls = 0;
        }
    }

    let m = MetricField::Full { h: unpack_metric(&x, n) };
    let full_res = residual_matrix(&phi, &m, dom, bg)?;
    let (residual_sup, residual_l2) = residual_norms(&full_res, dom);
    let converged = sup <= opts.tol;
    let report = SolveReport {
        iterations: iters,
        residual_sup,
        residual_l2,
        converged,
        offdiag_sup: m.offdiag_sup(),
    };
    if !converged {
        return Err(Error::NoConvergence(format!(
            "full solve stalled after {iters} iterations, residual sup {residual_sup:.3e}"
        )));
    }
    Ok((m, report))
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Solve the self-duality system for stable data.
///
/// Preconditions: `stability_flag(h)` is `Stable` (in particular `mu` not
/// identically zero) and `q2` is identically zero (the metric ansatz is the
/// one of the cyclic family).
pub fn solve(
    h: &HiggsData,
    dom: &TorusDomain,
    mode: Mode,
    init: Init,
    opts: &SolveOptions,
) -> Result<(MetricField, SolveReport)> {
    if stability_flag(h) != StabilityFlag::Stable {
        return Err(Error::Precondition(
            "solve requires stable data (mu not identically zero, d > g-1)".into(),
        ));
    }
    if h.q2.sup() > ZERO_TOL {
        return Err(Error::Precondition(
            "solve requires q2 = 0 (split metric ansatz)".into(),
        ));
    }
    if let Some(k) = h.resolution() {
        if k != dom.n {
            return Err(Error::InvalidInput(format!(
                "Higgs field resolution {k} does not match domain {}",
                dom.n
            )));
        }
    }
    let bg = opts.background.unwrap_or_else(|| Background::auto(h));
    match mode {
        Mode::Diagonal => solve_diagonal(h, dom, init, opts, &bg),
        Mode::Full => solve_full(h, dom, init, opts, &bg),
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Field;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn const_data(mu: C64, nu: C64) -> HiggsData {
        HiggsData::constants(2, 2, mu, nu, c(0.0, 0.0)).unwrap()
    }

    /// Closed-form constant solution for mu*nu != 0, zero background:
    /// u1 - u2 = ln(|mu|/|nu|), 3 u1 + u2 = -2 ln |nu|.
    fn closed_form(mu: C64, nu: C64) -> (f64, f64) {
        let diff = (mu.norm() / nu.norm()).ln();
        let s = -2.0 * nu.norm().ln();
        let u1 = (s + diff) / 4.0;
        (u1, u1 - diff)
    }

    #[test]
    fn zero_field_flat_metric_zero_residual() {
        let dom = TorusDomain::square(8).unwrap();
        let phi = MatField::Const(M4::zeros());
        let m = MetricField::flat(Mode::Diagonal, 8);
        let r = residual_matrix(&phi, &m, &dom, &Background::ZERO).unwrap();
        let (sup, _) = residual_norms(&r, &dom);
        assert_eq!(sup, 0.0);
        let m = MetricField::flat(Mode::Full, 8);
        let r = residual_matrix(&phi, &m, &dom, &Background::ZERO).unwrap();
        let (sup, _) = residual_norms(&r, &dom);
        assert_eq!(sup, 0.0);
    }

    #[test]
    fn oracle_matches_closed_form() {
        let dom = TorusDomain::square(8).unwrap();
        for (mu, nu) in [
            (c(1.0, 0.0), c(0.3, 0.0)),
            (c(0.5, 0.5), c(0.2, -0.9)),
            (c(2.0, -1.0), c(1.5, 0.4)),
        ] {
            let (u1, u2) = constant_oracle(mu, nu, &dom, &Background::ZERO).unwrap();
            let (v1, v2) = closed_form(mu, nu);
            assert!((u1 - v1).abs() < 1e-10, "{u1} vs {v1}");
            assert!((u2 - v2).abs() < 1e-10, "{u2} vs {v2}");
        }
    }

    #[test]
    fn oracle_nu_zero_background() {
        let dom = TorusDomain::square(8).unwrap();
        let h = const_data(c(1.0, 0.0), c(0.0, 0.0));
        let bg = Background::auto(&h);
        assert_eq!(bg, Background::new(1.0, 0.0));
        let (u1, u2) = constant_oracle(c(1.0, 0.0), c(0.0, 0.0), &dom, &bg).unwrap();
        assert!(u1.abs() < 1e-12 && u2.abs() < 1e-12, "({u1}, {u2})");
        // Without the background the system is obstructed.
        assert!(constant_oracle(c(1.0, 0.0), c(0.0, 0.0), &dom, &Background::ZERO).is_err());
        // mu = 0 rejected.
        assert!(constant_oracle(c(0.0, 0.0), c(1.0, 0.0), &dom, &bg).is_err());
    }

    #[test]
    fn oracle_phase_invariance_and_area_fixture() {
        let dom1 = TorusDomain::square(8).unwrap();
        let dom2 = TorusDomain::new(c(0.0, 1.0), 8, 5.0).unwrap();
        let base = constant_oracle(c(1.0, 0.0), c(0.4, 0.0), &dom1, &Background::ZERO).unwrap();
        for theta in [0.3, 1.2, 2.9] {
            let phase = C64::from_polar(1.0, theta);
            let got = constant_oracle(phase, c(0.4, 0.0) * phase, &dom1, &Background::ZERO)
                .unwrap();
            assert!((got.0 - base.0).abs() < 1e-12 && (got.1 - base.1).abs() < 1e-12);
        }
        // Area-normalization covariance fixture: the constant solution is
        // area-independent.
        let other = constant_oracle(c(1.0, 0.0), c(0.4, 0.0), &dom2, &Background::ZERO).unwrap();
        assert!((other.0 - base.0).abs() < 1e-13 && (other.1 - base.1).abs() < 1e-13);
    }

    #[test]
    fn residual_at_oracle_metric_is_tiny() {
        let dom = TorusDomain::square(16).unwrap();
        let h = const_data(c(1.0, 0.0), c(0.3, 0.0));
        let (u1, u2) = constant_oracle(c(1.0, 0.0), c(0.3, 0.0), &dom, &Background::ZERO).unwrap();
        let m = MetricField::Diagonal {
            u1: Grid::constant(16, u1),
            u2: Grid::constant(16, u2),
        };
        let r = residual(&h, &m, &dom, &Background::ZERO).unwrap();
        let (sup, _) = residual_norms(&r, &dom);
        assert!(sup < 1e-10, "residual {sup:.3e}");
    }

    #[test]
    fn diag_hessian_matches_engine() {
        // Finite differences of the engine-assembled algebraic part must
        // reproduce the analytic Hessian used by the Newton solver.
        let h = const_data(c(0.8, 0.3), c(0.4, -0.2));
        let bg = Background::ZERO;
        let (mu, nu) = (h.mu.at(0, 0), h.nu.at(0, 0));
        let (u1, u2) = (0.3, -0.2);
        let eps = 1e-6;
        let g = |a: f64, b: f64| constant_system(mu, nu, &bg, a, b);
        let j11 = (g(u1 + eps, u2).0 - g(u1 - eps, u2).0) / (2.0 * eps);
        let j12 = (g(u1, u2 + eps).0 - g(u1, u2 - eps).0) / (2.0 * eps);
        let j22 = (g(u1, u2 + eps).1 - g(u1, u2 - eps).1) / (2.0 * eps);
        let s = DiagState { u1: Grid::constant(8, u1), u2: Grid::constant(8, u2) };
        let (h11, h12, h22) = diag_hessian(&h, &s, 0, 0);
        assert!((j11 - h11).abs() < 1e-6, "{j11} vs {h11}");
        assert!((j12 - h12).abs() < 1e-6, "{j12} vs {h12}");
        assert!((j22 - h22).abs() < 1e-6, "{j22} vs {h22}");
    }

    #[test]
    fn solve_constant_matches_oracle_small() {
        let dom = TorusDomain::square(16).unwrap();
        let h = const_data(c(1.0, 0.0), c(0.3, 0.0));
        let (m, rep) = solve(&h, &dom, Mode::Diagonal, Init::Flat, &SolveOptions::default())
            .unwrap();
        assert!(rep.converged);
        assert!(rep.residual_sup < 1e-10);
        let (u1, u2) = constant_oracle(c(1.0, 0.0), c(0.3, 0.0), &dom, &Background::ZERO).unwrap();
        if let MetricField::Diagonal { u1: g1, u2: g2 } = &m {
            for k in 0..g1.v.len() {
                assert!((g1.v[k] - u1).abs() < 1e-9);
                assert!((g2.v[k] - u2).abs() < 1e-9);
            }
        } else {
            panic!("expected diagonal metric");
        }
    }

    #[test]
    fn solve_nu_zero_auto_background() {
        let dom = TorusDomain::square(16).unwrap();
        let h = const_data(c(1.0, 0.0), c(0.0, 0.0));
        let (m, rep) = solve(&h, &dom, Mode::Diagonal, Init::Flat, &SolveOptions::default())
            .unwrap();
        assert!(rep.converged && rep.residual_sup < 1e-10);
        if let MetricField::Diagonal { u1, u2 } = &m {
            assert!(grid_sup(u1) < 1e-10 && grid_sup(u2) < 1e-10);
        }
    }

    #[test]
    fn solve_varying_mu() {
        let n = 16;
        let dom = TorusDomain::square(n).unwrap();
        let mu = Field::Grid(Grid::from_fn(n, |i, _| {
            c(1.0 + 0.1 * (std::f64::consts::TAU * i as f64 / n as f64).cos(), 0.0)
        }));
        let h = HiggsData::new(2, 2, mu, Field::zero(), Field::zero()).unwrap();
        let (_, rep) = solve(&h, &dom, Mode::Diagonal, Init::Flat, &SolveOptions::default())
            .unwrap();
        assert!(rep.converged && rep.residual_sup < 1e-10, "{rep:?}");
    }

    #[test]
    fn solve_uniqueness_and_preconditions() {
        let dom = TorusDomain::square(12).unwrap();
        let h = const_data(c(0.8, 0.2), c(0.3, -0.1));
        let (m1, _) = solve(&h, &dom, Mode::Diagonal, Init::Random(1), &SolveOptions::default())
            .unwrap();
        let (m2, _) = solve(&h, &dom, Mode::Diagonal, Init::Random(2), &SolveOptions::default())
            .unwrap();
        assert!(m1.sup_diff(&m2) < 1e-8);
        // mu = 0 rejected; q2 != 0 rejected.
        let bad = const_data(c(0.0, 0.0), c(0.3, 0.0));
        assert!(solve(&bad, &dom, Mode::Diagonal, Init::Flat, &SolveOptions::default()).is_err());
        let badq = HiggsData::constants(2, 2, c(1.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)).unwrap();
        assert!(solve(&badq, &dom, Mode::Diagonal, Init::Flat, &SolveOptions::default()).is_err());
    }

    #[test]
    fn richardson_second_order_convergence() {
        // Solve varying data at n, 2n, 4n; successive coarse/fine
        // differences shrink by ~4 (second-order discretization).
        let make = |n: usize| {
            let mu = Field::Grid(Grid::from_fn(n, |i, j| {
                let s = std::f64::consts::TAU * i as f64 / n as f64;
                let t = std::f64::consts::TAU * j as f64 / n as f64;
                c(1.0 + 0.15 * s.cos() + 0.1 * t.sin(), 0.0)
            }));
            HiggsData::new(2, 2, mu, Field::constant(c(0.4, 0.0)), Field::zero()).unwrap()
        };
        let solve_at = |n: usize| {
            let dom = TorusDomain::square(n).unwrap();
            let (m, _) =
                solve(&make(n), &dom, Mode::Diagonal, Init::Flat, &SolveOptions::default())
                    .unwrap();
            m
        };
        let (m8, m16, m32) = (solve_at(8), solve_at(16), solve_at(32));
        let diff = |coarse: &MetricField, fine: &MetricField, ratio: usize| -> f64 {
            let (MetricField::Diagonal { u1: c1, .. }, MetricField::Diagonal { u1: f1, .. }) =
                (coarse, fine)
            else {
                panic!("diagonal expected")
            };
            let mut worst: f64 = 0.0;
            for j in 0..c1.n {
                for i in 0..c1.n {
                    worst = worst.max((c1.at(i, j) - f1.at(ratio * i, ratio * j)).abs());
                }
            }
            worst
        };
        let e1 = diff(&m8, &m16, 2);
        let e2 = diff(&m16, &m32, 2);
        let ratio = e1 / e2;
        assert!(ratio > 2.8 && ratio < 5.2, "convergence ratio {ratio}");
    }

    #[test]
    fn full_solve_splits_and_matches_diagonal() {
        let dom = TorusDomain::square(8).unwrap();
        let h = const_data(c(1.0, 0.0), c(0.3, 0.0));
        let (mf, rep) = solve(&h, &dom, Mode::Full, Init::Random(7), &SolveOptions::default())
            .unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!(rep.offdiag_sup < 1e-8, "offdiag {:.3e}", rep.offdiag_sup);
        let (md, _) = solve(&h, &dom, Mode::Diagonal, Init::Flat, &SolveOptions::default())
            .unwrap();
        assert!(mf.sup_diff(&md) < 1e-7, "full/diagonal gap {:.3e}", mf.sup_diff(&md));
    }

    #[test]
    fn full_solve_nu_zero() {
        let dom = TorusDomain::square(8).unwrap();
        let h = const_data(c(1.0, 0.0), c(0.0, 0.0));
        let (_, rep) = solve(&h, &dom, Mode::Full, Init::Random(11), &SolveOptions::default())
            .unwrap();
        assert!(rep.converged && rep.offdiag_sup < 1e-8, "{rep:?}");
    }

    #[test]
    fn residual_structure_for_split_metric() {
        // For a non-diagonal Hermitian block the matrix residual stays
        // block diagonal, with lower block = -transpose of upper, and
        // H * R_V Hermitian (discrete self-adjointness).
        let n = 8;
        let dom = TorusDomain::square(n).unwrap();
        let h = const_data(c(0.9, 0.1), c(0.0, 0.0));
        let phi = build_sl4(&h).phi;
        let hgrid = Grid::from_fn(n, |i, j| {
            let s = (std::f64::consts::TAU * i as f64 / n as f64).cos();
            let t = (std::f64::consts::TAU * j as f64 / n as f64).sin();
            let b = c(0.1 * s, 0.05 * t);
            M2::new(c(1.2 + 0.1 * t, 0.0), b, b.conj(), c(0.8 - 0.05 * s, 0.0))
        });
        let m = MetricField::Full { h: hgrid.clone() };
        let bg = Background::new(1.0, 0.0);
        let r = residual_matrix(&phi, &m, &dom, &bg).unwrap();
        for j in 0..n {
            for i in 0..n {
                let rm = r.at(i, j);
                // Off-block entries vanish.
                for a in 0..2 {
                    for b2 in 2..4 {
                        assert!(rm[(a, b2)].norm() < 1e-9);
                        assert!(rm[(b2, a)].norm() < 1e-9);
                    }
                }
                // Lower block is minus the transpose of the upper block.
                for a in 0..2 {
                    for b2 in 0..2 {
                        assert!((rm[(a + 2, b2 + 2)] + rm[(b2, a)]).norm() < 1e-8);
                    }
                }
                // H R_V Hermitian.
                let rv = M2::new(rm[(0, 0)], rm[(0, 1)], rm[(1, 0)], rm[(1, 1)]);
                let hr = hgrid.at(i, j) * rv;
                assert!((hr - hr.adjoint()).iter().all(|z| z.norm() < 1e-8));
            }
        }
    }

    #[test]
    fn residual_input_validation() {
        let dom = TorusDomain::square(8).unwrap();
        let h = const_data(c(1.0, 0.0), c(0.3, 0.0));
        let m = MetricField::flat(Mode::Diagonal, 16);
        assert!(residual(&h, &m, &dom, &Background::ZERO).is_err());
        // Non-positive-definite full metric rejected.
        let bad = MetricField::Full {
            h: Grid::constant(8, M2::new(c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0))),
        };
        assert!(residual(&h, &bad, &dom, &Background::ZERO).is_err());
    }
}
