//! Normal-form Sp(4,R) Higgs data `(mu, nu, q2)`, its sl(4,C) matrix
//! realization, fibration invariants, the 2x2 Cayley partner, the C* gauge
//! action with normal form, the zeta_4 fixed-point computation, and
//! stability flags.
//!
//! The four weight slots of the rank-4 bundle are labeled `N`, `N^-1 K`,
//! `N^-1`, `N K^-1`; in the trivialized desk model the twists are invisible
//! and every operation is pointwise over a [`Field`].

use crate::cyclic::{CyclicFrame, GradedForm, TypeTag};
use crate::grid::{Field, Grid};
use crate::liealg::{ALPHA1, ALPHA2, MU};
use crate::{Error, Result, C64, M2, M4};

/// Sup-norm threshold under which a field counts as identically zero.
pub const ZERO_TOL: f64 = 1e-14;

/// The normal-form parameters of a maximal Sp(4,R) Higgs bundle in the
/// exceptional-component family.
#[derive(Clone, Debug)]
pub struct HiggsData {
    /// Genus bookkeeping tag (>= 2).
    pub genus: usize,
    /// Degree tag of the line subbundle, in `[g-1, 3g-3]`.
    pub d: i64,
    pub mu: Field,
    pub nu: Field,
    pub q2: Field,
}

impl HiggsData {
    pub fn new(genus: usize, d: i64, mu: Field, nu: Field, q2: Field) -> Result<Self> {
        if genus < 2 {
            return Err(Error::InvalidInput(format!("genus must be >= 2, got {genus}")));
        }
        let g = genus as i64;
        if d < g - 1 || d > 3 * g - 3 {
            return Err(Error::InvalidInput(format!(
                "degree {d} outside [{}, {}] for genus {genus}",
                g - 1,
                3 * g - 3
            )));
        }
        // All grid-valued fields must share one resolution.
        let mut res = None;
        for f in [&mu, &nu, &q2] {
            if let Some(n) = f.resolution() {
                match res {
                    None => res = Some(n),
                    Some(m) if m != n => {
                        return Err(Error::InvalidInput(format!(
                            "field grid resolutions disagree: {m} vs {n}"
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(HiggsData { genus, d, mu, nu, q2 })
    }

    /// Constant-coefficient data (the most common desk-model case).
    pub fn constants(genus: usize, d: i64, mu: C64, nu: C64, q2: C64) -> Result<Self> {
        Self::new(genus, d, Field::constant(mu), Field::constant(nu), Field::constant(q2))
    }

    /// Shared grid resolution of the fields, if any is grid-valued.
    pub fn resolution(&self) -> Option<usize> {
        [&self.mu, &self.nu, &self.q2].iter().find_map(|f| f.resolution())
    }
}

/// A 4x4-matrix-valued field: one constant matrix or a periodic grid.
#[derive(Clone, Debug)]
pub enum MatField {
    Const(M4),
    Grid(Grid<M4>),
}

impl MatField {
    pub fn at(&self, i: usize, j: usize) -> M4 {
        match self {
            MatField::Const(m) => *m,
            MatField::Grid(g) => *g.at(i, j),
        }
    }

    pub fn resolution(&self) -> Option<usize> {
        match self {
            MatField::Const(_) => None,
            MatField::Grid(g) => Some(g.n),
        }
    }
}

/// The sl(4,C) Higgs field of the normal form, with the weight slot labels.
#[derive(Clone, Debug)]
pub struct Sl4Higgs {
    pub phi: MatField,
    /// Line-bundle labels of the four slots.
    pub weight_labels: [&'static str; 4],
}

/// The 2x2 Cayley-partner data: the symmetric pairing and the K^2-twisted
/// endomorphism `psi = gamma . beta`.
#[derive(Clone, Debug)]
pub struct CayleyData {
    /// The fixed pairing `[[0,1],[1,0]]`.
    pub q_w: M2,
    pub psi: MatField2,
}

/// A 2x2-matrix-valued field.
#[derive(Clone, Debug)]
pub enum MatField2 {
    Const(M2),
    Grid(Grid<M2>),
}

impl MatField2 {
    pub fn at(&self, i: usize, j: usize) -> M2 {
        match self {
            MatField2::Const(m) => *m,
            MatField2::Grid(g) => *g.at(i, j),
        }
    }
}

fn phi_matrix(mu: C64, nu: C64, q2: C64) -> M4 {
    let one = C64::new(1.0, 0.0);
    let mut m = M4::zeros();
    m[(0, 2)] = nu;
    m[(0, 3)] = q2;
    m[(1, 2)] = q2;
    m[(1, 3)] = mu;
    m[(2, 1)] = one;
    m[(3, 0)] = one;
    m
}


/// Build the 4x4 matrix realization of the Higgs field.
pub fn build_sl4(h: &HiggsData) -> Sl4Higgs {
    let labels = ["N", "N^-1 K", "N^-1", "N K^-1"];
    let phi = match h.resolution() {
        None => MatField::Const(phi_matrix(h.mu.at(0, 0), h.nu.at(0, 0), h.q2.at(0, 0))),
        Some(n) => MatField::Grid(Grid::from_fn(n, |i, j| {
            phi_matrix(h.mu.at(i, j), h.nu.at(i, j), h.q2.at(i, j))
        })),
    };
    Sl4Higgs { phi, weight_labels: labels }
}

/// Fibration invariants `(Tr(phi^2), Tr(phi^4))`, computed from matrix
/// powers (never from a hand-derived formula; the closed form lives only in
/// a test fixture).
pub fn hitchin_invariants(s: &Sl4Higgs) -> (Field, Field) {
    let traces = |m: &M4| -> (C64, C64) {
        let m2 = m * m;
        (m2.trace(), (m2 * m2).trace())
    };
    match &s.phi {
        MatField::Const(m) => {
            let (p1, p2) = traces(m);
            (Field::constant(p1), Field::constant(p2))
        }
        MatField::Grid(g) => {
            let p1 = Grid::from_fn(g.n, |i, j| traces(g.at(i, j)).0);
            let p2 = Grid::from_fn(g.n, |i, j| traces(g.at(i, j)).1);
            (Field::Grid(p1), Field::Grid(p2))
        }
    }
}

/// The Cayley partner `psi = gamma . beta = [[q2, mu], [nu, q2]]` with its
/// symmetric pairing.
pub fn cayley_partner(h: &HiggsData) -> CayleyData {
    let one = C64::new(1.0, 0.0);
    let q_w = M2::new(C64::new(0.0, 0.0), one, one, C64::new(0.0, 0.0));
    let psi_at = |i: usize, j: usize| -> M2 {
        M2::new(h.q2.at(i, j), h.mu.at(i, j), h.nu.at(i, j), h.q2.at(i, j))
    };
    let psi = match h.resolution() {
        None => MatField2::Const(psi_at(0, 0)),
        Some(n) => MatField2::Grid(Grid::from_fn(n, psi_at)),
    };
    CayleyData { q_w, psi }
}

/// The C* action `(mu, nu, q2) -> (lam^2 mu, lam^-2 nu, q2)`.
pub fn gauge_action(lam: C64, h: &HiggsData) -> Result<HiggsData> {
    if lam.norm() == 0.0 {
        return Err(Error::InvalidInput("gauge parameter must be nonzero".into()));
    }
    let l2 = lam * lam;
    let l2inv = C64::new(1.0, 0.0) / l2;
    HiggsData::new(
        h.genus,
        h.d,
        h.mu.map(|z| z * l2),
        h.nu.map(|z| z * l2inv),
        h.q2.clone(),
    )
}

/// Check that conjugating the matrix field by `diag(l^-3, l, l^3, l^-1)`
/// with `l = exp(2 pi i / 8)` multiplies it by `i` entrywise.
///
/// Requires `q2 = 0`: the check is specific to the diagonal form (the `q2`
/// slots pick up `-i` instead).
pub fn zeta4_fixed_point_check(h: &HiggsData) -> Result<bool> {
    if h.q2.sup() > ZERO_TOL {
        return Err(Error::Precondition(
            "zeta_4 fixed-point check requires q2 = 0".into(),
        ));
    }
    let l = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    let d = nalgebra::Vector4::new(l.powi(-3), l, l.powi(3), l.powi(-1));
    let i_unit = C64::new(0.0, 1.0);
    let s = build_sl4(h);
    let n = h.resolution().unwrap_or(1);
    let mut ok = true;
    for jj in 0..n {
        for ii in 0..n {
            let m = s.phi.at(ii, jj);
            for r in 0..4 {
                for c in 0..4 {
                    let conj_entry = d[r] * m[(r, c)] / d[c];
                    if (conj_entry - i_unit * m[(r, c)]).norm() > 1e-12 {
                        ok = false;
                    }
                }
            }
        }
    }
    Ok(ok)
}

/// Stability classification of the data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StabilityFlag {
    Stable,
    /// Strictly semistable, unstable, or a boundary case needing context;
    /// carries a human-readable reason.
    Flagged(String),
}

/// Stable iff `mu` is not identically zero and the degree is in the open
/// range `g-1 < d <= 3g-3`; the boundary `d = g-1` is flagged with a note.
pub fn stability_flag(h: &HiggsData) -> StabilityFlag {
    let mu_nonzero = h.mu.sup() > ZERO_TOL;
    let g = h.genus as i64;
    if !mu_nonzero {
        return StabilityFlag::Flagged("mu identically zero: destabilizing subbundle".into());
    }
    if h.d == g - 1 {
        return StabilityFlag::Flagged(
            "boundary degree d = g-1: stable iff mu != 0 (context-dependent component)".into(),
        );
    }
    StabilityFlag::Stable
}

/// Graded-form view at one node: components `(1, nu, mu)` on the three
/// `g^_{-1}` roots `(-alpha1, -alpha2, mu)` plus `q2` on `alpha1`, all
/// tagged `(1,0)`.
pub fn to_graded_element_at(h: &HiggsData, i: usize, j: usize) -> GradedForm {
    let one = C64::new(1.0, 0.0);
    let mut w = GradedForm::zero();
    w.set_root(ALPHA1.neg(), one, TypeTag::OneZero);
    w.set_root(ALPHA2.neg(), h.nu.at(i, j), TypeTag::OneZero);
    w.set_root(MU, h.mu.at(i, j), TypeTag::OneZero);
    w.set_root(ALPHA1, h.q2.at(i, j), TypeTag::OneZero);
    w
}

/// Graded-form view of constant data (node `(0,0)` for grids).
pub fn to_graded_element(h: &HiggsData) -> GradedForm {
    to_graded_element_at(h, 0, 0)
}

/// Fiberwise cyclic frame at one node (drops the `q2` component).
pub fn frame_at(h: &HiggsData, i: usize, j: usize) -> CyclicFrame {
    CyclicFrame::new(C64::new(1.0, 0.0), h.nu.at(i, j), h.mu.at(i, j))
}

/// Gauge normal form: if `mu` is not identically zero, pick `lam` so the
/// `mu` value of largest modulus becomes `1` (positive real, unit
/// sup-norm); the residual ambiguity `lam -> -lam` acts trivially.
/// Idempotent. Data with `mu = 0` is returned unchanged.
pub fn normalize(h: &HiggsData) -> Result<HiggsData> {
    if h.mu.sup() <= ZERO_TOL {
        return Ok(h.clone());
    }
    // Deterministic pick: first node (row-major) attaining the max modulus.
    let n = h.resolution().unwrap_or(1);
    let mut best = h.mu.at(0, 0);
    for j in 0..n {
        for i in 0..n {
            let v = h.mu.at(i, j);
            if v.norm() > best.norm() + 0.0 {
                best = v;
            }
        }
    }
    // lam^2 = conj(mu0)/|mu0|^2 sends mu0 to 1; apply via gauge_action with
    // a square root (sign irrelevant).
    let l2 = best.conj() / best.norm_sqr();
    let lam = l2.sqrt();
    gauge_action(lam, h)
}

// ---------------------------------------------------------------------------
