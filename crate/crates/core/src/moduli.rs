//! Closed-form bookkeeping of the moduli-space parameterization:
//! Riemann-Roch dimension counts, the connected-component census of the
//! maximal representation variety, fiber models of the exceptional
//! components, and dimension identities. Exact integer arithmetic.

use crate::{Error, Result};

/// Connected-component census at a given genus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentCensus {
    pub genus: i64,
    /// Inclusive Toledo-invariant range `[-(2g-2), 2g-2]`.
    pub toledo_range: (i64, i64),
    /// Total count of connected components of maximal representations.
    pub maximal_count: i64,
    /// Count of smooth components.
    pub smooth_count: i64,
    /// Components with nonzero first Stiefel-Whitney class.
    pub w1_nonzero_count: i64,
    /// Hitchin components (one per spin structure square).
    pub hitchin_count: i64,
    /// Degree range `(g-1, 3g-3)` (open at the left, closed interior use)
    /// indexing the exceptional smooth components.
    pub gothen_degrees: (i64, i64),
}

/// `h^0(N^-2 K^3)` is degree-determined only in part of the range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ADim {
    Count(i64),
    /// For `2g-2 <= d <= 3g-3` the count depends on the line bundle, not
    /// just its degree.
    NDependent,
}

/// Riemann-Roch section counts `(a, b) = (h^0(N^-2 K^3), h^0(N^2 K))` for a
/// degree-`d` line bundle at genus `g`.
///
/// `b = 2d + g - 1` always; `a = -2d + 5g - 5` when `g-1 < d < 2g-2`, and
/// is flagged degree-undetermined for `2g-2 <= d <= 3g-3`. Degrees outside
/// `[g-1, 3g-3]` are rejected.
pub fn rr_dims(g: i64, d: i64) -> Result<(ADim, i64)> {
    if g < 2 {
        return Err(Error::InvalidInput(format!("genus must be >= 2, got {g}")));
    }
    if d < g - 1 || d > 3 * g - 3 {
        return Err(Error::InvalidInput(format!(
            "degree {d} outside [{}, {}] at genus {g}",
            g - 1,
            3 * g - 3
        )));
    }
    let b = 2 * d + g - 1;
    let a = if d < 2 * g - 2 { ADim::Count(-2 * d + 5 * g - 5) } else { ADim::NDependent };
    Ok((a, b))
}

/// Component census of the maximal representation variety at genus `g`.
pub fn component_census(g: i64) -> Result<ComponentCensus> {
    if g < 2 {
        return Err(Error::InvalidInput(format!("genus must be >= 2, got {g}")));
    }
    let two_2g = 1i64
        .checked_shl((2 * g) as u32)
        .ok_or_else(|| Error::InvalidInput("genus too large for exact census".into()))?;
    Ok(ComponentCensus {
        genus: g,
        toledo_range: (-(2 * g - 2), 2 * g - 2),
        maximal_count: 3 * two_2g + 2 * g - 4,
        smooth_count: two_2g + 2 * g - 3,
        w1_nonzero_count: 2 * two_2g - 2,
        hitchin_count: two_2g,
        gothen_degrees: (g - 1, 3 * g - 3),
    })
}

/// Fiber model of the degree-`d` component over its line-bundle base.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberModel {
    pub a: i64,
    pub b: i64,
    /// `projective-bundle O_{P^{a-1}}(1)^{+b}` or `affine C^b`.
    pub description: String,
    pub dimension: i64,
}

/// Build the fiber model from the section counts: a projective bundle of
/// dimension `a + b - 1` when `a > 1`, the affine space `C^b` when `a = 1`.
pub fn fiber_model(a: i64, b: i64) -> Result<FiberModel> {
    if a < 1 {
        return Err(Error::InvalidInput(format!("fiber model needs a >= 1, got {a}")));
    }
    if b < 0 {
        return Err(Error::InvalidInput(format!("fiber model needs b >= 0, got {b}")));
    }
    Ok(if a > 1 {
        FiberModel {
            a,
            b,
            description: format!("projective-bundle O_{{P^{}}}(1)^(+{b})", a - 1),
            dimension: a + b - 1,
        }
    } else {
        FiberModel { a, b, description: format!("affine C^{b}"), dimension: b }
    })
}

/// Verify the component-dimension identity
/// `g + (a + b - 1) + (3g - 3) = 10g - 10` in the degree range where `a` is
/// degree-determined (`g-1 < d < 2g-2`).
pub fn dimension_check(g: i64, d: i64) -> Result<bool> {
    if !(d > g - 1 && d < 2 * g - 2) {
        return Err(Error::Precondition(format!(
            "dimension check covers g-1 < d < 2g-2 only; got (g, d) = ({g}, {d})"
        )));
    }
    let (a, b) = rr_dims(g, d)?;
    let ADim::Count(a) = a else {
        return Err(Error::Inconsistent("a should be degree-determined in range".into()));
    };
    let fiber = fiber_model(a, b)?;
    // The Picard base contributes g, quadratic differentials 3g - 3; the
    // fiber dimension equals a + b - 1 in this range (also when a = 1).
    Ok(fiber.dimension == a + b - 1 && g + fiber.dimension + (3 * g - 3) == 10 * g - 10)
}

// ---------------------------------------------------------------------------
