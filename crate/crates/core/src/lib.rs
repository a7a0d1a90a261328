//! Computational machinery around maximal `Sp(4,R)` surface-group
//! representations seen through their Higgs bundles:
//!
//! * [`liealg`] — the Lie algebra `sp(4,C)`: root datum, Chevalley basis,
//!   brackets, Killing form, the involutions `theta`/`sigma`/`lambda`, a
//!   principal three-dimensional subalgebra, and the height and `Z/4`
//!   gradings, all cross-validated against the explicit 4x4 matrix model.
//! * [`cyclic`] — graded Lie-algebra-valued forms, the cyclic-surface
//!   conditions, the sign check, and the linear-algebraic rigidity system.
//! * [`higgs`] — the rank-4 normal form `(N + N^-1 K, beta, gamma)` of the
//!   exceptional maximal components, its `sl(4,C)` matrix realization,
//!   Hitchin-fibration invariants, Cayley partner, `C*` gauge action and the
//!   fourth-roots-of-unity fixed-point structure.
//! * [`solver`] — Hitchin's self-duality equations on a flat-torus desk
//!   model, in diagonal and full-Hermitian-metric modes, witnessing the
//!   diagonal metric splitting.
//! * [`harmonic`] — derived harmonic-map quantities: Hopf differential,
//!   energy, immersion check, and holonomy of the associated flat connection.
//! * [`moduli`] — Riemann-Roch dimension counts, the connected-component
//!   census, fiber models, and dimension identities.
//!
//! All numerical work is complex double precision; structure constants are
//! exact integers.

pub mod cyclic;
pub mod grid;
pub mod harmonic;
pub mod higgs;
pub mod liealg;
pub mod moduli;
pub mod solver;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// 4x4 complex matrix (the defining representation of `sp(4,C)`).
pub type M4 = nalgebra::Matrix4<C64>;

/// 2x2 complex matrix (blocks of the rank-4 model).
pub type M2 = nalgebra::Matrix2<C64>;
