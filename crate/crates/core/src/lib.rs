//! Finite-truncation numerics for entangled-state constructions.
//!
//! The crate realizes, at finite matrix size, the standard toolbox around
//! maximally entangled and infinitely entangled states:
//!
//! * [`op`] — dense complex operators with tensor structure (partial trace,
//!   partial transpose, spectral calculus for normal operators),
//! * [`bipartite`] — Schmidt decompositions, entanglement entropy, maximally
//!   entangled fidelity and the separable/PPT fidelity ceiling `1/d`,
//! * [`modular`] — Tomita–Takesaki data (S, J, Δ) of a bipartite vector,
//!   modular flow and operator doubles `B = J A† J`,
//! * [`bell`] — CHSH correlation `β` and its see-saw maximization,
//! * [`weyl`] — discrete Weyl (clock/shift) systems and the Weyl-sum fidelity,
//! * [`chain`] — an infinite chain of singlet pairs evaluated through
//!   eventually-constant local observables,
//! * [`nopa`] — the two-mode squeezed (NOPA) family: qudit extraction,
//!   permutation doubles, EPR covariances, characteristic function,
//! * [`grid`] — position-space grids hosting exact finite Weyl pairs built
//!   from branch-cut roots of continuum Weyl operators.
//!
//! Everything is deterministic: randomized routines take explicit seeds, and
//! parallel code paths (feature `parallel`, on by default) collect results in
//! input order before reducing, so outputs do not depend on thread count.

pub mod bell;
pub mod bipartite;
pub mod chain;
pub mod error;
pub mod grid;
pub mod modular;
pub mod nopa;
pub mod op;
pub(crate) mod par;
pub mod sample;
pub mod weyl;

pub use error::{Error, Result};
pub use op::{Operator, Spectrum, C64};

/// Exact-identity checks (tensor bookkeeping, projector expansions).
pub const TOL_STRUCTURAL: f64 = 1e-12;
/// Spectral decompositions, Schmidt data, fidelity closed forms.
pub const TOL_SPECTRAL: f64 = 1e-10;
/// Modular operator identities S(A⊗1)Ω = (A†⊗1)Ω and friends.
pub const TOL_MODULAR: f64 = 1e-9;
/// Double-defect acceptance ω((A−B)†(A−B)) for matched pairs.
pub const TOL_DEFECT: f64 = 1e-8;
/// Centralizer membership ‖[A, ρ]‖.
pub const TOL_CENTRALIZER: f64 = 1e-9;
/// See-saw convergence to known optima.
pub const TOL_SEESAW: f64 = 1e-6;
/// Grid commutation residual on well-contained test states.
pub const TOL_GRID_COMMUTATION: f64 = 1e-3;
