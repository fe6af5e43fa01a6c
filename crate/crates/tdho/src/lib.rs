//! Simulation library for the generalized time-dependent harmonic oscillator
//! `H(t) = omega(t) K . n^g(t)` in its SO(2,1) vector representation.
//!
//! The dynamics of mean values, invariant vectors and second moments all
//! reduce to one linear flow on a three-dimensional Minkowski space: a
//! 3x3 metric-preserving matrix `E(t)` together with its 2x2 quadrature
//! companion `E_q(t)`. On top of that flow the crate decides whether
//! normalizable cyclic solutions exist in a window `[0, tau]`, and computes
//! total, dynamical and geometric phases together with the classical
//! Hannay angle.
//!
//! Module map:
//! - [`so21`] — metric algebra, hyperboloid parameterization, finite
//!   representations of the one-parameter flows.
//! - [`model`] — Hamiltonian profiles: the four analytic families and
//!   tabulated data.
//! - [`propagate`] — RK4 integration of the invariant-vector equation and
//!   phase accumulation.
//! - [`cyclic`] — existence/type of cyclic solutions from the monodromy
//!   matrices, and the geometric-phase formulas.
//! - [`oracles`] — closed-form evolution matrices for the analytic
//!   families, used as ground truth in tests and `verify`.
//! - [`wavepacket`] — moment-level states: means, widths, the classical
//!   action ellipse.
//! - [`cli`] — command-line front end.

pub mod cli;
pub mod cyclic;
pub mod model;
pub mod oracles;
pub mod propagate;
pub mod so21;
pub mod wavepacket;

pub use cyclic::{CyclicVerdict, CyclicVerdictKind, FixedVectorResult};
pub use model::{Family, FamilySpec, Nature, Profile, RegimeKind, RegimeLabel};
pub use propagate::{IntegrateOptions, PhaseReport, Trajectory};
pub use so21::{HVec3, HyperParam, QuadMatrix, SO21Matrix};
pub use wavepacket::{EllipseCoeffs, MomentState};

#[cfg(test)]
mod concurrency_checks {
    // Everything shared across threads is immutable after construction;
    // these assert the auto traits stay that way.
    fn is_send_sync<T: Send + Sync>() {}

    #[test]
    fn shared_types_are_send_sync() {
        is_send_sync::<crate::Profile>();
        is_send_sync::<crate::FamilySpec>();
        is_send_sync::<crate::Trajectory>();
        is_send_sync::<crate::MomentState>();
        is_send_sync::<crate::CyclicVerdict>();
        is_send_sync::<crate::RegimeLabel>();
    }
}
