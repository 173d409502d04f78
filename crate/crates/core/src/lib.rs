//! Riemannian steepest descent on the orthogonal Stiefel manifold
//! St(n,p) = { U ∈ ℝⁿˣᵖ : UᵀU = I_p }.
//!
//! Tangent vectors at `U` are written as `ΩU` with `Ω` skew-symmetric and
//! supported on the rows/columns of a full-rank row subset `I_p` of `U`.
//! The descent step solves `ΩU = −λ∂G(U)` for `Ω` (in closed form after a row
//! permutation, or by a dense basis solve) and moves along the Cayley
//! retraction `U ↦ C(Ω/2)U`.
//!
//! Modules:
//! - [`manifold`]: membership, row selection, skew coordinates, Cayley, retraction.
//! - [`embedded`]: the embedded gradient `∂G(U) = ∇G(U) − UΣ(U)` and criticality checks.
//! - [`cost`]: Procrustes, Penrose regression, heterogeneous quadratic and Brockett costs.
//! - [`descent`]: the descent loop, step-length rules and the two Ω solvers.

pub mod cost;
pub mod descent;
pub mod embedded;
mod error;
pub mod manifold;
pub mod random;

pub use error::{Result, StiefelError};

pub use cost::{BrockettProblem, CriticalPoint, HetQuadProblem, PenroseProblem, ProcrustesProblem};
pub use descent::{
    descent_step, run_descent, DescentConfig, DescentOutcome, DescentTrace, IterationRecord,
    OmegaBlocks, SolverKind, StepStrategy, Termination,
};
pub use embedded::{criticality_report, embedded_gradient, CostModel, CriticalityOptions, CriticalityReport};
pub use manifold::{IndexSet, RowPermutation, SkewTangent, StiefelPoint};
