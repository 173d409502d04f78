//! Embedded gradient vector field and criticality certification.
//!
//! For a cost `G` defined on all of ℝⁿˣᵖ the Lagrange multiplier functions of
//! the orthogonality constraints assemble into the symmetric matrix
//!
//! ```text
//! Σ(U) = ½ (∇G(U)ᵀU + Uᵀ∇G(U))
//! ```
//!
//! and the embedded gradient `∂G(U) = ∇G(U) − UΣ(U)` is the Riemannian
//! gradient of `G` restricted to St(n,p) (induced metric). `U` is critical iff
//! `∂G(U) = 0`, equivalently iff
//!
//! 1. `Uᵀ∇G(U)` is symmetric,
//! 2. `∇G(U) = UUᵀ∇G(U)`,
//! 3. `UᵀU = I_p`.

use nalgebra::{DMatrix, DVector};

use crate::manifold::membership_residual;
use crate::{Result, StiefelError};

/// A smooth cost on ℝⁿˣᵖ whose restriction to St(n,p) is minimized.
///
/// Matrices are identified with ℝⁿᵖ by stacking columns, which is also
/// nalgebra's storage order.
pub trait CostModel: Send + Sync {
    fn name(&self) -> &str;

    /// `(n, p)`.
    fn dims(&self) -> (usize, usize);

    fn value(&self, u: &DMatrix<f64>) -> f64;

    /// Euclidean gradient `∇G(U)`, an `n×p` matrix.
    fn gradient(&self, u: &DMatrix<f64>) -> DMatrix<f64>;

    /// `G(u)` for `u = vec(U)`.
    fn value_vec(&self, u: &DVector<f64>) -> f64 {
        let (n, p) = self.dims();
        self.value(&DMatrix::from_column_slice(n, p, u.as_slice()))
    }
}

impl<T: CostModel + ?Sized> CostModel for &T {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dims(&self) -> (usize, usize) {
        (**self).dims()
    }
    fn value(&self, u: &DMatrix<f64>) -> f64 {
        (**self).value(u)
    }
    fn gradient(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        (**self).gradient(u)
    }
}

impl<T: CostModel + ?Sized> CostModel for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dims(&self) -> (usize, usize) {
        (**self).dims()
    }
    fn value(&self, u: &DMatrix<f64>) -> f64 {
        (**self).value(u)
    }
    fn gradient(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        (**self).gradient(u)
    }
}

/// Symmetric `p×p` matrix of Lagrange multiplier functions.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaMatrix(pub DMatrix<f64>);

impl SigmaMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

fn ensure_same_shape(u: &DMatrix<f64>, grad: &DMatrix<f64>) -> Result<()> {
    if u.shape() != grad.shape() {
        return Err(StiefelError::DimensionMismatch(format!(
            "point is {:?} but gradient is {:?}",
            u.shape(),
            grad.shape()
        )));
    }
    Ok(())
}

/// `Σ(U) = ½(∇G(U)ᵀU + Uᵀ∇G(U))`.
///
/// Diagonal entries are `⟨∂G/∂u_a, u_a⟩`, off-diagonal entries are
/// `½(⟨∂G/∂u_c, u_b⟩ + ⟨∂G/∂u_b, u_c⟩)`.
pub fn sigma_matrix(u: &DMatrix<f64>, grad: &DMatrix<f64>) -> Result<SigmaMatrix> {
    ensure_same_shape(u, grad)?;
    let utg = u.tr_mul(grad);
    Ok(SigmaMatrix((&utg + utg.transpose()) * 0.5))
}

/// `∂G(U) = ∇G(U) − UΣ(U)` from a precomputed Euclidean gradient.
pub fn embedded_gradient_from(u: &DMatrix<f64>, grad: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sigma = sigma_matrix(u, grad)?;
    Ok(grad - u * sigma.0)
}

/// Embedded gradient of `model` at `u`.
pub fn embedded_gradient<M: CostModel + ?Sized>(u: &DMatrix<f64>, model: &M) -> Result<DMatrix<f64>> {
    embedded_gradient_from(u, &model.gradient(u))
}

/// `‖∇G(U)Uᵀ − U∇G(U)ᵀ‖_F`. Together with `UᵀU = I_p` its vanishing is
/// equivalent to criticality.
pub fn wen_residual(u: &DMatrix<f64>, grad: &DMatrix<f64>) -> Result<f64> {
    ensure_same_shape(u, grad)?;
    let gut = grad * u.transpose();
    Ok((&gut - gut.transpose()).norm())
}

/// `‖Uᵀ∇G − ∇GᵀU‖_F`.
pub fn symmetry_residual(u: &DMatrix<f64>, grad: &DMatrix<f64>) -> Result<f64> {
    ensure_same_shape(u, grad)?;
    let utg = u.tr_mul(grad);
    Ok((&utg - utg.transpose()).norm())
}

/// `‖(I − UUᵀ)∇G‖_F`.
pub fn span_residual(u: &DMatrix<f64>, grad: &DMatrix<f64>) -> Result<f64> {
    ensure_same_shape(u, grad)?;
    Ok((grad - u * u.tr_mul(grad)).norm())
}

/// Tolerances for [`criticality_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalityOptions {
    pub tol: f64,
    /// Divide the gradient-dependent residuals by `1 + ‖∇G‖_F`.
    pub scale_free: bool,
}

impl Default for CriticalityOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            scale_free: false,
        }
    }
}

impl CriticalityOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Residuals of the first-order conditions at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalityReport {
    pub symmetry_residual: f64,
    pub span_residual: f64,
    pub membership_residual: f64,
    pub embedded_norm: f64,
    pub wen_residual: f64,
    pub tol: f64,
    /// Symmetry, span and membership residuals are all within `tol`.
    pub verdict: bool,
}

impl CriticalityReport {
    /// Criticality judged by `‖∂G(U)‖_F ≤ tol` on a feasible point.
    pub fn embedded_verdict(&self) -> bool {
        self.embedded_norm <= self.tol && self.membership_residual <= self.tol
    }

    /// Criticality judged by the `∇G Uᵀ − U∇Gᵀ = 0` condition on a feasible point.
    pub fn wen_verdict(&self) -> bool {
        self.wen_residual <= self.tol && self.membership_residual <= self.tol
    }
}

/// Evaluates all first-order conditions from a precomputed gradient.
pub fn criticality_report_from(
    u: &DMatrix<f64>,
    grad: &DMatrix<f64>,
    options: CriticalityOptions,
) -> Result<CriticalityReport> {
    if u.ncols() > u.nrows() {
        return Err(StiefelError::DimensionMismatch(format!(
            "p = {} exceeds n = {}",
            u.ncols(),
            u.nrows()
        )));
    }
    let scale = if options.scale_free {
        1.0 + grad.norm()
    } else {
        1.0
    };
    let symmetry_residual = symmetry_residual(u, grad)? / scale;
    let span_residual = span_residual(u, grad)? / scale;
    let embedded_norm = embedded_gradient_from(u, grad)?.norm() / scale;
    let wen_residual = wen_residual(u, grad)? / scale;
    let membership_residual = membership_residual(u);
    let tol = options.tol;
    Ok(CriticalityReport {
        symmetry_residual,
        span_residual,
        membership_residual,
        embedded_norm,
        wen_residual,
        tol,
        verdict: symmetry_residual <= tol && span_residual <= tol && membership_residual <= tol,
    })
}

/// Criticality report for `model` at `u`.
pub fn criticality_report<M: CostModel + ?Sized>(
    u: &DMatrix<f64>,
    model: &M,
    options: CriticalityOptions,
) -> Result<CriticalityReport> {
    criticality_report_from(u, &model.gradient(u), options)
}

/// Whether `⟨∂G/∂u_c, u_b⟩` and `⟨∂G/∂u_b, u_c⟩` differ by more than `1e-12`
/// for some pair `b ≠ c`. At critical points they coincide.
pub fn check_symmetry_caveat(u: &DMatrix<f64>, grad: &DMatrix<f64>) -> Result<bool> {
    ensure_same_shape(u, grad)?;
    let p = u.ncols();
    if p < 2 {
        return Err(StiefelError::InvalidParameter(
            "the pairwise condition needs at least two columns".into(),
        ));
    }
    let utg = u.tr_mul(grad);
    for b in 0..p {
        for c in b + 1..p {
            // utg[(b, c)] = ⟨u_b, grad_c⟩
            if (utg[(b, c)] - utg[(c, b)]).abs() > 1e-12 {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Central differences `(G(u + h e_i) − G(u − h e_i)) / 2h` for every
/// coordinate of `u = vec(U)`.
pub fn finite_difference_gradient<M: CostModel + ?Sized>(
    model: &M,
    u: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    if !(h > 0.0) {
        return Err(StiefelError::InvalidParameter(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let (n, p) = model.dims();
    if u.len() != n * p {
        return Err(StiefelError::DimensionMismatch(format!(
            "expected a vector of length {}, got {}",
            n * p,
            u.len()
        )));
    }
    let mut probe = u.clone();
    let mut out = DVector::zeros(u.len());
    for i in 0..u.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let plus = model.value_vec(&probe);
        probe[i] = orig - h;
        let minus = model.value_vec(&probe);
        probe[i] = orig;
        out[i] = (plus - minus) / (2.0 * h);
    }
    Ok(out)
}

/// Relative discrepancy between the analytic gradient and central
/// differences at `u`, with step `h = h_scale·(1 + ‖u‖)`.
///
/// The error is `‖g − g_fd‖ / max(‖g‖, ‖g_fd‖)`, or the absolute difference
/// when both gradients are below `1e-12`.
pub fn gradient_relative_error<M: CostModel + ?Sized>(
    model: &M,
    u: &DMatrix<f64>,
    h_scale: f64,
) -> Result<f64> {
    let vec_u = DVector::from_column_slice(u.as_slice());
    let h = h_scale * (1.0 + vec_u.norm());
    let numeric = finite_difference_gradient(model, &vec_u, h)?;
    let analytic = DVector::from_column_slice(model.gradient(u).as_slice());
    let diff = (&analytic - &numeric).norm();
    let scale = analytic.norm().max(numeric.norm());
    Ok(if scale < 1e-12 { diff } else { diff / scale })
}
