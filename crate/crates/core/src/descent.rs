//! Steepest descent on St(n,p).
//!
//! Each iteration computes the embedded gradient `∂G(U_k)`, picks a full-rank
//! row set `I`, solves `ΩU_k = −λ∂G(U_k)` for `Ω ∈ W_I` and moves to
//! `U_{k+1} = C(Ω/2)U_k`.
//!
//! Two solvers are provided. The closed-form solver permutes the rows of `I`
//! to the top, `Ũ = [Ū; Ū̄]`, `∂̃G = [∂̄G; ∂̄̄G]`, and reads off
//!
//! ```text
//! Ω̄  = −λ (∂̄G + Ū⁻ᵀ ∂̄̄Gᵀ Ū̄) Ū⁻¹
//! Ω̄̄ =  λ Ū⁻ᵀ ∂̄̄Gᵀ
//! Ω̃  = [[Ω̄, Ω̄̄], [−Ω̄̄ᵀ, 0]],   U_{k+1} = Pᵀ C(Ω̃/2) Ũ.
//! ```
//!
//! The generic solver expands `Ω` over the `Λ_ij U` basis and solves the
//! resulting dense linear system; it serves as an independent check.

use nalgebra::{DMatrix, DVector};

use crate::embedded::{
    criticality_report_from, embedded_gradient_from, CostModel, CriticalityOptions,
    CriticalityReport,
};
use crate::manifold::{
    cayley_apply, membership_residual, rank_tolerance, smallest_singular_value,
    tangency_residual, tangent_basis, IndexSet, RowPermutation, SkewTangent, StiefelPoint,
};
use crate::{Result, StiefelError};

/// Step-length rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepStrategy {
    /// Constant `λ`.
    Fixed { step: f64 },
    /// Backtracking from `initial`, multiplying by `shrink` until
    /// `G(U_{k+1}) ≤ G(U_k) − slope·λ·‖∂G(U_k)‖²`.
    Armijo {
        initial: f64,
        shrink: f64,
        slope: f64,
        max_backtracks: usize,
    },
}

impl Default for StepStrategy {
    fn default() -> Self {
        StepStrategy::Armijo {
            initial: 1.0,
            shrink: 0.5,
            slope: 0.1,
            max_backtracks: 50,
        }
    }
}

impl StepStrategy {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(StiefelError::InvalidParameter(msg));
        match *self {
            StepStrategy::Fixed { step } if !(step > 0.0 && step.is_finite()) => {
                bad(format!("fixed step must be positive, got {step}"))
            }
            StepStrategy::Armijo { initial, .. } if !(initial > 0.0 && initial.is_finite()) => {
                bad(format!("initial step must be positive, got {initial}"))
            }
            StepStrategy::Armijo { shrink, .. } if !(shrink > 0.0 && shrink < 1.0) => {
                bad(format!("shrink factor must lie in (0, 1), got {shrink}"))
            }
            StepStrategy::Armijo { slope, .. } if !(slope > 0.0 && slope < 1.0) => {
                bad(format!("sufficient-decrease slope must lie in (0, 1), got {slope}"))
            }
            _ => Ok(()),
        }
    }
}

/// How `ΩU = V` is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    /// Dense solve over the `Λ_ij U` basis.
    Generic,
    /// Permutation plus block formulas.
    #[default]
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentConfig {
    pub step: StepStrategy,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub solver: SolverKind,
    /// Keep every iterate in the trace; otherwise only the final record.
    pub record_trace: bool,
    /// Keep the previous row set while its submatrix stays within a factor
    /// of two of a fresh selection's smallest singular value.
    pub reuse_rows: bool,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            step: StepStrategy::default(),
            grad_tol: 1e-10,
            max_iters: 300,
            solver: SolverKind::ClosedForm,
            record_trace: true,
            reuse_rows: false,
        }
    }
}

impl DescentConfig {
    pub fn validate(&self) -> Result<()> {
        self.step.validate()?;
        if self.max_iters == 0 {
            return Err(StiefelError::InvalidParameter(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(StiefelError::InvalidParameter(format!(
                "grad_tol must be nonnegative, got {}",
                self.grad_tol
            )));
        }
        Ok(())
    }
}

/// Blocks of the permuted solution `Ω̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaBlocks {
    /// `Ω̄`, `p×p`, skew.
    pub top: DMatrix<f64>,
    /// `Ω̄̄`, `p×(n−p)`.
    pub coupling: DMatrix<f64>,
    /// `‖Ω̄ + Ω̄ᵀ‖_F` before symmetrization.
    pub asymmetry: f64,
}

impl OmegaBlocks {
    /// `Ω̃ = [[Ω̄, Ω̄̄], [−Ω̄̄ᵀ, 0]]`.
    pub fn assemble(&self) -> DMatrix<f64> {
        let p = self.top.nrows();
        let n = p + self.coupling.ncols();
        let mut omega = DMatrix::zeros(n, n);
        omega.view_mut((0, 0), (p, p)).copy_from(&self.top);
        omega.view_mut((0, p), (p, n - p)).copy_from(&self.coupling);
        omega
            .view_mut((p, 0), (n - p, p))
            .copy_from(&(-self.coupling.transpose()));
        omega
    }
}

/// Solves `ΩU = V` for `Ω ∈ W_I` by expanding over the tangent basis.
pub fn solve_omega_generic(u: &DMatrix<f64>, v: &DMatrix<f64>, rows: &IndexSet) -> Result<SkewTangent> {
    if u.shape() != v.shape() {
        return Err(StiefelError::DimensionMismatch(format!(
            "point is {:?} but direction is {:?}",
            u.shape(),
            v.shape()
        )));
    }
    let residual = tangency_residual(u, v);
    if residual > 1e-8 * v.norm().max(1.0) {
        return Err(StiefelError::NotTangent { residual });
    }
    let basis = tangent_basis(u, rows)?;
    let dim = basis.len();
    let len = u.len();
    let mut system = DMatrix::zeros(len, dim);
    for (k, b) in basis.iter().enumerate() {
        system.column_mut(k).copy_from_slice(b.as_slice());
    }
    let rhs = DVector::from_column_slice(v.as_slice());

    let singular = system.singular_values();
    if !(singular.min() > 1e-12 * singular.max().max(1.0)) {
        return Err(StiefelError::SingularSystem);
    }
    // Full column rank and a consistent right-hand side: the thin QR solve
    // is exact up to round-off.
    let qr = system.qr();
    let qtb = qr.q().tr_mul(&rhs);
    let coords = qr
        .r()
        .solve_upper_triangular(&qtb)
        .ok_or(StiefelError::SingularSystem)?;
    SkewTangent::new(rows.clone(), coords.iter().copied().collect())
}

/// Closed-form blocks of `Ω̃` solving `Ω̃Ũ = −λ∂̃G` for a row-permuted point
/// whose top `p×p` block is invertible.
pub fn solve_omega_closed_form(
    u_perm: &DMatrix<f64>,
    grad_perm: &DMatrix<f64>,
    lambda: f64,
) -> Result<OmegaBlocks> {
    if u_perm.shape() != grad_perm.shape() {
        return Err(StiefelError::DimensionMismatch(format!(
            "point is {:?} but gradient is {:?}",
            u_perm.shape(),
            grad_perm.shape()
        )));
    }
    let (n, p) = u_perm.shape();
    let u_top = u_perm.rows(0, p).into_owned();
    let u_bot = u_perm.rows(p, n - p).into_owned();
    let g_top = grad_perm.rows(0, p).into_owned();
    let g_bot = grad_perm.rows(p, n - p).into_owned();

    if smallest_singular_value(&u_top) <= rank_tolerance(p) {
        return Err(StiefelError::SingularSystem);
    }
    let lu_t = u_top.transpose().lu();

    // Ū⁻ᵀ ∂̄̄Gᵀ
    let x = lu_t
        .solve(&g_bot.transpose())
        .ok_or(StiefelError::SingularSystem)?;
    let inner = &g_top + &x * &u_bot;
    // (inner) Ū⁻¹ = (Ū⁻ᵀ innerᵀ)ᵀ
    let right = lu_t
        .solve(&inner.transpose())
        .ok_or(StiefelError::SingularSystem)?
        .transpose();
    let raw_top = right * (-lambda);

    let asymmetry = (&raw_top + raw_top.transpose()).norm();
    let scale = raw_top.norm().max(1.0);
    if asymmetry > 1e-8 * scale {
        log::warn!("Ω̄ asymmetry {asymmetry:.3e} (norm {scale:.3e}); input may not be tangent");
    } else {
        log::trace!("Ω̄ asymmetry {asymmetry:.3e}");
    }
    let top = (&raw_top - raw_top.transpose()) * 0.5;

    Ok(OmegaBlocks {
        top,
        coupling: x * lambda,
        asymmetry,
    })
}

/// How an iteration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    /// `‖∂G‖_F ≤ grad_tol`; the point is returned unchanged.
    Converged,
    Accepted,
    /// Backtracking exhausted; the point is returned unchanged.
    Stalled,
}

/// One row of the descent trace, describing iterate `U_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `U_k`, present when the run records a full trace.
    pub point: Option<DMatrix<f64>>,
    pub cost: f64,
    pub grad_norm: f64,
    /// Step accepted from `U_k`; `None` when no step was taken.
    pub lambda: Option<f64>,
    pub rows: IndexSet,
    pub membership_residual: f64,
    pub backtracks: usize,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub next: StiefelPoint,
    pub record: IterationRecord,
    pub status: StepStatus,
}

/// Precomputed search direction at `U`: `candidate(λ)` is the point reached
/// with step `λ`.
enum Direction<'a> {
    Permuted {
        perm: RowPermutation,
        u_perm: DMatrix<f64>,
        omega: DMatrix<f64>,
    },
    Plain {
        u: &'a DMatrix<f64>,
        omega: DMatrix<f64>,
    },
}

impl Direction<'_> {
    fn candidate(&self, lambda: f64) -> DMatrix<f64> {
        match self {
            Direction::Permuted {
                perm,
                u_perm,
                omega,
            } => perm.unpermute_rows(&cayley_apply(&(omega * (0.5 * lambda)), u_perm)),
            Direction::Plain { u, omega } => cayley_apply(&(omega * (0.5 * lambda)), u),
        }
    }
}

/// `Ω` (for unit step) with `ΩU = −∂G(U)`, expressed in the permuted frame
/// for the closed-form solver.
fn direction<'a>(
    u: &'a DMatrix<f64>,
    egrad: &DMatrix<f64>,
    rows: &IndexSet,
    solver: SolverKind,
) -> Result<Direction<'a>> {
    Ok(match solver {
        SolverKind::ClosedForm => {
            let perm = RowPermutation::for_rows(rows);
            let u_perm = perm.permute_rows(u);
            let g_perm = perm.permute_rows(egrad);
            let omega = solve_omega_closed_form(&u_perm, &g_perm, 1.0)?.assemble();
            Direction::Permuted {
                perm,
                u_perm,
                omega,
            }
        }
        SolverKind::Generic => {
            let omega = solve_omega_generic(u, &(-egrad), rows)?.to_matrix();
            Direction::Plain { u, omega }
        }
    })
}

/// One iteration from `u` using its cached row set.
pub fn descent_step<M: CostModel + ?Sized>(
    u: &StiefelPoint,
    model: &M,
    config: &DescentConfig,
) -> Result<StepResult> {
    config.validate()?;
    step_with_rows(u, u.rows(), model, config)
}

fn step_with_rows<M: CostModel + ?Sized>(
    u: &StiefelPoint,
    rows: &IndexSet,
    model: &M,
    config: &DescentConfig,
) -> Result<StepResult> {
    let um = u.matrix();
    let cost = model.value(um);
    let egrad = embedded_gradient_from(um, &model.gradient(um))?;
    let grad_norm = egrad.norm();
    let mut record = IterationRecord {
        k: 0,
        point: Some(um.clone()),
        cost,
        grad_norm,
        lambda: None,
        rows: rows.clone(),
        membership_residual: membership_residual(um),
        backtracks: 0,
    };
    if grad_norm <= config.grad_tol {
        return Ok(StepResult {
            next: u.clone(),
            record,
            status: StepStatus::Converged,
        });
    }

    let dir = direction(um, &egrad, rows, config.solver)?;
    match config.step {
        StepStrategy::Fixed { step } => {
            let next = StiefelPoint::from_orthonormal(dir.candidate(step))?;
            record.lambda = Some(step);
            Ok(StepResult {
                next,
                record,
                status: StepStatus::Accepted,
            })
        }
        StepStrategy::Armijo {
            initial,
            shrink,
            slope,
            max_backtracks,
        } => {
            let decrease = grad_norm * grad_norm;
            let mut lambda = initial;
            for attempt in 0..=max_backtracks {
                let candidate = dir.candidate(lambda);
                if model.value(&candidate) <= cost - slope * lambda * decrease {
                    record.lambda = Some(lambda);
                    record.backtracks = attempt;
                    return Ok(StepResult {
                        next: StiefelPoint::from_orthonormal(candidate)?,
                        record,
                        status: StepStatus::Accepted,
                    });
                }
                lambda *= shrink;
            }
            log::debug!(
                "backtracking exhausted after {max_backtracks} reductions at ‖∂G‖ = {grad_norm:.3e}"
            );
            record.backtracks = max_backtracks;
            Ok(StepResult {
                next: u.clone(),
                record,
                status: StepStatus::Stalled,
            })
        }
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    Stalled,
    MaxIters,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::Stalled => "stalled",
            Termination::MaxIters => "max_iters",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DescentTrace {
    pub records: Vec<IterationRecord>,
}

impl DescentTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn costs(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.cost)
    }

    /// Accepted steps violating `G(U_{k+1}) ≤ G(U_k) − slope·λ_k·‖∂G(U_k)‖²`.
    pub fn sufficient_decrease_violations(&self, slope: f64) -> usize {
        self.records
            .windows(2)
            .filter(|w| match w[0].lambda {
                Some(lambda) => {
                    let g2 = w[0].grad_norm * w[0].grad_norm;
                    !(w[1].cost <= w[0].cost - slope * lambda * g2)
                }
                None => false,
            })
            .count()
    }

    pub fn max_membership_residual(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.membership_residual)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct DescentOutcome {
    pub final_point: StiefelPoint,
    pub final_cost: f64,
    pub final_grad_norm: f64,
    /// Number of accepted steps.
    pub iterations: usize,
    pub termination: Termination,
    pub trace: DescentTrace,
    pub report: CriticalityReport,
}

impl DescentOutcome {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

fn rows_for_step(
    current: &StiefelPoint,
    previous: Option<&IndexSet>,
    config: &DescentConfig,
) -> IndexSet {
    if let (true, Some(prev)) = (config.reuse_rows, previous) {
        let fresh = smallest_singular_value(&current.rows().submatrix(current.matrix()));
        let kept = smallest_singular_value(&prev.submatrix(current.matrix()));
        if kept >= 0.5 * fresh && kept > rank_tolerance(prev.len()) {
            return prev.clone();
        }
    }
    current.rows().clone()
}

/// Iterates [`descent_step`] until `‖∂G‖_F ≤ grad_tol`, a stall, or
/// `max_iters` accepted steps.
pub fn run_descent<M: CostModel + ?Sized>(
    u0: &StiefelPoint,
    model: &M,
    config: &DescentConfig,
) -> Result<DescentOutcome> {
    config.validate()?;
    let (n, p) = model.dims();
    if (u0.n(), u0.p()) != (n, p) {
        return Err(StiefelError::DimensionMismatch(format!(
            "cost is defined on {n}x{p} matrices but the initial point is {}x{}",
            u0.n(),
            u0.p()
        )));
    }

    let mut current = u0.clone();
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut previous_rows: Option<IndexSet> = None;
    let mut termination = None;
    let mut accepted = 0;
    let push = |records: &mut Vec<IterationRecord>, rec: IterationRecord| {
        if !config.record_trace {
            records.clear();
        }
        records.push(rec);
    };

    for k in 0..config.max_iters {
        let rows = rows_for_step(&current, previous_rows.as_ref(), config);
        let step = match step_with_rows(&current, &rows, model, config) {
            Err(StiefelError::SingularSystem) if rows != *current.rows() => {
                step_with_rows(&current, &current.rows().clone(), model, config)?
            }
            other => other?,
        };
        let mut record = step.record;
        record.k = k;
        log::trace!(
            "k={k} cost={:.12e} |dG|={:.3e} lambda={:?} rows={}",
            record.cost,
            record.grad_norm,
            record.lambda,
            record.rows
        );
        previous_rows = Some(record.rows.clone());
        push(&mut records, record);
        match step.status {
            StepStatus::Converged => {
                termination = Some(Termination::Converged);
                break;
            }
            StepStatus::Stalled => {
                termination = Some(Termination::Stalled);
                break;
            }
            StepStatus::Accepted => {
                current = step.next;
                accepted += 1;
            }
        }
    }

    let um = current.matrix();
    let grad = model.gradient(um);
    let final_grad_norm = embedded_gradient_from(um, &grad)?.norm();
    let final_cost = model.value(um);
    let termination = match termination {
        Some(t) => t,
        None => {
            push(
                &mut records,
                IterationRecord {
                    k: config.max_iters,
                    point: Some(um.clone()),
                    cost: final_cost,
                    grad_norm: final_grad_norm,
                    lambda: None,
                    rows: current.rows().clone(),
                    membership_residual: membership_residual(um),
                    backtracks: 0,
                },
            );
            if final_grad_norm <= config.grad_tol {
                Termination::Converged
            } else {
                Termination::MaxIters
            }
        }
    };
    if !config.record_trace {
        for r in &mut records {
            r.point = None;
        }
    }
    let report = criticality_report_from(um, &grad, CriticalityOptions::default())?;

    Ok(DescentOutcome {
        final_cost,
        final_grad_norm,
        iterations: accepted,
        termination,
        trace: DescentTrace { records },
        report,
        final_point: current,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::BrockettProblem;
    use crate::embedded::embedded_gradient;
    use crate::manifold::lambda_times;
    use nalgebra::DVector;

    fn sphere() -> BrockettProblem {
        BrockettProblem::new(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0])), vec![1.0])
            .unwrap()
    }

    fn case_one() -> BrockettProblem {
        BrockettProblem::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0])),
            vec![1.0, 2.0],
        )
        .unwrap()
    }

    #[test]
    fn generic_solver_examples() {
        let u = DMatrix::identity(4, 2);
        let rows = IndexSet::leading(2, 4).unwrap();
        let zero = solve_omega_generic(&u, &DMatrix::zeros(4, 2), &rows).unwrap();
        assert!(zero.coords().iter().all(|w| w.abs() < 1e-15));

        let v = lambda_times(0, 1, &u);
        let sol = solve_omega_generic(&u, &v, &rows).unwrap();
        assert!((sol.coords()[0] - 1.0).abs() < 1e-14);
        assert!(sol.coords()[1..].iter().all(|w| w.abs() < 1e-14));
    }

    #[test]
    fn generic_solver_rejects_normal_direction() {
        let u = DMatrix::identity(3, 2);
        let rows = IndexSet::leading(2, 3).unwrap();
        assert!(matches!(
            solve_omega_generic(&u, &u, &rows),
            Err(StiefelError::NotTangent { .. })
        ));
    }

    #[test]
    fn closed_form_zero_gradient() {
        let u = DMatrix::identity(4, 2);
        let blocks = solve_omega_closed_form(&u, &DMatrix::zeros(4, 2), 0.7).unwrap();
        assert_eq!(blocks.top, DMatrix::zeros(2, 2));
        assert_eq!(blocks.coupling, DMatrix::zeros(2, 2));
    }

    #[test]
    fn closed_form_square_case() {
        // p = n: no coupling block, Ω̄ = −λ ∂G Ū⁻¹ must already be skew.
        let (s, c) = 0.3f64.sin_cos();
        let u = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let v = lambda_times(0, 1, &u) * 0.4;
        let lambda = 2.0;
        let grad = &v * (-1.0 / lambda);
        let blocks = solve_omega_closed_form(&u, &grad, lambda).unwrap();
        assert_eq!(blocks.coupling.shape(), (2, 0));
        assert!(blocks.asymmetry < 1e-14);
        assert!((blocks.assemble() * &u - &v).norm() < 1e-14);
    }

    #[test]
    fn closed_form_rejects_singular_top() {
        let mut u = DMatrix::zeros(3, 2);
        u[(0, 0)] = 1.0;
        u[(2, 1)] = 1.0;
        assert!(matches!(
            solve_omega_closed_form(&u, &DMatrix::zeros(3, 2), 1.0),
            Err(StiefelError::SingularSystem)
        ));
    }

    #[test]
    fn step_at_critical_point_is_identity() {
        let prob = case_one();
        let u = StiefelPoint::new(DMatrix::from_row_slice(
            4,
            2,
            &[0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        ))
        .unwrap();
        let step = descent_step(&u, &prob, &DescentConfig::default()).unwrap();
        assert_eq!(step.status, StepStatus::Converged);
        assert_eq!(step.next, u);
        assert_eq!(step.record.lambda, None);
    }

    #[test]
    fn fixed_steps_on_the_circle() {
        // On St(2,1) the cost is 1 + sin²θ for u = (cos θ, sin θ).
        let prob = sphere();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut u = StiefelPoint::new(DMatrix::from_column_slice(2, 1, &[h, h])).unwrap();
        let config = DescentConfig {
            step: StepStrategy::Fixed { step: 0.1 },
            ..DescentConfig::default()
        };
        let mut last = prob.value(u.matrix());
        assert!((last - 1.5).abs() < 1e-15);
        for _ in 0..200 {
            u = descent_step(&u, &prob, &config).unwrap().next;
            let cost = prob.value(u.matrix());
            assert!(cost <= last);
            last = cost;
        }
        assert!((last - 1.0).abs() < 1e-12);
        assert!((u.matrix()[(0, 0)].abs() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn armijo_step_decreases_cost() {
        let prob = case_one();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = StiefelPoint::new(DMatrix::from_row_slice(
            4,
            2,
            &[0.0, h, -h, 0.0, 0.0, -h, -h, 0.0],
        ))
        .unwrap();
        let g0 = prob.value(u.matrix());
        let step = descent_step(&u, &prob, &DescentConfig::default()).unwrap();
        assert_eq!(step.status, StepStatus::Accepted);
        let g1 = prob.value(step.next.matrix());
        let lambda = step.record.lambda.unwrap();
        assert!(g1 <= g0 - 1e-4 * lambda * step.record.grad_norm.powi(2));
    }

    #[test]
    fn run_from_critical_point_stops_immediately() {
        let prob = case_one();
        let u = StiefelPoint::new(DMatrix::from_row_slice(
            4,
            2,
            &[0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        ))
        .unwrap();
        let out = run_descent(&u, &prob, &DescentConfig::default()).unwrap();
        assert_eq!(out.termination, Termination::Converged);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.trace.len(), 1);
        assert!(out.report.verdict);
    }

    #[test]
    fn trace_respects_iteration_cap() {
        let prob = case_one();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = StiefelPoint::new(DMatrix::from_row_slice(
            4,
            2,
            &[0.0, h, -h, 0.0, 0.0, -h, -h, 0.0],
        ))
        .unwrap();
        let config = DescentConfig {
            max_iters: 3,
            ..DescentConfig::default()
        };
        let out = run_descent(&u, &prob, &config).unwrap();
        assert_eq!(out.termination, Termination::MaxIters);
        assert_eq!(out.trace.len(), 4);
        assert_eq!(out.iterations, 3);

        let quiet = DescentConfig {
            record_trace: false,
            ..config
        };
        let out = run_descent(&u, &prob, &quiet).unwrap();
        assert_eq!(out.trace.len(), 1);
        assert!(out.trace.records[0].point.is_none());
    }

    #[test]
    fn config_validation() {
        let bad = [
            StepStrategy::Fixed { step: 0.0 },
            StepStrategy::Armijo {
                initial: 1.0,
                shrink: 1.0,
                slope: 1e-4,
                max_backtracks: 10,
            },
            StepStrategy::Armijo {
                initial: 1.0,
                shrink: 0.5,
                slope: 0.0,
                max_backtracks: 10,
            },
        ];
        for step in bad {
            let config = DescentConfig {
                step,
                ..DescentConfig::default()
            };
            assert!(config.validate().is_err());
        }
        let config = DescentConfig {
            max_iters: 0,
            ..DescentConfig::default()
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let prob = case_one();
        let u = StiefelPoint::canonical(3, 2).unwrap();
        assert!(run_descent(&u, &prob, &DescentConfig::default()).is_err());
    }

    #[test]
    fn reuse_rows_still_converges() {
        let prob = case_one();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = StiefelPoint::new(DMatrix::from_row_slice(
            4,
            2,
            &[0.0, h, -h, 0.0, 0.0, -h, -h, 0.0],
        ))
        .unwrap();
        let config = DescentConfig {
            reuse_rows: true,
            max_iters: 500,
            ..DescentConfig::default()
        };
        let out = run_descent(&u, &prob, &config).unwrap();
        assert!((out.final_cost - 4.0).abs() < 1e-10);
        assert!(embedded_gradient(out.final_point.matrix(), &prob).unwrap().norm() < 1e-6);
    }
}
