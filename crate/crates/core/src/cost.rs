//! Cost families on St(n,p) with analytic gradients and the specialized forms
//! of the first-order conditions.
//!
//! | family      | extension `G(U)`            | `∇G(U)`                 |
//! |-------------|-----------------------------|-------------------------|
//! | Procrustes  | `½‖AU − B‖²`                | `Aᵀ(AU − B)`            |
//! | Penrose     | `½‖AUC − B‖²`               | `Aᵀ(AUC − B)Cᵀ`         |
//! | HetQuad     | `Σ u_iᵀ A_i u_i`            | `[2A_1u_1, …, 2A_pu_p]` |
//! | Brockett    | `Σ μ_i u_iᵀ A u_i`          | `[2μ_1Au_1, …]`         |
//!
//! The quadratic-form families report the unscaled sum, so Brockett values on
//! the canonical frames are the plain weighted sums of diagonal entries of `A`.

use std::fmt;

use nalgebra::DMatrix;

use crate::embedded::CostModel;
use crate::{Result, StiefelError};

const SYMMETRY_TOL: f64 = 1e-12;

fn ensure_symmetric(name: &str, a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(StiefelError::DimensionMismatch(format!(
            "{name} must be square, got {:?}",
            a.shape()
        )));
    }
    let asymmetry = (a - a.transpose()).norm();
    if asymmetry > SYMMETRY_TOL * a.norm().max(1.0) {
        return Err(StiefelError::NotSymmetric {
            name: name.to_string(),
            asymmetry,
        });
    }
    Ok(())
}

fn shape_error(msg: String) -> StiefelError {
    StiefelError::DimensionMismatch(msg)
}

fn skew_part_norm(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).norm()
}

fn normal_part_norm(u: &DMatrix<f64>, g: &DMatrix<f64>) -> f64 {
    (g - u * u.tr_mul(g)).norm()
}

/// Residuals of a family-specific pair of criticality conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecializedReport {
    /// Norm of the skew part of the matrix required to be symmetric.
    pub symmetry_residual: f64,
    /// `‖(I − UUᵀ)·(gradient-like term)‖_F`.
    pub span_residual: f64,
    pub verdict: bool,
}

impl SpecializedReport {
    fn new(symmetry_residual: f64, span_residual: f64, tol: f64) -> Self {
        Self {
            symmetry_residual,
            span_residual,
            verdict: symmetry_residual <= tol && span_residual <= tol,
        }
    }
}

/// Minimize `½‖AU − B‖²` over St(n,p); `A` is `m×n`, `B` is `m×p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcrustesProblem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl ProcrustesProblem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != b.nrows() {
            return Err(shape_error(format!(
                "A has {} rows but B has {}",
                a.nrows(),
                b.nrows()
            )));
        }
        if b.ncols() > a.ncols() || b.ncols() == 0 {
            return Err(shape_error(format!(
                "need 1 <= p <= n, got p = {} and n = {}",
                b.ncols(),
                a.ncols()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// `BᵀAU` symmetric and `(I − UUᵀ)(AᵀAU − AᵀB) = 0`.
    pub fn critical_check(&self, u: &DMatrix<f64>, tol: f64) -> SpecializedReport {
        let btau = self.b.tr_mul(&(&self.a * u));
        SpecializedReport::new(
            skew_part_norm(&btau),
            normal_part_norm(u, &self.gradient(u)),
            tol,
        )
    }
}

impl CostModel for ProcrustesProblem {
    fn name(&self) -> &str {
        "procrustes"
    }

    fn dims(&self) -> (usize, usize) {
        (self.a.ncols(), self.b.ncols())
    }

    fn value(&self, u: &DMatrix<f64>) -> f64 {
        0.5 * (&self.a * u - &self.b).norm_squared()
    }

    fn gradient(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        self.a.tr_mul(&(&self.a * u - &self.b))
    }
}

/// Minimize `½‖AUC − B‖²`; `A` is `m×n`, `B` is `m×q`, `C` is `p×q`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenroseProblem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
}

impl PenroseProblem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != b.nrows() {
            return Err(shape_error(format!(
                "A has {} rows but B has {}",
                a.nrows(),
                b.nrows()
            )));
        }
        if c.ncols() != b.ncols() {
            return Err(shape_error(format!(
                "C has {} columns but B has {}",
                c.ncols(),
                b.ncols()
            )));
        }
        if c.nrows() > a.ncols() || c.nrows() == 0 {
            return Err(shape_error(format!(
                "need 1 <= p <= n, got p = {} and n = {}",
                c.nrows(),
                a.ncols()
            )));
        }
        Ok(Self { a, b, c })
    }

    fn residual(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a * u * &self.c - &self.b
    }

    /// `C(AUC − B)ᵀAU` symmetric and `(I − UUᵀ)Aᵀ(AUC − B)Cᵀ = 0`.
    pub fn critical_check(&self, u: &DMatrix<f64>, tol: f64) -> SpecializedReport {
        let m = &self.c * self.residual(u).transpose() * &self.a * u;
        SpecializedReport::new(skew_part_norm(&m), normal_part_norm(u, &self.gradient(u)), tol)
    }
}

impl CostModel for PenroseProblem {
    fn name(&self) -> &str {
        "penrose"
    }

    fn dims(&self) -> (usize, usize) {
        (self.a.ncols(), self.c.nrows())
    }

    fn value(&self, u: &DMatrix<f64>) -> f64 {
        0.5 * self.residual(u).norm_squared()
    }

    fn gradient(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        self.a.tr_mul(&self.residual(u)) * self.c.transpose()
    }
}

/// Minimize `Σ u_iᵀ A_i u_i` with symmetric `n×n` matrices `A_1, …, A_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct HetQuadProblem {
    mats: Vec<DMatrix<f64>>,
}

impl HetQuadProblem {
    pub fn new(mats: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = mats.first() else {
            return Err(StiefelError::InvalidParameter(
                "at least one quadratic form is required".into(),
            ));
        };
        let n = first.nrows();
        for (i, a) in mats.iter().enumerate() {
            let name = format!("A_{}", i + 1);
            ensure_symmetric(&name, a)?;
            if a.nrows() != n {
                return Err(shape_error(format!("{name} is {0}x{0}, expected {n}x{n}", a.nrows())));
            }
        }
        if mats.len() > n {
            return Err(shape_error(format!("p = {} exceeds n = {n}", mats.len())));
        }
        Ok(Self { mats })
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.mats
    }

    /// `A(U) = [A_1u_1, …, A_pu_p]`.
    pub fn applied(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(u.nrows(), u.ncols());
        for (i, a) in self.mats.iter().enumerate() {
            out.set_column(i, &(a * u.column(i)));
        }
        out
    }

    /// `UᵀA(U)` symmetric and `A(U) = UUᵀA(U)`.
    pub fn critical_check(&self, u: &DMatrix<f64>, tol: f64) -> SpecializedReport {
        let au = self.applied(u);
        SpecializedReport::new(skew_part_norm(&u.tr_mul(&au)), normal_part_norm(u, &au), tol)
    }
}

impl CostModel for HetQuadProblem {
    fn name(&self) -> &str {
        "hetquad"
    }

    fn dims(&self) -> (usize, usize) {
        (self.mats[0].nrows(), self.mats.len())
    }

    fn value(&self, u: &DMatrix<f64>) -> f64 {
        self.mats
            .iter()
            .enumerate()
            .map(|(i, a)| u.column(i).dot(&(a * u.column(i))))
            .sum()
    }

    fn gradient(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        self.applied(u) * 2.0
    }
}

/// Brockett cost `Σ μ_i u_iᵀ A u_i` with `A` symmetric and
/// `0 ≤ μ_1 ≤ … ≤ μ_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrockettProblem {
    a: DMatrix<f64>,
    mu: Vec<f64>,
}

impl BrockettProblem {
    pub fn new(a: DMatrix<f64>, mu: Vec<f64>) -> Result<Self> {
        ensure_symmetric("A", &a)?;
        if mu.is_empty() || mu.len() > a.nrows() {
            return Err(shape_error(format!(
                "need 1 <= p <= n, got p = {} and n = {}",
                mu.len(),
                a.nrows()
            )));
        }
        if mu.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(StiefelError::InvalidParameter(
                "weights must be nonnegative".into(),
            ));
        }
        if mu.windows(2).any(|w| w[0] > w[1]) {
            return Err(StiefelError::InvalidParameter(
                "weights must be nondecreasing".into(),
            ));
        }
        Ok(Self { a, mu })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn weights(&self) -> &[f64] {
        &self.mu
    }

    /// The same cost written as a heterogeneous quadratic with `A_i = μ_iA`.
    pub fn as_hetquad(&self) -> HetQuadProblem {
        HetQuadProblem {
            mats: self.mu.iter().map(|m| &self.a * *m).collect(),
        }
    }

    /// Distinct positive weights: the critical points are finitely many.
    pub fn weights_distinct_positive(&self) -> bool {
        self.mu[0] > 0.0 && self.mu.windows(2).all(|w| w[0] < w[1])
    }

    fn diagonal_entries(&self) -> Option<Vec<f64>> {
        let n = self.a.nrows();
        for r in 0..n {
            for c in 0..n {
                if r != c && self.a[(r, c)] != 0.0 {
                    return None;
                }
            }
        }
        Some((0..n).map(|i| self.a[(i, i)]).collect())
    }

    /// All critical points when `A` is diagonal with distinct entries and the
    /// weights are distinct and positive: every column is `±e_i`, with
    /// distinct `i`. Returns `2^p · n!/(n−p)!` points sorted by cost; ties
    /// keep lexicographic order over column indices, then sign patterns.
    pub fn enumerate_critical(&self) -> Result<Vec<CriticalPoint>> {
        let diag = self.diagonal_entries().ok_or_else(|| {
            StiefelError::InvalidParameter("critical-point enumeration needs a diagonal A".into())
        })?;
        let mut sorted = diag.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(StiefelError::InvalidParameter(
                "critical-point enumeration needs distinct diagonal entries".into(),
            ));
        }
        if !self.weights_distinct_positive() {
            return Err(StiefelError::InvalidParameter(
                "critical points form a continuum unless the weights are distinct and positive"
                    .into(),
            ));
        }

        let n = self.a.nrows();
        let p = self.mu.len();
        let mut points = Vec::new();
        for columns in ordered_selections(n, p) {
            for pattern in 0..(1usize << p) {
                let signs: Vec<f64> = (0..p)
                    .map(|a| if pattern & (1 << a) != 0 { -1.0 } else { 1.0 })
                    .collect();
                let mut point = DMatrix::zeros(n, p);
                for (a, (&i, &s)) in columns.iter().zip(&signs).enumerate() {
                    point[(i, a)] = s;
                }
                let cost = self.value(&point);
                points.push(CriticalPoint {
                    columns: columns.clone(),
                    signs,
                    point,
                    cost,
                });
            }
        }
        points.sort_by(|x, y| x.cost.total_cmp(&y.cost));
        Ok(points)
    }

    /// Closest enumerated critical point in Frobenius distance.
    pub fn nearest_critical(&self, u: &DMatrix<f64>) -> Result<(CriticalPoint, f64)> {
        self.enumerate_critical()?
            .into_iter()
            .map(|cp| {
                let d = (&cp.point - u).norm();
                (cp, d)
            })
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .ok_or_else(|| StiefelError::InvalidParameter("no critical points".into()))
    }

    /// Column blocks of equal weight, in order.
    pub fn weight_blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (i, m) in self.mu.iter().enumerate() {
            match blocks.last_mut() {
                Some(block) if self.mu[block[0]] == *m => block.push(i),
                _ => blocks.push(vec![i]),
            }
        }
        blocks
    }

    /// For positive weights with repeats: each block `U_l` of equal weight
    /// must span an `A`-invariant subspace, `‖(I − U_lU_lᵀ)AU_l‖_F ≤ tol`.
    ///
    /// Invariance of every block already forces the cross-block terms
    /// `u_bᵀAu_c` to vanish, so this is a full criticality test for feasible
    /// `U`.
    pub fn invariant_subspace_check(
        &self,
        u: &DMatrix<f64>,
        partition: &[Vec<usize>],
        tol: f64,
    ) -> Result<bool> {
        if partition != self.weight_blocks().as_slice() {
            return Err(StiefelError::InvalidParameter(format!(
                "partition {partition:?} does not match the equal-weight blocks {:?}",
                self.weight_blocks()
            )));
        }
        if self.mu[0] <= 0.0 {
            return Err(StiefelError::InvalidParameter(
                "invariant-subspace characterization needs positive weights".into(),
            ));
        }
        if u.shape() != (self.a.nrows(), self.mu.len()) {
            return Err(shape_error(format!(
                "expected a {}x{} point, got {:?}",
                self.a.nrows(),
                self.mu.len(),
                u.shape()
            )));
        }
        for block in partition {
            let ul = u.select_columns(block.iter());
            let aul = &self.a * &ul;
            if normal_part_norm(&ul, &aul) > tol {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl CostModel for BrockettProblem {
    fn name(&self) -> &str {
        "brockett"
    }

    fn dims(&self) -> (usize, usize) {
        (self.a.nrows(), self.mu.len())
    }

    fn value(&self, u: &DMatrix<f64>) -> f64 {
        self.mu
            .iter()
            .enumerate()
            .map(|(i, m)| m * u.column(i).dot(&(&self.a * u.column(i))))
            .sum()
    }

    fn gradient(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = &self.a * u;
        for (i, m) in self.mu.iter().enumerate() {
            g.column_mut(i).scale_mut(2.0 * m);
        }
        g
    }
}

/// Ordered selections of `p` distinct indices from `0..n`, lexicographic.
fn ordered_selections(n: usize, p: usize) -> Vec<Vec<usize>> {
    fn extend(n: usize, p: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == p {
            out.push(prefix.clone());
            return;
        }
        for i in 0..n {
            if !prefix.contains(&i) {
                prefix.push(i);
                extend(n, p, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(n, p, &mut Vec::with_capacity(p), &mut out);
    out
}

/// A signed coordinate frame `[±e_{i_1} | … | ±e_{i_p}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    /// 0-based row index of the nonzero entry in each column.
    pub columns: Vec<usize>,
    pub signs: Vec<f64>,
    pub point: DMatrix<f64>,
    pub cost: f64,
}

impl CriticalPoint {
    /// Same frame up to column signs.
    pub fn same_pattern(&self, other: &CriticalPoint) -> bool {
        self.columns == other.columns
    }

    /// Label with unsigned columns, e.g. `[e2|e1]`.
    pub fn pattern(&self) -> String {
        let cols: Vec<String> = self.columns.iter().map(|i| format!("e{}", i + 1)).collect();
        format!("[{}]", cols.join("|"))
    }
}

impl fmt::Display for CriticalPoint {
    /// `[-e2|e1]`, 1-based.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, (i, s)) in self.columns.iter().zip(&self.signs).enumerate() {
            if k > 0 {
                write!(f, "|")?;
            }
            let sign = if *s < 0.0 { "-" } else { "" };
            write!(f, "{sign}e{}", i + 1)?;
        }
        write!(f, "]")
    }
}
