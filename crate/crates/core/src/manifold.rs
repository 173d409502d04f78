//! # Stiefel manifold primitives
//!
//! Points are `n×p` matrices with orthonormal columns. Around a point `U` we
//! use the chart
//!
//! ```text
//! φ_U : W_I → St(n,p),   φ_U(Ω) = C(Ω) U,   C(Ω) = (I + Ω)(I − Ω)⁻¹
//! ```
//!
//! where `I` is a set of `p` rows of `U` forming an invertible submatrix and
//! `W_I` holds the skew matrices whose `(i, j)` entry vanishes whenever both
//! `i ∉ I` and `j ∉ I`. The matrices `Λ_ij U` (with `Λ_ij = e_i e_jᵀ − e_j e_iᵀ`)
//! for `i < j` in `I`, and for `i ∈ I`, `j ∉ I`, form a basis of the tangent
//! space, which therefore has dimension `np − p(p+1)/2`.
//!
//! Indices are 0-based in code. `Display` impls print them 1-based.

use std::fmt;

use nalgebra::DMatrix;

use crate::{Result, StiefelError};

/// Default tolerance on `‖UᵀU − I_p‖_F` for membership.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// A row subset is accepted when `σ_min(Ū) > RANK_TOL_FACTOR · √p`.
pub const RANK_TOL_FACTOR: f64 = 1e-8;

/// Relative tolerance for accepting a matrix as skew-symmetric.
pub const SKEW_TOL: f64 = 1e-12;

/// Dimension of St(n,p): `np − p(p+1)/2`.
pub fn tangent_dimension(n: usize, p: usize) -> usize {
    n * p - p * (p + 1) / 2
}

/// `‖MᵀM − I_p‖_F`.
pub fn membership_residual(m: &DMatrix<f64>) -> f64 {
    let p = m.ncols();
    (m.tr_mul(m) - DMatrix::<f64>::identity(p, p)).norm()
}

/// Result of [`check_stiefel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipCheck {
    pub residual: f64,
    pub on_manifold: bool,
}

/// Checks `‖MᵀM − I_p‖_F ≤ tol`.
pub fn check_stiefel(m: &DMatrix<f64>, tol: f64) -> Result<MembershipCheck> {
    if m.ncols() > m.nrows() {
        return Err(StiefelError::DimensionMismatch(format!(
            "p = {} exceeds n = {}",
            m.ncols(),
            m.nrows()
        )));
    }
    if !(tol > 0.0) {
        return Err(StiefelError::InvalidParameter(format!(
            "membership tolerance must be positive, got {tol}"
        )));
    }
    let residual = membership_residual(m);
    Ok(MembershipCheck {
        residual,
        on_manifold: residual <= tol,
    })
}

/// A strictly increasing set of `p` row indices of an `n`-row matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexSet {
    indices: Vec<usize>,
    n: usize,
}

impl IndexSet {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(StiefelError::InvalidIndexSet("empty index set".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(StiefelError::InvalidIndexSet(format!(
                "indices must be strictly increasing: {indices:?}"
            )));
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(StiefelError::InvalidIndexSet(format!(
                    "index {last} out of range for n = {n}"
                )));
            }
        }
        Ok(Self { indices, n })
    }

    /// `{0, …, p−1}`.
    pub fn leading(p: usize, n: usize) -> Result<Self> {
        Self::new((0..p).collect(), n)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Ambient row count `n`.
    pub fn ambient(&self) -> usize {
        self.n
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Rows not in the set, increasing.
    pub fn complement(&self) -> Vec<usize> {
        (0..self.n).filter(|i| !self.contains(*i)).collect()
    }

    /// The `p×p` submatrix of `u` on these rows.
    pub fn submatrix(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        u.select_rows(self.indices.iter())
    }

    /// Ordered coordinate pairs `(i, j)` of `W_I`: first `i < j` with both in
    /// the set, then `i` in the set and `j` outside it.
    pub fn coordinate_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::with_capacity(tangent_dimension(self.n, self.len()));
        for (a, &i) in self.indices.iter().enumerate() {
            for &j in &self.indices[a + 1..] {
                pairs.push((i, j));
            }
        }
        let outside = self.complement();
        for &i in &self.indices {
            for &j in &outside {
                pairs.push((i, j));
            }
        }
        pairs
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

/// Smallest singular value of a square matrix.
pub(crate) fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    m.singular_values().min()
}

/// Rank threshold for a `p×p` block.
pub fn rank_tolerance(p: usize) -> f64 {
    RANK_TOL_FACTOR * (p as f64).sqrt()
}

/// Picks `p` rows of `u` forming a well-conditioned `p×p` submatrix.
///
/// Greedy row pivoting: at each step take the row with the largest norm after
/// projecting out the rows already chosen (modified Gram–Schmidt on rows).
/// Exact ties go to the smallest row index. The result is sorted.
pub fn select_full_rank_rows(u: &DMatrix<f64>) -> Result<IndexSet> {
    let (n, p) = u.shape();
    if p > n || p == 0 {
        return Err(StiefelError::DimensionMismatch(format!(
            "cannot select {p} rows from {n}"
        )));
    }
    let mut work = u.clone();
    let mut chosen = vec![false; n];
    let mut picked = Vec::with_capacity(p);

    for _ in 0..p {
        let mut best: Option<(usize, f64)> = None;
        for r in (0..n).filter(|r| !chosen[*r]) {
            let norm_sq = work.row(r).norm_squared();
            if best.is_none_or(|(_, b)| norm_sq > b) {
                best = Some((r, norm_sq));
            }
        }
        let (pivot, norm_sq) = best.expect("p <= n leaves a candidate row");
        if norm_sq == 0.0 {
            return Err(StiefelError::RankDeficient {
                smallest: 0.0,
                tol: rank_tolerance(p),
            });
        }
        chosen[pivot] = true;
        picked.push(pivot);

        let q = work.row(pivot) / norm_sq.sqrt();
        for r in (0..n).filter(|r| !chosen[*r]) {
            let coef = work.row(r).dot(&q);
            let mut row = work.row_mut(r);
            row -= &q * coef;
        }
    }

    picked.sort_unstable();
    let set = IndexSet::new(picked, n)?;
    let smallest = smallest_singular_value(&set.submatrix(u));
    let tol = rank_tolerance(p);
    if smallest <= tol {
        return Err(StiefelError::RankDeficient { smallest, tol });
    }
    Ok(set)
}

/// A point of St(n,p) together with its selected full-rank row set.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint {
    entries: DMatrix<f64>,
    rows: IndexSet,
}

impl StiefelPoint {
    /// Validates membership at [`MEMBERSHIP_TOL`] and selects rows.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(entries, MEMBERSHIP_TOL)
    }

    pub fn with_tolerance(entries: DMatrix<f64>, tol: f64) -> Result<Self> {
        let check = check_stiefel(&entries, tol)?;
        if !check.on_manifold {
            return Err(StiefelError::NotOnManifold {
                residual: check.residual,
                tol,
            });
        }
        Self::from_orthonormal(entries)
    }

    /// Skips the membership check; used for retraction outputs, which are
    /// feasible up to round-off.
    pub(crate) fn from_orthonormal(entries: DMatrix<f64>) -> Result<Self> {
        let rows = select_full_rank_rows(&entries)?;
        Ok(Self { entries, rows })
    }

    /// First `p` columns of the `n×n` identity.
    pub fn canonical(n: usize, p: usize) -> Result<Self> {
        if p > n || p == 0 {
            return Err(StiefelError::DimensionMismatch(format!(
                "St({n},{p}) is empty"
            )));
        }
        Self::new(DMatrix::identity(n, p))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn rows(&self) -> &IndexSet {
        &self.rows
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn p(&self) -> usize {
        self.entries.ncols()
    }

    pub fn membership_residual(&self) -> f64 {
        membership_residual(&self.entries)
    }
}

/// Coordinates of a skew matrix in `W_I`, ordered as [`IndexSet::coordinate_pairs`].
#[derive(Debug, Clone, PartialEq)]
pub struct SkewTangent {
    rows: IndexSet,
    coords: Vec<f64>,
}

impl SkewTangent {
    pub fn new(rows: IndexSet, coords: Vec<f64>) -> Result<Self> {
        let expected = tangent_dimension(rows.ambient(), rows.len());
        if coords.len() != expected {
            return Err(StiefelError::CoordinateCount {
                expected,
                got: coords.len(),
            });
        }
        Ok(Self { rows, coords })
    }

    pub fn zeros(rows: IndexSet) -> Self {
        let d = tangent_dimension(rows.ambient(), rows.len());
        Self {
            rows,
            coords: vec![0.0; d],
        }
    }

    /// Extracts coordinates from a skew matrix lying in `W_I`.
    pub fn from_matrix(omega: &DMatrix<f64>, rows: &IndexSet) -> Result<Self> {
        let n = rows.ambient();
        if omega.shape() != (n, n) {
            return Err(StiefelError::DimensionMismatch(format!(
                "expected {n}x{n} skew matrix, got {:?}",
                omega.shape()
            )));
        }
        ensure_skew(omega)?;
        let outside = rows.complement();
        let mut magnitude = 0.0_f64;
        for &i in &outside {
            for &j in &outside {
                magnitude = magnitude.max(omega[(i, j)].abs());
            }
        }
        if magnitude > 0.0 {
            return Err(StiefelError::OutsideSubspace { magnitude });
        }
        let coords = rows
            .coordinate_pairs()
            .into_iter()
            .map(|(i, j)| omega[(i, j)])
            .collect();
        Ok(Self {
            rows: rows.clone(),
            coords,
        })
    }

    pub fn rows(&self) -> &IndexSet {
        &self.rows
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Assembles `Ω = Σ ω_ij Λ_ij`.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.rows.ambient();
        let mut omega = DMatrix::zeros(n, n);
        for ((i, j), w) in self.rows.coordinate_pairs().into_iter().zip(&self.coords) {
            omega[(i, j)] = *w;
            omega[(j, i)] = -*w;
        }
        omega
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rows: self.rows.clone(),
            coords: self.coords.iter().map(|w| w * factor).collect(),
        }
    }
}

/// Assembles the skew matrix of `W_I` from coordinates.
pub fn assemble_skew(coords: &[f64], rows: &IndexSet) -> Result<DMatrix<f64>> {
    Ok(SkewTangent::new(rows.clone(), coords.to_vec())?.to_matrix())
}

/// `‖Ω + Ωᵀ‖_F`.
pub fn skew_defect(omega: &DMatrix<f64>) -> f64 {
    (omega + omega.transpose()).norm()
}

fn ensure_skew(omega: &DMatrix<f64>) -> Result<()> {
    if !omega.is_square() {
        return Err(StiefelError::DimensionMismatch(format!(
            "skew matrix must be square, got {:?}",
            omega.shape()
        )));
    }
    let asymmetry = skew_defect(omega);
    if asymmetry > SKEW_TOL * omega.norm().max(1.0) {
        return Err(StiefelError::NotSkew { asymmetry });
    }
    Ok(())
}

/// Solves `(I − Ω) X = (I + Ω) rhs`, i.e. `X = C(Ω) rhs`. `Ω` must be skew.
pub(crate) fn cayley_apply(omega: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    let n = omega.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let lhs = &id - omega;
    let b = rhs + omega * rhs;
    // I − Ω is invertible for real skew Ω: its eigenvalues are 1 − iθ.
    lhs.lu()
        .solve(&b)
        .expect("I - Ω is nonsingular for skew Ω")
}

/// Cayley transform `C(Ω) = (I + Ω)(I − Ω)⁻¹`, evaluated as a linear solve.
pub fn cayley(omega: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_skew(omega)?;
    let n = omega.nrows();
    Ok(cayley_apply(omega, &DMatrix::identity(n, n)))
}

/// Tangent basis `Λ_ij U` in the order of [`IndexSet::coordinate_pairs`].
pub fn tangent_basis(u: &DMatrix<f64>, rows: &IndexSet) -> Result<Vec<DMatrix<f64>>> {
    if rows.ambient() != u.nrows() || rows.len() != u.ncols() {
        return Err(StiefelError::DimensionMismatch(format!(
            "index set for St({},{}) applied to a {:?} matrix",
            rows.ambient(),
            rows.len(),
            u.shape()
        )));
    }
    Ok(rows
        .coordinate_pairs()
        .into_iter()
        .map(|(i, j)| lambda_times(i, j, u))
        .collect())
}

/// `Λ_ij U`: row `i` becomes `U_j`, row `j` becomes `−U_i`, others zero.
pub(crate) fn lambda_times(i: usize, j: usize, u: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(u.nrows(), u.ncols());
    out.row_mut(i).copy_from(&u.row(j));
    out.row_mut(j).copy_from(&(-u.row(i)));
    out
}

/// Chart retraction `R_U(ΩU) = C(Ω/2) U`.
///
/// Any skew `Ω` of matching size is accepted; it need not be expressed in the
/// row set cached on `u`.
pub fn retract(u: &StiefelPoint, omega: &SkewTangent) -> Result<StiefelPoint> {
    retract_matrix(u, &omega.to_matrix())
}

/// [`retract`] for an explicit skew matrix.
pub fn retract_matrix(u: &StiefelPoint, omega: &DMatrix<f64>) -> Result<StiefelPoint> {
    if omega.shape() != (u.n(), u.n()) {
        return Err(StiefelError::DimensionMismatch(format!(
            "expected {0}x{0} skew matrix, got {1:?}",
            u.n(),
            omega.shape()
        )));
    }
    ensure_skew(omega)?;
    if omega.iter().all(|w| *w == 0.0) {
        return Ok(u.clone());
    }
    let half = omega * 0.5;
    StiefelPoint::from_orthonormal(cayley_apply(&half, u.matrix()))
}

/// Row permutation `ν` with `ν(i_k) = k` on the selected rows; remaining rows
/// keep their relative order after them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowPermutation {
    /// `order[k] = ν⁻¹(k)`: the original row placed at position `k`.
    order: Vec<usize>,
    /// `forward[i] = ν(i)`.
    forward: Vec<usize>,
}

impl RowPermutation {
    pub fn for_rows(rows: &IndexSet) -> Self {
        let mut order = rows.indices().to_vec();
        order.extend(rows.complement());
        let mut forward = vec![0; order.len()];
        for (k, &i) in order.iter().enumerate() {
            forward[i] = k;
        }
        Self { order, forward }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `ν(i)`.
    pub fn nu(&self, i: usize) -> usize {
        self.forward[i]
    }

    pub fn is_identity(&self) -> bool {
        self.order.iter().enumerate().all(|(k, &i)| k == i)
    }

    /// `P_{ν⁻¹}`, whose `k`-th row is `e_{ν⁻¹(k)}ᵀ`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.order.len();
        let mut p = DMatrix::zeros(n, n);
        for (k, &i) in self.order.iter().enumerate() {
            p[(k, i)] = 1.0;
        }
        p
    }

    /// `P M`: stacks the selected rows on top.
    pub fn permute_rows(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        m.select_rows(self.order.iter())
    }

    /// `Pᵀ M`.
    pub fn unpermute_rows(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        m.select_rows(self.forward.iter())
    }

    /// `Pᵀ Ω̃ P`.
    pub fn unpermute_square(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.order.len();
        DMatrix::from_fn(n, n, |a, b| m[(self.forward[a], self.forward[b])])
    }
}

/// Permutation bringing `rows` to the top.
pub fn permutation_for(rows: &IndexSet) -> RowPermutation {
    RowPermutation::for_rows(rows)
}

/// `‖UᵀV + VᵀU‖_F`; zero exactly when `V` is tangent at `U`.
pub fn tangency_residual(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let utv = u.tr_mul(v);
    (&utv + utv.transpose()).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn cols(n: usize, picks: &[(usize, f64)]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, picks.len());
        for (c, &(r, s)) in picks.iter().enumerate() {
            m[(r, c)] = s;
        }
        m
    }

    fn run_one_start() -> DMatrix<f64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        DMatrix::from_row_slice(4, 2, &[0.0, h, -h, 0.0, 0.0, -h, -h, 0.0])
    }

    #[test]
    fn membership_examples() {
        let c = check_stiefel(&DMatrix::identity(4, 2), 1e-10).unwrap();
        assert_eq!(c.residual, 0.0);
        assert!(c.on_manifold);

        let swapped = cols(4, &[(1, 1.0), (0, 1.0)]);
        let c = check_stiefel(&swapped, 1e-10).unwrap();
        assert_eq!(c.residual, 0.0);
        assert!(c.on_manifold);

        let scaled = DMatrix::<f64>::identity(4, 2) * 2.0;
        let c = check_stiefel(&scaled, 1e-10).unwrap();
        assert_close(c.residual, 3.0 * 2f64.sqrt(), 1e-15);
        assert!(!c.on_manifold);
    }

    #[test]
    fn membership_rejects_wide_matrix() {
        let wide = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(
            check_stiefel(&wide, 1e-10),
            Err(StiefelError::DimensionMismatch(_))
        ));
        assert!(check_stiefel(&DMatrix::identity(3, 2), 0.0).is_err());
    }

    #[test]
    fn row_selection_examples() {
        let u = DMatrix::identity(4, 2);
        assert_eq!(select_full_rank_rows(&u).unwrap().indices(), &[0, 1]);

        let swapped = cols(4, &[(1, 1.0), (0, 1.0)]);
        let set = select_full_rank_rows(&swapped).unwrap();
        assert_eq!(set.indices(), &[0, 1]);
        assert_close(set.submatrix(&swapped).determinant(), -1.0, 1e-15);

        let u0 = run_one_start();
        let set = select_full_rank_rows(&u0).unwrap();
        assert_eq!(set.indices(), &[0, 1]);
        assert_close(set.submatrix(&u0).determinant().abs(), 0.5, 1e-15);
        assert_eq!(set.to_string(), "{1,2}");
    }

    #[test]
    fn row_selection_skips_zero_rows() {
        let u = cols(5, &[(3, -1.0), (1, 1.0)]);
        assert_eq!(select_full_rank_rows(&u).unwrap().indices(), &[1, 3]);
    }

    #[test]
    fn row_selection_rejects_rank_deficient_input() {
        let mut u = DMatrix::zeros(3, 2);
        u[(0, 0)] = 1.0;
        u[(1, 0)] = 1.0;
        assert!(matches!(
            select_full_rank_rows(&u),
            Err(StiefelError::RankDeficient { .. })
        ));
    }

    #[test]
    fn cayley_examples() {
        let id = cayley(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(id, DMatrix::identity(3, 3));

        let omega = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let q = cayley(&omega).unwrap();
        assert!((q - &omega).norm() < 1e-15);
    }

    #[test]
    fn cayley_rejects_non_skew() {
        let sym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(cayley(&sym), Err(StiefelError::NotSkew { .. })));
    }

    #[test]
    fn assemble_three_by_two() {
        let rows = IndexSet::new(vec![0, 1], 3).unwrap();
        assert_eq!(rows.coordinate_pairs(), vec![(0, 1), (0, 2), (1, 2)]);
        let (a, b, c) = (0.3, -1.2, 2.5);
        let omega = assemble_skew(&[a, b, c], &rows).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, a, b, -a, 0.0, c, -b, -c, 0.0]);
        assert_eq!(omega, expected);
        assert_eq!(assemble_skew(&[0.0; 3], &rows).unwrap(), DMatrix::zeros(3, 3));
    }

    #[test]
    fn assemble_sphere_case_middle_row() {
        let rows = IndexSet::new(vec![1], 3).unwrap();
        assert_eq!(rows.coordinate_pairs(), vec![(1, 0), (1, 2)]);
        let omega = assemble_skew(&[2.0, 3.0], &rows).unwrap();
        assert_eq!(omega[(1, 0)], 2.0);
        assert_eq!(omega[(0, 1)], -2.0);
        assert_eq!(omega[(1, 2)], 3.0);
        assert_eq!(omega[(0, 2)], 0.0);
    }

    #[test]
    fn assemble_rejects_wrong_count() {
        let rows = IndexSet::new(vec![0, 1], 3).unwrap();
        assert_eq!(
            assemble_skew(&[1.0, 2.0], &rows).unwrap_err(),
            StiefelError::CoordinateCount {
                expected: 3,
                got: 2
            }
        );
    }

    #[test]
    fn extraction_rejects_outside_block() {
        let rows = IndexSet::new(vec![0], 3).unwrap();
        let mut omega = DMatrix::zeros(3, 3);
        omega[(1, 2)] = 1.0;
        omega[(2, 1)] = -1.0;
        assert!(matches!(
            SkewTangent::from_matrix(&omega, &rows),
            Err(StiefelError::OutsideSubspace { .. })
        ));
    }

    #[test]
    fn tangent_basis_examples() {
        let u = DMatrix::identity(3, 2);
        let rows = IndexSet::new(vec![0, 1], 3).unwrap();
        let basis = tangent_basis(&u, &rows).unwrap();
        assert_eq!(basis.len(), 3);
        assert_eq!(basis[0], DMatrix::from_row_slice(3, 2, &[0.0, 1.0, -1.0, 0.0, 0.0, 0.0]));
        assert_eq!(basis[1], DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 0.0, 0.0, -1.0, 0.0]));

        let gram = DMatrix::from_fn(3, 3, |a, b| basis[a].dot(&basis[b]));
        assert_eq!(gram.rank(1e-12), 3);
    }

    #[test]
    fn retraction_examples() {
        let u = StiefelPoint::new(DMatrix::identity(2, 1)).unwrap();
        let rows = u.rows().clone();
        let zero = SkewTangent::zeros(rows.clone());
        assert_eq!(retract(&u, &zero).unwrap(), u);

        let theta: f64 = 0.7;
        let omega = SkewTangent::new(rows, vec![-theta]).unwrap();
        // coordinate (0,1) = −θ gives Ω[1,0] = θ
        assert_eq!(omega.to_matrix()[(1, 0)], theta);
        let moved = retract(&u, &omega).unwrap();
        let d = 1.0 + theta * theta / 4.0;
        assert_close(moved.matrix()[(0, 0)], (1.0 - theta * theta / 4.0) / d, 1e-15);
        assert_close(moved.matrix()[(1, 0)], theta / d, 1e-15);
    }

    #[test]
    fn retraction_is_first_order() {
        let u = StiefelPoint::new(run_one_start()).unwrap();
        let omega = SkewTangent::new(u.rows().clone(), vec![0.4, -0.3, 0.9, 0.2, -0.5]).unwrap();
        let t = 1e-4;
        let moved = retract(&u, &omega.scaled(t)).unwrap();
        let linear = u.matrix() + omega.to_matrix() * u.matrix() * t;
        assert!((moved.matrix() - linear).norm() / t < 1e-3);
    }

    #[test]
    fn permutation_examples() {
        let rows = IndexSet::leading(2, 4).unwrap();
        assert!(permutation_for(&rows).is_identity());

        let rows = IndexSet::new(vec![1, 3], 4).unwrap();
        let perm = permutation_for(&rows);
        assert_eq!(perm.nu(1), 0);
        assert_eq!(perm.nu(3), 1);
        assert_eq!(perm.nu(0), 2);
        assert_eq!(perm.nu(2), 3);
        let p = perm.matrix();
        assert_eq!(p.tr_mul(&p), DMatrix::identity(4, 4));

        let m = DMatrix::from_fn(4, 2, |r, c| (10 * r + c) as f64);
        assert_eq!(perm.permute_rows(&m), &p * &m);
        assert_eq!(perm.unpermute_rows(&perm.permute_rows(&m)), m);

        let sq = DMatrix::from_fn(4, 4, |r, c| (4 * r + c) as f64);
        assert_eq!(perm.unpermute_square(&sq), p.transpose() * &sq * &p);
    }

    #[test]
    fn tangency_examples() {
        let u = run_one_start();
        let v = lambda_times(0, 1, &u);
        assert!(tangency_residual(&u, &v) < 1e-15);
        assert_close(tangency_residual(&u, &u), 2.0 * 2f64.sqrt(), 1e-14);
    }

    #[test]
    fn index_set_validation() {
        assert!(IndexSet::new(vec![1, 1], 3).is_err());
        assert!(IndexSet::new(vec![2, 1], 3).is_err());
        assert!(IndexSet::new(vec![0, 3], 3).is_err());
        assert!(IndexSet::new(vec![], 3).is_err());
    }
}
