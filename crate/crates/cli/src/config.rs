//! Experiment configuration files (TOML).
//!
//! ```toml
//! [problem]
//! kind = "brockett"          # procrustes | penrose | hetquad | brockett
//! a_diag = [1.0, 2.0, 3.0, 4.0]
//! mu = [1.0, 2.0]
//!
//! [initial_point]
//! rows = [[0.0, 0.7071067811865476], [-0.7071067811865476, 0.0],
//!         [0.0, -0.7071067811865476], [-0.7071067811865476, 0.0]]
//! # or: seed = 7
//!
//! [descent]
//! step = "armijo"            # or "fixed:0.05"
//! max_iters = 300
//! grad_tol = 1e-10
//! solver = "closed"          # or "generic"
//!
//! [output]
//! trace = "trace.csv"
//! report = "report.json"
//! ```
//!
//! Matrices are lists of rows. `procrustes` takes `a`, `b`; `penrose` takes
//! `a`, `b`, `c`; `hetquad` takes `matrices` (one symmetric `n×n` matrix per
//! column); `brockett` takes `a` or `a_diag`, and nondecreasing `mu`.

use std::path::PathBuf;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use stiefel::manifold::membership_residual;
use stiefel::random::random_stiefel;
use stiefel::{
    BrockettProblem, CostModel, DescentConfig, HetQuadProblem, PenroseProblem, ProcrustesProblem,
    SolverKind, StepStrategy, StiefelError, StiefelPoint,
};
use thiserror::Error;

/// Initial points within this residual are used as given.
pub const EXACT_TOL: f64 = 1e-12;
/// Initial points up to this residual are projected back onto the manifold.
pub const REPAIR_TOL: f64 = 1e-6;

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("could not parse config: {0}")]
    Syntax(String),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

fn field_error(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub initial_point: InitialPoint,
    #[serde(default)]
    pub descent: DescentSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemConfig {
    Procrustes {
        a: Rows,
        b: Rows,
    },
    Penrose {
        a: Rows,
        b: Rows,
        c: Rows,
    },
    Hetquad {
        matrices: Vec<Rows>,
    },
    Brockett {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<Rows>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a_diag: Option<Vec<f64>>,
        mu: Vec<f64>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialPoint {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Rows>,
    /// Seed for a random starting point when `rows` is absent (default 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Step rule as written in configs and on the command line:
/// `armijo` or `fixed:<λ>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Armijo,
    Fixed(f64),
}

impl FromStr for StepRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("armijo") {
            return Ok(StepRule::Armijo);
        }
        match s.split_once(':') {
            Some((kind, value)) if kind.eq_ignore_ascii_case("fixed") => {
                let lambda: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| format!("invalid fixed step length {value:?}"))?;
                if lambda > 0.0 && lambda.is_finite() {
                    Ok(StepRule::Fixed(lambda))
                } else {
                    Err(format!("fixed step length must be positive, got {lambda}"))
                }
            }
            _ => Err(format!("expected \"armijo\" or \"fixed:<step>\", got {s:?}")),
        }
    }
}

impl std::fmt::Display for StepRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepRule::Armijo => write!(f, "armijo"),
            StepRule::Fixed(lambda) => write!(f, "fixed:{lambda}"),
        }
    }
}

impl Serialize for StepRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StepRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverName {
    Closed,
    Generic,
}

impl From<SolverName> for SolverKind {
    fn from(s: SolverName) -> Self {
        match s {
            SolverName::Closed => SolverKind::ClosedForm,
            SolverName::Generic => SolverKind::Generic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DescentSection {
    pub step: StepRule,
    /// First trial step for backtracking.
    pub initial_step: f64,
    pub shrink: f64,
    pub slope: f64,
    pub max_backtracks: usize,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub solver: SolverName,
    pub record_trace: bool,
    pub reuse_rows: bool,
    /// Tolerance of the criticality verdict in the final report.
    pub criticality_tol: f64,
}

impl Default for DescentSection {
    fn default() -> Self {
        let StepStrategy::Armijo {
            initial,
            shrink,
            slope,
            max_backtracks,
        } = StepStrategy::default()
        else {
            unreachable!("default step rule is backtracking")
        };
        let d = DescentConfig::default();
        Self {
            step: StepRule::Armijo,
            initial_step: initial,
            shrink,
            slope,
            max_backtracks,
            grad_tol: d.grad_tol,
            max_iters: d.max_iters,
            solver: SolverName::Closed,
            record_trace: d.record_trace,
            reuse_rows: d.reuse_rows,
            criticality_tol: 1e-6,
        }
    }
}

impl DescentSection {
    pub fn to_descent_config(&self) -> DescentConfig {
        let step = match self.step {
            StepRule::Fixed(step) => StepStrategy::Fixed { step },
            StepRule::Armijo => StepStrategy::Armijo {
                initial: self.initial_step,
                shrink: self.shrink,
                slope: self.slope,
                max_backtracks: self.max_backtracks,
            },
        };
        DescentConfig {
            step,
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            solver: self.solver.into(),
            record_trace: self.record_trace,
            reuse_rows: self.reuse_rows,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub max_iters: Option<usize>,
    pub grad_tol: Option<f64>,
    pub step: Option<StepRule>,
    pub solver: Option<SolverName>,
    pub trace: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.max_iters {
            self.descent.max_iters = v;
        }
        if let Some(v) = o.grad_tol {
            self.descent.grad_tol = v;
        }
        if let Some(v) = o.step {
            self.descent.step = v;
        }
        if let Some(v) = o.solver {
            self.descent.solver = v;
        }
        if let Some(v) = &o.trace {
            self.output.trace = Some(v.clone());
        }
        if let Some(v) = o.seed {
            self.initial_point.seed = Some(v);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Builds the cost model and starting point, validating every field.
    pub fn build(&self) -> Result<Experiment, ConfigError> {
        let model = self.problem.build()?;
        let (n, p) = model.dims();
        let start = self.initial_point.build(n, p)?;
        let descent = self.descent.to_descent_config();
        descent
            .validate()
            .map_err(|e| field_error("descent", strip(e)))?;
        if !(self.descent.criticality_tol > 0.0) {
            return Err(field_error("descent.criticality_tol", "must be positive"));
        }
        Ok(Experiment {
            model,
            start,
            descent,
            criticality_tol: self.descent.criticality_tol,
        })
    }
}

/// Parses and fully validates a config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let config: ExperimentConfig =
        toml::from_str(text).map_err(|e| ConfigError::Syntax(e.message().to_string()))?;
    config.build()?;
    Ok(config)
}

/// A validated experiment ready to run.
#[derive(Debug)]
pub struct Experiment {
    pub model: Problem,
    pub start: StiefelPoint,
    pub descent: DescentConfig,
    pub criticality_tol: f64,
}

/// One of the supported cost families.
#[derive(Debug, Clone)]
pub enum Problem {
    Procrustes(ProcrustesProblem),
    Penrose(PenroseProblem),
    HetQuad(HetQuadProblem),
    Brockett(BrockettProblem),
}

impl Problem {
    fn inner(&self) -> &dyn CostModel {
        match self {
            Problem::Procrustes(m) => m,
            Problem::Penrose(m) => m,
            Problem::HetQuad(m) => m,
            Problem::Brockett(m) => m,
        }
    }

    pub fn as_brockett(&self) -> Option<&BrockettProblem> {
        match self {
            Problem::Brockett(b) => Some(b),
            _ => None,
        }
    }
}

impl CostModel for Problem {
    fn name(&self) -> &str {
        self.inner().name()
    }

    fn dims(&self) -> (usize, usize) {
        self.inner().dims()
    }

    fn value(&self, u: &DMatrix<f64>) -> f64 {
        self.inner().value(u)
    }

    fn gradient(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        self.inner().gradient(u)
    }
}

fn strip(e: StiefelError) -> String {
    match e {
        StiefelError::InvalidParameter(m) | StiefelError::DimensionMismatch(m) => m,
        other => other.to_string(),
    }
}

fn matrix(field: &str, rows: &Rows) -> Result<DMatrix<f64>, ConfigError> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(field_error(field, "matrix has no rows"));
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err(field_error(field, "matrix has no columns"));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(field_error(
                field,
                format!("row {} has {} entries, expected {ncols}", i + 1, r.len()),
            ));
        }
        if r.iter().any(|x| !x.is_finite()) {
            return Err(field_error(field, format!("row {} has a non-finite entry", i + 1)));
        }
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn check_rows(field: &str, m: &DMatrix<f64>, expected: usize, what: &str) -> Result<(), ConfigError> {
    if m.nrows() != expected {
        return Err(field_error(
            field,
            format!("expected {expected} rows ({what}), got {}", m.nrows()),
        ));
    }
    Ok(())
}

fn check_cols(field: &str, m: &DMatrix<f64>, expected: usize, what: &str) -> Result<(), ConfigError> {
    if m.ncols() != expected {
        return Err(field_error(
            field,
            format!("expected {expected} columns ({what}), got {}", m.ncols()),
        ));
    }
    Ok(())
}

impl ProblemConfig {
    pub fn build(&self) -> Result<Problem, ConfigError> {
        match self {
            ProblemConfig::Procrustes { a, b } => {
                let a = matrix("problem.a", a)?;
                let b = matrix("problem.b", b)?;
                check_rows("problem.b", &b, a.nrows(), "rows of A")?;
                if b.ncols() > a.ncols() {
                    return Err(field_error(
                        "problem.b",
                        format!("p = {} exceeds n = {}", b.ncols(), a.ncols()),
                    ));
                }
                ProcrustesProblem::new(a, b)
                    .map(Problem::Procrustes)
                    .map_err(|e| field_error("problem", strip(e)))
            }
            ProblemConfig::Penrose { a, b, c } => {
                let a = matrix("problem.a", a)?;
                let b = matrix("problem.b", b)?;
                let c = matrix("problem.c", c)?;
                check_rows("problem.b", &b, a.nrows(), "rows of A")?;
                check_cols("problem.c", &c, b.ncols(), "columns of B")?;
                if c.nrows() > a.ncols() {
                    return Err(field_error(
                        "problem.c",
                        format!("p = {} exceeds n = {}", c.nrows(), a.ncols()),
                    ));
                }
                PenroseProblem::new(a, b, c)
                    .map(Problem::Penrose)
                    .map_err(|e| field_error("problem", strip(e)))
            }
            ProblemConfig::Hetquad { matrices } => {
                if matrices.is_empty() {
                    return Err(field_error("problem.matrices", "need at least one matrix"));
                }
                let mut mats: Vec<DMatrix<f64>> = Vec::with_capacity(matrices.len());
                for (k, rows) in matrices.iter().enumerate() {
                    let field = format!("problem.matrices[{k}]");
                    let m = matrix(&field, rows)?;
                    if !m.is_square() {
                        return Err(field_error(&field, "matrix must be square"));
                    }
                    if let Some(first) = mats.first() {
                        check_rows(&field, &m, first.nrows(), "size of the first matrix")?;
                    }
                    mats.push(m);
                }
                HetQuadProblem::new(mats)
                    .map(Problem::HetQuad)
                    .map_err(|e| field_error("problem.matrices", strip(e)))
            }
            ProblemConfig::Brockett { a, a_diag, mu } => {
                let a = match (a, a_diag) {
                    (Some(rows), None) => {
                        let m = matrix("problem.a", rows)?;
                        if !m.is_square() {
                            return Err(field_error("problem.a", "matrix must be square"));
                        }
                        m
                    }
                    (None, Some(d)) if !d.is_empty() => {
                        DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(d))
                    }
                    (None, Some(_)) => return Err(field_error("problem.a_diag", "is empty")),
                    (Some(_), Some(_)) => {
                        return Err(field_error("problem", "give either a or a_diag, not both"))
                    }
                    (None, None) => return Err(field_error("problem.a", "missing (or give a_diag)")),
                };
                if mu.is_empty() || mu.len() > a.nrows() {
                    return Err(field_error(
                        "problem.mu",
                        format!("need between 1 and {} weights, got {}", a.nrows(), mu.len()),
                    ));
                }
                BrockettProblem::new(a, mu.clone())
                    .map(Problem::Brockett)
                    .map_err(|e| match e {
                        StiefelError::NotSymmetric { .. } => {
                            field_error("problem.a", "matrix must be symmetric")
                        }
                        StiefelError::InvalidParameter(m) => field_error("problem.mu", m),
                        other => field_error("problem", strip(other)),
                    })
            }
        }
    }
}

impl InitialPoint {
    pub fn build(&self, n: usize, p: usize) -> Result<StiefelPoint, ConfigError> {
        let Some(rows) = &self.rows else {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed.unwrap_or(0));
            return Ok(random_stiefel(&mut rng, n, p));
        };
        let field = "initial_point.rows";
        let u = matrix(field, rows)?;
        check_rows(field, &u, n, "n of the problem")?;
        check_cols(field, &u, p, "p of the problem")?;
        let residual = membership_residual(&u);
        let u = if residual <= EXACT_TOL {
            u
        } else if residual <= REPAIR_TOL {
            log::info!("re-orthonormalizing initial point (residual {residual:.2e})");
            polar_factor(&u)
        } else {
            return Err(field_error(
                field,
                format!("not orthonormal: ‖UᵀU − I‖ = {residual:.3e} exceeds {REPAIR_TOL:e}"),
            ));
        };
        StiefelPoint::new(u).map_err(|e| field_error(field, strip(e)))
    }
}

/// Nearest matrix with orthonormal columns, `W Vᵀ` from `U = W Σ Vᵀ`.
pub fn polar_factor(u: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = u.clone().svd(true, true);
    let w = svd.u.expect("left singular vectors requested");
    let vt = svd.v_t.expect("right singular vectors requested");
    w * vt
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[problem]
kind = "brockett"
a_diag = [1.0, 2.0, 3.0, 4.0]
mu = [1.0, 2.0]

[initial_point]
rows = [[0.0, 0.7071067811865476], [-0.7071067811865476, 0.0], [0.0, -0.7071067811865476], [-0.7071067811865476, 0.0]]
"#;

    #[test]
    fn minimal_brockett_config() {
        let config = parse_config(MINIMAL).unwrap();
        assert_eq!(config.descent, DescentSection::default());
        let exp = config.build().unwrap();
        assert_eq!(exp.model.dims(), (4, 2));
        assert_eq!(exp.start.rows().indices(), &[0, 1]);
    }

    #[test]
    fn round_trip() {
        let mut config = parse_config(MINIMAL).unwrap();
        config.descent.step = StepRule::Fixed(0.05);
        config.descent.grad_tol = 1e-9;
        config.output.trace = Some("t.csv".into());
        let again = parse_config(&config.to_toml()).unwrap();
        assert_eq!(again, config);
    }

    #[test]
    fn decreasing_weights_rejected() {
        let text = MINIMAL.replace("mu = [1.0, 2.0]", "mu = [2.0, 1.0]");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.to_string(), "problem.mu: weights must be nondecreasing");
    }

    #[test]
    fn initial_point_row_count_checked() {
        let text = MINIMAL.replace(", [-0.7071067811865476, 0.0]]", "]");
        let err = parse_config(&text).unwrap_err();
        assert!(
            matches!(&err, ConfigError::Field { field, .. } if field == "initial_point.rows"),
            "{err}"
        );
        assert!(err.to_string().contains("expected 4 rows"));
    }

    #[test]
    fn nonsymmetric_brockett_matrix_rejected() {
        let text = r#"
[problem]
kind = "brockett"
a = [[1.0, 2.0], [0.0, 1.0]]
mu = [1.0]
"#;
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.to_string(), "problem.a: matrix must be symmetric");
    }

    #[test]
    fn procrustes_dimension_mismatch() {
        let text = r#"
[problem]
kind = "procrustes"
a = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
b = [[1.0], [0.0]]
"#;
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().starts_with("problem.b: expected 3 rows"), "{err}");
    }

    #[test]
    fn unknown_fields_and_syntax_errors() {
        let text = MINIMAL.replace("mu = ", "weights = ");
        assert!(matches!(parse_config(&text), Err(ConfigError::Syntax(_))));
        let text = format!("{MINIMAL}\n[descent]\nstep = \"newton\"\n");
        assert!(matches!(parse_config(&text), Err(ConfigError::Syntax(_))));
    }

    #[test]
    fn truncated_entries_are_repaired() {
        let text = MINIMAL.replace("0.7071067811865476", "0.70710678");
        let exp = parse_config(&text).unwrap().build().unwrap();
        assert!(exp.start.membership_residual() < 1e-14);

        let text = MINIMAL.replace("0.7071067811865476", "0.7071");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().starts_with("initial_point.rows: not orthonormal"), "{err}");
    }

    #[test]
    fn random_start_from_seed() {
        let text = r#"
[problem]
kind = "hetquad"
matrices = [[[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 3.0]], [[1.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]]

[initial_point]
seed = 3
"#;
        let a = parse_config(text).unwrap().build().unwrap();
        let b = parse_config(text).unwrap().build().unwrap();
        assert_eq!(a.start, b.start);
        assert_eq!(a.model.dims(), (3, 2));
    }

    #[test]
    fn step_spec_parsing() {
        assert_eq!("armijo".parse::<StepRule>(), Ok(StepRule::Armijo));
        assert_eq!("fixed:0.25".parse::<StepRule>(), Ok(StepRule::Fixed(0.25)));
        assert!("fixed:-1".parse::<StepRule>().is_err());
        assert!("fixed".parse::<StepRule>().is_err());
    }

    #[test]
    fn overrides_win() {
        let mut config = parse_config(MINIMAL).unwrap();
        config.apply(&Overrides {
            max_iters: Some(7),
            step: Some(StepRule::Fixed(0.1)),
            solver: Some(SolverName::Generic),
            ..Overrides::default()
        });
        let d = config.build().unwrap().descent;
        assert_eq!(d.max_iters, 7);
        assert_eq!(d.step, StepStrategy::Fixed { step: 0.1 });
        assert_eq!(d.solver, SolverKind::Generic);
    }
}
