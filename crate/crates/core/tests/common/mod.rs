#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stiefel::random::gaussian_matrix;
use stiefel::{BrockettProblem, HetQuadProblem, PenroseProblem, ProcrustesProblem};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn diag(entries: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_row_slice(entries))
}

pub fn brockett(mu: &[f64]) -> BrockettProblem {
    BrockettProblem::new(diag(&[1.0, 2.0, 3.0, 4.0]), mu.to_vec()).unwrap()
}

/// The three case-I starting points on St(4,2) with their expected column
/// patterns (0-based rows) and limit costs.
pub fn case_one_runs() -> Vec<(DMatrix<f64>, Vec<usize>, f64)> {
    let h = 0.5f64.sqrt();
    let t = (1.0f64 / 3.0).sqrt();
    vec![
        (
            DMatrix::from_row_slice(4, 2, &[0.0, h, -h, 0.0, 0.0, -h, -h, 0.0]),
            vec![1, 0],
            4.0,
        ),
        (
            DMatrix::from_row_slice(4, 2, &[0.0, t, -h, t, 0.0, 0.0, -h, -t]),
            vec![1, 0],
            4.0,
        ),
        (
            DMatrix::from_row_slice(4, 2, &[t, -h, 0.0, 0.0, -t, -h, t, 0.0]),
            vec![2, 0],
            5.0,
        ),
    ]
}

pub fn case_two_start() -> DMatrix<f64> {
    let h = 0.5f64.sqrt();
    DMatrix::from_row_slice(4, 2, &[0.5, 0.0, 0.5, -h, -0.5, 0.0, -0.5, -h])
}

/// Distance from `u` to the nearest sign variant of the coordinate frame
/// whose column `j` is `±e_{rows[j]}`.
pub fn distance_to_frame(u: &DMatrix<f64>, rows: &[usize]) -> f64 {
    let mut total = 0.0;
    for (j, &r) in rows.iter().enumerate() {
        let col = u.column(j);
        let best = [1.0, -1.0]
            .iter()
            .map(|s| {
                let mut e = DVector::zeros(u.nrows());
                e[r] = *s;
                (col - e).norm_squared()
            })
            .fold(f64::INFINITY, f64::min);
        total += best;
    }
    total.sqrt()
}

pub fn random_symmetric<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, n, n);
    (&g + g.transpose()) * 0.5
}

pub fn random_procrustes<R: Rng>(rng: &mut R, n: usize, p: usize) -> ProcrustesProblem {
    let m = n + 2;
    ProcrustesProblem::new(gaussian_matrix(rng, m, n), gaussian_matrix(rng, m, p)).unwrap()
}

pub fn random_penrose<R: Rng>(rng: &mut R, n: usize, p: usize) -> PenroseProblem {
    let m = n + 1;
    let q = p + 1;
    PenroseProblem::new(
        gaussian_matrix(rng, m, n),
        gaussian_matrix(rng, m, q),
        gaussian_matrix(rng, p, q),
    )
    .unwrap()
}

pub fn random_hetquad<R: Rng>(rng: &mut R, n: usize, p: usize) -> HetQuadProblem {
    HetQuadProblem::new((0..p).map(|_| random_symmetric(rng, n)).collect()).unwrap()
}

pub fn random_brockett<R: Rng>(rng: &mut R, n: usize, p: usize) -> BrockettProblem {
    let mut mu: Vec<f64> = (0..p).map(|_| rng.random_range(0.1..3.0)).collect();
    mu.sort_by(f64::total_cmp);
    BrockettProblem::new(random_symmetric(rng, n), mu).unwrap()
}
