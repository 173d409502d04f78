//! Seeded sampling of Stiefel points and skew matrices.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::manifold::StiefelPoint;

/// `n×p` matrix with i.i.d. standard normal entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Orthonormalizes the columns of a full-column-rank matrix (thin QR, signs
/// fixed so that `R` has a positive diagonal).
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..q.ncols() {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

/// A random point of St(n,p) (Gaussian matrix, then QR).
pub fn random_stiefel<R: Rng + ?Sized>(rng: &mut R, n: usize, p: usize) -> StiefelPoint {
    loop {
        let q = orthonormalize(&gaussian_matrix(rng, n, p));
        // Rank deficiency here is a measure-zero event; draw again.
        if let Ok(point) = StiefelPoint::new(q) {
            return point;
        }
    }
}

/// A random `n×n` skew matrix with standard normal upper-triangular entries.
pub fn random_skew<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let a = gaussian_matrix(rng, n, n);
    let upper = a.upper_triangle();
    &upper - upper.transpose()
}
