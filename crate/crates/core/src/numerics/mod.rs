//! Dense linear algebra used by the alignment estimators.

mod matrix;
mod svd;

pub use matrix::Matrix;
pub use svd::{svd, Svd};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{shape_err, Error, Result};

/// Relative cutoff for the pseudoinverse.
pub const DEFAULT_CUTOFF: f64 = 1e-10;

/// Deterministic, platform-independent generator used for every seeded draw.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `rows × cols` matrix of standard normal draws.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = seeded_rng(seed);
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

pub fn column_mean(x: &Matrix) -> Result<Vec<f64>> {
    if x.rows() == 0 {
        return Err(Error::Precondition("column_mean of a matrix with no rows".into()));
    }
    let mut sums = vec![0.0; x.cols()];
    for row in x.row_iter() {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    let n = x.rows() as f64;
    Ok(sums.into_iter().map(|s| s / n).collect())
}

/// Population standard deviation of each column around `mean`.
pub fn column_std(x: &Matrix, mean: &[f64]) -> Result<Vec<f64>> {
    if x.rows() == 0 {
        return Err(Error::Precondition("column_std of a matrix with no rows".into()));
    }
    if mean.len() != x.cols() {
        return Err(shape_err(
            "column_std",
            format!("mean of length {} for {} columns", mean.len(), x.cols()),
        ));
    }
    let mut acc = vec![0.0; x.cols()];
    for row in x.row_iter() {
        for ((a, v), m) in acc.iter_mut().zip(row).zip(mean) {
            let d = v - m;
            *a += d * d;
        }
    }
    let n = x.rows() as f64;
    Ok(acc.into_iter().map(|a| (a / n).sqrt()).collect())
}

/// Minimum-norm solution of `min ‖A·X − B‖_F` through the SVD pseudoinverse.
///
/// Singular values at or below `cutoff · s_max` are treated as zero.
pub fn least_squares(a: &Matrix, b: &Matrix, cutoff: f64) -> Result<Matrix> {
    if a.rows() != b.rows() {
        return Err(shape_err(
            "least_squares",
            format!("A has {} rows but B has {}", a.rows(), b.rows()),
        ));
    }
    let d = svd(a)?;
    let s_max = d.s[0];
    if s_max <= 0.0 {
        return Err(Error::RankZero);
    }
    let threshold = cutoff * s_max;
    let inv: Vec<f64> = d
        .s
        .iter()
        .map(|&s| if s > threshold { 1.0 / s } else { 0.0 })
        .collect();
    if inv.iter().all(|&v| v == 0.0) {
        return Err(Error::RankZero);
    }
    // X = V · diag(1/s) · Uᵀ · B
    let mut utb = d.u.t_matmul(b)?;
    for (i, &w) in inv.iter().enumerate() {
        utb.row_mut(i).iter_mut().for_each(|x| *x *= w);
    }
    d.v.matmul(&utb)
}

/// Seeded random orthogonal matrix: Gram–Schmidt QR of a Gaussian matrix with
/// the sign of each column fixed so that `diag(R) > 0`.
pub fn random_orthogonal(d: usize, seed: u64) -> Matrix {
    assert!(d >= 1, "random_orthogonal needs d >= 1");
    let g = gaussian_matrix(d, d, seed);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut col = g.column(j);
        for _ in 0..2 {
            for prev in &q {
                let dot: f64 = prev.iter().zip(&col).map(|(a, b)| a * b).sum();
                for (x, p) in col.iter_mut().zip(prev) {
                    *x -= dot * p;
                }
            }
        }
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        col.iter_mut().for_each(|x| *x /= norm);
        q.push(col);
    }
    Matrix::from_fn(d, d, |i, j| q[j][i])
}

#[derive(Clone, Debug)]
pub struct Pca {
    /// `m × k` scores of the centred data.
    pub projection: Matrix,
    /// `d × k` principal axes as columns.
    pub components: Matrix,
    /// Fraction of total variance along each axis.
    pub explained: Vec<f64>,
    pub mean: Vec<f64>,
}

pub fn pca_project(x: &Matrix, k: usize) -> Result<Pca> {
    let limit = x.rows().min(x.cols());
    if k == 0 || k > limit {
        return Err(Error::Precondition(format!(
            "pca with k = {k} on a {}x{} matrix (need 1 <= k <= {limit})",
            x.rows(),
            x.cols()
        )));
    }
    let mean = column_mean(x)?;
    let centred = x.sub_row_vector(&mean)?;
    let d = svd(&centred)?;
    let components = d.v.leading_columns(k);
    let projection = centred.matmul(&components)?;
    let total: f64 = d.s.iter().map(|s| s * s).sum();
    let explained = d.s[..k]
        .iter()
        .map(|s| if total > 0.0 { s * s / total } else { 0.0 })
        .collect();
    Ok(Pca {
        projection,
        components,
        explained,
        mean,
    })
}
