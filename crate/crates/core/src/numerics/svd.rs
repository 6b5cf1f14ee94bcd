//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! Jacobi is slower than Golub–Kahan for large inputs but every matrix this
//! crate decomposes is at most a few thousand rows by a few dozen columns, and
//! the method gives orthogonal factors accurate to a few ulps, which the
//! alignment tolerances lean on.

use super::Matrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const ROTATION_TOL: f64 = 1e-15;
/// Columns whose norm falls below `NEGLIGIBLE · ‖M‖_F` are treated as zero;
/// rotating round-off against round-off never converges.
const NEGLIGIBLE: f64 = 1e-15;
/// Singular values below `RANK_TOL * s_max` get a completed left vector
/// instead of a normalised (and numerically meaningless) residual column.
const RANK_TOL: f64 = 1e-13;

/// Thin SVD `M = U · diag(S) · Vᵀ` with `k = min(rows, cols)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Svd {
    /// `rows × k`, orthonormal columns.
    pub u: Matrix,
    /// Length `k`, non-negative, sorted descending.
    pub s: Vec<f64>,
    /// `cols × k`, orthonormal columns.
    pub v: Matrix,
}

impl Svd {
    /// `U · diag(S) · Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (x, s) in us.row_mut(i).iter_mut().zip(&self.s) {
                *x *= s;
            }
        }
        us.matmul(&self.v.transpose())
            .expect("svd factors have chained shapes")
    }
}

pub fn svd(m: &Matrix) -> Result<Svd> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::Precondition(format!(
            "svd of an empty {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::Precondition("svd input has non-finite entries".into()));
    }
    if m.rows() >= m.cols() {
        svd_tall(m)
    } else {
        let t = svd_tall(&m.transpose())?;
        Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        })
    }
}

fn svd_tall(m: &Matrix) -> Result<Svd> {
    let (rows, n) = m.shape();
    // Columns stored contiguously so each rotation touches two slices.
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let frob = m.frobenius_norm();
    let tiny = (NEGLIGIBLE * frob).powi(2);
    let tol = ROTATION_TOL.max(rows as f64 * f64::EPSILON);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let (ap, aq) = (&a[p], &a[q]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for (x, y) in ap.iter().zip(aq) {
                        alpha += x * x;
                        beta += y * y;
                        gamma += x * y;
                    }
                    (alpha, beta, gamma)
                };
                if gamma == 0.0
                    || alpha <= tiny
                    || beta <= tiny
                    || gamma.abs() <= tol * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut a, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "one-sided Jacobi SVD did not converge within {MAX_SWEEPS} sweeps"
        )));
    }

    let norms: Vec<f64> = a
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps ties in column order, so the output is deterministic.
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let s_max = norms[order[0]];
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut u_cols: Vec<Option<Vec<f64>>> = order
        .iter()
        .map(|&j| {
            let sigma = norms[j];
            (sigma > 0.0 && sigma > RANK_TOL * s_max)
                .then(|| a[j].iter().map(|x| x / sigma).collect())
        })
        .collect();
    complete_basis(&mut u_cols, rows);

    let u = Matrix::from_fn(rows, n, |i, j| u_cols[j].as_ref().unwrap()[i]);
    let v = Matrix::from_fn(n, n, |i, j| v[order[j]][i]);
    Ok(Svd { u, s, v })
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Fills the missing left singular vectors with unit vectors orthogonal to
/// every present one, trying standard basis vectors in order.
fn complete_basis(cols: &mut [Option<Vec<f64>>], dim: usize) {
    let mut candidate = 0;
    for j in 0..cols.len() {
        if cols[j].is_some() {
            continue;
        }
        loop {
            let mut e = vec![0.0; dim];
            e[candidate % dim] = 1.0;
            candidate += 1;
            // Two passes of Gram–Schmidt against the accepted vectors.
            for _ in 0..2 {
                for existing in cols.iter().flatten() {
                    let dot: f64 = existing.iter().zip(&e).map(|(a, b)| a * b).sum();
                    for (x, y) in e.iter_mut().zip(existing) {
                        *x -= dot * y;
                    }
                }
            }
            let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-3 {
                e.iter_mut().for_each(|x| *x /= norm);
                cols[j] = Some(e);
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_its_own_svd() {
        let r = svd(&Matrix::identity(3)).unwrap();
        assert_eq!(r.s, vec![1.0, 1.0, 1.0]);
        assert_eq!(r.u, Matrix::identity(3));
        assert_eq!(r.v, Matrix::identity(3));
    }

    #[test]
    fn diagonal_gives_signed_permutations() {
        let m = Matrix::from_rows(&[[2.0, 0.0], [0.0, 3.0]]).unwrap();
        let r = svd(&m).unwrap();
        assert_eq!(r.s, vec![3.0, 2.0]);
        for f in [&r.u, &r.v] {
            for x in f.as_slice() {
                assert!(*x == 0.0 || x.abs() == 1.0);
            }
        }
        assert!(r.reconstruct().max_abs_diff(&m).unwrap() < 1e-15);
    }

    #[test]
    fn zero_matrix_still_has_orthonormal_factors() {
        let r = svd(&Matrix::zeros(4, 3)).unwrap();
        assert_eq!(r.s, vec![0.0; 3]);
        assert!(r.u.orthogonality_error() < 1e-12);
        assert!(r.v.orthogonality_error() < 1e-12);
    }

    #[test]
    fn wide_input_goes_through_transpose() {
        let m = Matrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let r = svd(&m).unwrap();
        assert_eq!(r.u.shape(), (2, 2));
        assert_eq!(r.v.shape(), (3, 2));
        assert!(r.reconstruct().max_abs_diff(&m).unwrap() < 1e-12);
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert!(svd(&Matrix::zeros(0, 3)).is_err());
        let m = Matrix::from_vec(1, 2, vec![f64::NAN, 1.0]).unwrap();
        assert!(matches!(svd(&m), Err(Error::Precondition(_))));
    }
}
