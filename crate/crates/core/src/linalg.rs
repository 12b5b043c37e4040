//! Truncated SVD of a matrix given as sparse columns.

use nalgebra::{DMatrix, DVector, SVD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::classifiers::SparseVector;

/// Matrices up to this many entries are decomposed densely.
pub const DENSE_SVD_LIMIT: usize = 4_000_000;

/// Oversampling and power iterations of the randomized route.
const OVERSAMPLE: usize = 10;
const POWER_ITERATIONS: usize = 2;

/// Leading singular triplets: `u` is `rows × r`, `sigma` non-increasing.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
}

/// Leading `k` singular values and left vectors of the `rows × columns.len()`
/// matrix with the given columns, or fewer when fewer exist.
pub fn truncated_svd(rows: usize, columns: &[SparseVector], k: usize, seed: u64) -> TruncatedSvd {
    let n = columns.len();
    if rows * n <= DENSE_SVD_LIMIT || k + OVERSAMPLE >= rows.min(n) {
        let mut x = DMatrix::zeros(rows, n);
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter() {
                x[(i, j)] = v;
            }
        }
        let svd = SVD::new(x, true, false);
        return take(svd.u.expect("left vectors requested"), svd.singular_values, k);
    }
    randomized(rows, columns, k, seed)
}

fn take(u: DMatrix<f64>, sigma: DVector<f64>, k: usize) -> TruncatedSvd {
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    order.truncate(k);
    TruncatedSvd {
        u: DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]),
        sigma: DVector::from_iterator(order.len(), order.iter().map(|&i| sigma[i])),
    }
}

/// `X M` for `M` of shape `columns.len() × l`.
fn times(rows: usize, columns: &[SparseVector], m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows, m.ncols());
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter() {
            for c in 0..m.ncols() {
                out[(i, c)] += v * m[(j, c)];
            }
        }
    }
    out
}

/// `Xᵀ Q` for `Q` of shape `rows × l`.
fn transpose_times(columns: &[SparseVector], q: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(columns.len(), q.ncols());
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter() {
            for c in 0..q.ncols() {
                out[(j, c)] += v * q[(i, c)];
            }
        }
    }
    out
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Range finder with power iterations followed by an exact SVD of the
/// small projected matrix.
fn randomized(rows: usize, columns: &[SparseVector], k: usize, seed: u64) -> TruncatedSvd {
    let n = columns.len();
    let l = k + OVERSAMPLE;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(n, l, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormalize(times(rows, columns, &omega));
    for _ in 0..POWER_ITERATIONS {
        let z = orthonormalize(transpose_times(columns, &q));
        q = orthonormalize(times(rows, columns, &z));
    }
    // B = Qᵀ X, built as (Xᵀ Q)ᵀ.
    let b = transpose_times(columns, &q).transpose();
    let svd = SVD::new(b, true, false);
    let u = q * svd.u.expect("left vectors requested");
    take(u, svd.singular_values, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sparse_columns(x: &DMatrix<f64>) -> Vec<SparseVector> {
        x.column_iter()
            .map(|c| SparseVector::from_dense(c.as_slice()))
            .collect()
    }

    #[test]
    fn randomized_matches_dense_on_low_rank() {
        // Rank-5 300 x 400 matrix.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = DMatrix::<f64>::from_fn(300, 5, |_, _| StandardNormal.sample(&mut rng));
        let b = DMatrix::<f64>::from_fn(5, 400, |_, _| StandardNormal.sample(&mut rng));
        let x: DMatrix<f64> = a * b;
        let cols = sparse_columns(&x);
        let exact = truncated_svd(300, &cols, 5, 1);
        let fast = randomized(300, &cols, 5, 1);
        for i in 0..5 {
            assert!((exact.sigma[i] - fast.sigma[i]).abs() < 1e-8 * exact.sigma[0]);
        }
        let pe = &exact.u * exact.u.transpose();
        let pf = &fast.u * fast.u.transpose();
        assert!((pe - pf).amax() < 1e-8);
    }

    #[test]
    fn dense_returns_sorted_values() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let svd = truncated_svd(2, &sparse_columns(&x), 5, 0);
        assert_eq!(svd.sigma.as_slice(), &[2.0, 1.0]);
    }
}
