//! Small dense linear-algebra helpers shared by the solver and the oracles.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// `max |WᵀW − I|` over all entries.
pub fn orthonormality_error(w: &DMatrix<f64>) -> f64 {
    let gram = w.transpose() * w;
    let mut worst = 0.0f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Orthonormalizes the columns of `seed` (modified Gram-Schmidt, two passes)
/// and fills up to `k` columns with random directions. Columns that are
/// numerically dependent on earlier ones are replaced, not kept.
pub fn orthonormal_completion<R: Rng + ?Sized>(seed: &DMatrix<f64>, k: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    let d = seed.nrows();
    if k > d {
        return Err(Error::RankTooLarge {
            view: 0,
            dim: d,
            rank: k,
        });
    }
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    let scale = seed.column_iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
    let try_push = |basis: &mut Vec<DVector<f64>>, mut v: DVector<f64>, floor: f64| {
        for _ in 0..2 {
            for q in basis.iter() {
                let proj = q.dot(&v);
                v.axpy(-proj, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm > floor {
            basis.push(v / norm);
        }
    };
    for col in seed.column_iter().take(k) {
        try_push(&mut basis, col.into_owned(), 1e-10 * scale);
    }
    let mut attempts = 0;
    while basis.len() < k {
        attempts += 1;
        if attempts > 100 * (k + 1) {
            return Err(Error::RankTooLarge {
                view: 0,
                dim: d,
                rank: k,
            });
        }
        let v = DVector::from_fn(d, |_, _| StandardNormal.sample(rng));
        try_push(&mut basis, v, 1e-6);
    }
    Ok(DMatrix::from_columns(&basis))
}

/// The `k` leading left singular vectors of `x`, padded to an orthonormal
/// `d × k` matrix when `x` has rank below `k`.
pub fn leading_left_singular_vectors<R: Rng + ?Sized>(x: &DMatrix<f64>, k: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    let d = x.nrows();
    if k > d {
        return Err(Error::RankTooLarge {
            view: 0,
            dim: d,
            rank: k,
        });
    }
    if x.ncols() == 0 {
        return orthonormal_completion(&DMatrix::zeros(d, 0), k, rng);
    }
    let svd = x.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sigma = &svd.singular_values;
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));
    let top = sigma.iter().copied().fold(0.0, f64::max);
    let kept: Vec<DVector<f64>> = order
        .iter()
        .take(k)
        .filter(|&&i| sigma[i] > 1e-12 * top && top > 0.0)
        .map(|&i| u.column(i).into_owned())
        .collect();
    let seed = if kept.is_empty() {
        DMatrix::zeros(d, 0)
    } else {
        DMatrix::from_columns(&kept)
    };
    orthonormal_completion(&seed, k, rng)
}

/// `argmax Tr(WᵀB)` over `WᵀW = I`: `W = S Vᵀ` for the thin SVD `B = S Σ Vᵀ`.
/// Requires `B` to have at least as many rows as columns.
pub fn procrustes_rotation(b: &DMatrix<f64>) -> DMatrix<f64> {
    debug_assert!(b.nrows() >= b.ncols());
    let svd = b.clone().svd(true, true);
    let s = svd.u.expect("left singular vectors requested");
    let vt = svd.v_t.expect("right singular vectors requested");
    s * vt
}

/// Stacks the given columns of several feature-major matrices into one
/// `(Σ d_v) × |columns|` matrix.
pub fn stack_columns(views: &[&DMatrix<f64>], columns: &[usize]) -> DMatrix<f64> {
    let total: usize = views.iter().map(|v| v.nrows()).sum();
    let mut out = DMatrix::zeros(total, columns.len());
    let mut offset = 0;
    for view in views {
        for (j, &c) in columns.iter().enumerate() {
            out.view_mut((offset, j), (view.nrows(), 1)).copy_from(&view.column(c));
        }
        offset += view.nrows();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn completion_fills_rank_deficient_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seed = DMatrix::from_column_slice(4, 3, &[1., 0., 0., 0., 2., 0., 0., 0., 0., 0., 0., 0.]);
        let w = orthonormal_completion(&seed, 3, &mut rng).unwrap();
        assert!(orthonormality_error(&w) < 1e-12);
        assert!((w[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(orthonormal_completion(&seed, 5, &mut rng).is_err());
    }

    #[test]
    fn leading_vectors_of_low_rank_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // rank one, four features
        let x = DMatrix::from_fn(4, 6, |i, j| (i + 1) as f64 * (j as f64 - 2.5));
        let w = leading_left_singular_vectors(&x, 3, &mut rng).unwrap();
        assert_eq!(w.shape(), (4, 3));
        assert!(orthonormality_error(&w) < 1e-10);
        let dir = DVector::from_vec(alloc::vec![1., 2., 3., 4.]).normalize();
        assert!((w.column(0).dot(&dir).abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn procrustes_small_cases() {
        let w = procrustes_rotation(&DMatrix::identity(2, 2));
        assert!((w - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
        let w = procrustes_rotation(&DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![3., 5.])));
        assert!((w - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
        let swap = DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]);
        let w = procrustes_rotation(&swap);
        assert!((&w - &swap).amax() < 1e-12);
        assert!(((w.transpose() * &swap).trace() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn procrustes_of_zero_is_orthonormal() {
        let w = procrustes_rotation(&DMatrix::zeros(5, 3));
        assert!(orthonormality_error(&w) < 1e-12);
    }

    #[test]
    fn stacking() {
        let a = DMatrix::from_row_slice(1, 3, &[1., 2., 3.]);
        let b = DMatrix::from_row_slice(2, 3, &[4., 5., 6., 7., 8., 9.]);
        let s = stack_columns(&[&a, &b], &[2, 0]);
        assert_eq!(s, DMatrix::from_row_slice(3, 2, &[3., 1., 6., 4., 9., 7.]));
    }
}
