use nalgebra::DMatrix;
use proptest::prelude::*;
use wordsub::subspace::{
    autocorrelation_rank, canonical_cosines, projector_distance, similarity, weighted_word_subspace, word_subspace,
    Subspace, WeightVector,
};

/// Cyclic Jacobi eigenvalues of a small symmetric matrix.
fn jacobi_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut a = a.clone();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut values: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    values.sort_by(|x, y| y.total_cmp(x));
    values
}

fn matrix(p: usize, n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, p * n).prop_map(move |v| DMatrix::from_vec(p, n, v))
}

fn instance() -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>, usize, usize)> {
    (2usize..=6)
        .prop_flat_map(|p| (Just(p), 1usize..=4, 1usize..=4))
        .prop_flat_map(|(p, na, nb)| {
            (matrix(p, na), matrix(p, nb), 1..=na.min(p).min(3), 1..=nb.min(p).min(3))
        })
}

fn subspace_or_skip(x: &DMatrix<f64>, m: usize) -> Option<Subspace> {
    let rank = autocorrelation_rank(x).ok()?;
    if m > rank {
        return None;
    }
    word_subspace(x, m).ok()
}

/// Gap between the m-th and (m+1)-th eigenvalue relative to the largest.
fn relative_gap(values: &[f64], m: usize) -> f64 {
    let next = values.get(m).copied().unwrap_or(0.0);
    (values[m - 1] - next) / values[0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cosines_match_eigen_oracle((xa, xb, ma, mb) in instance()) {
        let (Some(a), Some(b)) = (subspace_or_skip(&xa, ma), subspace_or_skip(&xb, mb)) else {
            return Ok(());
        };
        let cosines = canonical_cosines(&a, &b).unwrap();
        let m = a.basis().transpose() * b.basis();
        let gram = m.transpose() * &m;
        let eig = jacobi_eigenvalues(&gram);
        prop_assert_eq!(cosines.len(), ma.min(mb));
        for (k, e) in cosines.iter().zip(eig.iter()) {
            prop_assert!((k - e.max(0.0).sqrt()).abs() < 1e-8, "{} vs {}", k, e);
        }
    }

    #[test]
    fn bases_are_orthonormal((xa, _xb, ma, _mb) in instance()) {
        if let Some(a) = subspace_or_skip(&xa, ma) {
            prop_assert!(a.orthonormality_error() <= 1e-8);
            prop_assert!(a.spectrum().windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn similarity_is_symmetric_bounded_and_monotone((xa, xb, ma, mb) in instance()) {
        let (Some(a), Some(b)) = (subspace_or_skip(&xa, ma), subspace_or_skip(&xb, mb)) else {
            return Ok(());
        };
        let mut last = f64::INFINITY;
        for t in 1..=ma.min(mb) {
            let s = similarity(&a, &b, t).unwrap();
            let r = similarity(&b, &a, t).unwrap();
            prop_assert!((s - r).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!(s <= last + 1e-12);
            last = s;
        }
    }

    #[test]
    fn weighting_matches_duplication(
        x in (2usize..=6, 1usize..=5).prop_flat_map(|(p, n)| matrix(p, n)),
        seed_weights in prop::collection::vec(1usize..=4, 5),
        m_pick in 1usize..=6,
    ) {
        let n = x.ncols();
        let weights: Vec<usize> = seed_weights[..n].to_vec();
        let rank = autocorrelation_rank(&x).unwrap();
        let m = m_pick.min(rank);
        let mut dup_cols = Vec::new();
        for (j, &k) in weights.iter().enumerate() {
            for _ in 0..k {
                dup_cols.push(x.column(j).into_owned());
            }
        }
        let dup = DMatrix::from_columns(&dup_cols);
        let plain = word_subspace(&dup, m).unwrap();
        let spectrum: Vec<f64> = wordsub::subspace::autocorrelation_spectrum(&dup).unwrap();
        prop_assume!(relative_gap(&spectrum, m) > 1e-4);
        let w = WeightVector::from_counts(&weights).unwrap();
        let weighted = weighted_word_subspace(&x, &w, m).unwrap();
        prop_assert!(projector_distance(&plain, &weighted) <= 1e-6);
        for (a, b) in plain.spectrum().iter().zip(weighted.spectrum()) {
            prop_assert!((a - b).abs() <= 1e-9 * plain.spectrum()[0]);
        }
    }

    #[test]
    fn eigen_route_matches_svd_route(x in (2usize..=7, 1usize..=8).prop_flat_map(|(p, n)| matrix(p, n)), m_pick in 1usize..=7) {
        let rank = autocorrelation_rank(&x).unwrap();
        let m = m_pick.min(rank);
        let spectrum = wordsub::subspace::autocorrelation_spectrum(&x).unwrap();
        prop_assume!(relative_gap(&spectrum, m) > 1e-4);
        let eig = word_subspace(&x, m).unwrap();
        let svd = nalgebra::SVD::new(x.clone() / (x.ncols() as f64).sqrt(), true, false);
        let u = svd.u.unwrap();
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let basis = DMatrix::from_fn(x.nrows(), m, |r, c| u[(r, order[c])]);
        let p_svd = &basis * basis.transpose();
        prop_assert!((eig.projector() - p_svd).amax() <= 1e-6);
    }

    #[test]
    fn rebuilding_gives_the_same_projector(x in (2usize..=6, 1usize..=6).prop_flat_map(|(p, n)| matrix(p, n))) {
        let rank = autocorrelation_rank(&x).unwrap();
        let a = word_subspace(&x, rank).unwrap();
        let b = word_subspace(&x.clone(), rank).unwrap();
        prop_assert!(projector_distance(&a, &b) <= 1e-6);
    }
}

#[test]
fn jacobi_oracle_sanity() {
    let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
    let v = jacobi_eigenvalues(&a);
    assert!((v[0] - 3.0).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12);
}
