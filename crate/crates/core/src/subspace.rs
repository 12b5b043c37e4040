//! Word subspaces and canonical angles.
//!
//! A word subspace is spanned by the leading eigenvectors of the
//! autocorrelation matrix `R = (1/N) Σ x_i x_iᵀ` of a set of word vectors
//! (PCA without centering). The TF-weighted variant takes the leading left
//! singular vectors of `X Ω^{1/2}`, where `Ω` holds per-word frequencies.
//!
//! Two subspaces are compared through the cosines of their canonical
//! angles, the singular values of `Y_aᵀ Y_b`.

use nalgebra::{DMatrix, DMatrixView, SymmetricEigen, SVD};

use crate::error::{Error, Result};

/// Spectrum values at or below this fraction of the largest one are treated
/// as numerically zero and are not selectable as subspace dimensions.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Maximum entry deviation of `BᵀB` from the identity for a valid basis.
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-8;

/// How a requested subspace dimension is reconciled with the data's rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimPolicy {
    /// Exactly this many dimensions; an error if the rank is smaller.
    Exact(usize),
    /// At most this many dimensions, capped by the rank.
    AtMost(usize),
}

impl DimPolicy {
    pub fn value(self) -> usize {
        match self {
            DimPolicy::Exact(m) | DimPolicy::AtMost(m) => m,
        }
    }

    /// The dimension actually used given a rank cap.
    pub fn resolve(self, cap: usize) -> Result<usize> {
        let m = self.value();
        if m == 0 {
            return Err(Error::Config("subspace dimension must be at least 1".into()));
        }
        match self {
            DimPolicy::Exact(m) if m > cap => Err(Error::Dimension { requested: m, cap }),
            DimPolicy::Exact(m) => Ok(m),
            DimPolicy::AtMost(m) => Ok(m.min(cap)),
        }
    }
}

/// An orthonormal basis (`p × m`) with its spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
    spectrum: Vec<f64>,
    source_word_count: usize,
}

impl Subspace {
    /// Validates and wraps a basis. Spectrum entries in `[-1e-12, 0)` are
    /// clamped to zero.
    pub fn from_parts(
        basis: DMatrix<f64>,
        spectrum: Vec<f64>,
        source_word_count: usize,
    ) -> Result<Self> {
        let m = basis.ncols();
        if m == 0 || m > basis.nrows() {
            return Err(Error::DegenerateInput(format!(
                "basis of shape {}x{m} is not a subspace basis",
                basis.nrows()
            )));
        }
        if spectrum.len() != m {
            return Err(Error::DegenerateInput(format!(
                "spectrum has {} values for {m} basis vectors",
                spectrum.len()
            )));
        }
        let mut spectrum = spectrum;
        for v in spectrum.iter_mut() {
            if !v.is_finite() || *v < -1e-12 {
                return Err(Error::DegenerateInput(format!("invalid spectrum value {v}")));
            }
            *v = v.max(0.0);
        }
        if spectrum.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::DegenerateInput("spectrum is not non-increasing".into()));
        }
        let subspace = Self {
            basis,
            spectrum,
            source_word_count,
        };
        let dev = subspace.orthonormality_error();
        if !(dev <= ORTHONORMALITY_TOLERANCE) {
            return Err(Error::DegenerateInput(format!(
                "basis deviates from orthonormality by {dev:e}"
            )));
        }
        Ok(subspace)
    }

    /// Ambient dimension `p`.
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Subspace dimension `m`.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn source_word_count(&self) -> usize {
        self.source_word_count
    }

    /// The subspace spanned by the first `m` basis vectors.
    pub fn leading(&self, m: usize) -> Result<Subspace> {
        if m == 0 || m > self.dim() {
            return Err(Error::Dimension {
                requested: m,
                cap: self.dim(),
            });
        }
        Ok(Subspace {
            basis: self.basis.columns(0, m).into_owned(),
            spectrum: self.spectrum[..m].to_vec(),
            source_word_count: self.source_word_count,
        })
    }

    /// `B Bᵀ`, the basis-independent representation.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// `max |BᵀB − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let m = self.dim();
        (self.basis.transpose() * &self.basis - DMatrix::<f64>::identity(m, m)).amax()
    }
}

/// `max |P_a − P_b|` over projector entries.
pub fn projector_distance(a: &Subspace, b: &Subspace) -> f64 {
    (a.projector() - b.projector()).amax()
}

/// Per-word positive weights aligned with the columns of a word matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::Weight { index, value });
        }
        Ok(Self(weights))
    }

    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        Self::new(counts.iter().map(|&c| c as f64).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Scales every column to unit Euclidean norm.
pub fn normalize_columns(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = x.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let norm = col.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::DegenerateInput(format!("column {j} has zero norm")));
        }
        col /= norm;
    }
    Ok(out)
}

/// Uncentered PCA subspace of dimension exactly `m`.
pub fn word_subspace(x: &DMatrix<f64>, m: usize) -> Result<Subspace> {
    word_subspace_with(x, DimPolicy::Exact(m))
}

/// Uncentered PCA subspace with the dimension chosen by `policy`.
pub fn word_subspace_with(x: &DMatrix<f64>, policy: DimPolicy) -> Result<Subspace> {
    let pca = uncentered_pca(x)?;
    let m = policy.resolve(pca.rank)?;
    pca.into_subspace(m, x.ncols())
}

/// TF-weighted subspace of dimension exactly `m`.
pub fn weighted_word_subspace(x: &DMatrix<f64>, weights: &WeightVector, m: usize) -> Result<Subspace> {
    weighted_word_subspace_with(x, weights, DimPolicy::Exact(m))
}

/// TF-weighted subspace with the dimension chosen by `policy`.
pub fn weighted_word_subspace_with(
    x: &DMatrix<f64>,
    weights: &WeightVector,
    policy: DimPolicy,
) -> Result<Subspace> {
    check_columns(x)?;
    if weights.len() != x.ncols() {
        return Err(Error::DegenerateInput(format!(
            "{} weights for {} word vectors",
            weights.len(),
            x.ncols()
        )));
    }
    let mut scaled = x.clone();
    for (mut col, w) in scaled.column_iter_mut().zip(weights.as_slice()) {
        col *= w.sqrt();
    }
    let svd = SVD::new(scaled, true, false);
    let u = svd.u.expect("left singular vectors requested");
    let total = weights.total();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let values: Vec<f64> = order
        .iter()
        .map(|&i| svd.singular_values[i] * svd.singular_values[i] / total)
        .collect();
    let basis = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let pca = Pca::new(basis, values);
    let m = policy.resolve(pca.rank)?;
    pca.into_subspace(m, x.ncols())
}

/// All `p` eigenvalues of the autocorrelation matrix, non-increasing.
pub fn autocorrelation_spectrum(x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let pca = uncentered_pca(x)?;
    let mut values = pca.values;
    values.resize(x.nrows(), 0.0);
    Ok(values)
}

/// Numerical rank of the autocorrelation matrix of `x`.
pub fn autocorrelation_rank(x: &DMatrix<f64>) -> Result<usize> {
    Ok(uncentered_pca(x)?.rank)
}

/// Cosines of the canonical angles between two subspaces: the
/// `min(m_a, m_b)` singular values of `Y_aᵀ Y_b`, clamped into `[0, 1]`,
/// non-increasing.
pub fn canonical_cosines(a: &Subspace, b: &Subspace) -> Result<Vec<f64>> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::AmbientMismatch {
            left: a.ambient_dim(),
            right: b.ambient_dim(),
        });
    }
    let product = a.basis.transpose() * &b.basis;
    Ok(cosines_from_product(product.as_view()))
}

/// Canonical cosines from a precomputed basis product `Y_aᵀ Y_b` (or any
/// leading block of one).
pub fn cosines_from_product(product: DMatrixView<'_, f64>) -> Vec<f64> {
    if product.nrows() == 0 || product.ncols() == 0 {
        return Vec::new();
    }
    let svd = SVD::new(product.into_owned(), false, false);
    let mut cosines: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|s| s.clamp(0.0, 1.0))
        .collect();
    cosines.sort_by(|a, b| b.total_cmp(a));
    cosines
}

/// Mean squared cosine of the `t` smallest canonical angles.
pub fn similarity(a: &Subspace, b: &Subspace, t: usize) -> Result<f64> {
    similarity_from_cosines(&canonical_cosines(a, b)?, t)
}

/// Mean of the `t` leading squared cosines.
pub fn similarity_from_cosines(cosines: &[f64], t: usize) -> Result<f64> {
    if t == 0 || t > cosines.len() {
        return Err(Error::AngleCount {
            t,
            max: cosines.len(),
        });
    }
    Ok(cosines[..t].iter().map(|k| k * k).sum::<f64>() / t as f64)
}

/// Eigenvectors and eigenvalues above the rank threshold, plus the full
/// list of non-negative eigenvalues (at most `min(p, N)` of them).
struct Pca {
    basis: DMatrix<f64>,
    values: Vec<f64>,
    rank: usize,
}

impl Pca {
    fn new(mut basis: DMatrix<f64>, mut values: Vec<f64>) -> Self {
        for v in values.iter_mut() {
            *v = v.max(0.0);
        }
        let largest = values.first().copied().unwrap_or(0.0);
        let rank = values
            .iter()
            .take_while(|&&v| v > RANK_TOLERANCE * largest)
            .count();
        canonicalize_signs(&mut basis);
        Self { basis, values, rank }
    }

    fn into_subspace(self, m: usize, source_word_count: usize) -> Result<Subspace> {
        Subspace::from_parts(
            self.basis.columns(0, m).into_owned(),
            self.values[..m].to_vec(),
            source_word_count,
        )
    }
}

fn check_columns(x: &DMatrix<f64>) -> Result<()> {
    if x.ncols() == 0 || x.nrows() == 0 {
        return Err(Error::DegenerateInput("no word vectors".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite word vector component".into()));
    }
    for (j, col) in x.column_iter().enumerate() {
        if col.norm_squared() == 0.0 {
            return Err(Error::DegenerateInput(format!("word vector {j} has zero norm")));
        }
    }
    Ok(())
}

/// Eigendecomposition of `R = X Xᵀ / N`.
///
/// When `N < p` the nonzero eigenpairs of `R` are found from the thin QR
/// factorization `X = Q T`: `R = Q (T Tᵀ / N) Qᵀ`, so eigenvectors `W` of the
/// small `N × N` matrix map to eigenvectors `Q W` of `R` with the same
/// eigenvalues.
fn uncentered_pca(x: &DMatrix<f64>) -> Result<Pca> {
    check_columns(x)?;
    let (p, n) = x.shape();
    let scale = 1.0 / n as f64;

    let (vectors, values) = if n >= p {
        let r = (x * x.transpose()) * scale;
        let eig = SymmetricEigen::new(r);
        (eig.eigenvectors, eig.eigenvalues)
    } else {
        let qr = x.clone().qr();
        let q = qr.q();
        let t = qr.r();
        let small = (&t * t.transpose()) * scale;
        let eig = SymmetricEigen::new(small);
        (q * eig.eigenvectors, eig.eigenvalues)
    };

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let basis = DMatrix::from_fn(p, order.len(), |r, c| vectors[(r, order[c])]);
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    Ok(Pca::new(basis, sorted))
}

/// Flips each column so its largest-magnitude entry is positive.
fn canonicalize_signs(basis: &mut DMatrix<f64>) {
    for mut col in basis.column_iter_mut() {
        let pivot = col.iter().copied().fold(0.0f64, |best, v| {
            if v.abs() > best.abs() {
                v
            } else {
                best
            }
        });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cols(p: usize, columns: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(p, columns.len(), |r, c| columns[c][r])
    }

    fn span(p: usize, axes: &[usize]) -> Subspace {
        let basis = DMatrix::from_fn(p, axes.len(), |r, c| if r == axes[c] { 1.0 } else { 0.0 });
        Subspace::from_parts(basis, vec![1.0; axes.len()], axes.len()).unwrap()
    }

    #[test]
    fn rank_one_data() {
        let s = word_subspace(&cols(2, &[&[1.0, 0.0], &[1.0, 0.0]]), 1).unwrap();
        assert_abs_diff_eq!(s.basis()[(0, 0)].abs(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.basis()[(1, 0)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.spectrum()[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_orthonormal_words() {
        let s = word_subspace(&cols(2, &[&[1.0, 0.0], &[0.0, 1.0]]), 2).unwrap();
        assert_abs_diff_eq!(s.spectrum()[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.spectrum()[1], 0.5, epsilon = 1e-12);
        let identity = DMatrix::<f64>::identity(2, 2);
        assert!((s.projector() - identity).amax() < 1e-12);
    }

    #[test]
    fn duplicate_columns_do_not_change_span() {
        let v = [0.6, 0.8, 0.0];
        let a = word_subspace(&cols(3, &[&v, &v]), 1).unwrap();
        let b = word_subspace(&cols(3, &[&v]), 1).unwrap();
        assert!(projector_distance(&a, &b) < 1e-12);
    }

    #[test]
    fn dimension_beyond_rank_is_rejected() {
        let x = cols(3, &[&[1.0, 0.0, 0.0], &[2.0, 0.0, 0.0]]);
        match word_subspace(&x, 2) {
            Err(Error::Dimension { requested, cap }) => assert_eq!((requested, cap), (2, 1)),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(word_subspace_with(&x, DimPolicy::AtMost(5)).unwrap().dim(), 1);
    }

    #[test]
    fn zero_column_is_degenerate() {
        let x = cols(2, &[&[1.0, 0.0], &[0.0, 0.0]]);
        assert!(matches!(word_subspace(&x, 1), Err(Error::DegenerateInput(_))));
        assert!(normalize_columns(&x).is_err());
    }

    #[test]
    fn weighted_examples() {
        let x = cols(2, &[&[1.0, 0.0], &[0.0, 1.0]]);
        let w = WeightVector::new(vec![4.0, 1.0]).unwrap();
        let s = weighted_word_subspace(&x, &w, 1).unwrap();
        assert_abs_diff_eq!(s.basis()[(0, 0)].abs(), 1.0, epsilon = 1e-12);
        // Squared singular values (4, 1) over the weight total 5.
        assert_abs_diff_eq!(s.spectrum()[0], 0.8, epsilon = 1e-12);

        let x = cols(3, &[&[1.0, 2.0, 0.0], &[0.0, 1.0, 1.0], &[1.0, 0.0, 3.0]]);
        let ones = WeightVector::new(vec![1.0; 3]).unwrap();
        for m in 1..=3 {
            let a = weighted_word_subspace(&x, &ones, m).unwrap();
            let b = word_subspace(&x, m).unwrap();
            assert!(projector_distance(&a, &b) < 1e-10);
        }

        let v = [3.0, 4.0];
        let s = weighted_word_subspace(&cols(2, &[&v]), &WeightVector::new(vec![7.0]).unwrap(), 1).unwrap();
        assert_abs_diff_eq!(s.basis()[(0, 0)].abs(), 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(s.basis()[(1, 0)].abs(), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn weight_validation() {
        assert!(matches!(WeightVector::new(vec![1.0, 0.0]), Err(Error::Weight { index: 1, .. })));
        assert!(WeightVector::new(vec![-1.0]).is_err());
        let x = cols(2, &[&[1.0, 0.0]]);
        let w = WeightVector::new(vec![1.0, 1.0]).unwrap();
        assert!(weighted_word_subspace(&x, &w, 1).is_err());
    }

    #[test]
    fn canonical_cosine_examples() {
        let c = canonical_cosines(&span(4, &[0, 1]), &span(4, &[0, 1])).unwrap();
        assert_eq!(c, vec![1.0, 1.0]);
        let c = canonical_cosines(&span(4, &[0, 1]), &span(4, &[2, 3])).unwrap();
        assert_eq!(c, vec![0.0, 0.0]);
        let c = canonical_cosines(&span(3, &[0, 1]), &span(3, &[0, 2])).unwrap();
        assert_abs_diff_eq!(c[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[1], 0.0, epsilon = 1e-12);
        assert!(matches!(
            canonical_cosines(&span(3, &[0]), &span(4, &[0])),
            Err(Error::AmbientMismatch { .. })
        ));
    }

    #[test]
    fn similarity_examples() {
        let a = span(3, &[0, 1]);
        assert_abs_diff_eq!(similarity(&a, &a, 1).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(similarity(&a, &a, 2).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(similarity(&span(4, &[0, 1]), &span(4, &[2, 3]), 2).unwrap(), 0.0);
        assert_abs_diff_eq!(
            similarity(&a, &span(3, &[0, 2]), 2).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert!(matches!(similarity(&a, &a, 0), Err(Error::AngleCount { .. })));
        assert!(matches!(similarity(&a, &a, 3), Err(Error::AngleCount { .. })));
    }

    #[test]
    fn mismatched_dimensions_allowed_either_order() {
        let big = span(4, &[0, 1, 2]);
        let small = span(4, &[1]);
        assert_eq!(canonical_cosines(&big, &small).unwrap().len(), 1);
        assert_eq!(canonical_cosines(&small, &big).unwrap().len(), 1);
    }

    #[test]
    fn leading_truncates_prefix() {
        let x = cols(3, &[&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 3.0]]);
        let s = word_subspace(&x, 3).unwrap();
        let l = s.leading(1).unwrap();
        assert_eq!(l.dim(), 1);
        assert_abs_diff_eq!(l.basis()[(2, 0)], 1.0, epsilon = 1e-12);
        assert!(s.leading(0).is_err() && s.leading(4).is_err());
    }

    #[test]
    fn full_spectrum_padded_with_zeros() {
        let x = cols(3, &[&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]);
        let values = autocorrelation_spectrum(&x).unwrap();
        assert_eq!(values.len(), 3);
        assert_abs_diff_eq!(values[0], 1.0, epsilon = 1e-12);
        assert!(values[1].abs() < 1e-12 && values[2] == 0.0);
    }

    #[test]
    fn from_parts_validation() {
        let bad = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        assert!(Subspace::from_parts(bad, vec![1.0], 1).is_err());
        let good = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        assert!(Subspace::from_parts(good.clone(), vec![1.0, 0.5], 1).is_err());
        let s = Subspace::from_parts(good, vec![-1e-13], 1).unwrap();
        assert_eq!(s.spectrum(), &[0.0]);
    }
}
