//! Observation matrices and the preprocessing every separation algorithm
//! shares: centering, sample covariance, eigendecomposition whitening and
//! lagged covariance estimation.
//!
//! Covariance uses the population normalization (1/P) throughout the crate;
//! consistency across modules matters more here than unbiasedness.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg;

/// Relative eigenvalue threshold below which whitening discards a direction.
pub const DEFAULT_DROP_TOL: f64 = 1e-12;

/// An N x P matrix of observations: one channel per row (a vectorized B-scan
/// in the imaging pipeline), one sample per column. Rows keep acquisition
/// order. Entries are finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Array2<f64>,
}

impl DataMatrix {
    /// Wraps a raw observation matrix. Requires at least two channels, at
    /// least as many samples as channels, and finite entries.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (n, p) = values.dim();
        if n < 2 {
            return Err(Error::invalid(format!("need at least 2 channels, got {n}")));
        }
        if p < n {
            return Err(Error::invalid(format!(
                "need at least as many samples as channels (N={n}, P={p})"
            )));
        }
        Self::from_rows_unchecked_shape(values)
    }

    /// Wraps derived data (whitened signals, estimated sources) where a single
    /// retained channel is legitimate. Still validates finiteness.
    pub(crate) fn from_rows_unchecked_shape(values: Array2<f64>) -> Result<Self> {
        let (n, p) = values.dim();
        if n == 0 || p == 0 {
            return Err(Error::invalid("empty matrix"));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("matrix contains non-finite entries"));
        }
        Ok(DataMatrix { values })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    /// Number of channels (rows).
    pub fn n_channels(&self) -> usize {
        self.values.nrows()
    }

    /// Number of samples per channel (columns).
    pub fn n_samples(&self) -> usize {
        self.values.ncols()
    }
}

/// Output of [`whiten`]: the whitening matrix, its pseudo-inverse, the
/// per-channel means removed beforehand and the eigenvalue spectrum of the
/// input covariance (descending, full length N).
#[derive(Debug, Clone)]
pub struct WhiteningResult {
    /// d x N whitening matrix.
    pub q: Array2<f64>,
    /// N x d pseudo-inverse of `q` (exact for the eigendecomposition form).
    pub q_pinv: Array2<f64>,
    /// Per-channel means of the raw input.
    pub means: Array1<f64>,
    /// Retained dimension d <= N.
    pub retained_dim: usize,
    /// All N covariance eigenvalues, descending.
    pub eigenvalues: Array1<f64>,
}

/// Removes each channel's mean. Returns the centered matrix and the means
/// that reproduce the input by addition.
pub fn center(x: &DataMatrix) -> Result<(DataMatrix, Array1<f64>)> {
    let p = x.n_samples() as f64;
    let means = x.values.sum_axis(ndarray::Axis(1)) / p;
    let mut centered = x.values.clone();
    for (mut row, &m) in centered.rows_mut().into_iter().zip(means.iter()) {
        row.mapv_inplace(|v| v - m);
    }
    Ok((DataMatrix::from_rows_unchecked_shape(centered)?, means))
}

/// Sample covariance C = (1/P) Xc Xc^T of a centered matrix. The result is
/// exactly symmetric.
pub fn covariance(xc: &DataMatrix) -> Result<Array2<f64>> {
    let p = xc.n_samples();
    if p == 0 {
        return Err(Error::invalid("covariance of an empty sample set"));
    }
    let mut c = xc.values.dot(&xc.values.t()) / p as f64;
    symmetrize(&mut c);
    Ok(c)
}

/// Forces exact bitwise symmetry in place.
pub(crate) fn symmetrize(a: &mut Array2<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Centers and whitens the observations so the output has identity covariance.
///
/// Eigenpairs of the covariance with `lambda <= drop_tol * lambda_max` are
/// discarded; the retained dimension is reported in the result. The whitening
/// matrix is `Q = diag(lambda_kept)^{-1/2} E_kept^T`.
pub fn whiten(x: &DataMatrix, drop_tol: f64) -> Result<(DataMatrix, WhiteningResult)> {
    if !(drop_tol > 0.0 && drop_tol < 1.0) {
        return Err(Error::invalid(format!(
            "drop_tol must lie in (0,1), got {drop_tol}"
        )));
    }
    let n = x.n_channels();
    let (xc, means) = center(x)?;
    let cov = covariance(&xc)?;
    let (eigenvalues, eigenvectors) = linalg::sym_eigen(&cov);

    let lambda_max = eigenvalues[0];
    if !(lambda_max > 1e-300) {
        return Err(Error::DegenerateInput(
            "covariance is numerically zero; cannot whiten".into(),
        ));
    }
    let threshold = drop_tol * lambda_max;
    let d = eigenvalues.iter().take_while(|&&l| l > threshold).count();

    let mut q = Array2::<f64>::zeros((d, n));
    let mut q_pinv = Array2::<f64>::zeros((n, d));
    for k in 0..d {
        let root = eigenvalues[k].sqrt();
        for j in 0..n {
            q[(k, j)] = eigenvectors[(j, k)] / root;
            q_pinv[(j, k)] = eigenvectors[(j, k)] * root;
        }
    }

    let z = q.dot(&xc.values);
    Ok((
        DataMatrix::from_rows_unchecked_shape(z)?,
        WhiteningResult {
            q,
            q_pinv,
            means,
            retained_dim: d,
            eigenvalues,
        },
    ))
}

/// Symmetrized lagged covariance of whitened data:
/// `R(p) = 1/(P-p) * sum_t z(t) z(t-p)^T`, then `(R + R^T)/2`.
pub fn lagged_covariance(z: &DataMatrix, lag: usize) -> Result<Array2<f64>> {
    let p_total = z.n_samples();
    if lag >= p_total {
        return Err(Error::invalid(format!(
            "lag {lag} out of range for {p_total} samples"
        )));
    }
    let span = p_total - lag;
    let leading = z.values.slice(ndarray::s![.., lag..]);
    let trailing = z.values.slice(ndarray::s![.., ..span]);
    let mut r = leading.dot(&trailing.t()) / span as f64;
    symmetrize(&mut r);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_matrix(n: usize, p: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let values = Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng));
        DataMatrix::new(values).unwrap()
    }

    #[test]
    fn center_small_example() {
        let x = DataMatrix::new(array![[1.0, 3.0], [2.0, 2.0]]).unwrap();
        let (c, means) = center(&x).unwrap();
        assert_eq!(c.values(), &array![[-1.0, 1.0], [0.0, 0.0]]);
        assert_eq!(means, array![2.0, 2.0]);
    }

    #[test]
    fn center_zero_mean_rows_unchanged() {
        let x = DataMatrix::new(array![[1.0, -1.0], [2.0, -2.0]]).unwrap();
        let (c, means) = center(&x).unwrap();
        assert_eq!(c.values(), x.values());
        assert_eq!(means, array![0.0, 0.0]);
    }

    #[test]
    fn center_random_rows_have_tiny_means() {
        // Oracle: direct summation of the output rows.
        let x = random_matrix(5, 1000, 11);
        let (c, _) = center(&x).unwrap();
        for row in c.values().rows() {
            let m: f64 = row.iter().sum::<f64>() / row.len() as f64;
            assert!(m.abs() < 1e-12, "row mean {m}");
        }
    }

    #[test]
    fn center_rejects_non_finite() {
        let err = DataMatrix::new(array![[f64::NAN, 1.0], [0.0, 1.0]]);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn covariance_small_example() {
        let xc = DataMatrix::new(array![[1.0, -1.0], [1.0, -1.0]]).unwrap();
        let c = covariance(&xc).unwrap();
        assert_eq!(c, array![[1.0, 1.0], [1.0, 1.0]]);
    }

    #[test]
    fn covariance_orthogonal_rows() {
        // Orthogonal sequences: sin and cos over full periods.
        let p = 1000;
        let rows = Array2::from_shape_fn((2, p), |(i, t)| {
            let phase = 2.0 * std::f64::consts::PI * t as f64 / p as f64;
            if i == 0 {
                phase.sin()
            } else {
                phase.cos()
            }
        });
        let xc = DataMatrix::new(rows).unwrap();
        let c = covariance(&xc).unwrap();
        assert!(c[(0, 1)].abs() < 1e-12);
        assert!(c[(1, 0)].abs() < 1e-12);
    }

    #[test]
    fn covariance_of_white_noise_near_identity() {
        // Monte-Carlo oracle: 3x10000 independent unit-variance noise.
        let x = random_matrix(3, 10_000, 5);
        let (c, _) = center(&x).unwrap();
        let cov = covariance(&c).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (cov[(i, j)] - target).abs() < 0.05,
                    "cov[{i},{j}] = {}",
                    cov[(i, j)]
                );
            }
        }
    }

    #[test]
    fn whiten_diagonal_covariance() {
        // Rows with variances 4 and 1 -> Q = diag(1/2, 1) up to sign/order.
        let p = 4000;
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut values = Array2::<f64>::zeros((2, p));
        for t in 0..p {
            // Exactly orthogonal, exactly variance 4 and 1.
            let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
            values[(0, t)] = 2.0 * sign;
            values[(1, t)] = if (t / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let _ = rng.gen::<f64>();
        }
        let x = DataMatrix::new(values).unwrap();
        let (_, w) = whiten(&x, 1e-12).unwrap();
        assert_eq!(w.retained_dim, 2);
        let q_abs: Vec<f64> = w.q.iter().map(|v| v.abs()).collect();
        let mut sorted = q_abs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Entries are {0, 0, 1/2, 1} in some order.
        assert!(sorted[0] < 1e-9 && sorted[1] < 1e-9);
        assert!((sorted[2] - 0.5).abs() < 1e-9);
        assert!((sorted[3] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn whiten_rank_deficient_stack() {
        let base: Vec<f64> = (0..100).map(|t| (t as f64 * 0.37).sin()).collect();
        let mut values = Array2::<f64>::zeros((3, 100));
        for t in 0..100 {
            values[(0, t)] = base[t];
            values[(1, t)] = 2.0 * base[t];
            values[(2, t)] = -0.5 * base[t];
        }
        let x = DataMatrix::new(values).unwrap();
        let (z, w) = whiten(&x, 1e-12).unwrap();
        assert_eq!(w.retained_dim, 1);
        assert_eq!(z.n_channels(), 1);
    }

    #[test]
    fn whiten_output_covariance_is_identity() {
        // Oracle: recompute the covariance of the whitened output.
        let x = random_matrix(6, 5000, 17);
        let (z, w) = whiten(&x, 1e-12).unwrap();
        assert_eq!(w.retained_dim, 6);
        let cov = covariance(&z).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (cov[(i, j)] - target).abs() < 1e-8,
                    "cov[{i},{j}] = {}",
                    cov[(i, j)]
                );
            }
        }
        // Q Q^+ = I_d.
        let qq = w.q.dot(&w.q_pinv);
        for i in 0..6 {
            for j in 0..6 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((qq[(i, j)] - target).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn whiten_rejects_zero_covariance() {
        let x = DataMatrix::new(Array2::from_elem((3, 10), 0.25)).unwrap();
        assert!(matches!(
            whiten(&x, 1e-12),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn whiten_rejects_bad_drop_tol() {
        let x = random_matrix(2, 10, 0);
        assert!(whiten(&x, 0.0).is_err());
        assert!(whiten(&x, 1.0).is_err());
    }

    #[test]
    fn lagged_covariance_zero_lag_is_identity_on_whitened() {
        let x = random_matrix(4, 2000, 23);
        let (z, _) = whiten(&x, 1e-12).unwrap();
        let r0 = lagged_covariance(&z, 0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((r0[(i, j)] - target).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn lagged_covariance_white_rows_vanish() {
        // Monte-Carlo oracle: i.i.d. rows decorrelate at positive lags.
        let x = random_matrix(2, 100_000, 31);
        let r = lagged_covariance(&x, 5).unwrap();
        for v in r.iter() {
            assert!(v.abs() < 0.05, "lagged entry {v}");
        }
    }

    #[test]
    fn lagged_covariance_sinusoid_period() {
        // Autocorrelation of a sinusoid at a full period matches lag zero.
        let period = 20usize;
        let p = 100_000;
        let mut values = Array2::<f64>::zeros((2, p));
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for t in 0..p {
            values[(0, t)] = (2.0 * std::f64::consts::PI * t as f64 / period as f64).sin();
            values[(1, t)] = StandardNormal.sample(&mut rng);
        }
        let x = DataMatrix::new(values).unwrap();
        let r0 = lagged_covariance(&x, 0).unwrap();
        let rt = lagged_covariance(&x, period).unwrap();
        assert!((rt[(0, 0)] - r0[(0, 0)]).abs() < 0.05);
    }

    #[test]
    fn lagged_covariance_rejects_oversized_lag() {
        let x = random_matrix(2, 10, 1);
        assert!(lagged_covariance(&x, 10).is_err());
    }

    #[test]
    fn lagged_covariance_exactly_symmetric() {
        let x = random_matrix(5, 3000, 77);
        let r = lagged_covariance(&x, 3).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(r[(i, j)].to_bits(), r[(j, i)].to_bits());
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn center_is_idempotent(seed in 0u64..1000, n in 2usize..6, p in 6usize..40) {
            let p = p.max(n);
            let x = random_matrix(n, p, seed);
            let (c1, _) = center(&x).unwrap();
            let (c2, means2) = center(&c1).unwrap();
            for (a, b) in c1.values().iter().zip(c2.values().iter()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            for m in means2.iter() {
                prop_assert!(m.abs() < 1e-12);
            }
        }

        #[test]
        fn whiten_always_yields_identity_covariance(seed in 0u64..1000, n in 2usize..8) {
            let x = random_matrix(n, 50 * n, seed);
            let (z, _) = whiten(&x, 1e-12).unwrap();
            let cov = covariance(&z).unwrap();
            for i in 0..z.n_channels() {
                for j in 0..z.n_channels() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((cov[(i, j)] - target).abs() < 1e-8);
                }
            }
        }

        #[test]
        fn whitening_roundtrip_reconstructs(seed in 0u64..1000, n in 2usize..6) {
            // Q^+ Q Xc = Xc when no dimension is dropped.
            let x = random_matrix(n, 40 * n, seed);
            let (xc, _) = center(&x).unwrap();
            let (z, w) = whiten(&x, 1e-12).unwrap();
            prop_assume!(w.retained_dim == n);
            let rec = w.q_pinv.dot(z.values());
            let num = (&rec - xc.values()).iter().map(|v| v * v).sum::<f64>().sqrt();
            let den = xc.values().iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(num / den < 1e-6);
        }
    }
}
