//! The four blind-source-separation estimators and their shared types.
//!
//! [`infomax`] and [`fastica`] operate on whitened data; [`sobi`] and
//! [`jade`] whiten internally. [`separate`] dispatches on
//! [`IcaConfig::algorithm`] and handles whitening uniformly.

pub mod contrast;
pub mod fastica;
pub mod infomax;
pub mod jade;
pub mod sobi;

use std::time::Instant;

use ndarray::Array2;

pub use contrast::{negentropy_contrast, Contrast};
pub use fastica::{fastica, fastica_with_init};
pub use infomax::infomax;
pub use jade::{jade, quadricov_identity, quadricov_projected};
pub use sobi::sobi;

use crate::error::{Error, Result};
use crate::preprocess::{whiten, DataMatrix, WhiteningResult, DEFAULT_DROP_TOL};

/// Estimator selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Infomax,
    FastIca,
    Jade,
    Sobi,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Infomax => "infomax",
            Algorithm::FastIca => "fastica",
            Algorithm::Jade => "jade",
            Algorithm::Sobi => "sobi",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "infomax" => Ok(Algorithm::Infomax),
            "fastica" => Ok(Algorithm::FastIca),
            "jade" => Ok(Algorithm::Jade),
            "sobi" => Ok(Algorithm::Sobi),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Estimator configuration. `new` fills per-algorithm defaults; fields the
/// selected algorithm does not use are ignored.
#[derive(Debug, Clone)]
pub struct IcaConfig {
    pub algorithm: Algorithm,
    /// Iteration budget: epochs (InfoMax), fixed-point iterations (FastICA)
    /// or diagonalization sweeps (JADE, SOBI).
    pub max_iters: usize,
    /// Convergence tolerance: relative update norm (InfoMax), direction
    /// alignment (FastICA) or rotation angle in radians (JADE, SOBI).
    pub tol: f64,
    /// InfoMax step size; `None` selects 0.01 / ln(d + 1).
    pub learning_rate: Option<f64>,
    /// InfoMax learning-rate multiplier applied whenever the epoch update
    /// norm grows; must lie in (0, 1].
    pub anneal: f64,
    /// FastICA contrast function.
    pub contrast: Contrast,
    /// SOBI time lags, strictly increasing positive integers below P.
    pub lags: Vec<usize>,
    /// Seed for every randomized choice (initial weights, batch shuffling).
    pub seed: u64,
}

impl IcaConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        let (max_iters, tol) = match algorithm {
            Algorithm::Infomax => (512, 1e-6),
            Algorithm::FastIca => (200, 1e-4),
            // Jacobi sweeps; tol is the rotation-angle threshold.
            Algorithm::Jade | Algorithm::Sobi => (100, 1e-8),
        };
        IcaConfig {
            algorithm,
            max_iters,
            tol,
            learning_rate: None,
            anneal: 0.9,
            contrast: Contrast::LogCosh { a1: 1.0 },
            lags: (1..=10).collect(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks the invariants that do not depend on the data, plus the lag
    /// bound against the sample count.
    pub fn validate(&self, n_samples: usize) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.anneal > 0.0 && self.anneal <= 1.0) {
            return Err(Error::invalid("anneal must lie in (0, 1]"));
        }
        if let Some(lr) = self.learning_rate {
            if !(lr > 0.0) {
                return Err(Error::invalid("learning_rate must be positive"));
            }
        }
        self.contrast.validate()?;
        if self.algorithm == Algorithm::Sobi {
            if self.lags.is_empty() {
                return Err(Error::invalid("sobi requires at least one lag"));
            }
            let increasing = self.lags.windows(2).all(|w| w[0] < w[1]);
            if !increasing {
                return Err(Error::invalid("lags must be strictly increasing"));
            }
            if self.lags[0] == 0 {
                return Err(Error::invalid("lags must be positive"));
            }
            if let Some(&last) = self.lags.last() {
                if last >= n_samples {
                    return Err(Error::invalid(format!(
                        "largest lag {last} must be below the sample count {n_samples}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Per-run diagnostics attached to an [`UnmixingResult`].
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    /// Estimated mixing matrix Q^+ U (SOBI and JADE step "estimate the
    /// mixing matrix").
    pub mixing_estimate: Option<Array2<f64>>,
    pub warnings: Vec<String>,
}

/// Outcome of one estimator run.
#[derive(Debug, Clone)]
pub struct UnmixingResult {
    /// d x d unmixing matrix in whitened coordinates.
    pub w: Array2<f64>,
    /// d x N unmixing composed with the whitening matrix (W Q).
    pub w_total: Array2<f64>,
    /// d x P estimated sources, equal to W applied to the whitened data.
    pub sources: Array2<f64>,
    /// Iterations actually used (meaning depends on the algorithm).
    pub iterations: usize,
    pub converged: bool,
    /// Wall-clock estimator time, including internal whitening.
    pub elapsed_seconds: f64,
    pub diagnostics: Diagnostics,
}

/// Centers/whitens as the selected algorithm requires and runs it.
///
/// The estimator timing covers whitening plus estimation so the four
/// algorithms are compared on equal footing.
pub fn separate(x: &DataMatrix, cfg: &IcaConfig) -> Result<(UnmixingResult, WhiteningResult)> {
    match cfg.algorithm {
        Algorithm::Infomax => {
            let start = Instant::now();
            let (z, wres) = whiten(x, DEFAULT_DROP_TOL)?;
            let mut result = infomax(&z, &wres, cfg)?;
            result.elapsed_seconds = start.elapsed().as_secs_f64();
            Ok((result, wres))
        }
        Algorithm::FastIca => {
            let start = Instant::now();
            let (z, wres) = whiten(x, DEFAULT_DROP_TOL)?;
            let mut result = fastica(&z, &wres, cfg)?;
            result.elapsed_seconds = start.elapsed().as_secs_f64();
            Ok((result, wres))
        }
        Algorithm::Jade => jade(x, cfg),
        Algorithm::Sobi => sobi(x, cfg),
    }
}

/// Normalized Amari performance index of G = W_total * A in [0, 1]; zero
/// exactly when G is a signed scaled permutation.
pub fn amari_index(w_total: &Array2<f64>, a: &Array2<f64>) -> Result<f64> {
    if w_total.ncols() != a.nrows() {
        return Err(Error::invalid(format!(
            "inner dimensions disagree: {} vs {}",
            w_total.ncols(),
            a.nrows()
        )));
    }
    let g = w_total.dot(a);
    let d = g.nrows();
    if d != g.ncols() {
        return Err(Error::invalid(format!(
            "performance matrix must be square, got {}x{}",
            g.nrows(),
            g.ncols()
        )));
    }
    if d < 2 {
        return Err(Error::invalid("amari index needs at least 2 components"));
    }
    let mut total = 0.0;
    for i in 0..d {
        let row_max = (0..d).map(|j| g[(i, j)].abs()).fold(0.0f64, f64::max);
        if row_max <= 0.0 {
            return Err(Error::invalid("performance matrix has a zero row"));
        }
        let row_sum: f64 = (0..d).map(|j| g[(i, j)].abs()).sum();
        total += row_sum / row_max - 1.0;
    }
    for j in 0..d {
        let col_max = (0..d).map(|i| g[(i, j)].abs()).fold(0.0f64, f64::max);
        if col_max <= 0.0 {
            return Err(Error::invalid("performance matrix has a zero column"));
        }
        let col_sum: f64 = (0..d).map(|i| g[(i, j)].abs()).sum();
        total += col_sum / col_max - 1.0;
    }
    Ok(total / (2.0 * d as f64 * (d as f64 - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn amari_zero_for_exact_inverse() {
        let a = array![[2.0, 1.0], [0.5, 1.5]];
        let inv = array![[0.6, -0.4], [-0.2, 0.8]]; // A^{-1} for det = 2.5
        let idx = amari_index(&inv, &a).unwrap();
        assert!(idx < 1e-12, "index {idx}");
    }

    #[test]
    fn amari_invariant_to_scale_sign_permutation() {
        let a = array![[2.0, 1.0], [0.5, 1.5]];
        let inv = array![[0.6, -0.4], [-0.2, 0.8]];
        // W = diag(2, -3) P A^{-1} with P the swap permutation.
        let p = array![[0.0, 1.0], [1.0, 0.0]];
        let d = array![[2.0, 0.0], [0.0, -3.0]];
        let w = d.dot(&p).dot(&inv);
        let idx = amari_index(&w, &a).unwrap();
        assert!(idx < 1e-12, "index {idx}");
    }

    #[test]
    fn amari_worst_case_is_one() {
        // G = [[1,1],[1,1]] realized with A = I and W = all-ones.
        let a = array![[1.0, 0.0], [0.0, 1.0]];
        let w = array![[1.0, 1.0], [1.0, 1.0]];
        let idx = amari_index(&w, &a).unwrap();
        assert!((idx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn amari_rejects_dimension_mismatch() {
        let a = array![[1.0, 0.0], [0.0, 1.0]];
        let w = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert!(amari_index(&w, &a).is_err());
    }

    #[test]
    fn config_validation_catches_bad_lags() {
        let mut cfg = IcaConfig::new(Algorithm::Sobi);
        cfg.lags = vec![3, 2];
        assert!(cfg.validate(100).is_err());
        cfg.lags = vec![0, 1];
        assert!(cfg.validate(100).is_err());
        cfg.lags = vec![1, 2, 3];
        assert!(cfg.validate(100).is_ok());
        assert!(cfg.validate(3).is_err());
    }
}
