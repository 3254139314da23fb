//! Fixed-point negentropy-maximizing ICA in its symmetric (parallel) form:
//! all rows are updated together and re-orthogonalized each iteration,
//! avoiding the error accumulation of one-unit deflation.

use std::time::Instant;

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::{Diagnostics, IcaConfig, UnmixingResult};
use crate::error::{Error, Result};
use crate::linalg;
use crate::preprocess::{DataMatrix, WhiteningResult};

/// Runs FastICA with a seeded random initial weight matrix.
pub fn fastica(
    z: &DataMatrix,
    whitening: &WhiteningResult,
    cfg: &IcaConfig,
) -> Result<UnmixingResult> {
    fastica_with_init(z, whitening, cfg, None)
}

/// Runs FastICA from a caller-supplied initial weight matrix (rows need not
/// be orthonormal; they are symmetrically orthogonalized before use).
pub fn fastica_with_init(
    z: &DataMatrix,
    whitening: &WhiteningResult,
    cfg: &IcaConfig,
    init: Option<Array2<f64>>,
) -> Result<UnmixingResult> {
    let start = Instant::now();
    cfg.validate(z.n_samples())?;
    let d = z.n_channels();
    let p = z.n_samples() as f64;
    if whitening.q.nrows() != d {
        return Err(Error::invalid("whitening result does not match data"));
    }

    let w0 = match init {
        Some(w) => {
            if w.nrows() != d || w.ncols() != d {
                return Err(Error::invalid(format!(
                    "initial W must be {d}x{d}, got {}x{}",
                    w.nrows(),
                    w.ncols()
                )));
            }
            w
        }
        None => {
            let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
            Array2::from_shape_fn((d, d), |_| rng.gen::<f64>() * 2.0 - 1.0)
        }
    };
    let mut w = symmetric_orthogonalize(&w0)?;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        iterations += 1;
        let wx = w.dot(z.values()); // d x P projections
        let gwx = wx.mapv(|u| cfg.contrast.g(u));
        let gp_mean = wx.mapv(|u| cfg.contrast.g_prime(u)).mean_axis(Axis(1)).unwrap();

        // w_i+ = E{x g(w_i^T x)} - E{g'(w_i^T x)} w_i, all rows at once.
        let mut w_plus = gwx.dot(&z.values().t()) / p;
        for (i, mut row) in w_plus.rows_mut().into_iter().enumerate() {
            row.scaled_add(-gp_mean[i], &w.row(i));
        }
        let w_new = symmetric_orthogonalize(&w_plus)?;

        // Direction alignment per row; opposite directions also count,
        // which is the sign ambiguity of the estimate.
        let worst_alignment = w_new
            .rows()
            .into_iter()
            .zip(w.rows())
            .map(|(a, b)| a.dot(&b).abs())
            .fold(f64::INFINITY, f64::min);
        w = w_new;
        if worst_alignment > 1.0 - cfg.tol {
            converged = true;
            break;
        }
    }

    let mut diagnostics = Diagnostics::default();
    if !converged {
        diagnostics
            .warnings
            .push(format!("no convergence within {} iterations", cfg.max_iters));
    }

    let sources = w.dot(z.values());
    flag_low_nongaussianity(&sources, cfg, &mut diagnostics);

    Ok(UnmixingResult {
        w_total: w.dot(&whitening.q),
        sources,
        w,
        iterations,
        converged,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        diagnostics,
    })
}

/// W <- (W W^T)^{-1/2} W, making the rows exactly orthonormal.
fn symmetric_orthogonalize(w: &Array2<f64>) -> Result<Array2<f64>> {
    let wwt = w.dot(&w.t());
    let (vals, vecs) = linalg::sym_eigen(&wwt);
    let vmax = vals[0];
    if !(vmax > 1e-300) || vals[vals.len() - 1] <= 1e-12 * vmax {
        return Err(Error::DegenerateInput(
            "weight matrix became rank-deficient during orthogonalization".into(),
        ));
    }
    let inv_roots = Array1::from_iter(vals.iter().map(|v| 1.0 / v.sqrt()));
    let scaled = &vecs * &inv_roots; // columns scaled by 1/sqrt(lambda)
    Ok(scaled.dot(&vecs.t()).dot(w))
}

/// Every extracted source indistinguishable from Gaussian at 10x sampling
/// noise means the model cannot identify a rotation; warn rather than fail.
fn flag_low_nongaussianity(sources: &Array2<f64>, cfg: &IcaConfig, diag: &mut Diagnostics) {
    let p = sources.ncols() as f64;
    let noise_var = cfg.contrast.gaussian_variance() / p;
    let threshold = 100.0 * noise_var; // (10 sigma)^2 on the squared score
    let all_low = sources.rows().into_iter().all(|row| {
        let slice: Vec<f64> = row.iter().copied().collect();
        match super::negentropy_contrast(&slice, cfg.contrast) {
            Ok(j) => j < threshold,
            Err(_) => false,
        }
    });
    if all_low {
        diag.warnings.push(
            "non-separable: every component's negentropy is within sampling noise of Gaussian"
                .into(),
        );
    }
}
