//! Second-order blind identification: whitening, a set of symmetrized lagged
//! covariance matrices, and their joint diagonalization. Works whenever the
//! sources carry distinct temporal (here: spatial) correlation structure.

use std::time::Instant;

use super::{Diagnostics, IcaConfig, UnmixingResult};
use crate::error::Result;
use crate::jointdiag::{joint_diagonalize, MatrixSet};
use crate::preprocess::{lagged_covariance, whiten, DataMatrix, WhiteningResult, DEFAULT_DROP_TOL};

pub fn sobi(x: &DataMatrix, cfg: &IcaConfig) -> Result<(UnmixingResult, WhiteningResult)> {
    let start = Instant::now();
    cfg.validate(x.n_samples())?;
    let (z, wres) = whiten(x, DEFAULT_DROP_TOL)?;
    let p = z.n_samples();

    let mut matrices = Vec::with_capacity(cfg.lags.len());
    let mut all_below_noise = true;
    for &lag in &cfg.lags {
        let r = lagged_covariance(&z, lag)?;
        // Entries of a lagged covariance of white data fluctuate at the
        // 1/sqrt(P - lag) scale; staying below 10x that for every lag means
        // there is no temporal structure to exploit.
        let noise = 10.0 / ((p - lag) as f64).sqrt();
        let max_abs = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max_abs >= noise {
            all_below_noise = false;
        }
        matrices.push(r);
    }

    let jd = joint_diagonalize(&MatrixSet::new(matrices)?, cfg.tol, cfg.max_iters)?;
    let w = jd.u.t().to_owned();

    let mut diagnostics = Diagnostics {
        mixing_estimate: Some(wres.q_pinv.dot(&jd.u)),
        warnings: Vec::new(),
    };
    let mut converged = jd.converged;
    if all_below_noise {
        diagnostics.warnings.push(
            "non-separable: all lagged covariances are within sampling noise of zero".into(),
        );
        converged = false;
    }

    let result = UnmixingResult {
        w_total: w.dot(&wres.q),
        sources: w.dot(z.values()),
        w,
        iterations: jd.sweeps,
        converged,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        diagnostics,
    };
    Ok((result, wres))
}
