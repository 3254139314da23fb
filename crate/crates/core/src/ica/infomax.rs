//! Neural entropy-maximization ICA with a logistic output nonlinearity.
//!
//! The learning rule is
//! `dW = lr * ([W^T]^{-1} + (1 - 2y) x^T)` with `y = sigmoid(W x + w0)`,
//! applied over shuffled mini-batches; the bias moves with the batch mean of
//! `1 - 2y`. The learning rate is annealed whenever the epoch update norm
//! grows, and convergence is declared when the epoch's relative update
//! `||dW||_F / ||W||_F` falls below the tolerance.

use std::time::Instant;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::{Diagnostics, IcaConfig, UnmixingResult};
use crate::error::{Error, Result};
use crate::linalg;
use crate::preprocess::{DataMatrix, WhiteningResult};

/// Mini-batch size cap; the effective size is `min(256, P)`.
const BATCH_CAP: usize = 256;
/// Condition-number ceiling beyond which the run is declared divergent.
const COND_LIMIT: f64 = 1e12;

pub fn infomax(
    z: &DataMatrix,
    whitening: &WhiteningResult,
    cfg: &IcaConfig,
) -> Result<UnmixingResult> {
    let start = Instant::now();
    cfg.validate(z.n_samples())?;
    let d = z.n_channels();
    let p = z.n_samples();
    if whitening.q.nrows() != d {
        return Err(Error::invalid("whitening result does not match data"));
    }

    // A single retained component leaves nothing to separate; the scale and
    // sign are unidentifiable anyway, so the identity unmixing is returned.
    if d == 1 {
        return Ok(UnmixingResult {
            w: Array2::eye(1),
            w_total: whitening.q.clone(),
            sources: z.values().clone(),
            iterations: 0,
            converged: true,
            elapsed_seconds: start.elapsed().as_secs_f64(),
            diagnostics: Diagnostics::default(),
        });
    }

    let mut lr = cfg
        .learning_rate
        .unwrap_or(0.01 / ((d as f64) + 1.0).ln());
    let batch = BATCH_CAP.min(p);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);

    let mut w = Array2::<f64>::eye(d);
    let mut bias = Array1::<f64>::zeros(d);
    let mut last_stable = w.clone();
    let mut indices: Vec<usize> = (0..p).collect();
    let mut prev_epoch_norm = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iters {
        iterations += 1;
        indices.shuffle(&mut rng);
        let epoch_start_w = w.clone();

        for chunk in indices.chunks(batch) {
            let xb = z.values().select(Axis(1), chunk);
            let b = chunk.len() as f64;

            let (w_inv, cond) = match linalg::inverse_with_cond(&w) {
                Some(ok) => ok,
                None => {
                    return Err(Error::Divergence {
                        message: "unmixing matrix became singular".into(),
                        last_w: Box::new(last_stable),
                    })
                }
            };
            if cond > COND_LIMIT {
                return Err(Error::Divergence {
                    message: format!("condition number {cond:.3e} exceeds {COND_LIMIT:.0e}"),
                    last_w: Box::new(last_stable),
                });
            }
            last_stable = w.clone();

            let mut u = w.dot(&xb);
            u += &bias.view().insert_axis(Axis(1));
            let t = u.mapv(|v| 1.0 - 2.0 * sigmoid(v));

            let mut grad = t.dot(&xb.t()) / b;
            grad += &w_inv.t();
            w.scaled_add(lr, &grad);
            bias.scaled_add(lr, &t.mean_axis(Axis(1)).unwrap());
        }

        let delta = linalg::frobenius(&(&w - &epoch_start_w));
        let rel = delta / linalg::frobenius(&epoch_start_w);
        if rel < cfg.tol {
            converged = true;
            break;
        }
        if delta > prev_epoch_norm {
            lr *= cfg.anneal;
        }
        prev_epoch_norm = delta;
    }

    let mut diagnostics = Diagnostics::default();
    if !converged {
        diagnostics
            .warnings
            .push(format!("no convergence within {} epochs", cfg.max_iters));
    }

    Ok(UnmixingResult {
        w_total: w.dot(&whitening.q),
        sources: w.dot(z.values()),
        w,
        iterations,
        converged,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        diagnostics,
    })
}

#[inline]
fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}
