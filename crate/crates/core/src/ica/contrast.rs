//! Non-quadratic contrast functions and the negentropy approximation
//! J(y) = [E{G(y)} - E{G(v)}]^2, with v a standard Gaussian variable.
//!
//! The Gaussian expectations are evaluated by quadrature rather than
//! hard-coded, so any admissible `a1` works.

use crate::error::{Error, Result};

/// Contrast function choice for FastICA and the negentropy score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Contrast {
    /// G1(u) = (1/a1) log cosh(a1 u), with a1 in [1, 2].
    LogCosh { a1: f64 },
    /// G2(u) = -exp(-u^2 / 2).
    Gauss,
}

impl Contrast {
    pub fn validate(&self) -> Result<()> {
        if let Contrast::LogCosh { a1 } = self {
            if !(*a1 >= 1.0 && *a1 <= 2.0) {
                return Err(Error::invalid(format!(
                    "logcosh a1 must lie in [1,2], got {a1}"
                )));
            }
        }
        Ok(())
    }

    /// G itself.
    pub(crate) fn big_g(&self, u: f64) -> f64 {
        match self {
            Contrast::LogCosh { a1 } => (a1 * u).cosh().ln() / a1,
            Contrast::Gauss => -(-0.5 * u * u).exp(),
        }
    }

    /// g = G', the FastICA update nonlinearity.
    pub(crate) fn g(&self, u: f64) -> f64 {
        match self {
            Contrast::LogCosh { a1 } => (a1 * u).tanh(),
            Contrast::Gauss => u * (-0.5 * u * u).exp(),
        }
    }

    /// g' = G''.
    pub(crate) fn g_prime(&self, u: f64) -> f64 {
        match self {
            Contrast::LogCosh { a1 } => {
                let t = (a1 * u).tanh();
                a1 * (1.0 - t * t)
            }
            Contrast::Gauss => {
                let e = (-0.5 * u * u).exp();
                (1.0 - u * u) * e
            }
        }
    }

    /// E{G(v)} for a standard Gaussian v, by composite Simpson quadrature.
    pub fn gaussian_expectation(&self) -> f64 {
        gauss_quadrature(|u| self.big_g(u))
    }

    /// Var{G(v)} for a standard Gaussian v; the sampling-noise scale of
    /// mean(G(y)) over P samples is sqrt(Var{G(v)} / P).
    pub(crate) fn gaussian_variance(&self) -> f64 {
        let mean = self.gaussian_expectation();
        let second = gauss_quadrature(|u| {
            let g = self.big_g(u);
            g * g
        });
        (second - mean * mean).max(0.0)
    }
}

/// Integral of f(u) * phi(u) over u in [-12, 12], phi the standard normal
/// density. Simpson with 4800 intervals; the truncation and discretization
/// errors are far below every tolerance in this crate.
fn gauss_quadrature(f: impl Fn(f64) -> f64) -> f64 {
    const LIMIT: f64 = 12.0;
    const STEPS: usize = 4800; // even
    let h = 2.0 * LIMIT / STEPS as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let phi = |u: f64| norm * (-0.5 * u * u).exp();
    let mut acc = f(-LIMIT) * phi(-LIMIT) + f(LIMIT) * phi(LIMIT);
    for k in 1..STEPS {
        let u = -LIMIT + k as f64 * h;
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(u) * phi(u);
    }
    acc * h / 3.0
}

/// Negentropy approximation of a unit-variance sample:
/// `[mean(G(y)) - E{G(v)}]^2`.
///
/// The sample variance must lie in [0.9, 1.1]; the approximation is only
/// meaningful near unit variance.
pub fn negentropy_contrast(y: &[f64], contrast: Contrast) -> Result<f64> {
    contrast.validate()?;
    if y.is_empty() {
        return Err(Error::invalid("negentropy of an empty sample"));
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if !(0.9..=1.1).contains(&var) {
        return Err(Error::invalid(format!(
            "negentropy requires variance in [0.9, 1.1], got {var:.4}"
        )));
    }
    let mean_g = y.iter().map(|&v| contrast.big_g(v)).sum::<f64>() / n;
    let diff = mean_g - contrast.gaussian_expectation();
    Ok(diff * diff)
}
