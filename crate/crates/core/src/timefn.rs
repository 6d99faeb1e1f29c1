//! Shared-ownership evaluator aliases for time-dependent data.
//!
//! Coefficients, delays, forcing directions and offset matrices are all pure
//! functions of time. Keeping them behind `Arc` lets systems be cloned
//! cheaply and shared across worker threads.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

/// Scalar function of time.
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Vector-valued function of time.
pub type VecFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

/// Matrix-valued function of time.
pub type MatrixFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

pub fn constant(c: f64) -> TimeFn {
    Arc::new(move |_| c)
}

pub fn zero_matrix(n: usize) -> MatrixFn {
    Arc::new(move |_| DMatrix::zeros(n, n))
}

/// `c0 + sum_k a_k * sin(w_k t + p_k)`, the coefficient shape used by every
/// benchmark system in this crate.
#[derive(Debug, Clone, Default)]
pub struct SinusoidSum {
    pub constant: f64,
    /// `(amplitude, angular frequency, phase)` triples.
    pub terms: Vec<(f64, f64, f64)>,
}

impl SinusoidSum {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    pub fn sinusoid(amp: f64, freq: f64) -> Self {
        Self { constant: 0.0, terms: vec![(amp, freq, 0.0)] }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut v = self.constant;
        for &(a, w, p) in &self.terms {
            v += a * (w * t + p).sin();
        }
        v
    }

    /// Conservative range of values: `constant ± sum |a_k|`.
    pub fn envelope(&self) -> (f64, f64) {
        let spread: f64 = self.terms.iter().map(|&(a, _, _)| a.abs()).sum();
        (self.constant - spread, self.constant + spread)
    }

    pub fn into_fn(self) -> TimeFn {
        Arc::new(move |t| self.eval(t))
    }
}
