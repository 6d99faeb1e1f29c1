//! Bilateral scalar bounds for norms of solutions of nonlinear delay systems.
//!
//! A vector system with multiple bounded time-varying delays,
//!
//! ```text
//! x' = A* x + G*(t) x + f*(t, x(t), x(t - h_1(t)), ..., x(t - h_m(t))) + F*(t)
//! ```
//!
//! is rewritten in the eigenbasis of the averaged matrix `A*` and compressed
//! into two *scalar* delay equations whose solutions `Z(t)` and `z(t)` bound
//! the Euclidean norm of every solution with matched history:
//!
//! ```text
//! z(t) / |V^-1|  <=  |x(t)|  <=  |V| Z(t)
//! ```
//!
//! The scalar equations keep the delays and the time-varying coefficients but
//! drop the dimension, so boundedness, instability, finite-time stability and
//! stability-region questions about the vector system reduce to cheap scalar
//! simulations. The crate provides
//!
//! * [`spectral`] -- eigen-structure of `A*`, induced norms, the diagonal
//!   offset split `g = G - i Im(diag G)` and finite-horizon averaging;
//! * [`dde`] -- a fixed-step Runge-Kutta integrator for vector and scalar
//!   delay equations with cubic-Hermite dense output, blowup detection and a
//!   nonnegativity clamp;
//! * [`system`] -- the vector delay system carrier, its eigenbasis form and
//!   the coupled Van der Pol / Duffing benchmark oscillators;
//! * [`majorant`] -- scalar dominating functions for polynomial
//!   nonlinearities, their verification, linearization and autonomization;
//! * [`bounds`] -- assembly and solution of the upper/lower scalar
//!   equations and the bilateral envelope check;
//! * [`analysis`] -- boundedness/instability classification, finite-time
//!   stability checks, blowup-radius bisection and stability-region scans;
//! * [`presets`], [`config`], [`runner`], [`plot`] -- the experiment
//!   front end behind the `bilat-dde` binary.

pub mod analysis;
pub mod bounds;
pub mod config;
pub mod dde;
pub mod error;
pub mod majorant;
pub mod plot;
pub mod presets;
pub mod runner;
pub mod spectral;
pub mod system;
pub mod timefn;

pub use error::{Error, Result};

/// Cap the rayon worker pool from the `BILAT_DDE_THREADS` environment
/// variable. Call once at process start; later calls are ignored.
pub fn init_thread_pool() {
    if let Ok(v) = std::env::var("BILAT_DDE_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
