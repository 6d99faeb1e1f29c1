//! Fixed-step Runge-Kutta integration of delay differential equations.
//!
//! The integrator advances classical 4-stage steps on a uniform grid and
//! stores node states together with node derivatives, so delayed arguments
//! can be read back from a cubic Hermite interpolant over the already
//! completed part of the trajectory. With the step bounded by half the
//! smallest delay, every delayed stage time lands in completed data or in
//! the history function, which is the method of steps without explicit
//! interval bookkeeping.
//!
//! Breaking points propagated by time-varying delays are not tracked; the
//! local order loss at those isolated times is accepted and covered by the
//! tolerance-based checks downstream.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::timefn::{TimeFn, VecFn};

/// Default uniform step when the configuration leaves it unset.
pub const DEFAULT_DT: f64 = 1e-2;
/// Default norm level treated as unbounded escape.
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e5;

/// The bounded time-varying delays `h_1(t), ..., h_m(t)`.
#[derive(Clone)]
pub struct DelaySet {
    delays: Vec<TimeFn>,
    h_lo: f64,
    h_hi: f64,
}

impl DelaySet {
    /// No delays (plain ODE).
    pub fn none() -> Self {
        Self { delays: Vec::new(), h_lo: 0.0, h_hi: 0.0 }
    }

    pub fn new(delays: Vec<TimeFn>, h_lo: f64, h_hi: f64) -> Result<Self> {
        if delays.is_empty() {
            return Ok(Self::none());
        }
        if !(h_lo > 0.0) || !h_hi.is_finite() || h_lo > h_hi {
            return Err(Error::InvalidParam(format!(
                "delay bounds must satisfy 0 < h_lo <= h_hi < inf, got [{h_lo}, {h_hi}]"
            )));
        }
        Ok(Self { delays, h_lo, h_hi })
    }

    /// Constant delays; bounds are taken from the values themselves.
    pub fn constant(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Ok(Self::none());
        }
        let h_lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let h_hi = values.iter().copied().fold(0.0f64, f64::max);
        let delays = values
            .iter()
            .map(|&h| Arc::new(move |_| h) as TimeFn)
            .collect();
        Self::new(delays, h_lo, h_hi)
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    pub fn h_lo(&self) -> f64 {
        self.h_lo
    }

    pub fn h_hi(&self) -> f64 {
        self.h_hi
    }

    pub fn eval(&self, i: usize, t: f64) -> f64 {
        (self.delays[i])(t)
    }

    /// Merge two delay sets; the second set's slots follow the first's.
    pub fn union(&self, other: &DelaySet) -> Result<DelaySet> {
        if other.is_empty() {
            return Ok(self.clone());
        }
        if self.is_empty() {
            return Ok(other.clone());
        }
        let mut delays = self.delays.clone();
        delays.extend(other.delays.iter().cloned());
        DelaySet::new(delays, self.h_lo.min(other.h_lo), self.h_hi.max(other.h_hi))
    }
}

/// Sample every delay over `[t0, t_end]` and check the declared corridor.
///
/// Returns the observed `(h_lo, h_hi)`.
pub fn validate_delays(delays: &DelaySet, t0: f64, t_end: f64) -> Result<(f64, f64)> {
    if delays.is_empty() {
        return Ok((0.0, 0.0));
    }
    if !(t_end > t0) {
        return Err(Error::EmptyInterval { t0, t_end });
    }
    const SAMPLES: usize = 10_000;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..delays.len() {
        for k in 0..=SAMPLES {
            let t = t0 + (t_end - t0) * k as f64 / SAMPLES as f64;
            let h = delays.eval(i, t);
            if !h.is_finite() {
                return Err(Error::NonFinite("delay function"));
            }
            if h <= 0.0 {
                return Err(Error::DelayBoundViolation(format!(
                    "h_{}({t}) = {h} is not positive",
                    i + 1
                )));
            }
            lo = lo.min(h);
            hi = hi.max(h);
        }
    }
    let slack = 1e-12 * (1.0 + delays.h_hi.abs());
    if lo < delays.h_lo - slack {
        return Err(Error::DelayBoundViolation(format!(
            "observed delay {lo} below declared h_lo = {}",
            delays.h_lo
        )));
    }
    if hi > delays.h_hi + slack {
        return Err(Error::DelayBoundViolation(format!(
            "observed delay {hi} above declared h_hi = {}",
            delays.h_hi
        )));
    }
    Ok((lo, hi))
}

/// Initial data of a delay equation: a function on `[t0 - h_hi, t0]`.
#[derive(Clone)]
pub struct HistoryFunction {
    dim: usize,
    f: VecFn,
}

impl HistoryFunction {
    pub fn new(dim: usize, f: VecFn) -> Self {
        Self { dim, f }
    }

    pub fn constant(v: DVector<f64>) -> Self {
        let dim = v.len();
        Self { dim, f: Arc::new(move |_| v.clone()) }
    }

    pub fn constant_scalar(c: f64) -> Self {
        Self::constant(DVector::from_element(1, c))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        (self.f)(t)
    }

    /// Sup norm over `[t0 - h_hi, t0]`, approximated on 200 equispaced
    /// samples; histories in scope are smooth.
    pub fn sup_norm(&self, t0: f64, h_hi: f64) -> f64 {
        if h_hi <= 0.0 {
            return self.eval(t0).norm();
        }
        let mut sup = 0.0f64;
        for k in 0..=200 {
            let t = t0 - h_hi + h_hi * k as f64 / 200.0;
            sup = sup.max(self.eval(t).norm());
        }
        sup
    }
}

/// Step-size, blowup and clamping knobs for one integration.
#[derive(Clone, Debug)]
pub struct StepConfig {
    /// Uniform step; `None` resolves to `min(h_lo/2, 1e-2)`.
    pub dt: Option<f64>,
    pub blowup_threshold: f64,
    /// Project each accepted state onto `max(., 0)` componentwise and clamp
    /// dense output too. Meant for the scalar lower-bound equation.
    pub clamp_nonnegative: bool,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            dt: None,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            clamp_nonnegative: false,
        }
    }
}

impl StepConfig {
    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_threshold(mut self, thr: f64) -> Self {
        self.blowup_threshold = thr;
        self
    }

    pub fn with_clamp(mut self, on: bool) -> Self {
        self.clamp_nonnegative = on;
        self
    }

    /// Resolve the step against the delay bounds.
    pub fn resolve_dt(&self, delays: &DelaySet) -> Result<f64> {
        let dt = match self.dt {
            Some(dt) => dt,
            None if delays.is_empty() => DEFAULT_DT,
            None => (delays.h_lo() / 2.0).min(DEFAULT_DT),
        };
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParam(format!(
                "step size must be positive, got {dt}"
            )));
        }
        if !delays.is_empty() {
            let limit = delays.h_lo() / 2.0;
            if dt > limit * (1.0 + 1e-12) {
                return Err(Error::StepTooLarge { dt, limit });
            }
        }
        Ok(dt)
    }
}

/// Where and at what norm level an integration stopped early.
#[derive(Clone, Copy, Debug)]
pub struct Blowup {
    pub t: f64,
    pub norm: f64,
    pub threshold: f64,
}

/// Densely evaluable numerical solution on a uniform grid.
///
/// Node states and node derivatives support cubic Hermite interpolation
/// between nodes; times at or before `t0` fall through to the history
/// function.
#[derive(Clone)]
pub struct Trajectory {
    t0: f64,
    dt: f64,
    dim: usize,
    states: Vec<DVector<f64>>,
    derivs: Vec<DVector<f64>>,
    history: HistoryFunction,
    h_hi: f64,
    clamp: bool,
    blowup: Option<Blowup>,
}

impl Trajectory {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Last covered node time (the blowup node when one was recorded).
    pub fn t_end(&self) -> f64 {
        self.t0 + (self.states.len() - 1) as f64 * self.dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn blowup(&self) -> Option<&Blowup> {
        self.blowup.as_ref()
    }

    pub fn node_time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn node_state(&self, k: usize) -> &DVector<f64> {
        &self.states[k]
    }

    /// `(t_k, |x_k|)` at every node.
    pub fn norm_series(&self) -> Vec<(f64, f64)> {
        (0..self.len())
            .map(|k| (self.node_time(k), self.states[k].norm()))
            .collect()
    }

    /// Dense evaluation; history passthrough for `t <= t0`, cubic Hermite
    /// between nodes, exact at nodes.
    pub fn eval(&self, t: f64) -> Result<DVector<f64>> {
        let lo = self.t0 - self.h_hi;
        let hi = self.t_end();
        let slack = 1e-9 * self.dt.max(1.0);
        if t < lo - slack || t > hi + slack {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        Ok(self.eval_clamped(t))
    }

    fn eval_clamped(&self, t: f64) -> DVector<f64> {
        let v = hermite_lookup(
            self.t0,
            self.dt,
            &self.states,
            &self.derivs,
            &self.history,
            t,
        );
        if self.clamp {
            v.map(|x| x.max(0.0))
        } else {
            v
        }
    }

    /// Scalar convenience for one-dimensional trajectories.
    pub fn eval_scalar(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)?[0])
    }

    /// Write `t,x1,...,xn,norm` rows at 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "t")?;
        for i in 0..self.dim {
            write!(w, ",x{}", i + 1)?;
        }
        writeln!(w, ",norm")?;
        for k in 0..self.len() {
            write!(w, "{:.16e}", self.node_time(k))?;
            for i in 0..self.dim {
                write!(w, ",{:.16e}", self.states[k][i])?;
            }
            writeln!(w, ",{:.16e}", self.states[k].norm())?;
        }
        Ok(())
    }
}

/// Shared node/history lookup used both by finished trajectories and by the
/// integrator while the grid is still growing.
fn hermite_lookup(
    t0: f64,
    dt: f64,
    states: &[DVector<f64>],
    derivs: &[DVector<f64>],
    history: &HistoryFunction,
    t: f64,
) -> DVector<f64> {
    if t <= t0 {
        return history.eval(t);
    }
    let pos = (t - t0) / dt;
    let last = states.len() - 1;
    let k = (pos.floor() as usize).min(last.saturating_sub(1));
    let theta = pos - k as f64;
    // Snap to nodes; keeps left/right limits identical and avoids touching
    // a derivative that is not stored yet.
    if theta.abs() < 1e-9 {
        return states[k].clone();
    }
    if (theta - 1.0).abs() < 1e-9 || k + 1 > last {
        return states[(k + 1).min(last)].clone();
    }
    let h00 = (1.0 + 2.0 * theta) * (1.0 - theta) * (1.0 - theta);
    let h10 = theta * (1.0 - theta) * (1.0 - theta);
    let h01 = theta * theta * (3.0 - 2.0 * theta);
    let h11 = theta * theta * (theta - 1.0);
    &states[k] * h00
        + &derivs[k] * (dt * h10)
        + &states[k + 1] * h01
        + &derivs[k + 1] * (dt * h11)
}

/// Integrate `x'(t) = rhs(t, x(t), [x(t - h_i(t))])` from `t0` to at least
/// `t_end` on a uniform grid.
///
/// `rhs` receives the delayed states in delay-slot order. Integration stops
/// early with a blowup record once a node norm exceeds the configured
/// threshold; with `clamp_nonnegative` every accepted state is projected
/// onto the nonnegative orthant first.
pub fn integrate<F>(
    rhs: F,
    delays: &DelaySet,
    history: &HistoryFunction,
    t0: f64,
    t_end: f64,
    config: &StepConfig,
) -> Result<Trajectory>
where
    F: Fn(f64, &DVector<f64>, &[DVector<f64>]) -> DVector<f64>,
{
    if !(t_end > t0) {
        return Err(Error::EmptyInterval { t0, t_end });
    }
    let dt = config.resolve_dt(delays)?;
    let dim = history.dim();
    let n_steps = ((t_end - t0) / dt - 1e-9).ceil().max(1.0) as usize;
    let threshold = config.blowup_threshold;
    let m = delays.len();

    let x0 = {
        let v = history.eval(t0);
        if v.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "history returns length {} but declares {dim}",
                v.len()
            )));
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("history at t0"));
        }
        if config.clamp_nonnegative {
            v.map(|x| x.max(0.0))
        } else {
            v
        }
    };

    let mut states: Vec<DVector<f64>> = Vec::with_capacity(n_steps + 1);
    let mut derivs: Vec<DVector<f64>> = Vec::with_capacity(n_steps + 1);
    states.push(x0);

    let delayed = |states: &[DVector<f64>], derivs: &[DVector<f64>], t: f64| -> Vec<DVector<f64>> {
        (0..m)
            .map(|i| {
                let lag = delays.eval(i, t);
                let mut v = hermite_lookup(t0, dt, states, derivs, history, t - lag);
                if config.clamp_nonnegative {
                    v = v.map(|x| x.max(0.0));
                }
                v
            })
            .collect()
    };

    let d0 = {
        let xd = delayed(&states, &derivs, t0);
        rhs(t0, &states[0], &xd)
    };
    if !d0.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("rhs at t0"));
    }
    derivs.push(d0);

    // Stage states far above the threshold risk overflowing inside one
    // step; fall back to an explicit Euler update, which still crosses the
    // threshold and gets the blowup recorded at the right node.
    let stage_cap = 100.0 * threshold.max(1.0);
    let stage_ok = |v: &DVector<f64>| v.iter().all(|x| x.is_finite()) && v.norm() <= stage_cap;
    let finite = |v: &DVector<f64>| v.iter().all(|x| x.is_finite());
    let mut blowup = None;

    for n in 0..n_steps {
        let t = t0 + n as f64 * dt;
        let t_next = t0 + (n + 1) as f64 * dt;
        let x = states[n].clone();
        let k1 = derivs[n].clone();

        let xd_mid = delayed(&states, &derivs, t + 0.5 * dt);
        let xd_end = delayed(&states, &derivs, t_next);

        let mut x_next = None;
        let s2 = &x + &k1 * (0.5 * dt);
        if stage_ok(&s2) {
            let k2 = rhs(t + 0.5 * dt, &s2, &xd_mid);
            let s3 = &x + &k2 * (0.5 * dt);
            if finite(&k2) && stage_ok(&s3) {
                let k3 = rhs(t + 0.5 * dt, &s3, &xd_mid);
                let s4 = &x + &k3 * dt;
                if finite(&k3) && stage_ok(&s4) {
                    let k4 = rhs(t_next, &s4, &xd_end);
                    if finite(&k4) {
                        x_next =
                            Some(&x + (&k1 + &k2 * 2.0 + &k3 * 2.0 + k4) * (dt / 6.0));
                    }
                }
            }
        }
        let capped = x_next.is_none();
        let mut x_next = x_next.unwrap_or_else(|| &x + &k1 * dt);
        if config.clamp_nonnegative {
            x_next = x_next.map(|v| v.max(0.0));
        }
        let norm = x_next.norm();
        if !norm.is_finite() {
            return Err(Error::NonFinite("state update"));
        }
        if capped && norm <= threshold {
            // Overflowing stages without a threshold crossing is not a
            // blowup; the right-hand side itself is ill-behaved.
            return Err(Error::NonFinite("runge-kutta stage"));
        }
        states.push(x_next);
        let d_next = {
            let xd = delayed(&states, &derivs, t_next);
            let d = rhs(t_next, &states[n + 1], &xd);
            if d.iter().all(|x| x.is_finite()) {
                d
            } else {
                DVector::zeros(dim)
            }
        };
        derivs.push(d_next);
        if norm > threshold {
            blowup = Some(Blowup { t: t_next, norm, threshold });
            break;
        }
    }

    Ok(Trajectory {
        t0,
        dt,
        dim,
        states,
        derivs,
        history: history.clone(),
        h_hi: delays.h_hi(),
        clamp: config.clamp_nonnegative,
        blowup,
    })
}
