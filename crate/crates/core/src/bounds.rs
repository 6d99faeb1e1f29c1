//! The scalar bound equations and the bilateral envelope.
//!
//! For a system in eigenbasis form the upper and lower scalar problems are
//!
//! ```text
//! Z' = (alpha_1 + |g(t)|) Z + L(t, Z(t), Z(t-h_1(t)), ...) + |F(t)|
//! z' = (alpha_n - |g(t)|) z - L(t, z(t), z(t-h_1(t)), ...) - |F(t)|
//! ```
//!
//! both started from the scalar history `phi(t) = |V^-1 phi(t)|`, the lower
//! one clamped at zero. Their solutions sandwich the vector solution norm:
//! `z(t)/|V^-1| <= |x(t)| <= |V| Z(t)` for every matched history. The robust
//! variant adds a second majorant over its own delay set to the upper
//! equation, covering persistent perturbations with `L_R(t, 0) != 0`.

use std::io::Write;

use crate::dde::{self, DelaySet, HistoryFunction, StepConfig, Trajectory};
use crate::error::{Error, Result};
use crate::majorant::{Majorant, RobustMajorant};
use crate::system::EigenbasisSystem;
use crate::timefn::TimeFn;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    Upper,
    Lower,
    RobustUpper,
}

/// One scalar delay equation ready to integrate.
#[derive(Clone)]
pub struct ScalarBoundProblem {
    pub kind: BoundKind,
    /// `alpha_1` for upper/robust problems, `alpha_n` for lower ones.
    pub rate: f64,
    g_norm: TimeFn,
    majorant: Majorant,
    robust: Option<RobustMajorant>,
    forcing_mag: TimeFn,
    delays: DelaySet,
    history: HistoryFunction,
    t0: f64,
    norm_v: f64,
    norm_v_inv: f64,
}

impl ScalarBoundProblem {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn delays(&self) -> &DelaySet {
        &self.delays
    }

    pub fn history(&self) -> &HistoryFunction {
        &self.history
    }

    pub fn norm_v(&self) -> f64 {
        self.norm_v
    }

    pub fn norm_v_inv(&self) -> f64 {
        self.norm_v_inv
    }

    /// Same problem started from a constant scalar history `c >= 0`.
    pub fn with_constant_history(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0) {
            return Err(Error::NegativeArgument(format!(
                "scalar history must be nonnegative, got {c}"
            )));
        }
        let mut p = self.clone();
        p.history = HistoryFunction::constant_scalar(c);
        Ok(p)
    }

    /// Same problem started from an arbitrary nonnegative scalar history.
    pub fn with_history(&self, history: HistoryFunction) -> Result<Self> {
        if history.dim() != 1 {
            return Err(Error::DimensionMismatch(
                "scalar bound problems need one-dimensional histories".into(),
            ));
        }
        let mut p = self.clone();
        p.history = history;
        Ok(p)
    }

    /// Right-hand side; `ud[j-1]` is the slot-`j` delayed value.
    pub fn rhs(&self, t: f64, u: f64, ud: &[f64]) -> f64 {
        let mut xi = Vec::with_capacity(ud.len() + 1);
        xi.push(u.max(0.0));
        xi.extend(ud.iter().map(|v| v.max(0.0)));
        let l = self.majorant.eval_raw(t, &xi[..self.majorant.delay_slots() + 1]);
        let lr = self.robust.as_ref().map_or(0.0, |r| r.eval_raw(t, &xi));
        let g = (self.g_norm)(t);
        let f = (self.forcing_mag)(t);
        match self.kind {
            BoundKind::Upper | BoundKind::RobustUpper => (self.rate + g) * u + l + lr + f,
            BoundKind::Lower => (self.rate - g) * u - l - f,
        }
    }

    /// Integrate the problem; lower problems are clamped at zero.
    pub fn solve(&self, t_end: f64, config: &StepConfig) -> Result<Trajectory> {
        let clamp = matches!(self.kind, BoundKind::Lower);
        let config = config.clone().with_clamp(clamp);
        dde::integrate(
            |t, x, xd| {
                let ud: Vec<f64> = xd.iter().map(|v| v[0]).collect();
                nalgebra::DVector::from_element(1, self.rhs(t, x[0], &ud))
            },
            &self.delays,
            &self.history,
            self.t0,
            t_end,
            &config,
        )
    }
}

fn check_slots(esys: &EigenbasisSystem, majorant: &Majorant) -> Result<()> {
    if majorant.delay_slots() > esys.delays().len() {
        return Err(Error::DimensionMismatch(format!(
            "majorant uses {} delay slots, system provides {}",
            majorant.delay_slots(),
            esys.delays().len()
        )));
    }
    Ok(())
}

/// Assemble the upper scalar problem. With zero forcing this is the
/// homogeneous equation automatically.
pub fn build_upper(esys: &EigenbasisSystem, majorant: &Majorant) -> Result<ScalarBoundProblem> {
    check_slots(esys, majorant)?;
    let offset = esys.offset().clone();
    Ok(ScalarBoundProblem {
        kind: BoundKind::Upper,
        rate: esys.decomp().lambda_plus(),
        g_norm: std::sync::Arc::new(move |t| offset.g_norm(t).unwrap_or(f64::INFINITY)),
        majorant: majorant.clone(),
        robust: None,
        forcing_mag: esys.forcing_mag_fn(),
        delays: esys.delays().clone(),
        history: esys.scalar_history(),
        t0: esys.t0(),
        norm_v: esys.decomp().norm_v(),
        norm_v_inv: esys.decomp().norm_v_inv(),
    })
}

/// Assemble the lower scalar problem (negated majorant and forcing, clamped
/// integration, rate `alpha_n`).
pub fn build_lower(esys: &EigenbasisSystem, majorant: &Majorant) -> Result<ScalarBoundProblem> {
    let mut p = build_upper(esys, majorant)?;
    p.kind = BoundKind::Lower;
    p.rate = esys.decomp().lambda_minus();
    Ok(p)
}

/// Assemble the robust upper problem: the upper equation plus a persistent
/// perturbation majorant over its own delay set, appended behind the system
/// delays.
pub fn build_robust(
    esys: &EigenbasisSystem,
    majorant: &Majorant,
    robust: &RobustMajorant,
    delays_r: &DelaySet,
) -> Result<ScalarBoundProblem> {
    if robust.delay_slots() > delays_r.len() {
        return Err(Error::DelayBoundViolation(format!(
            "robust majorant uses {} delay slots, perturbation set provides {}",
            robust.delay_slots(),
            delays_r.len()
        )));
    }
    let mut p = build_upper(esys, majorant)?;
    let m_base = esys.delays().len();
    p.kind = BoundKind::RobustUpper;
    p.delays = esys.delays().union(delays_r)?;
    // Slot j >= 1 of the perturbation set becomes slot m_base + j of the
    // union; slot 0 stays the undelayed argument.
    let shifted = Majorant::new(
        p.delays.len(),
        robust
            .base
            .terms()
            .iter()
            .map(|t| crate::majorant::MajorantTerm {
                magnitude: t.magnitude.clone(),
                factors: t
                    .factors
                    .iter()
                    .map(|&(slot, pw)| if slot == 0 { (0, pw) } else { (m_base + slot, pw) })
                    .collect(),
            })
            .collect(),
    );
    p.robust = Some(RobustMajorant { base: shifted, offset: robust.offset.clone() });
    Ok(p)
}

/// Solved upper/lower pair with the eigenbasis scaling attached.
pub struct BoundPair {
    upper: Trajectory,
    lower: Trajectory,
    norm_v: f64,
    norm_v_inv: f64,
}

impl BoundPair {
    pub fn upper_traj(&self) -> &Trajectory {
        &self.upper
    }

    pub fn lower_traj(&self) -> &Trajectory {
        &self.lower
    }

    pub fn norm_v(&self) -> f64 {
        self.norm_v
    }

    pub fn norm_v_inv(&self) -> f64 {
        self.norm_v_inv
    }

    /// `|V| Z(t)`.
    pub fn upper_envelope(&self, t: f64) -> Result<f64> {
        Ok(self.norm_v * self.upper.eval_scalar(t)?)
    }

    /// `z(t) / |V^-1|`, never negative.
    pub fn lower_envelope(&self, t: f64) -> Result<f64> {
        Ok((self.lower.eval_scalar(t)? / self.norm_v_inv).max(0.0))
    }

    /// Last time both trajectories cover.
    pub fn t_end_common(&self) -> f64 {
        self.upper.t_end().min(self.lower.t_end())
    }

    /// Write `t,Z,z,upper,lower` rows at the common node times.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,Z,z,upper,lower")?;
        let nodes = self.upper.len().min(self.lower.len());
        for k in 0..nodes {
            let t = self.upper.node_time(k);
            let zu = self.upper.node_state(k)[0];
            let zl = self.lower.node_state(k)[0];
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                t,
                zu,
                zl,
                self.norm_v * zu,
                (zl / self.norm_v_inv).max(0.0)
            )?;
        }
        Ok(())
    }
}

/// Integrate both scalar problems on a shared grid.
pub fn solve_bounds(
    upper: &ScalarBoundProblem,
    lower: &ScalarBoundProblem,
    t_end: f64,
    config: &StepConfig,
) -> Result<BoundPair> {
    if !matches!(upper.kind, BoundKind::Upper | BoundKind::RobustUpper)
        || !matches!(lower.kind, BoundKind::Lower)
    {
        return Err(Error::InvalidParam(
            "solve_bounds expects an upper problem and a lower problem".into(),
        ));
    }
    let up = upper.solve(t_end, config)?;
    let low = lower.solve(t_end, config)?;
    Ok(BoundPair {
        upper: up,
        lower: low,
        norm_v: upper.norm_v,
        norm_v_inv: upper.norm_v_inv,
    })
}

/// Pointwise tolerance for the envelope check.
#[derive(Clone, Copy, Debug)]
pub enum Tolerance {
    Absolute(f64),
    /// `c * (1 + bound(t))`, following the bound magnitude.
    Relative(f64),
}

impl Tolerance {
    fn at(&self, bound: f64) -> f64 {
        match *self {
            Tolerance::Absolute(tol) => tol,
            Tolerance::Relative(c) => c * (1.0 + bound),
        }
    }
}

/// Result of checking a norm series against the bilateral envelope.
#[derive(Clone, Copy, Debug)]
pub struct EnclosureReport {
    pub pass: bool,
    /// Smallest slack over all samples and both sides; negative on failure.
    pub worst_margin: f64,
    /// Time of the worst sample.
    pub worst_t: f64,
    pub checked: usize,
}

/// Verify `lower(t) - tol <= |x(t)| <= upper(t) + tol` on every sample.
pub fn check_enclosure(
    norms: &[(f64, f64)],
    pair: &BoundPair,
    tol: Tolerance,
) -> Result<EnclosureReport> {
    if norms.is_empty() {
        return Err(Error::RangeMismatch("empty norm series".into()));
    }
    let t_hi = pair.t_end_common();
    let t_lo = pair.upper.t0();
    let slack = 1e-9 * (1.0 + t_hi.abs());
    let mut worst = f64::INFINITY;
    let mut worst_t = t_lo;
    for &(t, norm) in norms {
        if t < t_lo - slack || t > t_hi + slack {
            return Err(Error::RangeMismatch(format!(
                "sample at t = {t} outside bound range [{t_lo}, {t_hi}]"
            )));
        }
        let up = pair.upper_envelope(t)?;
        let lo = pair.lower_envelope(t)?;
        let m_up = up + tol.at(up) - norm;
        let m_lo = norm - (lo - tol.at(lo));
        let m = m_up.min(m_lo);
        if m < worst {
            worst = m;
            worst_t = t;
        }
    }
    Ok(EnclosureReport { pass: worst >= 0.0, worst_margin: worst, worst_t, checked: norms.len() })
}


#[cfg(test)]
mod debug_mono {
    use super::*;
    use crate::majorant::build_majorant;
    use crate::system::{eigenbasis_of, make_vdp, OscParams};

    #[test]
    #[ignore]
    fn diag() {
        let sys = make_vdp(&OscParams { x01: 0.01, ..OscParams::default() }).unwrap();
        let (decomp, esys) = eigenbasis_of(&sys).unwrap();
        let l = build_majorant(&sys.nonlinearity, &decomp).unwrap();
        let up = build_upper(&esys, &l).unwrap();
        let low = build_lower(&esys, &l).unwrap();
        let config = StepConfig::default();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..20 {
            let c1: f64 = rng.gen_range(0.0..0.01);
            let gap: f64 = rng.gen_range(0.0..0.005);
            let (p1, p2) = (c1, c1 + gap);
            for (name, prob) in [("up", &up), ("low", &low)] {
                let a = prob.with_constant_history(p1).unwrap().solve(30.0, &config).unwrap();
                let b = prob.with_constant_history(p2).unwrap().solve(30.0, &config).unwrap();
                let mut worst = f64::INFINITY; let mut wk = 0;
                for k in 0..a.len().min(b.len()) {
                    let d = b.node_state(k)[0] - a.node_state(k)[0];
                    if d < worst { worst = d; wk = k; }
                }
                if worst < 1e-9 {
                    println!("trial {trial} {name}: c1={p1:.6e} c2={p2:.6e} worst diff {worst:.3e} at node {wk} (t={}), a={:.6e} b={:.6e}",
                             a.node_time(wk), a.node_state(wk)[0], b.node_state(wk)[0]);
                }
            }
        }
    }
}
