//! Scalar majorants dominating the eigenbasis nonlinearity.
//!
//! A majorant is a sum of terms `mu(t) * prod_j xi_j^{p_j}` over the bound
//! variables `xi_0, ..., xi_m`, where `xi_0` bounds `|y(t)|` and `xi_j`
//! bounds `|y(t - h_j(t))|`. Each monomial of the nonlinearity contributes
//! `|V^-1| |c(t)| prod (row-sum constants)` because `|y_k^p| <= |y|^p` and
//! each physical component is a row of `V` applied to `y`. Groups of purely
//! linear delayed terms are kept together as a matrix and enter through its
//! induced norm instead, which is the sharper bound.
//!
//! All magnitudes are nonnegative and all powers at least one, so majorants
//! vanish at the origin and are nondecreasing in every argument. That
//! monotonicity is what the comparison machinery downstream relies on.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{spectral_norm, CMatrix, CVector, C64, EigenDecomposition};
use crate::system::{EigenbasisSystem, PolynomialNonlinearity};
use crate::timefn::TimeFn;

/// One scalar term `magnitude(t) * prod xi_{slot}^{power}`.
#[derive(Clone)]
pub struct MajorantTerm {
    pub magnitude: TimeFn,
    /// `(slot, power)` pairs with distinct slots, sorted by slot.
    pub factors: Vec<(usize, u32)>,
}

/// Sum of nonnegative, nondecreasing scalar terms with `L(t, 0) = 0`.
#[derive(Clone)]
pub struct Majorant {
    m: usize,
    terms: Vec<MajorantTerm>,
}

impl Majorant {
    pub fn new(m: usize, terms: Vec<MajorantTerm>) -> Self {
        Self { m, terms }
    }

    pub fn zero(m: usize) -> Self {
        Self { m, terms: Vec::new() }
    }

    /// Number of delay slots (arguments are `xi_0..xi_m`).
    pub fn delay_slots(&self) -> usize {
        self.m
    }

    pub fn terms(&self) -> &[MajorantTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `L(t, xi_0, ..., xi_m)`; rejects negative arguments.
    pub fn eval(&self, t: f64, xi: &[f64]) -> Result<f64> {
        if xi.len() != self.m + 1 {
            return Err(Error::DimensionMismatch(format!(
                "majorant expects {} arguments, got {}",
                self.m + 1,
                xi.len()
            )));
        }
        if let Some(bad) = xi.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::NegativeArgument(format!(
                "majorant argument {bad} must be nonnegative"
            )));
        }
        Ok(self.eval_raw(t, xi))
    }

    /// Unchecked evaluation for integrator loops.
    pub(crate) fn eval_raw(&self, t: f64, xi: &[f64]) -> f64 {
        let mut acc = 0.0;
        for term in &self.terms {
            let mut v = (term.magnitude)(t);
            for &(slot, power) in &term.factors {
                v *= xi[slot].powi(power as i32);
            }
            acc += v;
        }
        acc
    }
}

/// Majorant for persistent perturbations: a plain majorant plus a
/// nonnegative offset, so `L_R(t, 0)` need not vanish.
#[derive(Clone)]
pub struct RobustMajorant {
    pub base: Majorant,
    pub offset: TimeFn,
}

impl RobustMajorant {
    pub fn constant_offset(m: usize, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) {
            return Err(Error::NegativeArgument(format!(
                "robust offset must be nonnegative, got {delta}"
            )));
        }
        Ok(Self { base: Majorant::zero(m), offset: Arc::new(move |_| delta) })
    }

    pub fn delay_slots(&self) -> usize {
        self.base.delay_slots()
    }

    pub fn eval(&self, t: f64, xi: &[f64]) -> Result<f64> {
        Ok(self.base.eval(t, xi)? + (self.offset)(t))
    }

    pub(crate) fn eval_raw(&self, t: f64, xi: &[f64]) -> f64 {
        self.base.eval_raw(t, xi) + (self.offset)(t)
    }
}

/// Build the majorant of a polynomial nonlinearity in the eigenbasis of
/// `decomp`.
///
/// Terms that are linear in a single (possibly delayed) component are
/// grouped per delay slot into a coefficient matrix `M_j(t)` and bounded by
/// `|V^-1 M_j(t) V|`. Every other monomial is bounded through
/// `|V^-1| |c(t)| prod_k (sum_l |v_{c_k l}|)^{p_k}` acting on
/// `prod_k xi_{j_k}^{p_k}`; terms with the same slot/power signature are
/// merged by summing magnitudes.
pub fn build_majorant(
    nl: &PolynomialNonlinearity,
    decomp: &EigenDecomposition,
) -> Result<Majorant> {
    let n = decomp.order();
    if nl.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "nonlinearity dimension {} != decomposition order {n}",
            nl.dim()
        )));
    }
    let m = nl.delay_slots();

    // Row sums of |V|: |x_c| = |row_c(V) y| <= (sum_l |v_{cl}|) |y|.
    let row_sums: Vec<f64> = (0..n)
        .map(|r| (0..n).map(|c| decomp.v()[(r, c)].norm()).sum())
        .collect();

    // Linear single-factor terms per slot; everything else by signature.
    let mut linear_groups: BTreeMap<usize, Vec<(usize, usize, TimeFn)>> = BTreeMap::new();
    let mut general: BTreeMap<Vec<(usize, u32)>, Vec<(TimeFn, f64)>> = BTreeMap::new();

    for term in nl.terms() {
        if term.factors.len() == 1 && term.factors[0].power == 1 {
            let f = term.factors[0];
            linear_groups
                .entry(f.slot)
                .or_default()
                .push((term.target, f.comp, term.coeff.clone()));
            continue;
        }
        let mut powers: BTreeMap<usize, u32> = BTreeMap::new();
        let mut row_factor = 1.0f64;
        for f in &term.factors {
            *powers.entry(f.slot).or_insert(0) += f.power;
            row_factor *= row_sums[f.comp].powi(f.power as i32);
        }
        let signature: Vec<(usize, u32)> = powers.into_iter().collect();
        general
            .entry(signature)
            .or_default()
            .push((term.coeff.clone(), decomp.norm_v_inv() * row_factor));
    }

    let mut terms = Vec::new();
    for (slot, entries) in linear_groups {
        // Constant building blocks V^-1 E_{target,comp} V; the coefficient
        // matrix in the eigenbasis is their time-varying combination.
        let blocks: Vec<(TimeFn, CMatrix)> = entries
            .into_iter()
            .map(|(target, comp, coeff)| {
                let mut e = CMatrix::zeros(n, n);
                e[(target, comp)] = C64::new(1.0, 0.0);
                (coeff, decomp.v_inv() * e * decomp.v())
            })
            .collect();
        let magnitude: TimeFn = Arc::new(move |t| {
            let mut w = CMatrix::zeros(blocks[0].1.nrows(), blocks[0].1.ncols());
            for (coeff, k) in &blocks {
                w += k * C64::new(coeff(t), 0.0);
            }
            spectral_norm(&w).unwrap_or(f64::INFINITY)
        });
        terms.push(MajorantTerm { magnitude, factors: vec![(slot, 1)] });
    }
    for (signature, parts) in general {
        let magnitude: TimeFn = Arc::new(move |t| {
            parts.iter().map(|(c, scale)| c(t).abs() * scale).sum()
        });
        terms.push(MajorantTerm { magnitude, factors: signature });
    }
    Ok(Majorant::new(m, terms))
}

/// Monte-Carlo certificate for `|f(t, chi_0, ..., chi_m)| <= L(t, |chi_0|, ...)`.
#[derive(Clone, Copy, Debug)]
pub struct DominationReport {
    pub holds: bool,
    /// Minimum of `L - |f|` over all samples; negative means a violation.
    pub worst_margin: f64,
    pub samples: usize,
}

/// Draw `n_samples` uniform points of the complex poly-ball `|chi_j| <= rho`
/// (and times in `[t0, t0 + 50]`) and compare the majorant against the
/// eigenbasis nonlinearity.
pub fn verify_domination(
    majorant: &Majorant,
    esys: &EigenbasisSystem,
    n_samples: usize,
    rho: f64,
    seed: u64,
) -> Result<DominationReport> {
    if n_samples == 0 {
        return Err(Error::InvalidParam("verify_domination needs n_samples >= 1".into()));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidParam(format!("sampling radius must be positive, got {rho}")));
    }
    let m = majorant.delay_slots();
    let n = esys.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..n_samples {
        let t = esys.t0() + rng.gen_range(0.0..50.0);
        let mut xi = Vec::with_capacity(m + 1);
        let mut args: Vec<CVector> = Vec::with_capacity(m + 1);
        for _ in 0..=m {
            let chi = random_in_complex_ball(&mut rng, n, rho);
            xi.push(chi.norm());
            args.push(chi);
        }
        let f = esys.f_eigen(t, &args[0], &args[1..]);
        let margin = majorant.eval(t, &xi)? - f.norm();
        worst = worst.min(margin);
    }
    Ok(DominationReport { holds: worst >= -1e-12, worst_margin: worst, samples: n_samples })
}

fn random_in_complex_ball(rng: &mut impl Rng, n: usize, rho: f64) -> CVector {
    // Gaussian direction + radius correction: uniform in the 2n-real ball.
    let mut v = DVector::<f64>::from_fn(2 * n, |_, _| {
        // Box-Muller from two uniforms.
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        (-2.0 * u1.ln()).sqrt() * u2.cos()
    });
    let norm = v.norm();
    if norm > 0.0 {
        let r: f64 = rho * rng.gen_range(0.0f64..1.0).powf(1.0 / (2.0 * n as f64));
        v *= r / norm;
    }
    CVector::from_fn(n, |k, _| C64::new(v[2 * k], v[2 * k + 1]))
}

/// Replace each term `mu(t) * prod xi^{p}` of total degree `P` by the linear
/// term `mu(t) * xi_bar^{P-1} * xi_j` on the first slot it touches; the
/// result dominates the majorant on the box `xi <= xi_bar`.
pub fn linearize_majorant(majorant: &Majorant, xi_bar: f64) -> Result<Majorant> {
    if !(xi_bar > 0.0) {
        return Err(Error::InvalidParam(format!("xi_bar must be positive, got {xi_bar}")));
    }
    let mut slot_coeffs: BTreeMap<usize, Vec<(TimeFn, f64)>> = BTreeMap::new();
    for term in majorant.terms() {
        let total: u32 = term.factors.iter().map(|&(_, p)| p).sum();
        let slot = term.factors.first().map(|&(s, _)| s).unwrap_or(0);
        slot_coeffs
            .entry(slot)
            .or_default()
            .push((term.magnitude.clone(), xi_bar.powi(total as i32 - 1)));
    }
    let terms = slot_coeffs
        .into_iter()
        .map(|(slot, parts)| MajorantTerm {
            magnitude: Arc::new(move |t| parts.iter().map(|(mu, s)| mu(t) * s).sum()),
            factors: vec![(slot, 1)],
        })
        .collect();
    Ok(Majorant::new(majorant.delay_slots(), terms))
}

/// Freeze all time dependence by taking sampled suprema over a window.
///
/// Returns the autonomous majorant together with `g_s = sup |g(t)|` and
/// `F_s = sup |F(t)|`. All three dominate their time-varying counterparts
/// pointwise on the window.
pub fn autonomize(
    majorant: &Majorant,
    g_norm: &TimeFn,
    f_norm: &TimeFn,
    window: (f64, f64),
) -> Result<(Majorant, f64, f64)> {
    let sup = |f: &TimeFn| -> Result<f64> {
        const SAMPLES: usize = 10_000;
        let mut s = f64::NEG_INFINITY;
        for k in 0..=SAMPLES {
            let t = window.0 + (window.1 - window.0) * k as f64 / SAMPLES as f64;
            let v = f(t);
            if !v.is_finite() {
                return Err(Error::NonFinite("autonomize sample"));
            }
            s = s.max(v);
        }
        Ok(s)
    };
    let mut terms = Vec::with_capacity(majorant.terms().len());
    for term in majorant.terms() {
        let mu_s = sup(&term.magnitude)?;
        terms.push(MajorantTerm {
            magnitude: Arc::new(move |_| mu_s),
            factors: term.factors.clone(),
        });
    }
    Ok((
        Majorant::new(majorant.delay_slots(), terms),
        sup(g_norm)?,
        sup(f_norm)?,
    ))
}
