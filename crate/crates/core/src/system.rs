//! Vector delay systems with polynomial nonlinearities, their eigenbasis
//! form, and the coupled Van der Pol / Duffing benchmark oscillators.
//!
//! The carrier shape is
//!
//! ```text
//! x' = A* x + G*(t) x + f*(t, x(t), x(t-h_1(t)), ..., x(t-h_m(t))) + F*(t)
//! ```
//!
//! with `A*` constant, `G*(t)` a zero-mean time-varying offset, `f*` a list
//! of monomial terms over possibly delayed state components (so `f*(t,0) = 0`
//! holds by construction) and `F*(t) = F0 e(t)` an external perturbation.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dde::{self, DelaySet, HistoryFunction, StepConfig, Trajectory};
use crate::error::{Error, Result};
use crate::spectral::{
    complexify, eigendecompose, offset_split, spectral_norm, CMatrix, CVector, C64,
    EigenDecomposition, OffsetSplit,
};
use crate::timefn::{MatrixFn, SinusoidSum, TimeFn, VecFn};

/// One state-component factor of a monomial: `x_comp(t - h_slot)^power`,
/// with slot 0 standing for the undelayed argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonomialFactor {
    pub slot: usize,
    pub comp: usize,
    pub power: u32,
}

/// `coeff(t) * prod_k x_{comp_k}(t - h_{slot_k})^{power_k}` added to one
/// target component of the right-hand side.
#[derive(Clone)]
pub struct MonomialTerm {
    pub target: usize,
    pub coeff: TimeFn,
    pub factors: Vec<MonomialFactor>,
}

impl MonomialTerm {
    pub fn new(target: usize, coeff: TimeFn, factors: Vec<MonomialFactor>) -> Self {
        Self { target, coeff, factors }
    }
}

/// Sum of monomial terms; vanishes at the origin because every term carries
/// at least one state factor.
#[derive(Clone)]
pub struct PolynomialNonlinearity {
    dim: usize,
    m: usize,
    terms: Vec<MonomialTerm>,
}

impl PolynomialNonlinearity {
    pub fn new(dim: usize, m: usize, terms: Vec<MonomialTerm>) -> Result<Self> {
        for (i, term) in terms.iter().enumerate() {
            if term.factors.is_empty() {
                return Err(Error::UnsupportedForm(format!(
                    "term {i} has no state factors; f(t, 0) = 0 would fail"
                )));
            }
            if term.target >= dim {
                return Err(Error::DimensionMismatch(format!(
                    "term {i} targets component {} of a {dim}-dimensional system",
                    term.target
                )));
            }
            for f in &term.factors {
                if f.power < 1 {
                    return Err(Error::UnsupportedForm(format!(
                        "term {i} has factor with power {}; powers must be >= 1",
                        f.power
                    )));
                }
                if f.comp >= dim {
                    return Err(Error::DimensionMismatch(format!(
                        "term {i} reads component {} of a {dim}-dimensional system",
                        f.comp
                    )));
                }
                if f.slot > m {
                    return Err(Error::DimensionMismatch(format!(
                        "term {i} uses delay slot {} but only {m} delays exist",
                        f.slot
                    )));
                }
            }
        }
        Ok(Self { dim, m, terms })
    }

    pub fn empty(dim: usize, m: usize) -> Self {
        Self { dim, m, terms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delay_slots(&self) -> usize {
        self.m
    }

    pub fn terms(&self) -> &[MonomialTerm] {
        &self.terms
    }

    /// Evaluate on real arguments; `xd[j-1]` is the slot-`j` argument.
    pub fn eval(&self, t: f64, x: &DVector<f64>, xd: &[DVector<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for term in &self.terms {
            let mut v = (term.coeff)(t);
            for f in &term.factors {
                let arg = if f.slot == 0 { x[f.comp] } else { xd[f.slot - 1][f.comp] };
                v *= arg.powi(f.power as i32);
            }
            out[term.target] += v;
        }
        out
    }

    /// Evaluate on complex arguments; `args[0]` is the undelayed state and
    /// `args[j]` the slot-`j` argument. Used by the eigenbasis form, where
    /// the state components become complex combinations.
    pub fn eval_complex(&self, t: f64, args: &[CVector]) -> CVector {
        let mut out = CVector::zeros(self.dim);
        for term in &self.terms {
            let mut v = C64::new((term.coeff)(t), 0.0);
            for f in &term.factors {
                v *= args[f.slot][f.comp].powu(f.power);
            }
            out[term.target] += v;
        }
        out
    }
}

/// External perturbation `F*(t) = F0 e(t)` with `sup_t |e(t)| = 1`.
#[derive(Clone)]
pub struct Forcing {
    pub f0: f64,
    pub direction: VecFn,
    dim: usize,
}

impl Forcing {
    pub fn new(dim: usize, f0: f64, direction: VecFn) -> Result<Self> {
        if !(f0 >= 0.0) {
            return Err(Error::InvalidParam(format!("forcing amplitude must be >= 0, got {f0}")));
        }
        Ok(Self { f0, direction, dim })
    }

    pub fn zero(dim: usize) -> Self {
        Self { f0: 0.0, direction: Arc::new(move |_| DVector::zeros(dim)), dim }
    }

    pub fn is_zero(&self) -> bool {
        self.f0 == 0.0
    }

    pub fn f_star(&self, t: f64) -> DVector<f64> {
        if self.f0 == 0.0 {
            return DVector::zeros(self.dim);
        }
        (self.direction)(t) * self.f0
    }

    /// Sampled check that the direction has unit sup norm: no sample above
    /// `1 + 1e-6` and the sampled supremum within `1e-6` of one.
    pub fn validate_direction(&self, t0: f64, window: f64) -> Result<()> {
        if self.f0 == 0.0 {
            return Ok(());
        }
        const SAMPLES: usize = 100_000;
        let mut sup = 0.0f64;
        for k in 0..=SAMPLES {
            let t = t0 + window * k as f64 / SAMPLES as f64;
            let norm = (self.direction)(t).norm();
            if !norm.is_finite() {
                return Err(Error::NonFinite("forcing direction"));
            }
            if norm > 1.0 + 1e-6 {
                return Err(Error::InvalidParam(format!(
                    "forcing direction norm {norm} exceeds 1 at t = {t}"
                )));
            }
            sup = sup.max(norm);
        }
        if sup < 1.0 - 1e-6 {
            return Err(Error::InvalidParam(format!(
                "forcing direction sup norm {sup} differs from 1; fold the gap into F0"
            )));
        }
        Ok(())
    }
}

/// The decomposed vector delay system.
#[derive(Clone)]
pub struct VectorDelaySystem {
    pub dim: usize,
    pub t0: f64,
    pub a_star: DMatrix<f64>,
    pub g_star: MatrixFn,
    pub nonlinearity: PolynomialNonlinearity,
    pub forcing: Forcing,
    pub delays: DelaySet,
    pub history: HistoryFunction,
}

impl VectorDelaySystem {
    /// Consistency of dimensions across all parts.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        if self.a_star.nrows() != n || self.a_star.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A* is {}x{}, system dimension is {n}",
                self.a_star.nrows(),
                self.a_star.ncols()
            )));
        }
        if self.history.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "history dimension {} != {n}",
                self.history.dim()
            )));
        }
        if self.nonlinearity.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "nonlinearity dimension {} != {n}",
                self.nonlinearity.dim()
            )));
        }
        if self.nonlinearity.delay_slots() > self.delays.len() {
            return Err(Error::DimensionMismatch(format!(
                "nonlinearity uses {} delay slots, system has {}",
                self.nonlinearity.delay_slots(),
                self.delays.len()
            )));
        }
        Ok(())
    }

    /// Right-hand side of the system; `xd[j-1]` is `x(t - h_j(t))`.
    pub fn eval_rhs(
        &self,
        t: f64,
        x: &DVector<f64>,
        xd: &[DVector<f64>],
    ) -> Result<DVector<f64>> {
        if x.len() != self.dim || xd.len() < self.nonlinearity.delay_slots() {
            return Err(Error::DimensionMismatch(
                "state or delayed-state dimensions do not match the system".into(),
            ));
        }
        let v = self.rhs_raw(t, x, xd);
        if !v.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("system right-hand side"));
        }
        Ok(v)
    }

    pub(crate) fn rhs_raw(&self, t: f64, x: &DVector<f64>, xd: &[DVector<f64>]) -> DVector<f64> {
        let mut v = &self.a_star * x;
        v += (self.g_star)(t) * x;
        v += self.nonlinearity.eval(t, x, xd);
        if !self.forcing.is_zero() {
            v += self.forcing.f_star(t);
        }
        v
    }

    /// `B(t) = A* + G*(t)`, the undecomposed coefficient matrix.
    pub fn b_fn(&self) -> MatrixFn {
        let a = self.a_star.clone();
        let g = self.g_star.clone();
        Arc::new(move |t| &a + g(t))
    }

    /// Integrate the system and return the trajectory with its norm series.
    pub fn simulate(
        &self,
        t_end: f64,
        config: &StepConfig,
    ) -> Result<(Trajectory, Vec<(f64, f64)>)> {
        self.validate()?;
        let traj = dde::integrate(
            |t, x, xd| self.rhs_raw(t, x, xd),
            &self.delays,
            &self.history,
            self.t0,
            t_end,
            config,
        )?;
        let norms = traj.norm_series();
        Ok((traj, norms))
    }
}

/// The system rewritten in the eigenbasis of `A*`: `y = V^-1 x`.
#[derive(Clone)]
pub struct EigenbasisSystem {
    decomp: EigenDecomposition,
    offset: OffsetSplit,
    nonlinearity: PolynomialNonlinearity,
    forcing: Forcing,
    history: HistoryFunction,
    delays: DelaySet,
    t0: f64,
    dim: usize,
}

impl EigenbasisSystem {
    pub fn decomp(&self) -> &EigenDecomposition {
        &self.decomp
    }

    pub fn offset(&self) -> &OffsetSplit {
        &self.offset
    }

    pub fn nonlinearity(&self) -> &PolynomialNonlinearity {
        &self.nonlinearity
    }

    pub fn delays(&self) -> &DelaySet {
        &self.delays
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_forcing(&self) -> bool {
        !self.forcing.is_zero()
    }

    /// Transformed nonlinearity `f(t, y, y_d1, ...) = V^-1 f*(t, Vy, Vy_d1, ...)`.
    pub fn f_eigen(&self, t: f64, y: &CVector, yd: &[CVector]) -> CVector {
        let v = self.decomp.v();
        let mut args: Vec<CVector> = Vec::with_capacity(1 + yd.len());
        args.push(v * y);
        for d in yd {
            args.push(v * d);
        }
        self.decomp.v_inv() * self.nonlinearity.eval_complex(t, &args)
    }

    /// `|F(t)| = |V^-1 F*(t)|`.
    pub fn forcing_mag(&self, t: f64) -> f64 {
        if self.forcing.is_zero() {
            return 0.0;
        }
        let fs = self.forcing.f_star(t).map(|r| C64::new(r, 0.0));
        (self.decomp.v_inv() * fs).norm()
    }

    pub fn forcing_mag_fn(&self) -> TimeFn {
        let this = self.clone();
        Arc::new(move |t| this.forcing_mag(t))
    }

    /// Transformed history `V^-1 phi(t)`.
    pub fn history_y(&self, t: f64) -> CVector {
        self.decomp.to_eigenbasis(&self.history.eval(t))
    }

    /// Scalar history `phi(t) = |V^-1 phi(t)|` shared by both bound
    /// equations; evaluated pointwise so vector and scalar runs agree
    /// bit for bit.
    pub fn scalar_history(&self) -> HistoryFunction {
        let this = self.clone();
        HistoryFunction::new(
            1,
            Arc::new(move |t| DVector::from_element(1, this.history_y(t).norm())),
        )
    }

    /// Integrate the eigenbasis form itself. The complex state is widened to
    /// interleaved real/imaginary components; the returned closure maps a
    /// node of the widened trajectory back to `x = V y`.
    pub fn simulate_y(
        &self,
        t_end: f64,
        config: &StepConfig,
    ) -> Result<(Trajectory, impl Fn(&DVector<f64>) -> DVector<f64> + '_)> {
        let n = self.dim;
        let widened_history = {
            let this = self.clone();
            HistoryFunction::new(
                2 * n,
                Arc::new(move |t| {
                    let y = this.history_y(t);
                    interleave(&y)
                }),
            )
        };
        let diag = self.decomp.diagonal();
        let this = self.clone();
        let rhs = move |t: f64, u: &DVector<f64>, ud: &[DVector<f64>]| {
            let y = deinterleave(u);
            let yd: Vec<CVector> = ud.iter().map(|v| deinterleave(v)).collect();
            let mut dy: CVector = &diag * &y;
            dy += this.offset.transformed(t).expect("finite offset") * &y;
            dy += this.f_eigen(t, &y, &yd);
            if !this.forcing.is_zero() {
                let fs = this.forcing.f_star(t).map(|r| C64::new(r, 0.0));
                dy += this.decomp.v_inv() * fs;
            }
            interleave(&dy)
        };
        let traj = dde::integrate(rhs, &self.delays, &widened_history, self.t0, t_end, config)?;
        let v = self.decomp.v().clone();
        let back = move |u: &DVector<f64>| -> DVector<f64> {
            let y = deinterleave(u);
            (&v * y).map(|z| z.re)
        };
        Ok((traj, back))
    }
}

fn interleave(y: &CVector) -> DVector<f64> {
    let n = y.len();
    DVector::from_fn(2 * n, |i, _| {
        let k = i / 2;
        if i % 2 == 0 {
            y[k].re
        } else {
            y[k].im
        }
    })
}

fn deinterleave(u: &DVector<f64>) -> CVector {
    let n = u.len() / 2;
    CVector::from_fn(n, |k, _| C64::new(u[2 * k], u[2 * k + 1]))
}

/// Rewrite the system in the eigenbasis of its averaged matrix.
pub fn to_eigenbasis(
    sys: &VectorDelaySystem,
    decomp: &EigenDecomposition,
) -> Result<EigenbasisSystem> {
    sys.validate()?;
    if decomp.order() != sys.dim {
        return Err(Error::DimensionMismatch(format!(
            "decomposition order {} != system dimension {}",
            decomp.order(),
            sys.dim
        )));
    }
    // The decomposition must reproduce this system's averaged matrix.
    let rebuilt = decomp.v() * decomp.diagonal() * decomp.v_inv();
    let scale = spectral_norm(&complexify(&sys.a_star))?.max(1.0);
    let res = spectral_norm(&(rebuilt - complexify(&sys.a_star)))?;
    if res > 1e-6 * scale {
        return Err(Error::DimensionMismatch(format!(
            "decomposition does not match A* (residual {res:.3e})"
        )));
    }
    Ok(EigenbasisSystem {
        decomp: decomp.clone(),
        offset: offset_split(sys.g_star.clone(), decomp),
        nonlinearity: sys.nonlinearity.clone(),
        forcing: sys.forcing.clone(),
        history: sys.history.clone(),
        delays: sys.delays.clone(),
        t0: sys.t0,
        dim: sys.dim,
    })
}

/// Which cubic coupling the 4-dimensional benchmark carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OscKind {
    /// Cubic terms on the velocity components (slots 2 and 4).
    VanDerPol,
    /// Cubic terms on the position components (slots 1 and 3).
    Duffing,
}

impl OscKind {
    pub fn tag(&self) -> &'static str {
        match self {
            OscKind::VanDerPol => "vdp",
            OscKind::Duffing => "duf",
        }
    }
}

/// Free parameters of the coupled-oscillator benchmarks. The frequencies
/// `w1^2 = 1`, `w2^2 = 4`, the coupling `d = 4` and the angular rates of
/// the sinusoidal coefficients are fixed.
#[derive(Clone, Copy, Debug)]
pub struct OscParams {
    pub mu: [f64; 2],
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub chi: [f64; 2],
    pub h1: f64,
    pub h2: f64,
    pub f0: [f64; 2],
    /// First history amplitude: `phi(t) = [x01, 0, 0, 0]^T cos t`.
    pub x01: f64,
}

impl Default for OscParams {
    fn default() -> Self {
        Self {
            mu: [-3.0, -3.0],
            a: [0.0, 0.0],
            b: [0.0, 0.0],
            chi: [0.4, 0.4],
            h1: 10.0,
            h2: 12.0,
            f0: [0.0, 0.0],
            x01: 0.1,
        }
    }
}

pub const OSC_W1_SQ: f64 = 1.0;
pub const OSC_W2_SQ: f64 = 4.0;
pub const OSC_COUPLING: f64 = 4.0;
pub const OSC_Q: [f64; 2] = [5.43, 10.0];
pub const OSC_R: [f64; 2] = [3.14, 6.15];
pub const OSC_S: [f64; 2] = [3.1, 6.28];

pub fn make_vdp(params: &OscParams) -> Result<VectorDelaySystem> {
    make_oscillator(OscKind::VanDerPol, params)
}

pub fn make_duf(params: &OscParams) -> Result<VectorDelaySystem> {
    make_oscillator(OscKind::Duffing, params)
}

pub fn make_oscillator(kind: OscKind, params: &OscParams) -> Result<VectorDelaySystem> {
    if !(params.h1 > 0.0) || !(params.h2 > 0.0) {
        return Err(Error::InvalidParam(format!(
            "delays must be positive, got h1 = {}, h2 = {}",
            params.h1, params.h2
        )));
    }
    let d = OSC_COUPLING;
    let a_star = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 1.0, 0.0, 0.0,
            -(OSC_W1_SQ + d), -params.chi[0], d, 0.0,
            0.0, 0.0, 0.0, 1.0,
            d, 0.0, -(OSC_W2_SQ + d), -params.chi[1],
        ],
    );

    let g21 = SinusoidSum {
        constant: 0.0,
        terms: vec![(params.a[0], OSC_R[0], 0.0), (params.a[1], OSC_R[1], 0.0)],
    };
    let g43 = SinusoidSum {
        constant: 0.0,
        terms: vec![(params.b[0], OSC_S[0], 0.0), (params.b[1], OSC_S[1], 0.0)],
    };
    let g_star: MatrixFn = {
        let (g21, g43) = (g21.clone(), g43.clone());
        Arc::new(move |t| {
            let mut m = DMatrix::zeros(4, 4);
            m[(1, 0)] = -g21.eval(t);
            m[(3, 2)] = -g43.eval(t);
            m
        })
    };

    let mut terms = Vec::new();
    if params.a.iter().any(|&a| a != 0.0) {
        let g = g21.clone();
        terms.push(MonomialTerm::new(
            1,
            Arc::new(move |t| -g.eval(t)),
            vec![MonomialFactor { slot: 1, comp: 0, power: 1 }],
        ));
    }
    if params.b.iter().any(|&b| b != 0.0) {
        let g = g43.clone();
        terms.push(MonomialTerm::new(
            3,
            Arc::new(move |t| -g.eval(t)),
            vec![MonomialFactor { slot: 1, comp: 2, power: 1 }],
        ));
    }
    let cubic_comps = match kind {
        OscKind::VanDerPol => [1usize, 3usize],
        OscKind::Duffing => [0usize, 2usize],
    };
    for (i, &comp) in cubic_comps.iter().enumerate() {
        let mu = params.mu[i];
        if mu != 0.0 {
            terms.push(MonomialTerm::new(
                2 * i + 1,
                Arc::new(move |_| -mu),
                vec![MonomialFactor { slot: 2, comp, power: 3 }],
            ));
        }
    }
    let nonlinearity = PolynomialNonlinearity::new(4, 2, terms)?;

    let forcing = {
        let f0 = (params.f0[0].powi(2) + params.f0[1].powi(2)).sqrt();
        if f0 > 0.0 {
            let amp = [params.f0[0] / f0, params.f0[1] / f0];
            Forcing::new(
                4,
                f0,
                Arc::new(move |t| {
                    DVector::from_column_slice(&[
                        0.0,
                        amp[0] * (OSC_Q[0] * t).sin(),
                        0.0,
                        amp[1] * (OSC_Q[1] * t).sin(),
                    ])
                }),
            )?
        } else {
            Forcing::zero(4)
        }
    };

    let x01 = params.x01;
    let history = HistoryFunction::new(
        4,
        Arc::new(move |t: f64| DVector::from_column_slice(&[x01 * t.cos(), 0.0, 0.0, 0.0])),
    );

    Ok(VectorDelaySystem {
        dim: 4,
        t0: 0.0,
        a_star,
        g_star,
        nonlinearity,
        forcing,
        delays: DelaySet::constant(&[params.h1, params.h2])?,
        history,
    })
}

/// Decompose the averaged matrix and rewrite in one call.
pub fn eigenbasis_of(sys: &VectorDelaySystem) -> Result<(EigenDecomposition, EigenbasisSystem)> {
    let decomp = eigendecompose(&sys.a_star)?;
    let esys = to_eigenbasis(sys, &decomp)?;
    Ok((decomp, esys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fig1a() -> OscParams {
        OscParams::default()
    }

    #[test]
    fn nonlinearity_vanishes_at_origin_by_construction() {
        assert!(matches!(
            PolynomialNonlinearity::new(
                2,
                0,
                vec![MonomialTerm::new(0, Arc::new(|_| 1.0), vec![])]
            ),
            Err(Error::UnsupportedForm(_))
        ));
    }

    #[test]
    fn eval_rhs_trivial_and_linear() {
        let sys = make_vdp(&OscParams { f0: [0.0, 0.0], ..fig1a() }).unwrap();
        let zero = DVector::zeros(4);
        let out = sys
            .eval_rhs(0.3, &zero, &[zero.clone(), zero.clone()])
            .unwrap();
        assert_eq!(out.norm(), 0.0);

        // n = 1, A* = -1, no G*/f*/F: x = 2 -> -2.
        let lin = VectorDelaySystem {
            dim: 1,
            t0: 0.0,
            a_star: DMatrix::from_element(1, 1, -1.0),
            g_star: crate::timefn::zero_matrix(1),
            nonlinearity: PolynomialNonlinearity::empty(1, 0),
            forcing: Forcing::zero(1),
            delays: DelaySet::none(),
            history: HistoryFunction::constant_scalar(2.0),
        };
        let out = lin
            .eval_rhs(0.0, &DVector::from_element(1, 2.0), &[])
            .unwrap();
        assert_eq!(out[0], -2.0);
    }

    #[test]
    fn vdp_rhs_matches_hand_evaluation() {
        // Figure 1a parameters, x = e1, xd = x: component 2 collects
        // -(w1^2 + d) * 1 - mu1 * 0^3 = -5; no G* because a = b = 0.
        let sys = make_vdp(&fig1a()).unwrap();
        let x = DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]);
        let out = sys.eval_rhs(0.7, &x, &[x.clone(), x.clone()]).unwrap();
        assert_relative_eq!(out[1], -5.0, epsilon = 1e-14);
        assert_eq!(out[0], 0.0);
        assert_relative_eq!(out[3], 4.0, epsilon = 1e-14);

        // With a != 0 component 2 collects the undelayed G* x term and the
        // delayed G* x(t-h1) term of f*; with xd = x they coincide.
        let sys = make_vdp(&OscParams { a: [0.1, 0.2], ..fig1a() }).unwrap();
        let t = 0.7;
        let g21 = 0.1 * (OSC_R[0] * t).sin() + 0.2 * (OSC_R[1] * t).sin();
        let out = sys.eval_rhs(t, &x, &[x.clone(), x.clone()]).unwrap();
        assert_relative_eq!(out[1], -5.0 - 2.0 * g21, epsilon = 1e-14);
    }

    #[test]
    fn duf_puts_cubics_on_positions() {
        let sys = make_duf(&fig1a()).unwrap();
        let x = DVector::from_column_slice(&[2.0, 0.0, 0.0, 0.0]);
        // mu1 = -3: f2 = -mu1 x1^3(t-h2) = 3 * 8 = 24, plus A* row 2 = -5*2.
        let out = sys.eval_rhs(0.0, &x, &[x.clone(), x.clone()]).unwrap();
        assert_relative_eq!(out[1], -10.0 + 24.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_coefficients_drop_delayed_linear_part() {
        let sys = make_vdp(&fig1a()).unwrap();
        assert_eq!(sys.nonlinearity.terms().len(), 2); // cubics only
        let g = (sys.g_star)(1.23);
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn preset_g_star_is_zero_mean_over_whole_periods() {
        let sys = make_vdp(&OscParams { a: [0.1, 0.1], b: [0.1, 0.1], ..fig1a() }).unwrap();
        // 200*pi covers whole periods of r1 = 3.14, r2 = 6.15, s1 = 3.1
        // and s2 = 6.28 simultaneously.
        let avg =
            crate::spectral::estimate_a_star(&sys.g_star, 0.0, 200.0 * std::f64::consts::PI)
                .unwrap();
        assert!(avg.iter().all(|v| v.abs() <= 1e-6), "avg = {avg}");
    }

    #[test]
    fn forcing_direction_validates_for_presets() {
        let sys = make_vdp(&OscParams { f0: [0.0, 0.001], ..fig1a() }).unwrap();
        assert_relative_eq!(sys.forcing.f0, 0.001);
        sys.forcing
            .validate_direction(0.0, 4.0 * std::f64::consts::PI)
            .unwrap();
        let fs = sys.forcing.f_star(0.3);
        assert_eq!(fs[0], 0.0);
        assert_eq!(fs[1], 0.0);
        assert_relative_eq!(fs[3], 0.001 * (10.0 * 0.3f64).sin(), epsilon = 1e-15);
    }

    #[test]
    fn invalid_delays_rejected() {
        assert!(matches!(
            make_vdp(&OscParams { h1: 0.0, ..fig1a() }),
            Err(Error::InvalidParam(_))
        ));
        assert!(matches!(
            make_vdp(&OscParams { h2: -1.0, ..fig1a() }),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn trivial_solution_persists() {
        let sys = make_vdp(&OscParams { x01: 0.0, ..fig1a() }).unwrap();
        let (traj, norms) = sys.simulate(10.0, &StepConfig::default()).unwrap();
        assert!(traj.blowup().is_none());
        assert!(norms.iter().all(|&(_, n)| n <= 1e-12));
    }

    #[test]
    fn stable_linear_norm_decays() {
        let lin = VectorDelaySystem {
            dim: 2,
            t0: 0.0,
            a_star: DMatrix::from_diagonal(&DVector::from_column_slice(&[-1.0, -2.0])),
            g_star: crate::timefn::zero_matrix(2),
            nonlinearity: PolynomialNonlinearity::empty(2, 0),
            forcing: Forcing::zero(2),
            delays: DelaySet::none(),
            history: HistoryFunction::constant(DVector::from_column_slice(&[1.0, 1.0])),
        };
        let (_, norms) = lin.simulate(5.0, &StepConfig::default()).unwrap();
        for w in norms.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-12);
        }
    }

    #[test]
    fn identity_basis_transform_is_identity() {
        let lin = VectorDelaySystem {
            dim: 2,
            t0: 0.0,
            a_star: DMatrix::from_diagonal(&DVector::from_column_slice(&[-1.0, -2.0])),
            g_star: crate::timefn::zero_matrix(2),
            nonlinearity: PolynomialNonlinearity::new(
                2,
                0,
                vec![MonomialTerm::new(
                    0,
                    Arc::new(|_| 0.5),
                    vec![MonomialFactor { slot: 0, comp: 1, power: 2 }],
                )],
            )
            .unwrap(),
            forcing: Forcing::zero(2),
            delays: DelaySet::none(),
            history: HistoryFunction::constant(DVector::from_column_slice(&[0.3, -0.4])),
        };
        let (decomp, esys) = eigenbasis_of(&lin).unwrap();
        assert!(spectral_norm(&(decomp.v() - CMatrix::identity(2, 2))).unwrap() < 1e-12);
        let y = CVector::from_fn(2, |i, _| C64::new(0.2 + i as f64, 0.0));
        let f = esys.f_eigen(0.0, &y, &[]);
        assert_relative_eq!(f[0].re, 0.5 * 1.2f64 * 1.2, epsilon = 1e-12);
        assert_relative_eq!(f[0].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn eigenbasis_nonlinearity_round_trip() {
        // |V f(t, y...) - f*(t, Vy...)| small on random samples.
        let sys = make_vdp(&OscParams { a: [0.1, 0.1], b: [0.1, 0.1], ..fig1a() }).unwrap();
        let (decomp, esys) = eigenbasis_of(&sys).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let t = rng.gen_range(0.0..20.0);
            let y: Vec<CVector> = (0..3)
                .map(|_| {
                    CVector::from_fn(4, |_, _| {
                        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    })
                })
                .collect();
            let f_e = esys.f_eigen(t, &y[0], &y[1..]);
            let args: Vec<CVector> = y.iter().map(|v| decomp.v() * v).collect();
            let f_star = sys.nonlinearity.eval_complex(t, &args);
            let diff = (decomp.v() * f_e - &f_star).norm();
            assert!(diff <= 1e-9 * (1.0 + f_star.norm()), "diff = {diff}");
        }
    }

    #[test]
    fn forcing_mag_bounded_by_norms() {
        let sys = make_vdp(&OscParams { f0: [0.0, 0.001], ..fig1a() }).unwrap();
        let (decomp, esys) = eigenbasis_of(&sys).unwrap();
        for k in 0..100 {
            let t = 0.37 * k as f64;
            assert!(esys.forcing_mag(t) <= decomp.norm_v_inv() * sys.forcing.f0 + 1e-15);
        }
    }

    #[test]
    fn eigenbasis_simulation_matches_vector_simulation() {
        let sys = make_vdp(&OscParams { x01: 0.01, ..fig1a() }).unwrap();
        let (_, esys) = eigenbasis_of(&sys).unwrap();
        let config = StepConfig::default();
        let (xs, _) = sys.simulate(20.0, &config).unwrap();
        let (ys, back) = esys.simulate_y(20.0, &config).unwrap();
        assert_eq!(xs.len(), ys.len());
        for k in 0..xs.len() {
            let x = xs.node_state(k);
            let xv = back(ys.node_state(k));
            let diff = (x - &xv).norm();
            assert!(
                diff <= 1e-6 * (1.0 + x.norm()),
                "node {k}: diff = {diff:.3e}"
            );
        }
    }
}
