//! Recursive trackers: the joint beam/channel stochastic-Newton tracker
//! (quasi-static and Gauss–Markov variants), the direction-only tracker for
//! Rayleigh gains, the mean-field map, the offline/online fast update with
//! instrumented operation counting, and two baselines (codebook beam
//! switching and an extended Kalman filter).
//!
//! Every tracker probes three beams per exploration cycle and is driven
//! through the [`Tracker`] trait: the harness asks for the probe directions,
//! observes, and feeds the observation back to `step`.

use core::f64::consts::PI;

use crate::array_core::{aoa_from_dpv_projected, element_gain_linear, ArrayConfig, Dpv, PatternConfig};
use crate::estimation_theory::{
    di_score_terms, fisher_di, fisher_static, score_di, score_static, DiModel, ProbeParts,
};
use crate::linalg::{dotc, inv2, inv4, matvec2, matvec4, CMat3, Mat2, Mat4};
use crate::signal_model::{noiseless_mean, probe_directions, ChannelParams, Ebm, Observation, OffsetSet};
use crate::{Error, Result, C64};

const J: C64 = C64::new(0.0, 1.0);
/// `|β̂|²` below this makes the joint Fisher matrix numerically singular.
const GAIN_FLOOR: f64 = 1e-24;

/// Step-size rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `b_k = epsilon/(k + k0)`.
    Diminishing {
        /// Numerator `ε > 0`.
        epsilon: f64,
        /// Index shift `k₀ ≥ 0`.
        k0: f64,
    },
    /// `b_k = b`.
    Constant {
        /// Step size `b > 0`.
        b: f64,
    },
}

impl StepSchedule {
    /// `b_k = 1/k`.
    pub const HARMONIC: Self = Self::Diminishing { epsilon: 1.0, k0: 0.0 };

    /// Checks parameter ranges.
    ///
    /// # Errors
    /// [`Error::InvalidConfig`] for non-positive or non-finite parameters.
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Diminishing { epsilon, k0 } => epsilon.is_finite() && epsilon > 0.0 && k0.is_finite() && k0 >= 0.0,
            Self::Constant { b } => b.is_finite() && b > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(alloc::format!("invalid step schedule {self:?}")))
        }
    }

    /// Step size for the `k`-th update (`k ≥ 1`).
    #[must_use]
    pub fn step(&self, k: usize) -> f64 {
        match *self {
            Self::Diminishing { epsilon, k0 } => epsilon / (k as f64 + k0),
            Self::Constant { b } => b,
        }
    }
}

/// Arithmetic wrapper counting complex multiplications and divisions.
///
/// Additions, subtractions, conjugation and taking real or imaginary parts
/// are free; any product or quotient (complex×complex, real×complex or
/// real×real) counts as one operation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter {
    ops: usize,
}

impl OpCounter {
    /// Fresh counter.
    #[must_use]
    pub const fn new() -> Self {
        Self { ops: 0 }
    }

    /// Operations counted so far.
    #[must_use]
    pub const fn count(&self) -> usize {
        self.ops
    }

    /// `a·b` for complex operands.
    pub fn mul(&mut self, a: C64, b: C64) -> C64 {
        self.ops += 1;
        a * b
    }

    /// `a·b` for a real scalar and a complex operand.
    pub fn scale(&mut self, a: f64, b: C64) -> C64 {
        self.ops += 1;
        b * a
    }

    /// `a·b` for real operands.
    pub fn mul_real(&mut self, a: f64, b: f64) -> f64 {
        self.ops += 1;
        a * b
    }

    /// `a/b` for real operands.
    pub fn div_real(&mut self, a: f64, b: f64) -> f64 {
        self.ops += 1;
        a / b
    }

    /// `|a|² = a*·a`.
    pub fn norm_sqr(&mut self, a: C64) -> f64 {
        self.ops += 1;
        a.norm_sqr()
    }

    /// `uᴴv` for 3-vectors (three products).
    pub fn dotc3(&mut self, u: &[C64; 3], v: &[C64; 3]) -> C64 {
        (0..3).map(|i| self.mul(u[i].conj(), v[i])).sum()
    }
}

/// Offline quantities of the joint tracker's fast update. All entries depend
/// only on the offsets, the array size and the pilot amplitude.
///
/// With `P = [U₁, β̂U₂]`, `U₁ = Wᴴ[a, ja]`, `U₂ = Wᴴ[∂₁a, ∂₂a]` (all at the
/// beam center), the Fisher matrix is `(2|s|²/σ²)Re{PᴴP}` and its inverse
/// splits into a β̂-free part plus terms in `1/|β̂|²`, `β̂/|β̂|²` and
/// `β̂²/|β̂|²` with cached coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastUpdateCache {
    /// `U₁` (3×2).
    pub u1: [[C64; 2]; 3],
    /// `U₂` (3×2).
    pub u2: [[C64; 2]; 3],
    /// `Ã⁻¹ = (Re{U₁ᴴU₁})⁻¹ = I/‖e‖²`.
    pub a_tilde_inv: Mat2,
    /// `B̃ = U₁ᴴU₂`; its second row is `−j` times the first.
    pub b_tilde: [[C64; 2]; 2],
    /// `Ĩ_s⁻¹ = (Re{U₂ᴴU₂} − Re{B̃ᴴÃ⁻¹B̃}/2)⁻¹`.
    pub is_tilde_inv: Mat2,
    /// Offset-only beam responses `e_i = w_iᴴa(x̂)`.
    pub e: [C64; 3],
    /// Offset-only derivative responses `d_{p,i} = w_iᴴ∂a(x̂)/∂x_p`.
    pub d: [[C64; 3]; 2],
    /// `|s|·e`.
    s_e: [C64; 3],
    /// β̂-free top-left block of the inverse, divided by `|s|`.
    p0: Mat2,
    /// Coefficient of the `β̂²/|β̂|²` top-left term, divided by `|s|`.
    t: C64,
    /// First row of `Ã⁻¹B̃Ĩ_s⁻¹`, divided by `|s|`.
    c_row: [C64; 2],
    /// `Ĩ_s⁻¹/|s|`.
    k_scaled: Mat2,
}

impl FastUpdateCache {
    /// Offline construction.
    ///
    /// # Errors
    /// [`Error::SingularFisher`] for degenerate offsets;
    /// [`Error::InvalidConfig`] for zero pilot amplitude.
    pub fn build(cfg: &ArrayConfig, offsets: &OffsetSet) -> Result<Self> {
        if !(cfg.pilot_amp > 0.0) {
            return Err(Error::InvalidConfig("the joint tracker needs pilot_amp > 0".into()));
        }
        let parts = ProbeParts::from_offsets(cfg, offsets);
        let (e, d) = (parts.g, parts.d);
        let u1 = e.map(|v| [v, J * v]);
        let u2: [[C64; 2]; 3] = core::array::from_fn(|i| [d[0][i], d[1][i]]);
        let n2: f64 = e.iter().map(|v| v.norm_sqr()).sum();
        if !(n2 > 0.0) {
            return Err(Error::SingularFisher);
        }
        let a = 1.0 / n2;
        let b_row = [dotc(&e, &d[0]), dotc(&e, &d[1])];
        let b_tilde = [b_row, b_row.map(|v| -J * v)];
        let d_tilde: Mat2 = core::array::from_fn(|p| core::array::from_fn(|q| dotc(&d[p], &d[q]).re));
        // Re{B̃ᴴÃ⁻¹B̃}/2 = a·Re{b̄ bᵀ}.
        let is_tilde: Mat2 =
            core::array::from_fn(|p| core::array::from_fn(|q| d_tilde[p][q] - a * (b_row[p].conj() * b_row[q]).re));
        let k = inv2(&is_tilde)?;
        // b K (complex row vector) and the scalar b K bᵀ.
        let bk: [C64; 2] = core::array::from_fn(|j| b_row[0] * k[0][j] + b_row[1] * k[1][j]);
        let bkbt = bk[0] * b_row[0] + bk[1] * b_row[1];
        let bkbh = (bk[0] * b_row[0].conj() + bk[1] * b_row[1].conj()).re;
        // Re{B̃KB̃ᴴ} = bKbᴴ·Re{[[1, j], [−j, 1]]} = bKbᴴ·I.
        let p0_unscaled = a + 0.5 * a * a * bkbh;
        let s = cfg.pilot_amp;
        Ok(Self {
            u1,
            u2,
            a_tilde_inv: [[a, 0.0], [0.0, a]],
            b_tilde,
            is_tilde_inv: k,
            e,
            d,
            s_e: e.map(|v| v * s),
            p0: [[p0_unscaled / s, 0.0], [0.0, p0_unscaled / s]],
            t: bkbt * (0.5 * a * a / s),
            c_row: bk.map(|v| v * (a / s)),
            k_scaled: k.map(|r| r.map(|v| v / s)),
        })
    }

    /// Update direction `ς = I_S⁻¹ ∂log p/∂ψ` at `β̂` for an observation
    /// taken with beams centered at the current direction estimate, counting
    /// online operations in `ops`.
    ///
    /// # Errors
    /// [`Error::SingularFisher`] when `β̂` is numerically zero.
    pub fn direction(&self, beta_hat: C64, y: &Observation, ops: &mut OpCounter) -> Result<[f64; 4]> {
        // Score (up to the cached scale): Re{Pᴴ r} with r = y − |s|β̂e.
        let r: [C64; 3] = core::array::from_fn(|i| y.y[i] - ops.mul(beta_hat, self.s_e[i]));
        let et: [[C64; 3]; 2] = core::array::from_fn(|p| core::array::from_fn(|i| ops.mul(beta_hat, self.d[p][i])));
        let z0 = ops.dotc3(&self.e, &r);
        let z1 = ops.dotc3(&et[0], &r);
        let z2 = ops.dotc3(&et[1], &r);
        let s_raw = [z0.re, z0.im, z1.re, z2.re];

        // Inverse Fisher from the cached blocks.
        let b2 = ops.norm_sqr(beta_hat);
        if !(b2 > GAIN_FLOOR) || !b2.is_finite() {
            return Err(Error::SingularFisher);
        }
        let v = ops.div_real(1.0, b2);
        let u = ops.scale(v, beta_hat);
        let nu2 = ops.mul(beta_hat, u);
        let q = ops.mul(nu2, self.t);
        let omega = [ops.mul(u, self.c_row[0]), ops.mul(u, self.c_row[1])];
        let mut inv: Mat4 = [[0.0; 4]; 4];
        inv[0][0] = self.p0[0][0] + q.re;
        inv[1][1] = self.p0[1][1] - q.re;
        inv[0][1] = self.p0[0][1] + q.im;
        inv[1][0] = self.p0[1][0] + q.im;
        for j in 0..2 {
            inv[0][2 + j] = -omega[j].re;
            inv[1][2 + j] = -omega[j].im;
            inv[2 + j][0] = -omega[j].re;
            inv[2 + j][1] = -omega[j].im;
            for i in 0..2 {
                inv[2 + i][2 + j] = ops.mul_real(v, self.k_scaled[i][j]);
            }
        }
        Ok(core::array::from_fn(|i| (0..4).map(|j| ops.mul_real(inv[i][j], s_raw[j])).sum()))
    }
}

/// Reference update direction `I_S⁻¹ ∂log p_S(y|ψ̂)/∂ψ` from explicit
/// Fisher construction and a general 4×4 inverse.
///
/// # Errors
/// [`Error::SingularFisher`] when the Fisher matrix is singular.
pub fn naive_direction(cfg: &ArrayConfig, psi_hat: &ChannelParams, ebm: &Ebm, y: &Observation) -> Result<[f64; 4]> {
    let inv = inv4(&fisher_static(cfg, psi_hat, ebm).m)?;
    Ok(matvec4(&inv, &score_static(cfg, psi_hat, ebm, y)))
}

/// Mean field `f_ψ(ψ̂) = E[ς]` for the true channel `ψ`, probing with `ebm`.
///
/// # Errors
/// [`Error::SingularFisher`] when the Fisher matrix at `ψ̂` is singular.
pub fn mean_field(psi_hat: &ChannelParams, psi_true: &ChannelParams, cfg: &ArrayConfig, ebm: &Ebm) -> Result<[f64; 4]> {
    // ς is affine in y, so its mean is ς evaluated at the noiseless mean.
    let mean = Observation { y: noiseless_mean(cfg, psi_true, ebm) };
    naive_direction(cfg, psi_hat, ebm, &mean)
}

/// Common interface the harness drives.
pub trait Tracker {
    /// Beam directions for the next exploration cycle.
    fn probe_directions(&self) -> [Dpv; 3];
    /// Initializes the gain estimate from one cycle probed at the initial
    /// direction estimate.
    fn bootstrap(&mut self, cfg: &ArrayConfig, y: &Observation);
    /// Consumes one observation taken with [`Tracker::probe_directions`].
    ///
    /// # Errors
    /// [`Error::SingularFisher`] when the update was skipped.
    fn step(&mut self, cfg: &ArrayConfig, y: &Observation) -> Result<()>;
    /// Current direction estimate.
    fn direction(&self) -> Dpv;
    /// Overrides the direction estimate (used to clamp into the physical range).
    fn set_direction(&mut self, x: Dpv);
    /// Current gain estimate, if the tracker keeps one.
    fn gain(&self) -> Option<C64>;
    /// Online operations spent in the last update.
    fn ops_last_ecc(&self) -> usize {
        0
    }
}

/// Least-squares gain fit `β̂ = eᴴy/(|s|‖e‖²)` for beams at the direction
/// estimate with the given offsets.
#[must_use]
pub fn bootstrap_beta(cfg: &ArrayConfig, offsets: &OffsetSet, y: &Observation) -> C64 {
    let e = ProbeParts::from_offsets(cfg, offsets).g;
    let n2: f64 = e.iter().map(|v| v.norm_sqr()).sum();
    dotc(&e, &y.y) / (cfg.pilot_amp * n2)
}

/// State of the joint beam/channel tracker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JbctState {
    /// Current estimate `ψ̂_k`.
    pub psi_hat: ChannelParams,
    /// Number of updates performed.
    pub k: usize,
    /// Step-size rule.
    pub schedule: StepSchedule,
    /// Exploration offsets.
    pub offsets: OffsetSet,
    /// Offline fast-update cache.
    pub cache: FastUpdateCache,
    /// Online operations of the most recent update.
    pub op_count_last_ecc: usize,
}

impl JbctState {
    /// New tracker at `psi0` (its gain is typically replaced by [`Tracker::bootstrap`]).
    ///
    /// # Errors
    /// As [`FastUpdateCache::build`] and [`StepSchedule::validate`].
    pub fn new(cfg: &ArrayConfig, offsets: OffsetSet, schedule: StepSchedule, psi0: ChannelParams) -> Result<Self> {
        schedule.validate()?;
        Ok(Self { psi_hat: psi0, k: 0, schedule, offsets, cache: FastUpdateCache::build(cfg, &offsets)?, op_count_last_ecc: 0 })
    }
}

fn jbct_step(state: &mut JbctState, y: &Observation) -> Result<()> {
    state.k += 1;
    let mut ops = OpCounter::new();
    let dir = state.cache.direction(state.psi_hat.beta, y, &mut ops);
    state.op_count_last_ecc = ops.count();
    let dir = dir?;
    let b = state.schedule.step(state.k);
    let v = state.psi_hat.to_array();
    state.psi_hat = ChannelParams::from_array(core::array::from_fn(|i| v[i] + b * dir[i]));
    Ok(())
}

/// One quasi-static update `ψ̂_k = ψ̂_{k−1} + b_k ς_k` via the fast path.
/// `y` must have been observed with beams at [`Tracker::probe_directions`].
///
/// # Errors
/// [`Error::SingularFisher`]: the update is skipped but `k` still advances.
pub fn jbct_static_step(state: &mut JbctState, y: &Observation) -> Result<()> {
    jbct_step(state, y)
}

/// Gauss–Markov variant: identical algebra, intended for a constant schedule.
///
/// # Errors
/// As [`jbct_static_step`].
pub fn jbct_dii_step(state: &mut JbctState, y: &Observation) -> Result<()> {
    jbct_step(state, y)
}

impl Tracker for JbctState {
    fn probe_directions(&self) -> [Dpv; 3] {
        probe_directions(self.psi_hat.x, &self.offsets)
    }
    fn bootstrap(&mut self, cfg: &ArrayConfig, y: &Observation) {
        self.psi_hat.beta = bootstrap_beta(cfg, &self.offsets, y);
    }
    fn step(&mut self, _cfg: &ArrayConfig, y: &Observation) -> Result<()> {
        jbct_step(self, y)
    }
    fn direction(&self) -> Dpv {
        self.psi_hat.x
    }
    fn set_direction(&mut self, x: Dpv) {
        self.psi_hat.x = x;
    }
    fn gain(&self) -> Option<C64> {
        Some(self.psi_hat.beta)
    }
    fn ops_last_ecc(&self) -> usize {
        self.op_count_last_ecc
    }
}

/// Offline quantities of the direction-only tracker: with beams centered
/// at `x̂`, `g = e` is offset-only, so the score's derivative matrices and
/// the inverse Fisher matrix are constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbtCache {
    /// `K_p = ∂Σ⁻¹/∂x_p`.
    pub k_mats: [CMat3; 2],
    /// `c_p = −∂_p|Σ|/|Σ|`.
    pub c: [f64; 2],
    /// `I_DI⁻¹`.
    pub inv_fisher: Mat2,
    /// Gain variance the cache was built for.
    pub sigma_beta_sq: f64,
}

impl RbtCache {
    /// Offline construction.
    ///
    /// # Errors
    /// [`Error::SingularFisher`] for degenerate offsets or zero gain variance.
    pub fn build(cfg: &ArrayConfig, offsets: &OffsetSet, model: &DiModel) -> Result<Self> {
        let parts = ProbeParts::from_offsets(cfg, offsets);
        let fi = crate::estimation_theory::fisher_di_from_parts(cfg, model, &parts);
        let inv_fisher = inv2(&fi.m)?;
        let terms = di_score_terms(cfg, model, &parts);
        Ok(Self { k_mats: terms.k, c: terms.c, inv_fisher, sigma_beta_sq: model.sigma_beta_sq })
    }

    /// Update direction `I_DI⁻¹ ∂log p_DI(y|x̂)/∂x`, counting online operations.
    pub fn direction(&self, y: &Observation, ops: &mut OpCounter) -> [f64; 2] {
        let score: [f64; 2] = core::array::from_fn(|p| {
            let ky: [C64; 3] =
                core::array::from_fn(|i| (0..3).map(|j| ops.mul(self.k_mats[p][i][j], y.y[j])).sum());
            self.c[p] - ops.dotc3(&y.y, &ky).re
        });
        core::array::from_fn(|i| (0..2).map(|j| ops.mul_real(self.inv_fisher[i][j], score[j])).sum())
    }
}

/// Reference direction-only update from explicit construction.
///
/// # Errors
/// [`Error::SingularFisher`] when `I_DI` is singular.
pub fn naive_direction_di(cfg: &ArrayConfig, x_hat: Dpv, model: &DiModel, ebm: &Ebm, y: &Observation) -> Result<[f64; 2]> {
    let inv = inv2(&fisher_di(cfg, x_hat, model, ebm).m)?;
    Ok(matvec2(&inv, &score_di(cfg, x_hat, model, ebm, y)))
}

/// Source of the gain variance used by the direction-only tracker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainKnowledge {
    /// The equivalent gain variance `|η(x)|²σ_β^c²` is known exactly.
    Perfect {
        /// `σ_β²`.
        sigma_beta_sq: f64,
    },
    /// `σ_β²` is estimated as `|η(x̂)|²σ_β^c²` from the current direction
    /// estimate; the cache is rebuilt whenever the estimate changes (that
    /// rebuild is not part of the online operation count).
    Estimated {
        /// Path-gain variance `σ_β^c²`.
        sigma_beta_c_sq: f64,
        /// Element pattern used to evaluate `η`.
        pattern: PatternConfig,
    },
}

impl GainKnowledge {
    fn sigma_beta_sq(&self, cfg: &ArrayConfig, x_hat: Dpv) -> f64 {
        match *self {
            Self::Perfect { sigma_beta_sq } => sigma_beta_sq,
            Self::Estimated { sigma_beta_c_sq, pattern } => {
                let eta = element_gain_linear(&pattern, aoa_from_dpv_projected(cfg, x_hat));
                eta * eta * sigma_beta_c_sq
            }
        }
    }
}

/// State of the direction-only tracker for Rayleigh gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbtState {
    /// Current estimate `x̂_k`.
    pub x_hat: Dpv,
    /// Number of updates performed.
    pub k: usize,
    /// Step-size rule.
    pub schedule: StepSchedule,
    /// Exploration offsets.
    pub offsets: OffsetSet,
    /// Gain-variance knowledge mode.
    pub knowledge: GainKnowledge,
    /// Offline cache for the current `σ_β²`.
    pub cache: RbtCache,
    /// Online operations of the most recent update.
    pub op_count_last_ecc: usize,
}

impl RbtState {
    /// New tracker at `x0`.
    ///
    /// # Errors
    /// As [`RbtCache::build`] and [`StepSchedule::validate`].
    pub fn new(
        cfg: &ArrayConfig,
        offsets: OffsetSet,
        schedule: StepSchedule,
        knowledge: GainKnowledge,
        x0: Dpv,
    ) -> Result<Self> {
        schedule.validate()?;
        let model = DiModel { sigma_beta_sq: knowledge.sigma_beta_sq(cfg, x0) };
        Ok(Self { x_hat: x0, k: 0, schedule, offsets, knowledge, cache: RbtCache::build(cfg, &offsets, &model)?, op_count_last_ecc: 0 })
    }
}

/// One update `x̂_k = x̂_{k−1} + b_k I_DI⁻¹ ∂log p_DI/∂x`.
///
/// # Errors
/// [`Error::SingularFisher`] if the cache cannot be rebuilt for an estimated
/// gain variance; the update is skipped but `k` still advances.
pub fn rbt_di_step(state: &mut RbtState, cfg: &ArrayConfig, y: &Observation) -> Result<()> {
    state.k += 1;
    let sb = state.knowledge.sigma_beta_sq(cfg, state.x_hat);
    if sb != state.cache.sigma_beta_sq {
        state.cache = RbtCache::build(cfg, &state.offsets, &DiModel { sigma_beta_sq: sb })?;
    }
    let mut ops = OpCounter::new();
    let dir = state.cache.direction(y, &mut ops);
    state.op_count_last_ecc = ops.count();
    let b = state.schedule.step(state.k);
    state.x_hat = state.x_hat.offset([b * dir[0], b * dir[1]]);
    Ok(())
}

impl Tracker for RbtState {
    fn probe_directions(&self) -> [Dpv; 3] {
        probe_directions(self.x_hat, &self.offsets)
    }
    fn bootstrap(&mut self, _cfg: &ArrayConfig, _y: &Observation) {}
    fn step(&mut self, cfg: &ArrayConfig, y: &Observation) -> Result<()> {
        rbt_di_step(self, cfg, y)
    }
    fn direction(&self) -> Dpv {
        self.x_hat
    }
    fn set_direction(&mut self, x: Dpv) {
        self.x_hat = x;
    }
    fn gain(&self) -> Option<C64> {
        None
    }
    fn ops_last_ecc(&self) -> usize {
        self.op_count_last_ecc
    }
}

/// Update kinds with an audited online operation count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    /// Joint tracker, quasi-static schedule.
    JbctStatic,
    /// Joint tracker, Gauss–Markov (constant) schedule.
    JbctDii,
    /// Direction-only tracker.
    Rbt,
}

/// Online complex multiplications and divisions of one update, measured by
/// running an instrumented step on a representative configuration.
///
/// # Panics
/// Never for the built-in configuration.
#[must_use]
pub fn count_ops(kind: StepKind) -> usize {
    let cfg = ArrayConfig::half_wavelength(8, 8);
    let y = Observation { y: [C64::new(1.0, 0.5), C64::new(-0.3, 0.8), C64::new(0.2, -1.1)] };
    match kind {
        StepKind::JbctStatic | StepKind::JbctDii => {
            let schedule = if kind == StepKind::JbctStatic { StepSchedule::HARMONIC } else { StepSchedule::Constant { b: 0.7 } };
            let psi = ChannelParams::new(C64::new(0.8, 0.6), Dpv::new(0.1, -0.2));
            let mut st = JbctState::new(&cfg, OffsetSet::joint_optimal(), schedule, psi).expect("valid built-in configuration");
            jbct_step(&mut st, &y).expect("nonzero gain");
            st.op_count_last_ecc
        }
        StepKind::Rbt => {
            let knowledge = GainKnowledge::Perfect { sigma_beta_sq: 1.0 };
            let mut st = RbtState::new(&cfg, OffsetSet::direction_optimal(), StepSchedule::HARMONIC, knowledge, Dpv::default())
                .expect("valid built-in configuration");
            rbt_di_step(&mut st, &cfg, &y).expect("perfect knowledge never rebuilds");
            st.op_count_last_ecc
        }
    }
}

/// Codebook beam-switching baseline: probe the current codebook beam and its
/// two neighbours along one axis (alternating per cycle), then switch to the
/// strongest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSwitchState {
    /// Current codebook index per axis.
    pub index: [i64; 2],
    /// Codebook spacing (`1/oversampling`).
    pub spacing: f64,
    /// Gain estimate from the selected beam.
    pub beta_hat: C64,
    /// Number of updates performed.
    pub k: usize,
}

impl BeamSwitchState {
    /// Starts at the codebook point nearest `x0`.
    ///
    /// # Errors
    /// [`Error::InvalidConfig`] for non-positive oversampling.
    pub fn new(x0: Dpv, oversampling: f64) -> Result<Self> {
        if !(oversampling.is_finite() && oversampling > 0.0) {
            return Err(Error::InvalidConfig(alloc::format!("oversampling must be > 0, got {oversampling}")));
        }
        let spacing = 1.0 / oversampling;
        let mut s = Self { index: [0, 0], spacing, beta_hat: C64::new(0.0, 0.0), k: 0 };
        s.set_direction(x0);
        Ok(s)
    }

    fn point(&self, index: [i64; 2]) -> Dpv {
        Dpv::new(index[0] as f64 * self.spacing, index[1] as f64 * self.spacing)
    }

    fn probe_indices(&self) -> [[i64; 2]; 3] {
        let axis = self.k % 2;
        let mut lo = self.index;
        let mut hi = self.index;
        lo[axis] -= 1;
        hi[axis] += 1;
        [self.index, lo, hi]
    }
}

/// One beam-switching update: move to the probe with the largest `|y_i|`.
pub fn baseline_beam_switch_step(state: &mut BeamSwitchState, cfg: &ArrayConfig, y: &Observation) {
    let idx = state.probe_indices();
    let best = (0..3).fold(0, |b, i| if y.y[i].norm() > y.y[b].norm() { i } else { b });
    let half = cfg.physical_half_range();
    let mut chosen = idx[best];
    for (axis, h) in half.iter().enumerate() {
        let lim = libm::floor(h / state.spacing) as i64;
        chosen[axis] = chosen[axis].clamp(-lim, lim);
    }
    state.index = chosen;
    state.beta_hat = y.y[best] / (cfg.pilot_amp * libm::sqrt(cfg.mn() as f64));
    state.k += 1;
}

impl Tracker for BeamSwitchState {
    fn probe_directions(&self) -> [Dpv; 3] {
        self.probe_indices().map(|i| self.point(i))
    }
    fn bootstrap(&mut self, cfg: &ArrayConfig, y: &Observation) {
        self.beta_hat = y.y[0] / (cfg.pilot_amp * libm::sqrt(cfg.mn() as f64));
    }
    fn step(&mut self, cfg: &ArrayConfig, y: &Observation) -> Result<()> {
        baseline_beam_switch_step(self, cfg, y);
        Ok(())
    }
    fn direction(&self) -> Dpv {
        self.point(self.index)
    }
    fn set_direction(&mut self, x: Dpv) {
        self.index = [libm::round(x.x1 / self.spacing) as i64, libm::round(x.x2 / self.spacing) as i64];
    }
    fn gain(&self) -> Option<C64> {
        Some(self.beta_hat)
    }
}

/// Extended Kalman filter on the direction with identity dynamics, probing
/// an equilateral triangle around the estimate and refitting the gain by
/// least squares every cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkfState {
    /// Current estimate `x̂_k`.
    pub x_hat: Dpv,
    /// Error covariance.
    pub cov: Mat2,
    /// Prior covariance (also the reset value).
    pub prior_cov: Mat2,
    /// Latest gain estimate.
    pub beta_hat: C64,
    /// Process-noise variance per axis per cycle.
    pub q: f64,
    /// Probing offsets.
    pub offsets: OffsetSet,
    /// Number of updates performed.
    pub k: usize,
}

/// Equilateral triangle of circumradius `radius` with vertices at 90°, 210°
/// and 330°.
#[must_use]
pub fn triangle_offsets(radius: f64) -> OffsetSet {
    let deg = |a: f64| a * PI / 180.0;
    OffsetSet { deltas: [90.0, 210.0, 330.0].map(|a| [radius * libm::cos(deg(a)), radius * libm::sin(deg(a))]) }
}

impl EkfState {
    /// Default circumradius of the probing triangle (half the main lobe).
    pub const TRIANGLE_RADIUS: f64 = 0.5;
    /// Default process noise.
    pub const DEFAULT_Q: f64 = 1e-4;

    /// New filter at `x0` with prior covariance `prior_var·I`.
    #[must_use]
    pub fn new(x0: Dpv, prior_var: f64, q: f64) -> Self {
        let p = [[prior_var, 0.0], [0.0, prior_var]];
        Self {
            x_hat: x0,
            cov: p,
            prior_cov: p,
            beta_hat: C64::new(0.0, 0.0),
            q,
            offsets: triangle_offsets(Self::TRIANGLE_RADIUS),
            k: 0,
        }
    }
}

fn is_psd2(m: &Mat2) -> bool {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    m[0][0] >= 0.0 && m[1][1] >= 0.0 && det >= 0.0 && m.iter().flatten().all(|v| v.is_finite())
}

/// One predict/update cycle (information form, symmetrized; reset to the
/// prior covariance if the result is not positive semi-definite).
pub fn baseline_ekf_step(state: &mut EkfState, cfg: &ArrayConfig, y: &Observation) {
    state.k += 1;
    let parts = ProbeParts::from_offsets(cfg, &state.offsets);
    state.beta_hat = bootstrap_beta(cfg, &state.offsets, y);
    let s = cfg.pilot_amp;
    // Predict.
    let mut p = state.cov;
    p[0][0] += state.q;
    p[1][1] += state.q;
    // Linearized observation: rows (Re, Im) of |s|β̂ d_p per probe, with the
    // component along g removed because the refit gain absorbs it.
    let n2: f64 = parts.g.iter().map(|v| v.norm_sqr()).sum();
    let proj: [[C64; 3]; 2] = core::array::from_fn(|p| {
        let c = dotc(&parts.g, &parts.d[p]) / n2;
        core::array::from_fn(|i| parts.d[p][i] - parts.g[i] * c)
    });
    let h: [[f64; 2]; 6] = core::array::from_fn(|row| {
        core::array::from_fn(|col| {
            let v = proj[col][row / 2] * state.beta_hat * s;
            if row % 2 == 0 { v.re } else { v.im }
        })
    });
    let innov: [f64; 6] = core::array::from_fn(|row| {
        let v = y.y[row / 2] - parts.g[row / 2] * state.beta_hat * s;
        if row % 2 == 0 { v.re } else { v.im }
    });
    let r_inv = 2.0 / cfg.noise_var;
    let info = inv2(&p);
    let updated = info.and_then(|pi| {
        let hth: Mat2 = core::array::from_fn(|i| {
            core::array::from_fn(|j| pi[i][j] + r_inv * (0..6).map(|r| h[r][i] * h[r][j]).sum::<f64>())
        });
        inv2(&hth)
    });
    match updated {
        Ok(pn) => {
            let pn = [[pn[0][0], 0.5 * (pn[0][1] + pn[1][0])], [0.5 * (pn[0][1] + pn[1][0]), pn[1][1]]];
            let hti: [f64; 2] = core::array::from_fn(|i| r_inv * (0..6).map(|r| h[r][i] * innov[r]).sum::<f64>());
            let dx = matvec2(&pn, &hti);
            if is_psd2(&pn) && dx.iter().all(|v| v.is_finite()) {
                state.cov = pn;
                state.x_hat = state.x_hat.offset(dx);
            } else {
                state.cov = state.prior_cov;
            }
        }
        Err(_) => state.cov = state.prior_cov,
    }
}

impl Tracker for EkfState {
    fn probe_directions(&self) -> [Dpv; 3] {
        probe_directions(self.x_hat, &self.offsets)
    }
    fn bootstrap(&mut self, cfg: &ArrayConfig, y: &Observation) {
        self.beta_hat = bootstrap_beta(cfg, &self.offsets, y);
    }
    fn step(&mut self, cfg: &ArrayConfig, y: &Observation) -> Result<()> {
        baseline_ekf_step(self, cfg, y);
        Ok(())
    }
    fn direction(&self) -> Dpv {
        self.x_hat
    }
    fn set_direction(&mut self, x: Dpv) {
        self.x_hat = x;
    }
    fn gain(&self) -> Option<C64> {
        Some(self.beta_hat)
    }
}
