//! Jacobians, Fisher information matrices and Cramér–Rao bounds for the
//! quasi-static model (joint gain and direction, 4 real parameters) and the
//! Rayleigh-gain model (direction only, gain marginalized), together with
//! their closed-form limits for large arrays.
//!
//! Normalizations follow the tracking analysis: [`crlb_static`] returns
//! `C_S = Tr{I_S⁻¹ VᴴV}/(MN)` and [`crlb_di`] returns `C_DI = Tr{I_DI⁻¹}`, both
//! for a single exploration cycle. The asymptotic functions return the limits
//! of `MN·C_S` and `MN·C_DI`.

use core::f64::consts::PI;

use crate::array_core::{beam_response, steering_derivative, steering_vector, ArrayConfig, Axis, BeamResponse, Dpv};
use crate::linalg::{dotc, inv2, inv4, mul3, outer3, trace, trace3, CMat3, Mat2, Mat4};
use crate::signal_model::{ChannelParams, Ebm, Observation, OffsetSet};
use crate::{Result, C64};

const J: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Columns `[a(x), j·a(x), β ∂a/∂x₁, β ∂a/∂x₂]` of the mean's Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianV {
    /// The four `MN`-vectors.
    pub columns: [alloc::vec::Vec<C64>; 4],
}

impl JacobianV {
    /// Gram matrix `VᴴV`.
    #[must_use]
    pub fn gram(&self) -> [[C64; 4]; 4] {
        core::array::from_fn(|i| core::array::from_fn(|j| dotc(&self.columns[i], &self.columns[j])))
    }
}

/// Assembles the Jacobian `V` at `ψ`.
#[must_use]
pub fn jacobian(cfg: &ArrayConfig, psi: &ChannelParams) -> JacobianV {
    let a = steering_vector(cfg, psi.x);
    let ja = a.iter().map(|v| v * J).collect();
    let d1 = steering_derivative(cfg, psi.x, Axis::X1).into_iter().map(|v| v * psi.beta).collect();
    let d2 = steering_derivative(cfg, psi.x, Axis::X2).into_iter().map(|v| v * psi.beta).collect();
    JacobianV { columns: [a, ja, d1, d2] }
}

fn gram_from_moments(beta: C64, s0: f64, s1: [f64; 2], s2: [f64; 2], s11: f64) -> [[C64; 4]; 4] {
    // Columns per element: [1, j, β·j·t₁, β·j·t₂] with t_p the derivative
    // weights; s0 = Σ1, s1 = Σt_p, s2 = Σt_p², s11 = Σt₁t₂.
    let b2 = beta.norm_sqr();
    let mut g = [[ZERO; 4]; 4];
    g[0][0] = C64::new(s0, 0.0);
    g[0][1] = J * s0;
    g[1][1] = C64::new(s0, 0.0);
    for p in 0..2 {
        g[0][2 + p] = J * beta * s1[p];
        g[1][2 + p] = beta * s1[p];
        g[2 + p][2 + p] = C64::new(b2 * s2[p], 0.0);
    }
    g[2][3] = C64::new(b2 * s11, 0.0);
    for i in 0..4 {
        for j in 0..i {
            g[i][j] = g[j][i].conj();
        }
    }
    g
}

/// Closed-form `VᴴV`; independent of `x`.
#[must_use]
pub fn steering_gram(cfg: &ArrayConfig, beta: C64) -> [[C64; 4]; 4] {
    let weights = |len: usize| -> (f64, f64) {
        let l = len as f64;
        (0..len).fold((0.0, 0.0), |(a, b), k| {
            let t = 2.0 * PI * k as f64 / l;
            (a + t, b + t * t)
        })
    };
    let (m1, m2) = weights(cfg.m);
    let (n1, n2) = weights(cfg.n);
    let (mf, nf) = (cfg.m as f64, cfg.n as f64);
    gram_from_moments(beta, mf * nf, [nf * m1, mf * n1], [nf * m2, mf * n2], m1 * n1)
}

/// Limit of `VᴴV/(MN)` as `M, N → ∞`.
#[must_use]
pub fn steering_gram_limit(beta: C64) -> [[C64; 4]; 4] {
    // Normalized weights are 2πu with u uniform on [0, 1].
    gram_from_moments(beta, 1.0, [PI, PI], [4.0 * PI * PI / 3.0; 2], PI * PI)
}

/// Real 4×4 Fisher information of the quasi-static model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherS {
    /// The matrix `I_S`.
    pub m: Mat4,
}

/// Probe-domain Jacobian `P = Wᴴ V` (3×4) given per-probe responses.
fn probe_jacobian(resp: &[BeamResponse; 3], beta: C64) -> [[C64; 4]; 3] {
    resp.map(|r| [r.value, J * r.value, beta * r.deriv[0], beta * r.deriv[1]])
}

fn fisher_from_probe(cfg: &ArrayConfig, p: &[[C64; 4]; 3]) -> FisherS {
    let scale = 2.0 * cfg.pilot_amp * cfg.pilot_amp / cfg.noise_var;
    let m = core::array::from_fn(|i| {
        core::array::from_fn(|j| scale * (0..3).map(|k| (p[k][i].conj() * p[k][j]).re).sum::<f64>())
    });
    FisherS { m }
}

/// Fisher information `I_S = (2|s|²/σ_z²) Re{Vᴴ W Wᴴ V}` by explicit products.
#[must_use]
pub fn fisher_static(cfg: &ArrayConfig, psi: &ChannelParams, ebm: &Ebm) -> FisherS {
    let v = jacobian(cfg, psi);
    let p: [[C64; 4]; 3] = core::array::from_fn(|k| core::array::from_fn(|i| dotc(&ebm.columns[k], &v.columns[i])));
    fisher_from_probe(cfg, &p)
}

fn normalized_trace(inv: &Mat4, gram: &[[C64; 4]; 4]) -> f64 {
    // I⁻¹ is real symmetric, so only Re{VᴴV} contributes to the trace.
    let mut t = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            t += inv[i][j] * gram[j][i].re;
        }
    }
    t
}

/// Normalized single-cycle bound `C_S = Tr{I_S⁻¹ VᴴV}/(MN)`.
///
/// # Errors
/// [`crate::Error::SingularFisher`] for degenerate offsets or zero pilot.
pub fn crlb_static(cfg: &ArrayConfig, psi: &ChannelParams, ebm: &Ebm) -> Result<f64> {
    let fi = fisher_static(cfg, psi, ebm);
    let inv = inv4(&fi.m)?;
    let gram = jacobian(cfg, psi).gram();
    Ok(normalized_trace(&inv, &gram) / cfg.mn() as f64)
}

/// [`crlb_static`] for beams at `x + Δ_i`, evaluated with the shift-invariant
/// responses and the closed-form Gram matrix (`β = 1`; the bound is invariant
/// to `β` and `x`).
///
/// # Errors
/// [`crate::Error::SingularFisher`] for degenerate offsets.
pub fn crlb_static_offsets(cfg: &ArrayConfig, offsets: &OffsetSet) -> Result<f64> {
    let beta = C64::new(1.0, 0.0);
    let resp = offsets.deltas.map(|d| beam_response(cfg, d));
    let fi = fisher_from_probe(cfg, &probe_jacobian(&resp, beta));
    let inv = inv4(&fi.m)?;
    Ok(normalized_trace(&inv, &steering_gram(cfg, beta)) / cfg.mn() as f64)
}

/// `∫₀¹ e^{−jtu} du`.
fn moment0(t: f64) -> C64 {
    let h = 0.5 * t;
    let sa = if h.abs() < 1e-4 { 1.0 - h * h / 6.0 } else { libm::sin(h) / h };
    C64::cis(-h) * sa
}

/// `∫₀¹ u e^{−jtu} du`, by power series near the origin where the closed
/// form `(e^{−jt}(1 + jt) − 1)/t²` cancels catastrophically.
fn moment1(t: f64) -> C64 {
    if t.abs() < 0.5 {
        let z = C64::new(0.0, -t);
        let mut term = C64::new(1.0, 0.0);
        let mut sum = C64::new(0.5, 0.0);
        for k in 1..25 {
            term = term * z / k as f64;
            sum += term / (k + 2) as f64;
        }
        sum
    } else {
        (C64::cis(-t) * C64::new(1.0, t) - 1.0) / (t * t)
    }
}

/// Large-array limit of [`beam_response`] divided by `√(MN)`:
/// `Sa(πδ₁)Sa(πδ₂)e^{−jπ(δ₁+δ₂)}` and its derivative kernels.
#[must_use]
pub fn limit_response(delta: [f64; 2]) -> BeamResponse {
    let t = delta.map(|d| 2.0 * PI * d);
    let (a0, b0) = (moment0(t[0]), moment0(t[1]));
    let (a1, b1) = (moment1(t[0]), moment1(t[1]));
    let jtp = C64::new(0.0, 2.0 * PI);
    BeamResponse { value: a0 * b0, deriv: [jtp * a1 * b0, jtp * a0 * b1] }
}

/// Limit of `I_S/(MN)` as `M, N → ∞`.
#[must_use]
pub fn fisher_static_limit(offsets: &OffsetSet, pilot_amp: f64, noise_var: f64, beta: C64) -> Mat4 {
    let resp = offsets.deltas.map(limit_response);
    let cfg_like = ArrayConfig { pilot_amp, noise_var, ..ArrayConfig::half_wavelength(1, 1) };
    fisher_from_probe(&cfg_like, &probe_jacobian(&resp, beta)).m
}

/// Limit of `MN·C_S` as `M, N → ∞`, from the closed-form kernel limits.
///
/// # Errors
/// [`crate::Error::SingularFisher`] for degenerate offsets.
pub fn crlb_static_asymptotic(offsets: &OffsetSet, pilot_amp: f64, noise_var: f64, beta: C64) -> Result<f64> {
    let inv = inv4(&fisher_static_limit(offsets, pilot_amp, noise_var, beta))?;
    Ok(normalized_trace(&inv, &steering_gram_limit(beta)))
}

/// Rayleigh-gain model: `β ~ CN(0, σ_β²)` redrawn every cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiModel {
    /// Gain variance `σ_β²` (> 0).
    pub sigma_beta_sq: f64,
}

/// Determinant and inverse of `Σ_y = |s|²σ_β² g gᴴ + σ_z² I₃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaDi {
    /// `|Σ_y| = σ_z⁴(|s|²σ_β²‖g‖² + σ_z²)`.
    pub det: f64,
    /// `Σ_y⁻¹ = I₃/σ_z² − σ_z²|s|²σ_β² g gᴴ/|Σ_y|`.
    pub inv: CMat3,
}

/// Probe-domain quantities `g = Wᴴa(x)` and `d_p = Wᴴ∂a/∂x_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeParts {
    /// `g = Wᴴ a(x)`.
    pub g: [C64; 3],
    /// `d_p = Wᴴ ∂a(x)/∂x_p`.
    pub d: [[C64; 3]; 2],
}

impl ProbeParts {
    /// Explicit inner products against the EBM columns.
    #[must_use]
    pub fn from_ebm(cfg: &ArrayConfig, x: Dpv, ebm: &Ebm) -> Self {
        Self {
            g: ebm.project(&steering_vector(cfg, x)),
            d: [
                ebm.project(&steering_derivative(cfg, x, Axis::X1)),
                ebm.project(&steering_derivative(cfg, x, Axis::X2)),
            ],
        }
    }

    /// Shift-invariant evaluation for beams at `x + Δ_i`.
    #[must_use]
    pub fn from_offsets(cfg: &ArrayConfig, offsets: &OffsetSet) -> Self {
        Self::from_responses(&offsets.deltas.map(|d| beam_response(cfg, d)))
    }

    /// Assembles the parts from per-probe responses.
    #[must_use]
    pub fn from_responses(resp: &[BeamResponse; 3]) -> Self {
        Self {
            g: resp.map(|r| r.value),
            d: [resp.map(|r| r.deriv[0]), resp.map(|r| r.deriv[1])],
        }
    }
}

/// Closed-form determinant and inverse of the observation covariance.
#[must_use]
pub fn sigma_di_from_g(cfg: &ArrayConfig, model: &DiModel, g: &[C64; 3]) -> SigmaDi {
    let s2 = cfg.noise_var;
    let kappa = cfg.pilot_amp * cfg.pilot_amp * model.sigma_beta_sq;
    let n2: f64 = g.iter().map(|v| v.norm_sqr()).sum();
    let det = s2 * s2 * (kappa * n2 + s2);
    let ggh = outer3(g, g);
    let inv = core::array::from_fn(|i| {
        core::array::from_fn(|j| {
            let eye = if i == j { 1.0 / s2 } else { 0.0 };
            C64::new(eye, 0.0) - ggh[i][j] * (s2 * kappa / det)
        })
    });
    SigmaDi { det, inv }
}

/// [`sigma_di_from_g`] with `g = Wᴴa(x)` from the EBM.
#[must_use]
pub fn sigma_di(cfg: &ArrayConfig, x: Dpv, model: &DiModel, ebm: &Ebm) -> SigmaDi {
    sigma_di_from_g(cfg, model, &ebm.project(&steering_vector(cfg, x)))
}

/// Fisher information of the Rayleigh-gain model with its work quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherDI {
    /// The 2×2 matrix `I_DI`.
    pub m: Mat2,
    /// `g = Wᴴ a(x)`.
    pub g: [C64; 3],
    /// `g̃_p = ∂‖g‖²/∂x_p = 2 Re{gᴴ d_p}`.
    pub g_tilde: [f64; 2],
    /// `G_p = ∂(g gᴴ)/∂x_p = d_p gᴴ + g d_pᴴ`.
    pub g_mat: [CMat3; 2],
}

fn quad3(u: &[C64; 3], m: &CMat3, v: &[C64; 3]) -> C64 {
    (0..3).map(|i| u[i].conj() * (0..3).map(|j| m[i][j] * v[j]).sum::<C64>()).sum()
}

/// Element-wise closed-form Fisher information from probe parts.
#[must_use]
pub fn fisher_di_from_parts(cfg: &ArrayConfig, model: &DiModel, parts: &ProbeParts) -> FisherDI {
    let g = parts.g;
    let s2 = cfg.noise_var;
    let kappa = cfg.pilot_amp * cfg.pilot_amp * model.sigma_beta_sq;
    let n2: f64 = g.iter().map(|v| v.norm_sqr()).sum();
    let det = s2 * s2 * (kappa * n2 + s2);
    let g_tilde = parts.d.map(|dp| 2.0 * dotc(&g, &dp).re);
    let g_mat = parts.d.map(|dp| {
        let a = outer3(&dp, &g);
        let b = outer3(&g, &dp);
        core::array::from_fn(|i| core::array::from_fn(|j| a[i][j] + b[i][j]))
    });
    // σ_z⁶|s|⁶σ_β⁶/|Σ|²·{…} with the 1/(|s|²σ_β²) term distributed so that
    // σ_β² = 0 evaluates to a zero matrix instead of 0·∞.
    let pre = s2 * s2 * s2 * kappa * kappa / (det * det);
    let m = core::array::from_fn(|p| {
        core::array::from_fn(|q| {
            let gpgq = mul3(&g_mat[p], &g_mat[q]);
            let gqgp = mul3(&g_mat[q], &g_mat[p]);
            let sym: CMat3 = core::array::from_fn(|i| core::array::from_fn(|j| gpgq[i][j] + gqgp[i][j]));
            let high = -2.0 * n2 * g_tilde[p] * g_tilde[q] + quad3(&g, &sym, &g).re;
            pre * (kappa * high + s2 * trace3(&gpgq).re)
        })
    });
    FisherDI { m, g, g_tilde, g_mat }
}

/// Fisher information `I_DI(x, W)` from explicit inner products.
#[must_use]
pub fn fisher_di(cfg: &ArrayConfig, x: Dpv, model: &DiModel, ebm: &Ebm) -> FisherDI {
    fisher_di_from_parts(cfg, model, &ProbeParts::from_ebm(cfg, x, ebm))
}

/// Single-cycle bound `C_DI = Tr{I_DI⁻¹}`.
///
/// # Errors
/// [`crate::Error::SingularFisher`] for degenerate offsets.
pub fn crlb_di(cfg: &ArrayConfig, x: Dpv, model: &DiModel, ebm: &Ebm) -> Result<f64> {
    Ok(trace(&inv2(&fisher_di(cfg, x, model, ebm).m)?))
}

/// [`crlb_di`] for beams at `x + Δ_i` via shift-invariant responses.
///
/// # Errors
/// [`crate::Error::SingularFisher`] for degenerate offsets.
pub fn crlb_di_offsets(cfg: &ArrayConfig, model: &DiModel, offsets: &OffsetSet) -> Result<f64> {
    let f = fisher_di_from_parts(cfg, model, &ProbeParts::from_offsets(cfg, offsets));
    Ok(trace(&inv2(&f.m)?))
}

/// Large-array limit of `I_DI/(MN)`: `SNR_β` times the high-SNR element
/// formula evaluated with the normalized kernel limits.
#[must_use]
pub fn fisher_di_limit(offsets: &OffsetSet, snr_beta: f64) -> Mat2 {
    let parts = ProbeParts::from_responses(&offsets.deltas.map(limit_response));
    let unit = ArrayConfig::half_wavelength(1, 1);
    // With κ → ∞ relative to σ_z², (σ_z²/κ)·I_DI tends to the bracket without
    // the trace term divided by ‖g‖⁴.
    let g = parts.g;
    let n2: f64 = g.iter().map(|v| v.norm_sqr()).sum();
    let f = fisher_di_from_parts(&unit, &DiModel { sigma_beta_sq: 1.0 }, &parts);
    core::array::from_fn(|p| {
        core::array::from_fn(|q| {
            let gpgq = mul3(&f.g_mat[p], &f.g_mat[q]);
            let gqgp = mul3(&f.g_mat[q], &f.g_mat[p]);
            let sym: CMat3 = core::array::from_fn(|i| core::array::from_fn(|j| gpgq[i][j] + gqgp[i][j]));
            let high = -2.0 * n2 * f.g_tilde[p] * f.g_tilde[q] + quad3(&g, &sym, &g).re;
            snr_beta * high / (n2 * n2)
        })
    })
}

/// Limit of `MN·C_DI` as `M, N → ∞` at `SNR_β = |s|²σ_β²/σ_z²` (linear).
///
/// # Errors
/// [`crate::Error::SingularFisher`] for degenerate offsets.
pub fn crlb_di_asymptotic(offsets: &OffsetSet, snr_beta: f64) -> Result<f64> {
    Ok(trace(&inv2(&fisher_di_limit(offsets, snr_beta))?))
}

/// Score `∂ log p_S(y|ψ)/∂ψ = (2|s|/σ_z²) Re{Vᴴ W (y − |s|β Wᴴa(x))}`.
#[must_use]
pub fn score_static(cfg: &ArrayConfig, psi: &ChannelParams, ebm: &Ebm, y: &Observation) -> [f64; 4] {
    let parts = ProbeParts::from_ebm(cfg, psi.x, ebm);
    let s = cfg.pilot_amp;
    let r: [C64; 3] = core::array::from_fn(|i| y.y[i] - parts.g[i] * psi.beta * s);
    let cols: [[C64; 3]; 4] = [
        parts.g,
        parts.g.map(|v| v * J),
        parts.d[0].map(|v| v * psi.beta),
        parts.d[1].map(|v| v * psi.beta),
    ];
    cols.map(|c| 2.0 * s / cfg.noise_var * dotc(&c, &r).re)
}

/// Log-density `log p_DI(y|x) = −3 log π − log|Σ_y| − yᴴΣ_y⁻¹y`.
#[must_use]
pub fn log_pdf_di(cfg: &ArrayConfig, x: Dpv, model: &DiModel, ebm: &Ebm, y: &Observation) -> f64 {
    let sig = sigma_di(cfg, x, model, ebm);
    -3.0 * libm::log(PI) - libm::log(sig.det) - quad3(&y.y, &sig.inv, &y.y).re
}

/// Per-axis constants of the Rayleigh-gain score: `c_p = −∂_p|Σ|/|Σ|` and
/// `K_p = ∂Σ⁻¹/∂x_p`, so that the score is `c_p − yᴴ K_p y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiScoreTerms {
    /// `−(1/|Σ|) ∂|Σ|/∂x_p`.
    pub c: [f64; 2],
    /// `∂Σ⁻¹/∂x_p` (Hermitian).
    pub k: [CMat3; 2],
}

/// Derivative terms of the Rayleigh-gain log-density.
#[must_use]
pub fn di_score_terms(cfg: &ArrayConfig, model: &DiModel, parts: &ProbeParts) -> DiScoreTerms {
    let s2 = cfg.noise_var;
    let kappa = cfg.pilot_amp * cfg.pilot_amp * model.sigma_beta_sq;
    let g = parts.g;
    let n2: f64 = g.iter().map(|v| v.norm_sqr()).sum();
    let det = s2 * s2 * (kappa * n2 + s2);
    let ggh = outer3(&g, &g);
    let mut c = [0.0; 2];
    let mut k = [[[ZERO; 3]; 3]; 2];
    for p in 0..2 {
        let g_tilde = 2.0 * dotc(&g, &parts.d[p]).re;
        let ddet = s2 * s2 * kappa * g_tilde;
        c[p] = -ddet / det;
        let a = outer3(&parts.d[p], &g);
        let b = outer3(&g, &parts.d[p]);
        for i in 0..3 {
            for j in 0..3 {
                let gp = a[i][j] + b[i][j];
                k[p][i][j] = -(gp * det - ggh[i][j] * ddet) * (s2 * kappa / (det * det));
            }
        }
    }
    DiScoreTerms { c, k }
}

/// Score `∂ log p_DI(y|x)/∂x = −∂_p|Σ|/|Σ| − yᴴ(∂Σ⁻¹/∂x_p)y`.
#[must_use]
pub fn score_di(cfg: &ArrayConfig, x: Dpv, model: &DiModel, ebm: &Ebm, y: &Observation) -> [f64; 2] {
    let t = di_score_terms(cfg, model, &ProbeParts::from_ebm(cfg, x, ebm));
    core::array::from_fn(|p| t.c[p] - quad3(&y.y, &t.k[p], &y.y).re)
}
