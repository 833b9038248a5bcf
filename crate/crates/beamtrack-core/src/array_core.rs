//! Planar-array geometry: direction parameterization, steering vectors and
//! their derivatives, the separable beam-gain kernel, the element pattern,
//! and main-lobe membership.
//!
//! The array has `M` elements along the x-axis and `N` along the z-axis.
//! A direction parameter vector (DPV) `x = (x₁, x₂)` replaces the angle pair;
//! with half-wavelength spacing `|x₁| ≤ M/2` and `|x₂| ≤ N/2`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::{Error, Result, C64};

/// Planar array geometry plus pilot and noise levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    /// Element count along the x-axis (`M ≥ 1`).
    pub m: usize,
    /// Element count along the z-axis (`N ≥ 1`).
    pub n: usize,
    /// Element spacing along the x-axis, in the unit of `lambda`.
    pub d1: f64,
    /// Element spacing along the z-axis, in the unit of `lambda`.
    pub d2: f64,
    /// Carrier wavelength.
    pub lambda: f64,
    /// Pilot-sequence norm `|s|` (only its magnitude enters the model).
    pub pilot_amp: f64,
    /// Noise variance `σ_z²` of each matched-filter output.
    pub noise_var: f64,
}

impl ArrayConfig {
    /// Builds and validates a configuration.
    ///
    /// # Errors
    /// [`Error::InvalidConfig`] when a field violates its invariant.
    pub fn new(
        m: usize,
        n: usize,
        d1: f64,
        d2: f64,
        lambda: f64,
        pilot_amp: f64,
        noise_var: f64,
    ) -> Result<Self> {
        let cfg = Self { m, n, d1, d2, lambda, pilot_amp, noise_var };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Half-wavelength `M × N` array with unit pilot amplitude and unit noise
    /// variance (transmit SNR of 0 dB).
    ///
    /// # Panics
    /// Panics if `m` or `n` is zero.
    #[must_use]
    pub fn half_wavelength(m: usize, n: usize) -> Self {
        assert!(m >= 1 && n >= 1, "array dimensions must be positive");
        Self { m, n, d1: 0.5, d2: 0.5, lambda: 1.0, pilot_amp: 1.0, noise_var: 1.0 }
    }

    /// Checks every field invariant.
    ///
    /// # Errors
    /// [`Error::InvalidConfig`] naming the offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str| Err(Error::InvalidConfig(format!("array.{field} out of range")));
        if self.m < 1 {
            return bad("m");
        }
        if self.n < 1 {
            return bad("n");
        }
        if !(self.d1 > 0.0 && self.d1.is_finite()) {
            return bad("d1");
        }
        if !(self.d2 > 0.0 && self.d2.is_finite()) {
            return bad("d2");
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda");
        }
        if !(self.pilot_amp >= 0.0 && self.pilot_amp.is_finite()) {
            return bad("pilot_amp");
        }
        if !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return bad("noise_var");
        }
        Ok(())
    }

    /// Returns a copy whose pilot amplitude realizes the transmit SNR
    /// `pilot_amp² / noise_var = 10^(snr_db/10)`.
    #[must_use]
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.pilot_amp = libm::sqrt(libm::pow(10.0, snr_db / 10.0)) * libm::sqrt(self.noise_var);
        self
    }

    /// Transmit SNR `|s|²/σ_z²` on a linear scale.
    #[must_use]
    pub fn snr_linear(&self) -> f64 {
        self.pilot_amp * self.pilot_amp / self.noise_var
    }

    /// Total element count `M·N`.
    #[must_use]
    pub fn mn(&self) -> usize {
        self.m * self.n
    }

    /// Largest physical `|x₁|` and `|x₂|`: `M d₁/λ` and `N d₂/λ`.
    #[must_use]
    pub fn physical_half_range(&self) -> [f64; 2] {
        [self.m as f64 * self.d1 / self.lambda, self.n as f64 * self.d2 / self.lambda]
    }

    /// Clamps a DPV into the physical range of this array.
    #[must_use]
    pub fn clamp_dpv(&self, x: Dpv) -> Dpv {
        let [h1, h2] = self.physical_half_range();
        Dpv::new(x.x1.clamp(-h1, h1), x.x2.clamp(-h2, h2))
    }
}

/// Angle of arrival: elevation `theta ∈ [−π/2, π/2)` and azimuth `phi ∈ [0, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aoa {
    /// Elevation angle in radians.
    pub theta: f64,
    /// Azimuth angle in radians.
    pub phi: f64,
}

impl Aoa {
    /// Creates an angle pair (no range check; see [`Aoa::in_range`]).
    #[must_use]
    pub const fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    /// Whether both angles lie inside their declared ranges.
    #[must_use]
    pub fn in_range(&self) -> bool {
        (-FRAC_PI_2..FRAC_PI_2).contains(&self.theta) && (0.0..PI).contains(&self.phi)
    }
}

/// Direction parameter vector `x = (x₁, x₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dpv {
    /// First (x-axis) direction parameter.
    pub x1: f64,
    /// Second (z-axis) direction parameter.
    pub x2: f64,
}

impl Dpv {
    /// Creates a DPV.
    #[must_use]
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    /// Component-wise sum with an offset pair.
    #[must_use]
    pub fn offset(self, delta: [f64; 2]) -> Self {
        Self::new(self.x1 + delta[0], self.x2 + delta[1])
    }

    /// Component-wise difference `self − other` as a pair.
    #[must_use]
    pub fn minus(self, other: Self) -> [f64; 2] {
        [self.x1 - other.x1, self.x2 - other.x2]
    }

    /// Coordinates as an array.
    #[must_use]
    pub const fn to_array(self) -> [f64; 2] {
        [self.x1, self.x2]
    }
}

/// Element radiation-pattern parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternConfig {
    /// Vertical 3 dB beamwidth in radians.
    pub theta_3db: f64,
    /// Horizontal 3 dB beamwidth in radians.
    pub phi_3db: f64,
    /// Maximum attenuation in dB (positive).
    pub eta_max_db: f64,
}

impl Default for PatternConfig {
    fn default() -> Self {
        Self { theta_3db: 13.0 * PI / 36.0, phi_3db: 13.0 * PI / 36.0, eta_max_db: 30.0 }
    }
}

impl PatternConfig {
    /// Checks that every parameter is strictly positive.
    ///
    /// # Errors
    /// [`Error::InvalidConfig`] otherwise.
    pub fn validate(&self) -> Result<()> {
        if self.theta_3db > 0.0 && self.phi_3db > 0.0 && self.eta_max_db > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("pattern parameters must be positive: {self:?}")))
        }
    }
}

/// Maps an angle of arrival to its DPV: `x = [M d₁ cosθ cosφ/λ, N d₂ sinθ/λ]`.
#[must_use]
pub fn dpv_from_aoa(cfg: &ArrayConfig, aoa: Aoa) -> Dpv {
    let [h1, h2] = cfg.physical_half_range();
    Dpv::new(
        h1 * libm::cos(aoa.theta) * libm::cos(aoa.phi),
        h2 * libm::sin(aoa.theta),
    )
}

/// Tolerance for treating a normalized direction cosine slightly above 1 as 1.
const COSINE_SLACK: f64 = 1e-12;

/// Inverse of [`dpv_from_aoa`] on the branch `cosθ ≥ 0`, `φ ∈ [0, π]`.
///
/// # Errors
/// [`Error::OutOfPhysicalRange`] when `x` does not correspond to a real direction.
pub fn aoa_from_dpv(cfg: &ArrayConfig, x: Dpv) -> Result<Aoa> {
    let [h1, h2] = cfg.physical_half_range();
    let s = x.x2 / h2;
    if !s.is_finite() || s.abs() > 1.0 + COSINE_SLACK {
        return Err(Error::OutOfPhysicalRange);
    }
    let theta = libm::asin(s.clamp(-1.0, 1.0));
    let ct = libm::cos(theta);
    if ct * h1 <= f64::EPSILON * h1 {
        // Along the z-axis every azimuth maps to x₁ = 0.
        return if x.x1.abs() <= COSINE_SLACK * h1 {
            Ok(Aoa::new(theta, FRAC_PI_2))
        } else {
            Err(Error::OutOfPhysicalRange)
        };
    }
    let c = x.x1 / (h1 * ct);
    if !c.is_finite() || c.abs() > 1.0 + COSINE_SLACK {
        return Err(Error::OutOfPhysicalRange);
    }
    Ok(Aoa::new(theta, libm::acos(c.clamp(-1.0, 1.0))))
}

/// Like [`aoa_from_dpv`] but first projects `x` onto the physical region,
/// so it never fails. Used where an estimate may drift slightly outside.
#[must_use]
pub fn aoa_from_dpv_projected(cfg: &ArrayConfig, x: Dpv) -> Aoa {
    let [h1, h2] = cfg.physical_half_range();
    let s = (x.x2 / h2).clamp(-1.0, 1.0);
    let theta = libm::asin(s);
    let ct = libm::cos(theta);
    let c = if ct * h1 > 0.0 { (x.x1 / (h1 * ct)).clamp(-1.0, 1.0) } else { 0.0 };
    Aoa::new(theta, libm::acos(c))
}

/// One-dimensional steering vector `[e^{j2π k x/L}]_{k=0..L}`.
#[must_use]
pub fn steering_1d(len: usize, x: f64) -> Vec<C64> {
    (0..len)
        .map(|k| C64::cis(2.0 * PI * k as f64 * x / len as f64))
        .collect()
}

/// Two-dimensional steering vector `a(x) = a₁(x₁) ⊗ a₂(x₂)`, flattened m-major.
#[must_use]
pub fn steering_vector(cfg: &ArrayConfig, x: Dpv) -> Vec<C64> {
    let a1 = steering_1d(cfg.m, x.x1);
    let a2 = steering_1d(cfg.n, x.x2);
    let mut out = Vec::with_capacity(cfg.mn());
    for u in &a1 {
        for v in &a2 {
            out.push(u * v);
        }
    }
    out
}

/// Axis selector for derivatives with respect to `x₁` or `x₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Derivative with respect to `x₁`.
    X1,
    /// Derivative with respect to `x₂`.
    X2,
}

/// Element-wise derivative `∂a(x)/∂x_p`: entry `(m, n)` is multiplied by
/// `j2π m/M` (axis 1) or `j2π n/N` (axis 2), with zero-based `m`, `n`.
#[must_use]
pub fn steering_derivative(cfg: &ArrayConfig, x: Dpv, axis: Axis) -> Vec<C64> {
    let mut a = steering_vector(cfg, x);
    for m in 0..cfg.m {
        for n in 0..cfg.n {
            let factor = match axis {
                Axis::X1 => 2.0 * PI * m as f64 / cfg.m as f64,
                Axis::X2 => 2.0 * PI * n as f64 / cfg.n as f64,
            };
            a[m * cfg.n + n] *= C64::new(0.0, factor);
        }
    }
    a
}

fn dirichlet_ratio(delta: f64, len: usize) -> f64 {
    let l = len as f64;
    let den = libm::sin(PI * delta / l);
    if den.abs() < 1e-12 {
        // Removable singularity at δ ≡ 0 (mod L): the limit is L·cos(πδ)/cos(πδ/L).
        l * libm::cos(PI * delta) / libm::cos(PI * delta / l)
    } else {
        libm::sin(PI * delta) / den
    }
}

/// Separable beam-gain kernel
/// `y_a(Δ) = [sin(πδ₁)/sin(πδ₁/M)]·[sin(πδ₂)/sin(πδ₂/N)]`.
#[must_use]
pub fn beam_gain_kernel(delta: [f64; 2], m: usize, n: usize) -> f64 {
    dirichlet_ratio(delta[0], m) * dirichlet_ratio(delta[1], n)
}

/// Inner products of one normalized probing beam with the steering vector
/// and its two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamResponse {
    /// `w(x+δ)ᴴ a(x)` with `w(ω) = a(ω)/√(MN)`.
    pub value: C64,
    /// `w(x+δ)ᴴ ∂a(x)/∂x_p` for `p = 1, 2`.
    pub deriv: [C64; 2],
}

fn axis_sums(delta: f64, len: usize) -> (C64, C64) {
    let l = len as f64;
    let mut s0 = C64::new(0.0, 0.0);
    let mut s1 = C64::new(0.0, 0.0);
    for k in 0..len {
        let ph = C64::cis(-2.0 * PI * k as f64 * delta / l);
        s0 += ph;
        s1 += ph * C64::new(0.0, 2.0 * PI * k as f64 / l);
    }
    (s0, s1)
}

/// Response of a beam steered to `x + δ` to an arrival from `x`.
///
/// By the shift property this depends only on `δ`, so it is evaluated with
/// `O(M + N)` separable sums instead of `O(MN)` inner products.
#[must_use]
pub fn beam_response(cfg: &ArrayConfig, delta: [f64; 2]) -> BeamResponse {
    let (a0, a1) = axis_sums(delta[0], cfg.m);
    let (b0, b1) = axis_sums(delta[1], cfg.n);
    let norm = 1.0 / libm::sqrt(cfg.mn() as f64);
    BeamResponse { value: a0 * b0 * norm, deriv: [a1 * b0 * norm, a0 * b1 * norm] }
}

/// Element gain in dB (≤ 0) from the separable vertical/horizontal pattern,
/// each branch and the combination capped at `eta_max_db`.
#[must_use]
pub fn element_gain_db(pc: &PatternConfig, aoa: Aoa) -> f64 {
    let r_v = aoa.theta / pc.theta_3db;
    let r_h = (aoa.phi - FRAC_PI_2) / pc.phi_3db;
    let eta_v = -(12.0 * r_v * r_v).min(pc.eta_max_db);
    let eta_h = -(12.0 * r_h * r_h).min(pc.eta_max_db);
    -(-(eta_v + eta_h)).min(pc.eta_max_db)
}

/// Linear amplitude gain `10^(η_dB/20)` of the element pattern.
#[must_use]
pub fn element_gain_linear(pc: &PatternConfig, aoa: Aoa) -> f64 {
    libm::pow(10.0, element_gain_db(pc, aoa) / 20.0)
}

/// Main-lobe membership: the open square of half-width 1 around `center`.
#[must_use]
pub fn in_main_lobe(center: Dpv, candidate: Dpv) -> bool {
    (candidate.x1 - center.x1).abs() < 1.0 && (candidate.x2 - center.x2).abs() < 1.0
}
