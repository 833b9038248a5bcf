//! Ground-truth channel generation for the quasi-static (Rician), Rayleigh
//! fast-fading and Gauss–Markov/random-walk scenarios, plus the in-main-lobe
//! initial direction estimate.

use core::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, PI};

use alloc::format;
use rand::Rng;

use crate::array_core::{dpv_from_aoa, element_gain_linear, Aoa, ArrayConfig, Dpv, PatternConfig};
use crate::random::{complex_normal, normal, uniform};
use crate::signal_model::ChannelParams;
use crate::{Error, Result, C64};

/// Channel-dynamics model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioKind {
    /// Static direction and gain; the gain is one Rician draw with K-factor
    /// `rician_k_db` (use `f64::INFINITY` for a pure line-of-sight gain).
    QuasiStatic {
        /// Rician K-factor in dB.
        rician_k_db: f64,
    },
    /// Static direction; the gain is redrawn i.i.d. `CN(0, σ_β^c²)` every ECC.
    DynamicI {
        /// Gain variance `σ_β^c²`.
        sigma_beta_c_sq: f64,
    },
    /// Gauss–Markov gain `β ← ρβ + CN(0, 1−ρ²)` and a reflected Gaussian
    /// random walk of both angles with per-ECC standard deviation `delta_a`.
    DynamicII {
        /// Gain correlation coefficient `ρ ∈ (0, 1]`.
        rho: f64,
        /// Angular step standard deviation in radians.
        delta_a: f64,
        /// Elevation range `[lo, hi)` the walk stays in.
        theta_range: [f64; 2],
        /// Azimuth range `[lo, hi)` the walk stays in.
        phi_range: [f64; 2],
    },
}

/// Region from which the initial angle of arrival is drawn uniformly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AoaRegion {
    /// `θ ∈ [−π/6, π/6]`, `φ ∈ [π/3, 2π/3]`.
    Central,
    /// `θ ∈ [π/3, π/2)`, `φ ∈ [5π/6, π)`: strong element attenuation.
    Edge,
    /// Arbitrary ranges.
    Custom {
        /// Elevation range.
        theta: [f64; 2],
        /// Azimuth range.
        phi: [f64; 2],
    },
}

impl AoaRegion {
    /// `(theta_range, phi_range)` of the region.
    #[must_use]
    pub fn ranges(&self) -> ([f64; 2], [f64; 2]) {
        match *self {
            Self::Central => ([-FRAC_PI_6, FRAC_PI_6], [FRAC_PI_3, 2.0 * FRAC_PI_3]),
            Self::Edge => ([FRAC_PI_3, FRAC_PI_2], [5.0 * PI / 6.0, PI]),
            Self::Custom { theta, phi } => (theta, phi),
        }
    }
}

/// Complete scenario description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    /// Dynamics model.
    pub kind: ScenarioKind,
    /// Initial angle-of-arrival region (the Gauss–Markov scenario draws from
    /// its walk ranges instead).
    pub aoa_region: AoaRegion,
    /// Element radiation pattern.
    pub pattern: PatternConfig,
}

fn check_range(name: &str, r: [f64; 2], lo: f64, hi: f64) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] && r[0] >= lo && r[1] <= hi) {
        return Err(Error::InvalidConfig(format!("{name} range {r:?} must be ordered within [{lo}, {hi}]")));
    }
    Ok(())
}

impl ScenarioConfig {
    /// Checks parameter ranges.
    ///
    /// # Errors
    /// [`Error::InvalidConfig`] naming the offending field.
    pub fn validate(&self) -> Result<()> {
        self.pattern.validate()?;
        let (t, p) = self.aoa_region.ranges();
        check_range("theta", t, -FRAC_PI_2, FRAC_PI_2)?;
        check_range("phi", p, 0.0, PI)?;
        match self.kind {
            ScenarioKind::QuasiStatic { rician_k_db } => {
                if rician_k_db.is_nan() {
                    return Err(Error::InvalidConfig("rician_k_db must be a number".into()));
                }
            }
            ScenarioKind::DynamicI { sigma_beta_c_sq } => {
                if !(sigma_beta_c_sq.is_finite() && sigma_beta_c_sq > 0.0) {
                    return Err(Error::InvalidConfig(format!("sigma_beta_c_sq must be > 0, got {sigma_beta_c_sq}")));
                }
            }
            ScenarioKind::DynamicII { rho, delta_a, theta_range, phi_range } => {
                if !(rho > 0.0 && rho <= 1.0) {
                    return Err(Error::InvalidConfig(format!("rho must lie in (0, 1], got {rho}")));
                }
                if !(delta_a.is_finite() && delta_a > 0.0) {
                    return Err(Error::InvalidConfig(format!("delta_a must be > 0, got {delta_a}")));
                }
                check_range("walk theta", theta_range, -FRAC_PI_2, FRAC_PI_2)?;
                check_range("walk phi", phi_range, 0.0, PI)?;
            }
        }
        Ok(())
    }
}

/// Ground truth at one ECC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelState {
    /// Angle of arrival.
    pub aoa: Aoa,
    /// Direction parameters, `dpv_from_aoa(aoa)`.
    pub x: Dpv,
    /// Path gain `β_c`.
    pub beta_c: C64,
    /// Equivalent gain `η(aoa)·β_c` seen through the element pattern.
    pub beta_eff: C64,
    /// Number of transitions applied since initialization.
    pub ecc_index: usize,
}

impl ChannelState {
    fn assemble(sc: &ScenarioConfig, cfg: &ArrayConfig, aoa: Aoa, beta_c: C64, ecc_index: usize) -> Self {
        Self {
            aoa,
            x: dpv_from_aoa(cfg, aoa),
            beta_c,
            beta_eff: beta_c * element_gain_linear(&sc.pattern, aoa),
            ecc_index,
        }
    }

    /// The tracked parameters `ψ = (β_eff, x)`.
    #[must_use]
    pub fn params(&self) -> ChannelParams {
        ChannelParams::new(self.beta_eff, self.x)
    }

    /// Element amplitude gain `|η|` at the current angle of arrival.
    #[must_use]
    pub fn element_gain(&self, sc: &ScenarioConfig) -> f64 {
        element_gain_linear(&sc.pattern, self.aoa)
    }
}

/// Line-of-sight and diffuse components of a unit-mean-power Rician gain:
/// `√(κ/(κ+1))e^{jφ₀}` with uniform `φ₀`, and `√(1/(κ+1))·CN(0,1)`.
pub fn rician_parts<R: Rng + ?Sized>(k_db: f64, rng: &mut R) -> (C64, C64) {
    let phase = uniform(rng, 0.0, 2.0 * PI);
    if k_db == f64::INFINITY {
        return (C64::cis(phase), C64::new(0.0, 0.0));
    }
    let kappa = libm::pow(10.0, k_db / 10.0);
    (C64::cis(phase) * libm::sqrt(kappa / (kappa + 1.0)), complex_normal(rng, 1.0 / (kappa + 1.0)))
}

/// Unit-mean-power Rician gain, the sum of [`rician_parts`].
pub fn rician_draw<R: Rng + ?Sized>(k_db: f64, rng: &mut R) -> C64 {
    let (los, diffuse) = rician_parts(k_db, rng);
    los + diffuse
}

fn draw_in(range: [f64; 2], rng: &mut (impl Rng + ?Sized)) -> f64 {
    uniform(rng, range[0], range[1])
}

/// Draws the initial ground truth.
pub fn init_channel<R: Rng + ?Sized>(sc: &ScenarioConfig, cfg: &ArrayConfig, rng: &mut R) -> ChannelState {
    let (t, p) = match sc.kind {
        ScenarioKind::DynamicII { theta_range, phi_range, .. } => (theta_range, phi_range),
        _ => sc.aoa_region.ranges(),
    };
    let aoa = Aoa::new(draw_in(t, rng), draw_in(p, rng));
    let beta_c = match sc.kind {
        ScenarioKind::QuasiStatic { rician_k_db } => rician_draw(rician_k_db, rng),
        ScenarioKind::DynamicI { sigma_beta_c_sq } => complex_normal(rng, sigma_beta_c_sq),
        ScenarioKind::DynamicII { .. } => complex_normal(rng, 1.0),
    };
    ChannelState::assemble(sc, cfg, aoa, beta_c, 0)
}

/// One reflected random-walk step: if `v + Δ` leaves `[lo, hi)` the step is
/// taken in the opposite direction, and clamped if that also leaves.
fn reflect_step(v: f64, step: f64, range: [f64; 2]) -> f64 {
    let inside = |w: f64| w >= range[0] && w < range[1];
    let fwd = v + step;
    if inside(fwd) {
        return fwd;
    }
    let back = v - step;
    if inside(back) {
        return back;
    }
    let below_hi = range[1] - 1e-12 * (1.0 + range[1].abs());
    fwd.clamp(range[0], below_hi.max(range[0]))
}

/// Applies one ECC transition.
#[must_use]
pub fn evolve<R: Rng + ?Sized>(state: &ChannelState, sc: &ScenarioConfig, cfg: &ArrayConfig, rng: &mut R) -> ChannelState {
    let next = state.ecc_index + 1;
    match sc.kind {
        ScenarioKind::QuasiStatic { .. } => ChannelState { ecc_index: next, ..*state },
        ScenarioKind::DynamicI { sigma_beta_c_sq } => {
            ChannelState::assemble(sc, cfg, state.aoa, complex_normal(rng, sigma_beta_c_sq), next)
        }
        ScenarioKind::DynamicII { rho, delta_a, theta_range, phi_range } => {
            let theta = reflect_step(state.aoa.theta, delta_a * normal(rng), theta_range);
            let phi = reflect_step(state.aoa.phi, delta_a * normal(rng), phi_range);
            let beta = state.beta_c * rho + complex_normal(rng, 1.0 - rho * rho);
            ChannelState::assemble(sc, cfg, Aoa::new(theta, phi), beta, next)
        }
    }
}

/// Initial direction estimate, uniform in `x ± halfwidth` per coordinate.
/// The gain estimate comes from a separate bootstrap cycle at this direction.
#[must_use]
pub fn initial_estimate<R: Rng + ?Sized>(state: &ChannelState, rng: &mut R, halfwidth: f64) -> Dpv {
    Dpv::new(
        state.x.x1 + uniform(rng, -halfwidth, halfwidth),
        state.x.x2 + uniform(rng, -halfwidth, halfwidth),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array_core::{element_gain_db, in_main_lobe};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg8() -> ArrayConfig {
        ArrayConfig::half_wavelength(8, 8)
    }

    fn sc(kind: ScenarioKind) -> ScenarioConfig {
        ScenarioConfig { kind, aoa_region: AoaRegion::Central, pattern: PatternConfig::default() }
    }

    fn dii(rho: f64) -> ScenarioConfig {
        sc(ScenarioKind::DynamicII {
            rho,
            delta_a: 0.3_f64.to_radians(),
            theta_range: [-FRAC_PI_6, FRAC_PI_6],
            phi_range: [FRAC_PI_3, 2.0 * FRAC_PI_3],
        })
    }

    #[test]
    fn validation() {
        assert!(dii(0.995).validate().is_ok());
        assert!(dii(0.0).validate().is_err());
        assert!(dii(1.2).validate().is_err());
        assert!(sc(ScenarioKind::DynamicI { sigma_beta_c_sq: 0.0 }).validate().is_err());
        let bad = ScenarioConfig {
            aoa_region: AoaRegion::Custom { theta: [0.5, 0.1], phi: [1.0, 2.0] },
            ..sc(ScenarioKind::QuasiStatic { rician_k_db: 15.0 })
        };
        assert!(bad.validate().is_err());
        assert!(sc(ScenarioKind::QuasiStatic { rician_k_db: 15.0 }).validate().is_ok());
    }

    #[test]
    fn los_limit_has_unit_amplitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert!((rician_draw(f64::INFINITY, &mut rng).norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rician_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        for k_db in [0.0, 15.0] {
            let kappa = libm::pow(10.0, k_db / 10.0);
            let (mut p, mut los_p, mut diff_p) = (0.0, 0.0, 0.0);
            for _ in 0..n {
                let (los, diffuse) = rician_parts(k_db, &mut rng);
                p += (los + diffuse).norm_sqr();
                los_p += los.norm_sqr();
                diff_p += diffuse.norm_sqr();
            }
            assert!((p / n as f64 - 1.0).abs() < 0.03);
            assert!((los_p / diff_p / kappa - 1.0).abs() < 0.03);
        }
    }

    #[test]
    fn central_region_gain_floor_and_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = sc(ScenarioKind::QuasiStatic { rician_k_db: 15.0 });
        for _ in 0..10_000 {
            let st = init_channel(&s, &cfg8(), &mut rng);
            let g = element_gain_db(&s.pattern, st.aoa);
            assert!(g >= -5.2);
            let ratio_db = 20.0 * libm::log10((st.beta_eff / st.beta_c).norm());
            assert!((ratio_db - g).abs() < 1e-9);
            assert_eq!(st.x, dpv_from_aoa(&cfg8(), st.aoa));
        }
    }

    #[test]
    fn quasi_static_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = sc(ScenarioKind::QuasiStatic { rician_k_db: 15.0 });
        let st = init_channel(&s, &cfg8(), &mut rng);
        let nx = evolve(&st, &s, &cfg8(), &mut rng);
        assert_eq!(ChannelState { ecc_index: 0, ..nx }, st);
        assert_eq!(nx.ecc_index, 1);
    }

    #[test]
    fn dynamic_i_uncorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = sc(ScenarioKind::DynamicI { sigma_beta_c_sq: 1.0 });
        let mut st = init_channel(&s, &cfg8(), &mut rng);
        let n = 100_000;
        let (mut p, mut lag) = (0.0, C64::new(0.0, 0.0));
        for _ in 0..n {
            let nx = evolve(&st, &s, &cfg8(), &mut rng);
            assert_eq!(nx.aoa, st.aoa);
            p += nx.beta_c.norm_sqr();
            lag += nx.beta_c * st.beta_c.conj();
            st = nx;
        }
        assert!((p / n as f64 - 1.0).abs() < 0.03);
        assert!(lag.norm() / p < 0.02);
    }

    #[test]
    fn gauss_markov_moments() {
        // Ensemble over independent chains: a single ρ = 0.995 series of 10⁵
        // steps carries only ~250 effective samples of the variance.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = dii(0.995);
        let n = 100_000;
        let (mut p0, mut p, mut lag) = (0.0, 0.0, C64::new(0.0, 0.0));
        for _ in 0..n {
            let mut st = init_channel(&s, &cfg8(), &mut rng);
            for _ in 0..20 {
                st = evolve(&st, &s, &cfg8(), &mut rng);
            }
            let nx = evolve(&st, &s, &cfg8(), &mut rng);
            p0 += st.beta_c.norm_sqr();
            p += nx.beta_c.norm_sqr();
            lag += nx.beta_c * st.beta_c.conj();
        }
        assert!((p / n as f64 - 1.0).abs() < 0.03, "{}", p / n as f64);
        let corr = lag.re / libm::sqrt(p * p0);
        assert!((corr - 0.995).abs() < 0.005, "{corr}");
    }

    #[test]
    fn random_walk_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = sc(ScenarioKind::DynamicII {
            rho: 0.9,
            delta_a: 5.0_f64.to_radians(),
            theta_range: [-0.2, 0.2],
            phi_range: [1.2, 1.9],
        });
        let mut st = init_channel(&s, &cfg8(), &mut rng);
        for _ in 0..1_000_000 {
            st = evolve(&st, &s, &cfg8(), &mut rng);
            assert!(st.aoa.theta >= -0.2 && st.aoa.theta < 0.2);
            assert!(st.aoa.phi >= 1.2 && st.aoa.phi < 1.9);
        }
    }

    #[test]
    fn reflect_rule() {
        assert_eq!(reflect_step(0.9, 0.2, [0.0, 1.0]), 0.9 - 0.2);
        assert_eq!(reflect_step(0.5, 0.2, [0.0, 1.0]), 0.7);
        let v = reflect_step(0.5, 3.0, [0.0, 1.0]);
        assert!((0.0..1.0).contains(&v));
    }

    #[test]
    fn initial_estimate_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = sc(ScenarioKind::QuasiStatic { rician_k_db: 15.0 });
        let st = init_channel(&s, &cfg8(), &mut rng);
        assert_eq!(initial_estimate(&st, &mut rng, 0.0), st.x);
        let mut d1 = alloc::vec::Vec::new();
        for _ in 0..10_000 {
            let x0 = initial_estimate(&st, &mut rng, 0.5);
            assert!(in_main_lobe(st.x, x0));
            d1.push(x0.x1 - st.x.x1);
        }
        // Kolmogorov–Smirnov against U(−0.5, 0.5); the 1% critical value is
        // 1.628/√n.
        d1.sort_by(f64::total_cmp);
        let n = d1.len() as f64;
        let ks = d1
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let f = v + 0.5;
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 1.628 / n.sqrt());
    }
}
