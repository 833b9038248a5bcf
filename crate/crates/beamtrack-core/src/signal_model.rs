//! Exploring beamforming matrices, observation synthesis, and the noiseless
//! three-probe identifiability solver.
//!
//! One exploration cycle probes three beams `w_i = a(x̂ + Δ_i)/√(MN)` and
//! observes `y = |s| β Wᴴ a(x) + z` with `z ~ CN(0, σ_z² I₃)`.

use alloc::format;
use alloc::vec::Vec;
use rand::Rng;

use crate::array_core::{beam_response, steering_vector, ArrayConfig, Dpv};
use crate::linalg::dotc;
use crate::random::complex_normal;
use crate::{Error, Result, C64};

/// Joint gain/direction state `ψ = [β_re, β_im, x₁, x₂]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Equivalent complex channel gain `β` (real part `β_re`, imaginary part `β_im`).
    pub beta: C64,
    /// Direction parameter vector.
    pub x: Dpv,
}

impl ChannelParams {
    /// Creates a parameter set.
    #[must_use]
    pub const fn new(beta: C64, x: Dpv) -> Self {
        Self { beta, x }
    }

    /// Real 4-vector `[β_re, β_im, x₁, x₂]`.
    #[must_use]
    pub fn to_array(&self) -> [f64; 4] {
        [self.beta.re, self.beta.im, self.x.x1, self.x.x2]
    }

    /// Inverse of [`ChannelParams::to_array`].
    #[must_use]
    pub fn from_array(v: [f64; 4]) -> Self {
        Self::new(C64::new(v[0], v[1]), Dpv::new(v[2], v[3]))
    }
}

/// Three distinct exploration offsets inside the open main-lobe square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetSet {
    /// The offsets `Δ_1, Δ_2, Δ_3`.
    pub deltas: [[f64; 2]; 3],
}

impl OffsetSet {
    /// Validates and wraps three offsets.
    ///
    /// # Errors
    /// [`Error::InvalidOffsets`] if an offset leaves `(−1, 1)²` or two coincide.
    pub fn new(deltas: [[f64; 2]; 3]) -> Result<Self> {
        for d in &deltas {
            if !(d[0].abs() < 1.0 && d[1].abs() < 1.0) {
                return Err(Error::InvalidOffsets(format!("offset {d:?} leaves the main lobe")));
            }
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                if deltas[i] == deltas[j] {
                    return Err(Error::InvalidOffsets(format!("offsets {i} and {j} coincide")));
                }
            }
        }
        Ok(Self { deltas })
    }

    /// Asymptotically optimal offsets for joint gain and direction tracking
    /// (quasi-static and Gauss–Markov cases).
    #[must_use]
    pub const fn joint_optimal() -> Self {
        Self { deltas: [[-0.0963, 0.5098], [-0.2906, -0.2906], [0.5098, -0.0963]] }
    }

    /// Asymptotically optimal offsets for direction-only tracking under
    /// Rayleigh gains at `SNR_β = 0 dB`.
    #[must_use]
    pub const fn direction_optimal() -> Self {
        Self { deltas: [[0.5486, 0.2451], [-0.5462, 0.2482], [-0.0012, -0.6837]] }
    }
}

/// Exploring beamforming matrix: three normalized steering columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Ebm {
    /// Columns `w_i = a(ω_i)/√(MN)`.
    pub columns: [Vec<C64>; 3],
    /// Beam directions `ω_i`.
    pub directions: [Dpv; 3],
}

impl Ebm {
    /// Builds the matrix from three explicit beam directions.
    #[must_use]
    pub fn from_directions(cfg: &ArrayConfig, directions: [Dpv; 3]) -> Self {
        let norm = 1.0 / libm::sqrt(cfg.mn() as f64);
        let col = |d: Dpv| steering_vector(cfg, d).into_iter().map(|v| v * norm).collect();
        Self { columns: [col(directions[0]), col(directions[1]), col(directions[2])], directions }
    }

    /// `Wᴴ v` for an `MN`-vector `v`.
    #[must_use]
    pub fn project(&self, v: &[C64]) -> [C64; 3] {
        core::array::from_fn(|i| dotc(&self.columns[i], v))
    }
}

/// The three matched-filter outputs of one exploration cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// Observation vector `y`.
    pub y: [C64; 3],
}

/// Beam directions `center + Δ_i`.
#[must_use]
pub fn probe_directions(center: Dpv, offsets: &OffsetSet) -> [Dpv; 3] {
    core::array::from_fn(|i| center.offset(offsets.deltas[i]))
}

/// Builds the exploring matrix `w_i = a(center + Δ_i)/√(MN)`.
#[must_use]
pub fn build_ebm(cfg: &ArrayConfig, center: Dpv, offsets: &OffsetSet) -> Ebm {
    Ebm::from_directions(cfg, probe_directions(center, offsets))
}

/// Noiseless mean `|s| β Wᴴ a(x)` by explicit inner products.
#[must_use]
pub fn noiseless_mean(cfg: &ArrayConfig, psi: &ChannelParams, ebm: &Ebm) -> [C64; 3] {
    let a = steering_vector(cfg, psi.x);
    let g = ebm.project(&a);
    g.map(|gi| gi * psi.beta * cfg.pilot_amp)
}

/// Noiseless mean evaluated from the beam directions alone with the
/// separable shift-invariant response (no `MN`-vectors are formed).
#[must_use]
pub fn noiseless_mean_at(cfg: &ArrayConfig, psi: &ChannelParams, directions: &[Dpv; 3]) -> [C64; 3] {
    core::array::from_fn(|i| {
        beam_response(cfg, directions[i].minus(psi.x)).value * psi.beta * cfg.pilot_amp
    })
}

/// Normalized channel error `‖β̂ a(x̂) − β a(x)‖²/(MN)`, evaluated with the
/// separable response instead of `MN`-vectors.
#[must_use]
pub fn channel_error_normalized(cfg: &ArrayConfig, estimate: &ChannelParams, truth: &ChannelParams) -> f64 {
    // a(x̂)ᴴ a(x)/(MN) = response(x̂ − x)/√(MN).
    let cross = beam_response(cfg, estimate.x.minus(truth.x)).value / libm::sqrt(cfg.mn() as f64);
    let v = estimate.beta.norm_sqr() + truth.beta.norm_sqr() - 2.0 * (estimate.beta.conj() * truth.beta * cross).re;
    v.max(0.0)
}

/// Adds `CN(0, σ_z²)` noise to a mean vector.
pub fn add_noise<R: Rng + ?Sized>(cfg: &ArrayConfig, mean: [C64; 3], rng: &mut R) -> Observation {
    Observation { y: mean.map(|m| m + complex_normal(rng, cfg.noise_var)) }
}

/// Draws one noisy observation `y = |s| β Wᴴ a(x) + z`.
pub fn observe<R: Rng + ?Sized>(
    cfg: &ArrayConfig,
    psi: &ChannelParams,
    ebm: &Ebm,
    rng: &mut R,
) -> Observation {
    add_noise(cfg, noiseless_mean(cfg, psi, ebm), rng)
}

/// Real Jacobian of `ψ ↦ (Re y_i, Im y_i)` over the first `q` probes
/// (rows ordered `Re y_1, Im y_1, Re y_2, …`), evaluated analytically.
#[must_use]
pub fn observation_jacobian(cfg: &ArrayConfig, psi: &ChannelParams, ebm: &Ebm, q: usize) -> Vec<[f64; 4]> {
    let s = cfg.pilot_amp;
    let mut rows = Vec::with_capacity(2 * q);
    for dir in ebm.directions.iter().take(q) {
        let r = beam_response(cfg, dir.minus(psi.x));
        let cols = [
            r.value * s,
            r.value * C64::new(0.0, s),
            r.deriv[0] * psi.beta * s,
            r.deriv[1] * psi.beta * s,
        ];
        rows.push(cols.map(|c| c.re));
        rows.push(cols.map(|c| c.im));
    }
    rows
}

/// Axis-aligned search region for the identifiability solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpvBox {
    /// Lower corner.
    pub lo: Dpv,
    /// Upper corner.
    pub hi: Dpv,
}

impl DpvBox {
    /// Square of half-width `h` around `center`.
    #[must_use]
    pub fn around(center: Dpv, h: f64) -> Self {
        Self { lo: Dpv::new(center.x1 - h, center.x2 - h), hi: Dpv::new(center.x1 + h, center.x2 + h) }
    }

    fn contains(&self, x: Dpv) -> bool {
        x.x1 >= self.lo.x1 && x.x1 <= self.hi.x1 && x.x2 >= self.lo.x2 && x.x2 <= self.hi.x2
    }
}

/// Grid resolution of the solver's coarse scan.
const SOLVER_GRID: usize = 41;
/// Residual above which no root is declared.
const SOLVER_RESIDUAL_TOL: f64 = 1e-6;
/// Separation above which two roots count as distinct.
const SOLVER_DISTINCT_TOL: f64 = 1e-6;

/// Relative-amplitude residuals `|y_i||g_1(x)| − |y_1||g_i(x)|` (i = 2, 3),
/// normalized by `|y_1|`, and their Jacobian with respect to `x`.
fn amplitude_residual(cfg: &ArrayConfig, ebm: &Ebm, amp: &[f64; 3], x: Dpv) -> ([f64; 2], [[f64; 2]; 2]) {
    let resp: [_; 3] = core::array::from_fn(|i| beam_response(cfg, ebm.directions[i].minus(x)));
    let mag: [f64; 3] = resp.map(|r| r.value.norm());
    // ∂|g|/∂x_p = Re(ḡ ∂g/∂x_p)/|g|; the response is a function of ω − x, but
    // its `deriv` field is already the derivative with respect to x.
    let dmag = |i: usize, p: usize| -> f64 {
        if mag[i] == 0.0 {
            0.0
        } else {
            (resp[i].value.conj() * resp[i].deriv[p]).re / mag[i]
        }
    };
    let mut f = [0.0; 2];
    let mut jac = [[0.0; 2]; 2];
    for (k, i) in [1usize, 2].into_iter().enumerate() {
        f[k] = (amp[i] * mag[0] - amp[0] * mag[i]) / amp[0];
        for p in 0..2 {
            jac[k][p] = (amp[i] * dmag(0, p) - amp[0] * dmag(i, p)) / amp[0];
        }
    }
    (f, jac)
}

fn residual_norm(f: &[f64; 2]) -> f64 {
    libm::sqrt(f[0] * f[0] + f[1] * f[1])
}

/// Damped Newton iteration on the amplitude residuals, confined to `bx`.
fn newton_amplitude(cfg: &ArrayConfig, ebm: &Ebm, amp: &[f64; 3], start: Dpv, bx: &DpvBox) -> (Dpv, f64) {
    let mut x = start;
    let (mut f, mut jac) = amplitude_residual(cfg, ebm, amp, x);
    let mut r = residual_norm(&f);
    for _ in 0..100 {
        if r < 1e-15 {
            break;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        let step = [
            (jac[1][1] * f[0] - jac[0][1] * f[1]) / det,
            (-jac[1][0] * f[0] + jac[0][0] * f[1]) / det,
        ];
        let mut t = 1.0;
        let mut improved = false;
        while t > 1e-6 {
            let cand = Dpv::new(x.x1 - t * step[0], x.x2 - t * step[1]);
            if bx.contains(cand) {
                let (fc, jc) = amplitude_residual(cfg, ebm, amp, cand);
                let rc = residual_norm(&fc);
                if rc < r {
                    x = cand;
                    f = fc;
                    jac = jc;
                    r = rc;
                    improved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (x, r)
}

/// Recovers `ψ` from an exact noiseless observation of three probes.
///
/// The two relative-amplitude equations `|y_i|/|y_1|` are solved for `x` by a
/// dense grid scan of `search_box` followed by damped Newton refinement from
/// every grid local minimum; `β` then follows from the strongest probe's
/// complex equation (magnitude and phase).
///
/// # Errors
/// * [`Error::NoSolution`] when `|y_1| ≤ 1e-9` or the best residual exceeds `1e-6`;
/// * [`Error::AmbiguousSolution`] when two distinct roots fit within tolerance.
pub fn recover_from_noiseless(
    cfg: &ArrayConfig,
    ebm: &Ebm,
    y: &[C64; 3],
    search_box: &DpvBox,
) -> Result<ChannelParams> {
    let amp = y.map(|v| v.norm());
    if amp[0] <= 1e-9 {
        return Err(Error::NoSolution(format!("|y_1| = {} is too small", amp[0])));
    }
    if cfg.pilot_amp <= 0.0 {
        return Err(Error::NoSolution("pilot amplitude is zero".into()));
    }
    let g = SOLVER_GRID;
    let coord = |i: usize, lo: f64, hi: f64| lo + (hi - lo) * i as f64 / (g - 1) as f64;
    let mut grid = alloc::vec![0.0; g * g];
    for i in 0..g {
        for j in 0..g {
            let x = Dpv::new(
                coord(i, search_box.lo.x1, search_box.hi.x1),
                coord(j, search_box.lo.x2, search_box.hi.x2),
            );
            grid[i * g + j] = residual_norm(&amplitude_residual(cfg, ebm, &amp, x).0);
        }
    }
    // Local minima of the coarse scan seed the Newton refinements.
    let mut seeds: Vec<(f64, Dpv)> = Vec::new();
    for i in 0..g {
        for j in 0..g {
            let v = grid[i * g + j];
            let mut is_min = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || ii < 0 || jj < 0 || ii >= g as i64 || jj >= g as i64 {
                        continue;
                    }
                    if grid[ii as usize * g + jj as usize] < v {
                        is_min = false;
                    }
                }
            }
            if is_min {
                let x = Dpv::new(
                    coord(i, search_box.lo.x1, search_box.hi.x1),
                    coord(j, search_box.lo.x2, search_box.hi.x2),
                );
                seeds.push((v, x));
            }
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut roots: Vec<(Dpv, f64)> = Vec::new();
    for &(_, start) in seeds.iter().take(8) {
        let (x, r) = newton_amplitude(cfg, ebm, &amp, start, search_box);
        if r < SOLVER_RESIDUAL_TOL {
            let known = roots.iter().any(|(z, _)| {
                (z.x1 - x.x1).abs() < SOLVER_DISTINCT_TOL && (z.x2 - x.x2).abs() < SOLVER_DISTINCT_TOL
            });
            if !known {
                roots.push((x, r));
            }
        }
    }
    match roots.len() {
        0 => Err(Error::NoSolution("amplitude equations have no root in the search box".into())),
        1 => {
            let x = roots[0].0;
            let resp: [C64; 3] = core::array::from_fn(|i| beam_response(cfg, ebm.directions[i].minus(x)).value);
            let best = (0..3).max_by(|&a, &b| resp[a].norm().total_cmp(&resp[b].norm())).unwrap_or(0);
            let beta = y[best] / (resp[best] * cfg.pilot_amp);
            Ok(ChannelParams::new(beta, x))
        }
        _ => Err(Error::AmbiguousSolution),
    }
}
