//! Derivative-free search for exploration offsets that minimize the
//! single-cycle bound, symmetry canonicalization of offset sets, and the
//! finite-size robustness sweep.
//!
//! Objectives are normalized by `MN` (unit pilot and noise), so asymptotic and
//! finite-size values are directly comparable:
//!
//! * static: `MN·C_S`;
//! * Rayleigh gain: `MN·C_DI` with `σ_β² = SNR_β`.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::array_core::ArrayConfig;
use crate::estimation_theory::{
    crlb_di_asymptotic, crlb_di_offsets, crlb_static_asymptotic, crlb_static_offsets, DiModel,
};
use crate::signal_model::OffsetSet;
use crate::{Error, Result, C64};

/// Quantity to minimize over offset sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Large-array limit of `MN·C_S`.
    StaticAsymptotic,
    /// `MN·C_S` for an `m × n` array.
    StaticFinite {
        /// Elements along the first axis.
        m: usize,
        /// Elements along the second axis.
        n: usize,
    },
    /// Large-array limit of `MN·C_DI` at the given `SNR_β` (dB).
    DiAsymptotic {
        /// `SNR_β` in dB.
        snr_beta_db: f64,
    },
    /// `MN·C_DI` for an `m × n` array at the given `SNR_β` (dB).
    DiFinite {
        /// Elements along the first axis.
        m: usize,
        /// Elements along the second axis.
        n: usize,
        /// `SNR_β` in dB.
        snr_beta_db: f64,
    },
}

fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

impl Objective {
    /// Evaluates the objective.
    ///
    /// # Errors
    /// [`Error::SingularFisher`] for degenerate offsets.
    pub fn evaluate(&self, offsets: &OffsetSet) -> Result<f64> {
        let one = C64::new(1.0, 0.0);
        match *self {
            Self::StaticAsymptotic => crlb_static_asymptotic(offsets, 1.0, 1.0, one),
            Self::StaticFinite { m, n } => {
                let cfg = ArrayConfig::half_wavelength(m, n);
                Ok(crlb_static_offsets(&cfg, offsets)? * cfg.mn() as f64)
            }
            Self::DiAsymptotic { snr_beta_db } => crlb_di_asymptotic(offsets, db_to_linear(snr_beta_db)),
            Self::DiFinite { m, n, snr_beta_db } => {
                let cfg = ArrayConfig::half_wavelength(m, n);
                let model = DiModel { sigma_beta_sq: db_to_linear(snr_beta_db) };
                Ok(crlb_di_offsets(&cfg, &model, offsets)? * cfg.mn() as f64)
            }
        }
    }

    /// Whether swapping the two coordinates is a symmetry of the objective.
    #[must_use]
    pub fn swap_symmetric(&self) -> bool {
        match *self {
            Self::StaticAsymptotic | Self::DiAsymptotic { .. } => true,
            Self::StaticFinite { m, n } | Self::DiFinite { m, n, .. } => m == n,
        }
    }

    /// Reference offsets the search is compared against.
    #[must_use]
    pub fn reference_offsets(&self) -> OffsetSet {
        match self {
            Self::StaticAsymptotic | Self::StaticFinite { .. } => OffsetSet::joint_optimal(),
            Self::DiAsymptotic { .. } | Self::DiFinite { .. } => OffsetSet::direction_optimal(),
        }
    }
}

/// Search parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Objective to minimize.
    pub objective: Objective,
    /// Grid points per axis of the seeding grid (default 21).
    pub grid_points_per_axis: usize,
    /// Nelder–Mead iterations per simplex cycle (default 400).
    pub refine_iters: usize,
    /// Seed of the per-restart random streams.
    pub seed: u64,
    /// Offsets are confined to the open square `(−h, h)²` (default 0.95).
    pub box_halfwidth: f64,
    /// Number of Nelder–Mead restarts (default 16).
    pub restarts: usize,
    /// Additional starting points refined alongside the grid seeds.
    pub extra_seeds: Vec<OffsetSet>,
}

impl SearchConfig {
    /// Defaults for the given objective.
    #[must_use]
    pub fn new(objective: Objective) -> Self {
        Self {
            objective,
            grid_points_per_axis: 21,
            refine_iters: 400,
            seed: 0,
            box_halfwidth: 0.95,
            restarts: 16,
            extra_seeds: Vec::new(),
        }
    }

    /// Checks parameter ranges.
    ///
    /// # Errors
    /// [`Error::InvalidConfig`] naming the offending field.
    pub fn validate(&self) -> Result<()> {
        if !(self.box_halfwidth > 0.0 && self.box_halfwidth < 1.0) {
            return Err(Error::InvalidConfig(alloc::format!("box_halfwidth must lie in (0, 1), got {}", self.box_halfwidth)));
        }
        if self.grid_points_per_axis < 2 {
            return Err(Error::InvalidConfig("grid_points_per_axis must be at least 2".into()));
        }
        if self.refine_iters == 0 || self.restarts == 0 {
            return Err(Error::InvalidConfig("refine_iters and restarts must be positive".into()));
        }
        match self.objective {
            Objective::StaticFinite { m, n } | Objective::DiFinite { m, n, .. } if m == 0 || n == 0 => {
                Err(Error::InvalidConfig("array dimensions must be positive".into()))
            }
            Objective::DiAsymptotic { snr_beta_db } | Objective::DiFinite { snr_beta_db, .. } if !snr_beta_db.is_finite() => {
                Err(Error::InvalidConfig("snr_beta_db must be finite".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Outcome of [`optimize_offsets`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchResult {
    /// Best offsets found.
    pub offsets: OffsetSet,
    /// Objective at `offsets`.
    pub crlb_value: f64,
    /// Number of refinements run.
    pub restarts_used: usize,
}

fn to_offsets(v: &[f64; 6]) -> [[f64; 2]; 3] {
    [[v[0], v[1]], [v[2], v[3]], [v[4], v[5]]]
}

fn from_offsets(o: &OffsetSet) -> [f64; 6] {
    let d = o.deltas;
    [d[0][0], d[0][1], d[1][0], d[1][1], d[2][0], d[2][1]]
}

/// Nelder–Mead minimization from `start` with initial simplex edge `step`
/// along randomly signed coordinate axes; returns the best vertex and value.
fn nelder_mead<F: FnMut(&[f64; 6]) -> f64>(
    f: &mut F,
    start: [f64; 6],
    step: f64,
    iters: usize,
    rng: &mut ChaCha8Rng,
) -> ([f64; 6], f64) {
    const N: usize = 6;
    let mut simplex: Vec<([f64; 6], f64)> = Vec::with_capacity(N + 1);
    simplex.push((start, f(&start)));
    for i in 0..N {
        let mut v = start;
        v[i] += if rng.random::<bool>() { step } else { -step };
        simplex.push((v, f(&v)));
    }
    let combine = |a: &[f64; 6], b: &[f64; 6], t: f64| -> [f64; 6] { core::array::from_fn(|i| a[i] + t * (b[i] - a[i])) };
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[N].1;
        if best.is_finite() && (worst - best).abs() <= 1e-15 * best.abs().max(1e-300) {
            break;
        }
        let centroid: [f64; 6] = core::array::from_fn(|i| simplex[..N].iter().map(|p| p.0[i]).sum::<f64>() / N as f64);
        let worst_pt = simplex[N].0;
        let reflected = combine(&centroid, &worst_pt, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = combine(&centroid, &worst_pt, -2.0);
            let fe = f(&expanded);
            simplex[N] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[N - 1].1 {
            simplex[N] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < simplex[N].1 {
                let c = combine(&centroid, &reflected, 0.5);
                (c, f(&c))
            } else {
                let c = combine(&centroid, &worst_pt, 0.5);
                (c, f(&c))
            };
            if fc < simplex[N].1.min(fr) {
                simplex[N] = (contracted, fc);
            } else {
                let anchor = simplex[0].0;
                for p in simplex.iter_mut().skip(1) {
                    p.0 = combine(&anchor, &p.0, 0.5);
                    p.1 = f(&p.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

/// Refines from `start` with repeated simplex re-initialization until a cycle
/// brings no relative improvement above `1e-12`.
fn refine<F: FnMut(&[f64; 6]) -> f64>(f: &mut F, start: [f64; 6], iters: usize, rng: &mut ChaCha8Rng) -> ([f64; 6], f64) {
    let mut best = (start, f(&start));
    let mut step = 0.1;
    for _ in 0..12 {
        let cand = nelder_mead(f, best.0, step, iters, rng);
        let improved = cand.1 < best.1 - 1e-12 * best.1.abs();
        if cand.1 < best.1 {
            best = cand;
        }
        if !improved && step < 0.01 {
            break;
        }
        step = if improved { 0.05 } else { step * 0.3 };
    }
    best
}

/// Core search over an arbitrary box-guarded objective.
fn search<F: FnMut(&[f64; 6]) -> f64>(sc: &SearchConfig, raw: &mut F) -> Result<([f64; 6], f64, usize)> {
    sc.validate()?;
    let h = sc.box_halfwidth;
    let mut f = |v: &[f64; 6]| -> f64 {
        if v.iter().any(|c| !(c.abs() < h)) {
            return f64::INFINITY;
        }
        raw(v)
    };

    // Coarse grid over a 4-D slice: Δ₁ and Δ₂ free, Δ₃ = −(Δ₁ + Δ₂).
    let g = sc.grid_points_per_axis;
    let axis: Vec<f64> = (0..g).map(|i| -h + 2.0 * h * (i as f64 + 0.5) / g as f64).collect();
    let mut seeds: Vec<([f64; 6], f64)> = Vec::new();
    for &a in &axis {
        for &b in &axis {
            for &c in &axis {
                for &d in &axis {
                    let v = [a, b, c, d, -(a + c), -(b + d)];
                    let val = f(&v);
                    if val.is_finite() {
                        seeds.push((v, val));
                    }
                }
            }
        }
    }
    seeds.sort_by(|x, y| x.1.total_cmp(&y.1));
    let incumbent = seeds.first().map_or(f64::INFINITY, |s| s.1);
    // Keep grid seeds that are distinct up to the objective's symmetries.
    let swap = sc.objective.swap_symmetric();
    let mut starts: Vec<[f64; 6]> = Vec::new();
    for (v, _) in &seeds {
        if starts.len() >= sc.restarts {
            break;
        }
        let canon = from_offsets(&canonicalize_with(&OffsetSet { deltas: to_offsets(v) }, swap));
        let dup = starts.iter().any(|s| {
            let cs = from_offsets(&canonicalize_with(&OffsetSet { deltas: to_offsets(s) }, swap));
            cs.iter().zip(&canon).all(|(p, q)| (p - q).abs() < 1e-9)
        });
        if !dup {
            starts.push(*v);
        }
    }
    starts.extend(sc.extra_seeds.iter().map(from_offsets));

    let mut best: Option<([f64; 6], f64)> = None;
    for (r, start) in starts.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
        rng.set_stream(r as u64);
        let cand = refine(&mut f, *start, sc.refine_iters, &mut rng);
        // Ties go to the lowest restart index.
        if best.is_none_or(|b| cand.1 < b.1) {
            best = Some(cand);
        }
    }
    let (v, val) = best.ok_or(Error::NoImprovement)?;
    if !(val < incumbent) && sc.extra_seeds.is_empty() {
        return Err(Error::NoImprovement);
    }
    Ok((v, val, starts.len()))
}

/// Multi-start search: a coarse grid seeds Nelder–Mead refinements in the
/// full 6-dimensional offset space.
///
/// # Errors
/// * [`Error::InvalidConfig`] for invalid parameters;
/// * [`Error::NoImprovement`] if no refinement beats the best grid point.
pub fn optimize_offsets(sc: &SearchConfig) -> Result<SearchResult> {
    let objective = sc.objective;
    let mut raw = |v: &[f64; 6]| -> f64 {
        OffsetSet::new(to_offsets(v)).and_then(|o| objective.evaluate(&o)).unwrap_or(f64::INFINITY)
    };
    let (v, _, used) = search(sc, &mut raw)?;
    let offsets = OffsetSet::new(to_offsets(&v))?;
    Ok(SearchResult { offsets, crlb_value: objective.evaluate(&offsets)?, restarts_used: used })
}

fn lex_less(a: &[f64; 6], b: &[f64; 6]) -> bool {
    for i in 0..6 {
        match a[i].total_cmp(&b[i]) {
            core::cmp::Ordering::Less => return true,
            core::cmp::Ordering::Greater => return false,
            core::cmp::Ordering::Equal => {}
        }
    }
    false
}

/// Canonical representative under per-axis sign flips and, when
/// `allow_swap`, the coordinate swap: the lexicographically smallest
/// sorted image.
#[must_use]
pub fn canonicalize_with(offsets: &OffsetSet, allow_swap: bool) -> OffsetSet {
    let mut best: Option<[f64; 6]> = None;
    for swap in [false, true] {
        if swap && !allow_swap {
            continue;
        }
        for s1 in [1.0, -1.0] {
            for s2 in [1.0, -1.0] {
                let mut d = offsets.deltas.map(|p| {
                    let (a, b) = if swap { (p[1], p[0]) } else { (p[0], p[1]) };
                    // Normalize −0.0 so that images compare consistently.
                    [s1 * a + 0.0, s2 * b + 0.0]
                });
                d.sort_by(|x, y| x[0].total_cmp(&y[0]).then(x[1].total_cmp(&y[1])));
                let flat = from_offsets(&OffsetSet { deltas: d });
                if best.is_none_or(|b| lex_less(&flat, &b)) {
                    best = Some(flat);
                }
            }
        }
    }
    OffsetSet { deltas: to_offsets(&best.unwrap_or_else(|| from_offsets(offsets))) }
}

/// [`canonicalize_with`] over the full 8-element group (valid for square
/// arrays and the large-array limits).
#[must_use]
pub fn canonicalize(offsets: &OffsetSet) -> OffsetSet {
    canonicalize_with(offsets, true)
}

/// Objective family for [`robustness_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepKind {
    /// Static bound.
    Static,
    /// Rayleigh-gain bound at `SNR_β` (dB).
    Di {
        /// `SNR_β` in dB.
        snr_beta_db: f64,
    },
}

/// One size of a robustness sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    /// Array size `(M, N)`.
    pub size: (usize, usize),
    /// Objective at the supplied offsets.
    pub crlb_at_offsets: f64,
    /// Finite-size minimum found by the search.
    pub crlb_min: f64,
    /// `(crlb_at_offsets − crlb_min)/crlb_min`.
    pub rel_gap: f64,
}

/// For each size, compares the objective at `offsets` against the
/// finite-size optimum (the search is also seeded with `offsets`).
///
/// # Errors
/// Propagates search and evaluation errors.
pub fn robustness_sweep(offsets: &OffsetSet, sizes: &[(usize, usize)], kind: SweepKind, seed: u64) -> Result<Vec<SweepRow>> {
    sizes
        .iter()
        .map(|&(m, n)| {
            let objective = match kind {
                SweepKind::Static => Objective::StaticFinite { m, n },
                SweepKind::Di { snr_beta_db } => Objective::DiFinite { m, n, snr_beta_db },
            };
            let at = objective.evaluate(offsets)?;
            let mut sc = SearchConfig::new(objective);
            sc.seed = seed;
            sc.extra_seeds.push(*offsets);
            let best = optimize_offsets(&sc)?;
            let min = best.crlb_value.min(at);
            Ok(SweepRow { size: (m, n), crlb_at_offsets: at, crlb_min: min, rel_gap: (at - min) / min })
        })
        .collect()
}
