//! Monte-Carlo orchestration: per-trial simulation loops, deterministic
//! parallel execution, and metric aggregation.

use beamtrack_core::array_core::{ArrayConfig, Dpv};
use beamtrack_core::channel_sim::{evolve, init_channel, initial_estimate, ChannelState, ScenarioKind};
use beamtrack_core::estimation_theory::{crlb_di_offsets, crlb_static_offsets, DiModel};
use beamtrack_core::signal_model::{add_noise, channel_error_normalized, noiseless_mean_at, ChannelParams, OffsetSet};
use beamtrack_core::trackers::{BeamSwitchState, EkfState, GainKnowledge, JbctState, RbtState, Tracker};
use beamtrack_core::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ConfigError, ExperimentConfig, RbtMode, TrackerKind};

/// Environment variable capping the worker count (`0` or unset = automatic).
pub const THREADS_ENV: &str = "BEAMTRACK_THREADS";

/// Trial-averaged metrics at one cycle index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord {
    /// Cycle index `k ≥ 1`.
    pub ecc: usize,
    /// Observations consumed so far: three per cycle plus the three of the
    /// bootstrap cycle.
    pub explorations_total: usize,
    /// `(1/MN)·E‖ĥ − h‖²`; NaN for trackers without a gain estimate.
    pub mse_h: f64,
    /// `E‖x̂ − x‖²`.
    pub mse_x: f64,
    /// Trial-averaged minimum bound divided by `k`: the channel bound for
    /// the quasi-static scenario, the direction bound for Rayleigh gains,
    /// NaN for the fast-varying scenario.
    pub crlb_ref: f64,
    /// Number of trials averaged.
    pub trials: usize,
}

/// Random stream of one trial: seeded by `seed`, stream index `trial`.
#[must_use]
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Minimum-bound constant `C` of one trial (`crlb_ref = C/k`).
fn bound_constant(ec: &ExperimentConfig, state: &ChannelState) -> Result<f64, ConfigError> {
    let err = |e: beamtrack_core::Error| ConfigError::Field { field: "offsets", message: e.to_string() };
    match ec.scenario.kind {
        ScenarioKind::QuasiStatic { .. } => crlb_static_offsets(&ec.array, &OffsetSet::joint_optimal()).map_err(err),
        ScenarioKind::DynamicI { sigma_beta_c_sq } => {
            let eta = state.element_gain(&ec.scenario);
            let model = DiModel { sigma_beta_sq: eta * eta * sigma_beta_c_sq };
            crlb_di_offsets(&ec.array, &model, &OffsetSet::direction_optimal()).map_err(err)
        }
        ScenarioKind::DynamicII { .. } => Ok(f64::NAN),
    }
}

fn build_tracker(ec: &ExperimentConfig, state: &ChannelState, x0: Dpv) -> Result<Box<dyn Tracker>, ConfigError> {
    let err = |e: beamtrack_core::Error| ConfigError::Field { field: "tracker", message: e.to_string() };
    let cfg = &ec.array;
    Ok(match ec.tracker {
        TrackerKind::JbctS | TrackerKind::JbctDii => {
            let psi0 = ChannelParams::new(C64::new(0.0, 0.0), x0);
            Box::new(JbctState::new(cfg, ec.offsets, ec.schedule, psi0).map_err(err)?)
        }
        TrackerKind::RbtDi(mode) => {
            let ScenarioKind::DynamicI { sigma_beta_c_sq } = ec.scenario.kind else {
                return Err(ConfigError::Field { field: "tracker", message: "rbt-di requires the dynamic-i scenario".into() });
            };
            let knowledge = match mode {
                RbtMode::Perfect => {
                    let eta = state.element_gain(&ec.scenario);
                    GainKnowledge::Perfect { sigma_beta_sq: eta * eta * sigma_beta_c_sq }
                }
                RbtMode::Estimated => GainKnowledge::Estimated { sigma_beta_c_sq, pattern: ec.scenario.pattern },
            };
            Box::new(RbtState::new(cfg, ec.offsets, ec.schedule, knowledge, x0).map_err(err)?)
        }
        TrackerKind::BeamSwitch => Box::new(BeamSwitchState::new(x0, ec.baselines.oversampling).map_err(err)?),
        TrackerKind::Ekf => Box::new(EkfState::new(x0, ec.baselines.ekf_prior_var, ec.baselines.ekf_q)),
    })
}

fn observe_at<R: rand::Rng + ?Sized>(cfg: &ArrayConfig, state: &ChannelState, probes: &[Dpv; 3], rng: &mut R) -> beamtrack_core::signal_model::Observation {
    add_noise(cfg, noiseless_mean_at(cfg, &state.params(), probes), rng)
}

/// Per-record sample of one trial: `(squared channel error, squared
/// direction error, bound constant / k)`.
pub type TrialSample = (f64, f64, f64);

/// Cycle indices at which metrics are recorded.
#[must_use]
pub fn record_points(ec: &ExperimentConfig) -> Vec<usize> {
    (1..=ec.num_eccs).filter(|k| k % ec.record_every == 0 || *k == ec.num_eccs).collect()
}

/// Runs one trial.
///
/// Order: draw the channel, draw `x̂₀` uniformly within `init_halfwidth`,
/// run one bootstrap cycle at `x̂₀` (initial gain fit), then per cycle:
/// probe directions from the current estimate, channel transition,
/// observation, tracker update, clamp to the physical range, record.
///
/// # Errors
/// [`ConfigError`] if the tracker cannot be constructed.
pub fn run_trial(ec: &ExperimentConfig, trial: u64) -> Result<Vec<TrialSample>, ConfigError> {
    let cfg = &ec.array;
    let mut rng = trial_rng(ec.seed, trial);
    let mut state = init_channel(&ec.scenario, cfg, &mut rng);
    let x0 = cfg.clamp_dpv(initial_estimate(&state, &mut rng, ec.init_halfwidth));
    let bound = bound_constant(ec, &state)?;
    let mut tracker = build_tracker(ec, &state, x0)?;
    let y0 = observe_at(cfg, &state, &tracker.probe_directions(), &mut rng);
    tracker.bootstrap(cfg, &y0);

    let mut out = Vec::with_capacity(ec.num_eccs / ec.record_every + 1);
    for k in 1..=ec.num_eccs {
        let probes = tracker.probe_directions();
        state = evolve(&state, &ec.scenario, cfg, &mut rng);
        let y = observe_at(cfg, &state, &probes, &mut rng);
        // A singular Fisher matrix skips the update; the trial continues.
        let _ = tracker.step(cfg, &y);
        let x_hat = tracker.direction();
        let clamped = cfg.clamp_dpv(x_hat);
        if clamped != x_hat {
            tracker.set_direction(clamped);
        }
        if k % ec.record_every == 0 || k == ec.num_eccs {
            let x_hat = tracker.direction();
            let truth = state.params();
            let d = x_hat.minus(truth.x);
            let mse_x = d[0] * d[0] + d[1] * d[1];
            let mse_h = tracker
                .gain()
                .map_or(f64::NAN, |b| channel_error_normalized(cfg, &ChannelParams::new(b, x_hat), &truth));
            out.push((mse_h, mse_x, bound / k as f64));
        }
    }
    Ok(out)
}

fn worker_count() -> usize {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).unwrap_or(0)
}

/// Runs all trials in parallel and averages them in trial order, so the
/// result is identical for any worker count.
///
/// # Errors
/// [`ConfigError`] for an invalid configuration.
pub fn run_experiment(ec: &ExperimentConfig) -> Result<Vec<MetricsRecord>, ConfigError> {
    ec.validate()?;
    let run = || -> Result<Vec<Vec<TrialSample>>, ConfigError> {
        (0..ec.num_trials as u64).into_par_iter().map(|t| run_trial(ec, t)).collect()
    };
    let threads = worker_count();
    let per_trial = if threads == 0 {
        run()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| ConfigError::Field { field: THREADS_ENV, message: e.to_string() })?;
        pool.install(run)?
    };
    Ok(aggregate(ec, &per_trial))
}

/// Averages per-trial samples in trial order.
#[must_use]
pub fn aggregate(ec: &ExperimentConfig, per_trial: &[Vec<TrialSample>]) -> Vec<MetricsRecord> {
    let trials = per_trial.len();
    record_points(ec)
        .into_iter()
        .enumerate()
        .map(|(i, ecc)| {
            let mut sum = (0.0, 0.0, 0.0);
            for t in per_trial {
                sum.0 += t[i].0;
                sum.1 += t[i].1;
                sum.2 += t[i].2;
            }
            let n = trials as f64;
            MetricsRecord {
                ecc,
                explorations_total: 3 * ecc + 3,
                mse_h: sum.0 / n,
                mse_x: sum.1 / n,
                crlb_ref: sum.2 / n,
                trials,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigFile;
    use std::path::Path;

    fn config(text: &str) -> ExperimentConfig {
        ConfigFile::from_toml(text, Path::new("inline.toml")).unwrap().resolve().unwrap()
    }

    #[test]
    fn record_points_include_last_cycle() {
        let ec = config("num_eccs = 10\nrecord_every = 4");
        assert_eq!(record_points(&ec), vec![4, 8, 10]);
    }

    /// Noise variance `1e-30` at unit pilot amplitude (300 dB transmit SNR).
    const NOISELESS: &str = "num_trials = 1\nnum_eccs = 500\nnoise_var = 1e-30\nsnr_db = 300.0\nrecord_every = 100\n";

    #[test]
    fn near_noiseless_constant_step_convergence() {
        let ec = config(&format!("{NOISELESS}schedule = \"constant\"\nstep = 0.7"));
        let r = run_experiment(&ec).unwrap();
        assert!(r.last().unwrap().mse_h < 1e-10, "{r:?}");
    }

    #[test]
    fn near_noiseless_harmonic_error_decays_as_inverse_square() {
        // With b_k = 1/k the first update is a full Newton step and later
        // updates shrink the residual by (1 - 1/k): the direction error is
        // e_1/k, so k²·mse_h is constant.
        let r = run_experiment(&config(NOISELESS)).unwrap();
        let scaled: Vec<f64> = r.iter().map(|m| m.mse_h * (m.ecc * m.ecc) as f64).collect();
        for v in &scaled {
            assert!((v / scaled[0] - 1.0).abs() < 0.05, "{scaled:?}");
        }
    }

    #[test]
    #[ignore = "unattainable: with b_k = 1/k the noiseless channel error decays as 1/k², about 2e-7 at k = 500"]
    fn near_noiseless_harmonic_to_1e_10() {
        let r = run_experiment(&config(NOISELESS)).unwrap();
        assert!(r.last().unwrap().mse_h < 1e-10, "{r:?}");
    }

    #[test]
    fn exploration_budget_is_tracker_independent() {
        for tracker in ["jbct-s", "beam-switch", "ekf"] {
            let ec = config(&format!("num_trials = 2\nnum_eccs = 5\ntracker = \"{tracker}\""));
            let r = run_experiment(&ec).unwrap();
            assert_eq!(r.iter().map(|m| m.explorations_total).collect::<Vec<_>>(), vec![6, 9, 12, 15, 18]);
        }
    }

    #[test]
    fn direction_only_tracker_has_no_channel_error() {
        let ec = config("scenario = \"dynamic-i\"\ntracker = \"rbt-di\"\nnum_trials = 2\nnum_eccs = 3");
        let r = run_experiment(&ec).unwrap();
        assert!(r.iter().all(|m| m.mse_h.is_nan() && m.mse_x >= 0.0 && m.crlb_ref > 0.0));
    }

    #[test]
    fn fast_varying_scenario_has_no_bound() {
        let ec = config("scenario = \"dynamic-ii\"\ndelta_a_deg = 0.3\ntracker = \"jbct-dii\"\nnum_trials = 2\nnum_eccs = 3");
        let r = run_experiment(&ec).unwrap();
        assert!(r.iter().all(|m| m.crlb_ref.is_nan() && m.mse_h >= 0.0));
    }

    #[test]
    fn quasi_static_bound_reference() {
        let ec = config("num_trials = 3\nnum_eccs = 4");
        let r = run_experiment(&ec).unwrap();
        let c = crlb_static_offsets(&ec.array, &OffsetSet::joint_optimal()).unwrap();
        for m in &r {
            assert!((m.crlb_ref - c / m.ecc as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn trials_differ_but_are_reproducible() {
        let ec = config("num_trials = 2\nnum_eccs = 3");
        let a = run_trial(&ec, 0).unwrap();
        assert_eq!(a, run_trial(&ec, 0).unwrap());
        assert_ne!(a, run_trial(&ec, 1).unwrap());
    }
}
