//! Experiment configuration: a flat TOML file, optional command-line
//! overrides, and resolution into a validated [`ExperimentConfig`].

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use beamtrack_core::array_core::{ArrayConfig, PatternConfig};
use beamtrack_core::channel_sim::{AoaRegion, ScenarioConfig, ScenarioKind};
use beamtrack_core::signal_model::OffsetSet;
use beamtrack_core::trackers::{EkfState, StepSchedule};
use serde::Deserialize;

/// Configuration failure with a field-level message.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    /// The configuration file could not be read.
    #[error("cannot read config file {path}: {source}")]
    Io {
        /// File path.
        path: PathBuf,
        /// Underlying error.
        source: std::io::Error,
    },
    /// The file is not valid TOML or contains unknown keys.
    #[error("cannot parse config file {path}: {message}")]
    Parse {
        /// File path.
        path: PathBuf,
        /// Parser message.
        message: String,
    },
    /// A field has an invalid value.
    #[error("invalid value for `{field}`: {message}")]
    Field {
        /// Key name.
        field: &'static str,
        /// What is wrong.
        message: String,
    },
}

fn field_err(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field, message: message.into() }
}

/// Tracking algorithm under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackerKind {
    /// Joint gain/direction tracker with a diminishing step.
    JbctS,
    /// Direction-only tracker for Rayleigh gains.
    RbtDi(RbtMode),
    /// Joint tracker with a constant step for fast-varying channels.
    JbctDii,
    /// Codebook beam switching.
    BeamSwitch,
    /// Extended Kalman filter.
    Ekf,
}

/// Source of the gain variance used by the direction-only tracker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbtMode {
    /// The true equivalent gain variance.
    Perfect,
    /// Derived from the current direction estimate through the element pattern.
    Estimated,
}

impl TrackerKind {
    /// Parses a tracker name (`jbct-s`, `rbt-di`, `jbct-dii`, `beam-switch`, `ekf`).
    ///
    /// # Errors
    /// [`ConfigError::Field`] for unknown names.
    pub fn parse(name: &str, rbt_mode: RbtMode) -> Result<Self, ConfigError> {
        match normalize(name).as_str() {
            "jbcts" | "jbct" => Ok(Self::JbctS),
            "rbtdi" | "rbt" => Ok(Self::RbtDi(rbt_mode)),
            "jbctdii" => Ok(Self::JbctDii),
            "beamswitch" => Ok(Self::BeamSwitch),
            "ekf" => Ok(Self::Ekf),
            _ => Err(field_err("tracker", format!("unknown tracker `{name}` (expected jbct-s, rbt-di, jbct-dii, beam-switch or ekf)"))),
        }
    }

    /// Canonical name.
    #[must_use]
    pub fn name(&self) -> &'static str {
        match self {
            Self::JbctS => "jbct-s",
            Self::RbtDi(_) => "rbt-di",
            Self::JbctDii => "jbct-dii",
            Self::BeamSwitch => "beam-switch",
            Self::Ekf => "ekf",
        }
    }
}

fn normalize(s: &str) -> String {
    s.chars().filter(|c| c.is_ascii_alphanumeric()).map(|c| c.to_ascii_lowercase()).collect()
}

/// Resolves a named offset preset.
///
/// `tableII`/`joint-optimal` select the quasi-static optimum and
/// `tableIII`/`direction-optimal` the Rayleigh-gain optimum.
///
/// # Errors
/// [`ConfigError::Field`] for unknown names.
pub fn offset_preset(name: &str) -> Result<OffsetSet, ConfigError> {
    match normalize(name).as_str() {
        "tableii" | "jointoptimal" | "joint" => Ok(OffsetSet::joint_optimal()),
        "tableiii" | "directionoptimal" | "direction" => Ok(OffsetSet::direction_optimal()),
        _ => Err(field_err("offsets", format!("unknown preset `{name}` (expected tableII, tableIII, joint-optimal or direction-optimal)"))),
    }
}

/// Parses `--offsets`: a preset name or `a,b;c,d;e,f`.
///
/// # Errors
/// [`ConfigError::Field`] for malformed input.
pub fn parse_offsets_arg(s: &str) -> Result<OffsetSpec, ConfigError> {
    if !s.contains(';') {
        return Ok(OffsetSpec::Preset(s.to_owned()));
    }
    let pairs: Vec<&str> = s.split(';').collect();
    if pairs.len() != 3 {
        return Err(field_err("offsets", "expected three `a,b` pairs separated by `;`"));
    }
    let mut out = [[0.0; 2]; 3];
    for (slot, pair) in out.iter_mut().zip(pairs) {
        let v: Vec<f64> = pair
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| field_err("offsets", format!("`{t}`: {e}"))))
            .collect::<Result<_, _>>()?;
        if v.len() != 2 {
            return Err(field_err("offsets", format!("`{pair}` is not an `a,b` pair")));
        }
        *slot = [v[0], v[1]];
    }
    Ok(OffsetSpec::Explicit(out))
}

/// Offsets as written in a config file: a preset name or three pairs.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OffsetSpec {
    /// Named preset.
    Preset(String),
    /// Explicit `[[Δ₁₁, Δ₁₂], [Δ₂₁, Δ₂₂], [Δ₃₁, Δ₃₂]]`.
    Explicit([[f64; 2]; 3]),
}

/// Raw flat configuration file; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// `quasi-static`, `dynamic-i` or `dynamic-ii`.
    pub scenario: Option<String>,
    /// Rician K-factor in dB (quasi-static).
    pub rician_k_db: Option<f64>,
    /// Gain variance (dynamic I).
    pub sigma_beta_c_sq: Option<f64>,
    /// Gauss–Markov correlation (dynamic II).
    pub rho: Option<f64>,
    /// Random-walk angular standard deviation in degrees (dynamic II).
    pub delta_a_deg: Option<f64>,
    /// `central`, `edge` or `custom`.
    pub region: Option<String>,
    /// Elevation range in degrees (custom region and dynamic-II walk).
    pub theta_range_deg: Option<[f64; 2]>,
    /// Azimuth range in degrees (custom region and dynamic-II walk).
    pub phi_range_deg: Option<[f64; 2]>,
    /// Element vertical 3 dB beamwidth in degrees.
    pub theta_3db_deg: Option<f64>,
    /// Element horizontal 3 dB beamwidth in degrees.
    pub phi_3db_deg: Option<f64>,
    /// Element maximum attenuation in dB.
    pub eta_max_db: Option<f64>,
    /// Elements along the first axis.
    pub m: Option<usize>,
    /// Elements along the second axis.
    pub n: Option<usize>,
    /// First-axis spacing in wavelengths.
    pub d1: Option<f64>,
    /// Second-axis spacing in wavelengths.
    pub d2: Option<f64>,
    /// Noise variance.
    pub noise_var: Option<f64>,
    /// Transmit SNR in dB.
    pub snr_db: Option<f64>,
    /// Tracker name.
    pub tracker: Option<String>,
    /// `perfect` or `estimated` (direction-only tracker).
    pub rbt_mode: Option<String>,
    /// Offset preset or explicit offsets.
    pub offsets: Option<OffsetSpec>,
    /// `diminishing` or `constant`.
    pub schedule: Option<String>,
    /// Diminishing-step numerator.
    pub epsilon: Option<f64>,
    /// Diminishing-step index shift.
    pub k0: Option<f64>,
    /// Constant step size.
    pub step: Option<f64>,
    /// Monte-Carlo trials.
    pub num_trials: Option<usize>,
    /// Tracking cycles per trial.
    pub num_eccs: Option<usize>,
    /// Base seed.
    pub seed: Option<u64>,
    /// Record every this many cycles.
    pub record_every: Option<usize>,
    /// Half-width of the initial direction error.
    pub init_halfwidth: Option<f64>,
    /// Beam-switching codebook oversampling per axis.
    pub beam_switch_oversampling: Option<f64>,
    /// EKF process noise per axis per cycle.
    pub ekf_q: Option<f64>,
    /// EKF prior variance per axis.
    pub ekf_prior_var: Option<f64>,
}

impl ConfigFile {
    /// Parses TOML text; `path` is only used in error messages.
    ///
    /// # Errors
    /// [`ConfigError::Parse`] for syntax errors and unknown keys.
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.to_owned(), message: e.to_string() })
    }

    /// Reads and parses a file.
    ///
    /// # Errors
    /// [`ConfigError::Io`] or [`ConfigError::Parse`].
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::from_toml(&text, path)
    }
}

/// Parameters of the two baseline trackers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineParams {
    /// Beam-switching codebook oversampling (default 2).
    pub oversampling: f64,
    /// EKF process noise (default `1e-4`).
    pub ekf_q: f64,
    /// EKF prior variance per axis (default `1/12`, the variance of the
    /// default initial error).
    pub ekf_prior_var: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self { oversampling: 2.0, ekf_q: EkfState::DEFAULT_Q, ekf_prior_var: 1.0 / 12.0 }
    }
}

/// Fully resolved experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    /// Channel scenario.
    pub scenario: ScenarioConfig,
    /// Array geometry with the pilot amplitude set from `snr_db`.
    pub array: ArrayConfig,
    /// Tracker under test.
    pub tracker: TrackerKind,
    /// Exploration offsets (the EKF and beam switching use their own probes).
    pub offsets: OffsetSet,
    /// Step-size rule.
    pub schedule: StepSchedule,
    /// Monte-Carlo trials.
    pub num_trials: usize,
    /// Tracking cycles per trial.
    pub num_eccs: usize,
    /// Base seed.
    pub seed: u64,
    /// Transmit SNR in dB.
    pub snr_db: f64,
    /// Record every this many cycles (the last cycle is always recorded).
    pub record_every: usize,
    /// Half-width of the uniform initial direction error.
    pub init_halfwidth: f64,
    /// Baseline tracker parameters.
    pub baselines: BaselineParams,
}

/// Default offsets for a tracker: the joint optimum for the joint trackers
/// and the direction optimum for the direction-only tracker.
#[must_use]
pub fn default_offsets(tracker: TrackerKind) -> OffsetSet {
    match tracker {
        TrackerKind::RbtDi(_) => OffsetSet::direction_optimal(),
        _ => OffsetSet::joint_optimal(),
    }
}

/// Default step rule: `1/k` for the quasi-static tracker, `1/(k+1)` for the
/// direction-only tracker and a constant `0.7` for the fast-varying tracker.
#[must_use]
pub fn default_schedule(tracker: TrackerKind) -> StepSchedule {
    match tracker {
        TrackerKind::RbtDi(_) => StepSchedule::Diminishing { epsilon: 1.0, k0: 1.0 },
        TrackerKind::JbctDii => StepSchedule::Constant { b: 0.7 },
        _ => StepSchedule::HARMONIC,
    }
}

impl ExperimentConfig {
    /// Experiment with default tracker parameters, 100 trials of 1000
    /// cycles, seed 0, recording every cycle.
    ///
    /// The array's pilot amplitude is set from `snr_db`.
    #[must_use]
    pub fn new(scenario: ScenarioConfig, array: ArrayConfig, tracker: TrackerKind, snr_db: f64) -> Self {
        Self {
            scenario,
            array: array.with_snr_db(snr_db),
            tracker,
            offsets: default_offsets(tracker),
            schedule: default_schedule(tracker),
            num_trials: 100,
            num_eccs: 1000,
            seed: 0,
            snr_db,
            record_every: 1,
            init_halfwidth: 0.5,
            baselines: BaselineParams::default(),
        }
    }

    /// Checks every field.
    ///
    /// # Errors
    /// [`ConfigError::Field`] naming the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario.validate().map_err(|e| field_err("scenario", e.to_string()))?;
        self.array.validate().map_err(|e| field_err("array", e.to_string()))?;
        OffsetSet::new(self.offsets.deltas).map_err(|e| field_err("offsets", e.to_string()))?;
        self.schedule.validate().map_err(|e| field_err("schedule", e.to_string()))?;
        if self.num_trials < 1 {
            return Err(field_err("num_trials", "must be at least 1"));
        }
        if self.num_eccs < 1 {
            return Err(field_err("num_eccs", "must be at least 1"));
        }
        if self.record_every < 1 {
            return Err(field_err("record_every", "must be at least 1"));
        }
        if !self.snr_db.is_finite() {
            return Err(field_err("snr_db", "must be finite"));
        }
        if !(self.init_halfwidth >= 0.0 && self.init_halfwidth < 1.0) {
            return Err(field_err("init_halfwidth", format!("must lie in [0, 1), got {}", self.init_halfwidth)));
        }
        let b = &self.baselines;
        if !(b.oversampling.is_finite() && b.oversampling > 0.0) {
            return Err(field_err("beam_switch_oversampling", "must be positive"));
        }
        if !(b.ekf_q.is_finite() && b.ekf_q >= 0.0) {
            return Err(field_err("ekf_q", "must be non-negative"));
        }
        if !(b.ekf_prior_var.is_finite() && b.ekf_prior_var > 0.0) {
            return Err(field_err("ekf_prior_var", "must be positive"));
        }
        if matches!(self.tracker, TrackerKind::RbtDi(_)) && !matches!(self.scenario.kind, ScenarioKind::DynamicI { .. }) {
            return Err(field_err("tracker", "rbt-di requires the dynamic-i scenario"));
        }
        Ok(())
    }
}

fn deg(v: f64) -> f64 {
    v * PI / 180.0
}

fn deg_range(r: [f64; 2]) -> [f64; 2] {
    [deg(r[0]), deg(r[1])]
}

impl ConfigFile {
    /// Applies defaults and validates.
    ///
    /// # Errors
    /// [`ConfigError::Field`] naming the offending key.
    pub fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        let theta_range = self.theta_range_deg.map(deg_range);
        let phi_range = self.phi_range_deg.map(deg_range);
        let region = match normalize(self.region.as_deref().unwrap_or("central")).as_str() {
            "central" => AoaRegion::Central,
            "edge" => AoaRegion::Edge,
            "custom" => AoaRegion::Custom {
                theta: theta_range.ok_or_else(|| field_err("theta_range_deg", "required for the custom region"))?,
                phi: phi_range.ok_or_else(|| field_err("phi_range_deg", "required for the custom region"))?,
            },
            other => return Err(field_err("region", format!("unknown region `{other}` (expected central, edge or custom)"))),
        };
        let kind = match normalize(self.scenario.as_deref().unwrap_or("quasi-static")).as_str() {
            "quasistatic" | "qs" => ScenarioKind::QuasiStatic { rician_k_db: self.rician_k_db.unwrap_or(15.0) },
            "dynamici" | "di" => ScenarioKind::DynamicI { sigma_beta_c_sq: self.sigma_beta_c_sq.unwrap_or(1.0) },
            "dynamicii" | "dii" => {
                let (t, p) = region.ranges();
                ScenarioKind::DynamicII {
                    rho: self.rho.unwrap_or(0.995),
                    delta_a: deg(self.delta_a_deg.ok_or_else(|| field_err("delta_a_deg", "required for the dynamic-ii scenario"))?),
                    theta_range: theta_range.unwrap_or(t),
                    phi_range: phi_range.unwrap_or(p),
                }
            }
            other => return Err(field_err("scenario", format!("unknown scenario `{other}` (expected quasi-static, dynamic-i or dynamic-ii)"))),
        };
        let dp = PatternConfig::default();
        let pattern = PatternConfig {
            theta_3db: self.theta_3db_deg.map_or(dp.theta_3db, deg),
            phi_3db: self.phi_3db_deg.map_or(dp.phi_3db, deg),
            eta_max_db: self.eta_max_db.unwrap_or(dp.eta_max_db),
        };
        let scenario = ScenarioConfig { kind, aoa_region: region, pattern };

        let mut array = ArrayConfig::half_wavelength(1, 1);
        array.m = self.m.unwrap_or(8);
        array.n = self.n.unwrap_or(8);
        array.d1 = self.d1.unwrap_or(0.5);
        array.d2 = self.d2.unwrap_or(0.5);
        array.noise_var = self.noise_var.unwrap_or(1.0);
        array.validate().map_err(|e| field_err("array", e.to_string()))?;

        let rbt_mode = match normalize(self.rbt_mode.as_deref().unwrap_or("perfect")).as_str() {
            "perfect" => RbtMode::Perfect,
            "estimated" => RbtMode::Estimated,
            other => return Err(field_err("rbt_mode", format!("unknown mode `{other}` (expected perfect or estimated)"))),
        };
        let tracker = TrackerKind::parse(self.tracker.as_deref().unwrap_or("jbct-s"), rbt_mode)?;
        let snr_db = self.snr_db.unwrap_or(0.0);
        let mut ec = ExperimentConfig::new(scenario, array, tracker, snr_db);

        if let Some(spec) = &self.offsets {
            ec.offsets = match spec {
                OffsetSpec::Preset(name) => offset_preset(name)?,
                OffsetSpec::Explicit(d) => OffsetSet::new(*d).map_err(|e| field_err("offsets", e.to_string()))?,
            };
        }
        let schedule_name = self.schedule.as_deref().map(normalize);
        ec.schedule = match schedule_name.as_deref() {
            None => match (ec.schedule, self.epsilon, self.k0, self.step) {
                (StepSchedule::Diminishing { epsilon, k0 }, e, k, _) => {
                    StepSchedule::Diminishing { epsilon: e.unwrap_or(epsilon), k0: k.unwrap_or(k0) }
                }
                (StepSchedule::Constant { b }, _, _, s) => StepSchedule::Constant { b: s.unwrap_or(b) },
            },
            Some("diminishing") => {
                // Unset parameters keep the tracker's default rule when it is diminishing.
                let (epsilon, k0) = match ec.schedule {
                    StepSchedule::Diminishing { epsilon, k0 } => (epsilon, k0),
                    StepSchedule::Constant { .. } => (1.0, 0.0),
                };
                StepSchedule::Diminishing { epsilon: self.epsilon.unwrap_or(epsilon), k0: self.k0.unwrap_or(k0) }
            }
            Some("constant") => StepSchedule::Constant { b: self.step.unwrap_or(0.7) },
            Some(other) => return Err(field_err("schedule", format!("unknown schedule `{other}` (expected diminishing or constant)"))),
        };
        ec.num_trials = self.num_trials.unwrap_or(ec.num_trials);
        ec.num_eccs = self.num_eccs.unwrap_or(ec.num_eccs);
        ec.seed = self.seed.unwrap_or(ec.seed);
        ec.record_every = self.record_every.unwrap_or(ec.record_every);
        ec.init_halfwidth = self.init_halfwidth.unwrap_or(ec.init_halfwidth);
        let b = &mut ec.baselines;
        b.oversampling = self.beam_switch_oversampling.unwrap_or(b.oversampling);
        b.ekf_q = self.ekf_q.unwrap_or(b.ekf_q);
        b.ekf_prior_var = self.ekf_prior_var.unwrap_or(b.ekf_prior_var);
        ec.validate()?;
        Ok(ec)
    }
}
