//! Command-line interface: `track`, `crlb`, `offsets` and `verify`.
//!
//! Exit codes: 0 on success, 1 on configuration or usage errors, 2 when a
//! verification check fails.

use std::ffi::OsString;
use std::path::PathBuf;

use beamtrack_core::array_core::ArrayConfig;
use beamtrack_core::estimation_theory::{
    crlb_di_asymptotic, crlb_di_offsets, crlb_static_asymptotic, crlb_static_offsets, DiModel,
};
use beamtrack_core::offset_optimizer::{
    canonicalize, optimize_offsets, robustness_sweep, Objective, SearchConfig, SweepKind,
};
use beamtrack_core::signal_model::OffsetSet;
use beamtrack_core::C64;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{offset_preset, parse_offsets_arg, ConfigError, ConfigFile, OffsetSpec};
use crate::experiment::run_experiment;
use crate::output::{emit_csv, format_real, to_csv_string};
use crate::verify::{run_all, VerifySizes};

/// Successful run.
pub const EXIT_OK: i32 = 0;
/// Configuration or usage error.
pub const EXIT_CONFIG: i32 = 1;
/// A verification check failed.
pub const EXIT_VERIFY: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "beamtrack", version, about = "Beam and channel tracking simulator for planar phased arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte-Carlo tracking experiment and emit its metrics as CSV.
    Track(TrackArgs),
    /// Evaluate the single-cycle bounds for an offset set.
    Crlb(CrlbArgs),
    /// Search for optimal exploration offsets or sweep their finite-size gap.
    Offsets(OffsetsArgs),
    /// Run the built-in verification suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct TrackArgs {
    /// Flat TOML configuration file (defaults apply when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Number of tracking cycles.
    #[arg(long)]
    eccs: Option<usize>,
    /// Transmit SNR in dB.
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Scenario: quasi-static, dynamic-i or dynamic-ii.
    #[arg(long)]
    scenario: Option<String>,
    /// Tracker: jbct-s, rbt-di, jbct-dii, beam-switch or ekf.
    #[arg(long)]
    tracker: Option<String>,
    /// Offset preset (tableII, tableIII, joint-optimal, direction-optimal) or `a,b;c,d;e,f`.
    #[arg(long, allow_hyphen_values = true)]
    offsets: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundModel {
    /// Joint gain/direction bound (per element, times `MN`).
    Static,
    /// Direction bound under Rayleigh gains (times `MN`).
    Di,
}

#[derive(Debug, Args)]
struct CrlbArgs {
    /// Bound to evaluate.
    #[arg(long, value_enum, default_value = "static")]
    model: BoundModel,
    /// Offset preset or `a,b;c,d;e,f` (default: the model's optimal preset).
    #[arg(long, allow_hyphen_values = true)]
    offsets: Option<String>,
    /// Comma-separated array sizes `M=N` to evaluate.
    #[arg(long, default_value = "8,16,32,64", value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Transmit SNR in dB.
    #[arg(long = "snr-db", default_value_t = 0.0, allow_hyphen_values = true)]
    snr_db: f64,
    /// Gain variance in dB (Rayleigh model).
    #[arg(long = "sigma-beta-db", default_value_t = 0.0, allow_hyphen_values = true)]
    sigma_beta_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveName {
    StaticAsymptotic,
    StaticFinite,
    DiAsymptotic,
    DiFinite,
}

#[derive(Debug, Args)]
struct OffsetsArgs {
    /// Objective to minimize.
    #[arg(long, value_enum, default_value = "static-asymptotic")]
    objective: ObjectiveName,
    /// Array size `M` (finite objectives).
    #[arg(long, default_value_t = 8)]
    m: usize,
    /// Array size `N` (finite objectives).
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// `SNR_β` in dB (Rayleigh objectives).
    #[arg(long = "snr-beta-db", default_value_t = 0.0, allow_hyphen_values = true)]
    snr_beta_db: f64,
    /// Seed of the restart streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid points per axis.
    #[arg(long, default_value_t = 21)]
    grid: usize,
    /// Number of restarts.
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    /// Instead of searching, sweep the finite-size gap of these offsets
    /// (preset or `a,b;c,d;e,f`) over `--sizes`.
    #[arg(long, allow_hyphen_values = true)]
    sweep: Option<String>,
    /// Sizes `M=N` for `--sweep`.
    #[arg(long, default_value = "4,8,16,32", value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Write the result as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Seed of the verification draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte-Carlo draws for the Fisher oracles.
    #[arg(long, default_value_t = 200_000)]
    draws: usize,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Other(String),
}

fn resolve_offsets(spec: &str) -> Result<OffsetSet, ConfigError> {
    match parse_offsets_arg(spec)? {
        OffsetSpec::Preset(name) => offset_preset(&name),
        OffsetSpec::Explicit(d) => {
            OffsetSet::new(d).map_err(|e| ConfigError::Field { field: "offsets", message: e.to_string() })
        }
    }
}

fn fmt_offsets(o: &OffsetSet) -> String {
    o.deltas.iter().map(|d| format!("({:.4}, {:.4})", d[0], d[1])).collect::<Vec<_>>().join(", ")
}

fn track(a: TrackArgs) -> Result<i32, CliError> {
    let mut file = match &a.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    file.seed = a.seed.or(file.seed);
    file.num_trials = a.trials.or(file.num_trials);
    file.num_eccs = a.eccs.or(file.num_eccs);
    file.snr_db = a.snr_db.or(file.snr_db);
    file.scenario = a.scenario.or(file.scenario);
    file.tracker = a.tracker.or(file.tracker);
    if let Some(o) = &a.offsets {
        file.offsets = Some(parse_offsets_arg(o)?);
    }
    let ec = file.resolve()?;
    let records = run_experiment(&ec)?;
    match &a.out {
        Some(path) => {
            emit_csv(&records, path).map_err(|e| CliError::Other(e.to_string()))?;
            if let Some(last) = records.last() {
                eprintln!(
                    "{} trials x {} cycles ({}): final mse_h {}, mse_x {}, crlb_ref {} -> {}",
                    ec.num_trials,
                    ec.num_eccs,
                    ec.tracker.name(),
                    format_real(last.mse_h),
                    format_real(last.mse_x),
                    format_real(last.crlb_ref),
                    path.display()
                );
            }
        }
        None => print!("{}", to_csv_string(&records)),
    }
    Ok(EXIT_OK)
}

fn crlb(a: CrlbArgs) -> Result<i32, CliError> {
    let offsets = match (&a.offsets, a.model) {
        (Some(s), _) => resolve_offsets(s)?,
        (None, BoundModel::Static) => OffsetSet::joint_optimal(),
        (None, BoundModel::Di) => OffsetSet::direction_optimal(),
    };
    let to_err = |e: beamtrack_core::Error| CliError::Other(e.to_string());
    let snr = 10f64.powf(a.snr_db / 10.0);
    let sigma_beta_sq = 10f64.powf(a.sigma_beta_db / 10.0);
    println!("offsets: {}", fmt_offsets(&offsets));
    println!("size,crlb,mn_times_crlb");
    for &s in &a.sizes {
        if s == 0 {
            return Err(ConfigError::Field { field: "sizes", message: "sizes must be positive".into() }.into());
        }
        let cfg = ArrayConfig::half_wavelength(s, s).with_snr_db(a.snr_db);
        let c = match a.model {
            BoundModel::Static => crlb_static_offsets(&cfg, &offsets).map_err(to_err)?,
            BoundModel::Di => crlb_di_offsets(&cfg, &DiModel { sigma_beta_sq }, &offsets).map_err(to_err)?,
        };
        println!("{s},{},{}", format_real(c), format_real(c * (s * s) as f64));
    }
    let limit = match a.model {
        BoundModel::Static => crlb_static_asymptotic(&offsets, snr.sqrt(), 1.0, C64::new(1.0, 0.0)),
        BoundModel::Di => crlb_di_asymptotic(&offsets, snr * sigma_beta_sq),
    }
    .map_err(to_err)?;
    println!("inf,nan,{}", format_real(limit));
    Ok(EXIT_OK)
}

fn offsets_cmd(a: OffsetsArgs) -> Result<i32, CliError> {
    let (m, n, snr_beta_db) = (a.m, a.n, a.snr_beta_db);
    let objective = match a.objective {
        ObjectiveName::StaticAsymptotic => Objective::StaticAsymptotic,
        ObjectiveName::StaticFinite => Objective::StaticFinite { m, n },
        ObjectiveName::DiAsymptotic => Objective::DiAsymptotic { snr_beta_db },
        ObjectiveName::DiFinite => Objective::DiFinite { m, n, snr_beta_db },
    };
    let to_err = |e: beamtrack_core::Error| match e {
        beamtrack_core::Error::InvalidConfig(message) => CliError::Config(ConfigError::Field { field: "search", message }),
        other => CliError::Other(other.to_string()),
    };
    if let Some(spec) = &a.sweep {
        let offs = resolve_offsets(spec)?;
        let kind = match a.objective {
            ObjectiveName::StaticAsymptotic | ObjectiveName::StaticFinite => SweepKind::Static,
            ObjectiveName::DiAsymptotic | ObjectiveName::DiFinite => SweepKind::Di { snr_beta_db },
        };
        let sizes: Vec<(usize, usize)> = a.sizes.iter().map(|&s| (s, s)).collect();
        let rows = robustness_sweep(&offs, &sizes, kind, a.seed).map_err(to_err)?;
        let mut text = String::from("m,n,crlb_at_offsets,crlb_min,rel_gap\n");
        for r in &rows {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                r.size.0,
                r.size.1,
                format_real(r.crlb_at_offsets),
                format_real(r.crlb_min),
                format_real(r.rel_gap)
            ));
        }
        print!("{text}");
        if let Some(p) = &a.out {
            std::fs::write(p, &text).map_err(|e| CliError::Other(format!("{}: {e}", p.display())))?;
        }
        return Ok(EXIT_OK);
    }
    let mut sc = SearchConfig::new(objective);
    sc.seed = a.seed;
    sc.grid_points_per_axis = a.grid;
    sc.restarts = a.restarts;
    let started = std::time::Instant::now();
    let r = optimize_offsets(&sc).map_err(to_err)?;
    let canon = canonicalize(&r.offsets);
    let reference = objective.reference_offsets();
    let ref_value = objective.evaluate(&reference).map_err(to_err)?;
    println!("objective: {objective:?}");
    println!("offsets (canonical): {}", fmt_offsets(&canon));
    println!("crlb_value: {}", format_real(r.crlb_value));
    println!("reference offsets: {}", fmt_offsets(&reference));
    println!("reference value: {}", format_real(ref_value));
    println!("relative difference: {:.3e}", (r.crlb_value - ref_value) / ref_value);
    println!("restarts: {}, elapsed: {:.2?}", r.restarts_used, started.elapsed());
    if let Some(p) = &a.out {
        let d = canon.deltas;
        let text = format!(
            "d1x,d1y,d2x,d2y,d3x,d3y,crlb_value,restarts_used\n{},{},{},{},{},{},{},{}\n",
            format_real(d[0][0]),
            format_real(d[0][1]),
            format_real(d[1][0]),
            format_real(d[1][1]),
            format_real(d[2][0]),
            format_real(d[2][1]),
            format_real(r.crlb_value),
            r.restarts_used
        );
        std::fs::write(p, text).map_err(|e| CliError::Other(format!("{}: {e}", p.display())))?;
    }
    Ok(EXIT_OK)
}

fn verify(a: VerifyArgs) -> i32 {
    let sizes = VerifySizes { draws: a.draws, ..VerifySizes::default() };
    let checks = run_all(sizes, a.seed);
    for c in &checks {
        println!("{c}");
    }
    if checks.iter().all(|c| c.passed) {
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Track(a) => track(a),
        Command::Crlb(a) => crlb(a),
        Command::Offsets(a) => offsets_cmd(a),
        Command::Verify(a) => Ok(verify(a)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
