//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line is always printed. The
//! process exits non-zero only on a panic, or on any FAIL when
//! `BEAMTRACK_ACCEPTANCE_STRICT=1` is set.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use beamtrack::config::{BaselineParams, ExperimentConfig, RbtMode, TrackerKind};
use beamtrack::experiment::run_experiment;
use beamtrack_core::array_core::{ArrayConfig, Dpv, PatternConfig};
use beamtrack_core::channel_sim::{evolve, init_channel, rician_parts, AoaRegion, ScenarioConfig, ScenarioKind};
use beamtrack_core::estimation_theory::{
    crlb_di_asymptotic, crlb_di_offsets, crlb_static, crlb_static_asymptotic, crlb_static_offsets, fisher_di,
    fisher_di_limit, fisher_static, fisher_static_limit, DiModel,
};
use beamtrack_core::offset_optimizer::{optimize_offsets, robustness_sweep, Objective, SearchConfig, SweepKind};
use beamtrack_core::random::{complex_normal, uniform};
use beamtrack_core::signal_model::{
    add_noise, build_ebm, noiseless_mean, noiseless_mean_at, observation_jacobian, probe_directions,
    recover_from_noiseless, ChannelParams, DpvBox, Ebm, OffsetSet, Observation,
};
use beamtrack_core::trackers::{
    count_ops, mean_field, naive_direction, naive_direction_di, FastUpdateCache, GainKnowledge, JbctState, OpCounter,
    RbtCache, RbtState, StepKind, StepSchedule, Tracker,
};
use beamtrack_core::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Quasi-static optimum as published (reference oracle).
const JOINT_REFERENCE: [[f64; 2]; 3] = [[-0.0963, 0.5098], [-0.2906, -0.2906], [0.5098, -0.0963]];
/// Rayleigh-gain optimum at 0 dB as published (reference oracle).
const DIRECTION_REFERENCE: [[f64; 2]; 3] = [[0.5486, 0.2451], [-0.5462, 0.2482], [-0.0012, -0.6837]];

struct Outcome {
    passed: bool,
    detail: String,
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cfg8() -> ArrayConfig {
    ArrayConfig::half_wavelength(8, 8)
}

fn random_psi(r: &mut ChaCha8Rng) -> ChannelParams {
    ChannelParams::new(
        C64::from_polar(uniform(r, 0.3, 2.0), uniform(r, 0.0, 2.0 * PI)),
        Dpv::new(uniform(r, -3.0, 3.0), uniform(r, -3.0, 3.0)),
    )
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed < Duration::from_secs(limit_s)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
fn sym_eigenvalues<const K: usize>(mut a: [[f64; K]; K]) -> [f64; K] {
    for _ in 0..100 {
        let off: f64 = (0..K).flat_map(|i| (0..K).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let diag: f64 = (0..K).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-34 * diag {
            break;
        }
        for p in 0..K {
            for q in p + 1..K {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..K {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..K {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: [f64; K] = std::array::from_fn(|i| a[i][i]);
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

fn frob_rel<const K: usize>(est: &[[f64; K]; K], truth: &[[f64; K]; K]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..K {
        for j in 0..K {
            num += (est[i][j] - truth[i][j]).powi(2);
            den += truth[i][j].powi(2);
        }
    }
    (num / den).sqrt()
}

fn frob_diff<const K: usize>(a: &[[f64; K]; K], b: &[[f64; K]; K], scale: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..K {
        for j in 0..K {
            s += (a[i][j] / scale - b[i][j]).powi(2);
        }
    }
    s.sqrt()
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ")
}

fn run_cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_beamtrack")).args(args).output().expect("spawn beamtrack");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn cli_value(stdout: &str, key: &str) -> Option<f64> {
    stdout.lines().find_map(|l| l.strip_prefix(key)).and_then(|v| v.trim().parse().ok())
}

fn offsets_reproduction(args: &[&str], objective: Objective, reference: [[f64; 2]; 3], limit_s: u64) -> Outcome {
    let t = Instant::now();
    let (code, stdout) = run_cli(args);
    let elapsed = t.elapsed();
    let reference_value = objective.evaluate(&OffsetSet::new(reference).unwrap()).unwrap();
    match (code, cli_value(&stdout, "crlb_value:")) {
        (0, Some(v)) => {
            let r = rel(v, reference_value);
            Outcome {
                passed: r < 1e-3 && within(elapsed, limit_s),
                detail: format!("found {v:.7}, reference {reference_value:.7}, rel. diff {r:.2e} (< 1e-3); {elapsed:.1?} (< {limit_s} s)"),
            }
        }
        _ => Outcome { passed: false, detail: format!("CLI exit {code}, output: {stdout}") },
    }
}

fn criterion_1() -> Outcome {
    offsets_reproduction(&["offsets", "--objective", "static-asymptotic"], Objective::StaticAsymptotic, JOINT_REFERENCE, 120)
}

fn criterion_2() -> Outcome {
    offsets_reproduction(
        &["offsets", "--objective", "di-asymptotic", "--snr-beta-db", "0"],
        Objective::DiAsymptotic { snr_beta_db: 0.0 },
        DIRECTION_REFERENCE,
        180,
    )
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let mut gaps = Vec::new();
    let joint = OffsetSet::new(JOINT_REFERENCE).unwrap();
    let direction = OffsetSet::new(DIRECTION_REFERENCE).unwrap();
    gaps.push(("static", robustness_sweep(&joint, &[(8, 8)], SweepKind::Static, 0).unwrap()[0].rel_gap));
    for (name, snr) in [("rayleigh 0 dB", 0.0), ("rayleigh 10 dB", 10.0), ("rayleigh 20 dB", 20.0)] {
        gaps.push((name, robustness_sweep(&direction, &[(8, 8)], SweepKind::Di { snr_beta_db: snr }, 0).unwrap()[0].rel_gap));
    }
    let elapsed = t.elapsed();
    let passed = gaps.iter().all(|g| g.1 < 1e-3 && g.1 >= 0.0) && within(elapsed, 300);
    let list = gaps.iter().map(|(n, g)| format!("{n} {g:.2e}")).collect::<Vec<_>>().join(", ");
    Outcome { passed, detail: format!("M=N=8 relative gaps: {list} (< 1e-3); {elapsed:.1?} (< 300 s)") }
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let c = cfg8();
    let mut r = rng(4);
    let offs = OffsetSet::new(JOINT_REFERENCE).unwrap();
    let at = |psi: ChannelParams| crlb_static(&c, &psi, &build_ebm(&c, psi.x, &offs)).unwrap();
    let base = at(ChannelParams::new(C64::new(1.0, 0.0), Dpv::default()));
    let mut worst_static: f64 = 0.0;
    for _ in 0..10 {
        let beta = C64::from_polar(uniform(&mut r, 0.1, 3.0), uniform(&mut r, 0.0, 2.0 * PI));
        worst_static = worst_static.max(rel(at(ChannelParams::new(beta, Dpv::default())), base));
        let x = Dpv::new(uniform(&mut r, -3.5, 3.5), uniform(&mut r, -3.5, 3.5));
        worst_static = worst_static.max(rel(at(ChannelParams::new(C64::new(1.0, 0.0), x)), base));
    }
    let model = DiModel { sigma_beta_sq: 1.0 };
    let doffs = OffsetSet::new(DIRECTION_REFERENCE).unwrap();
    let fd = |x: Dpv| fisher_di(&c, x, &model, &build_ebm(&c, x, &doffs)).m;
    let f0 = fd(Dpv::default());
    let mut worst_di: f64 = 0.0;
    for _ in 0..10 {
        let x = Dpv::new(uniform(&mut r, -3.5, 3.5), uniform(&mut r, -3.5, 3.5));
        worst_di = worst_di.max(frob_rel(&fd(x), &f0));
    }
    let elapsed = t.elapsed();
    Outcome {
        passed: worst_static < 1e-9 && worst_di < 1e-9 && within(elapsed, 10),
        detail: format!("static bound max rel. change {worst_static:.1e}, Rayleigh Fisher {worst_di:.1e} (< 1e-9); {elapsed:.1?} (< 10 s)"),
    }
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let c = cfg8();
    let mut r = rng(5);
    let offs = OffsetSet::new(JOINT_REFERENCE).unwrap();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..100 {
        let psi = random_psi(&mut r);
        let center = psi.x.offset([uniform(&mut r, -0.3, 0.3), uniform(&mut r, -0.3, 0.3)]);
        let ebm = build_ebm(&c, center, &offs);
        let y = noiseless_mean(&c, &psi, &ebm);
        match recover_from_noiseless(&c, &ebm, &y, &DpvBox::around(center, 0.5)) {
            Ok(got) => {
                for (a, b) in got.to_array().iter().zip(psi.to_array()) {
                    worst = worst.max((a - b).abs());
                }
            }
            Err(_) => failures += 1,
        }
    }
    let mut min_gap = f64::INFINITY;
    for _ in 0..100 {
        let psi = random_psi(&mut r);
        let center = psi.x.offset([uniform(&mut r, -0.3, 0.3), uniform(&mut r, -0.3, 0.3)]);
        let jac = observation_jacobian(&c, &psi, &build_ebm(&c, center, &offs), 2);
        let mut jtj = [[0.0; 4]; 4];
        for row in &jac {
            for i in 0..4 {
                for j in 0..4 {
                    jtj[i][j] += row[i] * row[j];
                }
            }
        }
        let ev = sym_eigenvalues(jtj);
        // Singular values are square roots of the Gram eigenvalues.
        let gap = ev[2].max(0.0).sqrt() / ev[3].abs().sqrt().max(1e-300);
        min_gap = min_gap.min(gap);
    }
    let elapsed = t.elapsed();
    Outcome {
        passed: failures == 0 && worst < 1e-9 && min_gap > 1e6 && within(elapsed, 30),
        detail: format!(
            "3-probe recovery: {failures} failures, max error {worst:.1e} (< 1e-9); 2-probe s3/s4 min {min_gap:.1e} (> 1e6); {elapsed:.1?} (< 30 s)"
        ),
    }
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let mut r = rng(6);
    let (mut f_max, mut jac_max): (f64, f64) = (0.0, 0.0);
    for i in 0..50 {
        let size = [4, 6, 8, 12, 16][i % 5];
        let c = ArrayConfig::half_wavelength(size, size + i % 3).with_snr_db(uniform(&mut r, -5.0, 20.0));
        let offs = if i % 2 == 0 { OffsetSet::new(JOINT_REFERENCE).unwrap() } else { OffsetSet::new(DIRECTION_REFERENCE).unwrap() };
        let truth = random_psi(&mut r);
        let f0 = mean_field(&truth, &truth, &c, &build_ebm(&c, truth.x, &offs)).unwrap();
        f_max = f_max.max(f0.iter().map(|v| v * v).sum::<f64>().sqrt());
        let h = 1e-6;
        for col in 0..4 {
            let (mut plus, mut minus) = (truth.to_array(), truth.to_array());
            plus[col] += h;
            minus[col] -= h;
            let (pp, pm) = (ChannelParams::from_array(plus), ChannelParams::from_array(minus));
            let fp = mean_field(&pp, &truth, &c, &build_ebm(&c, pp.x, &offs)).unwrap();
            let fm = mean_field(&pm, &truth, &c, &build_ebm(&c, pm.x, &offs)).unwrap();
            for row in 0..4 {
                let target = if row == col { -1.0 } else { 0.0 };
                jac_max = jac_max.max(((fp[row] - fm[row]) / (2.0 * h) - target).abs());
            }
        }
    }
    let elapsed = t.elapsed();
    Outcome {
        passed: f_max < 1e-12 && jac_max < 1e-5 && within(elapsed, 30),
        detail: format!("50 configurations: |f(psi)| max {f_max:.1e} (< 1e-12), Jacobian entry error max {jac_max:.1e} (< 1e-5); {elapsed:.1?} (< 30 s)"),
    }
}

/// Gaussian log-density of the quasi-static model, up to a constant.
fn log_pdf_static(c: &ArrayConfig, psi: &ChannelParams, dirs: &[Dpv; 3], y: &Observation) -> f64 {
    let mu = noiseless_mean_at(c, psi, dirs);
    -(0..3).map(|i| (y.y[i] - mu[i]).norm_sqr()).sum::<f64>() / c.noise_var
}

/// Log-density of `y ~ CN(0, κ g gᴴ + σ² I)` by the rank-one inverse and
/// determinant lemmas, up to a constant.
fn log_pdf_rayleigh(c: &ArrayConfig, sigma_beta_sq: f64, x: Dpv, dirs: &[Dpv; 3], y: &Observation) -> f64 {
    let g = noiseless_mean_at(c, &ChannelParams::new(C64::new(1.0, 0.0), x), dirs).map(|v| v / c.pilot_amp);
    let kappa = c.pilot_amp * c.pilot_amp * sigma_beta_sq;
    let s2 = c.noise_var;
    let gg: f64 = g.iter().map(|v| v.norm_sqr()).sum();
    let gy: C64 = (0..3).map(|i| g[i].conj() * y.y[i]).sum();
    let yy: f64 = y.y.iter().map(|v| v.norm_sqr()).sum();
    let quad = (yy - kappa * gy.norm_sqr() / (s2 + kappa * gg)) / s2;
    -(s2 + kappa * gg).ln() - quad
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let c = cfg8();
    let draws = 200_000;
    let h = 1e-6;
    let psi = ChannelParams::new(C64::new(0.9, -0.4), Dpv::new(0.3, -0.6));
    let center = psi.x.offset([0.1, -0.15]);

    let offs = OffsetSet::new(JOINT_REFERENCE).unwrap();
    let dirs = probe_directions(center, &offs);
    let mean = noiseless_mean_at(&c, &psi, &dirs);
    let mut r = rng(7);
    let mut acc = [[0.0; 4]; 4];
    for _ in 0..draws {
        let y = add_noise(&c, mean, &mut r);
        let s: [f64; 4] = std::array::from_fn(|p| {
            let (mut a, mut b) = (psi.to_array(), psi.to_array());
            a[p] += h;
            b[p] -= h;
            (log_pdf_static(&c, &ChannelParams::from_array(a), &dirs, &y) - log_pdf_static(&c, &ChannelParams::from_array(b), &dirs, &y)) / (2.0 * h)
        });
        for i in 0..4 {
            for j in 0..4 {
                acc[i][j] += s[i] * s[j] / draws as f64;
            }
        }
    }
    let err_s = frob_rel(&acc, &fisher_static(&c, &psi, &build_ebm(&c, center, &offs)).m);

    let model = DiModel { sigma_beta_sq: 1.0 };
    let doffs = OffsetSet::new(DIRECTION_REFERENCE).unwrap();
    let ddirs = probe_directions(center, &doffs);
    let mut acc2 = [[0.0; 2]; 2];
    for _ in 0..draws {
        let beta = complex_normal(&mut r, model.sigma_beta_sq);
        let y = add_noise(&c, noiseless_mean_at(&c, &ChannelParams::new(beta, psi.x), &ddirs), &mut r);
        let s: [f64; 2] = std::array::from_fn(|p| {
            let mut d = [0.0; 2];
            d[p] = h;
            let lp = log_pdf_rayleigh(&c, model.sigma_beta_sq, psi.x.offset(d), &ddirs, &y);
            let lm = log_pdf_rayleigh(&c, model.sigma_beta_sq, psi.x.offset([-d[0], -d[1]]), &ddirs, &y);
            (lp - lm) / (2.0 * h)
        });
        for i in 0..2 {
            for j in 0..2 {
                acc2[i][j] += s[i] * s[j] / draws as f64;
            }
        }
    }
    let err_d = frob_rel(&acc2, &fisher_di(&c, psi.x, &model, &build_ebm(&c, center, &doffs)).m);
    let elapsed = t.elapsed();
    Outcome {
        passed: err_s < 0.03 && err_d < 0.03 && within(elapsed, 120),
        detail: format!("{draws} draws: static rel. Frobenius error {err_s:.4}, Rayleigh {err_d:.4} (< 0.03); {elapsed:.1?} (< 120 s)"),
    }
}

fn criterion_8() -> Outcome {
    let t = Instant::now();
    let joint = OffsetSet::new(JOINT_REFERENCE).unwrap();
    let direction = OffsetSet::new(DIRECTION_REFERENCE).unwrap();
    let beta = C64::new(1.0, 0.0);
    let limit_s = fisher_static_limit(&joint, 1.0, 1.0, beta);
    let limit_d = fisher_di_limit(&direction, 1.0);
    let model = DiModel { sigma_beta_sq: 1.0 };
    let (mut ds, mut dd) = (Vec::new(), Vec::new());
    let (mut gap_s, mut gap_d) = (0.0, 0.0);
    for size in [8usize, 16, 32, 64] {
        let c = ArrayConfig::half_wavelength(size, size);
        let mn = (size * size) as f64;
        let x = Dpv::default();
        let fs = fisher_static(&c, &ChannelParams::new(beta, x), &build_ebm(&c, x, &joint)).m;
        ds.push(frob_diff(&fs, &limit_s, mn));
        let fd = fisher_di(&c, x, &model, &build_ebm(&c, x, &direction)).m;
        dd.push(frob_diff(&fd, &limit_d, mn));
        if size == 64 {
            let a = crlb_static_asymptotic(&joint, 1.0, 1.0, beta).unwrap();
            gap_s = rel(crlb_static_offsets(&c, &joint).unwrap() * mn, a);
            let a = crlb_di_asymptotic(&direction, 1.0).unwrap();
            gap_d = rel(crlb_di_offsets(&c, &model, &direction).unwrap() * mn, a);
        }
    }
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let elapsed = t.elapsed();
    Outcome {
        passed: decreasing(&ds) && decreasing(&dd) && gap_s < 0.01 && gap_d < 0.01 && within(elapsed, 60),
        detail: format!(
            "static distances [{}], Rayleigh [{}] (strictly decreasing); M=N=64 bound gaps {gap_s:.2e}, {gap_d:.2e} (< 1e-2); {elapsed:.1?} (< 60 s)",
            sci(&ds),
            sci(&dd)
        ),
    }
}

fn central_narrow_region() -> AoaRegion {
    // Element gain within a few hundredths of a dB of its 0 dB peak.
    let w = PI / 120.0;
    AoaRegion::Custom { theta: [-w, w], phi: [PI / 2.0 - w, PI / 2.0 + w] }
}

fn criterion_9() -> Outcome {
    let t = Instant::now();
    let scenario = ScenarioConfig {
        kind: ScenarioKind::QuasiStatic { rician_k_db: 15.0 },
        aoa_region: AoaRegion::Central,
        pattern: PatternConfig::default(),
    };
    let mut ec = ExperimentConfig::new(scenario, cfg8(), TrackerKind::JbctS, 0.0);
    ec.num_trials = 500;
    ec.num_eccs = 2000;
    ec.record_every = 2000;
    ec.seed = 9;
    let jbct = run_experiment(&ec).unwrap();
    let c_min = optimize_offsets(&SearchConfig::new(Objective::StaticFinite { m: 8, n: 8 })).unwrap().crlb_value / 64.0;
    let last = jbct.last().unwrap();
    let ratio_s = last.ecc as f64 * last.mse_h / c_min;
    let elapsed_s = t.elapsed();

    let t = Instant::now();
    let scenario = ScenarioConfig {
        kind: ScenarioKind::DynamicI { sigma_beta_c_sq: 1.0 },
        aoa_region: central_narrow_region(),
        pattern: PatternConfig::default(),
    };
    let mut ec = ExperimentConfig::new(scenario, cfg8(), TrackerKind::RbtDi(RbtMode::Perfect), 0.0);
    ec.num_trials = 500;
    ec.num_eccs = 2000;
    ec.record_every = 2000;
    ec.seed = 9;
    let rbt = run_experiment(&ec).unwrap();
    let last = rbt.last().unwrap();
    // Trial average of the per-trial minimum bound |η|²-scaled to SNR_β.
    let c_di = last.crlb_ref * last.ecc as f64;
    let ratio_d = last.ecc as f64 * last.mse_x / c_di;
    let elapsed_d = t.elapsed();
    let ok = |r: f64| (0.85..=1.25).contains(&r);
    Outcome {
        passed: ok(ratio_s) && ok(ratio_d) && within(elapsed_s, 600) && within(elapsed_d, 600),
        detail: format!(
            "joint tracker k*mse_h/C_S^min = {ratio_s:.3} ({elapsed_s:.1?}); direction tracker k*mse_x/C_DI^min = {ratio_d:.3} ({elapsed_d:.1?}); target [0.85, 1.25], < 600 s each"
        ),
    }
}

fn criterion_10() -> Outcome {
    let t = Instant::now();
    let c = cfg8();
    let counts = [count_ops(StepKind::JbctStatic), count_ops(StepKind::JbctDii), count_ops(StepKind::Rbt)];
    let mut r = rng(10);
    // Instrumented counts across consecutive cycles of live trackers.
    let truth = random_psi(&mut r);
    let mut per_cycle = Vec::new();
    for schedule in [StepSchedule::HARMONIC, StepSchedule::Constant { b: 0.7 }] {
        let mut st = JbctState::new(&c, OffsetSet::joint_optimal(), schedule, truth).unwrap();
        for _ in 0..20 {
            let y = add_noise(&c, noiseless_mean(&c, &truth, &build_ebm(&c, st.psi_hat.x, &st.offsets)), &mut r);
            st.step(&c, &y).unwrap();
            per_cycle.push((45, st.ops_last_ecc()));
        }
    }
    let knowledge = GainKnowledge::Perfect { sigma_beta_sq: 1.0 };
    let mut rb = RbtState::new(&c, OffsetSet::direction_optimal(), StepSchedule::HARMONIC, knowledge, truth.x).unwrap();
    for _ in 0..20 {
        let y = Observation { y: std::array::from_fn(|_| complex_normal(&mut r, 5.0)) };
        rb.step(&c, &y).unwrap();
        per_cycle.push((28, rb.ops_last_ecc()));
    }
    let counts_ok = counts == [45, 45, 28] && per_cycle.iter().all(|(e, g)| e == g);

    let offs = OffsetSet::joint_optimal();
    let doffs = OffsetSet::direction_optimal();
    let model = DiModel { sigma_beta_sq: 1.3 };
    let cache = FastUpdateCache::build(&c, &offs).unwrap();
    let rcache = RbtCache::build(&c, &doffs, &model).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let truth = random_psi(&mut r);
        let hat = ChannelParams::new(
            C64::from_polar(uniform(&mut r, 0.2, 2.0), uniform(&mut r, 0.0, 2.0 * PI)),
            truth.x.offset([uniform(&mut r, -0.5, 0.5), uniform(&mut r, -0.5, 0.5)]),
        );
        let ebm: Ebm = build_ebm(&c, hat.x, &offs);
        let y = add_noise(&c, noiseless_mean(&c, &truth, &ebm), &mut r);
        let naive = naive_direction(&c, &hat, &ebm, &y).unwrap();
        let fast = cache.direction(hat.beta, &y, &mut OpCounter::new()).unwrap();
        for i in 0..4 {
            worst = worst.max((fast[i] - naive[i]).abs() / (1.0 + naive[i].abs()));
        }
        let debm = build_ebm(&c, hat.x, &doffs);
        let y = add_noise(&c, noiseless_mean(&c, &truth, &debm), &mut r);
        let naive = naive_direction_di(&c, hat.x, &model, &debm, &y).unwrap();
        let fast = rcache.direction(&y, &mut OpCounter::new());
        for i in 0..2 {
            worst = worst.max((fast[i] - naive[i]).abs() / (1.0 + naive[i].abs()));
        }
    }
    let elapsed = t.elapsed();
    Outcome {
        passed: counts_ok && worst < 1e-10 && within(elapsed, 10),
        detail: format!(
            "audited counts {counts:?} (expected [45, 45, 28]), per-cycle counts constant: {}; fast/naive max rel. difference {worst:.1e} (< 1e-10); {elapsed:.1?} (< 10 s)",
            per_cycle.iter().all(|(e, g)| e == g)
        ),
    }
}

fn criterion_11() -> Outcome {
    let t = Instant::now();
    let scenario = ScenarioConfig {
        kind: ScenarioKind::DynamicII {
            rho: 0.995,
            delta_a: 0.3 * PI / 180.0,
            theta_range: [-PI / 6.0, PI / 6.0],
            phi_range: [PI / 3.0, 2.0 * PI / 3.0],
        },
        aoa_region: AoaRegion::Central,
        pattern: PatternConfig::default(),
    };
    let mut averages = Vec::new();
    for tracker in [TrackerKind::JbctDii, TrackerKind::BeamSwitch, TrackerKind::Ekf] {
        let mut ec = ExperimentConfig::new(scenario, cfg8(), tracker, 0.0);
        ec.num_trials = 200;
        ec.num_eccs = 500;
        ec.seed = 11;
        ec.baselines = BaselineParams::default();
        let records = run_experiment(&ec).unwrap();
        averages.push(records.iter().map(|m| m.mse_h).sum::<f64>() / records.len() as f64);
    }
    let elapsed = t.elapsed();
    Outcome {
        passed: averages[0] < averages[1] && averages[0] < averages[2] && within(elapsed, 300),
        detail: format!(
            "time-averaged mse_h: joint tracker {:.4}, beam switching {:.4}, EKF {:.4} (joint must be lowest); {elapsed:.1?} (< 300 s)",
            averages[0], averages[1], averages[2]
        ),
    }
}

fn criterion_12() -> Outcome {
    let t = Instant::now();
    let n = 100_000;
    let c = cfg8();
    let mut r = rng(12);

    let k_db = 15.0;
    let (mut los, mut diffuse) = (0.0, 0.0);
    for _ in 0..n {
        let (l, d) = rician_parts(k_db, &mut r);
        los += l.norm_sqr();
        diffuse += d.norm_sqr();
    }
    let k_err = rel(los / diffuse, 10f64.powf(k_db / 10.0));

    let sigma = 2.5;
    let sc = ScenarioConfig {
        kind: ScenarioKind::DynamicI { sigma_beta_c_sq: sigma },
        aoa_region: AoaRegion::Central,
        pattern: PatternConfig::default(),
    };
    let mut state = init_channel(&sc, &c, &mut r);
    let mut power = 0.0;
    for _ in 0..n {
        state = evolve(&state, &sc, &c, &mut r);
        power += state.beta_c.norm_sqr();
    }
    let ray_err = rel(power / n as f64, sigma);

    // Independent chains: a single ρ = 0.995 chain of 10⁵ steps holds only a
    // few hundred effectively independent samples.
    let rho = 0.995;
    let sc = ScenarioConfig {
        kind: ScenarioKind::DynamicII { rho, delta_a: 1e-3, theta_range: [-0.5, 0.5], phi_range: [1.0, 2.0] },
        aoa_region: AoaRegion::Central,
        pattern: PatternConfig::default(),
    };
    let (mut p0, mut p1, mut cross) = (0.0, 0.0, C64::new(0.0, 0.0));
    for _ in 0..n {
        let mut s = init_channel(&sc, &c, &mut r);
        for _ in 0..20 {
            s = evolve(&s, &sc, &c, &mut r);
        }
        let next = evolve(&s, &sc, &c, &mut r);
        p0 += s.beta_c.norm_sqr();
        p1 += next.beta_c.norm_sqr();
        cross += next.beta_c * s.beta_c.conj();
    }
    let var = p0 / n as f64;
    let corr = cross.re / (p0 * p1).sqrt();
    let var_err = rel(var, 1.0);
    let corr_err = rel(corr, rho);
    let elapsed = t.elapsed();
    Outcome {
        passed: [k_err, ray_err, var_err, corr_err].iter().all(|e| *e < 0.03) && within(elapsed, 30),
        detail: format!(
            "rel. errors: Rician K {k_err:.4}, Rayleigh variance {ray_err:.4}, Gauss-Markov variance {var_err:.4}, lag-1 correlation {corr_err:.5} (corr {corr:.5}) (< 0.03); {elapsed:.1?} (< 30 s)"
        ),
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("joint-optimal offsets reproduction", criterion_1),
        ("direction-optimal offsets reproduction", criterion_2),
        ("finite-size robustness of optimal offsets", criterion_3),
        ("bound invariances", criterion_4),
        ("three-probe identifiability", criterion_5),
        ("mean-field fixed point", criterion_6),
        ("Fisher matrices vs Monte-Carlo score covariance", criterion_7),
        ("asymptotic consistency", criterion_8),
        ("convergence to the minimum bound", criterion_9),
        ("online operation counts", criterion_10),
        ("fast-varying channel ordering", criterion_11),
        ("channel-model moments", criterion_12),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let label = format!("criterion {:>2}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str()) || name.contains(f.as_str())) {
            continue;
        }
        let o = run();
        if !o.passed {
            failed += 1;
        }
        println!("{} {label} ({name}): {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {failed} criteria failed");
    if failed > 0 && std::env::var("BEAMTRACK_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
