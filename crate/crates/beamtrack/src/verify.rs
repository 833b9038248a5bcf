//! Self-verification suites run by the `verify` subcommand: three-probe
//! identifiability, the mean-field fixed point, operation counts with
//! fast/naive agreement, and Monte-Carlo Fisher oracles.

use std::f64::consts::PI;

use beamtrack_core::array_core::{ArrayConfig, Dpv};
use beamtrack_core::estimation_theory::{fisher_di, fisher_static, score_di, score_static, DiModel};
use beamtrack_core::random::{complex_normal, uniform};
use beamtrack_core::signal_model::{
    add_noise, build_ebm, noiseless_mean, recover_from_noiseless, ChannelParams, DpvBox, OffsetSet, Observation,
};
use beamtrack_core::trackers::{
    count_ops, mean_field, naive_direction, naive_direction_di, FastUpdateCache, OpCounter, RbtCache, StepKind,
};
use beamtrack_core::C64;
use rand::Rng;

use crate::experiment::trial_rng;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    /// Short name.
    pub name: &'static str,
    /// Whether the check passed.
    pub passed: bool,
    /// Measured quantity and threshold.
    pub detail: String,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Sample sizes of the suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifySizes {
    /// Random channels for the identifiability and mean-field checks.
    pub configurations: usize,
    /// Random steps for the fast/naive comparison.
    pub steps: usize,
    /// Monte-Carlo draws for the Fisher oracles.
    pub draws: usize,
}

impl Default for VerifySizes {
    fn default() -> Self {
        Self { configurations: 20, steps: 100, draws: 50_000 }
    }
}

fn random_psi<R: Rng + ?Sized>(rng: &mut R) -> ChannelParams {
    ChannelParams::new(
        C64::from_polar(uniform(rng, 0.3, 2.0), uniform(rng, 0.0, 2.0 * PI)),
        Dpv::new(uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0)),
    )
}

/// Noiseless three-probe recovery of random channels from an estimate
/// within the main lobe.
#[must_use]
pub fn check_identifiability(cfg: &ArrayConfig, n: usize, seed: u64) -> Check {
    let mut rng = trial_rng(seed, 1);
    let offs = OffsetSet::joint_optimal();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..n {
        let psi = random_psi(&mut rng);
        let center = psi.x.offset([uniform(&mut rng, -0.3, 0.3), uniform(&mut rng, -0.3, 0.3)]);
        let ebm = build_ebm(cfg, center, &offs);
        let y = noiseless_mean(cfg, &psi, &ebm);
        match recover_from_noiseless(cfg, &ebm, &y, &DpvBox::around(center, 0.5)) {
            Ok(got) => {
                let err = got.to_array().iter().zip(psi.to_array()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                worst = worst.max(err);
            }
            Err(_) => failures += 1,
        }
    }
    Check {
        name: "identifiability",
        passed: failures == 0 && worst < 1e-9,
        detail: format!("{n} channels, {failures} solver failures, max error {worst:.3e} (< 1e-9)"),
    }
}

/// Mean field vanishes at the truth and has Jacobian `−I₄` there.
#[must_use]
pub fn check_mean_field(cfg: &ArrayConfig, n: usize, seed: u64) -> Check {
    let mut rng = trial_rng(seed, 2);
    let offs = OffsetSet::joint_optimal();
    let (mut f_max, mut jac_max): (f64, f64) = (0.0, 0.0);
    let mut failures = 0;
    for _ in 0..n {
        let truth = random_psi(&mut rng);
        let Ok(f0) = mean_field(&truth, &truth, cfg, &build_ebm(cfg, truth.x, &offs)) else {
            failures += 1;
            continue;
        };
        f_max = f_max.max(f0.iter().map(|v| v * v).sum::<f64>().sqrt());
        let h = 1e-6;
        for col in 0..4 {
            let (mut plus, mut minus) = (truth.to_array(), truth.to_array());
            plus[col] += h;
            minus[col] -= h;
            let (pp, pm) = (ChannelParams::from_array(plus), ChannelParams::from_array(minus));
            let (Ok(fp), Ok(fm)) = (
                mean_field(&pp, &truth, cfg, &build_ebm(cfg, pp.x, &offs)),
                mean_field(&pm, &truth, cfg, &build_ebm(cfg, pm.x, &offs)),
            ) else {
                failures += 1;
                continue;
            };
            for row in 0..4 {
                let target = if row == col { -1.0 } else { 0.0 };
                jac_max = jac_max.max(((fp[row] - fm[row]) / (2.0 * h) - target).abs());
            }
        }
    }
    Check {
        name: "mean-field",
        passed: failures == 0 && f_max < 1e-12 && jac_max < 1e-5,
        detail: format!("{n} channels, |f(psi)| max {f_max:.2e} (< 1e-12), Jacobian error max {jac_max:.2e} (< 1e-5)"),
    }
}

/// Audited operation counts and fast/naive agreement of both update paths.
#[must_use]
pub fn check_operation_counts(cfg: &ArrayConfig, n: usize, seed: u64) -> Check {
    let counts = [count_ops(StepKind::JbctStatic), count_ops(StepKind::JbctDii), count_ops(StepKind::Rbt)];
    let mut rng = trial_rng(seed, 3);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let offs = OffsetSet::joint_optimal();
    let di_offs = OffsetSet::direction_optimal();
    let model = DiModel { sigma_beta_sq: 1.0 };
    match (FastUpdateCache::build(cfg, &offs), RbtCache::build(cfg, &di_offs, &model)) {
        (Ok(cache), Ok(rbt)) => {
            for _ in 0..n {
                let truth = random_psi(&mut rng);
                let hat = ChannelParams::new(
                    C64::from_polar(uniform(&mut rng, 0.3, 2.0), uniform(&mut rng, 0.0, 2.0 * PI)),
                    truth.x.offset([uniform(&mut rng, -0.5, 0.5), uniform(&mut rng, -0.5, 0.5)]),
                );
                let ebm = build_ebm(cfg, hat.x, &offs);
                let y = add_noise(cfg, noiseless_mean(cfg, &truth, &ebm), &mut rng);
                match (naive_direction(cfg, &hat, &ebm, &y), cache.direction(hat.beta, &y, &mut OpCounter::new())) {
                    (Ok(a), Ok(b)) => {
                        for i in 0..4 {
                            worst = worst.max((a[i] - b[i]).abs() / (1.0 + a[i].abs()));
                        }
                    }
                    _ => failures += 1,
                }
                let di_ebm = build_ebm(cfg, hat.x, &di_offs);
                let y = Observation { y: std::array::from_fn(|_| complex_normal(&mut rng, 10.0)) };
                match naive_direction_di(cfg, hat.x, &model, &di_ebm, &y) {
                    Ok(a) => {
                        let b = rbt.direction(&y, &mut OpCounter::new());
                        for i in 0..2 {
                            worst = worst.max((a[i] - b[i]).abs() / (1.0 + a[i].abs()));
                        }
                    }
                    Err(_) => failures += 1,
                }
            }
        }
        _ => failures += 1,
    }
    Check {
        name: "operation-counts",
        passed: counts == [45, 45, 28] && failures == 0 && worst < 1e-10,
        detail: format!(
            "counts {counts:?} (expected [45, 45, 28]); fast/naive max rel. difference {worst:.2e} over {n} steps (< 1e-10)"
        ),
    }
}

fn frob_rel<const K: usize>(est: &[[f64; K]; K], truth: &[[f64; K]; K]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..K {
        for j in 0..K {
            num += (est[i][j] - truth[i][j]).powi(2);
            den += truth[i][j].powi(2);
        }
    }
    (num / den).sqrt()
}

/// Empirical score covariance of the quasi-static model at `psi`.
#[must_use]
pub fn static_score_covariance(cfg: &ArrayConfig, psi: &ChannelParams, center: Dpv, draws: usize, seed: u64) -> [[f64; 4]; 4] {
    let mut rng = trial_rng(seed, 4);
    let ebm = build_ebm(cfg, center, &OffsetSet::joint_optimal());
    let mean = noiseless_mean(cfg, psi, &ebm);
    let mut acc = [[0.0; 4]; 4];
    for _ in 0..draws {
        let s = score_static(cfg, psi, &ebm, &add_noise(cfg, mean, &mut rng));
        for i in 0..4 {
            for j in 0..4 {
                acc[i][j] += s[i] * s[j];
            }
        }
    }
    acc.map(|r| r.map(|v| v / draws as f64))
}

/// Empirical score covariance of the Rayleigh-gain model at `x`.
#[must_use]
pub fn di_score_covariance(cfg: &ArrayConfig, model: &DiModel, x: Dpv, center: Dpv, draws: usize, seed: u64) -> [[f64; 2]; 2] {
    let mut rng = trial_rng(seed, 5);
    let ebm = build_ebm(cfg, center, &OffsetSet::direction_optimal());
    let mut acc = [[0.0; 2]; 2];
    for _ in 0..draws {
        let beta = complex_normal(&mut rng, model.sigma_beta_sq);
        let y = add_noise(cfg, noiseless_mean(cfg, &ChannelParams::new(beta, x), &ebm), &mut rng);
        let s = score_di(cfg, x, model, &ebm, &y);
        for i in 0..2 {
            for j in 0..2 {
                acc[i][j] += s[i] * s[j];
            }
        }
    }
    acc.map(|r| r.map(|v| v / draws as f64))
}

/// Both Fisher matrices against Monte-Carlo score covariances.
#[must_use]
pub fn check_fisher_oracles(cfg: &ArrayConfig, draws: usize, seed: u64) -> Check {
    let psi = ChannelParams::new(C64::new(0.9, -0.4), Dpv::new(0.3, -0.6));
    let center = psi.x.offset([0.1, -0.15]);
    let emp = static_score_covariance(cfg, &psi, center, draws, seed);
    let fs = fisher_static(cfg, &psi, &build_ebm(cfg, center, &OffsetSet::joint_optimal())).m;
    let err_s = frob_rel(&emp, &fs);
    let model = DiModel { sigma_beta_sq: 1.0 };
    let emp = di_score_covariance(cfg, &model, psi.x, center, draws, seed);
    let fd = fisher_di(cfg, psi.x, &model, &build_ebm(cfg, center, &OffsetSet::direction_optimal())).m;
    let err_d = frob_rel(&emp, &fd);
    Check {
        name: "fisher-oracles",
        passed: err_s < 0.03 && err_d < 0.03,
        detail: format!("{draws} draws: static rel. Frobenius error {err_s:.4}, Rayleigh {err_d:.4} (< 0.03)"),
    }
}

/// Runs every suite on an 8×8 half-wavelength array at 0 dB.
#[must_use]
pub fn run_all(sizes: VerifySizes, seed: u64) -> Vec<Check> {
    let cfg = ArrayConfig::half_wavelength(8, 8);
    vec![
        check_identifiability(&cfg, sizes.configurations, seed),
        check_mean_field(&cfg, sizes.configurations, seed),
        check_operation_counts(&cfg, sizes.steps, seed),
        check_fisher_oracles(&cfg, sizes.draws, seed),
    ]
}
