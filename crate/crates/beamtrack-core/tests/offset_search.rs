//! End-to-end checks of the offset search against the reference offset sets.

use beamtrack_core::offset_optimizer::{
    canonicalize, optimize_offsets, robustness_sweep, Objective, SearchConfig, SweepKind,
};
use beamtrack_core::signal_model::OffsetSet;

fn check_against_reference(objective: Objective) {
    let reference = objective.evaluate(&objective.reference_offsets()).unwrap();
    let r = optimize_offsets(&SearchConfig::new(objective)).unwrap();
    assert!(r.crlb_value <= reference * 1.001, "{} vs {reference}", r.crlb_value);
    assert!((r.crlb_value - reference).abs() / reference < 1e-3);
    assert!(r.offsets.deltas.iter().flatten().all(|c| c.abs() < 0.95));
    assert_eq!(r.crlb_value, objective.evaluate(&r.offsets).unwrap());
    let c = canonicalize(&r.offsets);
    assert!((objective.evaluate(&c).unwrap() - r.crlb_value).abs() <= 1e-10 * r.crlb_value);
}

#[test]
fn static_search_matches_joint_optimal_value() {
    check_against_reference(Objective::StaticAsymptotic);
}

#[test]
fn di_search_matches_direction_optimal_value() {
    check_against_reference(Objective::DiAsymptotic { snr_beta_db: 0.0 });
}

#[test]
fn joint_optimal_offsets_are_robust_from_eight_elements() {
    let rows = robustness_sweep(&OffsetSet::joint_optimal(), &[(4, 4), (8, 8), (16, 16), (32, 32)], SweepKind::Static, 0).unwrap();
    for row in &rows[1..] {
        assert!(row.rel_gap < 1e-3, "{row:?}");
        assert!(row.rel_gap >= 0.0);
    }
    assert!(rows[0].rel_gap > rows[1].rel_gap, "{rows:?}");
}

#[test]
fn direction_optimal_offsets_are_robust_at_eight_elements() {
    for snr_beta_db in [0.0, 10.0, 20.0] {
        let rows = robustness_sweep(&OffsetSet::direction_optimal(), &[(8, 8)], SweepKind::Di { snr_beta_db }, 0).unwrap();
        assert!(rows[0].rel_gap < 1e-3, "{rows:?}");
    }
}
