//! Joint migration rows and calibration against independent checks.

mod common;

use ccp_risk::migration::{
    calibrate_daily, compound, simulate_path_with, DependenceType, JointMigrationModel, JointState,
    MatrixFamily, MigrationPattern,
};
use ccp_risk::rng::{substream, StreamDomain};

#[test]
fn joint_rows_marginalize_exactly_on_small_models() {
    common::check_exhaustive_marginals(11);
}

#[test]
fn sampled_transitions_match_marginals_at_study_scale() {
    common::check_sampled_marginals(12, 100_000);
}

fn study_model(dep: DependenceType) -> JointMigrationModel {
    let pattern = MigrationPattern::standard(8);
    let m = MatrixFamily::default().build(&pattern).unwrap();
    JointMigrationModel::homogeneous(8, m, dep, pattern).unwrap()
}

#[test]
fn paths_never_leave_default_and_jump_dependence_clusters_defaults() {
    let paths = 100_000;
    let horizon = 30;
    let initial = JointState::uniform(8, 7);
    let mut freq = Vec::new();
    for dep in [DependenceType::TypeI, DependenceType::TypeII] {
        let model = study_model(dep);
        let mut multiple = 0u64;
        for p in 0..paths {
            let mut rng = substream(3, StreamDomain::Test, p);
            let path = simulate_path_with(&model, &initial, horizon, &mut rng).unwrap();
            for (i, t) in path.default_times.iter().enumerate() {
                if let Some(t) = *t {
                    assert!(path.states[t..].iter().all(|s| s.0[i] == 8));
                    assert!(path.states[..t].iter().all(|s| s.0[i] != 8));
                }
            }
            multiple += u64::from(path.default_times.iter().filter(|t| t.is_some()).count() >= 2);
        }
        freq.push(multiple as f64 / paths as f64);
    }
    let (p1, p2) = (freq[0], freq[1]);
    let se = ((p1 * (1.0 - p1) + p2 * (1.0 - p2)) / paths as f64).sqrt();
    assert!(p2 >= p1 - 3.0 * se, "type II {p2} vs type I {p1}");
}

#[test]
fn calibration_recovers_daily_matrices() {
    let mut rng = common::rng(13);
    for trial in 0..50 {
        let size = 4 + trial % 5;
        let pattern = if trial % 2 == 0 {
            MigrationPattern::standard(size)
        } else {
            common::dense_pattern(size)
        };
        let daily = common::random_matrix(&mut rng, &pattern, 0.01);
        let annual = compound(&daily, 252).unwrap();
        let cal = calibrate_daily(&annual, 252, &pattern).unwrap();
        let err = cal.matrix.sup_distance(&daily);
        assert!(err <= 1e-8, "trial {trial}: sup error {err}");
        assert!(cal.reconstruction_error <= 1e-8);
    }
}
