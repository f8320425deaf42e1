//! Sequential simulation of the joint rating chain.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{JointMigrationModel, JointState, MigrationError, Result};
use crate::rng::{substream, StreamDomain};

/// Joint states at steps `0..=horizon` and each member's default step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MigrationPath {
    pub states: Vec<JointState>,
    /// First step at which the member sits in the default state; `None` if it
    /// survives the horizon.
    pub default_times: Vec<Option<usize>>,
}

impl MigrationPath {
    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }

    pub fn members(&self) -> usize {
        self.default_times.len()
    }
}

fn record_defaults(state: &JointState, k: u8, step: usize, times: &mut [Option<usize>]) {
    for (t, &r) in times.iter_mut().zip(&state.0) {
        if t.is_none() && r == k {
            *t = Some(step);
        }
    }
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(MigrationError::OutOfRange("horizon must be at least one step".into()));
    }
    Ok(())
}

/// Simulates `horizon` steps from `initial` drawing from `rng`.
pub fn simulate_path_with<R: Rng + ?Sized>(
    model: &JointMigrationModel,
    initial: &JointState,
    horizon: usize,
    rng: &mut R,
) -> Result<MigrationPath> {
    check_horizon(horizon)?;
    model.check_state(initial)?;
    let k = model.default_rating();
    let mut default_times = vec![None; model.members()];
    record_defaults(initial, k, 0, &mut default_times);
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(initial.clone());
    for step in 1..=horizon {
        let next = model.local_row(&states[step - 1])?.sample(rng);
        record_defaults(&next, k, step, &mut default_times);
        states.push(next);
    }
    Ok(MigrationPath {
        states,
        default_times,
    })
}

/// Simulates one path on the migration substream 0 of `seed`.
pub fn simulate_path(
    model: &JointMigrationModel,
    initial: &JointState,
    horizon: usize,
    seed: u64,
) -> Result<MigrationPath> {
    simulate_path_with(model, initial, horizon, &mut substream(seed, StreamDomain::Migration, 0))
}

/// Default steps only, without keeping the visited states.
pub fn simulate_default_times<R: Rng + ?Sized>(
    model: &JointMigrationModel,
    initial: &JointState,
    horizon: usize,
    rng: &mut R,
) -> Result<Vec<Option<usize>>> {
    check_horizon(horizon)?;
    model.check_state(initial)?;
    let k = model.default_rating();
    let mut times = vec![None; model.members()];
    record_defaults(initial, k, 0, &mut times);
    let mut state = initial.clone();
    for step in 1..=horizon {
        if times.iter().all(Option::is_some) {
            break;
        }
        state = model.local_row(&state)?.sample(rng);
        record_defaults(&state, k, step, &mut times);
    }
    Ok(times)
}

/// Whether `member` (0-based) is still alive at step `t`.
pub fn survival_indicator(path: &MigrationPath, member: usize, t: usize) -> Result<bool> {
    if member >= path.members() {
        return Err(MigrationError::OutOfRange(format!(
            "member {member} but path has {}",
            path.members()
        )));
    }
    if t > path.horizon() {
        return Err(MigrationError::OutOfRange(format!(
            "step {t} beyond horizon {}",
            path.horizon()
        )));
    }
    Ok(path.default_times[member].is_none_or(|tau| tau > t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::migration::{DependenceType, MatrixFamily, MigrationPattern};

    fn model(dep: DependenceType, members: usize) -> JointMigrationModel {
        let pattern = MigrationPattern::standard(8);
        let m = MatrixFamily::default().build(&pattern).unwrap();
        JointMigrationModel::homogeneous(members, m, dep, pattern).unwrap()
    }

    #[test]
    fn all_defaulted_path_is_constant() {
        let model = model(DependenceType::TypeII, 3);
        let start = JointState::uniform(3, 8);
        let path = simulate_path(&model, &start, 20, 1).unwrap();
        assert!(path.states.iter().all(|s| *s == start));
        assert_eq!(path.default_times, vec![Some(0); 3]);
        assert!(!survival_indicator(&path, 0, 0).unwrap());
    }

    #[test]
    fn identical_seeds_identical_paths() {
        let model = model(DependenceType::TypeIII, 4);
        let start = JointState::uniform(4, 7);
        let a = simulate_path(&model, &start, 50, 99).unwrap();
        let b = simulate_path(&model, &start, 50, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn survival_matches_states_and_defaults_absorb() {
        let model = model(DependenceType::TypeI, 4);
        let start = JointState::uniform(4, 7);
        for seed in 0..200 {
            let path = simulate_path(&model, &start, 30, seed).unwrap();
            for i in 0..4 {
                let mut seen_default = false;
                for t in 0..=30 {
                    let in_default = path.states[t].0[i] == 8;
                    assert!(!seen_default || in_default, "left the default state");
                    seen_default |= in_default;
                    assert_eq!(survival_indicator(&path, i, t).unwrap(), !in_default);
                }
            }
        }
    }

    #[test]
    fn out_of_range_lookups_fail() {
        let model = model(DependenceType::TypeI, 2);
        let path = simulate_path(&model, &JointState::uniform(2, 1), 5, 3).unwrap();
        assert!(survival_indicator(&path, 2, 0).is_err());
        assert!(survival_indicator(&path, 0, 6).is_err());
        assert!(survival_indicator(&path, 0, 0).unwrap());
        assert!(simulate_path(&model, &JointState::uniform(2, 1), 0, 3).is_err());
    }
}
