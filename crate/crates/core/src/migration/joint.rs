//! Marginal-constrained joint migration rows.
//!
//! For the current joint state the engine builds only the row it needs.
//! Each member's admissible moves are up one notch, stay, down one notch
//! (to a non-default rating) and default. Every construction below assigns
//! probabilities to joint outcomes so that summing over the other members
//! returns exactly that member's marginal row; the stay-put mass is the
//! remainder.
//!
//! * Type I: product of the marginal rows.
//! * Type II: a jump to default by any member blocks every other member's
//!   upgrade in the same step. Default indicators stay independent; a
//!   member's upgrade mass on "someone else jumps" is moved to staying, and
//!   its upgrade probability on "nobody else jumps" is scaled up by
//!   `1 / P(nobody else jumps)`, taken from its stay mass.
//! * Type III: either all surviving members make the same move, with weight
//!   the smallest marginal probability of that move across them, or a
//!   single member moves (with its residual marginal mass) while everyone
//!   else stays put.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{MigrationError, MigrationPattern, Rating, RatingTransitionMatrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DependenceType {
    #[serde(rename = "TYPE_I")]
    TypeI,
    #[serde(rename = "TYPE_II")]
    TypeII,
    #[serde(rename = "TYPE_III")]
    TypeIII,
}

impl std::fmt::Display for DependenceType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DependenceType::TypeI => "TYPE_I",
            DependenceType::TypeII => "TYPE_II",
            DependenceType::TypeIII => "TYPE_III",
        })
    }
}

impl std::str::FromStr for DependenceType {
    type Err = MigrationError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace(['-', ' '], "_").as_str() {
            "TYPE_I" | "I" | "1" => Ok(DependenceType::TypeI),
            "TYPE_II" | "II" | "2" => Ok(DependenceType::TypeII),
            "TYPE_III" | "III" | "3" => Ok(DependenceType::TypeIII),
            other => Err(MigrationError::InvalidModel(format!(
                "unknown dependence type '{other}'"
            ))),
        }
    }
}

/// Ratings of all members at one time.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct JointState(pub Vec<Rating>);

impl JointState {
    pub fn uniform(members: usize, rating: Rating) -> Self {
        Self(vec![rating; members])
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.0
    }

    pub fn members(&self) -> usize {
        self.0.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointMigrationModel {
    marginals: Vec<RatingTransitionMatrix>,
    dependence: DependenceType,
    pattern: MigrationPattern,
}

impl JointMigrationModel {
    pub fn new(
        marginals: Vec<RatingTransitionMatrix>,
        dependence: DependenceType,
        pattern: MigrationPattern,
    ) -> Result<Self> {
        if marginals.is_empty() {
            return Err(MigrationError::InvalidModel("at least one member is required".into()));
        }
        for (i, m) in marginals.iter().enumerate() {
            pattern.check(m).map_err(|e| {
                MigrationError::InvalidModel(format!("member {}: {e}", i + 1))
            })?;
        }
        Ok(Self {
            marginals,
            dependence,
            pattern,
        })
    }

    /// All `members` share `matrix`.
    pub fn homogeneous(
        members: usize,
        matrix: RatingTransitionMatrix,
        dependence: DependenceType,
        pattern: MigrationPattern,
    ) -> Result<Self> {
        Self::new(vec![matrix; members], dependence, pattern)
    }

    pub fn members(&self) -> usize {
        self.marginals.len()
    }

    pub fn size(&self) -> usize {
        self.pattern.size
    }

    pub fn default_rating(&self) -> Rating {
        self.pattern.size as Rating
    }

    pub fn dependence(&self) -> DependenceType {
        self.dependence
    }

    pub fn marginal(&self, member: usize) -> &RatingTransitionMatrix {
        &self.marginals[member]
    }

    pub fn pattern(&self) -> &MigrationPattern {
        &self.pattern
    }

    pub fn check_state(&self, state: &JointState) -> Result<()> {
        if state.members() != self.members() {
            return Err(MigrationError::InvalidState(format!(
                "state has {} members, model {}",
                state.members(),
                self.members()
            )));
        }
        let k = self.default_rating();
        if let Some((i, r)) = state.0.iter().enumerate().find(|(_, &r)| r == 0 || r > k) {
            return Err(MigrationError::InvalidState(format!(
                "member {} has rating {r} outside 1..={k}",
                i + 1
            )));
        }
        Ok(())
    }

    /// Builds the local row at `state` in the form used for sampling.
    pub fn local_row(&self, state: &JointState) -> Result<LocalRow> {
        self.check_state(state)?;
        let k = self.default_rating();
        let moves: Vec<MemberMoves> = state
            .0
            .iter()
            .zip(&self.marginals)
            .map(|(&r, m)| MemberMoves::from_row(r, m, k))
            .collect();
        match self.dependence {
            DependenceType::TypeI => Ok(LocalRow::Product { moves }),
            DependenceType::TypeII => self.jump_blocking_row(state, moves),
            DependenceType::TypeIII => comonotone_row(moves),
        }
    }

    fn jump_blocking_row(&self, state: &JointState, moves: Vec<MemberMoves>) -> Result<LocalRow> {
        let n = moves.len();
        // probability that member l does NOT trigger a jump to default
        let no_jump: Vec<f64> = moves
            .iter()
            .zip(&state.0)
            .map(|(mv, &r)| {
                if mv.frozen || !self.pattern.is_jump_trigger(r) {
                    1.0
                } else {
                    1.0 - mv.default
                }
            })
            .collect();
        let triggers: Vec<bool> = no_jump.iter().map(|&q| q < 1.0).collect();
        let mut prefix = vec![1.0; n + 1];
        for l in 0..n {
            prefix[l + 1] = prefix[l] * no_jump[l];
        }
        let mut suffix = vec![1.0; n + 1];
        for l in (0..n).rev() {
            suffix[l] = suffix[l + 1] * no_jump[l];
        }
        let mut blocked = Vec::with_capacity(n);
        let mut free = Vec::with_capacity(n);
        for (i, mv) in moves.iter().enumerate() {
            let quiet = prefix[i] * suffix[i + 1];
            let jump = 1.0 - quiet;
            blocked.push(ConditionalMoves {
                up: 0.0,
                stay: mv.stay + mv.up,
                down: mv.down,
            });
            if mv.up == 0.0 || jump == 0.0 {
                free.push(ConditionalMoves {
                    up: mv.up,
                    stay: mv.stay,
                    down: mv.down,
                });
                continue;
            }
            if quiet <= 0.0 {
                return Err(MigrationError::Infeasible {
                    member: i + 1,
                    direction: "up",
                    detail: "another member defaults surely, so no upgrade mass can be placed".into(),
                });
            }
            let up = mv.up / quiet;
            let stay = mv.stay - mv.up * jump / quiet;
            if stay < -1e-15 {
                return Err(MigrationError::Infeasible {
                    member: i + 1,
                    direction: "up",
                    detail: format!(
                        "stay mass {} cannot fund the upgrade shift {}",
                        mv.stay,
                        mv.up * jump / quiet
                    ),
                });
            }
            free.push(ConditionalMoves {
                up,
                stay: stay.max(0.0),
                down: mv.down,
            });
        }
        Ok(LocalRow::JumpBlocking {
            moves,
            triggers,
            blocked,
            free,
        })
    }
}

/// One member's marginal one-step probabilities from its current rating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemberMoves {
    pub rating: Rating,
    pub default_rating: Rating,
    pub up: f64,
    pub stay: f64,
    pub down: f64,
    pub default: f64,
    pub frozen: bool,
}

impl MemberMoves {
    fn from_row(rating: Rating, m: &RatingTransitionMatrix, k: Rating) -> Self {
        if rating == k {
            return Self {
                rating,
                default_rating: k,
                up: 0.0,
                stay: 1.0,
                down: 0.0,
                default: 0.0,
                frozen: true,
            };
        }
        let up = if rating > 1 { m.prob(rating, rating - 1) } else { 0.0 };
        let down = if rating + 1 < k { m.prob(rating, rating + 1) } else { 0.0 };
        let default = m.prob(rating, k);
        Self {
            rating,
            default_rating: k,
            up,
            stay: m.prob(rating, rating),
            down,
            default,
            frozen: false,
        }
    }

    fn target(&self, mv: Move) -> Rating {
        match mv {
            Move::Up => self.rating - 1,
            Move::Stay => self.rating,
            Move::Down => self.rating + 1,
            Move::Default => self.default_rating,
        }
    }

    fn prob(&self, mv: Move) -> f64 {
        match mv {
            Move::Up => self.up,
            Move::Stay => self.stay,
            Move::Down => self.down,
            Move::Default => self.default,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Move {
    Up,
    Stay,
    Down,
    Default,
}

impl Move {
    const ALL: [Move; 4] = [Move::Up, Move::Stay, Move::Down, Move::Default];
    const MIGRATIONS: [Move; 3] = [Move::Up, Move::Down, Move::Default];

    fn name(self) -> &'static str {
        match self {
            Move::Up => "up",
            Move::Stay => "stay",
            Move::Down => "down",
            Move::Default => "default",
        }
    }
}

/// Unconditional-scale probabilities of a member's non-default moves on one
/// side of the "another member jumps" event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalMoves {
    pub up: f64,
    pub stay: f64,
    pub down: f64,
}

impl ConditionalMoves {
    fn prob(&self, mv: Move) -> f64 {
        match mv {
            Move::Up => self.up,
            Move::Stay => self.stay,
            Move::Down => self.down,
            Move::Default => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComonotoneOutcome {
    AllStay,
    Common(Move),
    Single(usize, Move),
}

/// The one-step row of the joint chain at a given state.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalRow {
    Product {
        moves: Vec<MemberMoves>,
    },
    JumpBlocking {
        moves: Vec<MemberMoves>,
        triggers: Vec<bool>,
        /// member's non-default moves when some other member jumps
        blocked: Vec<ConditionalMoves>,
        /// member's non-default moves when no other member jumps
        free: Vec<ConditionalMoves>,
    },
    Comonotone {
        moves: Vec<MemberMoves>,
        outcomes: Vec<(ComonotoneOutcome, f64)>,
    },
}

fn comonotone_row(moves: Vec<MemberMoves>) -> Result<LocalRow> {
    let alive: Vec<usize> = (0..moves.len()).filter(|&i| !moves[i].frozen).collect();
    let mut outcomes = Vec::new();
    if alive.is_empty() {
        outcomes.push((ComonotoneOutcome::AllStay, 1.0));
        return Ok(LocalRow::Comonotone { moves, outcomes });
    }
    let mut moved = 0.0;
    let mut common = [0.0; 3];
    for (d, &mv) in Move::MIGRATIONS.iter().enumerate() {
        let w = alive
            .iter()
            .map(|&i| moves[i].prob(mv))
            .fold(f64::INFINITY, f64::min);
        common[d] = w;
        if w > 0.0 {
            outcomes.push((ComonotoneOutcome::Common(mv), w));
            moved += w;
        }
    }
    let mut largest: Option<(usize, Move, f64)> = None;
    for &i in &alive {
        for (d, &mv) in Move::MIGRATIONS.iter().enumerate() {
            let residual = moves[i].prob(mv) - common[d];
            if residual > 0.0 {
                outcomes.push((ComonotoneOutcome::Single(i, mv), residual));
                moved += residual;
                if largest.is_none_or(|(_, _, r)| residual > r) {
                    largest = Some((i, mv, residual));
                }
            }
        }
    }
    let stay = 1.0 - moved;
    if stay < -1e-12 {
        let (member, mv, _) = largest.expect("negative stay mass implies some residual");
        return Err(MigrationError::Infeasible {
            member: member + 1,
            direction: mv.name(),
            detail: format!(
                "common and single-member moves need mass {moved} > 1; all-stay would be {stay}"
            ),
        });
    }
    if stay > 0.0 {
        outcomes.insert(0, (ComonotoneOutcome::AllStay, stay));
    }
    Ok(LocalRow::Comonotone { moves, outcomes })
}

fn pick<const N: usize>(u: f64, probs: [f64; N]) -> usize {
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // u landed in the rounding gap above the last cumulative sum: take the
    // last category with positive mass
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

impl LocalRow {
    pub fn moves(&self) -> &[MemberMoves] {
        match self {
            LocalRow::Product { moves }
            | LocalRow::JumpBlocking { moves, .. }
            | LocalRow::Comonotone { moves, .. } => moves,
        }
    }

    /// Draws the next joint state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> JointState {
        match self {
            LocalRow::Product { moves } => JointState(
                moves
                    .iter()
                    .map(|mv| {
                        if mv.frozen {
                            return mv.rating;
                        }
                        let k = pick(rng.random::<f64>(), [mv.up, mv.stay, mv.down, mv.default]);
                        mv.target(Move::ALL[k])
                    })
                    .collect(),
            ),
            LocalRow::JumpBlocking {
                moves,
                triggers,
                blocked,
                free,
            } => {
                let uniforms: Vec<f64> = moves.iter().map(|_| rng.random::<f64>()).collect();
                let defaulted: Vec<bool> = moves
                    .iter()
                    .zip(&uniforms)
                    .map(|(mv, &u)| !mv.frozen && u < mv.default)
                    .collect();
                let jumps = defaulted
                    .iter()
                    .zip(triggers)
                    .filter(|(&d, &t)| d && t)
                    .count();
                JointState(
                    moves
                        .iter()
                        .enumerate()
                        .map(|(i, mv)| {
                            if mv.frozen {
                                return mv.rating;
                            }
                            if defaulted[i] {
                                return mv.default_rating;
                            }
                            let own = usize::from(triggers[i] && defaulted[i]);
                            let side = if jumps > own { &blocked[i] } else { &free[i] };
                            let scale = 1.0 - mv.default;
                            let u = (uniforms[i] - mv.default) / scale;
                            let k = pick(u, [side.up / scale, side.stay / scale, side.down / scale]);
                            mv.target(Move::ALL[k])
                        })
                        .collect(),
                )
            }
            LocalRow::Comonotone { moves, outcomes } => {
                let u = rng.random::<f64>();
                let mut acc = 0.0;
                let mut chosen = outcomes[0].0;
                for &(outcome, w) in outcomes {
                    acc += w;
                    chosen = outcome;
                    if u < acc {
                        break;
                    }
                }
                apply_comonotone(moves, chosen)
            }
        }
    }

    /// Full distribution of the next joint state.
    pub fn enumerate(&self) -> JointRow {
        let mut table: BTreeMap<JointState, f64> = BTreeMap::new();
        match self {
            LocalRow::Product { moves } => {
                for_each_combination(moves, |combo| {
                    let p: f64 = moves
                        .iter()
                        .zip(combo)
                        .map(|(mv, &m)| if mv.frozen { 1.0 } else { mv.prob(m) })
                        .product();
                    if p > 0.0 {
                        *table.entry(target_state(moves, combo)).or_default() += p;
                    }
                });
            }
            LocalRow::JumpBlocking {
                moves,
                triggers,
                blocked,
                free,
            } => {
                for_each_combination(moves, |combo| {
                    let jumps = combo
                        .iter()
                        .zip(triggers)
                        .filter(|(&m, &t)| m == Move::Default && t)
                        .count();
                    let p: f64 = moves
                        .iter()
                        .enumerate()
                        .map(|(i, mv)| {
                            if mv.frozen {
                                return 1.0;
                            }
                            let m = combo[i];
                            if m == Move::Default {
                                return mv.default;
                            }
                            let own = usize::from(triggers[i] && m == Move::Default);
                            if jumps > own {
                                blocked[i].prob(m)
                            } else {
                                free[i].prob(m)
                            }
                        })
                        .product();
                    if p > 0.0 {
                        *table.entry(target_state(moves, combo)).or_default() += p;
                    }
                });
            }
            LocalRow::Comonotone { moves, outcomes } => {
                for &(outcome, w) in outcomes {
                    *table.entry(apply_comonotone(moves, outcome)).or_default() += w;
                }
            }
        }
        JointRow {
            outcomes: table.into_iter().collect(),
        }
    }
}

fn apply_comonotone(moves: &[MemberMoves], outcome: ComonotoneOutcome) -> JointState {
    JointState(
        moves
            .iter()
            .enumerate()
            .map(|(i, mv)| match outcome {
                _ if mv.frozen => mv.rating,
                ComonotoneOutcome::AllStay => mv.rating,
                ComonotoneOutcome::Common(m) => mv.target(m),
                ComonotoneOutcome::Single(j, m) if j == i => mv.target(m),
                ComonotoneOutcome::Single(..) => mv.rating,
            })
            .collect(),
    )
}

fn target_state(moves: &[MemberMoves], combo: &[Move]) -> JointState {
    JointState(
        moves
            .iter()
            .zip(combo)
            .map(|(mv, &m)| if mv.frozen { mv.rating } else { mv.target(m) })
            .collect(),
    )
}

/// Visits every assignment of a move to each member (frozen members get
/// `Stay` only; moves with zero marginal mass are skipped).
fn for_each_combination(moves: &[MemberMoves], mut visit: impl FnMut(&[Move])) {
    let options: Vec<Vec<Move>> = moves
        .iter()
        .map(|mv| {
            if mv.frozen {
                vec![Move::Stay]
            } else {
                Move::ALL
                    .iter()
                    .copied()
                    .filter(|&m| m == Move::Stay || mv.prob(m) > 0.0)
                    .collect()
            }
        })
        .collect();
    let mut idx = vec![0usize; moves.len()];
    let mut combo: Vec<Move> = options.iter().map(|o| o[0]).collect();
    loop {
        visit(&combo);
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return;
            }
            idx[pos] += 1;
            if idx[pos] < options[pos].len() {
                combo[pos] = options[pos][idx[pos]];
                break;
            }
            idx[pos] = 0;
            combo[pos] = options[pos][0];
            pos += 1;
        }
    }
}

/// Distribution over next joint states.
#[derive(Debug, Clone, PartialEq)]
pub struct JointRow {
    pub outcomes: Vec<(JointState, f64)>,
}

impl JointRow {
    pub fn total_mass(&self) -> f64 {
        self.outcomes.iter().map(|(_, p)| p).sum()
    }

    /// One-step law of `member`'s rating, indexed by `rating - 1`.
    pub fn marginal(&self, member: usize, size: usize) -> Vec<f64> {
        let mut row = vec![0.0; size];
        for (state, p) in &self.outcomes {
            row[state.0[member] as usize - 1] += p;
        }
        row
    }

    pub fn prob_of(&self, state: &JointState) -> f64 {
        self.outcomes
            .iter()
            .find(|(s, _)| s == state)
            .map_or(0.0, |(_, p)| *p)
    }
}

/// The full joint row of `model` at `state`.
pub fn joint_transition_row(state: &JointState, model: &JointMigrationModel) -> Result<JointRow> {
    Ok(model.local_row(state)?.enumerate())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_state(stay: f64, up: f64, down: f64) -> RatingTransitionMatrix {
        // ratings 1, 2 and default 3; rating 2 may move up or default
        RatingTransitionMatrix::from_rows(vec![
            vec![1.0 - down, down, 0.0],
            vec![up, stay, 1.0 - stay - up],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap()
    }

    fn pattern3() -> MigrationPattern {
        MigrationPattern {
            size: 3,
            default_sources: vec![2],
            jump_triggers: vec![2],
        }
    }

    fn four_state_symmetric() -> (RatingTransitionMatrix, MigrationPattern) {
        let m = RatingTransitionMatrix::from_rows(vec![
            vec![0.95, 0.05, 0.0, 0.0],
            vec![0.05, 0.9, 0.05, 0.0],
            vec![0.0, 0.05, 0.9, 0.05],
            vec![0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        (m, MigrationPattern::standard(4))
    }

    #[test]
    fn type_one_is_product_measure() {
        let (m, pattern) = four_state_symmetric();
        let model = JointMigrationModel::homogeneous(2, m, DependenceType::TypeI, pattern).unwrap();
        let row = joint_transition_row(&JointState(vec![2, 2]), &model).unwrap();
        assert!((row.prob_of(&JointState(vec![2, 2])) - 0.81).abs() < 1e-15);
        assert!((row.prob_of(&JointState(vec![1, 2])) - 0.045).abs() < 1e-15);
        assert!((row.prob_of(&JointState(vec![3, 1])) - 0.0025).abs() < 1e-15);
        assert!((row.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn type_three_identical_rows_move_together() {
        let m = RatingTransitionMatrix::from_rows(vec![
            vec![0.9, 0.1, 0.0],
            vec![0.0, 0.9, 0.1],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let pattern = MigrationPattern {
            size: 3,
            default_sources: vec![2],
            jump_triggers: vec![2],
        };
        let model = JointMigrationModel::homogeneous(2, m, DependenceType::TypeIII, pattern).unwrap();
        let row = joint_transition_row(&JointState(vec![1, 1]), &model).unwrap();
        assert!((row.prob_of(&JointState(vec![2, 2])) - 0.1).abs() < 1e-15);
        assert!((row.prob_of(&JointState(vec![1, 1])) - 0.9).abs() < 1e-15);
        assert_eq!(row.prob_of(&JointState(vec![2, 1])), 0.0);
        assert_eq!(row.prob_of(&JointState(vec![1, 2])), 0.0);
    }

    #[test]
    fn type_two_blocks_upgrades_on_jumps() {
        let m = three_state(0.7, 0.2, 0.1);
        let model =
            JointMigrationModel::homogeneous(2, m.clone(), DependenceType::TypeII, pattern3()).unwrap();
        let row = joint_transition_row(&JointState(vec![2, 2]), &model).unwrap();
        // member 1 defaults while member 2 upgrades: forbidden
        assert_eq!(row.prob_of(&JointState(vec![3, 1])), 0.0);
        assert_eq!(row.prob_of(&JointState(vec![1, 3])), 0.0);
        for i in 0..2 {
            let marg = row.marginal(i, 3);
            for (a, b) in marg.iter().zip(m.row(2)) {
                assert!((a - b).abs() < 1e-15, "{marg:?}");
            }
        }
    }

    #[test]
    fn type_two_infeasible_when_stay_mass_too_small() {
        // up 0.5, stay 0.01, default 0.49: shifting upgrade mass needs far more than 0.01
        let m = three_state(0.01, 0.5, 0.1);
        let model = JointMigrationModel::homogeneous(2, m, DependenceType::TypeII, pattern3()).unwrap();
        let err = joint_transition_row(&JointState(vec![2, 2]), &model).unwrap_err();
        assert!(matches!(err, MigrationError::Infeasible { direction: "up", .. }));
    }

    #[test]
    fn type_three_infeasible_when_single_moves_overflow() {
        let a = three_state(0.0, 0.9, 0.0);
        let b = three_state(0.0, 0.1, 0.0);
        let model = JointMigrationModel::new(vec![a, b], DependenceType::TypeIII, pattern3()).unwrap();
        let err = joint_transition_row(&JointState(vec![2, 2]), &model).unwrap_err();
        assert!(matches!(err, MigrationError::Infeasible { .. }), "{err}");
    }

    #[test]
    fn defaulted_members_are_frozen() {
        let (m, pattern) = four_state_symmetric();
        for dep in [DependenceType::TypeI, DependenceType::TypeII, DependenceType::TypeIII] {
            let model = JointMigrationModel::homogeneous(3, m.clone(), dep, pattern.clone()).unwrap();
            let row = joint_transition_row(&JointState(vec![4, 4, 4]), &model).unwrap();
            assert_eq!(row.outcomes, vec![(JointState(vec![4, 4, 4]), 1.0)]);
            let row = joint_transition_row(&JointState(vec![4, 3, 1]), &model).unwrap();
            assert!(row.outcomes.iter().all(|(s, _)| s.0[0] == 4));
        }
    }

    #[test]
    fn rejects_bad_states_and_patterns() {
        let (m, pattern) = four_state_symmetric();
        let model = JointMigrationModel::homogeneous(2, m, DependenceType::TypeI, pattern).unwrap();
        assert!(model.local_row(&JointState(vec![1])).is_err());
        assert!(model.local_row(&JointState(vec![0, 1])).is_err());
        assert!(model.local_row(&JointState(vec![5, 1])).is_err());
        let dense = RatingTransitionMatrix::from_rows(vec![
            vec![0.5, 0.25, 0.25, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert!(JointMigrationModel::homogeneous(
            2,
            dense,
            DependenceType::TypeI,
            MigrationPattern::standard(4)
        )
        .is_err());
    }

    #[test]
    fn parses_dependence_names() {
        assert_eq!("type_ii".parse::<DependenceType>().unwrap(), DependenceType::TypeII);
        assert_eq!("TYPE-III".parse::<DependenceType>().unwrap(), DependenceType::TypeIII);
        assert!("type_iv".parse::<DependenceType>().is_err());
    }
}
