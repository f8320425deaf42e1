//! Finite discrete laws and the conditional risk measures built on them.
//!
//! Every conditional law in the engine is a [`DiscreteDistribution`]: the
//! Markov property of the migration chain and the constant-intensity
//! reference defaults make "conditioning on the information at `t`" the same
//! as evaluating the law of the current cell, so the measures here are plain
//! functions of a finite list of atoms.
//!
//! Sign convention: the risk measures consume the law of the argument
//! already written as a cash flow whose negative side is the loss, i.e. the
//! law of `-X` or `-(X)^+`. A negative cash flow carries positive risk.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance on the total mass of a distribution.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Relative tolerance under which two atom values are treated as equal.
pub const MERGE_TOLERANCE: f64 = 1e-12;

/// Slack used when comparing cumulative mass against a level `alpha`.
///
/// Cumulative sums like `0.1 + 0.2` land a few ulps away from the level
/// they are meant to hit exactly.
pub const LEVEL_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("level {level} outside {domain} for {what}")]
    InvalidLevel {
        what: &'static str,
        level: f64,
        domain: &'static str,
    },
    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid density: {0}")]
    InvalidDensity(String),
}

pub type Result<T> = std::result::Result<T, ProbError>;

/// One support point of a [`DiscreteDistribution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub prob: f64,
}

/// Finite probability law.
///
/// Atoms are kept sorted ascending by value, values equal up to
/// [`MERGE_TOLERANCE`] are merged, and zero-mass atoms are dropped, so the
/// support is exactly the set of stored values. Serializes as a JSON array
/// of `{value, prob}` objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct DiscreteDistribution {
    atoms: Vec<Atom>,
}

impl TryFrom<Vec<Atom>> for DiscreteDistribution {
    type Error = ProbError;

    fn try_from(atoms: Vec<Atom>) -> Result<Self> {
        Self::new(atoms.into_iter().map(|a| (a.value, a.prob)))
    }
}

impl From<DiscreteDistribution> for Vec<Atom> {
    fn from(d: DiscreteDistribution) -> Self {
        d.atoms
    }
}

fn same_value(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= MERGE_TOLERANCE * a.abs().max(b.abs())
}

impl DiscreteDistribution {
    pub fn new(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut raw: Vec<Atom> = Vec::new();
        for (value, prob) in pairs {
            if !value.is_finite() {
                return Err(ProbError::InvalidDistribution(format!(
                    "non-finite atom value {value}"
                )));
            }
            if !(prob.is_finite() && prob >= 0.0) {
                return Err(ProbError::InvalidDistribution(format!(
                    "probability {prob} at value {value} is not a nonnegative number"
                )));
            }
            if prob > 0.0 {
                // -0.0 + 0.0 == +0.0; keeps `-(x)^+` outputs printable as 0
                raw.push(Atom {
                    value: value + 0.0,
                    prob,
                });
            }
        }
        if raw.is_empty() {
            return Err(ProbError::InvalidDistribution("no atom with positive mass".into()));
        }
        let total: f64 = raw.iter().map(|a| a.prob).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(ProbError::InvalidDistribution(format!(
                "total mass {total} differs from 1 by more than {MASS_TOLERANCE:e}"
            )));
        }
        raw.sort_by(|a, b| a.value.total_cmp(&b.value));
        let mut atoms: Vec<Atom> = Vec::with_capacity(raw.len());
        for atom in raw {
            match atoms.last_mut() {
                Some(last) if same_value(last.value, atom.value) => last.prob += atom.prob,
                _ => atoms.push(atom),
            }
        }
        Ok(Self { atoms })
    }

    /// Point mass at `value`.
    pub fn degenerate(value: f64) -> Result<Self> {
        Self::new([(value, 1.0)])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.value)
    }

    pub fn probs(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.prob)
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.value * a.prob).sum()
    }

    /// `P(X <= s)`.
    pub fn cdf(&self, s: f64) -> f64 {
        self.atoms
            .iter()
            .take_while(|a| a.value <= s)
            .map(|a| a.prob)
            .sum()
    }

    /// `P(X < s)`.
    pub fn cdf_left(&self, s: f64) -> f64 {
        self.atoms
            .iter()
            .take_while(|a| a.value < s)
            .map(|a| a.prob)
            .sum()
    }

    /// Law of `f(X)`, re-sorted and merged.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.atoms.iter().map(|a| (f(a.value), a.prob)))
    }
}

fn check_open_unit(what: &'static str, alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(ProbError::InvalidLevel {
            what,
            level: alpha,
            domain: "(0, 1)",
        })
    }
}

fn check_half_open_unit(what: &'static str, alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(ProbError::InvalidLevel {
            what,
            level: alpha,
            domain: "(0, 1]",
        })
    }
}

/// Index of the first atom whose cumulative mass reaches `alpha`
/// (`F(x) >= alpha`), or exceeds it when `strict`.
fn quantile_index(dist: &DiscreteDistribution, alpha: f64, strict: bool) -> usize {
    let mut cum = 0.0;
    for (k, atom) in dist.atoms.iter().enumerate() {
        cum += atom.prob;
        let hit = if strict {
            cum > alpha + LEVEL_SLACK
        } else {
            cum >= alpha - LEVEL_SLACK
        };
        if hit {
            return k;
        }
    }
    dist.atoms.len() - 1
}

/// Lower quantile `q^-_alpha = sup{s : P(X < s) < alpha}`.
pub fn lower_quantile(dist: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    check_open_unit("lower quantile", alpha)?;
    Ok(dist.atoms[quantile_index(dist, alpha, false)].value)
}

/// Upper quantile `q^+_alpha = sup{s : P(X < s) <= alpha}`.
pub fn upper_quantile(dist: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    check_open_unit("upper quantile", alpha)?;
    Ok(dist.atoms[quantile_index(dist, alpha, true)].value)
}

/// Value at Risk of a loss-convention law, as a positive loss magnitude.
///
/// Atoms are scanned from the worst outcome up and the first atom whose
/// cumulative mass strictly exceeds `alpha` is selected; at an exact tie the
/// scan moves on to the next atom.
pub fn var(dist: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    check_open_unit("VaR", alpha)?;
    Ok(-dist.atoms[quantile_index(dist, alpha, true)].value + 0.0)
}

/// Average Value at Risk (expected shortfall) at level `alpha` in `(0, 1]`.
pub fn avar(dist: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    check_half_open_unit("AVaR", alpha)?;
    let n_alpha = quantile_index(dist, alpha, true);
    let mut head_mass = 0.0;
    let mut tail = 0.0;
    for atom in &dist.atoms[..n_alpha] {
        tail += -atom.value * atom.prob;
        head_mass += atom.prob;
    }
    let residual = (alpha - head_mass).max(0.0);
    tail += -dist.atoms[n_alpha].value * residual;
    Ok(tail / alpha + 0.0)
}

/// Entropic risk `(1/alpha) log E[exp(-alpha Y)]` of the loss-convention
/// law of `Y`, evaluated with a max shift so large losses do not overflow.
pub fn entropic(dist: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    check_open_unit("entropic", alpha)?;
    let exponents: Vec<f64> = dist.atoms.iter().map(|a| -alpha * a.value).collect();
    let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = dist
        .atoms
        .iter()
        .zip(&exponents)
        .map(|(a, e)| a.prob * (e - shift).exp())
        .sum();
    Ok((shift + sum.ln()) / alpha)
}

/// A density `Z = dQ/dP` on the atoms of one distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeDensity {
    pub weights: Vec<f64>,
    pub alpha: f64,
}

impl ExtremeDensity {
    /// Checks `0 <= Z <= 1/alpha` and `E[Z] = 1` against `dist`.
    pub fn validate(&self, dist: &DiscreteDistribution) -> Result<()> {
        if self.weights.len() != dist.len() {
            return Err(ProbError::LengthMismatch {
                expected: dist.len(),
                got: self.weights.len(),
            });
        }
        let cap = 1.0 / self.alpha;
        for (k, &w) in self.weights.iter().enumerate() {
            if !(w >= -1e-12 && w <= cap * (1.0 + 1e-12)) {
                return Err(ProbError::InvalidDensity(format!(
                    "weight {w} at atom {k} outside [0, {cap}]"
                )));
            }
        }
        let mass: f64 = self.weights.iter().zip(dist.probs()).map(|(w, p)| w * p).sum();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(ProbError::InvalidDensity(format!("E[Z] = {mass}, expected 1")));
        }
        Ok(())
    }
}

/// Weight carried by the quantile atom relative to `1/alpha`:
/// `(alpha - P(X < q)) / P(X = q)`.
pub fn quantile_atom_split(alpha: f64, mass_below: f64, mass_at: f64) -> f64 {
    if mass_at > 0.0 {
        ((alpha - mass_below) / mass_at).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Maximizing density of the AVaR robust representation.
///
/// `Z* = (1/alpha)(1{X < q} + eps 1{X = q})` with `q` the lower
/// `alpha`-quantile. Any `alpha`-quantile yields a maximizer; the lower one
/// is used throughout. At `alpha = 1` the density is identically one.
pub fn extreme_density(dist: &DiscreteDistribution, alpha: f64) -> Result<ExtremeDensity> {
    check_half_open_unit("extreme density", alpha)?;
    let k = quantile_index(dist, alpha, false);
    let mass_below: f64 = dist.atoms[..k].iter().map(|a| a.prob).sum();
    let eps = quantile_atom_split(alpha, mass_below, dist.atoms[k].prob);
    let mut weights = vec![0.0; dist.len()];
    for w in &mut weights[..k] {
        *w = 1.0 / alpha;
    }
    weights[k] = eps / alpha;
    Ok(ExtremeDensity { weights, alpha })
}

/// `E[Z * V]` for a second random variable `V` on the atoms of `dist`.
pub fn expectation_under_density(
    values: &[f64],
    dist: &DiscreteDistribution,
    z: &ExtremeDensity,
) -> Result<f64> {
    if values.len() != dist.len() {
        return Err(ProbError::LengthMismatch {
            expected: dist.len(),
            got: values.len(),
        });
    }
    if z.weights.len() != dist.len() {
        return Err(ProbError::LengthMismatch {
            expected: dist.len(),
            got: z.weights.len(),
        });
    }
    Ok(values
        .iter()
        .zip(&z.weights)
        .zip(dist.probs())
        .map(|((v, w), p)| v * w * p)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RiskMeasureKind {
    Var,
    Avar,
    Entropic,
}

impl std::fmt::Display for RiskMeasureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RiskMeasureKind::Var => "VAR",
            RiskMeasureKind::Avar => "AVAR",
            RiskMeasureKind::Entropic => "ENTROPIC",
        })
    }
}

/// A risk measure together with its level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskMeasureSpec {
    pub kind: RiskMeasureKind,
    pub level: f64,
}

impl RiskMeasureSpec {
    pub fn new(kind: RiskMeasureKind, level: f64) -> Result<Self> {
        let spec = Self { kind, level };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            RiskMeasureKind::Var => check_open_unit("VaR", self.level),
            RiskMeasureKind::Avar => check_half_open_unit("AVaR", self.level),
            RiskMeasureKind::Entropic => check_open_unit("entropic", self.level),
        }
    }

    pub fn with_level(self, level: f64) -> Result<Self> {
        Self::new(self.kind, level)
    }

    pub fn evaluate(&self, dist: &DiscreteDistribution) -> Result<f64> {
        match self.kind {
            RiskMeasureKind::Var => var(dist, self.level),
            RiskMeasureKind::Avar => avar(dist, self.level),
            RiskMeasureKind::Entropic => entropic(dist, self.level),
        }
    }
}
