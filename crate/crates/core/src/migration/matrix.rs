use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{MigrationError, Result};

/// Credit rating, `1` best, `K` default.
pub type Rating = u8;

/// Row-stochastic `K x K` transition matrix with `K` absorbing.
///
/// Ratings are 1-based in the public API. Serializes as a JSON array of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct RatingTransitionMatrix {
    size: usize,
    entries: Vec<f64>,
}

const ROW_TOLERANCE: f64 = 1e-12;

impl RatingTransitionMatrix {
    pub fn new(size: usize, entries: Vec<f64>) -> Result<Self> {
        if size < 2 || size > Rating::MAX as usize {
            return Err(MigrationError::InvalidMatrix(format!(
                "size {size} outside 2..=255"
            )));
        }
        if entries.len() != size * size {
            return Err(MigrationError::InvalidMatrix(format!(
                "expected {} entries, got {}",
                size * size,
                entries.len()
            )));
        }
        for (idx, &p) in entries.iter().enumerate() {
            if !(p.is_finite() && p >= 0.0) {
                return Err(MigrationError::InvalidMatrix(format!(
                    "entry ({}, {}) = {p} is not a nonnegative number",
                    idx / size + 1,
                    idx % size + 1
                )));
            }
        }
        for r in 0..size {
            let sum: f64 = entries[r * size..(r + 1) * size].iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(MigrationError::InvalidMatrix(format!(
                    "row {} sums to {sum}",
                    r + 1
                )));
            }
        }
        let last = size - 1;
        if entries[last * size + last] != 1.0 {
            return Err(MigrationError::InvalidMatrix(format!(
                "default state {size} is not absorbing"
            )));
        }
        Ok(Self { size, entries })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(MigrationError::InvalidMatrix("matrix is not square".into()));
        }
        Self::new(size, rows.into_iter().flatten().collect())
    }

    pub fn identity(size: usize) -> Result<Self> {
        let mut entries = vec![0.0; size * size];
        for k in 0..size {
            entries[k * size + k] = 1.0;
        }
        Self::new(size, entries)
    }

    /// Number of rating states `K`, including default.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn default_rating(&self) -> Rating {
        self.size as Rating
    }

    /// `p_{from, to}` for 1-based ratings.
    pub fn prob(&self, from: Rating, to: Rating) -> f64 {
        self.entries[(from as usize - 1) * self.size + (to as usize - 1)]
    }

    /// Row of `from` (1-based), indexed by `to - 1`.
    pub fn row(&self, from: Rating) -> &[f64] {
        let r = from as usize - 1;
        &self.entries[r * self.size..(r + 1) * self.size]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.size).map(<[f64]>::to_vec).collect()
    }

    /// Largest absolute entrywise difference.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Reads a headerless CSV of `K` rows by `K` columns.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| MigrationError::Parse(e.to_string()))?;
            let row = record
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|_| {
                        MigrationError::Parse(format!("line {}: '{field}' is not a number", line + 1))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for row in self.entries.chunks(self.size) {
            let line: Vec<String> = row.iter().map(|p| format!("{p:e}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

impl TryFrom<Vec<Vec<f64>>> for RatingTransitionMatrix {
    type Error = MigrationError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<RatingTransitionMatrix> for Vec<Vec<f64>> {
    fn from(m: RatingTransitionMatrix) -> Self {
        m.rows()
    }
}

/// Admissible one-step moves.
///
/// Non-default ratings move at most one notch; the default state `K` can be
/// entered from the ratings in `default_sources` only. `jump_triggers` are
/// the ratings whose default transition counts as a jump to default for the
/// Type II dependence (by default the same set as `default_sources`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MigrationPattern {
    pub size: usize,
    pub default_sources: Vec<Rating>,
    pub jump_triggers: Vec<Rating>,
}

impl MigrationPattern {
    /// Default transitions from `3..=K-1`, all of them jump triggers.
    pub fn standard(size: usize) -> Self {
        let sources: Vec<Rating> = (3..size as Rating).collect();
        Self {
            size,
            default_sources: sources.clone(),
            jump_triggers: sources,
        }
    }

    pub fn can_default_from(&self, rating: Rating) -> bool {
        self.default_sources.contains(&rating)
    }

    pub fn is_jump_trigger(&self, rating: Rating) -> bool {
        self.jump_triggers.contains(&rating)
    }

    pub fn allows(&self, from: Rating, to: Rating) -> bool {
        let k = self.size as Rating;
        if from == k {
            return to == k;
        }
        if to == k {
            return self.can_default_from(from);
        }
        from.abs_diff(to) <= 1
    }

    /// Every positive entry of `m` must be an admissible move.
    pub fn check(&self, m: &RatingTransitionMatrix) -> Result<()> {
        if m.size() != self.size {
            return Err(MigrationError::InvalidMatrix(format!(
                "matrix size {} does not match pattern size {}",
                m.size(),
                self.size
            )));
        }
        for from in 1..=self.size as Rating {
            for to in 1..=self.size as Rating {
                let p = m.prob(from, to);
                if p > 0.0 && !self.allows(from, to) {
                    return Err(MigrationError::PatternViolation { from, to, prob: p });
                }
            }
        }
        Ok(())
    }
}

/// Parametric family of per-period matrices respecting the standard pattern.
///
/// Rates are annual; a period's transition probability is `rate / periods_per_year`.
/// Ratings `2..=K-1` upgrade at `up_rate`, ratings `1..=K-2` downgrade one
/// notch at `down_rate`, and rating `x` defaults at `default_rates[x - 1]`
/// (zero outside the pattern's default sources).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFamily {
    pub up_rate: f64,
    pub down_rate: f64,
    pub default_rates: Vec<f64>,
    pub periods_per_year: f64,
}

impl Default for MatrixFamily {
    /// Eight ratings with jump-to-default intensity rising steeply towards 7.
    fn default() -> Self {
        Self {
            up_rate: 0.1,
            down_rate: 0.1,
            default_rates: vec![0.0, 0.0, 0.002, 0.01, 0.04, 0.15, 0.6, 0.0],
            periods_per_year: 252.0,
        }
    }
}

impl MatrixFamily {
    pub fn size(&self) -> usize {
        self.default_rates.len()
    }

    pub fn build(&self, pattern: &MigrationPattern) -> Result<RatingTransitionMatrix> {
        let k = self.size();
        if pattern.size != k {
            return Err(MigrationError::InvalidMatrix(format!(
                "family has {k} ratings, pattern {}",
                pattern.size
            )));
        }
        if self.periods_per_year <= 0.0 {
            return Err(MigrationError::InvalidMatrix("periods_per_year must be positive".into()));
        }
        let up = self.up_rate / self.periods_per_year;
        let down = self.down_rate / self.periods_per_year;
        let mut entries = vec![0.0; k * k];
        for x in 1..k {
            let row = &mut entries[(x - 1) * k..x * k];
            if x >= 2 {
                row[x - 2] = up;
            }
            if x + 1 < k {
                row[x] = down;
            }
            if pattern.can_default_from(x as Rating) {
                row[k - 1] = self.default_rates[x - 1] / self.periods_per_year;
            }
            let moved: f64 = row.iter().sum();
            if moved > 1.0 {
                return Err(MigrationError::InvalidMatrix(format!(
                    "rating {x} leaves with probability {moved} > 1"
                )));
            }
            row[x - 1] = 1.0 - moved;
        }
        entries[k * k - 1] = 1.0;
        let m = RatingTransitionMatrix::new(k, entries)?;
        pattern.check(&m)?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_rows_and_absorption() {
        assert!(RatingTransitionMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.0, 1.0]]).is_ok());
        assert!(RatingTransitionMatrix::from_rows(vec![vec![0.5, 0.4], vec![0.0, 1.0]]).is_err());
        assert!(RatingTransitionMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.1, 0.9]]).is_err());
        assert!(RatingTransitionMatrix::from_rows(vec![vec![1.2, -0.2], vec![0.0, 1.0]]).is_err());
        assert!(RatingTransitionMatrix::from_rows(vec![vec![1.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn standard_pattern_for_eight_ratings() {
        let p = MigrationPattern::standard(8);
        assert_eq!(p.default_sources, vec![3, 4, 5, 6, 7]);
        assert!(p.allows(1, 2));
        assert!(!p.allows(1, 3));
        assert!(!p.allows(2, 8));
        assert!(p.allows(3, 8));
        assert!(p.allows(7, 8));
        assert!(!p.allows(8, 7));
        assert!(p.allows(8, 8));
    }

    #[test]
    fn default_family_respects_pattern() {
        let pattern = MigrationPattern::standard(8);
        let m = MatrixFamily::default().build(&pattern).unwrap();
        pattern.check(&m).unwrap();
        assert_eq!(m.prob(8, 8), 1.0);
        assert_eq!(m.prob(1, 8), 0.0);
        assert!(m.prob(7, 8) > m.prob(3, 8));
        // rating 7 has no separate one-notch downgrade: 7 -> 8 is the default move
        assert!((m.prob(7, 8) - 0.6 / 252.0).abs() < 1e-15);
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let m = MatrixFamily::default()
            .build(&MigrationPattern::standard(8))
            .unwrap();
        let back = RatingTransitionMatrix::from_csv_reader(m.to_csv_string().as_bytes()).unwrap();
        assert_eq!(back, m);
        assert!(RatingTransitionMatrix::from_csv_reader("1,0\nx,1\n".as_bytes()).is_err());
        assert!(RatingTransitionMatrix::from_csv_reader("1,0,0\n0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn json_is_array_of_rows() {
        let m = RatingTransitionMatrix::identity(3).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[1.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,1.0]]");
        let back: RatingTransitionMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
