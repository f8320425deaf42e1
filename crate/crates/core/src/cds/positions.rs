//! The CCP's matched book: `H[i][j]` is the position versus member `i` in
//! contract `j`, positive when the CCP buys protection.

use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{CdsError, Result};

/// Column sums must vanish to this absolute tolerance.
pub const MATCHED_BOOK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct PositionMatrix {
    members: usize,
    contracts: usize,
    entries: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for PositionMatrix {
    type Error = CdsError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<PositionMatrix> for Vec<Vec<f64>> {
    fn from(h: PositionMatrix) -> Self {
        h.rows()
    }
}

impl PositionMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let members = rows.len();
        if members == 0 {
            return Err(CdsError::Positions("no members".into()));
        }
        let contracts = rows[0].len();
        if contracts == 0 {
            return Err(CdsError::Positions("no contracts".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != contracts) {
            return Err(CdsError::Positions(format!(
                "row {} has {} entries, expected {contracts}",
                i + 1,
                rows[i].len()
            )));
        }
        let entries: Vec<f64> = rows.into_iter().flatten().collect();
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(CdsError::Positions("non-finite position".into()));
        }
        let h = Self {
            members,
            contracts,
            entries,
        };
        for j in 0..contracts {
            let sum: f64 = h.column(j).sum();
            if sum.abs() > MATCHED_BOOK_TOLERANCE {
                return Err(CdsError::Positions(format!(
                    "column {} sums to {sum}; the book must be matched",
                    j + 1
                )));
            }
        }
        Ok(h)
    }

    /// Headerless CSV, one member per row.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (n, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| CdsError::Positions(format!("csv: {e}")))?;
            let row = record
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|e| {
                        CdsError::Positions(format!("line {}: '{field}': {e}", n + 1))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for i in 0..self.members {
            let line: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Balanced eight-member book of the reference study.
    pub fn balanced() -> Self {
        Self::from_rows(vec![
            vec![1.0, -1.0, 1.0, -1.0],
            vec![-1.0, 1.0, -1.0, 1.0],
            vec![10.0, -1.0, -8.0, -1.0],
            vec![-1.0, 2.0, -2.0, 1.0],
            vec![-10.0, 5.0, -5.0, 10.0],
            vec![-1.0, -1.0, -5.0, 7.0],
            vec![20.0, 10.0, 18.0, -48.0],
            vec![-18.0, -15.0, 2.0, 31.0],
        ])
        .expect("preset book is matched")
    }

    /// Unbalanced eight-member book with two large members.
    pub fn unbalanced() -> Self {
        Self::from_rows(vec![
            vec![1.0, 1.0, 1.0, 1.0],
            vec![10.0, -1.0, 10.0, -1.0],
            vec![-1.0, 10.0, -1.0, 10.0],
            vec![100.0, -5.0, 100.0, -5.0],
            vec![-110.0, -5.0, -110.0, -5.0],
            vec![-1.0, -1.0, -1.0, -1.0],
            vec![-2.0, -1.0, -6.0, -3.0],
            vec![3.0, 2.0, 7.0, 4.0],
        ])
        .expect("preset book is matched")
    }

    pub fn members(&self) -> usize {
        self.members
    }

    pub fn contracts(&self) -> usize {
        self.contracts
    }

    pub fn row(&self, member: usize) -> &[f64] {
        &self.entries[member * self.contracts..(member + 1) * self.contracts]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.members).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn get(&self, member: usize, contract: usize) -> f64 {
        self.entries[member * self.contracts + contract]
    }

    pub fn column(&self, contract: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.members).map(move |i| self.get(i, contract))
    }

    /// Total protection bought by the CCP across the book.
    pub fn long_notional(&self) -> f64 {
        self.entries.iter().map(|x| x.max(0.0)).sum()
    }

    /// The first `members` rows, with the last of them replaced so that
    /// every column sums to zero again.
    pub fn leading_block(&self, members: usize) -> Result<Self> {
        if members < 2 {
            return Err(CdsError::Positions(
                "a matched book needs at least two members".into(),
            ));
        }
        if members > self.members {
            return Err(CdsError::Positions(format!(
                "block of {members} members requested from a book of {}",
                self.members
            )));
        }
        let mut rows: Vec<Vec<f64>> = (0..members).map(|i| self.row(i).to_vec()).collect();
        for j in 0..self.contracts {
            let others: f64 = rows[..members - 1].iter().map(|r| r[j]).sum();
            rows[members - 1][j] = -others;
        }
        Self::from_rows(rows)
    }

    /// The book stacked `copies` times.
    pub fn replicate(&self, copies: usize) -> Result<Self> {
        if copies == 0 {
            return Err(CdsError::Positions("at least one copy is required".into()));
        }
        let rows = (0..copies).flat_map(|_| self.rows()).collect();
        Self::from_rows(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_matched() {
        for h in [PositionMatrix::balanced(), PositionMatrix::unbalanced()] {
            assert_eq!((h.members(), h.contracts()), (8, 4));
            for j in 0..4 {
                assert_eq!(h.column(j).sum::<f64>(), 0.0);
            }
        }
    }

    #[test]
    fn csv_round_trip_and_validation() {
        let h = PositionMatrix::balanced();
        let back = PositionMatrix::from_csv_reader(h.to_csv_string().as_bytes()).unwrap();
        assert_eq!(back, h);
        assert!(PositionMatrix::from_csv_reader("1,2\n-1,-1\n".as_bytes()).is_err());
        assert!(PositionMatrix::from_csv_reader("1,x\n-1,0\n".as_bytes()).is_err());
        assert!(PositionMatrix::from_csv_reader("1,2\n-1\n".as_bytes()).is_err());
    }

    #[test]
    fn blocks_and_copies() {
        let h = PositionMatrix::balanced();
        let block = h.leading_block(4).unwrap();
        assert_eq!(block.row(0), h.row(0));
        assert_eq!(block.row(3), &[-10.0, 1.0, 8.0, 1.0]);
        let big = block.replicate(4).unwrap();
        assert_eq!(big.members(), 16);
        assert_eq!(big.row(12), block.row(0));
        assert!(h.leading_block(1).is_err());
        assert!(h.leading_block(9).is_err());
    }
}
