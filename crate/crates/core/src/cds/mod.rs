//! Post-Big-Bang single-name CDS under a constant default intensity.
//!
//! The pre-default upfront of a contract with remaining life `tau` years is
//!
//! ```text
//! S~(tau) = (exp(-lambda tau) - 1) (kappa - lambda R) / lambda
//! ```
//!
//! from the protection buyer's side. Remaining life at a calendar date is
//! ACT/365 to maturity; moving along the engine's business-day grid shifts
//! it by `1/252` per step. Over a margin period of `delta` business days the
//! exposure of a long position has two outcomes: the reference name
//! survives (probability `exp(-lambda delta / 252)`), or it defaults and the
//! protection pays `R` less the coupon accrued since the last premium date.

mod calendar;
mod positions;

pub use calendar::{
    act365, add_business_days, business_days_between, imm_dates, is_business_day,
    BUSINESS_DAYS_PER_YEAR,
};
pub use positions::PositionMatrix;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prob::{Atom, DiscreteDistribution, ProbError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CdsError {
    #[error("invalid contract: {0}")]
    InvalidContract(String),
    #[error("date {date} lies outside the contract life [{inception}, {maturity}]")]
    OutsideLife {
        date: NaiveDate,
        inception: NaiveDate,
        maturity: NaiveDate,
    },
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid position matrix: {0}")]
    Positions(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

pub type Result<T> = std::result::Result<T, CdsError>;

/// Unit-notional CDS. Positive positions buy protection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdsContract {
    /// Annual default intensity of the reference name.
    pub lambda: f64,
    /// Annual running coupon.
    pub kappa: f64,
    pub recovery: f64,
    pub inception: NaiveDate,
    pub maturity: NaiveDate,
}

impl CdsContract {
    pub fn new(
        lambda: f64,
        kappa: f64,
        recovery: f64,
        inception: NaiveDate,
        maturity: NaiveDate,
    ) -> Result<Self> {
        let c = Self {
            lambda,
            kappa,
            recovery,
            inception,
            maturity,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(CdsError::InvalidContract(format!(
                "intensity {} must be positive",
                self.lambda
            )));
        }
        if !self.kappa.is_finite() {
            return Err(CdsError::InvalidContract(format!("coupon {} is not finite", self.kappa)));
        }
        if !(0.0..=1.0).contains(&self.recovery) {
            return Err(CdsError::InvalidContract(format!(
                "recovery {} outside [0, 1]",
                self.recovery
            )));
        }
        if self.inception >= self.maturity {
            return Err(CdsError::InvalidContract(format!(
                "inception {} is not before maturity {}",
                self.inception, self.maturity
            )));
        }
        Ok(())
    }

    /// IMM premium dates from inception to maturity inclusive.
    pub fn premium_dates(&self) -> Vec<NaiveDate> {
        imm_dates(self.inception, self.maturity)
    }

    /// The four contracts of the reference study: intensities 0.002, 0.01,
    /// 0.015, 0.03; coupon 100bp; recovery 40%; 20 Jun 2015 to 20 Jun 2018.
    pub fn study_contracts() -> Vec<CdsContract> {
        let inception = NaiveDate::from_ymd_opt(2015, 6, 20).expect("valid date");
        let maturity = NaiveDate::from_ymd_opt(2018, 6, 20).expect("valid date");
        [0.002, 0.01, 0.015, 0.03]
            .into_iter()
            .map(|lambda| CdsContract {
                lambda,
                kappa: 0.01,
                recovery: 0.4,
                inception,
                maturity,
            })
            .collect()
    }

    fn check_alive_on(&self, t: NaiveDate) -> Result<()> {
        if t < self.inception || t > self.maturity {
            return Err(CdsError::OutsideLife {
                date: t,
                inception: self.inception,
                maturity: self.maturity,
            });
        }
        Ok(())
    }
}

/// Evaluation date of the reference study, 22 Sep 2015.
pub fn study_evaluation_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 9, 22).expect("valid date")
}

/// Pre-default upfront for `years` of remaining life.
pub fn upfront_for_life(c: &CdsContract, years: f64) -> f64 {
    let years = years.max(0.0);
    ((-c.lambda * years).exp_m1()) * (c.kappa - c.lambda * c.recovery) / c.lambda
}

/// Pre-default upfront at calendar date `t`.
pub fn pre_default_upfront(c: &CdsContract, t: NaiveDate) -> Result<f64> {
    c.check_alive_on(t)?;
    Ok(upfront_for_life(c, act365(t, c.maturity)))
}

/// Upfront at `t`: zero once the reference name has defaulted.
pub fn upfront(c: &CdsContract, t: NaiveDate, defaulted: bool) -> Result<f64> {
    let pre = pre_default_upfront(c, t)?;
    Ok(if defaulted { 0.0 } else { pre })
}

/// Two-point law of one unit of protection over a margin period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposureLaw {
    pub survival: Atom,
    pub default: Atom,
}

impl ExposureLaw {
    pub fn survival_prob(&self) -> f64 {
        self.survival.prob
    }

    pub fn to_distribution(&self) -> Result<DiscreteDistribution> {
        Ok(DiscreteDistribution::new([
            (self.survival.value, self.survival.prob),
            (self.default.value, self.default.prob),
        ])?)
    }
}

/// Marks of one contract along the business-day grid anchored at a date.
///
/// Offsets are business days after the anchor; the remaining life at offset
/// `n` is `ACT/365(anchor, maturity) - n / 252`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractMarks {
    contract: CdsContract,
    anchor: NaiveDate,
    life_at_anchor: f64,
    premium_dates: Vec<NaiveDate>,
}

impl ContractMarks {
    pub fn new(contract: &CdsContract, anchor: NaiveDate) -> Result<Self> {
        contract.validate()?;
        contract.check_alive_on(anchor)?;
        Ok(Self {
            contract: contract.clone(),
            anchor,
            life_at_anchor: act365(anchor, contract.maturity),
            premium_dates: contract.premium_dates(),
        })
    }

    pub fn contract(&self) -> &CdsContract {
        &self.contract
    }

    pub fn anchor(&self) -> NaiveDate {
        self.anchor
    }

    pub fn date(&self, offset: u32) -> NaiveDate {
        add_business_days(self.anchor, offset)
    }

    pub fn remaining_life(&self, offset: i64) -> f64 {
        (self.life_at_anchor - offset as f64 / BUSINESS_DAYS_PER_YEAR).max(0.0)
    }

    /// Pre-default upfront at `offset` (may be `-1`, the day before the anchor).
    pub fn upfront(&self, offset: i64) -> f64 {
        upfront_for_life(&self.contract, self.remaining_life(offset))
    }

    /// Last premium date on or before `d` (inception if none).
    fn last_premium(&self, d: NaiveDate) -> NaiveDate {
        self.premium_dates
            .iter()
            .rev()
            .find(|&&p| p <= d)
            .copied()
            .unwrap_or(self.contract.inception)
    }

    fn next_premium(&self, d: NaiveDate) -> Option<NaiveDate> {
        self.premium_dates.iter().find(|&&p| p > d).copied()
    }

    /// Coupon accrued since the last premium date, in years (business days / 252).
    pub fn accrual(&self, offset: u32) -> f64 {
        let d = self.date(offset);
        business_days_between(self.last_premium(d), d) as f64 / BUSINESS_DAYS_PER_YEAR
    }

    /// Protection payoff of a default at `offset`: `R - kappa * accrual`.
    pub fn default_payoff(&self, offset: u32) -> f64 {
        self.contract.recovery - self.contract.kappa * self.accrual(offset)
    }

    /// Full coupon due in `(t, t + delta]` for `t` at `offset`, zero if the
    /// next premium date falls later.
    pub fn premium_due(&self, offset: u32, delta: u32) -> f64 {
        let t = self.date(offset);
        let end = self.date(offset + delta);
        match self.next_premium(t) {
            Some(next) if next <= end => {
                let prev = self.last_premium(t);
                self.contract.kappa * business_days_between(prev, next) as f64
                    / BUSINESS_DAYS_PER_YEAR
            }
            _ => 0.0,
        }
    }

    /// Probability of surviving `delta` business days given survival so far.
    pub fn survival_prob(&self, delta: u32) -> f64 {
        (-self.contract.lambda * delta as f64 / BUSINESS_DAYS_PER_YEAR).exp()
    }

    /// Exposure law of a long unit position over `(t, t + delta]`, `t` at `offset`.
    pub fn exposure_law(&self, offset: u32, delta: u32) -> ExposureLaw {
        let before = self.upfront(offset as i64 - 1);
        let p = self.survival_prob(delta);
        ExposureLaw {
            survival: Atom {
                value: self.upfront((offset + delta) as i64) - self.premium_due(offset, delta) - before,
                prob: p,
            },
            default: Atom {
                value: self.default_payoff(offset) - before,
                prob: 1.0 - p,
            },
        }
    }
}

/// Exposure law of one long unit of `c` over `delta` business days after `t_k`.
pub fn margin_period_exposure(c: &CdsContract, t_k: NaiveDate, delta: u32) -> Result<ExposureLaw> {
    Ok(ContractMarks::new(c, t_k)?.exposure_law(0, delta))
}

/// Law of `sum_j row[j] * S_j` with independent contract outcomes.
pub fn portfolio_exposure_law(row: &[f64], laws: &[ExposureLaw]) -> Result<DiscreteDistribution> {
    if row.len() != laws.len() {
        return Err(CdsError::LengthMismatch {
            expected: laws.len(),
            got: row.len(),
        });
    }
    // contracts with no position contribute nothing and need no branching
    let active: Vec<(f64, &ExposureLaw)> = row
        .iter()
        .zip(laws)
        .filter(|(h, _)| **h != 0.0)
        .map(|(h, l)| (*h, l))
        .collect();
    let n = active.len();
    let mut pairs = Vec::with_capacity(1 << n);
    for mask in 0u32..(1u32 << n) {
        let mut value = 0.0;
        let mut prob = 1.0;
        for (j, (h, law)) in active.iter().enumerate() {
            let atom = if mask >> j & 1 == 1 { law.default } else { law.survival };
            value += h * atom.value;
            prob *= atom.prob;
        }
        pairs.push((value, prob));
    }
    Ok(DiscreteDistribution::new(pairs)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LossTransform {
    /// `v -> -max(v, 0)`
    NegPosPart,
    /// `v -> -v`
    Neg,
}

pub fn loss_transform(dist: &DiscreteDistribution, mode: LossTransform) -> Result<DiscreteDistribution> {
    Ok(match mode {
        LossTransform::NegPosPart => dist.map(|v| -v.max(0.0))?,
        LossTransform::Neg => dist.map(|v| -v)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cds(lambda: f64) -> CdsContract {
        CdsContract {
            lambda,
            ..CdsContract::study_contracts()[0].clone()
        }
    }

    #[test]
    fn fair_spread_and_maturity_give_zero() {
        let mut c = cds(0.02);
        c.kappa = c.lambda * c.recovery;
        assert_eq!(pre_default_upfront(&c, study_evaluation_date()).unwrap(), 0.0);
        let c = cds(0.02);
        assert_eq!(pre_default_upfront(&c, c.maturity).unwrap(), 0.0);
        assert_eq!(upfront(&c, study_evaluation_date(), true).unwrap(), 0.0);
    }

    #[test]
    fn spec_upfront_example() {
        let c = cds(0.002);
        let s = upfront_for_life(&c, 2.745);
        assert!((s + 0.0252).abs() < 5e-5, "{s}");
    }

    #[test]
    fn rejects_dates_outside_life() {
        let c = cds(0.01);
        let early = NaiveDate::from_ymd_opt(2015, 6, 19).unwrap();
        let late = NaiveDate::from_ymd_opt(2018, 6, 21).unwrap();
        assert!(pre_default_upfront(&c, early).is_err());
        assert!(margin_period_exposure(&c, late, 10).is_err());
        assert!(CdsContract::new(0.0, 0.01, 0.4, c.inception, c.maturity).is_err());
        assert!(CdsContract::new(0.01, 0.01, 1.2, c.inception, c.maturity).is_err());
        assert!(CdsContract::new(0.01, 0.01, 0.4, c.maturity, c.inception).is_err());
    }

    #[test]
    fn premium_in_window() {
        let c = cds(0.01);
        // 14 Sep 2015: the 20 Sep premium falls inside the next 10 business days
        let t = NaiveDate::from_ymd_opt(2015, 9, 14).unwrap();
        let marks = ContractMarks::new(&c, t).unwrap();
        let due = marks.premium_due(0, 10);
        let quarter = business_days_between(
            NaiveDate::from_ymd_opt(2015, 6, 20).unwrap(),
            NaiveDate::from_ymd_opt(2015, 9, 20).unwrap(),
        ) as f64;
        assert!((due - 0.01 * quarter / 252.0).abs() < 1e-15);
        let marks = ContractMarks::new(&c, study_evaluation_date()).unwrap();
        assert_eq!(marks.premium_due(0, 10), 0.0);
    }

    #[test]
    fn zero_row_is_point_mass() {
        let laws: Vec<ExposureLaw> = CdsContract::study_contracts()
            .iter()
            .map(|c| margin_period_exposure(c, study_evaluation_date(), 10).unwrap())
            .collect();
        let d = portfolio_exposure_law(&[0.0; 4], &laws).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.atoms()[0].value, 0.0);
        assert!(portfolio_exposure_law(&[1.0; 3], &laws).is_err());
    }

    #[test]
    fn loss_transforms() {
        let d = DiscreteDistribution::new([(-1.0, 0.5), (-2.0, 0.5)]).unwrap();
        let t = loss_transform(&d, LossTransform::NegPosPart).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.atoms()[0].value, 0.0);
        let p = DiscreteDistribution::degenerate(3.0).unwrap();
        assert_eq!(loss_transform(&p, LossTransform::NegPosPart).unwrap().atoms()[0].value, -3.0);
        assert_eq!(loss_transform(&p, LossTransform::Neg).unwrap().atoms()[0].value, -3.0);
    }
}
