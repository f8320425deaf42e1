//! The default waterfall: variation and initial margin, member net
//! exposures, default fund sizing and allocation, effective loss and the
//! unfunded calls on surviving members.
//!
//! Amounts are in portfolio currency with a unit discount factor. Member
//! values are seen from the CCP: `V > 0` means the member owes the CCP.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cds::{loss_transform, LossTransform};
use crate::prob::{DiscreteDistribution, ProbError, RiskMeasureKind, RiskMeasureSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaterfallError {
    #[error("invalid waterfall configuration: {0}")]
    Config(String),
    #[error("invalid exposure samples: {0}")]
    Samples(String),
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Cds(#[from] crate::cds::CdsError),
}

pub type Result<T> = std::result::Result<T, WaterfallError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ImMethod {
    /// `rho(-(X)^+)`
    PosPart,
    /// `(rho(-X))^+`
    PosOfRho,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExposureMode {
    /// Nets the liquidation value and accrued payments.
    Netted,
    /// No recovery from liquidation and no accrued payments.
    Regulatory,
}

/// Tenors in business days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tenors {
    /// Step of the fundamental grid.
    pub step: u32,
    /// Margin period of risk.
    pub margin_period: u32,
    /// Default fund period.
    pub fund_period: u32,
}

impl Default for Tenors {
    fn default() -> Self {
        Self {
            step: 1,
            margin_period: 10,
            fund_period: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaterfallConfig {
    pub alpha_im: f64,
    pub beta_df: f64,
    pub im_method: ImMethod,
    /// Risk measure for initial margin, evaluated at `alpha_im`.
    pub im_measure: RiskMeasureKind,
    /// Risk measure for the default fund, evaluated at `beta_df`. Must be
    /// AVaR: the allocation uses its extreme density.
    pub df_measure: RiskMeasureKind,
    /// Fraction of the marked value recovered by liquidating a defaulter.
    pub liquidation_recovery: f64,
    pub skin_in_game: f64,
    pub tenors: Tenors,
    pub exposure_mode: ExposureMode,
    /// Upper bound on a single member exposure; `None` uses ten times the
    /// book's long notional.
    pub exposure_cap: Option<f64>,
}

impl Default for WaterfallConfig {
    fn default() -> Self {
        Self {
            alpha_im: 0.01,
            beta_df: 0.01,
            im_method: ImMethod::PosPart,
            im_measure: RiskMeasureKind::Avar,
            df_measure: RiskMeasureKind::Avar,
            liquidation_recovery: 0.4,
            skin_in_game: 0.0,
            tenors: Tenors::default(),
            exposure_mode: ExposureMode::Netted,
            exposure_cap: None,
        }
    }
}

fn check_level(what: &str, level: f64) -> Result<()> {
    if !(level > 0.0 && level <= 1.0) {
        return Err(WaterfallError::Config(format!("{what} = {level} outside (0, 1]")));
    }
    Ok(())
}

impl WaterfallConfig {
    pub fn validate(&self) -> Result<()> {
        check_level("alpha_im", self.alpha_im)?;
        check_level("beta_df", self.beta_df)?;
        if self.df_measure != RiskMeasureKind::Avar {
            return Err(WaterfallError::Config(format!(
                "default fund measure must be AVAR, got {}",
                self.df_measure
            )));
        }
        if !(0.0..=1.0).contains(&self.liquidation_recovery) {
            return Err(WaterfallError::Config(format!(
                "liquidation_recovery = {} outside [0, 1]",
                self.liquidation_recovery
            )));
        }
        if !(self.skin_in_game.is_finite() && self.skin_in_game >= 0.0) {
            return Err(WaterfallError::Config(format!(
                "skin_in_game = {} must be nonnegative",
                self.skin_in_game
            )));
        }
        let t = self.tenors;
        if t.step == 0 || t.margin_period % t.step != 0 || t.fund_period % t.step != 0 {
            return Err(WaterfallError::Config(format!(
                "tenors {t:?}: the step must divide both the margin and fund periods"
            )));
        }
        if t.fund_period == 0 {
            return Err(WaterfallError::Config("fund period must be positive".into()));
        }
        if let Some(cap) = self.exposure_cap {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(WaterfallError::Config(format!("exposure cap {cap} must be positive")));
            }
        }
        Ok(())
    }

    pub fn im_spec(&self) -> Result<RiskMeasureSpec> {
        Ok(RiskMeasureSpec::new(self.im_measure, self.alpha_im)?)
    }

    /// Cap for a book with the given long notional.
    pub fn cap_for(&self, long_notional: f64) -> f64 {
        self.exposure_cap.unwrap_or(10.0 * long_notional)
    }
}

/// `VM_{t_k} = V_{t_{k-1}}`.
pub fn variation_margin(member_value_prev: f64) -> f64 {
    member_value_prev
}

/// Initial margin from the law of the member cash flow `X`.
pub fn initial_margin_with(
    x_law: &DiscreteDistribution,
    method: ImMethod,
    measure: RiskMeasureSpec,
) -> Result<f64> {
    let im = match method {
        ImMethod::PosPart => measure.evaluate(&loss_transform(x_law, LossTransform::NegPosPart)?)?,
        ImMethod::PosOfRho => measure.evaluate(&loss_transform(x_law, LossTransform::Neg)?)?,
    };
    // a loss-only law has risk >= 0; the floor also removes a -0.0
    Ok(im.max(0.0))
}

pub fn initial_margin(x_law: &DiscreteDistribution, cfg: &WaterfallConfig) -> Result<f64> {
    cfg.validate()?;
    initial_margin_with(x_law, cfg.im_method, cfg.im_spec()?)
}

/// A defaulting member's realized quantities at its default date `t_m`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DefaultMarks {
    /// `V_{t_m + delta}`: value of the surviving positions after the margin period.
    pub value_after: f64,
    /// Payments due to the CCP during the margin period (coupons, protection payoffs).
    pub payments: f64,
    pub vm: f64,
    pub im: f64,
}

impl DefaultMarks {
    /// `V - V^ - VM - IM` with `V^ = R_liq V`, not floored.
    pub fn shortfall(&self, liquidation_recovery: f64) -> f64 {
        self.value_after - liquidation_recovery * self.value_after - self.vm - self.im
    }
}

/// The positive-part summand of a member defaulting at `t_m`.
pub fn exposure_summand(marks: &DefaultMarks, cfg: &WaterfallConfig) -> f64 {
    let raw = match cfg.exposure_mode {
        ExposureMode::Netted => marks.shortfall(cfg.liquidation_recovery) + marks.payments,
        ExposureMode::Regulatory => marks.value_after - marks.vm - marks.im,
    };
    raw.max(0.0)
}

/// Net exposure of one member over the fund period `(start, end]` (steps).
///
/// Zero unless the member defaults in the period; `marks_at(t_m)` supplies
/// the realized quantities at its default step. Capped at `cap`.
pub fn member_period_exposure(
    default_step: Option<usize>,
    start: usize,
    end: usize,
    marks_at: impl FnOnce(usize) -> DefaultMarks,
    cfg: &WaterfallConfig,
    cap: f64,
) -> f64 {
    match default_step {
        Some(t) if t > start && t <= end => exposure_summand(&marks_at(t), cfg).min(cap),
        _ => 0.0,
    }
}

/// Member net exposures over Monte Carlo paths, stored sparsely: paths on
/// which every member has zero exposure are only counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureSamples {
    members: usize,
    paths: u64,
    /// `(path index, exposures per member)` for paths with some exposure,
    /// in increasing path order.
    rows: Vec<(u64, Vec<f64>)>,
}

impl ExposureSamples {
    pub fn new(members: usize, paths: u64) -> Result<Self> {
        if members == 0 || paths == 0 {
            return Err(WaterfallError::Samples(
                "need at least one member and one path".into(),
            ));
        }
        Ok(Self {
            members,
            paths,
            rows: Vec::new(),
        })
    }

    /// From per-member columns of equal length (all paths listed).
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let members = columns.len();
        let paths = columns.first().map_or(0, Vec::len);
        if let Some(c) = columns.iter().find(|c| c.len() != paths) {
            return Err(WaterfallError::LengthMismatch {
                expected: paths,
                got: c.len(),
            });
        }
        let mut s = Self::new(members, paths as u64)?;
        for p in 0..paths {
            s.push(p as u64, columns.iter().map(|c| c[p]).collect())?;
        }
        Ok(s)
    }

    /// Records `exposures` for `path`; all-zero rows are dropped. Paths must
    /// arrive in increasing order.
    pub fn push(&mut self, path: u64, exposures: Vec<f64>) -> Result<()> {
        if exposures.len() != self.members {
            return Err(WaterfallError::LengthMismatch {
                expected: self.members,
                got: exposures.len(),
            });
        }
        if path >= self.paths {
            return Err(WaterfallError::Samples(format!(
                "path {path} beyond the declared {} paths",
                self.paths
            )));
        }
        if self.rows.last().is_some_and(|(last, _)| *last >= path) {
            return Err(WaterfallError::Samples(format!("path {path} out of order")));
        }
        if let Some(bad) = exposures.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(WaterfallError::Samples(format!(
                "exposure {bad} on path {path} is not a nonnegative number"
            )));
        }
        if exposures.iter().any(|&e| e > 0.0) {
            self.rows.push((path, exposures));
        }
        Ok(())
    }

    pub fn members(&self) -> usize {
        self.members
    }

    pub fn paths(&self) -> u64 {
        self.paths
    }

    /// Paths with some positive exposure.
    pub fn nonzero_rows(&self) -> &[(u64, Vec<f64>)] {
        &self.rows
    }

    /// Exposures on `path` (zeros if not stored).
    pub fn path(&self, path: u64) -> Vec<f64> {
        match self.rows.binary_search_by_key(&path, |(p, _)| *p) {
            Ok(k) => self.rows[k].1.clone(),
            Err(_) => vec![0.0; self.members],
        }
    }

    /// Aggregate exposure `sum_i EP^i` on every stored path.
    pub fn totals(&self) -> Vec<f64> {
        self.rows.iter().map(|(_, e)| e.iter().sum()).collect()
    }

    /// Path mean of each member's exposure.
    pub fn means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.members];
        for (_, e) in &self.rows {
            for (a, x) in m.iter_mut().zip(e) {
                *a += x;
            }
        }
        m.iter().map(|x| x / self.paths as f64).collect()
    }

    /// Empirical law of `-sum_i EP^i` with uniform path weights.
    pub fn loss_distribution(&self) -> Result<DiscreteDistribution> {
        let n = self.paths as f64;
        let zeros = self.paths - self.rows.len() as u64;
        let mut totals = self.totals();
        totals.sort_by(|a, b| a.total_cmp(b));
        let mut pairs: Vec<(f64, f64)> = Vec::new();
        let mut k = 0;
        while k < totals.len() {
            let v = totals[k];
            let run = totals[k..].iter().take_while(|&&x| x == v).count();
            pairs.push((-v, run as f64 / n));
            k += run;
        }
        if zeros > 0 {
            pairs.push((0.0, zeros as f64 / n));
        }
        Ok(DiscreteDistribution::new(pairs)?)
    }
}

/// Total default fund and its allocation to members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefaultFund {
    pub total: f64,
    pub allocation: Vec<f64>,
    /// Aggregate loss at the quantile defining the tail.
    pub quantile_loss: f64,
    /// Share of the quantile paths' weight `1/beta` carried by the density.
    pub quantile_split: f64,
}

/// `DF = AVaR_beta(-sum_i EP^i)` on the empirical path law, allocated as
/// `DF^i = E[Z* EP^i]` with `Z*` the extreme density of the aggregate.
///
/// Paths are ranked by aggregate loss with exact ties; the weight split on
/// the quantile loss level is shared equally by every path at that level.
pub fn default_fund(samples: &ExposureSamples, beta: f64) -> Result<DefaultFund> {
    check_level("beta_df", beta)?;
    let n = samples.paths as f64;
    let totals = samples.totals();
    let mut order: Vec<usize> = (0..totals.len()).collect();
    order.sort_by(|&a, &b| totals[b].total_cmp(&totals[a]).then(a.cmp(&b)));

    let mut weights = vec![0.0; totals.len()];
    let mut above = 0usize;
    let mut quantile_loss = 0.0;
    let mut quantile_split = 0.0;
    let mut k = 0;
    while k < order.len() {
        let level = totals[order[k]];
        let run = order[k..].iter().take_while(|&&p| totals[p] == level).count();
        let mass_below = above as f64 / n;
        let mass_here = run as f64 / n;
        if mass_below + mass_here >= beta - crate::prob::LEVEL_SLACK {
            let eps = crate::prob::quantile_atom_split(beta, mass_below, mass_here);
            for &p in &order[k..k + run] {
                weights[p] = eps / beta;
            }
            quantile_loss = level;
            quantile_split = eps;
            break;
        }
        for &p in &order[k..k + run] {
            weights[p] = 1.0 / beta;
        }
        above += run;
        k += run;
    }

    let mut allocation = vec![0.0; samples.members];
    for ((_, eps), w) in samples.rows.iter().zip(&weights) {
        if *w == 0.0 {
            continue;
        }
        for (a, e) in allocation.iter_mut().zip(eps) {
            *a += w * e;
        }
    }
    for a in &mut allocation {
        *a /= n;
    }
    // an empty float sum is -0.0
    let total = totals.iter().zip(&weights).map(|(t, w)| t * w).sum::<f64>() / n + 0.0;
    Ok(DefaultFund {
        total,
        allocation,
        quantile_loss,
        quantile_split,
    })
}

/// `EL = (sum_defaulters (V - V^ - VM - IM) - SG - DF)^+`; the member terms
/// are summed before the positive part is taken.
pub fn effective_loss(shortfalls: &[f64], skin_in_game: f64, df_total: f64) -> f64 {
    (shortfalls.iter().sum::<f64>() - skin_in_game - df_total).max(0.0)
}

/// Pro-rata unfunded calls on surviving members, with `0/0 = 0`.
pub fn unfunded_df(el: f64, df_contributions: &[f64], alive: &[bool]) -> Result<Vec<f64>> {
    if df_contributions.len() != alive.len() {
        return Err(WaterfallError::LengthMismatch {
            expected: df_contributions.len(),
            got: alive.len(),
        });
    }
    let denom: f64 = df_contributions
        .iter()
        .zip(alive)
        .filter(|(_, &a)| a)
        .map(|(d, _)| d)
        .sum();
    Ok(df_contributions
        .iter()
        .zip(alive)
        .map(|(&d, &a)| {
            if a && denom > 0.0 {
                el * d / denom
            } else {
                0.0
            }
        })
        .collect())
}

/// One member's ledger at an evaluation date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberAccounts {
    pub member: usize,
    pub vm: f64,
    pub im: f64,
    pub df_contribution: f64,
    pub udf_call: f64,
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaterfallReport {
    pub evaluation_date: NaiveDate,
    pub df_total: f64,
    pub effective_loss: f64,
    pub members: Vec<MemberAccounts>,
}

impl WaterfallReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// One row per member: date, member, vm, im, df, udf, alive.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("evaluation_date,member,vm,im,df_contribution,udf_call,alive\n");
        for m in &self.members {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.evaluation_date, m.member, m.vm, m.im, m.df_contribution, m.udf_call, m.alive
            ));
        }
        out
    }
}

/// Indices of the `count` largest exposures, largest first (ties by index).
pub fn largest_members(exposures: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..exposures.len()).collect();
    idx.sort_by(|&a, &b| exposures[b].total_cmp(&exposures[a]).then(a.cmp(&b)));
    idx.truncate(count);
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::avar;

    #[test]
    fn netted_summand_example() {
        let marks = DefaultMarks {
            value_after: 10.0,
            payments: 0.0,
            vm: 1.0,
            im: 0.5,
        };
        let cfg = WaterfallConfig::default();
        assert!((exposure_summand(&marks, &cfg) - 4.5).abs() < 1e-15);
        let reg = WaterfallConfig {
            exposure_mode: ExposureMode::Regulatory,
            ..cfg.clone()
        };
        assert!((exposure_summand(&marks, &reg) - 8.5).abs() < 1e-15);
        assert_eq!(member_period_exposure(None, 0, 30, |_| marks, &cfg, 100.0), 0.0);
        assert_eq!(member_period_exposure(Some(31), 0, 30, |_| marks, &cfg, 100.0), 0.0);
        assert_eq!(member_period_exposure(Some(3), 0, 30, |_| marks, &cfg, 2.0), 2.0);
    }

    #[test]
    fn effective_loss_and_udf_examples() {
        assert_eq!(effective_loss(&[], 0.0, 0.0), 0.0);
        assert_eq!(effective_loss(&[5.0, 3.0], 1.0, 4.0), 3.0);
        assert_eq!(effective_loss(&[5.0, 3.0], 1.0, 10.0), 0.0);
        let u = unfunded_df(3.0, &[2.0, 1.0, 1.0, 5.0], &[true, true, true, false]).unwrap();
        assert_eq!(u, vec![1.5, 0.75, 0.75, 0.0]);
        assert_eq!(unfunded_df(3.0, &[2.0, 1.0], &[false, false]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(unfunded_df(0.0, &[2.0, 1.0], &[true, true]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn default_fund_matches_avar_of_aggregate() {
        let a = vec![0.0, 1.0, 2.0, 2.0, 0.0, 5.0, 0.0, 1.0, 3.0, 0.0];
        let b = vec![1.0, 0.0, 2.0, 2.0, 0.0, 1.0, 0.0, 0.5, 0.0, 0.0];
        let s = ExposureSamples::from_columns(&[a, b]).unwrap();
        for beta in [0.05, 0.1, 0.15, 0.3, 0.5, 1.0] {
            let df = default_fund(&s, beta).unwrap();
            let oracle = avar(&s.loss_distribution().unwrap(), beta).unwrap();
            assert!((df.total - oracle).abs() < 1e-12, "beta {beta}: {} vs {oracle}", df.total);
            let sum: f64 = df.allocation.iter().sum();
            assert!((sum - df.total).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_funds() {
        let s = ExposureSamples::from_columns(&[vec![0.0; 5], vec![0.0; 5]]).unwrap();
        let df = default_fund(&s, 0.1).unwrap();
        assert_eq!(df.total, 0.0);
        assert_eq!(df.allocation, vec![0.0, 0.0]);
        let one = ExposureSamples::from_columns(&[vec![1.0, 0.0, 4.0, 2.0]]).unwrap();
        let df = default_fund(&one, 0.5).unwrap();
        assert_eq!(df.allocation[0], df.total);
        assert!(default_fund(&one, 0.0).is_err());
    }

    #[test]
    fn samples_validation() {
        let mut s = ExposureSamples::new(2, 5).unwrap();
        assert!(s.push(0, vec![1.0]).is_err());
        assert!(s.push(0, vec![-1.0, 0.0]).is_err());
        s.push(2, vec![1.0, 0.0]).unwrap();
        assert!(s.push(1, vec![1.0, 0.0]).is_err());
        assert!(s.push(5, vec![1.0, 0.0]).is_err());
        s.push(3, vec![0.0, 0.0]).unwrap();
        assert_eq!(s.nonzero_rows().len(), 1);
        assert_eq!(s.path(3), vec![0.0, 0.0]);
        assert_eq!(s.path(2), vec![1.0, 0.0]);
    }

    #[test]
    fn config_validation() {
        assert!(WaterfallConfig::default().validate().is_ok());
        let bad = [
            WaterfallConfig { alpha_im: 0.0, ..Default::default() },
            WaterfallConfig { beta_df: 1.5, ..Default::default() },
            WaterfallConfig { liquidation_recovery: -0.1, ..Default::default() },
            WaterfallConfig { skin_in_game: -1.0, ..Default::default() },
            WaterfallConfig { df_measure: RiskMeasureKind::Var, ..Default::default() },
            WaterfallConfig {
                tenors: Tenors { step: 3, margin_period: 10, fund_period: 30 },
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn pure_gain_has_no_margin() {
        let law = DiscreteDistribution::degenerate(-5.0).unwrap();
        let cfg = WaterfallConfig {
            im_measure: RiskMeasureKind::Var,
            ..Default::default()
        };
        assert_eq!(initial_margin(&law, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn report_serializes() {
        let r = WaterfallReport {
            evaluation_date: NaiveDate::from_ymd_opt(2015, 9, 22).unwrap(),
            df_total: 1.0,
            effective_loss: 0.0,
            members: vec![MemberAccounts {
                member: 1,
                vm: 0.0,
                im: 0.2,
                df_contribution: 1.0,
                udf_call: 0.0,
                alive: true,
            }],
        };
        assert!(r.to_json().unwrap().contains("\"df_total\": 1.0"));
        assert_eq!(r.to_csv().lines().count(), 2);
    }
}
