//! Initial margin from the closed-form exposure law.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, Result};
use crate::cds::{
    loss_transform, portfolio_exposure_law, ContractMarks, ExposureLaw, LossTransform,
};
use crate::prob::{DiscreteDistribution, RiskMeasureKind, RiskMeasureSpec, LEVEL_SLACK};
use crate::waterfall::{initial_margin_with, ImMethod};

/// Exposure laws of each contract over the margin period starting at `offset`.
pub fn contract_laws(marks: &[ContractMarks], offset: u32, delta: u32) -> Vec<ExposureLaw> {
    marks.iter().map(|m| m.exposure_law(offset, delta)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImRow {
    /// 1-based portfolio (member) index.
    pub portfolio: usize,
    pub measure: RiskMeasureKind,
    pub alpha: f64,
    pub im: f64,
}

/// VaR of the loss law is piecewise constant in the level; one piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarSegment {
    /// VaR equals `var` for levels in `[alpha_from, alpha_to)`.
    pub alpha_from: f64,
    pub alpha_to: f64,
    pub var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImStudy {
    pub evaluation_date: NaiveDate,
    pub im_method: ImMethod,
    pub rows: Vec<ImRow>,
    pub var_plateaus: Vec<Vec<VarSegment>>,
    /// Law of `-(X)^+` per portfolio.
    pub loss_laws: Vec<DiscreteDistribution>,
}

impl ImStudy {
    /// `portfolio,measure,alpha,im` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("portfolio,measure,alpha,im\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.portfolio, r.measure, r.alpha, r.im));
        }
        out
    }

    /// `portfolio,value,prob` rows of every loss law.
    pub fn distributions_csv(&self) -> String {
        let mut out = String::from("portfolio,value,prob\n");
        for (i, law) in self.loss_laws.iter().enumerate() {
            for a in law.atoms() {
                out.push_str(&format!("{},{},{:e}\n", i + 1, a.value, a.prob));
            }
        }
        out
    }
}

/// Pieces of `alpha -> VaR_alpha(L)` over `(0, 1)`.
pub fn var_plateaus(loss: &DiscreteDistribution) -> Vec<VarSegment> {
    let mut out = Vec::new();
    let mut from = 0.0;
    let mut cum = 0.0;
    for a in loss.atoms() {
        cum += a.prob;
        let to = cum.min(1.0);
        if to > from + LEVEL_SLACK {
            out.push(VarSegment {
                alpha_from: from,
                alpha_to: to,
                var: -a.value + 0.0,
            });
            from = to;
        }
    }
    out
}

/// Per-portfolio IM over the level grid for VaR and AVaR at the evaluation date.
pub fn run_im_study(cfg: &ExperimentConfig) -> Result<ImStudy> {
    cfg.validate()?;
    let marks = cfg
        .contracts
        .iter()
        .map(|c| ContractMarks::new(c, cfg.evaluation_date))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let laws = contract_laws(&marks, 0, cfg.waterfall.tenors.margin_period);
    let portfolios = cfg
        .im_portfolios
        .clone()
        .unwrap_or_else(|| cfg.positions.resolve().rows());
    let mut rows = Vec::new();
    let mut var_plateaus_out = Vec::new();
    let mut loss_laws = Vec::new();
    for (i, row) in portfolios.iter().enumerate() {
        let x = portfolio_exposure_law(row, &laws)?;
        for measure in [RiskMeasureKind::Var, RiskMeasureKind::Avar] {
            for &alpha in &cfg.alpha_grid {
                let spec = RiskMeasureSpec::new(measure, alpha)?;
                rows.push(ImRow {
                    portfolio: i + 1,
                    measure,
                    alpha,
                    im: initial_margin_with(&x, cfg.waterfall.im_method, spec)?,
                });
            }
        }
        let loss = loss_transform(&x, LossTransform::NegPosPart)?;
        var_plateaus_out.push(var_plateaus(&loss));
        loss_laws.push(loss);
    }
    Ok(ImStudy {
        evaluation_date: cfg.evaluation_date,
        im_method: cfg.waterfall.im_method,
        rows,
        var_plateaus: var_plateaus_out,
        loss_laws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::var;

    #[test]
    fn plateaus_agree_with_var() {
        let loss = DiscreteDistribution::new([(-3.0, 0.1), (-1.0, 0.2), (0.0, 0.7)]).unwrap();
        let segs = var_plateaus(&loss);
        assert_eq!(segs.len(), 3);
        for s in &segs {
            for t in [0.0, 0.25, 0.5, 0.75] {
                let a = s.alpha_from + t * (s.alpha_to - s.alpha_from);
                if a > 0.0 {
                    assert_eq!(var(&loss, a).unwrap(), s.var, "alpha {a}");
                }
            }
        }
    }

    #[test]
    fn zero_book_has_zero_margin() {
        let cfg = ExperimentConfig {
            im_portfolios: Some(vec![vec![0.0; 4]]),
            ..Default::default()
        };
        let study = run_im_study(&cfg).unwrap();
        assert!(study.rows.iter().all(|r| r.im == 0.0));
    }
}
