//! The default fund study.
//!
//! Scenarios are pairs (migration path `p`, reference draw `r`); reference
//! draw `r` of path `p` uses substream `p * paths_reference + r`, so every
//! scenario is reproducible in isolation. A member defaulting at step `m`
//! (business day `d = m * step`) contributes
//!
//! ```text
//! EP = ( (1 - R_liq) V_{d+delta} + D - VM_d - IM_d )^+      netted
//! EP = ( V_{d+delta} - VM_d - IM_d )^+                      regulatory
//! ```
//!
//! where `VM_d = V_{d-1}`, `V` marks only the contracts whose reference name
//! is still alive, `D` collects protection payoffs of names defaulting in
//! the margin period and any coupon falling due in it, and `IM_d` is the
//! closed-form margin of the positions still alive at `d`.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::im::contract_laws;
use super::reference::default_days_for;
use super::{ExperimentConfig, Result, SimulationError};
use crate::cds::{portfolio_exposure_law, ContractMarks, ExposureLaw, PositionMatrix};
use crate::migration::simulate_default_times;
use crate::prob::RiskMeasureSpec;
use crate::rng::{substream, StreamDomain};
use crate::waterfall::{
    default_fund, effective_loss, initial_margin_with, largest_members, unfunded_df,
    DefaultFund, ExposureMode, ExposureSamples,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverProbabilities {
    /// `P(DF >= max_i EP^i)`
    pub cover1: f64,
    /// `P(DF >=` sum of the two largest `EP^i)`
    pub cover2: f64,
    /// `P(DF >= sum_i EP^i)`
    pub cover_all: f64,
    /// `P(DF^i* >= EP^i*)` for the member `i*` with the largest exposure.
    pub self_cover1: f64,
    /// `P(DF^i1 + DF^i2 >= EP^i1 + EP^i2)` for the two largest exposures.
    pub self_cover2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub alpha: f64,
    pub beta: f64,
    pub df_total: f64,
    /// Batch-means standard error of `df_total`.
    pub df_std_error: f64,
    pub total_im: f64,
    /// `DF / sum_i IM^i`; absent when no margin is posted.
    pub ratio: Option<f64>,
    pub ratio_std_error: Option<f64>,
    pub allocation: Vec<f64>,
    pub covers: CoverProbabilities,
    /// Cover-one / cover-two baseline fund sizes.
    pub c1: f64,
    pub c2: f64,
    pub c1_ratio: Option<f64>,
    pub c2_ratio: Option<f64>,
    /// Mean effective loss per scenario, summed over default dates.
    pub mean_effective_loss: f64,
    /// Probability that some default date produces a positive effective loss.
    pub prob_effective_loss: f64,
    pub mean_unfunded_call: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImByAlpha {
    pub alpha: f64,
    pub per_member: Vec<f64>,
    pub total: f64,
}

/// Waterfall identities checked on every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `max |sum_i DF^i - DF|` over cells.
    pub max_allocation_gap: f64,
    pub min_df_total: f64,
    /// Cells violating `CoverAll <= Cover2 <= Cover1`.
    pub cover_order_violations: usize,
    /// Default events with a positive surviving contribution.
    pub udf_checks: u64,
    /// Those where `sum_i uDF^i` misses `EL` by more than `1e-9 (1 + EL)`.
    pub udf_violations: u64,
    pub max_udf_gap: f64,
    /// `max |sum_i V^i|` over the marks used.
    pub max_matched_book_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub members: usize,
    pub contracts: usize,
    pub dependence: crate::migration::DependenceType,
    pub initial_ratings: Vec<u8>,
    pub paths_migration: usize,
    pub paths_reference: usize,
    pub seed: u64,
    pub calibration_error: Option<f64>,
    /// Fraction of migration paths with a member default in the period.
    pub default_path_fraction: f64,
    pub im: Vec<ImByAlpha>,
    pub cells: Vec<GridCell>,
    pub identities: IdentityReport,
}

impl StudyResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("study results serialize")
    }

    pub fn cell(&self, alpha: f64, beta: f64) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.alpha == alpha && c.beta == beta)
    }

    fn grid_csv(&self, value: impl Fn(&GridCell) -> String) -> String {
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        for c in &self.cells {
            if !alphas.contains(&c.alpha) {
                alphas.push(c.alpha);
            }
            if !betas.contains(&c.beta) {
                betas.push(c.beta);
            }
        }
        let mut out = String::from("alpha");
        for b in &betas {
            out.push_str(&format!(",beta={b}"));
        }
        out.push('\n');
        for a in &alphas {
            out.push_str(&a.to_string());
            for b in &betas {
                out.push(',');
                if let Some(c) = self.cell(*a, *b) {
                    out.push_str(&value(c));
                }
            }
            out.push('\n');
        }
        out
    }

    /// DF/IM ratios: one row per alpha, one column per beta.
    pub fn ratio_grid_csv(&self) -> String {
        self.grid_csv(|c| c.ratio.map_or(String::new(), |r| r.to_string()))
    }

    pub fn cover_csv(&self) -> String {
        let mut out = String::from(
            "alpha,beta,df_total,df_std_error,cover1,cover2,cover_all,self_cover1,self_cover2,c1,c2\n",
        );
        for c in &self.cells {
            let v = c.covers;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                c.alpha,
                c.beta,
                c.df_total,
                c.df_std_error,
                v.cover1,
                v.cover2,
                v.cover_all,
                v.self_cover1,
                v.self_cover2,
                c.c1,
                c.c2
            ));
        }
        out
    }

    /// One row per cell and member: margin and fund contribution.
    pub fn allocation_csv(&self) -> String {
        let mut out = String::from("alpha,beta,member,im,df_contribution\n");
        for c in &self.cells {
            let im = self.im.iter().find(|x| x.alpha == c.alpha);
            for (i, d) in c.allocation.iter().enumerate() {
                let m = im.map_or(0.0, |x| x.per_member[i]);
                out.push_str(&format!("{},{},{},{},{}\n", c.alpha, c.beta, i + 1, m, d));
            }
        }
        out
    }
}

/// Baseline fund sizes: path means of the largest exposure (cover one) and
/// of the sum of the two largest (cover two).
pub fn cover1_cover2_baseline(samples: &ExposureSamples) -> (f64, f64) {
    let mut c1 = 0.0;
    let mut c2 = 0.0;
    for (_, e) in samples.nonzero_rows() {
        let top = largest_members(e, 2);
        c1 += e[top[0]];
        c2 += top.iter().map(|&i| e[i]).sum::<f64>();
    }
    let n = samples.paths() as f64;
    (c1 / n, c2 / n)
}

/// A member default inside one scenario, before margin is netted.
#[derive(Debug, Clone, Copy)]
struct Event {
    member: u32,
    step: u32,
    /// `(1 - R_liq) V_after + D - VM`
    netted: f64,
    /// `V_after - VM`
    regulatory: f64,
    /// `(1 - R_liq) V_after - VM`: the member term of the effective loss.
    shortfall: f64,
    /// Contracts whose reference name is alive at the default date.
    alive: u32,
}

#[derive(Debug, Clone)]
struct Scenario {
    index: u64,
    events: Vec<Event>,
}

type ImKey = (u32, u32, u32);

struct Engine {
    positions: PositionMatrix,
    marks: Vec<ContractMarks>,
    step: u32,
    delta: u32,
    horizon: usize,
    liquidation_recovery: f64,
    /// `[j][d]`: pre-default upfront at business day `d`, for `d` in `-1..=max_day`
    /// (stored at `d + 1`).
    upfront: Vec<Vec<f64>>,
    /// `[j][d]`: protection payoff of a default on day `d`.
    payoff: Vec<Vec<f64>>,
    /// `[j][d]`: coupon falling due in `(d, d + delta]`.
    premium: Vec<Vec<f64>>,
}

impl Engine {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let positions = cfg.positions.resolve();
        let marks = cfg
            .contracts
            .iter()
            .map(|c| ContractMarks::new(c, cfg.evaluation_date))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let t = cfg.waterfall.tenors;
        let horizon = (t.fund_period / t.step) as usize;
        let max_day = t.fund_period + t.margin_period;
        let upfront = marks
            .iter()
            .map(|m| (-1..=max_day as i64).map(|d| m.upfront(d)).collect())
            .collect();
        let payoff = marks
            .iter()
            .map(|m| (0..=max_day).map(|d| m.default_payoff(d)).collect())
            .collect();
        let premium = marks
            .iter()
            .map(|m| (0..=max_day).map(|d| m.premium_due(d, t.margin_period)).collect())
            .collect();
        Ok(Self {
            positions,
            marks,
            step: t.step,
            delta: t.margin_period,
            horizon,
            liquidation_recovery: cfg.waterfall.liquidation_recovery,
            upfront,
            payoff,
            premium,
        })
    }

    fn upfront_at(&self, j: usize, day: i64) -> f64 {
        self.upfront[j][(day + 1) as usize]
    }

    /// Event for `member` defaulting at `step`, given reference default days.
    /// Also returns `|sum_i V^i|` at the two marks used.
    fn event(&self, member: usize, step: usize, days: &[u32]) -> (Event, f64) {
        let d = (step as u32) * self.step;
        let end = d + self.delta;
        let row = self.positions.row(member);
        let (mut vm, mut after, mut pay) = (0.0, 0.0, 0.0);
        let mut alive = 0u32;
        for (j, (&h, &n)) in row.iter().zip(days).enumerate() {
            if n >= d {
                vm += h * self.upfront_at(j, d as i64 - 1);
            }
            if n > d {
                alive |= 1 << j;
            }
            if n > end {
                after += h * self.upfront_at(j, end as i64);
                pay -= h * self.premium[j][d as usize];
            } else if n >= d {
                pay += h * self.payoff[j][n as usize];
            }
        }
        let mut gap: f64 = 0.0;
        for (mark, alive_if) in [(d as i64 - 1, d), (end as i64, end + 1)] {
            let total: f64 = (0..self.positions.members())
                .map(|i| {
                    self.positions
                        .row(i)
                        .iter()
                        .zip(days)
                        .enumerate()
                        .filter(|(_, (_, &n))| n >= alive_if)
                        .map(|(j, (h, _))| h * self.upfront_at(j, mark))
                        .sum::<f64>()
                })
                .sum();
            gap = gap.max(total.abs());
        }
        let kept = (1.0 - self.liquidation_recovery) * after;
        (
            Event {
                member: member as u32,
                step: step as u32,
                netted: kept + pay - vm,
                regulatory: after - vm,
                shortfall: kept - vm,
                alive,
            },
            gap,
        )
    }

    fn laws_at_step(&self, step: u32) -> Vec<ExposureLaw> {
        contract_laws(&self.marks, step * self.step, self.delta)
    }

    /// Margin of `member` at `step` over the contracts in `alive`, per level.
    fn margins(&self, key: ImKey, laws: &[ExposureLaw], specs: &[(crate::waterfall::ImMethod, RiskMeasureSpec)]) -> Result<Vec<f64>> {
        let (member, _, alive) = key;
        let row: Vec<f64> = self
            .positions
            .row(member as usize)
            .iter()
            .enumerate()
            .map(|(j, &h)| if alive >> j & 1 == 1 { h } else { 0.0 })
            .collect();
        let law = portfolio_exposure_law(&row, laws)?;
        specs
            .iter()
            .map(|&(method, spec)| Ok(initial_margin_with(&law, method, spec)?))
            .collect()
    }

    /// Margins for every key, computed in parallel; ordered like `keys`.
    fn margin_table(
        &self,
        keys: &BTreeSet<ImKey>,
        specs: &[(crate::waterfall::ImMethod, RiskMeasureSpec)],
    ) -> Result<std::collections::BTreeMap<ImKey, Vec<f64>>> {
        let steps: BTreeSet<u32> = keys.iter().map(|k| k.1).collect();
        let laws: std::collections::BTreeMap<u32, Vec<ExposureLaw>> =
            steps.into_iter().map(|s| (s, self.laws_at_step(s))).collect();
        let keys: Vec<ImKey> = keys.iter().copied().collect();
        let values = keys
            .par_iter()
            .map(|&k| self.margins(k, &laws[&k.1], specs))
            .collect::<Result<Vec<_>>>()?;
        Ok(keys.into_iter().zip(values).collect())
    }
}

fn exposure(ev: &Event, im: f64, mode: ExposureMode, cap: f64) -> f64 {
    let raw = match mode {
        ExposureMode::Netted => ev.netted,
        ExposureMode::Regulatory => ev.regulatory,
    };
    (raw - im).max(0.0).min(cap)
}

fn ratio(x: f64, total_im: f64) -> Option<f64> {
    (total_im > 0.0).then(|| x / total_im)
}

fn covers(samples: &ExposureSamples, fund: &DefaultFund) -> CoverProbabilities {
    let mut miss = [0u64; 5];
    for (_, e) in samples.nonzero_rows() {
        let top = largest_members(e, 2);
        let max = e[top[0]];
        let two: f64 = top.iter().map(|&i| e[i]).sum();
        let all: f64 = e.iter().sum();
        let own1 = fund.allocation[top[0]];
        let own2: f64 = top.iter().map(|&i| fund.allocation[i]).sum();
        let checks = [
            fund.total >= max,
            fund.total >= two,
            fund.total >= all,
            own1 >= max,
            own2 >= two,
        ];
        for (m, ok) in miss.iter_mut().zip(checks) {
            *m += u64::from(!ok);
        }
    }
    let n = samples.paths() as f64;
    let p = |k: usize| 1.0 - miss[k] as f64 / n;
    CoverProbabilities {
        cover1: p(0),
        cover2: p(1),
        cover_all: p(2),
        self_cover1: p(3),
        self_cover2: p(4),
    }
}

/// Batch-means standard error of the fund size over contiguous blocks of
/// migration paths.
fn batch_std_error(
    samples: &ExposureSamples,
    beta: f64,
    batches: usize,
    paths_migration: usize,
    paths_reference: usize,
) -> Result<f64> {
    let rows = samples.nonzero_rows();
    let mut values = Vec::with_capacity(batches);
    for b in 0..batches {
        let lo = (b * paths_migration / batches * paths_reference) as u64;
        let hi = ((b + 1) * paths_migration / batches * paths_reference) as u64;
        let mut sub = ExposureSamples::new(samples.members(), hi - lo)?;
        let start = rows.partition_point(|(p, _)| *p < lo);
        let stop = rows.partition_point(|(p, _)| *p < hi);
        for (p, e) in &rows[start..stop] {
            sub.push(p - lo, e.clone())?;
        }
        values.push(default_fund(&sub, beta)?.total);
    }
    let mean = values.iter().sum::<f64>() / batches as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Ok((var / batches as f64).sqrt())
}

/// Effective-loss and unfunded-call statistics for one fund.
struct LossStats {
    mean_el: f64,
    prob_el: f64,
    mean_udf: f64,
    checks: u64,
    violations: u64,
    max_gap: f64,
}

fn loss_stats(
    scenarios: &[Scenario],
    margins: &[Vec<f64>],
    fund: &DefaultFund,
    members: usize,
    skin_in_game: f64,
    total_paths: u64,
) -> Result<LossStats> {
    let mut s = LossStats {
        mean_el: 0.0,
        prob_el: 0.0,
        mean_udf: 0.0,
        checks: 0,
        violations: 0,
        max_gap: 0.0,
    };
    let mut hit = 0u64;
    for (sc, ims) in scenarios.iter().zip(margins) {
        let mut steps: Vec<u32> = sc.events.iter().map(|e| e.step).collect();
        steps.dedup();
        let mut any = false;
        for &m in &steps {
            let shortfalls: Vec<f64> = sc
                .events
                .iter()
                .zip(ims)
                .filter(|(e, _)| e.step == m)
                .map(|(e, im)| e.shortfall - im)
                .collect();
            let el = effective_loss(&shortfalls, skin_in_game, fund.total);
            let mut alive = vec![true; members];
            for e in sc.events.iter().filter(|e| e.step <= m) {
                alive[e.member as usize] = false;
            }
            let calls = unfunded_df(el, &fund.allocation, &alive)?;
            let called: f64 = calls.iter().sum();
            let denom: f64 = fund
                .allocation
                .iter()
                .zip(&alive)
                .filter(|(_, &a)| a)
                .map(|(d, _)| d)
                .sum();
            if denom > 0.0 {
                s.checks += 1;
                let gap = (called - el).abs();
                s.max_gap = s.max_gap.max(gap);
                if gap > 1e-9 * (1.0 + el) {
                    s.violations += 1;
                }
            }
            s.mean_el += el;
            s.mean_udf += called;
            any |= el > 0.0;
        }
        hit += u64::from(any);
    }
    let n = total_paths as f64;
    s.mean_el /= n;
    s.mean_udf /= n;
    s.prob_el = hit as f64 / n;
    Ok(s)
}

/// Runs the full (alpha, beta) grid of the default fund study.
pub fn run_df_study(cfg: &ExperimentConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let (model, calibration_error) = cfg.joint_model()?;
    let initial = cfg.initial_ratings.resolve(model.members())?;
    let engine = Engine::new(cfg)?;
    let members = engine.positions.members();
    let wf = &cfg.waterfall;
    let cap = wf.cap_for(engine.positions.long_notional());
    let r_paths = cfg.paths_reference;
    let total_paths = (cfg.paths_migration * r_paths) as u64;

    let default_times = (0..cfg.paths_migration as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = substream(cfg.seed, StreamDomain::Migration, p);
            simulate_default_times(&model, &initial, engine.horizon, &mut rng)
        })
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| SimulationError::migration("migration path simulation", e))?;
    let default_paths = default_times
        .iter()
        .filter(|t| t.iter().any(|s| s.is_some_and(|s| s >= 1)))
        .count();

    // scenario events, in scenario-index order
    let per_path: Vec<(Vec<Scenario>, f64)> = default_times
        .par_iter()
        .enumerate()
        .map(|(p, times)| {
            let mut defaulters: Vec<(usize, usize)> = times
                .iter()
                .enumerate()
                .filter_map(|(i, t)| t.filter(|&s| s >= 1).map(|s| (s, i)))
                .collect();
            defaulters.sort_unstable();
            let mut gap: f64 = 0.0;
            let mut out = Vec::new();
            if defaulters.is_empty() {
                return (out, gap);
            }
            for r in 0..r_paths {
                let index = (p * r_paths + r) as u64;
                let days = default_days_for(
                    &cfg.contracts,
                    engine.step,
                    cfg.seed,
                    StreamDomain::Reference,
                    index,
                );
                let events = defaulters
                    .iter()
                    .map(|&(s, i)| {
                        let (ev, g) = engine.event(i, s, &days);
                        gap = gap.max(g);
                        ev
                    })
                    .collect();
                out.push(Scenario { index, events });
            }
            (out, gap)
        })
        .collect();
    let mut max_matched_book_gap: f64 = 0.0;
    let mut scenarios = Vec::new();
    for (s, g) in per_path {
        max_matched_book_gap = max_matched_book_gap.max(g);
        scenarios.extend(s);
    }

    // cover-one / cover-two baseline: every member defaults at the first step
    let stress: Vec<Vec<Event>> = (0..cfg.cover_samples as u64)
        .into_par_iter()
        .map(|s| {
            let days = default_days_for(&cfg.contracts, engine.step, cfg.seed, StreamDomain::CoverStress, s);
            (0..members).map(|i| engine.event(i, 1, &days).0).collect()
        })
        .collect();

    let specs: Vec<_> = cfg
        .alpha_grid
        .iter()
        .map(|&a| Ok((wf.im_method, RiskMeasureSpec::new(wf.im_measure, a)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut keys: BTreeSet<ImKey> = BTreeSet::new();
    let all_alive = (1u32 << cfg.contracts.len()) - 1;
    for i in 0..members as u32 {
        keys.insert((i, 0, all_alive));
    }
    for e in scenarios.iter().flat_map(|s| &s.events).chain(stress.iter().flatten()) {
        keys.insert((e.member, e.step, e.alive));
    }
    let table = engine.margin_table(&keys, &specs)?;

    let mut im = Vec::new();
    let mut cells = Vec::new();
    let mut identities = IdentityReport {
        max_allocation_gap: 0.0,
        min_df_total: f64::INFINITY,
        cover_order_violations: 0,
        udf_checks: 0,
        udf_violations: 0,
        max_udf_gap: 0.0,
        max_matched_book_gap,
    };
    for (a, &alpha) in cfg.alpha_grid.iter().enumerate() {
        let per_member: Vec<f64> = (0..members as u32).map(|i| table[&(i, 0, all_alive)][a]).collect();
        let total_im: f64 = per_member.iter().sum();
        im.push(ImByAlpha {
            alpha,
            per_member,
            total: total_im,
        });

        let margins: Vec<Vec<f64>> = scenarios
            .iter()
            .map(|s| s.events.iter().map(|e| table[&(e.member, e.step, e.alive)][a]).collect())
            .collect();
        let mut samples = ExposureSamples::new(members, total_paths)?;
        for (sc, ims) in scenarios.iter().zip(&margins) {
            let mut ep = vec![0.0; members];
            for (e, &m) in sc.events.iter().zip(ims) {
                ep[e.member as usize] = exposure(e, m, wf.exposure_mode, cap);
            }
            samples.push(sc.index, ep)?;
        }

        let mut stress_samples = ExposureSamples::new(members, cfg.cover_samples as u64)?;
        for (s, evs) in stress.iter().enumerate() {
            let ep = evs
                .iter()
                .map(|e| exposure(e, table[&(e.member, e.step, e.alive)][a], wf.exposure_mode, cap))
                .collect();
            stress_samples.push(s as u64, ep)?;
        }
        let (c1, c2) = cover1_cover2_baseline(&stress_samples);

        for &beta in &cfg.beta_grid {
            let fund = default_fund(&samples, beta)?;
            let se = batch_std_error(&samples, beta, cfg.batches, cfg.paths_migration, r_paths)?;
            let cov = covers(&samples, &fund);
            let stats = loss_stats(&scenarios, &margins, &fund, members, wf.skin_in_game, total_paths)?;

            let gap = (fund.allocation.iter().sum::<f64>() - fund.total).abs();
            identities.max_allocation_gap = identities.max_allocation_gap.max(gap);
            identities.min_df_total = identities.min_df_total.min(fund.total);
            if !(cov.cover_all <= cov.cover2 && cov.cover2 <= cov.cover1) {
                identities.cover_order_violations += 1;
            }
            identities.udf_checks += stats.checks;
            identities.udf_violations += stats.violations;
            identities.max_udf_gap = identities.max_udf_gap.max(stats.max_gap);

            cells.push(GridCell {
                alpha,
                beta,
                df_total: fund.total,
                df_std_error: se,
                total_im,
                ratio: ratio(fund.total, total_im),
                ratio_std_error: ratio(se, total_im),
                allocation: fund.allocation,
                covers: cov,
                c1,
                c2,
                c1_ratio: ratio(c1, total_im),
                c2_ratio: ratio(c2, total_im),
                mean_effective_loss: stats.mean_el,
                prob_effective_loss: stats.prob_el,
                mean_unfunded_call: stats.mean_udf,
            });
        }
    }

    Ok(StudyResult {
        members,
        contracts: cfg.contracts.len(),
        dependence: cfg.dependence,
        initial_ratings: initial.0,
        paths_migration: cfg.paths_migration,
        paths_reference: r_paths,
        seed: cfg.seed,
        calibration_error,
        default_path_fraction: default_paths as f64 / cfg.paths_migration as f64,
        im,
        cells,
        identities,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub members: usize,
    pub df_total: f64,
    pub df_std_error: f64,
    pub total_im: f64,
    pub ratio: Option<f64>,
    pub c1_ratio: Option<f64>,
    pub c2_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub alpha: f64,
    pub beta: f64,
    pub rows: Vec<ScalingRow>,
}

impl ScalingStudy {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scaling results serialize")
    }

    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        let mut out = String::from("members,df_total,df_std_error,total_im,ratio,c1_ratio,c2_ratio\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.members,
                r.df_total,
                r.df_std_error,
                r.total_im,
                opt(r.ratio),
                opt(r.c1_ratio),
                opt(r.c2_ratio)
            ));
        }
        out
    }
}

/// Books for each member count: the leading block of the configured book
/// (re-matched) for the smallest count, stacked for the larger ones.
pub fn scaled_books(positions: &PositionMatrix, counts: &[usize]) -> Result<Vec<(usize, PositionMatrix)>> {
    let counts: BTreeSet<usize> = counts.iter().copied().collect();
    let base_count = *counts
        .first()
        .ok_or_else(|| SimulationError::Config("no member counts given".into()))?;
    let base = positions
        .leading_block(base_count)
        .map_err(|e| SimulationError::Config(e.to_string()))?;
    counts
        .into_iter()
        .map(|c| {
            if c % base_count != 0 {
                return Err(SimulationError::Config(format!(
                    "member count {c} is not a multiple of the smallest count {base_count}"
                )));
            }
            Ok((c, base.replicate(c / base_count)?))
        })
        .collect()
}

/// DF/IM at the configured levels for each member count.
pub fn run_scaling_study(cfg: &ExperimentConfig, counts: &[usize]) -> Result<ScalingStudy> {
    cfg.validate()?;
    let alpha = cfg.waterfall.alpha_im;
    let beta = cfg.waterfall.beta_df;
    let books = scaled_books(&cfg.positions.resolve(), counts)?;
    let mut rows = Vec::new();
    for (count, book) in books {
        let initial = match &cfg.initial_ratings {
            super::InitialRatings::Explicit(r) => {
                super::InitialRatings::Explicit(r.iter().copied().cycle().take(count).collect())
            }
            preset => preset.clone(),
        };
        let sub = ExperimentConfig {
            positions: super::PositionsSpec::Matrix(book),
            initial_ratings: initial,
            alpha_grid: vec![alpha],
            beta_grid: vec![beta],
            ..cfg.clone()
        };
        let result = run_df_study(&sub)?;
        let cell = &result.cells[0];
        rows.push(ScalingRow {
            members: count,
            df_total: cell.df_total,
            df_std_error: cell.df_std_error,
            total_im: cell.total_im,
            ratio: cell.ratio,
            c1_ratio: cell.c1_ratio,
            c2_ratio: cell.c2_ratio,
        });
    }
    Ok(ScalingStudy { alpha, beta, rows })
}
