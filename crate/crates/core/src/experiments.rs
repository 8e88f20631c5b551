//! Batches, corruption sweeps and team ablations.
//!
//! Episode `i` of any batch derived from the same master seed gets the same
//! episode seed, so spawn, wind and drift coincide across compared
//! algorithms. Episodes may run on a rayon pool; results are always reduced
//! in a fixed order.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::Team;
use crate::engine::{run_episode, Corruption, EpisodeConfig};
use crate::metrics::{
    marginal_contribution, ols, segmented_fit, LinearFit, MetricReport, Orientation, SegmentedFit,
};
use crate::streams::episode_seed;
use crate::trace::EpisodeTrace;
use crate::{Error, Result};

pub const Z_95: f64 = 1.96;

/// Mean with a normal-approximation 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub ci: f64,
    pub n: usize,
}

/// `None` for an empty sample; a single value has zero half-width.
pub fn mean_ci(values: &[f64]) -> Option<Stat> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ci = if n < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Z_95 * var.sqrt() / (n as f64).sqrt()
    };
    Some(Stat { mean, ci, n })
}

/// Batch summary: per-scalar and per-step statistics plus pooled
/// distributions for the violin plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub label: String,
    pub episodes: usize,
    pub horizon: u32,
    pub scalars: BTreeMap<String, Option<Stat>>,
    pub series: BTreeMap<String, Vec<Option<Stat>>>,
    pub dsl_values: Vec<f64>,
    pub itl_values: Vec<f64>,
}

impl AggregateReport {
    pub fn scalar_mean(&self, name: &str) -> Option<f64> {
        self.scalars.get(name).copied().flatten().map(|s| s.mean)
    }
}

/// Value of `series` at step `t`, extended past the episode end: the last
/// value carries forward, except the idleness reduction rate which is 0 once
/// nothing changes any more.
fn padded(report: &MetricReport, name: &str, values: &[Option<f64>], t: usize) -> Option<f64> {
    match values.get(t) {
        Some(v) => *v,
        None if name == "irr" => (t < report.horizon as usize).then_some(0.0),
        None => values.last().copied().flatten(),
    }
}

/// Reduces episode reports into one summary.
///
/// Reports are ordered by seed first, so the result does not depend on the
/// order they arrive in.
pub fn aggregate(label: &str, reports: &[MetricReport]) -> Result<AggregateReport> {
    if reports.is_empty() {
        return Err(Error::Config("cannot aggregate an empty batch".into()));
    }
    let mut ordered: Vec<&MetricReport> = reports.iter().collect();
    ordered.sort_by(|a, b| a.seed.cmp(&b.seed).then(a.t_end.cmp(&b.t_end)));
    let horizon = ordered.iter().map(|r| r.horizon).max().expect("non-empty");

    let mut scalars = BTreeMap::new();
    for name in MetricReport::SCALARS {
        let mut values = Vec::new();
        for r in &ordered {
            if let Some(v) = r.scalar(name)? {
                values.push(v);
            }
        }
        scalars.insert(name.to_string(), mean_ci(&values));
    }

    let mut series = BTreeMap::new();
    for name in MetricReport::SERIES {
        let len = if name == "irr" { horizon } else { horizon + 1 } as usize;
        let all: Vec<Vec<Option<f64>>> = ordered
            .iter()
            .map(|r| r.series(name))
            .collect::<Result<_>>()?;
        let band = (0..len)
            .map(|t| {
                let at: Vec<f64> = ordered
                    .iter()
                    .zip(&all)
                    .filter_map(|(r, s)| padded(r, name, s, t))
                    .collect();
                mean_ci(&at)
            })
            .collect();
        series.insert(name.to_string(), band);
    }

    Ok(AggregateReport {
        label: label.to_string(),
        episodes: ordered.len(),
        horizon,
        scalars,
        series,
        dsl_values: ordered
            .iter()
            .flat_map(|r| r.dsl.values.iter().copied())
            .collect(),
        itl_values: ordered.iter().map(|r| r.itl).collect(),
    })
}

/// `episodes` runs of `base`, seeded from `base.seed` as master seed.
#[derive(Debug, Clone)]
pub struct BatchSpec {
    pub base: EpisodeConfig,
    pub episodes: usize,
}

impl BatchSpec {
    pub fn new(base: EpisodeConfig, episodes: usize) -> Self {
        BatchSpec { base, episodes }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.episodes)
            .map(|i| episode_seed(self.base.seed, i))
            .collect()
    }

    pub fn label(&self) -> String {
        format!(
            "{}/{}",
            self.base.policy_label(Team::Scout),
            self.base.policy_label(Team::Forager)
        )
    }
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub label: String,
    pub seeds: Vec<u64>,
    pub reports: Vec<MetricReport>,
    /// Empty unless traces were requested.
    pub traces: Vec<EpisodeTrace>,
    pub aggregate: AggregateReport,
}

/// Runs every episode of the batch (in parallel on the current rayon pool)
/// and aggregates. The first failing episode aborts the batch.
pub fn run_batch(spec: &BatchSpec, keep_traces: bool) -> Result<BatchResult> {
    if spec.episodes == 0 {
        return Err(Error::Config("a batch needs at least one episode".into()));
    }
    spec.base.validate()?;
    let seeds = spec.seeds();
    let runs: Vec<_> = seeds
        .par_iter()
        .enumerate()
        .map(|(index, &seed)| {
            let mut config = spec.base.clone();
            config.seed = seed;
            run_episode(&config)
                .map(|run| (run.report, keep_traces.then_some(run.trace)))
                .map_err(|e| Error::Episode {
                    index,
                    seed,
                    source: Box::new(e),
                })
        })
        .collect::<Vec<_>>();
    let mut reports = Vec::with_capacity(runs.len());
    let mut traces = Vec::new();
    for run in runs {
        let (report, trace) = run?;
        reports.push(report);
        traces.extend(trace);
    }
    let label = spec.label();
    let aggregate = aggregate(&label, &reports)?;
    Ok(BatchResult {
        label,
        seeds,
        reports,
        traces,
        aggregate,
    })
}

/// `0, 0.05, …, 1`.
pub fn default_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub mean: f64,
    pub ci: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationCurve {
    pub points: Vec<SweepPoint>,
    /// Slope of this fit is the sensitivity SS.
    pub fit: LinearFit,
    /// Present when the grid has at least 4 points.
    pub segmented: Option<SegmentedFit>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("epsilon grid is empty".into()));
    }
    if grid.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(Error::Domain("epsilon grid must lie in [0, 1]".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("epsilon grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Evaluates `evaluator` at each grid point and fits the resulting curve.
pub fn degradation_curve<F>(grid: &[f64], mut evaluator: F) -> Result<DegradationCurve>
where
    F: FnMut(f64) -> Result<Stat>,
{
    check_grid(grid)?;
    let points = grid
        .iter()
        .map(|&epsilon| {
            evaluator(epsilon).map(|s| SweepPoint {
                epsilon,
                mean: s.mean,
                ci: s.ci,
                n: s.n,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.epsilon, p.mean)).collect();
    let fit = ols(&xy)?;
    let segmented = if xy.len() >= 4 {
        Some(segmented_fit(&xy)?)
    } else {
        None
    };
    Ok(DegradationCurve {
        points,
        fit,
        segmented,
    })
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub batch: BatchSpec,
    pub team: Team,
    pub grid: Vec<f64>,
    /// Scalar observed at every grid point, e.g. `pta_c_final`.
    pub metric: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub label: String,
    pub team: Team,
    pub metric: String,
    pub curve: DegradationCurve,
}

/// Corrupts `team` at every grid point with the same per-agent corruption
/// streams, so a larger ε overrides a superset of decisions.
pub fn epsilon_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let metric = spec.metric.clone();
    let curve = degradation_curve(&spec.grid, |epsilon| {
        let mut batch = spec.batch.clone();
        batch.base.corruption = Some(Corruption {
            team: spec.team,
            epsilon,
        });
        let result = run_batch(&batch, false)?;
        let values: Vec<f64> = result
            .reports
            .iter()
            .map(|r| r.scalar(&metric))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        mean_ci(&values).ok_or_else(|| {
            Error::UndefinedMetric(format!("{metric} undefined in every episode at ε={epsilon}"))
        })
    })?;
    Ok(SweepResult {
        label: spec.batch.label(),
        team: spec.team,
        metric: spec.metric.clone(),
        curve,
    })
}

/// Final PTA_D, PTA_C and RMSE of one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoleMetrics {
    pub pta_d: f64,
    pub pta_c: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub config: String,
    pub scouts: usize,
    pub foragers: usize,
    pub pta_d: Stat,
    pub pta_c: Stat,
    pub rmse: Stat,
}

impl AblationRow {
    pub fn means(&self) -> RoleMetrics {
        RoleMetrics {
            pta_d: self.pta_d.mean,
            pta_c: self.pta_c.mean,
            rmse: self.rmse.mean,
        }
    }
}

/// Marginal contribution of one agent of `removed`'s team; `None` where the
/// reference value is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub removed: Team,
    pub pta_d: Option<f64>,
    pub pta_c: Option<f64>,
    pub rmse: Option<f64>,
}

/// PTA is higher-better, RMSE lower-better.
pub fn mc_row(removed: Team, full: RoleMetrics, ablated: RoleMetrics) -> McRow {
    use Orientation::*;
    McRow {
        removed,
        pta_d: marginal_contribution(full.pta_d, ablated.pta_d, HigherBetter).ok(),
        pta_c: marginal_contribution(full.pta_c, ablated.pta_c, HigherBetter).ok(),
        rmse: marginal_contribution(full.rmse, ablated.rmse, LowerBetter).ok(),
    }
}

#[derive(Debug, Clone)]
pub struct AblationSpec {
    pub batch: BatchSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub label: String,
    /// Complete team first, then one scout removed, then one forager removed.
    pub rows: Vec<AblationRow>,
    pub mc: Vec<McRow>,
}

fn config_name(scouts: usize, foragers: usize) -> String {
    format!("{scouts}S-{foragers}F")
}

/// Runs the complete team and each single-agent removal on shared seeds.
pub fn ablation_study(spec: &AblationSpec) -> Result<AblationResult> {
    let base = &spec.batch.base;
    let (ns, nf) = (base.scouts.count, base.foragers.count);
    if ns == 0 || nf == 0 {
        return Err(Error::Config(
            "ablation needs at least one agent in each team".into(),
        ));
    }
    let run = |scouts: usize, foragers: usize| -> Result<AblationRow> {
        let mut batch = spec.batch.clone();
        batch.base.scouts.count = scouts;
        batch.base.foragers.count = foragers;
        let result = run_batch(&batch, false)?;
        let stat = |name: &str| {
            result
                .aggregate
                .scalars
                .get(name)
                .copied()
                .flatten()
                .ok_or_else(|| Error::UndefinedMetric(format!("{name} undefined")))
        };
        Ok(AblationRow {
            config: config_name(scouts, foragers),
            scouts,
            foragers,
            pta_d: stat("pta_d_final")?,
            pta_c: stat("pta_c_final")?,
            rmse: stat("rmse_final")?,
        })
    };
    let full = run(ns, nf)?;
    let no_scout = run(ns - 1, nf)?;
    let no_forager = run(ns, nf - 1)?;
    let mc = vec![
        mc_row(Team::Scout, full.means(), no_scout.means()),
        mc_row(Team::Forager, full.means(), no_forager.means()),
    ];
    Ok(AblationResult {
        label: spec.batch.label(),
        rows: vec![full, no_scout, no_forager],
        mc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_has_zero_width() {
        let s = mean_ci(&[4.0]).unwrap();
        assert_eq!((s.mean, s.ci, s.n), (4.0, 0.0, 1));
        assert!(mean_ci(&[]).is_none());
        let c = mean_ci(&[2.5; 10]).unwrap();
        assert_eq!((c.mean, c.ci), (2.5, 0.0));
    }

    #[test]
    fn ci_formula() {
        let s = mean_ci(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((s.ci - 1.96 * sd / 2.0).abs() < 1e-12);
    }

    #[test]
    fn grid_checks() {
        assert_eq!(default_grid().len(), 21);
        assert_eq!(default_grid()[20], 1.0);
        assert!(degradation_curve(&[0.0], |_| Ok(Stat { mean: 1.0, ci: 0.0, n: 1 })).is_err());
        assert!(check_grid(&[0.0, 0.0]).is_err());
        assert!(check_grid(&[0.0, 1.5]).is_err());
    }

    #[test]
    fn mc_identity_and_boundary() {
        let m = RoleMetrics {
            pta_d: 90.0,
            pta_c: 80.0,
            rmse: 0.01,
        };
        let same = mc_row(Team::Scout, m, m);
        assert_eq!((same.pta_d, same.pta_c, same.rmse), (Some(0.0), Some(0.0), Some(0.0)));
        let gone = mc_row(Team::Forager, m, RoleMetrics { pta_c: 0.0, ..m });
        assert_eq!(gone.pta_c, Some(1.0));
    }
}
