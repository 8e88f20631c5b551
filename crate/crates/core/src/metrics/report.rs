use serde::{Deserialize, Serialize};

use super::{
    coverage_overlap, csr, dsl, gini, idleness_reduction_rate, itl, mean_idleness, nt_x, pta,
    rmse, throughput, DslSummary,
};
use crate::agents::{coverage_mask, SharedModel, Team};
use crate::grid::{CountGrid, Grid};
use crate::trace::{EpisodeTrace, Event};
use crate::world::{GridMap, NodeId};
use crate::{Error, Result};

/// Discovery and collection step of one item, if they happened.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemTimeline {
    pub discovered: Option<(u32, Team)>,
    pub collected: Option<u32>,
}

/// Everything the report needs about one finished step.
#[derive(Debug, Clone, Copy)]
pub struct StepFrame<'a> {
    pub t: u32,
    pub truth: &'a CountGrid,
    pub estimate: &'a CountGrid,
    pub ages: &'a Grid<Option<u32>>,
    /// Field of view per agent id.
    pub fovs: &'a [Vec<NodeId>],
    /// This step's events; moves are ignored.
    pub events: &'a [Event],
}

/// Per-episode metrics. Series are indexed by step `t = 0..=t_end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub seed: u64,
    pub k: u32,
    pub horizon: u32,
    pub t_end: u32,
    pub n_scouts: usize,
    pub n_foragers: usize,

    pub pta_d_series: Vec<f64>,
    pub pta_c_series: Vec<f64>,
    pub rmse_series: Vec<f64>,
    pub mi_series: Vec<f64>,
    /// `MI(t) − MI(t+1)` for `t < t_end`.
    pub irr_series: Vec<f64>,
    /// Overlap among the scout team's fields of view.
    pub co_series: Vec<f64>,
    pub csr_series: Vec<Option<f64>>,
    /// Gini of cumulative per-forager collections.
    pub gini_series: Vec<f64>,

    pub pta_d_final: f64,
    pub pta_c_final: f64,
    pub rmse_final: f64,
    pub mi_final: f64,
    pub nt_50: f64,
    pub nt_90: f64,
    pub throughput: Option<f64>,
    pub scout_throughput: Option<f64>,
    pub itl: f64,
    pub csr_final: Option<f64>,
    pub gini_final: f64,
    pub dsl: DslSummary,
    pub forager_collections: Vec<u32>,
}

impl MetricReport {
    pub const SCALARS: [&'static str; 14] = [
        "pta_d_final",
        "pta_c_final",
        "rmse_final",
        "mi_final",
        "nt_50",
        "nt_90",
        "throughput",
        "scout_throughput",
        "itl",
        "csr_final",
        "gini_final",
        "dsl_mean",
        "dsl_excluded",
        "k",
    ];

    pub const SERIES: [&'static str; 8] = ["pta_d", "pta_c", "rmse", "mi", "irr", "co", "csr", "gini"];

    /// Scalar by name; `None` when undefined for this episode.
    pub fn scalar(&self, name: &str) -> Result<Option<f64>> {
        Ok(match name {
            "pta_d_final" | "pta_d" => Some(self.pta_d_final),
            "pta_c_final" | "pta_c" => Some(self.pta_c_final),
            "rmse_final" | "rmse" => Some(self.rmse_final),
            "mi_final" | "mi" => Some(self.mi_final),
            "nt_50" => Some(self.nt_50),
            "nt_90" => Some(self.nt_90),
            "throughput" => self.throughput,
            "scout_throughput" => self.scout_throughput,
            "itl" => Some(self.itl),
            "csr_final" | "csr" => self.csr_final,
            "gini_final" | "gini" => Some(self.gini_final),
            "dsl_mean" => {
                let v = &self.dsl.values;
                (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
            }
            "dsl_excluded" => self.dsl.excluded_fraction,
            "k" => Some(self.k as f64),
            other => return Err(Error::Config(format!("unknown metric '{other}'"))),
        })
    }

    /// Series by name, indexed by step.
    pub fn series(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let some = |v: &[f64]| v.iter().map(|&x| Some(x)).collect();
        Ok(match name {
            "pta_d" => some(&self.pta_d_series),
            "pta_c" => some(&self.pta_c_series),
            "rmse" => some(&self.rmse_series),
            "mi" => some(&self.mi_series),
            "irr" => some(&self.irr_series),
            "co" => some(&self.co_series),
            "csr" => self.csr_series.clone(),
            "gini" => some(&self.gini_series),
            other => return Err(Error::Config(format!("unknown series '{other}'"))),
        })
    }
}

/// Accumulates one episode's metrics step by step.
#[derive(Debug, Clone)]
pub struct ReportBuilder {
    seed: u64,
    k: u32,
    horizon: u32,
    forgetting: f64,
    teams: Vec<Team>,
    items: Vec<ItemTimeline>,
    discovered: u32,
    collected: u32,
    cooperative: u32,
    per_agent: Vec<u32>,
    pta_d: Vec<f64>,
    pta_c: Vec<f64>,
    rmse: Vec<f64>,
    mi: Vec<f64>,
    co: Vec<f64>,
    csr: Vec<Option<f64>>,
    gini: Vec<f64>,
}

impl ReportBuilder {
    /// `teams[id]` is the team of agent `id`.
    pub fn new(seed: u64, k: u32, horizon: u32, forgetting: f64, teams: Vec<Team>) -> Result<Self> {
        if k == 0 {
            return Err(Error::UndefinedMetric("episode without items".into()));
        }
        if horizon == 0 {
            return Err(Error::Domain("horizon must be at least 1".into()));
        }
        if !(forgetting > 0.0 && forgetting < 1.0) {
            return Err(Error::Domain(format!(
                "forgetting factor must lie in (0, 1), got {forgetting}"
            )));
        }
        let n = teams.len();
        Ok(ReportBuilder {
            seed,
            k,
            horizon,
            forgetting,
            teams,
            items: vec![ItemTimeline::default(); k as usize],
            discovered: 0,
            collected: 0,
            cooperative: 0,
            per_agent: vec![0; n],
            pta_d: Vec::new(),
            pta_c: Vec::new(),
            rmse: Vec::new(),
            mi: Vec::new(),
            co: Vec::new(),
            csr: Vec::new(),
            gini: Vec::new(),
        })
    }

    fn item(&mut self, item: u32) -> Result<&mut ItemTimeline> {
        self.items
            .get_mut(item as usize)
            .ok_or_else(|| Error::Domain(format!("event names unknown item {item}")))
    }

    pub fn push_step(&mut self, map: &GridMap, frame: StepFrame<'_>) -> Result<()> {
        let expected = self.pta_d.len() as u32;
        if frame.t != expected {
            return Err(Error::Domain(format!(
                "step {} reported where step {expected} was due",
                frame.t
            )));
        }
        if frame.fovs.len() != self.teams.len() {
            return Err(Error::Domain(format!(
                "{} fields of view for {} agents",
                frame.fovs.len(),
                self.teams.len()
            )));
        }
        for e in frame.events {
            match *e {
                Event::Discover { t, item, team, .. } => {
                    let it = self.item(item)?;
                    if it.discovered.is_some() {
                        return Err(Error::Domain(format!("item {item} discovered twice")));
                    }
                    it.discovered = Some((t, team));
                    self.discovered += 1;
                }
                Event::Collect { t, item, agent, .. } => {
                    let it = self.item(item)?;
                    if it.collected.is_some() {
                        return Err(Error::Domain(format!("item {item} collected twice")));
                    }
                    it.collected = Some(t);
                    let coop = matches!(it.discovered, Some((td, Team::Scout)) if td <= t);
                    self.collected += 1;
                    self.cooperative += coop as u32;
                    *self
                        .per_agent
                        .get_mut(agent)
                        .ok_or_else(|| Error::Domain(format!("unknown agent {agent}")))? += 1;
                }
                Event::Move { .. } | Event::StepSummary(_) => {}
            }
        }
        self.pta_d.push(pta(self.discovered, self.k)?);
        self.pta_c.push(pta(self.collected, self.k)?);
        self.rmse.push(rmse(frame.truth, frame.estimate, map)?);
        self.mi.push(mean_idleness(map, frame.ages, self.forgetting)?);
        let scout_fovs: Vec<&[NodeId]> = frame
            .fovs
            .iter()
            .zip(&self.teams)
            .filter(|(_, &team)| team == Team::Scout)
            .map(|(f, _)| f.as_slice())
            .collect();
        self.co.push(coverage_overlap(&scout_fovs));
        self.csr.push(csr(self.cooperative, self.collected));
        self.gini.push(gini(&self.forager_counts()));
        Ok(())
    }

    /// Mean idleness of the most recent step.
    pub fn last_mi(&self) -> Option<f64> {
        self.mi.last().copied()
    }

    fn forager_counts(&self) -> Vec<f64> {
        self.per_agent
            .iter()
            .zip(&self.teams)
            .filter(|(_, &team)| team == Team::Forager)
            .map(|(&c, _)| c as f64)
            .collect()
    }

    pub fn finish(self, t_end: u32) -> Result<MetricReport> {
        if self.pta_d.len() != t_end as usize + 1 {
            return Err(Error::Domain(format!(
                "{} steps recorded for an episode ending at {t_end}",
                self.pta_d.len()
            )));
        }
        let n_scouts = self.teams.iter().filter(|&&t| t == Team::Scout).count();
        let n_foragers = self.teams.len() - n_scouts;
        let last = t_end as usize;
        let forager_collections = self
            .per_agent
            .iter()
            .zip(&self.teams)
            .filter(|(_, &team)| team == Team::Forager)
            .map(|(&c, _)| c)
            .collect();
        Ok(MetricReport {
            seed: self.seed,
            k: self.k,
            horizon: self.horizon,
            t_end,
            n_scouts,
            n_foragers,
            pta_d_final: self.pta_d[last],
            pta_c_final: self.pta_c[last],
            rmse_final: self.rmse[last],
            mi_final: self.mi[last],
            nt_50: nt_x(&self.pta_c, 50.0, self.horizon)?,
            nt_90: nt_x(&self.pta_c, 90.0, self.horizon)?,
            throughput: throughput(self.collected, n_foragers, t_end).ok(),
            scout_throughput: throughput(self.discovered, n_scouts, t_end).ok(),
            itl: itl(&self.pta_d, &self.pta_c, self.horizon)?,
            csr_final: self.csr[last],
            gini_final: self.gini[last],
            dsl: dsl(&self.items, self.horizon),
            forager_collections,
            irr_series: idleness_reduction_rate(&self.mi),
            pta_d_series: self.pta_d,
            pta_c_series: self.pta_c,
            rmse_series: self.rmse,
            mi_series: self.mi,
            co_series: self.co,
            csr_series: self.csr,
            gini_series: self.gini,
        })
    }
}

fn trace_err(message: String) -> Error {
    Error::Trace { line: 0, message }
}

/// Recomputes an episode's report from its trace alone.
///
/// The shared model is rebuilt from the recorded truth snapshots and fields
/// of view; idleness ages from the same fields of view (or, in visit mode,
/// from the recorded positions).
pub fn report_from_trace(trace: &EpisodeTrace) -> Result<MetricReport> {
    let h = &trace.header;
    let map = h.grid_map()?;
    if map.digest() != h.map_digest {
        return Err(trace_err("embedded map does not match its digest".into()));
    }
    let mut agents = h.agents.clone();
    agents.sort_by_key(|a| a.id);
    if agents.iter().enumerate().any(|(i, a)| a.id != i) {
        return Err(trace_err("agent ids are not 0..n".into()));
    }
    let teams = agents.iter().map(|a| a.team).collect();
    let mut positions: Vec<NodeId> = agents.iter().map(|a| a.start).collect();
    let mut builder = ReportBuilder::new(h.seed, h.k, h.horizon, h.forgetting, teams)?;
    let mut model = SharedModel::new(&map, h.forgetting, h.idleness_mode);
    let mut pending: Vec<Event> = Vec::new();
    for e in &trace.events {
        match e {
            Event::Move { agent, to, .. } => {
                let slot = positions
                    .get_mut(*agent)
                    .ok_or_else(|| trace_err(format!("move of unknown agent {agent}")))?;
                *slot = *to;
            }
            Event::Discover { .. } | Event::Collect { .. } => pending.push(e.clone()),
            Event::StepSummary(s) => {
                let truth = s.truth_grid(map.height(), map.width());
                let visible = coverage_mask(&map, s.fov.iter().map(|f| f.as_slice()));
                let occupied = coverage_mask(&map, [positions.as_slice()]);
                model.update(&map, &truth, &visible, &occupied, s.t);
                builder.push_step(
                    &map,
                    StepFrame {
                        t: s.t,
                        truth: &truth,
                        estimate: &model.estimate,
                        ages: &model.age,
                        fovs: &s.fov,
                        events: &pending,
                    },
                )?;
                pending.clear();
            }
        }
    }
    if !pending.is_empty() {
        return Err(trace_err("events after the last step summary".into()));
    }
    builder.finish(trace.footer.t_end)
}
