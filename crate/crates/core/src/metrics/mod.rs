//! Metric functions.
//!
//! Everything here is a pure function of its arguments. [`ReportBuilder`]
//! strings them together step by step and is fed either by the live engine or
//! by [`report_from_trace`].

mod fit;
mod report;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use fit::{ols, segmented_fit, LinearFit, SegmentedFit};
pub use report::{report_from_trace, ItemTimeline, MetricReport, ReportBuilder, StepFrame};

use crate::agents::{idleness, Team};
use crate::grid::{CountGrid, Grid};
use crate::world::{GridMap, NodeId};
use crate::{Error, Result};

pub const GAUSSIAN_SIGMA: f64 = 1.0;
pub const GAUSSIAN_RADIUS: usize = 3;

/// Percentage of target achieved, `100·u/u_ub`.
pub fn pta(u: u32, u_ub: u32) -> Result<f64> {
    if u_ub == 0 {
        return Err(Error::UndefinedMetric("PTA with zero upper bound".into()));
    }
    Ok(100.0 * u as f64 / u_ub as f64)
}

/// Normalised 1-D Gaussian taps `k[-r..=r]`; the 2-D kernel is their outer
/// product and therefore also sums to 1.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Separable Gaussian filter with zero padding.
pub fn gaussian_blur(input: &Grid<f64>, kernel: &[f64]) -> Grid<f64> {
    let (h, w) = input.dims();
    let r = (kernel.len() / 2) as isize;
    let mut rows = Grid::filled(h, w, 0.0);
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for (k, &wk) in kernel.iter().enumerate() {
                let jj = j as isize + k as isize - r;
                if jj >= 0 && (jj as usize) < w {
                    acc += wk * input.get(i, jj as usize);
                }
            }
            *rows.get_mut(i, j) = acc;
        }
    }
    let mut out = Grid::filled(h, w, 0.0);
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for (k, &wk) in kernel.iter().enumerate() {
                let ii = i as isize + k as isize - r;
                if ii >= 0 && (ii as usize) < h {
                    acc += wk * rows.get(ii as usize, j);
                }
            }
            *out.get_mut(i, j) = acc;
        }
    }
    out
}

/// Root-mean-square error between the smoothed truth and smoothed estimate,
/// averaged over navigable cells.
pub fn rmse(truth: &CountGrid, estimate: &CountGrid, map: &GridMap) -> Result<f64> {
    let dims = (map.height(), map.width());
    if truth.dims() != dims || estimate.dims() != dims {
        return Err(Error::Domain(format!(
            "rmse dimension mismatch: truth {:?}, estimate {:?}, map {:?}",
            truth.dims(),
            estimate.dims(),
            dims
        )));
    }
    let kernel = gaussian_kernel(GAUSSIAN_SIGMA, GAUSSIAN_RADIUS);
    let blur = |g: &CountGrid| gaussian_blur(&g.map(|&v| v as f64), &kernel);
    let (gy, ge) = (blur(truth), blur(estimate));
    let sum: f64 = map.nodes().map(|n| (gy[n] - ge[n]).powi(2)).sum();
    Ok((sum / map.navigable_count() as f64).sqrt())
}

/// `t_X / T` for the first step where `series ≥ x`; 1 when never reached.
pub fn nt_x(series: &[f64], x: f64, horizon: u32) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::UndefinedMetric("NT_X of an empty series".into()));
    }
    if !(x > 0.0 && x <= 100.0) {
        return Err(Error::Domain(format!("NT_X threshold must be in (0, 100], got {x}")));
    }
    if horizon == 0 {
        return Err(Error::Domain("NT_X needs a positive horizon".into()));
    }
    Ok(match series.iter().position(|&v| v >= x) {
        Some(t) => t as f64 / horizon as f64,
        None => 1.0,
    })
}

/// Items handled per agent per step.
pub fn throughput(count: u32, agents: usize, t_end: u32) -> Result<f64> {
    if agents == 0 || t_end == 0 {
        return Err(Error::UndefinedMetric(format!(
            "throughput with {agents} agents over {t_end} steps"
        )));
    }
    Ok(count as f64 / (agents as f64 * t_end as f64))
}

/// Mean idleness over navigable cells.
pub fn mean_idleness(map: &GridMap, ages: &Grid<Option<u32>>, forgetting: f64) -> Result<f64> {
    if !(forgetting > 0.0 && forgetting < 1.0) {
        return Err(Error::Domain(format!(
            "forgetting factor must lie in (0, 1), got {forgetting}"
        )));
    }
    let sum: f64 = map.nodes().map(|n| idleness(ages[n], forgetting)).sum();
    Ok(sum / map.navigable_count() as f64)
}

/// Forward difference `MI(t) − MI(t+1)`; one shorter than the input.
pub fn idleness_reduction_rate(mi: &[f64]) -> Vec<f64> {
    mi.windows(2).map(|w| w[0] - w[1]).collect()
}

/// Discovery-to-service latencies plus the fraction of collected items left
/// out because no scout discovered them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DslSummary {
    pub values: Vec<f64>,
    pub excluded_fraction: Option<f64>,
}

pub fn dsl(items: &[ItemTimeline], horizon: u32) -> DslSummary {
    let mut values = Vec::new();
    let mut collected = 0usize;
    for it in items {
        let Some(tc) = it.collected else { continue };
        collected += 1;
        if let Some((td, Team::Scout)) = it.discovered {
            if td <= tc {
                values.push((tc - td) as f64 / horizon as f64);
            }
        }
    }
    let excluded_fraction =
        (collected > 0).then(|| (collected - values.len()) as f64 / collected as f64);
    DslSummary {
        values,
        excluded_fraction,
    }
}

/// Earliest index holding the maximum.
pub fn first_argmax(series: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (t, &v) in series.iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((t, v));
        }
    }
    best.map(|(t, _)| t)
}

/// Inter-team temporal lag `|t*₁ − t*₂| / T` with first-attainment peaks.
pub fn itl(r1: &[f64], r2: &[f64], horizon: u32) -> Result<f64> {
    if r1.is_empty() || r1.len() != r2.len() {
        return Err(Error::UndefinedMetric(format!(
            "ITL needs equal non-empty series, got {} and {}",
            r1.len(),
            r2.len()
        )));
    }
    if horizon == 0 {
        return Err(Error::Domain("ITL needs a positive horizon".into()));
    }
    let a = first_argmax(r1).expect("non-empty") as f64;
    let b = first_argmax(r2).expect("non-empty") as f64;
    Ok((a - b).abs() / horizon as f64)
}

/// Share of collected items first discovered by a scout; absent before the
/// first collection.
pub fn csr(cooperative: u32, collected: u32) -> Option<f64> {
    (collected > 0).then(|| cooperative as f64 / collected as f64)
}

/// Gini coefficient `Σᵢ Σⱼ |cᵢ − cⱼ| / (2 N² c̄)`; 0 for an empty or all-zero
/// input.
pub fn gini(values: &[f64]) -> f64 {
    let n = values.len();
    let total: f64 = values.iter().sum();
    if n == 0 || total == 0.0 {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Σᵢ Σⱼ |cᵢ − cⱼ| = 2 Σᵢ (2i − n + 1)·c₍ᵢ₎ over ascending order, i from 0
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &c)| (2.0 * i as f64 - n as f64 + 1.0) * c)
        .sum();
    weighted / (n as f64 * total)
}

/// Cells seen by at least two agents over cells seen by at least one.
pub fn coverage_overlap<L: AsRef<[NodeId]>>(fovs: &[L]) -> f64 {
    let mut counts: HashMap<NodeId, u32> = HashMap::new();
    for fov in fovs {
        for &n in fov.as_ref() {
            *counts.entry(n).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return 0.0;
    }
    let shared = counts.values().filter(|&&c| c >= 2).count();
    shared as f64 / counts.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
}

/// Relative performance lost when one agent is removed; negative when the
/// removed agent was a hindrance.
pub fn marginal_contribution(full: f64, ablated: f64, orientation: Orientation) -> Result<f64> {
    let (num, den) = match orientation {
        Orientation::HigherBetter => (full - ablated, full),
        Orientation::LowerBetter => (ablated - full, ablated),
    };
    if den == 0.0 {
        return Err(Error::UndefinedMetric(
            "marginal contribution with a zero reference".into(),
        ));
    }
    Ok(num / den)
}
