use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub sse: f64,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn ols(points: &[(f64, f64)]) -> Result<LinearFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return Err(Error::UndefinedMetric(format!(
            "line fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::UndefinedMetric(
            "line fit needs at least 2 distinct x values".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
        sse,
    })
}

/// Two OLS segments joined at a shared breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentedFit {
    pub breakpoint: f64,
    pub left: LinearFit,
    pub right: LinearFit,
    pub sse: f64,
}

/// Exhaustive single-breakpoint search over interior x values.
///
/// The point at the breakpoint belongs to both segments and each segment
/// needs two distinct x values. Candidates whose SSE ties the best (within a
/// relative 1e-9) resolve to the one closest to the median x.
pub fn segmented_fit(points: &[(f64, f64)]) -> Result<SegmentedFit> {
    if points.len() < 4 {
        return Err(Error::UndefinedMetric(format!(
            "segmented fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2].0
    } else {
        0.5 * (sorted[n / 2 - 1].0 + sorted[n / 2].0)
    };
    let mut candidates = Vec::new();
    for k in 1..n - 1 {
        let (Ok(left), Ok(right)) = (ols(&sorted[..=k]), ols(&sorted[k..])) else {
            continue;
        };
        candidates.push(SegmentedFit {
            breakpoint: sorted[k].0,
            left,
            right,
            sse: left.sse + right.sse,
        });
    }
    let best_sse = candidates
        .iter()
        .map(|c| c.sse)
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::UndefinedMetric("no admissible breakpoint".into()))?;
    let tol = 1e-9 * best_sse.max(1e-12);
    candidates
        .into_iter()
        .filter(|c| c.sse <= best_sse + tol)
        .min_by(|a, b| {
            (a.breakpoint - median)
                .abs()
                .total_cmp(&(b.breakpoint - median).abs())
                .then(a.breakpoint.total_cmp(&b.breakpoint))
        })
        .ok_or_else(|| Error::UndefinedMetric("no admissible breakpoint".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        (0..=20).map(|i| i as f64 * 0.05).collect()
    }

    #[test]
    fn exact_line() {
        let pts: Vec<_> = grid().into_iter().map(|x| (x, -40.0 * x + 99.0)).collect();
        let f = ols(&pts).unwrap();
        assert!((f.slope + 40.0).abs() < 1e-9 * 40.0);
        assert!((f.intercept - 99.0).abs() < 1e-9 * 99.0);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_and_degenerate() {
        let pts: Vec<_> = grid().into_iter().map(|x| (x, 7.0)).collect();
        assert_eq!(ols(&pts).unwrap().slope, 0.0);
        assert!(ols(&[(0.5, 1.0), (0.5, 2.0)]).is_err());
        assert!(ols(&[(0.5, 1.0)]).is_err());
    }

    #[test]
    fn piecewise_breakpoint() {
        let pts: Vec<_> = grid()
            .into_iter()
            .map(|x| (x, if x < 0.5 { 0.0 } else { -80.0 * (x - 0.5) }))
            .collect();
        let s = segmented_fit(&pts).unwrap();
        assert!((s.breakpoint - 0.5).abs() < 1e-12);
        assert!(s.left.slope.abs() < 1e-9);
        assert!((s.right.slope + 80.0).abs() < 1e-9);
    }

    #[test]
    fn linear_data_picks_median_breakpoint() {
        let pts: Vec<_> = grid().into_iter().map(|x| (x, 3.0 * x - 1.0)).collect();
        let s = segmented_fit(&pts).unwrap();
        assert!((s.breakpoint - 0.5).abs() < 1e-12);
        assert!((s.left.slope - 3.0).abs() < 1e-9);
        assert!((s.right.slope - 3.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_points() {
        assert!(segmented_fit(&[(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]).is_err());
    }
}
