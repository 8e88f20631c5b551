//! Report files written by `run` and `metrics`.
//!
//! Everything here is a pure function of the episode reports, so the two
//! commands produce byte-identical files for the same traces.

use std::fs;
use std::path::Path;

use forage_core::experiments::{aggregate, AggregateReport, Stat};
use forage_core::metrics::MetricReport;
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

pub const REPORT_SCHEMA: &str = "forage-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema: String,
    pub aggregate: AggregateReport,
    pub episodes: Vec<MetricReport>,
}

impl ReportFile {
    pub fn new(label: &str, episodes: Vec<MetricReport>) -> CliResult<Self> {
        Ok(ReportFile {
            schema: REPORT_SCHEMA.into(),
            aggregate: aggregate(label, &episodes)?,
            episodes,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let file: ReportFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if file.schema != REPORT_SCHEMA {
            return Err(CliError::Config(format!(
                "{}: unsupported report schema '{}'",
                path.display(),
                file.schema
            )));
        }
        Ok(file)
    }
}

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn stat_cells(s: Option<Stat>) -> [String; 2] {
    [num(s.map(|s| s.mean)), num(s.map(|s| s.ci))]
}

pub fn json_pretty<T: Serialize>(value: &T) -> CliResult<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn series_csv(agg: &AggregateReport) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    for name in MetricReport::SERIES {
        header.push(format!("{name}_mean"));
        header.push(format!("{name}_ci"));
    }
    w.write_record(&header)?;
    let len = agg.series.values().map(Vec::len).max().unwrap_or(0);
    for t in 0..len {
        let mut row = vec![t.to_string()];
        for name in MetricReport::SERIES {
            let s = agg.series.get(name).and_then(|v| v.get(t)).copied().flatten();
            row.extend(stat_cells(s));
        }
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

fn episodes_csv(episodes: &[MetricReport]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["episode".to_string(), "seed".into(), "t_end".into()];
    header.extend(MetricReport::SCALARS.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for (i, r) in episodes.iter().enumerate() {
        let mut row = vec![i.to_string(), r.seed.to_string(), r.t_end.to_string()];
        for name in MetricReport::SCALARS {
            row.push(num(r.scalar(name)?));
        }
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

fn summary_csv(agg: &AggregateReport) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["label".to_string(), "episodes".into()];
    let mut row = vec![agg.label.clone(), agg.episodes.to_string()];
    for name in MetricReport::SCALARS {
        header.push(format!("{name}_mean"));
        header.push(format!("{name}_ci"));
        row.extend(stat_cells(agg.scalars.get(name).copied().flatten()));
    }
    w.write_record(&header)?;
    w.write_record(&row)?;
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

/// Writes `report.json`, `series.csv`, `episodes.csv` and `summary.csv`.
pub fn write_reports(dir: &Path, file: &ReportFile) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), json_pretty(file)?)?;
    fs::write(dir.join("series.csv"), series_csv(&file.aggregate)?)?;
    fs::write(dir.join("episodes.csv"), episodes_csv(&file.episodes)?)?;
    fs::write(dir.join("summary.csv"), summary_csv(&file.aggregate)?)?;
    Ok(())
}
