//! Episode traces.
//!
//! A trace is JSON Lines: one header line, then events ordered by step and
//! canonical agent order, then one footer line. Readers accept the same stream
//! gzip-compressed (detected from the magic bytes).

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};

use crate::agents::{IdlenessMode, Team, TeamSpec};
use crate::grid::CountGrid;
use crate::world::{Action, GridMap, NodeId};
use crate::{Error, Result};

pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRecord {
    pub cell_size: f64,
    pub rows: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub id: usize,
    pub team: Team,
    pub start: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamRecord {
    pub scouts: TeamSpec,
    pub foragers: TeamSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyLabels {
    pub scout: String,
    pub forager: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub trace_version: u32,
    pub seed: u64,
    pub config_digest: String,
    pub map_digest: String,
    pub map: MapRecord,
    pub k: u32,
    pub wind: (f64, f64),
    pub hotspot: NodeId,
    pub spawn_digest: String,
    pub horizon: u32,
    pub forgetting: f64,
    pub idleness_mode: IdlenessMode,
    pub teams: TeamRecord,
    pub agents: Vec<AgentRecord>,
    pub policies: PolicyLabels,
}

impl TraceHeader {
    pub fn grid_map(&self) -> Result<GridMap> {
        GridMap::from_rows(&self.map.rows, self.map.cell_size)
    }

    pub fn team_of(&self, agent: usize) -> Option<Team> {
        self.agents.iter().find(|a| a.id == agent).map(|a| a.team)
    }

    pub fn spec_of(&self, team: Team) -> TeamSpec {
        match team {
            Team::Scout => self.teams.scouts,
            Team::Forager => self.teams.foragers,
        }
    }

    pub fn count(&self, team: Team) -> usize {
        self.agents.iter().filter(|a| a.team == team).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub t: u32,
    pub alive: u32,
    pub discovered: u32,
    pub collected: u32,
    pub mi: f64,
    pub visible_digest: String,
    /// Field of view of every agent, by agent id.
    pub fov: Vec<Vec<NodeId>>,
    /// Sparse ground truth `Y` after the step: `(cell, count)` with count > 0.
    pub truth: Vec<(NodeId, u32)>,
}

impl StepSummary {
    pub fn truth_grid(&self, height: usize, width: usize) -> CountGrid {
        let mut y = CountGrid::filled(height, width, 0);
        for &(n, c) in &self.truth {
            y[n] = c;
        }
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndReason {
    /// Horizon reached.
    Horizon,
    /// Every item collected.
    Cleared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Footer {
    pub t_end: u32,
    pub reason: EndReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Event {
    Move {
        t: u32,
        agent: usize,
        action: Action,
        from: NodeId,
        via: Option<NodeId>,
        to: NodeId,
    },
    Discover {
        t: u32,
        item: u32,
        cell: NodeId,
        agent: usize,
        team: Team,
    },
    Collect {
        t: u32,
        item: u32,
        cell: NodeId,
        agent: usize,
    },
    StepSummary(StepSummary),
}

impl Event {
    pub fn t(&self) -> u32 {
        match self {
            Event::Move { t, .. } | Event::Discover { t, .. } | Event::Collect { t, .. } => *t,
            Event::StepSummary(s) => s.t,
        }
    }
}

/// Header and footer lines; events are tagged the same way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
enum Meta {
    Header(TraceHeader),
    Footer(Footer),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub header: TraceHeader,
    pub events: Vec<Event>,
    pub footer: Footer,
}

impl EpisodeTrace {
    pub fn summaries(&self) -> impl Iterator<Item = &StepSummary> {
        self.events.iter().filter_map(|e| match e {
            Event::StepSummary(s) => Some(s),
            _ => None,
        })
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        fn line<W: Write, T: Serialize>(w: &mut W, value: &T) -> Result<()> {
            serde_json::to_writer(&mut *w, value).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
            Ok(())
        }
        line(&mut w, &Meta::Header(self.header.clone()))?;
        for e in &self.events {
            line(&mut w, e)?;
        }
        line(&mut w, &Meta::Footer(self.footer.clone()))
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(File::create(path)?);
        self.write_jsonl(&mut f)?;
        f.flush()?;
        Ok(())
    }

    /// Reads a plain or gzip-compressed trace file.
    pub fn load(path: &Path) -> Result<Self> {
        let mut f = File::open(path)?;
        let mut magic = [0u8; 2];
        let n = f.read(&mut magic)?;
        drop(f);
        let f = File::open(path)?;
        if n == 2 && magic == [0x1f, 0x8b] {
            Self::parse(BufReader::new(GzDecoder::new(f)))
        } else {
            Self::parse(BufReader::new(f))
        }
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut header = None;
        let mut events = Vec::new();
        let mut footer = None;
        let mut last_line = 0;
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            last_line = lineno;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if footer.is_some() {
                return Err(Error::Trace {
                    line: lineno,
                    message: "content after footer".into(),
                });
            }
            if header.is_none() {
                header = Some(parse_header(&line, lineno)?);
                continue;
            }
            let value: serde_json::Value =
                serde_json::from_str(&line).map_err(|e| trace_err(lineno, e))?;
            match value.get("type").and_then(|v| v.as_str()) {
                Some("HEADER") => {
                    return Err(Error::Trace {
                        line: lineno,
                        message: "duplicate header".into(),
                    })
                }
                Some("FOOTER") => match serde_json::from_value(value) {
                    Ok(Meta::Footer(f)) => footer = Some(f),
                    Ok(Meta::Header(_)) => unreachable!("type tag checked"),
                    Err(e) => return Err(trace_err(lineno, e)),
                },
                _ => events.push(serde_json::from_value(value).map_err(|e| trace_err(lineno, e))?),
            }
        }
        let header = header.ok_or(Error::Trace {
            line: 0,
            message: "empty trace".into(),
        })?;
        let footer = footer.ok_or(Error::Trace {
            line: last_line,
            message: "missing footer (truncated trace)".into(),
        })?;
        Ok(EpisodeTrace {
            header,
            events,
            footer,
        })
    }
}

fn trace_err(line: usize, e: impl std::fmt::Display) -> Error {
    Error::Trace {
        line,
        message: e.to_string(),
    }
}

/// Checks the version before decoding the rest so a newer schema reports a
/// version error rather than a field error.
fn parse_header(line: &str, lineno: usize) -> Result<TraceHeader> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| trace_err(lineno, e))?;
    if value.get("type").and_then(|v| v.as_str()) != Some("HEADER") {
        return Err(trace_err(lineno, "first line is not a header"));
    }
    let found = value
        .get("trace_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| trace_err(lineno, "header lacks trace_version"))?;
    if found != TRACE_VERSION as u64 {
        return Err(Error::TraceVersion {
            found: found as u32,
            expected: TRACE_VERSION,
        });
    }
    match serde_json::from_value(value) {
        Ok(Meta::Header(h)) => Ok(h),
        Ok(Meta::Footer(_)) => unreachable!("type tag checked"),
        Err(e) => Err(trace_err(lineno, e)),
    }
}
