//! Agents, sensing, movement and the shared belief model.

use serde::{Deserialize, Serialize};

use crate::grid::{CountGrid, Grid};
use crate::world::{Action, GridMap, NodeId};
use crate::{Error, Result};

/// Scouts sort before foragers; that order is the canonical team order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Team {
    Scout,
    Forager,
}

impl Team {
    pub fn as_str(self) -> &'static str {
        match self {
            Team::Scout => "scout",
            Team::Forager => "forager",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: usize,
    pub team: Team,
    pub position: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeamSpec {
    pub count: usize,
    /// Edges traversed per step (1 or 2).
    pub speed: u8,
    /// Sensing radius ρ in cells; 0 means the own cell only.
    pub sensing_radius: f64,
}

impl TeamSpec {
    pub fn scouts() -> Self {
        TeamSpec {
            count: 2,
            speed: 2,
            sensing_radius: 4.0,
        }
    }

    pub fn foragers() -> Self {
        TeamSpec {
            count: 2,
            speed: 1,
            sensing_radius: 0.0,
        }
    }

    pub fn default_for(team: Team) -> Self {
        match team {
            Team::Scout => TeamSpec::scouts(),
            Team::Forager => TeamSpec::foragers(),
        }
    }

    pub fn validate(&self, team: Team) -> Result<()> {
        if !(self.speed == 1 || self.speed == 2) {
            return Err(Error::Config(format!(
                "{} speed must be 1 or 2, got {}",
                team.as_str(),
                self.speed
            )));
        }
        if !(self.sensing_radius >= 0.0 && self.sensing_radius.is_finite()) {
            return Err(Error::Config(format!(
                "{} sensing_radius must be >= 0",
                team.as_str()
            )));
        }
        Ok(())
    }
}

/// Navigable cells whose centre lies strictly closer than `radius` to
/// `position` (Euclidean, cell units), in row-major order. A zero radius
/// yields exactly the own cell.
pub fn field_of_view(map: &GridMap, position: NodeId, radius: f64) -> Vec<NodeId> {
    if radius <= 0.0 {
        return vec![position];
    }
    let reach = radius.ceil() as isize;
    let r2 = radius * radius;
    let mut cells = Vec::new();
    for di in -reach..=reach {
        for dj in -reach..=reach {
            if ((di * di + dj * dj) as f64) >= r2 {
                continue;
            }
            let i = position.i as isize + di;
            let j = position.j as isize + dj;
            if !map.in_bounds(i, j) {
                continue;
            }
            let n = NodeId::new(i as usize, j as usize);
            if map.is_navigable(n) {
                cells.push(n);
            }
        }
    }
    cells
}

/// Cells traversed by one move: an optional intermediate cell and the final
/// cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Displacement {
    pub via: Option<NodeId>,
    pub to: NodeId,
}

/// Applies `action` as `speed` single-edge traversals in one direction,
/// stopping early at the last valid cell.
pub fn apply_move(map: &GridMap, from: NodeId, action: Action, speed: u8) -> Displacement {
    let Some(dir) = action.direction() else {
        return Displacement {
            via: None,
            to: from,
        };
    };
    let mut cells = Vec::with_capacity(speed as usize);
    let mut cur = from;
    for _ in 0..speed {
        match map.step(cur, dir) {
            Some(next) => {
                cells.push(next);
                cur = next;
            }
            None => break,
        }
    }
    let via = if cells.len() >= 2 {
        Some(cells[cells.len() - 2])
    } else {
        None
    };
    Displacement { via, to: cur }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdlenessMode {
    /// Reset when the cell enters any agent's field of view.
    #[default]
    Observe,
    /// Reset only when an agent physically occupies the cell.
    Visit,
}

/// Idleness `I = 1 − f^age`; a cell never reset is maximally stale (`I = 1`).
pub fn idleness(age: Option<u32>, forgetting: f64) -> f64 {
    match age {
        None => 1.0,
        Some(a) => 1.0 - forgetting.powi(a as i32),
    }
}

/// Team-wide estimate `Ŷ` plus observation and idleness bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedModel {
    pub estimate: CountGrid,
    pub last_seen: Grid<Option<u32>>,
    /// Steps since last reset; `None` until the first reset.
    pub age: Grid<Option<u32>>,
    pub forgetting: f64,
    pub mode: IdlenessMode,
}

impl SharedModel {
    pub fn new(map: &GridMap, forgetting: f64, mode: IdlenessMode) -> Self {
        let (h, w) = (map.height(), map.width());
        SharedModel {
            estimate: CountGrid::filled(h, w, 0),
            last_seen: Grid::filled(h, w, None),
            age: Grid::filled(h, w, None),
            forgetting,
            mode,
        }
    }

    pub fn idleness(&self, n: NodeId) -> f64 {
        idleness(self.age[n], self.forgetting)
    }

    /// Copies the truth into every visible cell and advances idleness ages.
    ///
    /// `visible` is the union of all fields of view; `occupied` marks cells
    /// physically visited this step (used by [`IdlenessMode::Visit`]).
    pub fn update(
        &mut self,
        map: &GridMap,
        truth: &CountGrid,
        visible: &Grid<bool>,
        occupied: &Grid<bool>,
        t: u32,
    ) {
        let reset = match self.mode {
            IdlenessMode::Observe => visible,
            IdlenessMode::Visit => occupied,
        };
        for n in map.nodes() {
            if visible[n] {
                self.estimate[n] = truth[n];
                self.last_seen[n] = Some(t);
            }
            self.age[n] = if reset[n] {
                Some(0)
            } else {
                self.age[n].map(|a| a + 1)
            };
        }
    }
}

/// Union of cell lists as a mask.
pub fn coverage_mask<'a, I>(map: &GridMap, lists: I) -> Grid<bool>
where
    I: IntoIterator<Item = &'a [NodeId]>,
{
    let mut mask = Grid::filled(map.height(), map.width(), false);
    for list in lists {
        for &n in list {
            mask[n] = true;
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fov_special_cases() {
        let map = GridMap::open(9, 9).unwrap();
        let c = NodeId::new(4, 4);
        assert_eq!(field_of_view(&map, c, 0.0), vec![c]);
        assert_eq!(field_of_view(&map, c, 1.5).len(), 9);
        assert_eq!(field_of_view(&map, c, 1.0), vec![c]);
    }

    #[test]
    fn fov_skips_obstacles() {
        let map = GridMap::parse("...\n.#.\n...\n").unwrap();
        let fov = field_of_view(&map, NodeId::new(0, 0), 1.5);
        assert_eq!(fov, vec![NodeId::new(0, 0), NodeId::new(0, 1), NodeId::new(1, 0)]);
    }

    #[test]
    fn moves() {
        let map = GridMap::open(3, 5).unwrap();
        let a = NodeId::new(0, 0);
        assert_eq!(apply_move(&map, a, Action::Stay, 2).to, a);
        let d = apply_move(&map, a, Action::E, 2);
        assert_eq!(d.to, NodeId::new(0, 2));
        assert_eq!(d.via, Some(NodeId::new(0, 1)));
        let d = apply_move(&map, NodeId::new(0, 3), Action::E, 2);
        assert_eq!(d.to, NodeId::new(0, 4));
        assert_eq!(d.via, None);
        assert_eq!(apply_move(&map, a, Action::N, 2).to, a);
        assert_eq!(apply_move(&map, a, Action::SE, 1).to, NodeId::new(1, 1));
    }

    #[test]
    fn model_full_and_empty_visibility() {
        let map = GridMap::parse("..\n.#\n").unwrap();
        let mut truth = CountGrid::filled(2, 2, 0);
        truth[NodeId::new(0, 1)] = 3;
        let all = Grid::filled(2, 2, true);
        let none = Grid::filled(2, 2, false);
        let mut m = SharedModel::new(&map, 0.95, IdlenessMode::Observe);
        m.update(&map, &truth, &all, &none, 0);
        assert_eq!(m.estimate[NodeId::new(0, 1)], 3);
        assert_eq!(m.age[NodeId::new(0, 0)], Some(0));
        // blocked cell never tracked
        assert_eq!(m.age[NodeId::new(1, 1)], None);

        truth[NodeId::new(0, 1)] = 0;
        m.update(&map, &truth, &none, &none, 1);
        // stale estimate survives, ages advance
        assert_eq!(m.estimate[NodeId::new(0, 1)], 3);
        assert_eq!(m.age[NodeId::new(0, 0)], Some(1));
        assert_eq!(m.last_seen[NodeId::new(0, 0)], Some(0));
    }

    #[test]
    fn visit_mode_resets_only_occupied() {
        let map = GridMap::open(1, 3).unwrap();
        let truth = CountGrid::filled(1, 3, 0);
        let all = Grid::filled(1, 3, true);
        let mut occ = Grid::filled(1, 3, false);
        occ[NodeId::new(0, 1)] = true;
        let mut m = SharedModel::new(&map, 0.9, IdlenessMode::Visit);
        m.update(&map, &truth, &all, &occ, 0);
        assert_eq!(m.age[NodeId::new(0, 0)], None);
        assert_eq!(m.age[NodeId::new(0, 1)], Some(0));
        assert_eq!(m.last_seen[NodeId::new(0, 0)], Some(0));
    }

    #[test]
    fn idleness_law() {
        assert_eq!(idleness(Some(0), 0.95), 0.0);
        assert_eq!(idleness(None, 0.95), 1.0);
        assert!((idleness(Some(10), 0.95) - 0.401_263_060_761_621_1).abs() < 1e-12);
        assert!(idleness(Some(10_000), 0.95) > 0.999_999);
    }
}
