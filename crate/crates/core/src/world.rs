//! Static environment geometry.
//!
//! Row `i` grows southward and column `j` eastward. Continuous `x` maps to rows
//! and `y` to columns: cell `(i, j)` covers `[i·s, (i+1)·s) × [j·s, (j+1)·s)` for
//! cell size `s`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::grid::Grid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct NodeId {
    pub i: usize,
    pub j: usize,
}

impl NodeId {
    pub const fn new(i: usize, j: usize) -> Self {
        NodeId { i, j }
    }
}

impl From<(usize, usize)> for NodeId {
    fn from((i, j): (usize, usize)) -> Self {
        NodeId { i, j }
    }
}

impl From<NodeId> for (usize, usize) {
    fn from(n: NodeId) -> Self {
        (n.i, n.j)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

/// The eight compass moves, in canonical tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::N,
        Direction::NE,
        Direction::E,
        Direction::SE,
        Direction::S,
        Direction::SW,
        Direction::W,
        Direction::NW,
    ];

    /// (row, column) offset.
    pub const fn offset(self) -> (isize, isize) {
        match self {
            Direction::N => (-1, 0),
            Direction::NE => (-1, 1),
            Direction::E => (0, 1),
            Direction::SE => (1, 1),
            Direction::S => (1, 0),
            Direction::SW => (1, -1),
            Direction::W => (0, -1),
            Direction::NW => (-1, -1),
        }
    }

    pub const fn is_diagonal(self) -> bool {
        matches!(
            self,
            Direction::NE | Direction::SE | Direction::SW | Direction::NW
        )
    }

    pub const fn index(self) -> usize {
        self as usize
    }
}

/// One decision: a compass move or staying put. `|A| = 9` for every agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
    #[serde(rename = "STAY")]
    Stay,
}

impl Action {
    pub const ALL: [Action; 9] = [
        Action::N,
        Action::NE,
        Action::E,
        Action::SE,
        Action::S,
        Action::SW,
        Action::W,
        Action::NW,
        Action::Stay,
    ];

    pub fn direction(self) -> Option<Direction> {
        match self {
            Action::Stay => None,
            a => Some(Direction::ALL[a as usize]),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Action> {
        Action::ALL.get(index).copied()
    }
}

impl From<Direction> for Action {
    fn from(d: Direction) -> Self {
        Action::ALL[d.index()]
    }
}

/// Navigability matrix `M` with 8-connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    navigable: Grid<bool>,
    cell_size: f64,
    navigable_count: usize,
}

impl GridMap {
    pub fn new(navigable: Grid<bool>, cell_size: f64) -> Result<Self> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::Domain(format!(
                "cell_size must be positive, got {cell_size}"
            )));
        }
        if navigable.height() == 0 || navigable.width() == 0 {
            return Err(Error::EmptyMap);
        }
        let navigable_count = navigable.as_slice().iter().filter(|&&b| b).count();
        if navigable_count == 0 {
            return Err(Error::EmptyMap);
        }
        Ok(GridMap {
            navigable,
            cell_size,
            navigable_count,
        })
    }

    /// Fully navigable `height × width` map with unit cells.
    pub fn open(height: usize, width: usize) -> Result<Self> {
        GridMap::new(Grid::filled(height, width, true), 1.0)
    }

    /// Parses the ASCII map format: `.` navigable, `#` obstacle, optional
    /// leading `# cell_size=<float>` header.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cell_size = 1.0;
        let mut rows: Vec<&str> = Vec::new();
        let mut first_row_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if rows.is_empty() && line.starts_with("# ") {
                let setting = line[2..].trim();
                let value = setting.strip_prefix("cell_size=").ok_or_else(|| Error::MapFormat {
                    line: line_no,
                    message: format!("unknown header `{setting}`"),
                })?;
                cell_size = value.trim().parse::<f64>().map_err(|e| Error::MapFormat {
                    line: line_no,
                    message: format!("bad cell_size `{value}`: {e}"),
                })?;
                continue;
            }
            if line.is_empty() {
                if rows.is_empty() {
                    continue;
                }
                // trailing blank lines are allowed, interior ones are not
                if text.lines().skip(idx).all(|l| l.trim().is_empty()) {
                    break;
                }
                return Err(Error::MapFormat {
                    line: line_no,
                    message: "blank line inside the grid".into(),
                });
            }
            if rows.is_empty() {
                first_row_line = line_no;
            }
            rows.push(line);
        }
        let height = rows.len();
        if height == 0 {
            return Err(Error::EmptyMap);
        }
        let width = rows[0].chars().count();
        let mut cells = Vec::with_capacity(height * width);
        for (r, row) in rows.iter().enumerate() {
            let line = first_row_line + r;
            if row.chars().count() != width {
                return Err(Error::MapFormat {
                    line,
                    message: format!(
                        "ragged row: expected {width} cells, found {}",
                        row.chars().count()
                    ),
                });
            }
            for c in row.chars() {
                match c {
                    '.' => cells.push(true),
                    '#' => cells.push(false),
                    other => {
                        return Err(Error::MapFormat {
                            line,
                            message: format!("unexpected character `{other}`"),
                        })
                    }
                }
            }
        }
        GridMap::new(Grid::from_vec(height, width, cells), cell_size)
    }

    /// Serialises back to the ASCII format (header included).
    pub fn to_text(&self) -> String {
        let mut out = format!("# cell_size={}\n", self.cell_size);
        for row in self.rows() {
            out.push_str(&row);
            out.push('\n');
        }
        out
    }

    pub fn rows(&self) -> Vec<String> {
        (0..self.height())
            .map(|i| {
                (0..self.width())
                    .map(|j| if *self.navigable.get(i, j) { '.' } else { '#' })
                    .collect()
            })
            .collect()
    }

    pub fn from_rows(rows: &[String], cell_size: f64) -> Result<Self> {
        let mut text = format!("# cell_size={cell_size}\n");
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        GridMap::parse(&text)
    }

    /// SHA-256 of the canonical text form, hex encoded.
    pub fn digest(&self) -> String {
        hex_digest(self.to_text().as_bytes())
    }

    pub fn height(&self) -> usize {
        self.navigable.height()
    }

    pub fn width(&self) -> usize {
        self.navigable.width()
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    /// `|V|`.
    pub fn navigable_count(&self) -> usize {
        self.navigable_count
    }

    pub fn navigable_grid(&self) -> &Grid<bool> {
        &self.navigable
    }

    pub fn in_bounds(&self, i: isize, j: isize) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.height() && (j as usize) < self.width()
    }

    pub fn is_navigable(&self, n: NodeId) -> bool {
        n.i < self.height() && n.j < self.width() && self.navigable[n]
    }

    fn require_navigable(&self, n: NodeId) -> Result<()> {
        if self.is_navigable(n) {
            Ok(())
        } else {
            Err(Error::NotNavigable(n))
        }
    }

    /// Navigable nodes in row-major order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.height())
            .flat_map(move |i| (0..self.width()).map(move |j| NodeId::new(i, j)))
            .filter(move |&n| self.navigable[n])
    }

    pub fn index_of(&self, n: NodeId) -> usize {
        n.i * self.width() + n.j
    }

    pub fn node_at(&self, index: usize) -> NodeId {
        NodeId::new(index / self.width(), index % self.width())
    }

    /// The navigable cell one edge away in `dir`, if any.
    pub fn step(&self, from: NodeId, dir: Direction) -> Option<NodeId> {
        let (di, dj) = dir.offset();
        let i = from.i as isize + di;
        let j = from.j as isize + dj;
        if !self.in_bounds(i, j) {
            return None;
        }
        let n = NodeId::new(i as usize, j as usize);
        self.navigable[n].then_some(n)
    }

    /// Navigable Chebyshev neighbours in order N, NE, E, SE, S, SW, W, NW.
    pub fn neighbors(&self, node: NodeId) -> Result<Vec<NodeId>> {
        self.require_navigable(node)?;
        Ok(Direction::ALL
            .iter()
            .filter_map(|&d| self.step(node, d))
            .collect())
    }

    /// Cell whose area contains `(x, y)`; `None` outside the grid.
    pub fn node_of_point(&self, x: f64, y: f64) -> Option<NodeId> {
        if !(x.is_finite() && y.is_finite()) {
            return None;
        }
        let fi = (x / self.cell_size).floor();
        let fj = (y / self.cell_size).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.height() as f64 || fj >= self.width() as f64 {
            return None;
        }
        Some(NodeId::new(fi as usize, fj as usize))
    }

    /// True when `(x, y)` falls inside a navigable cell's area.
    pub fn point_is_navigable(&self, x: f64, y: f64) -> bool {
        self.node_of_point(x, y).is_some_and(|n| self.navigable[n])
    }

    pub fn cell_center(&self, n: NodeId) -> (f64, f64) {
        (
            (n.i as f64 + 0.5) * self.cell_size,
            (n.j as f64 + 0.5) * self.cell_size,
        )
    }

    /// Minimum-cost path (cardinal 1, diagonal √2); `None` if disconnected.
    pub fn shortest_path(&self, from: NodeId, to: NodeId) -> Result<Option<Path>> {
        self.require_navigable(from)?;
        self.require_navigable(to)?;
        let field = DistanceField::compute(self, from)?;
        Ok(field.path_to(self, to))
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Exact path cost `straight + diagonal·√2`.
///
/// Kept as integer counts so equal-cost ties are detected exactly, which the
/// canonical tie-break relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PathCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl PathCost {
    pub const ZERO: PathCost = PathCost {
        straight: 0,
        diagonal: 0,
    };

    pub fn value(self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * std::f64::consts::SQRT_2
    }

    fn plus(self, dir: Direction) -> PathCost {
        if dir.is_diagonal() {
            PathCost {
                straight: self.straight,
                diagonal: self.diagonal + 1,
            }
        } else {
            PathCost {
                straight: self.straight + 1,
                diagonal: self.diagonal,
            }
        }
    }
}

impl Ord for PathCost {
    fn cmp(&self, other: &Self) -> Ordering {
        // sign of a + b·√2 with a, b integers
        let a = self.straight as i64 - other.straight as i64;
        let b = self.diagonal as i64 - other.diagonal as i64;
        match (a.signum(), b.signum()) {
            (0, 0) => Ordering::Equal,
            (sa, sb) if sa >= 0 && sb >= 0 => Ordering::Greater,
            (sa, sb) if sa <= 0 && sb <= 0 => Ordering::Less,
            (1, _) => (a * a).cmp(&(2 * b * b)),
            _ => (2 * b * b).cmp(&(a * a)),
        }
    }
}

impl PartialOrd for PathCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub cost: PathCost,
}

impl Path {
    /// Direction of the first edge, `None` for a zero-length path.
    pub fn first_step(&self) -> Option<Direction> {
        let a = *self.nodes.first()?;
        let b = *self.nodes.get(1)?;
        direction_between(a, b)
    }
}

pub fn direction_between(a: NodeId, b: NodeId) -> Option<Direction> {
    let di = b.i as isize - a.i as isize;
    let dj = b.j as isize - a.j as isize;
    Direction::ALL.iter().copied().find(|d| d.offset() == (di, dj))
}

/// Single-source Dijkstra result.
///
/// Among equal-cost routes a node keeps the predecessor whose route leaves
/// the source by the earliest canonical direction.
#[derive(Debug, Clone)]
pub struct DistanceField {
    source: NodeId,
    cost: Vec<Option<PathCost>>,
    pred: Vec<Option<usize>>,
    first: Vec<Option<Direction>>,
}

impl DistanceField {
    pub fn compute(map: &GridMap, source: NodeId) -> Result<Self> {
        map.require_navigable(source)?;
        let n = map.height() * map.width();
        let mut cost: Vec<Option<PathCost>> = vec![None; n];
        let mut pred = vec![None; n];
        let mut first: Vec<Option<Direction>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        let s = map.index_of(source);
        cost[s] = Some(PathCost::ZERO);
        heap.push(std::cmp::Reverse((PathCost::ZERO, s)));
        while let Some(std::cmp::Reverse((c, u))) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            let un = map.node_at(u);
            for dir in Direction::ALL {
                let Some(vn) = map.step(un, dir) else {
                    continue;
                };
                let v = map.index_of(vn);
                if done[v] {
                    continue;
                }
                let nc = c.plus(dir);
                let nf = if u == s { Some(dir) } else { first[u] };
                let better = match cost[v] {
                    None => true,
                    Some(old) => match nc.cmp(&old) {
                        Ordering::Less => true,
                        Ordering::Equal => nf < first[v],
                        Ordering::Greater => false,
                    },
                };
                if better {
                    cost[v] = Some(nc);
                    pred[v] = Some(u);
                    first[v] = nf;
                    heap.push(std::cmp::Reverse((nc, v)));
                }
            }
        }
        Ok(DistanceField {
            source,
            cost,
            pred,
            first,
        })
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn cost(&self, map: &GridMap, to: NodeId) -> Option<PathCost> {
        self.cost[map.index_of(to)]
    }

    pub fn first_step(&self, map: &GridMap, to: NodeId) -> Option<Direction> {
        self.first[map.index_of(to)]
    }

    pub fn path_to(&self, map: &GridMap, to: NodeId) -> Option<Path> {
        let t = map.index_of(to);
        let cost = self.cost[t]?;
        let mut nodes = vec![to];
        let mut cur = t;
        while let Some(p) = self.pred[cur] {
            nodes.push(map.node_at(p));
            cur = p;
        }
        nodes.reverse();
        Some(Path { nodes, cost })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(text: &str) -> GridMap {
        GridMap::parse(text).unwrap()
    }

    #[test]
    fn load_open_and_holed() {
        let m = map("...\n...\n...\n");
        assert_eq!(m.navigable_count(), 9);
        let m = map("...\n.#.\n...\n");
        assert_eq!(m.navigable_count(), 8);
        assert!(!m.is_navigable(NodeId::new(1, 1)));
    }

    #[test]
    fn load_header_and_errors() {
        let m = map("# cell_size=2.5\n..\n..\n");
        assert_eq!(m.cell_size(), 2.5);
        assert!(matches!(
            GridMap::parse("...\n..\n"),
            Err(Error::MapFormat { line: 2, .. })
        ));
        assert!(matches!(GridMap::parse("##\n##\n"), Err(Error::EmptyMap)));
        assert!(matches!(GridMap::parse("..x\n"), Err(Error::MapFormat { .. })));
        assert!(matches!(GridMap::parse(""), Err(Error::EmptyMap)));
    }

    #[test]
    fn round_trips_text() {
        let m = map("# cell_size=1.5\n.#.\n...\n");
        assert_eq!(GridMap::parse(&m.to_text()).unwrap(), m);
    }

    #[test]
    fn neighbor_counts() {
        let m = GridMap::open(3, 3).unwrap();
        assert_eq!(m.neighbors(NodeId::new(1, 1)).unwrap().len(), 8);
        assert_eq!(m.neighbors(NodeId::new(0, 0)).unwrap().len(), 3);
        let boxed = map("###\n#.#\n###\n");
        assert!(boxed.neighbors(NodeId::new(1, 1)).unwrap().is_empty());
        assert!(matches!(
            boxed.neighbors(NodeId::new(0, 0)),
            Err(Error::NotNavigable(_))
        ));
    }

    #[test]
    fn neighbor_order_is_canonical() {
        let m = GridMap::open(3, 3).unwrap();
        let got = m.neighbors(NodeId::new(1, 1)).unwrap();
        let want: Vec<NodeId> = [(0, 1), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (1, 0), (0, 0)]
            .into_iter()
            .map(NodeId::from)
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn point_lookup() {
        let m = GridMap::open(4, 4).unwrap();
        assert_eq!(m.node_of_point(0.5, 0.5), Some(NodeId::new(0, 0)));
        assert_eq!(m.node_of_point(2.0, 0.0), Some(NodeId::new(2, 0)));
        assert_eq!(m.node_of_point(-0.1, 0.0), None);
        assert_eq!(m.node_of_point(4.0, 0.0), None);
        for n in m.nodes() {
            let (x, y) = m.cell_center(n);
            assert_eq!(m.node_of_point(x, y), Some(n));
        }
    }

    #[test]
    fn path_cost_ordering_is_exact() {
        let c = |s, d| PathCost {
            straight: s,
            diagonal: d,
        };
        assert!(c(2, 0) < c(0, 2)); // 2 < 2.83
        assert!(c(3, 0) > c(0, 2)); // 3 > 2.83
        assert!(c(1, 1) < c(3, 0));
        assert_eq!(c(2, 1).cmp(&c(2, 1)), Ordering::Equal);
        assert!(c(0, 7) < c(10, 0)); // 9.899 < 10
        assert!(c(0, 8) > c(11, 0)); // 11.31 > 11
    }

    #[test]
    fn trivial_paths() {
        let m = GridMap::open(3, 4).unwrap();
        let a = NodeId::new(0, 0);
        let p = m.shortest_path(a, a).unwrap().unwrap();
        assert_eq!(p.nodes, vec![a]);
        assert_eq!(p.cost.value(), 0.0);
        let p = m.shortest_path(a, NodeId::new(0, 3)).unwrap().unwrap();
        assert_eq!(p.cost.value(), 3.0);
        assert_eq!(p.nodes.len(), 4);
        assert_eq!(p.first_step(), Some(Direction::E));
    }

    #[test]
    fn disconnected_and_invalid() {
        let m = map(".#.\n.#.\n");
        assert!(m
            .shortest_path(NodeId::new(0, 0), NodeId::new(0, 2))
            .unwrap()
            .is_none());
        assert!(m
            .shortest_path(NodeId::new(0, 1), NodeId::new(0, 2))
            .is_err());
    }

    #[test]
    fn tie_break_prefers_earliest_first_direction() {
        // (1,0) -> (1,2) around a wall at (1,1): via N side or S side, equal cost
        let m = map("...\n.#.\n...\n");
        let p = m
            .shortest_path(NodeId::new(1, 0), NodeId::new(1, 2))
            .unwrap()
            .unwrap();
        assert_eq!(p.first_step(), Some(Direction::NE));
        assert_eq!(p.cost.diagonal, 2);
    }
}
