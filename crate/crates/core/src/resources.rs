//! The dynamic item field.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::grid::CountGrid;
use crate::world::{GridMap, NodeId};
use crate::{Error, Result};

/// Rejection-sampling budget per item.
pub const MAX_SPAWN_DRAWS: u32 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub alive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftParams {
    pub w_wind: f64,
    pub w_rand: f64,
    pub dt: f64,
    /// Per-component bound of the episode wind draw, cells/step.
    pub wind_max: f64,
    /// Per-component bound of the per-item per-step noise, cells/step.
    pub rand_max: f64,
}

impl Default for DriftParams {
    fn default() -> Self {
        DriftParams {
            w_wind: 1.0,
            w_rand: 1.0,
            dt: 1.0,
            wind_max: 0.05,
            rand_max: 0.05,
        }
    }
}

impl DriftParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.w_wind, self.w_rand, self.dt, self.wind_max, self.rand_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.wind_max < 0.0 || self.rand_max < 0.0 || self.dt < 0.0 {
            return Err(Error::Config(
                "drift bounds and dt must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpawnParams {
    pub k_mean: f64,
    pub k_std: f64,
    pub k_min: u32,
    pub k_max: u32,
    /// Isotropic standard deviation around the hotspot, in cells.
    pub spread_std: f64,
}

impl Default for SpawnParams {
    fn default() -> Self {
        SpawnParams {
            k_mean: 100.0,
            k_std: 15.0,
            k_min: 10,
            k_max: 200,
            spread_std: 3.0,
        }
    }
}

impl SpawnParams {
    pub fn validate(&self) -> Result<()> {
        if self.k_min < 1 || self.k_max < self.k_min {
            return Err(Error::Config(format!(
                "spawn bounds need 1 <= k_min <= k_max, got [{}, {}]",
                self.k_min, self.k_max
            )));
        }
        if !(self.spread_std > 0.0 && self.spread_std.is_finite()) {
            return Err(Error::Config("spawn.spread_std must be positive".into()));
        }
        if !(self.k_std >= 0.0 && self.k_std.is_finite() && self.k_mean.is_finite()) {
            return Err(Error::Config("spawn.k_std must be non-negative".into()));
        }
        Ok(())
    }
}

/// Items plus the episode's wind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemField {
    pub items: Vec<Item>,
    pub wind: (f64, f64),
    pub params: DriftParams,
    pub hotspot: NodeId,
}

/// Uniform draw on `[-bound, bound)`; always consumes exactly one value.
fn symmetric<R: Rng + ?Sized>(rng: &mut R, bound: f64) -> f64 {
    bound * (2.0 * rng.random::<f64>() - 1.0)
}

pub fn draw_wind<R: Rng + ?Sized>(drift: &DriftParams, rng: &mut R) -> (f64, f64) {
    (symmetric(rng, drift.wind_max), symmetric(rng, drift.wind_max))
}

/// Spawns the episode's items around a uniformly drawn hotspot.
///
/// `spawn_rng` drives the item count, hotspot and positions; `wind_rng` the
/// wind vector.
pub fn spawn_items<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    map: &GridMap,
    spawn: &SpawnParams,
    drift: DriftParams,
    spawn_rng: &mut R1,
    wind_rng: &mut R2,
) -> Result<ItemField> {
    spawn.validate()?;
    drift.validate()?;
    let count_dist = Normal::new(spawn.k_mean, spawn.k_std)
        .map_err(|e| Error::Config(format!("spawn count distribution: {e}")))?;
    let k = count_dist
        .sample(spawn_rng)
        .round()
        .clamp(spawn.k_min as f64, spawn.k_max as f64) as u32;

    let nodes: Vec<NodeId> = map.nodes().collect();
    let hotspot = nodes[spawn_rng.random_range(0..nodes.len())];
    let (cx, cy) = map.cell_center(hotspot);
    let sigma = spawn.spread_std * map.cell_size();
    let offset = Normal::new(0.0, sigma)
        .map_err(|e| Error::Config(format!("spawn spread distribution: {e}")))?;

    let mut items = Vec::with_capacity(k as usize);
    for id in 0..k {
        let mut placed = None;
        for _ in 0..MAX_SPAWN_DRAWS {
            let x = cx + offset.sample(spawn_rng);
            let y = cy + offset.sample(spawn_rng);
            if map.point_is_navigable(x, y) {
                placed = Some((x, y));
                break;
            }
        }
        let (x, y) = placed.ok_or(Error::Spawn {
            item: id,
            attempts: MAX_SPAWN_DRAWS,
        })?;
        items.push(Item {
            id,
            x,
            y,
            alive: true,
        });
    }
    let wind = draw_wind(&drift, wind_rng);
    Ok(ItemField {
        items,
        wind,
        params: drift,
        hotspot,
    })
}

impl ItemField {
    /// Initial item count `K`.
    pub fn initial_count(&self) -> usize {
        self.items.len()
    }

    pub fn alive_count(&self) -> usize {
        self.items.iter().filter(|it| it.alive).count()
    }

    /// One drift step. `noise[k]` is item `k`'s private noise stream, so an
    /// item's trajectory does not depend on which other items are still alive.
    /// A displacement that would leave navigable area is cancelled.
    pub fn step<R: Rng>(&mut self, map: &GridMap, noise: &mut [R]) {
        let p = self.params;
        for item in self.items.iter_mut().filter(|it| it.alive) {
            let rng = &mut noise[item.id as usize];
            let rx = symmetric(rng, p.rand_max);
            let ry = symmetric(rng, p.rand_max);
            let nx = item.x + p.dt * (p.w_wind * self.wind.0 + p.w_rand * rx);
            let ny = item.y + p.dt * (p.w_wind * self.wind.1 + p.w_rand * ry);
            if map.point_is_navigable(nx, ny) {
                item.x = nx;
                item.y = ny;
            }
        }
    }

    /// Cell of every alive item, by id.
    pub fn item_cell(&self, map: &GridMap, item: &Item) -> NodeId {
        map.node_of_point(item.x, item.y)
            .expect("alive items stay inside the grid")
    }

    /// Ground-truth count matrix `Y`.
    pub fn discretize(&self, map: &GridMap) -> CountGrid {
        let mut y = CountGrid::filled(map.height(), map.width(), 0);
        for item in self.items.iter().filter(|it| it.alive) {
            y[self.item_cell(map, item)] += 1;
        }
        y
    }

    /// Destroys every alive item in `node`'s area; returns their ids.
    pub fn collect_at(&mut self, map: &GridMap, node: NodeId) -> Vec<u32> {
        let mut taken = Vec::new();
        for item in self.items.iter_mut().filter(|it| it.alive) {
            if map.node_of_point(item.x, item.y) == Some(node) {
                item.alive = false;
                taken.push(item.id);
            }
        }
        taken
    }

    /// SHA-256 over initial positions, count and wind (bit patterns).
    pub fn spawn_digest(&self) -> String {
        let mut bytes = Vec::with_capacity(16 + self.items.len() * 16);
        bytes.extend_from_slice(&(self.items.len() as u64).to_le_bytes());
        bytes.extend_from_slice(&self.wind.0.to_bits().to_le_bytes());
        bytes.extend_from_slice(&self.wind.1.to_bits().to_le_bytes());
        for it in &self.items {
            bytes.extend_from_slice(&it.x.to_bits().to_le_bytes());
            bytes.extend_from_slice(&it.y.to_bits().to_le_bytes());
        }
        crate::world::hex_digest(&bytes)
    }
}
