//! Dense row-major matrices over the map's H×W cells.

use serde::{Deserialize, Serialize};

use crate::world::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Grid {
            height,
            width,
            data: vec![value; height * width],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), height * width, "grid data length mismatch");
        Grid {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.width + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.data[i * self.width + j]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T> std::ops::Index<NodeId> for Grid<T> {
    type Output = T;

    fn index(&self, n: NodeId) -> &T {
        &self.data[n.i * self.width + n.j]
    }
}

impl<T> std::ops::IndexMut<NodeId> for Grid<T> {
    fn index_mut(&mut self, n: NodeId) -> &mut T {
        &mut self.data[n.i * self.width + n.j]
    }
}

/// Item-count matrix (ground truth `Y` or estimate `Ŷ`).
pub type CountGrid = Grid<u32>;
