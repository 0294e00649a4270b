//! Uniform ground grid used for coverage targets and crisis-map cells.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{Point3, Rect};

/// Axis-aligned grid of square cells over a ground rectangle.
///
/// Cells are right-open intervals: cell `(ix, iy)` owns
/// `[origin + ix·s, origin + (ix+1)·s)` on each axis, so a point on an
/// interior boundary belongs to the higher-index cell. Linear indices are
/// row-major, `iy * nx + ix`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundGrid {
    origin: [f64; 2],
    cell_size: f64,
    nx: usize,
    ny: usize,
    sample_height: f64,
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("cell_size must be positive and finite, got {0}")]
    BadCellSize(f64),
    #[error("grid extent must be positive in both axes")]
    EmptyExtent,
    #[error("sample_height must be non-negative and finite, got {0}")]
    BadSampleHeight(f64),
}

impl GroundGrid {
    /// Smallest grid of `cell_size` cells whose extent covers `bounds`.
    pub fn covering(bounds: &Rect, cell_size: f64, sample_height: f64) -> Result<Self, GridError> {
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(GridError::BadCellSize(cell_size));
        }
        if !(sample_height >= 0.0) || !sample_height.is_finite() {
            return Err(GridError::BadSampleHeight(sample_height));
        }
        if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
            return Err(GridError::EmptyExtent);
        }
        let nx = (bounds.width() / cell_size).ceil() as usize;
        let ny = (bounds.height() / cell_size).ceil() as usize;
        Ok(Self {
            origin: bounds.min,
            cell_size,
            nx: nx.max(1),
            ny: ny.max(1),
            sample_height,
        })
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn sample_height(&self) -> f64 {
        self.sample_height
    }

    /// Center of every cell at `sample_height`, in row-major order.
    pub fn cell_centers(&self) -> Vec<Point3> {
        let mut out = Vec::with_capacity(self.n_cells());
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                out.push(self.cell_center(ix, iy));
            }
        }
        out
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point3 {
        Point3::new(
            self.origin[0] + (ix as f64 + 0.5) * self.cell_size,
            self.origin[1] + (iy as f64 + 0.5) * self.cell_size,
            self.sample_height,
        )
    }

    /// Cell containing `p`, or `None` when `p` lies outside the grid extent.
    pub fn cell_index_of(&self, p: [f64; 2]) -> Option<usize> {
        let fx = (p[0] - self.origin[0]) / self.cell_size;
        let fy = (p[1] - self.origin[1]) / self.cell_size;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let ix = fx.floor() as usize;
        let iy = fy.floor() as usize;
        if ix >= self.nx || iy >= self.ny {
            return None;
        }
        Some(iy * self.nx + ix)
    }

    /// `(ix, iy)` of a row-major linear index.
    pub fn cell_coords(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }
}
