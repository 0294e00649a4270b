//! City model types, the JSON file format, and validation.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::poly::{is_simple, locate_point, signed_area, PointLocation, GEOM_EPS};

/// A point in the local East-North-Up frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn distance_2d(&self, other: &Point3) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        (dx * dx + dy * dy).sqrt()
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(v: [f64; 3]) -> Self {
        Self {
            x: v[0],
            y: v[1],
            z: v[2],
        }
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

/// Axis-aligned 2D rectangle, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    /// Inclusive containment on all edges.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }
}

/// An extruded-footprint building: a simple CCW polygon raised to `height`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Building {
    pub footprint: Vec<[f64; 2]>,
    pub height: f64,
}

impl Building {
    /// 2D axis-aligned bounding box of the footprint.
    pub fn bbox(&self) -> Rect {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for v in &self.footprint {
            for k in 0..2 {
                min[k] = min[k].min(v[k]);
                max[k] = max[k].max(v[k]);
            }
        }
        Rect { min, max }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to read city file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse city file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported city file version {0} (expected 1)")]
    UnsupportedVersion(u32),
    #[error("bounds are empty or inverted")]
    InvalidBounds,
    #[error("building {index}: footprint has {got} vertices, need at least 3")]
    TooFewVertices { index: usize, got: usize },
    #[error("building {index}: non-finite vertex coordinate")]
    NonFiniteVertex { index: usize },
    #[error("building {index}: height {height} must be positive")]
    NonPositiveHeight { index: usize, height: f64 },
    #[error("building {index}: footprint is self-intersecting or degenerate")]
    NotSimple { index: usize },
    #[error("building {index}: footprint must be counter-clockwise")]
    Clockwise { index: usize },
    #[error("building {index}: vertex {vertex} lies outside the model bounds")]
    VertexOutOfBounds { index: usize, vertex: usize },
}

/// On-disk city model, version 1.
///
/// `{"version": 1, "bounds": {"min": [x,y], "max": [x,y]},
///   "buildings": [{"footprint": [[x,y], ...], "height": h}, ...]}`
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CityFile {
    pub version: u32,
    pub bounds: Rect,
    pub buildings: Vec<Building>,
}

/// Validated 3D city with precomputed per-building bounding boxes.
#[derive(Debug, Clone)]
pub struct UrbanModel {
    bounds: Rect,
    buildings: Vec<Building>,
    bboxes: Vec<Rect>,
    max_height: f64,
}

impl UrbanModel {
    /// Validates a parsed city file and builds the queryable model.
    pub fn from_city_file(file: CityFile) -> Result<Self, ModelError> {
        if file.version != 1 {
            return Err(ModelError::UnsupportedVersion(file.version));
        }
        if !(file.bounds.min[0] < file.bounds.max[0] && file.bounds.min[1] < file.bounds.max[1]) {
            return Err(ModelError::InvalidBounds);
        }
        for (index, b) in file.buildings.iter().enumerate() {
            if b.footprint.len() < 3 {
                return Err(ModelError::TooFewVertices {
                    index,
                    got: b.footprint.len(),
                });
            }
            if b.footprint
                .iter()
                .any(|v| !v[0].is_finite() || !v[1].is_finite())
            {
                return Err(ModelError::NonFiniteVertex { index });
            }
            if !(b.height > 0.0 && b.height.is_finite()) {
                return Err(ModelError::NonPositiveHeight {
                    index,
                    height: b.height,
                });
            }
            for (vertex, v) in b.footprint.iter().enumerate() {
                if !file.bounds.contains(*v) {
                    return Err(ModelError::VertexOutOfBounds { index, vertex });
                }
            }
            if !is_simple(&b.footprint) {
                return Err(ModelError::NotSimple { index });
            }
            let area = signed_area(&b.footprint);
            if area == 0.0 {
                return Err(ModelError::NotSimple { index });
            }
            if area < 0.0 {
                return Err(ModelError::Clockwise { index });
            }
        }
        let bboxes = file.buildings.iter().map(Building::bbox).collect();
        let max_height = file.buildings.iter().map(|b| b.height).fold(0.0, f64::max);
        Ok(Self {
            bounds: file.bounds,
            buildings: file.buildings,
            bboxes,
            max_height,
        })
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn buildings(&self) -> &[Building] {
        &self.buildings
    }

    pub(crate) fn bboxes(&self) -> &[Rect] {
        &self.bboxes
    }

    /// Tallest building height, 0 for an empty model.
    pub fn max_height(&self) -> f64 {
        self.max_height
    }

    /// True when the ground point lies strictly inside no building footprint;
    /// boundary contact counts as open, matching the LoS open-interior rule.
    pub fn is_open_ground(&self, p: [f64; 2]) -> bool {
        self.buildings
            .iter()
            .zip(&self.bboxes)
            .filter(|(_, bb)| bb.contains(p))
            .all(|(b, _)| locate_point(p, &b.footprint, GEOM_EPS) != PointLocation::Inside)
    }
}

/// Loads and validates a city model from a JSON file.
pub fn load_urban_model(path: impl AsRef<Path>) -> Result<UrbanModel, ModelError> {
    let text = fs::read_to_string(path)?;
    let file: CityFile = serde_json::from_str(&text)?;
    UrbanModel::from_city_file(file)
}
