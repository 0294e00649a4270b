//! Urban geometry: city model, ground grid, and line-of-sight queries.

mod grid;
mod los;
mod model;
mod poly;

pub use grid::{GridError, GroundGrid};
pub use los::{has_los, visibility_matrix, VisibilityError, VisibilityMatrix};
pub use model::{load_urban_model, Building, CityFile, ModelError, Point3, Rect, UrbanModel};
pub use poly::GEOM_EPS;
