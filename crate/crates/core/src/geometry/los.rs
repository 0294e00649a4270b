//! Line-of-sight queries against an extruded-polygon city.
//!
//! A segment is blocked only if its open interior passes through a building
//! interior. Contact with a wall, roof, or edge (within [`GEOM_EPS`]) counts
//! as visible, a deterministic tie-break that favors declaring visibility.

use rayon::prelude::*;
use thiserror::Error;

use super::model::{Building, Point3, Rect, UrbanModel};
use super::poly::{locate_point, segment_edge_params, PointLocation, GEOM_EPS};

/// Whether the open segment `a`-`b` intersects the interior of any building.
///
/// Total on finite inputs; `a == b` is trivially visible (the open segment is
/// empty). Symmetric by construction: endpoints are canonically ordered before
/// testing.
pub fn has_los(a: Point3, b: Point3, model: &UrbanModel) -> bool {
    if a == b {
        return true;
    }
    // Canonical endpoint order makes has_los(a,b) bit-identical to has_los(b,a).
    let (p, q) = if (a.x, a.y, a.z) <= (b.x, b.y, b.z) {
        (a, b)
    } else {
        (b, a)
    };
    let min_z = p.z.min(q.z);
    if min_z >= model.max_height() - GEOM_EPS {
        return true;
    }
    let seg_bbox = Rect {
        min: [p.x.min(q.x), p.y.min(q.y)],
        max: [p.x.max(q.x), p.y.max(q.y)],
    };
    let mut ts: Vec<f64> = Vec::new();
    for (building, bbox) in model.buildings().iter().zip(model.bboxes()) {
        if min_z >= building.height - GEOM_EPS {
            continue;
        }
        if !bbox_overlap(&seg_bbox, bbox, GEOM_EPS) {
            continue;
        }
        if segment_enters_prism(p, q, building, &mut ts) {
            return false;
        }
    }
    true
}

fn bbox_overlap(a: &Rect, b: &Rect, eps: f64) -> bool {
    a.min[0] <= b.max[0] + eps
        && b.min[0] <= a.max[0] + eps
        && a.min[1] <= b.max[1] + eps
        && b.min[1] <= a.max[1] + eps
}

/// Blocking test for one extruded footprint.
///
/// Subdivides the segment at every 2D crossing with a footprint edge, then
/// classifies each piece by its midpoint. A piece strictly inside the
/// footprint blocks iff its linear z-profile dips into the open slab
/// (0, height): with endpoint heights z0, z1 that is min < h and max > 0,
/// shrunk by GEOM_EPS for grazing contact.
fn segment_enters_prism(p: Point3, q: Point3, building: &Building, ts: &mut Vec<f64>) -> bool {
    let p2 = p.xy();
    let q2 = q.xy();
    let poly = &building.footprint;
    let n = poly.len();

    ts.clear();
    ts.push(0.0);
    ts.push(1.0);
    for i in 0..n {
        segment_edge_params(p2, q2, poly[i], poly[(i + 1) % n], GEOM_EPS, ts);
    }
    ts.sort_by(f64::total_cmp);

    let z_at = |t: f64| p.z + (q.z - p.z) * t;
    for w in 0..ts.len() - 1 {
        let (t0, t1) = (ts[w], ts[w + 1]);
        if t1 - t0 <= 1e-12 {
            continue;
        }
        let tm = 0.5 * (t0 + t1);
        let mid = [p2[0] + (q2[0] - p2[0]) * tm, p2[1] + (q2[1] - p2[1]) * tm];
        if locate_point(mid, poly, GEOM_EPS) != PointLocation::Inside {
            continue;
        }
        let (z0, z1) = (z_at(t0), z_at(t1));
        if z0.min(z1) < building.height - GEOM_EPS && z0.max(z1) > GEOM_EPS {
            return true;
        }
    }
    false
}

/// Row-major site-by-target visibility bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityMatrix {
    n_sites: usize,
    n_targets: usize,
    bits: Vec<bool>,
}

impl VisibilityMatrix {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_targets(&self) -> usize {
        self.n_targets
    }

    pub fn get(&self, site: usize, target: usize) -> bool {
        self.bits[site * self.n_targets + target]
    }

    pub fn row(&self, site: usize) -> &[bool] {
        &self.bits[site * self.n_targets..(site + 1) * self.n_targets]
    }

    /// Builds a matrix from explicit rows (mainly for tests and small cases).
    pub fn from_rows(rows: Vec<Vec<bool>>) -> Result<Self, VisibilityError> {
        let n_sites = rows.len();
        let n_targets = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_targets) {
            return Err(VisibilityError::RaggedRows);
        }
        Ok(Self {
            n_sites,
            n_targets,
            bits: rows.into_iter().flatten().collect(),
        })
    }
}

#[derive(Debug, Error)]
pub enum VisibilityError {
    #[error("sites and targets must be non-empty")]
    EmptyInput,
    #[error("rows have differing lengths")]
    RaggedRows,
}

/// Evaluates [`has_los`] for every (site, target) pair.
///
/// Rows are computed in parallel; each entry is a pure function of its pair,
/// so the result is bit-identical to serial evaluation.
pub fn visibility_matrix(
    sites: &[Point3],
    targets: &[Point3],
    model: &UrbanModel,
) -> Result<VisibilityMatrix, VisibilityError> {
    if sites.is_empty() || targets.is_empty() {
        return Err(VisibilityError::EmptyInput);
    }
    let bits: Vec<bool> = sites
        .par_iter()
        .flat_map_iter(|s| targets.iter().map(move |t| (*s, *t)))
        .map(|(s, t)| has_los(s, t, model))
        .collect();
    Ok(VisibilityMatrix {
        n_sites: sites.len(),
        n_targets: targets.len(),
        bits,
    })
}
