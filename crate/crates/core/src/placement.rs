//! Greedy set-multicover placement of UAV verifiers over a visibility matrix.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Point3, Rect, VisibilityMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementProblem {
    pub candidate_sites: Vec<Point3>,
    pub targets: Vec<Point3>,
    pub n_los: u32,
    pub max_uavs: usize,
}

impl PlacementProblem {
    pub fn new(
        candidate_sites: Vec<Point3>,
        targets: Vec<Point3>,
        n_los: u32,
        max_uavs: usize,
    ) -> Result<Self, PlacementError> {
        if candidate_sites.is_empty() {
            return Err(PlacementError::EmptyCandidates);
        }
        if targets.is_empty() {
            return Err(PlacementError::EmptyTargets);
        }
        if n_los < 1 {
            return Err(PlacementError::BadNLos(n_los));
        }
        if max_uavs < 1 {
            return Err(PlacementError::BadBudget(max_uavs));
        }
        Ok(Self {
            candidate_sites,
            targets,
            n_los,
            max_uavs,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementResult {
    /// Indices into `candidate_sites`, in selection order.
    pub chosen_indices: Vec<usize>,
    /// Hover positions in selection order.
    pub chosen_sites: Vec<Point3>,
    /// `(k, fraction of targets with ≥ n_los viewers)` after each pick.
    pub coverage_curve: Vec<(usize, f64)>,
    /// Per-target viewer count after the final pick.
    pub final_counts: Vec<u32>,
}

#[derive(Debug, Error)]
pub enum PlacementError {
    #[error("candidate_sites must be non-empty")]
    EmptyCandidates,
    #[error("targets must be non-empty")]
    EmptyTargets,
    #[error("n_los must be ≥ 1, got {0}")]
    BadNLos(u32),
    #[error("max_uavs must be ≥ 1, got {0}")]
    BadBudget(usize),
    #[error(
        "visibility matrix is {got_sites}×{got_targets}, problem is {want_sites}×{want_targets}"
    )]
    DimensionMismatch {
        got_sites: usize,
        got_targets: usize,
        want_sites: usize,
        want_targets: usize,
    },
    #[error("brute force limited to 15 candidates, got {0}")]
    InstanceTooLarge(usize),
}

/// Fraction of targets whose viewer count meets the redundancy requirement.
pub fn coverage_fraction(counts: &[u32], n_los: u32) -> f64 {
    assert!(!counts.is_empty(), "counts must be non-empty");
    counts.iter().filter(|&&c| c >= n_los).count() as f64 / counts.len() as f64
}

fn check_dims(problem: &PlacementProblem, vis: &VisibilityMatrix) -> Result<(), PlacementError> {
    if vis.n_sites() != problem.candidate_sites.len() || vis.n_targets() != problem.targets.len() {
        return Err(PlacementError::DimensionMismatch {
            got_sites: vis.n_sites(),
            got_targets: vis.n_targets(),
            want_sites: problem.candidate_sites.len(),
            want_targets: problem.targets.len(),
        });
    }
    Ok(())
}

/// Greedy multicover: each round picks the unused candidate that reduces the
/// most per-target deficits (targets still below `n_los` that it sees), ties
/// to the lowest index. Stops at full coverage, zero gain, or the budget.
pub fn greedy_place(
    problem: &PlacementProblem,
    vis: &VisibilityMatrix,
) -> Result<PlacementResult, PlacementError> {
    check_dims(problem, vis)?;
    let n_sites = problem.candidate_sites.len();
    let n_los = problem.n_los;
    let mut counts = vec![0u32; problem.targets.len()];
    let mut used = vec![false; n_sites];
    let mut chosen_indices = Vec::new();
    let mut coverage_curve = Vec::new();

    while chosen_indices.len() < problem.max_uavs && counts.iter().any(|&c| c < n_los) {
        // Deterministic parallel argmax: total order on (gain, index).
        let best = (0..n_sites)
            .into_par_iter()
            .filter(|&s| !used[s])
            .map(|s| {
                let gain = vis
                    .row(s)
                    .iter()
                    .zip(&counts)
                    .filter(|&(&v, &c)| v && c < n_los)
                    .count();
                (gain, s)
            })
            .reduce(
                || (0, usize::MAX),
                |a, b| {
                    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                        b
                    } else {
                        a
                    }
                },
            );
        let (gain, site) = best;
        if gain == 0 {
            break;
        }
        used[site] = true;
        for (c, &v) in counts.iter_mut().zip(vis.row(site)) {
            if v {
                *c += 1;
            }
        }
        chosen_indices.push(site);
        coverage_curve.push((chosen_indices.len(), coverage_fraction(&counts, n_los)));
    }

    let chosen_sites = chosen_indices
        .iter()
        .map(|&i| problem.candidate_sites[i])
        .collect();
    Ok(PlacementResult {
        chosen_indices,
        chosen_sites,
        coverage_curve,
        final_counts: counts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalPlacement {
    /// Ascending candidate indices of the best subset.
    pub indices: Vec<usize>,
    pub fraction: f64,
}

/// Exhaustive oracle: best subset of ≤ `max_uavs` candidates by coverage
/// fraction; ties go to the lexicographically smallest index set.
pub fn brute_force_place(
    problem: &PlacementProblem,
    vis: &VisibilityMatrix,
) -> Result<OptimalPlacement, PlacementError> {
    check_dims(problem, vis)?;
    let n = problem.candidate_sites.len();
    if n > 15 {
        return Err(PlacementError::InstanceTooLarge(n));
    }
    let n_targets = problem.targets.len();
    let mut best: Option<OptimalPlacement> = None;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize > problem.max_uavs {
            continue;
        }
        let mut counts = vec![0u32; n_targets];
        let mut indices = Vec::with_capacity(mask.count_ones() as usize);
        for s in 0..n {
            if mask & (1 << s) != 0 {
                indices.push(s);
                for (c, &v) in counts.iter_mut().zip(vis.row(s)) {
                    if v {
                        *c += 1;
                    }
                }
            }
        }
        let fraction = coverage_fraction(&counts, problem.n_los);
        let better = match &best {
            None => true,
            Some(b) => fraction > b.fraction || (fraction == b.fraction && indices < b.indices),
        };
        if better {
            best = Some(OptimalPlacement { indices, fraction });
        }
    }
    Ok(best.expect("at least the empty subset is evaluated"))
}

/// Horizontal candidate grid at `altitude`, `spacing` apart, row-major, with
/// a half-spacing inset from the bounds.
pub fn grid_candidates(bounds: &Rect, spacing: f64, altitude: f64) -> Vec<Point3> {
    assert!(
        spacing > 0.0 && spacing.is_finite(),
        "spacing must be positive"
    );
    let nx = (bounds.width() / spacing).ceil().max(1.0) as usize;
    let ny = (bounds.height() / spacing).ceil().max(1.0) as usize;
    let mut out = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            out.push(Point3::new(
                bounds.min[0] + (ix as f64 + 0.5) * spacing,
                bounds.min[1] + (iy as f64 + 0.5) * spacing,
                altitude,
            ));
        }
    }
    out
}
