//! Trust-weighted vote scoring and crisis-map aggregation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GroundGrid;
use crate::ledger::{AttestationRecord, Flag, Hash32, SemanticLabel, Tier, VoteRecord, ALL_LABELS};

/// Per-(flag, tier) score multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagMultipliers {
    pub verified_optical: f64,
    pub verified_rf: f64,
    pub unverified_optical: f64,
    pub unverified_rf: f64,
    pub unknown_optical: f64,
    pub unknown_rf: f64,
}

impl FlagMultipliers {
    pub fn get(&self, flag: Flag, tier: Tier) -> f64 {
        match (flag, tier) {
            (Flag::Verified, Tier::Optical) => self.verified_optical,
            (Flag::Verified, Tier::Rf) => self.verified_rf,
            (Flag::Unverified, Tier::Optical) => self.unverified_optical,
            (Flag::Unverified, Tier::Rf) => self.unverified_rf,
            (Flag::Unknown, Tier::Optical) => self.unknown_optical,
            (Flag::Unknown, Tier::Rf) => self.unknown_rf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemanticWeights {
    pub medical: f64,
    pub power: f64,
    pub access: f64,
    pub trapped: f64,
    pub gas_leak: f64,
    pub comm_blackout: f64,
    pub suspicious_activity: f64,
}

impl SemanticWeights {
    pub fn get(&self, label: SemanticLabel) -> f64 {
        match label {
            SemanticLabel::Medical => self.medical,
            SemanticLabel::Power => self.power,
            SemanticLabel::Access => self.access,
            SemanticLabel::Trapped => self.trapped,
            SemanticLabel::GasLeak => self.gas_leak,
            SemanticLabel::CommBlackout => self.comm_blackout,
            SemanticLabel::SuspiciousActivity => self.suspicious_activity,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            medical: self.medical * c,
            power: self.power * c,
            access: self.access * c,
            trapped: self.trapped * c,
            gas_leak: self.gas_leak * c,
            comm_blackout: self.comm_blackout * c,
            suspicious_activity: self.suspicious_activity * c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrustWeights {
    pub flag_multipliers: FlagMultipliers,
    pub semantic_weights: SemanticWeights,
    /// Factor applied to every vote, attested or not.
    pub baseline: f64,
}

impl Default for TrustWeights {
    /// Artifact defaults: optical anchoring outranks RF, unverified claims
    /// are heavily discounted, unknown is neutral.
    fn default() -> Self {
        TrustWeights {
            flag_multipliers: FlagMultipliers {
                verified_optical: 2.0,
                verified_rf: 1.5,
                unverified_optical: 0.25,
                unverified_rf: 0.25,
                unknown_optical: 1.0,
                unknown_rf: 1.0,
            },
            semantic_weights: SemanticWeights {
                medical: 2.0,
                power: 1.0,
                access: 1.0,
                trapped: 2.0,
                gas_leak: 1.5,
                comm_blackout: 1.0,
                suspicious_activity: 1.0,
            },
            baseline: 1.0,
        }
    }
}

impl TrustWeights {
    pub fn validate(&self) -> Result<(), FusionError> {
        let m = &self.flag_multipliers;
        let all = [
            m.verified_optical,
            m.verified_rf,
            m.unverified_optical,
            m.unverified_rf,
            m.unknown_optical,
            m.unknown_rf,
        ];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(FusionError::BadWeights(
                "flag multipliers must be finite and ≥ 0".into(),
            ));
        }
        if m.verified_optical < m.verified_rf {
            return Err(FusionError::BadWeights(
                "verified_optical must be ≥ verified_rf".into(),
            ));
        }
        if m.verified_optical < 1.0 || m.verified_rf < 1.0 {
            return Err(FusionError::BadWeights(
                "verified multipliers must be ≥ 1".into(),
            ));
        }
        if m.unverified_optical > 1.0 || m.unverified_rf > 1.0 {
            return Err(FusionError::BadWeights(
                "unverified multipliers must be ≤ 1".into(),
            ));
        }
        let s = &self.semantic_weights;
        let sems = [
            s.medical,
            s.power,
            s.access,
            s.trapped,
            s.gas_leak,
            s.comm_blackout,
            s.suspicious_activity,
        ];
        if sems.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(FusionError::BadWeights(
                "semantic weights must be finite and > 0".into(),
            ));
        }
        if !self.baseline.is_finite() || self.baseline <= 0.0 {
            return Err(FusionError::BadWeights(
                "baseline must be finite and > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("attestation targets vote {got}, expected {want}")]
    MismatchedAttestation { want: Hash32, got: Hash32 },
    #[error("invalid trust weights: {0}")]
    BadWeights(String),
}

pub fn label_index(label: SemanticLabel) -> usize {
    ALL_LABELS
        .iter()
        .position(|&l| l == label)
        .expect("label in ALL_LABELS")
}

/// score = severity × semantic_weight × baseline × Π flag multipliers.
pub fn score_vote(
    vote: &VoteRecord,
    attestations: &[AttestationRecord],
    weights: &TrustWeights,
) -> Result<f64, FusionError> {
    let mut score =
        vote.severity as f64 * weights.semantic_weights.get(vote.label) * weights.baseline;
    for att in attestations {
        if att.target_vote_id != vote.vote_id {
            return Err(FusionError::MismatchedAttestation {
                want: vote.vote_id,
                got: att.target_vote_id,
            });
        }
        score *= weights.flag_multipliers.get(att.flag, att.tier);
    }
    Ok(score)
}

/// Per-cell, per-label accumulated trust scores.
#[derive(Debug, Clone, PartialEq)]
pub struct CrisisMap {
    grid: GroundGrid,
    /// Indexed `cell * ALL_LABELS.len() + label_index`.
    scores: Vec<f64>,
    out_of_extent: usize,
}

impl CrisisMap {
    pub fn zero(grid: GroundGrid) -> Self {
        let scores = vec![0.0; grid.n_cells() * ALL_LABELS.len()];
        CrisisMap {
            grid,
            scores,
            out_of_extent: 0,
        }
    }

    pub fn grid(&self) -> &GroundGrid {
        &self.grid
    }

    pub fn score(&self, cell: usize, label: SemanticLabel) -> f64 {
        self.scores[cell * ALL_LABELS.len() + label_index(label)]
    }

    /// Votes whose claimed location fell outside the grid extent (reported,
    /// not silently dropped).
    pub fn out_of_extent(&self) -> usize {
        self.out_of_extent
    }

    /// Cell-wise sum; grids must match.
    pub fn merged(&self, other: &CrisisMap) -> CrisisMap {
        assert_eq!(
            self.grid, other.grid,
            "crisis maps computed on different grids"
        );
        CrisisMap {
            grid: self.grid.clone(),
            scores: self
                .scores
                .iter()
                .zip(&other.scores)
                .map(|(a, b)| a + b)
                .collect(),
            out_of_extent: self.out_of_extent + other.out_of_extent,
        }
    }
}

/// Scores every (vote, attestations) entry and accumulates into grid cells.
pub fn build_crisis_map(
    entries: &[(VoteRecord, Vec<AttestationRecord>)],
    weights: &TrustWeights,
    grid: &GroundGrid,
) -> Result<CrisisMap, FusionError> {
    weights.validate()?;
    let mut map = CrisisMap::zero(grid.clone());
    for (vote, atts) in entries {
        let score = score_vote(vote, atts, weights)?;
        match grid.cell_index_of(vote.claimed_location.xy()) {
            Some(cell) => map.scores[cell * ALL_LABELS.len() + label_index(vote.label)] += score,
            None => map.out_of_extent += 1,
        }
    }
    Ok(map)
}

/// The k highest-scoring non-zero cells for `label`; ties to the lowest cell
/// index; shorter when fewer cells are non-zero.
pub fn top_k_cells(map: &CrisisMap, label: SemanticLabel, k: usize) -> Vec<(usize, f64)> {
    assert!(k >= 1, "k must be ≥ 1");
    let mut cells: Vec<(usize, f64)> = (0..map.grid.n_cells())
        .map(|c| (c, map.score(c, label)))
        .filter(|&(_, s)| s > 0.0)
        .collect();
    cells.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    cells.truncate(k);
    cells
}

/// Mean absolute rank shift of `baseline`'s top-k cells for `label` once those
/// cells are re-ranked in `polluted` — a sensitivity metric for injected
/// (e.g. sybil) votes, not an invariant. Maps must share a grid.
pub fn rank_displacement(
    baseline: &CrisisMap,
    polluted: &CrisisMap,
    label: SemanticLabel,
    k: usize,
) -> f64 {
    assert!(baseline.grid == polluted.grid, "maps must share a grid");
    let top = top_k_cells(baseline, label, k);
    if top.is_empty() {
        return 0.0;
    }
    let shift: usize = top
        .iter()
        .enumerate()
        .map(|(rank, &(cell, _))| {
            let score = polluted.score(cell, label);
            let new_rank = (0..polluted.grid.n_cells())
                .filter(|&c| {
                    let s = polluted.score(c, label);
                    s > score || (s == score && c < cell)
                })
                .count();
            new_rank.abs_diff(rank)
        })
        .sum();
    shift as f64 / top.len() as f64
}
