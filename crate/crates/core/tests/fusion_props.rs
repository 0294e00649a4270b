//! Property tests for trust fusion: monotonicity, additivity, and ranking
//! invariance.
//!
//! Generators emit dyadic rationals (small k/2^n) so every product and sum
//! in a case is exactly representable in f64; the additivity and
//! scale-invariance properties then hold with equality, not tolerance.

use proptest::prelude::*;

use skyvote_core::fusion::{
    build_crisis_map, score_vote, top_k_cells, FlagMultipliers, SemanticWeights, TrustWeights,
};
use skyvote_core::geometry::{GroundGrid, Point3, Rect};
use skyvote_core::ledger::{
    AttestationRecord, Flag, Hash32, Identity, Role, Tier, VoteRecord, ALL_LABELS,
};

fn grid() -> GroundGrid {
    GroundGrid::covering(&Rect::new([0.0, 0.0], [100.0, 100.0]), 10.0, 1.5).unwrap()
}

fn dyadic(k: std::ops::RangeInclusive<u32>, denom: f64) -> impl Strategy<Value = f64> {
    k.prop_map(move |v| v as f64 / denom)
}

fn weights_strategy() -> impl Strategy<Value = TrustWeights> {
    (
        dyadic(0..=16, 16.0),
        dyadic(0..=16, 16.0),
        dyadic(0..=16, 16.0),
        dyadic(0..=16, 16.0),
        dyadic(8..=24, 16.0),
        dyadic(8..=24, 16.0),
        proptest::array::uniform7(dyadic(1..=32, 8.0)),
        dyadic(1..=16, 8.0),
    )
        .prop_map(|(vr_x, vo_x, unv_o, unv_r, unk_o, unk_r, sem, baseline)| {
            let verified_rf = 1.0 + vr_x;
            TrustWeights {
                flag_multipliers: FlagMultipliers {
                    verified_optical: verified_rf + vo_x,
                    verified_rf,
                    unverified_optical: unv_o,
                    unverified_rf: unv_r,
                    unknown_optical: unk_o,
                    unknown_rf: unk_r,
                },
                semantic_weights: SemanticWeights {
                    medical: sem[0],
                    power: sem[1],
                    access: sem[2],
                    trapped: sem[3],
                    gas_leak: sem[4],
                    comm_blackout: sem[5],
                    suspicious_activity: sem[6],
                },
                baseline,
            }
        })
}

#[derive(Debug, Clone)]
struct RawVote {
    x: f64,
    y: f64,
    label: usize,
    severity: u8,
    atts: Vec<(u8, u8)>,
}

fn vote_strategy() -> impl Strategy<Value = RawVote> {
    (
        dyadic(0..=399, 4.0),
        dyadic(0..=399, 4.0),
        0usize..ALL_LABELS.len(),
        1u8..=5,
        proptest::collection::vec((0u8..3, 0u8..2), 0..=3),
    )
        .prop_map(|(x, y, label, severity, atts)| RawVote {
            x,
            y,
            label,
            severity,
            atts,
        })
}

fn flag_of(code: u8) -> Flag {
    match code {
        0 => Flag::Verified,
        1 => Flag::Unverified,
        _ => Flag::Unknown,
    }
}

fn tier_of(code: u8) -> Tier {
    if code == 0 {
        Tier::Optical
    } else {
        Tier::Rf
    }
}

fn materialize(raw: &[RawVote]) -> Vec<(VoteRecord, Vec<AttestationRecord>)> {
    raw.iter()
        .enumerate()
        .map(|(i, r)| {
            let vote = VoteRecord {
                vote_id: Hash32([i as u8; 32]),
                claimed_location: Point3::new(r.x, r.y, 1.5),
                timestamp: 0,
                label: ALL_LABELS[r.label],
                severity: r.severity,
                nonce: i as u64,
                author: Identity {
                    public_key: vec![i as u8; 32],
                    role: Role::User,
                },
                signature: vec![0; 64],
            };
            let atts = r
                .atts
                .iter()
                .map(|&(f, t)| AttestationRecord {
                    target_vote_id: vote.vote_id,
                    flag: flag_of(f),
                    tier: tier_of(t),
                    verifier: Identity {
                        public_key: vec![0xee; 32],
                        role: Role::Verifier,
                    },
                    timestamp: 0,
                    signature: vec![0; 64],
                })
                .collect();
            (vote, atts)
        })
        .collect()
}

fn with_extra_att(
    entry: &(VoteRecord, Vec<AttestationRecord>),
    flag: Flag,
    tier: Tier,
) -> (VoteRecord, Vec<AttestationRecord>) {
    let (vote, atts) = entry.clone();
    let mut atts = atts;
    atts.push(AttestationRecord {
        target_vote_id: vote.vote_id,
        flag,
        tier,
        verifier: Identity {
            public_key: vec![0xdd; 32],
            role: Role::Verifier,
        },
        timestamp: 0,
        signature: vec![0; 64],
    });
    (vote, atts)
}

/// Rank by score among `scores` (0 = best); exact f64 compare is safe because
/// every generated score is dyadic.
fn rank(scores: &[f64], i: usize) -> usize {
    scores.iter().filter(|&&s| s > scores[i]).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn verified_attestations_never_decrease_score(
        w in weights_strategy(),
        raw in proptest::collection::vec(vote_strategy(), 1..=12),
        tier_code in 0u8..2,
    ) {
        prop_assert!(w.validate().is_ok());
        for entry in &materialize(&raw) {
            let base = score_vote(&entry.0, &entry.1, &w).unwrap();
            let more = with_extra_att(entry, Flag::Verified, tier_of(tier_code));
            let grown = score_vote(&more.0, &more.1, &w).unwrap();
            prop_assert!(grown >= base, "verified attestation lowered {base} to {grown}");
        }
    }

    #[test]
    fn unverified_attestations_never_increase_score(
        w in weights_strategy(),
        raw in proptest::collection::vec(vote_strategy(), 1..=12),
        tier_code in 0u8..2,
    ) {
        for entry in &materialize(&raw) {
            let base = score_vote(&entry.0, &entry.1, &w).unwrap();
            let more = with_extra_att(entry, Flag::Unverified, tier_of(tier_code));
            let shrunk = score_vote(&more.0, &more.1, &w).unwrap();
            prop_assert!(shrunk <= base, "unverified attestation raised {base} to {shrunk}");
        }
    }

    #[test]
    fn severity_is_monotone(
        w in weights_strategy(),
        raw in proptest::collection::vec(vote_strategy(), 1..=12),
    ) {
        for entry in &materialize(&raw) {
            if entry.0.severity == 5 {
                continue;
            }
            let base = score_vote(&entry.0, &entry.1, &w).unwrap();
            let mut louder = entry.clone();
            louder.0.severity += 1;
            let grown = score_vote(&louder.0, &louder.1, &w).unwrap();
            prop_assert!(grown >= base);
        }
    }

    #[test]
    fn crisis_map_is_additive(
        w in weights_strategy(),
        raw in proptest::collection::vec(vote_strategy(), 2..=12),
        split_frac in 0.0f64..1.0,
    ) {
        let entries = materialize(&raw);
        let split = ((entries.len() as f64) * split_frac) as usize;
        let grid = grid();
        let whole = build_crisis_map(&entries, &w, &grid).unwrap();
        let left = build_crisis_map(&entries[..split], &w, &grid).unwrap();
        let right = build_crisis_map(&entries[split..], &w, &grid).unwrap();
        prop_assert_eq!(whole, left.merged(&right));
    }

    #[test]
    fn ranking_survives_semantic_rescale(
        w in weights_strategy(),
        raw in proptest::collection::vec(vote_strategy(), 1..=12),
        scale in prop_oneof![Just(0.5f64), Just(2.0), Just(3.0), Just(4.0)],
    ) {
        let entries = materialize(&raw);
        let grid = grid();
        let base_map = build_crisis_map(&entries, &w, &grid).unwrap();
        let mut scaled_w = w;
        scaled_w.semantic_weights = scaled_w.semantic_weights.scaled(scale);
        let scaled_map = build_crisis_map(&entries, &scaled_w, &grid).unwrap();
        for &label in &ALL_LABELS {
            let a = top_k_cells(&base_map, label, 10);
            let b = top_k_cells(&scaled_map, label, 10);
            let cells_a: Vec<usize> = a.iter().map(|&(c, _)| c).collect();
            let cells_b: Vec<usize> = b.iter().map(|&(c, _)| c).collect();
            prop_assert_eq!(cells_a, cells_b, "rescale by {} permuted ranking", scale);
            for (&(_, sa), &(_, sb)) in a.iter().zip(&b) {
                prop_assert_eq!(sa * scale, sb);
            }
        }
    }

    #[test]
    fn optical_upgrade_never_worsens_rank(
        w in weights_strategy(),
        raw in proptest::collection::vec(vote_strategy(), 1..=12),
    ) {
        // Give vote 0 a verified-RF attestation, then upgrade it to optical:
        // with verified_optical ≥ verified_rf its rank can only improve.
        let mut entries = materialize(&raw);
        entries[0] = with_extra_att(&entries[0], Flag::Verified, Tier::Rf);
        let rf_scores: Vec<f64> = entries
            .iter()
            .map(|(v, a)| score_vote(v, a, &w).unwrap())
            .collect();
        let last = entries[0].1.len() - 1;
        entries[0].1[last].tier = Tier::Optical;
        let opt_scores: Vec<f64> = entries
            .iter()
            .map(|(v, a)| score_vote(v, a, &w).unwrap())
            .collect();
        prop_assert!(rank(&opt_scores, 0) <= rank(&rf_scores, 0));
    }
}
