//! Five-slot (t1–t5) verification-protocol simulator with honest and
//! adversarial agents.
//!
//! One epoch is a full t1–t5 pass: t1 vote submission, t2 vote assignment to
//! verifiers, t3 line-of-sight check, t4 MRR interrogation with a Bernoulli
//! link draw, t5 flag submission to the ledger. All randomness flows from a
//! single ChaCha8 generator with a fixed draw order: t1 visits ground agents
//! in roster order (honest/spoofer draw label then severity; each fabricated
//! sybil identity draws claim x, claim y, label, severity), then t3–t5 visit
//! verifiers in roster order and their assigned votes in ledger order (link
//! draw when LoS and a responder are present, then the suppression draw).

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{derive_signing_key, SigningKey};
use crate::geometry::{has_los, Point3, UrbanModel};
use crate::ledger::{
    AttestationRecord, ChainStatus, Flag, Hash32, Ledger, Payload, Tier, VoteRecord, ALL_LABELS,
};
use crate::optics::{outage_probability, BeamParams, LinkNoise, MrrParams};

/// How close a true responder must stand to a claimed point to answer the
/// optical interrogation, meters.
pub const DEFAULT_CAPTURE_RADIUS_M: f64 = 3.0;

/// Height above ground at which fabricated sybil identities claim to stand.
pub const SYBIL_CLAIM_HEIGHT_M: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundTruth {
    Honest,
    Spoofed,
    Sybil,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundBehavior {
    Honest,
    /// Claims `claimed` while actually standing at `true_location`.
    Spoofer {
        claimed: Point3,
    },
    /// Emits `count` votes per epoch under distinct fabricated identities
    /// claiming uniformly random in-bounds locations.
    SybilMaster {
        count: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundAgentSpec {
    /// Absent only for fabricated identities, which never appear in a roster.
    pub true_location: Option<Point3>,
    pub behavior: GroundBehavior,
    pub has_mrr: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifierBehavior {
    Honest,
    /// Performs verification but drops each flag with probability `p_suppress`.
    Suppressor {
        p_suppress: f64,
    },
    /// Flags every vote authored by a colluding ground agent (roster index)
    /// as verified without verification; behaves honestly otherwise.
    Forger {
        colluding_agents: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifierSpec {
    /// Index into the placement's chosen sites.
    pub site: usize,
    pub behavior: VerifierBehavior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignmentPolicy {
    /// Closest verifiers by 3D distance to the claimed point.
    Nearest,
    /// Static Voronoi partition of the ground plane (2D distance).
    Partition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolLink {
    pub beam: BeamParams,
    pub mrr: MrrParams,
    pub noise: LinkNoise,
    #[serde(default = "default_capture_radius")]
    pub capture_radius: f64,
}

fn default_capture_radius() -> f64 {
    DEFAULT_CAPTURE_RADIUS_M
}

/// Fully resolved in-memory scenario; the CLI resolves file paths and the
/// `min_assignees` default (n_los) before constructing this.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub model: UrbanModel,
    /// Verifier platform positions (the placement's chosen sites).
    pub sites: Vec<Point3>,
    pub ground: Vec<GroundAgentSpec>,
    pub verifiers: Vec<VerifierSpec>,
    pub link: ProtocolLink,
    pub epochs: u32,
    pub policy: AssignmentPolicy,
    pub min_assignees: usize,
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid scenario: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VoteTruth {
    pub vote_id: Hash32,
    pub truth: GroundTruth,
}

/// Outcome of one t1–t5 pass; counts cover only this epoch's activity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochReport {
    pub epoch: u32,
    pub votes_submitted: usize,
    /// Ground-truth label of every vote submitted this epoch.
    pub truths: Vec<VoteTruth>,
    pub verified_optical: usize,
    pub verified_rf: usize,
    pub unverified_optical: usize,
    pub unverified_rf: usize,
    pub unknown_optical: usize,
    pub unknown_rf: usize,
    /// Verified flags landing on ground-truth honest votes.
    pub true_verified: usize,
    /// Verified flags landing on spoofed or sybil votes.
    pub false_verified: usize,
    pub suppressed: usize,
    /// Ledger rejections observed this epoch, never silently dropped.
    pub ledger_errors: Vec<String>,
}

impl EpochReport {
    fn new(epoch: u32) -> Self {
        EpochReport {
            epoch,
            votes_submitted: 0,
            truths: Vec::new(),
            verified_optical: 0,
            verified_rf: 0,
            unverified_optical: 0,
            unverified_rf: 0,
            unknown_optical: 0,
            unknown_rf: 0,
            true_verified: 0,
            false_verified: 0,
            suppressed: 0,
            ledger_errors: Vec::new(),
        }
    }

    pub fn verified(&self) -> usize {
        self.verified_optical + self.verified_rf
    }

    pub fn unverified(&self) -> usize {
        self.unverified_optical + self.unverified_rf
    }

    pub fn unknown(&self) -> usize {
        self.unknown_optical + self.unknown_rf
    }

    pub fn attestations_submitted(&self) -> usize {
        self.verified() + self.unverified() + self.unknown()
    }

    fn count_attestation(&mut self, flag: Flag, tier: Tier, truth: GroundTruth) {
        match (flag, tier) {
            (Flag::Verified, Tier::Optical) => self.verified_optical += 1,
            (Flag::Verified, Tier::Rf) => self.verified_rf += 1,
            (Flag::Unverified, Tier::Optical) => self.unverified_optical += 1,
            (Flag::Unverified, Tier::Rf) => self.unverified_rf += 1,
            (Flag::Unknown, Tier::Optical) => self.unknown_optical += 1,
            (Flag::Unknown, Tier::Rf) => self.unknown_rf += 1,
        }
        if flag == Flag::Verified {
            match truth {
                GroundTruth::Honest => self.true_verified += 1,
                GroundTruth::Spoofed | GroundTruth::Sybil => self.false_verified += 1,
            }
        }
    }
}

/// Whole-run roll-up; ratios fall back to their no-evidence value (1.0 for
/// precision/recall, 0.0 for suppression) when the denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub votes: usize,
    pub attestations: usize,
    pub true_verified: usize,
    pub false_verified: usize,
    pub suppressed: usize,
    /// true_verified / all verified flags.
    pub precision: f64,
    /// Fraction of honest votes that received ≥ 1 verified flag.
    pub recall: f64,
    /// suppressed / (suppressed + submitted flags).
    pub suppression_rate: f64,
    pub chain_ok: bool,
}

#[derive(Debug)]
pub struct ScenarioRun {
    pub reports: Vec<EpochReport>,
    pub summary: ScenarioSummary,
    pub ledger: Ledger,
}

/// Maps each vote to its `min_assignees` nearest verifiers (ties to the
/// lowest verifier index); `nearest` measures 3D distance to the claim,
/// `partition` 2D ground distance (a static Voronoi assignment when
/// `min_assignees` is 1). Returns one vote-index list per verifier.
pub fn assign_votes(
    claims: &[Point3],
    verifier_positions: &[Point3],
    policy: AssignmentPolicy,
    min_assignees: usize,
) -> Vec<Vec<usize>> {
    assert!(
        !verifier_positions.is_empty(),
        "at least one verifier required"
    );
    let k = min_assignees.clamp(1, verifier_positions.len());
    let mut out = vec![Vec::new(); verifier_positions.len()];
    let mut order: Vec<usize> = Vec::with_capacity(verifier_positions.len());
    for (vote_idx, claim) in claims.iter().enumerate() {
        order.clear();
        order.extend(0..verifier_positions.len());
        let dist = |v: usize| -> f64 {
            match policy {
                AssignmentPolicy::Nearest => claim.distance(&verifier_positions[v]),
                AssignmentPolicy::Partition => claim.distance_2d(&verifier_positions[v]),
            }
        };
        order.sort_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(a.cmp(&b)));
        for &v in order.iter().take(k) {
            out[v].push(vote_idx);
        }
    }
    out
}

struct VerifierState {
    position: Point3,
    behavior: VerifierBehavior,
    key: SigningKey,
    /// Colluding author public keys, resolved from roster indices.
    colluding: HashSet<Vec<u8>>,
    /// Votes this verifier has already decided on (≤ 1 flag per (verifier,
    /// vote) per scenario; a suppressed decision still counts as decided).
    handled: HashSet<Hash32>,
}

/// Live scenario: owns the ledger, agent keys, and the seeded generator.
pub struct ScenarioState {
    config: ScenarioConfig,
    rng: ChaCha8Rng,
    ledger: Ledger,
    ground_keys: Vec<SigningKey>,
    verifiers: Vec<VerifierState>,
    truths: HashMap<Hash32, GroundTruth>,
    /// Votes that have received ≥ 1 verified flag, split by ground truth.
    verified_honest_votes: HashSet<Hash32>,
    honest_votes_total: usize,
    outage_cache: HashMap<(usize, u64, u64, u64), f64>,
    next_epoch: u32,
}

impl ScenarioState {
    pub fn new(config: ScenarioConfig) -> Result<Self, ProtocolError> {
        validate(&config)?;
        let ground_keys = (0..config.ground.len())
            .map(|i| derive_signing_key(config.seed, "user", i as u64))
            .collect();
        let verifiers = config
            .verifiers
            .iter()
            .enumerate()
            .map(|(j, spec)| {
                let key = derive_signing_key(config.seed, "verifier", j as u64);
                let colluding = match &spec.behavior {
                    VerifierBehavior::Forger { colluding_agents } => colluding_agents
                        .iter()
                        .map(|&i| {
                            crate::crypto::public_key_bytes(&derive_signing_key(
                                config.seed,
                                "user",
                                i as u64,
                            ))
                        })
                        .collect(),
                    _ => HashSet::new(),
                };
                VerifierState {
                    position: config.sites[spec.site],
                    behavior: spec.behavior.clone(),
                    key,
                    colluding,
                    handled: HashSet::new(),
                }
            })
            .collect();
        Ok(ScenarioState {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            ledger: Ledger::new(),
            ground_keys,
            verifiers,
            truths: HashMap::new(),
            verified_honest_votes: HashSet::new(),
            honest_votes_total: 0,
            outage_cache: HashMap::new(),
            next_epoch: 0,
            config,
        })
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    /// One full t1–t5 pass.
    pub fn run_epoch(&mut self) -> EpochReport {
        let epoch = self.next_epoch;
        self.next_epoch += 1;
        let clock = epoch as i64 * 1000;
        self.ledger.set_clock(clock);
        let mut report = EpochReport::new(epoch);

        // t1 — vote submission, ground agents in roster order.
        for i in 0..self.config.ground.len() {
            match self.config.ground[i].behavior.clone() {
                GroundBehavior::Honest => {
                    let claim = self.config.ground[i].true_location.expect("validated");
                    let key = self.ground_keys[i].clone();
                    self.emit_vote(&key, claim, epoch, GroundTruth::Honest, &mut report);
                }
                GroundBehavior::Spoofer { claimed } => {
                    let key = self.ground_keys[i].clone();
                    self.emit_vote(&key, claimed, epoch, GroundTruth::Spoofed, &mut report);
                }
                GroundBehavior::SybilMaster { count } => {
                    let bounds = self.config.model.bounds();
                    for k in 0..count {
                        let x = self.rng.gen_range(bounds.min[0]..bounds.max[0]);
                        let y = self.rng.gen_range(bounds.min[1]..bounds.max[1]);
                        let claim = Point3::new(x, y, SYBIL_CLAIM_HEIGHT_M);
                        let key = derive_signing_key(
                            self.config.seed,
                            "sybil",
                            (i as u64) * 1_000_000 + k as u64,
                        );
                        self.emit_vote(&key, claim, epoch, GroundTruth::Sybil, &mut report);
                    }
                }
            }
        }

        // t2 — every ledger vote not yet decided by its assignees, in ledger
        // order ("unattested" means not yet flagged by that verifier; other
        // verifiers' flags do not hide a vote).
        let votes: Vec<(Hash32, Point3, Vec<u8>)> = self
            .ledger
            .entries()
            .iter()
            .filter_map(|e| match &e.payload {
                Payload::Vote(v) => {
                    Some((v.vote_id, v.claimed_location, v.author.public_key.clone()))
                }
                Payload::Attestation(_) => None,
            })
            .collect();
        let claims: Vec<Point3> = votes.iter().map(|(_, c, _)| *c).collect();
        let positions: Vec<Point3> = self.verifiers.iter().map(|v| v.position).collect();
        if positions.is_empty() {
            return report;
        }
        let assignment = assign_votes(
            &claims,
            &positions,
            self.config.policy,
            self.config.min_assignees,
        );

        // t3–t5 — verifiers in roster order, assigned votes in ledger order.
        for v_idx in 0..self.verifiers.len() {
            for &vote_idx in &assignment[v_idx].clone() {
                let (vote_id, claim, author_pk) = votes[vote_idx].clone();
                if self.verifiers[v_idx].handled.contains(&vote_id) {
                    continue;
                }
                self.verifiers[v_idx].handled.insert(vote_id);

                let forged = matches!(
                    self.verifiers[v_idx].behavior,
                    VerifierBehavior::Forger { .. }
                ) && self.verifiers[v_idx].colluding.contains(&author_pk);
                let flag = if forged {
                    Flag::Verified
                } else {
                    // t3 — optical line of sight from the platform.
                    let pos = self.verifiers[v_idx].position;
                    if !has_los(pos, claim, &self.config.model) {
                        Flag::Unknown
                    } else if !self.responder_present(claim) {
                        // t4 — nobody with an MRR near the claim to answer.
                        Flag::Unverified
                    } else {
                        let outage = self.outage_for(v_idx, claim);
                        let u: f64 = self.rng.gen();
                        if u >= outage {
                            Flag::Verified
                        } else {
                            Flag::Unknown
                        }
                    }
                };

                // t5 — flag submission.
                if let VerifierBehavior::Suppressor { p_suppress } = self.verifiers[v_idx].behavior
                {
                    let u: f64 = self.rng.gen();
                    if u < p_suppress {
                        report.suppressed += 1;
                        continue;
                    }
                }
                let att = AttestationRecord::new_signed(
                    &self.verifiers[v_idx].key,
                    vote_id,
                    flag,
                    Tier::Optical,
                    clock,
                );
                match self.ledger.submit_attestation(att) {
                    Ok(_) => {
                        let truth = *self.truths.get(&vote_id).expect("vote truth recorded");
                        report.count_attestation(flag, Tier::Optical, truth);
                        if flag == Flag::Verified && truth == GroundTruth::Honest {
                            self.verified_honest_votes.insert(vote_id);
                        }
                    }
                    Err(e) => report
                        .ledger_errors
                        .push(format!("attestation by verifier {v_idx}: {e}")),
                }
            }
        }
        report
    }

    fn emit_vote(
        &mut self,
        key: &SigningKey,
        claim: Point3,
        epoch: u32,
        truth: GroundTruth,
        report: &mut EpochReport,
    ) {
        let label = ALL_LABELS[self.rng.gen_range(0..ALL_LABELS.len())];
        let severity: u8 = self.rng.gen_range(1..=5);
        let vote = VoteRecord::new_signed(
            key,
            claim,
            epoch as i64 * 1000,
            label,
            severity,
            epoch as u64,
        );
        let vote_id = vote.vote_id;
        match self.ledger.submit_vote(vote) {
            Ok(_) => {
                report.votes_submitted += 1;
                report.truths.push(VoteTruth { vote_id, truth });
                self.truths.insert(vote_id, truth);
                if truth == GroundTruth::Honest {
                    self.honest_votes_total += 1;
                }
            }
            Err(e) => report.ledger_errors.push(format!("vote: {e}")),
        }
    }

    /// t4 responder rule: any roster agent with an MRR whose true location is
    /// within `capture_radius` of the claim.
    fn responder_present(&self, claim: Point3) -> bool {
        self.config.ground.iter().any(|a| {
            a.has_mrr
                && a.true_location.map_or(false, |t| {
                    t.distance(&claim) <= self.config.link.capture_radius
                })
        })
    }

    fn outage_for(&mut self, v_idx: usize, claim: Point3) -> f64 {
        let key = (
            v_idx,
            claim.x.to_bits(),
            claim.y.to_bits(),
            claim.z.to_bits(),
        );
        if let Some(&p) = self.outage_cache.get(&key) {
            return p;
        }
        let range = self.verifiers[v_idx].position.distance(&claim);
        let link = &self.config.link;
        let p = outage_probability(range, &link.beam, &link.mrr, &link.noise);
        self.outage_cache.insert(key, p);
        p
    }

    fn into_run(self, reports: Vec<EpochReport>) -> ScenarioRun {
        let chain_ok = self.ledger.verify_chain() == ChainStatus::Ok;
        let votes: usize = reports.iter().map(|r| r.votes_submitted).sum();
        let attestations: usize = reports.iter().map(|r| r.attestations_submitted()).sum();
        let true_verified: usize = reports.iter().map(|r| r.true_verified).sum();
        let false_verified: usize = reports.iter().map(|r| r.false_verified).sum();
        let suppressed: usize = reports.iter().map(|r| r.suppressed).sum();
        let ratio = |num: usize, den: usize, empty: f64| {
            if den == 0 {
                empty
            } else {
                num as f64 / den as f64
            }
        };
        let summary = ScenarioSummary {
            votes,
            attestations,
            true_verified,
            false_verified,
            suppressed,
            precision: ratio(true_verified, true_verified + false_verified, 1.0),
            recall: ratio(
                self.verified_honest_votes.len(),
                self.honest_votes_total,
                1.0,
            ),
            suppression_rate: ratio(suppressed, suppressed + attestations, 0.0),
            chain_ok,
        };
        ScenarioRun {
            reports,
            summary,
            ledger: self.ledger,
        }
    }
}

/// Runs all epochs sequentially and rolls up the summary.
pub fn run_scenario(config: ScenarioConfig) -> Result<ScenarioRun, ProtocolError> {
    let mut state = ScenarioState::new(config)?;
    let mut reports = Vec::with_capacity(state.config.epochs as usize);
    for _ in 0..state.config.epochs {
        reports.push(state.run_epoch());
    }
    Ok(state.into_run(reports))
}

fn validate(config: &ScenarioConfig) -> Result<(), ProtocolError> {
    let bad = |msg: String| Err(ProtocolError::BadConfig(msg));
    if config.min_assignees == 0 {
        return bad("min_assignees must be ≥ 1".into());
    }
    if !(config.link.capture_radius > 0.0 && config.link.capture_radius.is_finite()) {
        return bad(format!(
            "capture_radius {} must be positive",
            config.link.capture_radius
        ));
    }
    if config.epochs > 0 && !config.ground.is_empty() && config.verifiers.is_empty() {
        return bad("at least one verifier is required".into());
    }
    for (j, spec) in config.verifiers.iter().enumerate() {
        if spec.site >= config.sites.len() {
            return bad(format!(
                "verifier {j} references site {} but only {} sites exist",
                spec.site,
                config.sites.len()
            ));
        }
        match &spec.behavior {
            VerifierBehavior::Suppressor { p_suppress } => {
                if !(0.0..=1.0).contains(p_suppress) {
                    return bad(format!(
                        "verifier {j}: p_suppress {p_suppress} outside [0,1]"
                    ));
                }
            }
            VerifierBehavior::Forger { colluding_agents } => {
                if let Some(&i) = colluding_agents.iter().find(|&&i| i >= config.ground.len()) {
                    return bad(format!("verifier {j}: colluding agent {i} not in roster"));
                }
            }
            VerifierBehavior::Honest => {}
        }
    }
    for (i, agent) in config.ground.iter().enumerate() {
        let Some(true_location) = agent.true_location else {
            return bad(format!(
                "ground agent {i}: roster members need a true_location"
            ));
        };
        if !true_location.is_finite() {
            return bad(format!("ground agent {i}: non-finite true_location"));
        }
        match &agent.behavior {
            GroundBehavior::Spoofer { claimed } => {
                if !claimed.is_finite() {
                    return bad(format!("ground agent {i}: non-finite spoofed claim"));
                }
                if *claimed == true_location {
                    return bad(format!(
                        "ground agent {i}: spoofer claim equals its true location"
                    ));
                }
            }
            GroundBehavior::SybilMaster { count } => {
                if *count == 0 {
                    return bad(format!("ground agent {i}: sybil count must be ≥ 1"));
                }
            }
            GroundBehavior::Honest => {}
        }
    }
    Ok(())
}
