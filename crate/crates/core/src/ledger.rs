//! Append-only hash-chained ledger of signed votes and attestations.
//!
//! Canonical serialization is pinned two ways: hashes and signatures cover a
//! length-prefixed little-endian byte layout with domain tags, and the NDJSON
//! dump is loaded strictly — every line must re-serialize to the exact input
//! bytes, so any byte-level tampering either fails the load or breaks the
//! hash chain.

use std::collections::{HashMap, HashSet};
use std::fmt;

use ed25519_dalek::SigningKey;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::crypto::{
    public_key_bytes, sha256, sign, verify_signature, PUBLIC_KEY_LEN, SIGNATURE_LEN,
};
use crate::geometry::{Point3, Rect};

pub const DEFAULT_FRESHNESS_WINDOW_MS: i64 = 300_000;

fn decode_strict_hex(s: &str) -> Result<Vec<u8>, String> {
    if s.len() % 2 != 0 {
        return Err("odd-length hex string".into());
    }
    if !s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
        return Err("hex must be lowercase [0-9a-f]".into());
    }
    Ok(hex::decode(s).expect("charset already validated"))
}

mod hex_bytes {
    use super::*;

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        decode_strict_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// SHA-256 digest, hex-encoded in JSON.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Hash32(pub [u8; 32]);

impl Hash32 {
    pub const ZERO: Hash32 = Hash32([0; 32]);

    pub fn to_hex(self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

impl fmt::Display for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

impl Serialize for Hash32 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Hash32 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let bytes = decode_strict_hex(&s).map_err(serde::de::Error::custom)?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| serde::de::Error::custom("hash must be 32 bytes"))?;
        Ok(Hash32(arr))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Verifier,
    Agency,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::User => "user",
            Role::Verifier => "verifier",
            Role::Agency => "agency",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticLabel {
    Medical,
    Power,
    Access,
    Trapped,
    GasLeak,
    CommBlackout,
    SuspiciousActivity,
}

pub const ALL_LABELS: [SemanticLabel; 7] = [
    SemanticLabel::Medical,
    SemanticLabel::Power,
    SemanticLabel::Access,
    SemanticLabel::Trapped,
    SemanticLabel::GasLeak,
    SemanticLabel::CommBlackout,
    SemanticLabel::SuspiciousActivity,
];

impl SemanticLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SemanticLabel::Medical => "medical",
            SemanticLabel::Power => "power",
            SemanticLabel::Access => "access",
            SemanticLabel::Trapped => "trapped",
            SemanticLabel::GasLeak => "gas_leak",
            SemanticLabel::CommBlackout => "comm_blackout",
            SemanticLabel::SuspiciousActivity => "suspicious_activity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    Verified,
    Unverified,
    Unknown,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::Verified => "verified",
            Flag::Unverified => "unverified",
            Flag::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Optical,
    Rf,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Optical => "optical",
            Tier::Rf => "rf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Identity {
    #[serde(with = "hex_bytes")]
    pub public_key: Vec<u8>,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoteRecord {
    pub vote_id: Hash32,
    pub claimed_location: Point3,
    /// Milliseconds since epoch.
    pub timestamp: i64,
    pub label: SemanticLabel,
    /// 1–5.
    pub severity: u8,
    pub nonce: u64,
    pub author: Identity,
    #[serde(with = "hex_bytes")]
    pub signature: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttestationRecord {
    pub target_vote_id: Hash32,
    pub flag: Flag,
    pub tier: Tier,
    pub verifier: Identity,
    pub timestamp: i64,
    #[serde(with = "hex_bytes")]
    pub signature: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Payload {
    Vote(VoteRecord),
    Attestation(AttestationRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerEntry {
    pub index: u64,
    pub prev_hash: Hash32,
    pub payload: Payload,
    pub entry_hash: Hash32,
}

// Canonical byte layout: domain tag, then fields in declared order.
// Fixed-width integers little-endian; points as three f64 bit patterns;
// variable-length data (strings, keys, signatures) u32-length-prefixed.

fn put_bytes(buf: &mut Vec<u8>, b: &[u8]) {
    buf.extend_from_slice(&(b.len() as u32).to_le_bytes());
    buf.extend_from_slice(b);
}

fn put_point(buf: &mut Vec<u8>, p: Point3) {
    for v in [p.x, p.y, p.z] {
        buf.extend_from_slice(&v.to_bits().to_le_bytes());
    }
}

fn put_identity(buf: &mut Vec<u8>, id: &Identity) {
    put_bytes(buf, id.role.as_str().as_bytes());
    put_bytes(buf, &id.public_key);
}

fn vote_signing_bytes(
    claimed_location: Point3,
    timestamp: i64,
    label: SemanticLabel,
    severity: u8,
    nonce: u64,
    author: &Identity,
) -> Vec<u8> {
    let mut buf = Vec::with_capacity(128);
    buf.extend_from_slice(b"skyvote:vote:v1");
    put_point(&mut buf, claimed_location);
    buf.extend_from_slice(&timestamp.to_le_bytes());
    put_bytes(&mut buf, label.as_str().as_bytes());
    buf.push(severity);
    buf.extend_from_slice(&nonce.to_le_bytes());
    put_identity(&mut buf, author);
    buf
}

fn attestation_signing_bytes(
    target_vote_id: &Hash32,
    flag: Flag,
    tier: Tier,
    verifier: &Identity,
    timestamp: i64,
) -> Vec<u8> {
    let mut buf = Vec::with_capacity(128);
    buf.extend_from_slice(b"skyvote:attest:v1");
    buf.extend_from_slice(&target_vote_id.0);
    put_bytes(&mut buf, flag.as_str().as_bytes());
    put_bytes(&mut buf, tier.as_str().as_bytes());
    put_identity(&mut buf, verifier);
    buf.extend_from_slice(&timestamp.to_le_bytes());
    buf
}

fn entry_payload_bytes(payload: &Payload) -> Vec<u8> {
    let mut buf = Vec::with_capacity(256);
    match payload {
        Payload::Vote(v) => {
            buf.extend_from_slice(b"skyvote:entry:vote:v1");
            buf.extend_from_slice(&v.vote_id.0);
            buf.extend_from_slice(&vote_signing_bytes(
                v.claimed_location,
                v.timestamp,
                v.label,
                v.severity,
                v.nonce,
                &v.author,
            ));
            put_bytes(&mut buf, &v.signature);
        }
        Payload::Attestation(a) => {
            buf.extend_from_slice(b"skyvote:entry:attest:v1");
            buf.extend_from_slice(&attestation_signing_bytes(
                &a.target_vote_id,
                a.flag,
                a.tier,
                &a.verifier,
                a.timestamp,
            ));
            put_bytes(&mut buf, &a.signature);
        }
    }
    buf
}

impl VoteRecord {
    /// Builds and signs a vote; `vote_id` is the hash of the signed bytes.
    pub fn new_signed(
        key: &SigningKey,
        claimed_location: Point3,
        timestamp: i64,
        label: SemanticLabel,
        severity: u8,
        nonce: u64,
    ) -> Self {
        let author = Identity {
            public_key: public_key_bytes(key),
            role: Role::User,
        };
        let msg = vote_signing_bytes(claimed_location, timestamp, label, severity, nonce, &author);
        VoteRecord {
            vote_id: Hash32(sha256(&[&msg])),
            claimed_location,
            timestamp,
            label,
            severity,
            nonce,
            author,
            signature: sign(key, &msg),
        }
    }

    fn signing_bytes(&self) -> Vec<u8> {
        vote_signing_bytes(
            self.claimed_location,
            self.timestamp,
            self.label,
            self.severity,
            self.nonce,
            &self.author,
        )
    }
}

impl AttestationRecord {
    pub fn new_signed(
        key: &SigningKey,
        target_vote_id: Hash32,
        flag: Flag,
        tier: Tier,
        timestamp: i64,
    ) -> Self {
        let verifier = Identity {
            public_key: public_key_bytes(key),
            role: Role::Verifier,
        };
        let msg = attestation_signing_bytes(&target_vote_id, flag, tier, &verifier, timestamp);
        AttestationRecord {
            target_vote_id,
            flag,
            tier,
            verifier,
            timestamp,
            signature: sign(key, &msg),
        }
    }

    fn signing_bytes(&self) -> Vec<u8> {
        attestation_signing_bytes(
            &self.target_vote_id,
            self.flag,
            self.tier,
            &self.verifier,
            self.timestamp,
        )
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LedgerError {
    #[error("bad signature")]
    BadSignature,
    #[error("nonce {0} already used by this author")]
    ReplayedNonce(u64),
    #[error("timestamp {timestamp} outside ±{window_ms} ms of ledger clock {clock}")]
    StaleTimestamp {
        timestamp: i64,
        clock: i64,
        window_ms: i64,
    },
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("unknown vote {0}")]
    UnknownVote(Hash32),
    #[error("attestations require the verifier role, got {0:?}")]
    WrongRole(Role),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainStatus {
    Ok,
    CorruptAt(u64),
}

#[derive(Debug, Error)]
#[error("ledger dump line {line}: {reason}")]
pub struct NdjsonError {
    /// 1-based line number (= entry index + 1).
    pub line: usize,
    pub reason: String,
}

/// Single-writer, hash-chained log standing in for the public chain.
#[derive(Debug, Clone, Default)]
pub struct Ledger {
    entries: Vec<LedgerEntry>,
    vote_index: HashMap<Hash32, usize>,
    used_nonces: HashSet<(Vec<u8>, u64)>,
    clock_ms: i64,
    freshness_window_ms: i64,
}

impl Ledger {
    pub fn new() -> Self {
        Self {
            freshness_window_ms: DEFAULT_FRESHNESS_WINDOW_MS,
            ..Default::default()
        }
    }

    pub fn with_freshness_window(window_ms: i64) -> Self {
        Self {
            freshness_window_ms: window_ms,
            ..Default::default()
        }
    }

    /// Sets the logical clock used for vote freshness checks.
    pub fn set_clock(&mut self, now_ms: i64) {
        self.clock_ms = now_ms;
    }

    pub fn clock(&self) -> i64 {
        self.clock_ms
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn has_vote(&self, id: &Hash32) -> bool {
        self.vote_index.contains_key(id)
    }

    fn append(&mut self, payload: Payload) -> u64 {
        let prev_hash = self.entries.last().map_or(Hash32::ZERO, |e| e.entry_hash);
        let entry_hash = Hash32(sha256(&[&prev_hash.0, &entry_payload_bytes(&payload)]));
        let index = self.entries.len() as u64;
        self.entries.push(LedgerEntry {
            index,
            prev_hash,
            payload,
            entry_hash,
        });
        index
    }

    pub fn submit_vote(&mut self, vote: VoteRecord) -> Result<u64, LedgerError> {
        if !vote.claimed_location.is_finite() {
            return Err(LedgerError::Malformed(
                "claimed_location must be finite".into(),
            ));
        }
        if !(1..=5).contains(&vote.severity) {
            return Err(LedgerError::Malformed(format!(
                "severity {} outside 1–5",
                vote.severity
            )));
        }
        if vote.author.role != Role::User {
            return Err(LedgerError::Malformed(
                "vote author role must be user".into(),
            ));
        }
        if vote.author.public_key.len() != PUBLIC_KEY_LEN {
            return Err(LedgerError::Malformed(
                "author public key must be 32 bytes".into(),
            ));
        }
        if vote.signature.len() != SIGNATURE_LEN {
            return Err(LedgerError::Malformed("signature must be 64 bytes".into()));
        }
        let msg = vote.signing_bytes();
        if vote.vote_id != Hash32(sha256(&[&msg])) {
            return Err(LedgerError::Malformed(
                "vote_id does not match content".into(),
            ));
        }
        if !verify_signature(&vote.author.public_key, &msg, &vote.signature) {
            return Err(LedgerError::BadSignature);
        }
        let nonce_key = (vote.author.public_key.clone(), vote.nonce);
        if self.used_nonces.contains(&nonce_key) {
            return Err(LedgerError::ReplayedNonce(vote.nonce));
        }
        if (vote.timestamp - self.clock_ms).abs() > self.freshness_window_ms {
            return Err(LedgerError::StaleTimestamp {
                timestamp: vote.timestamp,
                clock: self.clock_ms,
                window_ms: self.freshness_window_ms,
            });
        }
        let vote_id = vote.vote_id;
        let index = self.append(Payload::Vote(vote));
        self.vote_index.insert(vote_id, index as usize);
        self.used_nonces.insert(nonce_key);
        Ok(index)
    }

    pub fn submit_attestation(&mut self, att: AttestationRecord) -> Result<u64, LedgerError> {
        if att.verifier.public_key.len() != PUBLIC_KEY_LEN {
            return Err(LedgerError::Malformed(
                "verifier public key must be 32 bytes".into(),
            ));
        }
        if att.signature.len() != SIGNATURE_LEN {
            return Err(LedgerError::Malformed("signature must be 64 bytes".into()));
        }
        if att.verifier.role != Role::Verifier {
            return Err(LedgerError::WrongRole(att.verifier.role));
        }
        if !self.vote_index.contains_key(&att.target_vote_id) {
            return Err(LedgerError::UnknownVote(att.target_vote_id));
        }
        if !verify_signature(
            &att.verifier.public_key,
            &att.signing_bytes(),
            &att.signature,
        ) {
            return Err(LedgerError::BadSignature);
        }
        Ok(self.append(Payload::Attestation(att)))
    }

    /// Recomputes every hash and link; reports the first broken index.
    pub fn verify_chain(&self) -> ChainStatus {
        let mut prev = Hash32::ZERO;
        for (i, e) in self.entries.iter().enumerate() {
            if e.index != i as u64 || e.prev_hash != prev {
                return ChainStatus::CorruptAt(i as u64);
            }
            let recomputed = Hash32(sha256(&[&e.prev_hash.0, &entry_payload_bytes(&e.payload)]));
            if recomputed != e.entry_hash {
                return ChainStatus::CorruptAt(i as u64);
            }
            prev = e.entry_hash;
        }
        ChainStatus::Ok
    }

    /// Votes inside `region` with timestamp in the inclusive window, each
    /// with its attestations; both levels in ledger order.
    pub fn query_votes(
        &self,
        region: &Rect,
        window: (i64, i64),
    ) -> Vec<(VoteRecord, Vec<AttestationRecord>)> {
        let mut atts: HashMap<Hash32, Vec<AttestationRecord>> = HashMap::new();
        for e in &self.entries {
            if let Payload::Attestation(a) = &e.payload {
                atts.entry(a.target_vote_id).or_default().push(a.clone());
            }
        }
        let mut out = Vec::new();
        for e in &self.entries {
            if let Payload::Vote(v) = &e.payload {
                let inside = region.contains(v.claimed_location.xy());
                if inside && v.timestamp >= window.0 && v.timestamp <= window.1 {
                    out.push((v.clone(), atts.remove(&v.vote_id).unwrap_or_default()));
                }
            }
        }
        out
    }

    /// One canonical JSON object per line.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("ledger entries serialize"));
            out.push('\n');
        }
        out
    }

    /// Strict load: every line must parse and re-serialize byte-identically,
    /// so non-canonical encodings are rejected rather than silently accepted.
    /// Chain integrity is NOT checked here; call [`Ledger::verify_chain`].
    pub fn from_ndjson(text: &str) -> Result<Self, NdjsonError> {
        let mut ledger = Ledger::new();
        for (i, line) in text.lines().enumerate() {
            let err = |reason: String| NdjsonError {
                line: i + 1,
                reason,
            };
            let entry: LedgerEntry = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            let canonical = serde_json::to_string(&entry).expect("entry serializes");
            if canonical != line {
                return Err(err("non-canonical encoding".into()));
            }
            match &entry.payload {
                Payload::Vote(v) => {
                    ledger.vote_index.insert(v.vote_id, ledger.entries.len());
                    ledger
                        .used_nonces
                        .insert((v.author.public_key.clone(), v.nonce));
                }
                Payload::Attestation(_) => {}
            }
            ledger.entries.push(entry);
        }
        Ok(ledger)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::derive_signing_key;

    fn vote_at(seed_idx: u64, x: f64, y: f64, ts: i64, nonce: u64) -> VoteRecord {
        let key = derive_signing_key(1, "user", seed_idx);
        VoteRecord::new_signed(
            &key,
            Point3::new(x, y, 1.5),
            ts,
            SemanticLabel::Medical,
            3,
            nonce,
        )
    }

    #[test]
    fn first_vote_gets_index_zero() {
        let mut ledger = Ledger::new();
        assert_eq!(ledger.submit_vote(vote_at(0, 1.0, 2.0, 0, 1)).unwrap(), 0);
        assert_eq!(ledger.len(), 1);
    }

    #[test]
    fn replayed_bytes_rejected() {
        let mut ledger = Ledger::new();
        let v = vote_at(0, 1.0, 2.0, 0, 7);
        ledger.submit_vote(v.clone()).unwrap();
        assert_eq!(ledger.submit_vote(v), Err(LedgerError::ReplayedNonce(7)));
        assert_eq!(ledger.len(), 1);
    }

    #[test]
    fn flipped_signature_byte_rejected() {
        let mut ledger = Ledger::new();
        let mut v = vote_at(0, 1.0, 2.0, 0, 1);
        v.signature[10] ^= 0x01;
        assert_eq!(ledger.submit_vote(v), Err(LedgerError::BadSignature));
    }

    #[test]
    fn stale_timestamp_rejected() {
        let mut ledger = Ledger::new();
        ledger.set_clock(1_000_000);
        let fresh = vote_at(0, 1.0, 2.0, 1_200_000, 1);
        ledger.submit_vote(fresh).unwrap();
        let stale = vote_at(0, 1.0, 2.0, 400_000, 2);
        assert!(matches!(
            ledger.submit_vote(stale),
            Err(LedgerError::StaleTimestamp { .. })
        ));
    }

    #[test]
    fn vote_id_must_match_content() {
        let mut ledger = Ledger::new();
        let mut v = vote_at(0, 1.0, 2.0, 0, 1);
        v.severity = 4; // content changed; vote_id and signature now stale
        assert!(matches!(
            ledger.submit_vote(v),
            Err(LedgerError::Malformed(_))
        ));
    }

    #[test]
    fn attestation_lifecycle() {
        let mut ledger = Ledger::new();
        let v = vote_at(0, 1.0, 2.0, 0, 1);
        let vid = v.vote_id;
        ledger.submit_vote(v).unwrap();

        let k1 = derive_signing_key(1, "verifier", 0);
        let k2 = derive_signing_key(1, "verifier", 1);
        let a1 = AttestationRecord::new_signed(&k1, vid, Flag::Verified, Tier::Optical, 10);
        let a2 = AttestationRecord::new_signed(&k2, vid, Flag::Unknown, Tier::Optical, 11);
        assert_eq!(ledger.submit_attestation(a1).unwrap(), 1);
        assert_eq!(ledger.submit_attestation(a2).unwrap(), 2);

        let rows = ledger.query_votes(&Rect::new([0.0, 0.0], [10.0, 10.0]), (0, 100));
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].1.len(), 2);
        assert_eq!(rows[0].1[0].flag, Flag::Verified);
    }

    #[test]
    fn attestation_for_absent_vote_rejected() {
        let mut ledger = Ledger::new();
        let k = derive_signing_key(1, "verifier", 0);
        let a = AttestationRecord::new_signed(&k, Hash32([9; 32]), Flag::Verified, Tier::Rf, 0);
        assert!(matches!(
            ledger.submit_attestation(a),
            Err(LedgerError::UnknownVote(_))
        ));
    }

    #[test]
    fn attestation_requires_verifier_role() {
        let mut ledger = Ledger::new();
        let v = vote_at(0, 1.0, 2.0, 0, 1);
        let vid = v.vote_id;
        ledger.submit_vote(v).unwrap();
        let k = derive_signing_key(1, "verifier", 0);
        let mut a = AttestationRecord::new_signed(&k, vid, Flag::Verified, Tier::Optical, 0);
        a.verifier.role = Role::User;
        assert_eq!(
            ledger.submit_attestation(a),
            Err(LedgerError::WrongRole(Role::User))
        );
    }

    #[test]
    fn query_filters_region_and_window() {
        let mut ledger = Ledger::new();
        for (i, (x, ts)) in [(1.0, 0), (2.0, 10), (3.0, 20), (50.0, 0), (1.0, 999)]
            .iter()
            .enumerate()
        {
            ledger
                .submit_vote(vote_at(i as u64, *x, 1.0, *ts, 1))
                .unwrap();
        }
        let rows = ledger.query_votes(&Rect::new([0.0, 0.0], [10.0, 10.0]), (0, 100));
        assert_eq!(rows.len(), 3);
        assert!(rows
            .windows(2)
            .all(|w| w[0].0.timestamp <= w[1].0.timestamp));
    }

    fn sample_ledger(n_votes: usize) -> Ledger {
        let mut ledger = Ledger::new();
        let vk = derive_signing_key(2, "verifier", 0);
        for i in 0..n_votes {
            let v = vote_at(i as u64, i as f64, 2.0 * i as f64, i as i64, 42);
            let vid = v.vote_id;
            ledger.submit_vote(v).unwrap();
            let a = AttestationRecord::new_signed(&vk, vid, Flag::Verified, Tier::Optical, 5);
            ledger.submit_attestation(a).unwrap();
        }
        ledger
    }

    #[test]
    fn chain_verifies_when_untouched() {
        assert_eq!(Ledger::new().verify_chain(), ChainStatus::Ok);
        assert_eq!(sample_ledger(50).verify_chain(), ChainStatus::Ok);
    }

    #[test]
    fn in_memory_payload_tamper_detected_at_index() {
        let mut ledger = sample_ledger(30);
        if let Payload::Vote(v) = &mut ledger.entries[42].payload {
            v.severity = 5;
        } else {
            panic!("entry 42 should be a vote");
        }
        assert_eq!(ledger.verify_chain(), ChainStatus::CorruptAt(42));
    }

    #[test]
    fn ndjson_round_trip_is_byte_identical() {
        let ledger = sample_ledger(20);
        let dump = ledger.to_ndjson();
        let loaded = Ledger::from_ndjson(&dump).unwrap();
        assert_eq!(loaded.verify_chain(), ChainStatus::Ok);
        assert_eq!(loaded.to_ndjson(), dump);
    }

    #[test]
    fn loaded_ledger_still_enforces_replay() {
        let ledger = sample_ledger(3);
        let dump = ledger.to_ndjson();
        let mut loaded = Ledger::from_ndjson(&dump).unwrap();
        let replay = vote_at(0, 0.0, 0.0, 0, 42);
        assert_eq!(
            loaded.submit_vote(replay),
            Err(LedgerError::ReplayedNonce(42))
        );
    }

    #[test]
    fn uppercase_hex_rejected_on_load() {
        let dump = sample_ledger(2).to_ndjson();
        let upper = dump.replacen("\"entry_hash\":\"a", "\"entry_hash\":\"A", 1);
        if upper != dump {
            assert!(Ledger::from_ndjson(&upper).is_err());
        }
        // Guaranteed hit: uppercase the first hex digit that has a letter form.
        let mut bytes = dump.into_bytes();
        let pos = bytes
            .iter()
            .position(|b| (b'a'..=b'f').contains(b))
            .unwrap();
        bytes[pos] = bytes[pos].to_ascii_uppercase();
        let e = Ledger::from_ndjson(std::str::from_utf8(&bytes).unwrap());
        assert!(e.is_err());
    }

    #[test]
    fn non_canonical_spacing_rejected() {
        let dump = sample_ledger(1).to_ndjson();
        let spaced = dump.replacen("\"index\":0", "\"index\": 0", 1);
        let err = Ledger::from_ndjson(&spaced).unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn severity_bounds_enforced() {
        let mut ledger = Ledger::new();
        let key = derive_signing_key(1, "user", 0);
        let v = VoteRecord::new_signed(
            &key,
            Point3::new(0.0, 0.0, 0.0),
            0,
            SemanticLabel::Power,
            6,
            1,
        );
        assert!(matches!(
            ledger.submit_vote(v),
            Err(LedgerError::Malformed(_))
        ));
    }
}
