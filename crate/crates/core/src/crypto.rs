//! Thin signing layer: SHA-256 helpers and deterministic Ed25519 keys.

use ed25519_dalek::{Signature, Signer, Verifier, VerifyingKey};
use sha2::{Digest, Sha256};

pub use ed25519_dalek::SigningKey;

pub const HASH_LEN: usize = 32;
pub const PUBLIC_KEY_LEN: usize = 32;
pub const SIGNATURE_LEN: usize = 64;

/// SHA-256 over the concatenation of `parts`.
pub fn sha256(parts: &[&[u8]]) -> [u8; HASH_LEN] {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p);
    }
    hasher.finalize().into()
}

/// Deterministic Ed25519 key derived from (seed, role, index); used by the
/// simulator and tests so identities are reproducible across runs.
pub fn derive_signing_key(seed: u64, role: &str, index: u64) -> SigningKey {
    let digest = sha256(&[
        b"skyvote-key:v1",
        &seed.to_le_bytes(),
        role.as_bytes(),
        &index.to_le_bytes(),
    ]);
    SigningKey::from_bytes(&digest)
}

pub fn public_key_bytes(key: &SigningKey) -> Vec<u8> {
    key.verifying_key().to_bytes().to_vec()
}

pub fn sign(key: &SigningKey, message: &[u8]) -> Vec<u8> {
    key.sign(message).to_bytes().to_vec()
}

/// Signature check; false for malformed keys or signatures as well as for
/// honest verification failures.
pub fn verify_signature(public_key: &[u8], message: &[u8], signature: &[u8]) -> bool {
    let Ok(key_bytes) = <&[u8; PUBLIC_KEY_LEN]>::try_from(public_key) else {
        return false;
    };
    let Ok(key) = VerifyingKey::from_bytes(key_bytes) else {
        return false;
    };
    let Ok(sig_bytes) = <&[u8; SIGNATURE_LEN]>::try_from(signature) else {
        return false;
    };
    key.verify(message, &Signature::from_bytes(sig_bytes))
        .is_ok()
}
