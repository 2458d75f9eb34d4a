//! Transaction proofs and signed running balances.

use crate::crypto::{
    Commitment, CommitmentParams, Opening, Signature, Tag, VerificationKey, COMMITMENT_LEN, OPENING_LEN, SIGNATURE_LEN, TAG_LEN,
};

/// Encoded length of a [`TransactionProof`]: `σ ‖ τ ‖ Com ‖ r`.
pub const PROOF_LEN: usize = SIGNATURE_LEN + TAG_LEN + COMMITMENT_LEN + OPENING_LEN;
/// Length of the signed message `τ ‖ ε ‖ Com`.
pub const SIGNED_MESSAGE_LEN: usize = TAG_LEN + 4 + COMMITMENT_LEN;

/// `τ (16) ‖ ε (u32 BE) ‖ Com (33, compressed)`.
pub fn signed_message(tau: &Tag, epsilon: u32, com: &Commitment) -> [u8; SIGNED_MESSAGE_LEN] {
    let mut m = [0u8; SIGNED_MESSAGE_LEN];
    m[..TAG_LEN].copy_from_slice(&tau.0);
    m[TAG_LEN..TAG_LEN + 4].copy_from_slice(&epsilon.to_be_bytes());
    m[TAG_LEN + 4..].copy_from_slice(&com.to_bytes());
    m
}

/// PRF input for the tag of the `ctr`-th transaction of a household:
/// `id_H (u32 BE) ‖ ctr (u16 BE)`.
pub fn tag_input(household: u32, ctr: u16) -> [u8; 6] {
    let mut m = [0u8; 6];
    m[..4].copy_from_slice(&household.to_be_bytes());
    m[4..].copy_from_slice(&ctr.to_be_bytes());
    m
}

/// What a card hands the vendor: `(σ, τ, Com, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransactionProof {
    pub sigma: Signature,
    pub tau: Tag,
    pub com: Commitment,
    pub r: Opening,
}

impl TransactionProof {
    pub fn to_bytes(&self) -> [u8; PROOF_LEN] {
        let mut out = [0u8; PROOF_LEN];
        let mut at = 0;
        for part in [&self.sigma.0[..], &self.tau.0[..], &self.com.to_bytes()[..], &self.r.to_bytes()[..]] {
            out[at..at + part.len()].copy_from_slice(part);
            at += part.len();
        }
        out
    }

    /// Rejects non-canonical commitments and openings.
    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != PROOF_LEN {
            return None;
        }
        let (sigma, rest) = bytes.split_at(SIGNATURE_LEN);
        let (tau, rest) = rest.split_at(TAG_LEN);
        let (com, r) = rest.split_at(COMMITMENT_LEN);
        Some(Self {
            sigma: Signature(sigma.try_into().ok()?),
            tau: Tag(tau.try_into().ok()?),
            com: Commitment::from_bytes(com).ok()?,
            r: Opening::from_bytes(r).ok()?,
        })
    }

    /// The vendor's check: the signature covers `τ ‖ ε ‖ Com` and `Com`
    /// opens to `price` under `r`.
    pub fn verify(&self, rs_public: &VerificationKey, params: &CommitmentParams, epsilon: u32, price: u16) -> bool {
        rs_public.verify(&signed_message(&self.tau, epsilon, &self.com), &self.sigma.0)
            && params.opens_to(&self.com, u64::from(price), &self.r)
    }
}

pub const NONCE_LEN: usize = 16;
/// Encoded length of a [`RunningBalance`]: `balance u32 ‖ nonce ‖ σ`.
pub const RUNNING_BALANCE_LEN: usize = 4 + NONCE_LEN + SIGNATURE_LEN;

/// A vendor's card-signed cumulative takings for one period. The all-zero
/// value is the sentinel for "no transaction yet".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunningBalance {
    pub balance: u32,
    pub nonce: [u8; NONCE_LEN],
    pub sigma: Signature,
}

impl RunningBalance {
    pub const ZERO: Self = Self { balance: 0, nonce: [0; NONCE_LEN], sigma: Signature([0; SIGNATURE_LEN]) };

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    /// `"RB" ‖ balance u32 ‖ nonce ‖ ε u32`.
    pub fn message(balance: u32, nonce: &[u8; NONCE_LEN], epsilon: u32) -> [u8; 2 + 4 + NONCE_LEN + 4] {
        let mut m = [0u8; 2 + 4 + NONCE_LEN + 4];
        m[..2].copy_from_slice(b"RB");
        m[2..6].copy_from_slice(&balance.to_be_bytes());
        m[6..6 + NONCE_LEN].copy_from_slice(nonce);
        m[6 + NONCE_LEN..].copy_from_slice(&epsilon.to_be_bytes());
        m
    }

    pub fn verify(&self, rs_public: &VerificationKey, epsilon: u32) -> bool {
        rs_public.verify(&Self::message(self.balance, &self.nonce, epsilon), &self.sigma.0)
    }

    pub fn to_bytes(&self) -> [u8; RUNNING_BALANCE_LEN] {
        let mut out = [0u8; RUNNING_BALANCE_LEN];
        out[..4].copy_from_slice(&self.balance.to_be_bytes());
        out[4..4 + NONCE_LEN].copy_from_slice(&self.nonce);
        out[4 + NONCE_LEN..].copy_from_slice(&self.sigma.0);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != RUNNING_BALANCE_LEN {
            return None;
        }
        Some(Self {
            balance: u32::from_be_bytes(bytes[..4].try_into().ok()?),
            nonce: bytes[4..4 + NONCE_LEN].try_into().ok()?,
            sigma: Signature(bytes[4 + NONCE_LEN..].try_into().ok()?),
        })
    }
}
