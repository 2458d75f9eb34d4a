//! Reclaim proofs, their verification, and the persistent tag ledger.
//!
//! Binary proof file:
//!
//! ```text
//! "AWRP" ‖ version:u8 ‖ ε:u32 ‖ claimed_total:u64 ‖ r_sum:32 ‖ count:u32 ‖ { σ:64 ‖ τ:16 ‖ Com:33 }*
//! ```
//!
//! Text proof file, one field per line, hex without prefixes:
//!
//! ```text
//! aidwallet-reclaim 1
//! epsilon <decimal>
//! total <decimal>
//! r_sum <64 hex>
//! item <σ 128 hex> <τ 32 hex> <Com 66 hex>
//! ```

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::Path;

use super::vendor::LedgerEntry;
use super::StationError;
use crate::crypto::{
    combine, Commitment, CommitmentParams, Opening, Signature, Tag, VerificationKey, COMMITMENT_LEN, OPENING_LEN, SIGNATURE_LEN, TAG_LEN,
};
use crate::token::{signed_message, RunningBalance, NONCE_LEN};

const MAGIC: [u8; 4] = *b"AWRP";
pub const RECLAIM_FORMAT_VERSION: u8 = 1;
pub const RECLAIM_ITEM_LEN: usize = SIGNATURE_LEN + TAG_LEN + COMMITMENT_LEN;
const TEXT_HEADER: &str = "aidwallet-reclaim 1";

/// A transaction proof without its opening.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReclaimItem {
    pub sigma: Signature,
    pub tau: Tag,
    pub com: Commitment,
}

/// Aggregated evidence for a period's takings. Individual prices do not
/// appear anywhere in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReclaimProof {
    pub epsilon: u32,
    pub claimed_total: u64,
    pub r_sum: Opening,
    pub items: Vec<ReclaimItem>,
}

/// Sums prices and openings and strips the openings from the items.
pub fn create_reclaim_proof(epsilon: u32, entries: &[LedgerEntry]) -> Result<(u64, ReclaimProof), StationError> {
    if entries.is_empty() {
        return Err(StationError::EmptyLedger);
    }
    let total: u64 = entries.iter().map(|e| u64::from(e.price)).sum();
    let r_sum = entries.iter().map(|e| e.proof.r).sum();
    let items = entries.iter().map(|e| ReclaimItem { sigma: e.proof.sigma, tau: e.proof.tau, com: e.proof.com }).collect();
    Ok((total, ReclaimProof { epsilon, claimed_total: total, r_sum, items }))
}

/// Distinct reasons for refusing a reclaim proof. Indices point into
/// `items`.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RejectReason {
    #[error("proof has no items")]
    Empty,
    #[error("proof is for period {found}, expected {expected}")]
    PeriodMismatch { expected: u32, found: u32 },
    #[error("claimed total {claimed} differs from submitted sum {submitted}")]
    TotalMismatch { claimed: u64, submitted: u64 },
    #[error("signature of item {0} does not verify")]
    BadSignature(usize),
    #[error("tag of item {0} repeats within the proof")]
    DuplicateTag(usize),
    #[error("tag of item {0} was already claimed")]
    AlreadyClaimed(usize),
    #[error("commitment product does not open to the claimed sum")]
    CommitmentMismatch,
    #[error("running balance carries no card signature")]
    MissingSignature,
    #[error("running balance nonce already used")]
    StaleNonce,
    #[error("tag ledger storage: {0}")]
    Storage(String),
}

impl RejectReason {
    /// Stable numeric code, for logs and result files.
    pub fn code(&self) -> u8 {
        match self {
            RejectReason::Empty => 1,
            RejectReason::PeriodMismatch { .. } => 2,
            RejectReason::TotalMismatch { .. } => 3,
            RejectReason::BadSignature(_) => 4,
            RejectReason::DuplicateTag(_) => 5,
            RejectReason::AlreadyClaimed(_) => 6,
            RejectReason::CommitmentMismatch => 7,
            RejectReason::MissingSignature => 8,
            RejectReason::StaleNonce => 9,
            RejectReason::Storage(_) => 10,
        }
    }
}

/// Append-only set of accepted tags, optionally mirrored to a file of
/// concatenated 16-byte tags.
#[derive(Debug, Default)]
pub struct TagLedger {
    seen: HashSet<Tag>,
    file: Option<File>,
}

impl TagLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads existing tags from `path` (creating it if absent) and appends
    /// future ones to it.
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        if bytes.len() % TAG_LEN != 0 {
            return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "tag ledger length is not a multiple of 16"));
        }
        let seen = bytes.chunks(TAG_LEN).map(|c| Tag(c.try_into().unwrap())).collect();
        Ok(Self { seen, file: Some(file) })
    }

    pub fn contains(&self, tag: &Tag) -> bool {
        self.seen.contains(tag)
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }

    /// Appends all tags with a single write.
    fn append(&mut self, tags: &[Tag]) -> std::io::Result<()> {
        if let Some(file) = &mut self.file {
            let bytes: Vec<u8> = tags.iter().flat_map(|t| t.0).collect();
            file.write_all(&bytes)?;
            file.sync_data()?;
        }
        self.seen.extend(tags.iter().copied());
        Ok(())
    }
}

/// Checks, in order: non-empty, period, claimed total, every signature, tag
/// uniqueness within the proof and against `ledger`, and the commitment
/// product. On success every tag is appended to `ledger`.
pub fn verify_reclaim_proof(
    rs_public: &VerificationKey,
    epsilon: u32,
    spent_sum: u64,
    proof: &ReclaimProof,
    ledger: &mut TagLedger,
) -> Result<(), RejectReason> {
    if proof.items.is_empty() {
        return Err(RejectReason::Empty);
    }
    if proof.epsilon != epsilon {
        return Err(RejectReason::PeriodMismatch { expected: epsilon, found: proof.epsilon });
    }
    if proof.claimed_total != spent_sum {
        return Err(RejectReason::TotalMismatch { claimed: proof.claimed_total, submitted: spent_sum });
    }
    for (i, item) in proof.items.iter().enumerate() {
        if !rs_public.verify(&signed_message(&item.tau, epsilon, &item.com), &item.sigma.0) {
            return Err(RejectReason::BadSignature(i));
        }
    }
    let mut within = HashSet::with_capacity(proof.items.len());
    for (i, item) in proof.items.iter().enumerate() {
        if !within.insert(item.tau) {
            return Err(RejectReason::DuplicateTag(i));
        }
        if ledger.contains(&item.tau) {
            return Err(RejectReason::AlreadyClaimed(i));
        }
    }
    let coms: Vec<Commitment> = proof.items.iter().map(|i| i.com).collect();
    let product = combine(&coms).map_err(|_| RejectReason::Empty)?;
    if product != CommitmentParams::standard().commit(spent_sum, &proof.r_sum) {
        return Err(RejectReason::CommitmentMismatch);
    }
    let tags: Vec<Tag> = proof.items.iter().map(|i| i.tau).collect();
    ledger.append(&tags).map_err(|e| RejectReason::Storage(e.to_string()))
}

/// Verifies vendor claims and keeps its own tag ledger and nonce set.
#[derive(Debug)]
pub struct ReclaimStation {
    rs_public: VerificationKey,
    ledger: TagLedger,
    nonces: HashSet<[u8; NONCE_LEN]>,
}

impl ReclaimStation {
    pub fn new(rs_public: VerificationKey) -> Self {
        Self::with_ledger(rs_public, TagLedger::new())
    }

    pub fn with_ledger(rs_public: VerificationKey, ledger: TagLedger) -> Self {
        Self { rs_public, ledger, nonces: HashSet::new() }
    }

    pub fn ledger(&self) -> &TagLedger {
        &self.ledger
    }

    pub fn verify(&mut self, epsilon: u32, spent_sum: u64, proof: &ReclaimProof) -> Result<(), RejectReason> {
        verify_reclaim_proof(&self.rs_public, epsilon, spent_sum, proof, &mut self.ledger)
    }

    /// Accepts a running balance once per nonce.
    pub fn verify_running_balance(&mut self, epsilon: u32, record: &RunningBalance) -> Result<u32, RejectReason> {
        if record.is_zero() {
            return Err(RejectReason::MissingSignature);
        }
        if !record.verify(&self.rs_public, epsilon) {
            return Err(RejectReason::BadSignature(0));
        }
        if !self.nonces.insert(record.nonce) {
            return Err(RejectReason::StaleNonce);
        }
        Ok(record.balance)
    }
}

/// Repeats the reclaim checks against an independent tag ledger.
#[derive(Debug)]
pub struct Auditor {
    rs_public: VerificationKey,
    ledger: TagLedger,
}

impl Auditor {
    pub fn new(rs_public: VerificationKey) -> Self {
        Self::with_ledger(rs_public, TagLedger::new())
    }

    pub fn with_ledger(rs_public: VerificationKey, ledger: TagLedger) -> Self {
        Self { rs_public, ledger }
    }

    pub fn audit(&mut self, epsilon: u32, spent_sum: u64, proof: &ReclaimProof) -> Result<(), RejectReason> {
        verify_reclaim_proof(&self.rs_public, epsilon, spent_sum, proof, &mut self.ledger)
    }
}

impl ReclaimItem {
    fn to_bytes(self) -> [u8; RECLAIM_ITEM_LEN] {
        let mut out = [0u8; RECLAIM_ITEM_LEN];
        out[..SIGNATURE_LEN].copy_from_slice(&self.sigma.0);
        out[SIGNATURE_LEN..SIGNATURE_LEN + TAG_LEN].copy_from_slice(&self.tau.0);
        out[SIGNATURE_LEN + TAG_LEN..].copy_from_slice(&self.com.to_bytes());
        out
    }

    fn from_parts(sigma: &[u8], tau: &[u8], com: &[u8]) -> Result<Self, StationError> {
        let bad = || StationError::Format("malformed reclaim item".into());
        Ok(Self {
            sigma: Signature(sigma.try_into().map_err(|_| bad())?),
            tau: Tag(tau.try_into().map_err(|_| bad())?),
            com: Commitment::from_bytes(com).map_err(|_| bad())?,
        })
    }
}

impl ReclaimProof {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(53 + self.items.len() * RECLAIM_ITEM_LEN);
        out.extend_from_slice(&MAGIC);
        out.push(RECLAIM_FORMAT_VERSION);
        out.extend_from_slice(&self.epsilon.to_be_bytes());
        out.extend_from_slice(&self.claimed_total.to_be_bytes());
        out.extend_from_slice(&self.r_sum.to_bytes());
        out.extend_from_slice(&(self.items.len() as u32).to_be_bytes());
        for item in &self.items {
            out.extend_from_slice(&item.to_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StationError> {
        let bad = |m: &str| StationError::Format(m.to_owned());
        const HEADER: usize = 4 + 1 + 4 + 8 + OPENING_LEN + 4;
        if bytes.len() < HEADER || bytes[..4] != MAGIC {
            return Err(bad("not a reclaim proof"));
        }
        if bytes[4] != RECLAIM_FORMAT_VERSION {
            return Err(bad("unsupported reclaim proof version"));
        }
        let epsilon = u32::from_be_bytes(bytes[5..9].try_into().unwrap());
        let claimed_total = u64::from_be_bytes(bytes[9..17].try_into().unwrap());
        let r_sum = Opening::from_bytes(&bytes[17..17 + OPENING_LEN]).map_err(|_| bad("r_sum out of range"))?;
        let count = u32::from_be_bytes(bytes[17 + OPENING_LEN..HEADER].try_into().unwrap()) as usize;
        let body = &bytes[HEADER..];
        if body.len() != count * RECLAIM_ITEM_LEN {
            return Err(bad("item count does not match length"));
        }
        let items = body
            .chunks(RECLAIM_ITEM_LEN)
            .map(|c| {
                let (sigma, rest) = c.split_at(SIGNATURE_LEN);
                let (tau, com) = rest.split_at(TAG_LEN);
                ReclaimItem::from_parts(sigma, tau, com)
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { epsilon, claimed_total, r_sum, items })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{TEXT_HEADER}\nepsilon {}\ntotal {}\nr_sum {}\n",
            self.epsilon,
            self.claimed_total,
            hex::encode(self.r_sum.to_bytes())
        );
        for item in &self.items {
            out.push_str(&format!("item {} {} {}\n", hex::encode(item.sigma.0), hex::encode(item.tau.0), hex::encode(item.com.to_bytes())));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, StationError> {
        let bad = |m: String| StationError::Format(m);
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some(TEXT_HEADER) {
            return Err(bad("missing header line".into()));
        }
        let mut field = |name: &str| -> Result<String, StationError> {
            let line = lines.next().ok_or_else(|| bad(format!("missing `{name}` line")))?;
            line.strip_prefix(name)
                .and_then(|r| r.strip_prefix(' '))
                .map(str::to_owned)
                .ok_or_else(|| bad(format!("expected `{name}`, found `{line}`")))
        };
        let epsilon = field("epsilon")?.parse().map_err(|_| bad("bad epsilon".into()))?;
        let claimed_total = field("total")?.parse().map_err(|_| bad("bad total".into()))?;
        let r_hex = hex::decode(field("r_sum")?).map_err(|_| bad("bad r_sum hex".into()))?;
        let r_sum = Opening::from_bytes(&r_hex).map_err(|_| bad("r_sum out of range".into()))?;
        let mut items = Vec::new();
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [tag, sigma, tau, com] = parts[..] else {
                return Err(bad(format!("bad item line `{line}`")));
            };
            if tag != "item" {
                return Err(bad(format!("unexpected line `{line}`")));
            }
            let decode = |h: &str| hex::decode(h).map_err(|_| bad("bad item hex".into()));
            items.push(ReclaimItem::from_parts(&decode(sigma)?, &decode(tau)?, &decode(com)?)?);
        }
        Ok(Self { epsilon, claimed_total, r_sum, items })
    }
}
