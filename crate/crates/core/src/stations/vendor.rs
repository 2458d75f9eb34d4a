use std::collections::{BTreeMap, HashSet};

use crate::crypto::{CommitmentParams, Tag, VerificationKey};
use crate::oram::OramServer;
use crate::token::{RunningBalance, TransactionProof, STATUS_OK};
use crate::wire::{kind, Channel, ChannelError, Frame, FrameError};

/// Why a vendor turned a proof down. The byte value travels in the
/// `SPEND_RESULT` frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ReceiveReject {
    #[error("proof encoding malformed")]
    Malformed = 1,
    #[error("signature does not verify over the tag, period and commitment")]
    BadSignature = 2,
    #[error("commitment does not open to the announced price")]
    CommitmentMismatch = 3,
    #[error("tag already received")]
    DuplicateTag = 4,
    #[error("card did not complete the protocol")]
    Aborted = 5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedgerEntry {
    pub price: u16,
    pub proof: TransactionProof,
}

/// Accepted transactions of one period.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VendorLedger {
    pub epsilon: u32,
    pub entries: Vec<LedgerEntry>,
}

impl VendorLedger {
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| u64::from(e.price)).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Vendor {
    name: String,
    rs_public: VerificationKey,
    ledgers: BTreeMap<u32, VendorLedger>,
    seen: HashSet<Tag>,
    running: BTreeMap<u32, RunningBalance>,
}

impl Vendor {
    pub fn new(name: impl Into<String>, rs_public: VerificationKey) -> Self {
        Self { name: name.into(), rs_public, ledgers: BTreeMap::new(), seen: HashSet::new(), running: BTreeMap::new() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ledger(&self, epsilon: u32) -> Option<&VendorLedger> {
        self.ledgers.get(&epsilon)
    }

    pub fn ledgers(&self) -> impl Iterator<Item = &VendorLedger> {
        self.ledgers.values()
    }

    /// Removes and returns the ledger of a period, typically to reclaim it.
    pub fn take_ledger(&mut self, epsilon: u32) -> Option<VendorLedger> {
        self.ledgers.remove(&epsilon)
    }

    pub fn running_balance(&self, epsilon: u32) -> RunningBalance {
        self.running.get(&epsilon).copied().unwrap_or(RunningBalance::ZERO)
    }

    /// Checks a proof against the announced price and period and records
    /// it. Tags already seen by this vendor are refused.
    pub fn accept(&mut self, epsilon: u32, price: u16, proof: TransactionProof) -> Result<(), ReceiveReject> {
        let params = CommitmentParams::standard();
        let message = crate::token::signed_message(&proof.tau, epsilon, &proof.com);
        if !self.rs_public.verify(&message, &proof.sigma.0) {
            return Err(ReceiveReject::BadSignature);
        }
        if !params.opens_to(&proof.com, u64::from(price), &proof.r) {
            return Err(ReceiveReject::CommitmentMismatch);
        }
        if !self.seen.insert(proof.tau) {
            return Err(ReceiveReject::DuplicateTag);
        }
        self.ledgers
            .entry(epsilon)
            .or_insert_with(|| VendorLedger { epsilon, entries: Vec::new() })
            .entries
            .push(LedgerEntry { price, proof });
        Ok(())
    }

    /// Opens a sale of `price` in period `epsilon`.
    pub fn receive<'a>(&'a mut self, epsilon: u32, price: u16, server: &'a mut OramServer) -> ReceiveSession<'a> {
        ReceiveSession { vendor: self, server, epsilon, price, outcome: None }
    }

    /// Opens a sale under the running-balance design.
    pub fn receive_running<'a>(&'a mut self, epsilon: u32, price: u16, server: &'a mut OramServer) -> RunningSession<'a> {
        RunningSession { vendor: self, server, epsilon, price, outcome: None }
    }
}

/// The vendor's side of one sale; relays ORAM frames to the database.
pub struct ReceiveSession<'a> {
    vendor: &'a mut Vendor,
    server: &'a mut OramServer,
    epsilon: u32,
    price: u16,
    outcome: Option<Result<TransactionProof, ReceiveReject>>,
}

impl ReceiveSession<'_> {
    pub fn finish(self) -> Result<TransactionProof, ReceiveReject> {
        self.outcome.unwrap_or(Err(ReceiveReject::Aborted))
    }

    pub fn server(&mut self) -> &mut OramServer {
        self.server
    }
}

impl Channel for ReceiveSession<'_> {
    fn exchange(&mut self, request: &[u8]) -> Result<Vec<u8>, ChannelError> {
        let frame = Frame::decode(request)?;
        if kind::is_oram_request(frame.kind) {
            return Ok(self.server.serve(request));
        }
        let reply = match frame.kind {
            kind::SPEND_HELLO => {
                let mut p = self.price.to_be_bytes().to_vec();
                p.extend_from_slice(&self.epsilon.to_be_bytes());
                Frame::new(kind::SPEND_OFFER, p)
            }
            kind::SPEND_PROOF if self.outcome.is_none() => {
                let result = match TransactionProof::from_bytes(&frame.payload) {
                    Some(proof) => self.vendor.accept(self.epsilon, self.price, proof).map(|_| proof),
                    None => Err(ReceiveReject::Malformed),
                };
                let status = match &result {
                    Ok(_) => STATUS_OK,
                    Err(e) => *e as u8,
                };
                self.outcome = Some(result);
                Frame::new(kind::SPEND_RESULT, vec![status])
            }
            other => return Err(FrameError::UnexpectedKind(other).into()),
        };
        Ok(reply.encode())
    }
}

/// The vendor's side of a running-balance sale.
pub struct RunningSession<'a> {
    vendor: &'a mut Vendor,
    server: &'a mut OramServer,
    epsilon: u32,
    price: u16,
    outcome: Option<Result<RunningBalance, ReceiveReject>>,
}

impl RunningSession<'_> {
    pub fn finish(self) -> Result<RunningBalance, ReceiveReject> {
        self.outcome.unwrap_or(Err(ReceiveReject::Aborted))
    }
}

impl Channel for RunningSession<'_> {
    fn exchange(&mut self, request: &[u8]) -> Result<Vec<u8>, ChannelError> {
        let frame = Frame::decode(request)?;
        if kind::is_oram_request(frame.kind) {
            return Ok(self.server.serve(request));
        }
        let current = self.vendor.running_balance(self.epsilon);
        let reply = match frame.kind {
            kind::RB_REQUEST => {
                let mut p = self.price.to_be_bytes().to_vec();
                p.extend_from_slice(&self.epsilon.to_be_bytes());
                p.extend_from_slice(&current.to_bytes());
                Frame::new(kind::RB_RECORD, p)
            }
            kind::RB_UPDATE if self.outcome.is_none() => {
                let result = match RunningBalance::from_bytes(&frame.payload) {
                    None => Err(ReceiveReject::Malformed),
                    Some(next) if !next.verify(&self.vendor.rs_public, self.epsilon) => Err(ReceiveReject::BadSignature),
                    Some(next)
                        if u64::from(next.balance) != u64::from(current.balance) + u64::from(self.price)
                            || (!current.is_zero() && next.nonce != current.nonce) =>
                    {
                        Err(ReceiveReject::CommitmentMismatch)
                    }
                    Some(next) => {
                        self.vendor.running.insert(self.epsilon, next);
                        Ok(next)
                    }
                };
                let status = match &result {
                    Ok(_) => STATUS_OK,
                    Err(e) => *e as u8,
                };
                self.outcome = Some(result);
                Frame::new(kind::RB_ACK, vec![status])
            }
            other => return Err(FrameError::UnexpectedKind(other).into()),
        };
        Ok(reply.encode())
    }
}
