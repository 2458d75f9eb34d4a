use std::path::{Path, PathBuf};

use rand::{CryptoRng, RngCore};

use super::period::apply_period_update;
use super::proof::{signed_message, tag_input, RunningBalance, TransactionProof, NONCE_LEN, RUNNING_BALANCE_LEN};
use super::state::CardState;
use super::{CardError, STATUS_OK};
use crate::crypto::{CommitmentParams, Opening, SigningSecret};
use crate::oram::{HouseholdRecord, OramClient};
use crate::wire::{kind, Channel, Frame, Reader};

/// What the card reports after a successful spend: the price and period
/// exactly as the vendor announced them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Receipt {
    pub price: u16,
    pub epsilon: u32,
    /// The vendor's answer to the proof. The card's own success does not
    /// depend on it.
    pub vendor_accepted: bool,
}

/// A card with an optional durable state file. Every state change is
/// written to the file before the operation's result leaves the card.
#[derive(Debug, Clone)]
pub struct Card {
    state: CardState,
    state_file: Option<PathBuf>,
    unlocked: bool,
}

impl Card {
    pub fn new(state: CardState) -> Self {
        Self { state, state_file: None, unlocked: true }
    }

    /// Binds the card to `path` and writes its current state there.
    pub fn with_state_file(mut self, path: impl Into<PathBuf>) -> Result<Self, CardError> {
        self.state_file = Some(path.into());
        self.persist()?;
        Ok(self)
    }

    /// Restores a card from its state file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CardError> {
        let path = path.as_ref();
        Ok(Self { state: CardState::load(path)?, state_file: Some(path.to_owned()), unlocked: true })
    }

    pub fn state(&self) -> &CardState {
        &self.state
    }

    pub fn household(&self) -> Option<u32> {
        self.state.household
    }

    pub fn violation(&self) -> bool {
        self.state.violation
    }

    /// PIN or biometric check, reduced to a flag.
    pub fn lock(&mut self) {
        self.unlocked = false;
    }

    pub fn unlock(&mut self) {
        self.unlocked = true;
    }

    fn persist(&self) -> Result<(), CardError> {
        match &self.state_file {
            Some(path) => self.state.store(path),
            None => Ok(()),
        }
    }

    fn ready(&self) -> Result<(), CardError> {
        if self.state.violation {
            Err(CardError::Violation)
        } else if self.state.retired {
            Err(CardError::Retired)
        } else if !self.unlocked {
            Err(CardError::Locked)
        } else {
            Ok(())
        }
    }

    fn registered(&self) -> Result<(u32, SigningSecret), CardError> {
        match (self.state.household, &self.state.rs_secret) {
            (Some(id), Some(secret)) => Ok((id, secret.clone())),
            _ => Err(CardError::NotRegistered),
        }
    }

    /// Registration, card side. Returns the household id.
    pub fn request<C, R>(&mut self, channel: &mut C, rng: &mut R) -> Result<u32, CardError>
    where
        C: Channel + ?Sized,
        R: RngCore + CryptoRng,
    {
        self.ready()?;
        if self.state.household.is_some() {
            return Err(CardError::AlreadyRegistered);
        }
        let reply = expect(channel, Frame::empty(kind::REG_HELLO), kind::REG_ID)?;
        let mut r = Reader::new(&reply);
        let id = r.u32()?;
        r.finish()?;

        let reply = expect(channel, Frame::empty(kind::REG_KEY_REQUEST), kind::REG_KEY)?;
        let secret = SigningSecret::from_bytes(&reply.payload).ok();
        let verified = secret.as_ref().is_some_and(|s| s.verification_key() == self.state.rs_public);
        let Some(secret) = secret.filter(|_| verified) else {
            let _ = channel.call(&Frame::empty(kind::REG_ABORT));
            return Err(CardError::KeyMismatch);
        };

        let reply = expect(channel, Frame::empty(kind::REG_BUDGET_REQUEST), kind::REG_BUDGET)?;
        let mut r = Reader::new(&reply);
        let budget = r.u16()?;
        let write = r.u8()? != 0;
        let period = r.u16()?;
        r.finish()?;
        if write {
            let record = HouseholdRecord { balance: budget, ctr: 0, last_period: period };
            OramClient::new(&self.state.oram_key).write(channel, id, record, rng)?;
        }

        let ack = expect(channel, Frame::empty(kind::REG_DONE), kind::REG_ACK)?;
        if ack.payload != [STATUS_OK] {
            return Err(CardError::Protocol);
        }
        self.state.household = Some(id);
        self.state.rs_secret = Some(secret);
        if write {
            self.state.last_ctr_written = Some(0);
        }
        self.persist()?;
        Ok(id)
    }

    /// Reads this card's household record, checks the watermark and applies
    /// any pending period top-up.
    fn read_checked<C, R>(&mut self, channel: &mut C, id: u32, epsilon: u32, rng: &mut R) -> Result<HouseholdRecord, CardError>
    where
        C: Channel + ?Sized,
        R: RngCore + CryptoRng,
    {
        let mut record = OramClient::new(&self.state.oram_key).read(channel, id, rng)?;
        if let Err(e) = self.state.detect_rollback(record.ctr) {
            self.persist()?;
            return Err(e);
        }
        if let Some(policy) = self.state.period_policy {
            let period = u16::try_from(epsilon).map_err(|_| CardError::PeriodOutOfRange(epsilon))?;
            record = apply_period_update(record, period, policy);
        }
        Ok(record)
    }

    /// Deducts `price`, bumps the counter and writes the record back. The
    /// watermark is persisted before returning.
    fn debit<C, R>(&mut self, channel: &mut C, id: u32, record: HouseholdRecord, price: u16, rng: &mut R) -> Result<u16, CardError>
    where
        C: Channel + ?Sized,
        R: RngCore + CryptoRng,
    {
        if price > record.balance {
            return Err(CardError::InsufficientBalance { balance: record.balance, price });
        }
        let Some(ctr) = record.ctr.checked_add(1) else {
            self.state.retired = true;
            self.persist()?;
            return Err(CardError::Retired);
        };
        let updated = HouseholdRecord { balance: record.balance - price, ctr, last_period: record.last_period };
        OramClient::new(&self.state.oram_key).write(channel, id, updated, rng)?;
        self.state.last_ctr_written = Some(ctr);
        self.persist()?;
        Ok(ctr)
    }

    /// A purchase, card side, for the price the user confirmed. The proof
    /// leaves the card only after the debited record has been written back.
    pub fn spend<C, R>(&mut self, channel: &mut C, confirmed: u16, rng: &mut R) -> Result<Receipt, CardError>
    where
        C: Channel + ?Sized,
        R: RngCore + CryptoRng,
    {
        self.ready()?;
        let (id, secret) = self.registered()?;
        let offer = expect(channel, Frame::empty(kind::SPEND_HELLO), kind::SPEND_OFFER)?;
        let mut r = Reader::new(&offer);
        let price = r.u16()?;
        let epsilon = r.u32()?;
        r.finish()?;
        check_price(price, confirmed)?;

        let record = self.read_checked(channel, id, epsilon, rng)?;
        let ctr = self.debit(channel, id, record, price, rng)?;
        let opening = Opening::random(rng);
        let com = CommitmentParams::standard().commit(u64::from(price), &opening);
        let tau = self.state.prf_key.eval(&tag_input(id, ctr));
        let sigma = secret.sign(&signed_message(&tau, epsilon, &com)).expect("message is non-empty");
        let proof = TransactionProof { sigma, tau, com, r: opening };

        let vendor_accepted = acknowledged(channel, Frame::new(kind::SPEND_PROOF, proof.to_bytes().to_vec()), kind::SPEND_RESULT);
        Ok(Receipt { price, epsilon, vendor_accepted })
    }

    /// A purchase under the signed running-balance design: instead of a
    /// transaction proof the card countersigns the vendor's new total.
    pub fn spend_running_balance<C, R>(&mut self, channel: &mut C, confirmed: u16, rng: &mut R) -> Result<Receipt, CardError>
    where
        C: Channel + ?Sized,
        R: RngCore + CryptoRng,
    {
        self.ready()?;
        let (id, secret) = self.registered()?;
        let offer = expect(channel, Frame::empty(kind::RB_REQUEST), kind::RB_RECORD)?;
        let mut r = Reader::new(&offer);
        let price = r.u16()?;
        let epsilon = r.u32()?;
        let current = RunningBalance::from_bytes(r.take(RUNNING_BALANCE_LEN)?).ok_or(CardError::Protocol)?;
        r.finish()?;
        check_price(price, confirmed)?;

        let (base, nonce) = if current.is_zero() {
            let mut nonce = [0u8; NONCE_LEN];
            rng.fill_bytes(&mut nonce);
            (0, nonce)
        } else if current.verify(&self.state.rs_public, epsilon) {
            (current.balance, current.nonce)
        } else {
            return Err(CardError::BadRunningBalance);
        };
        let total = base.checked_add(u32::from(price)).ok_or(CardError::Protocol)?;

        let record = self.read_checked(channel, id, epsilon, rng)?;
        self.debit(channel, id, record, price, rng)?;
        let sigma = secret.sign(&RunningBalance::message(total, &nonce, epsilon)).expect("message is non-empty");
        let updated = RunningBalance { balance: total, nonce, sigma };

        let vendor_accepted = acknowledged(channel, Frame::new(kind::RB_UPDATE, updated.to_bytes().to_vec()), kind::RB_ACK);
        Ok(Receipt { price, epsilon, vendor_accepted })
    }
}

/// Sends the final frame. The balance is already debited and the proof
/// released, so a lost or garbled answer does not undo the spend.
fn acknowledged<C: Channel + ?Sized>(channel: &mut C, request: Frame, want: u8) -> bool {
    matches!(channel.call(&request), Ok(reply) if reply.kind == want && reply.payload == [STATUS_OK])
}

fn check_price(offered: u16, confirmed: u16) -> Result<(), CardError> {
    if offered == confirmed {
        Ok(())
    } else {
        Err(CardError::PriceMismatch { offered, confirmed })
    }
}

fn expect<C: Channel + ?Sized>(channel: &mut C, request: Frame, want: u8) -> Result<Frame, CardError> {
    let reply = channel.call(&request)?;
    if reply.kind == want {
        Ok(reply)
    } else {
        Err(CardError::Protocol)
    }
}
