//! The simulated smart card.
//!
//! A [`Card`] holds the deployment secrets and runs the card side of
//! registration ([`Card::request`]), spending ([`Card::spend`]) and the
//! running-balance variant ([`Card::spend_running_balance`]). All three are
//! driven by the card over a [`Channel`](crate::wire::Channel) to the
//! counterpart station, which also relays the card's ORAM frames to the
//! database.
//!
//! The card trusts only its own watermark: if its household record ever
//! shows a counter below the last one this card wrote, it records a
//! violation and refuses every further operation.

mod card;
mod period;
mod proof;
mod state;

pub use card::{Card, Receipt};
pub use period::{apply_period_update, PeriodPolicy};
pub use proof::{
    signed_message, tag_input, RunningBalance, TransactionProof, NONCE_LEN, PROOF_LEN, RUNNING_BALANCE_LEN, SIGNED_MESSAGE_LEN,
};
pub use state::{setup_card, CardState, TrustedSecret, CARD_STATE_LEN, CARD_STATE_VERSION};

use crate::oram::OramError;
use crate::wire::{ChannelError, FrameError};

/// Result code in a `SPEND_RESULT` / `REG_ACK` / `RB_ACK` frame.
pub const STATUS_OK: u8 = 0;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CardError {
    #[error("card is locked; user authentication required")]
    Locked,
    #[error("card has recorded a rollback violation and refuses to operate")]
    Violation,
    #[error("transaction counter exhausted; card retired")]
    Retired,
    #[error("card is not registered to a household")]
    NotRegistered,
    #[error("card is already registered")]
    AlreadyRegistered,
    #[error("insufficient balance: {balance} available, {price} requested")]
    InsufficientBalance { balance: u16, price: u16 },
    #[error("database rollback detected: counter {observed} below watermark {watermark}")]
    RollbackDetected { observed: u16, watermark: u16 },
    #[error("registration key does not match the station's public key")]
    KeyMismatch,
    #[error("running balance signature invalid")]
    BadRunningBalance,
    #[error("period {0} does not fit the 16-bit period field")]
    PeriodOutOfRange(u32),
    #[error("vendor offered {offered}, user confirmed {confirmed}")]
    PriceMismatch { offered: u16, confirmed: u16 },
    #[error("counterpart aborted or answered out of protocol")]
    Protocol,
    #[error("state file: {0}")]
    Persist(String),
    #[error(transparent)]
    Oram(#[from] OramError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

impl From<FrameError> for CardError {
    fn from(e: FrameError) -> Self {
        CardError::Channel(e.into())
    }
}
