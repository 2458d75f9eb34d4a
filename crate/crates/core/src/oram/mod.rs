//! The shared, encrypted household-balance store.
//!
//! One client interface ([`OramClient::read`] / [`OramClient::write`]) over
//! three storage layouts:
//!
//! * **naive**: the whole record array is one authenticated ciphertext that
//!   the client downloads, decrypts, re-encrypts and uploads on every access.
//! * **tree**: a path-style tree ORAM for the records. Its position map is a
//!   single flat ciphertext.
//! * **recursive**: the same data tree, with the position map itself stored
//!   in a chain of smaller tree ORAMs until the top map fits in 256 bytes.
//!
//! Every stored unit is sealed with [`AeKey`](crate::crypto::AeKey) under
//! associated data naming its location, so corrupted or relocated units are
//! detected. Replacing the whole database by an older consistent snapshot is
//! not detectable here; cards catch that through their counter watermark.

mod client;
mod db;
mod layout;
mod server;

pub use client::OramClient;
pub use db::{EncryptedDatabase, UnitId, DB_FORMAT_VERSION, DB_MAGIC};
pub use layout::{Forest, TreeShape, POSITION_LEN, STASH_CAPACITY, TOP_MAP_MAX_BYTES};
pub use server::{OramServer, TransferStats};

use rand::{CryptoRng, RngCore};

use crate::crypto::AeKey;
use crate::wire::{ChannelError, FrameError};

/// Size of a household record in the compact layout.
pub const RECORD_LEN: usize = 4;
/// Size of a household record when periodic top-ups are enabled.
pub const PERIODIC_RECORD_LEN: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Naive,
    Tree,
    Recursive,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Naive, Variant::Tree, Variant::Recursive];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Naive => "naive",
            Variant::Tree => "tree",
            Variant::Recursive => "recursive",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Variant::Naive => 0,
            Variant::Tree => 1,
            Variant::Recursive => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => Variant::Naive,
            1 => Variant::Tree,
            2 => Variant::Recursive,
            _ => return None,
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(Variant::Naive),
            "tree" => Ok(Variant::Tree),
            "recursive" | "recursive-tree" => Ok(Variant::Recursive),
            other => Err(format!("unknown ORAM variant `{other}`")),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether records carry the `last_period` field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordLayout {
    Compact,
    Periodic,
}

impl RecordLayout {
    pub fn record_len(self) -> usize {
        match self {
            RecordLayout::Compact => RECORD_LEN,
            RecordLayout::Periodic => PERIODIC_RECORD_LEN,
        }
    }
}

/// Balance and transaction counter of one household, `balance ‖ ctr` as two
/// big-endian `u16`s, optionally followed by `last_period`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct HouseholdRecord {
    pub balance: u16,
    pub ctr: u16,
    /// Only stored in [`RecordLayout::Periodic`]; ignored otherwise.
    pub last_period: u16,
}

impl HouseholdRecord {
    pub fn new(balance: u16, ctr: u16) -> Self {
        Self { balance, ctr, last_period: 0 }
    }

    pub fn encode_into(&self, layout: RecordLayout, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.balance.to_be_bytes());
        out.extend_from_slice(&self.ctr.to_be_bytes());
        if layout == RecordLayout::Periodic {
            out.extend_from_slice(&self.last_period.to_be_bytes());
        }
    }

    pub fn encode(&self, layout: RecordLayout) -> Vec<u8> {
        let mut out = Vec::with_capacity(layout.record_len());
        self.encode_into(layout, &mut out);
        out
    }

    /// `bytes` must be exactly `layout.record_len()` long.
    pub fn decode(layout: RecordLayout, bytes: &[u8]) -> Option<Self> {
        if bytes.len() != layout.record_len() {
            return None;
        }
        let word = |i: usize| u16::from_be_bytes([bytes[i], bytes[i + 1]]);
        Some(Self { balance: word(0), ctr: word(2), last_period: if layout == RecordLayout::Periodic { word(4) } else { 0 } })
    }
}

/// Public structure of a database. Also provisioned into every card as part
/// of the ORAM key, so a server cannot lie about geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OramConfig {
    pub variant: Variant,
    pub capacity: u32,
    pub bucket_size: u8,
    pub recursion_factor: u16,
    pub layout: RecordLayout,
}

/// Encoded length of an [`OramConfig`].
pub const CONFIG_LEN: usize = 9;
pub const DEFAULT_BUCKET_SIZE: u8 = 4;
pub const DEFAULT_RECURSION_FACTOR: u16 = 16;
/// Block ids must fit in 31 bits next to the validity flag.
pub const MAX_CAPACITY: u32 = 1 << 24;

impl OramConfig {
    pub fn new(variant: Variant, capacity: u32) -> Self {
        Self {
            variant,
            capacity,
            bucket_size: DEFAULT_BUCKET_SIZE,
            recursion_factor: DEFAULT_RECURSION_FACTOR,
            layout: RecordLayout::Compact,
        }
    }

    pub fn with_layout(mut self, layout: RecordLayout) -> Self {
        self.layout = layout;
        self
    }

    /// `variant u8 ‖ layout u8 ‖ capacity u32 ‖ bucket_size u8 ‖ recursion_factor u16`.
    pub fn to_bytes(&self) -> [u8; CONFIG_LEN] {
        let mut out = [0u8; CONFIG_LEN];
        out[0] = self.variant.code();
        out[1] = match self.layout {
            RecordLayout::Compact => 0,
            RecordLayout::Periodic => 1,
        };
        out[2..6].copy_from_slice(&self.capacity.to_be_bytes());
        out[6] = self.bucket_size;
        out[7..9].copy_from_slice(&self.recursion_factor.to_be_bytes());
        out
    }

    /// Decodes and validates.
    pub fn from_bytes(bytes: &[u8; CONFIG_LEN]) -> Result<Self, OramError> {
        let variant = Variant::from_code(bytes[0]).ok_or(OramError::InvalidConfig("unknown variant"))?;
        let layout = match bytes[1] {
            0 => RecordLayout::Compact,
            1 => RecordLayout::Periodic,
            _ => return Err(OramError::InvalidConfig("unknown record layout")),
        };
        let config = Self {
            variant,
            capacity: u32::from_be_bytes(bytes[2..6].try_into().unwrap()),
            bucket_size: bytes[6],
            recursion_factor: u16::from_be_bytes([bytes[7], bytes[8]]),
            layout,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), OramError> {
        if self.capacity == 0 || self.capacity > MAX_CAPACITY {
            return Err(OramError::InvalidConfig("capacity must be in 1..=2^24"));
        }
        if self.bucket_size == 0 {
            return Err(OramError::InvalidConfig("bucket_size must be at least 1"));
        }
        if self.recursion_factor < 2 {
            return Err(OramError::InvalidConfig("recursion_factor must be at least 2"));
        }
        Ok(())
    }
}

/// Client secret: the authenticated-encryption key plus the trusted geometry.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OramKey {
    pub(crate) ae: AeKey,
    pub(crate) config: OramConfig,
}

impl OramKey {
    pub fn new(ae: AeKey, config: OramConfig) -> Self {
        Self { ae, config }
    }

    pub fn config(&self) -> &OramConfig {
        &self.config
    }

    pub fn ae_key(&self) -> &AeKey {
        &self.ae
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OramError {
    #[error("invalid ORAM configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("block index {index} outside capacity {capacity}")]
    IndexOutOfRange { index: u32, capacity: u32 },
    #[error("database integrity check failed")]
    Integrity,
    #[error("stash overflow: more than {STASH_CAPACITY} blocks pending eviction")]
    StashOverflow,
    #[error("server rejected request (code {0})")]
    ServerError(u8),
    #[error("malformed database file: {0}")]
    Format(String),
    #[error("database file: {0}")]
    Io(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Trusted-party initialisation: a fresh key and a database of `capacity`
/// empty records (balance 0, counter 0).
pub fn init<R: RngCore + CryptoRng>(config: OramConfig, rng: &mut R) -> Result<(OramKey, EncryptedDatabase), OramError> {
    config.validate()?;
    let key = OramKey::new(AeKey::generate(rng), config);
    let db = EncryptedDatabase::initialise(&key, rng);
    Ok((key, db))
}
