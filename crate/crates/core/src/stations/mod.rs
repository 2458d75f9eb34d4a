//! Organisation-side actors: trusted setup, registration station, vendors,
//! reclaim station and auditor.

mod reclaim;
mod registration;
mod vendor;

pub use reclaim::{
    create_reclaim_proof, verify_reclaim_proof, Auditor, ReclaimItem, ReclaimProof, ReclaimStation, RejectReason, TagLedger,
    RECLAIM_FORMAT_VERSION, RECLAIM_ITEM_LEN,
};
pub use registration::{RegistrationOutcome, RegistrationSession, RegistrationStation};
pub use vendor::{LedgerEntry, ReceiveReject, ReceiveSession, RunningSession, Vendor, VendorLedger};

use rand::{CryptoRng, RngCore};

use crate::crypto::{CommitmentParams, PrfKey, SigningKeyPair, VerificationKey};
use crate::oram::{self, EncryptedDatabase, OramConfig, OramError, OramServer, RecordLayout};
use crate::token::{setup_card, Card, CardError, PeriodPolicy, Receipt, TransactionProof, TrustedSecret};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StationError {
    #[error("no household ids left")]
    CapacityExhausted,
    #[error("a household needs at least one card")]
    NoCards,
    #[error("card aborted the registration")]
    RegistrationAborted,
    #[error("nothing to reclaim")]
    EmptyLedger,
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Card(#[from] CardError),
    #[error(transparent)]
    Oram(#[from] OramError),
}

/// `sk_T`, the empty `pk_T`, the initial database and the commitment
/// parameters.
#[derive(Debug, Clone)]
pub struct TrustedSetupOutput {
    pub secret: TrustedSecret,
    pub public: (),
    pub db: EncryptedDatabase,
    pub params: CommitmentParams,
}

pub fn trusted_setup<R: RngCore + CryptoRng>(config: OramConfig, rng: &mut R) -> Result<TrustedSetupOutput, OramError> {
    let (oram_key, db) = oram::init(config, rng)?;
    let prf = PrfKey::generate(rng);
    Ok(TrustedSetupOutput { secret: TrustedSecret { oram: oram_key, prf }, public: (), db, params: CommitmentParams::standard() })
}

pub fn setup_rs_keys<R: RngCore + CryptoRng>(rng: &mut R) -> SigningKeyPair {
    SigningKeyPair::generate(rng)
}

/// Both sides of a sale.
#[derive(Debug)]
pub struct SpendOutcome {
    pub card: Result<Receipt, CardError>,
    pub vendor: Result<TransactionProof, ReceiveReject>,
}

/// One deployment wired together: provisioning secrets, the registration
/// station and the shared database.
#[derive(Debug)]
pub struct Deployment {
    secret: TrustedSecret,
    policy: Option<PeriodPolicy>,
    pub registration: RegistrationStation,
    pub server: OramServer,
}

impl Deployment {
    /// A periodic policy switches the records to the periodic layout.
    pub fn new<R: RngCore + CryptoRng>(mut config: OramConfig, policy: Option<PeriodPolicy>, rng: &mut R) -> Result<Self, StationError> {
        if policy.is_some() {
            config.layout = RecordLayout::Periodic;
        }
        let setup = trusted_setup(config, rng)?;
        let registration = RegistrationStation::new(setup_rs_keys(rng));
        Ok(Self { secret: setup.secret, policy, registration, server: OramServer::new(setup.db) })
    }

    /// A second deployment with the same keys and an empty database of
    /// its own.
    pub fn twin<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Self {
        let db = EncryptedDatabase::initialise(&self.secret.oram, rng);
        let mut registration = self.registration.clone();
        registration.reset();
        Self { secret: self.secret.clone(), policy: self.policy, registration, server: OramServer::new(db) }
    }

    pub fn rs_public(&self) -> VerificationKey {
        *self.registration.public_key()
    }

    /// The provisioning secret. Only the trusted party and card factory
    /// may hold it.
    pub fn trusted_secret(&self) -> &TrustedSecret {
        &self.secret
    }

    pub fn provision_card(&self) -> Card {
        Card::new(setup_card(&self.rs_public(), &self.secret, self.policy))
    }

    pub fn vendor(&self, name: impl Into<String>) -> Vendor {
        Vendor::new(name, self.rs_public())
    }

    pub fn register_household<R: RngCore + CryptoRng>(
        &mut self,
        budget: u16,
        cards: usize,
        rng: &mut R,
    ) -> Result<(u32, Vec<Card>), StationError> {
        let mut batch: Vec<Card> = (0..cards).map(|_| self.provision_card()).collect();
        let id = self.registration.register_household(budget, &mut batch, &mut self.server, rng)?;
        Ok((id, batch))
    }

    pub fn spend<R: RngCore + CryptoRng>(
        &mut self,
        card: &mut Card,
        vendor: &mut Vendor,
        epsilon: u32,
        price: u16,
        rng: &mut R,
    ) -> SpendOutcome {
        let mut session = vendor.receive(epsilon, price, &mut self.server);
        let card = card.spend(&mut session, price, rng);
        SpendOutcome { card, vendor: session.finish() }
    }
}
