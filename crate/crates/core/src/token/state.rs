use std::path::Path;

use super::period::PeriodPolicy;
use super::CardError;
use crate::crypto::{AeKey, PrfKey, SigningSecret, VerificationKey, PRF_KEY_LEN, VERIFICATION_KEY_LEN};
use crate::oram::{OramConfig, OramKey, CONFIG_LEN};

/// The trusted party's secret `sk_T`: ORAM key and PRF key, identical on
/// every card of a deployment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrustedSecret {
    pub oram: OramKey,
    pub prf: PrfKey,
}

/// Everything a card keeps across sessions.
#[derive(Debug, Clone)]
pub struct CardState {
    pub(crate) rs_public: VerificationKey,
    pub(crate) rs_secret: Option<SigningSecret>,
    pub(crate) oram_key: OramKey,
    pub(crate) prf_key: PrfKey,
    pub(crate) household: Option<u32>,
    pub(crate) last_ctr_written: Option<u16>,
    pub(crate) violation: bool,
    pub(crate) retired: bool,
    pub(crate) period_policy: Option<PeriodPolicy>,
}

/// Provisioning by the trusted party: stores `pk_RS` and `sk_T`. The card has
/// no household yet.
pub fn setup_card(rs_public: &VerificationKey, trusted: &TrustedSecret, period_policy: Option<PeriodPolicy>) -> CardState {
    CardState {
        rs_public: *rs_public,
        rs_secret: None,
        oram_key: trusted.oram.clone(),
        prf_key: trusted.prf.clone(),
        household: None,
        last_ctr_written: None,
        violation: false,
        retired: false,
        period_policy,
    }
}

pub const CARD_STATE_VERSION: u8 = 1;
const MAGIC: [u8; 4] = *b"AWCS";
/// Encoded length of a card state file.
pub const CARD_STATE_LEN: usize = 4 + 1 + VERIFICATION_KEY_LEN + 33 + 32 + CONFIG_LEN + PRF_KEY_LEN + 5 + 3 + 1 + 1 + 3;

impl CardState {
    pub fn rs_public(&self) -> &VerificationKey {
        &self.rs_public
    }

    pub fn household(&self) -> Option<u32> {
        self.household
    }

    pub fn last_ctr_written(&self) -> Option<u16> {
        self.last_ctr_written
    }

    pub fn violation(&self) -> bool {
        self.violation
    }

    pub fn retired(&self) -> bool {
        self.retired
    }

    pub fn period_policy(&self) -> Option<PeriodPolicy> {
        self.period_policy
    }

    pub fn oram_config(&self) -> &OramConfig {
        self.oram_key.config()
    }

    /// Compares a freshly read counter with the watermark. A counter below
    /// the watermark latches the violation flag.
    pub fn detect_rollback(&mut self, observed_ctr: u16) -> Result<(), CardError> {
        match self.last_ctr_written {
            Some(watermark) if observed_ctr < watermark => {
                self.violation = true;
                Err(CardError::RollbackDetected { observed: observed_ctr, watermark })
            }
            _ => Ok(()),
        }
    }

    /// Fields in declaration order; optional fields carry a presence byte
    /// and are zero-filled when absent.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(CARD_STATE_LEN);
        out.extend_from_slice(&MAGIC);
        out.push(CARD_STATE_VERSION);
        out.extend_from_slice(&self.rs_public.to_bytes());
        match &self.rs_secret {
            Some(s) => {
                out.push(1);
                out.extend_from_slice(&s.to_bytes());
            }
            None => out.extend_from_slice(&[0; 33]),
        }
        out.extend_from_slice(&self.oram_key.ae_key().to_bytes());
        out.extend_from_slice(&self.oram_key.config().to_bytes());
        out.extend_from_slice(&self.prf_key.to_bytes());
        out.push(self.household.is_some() as u8);
        out.extend_from_slice(&self.household.unwrap_or(0).to_be_bytes());
        out.push(self.last_ctr_written.is_some() as u8);
        out.extend_from_slice(&self.last_ctr_written.unwrap_or(0).to_be_bytes());
        out.push(self.violation as u8);
        out.push(self.retired as u8);
        out.extend_from_slice(&PeriodPolicy::encode(self.period_policy));
        debug_assert_eq!(out.len(), CARD_STATE_LEN);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CardError> {
        let bad = |what: &str| CardError::Persist(format!("malformed card state: {what}"));
        if bytes.len() != CARD_STATE_LEN {
            return Err(bad("length"));
        }
        if bytes[..4] != MAGIC {
            return Err(bad("magic"));
        }
        if bytes[4] != CARD_STATE_VERSION {
            return Err(CardError::Persist(format!("unsupported card state version {}", bytes[4])));
        }
        let mut at = 5;
        let mut take = |n: usize| {
            let s = &bytes[at..at + n];
            at += n;
            s
        };
        let rs_public = VerificationKey::from_bytes(take(VERIFICATION_KEY_LEN)).map_err(|_| bad("rs_public"))?;
        let flag_secret = take(1)[0];
        let secret_bytes = take(32);
        let rs_secret = match flag_secret {
            0 => None,
            1 => Some(SigningSecret::from_bytes(secret_bytes).map_err(|_| bad("rs_secret"))?),
            _ => return Err(bad("rs_secret flag")),
        };
        let ae = AeKey::from_bytes(take(32).try_into().unwrap());
        let config = OramConfig::from_bytes(take(CONFIG_LEN).try_into().unwrap()).map_err(|_| bad("oram config"))?;
        let prf_key = PrfKey::from_bytes(take(PRF_KEY_LEN).try_into().unwrap());
        let flag = take(1)[0];
        let id = u32::from_be_bytes(take(4).try_into().unwrap());
        let household = (flag == 1).then_some(id);
        let flag = take(1)[0];
        let ctr = u16::from_be_bytes(take(2).try_into().unwrap());
        let last_ctr_written = (flag == 1).then_some(ctr);
        let violation = take(1)[0] != 0;
        let retired = take(1)[0] != 0;
        let period_policy = PeriodPolicy::decode(take(3).try_into().unwrap()).map_err(|_| bad("period policy"))?;
        if rs_secret.is_some() != household.is_some() {
            return Err(bad("secret and household must be present together"));
        }
        Ok(Self {
            rs_public,
            rs_secret,
            oram_key: OramKey::new(ae, config),
            prf_key,
            household,
            last_ctr_written,
            violation,
            retired,
            period_policy,
        })
    }

    /// Writes to a sibling temporary file and renames it over `path`.
    pub fn store(&self, path: &Path) -> Result<(), CardError> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes()).and_then(|_| std::fs::rename(&tmp, path)).map_err(|e| CardError::Persist(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CardError> {
        let bytes = std::fs::read(path).map_err(|e| CardError::Persist(e.to_string()))?;
        Self::from_bytes(&bytes)
    }
}
