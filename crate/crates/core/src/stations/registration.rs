use rand::{CryptoRng, RngCore};

use super::StationError;
use crate::crypto::{SigningKeyPair, VerificationKey};
use crate::oram::OramServer;
use crate::token::{Card, STATUS_OK};
use crate::wire::{kind, Channel, ChannelError, Frame, FrameError};

/// Hands out household ids in order and delivers `sk_RS` and the budget.
#[derive(Debug, Clone)]
pub struct RegistrationStation {
    keys: SigningKeyPair,
    next_id: u32,
    period: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegistrationOutcome {
    Pending,
    Completed,
    Aborted,
}

/// The station's side of one card registration. ORAM frames from the card
/// are relayed to the database server.
pub struct RegistrationSession<'a> {
    server: &'a mut OramServer,
    id: u32,
    key_bytes: Vec<u8>,
    budget: u16,
    period: u16,
    write: bool,
    budget_sent: bool,
    outcome: RegistrationOutcome,
}

impl<'a> RegistrationSession<'a> {
    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn outcome(&self) -> RegistrationOutcome {
        self.outcome
    }

    /// Sends `bytes` in place of the signing secret.
    pub fn with_key_bytes(mut self, bytes: Vec<u8>) -> Self {
        self.key_bytes = bytes;
        self
    }

    fn handle(&mut self, request: &[u8]) -> Result<Vec<u8>, ChannelError> {
        let frame = Frame::decode(request)?;
        if kind::is_oram_request(frame.kind) {
            return Ok(self.server.serve(request));
        }
        let reply = match frame.kind {
            kind::REG_HELLO => Frame::new(kind::REG_ID, self.id.to_be_bytes().to_vec()),
            kind::REG_KEY_REQUEST => Frame::new(kind::REG_KEY, self.key_bytes.clone()),
            kind::REG_BUDGET_REQUEST => {
                self.budget_sent = true;
                let mut p = self.budget.to_be_bytes().to_vec();
                p.push(self.write as u8);
                p.extend_from_slice(&self.period.to_be_bytes());
                Frame::new(kind::REG_BUDGET, p)
            }
            kind::REG_DONE if self.budget_sent && self.outcome == RegistrationOutcome::Pending => {
                self.outcome = RegistrationOutcome::Completed;
                Frame::new(kind::REG_ACK, vec![STATUS_OK])
            }
            kind::REG_ABORT => {
                self.outcome = RegistrationOutcome::Aborted;
                Frame::new(kind::REG_ACK, vec![STATUS_OK])
            }
            other => return Err(FrameError::UnexpectedKind(other).into()),
        };
        Ok(reply.encode())
    }
}

impl Channel for RegistrationSession<'_> {
    fn exchange(&mut self, request: &[u8]) -> Result<Vec<u8>, ChannelError> {
        self.handle(request)
    }
}

impl RegistrationStation {
    pub fn new(keys: SigningKeyPair) -> Self {
        Self { keys, next_id: 0, period: 0 }
    }

    pub fn public_key(&self) -> &VerificationKey {
        &self.keys.public
    }

    pub fn next_id(&self) -> u32 {
        self.next_id
    }

    /// Forgets issued ids, for use with a fresh database.
    pub fn reset(&mut self) {
        self.next_id = 0;
    }

    /// Period stamped into fresh records when periodic top-ups are enabled.
    pub fn set_period(&mut self, period: u16) {
        self.period = period;
    }

    /// Opens a session for a new household. The id is only consumed by
    /// [`finish`](Self::finish) on a completed session.
    pub fn allocate<'a>(&self, budget: u16, server: &'a mut OramServer) -> Result<RegistrationSession<'a>, StationError> {
        if self.next_id >= server.db().config().capacity {
            return Err(StationError::CapacityExhausted);
        }
        Ok(self.session(self.next_id, budget, true, server))
    }

    /// Session for an additional card of household `id`; it skips the
    /// initial write.
    pub fn extra_card<'a>(&self, id: u32, budget: u16, server: &'a mut OramServer) -> RegistrationSession<'a> {
        self.session(id, budget, false, server)
    }

    fn session<'a>(&self, id: u32, budget: u16, write: bool, server: &'a mut OramServer) -> RegistrationSession<'a> {
        RegistrationSession {
            server,
            id,
            key_bytes: self.keys.secret.to_bytes().to_vec(),
            budget,
            period: self.period,
            write,
            budget_sent: false,
            outcome: RegistrationOutcome::Pending,
        }
    }

    /// Consumes the id of a completed first-card session.
    pub fn finish(&mut self, session: &RegistrationSession<'_>) -> Result<u32, StationError> {
        match session.outcome {
            RegistrationOutcome::Completed if session.write && session.id == self.next_id => {
                self.next_id += 1;
                Ok(session.id)
            }
            RegistrationOutcome::Completed if !session.write => Ok(session.id),
            _ => Err(StationError::RegistrationAborted),
        }
    }

    /// Registers `cards` as one household: the first card writes the
    /// initial record, the others only receive the id and key.
    pub fn register_household<R: RngCore + CryptoRng>(
        &mut self,
        budget: u16,
        cards: &mut [Card],
        server: &mut OramServer,
        rng: &mut R,
    ) -> Result<u32, StationError> {
        let (first, rest) = cards.split_first_mut().ok_or(StationError::NoCards)?;
        let mut session = self.allocate(budget, server)?;
        let result = first.request(&mut session, rng);
        let id = self.finish(&session);
        result?;
        let id = id?;
        for card in rest {
            let mut session = self.extra_card(id, budget, server);
            card.request(&mut session, rng)?;
        }
        Ok(id)
    }
}
