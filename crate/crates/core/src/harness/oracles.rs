use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::crypto::VerificationKey;
use crate::oram::{EncryptedDatabase, OramConfig, OramServer};
use crate::stations::{Deployment, ReceiveReject, StationError, Vendor};
use crate::token::{Card, CardError, PeriodPolicy, Receipt, TransactionProof, STATUS_OK};
use crate::wire::{kind, AuthenticatedRelay, Channel, ChannelError, Direction, Frame, FrameError, Recorder, Transcript};

/// Oracle-side card identifier, distinct from household ids.
pub type CardId = u32;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("no card with id {0}")]
    UnknownCard(CardId),
    #[error("card {0} belongs to a challenge household")]
    Restricted(CardId),
    #[error(transparent)]
    Station(#[from] StationError),
}

/// What a vendor announces to the card.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Offer {
    pub price: u16,
    pub epsilon: u32,
}

/// A vendor played by the adversary: it answers with a chosen offer,
/// relays ORAM traffic to the database and keeps the proof it is sent.
pub struct ScriptedVendor<'a> {
    server: &'a mut OramServer,
    offer: Offer,
    proof: Option<Vec<u8>>,
}

impl<'a> ScriptedVendor<'a> {
    pub fn new(server: &'a mut OramServer, offer: Offer) -> Self {
        Self { server, offer, proof: None }
    }

    pub fn proof(&self) -> Option<TransactionProof> {
        self.proof.as_deref().and_then(TransactionProof::from_bytes)
    }
}

impl Channel for ScriptedVendor<'_> {
    fn exchange(&mut self, request: &[u8]) -> Result<Vec<u8>, ChannelError> {
        let frame = Frame::decode(request)?;
        if kind::is_oram_request(frame.kind) {
            return Ok(self.server.serve(request));
        }
        let reply = match frame.kind {
            kind::SPEND_HELLO => {
                let mut p = self.offer.price.to_be_bytes().to_vec();
                p.extend_from_slice(&self.offer.epsilon.to_be_bytes());
                Frame::new(kind::SPEND_OFFER, p)
            }
            kind::SPEND_PROOF => {
                self.proof = Some(frame.payload);
                Frame::new(kind::SPEND_RESULT, vec![STATUS_OK])
            }
            other => return Err(FrameError::UnexpectedKind(other).into()),
        };
        Ok(reply.encode())
    }
}

/// Everything a malicious vendor sees of one sale.
#[derive(Debug, Clone)]
pub struct MalVendorView {
    pub card: Result<Receipt, CardError>,
    pub proof: Option<TransactionProof>,
    pub transcript: Transcript,
}

/// Everything the party in the middle sees of a relayed sale.
#[derive(Debug, Clone)]
pub struct RelayView {
    pub card: Result<Receipt, CardError>,
    pub vendor: Result<TransactionProof, ReceiveReject>,
    pub tampered: bool,
    pub transcript: Transcript,
}

/// Game state shared by the oracles: budgets, card states, honest and
/// malicious sets, and the received and spent multisets per period.
#[derive(Debug)]
pub struct OracleState {
    deployment: Deployment,
    vendor: Vendor,
    bud: BTreeMap<u32, u16>,
    cards: BTreeMap<CardId, Card>,
    honest_cards: BTreeSet<CardId>,
    malicious: BTreeSet<u32>,
    received: BTreeMap<u32, Vec<u16>>,
    spent: BTreeMap<u32, Vec<u16>>,
    mal_user_accepted: BTreeMap<u32, Vec<u16>>,
    counter: CardId,
    restricted: BTreeSet<u32>,
    rng: ChaCha20Rng,
}

impl OracleState {
    pub fn new(config: OramConfig, policy: Option<PeriodPolicy>, mut rng: ChaCha20Rng) -> Result<Self, StationError> {
        let deployment = Deployment::new(config, policy, &mut rng)?;
        Ok(Self::around(deployment, rng))
    }

    fn around(deployment: Deployment, rng: ChaCha20Rng) -> Self {
        let vendor = deployment.vendor("honest");
        Self {
            deployment,
            vendor,
            bud: BTreeMap::new(),
            cards: BTreeMap::new(),
            honest_cards: BTreeSet::new(),
            malicious: BTreeSet::new(),
            received: BTreeMap::new(),
            spent: BTreeMap::new(),
            mal_user_accepted: BTreeMap::new(),
            counter: 0,
            restricted: BTreeSet::new(),
            rng,
        }
    }

    /// A second world with the same keys, an empty database and empty
    /// bookkeeping.
    pub fn twin(&mut self) -> Self {
        let mut rng = ChaCha20Rng::from_rng(&mut self.rng).expect("chacha never fails");
        let deployment = self.deployment.twin(&mut rng);
        Self::around(deployment, rng)
    }

    pub fn rs_public(&self) -> VerificationKey {
        self.deployment.rs_public()
    }

    pub fn bud(&self) -> &BTreeMap<u32, u16> {
        &self.bud
    }

    pub fn honest_cards(&self) -> &BTreeSet<CardId> {
        &self.honest_cards
    }

    pub fn malicious(&self) -> &BTreeSet<u32> {
        &self.malicious
    }

    pub fn card(&self, t_id: CardId) -> Option<&Card> {
        self.cards.get(&t_id)
    }

    pub fn household_of(&self, t_id: CardId) -> Option<u32> {
        self.cards.get(&t_id).and_then(Card::household)
    }

    /// Card ids whose state belongs to `household`.
    pub fn cards_of(&self, household: u32) -> Vec<CardId> {
        self.cards.iter().filter(|(_, c)| c.household() == Some(household)).map(|(&t, _)| t).collect()
    }

    pub fn vendor(&self) -> &Vendor {
        &self.vendor
    }

    pub fn received(&self, epsilon: u32) -> &[u16] {
        self.received.get(&epsilon).map_or(&[], Vec::as_slice)
    }

    pub fn spent(&self, epsilon: u32) -> &[u16] {
        self.spent.get(&epsilon).map_or(&[], Vec::as_slice)
    }

    /// Amounts the honest vendor accepted from adversary-played cards.
    pub fn mal_user_accepted(&self, epsilon: u32) -> &[u16] {
        self.mal_user_accepted.get(&epsilon).map_or(&[], Vec::as_slice)
    }

    pub fn spent_seen(&self, epsilon: u32) -> u64 {
        self.received(epsilon).iter().map(|&p| u64::from(p)).sum()
    }

    pub fn spent_max(&self, epsilon: u32) -> u64 {
        let honest: u64 = self.spent(epsilon).iter().map(|&p| u64::from(p)).sum();
        let malicious: u64 = self.malicious.iter().map(|id| u64::from(self.bud[id])).sum();
        honest + malicious
    }

    pub fn snapshot(&self) -> EncryptedDatabase {
        self.deployment.server.db().clone()
    }

    pub fn restore(&mut self, db: EncryptedDatabase) {
        self.deployment.server.replace_db(db);
    }

    /// Blocks adversary-driven spends with any card of `households`.
    pub fn restrict(&mut self, households: impl IntoIterator<Item = u32>) {
        self.restricted.extend(households);
    }

    pub fn lift_restrictions(&mut self) {
        self.restricted.clear();
    }

    fn card_mut(&mut self, t_id: CardId) -> Result<&mut Card, OracleError> {
        let card = self.cards.get_mut(&t_id).ok_or(OracleError::UnknownCard(t_id))?;
        if card.household().is_some_and(|h| self.restricted.contains(&h)) {
            return Err(OracleError::Restricted(t_id));
        }
        Ok(card)
    }

    fn next_card_id(&mut self) -> CardId {
        self.counter += 1;
        self.counter
    }

    /// Honest household with `t_nb` cards.
    pub fn o_hreg(&mut self, bud: u16, t_nb: usize) -> Result<Vec<CardId>, OracleError> {
        let (id, cards) = self.deployment.register_household(bud, t_nb, &mut self.rng)?;
        self.bud.insert(id, bud);
        let mut ids = Vec::with_capacity(cards.len());
        for card in cards {
            let t_id = self.next_card_id();
            self.cards.insert(t_id, card);
            self.honest_cards.insert(t_id);
            ids.push(t_id);
        }
        Ok(ids)
    }

    /// Registration where `script` plays the card. The station withholds
    /// the signing secret: only a genuine card may receive it.
    pub fn o_mal_user_reg<F>(&mut self, bud: u16, script: F) -> Result<(u32, Transcript), OracleError>
    where
        F: FnOnce(&mut dyn Channel),
    {
        let session = self.deployment.registration.allocate(bud, &mut self.deployment.server)?;
        let mut recorder = Recorder::new(session.with_key_bytes(Vec::new()));
        script(&mut recorder);
        let (session, transcript) = recorder.into_parts();
        let id = self.deployment.registration.finish(&session)?;
        self.malicious.insert(id);
        self.bud.insert(id, bud);
        Ok((id, transcript))
    }

    /// Honest registration watched by a curious station. Each unused id in
    /// `chosen` receives a copy of the new card.
    pub fn o_cstation_reg(&mut self, chosen: &[CardId], bud: u16) -> Result<(Vec<CardId>, Transcript), OracleError> {
        let mut card = self.deployment.provision_card();
        let session = self.deployment.registration.allocate(bud, &mut self.deployment.server)?;
        let mut recorder = Recorder::new(session);
        let result = card.request(&mut recorder, &mut self.rng);
        let (session, transcript) = recorder.into_parts();
        let id = self.deployment.registration.finish(&session);
        result.map_err(StationError::from)?;
        let id = id?;
        self.bud.insert(id, bud);
        let mut fresh = Vec::new();
        for &t_id in chosen {
            if self.honest_cards.insert(t_id) {
                self.cards.insert(t_id, card.clone());
                self.counter = self.counter.max(t_id);
                fresh.push(t_id);
            }
        }
        Ok((fresh, transcript))
    }

    /// Honest card, honest vendor.
    pub fn o_spend(&mut self, epsilon: u32, t_id: CardId, price: u16) -> Result<bool, OracleError> {
        let card = self.cards.get_mut(&t_id).ok_or(OracleError::UnknownCard(t_id))?;
        if card.household().is_some_and(|h| self.restricted.contains(&h)) {
            return Err(OracleError::Restricted(t_id));
        }
        let outcome = self.deployment.spend(card, &mut self.vendor, epsilon, price, &mut self.rng);
        if outcome.card.is_ok() {
            self.spent.entry(epsilon).or_default().push(price);
        }
        if outcome.vendor.is_ok() {
            self.received.entry(epsilon).or_default().push(price);
        }
        Ok(outcome.card.is_ok())
    }

    /// `script` plays the card against the honest vendor.
    pub fn o_spend_mal_user<F>(&mut self, epsilon: u32, amount: u16, script: F) -> bool
    where
        F: FnOnce(&mut dyn Channel),
    {
        let mut session = self.vendor.receive(epsilon, amount, &mut self.deployment.server);
        script(&mut session);
        let accepted = session.finish().is_ok();
        if accepted {
            self.received.entry(epsilon).or_default().push(amount);
            self.mal_user_accepted.entry(epsilon).or_default().push(amount);
        }
        accepted
    }

    /// The adversary plays the vendor and announces `offer`; the user
    /// confirms `amount`. Counted as spent only if the card reports exactly
    /// `amount` in period `epsilon`.
    pub fn o_spend_mal_vendor(&mut self, epsilon: u32, t_id: CardId, amount: u16, offer: Offer) -> Result<MalVendorView, OracleError> {
        self.card_mut(t_id)?;
        Ok(self.mal_vendor_spend(epsilon, t_id, amount, offer))
    }

    /// A challenge spend, exempt from the restriction.
    pub(crate) fn challenge_spend(&mut self, t_id: CardId, offer: Offer) -> Result<MalVendorView, OracleError> {
        if !self.cards.contains_key(&t_id) {
            return Err(OracleError::UnknownCard(t_id));
        }
        Ok(self.mal_vendor_spend(offer.epsilon, t_id, offer.price, offer))
    }

    fn mal_vendor_spend(&mut self, epsilon: u32, t_id: CardId, amount: u16, offer: Offer) -> MalVendorView {
        let card = self.cards.get_mut(&t_id).expect("checked by caller");
        let mut recorder = Recorder::new(ScriptedVendor::new(&mut self.deployment.server, offer));
        let result = card.spend(&mut recorder, amount, &mut self.rng);
        let (vendor, transcript) = recorder.into_parts();
        let proof = vendor.proof();
        if let Ok(r) = &result {
            if r.price == amount && r.epsilon == epsilon {
                self.spent.entry(epsilon).or_default().push(amount);
            }
        }
        MalVendorView { card: result, proof, transcript }
    }

    /// An honest card and the honest vendor talk through the adversary,
    /// who may rewrite frames with `meddle`. Booked as a malicious-vendor
    /// spend on the card side and a malicious-user spend on the vendor side.
    pub fn o_relay<F>(&mut self, epsilon: u32, t_id: CardId, price: u16, meddle: F) -> Result<RelayView, OracleError>
    where
        F: FnMut(Direction, &mut Vec<u8>),
    {
        self.card_mut(t_id)?;
        let card = self.cards.get_mut(&t_id).expect("checked above");
        let mut session = self.vendor.receive(epsilon, price, &mut self.deployment.server);
        let mut relay = AuthenticatedRelay::new(&mut session, meddle);
        let result = card.spend(&mut relay, price, &mut self.rng);
        let tampered = relay.tampered();
        let (_, transcript) = relay.into_parts();
        let vendor = session.finish();
        if let Ok(r) = &result {
            if r.price == price && r.epsilon == epsilon {
                self.spent.entry(epsilon).or_default().push(price);
            }
        }
        if vendor.is_ok() {
            self.received.entry(epsilon).or_default().push(price);
            self.mal_user_accepted.entry(epsilon).or_default().push(price);
        }
        Ok(RelayView { card: result, vendor, tampered, transcript })
    }
}

/// Card side of a sale driven by hand: asks for the offer and hands over
/// `proof`. Returns whether the vendor answered OK.
pub fn present_proof(channel: &mut dyn Channel, proof: &[u8]) -> bool {
    if channel.call(&Frame::empty(kind::SPEND_HELLO)).map(|f| f.kind) != Ok(kind::SPEND_OFFER) {
        return false;
    }
    matches!(
        channel.call(&Frame::new(kind::SPEND_PROOF, proof.to_vec())),
        Ok(reply) if reply.kind == kind::SPEND_RESULT && reply.payload == [STATUS_OK]
    )
}
