use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::oracles::{present_proof, CardId, MalVendorView, Offer, OracleError, OracleState, RelayView};
use crate::crypto::{CommitmentParams, Opening, Signature, SigningKeyPair, Tag, SIGNATURE_LEN, TAG_LEN};
use crate::oram::EncryptedDatabase;
use crate::stations::{create_reclaim_proof, LedgerEntry, ReclaimProof};
use crate::token::{signed_message, TransactionProof};
use crate::wire::{kind, Channel, Direction, Frame, Transcript};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    /// Overspending.
    Sec,
    /// Over-reclaiming.
    Recl,
    /// Unlinkability of purchases.
    Ind,
    /// Audit privacy.
    Audp,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [Experiment::Sec, Experiment::Recl, Experiment::Ind, Experiment::Audp];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::Sec => "sec",
            Experiment::Recl => "recl",
            Experiment::Ind => "ind",
            Experiment::Audp => "audp",
        }
    }

    /// Whether the game is won by guessing a bit rather than by producing
    /// an outcome the bookkeeping forbids.
    pub fn is_distinguishing(self) -> bool {
        matches!(self, Experiment::Ind | Experiment::Audp)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL.into_iter().find(|e| e.id() == s).ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    HonestBaseline,
    ProofReplay,
    TotalInflation,
    SignatureForgery,
    DuplicateItem,
    MitmRelay,
    DbRewind,
    TranscriptDistinguisher,
    ConcurrentHouseholdCards,
    TagDistinguisher,
    EqualSumWorlds,
    UnequalCountWorlds,
    HouseholdSwapWorlds,
}

impl Strategy {
    pub const ALL: [Strategy; 13] = [
        Strategy::HonestBaseline,
        Strategy::ProofReplay,
        Strategy::TotalInflation,
        Strategy::SignatureForgery,
        Strategy::DuplicateItem,
        Strategy::MitmRelay,
        Strategy::DbRewind,
        Strategy::TranscriptDistinguisher,
        Strategy::ConcurrentHouseholdCards,
        Strategy::TagDistinguisher,
        Strategy::EqualSumWorlds,
        Strategy::UnequalCountWorlds,
        Strategy::HouseholdSwapWorlds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::HonestBaseline => "honest-baseline",
            Strategy::ProofReplay => "proof-replay",
            Strategy::TotalInflation => "total-inflation",
            Strategy::SignatureForgery => "signature-forgery",
            Strategy::DuplicateItem => "duplicate-item",
            Strategy::MitmRelay => "mitm-relay",
            Strategy::DbRewind => "db-rewind",
            Strategy::TranscriptDistinguisher => "transcript-distinguisher",
            Strategy::ConcurrentHouseholdCards => "concurrent-household-cards",
            Strategy::TagDistinguisher => "tag-distinguisher",
            Strategy::EqualSumWorlds => "equal-sum-worlds",
            Strategy::UnequalCountWorlds => "unequal-count-worlds",
            Strategy::HouseholdSwapWorlds => "household-swap-worlds",
        }
    }

    /// The games this strategy has a script for.
    pub fn experiments(self) -> &'static [Experiment] {
        use Experiment::*;
        match self {
            Strategy::HonestBaseline => &[Sec, Recl, Ind],
            Strategy::ProofReplay => &[Sec, Recl],
            Strategy::TotalInflation => &[Recl],
            Strategy::SignatureForgery => &[Sec, Recl],
            Strategy::DuplicateItem => &[Recl],
            Strategy::MitmRelay => &[Sec],
            Strategy::DbRewind => &[Recl, Ind],
            Strategy::TranscriptDistinguisher => &[Ind],
            Strategy::ConcurrentHouseholdCards => &[Sec, Recl],
            Strategy::TagDistinguisher => &[Ind],
            Strategy::EqualSumWorlds | Strategy::UnequalCountWorlds | Strategy::HouseholdSwapWorlds => &[Audp],
        }
    }

    pub fn applies_to(self, experiment: Experiment) -> bool {
        self.experiments().contains(&experiment)
    }

    pub fn for_experiment(experiment: Experiment) -> impl Iterator<Item = Strategy> {
        Strategy::ALL.into_iter().filter(move |s| s.applies_to(experiment))
    }

    /// Whether every claim the script submits is an honest one, so the
    /// reclaim station must accept it.
    pub fn claims_honestly(self) -> bool {
        matches!(self, Strategy::HonestBaseline | Strategy::ConcurrentHouseholdCards)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

/// Oracles available in the overspending game.
pub struct SecOracles<'a>(pub(crate) &'a mut OracleState);

impl SecOracles<'_> {
    pub fn o_hreg(&mut self, bud: u16, t_nb: usize) -> Result<Vec<CardId>, OracleError> {
        self.0.o_hreg(bud, t_nb)
    }

    pub fn o_mal_user_reg<F: FnOnce(&mut dyn Channel)>(&mut self, bud: u16, script: F) -> Result<(u32, Transcript), OracleError> {
        self.0.o_mal_user_reg(bud, script)
    }

    pub fn o_spend(&mut self, epsilon: u32, t_id: CardId, price: u16) -> Result<bool, OracleError> {
        self.0.o_spend(epsilon, t_id, price)
    }

    pub fn o_spend_mal_user<F: FnOnce(&mut dyn Channel)>(&mut self, epsilon: u32, amount: u16, script: F) -> bool {
        self.0.o_spend_mal_user(epsilon, amount, script)
    }

    pub fn o_spend_mal_vendor(&mut self, epsilon: u32, t_id: CardId, amount: u16, offer: Offer) -> Result<MalVendorView, OracleError> {
        self.0.o_spend_mal_vendor(epsilon, t_id, amount, offer)
    }

    pub fn o_relay<F>(&mut self, epsilon: u32, t_id: CardId, price: u16, meddle: F) -> Result<RelayView, OracleError>
    where
        F: FnMut(Direction, &mut Vec<u8>),
    {
        self.0.o_relay(epsilon, t_id, price, meddle)
    }
}

/// Oracles available in the over-reclaim game. The adversary is the
/// vendor and so also holds the database.
pub struct ReclOracles<'a>(pub(crate) &'a mut OracleState);

impl ReclOracles<'_> {
    pub fn o_hreg(&mut self, bud: u16, t_nb: usize) -> Result<Vec<CardId>, OracleError> {
        self.0.o_hreg(bud, t_nb)
    }

    pub fn o_mal_user_reg<F: FnOnce(&mut dyn Channel)>(&mut self, bud: u16, script: F) -> Result<(u32, Transcript), OracleError> {
        self.0.o_mal_user_reg(bud, script)
    }

    pub fn o_spend_mal_vendor(&mut self, epsilon: u32, t_id: CardId, amount: u16, offer: Offer) -> Result<MalVendorView, OracleError> {
        self.0.o_spend_mal_vendor(epsilon, t_id, amount, offer)
    }

    pub fn snapshot(&self) -> EncryptedDatabase {
        self.0.snapshot()
    }

    pub fn restore(&mut self, db: EncryptedDatabase) {
        self.0.restore(db)
    }
}

/// Oracles available in the unlinkability game.
pub struct IndOracles<'a>(pub(crate) &'a mut OracleState);

impl IndOracles<'_> {
    pub fn o_cstation_reg(&mut self, chosen: &[CardId], bud: u16) -> Result<(Vec<CardId>, Transcript), OracleError> {
        self.0.o_cstation_reg(chosen, bud)
    }

    pub fn o_spend_mal_vendor(&mut self, epsilon: u32, t_id: CardId, amount: u16, offer: Offer) -> Result<MalVendorView, OracleError> {
        self.0.o_spend_mal_vendor(epsilon, t_id, amount, offer)
    }

    pub fn snapshot(&self) -> EncryptedDatabase {
        self.0.snapshot()
    }

    pub fn restore(&mut self, db: EncryptedDatabase) {
        self.0.restore(db)
    }
}

/// The two worlds of the audit-privacy game.
pub struct SplitWorlds {
    pub(crate) worlds: [OracleState; 2],
}

impl SplitWorlds {
    pub fn new(mut first: OracleState) -> Self {
        let second = first.twin();
        Self { worlds: [first, second] }
    }

    pub fn o_reg_split(&mut self, world: usize, bud: u16, t_nb: usize) -> Result<Vec<CardId>, OracleError> {
        self.worlds[world].o_hreg(bud, t_nb)
    }

    pub fn o_spend_split(&mut self, world: usize, epsilon: u32, t_id: CardId, price: u16) -> Result<bool, OracleError> {
        self.worlds[world].o_spend(epsilon, t_id, price)
    }

    pub fn world(&self, world: usize) -> &OracleState {
        &self.worlds[world]
    }
}

const EPSILON: u32 = 1;

fn offer(price: u16) -> Offer {
    Offer { price, epsilon: EPSILON }
}

fn frame_kind(bytes: &[u8]) -> Option<u8> {
    bytes.get(4).copied()
}

/// Card side of a registration by something that is not a card: it walks
/// the protocol and writes back the ciphertext it fetched, or random bytes
/// of the same length when `garbage` is set.
pub fn impostor_registration(channel: &mut dyn Channel, rng: &mut ChaCha20Rng, garbage: bool) {
    let steps = [kind::REG_HELLO, kind::REG_KEY_REQUEST, kind::REG_BUDGET_REQUEST];
    for step in steps {
        if channel.call(&Frame::empty(step)).is_err() {
            return;
        }
    }
    let fetched = match channel.call(&Frame::empty(kind::ORAM_FETCH_TOP)) {
        Ok(f) if f.kind == kind::ORAM_TOP => Some((kind::ORAM_STORE_TOP, f.payload)),
        _ => match channel.call(&Frame::empty(kind::ORAM_FETCH_DB)) {
            Ok(f) if f.kind == kind::ORAM_DB => Some((kind::ORAM_STORE_DB, f.payload)),
            _ => None,
        },
    };
    if let Some((store, mut body)) = fetched {
        if garbage {
            rng.fill(body.as_mut_slice());
        }
        let _ = channel.call(&Frame::new(store, body));
    }
    let _ = channel.call(&Frame::empty(kind::REG_DONE));
}

/// A proof for `price` whose commitment opens correctly but whose
/// signature is made up: random bytes, or a signature under a key of the
/// adversary's own.
pub fn forged_proof(price: u16, epsilon: u32, rng: &mut ChaCha20Rng, own_key: bool) -> TransactionProof {
    let mut tau = [0u8; TAG_LEN];
    rng.fill(&mut tau);
    let tau = Tag(tau);
    let r = Opening::random(rng);
    let com = CommitmentParams::standard().commit(u64::from(price), &r);
    let sigma = if own_key {
        let keys = SigningKeyPair::generate(rng);
        keys.secret.sign(&signed_message(&tau, epsilon, &com)).expect("message is non-empty")
    } else {
        let mut bytes = [0u8; SIGNATURE_LEN];
        rng.fill(&mut bytes[..]);
        Signature(bytes)
    };
    TransactionProof { sigma, tau, com, r }
}

/// Runs an overspending script and returns its target period.
pub fn sec_adversary(strategy: Strategy, o: &mut SecOracles<'_>, rng: &mut ChaCha20Rng) -> u32 {
    match strategy {
        Strategy::HonestBaseline => {
            let Ok(cards) = o.o_hreg(100, 2) else { return EPSILON };
            for i in 0..8 {
                let epsilon = if rng.gen_bool(0.75) { EPSILON } else { EPSILON + 1 };
                let _ = o.o_spend(epsilon, cards[i % 2], rng.gen_range(1..=30));
            }
        }
        Strategy::ProofReplay => {
            let Ok(cards) = o.o_hreg(100, 2) else { return EPSILON };
            let _ = o.o_spend(EPSILON, cards[1], 20);
            let price = rng.gen_range(1..=40);
            let Ok(view) = o.o_spend_mal_vendor(EPSILON, cards[0], price, offer(price)) else { return EPSILON };
            let Some(proof) = view.proof else { return EPSILON };
            let bytes = proof.to_bytes();
            for (epsilon, amount) in [(EPSILON, price), (EPSILON, price), (EPSILON, price + 1), (EPSILON + 1, price)] {
                o.o_spend_mal_user(epsilon, amount, |ch| {
                    present_proof(ch, &bytes);
                });
            }
        }
        Strategy::SignatureForgery => {
            let _ = o.o_mal_user_reg(20, |ch| impostor_registration(ch, rng, false));
            for own_key in [false, true] {
                let amount = rng.gen_range(21..=80);
                let proof = forged_proof(amount, EPSILON, rng, own_key).to_bytes();
                o.o_spend_mal_user(EPSILON, amount, |ch| {
                    present_proof(ch, &proof);
                });
            }
        }
        Strategy::MitmRelay => {
            let Ok(cards) = o.o_hreg(100, 1) else { return EPSILON };
            let card = cards[0];
            let _ = o.o_relay(EPSILON, card, 10, |_, _| {});
            let _ = o.o_relay(EPSILON, card, 10, |d, f| {
                if d == Direction::ToClient && frame_kind(f) == Some(kind::SPEND_OFFER) {
                    f[5..7].copy_from_slice(&1u16.to_be_bytes());
                }
            });
            let _ = o.o_relay(EPSILON, card, 10, |d, f| {
                if d == Direction::ToClient && frame_kind(f) == Some(kind::SPEND_OFFER) {
                    f[7..11].copy_from_slice(&(EPSILON + 1).to_be_bytes());
                }
            });
            let flip = rng.gen_range(5..5 + crate::token::PROOF_LEN);
            let _ = o.o_relay(EPSILON, card, 10, |d, f| {
                if d == Direction::ToServer && frame_kind(f) == Some(kind::SPEND_PROOF) {
                    f[flip] ^= 1;
                }
            });
            let _ = o.o_relay(EPSILON, card, 10, |d, f| {
                if d == Direction::ToClient && frame_kind(f) == Some(kind::SPEND_RESULT) {
                    f[5] ^= 0x80;
                }
            });
            let _ = o.o_relay(EPSILON, card, 10, |d, f| {
                let oram_reply = frame_kind(f).is_some_and(|k| matches!(k, kind::ORAM_DB | kind::ORAM_TOP | kind::ORAM_PATH));
                if d == Direction::ToClient && oram_reply {
                    let last = f.len() - 1;
                    f[last] ^= 1;
                }
            });
            let _ = o.o_relay(EPSILON, card, 10, |_, _| {});
        }
        Strategy::ConcurrentHouseholdCards => {
            let Ok(cards) = o.o_hreg(100, 3) else { return EPSILON };
            for step in 0..30 {
                let card = cards[step % cards.len()];
                let price = rng.gen_range(1..=25);
                if step % 2 == 0 {
                    let _ = o.o_spend(EPSILON, card, price);
                } else {
                    let _ = o.o_spend_mal_vendor(EPSILON, card, price, offer(price));
                }
            }
        }
        other => unreachable!("{other} has no overspending script"),
    }
    EPSILON
}

/// The adversary's output in the over-reclaim game.
#[derive(Debug, Clone)]
pub struct ReclaimClaim {
    pub epsilon: u32,
    pub spent_sum: u64,
    pub proof: ReclaimProof,
}

fn harvest(o: &mut ReclOracles<'_>, card: CardId, prices: &[u16]) -> Vec<LedgerEntry> {
    prices
        .iter()
        .filter_map(|&price| {
            let view = o.o_spend_mal_vendor(EPSILON, card, price, offer(price)).ok()?;
            view.card.ok()?;
            Some(LedgerEntry { price, proof: view.proof? })
        })
        .collect()
}

fn random_prices(rng: &mut ChaCha20Rng, n: usize, max: u16) -> Vec<u16> {
    (0..n).map(|_| rng.gen_range(1..=max)).collect()
}

fn claim(epsilon: u32, entries: &[LedgerEntry]) -> Option<ReclaimClaim> {
    let (spent_sum, proof) = create_reclaim_proof(epsilon, entries).ok()?;
    Some(ReclaimClaim { epsilon, spent_sum, proof })
}

/// Runs an over-reclaim script. `None` means the script gave up without a
/// claim.
pub fn recl_adversary(strategy: Strategy, o: &mut ReclOracles<'_>, rng: &mut ChaCha20Rng) -> Option<ReclaimClaim> {
    match strategy {
        Strategy::HonestBaseline => {
            let cards = o.o_hreg(100, 2).ok()?;
            let mut entries = harvest(o, cards[0], &random_prices(rng, 2, 30));
            entries.extend(harvest(o, cards[1], &random_prices(rng, 2, 20)));
            claim(EPSILON, &entries)
        }
        Strategy::TotalInflation => {
            let cards = o.o_hreg(100, 2).ok()?;
            let entries = harvest(o, cards[0], &random_prices(rng, 3, 30));
            let mut c = claim(EPSILON, &entries)?;
            c.spent_sum += rng.gen_range(1..=10);
            c.proof.claimed_total = c.spent_sum;
            Some(c)
        }
        Strategy::DuplicateItem => {
            let cards = o.o_hreg(100, 2).ok()?;
            let mut entries = harvest(o, cards[0], &random_prices(rng, 3, 30));
            let pick = rng.gen_range(0..entries.len());
            entries.push(entries[pick]);
            claim(EPSILON, &entries)
        }
        Strategy::SignatureForgery => {
            let cards = o.o_hreg(100, 1).ok()?;
            let mut entries = harvest(o, cards[0], &random_prices(rng, 2, 30));
            let price = rng.gen_range(1..=50);
            let own_key = rng.gen_bool(0.5);
            entries.push(LedgerEntry { price, proof: forged_proof(price, EPSILON, rng, own_key) });
            claim(EPSILON, &entries)
        }
        Strategy::ProofReplay => {
            let cards = o.o_hreg(100, 1).ok()?;
            let entries = harvest(o, cards[0], &random_prices(rng, 3, 30));
            claim(EPSILON + 1, &entries)
        }
        Strategy::DbRewind => {
            let cards = o.o_hreg(100, 2).ok()?;
            let before = o.snapshot();
            let mut entries = harvest(o, cards[0], &[100]);
            o.restore(before);
            entries.extend(harvest(o, cards[1], &[100]));
            claim(EPSILON, &entries)
        }
        Strategy::ConcurrentHouseholdCards => {
            let cards = o.o_hreg(100, 3).ok()?;
            let mut entries = Vec::new();
            for step in 0..20 {
                let price = rng.gen_range(1..=25);
                entries.extend(harvest(o, cards[step % cards.len()], &[price]));
            }
            claim(EPSILON, &entries)
        }
        other => unreachable!("{other} has no over-reclaim script"),
    }
}

/// The challenge the unlinkability adversary asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndChallenge {
    pub t_id0: CardId,
    pub t_id1: CardId,
    pub price: u16,
    pub epsilon: u32,
}

/// A scripted unlinkability adversary, driven phase by phase by the
/// challenger.
pub struct IndAdversary {
    strategy: Strategy,
    rng: ChaCha20Rng,
    references: Vec<MalVendorView>,
    challenges: Vec<MalVendorView>,
    snapshot: Option<EncryptedDatabase>,
}

const IND_A: [CardId; 2] = [1, 2];
const IND_B: [CardId; 2] = [3, 4];

impl IndAdversary {
    pub fn new(strategy: Strategy, rng: ChaCha20Rng) -> Self {
        assert!(strategy.applies_to(Experiment::Ind), "{strategy} has no unlinkability script");
        Self { strategy, rng, references: Vec::new(), challenges: Vec::new(), snapshot: None }
    }

    /// Registers two households of two cards each and names the
    /// challenge.
    pub fn choose(&mut self, o: &mut IndOracles<'_>) -> Option<IndChallenge> {
        o.o_cstation_reg(&IND_A, 100).ok()?;
        o.o_cstation_reg(&IND_B, 100).ok()?;
        let price = match self.strategy {
            Strategy::DbRewind => 100,
            _ => {
                for t_id in [IND_A[1], IND_B[1]] {
                    self.references.push(o.o_spend_mal_vendor(EPSILON, t_id, 10, offer(10)).ok()?);
                }
                30
            }
        };
        Some(IndChallenge { t_id0: IND_A[0], t_id1: IND_B[0], price, epsilon: EPSILON })
    }

    pub fn observe(&mut self, view: &MalVendorView) {
        self.challenges.push(view.clone());
    }

    pub fn between(&mut self, o: &mut IndOracles<'_>) {
        if self.strategy == Strategy::DbRewind {
            self.snapshot = Some(o.snapshot());
        }
    }

    /// Returns the guess for `b`, where `b = 0` means household A spent
    /// first.
    pub fn guess(&mut self, o: &mut IndOracles<'_>) -> u8 {
        match self.strategy {
            Strategy::HonestBaseline => self.rng.gen_range(0..=1),
            Strategy::TranscriptDistinguisher => {
                let score = |t: &Transcript| {
                    let a = overlap(t, &self.references[0].transcript) as i64;
                    let b = overlap(t, &self.references[1].transcript) as i64;
                    a - b
                };
                let first = score(&self.challenges[0].transcript);
                let second = score(&self.challenges[1].transcript);
                match first.cmp(&second) {
                    std::cmp::Ordering::Greater => 0,
                    std::cmp::Ordering::Less => 1,
                    std::cmp::Ordering::Equal => self.rng.gen_range(0..=1),
                }
            }
            Strategy::TagDistinguisher => {
                let tag = |v: &MalVendorView| v.proof.map(|p| p.tau.0).unwrap_or_default();
                let distance =
                    |x: [u8; TAG_LEN], y: [u8; TAG_LEN]| -> u32 { x.iter().zip(y.iter()).map(|(a, b)| (a ^ b).count_ones()).sum() };
                let (ra, rb) = (tag(&self.references[0]), tag(&self.references[1]));
                let first = tag(&self.challenges[0]);
                let da = distance(first, ra);
                let db = distance(first, rb);
                match da.cmp(&db) {
                    std::cmp::Ordering::Less => 0,
                    std::cmp::Ordering::Greater => 1,
                    std::cmp::Ordering::Equal => self.rng.gen_range(0..=1),
                }
            }
            Strategy::DbRewind => {
                let Some(snapshot) = self.snapshot.take() else { return 0 };
                o.restore(snapshot);
                for t_id in [IND_A[0], IND_B[0]] {
                    let _ = o.o_spend_mal_vendor(EPSILON, t_id, 1, offer(1));
                }
                match o.o_spend_mal_vendor(EPSILON, IND_A[1], 100, offer(100)) {
                    Ok(view) if view.card.is_ok() => 1,
                    _ => 0,
                }
            }
            other => unreachable!("{other} has no unlinkability script"),
        }
    }
}

/// Number of identical client-to-server frames in two transcripts.
fn overlap(a: &Transcript, b: &Transcript) -> usize {
    let requests =
        |t: &Transcript| -> Vec<Vec<u8>> { t.frames.iter().filter(|(d, _)| *d == Direction::ToServer).map(|(_, f)| f.clone()).collect() };
    let theirs = requests(b);
    requests(a).iter().filter(|f| theirs.contains(f)).count()
}

/// Fills both worlds and returns the challenge period.
pub fn audp_plan(strategy: Strategy, worlds: &mut SplitWorlds, rng: &mut ChaCha20Rng) -> u32 {
    let spend_all = |worlds: &mut SplitWorlds, world: usize, prices: &[u16]| {
        if let Ok(cards) = worlds.o_reg_split(world, 100, 2) {
            for (i, &p) in prices.iter().enumerate() {
                let _ = worlds.o_spend_split(world, EPSILON, cards[i % 2], p);
            }
        }
    };
    match strategy {
        Strategy::EqualSumWorlds => {
            spend_all(worlds, 0, &[30, 45]);
            spend_all(worlds, 1, &[40, 35]);
        }
        Strategy::UnequalCountWorlds => {
            spend_all(worlds, 0, &[30, 45]);
            spend_all(worlds, 1, &[75]);
        }
        Strategy::HouseholdSwapWorlds => {
            let price = rng.gen_range(1..=100);
            for world in 0..2 {
                let (Ok(x), Ok(y)) = (worlds.o_reg_split(world, 100, 1), worlds.o_reg_split(world, 100, 1)) else {
                    continue;
                };
                let spender = if world == 0 { x[0] } else { y[0] };
                let _ = worlds.o_spend_split(world, EPSILON, spender, price);
            }
        }
        other => unreachable!("{other} has no audit-privacy plan"),
    }
    EPSILON
}

/// Guesses which world produced `proof`.
pub fn audp_guess(strategy: Strategy, proof: &ReclaimProof, rng: &mut ChaCha20Rng) -> u8 {
    match strategy {
        Strategy::EqualSumWorlds | Strategy::UnequalCountWorlds => match proof.items.as_slice() {
            [a, b, ..] => u8::from(a.com.to_bytes() > b.com.to_bytes()),
            _ => rng.gen_range(0..=1),
        },
        Strategy::HouseholdSwapWorlds => proof.items.first().map_or(0, |i| i.tau.0[0] & 1),
        other => unreachable!("{other} has no audit-privacy guess"),
    }
}
