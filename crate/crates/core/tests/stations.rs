use aidwallet::crypto::{combine, Commitment, CommitmentParams};
use aidwallet::oram::{HouseholdRecord, OramClient, OramConfig, OramServer, Variant};
use aidwallet::stations::{
    create_reclaim_proof, setup_rs_keys, trusted_setup, verify_reclaim_proof, Auditor, Deployment, LedgerEntry, ReclaimProof,
    ReclaimStation, RejectReason, StationError, TagLedger, RECLAIM_ITEM_LEN,
};
use aidwallet::token::RunningBalance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

#[test]
fn trusted_setup_initialises_empty_records() {
    let mut rng = rng(1);
    let out = trusted_setup(OramConfig::new(Variant::Naive, 8), &mut rng).unwrap();
    let client = OramClient::new(&out.secret.oram);
    let mut server = OramServer::new(out.db.clone());
    assert_eq!(client.read(&mut server, 0, &mut rng).unwrap(), HouseholdRecord::new(0, 0));
    let again = trusted_setup(OramConfig::new(Variant::Naive, 8), &mut rng).unwrap();
    assert_ne!(again.secret, out.secret);
    assert_ne!(out.params.g(), out.params.h());
    assert!(!out.params.h().is_identity());
    assert_eq!(Commitment::from_bytes(&out.params.h().to_bytes()).unwrap(), out.params.h());
}

#[test]
fn station_keys_are_fresh() {
    let mut rng = rng(2);
    let a = setup_rs_keys(&mut rng);
    let b = setup_rs_keys(&mut rng);
    assert!(a.public.verify(b"m", &a.secret.sign(b"m").unwrap().0));
    assert_ne!(a.public, b.public);
}

#[test]
fn capacity_is_enforced() {
    let mut rng = rng(3);
    let mut d = Deployment::new(OramConfig::new(Variant::Tree, 2), None, &mut rng).unwrap();
    d.register_household(1, 1, &mut rng).unwrap();
    d.register_household(1, 1, &mut rng).unwrap();
    assert_eq!(d.register_household(1, 1, &mut rng).unwrap_err(), StationError::CapacityExhausted);
    assert_eq!(d.register_household(1, 0, &mut rng).unwrap_err(), StationError::NoCards);
}

/// Runs `prices` as honest spends in one period and returns the vendor's
/// ledger entries.
fn honest_entries(d: &mut Deployment, epsilon: u32, prices: &[u16], rng: &mut ChaCha20Rng) -> Vec<LedgerEntry> {
    let (_, mut cards) = d.register_household(u16::MAX, 2, rng).unwrap();
    let mut vendor = d.vendor("v");
    for (i, &p) in prices.iter().enumerate() {
        d.spend(&mut cards[i % 2], &mut vendor, epsilon, p, rng).card.unwrap();
    }
    vendor.take_ledger(epsilon).map(|l| l.entries).unwrap_or_default()
}

#[test]
fn reclaim_of_one_and_two_entries() {
    let mut rng = rng(4);
    let mut d = Deployment::new(OramConfig::new(Variant::Recursive, 100), None, &mut rng).unwrap();
    let entries = honest_entries(&mut d, 5, &[30], &mut rng);
    let (sum, proof) = create_reclaim_proof(5, &entries).unwrap();
    assert_eq!(sum, 30);
    assert_eq!(proof.r_sum, entries[0].proof.r);

    let entries = honest_entries(&mut d, 5, &[30, 45], &mut rng);
    let (sum, proof) = create_reclaim_proof(5, &entries).unwrap();
    assert_eq!(sum, 75);
    let coms: Vec<_> = proof.items.iter().map(|i| i.com).collect();
    assert_eq!(combine(&coms).unwrap(), CommitmentParams::standard().commit(75, &proof.r_sum));
    assert_eq!(create_reclaim_proof(5, &[]).unwrap_err(), StationError::EmptyLedger);
}

#[test]
fn honest_reclaim_and_audit_accept_once() {
    let mut rng = rng(5);
    let mut d = Deployment::new(OramConfig::new(Variant::Recursive, 100), None, &mut rng).unwrap();
    let prices: Vec<u16> = (0..100).map(|_| rng.gen_range(1..200)).collect();
    let entries = honest_entries(&mut d, 9, &prices, &mut rng);
    let (sum, proof) = create_reclaim_proof(9, &entries).unwrap();
    assert_eq!(sum, prices.iter().map(|&p| u64::from(p)).sum::<u64>());

    let mut station = ReclaimStation::new(d.rs_public());
    let mut auditor = Auditor::new(d.rs_public());
    station.verify(9, sum, &proof).unwrap();
    auditor.audit(9, sum, &proof).unwrap();
    assert_eq!(station.verify(9, sum, &proof).unwrap_err(), RejectReason::AlreadyClaimed(0));
    assert_eq!(auditor.audit(9, sum, &proof).unwrap_err(), RejectReason::AlreadyClaimed(0));
    assert_eq!(station.ledger().len(), 100);
}

#[test]
fn each_failed_check_has_its_own_reason() {
    let mut rng = rng(6);
    let mut d = Deployment::new(OramConfig::new(Variant::Tree, 100), None, &mut rng).unwrap();
    let entries = honest_entries(&mut d, 3, &[10, 20, 30], &mut rng);
    let (sum, proof) = create_reclaim_proof(3, &entries).unwrap();
    let pk = d.rs_public();
    let check = |eps: u32, sum: u64, p: &ReclaimProof| verify_reclaim_proof(&pk, eps, sum, p, &mut TagLedger::new());

    let mut dup = proof.clone();
    dup.items.push(dup.items[1]);
    assert_eq!(check(3, sum, &dup), Err(RejectReason::DuplicateTag(3)));

    let mut inflated = proof.clone();
    inflated.claimed_total += 1;
    assert_eq!(check(3, sum + 1, &inflated), Err(RejectReason::CommitmentMismatch));
    assert_eq!(check(3, sum + 1, &proof), Err(RejectReason::TotalMismatch { claimed: 60, submitted: 61 }));

    let mut forged = proof.clone();
    forged.items[2].sigma.0[10] ^= 1;
    assert_eq!(check(3, sum, &forged), Err(RejectReason::BadSignature(2)));

    let mut wrong_period = proof.clone();
    wrong_period.epsilon = 4;
    assert_eq!(check(4, sum, &wrong_period), Err(RejectReason::BadSignature(0)));
    assert_eq!(check(4, sum, &proof), Err(RejectReason::PeriodMismatch { expected: 4, found: 3 }));

    let mut empty = proof.clone();
    empty.items.clear();
    assert_eq!(check(3, sum, &empty), Err(RejectReason::Empty));

    let codes: std::collections::HashSet<u8> = [
        RejectReason::Empty,
        RejectReason::PeriodMismatch { expected: 0, found: 1 },
        RejectReason::TotalMismatch { claimed: 0, submitted: 1 },
        RejectReason::BadSignature(0),
        RejectReason::DuplicateTag(0),
        RejectReason::AlreadyClaimed(0),
        RejectReason::CommitmentMismatch,
        RejectReason::MissingSignature,
        RejectReason::StaleNonce,
        RejectReason::Storage(String::new()),
    ]
    .iter()
    .map(RejectReason::code)
    .collect();
    assert_eq!(codes.len(), 10);
    assert!(check(3, sum, &proof).is_ok());
}

#[test]
fn proof_formats_round_trip_and_carry_no_prices() {
    let mut rng = rng(7);
    let mut d = Deployment::new(OramConfig::new(Variant::Naive, 10), None, &mut rng).unwrap();
    let entries = honest_entries(&mut d, 11, &[5, 6, 7], &mut rng);
    let (_, proof) = create_reclaim_proof(11, &entries).unwrap();
    let bytes = proof.to_bytes();
    assert_eq!(bytes.len(), 4 + 1 + 4 + 8 + 32 + 4 + 3 * RECLAIM_ITEM_LEN);
    assert_eq!(ReclaimProof::from_bytes(&bytes).unwrap(), proof);
    let text = proof.to_text();
    assert_eq!(ReclaimProof::from_text(&text).unwrap(), proof);
    assert_eq!(text.lines().count(), 4 + 3);
    assert!(ReclaimProof::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    assert!(ReclaimProof::from_text("aidwallet-reclaim 1\nepsilon x\n").is_err());
}

#[test]
fn tag_ledger_persists_across_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tags.bin");
    let mut rng = rng(8);
    let mut d = Deployment::new(OramConfig::new(Variant::Tree, 10), None, &mut rng).unwrap();
    let entries = honest_entries(&mut d, 1, &[5, 6], &mut rng);
    let (sum, proof) = create_reclaim_proof(1, &entries).unwrap();
    {
        let mut station = ReclaimStation::with_ledger(d.rs_public(), TagLedger::open(&path).unwrap());
        station.verify(1, sum, &proof).unwrap();
    }
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 32);
    let mut station = ReclaimStation::with_ledger(d.rs_public(), TagLedger::open(&path).unwrap());
    assert_eq!(station.verify(1, sum, &proof).unwrap_err(), RejectReason::AlreadyClaimed(0));
    std::fs::write(&path, [0u8; 17]).unwrap();
    assert!(TagLedger::open(&path).is_err());
}

#[test]
fn running_balance_reclaim() {
    let mut rng = rng(9);
    let mut d = Deployment::new(OramConfig::new(Variant::Tree, 10), None, &mut rng).unwrap();
    let (_, mut cards) = d.register_household(100, 1, &mut rng).unwrap();
    let mut vendor = d.vendor("v");
    for price in [40, 10] {
        let mut session = vendor.receive_running(2, price, &mut d.server);
        cards[0].spend_running_balance(&mut session, price, &mut rng).unwrap();
        session.finish().unwrap();
    }
    let record = vendor.running_balance(2);
    let mut station = ReclaimStation::new(d.rs_public());
    assert_eq!(station.verify_running_balance(2, &record), Ok(50));
    assert_eq!(station.verify_running_balance(2, &record), Err(RejectReason::StaleNonce));
    let mut forged = record;
    forged.balance = 500;
    assert_eq!(station.verify_running_balance(2, &forged), Err(RejectReason::BadSignature(0)));
    assert_eq!(station.verify_running_balance(2, &RunningBalance::ZERO), Err(RejectReason::MissingSignature));
}
