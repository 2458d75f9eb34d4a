use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::scenario::{Action, CardRef, Scenario};
use crate::oram::{EncryptedDatabase, HouseholdRecord, OramClient};
use crate::stations::{create_reclaim_proof, Auditor, Deployment, ReclaimProof, ReclaimStation, StationError, Vendor};
use crate::token::Card;

/// One executed action and what came of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub action: Action,
    pub outcome: Result<String, String>,
}

/// The auditor's verdict on everything forwarded for one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditOutcome {
    pub epsilon: u32,
    pub proofs: usize,
    pub total: u64,
    pub rejected: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    pub events: Vec<Event>,
    pub halted: bool,
    /// Final records, read with the trusted key.
    pub balances: BTreeMap<u32, HouseholdRecord>,
    pub violations: Vec<CardRef>,
    /// Accepted reclaim totals per vendor and period.
    pub reclaimed: BTreeMap<(String, u32), u64>,
    /// Takings still held by vendors per vendor and period.
    pub unreclaimed: BTreeMap<(String, u32), u64>,
    pub audits: Vec<AuditOutcome>,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.events.iter().filter(|e| e.outcome.is_err()).count()
    }

    /// Plain-text log: one line per action, then the final ledgers.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, event) in self.events.iter().enumerate() {
            let outcome = match &event.outcome {
                Ok(detail) if detail.is_empty() => "ok".to_owned(),
                Ok(detail) => format!("ok {detail}"),
                Err(reason) => format!("fail: {reason}"),
            };
            let _ = writeln!(out, "{i:04} {} -> {outcome}", event.action);
        }
        if self.halted {
            out.push_str("halted\n");
        }
        for (id, rec) in &self.balances {
            let _ = writeln!(out, "balance {id} {} ctr {} period {}", rec.balance, rec.ctr, rec.last_period);
        }
        for card in &self.violations {
            let _ = writeln!(out, "violation {card}");
        }
        for ((vendor, epsilon), total) in &self.reclaimed {
            let _ = writeln!(out, "reclaimed {vendor} {epsilon} {total}");
        }
        for ((vendor, epsilon), total) in &self.unreclaimed {
            let _ = writeln!(out, "unreclaimed {vendor} {epsilon} {total}");
        }
        out
    }
}

/// Executes a [`Scenario`] against one deployment.
pub struct Engine {
    deployment: Deployment,
    households: Vec<Vec<Card>>,
    vendors: BTreeMap<String, Vendor>,
    reclaim: ReclaimStation,
    auditor: Auditor,
    forwarded: Vec<(u32, u64, ReclaimProof)>,
    snapshots: HashMap<String, EncryptedDatabase>,
    rng: ChaCha20Rng,
    report: Report,
}

impl Engine {
    pub fn new(scenario: &Scenario) -> Result<Self, StationError> {
        let mut rng = ChaCha20Rng::seed_from_u64(scenario.seed);
        let deployment = Deployment::new(scenario.oram, scenario.policy, &mut rng)?;
        let rs_public = deployment.rs_public();
        Ok(Self {
            deployment,
            households: Vec::new(),
            vendors: BTreeMap::new(),
            reclaim: ReclaimStation::new(rs_public),
            auditor: Auditor::new(rs_public),
            forwarded: Vec::new(),
            snapshots: HashMap::new(),
            rng,
            report: Report::default(),
        })
    }

    pub fn deployment(&self) -> &Deployment {
        &self.deployment
    }

    pub fn card(&self, card: CardRef) -> Option<&Card> {
        self.households.get(card.household as usize)?.get(card.index)
    }

    pub fn step(&mut self, action: &Action) -> Result<String, String> {
        let outcome = self.execute(action);
        self.report.events.push(Event { action: action.clone(), outcome: outcome.clone() });
        outcome
    }

    fn execute(&mut self, action: &Action) -> Result<String, String> {
        match action {
            Action::Register { budget, cards } => {
                let (id, cards) = self.deployment.register_household(*budget, *cards, &mut self.rng).map_err(|e| e.to_string())?;
                debug_assert_eq!(id as usize, self.households.len());
                self.households.push(cards);
                Ok(format!("household {id}"))
            }
            Action::Spend { card, price, epsilon, vendor } => {
                let Some(c) = self.households.get_mut(card.household as usize).and_then(|h| h.get_mut(card.index)) else {
                    return Err(format!("no card {card}"));
                };
                let rs_public = self.deployment.rs_public();
                let v = self.vendors.entry(vendor.clone()).or_insert_with(|| Vendor::new(vendor.clone(), rs_public));
                let outcome = self.deployment.spend(c, v, *epsilon, *price, &mut self.rng);
                match (outcome.card, outcome.vendor) {
                    (Ok(_), Ok(_)) => Ok(String::new()),
                    (Err(e), _) => Err(e.to_string()),
                    (Ok(_), Err(e)) => Err(format!("vendor refused: {e}")),
                }
            }
            Action::Reclaim { vendor, epsilon } => {
                let ledger = self.vendors.get_mut(vendor).and_then(|v| v.take_ledger(*epsilon));
                let entries = ledger.map(|l| l.entries).unwrap_or_default();
                let (total, proof) = create_reclaim_proof(*epsilon, &entries).map_err(|e| e.to_string())?;
                self.reclaim.verify(*epsilon, total, &proof).map_err(|e| e.to_string())?;
                *self.report.reclaimed.entry((vendor.clone(), *epsilon)).or_default() += total;
                let items = proof.items.len();
                self.forwarded.push((*epsilon, total, proof));
                Ok(format!("total {total} items {items}"))
            }
            Action::Audit { epsilon } => {
                let mut outcome = AuditOutcome { epsilon: *epsilon, proofs: 0, total: 0, rejected: 0 };
                let (due, kept) = std::mem::take(&mut self.forwarded).into_iter().partition(|(e, _, _)| e == epsilon);
                self.forwarded = kept;
                for (_, total, proof) in due {
                    outcome.proofs += 1;
                    match self.auditor.audit(*epsilon, total, &proof) {
                        Ok(()) => outcome.total += total,
                        Err(_) => outcome.rejected += 1,
                    }
                }
                self.report.audits.push(outcome);
                let detail = format!("proofs {} total {}", outcome.proofs, outcome.total);
                if outcome.rejected == 0 {
                    Ok(detail)
                } else {
                    Err(format!("{} of {} proofs rejected", outcome.rejected, outcome.proofs))
                }
            }
            Action::Snapshot { name } => {
                self.snapshots.insert(name.clone(), self.deployment.server.db().clone());
                Ok(String::new())
            }
            Action::Restore { name } => {
                let db = self.snapshots.get(name).ok_or_else(|| format!("no snapshot `{name}`"))?;
                self.deployment.server.replace_db(db.clone());
                Ok(String::new())
            }
            Action::Period { period } => {
                self.deployment.registration.set_period(*period);
                Ok(String::new())
            }
        }
    }

    /// Runs every action, honouring `halt-on-error`, and collects the
    /// final state.
    pub fn run(mut self, scenario: &Scenario) -> Result<Report, StationError> {
        for action in &scenario.actions {
            if self.step(action).is_err() && scenario.halt_on_error {
                self.report.halted = true;
                break;
            }
        }
        self.finish()
    }

    /// Reads every household record with the trusted key and closes the
    /// report.
    pub fn finish(mut self) -> Result<Report, StationError> {
        let client = OramClient::new(&self.deployment.trusted_secret().oram);
        for id in 0..self.households.len() as u32 {
            let record = client.read(&mut self.deployment.server, id, &mut self.rng)?;
            self.report.balances.insert(id, record);
        }
        for (h, cards) in self.households.iter().enumerate() {
            for (index, card) in cards.iter().enumerate() {
                if card.violation() {
                    self.report.violations.push(CardRef { household: h as u32, index });
                }
            }
        }
        for (name, vendor) in &self.vendors {
            for ledger in vendor.ledgers() {
                self.report.unreclaimed.insert((name.clone(), ledger.epsilon), ledger.total());
            }
        }
        Ok(self.report)
    }

    /// The database as it stands, for persisting.
    pub fn database(&self) -> &EncryptedDatabase {
        self.deployment.server.db()
    }
}

/// Runs `scenario` from a fresh deployment.
pub fn run_scenario(scenario: &Scenario) -> Result<Report, StationError> {
    Engine::new(scenario)?.run(scenario)
}
