//! The ten acceptance criteria, one line each. Exits non-zero if any fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use aidwallet::crypto::{combine, CommitmentParams, Opening};
use aidwallet::harness::{default_oram, run_experiment, Experiment, ExperimentResult, Strategy, DEFAULT_TRIALS};
use aidwallet::oram::{self, EncryptedDatabase, HouseholdRecord, OramClient, OramConfig, OramError, OramServer, UnitId, Variant};
use aidwallet::sim::{bench_grid, crossover, run_scenario, Action, BenchResult, Report, Scenario, ScenarioLimits};
use aidwallet::token::PeriodPolicy;
use aidwallet::wire::{kind, Recorder, Transcript};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// 1 ------------------------------------------------------------------------

/// Plain bookkeeping of what an honest run must produce.
#[derive(Default)]
struct Ledger {
    households: Vec<(u16, u16, usize)>,
    pending: BTreeMap<(String, u32), u64>,
    reclaimed: BTreeMap<(String, u32), u64>,
    forwarded: Vec<(u32, u64)>,
    audits: Vec<(u32, usize, u64)>,
    outcomes: Vec<bool>,
}

impl Ledger {
    fn apply(&mut self, action: &Action) -> bool {
        match action {
            Action::Register { budget, cards } => {
                self.households.push((*budget, 0, *cards));
                true
            }
            Action::Spend { card, price, epsilon, vendor } => {
                let Some((balance, ctr, cards)) = self.households.get_mut(card.household as usize) else {
                    return false;
                };
                if card.index >= *cards || price > balance {
                    return false;
                }
                *balance -= price;
                *ctr += 1;
                *self.pending.entry((vendor.clone(), *epsilon)).or_default() += u64::from(*price);
                true
            }
            Action::Reclaim { vendor, epsilon } => match self.pending.remove(&(vendor.clone(), *epsilon)) {
                Some(total) => {
                    *self.reclaimed.entry((vendor.clone(), *epsilon)).or_default() += total;
                    self.forwarded.push((*epsilon, total));
                    true
                }
                None => false,
            },
            Action::Audit { epsilon } => {
                let due: Vec<u64> = self.forwarded.iter().filter(|(e, _)| e == epsilon).map(|(_, t)| *t).collect();
                self.forwarded.retain(|(e, _)| e != epsilon);
                self.audits.push((*epsilon, due.len(), due.iter().sum()));
                true
            }
            Action::Snapshot { .. } | Action::Restore { .. } | Action::Period { .. } => true,
        }
    }

    fn matches(&self, report: &Report) -> Result<(), String> {
        let outcomes: Vec<bool> = report.events.iter().map(|e| e.outcome.is_ok()).collect();
        if outcomes != self.outcomes {
            let i = outcomes.iter().zip(&self.outcomes).position(|(a, b)| a != b).unwrap_or(0);
            return Err(format!("event {i}: {:?}", report.events.get(i)));
        }
        for (id, &(balance, ctr, _)) in self.households.iter().enumerate() {
            let rec = report.balances.get(&(id as u32)).ok_or("missing balance")?;
            if (rec.balance, rec.ctr) != (balance, ctr) {
                return Err(format!("household {id}: {rec:?}, ledger says {balance}/{ctr}"));
            }
        }
        if report.reclaimed != self.reclaimed || report.unreclaimed != self.pending {
            return Err("reclaim totals differ".into());
        }
        let audits: Vec<(u32, usize, u64)> =
            report.audits.iter().map(|a| (a.epsilon, a.proofs, if a.rejected == 0 { a.total } else { u64::MAX })).collect();
        if audits != self.audits {
            return Err("audit outcomes differ".into());
        }
        Ok(())
    }
}

fn protocol_correctness() -> Verdict {
    const SCENARIOS: u64 = 1000;
    let start = Instant::now();
    let limits = ScenarioLimits::default();
    let mismatches: Vec<String> = (0..SCENARIOS)
        .into_par_iter()
        .filter_map(|seed| {
            let scenario = if seed == 0 { Scenario::largest(seed, limits) } else { Scenario::random(seed, limits) };
            let mut ledger = Ledger::default();
            for action in &scenario.actions {
                let ok = ledger.apply(action);
                ledger.outcomes.push(ok);
            }
            let report = run_scenario(&scenario).map_err(|e| e.to_string());
            report.and_then(|r| ledger.matches(&r)).err().map(|e| format!("seed {seed}: {e}"))
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("{SCENARIOS} scenarios, {} mismatches, {secs:.1}s (target < 120s)", mismatches.len());
    check(mismatches.is_empty(), mismatches.first().map_or(detail.clone(), |m| format!("{detail}; {m}")))
}

// 2-5 ----------------------------------------------------------------------

fn experiment(e: Experiment, detail: impl Fn(&ExperimentResult) -> String) -> Verdict {
    let results: Vec<ExperimentResult> = Strategy::for_experiment(e)
        .map(|s| run_experiment(e, s, DEFAULT_TRIALS, 0xacce, default_oram()))
        .collect::<Result<_, _>>()
        .map_err(|err| err.to_string())?;
    let ok = results.iter().all(ExperimentResult::passes);
    let parts: Vec<String> = results.iter().map(|r| format!("{} {}", r.strategy, detail(r))).collect();
    check(ok, format!("{} trials each: {}", DEFAULT_TRIALS, parts.join(", ")))
}

fn distinguishing(r: &ExperimentResult) -> String {
    match r.strategy.as_str() {
        "db-rewind" => format!("wins {}/{} detected {}/{}", r.wins, r.completed(), r.detections, r.completed()),
        "unequal-count-worlds" => format!("aborted {}/{}", r.aborts, r.trials),
        _ => format!("adv {:.4}<={:.4}", r.advantage(), r.noise_bound()),
    }
}

// 6 ------------------------------------------------------------------------

fn oram_obliviousness() -> Verdict {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let n = 1 << 10;
    let (key, db) = oram::init(OramConfig::new(Variant::Naive, n), &mut rng).map_err(|e| e.to_string())?;
    let (client, mut server) = (OramClient::new(&key), OramServer::new(db));
    let mut shapes = Vec::new();
    for b in 0..n {
        for write in [false, true] {
            let mut rec = Recorder::new(&mut server);
            if write {
                client.write(&mut rec, b, HouseholdRecord::new(1, 1), &mut rng).map_err(|e| e.to_string())?;
            } else {
                client.read(&mut rec, b, &mut rng).map_err(|e| e.to_string())?;
            }
            let shape = rec.into_parts().1.shape();
            if !shapes.contains(&shape) {
                shapes.push(shape);
            }
        }
    }

    let (key, db) = oram::init(OramConfig::new(Variant::Tree, n), &mut rng).map_err(|e| e.to_string())?;
    let leaves = db.forest().unwrap().trees[0].leaves() as usize;
    let (client, mut server) = (OramClient::new(&key), OramServer::new(db));
    let mut counts = vec![0u64; leaves];
    const ACCESSES: u32 = 10_000;
    for i in 0..ACCESSES {
        // Hammer a handful of households; the observed leaves must not care.
        let b = i % 3;
        let mut rec = Recorder::new(&mut server);
        client.read(&mut rec, b, &mut rng).map_err(|e| e.to_string())?;
        for frame in rec.into_parts().1.frames_of_kind(kind::ORAM_FETCH_PATH) {
            counts[u32::from_be_bytes(frame[6..10].try_into().unwrap()) as usize] += 1;
        }
    }
    let expected = f64::from(ACCESSES) / leaves as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((leaves - 1) as f64).unwrap().cdf(stat);
    check(
        shapes.len() == 1 && p > 0.01,
        format!("naive: {} distinct shape(s) over {n} indices; tree: {leaves} leaves, chi-square p = {p:.3} (> 0.01)", shapes.len()),
    )
}

// 7 ------------------------------------------------------------------------

fn touched_units(db: &EncryptedDatabase, transcript: &Transcript) -> Vec<UnitId> {
    let mut out = Vec::new();
    if transcript.frames_of_kind(kind::ORAM_FETCH_DB).next().is_some() {
        out.push(UnitId::Naive);
    }
    if transcript.frames_of_kind(kind::ORAM_FETCH_TOP).next().is_some() {
        out.push(UnitId::Top);
    }
    for frame in transcript.frames_of_kind(kind::ORAM_FETCH_PATH) {
        let tree = frame[5];
        let leaf = u32::from_be_bytes(frame[6..10].try_into().unwrap());
        let shape = db.forest().unwrap().trees[tree as usize];
        out.push(UnitId::Stash(tree));
        out.extend((0..=shape.height).map(|d| UnitId::Bucket(tree, shape.node(leaf, d) as u32)));
    }
    out
}

fn oram_integrity() -> Verdict {
    const FLIPS: usize = 1000;
    let mut summary = Vec::new();
    let mut failures = Vec::new();
    for variant in Variant::ALL {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let n = 64;
        let (key, db) = oram::init(OramConfig::new(variant, n), &mut rng).map_err(|e| e.to_string())?;
        let client = OramClient::new(&key);
        let mut server = OramServer::new(db);
        for b in 0..n {
            client.write(&mut server, b, HouseholdRecord::new(b as u16, 1), &mut rng).map_err(|e| e.to_string())?;
        }
        let mut detected = 0;
        for flip in 0..FLIPS {
            let clean = server.db().clone();
            let units = clean.units();
            let unit = units[rng.gen_range(0..units.len())];
            let bits = server.db_mut().unit_mut(unit).unwrap().len() * 8;
            server.db_mut().flip_bit(unit, rng.gen_range(0..bits));
            for _ in 0..10_000 {
                let mut rec = Recorder::new(&mut server);
                let result = client.read(&mut rec, rng.gen_range(0..n), &mut rng);
                let (_, transcript) = rec.into_parts();
                let touched = touched_units(server.db(), &transcript).contains(&unit);
                match (result, touched) {
                    (Err(OramError::Integrity), true) => {
                        detected += 1;
                        break;
                    }
                    (Ok(_), false) => {}
                    (outcome, _) => {
                        failures.push(format!("{variant} flip {flip} in {unit:?}: {outcome:?}, touched {touched}"));
                        break;
                    }
                }
            }
            server.replace_db(clean);
        }
        summary.push(format!("{variant} {detected}/{FLIPS}"));
    }
    let detail = format!("bit flips detected on the next touching access: {}", summary.join(", "));
    check(
        failures.is_empty() && summary.iter().all(|s| s.ends_with(&format!(" {FLIPS}/{FLIPS}"))),
        match failures.first() {
            Some(f) => format!("{detail}; {f}"),
            None => detail,
        },
    )
}

// 8 ------------------------------------------------------------------------

fn cost_reproduction() -> Verdict {
    let sizes: Vec<u32> = (8..=17).map(|k| 1 << k).collect();
    let grid = bench_grid(&[Variant::Naive, Variant::Recursive], &sizes, 2, 8).map_err(|e| e.to_string())?;
    let series = |v: Variant| -> Vec<&BenchResult> { grid.iter().filter(|r| r.variant == v.name()).collect() };
    let (naive, recursive) = (series(Variant::Naive), series(Variant::Recursive));
    let at = |s: &[&BenchResult], n: u32| s.iter().find(|r| r.n == n).unwrap().bytes();
    let (naive15, recursive15) = (at(&naive, 1 << 15), at(&recursive, 1 << 15));
    let ratio = naive15 / recursive15;
    let n_star = crossover(&grid, Variant::Naive, Variant::Recursive);

    let naive_increasing = naive.windows(2).all(|w| w[1].bytes() > w[0].bytes());
    let upto16: Vec<&&BenchResult> = recursive.iter().filter(|r| r.n <= 1 << 16).collect();
    let recursive_flat = upto16.windows(2).all(|w| w[1].bytes() >= w[0].bytes());
    let (first, last) = (upto16[0], upto16[upto16.len() - 1]);
    let slope = (last.bytes() / first.bytes()).ln() / (f64::from(last.n) / f64::from(first.n)).ln();

    let ok = (256_000.0..=340_000.0).contains(&naive15)
        && recursive15 < naive15
        && ratio >= 1.5
        && n_star.is_some_and(|n| (1 << 9..=1 << 17).contains(&n))
        && naive_increasing
        && recursive_flat
        && slope < 0.3;
    check(
        ok,
        format!(
            "N=2^15: naive {:.1} kB per access (256..340), recursive {:.1} kB, ratio {ratio:.2} (>= 1.5); crossover N* = {} (2^9..2^17); recursive slope {slope:.3} (< 0.3)",
            naive15 / 1000.0,
            recursive15 / 1000.0,
            n_star.map_or("none".into(), |n| n.to_string()),
        ),
    )
}

// 9 ------------------------------------------------------------------------

fn homomorphic_identity() -> Verdict {
    const SETS: u64 = 10_000;
    let p = CommitmentParams::standard();
    let bad = (0..SETS)
        .into_par_iter()
        .filter(|&seed| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let items: Vec<(u64, Opening)> =
                (0..rng.gen_range(1..=12)).map(|_| (u64::from(rng.gen::<u16>()), Opening::random(&mut rng))).collect();
            let coms: Vec<_> = items.iter().map(|(m, r)| p.commit(*m, r)).collect();
            let sum: u64 = items.iter().map(|(m, _)| m).sum();
            let r_sum: Opening = items.iter().map(|(_, r)| *r).sum();
            combine(&coms).unwrap() != p.commit(sum, &r_sum)
        })
        .count();
    check(bad == 0, format!("{SETS} random proof sets, {bad} mismatches"))
}

// 10 -----------------------------------------------------------------------

const PERIODS: &str = include_str!("fixtures/periods.txt");

fn period_fixture(policy: PeriodPolicy, expected: &str) -> Result<String, String> {
    let header = match policy {
        PeriodPolicy::AddAllowance(a) => format!("policy add {a}\n"),
        PeriodPolicy::ResetTo(a) => format!("policy reset {a}\n"),
    };
    let scenario = Scenario::parse(&format!("seed 10\noram recursive 8\n{header}{PERIODS}")).map_err(|e| e.to_string())?;
    let report = run_scenario(&scenario).map_err(|e| e.to_string())?;
    let outcomes: Vec<&str> = report.events.iter().map(|e| if e.outcome.is_ok() { "ok" } else { "fail" }).collect();
    let mut actual = format!("outcomes {}\n", outcomes.join(" "));
    for (id, rec) in &report.balances {
        actual += &format!("balance {id} {} ctr {} period {}\n", rec.balance, rec.ctr, rec.last_period);
    }
    let wanted: String = expected.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    if actual == wanted {
        Ok(header.trim().to_owned())
    } else {
        Err(format!("{}: got {actual:?}", header.trim()))
    }
}

fn periodicity() -> Verdict {
    let add = period_fixture(PeriodPolicy::AddAllowance(50), include_str!("fixtures/periods_add_50.expected"));
    let reset = period_fixture(PeriodPolicy::ResetTo(60), include_str!("fixtures/periods_reset_60.expected"));
    match (add, reset) {
        (Ok(a), Ok(r)) => Ok(format!("three periods match the hand-computed ledgers for `{a}` and `{r}`")),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("protocol correctness", protocol_correctness),
        ("overspending", || experiment(Experiment::Sec, |r| format!("wins {}", r.wins))),
        ("over-reclaim", || experiment(Experiment::Recl, |r| format!("wins {} accepted {}/{}", r.wins, r.accepted, r.completed()))),
        ("unlinkability", || experiment(Experiment::Ind, distinguishing)),
        ("audit privacy", || experiment(Experiment::Audp, distinguishing)),
        ("oram obliviousness", oram_obliviousness),
        ("oram integrity", oram_integrity),
        ("cost reproduction", cost_reproduction),
        ("homomorphic reclaim identity", homomorphic_identity),
        ("periodicity", periodicity),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = run();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &verdict {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += usize::from(verdict.is_err());
        println!("criterion {:>2} {tag} {name} [{secs:.1}s]: {detail}", i + 1);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
