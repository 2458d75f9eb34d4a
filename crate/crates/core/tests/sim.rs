use aidwallet::oram::Variant;
use aidwallet::sim::{bench_cell, bench_grid, crossover, read_bench, run_scenario, write_bench, Action, CardRef, Scenario, ScenarioLimits};

const FAMILY: &str = "\
seed 7
oram recursive 16
# one household, two cards
register 500 2
spend 0.0 30 1 bakery
spend 0.1 45 1 bakery
reclaim bakery 1
audit 1
";

#[test]
fn two_spends_reclaim_together() {
    let scenario = Scenario::parse(FAMILY).unwrap();
    let report = run_scenario(&scenario).unwrap();
    assert_eq!(report.failures(), 0, "{}", report.render());
    assert_eq!(report.reclaimed[&("bakery".to_owned(), 1)], 75);
    assert_eq!(report.balances[&0].balance, 425);
    assert_eq!(report.balances[&0].ctr, 2);
    assert_eq!(report.audits[0].total, 75);
    assert!(report.render().contains("0003 reclaim bakery 1 -> ok total 75 items 2\n"));
}

#[test]
fn overspend_is_logged_and_changes_nothing() {
    let text = "seed 1\noram tree 8\nregister 50 1\nspend 0.0 20 1 shop\nspend 0.0 40 1 shop\nspend 0.0 30 1 shop\n";
    let report = run_scenario(&Scenario::parse(text).unwrap()).unwrap();
    let outcomes: Vec<bool> = report.events.iter().map(|e| e.outcome.is_ok()).collect();
    assert_eq!(outcomes, vec![true, true, false, true]);
    assert!(report.events[2].outcome.as_ref().unwrap_err().contains("balance"));
    assert_eq!(report.balances[&0].balance, 0);
    assert_eq!(report.unreclaimed[&("shop".to_owned(), 1)], 50);
}

#[test]
fn restored_snapshot_trips_the_card_that_wrote() {
    let text = "\
seed 3
oram recursive 8
register 100 2
snapshot before
spend 0.0 10 1 shop
restore before
spend 0.0 10 1 shop
spend 0.0 10 1 shop
spend 0.1 10 1 market
";
    let report = run_scenario(&Scenario::parse(text).unwrap()).unwrap();
    let ok: Vec<bool> = report.events.iter().map(|e| e.outcome.is_ok()).collect();
    assert_eq!(ok, vec![true, true, true, true, false, false, true]);
    assert!(report.events[4].outcome.as_ref().unwrap_err().contains("rollback"));
    assert_eq!(report.violations, vec![CardRef { household: 0, index: 0 }]);
    assert!(report.render().contains("\nviolation 0.0\n"));
}

#[test]
fn sibling_spend_after_restore_repeats_a_tag() {
    let run = |vendor: &str| {
        let text = format!(
            "seed 4\noram recursive 8\nregister 100 2\nsnapshot before\nspend 0.0 10 1 shop\nrestore before\n\
             spend 0.1 10 1 {vendor}\nreclaim shop 1\nreclaim {vendor} 1\n"
        );
        run_scenario(&Scenario::parse(&text).unwrap()).unwrap()
    };
    let same = run("shop");
    let refused = same.events[4].outcome.as_ref().unwrap_err();
    assert!(refused.contains("tag already received"), "{refused}");

    let other = run("market");
    assert!(other.events[4].outcome.is_ok(), "a fresh vendor cannot tell");
    assert!(other.events[6].outcome.as_ref().unwrap_err().contains("already claimed"));
    assert!(other.violations.is_empty());
}

#[test]
fn halt_stops_at_the_first_failure() {
    let text = "halt-on-error\nregister 10 1\nspend 0.0 11 1 shop\nspend 0.0 1 1 shop\n";
    let report = run_scenario(&Scenario::parse(text).unwrap()).unwrap();
    assert!(report.halted);
    assert_eq!(report.events.len(), 2);
    assert!(report.render().contains("halted\n"));
}

#[test]
fn missing_things_are_failures_not_panics() {
    let text = "register 10 1\nspend 4.0 1 1 shop\nspend 0.3 1 1 shop\nrestore nowhere\nreclaim shop 1\naudit 9\n";
    let report = run_scenario(&Scenario::parse(text).unwrap()).unwrap();
    let ok: Vec<bool> = report.events.iter().map(|e| e.outcome.is_ok()).collect();
    assert_eq!(ok, vec![true, false, false, false, false, true]);
}

#[test]
fn same_scenario_same_log() {
    let scenario = Scenario::random(11, ScenarioLimits { households: 6, spends: 40, ..Default::default() });
    let a = run_scenario(&scenario).unwrap().render();
    let b = run_scenario(&scenario).unwrap().render();
    assert_eq!(a, b);
    let mut other = scenario.clone();
    other.seed += 1;
    assert_eq!(run_scenario(&other).unwrap().balances, run_scenario(&scenario).unwrap().balances);
}

#[test]
fn parse_errors_name_the_line() {
    let err = Scenario::parse("seed 1\n\nspend 0 1 1 v\n").unwrap_err();
    assert_eq!(err.line, 3);
    assert_eq!(Scenario::parse("register 1 1\nseed 4\n").unwrap_err().line, 2);
    assert_eq!(Scenario::parse("oram naive 0\n").unwrap_err().line, 1);
    assert_eq!(Scenario::parse("register 1 0\n").unwrap_err().line, 1);
    assert_eq!(Scenario::parse("policy grow 3\n").unwrap_err().line, 1);
    assert_eq!(Scenario::parse("launch\n").unwrap_err().to_string(), "line 1: unknown directive `launch`");
}

#[test]
fn scenarios_round_trip_through_text() {
    let mut s = Scenario::random(5, ScenarioLimits::default());
    s.halt_on_error = true;
    s.actions.push(Action::Snapshot { name: "a".into() });
    s.actions.push(Action::Period { period: 2 });
    assert_eq!(Scenario::parse(&s.to_string()).unwrap(), s);
    assert_eq!(Scenario::parse(FAMILY).unwrap().to_string().lines().count(), 7);
}

#[test]
fn random_scenarios_respect_their_limits() {
    let limits = ScenarioLimits { households: 20, cards: 3, spends: 60, vendors: 2, periods: 2 };
    for seed in 0..20 {
        let s = Scenario::random(seed, limits);
        let households = s.actions.iter().filter(|a| matches!(a, Action::Register { .. })).count();
        let spends = s.actions.iter().filter(|a| matches!(a, Action::Spend { .. })).count();
        assert!((1..=20).contains(&households));
        assert!((1..=60).contains(&spends));
        for a in &s.actions {
            if let Action::Register { cards, .. } = a {
                assert!((1..=3).contains(cards));
            }
        }
    }
    let big = Scenario::largest(0, limits);
    assert_eq!(big.actions.iter().filter(|a| matches!(a, Action::Spend { .. })).count(), 60);
}

#[test]
fn bench_cells_count_both_directions() {
    let naive = bench_cell(Variant::Naive, 256, 4, 1).unwrap();
    assert!(naive.bytes_to_client >= 4.0 * 256.0);
    assert!(naive.bytes_to_server >= 4.0 * 256.0);
    assert_eq!(naive.server_ops, 2.0);
    let grid = bench_grid(&[Variant::Naive, Variant::Recursive], &[64, 256], 4, 1).unwrap();
    assert_eq!(grid.len(), 4);
    assert_eq!((grid[1].variant.as_str(), grid[1].n), ("naive", 256));
    let mut csv = Vec::new();
    write_bench(&mut csv, &grid).unwrap();
    assert!(String::from_utf8_lossy(&csv).starts_with("variant,N,bytes_to_client,bytes_to_server,server_ops,wall_time\n"));
    assert_eq!(read_bench(csv.as_slice()).unwrap(), grid);
}

#[test]
fn crossover_needs_a_clean_switch() {
    let row = |v: &str, n, b| aidwallet::sim::BenchResult {
        variant: v.into(),
        n,
        bytes_to_client: b,
        bytes_to_server: 0.0,
        server_ops: 1.0,
        wall_time: 0.0,
    };
    let mut rows = vec![row("naive", 1, 1.0), row("recursive", 1, 5.0), row("naive", 2, 4.0), row("recursive", 2, 3.0)];
    assert_eq!(crossover(&rows, Variant::Naive, Variant::Recursive), Some(2));
    rows.push(row("naive", 3, 1.0));
    rows.push(row("recursive", 3, 2.0));
    assert_eq!(crossover(&rows, Variant::Naive, Variant::Recursive), None);
    assert_eq!(crossover(&rows[..2], Variant::Naive, Variant::Recursive), None);
}
