use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aidwallet::harness::{default_oram, run_experiment, write_results, Experiment, ExperimentResult, Strategy};
use aidwallet::oram::{EncryptedDatabase, Variant, MAX_CAPACITY};
use aidwallet::sim::{bench_grid, crossover, write_bench, Engine, Scenario};
use clap::{Parser, Subcommand};

const VIOLATION: u8 = 1;
const USAGE: u8 = 2;

/// Aid-wallet scenarios, ORAM cost measurements and security experiments.
#[derive(Parser)]
#[command(name = "aidwallet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario file and print the event log and final ledgers.
    Run {
        file: PathBuf,
        /// Write the log here instead of stdout.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Store the final database here.
        #[arg(long)]
        db_out: Option<PathBuf>,
    },
    /// Measure per-access ORAM transfer and write CSV.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "naive,tree,recursive")]
        variants: Vec<Variant>,
        #[arg(long, value_delimiter = ',', default_value = "256,1024,4096,16384,32768,65536")]
        sizes: Vec<u32>,
        /// Read+write pairs per cell.
        #[arg(long, default_value_t = 32)]
        accesses: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run security experiments and check their acceptance bounds.
    Exp {
        /// Experiment ids, or `all`.
        #[arg(long, value_delimiter = ',', default_value = "all")]
        ids: Vec<String>,
        /// Limit to these strategies.
        #[arg(long, value_delimiter = ',')]
        strategies: Vec<Strategy>,
        #[arg(long, default_value_t = 1000)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Database files.
    Db {
        #[command(subcommand)]
        action: DbAction,
    },
}

#[derive(Subcommand)]
enum DbAction {
    /// Write a database: fresh, or as left by a scenario.
    Store {
        path: PathBuf,
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Check a database file and describe it.
    Load { path: PathBuf },
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl ToString) -> Failure {
    Failure { code: USAGE, message: message.to_string() }
}

fn output(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(path) => fs::write(path, bytes).map_err(|e| usage(format!("{}: {e}", path.display()))),
        None => io::stdout().write_all(bytes).map_err(usage),
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Scenario::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn run(file: &Path, log: Option<&Path>, db_out: Option<&Path>) -> Result<u8, Failure> {
    let scenario = load_scenario(file)?;
    let mut engine = Engine::new(&scenario).map_err(usage)?;
    let mut halted = false;
    for action in &scenario.actions {
        if engine.step(action).is_err() && scenario.halt_on_error {
            halted = true;
            break;
        }
    }
    if let Some(path) = db_out {
        engine.database().store(path).map_err(usage)?;
    }
    let mut report = engine.finish().map_err(usage)?;
    report.halted = halted;
    output(log, report.render().as_bytes())?;
    Ok(if halted { VIOLATION } else { 0 })
}

fn bench(variants: &[Variant], sizes: &[u32], accesses: u32, seed: u64, out: Option<&Path>) -> Result<u8, Failure> {
    if let Some(n) = sizes.iter().find(|&&n| n == 0 || n > MAX_CAPACITY) {
        return Err(usage(format!("size {n} is outside 1..={MAX_CAPACITY}")));
    }
    let results = bench_grid(variants, sizes, accesses, seed).map_err(usage)?;
    let mut csv = Vec::new();
    write_bench(&mut csv, &results).map_err(usage)?;
    output(out, &csv)?;
    if variants.contains(&Variant::Naive) && variants.contains(&Variant::Recursive) {
        match crossover(&results, Variant::Naive, Variant::Recursive) {
            Some(n) => eprintln!("recursive moves fewer bytes than naive from N = {n}"),
            None => eprintln!("no clean naive/recursive crossover among the measured sizes"),
        }
    }
    Ok(0)
}

fn experiments(ids: &[String], strategies: &[Strategy], trials: u32, seed: u64, out: Option<&Path>) -> Result<u8, Failure> {
    let chosen: Vec<Experiment> = if ids.iter().any(|i| i == "all") {
        Experiment::ALL.to_vec()
    } else {
        ids.iter().map(|i| i.parse()).collect::<Result<_, _>>().map_err(usage)?
    };
    let mut results: Vec<ExperimentResult> = Vec::new();
    for &experiment in &chosen {
        for strategy in Strategy::for_experiment(experiment) {
            if strategies.is_empty() || strategies.contains(&strategy) {
                results.push(run_experiment(experiment, strategy, trials, seed, default_oram()).map_err(usage)?);
            }
        }
    }
    if results.is_empty() {
        return Err(usage("no strategy applies to the selected experiments"));
    }
    let mut failed = false;
    for r in &results {
        let verdict = if r.passes() { "pass" } else { "FAIL" };
        failed |= !r.passes();
        eprintln!("{verdict} {}", r.summary());
    }
    let mut csv = Vec::new();
    write_results(&mut csv, &results).map_err(usage)?;
    output(out, &csv)?;
    Ok(if failed { VIOLATION } else { 0 })
}

fn db(action: &DbAction) -> Result<u8, Failure> {
    match action {
        DbAction::Store { path, scenario } => {
            let scenario = match scenario {
                Some(file) => load_scenario(file)?,
                None => Scenario::default(),
            };
            let mut engine = Engine::new(&scenario).map_err(usage)?;
            for action in &scenario.actions {
                engine.step(action).ok();
            }
            let db = engine.database();
            db.store(path).map_err(usage)?;
            println!("stored {} bytes to {}", db.to_bytes().len(), path.display());
        }
        DbAction::Load { path } => {
            let db = EncryptedDatabase::load(path).map_err(usage)?;
            let c = db.config();
            println!(
                "{} capacity {} layout {:?} bucket {} factor {} bytes {}",
                c.variant,
                c.capacity,
                c.layout,
                c.bucket_size,
                c.recursion_factor,
                db.to_bytes().len()
            );
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { file, log, db_out } => run(file, log.as_deref(), db_out.as_deref()),
        Command::Bench { variants, sizes, accesses, seed, out } => bench(variants, sizes, *accesses, *seed, out.as_deref()),
        Command::Exp { ids, strategies, trials, seed, out } => experiments(ids, strategies, *trials, *seed, out.as_deref()),
        Command::Db { action } => db(action),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
