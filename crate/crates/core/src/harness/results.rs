use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::strategies::{Experiment, Strategy};

/// Tally of one (experiment, strategy) run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub strategy: String,
    pub trials: u32,
    pub aborts: u32,
    pub wins: u32,
    pub detections: u32,
    pub accepted: u32,
    pub seed: u64,
}

impl ExperimentResult {
    /// Trials that reached the adversary's output.
    pub fn completed(&self) -> u32 {
        self.trials - self.aborts
    }

    pub fn win_rate(&self) -> f64 {
        ratio(self.wins, self.completed())
    }

    /// `|P[b' = b] - 1/2|` over completed trials.
    pub fn advantage(&self) -> f64 {
        (self.win_rate() - 0.5).abs()
    }

    /// Three standard deviations of a fair coin's success rate.
    pub fn noise_bound(&self) -> f64 {
        3.0 * (0.25 / f64::from(self.completed().max(1))).sqrt()
    }

    /// The acceptance bound for this pair.
    pub fn passes(&self) -> bool {
        let (Ok(experiment), Ok(strategy)) = (self.experiment.parse::<Experiment>(), self.strategy.parse::<Strategy>()) else {
            return false;
        };
        let completed = self.completed();
        match (experiment, strategy) {
            (Experiment::Sec, _) => self.wins == 0,
            (Experiment::Recl, s) if s.claims_honestly() => self.wins == 0 && self.accepted == completed,
            (Experiment::Recl, _) => self.wins == 0,
            (Experiment::Ind, Strategy::DbRewind) => completed > 0 && self.wins == completed && self.detections == completed,
            (Experiment::Audp, Strategy::UnequalCountWorlds) => self.aborts == self.trials,
            (Experiment::Ind | Experiment::Audp, _) => completed > 0 && self.aborts == 0 && self.advantage() <= self.noise_bound(),
        }
    }

    /// One human-readable line.
    pub fn summary(&self) -> String {
        let experiment: Option<Experiment> = self.experiment.parse().ok();
        let metric = if experiment.is_some_and(Experiment::is_distinguishing) {
            format!("advantage {:.4} (bound {:.4})", self.advantage(), self.noise_bound())
        } else {
            format!("win rate {:.4}", self.win_rate())
        };
        format!(
            "{} {:<26} {} trials={} aborts={} wins={} detections={} accepted={} {}",
            self.experiment,
            self.strategy,
            if self.passes() { "PASS" } else { "FAIL" },
            self.trials,
            self.aborts,
            self.wins,
            self.detections,
            self.accepted,
            metric
        )
    }
}

fn ratio(n: u32, d: u32) -> f64 {
    if d == 0 {
        0.0
    } else {
        f64::from(n) / f64::from(d)
    }
}

pub fn write_results<W: io::Write>(out: W, results: &[ExperimentResult]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results_file(path: &Path, results: &[ExperimentResult]) -> csv::Result<()> {
    write_results(std::fs::File::create(path)?, results)
}

pub fn read_results<R: io::Read>(input: R) -> csv::Result<Vec<ExperimentResult>> {
    csv::Reader::from_reader(input).deserialize().collect()
}
