//! Executable security games: the oracles, the four experiments and a
//! library of scripted adversaries.
//!
//! Each trial is deterministic given its seed. Trials of one experiment
//! run in parallel.

mod experiments;
mod oracles;
mod results;
mod strategies;

pub use experiments::{default_oram, run_all, run_experiment, run_trial, trial_seed, HarnessError, TrialOutcome, DEFAULT_TRIALS};
pub use oracles::{present_proof, CardId, MalVendorView, Offer, OracleError, OracleState, RelayView, ScriptedVendor};
pub use results::{read_results, write_results, write_results_file, ExperimentResult};
pub use strategies::{
    audp_guess, audp_plan, forged_proof, impostor_registration, recl_adversary, sec_adversary, Experiment, IndAdversary, IndChallenge,
    IndOracles, ReclOracles, ReclaimClaim, SecOracles, SplitWorlds, Strategy,
};
