use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::oracles::{MalVendorView, OracleState};
use super::results::ExperimentResult;
use super::strategies::{
    audp_guess, audp_plan, recl_adversary, sec_adversary, Experiment, IndAdversary, IndOracles, ReclOracles, SecOracles, SplitWorlds,
    Strategy,
};
use crate::oram::{OramConfig, Variant};
use crate::stations::{create_reclaim_proof, verify_reclaim_proof, StationError, TagLedger};

/// Trials per strategy in the acceptance runs.
pub const DEFAULT_TRIALS: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HarnessError {
    #[error("strategy {strategy} has no script for experiment {experiment}")]
    NotApplicable { experiment: Experiment, strategy: Strategy },
    #[error(transparent)]
    Setup(#[from] StationError),
}

/// Database shape used by every trial unless overridden.
pub fn default_oram() -> OramConfig {
    OramConfig::new(Variant::Recursive, 32)
}

/// What one trial ended in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrialOutcome {
    /// The challenger returned ⊥ before the adversary's output counted.
    pub aborted: bool,
    pub win: bool,
    /// A challenge-household card recorded a rollback.
    pub detected: bool,
    /// The reclaim station accepted the adversary's claim.
    pub accepted: bool,
}

/// Seed of trial `trial`, independent across experiments and strategies.
pub fn trial_seed(seed: u64, experiment: Experiment, strategy: Strategy, trial: u32) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"aidwallet-trial");
    h.update(seed.to_be_bytes());
    h.update(experiment.id().as_bytes());
    h.update([0]);
    h.update(strategy.name().as_bytes());
    h.update(trial.to_be_bytes());
    h.finalize().into()
}

/// The challenger's, the oracles' and the adversary's randomness.
fn streams(seed: [u8; 32]) -> (ChaCha20Rng, ChaCha20Rng, ChaCha20Rng) {
    let stream = |n: u64| {
        let mut rng = ChaCha20Rng::from_seed(seed);
        rng.set_stream(n);
        rng
    };
    (stream(0), stream(1), stream(2))
}

pub fn run_trial(experiment: Experiment, strategy: Strategy, oram: OramConfig, seed: [u8; 32]) -> Result<TrialOutcome, HarnessError> {
    if !strategy.applies_to(experiment) {
        return Err(HarnessError::NotApplicable { experiment, strategy });
    }
    let (mut challenger, oracle_rng, mut adversary) = streams(seed);
    let mut state = OracleState::new(oram, None, oracle_rng)?;
    Ok(match experiment {
        Experiment::Sec => {
            let epsilon = sec_adversary(strategy, &mut SecOracles(&mut state), &mut adversary);
            TrialOutcome { win: state.spent_seen(epsilon) > state.spent_max(epsilon), ..Default::default() }
        }
        Experiment::Recl => {
            let Some(claim) = recl_adversary(strategy, &mut ReclOracles(&mut state), &mut adversary) else {
                return Ok(TrialOutcome::default());
            };
            let valid =
                verify_reclaim_proof(&state.rs_public(), claim.epsilon, claim.spent_sum, &claim.proof, &mut TagLedger::new()).is_ok();
            TrialOutcome { win: valid && claim.spent_sum > state.spent_max(claim.epsilon), accepted: valid, ..Default::default() }
        }
        Experiment::Ind => ind_trial(strategy, state, &mut challenger, adversary),
        Experiment::Audp => audp_trial(strategy, state, &mut challenger, &mut adversary),
    })
}

fn ind_trial(strategy: Strategy, mut state: OracleState, challenger: &mut ChaCha20Rng, rng: ChaCha20Rng) -> TrialOutcome {
    let abort = TrialOutcome { aborted: true, ..Default::default() };
    let mut adversary = IndAdversary::new(strategy, rng);
    let Some(challenge) = adversary.choose(&mut IndOracles(&mut state)) else { return abort };
    let honest = state.honest_cards();
    if !honest.contains(&challenge.t_id0) || !honest.contains(&challenge.t_id1) {
        return abort;
    }
    let (Some(h0), Some(h1)) = (state.household_of(challenge.t_id0), state.household_of(challenge.t_id1)) else {
        return abort;
    };
    let b: u8 = challenger.gen_range(0..=1);
    let order = if b == 0 { [challenge.t_id0, challenge.t_id1] } else { [challenge.t_id1, challenge.t_id0] };
    let offer = super::oracles::Offer { price: challenge.price, epsilon: challenge.epsilon };

    let accepted = |view: &MalVendorView| match &view.card {
        Ok(r) if r.price != challenge.price || r.epsilon != challenge.epsilon => None,
        Ok(_) => Some(true),
        Err(_) => Some(false),
    };
    let Ok(first) = state.challenge_spend(order[0], offer) else { return abort };
    let Some(success_b) = accepted(&first) else { return abort };
    adversary.observe(&first);

    state.restrict([h0, h1]);
    adversary.between(&mut IndOracles(&mut state));
    state.lift_restrictions();

    let Ok(second) = state.challenge_spend(order[1], offer) else { return abort };
    let Some(success_other) = accepted(&second) else { return abort };
    adversary.observe(&second);
    if success_b != success_other {
        return abort;
    }

    let guess = adversary.guess(&mut IndOracles(&mut state));
    let detected = [h0, h1].into_iter().flat_map(|h| state.cards_of(h)).any(|t| state.card(t).is_some_and(|c| c.violation()));
    TrialOutcome { win: guess == b, detected, ..Default::default() }
}

fn audp_trial(strategy: Strategy, state: OracleState, challenger: &mut ChaCha20Rng, rng: &mut ChaCha20Rng) -> TrialOutcome {
    let abort = TrialOutcome { aborted: true, ..Default::default() };
    let mut worlds = SplitWorlds::new(state);
    let epsilon = audp_plan(strategy, &mut worlds, rng);
    let proof = |w: usize| {
        let entries = worlds.world(w).vendor().ledger(epsilon).map(|l| l.entries.clone()).unwrap_or_default();
        create_reclaim_proof(epsilon, &entries).ok()
    };
    let (Some((sum0, proof0)), Some((sum1, proof1))) = (proof(0), proof(1)) else { return abort };
    if sum0 != sum1 || proof0.to_bytes().len() != proof1.to_bytes().len() {
        return abort;
    }
    let b: u8 = challenger.gen_range(0..=1);
    let shown = if b == 0 { &proof0 } else { &proof1 };
    TrialOutcome { win: audp_guess(strategy, shown, rng) == b, ..Default::default() }
}

/// Runs `trials` independent seeded trials in parallel and tallies them.
pub fn run_experiment(
    experiment: Experiment,
    strategy: Strategy,
    trials: u32,
    seed: u64,
    oram: OramConfig,
) -> Result<ExperimentResult, HarnessError> {
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(experiment, strategy, oram, trial_seed(seed, experiment, strategy, t)))
        .collect::<Result<Vec<_>, _>>()?;
    let count = |f: fn(&TrialOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as u32;
    Ok(ExperimentResult {
        experiment: experiment.id().to_owned(),
        strategy: strategy.name().to_owned(),
        trials,
        aborts: count(|o| o.aborted),
        wins: count(|o| !o.aborted && o.win),
        detections: count(|o| !o.aborted && o.detected),
        accepted: count(|o| !o.aborted && o.accepted),
        seed,
    })
}

/// Every applicable (experiment, strategy) pair among `experiments`.
pub fn run_all(experiments: &[Experiment], trials: u32, seed: u64, oram: OramConfig) -> Result<Vec<ExperimentResult>, HarnessError> {
    let mut results = Vec::new();
    for &experiment in experiments {
        for strategy in Strategy::for_experiment(experiment) {
            results.push(run_experiment(experiment, strategy, trials, seed, oram)?);
        }
    }
    Ok(results)
}
