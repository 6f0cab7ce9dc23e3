use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::observer::{ObserverModel, PairAnswer};
use super::records::{TaskKind, TrialAnswer, TrialRecord};
use super::staircase::{jnd_estimate, staircase_init, JndResult, StaircaseAnswer, StaircaseState};
use super::trial::run_push_trial;
use crate::decoupling::Condition;
use crate::error::{Error, Result};
use crate::scenario::{CubeLayout, Scenario};

/// Outcome of one simulated reference-versus-comparison trial.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonTrial {
    pub record: TrialRecord,
    pub answer: StaircaseAnswer,
}

/// Pushes the reference and comparison cubes (order from
/// `arrangement_seed`) and asks the observer which is heavier. Noise, if
/// any, is drawn from `rng`.
pub fn run_comparison_trial<R: Rng + ?Sized>(
    scenario: &Scenario,
    state: &StaircaseState,
    observer: &ObserverModel,
    arrangement_seed: u64,
    trial_id: u64,
    rng: &mut R,
) -> Result<ComparisonTrial> {
    let layout = CubeLayout {
        masses: vec![state.reference_mass, state.comparison_mass],
        arrangement_seed: Some(arrangement_seed),
        ..scenario.cubes.clone()
    };
    let masses = layout.arranged();
    let comparison_slot = if masses[0] == state.comparison_mass && masses[1] != state.comparison_mass { 0 } else { 1 };
    let outcome = run_push_trial(scenario, &masses, Condition::Decoupled)?;
    let a = observer.effective(outcome.peaks[0], rng);
    let b = observer.effective(outcome.peaks[1], rng);
    let (answer, heavier) = match observer.judge(a, b) {
        PairAnswer::HeavierIsA => (TrialAnswer::Heaviest { cube: 0 }, Some(0)),
        PairAnswer::HeavierIsB => (TrialAnswer::Heaviest { cube: 1 }, Some(1)),
        PairAnswer::NoDifference => (TrialAnswer::NoDifference, None),
    };
    let perceived = heavier == Some(comparison_slot);
    Ok(ComparisonTrial {
        record: TrialRecord {
            trial_id,
            task: TaskKind::Staircase,
            condition: Condition::Decoupled,
            arrangement_seed,
            reference_mass: Some(state.reference_mass),
            masses,
            peak_signals: outcome.peaks,
            answer,
            correct: perceived,
            wall_time: outcome.duration,
        },
        answer: if perceived { StaircaseAnswer::Perceived } else { StaircaseAnswer::NotPerceived },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterleavedRun {
    pub results: Vec<JndResult>,
    pub staircases: Vec<StaircaseState>,
    /// Every trial in the order it ran.
    pub records: Vec<TrialRecord>,
}

/// Runs staircases with randomly interleaved trials until all finish.
///
/// Draw order on the seeded stream, per trial: staircase choice (only when
/// more than one is unfinished), arrangement seed, observer noise.
pub fn run_interleaved(scenario: &Scenario, mut staircases: Vec<StaircaseState>, observer: &ObserverModel, seed: u64) -> Result<InterleavedRun> {
    if staircases.is_empty() {
        return Err(Error::InvalidArgument("at least one staircase is required".into()));
    }
    observer.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    loop {
        let open: Vec<usize> = (0..staircases.len()).filter(|&i| !staircases[i].finished).collect();
        let pick = match open.len() {
            0 => break,
            1 => open[0],
            n => open[rng.random_range(0..n)],
        };
        let arrangement: u64 = rng.random();
        let trial_id = records.len() as u64 + 1;
        let trial = run_comparison_trial(scenario, &staircases[pick], observer, arrangement, trial_id, &mut rng)?;
        staircases[pick].update(trial.answer)?;
        staircases[pick].record(trial.record.clone());
        records.push(trial.record);
    }
    let results = staircases.iter().map(jnd_estimate).collect::<Result<Vec<_>>>()?;
    Ok(InterleavedRun { results, staircases, records })
}

/// Interleaved staircases starting from the standard parameters.
pub fn run_interleaved_staircases(scenario: &Scenario, references: &[f64], observer: &ObserverModel, seed: u64) -> Result<InterleavedRun> {
    let states = references.iter().map(|&r| staircase_init(r)).collect::<Result<Vec<_>>>()?;
    run_interleaved(scenario, states, observer, seed)
}
