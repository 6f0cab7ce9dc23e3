use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::observer::{ObserverModel, PairAnswer};
use super::records::{RankLabel, TaskKind, TrialAnswer, TrialRecord};
use super::trial::run_push_trial;
use crate::decoupling::Condition;
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Noise for a trial comes from its own stream so the arrangement and the
/// observer never share draws.
fn noise_rng(arrangement_seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(arrangement_seed);
    rng.set_stream(1);
    rng
}

/// Orders perceived signals into an answer. Any indistinguishable pair
/// gives "don't know".
pub fn answer_from_signals(observer: &ObserverModel, perceived: &[f64]) -> TrialAnswer {
    let n = perceived.len();
    let mut wins = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            match observer.judge(perceived[i], perceived[j]) {
                PairAnswer::HeavierIsA => wins[i] += 1,
                PairAnswer::HeavierIsB => wins[j] += 1,
                PairAnswer::NoDifference => return TrialAnswer::DontKnow,
            }
        }
    }
    if n == 2 {
        return TrialAnswer::Heaviest { cube: if wins[0] > wins[1] { 0 } else { 1 } };
    }
    let labels = wins
        .iter()
        .map(|&w| match w {
            0 => RankLabel::Light,
            1 => RankLabel::Medium,
            _ => RankLabel::Heavy,
        })
        .collect();
    TrialAnswer::Ranking { labels }
}

/// One sorting trial: the scenario's cubes in the order given by
/// `scenario.cubes.arrangement_seed`, each pushed once, then ranked by the
/// observer.
pub fn run_sorting_trial(scenario: &Scenario, observer: &ObserverModel, condition: Condition, trial_id: u64) -> Result<TrialRecord> {
    let n = scenario.cubes.masses.len();
    if n != 2 && n != 3 {
        return Err(Error::InvalidArgument(format!("sorting needs 2 or 3 cubes, got {n}")));
    }
    observer.validate()?;
    let seed = scenario.cubes.arrangement_seed.unwrap_or(0);
    let masses = scenario.cubes.arranged();
    let outcome = run_push_trial(scenario, &masses, condition)?;
    let mut rng = noise_rng(seed);
    let perceived: Vec<f64> = outcome.peaks.iter().map(|&s| observer.effective(s, &mut rng)).collect();
    let answer = answer_from_signals(observer, &perceived);
    Ok(TrialRecord {
        trial_id,
        task: TaskKind::Sorting,
        condition,
        arrangement_seed: seed,
        reference_mass: None,
        correct: answer.is_correct(&masses),
        masses,
        peak_signals: outcome.peaks,
        answer,
        wall_time: outcome.duration,
    })
}

/// `trials` sorting trials with arrangement seeds drawn from `seed`. Trials
/// run in parallel; records come back in trial order.
pub fn run_sorting_batch(
    scenario: &Scenario,
    observer: &ObserverModel,
    condition: Condition,
    trials: usize,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..trials).map(|_| master.random()).collect();
    seeds
        .into_par_iter()
        .enumerate()
        .map(|(i, arrangement)| {
            let mut s = scenario.clone();
            s.cubes.arrangement_seed = Some(arrangement);
            run_sorting_trial(&s, observer, condition, i as u64 + 1)
        })
        .collect()
}
