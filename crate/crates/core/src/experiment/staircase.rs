use serde::{Deserialize, Serialize};

use super::records::TrialRecord;
use crate::error::{Error, Result};

pub const REVERSALS_TO_FINISH: u32 = 10;
/// Reversals skipped by the JND estimate as range finding.
pub const DISCARDED_REVERSALS: usize = 2;
/// Smallest allowed comparison-minus-reference difference, kg.
pub const MIN_DIFFERENCE: f64 = 0.001;

/// Initial (difference, step) per reference mass, kg.
pub const INITIAL_PARAMETERS: [(f64, f64, f64); 3] = [(0.015, 0.175, 0.050), (0.200, 0.600, 0.150), (0.800, 0.700, 0.200)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StaircaseAnswer {
    Perceived,
    NotPerceived,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaircaseState {
    pub reference_mass: f64,
    pub comparison_mass: f64,
    pub step_size: f64,
    pub initial_step: f64,
    pub reversal_count: u32,
    pub last_answer: Option<StaircaseAnswer>,
    /// Comparison minus reference at each reversal, kg.
    pub reversal_differences: Vec<f64>,
    pub trial_log: Vec<TrialRecord>,
    pub finished: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JndResult {
    pub reference_mass: f64,
    pub jnd: f64,
    pub reversal_differences: Vec<f64>,
}

/// Staircase with the standard starting point for `reference` (15, 200 or
/// 800 g).
pub fn staircase_init(reference: f64) -> Result<StaircaseState> {
    INITIAL_PARAMETERS
        .iter()
        .find(|(r, _, _)| (r - reference).abs() < 1e-9)
        .map(|&(_, diff, step)| StaircaseState::with_parameters(reference, diff, step))
        .unwrap_or_else(|| {
            Err(Error::InvalidArgument(format!(
                "no standard staircase for reference {} g; give an initial difference and step",
                reference * 1e3
            )))
        })
}

impl StaircaseState {
    pub fn with_parameters(reference: f64, initial_difference: f64, initial_step: f64) -> Result<Self> {
        if !(reference > 0.0) || !(initial_difference > 0.0) || !(initial_step > 0.0) {
            return Err(Error::InvalidArgument("reference, difference and step must be positive".into()));
        }
        Ok(StaircaseState {
            reference_mass: reference,
            comparison_mass: reference + initial_difference,
            step_size: initial_step,
            initial_step,
            reversal_count: 0,
            last_answer: None,
            reversal_differences: Vec::new(),
            trial_log: Vec::new(),
            finished: false,
        })
    }

    pub fn difference(&self) -> f64 {
        self.comparison_mass - self.reference_mass
    }

    /// Applies one answer about the current comparison.
    pub fn update(&mut self, answer: StaircaseAnswer) -> Result<()> {
        if self.finished {
            return Err(Error::State(format!("staircase at {} g already finished", self.reference_mass * 1e3)));
        }
        let difference = self.difference();
        if self.last_answer.is_some_and(|last| last != answer) {
            self.reversal_differences.push(difference);
            self.reversal_count += 1;
            if self.reversal_count % 2 == 0 {
                self.step_size /= 2.0;
            }
        }
        match answer {
            StaircaseAnswer::Perceived => self.comparison_mass -= self.step_size,
            StaircaseAnswer::NotPerceived => self.comparison_mass += self.step_size,
        }
        let floor = self.reference_mass + MIN_DIFFERENCE;
        if self.comparison_mass < floor {
            log::info!(
                "staircase at {} g: comparison {} g clamped to {} g",
                self.reference_mass * 1e3,
                self.comparison_mass * 1e3,
                floor * 1e3
            );
            self.comparison_mass = floor;
        }
        self.last_answer = Some(answer);
        self.finished = self.reversal_count >= REVERSALS_TO_FINISH;
        Ok(())
    }

    pub fn record(&mut self, trial: TrialRecord) {
        self.trial_log.push(trial);
    }
}

/// Mean reversal difference, skipping the first two.
pub fn jnd_estimate(state: &StaircaseState) -> Result<JndResult> {
    if !state.finished {
        return Err(Error::State(format!(
            "staircase at {} g has {} of {} reversals",
            state.reference_mass * 1e3,
            state.reversal_count,
            REVERSALS_TO_FINISH
        )));
    }
    let used = &state.reversal_differences[DISCARDED_REVERSALS..];
    Ok(JndResult {
        reference_mass: state.reference_mass,
        jnd: used.iter().sum::<f64>() / used.len() as f64,
        reversal_differences: state.reversal_differences.clone(),
    })
}

/// Drives a staircase to completion with an answer function of the
/// current comparison mass.
pub fn run_staircase(mut state: StaircaseState, mut answer: impl FnMut(&StaircaseState) -> StaircaseAnswer) -> Result<JndResult> {
    while !state.finished {
        let a = answer(&state);
        state.update(a)?;
    }
    jnd_estimate(&state)
}
