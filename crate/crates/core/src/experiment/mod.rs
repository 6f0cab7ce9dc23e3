//! Automated sorting and staircase experiments with a synthetic observer.

mod interleaved;
mod observer;
mod records;
mod sorting;
mod staircase;
mod trial;

pub use interleaved::{run_comparison_trial, run_interleaved, run_interleaved_staircases, ComparisonTrial, InterleavedRun};
pub use observer::{observer_perceive_pair, ObserverModel, PairAnswer};
pub use records::{
    trials_csv_string, write_trials_csv, ConditionSummary, Manifest, RankLabel, Report, TaskKind, TrialAnswer, TrialRecord,
    TRIAL_CSV_HEADER,
};
pub use sorting::{answer_from_signals, run_sorting_batch, run_sorting_trial};
pub use staircase::{
    jnd_estimate, run_staircase, staircase_init, JndResult, StaircaseAnswer, StaircaseState, DISCARDED_REVERSALS,
    INITIAL_PARAMETERS, MIN_DIFFERENCE, REVERSALS_TO_FINISH,
};
pub use trial::{play, push_params, run_push_trial, standard_push, PeakTracker, PushOutcome};
