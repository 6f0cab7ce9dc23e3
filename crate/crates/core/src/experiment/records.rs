use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::staircase::JndResult;
use crate::decoupling::Condition;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Sorting,
    Staircase,
}

impl TaskKind {
    pub fn label(self) -> &'static str {
        match self {
            TaskKind::Sorting => "sorting",
            TaskKind::Staircase => "staircase",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankLabel {
    Light,
    Medium,
    Heavy,
}

impl RankLabel {
    pub fn name(self) -> &'static str {
        match self {
            RankLabel::Light => "light",
            RankLabel::Medium => "medium",
            RankLabel::Heavy => "heavy",
        }
    }
}

/// What the participant answered.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TrialAnswer {
    /// One label per cube, in row order.
    Ranking { labels: Vec<RankLabel> },
    /// Row index of the cube judged heaviest.
    Heaviest { cube: usize },
    NoDifference,
    DontKnow,
}

impl fmt::Display for TrialAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrialAnswer::Ranking { labels } => {
                let names: Vec<&str> = labels.iter().map(|l| l.name()).collect();
                write!(f, "ranking:{}", names.join(";"))
            }
            TrialAnswer::Heaviest { cube } => write!(f, "heaviest:{cube}"),
            TrialAnswer::NoDifference => f.write_str("no-difference"),
            TrialAnswer::DontKnow => f.write_str("dont-know"),
        }
    }
}

impl TrialAnswer {
    pub fn is_answered(&self) -> bool {
        !matches!(self, TrialAnswer::DontKnow | TrialAnswer::NoDifference)
    }

    /// Whether the answer matches the masses (row order).
    pub fn is_correct(&self, masses: &[f64]) -> bool {
        match self {
            TrialAnswer::Ranking { labels } => {
                if labels.len() != masses.len() || masses.len() != 3 {
                    return false;
                }
                let mut order: Vec<usize> = (0..3).collect();
                order.sort_by(|&a, &b| masses[a].total_cmp(&masses[b]));
                let expected = [RankLabel::Light, RankLabel::Medium, RankLabel::Heavy];
                order.iter().zip(expected).all(|(&i, l)| labels[i] == l)
            }
            TrialAnswer::Heaviest { cube } => {
                let heaviest = masses.iter().cloned().fold(f64::MIN, f64::max);
                masses.get(*cube).is_some_and(|&m| m == heaviest) && masses.iter().filter(|&&m| m == heaviest).count() == 1
            }
            TrialAnswer::NoDifference | TrialAnswer::DontKnow => false,
        }
    }
}

/// One sorting or comparison trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub task: TaskKind,
    pub condition: Condition,
    /// Seed of the random cube arrangement.
    pub arrangement_seed: u64,
    /// Staircase reference mass, kg.
    pub reference_mass: Option<f64>,
    /// Masses in row order, kg.
    pub masses: Vec<f64>,
    /// Peak clone displacement while touching each cube, m, row order.
    pub peak_signals: Vec<f64>,
    pub answer: TrialAnswer,
    pub correct: bool,
    /// Simulated duration of the trial, s.
    pub wall_time: f64,
}

/// Column names of the trial CSV, in order.
pub const TRIAL_CSV_HEADER: [&str; 10] = [
    "trial_id",
    "task",
    "condition",
    "arrangement_seed",
    "reference_kg",
    "masses_kg",
    "peak_signals_m",
    "answer",
    "correct",
    "wall_time_s",
];

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

impl TrialRecord {
    pub fn csv_row(&self) -> [String; 10] {
        [
            self.trial_id.to_string(),
            self.task.label().to_string(),
            self.condition.label().to_string(),
            self.arrangement_seed.to_string(),
            self.reference_mass.map(|m| m.to_string()).unwrap_or_default(),
            join(&self.masses),
            join(&self.peak_signals),
            self.answer.to_string(),
            self.correct.to_string(),
            self.wall_time.to_string(),
        ]
    }
}

pub fn write_trials_csv<W: Write>(writer: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRIAL_CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

pub fn trials_csv_string(records: &[TrialRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_trials_csv(&mut buf, records)?;
    String::from_utf8(buf).map_err(|e| Error::State(e.to_string()))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: Condition,
    pub trials: usize,
    pub answered: usize,
    pub correct: usize,
    /// correct / trials.
    pub success_rate: f64,
}

/// Summary written next to the trial CSV.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub sorting: Vec<ConditionSummary>,
    pub staircases: Vec<JndResult>,
}

impl Report {
    pub fn from_records(records: &[TrialRecord], staircases: Vec<JndResult>) -> Report {
        let mut sorting: Vec<ConditionSummary> = Vec::new();
        for r in records.iter().filter(|r| r.task == TaskKind::Sorting) {
            let idx = match sorting.iter().position(|s| s.condition == r.condition) {
                Some(i) => i,
                None => {
                    sorting.push(ConditionSummary { condition: r.condition, ..Default::default() });
                    sorting.len() - 1
                }
            };
            let s = &mut sorting[idx];
            s.trials += 1;
            s.answered += usize::from(r.answer.is_answered());
            s.correct += usize::from(r.correct);
        }
        for s in &mut sorting {
            s.success_rate = s.correct as f64 / s.trials as f64;
        }
        Report { sorting, staircases }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    /// Fully resolved configuration of the run.
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, seed: Option<u64>, config: serde_json::Value) -> Self {
        Manifest {
            tool: "decouple".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config,
            outputs: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}
