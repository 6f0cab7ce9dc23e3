//! Per-connection session state. Synchronous and free of networking so it
//! can be driven directly in tests; the server only feeds it messages and
//! clock ticks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use decouple_core::dynamics::{BodyId, World};
use decouple_core::experiment::{
    jnd_estimate, staircase_init, JndResult, PeakTracker, RankLabel, StaircaseAnswer, StaircaseState, TaskKind, TrialAnswer, TrialRecord,
};
use decouple_core::math::Pose;
use decouple_core::scenario::{CubeLayout, Scenario};
use decouple_core::{Condition, Error, Result};

use crate::protocol::{snapshot_for_client, AnswerPayload, ClientMessage, ServerMessage, StaircaseInfo, TaskName, PROTOCOL_VERSION};

/// Default staircase references, kg.
pub const DEFAULT_REFERENCES: [f64; 3] = [0.015, 0.2, 0.8];

/// How simulated time advances.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pacing {
    /// Fixed steps against the wall clock; the last pose is held between
    /// updates.
    #[default]
    Realtime,
    /// Steps only when a pose update arrives, up to its timestamp. Physics
    /// then depends on the pose stream alone, never on delivery timing.
    ClientClock,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionConfig {
    pub scenario: Scenario,
    /// Seeds arrangements and staircase interleaving.
    pub seed: u64,
    /// World-state messages per simulated second.
    pub stream_rate: f64,
    /// Time constant of exponential pose smoothing, s; `None` disables it.
    pub smoothing: Option<f64>,
    pub pacing: Pacing,
}

impl SessionConfig {
    pub fn new(scenario: Scenario) -> Self {
        SessionConfig { scenario, seed: 0, stream_rate: 60.0, smoothing: None, pacing: Pacing::Realtime }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if !(self.stream_rate > 0.0) || !self.stream_rate.is_finite() {
            return Err(Error::InvalidArgument("stream rate must be positive".into()));
        }
        if let Some(tau) = self.smoothing {
            if !(tau > 0.0) || !tau.is_finite() {
                return Err(Error::InvalidArgument("smoothing time constant must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug)]
struct ActiveTrial {
    trial_id: u64,
    arrangement_seed: u64,
    masses: Vec<f64>,
    cubes: Vec<BodyId>,
    tracker: PeakTracker,
}

#[derive(Debug)]
enum Task {
    Idle,
    Free,
    Sorting { trial: ActiveTrial, labels: Vec<Option<RankLabel>> },
    Staircase { states: Vec<StaircaseState>, current: usize, comparison_slot: usize, trial: ActiveTrial, records: Vec<TrialRecord> },
}

pub struct Session {
    config: SessionConfig,
    scenario_digest: String,
    /// Scenario of the running task, overrides applied.
    scenario: Scenario,
    world: World,
    task: Task,
    rng: ChaCha8Rng,
    greeted: bool,
    last_client_seq: Option<u64>,
    out_seq: u64,
    next_trial_id: u64,
    records: Vec<TrialRecord>,
    staircases: Vec<StaircaseState>,
    target: Option<Pose>,
    filtered: Option<Pose>,
    clock_origin: Option<f64>,
    steps: u64,
    frame_every: u64,
    physics: Sha256,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self> {
        config.validate()?;
        let dt = config.scenario.world.timestep;
        let frame_every = ((1.0 / (config.stream_rate * dt)).round() as u64).max(1);
        Ok(Session {
            scenario_digest: config.scenario.digest(),
            scenario: config.scenario.clone(),
            world: World::new(config.scenario.world)?,
            task: Task::Idle,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            greeted: false,
            last_client_seq: None,
            out_seq: 0,
            next_trial_id: 1,
            records: Vec::new(),
            staircases: Vec::new(),
            target: None,
            filtered: None,
            clock_origin: None,
            steps: 0,
            frame_every,
            physics: Sha256::new(),
            config,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn scenario_digest(&self) -> &str {
        &self.scenario_digest
    }

    /// Simulated session time, s.
    pub fn clock(&self) -> f64 {
        self.steps as f64 * self.config.scenario.world.timestep
    }

    /// Every completed trial, in order.
    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    /// Staircases of the current or last staircase task.
    pub fn staircases(&self) -> &[StaircaseState] {
        match &self.task {
            Task::Staircase { states, .. } => states,
            _ => &self.staircases,
        }
    }

    pub fn active_trial(&self) -> Option<u64> {
        match &self.task {
            Task::Sorting { trial, .. } | Task::Staircase { trial, .. } => Some(trial.trial_id),
            _ => None,
        }
    }

    fn seq(&mut self) -> u64 {
        self.out_seq += 1;
        self.out_seq
    }

    fn error(&mut self, message: impl Into<String>) -> ServerMessage {
        let message = message.into();
        log::debug!("session error: {message}");
        ServerMessage::Error { seq: self.seq(), message }
    }

    /// Error reply for input rejected before it reaches the session.
    pub fn reject(&mut self, message: &str) -> ServerMessage {
        self.error(message)
    }

    pub fn world_state(&mut self) -> ServerMessage {
        let seq = self.seq();
        snapshot_for_client(&self.world, seq)
    }

    /// Parses and handles one text frame. Malformed input produces an error
    /// reply and leaves the session untouched.
    pub fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        match serde_json::from_str::<ClientMessage>(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => vec![self.error(format!("malformed message: {e}"))],
        }
    }

    /// Handles one client message. Messages whose `seq` is not above the
    /// last one seen are dropped without reply, so resending is harmless.
    pub fn handle(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        let seq = msg.seq();
        if self.last_client_seq.is_some_and(|last| seq <= last) {
            log::debug!("dropping stale message seq {seq}");
            return Vec::new();
        }
        self.last_client_seq = Some(seq);
        if !self.greeted && !matches!(msg, ClientMessage::Hello { .. }) {
            return vec![self.error("expected hello first")];
        }
        let out = match msg {
            ClientMessage::Hello { protocol_version, .. } => self.hello(protocol_version),
            ClientMessage::PoseUpdate { t, position, orientation, .. } => self.pose_update(t, Pose::new(position, orientation)),
            ClientMessage::StartTask { task, overrides, references, .. } => self.start_task(task, &overrides, references),
            ClientMessage::Answer { trial_id, payload, .. } => self.answer(trial_id, payload),
        };
        out.unwrap_or_else(|e| vec![self.error(e.to_string())])
    }

    fn hello(&mut self, version: u32) -> Result<Vec<ServerMessage>> {
        if version != PROTOCOL_VERSION {
            return Err(Error::InvalidArgument(format!("protocol version {version} not supported; server speaks {PROTOCOL_VERSION}")));
        }
        self.greeted = true;
        Ok(vec![ServerMessage::Welcome {
            seq: self.seq(),
            protocol_version: PROTOCOL_VERSION,
            scenario_digest: self.scenario_digest.clone(),
            timestep: self.config.scenario.world.timestep,
            stream_rate: self.config.stream_rate,
        }])
    }

    fn pose_update(&mut self, t: f64, pose: Pose) -> Result<Vec<ServerMessage>> {
        if !t.is_finite() || !pose.is_finite() || !(pose.orientation.norm() > 0.5) {
            return Err(Error::InvalidArgument("pose update must be finite with a unit orientation".into()));
        }
        let pose = Pose::new(pose.position, pose.orientation.renormalize());
        self.target = Some(pose);
        // Unsmoothed, a world built before the next step starts here.
        if self.config.smoothing.is_none() || self.filtered.is_none() {
            self.filtered = Some(pose);
        }
        match self.config.pacing {
            Pacing::Realtime => Ok(Vec::new()),
            Pacing::ClientClock => {
                let origin = *self.clock_origin.get_or_insert(t);
                Ok(self.advance_to(t - origin))
            }
        }
    }

    /// Steps until the session clock reaches `t`.
    pub fn advance_to(&mut self, t: f64) -> Vec<ServerMessage> {
        let dt = self.config.scenario.world.timestep;
        let mut out = Vec::new();
        while self.clock() < t - 1e-3 * dt {
            out.extend(self.step());
        }
        out
    }

    /// One physics step. Returns a world-state message on stream ticks, or
    /// an error if the world diverged (the task's world is then rebuilt).
    pub fn step(&mut self) -> Option<ServerMessage> {
        let dt = self.config.scenario.world.timestep;
        if let (Some(target), Some(filtered)) = (self.target, self.filtered) {
            let next = match self.config.smoothing {
                None => target,
                Some(tau) => {
                    let a = -(-dt / tau).exp_m1();
                    Pose::new(
                        filtered.position + (target.position - filtered.position) * a,
                        filtered.orientation.slerp(target.orientation, a),
                    )
                }
            };
            self.filtered = Some(next);
            if self.world.effector().is_some() {
                if let Err(e) = self.world.drive_effector(next) {
                    return Some(self.error(e.to_string()));
                }
            }
        }
        let report = match self.world.step(&[]) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("world step failed: {e}");
                let msg = self.error(format!("simulation reset: {e}"));
                if let Err(e) = self.rebuild_world() {
                    log::warn!("rebuild failed: {e}");
                }
                return Some(msg);
            }
        };
        self.steps += 1;
        if let Task::Sorting { trial, .. } | Task::Staircase { trial, .. } = &mut self.task {
            trial.tracker.observe(&report);
        }
        self.hash_step(report.decoupling);
        if self.steps % self.frame_every == 0 {
            Some(self.world_state())
        } else {
            None
        }
    }

    fn hash_step(&mut self, decoupling: f64) {
        let h = &mut self.physics;
        h.update(self.world.step_count().to_le_bytes());
        h.update(decoupling.to_le_bytes());
        for b in self.world.bodies() {
            let q: [f64; 4] = b.pose.orientation.into();
            for v in b.pose.position.to_array().into_iter().chain(q).chain(b.linear_velocity.to_array()).chain(b.angular_velocity.to_array()) {
                h.update(v.to_le_bytes());
            }
        }
    }

    fn take_digest(&mut self) -> String {
        hex::encode(std::mem::take(&mut self.physics).finalize())
    }

    fn effector_start(&self, scenario: &Scenario) -> Pose {
        self.filtered.unwrap_or_else(|| scenario.effector_home())
    }

    fn rebuild_world(&mut self) -> Result<()> {
        let start = self.effector_start(&self.scenario);
        match &mut self.task {
            Task::Idle => self.world = World::new(self.scenario.world)?,
            Task::Free => self.world = self.scenario.build_world(start)?.0,
            Task::Sorting { trial, .. } | Task::Staircase { trial, .. } => {
                let (world, ids) = self.scenario.build_world(start)?;
                trial.tracker = PeakTracker::new(ids.clone());
                trial.cubes = ids;
                self.world = world;
            }
        }
        Ok(())
    }

    fn start_task(&mut self, task: TaskName, overrides: &serde_json::Value, references: Option<Vec<f64>>) -> Result<Vec<ServerMessage>> {
        let scenario = apply_overrides(&self.config.scenario, overrides)?;
        if let Task::Sorting { trial, .. } | Task::Staircase { trial, .. } = &self.task {
            log::info!("trial {} abandoned by a new task", trial.trial_id);
        }
        self.physics = Sha256::new();
        match task {
            TaskName::Free => {
                self.world = scenario.build_world(self.effector_start(&scenario))?.0;
                self.scenario = scenario;
                self.task = Task::Free;
                Ok(vec![self.world_state()])
            }
            TaskName::Sorting => {
                let n = scenario.cubes.masses.len();
                if !(n == 2 || n == 3) {
                    return Err(Error::InvalidArgument(format!("sorting needs 2 or 3 cubes, got {n}")));
                }
                let seed = match scenario.cubes.arrangement_seed {
                    Some(s) => s,
                    None => self.rng.random(),
                };
                let mut scenario = scenario;
                scenario.cubes.arrangement_seed = Some(seed);
                let trial = self.open_trial(&scenario, seed)?;
                self.scenario = scenario;
                self.task = Task::Sorting { trial, labels: vec![None; n] };
                Ok(vec![self.prompt()])
            }
            TaskName::Staircase => {
                let refs = references.unwrap_or_else(|| DEFAULT_REFERENCES.to_vec());
                if refs.is_empty() {
                    return Err(Error::InvalidArgument("at least one reference is required".into()));
                }
                let states = refs.iter().map(|&r| staircase_init(r)).collect::<Result<Vec<_>>>()?;
                let mut scenario = scenario;
                scenario.condition = Condition::Decoupled;
                self.scenario = scenario;
                self.next_comparison(states, Vec::new())
            }
        }
    }

    fn open_trial(&mut self, scenario: &Scenario, arrangement_seed: u64) -> Result<ActiveTrial> {
        let (world, cubes) = scenario.build_world(self.effector_start(scenario))?;
        self.world = world;
        let trial_id = self.next_trial_id;
        self.next_trial_id += 1;
        Ok(ActiveTrial { trial_id, arrangement_seed, masses: scenario.cubes.arranged(), tracker: PeakTracker::new(cubes.clone()), cubes })
    }

    /// Draws the next staircase and arrangement (same order as the offline
    /// harness) and builds its world, or reports the results when all are
    /// finished.
    fn next_comparison(&mut self, states: Vec<StaircaseState>, records: Vec<TrialRecord>) -> Result<Vec<ServerMessage>> {
        let open: Vec<usize> = (0..states.len()).filter(|&i| !states[i].finished).collect();
        let current = match open.len() {
            0 => {
                let jnd = states.iter().map(jnd_estimate).collect::<Result<Vec<_>>>()?;
                self.staircases = states;
                self.task = Task::Idle;
                let physics_digest = self.take_digest();
                return Ok(vec![ServerMessage::Result { seq: self.seq(), records, jnd, physics_digest }]);
            }
            1 => open[0],
            n => open[self.rng.random_range(0..n)],
        };
        let arrangement_seed: u64 = self.rng.random();
        let state = &states[current];
        self.scenario.cubes = CubeLayout {
            masses: vec![state.reference_mass, state.comparison_mass],
            arrangement_seed: Some(arrangement_seed),
            ..self.scenario.cubes.clone()
        };
        let scenario = self.scenario.clone();
        let trial = self.open_trial(&scenario, arrangement_seed)?;
        let m = &trial.masses;
        let comparison_slot = if m[0] == state.comparison_mass && m[1] != state.comparison_mass { 0 } else { 1 };
        self.task = Task::Staircase { states, current, comparison_slot, trial, records };
        Ok(vec![self.prompt()])
    }

    fn prompt(&mut self) -> ServerMessage {
        let seq = self.seq();
        match &self.task {
            Task::Sorting { trial, labels } => ServerMessage::TrialPrompt {
                seq,
                trial_id: trial.trial_id,
                task: TaskName::Sorting,
                cubes: trial.cubes.clone(),
                labels: Some(labels.clone()),
                staircase: None,
            },
            Task::Staircase { states, current, trial, .. } => {
                let s = &states[*current];
                ServerMessage::TrialPrompt {
                    seq,
                    trial_id: trial.trial_id,
                    task: TaskName::Staircase,
                    cubes: trial.cubes.clone(),
                    labels: None,
                    staircase: Some(StaircaseInfo {
                        reference_mass: s.reference_mass,
                        comparison_mass: s.comparison_mass,
                        step_size: s.step_size,
                        reversal_count: s.reversal_count,
                    }),
                }
            }
            _ => unreachable!("prompt without a trial"),
        }
    }

    fn answer(&mut self, trial_id: u64, payload: AnswerPayload) -> Result<Vec<ServerMessage>> {
        match self.active_trial() {
            Some(id) if id == trial_id => {}
            Some(id) => return Err(Error::InvalidArgument(format!("answer for trial {trial_id}, but trial {id} is active"))),
            None => return Err(Error::InvalidArgument("no trial is active".into())),
        }
        let wall_time = self.world.time();
        let task = std::mem::replace(&mut self.task, Task::Idle);
        match task {
            Task::Sorting { trial, mut labels } => {
                let n = labels.len();
                let answer = match payload {
                    AnswerPayload::Label { cube, label } => {
                        let check = if n != 3 {
                            Err("labels apply to three-cube trials".to_string())
                        } else if cube >= n {
                            Err(format!("cube {cube} out of range"))
                        } else {
                            Ok(())
                        };
                        if let Err(message) = check {
                            self.task = Task::Sorting { trial, labels };
                            return Err(Error::InvalidArgument(message));
                        }
                        // One cube per label.
                        labels.iter_mut().filter(|l| **l == Some(label)).for_each(|l| *l = None);
                        labels[cube] = Some(label);
                        self.task = Task::Sorting { trial, labels };
                        return Ok(vec![self.prompt()]);
                    }
                    AnswerPayload::Validate => match labels.iter().copied().collect::<Option<Vec<_>>>() {
                        Some(labels) if n == 3 => TrialAnswer::Ranking { labels },
                        _ => {
                            self.task = Task::Sorting { trial, labels };
                            return Err(Error::InvalidArgument("every cube needs a label before validating".into()));
                        }
                    },
                    AnswerPayload::DontKnow => TrialAnswer::DontKnow,
                    AnswerPayload::Heaviest { cube } if cube < n => TrialAnswer::Heaviest { cube },
                    other => {
                        self.task = Task::Sorting { trial, labels };
                        return Err(Error::InvalidArgument(format!("answer {other:?} not valid for this sorting trial")));
                    }
                };
                let correct = answer.is_correct(&trial.masses);
                let record = TrialRecord {
                    trial_id: trial.trial_id,
                    task: TaskKind::Sorting,
                    condition: self.scenario.condition,
                    arrangement_seed: trial.arrangement_seed,
                    reference_mass: None,
                    masses: trial.masses,
                    peak_signals: trial.tracker.peaks().to_vec(),
                    answer,
                    correct,
                    wall_time,
                };
                self.records.push(record.clone());
                let physics_digest = self.take_digest();
                Ok(vec![ServerMessage::Result { seq: self.seq(), records: vec![record], jnd: Vec::new(), physics_digest }])
            }
            Task::Staircase { mut states, current, comparison_slot, trial, mut records } => {
                let (answer, perceived) = match payload {
                    AnswerPayload::Heaviest { cube } if cube < 2 => (TrialAnswer::Heaviest { cube }, cube == comparison_slot),
                    AnswerPayload::NoDifference => (TrialAnswer::NoDifference, false),
                    other => {
                        self.task = Task::Staircase { states, current, comparison_slot, trial, records };
                        return Err(Error::InvalidArgument(format!("answer {other:?} not valid for a staircase trial")));
                    }
                };
                let record = TrialRecord {
                    trial_id: trial.trial_id,
                    task: TaskKind::Staircase,
                    condition: Condition::Decoupled,
                    arrangement_seed: trial.arrangement_seed,
                    reference_mass: Some(states[current].reference_mass),
                    masses: trial.masses,
                    peak_signals: trial.tracker.peaks().to_vec(),
                    answer,
                    correct: perceived,
                    wall_time,
                };
                let state = &mut states[current];
                state.update(if perceived { StaircaseAnswer::Perceived } else { StaircaseAnswer::NotPerceived })?;
                state.record(record.clone());
                self.records.push(record.clone());
                records.push(record);
                self.next_comparison(states, records)
            }
            other => {
                self.task = other;
                Err(Error::State("no trial is active".into()))
            }
        }
    }

    /// JND estimates of the finished staircases so far.
    pub fn jnd_results(&self) -> Vec<JndResult> {
        self.staircases().iter().filter(|s| s.finished).filter_map(|s| jnd_estimate(s).ok()).collect()
    }
}

/// Merges `overrides` (a JSON object) over `base` and re-validates. `null`
/// removes a key, objects merge recursively, anything else replaces.
pub fn apply_overrides(base: &Scenario, overrides: &serde_json::Value) -> Result<Scenario> {
    if overrides.is_null() {
        return Ok(base.clone());
    }
    if !overrides.is_object() {
        return Err(Error::InvalidArgument("overrides must be a JSON object".into()));
    }
    let mut doc = serde_json::to_value(base)?;
    merge(&mut doc, overrides);
    Scenario::from_json(&doc.to_string())
}

fn merge(target: &mut serde_json::Value, patch: &serde_json::Value) {
    use serde_json::Value;
    match (target, patch) {
        (Value::Object(t), Value::Object(p)) => {
            for (k, v) in p {
                if v.is_null() {
                    t.remove(k);
                } else {
                    merge(t.entry(k.clone()).or_insert(Value::Null), v);
                }
            }
        }
        (t, p) => *t = p.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn hello(s: &mut Session) {
        let out = s.handle(ClientMessage::Hello { seq: 1, protocol_version: PROTOCOL_VERSION });
        assert!(matches!(out[0], ServerMessage::Welcome { .. }));
    }

    #[test]
    fn overrides_merge_and_validate() {
        let base = Scenario::default();
        let s = apply_overrides(&base, &json!({"cubes": {"masses": [0.1, 0.3]}, "condition": "C1"})).unwrap();
        assert_eq!(s.cubes.masses, vec![0.1, 0.3]);
        assert_eq!(s.cubes.side, base.cubes.side);
        assert_eq!(s.condition, Condition::Coupled);
        assert!(apply_overrides(&base, &json!({"cubes": {"masses": [-1.0]}})).is_err());
        assert!(apply_overrides(&base, &json!({"bogus": 1})).is_err());
        assert!(apply_overrides(&base, &json!([1])).is_err());
    }

    #[test]
    fn hello_is_required_and_versioned() {
        let mut s = Session::new(SessionConfig::new(Scenario::default())).unwrap();
        let out = s.handle_text(r#"{"type":"start_task","seq":1,"task":"free"}"#);
        assert!(matches!(out[0], ServerMessage::Error { .. }));
        let out = s.handle(ClientMessage::Hello { seq: 2, protocol_version: 99 });
        assert!(matches!(out[0], ServerMessage::Error { .. }));
        let out = s.handle(ClientMessage::Hello { seq: 3, protocol_version: PROTOCOL_VERSION });
        assert!(matches!(&out[0], ServerMessage::Welcome { scenario_digest, .. } if scenario_digest == &Scenario::default().digest()));
    }

    #[test]
    fn labels_are_mutually_exclusive() {
        let mut s = Session::new(SessionConfig::new(Scenario::default())).unwrap();
        hello(&mut s);
        let out = s.handle(ClientMessage::StartTask { seq: 2, task: TaskName::Sorting, overrides: json!(null), references: None });
        let ServerMessage::TrialPrompt { trial_id, .. } = out[0] else { panic!("{out:?}") };
        let label = |seq, cube, label| ClientMessage::Answer { seq, trial_id, payload: AnswerPayload::Label { cube, label } };
        s.handle(label(3, 0, RankLabel::Heavy));
        let out = s.handle(label(4, 2, RankLabel::Heavy));
        let ServerMessage::TrialPrompt { labels: Some(labels), .. } = &out[0] else { panic!("{out:?}") };
        assert_eq!(labels, &vec![None, None, Some(RankLabel::Heavy)]);
        let out = s.handle(ClientMessage::Answer { seq: 5, trial_id, payload: AnswerPayload::Validate });
        assert!(matches!(out[0], ServerMessage::Error { .. }), "incomplete labels must not validate");
        assert_eq!(s.active_trial(), Some(trial_id));
    }

    #[test]
    fn smoothing_converges_on_a_held_pose() {
        let mut cfg = SessionConfig::new(Scenario::default());
        cfg.smoothing = Some(0.02);
        let mut s = Session::new(cfg).unwrap();
        hello(&mut s);
        s.handle(ClientMessage::StartTask { seq: 2, task: TaskName::Free, overrides: json!({"cubes": {"masses": [0.2]}}), references: None });
        let home = Scenario::default().effector_home();
        s.handle(ClientMessage::PoseUpdate { seq: 3, t: 0.0, position: home.position, orientation: home.orientation });
        let goal = home.position + decouple_core::Vec3::new(0.0, -0.02, 0.0);
        s.handle(ClientMessage::PoseUpdate { seq: 4, t: 0.0, position: goal, orientation: home.orientation });
        s.step();
        let first = s.world().effector().unwrap().real_pose().position;
        assert!((first - home.position).norm() < 0.01, "smoothed pose must not jump");
        for _ in 0..240 {
            s.step();
        }
        assert!((s.world().effector().unwrap().real_pose().position - goal).norm() < 1e-6);
    }
}
