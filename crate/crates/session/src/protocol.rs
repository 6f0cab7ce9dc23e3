//! Wire format: one JSON object per WebSocket text frame, tagged by `type`.
//!
//! Units are SI (m, s, kg). Positions are `[x, y, z]`; orientations are
//! unit quaternions `[w, x, y, z]`. Every message carries `seq`, strictly
//! increasing per sender.

use serde::{Deserialize, Serialize};

use decouple_core::dynamics::{BodyId, BodyKind, BodyRole, World};
use decouple_core::experiment::{JndResult, RankLabel, TrialRecord};
use decouple_core::math::{Pose, UnitQuaternion, Vec3};
use decouple_core::Condition;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskName {
    Sorting,
    Staircase,
    Free,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnswerPayload {
    /// Sorting: label one cube (row index). A label already on another cube
    /// moves to this one.
    Label { cube: usize, label: RankLabel },
    /// Sorting: submit the current labels.
    Validate,
    /// Sorting: give up on this trial.
    DontKnow,
    /// Two-cube trials: the cube judged heavier.
    Heaviest { cube: usize },
    /// Staircase: no perceptible difference.
    NoDifference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Hello {
        seq: u64,
        protocol_version: u32,
    },
    PoseUpdate {
        seq: u64,
        /// Client clock, s.
        t: f64,
        position: Vec3,
        #[serde(default)]
        orientation: UnitQuaternion,
    },
    StartTask {
        seq: u64,
        task: TaskName,
        /// JSON merged over the session scenario before the task starts.
        #[serde(default)]
        overrides: serde_json::Value,
        /// Staircase reference masses, kg. Defaults to 15, 200 and 800 g.
        #[serde(default)]
        references: Option<Vec<f64>>,
    },
    Answer {
        seq: u64,
        trial_id: u64,
        payload: AnswerPayload,
    },
}

impl ClientMessage {
    pub fn seq(&self) -> u64 {
        match self {
            ClientMessage::Hello { seq, .. }
            | ClientMessage::PoseUpdate { seq, .. }
            | ClientMessage::StartTask { seq, .. }
            | ClientMessage::Answer { seq, .. } => *seq,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    pub id: BodyId,
    pub role: BodyRole,
    pub kind: BodyKind,
    pub position: Vec3,
    pub orientation: UnitQuaternion,
    /// |d| for the clone; absent for other bodies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoupling: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaircaseInfo {
    pub reference_mass: f64,
    pub comparison_mass: f64,
    pub step_size: f64,
    pub reversal_count: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Welcome {
        seq: u64,
        protocol_version: u32,
        /// SHA-256 of the session scenario, hex.
        scenario_digest: String,
        timestep: f64,
        stream_rate: f64,
    },
    WorldState {
        seq: u64,
        /// Simulated time of the current world, s.
        t: f64,
        condition: Condition,
        /// |d| of the clone, m.
        decoupling: f64,
        /// Tracked pose the clone is tied to.
        real_pose: Option<Pose>,
        bodies: Vec<BodyState>,
    },
    TrialPrompt {
        seq: u64,
        trial_id: u64,
        task: TaskName,
        /// Cube body ids in row order.
        cubes: Vec<BodyId>,
        /// Current sorting labels, row order.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<Option<RankLabel>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        staircase: Option<StaircaseInfo>,
    },
    Result {
        seq: u64,
        records: Vec<TrialRecord>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        jnd: Vec<JndResult>,
        /// SHA-256 over every physics step of the task, hex.
        physics_digest: String,
    },
    Error {
        seq: u64,
        message: String,
    },
}

impl ServerMessage {
    pub fn seq(&self) -> u64 {
        match self {
            ServerMessage::Welcome { seq, .. }
            | ServerMessage::WorldState { seq, .. }
            | ServerMessage::TrialPrompt { seq, .. }
            | ServerMessage::Result { seq, .. }
            | ServerMessage::Error { seq, .. } => *seq,
        }
    }
}

/// World-state message for `world` (without a sequence number yet).
pub fn snapshot_for_client(world: &World, seq: u64) -> ServerMessage {
    let effector = world.effector();
    let clone = effector.map(|e| e.body);
    let decoupling = effector.map_or(0.0, |e| e.state.d.norm());
    ServerMessage::WorldState {
        seq,
        t: world.time(),
        condition: effector.map_or(Condition::Decoupled, |e| e.config.condition),
        decoupling,
        real_pose: effector.map(|e| e.real_pose()),
        bodies: world
            .bodies()
            .iter()
            .map(|b| BodyState {
                id: b.id,
                role: b.role,
                kind: b.kind,
                position: b.pose.position,
                orientation: b.pose.orientation,
                decoupling: (Some(b.id) == clone).then_some(decoupling),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use decouple_core::dynamics::WorldConfig;

    #[test]
    fn client_messages_parse() {
        let m: ClientMessage = serde_json::from_str(
            r#"{"type":"pose_update","seq":3,"t":0.5,"position":[0.1,0,0.02],"orientation":[1,0,0,0]}"#,
        )
        .unwrap();
        assert_eq!(m.seq(), 3);
        let m: ClientMessage =
            serde_json::from_str(r#"{"type":"answer","seq":4,"trial_id":1,"payload":{"kind":"label","cube":2,"label":"heavy"}}"#).unwrap();
        assert!(matches!(m, ClientMessage::Answer { payload: AnswerPayload::Label { cube: 2, label: RankLabel::Heavy }, .. }));
        let m: ClientMessage = serde_json::from_str(r#"{"type":"start_task","seq":5,"task":"staircase"}"#).unwrap();
        assert!(matches!(m, ClientMessage::StartTask { task: TaskName::Staircase, .. }));
        assert!(serde_json::from_str::<ClientMessage>(r#"{"type":"teleport","seq":1}"#).is_err());
    }

    #[test]
    fn empty_world_snapshot_is_valid() {
        let w = World::new(WorldConfig::default()).unwrap();
        let msg = snapshot_for_client(&w, 7);
        let json = serde_json::to_value(&msg).unwrap();
        assert_eq!(json["type"], "world_state");
        assert_eq!(json["bodies"].as_array().unwrap().len(), 0);
        assert!(json["real_pose"].is_null());
        let back: ServerMessage = serde_json::from_value(json).unwrap();
        assert_eq!(back, msg);
    }
}
