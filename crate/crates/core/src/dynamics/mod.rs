//! Rigid boxes on a table, sequential-impulse contacts, fixed timestep.

mod body;
mod contact;
mod solver;
mod world;

pub use body::{BodyId, BodyKind, BodyRole, ForceOutcome, MaterialParams, RigidBody};
pub use contact::{box_box, box_plane, ContactManifold, ContactPoint, DEFAULT_CONTACT_MARGIN};
pub use solver::{BodyImpulse, SolverConfig};
pub use world::{
    step_world, BodySnapshot, Effector, EffectorConfig, ExternalForce, StepReport, TraceWriter, World, WorldConfig,
    WorldSnapshot,
};
