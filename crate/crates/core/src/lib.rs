//! Pseudo-haptic mass rendering by visual decoupling.
//!
//! A tracked real object drives a simulated clone through a critically
//! damped spring. Heavier virtual objects hold the clone back further, and
//! that visible lag is what users read as weight. The crate contains the
//! physics, scenario files, and an automated experiment harness.

pub mod decoupling;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod math;
pub mod scenario;

pub use decoupling::{Condition, ConstraintState, DecouplingParams, IntegrationMode};
pub use dynamics::{BodyId, BodyKind, BodyRole, MaterialParams, RigidBody, World, WorldConfig};
pub use error::{Error, Result};
pub use math::{Pose, UnitQuaternion, Vec3};
