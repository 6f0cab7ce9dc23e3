use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{box_inertia, InertiaDiag, Mat3, Pose, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BodyId(pub u32);

impl fmt::Display for BodyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BodyKind {
    Dynamic,
    /// Moved by its velocity or a pose target, never by forces or contacts.
    Kinematic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BodyRole {
    VirtualObject,
    EffectorClone,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub friction_coefficient: f64,
    pub restitution: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self { friction_coefficient: 0.8, restitution: 0.0 }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.friction_coefficient >= 0.0) || !self.friction_coefficient.is_finite() {
            return Err(Error::validation("friction_coefficient", "friction must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.restitution) {
            return Err(Error::validation("restitution", "restitution must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Geometric-mean friction and max restitution of a contact pair.
    pub fn combine(a: &MaterialParams, b: &MaterialParams) -> MaterialParams {
        MaterialParams {
            friction_coefficient: (a.friction_coefficient * b.friction_coefficient).sqrt(),
            restitution: a.restitution.max(b.restitution),
        }
    }
}

/// Outcome of [`RigidBody::apply_force`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForceOutcome {
    Applied,
    IgnoredKinematic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RigidBody {
    pub id: BodyId,
    pub kind: BodyKind,
    pub role: BodyRole,
    pub pose: Pose,
    pub linear_velocity: Vec3,
    pub angular_velocity: Vec3,
    pub mass: f64,
    pub inertia: InertiaDiag,
    pub half_extents: Vec3,
    pub material: MaterialParams,
    /// Pose a kinematic body must reach at the end of the next step.
    pub kinematic_target: Option<Pose>,
    pub gravity_enabled: bool,
    pub(crate) force: Vec3,
    pub(crate) torque: Vec3,
    pub(crate) ignored_force: bool,
}

impl RigidBody {
    /// A solid box. The id is assigned when the body is added to a world.
    pub fn new_box(kind: BodyKind, role: BodyRole, mass: f64, half_extents: Vec3, pose: Pose, material: MaterialParams) -> Result<Self> {
        let inertia = box_inertia(mass, half_extents)?;
        material.validate()?;
        Ok(RigidBody {
            id: BodyId(u32::MAX),
            kind,
            role,
            pose,
            linear_velocity: Vec3::ZERO,
            angular_velocity: Vec3::ZERO,
            mass,
            inertia,
            half_extents,
            material,
            kinematic_target: None,
            gravity_enabled: true,
            force: Vec3::ZERO,
            torque: Vec3::ZERO,
            ignored_force: false,
        })
    }

    /// Dynamic cube of the given side length resting at `center`.
    pub fn cube(mass: f64, side: f64, center: Vec3, material: MaterialParams) -> Result<Self> {
        Self::new_box(BodyKind::Dynamic, BodyRole::VirtualObject, mass, Vec3::splat(side / 2.0), Pose::from_position(center), material)
    }

    pub fn is_dynamic(&self) -> bool {
        self.kind == BodyKind::Dynamic
    }

    /// Accumulates a force through the center of mass and a torque for the
    /// next step. Kinematic bodies ignore it and raise a warning flag.
    pub fn apply_force(&mut self, force: Vec3, torque: Vec3) -> ForceOutcome {
        if !self.is_dynamic() {
            self.ignored_force = true;
            log::warn!("force applied to kinematic body {} ignored", self.id);
            return ForceOutcome::IgnoredKinematic;
        }
        self.force += force;
        self.torque += torque;
        ForceOutcome::Applied
    }

    pub fn accumulated_force(&self) -> (Vec3, Vec3) {
        (self.force, self.torque)
    }

    /// Set when a force was sent to this body while it was kinematic.
    pub fn force_warning(&self) -> bool {
        self.ignored_force
    }

    pub(crate) fn clear_forces(&mut self) {
        self.force = Vec3::ZERO;
        self.torque = Vec3::ZERO;
    }

    pub fn inverse_mass(&self) -> f64 {
        if self.is_dynamic() {
            1.0 / self.mass
        } else {
            0.0
        }
    }

    pub fn rotation(&self) -> Mat3 {
        self.pose.orientation.to_matrix()
    }

    pub fn inverse_inertia_world(&self) -> Mat3 {
        if self.is_dynamic() {
            Mat3::rotate_diagonal(&self.rotation(), self.inertia.inverse())
        } else {
            Mat3::ZERO
        }
    }

    pub fn momentum(&self) -> Vec3 {
        self.linear_velocity * self.mass
    }

    pub fn is_finite(&self) -> bool {
        self.pose.is_finite() && self.linear_velocity.is_finite() && self.angular_velocity.is_finite()
    }

    /// The eight corners in world coordinates, indexed by sign bits (x, y, z).
    pub fn corners(&self) -> [Vec3; 8] {
        let h = self.half_extents;
        std::array::from_fn(|i| {
            let local = Vec3::new(
                if i & 1 == 0 { -h.x } else { h.x },
                if i & 2 == 0 { -h.y } else { h.y },
                if i & 4 == 0 { -h.z } else { h.z },
            );
            self.pose.transform_point(local)
        })
    }

    pub fn bounding_radius(&self) -> f64 {
        self.half_extents.norm()
    }
}
