use serde::{Deserialize, Serialize};

use super::body::{BodyId, BodyKind, BodyRole, MaterialParams, RigidBody};
use super::contact::{box_box, box_plane, ContactManifold, DEFAULT_CONTACT_MARGIN};
use super::solver::{solve_contacts, BodyImpulse, SolverBody, SolverConfig, WarmStartCache};
use crate::decoupling::{
    predict_constraint, spring_force, spring_torque, CloneLoad, Condition, ConstraintState, DecouplingParams,
    IntegrationMode, RealMotion,
};
use crate::error::{Error, Result};
use crate::math::{integrate_orientation, pose_error, Pose, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub gravity: Vec3,
    pub timestep: f64,
    pub velocity_iterations: usize,
    pub baumgarte: f64,
    pub penetration_slop: f64,
    pub contact_margin: f64,
    /// Height of the table plane; `None` removes it.
    pub ground_height: Option<f64>,
}

impl Default for WorldConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        WorldConfig {
            gravity: Vec3::new(0.0, 0.0, -9.81),
            timestep: 1.0 / 240.0,
            velocity_iterations: solver.velocity_iterations,
            baumgarte: solver.baumgarte,
            penetration_slop: solver.penetration_slop,
            contact_margin: DEFAULT_CONTACT_MARGIN,
            ground_height: Some(0.0),
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.timestep > 0.0) || !self.timestep.is_finite() {
            return Err(Error::validation("world.timestep", "timestep must be positive"));
        }
        if !self.gravity.is_finite() {
            return Err(Error::validation("world.gravity", "gravity must be finite"));
        }
        if self.velocity_iterations == 0 {
            return Err(Error::validation("world.velocity_iterations", "at least one iteration is required"));
        }
        if !(0.0..=1.0).contains(&self.baumgarte) {
            return Err(Error::validation("world.baumgarte", "baumgarte factor must lie in [0, 1]"));
        }
        if !(self.penetration_slop >= 0.0) {
            return Err(Error::validation("world.penetration_slop", "slop must be non-negative"));
        }
        if !(self.contact_margin >= 0.0) {
            return Err(Error::validation("world.contact_margin", "margin must be non-negative"));
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            velocity_iterations: self.velocity_iterations,
            baumgarte: self.baumgarte,
            penetration_slop: self.penetration_slop,
            ..SolverConfig::default()
        }
    }
}

/// Force and torque held on a body for one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalForce {
    pub body: BodyId,
    pub force: Vec3,
    #[serde(default)]
    pub torque: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EffectorConfig {
    pub params: DecouplingParams,
    pub condition: Condition,
    pub integration: IntegrationMode,
    /// Whether gravity acts on the clone in addition to the springs.
    pub clone_gravity: bool,
}

impl Default for EffectorConfig {
    fn default() -> Self {
        EffectorConfig {
            params: DecouplingParams::default(),
            condition: Condition::Decoupled,
            integration: IntegrationMode::Exact,
            clone_gravity: false,
        }
    }
}

/// The tracked real object and the clone standing in for it.
#[derive(Clone, Debug)]
pub struct Effector {
    pub body: BodyId,
    pub config: EffectorConfig,
    pub state: ConstraintState,
    real_pose: Pose,
    real_target: Pose,
    real_linear_velocity: Vec3,
    real_angular_velocity: Vec3,
}

impl Effector {
    /// Tracked pose at the current simulation time.
    pub fn real_pose(&self) -> Pose {
        self.real_pose
    }

    /// Latest tracked pose, reached at the end of the next step.
    pub fn real_target(&self) -> Pose {
        self.real_target
    }

    pub fn real_velocity(&self) -> (Vec3, Vec3) {
        (self.real_linear_velocity, self.real_angular_velocity)
    }
}

/// What happened during one step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepReport {
    pub step: u64,
    pub time: f64,
    pub contact_count: usize,
    /// |d| after the step, zero without an effector.
    pub decoupling: f64,
    /// Bodies the clone pressed on during the step.
    pub clone_contacts: Vec<BodyId>,
}

#[derive(Clone, Debug)]
pub struct World {
    pub config: WorldConfig,
    pub ground_material: MaterialParams,
    bodies: Vec<RigidBody>,
    effector: Option<Effector>,
    time: f64,
    step_count: u64,
    warm: WarmStartCache,
    last_contacts: Vec<ContactManifold>,
    last_manifold_impulses: Vec<f64>,
    last_impulses: Vec<BodyImpulse>,
}

impl World {
    pub fn new(config: WorldConfig) -> Result<Self> {
        config.validate()?;
        Ok(World {
            config,
            ground_material: MaterialParams::default(),
            bodies: Vec::new(),
            effector: None,
            time: 0.0,
            step_count: 0,
            warm: WarmStartCache::default(),
            last_contacts: Vec::new(),
            last_manifold_impulses: Vec::new(),
            last_impulses: Vec::new(),
        })
    }

    pub fn add_body(&mut self, mut body: RigidBody) -> BodyId {
        let id = BodyId(self.bodies.len() as u32);
        body.id = id;
        self.bodies.push(body);
        id
    }

    pub fn bodies(&self) -> &[RigidBody] {
        &self.bodies
    }

    pub fn body(&self, id: BodyId) -> Option<&RigidBody> {
        self.bodies.get(id.0 as usize)
    }

    pub fn body_mut(&mut self, id: BodyId) -> Option<&mut RigidBody> {
        self.bodies.get_mut(id.0 as usize)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn effector(&self) -> Option<&Effector> {
        self.effector.as_ref()
    }

    pub fn effector_mut(&mut self) -> Option<&mut Effector> {
        self.effector.as_mut()
    }

    pub fn last_contacts(&self) -> &[ContactManifold] {
        &self.last_contacts
    }

    /// Contact impulse each body received in the last step, indexed by id.
    pub fn last_impulses(&self) -> &[BodyImpulse] {
        &self.last_impulses
    }

    /// Adds the clone as a box with the given half extents, coincident with
    /// `real_pose`.
    pub fn attach_effector(&mut self, half_extents: Vec3, real_pose: Pose, config: EffectorConfig) -> Result<BodyId> {
        if self.effector.is_some() {
            return Err(Error::State("an effector is already attached".into()));
        }
        config.params.validate()?;
        config.integration.check(&config.params, self.config.timestep)?;
        if !real_pose.is_finite() {
            return Err(Error::InvalidArgument("real pose must be finite".into()));
        }
        let kind = match config.condition {
            Condition::Coupled => BodyKind::Kinematic,
            Condition::Decoupled => BodyKind::Dynamic,
        };
        let mut clone = RigidBody::new_box(
            kind,
            BodyRole::EffectorClone,
            config.params.clone_mass,
            half_extents,
            real_pose,
            self.ground_material,
        )?;
        clone.inertia = config.params.clone_inertia;
        clone.gravity_enabled = config.clone_gravity;
        let body = self.add_body(clone);
        self.effector = Some(Effector {
            body,
            config,
            state: ConstraintState::new(&config.params),
            real_pose,
            real_target: real_pose,
            real_linear_velocity: Vec3::ZERO,
            real_angular_velocity: Vec3::ZERO,
        });
        Ok(body)
    }

    /// Sets the tracked pose the real object reaches at the end of the next
    /// step. Without a new sample the last one is held.
    pub fn drive_effector(&mut self, pose: Pose) -> Result<()> {
        if !pose.is_finite() {
            return Err(Error::InvalidArgument("tracked pose must be finite".into()));
        }
        let effector = self.effector.as_mut().ok_or_else(|| Error::State("no effector attached".into()))?;
        effector.real_target = Pose::new(pose.position, pose.orientation.renormalize());
        Ok(())
    }

    /// Switches between C1 and C2. Clears the constraint's transients; the
    /// clone snaps back onto the tracked pose.
    pub fn set_condition(&mut self, condition: Condition) -> Result<()> {
        let effector = self.effector.as_mut().ok_or_else(|| Error::State("no effector attached".into()))?;
        effector.config.condition = condition;
        effector.state.reset();
        let real = effector.real_pose;
        let (v, w) = (effector.real_linear_velocity, effector.real_angular_velocity);
        let clone = &mut self.bodies[effector.body.0 as usize];
        clone.pose = real;
        clone.linear_velocity = v;
        clone.angular_velocity = w;
        clone.kinematic_target = None;
        clone.kind = match condition {
            Condition::Coupled => BodyKind::Kinematic,
            Condition::Decoupled => BodyKind::Dynamic,
        };
        self.warm.clear();
        Ok(())
    }

    pub fn set_decoupling_params(&mut self, params: DecouplingParams) -> Result<()> {
        params.validate()?;
        let dt = self.config.timestep;
        let effector = self.effector.as_mut().ok_or_else(|| Error::State("no effector attached".into()))?;
        effector.config.integration.check(&params, dt)?;
        effector.config.params = params;
        effector.state.set_params(&params);
        let clone = &mut self.bodies[effector.body.0 as usize];
        clone.mass = params.clone_mass;
        clone.inertia = params.clone_inertia;
        Ok(())
    }

    /// Applies a force for the next step. Forces on kinematic bodies are
    /// ignored with a warning.
    pub fn apply_force(&mut self, f: &ExternalForce) -> Result<()> {
        let body = self
            .bodies
            .get_mut(f.body.0 as usize)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown body {}", f.body)))?;
        body.apply_force(f.force, f.torque);
        Ok(())
    }

    /// Advances one fixed timestep.
    pub fn step(&mut self, forces: &[ExternalForce]) -> Result<StepReport> {
        self.step_with(forces, self.config.timestep)
    }

    fn step_with(&mut self, forces: &[ExternalForce], dt: f64) -> Result<StepReport> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        for f in forces {
            self.apply_force(f)?;
        }
        let gravity = self.config.gravity;

        // Real motion over this step and, in exact mode, the clone's
        // contact-free update.
        let mut prediction = None;
        let mut explicit_clone = None;
        if let Some(eff) = self.effector.as_mut() {
            let real = RealMotion::between(eff.real_pose, eff.real_target, dt);
            eff.real_linear_velocity = real.linear_velocity;
            eff.real_angular_velocity = real.angular_velocity;
            let clone = &mut self.bodies[eff.body.0 as usize];
            match (eff.config.condition, eff.config.integration) {
                (Condition::Coupled, _) => {
                    clone.kind = BodyKind::Kinematic;
                    clone.kinematic_target = Some(real.end);
                }
                (Condition::Decoupled, IntegrationMode::Exact) => {
                    let (force, torque) = clone.accumulated_force();
                    let mut acceleration = force / clone.mass;
                    if clone.gravity_enabled {
                        acceleration += gravity;
                    }
                    let load = CloneLoad { acceleration, torque };
                    prediction = Some(predict_constraint(
                        &clone.pose,
                        clone.linear_velocity,
                        clone.angular_velocity,
                        &real,
                        load,
                        &eff.config.params,
                        dt,
                    ));
                }
                (Condition::Decoupled, IntegrationMode::ExplicitForce) => {
                    eff.config.integration.check(&eff.config.params, dt)?;
                    let (d, theta) = pose_error(&real.start, &clone.pose);
                    let rot = real.start.orientation.to_matrix();
                    let v = clone.linear_velocity - real.linear_velocity;
                    let omega = rot.transpose().mul_vec(clone.angular_velocity - real.angular_velocity);
                    let f = spring_force(d, v, &eff.config.params);
                    let tau = spring_torque(theta, omega, &eff.config.params);
                    eff.state.last_force = f;
                    eff.state.last_torque = tau;
                    clone.apply_force(f, rot.mul_vec(tau));
                    explicit_clone = Some(real);
                }
            }
        }
        let exact_clone = prediction.as_ref().and(self.effector.as_ref().map(|e| e.body));

        // Velocity integration.
        for body in self.bodies.iter_mut() {
            if Some(body.id) == exact_clone {
                continue;
            }
            match body.kind {
                BodyKind::Dynamic => {
                    let mut accel = body.force / body.mass;
                    if body.gravity_enabled {
                        accel += gravity;
                    }
                    body.linear_velocity += accel * dt;
                    let inv_i = body.inverse_inertia_world();
                    body.angular_velocity += inv_i.mul_vec(body.torque) * dt;
                }
                BodyKind::Kinematic => {
                    if let Some(target) = body.kinematic_target {
                        body.linear_velocity = (target.position - body.pose.position) / dt;
                        body.angular_velocity =
                            (target.orientation * body.pose.orientation.inverse()).to_rotation_vector() / dt;
                    }
                }
            }
        }

        // Contacts.
        let contacts = self.detect_contacts();
        let mut solver_bodies: Vec<SolverBody> = self
            .bodies
            .iter()
            .map(|b| SolverBody {
                center: b.pose.position,
                inverse_mass: b.inverse_mass(),
                inverse_inertia: b.inverse_inertia_world(),
                linear_velocity: b.linear_velocity,
                angular_velocity: b.angular_velocity,
            })
            .collect();
        if let (Some(p), Some(id)) = (prediction.as_ref(), exact_clone) {
            let sb = &mut solver_bodies[id.0 as usize];
            sb.inverse_mass = p.effective_inverse_mass;
            sb.inverse_inertia = p.effective_inverse_inertia;
            sb.linear_velocity = p.effective_velocity;
            sb.angular_velocity = p.effective_angular_velocity;
        }
        let materials: Vec<MaterialParams> = self.bodies.iter().map(|b| b.material).collect();
        let (impulses, manifold_impulses) = solve_contacts(
            &mut solver_bodies,
            &materials,
            &self.ground_material,
            |id| id.0 as usize,
            &contacts,
            &mut self.warm,
            &self.config.solver(),
            dt,
        );

        // Position integration.
        for (body, sb) in self.bodies.iter_mut().zip(&solver_bodies) {
            if Some(body.id) == exact_clone {
                continue;
            }
            match (body.kind, body.kinematic_target.take()) {
                (BodyKind::Kinematic, Some(target)) => {
                    body.pose = target;
                }
                _ => {
                    if body.is_dynamic() {
                        body.linear_velocity = sb.linear_velocity;
                        body.angular_velocity = sb.angular_velocity;
                    }
                    body.pose.position += body.linear_velocity * dt;
                    body.pose.orientation = integrate_orientation(body.pose.orientation, body.angular_velocity, dt);
                }
            }
        }

        // Constraint bookkeeping.
        let mut decoupling = 0.0;
        let mut clone_contacts = Vec::new();
        if let Some(eff) = self.effector.as_mut() {
            let clone = &mut self.bodies[eff.body.0 as usize];
            if let Some(p) = prediction {
                let imp = impulses[eff.body.0 as usize];
                let update = p.finish(imp.linear, imp.angular, &mut eff.state);
                clone.pose = update.pose;
                clone.linear_velocity = update.linear_velocity;
                clone.angular_velocity = update.angular_velocity;
            } else if let Some(real) = explicit_clone {
                let (d, theta) = pose_error(&real.end, &clone.pose);
                let v = clone.linear_velocity - real.linear_velocity;
                let omega = real.end.orientation.to_matrix().transpose().mul_vec(clone.angular_velocity - real.angular_velocity);
                eff.state.record(d, v, theta, omega);
            } else {
                // Coupled: the clone sits on the tracked pose.
                eff.state.record(Vec3::ZERO, Vec3::ZERO, Vec3::ZERO, Vec3::ZERO);
            }
            eff.real_pose = eff.real_target;
            decoupling = eff.state.d.norm();
            for (m, &j) in contacts.iter().zip(&manifold_impulses) {
                if !m.involves(eff.body) || !(j > 0.0 || m.is_touching()) {
                    continue;
                }
                let other = if m.body_a == eff.body { m.body_b } else { Some(m.body_a) };
                if let Some(other) = other {
                    if !clone_contacts.contains(&other) {
                        clone_contacts.push(other);
                    }
                }
            }
        }

        for body in self.bodies.iter_mut() {
            body.clear_forces();
        }
        self.step_count += 1;
        self.time = if dt == self.config.timestep { self.step_count as f64 * dt } else { self.time + dt };
        let contact_count = contacts.len();
        self.last_contacts = contacts;
        self.last_manifold_impulses = manifold_impulses;
        self.last_impulses = impulses;

        if let Some(bad) = self.bodies.iter().find(|b| !b.is_finite()) {
            return Err(Error::Diverged { body: bad.id, step: self.step_count });
        }
        Ok(StepReport { step: self.step_count, time: self.time, contact_count, decoupling, clone_contacts })
    }

    fn detect_contacts(&self) -> Vec<ContactManifold> {
        let margin = self.config.contact_margin;
        let mut out = Vec::new();
        if let Some(h) = self.config.ground_height {
            for b in self.bodies.iter().filter(|b| b.is_dynamic()) {
                out.extend(box_plane(b, h, margin));
            }
        }
        for (i, a) in self.bodies.iter().enumerate() {
            for b in &self.bodies[i + 1..] {
                if !a.is_dynamic() && !b.is_dynamic() {
                    continue;
                }
                out.extend(box_box(a, b, margin));
            }
        }
        out
    }

    /// Total linear momentum of dynamic bodies, clone excluded.
    pub fn object_momentum(&self) -> Vec3 {
        let clone = self.effector.as_ref().map(|e| e.body);
        self.bodies
            .iter()
            .filter(|b| b.is_dynamic() && Some(b.id) != clone)
            .fold(Vec3::ZERO, |acc, b| acc + b.momentum())
    }

    pub fn snapshot(&self) -> WorldSnapshot {
        WorldSnapshot {
            step: self.step_count,
            time: self.time,
            bodies: self
                .bodies
                .iter()
                .map(|b| BodySnapshot {
                    id: b.id,
                    role: b.role,
                    kind: b.kind,
                    position: b.pose.position,
                    orientation: b.pose.orientation.into(),
                    linear_velocity: b.linear_velocity,
                    angular_velocity: b.angular_velocity,
                })
                .collect(),
            real_pose: self.effector.as_ref().map(|e| e.real_pose),
            decoupling: self.effector.as_ref().map_or(0.0, |e| e.state.d.norm()),
        }
    }
}

/// Advances a copy of `world` by `dt`, leaving the original untouched.
pub fn step_world(world: &World, forces: &[ExternalForce], dt: f64) -> Result<World> {
    let mut next = world.clone();
    next.step_with(forces, dt)?;
    Ok(next)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodySnapshot {
    pub id: BodyId,
    pub role: BodyRole,
    pub kind: BodyKind,
    pub position: Vec3,
    /// [w, x, y, z]
    pub orientation: [f64; 4],
    pub linear_velocity: Vec3,
    pub angular_velocity: Vec3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldSnapshot {
    pub step: u64,
    pub time: f64,
    pub bodies: Vec<BodySnapshot>,
    pub real_pose: Option<Pose>,
    pub decoupling: f64,
}

/// Writes one CSV row per body per step.
pub struct TraceWriter<W: std::io::Write> {
    inner: csv::Writer<W>,
}

impl<W: std::io::Write> TraceWriter<W> {
    pub const HEADER: [&'static str; 18] = [
        "step", "time", "body", "role", "px", "py", "pz", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz",
        "decoupling",
    ];

    pub fn new(writer: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(writer);
        inner.write_record(Self::HEADER)?;
        Ok(TraceWriter { inner })
    }

    pub fn record(&mut self, world: &World) -> Result<()> {
        let snap = world.snapshot();
        for b in &snap.bodies {
            let role = match b.role {
                BodyRole::VirtualObject => "object",
                BodyRole::EffectorClone => "clone",
            };
            let nums = [
                b.position.x,
                b.position.y,
                b.position.z,
                b.orientation[0],
                b.orientation[1],
                b.orientation[2],
                b.orientation[3],
                b.linear_velocity.x,
                b.linear_velocity.y,
                b.linear_velocity.z,
                b.angular_velocity.x,
                b.angular_velocity.y,
                b.angular_velocity.z,
                snap.decoupling,
            ];
            let mut row = vec![snap.step.to_string(), snap.time.to_string(), b.id.0.to_string(), role.to_string()];
            row.extend(nums.iter().map(|v| v.to_string()));
            self.inner.write_record(&row)?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}
