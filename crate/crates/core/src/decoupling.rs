//! Visual decoupling of a tracked real object from its simulated clone.
//!
//! The clone is tied to the tracked pose by six independent springs (three
//! extension, three torsion), each damped at exactly its critical
//! coefficient so the clone returns to the real pose as fast as possible
//! without oscillating:
//!
//! ```text
//! c_c = 2·√(k·m)        F = −k·d − c_c·v
//! C_c = 2·√(κ·I_axis)   τ = −κ·θ − C_c·ω
//! ```
//!
//! `d` and `v` are the clone's position and velocity relative to the real
//! object (world frame); `θ` and `ω` are the relative rotation vector and
//! angular velocity expressed in the real object's frame.
//!
//! At desk-scale parameters the torsion springs are far too stiff for an
//! explicit step (√(κ/I) is in the thousands of rad/s), so each axis is
//! advanced with the closed-form solution of the critically damped
//! oscillator. Contact impulses acting on the clone during a step are
//! treated as a constant force over that step, which gives the contact
//! solver an exact effective mobility for the clone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{box_inertia, pose_error, InertiaDiag, Mat3, Pose, UnitQuaternion, Vec3};

/// Largest rotation error fed to the torsion springs.
pub const MAX_ROTATION_ERROR: f64 = std::f64::consts::PI - 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecouplingParams {
    /// k, N/m.
    pub linear_stiffness: f64,
    /// κ, N·m/rad.
    pub torsional_stiffness: f64,
    /// m, kg.
    pub clone_mass: f64,
    /// I, principal axes, kg·m².
    pub clone_inertia: InertiaDiag,
}

impl Default for DecouplingParams {
    /// 50 N/m, 150 N·m/rad, and a 10 g clone shaped as a 3.5 cm cube.
    fn default() -> Self {
        let clone_mass = 0.010;
        DecouplingParams {
            linear_stiffness: 50.0,
            torsional_stiffness: 150.0,
            clone_mass,
            clone_inertia: box_inertia(clone_mass, Vec3::splat(0.0175)).expect("positive cube"),
        }
    }
}

impl DecouplingParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("linear_stiffness", self.linear_stiffness),
            ("torsional_stiffness", self.torsional_stiffness),
            ("clone_mass", self.clone_mass),
            ("clone_inertia.ixx", self.clone_inertia.ixx),
            ("clone_inertia.iyy", self.clone_inertia.iyy),
            ("clone_inertia.izz", self.clone_inertia.izz),
        ];
        for (field, v) in checks {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(field, format!("must be strictly positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn linear_damping(&self) -> f64 {
        2.0 * (self.linear_stiffness * self.clone_mass).sqrt()
    }

    pub fn angular_damping(&self) -> Vec3 {
        let k = self.torsional_stiffness;
        let i = self.clone_inertia;
        Vec3::new(2.0 * (k * i.ixx).sqrt(), 2.0 * (k * i.iyy).sqrt(), 2.0 * (k * i.izz).sqrt())
    }

    /// √(k/m), rad/s.
    pub fn linear_natural_frequency(&self) -> f64 {
        (self.linear_stiffness / self.clone_mass).sqrt()
    }

    /// √(κ/I) per principal axis, rad/s.
    pub fn angular_natural_frequency(&self) -> Vec3 {
        let k = self.torsional_stiffness;
        let i = self.clone_inertia;
        Vec3::new((k / i.ixx).sqrt(), (k / i.iyy).sqrt(), (k / i.izz).sqrt())
    }
}

/// c_c = 2√(k·m).
pub fn critical_damping_linear(stiffness: f64, mass: f64) -> Result<f64> {
    if !(stiffness > 0.0) || !(mass > 0.0) {
        return Err(Error::InvalidArgument(format!("stiffness and mass must be positive, got k={stiffness}, m={mass}")));
    }
    Ok(2.0 * (stiffness * mass).sqrt())
}

/// C_c = 2√(κ·I) for one principal axis.
pub fn critical_damping_angular(stiffness: f64, inertia: f64) -> Result<f64> {
    if !(stiffness > 0.0) || !(inertia > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "stiffness and inertia must be positive, got κ={stiffness}, I={inertia}"
        )));
    }
    Ok(2.0 * (stiffness * inertia).sqrt())
}

pub fn spring_force(d: Vec3, v: Vec3, params: &DecouplingParams) -> Vec3 {
    -d * params.linear_stiffness - v * params.linear_damping()
}

pub fn spring_torque(theta: Vec3, omega: Vec3, params: &DecouplingParams) -> Vec3 {
    -theta * params.torsional_stiffness - params.angular_damping().component_mul(omega)
}

/// Which experimental condition drives the clone.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// C1: the clone is kinematic and copies the real pose every step.
    #[serde(rename = "C1")]
    Coupled,
    /// C2: the clone is dynamic and held by the spring constraint.
    #[default]
    #[serde(rename = "C2")]
    Decoupled,
}

impl Condition {
    pub fn label(self) -> &'static str {
        match self {
            Condition::Coupled => "C1",
            Condition::Decoupled => "C2",
        }
    }
}

impl std::str::FromStr for Condition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "C1" | "COUPLED" => Ok(Condition::Coupled),
            "C2" | "DECOUPLED" => Ok(Condition::Decoupled),
            other => Err(Error::InvalidArgument(format!("unknown condition {other:?}, expected C1 or C2"))),
        }
    }
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrationMode {
    /// Closed-form critically damped update per axis; unconditionally stable.
    #[default]
    Exact,
    /// Spring force and torque applied as ordinary forces. Only accepted when
    /// every natural frequency satisfies ω_n·dt < 0.5.
    ExplicitForce,
}

impl IntegrationMode {
    pub fn check(self, params: &DecouplingParams, dt: f64) -> Result<()> {
        if self == IntegrationMode::ExplicitForce {
            let w = params.angular_natural_frequency();
            let worst = params.linear_natural_frequency().max(w.x).max(w.y).max(w.z);
            if worst * dt >= 0.5 {
                return Err(Error::InvalidArgument(format!(
                    "explicit spring integration needs ω_n·dt < 0.5, got {:.3}",
                    worst * dt
                )));
            }
        }
        Ok(())
    }
}

/// Transient state of the constraint, reset whenever the condition changes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintState {
    pub d: Vec3,
    pub v: Vec3,
    pub theta: Vec3,
    pub omega: Vec3,
    pub c_c: f64,
    pub angular_c_c: Vec3,
    pub last_force: Vec3,
    pub last_torque: Vec3,
    pub peak_displacement: f64,
}

impl ConstraintState {
    pub fn new(params: &DecouplingParams) -> Self {
        ConstraintState { c_c: params.linear_damping(), angular_c_c: params.angular_damping(), ..Default::default() }
    }

    /// Clears transients and the running peak; keeps the damping coefficients.
    pub fn reset(&mut self) {
        *self = ConstraintState { c_c: self.c_c, angular_c_c: self.angular_c_c, ..Default::default() };
    }

    pub fn set_params(&mut self, params: &DecouplingParams) {
        self.c_c = params.linear_damping();
        self.angular_c_c = params.angular_damping();
    }

    /// Spring plus relative kinetic energy, J.
    pub fn energy(&self, params: &DecouplingParams) -> f64 {
        let i = params.clone_inertia.as_vec();
        0.5 * params.linear_stiffness * self.d.norm_squared()
            + 0.5 * params.torsional_stiffness * self.theta.norm_squared()
            + 0.5 * params.clone_mass * self.v.norm_squared()
            + 0.5 * i.dot(self.omega.component_mul(self.omega))
    }

    pub fn displacement(&self) -> f64 {
        self.d.norm()
    }

    pub fn reset_peak(&mut self) {
        self.peak_displacement = 0.0;
    }

    pub(crate) fn record(&mut self, d: Vec3, v: Vec3, theta: Vec3, omega: Vec3) {
        self.d = d;
        self.v = v;
        self.theta = theta;
        self.omega = omega;
        self.peak_displacement = self.peak_displacement.max(d.norm());
    }
}

/// One step of `x'' + 2ω·x' + ω²·x = a` with constant `a`, in closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalStep {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    /// Displacement per unit of constant acceleration.
    pub forced_position: f64,
    /// End velocity per unit of constant acceleration.
    pub forced_velocity: f64,
}

impl CriticalStep {
    pub fn new(omega_n: f64, dt: f64) -> Self {
        let x = omega_n * dt;
        let e = (-x).exp();
        CriticalStep {
            a: (1.0 + x) * e,
            b: dt * e,
            c: -omega_n * omega_n * dt * e,
            d: (1.0 - x) * e,
            // 1 − (1+x)e^{−x}, written to avoid cancellation for small x.
            forced_position: (-(-x).exp_m1() - x * e) / (omega_n * omega_n),
            forced_velocity: dt * e,
        }
    }

    pub fn advance(&self, x: f64, v: f64, accel: f64) -> (f64, f64) {
        (
            self.a * x + self.b * v + self.forced_position * accel,
            self.c * x + self.d * v + self.forced_velocity * accel,
        )
    }

    fn advance_vec(&self, x: Vec3, v: Vec3, accel: Vec3) -> (Vec3, Vec3) {
        let (x0, v0) = self.advance(x.x, v.x, accel.x);
        let (x1, v1) = self.advance(x.y, v.y, accel.y);
        let (x2, v2) = self.advance(x.z, v.z, accel.z);
        (Vec3::new(x0, x1, x2), Vec3::new(v0, v1, v2))
    }
}

/// Motion of the tracked real object across one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealMotion {
    pub start: Pose,
    pub end: Pose,
    /// Finite-difference linear velocity over the step, world frame.
    pub linear_velocity: Vec3,
    /// Finite-difference angular velocity over the step, world frame.
    pub angular_velocity: Vec3,
}

impl RealMotion {
    /// Two-sample finite difference between consecutive tracked poses.
    pub fn between(start: Pose, end: Pose, dt: f64) -> Self {
        let linear_velocity = (end.position - start.position) / dt;
        let angular_velocity = (end.orientation * start.orientation.inverse()).to_rotation_vector() / dt;
        RealMotion { start, end, linear_velocity, angular_velocity }
    }

    pub fn stationary(pose: Pose) -> Self {
        RealMotion { start: pose, end: pose, linear_velocity: Vec3::ZERO, angular_velocity: Vec3::ZERO }
    }
}

/// Homogeneous constraint update for one step, before contacts.
///
/// The contact solver treats the clone as a body with the effective
/// velocity and mobility stored here; [`ConstraintPrediction::finish`] then
/// folds the contact impulses back into the closed-form solution.
#[derive(Clone, Debug)]
pub struct ConstraintPrediction {
    real_end: Pose,
    real_linear_velocity: Vec3,
    real_angular_velocity: Vec3,
    rotation_end: Mat3,
    linear: CriticalStep,
    angular: [CriticalStep; 3],
    d: Vec3,
    v: Vec3,
    theta: Vec3,
    omega: Vec3,
    start_force: Vec3,
    start_torque: Vec3,
    mass: f64,
    inertia: Vec3,
    dt: f64,
    /// Velocity that carries the clone to its unconstrained end position.
    pub effective_velocity: Vec3,
    /// Angular velocity (world) that carries it to its end orientation.
    pub effective_angular_velocity: Vec3,
    /// Change of effective velocity per unit contact impulse.
    pub effective_inverse_mass: f64,
    /// World-frame change of effective angular velocity per unit angular impulse.
    pub effective_inverse_inertia: Mat3,
}

/// External load on the clone held constant over the step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CloneLoad {
    /// Linear acceleration, m/s² (gravity plus applied force / mass).
    pub acceleration: Vec3,
    /// Applied torque, N·m, world frame.
    pub torque: Vec3,
}

/// Computes the contact-free update of the clone over one step.
pub fn predict_constraint(
    clone_pose: &Pose,
    clone_linear_velocity: Vec3,
    clone_angular_velocity: Vec3,
    real: &RealMotion,
    load: CloneLoad,
    params: &DecouplingParams,
    dt: f64,
) -> ConstraintPrediction {
    let (d0, mut theta0) = pose_error(&real.start, clone_pose);
    if theta0.norm() > MAX_ROTATION_ERROR {
        log::warn!("clone rotation error {:.6} rad at the π singularity, clamped", theta0.norm());
        theta0 = theta0 * (MAX_ROTATION_ERROR / theta0.norm());
    }
    let rot_start = real.start.orientation.to_matrix();
    let v0 = clone_linear_velocity - real.linear_velocity;
    let omega0 = rot_start.transpose().mul_vec(clone_angular_velocity - real.angular_velocity);

    let inertia = params.clone_inertia.as_vec();
    let wn = params.angular_natural_frequency();
    let linear = CriticalStep::new(params.linear_natural_frequency(), dt);
    let angular = [CriticalStep::new(wn.x, dt), CriticalStep::new(wn.y, dt), CriticalStep::new(wn.z, dt)];

    let rotation_end = real.end.orientation.to_matrix();
    let alpha = rotation_end.transpose().mul_vec(load.torque).component_mul(params.clone_inertia.inverse());

    let (d, v) = linear.advance_vec(d0, v0, load.acceleration);
    let mut theta = Vec3::ZERO;
    let mut omega = Vec3::ZERO;
    let (mut th, mut om) = ([0.0; 3], [0.0; 3]);
    for (i, step) in angular.iter().enumerate() {
        (th[i], om[i]) = step.advance(theta0[i], omega0[i], alpha[i]);
    }
    theta = theta + Vec3::from(th);
    omega = omega + Vec3::from(om);

    let target_position = real.end.position + d;
    let target_orientation = real.end.orientation * UnitQuaternion::from_rotation_vector(theta);
    let effective_velocity = (target_position - clone_pose.position) / dt;
    let effective_angular_velocity =
        (target_orientation * clone_pose.orientation.inverse()).to_rotation_vector() / dt;

    let dt2 = dt * dt;
    let mobility = Vec3::new(
        angular[0].forced_position / (inertia.x * dt2),
        angular[1].forced_position / (inertia.y * dt2),
        angular[2].forced_position / (inertia.z * dt2),
    );

    ConstraintPrediction {
        real_end: real.end,
        real_linear_velocity: real.linear_velocity,
        real_angular_velocity: real.angular_velocity,
        rotation_end,
        linear,
        angular,
        d,
        v,
        theta,
        omega,
        start_force: spring_force(d0, v0, params),
        start_torque: spring_torque(theta0, omega0, params),
        mass: params.clone_mass,
        inertia,
        dt,
        effective_velocity,
        effective_angular_velocity,
        effective_inverse_mass: linear.forced_position / (params.clone_mass * dt2),
        effective_inverse_inertia: Mat3::rotate_diagonal(&rotation_end, mobility),
    }
}

/// Final clone state after one constrained step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CloneUpdate {
    pub pose: Pose,
    pub linear_velocity: Vec3,
    pub angular_velocity: Vec3,
}

impl ConstraintPrediction {
    /// Folds the contact impulses received during the step (linear, and
    /// angular about the clone's center, world frame) into the closed-form
    /// update and records the result in `state`.
    pub fn finish(&self, impulse: Vec3, angular_impulse: Vec3, state: &mut ConstraintState) -> CloneUpdate {
        let accel = impulse / (self.mass * self.dt);
        let d = self.d + accel * self.linear.forced_position;
        let v = self.v + accel * self.linear.forced_velocity;

        let local = self.rotation_end.transpose().mul_vec(angular_impulse);
        let mut theta = self.theta;
        let mut omega = self.omega;
        let (mut th, mut om) = (theta.to_array(), omega.to_array());
        for i in 0..3 {
            let alpha = local[i] / (self.inertia[i] * self.dt);
            th[i] += self.angular[i].forced_position * alpha;
            om[i] += self.angular[i].forced_velocity * alpha;
        }
        theta = Vec3::from(th);
        omega = Vec3::from(om);

        state.last_force = self.start_force;
        state.last_torque = self.start_torque;
        state.record(d, v, theta, omega);

        CloneUpdate {
            pose: Pose::new(
                self.real_end.position + d,
                (self.real_end.orientation * UnitQuaternion::from_rotation_vector(theta)).renormalize(),
            ),
            linear_velocity: self.real_linear_velocity + v,
            angular_velocity: self.real_angular_velocity + self.rotation_end.mul_vec(omega),
        }
    }
}

/// Advances an isolated clone (no contacts) by one step of the constraint.
pub fn apply_constraint(
    clone: &mut crate::dynamics::RigidBody,
    state: &mut ConstraintState,
    real: &RealMotion,
    params: &DecouplingParams,
    dt: f64,
) -> Result<()> {
    if !clone.is_dynamic() {
        return Err(Error::State(format!("clone {} is kinematic; the constraint only drives dynamic clones", clone.id)));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let prediction = predict_constraint(
        &clone.pose,
        clone.linear_velocity,
        clone.angular_velocity,
        real,
        CloneLoad::default(),
        params,
        dt,
    );
    let update = prediction.finish(Vec3::ZERO, Vec3::ZERO, state);
    clone.pose = update.pose;
    clone.linear_velocity = update.linear_velocity;
    clone.angular_velocity = update.angular_velocity;
    Ok(())
}
