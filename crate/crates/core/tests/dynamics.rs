use decouple_core::decoupling::{Condition, DecouplingParams};
use decouple_core::dynamics::{EffectorConfig, ExternalForce, MaterialParams, RigidBody, World, WorldConfig};
use decouple_core::math::{Pose, UnitQuaternion, Vec3};
use proptest::prelude::*;

const SIDE: f64 = 0.035;
const G: f64 = 9.81;

fn table() -> World {
    World::new(WorldConfig::default()).unwrap()
}

fn resting_cube(world: &mut World, mass: f64, x: f64) -> decouple_core::BodyId {
    world.add_body(RigidBody::cube(mass, SIDE, Vec3::new(x, 0.0, SIDE / 2.0), MaterialParams::default()).unwrap())
}

#[test]
fn resting_cube_stays_put() {
    let mut w = table();
    let id = resting_cube(&mut w, 0.2, 0.0);
    let start = w.body(id).unwrap().pose.position;
    for _ in 0..2400 {
        w.step(&[]).unwrap();
    }
    let b = w.body(id).unwrap();
    let drift = (b.pose.position - start).norm();
    assert!(drift < 1e-4, "drift {drift}");
    assert!(b.pose.orientation.angle() < 1e-3);
}

#[test]
fn sliding_cube_decelerates_at_mu_g() {
    let mut w = table();
    let id = resting_cube(&mut w, 0.2, 0.0);
    for _ in 0..24 {
        w.step(&[]).unwrap();
    }
    w.body_mut(id).unwrap().linear_velocity = Vec3::new(1.5, 0.0, 0.0);
    let v0 = 1.5;
    let steps = 24;
    for _ in 0..steps {
        w.step(&[]).unwrap();
    }
    let v1 = w.body(id).unwrap().linear_velocity.x;
    let decel = (v0 - v1) / (steps as f64 * w.config.timestep);
    let expected = 0.8 * G;
    assert!((decel - expected).abs() / expected < 0.02, "decel {decel} vs {expected}");
}

#[test]
fn coulomb_threshold_orders_motion() {
    // Below μmg the cube holds; above it slides.
    let run = |ratio: f64| {
        let mut w = table();
        let id = resting_cube(&mut w, 0.2, 0.0);
        for _ in 0..24 {
            w.step(&[]).unwrap();
        }
        let push = ExternalForce { body: id, force: Vec3::new(ratio * 0.8 * 0.2 * G, 0.0, 0.0), torque: Vec3::ZERO };
        for _ in 0..240 {
            w.step(&[push]).unwrap();
        }
        w.body(id).unwrap().pose.position.x
    };
    assert!(run(0.9).abs() < 1e-4);
    assert!(run(1.1) > 0.05);
}

#[test]
fn fast_cube_does_not_tunnel() {
    let mut w = World::new(WorldConfig { gravity: Vec3::ZERO, ground_height: None, ..Default::default() }).unwrap();
    let a = resting_cube(&mut w, 0.2, 0.0);
    let b = resting_cube(&mut w, 0.2, 0.1);
    // 4 m/s covers a cube side per two steps.
    w.body_mut(a).unwrap().linear_velocity = Vec3::new(4.0, 0.0, 0.0);
    for _ in 0..60 {
        w.step(&[]).unwrap();
        let xa = w.body(a).unwrap().pose.position.x;
        let xb = w.body(b).unwrap().pose.position.x;
        assert!(xb - xa > SIDE - 2e-3, "overlap {xa} {xb}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn collisions_conserve_momentum(vx in 0.1..2.0f64, vy in -0.5..0.5f64, dy in -0.02..0.02f64, ma in 0.02..1.0f64, mb in 0.02..1.0f64) {
        let mut w = World::new(WorldConfig { gravity: Vec3::ZERO, ground_height: None, ..Default::default() }).unwrap();
        let a = w.add_body(RigidBody::cube(ma, SIDE, Vec3::new(0.0, 0.0, 0.0), MaterialParams::default()).unwrap());
        let b = w.add_body(RigidBody::cube(mb, SIDE, Vec3::new(0.06, dy, 0.0), MaterialParams::default()).unwrap());
        w.body_mut(a).unwrap().linear_velocity = Vec3::new(vx, vy, 0.0);
        let p0 = w.object_momentum();
        for _ in 0..120 {
            w.step(&[]).unwrap();
        }
        let p1 = w.object_momentum();
        prop_assert!((p1 - p0).norm() <= 1e-9 * (1.0 + p0.norm()), "{:?} -> {:?}", p0, p1);
        let _ = b;
    }
}

fn pushed_cube_displacement(mass: f64) -> f64 {
    let mut w = table();
    let cube = resting_cube(&mut w, mass, 0.0);
    let half = SIDE / 2.0;
    let z = half + 0.002;
    let start = Pose::from_position(Vec3::new(0.0, -(2.0 * half + 0.005), z));
    w.attach_effector(Vec3::splat(half), start, EffectorConfig::default()).unwrap();
    let mut peak: f64 = 0.0;
    for i in 0..1500 {
        let y = start.position.y + 0.02 * (i as f64 + 1.0) * w.config.timestep;
        w.drive_effector(Pose::from_position(Vec3::new(0.0, y, z))).unwrap();
        let r = w.step(&[]).unwrap();
        if r.clone_contacts.contains(&cube) {
            peak = peak.max(r.decoupling);
        }
    }
    peak
}

#[test]
fn clone_lag_tracks_friction_load() {
    // Quasi-static push: k·|d| balances μ·M·g.
    let p = DecouplingParams::default();
    for mass in [0.05, 0.2, 0.8] {
        let d = pushed_cube_displacement(mass);
        let expected = 0.8 * mass * G / p.linear_stiffness;
        assert!((d - expected).abs() / expected < 0.05, "mass {mass}: {d} vs {expected}");
    }
}

#[test]
fn coupled_clone_follows_exactly() {
    let mut w = table();
    let cube = resting_cube(&mut w, 0.8, 0.0);
    let half = SIDE / 2.0;
    let z = half + 0.002;
    let start = Pose::from_position(Vec3::new(0.0, -0.04, z));
    let config = EffectorConfig { condition: Condition::Coupled, ..Default::default() };
    let clone = w.attach_effector(Vec3::splat(half), start, config).unwrap();
    for i in 0..600 {
        let y = start.position.y + 0.02 * (i as f64 + 1.0) * w.config.timestep;
        let pose = Pose::new(Vec3::new(0.0, y, z), UnitQuaternion::from_axis_angle(Vec3::Z, 0.001 * i as f64));
        w.drive_effector(pose).unwrap();
        let r = w.step(&[]).unwrap();
        assert_eq!(r.decoupling, 0.0);
        let got = w.body(clone).unwrap().pose;
        assert_eq!(got.position, pose.position);
        assert!((got.orientation.inverse() * pose.orientation).angle() < 1e-12);
    }
    assert!(w.body(cube).unwrap().pose.position.y > 0.02);
}

#[test]
fn free_fall_matches_semi_implicit_euler() {
    let mut w = World::new(WorldConfig { ground_height: None, ..Default::default() }).unwrap();
    let id = resting_cube(&mut w, 0.2, 0.0);
    let dt = w.config.timestep;
    for n in 1..=240u32 {
        w.step(&[]).unwrap();
        let vz = w.body(id).unwrap().linear_velocity.z;
        assert!((vz + G * n as f64 * dt).abs() < 1e-12, "step {n}: {vz}");
    }
}

#[test]
fn constant_force_accelerates() {
    let mut w = World::new(WorldConfig { gravity: Vec3::ZERO, ground_height: None, ..Default::default() }).unwrap();
    let id = w.add_body(RigidBody::cube(0.01, SIDE, Vec3::ZERO, MaterialParams::default()).unwrap());
    let f = ExternalForce { body: id, force: Vec3::new(0.01, 0.0, 0.0), torque: Vec3::ZERO };
    for _ in 0..240 {
        w.step(&[f]).unwrap();
    }
    assert!((w.body(id).unwrap().linear_velocity.x - 1.0).abs() < 1e-6);
}

#[test]
fn empty_world_only_advances_time() {
    let mut w = table();
    for _ in 0..10 {
        w.step(&[]).unwrap();
    }
    assert_eq!(w.step_count(), 10);
    assert!((w.time() - 10.0 / 240.0).abs() < 1e-15);
    assert!(w.bodies().is_empty());
}

#[test]
fn kinematic_bodies_ignore_forces() {
    let mut w = table();
    let mut b = RigidBody::cube(0.2, SIDE, Vec3::new(0.0, 0.0, 0.1), MaterialParams::default()).unwrap();
    b.kind = decouple_core::BodyKind::Kinematic;
    let id = w.add_body(b);
    w.step(&[ExternalForce { body: id, force: Vec3::new(5.0, 0.0, 0.0), torque: Vec3::ZERO }]).unwrap();
    let b = w.body(id).unwrap();
    assert!(b.force_warning());
    assert_eq!(b.pose.position, Vec3::new(0.0, 0.0, 0.1));
}

#[test]
fn pusher_impulse_grows_with_mass() {
    // Same kinematic push against each mass; compare the impulse the cube
    // returns to the pusher.
    let impulse = |mass: f64| {
        let mut w = table();
        resting_cube(&mut w, mass, 0.0);
        let mut pusher = RigidBody::cube(1.0, SIDE, Vec3::new(0.0, -0.04, SIDE / 2.0 + 0.002), MaterialParams::default()).unwrap();
        pusher.kind = decouple_core::BodyKind::Kinematic;
        let id = w.add_body(pusher);
        let mut total = 0.0;
        for i in 1..=600 {
            let y = -0.04 + 0.02 * i as f64 / 240.0;
            w.body_mut(id).unwrap().kinematic_target = Some(Pose::from_position(Vec3::new(0.0, y, SIDE / 2.0 + 0.002)));
            w.step(&[]).unwrap();
            total += -w.last_impulses()[id.0 as usize].linear.y;
        }
        total
    };
    let (a, b, c) = (impulse(0.015), impulse(0.2), impulse(0.8));
    assert!(0.0 < a && a < b && b < c, "{a} {b} {c}");
}

#[test]
fn replaying_a_force_log_is_exact() {
    let build = || {
        let mut w = table();
        let a = resting_cube(&mut w, 0.2, 0.0);
        resting_cube(&mut w, 0.05, 0.05);
        (w, a)
    };
    let (mut w, a) = build();
    let mut log = Vec::new();
    for i in 0..480 {
        let f = ExternalForce { body: a, force: Vec3::new(3.0 * (i as f64 * 0.05).sin(), 0.5, 0.0), torque: Vec3::new(0.0, 0.0, 0.001) };
        log.push(f);
        w.step(&[f]).unwrap();
    }
    let (w2, _) = build();
    let mut replay = w2;
    for f in &log {
        replay = decouple_core::dynamics::step_world(&replay, &[*f], replay.config.timestep).unwrap();
    }
    assert_eq!(w.snapshot(), replay.snapshot());
}

#[test]
fn step_world_rejects_bad_dt() {
    let w = table();
    assert!(decouple_core::dynamics::step_world(&w, &[], 0.0).is_err());
    assert!(decouple_core::dynamics::step_world(&w, &[], -1.0).is_err());
}
