use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use decouple_bench::pushing_world;
use decouple_core::decoupling::{apply_constraint, ConstraintState, DecouplingParams, RealMotion};
use decouple_core::dynamics::{BodyKind, BodyRole, MaterialParams, RigidBody};
use decouple_core::experiment::run_push_trial;
use decouple_core::math::{Pose, UnitQuaternion, Vec3};
use decouple_core::scenario::Scenario;
use decouple_core::Condition;
use decouple_session::protocol::snapshot_for_client;

fn constraint(c: &mut Criterion) {
    let params = DecouplingParams::default();
    let dt = 1.0 / 240.0;
    let mut clone = RigidBody::new_box(
        BodyKind::Dynamic,
        BodyRole::EffectorClone,
        params.clone_mass,
        Vec3::splat(0.0175),
        Pose::IDENTITY,
        MaterialParams::default(),
    )
    .unwrap();
    let mut state = ConstraintState::new(&params);
    let start = Pose::new(Vec3::new(0.01, 0.02, 0.0), UnitQuaternion::from_axis_angle(Vec3::Z, 0.3));
    let end = Pose::new(Vec3::new(0.011, 0.02, 0.0), UnitQuaternion::from_axis_angle(Vec3::Z, 0.31));
    let real = RealMotion::between(start, end, dt);
    c.bench_function("constraint_step", |b| {
        b.iter(|| apply_constraint(black_box(&mut clone), &mut state, black_box(&real), &params, dt).unwrap())
    });
}

fn world_step(c: &mut Criterion) {
    let (world, pose) = pushing_world();
    c.bench_function("world_step_three_cubes_in_contact", |b| {
        b.iter_batched_ref(
            || world.clone(),
            |w| {
                w.drive_effector(pose).unwrap();
                black_box(w.step(&[]).unwrap());
            },
            BatchSize::SmallInput,
        )
    });
}

fn snapshot(c: &mut Criterion) {
    let (world, _) = pushing_world();
    c.bench_function("world_state_message_json", |b| b.iter(|| serde_json::to_string(&snapshot_for_client(black_box(&world), 1)).unwrap()));
}

fn push_trial(c: &mut Criterion) {
    let scenario = Scenario::default();
    let mut group = c.benchmark_group("push_trial");
    group.sample_size(10);
    group.bench_function("single_200g_cube", |b| b.iter(|| run_push_trial(&scenario, black_box(&[0.2]), Condition::Decoupled).unwrap()));
    group.finish();
}

criterion_group!(benches, constraint, world_step, snapshot, push_trial);
criterion_main!(benches);
