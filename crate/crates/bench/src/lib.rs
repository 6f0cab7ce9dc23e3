//! Fixtures shared by the benchmarks.

use decouple_core::dynamics::World;
use decouple_core::experiment::standard_push;
use decouple_core::math::Pose;
use decouple_core::scenario::{CubeLayout, Scenario};

/// The standard three-cube row, played until the clone is mid-push
/// against the heaviest cube. Returns the world and the pose to hold.
pub fn pushing_world() -> (World, Pose) {
    let scenario = Scenario {
        cubes: CubeLayout { masses: vec![0.8, 0.2, 0.015], ..Default::default() },
        ..Default::default()
    };
    let trajectory = standard_push(&scenario, &scenario.cubes.masses).expect("push");
    let (mut world, _) = scenario.build_world(trajectory.start()).expect("world");
    let dt = world.config.timestep;
    let steps = (6.0 / dt) as u64;
    let mut pose = trajectory.start();
    for i in 1..=steps {
        pose = trajectory.sample(i as f64 * dt).expect("sample").0;
        world.drive_effector(pose).expect("drive");
        world.step(&[]).expect("step");
    }
    (world, pose)
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixture_is_in_contact() {
        let (world, _) = super::pushing_world();
        let d = world.effector().unwrap().state.d.norm();
        assert!(d > 0.05, "clone should be loaded by the 800 g cube, |d| = {d}");
    }
}
