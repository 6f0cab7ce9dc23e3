use crate::decoupling::Condition;
use crate::dynamics::{BodyId, StepReport, World};
use crate::error::Result;
use crate::scenario::{push_trajectory, CubeLayout, PushParams, Scenario, Trajectory, TrajectorySource};

/// Running peak of the decoupling magnitude while the clone touches each
/// tracked body.
#[derive(Clone, Debug, PartialEq)]
pub struct PeakTracker {
    bodies: Vec<BodyId>,
    peaks: Vec<f64>,
}

impl PeakTracker {
    pub fn new(bodies: Vec<BodyId>) -> Self {
        let n = bodies.len();
        PeakTracker { bodies, peaks: vec![0.0; n] }
    }

    pub fn observe(&mut self, report: &StepReport) {
        for touched in &report.clone_contacts {
            if let Some(i) = self.bodies.iter().position(|b| b == touched) {
                self.peaks[i] = self.peaks[i].max(report.decoupling);
            }
        }
    }

    pub fn peaks(&self) -> &[f64] {
        &self.peaks
    }

    pub fn reset(&mut self) {
        self.peaks.iter_mut().for_each(|p| *p = 0.0);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PushOutcome {
    /// Peak signal per cube, row order, m.
    pub peaks: Vec<f64>,
    /// Simulated time, s.
    pub duration: f64,
}

/// Push settings for `scenario`: its own push section if it has one, else
/// the defaults.
pub fn push_params(scenario: &Scenario) -> PushParams {
    match &scenario.trajectory {
        Some(TrajectorySource::Push { params }) => *params,
        _ => PushParams::default(),
    }
}

/// Push trajectory for cubes with the given masses. The push travel is
/// lengthened by the spring deflection that unsticks the heaviest cube, so
/// every cube moves by at least the configured distance.
pub fn standard_push(scenario: &Scenario, masses: &[f64]) -> Result<Trajectory> {
    let mut params = push_params(scenario);
    let heaviest = masses.iter().cloned().fold(0.0, f64::max);
    params.preload += PushParams::breakaway_deflection(
        heaviest,
        scenario.material.friction,
        scenario.world.gravity.norm(),
        scenario.decoupling.linear_stiffness,
    );
    let layout = CubeLayout { masses: masses.to_vec(), arrangement_seed: None, ..scenario.cubes.clone() };
    let xs: Vec<f64> = (0..masses.len()).map(|i| layout.slot_center(i).x).collect();
    push_trajectory(scenario.geometry(), &xs, &params)
}

/// Plays `trajectory` into `world`, one sample per step, until it ends.
pub fn play(world: &mut World, trajectory: &Trajectory, tracker: &mut PeakTracker) -> Result<f64> {
    let dt = world.config.timestep;
    let steps = (trajectory.duration() / dt).ceil() as u64 + 1;
    let t0 = world.time();
    for i in 1..=steps {
        let (pose, _) = trajectory.sample(i as f64 * dt)?;
        world.drive_effector(pose)?;
        let report = world.step(&[])?;
        tracker.observe(&report);
    }
    Ok(world.time() - t0)
}

/// Builds a row of cubes with `masses` (already in row order) and pushes
/// each one with the standard trajectory.
pub fn run_push_trial(scenario: &Scenario, masses: &[f64], condition: Condition) -> Result<PushOutcome> {
    let mut s = scenario.clone();
    s.cubes.masses = masses.to_vec();
    s.cubes.arrangement_seed = None;
    s.condition = condition;
    let trajectory = standard_push(&s, masses)?;
    let (mut world, ids) = s.build_world(trajectory.start())?;
    let mut tracker = PeakTracker::new(ids);
    let duration = play(&mut world, &trajectory, &mut tracker)?;
    Ok(PushOutcome { peaks: tracker.peaks().to_vec(), duration })
}
