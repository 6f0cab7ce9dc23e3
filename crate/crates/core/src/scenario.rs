//! Scenario files and scripted effector trajectories.
//!
//! Files are JSON in SI units (kg, m, s, rad). Every section is optional;
//! missing fields take the defaults below, so `{"cubes": {"masses": [0.015,
//! 0.2, 0.8]}}` is a complete scenario.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::decoupling::{Condition, DecouplingParams, IntegrationMode};
use crate::dynamics::{BodyId, EffectorConfig, MaterialParams, RigidBody, World, WorldConfig};
use crate::error::{Error, Result};
use crate::math::{box_inertia, InertiaDiag, Pose, UnitQuaternion, Vec3};

pub const DEFAULT_CUBE_SIDE: f64 = 0.035;
pub const DEFAULT_SPACING: f64 = 0.08;
/// Gap between the effector's underside and the table, m.
pub const DEFAULT_HOVER: f64 = 0.002;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CubeLayout {
    /// Cube masses, kg, in the order they are listed.
    pub masses: Vec<f64>,
    /// Edge length, m.
    pub side: f64,
    /// Center-to-center distance along x, m.
    pub spacing: f64,
    /// Shuffles the cubes along the row; `None` keeps the listed order.
    pub arrangement_seed: Option<u64>,
}

impl Default for CubeLayout {
    fn default() -> Self {
        CubeLayout { masses: vec![0.015, 0.2, 0.8], side: DEFAULT_CUBE_SIDE, spacing: DEFAULT_SPACING, arrangement_seed: None }
    }
}

impl CubeLayout {
    /// Masses in row order, left to right.
    pub fn arranged(&self) -> Vec<f64> {
        let mut masses = self.masses.clone();
        if let Some(seed) = self.arrangement_seed {
            masses.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        masses
    }

    /// Center of the cube in row slot `i`, resting on the table.
    pub fn slot_center(&self, i: usize) -> Vec3 {
        let n = self.masses.len() as f64;
        Vec3::new((i as f64 - (n - 1.0) / 2.0) * self.spacing, 0.0, self.side / 2.0)
    }

    fn validate(&self) -> Result<()> {
        if self.masses.is_empty() {
            return Err(Error::validation("cubes.masses", "at least one cube is required"));
        }
        for (i, m) in self.masses.iter().enumerate() {
            if !(*m > 0.0) || !m.is_finite() {
                return Err(Error::validation(format!("cubes.masses[{i}]"), "mass must be positive"));
            }
        }
        if !(self.side > 0.0) || !self.side.is_finite() {
            return Err(Error::validation("cubes.side", "side must be positive"));
        }
        if !(self.spacing >= self.side) {
            return Err(Error::validation("cubes.spacing", "spacing must be at least the cube side"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecouplingSection {
    pub linear_stiffness: f64,
    pub torsional_stiffness: f64,
    pub clone_mass: f64,
    /// Defaults to a solid cube of `effector_side`.
    pub clone_inertia: Option<InertiaDiag>,
    /// Edge of the effector box, m.
    pub effector_side: f64,
    pub clone_gravity: bool,
    pub integration: IntegrationMode,
}

impl Default for DecouplingSection {
    fn default() -> Self {
        let p = DecouplingParams::default();
        DecouplingSection {
            linear_stiffness: p.linear_stiffness,
            torsional_stiffness: p.torsional_stiffness,
            clone_mass: p.clone_mass,
            clone_inertia: None,
            effector_side: DEFAULT_CUBE_SIDE,
            clone_gravity: false,
            integration: IntegrationMode::Exact,
        }
    }
}

impl DecouplingSection {
    pub fn params(&self) -> Result<DecouplingParams> {
        if !(self.clone_mass > 0.0) {
            return Err(Error::validation("decoupling.clone_mass", "mass must be positive"));
        }
        if !(self.effector_side > 0.0) {
            return Err(Error::validation("decoupling.effector_side", "side must be positive"));
        }
        let clone_inertia = match self.clone_inertia {
            Some(i) => i,
            None => box_inertia(self.clone_mass, Vec3::splat(self.effector_side / 2.0))?,
        };
        let params = DecouplingParams {
            linear_stiffness: self.linear_stiffness,
            torsional_stiffness: self.torsional_stiffness,
            clone_mass: self.clone_mass,
            clone_inertia,
        };
        params.validate().map_err(|e| match e {
            Error::Validation { field, message } => Error::validation(format!("decoupling.{field}"), message),
            other => other,
        })?;
        Ok(params)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialSection {
    pub friction: f64,
    pub restitution: f64,
}

impl Default for MaterialSection {
    fn default() -> Self {
        let m = MaterialParams::default();
        MaterialSection { friction: m.friction_coefficient, restitution: m.restitution }
    }
}

impl MaterialSection {
    pub fn params(&self) -> MaterialParams {
        MaterialParams { friction_coefficient: self.friction, restitution: self.restitution }
    }
}

/// One tracked pose.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySample {
    pub t: f64,
    pub position: Vec3,
    #[serde(default)]
    pub orientation: UnitQuaternion,
}

/// Time-ordered effector poses, linearly interpolated in position and
/// spherically in orientation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn new(samples: Vec<TrajectorySample>) -> Result<Self> {
        let t = Trajectory { samples };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.samples.first().ok_or_else(|| Error::validation("trajectory.samples", "no samples"))?;
        if first.t != 0.0 {
            return Err(Error::validation("trajectory.samples[0].t", "first sample must be at t = 0"));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if !s.position.is_finite() || !s.orientation.is_finite() || !s.t.is_finite() {
                return Err(Error::validation(format!("trajectory.samples[{i}]"), "sample must be finite"));
            }
            if (s.orientation.norm() - 1.0).abs() > 1e-6 {
                return Err(Error::validation(format!("trajectory.samples[{i}].orientation"), "quaternion must be unit length"));
            }
            if i > 0 && !(s.t > self.samples[i - 1].t) {
                return Err(Error::validation(format!("trajectory.samples[{i}].t"), "sample times must be strictly increasing"));
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn start(&self) -> Pose {
        self.samples.first().map_or(Pose::IDENTITY, |s| Pose::new(s.position, s.orientation))
    }

    /// Pose and linear velocity at `t`. Past the last sample the final pose
    /// is held with zero velocity.
    pub fn sample(&self, t: f64) -> Result<(Pose, Vec3)> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!("trajectory time must be non-negative, got {t}")));
        }
        let last = self.samples.last().ok_or_else(|| Error::State("empty trajectory".into()))?;
        if t >= last.t {
            return Ok((Pose::new(last.position, last.orientation), Vec3::ZERO));
        }
        // First sample strictly after t; t ≥ samples[0].t = 0 so i ≥ 1.
        let i = self.samples.partition_point(|s| s.t <= t);
        let (a, b) = (&self.samples[i - 1], &self.samples[i]);
        let span = b.t - a.t;
        let s = (t - a.t) / span;
        let position = a.position + (b.position - a.position) * s;
        let orientation = a.orientation.slerp(b.orientation, s);
        Ok((Pose::new(position, orientation), (b.position - a.position) / span))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let t: Trajectory = parse_json(&text)?;
        t.validate()?;
        Ok(t)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Builds a trajectory from straight segments at given speeds.
struct PathBuilder {
    samples: Vec<TrajectorySample>,
}

impl PathBuilder {
    fn new(start: Vec3) -> Self {
        PathBuilder { samples: vec![TrajectorySample { t: 0.0, position: start, orientation: UnitQuaternion::IDENTITY }] }
    }

    fn last(&self) -> TrajectorySample {
        *self.samples.last().expect("non-empty")
    }

    fn move_to(&mut self, to: Vec3, speed: f64) {
        let last = self.last();
        let dist = (to - last.position).norm();
        if dist > 0.0 {
            self.samples.push(TrajectorySample { t: last.t + dist / speed, position: to, orientation: last.orientation });
        }
    }

    fn wait(&mut self, duration: f64) {
        let last = self.last();
        if duration > 0.0 {
            self.samples.push(TrajectorySample { t: last.t + duration, ..last });
        }
    }

    fn finish(self) -> Trajectory {
        Trajectory { samples: self.samples }
    }
}

/// The standard push: approach a cube face along +y at constant speed,
/// push, retreat behind the row, move to the next cube.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PushParams {
    /// Push speed, m/s.
    pub speed: f64,
    /// How far the real effector travels past first contact, m.
    pub distance: f64,
    /// Free travel before contact, m.
    pub approach_gap: f64,
    /// Speed of retreat and lateral moves, m/s.
    pub transit_speed: f64,
    /// Pause before and after each push, s.
    pub dwell: f64,
    /// Extra travel added on top of `distance`, m. The harness sets it to the
    /// spring deflection needed to unstick the heaviest cube.
    pub preload: f64,
}

impl Default for PushParams {
    fn default() -> Self {
        PushParams { speed: 0.02, distance: 0.10, approach_gap: 0.01, transit_speed: 0.1, dwell: 0.25, preload: 0.0 }
    }
}

impl PushParams {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("speed", self.speed), ("transit_speed", self.transit_speed)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(format!("trajectory.{field}"), "speed must be positive"));
            }
        }
        for (field, v) in [("distance", self.distance), ("approach_gap", self.approach_gap), ("dwell", self.dwell), ("preload", self.preload)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::validation(format!("trajectory.{field}"), "must be non-negative"));
            }
        }
        Ok(())
    }

    /// Spring deflection at which a cube of `mass` starts to slide.
    pub fn breakaway_deflection(mass: f64, friction: f64, gravity: f64, stiffness: f64) -> f64 {
        friction * mass * gravity / stiffness
    }
}

/// Geometry shared by the generators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RowGeometry {
    pub cube_side: f64,
    pub effector_side: f64,
    pub hover: f64,
}

impl RowGeometry {
    fn effector_z(&self) -> f64 {
        self.effector_side / 2.0 + self.hover
    }

    fn start_y(&self, gap: f64) -> f64 {
        -(self.cube_side / 2.0 + self.effector_side / 2.0 + gap)
    }
}

/// Pushes the cubes at the given x positions, in the given order.
pub fn push_trajectory(geometry: RowGeometry, xs: &[f64], params: &PushParams) -> Result<Trajectory> {
    params.validate()?;
    let z = geometry.effector_z();
    let y0 = geometry.start_y(params.approach_gap);
    let y1 = y0 + params.approach_gap + params.distance + params.preload;
    let first = xs.first().copied().unwrap_or(0.0);
    let mut path = PathBuilder::new(Vec3::new(first, y0, z));
    for (i, &x) in xs.iter().enumerate() {
        if i > 0 {
            path.move_to(Vec3::new(x, y0, z), params.transit_speed);
        }
        path.wait(params.dwell);
        path.move_to(Vec3::new(x, y1, z), params.speed);
        path.wait(params.dwell);
        path.move_to(Vec3::new(x, y0, z), params.transit_speed);
    }
    path.wait(params.dwell);
    Ok(path.finish())
}

/// Brief contacts: approach, press `depth` past the face, retreat.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PokeParams {
    pub approach_speed: f64,
    pub depth: f64,
    pub approach_gap: f64,
    pub dwell: f64,
}

impl Default for PokeParams {
    fn default() -> Self {
        PokeParams { approach_speed: 0.05, depth: 0.005, approach_gap: 0.01, dwell: 0.1 }
    }
}

pub fn poke_trajectory(geometry: RowGeometry, xs: &[f64], params: &PokeParams) -> Result<Trajectory> {
    if !(params.approach_speed > 0.0) {
        return Err(Error::validation("trajectory.approach_speed", "speed must be positive"));
    }
    if !(params.depth >= 0.0) || !(params.approach_gap >= 0.0) || !(params.dwell >= 0.0) {
        return Err(Error::validation("trajectory", "depth, gap and dwell must be non-negative"));
    }
    let z = geometry.effector_z();
    let y0 = geometry.start_y(params.approach_gap);
    let y1 = y0 + params.approach_gap + params.depth;
    let first = xs.first().copied().unwrap_or(0.0);
    let mut path = PathBuilder::new(Vec3::new(first, y0, z));
    for (i, &x) in xs.iter().enumerate() {
        if i > 0 {
            path.move_to(Vec3::new(x, y0, z), params.approach_speed);
        }
        path.move_to(Vec3::new(x, y1, z), params.approach_speed);
        path.wait(params.dwell);
        path.move_to(Vec3::new(x, y0, z), params.approach_speed);
    }
    Ok(path.finish())
}

/// Where a scenario's effector motion comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TrajectorySource {
    /// Trajectory JSON file, relative to the scenario file.
    File { path: PathBuf },
    Samples { samples: Vec<TrajectorySample> },
    /// Standard push of every cube in row order.
    Push {
        #[serde(flatten)]
        params: PushParams,
    },
    Poke {
        #[serde(flatten)]
        params: PokeParams,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub cubes: CubeLayout,
    pub decoupling: DecouplingSection,
    pub material: MaterialSection,
    pub condition: Condition,
    pub world: WorldConfig,
    pub trajectory: Option<TrajectorySource>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            cubes: CubeLayout::default(),
            decoupling: DecouplingSection::default(),
            material: MaterialSection::default(),
            condition: Condition::Decoupled,
            world: WorldConfig::default(),
            trajectory: None,
        }
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), column: e.column(), message: e.to_string() })
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = parse_json(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut s = Self::from_json(&text)?;
        // Keep file references resolvable from the working directory.
        if let Some(TrajectorySource::File { path: rel }) = &mut s.trajectory {
            if rel.is_relative() {
                if let Some(dir) = path.parent() {
                    *rel = dir.join(&*rel);
                }
            }
        }
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn validate(&self) -> Result<()> {
        self.cubes.validate()?;
        self.decoupling.params()?;
        self.material.params().validate().map_err(|e| match e {
            Error::Validation { field, message } => Error::validation(format!("material.{field}"), message),
            other => other,
        })?;
        self.world.validate()?;
        self.decoupling
            .integration
            .check(&self.decoupling.params()?, self.world.timestep)
            .map_err(|e| Error::validation("decoupling.integration", e.to_string()))?;
        match &self.trajectory {
            Some(TrajectorySource::Samples { samples }) => Trajectory { samples: samples.clone() }.validate()?,
            Some(TrajectorySource::Push { params }) => params.validate()?,
            _ => {}
        }
        Ok(())
    }

    pub fn params(&self) -> Result<DecouplingParams> {
        self.decoupling.params()
    }

    pub fn geometry(&self) -> RowGeometry {
        RowGeometry { cube_side: self.cubes.side, effector_side: self.decoupling.effector_side, hover: DEFAULT_HOVER }
    }

    pub fn effector_config(&self) -> Result<EffectorConfig> {
        Ok(EffectorConfig {
            params: self.params()?,
            condition: self.condition,
            integration: self.decoupling.integration,
            clone_gravity: self.decoupling.clone_gravity,
        })
    }

    /// Resolves the effector trajectory, if any.
    pub fn resolve_trajectory(&self) -> Result<Option<Trajectory>> {
        let xs: Vec<f64> = (0..self.cubes.masses.len()).map(|i| self.cubes.slot_center(i).x).collect();
        Ok(match &self.trajectory {
            None => None,
            Some(TrajectorySource::File { path }) => Some(Trajectory::load(path)?),
            Some(TrajectorySource::Samples { samples }) => Some(Trajectory::new(samples.clone())?),
            Some(TrajectorySource::Push { params }) => Some(push_trajectory(self.geometry(), &xs, params)?),
            Some(TrajectorySource::Poke { params }) => Some(poke_trajectory(self.geometry(), &xs, params)?),
        })
    }

    /// Default resting pose of the effector: behind the first cube.
    pub fn effector_home(&self) -> Pose {
        let g = self.geometry();
        Pose::from_position(Vec3::new(self.cubes.slot_center(0).x, g.start_y(PushParams::default().approach_gap), g.effector_z()))
    }

    /// Builds the world: table, cubes in arranged order, and the effector
    /// at `effector_start`. Returns the cube ids in row order.
    pub fn build_world(&self, effector_start: Pose) -> Result<(World, Vec<BodyId>)> {
        self.validate()?;
        let mut world = World::new(self.world)?;
        let material = self.material.params();
        world.ground_material = material;
        let ids = self
            .cubes
            .arranged()
            .into_iter()
            .enumerate()
            .map(|(i, m)| RigidBody::cube(m, self.cubes.side, self.cubes.slot_center(i), material).map(|b| world.add_body(b)))
            .collect::<Result<Vec<_>>>()?;
        let clone = world.attach_effector(Vec3::splat(self.decoupling.effector_side / 2.0), effector_start, self.effector_config()?)?;
        world.body_mut(clone).expect("just added").material = material;
        Ok((world, ids))
    }
}

/// Parses a mass with an explicit unit: `15g`, `0.2kg`. Bare numbers are kg.
pub fn parse_mass(s: &str) -> Result<f64> {
    let v = parse_with_units(s, &[("kg", 1.0), ("g", 1e-3)])?;
    if !(v > 0.0) {
        return Err(Error::InvalidArgument(format!("mass must be positive: {s:?}")));
    }
    Ok(v)
}

/// Parses a length with an explicit unit: `1mm`, `3.5cm`, `0.1m`. Bare
/// numbers are meters.
pub fn parse_length(s: &str) -> Result<f64> {
    parse_with_units(s, &[("mm", 1e-3), ("cm", 1e-2), ("m", 1.0)])
}

fn parse_with_units(s: &str, units: &[(&str, f64)]) -> Result<f64> {
    let t = s.trim();
    let (num, scale) = units
        .iter()
        .find_map(|(suffix, scale)| t.strip_suffix(suffix).map(|n| (n.trim(), *scale)))
        .unwrap_or((t, 1.0));
    let v: f64 = num.parse().map_err(|_| Error::InvalidArgument(format!("cannot parse quantity {s:?}")))?;
    if !v.is_finite() {
        return Err(Error::InvalidArgument(format!("quantity must be finite: {s:?}")));
    }
    Ok(v * scale)
}

/// Splits `a,b,c` and parses each item.
pub fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(item).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::BodyKind;
    use proptest::prelude::*;

    #[test]
    fn minimal_file_takes_defaults() {
        let s = Scenario::from_json(r#"{"cubes": {"masses": [0.015, 0.2, 0.8]}}"#).unwrap();
        let p = s.params().unwrap();
        assert_eq!(p.linear_stiffness, 50.0);
        assert_eq!(p.torsional_stiffness, 150.0);
        assert_eq!(p.clone_mass, 0.010);
        assert_eq!(s.material.friction, 0.8);
        assert_eq!(s.cubes.side, 0.035);
        assert_eq!(s.world.timestep, 1.0 / 240.0);
    }

    #[test]
    fn negative_mass_names_the_field() {
        let err = Scenario::from_json(r#"{"cubes": {"masses": [-5]}}"#).unwrap_err();
        match err {
            Error::Validation { field, message } => {
                assert_eq!(field, "cubes.masses[0]");
                assert_eq!(message, "mass must be positive");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = Scenario::from_json("{\n  \"cubes\": {\"masses\": [0.1,]}\n}").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other}"),
        }
        assert!(matches!(Scenario::from_json(r#"{"cubez": {}}"#), Err(Error::Parse { .. })));
    }

    #[test]
    fn coupled_condition_builds_kinematic_clone() {
        let s = Scenario::from_json(r#"{"cubes": {"masses": [0.2]}, "condition": "C1"}"#).unwrap();
        let (world, ids) = s.build_world(s.effector_home()).unwrap();
        assert_eq!(ids.len(), 1);
        let clone = world.effector().unwrap().body;
        assert_eq!(world.body(clone).unwrap().kind, BodyKind::Kinematic);
    }

    #[test]
    fn arrangement_is_seeded() {
        let mut layout = CubeLayout { arrangement_seed: Some(3), ..Default::default() };
        let a = layout.arranged();
        assert_eq!(a, layout.arranged());
        let mut sorted = a.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, vec![0.015, 0.2, 0.8]);
        layout.arrangement_seed = None;
        assert_eq!(layout.arranged(), vec![0.015, 0.2, 0.8]);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let mut s = Scenario::from_json(r#"{"cubes": {"masses": [0.015, 0.8], "arrangement_seed": 4}, "trajectory": {"kind": "push", "speed": 0.03}}"#).unwrap();
        s.condition = Condition::Coupled;
        s.save(&path).unwrap();
        let back = Scenario::load(&path).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.digest(), s.digest());
    }

    fn two_point() -> Trajectory {
        Trajectory::new(vec![
            TrajectorySample { t: 0.0, position: Vec3::ZERO, orientation: UnitQuaternion::IDENTITY },
            TrajectorySample { t: 1.0, position: Vec3::new(0.1, 0.0, 0.0), orientation: UnitQuaternion::IDENTITY },
        ])
        .unwrap()
    }

    #[test]
    fn trajectory_sampling() {
        let t = two_point();
        let (p, v) = t.sample(0.5).unwrap();
        assert!((p.position.x - 0.05).abs() < 1e-15);
        assert!((v.x - 0.1).abs() < 1e-15 && v.y == 0.0);
        let (p, _) = t.sample(0.0).unwrap();
        assert_eq!(p.position, Vec3::ZERO);
        let (p, v) = t.sample(3.0).unwrap();
        assert_eq!(p.position.x, 0.1);
        assert_eq!(v, Vec3::ZERO);
        assert!(t.sample(-0.1).is_err());
    }

    #[test]
    fn trajectory_rejects_bad_samples() {
        let s = |t: f64| TrajectorySample { t, position: Vec3::ZERO, orientation: UnitQuaternion::IDENTITY };
        assert!(Trajectory::new(vec![]).is_err());
        assert!(Trajectory::new(vec![s(0.1)]).is_err());
        assert!(Trajectory::new(vec![s(0.0), s(0.0)]).is_err());
    }

    #[test]
    fn push_covers_each_cube() {
        let g = RowGeometry { cube_side: 0.035, effector_side: 0.035, hover: 0.002 };
        let p = PushParams::default();
        let t = push_trajectory(g, &[-0.08, 0.0, 0.08], &p).unwrap();
        let furthest = t.samples.iter().map(|s| s.position.y).fold(f64::MIN, f64::max);
        assert!((furthest - (-0.045 + 0.11)).abs() < 1e-12);
        assert!(t.samples.iter().all(|s| (s.position.z - 0.0195).abs() < 1e-12));
        assert!(t.samples.iter().any(|s| s.position.x == 0.08));
    }

    #[test]
    fn unit_parsing() {
        assert_eq!(parse_mass("15g").unwrap(), 0.015);
        assert_eq!(parse_mass("0.2kg").unwrap(), 0.2);
        assert_eq!(parse_mass("0.8").unwrap(), 0.8);
        assert!(parse_mass("-1g").is_err());
        assert!(parse_mass("abc").is_err());
        assert_eq!(parse_length("1mm").unwrap(), 0.001);
        assert_eq!(parse_length("3.5cm").unwrap(), 0.035);
        assert_eq!(parse_length("2m").unwrap(), 2.0);
        assert_eq!(parse_list("15g,200g,800g", parse_mass).unwrap(), vec![0.015, 0.2, 0.8]);
    }

    proptest! {
        #[test]
        fn sampling_is_continuous(speed in 0.01..0.5f64, eps in 1e-13..1e-11f64) {
            let g = RowGeometry { cube_side: 0.035, effector_side: 0.035, hover: 0.002 };
            let p = PushParams { speed, ..Default::default() };
            let t = push_trajectory(g, &[-0.08, 0.0, 0.08], &p).unwrap();
            for s in &t.samples[1..] {
                let (before, _) = t.sample(s.t - eps).unwrap();
                let (at, _) = t.sample(s.t).unwrap();
                prop_assert!((before.position - at.position).norm() < 1e-9);
            }
        }
    }
}
