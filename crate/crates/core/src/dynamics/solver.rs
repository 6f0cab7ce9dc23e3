//! Sequential-impulse contact solver with Coulomb friction.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::body::{BodyId, MaterialParams};
use super::contact::ContactManifold;
use crate::math::{Mat3, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub velocity_iterations: usize,
    /// Fraction of the penetration removed per step.
    pub baumgarte: f64,
    /// Penetration tolerated without positional correction, m.
    pub penetration_slop: f64,
    /// Approach speed below which restitution is ignored, m/s.
    pub restitution_threshold: f64,
    pub warm_starting: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            velocity_iterations: 8,
            baumgarte: 0.2,
            penetration_slop: 5e-5,
            restitution_threshold: 0.2,
            warm_starting: true,
        }
    }
}

/// Velocity state of one body as the solver sees it.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SolverBody {
    pub center: Vec3,
    pub inverse_mass: f64,
    pub inverse_inertia: Mat3,
    pub linear_velocity: Vec3,
    pub angular_velocity: Vec3,
}

impl SolverBody {
    fn velocity_at(&self, r: Vec3) -> Vec3 {
        self.linear_velocity + self.angular_velocity.cross(r)
    }

    fn apply(&mut self, r: Vec3, impulse: Vec3) {
        self.linear_velocity += impulse * self.inverse_mass;
        self.angular_velocity += self.inverse_inertia.mul_vec(r.cross(impulse));
    }

    fn effective_mass_term(&self, r: Vec3, dir: Vec3) -> f64 {
        let rn = r.cross(dir);
        self.inverse_mass + self.inverse_inertia.mul_vec(rn).cross(r).dot(dir)
    }
}

/// Impulse that body received from contacts during one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BodyImpulse {
    pub linear: Vec3,
    /// About the body's center of mass.
    pub angular: Vec3,
}

#[derive(Clone, Copy, Debug)]
struct CachedPoint {
    position: Vec3,
    normal: f64,
    tangent: [f64; 2],
}

/// Accumulated impulses from the previous step, keyed by body pair.
#[derive(Clone, Debug, Default)]
pub(crate) struct WarmStartCache {
    pairs: HashMap<(BodyId, Option<BodyId>), Vec<CachedPoint>>,
}

/// Points closer than this reuse the previous step's impulses.
const WARM_MATCH_DISTANCE: f64 = 2e-3;

impl WarmStartCache {
    fn lookup(&self, key: (BodyId, Option<BodyId>), position: Vec3) -> Option<CachedPoint> {
        let points = self.pairs.get(&key)?;
        points
            .iter()
            .map(|p| ((p.position - position).norm_squared(), p))
            .filter(|(d2, _)| *d2 < WARM_MATCH_DISTANCE * WARM_MATCH_DISTANCE)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, p)| *p)
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }
}

struct Row {
    manifold: usize,
    a: usize,
    b: Option<usize>,
    r_a: Vec3,
    r_b: Vec3,
    normal: Vec3,
    tangents: [Vec3; 2],
    normal_mass: f64,
    tangent_mass: [f64; 2],
    bias: f64,
    friction: f64,
    lambda_n: f64,
    lambda_t: [f64; 2],
}

fn inverse_or_zero(k: f64) -> f64 {
    if k > 1e-12 {
        1.0 / k
    } else {
        0.0
    }
}

fn relative_velocity(bodies: &[SolverBody], row: &Row) -> Vec3 {
    let va = bodies[row.a].velocity_at(row.r_a);
    let vb = row.b.map_or(Vec3::ZERO, |b| bodies[b].velocity_at(row.r_b));
    va - vb
}

fn push(bodies: &mut [SolverBody], row: &Row, impulse: Vec3) {
    bodies[row.a].apply(row.r_a, impulse);
    if let Some(b) = row.b {
        bodies[b].apply(row.r_b, -impulse);
    }
}

/// Resolves contacts by adjusting body velocities in place.
///
/// `index` maps a body id to its slot in `bodies`; `materials` gives the
/// material of each slot. Returns the impulse each slot received and the
/// total normal impulse carried by each manifold.
pub(crate) fn solve_contacts(
    bodies: &mut [SolverBody],
    materials: &[MaterialParams],
    ground: &MaterialParams,
    index: impl Fn(BodyId) -> usize,
    manifolds: &[ContactManifold],
    cache: &mut WarmStartCache,
    config: &SolverConfig,
    dt: f64,
) -> (Vec<BodyImpulse>, Vec<f64>) {
    let mut rows = Vec::new();
    let mut row_keys = Vec::new();
    for (mi, m) in manifolds.iter().enumerate() {
        let a = index(m.body_a);
        let b = m.body_b.map(&index);
        let mat = MaterialParams::combine(&materials[a], b.map_or(ground, |b| &materials[b]));
        for p in &m.points {
            let n = p.normal;
            let t1 = n.any_orthonormal();
            let t2 = n.cross(t1);
            let r_a = p.position - bodies[a].center;
            let r_b = b.map_or(Vec3::ZERO, |b| p.position - bodies[b].center);
            let k = |dir: Vec3| {
                bodies[a].effective_mass_term(r_a, dir) + b.map_or(0.0, |b| bodies[b].effective_mass_term(r_b, dir))
            };
            let mut row = Row {
                manifold: mi,
                a,
                b,
                r_a,
                r_b,
                normal: n,
                tangents: [t1, t2],
                normal_mass: inverse_or_zero(k(n)),
                tangent_mass: [inverse_or_zero(k(t1)), inverse_or_zero(k(t2))],
                bias: 0.0,
                friction: mat.friction_coefficient,
                lambda_n: 0.0,
                lambda_t: [0.0; 2],
            };
            row.bias = if p.penetration > 0.0 {
                config.baumgarte / dt * (p.penetration - config.penetration_slop).max(0.0)
            } else {
                // Speculative: allow closing the gap within this step.
                -p.gap / dt
            };
            let approach = relative_velocity(bodies, &row).dot(n);
            if mat.restitution > 0.0 && approach < -config.restitution_threshold {
                row.bias = row.bias.max(-mat.restitution * approach);
            }
            if config.warm_starting {
                if let Some(c) = cache.lookup((m.body_a, m.body_b), p.position) {
                    row.lambda_n = c.normal;
                    row.lambda_t = c.tangent;
                    let impulse = n * c.normal + t1 * c.tangent[0] + t2 * c.tangent[1];
                    push(bodies, &row, impulse);
                }
            }
            rows.push(row);
            row_keys.push(((m.body_a, m.body_b), p.position));
        }
    }

    for _ in 0..config.velocity_iterations {
        for row in rows.iter_mut() {
            // Friction first, bounded by the current normal impulse.
            let limit = row.friction * row.lambda_n;
            let vrel = relative_velocity(bodies, row);
            let old = row.lambda_t;
            let mut new = [0.0; 2];
            for k in 0..2 {
                new[k] = old[k] - vrel.dot(row.tangents[k]) * row.tangent_mass[k];
            }
            let mag = (new[0] * new[0] + new[1] * new[1]).sqrt();
            if mag > limit {
                let s = if mag > 0.0 { limit / mag } else { 0.0 };
                new = [new[0] * s, new[1] * s];
            }
            row.lambda_t = new;
            let delta = row.tangents[0] * (new[0] - old[0]) + row.tangents[1] * (new[1] - old[1]);
            push(bodies, row, delta);

            let vn = relative_velocity(bodies, row).dot(row.normal);
            let old = row.lambda_n;
            row.lambda_n = (old + (row.bias - vn) * row.normal_mass).max(0.0);
            push(bodies, row, row.normal * (row.lambda_n - old));
        }
    }

    cache.pairs.clear();
    let mut impulses = vec![BodyImpulse::default(); bodies.len()];
    let mut manifold_impulses = vec![0.0; manifolds.len()];
    for (row, (key, position)) in rows.iter().zip(row_keys) {
        cache.pairs.entry(key).or_default().push(CachedPoint {
            position,
            normal: row.lambda_n,
            tangent: row.lambda_t,
        });
        manifold_impulses[row.manifold] += row.lambda_n;
        let p = row.normal * row.lambda_n + row.tangents[0] * row.lambda_t[0] + row.tangents[1] * row.lambda_t[1];
        impulses[row.a].linear += p;
        impulses[row.a].angular += row.r_a.cross(p);
        if let Some(b) = row.b {
            impulses[b].linear -= p;
            impulses[b].angular -= row.r_b.cross(p);
        }
    }
    (impulses, manifold_impulses)
}
