//! Narrow-phase collision between boxes and against the ground plane.
//!
//! Box pairs use the separating-axis test over the 15 candidate axes. Face
//! contacts clip the incident face against the side planes of the reference
//! face; edge contacts produce a single point between the two closest edges.
//! Manifolds keep at most four points.

use serde::{Deserialize, Serialize};

use super::body::{BodyId, RigidBody};
use crate::math::Vec3;

/// Pairs closer than this are reported as speculative contacts (with a gap)
/// so the solver can stop them exactly at touch.
pub const DEFAULT_CONTACT_MARGIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactPoint {
    pub position: Vec3,
    /// Unit direction along which body A must move to separate from body B.
    pub normal: Vec3,
    /// Overlap depth, m. Zero for touching or speculative points.
    pub penetration: f64,
    /// Remaining distance for speculative points, m. Zero when touching.
    pub gap: f64,
}

impl ContactPoint {
    fn from_separation(position: Vec3, normal: Vec3, separation: f64) -> Self {
        ContactPoint { position, normal, penetration: (-separation).max(0.0), gap: separation.max(0.0) }
    }

    /// Signed distance: negative when overlapping.
    pub fn separation(&self) -> f64 {
        if self.penetration > 0.0 {
            -self.penetration
        } else {
            self.gap
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactManifold {
    pub body_a: BodyId,
    /// `None` is the static ground plane.
    pub body_b: Option<BodyId>,
    pub points: Vec<ContactPoint>,
}

impl ContactManifold {
    pub fn involves(&self, id: BodyId) -> bool {
        self.body_a == id || self.body_b == Some(id)
    }

    pub fn max_penetration(&self) -> f64 {
        self.points.iter().map(|p| p.penetration).fold(0.0, f64::max)
    }

    /// True if at least one point is touching or overlapping.
    pub fn is_touching(&self) -> bool {
        self.points.iter().any(|p| p.gap == 0.0)
    }
}

/// Contacts of a box against the horizontal plane `z = height`.
pub fn box_plane(body: &RigidBody, height: f64, margin: f64) -> Option<ContactManifold> {
    let mut pts: Vec<(usize, f64, Vec3)> = body
        .corners()
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            let s = c.z - height;
            (s <= margin).then_some((i, s, *c))
        })
        .collect();
    if pts.is_empty() {
        return None;
    }
    if pts.len() > 4 {
        pts.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        pts.truncate(4);
        pts.sort_by_key(|p| p.0);
    }
    Some(ContactManifold {
        body_a: body.id,
        body_b: None,
        points: pts
            .into_iter()
            .map(|(_, s, c)| ContactPoint::from_separation(Vec3::new(c.x, c.y, height + 0.5 * s), Vec3::Z, s))
            .collect(),
    })
}

struct Obb {
    center: Vec3,
    axes: [Vec3; 3],
    half: [f64; 3],
}

impl Obb {
    fn of(b: &RigidBody) -> Self {
        let r = b.rotation();
        Obb { center: b.pose.position, axes: [r.column(0), r.column(1), r.column(2)], half: b.half_extents.to_array() }
    }

    fn projected_radius(&self, axis: Vec3) -> f64 {
        (0..3).map(|k| self.half[k] * self.axes[k].dot(axis).abs()).sum()
    }
}

#[derive(Clone, Copy, Debug)]
enum Axis {
    FaceA(usize),
    FaceB(usize),
    Edge(usize, usize),
}

/// Contacts between two boxes, with the normal pointing from `b` toward `a`.
pub fn box_box(a: &RigidBody, b: &RigidBody, margin: f64) -> Option<ContactManifold> {
    let reach = a.bounding_radius() + b.bounding_radius() + margin;
    let t = b.pose.position - a.pose.position;
    if t.norm_squared() > reach * reach {
        return None;
    }
    let oa = Obb::of(a);
    let ob = Obb::of(b);

    let mut best_a = (f64::INFINITY, 0);
    let mut best_b = (f64::INFINITY, 0);
    let mut best_edge: Option<(f64, usize, usize, Vec3)> = None;

    for i in 0..3 {
        let l = oa.axes[i];
        let overlap = oa.half[i] + ob.projected_radius(l) - t.dot(l).abs();
        if overlap < -margin {
            return None;
        }
        if overlap < best_a.0 {
            best_a = (overlap, i);
        }
    }
    for j in 0..3 {
        let l = ob.axes[j];
        let overlap = oa.projected_radius(l) + ob.half[j] - t.dot(l).abs();
        if overlap < -margin {
            return None;
        }
        if overlap < best_b.0 {
            best_b = (overlap, j);
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            let Some(l) = oa.axes[i].cross(ob.axes[j]).try_normalize(1e-6) else {
                continue;
            };
            let overlap = oa.projected_radius(l) + ob.projected_radius(l) - t.dot(l).abs();
            if overlap < -margin {
                return None;
            }
            if best_edge.map_or(true, |e| overlap < e.0) {
                best_edge = Some((overlap, i, j, l));
            }
        }
    }

    // Prefer face axes; B's face or an edge must be clearly better to win.
    const REL: f64 = 0.95;
    const ABS: f64 = 1e-6;
    let mut axis = Axis::FaceA(best_a.1);
    let mut best = best_a.0;
    if best_b.0 < REL * best - ABS {
        axis = Axis::FaceB(best_b.1);
        best = best_b.0;
    }
    if let Some((overlap, i, j, _)) = best_edge {
        if overlap < REL * best - ABS {
            axis = Axis::Edge(i, j);
        }
    }

    let (normal_for_a, mut points) = match axis {
        Axis::FaceA(i) => {
            let n = if t.dot(oa.axes[i]) >= 0.0 { oa.axes[i] } else { -oa.axes[i] };
            (-n, face_contact(&oa, i, n, &ob, margin))
        }
        Axis::FaceB(j) => {
            let n = if t.dot(ob.axes[j]) <= 0.0 { ob.axes[j] } else { -ob.axes[j] };
            (n, face_contact(&ob, j, n, &oa, margin))
        }
        Axis::Edge(i, j) => {
            let (overlap, _, _, l) = best_edge.expect("edge axis selected");
            let l = if t.dot(l) >= 0.0 { l } else { -l };
            (-l, vec![edge_contact(&oa, i, &ob, j, l, overlap)])
        }
    };
    if points.is_empty() {
        return None;
    }
    if points.len() > 4 {
        points = reduce_to_four(points);
    }
    Some(ContactManifold {
        body_a: a.id,
        body_b: Some(b.id),
        points: points
            .into_iter()
            .map(|(p, s)| ContactPoint::from_separation(p, normal_for_a, s))
            .collect(),
    })
}

/// Clips the incident box's face against reference face `axis` of `r`.
/// `n` is the reference face normal, pointing toward the incident box.
/// Returns (midpoint, separation) pairs.
fn face_contact(r: &Obb, axis: usize, n: Vec3, inc: &Obb, margin: f64) -> Vec<(Vec3, f64)> {
    let ref_center = r.center + n * r.half[axis];

    // Incident face: the one most anti-parallel to n.
    let mut j = 0;
    let mut best = f64::NEG_INFINITY;
    for k in 0..3 {
        let d = inc.axes[k].dot(n).abs();
        if d > best {
            best = d;
            j = k;
        }
    }
    let inc_normal = if inc.axes[j].dot(n) > 0.0 { -inc.axes[j] } else { inc.axes[j] };
    let inc_center = inc.center + inc_normal * inc.half[j];
    let (u, v) = ((j + 1) % 3, (j + 2) % 3);
    let eu = inc.axes[u] * inc.half[u];
    let ev = inc.axes[v] * inc.half[v];
    let mut poly = vec![inc_center + eu + ev, inc_center - eu + ev, inc_center - eu - ev, inc_center + eu - ev];

    for side in [(axis + 1) % 3, (axis + 2) % 3] {
        let dir = r.axes[side];
        let off = dir.dot(r.center);
        poly = clip(&poly, dir, off + r.half[side]);
        poly = clip(&poly, -dir, -off + r.half[side]);
        if poly.is_empty() {
            return Vec::new();
        }
    }

    poly.into_iter()
        .filter_map(|p| {
            let s = n.dot(p - ref_center);
            (s <= margin).then(|| (p - n * (0.5 * s), s))
        })
        .collect()
}

/// Sutherland–Hodgman against the half-space `dir · p ≤ limit`.
fn clip(poly: &[Vec3], dir: Vec3, limit: f64) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for (k, &p) in poly.iter().enumerate() {
        let q = poly[(k + 1) % poly.len()];
        let dp = dir.dot(p) - limit;
        let dq = dir.dot(q) - limit;
        if dp <= 0.0 {
            out.push(p);
        }
        if (dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0) {
            out.push(p + (q - p) * (dp / (dp - dq)));
        }
    }
    out
}

fn edge_contact(a: &Obb, i: usize, b: &Obb, j: usize, l: Vec3, overlap: f64) -> (Vec3, f64) {
    // Support edges: A's edge farthest along l, B's edge farthest along -l.
    let mut pa = a.center;
    let mut pb = b.center;
    for k in 0..3 {
        if k != i {
            pa += a.axes[k] * (a.half[k] * a.axes[k].dot(l).signum());
        }
        if k != j {
            pb -= b.axes[k] * (b.half[k] * b.axes[k].dot(l).signum());
        }
    }
    let (ca, cb) = closest_segment_points(pa, a.axes[i], a.half[i], pb, b.axes[j], b.half[j]);
    ((ca + cb) * 0.5, -overlap)
}

/// Closest points between segments `p + s·d` (|s| ≤ hp) and `q + t·e` (|t| ≤ hq),
/// with unit directions.
fn closest_segment_points(p: Vec3, d: Vec3, hp: f64, q: Vec3, e: Vec3, hq: f64) -> (Vec3, Vec3) {
    let r = p - q;
    let b = d.dot(e);
    let c = d.dot(r);
    let f = e.dot(r);
    let denom = 1.0 - b * b;
    let mut s = if denom > 1e-12 { ((b * f - c) / denom).clamp(-hp, hp) } else { 0.0 };
    let t = (b * s + f).clamp(-hq, hq);
    s = (b * t - c).clamp(-hp, hp);
    (p + d * s, q + e * t)
}

fn reduce_to_four(points: Vec<(Vec3, f64)>) -> Vec<(Vec3, f64)> {
    let n = points.len();
    let deepest = (0..n).min_by(|&x, &y| points[x].1.total_cmp(&points[y].1)).unwrap_or(0);
    let p0 = points[deepest].0;
    let far = (0..n)
        .filter(|&k| k != deepest)
        .max_by(|&x, &y| (points[x].0 - p0).norm_squared().total_cmp(&(points[y].0 - p0).norm_squared()))
        .unwrap_or(deepest);
    let p1 = points[far].0;
    let third = (0..n)
        .filter(|&k| k != deepest && k != far)
        .max_by(|&x, &y| {
            let ax = (p1 - p0).cross(points[x].0 - p0).norm_squared();
            let ay = (p1 - p0).cross(points[y].0 - p0).norm_squared();
            ax.total_cmp(&ay)
        })
        .unwrap_or(far);
    let p2 = points[third].0;
    let chosen = [deepest, far, third];
    let fourth = (0..n).filter(|k| !chosen.contains(k)).max_by(|&x, &y| {
        let score = |k: usize| {
            let p = points[k].0;
            (p - p0).norm_squared().min((p - p1).norm_squared()).min((p - p2).norm_squared())
        };
        score(x).total_cmp(&score(y))
    });
    let mut keep: Vec<usize> = chosen.to_vec();
    keep.extend(fourth);
    keep.sort_unstable();
    keep.dedup();
    keep.into_iter().map(|k| points[k]).collect()
}
