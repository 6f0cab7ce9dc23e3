//! Vectors, unit quaternions, poses and box inertia.
//!
//! Everything here is a plain value type in double precision. Orientations
//! are Hamilton quaternions stored in `w, x, y, z` order; rotation vectors
//! (axis times angle) are used wherever an orientation error has to be fed
//! to a linear spring.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Index, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn splat(v: f64) -> Self {
        Self::new(v, v, v)
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn try_normalize(self, eps: f64) -> Option<Vec3> {
        let n = self.norm();
        (n > eps).then(|| self / n)
    }

    pub fn component_mul(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    pub fn abs(self) -> Vec3 {
        Vec3::new(self.x.abs(), self.y.abs(), self.z.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Any unit vector orthogonal to `self` (assumed unit length), chosen
    /// deterministically from the smallest component.
    pub fn any_orthonormal(self) -> Vec3 {
        let a = self.abs();
        let helper = if a.x <= a.y && a.x <= a.z {
            Vec3::X
        } else if a.y <= a.z {
            Vec3::Y
        } else {
            Vec3::Z
        };
        let t = helper - self * self.dot(helper);
        t / t.norm()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl MulAssign<f64> for Vec3 {
    fn mul_assign(&mut self, s: f64) {
        *self = *self * s;
    }
}

/// Row-major 3x3 matrix. Only used for rotations and world-space inertia.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3 {
    pub rows: [[f64; 3]; 3],
}

impl Mat3 {
    pub const ZERO: Mat3 = Mat3 { rows: [[0.0; 3]; 3] };

    pub fn from_diagonal(d: Vec3) -> Mat3 {
        Mat3 {
            rows: [[d.x, 0.0, 0.0], [0.0, d.y, 0.0], [0.0, 0.0, d.z]],
        }
    }

    pub fn from_columns(c0: Vec3, c1: Vec3, c2: Vec3) -> Mat3 {
        Mat3 {
            rows: [[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]],
        }
    }

    pub fn column(&self, j: usize) -> Vec3 {
        Vec3::new(self.rows[0][j], self.rows[1][j], self.rows[2][j])
    }

    pub fn transpose(&self) -> Mat3 {
        let r = &self.rows;
        Mat3 {
            rows: [
                [r[0][0], r[1][0], r[2][0]],
                [r[0][1], r[1][1], r[2][1]],
                [r[0][2], r[1][2], r[2][2]],
            ],
        }
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let r = &self.rows;
        Vec3::new(
            r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
            r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
            r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z,
        )
    }

    pub fn mul_mat(&self, o: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.rows[i][k] * o.rows[k][j]).sum();
            }
        }
        Mat3 { rows: out }
    }

    /// `R · diag(d) · Rᵀ`, the world-frame form of a body-frame diagonal tensor.
    pub fn rotate_diagonal(rot: &Mat3, d: Vec3) -> Mat3 {
        rot.mul_mat(&Mat3::from_diagonal(d)).mul_mat(&rot.transpose())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct UnitQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for UnitQuaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl From<[f64; 4]> for UnitQuaternion {
    fn from(a: [f64; 4]) -> Self {
        UnitQuaternion { w: a[0], x: a[1], y: a[2], z: a[3] }
    }
}

impl From<UnitQuaternion> for [f64; 4] {
    fn from(q: UnitQuaternion) -> Self {
        [q.w, q.x, q.y, q.z]
    }
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Builds and normalizes a quaternion from raw components.
    pub fn new_normalize(w: f64, x: f64, y: f64, z: f64) -> Self {
        UnitQuaternion { w, x, y, z }.renormalize()
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        match axis.try_normalize(0.0) {
            Some(a) => Self::from_rotation_vector(a * angle),
            None => Self::IDENTITY,
        }
    }

    /// Exponential map: rotation vector (axis · angle, rad) to quaternion.
    pub fn from_rotation_vector(v: Vec3) -> Self {
        let angle = v.norm();
        let half = 0.5 * angle;
        // sin(a/2)/a, with its Taylor series near zero.
        let k = if angle < 1e-6 {
            0.5 - angle * angle / 48.0
        } else {
            half.sin() / angle
        };
        UnitQuaternion { w: half.cos(), x: v.x * k, y: v.y * k, z: v.z * k }
    }

    /// Logarithmic map onto the rotation vector with angle in `[0, π]`.
    ///
    /// The `w ≥ 0` representative is used. At exactly π (w = 0) the sign is
    /// chosen so the first non-zero axis component is positive.
    pub fn to_rotation_vector(self) -> Vec3 {
        let mut q = self;
        if q.w < 0.0 || (q.w == 0.0 && !first_nonzero_positive(q.vector())) {
            q = -q;
        }
        let v = q.vector();
        let s = v.norm();
        if s < 1e-12 {
            // 2·v/w to first order; w is ≈ 1 here.
            return v * (2.0 / q.w);
        }
        let angle = 2.0 * s.atan2(q.w);
        v * (angle / s)
    }

    pub fn vector(self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn renormalize(self) -> Self {
        let n = self.norm();
        UnitQuaternion { w: self.w / n, x: self.x / n, y: self.y / n, z: self.z / n }
    }

    pub fn conjugate(self) -> Self {
        UnitQuaternion { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn inverse(self) -> Self {
        self.conjugate()
    }

    pub fn dot(self, o: UnitQuaternion) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        let u = self.vector();
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }

    pub fn to_matrix(self) -> Mat3 {
        Mat3::from_columns(self.rotate(Vec3::X), self.rotate(Vec3::Y), self.rotate(Vec3::Z))
    }

    /// Angle of the rotation, in `[0, π]`.
    pub fn angle(self) -> f64 {
        self.to_rotation_vector().norm()
    }

    /// Shortest-arc spherical interpolation.
    pub fn slerp(self, other: UnitQuaternion, s: f64) -> Self {
        let delta = (self.inverse() * other).to_rotation_vector();
        (self * UnitQuaternion::from_rotation_vector(delta * s)).renormalize()
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

fn first_nonzero_positive(v: Vec3) -> bool {
    for c in v.to_array() {
        if c != 0.0 {
            return c > 0.0;
        }
    }
    true
}

impl Neg for UnitQuaternion {
    type Output = UnitQuaternion;
    fn neg(self) -> Self {
        UnitQuaternion { w: -self.w, x: -self.x, y: -self.y, z: -self.z }
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;
    fn mul(self, o: UnitQuaternion) -> UnitQuaternion {
        UnitQuaternion {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }
}

/// Rigid transform: position in meters plus orientation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: UnitQuaternion,
}

impl Pose {
    pub const IDENTITY: Pose = Pose { position: Vec3::ZERO, orientation: UnitQuaternion::IDENTITY };

    pub fn new(position: Vec3, orientation: UnitQuaternion) -> Self {
        Self { position, orientation }
    }

    pub fn from_position(position: Vec3) -> Self {
        Self { position, orientation: UnitQuaternion::IDENTITY }
    }

    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        self.position + self.orientation.rotate(p)
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.orientation.is_finite()
    }
}

/// Principal moments of inertia in the body frame, kg·m².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InertiaDiag {
    pub ixx: f64,
    pub iyy: f64,
    pub izz: f64,
}

impl InertiaDiag {
    pub fn new(ixx: f64, iyy: f64, izz: f64) -> Self {
        Self { ixx, iyy, izz }
    }

    pub fn as_vec(&self) -> Vec3 {
        Vec3::new(self.ixx, self.iyy, self.izz)
    }

    pub fn axis(&self, i: usize) -> f64 {
        self.as_vec()[i]
    }

    pub fn inverse(&self) -> Vec3 {
        Vec3::new(1.0 / self.ixx, 1.0 / self.iyy, 1.0 / self.izz)
    }

    pub fn is_positive(&self) -> bool {
        self.ixx > 0.0 && self.iyy > 0.0 && self.izz > 0.0
    }
}

/// Translation and rotation error of `clone` relative to `real`.
///
/// `d = clone.position − real.position` in the world frame. `theta` is the
/// rotation vector of `real⁻¹ · clone`, so it is expressed in the real
/// object's frame, with `|theta| ≤ π`.
pub fn pose_error(real: &Pose, clone: &Pose) -> (Vec3, Vec3) {
    let d = clone.position - real.position;
    let rel = real.orientation.inverse() * clone.orientation;
    (d, rel.to_rotation_vector())
}

/// Principal inertia of a solid box with the given half extents.
pub fn box_inertia(mass: f64, half_extents: Vec3) -> Result<InertiaDiag> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::InvalidArgument(format!("mass must be positive, got {mass}")));
    }
    if !(half_extents.x > 0.0 && half_extents.y > 0.0 && half_extents.z > 0.0) || !half_extents.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "box extents must be positive, got {:?}",
            half_extents.to_array()
        )));
    }
    let s = half_extents * 2.0;
    let k = mass / 12.0;
    Ok(InertiaDiag::new(
        k * (s.y * s.y + s.z * s.z),
        k * (s.x * s.x + s.z * s.z),
        k * (s.x * s.x + s.y * s.y),
    ))
}

/// Advances `q` by a constant world-frame angular velocity over `dt`
/// using the exponential map, then renormalizes.
pub fn integrate_orientation(q: UnitQuaternion, omega: Vec3, dt: f64) -> UnitQuaternion {
    if omega == Vec3::ZERO {
        return q;
    }
    (UnitQuaternion::from_rotation_vector(omega * dt) * q).renormalize()
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    } else if r <= -PI {
        r += 2.0 * PI;
    }
    r
}
