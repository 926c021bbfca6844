//! Small 2-D vector/matrix types for the (y, z) simulation plane.
//!
//! `y` is the transverse coordinate, `z` the propagation axis. All lengths
//! are in wavelength units.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// 2-D vector in the (y, z) plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub y: f64,
    pub z: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { y: 0.0, z: 0.0 };

    pub fn new(y: f64, z: f64) -> Self {
        Vec2 { y, z }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.y * other.y + self.z * other.z
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Unit vector in the same direction. Caller guarantees a nonzero norm.
    pub fn unit(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.y / n, self.z / n)
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.y * s, self.z * s)
    }

    pub fn is_finite(self) -> bool {
        self.y.is_finite() && self.z.is_finite()
    }

    /// Direction at angle `theta` (radians) from the +z axis, positive toward +y.
    pub fn from_angle(theta: f64) -> Vec2 {
        Vec2::new(theta.sin(), theta.cos())
    }

    /// Angle from the +z axis in radians, positive toward +y.
    pub fn angle_from_z(self) -> f64 {
        self.y.atan2(self.z)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.y + rhs.y, self.z + rhs.z)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.y += rhs.y;
        self.z += rhs.z;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.y, -self.z)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        self.scale(s)
    }
}

/// 2x2 real matrix acting on `Vec2`, stored row-major over (y, z).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub yy: f64,
    pub yz: f64,
    pub zy: f64,
    pub zz: f64,
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 { yy: 0.0, yz: 0.0, zy: 0.0, zz: 0.0 };

    pub fn new(yy: f64, yz: f64, zy: f64, zz: f64) -> Self {
        Mat2 { yy, yz, zy, zz }
    }

    pub fn identity() -> Self {
        Mat2::new(1.0, 0.0, 0.0, 1.0)
    }

    /// Outer product a b^T.
    pub fn outer(a: Vec2, b: Vec2) -> Self {
        Mat2::new(a.y * b.y, a.y * b.z, a.z * b.y, a.z * b.z)
    }

    pub fn mul_vec(self, v: Vec2) -> Vec2 {
        Vec2::new(self.yy * v.y + self.yz * v.z, self.zy * v.y + self.zz * v.z)
    }

    pub fn scale(self, s: f64) -> Mat2 {
        Mat2::new(self.yy * s, self.yz * s, self.zy * s, self.zz * s)
    }

    pub fn is_finite(self) -> bool {
        self.yy.is_finite() && self.yz.is_finite() && self.zy.is_finite() && self.zz.is_finite()
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        Mat2::new(self.yy + rhs.yy, self.yz + rhs.yz, self.zy + rhs.zy, self.zz + rhs.zz)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        Mat2::new(self.yy - rhs.yy, self.yz - rhs.yz, self.zy - rhs.zy, self.zz - rhs.zz)
    }
}
