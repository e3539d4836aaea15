//! Minimal 2D point/vector type shared by every module.

use std::ops::{Add, Mul, Neg, Sub};

/// A point (or free vector) in the plane. The ground plane is `y == 0`,
/// the upper half space is `y > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn scale(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }

    /// Unit vector in the same direction. Panics on the zero vector.
    pub fn normalized(self) -> Point2 {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize zero vector");
        self.scale(1.0 / n)
    }

    /// Mirror image across the ground plane: `(x, y) -> (x, -y)`.
    pub fn reflect_ground(self) -> Point2 {
        Point2::new(self.x, -self.y)
    }

    /// Rotate by -90 degrees: maps a tangent of a counterclockwise loop to
    /// the outward normal.
    pub fn perp(self) -> Point2 {
        Point2::new(self.y, -self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        self.scale(s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_is_involution() {
        let p = Point2::new(1.0, 2.0);
        assert_eq!(p.reflect_ground(), Point2::new(1.0, -2.0));
        assert_eq!(p.reflect_ground().reflect_ground(), p);
    }

    #[test]
    fn perp_is_orthogonal() {
        let v = Point2::new(0.3, -1.7);
        assert_eq!(v.dot(v.perp()), 0.0);
        // counterclockwise circle tangent maps to outward normal
        let t = Point2::new(-0.6, 0.8);
        let n = t.perp();
        assert!((n.x - 0.8).abs() < 1e-15 && (n.y - 0.6).abs() < 1e-15);
    }
}
