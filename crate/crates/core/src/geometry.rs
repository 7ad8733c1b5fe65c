//! Planar angles, poses and rigid transforms.
//!
//! All angles are in degrees. Headings use 0° = +x with counterclockwise
//! positive; radians appear only inside the trig kernels.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("non-finite value: {0}")]
    NonFinite(f64),
    #[error("rectangle half-extents must be positive (got {0} x {1})")]
    DegenerateRect(f64, f64),
}

/// Wraps a finite angle into `(-180, 180]`.
fn wrap_degrees(a: f64) -> f64 {
    let r = a.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// An angle in degrees, always normalized to `(-180, 180]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    /// Builds a wrapped angle. Non-finite input is propagated as NaN; use
    /// [`wrap_angle`] where the input is untrusted.
    pub fn from_degrees(deg: f64) -> Self {
        Angle(wrap_degrees(deg))
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }

    pub fn abs(self) -> f64 {
        self.0.abs()
    }

    /// Unit vector pointing along this heading.
    pub fn unit(self) -> Vec2 {
        let (s, c) = self.radians().sin_cos();
        Vec2::new(c, s)
    }
}

impl From<f64> for Angle {
    fn from(deg: f64) -> Self {
        Angle::from_degrees(deg)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl Add for Angle {
    type Output = Angle;
    fn add(self, rhs: Angle) -> Angle {
        Angle::from_degrees(self.0 + rhs.0)
    }
}

impl Sub for Angle {
    type Output = Angle;
    fn sub(self, rhs: Angle) -> Angle {
        Angle::from_degrees(self.0 - rhs.0)
    }
}

impl Neg for Angle {
    type Output = Angle;
    fn neg(self) -> Angle {
        Angle::from_degrees(-self.0)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.0)
    }
}

/// Validating entry point for angle normalization.
pub fn wrap_angle(deg: f64) -> Result<Angle, GeometryError> {
    if !deg.is_finite() {
        return Err(GeometryError::NonFinite(deg));
    }
    Ok(Angle::from_degrees(deg))
}

/// Signed turn that takes heading `from` onto heading `to`, in `(-180, 180]`.
pub fn signed_heading_error(from: Angle, to: Angle) -> Angle {
    Angle::from_degrees(to.0 - from.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Heading of this vector; zero vector maps to 0°.
    pub fn heading(self) -> Angle {
        if self.x == 0.0 && self.y == 0.0 {
            return Angle::ZERO;
        }
        Angle::from_degrees(self.y.atan2(self.x).to_degrees())
    }

    pub fn rotated(self, theta: Angle) -> Vec2 {
        let (s, c) = theta.radians().sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Rotates `p` about `anchor` by `theta`.
pub fn rotate_about(p: Vec2, anchor: Vec2, theta: Angle) -> Vec2 {
    anchor + (p - anchor).rotated(theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub position: Vec2,
    pub heading: Angle,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, heading_deg: f64) -> Self {
        Pose2 {
            position: Vec2::new(x, y),
            heading: Angle::from_degrees(heading_deg),
        }
    }
}

/// Axis-aligned rectangle, used for the physical tracked space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub center: Vec2,
    pub half_width: f64,
    pub half_height: f64,
}

impl Rect {
    pub fn new(center: Vec2, half_width: f64, half_height: f64) -> Result<Self, GeometryError> {
        let rect = Rect {
            center,
            half_width,
            half_height,
        };
        rect.validate()?;
        Ok(rect)
    }

    /// A `w` x `h` rectangle centered on the origin.
    pub fn centered(w: f64, h: f64) -> Result<Self, GeometryError> {
        Rect::new(Vec2::ZERO, w / 2.0, h / 2.0)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.half_width > 0.0 && self.half_height > 0.0) {
            return Err(GeometryError::DegenerateRect(
                self.half_width,
                self.half_height,
            ));
        }
        if !self.center.is_finite() {
            return Err(GeometryError::NonFinite(f64::NAN));
        }
        Ok(())
    }

    /// Closed containment test.
    pub fn contains(&self, p: Vec2) -> bool {
        let d = p - self.center;
        d.x.abs() <= self.half_width && d.y.abs() <= self.half_height
    }

    /// Rectangle shrunk by `margin` on every side. Half-extents floor at zero.
    pub fn shrunk(&self, margin: f64) -> Rect {
        Rect {
            center: self.center,
            half_width: (self.half_width - margin).max(0.0),
            half_height: (self.half_height - margin).max(0.0),
        }
    }

    pub fn min(&self) -> Vec2 {
        Vec2::new(
            self.center.x - self.half_width,
            self.center.y - self.half_height,
        )
    }

    pub fn max(&self) -> Vec2 {
        Vec2::new(
            self.center.x + self.half_width,
            self.center.y + self.half_height,
        )
    }
}

impl Default for Rect {
    /// The 4 x 4 m tracked space.
    fn default() -> Self {
        Rect {
            center: Vec2::ZERO,
            half_width: 2.0,
            half_height: 2.0,
        }
    }
}

/// `p ↦ R(rotation)·p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RigidTransform2 {
    pub rotation: Angle,
    pub translation: Vec2,
}

impl RigidTransform2 {
    pub const IDENTITY: RigidTransform2 = RigidTransform2 {
        rotation: Angle::ZERO,
        translation: Vec2::ZERO,
    };

    pub fn new(rotation: Angle, translation: Vec2) -> Self {
        RigidTransform2 {
            rotation,
            translation,
        }
    }

    /// Pure rotation by `theta` about `anchor`.
    pub fn rotation_about(anchor: Vec2, theta: Angle) -> Self {
        RigidTransform2 {
            rotation: theta,
            translation: anchor - anchor.rotated(theta),
        }
    }

    /// The transform that carries pose `from` onto pose `to`.
    pub fn between(from: &Pose2, to: &Pose2) -> Self {
        let rotation = to.heading - from.heading;
        RigidTransform2 {
            rotation,
            translation: to.position - from.position.rotated(rotation),
        }
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        p.rotated(self.rotation) + self.translation
    }

    pub fn apply_pose(&self, pose: Pose2) -> Pose2 {
        Pose2 {
            position: self.apply(pose.position),
            heading: pose.heading + self.rotation,
        }
    }

    /// Rotates a displacement (no translation).
    pub fn apply_vector(&self, v: Vec2) -> Vec2 {
        v.rotated(self.rotation)
    }

    pub fn inverse(&self) -> Self {
        let rotation = -self.rotation;
        RigidTransform2 {
            rotation,
            translation: -self.translation.rotated(rotation),
        }
    }
}

/// `compose(t1, t2)` applies `t2` first, then `t1`.
pub fn compose(t1: &RigidTransform2, t2: &RigidTransform2) -> RigidTransform2 {
    RigidTransform2 {
        rotation: t1.rotation + t2.rotation,
        translation: t1.apply(t2.translation),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: f64 = 1e-9;

    fn close(a: Vec2, b: Vec2) -> bool {
        a.distance(b) < EPS
    }

    fn angle_close(a: Angle, b: Angle) -> bool {
        signed_heading_error(a, b).abs() < EPS
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_angle(190.0).unwrap().degrees(), -170.0);
        assert_eq!(wrap_angle(-180.0).unwrap().degrees(), 180.0);
        assert_eq!(wrap_angle(360.0).unwrap().degrees(), 0.0);
        assert_eq!(wrap_angle(180.0).unwrap().degrees(), 180.0);
    }

    #[test]
    fn wrap_rejects_non_finite() {
        assert!(matches!(
            wrap_angle(f64::NAN),
            Err(GeometryError::NonFinite(_))
        ));
        assert!(wrap_angle(f64::INFINITY).is_err());
    }

    #[test]
    fn rotate_about_examples() {
        let r = rotate_about(Vec2::new(1.0, 0.0), Vec2::ZERO, Angle::from_degrees(90.0));
        assert!(close(r, Vec2::new(0.0, 1.0)));
        let a = Vec2::new(3.0, -2.0);
        assert_eq!(rotate_about(a, a, Angle::from_degrees(33.0)), a);
        let r = rotate_about(
            Vec2::new(2.0, 0.0),
            Vec2::new(1.0, 0.0),
            Angle::from_degrees(180.0),
        );
        assert!(close(r, Vec2::ZERO));
    }

    #[test]
    fn compose_examples() {
        let t = RigidTransform2::new(Angle::from_degrees(37.0), Vec2::new(1.5, -0.25));
        let c = compose(&RigidTransform2::IDENTITY, &t);
        assert!(angle_close(c.rotation, t.rotation));
        assert!(close(c.translation, t.translation));

        let id = compose(&t, &t.inverse());
        assert!(angle_close(id.rotation, Angle::ZERO));
        assert!(close(id.translation, Vec2::ZERO));

        let q = RigidTransform2::new(Angle::from_degrees(90.0), Vec2::ZERO);
        let h = compose(&q, &q);
        assert!(angle_close(h.rotation, Angle::from_degrees(180.0)));
        assert!(close(h.apply(Vec2::new(1.0, 0.0)), Vec2::new(-1.0, 0.0)));
    }

    #[test]
    fn heading_error_examples() {
        let e = |a: f64, b: f64| {
            signed_heading_error(Angle::from_degrees(a), Angle::from_degrees(b)).degrees()
        };
        assert!((e(10.0, 30.0) - 20.0).abs() < EPS);
        assert!((e(170.0, -170.0) - 20.0).abs() < EPS);
        assert_eq!(e(42.0, 42.0), 0.0);
    }

    #[test]
    fn between_maps_pose_onto_pose() {
        let a = Pose2::new(1.0, -2.0, 30.0);
        let b = Pose2::new(-0.5, 4.0, -100.0);
        let t = RigidTransform2::between(&a, &b);
        let m = t.apply_pose(a);
        assert!(close(m.position, b.position));
        assert!(angle_close(m.heading, b.heading));
    }

    #[test]
    fn rotation_about_fixes_anchor() {
        let anchor = Vec2::new(0.7, -1.1);
        let t = RigidTransform2::rotation_about(anchor, Angle::from_degrees(123.0));
        assert!(close(t.apply(anchor), anchor));
    }

    #[test]
    fn shrunk_rect() {
        let r = Rect::centered(4.0, 4.0).unwrap().shrunk(0.2);
        assert!(r.contains(Vec2::new(1.8, -1.8)));
        assert!(!r.contains(Vec2::new(1.81, 0.0)));
        assert!(Rect::centered(0.0, 1.0).is_err());
    }

    fn finite() -> impl Strategy<Value = f64> {
        -1e3..1e3f64
    }

    fn transform() -> impl Strategy<Value = RigidTransform2> {
        (finite(), finite(), finite()).prop_map(|(r, x, y)| {
            RigidTransform2::new(Angle::from_degrees(r), Vec2::new(x / 100.0, y / 100.0))
        })
    }

    proptest! {
        #[test]
        fn rotation_preserves_distance(px in finite(), py in finite(), ax in finite(), ay in finite(), th in finite()) {
            let p = Vec2::new(px / 100.0, py / 100.0);
            let a = Vec2::new(ax / 100.0, ay / 100.0);
            let r = rotate_about(p, a, Angle::from_degrees(th));
            prop_assert!((r.distance(a) - p.distance(a)).abs() < EPS);
        }

        #[test]
        fn wrap_idempotent_and_periodic(a in -1e5..1e5f64, k in -20i32..20) {
            let w = wrap_angle(a).unwrap();
            prop_assert!(w.degrees() > -180.0 && w.degrees() <= 180.0);
            prop_assert_eq!(wrap_angle(w.degrees()).unwrap(), w);
            let shifted = wrap_angle(a + 360.0 * f64::from(k)).unwrap();
            prop_assert!(angle_close(shifted, w));
        }

        #[test]
        fn compose_is_associative(a in transform(), b in transform(), c in transform(), px in finite(), py in finite()) {
            let p = Vec2::new(px / 100.0, py / 100.0);
            let left = compose(&compose(&a, &b), &c);
            let right = compose(&a, &compose(&b, &c));
            prop_assert!(close(left.apply(p), right.apply(p)));
            prop_assert!(angle_close(left.rotation, right.rotation));
            prop_assert!(close(left.apply(p), a.apply(b.apply(c.apply(p)))));
        }

        #[test]
        fn inverse_round_trip(t in transform(), px in finite(), py in finite()) {
            let p = Vec2::new(px / 100.0, py / 100.0);
            prop_assert!(close(t.inverse().apply(t.apply(p)), p));
        }
    }
}
