use serde::{Deserialize, Serialize};

use super::{GeometryError, Point2};
use crate::scalar::Real;

/// Straight segment with distinct endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment<T> {
    pub a: Point2<T>,
    pub b: Point2<T>,
}

impl<T: Real> Segment<T> {
    pub fn new(a: Point2<T>, b: Point2<T>) -> Result<Self, GeometryError> {
        if !a.is_finite() || !b.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if a == b {
            return Err(GeometryError::ZeroLengthEdge);
        }
        Ok(Self { a, b })
    }

    /// Builds a segment without checking `a != b`; degenerate segments still
    /// have well defined distances.
    #[inline]
    pub(crate) fn raw(a: Point2<T>, b: Point2<T>) -> Self {
        Self { a, b }
    }

    #[inline]
    pub fn length(&self) -> T {
        self.a.dist(self.b)
    }

    #[inline]
    pub fn point_at(&self, t: T) -> Point2<T> {
        self.a.lerp(self.b, t)
    }

    /// Parameter in `[0, 1]` of the point of the segment closest to `p`.
    pub fn closest_param(&self, p: Point2<T>) -> T {
        let d = self.b - self.a;
        let len2 = d.norm2();
        if len2 == T::zero() {
            return T::zero();
        }
        let t = (p - self.a).dot(d) / len2;
        t.max(T::zero()).min(T::one())
    }

    #[inline]
    pub fn closest_point(&self, p: Point2<T>) -> Point2<T> {
        self.point_at(self.closest_param(p))
    }

    #[inline]
    pub fn distance(&self, p: Point2<T>) -> T {
        self.closest_point(p).dist(p)
    }

    /// Parameter interval `[t0, t1] ⊆ [0, 1]` of the part of the segment lying in
    /// the closed disk `|x - c| <= r`, if any.
    pub fn disk_interval(&self, c: Point2<T>, r: T) -> Option<(T, T)> {
        let d = self.b - self.a;
        let f = self.a - c;
        let qa = d.norm2();
        if qa == T::zero() {
            return if f.norm() <= r { Some((T::zero(), T::one())) } else { None };
        }
        let qb = f.dot(d);
        let qc = f.norm2() - r * r;
        let disc = qb * qb - qa * qc;
        if disc < T::zero() {
            return None;
        }
        let s = disc.sqrt();
        let t0 = ((-qb - s) / qa).max(T::zero());
        let t1 = ((-qb + s) / qa).min(T::one());
        if t0 > t1 {
            None
        } else {
            Some((t0, t1))
        }
    }

    /// Length of the intersection with the disk of center `c` and radius `r`.
    /// Open and closed disks give the same value.
    pub fn length_in_disk(&self, c: Point2<T>, r: T) -> T {
        match self.disk_interval(c, r) {
            Some((t0, t1)) => (t1 - t0) * self.length(),
            None => T::zero(),
        }
    }

    /// Proper or touching intersection of two closed segments.
    pub fn intersects(&self, o: &Segment<T>) -> bool {
        let d1 = orient(o.a, o.b, self.a);
        let d2 = orient(o.a, o.b, self.b);
        let d3 = orient(self.a, self.b, o.a);
        let d4 = orient(self.a, self.b, o.b);
        if ((d1 > T::zero() && d2 < T::zero()) || (d1 < T::zero() && d2 > T::zero()))
            && ((d3 > T::zero() && d4 < T::zero()) || (d3 < T::zero() && d4 > T::zero()))
        {
            return true;
        }
        (d1 == T::zero() && on_box(o.a, o.b, self.a))
            || (d2 == T::zero() && on_box(o.a, o.b, self.b))
            || (d3 == T::zero() && on_box(self.a, self.b, o.a))
            || (d4 == T::zero() && on_box(self.a, self.b, o.b))
    }

    /// Strict crossing: the interiors cross transversally.
    pub fn crosses(&self, o: &Segment<T>) -> bool {
        let d1 = orient(o.a, o.b, self.a);
        let d2 = orient(o.a, o.b, self.b);
        let d3 = orient(self.a, self.b, o.a);
        let d4 = orient(self.a, self.b, o.b);
        d1 * d2 < T::zero() && d3 * d4 < T::zero()
    }
}

#[inline]
fn orient<T: Real>(a: Point2<T>, b: Point2<T>, c: Point2<T>) -> T {
    (b - a).cross(c - a)
}

#[inline]
fn on_box<T: Real>(a: Point2<T>, b: Point2<T>, p: Point2<T>) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Euclidean ball `B_r(center)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Ball<T> {
    pub center: Point2<T>,
    pub radius: T,
}

impl<T: Real> Ball<T> {
    pub fn new(center: Point2<T>, radius: T) -> Result<Self, GeometryError> {
        if !center.is_finite() || !radius.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if radius <= T::zero() {
            return Err(GeometryError::NonPositiveRadius);
        }
        Ok(Self { center, radius })
    }

    #[inline]
    pub fn contains_open(&self, p: Point2<T>) -> bool {
        p.dist(self.center) < self.radius
    }

    #[inline]
    pub fn contains_closed(&self, p: Point2<T>) -> bool {
        p.dist(self.center) <= self.radius
    }

    /// Distance from `p` to the sphere `∂B`.
    #[inline]
    pub fn boundary_distance(&self, p: Point2<T>) -> T {
        (p.dist(self.center) - self.radius).abs()
    }
}

/// Closed one-dimensional pieces that generate the boundary of a discretized
/// open set: straight segments and full circles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Primitive<T> {
    Segment(Segment<T>),
    Circle(Ball<T>),
}

impl<T: Real> Primitive<T> {
    #[inline]
    pub fn distance(&self, p: Point2<T>) -> T {
        match self {
            Primitive::Segment(s) => s.distance(p),
            Primitive::Circle(b) => b.boundary_distance(p),
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounds(&self) -> (Point2<T>, Point2<T>) {
        match self {
            Primitive::Segment(s) => (
                Point2::new(s.a.x.min(s.b.x), s.a.y.min(s.b.y)),
                Point2::new(s.a.x.max(s.b.x), s.a.y.max(s.b.y)),
            ),
            Primitive::Circle(b) => {
                let r = Point2::new(b.radius, b.radius);
                (b.center - r, b.center + r)
            }
        }
    }
}
