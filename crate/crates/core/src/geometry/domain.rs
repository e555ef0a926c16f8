use serde::{Deserialize, Serialize};

use super::{GeometryError, Point2, Segment};
use crate::scalar::Real;

/// Open, bounded, simply connected polygonal domain Ω.
///
/// The boundary is stored counterclockwise; clockwise input is reversed.
/// JSON form: `{"boundary": [[x, y], ...]}` (the closing vertex is implicit).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", try_from = "RawDomain<T>", into = "RawDomain<T>")]
pub struct DomainSpec<T> {
    boundary: Vec<Point2<T>>,
    bbox: (Point2<T>, Point2<T>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct RawDomain<T> {
    boundary: Vec<Point2<T>>,
}

impl<T: Real> TryFrom<RawDomain<T>> for DomainSpec<T> {
    type Error = GeometryError;
    fn try_from(raw: RawDomain<T>) -> Result<Self, GeometryError> {
        DomainSpec::new(raw.boundary)
    }
}

impl<T: Real> From<DomainSpec<T>> for RawDomain<T> {
    fn from(d: DomainSpec<T>) -> Self {
        RawDomain { boundary: d.boundary }
    }
}

impl<T: Real> DomainSpec<T> {
    pub fn new(mut boundary: Vec<Point2<T>>) -> Result<Self, GeometryError> {
        if boundary.len() > 1 && boundary.first() == boundary.last() {
            boundary.pop();
        }
        if boundary.len() < 3 {
            return Err(GeometryError::DegeneratePolygon);
        }
        if boundary.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let area = signed_area(&boundary);
        if area == T::zero() {
            return Err(GeometryError::DegeneratePolygon);
        }
        if area < T::zero() {
            boundary.reverse();
        }
        let n = boundary.len();
        for i in 0..n {
            if boundary[i] == boundary[(i + 1) % n] {
                return Err(GeometryError::DegeneratePolygon);
            }
        }
        // Non-adjacent edges must not meet.
        for i in 0..n {
            let si = Segment::raw(boundary[i], boundary[(i + 1) % n]);
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let sj = Segment::raw(boundary[j], boundary[(j + 1) % n]);
                if si.intersects(&sj) {
                    return Err(GeometryError::SelfIntersecting);
                }
            }
        }
        let mut lo = boundary[0];
        let mut hi = boundary[0];
        for p in &boundary {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        Ok(Self { boundary, bbox: (lo, hi) })
    }

    pub fn rectangle(lo: Point2<T>, hi: Point2<T>) -> Result<Self, GeometryError> {
        Self::new(vec![lo, Point2::new(hi.x, lo.y), hi, Point2::new(lo.x, hi.y)])
    }

    pub fn unit_square() -> Self {
        Self::rectangle(Point2::origin(), Point2::new(T::one(), T::one()))
            .expect("unit square is valid")
    }

    /// Regular `sides`-gon inscribed in the circle of radius `r` about `center`.
    pub fn disk(center: Point2<T>, r: T, sides: usize) -> Result<Self, GeometryError> {
        if sides < 3 || !(r > T::zero()) {
            return Err(GeometryError::DegeneratePolygon);
        }
        let step = T::TAU() / T::from_usize_lossy(sides);
        Self::new(
            (0..sides)
                .map(|k| center + Point2::polar(r, step * T::from_usize_lossy(k)))
                .collect(),
        )
    }

    #[inline]
    pub fn boundary(&self) -> &[Point2<T>] {
        &self.boundary
    }

    #[inline]
    pub fn bounding_box(&self) -> (Point2<T>, Point2<T>) {
        self.bbox
    }

    pub fn boundary_segments(&self) -> impl Iterator<Item = Segment<T>> + '_ {
        let n = self.boundary.len();
        (0..n).map(move |i| Segment::raw(self.boundary[i], self.boundary[(i + 1) % n]))
    }

    pub fn area(&self) -> T {
        signed_area(&self.boundary)
    }

    pub fn perimeter(&self) -> T {
        self.boundary_segments().map(|s| s.length()).sum()
    }

    pub fn centroid(&self) -> Point2<T> {
        let n = self.boundary.len();
        let mut cx = T::zero();
        let mut cy = T::zero();
        for i in 0..n {
            let p = self.boundary[i];
            let q = self.boundary[(i + 1) % n];
            let c = p.cross(q);
            cx += (p.x + q.x) * c;
            cy += (p.y + q.y) * c;
        }
        let k = T::one() / (T::lit(6.0) * self.area());
        Point2::new(cx * k, cy * k)
    }

    pub fn distance_to_boundary(&self, p: Point2<T>) -> T {
        self.boundary_segments().map(|s| s.distance(p)).fold(T::infinity(), T::min)
    }

    pub fn nearest_boundary_point(&self, p: Point2<T>) -> Point2<T> {
        let mut best = (T::infinity(), p);
        for s in self.boundary_segments() {
            let q = s.closest_point(p);
            let d = q.dist(p);
            if d < best.0 {
                best = (d, q);
            }
        }
        best.1
    }

    /// Even-odd crossing test; boundary points may go either way, use
    /// [`Self::contains`] or [`Self::contains_closed`] when that matters.
    fn crossing_inside(&self, p: Point2<T>) -> bool {
        let n = self.boundary.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (self.boundary[i], self.boundary[j]);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Membership in the open set Ω.
    pub fn contains(&self, p: Point2<T>) -> bool {
        self.crossing_inside(p) && self.distance_to_boundary(p) > T::zero()
    }

    /// Membership in Ω̄.
    pub fn contains_closed(&self, p: Point2<T>) -> bool {
        self.crossing_inside(p) || self.distance_to_boundary(p) == T::zero()
    }

    /// Nearest point of Ω̄.
    pub fn clamp(&self, p: Point2<T>) -> Point2<T> {
        if self.crossing_inside(p) {
            p
        } else {
            self.nearest_boundary_point(p)
        }
    }

    /// Whether the closed segment lies in Ω̄ (no transversal crossing of ∂Ω and
    /// midpoint in Ω̄).
    pub fn contains_segment(&self, s: &Segment<T>) -> bool {
        if !self.contains_closed(s.a) || !self.contains_closed(s.b) {
            return false;
        }
        if self.boundary_segments().any(|b| s.crosses(&b)) {
            return false;
        }
        let mid = s.point_at(T::half());
        self.contains_closed(mid)
    }

    /// Sorted abscissae where the horizontal line `y` meets ∂Ω; pairs delimit
    /// the inside.
    pub(crate) fn row_crossings(&self, y: T) -> Vec<T> {
        let n = self.boundary.len();
        let mut xs = Vec::new();
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (self.boundary[i], self.boundary[j]);
            if (a.y > y) != (b.y > y) {
                xs.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
            }
            j = i;
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        xs
    }
}

fn signed_area<T: Real>(pts: &[Point2<T>]) -> T {
    let n = pts.len();
    let mut s = T::zero();
    for i in 0..n {
        s += pts[i].cross(pts[(i + 1) % n]);
    }
    s * T::half()
}
