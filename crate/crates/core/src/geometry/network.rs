use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{Ball, GeometryError, Point2, Segment};
use crate::scalar::{fmax, Real};

/// Default geometric tolerance of a network, in length units.
pub const DEFAULT_TOLERANCE: f64 = 1e-7;

/// Embedded planar straight-line graph standing for a continuum Σ.
///
/// Invariants enforced at construction: at least one vertex, finite
/// coordinates, valid edge indices, no zero-length edge and a connected graph
/// (every vertex reachable through edges). A single vertex without edges is
/// the degenerate continuum `{p}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", try_from = "RawNetwork<T>", into = "RawNetwork<T>")]
pub struct CurveNetwork<T> {
    vertices: Vec<Point2<T>>,
    edges: Vec<[usize; 2]>,
    tolerance: T,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct RawNetwork<T> {
    vertices: Vec<Point2<T>>,
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tolerance: Option<T>,
}

impl<T: Real> TryFrom<RawNetwork<T>> for CurveNetwork<T> {
    type Error = GeometryError;

    fn try_from(raw: RawNetwork<T>) -> Result<Self, Self::Error> {
        let tol = raw.tolerance.unwrap_or_else(|| T::lit(DEFAULT_TOLERANCE));
        CurveNetwork::new(raw.vertices, raw.edges, tol)
    }
}

impl<T: Real> From<CurveNetwork<T>> for RawNetwork<T> {
    fn from(n: CurveNetwork<T>) -> Self {
        let default = T::lit(DEFAULT_TOLERANCE);
        RawNetwork {
            vertices: n.vertices,
            edges: n.edges,
            tolerance: if n.tolerance == default { None } else { Some(n.tolerance) },
        }
    }
}

impl<T: Real> CurveNetwork<T> {
    pub fn new(
        vertices: Vec<Point2<T>>,
        edges: Vec<[usize; 2]>,
        tolerance: T,
    ) -> Result<Self, GeometryError> {
        let net = Self { vertices, edges, tolerance };
        net.validate()?;
        Ok(net)
    }

    /// The one-point continuum `{p}`.
    pub fn point(p: Point2<T>) -> Result<Self, GeometryError> {
        Self::new(vec![p], Vec::new(), T::lit(DEFAULT_TOLERANCE))
    }

    pub fn segment(a: Point2<T>, b: Point2<T>) -> Result<Self, GeometryError> {
        Self::new(vec![a, b], vec![[0, 1]], T::lit(DEFAULT_TOLERANCE))
    }

    /// Open polyline through `points` in order.
    pub fn polyline(points: Vec<Point2<T>>) -> Result<Self, GeometryError> {
        let edges = (1..points.len()).map(|i| [i - 1, i]).collect();
        Self::new(points, edges, T::lit(DEFAULT_TOLERANCE))
    }

    /// Closed polygon through `points` (last joined to first).
    pub fn closed_polyline(points: Vec<Point2<T>>) -> Result<Self, GeometryError> {
        let n = points.len();
        let edges = (0..n).map(|i| [i, (i + 1) % n]).collect();
        Self::new(points, edges, T::lit(DEFAULT_TOLERANCE))
    }

    /// Star of straight arms leaving `center`.
    pub fn star(center: Point2<T>, tips: &[Point2<T>]) -> Result<Self, GeometryError> {
        let mut vertices = vec![center];
        vertices.extend_from_slice(tips);
        let edges = (1..vertices.len()).map(|i| [0, i]).collect();
        Self::new(vertices, edges, T::lit(DEFAULT_TOLERANCE))
    }

    pub fn with_tolerance(mut self, tolerance: T) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.vertices.is_empty() {
            return Err(GeometryError::EmptySet);
        }
        if !(self.tolerance > T::zero()) {
            return Err(GeometryError::BadTolerance);
        }
        if self.vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let n = self.vertices.len();
        for &[i, j] in &self.edges {
            if i >= n || j >= n {
                return Err(GeometryError::BadIndex);
            }
            if i == j || self.vertices[i] == self.vertices[j] {
                return Err(GeometryError::ZeroLengthEdge);
            }
        }
        if !self.is_connected() {
            return Err(GeometryError::Disconnected);
        }
        Ok(())
    }

    #[inline]
    pub fn vertices(&self) -> &[Point2<T>] {
        &self.vertices
    }

    #[inline]
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    #[inline]
    pub fn tolerance(&self) -> T {
        self.tolerance
    }

    #[inline]
    pub fn edge_segment(&self, e: usize) -> Segment<T> {
        let [i, j] = self.edges[e];
        Segment::raw(self.vertices[i], self.vertices[j])
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment<T>> + '_ {
        (0..self.edges.len()).map(move |e| self.edge_segment(e))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e[0] == v || e[1] == v).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices.len()];
        for &[i, j] in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (e, &[i, j]) in self.edges.iter().enumerate() {
            adj[i].push((j, e));
            adj[j].push((i, e));
        }
        adj
    }

    /// Graph connectivity over vertices (breadth-first from vertex 0).
    pub fn is_connected(&self) -> bool {
        let n = self.vertices.len();
        if n == 0 {
            return false;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == n
    }

    /// Diameter of the point set; attained at a pair of vertices.
    pub fn diameter(&self) -> T {
        let mut d = T::zero();
        for (i, &p) in self.vertices.iter().enumerate() {
            for &q in &self.vertices[i + 1..] {
                d = fmax(d, p.dist(q));
            }
        }
        d
    }

    /// Length-weighted centroid of the edges (vertex mean for a point).
    pub fn length_centroid(&self) -> Point2<T> {
        let total = total_length(self);
        if total == T::zero() {
            let n = T::from_usize_lossy(self.vertices.len());
            let s = self.vertices.iter().fold(Point2::origin(), |acc, &v| acc + v);
            return s * (T::one() / n);
        }
        let mut acc = Point2::origin();
        for s in self.segments() {
            acc = acc + (s.a + s.b) * (T::half() * s.length());
        }
        acc * (T::one() / total)
    }

    /// Image under the rigid motion `p ↦ R(theta) p + shift`.
    pub fn rigid_motion(&self, theta: T, shift: Point2<T>) -> Self {
        let vertices = self.vertices.iter().map(|&v| v.rotate(theta) + shift).collect();
        Self { vertices, edges: self.edges.clone(), tolerance: self.tolerance }
    }

    pub(crate) fn from_parts_unchecked(
        vertices: Vec<Point2<T>>,
        edges: Vec<[usize; 2]>,
        tolerance: T,
    ) -> Self {
        Self { vertices, edges, tolerance }
    }

    pub(crate) fn into_parts(self) -> (Vec<Point2<T>>, Vec<[usize; 2]>, T) {
        (self.vertices, self.edges, self.tolerance)
    }

    /// Splits edge `e` at parameter `t` (strictly inside), returning the index
    /// of the inserted vertex. Existing vertex indices are preserved; the
    /// first half keeps slot `e`.
    pub(crate) fn split_edge(&mut self, e: usize, t: T) -> usize {
        let [i, j] = self.edges[e];
        let p = self.vertices[i].lerp(self.vertices[j], t);
        let v = self.vertices.len();
        self.vertices.push(p);
        self.edges[e] = [i, v];
        self.edges.push([v, j]);
        v
    }

    /// Attaches a new vertex `p` to `v` by an edge; returns its index.
    pub(crate) fn attach(&mut self, v: usize, p: Point2<T>) -> usize {
        let w = self.vertices.len();
        self.vertices.push(p);
        self.edges.push([v, w]);
        w
    }

    pub(crate) fn vertex_mut(&mut self, v: usize) -> &mut Point2<T> {
        &mut self.vertices[v]
    }

    /// Returns the vertex of Σ at `p` (within `eps`), splitting the nearest
    /// edge if `p` falls inside it. `edge_hint` is the edge `p` was projected on.
    pub(crate) fn vertex_at(&mut self, p: Point2<T>, edge_hint: usize, eps: T) -> usize {
        let [i, j] = self.edges[edge_hint];
        if self.vertices[i].dist(p) <= eps {
            return i;
        }
        if self.vertices[j].dist(p) <= eps {
            return j;
        }
        let seg = self.edge_segment(edge_hint);
        let t = seg.closest_param(p);
        self.split_edge(edge_hint, t)
    }

    /// Removes the listed vertices together with their incident edges and
    /// compacts indices. Does not re-validate.
    pub(crate) fn remove_vertices(&mut self, remove: &[bool]) {
        let mut map = vec![usize::MAX; self.vertices.len()];
        let mut next = 0;
        let mut verts = Vec::with_capacity(self.vertices.len());
        for (v, &p) in self.vertices.iter().enumerate() {
            if !remove[v] {
                map[v] = next;
                next += 1;
                verts.push(p);
            }
        }
        self.edges = self
            .edges
            .iter()
            .filter(|e| !remove[e[0]] && !remove[e[1]])
            .map(|e| [map[e[0]], map[e[1]]])
            .collect();
        self.vertices = verts;
    }

    /// Merges vertices closer than `eps` and drops the resulting degenerate
    /// or duplicate edges.
    pub(crate) fn merge_close_vertices(&mut self, eps: T) {
        let n = self.vertices.len();
        let mut rep: Vec<usize> = (0..n).collect();
        for v in 0..n {
            for w in 0..v {
                if rep[w] == w && self.vertices[v].dist(self.vertices[w]) <= eps {
                    rep[v] = w;
                    break;
                }
            }
        }
        let mut edges: Vec<[usize; 2]> = Vec::with_capacity(self.edges.len());
        for &[i, j] in &self.edges {
            let (a, b) = (rep[i], rep[j]);
            if a == b {
                continue;
            }
            let key = [a.min(b), a.max(b)];
            if edges.iter().any(|e| [e[0].min(e[1]), e[0].max(e[1])] == key) {
                continue;
            }
            edges.push([a, b]);
        }
        self.edges = edges;
        let remove: Vec<bool> = (0..n).map(|v| rep[v] != v).collect();
        self.remove_vertices(&remove);
    }
}

/// H¹ of the network: the summed Euclidean length of its edges.
pub fn total_length<T: Real>(net: &CurveNetwork<T>) -> T {
    net.segments().map(|s| s.length()).sum()
}

/// Exact distance `d(p, Σ) = min_{y ∈ Σ} |p - y|`.
pub fn distance_to_network<T: Real>(p: Point2<T>, net: &CurveNetwork<T>) -> Result<T, GeometryError> {
    nearest_on_network(p, net).map(|(d, _, _)| d)
}

/// Nearest point of Σ to `p` as `(distance, point, edge)`; ties are broken by
/// the lowest edge index. `edge` is `None` for the one-point continuum.
pub fn nearest_on_network<T: Real>(
    p: Point2<T>,
    net: &CurveNetwork<T>,
) -> Result<(T, Point2<T>, Option<usize>), GeometryError> {
    if net.vertices().is_empty() {
        return Err(GeometryError::EmptySet);
    }
    if net.edges().is_empty() {
        let q = net.vertices()[0];
        let mut best = (p.dist(q), q, None);
        for &v in &net.vertices()[1..] {
            let d = p.dist(v);
            if d < best.0 {
                best = (d, v, None);
            }
        }
        return Ok(best);
    }
    let mut best = (T::infinity(), p, None);
    for (e, seg) in net.segments().enumerate() {
        let q = seg.closest_point(p);
        let d = q.dist(p);
        if d < best.0 {
            best = (d, q, Some(e));
        }
    }
    Ok(best)
}

/// Exact length of Σ ∩ B.
pub fn length_in_ball<T: Real>(net: &CurveNetwork<T>, ball: &Ball<T>) -> T {
    net.segments().map(|s| s.length_in_disk(ball.center, ball.radius)).sum()
}

/// Directed Hausdorff excess `ρ(Σ₁, Σ₂) = max_{x ∈ Σ₁} d(x, Σ₂)`, within `tol`.
///
/// Along a sub-interval `[a, b]` of an edge of Σ₁, `d(·, Σ₂)` is bounded by
/// the 1-Lipschitz cap `(d(a) + d(b) + ℓ) / 2` and, since the distance to one
/// segment `S` of Σ₂ is convex along a line, by `min_S max(d_S(a), d_S(b))`.
/// Intervals are bisected until their bound is within `tol` of the best
/// sampled value.
pub fn directed_hausdorff<T: Real>(
    n1: &CurveNetwork<T>,
    n2: &CurveNetwork<T>,
    tol: T,
) -> Result<T, GeometryError> {
    if n1.vertices().is_empty() || n2.vertices().is_empty() {
        return Err(GeometryError::EmptySet);
    }
    let targets: Vec<Segment<T>> = if n2.edges().is_empty() {
        n2.vertices().iter().map(|&v| Segment::raw(v, v)).collect()
    } else {
        n2.segments().collect()
    };
    let dist = |p: Point2<T>| targets.iter().map(|s| s.distance(p)).fold(T::infinity(), T::min);
    let bound = |seg: &Segment<T>, da: T, db: T| {
        let convex = targets
            .iter()
            .map(|s| s.distance(seg.a).max(s.distance(seg.b)))
            .fold(T::infinity(), T::min);
        convex.min((da + db + seg.length()) * T::half())
    };
    let mut best = T::zero();
    for &v in n1.vertices() {
        best = fmax(best, dist(v));
    }
    // Max-heap on the upper bound.
    let mut heap = BinaryHeap::new();
    for seg in n1.segments() {
        let (da, db) = (dist(seg.a), dist(seg.b));
        heap.push(Interval { ub: bound(&seg, da, db), seg, da, db });
    }
    while let Some(iv) = heap.pop() {
        if iv.ub <= best + tol {
            break;
        }
        let mid = iv.seg.point_at(T::half());
        let dm = dist(mid);
        best = fmax(best, dm);
        for (seg, da, db) in [
            (Segment::raw(iv.seg.a, mid), iv.da, dm),
            (Segment::raw(mid, iv.seg.b), dm, iv.db),
        ] {
            let ub = bound(&seg, da, db);
            if ub > best + tol {
                heap.push(Interval { ub, seg, da, db });
            }
        }
    }
    Ok(best)
}

/// Hausdorff distance `max{ρ(Σ₁,Σ₂), ρ(Σ₂,Σ₁)}`, accurate to the smaller of
/// the two network tolerances.
pub fn hausdorff_distance<T: Real>(
    n1: &CurveNetwork<T>,
    n2: &CurveNetwork<T>,
) -> Result<T, GeometryError> {
    let tol = n1.tolerance().min(n2.tolerance());
    Ok(fmax(directed_hausdorff(n1, n2, tol)?, directed_hausdorff(n2, n1, tol)?))
}

struct Interval<T> {
    ub: T,
    seg: Segment<T>,
    da: T,
    db: T,
}

impl<T: Real> PartialEq for Interval<T> {
    fn eq(&self, o: &Self) -> bool {
        self.ub == o.ub
    }
}
impl<T: Real> Eq for Interval<T> {}
impl<T: Real> PartialOrd for Interval<T> {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl<T: Real> Ord for Interval<T> {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.ub.partial_cmp(&o.ub).unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Whether every point of `small` lies within `eps` of `big` (point-set
/// containment up to `eps`).
pub fn contains_network<T: Real>(
    big: &CurveNetwork<T>,
    small: &CurveNetwork<T>,
    eps: T,
) -> Result<bool, GeometryError> {
    Ok(directed_hausdorff(small, big, eps * T::half())? <= eps)
}
