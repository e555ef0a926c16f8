//! Replacement of Σ ∩ B̄ by the circle ∂B.

use super::{Ball, CurveNetwork, GeometryError, Point2};
use crate::scalar::Real;

/// Smallest admissible number of arcs for the polygonized circle.
pub const MIN_ARCS: usize = 16;

/// Upper bound of the length lost by polygonizing a circle of radius `r`
/// with `arcs` equal chords: `2πr (1 - sinc(π/arcs))`.
pub fn polygonization_error<T: Real>(r: T, arcs: usize) -> T {
    let n = T::from_usize_lossy(arcs);
    let x = T::PI() / n;
    T::TAU() * r * (T::one() - x.sin() / x)
}

/// Builds `Σ' = (Σ \ B̄) ∪ ∂B` with ∂B approximated by a polygon whose
/// vertices lie on the circle: `arcs` equally spaced vertices plus every
/// point where Σ crosses the circle.
///
/// The result satisfies `len(Σ') = len(Σ) - len(Σ ∩ B̄) + perimeter(∂B polygon)`.
pub fn ball_surgery<T: Real>(
    net: &CurveNetwork<T>,
    ball: &Ball<T>,
    arcs: usize,
) -> Result<CurveNetwork<T>, GeometryError> {
    if arcs < MIN_ARCS {
        return Err(GeometryError::TooFewArcs(arcs));
    }
    let (c, r) = (ball.center, ball.radius);
    let tol = net.tolerance();
    let meets_sphere = net.segments().any(|s| {
        let far = s.a.dist(c).max(s.b.dist(c));
        s.distance(c) <= r && far >= r
    }) || (net.edges().is_empty() && (net.vertices()[0].dist(c) - r).abs() <= tol);
    if !meets_sphere {
        return Err(GeometryError::DisconnectedResult);
    }

    let verts = net.vertices();
    let mut out: Vec<Point2<T>> = Vec::new();
    let mut map = vec![usize::MAX; verts.len()];
    for (v, &p) in verts.iter().enumerate() {
        if p.dist(c) > r {
            map[v] = out.len();
            out.push(p);
        }
    }

    // Points where the outside pieces reach the sphere, with their angles.
    let mut on_circle: Vec<(T, Point2<T>)> = Vec::new();
    // Edges as (outside vertex, index into on_circle) or kept whole.
    let mut kept: Vec<[usize; 2]> = Vec::new();
    let mut to_circle: Vec<(usize, usize)> = Vec::new();
    let mut snap = |p: Point2<T>| -> usize {
        // The exact intersection is projected on the circle to remove rounding.
        let q = c + (p - c) * (r / p.dist(c));
        on_circle.push(((q - c).angle(), q));
        on_circle.len() - 1
    };
    for (e, &[i, j]) in net.edges().iter().enumerate() {
        let seg = net.edge_segment(e);
        match seg.disk_interval(c, r) {
            None => kept.push([map[i], map[j]]),
            Some((t0, t1)) => {
                if map[i] != usize::MAX && t0 > T::zero() {
                    let k = snap(seg.point_at(t0));
                    to_circle.push((map[i], k));
                }
                if map[j] != usize::MAX && t1 < T::one() {
                    let k = snap(seg.point_at(t1));
                    to_circle.push((map[j], k));
                }
            }
        }
    }

    // Circle polygon: uniform vertices, replaced by crossing points nearby.
    let step = T::TAU() / T::from_usize_lossy(arcs);
    let min_sep = step * T::lit(0.25);
    let mut ring: Vec<(T, Point2<T>, Option<usize>)> = on_circle
        .iter()
        .enumerate()
        .map(|(k, &(a, p))| (normalize_angle(a), p, Some(k)))
        .collect();
    for j in 0..arcs {
        let a = step * T::from_usize_lossy(j);
        let close = ring.iter().any(|&(b, _, k)| k.is_some() && angular_gap(a, b) < min_sep);
        if !close {
            ring.push((a, c + Point2::polar(r, a), None));
        }
    }
    ring.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));

    // Merge crossing points that coincide up to tolerance.
    let mut ring_index = vec![usize::MAX; on_circle.len()];
    let mut ring_vertices: Vec<usize> = Vec::new();
    for &(_, p, k) in &ring {
        let reuse = ring_vertices.last().copied().filter(|&v| out[v].dist(p) <= tol);
        let v = match reuse {
            Some(v) => v,
            None => {
                out.push(p);
                let v = out.len() - 1;
                ring_vertices.push(v);
                v
            }
        };
        if let Some(k) = k {
            ring_index[k] = v;
        }
    }
    if ring_vertices.len() > 1 && out[ring_vertices[0]].dist(out[*ring_vertices.last().unwrap()]) <= tol {
        let last = ring_vertices.pop().unwrap();
        for idx in ring_index.iter_mut() {
            if *idx == last {
                *idx = ring_vertices[0];
            }
        }
    }

    let mut edges = kept;
    for (v, k) in to_circle {
        let w = ring_index[k];
        if out[v].dist(out[w]) > T::zero() {
            edges.push([v, w]);
        }
    }
    let m = ring_vertices.len();
    for j in 0..m {
        edges.push([ring_vertices[j], ring_vertices[(j + 1) % m]]);
    }

    // Drop vertices that lost all their edges (they were inside B̄'s complement
    // only through zero-length pieces).
    let mut net2 = CurveNetwork::from_parts_unchecked(out, edges, tol);
    let deg = net2.degrees();
    let isolated: Vec<bool> = deg.iter().map(|&d| d == 0).collect();
    if isolated.iter().any(|&b| b) {
        net2.remove_vertices(&isolated);
    }
    net2.validate().map_err(|e| match e {
        GeometryError::Disconnected => GeometryError::DisconnectedResult,
        other => other,
    })?;
    Ok(net2)
}

fn normalize_angle<T: Real>(a: T) -> T {
    let tau = T::TAU();
    let mut a = a % tau;
    if a < T::zero() {
        a += tau;
    }
    a
}

fn angular_gap<T: Real>(a: T, b: T) -> T {
    let d = (normalize_angle(a) - normalize_angle(b)).abs();
    d.min(T::TAU() - d)
}
