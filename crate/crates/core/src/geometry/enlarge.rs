//! Enlargement of a continuum to a prescribed length.
//!
//! Every complementary component `A` of Ω∖Σ receives a spur: a segment from
//! the point `y0 ∈ Σ` nearest to the most interior point `x0` of `A`, pointing
//! at `x0`. Points of that segment are closer to `x0` than `|x0 - y0|`, so they
//! avoid Σ and stay in `A`, which strictly shrinks. Length that does not fit in
//! the spurs is spent on radii of small balls centred at free spur tips.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{nearest_on_network, total_length, CurveNetwork, DomainSpec, GeometryError, Point2};
use crate::grid::{rasterize, OpenRegion};
use crate::scalar::Real;

/// Candidates examined per component when looking for an admissible `x0`.
const MAX_CANDIDATES: usize = 64;
const MAX_ROUNDS: usize = 200;

#[derive(Clone, Debug, Default)]
pub struct EnlargeOptions<T> {
    /// Spacing of the companion grid used to enumerate complementary
    /// components; defaults to the longer bounding-box side over 128.
    pub grid_h: Option<T>,
}

#[derive(Clone, Debug)]
pub struct Enlargement<T> {
    pub network: CurveNetwork<T>,
    /// Components of Ω∖Σ that received a spur.
    pub spurs: usize,
    /// Components too small for the companion grid (or without a straight
    /// access from Σ) that were skipped.
    pub skipped_components: usize,
    /// Radii added around spur tips to absorb the remainder.
    pub radii: usize,
}

/// Connected superset of `net` of length `target` (within the network
/// tolerance) whose complement has strictly smaller components.
pub fn enlarge_to_length<T: Real>(
    net: &CurveNetwork<T>,
    domain: &DomainSpec<T>,
    target: T,
    seed: u64,
) -> Result<CurveNetwork<T>, GeometryError> {
    enlarge_with(net, domain, target, seed, &EnlargeOptions::default()).map(|e| e.network)
}

pub fn enlarge_with<T: Real>(
    net: &CurveNetwork<T>,
    domain: &DomainSpec<T>,
    target: T,
    seed: u64,
    opts: &EnlargeOptions<T>,
) -> Result<Enlargement<T>, GeometryError> {
    if !target.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    let length = total_length(net);
    let tol = net.tolerance();
    let unchanged = |net: &CurveNetwork<T>| Enlargement {
        network: net.clone(),
        spurs: 0,
        skipped_components: 0,
        radii: 0,
    };
    if (target - length).abs() <= tol {
        return Ok(unchanged(net));
    }
    if target < length {
        return Err(GeometryError::TargetTooSmall {
            target: target.to_f64_lossy(),
            length: length.to_f64_lossy(),
        });
    }
    let (lo, hi) = domain.bounding_box();
    let h = opts
        .grid_h
        .unwrap_or_else(|| (hi.x - lo.x).max(hi.y - lo.y) / T::lit(128.0));
    let grid = Arc::new(rasterize(domain, Some(net), h)?);
    let region = OpenRegion::new(grid.clone());

    // One planned spur per admissible component: (y0, unit direction, cap).
    let mut plans: Vec<(Point2<T>, Point2<T>, T)> = Vec::new();
    let mut skipped = 0;
    for comp in region.components() {
        match plan_spur(net, domain, &grid, comp, h)? {
            Some(p) => plans.push(p),
            None => skipped += 1,
        }
    }

    let mut deficit = target - length;
    let mut out = net.clone();
    let mut tips: Vec<usize> = Vec::new();
    if !plans.is_empty() {
        let share = deficit / T::from_usize_lossy(plans.len());
        // Tiny deficits go to the largest component alone instead of
        // producing sub-tolerance edges everywhere.
        let used = if share <= tol * T::lit(10.0) { 1 } else { plans.len() };
        let share = deficit / T::from_usize_lossy(used);
        for &(y0, dir, cap) in plans.iter().take(used) {
            let len = share.min(cap);
            if len <= tol {
                continue;
            }
            let v = vertex_on(&mut out, y0, tol)?;
            tips.push(out.attach(v, y0 + dir * len));
            deficit -= len;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = T::lit(rng.random_range(-0.125..0.125) * std::f64::consts::PI);
    let mut radii = 0;
    let mut rounds = 0;
    while deficit > tol {
        rounds += 1;
        if rounds > MAX_ROUNDS {
            return Err(GeometryError::NoRoom { missing: deficit.to_f64_lossy() });
        }
        // Free tip with the largest clearance.
        let mut best: Option<(T, usize)> = None;
        for &t in &tips {
            if out.degree(t) != 1 {
                continue;
            }
            let c = clearance(&out, domain, t);
            if best.map_or(true, |(b, _)| c > b) {
                best = Some((c, t));
            }
        }
        let Some((rho, tip)) = best.filter(|&(c, _)| c > tol * T::lit(10.0)) else {
            return Err(GeometryError::NoRoom { missing: deficit.to_f64_lossy() });
        };
        let base = out.vertices()[tip];
        let parent = out
            .adjacency()[tip]
            .first()
            .map(|&(w, _)| out.vertices()[w])
            .expect("tip has one edge");
        let forward = (base - parent).angle();
        let arm = rho * T::lit(0.9);
        let half_pi = T::FRAC_PI_2();
        for turn in [T::zero(), half_pi, -half_pi] {
            if deficit <= tol {
                break;
            }
            let len = arm.min(deficit);
            let w = out.attach(tip, base + Point2::polar(len, forward + turn + offset));
            tips.push(w);
            deficit -= len;
            radii += 1;
        }
    }
    out.validate()?;
    Ok(Enlargement { network: out, spurs: plans.len(), skipped_components: skipped, radii })
}

/// Picks `x0` in the component (largest distance to ∂Ω ∪ Σ first) whose
/// segment to the nearest Σ-point lies in Ω̄.
fn plan_spur<T: Real>(
    net: &CurveNetwork<T>,
    domain: &DomainSpec<T>,
    grid: &crate::grid::Grid<T>,
    comp: &[usize],
    h: T,
) -> Result<Option<(Point2<T>, Point2<T>, T)>, GeometryError> {
    let mut ranked: Vec<(T, usize)> = comp
        .iter()
        .map(|&k| (grid.generator_distance(grid.position(k)), k))
        .collect();
    ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    for &(d, k) in ranked.iter().take(MAX_CANDIDATES) {
        if d < h * T::half() {
            break;
        }
        let x0 = grid.position(k);
        let (dist, y0, _) = nearest_on_network(x0, net)?;
        if dist <= net.tolerance() {
            continue;
        }
        let s = super::Segment::raw(y0, x0);
        if !domain.contains_segment(&s) {
            continue;
        }
        let dir = (x0 - y0) * (T::one() / dist);
        let cap = dist - d * T::half();
        return Ok(Some((y0, dir, cap)));
    }
    Ok(None)
}

/// Index of a vertex of `net` at `p` (a point of Σ), splitting an edge if needed.
fn vertex_on<T: Real>(net: &mut CurveNetwork<T>, p: Point2<T>, tol: T) -> Result<usize, GeometryError> {
    let (_, _, edge) = nearest_on_network(p, net)?;
    match edge {
        Some(e) => Ok(net.vertex_at(p, e, tol)),
        None => Ok(net
            .vertices()
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.dist(p).partial_cmp(&b.1.dist(p)).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(v, _)| v)
            .unwrap_or(0)),
    }
}

/// Distance from vertex `v` to ∂Ω and to the edges of `net` not incident to `v`.
fn clearance<T: Real>(net: &CurveNetwork<T>, domain: &DomainSpec<T>, v: usize) -> T {
    let p = net.vertices()[v];
    let mut c = domain.distance_to_boundary(p);
    for (e, &[i, j]) in net.edges().iter().enumerate() {
        if i != v && j != v {
            c = c.min(net.edge_segment(e).distance(p));
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::contains_network;

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    #[test]
    fn identity_at_target() {
        let sq = DomainSpec::unit_square();
        let net = CurveNetwork::segment(p(0.2, 0.5), p(0.8, 0.5)).unwrap();
        let out = enlarge_to_length(&net, &sq, 0.6, 1).unwrap();
        assert_eq!(out, net);
    }

    #[test]
    fn too_small() {
        let sq = DomainSpec::unit_square();
        let net = CurveNetwork::segment(p(0.2, 0.5), p(0.8, 0.5)).unwrap();
        assert!(matches!(
            enlarge_to_length(&net, &sq, 0.3, 1),
            Err(GeometryError::TargetTooSmall { .. })
        ));
    }

    #[test]
    fn unit_segment_to_one_and_a_half() {
        let sq = DomainSpec::unit_square();
        let net = CurveNetwork::segment(p(0.0, 0.5), p(1.0, 0.5)).unwrap();
        let e = enlarge_with(&net, &sq, 1.5, 7, &EnlargeOptions::default()).unwrap();
        assert!((total_length(&e.network) - 1.5).abs() <= 1e-7);
        assert!(e.network.is_connected());
        assert!(contains_network(&e.network, &net, 1e-9).unwrap());
        assert_eq!(e.spurs, 2);
        for v in e.network.vertices() {
            assert!(sq.contains_closed(*v));
        }
    }

    #[test]
    fn large_remainder_uses_radii() {
        let disk = DomainSpec::disk(p(0.0, 0.0), 1.0, 256).unwrap();
        let net = CurveNetwork::segment(p(-0.99, 0.0), p(0.99, 0.0)).unwrap();
        let e = enlarge_with(&net, &disk, 3.0, 3, &EnlargeOptions::default()).unwrap();
        assert!((total_length(&e.network) - 3.0).abs() <= 1e-7);
        assert!(e.radii > 0);
        for v in e.network.vertices() {
            assert!(disk.contains_closed(*v));
        }
    }

    #[test]
    fn seeds_reproduce() {
        let sq = DomainSpec::unit_square();
        let net = CurveNetwork::segment(p(0.3, 0.5), p(0.7, 0.5)).unwrap();
        let a = enlarge_to_length(&net, &sq, 2.0, 11).unwrap();
        let b = enlarge_to_length(&net, &sq, 2.0, 11).unwrap();
        assert_eq!(a, b);
    }
}
