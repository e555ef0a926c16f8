//! Seeded simulated annealing for `min F(Ω∖Σ)` over connected networks Σ in
//! Ω̄ of length `L`.
//!
//! Each generation draws a batch of candidates, every one from its own
//! ChaCha stream keyed by `(seed, generation, index)`, scores them in
//! parallel and gathers the scores by index; the best candidate then faces a
//! Metropolis test. Results therefore do not depend on the thread count.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::{ahlfors_profile, geometric_radii, summarize, AhlforsOptions, AhlforsSummary, DensityProfile};
use crate::functionals::{certified_radius, evaluate, FunctionalError, SetFunctional};
use crate::geometry::{
    ball_surgery, enlarge_with, nearest_on_network, total_length, Ball, CurveNetwork, DomainSpec,
    EnlargeOptions, GeometryError, Point2, Segment, MIN_ARCS,
};
use crate::grid::{rasterize, Grid, GridError, NodeClass, OpenRegion};
use crate::pde::{Coefficients, PdeOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptError {
    #[error("length {length} is infeasible (capacity {capacity})")]
    InfeasibleLength { length: f64, capacity: f64 },
    #[error("move {0:?} does not apply to the current network")]
    MoveInapplicable(MoveKind),
    #[error("repair failed: {0}")]
    RepairFailed(String),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    PerturbVertex,
    SplitEdge,
    SlideBranch,
    BallSurgery,
    EnlargeSpur,
    PruneSpur,
}

impl MoveKind {
    pub const ALL: [MoveKind; 6] = [
        MoveKind::PerturbVertex,
        MoveKind::SplitEdge,
        MoveKind::SlideBranch,
        MoveKind::BallSurgery,
        MoveKind::EnlargeSpur,
        MoveKind::PruneSpur,
    ];
}

/// Relative sampling weights of the moves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoveWeights {
    pub perturb_vertex: f64,
    pub split_edge: f64,
    pub slide_branch: f64,
    pub ball_surgery: f64,
    pub enlarge_spur: f64,
    pub prune_spur: f64,
}

impl Default for MoveWeights {
    fn default() -> Self {
        Self {
            perturb_vertex: 0.3,
            split_edge: 0.1,
            slide_branch: 0.15,
            ball_surgery: 0.02,
            enlarge_spur: 0.33,
            prune_spur: 0.1,
        }
    }
}

impl MoveWeights {
    fn get(&self, k: MoveKind) -> f64 {
        match k {
            MoveKind::PerturbVertex => self.perturb_vertex,
            MoveKind::SplitEdge => self.split_edge,
            MoveKind::SlideBranch => self.slide_branch,
            MoveKind::BallSurgery => self.ball_surgery,
            MoveKind::EnlargeSpur => self.enlarge_spur,
            MoveKind::PruneSpur => self.prune_spur,
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> MoveKind {
        let total: f64 = MoveKind::ALL.iter().map(|&k| self.get(k)).sum();
        let mut u = rng.random::<f64>() * total;
        for k in MoveKind::ALL {
            u -= self.get(k);
            if u < 0.0 {
                return k;
            }
        }
        MoveKind::PerturbVertex
    }
}

/// Annealing schedule. Temperatures are relative to `|F(Σ₀)|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    pub initial_temperature: f64,
    pub cooling: f64,
    /// Number of generations.
    pub iterations: usize,
    /// Candidates scored per generation.
    pub batch: usize,
    /// Generations without a new best after which the chain restarts from
    /// the initial guess at the initial temperature (0 disables restarts).
    pub restart_after: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { initial_temperature: 0.01, cooling: 0.99, iterations: 2000, batch: 4, restart_after: 250 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptConfig {
    /// Prescribed length `L`.
    pub length: f64,
    pub functional: SetFunctional,
    #[serde(default)]
    pub coefficients: Coefficients<f64>,
    pub grid_h: f64,
    #[serde(default)]
    pub moves: MoveWeights,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_length_tol")]
    pub length_tol: f64,
    /// `L` may use at most this fraction of the grid capacity `|Ω|/h`.
    #[serde(default = "default_capacity_fraction")]
    pub capacity_fraction: f64,
    /// Gaussian vertex step in units of `grid_h`.
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default)]
    pub pde: PdeOptions,
}

fn default_length_tol() -> f64 {
    1e-6
}

fn default_capacity_fraction() -> f64 {
    0.25
}

fn default_step() -> f64 {
    3.0
}

impl OptConfig {
    pub fn new(length: f64, functional: SetFunctional, grid_h: f64) -> Self {
        Self {
            length,
            functional,
            coefficients: Coefficients::laplacian(),
            grid_h,
            moves: MoveWeights::default(),
            schedule: Schedule::default(),
            seed: 0,
            length_tol: default_length_tol(),
            capacity_fraction: default_capacity_fraction(),
            step: default_step(),
            pde: PdeOptions::default(),
        }
    }

    /// Length capacity `|Ω|/h` of the grid.
    pub fn capacity(&self, domain: &DomainSpec<f64>) -> f64 {
        domain.area() / self.grid_h
    }

    pub fn validate(&self, domain: &DomainSpec<f64>) -> Result<(), OptError> {
        if !(self.grid_h > 0.0) || !self.grid_h.is_finite() {
            return Err(OptError::BadConfig("grid_h must be positive".into()));
        }
        if !(self.length_tol > 0.0) {
            return Err(OptError::BadConfig("length_tol must be positive".into()));
        }
        let w = &self.moves;
        let ws = [w.perturb_vertex, w.split_edge, w.slide_branch, w.ball_surgery, w.enlarge_spur, w.prune_spur];
        if ws.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) || ws.iter().sum::<f64>() <= 0.0 {
            return Err(OptError::BadConfig("move weights must be nonnegative and not all zero".into()));
        }
        let s = &self.schedule;
        if !(s.initial_temperature >= 0.0) || !(s.cooling > 0.0 && s.cooling <= 1.0) || s.batch == 0 {
            return Err(OptError::BadConfig("schedule needs temperature >= 0, cooling in (0,1], batch >= 1".into()));
        }
        self.functional.validate()?;
        let capacity = self.capacity_fraction * self.capacity(domain);
        if !(self.length > 0.0) || !self.length.is_finite() || self.length > capacity {
            return Err(OptError::InfeasibleLength { length: self.length, capacity });
        }
        Ok(())
    }
}

/// One generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Move of the best candidate of the generation (`None` if every
    /// candidate was rejected before scoring).
    pub kind: Option<MoveKind>,
    pub candidate_value: f64,
    pub accepted: bool,
    pub current_value: f64,
    pub best_value: f64,
    pub length: f64,
    pub temperature: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptResult {
    pub best: CurveNetwork<f64>,
    pub best_value: f64,
    pub initial: CurveNetwork<f64>,
    pub initial_value: f64,
    pub evaluations: usize,
    pub cache_hits: usize,
    pub rejected_candidates: usize,
    /// Largest radius used for surgery moves and for the density audit.
    pub r0: f64,
    pub audit: AhlforsSummary,
    pub trace: Vec<TraceRecord>,
}

/// Segment through the centroid along the longer side of the bounding box
/// (horizontal on ties), centred when it fits and extended by enlargement
/// otherwise.
pub fn initial_guess(domain: &DomainSpec<f64>, length: f64, seed: u64) -> Result<CurveNetwork<f64>, OptError> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(OptError::InfeasibleLength { length, capacity: f64::NAN });
    }
    let (lo, hi) = domain.bounding_box();
    let dir = if hi.x - lo.x >= hi.y - lo.y { Point2::new(1.0, 0.0) } else { Point2::new(0.0, 1.0) };
    let mut c = domain.centroid();
    if !domain.contains(c) {
        c = deepest_point(domain)?;
    }
    let (s_minus, s_plus) = chord(domain, c, dir);
    let chord_len = s_plus - s_minus;
    if length <= chord_len {
        // Centre on c, shifted to stay within the chord.
        let a = (-length / 2.0).max(s_minus).min(s_plus - length);
        let net = CurveNetwork::segment(
            clamp_inside(domain, c + dir * a),
            clamp_inside(domain, c + dir * (a + length)),
        )?;
        return Ok(net);
    }
    let net = CurveNetwork::segment(clamp_inside(domain, c + dir * s_minus), clamp_inside(domain, c + dir * s_plus))?;
    let h = (hi.x - lo.x).max(hi.y - lo.y) / 128.0;
    match enlarge_with(&net, domain, length, seed, &EnlargeOptions { grid_h: Some(h) }) {
        Ok(e) => Ok(e.network),
        Err(GeometryError::NoRoom { .. }) => Err(OptError::InfeasibleLength { length, capacity: f64::NAN }),
        Err(e) => Err(e.into()),
    }
}

fn deepest_point(domain: &DomainSpec<f64>) -> Result<Point2<f64>, OptError> {
    let (lo, hi) = domain.bounding_box();
    let h = (hi.x - lo.x).max(hi.y - lo.y) / 64.0;
    let g = rasterize(domain, None, h)?;
    let mut best = (f64::NEG_INFINITY, lo);
    for k in 0..g.len() {
        if g.class(k) == NodeClass::Interior {
            let p = g.position(k);
            let d = g.generator_distance(p);
            if d > best.0 {
                best = (d, p);
            }
        }
    }
    Ok(best.1)
}

/// Parameters `(s⁻ ≤ 0 ≤ s⁺)` where the line `c + s·dir` leaves Ω̄.
fn chord(domain: &DomainSpec<f64>, c: Point2<f64>, dir: Point2<f64>) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for b in domain.boundary_segments() {
        let e = b.b - b.a;
        let den = dir.cross(e);
        if den.abs() < 1e-15 {
            continue;
        }
        let w = b.a - c;
        let s = w.cross(e) / den;
        let t = w.cross(dir) / den;
        if (-1e-12..=1.0 + 1e-12).contains(&t) {
            if s >= 0.0 {
                hi = hi.min(s);
            } else {
                lo = lo.max(s);
            }
        }
    }
    (lo, hi)
}

/// Nearest point of Ω̄ to `p`, pulled inside against rounding.
fn clamp_inside(domain: &DomainSpec<f64>, p: Point2<f64>) -> Point2<f64> {
    if domain.contains_closed(p) {
        return p;
    }
    let q = domain.clamp(p);
    let c = domain.centroid();
    let mut t = 1e-12;
    for _ in 0..40 {
        let r = q.lerp(c, t);
        if domain.contains_closed(r) {
            return r;
        }
        t *= 4.0;
    }
    c
}

/// Brings a connected network back into Ω̄ at length `L ± tol`: vertices are
/// clamped to Ω̄; a short network is enlarged; a long one has its degree-one
/// spurs trimmed longest first (sparing `protect`), then is scaled toward its
/// length centroid.
pub fn repair(
    net: &CurveNetwork<f64>,
    domain: &DomainSpec<f64>,
    length: f64,
    tol: f64,
    seed: u64,
) -> Result<CurveNetwork<f64>, OptError> {
    repair_with(net, domain, length, tol, seed, None, None)
}

fn repair_with(
    net: &CurveNetwork<f64>,
    domain: &DomainSpec<f64>,
    length: f64,
    tol: f64,
    seed: u64,
    protect: Option<usize>,
    grid_h: Option<f64>,
) -> Result<CurveNetwork<f64>, OptError> {
    let fail = |m: &str| OptError::RepairFailed(m.to_string());
    let (mut verts, mut edges, t) = net.clone().into_parts();
    let eps = t.max(1e-12);
    let mut moved = false;
    for v in verts.iter_mut() {
        let c = clamp_inside(domain, *v);
        moved |= c != *v;
        *v = c;
    }
    // Keep the protected tip identifiable through merging.
    let mut out = CurveNetwork::from_parts_unchecked(std::mem::take(&mut verts), std::mem::take(&mut edges), t);
    let mut protect = protect;
    if moved || out.edges().iter().any(|&[i, j]| out.vertices()[i].dist(out.vertices()[j]) <= eps) {
        let before = protect.map(|p| out.vertices()[p]);
        out.merge_close_vertices(eps);
        protect = before.and_then(|q| out.vertices().iter().position(|&v| v == q));
    }
    out.validate().map_err(|e| fail(&e.to_string()))?;
    if out.segments().any(|s| !domain.contains_segment(&s)) {
        return Err(fail("edge leaves the domain"));
    }
    let mut len = total_length(&out);
    if len < length - tol {
        let e = enlarge_with(&out, domain, length, seed, &EnlargeOptions { grid_h })
            .map_err(|e| fail(&e.to_string()))?;
        return Ok(e.network);
    }
    // Trim spurs.
    while len > length + tol {
        let excess = len - length;
        let deg = out.degrees();
        let mut best: Option<(f64, usize, usize)> = None;
        for (e, &[i, j]) in out.edges().iter().enumerate() {
            for (tip, base) in [(i, j), (j, i)] {
                if deg[tip] == 1 && Some(tip) != protect && out.edges().len() > 1 {
                    let l = out.vertices()[tip].dist(out.vertices()[base]);
                    if best.is_none_or(|b| l > b.0) {
                        best = Some((l, e, tip));
                    }
                }
            }
        }
        let Some((l, e, tip)) = best else { break };
        let [i, j] = out.edges()[e];
        let base = if i == tip { j } else { i };
        if l > excess + eps {
            let (b, p) = (out.vertices()[base], out.vertices()[tip]);
            *out.vertex_mut(tip) = b.lerp(p, (l - excess) / l);
            len = total_length(&out);
            break;
        }
        let mut remove = vec![false; out.vertices().len()];
        remove[tip] = true;
        out.remove_vertices(&remove);
        protect = protect.map(|p| if p > tip { p - 1 } else { p });
        len = total_length(&out);
    }
    if len > length + tol {
        let c = out.length_centroid();
        let f = length / len;
        let (verts, edges, t) = out.into_parts();
        let verts = verts.into_iter().map(|v| c + (v - c) * f).collect();
        out = CurveNetwork::from_parts_unchecked(verts, edges, t);
        if out.vertices().iter().any(|&v| !domain.contains_closed(v))
            || out.segments().any(|s| !domain.contains_segment(&s))
        {
            return Err(fail("scaled network leaves the domain"));
        }
    }
    out.validate().map_err(|e| fail(&e.to_string()))?;
    let len = total_length(&out);
    if (len - length).abs() > tol {
        return Err(fail("length target missed"));
    }
    Ok(out)
}

/// Geometry of the accepted state that moves consult.
#[derive(Clone, Debug)]
struct Hints {
    /// Most interior point of each complementary component with its depth.
    holes: Vec<(Point2<f64>, f64)>,
    r0: f64,
}

fn hints(
    net: &CurveNetwork<f64>,
    grid: &Grid<f64>,
    region: &OpenRegion<f64>,
    config: &OptConfig,
) -> Hints {
    let mut holes = Vec::with_capacity(region.components().len());
    for comp in region.components() {
        let mut best = (f64::NEG_INFINITY, 0);
        for &k in comp {
            let d = grid.generator_distance(grid.position(k));
            if d > best.0 {
                best = (d, k);
            }
        }
        holes.push((grid.position(best.1), best.0));
    }
    let half_diam = net.diameter() / 2.0;
    let k = config.functional.spectral_order();
    let ra = if k > 0 {
        certified_radius(region, &config.coefficients, k).map(|(_, _, ra)| ra)
    } else {
        None
    };
    Hints { holes, r0: ra.map_or(half_diam, |ra| ra.min(half_diam)) }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// One candidate from `net` (before repair). Returns the candidate and a
/// vertex to spare while trimming.
fn propose(
    net: &CurveNetwork<f64>,
    domain: &DomainSpec<f64>,
    config: &OptConfig,
    hints: &Hints,
    kind: MoveKind,
    rng: &mut ChaCha8Rng,
) -> Result<(CurveNetwork<f64>, Option<usize>), OptError> {
    let h = config.grid_h;
    // Log-uniform in [step·h/8, step·h]: coarse exploration and fine polish.
    let sigma = config.step * h * 0.125f64.powf(rng.random::<f64>());
    let nv = net.vertices().len();
    let ne = net.edges().len();
    let inapplicable = || OptError::MoveInapplicable(kind);
    let mut out = net.clone();
    match kind {
        MoveKind::PerturbVertex => {
            let v = rng.random_range(0..nv);
            let p = out.vertices()[v];
            let q = p + Point2::new(gaussian(rng), gaussian(rng)) * sigma;
            *out.vertex_mut(v) = clamp_inside(domain, q);
            Ok((out, None))
        }
        MoveKind::SplitEdge => {
            if ne == 0 {
                return Err(inapplicable());
            }
            let e = rng.random_range(0..ne);
            let s = out.edge_segment(e);
            if s.length() < 2.0 * h {
                return Err(inapplicable());
            }
            let t = rng.random_range(0.25..0.75);
            let v = out.split_edge(e, t);
            let d = s.b - s.a;
            let normal = Point2::new(-d.y, d.x) * (1.0 / d.norm());
            let p = out.vertices()[v] + normal * (gaussian(rng) * sigma);
            *out.vertex_mut(v) = clamp_inside(domain, p);
            Ok((out, None))
        }
        MoveKind::SlideBranch => {
            let deg = out.degrees();
            let tips: Vec<usize> = (0..nv).filter(|&v| deg[v] == 1).collect();
            if tips.is_empty() || ne < 2 {
                return Err(inapplicable());
            }
            let v = tips[rng.random_range(0..tips.len())];
            let (w, _) = out.adjacency()[v][0];
            let (pv, pw) = (out.vertices()[v], out.vertices()[w]);
            let mode = rng.random_range(0..3u8);
            if mode == 2 && !hints.holes.is_empty() {
                return regraft(&out, domain, hints, v, h, rng).ok_or_else(inapplicable);
            }
            if tips.len() >= 2 && mode == 1 {
                // Slide length along the network: tip `v` gives `delta` to tip `t`.
                let t = loop {
                    let t = tips[rng.random_range(0..tips.len())];
                    if t != v {
                        break t;
                    }
                };
                let (u, _) = out.adjacency()[t][0];
                let (pt, pu) = (out.vertices()[t], out.vertices()[u]);
                let lv = pv.dist(pw);
                let delta = (gaussian(rng).abs() * sigma).min(lv - 1e-9);
                if delta <= 0.0 {
                    return Err(inapplicable());
                }
                let q = pt + (pt - pu) * (delta / pt.dist(pu));
                if !domain.contains_closed(q) || !domain.contains_segment(&Segment::new(pt, q)?) {
                    return Err(inapplicable());
                }
                *out.vertex_mut(v) = pw.lerp(pv, (lv - delta) / lv);
                *out.vertex_mut(t) = q;
                return Ok((out, Some(t)));
            }
            let angle = gaussian(rng) * 0.35;
            let q = pw + (pv - pw).rotate(angle);
            *out.vertex_mut(v) = clamp_inside(domain, q);
            Ok((out, Some(v)))
        }
        MoveKind::BallSurgery => {
            let v = rng.random_range(0..nv);
            let x = out.vertices()[v];
            let room = domain.distance_to_boundary(x).min(hints.r0);
            if room <= 1.5 * h {
                return Err(inapplicable());
            }
            let r = rng.random_range(h..room);
            let arcs = MIN_ARCS.max((std::f64::consts::TAU * r / h).ceil() as usize).min(256);
            let cut = ball_surgery(&out, &Ball::new(x, r)?, arcs).map_err(|_| inapplicable())?;
            Ok((cut, None))
        }
        MoveKind::EnlargeSpur => {
            if hints.holes.is_empty() {
                return Err(inapplicable());
            }
            // Deeper holes are chosen more often.
            let total: f64 = hints.holes.iter().map(|&(_, d)| d * d).sum();
            let mut u = rng.random::<f64>() * total;
            let mut pick = hints.holes[0];
            for &hole in &hints.holes {
                u -= hole.1 * hole.1;
                if u < 0.0 {
                    pick = hole;
                    break;
                }
            }
            let (x0, _) = pick;
            let (dist, y0, edge) = nearest_on_network(x0, &out)?;
            if dist <= 2.0 * h {
                return Err(inapplicable());
            }
            let len = dist * rng.random_range(0.2..0.8);
            let s = Segment::new(y0, y0 + (x0 - y0) * (len / dist))?;
            if !domain.contains_segment(&s) {
                return Err(inapplicable());
            }
            let base = match edge {
                Some(e) => out.vertex_at(y0, e, out.tolerance()),
                None => 0,
            };
            let tip = out.attach(base, s.b);
            Ok((out, Some(tip)))
        }
        MoveKind::PruneSpur => {
            let deg = out.degrees();
            let tips: Vec<usize> = (0..nv).filter(|&v| deg[v] == 1).collect();
            let cyclic = ne >= nv;
            if (tips.is_empty() || (cyclic && rng.random::<f64>() < 0.5)) && ne >= 2 {
                // No spur to prune: open a cycle instead by dropping one of its
                // edges (repair regrows the lost length).
                let start = rng.random_range(0..ne);
                for e in (start..ne).chain(0..start) {
                    let (v, mut edges, t) = net.clone().into_parts();
                    edges.remove(e);
                    let cut = CurveNetwork::from_parts_unchecked(v, edges, t);
                    if cut.is_connected() {
                        return Ok((cut, None));
                    }
                }
                return Err(inapplicable());
            }
            if tips.is_empty() || ne < 2 {
                return Err(inapplicable());
            }
            // Short stubs are pruned more often; their length goes to another
            // tip, extended straight when it fits (else repair enlarges).
            let tip_len = |v: usize| {
                let (w, _) = out.adjacency()[v][0];
                out.vertices()[v].dist(out.vertices()[w])
            };
            let weights: Vec<f64> = tips.iter().map(|&v| 1.0 / tip_len(v).max(h)).collect();
            let mut u = rng.random::<f64>() * weights.iter().sum::<f64>();
            let mut v = tips[tips.len() - 1];
            for (&t, &w) in tips.iter().zip(&weights) {
                u -= w;
                if u < 0.0 {
                    v = t;
                    break;
                }
            }
            let freed = tip_len(v);
            let others: Vec<usize> = tips.iter().copied().filter(|&t| t != v).collect();
            if !others.is_empty() {
                let t = others[rng.random_range(0..others.len())];
                let (w, _) = out.adjacency()[t][0];
                let (pt, pw) = (out.vertices()[t], out.vertices()[w]);
                let q = pt + (pt - pw) * (freed / pt.dist(pw));
                if domain.contains_closed(q) && domain.contains_segment(&Segment::new(pt, q)?) {
                    *out.vertex_mut(t) = q;
                }
            }
            let mut remove = vec![false; nv];
            remove[v] = true;
            out.remove_vertices(&remove);
            Ok((out, None))
        }
    }
}

/// Cuts the branch from tip `v` back to its junction and regrows that length
/// as a straight spur toward a hole (deeper holes first).
fn regraft(
    net: &CurveNetwork<f64>,
    domain: &DomainSpec<f64>,
    hints: &Hints,
    v: usize,
    h: f64,
    rng: &mut ChaCha8Rng,
) -> Option<(CurveNetwork<f64>, Option<usize>)> {
    let adj = net.adjacency();
    let mut remove = vec![false; net.vertices().len()];
    let (mut prev, mut cur, mut freed) = (usize::MAX, v, 0.0);
    loop {
        remove[cur] = true;
        let next = adj[cur].iter().map(|&(w, _)| w).find(|&w| w != prev)?;
        freed += net.vertices()[cur].dist(net.vertices()[next]);
        if adj[next].len() != 2 {
            break;
        }
        (prev, cur) = (cur, next);
    }
    let mut out = net.clone();
    out.remove_vertices(&remove);
    if out.edges().is_empty() {
        return None;
    }
    let total: f64 = hints.holes.iter().map(|&(_, d)| d * d).sum();
    let mut u = rng.random::<f64>() * total;
    let mut x0 = hints.holes[0].0;
    for &(p, d) in &hints.holes {
        u -= d * d;
        if u < 0.0 {
            x0 = p;
            break;
        }
    }
    let (dist, y0, edge) = nearest_on_network(x0, &out).ok()?;
    if dist <= 2.0 * h {
        return None;
    }
    let len = freed.min(0.9 * dist);
    let s = Segment::new(y0, y0 + (x0 - y0) * (len / dist)).ok()?;
    if !domain.contains_segment(&s) {
        return None;
    }
    let base = match edge {
        Some(e) => out.vertex_at(y0, e, out.tolerance()),
        None => 0,
    };
    let tip = out.attach(base, s.b);
    Some((out, Some(tip)))
}

/// Rasterizes `net` on the configured lattice and evaluates the functional.
fn score(
    net: &CurveNetwork<f64>,
    domain: &DomainSpec<f64>,
    config: &OptConfig,
) -> Result<(f64, Arc<Grid<f64>>, OpenRegion<f64>), OptError> {
    let grid = Arc::new(rasterize(domain, Some(net), config.grid_h)?);
    let region = OpenRegion::new(grid.clone());
    let v = evaluate(&config.functional, &region, &config.coefficients, &config.pde)?;
    Ok((v, grid, region))
}

/// Secondary key that only separates candidates with equal values. The
/// inradius is flat under most moves, so it gets a soft maximum of the
/// distance field (an L⁸ mean) that still registers shrinking holes.
fn tie_break(functional: &SetFunctional, grid: &Grid<f64>, region: &OpenRegion<f64>) -> f64 {
    if !matches!(functional, SetFunctional::Inradius) || region.node_count() == 0 {
        return 0.0;
    }
    let sum: f64 = region
        .components()
        .iter()
        .flatten()
        .map(|&k| grid.generator_distance(grid.position(k)).powi(8))
        .sum();
    (sum / region.node_count() as f64).powf(0.125)
}

/// `(value, tie)` ordering with values within `eps` treated as equal.
fn better(a: (f64, f64), b: (f64, f64), eps: f64) -> bool {
    if (a.0 - b.0).abs() <= eps {
        a.1 < b.1
    } else {
        a.0 < b.0
    }
}

/// Vertex coordinates quantized at `h/4` plus the edge list.
fn cache_key(net: &CurveNetwork<f64>, h: f64) -> Vec<i64> {
    let q = 4.0 / h;
    let mut key = Vec::with_capacity(2 * net.vertices().len() + 2 * net.edges().len() + 1);
    for v in net.vertices() {
        key.push((v.x * q).round() as i64);
        key.push((v.y * q).round() as i64);
    }
    key.push(-1);
    for &[i, j] in net.edges() {
        key.push(i as i64);
        key.push(j as i64);
    }
    key
}

/// Stream for candidate `index` of generation `gen`.
fn candidate_rng(seed: u64, gen: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((gen as u64) << 20) | index as u64);
    rng
}

struct Candidate {
    net: CurveNetwork<f64>,
    kind: MoveKind,
    value: f64,
    tie: f64,
    key: Vec<i64>,
    /// Lattice and region of a fresh evaluation (cache hits carry none).
    scored: Option<(Arc<Grid<f64>>, OpenRegion<f64>)>,
}

pub fn minimize(domain: &DomainSpec<f64>, config: &OptConfig) -> Result<OptResult, OptError> {
    config.validate(domain)?;
    let initial = initial_guess(domain, config.length, config.seed)?;
    let (v0, g0, r0) = score(&initial, domain, config)?;
    let scale = if v0.is_finite() && v0 != 0.0 { v0.abs() } else { 1.0 };
    let mut current = (initial.clone(), v0);
    let mut best = (initial.clone(), v0);
    let hint0 = hints(&initial, &g0, &r0, config);
    let mut hint = hint0.clone();
    let eps = 1e-12 * scale;
    let tie0 = tie_break(&config.functional, &g0, &r0);
    let mut current_tie = tie0;
    let mut cache: HashMap<Vec<i64>, (f64, f64)> = HashMap::new();
    cache.insert(cache_key(&initial, config.grid_h), (v0, current_tie));
    let mut trace = Vec::with_capacity(config.schedule.iterations);
    let (mut evaluations, mut cache_hits, mut rejected) = (1usize, 0usize, 0usize);
    let mut temperature = config.schedule.initial_temperature;
    let mut accept_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_acce_97ed);
    let mut last_best = 0usize;

    for gen in 0..config.schedule.iterations {
        let base = &current.0;
        let results: Vec<Option<Candidate>> = (0..config.schedule.batch)
            .into_par_iter()
            .map(|i| {
                let mut rng = candidate_rng(config.seed, gen, i);
                for _ in 0..8 {
                    let kind = config.moves.sample(&mut rng);
                    let Ok((raw, protect)) = propose(base, domain, config, &hint, kind, &mut rng) else {
                        continue;
                    };
                    let rseed = rng.random::<u64>();
                    let Ok(net) = repair_with(
                        &raw,
                        domain,
                        config.length,
                        config.length_tol,
                        rseed,
                        protect,
                        Some(config.grid_h),
                    ) else {
                        continue;
                    };
                    let key = cache_key(&net, config.grid_h);
                    if let Some(&(value, tie)) = cache.get(&key) {
                        return Some(Candidate { net, kind, value, tie, key, scored: None });
                    }
                    let Ok((value, g, r)) = score(&net, domain, config) else { continue };
                    let tie = tie_break(&config.functional, &g, &r);
                    return Some(Candidate { net, kind, value, tie, key, scored: Some((g, r)) });
                }
                None
            })
            .collect();

        let mut chosen: Option<Candidate> = None;
        for c in results {
            let Some(c) = c else {
                rejected += 1;
                continue;
            };
            if c.scored.is_none() {
                cache_hits += 1;
            } else {
                evaluations += 1;
                cache.insert(c.key.clone(), (c.value, c.tie));
            }
            if chosen.as_ref().is_none_or(|b| better((c.value, c.tie), (b.value, b.tie), eps)) {
                chosen = Some(c);
            }
        }
        let u: f64 = accept_rng.random();
        let mut record = TraceRecord {
            iteration: gen + 1,
            kind: None,
            candidate_value: f64::NAN,
            accepted: false,
            current_value: current.1,
            best_value: best.1,
            length: total_length(&current.0),
            temperature,
        };
        if let Some(c) = chosen {
            let delta = c.value - current.1;
            let accept = if delta.abs() <= eps {
                c.tie <= current_tie || (temperature > 0.0 && u < (-(c.tie - current_tie) / (temperature * scale)).exp())
            } else {
                delta < 0.0 || (temperature > 0.0 && u < (-delta / (temperature * scale)).exp())
            };
            record.kind = Some(c.kind);
            record.candidate_value = c.value;
            if accept {
                let scored = match c.scored {
                    Some(gr) => Ok(gr),
                    None => score(&c.net, domain, config).map(|(_, g, r)| (g, r)),
                };
                if let Ok((g, r)) = scored {
                    hint = hints(&c.net, &g, &r, config);
                    current = (c.net, c.value);
                    current_tie = c.tie;
                    if current.1 < best.1 - eps {
                        best = current.clone();
                        last_best = gen;
                    }
                    record.accepted = true;
                    record.current_value = current.1;
                    record.best_value = best.1;
                    record.length = total_length(&current.0);
                }
            }
        }
        trace.push(record);
        temperature *= config.schedule.cooling;
        // The last quarter polishes the best state instead of restarting.
        let polish = config.schedule.iterations - config.schedule.iterations / 4;
        if gen + 1 == polish && best.1 < current.1 {
            let (_, g, r) = score(&best.0, domain, config)?;
            hint = hints(&best.0, &g, &r, config);
            current_tie = tie_break(&config.functional, &g, &r);
            current = best.clone();
        }
        let stall = config.schedule.restart_after;
        if stall > 0 && gen + 1 < polish && gen - last_best >= stall {
            temperature = config.schedule.initial_temperature;
            current = (initial.clone(), v0);
            current_tie = tie0;
            hint = hint0.clone();
            last_best = gen;
        }
    }

    let r0 = {
        let (_, g, r) = score(&best.0, domain, config)?;
        hints(&best.0, &g, &r, config).r0
    };
    let audit = audit_minimizer(&best.0, config.grid_h, Some(r0));
    Ok(OptResult {
        best: best.0,
        best_value: best.1,
        initial,
        initial_value: v0,
        evaluations,
        cache_hits,
        rejected_candidates: rejected,
        r0,
        audit,
        trace,
    })
}

/// Density profiles of a minimizer at all vertices for radii in
/// `[8h, min(diam/2, r0)]` with `c₁ = 1`, `c₂ = 2π`, slack `3h/r`.
pub fn minimizer_profiles(net: &CurveNetwork<f64>, h: f64, r0: Option<f64>) -> (Vec<DensityProfile>, AhlforsOptions) {
    let half = net.diameter() / 2.0;
    let hi = r0.map_or(half, |r| r.min(half));
    let opts = AhlforsOptions { h, r0: Some(hi), ..AhlforsOptions::default() };
    let radii = if hi >= 8.0 * h { geometric_radii(hi, 8.0 * h, 12) } else { Vec::new() };
    (ahlfors_profile(net, None, &radii, &opts), opts)
}

/// Summary of [`minimizer_profiles`].
pub fn audit_minimizer(net: &CurveNetwork<f64>, h: f64, r0: Option<f64>) -> AhlforsSummary {
    let (profiles, opts) = minimizer_profiles(net, h, r0);
    summarize(&profiles, &opts)
}
