//! Regularity and convergence diagnostics: Ahlfors density profiles, the
//! lower semicontinuity of length along Hausdorff-converging continua, the
//! monotone-union convergence of complements, and the fixture library.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    contains_network, directed_hausdorff, hausdorff_distance, length_in_ball, total_length, Ball,
    CurveNetwork, DomainSpec, GeometryError, Point2, DEFAULT_TOLERANCE,
};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuditError {
    #[error("Hausdorff distances to the limit increase at index {index}")]
    NotConverging { index: usize },
    #[error("sequence is not nested at index {index}")]
    NotNested { index: usize },
    #[error("empty sequence")]
    EmptySequence,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Density constants and the discretization scale behind the slack `3h/r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AhlforsOptions {
    pub c1: f64,
    pub c2: f64,
    /// Resolution of the computation that produced the network; `0` for
    /// exact fixtures.
    pub h: f64,
    /// Cap on the radii; defaults to `diam(Σ)/2`.
    pub r0: Option<f64>,
}

impl Default for AhlforsOptions {
    fn default() -> Self {
        Self { c1: 1.0, c2: std::f64::consts::TAU, h: 0.0, r0: None }
    }
}

impl AhlforsOptions {
    pub fn slack(&self, r: f64) -> f64 {
        3.0 * self.h / r
    }
}

/// `H¹(Σ ∩ B_r(x)) / r` at one base point for descending radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub point_id: usize,
    pub base_point: Point2<f64>,
    pub radii: Vec<f64>,
    pub densities: Vec<f64>,
    pub flags: Vec<bool>,
}

impl DensityProfile {
    pub fn pass(&self) -> bool {
        self.flags.iter().all(|&f| f)
    }
}

/// Radii kept by a profile: finite, positive, at most `r0`, strictly
/// descending.
fn clean_radii(radii: &[f64], r0: f64) -> Vec<f64> {
    let mut out: Vec<f64> = radii
        .iter()
        .copied()
        .filter(|&r| r.is_finite() && r > 0.0 && r <= r0 * (1.0 + 1e-12))
        .collect();
    out.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    out.dedup();
    out
}

/// Density profiles at `points` (all vertices when `None`). Radii above
/// `r0` are dropped. A radius passes when `c1 − 3h/r ≤ density ≤ c2 + 3h/r`.
pub fn ahlfors_profile<T: Real>(
    net: &CurveNetwork<T>,
    points: Option<&[Point2<T>]>,
    radii: &[f64],
    opts: &AhlforsOptions,
) -> Vec<DensityProfile> {
    let r0 = opts.r0.unwrap_or_else(|| net.diameter().to_f64_lossy() / 2.0);
    let radii = clean_radii(radii, r0);
    let pts: Vec<Point2<T>> = points.map_or_else(|| net.vertices().to_vec(), <[_]>::to_vec);
    pts.par_iter()
        .enumerate()
        .map(|(id, &x)| {
            let densities: Vec<f64> = radii
                .iter()
                .map(|&r| {
                    let ball = Ball { center: x, radius: T::lit(r) };
                    length_in_ball(net, &ball).to_f64_lossy() / r
                })
                .collect();
            let flags = radii
                .iter()
                .zip(&densities)
                .map(|(&r, &d)| {
                    // Rounding in the clipped lengths; a tip sees exactly c1 = 1.
                    let s = opts.slack(r) + 1e-12 * opts.c2;
                    d >= opts.c1 - s && d <= opts.c2 + s
                })
                .collect();
            DensityProfile {
                point_id: id,
                base_point: Point2::new(x.x.to_f64_lossy(), x.y.to_f64_lossy()),
                radii: radii.clone(),
                densities,
                flags,
            }
        })
        .collect()
}

/// `count` radii in geometric progression from `hi` down to `lo`.
pub fn geometric_radii(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let q = (lo / hi).powf(1.0 / (count - 1) as f64);
            (0..count).map(|i| hi * q.powi(i as i32)).collect()
        }
    }
}

/// Worst constants observed over a set of profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AhlforsSummary {
    pub points: usize,
    pub radii: usize,
    /// Smallest density seen (estimate of the best `c₁`).
    pub c1_hat: f64,
    /// Largest density seen (estimate of the best `c₂`).
    pub c2_hat: f64,
    pub c1: f64,
    pub c2: f64,
    pub h: f64,
    pub slack_formula: String,
    pub failures: usize,
    pub pass: bool,
}

pub fn summarize(profiles: &[DensityProfile], opts: &AhlforsOptions) -> AhlforsSummary {
    let mut c1_hat = f64::INFINITY;
    let mut c2_hat = 0.0f64;
    let mut failures = 0;
    for p in profiles {
        for (&d, &ok) in p.densities.iter().zip(&p.flags) {
            c1_hat = c1_hat.min(d);
            c2_hat = c2_hat.max(d);
            failures += usize::from(!ok);
        }
    }
    AhlforsSummary {
        points: profiles.len(),
        radii: profiles.first().map_or(0, |p| p.radii.len()),
        c1_hat,
        c2_hat,
        c1: opts.c1,
        c2: opts.c2,
        h: opts.h,
        slack_formula: "3h/r".into(),
        failures,
        pass: failures == 0,
    }
}

/// Writes `point_id,r,density,pass` rows.
pub fn write_profiles_csv<W: Write>(profiles: &[DensityProfile], mut w: W) -> io::Result<()> {
    writeln!(w, "point_id,r,density,pass")?;
    for p in profiles {
        for ((r, d), ok) in p.radii.iter().zip(&p.densities).zip(&p.flags) {
            writeln!(w, "{},{r},{d},{ok}", p.point_id)?;
        }
    }
    Ok(())
}

/// Length lower semicontinuity along a Hausdorff-converging sequence of
/// continua.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GolabReport {
    pub lengths: Vec<f64>,
    pub distances: Vec<f64>,
    pub limit_length: f64,
    /// Smallest length over the second half of the sequence.
    pub tail_min_length: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks `H¹(limit) ≤ min over the tail of H¹(Σ_n) + tol` after verifying
/// that `d_H(Σ_n, limit)` does not increase.
pub fn golab_check<T: Real>(
    sequence: &[CurveNetwork<T>],
    limit: &CurveNetwork<T>,
    tol: f64,
) -> Result<GolabReport, AuditError> {
    if sequence.is_empty() {
        return Err(AuditError::EmptySequence);
    }
    let distances: Vec<f64> = sequence
        .par_iter()
        .map(|s| hausdorff_distance(s, limit).map(|d| d.to_f64_lossy()))
        .collect::<Result<_, _>>()?;
    let eps = limit.tolerance().to_f64_lossy();
    if let Some(i) = distances.windows(2).position(|w| w[1] > w[0] + eps) {
        return Err(AuditError::NotConverging { index: i + 1 });
    }
    let lengths: Vec<f64> = sequence.iter().map(|s| total_length(s).to_f64_lossy()).collect();
    let tail = &lengths[lengths.len() / 2..];
    let tail_min_length = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let limit_length = total_length(limit).to_f64_lossy();
    Ok(GolabReport {
        pass: tail_min_length >= limit_length - tol,
        lengths,
        distances,
        limit_length,
        tail_min_length,
        tolerance: tol,
    })
}

/// Why connectedness matters: `n` equally spaced points of `[0,1]` converge
/// to the unit segment while carrying no length. Such point sets are not
/// valid networks; the control records both facts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativeControl {
    pub points: usize,
    pub hausdorff_to_segment: f64,
    pub lengths: f64,
    pub limit_length: f64,
    /// `H¹(limit) > liminf H¹(Σ_n)`: semicontinuity fails.
    pub semicontinuity_fails: bool,
    /// The point set was refused as a network (it is not connected).
    pub rejected_as_network: bool,
}

pub fn isolated_points_control(n: usize) -> NegativeControl {
    let n = n.max(2);
    let pts: Vec<Point2<f64>> = (1..=n).map(|j| Point2::new(j as f64 / n as f64, 0.0)).collect();
    let (lengths, limit_length) = (0.0, 1.0);
    let rejected = matches!(CurveNetwork::new(pts, Vec::new(), DEFAULT_TOLERANCE), Err(GeometryError::Disconnected));
    // Every point of the segment is within 1/(2n) of a sample except near
    // the origin, where the gap is 1/n.
    NegativeControl {
        points: n,
        hausdorff_to_segment: 1.0 / n as f64,
        lengths,
        limit_length,
        semicontinuity_fails: limit_length > lengths,
        rejected_as_network: rejected,
    }
}

/// Increasing open sets `Aₙ = Ω∖Σₙ` for a decreasing nested sequence of
/// continua; their complements must converge to that of the union.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneUnionReport {
    /// `d_H(∂Ω ∪ Σₙ, ∂Ω ∪ Σ)`.
    pub distances: Vec<f64>,
    pub nested: bool,
    pub nonincreasing: bool,
    pub final_distance: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `sequence` must decrease (`Σₙ ⊇ Σₙ₊₁ ⊇ limit`); the check asserts that the
/// complements `Ω̄∖Aₙ` converge monotonically in Hausdorff distance to
/// `Ω̄∖⋃Aₙ`, down to `tol` at the last element.
pub fn monotone_union_check<T: Real>(
    domain: &DomainSpec<T>,
    sequence: &[CurveNetwork<T>],
    limit: &CurveNetwork<T>,
    tol: f64,
) -> Result<MonotoneUnionReport, AuditError> {
    if sequence.is_empty() {
        return Err(AuditError::EmptySequence);
    }
    let eps = limit.tolerance();
    for (i, s) in sequence.iter().enumerate() {
        let next = sequence.get(i + 1).unwrap_or(limit);
        if !contains_network(s, next, eps)? {
            return Err(AuditError::NotNested { index: i });
        }
    }
    let target = with_boundary(domain, limit);
    let distances: Vec<f64> = sequence
        .par_iter()
        .map(|s| {
            // limit ⊆ Σₙ, so only the excess of Σₙ counts.
            directed_hausdorff(s, &target, eps).map(|d| d.to_f64_lossy())
        })
        .collect::<Result<_, _>>()?;
    let nonincreasing = distances.windows(2).all(|w| w[1] <= w[0] + eps.to_f64_lossy());
    let final_distance = *distances.last().unwrap();
    Ok(MonotoneUnionReport {
        pass: nonincreasing && final_distance <= tol,
        nested: true,
        nonincreasing,
        final_distance,
        tolerance: tol,
        distances,
    })
}

/// `Σ ∪ ∂Ω` as one segment set (not connected in general).
fn with_boundary<T: Real>(domain: &DomainSpec<T>, net: &CurveNetwork<T>) -> CurveNetwork<T> {
    let mut verts = net.vertices().to_vec();
    let mut edges = net.edges().to_vec();
    let start = verts.len();
    let b = domain.boundary();
    verts.extend_from_slice(b);
    for i in 0..b.len() {
        edges.push([start + i, start + (i + 1) % b.len()]);
    }
    CurveNetwork::from_parts_unchecked(verts, edges, net.tolerance())
}

/// Three unit radii at 45°, 135° and 270°: Ahlfors regular.
pub fn regular_star() -> CurveNetwork<f64> {
    let deg = std::f64::consts::PI / 180.0;
    let tips: Vec<Point2<f64>> = [45.0, 135.0, 270.0].iter().map(|&a| Point2::polar(1.0, a * deg)).collect();
    CurveNetwork::star(Point2::origin(), &tips).expect("fixed fixture")
}

/// Radii of length `2^{−j}` at angle `π/(j+1)` for `j = 0..=depth`: length
/// `2 − 2^{−depth}`, density `(2+n)` at `r = 2^{−n}` in the limit.
pub fn dyadic_star(depth: usize) -> CurveNetwork<f64> {
    let tips: Vec<Point2<f64>> = (0..=depth)
        .map(|j| Point2::polar(0.5f64.powi(j as i32), std::f64::consts::PI / (j + 1) as f64))
        .collect();
    CurveNetwork::star(Point2::origin(), &tips).expect("fixed fixture")
}

/// Polyline over `[0,1]` with `n` teeth of height `1/n`.
pub fn sawtooth(n: usize) -> CurveNetwork<f64> {
    let n = n.max(1);
    let mut pts = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        let x = i as f64 / n as f64;
        pts.push(Point2::new(x, 0.0));
        pts.push(Point2::new(x + 0.5 / n as f64, 1.0 / n as f64));
    }
    pts.push(Point2::new(1.0, 0.0));
    CurveNetwork::polyline(pts).expect("fixed fixture")
}

/// A named network.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub network: CurveNetwork<f64>,
}

/// The regular star, the dyadic star at `depth`, and a sawtooth.
pub fn builtin_fixtures(depth: usize) -> Vec<Fixture> {
    vec![
        Fixture { name: "regular_star".into(), network: regular_star() },
        Fixture { name: format!("dyadic_star_depth_{depth}"), network: dyadic_star(depth) },
        Fixture { name: "sawtooth_8".into(), network: sawtooth(8) },
    ]
}

/// A Hausdorff-converging sequence with its limit.
#[derive(Clone, Debug)]
pub struct ConvergingFixture {
    pub name: String,
    pub sequence: Vec<CurveNetwork<f64>>,
    pub limit: CurveNetwork<f64>,
    /// Domain for the monotone-union reading, when the sequence is nested.
    pub nested_in: Option<DomainSpec<f64>>,
}

/// Sequences used by the convergence audits: sawtooth teeth flattening onto
/// a segment, a constant sequence, truncations of the dyadic star,
/// and segments shrinking to `[0,1]` inside the unit square.
pub fn converging_fixtures() -> Vec<ConvergingFixture> {
    let unit = || CurveNetwork::segment(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)).expect("fixed fixture");
    let square = DomainSpec::rectangle(Point2::new(-0.5, -0.5), Point2::new(2.5, 0.5)).expect("fixed fixture");
    let shrinking: Vec<CurveNetwork<f64>> = (1..=10)
        .map(|n| {
            CurveNetwork::segment(Point2::new(0.0, 0.0), Point2::new(1.0 + 0.5f64.powi(n), 0.0))
                .expect("fixed fixture")
        })
        .collect();
    let comb = |n: usize| {
        // Unit segment with a vertical tooth of height 2^{-n} at x = 1/2.
        CurveNetwork::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(0.5, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.5, 0.5f64.powi(n as i32)),
            ],
            vec![[0, 1], [1, 2], [1, 3]],
            DEFAULT_TOLERANCE,
        )
        .expect("fixed fixture")
    };
    vec![
        ConvergingFixture {
            name: "sawtooth".into(),
            sequence: [1, 2, 4, 8, 16, 32, 64].iter().map(|&n| sawtooth(n)).collect(),
            limit: unit(),
            nested_in: None,
        },
        ConvergingFixture {
            name: "constant".into(),
            sequence: vec![regular_star(); 4],
            limit: regular_star(),
            nested_in: None,
        },
        ConvergingFixture {
            name: "dyadic_star_truncations".into(),
            sequence: (20..=30).map(dyadic_star).collect(),
            limit: dyadic_star(60),
            nested_in: None,
        },
        ConvergingFixture {
            name: "shrinking_segments".into(),
            sequence: shrinking,
            limit: unit(),
            nested_in: Some(square.clone()),
        },
        ConvergingFixture {
            name: "vanishing_tooth".into(),
            sequence: (1..=12).map(comb).collect(),
            limit: unit(),
            nested_in: Some(square),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_densities() {
        let s = CurveNetwork::segment(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)).unwrap();
        let pts = [Point2::new(0.5, 0.0), Point2::new(0.0, 0.0)];
        let prof = ahlfors_profile(&s, Some(&pts), &[0.4, 0.2, 0.1], &AhlforsOptions::default());
        assert!(prof[0].densities.iter().all(|&d| (d - 2.0).abs() < 1e-12));
        assert!(prof[1].densities.iter().all(|&d| (d - 1.0).abs() < 1e-12));
        assert!(prof.iter().all(DensityProfile::pass));
    }

    #[test]
    fn radii_above_r0_dropped() {
        let s = CurveNetwork::segment(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)).unwrap();
        let prof = ahlfors_profile(&s, None, &[0.9, 0.5, 0.3, 0.3], &AhlforsOptions::default());
        assert_eq!(prof[0].radii, vec![0.5, 0.3]);
    }

    #[test]
    fn dyadic_star_length() {
        for k in [0usize, 3, 10] {
            let l = total_length(&dyadic_star(k));
            assert!((l - (2.0 - 0.5f64.powi(k as i32))).abs() < 1e-14);
        }
    }

    #[test]
    fn golab_not_converging() {
        let seq = vec![sawtooth(8), sawtooth(2)];
        let unit = CurveNetwork::segment(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)).unwrap();
        assert!(matches!(golab_check(&seq, &unit, 1e-9), Err(AuditError::NotConverging { index: 1 })));
    }

    #[test]
    fn control_rejected() {
        let c = isolated_points_control(10);
        assert!(c.rejected_as_network && c.semicontinuity_fails);
    }
}
