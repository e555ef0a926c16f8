//! Set functionals over open regions and executable checks of their
//! structural properties: monotonicity, (σ-)maxitivity, local maxitivity
//! against small balls, positivity on balls with the scaling rates.
//!
//! Maxitive functionals are evaluated component by component and combined by
//! max; the checks evaluate unions directly and compare.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bessel::{disk_zero, J01};
use crate::geometry::{Ball, DomainSpec, GeometryError, Point2, Primitive, Segment};
use crate::grid::{inradius, rasterize_primitives, GridError, OpenRegion, DEFAULT_MAX_NODES};
use crate::pde::{self, check_exponents, solve_torsion, Coefficients, PdeError, PdeOptions};
use crate::scalar::{fmax, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error(transparent)]
    Pde(#[from] PdeError),
    #[error(transparent)]
    Grid(GridError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("regions are not nested")]
    NotNested,
    #[error("regions overlap or touch")]
    Overlap,
    #[error("spectral composite is not decreasing in variable {j}")]
    NotDecreasing { j: usize },
    #[error("{0} is not maxitive")]
    NotMaxitive(String),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

impl From<GridError> for FunctionalError {
    fn from(e: GridError) -> Self {
        match e {
            GridError::Overlap => FunctionalError::Overlap,
            other => FunctionalError::Grid(other),
        }
    }
}

/// Outer function of a spectral composite `f(λ₁, …, λ_k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Composite {
    /// `1/λ_k`; minimizing it maximizes `λ_k`.
    ReciprocalKth,
    /// `Σ 1/λ_j`.
    SumReciprocals,
}

impl Composite {
    pub fn apply<T: Real>(self, lambda: &[T]) -> T {
        match self {
            Composite::ReciprocalKth => lambda.last().map_or(T::zero(), |&l| T::one() / l),
            Composite::SumReciprocals => lambda.iter().map(|&l| T::one() / l).sum(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetFunctional {
    Inradius,
    TorsionMax,
    TorsionalRigidity,
    Eigenvalue { k: usize },
    SpectralComposite { k: usize, f: Composite },
    PoincareSobolev { p: f64, q: f64 },
}

impl SetFunctional {
    pub fn name(&self) -> String {
        match self {
            SetFunctional::Inradius => "inradius".into(),
            SetFunctional::TorsionMax => "torsion_max".into(),
            SetFunctional::TorsionalRigidity => "torsional_rigidity".into(),
            SetFunctional::Eigenvalue { k } => format!("eigenvalue_{k}"),
            SetFunctional::SpectralComposite { k, f } => format!("{f:?}_{k}").to_lowercase(),
            SetFunctional::PoincareSobolev { p, q } => format!("poincare_sobolev_{p}_{q}"),
        }
    }

    pub fn is_maxitive(&self) -> bool {
        matches!(
            self,
            SetFunctional::Inradius | SetFunctional::TorsionMax | SetFunctional::PoincareSobolev { .. }
        )
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self, SetFunctional::Eigenvalue { .. } | SetFunctional::SpectralComposite { .. })
    }

    /// Number of eigenvalues involved (0 for non-spectral functionals).
    pub fn spectral_order(&self) -> usize {
        match *self {
            SetFunctional::Eigenvalue { k } | SetFunctional::SpectralComposite { k, .. } => k,
            _ => 0,
        }
    }

    /// `F(∅)`: the eigenvalues of the empty set are `+∞`.
    pub fn empty_value<T: Real>(&self) -> T {
        match *self {
            SetFunctional::Eigenvalue { .. } => T::infinity(),
            SetFunctional::SpectralComposite { k, f } => f.apply(&vec![T::infinity(); k]),
            _ => T::zero(),
        }
    }

    /// Direct functionals grow with the set; `λ_k` shrinks.
    fn is_direct(&self) -> bool {
        !matches!(self, SetFunctional::Eigenvalue { .. })
    }

    pub fn validate(&self) -> Result<(), FunctionalError> {
        match *self {
            SetFunctional::Eigenvalue { k } | SetFunctional::SpectralComposite { k, .. } if k == 0 => {
                Err(FunctionalError::BadParameter("k must be at least 1".into()))
            }
            SetFunctional::PoincareSobolev { p, q } => Ok(check_exponents(p, q)?),
            _ => Ok(()),
        }
    }

    /// Tolerance for comparing two evaluations of this functional whose
    /// typical size is `scale`.
    pub fn tolerance(&self, scale: f64, h: f64, opts: &PdeOptions) -> f64 {
        let s = if scale.is_finite() { scale.abs().max(1.0) } else { 1.0 };
        match self {
            SetFunctional::Inradius => 0.5 * h,
            SetFunctional::TorsionMax | SetFunctional::TorsionalRigidity => 10.0 * opts.pde_tol * s,
            SetFunctional::Eigenvalue { .. } | SetFunctional::SpectralComposite { .. } => {
                10.0 * opts.eig_tol * s
            }
            SetFunctional::PoincareSobolev { .. } => 10.0 * opts.ps_tol * s,
        }
    }
}

/// `λ₁ ≤ … ≤ λ_k` of the region, padded with `+∞` when the region carries
/// fewer than `k` discrete modes.
pub fn padded_spectrum<T: Real>(
    region: &OpenRegion<T>,
    coeff: &Coefficients<T>,
    k: usize,
    opts: &PdeOptions,
) -> Result<Vec<T>, FunctionalError> {
    let avail = region.node_count().min(k);
    let mut values = if avail == 0 {
        Vec::new()
    } else {
        pde::eigenvalues(region, coeff, avail, opts)?.values
    };
    values.resize(k, T::infinity());
    Ok(values)
}

/// Checks that `f` does not increase when any finite `λ_j` grows and strictly
/// decreases for at least one of them.
pub fn probe_decreasing<T: Real>(f: Composite, lambda: &[T]) -> Result<(), FunctionalError> {
    let f0 = f.apply(lambda);
    let mut strict = false;
    let mut probed = false;
    for j in 0..lambda.len() {
        if !lambda[j].is_finite() {
            continue;
        }
        probed = true;
        let mut moved = lambda.to_vec();
        moved[j] += T::lit(1e-4) * fmax(lambda[j].abs(), T::one());
        let fj = f.apply(&moved);
        if fj > f0 {
            return Err(FunctionalError::NotDecreasing { j: j + 1 });
        }
        strict |= fj < f0;
    }
    // With some λ_j = +∞ the outer function may already sit at its infimum.
    let all_finite = lambda.iter().all(|l| l.is_finite());
    if probed && all_finite && !strict {
        return Err(FunctionalError::NotDecreasing { j: lambda.len() });
    }
    Ok(())
}

/// `F(region)`; `coeff` is used by the spectral functionals only.
pub fn evaluate<T: Real>(
    f: &SetFunctional,
    region: &OpenRegion<T>,
    coeff: &Coefficients<T>,
    opts: &PdeOptions,
) -> Result<T, FunctionalError> {
    f.validate()?;
    if region.is_empty() {
        return Ok(f.empty_value());
    }
    match *f {
        SetFunctional::Inradius => Ok(inradius(region)),
        SetFunctional::TorsionMax | SetFunctional::TorsionalRigidity => {
            let parts: Vec<Result<T, PdeError>> = (0..region.components().len())
                .into_par_iter()
                .map(|c| {
                    let s = solve_torsion(&region.component(c), opts)?;
                    Ok(if *f == SetFunctional::TorsionMax { s.max_value } else { s.l1_value })
                })
                .collect();
            let mut acc = T::zero();
            for v in parts {
                let v = v?;
                acc = if *f == SetFunctional::TorsionMax { fmax(acc, v) } else { acc + v };
            }
            Ok(acc)
        }
        SetFunctional::Eigenvalue { k } => Ok(padded_spectrum(region, coeff, k, opts)?[k - 1]),
        SetFunctional::SpectralComposite { k, f: g } => {
            let lam = padded_spectrum(region, coeff, k, opts)?;
            probe_decreasing(g, &lam)?;
            Ok(g.apply(&lam))
        }
        SetFunctional::PoincareSobolev { p, q } => Ok(pde::poincare_sobolev(region, p, q, opts)?),
    }
}

/// Evaluation of a union of node-disjoint regions in one piece: a single
/// torsion system over all free nodes, the spectrum of the union, the
/// inradius of all components.
fn evaluate_whole<T: Real>(
    f: &SetFunctional,
    region: &OpenRegion<T>,
    coeff: &Coefficients<T>,
    opts: &PdeOptions,
) -> Result<T, FunctionalError> {
    match f {
        SetFunctional::TorsionMax => Ok(solve_torsion(region, opts)?.max_value),
        SetFunctional::TorsionalRigidity => Ok(solve_torsion(region, opts)?.l1_value),
        _ => evaluate(f, region, coeff, opts),
    }
}

/// One property check, serialized as
/// `{check, functional, fixture, pass, gap, tolerance, details}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub check: String,
    pub functional: String,
    pub fixture: String,
    pub pass: bool,
    /// The checked quantity; its meaning depends on `check`.
    pub gap: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl PropertyReport {
    fn new(check: &str, f: &SetFunctional, fixture: &str, pass: bool, gap: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            functional: f.name(),
            fixture: fixture.into(),
            pass,
            gap,
            tolerance,
            details: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, v: f64) -> Self {
        self.details.insert(key.into(), v);
        self
    }
}

/// `F(small) ≤ F(big)` (for `λ_k`: `λ_j(small) ≥ λ_j(big)` for every
/// `j ≤ k`). `gap` is the margin, negative on violation.
pub fn check_monotonicity<T: Real>(
    f: &SetFunctional,
    small: &OpenRegion<T>,
    big: &OpenRegion<T>,
    coeff: &Coefficients<T>,
    opts: &PdeOptions,
    fixture: &str,
) -> Result<PropertyReport, FunctionalError> {
    if !small.is_subset_of(big) {
        return Err(FunctionalError::NotNested);
    }
    let h = big.grid().spacing().to_f64_lossy();
    let (margin, scale) = if f.is_direct() {
        let a = evaluate(f, small, coeff, opts)?.to_f64_lossy();
        let b = evaluate(f, big, coeff, opts)?.to_f64_lossy();
        (ext_diff(b, a), b)
    } else {
        let k = f.spectral_order();
        let a = padded_spectrum(small, coeff, k, opts)?;
        let b = padded_spectrum(big, coeff, k, opts)?;
        let margin = a
            .iter()
            .zip(&b)
            .map(|(x, y)| ext_diff(x.to_f64_lossy(), y.to_f64_lossy()))
            .fold(f64::INFINITY, f64::min);
        (margin, b[k - 1].to_f64_lossy())
    };
    let tol = f.tolerance(scale, h, opts);
    Ok(PropertyReport::new("monotonicity", f, fixture, margin >= -tol, margin, tol))
}

/// `x − y` on extended reals, with `∞ − ∞ = 0`.
fn ext_diff(x: f64, y: f64) -> f64 {
    if x == y {
        0.0
    } else {
        x - y
    }
}

/// Combination of part values that a maxitive (or, for spectra,
/// ordered-merge) functional must reproduce on the union.
fn combine_parts<T: Real>(
    f: &SetFunctional,
    parts: &[&OpenRegion<T>],
    coeff: &Coefficients<T>,
    opts: &PdeOptions,
) -> Result<(T, Vec<T>), FunctionalError> {
    if f.is_spectral() {
        let k = f.spectral_order();
        let mut merged: Vec<T> = Vec::new();
        let mut each = Vec::new();
        for r in parts {
            let s = padded_spectrum(r, coeff, k, opts)?;
            each.push(apply_spectral(f, &s)?);
            merged.extend(s);
        }
        merged.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        merged.truncate(k);
        Ok((apply_spectral(f, &merged)?, each))
    } else {
        let each: Vec<T> = parts
            .iter()
            .map(|r| evaluate(f, r, coeff, opts))
            .collect::<Result<_, _>>()?;
        Ok((each.iter().copied().fold(T::zero(), fmax), each))
    }
}

fn apply_spectral<T: Real>(f: &SetFunctional, lam: &[T]) -> Result<T, FunctionalError> {
    match *f {
        SetFunctional::Eigenvalue { k } => Ok(lam[k - 1]),
        SetFunctional::SpectralComposite { f: g, .. } => {
            probe_decreasing(g, lam)?;
            Ok(g.apply(lam))
        }
        _ => unreachable!("spectral functionals only"),
    }
}

/// `F(A ∪ B) = max{F(A), F(B)}` on node-disjoint regions (ordered merge for
/// spectra). The union is evaluated in one piece. `gap = F(A∪B) − max`.
///
/// For the torsional rigidity the report fails, and `details` carries
/// `additive_defect = |gap − min{T(A), T(B)}|`.
pub fn check_maxitivity<T: Real>(
    f: &SetFunctional,
    a: &OpenRegion<T>,
    b: &OpenRegion<T>,
    coeff: &Coefficients<T>,
    opts: &PdeOptions,
    fixture: &str,
) -> Result<PropertyReport, FunctionalError> {
    let union = a.disjoint_union(b)?;
    let whole = evaluate_whole(f, &union, coeff, opts)?.to_f64_lossy();
    let (combined, each) = combine_parts(f, &[a, b], coeff, opts)?;
    let combined = combined.to_f64_lossy();
    let gap = ext_diff(whole, combined);
    let tol = maxitivity_tolerance(f, whole, opts);
    let mut rep = PropertyReport::new("maxitivity", f, fixture, gap.abs() <= tol, gap, tol)
        .with("union", whole)
        .with("part_a", each[0].to_f64_lossy())
        .with("part_b", each[1].to_f64_lossy());
    if *f == SetFunctional::TorsionalRigidity {
        let min_part = each[0].min(each[1]).to_f64_lossy();
        rep = rep.with("additive_defect", (gap - min_part).abs());
    }
    Ok(rep)
}

/// Components are evaluated by the same code path on both sides for the
/// inradius and the Poincaré–Sobolev constant, so their gap is exactly zero;
/// torsion compares one global solve against per-component ones.
fn maxitivity_tolerance(f: &SetFunctional, whole: f64, opts: &PdeOptions) -> f64 {
    match f {
        SetFunctional::Inradius | SetFunctional::PoincareSobolev { .. } => 0.0,
        SetFunctional::TorsionMax | SetFunctional::TorsionalRigidity => 10.0 * opts.pde_tol,
        _ => 10.0 * opts.eig_tol * if whole.is_finite() { whole.abs().max(1.0) } else { 1.0 },
    }
}

/// `F(⋃ Aₙ) = maxₙ F(Aₙ)` on a finite family of pairwise node-disjoint
/// regions. `details` lists the prefix maxima (`prefix_i`) and the first index
/// at which the maximum is attained.
pub fn check_sigma_maxitivity<T: Real>(
    f: &SetFunctional,
    regions: &[OpenRegion<T>],
    coeff: &Coefficients<T>,
    opts: &PdeOptions,
    fixture: &str,
) -> Result<PropertyReport, FunctionalError> {
    let Some(first) = regions.first() else {
        return Err(FunctionalError::BadParameter("empty family".into()));
    };
    if f.is_spectral() {
        return Err(FunctionalError::NotMaxitive(f.name()));
    }
    let mut union = first.clone();
    for r in &regions[1..] {
        union = union.disjoint_union(r)?;
    }
    let whole = evaluate_whole(f, &union, coeff, opts)?.to_f64_lossy();
    let each: Vec<f64> = regions
        .iter()
        .map(|r| evaluate(f, r, coeff, opts).map(|v| v.to_f64_lossy()))
        .collect::<Result<_, _>>()?;
    let mut prefix = Vec::with_capacity(each.len());
    let mut run = f64::NEG_INFINITY;
    for &v in &each {
        run = run.max(v);
        prefix.push(run);
    }
    let max = *prefix.last().unwrap();
    let attained = each.iter().position(|&v| v == max).unwrap_or(0);
    let gap = ext_diff(whole, max);
    let tol = maxitivity_tolerance(f, whole, opts);
    let monotone = prefix.windows(2).all(|w| w[1] >= w[0]);
    let mut rep = PropertyReport::new("sigma_maxitivity", f, fixture, monotone && gap.abs() <= tol, gap, tol)
        .with("union", whole)
        .with("attained_at", attained as f64);
    for (i, v) in prefix.iter().enumerate() {
        rep = rep.with(&format!("prefix_{i:03}"), *v);
    }
    Ok(rep)
}

/// Grids for `A_r(x) = A ∖ B̄_r(x)` and `A_r(x) ∪ B_r(x)`: the obstacle set
/// loses its part inside `B̄_r(x)` and gains the circle `∂B_r(x)`.
fn ball_split<T: Real>(
    region: &OpenRegion<T>,
    x: Point2<T>,
    r: T,
) -> Result<(OpenRegion<T>, OpenRegion<T>), FunctionalError> {
    let grid = region.grid();
    let ball = Ball::new(x, r)?;
    let mut obstacles = Vec::new();
    for prim in grid.obstacles() {
        match *prim {
            Primitive::Segment(s) => match s.disk_interval(x, r) {
                None => obstacles.push(*prim),
                Some((t0, t1)) => {
                    if t0 > T::zero() {
                        obstacles.push(Primitive::Segment(Segment { a: s.a, b: s.point_at(t0) }));
                    }
                    if t1 < T::one() {
                        obstacles.push(Primitive::Segment(Segment { a: s.point_at(t1), b: s.b }));
                    }
                }
            },
            Primitive::Circle(_) => obstacles.push(*prim),
        }
    }
    obstacles.push(Primitive::Circle(ball));
    let cut = Arc::new(grid.with_obstacles(obstacles));
    let outside: Vec<bool> = (0..cut.len())
        .map(|k| region.contains_node(k) && cut.position(k).dist(x) > r)
        .collect();
    let with_ball: Vec<bool> = (0..cut.len())
        .map(|k| outside[k] || cut.position(k).dist(x) < r)
        .collect();
    Ok((OpenRegion::from_mask(cut.clone(), &outside), OpenRegion::from_mask(cut, &with_ball)))
}

/// Radius below which eigenvalue functionals are locally maxitive on `A`:
/// `c₁/c₂` with `c₁² = σ₁ j₀₁² / ρ₂` and
/// `c₂² = 2 (σ₂/ρ₁) j_k² / R² + V₂/ρ₁`, `R` the inradius of `A`.
/// Returns `(c₁, c₂, c₁/c₂)`.
pub fn certified_radius<T: Real>(
    region: &OpenRegion<T>,
    coeff: &Coefficients<T>,
    k: usize,
) -> Option<(f64, f64, f64)> {
    let b = coeff.bounds();
    let r = inradius(region).to_f64_lossy();
    let jk = disk_zero(k)?;
    if !(r > 0.0) {
        return None;
    }
    let c1 = (b.sigma.0 * J01 * J01 / b.rho.1).sqrt();
    let c2 = (2.0 * b.sigma.1 / b.rho.0 * jk * jk / (r * r) + b.v_max / b.rho.0).sqrt();
    Some((c1, c2, c1 / c2))
}

/// `F(A_r(x) ∪ B_r(x)) = F(A_r(x))`; `gap` is the difference.
///
/// For spectral functionals `details` holds `c1`, `c2`, `r_a = c₁/c₂`, the
/// ratio `λ_k^D(A_r(x)) / λ_k^D(A)` (which must stay `≤ 2` for the bound on
/// `λ_k(A_r(x))` to apply) and `certified = 1` when both conditions hold at
/// `r`. Certified reports must have `gap ≤ tolerance`; the others are
/// informative.
pub fn check_local_maxitivity<T: Real>(
    f: &SetFunctional,
    region: &OpenRegion<T>,
    x: Point2<T>,
    r: T,
    coeff: &Coefficients<T>,
    opts: &PdeOptions,
    fixture: &str,
) -> Result<PropertyReport, FunctionalError> {
    if !(r > T::zero()) {
        return Err(FunctionalError::BadParameter("radius must be positive".into()));
    }
    let (cut, joined) = ball_split(region, x, r)?;
    let a = evaluate(f, &cut, coeff, opts)?.to_f64_lossy();
    let b = evaluate(f, &joined, coeff, opts)?.to_f64_lossy();
    let gap = ext_diff(b, a);
    let h = region.grid().spacing().to_f64_lossy();
    let tol = match f {
        SetFunctional::Inradius | SetFunctional::PoincareSobolev { .. } => 0.0,
        _ => f.tolerance(a, h, opts),
    };
    let mut rep = PropertyReport::new("local_maxitivity", f, fixture, gap.abs() <= tol, gap, tol)
        .with("r", r.to_f64_lossy())
        .with("without_ball", a)
        .with("with_ball", b);
    if f.is_spectral() {
        let k = f.spectral_order();
        if let Some((c1, c2, ra)) = certified_radius(region, coeff, k) {
            let lap = Coefficients::laplacian();
            let before = padded_spectrum(region, &lap, k, opts)?[k - 1].to_f64_lossy();
            let after = padded_spectrum(&cut, &lap, k, opts)?[k - 1].to_f64_lossy();
            let ratio = after / before;
            let certified = r.to_f64_lossy() < ra && ratio <= 2.0;
            rep = rep
                .with("c1", c1)
                .with("c2", c2)
                .with("r_a", ra)
                .with("dirichlet_ratio", ratio)
                .with("certified", if certified { 1.0 } else { 0.0 });
        }
    }
    Ok(rep)
}

/// One rung of the ball ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallRung {
    pub r: f64,
    pub h: f64,
    pub value: f64,
    /// `F(B_r) / r^α`.
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallLadderReport {
    pub functional: String,
    /// Scaling exponent `α` in `F(B_r) ∝ r^α`.
    pub exponent: f64,
    pub rungs: Vec<BallRung>,
    pub positive: bool,
    /// Values decrease along the ladder toward `F(∅) = 0`.
    pub shrinking: bool,
    /// Largest relative deviation of `normalized` from its reference
    /// (`1` for R, `1/4` for M, the first rung for C_{p,q}).
    pub rate_deviation: f64,
    pub rate_tolerance: f64,
    pub pass: bool,
}

/// Scaling exponent of a maxitive functional on balls.
pub fn ball_exponent(f: &SetFunctional) -> Option<f64> {
    match *f {
        SetFunctional::Inradius => Some(1.0),
        SetFunctional::TorsionMax => Some(2.0),
        SetFunctional::PoincareSobolev { p, q } => Some(2.0 * p / q + p - 2.0),
        _ => None,
    }
}

/// Region of the disk `B_r(center)` (polygon with `sides` sides) at spacing `h`.
pub fn ball_region<T: Real>(center: Point2<T>, r: T, sides: usize, h: T) -> Result<OpenRegion<T>, FunctionalError> {
    let disk = DomainSpec::disk(center, r, sides)?;
    let grid = rasterize_primitives(&disk, Vec::new(), h, DEFAULT_MAX_NODES)?;
    Ok(OpenRegion::new(Arc::new(grid)))
}

/// Grid spacing along the ball ladder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderSpacing {
    /// `h = r / n`: similar grids on every rung.
    PerRadius(usize),
    /// One absolute spacing for all rungs.
    Fixed(f64),
}

/// Evaluates `F` on balls `B_r`, `r = r₀ 2^{−i}` for `i < levels`.
pub fn check_positive_on_balls_and_shrinking(
    f: &SetFunctional,
    r0: f64,
    levels: usize,
    spacing: LadderSpacing,
    opts: &PdeOptions,
) -> Result<BallLadderReport, FunctionalError> {
    let Some(alpha) = ball_exponent(f) else {
        return Err(FunctionalError::NotMaxitive(f.name()));
    };
    f.validate()?;
    let center = Point2::new(0.123_456_7, -0.076_543_2);
    let coeff = Coefficients::laplacian();
    let mut rungs = Vec::with_capacity(levels);
    for i in 0..levels {
        let r = r0 * 0.5f64.powi(i as i32);
        let h = match spacing {
            LadderSpacing::PerRadius(n) => r / n as f64,
            LadderSpacing::Fixed(h) => h,
        };
        let region = ball_region(center, r, 512, h)?;
        let value = evaluate(f, &region, &coeff, opts)?;
        rungs.push(BallRung { r, h, value, normalized: value / r.powf(alpha) });
    }
    let positive = rungs.iter().all(|g| g.value > 0.0);
    let shrinking = rungs.windows(2).all(|w| w[1].value < w[0].value);
    let (reference, rate_tolerance) = match f {
        SetFunctional::Inradius => (1.0, rungs.iter().map(|g| g.h / g.r).fold(0.0, f64::max)),
        SetFunctional::TorsionMax => (0.25, 0.02),
        _ => (rungs.first().map_or(1.0, |g| g.normalized), 0.03),
    };
    let rate_deviation = rungs
        .iter()
        .map(|g| (g.normalized / reference - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(BallLadderReport {
        functional: f.name(),
        exponent: alpha,
        pass: positive && shrinking && rate_deviation <= rate_tolerance,
        rungs,
        positive,
        shrinking,
        rate_deviation,
        rate_tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurveNetwork;
    use crate::grid::rasterize;

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    /// Two squares `[0.25,1.25]²` and `[2,4]×[0.25,2.25]` cut out of a
    /// rectangle by their outlines; returns (small, big, outer region).
    fn two_squares(h: f64) -> (OpenRegion<f64>, OpenRegion<f64>) {
        let dom = DomainSpec::rectangle(p(0.0, 0.0), p(4.5, 2.5)).unwrap();
        let sq = |x0: f64, y0: f64, s: f64| {
            let c = [p(x0, y0), p(x0 + s, y0), p(x0 + s, y0 + s), p(x0, y0 + s)];
            (0..4)
                .map(|i| Primitive::Segment(Segment::new(c[i], c[(i + 1) % 4]).unwrap()))
                .collect::<Vec<_>>()
        };
        let mut obs = sq(0.25, 0.25, 1.0);
        obs.extend(sq(2.0, 0.25, 2.0));
        let g = Arc::new(rasterize_primitives(&dom, obs, h, DEFAULT_MAX_NODES).unwrap());
        let a = OpenRegion::select(g.clone(), |q| q.x > 0.25 && q.x < 1.25 && q.y > 0.25 && q.y < 1.25);
        let b = OpenRegion::select(g, |q| q.x > 2.0 && q.x < 4.0 && q.y > 0.25 && q.y < 2.25);
        (a, b)
    }

    #[test]
    fn inradius_two_squares() {
        let (a, b) = two_squares(1.0 / 32.0);
        let u = a.disjoint_union(&b).unwrap();
        let c = Coefficients::laplacian();
        let v = evaluate(&SetFunctional::Inradius, &u, &c, &PdeOptions::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{v}");
        let rep = check_maxitivity(&SetFunctional::Inradius, &a, &b, &c, &PdeOptions::default(), "squares").unwrap();
        assert!(rep.pass && rep.gap == 0.0);
    }

    #[test]
    fn rigidity_is_additive() {
        let (a, _) = two_squares(1.0 / 24.0);
        let g = a.grid().clone();
        let b = OpenRegion::select(g, |q| q.x > 2.0 && q.x < 3.0 && q.y > 0.25 && q.y < 1.25);
        let opts = PdeOptions::default();
        let c = Coefficients::laplacian();
        let rep = check_maxitivity(&SetFunctional::TorsionalRigidity, &a, &b, &c, &opts, "squares").unwrap();
        assert!(!rep.pass);
        assert!(rep.details["additive_defect"] <= 10.0 * opts.pde_tol, "{rep:?}");
    }

    #[test]
    fn empty_values() {
        let g = Arc::new(rasterize(&DomainSpec::unit_square(), None, 0.1).unwrap());
        let e = OpenRegion::empty(g);
        let c = Coefficients::laplacian();
        let o = PdeOptions::default();
        assert_eq!(evaluate(&SetFunctional::Inradius, &e, &c, &o).unwrap(), 0.0);
        assert_eq!(evaluate(&SetFunctional::Eigenvalue { k: 2 }, &e, &c, &o).unwrap(), f64::INFINITY);
        let comp = SetFunctional::SpectralComposite { k: 2, f: Composite::SumReciprocals };
        assert_eq!(evaluate(&comp, &e, &c, &o).unwrap(), 0.0);
    }

    #[test]
    fn probes() {
        assert!(probe_decreasing(Composite::SumReciprocals, &[1.0, 2.0]).is_ok());
        assert!(probe_decreasing(Composite::ReciprocalKth, &[1.0, 2.0]).is_ok());
        assert!(probe_decreasing(Composite::ReciprocalKth, &[1.0, f64::INFINITY]).is_ok());
        assert!(probe_decreasing(Composite::ReciprocalKth, &[1.0, 1.0]).is_ok());
    }

    #[test]
    fn monotone_under_chord() {
        let sq = DomainSpec::unit_square();
        let chord = CurveNetwork::segment(p(0.0, 0.5), p(1.0, 0.5)).unwrap();
        let h = 1.0 / 32.0;
        let full = OpenRegion::new(Arc::new(rasterize(&sq, None, h).unwrap()));
        let g = Arc::new(rasterize(&sq, Some(&chord), h).unwrap());
        // Same lattice, the chord removes nodes.
        let cut = OpenRegion::new(g);
        let mask: Vec<bool> = cut.free().to_vec();
        let small = OpenRegion::from_mask(full.grid().clone(), &mask);
        let c = Coefficients::laplacian();
        let o = PdeOptions::default();
        let rep = check_monotonicity(&SetFunctional::TorsionMax, &small, &full, &c, &o, "chord").unwrap();
        assert!(rep.pass && rep.gap > 0.0);
        let rep = check_monotonicity(&SetFunctional::Eigenvalue { k: 2 }, &small, &full, &c, &o, "chord").unwrap();
        assert!(rep.pass && rep.gap > 0.0);
        assert!(matches!(
            check_monotonicity(&SetFunctional::Inradius, &full, &small, &c, &o, "x"),
            Err(FunctionalError::NotNested)
        ));
    }

    #[test]
    fn serde_tags() {
        let f: SetFunctional = serde_json::from_str(r#"{"kind":"spectral_composite","k":1,"f":"reciprocal_kth"}"#).unwrap();
        assert_eq!(f, SetFunctional::SpectralComposite { k: 1, f: Composite::ReciprocalKth });
        let g: SetFunctional = serde_json::from_str(r#"{"kind":"poincare_sobolev","p":2.0,"q":3.0}"#).unwrap();
        assert!(g.is_maxitive());
    }
}
