//! Fixture regions shared by the property checks, and the full battery that
//! the `properties` command runs.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::functionals::{
    check_local_maxitivity, check_maxitivity, check_monotonicity, check_positive_on_balls_and_shrinking,
    check_sigma_maxitivity, certified_radius, Composite, FunctionalError, LadderSpacing, PropertyReport,
    SetFunctional,
};
use crate::geometry::{DomainSpec, Point2, Primitive, Segment};
use crate::grid::{rasterize_primitives, OpenRegion, DEFAULT_MAX_NODES};
use crate::pde::{ede_bounds_check, Coefficients, PdeOptions, ScalarField};

fn p(x: f64, y: f64) -> Point2<f64> {
    Point2::new(x, y)
}

/// A closed polygon, counter-clockwise.
#[derive(Clone, Debug)]
struct Shape(Vec<Point2<f64>>);

impl Shape {
    fn rect(x: f64, y: f64, w: f64, h: f64) -> Self {
        Shape(vec![p(x, y), p(x + w, y), p(x + w, y + h), p(x, y + h)])
    }

    fn square(x: f64, y: f64, s: f64) -> Self {
        Self::rect(x, y, s, s)
    }

    fn ngon(cx: f64, cy: f64, r: f64, n: usize) -> Self {
        Shape((0..n).map(|i| p(cx, cy) + Point2::polar(r, std::f64::consts::TAU * i as f64 / n as f64)).collect())
    }

    fn ell(x: f64, y: f64, s: f64) -> Self {
        // Square of side `s` minus its upper-right quarter.
        let t = s / 2.0;
        Shape(vec![p(x, y), p(x + s, y), p(x + s, y + t), p(x + t, y + t), p(x + t, y + s), p(x, y + s)])
    }

    fn outline(&self) -> Vec<Primitive<f64>> {
        let v = &self.0;
        (0..v.len())
            .map(|i| Primitive::Segment(Segment { a: v[i], b: v[(i + 1) % v.len()] }))
            .collect()
    }

    fn contains(&self, q: Point2<f64>) -> bool {
        // Even-odd rule.
        let v = &self.0;
        let mut inside = false;
        let mut j = v.len() - 1;
        for i in 0..v.len() {
            let (a, b) = (v[i], v[j]);
            if (a.y > q.y) != (b.y > q.y) && q.x < (b.x - a.x) * (q.y - a.y) / (b.y - a.y) + a.x {
                inside = !inside;
            }
            j = i;
        }
        inside
    }
}

/// Regions inside `shapes`, cut out of one rectangle by their outlines.
fn cut_out(frame: (f64, f64), shapes: &[Shape], h: f64) -> Result<Vec<OpenRegion<f64>>, FunctionalError> {
    let dom = DomainSpec::rectangle(p(0.0, 0.0), p(frame.0, frame.1))?;
    let obstacles = shapes.iter().flat_map(Shape::outline).collect();
    let grid = Arc::new(rasterize_primitives(&dom, obstacles, h, DEFAULT_MAX_NODES)?);
    Ok(shapes.iter().map(|s| OpenRegion::select(grid.clone(), |q| s.contains(q))).collect())
}

/// A named region.
#[derive(Clone, Debug)]
pub struct RegionFixture {
    pub name: String,
    pub region: OpenRegion<f64>,
}

/// Two node-disjoint regions on one grid.
#[derive(Clone, Debug)]
pub struct PairFixture {
    pub name: String,
    pub a: OpenRegion<f64>,
    pub b: OpenRegion<f64>,
}

/// A region and a ball center on its obstacle set.
#[derive(Clone, Debug)]
pub struct LocalFixture {
    pub name: String,
    pub region: OpenRegion<f64>,
    pub center: Point2<f64>,
}

/// Ten pairs of disjoint shapes (squares, rectangles, polygonal disks,
/// triangles, L-shapes) of different sizes in a `6 × 3` frame.
pub fn disjoint_pairs(h: f64) -> Result<Vec<PairFixture>, FunctionalError> {
    let tri = |x: f64, y: f64, s: f64| Shape(vec![p(x, y), p(x + s, y), p(x + 0.5 * s, y + 0.9 * s)]);
    let pairs: Vec<(&str, Shape, Shape)> = vec![
        ("square_square", Shape::square(0.5, 0.5, 1.0), Shape::square(3.5, 0.5, 1.8)),
        ("disk_square", Shape::ngon(1.5, 1.5, 0.8, 64), Shape::square(3.5, 0.7, 1.2)),
        ("rect_disk", Shape::rect(0.3, 0.3, 2.2, 1.0), Shape::ngon(4.5, 1.5, 1.1, 64)),
        ("triangle_square", tri(0.3, 0.3, 2.2), Shape::square(3.6, 0.4, 0.9)),
        ("ell_disk", Shape::ell(0.3, 0.3, 2.0), Shape::ngon(4.4, 1.4, 0.6, 48)),
        ("disk_disk", Shape::ngon(1.5, 1.5, 0.4, 32), Shape::ngon(4.5, 1.5, 1.2, 64)),
        ("equal_squares", Shape::square(0.5, 0.8, 1.4), Shape::square(3.5, 0.8, 1.4)),
        ("hexagon_strip", Shape::ngon(1.5, 1.5, 1.0, 6), Shape::rect(3.3, 1.2, 2.4, 0.5)),
        ("tall_triangle", Shape::rect(1.0, 0.2, 0.8, 2.6), tri(3.4, 0.3, 2.3)),
        ("ell_ell", Shape::ell(0.4, 0.4, 1.4), Shape::ell(3.3, 0.3, 2.4)),
    ];
    pairs
        .into_iter()
        .map(|(name, a, b)| {
            let mut r = cut_out((6.0, 3.0), &[a, b], h)?;
            let b = r.pop().expect("two regions");
            let a = r.pop().expect("two regions");
            Ok(PairFixture { name: name.into(), a, b })
        })
        .collect()
}

/// Four disjoint squares of distinct sizes on one grid.
pub fn disjoint_family(h: f64) -> Result<Vec<OpenRegion<f64>>, FunctionalError> {
    let shapes = [
        Shape::square(0.2, 0.2, 0.5),
        Shape::square(1.0, 0.2, 1.1),
        Shape::square(2.4, 0.2, 0.8),
        Shape::square(3.5, 0.2, 1.4),
    ];
    cut_out((5.2, 1.8), &shapes, h)
}

/// Unit square, disk of radius 1/2, and the unit square with a slit.
pub fn sandwich_regions(h: f64) -> Result<Vec<RegionFixture>, FunctionalError> {
    let square = DomainSpec::unit_square();
    let disk = DomainSpec::disk(p(0.5, 0.5), 0.5, 256)?;
    let slit = vec![Primitive::Segment(Segment::new(p(0.5, 0.0), p(0.5, 0.6))?)];
    let make = |d: &DomainSpec<f64>, obs: Vec<Primitive<f64>>| -> Result<OpenRegion<f64>, FunctionalError> {
        Ok(OpenRegion::new(Arc::new(rasterize_primitives(d, obs, h, DEFAULT_MAX_NODES)?)))
    };
    Ok(vec![
        RegionFixture { name: "unit_square".into(), region: make(&square, Vec::new())? },
        RegionFixture { name: "disk".into(), region: make(&disk, Vec::new())? },
        RegionFixture { name: "slit_square".into(), region: make(&square, slit)? },
    ])
}

/// Smooth random coefficients on `grid` with `σ ∈ [0.5, 2]`,
/// `ρ ∈ [0.6, 1.4]`, `V ∈ [0, 4]`.
pub fn random_coefficients(grid: &crate::grid::Grid<f64>, seed: u64) -> Coefficients<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wave = || {
        let (a, b, c) = (rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0), rng.random_range(0.0..6.3));
        move |q: Point2<f64>| 0.5 + 0.5 * (a * q.x + b * q.y + c).sin()
    };
    let (s, r, v) = (wave(), wave(), wave());
    Coefficients {
        sigma: ScalarField::from_fn(grid, |q| 0.5 + 1.5 * s(q)),
        rho: ScalarField::from_fn(grid, |q| 0.6 + 0.8 * r(q)),
        potential: ScalarField::from_fn(grid, |q| 4.0 * v(q)),
    }
}

/// Regions `Ω ∖ Σ` with a ball center on Σ: the unit disk around a short
/// segment, the unit square around a plus, and the unit square around a
/// segment taken at its endpoint.
pub fn local_fixtures(h: f64) -> Result<Vec<LocalFixture>, FunctionalError> {
    let seg = |a: Point2<f64>, b: Point2<f64>| Segment::new(a, b).map(Primitive::Segment);
    let c = p(0.5, 0.5);
    let mut plus = Vec::new();
    for i in 0..4 {
        plus.push(seg(c, c + Point2::polar(0.2, std::f64::consts::FRAC_PI_2 * i as f64))?);
    }
    let cases: Vec<(&str, DomainSpec<f64>, Vec<Primitive<f64>>, Point2<f64>)> = vec![
        ("disk_short_segment", DomainSpec::disk(p(0.0, 0.0), 1.0, 512)?, vec![seg(p(-0.05, 0.0), p(0.05, 0.0))?], p(0.0, 0.0)),
        ("square_plus", DomainSpec::unit_square(), plus, c),
        ("square_segment_tip", DomainSpec::unit_square(), vec![seg(p(0.2, 0.5), p(0.6, 0.5))?], p(0.6, 0.5)),
    ];
    cases
        .into_iter()
        .map(|(name, dom, obs, center)| {
            let grid = Arc::new(rasterize_primitives(&dom, obs, h, DEFAULT_MAX_NODES)?);
            Ok(LocalFixture { name: name.into(), region: OpenRegion::new(grid), center })
        })
        .collect()
}

/// Radii tested below the certified radius.
pub const LOCAL_FRACTIONS: [f64; 3] = [0.3, 0.6, 0.95];

/// Spacing of the battery's grids.
#[derive(Clone, Copy, Debug)]
pub struct BatteryOptions {
    pub pair_h: f64,
    pub region_h: f64,
    pub local_h: f64,
    pub random_fields: usize,
    pub seed: u64,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self { pair_h: 1.0 / 24.0, region_h: 1.0 / 32.0, local_h: 1.0 / 40.0, random_fields: 5, seed: 7 }
    }
}

/// Functionals exercised by the maxitivity checks.
pub fn maxitive_functionals() -> Vec<SetFunctional> {
    vec![
        SetFunctional::Inradius,
        SetFunctional::TorsionMax,
        SetFunctional::PoincareSobolev { p: 2.0, q: 3.0 },
    ]
}

/// Turns the (failing) maxitivity report of the torsional rigidity into the
/// additivity check it really is: `T(A ∪ B) = T(A) + T(B)`.
pub fn additivity_report(mut rep: PropertyReport, opts: &PdeOptions) -> PropertyReport {
    let defect = rep.details.get("additive_defect").copied().unwrap_or(f64::INFINITY);
    let scale = rep.details.get("union").copied().unwrap_or(1.0).abs().max(1.0);
    rep.check = "additivity".into();
    rep.gap = defect;
    rep.tolerance = 10.0 * opts.pde_tol * scale;
    rep.pass = defect <= rep.tolerance;
    rep
}

/// Every property check on the shipped fixtures, one report each.
pub fn run_battery(opts: &PdeOptions, b: &BatteryOptions) -> Result<Vec<PropertyReport>, FunctionalError> {
    let mut out = Vec::new();
    let lap = Coefficients::laplacian();

    // Monotonicity: slit square inside the square.
    let regions = sandwich_regions(b.region_h)?;
    let mono: Vec<SetFunctional> = vec![
        SetFunctional::Inradius,
        SetFunctional::TorsionMax,
        SetFunctional::TorsionalRigidity,
        SetFunctional::Eigenvalue { k: 3 },
        SetFunctional::SpectralComposite { k: 3, f: Composite::SumReciprocals },
        SetFunctional::PoincareSobolev { p: 2.0, q: 3.0 },
    ];
    // Same lattice; the slit only removes nodes.
    let small = regions[2].region.clone();
    let big = regions[0].region.clone();
    for f in &mono {
        out.push(check_monotonicity(f, &small, &big, &lap, opts, "slit_square_in_square")?);
    }

    // Maxitivity on disjoint pairs; the rigidity is additive instead.
    let pairs = disjoint_pairs(b.pair_h)?;
    for pair in &pairs {
        for f in maxitive_functionals() {
            out.push(check_maxitivity(&f, &pair.a, &pair.b, &lap, opts, &pair.name)?);
        }
        let t = check_maxitivity(&SetFunctional::TorsionalRigidity, &pair.a, &pair.b, &lap, opts, &pair.name)?;
        out.push(additivity_report(t, opts));
    }
    let family = disjoint_family(b.pair_h)?;
    for f in maxitive_functionals() {
        out.push(check_sigma_maxitivity(&f, &family, &lap, opts, "four_squares")?);
    }

    // Coefficient sandwich.
    for fx in &regions {
        for s in 0..b.random_fields {
            let coeff = random_coefficients(fx.region.grid(), b.seed.wrapping_add(s as u64));
            let rep = ede_bounds_check(&fx.region, &coeff, 3, opts)?;
            let worst = rep
                .rows
                .iter()
                .map(|r| r.lower_margin.min(r.upper_margin))
                .fold(f64::INFINITY, f64::min);
            out.push(PropertyReport {
                check: "coefficient_sandwich".into(),
                functional: "eigenvalue_3".into(),
                fixture: format!("{}_field_{s}", fx.name),
                pass: rep.pass,
                gap: worst,
                tolerance: rep.tolerance,
                details: Default::default(),
            });
        }
    }

    // Local maxitivity below the certified radius.
    for fx in local_fixtures(b.local_h)? {
        for k in 1..=3 {
            let f = SetFunctional::Eigenvalue { k };
            let Some((_, _, ra)) = certified_radius(&fx.region, &lap, k) else { continue };
            for frac in LOCAL_FRACTIONS {
                out.push(check_local_maxitivity(&f, &fx.region, fx.center, frac * ra, &lap, opts, &fx.name)?);
            }
        }
    }

    // Positivity and scaling on balls.
    for (f, levels) in [(SetFunctional::Inradius, 4), (SetFunctional::TorsionMax, 3)] {
        let lad = check_positive_on_balls_and_shrinking(&f, 1.0, levels, LadderSpacing::PerRadius(64), opts)?;
        out.push(PropertyReport {
            check: "positive_on_balls_and_shrinking".into(),
            functional: lad.functional.clone(),
            fixture: format!("balls_{levels}_levels"),
            pass: lad.pass,
            gap: lad.rate_deviation,
            tolerance: lad.rate_tolerance,
            details: lad.rungs.iter().enumerate().map(|(i, g)| (format!("value_{i}"), g.value)).collect(),
        });
    }
    Ok(out)
}
