//! Uniform lattice discretization of Ω and of open sets `A ⊆ Ω`.
//!
//! Nodes within `h/2` of ∂Ω or of an obstacle primitive carry homogeneous
//! Dirichlet data; the remaining nodes strictly inside Ω are free. Open
//! regions are sets of free nodes split into 4-connected components.

use std::collections::VecDeque;
use std::io::{self, Write};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{CurveNetwork, DomainSpec, Point2, Primitive};
use crate::scalar::{fmax, Real};

/// Default cap on `nx * ny`.
pub const DEFAULT_MAX_NODES: usize = 8_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid of {nodes} nodes exceeds the cap of {cap}")]
    GridTooLarge { nodes: usize, cap: usize },
    #[error("grid spacing must be positive and finite")]
    BadSpacing,
    #[error("no generating nodes (domain boundary or obstacle) on the grid")]
    EmptySet,
    #[error("regions live on different grids")]
    GridMismatch,
    #[error("regions overlap or touch")]
    Overlap,
}

/// Classification of a lattice node. The discriminants are the dump codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum NodeClass {
    Outside = 0,
    Interior = 1,
    DomainBoundary = 2,
    Obstacle = 3,
}

/// Lattice covering the bounding box of Ω with a one-cell margin.
#[derive(Clone, Debug)]
pub struct Grid<T> {
    h: T,
    nx: usize,
    ny: usize,
    origin: Point2<T>,
    classes: Vec<NodeClass>,
    domain: DomainSpec<T>,
    obstacles: Vec<Primitive<T>>,
}

impl<T: Real> Grid<T> {
    #[inline]
    pub fn spacing(&self) -> T {
        self.h
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    #[inline]
    pub fn origin(&self) -> Point2<T> {
        self.origin
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    #[inline]
    pub fn classes(&self) -> &[NodeClass] {
        &self.classes
    }

    #[inline]
    pub fn class(&self, node: usize) -> NodeClass {
        self.classes[node]
    }

    pub fn domain(&self) -> &DomainSpec<T> {
        &self.domain
    }

    pub fn obstacles(&self) -> &[Primitive<T>] {
        &self.obstacles
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, node: usize) -> (usize, usize) {
        (node % self.nx, node / self.nx)
    }

    #[inline]
    pub fn position(&self, node: usize) -> Point2<T> {
        let (i, j) = self.ij(node);
        self.origin + Point2::new(T::from_usize_lossy(i), T::from_usize_lossy(j)) * self.h
    }

    /// 4-neighbours `[east, west, north, south]`, `None` off the lattice.
    #[inline]
    pub fn neighbors(&self, node: usize) -> [Option<usize>; 4] {
        let (i, j) = self.ij(node);
        [
            (i + 1 < self.nx).then(|| node + 1),
            (i > 0).then(|| node - 1),
            (j + 1 < self.ny).then(|| node + self.nx),
            (j > 0).then(|| node - self.nx),
        ]
    }

    pub fn count(&self, class: NodeClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    /// Exact distance from `p` to ∂Ω ∪ (obstacle primitives).
    pub fn generator_distance(&self, p: Point2<T>) -> T {
        let mut d = self.domain.distance_to_boundary(p);
        for prim in &self.obstacles {
            d = d.min(prim.distance(p));
        }
        d
    }

    /// Same lattice, new obstacle set (re-classified).
    pub fn with_obstacles(&self, obstacles: Vec<Primitive<T>>) -> Self {
        classify(self.domain.clone(), obstacles, self.h, self.origin, self.nx, self.ny)
    }

    /// Writes `i,j,class` rows (class codes 0-3).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "i,j,class")?;
        for (node, &c) in self.classes.iter().enumerate() {
            let (i, j) = self.ij(node);
            writeln!(w, "{i},{j},{}", c as u8)?;
        }
        Ok(())
    }

    /// Flat binary dump: little-endian `u32 nx`, `u32 ny`, then one class byte per node.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(&(self.nx as u32).to_le_bytes())?;
        w.write_all(&(self.ny as u32).to_le_bytes())?;
        let bytes: Vec<u8> = self.classes.iter().map(|&c| c as u8).collect();
        w.write_all(&bytes)
    }
}

/// Rasterizes Ω and (optionally) Σ at spacing `h`.
pub fn rasterize<T: Real>(
    domain: &DomainSpec<T>,
    net: Option<&CurveNetwork<T>>,
    h: T,
) -> Result<Grid<T>, GridError> {
    let prims = net.map(network_primitives).unwrap_or_default();
    rasterize_primitives(domain, prims, h, DEFAULT_MAX_NODES)
}

pub fn network_primitives<T: Real>(net: &CurveNetwork<T>) -> Vec<Primitive<T>> {
    if net.edges().is_empty() {
        // A lone point blocks only the nodes within h/2 of it.
        return net
            .vertices()
            .iter()
            .map(|&p| Primitive::Segment(crate::geometry::Segment::raw(p, p)))
            .collect();
    }
    net.segments().map(Primitive::Segment).collect()
}

/// Rasterizes Ω with an arbitrary set of obstacle primitives.
pub fn rasterize_primitives<T: Real>(
    domain: &DomainSpec<T>,
    obstacles: Vec<Primitive<T>>,
    h: T,
    max_nodes: usize,
) -> Result<Grid<T>, GridError> {
    if !(h > T::zero()) || !h.is_finite() {
        return Err(GridError::BadSpacing);
    }
    let (lo, hi) = domain.bounding_box();
    let cells = |extent: T| -> Option<usize> { (extent / h).ceil().to_usize() };
    let (cx, cy) = match (cells(hi.x - lo.x), cells(hi.y - lo.y)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(GridError::BadSpacing),
    };
    let nx = cx + 3;
    let ny = cy + 3;
    let nodes = nx.saturating_mul(ny);
    if nodes > max_nodes {
        return Err(GridError::GridTooLarge { nodes, cap: max_nodes });
    }
    let origin = lo - Point2::new(h, h);
    Ok(classify(domain.clone(), obstacles, h, origin, nx, ny))
}

fn classify<T: Real>(
    domain: DomainSpec<T>,
    obstacles: Vec<Primitive<T>>,
    h: T,
    origin: Point2<T>,
    nx: usize,
    ny: usize,
) -> Grid<T> {
    let n = nx * ny;
    let half = h * T::half();
    let mut inside = vec![false; n];
    for j in 0..ny {
        let y = origin.y + T::from_usize_lossy(j) * h;
        let xs = domain.row_crossings(y);
        for pair in xs.chunks_exact(2) {
            for i in 0..nx {
                let x = origin.x + T::from_usize_lossy(i) * h;
                if x > pair[0] && x < pair[1] {
                    inside[j * nx + i] = true;
                }
            }
        }
    }
    let pos = |i: usize, j: usize| {
        origin + Point2::new(T::from_usize_lossy(i), T::from_usize_lossy(j)) * h
    };
    let mark = |flags: &mut [bool], prim: &Primitive<T>| {
        let (a, b) = prim.bounds();
        let i0 = ((a.x - half - origin.x) / h).floor().max(T::zero()).to_usize().unwrap_or(0);
        let j0 = ((a.y - half - origin.y) / h).floor().max(T::zero()).to_usize().unwrap_or(0);
        let i1 = ((b.x + half - origin.x) / h).ceil().to_usize().unwrap_or(0).min(nx - 1);
        let j1 = ((b.y + half - origin.y) / h).ceil().to_usize().unwrap_or(0).min(ny - 1);
        for j in j0..=j1 {
            for i in i0..=i1 {
                if prim.distance(pos(i, j)) <= half {
                    flags[j * nx + i] = true;
                }
            }
        }
    };
    let mut near_boundary = vec![false; n];
    for s in domain.boundary_segments() {
        mark(&mut near_boundary, &Primitive::Segment(s));
    }
    let mut near_obstacle = vec![false; n];
    for prim in &obstacles {
        mark(&mut near_obstacle, prim);
    }
    let classes = (0..n)
        .map(|k| {
            if near_obstacle[k] && (inside[k] || near_boundary[k]) {
                NodeClass::Obstacle
            } else if near_boundary[k] {
                NodeClass::DomainBoundary
            } else if inside[k] {
                NodeClass::Interior
            } else {
                NodeClass::Outside
            }
        })
        .collect();
    Grid { h, nx, ny, origin, classes, domain, obstacles }
}

/// An open set `A ⊆ Ω` represented by free lattice nodes, decomposed into
/// 4-connected components sorted by decreasing size (ties: smallest node).
#[derive(Clone, Debug)]
pub struct OpenRegion<T> {
    grid: Arc<Grid<T>>,
    free: Vec<bool>,
    components: Vec<Vec<usize>>,
}

impl<T: Real> OpenRegion<T> {
    /// All interior nodes of the grid.
    pub fn new(grid: Arc<Grid<T>>) -> Self {
        let free = grid.classes.iter().map(|&c| c == NodeClass::Interior).collect();
        Self::from_free(grid, free)
    }

    /// Interior nodes selected by `mask`.
    pub fn from_mask(grid: Arc<Grid<T>>, mask: &[bool]) -> Self {
        let free = grid
            .classes
            .iter()
            .zip(mask)
            .map(|(&c, &m)| m && c == NodeClass::Interior)
            .collect();
        Self::from_free(grid, free)
    }

    /// Interior nodes whose position satisfies `keep`. The boundary of the
    /// selected set must be made of generators of the grid (domain boundary,
    /// obstacles) for distances to it to be exact.
    pub fn select(grid: Arc<Grid<T>>, keep: impl Fn(Point2<T>) -> bool) -> Self {
        let mask: Vec<bool> = (0..grid.len()).map(|k| keep(grid.position(k))).collect();
        Self::from_mask(grid, &mask)
    }

    pub fn empty(grid: Arc<Grid<T>>) -> Self {
        let n = grid.len();
        Self { grid, free: vec![false; n], components: Vec::new() }
    }

    fn from_free(grid: Arc<Grid<T>>, free: Vec<bool>) -> Self {
        let components = label_components(&grid, &free);
        Self { grid, free, components }
    }

    #[inline]
    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    #[inline]
    pub fn free(&self) -> &[bool] {
        &self.free
    }

    #[inline]
    pub fn contains_node(&self, node: usize) -> bool {
        self.free[node]
    }

    #[inline]
    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn node_count(&self) -> usize {
        self.components.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Region made of the single component `c`.
    pub fn component(&self, c: usize) -> Self {
        let mut free = vec![false; self.free.len()];
        for &k in &self.components[c] {
            free[k] = true;
        }
        Self { grid: self.grid.clone(), free, components: vec![self.components[c].clone()] }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.free.len() == other.free.len()
            && self.free.iter().zip(&other.free).all(|(&a, &b)| !a || b)
    }

    /// Union of two regions on the same lattice that neither share nor
    /// 4-neighbour each other's nodes (closures disjoint).
    pub fn disjoint_union(&self, other: &Self) -> Result<Self, GridError> {
        if !same_lattice(&self.grid, &other.grid) {
            return Err(GridError::GridMismatch);
        }
        for k in 0..self.free.len() {
            if !self.free[k] {
                continue;
            }
            if other.free[k]
                || self.grid.neighbors(k).iter().flatten().any(|&m| other.free[m])
            {
                return Err(GridError::Overlap);
            }
        }
        let free: Vec<bool> = self.free.iter().zip(&other.free).map(|(&a, &b)| a || b).collect();
        Ok(Self::from_free(self.grid.clone(), free))
    }

    /// Positions of the nodes of component `c`.
    pub fn component_positions(&self, c: usize) -> Vec<Point2<T>> {
        self.components[c].iter().map(|&k| self.grid.position(k)).collect()
    }
}

pub(crate) fn same_lattice<T: Real>(a: &Grid<T>, b: &Grid<T>) -> bool {
    a.nx == b.nx && a.ny == b.ny && a.h == b.h && a.origin == b.origin
}

fn label_components<T: Real>(grid: &Grid<T>, free: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; free.len()];
    let mut comps = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..free.len() {
        if !free[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(k) = queue.pop_front() {
            comp.push(k);
            for m in grid.neighbors(k).into_iter().flatten() {
                if free[m] && !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    // Discovery order already has increasing smallest node; stable sort keeps it.
    comps.sort_by(|a, b| b.len().cmp(&a.len()));
    comps
}

/// Connected components of the free nodes of `grid`.
pub fn components<T: Real>(grid: Arc<Grid<T>>) -> OpenRegion<T> {
    OpenRegion::new(grid)
}

/// Per-node distance field, in length units.
#[derive(Clone, Debug)]
pub struct DensityField<T> {
    nx: usize,
    ny: usize,
    values: Vec<T>,
}

impl<T: Real> DensityField<T> {
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, node: usize) -> T {
        self.values[node]
    }

    pub fn max(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| fmax(m, v))
    }

    /// Writes `i,j,value` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "i,j,value")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{},{}", k % self.nx, k / self.nx, v)?;
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }
}

/// Exact Euclidean distance from every interior node to ∂Ω ∪ Σ (and any
/// other obstacle primitive). Generating and outside nodes get 0.
pub fn distance_transform<T: Real>(grid: &Grid<T>) -> Result<DensityField<T>, GridError> {
    if !grid
        .classes
        .iter()
        .any(|&c| c == NodeClass::DomainBoundary || c == NodeClass::Obstacle)
    {
        return Err(GridError::EmptySet);
    }
    let values = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if grid.classes[k] == NodeClass::Interior {
                grid.generator_distance(grid.position(k))
            } else {
                T::zero()
            }
        })
        .collect();
    Ok(DensityField { nx: grid.nx, ny: grid.ny, values })
}

/// Inradius of each component, in component order.
pub fn inradius_per_component<T: Real>(region: &OpenRegion<T>) -> Vec<T> {
    region
        .components
        .par_iter()
        .map(|comp| component_inradius(&region.grid, comp))
        .collect()
}

/// `R(A) = max_{x ∈ A} d(x, ∂A)`, evaluated componentwise. Error `≤ h/2`.
pub fn inradius<T: Real>(region: &OpenRegion<T>) -> T {
    inradius_per_component(region).into_iter().fold(T::zero(), fmax)
}

fn component_inradius<T: Real>(grid: &Grid<T>, comp: &[usize]) -> T {
    let mut best = (T::neg_infinity(), usize::MAX);
    for &k in comp {
        let d = grid.generator_distance(grid.position(k));
        if d > best.0 {
            best = (d, k);
        }
    }
    if best.1 == usize::MAX {
        return T::zero();
    }
    let (d0, node) = best;
    let h = grid.h;
    // Refinement only where the node's inscribed ball already contains the
    // search box, so the refined point stays in the same component.
    if d0 <= h * T::lit(1.5) {
        return d0;
    }
    let p0 = grid.position(node);
    let f = |p: Point2<T>| grid.generator_distance(p);
    let mut p = p0;
    for _ in 0..2 {
        let x = golden_max(|x| f(Point2::new(x, p.y)), p0.x - h, p0.x + h);
        p = Point2::new(x, p.y);
        let y = golden_max(|y| f(Point2::new(p.x, y)), p0.y - h, p0.y + h);
        p = Point2::new(p.x, y);
    }
    fmax(d0, f(p))
}

fn golden_max<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T) -> T {
    let g = T::lit(0.618_033_988_749_894_8);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..40 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        c
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CurveNetwork, DomainSpec, Point2};

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    fn square_with(net: Option<&CurveNetwork<f64>>, h: f64) -> Arc<Grid<f64>> {
        Arc::new(rasterize(&DomainSpec::unit_square(), net, h).unwrap())
    }

    #[test]
    fn no_network_no_obstacles() {
        let g = square_with(None, 1.0 / 32.0);
        assert_eq!(g.count(NodeClass::Obstacle), 0);
        assert_eq!(g.count(NodeClass::Interior), 31 * 31);
    }

    #[test]
    fn chord_band_is_one_node_thick() {
        let h = 1.0 / 64.0;
        let chord = CurveNetwork::segment(p(0.0, 0.5), p(1.0, 0.5)).unwrap();
        let g = square_with(Some(&chord), h);
        for k in 0..g.len() {
            if g.class(k) == NodeClass::Obstacle {
                assert!((g.position(k).y - 0.5).abs() <= h / 2.0);
            }
        }
        // Row y = 0.5 is blocked across Ω̄, including its two boundary nodes.
        assert_eq!(g.count(NodeClass::Obstacle), 65);
    }

    #[test]
    fn component_counts() {
        let h = 1.0 / 64.0;
        let chord = CurveNetwork::segment(p(0.0, 0.5), p(1.0, 0.5)).unwrap();
        assert_eq!(OpenRegion::new(square_with(Some(&chord), h)).components().len(), 2);
        let short = CurveNetwork::segment(p(0.3, 0.5), p(0.7, 0.5)).unwrap();
        assert_eq!(OpenRegion::new(square_with(Some(&short), h)).components().len(), 1);
        let plus = CurveNetwork::star(
            p(0.5, 0.5),
            &[p(1.0, 0.5), p(0.0, 0.5), p(0.5, 1.0), p(0.5, 0.0)],
        )
        .unwrap();
        let r = OpenRegion::new(square_with(Some(&plus), h));
        assert_eq!(r.components().len(), 4);
        assert!(r.components().windows(2).all(|w| w[0].len() >= w[1].len()));
    }

    #[test]
    fn components_partition_free_nodes() {
        let h = 1.0 / 40.0;
        let plus = CurveNetwork::star(p(0.4, 0.6), &[p(1.0, 0.6), p(0.0, 0.6), p(0.4, 1.0)])
            .unwrap();
        let r = OpenRegion::new(square_with(Some(&plus), h));
        let mut all: Vec<usize> = r.components().iter().flatten().copied().collect();
        all.sort_unstable();
        let free: Vec<usize> = (0..r.free().len()).filter(|&k| r.free()[k]).collect();
        assert_eq!(all, free);
    }

    #[test]
    fn distance_transform_square_and_disk() {
        let g = square_with(None, 1.0 / 64.0);
        let f = distance_transform(&g).unwrap();
        assert!((f.max() - 0.5).abs() <= 1.0 / 64.0);
        let disk = DomainSpec::disk(p(0.0, 0.0), 1.0, 512).unwrap();
        let g = rasterize(&disk, None, 1.0 / 32.0).unwrap();
        let f = distance_transform(&g).unwrap();
        let center = (0..g.len()).find(|&k| g.position(k).norm() < 1e-12).unwrap();
        assert!((f.get(center) - (std::f64::consts::PI / 512.0).cos()).abs() < 1e-12);
    }

    fn max_next_to_obstacle(g: &Grid<f64>) -> f64 {
        let f = distance_transform(g).unwrap();
        (0..g.len())
            .filter(|&k| g.class(k) == NodeClass::Interior)
            .filter(|&k| {
                g.neighbors(k).iter().flatten().any(|&m| g.class(m) == NodeClass::Obstacle)
            })
            .map(|k| f.get(k))
            .fold(0.0, f64::max)
    }

    #[test]
    fn obstacle_adjacent_values() {
        let h = 1.0 / 50.0;
        // Band half-width h/2 plus one lattice step.
        let slanted = CurveNetwork::segment(p(0.1, 0.23), p(0.8, 0.71)).unwrap();
        assert!(max_next_to_obstacle(&square_with(Some(&slanted), h)) <= 1.5 * h + 1e-12);
        let aligned = CurveNetwork::segment(p(0.1, 0.5), p(0.9, 0.5)).unwrap();
        assert!(max_next_to_obstacle(&square_with(Some(&aligned), h)) <= h + 1e-12);
    }

    #[test]
    fn half_disk_inradius() {
        let h = 1.0 / 64.0;
        let disk = DomainSpec::disk(p(0.0, 0.0), 1.0, 1024).unwrap();
        let chord = CurveNetwork::segment(p(-1.0, 0.0), p(1.0, 0.0)).unwrap();
        let g = Arc::new(rasterize(&disk, Some(&chord), h).unwrap());
        let r = OpenRegion::new(g);
        assert_eq!(r.components().len(), 2);
        let rad = inradius(&r);
        assert!((rad - 0.5).abs() <= h / 2.0, "{rad}");
    }

    #[test]
    fn empty_region_inradius_zero() {
        let g = square_with(None, 0.1);
        assert_eq!(inradius(&OpenRegion::empty(g)), 0.0);
    }

    #[test]
    fn grid_cap() {
        let err = rasterize_primitives(&DomainSpec::<f64>::unit_square(), vec![], 1e-4, 1000);
        assert!(matches!(err, Err(GridError::GridTooLarge { .. })));
    }

    #[test]
    fn overlap_detected() {
        let g = square_with(None, 0.05);
        let a = OpenRegion::select(g.clone(), |q| q.x < 0.5);
        let b = OpenRegion::select(g.clone(), |q| q.x >= 0.5);
        assert_eq!(a.disjoint_union(&b).unwrap_err(), GridError::Overlap);
        let c = OpenRegion::select(g, |q| q.x > 0.6);
        assert!(a.disjoint_union(&c).is_ok());
    }

    #[test]
    fn csv_dump_codes() {
        let g = square_with(None, 0.25);
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("i,j,class\n"));
        assert_eq!(text.lines().count(), g.len() + 1);
    }
}
