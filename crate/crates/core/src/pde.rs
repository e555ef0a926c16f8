//! Finite-difference elliptic solvers on open regions: torsion function,
//! Dirichlet eigenvalues of `−div(σ∇u) + Vu = λρu`, Poincaré–Sobolev
//! constants, and the coefficient sandwich for eigenvalues.
//!
//! Every non-free node carries homogeneous Dirichlet data. Components are
//! solved independently (in parallel) except for the torsion function, which
//! uses one system over all free nodes so that whole-region solves can be
//! compared with per-component ones.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;
use crate::grid::{Grid, OpenRegion};
use crate::linalg::{lowest_eigenpairs, no_neighbor, pcg, LinalgError, Stencil};
use crate::scalar::{axpy, dot, fmax, norm2, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdeError {
    #[error("solver diverged: {0}")]
    SolverDiverged(#[from] LinalgError),
    #[error("only {available} discrete modes exist, {wanted} requested")]
    NotEnoughModes { wanted: usize, available: usize },
    #[error("exponents p = {p}, q = {q} outside 1 < p <= q < p*")]
    BadExponents { p: f64, q: f64 },
    #[error("Poincaré-Sobolev ascent did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("invalid coefficients: {0}")]
    BadCoefficients(String),
}

/// Solver tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeOptions {
    /// Relative residual of linear solves.
    pub pde_tol: f64,
    /// Bound on `‖Au − λρu‖ / ‖u‖` for every returned eigenpair.
    pub eig_tol: f64,
    /// Relative change of the Rayleigh ratio that stops the ascent.
    pub ps_tol: f64,
    /// Regularization of `|∇u|` in the p-energy.
    pub ps_eps: f64,
    pub ps_max_iter: usize,
}

impl Default for PdeOptions {
    fn default() -> Self {
        Self { pde_tol: 1e-8, eig_tol: 1e-6, ps_tol: 1e-5, ps_eps: 1e-10, ps_max_iter: 2000 }
    }
}

/// A scalar field: one constant, or one value per grid node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, bound = "T: Real")]
pub enum ScalarField<T> {
    Constant(T),
    Nodal(Vec<T>),
}

impl<T: Real> ScalarField<T> {
    pub fn from_fn(grid: &Grid<T>, f: impl Fn(Point2<T>) -> T) -> Self {
        ScalarField::Nodal((0..grid.len()).map(|k| f(grid.position(k))).collect())
    }

    #[inline]
    pub fn at(&self, node: usize) -> T {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Nodal(v) => v[node],
        }
    }

    /// `(min, max)` over all nodes.
    pub fn bounds(&self) -> (T, T) {
        match self {
            ScalarField::Constant(c) => (*c, *c),
            ScalarField::Nodal(v) => v.iter().fold((T::infinity(), T::neg_infinity()), |(a, b), &x| {
                (a.min(x), b.max(x))
            }),
        }
    }

    fn check(&self, grid: &Grid<T>, name: &str) -> Result<(), PdeError> {
        if let ScalarField::Nodal(v) = self {
            if v.len() != grid.len() {
                return Err(PdeError::BadCoefficients(format!(
                    "{name} has {} values for {} nodes",
                    v.len(),
                    grid.len()
                )));
            }
        }
        let (lo, hi) = self.bounds();
        if !lo.is_finite() || !hi.is_finite() {
            return Err(PdeError::BadCoefficients(format!("{name} is not finite")));
        }
        Ok(())
    }
}

/// Bounds `σ₁ ≤ σ ≤ σ₂`, `ρ₁ ≤ ρ ≤ ρ₂`, `0 ≤ V ≤ V₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBounds {
    pub sigma: (f64, f64),
    pub rho: (f64, f64),
    pub v_max: f64,
}

/// Coefficients of `−div(σ∇u) + Vu = λρu` with scalar isotropic σ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct Coefficients<T> {
    pub sigma: ScalarField<T>,
    pub rho: ScalarField<T>,
    #[serde(default = "zero_field")]
    pub potential: ScalarField<T>,
}

fn zero_field<T: Real>() -> ScalarField<T> {
    ScalarField::Constant(T::zero())
}

impl<T: Real> Default for Coefficients<T> {
    fn default() -> Self {
        Self::laplacian()
    }
}

impl<T: Real> Coefficients<T> {
    /// σ ≡ ρ ≡ 1, V ≡ 0.
    pub fn laplacian() -> Self {
        Self::constant(T::one(), T::one(), T::zero())
    }

    pub fn constant(sigma: T, rho: T, potential: T) -> Self {
        Self {
            sigma: ScalarField::Constant(sigma),
            rho: ScalarField::Constant(rho),
            potential: ScalarField::Constant(potential),
        }
    }

    pub fn validate(&self, grid: &Grid<T>) -> Result<(), PdeError> {
        self.sigma.check(grid, "sigma")?;
        self.rho.check(grid, "rho")?;
        self.potential.check(grid, "potential")?;
        let b = self.bounds();
        if !(b.sigma.0 > 0.0) || !(b.rho.0 > 0.0) {
            return Err(PdeError::BadCoefficients("sigma and rho must be positive".into()));
        }
        if self.potential.bounds().0 < T::zero() {
            return Err(PdeError::BadCoefficients("potential must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn bounds(&self) -> CoefficientBounds {
        let f = |(a, b): (T, T)| (a.to_f64_lossy(), b.to_f64_lossy());
        CoefficientBounds {
            sigma: f(self.sigma.bounds()),
            rho: f(self.rho.bounds()),
            v_max: self.potential.bounds().1.to_f64_lossy(),
        }
    }

    fn is_laplacian(&self) -> bool {
        *self == Self::laplacian()
    }
}

/// Assembles `−div(σ∇·) + V` on `nodes` (sorted) with harmonic face averages
/// of σ, scaled by `1/h²`. Returns the operator and the diagonal mass ρ.
fn assemble<T: Real>(
    grid: &Grid<T>,
    nodes: &[usize],
    free: &[bool],
    coeff: &Coefficients<T>,
) -> (Stencil<T>, Vec<T>) {
    let h2 = grid.spacing() * grid.spacing();
    let n = nodes.len();
    let local = |k: usize| nodes.binary_search(&k).ok();
    let mut diag = vec![T::zero(); n];
    let mut cols = vec![[no_neighbor(); 4]; n];
    let mut vals = vec![[T::zero(); 4]; n];
    let mut mass = vec![T::zero(); n];
    for (i, &k) in nodes.iter().enumerate() {
        let sk = coeff.sigma.at(k);
        let mut d = T::zero();
        for (t, m) in grid.neighbors(k).into_iter().enumerate() {
            // Nodes off the lattice never neighbour a free node (one-cell margin).
            let Some(m) = m else { continue };
            let sm = coeff.sigma.at(m);
            let face = T::two() * sk * sm / (sk + sm) / h2;
            d += face;
            if free[m] {
                if let Some(j) = local(m) {
                    cols[i][t] = j as u32;
                    vals[i][t] = -face;
                }
            }
        }
        diag[i] = d + coeff.potential.at(k);
        mass[i] = coeff.rho.at(k);
    }
    (Stencil { diag, cols, vals }, mass)
}

/// Torsion function `−Δw = 1` on the region, `w = 0` elsewhere.
#[derive(Clone, Debug)]
pub struct TorsionSolution<T> {
    /// Nodal values over the whole grid.
    pub w: Vec<T>,
    /// `M = max w`.
    pub max_value: T,
    pub max_location: Option<Point2<T>>,
    /// `T = h² Σ w`.
    pub l1_value: T,
    /// Largest central-difference gradient magnitude (shear stress).
    pub grad_max: T,
    pub iterations: usize,
    pub residual: f64,
}

pub fn solve_torsion<T: Real>(
    region: &OpenRegion<T>,
    opts: &PdeOptions,
) -> Result<TorsionSolution<T>, PdeError> {
    let grid = region.grid();
    let mut nodes: Vec<usize> = region.components().iter().flatten().copied().collect();
    nodes.sort_unstable();
    let mut w = vec![T::zero(); grid.len()];
    if nodes.is_empty() {
        return Ok(TorsionSolution {
            w,
            max_value: T::zero(),
            max_location: None,
            l1_value: T::zero(),
            grad_max: T::zero(),
            iterations: 0,
            residual: 0.0,
        });
    }
    let (a, _) = assemble(grid, &nodes, region.free(), &Coefficients::laplacian());
    let b = vec![T::one(); nodes.len()];
    let mut x = vec![T::zero(); nodes.len()];
    let out = pcg(&a, &b, &mut x, T::lit(opts.pde_tol))?;
    for (&k, &v) in nodes.iter().zip(&x) {
        w[k] = v;
    }
    let h = grid.spacing();
    let mut best = (T::neg_infinity(), nodes[0]);
    let mut grad_max = T::zero();
    for &k in &nodes {
        if w[k] > best.0 {
            best = (w[k], k);
        }
        let nb = grid.neighbors(k);
        let val = |m: Option<usize>| m.map_or(T::zero(), |m| w[m]);
        let gx = (val(nb[0]) - val(nb[1])) / (T::two() * h);
        let gy = (val(nb[2]) - val(nb[3])) / (T::two() * h);
        grad_max = fmax(grad_max, gx.hypot(gy));
    }
    let l1_value = x.iter().copied().sum::<T>() * h * h;
    Ok(TorsionSolution {
        max_value: best.0,
        max_location: Some(grid.position(best.1)),
        l1_value,
        grad_max,
        iterations: out.iterations,
        residual: out.residual,
        w,
    })
}

/// Ascending eigenvalues with their residuals `‖Au − λρu‖ / ‖u‖`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Spectrum<T> {
    pub values: Vec<T>,
    pub residuals: Vec<T>,
}

/// Eigenpairs of one region: the spectrum plus nodal eigenfunctions
/// (zero off their component, unit Euclidean norm).
#[derive(Clone, Debug)]
pub struct Eigenmodes<T> {
    pub spectrum: Spectrum<T>,
    pub modes: Vec<Vec<T>>,
}

struct ComponentMode<T> {
    value: T,
    residual: T,
    component: usize,
    nodes_vec: Vec<(usize, T)>,
}

/// Lowest `k` eigenvalues of the region: the merged ascending list of the
/// component spectra, truncated to `k`.
pub fn eigenvalues<T: Real>(
    region: &OpenRegion<T>,
    coeff: &Coefficients<T>,
    k: usize,
    opts: &PdeOptions,
) -> Result<Spectrum<T>, PdeError> {
    eigenmodes(region, coeff, k, opts).map(|m| m.spectrum)
}

pub fn eigenmodes<T: Real>(
    region: &OpenRegion<T>,
    coeff: &Coefficients<T>,
    k: usize,
    opts: &PdeOptions,
) -> Result<Eigenmodes<T>, PdeError> {
    let grid = region.grid();
    coeff.validate(grid)?;
    let available = region.node_count();
    if k == 0 || available < k {
        return Err(PdeError::NotEnoughModes { wanted: k, available });
    }
    let per_comp: Vec<Result<Vec<ComponentMode<T>>, PdeError>> = region
        .components()
        .par_iter()
        .enumerate()
        .map(|(c, nodes)| component_modes(grid, region.free(), nodes, coeff, k, opts, c))
        .collect();
    let mut all = Vec::new();
    for r in per_comp {
        all.extend(r?);
    }
    all.sort_by(|a, b| {
        a.value
            .partial_cmp(&b.value)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.component.cmp(&b.component))
    });
    all.truncate(k);
    let mut values = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut modes = Vec::with_capacity(k);
    for m in all {
        values.push(m.value);
        residuals.push(m.residual);
        let mut field = vec![T::zero(); grid.len()];
        for (node, v) in m.nodes_vec {
            field[node] = v;
        }
        modes.push(field);
    }
    Ok(Eigenmodes { spectrum: Spectrum { values, residuals }, modes })
}

fn component_modes<T: Real>(
    grid: &Grid<T>,
    free: &[bool],
    nodes: &[usize],
    coeff: &Coefficients<T>,
    k: usize,
    opts: &PdeOptions,
    component: usize,
) -> Result<Vec<ComponentMode<T>>, PdeError> {
    let (a, rho) = assemble(grid, nodes, free, coeff);
    let b = a.congruence(&rho);
    let rho_max = rho.iter().copied().fold(T::zero(), fmax);
    let tol = T::lit(opts.eig_tol) / fmax(rho_max, T::one());
    let pairs = lowest_eigenpairs(&b, k, tol, nodes[0] as u64)?;
    let mut out = Vec::with_capacity(pairs.len());
    for p in pairs {
        // Back to the generalized problem: x = ρ^{-1/2} u.
        let mut x: Vec<T> = p.vector.iter().zip(&rho).map(|(&u, &r)| u / r.sqrt()).collect();
        let xn = norm2(&x);
        x.iter_mut().for_each(|v| *v /= xn);
        // Deterministic sign: positive sum (or first nonzero entry).
        let s: T = x.iter().copied().sum();
        let flip = if s != T::zero() { s < T::zero() } else { x.iter().find(|v| **v != T::zero()).is_some_and(|v| *v < T::zero()) };
        if flip {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        let mut ax = vec![T::zero(); x.len()];
        a.apply(&x, &mut ax);
        for i in 0..x.len() {
            ax[i] -= p.value * rho[i] * x[i];
        }
        let residual = norm2(&ax);
        if residual.to_f64_lossy() > opts.eig_tol {
            return Err(PdeError::SolverDiverged(LinalgError::NoConvergence { found: 0, wanted: k }));
        }
        out.push(ComponentMode {
            value: p.value,
            residual,
            component,
            nodes_vec: nodes.iter().copied().zip(x).collect(),
        });
    }
    Ok(out)
}

/// `p* = 2p / (2 − p)` for `p < 2`, `+∞` otherwise.
pub fn sobolev_conjugate(p: f64) -> f64 {
    if p < 2.0 {
        2.0 * p / (2.0 - p)
    } else {
        f64::INFINITY
    }
}

pub fn check_exponents(p: f64, q: f64) -> Result<(), PdeError> {
    if p > 1.0 && p <= q && q < sobolev_conjugate(p) && p.is_finite() && q.is_finite() {
        Ok(())
    } else {
        Err(PdeError::BadExponents { p, q })
    }
}

/// `C_{p,q}(A) = max (∫|u|^q)^{p/q} / ∫|∇u|^p` over functions vanishing off `A`.
///
/// `p = q = 2` is `1/λ₁`. Otherwise the ratio is maximized per component by
/// Sobolev-preconditioned ascent on its logarithm (P1 gradients on the two
/// triangles of each cell, lumped mass for `∫|u|^q`) and the components are
/// combined by max.
pub fn poincare_sobolev<T: Real>(
    region: &OpenRegion<T>,
    p: f64,
    q: f64,
    opts: &PdeOptions,
) -> Result<T, PdeError> {
    check_exponents(p, q)?;
    if region.is_empty() {
        return Ok(T::zero());
    }
    if p == 2.0 && q == 2.0 {
        let s = eigenvalues(region, &Coefficients::laplacian(), 1, opts)?;
        return Ok(T::one() / s.values[0]);
    }
    Ok(poincare_sobolev_per_component(region, p, q, opts)?.into_iter().fold(T::zero(), fmax))
}

/// Per-component constants, in component order.
pub fn poincare_sobolev_per_component<T: Real>(
    region: &OpenRegion<T>,
    p: f64,
    q: f64,
    opts: &PdeOptions,
) -> Result<Vec<T>, PdeError> {
    check_exponents(p, q)?;
    let grid = region.grid();
    region
        .components()
        .par_iter()
        .map(|nodes| {
            if p == 2.0 && q == 2.0 {
                let (a, _) = assemble(grid, nodes, region.free(), &Coefficients::laplacian());
                let pairs = lowest_eigenpairs(&a, 1, T::lit(opts.eig_tol), nodes[0] as u64)?;
                Ok(T::one() / pairs[0].value)
            } else {
                ps_component(grid, region.free(), nodes, p, q, opts)
            }
        })
        .collect()
}

/// Discrete p-energy and q-mass of one component.
struct PsProblem<'a, T> {
    nodes: &'a [usize],
    /// Cells as four local indices `[00, 10, 01, 11]` (`None` = Dirichlet).
    cells: Vec<[Option<usize>; 4]>,
    h: T,
    p: T,
    q: T,
    eps: T,
}

impl<T: Real> PsProblem<'_, T> {
    fn new<'a>(grid: &Grid<T>, free: &[bool], nodes: &'a [usize], p: f64, q: f64, eps: f64) -> PsProblem<'a, T> {
        let (nx, _) = grid.shape();
        let local = |k: usize| if free[k] { nodes.binary_search(&k).ok() } else { None };
        // Every cell having a component node as one of its corners.
        let mut lower_left: Vec<usize> = Vec::with_capacity(nodes.len() * 4);
        for &k in nodes {
            let (i, j) = grid.ij(k);
            for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                if i >= di && j >= dj {
                    lower_left.push(k - di - dj * nx);
                }
            }
        }
        lower_left.sort_unstable();
        lower_left.dedup();
        let cells = lower_left
            .into_iter()
            .map(|c| [local(c), local(c + 1), local(c + nx), local(c + nx + 1)])
            .collect();
        PsProblem { nodes, cells, h: grid.spacing(), p: T::lit(p), q: T::lit(q), eps: T::lit(eps) }
    }

    /// `(G, ∂G)` with `G = Σ_T |T| (|∇u|² + ε)^{p/2}`.
    fn energy(&self, u: &[T], grad: Option<&mut [T]>) -> T {
        let h = self.h;
        let area = h * h * T::half();
        let at = |o: Option<usize>| o.map_or(T::zero(), |i| u[i]);
        let mut g_total = T::zero();
        let mut grad = grad;
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = T::zero());
        }
        let half_p = self.p * T::half();
        for c in &self.cells {
            let (u00, u10, u01, u11) = (at(c[0]), at(c[1]), at(c[2]), at(c[3]));
            // Lower-left triangle (00, 10, 01) and upper-right (11, 01, 10).
            for (gx, gy, tri) in [
                ((u10 - u00) / h, (u01 - u00) / h, 0),
                ((u11 - u01) / h, (u11 - u10) / h, 1),
            ] {
                let s = gx * gx + gy * gy + self.eps;
                g_total += area * s.powf(half_p);
                if let Some(g) = grad.as_deref_mut() {
                    let f = area * self.p * s.powf(half_p - T::one()) / h;
                    let (fx, fy) = (f * gx, f * gy);
                    let mut add = |o: Option<usize>, v: T| {
                        if let Some(i) = o {
                            g[i] += v;
                        }
                    };
                    if tri == 0 {
                        add(c[1], fx);
                        add(c[0], -fx - fy);
                        add(c[2], fy);
                    } else {
                        add(c[3], fx + fy);
                        add(c[2], -fx);
                        add(c[1], -fy);
                    }
                }
            }
        }
        g_total
    }

    /// `N = Σ h² |u|^q`.
    fn mass(&self, u: &[T]) -> T {
        let h2 = self.h * self.h;
        u.iter().map(|&x| x.abs().powf(self.q)).sum::<T>() * h2
    }

    fn log_ratio(&self, u: &[T]) -> T {
        (self.p / self.q) * self.mass(u).ln() - self.energy(u, None).ln()
    }

    fn normalize(&self, u: &mut [T]) {
        let n = self.mass(u).powf(T::one() / self.q);
        u.iter_mut().for_each(|v| *v /= n);
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }
}

fn ps_component<T: Real>(
    grid: &Grid<T>,
    free: &[bool],
    nodes: &[usize],
    p: f64,
    q: f64,
    opts: &PdeOptions,
) -> Result<T, PdeError> {
    let prob = PsProblem::new(grid, free, nodes, p, q, opts.ps_eps);
    let (lap, _) = assemble(grid, nodes, free, &Coefficients::laplacian());
    let n = prob.len();
    // Start from the torsion function of the component.
    let mut u = vec![T::zero(); n];
    pcg(&lap, &vec![T::one(); n], &mut u, T::lit(opts.pde_tol))?;
    prob.normalize(&mut u);
    let mut f = prob.log_ratio(&u);
    let pq = prob.p / prob.q;
    let h2 = prob.h * prob.h;
    let mut step: Option<T> = None;
    let mut calm = 0;
    let tol = T::lit(opts.ps_tol);
    let mut dg = vec![T::zero(); n];
    for _ in 0..opts.ps_max_iter {
        let g_val = prob.energy(&u, Some(&mut dg));
        let m_val = prob.mass(&u);
        // ∇ log J = (p/q) ∇N / N − ∇G / G.
        let grad: Vec<T> = (0..n)
            .map(|i| {
                let dn = prob.q * h2 * u[i].signum() * u[i].abs().powf(prob.q - T::one());
                pq * dn / m_val - dg[i] / g_val
            })
            .collect();
        // Sobolev gradient: Laplacian-preconditioned direction.
        let mut dir = vec![T::zero(); n];
        pcg(&lap, &grad, &mut dir, T::lit(1e-6))?;
        let slope = dot(&grad, &dir);
        if !(slope > T::zero()) {
            break;
        }
        // First step moves u by half its sup norm: invariant under scaling of
        // the domain, so the calm-steps stop rule cannot fire during ramp-up.
        let sup = |v: &[T]| v.iter().fold(T::zero(), |m, x| fmax(m, x.abs()));
        let mut t = step.map_or_else(|| T::half() * sup(&u) / sup(&dir), |s| s * T::two());
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial = u.clone();
            axpy(t, &dir, &mut trial);
            prob.normalize(&mut trial);
            let ft = prob.log_ratio(&trial);
            if ft.is_finite() && ft >= f + T::lit(1e-4) * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            t *= T::half();
        }
        let Some((trial, ft)) = accepted else { break };
        let change = (ft - f).abs();
        u = trial;
        f = ft;
        step = Some(t);
        // log J changes by the relative change of J to first order.
        if change <= tol {
            calm += 1;
            if calm >= 3 {
                return Ok(f.exp());
            }
        } else {
            calm = 0;
        }
    }
    if calm > 0 {
        return Ok(f.exp());
    }
    Err(PdeError::NoConvergence { iterations: opts.ps_max_iter })
}

/// One row of the coefficient sandwich
/// `σ₁/ρ₂ λ_j^D ≤ λ_j ≤ σ₂/ρ₁ λ_j^D + V₂/ρ₁`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub j: usize,
    pub lambda: f64,
    pub lambda_dirichlet: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub bounds: CoefficientBounds,
    pub rows: Vec<SandwichRow>,
    /// Every margin is at least `−tolerance`.
    pub pass: bool,
    pub tolerance: f64,
}

pub fn ede_bounds_check<T: Real>(
    region: &OpenRegion<T>,
    coeff: &Coefficients<T>,
    k: usize,
    opts: &PdeOptions,
) -> Result<SandwichReport, PdeError> {
    let lam = eigenvalues(region, coeff, k, opts)?;
    let lam_d = if coeff.is_laplacian() {
        lam.clone()
    } else {
        eigenvalues(region, &Coefficients::laplacian(), k, opts)?
    };
    let b = coeff.bounds();
    let mut rows = Vec::with_capacity(k);
    let mut worst = f64::INFINITY;
    let mut scale = 1.0f64;
    for j in 0..k {
        let l = lam.values[j].to_f64_lossy();
        let ld = lam_d.values[j].to_f64_lossy();
        let lower = b.sigma.0 / b.rho.1 * ld;
        let upper = b.sigma.1 / b.rho.0 * ld + b.v_max / b.rho.0;
        let row = SandwichRow {
            j: j + 1,
            lambda: l,
            lambda_dirichlet: ld,
            lower,
            upper,
            lower_margin: l - lower,
            upper_margin: upper - l,
        };
        worst = worst.min(row.lower_margin).min(row.upper_margin);
        scale = scale.max(upper.abs());
        rows.push(row);
    }
    // Eigenvalue errors are second order in the residual; this leaves room
    // for rounding in the tight (constant coefficient) case.
    let tolerance = 1e-9 * scale;
    Ok(SandwichReport { bounds: b, rows, pass: worst >= -tolerance, tolerance })
}

/// Writes a nodal field as `i,j,value` rows.
pub fn write_field_csv<T: Real, W: Write>(grid: &Grid<T>, values: &[T], mut w: W) -> io::Result<()> {
    writeln!(w, "i,j,value")?;
    for (k, v) in values.iter().enumerate() {
        let (i, j) = grid.ij(k);
        writeln!(w, "{i},{j},{v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{CurveNetwork, DomainSpec};
    use crate::grid::rasterize;

    fn region(domain: &DomainSpec<f64>, net: Option<&CurveNetwork<f64>>, h: f64) -> OpenRegion<f64> {
        OpenRegion::new(Arc::new(rasterize(domain, net, h).unwrap()))
    }

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    #[test]
    fn square_first_eigenvalue() {
        let r = region(&DomainSpec::unit_square(), None, 1.0 / 64.0);
        let s = eigenvalues(&r, &Coefficients::laplacian(), 3, &PdeOptions::default()).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((s.values[0] / (2.0 * pi2) - 1.0).abs() < 1e-3);
        assert!((s.values[1] - s.values[2]).abs() < 1e-8 * s.values[1]);
        assert!((s.values[1] / (5.0 * pi2) - 1.0).abs() < 3e-3);
        assert!(s.residuals.iter().all(|&r| r <= 1e-6));
    }

    #[test]
    fn constant_coefficients_shift_and_scale() {
        let r = region(&DomainSpec::unit_square(), None, 1.0 / 32.0);
        let o = PdeOptions::default();
        let l = eigenvalues(&r, &Coefficients::laplacian(), 3, &o).unwrap();
        let c = eigenvalues(&r, &Coefficients::constant(2.0, 1.0, 3.0), 3, &o).unwrap();
        for j in 0..3 {
            assert!((c.values[j] - (2.0 * l.values[j] + 3.0)).abs() < 1e-9 * c.values[j]);
        }
        let rep = ede_bounds_check(&r, &Coefficients::constant(2.0, 1.0, 3.0), 3, &o).unwrap();
        assert!(rep.pass);
        for row in &rep.rows {
            assert!(row.lower_margin.abs() < 1e-9 * row.lambda || row.upper_margin.abs() < 1e-9 * row.lambda);
        }
    }

    #[test]
    fn two_components_merge() {
        let sq = DomainSpec::unit_square();
        let chord = CurveNetwork::segment(p(0.5, 0.0), p(0.5, 1.0)).unwrap();
        let r = region(&sq, Some(&chord), 1.0 / 32.0);
        assert_eq!(r.components().len(), 2);
        let s = eigenvalues(&r, &Coefficients::laplacian(), 2, &PdeOptions::default()).unwrap();
        assert!((s.values[0] - s.values[1]).abs() < 1e-8 * s.values[0]);
    }

    #[test]
    fn not_enough_modes() {
        let r = region(&DomainSpec::unit_square(), None, 0.25);
        assert_eq!(r.node_count(), 9);
        let e = eigenvalues(&r, &Coefficients::laplacian(), 10, &PdeOptions::default());
        assert_eq!(e.unwrap_err(), PdeError::NotEnoughModes { wanted: 10, available: 9 });
    }

    #[test]
    fn torsion_disk_and_positivity() {
        let disk = DomainSpec::disk(p(0.0, 0.0), 1.0, 512).unwrap();
        let r = region(&disk, None, 1.0 / 64.0);
        let t = solve_torsion(&r, &PdeOptions::default()).unwrap();
        assert!((t.max_value / 0.25 - 1.0).abs() < 0.03, "{}", t.max_value);
        for comp in r.components() {
            for &k in comp {
                assert!(t.w[k] > 0.0);
            }
        }
        // ∫ (1 − |x|²)/4 = π/8.
        assert!((t.l1_value / (std::f64::consts::PI / 8.0) - 1.0).abs() < 0.05);
        // |∇w| = |x|/2 peaks at 1/2 on the boundary; the staircase boundary
        // perturbs the one-sided differences there by O(h)-relative amounts.
        assert!(t.grad_max > 0.4 && t.grad_max < 0.65, "{}", t.grad_max);
    }

    #[test]
    fn torsion_empty() {
        let g = Arc::new(rasterize(&DomainSpec::unit_square(), None, 0.1).unwrap());
        let t = solve_torsion(&OpenRegion::empty(g), &PdeOptions::default()).unwrap();
        assert_eq!(t.max_value, 0.0);
        assert_eq!(t.l1_value, 0.0);
    }

    #[test]
    fn exponent_range() {
        assert!(check_exponents(2.0, 3.0).is_ok());
        assert!(check_exponents(1.5, 5.9).is_ok());
        assert!(check_exponents(1.5, 6.0).is_err());
        assert!(check_exponents(2.0, 1.5).is_err());
        assert!(check_exponents(1.0, 1.0).is_err());
    }

    #[test]
    fn ps_two_two_matches_ascent() {
        // The ascent at p = q = 2 must agree with the eigenvalue route.
        let r = region(&DomainSpec::unit_square(), None, 1.0 / 24.0);
        let o = PdeOptions::default();
        let direct = poincare_sobolev(&r, 2.0, 2.0, &o).unwrap();
        let grid = r.grid();
        let ascent = ps_component(grid, r.free(), &r.components()[0], 2.0, 2.0, &o).unwrap();
        assert!((ascent / direct - 1.0).abs() < 1e-4, "{ascent} {direct}");
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((direct * 2.0 * pi2 - 1.0).abs() < 5e-3);
    }

    #[test]
    fn ps_general_exponents_positive() {
        let r = region(&DomainSpec::unit_square(), None, 1.0 / 24.0);
        let o = PdeOptions::default();
        for (pp, qq) in [(2.0, 3.0), (1.5, 1.5), (1.5, 3.0)] {
            let c = poincare_sobolev(&r, pp, qq, &o).unwrap();
            assert!(c > 0.0 && c.is_finite());
        }
    }
}
