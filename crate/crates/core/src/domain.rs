//! Domains in ℂⁿ described by defining functions, positive densities, and the
//! uniform Cartesian grids the discrete operators live on.
//!
//! Points of ℂⁿ are stored as real vectors `[x₁, y₁, x₂, y₂, …]` of length
//! `2n`, with `z_j = x_j + i·y_j`.

use std::collections::VecDeque;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::hessian::HessianStencil;
use crate::linsolve::Factorization;
use crate::{Error, Result};

const VOLUME_SAMPLES: usize = 256;
const VOLUME_SEED: u64 = 0x00c0_ffee;

/// Polynomial in the `2n` real coordinates, stored as a sum of monomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coefficient: f64,
    /// Exponent per real axis; missing trailing axes have exponent zero.
    pub exponents: Vec<u32>,
}

impl Polynomial {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Self { terms }
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.exponents.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.exponents
                    .iter()
                    .zip(x)
                    .fold(t.coefficient, |acc, (&e, &xi)| acc * xi.powi(e as i32))
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DomainKind {
    Ball {
        center: Vec<Complex64>,
        radius: f64,
    },
    /// `Σ |z_j|² / a_j² < 1`.
    Ellipsoid { semi_axes: Vec<f64> },
    /// `{ρ < 0}` for a polynomial ρ of degree at most 4. The seed point must lie
    /// inside, and the box must contain the domain.
    CustomRho {
        rho: Polynomial,
        seed: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub complex_dim: usize,
}

impl DomainSpec {
    pub fn ball(center: Vec<Complex64>, radius: f64) -> Self {
        let complex_dim = center.len();
        Self {
            kind: DomainKind::Ball { center, radius },
            complex_dim,
        }
    }

    /// Ball centred at the origin.
    pub fn centered_ball(n: usize, radius: f64) -> Self {
        Self::ball(vec![Complex64::new(0.0, 0.0); n], radius)
    }

    pub fn ellipsoid(semi_axes: Vec<f64>) -> Self {
        let complex_dim = semi_axes.len();
        Self {
            kind: DomainKind::Ellipsoid { semi_axes },
            complex_dim,
        }
    }

    pub fn real_dim(&self) -> usize {
        2 * self.complex_dim
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.complex_dim;
        if n == 0 {
            return Err(Error::InvalidDomain("complex dimension must be >= 1".into()));
        }
        match &self.kind {
            DomainKind::Ball { center, radius } => {
                if center.len() != n {
                    return Err(Error::InvalidDomain(format!(
                        "ball centre has {} coordinates, expected {n}",
                        center.len()
                    )));
                }
                if !(*radius > 0.0) {
                    return Err(Error::InvalidDomain(format!("radius {radius} must be positive")));
                }
            }
            DomainKind::Ellipsoid { semi_axes } => {
                if semi_axes.len() != n {
                    return Err(Error::InvalidDomain(format!(
                        "{} semi-axes given, expected {n}",
                        semi_axes.len()
                    )));
                }
                if let Some(a) = semi_axes.iter().find(|a| !(**a > 0.0)) {
                    return Err(Error::InvalidDomain(format!("semi-axis {a} must be positive")));
                }
            }
            DomainKind::CustomRho {
                rho,
                seed,
                lower,
                upper,
            } => {
                let d = 2 * n;
                if seed.len() != d || lower.len() != d || upper.len() != d {
                    return Err(Error::InvalidDomain(format!(
                        "seed and box must have {d} real coordinates"
                    )));
                }
                if rho.degree() > 4 {
                    return Err(Error::InvalidDomain(format!(
                        "defining polynomial has degree {} > 4",
                        rho.degree()
                    )));
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l < u)) {
                    return Err(Error::InvalidDomain("empty bounding box".into()));
                }
                if !(rho.eval(seed) < 0.0) {
                    return Err(Error::InvalidDomain("rho >= 0 at the seed point".into()));
                }
            }
        }
        Ok(())
    }

    /// Axis-aligned box containing the closure of the domain.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.kind {
            DomainKind::Ball { center, radius } => {
                let c = complex_to_real(center);
                (
                    c.iter().map(|x| x - radius).collect(),
                    c.iter().map(|x| x + radius).collect(),
                )
            }
            DomainKind::Ellipsoid { semi_axes } => {
                let w: Vec<f64> = semi_axes.iter().flat_map(|&a| [a, a]).collect();
                (w.iter().map(|a| -a).collect(), w)
            }
            DomainKind::CustomRho { lower, upper, .. } => (lower.clone(), upper.clone()),
        }
    }

    /// Lattice anchor: the ball centre, or the centre of the bounding box.
    fn anchor(&self) -> Vec<f64> {
        match &self.kind {
            DomainKind::Ball { center, .. } => complex_to_real(center),
            _ => {
                let (lo, hi) = self.bounding_box();
                lo.iter().zip(&hi).map(|(l, u)| 0.5 * (l + u)).collect()
            }
        }
    }

    /// Largest admissible grid spacing (a quarter of the smallest extent).
    pub fn max_spacing(&self) -> f64 {
        match &self.kind {
            DomainKind::Ball { radius, .. } => radius / 4.0,
            DomainKind::Ellipsoid { semi_axes } => {
                semi_axes.iter().cloned().fold(f64::INFINITY, f64::min) / 4.0
            }
            DomainKind::CustomRho { lower, upper, .. } => {
                lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| 0.5 * (u - l))
                    .fold(f64::INFINITY, f64::min)
                    / 4.0
            }
        }
    }

    /// Euclidean volume in ℝ^{2n} when known in closed form.
    pub fn exact_volume(&self) -> Option<f64> {
        let d = self.real_dim();
        let unit = unit_ball_volume(d);
        match &self.kind {
            DomainKind::Ball { radius, .. } => Some(unit * radius.powi(d as i32)),
            DomainKind::Ellipsoid { semi_axes } => {
                Some(unit * semi_axes.iter().map(|a| a * a).product::<f64>())
            }
            DomainKind::CustomRho { .. } => None,
        }
    }
}

fn unit_ball_volume(d: usize) -> f64 {
    // V_d = π^{d/2} / Γ(d/2 + 1), d even here so Γ is a factorial.
    if d % 2 == 0 {
        std::f64::consts::PI.powi((d / 2) as i32) / crate::factorial(d / 2)
    } else {
        let k = (d - 1) / 2;
        // V_{2k+1} = 2 (k!) (4π)^k / (2k+1)!
        2.0 * crate::factorial(k) * (4.0 * std::f64::consts::PI).powi(k as i32)
            / crate::factorial(d)
    }
}

pub(crate) fn complex_to_real(z: &[Complex64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

/// Defining function ρ, negative inside. For balls `ρ = |z - a|² - R²`, so
/// `dd^c ρ = ω` exactly.
pub fn eval_rho(spec: &DomainSpec, x: &[f64]) -> f64 {
    match &spec.kind {
        DomainKind::Ball { center, radius } => {
            let mut s = 0.0;
            for (j, c) in center.iter().enumerate() {
                let dx = x[2 * j] - c.re;
                let dy = x[2 * j + 1] - c.im;
                s += dx * dx + dy * dy;
            }
            s - radius * radius
        }
        DomainKind::Ellipsoid { semi_axes } => {
            let mut s = 0.0;
            for (j, a) in semi_axes.iter().enumerate() {
                s += (x[2 * j] * x[2 * j] + x[2 * j + 1] * x[2 * j + 1]) / (a * a);
            }
            s - 1.0
        }
        DomainKind::CustomRho { rho, .. } => rho.eval(x),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DensitySpec {
    Constant(f64),
    Polynomial(Polynomial),
    /// `1 + amplitude · exp(-|x - centre|² / width²)`.
    GaussianBump {
        center: Vec<f64>,
        amplitude: f64,
        width: f64,
    },
}

impl DensitySpec {
    pub fn is_constant(&self) -> bool {
        matches!(self, DensitySpec::Constant(_))
    }
}

pub fn eval_density(d: &DensitySpec, x: &[f64]) -> f64 {
    match d {
        DensitySpec::Constant(c) => *c,
        DensitySpec::Polynomial(p) => p.eval(x),
        DensitySpec::GaussianBump {
            center,
            amplitude,
            width,
        } => {
            let r2: f64 = x
                .iter()
                .zip(center.iter().chain(std::iter::repeat(&0.0)))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            1.0 + amplitude * (-r2 / (width * width)).exp()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum NodeClass {
    Interior = 0,
    Boundary = 1,
    Exterior = 2,
}

/// Uniform Cartesian grid over the bounding box of a domain.
///
/// Nodes are numbered lexicographically with the first real axis varying
/// slowest. Unknowns of every solver are the interior nodes, addressed by
/// their position in [`GridDomain::interior`].
pub struct GridDomain {
    spec: DomainSpec,
    h: f64,
    origin: Vec<f64>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    classification: Vec<NodeClass>,
    interior: Vec<usize>,
    interior_index: Vec<usize>,
    offsets: Vec<f64>,
    cell_volume: Vec<f64>,
    pub(crate) stencil: OnceLock<HessianStencil>,
    pub(crate) laplace_factor: OnceLock<Factorization>,
}

impl std::fmt::Debug for GridDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridDomain")
            .field("spec", &self.spec)
            .field("h", &self.h)
            .field("dims", &self.dims)
            .field("interior", &self.interior.len())
            .finish()
    }
}

pub const NOT_INTERIOR: usize = usize::MAX;

/// Build the grid with spacing `h`. The lattice contains the anchor point
/// (ball centre or box centre), so halving `h` refines the node set.
pub fn build_grid(spec: DomainSpec, h: f64) -> Result<Arc<GridDomain>> {
    spec.validate()?;
    let limit = spec.max_spacing();
    if !(h > 0.0) || h > limit {
        return Err(Error::SpacingTooLarge { h, limit });
    }
    let d = spec.real_dim();
    let anchor = spec.anchor();
    let (lo, hi) = spec.bounding_box();
    let mut origin = Vec::with_capacity(d);
    let mut dims = Vec::with_capacity(d);
    for a in 0..d {
        let below = ((anchor[a] - lo[a]) / h).ceil() as usize + 1;
        let above = ((hi[a] - anchor[a]) / h).ceil() as usize + 1;
        origin.push(anchor[a] - below as f64 * h);
        dims.push(below + above + 1);
    }
    let mut strides = vec![1usize; d];
    for a in (0..d.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * dims[a + 1];
    }
    let total: usize = dims.iter().product();

    let mut grid = GridDomain {
        spec,
        h,
        origin,
        dims,
        strides,
        classification: vec![NodeClass::Exterior; total],
        interior: Vec::new(),
        interior_index: vec![NOT_INTERIOR; total],
        offsets: Vec::new(),
        cell_volume: vec![0.0; total],
        stencil: OnceLock::new(),
        laplace_factor: OnceLock::new(),
    };

    let mut x = vec![0.0; d];
    for idx in 0..total {
        grid.coords_into(idx, &mut x);
        if eval_rho(&grid.spec, &x) < 0.0 {
            grid.classification[idx] = NodeClass::Interior;
            grid.interior_index[idx] = grid.interior.len();
            grid.interior.push(idx);
        }
    }
    if grid.interior.is_empty() {
        return Err(Error::EmptyInterior);
    }
    for k in 0..grid.interior.len() {
        let idx = grid.interior[k];
        for a in 0..d {
            for step in [-1isize, 1] {
                if let Some(nb) = grid.neighbor(idx, &[(a, step)]) {
                    if grid.classification[nb] == NodeClass::Exterior {
                        grid.classification[nb] = NodeClass::Boundary;
                    }
                }
            }
        }
    }
    let components = grid.interior_components();
    if components > 1 {
        return Err(Error::ResolutionTooCoarse { components });
    }

    // Fractional distances to {ρ = 0} along each axis, ordered [-e_a, +e_a].
    let mut offsets = Vec::with_capacity(grid.interior.len() * 2 * d);
    for &idx in &grid.interior {
        for a in 0..d {
            for step in [-1isize, 1] {
                offsets.push(grid.step_fraction(idx, &[(a, step)]));
            }
        }
    }
    grid.offsets = offsets;
    grid.compute_cell_volumes();
    Ok(Arc::new(grid))
}

impl GridDomain {
    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn complex_dim(&self) -> usize {
        self.spec.complex_dim
    }

    pub fn real_dim(&self) -> usize {
        self.dims.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn node_count(&self) -> usize {
        self.classification.len()
    }

    pub fn classification(&self) -> &[NodeClass] {
        &self.classification
    }

    pub fn class(&self, idx: usize) -> NodeClass {
        self.classification[idx]
    }

    /// Node indices of interior nodes, in increasing order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Position of `idx` in [`Self::interior`], or [`NOT_INTERIOR`].
    pub fn interior_position(&self, idx: usize) -> usize {
        self.interior_index[idx]
    }

    pub fn cell_volumes(&self) -> &[f64] {
        &self.cell_volume
    }

    pub fn cell_volume(&self, idx: usize) -> f64 {
        self.cell_volume[idx]
    }

    /// Sum of clipped cell volumes over all nodes.
    pub fn total_volume(&self) -> f64 {
        self.cell_volume.iter().sum()
    }

    /// Fractional distance from interior node `idx` to `{ρ = 0}` along
    /// `sign · e_axis`; `1.0` when the neighbour is itself interior.
    pub fn boundary_offset(&self, idx: usize, axis: usize, positive: bool) -> f64 {
        let k = self.interior_index[idx];
        assert!(k != NOT_INTERIOR, "node {idx} is not interior");
        self.offsets[k * 2 * self.real_dim() + 2 * axis + usize::from(positive)]
    }

    /// Raw offset table, `2 · real_dim` entries per interior node.
    pub fn boundary_offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.real_dim()];
        self.coords_into(idx, &mut x);
        x
    }

    pub fn coords_into(&self, idx: usize, x: &mut [f64]) {
        let mut rem = idx;
        for a in 0..self.dims.len() {
            let i = rem / self.strides[a];
            rem %= self.strides[a];
            x[a] = self.origin[a] + i as f64 * self.h;
        }
    }

    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        let mut rem = idx;
        self.strides
            .iter()
            .map(|s| {
                let i = rem / s;
                rem %= s;
                i
            })
            .collect()
    }

    /// Node reached from `idx` by lattice steps `(axis, ±k)`, if inside the box.
    pub fn neighbor(&self, idx: usize, steps: &[(usize, isize)]) -> Option<usize> {
        let mut out = idx as isize;
        for &(a, s) in steps {
            let i = ((idx / self.strides[a]) % self.dims[a]) as isize + s;
            if i < 0 || i >= self.dims[a] as isize {
                return None;
            }
            out += s * self.strides[a] as isize;
        }
        Some(out as usize)
    }

    pub fn rho(&self, x: &[f64]) -> f64 {
        eval_rho(&self.spec, x)
    }

    /// Node nearest to a real point.
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let mut idx = 0;
        for a in 0..self.real_dim() {
            let i = ((x[a] - self.origin[a]) / self.h).round();
            let i = i.clamp(0.0, (self.dims[a] - 1) as f64) as usize;
            idx += i * self.strides[a];
        }
        idx
    }

    /// Interior node with the smallest value of ρ.
    pub fn deepest_interior_node(&self) -> usize {
        let mut best = self.interior[0];
        let mut best_rho = f64::INFINITY;
        for &idx in &self.interior {
            let r = self.rho(&self.coords(idx));
            if r < best_rho {
                best_rho = r;
                best = idx;
            }
        }
        best
    }

    /// Fraction `θ ∈ (0, 1]` of the step from interior node `idx` along the
    /// lattice displacement `steps` at which `{ρ = 0}` is first met; `1.0` if
    /// the target node is interior.
    pub(crate) fn step_fraction(&self, idx: usize, steps: &[(usize, isize)]) -> f64 {
        match self.neighbor(idx, steps) {
            Some(nb) if self.classification[nb] == NodeClass::Interior => 1.0,
            _ => {
                let p = self.coords(idx);
                let mut q = p.clone();
                for &(a, s) in steps {
                    q[a] += s as f64 * self.h;
                }
                self.segment_crossing(&p, &q)
            }
        }
    }

    /// Root of `θ ↦ ρ(p + θ(q - p))` in `(0, 1]`, given `ρ(p) < 0 ≤ ρ(q)`.
    pub fn segment_crossing(&self, p: &[f64], q: &[f64]) -> f64 {
        let dir: Vec<f64> = q.iter().zip(p).map(|(b, a)| b - a).collect();
        match &self.spec.kind {
            DomainKind::Ball { center, .. } => {
                let c = complex_to_real(center);
                let weights = vec![1.0; p.len()];
                quadratic_crossing(p, &dir, &c, &weights, eval_rho(&self.spec, p))
            }
            DomainKind::Ellipsoid { semi_axes } => {
                let c = vec![0.0; p.len()];
                let weights: Vec<f64> =
                    semi_axes.iter().flat_map(|a| [1.0 / (a * a), 1.0 / (a * a)]).collect();
                quadratic_crossing(p, &dir, &c, &weights, eval_rho(&self.spec, p))
            }
            DomainKind::CustomRho { .. } => {
                let at = |t: f64| {
                    let x: Vec<f64> = p.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
                    eval_rho(&self.spec, &x)
                };
                let (mut lo, mut hi) = (0.0, 1.0);
                if at(hi) < 0.0 {
                    return 1.0;
                }
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if at(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        }
    }

    fn interior_components(&self) -> usize {
        let mut seen = vec![false; self.node_count()];
        let mut components = 0;
        let mut queue = VecDeque::new();
        for &start in &self.interior {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(idx) = queue.pop_front() {
                for a in 0..self.real_dim() {
                    for step in [-1isize, 1] {
                        if let Some(nb) = self.neighbor(idx, &[(a, step)]) {
                            if !seen[nb] && self.classification[nb] == NodeClass::Interior {
                                seen[nb] = true;
                                queue.push_back(nb);
                            }
                        }
                    }
                }
            }
        }
        components
    }

    fn compute_cell_volumes(&mut self) {
        let d = self.real_dim();
        let full = self.h.powi(d as i32);
        let half = 0.5 * self.h;
        let mut rng = ChaCha8Rng::seed_from_u64(VOLUME_SEED);
        let mut x = vec![0.0; d];
        let mut y = vec![0.0; d];
        for idx in 0..self.node_count() {
            self.coords_into(idx, &mut x);
            let centre_inside = eval_rho(&self.spec, &x) < 0.0;
            let mut inside = 0usize;
            for mask in 0..(1usize << d) {
                for a in 0..d {
                    y[a] = x[a] + if mask >> a & 1 == 1 { half } else { -half };
                }
                if eval_rho(&self.spec, &y) < 0.0 {
                    inside += 1;
                }
            }
            let corners = 1usize << d;
            self.cell_volume[idx] = if inside == corners && centre_inside {
                full
            } else if inside == 0 && !centre_inside {
                0.0
            } else {
                let mut hits = 0usize;
                for _ in 0..VOLUME_SAMPLES {
                    for a in 0..d {
                        y[a] = x[a] + self.h * (rng.random::<f64>() - 0.5);
                    }
                    if eval_rho(&self.spec, &y) < 0.0 {
                        hits += 1;
                    }
                }
                full * hits as f64 / VOLUME_SAMPLES as f64
            };
        }
    }
}

/// Smallest root in `(0, 1]` of `Σ w_i (p_i + θ d_i - c_i)² - r² = 0` given its
/// value `rho_p < 0` at θ = 0.
fn quadratic_crossing(p: &[f64], dir: &[f64], c: &[f64], w: &[f64], rho_p: f64) -> f64 {
    let mut a = 0.0;
    let mut b = 0.0;
    for i in 0..p.len() {
        a += w[i] * dir[i] * dir[i];
        b += 2.0 * w[i] * (p[i] - c[i]) * dir[i];
    }
    let disc = b * b - 4.0 * a * rho_p;
    let theta = -2.0 * rho_p / (b + disc.sqrt());
    theta.clamp(f64::MIN_POSITIVE, 1.0)
}

/// Density values at every node. Positivity is checked on interior and
/// boundary nodes.
pub fn sample_density(d: &DensitySpec, grid: &GridDomain) -> Result<Vec<f64>> {
    let mut x = vec![0.0; grid.real_dim()];
    let mut out = vec![0.0; grid.node_count()];
    for idx in 0..grid.node_count() {
        grid.coords_into(idx, &mut x);
        let v = eval_density(d, &x);
        if grid.class(idx) != NodeClass::Exterior && !(v > 0.0) {
            return Err(Error::NonPositiveDensity { node: idx, value: v });
        }
        out[idx] = v;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_examples() {
        let ball = DomainSpec::centered_ball(1, 1.0);
        assert_eq!(eval_rho(&ball, &[0.0, 0.0]), -1.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(eval_rho(&ball, &[s, s]).abs() < 1e-15);
        let ell = DomainSpec::ellipsoid(vec![1.0, 2.0]);
        assert_eq!(eval_rho(&ell, &[0.0, 0.0, 0.0, 2.0]), 0.0);
    }

    #[test]
    fn density_examples() {
        assert_eq!(eval_density(&DensitySpec::Constant(1.0), &[0.3, 0.2]), 1.0);
        let bump = DensitySpec::GaussianBump {
            center: vec![0.0, 0.0],
            amplitude: 0.5,
            width: 1.0,
        };
        assert_eq!(eval_density(&bump, &[0.0, 0.0]), 1.5);
        let poly = DensitySpec::Polynomial(Polynomial::new(vec![
            Monomial { coefficient: 1.0, exponents: vec![] },
            Monomial { coefficient: 1.0, exponents: vec![2] },
        ]));
        assert_eq!(eval_density(&poly, &[1.0, 0.0, 0.0, 0.0]), 2.0);
    }

    #[test]
    fn coarse_disc_interior_matches_lattice_points() {
        let grid = build_grid(DomainSpec::centered_ball(1, 1.0), 0.25).unwrap();
        let mut expected = 0;
        for i in -4i32..=4 {
            for j in -4i32..=4 {
                let (x, y) = (i as f64 * 0.25, j as f64 * 0.25);
                if x * x + y * y < 1.0 {
                    expected += 1;
                    let idx = grid.nearest_node(&[x, y]);
                    assert_eq!(grid.class(idx), NodeClass::Interior);
                }
            }
        }
        assert_eq!(grid.interior().len(), expected);
        assert_eq!(grid.class(grid.nearest_node(&[0.0, 0.0])), NodeClass::Interior);
    }

    #[test]
    fn spacing_too_large_is_rejected() {
        let err = build_grid(DomainSpec::centered_ball(1, 1.0), 0.5).unwrap_err();
        assert!(matches!(err, Error::SpacingTooLarge { .. }));
    }

    #[test]
    fn invalid_specs() {
        assert!(DomainSpec::centered_ball(1, -1.0).validate().is_err());
        assert!(DomainSpec::ellipsoid(vec![1.0, 0.0]).validate().is_err());
        let outside_seed = DomainSpec {
            kind: DomainKind::CustomRho {
                rho: Polynomial::new(vec![Monomial { coefficient: 1.0, exponents: vec![] }]),
                seed: vec![0.0, 0.0],
                lower: vec![-1.0, -1.0],
                upper: vec![1.0, 1.0],
            },
            complex_dim: 1,
        };
        assert!(outside_seed.validate().is_err());
    }

    #[test]
    fn dumbbell_with_thin_neck_is_too_coarse() {
        // (x² - 1)² + y² - 0.02 splits into two lobes near x = ±1 at this spacing.
        let rho = Polynomial::new(vec![
            Monomial { coefficient: 1.0, exponents: vec![4, 0] },
            Monomial { coefficient: -2.0, exponents: vec![2, 0] },
            Monomial { coefficient: 1.0, exponents: vec![0, 2] },
            Monomial { coefficient: 1.0 - 0.02, exponents: vec![] },
        ]);
        let spec = DomainSpec {
            kind: DomainKind::CustomRho {
                rho,
                seed: vec![1.0, 0.0],
                lower: vec![-1.5, -1.5],
                upper: vec![1.5, 1.5],
            },
            complex_dim: 1,
        };
        let err = build_grid(spec, 0.125).unwrap_err();
        assert!(matches!(err, Error::ResolutionTooCoarse { components: 2 }));
    }

    #[test]
    fn offsets_hit_the_circle() {
        let grid = build_grid(DomainSpec::centered_ball(1, 1.0), 0.1).unwrap();
        for &idx in grid.interior() {
            let x = grid.coords(idx);
            for a in 0..2 {
                for positive in [false, true] {
                    let t = grid.boundary_offset(idx, a, positive);
                    assert!(t > 0.0 && t <= 1.0);
                    if t < 1.0 {
                        let mut y = x.clone();
                        y[a] += if positive { t } else { -t } * grid.h();
                        assert!(grid.rho(&y).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
