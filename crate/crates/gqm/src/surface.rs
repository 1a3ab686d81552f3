//! Discretized maps from a planar domain into projective space, and the
//! integral version of the energy identity on them.
//!
//! A [`SurfaceMap`] stores one state per node of a tensor grid. Finite
//! differences of neighboring states (phase-aligned, then horizontally
//! projected) approximate the differential of the underlying projective
//! map, and trapezoidal quadrature turns the pointwise densities into the
//! Dirichlet energy, the induced area, the symplectic area, and the
//! antiholomorphic energy. For holomorphic samples the last one vanishes
//! under refinement, and energy, area, and symplectic area all converge to
//! the same number — the discrete shadow of "holomorphic maps are the
//! minimizers".
//!
//! Grids can carry a circular mask so that quadrature runs over an inscribed
//! disk instead of the full rectangle; closed-form disk integrals of the
//! Fubini-Study area then serve as oracles. Node values outside the mask are
//! kept (finite differences near the rim still use them) but carry zero
//! quadrature weight.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{GqmError, Result};
use crate::hilbert::{
    horizontal_projection, standard_complex_gaussian, CVector, HorizontalTangent, StateVector,
};
use crate::pointwise::{identity_report, MapDifferential};
use crate::projective::project;

/// Tensor-product grid on a rectangle [s_min, s_max] x [t_min, t_max],
/// optionally masked to the centered disk of a given radius.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid {
    s_min: f64,
    s_max: f64,
    t_min: f64,
    t_max: f64,
    n_s: usize,
    n_t: usize,
    mask_radius: Option<f64>,
}

impl Grid {
    pub fn new(s_range: (f64, f64), t_range: (f64, f64), n_s: usize, n_t: usize) -> Result<Self> {
        let grid = Grid {
            s_min: s_range.0,
            s_max: s_range.1,
            t_min: t_range.0,
            t_max: t_range.1,
            n_s,
            n_t,
            mask_radius: None,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Square grid [-half_width, half_width]^2 with n nodes per axis.
    pub fn centered_square(half_width: f64, n: usize) -> Result<Self> {
        Grid::new((-half_width, half_width), (-half_width, half_width), n, n)
    }

    /// Square grid circumscribing the centered disk of the given radius,
    /// with quadrature masked to that disk.
    pub fn disk(radius: f64, n: usize) -> Result<Self> {
        Grid::centered_square(radius, n)?.with_mask_radius(radius)
    }

    /// Restricts quadrature to the centered disk of the given radius.
    pub fn with_mask_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GqmError::InvalidParameter(format!(
                "mask radius must be positive and finite, got {radius}"
            )));
        }
        self.mask_radius = Some(radius);
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.n_s < 3 || self.n_t < 3 {
            return Err(GqmError::GridTooSmall {
                n_s: self.n_s,
                n_t: self.n_t,
            });
        }
        for (lo, hi, name) in [(self.s_min, self.s_max, "s"), (self.t_min, self.t_max, "t")] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(GqmError::InvalidParameter(format!(
                    "{name}-range [{lo}, {hi}] is not a finite increasing interval"
                )));
            }
        }
        if let Some(r) = self.mask_radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(GqmError::InvalidParameter(format!(
                    "mask radius must be positive and finite, got {r}"
                )));
            }
        }
        Ok(())
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn s_range(&self) -> (f64, f64) {
        (self.s_min, self.s_max)
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.t_min, self.t_max)
    }

    pub fn mask_radius(&self) -> Option<f64> {
        self.mask_radius
    }

    pub fn ds(&self) -> f64 {
        (self.s_max - self.s_min) / (self.n_s - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        (self.t_max - self.t_min) / (self.n_t - 1) as f64
    }

    pub fn node_s(&self, i: usize) -> f64 {
        self.s_min + i as f64 * self.ds()
    }

    pub fn node_t(&self, j: usize) -> f64 {
        self.t_min + j as f64 * self.dt()
    }

    pub fn node_count(&self) -> usize {
        self.n_s * self.n_t
    }

    /// Row-major node index, rows along s.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_t + j
    }

    fn check_node(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.n_s || j >= self.n_t {
            return Err(GqmError::NodeOutOfRange {
                i,
                j,
                n_s: self.n_s,
                n_t: self.n_t,
            });
        }
        Ok(())
    }

    /// Whether the node lies inside the quadrature region (always true for
    /// unmasked grids; the mask boundary circle counts as inside).
    pub fn in_mask(&self, i: usize, j: usize) -> bool {
        match self.mask_radius {
            None => true,
            Some(r) => {
                let s = self.node_s(i);
                let t = self.node_t(j);
                s * s + t * t <= r * r * (1.0 + 1e-12)
            }
        }
    }

    /// Trapezoidal quadrature weight of a node; zero outside the mask.
    pub fn node_weight(&self, i: usize, j: usize) -> f64 {
        if !self.in_mask(i, j) {
            return 0.0;
        }
        let ws = if i == 0 || i == self.n_s - 1 {
            0.5
        } else {
            1.0
        };
        let wt = if j == 0 || j == self.n_t - 1 {
            0.5
        } else {
            1.0
        };
        ws * wt * self.ds() * self.dt()
    }

    /// True on the rectangle edge, where maps keep Dirichlet data.
    fn on_rim(&self, i: usize, j: usize) -> bool {
        i == 0 || i == self.n_s - 1 || j == 0 || j == self.n_t - 1
    }
}

/// One state per grid node, plus the Dirichlet mask of nodes that
/// perturbation and relaxation must leave untouched.
#[derive(Debug, Clone)]
pub struct SurfaceMap {
    grid: Grid,
    values: Vec<StateVector>,
    boundary_fixed: Vec<bool>,
}

impl SurfaceMap {
    /// Builds a map by sampling a raw-amplitude field and normalizing each
    /// node. Rectangle-edge nodes are marked boundary-fixed.
    pub fn from_fn<F>(grid: Grid, mut f: F) -> Result<Self>
    where
        F: FnMut(f64, f64) -> Result<CVector>,
    {
        grid.validate()?;
        let mut values = Vec::with_capacity(grid.node_count());
        let mut boundary_fixed = Vec::with_capacity(grid.node_count());
        for i in 0..grid.n_s {
            for j in 0..grid.n_t {
                let raw = f(grid.node_s(i), grid.node_t(j))?;
                values.push(StateVector::normalized(raw)?);
                boundary_fixed.push(grid.on_rim(i, j));
            }
        }
        SurfaceMap::from_values(grid, values, boundary_fixed)
    }

    /// Assembles a map from parts; lengths and state dimensions must agree.
    pub fn from_values(
        grid: Grid,
        values: Vec<StateVector>,
        boundary_fixed: Vec<bool>,
    ) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.node_count() {
            return Err(GqmError::DimensionMismatch {
                expected: grid.node_count(),
                found: values.len(),
            });
        }
        if boundary_fixed.len() != grid.node_count() {
            return Err(GqmError::DimensionMismatch {
                expected: grid.node_count(),
                found: boundary_fixed.len(),
            });
        }
        if let Some(first) = values.first() {
            let dim = first.dim();
            for v in &values {
                if v.dim() != dim {
                    return Err(GqmError::DimensionMismatch {
                        expected: dim,
                        found: v.dim(),
                    });
                }
            }
        }
        Ok(SurfaceMap {
            grid,
            values,
            boundary_fixed,
        })
    }

    /// The same state at every node.
    pub fn constant(grid: Grid, psi: &StateVector) -> Result<Self> {
        SurfaceMap::from_fn(grid, |_, _| Ok(psi.components().clone()))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.values[0].dim()
    }

    pub fn value(&self, i: usize, j: usize) -> Result<&StateVector> {
        self.grid.check_node(i, j)?;
        Ok(&self.values[self.grid.index(i, j)])
    }

    pub fn values(&self) -> &[StateVector] {
        &self.values
    }

    pub fn is_boundary_fixed(&self, i: usize, j: usize) -> Result<bool> {
        self.grid.check_node(i, j)?;
        Ok(self.boundary_fixed[self.grid.index(i, j)])
    }

    pub fn boundary_fixed(&self) -> &[bool] {
        &self.boundary_fixed
    }

    /// Serializes to the documented JSON layout: grid metadata, state
    /// dimension, row-major node arrays of [re, im] pairs per component,
    /// and the boundary mask.
    pub fn to_json(&self) -> Result<String> {
        let values = self
            .values
            .iter()
            .map(|v| v.components().iter().map(|z| [z.re, z.im]).collect())
            .collect();
        let doc = SurfaceMapJson {
            grid: self.grid.clone(),
            dim: self.dim(),
            values,
            boundary_fixed: self.boundary_fixed.clone(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| GqmError::Serialization(e.to_string()))
    }

    /// Parses the JSON layout produced by [`SurfaceMap::to_json`], rejecting
    /// wrong lengths and non-unit node values.
    pub fn from_json(text: &str, cfg: &Config) -> Result<Self> {
        let doc: SurfaceMapJson =
            serde_json::from_str(text).map_err(|e| GqmError::Serialization(e.to_string()))?;
        let mut values = Vec::with_capacity(doc.values.len());
        for node in &doc.values {
            if node.len() != doc.dim {
                return Err(GqmError::DimensionMismatch {
                    expected: doc.dim,
                    found: node.len(),
                });
            }
            let v =
                CVector::from_iterator(node.len(), node.iter().map(|p| Complex64::new(p[0], p[1])));
            values.push(StateVector::new(v, cfg)?);
        }
        SurfaceMap::from_values(doc.grid, values, doc.boundary_fixed)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path, cfg: &Config) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        SurfaceMap::from_json(&text, cfg)
    }
}

#[derive(Serialize, Deserialize)]
struct SurfaceMapJson {
    grid: Grid,
    dim: usize,
    values: Vec<Vec<[f64; 2]>>,
    boundary_fixed: Vec<bool>,
}

/// Rotates `neighbor` by the phase that makes its overlap with `center`
/// real and positive, so that differences measure genuine ray motion
/// rather than gauge drift. Orthogonal neighbors are left as they are.
fn phase_aligned(center: &StateVector, neighbor: &StateVector) -> CVector {
    let z = center.components().dotc(neighbor.components());
    let m = z.norm();
    if m < 1e-300 {
        return neighbor.components().clone();
    }
    neighbor.components() * (z.conj() / m)
}

/// Finite-difference differential of the map at a node: centered stencils
/// inside, second-order one-sided stencils on the rectangle edge, each
/// difference phase-aligned to the node and horizontally projected there,
/// then carried to the node's canonical representative.
pub fn discrete_differential(
    map: &SurfaceMap,
    i: usize,
    j: usize,
    cfg: &Config,
) -> Result<MapDifferential> {
    map.grid.check_node(i, j)?;
    let center = map.value(i, j)?;
    let along_s = stencil_difference(map, center, i, j, true)?;
    let along_t = stencil_difference(map, center, i, j, false)?;
    let hs = horizontal_projection(&along_s, center, cfg)?;
    let ht = horizontal_projection(&along_t, center, cfg)?;

    // carry the tangents to the canonical representative of the ray: if
    // the canonical rep is e^{i theta} psi, horizontal vectors transport by
    // the same phase, recovered here as <psi, canonical rep>
    let base = project(center.components())?;
    let phase = center.components().dotc(base.rep().components());
    let ds = HorizontalTangent::new(base.rep().clone(), hs.vector() * phase, cfg)?;
    let dt = HorizontalTangent::new(base.rep().clone(), ht.vector() * phase, cfg)?;
    MapDifferential::new(base, ds, dt, cfg)
}

/// Difference quotient along one axis, phase-aligning every neighbor to
/// the center node before it enters the stencil.
fn stencil_difference(
    map: &SurfaceMap,
    center: &StateVector,
    i: usize,
    j: usize,
    along_s: bool,
) -> Result<CVector> {
    let (pos, count, spacing) = if along_s {
        (i, map.grid.n_s, map.grid.ds())
    } else {
        (j, map.grid.n_t, map.grid.dt())
    };
    let value = |k: usize| -> Result<CVector> {
        let v = if along_s {
            map.value(k, j)?
        } else {
            map.value(i, k)?
        };
        Ok(phase_aligned(center, v))
    };
    let half = Complex64::new(0.5 / spacing, 0.0);
    let diff = if pos > 0 && pos + 1 < count {
        (value(pos + 1)? - value(pos - 1)?) * half
    } else if pos == 0 {
        let f0 = center.components() * Complex64::new(-3.0, 0.0);
        (f0 + value(1)? * Complex64::new(4.0, 0.0) - value(2)?) * half
    } else {
        let f0 = center.components() * Complex64::new(3.0, 0.0);
        (f0 - value(count - 2)? * Complex64::new(4.0, 0.0) + value(count - 3)?) * half
    };
    Ok(diff)
}

/// The four quadrature functionals of a discretized map, produced together
/// by [`energy_identity_integral`].
#[derive(Debug, Clone, Serialize)]
pub struct EnergyBreakdown {
    /// Dirichlet energy: quadrature of hbar (|d_s|^2 + |d_t|^2) in the
    /// ambient Fubini-Study metric.
    pub energy: f64,
    /// Induced area: quadrature of sqrt(det h) of the pullback metric.
    pub area: f64,
    /// Symplectic area: quadrature of Omega(d_s, d_t).
    pub symplectic: f64,
    /// Antiholomorphic energy: quadrature of the pointwise dbar density.
    pub dbar: f64,
}

impl EnergyBreakdown {
    /// energy - dbar - symplectic. Since dbar + symplectic recombine into
    /// the induced area node by node, this equals the conformality defect
    /// energy - area: nonnegative up to rounding, vanishing under
    /// refinement exactly for conformal (e.g. holomorphic) samples.
    pub fn identity_residual(&self) -> f64 {
        self.energy - self.dbar - self.symplectic
    }
}

fn quadrature<F>(map: &SurfaceMap, cfg: &Config, mut density: F) -> Result<f64>
where
    F: FnMut(&MapDifferential) -> Result<f64>,
{
    cfg.validate()?;
    let mut acc = 0.0;
    for i in 0..map.grid.n_s {
        for j in 0..map.grid.n_t {
            let w = map.grid.node_weight(i, j);
            if w == 0.0 {
                continue;
            }
            let d = discrete_differential(map, i, j, cfg)?;
            acc += w * density(&d)?;
        }
    }
    Ok(acc)
}

/// Dirichlet energy of the discretized map: quadrature of
/// hbar (|d_s|^2 + |d_t|^2), the ambient-metric energy density.
pub fn total_energy(map: &SurfaceMap, cfg: &Config) -> Result<f64> {
    quadrature(map, cfg, |d| {
        let v = d.d_s().vector();
        let w = d.d_t().vector();
        Ok(cfg.hbar * (v.dotc(v).re + w.dotc(w).re))
    })
}

/// Symplectic area of the discretized map: quadrature of Omega(d_s, d_t).
pub fn total_symplectic_area(map: &SurfaceMap, cfg: &Config) -> Result<f64> {
    quadrature(map, cfg, |d| {
        Ok(crate::pointwise::symplectic_form_coeff(d, cfg))
    })
}

/// Induced area of the discretized map: quadrature of sqrt(det h).
pub fn total_volume(map: &SurfaceMap, cfg: &Config) -> Result<f64> {
    quadrature(map, cfg, |d| crate::pointwise::energy_form_coeff(d, cfg))
}

/// All four functionals in one sweep over the grid.
pub fn energy_identity_integral(map: &SurfaceMap, cfg: &Config) -> Result<EnergyBreakdown> {
    cfg.validate()?;
    let mut out = EnergyBreakdown {
        energy: 0.0,
        area: 0.0,
        symplectic: 0.0,
        dbar: 0.0,
    };
    for i in 0..map.grid.n_s {
        for j in 0..map.grid.n_t {
            let w = map.grid.node_weight(i, j);
            if w == 0.0 {
                continue;
            }
            let d = discrete_differential(map, i, j, cfg)?;
            let report = identity_report(&d, cfg)?;
            let v = d.d_s().vector();
            let wt = d.d_t().vector();
            out.energy += w * cfg.hbar * (v.dotc(v).re + wt.dotc(wt).re);
            out.area += w * report.energy_coeff;
            out.symplectic += w * report.symplectic_coeff;
            out.dbar += w * report.dbar_norm_sq;
        }
    }
    Ok(out)
}

/// Samples the degree-d rational curve z -> [1 : z^d : 0 : ... : 0] into
/// CP^target_dim over the grid, normalizing each affine representative.
pub fn rational_curve_sample(degree: u32, grid: Grid, target_dim: usize) -> Result<SurfaceMap> {
    if degree < 1 {
        return Err(GqmError::InvalidParameter(
            "curve degree must be at least 1".into(),
        ));
    }
    if target_dim < 1 {
        return Err(GqmError::InvalidParameter(
            "target projective dimension must be at least 1".into(),
        ));
    }
    let dim = target_dim + 1;
    SurfaceMap::from_fn(grid, |s, t| {
        let z = Complex64::new(s, t);
        let mut v = CVector::zeros(dim);
        v[0] = Complex64::new(1.0, 0.0);
        v[1] = z.powu(degree);
        Ok(v)
    })
}

/// Adds a smooth random bump to the map: a few low sine modes on the
/// rectangle (times a radial cutoff when the grid is masked, so the bump
/// vanishes at the disk rim), with one random complex direction per mode.
/// Boundary-fixed nodes are returned bitwise unchanged, as is the whole map
/// at amplitude zero. Same seed, same bump.
pub fn perturb(map: &SurfaceMap, amplitude: f64, seed: u64) -> Result<SurfaceMap> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(GqmError::InvalidParameter(format!(
            "perturbation amplitude must be nonnegative and finite, got {amplitude}"
        )));
    }
    let grid = &map.grid;
    let dim = map.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // mode table drawn up front so the bump is a fixed smooth field
    let mut modes = Vec::new();
    for k in 1..=3u32 {
        for l in 1..=3u32 {
            let coeff = standard_complex_gaussian(&mut rng) / 3.0;
            let direction = CVector::from_fn(dim, |_, _| standard_complex_gaussian(&mut rng));
            modes.push((k as f64, l as f64, coeff, direction));
        }
    }
    let (s_min, s_max) = grid.s_range();
    let (t_min, t_max) = grid.t_range();
    let mut values = Vec::with_capacity(map.values.len());
    for i in 0..grid.n_s {
        for j in 0..grid.n_t {
            let idx = grid.index(i, j);
            let old = &map.values[idx];
            if map.boundary_fixed[idx] || amplitude == 0.0 {
                values.push(old.clone());
                continue;
            }
            let s = grid.node_s(i);
            let t = grid.node_t(j);
            let cutoff = match grid.mask_radius {
                None => 1.0,
                Some(r) => {
                    let q = 1.0 - (s * s + t * t) / (r * r);
                    if q <= 0.0 {
                        0.0
                    } else {
                        q * q
                    }
                }
            };
            if cutoff == 0.0 {
                values.push(old.clone());
                continue;
            }
            let sigma = (s - s_min) / (s_max - s_min);
            let tau = (t - t_min) / (t_max - t_min);
            let mut bump = CVector::zeros(dim);
            for (k, l, coeff, direction) in &modes {
                let shape = (k * std::f64::consts::PI * sigma).sin()
                    * (l * std::f64::consts::PI * tau).sin();
                bump += direction * (*coeff * shape);
            }
            let scale = Complex64::new(amplitude * cutoff, 0.0);
            values.push(StateVector::normalized(old.components() + bump * scale)?);
        }
    }
    SurfaceMap::from_values(grid.clone(), values, map.boundary_fixed.clone())
}

/// Edge weight tables for the relaxation energy: every horizontal and
/// vertical nearest-neighbor pair, weighted by the transverse trapezoid
/// factor over the squared edge length. Masked grids keep only edges with
/// both endpoints inside the disk.
fn relaxation_edges(grid: &Grid) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    let ds = grid.ds();
    let dt = grid.dt();
    for i in 0..grid.n_s {
        for j in 0..grid.n_t {
            if i + 1 < grid.n_s && grid.in_mask(i, j) && grid.in_mask(i + 1, j) {
                let wt = if j == 0 || j == grid.n_t - 1 {
                    0.5
                } else {
                    1.0
                };
                edges.push((grid.index(i, j), grid.index(i + 1, j), wt * dt / ds));
            }
            if j + 1 < grid.n_t && grid.in_mask(i, j) && grid.in_mask(i, j + 1) {
                let ws = if i == 0 || i == grid.n_s - 1 {
                    0.5
                } else {
                    1.0
                };
                edges.push((grid.index(i, j), grid.index(i, j + 1), ws * ds / dt));
            }
        }
    }
    edges
}

fn edge_energy_term(a: &CVector, b: &CVector) -> f64 {
    1.0 - a.dotc(b).norm_sqr()
}

/// The discrete objective driven to a minimum by [`harmonic_relax`]: a
/// gauge-invariant edge sum hbar sum_e c_e (1 - |<a_e, b_e>|^2) that
/// converges to the Dirichlet energy under refinement. Exposed so that the
/// analytic gradient can be checked externally.
pub fn relaxation_energy(map: &SurfaceMap, cfg: &Config) -> Result<f64> {
    cfg.validate()?;
    let edges = relaxation_edges(&map.grid);
    Ok(edge_energy(&map.values, &edges, cfg.hbar))
}

fn edge_energy(values: &[StateVector], edges: &[(usize, usize, f64)], hbar: f64) -> f64 {
    let mut acc = 0.0;
    for &(p, q, c) in edges {
        acc += c * edge_energy_term(values[p].components(), values[q].components());
    }
    hbar * acc
}

/// Contribution to the relaxation energy of the edges incident to one node,
/// with that node's value replaced by an arbitrary (not necessarily unit)
/// vector. This is the finite-difference harness for gradient checks: the
/// objective extends smoothly off the unit spheres, and non-incident edges
/// cancel exactly in central differences.
pub fn relaxation_local_energy(
    map: &SurfaceMap,
    i: usize,
    j: usize,
    replacement: &CVector,
    cfg: &Config,
) -> Result<f64> {
    cfg.validate()?;
    map.grid.check_node(i, j)?;
    if replacement.len() != map.dim() {
        return Err(GqmError::DimensionMismatch {
            expected: map.dim(),
            found: replacement.len(),
        });
    }
    let node = map.grid.index(i, j);
    let mut acc = 0.0;
    for &(p, q, c) in &relaxation_edges(&map.grid) {
        if p == node {
            acc += c * edge_energy_term(replacement, map.values[q].components());
        } else if q == node {
            acc += c * edge_energy_term(map.values[p].components(), replacement);
        }
    }
    Ok(cfg.hbar * acc)
}

/// Euclidean gradient of the relaxation energy with respect to the real and
/// imaginary parts of each node value (returned as one complex vector per
/// node: real parts of its entries are the d/dRe components, imaginary
/// parts the d/dIm components). Boundary-fixed nodes get zero.
pub fn relaxation_gradient(map: &SurfaceMap, cfg: &Config) -> Result<Vec<CVector>> {
    cfg.validate()?;
    let edges = relaxation_edges(&map.grid);
    Ok(edge_gradient(
        &map.values,
        &map.boundary_fixed,
        &edges,
        cfg.hbar,
    ))
}

fn edge_gradient(
    values: &[StateVector],
    boundary_fixed: &[bool],
    edges: &[(usize, usize, f64)],
    hbar: f64,
) -> Vec<CVector> {
    let dim = values[0].dim();
    let mut grad = vec![CVector::zeros(dim); values.len()];
    for &(p, q, c) in edges {
        let a = values[p].components();
        let b = values[q].components();
        let scale = Complex64::new(-2.0 * hbar * c, 0.0);
        // d/d conj(a) of -|<a,b>|^2 is -<b,a> b, and symmetrically for b
        if !boundary_fixed[p] {
            let overlap_ba = b.dotc(a);
            grad[p] += b * (scale * overlap_ba);
        }
        if !boundary_fixed[q] {
            let overlap_ab = a.dotc(b);
            grad[q] += a * (scale * overlap_ab);
        }
    }
    grad
}

/// Result of a relaxation run: the final map and the energy after each
/// accepted step, starting with the initial energy.
#[derive(Debug, Clone)]
pub struct RelaxOutcome {
    pub map: SurfaceMap,
    pub energy_trace: Vec<f64>,
}

const MAX_HALVINGS: u32 = 60;

/// Projected gradient descent on the relaxation energy with Dirichlet
/// boundary data: each step moves every free node against the gradient,
/// projects the motion onto the sphere tangent space, and renormalizes.
/// Steps that would raise the energy trigger step-size halving (backoff);
/// accepted steps let the step size recover toward its initial value. The
/// returned trace is non-increasing by construction. Stops early when the
/// gradient is at rounding scale.
pub fn harmonic_relax(
    map: &SurfaceMap,
    steps: usize,
    step_size: f64,
    cfg: &Config,
) -> Result<RelaxOutcome> {
    cfg.validate()?;
    if !(step_size.is_finite() && step_size >= 0.0) {
        return Err(GqmError::InvalidParameter(format!(
            "step size must be nonnegative and finite, got {step_size}"
        )));
    }
    if !map.boundary_fixed.iter().any(|&b| b) {
        return Err(GqmError::InvalidParameter(
            "relaxation needs at least one boundary-fixed node".into(),
        ));
    }
    let edges = relaxation_edges(&map.grid);
    let mut values = map.values.clone();
    let mut energy = edge_energy(&values, &edges, cfg.hbar);
    let mut trace = vec![energy];
    if step_size == 0.0 {
        trace.resize(steps + 1, energy);
        return Ok(RelaxOutcome {
            map: SurfaceMap::from_values(map.grid.clone(), values, map.boundary_fixed.clone())?,
            energy_trace: trace,
        });
    }
    let mut eta = step_size;
    for step in 0..steps {
        let grad = edge_gradient(&values, &map.boundary_fixed, &edges, cfg.hbar);
        let grad_scale: f64 = grad.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt();
        if grad_scale <= 1e-13 * (1.0 + energy.abs()) {
            break;
        }
        let mut halvings = 0;
        loop {
            let candidate = descend(&values, &grad, &map.boundary_fixed, eta)?;
            let new_energy = edge_energy(&candidate, &edges, cfg.hbar);
            if new_energy <= energy {
                values = candidate;
                energy = new_energy;
                trace.push(energy);
                eta = (eta * 1.2).min(step_size);
                break;
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(GqmError::ConvergenceFailure { step, halvings });
            }
            eta *= 0.5;
        }
    }
    Ok(RelaxOutcome {
        map: SurfaceMap::from_values(map.grid.clone(), values, map.boundary_fixed.clone())?,
        energy_trace: trace,
    })
}

/// One descent sweep: v <- normalize(v - eta * tangential gradient).
fn descend(
    values: &[StateVector],
    grad: &[CVector],
    boundary_fixed: &[bool],
    eta: f64,
) -> Result<Vec<StateVector>> {
    let mut out = Vec::with_capacity(values.len());
    for (idx, v) in values.iter().enumerate() {
        if boundary_fixed[idx] {
            out.push(v.clone());
            continue;
        }
        let g = &grad[idx];
        let radial = v.components().dotc(g);
        let tangential = g - v.components() * radial;
        let moved = v.components() - tangential * Complex64::new(eta, 0.0);
        out.push(StateVector::normalized(moved)?);
    }
    Ok(out)
}
