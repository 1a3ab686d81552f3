//! States, observables, and Hamiltonian vector fields on the unit sphere of
//! a finite-dimensional complex Hilbert space.
//!
//! The inner product is conjugate-linear in its first argument. A tangent
//! vector at a unit state psi is *horizontal* when it is orthogonal to psi;
//! horizontal vectors are the representatives of tangents to projective
//! space used throughout the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::Config;
use crate::error::{GqmError, Result};

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Unit-norm vector in C^n, n >= 2. Construction rejects anything that is
/// not already normalized; use [`StateVector::normalized`] when you actually
/// want rescaling.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    components: CVector,
}

impl StateVector {
    /// Wraps a vector that must already have unit norm within `cfg.tol_eq`.
    pub fn new(components: CVector, cfg: &Config) -> Result<Self> {
        check_dim_at_least_two(components.len())?;
        let norm = components.norm();
        if (norm - 1.0).abs() > cfg.tol_eq {
            return Err(GqmError::NotNormalized { norm });
        }
        Ok(StateVector { components })
    }

    /// Explicitly rescales a nonzero vector to unit norm.
    pub fn normalized(components: CVector) -> Result<Self> {
        check_dim_at_least_two(components.len())?;
        let norm = components.norm();
        if norm < 1e-150 {
            return Err(GqmError::ZeroVector);
        }
        Ok(StateVector {
            components: components / Complex64::new(norm, 0.0),
        })
    }

    /// k-th standard basis state in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        check_dim_at_least_two(dim)?;
        if k >= dim {
            return Err(GqmError::InvalidParameter(format!(
                "basis index {k} out of range for dimension {dim}"
            )));
        }
        let mut v = CVector::zeros(dim);
        v[k] = Complex64::new(1.0, 0.0);
        Ok(StateVector { components: v })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &CVector {
        &self.components
    }

    pub fn into_components(self) -> CVector {
        self.components
    }
}

/// Self-adjoint matrix acting as an observable. Hermiticity is checked once
/// at construction so downstream code can rely on real expectations.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix, cfg: &Config) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(GqmError::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        check_dim_at_least_two(matrix.nrows())?;
        let mut deviation = 0.0f64;
        for i in 0..matrix.nrows() {
            for j in 0..matrix.ncols() {
                let d = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                deviation = deviation.max(d);
            }
        }
        if deviation > cfg.tol_eq {
            return Err(GqmError::NotSelfAdjoint { deviation });
        }
        Ok(HermitianOperator { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// A psi, as a plain vector.
    pub fn apply(&self, psi: &StateVector) -> Result<CVector> {
        check_same_dim(self.dim(), psi.dim())?;
        Ok(&self.matrix * psi.components())
    }
}

/// Tangent vector at a unit state with zero overlap against the state, i.e.
/// a representative of a tangent to projective space.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizontalTangent {
    base: StateVector,
    vector: CVector,
}

impl HorizontalTangent {
    /// Requires `<base, vector> = 0` within `cfg.tol_eq` (scaled by the
    /// vector's size so large fields are not rejected for rounding noise).
    pub fn new(base: StateVector, vector: CVector, cfg: &Config) -> Result<Self> {
        check_same_dim(base.dim(), vector.len())?;
        let overlap = base.components().dotc(&vector).norm();
        if overlap > cfg.tol_eq * (1.0 + vector.norm()) {
            return Err(GqmError::NotHorizontal { overlap });
        }
        Ok(HorizontalTangent { base, vector })
    }

    pub fn zero(base: StateVector) -> Self {
        let dim = base.dim();
        HorizontalTangent {
            base,
            vector: CVector::zeros(dim),
        }
    }

    pub fn base(&self) -> &StateVector {
        &self.base
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn norm(&self) -> f64 {
        self.vector.norm()
    }

    /// True when both tangents sit at the same representative of the same
    /// fiber point.
    pub fn same_base(&self, other: &HorizontalTangent, cfg: &Config) -> bool {
        self.base.dim() == other.base.dim()
            && (self.base.components() - other.base.components()).norm() <= cfg.tol_eq
    }
}

/// Hermitian inner product, conjugate-linear in the first argument.
pub fn hermitian_inner(v: &CVector, w: &CVector) -> Result<Complex64> {
    check_same_dim(v.len(), w.len())?;
    Ok(v.dotc(w))
}

/// Expectation value <psi, A psi>. Real because A is self-adjoint.
pub fn expectation(a: &HermitianOperator, psi: &StateVector) -> Result<f64> {
    let apsi = a.apply(psi)?;
    Ok(psi.components().dotc(&apsi).re)
}

/// Commutator [A, B] = AB - BA. Anti-Hermitian, so returned as a plain matrix.
pub fn commutator(a: &HermitianOperator, b: &HermitianOperator) -> Result<CMatrix> {
    check_same_dim(a.dim(), b.dim())?;
    Ok(a.matrix() * b.matrix() - b.matrix() * a.matrix())
}

/// Hamiltonian vector field of the observable A at psi: (-i/hbar) A psi.
/// This is the full field on the sphere, vertical part included.
pub fn hamiltonian_field(
    a: &HermitianOperator,
    psi: &StateVector,
    cfg: &Config,
) -> Result<CVector> {
    cfg.validate()?;
    let apsi = a.apply(psi)?;
    Ok(apsi * (-I / cfg.hbar))
}

/// Projects v onto the horizontal subspace at psi: v - <psi, v> psi.
pub fn horizontal_projection(
    v: &CVector,
    psi: &StateVector,
    cfg: &Config,
) -> Result<HorizontalTangent> {
    check_same_dim(psi.dim(), v.len())?;
    let overlap = psi.components().dotc(v);
    let projected = v - psi.components() * overlap;
    HorizontalTangent::new(psi.clone(), projected, cfg)
}

/// Vertical and horizontal parts of a Hamiltonian field.
#[derive(Debug, Clone)]
pub struct FieldParts {
    /// Phase-direction component (-i/hbar) <A> psi.
    pub vertical: CVector,
    /// Projective component (-i/hbar) (A - <A>) psi.
    pub horizontal: HorizontalTangent,
}

/// Splits the Hamiltonian field of A at psi into its vertical part, which
/// only spins the phase, and its horizontal part, which moves the ray.
/// The two parts sum to [`hamiltonian_field`] and are orthogonal.
pub fn field_decompose(
    a: &HermitianOperator,
    psi: &StateVector,
    cfg: &Config,
) -> Result<FieldParts> {
    cfg.validate()?;
    let mean = expectation(a, psi)?;
    let apsi = a.apply(psi)?;
    let scale = -I / cfg.hbar;
    let vertical = psi.components() * (scale * mean);
    let horizontal_vec = (apsi - psi.components() * Complex64::new(mean, 0.0)) * scale;
    let horizontal = HorizontalTangent::new(psi.clone(), horizontal_vec, cfg)?;
    Ok(FieldParts {
        vertical,
        horizontal,
    })
}

/// Evolves psi by exp(-i H t / hbar), computed exactly through the
/// eigendecomposition of H. Unitary for any t, so the result stays a state.
pub fn schrodinger_flow(
    h: &HermitianOperator,
    psi: &StateVector,
    t: f64,
    cfg: &Config,
) -> Result<StateVector> {
    cfg.validate()?;
    check_same_dim(h.dim(), psi.dim())?;
    if !t.is_finite() {
        return Err(GqmError::InvalidParameter(format!(
            "flow time must be finite, got {t}"
        )));
    }
    let eig = h.matrix().clone().symmetric_eigen();
    // coefficients in the eigenbasis, each rotated by its eigenphase
    let mut coeffs = eig.eigenvectors.adjoint() * psi.components();
    for (k, c) in coeffs.iter_mut().enumerate() {
        let phase = -eig.eigenvalues[k] * t / cfg.hbar;
        *c *= Complex64::from_polar(1.0, phase);
    }
    let evolved = &eig.eigenvectors * coeffs;
    StateVector::new(evolved, cfg)
}

/// Draws from the Gaussian unitary ensemble: H = (G + G^H)/2 where G has
/// independent standard complex Gaussian entries. Same seed, same matrix.
pub fn random_hermitian(dim: usize, seed: u64) -> Result<HermitianOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_hermitian_from(&mut rng, dim)
}

/// GUE draw using a caller-supplied generator (campaigns hand each trial its
/// own seeded stream so results do not depend on scheduling).
pub fn random_hermitian_from<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
) -> Result<HermitianOperator> {
    check_dim_at_least_two(dim)?;
    let g = CMatrix::from_fn(dim, dim, |_, _| standard_complex_gaussian(rng));
    let mut h = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        h[(i, i)] = Complex64::new(g[(i, i)].re, 0.0);
        for j in (i + 1)..dim {
            let v = (g[(i, j)] + g[(j, i)].conj()) * 0.5;
            h[(i, j)] = v;
            h[(j, i)] = v.conj();
        }
    }
    Ok(HermitianOperator { matrix: h })
}

/// Haar-uniform random state: normalized vector of iid complex Gaussians.
pub fn random_state(dim: usize, seed: u64) -> Result<StateVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_state_from(&mut rng, dim)
}

pub fn random_state_from<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<StateVector> {
    check_dim_at_least_two(dim)?;
    let v = CVector::from_fn(dim, |_, _| standard_complex_gaussian(rng));
    StateVector::normalized(v)
}

/// Standard complex Gaussian: real and imaginary parts N(0, 1/2), so
/// E|z|^2 = 1.
pub(crate) fn standard_complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) / std::f64::consts::SQRT_2
}

pub fn pauli_x() -> HermitianOperator {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    HermitianOperator {
        matrix: CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        ),
    }
}

pub fn pauli_y() -> HermitianOperator {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    HermitianOperator {
        matrix: CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        ),
    }
}

pub fn pauli_z() -> HermitianOperator {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    HermitianOperator {
        matrix: CMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        ),
    }
}

fn check_dim_at_least_two(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(GqmError::DimensionTooSmall { dim, min: 2 });
    }
    Ok(())
}

pub(crate) fn check_same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(GqmError::DimensionMismatch { expected, found });
    }
    Ok(())
}
