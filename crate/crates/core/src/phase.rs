//! Phase-space states, mass matrices and target models.
//!
//! A [`TargetModel`] bundles a potential `V`, an inverse temperature `β` and a
//! mass matrix `M`. Together they define the unnormalized phase-space density
//! `ρ(x, y) = exp(-β (½ yᵀM⁻¹y + V(x)))`, always handled through its logarithm.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// A point `z = (x, y)` of phase space: positions and conjugate momenta.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PhaseState {
    /// Builds a state, rejecting empty, mismatched or non-finite input.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::invalid(
                "x",
                "phase space dimension must be at least 1",
            ));
        }
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("position"));
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("momentum"));
        }
        Ok(Self { x, y })
    }

    /// A state with zero momentum.
    pub fn at_rest(x: Vec<f64>) -> Result<Self> {
        let y = vec![0.0; x.len()];
        Self::new(x, y)
    }

    pub(crate) fn from_parts_unchecked(x: Vec<f64>, y: Vec<f64>) -> Self {
        debug_assert_eq!(x.len(), y.len());
        Self { x, y }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.x, self.y)
    }

    /// The momentum flip `F(x, y) = (x, -y)`.
    pub fn flipped(&self) -> Self {
        Self {
            x: self.x.clone(),
            y: self.y.iter().map(|v| -v).collect(),
        }
    }

    pub(crate) fn with_momentum(&self, y: Vec<f64>) -> Self {
        debug_assert_eq!(self.x.len(), y.len());
        Self {
            x: self.x.clone(),
            y,
        }
    }
}

/// The momentum flip map. An involution.
pub fn flip(z: &PhaseState) -> PhaseState {
    z.flipped()
}

#[derive(Clone)]
enum MassRepr {
    Identity(usize),
    Diagonal {
        diag: Vec<f64>,
        sqrt: Vec<f64>,
    },
    Dense {
        matrix: DMatrix<f64>,
        chol: Cholesky<f64, Dyn>,
    },
}

/// Symmetric positive-definite mass matrix `M`.
#[derive(Clone)]
pub struct MassMatrix {
    repr: MassRepr,
}

impl fmt::Debug for MassMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            MassRepr::Identity(d) => write!(f, "MassMatrix::Identity({d})"),
            MassRepr::Diagonal { diag, .. } => write!(f, "MassMatrix::Diagonal({diag:?})"),
            MassRepr::Dense { matrix, .. } => write!(f, "MassMatrix::Dense({matrix})"),
        }
    }
}

impl MassMatrix {
    pub fn identity(dim: usize) -> Self {
        Self {
            repr: MassRepr::Identity(dim),
        }
    }

    pub fn diagonal(diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::invalid("mass", "empty diagonal"));
        }
        if !diag.iter().all(|m| m.is_finite() && *m > 0.0) {
            return Err(Error::invalid(
                "mass",
                "diagonal entries must be finite and positive",
            ));
        }
        let sqrt = diag.iter().map(|m| m.sqrt()).collect();
        Ok(Self {
            repr: MassRepr::Diagonal { diag, sqrt },
        })
    }

    /// Dense mass matrix given row by row.
    pub fn dense(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid(
                "mass",
                "dense mass matrix must be square and non-empty",
            ));
        }
        let matrix = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("mass matrix"));
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        for i in 0..d {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::invalid("mass", "dense mass matrix is not symmetric"));
                }
            }
        }
        let chol = Cholesky::new(matrix.clone())
            .ok_or_else(|| Error::invalid("mass", "dense mass matrix is not positive definite"))?;
        Ok(Self {
            repr: MassRepr::Dense { matrix, chol },
        })
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            MassRepr::Identity(d) => *d,
            MassRepr::Diagonal { diag, .. } => diag.len(),
            MassRepr::Dense { matrix, .. } => matrix.nrows(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.repr, MassRepr::Identity(_))
    }

    /// `M v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        match &self.repr {
            MassRepr::Identity(_) => v.to_vec(),
            MassRepr::Diagonal { diag, .. } => v.iter().zip(diag).map(|(a, m)| a * m).collect(),
            MassRepr::Dense { matrix, .. } => {
                (matrix * DVector::from_column_slice(v)).as_slice().to_vec()
            }
        }
    }

    /// `M⁻¹ v`.
    pub fn apply_inverse(&self, v: &[f64]) -> Vec<f64> {
        match &self.repr {
            MassRepr::Identity(_) => v.to_vec(),
            MassRepr::Diagonal { diag, .. } => v.iter().zip(diag).map(|(a, m)| a / m).collect(),
            MassRepr::Dense { chol, .. } => chol
                .solve(&DVector::from_column_slice(v))
                .as_slice()
                .to_vec(),
        }
    }

    /// `x += scale · M⁻¹ v`, without allocating for the identity and diagonal forms.
    pub(crate) fn add_scaled_inverse(&self, x: &mut [f64], scale: f64, v: &[f64]) {
        match &self.repr {
            MassRepr::Identity(_) => {
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi += scale * vi;
                }
            }
            MassRepr::Diagonal { diag, .. } => {
                for ((xi, vi), m) in x.iter_mut().zip(v).zip(diag) {
                    *xi += scale * vi / m;
                }
            }
            MassRepr::Dense { .. } => {
                let w = self.apply_inverse(v);
                for (xi, wi) in x.iter_mut().zip(&w) {
                    *xi += scale * wi;
                }
            }
        }
    }

    /// Kinetic energy `½ yᵀ M⁻¹ y`.
    pub fn kinetic_energy(&self, y: &[f64]) -> f64 {
        match &self.repr {
            MassRepr::Identity(_) => 0.5 * y.iter().map(|v| v * v).sum::<f64>(),
            MassRepr::Diagonal { diag, .. } => {
                0.5 * y.iter().zip(diag).map(|(v, m)| v * v / m).sum::<f64>()
            }
            MassRepr::Dense { .. } => {
                let w = self.apply_inverse(y);
                0.5 * y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
            }
        }
    }

    /// Maps standard normal draws `ξ` to `N(0, M)` draws through a factor
    /// `A` with `A Aᵀ = M` (componentwise square roots, or the lower Cholesky
    /// factor for the dense form).
    pub fn scale_standard_normal(&self, xi: &[f64]) -> Vec<f64> {
        match &self.repr {
            MassRepr::Identity(_) => xi.to_vec(),
            MassRepr::Diagonal { sqrt, .. } => xi.iter().zip(sqrt).map(|(a, s)| a * s).collect(),
            MassRepr::Dense { chol, .. } => (chol.l() * DVector::from_column_slice(xi))
                .as_slice()
                .to_vec(),
        }
    }
}

/// A potential energy `V` with its gradient.
///
/// Implementations must be stateless from the caller's point of view so that
/// several chains can evaluate the same model concurrently.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `∇V(x)` into `grad`.
    fn gradient(&self, x: &[f64], grad: &mut [f64]);

    /// A deterministic starting position inside the bulk of the distribution.
    fn reference_point(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }
}

/// `V(x) = ½ Σ xᵢ² / σᵢ²`.
#[derive(Debug, Clone)]
pub struct Gaussian {
    variances: Vec<f64>,
}

impl Gaussian {
    pub fn new(variances: Vec<f64>) -> Result<Self> {
        if variances.is_empty() {
            return Err(Error::invalid(
                "variances",
                "at least one variance is required",
            ));
        }
        if !variances.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::invalid(
                "variances",
                "variances must be finite and positive",
            ));
        }
        Ok(Self { variances })
    }

    pub fn standard(dim: usize) -> Self {
        Self {
            variances: vec![1.0; dim],
        }
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }
}

impl Potential for Gaussian {
    fn dim(&self) -> usize {
        self.variances.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x
            .iter()
            .zip(&self.variances)
            .map(|(v, s)| v * v / s)
            .sum::<f64>()
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        for ((g, v), s) in grad.iter_mut().zip(x).zip(&self.variances) {
            *g = v / s;
        }
    }
}

/// `V(x) = Σ (xᵢ² - 1)²`, minima at `xᵢ = ±1` separated by unit barriers.
#[derive(Debug, Clone)]
pub struct DoubleWell {
    dim: usize,
}

impl DoubleWell {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dims", "must be at least 1"));
        }
        Ok(Self { dim })
    }
}

impl Potential for DoubleWell {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| (v * v - 1.0).powi(2)).sum()
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        for (g, v) in grad.iter_mut().zip(x) {
            *g = 4.0 * v * (v * v - 1.0);
        }
    }

    fn reference_point(&self) -> Vec<f64> {
        vec![1.0; self.dim]
    }
}

/// Curved Gaussian in the first two coordinates:
///
/// `V(x) = ½ x₁² + ½ (x₂ - b (x₁² - 1))² + ½ Σ_{i≥3} xᵢ²`
///
/// with curvature `b`. Remaining coordinates are standard normal.
#[derive(Debug, Clone)]
pub struct Banana {
    dim: usize,
    curvature: f64,
}

impl Banana {
    pub fn new(dim: usize, curvature: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid(
                "dims",
                "banana target needs at least 2 dimensions",
            ));
        }
        if !curvature.is_finite() {
            return Err(Error::NonFinite("curvature"));
        }
        Ok(Self { dim, curvature })
    }
}

impl Potential for Banana {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = x[1] - self.curvature * (x[0] * x[0] - 1.0);
        0.5 * x[0] * x[0] + 0.5 * r * r + 0.5 * x[2..].iter().map(|v| v * v).sum::<f64>()
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let r = x[1] - self.curvature * (x[0] * x[0] - 1.0);
        grad[0] = x[0] - 2.0 * self.curvature * x[0] * r;
        grad[1] = r;
        for (g, v) in grad[2..].iter_mut().zip(&x[2..]) {
            *g = *v;
        }
    }

    fn reference_point(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        x[1] = -self.curvature;
        x
    }
}

/// `V ≡ 0`: free flight, the exact flow conserves energy.
#[derive(Debug, Clone)]
pub struct FreeParticle {
    dim: usize,
}

impl FreeParticle {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl Potential for FreeParticle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn gradient(&self, _x: &[f64], grad: &mut [f64]) {
        grad.fill(0.0);
    }
}

/// Wraps a potential and counts evaluations.
pub struct CountingPotential {
    inner: Arc<dyn Potential>,
    gradient_calls: AtomicU64,
    value_calls: AtomicU64,
}

impl CountingPotential {
    pub fn new(inner: Arc<dyn Potential>) -> Self {
        Self {
            inner,
            gradient_calls: AtomicU64::new(0),
            value_calls: AtomicU64::new(0),
        }
    }

    pub fn gradient_calls(&self) -> u64 {
        self.gradient_calls.load(Ordering::Relaxed)
    }

    pub fn value_calls(&self) -> u64 {
        self.value_calls.load(Ordering::Relaxed)
    }
}

impl Potential for CountingPotential {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.value_calls.fetch_add(1, Ordering::Relaxed);
        self.inner.value(x)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        self.gradient_calls.fetch_add(1, Ordering::Relaxed);
        self.inner.gradient(x, grad)
    }

    fn reference_point(&self) -> Vec<f64> {
        self.inner.reference_point()
    }
}

/// Potential, inverse temperature and mass matrix.
#[derive(Clone)]
pub struct TargetModel {
    potential: Arc<dyn Potential>,
    beta: f64,
    mass: MassMatrix,
}

impl fmt::Debug for TargetModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetModel")
            .field("dim", &self.dim())
            .field("beta", &self.beta)
            .field("mass", &self.mass)
            .finish()
    }
}

impl TargetModel {
    /// Unit mass matrix and `β = 1`.
    pub fn new(potential: Arc<dyn Potential>) -> Self {
        let d = potential.dim();
        Self {
            potential,
            beta: 1.0,
            mass: MassMatrix::identity(d),
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid(
                "beta",
                format!("{beta} is not a positive real"),
            ));
        }
        self.beta = beta;
        Ok(self)
    }

    pub fn with_mass(mut self, mass: MassMatrix) -> Result<Self> {
        if mass.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: mass.dim(),
            });
        }
        self.mass = mass;
        Ok(self)
    }

    /// A copy of this model whose potential counts its gradient and value calls.
    pub fn instrumented(&self) -> (Self, Arc<CountingPotential>) {
        let counter = Arc::new(CountingPotential::new(self.potential.clone()));
        let model = Self {
            potential: counter.clone(),
            beta: self.beta,
            mass: self.mass.clone(),
        };
        (model, counter)
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mass(&self) -> &MassMatrix {
        &self.mass
    }

    pub fn potential(&self) -> &dyn Potential {
        self.potential.as_ref()
    }

    pub fn reference_point(&self) -> Vec<f64> {
        self.potential.reference_point()
    }

    pub fn check_dim(&self, z: &PhaseState) -> Result<()> {
        if z.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: z.dim(),
            });
        }
        Ok(())
    }

    /// `H(z) = ½ yᵀM⁻¹y + V(x)`.
    pub fn hamiltonian(&self, z: &PhaseState) -> Result<f64> {
        self.check_dim(z)?;
        Ok(self.hamiltonian_unchecked(z))
    }

    pub(crate) fn hamiltonian_unchecked(&self, z: &PhaseState) -> f64 {
        self.mass.kinetic_energy(z.y()) + self.potential.value(z.x())
    }

    /// `log ρ(z) = -β H(z)`; `-∞` when the energy is not finite.
    pub fn log_rho(&self, z: &PhaseState) -> Result<f64> {
        self.check_dim(z)?;
        Ok(self.log_rho_unchecked(z))
    }

    pub(crate) fn log_rho_unchecked(&self, z: &PhaseState) -> f64 {
        let h = self.hamiltonian_unchecked(z);
        if h.is_finite() {
            -self.beta * h
        } else {
            f64::NEG_INFINITY
        }
    }

    pub(crate) fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        self.potential.gradient(x, grad)
    }
}

/// Module-level alias of [`TargetModel::log_rho`].
pub fn log_rho(model: &TargetModel, z: &PhaseState) -> Result<f64> {
    model.log_rho(z)
}

/// Parameters accepted by [`builtin_target`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TargetParams {
    pub dims: usize,
    /// Gaussian only; defaults to unit variances.
    pub variances: Option<Vec<f64>>,
    /// Banana only; defaults to 1.
    pub curvature: Option<f64>,
}

impl TargetParams {
    pub fn dims(dims: usize) -> Self {
        Self {
            dims,
            ..Self::default()
        }
    }
}

pub const BUILTIN_TARGETS: [&str; 3] = ["gaussian", "double_well", "banana"];

/// Builds one of the analytic targets `gaussian`, `double_well`, `banana`
/// with unit mass and `β = 1`.
pub fn builtin_target(name: &str, params: &TargetParams) -> Result<TargetModel> {
    if params.dims == 0 {
        return Err(Error::invalid("dims", "must be at least 1"));
    }
    let potential: Arc<dyn Potential> = match name {
        "gaussian" => {
            let variances = match &params.variances {
                Some(v) if v.len() != params.dims => {
                    return Err(Error::DimensionMismatch {
                        expected: params.dims,
                        found: v.len(),
                    })
                }
                Some(v) => v.clone(),
                None => vec![1.0; params.dims],
            };
            Arc::new(Gaussian::new(variances)?)
        }
        "double_well" => Arc::new(DoubleWell::new(params.dims)?),
        "banana" => Arc::new(Banana::new(params.dims, params.curvature.unwrap_or(1.0))?),
        other => return Err(Error::UnknownTarget(other.to_string())),
    };
    Ok(TargetModel::new(potential))
}
