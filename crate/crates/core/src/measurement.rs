//! Measurement resources: Kraus sets, projective bases, mutually unbiased
//! bases for prime dimensions and the biased qubit pair.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigenvalues, identity, inverse_sqrt_psd, operator_bloch, projector, random_unitary,
    BlochVector, ComplexMatrix, HermitianBasis, ONE, ZERO,
};
use crate::HERMITIAN_TOL;

/// Measurement operators `Â(a)`, `a ∈ {0..D-1}`.
#[derive(Debug, Clone)]
pub struct KrausSet {
    dim: usize,
    operators: Vec<ComplexMatrix>,
}

impl KrausSet {
    /// Checked constructor: square operators of a common size and
    /// `Σ Â†Â = 1` within tolerance.
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let set = Self::unchecked(operators)?;
        let report = validate_kraus(&set);
        if report.completeness_deviation > HERMITIAN_TOL {
            return Err(Error::IncompleteKraus(report.completeness_deviation));
        }
        Ok(set)
    }

    /// Shape checks only. Use [`validate_kraus`] to inspect completeness.
    pub fn unchecked(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let first = operators.first().ok_or_else(|| {
            Error::InvalidParameter("Kraus set needs at least one operator".into())
        })?;
        let dim = first.nrows();
        for op in &operators {
            if op.nrows() != op.ncols() {
                return Err(Error::NotSquare(op.nrows(), op.ncols()));
            }
            if op.nrows() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op.nrows(),
                });
            }
        }
        Ok(Self { dim, operators })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.operators.len()
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrausReport {
    /// Largest entry of `|Σ Â†Â - 1|`.
    pub completeness_deviation: f64,
    /// Smallest eigenvalue over all effects `Â†Â`.
    pub min_effect_eigenvalue: f64,
}

impl KrausReport {
    pub fn is_valid(&self, tol: f64) -> bool {
        self.completeness_deviation <= tol && self.min_effect_eigenvalue >= -tol
    }
}

pub fn validate_kraus(set: &KrausSet) -> KrausReport {
    let mut sum = ComplexMatrix::zeros(set.dim, set.dim);
    let mut min_eig = f64::INFINITY;
    for op in &set.operators {
        let effect = op.adjoint() * op;
        min_eig = min_eig.min(hermitian_eigenvalues(&effect)[0]);
        sum += effect;
    }
    let diff = sum - identity(set.dim);
    let completeness_deviation = diff.iter().map(|z| z.norm()).fold(0.0, f64::max);
    KrausReport {
        completeness_deviation,
        min_effect_eigenvalue: min_eig,
    }
}

/// Orthonormal basis `{|a⟩}` defining the projective measurement `Â(a) = |a⟩⟨a|`.
#[derive(Debug, Clone)]
pub struct ProjectorFamily {
    vectors: Vec<DVector<Complex64>>,
}

impl ProjectorFamily {
    pub fn new(vectors: Vec<DVector<Complex64>>) -> Result<Self> {
        let dim = vectors.len();
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        for (i, u) in vectors.iter().enumerate() {
            if u.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: u.len(),
                });
            }
            for (j, v) in vectors.iter().enumerate() {
                let target = if i == j { ONE } else { ZERO };
                let dev = (u.dotc(v) - target).norm();
                if dev > HERMITIAN_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "basis vectors {i},{j} not orthonormal (deviation {dev:e})"
                    )));
                }
            }
        }
        Ok(Self { vectors })
    }

    /// Columns of a unitary matrix.
    pub fn from_unitary(u: &ComplexMatrix) -> Result<Self> {
        Self::new(u.column_iter().map(|c| c.into_owned()).collect())
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[DVector<Complex64>] {
        &self.vectors
    }

    pub fn projectors(&self) -> Vec<ComplexMatrix> {
        self.vectors.iter().map(projector).collect()
    }

    /// Entrywise complex conjugate of every vector in the computational basis.
    pub fn conjugated(&self) -> Self {
        Self {
            vectors: self.vectors.iter().map(|v| v.conjugate()).collect(),
        }
    }

    pub fn to_kraus(&self) -> KrausSet {
        KrausSet {
            dim: self.dim(),
            operators: self.projectors(),
        }
    }
}

/// Time-ordered list of measurements. List order is chronological order.
#[derive(Debug, Clone)]
pub struct ObservableSuite {
    dim: usize,
    outcomes: usize,
    sets: Vec<KrausSet>,
    bases: Option<Vec<ProjectorFamily>>,
}

impl ObservableSuite {
    pub fn new(sets: Vec<KrausSet>) -> Result<Self> {
        let first = sets
            .first()
            .ok_or_else(|| Error::InvalidParameter("suite needs at least one observable".into()))?;
        let (dim, outcomes) = (first.dim(), first.outcomes());
        for s in &sets {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.dim(),
                });
            }
            if s.outcomes() != outcomes {
                return Err(Error::InvalidParameter(format!(
                    "all observables must share one outcome count ({} vs {})",
                    outcomes,
                    s.outcomes()
                )));
            }
        }
        Ok(Self {
            dim,
            outcomes,
            sets,
            bases: None,
        })
    }

    pub fn projective(bases: Vec<ProjectorFamily>) -> Result<Self> {
        let mut suite = Self::new(bases.iter().map(ProjectorFamily::to_kraus).collect())?;
        suite.bases = Some(bases);
        Ok(suite)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Common outcome count `D`.
    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    /// Number of observables `K`.
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> &[KrausSet] {
        &self.sets
    }

    /// The underlying bases when every observable is projective.
    pub fn bases(&self) -> Option<&[ProjectorFamily]> {
        self.bases.as_deref()
    }

    /// True for projective suites whose bases are pairwise unbiased.
    pub fn is_mutually_unbiased(&self, tol: f64) -> bool {
        match &self.bases {
            Some(bases) => max_unbiasedness_defect(bases) <= tol,
            None => false,
        }
    }

    /// Suite made of the conjugated bases (projective suites only).
    pub fn conjugated(&self) -> Result<Self> {
        let bases = self
            .bases
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("suite is not projective".into()))?;
        Self::projective(bases.iter().map(ProjectorFamily::conjugated).collect())
    }

    /// Lifts every operator to `Â ⊗ 1_other` (or `1_other ⊗ Â` when `left` is false).
    pub fn embedded(&self, other_dim: usize, left: bool) -> Self {
        let id = identity(other_dim);
        let sets = self
            .sets
            .iter()
            .map(|s| KrausSet {
                dim: s.dim * other_dim,
                operators: s
                    .operators
                    .iter()
                    .map(|op| {
                        if left {
                            op.kronecker(&id)
                        } else {
                            id.kronecker(op)
                        }
                    })
                    .collect(),
            })
            .collect();
        Self {
            dim: self.dim * other_dim,
            outcomes: self.outcomes,
            sets,
            bases: None,
        }
    }

    /// Concatenation in time: `self` first, then `later`.
    pub fn followed_by(&self, later: &ObservableSuite) -> Result<Self> {
        let mut sets = self.sets.clone();
        sets.extend(later.sets.iter().cloned());
        Self::new(sets)
    }
}

/// `max | |⟨u|v⟩|² - 1/d |` over vectors of distinct bases.
pub fn max_unbiasedness_defect(bases: &[ProjectorFamily]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, b1) in bases.iter().enumerate() {
        let inv_d = 1.0 / b1.dim() as f64;
        for b2 in &bases[i + 1..] {
            for u in b1.vectors() {
                for v in b2.vectors() {
                    worst = worst.max((u.dotc(v).norm_sqr() - inv_d).abs());
                }
            }
        }
    }
    worst
}

pub fn is_prime(n: usize) -> bool {
    n >= 2
        && (2..)
            .take_while(|k| k * k <= n)
            .all(|k| !n.is_multiple_of(k))
}

/// Qubit basis of the observable `cos φ σx + sin φ σy`, outcome 0 ↔ eigenvalue +1.
fn equatorial_basis(phi: f64) -> ProjectorFamily {
    let s = Complex64::new(1.0 / 2f64.sqrt(), 0.0);
    let e = Complex64::from_polar(1.0, phi);
    ProjectorFamily {
        vectors: vec![
            DVector::from_vec(vec![s, s * e]),
            DVector::from_vec(vec![s, -s * e]),
        ],
    }
}

fn computational_basis(dim: usize) -> ProjectorFamily {
    ProjectorFamily {
        vectors: (0..dim)
            .map(|i| DVector::from_fn(dim, |r, _| if r == i { ONE } else { ZERO }))
            .collect(),
    }
}

/// All `d + 1` mutually unbiased bases for prime `d`.
///
/// `d = 2`: eigenbases of σx, σy, σz in that order.
/// Odd `d`: the computational basis, then for `k = 1..=d` the bases
/// `⟨n|a⟩_k = ω^{a n + k n²} / √d` (`k = d` is the Fourier basis).
pub fn mub_bases(dim: usize) -> Result<Vec<ProjectorFamily>> {
    if !is_prime(dim) {
        return Err(Error::NotPrime(dim));
    }
    if dim == 2 {
        return Ok(vec![
            equatorial_basis(0.0),
            equatorial_basis(PI / 2.0),
            computational_basis(2),
        ]);
    }
    let norm = 1.0 / (dim as f64).sqrt();
    let mut bases = vec![computational_basis(dim)];
    for k in 1..=dim {
        let vectors = (0..dim)
            .map(|a| {
                DVector::from_fn(dim, |n, _| {
                    let phase = (a * n + k * n * n) % dim;
                    Complex64::from_polar(norm, 2.0 * PI * phase as f64 / dim as f64)
                })
            })
            .collect();
        bases.push(ProjectorFamily { vectors });
    }
    Ok(bases)
}

/// The first `count` bases of [`mub_bases`] as a sequential suite.
pub fn mub_suite(dim: usize, count: usize) -> Result<ObservableSuite> {
    if !is_prime(dim) {
        return Err(Error::NotPrime(dim));
    }
    if count == 0 || count > dim + 1 {
        return Err(Error::TooManyBases {
            requested: count,
            dim,
            max: dim + 1,
        });
    }
    let mut bases = mub_bases(dim)?;
    bases.truncate(count);
    ObservableSuite::projective(bases)
}

/// Eigenbases of `σ1 = cos θ σx - sin θ σy` (measured first) and
/// `σ2 = -sin θ σx + cos θ σy`, for `0 < θ < π/2`.
pub fn biased_qubit_suite(theta: f64) -> Result<ObservableSuite> {
    if !(theta > 0.0 && theta < PI / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in (0, π/2), got {theta}"
        )));
    }
    ObservableSuite::projective(vec![
        equatorial_basis(-theta),
        equatorial_basis(PI / 2.0 + theta),
    ])
}

/// Bloch images `α(a)_j = Tr[λ_j |a⟩⟨a|]` of each basis vector.
pub fn alpha_vectors(basis: &ProjectorFamily, hbasis: &HermitianBasis) -> Result<Vec<BlochVector>> {
    basis
        .projectors()
        .iter()
        .map(|p| operator_bloch(p, hbasis))
        .collect()
}

/// [`alpha_vectors`] for every observable of a projective suite.
pub fn suite_alphas(
    suite: &ObservableSuite,
    hbasis: &HermitianBasis,
) -> Result<Vec<Vec<BlochVector>>> {
    let bases = suite
        .bases()
        .ok_or_else(|| Error::InvalidParameter("suite is not projective".into()))?;
    bases.iter().map(|b| alpha_vectors(b, hbasis)).collect()
}

/// Qubit trine POVM: `√(2/3)|ψ_a⟩⟨ψ_a|` with Bloch directions 120° apart in the x–z plane.
pub fn trine_povm() -> KrausSet {
    let scale = Complex64::new((2.0f64 / 3.0).sqrt(), 0.0);
    let operators = (0..3)
        .map(|a| {
            let half = PI / 3.0 * a as f64;
            let ket = DVector::from_vec(vec![
                Complex64::new(half.cos(), 0.0),
                Complex64::new(half.sin(), 0.0),
            ]);
            projector(&ket) * scale
        })
        .collect();
    KrausSet { dim: 2, operators }
}

pub fn random_basis<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ProjectorFamily {
    let u = random_unitary(dim, rng);
    ProjectorFamily {
        vectors: u.column_iter().map(|c| c.into_owned()).collect(),
    }
}

/// Random Kraus set with `outcomes` operators: `Â(a) = G_a (Σ G†G)^{-1/2}`.
pub fn random_kraus<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> KrausSet {
    let gs: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            ComplexMatrix::from_fn(dim, dim, |_, _| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            })
        })
        .collect();
    let mut total = ComplexMatrix::zeros(dim, dim);
    for g in &gs {
        total += g.adjoint() * g;
    }
    let norm = inverse_sqrt_psd(&total);
    KrausSet {
        dim,
        operators: gs.into_iter().map(|g| g * &norm).collect(),
    }
}
