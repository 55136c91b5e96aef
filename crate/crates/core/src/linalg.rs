//! Complex matrix primitives, density operators and the generalized Bloch
//! representation.
//!
//! Operators on a `d`-level system are expanded in an orthogonal Hermitian
//! basis `{1, λ_1, .., λ_{d²-1}}` normalized so that `Tr[λ_i λ_j] = d δ_ij`.
//! With that convention a state reads `ρ = (1 + Σ_j ρ_j λ_j) / d` where
//! `ρ_j = Tr[λ_j ρ]`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::{HERMITIAN_TOL, POSITIVITY_TOL};

pub type ComplexMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

/// Kronecker product `a ⊗ b`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// `|ψ⟩⟨ψ|` for a (not necessarily normalized) ket.
pub fn projector(ket: &DVector<Complex64>) -> ComplexMatrix {
    ket * ket.adjoint()
}

pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    // Tr[AB] = Σ_ij A_ij B_ji
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Largest entrywise deviation of `m` from its conjugate transpose.
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut vals: Vec<f64> = SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Positive semidefinite inverse square root, used to normalize random POVMs.
pub(crate) fn inverse_sqrt_psd(m: &ComplexMatrix) -> ComplexMatrix {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let inv: DVector<Complex64> = eig
        .eigenvalues
        .map(|v| Complex64::new(1.0 / v.max(f64::MIN_POSITIVE).sqrt(), 0.0));
    &eig.eigenvectors * ComplexMatrix::from_diagonal(&inv) * eig.eigenvectors.adjoint()
}

/// A validated state: Hermitian, unit trace and positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare(matrix.nrows(), matrix.ncols()));
        }
        let defect = hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > HERMITIAN_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min = hermitian_eigenvalues(&matrix)[0];
        if min < -POSITIVITY_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { matrix })
    }

    /// Pure state from a ket; the ket is normalized first.
    pub fn pure(ket: &DVector<Complex64>) -> Result<Self> {
        let norm = ket.norm();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero ket".into()));
        }
        Self::new(projector(&(ket / Complex64::new(norm, 0.0))))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: identity(dim) / Complex64::new(dim as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `Tr[op ρ]`.
    pub fn expectation(&self, op: &ComplexMatrix) -> Complex64 {
        trace_product(op, &self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        DensityOperator {
            matrix: tensor_product(&self.matrix, &other.matrix),
        }
    }

    /// Convex combination `Σ w_i ρ_i`. Weights must be nonnegative and sum to one.
    pub fn mixture(parts: &[(f64, DensityOperator)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let dim = first.1.dim();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (w, rho) in parts {
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: rho.dim(),
                });
            }
            acc += &rho.matrix * Complex64::new(*w, 0.0);
        }
        Self::new(acc)
    }
}

/// Orthogonal traceless Hermitian basis with `Tr[λ_i λ_j] = d δ_ij`.
#[derive(Debug, Clone)]
pub struct HermitianBasis {
    dim: usize,
    elements: Vec<ComplexMatrix>,
}

impl HermitianBasis {
    /// Generalized Gell-Mann matrices rescaled by `√(d/2)`.
    ///
    /// Ordering: for each pair `j < k` the symmetric then the antisymmetric
    /// element, followed by the `d-1` diagonal elements. For `d = 2` this is
    /// exactly `{σx, σy, σz}`.
    pub fn gell_mann(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        let scale = Complex64::new((dim as f64 / 2.0).sqrt(), 0.0);
        let mut elements = Vec::with_capacity(dim * dim - 1);
        for j in 0..dim {
            for k in (j + 1)..dim {
                let mut sym = ComplexMatrix::zeros(dim, dim);
                sym[(j, k)] = ONE;
                sym[(k, j)] = ONE;
                elements.push(sym * scale);

                let mut anti = ComplexMatrix::zeros(dim, dim);
                anti[(j, k)] = -I;
                anti[(k, j)] = I;
                elements.push(anti * scale);
            }
        }
        for l in 1..dim {
            let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
            let mut diag = ComplexMatrix::zeros(dim, dim);
            for m in 0..l {
                diag[(m, m)] = Complex64::new(norm, 0.0);
            }
            diag[(l, l)] = Complex64::new(-(l as f64) * norm, 0.0);
            elements.push(diag * scale);
        }
        Ok(Self { dim, elements })
    }

    /// Basis from explicit elements; orthogonality and tracelessness are checked.
    pub fn from_elements(dim: usize, elements: Vec<ComplexMatrix>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if elements.len() != dim * dim - 1 {
            return Err(Error::DimensionMismatch {
                expected: dim * dim - 1,
                found: elements.len(),
            });
        }
        for e in &elements {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.nrows(),
                });
            }
            let defect = hermiticity_defect(e);
            if defect > HERMITIAN_TOL {
                return Err(Error::NotHermitian(defect));
            }
        }
        let basis = Self { dim, elements };
        let defect = basis.orthogonality_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidParameter(format!(
                "basis violates Tr[λiλj] = dδij by {defect:e}"
            )));
        }
        Ok(basis)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Max over `i, j` of `|Tr[λ_i λ_j] - d δ_ij|`, including tracelessness.
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.dim as f64;
        let mut worst = 0.0_f64;
        for (i, a) in self.elements.iter().enumerate() {
            worst = worst.max(a.trace().norm());
            for (j, b) in self.elements.iter().enumerate() {
                let target = if i == j { d } else { 0.0 };
                worst = worst.max((trace_product(a, b) - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Elementwise transpose, `⟨n|λ^B|n'⟩ = ⟨n'|λ^A|n⟩`.
    pub fn transposed(&self) -> Self {
        Self {
            dim: self.dim,
            elements: self.elements.iter().map(|e| e.transpose()).collect(),
        }
    }

    /// `λ'_i = Σ_j O_ij λ_j` for a real orthogonal `O`.
    pub fn rotated(&self, rotation: &DMatrix<f64>) -> Result<Self> {
        let n = self.elements.len();
        if rotation.nrows() != n || rotation.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rotation.nrows(),
            });
        }
        let elements = (0..n)
            .map(|i| {
                let mut acc = ComplexMatrix::zeros(self.dim, self.dim);
                for (j, e) in self.elements.iter().enumerate() {
                    acc += e * Complex64::new(rotation[(i, j)], 0.0);
                }
                acc
            })
            .collect();
        Self::from_elements(self.dim, elements)
    }
}

/// Real coordinates `ρ_j = Tr[λ_j ρ]` in a [`HermitianBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct BlochVector {
    dim: usize,
    components: Vec<f64>,
}

impl BlochVector {
    pub fn new(dim: usize, components: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if components.len() != dim * dim - 1 {
            return Err(Error::DimensionMismatch {
                expected: dim * dim - 1,
                found: components.len(),
            });
        }
        Ok(Self { dim, components })
    }

    /// Infers `d` from the number of components.
    pub fn from_components(components: Vec<f64>) -> Result<Self> {
        let dim = ((components.len() + 1) as f64).sqrt().round() as usize;
        if dim * dim != components.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} components is not of the form d²-1",
                components.len()
            )));
        }
        Self::new(dim, components)
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            components: vec![0.0; dim * dim - 1],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            components: self.components.iter().map(|c| c * factor).collect(),
        }
    }
}

pub fn bloch_vector(rho: &DensityOperator, basis: &HermitianBasis) -> Result<BlochVector> {
    operator_bloch(rho.matrix(), basis)
}

/// `Tr[λ_j X]` for an arbitrary Hermitian operator `X` (imaginary parts dropped
/// after checking them against the tolerance).
pub fn operator_bloch(op: &ComplexMatrix, basis: &HermitianBasis) -> Result<BlochVector> {
    if op.nrows() != basis.dim {
        return Err(Error::DimensionMismatch {
            expected: basis.dim,
            found: op.nrows(),
        });
    }
    let mut components = Vec::with_capacity(basis.len());
    for l in basis.elements() {
        let v = trace_product(l, op);
        if v.im.abs() > HERMITIAN_TOL {
            return Err(Error::NotHermitian(v.im.abs()));
        }
        components.push(v.re);
    }
    Ok(BlochVector {
        dim: basis.dim,
        components,
    })
}

/// `(1 + Σ_j v_j λ_j) / d` without the positivity check.
pub fn operator_from_bloch(v: &BlochVector, basis: &HermitianBasis) -> Result<ComplexMatrix> {
    if v.dim != basis.dim {
        return Err(Error::DimensionMismatch {
            expected: basis.dim,
            found: v.dim,
        });
    }
    let mut m = identity(basis.dim);
    for (c, l) in v.components.iter().zip(basis.elements()) {
        m += l * Complex64::new(*c, 0.0);
    }
    Ok(m / Complex64::new(basis.dim as f64, 0.0))
}

/// Reconstructs the state; fails if the vector lies outside the state space.
pub fn state_from_bloch(v: &BlochVector, basis: &HermitianBasis) -> Result<DensityOperator> {
    DensityOperator::new(operator_from_bloch(v, basis)?)
}

pub fn random_ket<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<Complex64> {
    let v = DVector::from_fn(dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityOperator {
    DensityOperator {
        matrix: projector(&random_ket(dim, rng)),
    }
}

/// Ginibre-ensemble mixed state `G G† / Tr[G G†]` (full rank almost surely).
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityOperator {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityOperator { matrix: m / tr }
}

/// Haar-random unitary via Gram-Schmidt on a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let mut cols: Vec<DVector<Complex64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v = random_ket(dim, rng);
        for c in &cols {
            let overlap = c.dotc(&v);
            v -= c * overlap;
        }
        let n = v.norm();
        if n > 1e-8 {
            cols.push(v / Complex64::new(n, 0.0));
        }
    }
    ComplexMatrix::from_columns(&cols)
}

/// Haar-ish random rotation in `SO(n)` from Gram-Schmidt on Gaussian columns.
pub fn random_rotation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        for c in &cols {
            let overlap = c.dot(&v);
            v -= c * overlap;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / norm);
        }
    }
    let mut o = DMatrix::from_columns(&cols);
    if o.determinant() < 0.0 {
        o.column_mut(0).neg_mut();
    }
    o
}

/// Qubit state from a Bloch vector in the Pauli basis; `|r| ≤ 1` is required.
pub fn qubit_state(r: [f64; 3]) -> Result<DensityOperator> {
    let basis = HermitianBasis::gell_mann(2)?;
    state_from_bloch(&BlochVector::new(2, r.to_vec())?, &basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pauli() -> [ComplexMatrix; 3] {
        [
            ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
            ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        ]
    }

    #[test]
    fn kronecker_of_identities() {
        assert_eq!(tensor_product(&identity(2), &identity(2)), identity(4));
        assert_eq!(tensor_product(&identity(2), &identity(3)).shape(), (6, 6));
    }

    #[test]
    fn xx_leaves_bell_state_invariant() {
        let [x, _, _] = pauli();
        let xx = tensor_product(&x, &x);
        let s = 1.0 / 2f64.sqrt();
        let psi = DVector::from_vec(vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)]);
        let out = &xx * &psi;
        assert!((out - psi).norm() < 1e-15);
    }

    #[test]
    fn product_expectation_factorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in [2, 3] {
            let basis = HermitianBasis::gell_mann(d).unwrap();
            for _ in 0..10 {
                let a = random_density(d, &mut rng);
                let b = random_density(d, &mut rng);
                let ra = bloch_vector(&a, &basis).unwrap();
                let rb = bloch_vector(&b, &basis).unwrap();
                let ab = a.tensor(&b);
                for (j, lj) in basis.elements().iter().enumerate() {
                    for (k, lk) in basis.elements().iter().enumerate() {
                        let v = ab.expectation(&tensor_product(lj, lk));
                        let want = ra.components()[j] * rb.components()[k];
                        assert!((v - c(want, 0.0)).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn qubit_basis_is_pauli() {
        let basis = HermitianBasis::gell_mann(2).unwrap();
        for (got, want) in basis.elements().iter().zip(pauli().iter()) {
            assert!((got - want).norm() < 1e-15);
        }
    }

    #[test]
    fn gell_mann_orthogonality() {
        for d in [2, 3, 5] {
            let basis = HermitianBasis::gell_mann(d).unwrap();
            assert_eq!(basis.len(), d * d - 1);
            assert!(basis.orthogonality_defect() < 1e-12, "d={d}");
        }
        assert!(matches!(
            HermitianBasis::gell_mann(1),
            Err(Error::DimensionTooSmall(1))
        ));
    }

    #[test]
    fn bloch_of_simple_states() {
        let basis = HermitianBasis::gell_mann(3).unwrap();
        let v = bloch_vector(&DensityOperator::maximally_mixed(3), &basis).unwrap();
        assert!(v.norm() < 1e-15);

        let qb = HermitianBasis::gell_mann(2).unwrap();
        let up = DensityOperator::pure(&DVector::from_vec(vec![ONE, ZERO])).unwrap();
        let v = bloch_vector(&up, &qb).unwrap();
        assert_eq!(v.components(), &[0.0, 0.0, 1.0]);

        assert!(matches!(
            bloch_vector(&up, &basis),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn reconstruction_cases() {
        let basis = HermitianBasis::gell_mann(3).unwrap();
        let rho = state_from_bloch(&BlochVector::zero(3), &basis).unwrap();
        assert!((rho.matrix() - DensityOperator::maximally_mixed(3).matrix()).norm() < 1e-15);

        let s = 1.0 / 2f64.sqrt();
        let q = state_from_bloch(
            &BlochVector::new(2, vec![s, s, 0.0]).unwrap(),
            &HermitianBasis::gell_mann(2).unwrap(),
        )
        .unwrap();
        let ev = q.eigenvalues();
        assert!(ev[0].abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);

        // A pure qutrit pushed 20% past the pure-state shell is not a state.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pure = random_pure(3, &mut rng);
        let v = bloch_vector(&pure, &basis).unwrap().scaled(1.2);
        match state_from_bloch(&v, &basis) {
            Err(Error::NotPositive(min)) => assert!((min + 0.2 / 3.0).abs() < 1e-10),
            other => panic!("expected positivity error, got {other:?}"),
        }
    }

    #[test]
    fn roundtrip_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in [2, 3, 5] {
            let basis = HermitianBasis::gell_mann(d).unwrap();
            for _ in 0..20 {
                let rho = random_density(d, &mut rng);
                let v = bloch_vector(&rho, &basis).unwrap();
                let back = state_from_bloch(&v, &basis).unwrap();
                assert!((back.matrix() - rho.matrix()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn bloch_inner_products_bounded_below() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [2, 3, 5] {
            let basis = HermitianBasis::gell_mann(d).unwrap();
            for i in 0..1000 {
                let (a, b) = if i % 2 == 0 {
                    (random_pure(d, &mut rng), random_pure(d, &mut rng))
                } else {
                    (random_density(d, &mut rng), random_density(d, &mut rng))
                };
                let dot = bloch_vector(&a, &basis)
                    .unwrap()
                    .dot(&bloch_vector(&b, &basis).unwrap());
                assert!(dot >= -1.0 - 1e-12, "d={d}: {dot}");
            }
        }
    }

    #[test]
    fn density_validation() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), ZERO, c(0.5, 0.0)]);
        assert!(matches!(
            DensityOperator::new(m),
            Err(Error::NotHermitian(_))
        ));
        let m = ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]);
        assert!(matches!(
            DensityOperator::new(m),
            Err(Error::InvalidTrace(_))
        ));
        let m = ComplexMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), ZERO, ZERO, c(-0.5, 0.0)]);
        assert!(matches!(
            DensityOperator::new(m),
            Err(Error::NotPositive(_))
        ));
    }

    #[test]
    fn rotated_basis_stays_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let basis = HermitianBasis::gell_mann(3).unwrap();
        let o = random_rotation(8, &mut rng);
        let rotated = basis.rotated(&o).unwrap();
        assert!(rotated.orthogonality_defect() < 1e-12);
        assert!(basis.transposed().orthogonality_defect() < 1e-12);
    }
}
