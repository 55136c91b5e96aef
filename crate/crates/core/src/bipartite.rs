//! Two-qudit quasiprobabilities and the marginal entanglement witness.
//!
//! Alice and Bob each measure a complete set of `d + 1` mutually unbiased
//! bases. Summing the joint quasiprobability over outcome pairs with fixed
//! differences `c_k = a_k - b_k (mod d)` gives the marginal `W_m(c)`, which is
//! nonnegative on every separable state.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{QuasiTable, TableShape};
use crate::error::{Error, Result};
use crate::linalg::{
    bloch_vector, identity, random_pure, BlochVector, ComplexMatrix, DensityOperator,
    HermitianBasis, ZERO,
};
use crate::measurement::{is_prime, suite_alphas, ObservableSuite};
use crate::HERMITIAN_TOL;

/// State of two `d`-level systems, factor order `A ⊗ B`.
#[derive(Debug, Clone)]
pub struct BipartiteState {
    local_dim: usize,
    rho: DensityOperator,
}

impl BipartiteState {
    pub fn new(local_dim: usize, rho: DensityOperator) -> Result<Self> {
        if rho.dim() != local_dim * local_dim {
            return Err(Error::DimensionMismatch {
                expected: local_dim * local_dim,
                found: rho.dim(),
            });
        }
        Ok(Self { local_dim, rho })
    }

    pub fn product(a: &DensityOperator, b: &DensityOperator) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        Self::new(a.dim(), a.tensor(b))
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn density(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn reduced_a(&self) -> DensityOperator {
        let d = self.local_dim;
        let m = self.rho.matrix();
        let r =
            ComplexMatrix::from_fn(d, d, |i, j| (0..d).map(|n| m[(i * d + n, j * d + n)]).sum());
        DensityOperator::new(r).expect("partial trace of a state is a state")
    }

    pub fn reduced_b(&self) -> DensityOperator {
        let d = self.local_dim;
        let m = self.rho.matrix();
        let r =
            ComplexMatrix::from_fn(d, d, |i, j| (0..d).map(|n| m[(n * d + i, n * d + j)]).sum());
        DensityOperator::new(r).expect("partial trace of a state is a state")
    }
}

/// `S_jk = Tr[(λ_j^A ⊗ λ_k^B) ρ]` together with both local Bloch vectors.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub s: DMatrix<f64>,
    pub rho_a: BlochVector,
    pub rho_b: BlochVector,
}

pub fn correlation_matrix(
    state: &BipartiteState,
    basis_a: &HermitianBasis,
    basis_b: &HermitianBasis,
) -> Result<CorrelationMatrix> {
    let d = state.local_dim;
    for b in [basis_a, basis_b] {
        if b.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: b.dim(),
            });
        }
    }
    let m = state.rho.matrix();
    let n = basis_a.len();
    let mut s = DMatrix::zeros(n, n);
    for (j, la) in basis_a.elements().iter().enumerate() {
        for (k, lb) in basis_b.elements().iter().enumerate() {
            // Tr[(λa ⊗ λb) ρ] = Σ λa[m,m'] λb[n,n'] ρ[(m'n'),(mn)]
            let mut acc = ZERO;
            for i in 0..d {
                for ip in 0..d {
                    let a = la[(i, ip)];
                    if a == ZERO {
                        continue;
                    }
                    for l in 0..d {
                        for lp in 0..d {
                            acc += a * lb[(l, lp)] * m[(ip * d + lp, i * d + l)];
                        }
                    }
                }
            }
            if acc.im.abs() > HERMITIAN_TOL {
                return Err(Error::NotHermitian(acc.im.abs()));
            }
            s[(j, k)] = acc.re;
        }
    }
    Ok(CorrelationMatrix {
        s,
        rho_a: bloch_vector(&state.reduced_a(), basis_a)?,
        rho_b: bloch_vector(&state.reduced_b(), basis_b)?,
    })
}

/// `c = (c_1, .., c_{d+1})`, `c_k ∈ {0..d-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftVector(Vec<usize>);

impl ShiftVector {
    pub fn new(values: Vec<usize>, d: usize) -> Result<Self> {
        if values.len() != d + 1 {
            return Err(Error::DimensionMismatch {
                expected: d + 1,
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|&&v| v >= d) {
            return Err(Error::InvalidParameter(format!(
                "shift {v} out of range 0..{d}"
            )));
        }
        Ok(Self(values))
    }

    pub fn uniform(value: usize, d: usize) -> Result<Self> {
        Self::new(vec![value; d + 1], d)
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    /// Every shift vector in row-major order.
    pub fn all(d: usize) -> impl Iterator<Item = ShiftVector> {
        let shape = TableShape {
            observables: d + 1,
            outcomes: d,
        };
        (0..shape.len()).map(move |i| ShiftVector(shape.tuple(i)))
    }
}

/// Measurement data for the witness: both suites, both Hermitian bases and
/// the Bloch images of every basis vector.
#[derive(Debug, Clone)]
pub struct WitnessSetup {
    pub dim: usize,
    pub suite_a: ObservableSuite,
    pub suite_b: ObservableSuite,
    pub basis_a: HermitianBasis,
    pub basis_b: HermitianBasis,
    pub alphas: Vec<Vec<BlochVector>>,
    pub betas: Vec<Vec<BlochVector>>,
}

impl WitnessSetup {
    /// Requires complete sets of `d + 1` mutually unbiased bases on both sides.
    pub fn new(
        suite_a: ObservableSuite,
        suite_b: ObservableSuite,
        basis_a: HermitianBasis,
        basis_b: HermitianBasis,
    ) -> Result<Self> {
        let d = suite_a.dim();
        if !is_prime(d) {
            return Err(Error::NotPrime(d));
        }
        for s in [&suite_a, &suite_b] {
            if s.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: s.dim(),
                });
            }
            if s.len() != d + 1 || !s.is_mutually_unbiased(1e-10) {
                return Err(Error::InvalidParameter(
                    "witness needs d+1 mutually unbiased bases per side".into(),
                ));
            }
        }
        let alphas = suite_alphas(&suite_a, &basis_a)?;
        let betas = suite_alphas(&suite_b, &basis_b)?;
        Ok(Self {
            dim: d,
            suite_a,
            suite_b,
            basis_a,
            basis_b,
            alphas,
            betas,
        })
    }

    /// Alice's MUBs with Gell-Mann basis; Bob's conjugated bases with the transposed basis.
    pub fn conjugate(d: usize) -> Result<Self> {
        let (suite_a, suite_b) = conjugate_bases(d)?;
        let basis_a = HermitianBasis::gell_mann(d)?;
        let basis_b = basis_a.transposed();
        Self::new(suite_a, suite_b, basis_a, basis_b)
    }

    /// All `2(d+1)` local measurements lifted to the composite space, Alice's first.
    pub fn composite_suite(&self) -> Result<ObservableSuite> {
        let d = self.dim;
        self.suite_a
            .embedded(d, true)
            .followed_by(&self.suite_b.embedded(d, false))
    }

    pub fn correlations(&self, state: &BipartiteState) -> Result<CorrelationMatrix> {
        correlation_matrix(state, &self.basis_a, &self.basis_b)
    }
}

/// Alice's full MUB set and Bob's entrywise-conjugated copy.
pub fn conjugate_bases(d: usize) -> Result<(ObservableSuite, ObservableSuite)> {
    let a = crate::measurement::mub_suite(d, d + 1)?;
    let b = a.conjugated()?;
    Ok((a, b))
}

/// Joint table over `(a_1..a_{d+1}, b_1..b_{d+1})` from the Bloch data.
pub fn bipartite_quasiprobability(
    state: &BipartiteState,
    setup: &WitnessSetup,
) -> Result<QuasiTable> {
    let d = setup.dim;
    if state.local_dim != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: state.local_dim,
        });
    }
    let k = d + 1;
    let shape = TableShape::new(2 * k, d)?;
    let corr = setup.correlations(state)?;

    let ua: Vec<Vec<f64>> = setup
        .alphas
        .iter()
        .map(|l| l.iter().map(|a| a.dot(&corr.rho_a)).collect())
        .collect();
    let ub: Vec<Vec<f64>> = setup
        .betas
        .iter()
        .map(|l| l.iter().map(|b| b.dot(&corr.rho_b)).collect())
        .collect();
    // s_beta[l][b] = S · β_l(b)
    let s_beta: Vec<Vec<DVector<f64>>> = setup
        .betas
        .iter()
        .map(|l| {
            l.iter()
                .map(|b| &corr.s * DVector::from_column_slice(b.components()))
                .collect()
        })
        .collect();
    // cross[k][a][l][b] = α_k(a) · S · β_l(b)
    let cross: Vec<Vec<Vec<Vec<f64>>>> = setup
        .alphas
        .iter()
        .map(|la| {
            la.iter()
                .map(|a| {
                    let av = DVector::from_column_slice(a.components());
                    s_beta
                        .iter()
                        .map(|lb| lb.iter().map(|sb| av.dot(sb)).collect())
                        .collect()
                })
                .collect()
        })
        .collect();

    let scale = 1.0 / shape.len() as f64;
    let values = (0..shape.len())
        .map(|i| {
            let t = shape.tuple(i);
            let (a, b) = t.split_at(k);
            let mut acc = 1.0;
            for kk in 0..k {
                acc += ua[kk][a[kk]] + ub[kk][b[kk]];
                for ll in 0..k {
                    acc += cross[kk][a[kk]][ll][b[ll]];
                }
            }
            acc * scale
        })
        .collect();
    QuasiTable::new(shape, values)
}

/// `M(c) = (1/d) Σ_k Σ_x β_k(x - c_k) α_k(x)ᵀ`.
pub fn witness_map(
    alphas: &[Vec<BlochVector>],
    betas: &[Vec<BlochVector>],
    c: &ShiftVector,
) -> Result<DMatrix<f64>> {
    let d = alphas
        .first()
        .map(|l| l.len())
        .ok_or_else(|| Error::InvalidParameter("no observables".into()))?;
    if alphas.len() != d + 1 || betas.len() != d + 1 || c.values().len() != d + 1 {
        return Err(Error::InvalidParameter(
            "witness needs d+1 observables on both sides".into(),
        ));
    }
    let n = d * d - 1;
    let mut m = DMatrix::zeros(n, n);
    for (k, (la, lb)) in alphas.iter().zip(betas).enumerate() {
        for (x, a) in la.iter().enumerate() {
            let b = &lb[(x + d - c.values()[k]) % d];
            let av = DVector::from_column_slice(a.components());
            let bv = DVector::from_column_slice(b.components());
            m += bv * av.transpose();
        }
    }
    Ok(m / d as f64)
}

/// `W_m(c) = d^{-(d+1)} (1 + Tr[S M(c)])`.
pub fn marginal_witness(
    corr: &CorrelationMatrix,
    alphas: &[Vec<BlochVector>],
    betas: &[Vec<BlochVector>],
    c: &ShiftVector,
) -> Result<f64> {
    let d = corr.rho_a.dim();
    let m = witness_map(alphas, betas, c)?;
    if m.nrows() != corr.s.nrows() {
        return Err(Error::DimensionMismatch {
            expected: corr.s.nrows(),
            found: m.nrows(),
        });
    }
    let tr = (&corr.s * m).trace();
    Ok((1.0 + tr) / (d as f64).powi(d as i32 + 1))
}

/// `W_m(c)` for every shift vector, in [`ShiftVector::all`] order.
///
/// Uses `Tr[S M(c)] = Σ_k g_k(c_k)` with
/// `g_k(s) = (1/d) Σ_x α_k(x)·S·β_k(x - s)`.
pub fn witness_values(
    corr: &CorrelationMatrix,
    alphas: &[Vec<BlochVector>],
    betas: &[Vec<BlochVector>],
) -> Vec<(ShiftVector, f64)> {
    let d = corr.rho_a.dim();
    let g: Vec<Vec<f64>> = alphas
        .iter()
        .zip(betas)
        .map(|(la, lb)| {
            let sb: Vec<DVector<f64>> = lb
                .iter()
                .map(|b| &corr.s * DVector::from_column_slice(b.components()))
                .collect();
            (0..d)
                .map(|shift| {
                    la.iter()
                        .enumerate()
                        .map(|(x, a)| {
                            DVector::from_column_slice(a.components()).dot(&sb[(x + d - shift) % d])
                        })
                        .sum::<f64>()
                        / d as f64
                })
                .collect()
        })
        .collect();
    let norm = 1.0 / (d as f64).powi(d as i32 + 1);
    ShiftVector::all(d)
        .map(|c| {
            let tr: f64 = c.values().iter().zip(&g).map(|(&s, gk)| gk[s]).sum();
            let v = (1.0 + tr) * norm;
            (c, v)
        })
        .collect()
}

/// Eq.-13 style marginal: `Σ_{a,b : a_j - b_j ≡ c_j} W(a, b)` from a joint table.
pub fn marginal_from_table(w: &QuasiTable, c: &ShiftVector) -> Result<f64> {
    let d = w.shape.outcomes;
    let k = c.values().len();
    if w.shape.observables != 2 * k {
        return Err(Error::DimensionMismatch {
            expected: 2 * k,
            found: w.shape.observables,
        });
    }
    let half = TableShape {
        observables: k,
        outcomes: d,
    };
    let mut tuple = vec![0; 2 * k];
    let mut total = 0.0;
    for i in 0..half.len() {
        let a = half.tuple(i);
        for j in 0..k {
            tuple[j] = a[j];
            tuple[k + j] = (a[j] + d - c.values()[j]) % d;
        }
        total += w.get(&tuple);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessVerdict {
    pub entangled: bool,
    pub witness_c: Vec<usize>,
    pub value: f64,
}

/// Minimum of `W_m` over all shift vectors; negative certifies entanglement.
pub fn witness_verdict(
    state: &BipartiteState,
    setup: &WitnessSetup,
    eps: f64,
) -> Result<WitnessVerdict> {
    let corr = setup.correlations(state)?;
    let (c, value) = witness_values(&corr, &setup.alphas, &setup.betas)
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one shift vector");
    Ok(WitnessVerdict {
        entangled: value < -eps,
        witness_c: c.values().to_vec(),
        value,
    })
}

/// `p |ψ⟩⟨ψ| + (1-p) 1/d²` with `|ψ⟩ = Σ_n |n⟩|n⟩ / √d`.
pub fn werner_state(d: usize, p: f64) -> Result<BipartiteState> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    let dd = d * d;
    let mut m = identity(dd) * Complex64::new((1.0 - p) / dd as f64, 0.0);
    let w = Complex64::new(p / d as f64, 0.0);
    for n in 0..d {
        for np in 0..d {
            m[(n * d + n, np * d + np)] += w;
        }
    }
    BipartiteState::new(d, DensityOperator::new(m)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WernerPoint {
    pub p: f64,
    pub min_value: f64,
    pub argmin: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WernerScan {
    pub dim: usize,
    pub points: Vec<WernerPoint>,
    /// Linear interpolation of the first sign change of `min_c W_m`.
    pub crossing: Option<f64>,
}

/// `min_c W_m(c; p)` of the Werner family under conjugate bases.
pub fn werner_min_witness(setup: &WitnessSetup, p: f64) -> Result<WernerPoint> {
    let v = witness_verdict(&werner_state(setup.dim, p)?, setup, 0.0)?;
    Ok(WernerPoint {
        p,
        min_value: v.value,
        argmin: v.witness_c,
    })
}

pub fn werner_threshold_scan(d: usize, p_grid: &[f64]) -> Result<WernerScan> {
    let setup = WitnessSetup::conjugate(d)?;
    let points = p_grid
        .iter()
        .map(|&p| werner_min_witness(&setup, p))
        .collect::<Result<Vec<_>>>()?;
    let crossing = points.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.min_value >= 0.0 && b.min_value < 0.0 {
            Some(a.p + (b.p - a.p) * a.min_value / (a.min_value - b.min_value))
        } else {
            None
        }
    });
    Ok(WernerScan {
        dim: d,
        points,
        crossing,
    })
}

/// Mixture of `m ∈ [1, d²]` random pure product states with flat-Dirichlet
/// weights (normalized unit exponentials).
pub fn random_separable<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<BipartiteState> {
    let m = rng.random_range(1..=d * d);
    let raw: Vec<f64> = (0..m).map(|_| -rng.random::<f64>().ln()).collect();
    let total: f64 = raw.iter().sum();
    let parts: Vec<(f64, DensityOperator)> = raw
        .into_iter()
        .map(|w| (w / total, random_pure(d, rng).tensor(&random_pure(d, rng))))
        .collect();
    BipartiteState::new(d, DensityOperator::mixture(&parts)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::quasiprobability_of;
    use crate::linalg::{hermitian_eigenvalues, random_density};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn product_state_correlations_factorize() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in [2, 3] {
            let setup = WitnessSetup::conjugate(d).unwrap();
            let a = random_density(d, &mut rng);
            let b = random_density(d, &mut rng);
            let corr = setup
                .correlations(&BipartiteState::product(&a, &b).unwrap())
                .unwrap();
            let ra = bloch_vector(&a, &setup.basis_a).unwrap();
            let rb = bloch_vector(&b, &setup.basis_b).unwrap();
            for j in 0..corr.s.nrows() {
                for k in 0..corr.s.ncols() {
                    let want = ra.components()[j] * rb.components()[k];
                    assert!((corr.s[(j, k)] - want).abs() < 1e-12);
                }
            }
            assert!((corr.rho_a.dot(&ra) - ra.dot(&ra)).abs() < 1e-12);
        }
    }

    #[test]
    fn werner_correlations_are_scaled_identity() {
        for d in [2, 3, 5] {
            let setup = WitnessSetup::conjugate(d).unwrap();
            for p in [0.0, 0.3, 1.0] {
                let corr = setup.correlations(&werner_state(d, p).unwrap()).unwrap();
                let n = d * d - 1;
                assert!((&corr.s - DMatrix::<f64>::identity(n, n) * p).amax() < 1e-12);
                assert!(corr.rho_a.norm() < 1e-12 && corr.rho_b.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn werner_spectrum() {
        let w = werner_state(3, 0.5).unwrap();
        let ev = w.density().eigenvalues();
        for v in &ev[..8] {
            assert!((v - 0.5 / 9.0).abs() < 1e-12);
        }
        assert!((ev[8] - (0.5 + 0.5 / 9.0)).abs() < 1e-12);

        let pure = werner_state(2, 1.0).unwrap();
        let ev = pure.density().eigenvalues();
        assert!((ev[3] - 1.0).abs() < 1e-12 && ev[..3].iter().all(|v| v.abs() < 1e-12));

        let mixed = werner_state(2, 0.0).unwrap();
        assert!(
            (mixed.density().matrix() - DensityOperator::maximally_mixed(4).matrix()).norm()
                < 1e-15
        );

        assert!(werner_state(2, 1.1).is_err());
        assert!(werner_state(2, -0.1).is_err());
    }

    #[test]
    fn conjugate_pair_properties() {
        let (a, b) = conjugate_bases(2).unwrap();
        let (ba, bb) = (a.bases().unwrap(), b.bases().unwrap());
        // σy eigenbasis conjugated becomes the −σy eigenbasis with the same labels
        let y = HermitianBasis::gell_mann(2).unwrap().elements()[1].clone();
        for (i, v) in bb[1].vectors().iter().enumerate() {
            let sign = if i == 0 { -1.0 } else { 1.0 };
            assert!((&y * v - v * Complex64::new(sign, 0.0)).norm() < 1e-12);
        }
        for k in [0, 2] {
            for (u, v) in ba[k].vectors().iter().zip(bb[k].vectors()) {
                assert!((u - v).norm() < 1e-15);
            }
        }

        for d in [2, 3, 5] {
            let setup = WitnessSetup::conjugate(d).unwrap();
            for (la, lb) in setup.alphas.iter().zip(&setup.betas) {
                for x in 0..d {
                    assert!((la[x].dot(&lb[(x + d - 1) % d]) + 1.0).abs() < 1e-12);
                    for (y, b) in lb.iter().enumerate() {
                        let want = if x == y { d as f64 - 1.0 } else { -1.0 };
                        assert!((la[x].dot(b) - want).abs() < 1e-12);
                    }
                    let diff: f64 = la[x]
                        .components()
                        .iter()
                        .zip(lb[x].components())
                        .map(|(p, q)| (p - q).abs())
                        .fold(0.0, f64::max);
                    assert!(diff < 1e-12);
                }
            }
        }
    }

    #[test]
    fn uniform_table_for_maximally_mixed() {
        let setup = WitnessSetup::conjugate(2).unwrap();
        let state = werner_state(2, 0.0).unwrap();
        let w = bipartite_quasiprobability(&state, &setup).unwrap();
        assert!(w.values.iter().all(|v| (v - 1.0 / 64.0).abs() < 1e-15));
    }

    #[test]
    fn pure_werner_table_matches_bloch_expression() {
        let setup = WitnessSetup::conjugate(2).unwrap();
        let w = bipartite_quasiprobability(&werner_state(2, 1.0).unwrap(), &setup).unwrap();
        for i in 0..w.shape.len() {
            let t = w.shape.tuple(i);
            let mut acc = 1.0;
            for k in 0..3 {
                for l in 0..3 {
                    // S = I
                    acc += setup.alphas[k][t[k]].dot(&setup.betas[l][t[3 + l]]);
                }
            }
            assert!((w.values[i] - acc / 64.0).abs() < 1e-14);
        }
    }

    #[test]
    fn bloch_table_matches_composite_engine() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let setup = WitnessSetup::conjugate(2).unwrap();
        let composite = setup.composite_suite().unwrap();
        for _ in 0..4 {
            let state = BipartiteState::new(2, random_density(4, &mut rng)).unwrap();
            let closed = bipartite_quasiprobability(&state, &setup).unwrap();
            let brute = quasiprobability_of(state.density(), &composite).unwrap();
            assert!(closed.max_abs_diff(&brute) < 1e-10);
        }
    }

    #[test]
    fn witness_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for d in [2, 3] {
            let setup = WitnessSetup::conjugate(d).unwrap();
            let state = BipartiteState::new(d, random_density(d * d, &mut rng)).unwrap();
            let corr = setup.correlations(&state).unwrap();
            let table = bipartite_quasiprobability(&state, &setup).unwrap();
            let fast = witness_values(&corr, &setup.alphas, &setup.betas);
            let mut total = 0.0;
            for (c, v) in &fast {
                let via_map = marginal_witness(&corr, &setup.alphas, &setup.betas, c).unwrap();
                let via_table = marginal_from_table(&table, c).unwrap();
                assert!((via_map - v).abs() < 1e-12);
                assert!((via_table - v).abs() < 1e-10);
                total += v;
            }
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn werner_value_at_all_ones() {
        let setup = WitnessSetup::conjugate(2).unwrap();
        let c = ShiftVector::uniform(1, 2).unwrap();
        for p in [0.0, 0.2, 1.0 / 3.0, 0.7, 1.0] {
            let corr = setup.correlations(&werner_state(2, p).unwrap()).unwrap();
            let v = marginal_witness(&corr, &setup.alphas, &setup.betas, &c).unwrap();
            assert!((v - (1.0 - 3.0 * p) / 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_qubit_states_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let setup = WitnessSetup::conjugate(2).unwrap();
        for _ in 0..100 {
            let s = random_separable(2, &mut rng).unwrap();
            let v = witness_verdict(&s, &setup, 1e-10).unwrap();
            assert!(!v.entangled, "{v:?}");
        }
    }

    // For d = 3 an independent relabeling of each basis does not map states to
    // states, so M(c)·ρ_A can leave the Bloch body and products go negative.
    #[test]
    fn qutrit_shifted_map_leaves_state_space() {
        let setup = WitnessSetup::conjugate(3).unwrap();
        let bases = setup.suite_a.bases().unwrap();
        let psi = [
            Complex64::new(0.6, 0.1),
            Complex64::new(-0.3, 0.5),
            Complex64::new(0.2, -0.5),
        ];
        let a = DensityOperator::pure(&DVector::from_row_slice(&psi)).unwrap();
        let c = ShiftVector::new(vec![1, 1, 0, 2], 3).unwrap();
        let mut x = -identity(3);
        for (k, fam) in bases.iter().enumerate() {
            let q = fam.projectors();
            for o in 0..3 {
                let p = a.expectation(&q[o]).re;
                x += &q[(o + 3 - c.values()[k]) % 3] * Complex64::new(p, 0.0);
            }
        }
        let eig = hermitian_eigenvalues(&x);
        assert!(eig[0] < -0.03, "{eig:?}");

        let low = {
            let e = nalgebra::SymmetricEigen::new(x.clone());
            let j = (0..3)
                .min_by(|&i, &j| e.eigenvalues[i].partial_cmp(&e.eigenvalues[j]).unwrap())
                .unwrap();
            e.eigenvectors.column(j).into_owned()
        };
        // Bob's kets are conjugated, so the worst partner is the conjugate eigenvector.
        let b = DensityOperator::pure(&low.conjugate()).unwrap();
        let s = BipartiteState::product(&a, &b).unwrap();
        let w = marginal_witness(
            &setup.correlations(&s).unwrap(),
            &setup.alphas,
            &setup.betas,
            &c,
        )
        .unwrap();
        assert!(w < -1e-3, "{w}");
        let table = bipartite_quasiprobability(&s, &setup).unwrap();
        assert!((marginal_from_table(&table, &c).unwrap() - w).abs() < 1e-12);
    }

    #[test]
    fn threshold_scan_crosses() {
        for (d, threshold) in [(2, 1.0 / 3.0), (3, 0.25)] {
            let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
            let scan = werner_threshold_scan(d, &grid).unwrap();
            let x = scan.crossing.unwrap();
            assert!((x - threshold).abs() < 1e-9, "d={d}: {x}");
            for pt in &scan.points {
                let want = (1.0 - pt.p * (d + 1) as f64) / (d as f64).powi(d as i32 + 1);
                assert!((pt.min_value - want).abs() < 1e-10);
                if pt.p < threshold {
                    assert!(pt.min_value >= 0.0);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ShiftVector::new(vec![0, 1], 2).is_err());
        assert!(ShiftVector::new(vec![0, 1, 2], 2).is_err());
        assert!(WitnessSetup::conjugate(4).is_err());
        let (a, _) = conjugate_bases(2).unwrap();
        let partial = crate::measurement::mub_suite(2, 2).unwrap();
        let h = HermitianBasis::gell_mann(2).unwrap();
        assert!(WitnessSetup::new(a, partial, h.clone(), h).is_err());
        let big = WitnessSetup::conjugate(5).unwrap();
        let state = werner_state(5, 0.5).unwrap();
        assert!(matches!(
            bipartite_quasiprobability(&state, &big),
            Err(Error::TableTooLarge(..))
        ));
    }
}
