//! Sequential measurement statistics, the characteristic function, the
//! commensurate quasiprobability and its negativity.
//!
//! Tables over `{0..D-1}^K` are stored densely in row-major order: the first
//! observable (earliest in time) is the most significant index.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{BlochVector, ComplexMatrix, DensityOperator, ONE, ZERO};
use crate::measurement::{KrausSet, ObservableSuite};
use crate::{IMAGINARY_TOL, NEGATIVITY_EPS, NORMALIZATION_TOL};

/// Largest dense table (`D^K` entries) the engine will build.
pub const MAX_TABLE_ENTRIES: usize = 1_000_000;
/// Largest number of sequential branches `(D+1)^K` summed over all setups.
pub const MAX_BRANCHES: usize = 50_000_000;

/// `K` observables with `D` outcomes each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableShape {
    pub observables: usize,
    pub outcomes: usize,
}

impl TableShape {
    pub fn new(observables: usize, outcomes: usize) -> Result<Self> {
        if observables == 0 {
            return Err(Error::InvalidParameter(
                "need at least one observable".into(),
            ));
        }
        if outcomes < 2 {
            return Err(Error::InvalidParameter("need at least two outcomes".into()));
        }
        let shape = Self {
            observables,
            outcomes,
        };
        match shape.checked_len() {
            Some(n) if n <= MAX_TABLE_ENTRIES => Ok(shape),
            Some(n) => Err(Error::TableTooLarge(n, MAX_TABLE_ENTRIES)),
            None => Err(Error::TableTooLarge(usize::MAX, MAX_TABLE_ENTRIES)),
        }
    }

    fn checked_len(&self) -> Option<usize> {
        self.outcomes.checked_pow(self.observables as u32)
    }

    pub fn len(&self) -> usize {
        self.outcomes.pow(self.observables as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.observables);
        tuple.iter().fold(0, |acc, &t| acc * self.outcomes + t)
    }

    pub fn tuple(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.observables];
        for slot in out.iter_mut().rev() {
            *slot = index % self.outcomes;
            index /= self.outcomes;
        }
        out
    }
}

/// In-place multidimensional DFT, `x(n) ← Σ_a ω^{sign · n·a} x(a)` along every axis.
pub(crate) fn dft_axes(values: &mut [Complex64], shape: TableShape, sign: f64) {
    let d = shape.outcomes;
    let twiddle: Vec<Complex64> = (0..d)
        .map(|m| Complex64::from_polar(1.0, sign * 2.0 * PI * m as f64 / d as f64))
        .collect();
    let mut line = vec![ZERO; d];
    let mut stride = 1;
    for _ in 0..shape.observables {
        let block = stride * d;
        for start in (0..values.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (a, slot) in line.iter_mut().enumerate() {
                    *slot = values[base + a * stride];
                }
                for n in 0..d {
                    let mut acc = ZERO;
                    for (a, v) in line.iter().enumerate() {
                        acc += twiddle[(n * a) % d] * v;
                    }
                    values[base + n * stride] = acc;
                }
            }
        }
        stride = block;
    }
}

/// `n = (n_1, .., n_K)`; `n_k = 0` leaves observable `k` unmeasured.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetupSelector(Vec<usize>);

impl SetupSelector {
    pub fn new(values: Vec<usize>, shape: TableShape) -> Result<Self> {
        if values.len() != shape.observables {
            return Err(Error::DimensionMismatch {
                expected: shape.observables,
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|&&v| v >= shape.outcomes) {
            return Err(Error::InvalidParameter(format!(
                "selector component {v} out of range 0..{}",
                shape.outcomes
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    /// Indices of the measured observables, in chronological order.
    pub fn selected(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&k| self.0[k] != 0).collect()
    }
}

/// Outcome statistics of the selected observables measured in sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub observables: Vec<usize>,
    pub outcomes: usize,
    /// Row-major over the outcome tuples of `observables`.
    pub probabilities: Vec<f64>,
}

impl JointDistribution {
    pub fn probability(&self, tuple: &[usize]) -> f64 {
        let idx = tuple.iter().fold(0, |acc, &t| acc * self.outcomes + t);
        self.probabilities[idx]
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicTable {
    pub shape: TableShape,
    pub values: Vec<Complex64>,
}

impl CharacteristicTable {
    pub fn new(shape: TableShape, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::DimensionMismatch {
                expected: shape.len(),
                found: values.len(),
            });
        }
        Ok(Self { shape, values })
    }

    pub fn get(&self, n: &[usize]) -> Complex64 {
        self.values[self.shape.index(n)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiTable {
    pub shape: TableShape,
    pub values: Vec<f64>,
}

impl QuasiTable {
    pub fn new(shape: TableShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::DimensionMismatch {
                expected: shape.len(),
                found: values.len(),
            });
        }
        Ok(Self { shape, values })
    }

    pub fn get(&self, a: &[usize]) -> f64 {
        self.values[self.shape.index(a)]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index tuple and value of the most negative entry.
    pub fn argmin(&self) -> (Vec<usize>, f64) {
        let (i, v) = self
            .values
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("tables are never empty");
        (self.shape.tuple(i), v)
    }

    pub fn max_abs_diff(&self, other: &QuasiTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_dims(rho: &DensityOperator, suite: &ObservableSuite) -> Result<()> {
    if rho.dim() != suite.dim() {
        return Err(Error::DimensionMismatch {
            expected: suite.dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

// Unnormalized branch weights Tr[A_m .. A_1 ρ A_1† .. A_m†], pushed in row-major order.
fn branch_weights(state: &ComplexMatrix, sets: &[&KrausSet], out: &mut Vec<f64>) {
    match sets.split_first() {
        None => out.push(state.trace().re),
        Some((first, rest)) => {
            for op in first.operators() {
                let next = op * state * op.adjoint();
                branch_weights(&next, rest, out);
            }
        }
    }
}

fn joint_for(rho: &DensityOperator, suite: &ObservableSuite, selected: &[usize]) -> Vec<f64> {
    let sets: Vec<&KrausSet> = selected.iter().map(|&k| &suite.sets()[k]).collect();
    let mut out = Vec::with_capacity(suite.outcomes().pow(selected.len() as u32));
    branch_weights(rho.matrix(), &sets, &mut out);
    out
}

pub fn joint_distribution(
    rho: &DensityOperator,
    suite: &ObservableSuite,
    sel: &SetupSelector,
) -> Result<JointDistribution> {
    check_dims(rho, suite)?;
    if sel.values().len() != suite.len() {
        return Err(Error::DimensionMismatch {
            expected: suite.len(),
            found: sel.values().len(),
        });
    }
    let observables = sel.selected();
    let probabilities = joint_for(rho, suite, &observables);
    Ok(JointDistribution {
        observables,
        outcomes: suite.outcomes(),
        probabilities,
    })
}

/// Distribution of observable `k` measured on its own.
pub fn observable_distribution(
    rho: &DensityOperator,
    suite: &ObservableSuite,
    k: usize,
) -> Result<Vec<f64>> {
    check_dims(rho, suite)?;
    if k >= suite.len() {
        return Err(Error::InvalidIndexSet(format!(
            "observable {k} out of range"
        )));
    }
    Ok(joint_for(rho, suite, &[k]))
}

fn mask_members(mask: usize, k: usize) -> Vec<usize> {
    (0..k).filter(|&i| mask & (1 << i) != 0).collect()
}

/// `χ(n) = Σ_a ω^{n·a} p(a | setup n)` over every selector `n`.
pub fn characteristic_function(
    rho: &DensityOperator,
    suite: &ObservableSuite,
) -> Result<CharacteristicTable> {
    check_dims(rho, suite)?;
    let k = suite.len();
    let d = suite.outcomes();
    let shape = TableShape::new(k, d)?;
    let work = (d + 1).checked_pow(k as u32).unwrap_or(usize::MAX);
    if work > MAX_BRANCHES {
        return Err(Error::TableTooLarge(work, MAX_BRANCHES));
    }

    // Each subset of measured observables is an independent sequential experiment.
    let per_mask: Vec<(usize, Vec<Complex64>)> = (0..1usize << k)
        .into_par_iter()
        .map(|mask| {
            let members = mask_members(mask, k);
            let mut spectrum: Vec<Complex64> = joint_for(rho, suite, &members)
                .into_iter()
                .map(|p| Complex64::new(p, 0.0))
                .collect();
            if !members.is_empty() {
                let sub = TableShape {
                    observables: members.len(),
                    outcomes: d,
                };
                dft_axes(&mut spectrum, sub, 1.0);
            }
            (mask, spectrum)
        })
        .collect();

    let mut values = vec![ZERO; shape.len()];
    for (mask, spectrum) in per_mask {
        let members = mask_members(mask, k);
        let sub = TableShape {
            observables: members.len().max(1),
            outcomes: d,
        };
        // enumerate n restricted to members with every component nonzero
        let count = (d - 1).pow(members.len() as u32);
        let mut n = vec![0usize; k];
        let mut local = vec![0usize; members.len()];
        for mut c in 0..count {
            for (slot, &m) in local.iter_mut().zip(&members).rev() {
                *slot = 1 + c % (d - 1);
                c /= d - 1;
                n[m] = *slot;
            }
            let sub_idx = if members.is_empty() {
                0
            } else {
                sub.index(&local)
            };
            values[shape.index(&n)] = spectrum[sub_idx];
        }
    }
    values[0] = ONE;
    CharacteristicTable::new(shape, values)
}

/// `W(a) = D^{-K} Σ_n ω^{-a·n} χ(n)`.
pub fn quasiprobability(chi: &CharacteristicTable) -> Result<QuasiTable> {
    let origin = chi.values[0];
    if (origin - ONE).norm() > NORMALIZATION_TOL {
        return Err(Error::Unnormalized(origin.re));
    }
    let mut buf = chi.values.clone();
    dft_axes(&mut buf, chi.shape, -1.0);
    let scale = 1.0 / chi.shape.len() as f64;
    let residue = buf.iter().map(|z| (z.im * scale).abs()).fold(0.0, f64::max);
    if residue > IMAGINARY_TOL {
        return Err(Error::ImaginaryResidue(residue));
    }
    QuasiTable::new(chi.shape, buf.into_iter().map(|z| z.re * scale).collect())
}

/// `χ(n) = Σ_a ω^{n·a} W(a)`.
pub fn inverse_transform(w: &QuasiTable) -> CharacteristicTable {
    let mut buf: Vec<Complex64> = w.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft_axes(&mut buf, w.shape, 1.0);
    CharacteristicTable {
        shape: w.shape,
        values: buf,
    }
}

/// Characteristic function followed by the Fourier transform.
pub fn quasiprobability_of(rho: &DensityOperator, suite: &ObservableSuite) -> Result<QuasiTable> {
    quasiprobability(&characteristic_function(rho, suite)?)
}

/// `N = ½ Σ_a (|W(a)| - W(a))`, ignoring entries in `[-ε, 0)`.
pub fn nonclassicality(w: &QuasiTable) -> f64 {
    nonclassicality_with_tol(w, NEGATIVITY_EPS)
}

pub fn nonclassicality_with_tol(w: &QuasiTable, eps: f64) -> f64 {
    w.values
        .iter()
        .filter(|&&v| v < -eps)
        .map(|&v| 0.5 * (v.abs() - v))
        .sum()
}

/// Sums out every index not in `keep`. The result is ordered by ascending index.
pub fn marginal(w: &QuasiTable, keep: &[usize]) -> Result<QuasiTable> {
    let k = w.shape.observables;
    if keep.is_empty() {
        return Err(Error::InvalidIndexSet("keep set is empty".into()));
    }
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != keep.len() {
        return Err(Error::InvalidIndexSet(format!(
            "duplicate indices in {keep:?}"
        )));
    }
    if let Some(bad) = sorted.iter().find(|&&i| i >= k) {
        return Err(Error::InvalidIndexSet(format!(
            "index {bad} out of range for {k} observables"
        )));
    }
    let shape = TableShape::new(sorted.len(), w.shape.outcomes)?;
    let mut values = vec![0.0; shape.len()];
    let mut sub = vec![0; sorted.len()];
    for (i, &v) in w.values.iter().enumerate() {
        let full = w.shape.tuple(i);
        for (slot, &m) in sub.iter_mut().zip(&sorted) {
            *slot = full[m];
        }
        values[shape.index(&sub)] += v;
    }
    QuasiTable::new(shape, values)
}

/// `W(a) = d^{-K} (1 + Σ_k α_k(a_k)·ρ)`, valid for mutually unbiased suites.
pub fn mub_closed_form(rho_bloch: &BlochVector, alphas: &[Vec<BlochVector>]) -> Result<QuasiTable> {
    let d = rho_bloch.dim();
    for list in alphas {
        if list.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: list.len(),
            });
        }
        if let Some(a) = list.iter().find(|a| a.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: a.dim(),
            });
        }
    }
    let shape = TableShape::new(alphas.len(), d)?;
    let dots: Vec<Vec<f64>> = alphas
        .iter()
        .map(|list| list.iter().map(|a| a.dot(rho_bloch)).collect())
        .collect();
    let scale = 1.0 / shape.len() as f64;
    let values = (0..shape.len())
        .map(|i| {
            let tuple = shape.tuple(i);
            let s: f64 = tuple.iter().zip(&dots).map(|(&a, row)| row[a]).sum();
            (1.0 + s) * scale
        })
        .collect();
    QuasiTable::new(shape, values)
}
