//! Hidden-variable models with noninvasive measurability.
//!
//! Such a model assigns one nonnegative joint distribution `p_cl(a)` to all
//! observables. Its expectations `χ_cl(n) = Σ_a ω^{n·a} p_cl(a)` transform
//! back to `p_cl` itself, so a negative quasiprobability rules the model out.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{dft_axes, quasiprobability, CharacteristicTable, QuasiTable, TableShape};
use crate::error::{Error, Result};
use crate::{NEGATIVITY_EPS, NORMALIZATION_TOL};

/// Nonnegative normalized joint distribution over `{0..D-1}^K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalJoint {
    shape: TableShape,
    probabilities: Vec<f64>,
}

impl ClassicalJoint {
    pub fn new(shape: TableShape, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != shape.len() {
            return Err(Error::DimensionMismatch {
                expected: shape.len(),
                found: probabilities.len(),
            });
        }
        if let Some(p) = probabilities.iter().find(|&&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidDistribution(format!("entry {p} is negative")));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}"
            )));
        }
        Ok(Self {
            shape,
            probabilities,
        })
    }

    /// Point mass at `outcome`.
    pub fn deterministic(shape: TableShape, outcome: &[usize]) -> Result<Self> {
        let mut p = vec![0.0; shape.len()];
        p[shape.index(outcome)] = 1.0;
        Self::new(shape, p)
    }

    /// Random distribution from normalized exponential weights.
    pub fn random<R: Rng + ?Sized>(shape: TableShape, rng: &mut R) -> Self {
        let raw: Vec<f64> = (0..shape.len())
            .map(|_| -rng.random::<f64>().ln())
            .collect();
        let total: f64 = raw.iter().sum();
        Self {
            shape,
            probabilities: raw.into_iter().map(|x| x / total).collect(),
        }
    }

    pub fn shape(&self) -> TableShape {
        self.shape
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }
}

pub fn classical_characteristic(p: &ClassicalJoint) -> CharacteristicTable {
    let mut values: Vec<Complex64> = p
        .probabilities
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    dft_axes(&mut values, p.shape, 1.0);
    CharacteristicTable {
        shape: p.shape,
        values,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundtripReport {
    pub max_deviation: f64,
    pub passed: bool,
}

/// Checks that the quasiprobability of a classical model reproduces the model.
pub fn lhv_roundtrip_check(p: &ClassicalJoint) -> RoundtripReport {
    let w = quasiprobability(&classical_characteristic(p));
    let max_deviation = match w {
        Ok(w) => w
            .values
            .iter()
            .zip(&p.probabilities)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
        Err(_) => f64::INFINITY,
    };
    RoundtripReport {
        max_deviation,
        passed: max_deviation < 1e-12,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum Verdict {
    #[serde(rename = "no-LHV")]
    NoLhv { min_entry: f64 },
    /// `model` is the explicit hidden-variable distribution `p_cl = W`.
    #[serde(rename = "LHV-consistent")]
    LhvConsistent { min_entry: f64, model: QuasiTable },
}

impl Verdict {
    pub fn is_nonclassical(&self) -> bool {
        matches!(self, Verdict::NoLhv { .. })
    }

    pub fn min_entry(&self) -> f64 {
        match self {
            Verdict::NoLhv { min_entry } | Verdict::LhvConsistent { min_entry, .. } => *min_entry,
        }
    }
}

pub fn certify_nonclassical(w: &QuasiTable) -> Verdict {
    certify_with_tol(w, NEGATIVITY_EPS)
}

pub fn certify_with_tol(w: &QuasiTable, eps: f64) -> Verdict {
    let min_entry = w.min_entry();
    if min_entry < -eps {
        Verdict::NoLhv { min_entry }
    } else {
        Verdict::LhvConsistent {
            min_entry,
            model: w.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{nonclassicality, quasiprobability_of};
    use crate::linalg::{qubit_state, random_density, DensityOperator};
    use crate::measurement::mub_suite;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_model_has_delta_chi() {
        let shape = TableShape::new(3, 2).unwrap();
        let p = ClassicalJoint::new(shape, vec![0.125; 8]).unwrap();
        let chi = classical_characteristic(&p);
        assert!((chi.values[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(chi.values[1..].iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn deterministic_model_is_pure_phase() {
        let shape = TableShape::new(2, 3).unwrap();
        let a0 = [2, 1];
        let p = ClassicalJoint::deterministic(shape, &a0).unwrap();
        let chi = classical_characteristic(&p);
        for i in 0..shape.len() {
            let n = shape.tuple(i);
            let phase = (n[0] * a0[0] + n[1] * a0[1]) % 3;
            let want = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase as f64 / 3.0);
            assert!((chi.values[i] - want).norm() < 1e-12);
            assert!((chi.values[i].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_models_rejected() {
        let shape = TableShape::new(1, 2).unwrap();
        assert!(ClassicalJoint::new(shape, vec![1.2, -0.2]).is_err());
        assert!(ClassicalJoint::new(shape, vec![0.2, 0.2]).is_err());
        assert!(ClassicalJoint::new(shape, vec![0.5]).is_err());
    }

    #[test]
    fn roundtrips_across_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for (k, d) in [(2, 2), (3, 2), (2, 3), (4, 3)] {
            let shape = TableShape::new(k, d).unwrap();
            for _ in 0..250 {
                let p = ClassicalJoint::random(shape, &mut rng);
                let r = lhv_roundtrip_check(&p);
                assert!(r.passed, "{r:?}");
                let w = quasiprobability(&classical_characteristic(&p)).unwrap();
                assert!(!certify_nonclassical(&w).is_nonclassical());
            }
        }
    }

    #[test]
    fn product_and_mixture_models() {
        let shape = TableShape::new(2, 3).unwrap();
        let (m1, m2) = ([0.2, 0.3, 0.5], [0.6, 0.1, 0.3]);
        let prod: Vec<f64> = (0..9).map(|i| m1[i / 3] * m2[i % 3]).collect();
        let p = ClassicalJoint::new(shape, prod.clone()).unwrap();
        assert!(lhv_roundtrip_check(&p).passed);
        let w = quasiprobability(&classical_characteristic(&p)).unwrap();
        for i in 0..9 {
            assert!((w.values[i] - m1[i / 3] * m2[i % 3]).abs() < 1e-12);
        }

        let a = ClassicalJoint::deterministic(shape, &[0, 1]).unwrap();
        let b = ClassicalJoint::deterministic(shape, &[2, 2]).unwrap();
        let mix: Vec<f64> = a
            .probabilities()
            .iter()
            .zip(b.probabilities())
            .map(|(x, y)| 0.3 * x + 0.7 * y)
            .collect();
        let p = ClassicalJoint::new(shape, mix.clone()).unwrap();
        assert!(lhv_roundtrip_check(&p).passed);
        let w = quasiprobability(&classical_characteristic(&p)).unwrap();
        for (g, e) in w.values.iter().zip(&mix) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn verdicts_for_qubit_states() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let xy = mub_suite(2, 2).unwrap();
        let w = quasiprobability_of(&qubit_state([s, s, 0.0]).unwrap(), &xy).unwrap();
        assert!(certify_nonclassical(&w).is_nonclassical());

        let w = quasiprobability_of(&DensityOperator::maximally_mixed(2), &xy).unwrap();
        match certify_nonclassical(&w) {
            Verdict::LhvConsistent { model, .. } => {
                assert!(model.values.iter().all(|v| (v - 0.25).abs() < 1e-14))
            }
            v => panic!("unexpected {v:?}"),
        }

        let w = quasiprobability_of(&qubit_state([0.5, 0.3, 0.0]).unwrap(), &xy).unwrap();
        assert!(!certify_nonclassical(&w).is_nonclassical());
    }

    #[test]
    fn verdict_agrees_with_negativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let suite = mub_suite(3, 4).unwrap();
        for _ in 0..50 {
            let w = quasiprobability_of(&random_density(3, &mut rng), &suite).unwrap();
            let n = nonclassicality(&w);
            let v = certify_nonclassical(&w);
            assert_eq!(v.is_nonclassical(), n > 0.0);
            assert_eq!(
                v.is_nonclassical(),
                n > NEGATIVITY_EPS * w.shape.len() as f64
            );
        }
    }

    #[test]
    fn verdict_json_shape() {
        let shape = TableShape::new(1, 2).unwrap();
        let w = QuasiTable::new(shape, vec![1.2, -0.2]).unwrap();
        let json = serde_json::to_value(certify_nonclassical(&w)).unwrap();
        assert_eq!(json["verdict"], "no-LHV");
        assert!((json["min_entry"].as_f64().unwrap() + 0.2).abs() < 1e-15);
        assert!(json.get("model").is_none());
    }
}
