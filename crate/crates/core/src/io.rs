//! JSON schemas for states and measurements, CSV writers for tables.
//!
//! Matrices are flat row-major lists of `[re, im]` pairs.
//!
//! ```json
//! {"dim": 2, "matrix": [[0.5,0],[0.5,0],[0.5,0],[0.5,0]]}
//! {"bloch": [0.7071, 0.7071, 0.0]}
//! {"kind": "mub", "d": 3, "K": 4}
//! {"kind": "biased", "theta": 0.2618}
//! {"kind": "custom", "d": 2, "kraus": [[m00, m01], [m10, m11, m12]]}
//! ```

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{CharacteristicTable, QuasiTable};
use crate::error::{Error, Result};
use crate::linalg::{
    state_from_bloch, BlochVector, ComplexMatrix, DensityOperator, HermitianBasis,
};
use crate::measurement::{biased_qubit_suite, mub_suite, KrausSet, ObservableSuite};

pub type MatrixJson = Vec<[f64; 2]>;

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}

pub fn matrix_from_json(dim: usize, entries: &[[f64; 2]]) -> Result<ComplexMatrix> {
    if entries.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            found: entries.len(),
        });
    }
    Ok(ComplexMatrix::from_row_iterator(
        dim,
        dim,
        entries.iter().map(|[re, im]| Complex64::new(*re, *im)),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateJson {
    Matrix {
        dim: usize,
        matrix: MatrixJson,
    },
    /// Components in the generalized Gell-Mann basis; `d` is inferred.
    Bloch {
        bloch: Vec<f64>,
    },
}

impl StateJson {
    pub fn to_density(&self) -> Result<DensityOperator> {
        match self {
            StateJson::Matrix { dim, matrix } => {
                DensityOperator::new(matrix_from_json(*dim, matrix)?)
            }
            StateJson::Bloch { bloch } => {
                let v = BlochVector::from_components(bloch.clone())?;
                state_from_bloch(&v, &HermitianBasis::gell_mann(v.dim())?)
            }
        }
    }

    pub fn from_density(rho: &DensityOperator) -> Self {
        StateJson::Matrix {
            dim: rho.dim(),
            matrix: matrix_to_json(rho.matrix()),
        }
    }
}

pub fn parse_state(text: &str) -> Result<DensityOperator> {
    serde_json::from_str::<StateJson>(text)?.to_density()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementKind {
    Mub,
    Biased,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementJson {
    pub kind: MeasurementKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// One list of Kraus matrices per observable, in time order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<Vec<MatrixJson>>>,
}

impl MeasurementJson {
    pub fn to_suite(&self) -> Result<ObservableSuite> {
        let missing = |f: &str| Error::InvalidParameter(format!("measurement JSON needs '{f}'"));
        match self.kind {
            MeasurementKind::Mub => {
                let d = self.d.ok_or_else(|| missing("d"))?;
                mub_suite(d, self.k.unwrap_or(d + 1))
            }
            MeasurementKind::Biased => {
                biased_qubit_suite(self.theta.ok_or_else(|| missing("theta"))?)
            }
            MeasurementKind::Custom => {
                let d = self.d.ok_or_else(|| missing("d"))?;
                let kraus = self.kraus.as_ref().ok_or_else(|| missing("kraus"))?;
                let sets = kraus
                    .iter()
                    .map(|ops| {
                        let mats = ops
                            .iter()
                            .map(|m| matrix_from_json(d, m))
                            .collect::<Result<Vec<_>>>()?;
                        KrausSet::new(mats)
                    })
                    .collect::<Result<Vec<_>>>()?;
                ObservableSuite::new(sets)
            }
        }
    }
}

pub fn parse_measurement(text: &str) -> Result<ObservableSuite> {
    serde_json::from_str::<MeasurementJson>(text)?.to_suite()
}

fn fmt_value(v: f64, precision: Option<usize>) -> String {
    match precision {
        Some(p) => format!("{v:.p$}"),
        None => format!("{v}"),
    }
}

/// Columns `a1..aK,value`.
pub fn quasi_table_csv(w: &QuasiTable, precision: Option<usize>) -> String {
    let k = w.shape.observables;
    let mut out = String::new();
    for i in 1..=k {
        let _ = write!(out, "a{i},");
    }
    out.push_str("value\n");
    for (i, v) in w.values.iter().enumerate() {
        for a in w.shape.tuple(i) {
            let _ = write!(out, "{a},");
        }
        let _ = writeln!(out, "{}", fmt_value(*v, precision));
    }
    out
}

/// Columns `n1..nK,re,im`.
pub fn characteristic_csv(chi: &CharacteristicTable, precision: Option<usize>) -> String {
    let k = chi.shape.observables;
    let mut out = String::new();
    for i in 1..=k {
        let _ = write!(out, "n{i},");
    }
    out.push_str("re,im\n");
    for (i, z) in chi.values.iter().enumerate() {
        for n in chi.shape.tuple(i) {
            let _ = write!(out, "{n},");
        }
        let _ = writeln!(
            out,
            "{},{}",
            fmt_value(z.re, precision),
            fmt_value(z.im, precision)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{quasiprobability_of, TableShape};

    #[test]
    fn state_schemas() {
        let rho = parse_state(r#"{"dim": 2, "matrix": [[1,0],[0,0],[0,0],[0,0]]}"#).unwrap();
        assert_eq!(rho.dim(), 2);
        let rho = parse_state(r#"{"bloch": [0, 0, 0, 0, 0, 0, 0, 0]}"#).unwrap();
        assert_eq!(rho.dim(), 3);
        assert!(parse_state(r#"{"bloch": [0, 0]}"#).is_err());
        assert!(parse_state(r#"{"bloch": [2, 0, 0]}"#).is_err());

        let json = serde_json::to_string(&StateJson::from_density(&rho)).unwrap();
        let back = parse_state(&json).unwrap();
        assert!((back.matrix() - rho.matrix()).norm() < 1e-15);
    }

    #[test]
    fn measurement_schemas() {
        let s = parse_measurement(r#"{"kind":"mub","d":3,"K":2}"#).unwrap();
        assert_eq!((s.dim(), s.len()), (3, 2));
        let s = parse_measurement(r#"{"kind":"biased","theta":0.2617993877991494}"#).unwrap();
        assert_eq!(s.len(), 2);
        let s = parse_measurement(
            r#"{"kind":"custom","d":2,"kraus":[[[[1,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[1,0]]]]}"#,
        )
        .unwrap();
        assert_eq!((s.len(), s.outcomes()), (1, 2));
        assert!(parse_measurement(
            r#"{"kind":"custom","d":2,"kraus":[[[[1,0],[0,0],[0,0],[0,0]]]]}"#
        )
        .is_err());
        assert!(parse_measurement(r#"{"kind":"mub"}"#).is_err());
        assert!(parse_measurement(r#"{"kind":"other","d":2}"#).is_err());
    }

    #[test]
    fn csv_tables() {
        let rho = parse_state(r#"{"bloch": [1, 0, 0]}"#).unwrap();
        let w = quasiprobability_of(&rho, &mub_suite(2, 2).unwrap()).unwrap();
        let csv = quasi_table_csv(&w, Some(3));
        assert_eq!(
            csv,
            "a1,a2,value\n0,0,0.500\n0,1,0.500\n1,0,0.000\n1,1,0.000\n"
        );

        let shape = TableShape::new(1, 2).unwrap();
        let chi = CharacteristicTable::new(
            shape,
            vec![Complex64::new(1.0, 0.0), Complex64::new(-0.5, 0.25)],
        )
        .unwrap();
        assert_eq!(
            characteristic_csv(&chi, None),
            "n1,re,im\n0,1,0\n1,-0.5,0.25\n"
        );
    }
}
