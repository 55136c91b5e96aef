//! Werner-state witness scans with a bisected threshold.

use quasiprob::bipartite::{werner_min_witness, werner_threshold_scan, WernerPoint, WitnessSetup};
use quasiprob::measurement::is_prime;
use quasiprob::{Error, Result};
use serde::Serialize;

use crate::format_value as fmt;

/// Largest local dimension accepted; the witness enumerates `d^{d+1}` shifts.
pub const MAX_WERNER_DIM: usize = 7;

pub const BISECTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WernerReport {
    pub dim: usize,
    pub points: Vec<WernerPoint>,
    /// Grid interval containing the sign change of `min_c W_m`.
    pub bracket: Option<(f64, f64)>,
    pub threshold: Option<f64>,
}

impl WernerReport {
    /// Columns `p,min_c,argmin_c`; the shift vector is written as `c1;c2;…`.
    pub fn to_csv(&self, precision: Option<usize>) -> String {
        let mut out = String::from("p,min_c,argmin_c\n");
        for pt in &self.points {
            let c: Vec<String> = pt.argmin.iter().map(usize::to_string).collect();
            out.push_str(&format!(
                "{},{},{}\n",
                fmt(pt.p, precision),
                fmt(pt.min_value, precision),
                c.join(";")
            ));
        }
        out
    }
}

/// Scans `p = i/steps` for `i = 0..=steps` and bisects the first sign change
/// of the minimal marginal quasiprobability to [`BISECTION_TOL`].
pub fn werner_report(d: usize, steps: usize) -> Result<WernerReport> {
    if !is_prime(d) || d > MAX_WERNER_DIM {
        return Err(Error::InvalidParameter(format!(
            "Werner scans support prime d up to {MAX_WERNER_DIM}, got {d}"
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be positive".into()));
    }
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let scan = werner_threshold_scan(d, &grid)?;
    let points = scan.points;
    let bracket = points
        .windows(2)
        .find(|w| w[0].min_value >= 0.0 && w[1].min_value < 0.0)
        .map(|w| (w[0].p, w[1].p));
    let threshold = match bracket {
        Some((mut lo, mut hi)) => {
            let setup = WitnessSetup::conjugate(d)?;
            while hi - lo > BISECTION_TOL {
                let mid = 0.5 * (lo + hi);
                if werner_min_witness(&setup, mid)?.min_value >= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(0.5 * (lo + hi))
        }
        None => None,
    };
    Ok(WernerReport {
        dim: d,
        points,
        bracket,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_threshold() {
        let r = werner_report(2, 10).unwrap();
        assert_eq!(r.points.len(), 11);
        assert_eq!(r.bracket, Some((0.3, 0.4)));
        assert!((r.threshold.unwrap() - 1.0 / 3.0).abs() < 1e-9);
        let csv = r.to_csv(Some(4));
        assert!(csv.starts_with("p,min_c,argmin_c\n0.0000,0.1250,"));
    }

    #[test]
    fn rejects_unsupported_dims() {
        assert!(werner_report(4, 10).is_err());
        assert!(werner_report(11, 10).is_err());
        assert!(werner_report(2, 0).is_err());
    }
}
