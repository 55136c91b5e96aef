//! Scans, Werner reports and property suites behind the `quasiprob` binary.

pub mod report;
pub mod scan;
pub mod werner;

pub use report::{run_property_suite, CheckResult, RunReport, SuiteName};
pub use scan::{scan_nonclassicality, ScanPoint, ScanResult, ScanSpec, StateFamily};
pub use werner::{werner_report, WernerReport};

use std::path::Path;

use quasiprob::linalg::{bloch_vector, BlochVector, DensityOperator, HermitianBasis};
use quasiprob::{Error, Result};

/// Fixed decimals when `precision` is set, shortest round-trip form otherwise.
pub fn format_value(v: f64, precision: Option<usize>) -> String {
    match precision {
        Some(p) => format!("{v:.p$}"),
        None => format!("{v}"),
    }
}

/// Inline JSON is used as is; anything else is read as a file path.
pub fn inline_or_file(arg: &str) -> std::io::Result<String> {
    let t = arg.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        Ok(arg.to_string())
    } else {
        std::fs::read_to_string(Path::new(arg))
    }
}

/// A JSON list of states in either state schema, as Bloch vectors.
pub fn parse_state_list(text: &str) -> Result<Vec<BlochVector>> {
    let raw: Vec<serde_json::Value> = serde_json::from_str(text)?;
    let mut out = Vec::with_capacity(raw.len());
    let mut basis: Option<HermitianBasis> = None;
    for v in raw {
        let rho: DensityOperator =
            serde_json::from_value::<quasiprob::io::StateJson>(v)?.to_density()?;
        if basis.as_ref().is_none_or(|b| b.dim() != rho.dim()) {
            basis = Some(HermitianBasis::gell_mann(rho.dim())?);
        }
        out.push(bloch_vector(&rho, basis.as_ref().expect("set above"))?);
    }
    if out.is_empty() {
        return Err(Error::InvalidParameter("empty state list".into()));
    }
    Ok(out)
}
