//! Monte-Carlo model of the polarization-qubit experiment.
//!
//! Two observables: `A1` = H/V (0 = H, 1 = V) and `A2` = D/A (0 = D, 1 = A),
//! measured by polarizing beam splitters. Each setup `(n1, n2)` is run for
//! `shots` single photons. Photons are lost with probability `path` after
//! every PBS stage and detected with the efficiency of the detector they
//! reach. Only detection-conditioned frequencies enter the quasiprobability.
//!
//! Detector labels: setup `(1,0)` fires `D_{a1,0}`, setup `(0,1)` fires
//! `D_{0,a2}`, setup `(0,0)` has a single detector `D_{0,0}`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{quasiprobability, CharacteristicTable, QuasiTable, TableShape};
use crate::error::{Error, Result};
use crate::linalg::DensityOperator;
use crate::NORMALIZATION_TOL;

/// Shots per independent RNG stream.
const BATCH: u64 = 1 << 16;

/// The four setups `(n1, n2)` in index order `2 n1 + n2`.
pub const SETUPS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    /// Loss probability after each PBS stage.
    pub path: f64,
    /// Efficiency of detector `D_{a1,a2}`, index `2 a1 + a2`.
    pub detector_efficiency: [f64; 4],
}

impl Default for LossModel {
    fn default() -> Self {
        Self {
            path: 0.0,
            detector_efficiency: [1.0; 4],
        }
    }
}

impl LossModel {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| (0.0..=1.0).contains(&x);
        if !ok(self.path) || !self.detector_efficiency.iter().copied().all(ok) {
            return Err(Error::InvalidParameter(
                "loss probabilities and efficiencies must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn is_outcome_independent(&self) -> bool {
        self.detector_efficiency
            .iter()
            .all(|&e| e == self.detector_efficiency[0])
    }
}

/// Grammar: comma-separated `key=value` entries with keys `path`, `det`
/// (all detectors) or `detXY` (detector `D_{X,Y}`), e.g. `path=0.1,det11=0.5`.
/// Every value is a loss probability; `det11=0.5` makes `D_{1,1}` 50%
/// efficient. An empty string is the lossless model.
impl FromStr for LossModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut model = LossModel::default();
        for entry in s.split(',').map(str::trim).filter(|e| !e.is_empty()) {
            let (key, value) = entry.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("loss entry '{entry}' lacks '='"))
            })?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad number in '{entry}'")))?;
            match key.trim() {
                "path" => model.path = value,
                "det" => model.detector_efficiency = [1.0 - value; 4],
                k if k.len() == 5 && k.starts_with("det") => {
                    let bits = k.as_bytes();
                    let (a1, a2) = (bits[3], bits[4]);
                    if !matches!(a1, b'0' | b'1') || !matches!(a2, b'0' | b'1') {
                        return Err(Error::InvalidParameter(format!("unknown detector '{k}'")));
                    }
                    model.detector_efficiency[2 * (a1 - b'0') as usize + (a2 - b'0') as usize] =
                        1.0 - value;
                }
                k => return Err(Error::InvalidParameter(format!("unknown loss key '{k}'"))),
            }
        }
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Polarization state in the `{|H⟩, |V⟩}` basis.
    pub state: DensityOperator,
    pub shots: u64,
    pub loss: LossModel,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(state: DensityOperator, shots: u64, loss: LossModel, seed: u64) -> Result<Self> {
        if state.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: state.dim(),
            });
        }
        if shots == 0 {
            return Err(Error::InvalidParameter("shots must be positive".into()));
        }
        loss.validate()?;
        Ok(Self {
            state,
            shots,
            loss,
            seed,
        })
    }
}

/// Linear polarization `cos φ |H⟩ + sin φ |V⟩`.
pub fn linear_polarization(angle: f64) -> DensityOperator {
    let ket = nalgebra::DVector::from_vec(vec![
        Complex64::new(angle.cos(), 0.0),
        Complex64::new(angle.sin(), 0.0),
    ]);
    DensityOperator::pure(&ket).expect("unit ket")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetupCounts {
    /// Clicks at `D_{a1,a2}`, index `2 a1 + a2`.
    pub detected: [u64; 4],
    pub lost: u64,
}

impl SetupCounts {
    pub fn total_detected(&self) -> u64 {
        self.detected.iter().sum()
    }

    fn merge(mut self, other: SetupCounts) -> SetupCounts {
        for (a, b) in self.detected.iter_mut().zip(other.detected) {
            *a += b;
        }
        self.lost += other.lost;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsTable {
    pub shots: u64,
    /// Indexed by `2 n1 + n2`.
    pub setups: [SetupCounts; 4],
}

impl CountsTable {
    pub fn setup(&self, n1: usize, n2: usize) -> &SetupCounts {
        &self.setups[2 * n1 + n2]
    }
}

// Born-rule branch probabilities of one setup, computed from explicit kets.
struct Born {
    first: [f64; 2],
    second_given_first: [[f64; 2]; 2],
    second_alone: [f64; 2],
}

fn born_tables(rho: &DensityOperator) -> Born {
    let m = rho.matrix();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // ⟨v|ρ|v⟩ for a real ket v
    let expect = |v: [f64; 2]| -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                acc += m[(i, j)] * v[i] * v[j];
            }
        }
        acc.re
    };
    let hv = [[1.0, 0.0], [0.0, 1.0]];
    let da = [[s, s], [s, -s]];
    let overlap = |u: [f64; 2], v: [f64; 2]| (u[0] * v[0] + u[1] * v[1]).powi(2);
    Born {
        first: [expect(hv[0]), expect(hv[1])],
        second_given_first: [
            [overlap(hv[0], da[0]), overlap(hv[0], da[1])],
            [overlap(hv[1], da[0]), overlap(hv[1], da[1])],
        ],
        second_alone: [expect(da[0]), expect(da[1])],
    }
}

fn run_batch(
    born: &Born,
    loss: &LossModel,
    setup: (usize, usize),
    shots: u64,
    rng: &mut ChaCha8Rng,
) -> SetupCounts {
    let mut counts = SetupCounts::default();
    let survives =
        |rng: &mut ChaCha8Rng, p_loss: f64| p_loss == 0.0 || rng.random::<f64>() >= p_loss;
    for _ in 0..shots {
        let mut alive = true;
        let (mut a1, mut a2) = (0usize, 0usize);
        if setup.0 == 1 {
            a1 = usize::from(rng.random::<f64>() >= born.first[0]);
            alive &= survives(rng, loss.path);
        }
        if alive && setup.1 == 1 {
            let p_d = if setup.0 == 1 {
                born.second_given_first[a1][0]
            } else {
                born.second_alone[0]
            };
            a2 = usize::from(rng.random::<f64>() >= p_d);
            alive &= survives(rng, loss.path);
        }
        let slot = 2 * a1 + a2;
        if alive && survives(rng, 1.0 - loss.detector_efficiency[slot]) {
            counts.detected[slot] += 1;
        } else {
            counts.lost += 1;
        }
    }
    counts
}

/// Runs all four setups. Batches use independent ChaCha8 streams derived
/// from the seed, so the result is bit-identical for a given config.
pub fn simulate_counts(cfg: &ExperimentConfig) -> CountsTable {
    let born = born_tables(&cfg.state);
    let batches = cfg.shots.div_ceil(BATCH);
    let mut setups = [SetupCounts::default(); 4];
    for (idx, &setup) in SETUPS.iter().enumerate() {
        setups[idx] = (0..batches)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(((idx as u64) << 40) | b);
                let n = BATCH.min(cfg.shots - b * BATCH);
                run_batch(&born, &cfg.loss, setup, n, &mut rng)
            })
            .reduce(SetupCounts::default, SetupCounts::merge);
    }
    CountsTable {
        shots: cfg.shots,
        setups,
    }
}

fn setup_label(idx: usize) -> String {
    let (n1, n2) = SETUPS[idx];
    format!("({n1},{n2})")
}

/// Relative frequencies `f(a1,a2) = N(a1,a2) / N_det` per setup.
pub fn frequencies(counts: &CountsTable) -> Result<[[f64; 4]; 4]> {
    let mut out = [[0.0; 4]; 4];
    for (idx, s) in counts.setups.iter().enumerate() {
        let total = s.total_detected();
        if total == 0 {
            return Err(Error::NoDetections(setup_label(idx)));
        }
        for (f, &c) in out[idx].iter_mut().zip(&s.detected) {
            *f = c as f64 / total as f64;
        }
    }
    Ok(out)
}

fn characteristic_from_frequencies(freq: &[[f64; 4]; 4]) -> CharacteristicTable {
    // ω = -1 for two outcomes
    let values = SETUPS
        .iter()
        .enumerate()
        .map(|(idx, &(n1, n2))| {
            let v: f64 = (0..4)
                .map(|slot| {
                    let (a1, a2) = (slot / 2, slot % 2);
                    let sign = if (n1 * a1 + n2 * a2) % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    sign * freq[idx][slot]
                })
                .sum();
            Complex64::new(v, 0.0)
        })
        .collect();
    CharacteristicTable {
        shape: TableShape {
            observables: 2,
            outcomes: 2,
        },
        values,
    }
}

/// `χ̃(n1,n2) = Σ ω^{n1 a1 + n2 a2} f_{n1,n2}(a1,a2)`.
pub fn experimental_characteristic(counts: &CountsTable) -> Result<CharacteristicTable> {
    Ok(characteristic_from_frequencies(&frequencies(counts)?))
}

pub fn experimental_quasiprobability(chi: &CharacteristicTable) -> Result<QuasiTable> {
    quasiprobability(chi)
}

/// One-sigma statistical error of each `W̃(a1,a2)` from binomial/multinomial
/// counting noise in the three measured setups (independent runs).
pub fn quasiprobability_std_error(counts: &CountsTable) -> Result<[f64; 4]> {
    let freq = frequencies(counts)?;
    let chi = characteristic_from_frequencies(&freq);
    // W̃(a) = ¼ Σ_n (±1) χ̃(n); Var χ̃(n) = (1 - χ̃(n)²) / N_det(n)
    let var: f64 = (1..4)
        .map(|idx| {
            let c = chi.values[idx].re;
            (1.0 - c * c).max(0.0) / counts.setups[idx].total_detected() as f64
        })
        .sum();
    Ok([var.sqrt() / 4.0; 4])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionedReport {
    pub conditional: [f64; 4],
    pub quasiprobability: [f64; 4],
    pub max_deviation: f64,
    pub nonnegative: bool,
}

/// Hidden-variable detection probabilities `p(a1,a2,det)` plus the loss mass:
/// the detection-conditioned quasiprobability equals `p(a1,a2|det) ≥ 0`.
pub fn classical_conditioned_check(detect: [f64; 4], loss_mass: f64) -> Result<ConditionedReport> {
    if detect
        .iter()
        .chain([&loss_mass])
        .any(|&p| !(0.0..=1.0).contains(&p))
    {
        return Err(Error::InvalidDistribution(
            "probabilities must lie in [0, 1]".into(),
        ));
    }
    let total: f64 = detect.iter().sum();
    if (total + loss_mass - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidDistribution(format!(
            "detection {total} + loss {loss_mass} != 1"
        )));
    }
    if total == 0.0 {
        return Err(Error::InvalidDistribution(
            "no detection probability".into(),
        ));
    }
    let conditional = detect.map(|p| p / total);
    // every setup shares the same hidden-variable model
    let chi = characteristic_from_frequencies(&[conditional; 4]);
    let w = quasiprobability(&chi)?;
    let mut quasi = [0.0; 4];
    quasi.copy_from_slice(&w.values);
    let max_deviation = quasi
        .iter()
        .zip(&conditional)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(ConditionedReport {
        conditional,
        quasiprobability: quasi,
        max_deviation,
        nonnegative: quasi.iter().all(|&v| v >= -1e-12),
    })
}

impl fmt::Display for CountsTable {
    /// CSV with columns `setup,a1,a2,count`; lost photons use `lost` in both
    /// outcome columns.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "setup,a1,a2,count")?;
        for (idx, s) in self.setups.iter().enumerate() {
            let (n1, n2) = SETUPS[idx];
            for slot in 0..4 {
                writeln!(f, "{n1}{n2},{},{},{}", slot / 2, slot % 2, s.detected[slot])?;
            }
            writeln!(f, "{n1}{n2},lost,lost,{}", s.lost)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::qubit_state;

    fn run(state: DensityOperator, shots: u64, loss: LossModel, seed: u64) -> CountsTable {
        simulate_counts(&ExperimentConfig::new(state, shots, loss, seed).unwrap())
    }

    #[test]
    fn horizontal_photon_always_h() {
        let c = run(
            qubit_state([0.0, 0.0, 1.0]).unwrap(),
            10_000,
            LossModel::default(),
            1,
        );
        let s = c.setup(1, 0);
        assert_eq!(s.detected, [10_000, 0, 0, 0]);
        assert_eq!(s.lost, 0);
    }

    #[test]
    fn diagonal_photon_is_unbiased_after_collapse() {
        let c = run(
            qubit_state([1.0, 0.0, 0.0]).unwrap(),
            200_000,
            LossModel::default(),
            2,
        );
        let s = c.setup(1, 1);
        let n = s.total_detected() as f64;
        for &k in &s.detected {
            // 5σ binomial band around 1/4
            assert!((k as f64 / n - 0.25).abs() < 5.0 * (0.25 * 0.75 / n).sqrt());
        }
        // D/A alone is deterministic for |D⟩
        assert_eq!(c.setup(0, 1).detected[1], 0);
    }

    #[test]
    fn counts_are_conserved_and_reproducible() {
        let loss: LossModel = "path=0.3,det01=0.5".parse().unwrap();
        let a = run(linear_polarization(0.4), 100_003, loss, 9);
        for s in &a.setups {
            assert_eq!(s.total_detected() + s.lost, 100_003);
        }
        assert_eq!(a, run(linear_polarization(0.4), 100_003, loss, 9));
        assert_ne!(a, run(linear_polarization(0.4), 100_003, loss, 10));
    }

    #[test]
    fn characteristic_from_counts() {
        let mut c = CountsTable {
            shots: 100,
            setups: [SetupCounts {
                detected: [25, 25, 25, 25],
                lost: 0,
            }; 4],
        };
        let chi = experimental_characteristic(&c).unwrap();
        assert!(chi.values[3].norm() < 1e-15);
        assert_eq!(chi.values[0], Complex64::new(1.0, 0.0));
        let w = experimental_quasiprobability(&chi).unwrap();
        assert!(w.values.iter().all(|v| (v - 0.25).abs() < 1e-15));

        c.setups[3].detected = [50, 25, 15, 10];
        let chi = experimental_characteristic(&c).unwrap();
        assert!((chi.values[3].re - 0.20).abs() < 1e-15);

        c.setups[2] = SetupCounts::default();
        assert!(matches!(
            experimental_characteristic(&c),
            Err(Error::NoDetections(_))
        ));
    }

    #[test]
    fn loss_grammar() {
        let m: LossModel = "path=0.2, det=0.1, det11=0.5".parse().unwrap();
        assert_eq!(m.path, 0.2);
        assert_eq!(m.detector_efficiency, [0.9, 0.9, 0.9, 0.5]);
        assert!(!m.is_outcome_independent());
        assert_eq!("".parse::<LossModel>().unwrap(), LossModel::default());
        assert!("path=1.5".parse::<LossModel>().is_err());
        assert!("det=-0.5".parse::<LossModel>().is_err());
        assert!("det21=0.5".parse::<LossModel>().is_err());
        assert!("foo=0.5".parse::<LossModel>().is_err());
        assert!("path".parse::<LossModel>().is_err());
    }

    #[test]
    fn conditioned_classical_models() {
        let r = classical_conditioned_check([0.1, 0.2, 0.05, 0.15], 0.5).unwrap();
        assert!(r.max_deviation < 1e-12 && r.nonnegative);
        assert!((r.conditional[0] - 0.2).abs() < 1e-12);

        let r = classical_conditioned_check([0.0025; 4], 0.99).unwrap();
        assert!(r.quasiprobability.iter().all(|v| (v - 0.25).abs() < 1e-12));

        let r = classical_conditioned_check([0.3, 0.0, 0.0, 0.0], 0.7).unwrap();
        assert!((r.quasiprobability[0] - 1.0).abs() < 1e-12);
        assert!(r.quasiprobability[1..].iter().all(|v| v.abs() < 1e-12));

        assert!(classical_conditioned_check([0.3, 0.3, 0.3, 0.3], 0.5).is_err());
    }

    #[test]
    fn csv_layout() {
        let c = run(linear_polarization(0.0), 10, LossModel::default(), 0);
        let text = c.to_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "setup,a1,a2,count");
        assert_eq!(lines.len(), 1 + 4 * 5);
        assert_eq!(lines[1], "00,0,0,10");
        assert!(lines.contains(&"10,0,0,10"));
    }
}
