//! Module invariant suites and the run report.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use quasiprob::bipartite::{
    random_separable, werner_threshold_scan, witness_verdict, WitnessSetup,
};
use quasiprob::classical::{
    certify_nonclassical, classical_characteristic, lhv_roundtrip_check, ClassicalJoint,
};
use quasiprob::engine::{
    marginal, mub_closed_form, observable_distribution, quasiprobability, quasiprobability_of,
    TableShape,
};
use quasiprob::linalg::{bloch_vector, random_density, HermitianBasis};
use quasiprob::measurement::{mub_suite, random_kraus, suite_alphas, trine_povm, ObservableSuite};
use quasiprob::photon::{
    experimental_characteristic, experimental_quasiprobability, linear_polarization,
    quasiprobability_std_error, simulate_counts, ExperimentConfig, LossModel,
};
use quasiprob::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteName {
    Engine,
    Classical,
    Bipartite,
    Photon,
    All,
}

impl FromStr for SuiteName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "engine" => Ok(SuiteName::Engine),
            "classical" => Ok(SuiteName::Classical),
            "bipartite" => Ok(SuiteName::Bipartite),
            "photon" => Ok(SuiteName::Photon),
            "all" => Ok(SuiteName::All),
            other => Err(Error::InvalidParameter(format!("unknown suite '{other}'"))),
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SuiteName::Engine => "engine",
            SuiteName::Classical => "classical",
            SuiteName::Bipartite => "bipartite",
            SuiteName::Photon => "photon",
            SuiteName::All => "all",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed deviation or value.
    pub value: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub version: String,
    pub seed: u64,
    pub wall_time_s: f64,
    pub suite: SuiteName,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

pub fn run_property_suite(name: SuiteName, seed: u64, command: Vec<String>) -> Result<RunReport> {
    let start = Instant::now();
    let mut checks = Vec::new();
    let wanted = |s: SuiteName| name == s || name == SuiteName::All;
    if wanted(SuiteName::Engine) {
        checks.extend(engine_checks(seed)?);
    }
    if wanted(SuiteName::Classical) {
        checks.extend(classical_checks(seed)?);
    }
    if wanted(SuiteName::Bipartite) {
        checks.extend(bipartite_checks(seed)?);
    }
    if wanted(SuiteName::Photon) {
        checks.extend(photon_checks(seed)?);
    }
    Ok(RunReport {
        command,
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        wall_time_s: start.elapsed().as_secs_f64(),
        suite: name,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

fn engine_checks(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut closed = 0.0f64;
    let mut norm = 0.0f64;
    for d in [2, 3] {
        let basis = HermitianBasis::gell_mann(d)?;
        for k in 1..=d + 1 {
            let suite = mub_suite(d, k)?;
            let alphas = suite_alphas(&suite, &basis)?;
            for _ in 0..20 {
                let rho = random_density(d, &mut rng);
                let w = quasiprobability_of(&rho, &suite)?;
                let c = mub_closed_form(&bloch_vector(&rho, &basis)?, &alphas)?;
                closed = closed.max(w.max_abs_diff(&c));
                norm = norm.max((w.total() - 1.0).abs());
            }
        }
    }

    let mut marg = 0.0f64;
    let suites = [
        mub_suite(2, 3)?,
        mub_suite(3, 3)?,
        ObservableSuite::new(vec![trine_povm(), trine_povm(), trine_povm()])?,
        ObservableSuite::new(vec![
            random_kraus(2, 3, &mut rng),
            random_kraus(2, 3, &mut rng),
        ])?,
    ];
    for suite in &suites {
        for _ in 0..10 {
            let rho = random_density(suite.dim(), &mut rng);
            let w = quasiprobability_of(&rho, suite)?;
            for k in 0..suite.len() {
                let m = marginal(&w, &[k])?;
                let p = observable_distribution(&rho, suite, k)?;
                for (a, b) in m.values.iter().zip(&p) {
                    marg = marg.max((a - b).abs());
                }
            }
        }
    }
    Ok(vec![
        CheckResult::at_most(
            "closed form matches sequential engine (d=2,3, all K)",
            closed,
            1e-10,
        ),
        CheckResult::at_most("quasiprobability normalization", norm, 1e-12),
        CheckResult::at_most(
            "single-observable marginals (incl. trine POVM)",
            marg,
            1e-10,
        ),
    ])
}

fn classical_checks(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shapes = [(2, 2), (3, 2), (2, 3), (4, 3)];
    let (mut dev, mut fired) = (0.0f64, 0usize);
    for i in 0..1000 {
        let (k, d) = shapes[i % shapes.len()];
        let p = ClassicalJoint::random(TableShape::new(k, d)?, &mut rng);
        dev = dev.max(lhv_roundtrip_check(&p).max_deviation);
        if certify_nonclassical(&quasiprobability(&classical_characteristic(&p))?).is_nonclassical()
        {
            fired += 1;
        }
    }
    Ok(vec![
        CheckResult::at_most("1000 hidden-variable round trips", dev, 1e-12),
        CheckResult::at_most("no-LHV verdicts on classical models", fired as f64, 0.0),
    ])
}

fn bipartite_checks(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for d in [2, 3] {
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let scan = werner_threshold_scan(d, &grid)?;
        let dd = (d as f64).powi(d as i32 + 1);
        let affine = scan
            .points
            .iter()
            .map(|pt| (pt.min_value - (1.0 - pt.p * (d + 1) as f64) / dd).abs())
            .fold(0.0, f64::max);
        let crossing = scan
            .crossing
            .map_or(f64::INFINITY, |c| (c - 1.0 / (d + 1) as f64).abs());
        out.push(CheckResult::at_most(
            &format!("Werner witness affine in p (d={d})"),
            affine,
            1e-10,
        ));
        out.push(CheckResult::at_most(
            &format!("Werner threshold 1/(d+1) (d={d})"),
            crossing,
            1e-9,
        ));

        let setup = WitnessSetup::conjugate(d)?;
        let mut worst = f64::INFINITY;
        for _ in 0..100 {
            let s = random_separable(d, &mut rng)?;
            worst = worst.min(witness_verdict(&s, &setup, 0.0)?.value);
        }
        out.push(CheckResult::at_most(
            &format!("separable states: largest negativity of W_m (d={d})"),
            -worst,
            1e-10,
        ));
    }
    Ok(out)
}

fn photon_checks(seed: u64) -> Result<Vec<CheckResult>> {
    let state = linear_polarization(PI / 8.0);
    let target = (1.0 - 2f64.sqrt()) / 4.0;
    let run = |loss: LossModel| -> Result<(f64, f64)> {
        let counts = simulate_counts(&ExperimentConfig::new(state.clone(), 100_000, loss, seed)?);
        let w = experimental_quasiprobability(&experimental_characteristic(&counts)?)?;
        Ok((w.get(&[1, 1]), quasiprobability_std_error(&counts)?[3]))
    };
    let (w0, s0) = run(LossModel::default())?;
    let (w1, s1) = run("det=0.9".parse()?)?;
    Ok(vec![
        CheckResult::at_most(
            "lossless W(1,1) within 5 sigma",
            (w0 - target).abs() / s0,
            5.0,
        ),
        CheckResult::at_most(
            "outcome-independent loss within 5 sigma",
            (w1 - w0).abs() / (s0 * s0 + s1 * s1).sqrt(),
            5.0,
        ),
    ])
}
