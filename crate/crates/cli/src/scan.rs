//! Nonclassicality over families of states.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use quasiprob::engine::{mub_closed_form, nonclassicality_with_tol, quasiprobability_of};
use quasiprob::linalg::{state_from_bloch, BlochVector, HermitianBasis};
use quasiprob::measurement::{suite_alphas, ObservableSuite};
use quasiprob::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::format_value as fmt;

/// Upper bound on the number of evaluated states.
pub const MAX_SCAN_POINTS: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum StateFamily {
    /// Pure qubit states on an equal-angle `n × 2n` grid.
    Sphere,
    /// The sphere grid repeated on `n` shells of radius `i / n`.
    Ball,
    /// Explicit generalized Bloch vectors.
    Custom(Vec<BlochVector>),
}

impl StateFamily {
    pub fn name(&self) -> &'static str {
        match self {
            StateFamily::Sphere => "sphere",
            StateFamily::Ball => "ball",
            StateFamily::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScanSpec {
    pub resolution: usize,
    pub family: StateFamily,
    pub suite: ObservableSuite,
    pub tol: f64,
}

impl ScanSpec {
    pub fn new(resolution: usize, family: StateFamily, suite: ObservableSuite) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidParameter(
                "resolution must be at least 2".into(),
            ));
        }
        if !matches!(family, StateFamily::Custom(_)) && suite.dim() != 2 {
            return Err(Error::InvalidParameter(format!(
                "the {} family needs a qubit suite",
                family.name()
            )));
        }
        if let StateFamily::Custom(states) = &family {
            if let Some(s) = states.iter().find(|s| s.dim() != suite.dim()) {
                return Err(Error::DimensionMismatch {
                    expected: suite.dim(),
                    found: s.dim(),
                });
            }
        }
        Ok(Self {
            resolution,
            family,
            suite,
            tol: quasiprob::NEGATIVITY_EPS,
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    /// Polar and azimuthal angle for the qubit families.
    pub angles: Option<(f64, f64)>,
    pub bloch: Vec<f64>,
    pub nonclassicality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub family: String,
    pub resolution: usize,
    pub closed_form: bool,
    pub max_nonclassicality: f64,
    pub argmax: Vec<f64>,
    pub points: Vec<ScanPoint>,
}

impl ScanResult {
    /// All points whose value is within `tol` of the maximum, in grid order.
    pub fn argmax_set(&self, tol: f64) -> Vec<&ScanPoint> {
        self.points
            .iter()
            .filter(|p| p.nonclassicality >= self.max_nonclassicality - tol)
            .collect()
    }

    /// Columns `theta,phi,b1..bM,N`; angles are empty for custom states.
    pub fn to_csv(&self, precision: Option<usize>) -> String {
        let m = self.points.first().map_or(0, |p| p.bloch.len());
        let mut out = String::from("theta,phi,");
        for i in 1..=m {
            out.push_str(&format!("b{i},"));
        }
        out.push_str("N\n");
        for p in &self.points {
            let mut row: Vec<String> = match p.angles {
                Some((t, f)) => vec![fmt(t, precision), fmt(f, precision)],
                None => vec![String::new(), String::new()],
            };
            row.extend(p.bloch.iter().map(|&b| fmt(b, precision)));
            row.push(fmt(p.nonclassicality, precision));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn direction(theta: f64, phi: f64) -> [f64; 3] {
    [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ]
}

fn angles_of(v: [f64; 3]) -> (f64, f64) {
    let theta = v[2].clamp(-1.0, 1.0).acos();
    let phi = v[1].atan2(v[0]).rem_euclid(2.0 * PI);
    (theta, phi)
}

/// The six poles `(±1,0,0), …` followed by the twelve points `(±1,±1,0)/√2, …`.
pub fn special_directions() -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(18);
    for axis in 0..3 {
        for s in [1.0, -1.0] {
            let mut v = [0.0; 3];
            v[axis] = s;
            out.push(v);
        }
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let mut v = [0.0; 3];
            v[i] = si * FRAC_1_SQRT_2;
            v[j] = sj * FRAC_1_SQRT_2;
            out.push(v);
        }
    }
    out
}

/// Equal-angle grid (`θ_i = π i/(n-1)`, `φ_j = π j/n`) followed by the special directions.
pub fn sphere_grid(n: usize) -> Vec<((f64, f64), [f64; 3])> {
    let mut out = Vec::with_capacity(2 * n * n + 18);
    for i in 0..n {
        let theta = PI * i as f64 / (n - 1) as f64;
        for j in 0..2 * n {
            let phi = PI * j as f64 / n as f64;
            out.push(((theta, phi), direction(theta, phi)));
        }
    }
    for v in special_directions() {
        out.push((angles_of(v), v));
    }
    out
}

fn family_states(spec: &ScanSpec) -> Vec<(Option<(f64, f64)>, BlochVector)> {
    let qubit = |r: f64, (a, v): ((f64, f64), [f64; 3])| {
        let comps = v.iter().map(|x| r * x).collect();
        (
            Some(a),
            BlochVector::new(2, comps).expect("three components"),
        )
    };
    match &spec.family {
        StateFamily::Sphere => sphere_grid(spec.resolution)
            .into_iter()
            .map(|p| qubit(1.0, p))
            .collect(),
        StateFamily::Ball => {
            let grid = sphere_grid(spec.resolution);
            (1..=spec.resolution)
                .flat_map(|i| {
                    let r = i as f64 / spec.resolution as f64;
                    grid.iter().map(move |&p| qubit(r, p))
                })
                .collect()
        }
        StateFamily::Custom(states) => states.iter().map(|s| (None, s.clone())).collect(),
    }
}

fn family_size(spec: &ScanSpec) -> usize {
    let n = spec.resolution;
    match &spec.family {
        StateFamily::Sphere => 2 * n * n + 18,
        StateFamily::Ball => n * (2 * n * n + 18),
        StateFamily::Custom(s) => s.len(),
    }
}

/// Evaluates `N` at every state of the family. MUB suites use the closed form,
/// all others the sequential engine. Output order is the family order.
pub fn scan_nonclassicality(spec: &ScanSpec) -> Result<ScanResult> {
    let size = family_size(spec);
    if size > MAX_SCAN_POINTS {
        return Err(Error::InvalidParameter(format!(
            "grid of {size} states exceeds {MAX_SCAN_POINTS}"
        )));
    }
    if size == 0 {
        return Err(Error::InvalidParameter("no states to scan".into()));
    }
    let d = spec.suite.dim();
    let basis = HermitianBasis::gell_mann(d)?;
    let closed_form = spec.suite.bases().is_some() && spec.suite.is_mutually_unbiased(1e-10);
    let alphas = if closed_form {
        Some(suite_alphas(&spec.suite, &basis)?)
    } else {
        None
    };
    let states = family_states(spec);
    let points = states
        .into_par_iter()
        .map(|(angles, v)| {
            let w = match &alphas {
                Some(a) => mub_closed_form(&v, a)?,
                None => quasiprobability_of(&state_from_bloch(&v, &basis)?, &spec.suite)?,
            };
            Ok(ScanPoint {
                angles,
                bloch: v.components().to_vec(),
                nonclassicality: nonclassicality_with_tol(&w, spec.tol),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = points.iter().enumerate().fold(0, |b, (i, p)| {
        if p.nonclassicality > points[b].nonclassicality {
            i
        } else {
            b
        }
    });
    Ok(ScanResult {
        family: spec.family.name().into(),
        resolution: spec.resolution,
        closed_form,
        max_nonclassicality: points[best].nonclassicality,
        argmax: points[best].bloch.clone(),
        points,
    })
}
