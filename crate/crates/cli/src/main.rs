use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use quasiprob::bipartite::{
    werner_state, witness_values, witness_verdict, BipartiteState, WitnessSetup,
};
use quasiprob::classical::certify_with_tol;
use quasiprob::engine::{nonclassicality_with_tol, quasiprobability_of};
use quasiprob::io::{parse_measurement, parse_state, quasi_table_csv};
use quasiprob::linalg::{bloch_vector, DensityOperator, HermitianBasis};
use quasiprob::photon::{
    experimental_characteristic, experimental_quasiprobability, linear_polarization,
    quasiprobability_std_error, simulate_counts, ExperimentConfig, LossModel,
};
use quasiprob_cli::{
    format_value, inline_or_file, parse_state_list, run_property_suite, scan_nonclassicality,
    werner_report, ScanSpec, StateFamily, SuiteName,
};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "quasiprob",
    version,
    about = "Quasiprobabilities of sequential qudit measurements"
)]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Negativity threshold: entries in [-tol, 0) count as zero.
    #[arg(long, global = true, default_value_t = quasiprob::NEGATIVITY_EPS)]
    tol: f64,
    /// Fixed decimal places in CSV output; shortest round-trip form when absent.
    #[arg(long, global = true)]
    precision: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Sphere,
    Ball,
    Custom,
}

#[derive(Subcommand)]
enum Command {
    /// Nonclassicality over a grid of qubit states or a list of states.
    Scan {
        /// Measurement JSON (inline or file).
        #[arg(long)]
        suite: String,
        #[arg(long, value_enum, default_value_t = Family::Sphere)]
        family: Family,
        /// Polar steps n of the n × 2n grid.
        #[arg(long, default_value_t = 200)]
        resolution: usize,
        /// JSON list of states for the custom family.
        #[arg(long)]
        states: Option<String>,
    },
    /// Quasiprobability table of one state.
    Wfunc {
        #[arg(long)]
        state: String,
        #[arg(long)]
        suite: String,
    },
    /// Marginal quasiprobability witness of a two-qudit state.
    Witness {
        /// Two-qudit state JSON (inline or file).
        #[arg(long, conflicts_with = "werner", required_unless_present = "werner")]
        state: Option<String>,
        /// Use the Werner state with this weight instead.
        #[arg(long)]
        werner: Option<f64>,
        /// Local dimension.
        #[arg(long)]
        d: usize,
    },
    /// Werner-state scan with the bisected entanglement threshold.
    Werner {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Photon counts of the polarization experiment.
    PhotonSim {
        /// State JSON or a linear polarization angle in degrees.
        #[arg(long)]
        state: String,
        #[arg(long)]
        shots: u64,
        /// Loss probabilities, e.g. `path=0.1,det=0.2,det11=0.5`.
        #[arg(long, default_value = "")]
        loss: String,
    },
    /// Run a property suite: engine, classical, bipartite, photon or all.
    Check {
        #[arg(default_value = "all")]
        suite: String,
    },
}

fn emit(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load(arg: &str) -> anyhow::Result<String> {
    inline_or_file(arg).with_context(|| format!("reading '{arg}'"))
}

fn pretty(v: &impl serde::Serialize) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn photon_state(arg: &str) -> anyhow::Result<DensityOperator> {
    if let Ok(deg) = arg.trim().parse::<f64>() {
        return Ok(linear_polarization(deg * PI / 180.0));
    }
    Ok(parse_state(&load(arg)?)?)
}

/// Returns `Ok(false)` when a property check failed.
fn run(cli: &Cli) -> anyhow::Result<bool> {
    let prec = cli.precision;
    match &cli.command {
        Command::Scan {
            suite,
            family,
            resolution,
            states,
        } => {
            let suite = parse_measurement(&load(suite)?)?;
            let family = match (family, states) {
                (Family::Custom, Some(s)) => StateFamily::Custom(parse_state_list(&load(s)?)?),
                (Family::Custom, None) => bail!("--family custom needs --states"),
                (_, Some(_)) => bail!("--states is only used with --family custom"),
                (Family::Sphere, None) => StateFamily::Sphere,
                (Family::Ball, None) => StateFamily::Ball,
            };
            let spec = ScanSpec::new(*resolution, family, suite)?.with_tol(cli.tol);
            let r = scan_nonclassicality(&spec)?;
            match cli.format {
                Format::Csv => {
                    eprintln!("max N = {} at {:?}", r.max_nonclassicality, r.argmax);
                    emit(&cli.out, &r.to_csv(prec))?;
                }
                Format::Json => emit(&cli.out, &pretty(&r)?)?,
            }
        }
        Command::Wfunc { state, suite } => {
            let rho = parse_state(&load(state)?)?;
            let suite = parse_measurement(&load(suite)?)?;
            let w = quasiprobability_of(&rho, &suite)?;
            match cli.format {
                Format::Csv => emit(&cli.out, &quasi_table_csv(&w, prec))?,
                Format::Json => {
                    let n = nonclassicality_with_tol(&w, cli.tol);
                    let verdict = certify_with_tol(&w, cli.tol);
                    let bloch = bloch_vector(&rho, &HermitianBasis::gell_mann(rho.dim())?)?;
                    let v = json!({
                        "bloch": bloch.components(),
                        "nonclassicality": n,
                        "verdict": verdict,
                        "table": w,
                    });
                    emit(&cli.out, &pretty(&v)?)?;
                }
            }
        }
        Command::Witness { state, werner, d } => {
            let setup = WitnessSetup::conjugate(*d)?;
            let st = match (state, werner) {
                (_, Some(p)) => werner_state(*d, *p)?,
                (Some(s), None) => BipartiteState::new(*d, parse_state(&load(s)?)?)?,
                (None, None) => bail!("--state or --werner is required"),
            };
            match cli.format {
                Format::Json => emit(&cli.out, &pretty(&witness_verdict(&st, &setup, cli.tol)?)?)?,
                Format::Csv => {
                    let corr = setup.correlations(&st)?;
                    let mut text = String::new();
                    for k in 1..=d + 1 {
                        text.push_str(&format!("c{k},"));
                    }
                    text.push_str("value\n");
                    for (c, v) in witness_values(&corr, &setup.alphas, &setup.betas) {
                        for x in c.values() {
                            text.push_str(&format!("{x},"));
                        }
                        text.push_str(&format_value(v, prec));
                        text.push('\n');
                    }
                    emit(&cli.out, &text)?;
                }
            }
        }
        Command::Werner { d, steps } => {
            let r = werner_report(*d, *steps)?;
            match cli.format {
                Format::Csv => {
                    match r.threshold {
                        Some(t) => eprintln!("threshold p = {t:.12}"),
                        None => eprintln!("no sign change on the grid"),
                    }
                    emit(&cli.out, &r.to_csv(prec))?;
                }
                Format::Json => emit(&cli.out, &pretty(&r)?)?,
            }
        }
        Command::PhotonSim { state, shots, loss } => {
            let loss: LossModel = loss.parse()?;
            let cfg = ExperimentConfig::new(photon_state(state)?, *shots, loss, cli.seed)?;
            let counts = simulate_counts(&cfg);
            let chi = experimental_characteristic(&counts)?;
            let w = experimental_quasiprobability(&chi)?;
            let err = quasiprobability_std_error(&counts)?;
            match cli.format {
                Format::Csv => {
                    eprintln!("W(1,1) = {} +/- {}", w.get(&[1, 1]), err[3]);
                    emit(&cli.out, &counts.to_string())?;
                }
                Format::Json => {
                    let v = json!({
                        "shots": cfg.shots,
                        "seed": cfg.seed,
                        "loss": cfg.loss,
                        "counts": counts,
                        "characteristic": chi,
                        "quasiprobability": w,
                        "std_error": err,
                    });
                    emit(&cli.out, &pretty(&v)?)?;
                }
            }
        }
        Command::Check { suite } => {
            let name: SuiteName = suite.parse()?;
            let report = run_property_suite(name, cli.seed, std::env::args().collect())?;
            for c in &report.checks {
                eprintln!(
                    "{} {} (value {:e}, tolerance {:e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.tolerance
                );
            }
            emit(&cli.out, &pretty(&report)?)?;
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
