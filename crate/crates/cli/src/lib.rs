//! `bd-clt`: reproducible experiments on birth-death chains.
//!
//! Every JSON report carries a [`RunManifest`] with the arguments and the
//! resolved chain and observable specs, and no timestamps, so replaying a
//! manifest reproduces the report byte for byte.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use bdclt::chain::{classify_with_evidence, ChainSpec};
use bdclt::measure::{normalized_measure, stationary_weights, StationaryMeasure};
use bdclt::observable::{
    center, doubling_schedule, phi_star, series_verdict, sigma2_resolvent, sigma2_truncated, H1MinusReport,
    Observable, ObservableSpec, SeriesVerdict, Sigma2Estimate,
};
use bdclt::simulate::{sample_path, sample_stationary_start, variance_growth, write_trajectory_csv, CltReport, SimConfig};
use bdclt::spectral::{gap_verdict, spectral_report, GapThresholds, GapVerdict, SpectralReport};
use bdclt::{build_chain, BirthDeathChain, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DISAGREEMENT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "bd-clt", version, about = "Recurrence, spectral gap and CLT probes for birth-death chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ChainArg {
    /// Chain spec JSON file.
    #[arg(long)]
    pub chain: PathBuf,
    /// Explicit truncation level (default: smallest doubling from 64 with tail below 1e-12).
    #[arg(long)]
    pub truncation: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ObservableArg {
    /// Observable spec JSON file.
    #[arg(long)]
    pub observable: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub replicas: usize,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    /// Values of N for the variance curve (default: halving from --steps).
    #[arg(long, value_delimiter = ',')]
    pub ladder: Option<Vec<usize>>,
    /// Length of the autocorrelation pilot run.
    #[arg(long)]
    pub pilot_steps: Option<usize>,
}

impl SimArgs {
    fn config(&self) -> SimConfig {
        let mut cfg = SimConfig::new(self.seed, self.replicas, self.steps);
        cfg.burn_in = self.burn_in;
        cfg.ladder = self.ladder.clone();
        cfg.pilot_steps = self.pilot_steps;
        cfg
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recurrence and spectral-gap regime of a chain.
    Classify {
        #[command(flatten)]
        chain: ChainArg,
        #[command(flatten)]
        output: Output,
    },
    /// Normalized stationary law.
    Stationary {
        #[command(flatten)]
        chain: ChainArg,
        #[command(flatten)]
        output: Output,
    },
    /// Eigenvalue ladder, Chen delta, witness and gap verdict.
    Spectrum {
        #[command(flatten)]
        chain: ChainArg,
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        delete_state: usize,
        #[arg(long, default_value_t = 5e-3)]
        eps_gap: f64,
        #[arg(long, default_value_t = 1e-4)]
        stability: f64,
        #[command(flatten)]
        output: Output,
    },
    /// H_{-1} certificate: Phi* partial sums, maximizer gradient, variance.
    Hminus {
        #[command(flatten)]
        chain: ChainArg,
        #[command(flatten)]
        observable: ObservableArg,
        /// Number of doubling truncations in the schedule.
        #[arg(long, default_value_t = 8)]
        rungs: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Asymptotic variance from the truncated Poisson equation.
    Sigma2 {
        #[command(flatten)]
        chain: ChainArg,
        #[command(flatten)]
        observable: ObservableArg,
        #[arg(long, default_value_t = 8)]
        rungs: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo variance curve, batch means and normality.
    Simulate {
        #[command(flatten)]
        chain: ChainArg,
        #[command(flatten)]
        observable: ObservableArg,
        #[command(flatten)]
        sim: SimArgs,
        /// Also dump one stationary trajectory of --steps steps as CSV.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Certificate and simulation side by side, with an agreement check.
    Clt {
        #[command(flatten)]
        chain: ChainArg,
        #[command(flatten)]
        observable: ObservableArg,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 8)]
        rungs: usize,
        /// Relative tolerance between Monte Carlo and resolvent variances.
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
        /// Per-rung growth of the variance curve read as superdiffusive.
        #[arg(long, default_value_t = 1.2)]
        growth: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Replays the manifest embedded in a JSON report.
    Rerun {
        /// A report previously written by this tool.
        #[arg(long)]
        manifest: PathBuf,
        /// Write here instead of the recorded destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Provenance embedded in every JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    /// Arguments after the program name.
    pub args: Vec<String>,
    pub chain: String,
    pub chain_spec: ChainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable_spec: Option<ObservableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Truncation of the stationary measure actually used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
}

impl RunManifest {
    /// Manifest of a JSON report, or a bare manifest object.
    pub fn from_report_json(text: &str) -> Result<Self, Failure> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| input_error(e.to_string()))?;
        let manifest: RunManifest = serde_json::from_value(value.get("manifest").cloned().unwrap_or(value))
            .map_err(|e| input_error(format!("no usable manifest: {e}")))?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(input_error(format!(
                "manifest schema version {} is not supported",
                manifest.schema_version
            )));
        }
        Ok(manifest)
    }
}

#[derive(Debug, Serialize)]
struct Report<'a, T: Serialize> {
    manifest: &'a RunManifest,
    #[serde(flatten)]
    body: T,
}

#[derive(Debug, Serialize)]
struct StationaryBody {
    truncation: usize,
    tail_bound: f64,
    log_z: f64,
    detailed_balance_residual: f64,
    pi: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct SpectrumBody {
    #[serde(flatten)]
    report: SpectralReport,
    verdict: GapVerdict,
    thresholds: GapThresholds,
}

#[derive(Debug, Serialize)]
struct Sigma2Body {
    observable_mean: f64,
    estimate: Sigma2Estimate,
    schedule: Vec<usize>,
    values: Vec<f64>,
    verdict: SeriesVerdict,
}

#[derive(Debug, Serialize)]
struct HminusBody {
    observable_mean: f64,
    #[serde(flatten)]
    report: H1MinusReport,
}

#[derive(Debug, Serialize)]
struct CertificateSummary {
    schedule: Vec<usize>,
    phi_star_partial: Vec<f64>,
    verdict: SeriesVerdict,
    sigma2: Sigma2Estimate,
}

#[derive(Debug, Serialize)]
struct CltBody {
    observable_mean: f64,
    certificate: CertificateSummary,
    simulation: CltReport,
    /// Batch-means variance, or `D^2_N` at the largest `N` when batches do not fit.
    sigma2_mc: f64,
    relative_difference: Option<f64>,
    /// Smallest successive ratio of `D^2_N` over the ladder.
    min_growth_ratio: Option<f64>,
    agreement: bool,
    agreement_detail: String,
}

/// A failed command: exit code and message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: EXIT_INPUT, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: EXIT_INPUT, message: e.to_string() }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: message.into() }
}

/// Specs resolved from files, or from a manifest when replaying.
struct Inputs {
    chain_spec: ChainSpec,
    observable_spec: Option<ObservableSpec>,
}

fn read_chain(path: &PathBuf) -> Result<ChainSpec, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    ChainSpec::from_json(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn read_observable(path: &PathBuf) -> Result<ObservableSpec, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    ObservableSpec::from_json(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn measure_for(chain: &BirthDeathChain, truncation: Option<usize>) -> Result<StationaryMeasure, Failure> {
    Ok(match truncation {
        Some(m) if m >= 1 => stationary_weights(chain, m).normalize()?,
        Some(_) => return Err(input_error("--truncation must be at least 1")),
        None => normalized_measure(chain)?,
    })
}

fn centered_observable(spec: &ObservableSpec, measure: &StationaryMeasure) -> Result<Observable, Failure> {
    Ok(center(&Observable::from_spec(spec, measure)?, measure)?)
}

/// Result of one command before it is written.
pub struct Outcome {
    pub code: i32,
    pub bytes: Vec<u8>,
    pub destination: Option<PathBuf>,
}

fn render<T: Serialize>(manifest: &RunManifest, body: T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(&Report { manifest, body }).expect("report serializes");
    bytes.push(b'\n');
    bytes
}

fn csv_rows(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Classify { .. } => "classify",
        Command::Stationary { .. } => "stationary",
        Command::Spectrum { .. } => "spectrum",
        Command::Hminus { .. } => "hminus",
        Command::Sigma2 { .. } => "sigma2",
        Command::Simulate { .. } => "simulate",
        Command::Clt { .. } => "clt",
        Command::Rerun { .. } => "rerun",
    }
}

fn chain_arg(command: &Command) -> Option<&ChainArg> {
    match command {
        Command::Classify { chain, .. }
        | Command::Stationary { chain, .. }
        | Command::Spectrum { chain, .. }
        | Command::Hminus { chain, .. }
        | Command::Sigma2 { chain, .. }
        | Command::Simulate { chain, .. }
        | Command::Clt { chain, .. } => Some(chain),
        Command::Rerun { .. } => None,
    }
}

fn observable_arg(command: &Command) -> Option<&ObservableArg> {
    match command {
        Command::Hminus { observable, .. }
        | Command::Sigma2 { observable, .. }
        | Command::Simulate { observable, .. }
        | Command::Clt { observable, .. } => Some(observable),
        _ => None,
    }
}

fn output_arg(command: &Command) -> Option<&Output> {
    match command {
        Command::Classify { output, .. }
        | Command::Stationary { output, .. }
        | Command::Spectrum { output, .. }
        | Command::Hminus { output, .. }
        | Command::Sigma2 { output, .. }
        | Command::Simulate { output, .. }
        | Command::Clt { output, .. } => Some(output),
        Command::Rerun { .. } => None,
    }
}

/// Parses `args` (without the program name) and runs the command.
pub fn run(args: &[String]) -> Result<Outcome, Failure> {
    let argv = std::iter::once("bd-clt".to_string()).chain(args.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| Failure {
        code: if e.use_stderr() { EXIT_INPUT } else { EXIT_OK },
        message: e.to_string(),
    })?;
    if let Command::Rerun { manifest, out } = &cli.command {
        return rerun(manifest, out.clone());
    }
    let chain_spec = read_chain(&chain_arg(&cli.command).expect("command has a chain").chain)?;
    let observable_spec = match observable_arg(&cli.command) {
        Some(o) => Some(read_observable(&o.observable)?),
        None => None,
    };
    execute(&cli.command, args.to_vec(), Inputs { chain_spec, observable_spec }, None)
}

fn rerun(path: &PathBuf, out: Option<PathBuf>) -> Result<Outcome, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let manifest = RunManifest::from_report_json(&text).map_err(|f| input_error(format!("{}: {}", path.display(), f.message)))?;
    let argv = std::iter::once("bd-clt".to_string()).chain(manifest.args.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| input_error(e.to_string()))?;
    if matches!(cli.command, Command::Rerun { .. }) {
        return Err(input_error("a rerun manifest cannot itself be a rerun"));
    }
    let inputs = Inputs {
        chain_spec: manifest.chain_spec.clone(),
        observable_spec: manifest.observable_spec.clone(),
    };
    let mut outcome = execute(&cli.command, manifest.args.clone(), inputs, Some(&manifest))?;
    if out.is_some() {
        outcome.destination = out;
    }
    Ok(outcome)
}

fn execute(
    command: &Command,
    args: Vec<String>,
    inputs: Inputs,
    replay: Option<&RunManifest>,
) -> Result<Outcome, Failure> {
    let chain_a = chain_arg(command).expect("command has a chain");
    let output = output_arg(command).expect("command has an output");
    let chain = build_chain(inputs.chain_spec.clone())?;
    let mut manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        command: command_name(command).to_string(),
        args,
        chain: chain_a.chain.display().to_string(),
        chain_spec: inputs.chain_spec.clone(),
        observable: observable_arg(command).map(|o| o.observable.display().to_string()),
        observable_spec: inputs.observable_spec.clone(),
        seed: None,
        truncation: None,
        sizes: None,
        outputs: output.out.iter().map(|p| p.display().to_string()).collect(),
    };
    let observable_spec = || inputs.observable_spec.as_ref().expect("observable resolved");
    let csv_unsupported = || input_error(format!("--format csv is not available for {}", command_name(command)));
    let mut code = EXIT_OK;

    let bytes = match command {
        Command::Classify { .. } => {
            if output.format == Format::Csv {
                return Err(csv_unsupported());
            }
            let classification = classify_with_evidence(&inputs.chain_spec)?;
            render(&manifest, classification)
        }
        Command::Stationary { .. } => {
            let measure = measure_for(&chain, chain_a.truncation)?;
            manifest.truncation = Some(measure.truncation());
            match output.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    measure.write_csv(&mut buf)?;
                    buf
                }
                Format::Json => render(
                    &manifest,
                    StationaryBody {
                        truncation: measure.truncation(),
                        tail_bound: measure.tail_bound(),
                        log_z: measure.log_z(),
                        detailed_balance_residual: bdclt::detailed_balance_residual(&chain, &measure),
                        pi: measure.probabilities(),
                    },
                ),
            }
        }
        Command::Spectrum { sizes, delete_state, eps_gap, stability, .. } => {
            if sizes.is_empty() || sizes.iter().any(|&n| n < 2) {
                return Err(input_error("--sizes entries must be at least 2"));
            }
            let valid = *eps_gap > 0.0 && *eps_gap < 0.1 && *stability > 0.0;
            if !valid {
                return Err(input_error("--eps-gap must lie in (0, 0.1) and --stability must be positive"));
            }
            let report = spectral_report(&chain, sizes, *delete_state)?;
            manifest.sizes = Some(report.truncation_sizes.clone());
            let thresholds = GapThresholds { eps_gap: *eps_gap, stability: *stability };
            match output.format {
                Format::Csv => csv_rows(
                    &["N", "lambda1", "lambda1_raw", "witness", "delta_running_sup"],
                    (0..report.truncation_sizes.len()).map(|i| {
                        vec![
                            report.truncation_sizes[i].to_string(),
                            report.lambda1[i].to_string(),
                            report.lambda1_raw[i].to_string(),
                            report.witness[i].to_string(),
                            report.delta_running_sup[i].to_string(),
                        ]
                    }),
                ),
                Format::Json => render(
                    &manifest,
                    SpectrumBody { verdict: gap_verdict(&report, thresholds), report, thresholds },
                ),
            }
        }
        Command::Hminus { rungs, .. } => {
            let measure = measure_for(&chain, chain_a.truncation)?;
            manifest.truncation = Some(measure.truncation());
            let v = centered_observable(observable_spec(), &measure)?;
            let mut report = phi_star(&v, &measure, &doubling_schedule(measure.truncation(), *rungs));
            report.sigma2 = Some(sigma2_resolvent(&v, &chain, &measure, measure.truncation())?);
            match output.format {
                Format::Csv => csv_rows(
                    &["M", "phi_star_partial"],
                    report
                        .schedule
                        .iter()
                        .zip(&report.phi_star_partial)
                        .map(|(m, p)| vec![m.to_string(), p.to_string()]),
                ),
                Format::Json => render(&manifest, HminusBody { observable_mean: v.mean_pi(), report }),
            }
        }
        Command::Sigma2 { rungs, .. } => {
            if output.format == Format::Csv {
                return Err(csv_unsupported());
            }
            let measure = measure_for(&chain, chain_a.truncation)?;
            manifest.truncation = Some(measure.truncation());
            let v = centered_observable(observable_spec(), &measure)?;
            let schedule = doubling_schedule(measure.truncation(), *rungs);
            let values = schedule
                .iter()
                .map(|&m| sigma2_truncated(&v, &chain, &measure, m))
                .collect::<bdclt::Result<Vec<f64>>>()?;
            render(
                &manifest,
                Sigma2Body {
                    observable_mean: v.mean_pi(),
                    estimate: sigma2_resolvent(&v, &chain, &measure, measure.truncation())?,
                    verdict: series_verdict(&values),
                    schedule,
                    values,
                },
            )
        }
        Command::Simulate { sim, trajectory, .. } => {
            let measure = measure_for(&chain, chain_a.truncation)?;
            manifest.truncation = Some(measure.truncation());
            manifest.seed = Some(sim.seed);
            let v = centered_observable(observable_spec(), &measure)?;
            let report = variance_growth(&v, &chain, &measure, &sim.config())?;
            if let Some(path) = trajectory {
                if replay.is_none() {
                    manifest.outputs.push(path.display().to_string());
                }
                let mut rng = bdclt::simulate::replica_rngs(sim.seed, 1).remove(0);
                let start = sample_stationary_start(&measure, &mut rng)?;
                let path_states = sample_path(&chain, start, sim.steps, &mut rng);
                let file = fs::File::create(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
                write_trajectory_csv(&path_states, std::io::BufWriter::new(file))?;
            }
            match output.format {
                Format::Csv => variance_csv(&report),
                Format::Json => render(&manifest, report),
            }
        }
        Command::Clt { sim, rungs, tolerance, growth, .. } => {
            let measure = measure_for(&chain, chain_a.truncation)?;
            manifest.truncation = Some(measure.truncation());
            manifest.seed = Some(sim.seed);
            let v = centered_observable(observable_spec(), &measure)?;
            let h = phi_star(&v, &measure, &doubling_schedule(measure.truncation(), *rungs));
            let resolvent = sigma2_resolvent(&v, &chain, &measure, measure.truncation())?;
            let simulation = variance_growth(&v, &chain, &measure, &sim.config())?;
            let body = clt_body(v.mean_pi(), h, resolvent, simulation, *tolerance, *growth);
            if !body.agreement {
                code = EXIT_DISAGREEMENT;
            }
            match output.format {
                Format::Csv => variance_csv(&body.simulation),
                Format::Json => render(&manifest, body),
            }
        }
        Command::Rerun { .. } => unreachable!("handled before execution"),
    };
    if let Some(recorded) = replay {
        debug_assert_eq!(recorded.args, manifest.args);
    }
    Ok(Outcome { code, bytes, destination: output.out.clone() })
}

fn variance_csv(report: &CltReport) -> Vec<u8> {
    csv_rows(
        &["N", "d2"],
        report.variance_curve.iter().map(|p| vec![p.n.to_string(), p.d2.to_string()]),
    )
}

fn clt_body(
    observable_mean: f64,
    h: H1MinusReport,
    resolvent: Sigma2Estimate,
    simulation: CltReport,
    tolerance: f64,
    growth: f64,
) -> CltBody {
    let curve = &simulation.variance_curve;
    let sigma2_mc = match &simulation.sigma2_mc {
        Some(b) => b.value,
        None => curve.last().map_or(0.0, |p| p.d2),
    };
    let standard_error = simulation.sigma2_mc.as_ref().map_or(0.0, |b| b.standard_error);
    let min_growth_ratio = curve
        .windows(2)
        .filter(|w| w[0].d2 > 0.0)
        .map(|w| w[1].d2 / w[0].d2)
        .reduce(f64::min);
    let relative_difference = (resolvent.value > 0.0).then(|| (sigma2_mc - resolvent.value).abs() / resolvent.value);
    let (agreement, agreement_detail) = match h.verdict {
        _ if simulation.degenerate => (
            resolvent.value.abs() <= 1e-12,
            "degenerate: D^2_N vanishes; resolvent variance must vanish".to_string(),
        ),
        SeriesVerdict::Finite => {
            let allowed = (tolerance * resolvent.value).max(3.0 * standard_error);
            (
                (sigma2_mc - resolvent.value).abs() <= allowed,
                format!("finite certificate: |sigma2_mc - sigma2_resolvent| <= {allowed:.6e}"),
            )
        }
        SeriesVerdict::Divergent => (
            min_growth_ratio.is_some_and(|r| r > growth),
            format!("divergent certificate: every D^2_N rung ratio > {growth}"),
        ),
        SeriesVerdict::Inconclusive => (true, "inconclusive certificate: nothing to compare".to_string()),
    };
    CltBody {
        observable_mean,
        certificate: CertificateSummary {
            schedule: h.schedule,
            phi_star_partial: h.phi_star_partial,
            verdict: h.verdict,
            sigma2: resolvent,
        },
        sigma2_mc,
        relative_difference,
        min_growth_ratio,
        agreement,
        agreement_detail,
        simulation,
    }
}

/// Runs `args` and writes the report; returns the process exit code.
pub fn main_with_args(args: &[String]) -> i32 {
    match run(args) {
        Ok(outcome) => {
            let written = match &outcome.destination {
                Some(path) => fs::write(path, &outcome.bytes),
                None => std::io::stdout().lock().write_all(&outcome.bytes),
            };
            match written {
                Ok(()) => outcome.code,
                Err(e) => {
                    eprintln!("bd-clt: {e}");
                    EXIT_INPUT
                }
            }
        }
        Err(failure) => {
            if failure.code == EXIT_OK {
                print!("{}", failure.message);
            } else {
                eprintln!("bd-clt: {}", failure.message.trim_end());
            }
            failure.code
        }
    }
}
