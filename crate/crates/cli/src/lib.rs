//! Batch front end: tuning, simulation, table re-evaluation and frequency
//! response export.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use fuzzy_fopid::controllers::{
    decode_parameter_vector, ControllerKind, ControllerParams, ControllerSpec, ParameterBounds,
};
use fuzzy_fopid::fracops::{bode_point, discretize, log_space, OustaloupBand};
use fuzzy_fopid::plants::PlantModel;
use fuzzy_fopid::simloop::{
    compute_indices_until, Disturbance, Divergence, EvalContext, IndexKind,
    ObjectiveEvaluator, ObjectiveSpec, PerformanceReport, Scenario, SimulationTrace,
};
use fuzzy_fopid::tables::{reproduce_table, write_reproduction_csv, ParameterTable};
use fuzzy_fopid::tuner::{ga_minimize, GaConfig, GaResult, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(name = "ffpid", version, about = "Fuzzy fractional-order PID tuning and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tune controller parameters with the genetic algorithm.
    Tune(TuneArgs),
    /// Re-evaluate a bundled table of published parameter sets.
    Reproduce(ReproduceArgs),
    /// Simulate one parameter set under the evaluation scenario.
    Simulate(SimulateArgs),
    /// Continuous and discretized frequency response of s^order.
    Bode(BodeArgs),
}

/// Options shared by the run commands.
#[derive(Debug, Clone, Default, Args)]
pub struct RunOptions {
    /// JSON run manifest.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Simulation horizon override, s.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Sample time override, s.
    #[arg(long)]
    pub step: Option<f64>,
    /// Plant: p1 or p2 (overrides the manifest).
    #[arg(long)]
    pub plant: Option<PlantName>,
    /// Controller kind (overrides the manifest).
    #[arg(long)]
    pub controller: Option<ControllerKind>,
    /// Performance index (overrides the manifest).
    #[arg(long)]
    pub index: Option<IndexKind>,
}

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub run: RunOptions,
    /// GA seed (overrides the manifest).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Generation limit override.
    #[arg(long)]
    pub generations: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    /// Table id, 1 to 4.
    #[arg(long)]
    pub table: u8,
    /// Output directory (default `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Horizon override, s.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Sample time override, s.
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunOptions,
    /// Controller document `{kind, params, sample_time}`.
    #[arg(long, conflicts_with_all = ["gains", "table"])]
    pub params: Option<PathBuf>,
    /// Comma-separated parameter vector for `--controller`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gains: Option<Vec<f64>>,
    /// Take the parameters from a bundled table row selected by
    /// `--controller` and `--index`.
    #[arg(long)]
    pub table: Option<u8>,
    /// Run the setpoint step only, without the load disturbance.
    #[arg(long)]
    pub no_disturbance: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BodeArgs {
    /// Operator order, in (-1, 1).
    #[arg(long, allow_hyphen_values = true)]
    pub order: f64,
    #[arg(long, default_value_t = 0.01)]
    pub omega_b: f64,
    #[arg(long, default_value_t = 100.0)]
    pub omega_h: f64,
    /// Half filter order; the filter has 2N+1 poles.
    #[arg(long = "n", default_value_t = 2)]
    pub half_order: usize,
    /// Sample time of the discretized column, s.
    #[arg(long, default_value_t = 0.001)]
    pub step: f64,
    #[arg(long, default_value_t = 61)]
    pub points: usize,
    /// Frequency sweep limits, rad/s.
    #[arg(long, default_value_t = 1e-3)]
    pub omega_min: f64,
    #[arg(long, default_value_t = 1e3)]
    pub omega_max: f64,
    /// Output directory; the CSV goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PlantName {
    P1,
    P2,
}

/// Either a benchmark plant name or a full model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlantRef {
    Named(PlantName),
    Model(PlantModel),
}

impl PlantRef {
    pub fn model(&self) -> PlantModel {
        match self {
            PlantRef::Named(PlantName::P1) => PlantModel::p1(),
            PlantRef::Named(PlantName::P2) => PlantModel::p2(),
            PlantRef::Model(m) => m.clone(),
        }
    }
}

/// GA settings of a manifest; bounds come from `RunManifest::bounds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaSettings {
    pub population_size: usize,
    pub elite_count: usize,
    pub crossover_fraction: f64,
    pub max_generations: usize,
    pub stall_generations: usize,
    pub stall_tolerance: f64,
    pub mutation_scale: f64,
    pub mutation_shrink: f64,
}

impl Default for GaSettings {
    fn default() -> Self {
        let d = GaConfig::default();
        Self {
            population_size: d.population_size,
            elite_count: d.elite_count,
            crossover_fraction: d.crossover_fraction,
            max_generations: d.max_generations,
            stall_generations: d.stall_generations,
            stall_tolerance: d.stall_tolerance,
            mutation_scale: d.mutation_scale,
            mutation_shrink: d.mutation_shrink,
        }
    }
}

/// JSON run document read from `--scenario`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub plant: PlantRef,
    pub controller: ControllerKind,
    #[serde(default)]
    pub objective: ObjectiveSpec,
    /// Tuning scenario; the plant's default when absent.
    #[serde(default)]
    pub scenario: Option<Scenario>,
    #[serde(default)]
    pub bounds: ParameterBounds,
    #[serde(default)]
    pub ga: GaSettings,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Parameter values by name, for `simulate`.
    #[serde(default)]
    pub params: Option<serde_json::Map<String, serde_json::Value>>,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self {
            plant: PlantRef::Named(PlantName::P1),
            controller: ControllerKind::FuzzyFopid,
            objective: ObjectiveSpec::default(),
            scenario: None,
            bounds: ParameterBounds::default(),
            ga: GaSettings::default(),
            seed: None,
            params: None,
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let file = File::open(path).with_context(|| format!("cannot open {what} {}", path.display()))?;
    let de = &mut serde_json::Deserializer::from_reader(BufReader::new(file));
    serde_path_to_error::deserialize(de)
        .map_err(|e| anyhow::anyhow!("field `{}`: {}", e.path(), e.inner()))
        .with_context(|| format!("invalid {what} {}", path.display()))
}

pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    read_json(path, "run manifest")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn create_file(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn output_dir(out: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = out.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    Ok(dir)
}

/// Resolved settings of a run command.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub manifest: RunManifest,
    pub plant: PlantModel,
    pub tuning: Scenario,
    pub evaluation: Scenario,
}

pub fn resolve_run(opts: &RunOptions) -> Result<ResolvedRun> {
    let mut manifest = match &opts.scenario {
        Some(p) => load_manifest(p)?,
        None => RunManifest::default(),
    };
    if let Some(p) = opts.plant {
        manifest.plant = PlantRef::Named(p);
    }
    if let Some(c) = opts.controller {
        manifest.controller = c;
    }
    if let Some(i) = opts.index {
        manifest.objective.index = i;
    }
    manifest.objective.validate()?;
    let plant = manifest.plant.model();
    plant.validate()?;
    let (tuning, evaluation) = scenarios(&plant, manifest.scenario.as_ref(), opts.horizon, opts.step);
    tuning.validate()?;
    evaluation.validate()?;
    Ok(ResolvedRun { manifest, plant, tuning, evaluation })
}

/// Tuning scenario (setpoint only) and evaluation scenario (plus a unit load
/// disturbance at mid-horizon unless the base scenario specifies one).
pub fn scenarios(
    plant: &PlantModel,
    base: Option<&Scenario>,
    horizon: Option<f64>,
    step: Option<f64>,
) -> (Scenario, Scenario) {
    let mut tuning = base.cloned().unwrap_or_else(|| Scenario::tuning(plant));
    let explicit = tuning.disturbance.take();
    if let Some(t) = horizon {
        tuning.horizon_s = t;
    }
    if let Some(h) = step {
        tuning.sample_time_s = h;
    }
    let mut evaluation = tuning.clone();
    evaluation.disturbance = Some(explicit.unwrap_or(Disturbance {
        onset_s: 0.5 * tuning.horizon_s,
        amplitude: 1.0,
    }));
    (tuning, evaluation)
}

/// Report document written next to every trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub controller: ControllerSpec,
    pub diverged: bool,
    pub divergence: Option<Divergence>,
    pub divergence_time_s: Option<f64>,
    pub indices: Option<PerformanceReport>,
}

fn report_for(params: ControllerParams, scenario: &Scenario, trace: &SimulationTrace) -> Result<RunReport> {
    let window = scenario.disturbance.map_or(f64::INFINITY, |d| d.onset_s);
    let indices = if trace.diverged {
        None
    } else {
        Some(compute_indices_until(trace, window)?)
    };
    Ok(RunReport {
        controller: ControllerSpec { params, sample_time: scenario.sample_time_s },
        diverged: trace.diverged,
        divergence: trace.divergence,
        divergence_time_s: trace.divergence_time,
        indices,
    })
}

fn write_trace_and_report(dir: &Path, params: ControllerParams, scenario: &Scenario, trace: &SimulationTrace) -> Result<RunReport> {
    trace.write_csv(create_file(dir, "trace.csv")?)?;
    let report = report_for(params, scenario, trace)?;
    write_json(&dir.join("report.json"), &report)?;
    Ok(report)
}

/// Best-parameter document written by `tune`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome {
    pub controller: ControllerSpec,
    pub plant: PlantModel,
    pub objective: ObjectiveSpec,
    pub j: f64,
    pub seed: u64,
    pub generations: usize,
    pub evaluations: usize,
    pub termination: fuzzy_fopid::tuner::Termination,
}

pub fn cmd_tune(args: &TuneArgs) -> Result<(TuneOutcome, GaResult)> {
    let run = resolve_run(&args.run)?;
    let m = &run.manifest;
    let seed = args.seed.or(m.seed).unwrap_or(DEFAULT_SEED);
    let g = &m.ga;
    let config = GaConfig {
        population_size: g.population_size,
        elite_count: g.elite_count,
        crossover_fraction: g.crossover_fraction,
        max_generations: args.generations.unwrap_or(g.max_generations),
        stall_generations: g.stall_generations,
        stall_tolerance: g.stall_tolerance,
        mutation_scale: g.mutation_scale,
        mutation_shrink: g.mutation_shrink,
        seed,
        bounds: m.bounds.for_kind(m.controller),
    };
    let evaluator = ObjectiveEvaluator {
        kind: m.controller,
        plant: run.plant.clone(),
        objective: m.objective,
        scenario: run.tuning.clone(),
        ctx: EvalContext { bounds: m.bounds, ..EvalContext::default() },
    };
    let result = ga_minimize(|x| evaluator.score(x), &config)?;
    let params = decode_parameter_vector(m.controller, &result.best_genes, &m.bounds)?;

    let dir = output_dir(&args.run.out)?;
    let outcome = TuneOutcome {
        controller: ControllerSpec { params, sample_time: run.tuning.sample_time_s },
        plant: run.plant.clone(),
        objective: m.objective,
        j: result.best_score,
        seed,
        generations: result.generations,
        evaluations: result.evaluations,
        termination: result.termination,
    };
    write_json(&dir.join("best.json"), &outcome)?;
    result.write_history_csv(create_file(&dir, "history.csv")?)?;
    let trace = evaluator.ctx.simulate(params, &run.plant, &run.evaluation)?;
    write_trace_and_report(&dir, params, &run.evaluation, &trace)?;
    Ok((outcome, result))
}

pub fn cmd_reproduce(args: &ReproduceArgs) -> Result<Vec<fuzzy_fopid::tables::ReproducedRow>> {
    let table = ParameterTable::bundled(args.table)?;
    let plant = table.plant.model();
    let (tuning, _) = scenarios(&plant, None, args.horizon, args.step);
    tuning.validate()?;
    let rows = reproduce_table(args.table, Some(&tuning))?;
    let dir = output_dir(&args.out)?;
    write_reproduction_csv(&rows, create_file(&dir, &format!("table{}.csv", args.table))?)?;
    Ok(rows)
}

fn simulate_params(args: &SimulateArgs, run: &ResolvedRun) -> Result<ControllerParams> {
    let kind = run.manifest.controller;
    if let Some(path) = &args.params {
        let spec: ControllerSpec = read_json(path, "controller document")?;
        return Ok(spec.params);
    }
    if let Some(g) = &args.gains {
        return Ok(decode_parameter_vector(kind, g, &run.manifest.bounds)?);
    }
    if let Some(id) = args.table {
        let table = ParameterTable::bundled(id)?;
        let index = run.manifest.objective.index;
        return table
            .find(kind, index)
            .map(|r| r.params)
            .with_context(|| format!("table {id} has no {kind} row for {index}"));
    }
    if let Some(map) = &run.manifest.params {
        let doc = serde_json::json!({ "kind": kind, "params": map });
        return serde_path_to_error::deserialize(doc)
            .map_err(|e| anyhow::anyhow!("field `params.{}`: {}", e.path(), e.inner()));
    }
    bail!("no controller parameters: pass --params, --gains, --table or a manifest `params` object")
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<RunReport> {
    let run = resolve_run(&args.run)?;
    let params = simulate_params(args, &run)?;
    let scenario = if args.no_disturbance { &run.tuning } else { &run.evaluation };
    let ctx = EvalContext { bounds: run.manifest.bounds, ..EvalContext::default() };
    let trace = ctx.simulate(params, &run.plant, scenario)?;
    let dir = output_dir(&args.run.out)?;
    write_trace_and_report(&dir, params, scenario, &trace)
}

/// Rows of `omega_rad_s,mag_db,phase_deg,mag_db_discrete,phase_deg_discrete`.
/// Discrete columns are empty above the Nyquist frequency.
pub fn cmd_bode<W: Write>(args: &BodeArgs, out: W) -> Result<()> {
    let band = OustaloupBand {
        omega_b: args.omega_b,
        omega_h: args.omega_h,
        half_order: args.half_order,
    };
    let filter = band.synthesize(args.order)?;
    let discrete = discretize(&filter, args.step)?;
    if !(args.omega_min > 0.0 && args.omega_min < args.omega_max && args.points >= 2) {
        bail!("need 0 < omega_min < omega_max and at least 2 points");
    }
    let nyquist = std::f64::consts::PI / args.step;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["omega_rad_s", "mag_db", "phase_deg", "mag_db_discrete", "phase_deg_discrete"])?;
    for omega in log_space(args.omega_min, args.omega_max, args.points) {
        let (mag, phase) = bode_point(filter.frequency_response(omega)?);
        let (dmag, dphase) = if omega < nyquist {
            let (m, p) = bode_point(discrete.frequency_response(omega));
            (m.to_string(), p.to_string())
        } else {
            (String::new(), String::new())
        };
        w.write_record([omega.to_string(), mag.to_string(), phase.to_string(), dmag, dphase])?;
    }
    w.flush()?;
    Ok(())
}

/// Executes one parsed command line, printing a short summary to stdout.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Tune(args) => {
            let (outcome, _) = cmd_tune(&args)?;
            println!(
                "{}: J = {} after {} generations ({:?})",
                outcome.controller.params.kind(),
                outcome.j,
                outcome.generations,
                outcome.termination
            );
            println!("parameters: {:?}", outcome.controller.params.to_vector());
        }
        Command::Reproduce(args) => {
            let rows = cmd_reproduce(&args)?;
            for r in rows {
                println!(
                    "{:<12} {:<6} J_paper {:>10.4} J_ours {:>10.4} rel_diff {:+.3}{}",
                    r.controller.to_string(),
                    r.index.to_string(),
                    r.j_paper,
                    r.j_ours,
                    r.rel_diff,
                    if r.stable { "" } else { " UNSTABLE" }
                );
            }
        }
        Command::Simulate(args) => {
            let report = cmd_simulate(&args)?;
            match (&report.indices, report.divergence) {
                (Some(ix), _) => println!(
                    "ITAE {:.6} ITSE {:.6} ISTES {:.6} ISTSE {:.6} ISCO {:.6} overshoot {:.2}%",
                    ix.itae, ix.itse, ix.istes, ix.istse, ix.isco, ix.overshoot_pct
                ),
                (None, d) => println!(
                    "diverged ({d:?}) at t = {:?} s; partial trace written",
                    report.divergence_time_s
                ),
            }
        }
        Command::Bode(args) => match &args.out {
            Some(_) => {
                let dir = output_dir(&args.out)?;
                cmd_bode(&args, create_file(&dir, "bode.csv")?)?;
            }
            None => cmd_bode(&args, io::stdout().lock())?,
        },
    }
    Ok(())
}
