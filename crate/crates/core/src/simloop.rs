//! Closed-loop simulation, integral performance indices and the penalized
//! tuning objective `J = w1 * index + w2 * ISCO`.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::controllers::{
    decode_parameter_vector, ControllerBlock, ControllerKind, ControllerParams, ParameterBounds,
};
use crate::error::{Error, Result};
use crate::fracops::OustaloupBand;
use crate::fuzzy::{build_standard_engine, FuzzyEngine};
use crate::plants::{PlantModel, PlantState};

/// Step load disturbance added at the plant input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub onset_s: f64,
    pub amplitude: f64,
}

/// Excitation, horizon and numerical settings of one closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub horizon_s: f64,
    pub sample_time_s: f64,
    /// Amplitude of the setpoint step applied at `t = 0`.
    #[serde(default = "one")]
    pub setpoint: f64,
    #[serde(default)]
    pub disturbance: Option<Disturbance>,
    /// `|y|` or `|u|` beyond this marks the run as diverged.
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
    /// A run whose mean `|e|` over the last tenth of the horizon exceeds
    /// this fraction of the setpoint is flagged as not settling. `None`
    /// disables the check.
    #[serde(default = "default_settle")]
    pub settle_tolerance: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn default_blowup() -> f64 {
    PlantState::DEFAULT_BLOWUP
}

fn default_settle() -> Option<f64> {
    Some(0.5)
}

impl Scenario {
    /// Setpoint step only, with per-plant horizon and sample time.
    pub fn tuning(plant: &PlantModel) -> Self {
        let (horizon_s, sample_time_s) = match plant {
            PlantModel::NonlinearP1 { .. } => (40.0, 0.01),
            PlantModel::DelayedLti { .. } => (40.0, 0.005),
        };
        Self {
            horizon_s,
            sample_time_s,
            setpoint: 1.0,
            disturbance: None,
            blowup_threshold: default_blowup(),
            settle_tolerance: default_settle(),
        }
    }

    /// Tuning scenario plus a unit load disturbance at mid-horizon.
    pub fn evaluation(plant: &PlantModel) -> Self {
        let mut s = Self::tuning(plant);
        s.disturbance = Some(Disturbance {
            onset_s: 0.5 * s.horizon_s,
            amplitude: 1.0,
        });
        s
    }

    pub fn steps(&self) -> usize {
        (self.horizon_s / self.sample_time_s).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_time_s > 0.0 && self.sample_time_s < self.horizon_s) {
            return Err(Error::Config(format!(
                "need 0 < sample_time < horizon, got h = {} T = {}",
                self.sample_time_s, self.horizon_s
            )));
        }
        if let Some(d) = &self.disturbance {
            if !(d.onset_s >= 0.0 && d.onset_s < self.horizon_s) {
                return Err(Error::Config(format!(
                    "disturbance onset {} outside [0, {})",
                    d.onset_s, self.horizon_s
                )));
            }
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::Config("blow-up threshold must be positive".into()));
        }
        Ok(())
    }

    fn disturbance_at(&self, t: f64) -> f64 {
        match self.disturbance {
            Some(d) if t >= d.onset_s - 1e-9 * self.sample_time_s => d.amplitude,
            _ => 0.0,
        }
    }
}

/// Why a run was flagged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divergence {
    /// A signal crossed the blow-up threshold or became non-finite.
    BlowUp,
    /// The loop stayed bounded but never approached the setpoint.
    NotSettled,
}

/// Uniformly sampled closed-loop signals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationTrace {
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    pub y: Vec<f64>,
    pub e: Vec<f64>,
    pub u: Vec<f64>,
    pub diverged: bool,
    pub divergence_time: Option<f64>,
    pub divergence: Option<Divergence>,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn push(&mut self, s: &LoopSample) {
        self.t.push(s.t);
        self.r.push(s.r);
        self.y.push(s.y);
        self.e.push(s.e);
        self.u.push(s.u);
    }

    /// CSV with header `t,r,y,e,u`. Values use the shortest round-trip
    /// representation, so reading back is lossless.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "r", "y", "e", "u"])?;
        for k in 0..self.len() {
            w.write_record(
                [self.t[k], self.r[k], self.y[k], self.e[k], self.u[k]].map(|v| v.to_string()),
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let headers = rd.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "r", "y", "e", "u"] {
            return Err(Error::Config(format!("unexpected trace header {headers:?}")));
        }
        let mut tr = SimulationTrace::default();
        for rec in rd.records() {
            let rec = rec?;
            let v: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("bad number `{s}`: {e}"))))
                .collect::<Result<_>>()?;
            tr.push(&LoopSample { t: v[0], r: v[1], y: v[2], e: v[3], u: v[4] });
        }
        Ok(tr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LoopSample {
    t: f64,
    r: f64,
    y: f64,
    e: f64,
    u: f64,
}

/// Drives the loop one sample at a time, shared by trace recording and the
/// streaming objective.
struct ClosedLoop<'a> {
    controller: &'a mut ControllerBlock,
    plant: &'a mut PlantState,
    scenario: &'a Scenario,
    k: usize,
    n: usize,
    blown_up_at: Option<f64>,
}

impl<'a> ClosedLoop<'a> {
    fn new(
        controller: &'a mut ControllerBlock,
        plant: &'a mut PlantState,
        scenario: &'a Scenario,
    ) -> Self {
        Self {
            controller,
            plant,
            scenario,
            k: 0,
            n: scenario.steps(),
            blown_up_at: None,
        }
    }

    fn next_sample(&mut self) -> Option<LoopSample> {
        if self.k > self.n || self.blown_up_at.is_some() {
            return None;
        }
        let h = self.scenario.sample_time_s;
        let t = self.k as f64 * h;
        let r = self.scenario.setpoint;
        let y = self.plant.output();
        let e = r - y;
        let u = self.controller.step(e);
        let limit = self.scenario.blowup_threshold;
        if !(u.abs() <= limit && y.abs() <= limit) {
            self.blown_up_at = Some(t);
            return None;
        }
        if self.k < self.n {
            self.plant.step(u, self.scenario.disturbance_at(t));
            if self.plant.diverged() {
                self.blown_up_at = Some(t + h);
            }
        }
        self.k += 1;
        Some(LoopSample { t, r, y, e, u })
    }
}

/// Running trapezoidal integrals of all index integrands.
#[derive(Debug, Clone, Default)]
struct IndexAccumulator {
    prev: Option<(f64, [f64; 7])>,
    sums: [f64; 7],
}

impl IndexAccumulator {
    fn integrands(t: f64, e: f64, u: f64) -> [f64; 7] {
        let e2 = e * e;
        let t2 = t * t;
        [t * e.abs(), t * e2, t2 * t2 * e2, t2 * e2, u * u, e.abs(), e2]
    }

    fn add(&mut self, t: f64, e: f64, u: f64) {
        let f = Self::integrands(t, e, u);
        if let Some((tp, fp)) = self.prev {
            let half = 0.5 * (t - tp);
            for i in 0..7 {
                self.sums[i] += half * (f[i] + fp[i]);
            }
        }
        self.prev = Some((t, f));
    }

    fn index(&self, kind: IndexKind) -> f64 {
        match kind {
            IndexKind::Itae => self.sums[0],
            IndexKind::Itse => self.sums[1],
            IndexKind::Istes => self.sums[2],
            IndexKind::Istse => self.sums[3],
        }
    }

    fn isco(&self) -> f64 {
        self.sums[4]
    }
}

/// Tracks the mean absolute error over the trailing part of the horizon.
struct SettleMonitor {
    from_k: usize,
    sum: f64,
    count: usize,
}

impl SettleMonitor {
    fn new(n: usize) -> Self {
        Self { from_k: n - n / 10, sum: 0.0, count: 0 }
    }

    fn add(&mut self, k: usize, e: f64) {
        if k >= self.from_k {
            self.sum += e.abs();
            self.count += 1;
        }
    }

    fn settled(&self, scenario: &Scenario) -> bool {
        match scenario.settle_tolerance {
            Some(tol) if self.count > 0 => {
                self.sum / self.count as f64 <= tol * scenario.setpoint.abs().max(f64::MIN_POSITIVE)
            }
            _ => true,
        }
    }
}

/// Runs the loop over the scenario horizon, stopping early on blow-up.
pub fn run_closed_loop(
    controller: &mut ControllerBlock,
    plant: &mut PlantState,
    scenario: &Scenario,
) -> SimulationTrace {
    let mut trace = SimulationTrace::default();
    let mut settle = SettleMonitor::new(scenario.steps());
    let mut lp = ClosedLoop::new(controller, plant, scenario);
    while let Some(s) = lp.next_sample() {
        settle.add(trace.len(), s.e);
        trace.push(&s);
    }
    if let Some(t) = lp.blown_up_at {
        trace.diverged = true;
        trace.divergence_time = Some(t);
        trace.divergence = Some(Divergence::BlowUp);
    } else if !settle.settled(scenario) {
        trace.diverged = true;
        trace.divergence_time = trace.t.last().copied();
        trace.divergence = Some(Divergence::NotSettled);
    }
    trace
}

/// Time-weighted error indices, control effort and step-response figures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub itae: f64,
    pub itse: f64,
    pub istes: f64,
    pub istse: f64,
    pub isco: f64,
    pub iae: f64,
    pub ise: f64,
    /// Peak overshoot in percent of the setpoint, before any disturbance.
    pub overshoot_pct: f64,
    /// Time after which `y` stays within 2% of the setpoint, before any
    /// disturbance; `None` if it never does.
    pub settling_time_s: Option<f64>,
}

impl PerformanceReport {
    pub fn index(&self, kind: IndexKind) -> f64 {
        match kind {
            IndexKind::Itae => self.itae,
            IndexKind::Itse => self.itse,
            IndexKind::Istes => self.istes,
            IndexKind::Istse => self.istse,
        }
    }
}

/// Trapezoidal integrals of `t|e|`, `t e^2`, `(t^2 e)^2`, `t^2 e^2`, `u^2`,
/// `|e|` and `e^2` over the trace, plus overshoot and 2% settling time
/// measured up to the disturbance onset (if any).
pub fn compute_indices(trace: &SimulationTrace) -> Result<PerformanceReport> {
    compute_indices_until(trace, f64::INFINITY)
}

/// [`compute_indices`] with step-response figures restricted to `t < window_end`.
pub fn compute_indices_until(trace: &SimulationTrace, window_end: f64) -> Result<PerformanceReport> {
    if trace.diverged {
        return Err(Error::Diverged(trace.divergence_time.unwrap_or(f64::NAN)));
    }
    let mut acc = IndexAccumulator::default();
    for k in 0..trace.len() {
        acc.add(trace.t[k], trace.e[k], trace.u[k]);
    }

    let window = trace.t.iter().take_while(|&&t| t < window_end).count();
    let (mut overshoot_pct, mut settling_time_s) = (0.0, None);
    if window > 0 {
        let r = trace.r[window - 1];
        if r != 0.0 {
            let peak = trace.y[..window].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            overshoot_pct = ((peak - r) / r.abs() * 100.0).max(0.0);
            let band = 0.02 * r.abs();
            settling_time_s = match (0..window).rev().find(|&k| (trace.y[k] - r).abs() > band) {
                None => Some(trace.t[0]),
                Some(k) if k + 1 < window => Some(trace.t[k + 1]),
                Some(_) => None,
            };
        }
    }

    let s = acc.sums;
    Ok(PerformanceReport {
        itae: s[0],
        itse: s[1],
        istes: s[2],
        istse: s[3],
        isco: s[4],
        iae: s[5],
        ise: s[6],
        overshoot_pct,
        settling_time_s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum IndexKind {
    Itae,
    Itse,
    Istes,
    Istse,
}

impl IndexKind {
    pub const ALL: [IndexKind; 4] = [IndexKind::Itae, IndexKind::Itse, IndexKind::Istes, IndexKind::Istse];

    pub fn name(self) -> &'static str {
        match self {
            IndexKind::Itae => "ITAE",
            IndexKind::Itse => "ITSE",
            IndexKind::Istes => "ISTES",
            IndexKind::Istse => "ISTSE",
        }
    }
}

impl std::fmt::Display for IndexKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for IndexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown index `{s}` (ITAE, ITSE, ISTES, ISTSE)")))
    }
}

/// `J = w1 * index + w2 * ISCO`, or `penalty` for unstable loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveSpec {
    pub index: IndexKind,
    pub w1: f64,
    pub w2: f64,
    pub penalty: f64,
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        Self {
            index: IndexKind::Itae,
            w1: 1.0,
            w2: 1.0,
            penalty: 10_000.0,
        }
    }
}

impl ObjectiveSpec {
    pub fn new(index: IndexKind) -> Self {
        Self { index, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w1 >= 0.0 && self.w2 >= 0.0) || self.w1 + self.w2 == 0.0 {
            return Err(Error::Config(format!(
                "weights must be non-negative and not both zero (w1 = {}, w2 = {})",
                self.w1, self.w2
            )));
        }
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            return Err(Error::Config("penalty must be positive and finite".into()));
        }
        Ok(())
    }

    pub fn value(&self, report: &PerformanceReport) -> f64 {
        self.w1 * report.index(self.index) + self.w2 * report.isco
    }
}

/// Shared, immutable resources for building controllers.
#[derive(Debug, Clone)]
pub struct EvalContext {
    pub engine: Arc<FuzzyEngine>,
    pub band: OustaloupBand,
    pub bounds: ParameterBounds,
}

impl Default for EvalContext {
    fn default() -> Self {
        Self {
            engine: Arc::new(build_standard_engine()),
            band: OustaloupBand::default(),
            bounds: ParameterBounds::default(),
        }
    }
}

impl EvalContext {
    pub fn controller(&self, params: ControllerParams, sample_time: f64) -> Result<ControllerBlock> {
        ControllerBlock::new(params, sample_time, Arc::clone(&self.engine), &self.band)
    }

    /// Fresh controller and plant, then [`run_closed_loop`].
    pub fn simulate(
        &self,
        params: ControllerParams,
        plant: &PlantModel,
        scenario: &Scenario,
    ) -> Result<SimulationTrace> {
        scenario.validate()?;
        let mut c = self.controller(params, scenario.sample_time_s)?;
        let mut p = PlantState::new(plant, scenario.sample_time_s)?
            .with_blowup_threshold(scenario.blowup_threshold);
        Ok(run_closed_loop(&mut c, &mut p, scenario))
    }
}

/// Objective value of one parameter vector.
///
/// The loop is integrated in a streaming fashion; the run is abandoned with
/// `objective.penalty` as soon as a signal blows up or the running `J`
/// exceeds the penalty, and also when the loop fails to settle.
pub fn evaluate_objective(
    raw: &[f64],
    kind: ControllerKind,
    plant: &PlantModel,
    objective: &ObjectiveSpec,
    scenario: &Scenario,
    ctx: &EvalContext,
) -> Result<f64> {
    let params = decode_parameter_vector(kind, raw, &ctx.bounds)?;
    evaluate_params(params, plant, objective, scenario, ctx)
}

/// [`evaluate_objective`] for an already decoded parameter set.
pub fn evaluate_params(
    params: ControllerParams,
    plant: &PlantModel,
    objective: &ObjectiveSpec,
    scenario: &Scenario,
    ctx: &EvalContext,
) -> Result<f64> {
    scenario.validate()?;
    let mut c = ctx.controller(params, scenario.sample_time_s)?;
    let mut p = PlantState::new(plant, scenario.sample_time_s)?
        .with_blowup_threshold(scenario.blowup_threshold);
    let mut acc = IndexAccumulator::default();
    let mut settle = SettleMonitor::new(scenario.steps());
    let mut lp = ClosedLoop::new(&mut c, &mut p, scenario);
    let mut k = 0;
    while let Some(s) = lp.next_sample() {
        acc.add(s.t, s.e, s.u);
        settle.add(k, s.e);
        k += 1;
        let j = objective.w1 * acc.index(objective.index) + objective.w2 * acc.isco();
        if !(j < objective.penalty) {
            return Ok(objective.penalty);
        }
    }
    if lp.blown_up_at.is_some() || !settle.settled(scenario) {
        return Ok(objective.penalty);
    }
    Ok(objective.w1 * acc.index(objective.index) + objective.w2 * acc.isco())
}

/// Everything needed to score parameter vectors of one controller kind on
/// one plant; what the tuner sees as its objective.
#[derive(Debug, Clone)]
pub struct ObjectiveEvaluator {
    pub kind: ControllerKind,
    pub plant: PlantModel,
    pub objective: ObjectiveSpec,
    pub scenario: Scenario,
    pub ctx: EvalContext,
}

impl ObjectiveEvaluator {
    pub fn new(kind: ControllerKind, plant: PlantModel, objective: ObjectiveSpec) -> Self {
        let scenario = Scenario::tuning(&plant);
        Self {
            kind,
            plant,
            objective,
            scenario,
            ctx: EvalContext::default(),
        }
    }

    pub fn evaluate(&self, raw: &[f64]) -> Result<f64> {
        evaluate_objective(raw, self.kind, &self.plant, &self.objective, &self.scenario, &self.ctx)
    }

    /// Total version for the tuner: anything that cannot be evaluated scores
    /// the penalty.
    pub fn score(&self, raw: &[f64]) -> f64 {
        self.evaluate(raw).unwrap_or(self.objective.penalty)
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.ctx.bounds.for_kind(self.kind)
    }
}
