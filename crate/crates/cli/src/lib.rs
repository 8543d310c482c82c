//! Command-line runner: configuration, subcommand bodies and report emission.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use qinstrument::codec::{InstrumentJson, ModelJson};
use qinstrument::gate::{
    ancilla_floor, basis_fidelities, bound_coherent, bound_field_state, bound_spin, gate_fidelity, optimize_fidelity,
    optimize_spin_ladder, total_charge, BoundReport, FidelityOptions, GateImplementation, OptimizerOptions, Scenario,
};
use qinstrument::instruments::{action_distance, dilate_instrument, instrument_from_model};
use qinstrument::operator::{commutator, max_abs};
use qinstrument::spin::{collective_sx, spin_operators, thermal_state};
use qinstrument::sweeps::{relation_sweeps, way_sweep, Dims, SweepCounts, SweepSummary, ANCILLA_DIMS, SYSTEM_DIMS};
use qinstrument::way::{way_audit, ConservationSpec};
use qinstrument::{DensityOperator, NumericConfig, Observable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Floors are certified against achieved gate errors with this slack.
const FLOOR_TOL: f64 = 1e-6;
/// Unitaries commuting with the charge to this precision count as conserving.
const CONSERVATION_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "qinstrument", version, about = "Noise-disturbance relations and conservation-law gate bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Randomized sweeps over every uncertainty chain and construction.
    VerifyRelations,
    /// Audit a model file against the WAY bound, or sweep random conserving models.
    WayBound {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Fidelity and error floor of an implementation file or a named scenario.
    GateAudit {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Optimise conserving Hadamard implementations with 1..=n ancilla qubits.
    OptimizeGate,
    /// Build a measurement model realising an instrument or channel file.
    Dilate {
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifyRelations => "verify-relations",
            Command::WayBound { .. } => "way-bound",
            Command::GateAudit { .. } => "gate-audit",
            Command::OptimizeGate => "optimize-gate",
            Command::Dilate { .. } => "dilate",
        }
    }

    fn input(&self) -> Option<&PathBuf> {
        match self {
            Command::WayBound { input } | Command::GateAudit { input } | Command::Dilate { input } => input.as_ref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimsConfig {
    /// System dimensions for the relation sweeps.
    pub system: Dims,
    /// Probe dimensions for random conserving models.
    pub ancilla: Dims,
}

impl Default for DimsConfig {
    fn default() -> Self {
        Self {
            system: SYSTEM_DIMS,
            ancilla: ANCILLA_DIMS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleCounts {
    pub instrument_chain: usize,
    pub direct_chain: usize,
    pub joint_povm: usize,
    pub heisenberg: usize,
    pub zero_noise: usize,
    pub dilation: usize,
    pub way: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        let r = SweepCounts::default();
        Self {
            instrument_chain: r.instrument_chain,
            direct_chain: r.direct_chain,
            joint_povm: r.joint_povm,
            heisenberg: r.heisenberg,
            zero_noise: r.zero_noise,
            dilation: r.dilation,
            way: 500,
        }
    }
}

impl SampleCounts {
    pub fn relations(&self) -> SweepCounts {
        SweepCounts {
            instrument_chain: self.instrument_chain,
            direct_chain: self.direct_chain,
            joint_povm: self.joint_povm,
            heisenberg: self.heisenberg,
            zero_noise: self.zero_noise,
            dilation: self.dilation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: Scenario,
    /// `⟨N⟩` for field scenarios; the occupied level for `number`.
    pub mean_photons: f64,
    /// Number of spin-½ ancillas.
    pub n: u32,
    /// Fock-space truncation.
    pub cutoff: usize,
    /// Run the optimizer for `spin_entangled`.
    pub optimize: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            kind: Scenario::SpinEntangled,
            mean_photons: 1.0,
            n: 1,
            cutoff: 30,
            optimize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub tolerances: NumericConfig,
    pub dims: DimsConfig,
    pub sample_counts: SampleCounts,
    pub scenario: ScenarioConfig,
    pub optimizer: OptimizerOptions,
    pub fidelity: FidelityOptions,
    /// Input file for `way-bound`, `gate-audit` and `dilate`.
    pub input: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.tolerances.validate()?;
        let c = &self.sample_counts;
        let counts = [
            ("instrument_chain", c.instrument_chain),
            ("direct_chain", c.direct_chain),
            ("joint_povm", c.joint_povm),
            ("heisenberg", c.heisenberg),
            ("zero_noise", c.zero_noise),
            ("dilation", c.dilation),
            ("way", c.way),
            ("optimizer.restarts", self.optimizer.restarts),
            ("optimizer.iterations", self.optimizer.iterations),
            ("fidelity.grid", self.fidelity.grid),
            ("fidelity.refine_starts", self.fidelity.refine_starts),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, n)| *n == 0) {
            bail!("sample count {name} must be positive");
        }
        if !self.dims.system.is_valid(2) {
            bail!("system dims must satisfy 2 <= min <= max");
        }
        if !self.dims.ancilla.is_valid(2) {
            bail!("ancilla dims must satisfy 2 <= min <= max");
        }
        let s = &self.scenario;
        if s.n == 0 {
            bail!("scenario.n must be positive");
        }
        if !(s.mean_photons >= 0.0 && s.mean_photons.is_finite()) {
            bail!("scenario.mean_photons must be non-negative");
        }
        if s.cutoff == 0 {
            bail!("scenario.cutoff must be positive");
        }
        if !(self.fidelity.tol > 0.0 && self.optimizer.initial_step > 0.0) {
            bail!("fidelity.tol and optimizer.initial_step must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: RunConfig,
    pub results: Value,
    pub wall_time: f64,
    pub violations: Vec<String>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.violations.is_empty() {
            EXIT_OK
        } else {
            EXIT_VIOLATION
        }
    }
}

/// Command body output before timing is attached.
pub struct Body {
    pub results: Value,
    pub violations: Vec<String>,
}

/// Resolves the configuration from the file and flag overrides.
pub fn resolve_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(input) = cli.command.input() {
        config.input = Some(input.clone());
    }
    config.validate()?;
    Ok(config)
}

pub fn run(command: &Command, config: &RunConfig) -> anyhow::Result<RunReport> {
    let start = Instant::now();
    let body = match command {
        Command::VerifyRelations => verify_relations(config)?,
        Command::WayBound { .. } => way_bound(config)?,
        Command::GateAudit { .. } => gate_audit(config)?,
        Command::OptimizeGate => optimize_gate(config)?,
        Command::Dilate { .. } => dilate(config)?,
    };
    Ok(RunReport {
        command: command.name().to_string(),
        config: config.clone(),
        results: body.results,
        wall_time: start.elapsed().as_secs_f64(),
        violations: body.violations,
    })
}

fn sweep_violations(summaries: &[SweepSummary]) -> Vec<String> {
    summaries
        .iter()
        .flat_map(|s| {
            s.links.iter().filter(|l| l.violations > 0).map(move |l| {
                format!("{} / {}: {} violations, min slack {:e}", s.name, l.name, l.violations, l.min_slack)
            })
        })
        .collect()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading input {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing input {}", path.display()))
}

pub fn verify_relations(config: &RunConfig) -> anyhow::Result<Body> {
    let sweeps = relation_sweeps(
        config.seed,
        &config.sample_counts.relations(),
        config.dims.system,
        &config.tolerances,
    )?;
    let min_slack = sweeps.iter().map(|s| s.min_slack()).fold(f64::INFINITY, f64::min);
    Ok(Body {
        violations: sweep_violations(&sweeps),
        results: json!({ "min_slack": min_slack, "sweeps": sweeps }),
    })
}

/// A measurement model with the observable, state and charges it is audited against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WayInput {
    pub model: ModelJson,
    pub observable: Observable,
    pub state: DensityOperator,
    pub system_charge: Observable,
    pub ancilla_charge: Observable,
}

pub fn way_bound(config: &RunConfig) -> anyhow::Result<Body> {
    let cfg = &config.tolerances;
    match &config.input {
        Some(path) => {
            let input: WayInput = read_json(path)?;
            let model = input.model.decode(cfg)?;
            let spec = ConservationSpec {
                system_charge: input.system_charge,
                ancilla_charge: input.ancilla_charge,
            };
            let report = way_audit(&model, &input.observable, &spec, &input.state, cfg)?;
            let conserving = report.hypotheses_hold(CONSERVATION_TOL);
            let mut violations = Vec::new();
            if conserving && report.margin < -cfg.slack_tol {
                violations.push(format!("conserving model below the WAY bound: margin {:e}", report.margin));
            }
            Ok(Body {
                results: json!({ "mode": if conserving { "certified" } else { "diagnostic" }, "report": report }),
                violations,
            })
        }
        None => {
            let summary = way_sweep(config.seed, config.sample_counts.way, config.dims.ancilla, cfg)?;
            Ok(Body {
                violations: sweep_violations(std::slice::from_ref(&summary)),
                results: json!({ "mode": "sweep", "summary": summary }),
            })
        }
    }
}

/// An implementation file, optionally naming the ancilla's `L_x`; the default is
/// the spin-`j` operator `J_x` of the ancilla dimension.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateInput {
    pub implementation: GateImplementation,
    #[serde(default)]
    pub ancilla_charge: Option<Observable>,
}

fn floor_violation(report: &BoundReport) -> Option<String> {
    (!report.respected(FLOOR_TOL)).then(|| {
        format!(
            "{:?}: achieved error {:?} below floor {}",
            report.scenario, report.achieved_error, report.floor
        )
    })
}

pub fn gate_audit(config: &RunConfig) -> anyhow::Result<Body> {
    let cfg = &config.tolerances;
    let fidelity_opts = FidelityOptions {
        seed: config.seed,
        ..config.fidelity
    };
    if let Some(path) = &config.input {
        let input: GateInput = read_json(path)?;
        let imp = input.implementation;
        imp.validate(cfg)?;
        let charge = match input.ancilla_charge {
            Some(l) => l,
            None => Observable::new(spin_operators(imp.ancilla_dim).0)?,
        };
        if charge.dim() != imp.ancilla_dim {
            bail!("ancilla charge has dimension {}, implementation {}", charge.dim(), imp.ancilla_dim);
        }
        let residual = max_abs(&commutator(&imp.unitary, total_charge(&charge).matrix()));
        let conserving = residual <= CONSERVATION_TOL;
        let fidelity = gate_fidelity(&imp, &fidelity_opts);
        let floor = ancilla_floor(&charge, &imp.ancilla_vector)?;
        let achieved = fidelity.gate_error();
        let mut violations = Vec::new();
        if conserving && achieved < floor - FLOOR_TOL {
            violations.push(format!("conserving implementation below floor: 1 - F^2 = {achieved}, floor {floor}"));
        }
        return Ok(Body {
            results: json!({
                "mode": "implementation",
                "fidelity": fidelity,
                "basis_fidelities": basis_fidelities(&imp),
                "gate_error": achieved,
                "floor": floor,
                "floor_checked": conserving,
                "conservation_residual": residual,
            }),
            violations,
        });
    }

    let s = &config.scenario;
    let mut report = match s.kind {
        Scenario::Coherent => bound_coherent(s.mean_photons)?,
        Scenario::Number => {
            let level = s.mean_photons.round() as usize;
            if level > s.cutoff {
                bail!("number state {level} exceeds cutoff {}", s.cutoff);
            }
            bound_field_state(&DensityOperator::basis(s.cutoff + 1, level), s.cutoff)?
        }
        Scenario::Thermal => bound_field_state(&thermal_state(s.mean_photons, s.cutoff), s.cutoff)?,
        Scenario::SpinEntangled => bound_spin(s.n, true)?,
        Scenario::SpinSeparable => bound_spin(s.n, false)?,
    };
    let mut optimized = Value::Null;
    if s.kind == Scenario::SpinEntangled && s.optimize {
        let charge = Observable::new(collective_sx(s.n as usize))?;
        let opts = OptimizerOptions {
            seed: config.seed,
            fidelity: fidelity_opts,
            ..config.optimizer
        };
        let outcome = optimize_fidelity(&charge, &opts, None, cfg)?;
        let worst_restart = outcome.restart_errors.iter().cloned().fold(f64::INFINITY, f64::min);
        report = report.with_achieved(outcome.fidelity.gate_error());
        optimized = json!({
            "fidelity": outcome.fidelity,
            "restart_errors": outcome.restart_errors,
            "lowest_restart_error": worst_restart,
            "implementation": outcome.best,
        });
    }
    Ok(Body {
        violations: floor_violation(&report).into_iter().collect(),
        results: json!({ "mode": "scenario", "bound": report, "optimized": optimized }),
    })
}

pub fn optimize_gate(config: &RunConfig) -> anyhow::Result<Body> {
    let opts = OptimizerOptions {
        seed: config.seed,
        fidelity: FidelityOptions {
            seed: config.seed,
            ..config.fidelity
        },
        ..config.optimizer
    };
    let ladder = optimize_spin_ladder(config.scenario.n as usize, &opts, &config.tolerances)?;
    let mut violations = Vec::new();
    for (i, o) in ladder.iter().enumerate() {
        for (r, e) in o.restart_errors.iter().enumerate() {
            if *e < o.report.floor - FLOOR_TOL {
                violations.push(format!("n={} restart {r}: 1 - F^2 = {e} below floor {}", i + 1, o.report.floor));
            }
        }
    }
    let runs: Vec<Value> = ladder
        .iter()
        .enumerate()
        .map(|(i, o)| {
            json!({
                "n": i + 1,
                "gate_error": o.fidelity.gate_error(),
                "bound": o.report,
                "fidelity": o.fidelity,
                "restart_errors": o.restart_errors,
                "implementation": o.best,
            })
        })
        .collect();
    Ok(Body {
        results: json!({ "runs": runs }),
        violations,
    })
}

pub fn dilate(config: &RunConfig) -> anyhow::Result<Body> {
    let cfg = &config.tolerances;
    let Some(path) = &config.input else {
        bail!("dilate needs an instrument file (--input or config.input)");
    };
    let input: InstrumentJson = read_json(path)?;
    let instr = input.decode(cfg).context("invalid instrument")?;
    let model = dilate_instrument(&instr);
    let residual = action_distance(&instr, &instrument_from_model(&model, cfg)?);
    Ok(Body {
        results: json!({
            "ancilla_dim": model.ancilla_dim(),
            "round_trip_residual": residual,
            "model": ModelJson::encode(&model),
        }),
        violations: Vec::new(),
    })
}

/// Parses, runs and emits; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let config = match resolve_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_INPUT;
        }
    };
    let report = match run(&cli.command, &config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_INPUT;
        }
    };
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(&report).expect("reports serialise"),
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text + "\n") {
                eprintln!("error: writing {}: {e}", path.display());
                return EXIT_INPUT;
            }
        }
        None => println!("{text}"),
    }
    for v in &report.violations {
        eprintln!("violation: {v}");
    }
    report.exit_code()
}
