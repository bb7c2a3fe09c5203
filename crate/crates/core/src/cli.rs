//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a `check` sweep failed, 2 validation error,
//! 3 degenerate conditioning, 4 enumeration cap exceeded.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::bounds::{
    accuracy_lower_bound, conjectured_posttrain_count, optimality_gap, regularization_bound_rhs, srm_select,
    uniform_convergence_bound, BoundReport, SignConvention,
};
use crate::analysis::diagnostics::{empirical_distribution, empirical_from_policies, tv_distance, Estimator};
use crate::analysis::montecarlo::{run_monte_carlo, trials_csv, MonteCarloConfig};
use crate::checks::sweep_all;
use crate::coherence::{coherence, pmi};
use crate::distribution::softmax_over_coherence;
use crate::error::{Error, Result};
use crate::experiments::equivalence::{equivalence_study, EquivalenceConfig};
use crate::experiments::pipeline::{run_semi_supervised, Method, PipelineConfig};
use crate::experiments::scenario::ScenarioSpec;
use crate::partition::{ContextId, DPolicy, PolicySpace, PolicyState, DEFAULT_ENUMERATION_CAP};
use crate::samplers::{
    bootstrap_distribution, debate_run, gibbs_run, icm_hill_climb, mutual_predictability, simple_bootstrap_run,
    staggered_pairs, training_friendly_gibbs_run, ContextOrder, IcmConfig, RunRecord, SamplerConfig,
};
use crate::scenario_file::{load_scenario, LoadedScenario};
use crate::system::{Beta, LearningSystem, MixtureBayesSystem};
use crate::util::{atomic_write, fmt_f64, to_json_bytes};

pub const OUT_DIR_ENV: &str = "COHERENCE_OUT_DIR";

#[derive(Debug, Parser, Serialize)]
#[command(name = "coherence", version, about = "Coherence optimization over deterministic policies")]
pub struct Cli {
    /// Output directory (created if missing).
    #[arg(long, env = OUT_DIR_ENV, default_value = "coherence-out", global = true)]
    pub out_dir: PathBuf,
    /// Console format; files are always CSV or JSON.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Print χ, f_MP and PMI of a policy.
    Coherence(CoherenceArgs),
    /// Write the exact softmax-over-coherence table.
    Enumerate(EnumerateArgs),
    /// Run a sampler or a semi-supervised pipeline.
    Run(RunArgs),
    /// Evaluate a bound.
    Bounds(BoundsArgs),
    /// Monte Carlo check of the uniform-convergence bound.
    Mc(McArgs),
    /// Coherence-only versus SRM across a lattice of |S_a|.
    Equiv(EquivArgs),
    /// Randomized identity sweeps.
    Check(CheckArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CoherenceArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Comma-separated behavior names, one per context.
    #[arg(long)]
    pub policy: String,
    /// Comma-separated behaviors forming the prior state (default: empty).
    #[arg(long)]
    pub prior: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Inverse temperature; `inf` for the argmax set.
    #[arg(long, default_value = "1")]
    pub beta: Beta,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMethod {
    Gibbs,
    TfGibbs,
    Debate,
    Bootstrap,
    Icm,
    SrmExhaustive,
    Erm,
    CoherenceExhaustive,
}

#[derive(Debug, Args, Serialize)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_enum)]
    pub method: RunMethod,
    #[arg(long, default_value = "1")]
    pub beta: Beta,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.85)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub anchor_weight: f64,
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value = "uniform-round")]
    pub estimator: Estimator,
    /// Bootstrap context order: `index`, `random`, or comma-separated context names.
    #[arg(long, default_value = "index")]
    pub order: String,
    /// Starting policy (comma-separated behavior names); default is every context's first behavior.
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    /// Route gibbs / tf-gibbs / bootstrap / icm through the semi-supervised pipeline.
    #[arg(long)]
    pub semi_supervised: bool,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = SignArg::Corrected)]
    pub sign: SignArg,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignArg {
    Paper,
    Corrected,
}

impl From<SignArg> for SignConvention {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Paper => SignConvention::Paper,
            SignArg::Corrected => SignConvention::Corrected,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[command(subcommand)]
    pub bound: BoundCommand,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundCommand {
    /// Uniform-convergence bound at a coherence value or a scenario policy.
    Uniform {
        #[arg(long, allow_negative_numbers = true, conflicts_with = "scenario")]
        chi: Option<f64>,
        #[arg(long, requires = "policy")]
        scenario: Option<PathBuf>,
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = SignArg::Corrected)]
        sign: SignArg,
    },
    /// Optimality gap of a prior for a ground-truth policy.
    Gap {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        policy: String,
        #[arg(long)]
        prior: Option<String>,
    },
    /// Accuracy lower bound of the SRM selection.
    Accuracy {
        #[arg(long, allow_negative_numbers = true)]
        gap: f64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = SignArg::Corrected)]
        sign: SignArg,
    },
    /// SRM selection from labelled training behaviors.
    Srm {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated behavior names, one per training draw (repeats allowed).
        #[arg(long, default_value = "")]
        train: String,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = SignArg::Corrected)]
        sign: SignArg,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
    },
    /// Regularization bound (asymptotic form).
    Regularization {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        entropy: f64,
        #[arg(long, allow_negative_numbers = true)]
        kl: f64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        delta: f64,
    },
    /// Conjectured posttrain sample count.
    Posttrain {
        #[arg(long, allow_negative_numbers = true)]
        pretrain_coherence: f64,
        #[arg(long, allow_negative_numbers = true)]
        posttrain_coherence: f64,
        #[arg(long)]
        pretrain_agreement: f64,
        #[arg(long)]
        count: u64,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct McArgs {
    /// TOML file with Monte Carlo settings; flags are ignored when given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    #[arg(long, default_value_t = 50)]
    pub n: u64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = SignArg::Corrected)]
    pub sign: SignArg,
    #[arg(long, default_value_t = 4)]
    pub contexts: usize,
    #[arg(long, default_value_t = 3)]
    pub behaviors: usize,
    #[arg(long, default_value_t = 2)]
    pub latents: usize,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct EquivArgs {
    /// TOML file with the study settings; flags are ignored when given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    pub contexts: usize,
    #[arg(long, default_value_t = 2)]
    pub behaviors: usize,
    #[arg(long, default_value_t = 2)]
    pub latents: usize,
    /// Comma-separated |S_a| values (default 0..=contexts).
    #[arg(long)]
    pub lattice: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value = "coherence-exhaustive")]
    pub method: Method,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CheckArgs {
    #[arg(long, default_value_t = 100)]
    pub cases: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Stable exit code of an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::DegenerateConditioning { .. } | Error::DegenerateAtStep { .. } | Error::EmptySupport | Error::ZeroMarginal { .. } => 3,
        Error::CapExceeded { .. } => 4,
        Error::Validation { .. } | Error::SupportMismatch(_) | Error::Config(_) | Error::NonFinite { .. } | Error::Io { .. } => 2,
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let start = Instant::now();
    let result = run(&cli);
    eprintln!("elapsed: {:.3}s", start.elapsed().as_secs_f64());
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<i32> {
    let out = Output {
        dir: &cli.out_dir,
        format: cli.format,
    };
    match &cli.command {
        Command::Coherence(a) => cmd_coherence(a, &out),
        Command::Enumerate(a) => cmd_enumerate(cli, a, &out),
        Command::Run(a) => cmd_run(cli, a, &out),
        Command::Bounds(a) => cmd_bounds(cli, a, &out),
        Command::Mc(a) => cmd_mc(cli, a, &out),
        Command::Equiv(a) => cmd_equiv(cli, a, &out),
        Command::Check(a) => cmd_check(cli, a, &out),
    }
}

struct Output<'a> {
    dir: &'a Path,
    format: Format,
}

impl Output<'_> {
    fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        atomic_write(&self.dir.join(name), bytes)
    }

    /// config.json: the full command line plus any resolved settings.
    fn echo(&self, cli: &Cli, resolved: Value) -> Result<()> {
        let echo = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "command": cli,
            "resolved": resolved,
        });
        self.write("config.json", &to_json_bytes(&echo))
    }

    fn print(&self, table: &str, value: &impl Serialize) {
        match self.format {
            Format::Table => print!("{table}"),
            Format::Json => print!("{}", String::from_utf8_lossy(&to_json_bytes(value))),
        }
    }
}

fn split_names(text: &str) -> Vec<&str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn parse_policy(system: &MixtureBayesSystem, text: &str) -> Result<DPolicy> {
    DPolicy::from_names(system.partition(), &split_names(text))
}

fn parse_state(system: &MixtureBayesSystem, text: Option<&str>) -> Result<PolicyState> {
    let p = system.partition();
    let mut state = PolicyState::empty();
    for name in text.map(split_names).unwrap_or_default() {
        let b = p
            .lookup(name)
            .ok_or_else(|| Error::validation("prior", format!("unknown behavior `{name}`")))?;
        state.add_behavior(b);
    }
    Ok(state)
}

fn load(path: &Path) -> Result<LoadedScenario> {
    load_scenario(path)
}

fn cmd_coherence(a: &CoherenceArgs, out: &Output) -> Result<i32> {
    let s = load(&a.scenario)?;
    let pi = parse_policy(&s.system, &a.policy)?;
    let prior = parse_state(&s.system, a.prior.as_deref())?;
    let chi = coherence(&s.system, &prior, &pi)?;
    let f_mp = mutual_predictability(&s.system, &pi)?;
    let pmi = match pmi(&s.system, &pi) {
        Ok(v) => Some(v),
        Err(Error::ZeroMarginal { .. }) => None,
        Err(e) => return Err(e),
    };
    let label = pi.label(s.system.partition());
    let table = format!(
        "policy  {label}\nchi     {}\nf_mp    {}\npmi     {}\n",
        chi,
        fmt_f64(f_mp),
        pmi.map_or("undefined".to_string(), fmt_f64)
    );
    let value = json!({
        "policy": label,
        "chi": chi,
        "f_mp": fmt_f64(f_mp),
        "pmi": pmi.map(fmt_f64),
    });
    out.print(&table, &value);
    Ok(0)
}

fn cmd_enumerate(cli: &Cli, a: &EnumerateArgs, out: &Output) -> Result<i32> {
    let s = load(&a.scenario)?;
    let dist = softmax_over_coherence(&s.system, a.beta, a.cap)?;
    let p = s.system.partition();
    let bytes = dist.to_csv_bytes(p);
    out.echo(cli, json!({ "beta": a.beta, "policies": dist.space().size() }))?;
    out.write("distribution.csv", &bytes)?;
    let mut table = format!("beta = {}\n{:<32} {:>12} {:>12}\n", a.beta, "policy", "mass", "chi");
    for (i, m) in dist.ranked().into_iter().take(10) {
        let chi = dist.coherence().map_or(f64::NAN, |c| c[i]);
        table += &format!("{:<32} {:>12.6} {:>12.6}\n", dist.space().policy(i).label(p), m, chi);
    }
    let rows: Vec<Value> = dist
        .ranked()
        .into_iter()
        .map(|(i, m)| json!({ "policy": dist.space().policy(i).label(p), "mass": m }))
        .collect();
    out.print(&table, &rows);
    Ok(0)
}

fn sampler_config(a: &RunArgs) -> SamplerConfig {
    SamplerConfig {
        beta: a.beta,
        steps: a.steps,
        seed: a.seed,
        gamma: a.gamma,
        anchor_weight: a.anchor_weight,
        burn_in: a.burn_in,
        thin: a.thin,
    }
}

fn icm_config(a: &RunArgs) -> IcmConfig {
    IcmConfig {
        max_iters: a.max_iters,
        restarts: a.restarts,
        seed: a.seed,
    }
}

fn pipeline_method(m: RunMethod) -> Option<Method> {
    match m {
        RunMethod::Gibbs => Some(Method::Gibbs),
        RunMethod::TfGibbs => Some(Method::TfGibbs),
        RunMethod::Bootstrap => Some(Method::Bootstrap),
        RunMethod::Icm => Some(Method::Icm),
        RunMethod::SrmExhaustive => Some(Method::SrmExhaustive),
        RunMethod::Erm => Some(Method::Erm),
        RunMethod::CoherenceExhaustive => Some(Method::CoherenceExhaustive),
        RunMethod::Debate => None,
    }
}

/// TV between an empirical law and the exact X^β, or `None` past the cap.
fn tv_to_exact(system: &MixtureBayesSystem, beta: Beta, empirical: &crate::distribution::PolicyDistribution, cap: u64) -> Result<Option<f64>> {
    match softmax_over_coherence(system, beta, cap) {
        Ok(exact) => Ok(Some(tv_distance(empirical, &exact)?)),
        Err(Error::CapExceeded { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn record_summary(system: &MixtureBayesSystem, rec: &RunRecord, estimator: Estimator, cap: u64) -> Result<Value> {
    let p = system.partition();
    let (best, best_chi) = rec.best();
    let tv = match empirical_distribution(rec, estimator, cap) {
        Ok(emp) => tv_to_exact(system, rec.config.beta, &emp, cap)?,
        Err(Error::CapExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(json!({
        "method": rec.method,
        "rounds": rec.rounds(),
        "estimator": estimator,
        "final_policy": rec.last().label(p),
        "best_policy": best.label(p),
        "best_chi": fmt_f64(best_chi),
        "tv_to_exact": tv,
        "warnings": rec.warnings,
    }))
}

fn cmd_run(cli: &Cli, a: &RunArgs, out: &Output) -> Result<i32> {
    let s = load(&a.scenario)?;
    let system = &s.system;
    let p = system.partition();
    let config = sampler_config(a);
    config.validate()?;
    let initial = match &a.initial {
        Some(text) => parse_policy(system, text)?,
        None => DPolicy::new(p, vec![0; p.len()])?,
    };
    let pipeline = match pipeline_method(a.method) {
        Some(m @ (Method::SrmExhaustive | Method::Erm | Method::CoherenceExhaustive)) => Some(m),
        Some(m) if a.semi_supervised => Some(m),
        None if a.semi_supervised => {
            return Err(Error::validation("method", "debate has no semi-supervised pipeline"));
        }
        _ => None,
    };
    if let Some(method) = pipeline {
        let scenario = s.to_scenario()?;
        let pconfig = PipelineConfig {
            sampler: config,
            icm: icm_config(a),
            delta: a.delta,
            sign: a.sign.into(),
            cap: a.cap,
        };
        let report = run_semi_supervised(&scenario, method, &pconfig)?;
        out.echo(cli, json!({ "pipeline": pconfig }))?;
        out.write("report.json", &to_json_bytes(&report))?;
        let table = format!(
            "method    {}\npolicy    {}\naccuracy  {}\nchi       {}\nchi_post  {}\nf_mp      {}\n",
            method,
            report.policy.label(p),
            report.accuracy.map_or("n/a".to_string(), fmt_f64),
            report.chi,
            report.chi_posttrain,
            fmt_f64(report.f_mp)
        );
        out.print(&table, &report);
        return Ok(0);
    }

    let summary = match a.method {
        RunMethod::Gibbs | RunMethod::TfGibbs | RunMethod::Debate => {
            let rec = match a.method {
                RunMethod::Gibbs => gibbs_run(system, &initial, &config)?,
                RunMethod::TfGibbs => training_friendly_gibbs_run(system, &initial, &config)?,
                _ => debate_run(system, &config)?,
            };
            let mut trajectory = Vec::new();
            rec.write_csv(system, false, &mut trajectory)?;
            let mut summary = record_summary(system, &rec, a.estimator, a.cap)?;
            if a.method == RunMethod::Debate {
                let pairs = staggered_pairs(&rec);
                let staggered = match rec.policy_space(a.cap) {
                    Ok(space) => tv_to_exact(system, a.beta, &empirical_from_policies(space, &pairs)?, a.cap)?,
                    Err(Error::CapExceeded { .. }) => None,
                    Err(e) => return Err(e),
                };
                summary["staggered_tv_to_exact"] = json!(staggered);
            }
            out.write("trajectory.csv", &trajectory)?;
            summary
        }
        RunMethod::Bootstrap => {
            let order = match a.order.as_str() {
                "index" => ContextOrder::index_order(p),
                other => ContextOrder::parse(p, other)?,
            };
            let r = simple_bootstrap_run(system, &order, &config)?;
            let tv = match bootstrap_distribution(system, &order, a.beta, a.cap) {
                Ok(sb) => tv_to_exact(system, a.beta, &sb, a.cap)?,
                Err(Error::CapExceeded { .. }) => None,
                Err(e) => return Err(e),
            };
            json!({
                "method": "bootstrap",
                "policy": r.policy.label(p),
                "order": r.order.iter().map(|&c| p.context(c).name.clone()).collect::<Vec<_>>(),
                "step_probabilities": r.step_probabilities,
                "log2_probability": fmt_f64(r.log2_probability),
                "exact_tv_to_target": tv,
            })
        }
        RunMethod::Icm => {
            let r = icm_hill_climb(system, &initial, &icm_config(a))?;
            json!({
                "method": "icm",
                "policy": r.policy.label(p),
                "f_mp": fmt_f64(r.f_mp),
                "chi": coherence(system, &PolicyState::empty(), &r.policy)?,
                "moves": r.moves,
                "local_maximum": r.local_maximum,
            })
        }
        _ => unreachable!("pipeline methods handled above"),
    };
    out.echo(cli, json!({ "sampler": config, "icm": icm_config(a) }))?;
    out.write("report.json", &to_json_bytes(&summary))?;
    let mut table = String::new();
    if let Value::Object(map) = &summary {
        for (k, v) in map {
            table += &format!("{k:<22} {v}\n");
        }
    }
    out.print(&table, &summary);
    Ok(0)
}

fn bound_table(r: &BoundReport) -> String {
    let mut t = format!("# sign convention: {}\n", r.sign.map_or("n/a".to_string(), |s| s.to_string()));
    t += &format!("kind     {}\nvalue    {}\nvalid    {}\nvacuous  {}\nform     {}\n", r.kind, fmt_f64(r.value), r.valid, r.vacuous, r.form);
    if let Some(note) = &r.note {
        t += &format!("note     {note}\n");
    }
    t
}

fn cmd_bounds(cli: &Cli, a: &BoundsArgs, out: &Output) -> Result<i32> {
    let report: Value = match &a.bound {
        BoundCommand::Uniform {
            chi,
            scenario,
            policy,
            n,
            delta,
            sign,
        } => {
            let chi = match (chi, scenario, policy) {
                (Some(c), _, _) => *c,
                (None, Some(path), Some(pol)) => {
                    let s = load(path)?;
                    coherence(&s.system, &PolicyState::empty(), &parse_policy(&s.system, pol)?)?.bits
                }
                _ => return Err(Error::validation("chi", "give --chi or --scenario with --policy")),
            };
            let r = uniform_convergence_bound(chi, *n, *delta, (*sign).into())?;
            out.print(&bound_table(&r), &r);
            serde_json::to_value(&r).expect("serializable")
        }
        BoundCommand::Gap { scenario, policy, prior } => {
            let s = load(scenario)?;
            let pi = parse_policy(&s.system, policy)?;
            let prior_state = parse_state(&s.system, prior.as_deref())?;
            let g = optimality_gap(&s.system, &prior_state, &pi)?;
            let r = BoundReport {
                kind: "optimality-gap".into(),
                value: g,
                valid: true,
                vacuous: false,
                form: "exact".into(),
                sign: None,
                inputs: BTreeMap::from([
                    ("policy".into(), json!(pi.label(s.system.partition()))),
                    ("prior".into(), json!(prior_state.describe(s.system.partition()))),
                ]),
                note: None,
            };
            out.print(&bound_table(&r), &r);
            serde_json::to_value(&r).expect("serializable")
        }
        BoundCommand::Accuracy { gap, n, delta, sign } => {
            let r = accuracy_lower_bound(*gap, *n, *delta, (*sign).into())?;
            out.print(&bound_table(&r), &r);
            serde_json::to_value(&r).expect("serializable")
        }
        BoundCommand::Srm {
            scenario,
            train,
            n,
            delta,
            sign,
            cap,
        } => {
            let s = load(scenario)?;
            let p = s.system.partition();
            let mut samples: Vec<(ContextId, usize)> = Vec::new();
            for name in split_names(train) {
                let b = p
                    .lookup(name)
                    .ok_or_else(|| Error::validation("train", format!("unknown behavior `{name}`")))?;
                samples.push((p.context_of(b), p.local_index(b)));
            }
            let n = n.unwrap_or(samples.len().max(1) as u64);
            let sel = srm_select(&s.system, &PolicyState::empty(), None, &samples, n, *delta, (*sign).into(), *cap)?;
            let value = json!({
                "kind": "srm-selection",
                "sign": SignConvention::from(*sign),
                "policy": sel.policy.label(p),
                "objective": fmt_f64(sel.objective),
                "chi": fmt_f64(sel.chi),
                "regularizer": fmt_f64(sel.regularizer),
                "train_accuracy": sel.train_accuracy,
                "n": n,
                "delta": delta,
            });
            let table = format!(
                "# sign convention: {}\npolicy     {}\nobjective  {}\nchi        {}\n",
                SignConvention::from(*sign),
                sel.policy.label(p),
                fmt_f64(sel.objective),
                fmt_f64(sel.chi)
            );
            out.print(&table, &value);
            value
        }
        BoundCommand::Regularization {
            alpha,
            entropy,
            kl,
            n,
            delta,
        } => {
            let r = regularization_bound_rhs(*alpha, *entropy, *kl, *n, *delta)?;
            out.print(&bound_table(&r), &r);
            serde_json::to_value(&r).expect("serializable")
        }
        BoundCommand::Posttrain {
            pretrain_coherence,
            posttrain_coherence,
            pretrain_agreement,
            count,
        } => {
            let r = conjectured_posttrain_count(*pretrain_coherence, *posttrain_coherence, *pretrain_agreement, *count)?;
            out.print(&bound_table(&r), &r);
            serde_json::to_value(&r).expect("serializable")
        }
    };
    out.echo(cli, Value::Null)?;
    out.write("bounds.json", &to_json_bytes(&report))?;
    Ok(0)
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::validation(path.display().to_string(), e.message().to_string()))
}

fn cmd_mc(cli: &Cli, a: &McArgs, out: &Output) -> Result<i32> {
    let config = match &a.config {
        Some(path) => read_toml(path)?,
        None => MonteCarloConfig {
            trials: a.trials,
            base_seed: a.base_seed,
            n: a.n,
            delta: a.delta,
            sign: a.sign.into(),
            family: ScenarioSpec::new(a.contexts, a.behaviors, a.latents, 0),
            threads: a.threads,
        },
    };
    let (rows, summary) = run_monte_carlo(&config)?;
    // thread count never changes results, so it is left out of the echo
    let mut resolved = serde_json::to_value(&config).expect("serializable");
    resolved.as_object_mut().map(|m| m.remove("threads"));
    out.echo(cli, resolved)?;
    out.write("trials.csv", &trials_csv(&rows))?;
    let mut summary_value = serde_json::to_value(&summary).expect("serializable");
    summary_value["config"].as_object_mut().map(|m| m.remove("threads"));
    out.write("summary.json", &to_json_bytes(&summary_value))?;
    let table = format!(
        "# sign convention: {}\ntrials      {}\nholds_rate  {:.4}\nprop2_rate  {:.4}\n",
        config.sign, summary.trials, summary.holds_rate, summary.prop2_rate
    );
    out.print(&table, &summary_value);
    Ok(0)
}

fn cmd_equiv(cli: &Cli, a: &EquivArgs, out: &Output) -> Result<i32> {
    let config = match &a.config {
        Some(path) => read_toml(path)?,
        None => {
            let lattice = match &a.lattice {
                Some(text) => split_names(text)
                    .into_iter()
                    .map(|v| v.parse::<usize>().map_err(|e| Error::validation("lattice", format!("`{v}`: {e}"))))
                    .collect::<Result<Vec<_>>>()?,
                None => (0..=a.contexts).collect(),
            };
            EquivalenceConfig {
                family: ScenarioSpec::new(a.contexts, a.behaviors, a.latents, 0),
                lattice,
                seeds: (0..a.seeds).collect(),
                coherence_method: a.method,
                pipeline: PipelineConfig {
                    delta: a.delta,
                    ..Default::default()
                },
            }
        }
    };
    PolicySpace::from_shape(&vec![config.family.behaviors; config.family.contexts], config.pipeline.cap)?;
    let study = equivalence_study(&config)?;
    out.echo(cli, serde_json::to_value(&config).expect("serializable"))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Config(format!("csv write failed: {e}"));
    w.write_record(["unsupervised", "seed", "coherence_accuracy", "srm_accuracy", "gap"]).map_err(csv_err)?;
    for r in &study.rows {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        w.write_record([
            r.unsupervised.to_string(),
            r.seed.to_string(),
            opt(r.coherence_accuracy),
            opt(r.srm_accuracy),
            fmt_f64(r.gap),
        ])
        .map_err(csv_err)?;
    }
    let rows_csv = w.into_inner().map_err(|e| Error::Config(format!("csv flush failed: {e}")))?;
    out.write("equivalence.csv", &rows_csv)?;
    out.write("summary.json", &to_json_bytes(&json!({ "points": study.points, "argmin": study.argmin })))?;
    let mut table = format!("{:>12} {:>10} {:>12} {:>14}\n", "unsupervised", "mean_gap", "mean_abs_gap", "conjectured");
    for pt in &study.points {
        let rec = pt.recommendation.as_ref().map_or("n/a".to_string(), |r| format!("{:.2}", r.value));
        table += &format!("{:>12} {:>10.4} {:>12.4} {:>14}\n", pt.unsupervised, pt.mean_gap, pt.mean_abs_gap, rec);
    }
    table += &format!("argmin |gap| at |S_a| = {}\n", study.argmin);
    out.print(&table, &study);
    Ok(0)
}

fn cmd_check(cli: &Cli, a: &CheckArgs, out: &Output) -> Result<i32> {
    let results = sweep_all(a.cases, a.seed)?;
    out.echo(cli, Value::Null)?;
    out.write("checks.json", &to_json_bytes(&results))?;
    let mut table = String::new();
    for r in &results {
        table += &format!(
            "{:<18} {:>4}/{:<4} max residual {:.3e}  {}\n",
            r.identity.name(),
            r.passed,
            r.cases,
            r.max_residual,
            if r.ok() { "PASS" } else { "FAIL" }
        );
    }
    out.print(&table, &results);
    Ok(if results.iter().all(|r| r.ok()) { 0 } else { 1 })
}
