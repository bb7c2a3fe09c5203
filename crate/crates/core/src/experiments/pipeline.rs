//! Semi-supervised pipelines: condition on the supervised labels, then pick
//! behaviors for the unsupervised contexts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::bounds::{
    gap_from_coherence, srm_select, uniform_convergence_bound, BoundReport, SignConvention,
};
use crate::analysis::diagnostics::agreement;
use crate::coherence::{check_prior_encodes_samples, coherence, CoherenceValue};
use crate::error::{Error, Result};
use crate::experiments::scenario::Scenario;
use crate::partition::{ContextId, DPolicy, PolicySpace, PolicyState, DEFAULT_ENUMERATION_CAP};
use crate::quotient::QuotientSystem;
use crate::samplers::{
    gibbs_run, icm_hill_climb, mutual_predictability, simple_bootstrap_run, training_friendly_gibbs_run, ContextOrder,
    IcmConfig, SamplerConfig,
};
use crate::system::{LearningSystem, ARGMAX_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Gibbs on the quotient system; returns the most coherent visited policy.
    Gibbs,
    /// Training-friendly Gibbs on the quotient system; most coherent visited policy.
    TfGibbs,
    /// One simple-bootstrap draw in index order.
    Bootstrap,
    /// ICM hill climbing on f_MP from the greedy start.
    Icm,
    /// Structural risk minimization over every d-policy, trained on the supervised labels.
    SrmExhaustive,
    /// Per-context argmax of σ(supervised prior, s): the greedy baseline.
    Erm,
    /// Exact argmax of the quotient coherence by enumeration.
    CoherenceExhaustive,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Gibbs,
        Method::TfGibbs,
        Method::Bootstrap,
        Method::Icm,
        Method::SrmExhaustive,
        Method::Erm,
        Method::CoherenceExhaustive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gibbs => "gibbs",
            Method::TfGibbs => "tf-gibbs",
            Method::Bootstrap => "bootstrap",
            Method::Icm => "icm",
            Method::SrmExhaustive => "srm-exhaustive",
            Method::Erm => "erm",
            Method::CoherenceExhaustive => "coherence-exhaustive",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
            Error::validation("method", format!("unknown method `{s}`, expected one of {}", names.join(", ")))
        })
    }
}

/// Per-method knobs of a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub sampler: SamplerConfig,
    pub icm: IcmConfig,
    pub delta: f64,
    pub sign: SignConvention,
    pub cap: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sampler: SamplerConfig::default(),
            icm: IcmConfig::default(),
            delta: 0.1,
            sign: SignConvention::Corrected,
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// Outcome of one pipeline run on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub method: Method,
    pub seed: u64,
    /// Returned d-policy over all of S (S_b holds the labels).
    pub policy: DPolicy,
    /// Agreement with π* on S_a; absent when S_a is empty.
    #[serde(with = "crate::util::float::option")]
    pub accuracy: Option<f64>,
    /// χ(π̂) from the empty state.
    pub chi: CoherenceValue,
    /// χ^a(π̂(S_a)), anchored at the supervised labels.
    pub chi_posttrain: CoherenceValue,
    /// 𝜒̂_0[π̂(S_b)].
    pub chi_pretrain: CoherenceValue,
    /// f_MP(π̂) in the full system.
    #[serde(with = "crate::util::float")]
    pub f_mp: f64,
    /// G(Σ labels; π*(S_a)) = −2χ^a(π*(S_a)) + log2 e.
    #[serde(with = "crate::util::float")]
    pub optimality_gap: f64,
    /// Uniform-convergence bound at χ(π̂) with N = |S_b|; absent when S_b is empty.
    pub uniform_bound: Option<BoundReport>,
    /// Largest residual of the two prior-encodes-samples identities.
    #[serde(with = "crate::util::float::option")]
    pub decomposition_residual: Option<f64>,
}

/// Runs `method` on `scenario`. The sampler seed is `config.sampler.seed`.
pub fn run_semi_supervised(scenario: &Scenario, method: Method, config: &PipelineConfig) -> Result<PipelineReport> {
    let system = &scenario.system;
    let truth = &scenario.ground_truth;
    let s_a = &scenario.unsupervised;
    let base = scenario.supervised_state();

    let policy = if s_a.is_empty() {
        truth.clone()
    } else {
        match method {
            Method::SrmExhaustive => {
                let n = scenario.supervised.len().max(1) as u64;
                let sel = srm_select(
                    system,
                    &PolicyState::empty(),
                    None,
                    &scenario.labels(),
                    n,
                    config.delta,
                    config.sign,
                    config.cap,
                )?;
                sel.policy
            }
            _ => {
                let q = QuotientSystem::new(system, s_a, base.clone())?;
                let partial = run_on_quotient(&q, method, config)?;
                q.embed(&partial, truth)
            }
        }
    };
    report(scenario, method, config, policy)
}

fn run_on_quotient<S: LearningSystem + ?Sized>(
    q: &QuotientSystem<'_, S>,
    method: Method,
    config: &PipelineConfig,
) -> Result<DPolicy> {
    let greedy = greedy_policy(q)?;
    Ok(match method {
        Method::Erm => greedy,
        Method::Gibbs => gibbs_run(q, &greedy, &config.sampler)?.best().0.clone(),
        Method::TfGibbs => training_friendly_gibbs_run(q, &greedy, &config.sampler)?.best().0.clone(),
        Method::Bootstrap => simple_bootstrap_run(q, &ContextOrder::index_order(q.partition()), &config.sampler)?.policy,
        Method::Icm => icm_hill_climb(q, &greedy, &config.icm)?.policy,
        Method::CoherenceExhaustive => coherence_argmax(q, config.cap)?,
        Method::SrmExhaustive => unreachable!("handled on the full system"),
    })
}

/// Per-context argmax of σ(0, s), ties to the lowest behavior index.
pub fn greedy_policy<S: LearningSystem + ?Sized>(system: &S) -> Result<DPolicy> {
    let p = system.partition();
    let empty = PolicyState::empty();
    let assignment = p
        .context_ids()
        .map(|c| {
            let row = system.infer(&empty, c)?;
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(row.iter().position(|&x| x >= max - ARGMAX_TOLERANCE).expect("non-empty row"))
        })
        .collect::<Result<Vec<_>>>()?;
    DPolicy::new(p, assignment)
}

/// First maximizer of χ in policy-index order.
pub fn coherence_argmax<S: LearningSystem + ?Sized>(system: &S, cap: u64) -> Result<DPolicy> {
    let space = PolicySpace::new(system.partition(), cap)?;
    let empty = PolicyState::empty();
    let mut best: Option<(DPolicy, f64)> = None;
    for pi in space.iter() {
        let chi = coherence(system, &empty, &pi)?.bits;
        if best.as_ref().is_none_or(|(_, b)| chi > *b) {
            best = Some((pi, chi));
        }
    }
    match best {
        Some((pi, chi)) if chi > f64::NEG_INFINITY => Ok(pi),
        _ => Err(Error::EmptySupport),
    }
}

fn report(scenario: &Scenario, method: Method, config: &PipelineConfig, policy: DPolicy) -> Result<PipelineReport> {
    let system = &scenario.system;
    let p = system.partition();
    let s_a = &scenario.unsupervised;
    let s_b = &scenario.supervised;
    let empty = PolicyState::empty();
    let base = scenario.supervised_state();

    let accuracy = if s_a.is_empty() {
        None
    } else {
        Some(agreement(&policy, &scenario.ground_truth, s_a)?.agreement)
    };
    let chi = coherence(system, &empty, &policy)?;
    let seq = |prior: &PolicyState, contexts: &[ContextId], pi: &DPolicy| {
        crate::coherence::sequence_coherence(system, prior, &pi.behaviors_over(p, contexts))
    };
    let chi_posttrain = seq(&base, s_a, &policy)?;
    let chi_pretrain = seq(&empty, s_b, &policy)?;
    let truth_post = seq(&base, s_a, &scenario.ground_truth)?;
    let uniform_bound = if s_b.is_empty() {
        None
    } else {
        Some(uniform_convergence_bound(chi.bits, s_b.len() as u64, config.delta, config.sign)?)
    };
    let decomposition_residual = if s_a.is_empty() {
        None
    } else {
        let (r1, r2) = check_prior_encodes_samples(system, &policy, s_a)?;
        match (r1.value(), r2.value()) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        }
    };
    Ok(PipelineReport {
        method,
        seed: scenario.spec.seed,
        f_mp: mutual_predictability(system, &policy)?,
        policy,
        accuracy,
        chi,
        chi_posttrain,
        chi_pretrain,
        optimality_gap: gap_from_coherence(truth_post.bits),
        uniform_bound,
        decomposition_residual,
    })
}
