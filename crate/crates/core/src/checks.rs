//! Randomized sweeps of the exact identities every learning system must satisfy.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coherence::{check_change_of_prior, check_prior_encodes_samples, coherence, coherence_in_order, Residual};
use crate::error::Result;
use crate::experiments::scenario::{random_mixture, ScenarioSpec};
use crate::partition::{BehaviorId, ContextId, DPolicy, PolicyState};
use crate::samplers::seeded_rng;
use crate::system::{check_chain_rule, LearningSystem, MixtureBayesSystem};

pub const IDENTITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    ChainRule,
    OrderInvariance,
    ChangeOfPrior,
    Decomposition,
}

impl Identity {
    pub const ALL: [Identity; 4] = [
        Identity::ChainRule,
        Identity::OrderInvariance,
        Identity::ChangeOfPrior,
        Identity::Decomposition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Identity::ChainRule => "chain-rule",
            Identity::OrderInvariance => "order-invariance",
            Identity::ChangeOfPrior => "change-of-prior",
            Identity::Decomposition => "decomposition",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub identity: Identity,
    pub cases: usize,
    /// Cases with a determinate residual within tolerance.
    pub passed: usize,
    pub max_residual: f64,
    pub tolerance: f64,
}

impl SweepResult {
    pub fn ok(&self) -> bool {
        self.passed == self.cases
    }
}

/// Small positive random system: 2–4 contexts, 2–3 behaviors, 1–3 latents.
fn random_system(rng: &mut ChaCha8Rng) -> Result<MixtureBayesSystem> {
    let spec = ScenarioSpec::new(rng.random_range(2..=4), rng.random_range(2..=3), rng.random_range(1..=3), 0);
    random_mixture(rng, &spec)
}

fn random_behavior(rng: &mut ChaCha8Rng, system: &MixtureBayesSystem) -> BehaviorId {
    BehaviorId(rng.random_range(0..system.partition().num_behaviors()))
}

fn random_policy(rng: &mut ChaCha8Rng, system: &MixtureBayesSystem) -> Result<DPolicy> {
    let p = system.partition();
    DPolicy::new(p, p.context_ids().map(|c| rng.random_range(0..p.context_size(c))).collect())
}

fn random_state(rng: &mut ChaCha8Rng, system: &MixtureBayesSystem, max_len: usize) -> PolicyState {
    let n = rng.random_range(0..=max_len);
    PolicyState::from_behaviors((0..n).map(|_| random_behavior(rng, system)))
}

fn one_case(identity: Identity, rng: &mut ChaCha8Rng) -> Result<Residual> {
    let system = random_system(rng)?;
    let p = system.partition();
    match identity {
        Identity::ChainRule => {
            let state = random_state(rng, &system, 3);
            let mut contexts: Vec<ContextId> = p.context_ids().collect();
            contexts.shuffle(rng);
            let pick = |c: ContextId, rng: &mut ChaCha8Rng| p.behavior(c, rng.random_range(0..p.context_size(c)));
            let a1 = pick(contexts[0], rng);
            let a2 = pick(contexts[1], rng);
            Ok(Residual::Value(check_chain_rule(&system, &state, a1, a2)?))
        }
        Identity::OrderInvariance => {
            let prior = random_state(rng, &system, 2);
            let pi = random_policy(rng, &system)?;
            let mut order: Vec<ContextId> = p.context_ids().collect();
            order.shuffle(rng);
            let a = coherence(&system, &prior, &pi)?.bits;
            let b = coherence_in_order(&system, &prior, &pi, &order)?.bits;
            Ok(Residual::between(a, b))
        }
        Identity::ChangeOfPrior => {
            let rho = random_state(rng, &system, 2);
            let phi: Vec<BehaviorId> = (0..rng.random_range(0..=3)).map(|_| random_behavior(rng, &system)).collect();
            let psi: Vec<BehaviorId> = (0..rng.random_range(1..=3)).map(|_| random_behavior(rng, &system)).collect();
            check_change_of_prior(&system, &rho, &phi, &psi)
        }
        Identity::Decomposition => {
            let pi = random_policy(rng, &system)?;
            let mut contexts: Vec<ContextId> = p.context_ids().collect();
            contexts.shuffle(rng);
            let k = rng.random_range(1..=contexts.len());
            let mut subset = contexts[..k].to_vec();
            subset.sort();
            let (r1, r2) = check_prior_encodes_samples(&system, &pi, &subset)?;
            Ok(match (r1, r2) {
                (Residual::Value(a), Residual::Value(b)) => Residual::Value(a.max(b)),
                _ => Residual::Indeterminate,
            })
        }
    }
}

/// `cases` randomized instances of one identity; deterministic per `seed`.
pub fn sweep(identity: Identity, cases: usize, seed: u64) -> Result<SweepResult> {
    let mut rng = seeded_rng(seed);
    rng.set_stream(identity as u64 + 10);
    let mut passed = 0;
    let mut max_residual: f64 = 0.0;
    for _ in 0..cases {
        let r = one_case(identity, &mut rng)?;
        match r.value() {
            Some(v) => max_residual = max_residual.max(v),
            None => max_residual = f64::INFINITY,
        }
        passed += usize::from(r.within(IDENTITY_TOLERANCE));
    }
    Ok(SweepResult {
        identity,
        cases,
        passed,
        max_residual,
        tolerance: IDENTITY_TOLERANCE,
    })
}

pub fn sweep_all(cases: usize, seed: u64) -> Result<Vec<SweepResult>> {
    Identity::ALL.into_iter().map(|i| sweep(i, cases, seed)).collect()
}
