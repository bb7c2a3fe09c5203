//! Coherence-optimizing samplers over d-policies.
//!
//! Every sampler draws from a [`ChaCha8Rng`] seeded with `config.seed`, so a
//! fixed configuration reproduces its trajectory exactly.

pub mod bootstrap;
pub mod debate;
pub mod gibbs;
pub mod icm;
pub mod record;
pub mod training_friendly;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::partition::{ContextId, PolicyState, DEFAULT_ENUMERATION_CAP};
use crate::system::{check_ergodicity, Beta, LearningSystem};

pub use bootstrap::{bootstrap_distribution, simple_bootstrap_run, BootstrapResult, ContextOrder};
pub use debate::{debate_run, debate_run_from, staggered_pairs};
pub use gibbs::{gibbs_run, gibbs_transition_probability};
pub use icm::{icm_hill_climb, mutual_predictability, IcmConfig, IcmResult};
pub use record::{RunRecord, SamplerConfig};
pub use training_friendly::training_friendly_gibbs_run;

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws an index from a normalized row.
pub(crate) fn sample_index(rng: &mut ChaCha8Rng, row: &[f64]) -> Result<usize> {
    let dist = WeightedIndex::new(row).map_err(|e| Error::Config(format!("invalid sampling weights {row:?}: {e}")))?;
    Ok(dist.sample(rng))
}

/// σ^β(φ, s), mapping degenerate conditioning to an error tagged with `step`.
pub(crate) fn conditional<S: LearningSystem + ?Sized>(
    system: &S,
    state: &PolicyState,
    context: ContextId,
    beta: Beta,
    step: usize,
) -> Result<Vec<f64>> {
    system.tempered_infer(state, context, beta).map_err(|e| {
        if e.is_degenerate() {
            Error::DegenerateAtStep {
                step,
                state: state.describe(system.partition()),
            }
        } else {
            e
        }
    })
}

/// Warnings about the positivity check, which Gibbs-type samplers report but do not enforce.
pub(crate) fn ergodicity_warnings<S: LearningSystem + ?Sized>(system: &S, beta: Beta) -> Vec<String> {
    if beta == Beta::Infinite {
        return Vec::new();
    }
    match check_ergodicity(system, DEFAULT_ENUMERATION_CAP) {
        Ok(r) if r.positive => Vec::new(),
        Ok(r) => vec![r.summary(system.partition())],
        Err(e) => vec![format!("positivity check skipped: {e}")],
    }
}
