//! Seeded random mixture systems with a sampled ground truth and a
//! supervised / unsupervised context split.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{ContextId, ContextPartition, DPolicy, PolicyState};
use crate::samplers::seeded_rng;
use crate::system::{LearningSystem, MixtureBayesSystem};

/// Generation parameters of a scenario family; one seed gives one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSpec {
    /// |S|
    pub contexts: usize,
    /// |s|, shared by every context.
    pub behaviors: usize,
    /// |Θ|
    pub latents: usize,
    /// Symmetric Dirichlet concentration of each emission row; `inf` gives uniform rows.
    #[serde(with = "crate::util::float")]
    pub concentration: f64,
    /// Symmetric Dirichlet concentration of the latent weights.
    #[serde(with = "crate::util::float")]
    pub weight_concentration: f64,
    /// Fraction of contexts that are supervised (S_b), rounded to the nearest count.
    pub supervised_fraction: f64,
    /// Explicit |S_a|; overrides `supervised_fraction`.
    pub unsupervised: Option<usize>,
    /// Probability that π*(s) is independently redrawn uniformly, misspecifying D against X^1.
    pub mismatch: f64,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            contexts: 4,
            behaviors: 3,
            latents: 2,
            concentration: 1.0,
            weight_concentration: 1.0,
            supervised_fraction: 0.5,
            unsupervised: None,
            mismatch: 0.0,
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn new(contexts: usize, behaviors: usize, latents: usize, seed: u64) -> Self {
        ScenarioSpec {
            contexts,
            behaviors,
            latents,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.contexts == 0 {
            return Err(Error::validation("contexts", "must be at least 1"));
        }
        if self.behaviors < 2 {
            return Err(Error::validation("behaviors", "must be at least 2"));
        }
        if self.latents == 0 {
            return Err(Error::validation("latents", "must be at least 1"));
        }
        for (name, v) in [("concentration", self.concentration), ("weight_concentration", self.weight_concentration)] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::validation(name, format!("must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.supervised_fraction) {
            return Err(Error::validation("supervised_fraction", "must lie in [0, 1]"));
        }
        if let Some(k) = self.unsupervised {
            if k > self.contexts {
                return Err(Error::validation("unsupervised", format!("{k} exceeds the {} contexts", self.contexts)));
            }
        }
        if !(0.0..=1.0).contains(&self.mismatch) {
            return Err(Error::validation("mismatch", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// |S_a| implied by these settings.
    pub fn unsupervised_count(&self) -> usize {
        self.unsupervised.unwrap_or_else(|| {
            let sup = (self.supervised_fraction * self.contexts as f64).round() as usize;
            self.contexts - sup.min(self.contexts)
        })
    }
}

/// A generated system, its ground truth π* and the split S = S_a ⊔ S_b.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub system: MixtureBayesSystem,
    pub ground_truth: DPolicy,
    /// S_b, sorted; labels are π* on these contexts.
    pub supervised: Vec<ContextId>,
    /// S_a, sorted.
    pub unsupervised: Vec<ContextId>,
}

impl Scenario {
    /// Σ_{s ∈ S_b} π*(s), the supervised prior state.
    pub fn supervised_state(&self) -> PolicyState {
        self.ground_truth.state_over(self.system.partition(), &self.supervised)
    }

    /// (context, label) pairs of S_b.
    pub fn labels(&self) -> Vec<(ContextId, usize)> {
        self.supervised.iter().map(|&c| (c, self.ground_truth.get(c))).collect()
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        crate::util::to_json_bytes(self)
    }
}

/// Symmetric Dirichlet draw via normalized Gamma variates.
pub(crate) fn dirichlet(rng: &mut ChaCha8Rng, k: usize, alpha: f64) -> Result<Vec<f64>> {
    if alpha == f64::INFINITY {
        return Ok(vec![1.0 / k as f64; k]);
    }
    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::validation("concentration", e.to_string()))?;
    let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Ok(vec![1.0 / k as f64; k]);
    }
    Ok(draws.into_iter().map(|x| x / total).collect())
}

/// Random mixture system of the given sizes with Dirichlet weights and emission rows.
pub fn random_mixture(rng: &mut ChaCha8Rng, spec: &ScenarioSpec) -> Result<MixtureBayesSystem> {
    let partition = ContextPartition::with_sizes(&vec![spec.behaviors; spec.contexts])?;
    let weights = dirichlet(rng, spec.latents, spec.weight_concentration)?;
    let mut emissions = Vec::with_capacity(spec.latents);
    for _ in 0..spec.latents {
        let mut rows = Vec::with_capacity(spec.contexts);
        for _ in 0..spec.contexts {
            rows.push(dirichlet(rng, spec.behaviors, spec.concentration)?);
        }
        emissions.push(rows);
    }
    MixtureBayesSystem::new(partition, weights, emissions)
}

/// Mixture whose contexts are exchangeable: each latent emits from one row
/// shared by every context. Rows and weights depend only on the rng, so the
/// same seed gives the same rows at every |S|.
pub fn exchangeable_mixture(
    rng: &mut ChaCha8Rng,
    contexts: usize,
    behaviors: usize,
    latents: usize,
    concentration: f64,
) -> Result<MixtureBayesSystem> {
    let partition = ContextPartition::with_sizes(&vec![behaviors; contexts])?;
    let weights = dirichlet(rng, latents, 1.0)?;
    let rows = (0..latents)
        .map(|_| dirichlet(rng, behaviors, concentration))
        .collect::<Result<Vec<_>>>()?;
    let emissions = rows.into_iter().map(|row| vec![row; contexts]).collect();
    MixtureBayesSystem::new(partition, weights, emissions)
}

/// Exact draw from X^1 = P(π) by ancestral sampling: θ, then each context from row θ.
pub fn sample_ground_truth(rng: &mut ChaCha8Rng, system: &MixtureBayesSystem) -> Result<DPolicy> {
    let theta = crate::samplers::sample_index(rng, system.latent_weights())?;
    let p = system.partition();
    let assignment = p
        .context_ids()
        .map(|c| crate::samplers::sample_index(rng, &system.emissions()[theta][c.0]))
        .collect::<Result<Vec<_>>>()?;
    DPolicy::new(p, assignment)
}

/// Deterministic scenario per `spec.seed`.
///
/// The system and π* do not depend on the split, so a family that varies only
/// |S_a| shares one system and one ground truth per seed.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed);
    let system = random_mixture(&mut rng, spec)?;
    let mut truth = sample_ground_truth(&mut rng, &system)?;
    let mut noise = seeded_rng(spec.seed);
    noise.set_stream(1);
    if spec.mismatch > 0.0 {
        for c in system.partition().context_ids() {
            if noise.random::<f64>() < spec.mismatch {
                truth.set(c, noise.random_range(0..spec.behaviors));
            }
        }
    }
    let mut split = seeded_rng(spec.seed);
    split.set_stream(2);
    let mut order: Vec<ContextId> = system.partition().context_ids().collect();
    order.shuffle(&mut split);
    let k = spec.unsupervised_count();
    let mut unsupervised = order[..k].to_vec();
    let mut supervised = order[k..].to_vec();
    unsupervised.sort();
    supervised.sort();
    Ok(Scenario {
        spec: spec.clone(),
        system,
        ground_truth: truth,
        supervised,
        unsupervised,
    })
}
