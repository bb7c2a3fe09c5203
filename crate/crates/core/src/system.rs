//! Learning systems and the exact finite-mixture Bayesian implementation.
//!
//! A learning system supplies the inference function σ(φ, s): given a policy
//! state φ and a context s it returns a distribution over the behaviors of s.
//! [`MixtureBayesSystem`] realizes σ as the posterior predictive of a finite
//! latent mixture with categorical emissions, which satisfies the chain rule
//! exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{BehaviorId, Context, ContextId, ContextPartition, DPolicy, PolicySpace, PolicyState};

/// Tolerance on latent weights and emission rows summing to one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;
/// Tolerance on a joint table summing to one.
pub const JOINT_SUM_TOLERANCE: f64 = 1e-9;
/// Masses within this distance of the maximum count as ties at β = +∞.
pub const ARGMAX_TOLERANCE: f64 = 1e-12;

/// Anything that maps a policy state and a context to a behavior distribution.
pub trait LearningSystem {
    fn partition(&self) -> &ContextPartition;

    /// σ(φ, s): a normalized distribution over the local behaviors of `context`.
    fn infer(&self, state: &PolicyState, context: ContextId) -> Result<Vec<f64>>;

    /// σ^β(φ, s).
    fn tempered_infer(&self, state: &PolicyState, context: ContextId, beta: Beta) -> Result<Vec<f64>> {
        let p = self.infer(state, context)?;
        temper(&p, beta).map_err(|_| Error::DegenerateConditioning {
            state: state.describe(self.partition()),
        })
    }
}

impl<S: LearningSystem + ?Sized> LearningSystem for &S {
    fn partition(&self) -> &ContextPartition {
        (**self).partition()
    }

    fn infer(&self, state: &PolicyState, context: ContextId) -> Result<Vec<f64>> {
        (**self).infer(state, context)
    }
}

/// Inverse temperature β ∈ (0, +∞].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub const ONE: Beta = Beta::Finite(1.0);

    pub fn new(beta: f64) -> Result<Self> {
        if beta == f64::INFINITY {
            Ok(Beta::Infinite)
        } else if beta.is_finite() && beta > 0.0 {
            Ok(Beta::Finite(beta))
        } else {
            Err(Error::validation("beta", format!("beta must be positive, got {beta}")))
        }
    }

    pub fn is_one(self) -> bool {
        self == Beta::ONE
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Beta::Finite(b) => b,
            Beta::Infinite => f64::INFINITY,
        }
    }
}

impl Default for Beta {
    fn default() -> Self {
        Beta::ONE
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::Finite(b) => write!(f, "{b}"),
            Beta::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Beta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(Beta::Infinite),
            other => {
                let b: f64 = other
                    .parse()
                    .map_err(|_| Error::validation("beta", format!("cannot parse `{s}` as a number or `inf`")))?;
                Beta::new(b)
            }
        }
    }
}

impl Serialize for Beta {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Beta::Finite(b) => serializer.serialize_f64(*b),
            Beta::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        let parsed = match Repr::deserialize(deserializer)? {
            Repr::Num(b) => Beta::new(b),
            Repr::Str(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Applies p ↦ p^β and renormalizes.
///
/// Computed as exp(β(ln p − ln p_max)) so large β does not underflow the
/// maximum. At β = +∞ the result is uniform over entries within
/// [`ARGMAX_TOLERANCE`] of the maximum.
pub fn temper(p: &[f64], beta: Beta) -> Result<Vec<f64>> {
    let max = p.iter().copied().fold(0.0f64, f64::max);
    if max <= 0.0 || max.is_nan() {
        return Err(Error::DegenerateConditioning {
            state: format!("row {p:?}"),
        });
    }
    let raw: Vec<f64> = match beta {
        Beta::Finite(1.0) => return Ok(p.to_vec()),
        Beta::Finite(b) => {
            let ln_max = max.ln();
            p.iter()
                .map(|&x| if x > 0.0 { (b * (x.ln() - ln_max)).exp() } else { 0.0 })
                .collect()
        }
        Beta::Infinite => p
            .iter()
            .map(|&x| if x >= max - ARGMAX_TOLERANCE { 1.0 } else { 0.0 })
            .collect(),
    };
    let z: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|x| x / z).collect())
}

/// log Σ exp(x_i); −∞ when every term is −∞.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Plain-data form of a mixture system, used for (de)serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub contexts: Vec<Context>,
    pub latent_weights: Vec<f64>,
    /// `emissions[θ][s]` is a distribution over the behaviors of context `s`.
    pub emissions: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub smoothing: f64,
}

/// Finite latent mixture: σ(φ,s)(a) = Σ_θ Pr[a|θ]·Pr[θ|φ].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MixtureSpec", into = "MixtureSpec")]
pub struct MixtureBayesSystem {
    partition: ContextPartition,
    latent_weights: Vec<f64>,
    emissions: Vec<Vec<Vec<f64>>>,
    smoothing: f64,
    ln_weights: Vec<f64>,
    // ln Pr[b|θ] indexed by [θ][global behavior index]
    ln_emissions: Vec<Vec<f64>>,
    // Pr[b|θ] indexed by [θ][global behavior index]
    flat_emissions: Vec<Vec<f64>>,
}

impl PartialEq for MixtureBayesSystem {
    fn eq(&self, other: &Self) -> bool {
        self.partition == other.partition
            && self.latent_weights == other.latent_weights
            && self.emissions == other.emissions
            && self.smoothing == other.smoothing
    }
}

impl TryFrom<MixtureSpec> for MixtureBayesSystem {
    type Error = Error;

    fn try_from(spec: MixtureSpec) -> Result<Self> {
        let partition = ContextPartition::new(spec.contexts)?;
        let mut system = MixtureBayesSystem::new(partition, spec.latent_weights, spec.emissions)?;
        system.smoothing = spec.smoothing;
        Ok(system)
    }
}

impl From<MixtureBayesSystem> for MixtureSpec {
    fn from(s: MixtureBayesSystem) -> Self {
        MixtureSpec {
            contexts: s.partition.contexts().to_vec(),
            latent_weights: s.latent_weights,
            emissions: s.emissions,
            smoothing: s.smoothing,
        }
    }
}

fn check_distribution(path: &str, row: &[f64], tolerance: f64) -> Result<()> {
    for (i, &x) in row.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::validation(
                format!("{path}[{i}]"),
                format!("entries must be finite and non-negative, got {x}"),
            ));
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > tolerance {
        return Err(Error::validation(path, format!("must sum to 1 (got {sum})")));
    }
    Ok(())
}

impl MixtureBayesSystem {
    pub fn new(partition: ContextPartition, latent_weights: Vec<f64>, emissions: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if latent_weights.is_empty() {
            return Err(Error::validation("system.latent_weights", "at least one latent is required"));
        }
        check_distribution("system.latent_weights", &latent_weights, ROW_SUM_TOLERANCE)?;
        if emissions.len() != latent_weights.len() {
            return Err(Error::validation(
                "system.emissions",
                format!(
                    "expected one emission table per latent ({}), got {}",
                    latent_weights.len(),
                    emissions.len()
                ),
            ));
        }
        for (t, table) in emissions.iter().enumerate() {
            if table.len() != partition.len() {
                return Err(Error::validation(
                    format!("system.emissions[{t}]"),
                    format!("expected {} context rows, got {}", partition.len(), table.len()),
                ));
            }
            for (c, row) in table.iter().enumerate() {
                let path = format!("system.emissions[{t}][{c}]");
                let k = partition.context_size(ContextId(c));
                if row.len() != k {
                    return Err(Error::validation(
                        path,
                        format!("expected {k} entries for context `{}`, got {}", partition.context(ContextId(c)).name, row.len()),
                    ));
                }
                check_distribution(&path, row, ROW_SUM_TOLERANCE)?;
            }
        }
        let ln_weights = latent_weights.iter().map(|w| w.ln()).collect();
        let flat_emissions: Vec<Vec<f64>> = emissions
            .iter()
            .map(|table| table.iter().flatten().copied().collect())
            .collect();
        let ln_emissions = flat_emissions
            .iter()
            .map(|row| row.iter().map(|p| p.ln()).collect())
            .collect();
        Ok(MixtureBayesSystem {
            partition,
            latent_weights,
            emissions,
            smoothing: 0.0,
            ln_weights,
            ln_emissions,
            flat_emissions,
        })
    }

    /// Realizes a joint table over A^S as a mixture with one latent per d-policy.
    ///
    /// `joint` is indexed lexicographically with context 0 most significant
    /// (see [`PolicySpace`]). Each latent emits its own behavior with mass
    /// 1 − ε and spreads ε evenly over the rest of the context.
    pub fn from_joint_table(partition: ContextPartition, joint: &[f64], epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::validation("system.epsilon", format!("must lie in [0, 1), got {epsilon}")));
        }
        let space = PolicySpace::new(&partition, u64::MAX)?;
        if joint.len() != space.size() {
            return Err(Error::validation(
                "system.joint",
                format!("expected {} entries (one per d-policy), got {}", space.size(), joint.len()),
            ));
        }
        check_distribution("system.joint", joint, JOINT_SUM_TOLERANCE)?;
        let total: f64 = joint.iter().sum();
        let weights: Vec<f64> = joint.iter().map(|&p| p / total).collect();
        let emissions = space
            .iter()
            .map(|theta| {
                partition
                    .context_ids()
                    .map(|c| {
                        let k = partition.context_size(c);
                        let own = theta.get(c);
                        (0..k)
                            .map(|j| match (j == own, k) {
                                (_, 1) => 1.0,
                                (true, _) => 1.0 - epsilon,
                                (false, _) => epsilon / (k - 1) as f64,
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut system = MixtureBayesSystem::new(partition, weights, emissions)?;
        system.smoothing = epsilon;
        Ok(system)
    }

    pub fn latent_weights(&self) -> &[f64] {
        &self.latent_weights
    }

    pub fn emissions(&self) -> &[Vec<Vec<f64>>] {
        &self.emissions
    }

    pub fn num_latents(&self) -> usize {
        self.latent_weights.len()
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// Emission probability Pr[b|θ].
    pub fn emission(&self, theta: usize, b: BehaviorId) -> f64 {
        self.flat_emissions[theta][b.0]
    }

    /// Unnormalized log posterior ln Pr[θ] + Σ_b count(b)·ln Pr[b|θ].
    pub fn log_joint_latent(&self, state: &PolicyState) -> Result<Vec<f64>> {
        for (b, _) in state.iter() {
            self.partition.check_behavior(b)?;
        }
        Ok((0..self.num_latents())
            .map(|t| {
                let ln_e = &self.ln_emissions[t];
                state
                    .iter()
                    .fold(self.ln_weights[t], |acc, (b, n)| acc + n as f64 * ln_e[b.0])
            })
            .map(|x| if x.is_nan() { f64::NEG_INFINITY } else { x })
            .collect())
    }

    /// Pr[θ|φ]; errors when every latent has zero likelihood.
    pub fn posterior(&self, state: &PolicyState) -> Result<Vec<f64>> {
        let lp = self.log_joint_latent(state)?;
        let z = log_sum_exp(&lp);
        if z == f64::NEG_INFINITY {
            return Err(Error::DegenerateConditioning {
                state: state.describe(&self.partition),
            });
        }
        Ok(lp.iter().map(|&x| (x - z).exp()).collect())
    }

    /// ln of the prior predictive mass of `state` as an ordered sequence,
    /// ln Σ_θ Pr[θ] Π_b Pr[b|θ]^count(b).
    pub fn log_marginal(&self, state: &PolicyState) -> Result<f64> {
        Ok(log_sum_exp(&self.log_joint_latent(state)?))
    }

    /// Joint mass Σ_θ Pr[θ] Π_s Pr[π(s)|θ] of a d-policy.
    pub fn joint_probability(&self, policy: &DPolicy) -> Result<f64> {
        Ok(self.log_marginal(&policy.state(&self.partition))?.exp())
    }
}

impl LearningSystem for MixtureBayesSystem {
    fn partition(&self) -> &ContextPartition {
        &self.partition
    }

    fn infer(&self, state: &PolicyState, context: ContextId) -> Result<Vec<f64>> {
        self.partition.check_context(context)?;
        let post = self.posterior(state)?;
        let k = self.partition.context_size(context);
        let first = self.partition.behavior(context, 0).0;
        let mut out = vec![0.0; k];
        for (t, &w) in post.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let row = &self.flat_emissions[t][first..first + k];
            for (o, &e) in out.iter_mut().zip(row) {
                *o += w * e;
            }
        }
        let z: f64 = out.iter().sum();
        if z <= 0.0 {
            return Err(Error::DegenerateConditioning {
                state: state.describe(&self.partition),
            });
        }
        out.iter_mut().for_each(|x| *x /= z);
        Ok(out)
    }
}

/// The two-context burger/fries system with the ε-parameterized joint table.
///
/// Behaviors are `burger-{mayo,mustard,other}` and `fries-{mayo,ketchup,other}`;
/// no emission smoothing is applied.
pub fn sauces_system(epsilon: f64) -> Result<MixtureBayesSystem> {
    if !(0.0..=0.175).contains(&epsilon) {
        return Err(Error::validation("system.epsilon", format!("must lie in [0, 0.175], got {epsilon}")));
    }
    let partition = ContextPartition::new(vec![
        Context::new("burger", ["burger-mayo", "burger-mustard", "burger-other"]),
        Context::new("fries", ["fries-mayo", "fries-ketchup", "fries-other"]),
    ])?;
    let e = epsilon;
    let m = 0.175 - epsilon;
    // rows: burger behavior; columns: fries behavior
    let joint = [0.3, e, e, e, m, m, e, m, m];
    MixtureBayesSystem::from_joint_table(partition, &joint, 0.0)
}

/// |σ(φ,s1)(a1)·σ(φ+a1,s2)(a2) − σ(φ,s2)(a2)·σ(φ+a2,s1)(a1)|.
///
/// A side whose first factor is zero is taken to be zero without conditioning
/// on the impossible behavior.
pub fn check_chain_rule<S: LearningSystem + ?Sized>(
    system: &S,
    state: &PolicyState,
    a1: BehaviorId,
    a2: BehaviorId,
) -> Result<f64> {
    let p = system.partition();
    p.check_behavior(a1)?;
    p.check_behavior(a2)?;
    let (s1, s2) = (p.context_of(a1), p.context_of(a2));
    if s1 == s2 {
        return Err(Error::validation("chain_rule", "the two behaviors must lie in distinct contexts"));
    }
    let side = |first: BehaviorId, cf: ContextId, second: BehaviorId, cs: ContextId| -> Result<f64> {
        let p1 = system.infer(state, cf)?[p.local_index(first)];
        if p1 == 0.0 {
            return Ok(0.0);
        }
        let p2 = system.infer(&state.with(first), cs)?[p.local_index(second)];
        Ok(p1 * p2)
    };
    Ok((side(a1, s1, a2, s2)? - side(a2, s2, a1, s1)?).abs())
}

/// Outcome of the positivity test for ergodicity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicityReport {
    /// Every d-policy has strictly positive joint mass.
    pub positive: bool,
    /// A zero-mass d-policy when `positive` is false.
    pub witness: Option<DPolicy>,
    pub policies_checked: usize,
}

impl ErgodicityReport {
    pub fn summary(&self, partition: &ContextPartition) -> String {
        match &self.witness {
            None => format!("positive: all {} d-policies have nonzero mass (ergodic)", self.policies_checked),
            Some(w) => format!(
                "positivity check failed: ({}) has zero joint mass; ergodicity not established",
                w.label(partition)
            ),
        }
    }
}

/// Sequential joint mass Π_n σ(Σ_{m<n} π(s_m), s_n)(π(s_n)), 0 on degenerate conditioning.
pub fn sequential_mass<S: LearningSystem + ?Sized>(system: &S, prior: &PolicyState, policy: &DPolicy) -> Result<f64> {
    let p = system.partition();
    let mut state = prior.clone();
    let mut mass = 1.0;
    for c in p.context_ids() {
        let b = policy.behavior(p, c);
        let row = match system.infer(&state, c) {
            Ok(row) => row,
            Err(e) if e.is_degenerate() => return Ok(0.0),
            Err(e) => return Err(e),
        };
        mass *= row[p.local_index(b)];
        if mass == 0.0 {
            return Ok(0.0);
        }
        state.add_behavior(b);
    }
    Ok(mass)
}

/// Decides ergodicity via strict positivity of every d-policy's joint mass.
pub fn check_ergodicity<S: LearningSystem + ?Sized>(system: &S, cap: u64) -> Result<ErgodicityReport> {
    let space = PolicySpace::new(system.partition(), cap)?;
    for (i, pi) in space.iter().enumerate() {
        if sequential_mass(system, &PolicyState::empty(), &pi)? <= 0.0 {
            return Ok(ErgodicityReport {
                positive: false,
                witness: Some(pi),
                policies_checked: i + 1,
            });
        }
    }
    Ok(ErgodicityReport {
        positive: true,
        witness: None,
        policies_checked: space.size(),
    })
}
