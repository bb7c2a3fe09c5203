//! Coherence of behavior sequences and d-policies, PMI, quotient coherence,
//! and the exact change-of-prior and prior-encodes-samples identities.
//!
//! All values are in bits. A zero-probability step yields −∞, carried as a
//! first-class value together with the index of the step that failed.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{BehaviorId, ContextId, DPolicy, PolicyState};
use crate::quotient::{check_subset, complement};
use crate::system::LearningSystem;
use crate::util::float;

/// A coherence in bits, ≤ 0; −∞ records the first zero-probability step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceValue {
    #[serde(with = "float")]
    pub bits: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_step: Option<usize>,
}

impl CoherenceValue {
    pub const ZERO: CoherenceValue = CoherenceValue {
        bits: 0.0,
        zero_step: None,
    };

    pub fn finite(bits: f64) -> Self {
        CoherenceValue { bits, zero_step: None }
    }

    pub fn neg_infinity(step: usize) -> Self {
        CoherenceValue {
            bits: f64::NEG_INFINITY,
            zero_step: Some(step),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.bits.is_finite()
    }

    /// Description length −χ in bits.
    pub fn description_length(&self) -> f64 {
        -self.bits
    }
}

impl fmt::Display for CoherenceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.zero_step {
            Some(step) if !self.bits.is_finite() => write!(f, "-inf (zero probability at step {step})"),
            _ => write!(f, "{:.7}", self.bits),
        }
    }
}

/// 𝜒̂_φ[a_1, …, a_k] = Σ_n log2 σ(φ + Σ_{m<n} a_m, s_n)(a_n).
pub fn sequence_coherence<S: LearningSystem + ?Sized>(
    system: &S,
    prior: &PolicyState,
    behaviors: &[BehaviorId],
) -> Result<CoherenceValue> {
    let p = system.partition();
    for &b in behaviors {
        p.check_behavior(b)?;
    }
    let mut state = prior.clone();
    let mut bits = 0.0;
    for (n, &b) in behaviors.iter().enumerate() {
        let row = match system.infer(&state, p.context_of(b)) {
            Ok(row) => row,
            Err(e) if e.is_degenerate() => return Ok(CoherenceValue::neg_infinity(n)),
            Err(e) => return Err(e),
        };
        let q = row[p.local_index(b)];
        if q <= 0.0 {
            return Ok(CoherenceValue::neg_infinity(n));
        }
        bits += q.log2();
        state.add_behavior(b);
    }
    Ok(CoherenceValue::finite(bits))
}

/// χ_φ(π), evaluated over contexts in index order.
pub fn coherence<S: LearningSystem + ?Sized>(system: &S, prior: &PolicyState, policy: &DPolicy) -> Result<CoherenceValue> {
    let behaviors = policy.behaviors(system.partition());
    sequence_coherence(system, prior, &behaviors)
}

/// χ_φ(π) evaluated in an explicit context order (a permutation of S).
pub fn coherence_in_order<S: LearningSystem + ?Sized>(
    system: &S,
    prior: &PolicyState,
    policy: &DPolicy,
    order: &[ContextId],
) -> Result<CoherenceValue> {
    let p = system.partition();
    check_subset(p, order)?;
    if order.len() != p.len() {
        return Err(Error::validation("order", "must be a permutation of all contexts"));
    }
    sequence_coherence(system, prior, &policy.behaviors_over(p, order))
}

/// PMI(π) = χ(π) − Σ_s log2 σ(0, s)(π(s)).
pub fn pmi<S: LearningSystem + ?Sized>(system: &S, policy: &DPolicy) -> Result<f64> {
    let p = system.partition();
    let empty = PolicyState::empty();
    let mut marginal_bits = 0.0;
    for c in p.context_ids() {
        let q = system.infer(&empty, c)?[policy.get(c)];
        if q <= 0.0 {
            return Err(Error::ZeroMarginal {
                context: p.context(c).name.clone(),
            });
        }
        marginal_bits += q.log2();
    }
    Ok(coherence(system, &empty, policy)?.bits - marginal_bits)
}

/// A context subset S_a together with the anchoring state 0_a.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientSpec {
    pub subset_a: Vec<ContextId>,
    pub base_state: PolicyState,
}

/// χ^a of a partial policy: its sequence coherence from the base state.
pub fn quotient_coherence<S: LearningSystem + ?Sized>(
    system: &S,
    spec: &QuotientSpec,
    partial: &[BehaviorId],
) -> Result<CoherenceValue> {
    let p = system.partition();
    check_subset(p, &spec.subset_a)?;
    if partial.len() != spec.subset_a.len() {
        return Err(Error::validation(
            "partial_policy",
            format!("expected {} behaviors, got {}", spec.subset_a.len(), partial.len()),
        ));
    }
    for (i, &b) in partial.iter().enumerate() {
        p.check_behavior(b)?;
        if !spec.subset_a.contains(&p.context_of(b)) {
            return Err(Error::validation(
                format!("partial_policy[{i}]"),
                format!("behavior `{}` lies outside subset_a", p.behavior_name(b)),
            ));
        }
    }
    let mut contexts: Vec<ContextId> = partial.iter().map(|&b| p.context_of(b)).collect();
    contexts.sort();
    contexts.dedup();
    if contexts.len() != partial.len() {
        return Err(Error::validation("partial_policy", "two behaviors share a context"));
    }
    sequence_coherence(system, &spec.base_state, partial)
}

/// Absolute difference of two log-probability expressions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Residual {
    Value(f64),
    /// Exactly one side is −∞.
    Indeterminate,
}

impl Residual {
    pub fn between(lhs: f64, rhs: f64) -> Self {
        match (lhs.is_finite(), rhs.is_finite()) {
            (true, true) => Residual::Value((lhs - rhs).abs()),
            (false, false) if lhs == rhs => Residual::Value(0.0),
            _ => Residual::Indeterminate,
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Residual::Value(v) => Some(v),
            Residual::Indeterminate => None,
        }
    }

    /// True when determinate and within `tol`.
    pub fn within(self, tol: f64) -> bool {
        matches!(self, Residual::Value(v) if v <= tol)
    }
}

impl fmt::Display for Residual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Residual::Value(v) => write!(f, "{v:.3e}"),
            Residual::Indeterminate => f.write_str("indeterminate"),
        }
    }
}

/// |𝜒̂_φ[ψ] + 𝜒̂_ρ[φ] − 𝜒̂_ρ[φ ⧺ ψ]| with φ = ρ + Σ phi.
pub fn check_change_of_prior<S: LearningSystem + ?Sized>(
    system: &S,
    rho: &PolicyState,
    phi: &[BehaviorId],
    psi: &[BehaviorId],
) -> Result<Residual> {
    let mut phi_state = rho.clone();
    for &b in phi {
        phi_state.add_behavior(b);
    }
    let head = sequence_coherence(system, rho, phi)?;
    let tail = sequence_coherence(system, &phi_state, psi)?;
    let whole: Vec<BehaviorId> = phi.iter().chain(psi).copied().collect();
    let joint = sequence_coherence(system, rho, &whole)?;
    Ok(Residual::between(tail.bits + head.bits, joint.bits))
}

/// Residuals of χ^a(π(S_a)) + 𝜒̂_0[π(S_b)] = χ(π) = 𝜒̂_0[π(S_a)] + χ^b(π(S_b)).
pub fn check_prior_encodes_samples<S: LearningSystem + ?Sized>(
    system: &S,
    policy: &DPolicy,
    subset_a: &[ContextId],
) -> Result<(Residual, Residual)> {
    let d = decompose(system, policy, subset_a)?;
    Ok((
        Residual::between(d.post_given_pre.bits + d.pre.bits, d.full.bits),
        Residual::between(d.post.bits + d.pre_given_post.bits, d.full.bits),
    ))
}

/// The four terms of the prior-encodes-samples identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherenceDecomposition {
    /// χ(π) from the empty state.
    pub full: CoherenceValue,
    /// 𝜒̂_0[π(S_b)], pretrain coherence.
    pub pre: CoherenceValue,
    /// 𝜒̂_0[π(S_a)], posttrain coherence.
    pub post: CoherenceValue,
    /// χ^a(π(S_a)) anchored at Σ_{S_b} π.
    pub post_given_pre: CoherenceValue,
    /// χ^b(π(S_b)) anchored at Σ_{S_a} π.
    pub pre_given_post: CoherenceValue,
}

pub fn decompose<S: LearningSystem + ?Sized>(
    system: &S,
    policy: &DPolicy,
    subset_a: &[ContextId],
) -> Result<CoherenceDecomposition> {
    let p = system.partition();
    check_subset(p, subset_a)?;
    let subset_b = complement(p, subset_a);
    let empty = PolicyState::empty();
    let a = policy.behaviors_over(p, subset_a);
    let b = policy.behaviors_over(p, &subset_b);
    let state_a = PolicyState::from_behaviors(a.iter().copied());
    let state_b = PolicyState::from_behaviors(b.iter().copied());
    Ok(CoherenceDecomposition {
        full: coherence(system, &empty, policy)?,
        pre: sequence_coherence(system, &empty, &b)?,
        post: sequence_coherence(system, &empty, &a)?,
        post_given_pre: sequence_coherence(system, &state_b, &a)?,
        pre_given_post: sequence_coherence(system, &state_a, &b)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::ContextPartition;
    use crate::system::{sauces_system, MixtureBayesSystem};

    fn names(s: &MixtureBayesSystem, n: &[&str]) -> Vec<BehaviorId> {
        n.iter().map(|x| s.partition().lookup(x).unwrap()).collect()
    }

    #[test]
    fn sauces_sequence_coherence() {
        let s = sauces_system(0.0).unwrap();
        let fwd = sequence_coherence(&s, &PolicyState::empty(), &names(&s, &["burger-mustard", "fries-ketchup"])).unwrap();
        let rev = sequence_coherence(&s, &PolicyState::empty(), &names(&s, &["fries-ketchup", "burger-mustard"])).unwrap();
        assert!((fwd.bits - 0.175f64.log2()).abs() < 1e-12);
        assert!((fwd.bits - rev.bits).abs() < 1e-12);
        assert_eq!(sequence_coherence(&s, &PolicyState::empty(), &[]).unwrap(), CoherenceValue::ZERO);
    }

    #[test]
    fn zero_step_is_reported() {
        let s = sauces_system(0.0).unwrap();
        let v = sequence_coherence(&s, &PolicyState::empty(), &names(&s, &["burger-mayo", "fries-ketchup"])).unwrap();
        assert_eq!(v.bits, f64::NEG_INFINITY);
        assert_eq!(v.zero_step, Some(1));
    }

    #[test]
    fn certain_event_has_zero_coherence() {
        let p = ContextPartition::with_sizes(&[2]).unwrap();
        let s = MixtureBayesSystem::new(p, vec![1.0], vec![vec![vec![1.0, 0.0]]]).unwrap();
        let pi = DPolicy::new(s.partition(), vec![0]).unwrap();
        assert_eq!(coherence(&s, &PolicyState::empty(), &pi).unwrap().bits, 0.0);
    }

    #[test]
    fn sauces_pmi() {
        let s = sauces_system(0.0).unwrap();
        let p1 = DPolicy::new(s.partition(), vec![0, 0]).unwrap();
        let p2 = DPolicy::new(s.partition(), vec![1, 1]).unwrap();
        assert!((pmi(&s, &p1).unwrap() + 0.3f64.log2()).abs() < 1e-12);
        assert!((pmi(&s, &p2).unwrap() - (0.175f64 / 0.1225).log2()).abs() < 1e-12);
    }

    #[test]
    fn pmi_zero_marginal_names_context() {
        let p = ContextPartition::with_sizes(&[2]).unwrap();
        let s = MixtureBayesSystem::new(p, vec![1.0], vec![vec![vec![1.0, 0.0]]]).unwrap();
        let pi = DPolicy::new(s.partition(), vec![1]).unwrap();
        assert!(matches!(pmi(&s, &pi), Err(Error::ZeroMarginal { context }) if context == "c0"));
    }

    #[test]
    fn sauces_quotient() {
        let s = sauces_system(0.0).unwrap();
        let spec = QuotientSpec {
            subset_a: vec![ContextId(1)],
            base_state: PolicyState::from_behaviors(names(&s, &["burger-mayo"])),
        };
        let v = quotient_coherence(&s, &spec, &names(&s, &["fries-mayo"])).unwrap();
        assert!(v.bits.abs() < 1e-12);
        let empty = QuotientSpec {
            subset_a: vec![],
            base_state: PolicyState::empty(),
        };
        assert_eq!(quotient_coherence(&s, &empty, &[]).unwrap().bits, 0.0);
        assert!(quotient_coherence(&s, &spec, &names(&s, &["burger-mayo"])).is_err());
    }

    #[test]
    fn residual_rules() {
        assert_eq!(Residual::between(f64::NEG_INFINITY, f64::NEG_INFINITY), Residual::Value(0.0));
        assert_eq!(Residual::between(f64::NEG_INFINITY, -1.0), Residual::Indeterminate);
        assert_eq!(Residual::between(-1.0, -1.5), Residual::Value(0.5));
    }

    #[test]
    fn change_of_prior_trivial_cases() {
        let s = sauces_system(0.01).unwrap();
        let phi = names(&s, &["burger-mustard"]);
        let r = check_change_of_prior(&s, &PolicyState::empty(), &phi, &[]).unwrap();
        assert_eq!(r, Residual::Value(0.0));
        let r = check_change_of_prior(&s, &PolicyState::empty(), &[], &phi).unwrap();
        assert_eq!(r, Residual::Value(0.0));
    }

    #[test]
    fn prior_encodes_samples_on_sauces() {
        let s = sauces_system(0.0).unwrap();
        let pi = DPolicy::new(s.partition(), vec![0, 0]).unwrap();
        let (l, r) = check_prior_encodes_samples(&s, &pi, &[ContextId(0)]).unwrap();
        assert!(l.within(1e-12) && r.within(1e-12), "{l} {r}");
        let (_, r) = check_prior_encodes_samples(&s, &pi, &[ContextId(0), ContextId(1)]).unwrap();
        assert_eq!(r, Residual::Value(0.0));
        let (l, _) = check_prior_encodes_samples(&s, &pi, &[]).unwrap();
        assert_eq!(l, Residual::Value(0.0));
    }
}
