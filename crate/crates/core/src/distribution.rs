//! Explicit probability tables over the full d-policy space.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::coherence::coherence;
use crate::error::{Error, Result};
use crate::partition::{ContextPartition, DPolicy, PolicySpace, PolicyState};
use crate::system::{Beta, LearningSystem, ARGMAX_TOLERANCE};
use crate::util::fmt_f64;

/// Tolerance on masses summing to one.
pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ExactSoftmax,
    Empirical,
    Custom,
}

/// Probability mass per d-policy, indexed as in [`PolicySpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDistribution {
    space: PolicySpace,
    masses: Vec<f64>,
    coherence: Option<Vec<f64>>,
    provenance: Provenance,
}

impl PolicyDistribution {
    pub fn new(space: PolicySpace, masses: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if masses.len() != space.size() {
            return Err(Error::validation(
                "masses",
                format!("expected {} entries, got {}", space.size(), masses.len()),
            ));
        }
        if let Some(i) = masses.iter().position(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::validation(format!("masses[{i}]"), "masses must be finite and non-negative"));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::validation("masses", format!("must sum to 1 (got {total})")));
        }
        Ok(PolicyDistribution {
            space,
            masses,
            coherence: None,
            provenance,
        })
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(space: PolicySpace, weights: Vec<f64>, provenance: Provenance) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::EmptySupport);
        }
        Self::new(space, weights.into_iter().map(|w| w / total).collect(), provenance)
    }

    pub fn point_mass(space: PolicySpace, policy: &DPolicy) -> Self {
        let mut masses = vec![0.0; space.size()];
        masses[space.index_of(policy)] = 1.0;
        PolicyDistribution {
            space,
            masses,
            coherence: None,
            provenance: Provenance::Custom,
        }
    }

    pub fn uniform(space: PolicySpace) -> Self {
        let n = space.size();
        PolicyDistribution {
            space,
            masses: vec![1.0 / n as f64; n],
            coherence: None,
            provenance: Provenance::Custom,
        }
    }

    pub fn with_coherence(mut self, chi: Vec<f64>) -> Self {
        debug_assert_eq!(chi.len(), self.masses.len());
        self.coherence = Some(chi);
        self
    }

    pub fn space(&self) -> &PolicySpace {
        &self.space
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn coherence(&self) -> Option<&[f64]> {
        self.coherence.as_deref()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn mass(&self, policy: &DPolicy) -> f64 {
        self.masses[self.space.index_of(policy)]
    }

    /// (index, mass) pairs with positive mass, by descending mass then index.
    pub fn ranked(&self) -> Vec<(usize, f64)> {
        let mut rows: Vec<(usize, f64)> = self
            .masses
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, m)| m > 0.0)
            .collect();
        rows.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        rows
    }

    /// Table with columns `policy,mass,chi`; only positive-mass rows.
    pub fn write_csv<W: Write>(&self, partition: &ContextPartition, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Config(format!("csv write failed: {e}"));
        w.write_record(["policy", "mass", "chi"]).map_err(io)?;
        for (i, m) in self.ranked() {
            let chi = self.coherence.as_ref().map(|c| fmt_f64(c[i])).unwrap_or_default();
            let label = self.space.policy(i).label(partition);
            w.write_record([label, fmt_f64(m), chi]).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Config(format!("csv flush failed: {e}")))?;
        Ok(())
    }

    pub fn to_csv_bytes(&self, partition: &ContextPartition) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_csv(partition, &mut out).expect("writing to memory cannot fail");
        out
    }
}

/// χ(π) for every d-policy in index order, from the empty state.
pub fn coherence_table<S: LearningSystem + ?Sized>(system: &S, space: &PolicySpace) -> Result<Vec<f64>> {
    let empty = PolicyState::empty();
    space
        .iter()
        .map(|pi| coherence(system, &empty, &pi).map(|v| v.bits))
        .collect()
}

/// Exact X^β(π) ∝ 2^{βχ(π)} by full enumeration.
///
/// At β = +∞ the result is uniform over every policy whose coherence lies
/// within [`ARGMAX_TOLERANCE`] of the maximum.
pub fn softmax_over_coherence<S: LearningSystem + ?Sized>(system: &S, beta: Beta, cap: u64) -> Result<PolicyDistribution> {
    let space = PolicySpace::new(system.partition(), cap)?;
    let chi = coherence_table(system, &space)?;
    let dist = softmax_from_coherence(space, &chi, beta)?;
    Ok(dist.with_coherence(chi))
}

/// X^β from a precomputed coherence table.
pub fn softmax_from_coherence(space: PolicySpace, chi: &[f64], beta: Beta) -> Result<PolicyDistribution> {
    let max = chi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::EmptySupport);
    }
    let weights: Vec<f64> = match beta {
        Beta::Finite(b) => chi
            .iter()
            .map(|&x| if x == f64::NEG_INFINITY { 0.0 } else { (b * (x - max)).exp2() })
            .collect(),
        Beta::Infinite => chi
            .iter()
            .map(|&x| if x >= max - ARGMAX_TOLERANCE { 1.0 } else { 0.0 })
            .collect(),
    };
    PolicyDistribution::from_weights(space, weights, Provenance::ExactSoftmax)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::ContextId;
    use crate::system::{sauces_system, temper, MixtureBayesSystem};

    #[test]
    fn sauces_x1_is_the_joint_table() {
        let s = sauces_system(0.0).unwrap();
        let x = softmax_over_coherence(&s, Beta::ONE, 1000).unwrap();
        let joint = [0.3, 0.0, 0.0, 0.0, 0.175, 0.175, 0.0, 0.175, 0.175];
        for (m, j) in x.masses().iter().zip(joint) {
            assert!((m - j).abs() < 1e-12);
        }
    }

    #[test]
    fn sauces_x_inf_is_point_mass() {
        let s = sauces_system(0.0).unwrap();
        let x = softmax_over_coherence(&s, Beta::Infinite, 1000).unwrap();
        assert_eq!(x.ranked(), vec![(0, 1.0)]);
    }

    #[test]
    fn single_context_reduces_to_tempered_row() {
        let p = ContextPartition::with_sizes(&[3]).unwrap();
        let s = MixtureBayesSystem::new(p, vec![0.4, 0.6], vec![vec![vec![0.2, 0.3, 0.5]], vec![vec![0.6, 0.3, 0.1]]]).unwrap();
        for beta in [Beta::Finite(0.5), Beta::ONE, Beta::Finite(3.0), Beta::Infinite] {
            let x = softmax_over_coherence(&s, beta, 10).unwrap();
            let row = s.tempered_infer(&PolicyState::empty(), ContextId(0), beta).unwrap();
            for (a, b) in x.masses().iter().zip(&row) {
                assert!((a - b).abs() < 1e-12, "{beta}: {a} vs {b}");
            }
            let direct = temper(&s.infer(&PolicyState::empty(), ContextId(0)).unwrap(), beta).unwrap();
            assert_eq!(row, direct);
        }
    }

    #[test]
    fn csv_rows_are_sorted() {
        let s = sauces_system(0.0).unwrap();
        let x = softmax_over_coherence(&s, Beta::ONE, 1000).unwrap();
        let text = String::from_utf8(x.to_csv_bytes(s.partition())).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "policy,mass,chi");
        assert!(lines[1].starts_with("\"burger-mayo,fries-mayo\",0.3"), "{}", lines[1]);
        assert_eq!(lines.len(), 6);
    }

    #[test]
    fn rejects_unnormalized() {
        let space = PolicySpace::from_shape(&[2], 10).unwrap();
        assert!(PolicyDistribution::new(space, vec![0.5, 0.6], Provenance::Custom).is_err());
    }
}
