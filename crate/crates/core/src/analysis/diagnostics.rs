//! Distances, empirical estimates and agreement statistics over d-policies.

use serde::{Deserialize, Serialize};

use crate::distribution::{PolicyDistribution, Provenance};
use crate::error::{Error, Result};
use crate::partition::{ContextId, DPolicy, PolicySpace};
use crate::samplers::RunRecord;

/// ½ Σ |p − q| over a shared policy space.
pub fn tv_distance(p: &PolicyDistribution, q: &PolicyDistribution) -> Result<f64> {
    if p.space() != q.space() {
        return Err(Error::SupportMismatch(format!(
            "shapes {:?} and {:?} differ",
            p.space().shape(),
            q.space().shape()
        )));
    }
    let l1: f64 = p.masses().iter().zip(q.masses()).map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * l1).min(1.0))
}

/// How rounds of a trajectory are turned into an estimate of its stationary law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Every round 0..=N with equal weight (r ~ Unif{0..N}).
    #[default]
    UniformRound,
    /// Rounds from `burn_in` on, keeping every `thin`-th.
    #[serde(rename = "burnin-thinned")]
    BurnInThinned,
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-round" => Ok(Estimator::UniformRound),
            "burnin-thinned" => Ok(Estimator::BurnInThinned),
            other => Err(Error::validation(
                "estimator",
                format!("expected `uniform-round` or `burnin-thinned`, got `{other}`"),
            )),
        }
    }
}

/// Normalized visit counts of a run.
pub fn empirical_distribution(record: &RunRecord, estimator: Estimator, cap: u64) -> Result<PolicyDistribution> {
    let space = record.policy_space(cap)?;
    let rounds: Box<dyn Iterator<Item = &DPolicy>> = match estimator {
        Estimator::UniformRound => Box::new(record.trajectory.iter()),
        Estimator::BurnInThinned => Box::new(
            record
                .trajectory
                .iter()
                .skip(record.config.burn_in)
                .step_by(record.config.thin.max(1)),
        ),
    };
    empirical_from_policies(space, rounds)
}

/// Normalized counts of an arbitrary policy sequence.
pub fn empirical_from_policies<'a>(
    space: PolicySpace,
    policies: impl IntoIterator<Item = &'a DPolicy>,
) -> Result<PolicyDistribution> {
    let mut counts = vec![0u64; space.size()];
    let mut total = 0u64;
    for pi in policies {
        counts[space.index_of(pi)] += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::validation("trajectory", "no rounds left to estimate from"));
    }
    let masses = counts.into_iter().map(|c| c as f64 / total as f64).collect();
    PolicyDistribution::new(space, masses, Provenance::Empirical)
}

/// Agreement fraction α over a list of contexts (repeats count once per entry).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgreementStats {
    pub agreement: f64,
    pub matches: usize,
    pub size: usize,
}

pub fn agreement(p1: &DPolicy, p2: &DPolicy, subset: &[ContextId]) -> Result<AgreementStats> {
    if subset.is_empty() {
        return Err(Error::validation("subset", "agreement needs a non-empty context subset"));
    }
    if p1.len() != p2.len() {
        return Err(Error::validation("policy", "policies have different lengths"));
    }
    if let Some(c) = subset.iter().find(|c| c.0 >= p1.len()) {
        return Err(Error::validation("subset", format!("context index {} out of range", c.0)));
    }
    let matches = subset.iter().filter(|&&c| p1.get(c) == p2.get(c)).count();
    Ok(AgreementStats {
        agreement: matches as f64 / subset.len() as f64,
        matches,
        size: subset.len(),
    })
}

/// Agreement over every context.
pub fn full_agreement(p1: &DPolicy, p2: &DPolicy) -> Result<AgreementStats> {
    let all: Vec<ContextId> = (0..p1.len()).map(ContextId).collect();
    agreement(p1, p2, &all)
}

/// Shannon entropy in bits.
pub fn distribution_entropy(q: &PolicyDistribution) -> f64 {
    -q.masses().iter().filter(|&&m| m > 0.0).map(|&m| m * m.log2()).sum::<f64>()
}

/// KL[q ‖ p] in bits; +∞ with the flag cleared when q is not absolutely continuous w.r.t. p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlDivergence {
    #[serde(with = "crate::util::float")]
    pub bits: f64,
    pub absolutely_continuous: bool,
}

pub fn distribution_kl(q: &PolicyDistribution, p: &PolicyDistribution) -> Result<KlDivergence> {
    if q.space() != p.space() {
        return Err(Error::SupportMismatch(format!(
            "shapes {:?} and {:?} differ",
            q.space().shape(),
            p.space().shape()
        )));
    }
    let mut bits = 0.0;
    for (&qm, &pm) in q.masses().iter().zip(p.masses()) {
        if qm == 0.0 {
            continue;
        }
        if pm == 0.0 {
            return Ok(KlDivergence {
                bits: f64::INFINITY,
                absolutely_continuous: false,
            });
        }
        bits += qm * (qm / pm).log2();
    }
    Ok(KlDivergence {
        bits: bits.max(0.0),
        absolutely_continuous: true,
    })
}
