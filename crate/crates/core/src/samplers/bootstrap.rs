use rand::seq::SliceRandom;

use crate::distribution::{PolicyDistribution, Provenance};
use crate::error::{Error, Result};
use crate::partition::{ContextId, ContextPartition, DPolicy, PolicySpace, PolicyState};
use crate::quotient::check_subset;
use crate::samplers::record::SamplerConfig;
use crate::samplers::{conditional, sample_index, seeded_rng};
use crate::system::{Beta, LearningSystem};

/// Order in which the simple bootstrap visits contexts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContextOrder {
    Fixed(Vec<ContextId>),
    /// A uniformly random permutation (seeded for runs, averaged for exact distributions).
    Random,
}

impl ContextOrder {
    pub fn index_order(partition: &ContextPartition) -> Self {
        ContextOrder::Fixed(partition.context_ids().collect())
    }

    /// `random`, or a comma-separated list of context names.
    pub fn parse(partition: &ContextPartition, text: &str) -> Result<Self> {
        if text.trim().eq_ignore_ascii_case("random") {
            return Ok(ContextOrder::Random);
        }
        let order = text
            .split(',')
            .map(|name| {
                let name = name.trim();
                partition
                    .context_by_name(name)
                    .ok_or_else(|| Error::validation("order", format!("unknown context `{name}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let order = ContextOrder::Fixed(order);
        order.check(partition)?;
        Ok(order)
    }

    fn check(&self, partition: &ContextPartition) -> Result<()> {
        if let ContextOrder::Fixed(order) = self {
            check_subset(partition, order)?;
            if order.len() != partition.len() {
                return Err(Error::validation("order", "each context must be visited exactly once"));
            }
        }
        Ok(())
    }
}

/// One simple-bootstrap draw with its exact sequential probability.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    pub policy: DPolicy,
    pub order: Vec<ContextId>,
    /// σ^β(Σ_{m<n} a_m, s_n)(a_n) per step.
    pub step_probabilities: Vec<f64>,
    /// log2 of the product of the step probabilities.
    pub log2_probability: f64,
}

/// Samples a_n ~ σ^β(Σ_{m<n} a_m, s_n) once per context.
pub fn simple_bootstrap_run<S: LearningSystem + ?Sized>(
    system: &S,
    order: &ContextOrder,
    config: &SamplerConfig,
) -> Result<BootstrapResult> {
    config.validate()?;
    let p = system.partition();
    order.check(p)?;
    let mut rng = seeded_rng(config.seed);
    let order: Vec<ContextId> = match order {
        ContextOrder::Fixed(o) => o.clone(),
        ContextOrder::Random => {
            let mut o: Vec<ContextId> = p.context_ids().collect();
            o.shuffle(&mut rng);
            o
        }
    };
    let mut state = PolicyState::empty();
    let mut assignment = vec![0; p.len()];
    let mut step_probabilities = Vec::with_capacity(order.len());
    for (n, &c) in order.iter().enumerate() {
        let row = conditional(system, &state, c, config.beta, n)?;
        let a = sample_index(&mut rng, &row)?;
        step_probabilities.push(row[a]);
        assignment[c.0] = a;
        state.add_behavior(p.behavior(c, a));
    }
    let log2_probability = step_probabilities.iter().map(|q| q.log2()).sum();
    Ok(BootstrapResult {
        policy: DPolicy::new(p, assignment)?,
        order,
        step_probabilities,
        log2_probability,
    })
}

/// Exact output distribution P_SB by enumerating every sampling path.
///
/// With [`ContextOrder::Random`] the distribution is averaged over all |S|!
/// orders; `cap` bounds the number of (order, policy) leaves.
pub fn bootstrap_distribution<S: LearningSystem + ?Sized>(
    system: &S,
    order: &ContextOrder,
    beta: Beta,
    cap: u64,
) -> Result<PolicyDistribution> {
    let p = system.partition();
    order.check(p)?;
    let space = PolicySpace::new(p, cap)?;
    let orders: Vec<Vec<ContextId>> = match order {
        ContextOrder::Fixed(o) => vec![o.clone()],
        ContextOrder::Random => {
            let perms = (1..=p.len() as u128).product::<u128>();
            let leaves = perms.saturating_mul(space.size() as u128);
            if leaves > cap as u128 {
                return Err(Error::CapExceeded { size: leaves, cap });
            }
            permutations(p.len())
        }
    };
    let mut masses = vec![0.0; space.size()];
    let weight = 1.0 / orders.len() as f64;
    for o in &orders {
        let mut walker = PathWalker {
            system,
            order: o,
            beta,
            space: &space,
            masses: &mut masses,
            assignment: vec![0; p.len()],
        };
        walker.walk(0, &PolicyState::empty(), weight)?;
    }
    PolicyDistribution::new(space, masses, Provenance::Custom)
}

struct PathWalker<'a, S: LearningSystem + ?Sized> {
    system: &'a S,
    order: &'a [ContextId],
    beta: Beta,
    space: &'a PolicySpace,
    masses: &'a mut Vec<f64>,
    assignment: Vec<usize>,
}

impl<S: LearningSystem + ?Sized> PathWalker<'_, S> {
    fn walk(&mut self, n: usize, state: &PolicyState, mass: f64) -> Result<()> {
        if n == self.order.len() {
            let idx = self.space.index_of(&DPolicy::from_raw(self.assignment.clone()));
            self.masses[idx] += mass;
            return Ok(());
        }
        let c = self.order[n];
        let row = conditional(self.system, state, c, self.beta, n)?;
        let p = self.system.partition();
        for (a, &q) in row.iter().enumerate() {
            if q == 0.0 {
                continue;
            }
            self.assignment[c.0] = a;
            self.walk(n + 1, &state.with(p.behavior(c, a)), mass * q)?;
        }
        Ok(())
    }
}

/// All permutations of 0..n in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<ContextId>> {
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![cur.iter().copied().map(ContextId).collect()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("a larger suffix element exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.iter().copied().map(ContextId).collect());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::diagnostics::tv_distance;
    use crate::distribution::softmax_over_coherence;
    use crate::system::sauces_system;

    #[test]
    fn permutations_are_complete() {
        let perms = permutations(4);
        assert_eq!(perms.len(), 24);
        let mut sorted = perms.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 24);
    }

    #[test]
    fn beta_one_reproduces_joint() {
        let s = sauces_system(0.0).unwrap();
        let x1 = softmax_over_coherence(&s, Beta::ONE, 1000).unwrap();
        for order in [ContextOrder::index_order(s.partition()), ContextOrder::Random] {
            let sb = bootstrap_distribution(&s, &order, Beta::ONE, 1000).unwrap();
            assert!(tv_distance(&sb, &x1).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn run_reports_sequential_probability() {
        let s = sauces_system(0.01).unwrap();
        let r = simple_bootstrap_run(&s, &ContextOrder::Random, &SamplerConfig::new(Beta::ONE, 1, 9)).unwrap();
        let direct = crate::coherence::coherence_in_order(&s, &PolicyState::empty(), &r.policy, &r.order).unwrap();
        assert!((r.log2_probability - direct.bits).abs() < 1e-12);
    }

    #[test]
    fn order_parsing() {
        let s = sauces_system(0.0).unwrap();
        assert_eq!(
            ContextOrder::parse(s.partition(), "fries, burger").unwrap(),
            ContextOrder::Fixed(vec![ContextId(1), ContextId(0)])
        );
        assert!(ContextOrder::parse(s.partition(), "fries").is_err());
        assert!(ContextOrder::parse(s.partition(), "fries,fries").is_err());
    }
}
