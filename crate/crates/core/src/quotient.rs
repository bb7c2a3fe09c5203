//! Quotient systems: a learning system restricted to a context subset and
//! anchored at a fixed base state.

use crate::error::{Error, Result};
use crate::partition::{BehaviorId, ContextId, ContextPartition, DPolicy, PolicyState};
use crate::system::LearningSystem;

/// Validates a context subset: indices in range and pairwise distinct.
pub fn check_subset(partition: &ContextPartition, subset: &[ContextId]) -> Result<()> {
    let mut seen = vec![false; partition.len()];
    for (i, &c) in subset.iter().enumerate() {
        if c.0 >= partition.len() {
            return Err(Error::validation(
                format!("subset_a[{i}]"),
                format!("context index {} out of range (|S| = {})", c.0, partition.len()),
            ));
        }
        if std::mem::replace(&mut seen[c.0], true) {
            return Err(Error::validation(format!("subset_a[{i}]"), format!("context index {} repeated", c.0)));
        }
    }
    Ok(())
}

/// Complement of `subset` in context index order.
pub fn complement(partition: &ContextPartition, subset: &[ContextId]) -> Vec<ContextId> {
    partition.context_ids().filter(|c| !subset.contains(c)).collect()
}

/// σ_a(φ, s) = σ(base + φ, s) for s in the retained subset.
///
/// The quotient has its own partition holding only the retained contexts (in
/// the order given), so every sampler and evaluator in the crate runs on it
/// unchanged.
#[derive(Debug, Clone)]
pub struct QuotientSystem<'a, S: LearningSystem + ?Sized> {
    inner: &'a S,
    partition: ContextPartition,
    contexts: Vec<ContextId>,
    behavior_map: Vec<BehaviorId>,
    base: PolicyState,
}

impl<'a, S: LearningSystem + ?Sized> QuotientSystem<'a, S> {
    pub fn new(inner: &'a S, subset: &[ContextId], base: PolicyState) -> Result<Self> {
        let outer = inner.partition();
        check_subset(outer, subset)?;
        if subset.is_empty() {
            return Err(Error::validation("subset_a", "a quotient system needs at least one context"));
        }
        for (b, _) in base.iter() {
            outer.check_behavior(b)?;
        }
        let partition = ContextPartition::new(subset.iter().map(|&c| outer.context(c).clone()).collect())?;
        let behavior_map = subset
            .iter()
            .flat_map(|&c| (0..outer.context_size(c)).map(move |j| outer.behavior(c, j)))
            .collect();
        Ok(QuotientSystem {
            inner,
            partition,
            contexts: subset.to_vec(),
            behavior_map,
            base,
        })
    }

    pub fn inner(&self) -> &S {
        self.inner
    }

    pub fn base(&self) -> &PolicyState {
        &self.base
    }

    /// Outer context of each quotient context.
    pub fn contexts(&self) -> &[ContextId] {
        &self.contexts
    }

    pub fn outer_behavior(&self, b: BehaviorId) -> BehaviorId {
        self.behavior_map[b.0]
    }

    /// base + φ expressed in outer behavior ids.
    pub fn lift_state(&self, state: &PolicyState) -> PolicyState {
        let mut out = self.base.clone();
        for (b, n) in state.iter() {
            out.add_times(self.behavior_map[b.0], n);
        }
        out
    }

    /// Restricts a full policy to the retained contexts.
    pub fn restrict(&self, full: &DPolicy) -> DPolicy {
        DPolicy::from_raw(self.contexts.iter().map(|&c| full.get(c)).collect())
    }

    /// Overwrites the retained contexts of `full` with `partial`.
    pub fn embed(&self, partial: &DPolicy, full: &DPolicy) -> DPolicy {
        let mut out = full.clone();
        for (i, &c) in self.contexts.iter().enumerate() {
            out.set(c, partial.get(ContextId(i)));
        }
        out
    }
}

impl<S: LearningSystem + ?Sized> LearningSystem for QuotientSystem<'_, S> {
    fn partition(&self) -> &ContextPartition {
        &self.partition
    }

    fn infer(&self, state: &PolicyState, context: ContextId) -> Result<Vec<f64>> {
        self.partition.check_context(context)?;
        for (b, _) in state.iter() {
            self.partition.check_behavior(b)?;
        }
        self.inner.infer(&self.lift_state(state), self.contexts[context.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::sauces_system;

    #[test]
    fn quotient_conditions_on_base() {
        let s = sauces_system(0.0).unwrap();
        let p = s.partition();
        let base = PolicyState::from_behaviors([p.lookup("burger-mayo").unwrap()]);
        let q = QuotientSystem::new(&s, &[ContextId(1)], base).unwrap();
        assert_eq!(q.partition().len(), 1);
        let row = q.infer(&PolicyState::empty(), ContextId(0)).unwrap();
        assert!((row[0] - 1.0).abs() < 1e-12, "{row:?}");
    }

    #[test]
    fn embed_and_restrict() {
        let s = sauces_system(0.0).unwrap();
        let q = QuotientSystem::new(&s, &[ContextId(1)], PolicyState::empty()).unwrap();
        let full = DPolicy::new(s.partition(), vec![1, 2]).unwrap();
        let part = q.restrict(&full);
        assert_eq!(part.assignment(), &[2]);
        let back = q.embed(&DPolicy::from_raw(vec![0]), &full);
        assert_eq!(back.assignment(), &[1, 0]);
    }

    #[test]
    fn rejects_bad_subsets() {
        let s = sauces_system(0.0).unwrap();
        assert!(QuotientSystem::new(&s, &[ContextId(2)], PolicyState::empty()).is_err());
        assert!(QuotientSystem::new(&s, &[ContextId(0), ContextId(0)], PolicyState::empty()).is_err());
        assert!(QuotientSystem::new(&s, &[], PolicyState::empty()).is_err());
    }
}
