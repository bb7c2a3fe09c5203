//! Behavior spaces: contexts, d-policies and policy states.
//!
//! A [`ContextPartition`] splits the behavior set into disjoint contexts of
//! competing behaviors. Behaviors carry a stable global index ([`BehaviorId`])
//! derived from their position in the input, and every iteration order in the
//! crate is derived from those indices so seeded runs are bit-reproducible.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ceiling on the number of d-policies any exact enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// Index of a context within its partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContextId(pub usize);

/// Global index of a behavior within its partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BehaviorId(pub usize);

/// A named context and the identifiers of its competing behaviors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Context {
    pub name: String,
    pub behaviors: Vec<String>,
}

impl Context {
    pub fn new(name: impl Into<String>, behaviors: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Context {
            name: name.into(),
            behaviors: behaviors.into_iter().map(Into::into).collect(),
        }
    }
}

/// Partition of the behavior set into non-empty, pairwise disjoint contexts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<Context>", into = "Vec<Context>")]
pub struct ContextPartition {
    contexts: Vec<Context>,
    offsets: Vec<usize>,
    owner: Vec<ContextId>,
    by_name: HashMap<String, BehaviorId>,
}

impl PartialEq for ContextPartition {
    fn eq(&self, other: &Self) -> bool {
        self.contexts == other.contexts
    }
}

impl TryFrom<Vec<Context>> for ContextPartition {
    type Error = Error;

    fn try_from(contexts: Vec<Context>) -> Result<Self> {
        ContextPartition::new(contexts)
    }
}

impl From<ContextPartition> for Vec<Context> {
    fn from(p: ContextPartition) -> Self {
        p.contexts
    }
}

impl ContextPartition {
    pub fn new(contexts: Vec<Context>) -> Result<Self> {
        if contexts.is_empty() {
            return Err(Error::validation("partition", "at least one context is required"));
        }
        let mut offsets = Vec::with_capacity(contexts.len());
        let mut owner = Vec::new();
        let mut by_name = HashMap::new();
        let mut context_names = HashSet::new();
        for (c, ctx) in contexts.iter().enumerate() {
            let path = format!("partition[{c}]");
            if !context_names.insert(ctx.name.as_str()) {
                return Err(Error::validation(
                    format!("{path}.name"),
                    format!("duplicate context name `{}`", ctx.name),
                ));
            }
            if ctx.behaviors.is_empty() {
                return Err(Error::validation(
                    format!("{path}.behaviors"),
                    format!("context `{}` has no behaviors", ctx.name),
                ));
            }
            offsets.push(owner.len());
            for (j, b) in ctx.behaviors.iter().enumerate() {
                let id = BehaviorId(owner.len());
                if by_name.insert(b.clone(), id).is_some() {
                    return Err(Error::validation(
                        format!("{path}.behaviors[{j}]"),
                        format!("behavior identifier `{b}` is not globally unique"),
                    ));
                }
                owner.push(ContextId(c));
            }
        }
        Ok(ContextPartition {
            contexts,
            offsets,
            owner,
            by_name,
        })
    }

    /// A partition with generated names `c{i}` / `c{i}_b{j}`.
    pub fn with_sizes(sizes: &[usize]) -> Result<Self> {
        let contexts = sizes
            .iter()
            .enumerate()
            .map(|(c, &k)| Context::new(format!("c{c}"), (0..k).map(|j| format!("c{c}_b{j}"))))
            .collect();
        ContextPartition::new(contexts)
    }

    /// Number of contexts, |S|.
    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    pub fn num_behaviors(&self) -> usize {
        self.owner.len()
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn context(&self, c: ContextId) -> &Context {
        &self.contexts[c.0]
    }

    pub fn context_ids(&self) -> impl Iterator<Item = ContextId> + '_ {
        (0..self.contexts.len()).map(ContextId)
    }

    pub fn context_size(&self, c: ContextId) -> usize {
        self.contexts[c.0].behaviors.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.contexts.iter().map(|c| c.behaviors.len()).collect()
    }

    /// Global id of the `local`-th behavior of context `c`.
    pub fn behavior(&self, c: ContextId, local: usize) -> BehaviorId {
        debug_assert!(local < self.context_size(c));
        BehaviorId(self.offsets[c.0] + local)
    }

    pub fn context_of(&self, b: BehaviorId) -> ContextId {
        self.owner[b.0]
    }

    pub fn local_index(&self, b: BehaviorId) -> usize {
        b.0 - self.offsets[self.owner[b.0].0]
    }

    pub fn behavior_name(&self, b: BehaviorId) -> &str {
        let c = self.owner[b.0];
        &self.contexts[c.0].behaviors[b.0 - self.offsets[c.0]]
    }

    pub fn lookup(&self, name: &str) -> Option<BehaviorId> {
        self.by_name.get(name).copied()
    }

    pub fn context_by_name(&self, name: &str) -> Option<ContextId> {
        self.contexts.iter().position(|c| c.name == name).map(ContextId)
    }

    pub fn contains_behavior(&self, b: BehaviorId) -> bool {
        b.0 < self.owner.len()
    }

    pub fn check_context(&self, c: ContextId) -> Result<()> {
        if c.0 < self.contexts.len() {
            Ok(())
        } else {
            Err(Error::validation(
                "context",
                format!("context index {} out of range (|S| = {})", c.0, self.len()),
            ))
        }
    }

    pub fn check_behavior(&self, b: BehaviorId) -> Result<()> {
        if self.contains_behavior(b) {
            Ok(())
        } else {
            Err(Error::validation(
                "behavior",
                format!("behavior index {} out of range (|A| = {})", b.0, self.num_behaviors()),
            ))
        }
    }

    /// Size of the d-policy space, saturating.
    pub fn policy_count(&self) -> u128 {
        self.contexts
            .iter()
            .fold(1u128, |acc, c| acc.saturating_mul(c.behaviors.len() as u128))
    }
}

/// Deterministic policy: one behavior (local index) per context.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DPolicy(Vec<usize>);

impl DPolicy {
    pub fn new(partition: &ContextPartition, assignment: Vec<usize>) -> Result<Self> {
        if assignment.len() != partition.len() {
            return Err(Error::validation(
                "policy",
                format!(
                    "assignment has {} entries but the partition has {} contexts",
                    assignment.len(),
                    partition.len()
                ),
            ));
        }
        for (c, &a) in assignment.iter().enumerate() {
            if a >= partition.context_size(ContextId(c)) {
                return Err(Error::validation(
                    format!("policy[{c}]"),
                    format!(
                        "behavior index {a} outside context `{}` of size {}",
                        partition.context(ContextId(c)).name,
                        partition.context_size(ContextId(c))
                    ),
                ));
            }
        }
        Ok(DPolicy(assignment))
    }

    /// Builds a policy from one behavior identifier per context, in context order.
    pub fn from_names<S: AsRef<str>>(partition: &ContextPartition, names: &[S]) -> Result<Self> {
        if names.len() != partition.len() {
            return Err(Error::validation(
                "policy",
                format!("expected {} behaviors, got {}", partition.len(), names.len()),
            ));
        }
        let mut assignment = Vec::with_capacity(names.len());
        for (c, name) in names.iter().enumerate() {
            let name = name.as_ref().trim();
            let b = partition.lookup(name).ok_or_else(|| {
                Error::validation(format!("policy[{c}]"), format!("unknown behavior `{name}`"))
            })?;
            if partition.context_of(b) != ContextId(c) {
                return Err(Error::validation(
                    format!("policy[{c}]"),
                    format!(
                        "behavior `{name}` belongs to context `{}`, expected `{}`",
                        partition.context(partition.context_of(b)).name,
                        partition.context(ContextId(c)).name
                    ),
                ));
            }
            assignment.push(partition.local_index(b));
        }
        Ok(DPolicy(assignment))
    }

    pub(crate) fn from_raw(assignment: Vec<usize>) -> Self {
        DPolicy(assignment)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, c: ContextId) -> usize {
        self.0[c.0]
    }

    pub fn set(&mut self, c: ContextId, local: usize) {
        self.0[c.0] = local;
    }

    pub fn behavior(&self, partition: &ContextPartition, c: ContextId) -> BehaviorId {
        partition.behavior(c, self.0[c.0])
    }

    /// Behaviors in context index order.
    pub fn behaviors(&self, partition: &ContextPartition) -> Vec<BehaviorId> {
        partition.context_ids().map(|c| self.behavior(partition, c)).collect()
    }

    /// Behaviors of the listed contexts, in the listed order.
    pub fn behaviors_over(&self, partition: &ContextPartition, contexts: &[ContextId]) -> Vec<BehaviorId> {
        contexts.iter().map(|&c| self.behavior(partition, c)).collect()
    }

    /// The policy state Σ_s π(s).
    pub fn state(&self, partition: &ContextPartition) -> PolicyState {
        PolicyState::from_behaviors(self.behaviors(partition))
    }

    /// Leave-one-out state Σ_{s ≠ excluded} π(s).
    pub fn state_excluding(&self, partition: &ContextPartition, excluded: ContextId) -> PolicyState {
        PolicyState::from_behaviors(
            partition
                .context_ids()
                .filter(|&c| c != excluded)
                .map(|c| self.behavior(partition, c)),
        )
    }

    pub fn state_over(&self, partition: &ContextPartition, contexts: &[ContextId]) -> PolicyState {
        PolicyState::from_behaviors(self.behaviors_over(partition, contexts))
    }

    pub fn names<'p>(&self, partition: &'p ContextPartition) -> Vec<&'p str> {
        self.behaviors(partition)
            .into_iter()
            .map(|b| partition.behavior_name(b))
            .collect()
    }

    /// Behavior names joined with `,`.
    pub fn label(&self, partition: &ContextPartition) -> String {
        self.names(partition).join(",")
    }
}

/// Mixed-radix indexing of the full d-policy space, lexicographic in context order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicySpace {
    shape: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl PolicySpace {
    pub fn new(partition: &ContextPartition, cap: u64) -> Result<Self> {
        Self::from_shape(&partition.shape(), cap)
    }

    pub fn from_shape(shape: &[usize], cap: u64) -> Result<Self> {
        let size = shape
            .iter()
            .fold(1u128, |acc, &k| acc.saturating_mul(k as u128));
        if size > cap as u128 {
            return Err(Error::CapExceeded { size, cap });
        }
        let mut strides = vec![1usize; shape.len()];
        for c in (0..shape.len().saturating_sub(1)).rev() {
            strides[c] = strides[c + 1] * shape[c + 1];
        }
        Ok(PolicySpace {
            shape: shape.to_vec(),
            strides,
            size: size as usize,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn policy(&self, mut index: usize) -> DPolicy {
        let mut assignment = vec![0; self.shape.len()];
        for (c, &stride) in self.strides.iter().enumerate() {
            assignment[c] = index / stride;
            index %= stride;
        }
        DPolicy(assignment)
    }

    pub fn index_of(&self, policy: &DPolicy) -> usize {
        policy
            .0
            .iter()
            .zip(&self.strides)
            .map(|(&a, &s)| a * s)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = DPolicy> + '_ {
        (0..self.size).map(move |i| self.policy(i))
    }
}

/// Multiset of observed behaviors: an element of the commutative policy monoid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct PolicyState {
    counts: BTreeMap<BehaviorId, u64>,
}

impl PolicyState {
    /// The identity element 0.
    pub fn empty() -> Self {
        PolicyState::default()
    }

    pub fn from_behaviors(behaviors: impl IntoIterator<Item = BehaviorId>) -> Self {
        let mut s = PolicyState::empty();
        for b in behaviors {
            s.add_behavior(b);
        }
        s
    }

    pub fn add_behavior(&mut self, b: BehaviorId) {
        *self.counts.entry(b).or_insert(0) += 1;
    }

    pub fn add_times(&mut self, b: BehaviorId, times: u64) {
        if times > 0 {
            *self.counts.entry(b).or_insert(0) += times;
        }
    }

    /// `self + b` without mutating `self`.
    pub fn with(&self, b: BehaviorId) -> Self {
        let mut s = self.clone();
        s.add_behavior(b);
        s
    }

    /// Removes one copy of `b`; returns false if `b` was absent.
    pub fn remove_behavior(&mut self, b: BehaviorId) -> bool {
        match self.counts.get_mut(&b) {
            Some(n) if *n > 1 => {
                *n -= 1;
                true
            }
            Some(_) => {
                self.counts.remove(&b);
                true
            }
            None => false,
        }
    }

    pub fn count(&self, b: BehaviorId) -> u64 {
        self.counts.get(&b).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `(behavior, multiplicity)` pairs in behavior index order.
    pub fn iter(&self) -> impl Iterator<Item = (BehaviorId, u64)> + '_ {
        self.counts.iter().map(|(&b, &n)| (b, n))
    }

    pub fn describe(&self, partition: &ContextPartition) -> String {
        if self.is_empty() {
            return "{}".to_string();
        }
        let parts: Vec<String> = self
            .iter()
            .map(|(b, n)| {
                let name = if partition.contains_behavior(b) {
                    partition.behavior_name(b).to_string()
                } else {
                    format!("#{}", b.0)
                };
                if n == 1 {
                    name
                } else {
                    format!("{name}×{n}")
                }
            })
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

impl fmt::Display for PolicyState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(b, n)| format!("#{}×{}", b.0, n)).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl AddAssign<&PolicyState> for PolicyState {
    fn add_assign(&mut self, rhs: &PolicyState) {
        for (b, n) in rhs.iter() {
            self.add_times(b, n);
        }
    }
}

impl Add<&PolicyState> for &PolicyState {
    type Output = PolicyState;

    fn add(self, rhs: &PolicyState) -> PolicyState {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for PolicyState {
    type Output = PolicyState;

    fn add(mut self, rhs: PolicyState) -> PolicyState {
        self += &rhs;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sauces_partition() -> ContextPartition {
        ContextPartition::new(vec![
            Context::new("burger", ["burger-mayo", "burger-mustard", "burger-other"]),
            Context::new("fries", ["fries-mayo", "fries-ketchup", "fries-other"]),
        ])
        .unwrap()
    }

    #[test]
    fn rejects_duplicate_behavior_ids() {
        let err = ContextPartition::new(vec![
            Context::new("a", ["x", "y"]),
            Context::new("b", ["y", "z"]),
        ])
        .unwrap_err();
        assert!(err.to_string().contains("partition[1].behaviors[0]"), "{err}");
    }

    #[test]
    fn rejects_empty_context() {
        let err = ContextPartition::new(vec![Context::new("a", Vec::<String>::new())]).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }

    #[test]
    fn global_indices_follow_input_order() {
        let p = sauces_partition();
        assert_eq!(p.num_behaviors(), 6);
        let b = p.lookup("fries-ketchup").unwrap();
        assert_eq!(b, BehaviorId(4));
        assert_eq!(p.context_of(b), ContextId(1));
        assert_eq!(p.local_index(b), 1);
        assert_eq!(p.behavior(ContextId(1), 1), b);
    }

    #[test]
    fn policy_from_names_checks_context() {
        let p = sauces_partition();
        let pi = DPolicy::from_names(&p, &["burger-mustard", "fries-ketchup"]).unwrap();
        assert_eq!(pi.assignment(), &[1, 1]);
        assert!(DPolicy::from_names(&p, &["fries-mayo", "burger-mayo"]).is_err());
        assert!(DPolicy::new(&p, vec![3, 0]).is_err());
    }

    #[test]
    fn policy_space_round_trips_indices() {
        let space = PolicySpace::from_shape(&[3, 2, 4], 100).unwrap();
        assert_eq!(space.size(), 24);
        for (i, pi) in space.iter().enumerate() {
            assert_eq!(space.index_of(&pi), i);
        }
        assert_eq!(space.policy(0).assignment(), &[0, 0, 0]);
        assert_eq!(space.policy(23).assignment(), &[2, 1, 3]);
    }

    #[test]
    fn policy_space_cap() {
        assert!(matches!(
            PolicySpace::from_shape(&[10, 10, 10], 999),
            Err(Error::CapExceeded { size: 1000, cap: 999 })
        ));
    }

    #[test]
    fn leave_one_out_state() {
        let p = sauces_partition();
        let pi = DPolicy::new(&p, vec![0, 2]).unwrap();
        let loo = pi.state_excluding(&p, ContextId(0));
        assert_eq!(loo, PolicyState::from_behaviors([BehaviorId(5)]));
    }

    fn arb_state() -> impl Strategy<Value = PolicyState> {
        proptest::collection::vec((0usize..6, 1u64..4), 0..6).prop_map(|pairs| {
            let mut s = PolicyState::empty();
            for (b, n) in pairs {
                s.add_times(BehaviorId(b), n);
            }
            s
        })
    }

    proptest! {
        #[test]
        fn monoid_laws(x in arb_state(), y in arb_state(), z in arb_state()) {
            prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
            prop_assert_eq!(&x + &y, &y + &x);
            prop_assert_eq!(&x + &PolicyState::empty(), x.clone());
        }

        #[test]
        fn remove_inverts_add(x in arb_state(), b in 0usize..6) {
            let mut y = x.with(BehaviorId(b));
            prop_assert!(y.remove_behavior(BehaviorId(b)));
            prop_assert_eq!(y, x);
        }
    }
}
