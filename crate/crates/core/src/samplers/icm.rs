use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{ContextId, DPolicy};
use crate::samplers::seeded_rng;
use crate::system::LearningSystem;

/// f_MP(π) = Σ_n log2 σ(Σ_{m≠n} π(s_m), s_n)(π(s_n)).
///
/// Degenerate conditioning or a zero term gives −∞.
pub fn mutual_predictability<S: LearningSystem + ?Sized>(system: &S, policy: &DPolicy) -> Result<f64> {
    let p = system.partition();
    let full = policy.state(p);
    let mut total = 0.0;
    for c in p.context_ids() {
        let b = policy.behavior(p, c);
        let mut loo = full.clone();
        loo.remove_behavior(b);
        let q = match system.infer(&loo, c) {
            Ok(row) => row[policy.get(c)],
            Err(e) if e.is_degenerate() => 0.0,
            Err(e) => return Err(e),
        };
        if q <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total += q.log2();
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IcmConfig {
    /// Moves allowed per climb.
    pub max_iters: usize,
    /// Climbs from uniformly random starts, in addition to the given start.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for IcmConfig {
    fn default() -> Self {
        IcmConfig {
            max_iters: 1000,
            restarts: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IcmResult {
    pub policy: DPolicy,
    #[serde(with = "crate::util::float")]
    pub f_mp: f64,
    /// Total accepted moves over all climbs.
    pub moves: usize,
    /// The returned policy has no strictly better single-coordinate neighbor.
    pub local_maximum: bool,
}

/// Best-improvement coordinate ascent on f_MP with random restarts.
///
/// Each climb moves to the best single-coordinate neighbor (first in context,
/// then behavior order on ties) while it strictly improves f_MP. The best
/// climb wins; earlier climbs win ties.
pub fn icm_hill_climb<S: LearningSystem + ?Sized>(system: &S, initial: &DPolicy, config: &IcmConfig) -> Result<IcmResult> {
    if config.max_iters == 0 {
        return Err(Error::validation("max_iters", "must be at least 1"));
    }
    let p = system.partition();
    let initial = DPolicy::new(p, initial.assignment().to_vec())?;
    let mut rng = seeded_rng(config.seed);
    let mut starts = vec![initial];
    for _ in 0..config.restarts {
        let a = p.context_ids().map(|c| rng.random_range(0..p.context_size(c))).collect();
        starts.push(DPolicy::new(p, a)?);
    }
    let mut best: Option<IcmResult> = None;
    let mut moves = 0;
    for start in starts {
        let climb = climb(system, start, config.max_iters)?;
        moves += climb.moves;
        if best.as_ref().is_none_or(|b| climb.f_mp > b.f_mp) {
            best = Some(climb);
        }
    }
    let mut best = best.expect("at least one climb");
    best.moves = moves;
    Ok(best)
}

fn climb<S: LearningSystem + ?Sized>(system: &S, start: DPolicy, max_iters: usize) -> Result<IcmResult> {
    let p = system.partition();
    let mut current = start;
    let mut value = mutual_predictability(system, &current)?;
    let mut moves = 0;
    loop {
        let mut best_move: Option<(DPolicy, f64)> = None;
        for c in p.context_ids() {
            for a in 0..p.context_size(c) {
                if a == current.get(c) {
                    continue;
                }
                let mut cand = current.clone();
                cand.set(c, a);
                let v = mutual_predictability(system, &cand)?;
                let threshold = best_move.as_ref().map_or(value, |(_, bv)| *bv);
                if v > threshold {
                    best_move = Some((cand, v));
                }
            }
        }
        match best_move {
            None => {
                return Ok(IcmResult {
                    policy: current,
                    f_mp: value,
                    moves,
                    local_maximum: true,
                })
            }
            Some(_) if moves == max_iters => {
                return Ok(IcmResult {
                    policy: current,
                    f_mp: value,
                    moves,
                    local_maximum: false,
                })
            }
            Some((cand, v)) => {
                current = cand;
                value = v;
                moves += 1;
            }
        }
    }
}

/// f_MP of every single-coordinate neighbor of `policy`.
pub fn neighbor_values<S: LearningSystem + ?Sized>(system: &S, policy: &DPolicy) -> Result<Vec<(ContextId, usize, f64)>> {
    let p = system.partition();
    let mut out = Vec::new();
    for c in p.context_ids() {
        for a in 0..p.context_size(c) {
            if a != policy.get(c) {
                let mut cand = policy.clone();
                cand.set(c, a);
                out.push((c, a, mutual_predictability(system, &cand)?));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{ContextPartition, PolicySpace, PolicyState};
    use crate::system::{sauces_system, MixtureBayesSystem};

    #[test]
    fn sauces_values() {
        let s = sauces_system(0.0).unwrap();
        let p1 = DPolicy::new(s.partition(), vec![0, 0]).unwrap();
        let p2 = DPolicy::new(s.partition(), vec![1, 1]).unwrap();
        assert!(mutual_predictability(&s, &p1).unwrap().abs() < 1e-12);
        assert!((mutual_predictability(&s, &p2).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn sauces_global_maximum() {
        let s = sauces_system(0.0).unwrap();
        let space = PolicySpace::new(s.partition(), 100).unwrap();
        for start in space.iter() {
            let r = icm_hill_climb(&s, &start, &IcmConfig::default()).unwrap();
            assert_eq!(r.policy.assignment(), &[0, 0]);
            assert!(r.local_maximum);
        }
    }

    #[test]
    fn single_context_is_marginal_argmax() {
        let p = ContextPartition::with_sizes(&[4]).unwrap();
        let s = MixtureBayesSystem::new(p, vec![1.0], vec![vec![vec![0.1, 0.2, 0.6, 0.1]]]).unwrap();
        let start = DPolicy::new(s.partition(), vec![0]).unwrap();
        let r = icm_hill_climb(&s, &start, &IcmConfig { restarts: 0, ..Default::default() }).unwrap();
        assert_eq!(r.policy.assignment(), &[2]);
        let row = s.infer(&PolicyState::empty(), ContextId(0)).unwrap();
        assert!((r.f_mp - row[2].log2()).abs() < 1e-12);
    }

    #[test]
    fn returns_local_maximum_certificate() {
        let s = sauces_system(0.02).unwrap();
        let start = DPolicy::new(s.partition(), vec![2, 2]).unwrap();
        let r = icm_hill_climb(&s, &start, &IcmConfig::default()).unwrap();
        for (_, _, v) in neighbor_values(&s, &r.policy).unwrap() {
            assert!(v <= r.f_mp);
        }
    }
}
