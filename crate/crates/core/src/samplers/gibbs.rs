use rand::Rng;

use crate::error::Result;
use crate::partition::{ContextId, DPolicy};
use crate::samplers::record::{RunRecord, SamplerConfig};
use crate::samplers::{conditional, ergodicity_warnings, sample_index, seeded_rng};
use crate::system::{Beta, LearningSystem};

/// Gibbs sampling over d-policies.
///
/// Each step draws a context uniformly and resamples it from σ^β of the
/// leave-one-out state Σ_{m≠n} π_t(s_m). The full state is kept as a counted
/// multiset and updated in place.
pub fn gibbs_run<S: LearningSystem + ?Sized>(system: &S, initial: &DPolicy, config: &SamplerConfig) -> Result<RunRecord> {
    config.validate()?;
    let p = system.partition();
    let initial = DPolicy::new(p, initial.assignment().to_vec())?;
    let warnings = ergodicity_warnings(system, config.beta);
    let mut rng = seeded_rng(config.seed);
    let mut current = initial.clone();
    let mut state = current.state(p);
    let mut trajectory = Vec::with_capacity(config.steps + 1);
    let mut resampled = Vec::with_capacity(config.steps + 1);
    trajectory.push(initial);
    resampled.push(Vec::new());
    for t in 0..config.steps {
        let n = ContextId(rng.random_range(0..p.len()));
        let old = current.behavior(p, n);
        state.remove_behavior(old);
        let row = conditional(system, &state, n, config.beta, t)?;
        let a = sample_index(&mut rng, &row)?;
        current.set(n, a);
        state.add_behavior(p.behavior(n, a));
        trajectory.push(current.clone());
        resampled.push(vec![n]);
    }
    RunRecord::build(system, "gibbs", config, trajectory, resampled, warnings)
}

/// Exact one-step kernel P(π → π') of [`gibbs_run`].
pub fn gibbs_transition_probability<S: LearningSystem + ?Sized>(
    system: &S,
    from: &DPolicy,
    to: &DPolicy,
    beta: Beta,
) -> Result<f64> {
    let p = system.partition();
    let diff: Vec<ContextId> = p.context_ids().filter(|&c| from.get(c) != to.get(c)).collect();
    let k = p.len() as f64;
    let move_prob = |n: ContextId| -> Result<f64> {
        let loo = from.state_excluding(p, n);
        Ok(system.tempered_infer(&loo, n, beta)?[to.get(n)] / k)
    };
    match diff.as_slice() {
        [] => p.context_ids().map(move_prob).sum(),
        [n] => move_prob(*n),
        _ => Ok(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::PolicySpace;
    use crate::system::sauces_system;

    #[test]
    fn single_coordinate_moves_and_determinism() {
        let s = sauces_system(0.01).unwrap();
        let init = DPolicy::new(s.partition(), vec![1, 1]).unwrap();
        let cfg = SamplerConfig::new(Beta::ONE, 500, 42);
        let a = gibbs_run(&s, &init, &cfg).unwrap();
        let b = gibbs_run(&s, &init, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rounds(), 501);
        for t in 1..a.rounds() {
            assert!(a.changed(t).len() <= 1);
        }
        assert!(a.warnings.is_empty());
    }

    #[test]
    fn sauces_without_smoothing_never_reaches_mayo() {
        let s = sauces_system(0.0).unwrap();
        let init = DPolicy::new(s.partition(), vec![1, 1]).unwrap();
        let rec = gibbs_run(&s, &init, &SamplerConfig::new(Beta::ONE, 2000, 7)).unwrap();
        assert!(rec.trajectory.iter().all(|pi| pi.get(ContextId(0)) != 0 && pi.get(ContextId(1)) != 0));
        assert_eq!(rec.warnings.len(), 1);
    }

    #[test]
    fn mayo_mayo_is_absorbing() {
        let s = sauces_system(0.0).unwrap();
        let init = DPolicy::new(s.partition(), vec![0, 0]).unwrap();
        let rec = gibbs_run(&s, &init, &SamplerConfig::new(Beta::ONE, 1000, 3)).unwrap();
        assert!(rec.trajectory.iter().all(|pi| pi.assignment() == [0, 0]));
    }

    #[test]
    fn kernel_rows_sum_to_one() {
        let s = sauces_system(0.02).unwrap();
        let space = PolicySpace::new(s.partition(), 100).unwrap();
        for from in space.iter() {
            let total: f64 = space
                .iter()
                .map(|to| gibbs_transition_probability(&s, &from, &to, Beta::Finite(2.0)).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
