use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::partition::{ContextId, DPolicy, PolicyState};
use crate::samplers::record::{RunRecord, SamplerConfig};
use crate::samplers::{conditional, ergodicity_warnings, sample_index, seeded_rng};
use crate::system::LearningSystem;

const PRO: ContextId = ContextId(0);
const CON: ContextId = ContextId(1);

/// Iterative debate between context 0 (pro) and context 1 (con).
///
/// a_pro^(0) is drawn from σ^β(0, s_pro) and a_con^(0) from
/// σ^β(a_pro^(0), s_con). Round t+1 then draws a_con from σ^β(a_pro^(t)) and
/// a_pro from σ^β(a_con^(t)), both from round-t values.
pub fn debate_run<S: LearningSystem + ?Sized>(system: &S, config: &SamplerConfig) -> Result<RunRecord> {
    config.validate()?;
    check_two_contexts(system)?;
    let p = system.partition();
    let mut rng = seeded_rng(config.seed);
    let pro0 = sample_index(&mut rng, &conditional(system, &PolicyState::empty(), PRO, config.beta, 0)?)?;
    let given_pro = PolicyState::from_behaviors([p.behavior(PRO, pro0)]);
    let con0 = sample_index(&mut rng, &conditional(system, &given_pro, CON, config.beta, 0)?)?;
    let initial = DPolicy::new(p, vec![pro0, con0])?;
    run_rounds(system, initial, config, &mut rng)
}

/// Debate rounds from a given (pro, con) pair instead of the sampled opening.
pub fn debate_run_from<S: LearningSystem + ?Sized>(system: &S, initial: &DPolicy, config: &SamplerConfig) -> Result<RunRecord> {
    config.validate()?;
    check_two_contexts(system)?;
    let initial = DPolicy::new(system.partition(), initial.assignment().to_vec())?;
    let mut rng = seeded_rng(config.seed);
    run_rounds(system, initial, config, &mut rng)
}

fn check_two_contexts<S: LearningSystem + ?Sized>(system: &S) -> Result<()> {
    let n = system.partition().len();
    if n != 2 {
        return Err(Error::Config(format!("debate needs exactly 2 contexts, the partition has {n}")));
    }
    Ok(())
}

fn run_rounds<S: LearningSystem + ?Sized>(
    system: &S,
    initial: DPolicy,
    config: &SamplerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RunRecord> {
    let p = system.partition();
    let warnings = ergodicity_warnings(system, config.beta);
    let mut current = initial;
    let mut trajectory = Vec::with_capacity(config.steps + 1);
    let mut resampled = Vec::with_capacity(config.steps + 1);
    trajectory.push(current.clone());
    resampled.push(Vec::new());
    for t in 0..config.steps {
        let pro_state = PolicyState::from_behaviors([current.behavior(p, PRO)]);
        let con_state = PolicyState::from_behaviors([current.behavior(p, CON)]);
        let con = sample_index(rng, &conditional(system, &pro_state, CON, config.beta, t + 1)?)?;
        let pro = sample_index(rng, &conditional(system, &con_state, PRO, config.beta, t + 1)?)?;
        current = DPolicy::new(p, vec![pro, con])?;
        trajectory.push(current.clone());
        resampled.push(vec![PRO, CON]);
    }
    RunRecord::build(system, "debate", config, trajectory, resampled, warnings)
}

/// Pairs (a_pro^(t+1), a_con^(t)), which follow the alternating Gibbs chain.
pub fn staggered_pairs(record: &RunRecord) -> Vec<DPolicy> {
    record
        .trajectory
        .windows(2)
        .map(|w| DPolicy::from_raw(vec![w[1].get(PRO), w[0].get(CON)]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::ContextPartition;
    use crate::system::{sauces_system, Beta, MixtureBayesSystem};

    #[test]
    fn rejects_wrong_arity() {
        let p = ContextPartition::with_sizes(&[2, 2, 2]).unwrap();
        let s = MixtureBayesSystem::new(p, vec![1.0], vec![vec![vec![0.5, 0.5]; 3]]).unwrap();
        assert!(matches!(debate_run(&s, &SamplerConfig::default()), Err(Error::Config(_))));
    }

    #[test]
    fn point_mass_conditionals_give_a_two_cycle_or_fixed_point() {
        // two latents, each pinning one behavior per context
        let p = ContextPartition::with_sizes(&[2, 2]).unwrap();
        let s = MixtureBayesSystem::new(
            p,
            vec![0.5, 0.5],
            vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.0, 1.0], vec![1.0, 0.0]]],
        )
        .unwrap();
        for seed in 0..10 {
            let rec = debate_run(&s, &SamplerConfig::new(Beta::ONE, 20, seed)).unwrap();
            for t in 1..rec.rounds() - 2 {
                assert_eq!(rec.trajectory[t], rec.trajectory[t + 2]);
            }
        }
    }

    #[test]
    fn infinite_beta_mayo_mayo_is_absorbing() {
        let s = sauces_system(0.0).unwrap();
        let start = DPolicy::new(s.partition(), vec![0, 0]).unwrap();
        let rec = debate_run_from(&s, &start, &SamplerConfig::new(Beta::Infinite, 50, 1)).unwrap();
        assert!(rec.trajectory.iter().all(|pi| pi.assignment() == [0, 0]));
    }

    #[test]
    fn infinite_beta_mayo_ketchup_oscillates() {
        // synchronous updates swap which side holds mayo instead of absorbing
        let s = sauces_system(0.0).unwrap();
        let start = DPolicy::new(s.partition(), vec![0, 1]).unwrap();
        let rec = debate_run_from(&s, &start, &SamplerConfig::new(Beta::Infinite, 40, 1)).unwrap();
        for (t, pi) in rec.trajectory.iter().enumerate() {
            let mayo_side = if t % 2 == 0 { PRO } else { CON };
            assert_eq!(pi.get(mayo_side), 0);
            assert_ne!(pi.assignment(), [0, 0]);
        }
        // the staggered chain through pro_0 = mayo is the absorbed one
        let pairs = staggered_pairs(&rec);
        for (t, pi) in pairs.iter().enumerate() {
            assert_eq!(pi.assignment() == [0, 0], t % 2 == 1);
        }
    }
}
