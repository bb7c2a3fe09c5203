use proptest::prelude::*;

use coherence::analysis::diagnostics::agreement;
use coherence::coherence::{coherence, coherence_in_order};
use coherence::distribution::softmax_over_coherence;
use coherence::experiments::pipeline::{run_semi_supervised, Method, PipelineConfig};
use coherence::experiments::scenario::{generate_scenario, ScenarioSpec};
use coherence::partition::{ContextId, PolicySpace, PolicyState};
use coherence::samplers::SamplerConfig;
use coherence::system::{Beta, LearningSystem};

fn spec() -> impl Strategy<Value = ScenarioSpec> {
    (2usize..=4, 2usize..=3, 1usize..=3, any::<u64>()).prop_map(|(c, b, l, seed)| ScenarioSpec::new(c, b, l, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn softmax_is_a_distribution(spec in spec(), beta in 0.1f64..4.0) {
        let s = generate_scenario(&spec).unwrap().system;
        let x = softmax_over_coherence(&s, Beta::new(beta).unwrap(), 10_000).unwrap();
        let total: f64 = x.masses().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(x.masses().iter().all(|m| *m >= 0.0));
    }

    #[test]
    fn coherence_is_the_joint_log_mass(spec in spec()) {
        let s = generate_scenario(&spec).unwrap().system;
        let space = PolicySpace::new(s.partition(), 10_000).unwrap();
        let total: f64 = space
            .iter()
            .map(|pi| coherence(&s, &PolicyState::empty(), &pi).unwrap().bits.exp2())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherence_ignores_context_order(spec in spec()) {
        let scenario = generate_scenario(&spec).unwrap();
        let s = &scenario.system;
        let pi = &scenario.ground_truth;
        let mut order: Vec<ContextId> = s.partition().context_ids().collect();
        order.reverse();
        let a = coherence(s, &PolicyState::empty(), pi).unwrap().bits;
        let b = coherence_in_order(s, &PolicyState::empty(), pi, &order).unwrap().bits;
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn reported_accuracy_is_recomputable(seed in any::<u64>(), method_ix in 0usize..Method::ALL.len()) {
        let spec = ScenarioSpec { unsupervised: Some(2), ..ScenarioSpec::new(4, 3, 2, seed) };
        let scenario = generate_scenario(&spec).unwrap();
        let config = PipelineConfig { sampler: SamplerConfig::new(Beta::ONE, 200, seed), ..Default::default() };
        let report = run_semi_supervised(&scenario, Method::ALL[method_ix], &config).unwrap();
        let recomputed = agreement(&report.policy, &scenario.ground_truth, &scenario.unsupervised).unwrap().agreement;
        prop_assert_eq!(report.accuracy, Some(recomputed));
        for c in &scenario.supervised {
            prop_assert_eq!(report.policy.get(*c), scenario.ground_truth.get(*c));
        }
    }
}
