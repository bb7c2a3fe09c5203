//! Gibbs sampling on a random positive system: the empirical law of the
//! visited policies approaches the exact softmax over coherence.

use coherence::analysis::diagnostics::{empirical_distribution, tv_distance, Estimator};
use coherence::distribution::softmax_over_coherence;
use coherence::experiments::scenario::{generate_scenario, ScenarioSpec};
use coherence::partition::DPolicy;
use coherence::samplers::{gibbs_run, SamplerConfig};
use coherence::system::{Beta, LearningSystem};

fn main() -> coherence::Result<()> {
    let scenario = generate_scenario(&ScenarioSpec::new(3, 3, 2, 42))?;
    let system = &scenario.system;
    let start = DPolicy::new(system.partition(), vec![0, 0, 0])?;

    for beta in [Beta::Finite(0.5), Beta::ONE, Beta::Finite(2.0)] {
        let exact = softmax_over_coherence(system, beta, 1000)?;
        print!("beta = {beta:<4}");
        for steps in [1_000, 10_000, 100_000] {
            let rec = gibbs_run(system, &start, &SamplerConfig::new(beta, steps, 7))?;
            let emp = empirical_distribution(&rec, Estimator::UniformRound, 1000)?;
            print!("  N={steps:<6} tv={:.4}", tv_distance(&emp, &exact)?);
        }
        println!();
    }
    Ok(())
}
