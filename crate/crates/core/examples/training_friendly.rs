// Training-friendly Gibbs: hold out a random chunk each round and resample it
// independently, optionally anchored to the round-0 state.

use coherence::analysis::diagnostics::{empirical_distribution, tv_distance, Estimator};
use coherence::distribution::softmax_over_coherence;
use coherence::experiments::scenario::{generate_scenario, ScenarioSpec};
use coherence::partition::DPolicy;
use coherence::samplers::{training_friendly_gibbs_run, SamplerConfig};
use coherence::system::{Beta, LearningSystem};

fn main() -> coherence::Result<()> {
    let scenario = generate_scenario(&ScenarioSpec::new(6, 2, 2, 5))?;
    let system = &scenario.system;
    let start = DPolicy::new(system.partition(), vec![0; 6])?;
    let exact = softmax_over_coherence(system, Beta::ONE, 1000)?;

    println!("{:>6} {:>7} {:>10} {:>10}", "gamma", "lambda", "best chi", "tv to X^1");
    for gamma in [0.5, 0.7, 0.85] {
        for lambda in [0.0, 0.3] {
            let config = SamplerConfig {
                gamma,
                anchor_weight: lambda,
                ..SamplerConfig::new(Beta::ONE, 20_000, 1)
            };
            let rec = training_friendly_gibbs_run(system, &start, &config)?;
            let tv = tv_distance(&empirical_distribution(&rec, Estimator::UniformRound, 1000)?, &exact)?;
            println!("{gamma:>6} {lambda:>7} {:>10.4} {tv:>10.4}", rec.best().1);
        }
    }
    Ok(())
}
