//! Every pipeline method on a batch of seeded scenarios, against the
//! per-context greedy baseline.

use coherence::experiments::pipeline::{run_semi_supervised, Method, PipelineConfig};
use coherence::experiments::scenario::{generate_scenario, ScenarioSpec};
use coherence::samplers::SamplerConfig;
use coherence::system::Beta;

fn main() -> coherence::Result<()> {
    let seeds = 0..20u64;
    let methods = [Method::Erm, Method::Gibbs, Method::Icm, Method::CoherenceExhaustive, Method::SrmExhaustive];
    let mut totals = vec![0.0; methods.len()];
    for seed in seeds.clone() {
        let spec = ScenarioSpec {
            unsupervised: Some(4),
            concentration: 0.3,
            ..ScenarioSpec::new(8, 3, 2, seed)
        };
        let scenario = generate_scenario(&spec)?;
        let config = PipelineConfig {
            sampler: SamplerConfig::new(Beta::ONE, 2000, seed),
            ..Default::default()
        };
        for (m, total) in methods.iter().zip(&mut totals) {
            *total += run_semi_supervised(&scenario, *m, &config)?.accuracy.unwrap_or(0.0);
        }
    }
    let n = seeds.count() as f64;
    for (m, total) in methods.iter().zip(totals) {
        println!("{:<22} mean accuracy on S_a = {:.3}", m.name(), total / n);
    }
    Ok(())
}
