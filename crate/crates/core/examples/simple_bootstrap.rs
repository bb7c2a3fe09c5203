//! Exact output law of the simple bootstrap against the softmax target.

use coherence::analysis::diagnostics::tv_distance;
use coherence::distribution::softmax_over_coherence;
use coherence::experiments::scenario::{generate_scenario, ScenarioSpec};
use coherence::samplers::{bootstrap_distribution, simple_bootstrap_run, ContextOrder, SamplerConfig};
use coherence::system::{Beta, LearningSystem};

fn main() -> coherence::Result<()> {
    let scenario = generate_scenario(&ScenarioSpec::new(3, 3, 2, 8))?;
    let s = &scenario.system;
    let order = ContextOrder::Random;
    for beta in [0.5, 0.8, 0.9, 1.0, 1.1, 1.2, 2.0] {
        let beta = Beta::new(beta)?;
        let sb = bootstrap_distribution(s, &order, beta, 10_000)?;
        let x = softmax_over_coherence(s, beta, 10_000)?;
        println!("beta = {beta:<4} tv(P_SB, X^beta) = {:.3e}", tv_distance(&sb, &x)?);
    }
    let draw = simple_bootstrap_run(s, &order, &SamplerConfig::new(Beta::ONE, 1, 11))?;
    println!("one draw: {} with log2 p = {:.4}", draw.policy.label(s.partition()), draw.log2_probability);
    Ok(())
}
