//! Iterative debate on the sauces system.
//!
//! Both sides update simultaneously from the previous round, so the round
//! pairs themselves are not a Gibbs chain; the staggered pairs
//! (pro at t+1, con at t) are.

use coherence::analysis::diagnostics::{empirical_from_policies, tv_distance};
use coherence::distribution::softmax_over_coherence;
use coherence::partition::DPolicy;
use coherence::samplers::{debate_run, debate_run_from, staggered_pairs, SamplerConfig};
use coherence::system::{sauces_system, Beta, LearningSystem};

fn main() -> coherence::Result<()> {
    let s = sauces_system(0.01)?;
    let p = s.partition();
    let rec = debate_run(&s, &SamplerConfig::new(Beta::ONE, 100_000, 3))?;
    let space = rec.policy_space(100)?;
    let x1 = softmax_over_coherence(&s, Beta::ONE, 100)?;
    let rounds = empirical_from_policies(space.clone(), &rec.trajectory)?;
    let pairs = staggered_pairs(&rec);
    let staggered = empirical_from_policies(space, &pairs)?;
    println!("tv(rounds, X^1)    = {:.4}", tv_distance(&rounds, &x1)?);
    println!("tv(staggered, X^1) = {:.4}", tv_distance(&staggered, &x1)?);

    // at beta = inf without smoothing a side holding mayo hands it over every round
    let s0 = sauces_system(0.0)?;
    let start = DPolicy::from_names(s0.partition(), &["burger-mayo", "fries-ketchup"])?;
    let rec = debate_run_from(&s0, &start, &SamplerConfig::new(Beta::Infinite, 6, 0))?;
    for (t, pi) in rec.trajectory.iter().enumerate() {
        println!("t={t}  {}", pi.label(p));
    }
    Ok(())
}
