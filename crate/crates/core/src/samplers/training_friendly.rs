use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::partition::{ContextId, DPolicy, PolicyState};
use crate::samplers::record::{RunRecord, SamplerConfig};
use crate::samplers::{conditional, ergodicity_warnings, sample_index, seeded_rng};
use crate::system::LearningSystem;

/// Training-friendly Gibbs: leave a random chunk out instead of one context.
///
/// Each round retains ⌊γ|S|⌋ contexts Ŝ_t (a seeded Fisher–Yates prefix),
/// forms φ_t = Σ_{s∈Ŝ_t} π_t(s) and resamples every other context
/// independently from λ·σ^β(φ_0, s) + (1−λ)·σ^β(φ_t, s), where φ_0 is the
/// retained state of round 0.
pub fn training_friendly_gibbs_run<S: LearningSystem + ?Sized>(
    system: &S,
    initial: &DPolicy,
    config: &SamplerConfig,
) -> Result<RunRecord> {
    config.validate()?;
    let p = system.partition();
    let initial = DPolicy::new(p, initial.assignment().to_vec())?;
    let retained = (config.gamma * p.len() as f64).floor() as usize;
    if retained == 0 {
        return Err(Error::validation(
            "gamma",
            format!("floor(gamma * |S|) = 0 for gamma = {} and |S| = {}", config.gamma, p.len()),
        ));
    }
    let lambda = config.anchor_weight;
    let warnings = ergodicity_warnings(system, config.beta);
    let mut rng = seeded_rng(config.seed);
    let mut current = initial.clone();
    let mut anchor: Option<PolicyState> = None;
    let mut trajectory = Vec::with_capacity(config.steps + 1);
    let mut resampled = Vec::with_capacity(config.steps + 1);
    trajectory.push(initial);
    resampled.push(Vec::new());
    for t in 0..config.steps {
        let mut order: Vec<ContextId> = p.context_ids().collect();
        let (kept, _) = order.partial_shuffle(&mut rng, retained);
        let mut kept = kept.to_vec();
        kept.sort();
        let phi_t = current.state_over(p, &kept);
        let phi_0 = anchor.get_or_insert_with(|| phi_t.clone()).clone();
        let held: Vec<ContextId> = p.context_ids().filter(|c| !kept.contains(c)).collect();
        let mut next = current.clone();
        for &n in &held {
            let row = if lambda == 0.0 {
                conditional(system, &phi_t, n, config.beta, t)?
            } else if lambda == 1.0 {
                conditional(system, &phi_0, n, config.beta, t)?
            } else {
                let base = conditional(system, &phi_0, n, config.beta, t)?;
                let cur = conditional(system, &phi_t, n, config.beta, t)?;
                base.iter().zip(&cur).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect()
            };
            next.set(n, sample_index(&mut rng, &row)?);
        }
        current = next;
        trajectory.push(current.clone());
        resampled.push(held);
    }
    RunRecord::build(system, "tf-gibbs", config, trajectory, resampled, warnings)
}
