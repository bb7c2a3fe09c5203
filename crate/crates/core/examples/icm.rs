use coherence::coherence::coherence;
use coherence::experiments::scenario::{generate_scenario, ScenarioSpec};
use coherence::partition::{DPolicy, PolicySpace, PolicyState};
use coherence::samplers::{icm_hill_climb, mutual_predictability, IcmConfig};
use coherence::system::LearningSystem;

// Hill climbing on mutual predictability, compared with the exact argmaxes of
// f_MP and of coherence.
fn main() -> coherence::Result<()> {
    for seed in 0..5 {
        let scenario = generate_scenario(&ScenarioSpec::new(5, 3, 2, seed))?;
        let s = &scenario.system;
        let p = s.partition();
        let empty = PolicyState::empty();

        let mut best_fmp = (f64::NEG_INFINITY, None);
        let mut best_chi = (f64::NEG_INFINITY, None);
        for pi in PolicySpace::new(p, 10_000)?.iter() {
            let f = mutual_predictability(s, &pi)?;
            let c = coherence(s, &empty, &pi)?.bits;
            if f > best_fmp.0 {
                best_fmp = (f, Some(pi.clone()));
            }
            if c > best_chi.0 {
                best_chi = (c, Some(pi));
            }
        }
        let start = DPolicy::new(p, vec![0; p.len()])?;
        let r = icm_hill_climb(s, &start, &IcmConfig::default())?;
        println!(
            "seed {seed}: icm {} (f_mp {:.3}) | argmax f_mp {} | argmax chi {}",
            r.policy.label(p),
            r.f_mp,
            best_fmp.1.unwrap().label(p),
            best_chi.1.unwrap().label(p)
        );
    }
    Ok(())
}
