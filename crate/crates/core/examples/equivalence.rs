//! Coherence-only post-training versus SRM across |S_a|, plus a ternary search.

use coherence::experiments::equivalence::{equivalence_study, search_unsupervised_count, EquivalenceConfig};
use coherence::experiments::scenario::ScenarioSpec;

fn main() -> coherence::Result<()> {
    let config = EquivalenceConfig {
        family: ScenarioSpec {
            concentration: 0.5,
            ..ScenarioSpec::new(7, 3, 3, 0)
        },
        lattice: (0..=7).collect(),
        seeds: (0..8).collect(),
        ..Default::default()
    };
    let study = equivalence_study(&config)?;
    println!("{:>4} {:>10} {:>10} {:>12}", "|Sa|", "mean gap", "|gap|", "conjectured");
    for pt in &study.points {
        let rec = pt.recommendation.as_ref().map_or("-".to_string(), |r| format!("{:.2}", r.value));
        println!("{:>4} {:>10.4} {:>10.4} {:>12}", pt.unsupervised, pt.mean_gap, pt.mean_abs_gap, rec);
    }
    println!("argmin |gap|: {}", study.argmin);

    let found = search_unsupervised_count(&config, 1, 7, 20)?;
    println!("ternary search: |S_a| = {} (mean accuracy {:.3}, {} evaluations)", found.argmax, found.value, found.evaluations);
    Ok(())
}
