// Loads a scenario file given on the command line (default: the sauces file)
// and prints its partition and marginals.

use std::path::PathBuf;

use coherence::partition::PolicyState;
use coherence::scenario_file::load_scenario;
use coherence::system::LearningSystem;

fn main() -> coherence::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/sauces.toml")));
    let loaded = load_scenario(&path)?;
    let s = &loaded.system;
    let p = s.partition();
    println!("{} contexts, {} latents", p.len(), s.num_latents());
    for c in p.context_ids() {
        let row = s.infer(&PolicyState::empty(), c)?;
        let cells: Vec<String> = p.context(c).behaviors.iter().zip(&row).map(|(b, q)| format!("{b}={q:.3}")).collect();
        println!("  {}: {}", p.context(c).name, cells.join(" "));
    }
    if let Some(truth) = &loaded.ground_truth {
        println!("ground truth {}", truth.label(p));
    }
    Ok(())
}
