//! The two-context sauces system: coherence, PMI and the softmax table.

use coherence::coherence::{coherence, pmi};
use coherence::distribution::softmax_over_coherence;
use coherence::partition::{DPolicy, PolicyState};
use coherence::system::{sauces_system, Beta, LearningSystem};

fn main() -> coherence::Result<()> {
    let s = sauces_system(0.0)?;
    let p = s.partition();
    let empty = PolicyState::empty();

    for names in [["burger-mayo", "fries-mayo"], ["burger-mustard", "fries-ketchup"]] {
        let pi = DPolicy::from_names(p, &names)?;
        println!("{:<30} chi = {}  pmi = {:.4}", pi.label(p), coherence(&s, &empty, &pi)?, pmi(&s, &pi)?);
    }

    for beta in [Beta::ONE, Beta::Finite(4.0), Beta::Infinite] {
        let x = softmax_over_coherence(&s, beta, 100)?;
        println!("\nbeta = {beta}");
        for (i, m) in x.ranked() {
            println!("  {:<30} {m:.4}", x.space().policy(i).label(p));
        }
    }
    Ok(())
}
