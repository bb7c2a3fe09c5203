//! Bound arithmetic under both sign conventions.

use coherence::analysis::bounds::{
    accuracy_lower_bound, conjectured_posttrain_count, optimality_gap, regularization_bound_rhs,
    uniform_convergence_bound, SignConvention,
};
use coherence::partition::{DPolicy, PolicyState};
use coherence::system::{sauces_system, LearningSystem};

fn main() -> coherence::Result<()> {
    let s = sauces_system(0.0)?;
    let pi = DPolicy::from_names(s.partition(), &["burger-mayo", "fries-mayo"])?;
    let g = optimality_gap(&s, &PolicyState::empty(), &pi)?;
    println!("optimality gap G = {g:.7}");

    for sign in [SignConvention::Corrected, SignConvention::Paper] {
        println!("\n{sign} sign");
        for delta in [0.5, 0.1, 0.01] {
            let u = uniform_convergence_bound(0.3f64.log2(), 100, delta, sign)?;
            let a = accuracy_lower_bound(g, 1000, delta, sign)?;
            println!(
                "  delta={delta:<5} uniform={:<22} accuracy>={}",
                if u.valid { format!("{:.5}", u.value) } else { "undefined".into() },
                if a.valid { format!("{:.5}", a.value) } else { "undefined".into() }
            );
        }
    }

    let r = regularization_bound_rhs(0.9, 3.17, 0.5, 10_000, 1e-6)?;
    println!("\nregularization rhs ({}) = {:.5}", r.form, r.value);
    let c = conjectured_posttrain_count(-2.0, -1.5, 0.2, 200)?;
    println!("conjectured posttrain count ({}) = {:.2}", c.form, c.value);
    Ok(())
}
