//! Diagnostics, description-length bounds and their Monte Carlo validation.

pub mod bounds;
pub mod diagnostics;
pub mod montecarlo;

pub use bounds::{
    accuracy_lower_bound, conjectured_posttrain_count, gap_from_coherence, optimality_gap, regularization_bound_rhs,
    srm_select, ternary_search_sample_count, uniform_convergence_bound, BoundReport, SignConvention, SrmSelection,
    TernaryResult,
};
pub use diagnostics::{
    agreement, distribution_entropy, distribution_kl, empirical_distribution, full_agreement, tv_distance,
    AgreementStats, Estimator, KlDivergence,
};
pub use montecarlo::{run_monte_carlo, MonteCarloConfig, MonteCarloSummary, TrialRow};
