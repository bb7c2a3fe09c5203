//! Seeded scenarios and the semi-supervised pipelines built on them.

pub mod equivalence;
pub mod pipeline;
pub mod scenario;

pub use equivalence::{equivalence_study, EquivalenceConfig, EquivalenceStudy};
pub use pipeline::{run_semi_supervised, Method, PipelineConfig, PipelineReport};
pub use scenario::{generate_scenario, Scenario, ScenarioSpec};
