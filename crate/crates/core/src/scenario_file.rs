//! TOML scenario files.
//!
//! ```toml
//! [[partition.contexts]]
//! name = "burger"
//! behaviors = ["burger-mayo", "burger-mustard", "burger-other"]
//!
//! [system]
//! kind = "joint"          # or "mixture"
//! joint = [0.3, 0.0, ...] # row-major over the policy space, context 0 slowest
//! epsilon = 0.0
//!
//! [ground_truth]          # optional
//! policy = ["burger-mayo", "fries-mayo"]
//! supervised = ["burger"]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::scenario::{Scenario, ScenarioSpec};
use crate::partition::{Context, ContextId, ContextPartition, DPolicy};
use crate::system::{LearningSystem, MixtureBayesSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub partition: PartitionSection,
    pub system: SystemSection,
    pub ground_truth: Option<GroundTruthSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSection {
    pub contexts: Vec<Context>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemSection {
    /// Explicit latent mixture; `emissions[θ][c][j]`.
    Mixture {
        latent_weights: Vec<f64>,
        emissions: Vec<Vec<Vec<f64>>>,
    },
    /// One latent per d-policy carrying its joint mass.
    Joint {
        joint: Vec<f64>,
        #[serde(default)]
        epsilon: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthSection {
    /// One behavior name per context, in context order.
    pub policy: Vec<String>,
    /// Names of the supervised contexts S_b.
    #[serde(default)]
    pub supervised: Vec<String>,
}

/// A parsed and validated scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScenario {
    pub system: MixtureBayesSystem,
    pub ground_truth: Option<DPolicy>,
    pub supervised: Vec<ContextId>,
}

impl LoadedScenario {
    /// The file as a semi-supervised scenario; needs a ground truth.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let truth = self
            .ground_truth
            .clone()
            .ok_or_else(|| Error::validation("ground_truth", "this command needs a [ground_truth] section"))?;
        let p = self.system.partition();
        let unsupervised: Vec<ContextId> = p.context_ids().filter(|c| !self.supervised.contains(c)).collect();
        let spec = ScenarioSpec {
            contexts: p.len(),
            behaviors: p.shape().into_iter().max().unwrap_or(0),
            latents: self.system.num_latents(),
            unsupervised: Some(unsupervised.len()),
            ..Default::default()
        };
        Ok(Scenario {
            spec,
            system: self.system.clone(),
            ground_truth: truth,
            supervised: self.supervised.clone(),
            unsupervised,
        })
    }
}

pub fn parse_scenario(text: &str) -> Result<LoadedScenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let path = e.span().map_or_else(|| "scenario".to_string(), |s| format!("scenario (bytes {}..{})", s.start, s.end));
        Error::validation(path, e.message().to_string())
    })?;
    build(file)
}

pub fn load_scenario(path: &Path) -> Result<LoadedScenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Validation { path: key, message } => Error::validation(format!("{}: {key}", path.display()), message),
        other => other,
    })
}

fn build(file: ScenarioFile) -> Result<LoadedScenario> {
    let partition = ContextPartition::new(file.partition.contexts)?;
    let system = match file.system {
        SystemSection::Mixture {
            latent_weights,
            emissions,
        } => MixtureBayesSystem::new(partition, latent_weights, emissions)?,
        SystemSection::Joint { joint, epsilon } => MixtureBayesSystem::from_joint_table(partition, &joint, epsilon)?,
    };
    let (ground_truth, supervised) = match file.ground_truth {
        None => (None, Vec::new()),
        Some(gt) => {
            let p = system.partition();
            let pi = DPolicy::from_names(p, &gt.policy)?;
            let mut sup = Vec::with_capacity(gt.supervised.len());
            for (i, name) in gt.supervised.iter().enumerate() {
                let c = p
                    .context_by_name(name)
                    .ok_or_else(|| Error::validation(format!("ground_truth.supervised[{i}]"), format!("unknown context `{name}`")))?;
                if sup.contains(&c) {
                    return Err(Error::validation(format!("ground_truth.supervised[{i}]"), format!("duplicate context `{name}`")));
                }
                sup.push(c);
            }
            sup.sort();
            (Some(pi), sup)
        }
    };
    Ok(LoadedScenario {
        system,
        ground_truth,
        supervised,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::sauces_system;

    const SAUCES: &str = r#"
[[partition.contexts]]
name = "burger"
behaviors = ["burger-mayo", "burger-mustard", "burger-other"]

[[partition.contexts]]
name = "fries"
behaviors = ["fries-mayo", "fries-ketchup", "fries-other"]

[system]
kind = "joint"
joint = [0.3, 0.0, 0.0, 0.0, 0.175, 0.175, 0.0, 0.175, 0.175]

[ground_truth]
policy = ["burger-mayo", "fries-mayo"]
supervised = ["burger"]
"#;

    #[test]
    fn sauces_file_matches_builtin() {
        let s = parse_scenario(SAUCES).unwrap();
        assert_eq!(s.system, sauces_system(0.0).unwrap());
        assert_eq!(s.ground_truth.unwrap().assignment(), &[0, 0]);
        assert_eq!(s.supervised, vec![ContextId(0)]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = SAUCES.replace("kind = \"joint\"", "kind = \"joint\"\nsmoothing = 1");
        assert!(matches!(parse_scenario(&bad), Err(Error::Validation { .. })));
        let bad = SAUCES.replace("[ground_truth]", "[ground_truth]\nextra = 1");
        assert!(parse_scenario(&bad).is_err());
    }

    #[test]
    fn bad_references_are_rejected() {
        assert!(parse_scenario(&SAUCES.replace("supervised = [\"burger\"]", "supervised = [\"soup\"]")).is_err());
        assert!(parse_scenario(&SAUCES.replace("\"fries-mayo\"]\nsup", "\"burger-mayo\"]\nsup")).is_err());
        assert!(parse_scenario(&SAUCES.replace("0.3,", "0.4,")).is_err());
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_scenario(Path::new("/nonexistent/scenario.toml")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/scenario.toml"));
    }

    #[test]
    fn to_scenario_splits_contexts() {
        let s = parse_scenario(SAUCES).unwrap().to_scenario().unwrap();
        assert_eq!(s.unsupervised, vec![ContextId(1)]);
    }
}
