use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::coherence::coherence;
use crate::error::{Error, Result};
use crate::partition::{ContextId, DPolicy, PolicySpace, PolicyState};
use crate::samplers::icm::mutual_predictability;
use crate::system::{Beta, LearningSystem};
use crate::util::fmt_f64;

/// Shared configuration of every sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub beta: Beta,
    /// Number of rounds N.
    pub steps: usize,
    pub seed: u64,
    /// Retained fraction γ for the training-friendly variant.
    pub gamma: f64,
    /// Anchor weight λ for the training-friendly variant.
    pub anchor_weight: f64,
    pub burn_in: usize,
    pub thin: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            beta: Beta::ONE,
            steps: 1000,
            seed: 0,
            gamma: 0.85,
            anchor_weight: 0.0,
            burn_in: 0,
            thin: 1,
        }
    }
}

impl SamplerConfig {
    pub fn new(beta: Beta, steps: usize, seed: u64) -> Self {
        SamplerConfig {
            beta,
            steps,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::validation("steps", "must be at least 1"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::validation("gamma", format!("must lie in (0, 1), got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.anchor_weight) {
            return Err(Error::validation(
                "anchor_weight",
                format!("must lie in [0, 1], got {}", self.anchor_weight),
            ));
        }
        if self.thin == 0 {
            return Err(Error::validation("thin", "must be at least 1"));
        }
        if let Beta::Finite(b) = self.beta {
            Beta::new(b)?;
        }
        Ok(())
    }
}

/// A seeded sampler trajectory π_0, …, π_N with per-round metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub method: String,
    pub config: SamplerConfig,
    pub shape: Vec<usize>,
    pub trajectory: Vec<DPolicy>,
    /// Contexts resampled to produce each round; empty for round 0.
    pub resampled: Vec<Vec<ContextId>>,
    #[serde(with = "crate::util::float::vec")]
    pub coherence: Vec<f64>,
    pub warnings: Vec<String>,
}

impl RunRecord {
    /// Builds the record and evaluates χ per round, caching repeated policies.
    pub fn build<S: LearningSystem + ?Sized>(
        system: &S,
        method: &str,
        config: &SamplerConfig,
        trajectory: Vec<DPolicy>,
        resampled: Vec<Vec<ContextId>>,
        warnings: Vec<String>,
    ) -> Result<Self> {
        debug_assert_eq!(trajectory.len(), resampled.len());
        let mut cache: HashMap<DPolicy, f64> = HashMap::new();
        let empty = PolicyState::empty();
        let mut chi = Vec::with_capacity(trajectory.len());
        for pi in &trajectory {
            let v = match cache.get(pi) {
                Some(&v) => v,
                None => {
                    let v = coherence(system, &empty, pi)?.bits;
                    cache.insert(pi.clone(), v);
                    v
                }
            };
            chi.push(v);
        }
        Ok(RunRecord {
            method: method.to_string(),
            config: config.clone(),
            shape: system.partition().shape(),
            trajectory,
            resampled,
            coherence: chi,
            warnings,
        })
    }

    pub fn rounds(&self) -> usize {
        self.trajectory.len()
    }

    pub fn last(&self) -> &DPolicy {
        self.trajectory.last().expect("trajectory holds at least π_0")
    }

    /// The first visited policy attaining the highest coherence.
    pub fn best(&self) -> (&DPolicy, f64) {
        let mut best = 0;
        for (i, &c) in self.coherence.iter().enumerate() {
            if c > self.coherence[best] {
                best = i;
            }
        }
        (&self.trajectory[best], self.coherence[best])
    }

    /// Contexts whose behavior differs from the previous round.
    pub fn changed(&self, round: usize) -> Vec<ContextId> {
        if round == 0 {
            return Vec::new();
        }
        let (prev, cur) = (&self.trajectory[round - 1], &self.trajectory[round]);
        (0..cur.len())
            .map(ContextId)
            .filter(|&c| prev.get(c) != cur.get(c))
            .collect()
    }

    pub fn policy_space(&self, cap: u64) -> Result<PolicySpace> {
        PolicySpace::from_shape(&self.shape, cap)
    }

    /// Trajectory table with a `#`-prefixed metadata header.
    ///
    /// Columns: `round,resampled,context_changed,policy,coherence,f_mp`; the
    /// `f_mp` column is empty unless `with_f_mp` is set.
    pub fn write_csv<S: LearningSystem + ?Sized, W: Write>(&self, system: &S, with_f_mp: bool, mut out: W) -> Result<()> {
        let p = system.partition();
        let header = serde_json::json!({
            "method": self.method,
            "config": self.config,
            "shape": self.shape,
            "rounds": self.rounds(),
            "warnings": self.warnings,
        });
        let io = |e: std::io::Error| Error::Config(format!("trajectory write failed: {e}"));
        writeln!(out, "# {header}").map_err(io)?;
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Config(format!("trajectory write failed: {e}"));
        w.write_record(["round", "resampled", "context_changed", "policy", "coherence", "f_mp"])
            .map_err(csv_err)?;
        let mut fmp_cache: HashMap<&DPolicy, f64> = HashMap::new();
        let names = |cs: &[ContextId]| {
            cs.iter()
                .map(|&c| p.context(c).name.as_str())
                .collect::<Vec<_>>()
                .join(";")
        };
        for (t, pi) in self.trajectory.iter().enumerate() {
            let fmp = if with_f_mp {
                let v = match fmp_cache.get(pi) {
                    Some(&v) => v,
                    None => {
                        let v = mutual_predictability(system, pi)?;
                        fmp_cache.insert(pi, v);
                        v
                    }
                };
                fmt_f64(v)
            } else {
                String::new()
            };
            w.write_record([
                t.to_string(),
                names(&self.resampled[t]),
                names(&self.changed(t)),
                pi.label(p),
                fmt_f64(self.coherence[t]),
                fmp,
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }
}
