//! Seeded Monte Carlo check of the uniform-convergence event and the
//! accuracy lower bound of the SRM selection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::bounds::{
    accuracy_lower_bound, gap_from_coherence, srm_select, train_accuracy, uniform_convergence_bound, SignConvention,
};
use crate::analysis::diagnostics::full_agreement;
use crate::coherence::coherence;
use crate::error::{Error, Result};
use crate::experiments::scenario::{generate_scenario, ScenarioSpec};
use crate::partition::{ContextId, PolicySpace, PolicyState, DEFAULT_ENUMERATION_CAP};
use crate::samplers::seeded_rng;
use crate::system::LearningSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub trials: usize,
    /// Trial i uses seed `base_seed + i`.
    pub base_seed: u64,
    /// Training contexts per trial, drawn uniformly with replacement.
    pub n: u64,
    pub delta: f64,
    pub sign: SignConvention,
    /// System family; its seed is replaced per trial.
    pub family: ScenarioSpec,
    /// Worker threads; results do not depend on it.
    pub threads: usize,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            trials: 1000,
            base_seed: 0,
            n: 50,
            delta: 0.1,
            sign: SignConvention::Corrected,
            family: ScenarioSpec::new(4, 3, 2, 0),
            threads: 0,
        }
    }
}

/// One trial: the uniform event over every d-policy and the SRM accuracy check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub seed: u64,
    /// Some policy had |α − α_train| above its bound (or an undefined bound).
    pub violated: bool,
    /// max over π of |α − α_train| − bound(π).
    #[serde(with = "crate::util::float")]
    pub max_excess: f64,
    /// Bound at π*.
    #[serde(with = "crate::util::float")]
    pub bound_at_truth: f64,
    /// max over π of |α − α_train|.
    #[serde(with = "crate::util::float")]
    pub max_gap: f64,
    /// α(π̂; π*) of the SRM selection.
    pub srm_accuracy: f64,
    #[serde(with = "crate::util::float")]
    pub accuracy_lower_bound: f64,
    /// srm_accuracy ≥ accuracy_lower_bound (false when the bound is undefined).
    pub prop2_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub config: MonteCarloConfig,
    pub trials: usize,
    /// Fraction of trials where the uniform event held.
    pub holds_rate: f64,
    pub prop2_rate: f64,
}

pub fn run_trial(config: &MonteCarloConfig, seed: u64) -> Result<TrialRow> {
    let spec = ScenarioSpec {
        seed,
        ..config.family.clone()
    };
    let scenario = generate_scenario(&spec)?;
    let system = &scenario.system;
    let truth = &scenario.ground_truth;
    let p = system.partition();
    let mut rng = seeded_rng(seed);
    rng.set_stream(3);
    let samples: Vec<(ContextId, usize)> = (0..config.n)
        .map(|_| {
            let c = ContextId(rng.random_range(0..p.len()));
            (c, truth.get(c))
        })
        .collect();

    let empty = PolicyState::empty();
    let space = PolicySpace::new(p, DEFAULT_ENUMERATION_CAP)?;
    let mut violated = false;
    let mut max_excess = f64::NEG_INFINITY;
    let mut max_gap: f64 = 0.0;
    let mut bound_at_truth = f64::NAN;
    for pi in space.iter() {
        let chi = coherence(system, &empty, &pi)?.bits;
        let gap = (full_agreement(&pi, truth)?.agreement - train_accuracy(&pi, &samples).unwrap_or(0.0)).abs();
        let bound = uniform_convergence_bound(chi.min(0.0), config.n, config.delta, config.sign)?;
        let excess = if bound.valid { gap - bound.value } else { f64::INFINITY };
        violated |= excess > 0.0;
        max_excess = max_excess.max(excess);
        max_gap = max_gap.max(gap);
        if &pi == truth {
            bound_at_truth = bound.value;
        }
    }

    let sel = srm_select(system, &empty, None, &samples, config.n, config.delta, config.sign, DEFAULT_ENUMERATION_CAP)?;
    let srm_accuracy = full_agreement(&sel.policy, truth)?.agreement;
    let g = gap_from_coherence(coherence(system, &empty, truth)?.bits);
    let lb = accuracy_lower_bound(g, config.n, config.delta, config.sign)?;
    Ok(TrialRow {
        seed,
        violated,
        max_excess,
        bound_at_truth,
        max_gap,
        srm_accuracy,
        accuracy_lower_bound: lb.value,
        prop2_holds: lb.valid && srm_accuracy >= lb.value,
    })
}

/// Runs every trial (in parallel when `threads != 1`) and returns rows in seed order.
pub fn run_monte_carlo(config: &MonteCarloConfig) -> Result<(Vec<TrialRow>, MonteCarloSummary)> {
    if config.trials == 0 {
        return Err(Error::validation("trials", "must be at least 1"));
    }
    if config.n == 0 {
        return Err(Error::validation("n", "must be at least 1"));
    }
    if !(config.delta > 0.0 && config.delta < 1.0) {
        return Err(Error::validation("delta", format!("must lie in (0, 1), got {}", config.delta)));
    }
    let threads = match config.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        t => t,
    }
    .min(config.trials);
    let seeds: Vec<u64> = (0..config.trials as u64).map(|i| config.base_seed + i).collect();
    let chunk = seeds.len().div_ceil(threads);
    let results: Vec<Result<Vec<TrialRow>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|&s| run_trial(config, s)).collect::<Result<Vec<_>>>()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("trial worker panicked")).collect()
    });
    let mut rows = Vec::with_capacity(config.trials);
    for r in results {
        rows.extend(r?);
    }
    let holds = rows.iter().filter(|r| !r.violated).count();
    let prop2 = rows.iter().filter(|r| r.prop2_holds).count();
    let summary = MonteCarloSummary {
        config: config.clone(),
        trials: rows.len(),
        holds_rate: holds as f64 / rows.len() as f64,
        prop2_rate: prop2 as f64 / rows.len() as f64,
    };
    Ok((rows, summary))
}

/// Trial table as CSV.
pub fn trials_csv(rows: &[TrialRow]) -> Vec<u8> {
    use crate::util::fmt_f64;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "seed",
        "violated",
        "max_excess",
        "bound_at_truth",
        "max_gap",
        "srm_accuracy",
        "accuracy_lower_bound",
        "prop2_holds",
    ])
    .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.violated.to_string(),
            fmt_f64(r.max_excess),
            fmt_f64(r.bound_at_truth),
            fmt_f64(r.max_gap),
            fmt_f64(r.srm_accuracy),
            fmt_f64(r.accuracy_lower_bound),
            r.prop2_holds.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_count_does_not_change_rows() {
        let base = MonteCarloConfig {
            trials: 12,
            threads: 1,
            ..Default::default()
        };
        let (a, sa) = run_monte_carlo(&base).unwrap();
        let (b, _) = run_monte_carlo(&MonteCarloConfig { threads: 5, ..base.clone() }).unwrap();
        assert_eq!(a, b);
        assert_eq!(trials_csv(&a), trials_csv(&b));
        assert!((0.0..=1.0).contains(&sa.holds_rate));
    }

    #[test]
    fn paper_sign_runs() {
        let cfg = MonteCarloConfig {
            trials: 5,
            sign: SignConvention::Paper,
            ..Default::default()
        };
        let (rows, _) = run_monte_carlo(&cfg).unwrap();
        assert_eq!(rows.len(), 5);
    }

    #[test]
    fn rejects_bad_delta() {
        let cfg = MonteCarloConfig {
            delta: 1.5,
            ..Default::default()
        };
        assert!(run_monte_carlo(&cfg).is_err());
    }
}
