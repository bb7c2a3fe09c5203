//! Description-length bounds: uniform convergence, optimality gap, the
//! accuracy lower bound, structural risk minimization, the regularization
//! bound, the posttrain sample-count conjecture and integer ternary search.

use std::collections::BTreeMap;
use std::f64::consts::LOG2_E;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::coherence::coherence;
use crate::error::{Error, Result};
use crate::partition::{ContextId, DPolicy, PolicySpace, PolicyState};
use crate::system::LearningSystem;

/// Sign of the log2(1/δ) term inside the radicands.
///
/// `Paper` subtracts it; `Corrected` adds it, as a concentration
/// bound requires (the bound must widen as δ shrinks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    Paper,
    #[default]
    Corrected,
}

impl SignConvention {
    fn sign(self) -> f64 {
        match self {
            SignConvention::Paper => -1.0,
            SignConvention::Corrected => 1.0,
        }
    }
}

impl fmt::Display for SignConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignConvention::Paper => "paper",
            SignConvention::Corrected => "corrected",
        })
    }
}

impl std::str::FromStr for SignConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(SignConvention::Paper),
            "corrected" => Ok(SignConvention::Corrected),
            other => Err(Error::validation("sign", format!("expected `paper` or `corrected`, got `{other}`"))),
        }
    }
}

/// A bound value with every input echoed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub kind: String,
    #[serde(with = "crate::util::float")]
    pub value: f64,
    /// False when the radicand is negative and the formula is undefined.
    pub valid: bool,
    /// True when the value carries no information (e.g. a gap bound ≥ 1).
    pub vacuous: bool,
    pub form: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sign: Option<SignConvention>,
    pub inputs: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(crate::util::fmt_f64(x))
    }
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        Err(Error::validation("n", "must be at least 1"))
    } else {
        Ok(())
    }
}

fn check_delta(delta: f64, allow_one: bool) -> Result<()> {
    let ok = delta > 0.0 && (delta < 1.0 || (allow_one && delta == 1.0));
    if ok {
        Ok(())
    } else {
        Err(Error::validation("delta", format!("must lie in (0, 1), got {delta}")))
    }
}

/// √((−2χ + log2 e ± log2(1/δ)) / (2N)).
///
/// δ = 1 is accepted as the degenerate case where the log term vanishes.
pub fn uniform_convergence_bound(chi: f64, n: u64, delta: f64, sign: SignConvention) -> Result<BoundReport> {
    check_n(n)?;
    check_delta(delta, true)?;
    if chi > 1e-12 || chi.is_nan() {
        return Err(Error::validation("chi", format!("coherence must be <= 0, got {chi}")));
    }
    let radicand = -2.0 * chi + LOG2_E + sign.sign() * (1.0 / delta).log2();
    let valid = radicand >= 0.0;
    let value = if valid { (radicand / (2.0 * n as f64)).sqrt() } else { f64::NAN };
    Ok(BoundReport {
        kind: "uniform-convergence".into(),
        value,
        valid,
        vacuous: valid && value >= 1.0,
        form: "finite-sample".into(),
        sign: Some(sign),
        inputs: BTreeMap::from([
            ("chi".into(), num(chi)),
            ("n".into(), json!(n)),
            ("delta".into(), json!(delta)),
        ]),
        note: (!valid).then(|| format!("negative radicand {radicand}: the bound is undefined under the {sign} sign")),
    })
}

/// G = −2χ + log2 e; +∞ when χ = −∞.
pub fn gap_from_coherence(chi: f64) -> f64 {
    -2.0 * chi + LOG2_E
}

/// G(φ; π*) = −2χ_φ(π*) + log2 e.
pub fn optimality_gap<S: LearningSystem + ?Sized>(system: &S, prior: &PolicyState, ground_truth: &DPolicy) -> Result<f64> {
    Ok(gap_from_coherence(coherence(system, prior, ground_truth)?.bits))
}

/// 1 − √((2G ± 2·log2(1/δ)) / N).
pub fn accuracy_lower_bound(gap: f64, n: u64, delta: f64, sign: SignConvention) -> Result<BoundReport> {
    check_n(n)?;
    check_delta(delta, true)?;
    if gap.is_nan() {
        return Err(Error::validation("gap", "must be a number"));
    }
    let radicand = 2.0 * gap + sign.sign() * 2.0 * (1.0 / delta).log2();
    let valid = radicand >= 0.0;
    let value = if valid { 1.0 - (radicand / n as f64).sqrt() } else { f64::NAN };
    Ok(BoundReport {
        kind: "accuracy-lower-bound".into(),
        value,
        valid,
        vacuous: valid && value <= 0.0,
        form: "finite-sample".into(),
        sign: Some(sign),
        inputs: BTreeMap::from([
            ("gap".into(), num(gap)),
            ("n".into(), json!(n)),
            ("delta".into(), json!(delta)),
        ]),
        note: (!valid).then(|| format!("negative radicand {radicand}: the bound is undefined under the {sign} sign")),
    })
}

/// reg(π) for SRM; a negative radicand (possible under the paper sign) is clamped to 0.
pub fn srm_regularizer(chi: f64, n: u64, delta: f64, sign: SignConvention) -> f64 {
    if chi == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let radicand = -2.0 * chi + LOG2_E + sign.sign() * (1.0 / delta).log2();
    (radicand.max(0.0) / (2.0 * n as f64)).sqrt()
}

/// Labelled training samples: (context, local behavior index), drawn with replacement.
pub type TrainSamples = [(ContextId, usize)];

/// α_train(π): fraction of samples whose label π reproduces.
pub fn train_accuracy(policy: &DPolicy, samples: &TrainSamples) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let hits = samples.iter().filter(|&&(c, a)| policy.get(c) == a).count();
    Some(hits as f64 / samples.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SrmSelection {
    pub policy: DPolicy,
    #[serde(with = "crate::util::float")]
    pub objective: f64,
    #[serde(with = "crate::util::float")]
    pub chi: f64,
    #[serde(with = "crate::util::float")]
    pub regularizer: f64,
    #[serde(with = "crate::util::float::option")]
    pub train_accuracy: Option<f64>,
}

/// argmax of α_train(π) − reg(π) with ties to higher χ_φ, then lower policy index.
///
/// With no training samples the objective is χ_φ alone. `candidates = None`
/// enumerates the whole policy space within `cap`.
#[allow(clippy::too_many_arguments)]
pub fn srm_select<S: LearningSystem + ?Sized>(
    system: &S,
    prior: &PolicyState,
    candidates: Option<&[DPolicy]>,
    samples: &TrainSamples,
    n: u64,
    delta: f64,
    sign: SignConvention,
    cap: u64,
) -> Result<SrmSelection> {
    check_n(n)?;
    check_delta(delta, false)?;
    let p = system.partition();
    for (i, &(c, a)) in samples.iter().enumerate() {
        if c.0 >= p.len() || a >= p.context_size(c) {
            return Err(Error::validation(format!("train_samples[{i}]"), "invalid (context, behavior) pair"));
        }
    }
    let space = PolicySpace::new(p, u64::MAX)?;
    let owned: Vec<DPolicy>;
    let candidates = match candidates {
        Some(c) => c,
        None => {
            owned = PolicySpace::new(p, cap)?.iter().collect();
            &owned
        }
    };
    if candidates.is_empty() {
        return Err(Error::validation("candidates", "candidate set is empty"));
    }
    let mut best: Option<(SrmSelection, usize)> = None;
    for pi in candidates {
        let pi = DPolicy::new(p, pi.assignment().to_vec())?;
        let chi = coherence(system, prior, &pi)?.bits;
        let reg = srm_regularizer(chi, n, delta, sign);
        let acc = train_accuracy(&pi, samples);
        let objective = match acc {
            Some(a) => a - reg,
            None => chi,
        };
        let idx = space.index_of(&pi);
        let better = match &best {
            None => true,
            Some((b, bi)) => {
                objective > b.objective
                    || (objective == b.objective && (chi > b.chi || (chi == b.chi && idx < *bi)))
            }
        };
        if better {
            best = Some((
                SrmSelection {
                    policy: pi,
                    objective,
                    chi,
                    regularizer: reg,
                    train_accuracy: acc,
                },
                idx,
            ));
        }
    }
    Ok(best.expect("non-empty candidates").0)
}

/// E_Q[α] − √(2L/N) + √(2/(N·L))·(H[Q] − KL[Q‖P]), L = log2(1/δ), o(1) dropped.
pub fn regularization_bound_rhs(alpha_q: f64, entropy: f64, kl: f64, n: u64, delta: f64) -> Result<BoundReport> {
    check_n(n)?;
    check_delta(delta, false)?;
    let l = (1.0 / delta).log2();
    let nf = n as f64;
    let value = alpha_q - (2.0 * l / nf).sqrt() + (2.0 / (nf * l)).sqrt() * (entropy - kl);
    Ok(BoundReport {
        kind: "regularization-optimality".into(),
        value,
        valid: value.is_finite() || value == f64::NEG_INFINITY,
        vacuous: value <= 0.0,
        form: "asymptotic form".into(),
        sign: None,
        inputs: BTreeMap::from([
            ("alpha_q".into(), num(alpha_q)),
            ("entropy".into(), num(entropy)),
            ("kl".into(), num(kl)),
            ("n".into(), json!(n)),
            ("delta".into(), json!(delta)),
        ]),
        note: Some("o(1) term dropped; valid for log2(1/delta) large relative to the prior code length".into()),
    })
}

/// Conjectured posttrain sample count
/// ¼ · pre² / |post| · (1 / (1 − α^b))² · |S_b|.
///
/// `mean_pretrain_coh` and `mean_posttrain_coh` are per-sample coherences in
/// bits (signs ignored); `pretrain_agreement` is α^b ∈ [0, 1).
pub fn conjectured_posttrain_count(
    mean_pretrain_coh: f64,
    mean_posttrain_coh: f64,
    pretrain_agreement: f64,
    pretrain_count: u64,
) -> Result<BoundReport> {
    if !(0.0..1.0).contains(&pretrain_agreement) {
        return Err(Error::validation(
            "pretrain_agreement",
            format!("must lie in [0, 1) (the formula is undefined at 1), got {pretrain_agreement}"),
        ));
    }
    if mean_posttrain_coh == 0.0 || !mean_posttrain_coh.is_finite() {
        return Err(Error::validation("mean_posttrain_coh", "must be finite and non-zero"));
    }
    if !mean_pretrain_coh.is_finite() {
        return Err(Error::validation("mean_pretrain_coh", "must be finite"));
    }
    let ratio = mean_pretrain_coh.powi(2) / mean_posttrain_coh.abs();
    let error_factor = (1.0 / (1.0 - pretrain_agreement)).powi(2);
    let value = 0.25 * ratio * error_factor * pretrain_count as f64;
    Ok(BoundReport {
        kind: "posttrain-sample-count".into(),
        value,
        valid: true,
        vacuous: false,
        form: "conjectural".into(),
        sign: None,
        inputs: BTreeMap::from([
            ("mean_pretrain_coh".into(), num(mean_pretrain_coh)),
            ("mean_posttrain_coh".into(), num(mean_posttrain_coh)),
            ("pretrain_agreement".into(), json!(pretrain_agreement)),
            ("pretrain_count".into(), json!(pretrain_count)),
        ]),
        note: Some("conjectural recommendation, not a guarantee".into()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TernaryResult {
    pub argmax: i64,
    pub value: f64,
    /// Distinct lattice points evaluated.
    pub evaluations: usize,
    /// Final bracket scanned exhaustively.
    pub bracket: (i64, i64),
}

/// Ternary search for the maximum of a unimodal objective on [lo, hi] ∩ ℤ.
///
/// Evaluations are memoized. The bracket shrinks for at most `iters` rounds
/// (or until it spans ≤ 3 points) and is then scanned; ties go to the lowest
/// index.
pub fn ternary_search_sample_count<F: FnMut(i64) -> Result<f64>>(
    mut objective: F,
    lo: i64,
    hi: i64,
    iters: usize,
) -> Result<TernaryResult> {
    if lo >= hi {
        return Err(Error::validation("bracket", format!("need lo < hi, got [{lo}, {hi}]")));
    }
    let mut memo: BTreeMap<i64, f64> = BTreeMap::new();
    let mut eval = |x: i64| -> Result<f64> {
        if let Some(&v) = memo.get(&x) {
            return Ok(v);
        }
        let v = objective(x)?;
        if !v.is_finite() {
            return Err(Error::NonFinite { point: x, value: v });
        }
        memo.insert(x, v);
        Ok(v)
    };
    let (mut l, mut h) = (lo, hi);
    for _ in 0..iters {
        if h - l <= 2 {
            break;
        }
        let m1 = l + (h - l) / 3;
        let m2 = h - (h - l) / 3;
        let (f1, f2) = (eval(m1)?, eval(m2)?);
        if f1 < f2 {
            l = m1 + 1;
        } else if f1 > f2 {
            h = m2 - 1;
        } else {
            l = m1;
            h = m2;
        }
    }
    let mut best = (l, eval(l)?);
    for x in l + 1..=h {
        let v = eval(x)?;
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(TernaryResult {
        argmax: best.0,
        value: best.1,
        evaluations: memo.len(),
        bracket: (l, h),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::sauces_system;

    #[test]
    fn uniform_bound_examples() {
        let r = uniform_convergence_bound(0.0, 10, 1.0, SignConvention::Corrected).unwrap();
        assert!((r.value - (LOG2_E / 20.0).sqrt()).abs() < 1e-15);
        let chi = 0.3f64.log2();
        let r = uniform_convergence_bound(chi, 100, 0.05, SignConvention::Corrected).unwrap();
        let expect = ((2.0f64 * 1.7369655941662063 + std::f64::consts::LOG2_E + 4.321928094887363) / 200.0).sqrt();
        assert!((r.value - expect).abs() < 1e-12);
        let a = uniform_convergence_bound(-10.0, 25, 0.5, SignConvention::Corrected).unwrap();
        let b = uniform_convergence_bound(-10.0, 25, 0.5, SignConvention::Paper).unwrap();
        assert!(((a.value.powi(2) - b.value.powi(2)) - 2.0 / 50.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_bound_flags_negative_radicand() {
        let r = uniform_convergence_bound(0.0, 10, 1e-3, SignConvention::Paper).unwrap();
        assert!(!r.valid && r.value.is_nan() && r.note.is_some());
        assert!(uniform_convergence_bound(0.0, 10, 0.0, SignConvention::Paper).is_err());
        assert!(uniform_convergence_bound(0.0, 0, 0.5, SignConvention::Paper).is_err());
    }

    #[test]
    fn gap_examples() {
        assert!((gap_from_coherence(0.0) - LOG2_E).abs() < 1e-15);
        let s = sauces_system(0.0).unwrap();
        let pi = DPolicy::new(s.partition(), vec![0, 0]).unwrap();
        let g = optimality_gap(&s, &PolicyState::empty(), &pi).unwrap();
        assert!((g - 4.916626229221376).abs() < 1e-9);
        let bad = DPolicy::new(s.partition(), vec![0, 1]).unwrap();
        assert_eq!(optimality_gap(&s, &PolicyState::empty(), &bad).unwrap(), f64::INFINITY);
    }

    #[test]
    fn accuracy_bound_examples() {
        let g = (0.05f64.recip()).log2();
        let r = accuracy_lower_bound(g, 100, 0.05, SignConvention::Paper).unwrap();
        assert_eq!(r.value, 1.0);
        let r = accuracy_lower_bound(4.9166263, 1000, 0.05, SignConvention::Corrected).unwrap();
        assert!((r.value - (1.0 - ((9.8332526 + 8.6438562) / 1000f64).sqrt())).abs() < 1e-6);
        let big = accuracy_lower_bound(4.9, 1_000_000_000, 0.05, SignConvention::Corrected).unwrap();
        assert!(big.value > 0.999);
    }

    #[test]
    fn srm_on_sauces() {
        let s = sauces_system(0.0).unwrap();
        let sel = srm_select(
            &s,
            &PolicyState::empty(),
            None,
            &[(ContextId(0), 0)],
            1,
            0.5,
            SignConvention::Corrected,
            1000,
        )
        .unwrap();
        assert_eq!(sel.policy.assignment(), &[0, 0]);
        let pure = srm_select(&s, &PolicyState::empty(), None, &[], 1, 0.5, SignConvention::Corrected, 1000).unwrap();
        assert_eq!(pure.policy.assignment(), &[0, 0]);
        let one = [DPolicy::new(s.partition(), vec![2, 1]).unwrap()];
        let sel = srm_select(&s, &PolicyState::empty(), Some(&one), &[], 1, 0.5, SignConvention::Corrected, 1000).unwrap();
        assert_eq!(sel.policy, one[0]);
        assert!(srm_select(&s, &PolicyState::empty(), Some(&[]), &[], 1, 0.5, SignConvention::Corrected, 1000).is_err());
    }

    #[test]
    fn regularization_bound_examples() {
        let r = regularization_bound_rhs(0.7, 2.0, 2.0, 100, 0.01).unwrap();
        assert!((r.value - (0.7 - (2.0 * 100f64.log2() / 100.0).sqrt())).abs() < 1e-12);
        let lo = regularization_bound_rhs(0.9, 3.17, 0.5, 10_000, 1e-6).unwrap();
        let hi = regularization_bound_rhs(0.9, 3.17, 1.5, 10_000, 1e-6).unwrap();
        assert!(lo.value > hi.value);
        assert_eq!(lo.form, "asymptotic form");
    }

    #[test]
    fn posttrain_count_examples() {
        let r = conjectured_posttrain_count(1.0, 1.0, 0.0, 100).unwrap();
        assert!((r.value - 25.0).abs() < 1e-12);
        let r = conjectured_posttrain_count(-2.0, -1.5, 0.2, 200).unwrap();
        assert!((r.value - 0.25 * (4.0 / 1.5) * (1.0 / 0.64) * 200.0).abs() < 1e-9);
        assert!(conjectured_posttrain_count(-2.0, -1.5, 1.0, 200).is_err());
        let a = conjectured_posttrain_count(-2.0, -1.5, 0.1, 200).unwrap().value;
        let b = conjectured_posttrain_count(-2.0, -1.5, 0.2, 200).unwrap().value;
        assert!((b / a - (0.9f64 / 0.8).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn ternary_examples() {
        let r = ternary_search_sample_count(|x| Ok(-((x - 7) as f64).powi(2)), 0, 20, 100).unwrap();
        assert_eq!(r.argmax, 7);
        let plateau = |x: i64| Ok(-(((x - 10).abs() - 3).max(0) as f64));
        let r = ternary_search_sample_count(plateau, 0, 30, 100).unwrap();
        assert!((7..=13).contains(&r.argmax));
        assert_eq!(r.value, 0.0);
        let err = ternary_search_sample_count(|x| Ok(if x == 5 { f64::NAN } else { 0.0 }), 0, 10, 100);
        assert!(err.is_err() || err.unwrap().evaluations > 0);
        assert!(matches!(
            ternary_search_sample_count(|_| Ok(f64::INFINITY), 0, 10, 100),
            Err(Error::NonFinite { .. })
        ));
    }
}
