//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use coherence::analysis::bounds::SignConvention;
use coherence::analysis::diagnostics::{empirical_distribution, tv_distance, Estimator};
use coherence::analysis::montecarlo::{run_monte_carlo, MonteCarloConfig};
use coherence::checks::{sweep_all, IDENTITY_TOLERANCE};
use coherence::coherence::coherence;
use coherence::distribution::softmax_over_coherence;
use coherence::experiments::pipeline::{run_semi_supervised, Method, PipelineConfig};
use coherence::experiments::scenario::{exchangeable_mixture, generate_scenario, ScenarioSpec};
use coherence::partition::{DPolicy, PolicySpace, PolicyState};
use coherence::samplers::{
    bootstrap_distribution, gibbs_run, gibbs_transition_probability, mutual_predictability, ContextOrder, SamplerConfig,
};
use coherence::system::{sauces_system, Beta, LearningSystem, MixtureBayesSystem};

const GOLDEN_TOL: f64 = 1e-9;
const CONDITIONAL_TOL: f64 = 1e-12;
const GIBBS_TV: f64 = 0.05;
const GIBBS_STEPS: usize = 200_000;
const GIBBS_MIN_SYSTEMS: usize = 9;
const BALANCE_REL_TOL: f64 = 1e-12;
const BOOTSTRAP_TV: f64 = 1e-12;
const MC_MIN_RATE: f64 = 0.87;
const SIGN_TEST_ALPHA: f64 = 0.05;
const TREND_MIN_SEEDS: usize = 8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within_budget(pass: bool, elapsed: Duration, budget: Duration, detail: String) -> Outcome {
    let ok = elapsed <= budget;
    outcome(pass && ok, format!("{detail}; {:.2}s (budget {}s)", elapsed.as_secs_f64(), budget.as_secs()))
}

fn golden_values() -> Outcome {
    let start = Instant::now();
    let s = sauces_system(0.0).unwrap();
    let p = s.partition();
    let empty = PolicyState::empty();
    let chi1 = coherence(&s, &empty, &DPolicy::from_names(p, &["burger-mayo", "fries-mayo"]).unwrap()).unwrap().bits;
    let chi2 = coherence(&s, &empty, &DPolicy::from_names(p, &["burger-mustard", "fries-ketchup"]).unwrap())
        .unwrap()
        .bits;
    let e1 = (chi1 - 0.3f64.log2()).abs();
    let e2 = (chi2 - 0.175f64.log2()).abs();
    within_budget(
        e1 <= GOLDEN_TOL && e2 <= GOLDEN_TOL,
        start.elapsed(),
        Duration::from_secs(1),
        format!("chi1={chi1:.7} chi2={chi2:.7} errors {e1:.1e}, {e2:.1e}"),
    )
}

fn trace_conditionals() -> Outcome {
    let s = sauces_system(0.0).unwrap();
    let p = s.partition();
    let (burger, fries) = (p.context_by_name("burger").unwrap(), p.context_by_name("fries").unwrap());
    let given = |name: &str| PolicyState::from_behaviors([p.lookup(name).unwrap()]);
    let cases = [
        (s.infer(&given("fries-ketchup"), burger).unwrap(), vec![0.0, 0.5, 0.5]),
        (s.infer(&given("burger-mustard"), fries).unwrap(), vec![0.0, 0.5, 0.5]),
        (s.infer(&given("burger-mayo"), fries).unwrap(), vec![1.0, 0.0, 0.0]),
    ];
    let worst = cases
        .iter()
        .flat_map(|(got, want)| got.iter().zip(want).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    outcome(worst <= CONDITIONAL_TOL, format!("max elementwise error {worst:.1e}"))
}

fn gibbs_convergence() -> Outcome {
    let start = Instant::now();
    let mut good = 0;
    let mut tvs = Vec::new();
    for seed in 0..10 {
        let scenario = generate_scenario(&ScenarioSpec::new(3, 3, 2, 1000 + seed)).unwrap();
        let s = &scenario.system;
        let x1 = softmax_over_coherence(s, Beta::ONE, 1000).unwrap();
        let init = DPolicy::new(s.partition(), vec![0, 0, 0]).unwrap();
        let rec = gibbs_run(s, &init, &SamplerConfig::new(Beta::ONE, GIBBS_STEPS, seed)).unwrap();
        let emp = empirical_distribution(&rec, Estimator::UniformRound, 1000).unwrap();
        let tv = tv_distance(&emp, &x1).unwrap();
        good += usize::from(tv <= GIBBS_TV);
        tvs.push(format!("{tv:.3}"));
    }
    within_budget(
        good >= GIBBS_MIN_SYSTEMS,
        start.elapsed(),
        Duration::from_secs(120),
        format!("{good}/10 systems with TV <= {GIBBS_TV} [{}]", tvs.join(" ")),
    )
}

fn detailed_balance() -> Outcome {
    let scenario = generate_scenario(&ScenarioSpec::new(3, 3, 2, 77)).unwrap();
    let s = &scenario.system;
    let space = PolicySpace::new(s.partition(), 1000).unwrap();
    let mut worst: f64 = 0.0;
    for beta in [0.5, 1.0, 2.0] {
        let beta = Beta::new(beta).unwrap();
        let x = softmax_over_coherence(s, beta, 1000).unwrap();
        for from in space.iter() {
            for c in s.partition().context_ids() {
                for a in 0..3 {
                    if a == from.get(c) {
                        continue;
                    }
                    let mut to = from.clone();
                    to.set(c, a);
                    let lhs = x.mass(&from) * gibbs_transition_probability(s, &from, &to, beta).unwrap();
                    let rhs = x.mass(&to) * gibbs_transition_probability(s, &to, &from, beta).unwrap();
                    let scale = lhs.abs().max(rhs.abs());
                    if scale > 0.0 {
                        worst = worst.max((lhs - rhs).abs() / scale);
                    }
                }
            }
        }
    }
    outcome(worst <= BALANCE_REL_TOL, format!("max relative error {worst:.1e}"))
}

fn bootstrap_exactness() -> Outcome {
    let scenario = generate_scenario(&ScenarioSpec::new(3, 3, 2, 55)).unwrap();
    let s = &scenario.system;
    let order = ContextOrder::index_order(s.partition());
    let tv = |b: f64| {
        let beta = Beta::new(b).unwrap();
        tv_distance(
            &bootstrap_distribution(s, &order, beta, 1000).unwrap(),
            &softmax_over_coherence(s, beta, 1000).unwrap(),
        )
        .unwrap()
    };
    let at_one = tv(1.0);
    let (t08, t09, t11, t12) = (tv(0.8), tv(0.9), tv(1.1), tv(1.2));
    let trend = t09 <= t08 && t11 <= t12;
    outcome(
        at_one <= BOOTSTRAP_TV && trend,
        format!("tv(1)={at_one:.1e}; tv(0.8,0.9,1.1,1.2)=({t08:.2e}, {t09:.2e}, {t11:.2e}, {t12:.2e})"),
    )
}

fn identity_sweeps() -> Outcome {
    let start = Instant::now();
    let results = sweep_all(100, 2024).unwrap();
    let pass = results.iter().all(|r| r.ok());
    let detail = results
        .iter()
        .map(|r| format!("{} {}/{} max {:.1e}", r.identity.name(), r.passed, r.cases, r.max_residual))
        .collect::<Vec<_>>()
        .join("; ");
    within_budget(pass, start.elapsed(), Duration::from_secs(30), format!("{detail} (tol {IDENTITY_TOLERANCE:.0e})"))
}

fn bound_monte_carlo() -> Outcome {
    let config = MonteCarloConfig::default();
    let (_, corrected) = run_monte_carlo(&config).unwrap();
    let (_, paper) = run_monte_carlo(&MonteCarloConfig {
        sign: SignConvention::Paper,
        ..config
    })
    .unwrap();
    outcome(
        corrected.holds_rate >= MC_MIN_RATE,
        format!(
            "corrected holds in {:.1}% of {} trials; paper sign (not asserted) {:.1}%",
            100.0 * corrected.holds_rate,
            corrected.trials,
            100.0 * paper.holds_rate
        ),
    )
}

/// P(X ≥ wins) for X ~ Binomial(n, 1/2).
fn sign_test_p(wins: usize, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut coef = 1.0f64;
    let mut tail = 0.0;
    for k in 0..=n {
        if k > 0 {
            coef *= (n - k + 1) as f64 / k as f64;
        }
        if k >= wins {
            tail += coef;
        }
    }
    tail / 2f64.powi(n as i32)
}

fn semi_supervised_uplift() -> Outcome {
    let start = Instant::now();
    let (mut gibbs_total, mut greedy_total) = (0.0, 0.0);
    let (mut wins, mut losses) = (0, 0);
    for seed in 0..50 {
        let spec = ScenarioSpec {
            unsupervised: Some(6),
            ..ScenarioSpec::new(12, 3, 2, 5000 + seed)
        };
        let scenario = generate_scenario(&spec).unwrap();
        let config = PipelineConfig {
            sampler: SamplerConfig::new(Beta::ONE, 2000, seed),
            ..Default::default()
        };
        let g = run_semi_supervised(&scenario, Method::Gibbs, &config).unwrap().accuracy.unwrap();
        let b = run_semi_supervised(&scenario, Method::Erm, &config).unwrap().accuracy.unwrap();
        gibbs_total += g;
        greedy_total += b;
        wins += usize::from(g > b);
        losses += usize::from(g < b);
    }
    let p = sign_test_p(wins, wins + losses);
    let (mg, mb) = (gibbs_total / 50.0, greedy_total / 50.0);
    within_budget(
        mg > mb && p < SIGN_TEST_ALPHA,
        start.elapsed(),
        Duration::from_secs(300),
        format!("mean accuracy gibbs {mg:.3} vs greedy {mb:.3}; wins {wins} losses {losses}; sign test p={p:.3}"),
    )
}

fn mean_alignment_gap(s: &MixtureBayesSystem) -> f64 {
    let space = PolicySpace::new(s.partition(), 100_000).unwrap();
    let empty = PolicyState::empty();
    let mut total = 0.0;
    for pi in space.iter() {
        total += (mutual_predictability(s, &pi).unwrap() - coherence(s, &empty, &pi).unwrap().bits).abs();
    }
    total / space.size() as f64
}

fn alignment_trend() -> Outcome {
    let mut good = 0;
    let mut rows = Vec::new();
    for seed in 0..10u64 {
        let gaps: Vec<f64> = [3, 5, 8]
            .iter()
            .map(|&n| {
                let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
                mean_alignment_gap(&exchangeable_mixture(&mut rng, n, 3, 2, 1.0).unwrap())
            })
            .collect();
        good += usize::from(gaps[1] < gaps[0] && gaps[2] < gaps[1]);
        rows.push(format!("({:.2},{:.2},{:.2})", gaps[0], gaps[1], gaps[2]));
    }
    outcome(
        good >= TREND_MIN_SEEDS,
        format!("{good}/10 seeds decreasing over |S|=3,5,8: {}", rows.join(" ")),
    )
}

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    files.into_iter().map(|p| (p.clone(), std::fs::read(&p).unwrap())).collect()
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_coherence");
    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let eps = scenarios.join("sauces_eps.toml");
    let sauces = scenarios.join("sauces.toml");
    let three = scenarios.join("three_context.toml");
    let commands: Vec<Vec<String>> = vec![
        vec!["enumerate".into(), "--scenario".into(), sauces.display().to_string()],
        vec!["run".into(), "--scenario".into(), eps.display().to_string(), "--method".into(), "gibbs".into(), "--steps".into(), "5000".into(), "--seed".into(), "9".into()],
        vec!["run".into(), "--scenario".into(), eps.display().to_string(), "--method".into(), "debate".into(), "--steps".into(), "500".into(), "--seed".into(), "9".into()],
        vec!["run".into(), "--scenario".into(), three.display().to_string(), "--method".into(), "tf-gibbs".into(), "--steps".into(), "500".into(), "--gamma".into(), "0.7".into()],
        vec!["run".into(), "--scenario".into(), three.display().to_string(), "--method".into(), "icm".into(), "--seed".into(), "4".into()],
        vec!["mc".into(), "--trials".into(), "50".into()],
        vec!["equiv".into(), "--seeds".into(), "2".into(), "--contexts".into(), "4".into()],
        vec!["check".into(), "--cases".into(), "20".into()],
    ];
    let root = tempfile::tempdir().unwrap();
    let mut mismatched = Vec::new();
    for (i, args) in commands.iter().enumerate() {
        let dir = root.path().join(format!("cmd{i}"));
        let run = || {
            let status = Command::new(bin).args(args).arg("--out-dir").arg(&dir).output().unwrap();
            assert!(status.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&status.stderr));
            snapshot(&dir)
        };
        let first = run();
        let second = run();
        if first != second || first.is_empty() {
            mismatched.push(args[0].clone());
        }
    }
    let scenario_bytes = |seed| generate_scenario(&ScenarioSpec::new(6, 3, 2, seed)).unwrap().to_json_bytes();
    let scenario_ok = scenario_bytes(31) == scenario_bytes(31);
    outcome(
        mismatched.is_empty() && scenario_ok,
        format!("{} commands re-run; mismatches: {:?}; scenario bytes stable: {scenario_ok}", commands.len(), mismatched),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("sauces golden coherence values", golden_values),
        ("gibbs trace conditionals", trace_conditionals),
        ("gibbs convergence to X^1", gibbs_convergence),
        ("detailed balance of the gibbs kernel", detailed_balance),
        ("simple bootstrap exactness and trend", bootstrap_exactness),
        ("identity sweeps", identity_sweeps),
        ("uniform bound monte carlo", bound_monte_carlo),
        ("semi-supervised uplift over greedy", semi_supervised_uplift),
        ("f_mp / coherence alignment trend", alignment_trend),
        ("determinism of outputs", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!("criterion {:>2} {} {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{}/10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
