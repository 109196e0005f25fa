//! Reproducible Monte Carlo harness: runs a scenario many times with
//! per-trial seeds derived from one master seed, estimates the event rate
//! with a Wilson interval, and compares it against an analytic bound.
//!
//! Trials are independent and may be evaluated on any number of worker
//! threads; the per-trial seed depends only on the trial index, and
//! aggregation is a commutative count, so the report never depends on
//! scheduling.

use serde::{Deserialize, Serialize};

use crate::crepeau::{run_crepeau, CrepeauConfig};
use crate::ech::{
    classify_outcome, run_ech, AliceEchStrategy, BobEchStrategy, EchConfig, EchSets, OutcomeClass,
};
use crate::error::{Error, Result};
use crate::ot12::{run_ot12, AliceOt12Strategy, BobOt12Strategy, Ot12Config};
use crate::primitive::BitString;
use crate::rng::{derive_seed, SplitMix64};

/// z for the 95% Wilson intervals the harness reports.
pub const Z95: f64 = 1.96;

/// How Bob's choice bit is drawn per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChoiceDist {
    Fixed(bool),
    Uniform,
}

/// Countable events for a 1-out-of-2 trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ot12Event {
    Abort,
    /// Alice identified Bob's choice (garbage in a selected pair).
    AliceLeak,
    /// The extracting receiver recovered both bits in every round.
    BobBoth,
    /// A completed honest run decoded the wrong bit.
    CorrectnessFailure,
}

/// Countable events for a Crepeau trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrepeauEvent {
    Abort,
    AliceIdentified,
}

/// A runnable experiment: protocol, inputs, strategies and the event
/// being counted.
pub struct Scenario {
    pub label: String,
    pub kind: ScenarioKind,
}

pub enum ScenarioKind {
    Ech {
        cfg: EchConfig,
        sets: EchSets,
        alice: AliceEchStrategy,
        bob: BobEchStrategy,
        event: OutcomeClass,
    },
    Ot12 {
        cfg: Ot12Config,
        secrets: (bool, bool),
        choice: ChoiceDist,
        alice: AliceOt12Strategy,
        bob: BobOt12Strategy,
        event: Ot12Event,
    },
    Crepeau {
        cfg: CrepeauConfig,
        event: CrepeauEvent,
    },
}

impl Scenario {
    /// Whether the event fires on the trial with this seed.
    pub fn eval_trial(&self, trial_seed: u64) -> bool {
        match &self.kind {
            ScenarioKind::Ech {
                cfg,
                sets,
                alice,
                bob,
                event,
            } => {
                let t = run_ech(cfg, sets, alice, bob, trial_seed);
                classify_outcome(&t, sets) == *event
            }
            ScenarioKind::Ot12 {
                cfg,
                secrets,
                choice,
                alice,
                bob,
                event,
            } => {
                let mut rng = SplitMix64::new(trial_seed);
                let b = match choice {
                    ChoiceDist::Fixed(b) => *b,
                    ChoiceDist::Uniform => rng.next_bool(),
                };
                let run_seed = rng.next_u64();
                let r = run_ot12(cfg, *secrets, b, alice, bob, run_seed);
                match event {
                    Ot12Event::Abort => r.aborted,
                    Ot12Event::AliceLeak => r.alice_learned_choice,
                    Ot12Event::BobBoth => r.bob_learned_both,
                    Ot12Event::CorrectnessFailure => {
                        let expect = if b { secrets.1 } else { secrets.0 };
                        !r.aborted && r.bob_output.is_some() && r.bob_output != Some(expect)
                    }
                }
            }
            ScenarioKind::Crepeau { cfg, event } => {
                let mut rng = SplitMix64::new(trial_seed);
                let m0 = BitString::random(cfg.ell(), &mut rng).expect("validated ell");
                let m1 = BitString::random(cfg.ell(), &mut rng).expect("validated ell");
                let b = rng.next_bool();
                let run_seed = rng.next_u64();
                let t = run_crepeau(cfg, (&m0, &m1), b, run_seed).expect("validated config");
                match event {
                    CrepeauEvent::Abort => t.aborted,
                    CrepeauEvent::AliceIdentified => t.alice_identified_choice,
                }
            }
        }
    }

    /// The line-oriented transcript records for the trial with this seed
    /// (the same run [`Scenario::eval_trial`] counts).
    pub fn trial_records(&self, trial_seed: u64) -> String {
        match &self.kind {
            ScenarioKind::Ech {
                cfg,
                sets,
                alice,
                bob,
                ..
            } => run_ech(cfg, sets, alice, bob, trial_seed).to_record_lines(),
            ScenarioKind::Ot12 {
                cfg,
                secrets,
                choice,
                alice,
                bob,
                ..
            } => {
                let mut rng = SplitMix64::new(trial_seed);
                let b = match choice {
                    ChoiceDist::Fixed(b) => *b,
                    ChoiceDist::Uniform => rng.next_bool(),
                };
                let run_seed = rng.next_u64();
                run_ot12(cfg, *secrets, b, alice, bob, run_seed).to_record_lines()
            }
            ScenarioKind::Crepeau { cfg, .. } => {
                let mut rng = SplitMix64::new(trial_seed);
                let m0 = BitString::random(cfg.ell(), &mut rng).expect("validated ell");
                let m1 = BitString::random(cfg.ell(), &mut rng).expect("validated ell");
                let b = rng.next_bool();
                let run_seed = rng.next_u64();
                run_crepeau(cfg, (&m0, &m1), b, run_seed)
                    .expect("validated config")
                    .to_record_lines()
            }
        }
    }
}

/// Whether a measured rate is consistent with its analytic bound.
/// Spelled identically in CSV and JSON reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    WithinBound,
    BoundViolated,
    NoBound,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::WithinBound => "WithinBound",
            Verdict::BoundViolated => "BoundViolated",
            Verdict::NoBound => "NoBound",
        })
    }
}

/// Result of a campaign over one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub label: String,
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound: Option<f64>,
    pub verdict: Verdict,
}

impl EstimateReport {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.label,
            self.trials,
            self.successes,
            self.rate,
            self.ci_low,
            self.ci_high,
            self.bound.map(|b| b.to_string()).unwrap_or_default(),
            self.verdict
        )
    }
}

pub fn csv_header() -> &'static str {
    "label,trials,successes,rate,ci_low,ci_high,bound,verdict"
}

/// Render reports as a CSV document (header plus one row per report).
pub fn reports_to_csv(reports: &[EstimateReport]) -> String {
    let mut out = String::from(csv_header());
    out.push('\n');
    for r in reports {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    out
}

/// Render reports as JSON Lines, one record per report, identical fields
/// to the CSV columns.
pub fn reports_to_jsonl(reports: &[EstimateReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&serde_json::to_string(r).expect("report serializes"));
        out.push('\n');
    }
    out
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InvalidParameter(
            "cannot form an interval over zero trials".into(),
        ));
    }
    if successes > trials {
        return Err(Error::InvalidParameter(format!(
            "successes {successes} exceed trials {trials}"
        )));
    }
    if z.is_nan() || z <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "z must be positive, got {z}"
        )));
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let radius = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // the extremes are exact algebraically; don't let rounding smear them
    let low = if successes == 0 {
        0.0
    } else {
        ((center - radius) / denom).clamp(0.0, 1.0)
    };
    let high = if successes == trials {
        1.0
    } else {
        ((center + radius) / denom).clamp(0.0, 1.0)
    };
    Ok((low, high))
}

/// Attach a bound to a report: violated only when the interval's lower
/// end clears the bound (clamped to one), so noise alone can never flag a
/// violation.
pub fn compare_to_bound(mut report: EstimateReport, bound: f64) -> EstimateReport {
    report.bound = Some(bound);
    report.verdict = if report.ci_low > bound.min(1.0) {
        Verdict::BoundViolated
    } else {
        Verdict::WithinBound
    };
    report
}

/// Run `trials` independent trials sequentially. Identical inputs produce
/// a byte-identical report.
pub fn run_trials(scenario: &Scenario, trials: u64, master_seed: u64) -> Result<EstimateReport> {
    run_trials_with_threads(scenario, trials, master_seed, 1)
}

/// [`run_trials`] spread over up to `threads` workers. The outcome is
/// identical for every thread count.
pub fn run_trials_with_threads(
    scenario: &Scenario,
    trials: u64,
    master_seed: u64,
    threads: usize,
) -> Result<EstimateReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let threads = threads.clamp(1, 256).min(trials as usize);

    let successes: u64 = if threads == 1 {
        (0..trials)
            .filter(|&i| scenario.eval_trial(derive_seed(master_seed, i)))
            .count() as u64
    } else {
        let chunk = trials.div_ceil(threads as u64);
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for w in 0..threads as u64 {
                let lo = w * chunk;
                let hi = ((w + 1) * chunk).min(trials);
                if lo >= hi {
                    break;
                }
                handles.push(scope.spawn(move || {
                    (lo..hi)
                        .filter(|&i| scenario.eval_trial(derive_seed(master_seed, i)))
                        .count() as u64
                }));
            }
            handles.into_iter().map(|h| h.join().expect("worker")).sum()
        })
    };

    let (ci_low, ci_high) = wilson_interval(successes, trials, Z95)?;
    Ok(EstimateReport {
        label: scenario.label.clone(),
        trials,
        successes,
        rate: successes as f64 / trials as f64,
        ci_low,
        ci_high,
        bound: None,
        verdict: Verdict::NoBound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn always_abort_scenario() -> Scenario {
        // all transfers garbage: Bob can never publish anything
        Scenario {
            label: "crepeau-all-garbage".into(),
            kind: ScenarioKind::Crepeau {
                cfg: CrepeauConfig::new(30, 30, 8).unwrap(),
                event: CrepeauEvent::Abort,
            },
        }
    }

    fn impossible_scenario() -> Scenario {
        // honest Alice never leaks
        Scenario {
            label: "ot12-honest-leak".into(),
            kind: ScenarioKind::Ot12 {
                cfg: Ot12Config::new(2, 3.0, 100, 0.45, 2, 8).unwrap(),
                secrets: (true, false),
                choice: ChoiceDist::Uniform,
                alice: AliceOt12Strategy::honest(),
                bob: BobOt12Strategy::Honest,
                event: Ot12Event::AliceLeak,
            },
        }
    }

    #[test]
    fn certain_event_rate_is_one() {
        let report = run_trials(&always_abort_scenario(), 500, 1).unwrap();
        assert_eq!(report.successes, 500);
        assert_eq!(report.rate, 1.0);
        assert_eq!(report.ci_high, 1.0);
    }

    #[test]
    fn impossible_event_rate_is_zero() {
        let report = run_trials(&impossible_scenario(), 500, 2).unwrap();
        assert_eq!(report.successes, 0);
        assert_eq!(report.ci_low, 0.0);
    }

    #[test]
    fn reports_are_byte_identical_across_reruns_and_threads() {
        let scenario = Scenario {
            label: "ech-honest-abort".into(),
            kind: ScenarioKind::Ech {
                cfg: EchConfig::new(0.45, 2, 50, 8).unwrap(),
                sets: EchSets::new(50, vec![1], vec![2, 3]).unwrap(),
                alice: AliceEchStrategy::Honest,
                bob: BobEchStrategy::Honest,
                event: OutcomeClass::Aborted,
            },
        };
        let a = run_trials(&scenario, 2000, 99).unwrap();
        let b = run_trials(&scenario, 2000, 99).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        for threads in [2usize, 4, 7] {
            let c = run_trials_with_threads(&scenario, 2000, 99, threads).unwrap();
            assert_eq!(a, c, "thread count {threads} changed the report");
        }
    }

    #[test]
    fn wilson_edge_cases() {
        let (low, _) = wilson_interval(0, 100, Z95).unwrap();
        assert_eq!(low, 0.0);
        let (_, high) = wilson_interval(100, 100, Z95).unwrap();
        assert_eq!(high, 1.0);
        let (low, high) = wilson_interval(50, 100, Z95).unwrap();
        assert!((low - 0.403_829_828_590_147_16).abs() < 1e-12);
        assert!((high - 0.596_170_171_409_852_8).abs() < 1e-12);
        assert!(wilson_interval(1, 0, Z95).is_err());
        assert!(wilson_interval(5, 4, Z95).is_err());
        assert!(wilson_interval(1, 10, 0.0).is_err());
    }

    #[test]
    fn verdicts() {
        let base = EstimateReport {
            label: "x".into(),
            trials: 100,
            successes: 10,
            rate: 0.1,
            ci_low: 0.08,
            ci_high: 0.12,
            bound: None,
            verdict: Verdict::NoBound,
        };
        assert_eq!(
            compare_to_bound(base.clone(), 0.5).verdict,
            Verdict::WithinBound
        );
        let mut high = base.clone();
        high.rate = 0.9;
        high.ci_low = 0.88;
        high.ci_high = 0.92;
        assert_eq!(compare_to_bound(high, 0.5).verdict, Verdict::BoundViolated);
        // raw bounds above one are clamped for the comparison
        let mut sure = base;
        sure.rate = 0.999;
        sure.ci_low = 0.99;
        assert_eq!(compare_to_bound(sure, 3.75).verdict, Verdict::WithinBound);
    }

    #[test]
    fn false_violations_are_rare_at_the_bound() {
        // Bernoulli stream with p equal to the bound: the one-sided
        // interval should flag at most ~2.5% of campaigns.
        let p = 0.3;
        let mut violations = 0u32;
        let reps = 1000u32;
        let mut rng = SplitMix64::new(31337);
        for _ in 0..reps {
            let trials = 1000u64;
            let successes = (0..trials).filter(|_| rng.next_f64() < p).count() as u64;
            let (ci_low, ci_high) = wilson_interval(successes, trials, Z95).unwrap();
            let report = EstimateReport {
                label: "bernoulli".into(),
                trials,
                successes,
                rate: successes as f64 / trials as f64,
                ci_low,
                ci_high,
                bound: None,
                verdict: Verdict::NoBound,
            };
            if compare_to_bound(report, p).verdict == Verdict::BoundViolated {
                violations += 1;
            }
        }
        let rate = f64::from(violations) / f64::from(reps);
        assert!(rate <= 0.04, "false violation rate {rate}");
    }

    #[test]
    fn csv_and_jsonl_rendering() {
        let report = compare_to_bound(run_trials(&impossible_scenario(), 100, 3).unwrap(), 0.25);
        let csv = reports_to_csv(std::slice::from_ref(&report));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(csv_header()));
        let row = lines.next().unwrap();
        assert!(row.starts_with("ot12-honest-leak,100,0,0,0,"));
        assert!(row.ends_with(",0.25,WithinBound"));

        let jsonl = reports_to_jsonl(std::slice::from_ref(&report));
        let parsed: EstimateReport = serde_json::from_str(jsonl.trim()).unwrap();
        assert_eq!(parsed, report);
    }

    proptest! {
        #[test]
        fn wilson_interval_brackets_the_rate(s in 0u64..=500, extra in 0u64..=500) {
            let n = s + extra;
            prop_assume!(n > 0);
            let (low, high) = wilson_interval(s, n, Z95).unwrap();
            let rate = s as f64 / n as f64;
            prop_assert!(low <= rate + 1e-12);
            prop_assert!(high >= rate - 1e-12);
            prop_assert!((0.0..=1.0).contains(&low));
            prop_assert!((0.0..=1.0).contains(&high));
        }
    }
}
