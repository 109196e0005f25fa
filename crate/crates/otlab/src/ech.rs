//! The element choosing protocol.
//!
//! Alice and Bob share a labelled set and must settle on one element
//! without either of them steering the choice into their own winning
//! subset. Each round Alice transfers a fresh message per surviving index
//! over the flawed OT, Bob publishes an `alpha` fraction of the indices he
//! actually received, and the published indices become the next round's
//! set. After `x` rounds Alice picks one survivor.
//!
//! Bob can only keep what he received (honest misses halve his winners on
//! average), and any index Alice poisons is as likely as not to vanish
//! each round; the analytic bounds here quantify both effects.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primitive::{ot_transfer, BitString, OtSendAction, MAX_ELL};
use crate::rng::SplitMix64;
use crate::BoundValue;

/// Tolerance used when a real-valued fraction of an integer count is
/// floored or ceiled: decimal parameters such as 0.3 are not exact in
/// binary, and `0.3 * 100.0` must still count as 30.
pub(crate) const COUNT_NUDGE: f64 = 1e-9;

/// Largest message count accepted by the exact binomial tail.
pub const EXACT_TAIL_MAX_N: usize = 10_000;

/// Parameters of one element choosing run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchConfig {
    alpha: f64,
    rounds_x: u32,
    n_t: usize,
    ell: u32,
}

impl EchConfig {
    pub fn new(alpha: f64, rounds_x: u32, n_t: usize, ell: u32) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1/2), got {alpha}"
            )));
        }
        if rounds_x == 0 {
            return Err(Error::InvalidParameter("rounds_x must be positive".into()));
        }
        if n_t == 0 {
            return Err(Error::InvalidParameter(
                "initial set size n_t must be positive".into(),
            ));
        }
        if ell == 0 || ell > MAX_ELL {
            return Err(Error::InvalidParameter(format!(
                "ell must be in 1..={MAX_ELL}, got {ell}"
            )));
        }
        Ok(Self {
            alpha,
            rounds_x,
            n_t,
            ell,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rounds_x(&self) -> u32 {
        self.rounds_x
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    /// `xi = 1/2 - alpha`.
    pub fn xi(&self) -> f64 {
        0.5 - self.alpha
    }

    /// Real-valued survivor count after all rounds, `alpha^x * n_t`.
    /// The analytic bounds are stated on this form.
    pub fn expected_final_count(&self) -> f64 {
        self.alpha.powi(self.rounds_x as i32) * self.n_t as f64
    }
}

/// The shared universe `{1..n_t}` with the two disjoint winning subsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchSets {
    n_t: usize,
    win_a: Vec<u32>,
    win_b: Vec<u32>,
}

impl EchSets {
    pub fn new(n_t: usize, mut win_a: Vec<u32>, mut win_b: Vec<u32>) -> Result<Self> {
        win_a.sort_unstable();
        win_a.dedup();
        win_b.sort_unstable();
        win_b.dedup();
        for &i in win_a.iter().chain(win_b.iter()) {
            if i == 0 || i as usize > n_t {
                return Err(Error::InvalidParameter(format!(
                    "winning index {i} outside universe 1..={n_t}"
                )));
            }
        }
        if win_a.iter().any(|i| win_b.binary_search(i).is_ok()) {
            return Err(Error::InvalidParameter(
                "winning subsets must be disjoint".into(),
            ));
        }
        Ok(Self { n_t, win_a, win_b })
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn win_a(&self) -> &[u32] {
        &self.win_a
    }

    pub fn win_b(&self) -> &[u32] {
        &self.win_b
    }

    pub fn in_win_a(&self, i: u32) -> bool {
        self.win_a.binary_search(&i).is_ok()
    }

    pub fn in_win_b(&self, i: u32) -> bool {
        self.win_b.binary_search(&i).is_ok()
    }
}

/// How Alice picks the final element among the last survivors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FinalPick {
    /// Uniform over the survivors (the honest choice).
    Uniform,
    /// A survivor from her winning subset whenever one is left, else
    /// uniform.
    PreferWinA,
}

/// Per-round selection of the indices Alice sends honestly; everything
/// else in the current set is sent as garbage. Receives the 0-based round
/// and the current surviving set (sorted); the result is intersected with
/// that set. Must be deterministic for transcripts to be reproducible.
pub type HonestSubsetFn = Box<dyn Fn(u32, &[u32]) -> Vec<u32> + Send + Sync>;

/// Alice's strategy for the element choosing protocol.
pub enum AliceEchStrategy {
    /// Send every message honestly, pick uniformly at the end.
    Honest,
    Scripted {
        honest_subset: HonestSubsetFn,
        final_pick: FinalPick,
    },
}

impl AliceEchStrategy {
    pub fn honest() -> Self {
        AliceEchStrategy::Honest
    }

    pub fn scripted(honest_subset: HonestSubsetFn, final_pick: FinalPick) -> Self {
        AliceEchStrategy::Scripted {
            honest_subset,
            final_pick,
        }
    }

    /// Sends everything honestly but grabs a winning survivor at the end.
    /// The softest possible cheat.
    pub fn soft_prefer_win_a() -> Self {
        Self::scripted(
            Box::new(|_, current| current.to_vec()),
            FinalPick::PreferWinA,
        )
    }

    /// Hard strategy: only her own winning indices are sent honestly.
    pub fn hard_only_win_a(win_a: Vec<u32>) -> Self {
        Self::scripted(
            Box::new(move |_, current| {
                current
                    .iter()
                    .copied()
                    .filter(|i| win_a.contains(i))
                    .collect()
            }),
            FinalPick::PreferWinA,
        )
    }

    /// Boundary-soft strategy: her winning indices plus just enough others
    /// to reach a `2 * alpha` honest fraction (the hard/soft threshold).
    pub fn boundary_soft(win_a: Vec<u32>, alpha: f64) -> Self {
        Self::scripted(
            Box::new(move |_, current| {
                let goal = ((2.0 * alpha * current.len() as f64) - COUNT_NUDGE).ceil() as usize;
                let mut honest: Vec<u32> = current
                    .iter()
                    .copied()
                    .filter(|i| win_a.contains(i))
                    .collect();
                for &i in current {
                    if honest.len() >= goal {
                        break;
                    }
                    if !win_a.contains(&i) {
                        honest.push(i);
                    }
                }
                honest
            }),
            FinalPick::PreferWinA,
        )
    }

    /// Mixed schedule: hard (only winning indices) on even rounds, fully
    /// honest on odd rounds.
    pub fn alternating_hard_soft(win_a: Vec<u32>) -> Self {
        Self::scripted(
            Box::new(move |round, current| {
                if round % 2 == 0 {
                    current
                        .iter()
                        .copied()
                        .filter(|i| win_a.contains(i))
                        .collect()
                } else {
                    current.to_vec()
                }
            }),
            FinalPick::PreferWinA,
        )
    }

    /// Soft-ish strategy that garbages half of the non-winning indices
    /// every round.
    pub fn half_garbage(win_a: Vec<u32>) -> Self {
        Self::scripted(
            Box::new(move |_, current| {
                let mut honest: Vec<u32> = current
                    .iter()
                    .copied()
                    .filter(|i| win_a.contains(i))
                    .collect();
                let rest: Vec<u32> = current
                    .iter()
                    .copied()
                    .filter(|i| !win_a.contains(i))
                    .collect();
                honest.extend_from_slice(&rest[..rest.len() / 2]);
                honest
            }),
            FinalPick::PreferWinA,
        )
    }
}

/// Bob's strategy: which received indices he publishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BobEchStrategy {
    /// A uniform subset of the indices he actually received.
    Honest,
    /// Received indices from his winning subset first, the remainder
    /// filled uniformly. He can never publish an index he did not receive.
    PreferWinB,
}

/// One round of the transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchRoundRecord {
    pub set_before: Vec<u32>,
    pub honest_sent: Vec<u32>,
    pub received: Vec<u32>,
    pub published: Vec<u32>,
}

/// Full record of one element choosing run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchTranscript {
    pub per_round: Vec<EchRoundRecord>,
    pub aborted: bool,
    pub abort_round: Option<u32>,
    pub chosen: Option<u32>,
}

impl EchTranscript {
    /// Line-oriented record form: one JSON object per round, then a
    /// summary object.
    pub fn write_records<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for (i, round) in self.per_round.iter().enumerate() {
            let rec = serde_json::json!({
                "round": i + 1,
                "set_before": round.set_before,
                "honest_sent": round.honest_sent,
                "received": round.received,
                "published": round.published,
            });
            writeln!(w, "{rec}")?;
        }
        let summary = serde_json::json!({
            "aborted": self.aborted,
            "abort_round": self.abort_round,
            "chosen": self.chosen,
        });
        writeln!(w, "{summary}")
    }

    pub fn to_record_lines(&self) -> String {
        let mut buf = Vec::new();
        self.write_records(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }
}

/// Who, if anyone, won the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeClass {
    AliceWins,
    BobWins,
    Neutral,
    Aborted,
}

/// Number of indices Bob must publish out of `current_size`: the `alpha`
/// fraction, floored, with a floor of one so the surviving set never
/// empties.
pub fn keep_count(current_size: usize, alpha: f64) -> usize {
    let k = (alpha * current_size as f64 + COUNT_NUDGE).floor() as usize;
    k.max(1)
}

/// Run the element choosing protocol. Deterministic in all arguments
/// including the seed.
pub fn run_ech(
    cfg: &EchConfig,
    sets: &EchSets,
    alice: &AliceEchStrategy,
    bob: &BobEchStrategy,
    seed: u64,
) -> EchTranscript {
    debug_assert_eq!(cfg.n_t, sets.n_t, "sets must match the configured universe");
    let mut rng = SplitMix64::new(seed);
    let mut current: Vec<u32> = (1..=cfg.n_t as u32).collect();
    let mut per_round = Vec::with_capacity(cfg.rounds_x as usize);

    for round in 0..cfg.rounds_x {
        let honest_sent: Vec<u32> = match alice {
            AliceEchStrategy::Honest => current.clone(),
            AliceEchStrategy::Scripted { honest_subset, .. } => {
                let mut chosen = honest_subset(round, &current);
                chosen.sort_unstable();
                chosen.dedup();
                chosen.retain(|i| current.binary_search(i).is_ok());
                chosen
            }
        };

        let mut received = Vec::with_capacity(current.len());
        for &i in &current {
            let action = if honest_sent.binary_search(&i).is_ok() {
                OtSendAction::Honest(BitString::random(cfg.ell, &mut rng).expect("validated ell"))
            } else {
                OtSendAction::Garbage
            };
            if ot_transfer(&action, &mut rng).received {
                received.push(i);
            }
        }

        let target = keep_count(current.len(), cfg.alpha);
        if received.len() < target {
            per_round.push(EchRoundRecord {
                set_before: current,
                honest_sent,
                received,
                published: Vec::new(),
            });
            return EchTranscript {
                per_round,
                aborted: true,
                abort_round: Some(round + 1),
                chosen: None,
            };
        }

        let published = match bob {
            BobEchStrategy::Honest => rng.sample_subset(&received, target),
            BobEchStrategy::PreferWinB => {
                let (wins, rest): (Vec<u32>, Vec<u32>) =
                    received.iter().partition(|&&i| sets.in_win_b(i));
                if wins.len() >= target {
                    rng.sample_subset(&wins, target)
                } else {
                    let mut pub_set = wins.clone();
                    pub_set.extend(rng.sample_subset(&rest, target - wins.len()));
                    pub_set.sort_unstable();
                    pub_set
                }
            }
        };

        per_round.push(EchRoundRecord {
            set_before: current,
            honest_sent,
            received,
            published: published.clone(),
        });
        current = published;
    }

    let final_pick = match alice {
        AliceEchStrategy::Honest => FinalPick::Uniform,
        AliceEchStrategy::Scripted { final_pick, .. } => *final_pick,
    };
    let chosen = match final_pick {
        FinalPick::Uniform => current[rng.gen_index(current.len())],
        FinalPick::PreferWinA => {
            let winners: Vec<u32> = current
                .iter()
                .copied()
                .filter(|&i| sets.in_win_a(i))
                .collect();
            if winners.is_empty() {
                current[rng.gen_index(current.len())]
            } else {
                winners[rng.gen_index(winners.len())]
            }
        }
    };

    EchTranscript {
        per_round,
        aborted: false,
        abort_round: None,
        chosen: Some(chosen),
    }
}

pub fn classify_outcome(t: &EchTranscript, sets: &EchSets) -> OutcomeClass {
    if t.aborted {
        return OutcomeClass::Aborted;
    }
    let chosen = t.chosen.expect("non-aborted transcript has a chosen index");
    if sets.in_win_a(chosen) {
        OutcomeClass::AliceWins
    } else if sets.in_win_b(chosen) {
        OutcomeClass::BobWins
    } else {
        OutcomeClass::Neutral
    }
}

/// Honest failure probability bound, `2 exp(-2 xi^2 N)` with
/// `N = alpha^x n_t`. Valid when `exp(-2 xi^2 N) < 1/2`; outside that the
/// value is still reported but flagged not applicable.
pub fn ech_failure_bound(cfg: &EchConfig) -> BoundValue {
    let xi = cfg.xi();
    let n = cfg.expected_final_count();
    let term = (-2.0 * xi * xi * n).exp();
    BoundValue {
        value: 2.0 * term,
        applicable: term < 0.5,
    }
}

/// Bob's cheating bound, `n_b / ((2 alpha)^x n_t)`.
pub fn ech_bob_bound(cfg: &EchConfig, n_b: usize) -> f64 {
    n_b as f64 / ((2.0 * cfg.alpha).powi(cfg.rounds_x as i32) * cfg.n_t as f64)
}

/// Alice's cheating bound, `n_a * 2^-x`.
pub fn ech_alice_bound(n_a: usize, rounds_x: u32) -> f64 {
    n_a as f64 * 2f64.powi(-(rounds_x as i32))
}

/// Exact probability that one honest round aborts: `P(X < keep_count)`
/// for `X ~ Binomial(n_messages, 1/2)`, by direct summation. This is the
/// quantity the Chernoff-style bound `exp(-xi^2 n)` dominates.
pub fn round_abort_prob_exact(n_messages: usize, alpha: f64) -> Result<f64> {
    if n_messages == 0 || n_messages > EXACT_TAIL_MAX_N {
        return Err(Error::RangeExceeded {
            what: "exact binomial tail",
            detail: format!("n_messages {n_messages} not in 1..={EXACT_TAIL_MAX_N}"),
        });
    }
    let n = n_messages;
    let t = keep_count(n, alpha);
    let m = t - 1; // P(X <= m)
    if m >= n {
        return Ok(1.0);
    }

    // ln C(n, m) - n ln 2, the log of the largest summed term, then the
    // remaining terms relative to it (descending, so the ratios stay
    // in (0, 1) and the accumulation is stable).
    let mut log_c = 0.0f64;
    for j in 1..=m {
        log_c += ((n - j + 1) as f64 / j as f64).ln();
    }
    let log_top = log_c - n as f64 * std::f64::consts::LN_2;

    let mut rel = 1.0f64;
    let mut sum = 0.0f64;
    for k in (0..=m).rev() {
        sum += rel;
        if k > 0 {
            rel *= k as f64 / (n - k + 1) as f64;
            if rel < 1e-20 {
                break;
            }
        }
    }
    Ok(log_top.exp() * sum)
}
