//! The 1-out-of-2 OT reduction built on the flawed all-or-nothing
//! primitive.
//!
//! Alice splits each of her two bits into `c` XOR shares. Per round she
//! transfers `N` fresh one-bit messages; Bob must receive at least
//! `n = N/2 - beta sqrt(N)/2` of them or the run stops (this throttles
//! garbage sending). Bob publishes `n` index pairs, orienting each by a
//! secret flip so the pair order carries no information about his choice,
//! and the element choosing protocol picks one pair. Bob reveals its flip,
//! Alice encrypts one share under each side of the pair, and Bob decrypts
//! the side he knows. The chosen bit is the XOR of the `c` recovered
//! shares.

use serde::{Deserialize, Serialize};

use crate::ech::{run_ech, AliceEchStrategy, BobEchStrategy, EchConfig, EchSets, COUNT_NUDGE};
use crate::error::{Error, Result};
use crate::primitive::{ot_transfer, split_bit, xor_combine, BitString, OtSendAction, MAX_ELL};
use crate::rng::{derive_seed, SplitMix64};
use crate::BoundValue;

/// Parameters of the reduction: `c` outer rounds, tail slack `beta`,
/// `N` messages per round, and the embedded element choosing parameters
/// (`alpha`, `x`, `ell`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ot12Config {
    c: u32,
    beta: f64,
    big_n: usize,
    alpha: f64,
    rounds_x: u32,
    ell: u32,
}

impl Ot12Config {
    /// Validates ranges, `beta <= sqrt(N)/2` and a positive receive
    /// threshold. The stricter `beta <= sqrt(N)/5` wanted by the cheating
    /// bounds is not enforced here; the bound evaluators flag it instead,
    /// so honest runs outside that regime can still be simulated.
    pub fn new(
        c: u32,
        beta: f64,
        big_n: usize,
        alpha: f64,
        rounds_x: u32,
        ell: u32,
    ) -> Result<Self> {
        if c == 0 {
            return Err(Error::InvalidParameter("c must be positive".into()));
        }
        if big_n == 0 {
            return Err(Error::InvalidParameter("N must be positive".into()));
        }
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "beta must be a positive real, got {beta}"
            )));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1/2), got {alpha}"
            )));
        }
        if rounds_x == 0 {
            return Err(Error::InvalidParameter("rounds_x must be positive".into()));
        }
        if ell == 0 || ell > MAX_ELL {
            return Err(Error::InvalidParameter(format!(
                "ell must be in 1..={MAX_ELL}, got {ell}"
            )));
        }
        let n = receive_threshold(big_n, beta)?;
        if n == 0 {
            return Err(Error::InvalidParameter(
                "receive threshold must be positive".into(),
            ));
        }
        if 2 * n > big_n {
            return Err(Error::InvalidParameter(format!(
                "N = {big_n} cannot hold {n} disjoint pairs (2n must not exceed N)"
            )));
        }
        Ok(Self {
            c,
            beta,
            big_n,
            alpha,
            rounds_x,
            ell,
        })
    }

    pub fn c(&self) -> u32 {
        self.c
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn big_n(&self) -> usize {
        self.big_n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rounds_x(&self) -> u32 {
        self.rounds_x
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn xi(&self) -> f64 {
        0.5 - self.alpha
    }

    /// Minimum receipts per round, `ceil(N/2 - beta sqrt(N)/2)`.
    pub fn threshold(&self) -> usize {
        receive_threshold(self.big_n, self.beta).expect("validated at construction")
    }

    /// The element choosing configuration embedded in step 6; its universe
    /// is the `n` published pairs.
    pub fn ech_config(&self) -> EchConfig {
        EchConfig::new(self.alpha, self.rounds_x, self.threshold(), self.ell)
            .expect("validated at construction")
    }
}

/// `n = ceil(N/2 - beta sqrt(N)/2)`: fewer receipts than this aborts the
/// round. Requires `beta <= sqrt(N)/2`.
pub fn receive_threshold(big_n: usize, beta: f64) -> Result<usize> {
    if beta < 0.0 || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta must be non-negative, got {beta}"
        )));
    }
    let root = (big_n as f64).sqrt();
    if beta > root / 2.0 {
        return Err(Error::InvalidParameter(format!(
            "beta {beta} exceeds sqrt(N)/2 = {}",
            root / 2.0
        )));
    }
    let raw = big_n as f64 / 2.0 - beta * root / 2.0;
    Ok((raw - COUNT_NUDGE).ceil().max(0.0) as usize)
}

/// Alice's overall strategy: her per-transfer behaviour in step 4 plus the
/// nested element choosing strategy for step 6.
pub struct AliceOt12Strategy {
    pub kind: AliceOt12Kind,
    pub ech: AliceEchStrategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AliceOt12Kind {
    Honest,
    /// Sends `garbage_count` uniformly chosen messages per round as
    /// garbage, hoping a pair holding one of them is selected: its
    /// readable side must then be Bob's choice.
    GarbageInject {
        garbage_count: usize,
    },
}

impl AliceOt12Strategy {
    pub fn honest() -> Self {
        Self {
            kind: AliceOt12Kind::Honest,
            ech: AliceEchStrategy::Honest,
        }
    }

    /// The garbage attack: poison `garbage_count` transfers per round and
    /// steer the final pick toward a poisoned pair.
    pub fn garbage_inject(garbage_count: usize) -> Self {
        Self {
            kind: AliceOt12Kind::GarbageInject { garbage_count },
            ech: AliceEchStrategy::soft_prefer_win_a(),
        }
    }
}

/// Bob's overall strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BobOt12Strategy {
    /// Follow the protocol for the choice bit passed to [`run_ot12`].
    Honest,
    /// Pair stuffing: build as many pairs as possible where both messages
    /// arrived and push the element choosing protocol toward them, trying
    /// to decrypt both shares every round.
    BothBits,
}

/// Where a run stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AbortStage {
    /// The receipt threshold was missed: fewer than `n` arrivals.
    Threshold,
    /// The element choosing protocol aborted.
    EchAbort,
}

/// Audit record of one completed outer round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ot12RoundRecord {
    /// |S|: messages Bob received this round.
    pub received_count: usize,
    /// Indices Alice sent as garbage (her private data, kept for audits).
    pub garbage_indices: Vec<u32>,
    /// The pair index h selected by the element choosing protocol.
    pub chosen_pair: u32,
    /// The flip bit Bob announced for the selected pair.
    pub k_h: bool,
    /// The selected pair in final key order (u, v) after unflipping.
    pub final_pair: (u32, u32),
    /// The two ciphertext bits Alice returned.
    pub ciphertexts: (bool, bool),
    /// Whether the selected pair holds a garbage index (Alice's leak).
    pub pair_contains_garbage: bool,
    /// Whether both indices of the selected pair were received.
    pub pair_both_received: bool,
    /// For an honest receiver: in how many published pairs his known index
    /// sat in the first slot, over how many pairs.
    pub known_first: Option<(usize, usize)>,
}

/// Outcome of one full run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ot12Result {
    pub aborted: bool,
    pub abort_stage: Option<AbortStage>,
    pub abort_round: Option<u32>,
    /// The bit an honest receiver decoded (absent on abort or for the
    /// extracting strategy).
    pub bob_output: Option<bool>,
    /// Both bits, when the extracting receiver recovered them in every
    /// round.
    pub bob_both_bits: Option<(bool, bool)>,
    /// The extracting receiver got both shares in all `c` rounds.
    pub bob_learned_both: bool,
    /// Some round's final pair held a garbage index, identifying Bob's
    /// readable side (and hence his choice) with certainty.
    pub alice_learned_choice: bool,
    pub per_round: Vec<Ot12RoundRecord>,
}

impl Ot12Result {
    /// Line-oriented record form: one JSON object per completed round,
    /// then a summary object.
    pub fn write_records<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for (j, round) in self.per_round.iter().enumerate() {
            let rec = serde_json::json!({
                "round": j + 1,
                "received_count": round.received_count,
                "h": round.chosen_pair,
                "k_h": round.k_h,
                "final_pair": round.final_pair,
                "ciphertexts": round.ciphertexts,
                "pair_contains_garbage": round.pair_contains_garbage,
                "pair_both_received": round.pair_both_received,
            });
            writeln!(w, "{rec}")?;
        }
        let summary = serde_json::json!({
            "aborted": self.aborted,
            "abort_stage": self.abort_stage,
            "abort_round": self.abort_round,
            "bob_output": self.bob_output,
            "alice_learned_choice": self.alice_learned_choice,
            "bob_learned_both": self.bob_learned_both,
        });
        writeln!(w, "{summary}")
    }

    pub fn to_record_lines(&self) -> String {
        let mut buf = Vec::new();
        self.write_records(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }
}

struct PairList {
    /// Published pairs, flip already applied.
    published: Vec<(u32, u32)>,
    /// Bob's secret per-pair flips.
    flips: Vec<bool>,
    /// Known-side indices for the honest receiver (parallel to pairs).
    known: Option<Vec<u32>>,
}

/// Run the full reduction for secrets `(b0, b1)` and Bob's choice bit.
/// Deterministic in all arguments including the seed; round `j` draws its
/// randomness from a stream derived from `(seed, j)`.
pub fn run_ot12(
    cfg: &Ot12Config,
    secrets: (bool, bool),
    choice: bool,
    alice: &AliceOt12Strategy,
    bob: &BobOt12Strategy,
    seed: u64,
) -> Ot12Result {
    let n = cfg.threshold();
    let big_n = cfg.big_n;
    let c = cfg.c as usize;

    // split both secrets into c shares each
    let mut setup_rng = SplitMix64::new(derive_seed(seed, 0));
    let shares0 = split_bit(secrets.0, c, &mut setup_rng).expect("c >= 1");
    let shares1 = split_bit(secrets.1, c, &mut setup_rng).expect("c >= 1");

    let all_indices: Vec<u32> = (1..=big_n as u32).collect();
    let mut per_round = Vec::with_capacity(c);
    let mut recovered_choice: Vec<bool> = Vec::with_capacity(c);
    let mut recovered_both: Vec<(Option<bool>, Option<bool>)> = Vec::with_capacity(c);

    for j in 1..=c as u32 {
        let mut rng = SplitMix64::new(derive_seed(seed, u64::from(j)));

        // Alice picks her garbage set and transfers N one-bit messages
        let garbage: Vec<u32> = match alice.kind {
            AliceOt12Kind::Honest => Vec::new(),
            AliceOt12Kind::GarbageInject { garbage_count } => {
                rng.sample_subset(&all_indices, garbage_count.min(big_n))
            }
        };
        let values: Vec<bool> = (0..big_n).map(|_| rng.next_bool()).collect();

        let mut received: Vec<u32> = Vec::with_capacity(big_n);
        for &i in &all_indices {
            let action = if garbage.binary_search(&i).is_ok() {
                OtSendAction::Garbage
            } else {
                OtSendAction::Honest(BitString::from_bit(values[i as usize - 1]))
            };
            if ot_transfer(&action, &mut rng).received {
                received.push(i);
            }
        }

        if received.len() < n {
            return Ot12Result {
                aborted: true,
                abort_stage: Some(AbortStage::Threshold),
                abort_round: Some(j),
                bob_output: None,
                bob_both_bits: None,
                bob_learned_both: false,
                alice_learned_choice: per_round
                    .iter()
                    .any(|r: &Ot12RoundRecord| r.pair_contains_garbage),
                per_round,
            };
        }

        // Bob builds and publishes n index pairs
        let pair_list = match bob {
            BobOt12Strategy::Honest => build_honest_pairs(&received, big_n, n, choice, &mut rng),
            BobOt12Strategy::BothBits => build_stuffed_pairs(&received, big_n, n, &mut rng),
        };

        // the element choosing protocol over the pair universe:
        // Alice wins on pairs she poisoned; Bob wins on pairs where both
        // messages arrived (the sets are disjoint: garbage never arrives).
        let received_set = IndexSet::new(&received, big_n);
        let garbage_set = IndexSet::new(&garbage, big_n);
        let mut win_a = Vec::new();
        let mut win_b = Vec::new();
        for (idx, &(a, b)) in pair_list.published.iter().enumerate() {
            if garbage_set.contains(a) || garbage_set.contains(b) {
                win_a.push(idx as u32 + 1);
            } else if received_set.contains(a) && received_set.contains(b) {
                win_b.push(idx as u32 + 1);
            }
        }
        let sets = EchSets::new(n, win_a, win_b).expect("pair winning sets are disjoint");
        let ech_cfg = cfg.ech_config();
        let nested_bob = match bob {
            BobOt12Strategy::Honest => BobEchStrategy::Honest,
            BobOt12Strategy::BothBits => BobEchStrategy::PreferWinB,
        };
        let transcript = run_ech(&ech_cfg, &sets, &alice.ech, &nested_bob, rng.next_u64());
        if transcript.aborted {
            return Ot12Result {
                aborted: true,
                abort_stage: Some(AbortStage::EchAbort),
                abort_round: Some(j),
                bob_output: None,
                bob_both_bits: None,
                bob_learned_both: false,
                alice_learned_choice: per_round
                    .iter()
                    .any(|r: &Ot12RoundRecord| r.pair_contains_garbage),
                per_round,
            };
        }
        let h = transcript.chosen.expect("non-aborted");

        // Bob announces the flip; Alice restores the key order
        let k_h = pair_list.flips[h as usize - 1];
        let published = pair_list.published[h as usize - 1];
        let (u, v) = if k_h {
            (published.1, published.0)
        } else {
            published
        };

        // Alice encrypts her shares under r_u and r_v; Bob decrypts
        // the side(s) he knows
        let ct0 = shares0.shares[j as usize - 1] ^ values[u as usize - 1];
        let ct1 = shares1.shares[j as usize - 1] ^ values[v as usize - 1];
        match bob {
            BobOt12Strategy::Honest => {
                // The known index is on the choice side of the final pair.
                let known_index = if choice { v } else { u };
                debug_assert!(received_set.contains(known_index));
                let share = if choice {
                    ct1 ^ values[v as usize - 1]
                } else {
                    ct0 ^ values[u as usize - 1]
                };
                recovered_choice.push(share);
            }
            BobOt12Strategy::BothBits => {
                let s0 = received_set
                    .contains(u)
                    .then(|| ct0 ^ values[u as usize - 1]);
                let s1 = received_set
                    .contains(v)
                    .then(|| ct1 ^ values[v as usize - 1]);
                recovered_both.push((s0, s1));
            }
        }

        let known_first = pair_list.known.as_ref().map(|known| {
            let known_set = IndexSet::new(known, big_n);
            let firsts = pair_list
                .published
                .iter()
                .filter(|&&(a, _)| known_set.contains(a))
                .count();
            (firsts, pair_list.published.len())
        });
        per_round.push(Ot12RoundRecord {
            received_count: received.len(),
            garbage_indices: garbage,
            chosen_pair: h,
            k_h,
            final_pair: (u, v),
            ciphertexts: (ct0, ct1),
            pair_contains_garbage: garbage_set.contains(u) || garbage_set.contains(v),
            pair_both_received: received_set.contains(u) && received_set.contains(v),
            known_first,
        });
    }

    // combine the per-round shares
    let alice_learned_choice = per_round.iter().any(|r| r.pair_contains_garbage);
    match bob {
        BobOt12Strategy::Honest => Ot12Result {
            aborted: false,
            abort_stage: None,
            abort_round: None,
            bob_output: Some(xor_combine(&recovered_choice).expect("c rounds completed")),
            bob_both_bits: None,
            bob_learned_both: false,
            alice_learned_choice,
            per_round,
        },
        BobOt12Strategy::BothBits => {
            let learned_both = recovered_both
                .iter()
                .all(|(s0, s1)| s0.is_some() && s1.is_some());
            let bob_both_bits = learned_both.then(|| {
                let b0: Vec<bool> = recovered_both.iter().map(|(s, _)| s.unwrap()).collect();
                let b1: Vec<bool> = recovered_both.iter().map(|(_, s)| s.unwrap()).collect();
                (
                    xor_combine(&b0).expect("c rounds"),
                    xor_combine(&b1).expect("c rounds"),
                )
            });
            Ot12Result {
                aborted: false,
                abort_stage: None,
                abort_round: None,
                bob_output: None,
                bob_both_bits,
                bob_learned_both: learned_both,
                alice_learned_choice,
                per_round,
            }
        }
    }
}

/// Honest pair construction: the known sides are a uniform `n`-subset of
/// the received set, partners a uniform `n`-subset of the rest, matched
/// and listed in shuffled order so ranks leak nothing; each pair is then
/// oriented by a secret fair flip.
fn build_honest_pairs(
    received: &[u32],
    big_n: usize,
    n: usize,
    choice: bool,
    rng: &mut SplitMix64,
) -> PairList {
    let mut known = rng.sample_subset(received, n);
    let known_set = IndexSet::new(&known, big_n);
    let rest: Vec<u32> = (1..=big_n as u32)
        .filter(|&i| !known_set.contains(i))
        .collect();
    let mut partner = rng.sample_subset(&rest, n);
    rng.shuffle(&mut known);
    rng.shuffle(&mut partner);

    let mut published = Vec::with_capacity(n);
    let mut flips = Vec::with_capacity(n);
    for i in 0..n {
        // Pre-flip order: the known index sits on the side of Bob's
        // choice bit (first for B = 0, second for B = 1).
        let pre = if choice {
            (partner[i], known[i])
        } else {
            (known[i], partner[i])
        };
        let k = rng.next_bool();
        published.push(if k { (pre.1, pre.0) } else { pre });
        flips.push(k);
    }
    PairList {
        published,
        flips,
        known: Some(known),
    }
}

/// Pair stuffing: as many both-received pairs as fit, the remainder from
/// leftover indices.
fn build_stuffed_pairs(received: &[u32], big_n: usize, n: usize, rng: &mut SplitMix64) -> PairList {
    let mut shuffled = received.to_vec();
    rng.shuffle(&mut shuffled);
    let stuffed = (shuffled.len() / 2).min(n);

    let mut published = Vec::with_capacity(n);
    for i in 0..stuffed {
        published.push((shuffled[2 * i], shuffled[2 * i + 1]));
    }
    let used = IndexSet::new(&shuffled[..2 * stuffed], big_n);
    let mut rest: Vec<u32> = (1..=big_n as u32).filter(|&i| !used.contains(i)).collect();
    rng.shuffle(&mut rest);
    for i in 0..n - stuffed {
        published.push((rest[2 * i], rest[2 * i + 1]));
    }

    let mut flips = Vec::with_capacity(n);
    for pair in published.iter_mut() {
        let k = rng.next_bool();
        if k {
            *pair = (pair.1, pair.0);
        }
        flips.push(k);
    }
    PairList {
        published,
        flips,
        known: None,
    }
}

/// Dense membership mask over `1..=big_n`.
struct IndexSet {
    mask: Vec<bool>,
}

impl IndexSet {
    fn new(indices: &[u32], big_n: usize) -> Self {
        let mut mask = vec![false; big_n + 1];
        for &i in indices {
            mask[i as usize] = true;
        }
        Self { mask }
    }

    fn contains(&self, i: u32) -> bool {
        self.mask[i as usize]
    }
}

/// Honest abort bound `c (exp(-beta^2/2) + 2 exp(-N xi^2 2^(-x-2)))`.
/// Applicable under `beta <= sqrt(N)/2` and `xi <= 1/(2x)`.
pub fn ot12_failure_bound(cfg: &Ot12Config) -> BoundValue {
    let applicable = cfg.beta <= (cfg.big_n as f64).sqrt() / 2.0
        && cfg.xi() <= 1.0 / (2.0 * f64::from(cfg.rounds_x));
    BoundValue {
        value: failure_bound_value(
            f64::from(cfg.c),
            cfg.beta,
            cfg.big_n as f64,
            cfg.xi(),
            f64::from(cfg.rounds_x),
        ),
        applicable,
    }
}

/// Bob's cheating bound `(1 - 2 xi)^(-c x) (2/3)^c`. Applicable under
/// `beta <= sqrt(N)/5`.
pub fn ot12_bob_bound(cfg: &Ot12Config) -> BoundValue {
    BoundValue {
        value: bob_bound_value(f64::from(cfg.c), cfg.xi(), f64::from(cfg.rounds_x)),
        applicable: cfg.beta <= (cfg.big_n as f64).sqrt() / 5.0,
    }
}

/// Alice's cheating bound `c beta sqrt(N) 2^-x`, reported raw (it may
/// exceed one; comparisons clamp).
pub fn ot12_alice_bound(cfg: &Ot12Config) -> f64 {
    alice_bound_value(
        f64::from(cfg.c),
        cfg.beta,
        cfg.big_n as f64,
        f64::from(cfg.rounds_x),
    )
}

/// `c (exp(-beta^2/2) + 2 exp(-N xi^2 2^(-x-2)))` on raw reals; shared by
/// the config wrapper above and the parameter solver, whose `N` values
/// exceed any integer width.
pub fn failure_bound_value(c: f64, beta: f64, big_n: f64, xi: f64, x: f64) -> f64 {
    c * ((-beta * beta / 2.0).exp() + 2.0 * (-big_n * xi * xi * (-x - 2.0).exp2()).exp())
}

/// `(1 - 2 xi)^(-c x) (2/3)^c` on raw reals.
pub fn bob_bound_value(c: f64, xi: f64, x: f64) -> f64 {
    (1.0 - 2.0 * xi).powf(-c * x) * (2.0f64 / 3.0).powf(c)
}

/// `c beta sqrt(N) 2^-x` on raw reals.
pub fn alice_bound_value(c: f64, beta: f64, big_n: f64, x: f64) -> f64 {
    c * beta * big_n.sqrt() * (-x).exp2()
}
