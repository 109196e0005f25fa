//! The original Crepeau reduction and the attack that breaks it over the
//! flawed primitive.
//!
//! Bob builds a set `U` of `n = N/3` indices he received and a disjoint
//! decoy set `V` of `n` further indices, announces them in choice order,
//! and Alice encrypts one message under the XOR of each set's values.
//! Over a perfect all-or-nothing OT the decoys hide which set Bob can
//! decrypt. Over the flawed primitive Alice simply poisons `s` transfers:
//! a poisoned index can only ever appear in the decoy set, so one sighting
//! identifies Bob's choice, with probability at least `1 - (2/3)^s`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primitive::{ot_transfer, BitString, OtSendAction, MAX_ELL};
use crate::rng::{derive_seed, SplitMix64};

/// Parameters of one Crepeau run: `N` transfers (a multiple of three),
/// `s` of which Alice sends as garbage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrepeauConfig {
    big_n: usize,
    dishonest_s: usize,
    ell: u32,
}

impl CrepeauConfig {
    pub fn new(big_n: usize, dishonest_s: usize, ell: u32) -> Result<Self> {
        if big_n == 0 || !big_n.is_multiple_of(3) {
            return Err(Error::InvalidParameter(format!(
                "N must be a positive multiple of 3, got {big_n}"
            )));
        }
        if dishonest_s > big_n {
            return Err(Error::InvalidParameter(format!(
                "s = {dishonest_s} exceeds N = {big_n}"
            )));
        }
        if ell == 0 || ell > MAX_ELL {
            return Err(Error::InvalidParameter(format!(
                "ell must be in 1..={MAX_ELL}, got {ell}"
            )));
        }
        Ok(Self {
            big_n,
            dishonest_s,
            ell,
        })
    }

    pub fn big_n(&self) -> usize {
        self.big_n
    }

    /// Alice's dishonest transfer count `s`.
    pub fn dishonest_s(&self) -> usize {
        self.dishonest_s
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    /// `n = N / 3`, the size of each announced set.
    pub fn set_size(&self) -> usize {
        self.big_n / 3
    }
}

/// Record of one Crepeau run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrepeauTranscript {
    /// U: indices Bob knows (received), empty on abort.
    pub known_set: Vec<u32>,
    /// V: the decoy indices.
    pub decoy_set: Vec<u32>,
    /// (X, Y) as announced: (U, V) for choice 0, (V, U) for choice 1.
    pub announced: Option<(Vec<u32>, Vec<u32>)>,
    /// (k0, k1): XOR of Alice's values over X and over Y.
    pub keys: Option<(BitString, BitString)>,
    /// (k0 xor m0, k1 xor m1).
    pub ciphertexts: Option<(BitString, BitString)>,
    /// The message Bob decodes with the key he can compute.
    pub bob_output: Option<BitString>,
    pub aborted: bool,
    /// Some garbage index landed in exactly one announced set; that set
    /// cannot be Bob's known set, so Alice reads off his choice.
    pub alice_identified_choice: bool,
    /// Alice's garbage indices (her private data, kept for audits).
    pub garbage: Vec<u32>,
}

impl CrepeauTranscript {
    /// Line-oriented record form: a sets object then a summary object.
    pub fn write_records<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let sets = serde_json::json!({
            "known_set": self.known_set,
            "decoy_set": self.decoy_set,
            "announced": self.announced,
        });
        writeln!(w, "{sets}")?;
        let summary = serde_json::json!({
            "aborted": self.aborted,
            "alice_identified_choice": self.alice_identified_choice,
            "keys": self.keys,
            "ciphertexts": self.ciphertexts,
            "bob_output": self.bob_output,
        });
        writeln!(w, "{summary}")
    }

    pub fn to_record_lines(&self) -> String {
        let mut buf = Vec::new();
        self.write_records(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }
}

/// Run the Crepeau reduction for messages `(m0, m1)` and Bob's choice.
/// Alice garbages a uniform `s`-subset of the transfers. Deterministic in
/// all arguments including the seed.
pub fn run_crepeau(
    cfg: &CrepeauConfig,
    messages: (&BitString, &BitString),
    choice: bool,
    seed: u64,
) -> Result<CrepeauTranscript> {
    if messages.0.len() != cfg.ell || messages.1.len() != cfg.ell {
        return Err(Error::InvalidParameter(format!(
            "messages must be {} bits, got {} and {}",
            cfg.ell,
            messages.0.len(),
            messages.1.len()
        )));
    }
    let n = cfg.set_size();
    let big_n = cfg.big_n;
    let mut rng = SplitMix64::new(seed);

    let all_indices: Vec<u32> = (1..=big_n as u32).collect();
    let garbage = rng.sample_subset(&all_indices, cfg.dishonest_s);

    // N random ell-bit values, each transferred once
    let mut values = Vec::with_capacity(big_n);
    for _ in 0..big_n {
        values.push(BitString::random(cfg.ell, &mut rng).expect("validated ell"));
    }
    let mut received: Vec<u32> = Vec::with_capacity(big_n);
    for &i in &all_indices {
        let action = if garbage.binary_search(&i).is_ok() {
            OtSendAction::Garbage
        } else {
            OtSendAction::Honest(values[i as usize - 1])
        };
        if ot_transfer(&action, &mut rng).received {
            received.push(i);
        }
    }

    // U from received indices, the decoys uniform among the rest
    if received.len() < n {
        return Ok(CrepeauTranscript {
            known_set: Vec::new(),
            decoy_set: Vec::new(),
            announced: None,
            keys: None,
            ciphertexts: None,
            bob_output: None,
            aborted: true,
            alice_identified_choice: false,
            garbage,
        });
    }
    let known_set = rng.sample_subset(&received, n);
    let outside: Vec<u32> = {
        let mut mask = vec![false; big_n + 1];
        for &i in &known_set {
            mask[i as usize] = true;
        }
        all_indices
            .iter()
            .copied()
            .filter(|&i| !mask[i as usize])
            .collect()
    };
    let decoy_set = rng.sample_subset(&outside, n);

    // announce in choice order
    let (x_set, y_set) = if choice {
        (decoy_set.clone(), known_set.clone())
    } else {
        (known_set.clone(), decoy_set.clone())
    };

    // keys and ciphertexts
    let xor_over = |indices: &[u32]| -> BitString {
        indices.iter().fold(
            BitString::zero(cfg.ell).expect("validated ell"),
            |acc, &i| acc.xor(&values[i as usize - 1]).expect("same length"),
        )
    };
    let k0 = xor_over(&x_set);
    let k1 = xor_over(&y_set);
    let ct0 = k0.xor(messages.0).expect("same length");
    let ct1 = k1.xor(messages.1).expect("same length");

    // Bob XORs his received values over U, which equals whichever key
    // covers U, and strips it from the matching ciphertext.
    let k_known = xor_over(&known_set);
    let bob_output = if choice {
        ct1.xor(&k_known).expect("same length")
    } else {
        ct0.xor(&k_known).expect("same length")
    };

    let in_garbage = |set: &[u32]| set.iter().any(|i| garbage.binary_search(i).is_ok());
    let alice_identified_choice = in_garbage(&x_set) ^ in_garbage(&y_set);

    Ok(CrepeauTranscript {
        known_set,
        decoy_set,
        announced: Some((x_set, y_set)),
        keys: Some((k0, k1)),
        ciphertexts: Some((ct0, ct1)),
        bob_output: Some(bob_output),
        aborted: false,
        alice_identified_choice,
        garbage,
    })
}

/// The paper's attack estimate `1 - (2/3)^s`: with `s` poisoned transfers,
/// the decoy set picks up at least one of them this often (each poisoned
/// index joins the decoys with probability at least 1/3).
pub fn crepeau_attack_bound(s: usize) -> f64 {
    1.0 - (2.0f64 / 3.0).powi(s as i32)
}

/// Monte Carlo estimate of the identification probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrepeauAttackEstimate {
    pub trials: u64,
    pub aborted: u64,
    pub identified: u64,
    /// Identification rate conditioned on non-abort; absent when every
    /// trial aborted.
    pub attack_rate: Option<f64>,
    /// Binomial standard error of `attack_rate`.
    pub std_err: Option<f64>,
    pub abort_rate: f64,
}

/// Estimate `P(alice identifies the choice | run completes)` by running
/// the protocol `trials` times with Bob's selection exactly as in
/// [`run_crepeau`]. Message contents and the choice bit are irrelevant to
/// the event; fixed inputs are used.
pub fn crepeau_attack_exact(
    cfg: &CrepeauConfig,
    trials: u64,
    seed: u64,
) -> Result<CrepeauAttackEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let m0 = BitString::zero(cfg.ell())?;
    let m1 = BitString::zero(cfg.ell())?;
    let mut aborted = 0u64;
    let mut identified = 0u64;
    for t in 0..trials {
        let transcript = run_crepeau(cfg, (&m0, &m1), false, derive_seed(seed, t))?;
        if transcript.aborted {
            aborted += 1;
        } else if transcript.alice_identified_choice {
            identified += 1;
        }
    }
    let completed = trials - aborted;
    let attack_rate = (completed > 0).then(|| identified as f64 / completed as f64);
    let std_err = attack_rate.map(|p| (p * (1.0 - p) / completed as f64).sqrt());
    Ok(CrepeauAttackEstimate {
        trials,
        aborted,
        identified,
        attack_rate,
        std_err,
        abort_rate: aborted as f64 / trials as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msgs(ell: u32, seed: u64) -> (BitString, BitString) {
        let mut rng = SplitMix64::new(seed);
        (
            BitString::random(ell, &mut rng).unwrap(),
            BitString::random(ell, &mut rng).unwrap(),
        )
    }

    #[test]
    fn config_validation() {
        assert!(CrepeauConfig::new(0, 0, 8).is_err());
        assert!(CrepeauConfig::new(100, 0, 8).is_err());
        assert!(CrepeauConfig::new(300, 301, 8).is_err());
        assert!(CrepeauConfig::new(300, 5, 0).is_err());
        assert_eq!(CrepeauConfig::new(300, 5, 8).unwrap().set_size(), 100);
    }

    #[test]
    fn honest_alice_never_identifies_and_bob_decodes() {
        let cfg = CrepeauConfig::new(30, 0, 16).unwrap();
        let (m0, m1) = msgs(16, 1);
        for seed in 0..300u64 {
            for choice in [false, true] {
                let t = run_crepeau(&cfg, (&m0, &m1), choice, seed).unwrap();
                assert!(!t.alice_identified_choice);
                if !t.aborted {
                    let expect = if choice { m1 } else { m0 };
                    assert_eq!(t.bob_output, Some(expect));
                }
            }
        }
    }

    #[test]
    fn all_garbage_always_aborts() {
        let cfg = CrepeauConfig::new(30, 30, 8).unwrap();
        let (m0, m1) = msgs(8, 2);
        for seed in 0..100u64 {
            let t = run_crepeau(&cfg, (&m0, &m1), false, seed).unwrap();
            assert!(t.aborted);
        }
        let est = crepeau_attack_exact(&cfg, 200, 3).unwrap();
        assert_eq!(est.abort_rate, 1.0);
        assert_eq!(est.attack_rate, None);
    }

    #[test]
    fn garbage_never_lands_in_the_known_set() {
        let cfg = CrepeauConfig::new(60, 10, 8).unwrap();
        let (m0, m1) = msgs(8, 4);
        for seed in 0..300u64 {
            let t = run_crepeau(&cfg, (&m0, &m1), seed % 2 == 0, seed).unwrap();
            for g in &t.garbage {
                assert!(t.known_set.binary_search(g).is_err());
            }
        }
    }

    #[test]
    fn unordered_announcement_is_choice_invariant() {
        // Paired seeds: the choice bit only swaps the announcement order.
        let cfg = CrepeauConfig::new(60, 4, 8).unwrap();
        let (m0, m1) = msgs(8, 5);
        for seed in 0..200u64 {
            let a = run_crepeau(&cfg, (&m0, &m1), false, seed).unwrap();
            let b = run_crepeau(&cfg, (&m0, &m1), true, seed).unwrap();
            assert_eq!(a.aborted, b.aborted);
            assert_eq!(a.known_set, b.known_set);
            assert_eq!(a.decoy_set, b.decoy_set);
            if let (Some((ax, ay)), Some((bx, by))) = (&a.announced, &b.announced) {
                assert_eq!((ax, ay), (by, bx));
            }
            assert_eq!(a.alice_identified_choice, b.alice_identified_choice);
        }
    }

    #[test]
    fn attack_bound_values() {
        assert_eq!(crepeau_attack_bound(0), 0.0);
        assert!((crepeau_attack_bound(1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((crepeau_attack_bound(5) - 211.0 / 243.0).abs() < 1e-15);
    }

    #[test]
    fn attack_estimate_matches_hypergeometric_form() {
        // The decoys are a uniform n-subset of the 2n indices outside U
        // and every garbage index lies out there, so conditioned on a
        // completed run P(no garbage among decoys) = C(2n-s, n) / C(2n, n).
        // For s = 5, n = 100 that leaves an identification probability of
        // 1 - prod_{i=0..4} (100 - i)/(200 - i) = 0.97030839...
        let cfg = CrepeauConfig::new(300, 5, 8).unwrap();
        let est = crepeau_attack_exact(&cfg, 30_000, 42).unwrap();
        let rate = est.attack_rate.unwrap();
        let se = est.std_err.unwrap();
        let closed_form = 0.970_308_394_765_706_7;
        assert!(
            (rate - closed_form).abs() <= 4.0 * se,
            "rate {rate} vs {closed_form} (se {se})"
        );
        // and the paper's 1 - (2/3)^s is a lower bound on it
        assert!(rate >= crepeau_attack_bound(5) - 4.0 * se);
    }

    #[test]
    fn attack_rate_monotone_in_s() {
        let trials = 4000u64;
        let mut prev = -1.0f64;
        for s in [0usize, 1, 2, 4, 6, 10] {
            let cfg = CrepeauConfig::new(300, s, 8).unwrap();
            let est = crepeau_attack_exact(&cfg, trials, 7).unwrap();
            let rate = est.attack_rate.unwrap();
            // 3-sigma aware comparison on the difference of two estimates
            let slack = 3.0 * (2.0 * 0.25 / trials as f64).sqrt();
            assert!(
                rate >= prev - slack,
                "attack rate fell from {prev} to {rate} at s = {s}"
            );
            prev = rate;
        }
    }

    #[test]
    fn estimates_are_deterministic() {
        let cfg = CrepeauConfig::new(300, 5, 8).unwrap();
        let a = crepeau_attack_exact(&cfg, 1000, 11).unwrap();
        let b = crepeau_attack_exact(&cfg, 1000, 11).unwrap();
        assert_eq!(a, b);
        assert!(crepeau_attack_exact(&cfg, 0, 11).is_err());
    }

    #[test]
    fn record_lines_shape() {
        let cfg = CrepeauConfig::new(30, 2, 8).unwrap();
        let (m0, m1) = msgs(8, 6);
        let t = run_crepeau(&cfg, (&m0, &m1), true, 9).unwrap();
        let records = t.to_record_lines();
        let lines: Vec<&str> = records.lines().collect();
        assert_eq!(lines.len(), 2);
        for line in lines {
            serde_json::from_str::<serde_json::Value>(line).unwrap();
        }
    }
}
