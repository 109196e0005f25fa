//! The flawed all-or-nothing OT primitive, modelled as an ideal
//! functionality, plus the bit-string and XOR share utilities the
//! reduction protocols are built from.
//!
//! The primitive delivers an honest message with probability exactly 1/2
//! and tells the receiver whether it arrived. Its flaw: the sender may
//! substitute garbage for the real message, which guarantees non-delivery
//! while staying indistinguishable (to the receiver, in a single run) from
//! an honest miss. The sender can never push delivery above 1/2.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Default message length in bits, used wherever a protocol does not pin
/// its own. Long enough that guessing an unreceived message is negligible
/// at desk scale.
pub const DEFAULT_ELL: u32 = 32;

/// Maximum supported message length. Messages are packed into a single
/// 64-bit word.
pub const MAX_ELL: u32 = 64;

/// A fixed-length bit string (an OT message).
///
/// Bit `i` is the `i`-th transmitted bit; serialized as a `"0110..."`
/// string with bit 0 leftmost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: u64,
    len: u32,
}

impl BitString {
    pub fn new(bits: &[bool]) -> Result<Self> {
        let len = bits.len() as u32;
        check_len(len)?;
        let mut packed = 0u64;
        for (i, &b) in bits.iter().enumerate() {
            if b {
                packed |= 1 << i;
            }
        }
        Ok(Self { bits: packed, len })
    }

    /// Uniformly random string of `len` bits.
    pub fn random(len: u32, rng: &mut SplitMix64) -> Result<Self> {
        check_len(len)?;
        Ok(Self {
            bits: rng.next_u64() & mask(len),
            len,
        })
    }

    pub fn zero(len: u32) -> Result<Self> {
        check_len(len)?;
        Ok(Self { bits: 0, len })
    }

    /// Single-bit message.
    pub fn from_bit(b: bool) -> Self {
        Self {
            bits: b as u64,
            len: 1,
        }
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false // length is always >= 1
    }

    pub fn bit(&self, i: u32) -> bool {
        assert!(i < self.len);
        (self.bits >> i) & 1 == 1
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.bit(i)).collect()
    }

    /// The value of a single-bit string.
    pub fn as_bit(&self) -> Option<bool> {
        (self.len == 1).then(|| self.bit(0))
    }

    /// Bitwise XOR; lengths must match.
    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len != other.len {
            return Err(Error::InvalidParameter(format!(
                "xor of bit strings with lengths {} and {}",
                self.len, other.len
            )));
        }
        Ok(Self {
            bits: self.bits ^ other.bits,
            len: self.len,
        })
    }
}

fn check_len(len: u32) -> Result<()> {
    if len == 0 || len > MAX_ELL {
        return Err(Error::InvalidParameter(format!(
            "bit string length must be in 1..={MAX_ELL}, got {len}"
        )));
    }
    Ok(())
}

fn mask(len: u32) -> u64 {
    if len == 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl std::fmt::Display for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let bits: Vec<bool> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(D::Error::custom(format!("invalid bit character {c:?}"))),
            })
            .collect::<std::result::Result<_, _>>()?;
        BitString::new(&bits).map_err(D::Error::custom)
    }
}

/// The sender's per-transfer decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OtSendAction {
    /// Send the message faithfully.
    Honest(BitString),
    /// Send an undecodable message: the receiver can never decode it and
    /// cannot tell it apart from an honest miss.
    Garbage,
}

/// What the receiver ends up with after one transfer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OtReceipt {
    pub received: bool,
    pub value: Option<BitString>,
}

/// XOR share split of a single bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretShares {
    pub shares: Vec<bool>,
    pub secret: bool,
}

/// One run of the flawed all-or-nothing OT.
///
/// An honest message arrives with probability exactly 1/2; garbage never
/// arrives. The delivery coin is drawn first and does not depend on the
/// action or on the message contents, so a fixed randomness stream yields
/// the same receipt sequence whatever the sender transmits.
pub fn ot_transfer(action: &OtSendAction, rng: &mut SplitMix64) -> OtReceipt {
    ot_transfer_with_guess(action, 0.0, rng)
}

/// [`ot_transfer`] with an explicit probability that the receiver guesses
/// an honestly sent but undelivered message. The protocols neglect this
/// event (it is `2^-ell`); the knob exists so tests can confirm the
/// neglect is harmless. Garbage carries no decodable value, so it can
/// never be guessed.
pub fn ot_transfer_with_guess(
    action: &OtSendAction,
    guess_prob: f64,
    rng: &mut SplitMix64,
) -> OtReceipt {
    let coin = rng.next_bool();
    match action {
        OtSendAction::Honest(m) => {
            let mut received = coin;
            if !received && guess_prob > 0.0 {
                received = rng.next_f64() < guess_prob;
            }
            OtReceipt {
                received,
                value: received.then_some(*m),
            }
        }
        OtSendAction::Garbage => OtReceipt {
            received: false,
            value: None,
        },
    }
}

/// Split `secret` into `c` bits whose XOR equals `secret`; the first
/// `c - 1` shares are uniform.
pub fn split_bit(secret: bool, c: usize, rng: &mut SplitMix64) -> Result<SecretShares> {
    if c == 0 {
        return Err(Error::InvalidParameter(
            "share count c must be at least 1".into(),
        ));
    }
    let mut shares: Vec<bool> = (0..c - 1).map(|_| rng.next_bool()).collect();
    let parity = shares.iter().fold(false, |acc, &b| acc ^ b);
    shares.push(parity ^ secret);
    Ok(SecretShares { shares, secret })
}

/// XOR of a non-empty share sequence; inverse of [`split_bit`].
pub fn xor_combine(shares: &[bool]) -> Result<bool> {
    if shares.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot combine an empty share sequence".into(),
        ));
    }
    Ok(shares.iter().fold(false, |acc, &b| acc ^ b))
}
