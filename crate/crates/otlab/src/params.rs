//! Security parameter construction: for a target cheating bound
//! `epsilon`, derive `(c, beta, x, xi, alpha, N)` so that both parties'
//! cheating probabilities stay below `epsilon` while honest runs abort
//! with probability at most 1/2.
//!
//! The chain fixes the two failure terms at 1/4 and 1/8, which pins
//! `beta = sqrt(2 ln 4c)` and `N = ln(8c) xi^-2 2^(x+2)`; the round count
//! comes from `(8/9)^c <= epsilon`, the round depth `x` from an implicit
//! equation solved by bisection, and `xi = 1/(8x)`. The resulting `N` is
//! astronomically large for interesting `epsilon`: these values are an
//! existence proof, evaluated symbolically, not a simulation input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ot12::{alice_bound_value, bob_bound_value, failure_bound_value};
use crate::primitive::DEFAULT_ELL;

/// Search bracket for the implicit `x` equation. Its left side decays
/// like `2^(-x/2)`, so any root for a workable `(epsilon, c)` pair lies
/// far below the upper end.
pub const X_BRACKET: (f64, f64) = (1.0, 200.0);

/// Residual tolerance required of the solved `x`.
pub const X_RESIDUAL_TOL: f64 = 1e-9;

/// Relative tolerance for the validation comparisons. The construction
/// meets the failure target with equality in exact arithmetic, so f64
/// evaluation may land a few ulps past it.
pub const VALIDATION_RTOL: f64 = 1e-12;

/// A full parameter assignment for the reduction at security `epsilon`.
///
/// `big_n` is kept real-valued: for small `epsilon` the message count
/// exceeds any fixed-width integer, and every bound formula consumes the
/// real form. [`solve_big_n`] produces the ceiled integer when it fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub epsilon: f64,
    /// Outer round count.
    pub c: u32,
    /// Element choosing rounds (real in the formulas; a simulator would
    /// run `ceil(x)` rounds).
    pub x: f64,
    pub beta: f64,
    pub xi: f64,
    /// `1/2 - xi`, stored so that `alpha + xi == 1/2` holds exactly.
    pub alpha: f64,
    /// Messages per outer round (real-valued form of the count).
    pub big_n: f64,
    pub ell: u32,
}

/// One violated validation condition, with both sides of the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub condition: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of [`validate_parameter_set`]: empty means every condition
/// holds.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Smallest round count with `(8/9)^c <= epsilon`:
/// `ceil(ln(epsilon) / ln(8/9))`.
pub fn solve_c(epsilon: f64) -> Result<u32> {
    check_epsilon(epsilon)?;
    let raw = epsilon.ln() / (8.0f64 / 9.0).ln();
    Ok(raw.ceil() as u32)
}

/// `beta = sqrt(2 ln(4c))`, which pins the threshold failure term at
/// `c exp(-beta^2/2) = 1/4`.
pub fn solve_beta(c: u32) -> Result<f64> {
    if c == 0 {
        return Err(Error::InvalidParameter("c must be positive".into()));
    }
    Ok((2.0 * (4.0 * f64::from(c)).ln()).sqrt())
}

/// Left side minus right side of the implicit `x` equation,
/// `c ln(8c) / epsilon * 2^(5/2 - x/2) - 1/(4x)`.
pub fn x_residual(epsilon: f64, c: u32, x: f64) -> f64 {
    let a = f64::from(c) * (8.0 * f64::from(c)).ln() / epsilon;
    a * (2.5 - x / 2.0).exp2() - 1.0 / (4.0 * x)
}

/// Rightmost sign-change interval of the residual inside [`X_BRACKET`],
/// scanned on a half-unit grid.
pub fn bracket_x(epsilon: f64, c: u32) -> Result<(f64, f64)> {
    check_epsilon(epsilon)?;
    let (lo, hi) = X_BRACKET;
    let steps = ((hi - lo) * 2.0) as usize;
    let grid = |i: usize| lo + i as f64 * 0.5;
    let mut best = None;
    let mut prev = x_residual(epsilon, c, grid(0));
    for i in 1..=steps {
        let cur = x_residual(epsilon, c, grid(i));
        if prev > 0.0 && cur <= 0.0 {
            best = Some((grid(i - 1), grid(i)));
        }
        prev = cur;
    }
    best.ok_or(Error::NoRoot {
        what: "element choosing depth x",
        lo,
        hi,
    })
}

/// Solve the implicit equation for `x` by bisection over the rightmost
/// bracket, so the inequality holds for every `x` past the returned root.
/// The residual at the result is at most [`X_RESIDUAL_TOL`].
pub fn solve_x(epsilon: f64, c: u32) -> Result<f64> {
    if c == 0 {
        return Err(Error::InvalidParameter("c must be positive".into()));
    }
    let (mut lo, mut hi) = bracket_x(epsilon, c)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r = x_residual(epsilon, c, mid);
        if r.abs() <= X_RESIDUAL_TOL / 10.0 {
            return Ok(mid);
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    if x_residual(epsilon, c, mid).abs() <= X_RESIDUAL_TOL {
        Ok(mid)
    } else {
        Err(Error::NoRoot {
            what: "element choosing depth x (residual did not converge)",
            lo,
            hi,
        })
    }
}

/// `xi = 1/(8x)`; satisfies the `xi <= 1/(2x)` condition with room.
pub fn solve_xi(x: f64) -> Result<f64> {
    if x.is_nan() || x < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "x must be at least 1, got {x}"
        )));
    }
    Ok(1.0 / (8.0 * x))
}

/// Real-valued message count `N = ln(8c) xi^-2 2^(x+2)`, which pins the
/// element choosing failure term at `c exp(-N xi^2 2^(-x-2)) = 1/8`.
pub fn big_n_real(c: u32, xi: f64, x: f64) -> f64 {
    (8.0 * f64::from(c)).ln() * xi.powi(-2) * (x + 2.0).exp2()
}

/// The same count after substituting `xi = 1/(8x)`:
/// `N = ln(8c) x^2 2^(x+8)`.
pub fn big_n_from_x(c: u32, x: f64) -> f64 {
    (8.0 * f64::from(c)).ln() * x * x * (x + 8.0).exp2()
}

/// Integer message count `ceil(ln(8c) xi^-2 2^(x+2))`. Errors when the
/// value exceeds the 128-bit range; callers needing only the bounds use
/// [`big_n_real`].
pub fn solve_big_n(c: u32, xi: f64, x: f64) -> Result<u128> {
    if c == 0 {
        return Err(Error::InvalidParameter("c must be positive".into()));
    }
    if !(xi > 0.0 && xi < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "xi must lie in (0, 1/2), got {xi}"
        )));
    }
    if x.is_nan() || x < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "x must be at least 1, got {x}"
        )));
    }
    let v = big_n_real(c, xi, x).ceil();
    if !v.is_finite() || v > u128::MAX as f64 {
        return Err(Error::RangeExceeded {
            what: "message count N",
            detail: format!("{v:e} exceeds the 128-bit range"),
        });
    }
    Ok(v as u128)
}

/// Derive the full parameter set for a target `epsilon`. The result
/// passes [`validate_parameter_set`] with no violations.
pub fn derive_parameter_set(epsilon: f64) -> Result<ParameterSet> {
    check_epsilon(epsilon)?;
    let c = solve_c(epsilon)?;
    let beta = solve_beta(c)?;
    let x = solve_x(epsilon, c)?;
    let xi = solve_xi(x)?;
    // Snap xi to the value that makes alpha + xi exactly 1/2 in f64
    // (0.5 - alpha is exact for alpha in [1/4, 1/2] by Sterbenz).
    let alpha = 0.5 - xi;
    let xi = 0.5 - alpha;
    let big_n = big_n_real(c, xi, x);
    Ok(ParameterSet {
        epsilon,
        c,
        x,
        beta,
        xi,
        alpha,
        big_n,
        ell: DEFAULT_ELL,
    })
}

/// Check the three cheating/failure bounds and the three side conditions;
/// every violated comparison is reported with both sides. Comparisons use
/// [`VALIDATION_RTOL`] of slack.
pub fn validate_parameter_set(ps: &ParameterSet) -> ValidationReport {
    let c = f64::from(ps.c);
    let mut report = ValidationReport::default();
    let mut check = |condition: &'static str, lhs: f64, rhs: f64| {
        if lhs.is_nan() || lhs > rhs + rhs.abs() * VALIDATION_RTOL {
            report.violations.push(Violation {
                condition,
                lhs,
                rhs,
            });
        }
    };
    check(
        "pa",
        alice_bound_value(c, ps.beta, ps.big_n, ps.x),
        ps.epsilon,
    );
    check("pb", bob_bound_value(c, ps.xi, ps.x), ps.epsilon);
    check(
        "pf",
        failure_bound_value(c, ps.beta, ps.big_n, ps.xi, ps.x),
        0.5,
    );
    check("beta_bound1", ps.beta, ps.big_n.sqrt() / 2.0);
    check("beta_bound2", ps.beta, ps.big_n.sqrt() / 5.0);
    check("dzeta_bound", ps.xi, 1.0 / (2.0 * ps.x));
    report
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    Ok(())
}
