//! Integer cutoffs that bound the support of the limit laws.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::numeric::{ceil_int, floor_int, Rational};

use super::Regime;

/// Cutoffs for one `(n, a, τ)`; only those used by its regime are set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RegimeThresholds {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hat_alpha: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hat_beta: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tilde_alpha: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bar_alpha: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tilde_beta: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bar_beta: Option<usize>,
}

/// Thresholds relevant to the regime of `(n, a, τ)`.
pub fn thresholds(n: usize, a: &Rational, tau: &Rational) -> RegimeThresholds {
    let mut t = RegimeThresholds::default();
    match super::classify_regime(n, a, tau) {
        Regime::ZeroInitial => {
            let alpha = alpha(n, tau);
            t.alpha = Some(alpha);
            t.beta = Some(beta(n, tau, alpha));
        }
        Regime::LowInitial => {
            let hat = hat_alpha(n, a, tau);
            t.hat_alpha = Some(hat);
            t.hat_beta = Some(beta(n, tau, hat));
        }
        Regime::HighInitial => {
            let tilde = tilde_alpha(n, a, tau);
            let bar = bar_alpha(n, a, tau);
            t.tilde_alpha = Some(tilde);
            t.bar_alpha = Some(bar);
            t.tilde_beta = Some(beta(n, tau, tilde));
            t.bar_beta = Some(spread_floor(n, tau).min(bar));
        }
        Regime::FullInitial | Regime::Saturating | Regime::Uncovered => {}
    }
    t
}

fn n_minus_one(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n - 1))
}

/// Saturating conversion; the cutoffs are clamped into `[1, n]`-sized ranges
/// by their callers anyway.
fn to_usize(v: BigInt) -> usize {
    if v.is_negative() {
        0
    } else {
        v.to_usize().unwrap_or(usize::MAX)
    }
}

/// `⌊(n−1)τ⌋ + 1`.
pub fn spread_floor(n: usize, tau: &Rational) -> usize {
    to_usize(floor_int(&(n_minus_one(n) * tau))) + 1
}

/// `α = min{⌈1/τ⌉, n}`.
pub fn alpha(n: usize, tau: &Rational) -> usize {
    to_usize(ceil_int(&tau.recip())).min(n)
}

/// `min{⌊(n−1)τ⌋+1, top+1}`, the lower end of the `A_m` range for `top`.
pub fn beta(n: usize, tau: &Rational, top: usize) -> usize {
    spread_floor(n, tau).min(top + 1)
}

/// `α̂ = max{1, ⌈(1/τ − (n−1)a)/(1−a)⌉}` for `a < 1`.
pub fn hat_alpha(n: usize, a: &Rational, tau: &Rational) -> usize {
    let value = (tau.recip() - n_minus_one(n) * a) / (Rational::one() - a);
    to_usize(ceil_int(&value)).max(1)
}

/// `α̃ = max{1, ⌈(1 − (n−1)aτ)/(τ(1−a))⌉}` for `a < 1`.
pub fn tilde_alpha(n: usize, a: &Rational, tau: &Rational) -> usize {
    let one = Rational::one();
    let value = (one.clone() - n_minus_one(n) * a * tau) / (tau * (one - a));
    to_usize(ceil_int(&value)).max(1)
}

/// `ᾱ = ⌊(n−1)aτ / (a − τ(1−a))⌋ + 1` for `τ < a`.
pub fn bar_alpha(n: usize, a: &Rational, tau: &Rational) -> usize {
    let den = a - tau * (Rational::one() - a);
    debug_assert!(den > Rational::zero());
    to_usize(floor_int(&(n_minus_one(n) * a * tau / den))) + 1
}
