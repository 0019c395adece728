//! Stirling numbers and the correction mass `η(α̃, ᾱ, n)`.
//!
//! ```text
//! η = (n−1)!/n³ · Σ_{w=ᾱ−1}^{α̃−1} 1/(n−w−2)! · Σ_{t≥w+1} S(t−1, w) / n^{t−1}
//! ```
//!
//! The inner series is the ordinary generating function of `S(·, w)` at
//! `x = 1/n`, i.e. `x^w / ∏_{k=1}^{w} (1 − kx)`. [`eta_series`] sums it
//! directly with a rigorous tail bound instead.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numeric::{ratio_to_f64, Rational};

/// Relative agreement demanded between closed form and series.
pub const ETA_AGREEMENT: f64 = 1e-15;

/// Stirling number of the second kind `S(p, q)`.
pub fn stirling2(p: usize, q: usize) -> BigUint {
    if q > p {
        return BigUint::zero();
    }
    stirling_column(p, q).pop().unwrap_or_default()
}

/// `S(0, q), S(1, q), …, S(p, q)`.
fn stirling_column(p: usize, q: usize) -> Vec<BigUint> {
    // row[k] = S(i, k) for the current i
    let mut row = vec![BigUint::zero(); q + 1];
    row[0] = BigUint::one();
    let mut column = Vec::with_capacity(p + 1);
    column.push(row[q].clone());
    for _ in 1..=p {
        for k in (1..=q).rev() {
            row[k] = BigUint::from(k) * &row[k] + &row[k - 1];
        }
        row[0] = BigUint::zero();
        column.push(row[q].clone());
    }
    column
}

fn factorial(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

fn check_domain(tilde_alpha: usize, bar_alpha: usize, n: usize) -> Result<()> {
    if bar_alpha < 2 || bar_alpha > tilde_alpha {
        return Err(Error::Domain(format!(
            "eta needs 2 <= bar_alpha <= tilde_alpha, got bar_alpha={bar_alpha}, tilde_alpha={tilde_alpha}"
        )));
    }
    if n < 3 || tilde_alpha > n - 1 {
        return Err(Error::Domain(format!(
            "eta needs tilde_alpha <= n-1, got tilde_alpha={tilde_alpha}, n={n}"
        )));
    }
    Ok(())
}

/// `Σ_{t≥w+1} S(t−1, w) / n^{t−1} = (1/n)^w / ∏_{k=1}^{w} (1 − k/n)`.
pub fn stirling_series_closed(w: usize, n: usize) -> Result<Rational> {
    let x = Rational::new(BigInt::one(), BigInt::from(n));
    let mut den = Rational::one();
    for k in 1..=w {
        den *= Rational::one() - x.clone() * Rational::from_integer(BigInt::from(k));
        if den.is_zero() {
            return Err(Error::Domain(format!("generating function pole at w={w}, n={n}")));
        }
    }
    Ok(num_traits::pow(x, w) / den)
}

fn prefactor(n: usize) -> Rational {
    Rational::new(factorial(n - 1), BigInt::from(n).pow(3))
}

/// Exact `η` via the generating-function closed form.
pub fn eta(tilde_alpha: usize, bar_alpha: usize, n: usize) -> Result<Rational> {
    check_domain(tilde_alpha, bar_alpha, n)?;
    let mut sum = Rational::zero();
    for w in (bar_alpha - 1)..=(tilde_alpha - 1) {
        let inner = stirling_series_closed(w, n)?;
        sum += inner / Rational::from_integer(factorial(n - w - 2));
    }
    Ok(prefactor(n) * sum)
}

/// Truncated direct summation of `η`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaSeries {
    /// Exact partial sum.
    pub value: Rational,
    /// Upper bound on the omitted tail, already scaled like `value`.
    pub tail_bound: f64,
    pub terms: usize,
}

/// Sums each inner series up to the first index `P` at which the bound
/// `(w/n)^P / (w!(1 − w/n))` on its tail, from `S(p, w) ≤ w^p / w!`, falls
/// below `rel_tol` times its leading term `n^{−w}`.
pub fn eta_series(tilde_alpha: usize, bar_alpha: usize, n: usize, rel_tol: f64) -> Result<EtaSeries> {
    check_domain(tilde_alpha, bar_alpha, n)?;
    let n_big = BigInt::from(n);
    let nf = n as f64;
    let mut value = Rational::zero();
    let mut tail_bound = 0.0f64;
    let mut terms = 0usize;
    let scale = ratio_to_f64(&prefactor(n));
    for w in (bar_alpha - 1)..=(tilde_alpha - 1) {
        let weight = factorial(n - w - 2);
        let (last, tail) = if w == 0 {
            (0, 0.0)
        } else {
            let ratio = w as f64 / nf;
            let log_w_fact: f64 = (1..=w).map(|k| (k as f64).ln()).sum();
            // ln tail(P) = P ln(w/n) − ln w! − ln(1 − w/n) ≤ ln(rel_tol) − w ln n
            let target = rel_tol.ln() - w as f64 * nf.ln() + log_w_fact + (1.0 - ratio).ln();
            let p = (target / ratio.ln()).ceil().max(w as f64) as usize;
            if p > 1 << 16 {
                return Err(Error::Domain(format!("eta series needs {p} terms for n={n}")));
            }
            let tail = (p as f64 * ratio.ln() - log_w_fact - (1.0 - ratio).ln()).exp();
            (p - 1, tail)
        };
        // Σ_{q=w}^{last} S(q,w) / n^q over the common denominator n^last.
        let column = stirling_column(last, w);
        let mut numer = BigInt::zero();
        for s in column.iter().skip(w) {
            numer = numer * &n_big + BigInt::from(s.clone());
            terms += 1;
        }
        let partial = Rational::new(numer, n_big.pow(last as u32));
        tail_bound += scale * tail / ToPrimitive::to_f64(&weight).unwrap_or(f64::INFINITY);
        value += partial / Rational::from_integer(weight);
    }
    Ok(EtaSeries {
        value: prefactor(n) * value,
        tail_bound,
        terms,
    })
}

/// Closed form, cross-checked against the series to [`ETA_AGREEMENT`].
pub fn eta_checked(tilde_alpha: usize, bar_alpha: usize, n: usize) -> Result<Rational> {
    let closed = eta(tilde_alpha, bar_alpha, n)?;
    let series = eta_series(tilde_alpha, bar_alpha, n, ETA_AGREEMENT / 100.0)?;
    let rel = relative_gap(&closed, &series.value);
    if rel > ETA_AGREEMENT {
        return Err(Error::Domain(format!(
            "eta closed form and series disagree by {rel:e} (n={n}, tilde_alpha={tilde_alpha}, bar_alpha={bar_alpha})"
        )));
    }
    Ok(closed)
}

/// `|x − y| / |x|`, computed from the exact difference.
pub fn relative_gap(x: &Rational, y: &Rational) -> f64 {
    if x.is_zero() {
        return ratio_to_f64(y).abs();
    }
    ratio_to_f64(&((x - y) / x)).abs()
}
