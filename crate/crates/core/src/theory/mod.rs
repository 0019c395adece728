//! Closed-form limit laws for the homogeneous complete-graph process with a
//! single initially infected agent.
//!
//! Every law is exact. Atoms group sets (or action profiles) that the law
//! treats alike, so nothing of size `2^n` is materialised unless
//! [`Law::expand_sets`] or [`Law::expand_profiles`] is asked for it.

mod eta;
mod thresholds;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

pub use eta::{eta, eta_checked, eta_series, relative_gap, stirling2, stirling_series_closed, EtaSeries, ETA_AGREEMENT};
pub use thresholds::{
    alpha, bar_alpha, beta, hat_alpha, spread_floor, thresholds, tilde_alpha, RegimeThresholds,
};

use crate::error::{Error, Result};
use crate::model::AgentSet;
use crate::numeric::{render_decimal, render_rational, Rational, RationalString};

/// Largest population for which laws are expanded to explicit atoms.
pub const MAX_EXPAND_N: usize = 12;

/// Parameter region with a known limit law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `a = 0`, any `τ`.
    ZeroInitial,
    /// `a = 1`.
    FullInitial,
    /// `0 < a ≤ τ` and `τ ≥ 1/(n−1)`.
    LowInitial,
    /// `1/(n−1) ≤ τ < a < 1`.
    HighInitial,
    /// `τ < a < 1` and `τ ≤ a/(n−1)`.
    Saturating,
    /// `a/(n−1) < τ < 1/(n−1)` with `0 < a < 1`.
    Uncovered,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::ZeroInitial => "zero-initial",
            Regime::FullInitial => "full-initial",
            Regime::LowInitial => "low-initial",
            Regime::HighInitial => "high-initial",
            Regime::Saturating => "saturating",
            Regime::Uncovered => "uncovered",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Total over all `n ≥ 2`, `a ∈ [0,1]`, `τ ∈ (0,1)`.
pub fn classify_regime(n: usize, a: &Rational, tau: &Rational) -> Regime {
    let zero = Rational::zero();
    let one = Rational::one();
    let n1 = Rational::from_integer(BigInt::from(n.saturating_sub(1).max(1)));
    let spread = tau * &n1 >= one;
    if *a == zero {
        Regime::ZeroInitial
    } else if *a == one {
        Regime::FullInitial
    } else if a <= tau && spread {
        Regime::LowInitial
    } else if tau < a && spread {
        Regime::HighInitial
    } else if tau < a && *tau <= a / &n1 {
        Regime::Saturating
    } else {
        Regime::Uncovered
    }
}

/// `γ = τm / ((1+τ)m − τ(n−1))` when `m > (n−1)τ`, else 1.
pub fn predict_action_limit(m: usize, n: usize, tau: &Rational) -> Rational {
    let m_r = Rational::from_integer(BigInt::from(m));
    let spread = tau * Rational::from_integer(BigInt::from(n - 1));
    if spread >= m_r {
        return Rational::one();
    }
    tau * &m_r / ((Rational::one() + tau) * &m_r - spread)
}

/// `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigUint::one(), |acc, i| acc * BigUint::from(n - i) / BigUint::from(i + 1))
}

/// Limit action profile up to the choice of which agents sit at 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionProfileClass {
    AllOnes,
    /// Agent 1 and `m − 1` others at 1, the rest at `off_value < 1`.
    ClassA { m: usize, off_value: Rational },
}

impl ActionProfileClass {
    /// `A_m`, folded into [`ActionProfileClass::AllOnes`] when its profile is `1⃗`.
    pub fn class_a(m: usize, n: usize, tau: &Rational) -> Self {
        let off_value = predict_action_limit(m, n, tau);
        if m >= n || off_value.is_one() {
            ActionProfileClass::AllOnes
        } else {
            ActionProfileClass::ClassA { m, off_value }
        }
    }

    /// Number of distinct tuples, `C(n−1, m−1)` for `A_m`.
    pub fn size(&self, n: usize) -> BigUint {
        match self {
            ActionProfileClass::AllOnes => BigUint::one(),
            ActionProfileClass::ClassA { m, .. } => binomial(n - 1, m - 1),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ActionProfileClass::AllOnes => "all-ones".to_string(),
            ActionProfileClass::ClassA { m, .. } => format!("A({m})"),
        }
    }

    pub fn off_value(&self) -> Option<&Rational> {
        match self {
            ActionProfileClass::AllOnes => None,
            ActionProfileClass::ClassA { off_value, .. } => Some(off_value),
        }
    }
}

impl fmt::Display for ActionProfileClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Infected sets of size `size` that contain agent 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SetAtom {
    pub size: usize,
    pub contains_first: bool,
}

impl SetAtom {
    pub fn with_first(size: usize) -> Self {
        SetAtom {
            size,
            contains_first: true,
        }
    }

    pub fn count(&self, n: usize) -> BigUint {
        if self.contains_first {
            binomial(n - 1, self.size - 1)
        } else {
            binomial(n - 1, self.size)
        }
    }
}

/// A group of equally likely outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub count: BigUint,
    pub total: Rational,
}

impl Atom {
    pub fn per_outcome(&self) -> Rational {
        &self.total / Rational::from_integer(BigInt::from(self.count.clone()))
    }
}

/// Exact distribution over atoms of type `K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Law<K: Ord> {
    pub n: usize,
    atoms: BTreeMap<K, Atom>,
}

impl<K: Ord + Clone + fmt::Debug> Law<K> {
    fn new(n: usize) -> Self {
        Law {
            n,
            atoms: BTreeMap::new(),
        }
    }

    /// Adds `mass` to `key`, merging with earlier mass on the same key.
    fn add(&mut self, key: K, count: BigUint, mass: Rational) {
        self.atoms
            .entry(key)
            .and_modify(|a| a.total += &mass)
            .or_insert(Atom { count, total: mass });
    }

    /// Drops empty atoms; rejects negative ones.
    fn finish(mut self) -> Result<Self> {
        if let Some((k, a)) = self.atoms.iter().find(|(_, a)| a.total.is_negative()) {
            return Err(Error::NegativeMass {
                atom: format!("{k:?}"),
                mass: render_rational(&a.total),
            });
        }
        self.atoms.retain(|_, a| !a.total.is_zero());
        Ok(self)
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&K, &Atom)> {
        self.atoms.iter()
    }

    pub fn mass(&self, key: &K) -> Rational {
        self.atoms.get(key).map_or_else(Rational::zero, |a| a.total.clone())
    }

    pub fn total(&self) -> Rational {
        self.atoms.values().fold(Rational::zero(), |acc, a| acc + &a.total)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

impl Law<SetAtom> {
    /// `P(|I| = m)` for `m = 1..=n`.
    pub fn size_law(&self) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.n];
        for (k, a) in &self.atoms {
            out[k.size - 1] += &a.total;
        }
        out
    }

    /// Every infected set with its own probability.
    pub fn expand_sets(&self) -> Result<Vec<(AgentSet, Rational)>> {
        let n = self.n;
        check_expand(n)?;
        let mut out = Vec::new();
        for (k, a) in &self.atoms {
            let each = a.per_outcome();
            for set in sets_of_size(n, k.size, k.contains_first) {
                out.push((set, each.clone()));
            }
        }
        out.sort_by(|x, y| x.0.cmp(&y.0));
        Ok(out)
    }
}

impl Law<ActionProfileClass> {
    /// Every limit action profile with its own probability.
    pub fn expand_profiles(&self) -> Result<Vec<(Vec<Rational>, Rational)>> {
        let n = self.n;
        check_expand(n)?;
        let mut out = Vec::new();
        for (k, a) in &self.atoms {
            let each = a.per_outcome();
            match k {
                ActionProfileClass::AllOnes => out.push((vec![Rational::one(); n], each)),
                ActionProfileClass::ClassA { m, off_value } => {
                    for set in sets_of_size(n, *m, true) {
                        let profile = (0..n)
                            .map(|i| if set.contains(i) { Rational::one() } else { off_value.clone() })
                            .collect();
                        out.push((profile, each.clone()));
                    }
                }
            }
        }
        Ok(out)
    }
}

fn check_expand(n: usize) -> Result<()> {
    if n > MAX_EXPAND_N {
        return Err(Error::Domain(format!(
            "explicit expansion is limited to n <= {MAX_EXPAND_N}, got {n}"
        )));
    }
    Ok(())
}

/// Subsets of `{0..n}` of the given size, with or without agent 0.
fn sets_of_size(n: usize, size: usize, with_first: bool) -> Vec<AgentSet> {
    let others = n - 1;
    let want = if with_first { size.wrapping_sub(1) } else { size };
    (0u64..1 << others)
        .filter(|mask| mask.count_ones() as usize == want)
        .map(|mask| {
            let mut set = AgentSet::from_agents(n, (0..others).filter(|b| mask >> b & 1 == 1).map(|b| b + 1));
            if with_first {
                set.insert(0);
            }
            set
        })
        .collect()
}

/// Both limit laws for one `(n, a, τ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitLaw {
    pub n: usize,
    pub a: Rational,
    pub tau: Rational,
    pub regime: Regime,
    pub thresholds: RegimeThresholds,
    /// Set only on the branch where the correction mass appears.
    pub eta: Option<Rational>,
    pub infected: Law<SetAtom>,
    pub actions: Law<ActionProfileClass>,
}

/// Population sizes for which `η` is cross-checked against its series.
const ETA_SELF_CHECK_MAX_N: usize = 16;

pub fn limit_law(n: usize, a: &Rational, tau: &Rational) -> Result<LimitLaw> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 agents, got {n}")));
    }
    if a.is_negative() || *a > Rational::one() || !tau.is_positive() || *tau >= Rational::one() {
        return Err(Error::InvalidConfig("need a in [0,1] and tau in (0,1)".into()));
    }
    let regime = classify_regime(n, a, tau);
    let th = thresholds(n, a, tau);
    let nr = Rational::from_integer(BigInt::from(n));
    let frac = |k: i64| Rational::new(BigInt::from(k), BigInt::from(n));
    let mut infected = Law::new(n);
    let mut actions = Law::new(n);
    let mut eta_value = None;

    let mut add_set = |law: &mut Law<SetAtom>, size: usize, mass: Rational| {
        let atom = SetAtom::with_first(size);
        law.add(atom, atom.count(n), mass);
    };
    let add_class = |law: &mut Law<ActionProfileClass>, m: usize, mass: Rational| {
        let class = ActionProfileClass::class_a(m, n, tau);
        let count = class.size(n);
        law.add(class, count, mass);
    };
    let all_ones = |law: &mut Law<ActionProfileClass>, mass: Rational| {
        law.add(ActionProfileClass::AllOnes, BigUint::one(), mass);
    };
    // {1} with 1 − (top−1)/n, each size in [2, top] with 1/n.
    let uniform_sets = |law: &mut Law<SetAtom>, top: usize, add: &mut dyn FnMut(&mut Law<SetAtom>, usize, Rational)| {
        add(law, 1, Rational::one() - frac(top as i64 - 1));
        for m in 2..=top {
            add(law, m, frac(1));
        }
    };
    // 1⃗ with 1 − (top−bottom+1)/n, each A_m for m in [bottom, top] with 1/n.
    let uniform_classes = |law: &mut Law<ActionProfileClass>, top: usize, bottom: usize| {
        all_ones(law, Rational::one() - frac(top as i64 - bottom as i64 + 1));
        for m in bottom..=top {
            add_class(law, m, frac(1));
        }
    };
    // N with 1 − (n−1)/n², each (n−1)-set with 1/n².
    let near_total = |inf: &mut Law<SetAtom>, act: &mut Law<ActionProfileClass>, add: &mut dyn FnMut(&mut Law<SetAtom>, usize, Rational)| {
        let nn = &nr * &nr;
        let side = Rational::from_integer(BigInt::from(n - 1)) / nn;
        add(inf, n - 1, side.clone());
        add(inf, n, Rational::one() - &side);
        add_class(act, n - 1, side.clone());
        all_ones(act, Rational::one() - side);
    };

    match regime {
        Regime::ZeroInitial => {
            let (top, bottom) = (th.alpha.unwrap_or(n), th.beta.unwrap_or(1));
            uniform_sets(&mut infected, top, &mut add_set);
            uniform_classes(&mut actions, top, bottom);
        }
        Regime::FullInitial => {
            if tau * Rational::from_integer(BigInt::from(n - 1)) >= Rational::one() {
                add_set(&mut infected, 1, Rational::one());
                all_ones(&mut actions, Rational::one());
            } else {
                near_total(&mut infected, &mut actions, &mut add_set);
            }
        }
        Regime::LowInitial => {
            let (top, bottom) = (th.hat_alpha.unwrap_or(1), th.hat_beta.unwrap_or(1));
            uniform_sets(&mut infected, top, &mut add_set);
            uniform_classes(&mut actions, top, bottom);
        }
        Regime::HighInitial => {
            let tilde = th.tilde_alpha.expect("set in this regime");
            let bar = th.bar_alpha.expect("set in this regime");
            if tilde + 1 <= bar {
                uniform_sets(&mut infected, tilde, &mut add_set);
                uniform_classes(&mut actions, tilde, th.tilde_beta.expect("set in this regime"));
            } else {
                let eta = if n <= ETA_SELF_CHECK_MAX_N {
                    eta_checked(tilde, bar, n)?
                } else {
                    eta(tilde, bar, n)?
                };
                add_set(&mut infected, 1, Rational::one() - frac(tilde as i64 - 1));
                for m in 2..bar {
                    add_set(&mut infected, m, frac(1));
                }
                add_set(&mut infected, n - 1, eta.clone());
                add_set(&mut infected, n, frac(tilde as i64 - bar as i64 + 1) - &eta);

                let bar_beta = th.bar_beta.expect("set in this regime");
                all_ones(
                    &mut actions,
                    Rational::one() + frac(bar_beta as i64 - bar as i64) - &eta,
                );
                for m in bar_beta..bar {
                    add_class(&mut actions, m, frac(1));
                }
                add_class(&mut actions, n - 1, eta.clone());
                eta_value = Some(eta);
            }
        }
        Regime::Saturating => {
            if tau * Rational::from_integer(BigInt::from(n - 1)) == *a {
                add_set(&mut infected, n, Rational::one());
                all_ones(&mut actions, Rational::one());
            } else {
                near_total(&mut infected, &mut actions, &mut add_set);
            }
        }
        Regime::Uncovered => {
            return Err(Error::Uncovered {
                n,
                a: render_rational(a),
                tau: render_rational(tau),
                reason: "no closed-form limit law is known for a/(n-1) < tau < 1/(n-1)",
            })
        }
    }

    let law = LimitLaw {
        n,
        a: a.clone(),
        tau: tau.clone(),
        regime,
        thresholds: th,
        eta: eta_value,
        infected: infected.finish()?,
        actions: actions.finish()?,
    };
    for total in [law.infected.total(), law.actions.total()] {
        if !total.is_one() {
            return Err(Error::Domain(format!(
                "limit law sums to {} instead of 1",
                render_rational(&total)
            )));
        }
    }
    Ok(law)
}

/// Limit law of the infected set.
pub fn infected_law(n: usize, a: &Rational, tau: &Rational) -> Result<Law<SetAtom>> {
    limit_law(n, a, tau).map(|l| l.infected)
}

/// Limit law of the action profile.
pub fn action_law(n: usize, a: &Rational, tau: &Rational) -> Result<Law<ActionProfileClass>> {
    limit_law(n, a, tau).map(|l| l.actions)
}

/// JSON form of a [`LimitLaw`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawExport {
    pub n: usize,
    pub a: RationalString,
    pub tau: RationalString,
    pub regime: Regime,
    pub thresholds: RegimeThresholds,
    pub eta: Option<RationalString>,
    pub size_law: Vec<RationalString>,
    pub size_law_decimal: Vec<String>,
    pub infected_atoms: Vec<SetAtomExport>,
    pub action_law: Vec<ClassExport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetAtomExport {
    pub size: usize,
    pub contains_first: bool,
    pub count: String,
    pub prob: RationalString,
    pub per_set: RationalString,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassExport {
    pub class: String,
    pub m: Option<usize>,
    pub off_value: Option<RationalString>,
    pub count: String,
    pub prob: RationalString,
    pub per_profile: RationalString,
}

impl LimitLaw {
    pub fn size_law(&self) -> Vec<Rational> {
        self.infected.size_law()
    }

    pub fn export(&self, precision: usize) -> LawExport {
        let size_law = self.size_law();
        LawExport {
            n: self.n,
            a: RationalString(self.a.clone()),
            tau: RationalString(self.tau.clone()),
            regime: self.regime,
            thresholds: self.thresholds,
            eta: self.eta.clone().map(RationalString),
            size_law_decimal: size_law.iter().map(|p| render_decimal(p, precision)).collect(),
            size_law: size_law.into_iter().map(RationalString).collect(),
            infected_atoms: self
                .infected
                .atoms()
                .map(|(k, a)| SetAtomExport {
                    size: k.size,
                    contains_first: k.contains_first,
                    count: a.count.to_string(),
                    prob: RationalString(a.total.clone()),
                    per_set: RationalString(a.per_outcome()),
                })
                .collect(),
            action_law: self
                .actions
                .atoms()
                .map(|(k, a)| ClassExport {
                    class: k.label(),
                    m: match k {
                        ActionProfileClass::AllOnes => None,
                        ActionProfileClass::ClassA { m, .. } => Some(*m),
                    },
                    off_value: k.off_value().cloned().map(RationalString),
                    count: a.count.to_string(),
                    prob: RationalString(a.total.clone()),
                    per_profile: RationalString(a.per_outcome()),
                })
                .collect(),
        }
    }
}
