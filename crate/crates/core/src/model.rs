//! Domain types and single-epoch mechanics.
//!
//! Agents are `0..n` internally. Agent `0` is the initially infected agent in
//! the homogeneous presets; user-facing surfaces print it as agent 1.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::numeric::{Rational, Scalar};

/// A subset of agents, stored as a bitset over `0..n`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct AgentSet {
    words: SmallVec<[u64; 2]>,
}

impl AgentSet {
    pub fn empty(n: usize) -> Self {
        AgentSet {
            words: SmallVec::from_elem(0, n.div_ceil(64).max(1)),
        }
    }

    pub fn full(n: usize) -> Self {
        let mut set = Self::empty(n);
        for i in 0..n {
            set.insert(i);
        }
        set
    }

    pub fn singleton(n: usize, agent: usize) -> Self {
        let mut set = Self::empty(n);
        set.insert(agent);
        set
    }

    pub fn from_agents(n: usize, agents: impl IntoIterator<Item = usize>) -> Self {
        let mut set = Self::empty(n);
        for a in agents {
            set.insert(a);
        }
        set
    }

    pub fn insert(&mut self, agent: usize) {
        self.words[agent / 64] |= 1 << (agent % 64);
    }

    pub fn remove(&mut self, agent: usize) {
        self.words[agent / 64] &= !(1 << (agent % 64));
    }

    #[inline]
    pub fn contains(&self, agent: usize) -> bool {
        self.words
            .get(agent / 64)
            .is_some_and(|w| w & (1 << (agent % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn union_with(&mut self, other: &AgentSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn difference(&self, other: &AgentSet) -> AgentSet {
        AgentSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect(),
        }
    }

    pub fn is_superset(&self, other: &AgentSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| b & !a == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// Agents as 1-based labels.
    pub fn to_labels(&self) -> Vec<usize> {
        self.iter().map(|i| i + 1).collect()
    }

    /// Bit `i` is agent `i` (agent label `i + 1`).
    pub fn mask(&self) -> BigUint {
        let mut digits = Vec::with_capacity(self.words.len() * 2);
        for w in &self.words {
            digits.push(*w as u32);
            digits.push((*w >> 32) as u32);
        }
        BigUint::new(digits)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Debug for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.to_labels()).finish()
    }
}

/// The strictly increasing utility curve `f : [0,1] → [0,1]`.
///
/// It never influences the dynamics (the best response has a closed form that
/// does not involve it); it only matters when utilities are reported.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum UtilityCurve {
    #[default]
    Identity,
    SquareRoot,
    /// `x ↦ x^p` for a positive rational `p`.
    Polynomial(Rational),
}

impl UtilityCurve {
    pub fn validate(&self) -> Result<()> {
        if let UtilityCurve::Polynomial(p) = self {
            if *p <= Rational::zero() {
                return Err(Error::InvalidConfig(format!(
                    "utility exponent must be positive, got {p}"
                )));
            }
        }
        Ok(())
    }

    /// Evaluates `f(x)`. Exact for the identity and integer exponents;
    /// irrational values are computed in `f64` and converted.
    pub fn eval<S: Scalar>(&self, x: &S) -> S {
        match self {
            UtilityCurve::Identity => x.clone(),
            UtilityCurve::Polynomial(p) if p.is_integer() => {
                let e = p.to_integer().to_u32().unwrap_or(u32::MAX);
                let mut acc = S::one();
                for _ in 0..e {
                    acc = acc * x.clone();
                }
                acc
            }
            UtilityCurve::SquareRoot => from_f64::<S>(x.to_f64().sqrt()),
            UtilityCurve::Polynomial(p) => from_f64::<S>(x.to_f64().powf(Scalar::to_f64(p))),
        }
    }
}

fn from_f64<S: Scalar>(v: f64) -> S {
    S::from_rational(&Rational::from_float(v).unwrap_or_else(Rational::zero))
}

/// Pairwise interaction weights `g_ij`.
#[derive(Debug, Clone, PartialEq)]
pub enum Interaction<S> {
    /// `g_ij = 1` for every pair.
    Complete,
    /// Explicit symmetric matrix; the diagonal is ignored.
    Weighted(Vec<Vec<S>>),
}

impl<S: Scalar> Interaction<S> {
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> S {
        match self {
            Interaction::Complete => S::one(),
            Interaction::Weighted(g) => g[i][j].clone(),
        }
    }
}

/// Full parameterisation of one process.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig<S> {
    pub n: usize,
    pub interaction: Interaction<S>,
    /// Immunity power `τ(i)` of each agent.
    pub tau: Vec<S>,
    pub utility: UtilityCurve,
    pub initial_actions: Vec<S>,
    pub initial_infected: AgentSet,
}

impl<S: Scalar> ModelConfig<S> {
    /// Complete graph, common initial action `a`, common immunity `tau`,
    /// agent 0 initially infected.
    pub fn homogeneous(n: usize, a: &Rational, tau: &Rational) -> Result<Self> {
        let cfg = ModelConfig {
            n,
            interaction: Interaction::Complete,
            tau: vec![S::from_rational(tau); n],
            utility: UtilityCurve::Identity,
            initial_actions: vec![S::from_rational(a); n],
            initial_infected: AgentSet::singleton(n.max(1), 0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 agents, got {n}")));
        }
        if self.tau.len() != n || self.initial_actions.len() != n {
            return Err(Error::InvalidConfig(format!(
                "expected {n} immunities and {n} initial actions, got {} and {}",
                self.tau.len(),
                self.initial_actions.len()
            )));
        }
        let zero = S::zero();
        let one = S::one();
        for (i, t) in self.tau.iter().enumerate() {
            if !(*t > zero && *t < one) {
                return Err(Error::InvalidConfig(format!(
                    "immunity of agent {} must lie in (0,1), got {}",
                    i + 1,
                    t.render()
                )));
            }
        }
        for (i, a) in self.initial_actions.iter().enumerate() {
            if !(*a >= zero && *a <= one) {
                return Err(Error::InvalidConfig(format!(
                    "initial action of agent {} must lie in [0,1], got {}",
                    i + 1,
                    a.render()
                )));
            }
        }
        if let Interaction::Weighted(g) = &self.interaction {
            if g.len() != n || g.iter().any(|row| row.len() != n) {
                return Err(Error::InvalidConfig(format!("interaction matrix must be {n}x{n}")));
            }
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    if !(g[i][j] >= zero && g[i][j] <= one) {
                        return Err(Error::InvalidConfig(format!(
                            "weight g[{}][{}] = {} outside [0,1]",
                            i + 1,
                            j + 1,
                            g[i][j].render()
                        )));
                    }
                    if g[i][j] != g[j][i] {
                        return Err(Error::InvalidConfig(format!(
                            "interaction matrix is not symmetric at ({}, {})",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        if self.initial_infected.is_empty() {
            return Err(Error::InvalidConfig("initial infected set is empty".into()));
        }
        if let Some(bad) = self.initial_infected.iter().find(|&i| i >= n) {
            return Err(Error::AgentOutOfRange { agent: bad + 1, n });
        }
        self.utility.validate()
    }

    pub fn initial_state(&self) -> State<S> {
        State {
            infected: self.initial_infected.clone(),
            actions: self.initial_actions.clone(),
        }
    }

    /// Converts every parameter into another arithmetic.
    pub fn convert<T: Scalar>(&self) -> ModelConfig<T> {
        let conv = |v: &S| T::from_rational(&v.to_rational());
        ModelConfig {
            n: self.n,
            interaction: match &self.interaction {
                Interaction::Complete => Interaction::Complete,
                Interaction::Weighted(g) => {
                    Interaction::Weighted(g.iter().map(|row| row.iter().map(conv).collect()).collect())
                }
            },
            tau: self.tau.iter().map(conv).collect(),
            utility: self.utility.clone(),
            initial_actions: self.initial_actions.iter().map(conv).collect(),
            initial_infected: self.initial_infected.clone(),
        }
    }

    /// Common `(a, τ)` when the config is one of the homogeneous presets:
    /// complete graph, equal actions, equal immunities, agent 0 infected.
    pub fn homogeneous_params(&self) -> Option<(S, S)> {
        let complete = match &self.interaction {
            Interaction::Complete => true,
            Interaction::Weighted(g) => (0..self.n)
                .all(|i| (0..self.n).all(|j| i == j || g[i][j] == S::one())),
        };
        let a = self.initial_actions.first()?.clone();
        let tau = self.tau.first()?.clone();
        let uniform = self.initial_actions.iter().all(|x| *x == a) && self.tau.iter().all(|t| *t == tau);
        let patient_zero = self.initial_infected == AgentSet::singleton(self.n, 0);
        (complete && uniform && patient_zero).then_some((a, tau))
    }

    fn check_agent(&self, i: usize) {
        assert!(i < self.n, "agent index {i} out of range for n = {}", self.n);
    }

    /// Viral exposure `r_i(S)`: the share of agent `i`'s weighted contact mass
    /// that comes from infected agents, or 0 when that mass is zero.
    pub fn exposure(&self, i: usize, s: &State<S>) -> S {
        self.check_agent(i);
        let mut num = S::zero();
        let mut den = S::zero();
        for j in 0..self.n {
            if j == i {
                continue;
            }
            let w = self.interaction.weight(i, j) * s.actions[j].clone();
            if s.infected.contains(j) {
                num = num + w.clone();
            }
            den = den + w;
        }
        if den.is_zero() {
            S::zero()
        } else {
            num / den
        }
    }

    /// Exposures of all agents at once; `O(n)` on the complete graph.
    pub fn exposures(&self, s: &State<S>) -> Vec<S> {
        match self.interaction {
            Interaction::Complete => {
                let mut total = S::zero();
                let mut infected_total = S::zero();
                for (j, a) in s.actions.iter().enumerate() {
                    total = total + a.clone();
                    if s.infected.contains(j) {
                        infected_total = infected_total + a.clone();
                    }
                }
                (0..self.n)
                    .map(|i| {
                        let a = &s.actions[i];
                        let den = total.clone() - a.clone();
                        if den.is_zero() {
                            return S::zero();
                        }
                        let num = if s.infected.contains(i) {
                            infected_total.clone() - a.clone()
                        } else {
                            infected_total.clone()
                        };
                        num / den
                    })
                    .collect()
            }
            Interaction::Weighted(_) => (0..self.n).map(|i| self.exposure(i, s)).collect(),
        }
    }

    /// Utility `u_i(S)`: `1 + f(a_i)` when `i` is healthy and `a_i r_i ≤ τ(i)`,
    /// `f(a_i)` otherwise.
    pub fn utility(&self, i: usize, s: &State<S>) -> S {
        self.check_agent(i);
        let a = &s.actions[i];
        let f = self.utility.eval(a);
        if !s.infected.contains(i) && a.clone() * self.exposure(i, s) <= self.tau[i] {
            S::one() + f
        } else {
            f
        }
    }

    /// Best response given the exposure of `i` (which does not depend on
    /// `i`'s own action).
    fn best_response_from_exposure(&self, i: usize, infected: bool, r: &S) -> S {
        if infected || r.is_zero() {
            S::one()
        } else {
            S::one().min_of(self.tau[i].clone() / r.clone())
        }
    }

    /// Best response `b_i(S)`: 1 for infected agents and unexposed agents,
    /// `min{1, τ(i)/r_i(S)}` otherwise.
    pub fn best_response(&self, i: usize, s: &State<S>) -> S {
        self.check_agent(i);
        let infected = s.infected.contains(i);
        if infected {
            return S::one();
        }
        self.best_response_from_exposure(i, false, &self.exposure(i, s))
    }

    /// Agents whose action times exposure strictly exceeds their immunity.
    pub fn infection_update(&self, intermediate: &State<S>) -> AgentSet {
        let r = self.exposures(intermediate);
        let mut hit = AgentSet::empty(self.n);
        for j in 0..self.n {
            if intermediate.actions[j].clone() * r[j].clone() > self.tau[j] {
                hit.insert(j);
            }
        }
        hit
    }

    /// One epoch: `chosen` plays its best response, then infections spread.
    pub fn epoch_step(&self, s: &State<S>, chosen: usize) -> EpochRecord<S> {
        self.check_agent(chosen);
        let mut intermediate = s.clone();
        intermediate.actions[chosen] = self.best_response(chosen, s);
        let hit = self.infection_update(&intermediate);
        let newly_infected = hit.difference(&s.infected);
        let mut next = intermediate.clone();
        next.infected.union_with(&hit);
        EpochRecord {
            epoch: 0,
            chosen,
            intermediate,
            next,
            newly_infected,
        }
    }

    /// Successor state only; skips building the record.
    pub fn next_state(&self, s: &State<S>, chosen: usize) -> State<S> {
        self.check_agent(chosen);
        let mut next = s.clone();
        next.actions[chosen] = self.best_response(chosen, s);
        let hit = self.infection_update(&next);
        next.infected.union_with(&hit);
        next
    }

    /// Best responses of every agent at `s`.
    pub fn best_responses(&self, s: &State<S>) -> Vec<S> {
        let r = self.exposures(s);
        (0..self.n)
            .map(|i| self.best_response_from_exposure(i, s.infected.contains(i), &r[i]))
            .collect()
    }
}

/// Infected set plus action profile.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State<S> {
    pub infected: AgentSet,
    pub actions: Vec<S>,
}

impl<S: Scalar> State<S> {
    /// Stable byte encoding: infected bitset words, then each action.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.actions.len() * 12);
        out.extend_from_slice(&(self.actions.len() as u32).to_le_bytes());
        for w in self.infected.words() {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for a in &self.actions {
            a.encode(&mut out);
        }
        out
    }

    pub fn infected_count(&self) -> usize {
        self.infected.len()
    }

    pub fn all_ones(&self) -> bool {
        self.actions.iter().all(|a| a.is_one())
    }
}

/// One epoch of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord<S> {
    pub epoch: usize,
    pub chosen: usize,
    /// Mid-epoch state: new action in place, infections not yet applied.
    pub intermediate: State<S>,
    pub next: State<S>,
    pub newly_infected: AgentSet,
}

/// Serializable snapshot of a state with 1-based agent labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateView {
    pub infected: Vec<usize>,
    /// Bitmask, bit `i` set when agent `i + 1` is infected, as a decimal string.
    pub mask: String,
    pub actions: Vec<String>,
}

impl StateView {
    pub fn of<S: Scalar>(s: &State<S>) -> Self {
        StateView {
            infected: s.infected.to_labels(),
            mask: s.infected.mask().to_string(),
            actions: s.actions.iter().map(Scalar::render).collect(),
        }
    }
}

#[allow(dead_code)]
fn _assert_send_sync() {
    fn check<T: Send + Sync>() {}
    check::<ModelConfig<Rational>>();
    check::<State<Rational>>();
    check::<ModelConfig<f64>>();
}
