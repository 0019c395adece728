//! Exact law of `S_T` by dynamic programming over state distributions.
//!
//! Each step sends the mass `p` of every state to its `n` successors with
//! weight `p/n`. Exact rational sums make the merge order irrelevant, so the
//! parallel step is deterministic.

use std::collections::HashMap;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{is_absorbing, is_settled};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, State, StateView};
use crate::numeric::{render_decimal, Rational, RationalString};

/// Default bound on the number of distinct states kept at once.
pub const DEFAULT_SUPPORT_CAP: usize = 1_000_000;

/// Below this many states the step runs on one thread.
const PARALLEL_THRESHOLD: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    pub n: usize,
    pub epoch: usize,
    support: HashMap<State<Rational>, Rational>,
}

impl StateDistribution {
    pub fn point_mass(state: State<Rational>) -> Self {
        let n = state.actions.len();
        let mut support = HashMap::with_capacity(1);
        support.insert(state, Rational::one());
        StateDistribution { n, epoch: 0, support }
    }

    pub fn initial(cfg: &ModelConfig<Rational>) -> Self {
        Self::point_mass(cfg.initial_state())
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&State<Rational>, &Rational)> {
        self.support.iter()
    }

    pub fn probability(&self, s: &State<Rational>) -> Rational {
        self.support.get(s).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total(&self) -> Rational {
        self.support.values().fold(Rational::zero(), |acc, p| acc + p)
    }

    /// Support sorted by canonical byte encoding.
    pub fn sorted(&self) -> Vec<(&State<Rational>, &Rational)> {
        let mut items: Vec<_> = self
            .support
            .iter()
            .map(|(s, p)| (s.canonical_bytes(), s, p))
            .collect();
        items.sort_by(|a, b| a.0.cmp(&b.0));
        items.into_iter().map(|(_, s, p)| (s, p)).collect()
    }

    pub fn export(&self, precision: usize) -> DistributionExport {
        let marginal = marginal_infected_size(self);
        DistributionExport {
            n: self.n,
            epoch: self.epoch,
            support_size: self.len(),
            marginal_decimal: marginal.iter().map(|p| render_decimal(p, precision)).collect(),
            marginal: marginal.into_iter().map(RationalString).collect(),
            states: self
                .sorted()
                .into_iter()
                .map(|(s, p)| WeightedState {
                    state: StateView::of(s),
                    probability: RationalString(p.clone()),
                })
                .collect(),
        }
    }
}

/// JSON form of a [`StateDistribution`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionExport {
    pub n: usize,
    pub epoch: usize,
    pub support_size: usize,
    pub marginal: Vec<RationalString>,
    pub marginal_decimal: Vec<String>,
    pub states: Vec<WeightedState>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedState {
    #[serde(flatten)]
    pub state: StateView,
    pub probability: RationalString,
}

fn spread(
    cfg: &ModelConfig<Rational>,
    items: &[(&State<Rational>, &Rational)],
    weight: &Rational,
) -> HashMap<State<Rational>, Rational> {
    let mut out: HashMap<State<Rational>, Rational> = HashMap::with_capacity(items.len() * 2);
    for (s, p) in items {
        let share = *p * weight;
        for i in 0..cfg.n {
            let next = cfg.next_state(s, i);
            match out.get_mut(&next) {
                Some(q) => *q += &share,
                None => {
                    out.insert(next, share.clone());
                }
            }
        }
    }
    out
}

fn merge(
    mut a: HashMap<State<Rational>, Rational>,
    b: HashMap<State<Rational>, Rational>,
) -> HashMap<State<Rational>, Rational> {
    if a.len() < b.len() {
        return merge(b, a);
    }
    for (s, p) in b {
        match a.get_mut(&s) {
            Some(q) => *q += p,
            None => {
                a.insert(s, p);
            }
        }
    }
    a
}

/// One epoch of the stochastic process applied to `dist`.
pub fn advance(dist: &StateDistribution, cfg: &ModelConfig<Rational>) -> StateDistribution {
    let weight = Rational::new(1.into(), cfg.n.into());
    let items: Vec<_> = dist.support.iter().collect();
    let support = if items.len() < PARALLEL_THRESHOLD {
        spread(cfg, &items, &weight)
    } else {
        let chunk = items.len().div_ceil(rayon::current_num_threads() * 4).max(64);
        items
            .par_chunks(chunk)
            .map(|c| spread(cfg, c, &weight))
            .reduce(HashMap::new, merge)
    };
    StateDistribution {
        n: dist.n,
        epoch: dist.epoch + 1,
        support,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerateOptions {
    pub horizon: usize,
    pub support_cap: usize,
}

impl EnumerateOptions {
    pub fn new(horizon: usize) -> Self {
        EnumerateOptions {
            horizon,
            support_cap: DEFAULT_SUPPORT_CAP,
        }
    }
}

/// `horizon` applications of [`advance`] to the point mass on `S_0`.
pub fn enumerate_exact(cfg: &ModelConfig<Rational>, opts: EnumerateOptions) -> Result<StateDistribution> {
    enumerate_with(cfg, opts, |_| {})
}

/// Like [`enumerate_exact`], calling `observe` on every intermediate
/// distribution `S_0, …, S_T`.
pub fn enumerate_with(
    cfg: &ModelConfig<Rational>,
    opts: EnumerateOptions,
    mut observe: impl FnMut(&StateDistribution),
) -> Result<StateDistribution> {
    cfg.validate()?;
    let mut dist = StateDistribution::initial(cfg);
    observe(&dist);
    for _ in 0..opts.horizon {
        dist = advance(&dist, cfg);
        if dist.len() > opts.support_cap {
            return Err(Error::SupportCapExceeded {
                cap: opts.support_cap,
                reached: dist.len(),
            });
        }
        observe(&dist);
    }
    Ok(dist)
}

/// `P(|I| = m)` for `m = 1..=n`.
pub fn marginal_infected_size(dist: &StateDistribution) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); dist.n];
    for (s, p) in &dist.support {
        out[s.infected.len() - 1] += p;
    }
    out
}

/// Mass on literal fixed points of the process.
pub fn absorbed_mass(dist: &StateDistribution, cfg: &ModelConfig<Rational>) -> Rational {
    dist.support
        .iter()
        .filter(|(s, _)| is_absorbing(cfg, s))
        .fold(Rational::zero(), |acc, (_, p)| acc + p)
}

/// Mass on states whose infected set can no longer grow.
pub fn settled_mass(dist: &StateDistribution, cfg: &ModelConfig<Rational>) -> Rational {
    dist.support
        .iter()
        .filter(|(s, _)| is_settled(cfg, s))
        .fold(Rational::zero(), |acc, (_, p)| acc + p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run_dvsp, AgentSequence, RunOptions};
    use crate::model::AgentSet;
    use crate::numeric::{int, rat};

    fn cfg(n: usize, a: &str, tau: &str) -> ModelConfig<Rational> {
        ModelConfig::homogeneous(n, &rat(a), &rat(tau)).unwrap()
    }

    #[test]
    fn horizon_zero_is_the_initial_point_mass() {
        let c = cfg(5, "0", "0.3");
        let d = enumerate_exact(&c, EnumerateOptions::new(0)).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.probability(&c.initial_state()), int(1));
        assert_eq!(marginal_infected_size(&d), vec![int(1), int(0), int(0), int(0), int(0)]);
    }

    #[test]
    fn two_agents_branch_uniformly() {
        let c = cfg(2, "0", "0.5");
        let d = advance(&StateDistribution::initial(&c), &c);
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|(_, p)| *p == rat("1/2")));
    }

    #[test]
    fn absorbing_point_mass_is_fixed() {
        let c = cfg(5, "0", "0.3");
        let s = State {
            infected: AgentSet::full(5),
            actions: vec![int(1); 5],
        };
        let d = StateDistribution::point_mass(s.clone());
        let next = advance(&d, &c);
        assert_eq!(next.len(), 1);
        assert_eq!(next.probability(&s), int(1));
        assert_eq!(absorbed_mass(&next, &c), int(1));
    }

    #[test]
    fn two_epoch_absorbed_mass_by_hand() {
        // n = 3, a = 0, τ = 0.4: replay all nine two-agent sequences.
        let c = cfg(3, "0", "0.4");
        let d = enumerate_exact(&c, EnumerateOptions::new(2)).unwrap();
        let mut absorbed = Rational::zero();
        for u in 1..=3 {
            for v in 1..=3 {
                let seq = AgentSequence::from_labels(&[u, v]).unwrap();
                let t = run_dvsp(&c, &seq, RunOptions::new(2).run_through()).unwrap();
                if is_absorbing(&c, t.final_state()) {
                    absorbed += rat("1/9");
                }
            }
        }
        assert_eq!(absorbed_mass(&d, &c), absorbed);
        assert_eq!(d.total(), int(1));
    }

    #[test]
    fn full_activity_high_immunity_is_absorbed_immediately() {
        let c = cfg(5, "1", "0.5");
        let d = enumerate_exact(&c, EnumerateOptions::new(4)).unwrap();
        assert_eq!(absorbed_mass(&d, &c), int(1));
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn support_cap_is_enforced() {
        let c = cfg(5, "0", "0.3");
        let err = enumerate_exact(
            &c,
            EnumerateOptions {
                horizon: 6,
                support_cap: 50,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::SupportCapExceeded { cap: 50, .. }));
    }

    #[test]
    fn parallel_and_serial_steps_agree() {
        let c = cfg(5, "0", "0.3");
        let d = enumerate_exact(&c, EnumerateOptions::new(7)).unwrap();
        assert!(d.len() >= PARALLEL_THRESHOLD);
        let items: Vec<_> = d.support.iter().collect();
        let serial = spread(&c, &items, &rat("1/5"));
        let parallel = advance(&d, &c);
        assert_eq!(serial, parallel.support);
        assert_eq!(parallel.total(), int(1));
    }

    #[test]
    fn export_is_sorted_and_exact() {
        let c = cfg(3, "0", "0.4");
        let d = enumerate_exact(&c, EnumerateOptions::new(3)).unwrap();
        let e = d.export(3);
        assert_eq!(e.states.len(), d.len());
        assert_eq!(e.support_size, d.len());
        let again = serde_json::to_string(&d.export(3)).unwrap();
        assert_eq!(serde_json::to_string(&e).unwrap(), again);
        let total = e
            .states
            .iter()
            .fold(Rational::zero(), |acc, w| acc + &w.probability.0);
        assert_eq!(total, int(1));
    }
}
