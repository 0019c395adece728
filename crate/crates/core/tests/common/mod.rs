//! Trajectory invariants shared by the property suite and the acceptance run.

#![allow(dead_code)]

use epigame_core::dynamics::{is_settled, run_dvsp, AgentSequence, RunOptions, Trajectory};
use epigame_core::model::{ModelConfig, State, UtilityCurve};
use epigame_core::numeric::{int, rat, Rational};
use epigame_core::report::{classify_action_profile, ClassLabel};
use epigame_core::theory::{predict_action_limit, ActionProfileClass};
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

/// Homogeneous complete-graph case drawn for the invariant suites.
#[derive(Debug, Clone)]
pub struct Case {
    pub n: usize,
    pub a: Rational,
    pub tau: Rational,
    /// 0-based agents.
    pub seq: Vec<usize>,
}

impl Case {
    pub fn config(&self) -> ModelConfig<Rational> {
        ModelConfig::homogeneous(self.n, &self.a, &self.tau).unwrap()
    }
}

fn grid_value(steps: i64) -> impl Strategy<Value = Rational> {
    (0..=steps).prop_map(move |k| Rational::new(k.into(), steps.into()))
}

pub fn action_value() -> impl Strategy<Value = Rational> {
    prop_oneof![
        4 => grid_value(20),
        1 => Just(rat("0.35")),
        1 => Just(rat("0.45")),
        1 => (1i64..12, 1i64..12).prop_map(|(p, q)| Rational::new(p.min(q).into(), q.into())),
    ]
}

pub fn immunity_value() -> impl Strategy<Value = Rational> {
    prop_oneof![
        4 => (1i64..40).prop_map(|k| Rational::new(k.into(), 40.into())),
        1 => Just(rat("0.255")),
        1 => Just(rat("0.27")),
        1 => (1i64..12, 2i64..13).prop_map(|(p, q)| Rational::new((p % q).max(1).into(), q.into())),
    ]
}

pub fn case() -> impl Strategy<Value = Case> {
    (2usize..=6, action_value(), immunity_value()).prop_flat_map(|(n, a, tau)| {
        prop::collection::vec(0..n, 0..48).prop_map(move |seq| Case {
            n,
            a: a.clone(),
            tau: tau.clone(),
            seq,
        })
    })
}

pub fn run(case: &Case) -> Trajectory<Rational> {
    let cfg = case.config();
    let seq = AgentSequence::Explicit(case.seq.clone());
    run_dvsp(&cfg, &seq, RunOptions::new(case.seq.len()).run_through()).unwrap()
}

fn states(t: &Trajectory<Rational>) -> Vec<&State<Rational>> {
    t.states().collect()
}

/// `I(S_t) ⊆ I(S_{t+1})` along the whole trajectory.
pub fn infected_sets_nested(t: &Trajectory<Rational>) -> Result<(), String> {
    let s = states(t);
    for k in 1..s.len() {
        if !s[k].infected.is_superset(&s[k - 1].infected) {
            return Err(format!("infected set shrank at step {k}"));
        }
    }
    Ok(())
}

/// From the first settled state on, the infected set is constant and every
/// action is nondecreasing.
pub fn actions_monotone_after_stabilization(cfg: &ModelConfig<Rational>, t: &Trajectory<Rational>) -> Result<(), String> {
    let s = states(t);
    let last = s.len() - 1;
    let Some(start) = (0..=last).find(|&k| is_settled(cfg, s[k])) else {
        return Ok(());
    };
    for k in start + 1..=last {
        if s[k].infected != s[start].infected {
            return Err(format!("infected set changed at step {k} after settling at {start}"));
        }
        for i in 0..s[k].actions.len() {
            if s[k].actions[i] < s[k - 1].actions[i] {
                return Err(format!("agent {} decreased at step {k} after stabilizing at {start}", i + 1));
            }
        }
    }
    Ok(())
}

/// A state with infected actions at 1 and healthy actions at most τ never
/// sees the infected set grow again.
pub fn freezing(cfg: &ModelConfig<Rational>, t: &Trajectory<Rational>) -> Result<(), String> {
    let s = states(t);
    let one = Rational::one();
    let frozen = |st: &State<Rational>| {
        (0..cfg.n).all(|i| {
            if st.infected.contains(i) {
                st.actions[i] == one
            } else {
                st.actions[i] <= cfg.tau[i]
            }
        })
    };
    if let Some(k) = s.iter().position(|st| frozen(st)) {
        if let Some(j) = (k..s.len()).find(|&j| s[j].infected != s[k].infected) {
            return Err(format!("infected set grew at step {j} after freezing at {k}"));
        }
    }
    Ok(())
}

/// With every initial action at most τ, nobody else is infected before
/// agent 1 first moves.
pub fn quiescent_before_first_move(cfg: &ModelConfig<Rational>, t: &Trajectory<Rational>) -> Result<(), String> {
    if (0..cfg.n).any(|i| cfg.initial_actions[i] > cfg.tau[i]) {
        return Ok(());
    }
    let s = states(t);
    let t1 = t.first_hit[0].unwrap_or(usize::MAX).min(s.len() - 1);
    for (k, st) in s.iter().enumerate().take(t1 + 1) {
        if st.infected.len() != 1 || !st.infected.contains(0) {
            return Err(format!("I(S_{k}) = {:?} before t1 = {t1}", st.infected.to_labels()));
        }
    }
    Ok(())
}

/// Fixed point along the trajectory: a mover already at its best response
/// leaves the actions alone, and the whole state when no infection is
/// pending.
pub fn fixed_points_hold(cfg: &ModelConfig<Rational>, t: &Trajectory<Rational>) -> Result<(), String> {
    let s = states(t);
    for (k, rec) in t.records.iter().enumerate() {
        let prev = s[k];
        if cfg.best_response(rec.chosen, prev) != prev.actions[rec.chosen] {
            continue;
        }
        if rec.next.actions != prev.actions {
            return Err(format!("step {k}: mover {} at its best response changed an action", rec.chosen + 1));
        }
        let pending = cfg.infection_update(prev).difference(&prev.infected);
        if pending.is_empty() && rec.next != *prev {
            return Err(format!("step {k}: mover {} was at its best response but the state moved", rec.chosen + 1));
        }
    }
    Ok(())
}

/// Every limit classifies as `1⃗` or `A_m` with `m = |I|` and the exact γ.
pub fn limit_classifies(cfg: &ModelConfig<Rational>, t: &Trajectory<Rational>) -> Result<(), String> {
    let Some(limit) = &t.limit else { return Ok(()) };
    let m = limit.infected.len();
    match classify_action_profile(cfg, limit, &Rational::zero()) {
        ClassLabel::Class(ActionProfileClass::AllOnes) => {
            let healthy_at_one = (0..cfg.n).all(|i| limit.actions[i].is_one());
            if healthy_at_one {
                Ok(())
            } else {
                Err("all-ones label on a profile below 1".into())
            }
        }
        ClassLabel::Class(ActionProfileClass::ClassA { m: cm, off_value }) => {
            if cm != m {
                return Err(format!("A({cm}) but |I| = {m}"));
            }
            let gamma = predict_action_limit(m, cfg.n, &cfg.tau[0]);
            if off_value != gamma {
                return Err(format!("off value {off_value} differs from gamma {gamma}"));
            }
            Ok(())
        }
        ClassLabel::Unclassified => Err(format!("unclassified limit {:?}", limit.actions)),
    }
}

/// All trajectory-level invariants for one case.
pub fn check_trajectory(case: &Case) -> Result<(), String> {
    let cfg = case.config();
    let t = run(case);
    infected_sets_nested(&t)?;
    actions_monotone_after_stabilization(&cfg, &t)?;
    freezing(&cfg, &t)?;
    quiescent_before_first_move(&cfg, &t)?;
    fixed_points_hold(&cfg, &t)?;
    limit_classifies(&cfg, &t)?;
    Ok(())
}

pub fn curves() -> Vec<UtilityCurve> {
    vec![
        UtilityCurve::Identity,
        UtilityCurve::SquareRoot,
        UtilityCurve::Polynomial(int(3)),
        UtilityCurve::Polynomial(rat("1/3")),
    ]
}

/// The closed-form best response is a utility maximiser for every curve.
pub fn best_response_maximises(case: &Case, state_step: usize, agent: usize) -> Result<(), String> {
    let base = case.config();
    let t = run(case);
    let s = t.states().nth(state_step.min(t.records.len())).unwrap().clone();
    let b = base.best_response(agent, &s);
    for curve in curves() {
        let mut cfg = base.clone();
        cfg.utility = curve.clone();
        if cfg.best_response(agent, &s) != b {
            return Err(format!("{curve:?} changed the best response"));
        }
        let at = |x: &Rational| {
            let mut probe = s.clone();
            probe.actions[agent] = x.clone();
            cfg.utility(agent, &probe)
        };
        let best = at(&b);
        let slack = rat("1/1000000000");
        for k in 0..=64i64 {
            let x = Rational::new(k.into(), 64.into());
            if (x.clone() - &b).abs() <= slack {
                continue;
            }
            if at(&x) > best {
                return Err(format!("{curve:?}: action {x} beats best response {b}"));
            }
        }
    }
    Ok(())
}
