//! Trajectories of the process under a fixed or seeded agent sequence.
//!
//! # Absorption
//!
//! The infected set is *frozen* at a state where every infected agent plays 1
//! and every healthy agent `j` has `a_j r_j ≤ τ(j)`. From such a state a
//! healthy mover never lowers its action, which only dilutes everybody
//! else's exposure, and an infected mover stays at 1, so nobody is ever
//! infected again. The healthy actions then climb monotonically to the least
//! fixed point of the best-response map above the current profile.
//!
//! That climb usually never *reaches* its limit in finitely many epochs: with
//! two or more healthy agents below the cap each move closes only part of the
//! gap. A trajectory is therefore reported as absorbed at the first frozen
//! state, and its limit `S_∞` is obtained by solving the fixed-point equations
//! exactly (see [`limit_state`]). [`is_absorbing`] remains the literal
//! fixed-point test.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AgentSet, EpochRecord, ModelConfig, State, StateView};
use crate::numeric::{render_decimal, Arithmetic, Rational, RationalString, Scalar};
use crate::report::{classify_action_profile, ClassLabel};

/// Default horizon multiplier: `max_epochs = 64 · n`.
pub const DEFAULT_EPOCHS_PER_AGENT: usize = 64;

/// Which agent moves at each epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentSequence {
    /// 0-based agent indices.
    Explicit(Vec<usize>),
    /// Uniform draws from ChaCha8 seeded with `seed`, on stream `stream`.
    Seeded { seed: u64, stream: u64 },
}

impl AgentSequence {
    /// From 1-based agent labels.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        labels
            .iter()
            .map(|&l| {
                if l == 0 {
                    Err(Error::AgentOutOfRange { agent: 0, n: 0 })
                } else {
                    Ok(l - 1)
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(AgentSequence::Explicit)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let AgentSequence::Explicit(v) = self {
            if let Some(&bad) = v.iter().find(|&&i| i >= n) {
                return Err(Error::AgentOutOfRange { agent: bad + 1, n });
            }
        }
        Ok(())
    }

    pub fn stream(&self, n: usize) -> AgentStream<'_> {
        match self {
            AgentSequence::Explicit(v) => AgentStream::Explicit(v.iter()),
            AgentSequence::Seeded { seed, stream } => AgentStream::Seeded {
                rng: seeded_rng(*seed, *stream),
                n,
            },
        }
    }
}

/// ChaCha8 keyed by the master seed, with the sample index as its stream id.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub enum AgentStream<'a> {
    Explicit(std::slice::Iter<'a, usize>),
    Seeded { rng: ChaCha8Rng, n: usize },
}

impl Iterator for AgentStream<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        match self {
            AgentStream::Explicit(it) => it.next().copied(),
            AgentStream::Seeded { rng, n } => Some(rng.random_range(0..*n)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub max_epochs: usize,
    /// Stop at the first frozen state instead of running out the horizon.
    pub stop_when_settled: bool,
}

impl RunOptions {
    pub fn new(max_epochs: usize) -> Self {
        RunOptions {
            max_epochs,
            stop_when_settled: true,
        }
    }

    pub fn default_for(n: usize) -> Self {
        Self::new(DEFAULT_EPOCHS_PER_AGENT * n)
    }

    pub fn run_through(mut self) -> Self {
        self.stop_when_settled = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub initial: State<S>,
    pub records: Vec<EpochRecord<S>>,
    pub absorbed: bool,
    /// Index `t` of the first frozen state `S_t`.
    pub absorbed_at: Option<usize>,
    /// `t_i`: first epoch at which agent `i` moves.
    pub first_hit: Vec<Option<usize>>,
    /// Agents that moved before agent 0 first did.
    pub n1: Option<AgentSet>,
    pub limit: Option<State<S>>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn final_state(&self) -> &State<S> {
        self.records.last().map_or(&self.initial, |r| &r.next)
    }

    /// `S_0, S_1, …` as visited.
    pub fn states(&self) -> impl Iterator<Item = &State<S>> {
        std::iter::once(&self.initial).chain(self.records.iter().map(|r| &r.next))
    }

    /// JSON lines: the initial snapshot, one line per epoch, then a summary.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        let mut push = |line: &TraceLine| -> Result<()> {
            out.push_str(&serde_json::to_string(line)?);
            out.push('\n');
            Ok(())
        };
        push(&TraceLine::Initial {
            epoch: 0,
            state: StateView::of(&self.initial),
        })?;
        for r in &self.records {
            push(&TraceLine::Epoch {
                epoch: r.epoch,
                chosen: r.chosen + 1,
                newly_infected: r.newly_infected.to_labels(),
                state: StateView::of(&r.next),
            })?;
        }
        push(&TraceLine::Summary {
            epochs: self.records.len(),
            absorbed: self.absorbed,
            absorbed_at: self.absorbed_at,
            first_hit: self.first_hit.clone(),
            n1: self.n1.as_ref().map(AgentSet::to_labels),
            limit: self.limit.as_ref().map(StateView::of),
        })?;
        Ok(out)
    }
}

/// One line of a trajectory export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TraceLine {
    Initial {
        epoch: usize,
        #[serde(flatten)]
        state: StateView,
    },
    Epoch {
        epoch: usize,
        chosen: usize,
        newly_infected: Vec<usize>,
        #[serde(flatten)]
        state: StateView,
    },
    Summary {
        epochs: usize,
        absorbed: bool,
        absorbed_at: Option<usize>,
        first_hit: Vec<Option<usize>>,
        n1: Option<Vec<usize>>,
        limit: Option<StateView>,
    },
}

/// Literal fixed-point test: every best response equals the current action
/// and nobody would be infected.
pub fn is_absorbing<S: Scalar>(cfg: &ModelConfig<S>, s: &State<S>) -> bool {
    cfg.best_responses(s).iter().zip(&s.actions).all(|(b, a)| b == a)
        && cfg.infection_update(s).difference(&s.infected).is_empty()
}

/// The infected set can never grow again from `s` (see the module docs).
pub fn is_settled<S: Scalar>(cfg: &ModelConfig<S>, s: &State<S>) -> bool {
    let one = S::one();
    if s.infected.iter().any(|i| s.actions[i] != one) {
        return false;
    }
    let r = cfg.exposures(s);
    (0..cfg.n)
        .filter(|&j| !s.infected.contains(j))
        .all(|j| s.actions[j].clone() * r[j].clone() <= cfg.tau[j])
}

/// Limit of the process from a settled state: infected agents at 1, healthy
/// agents at the least fixed point of their best responses above their
/// current actions.
///
/// The healthy block solves `x_u = min{1, τ(u)(m_u + Σ_v g_uv x_v) / m_u}`
/// with `m_u` the infected weight around `u`. The set of agents pinned at 1
/// is read off a floating-point run of the monotone iteration; the remaining
/// linear system is then solved in `S`. In rational mode the result is
/// verified to be a fixed point. Returns `None` if `s` is not settled or no
/// candidate verifies.
pub fn limit_state<S: Scalar>(cfg: &ModelConfig<S>, s: &State<S>) -> Option<State<S>> {
    if !is_settled(cfg, s) {
        return None;
    }
    let n = cfg.n;
    let healthy: Vec<usize> = (0..n).filter(|&j| !s.infected.contains(j)).collect();
    let infected_weight: Vec<S> = healthy
        .iter()
        .map(|&u| {
            s.infected
                .iter()
                .fold(S::zero(), |acc, j| acc + cfg.interaction.weight(u, j))
        })
        .collect();
    let approx = iterate_healthy_block(cfg, s, &healthy, &infected_weight);

    for slack in [1e-9, 0.0] {
        let capped: Vec<bool> = approx.iter().map(|&x| x >= 1.0 - slack).collect();
        if let Some(limit) = solve_with_caps(cfg, s, &healthy, &infected_weight, &capped) {
            return Some(limit);
        }
    }
    None
}

/// Monotone Jacobi iteration of the healthy best responses in `f64`.
fn iterate_healthy_block<S: Scalar>(
    cfg: &ModelConfig<S>,
    s: &State<S>,
    healthy: &[usize],
    infected_weight: &[S],
) -> Vec<f64> {
    const MAX_SWEEPS: usize = 100_000;
    let m: Vec<f64> = infected_weight.iter().map(Scalar::to_f64).collect();
    let tau: Vec<f64> = healthy.iter().map(|&u| cfg.tau[u].to_f64()).collect();
    let g: Vec<Vec<f64>> = healthy
        .iter()
        .map(|&u| healthy.iter().map(|&v| if u == v { 0.0 } else { cfg.interaction.weight(u, v).to_f64() }).collect())
        .collect();
    let mut x: Vec<f64> = healthy.iter().map(|&u| s.actions[u].to_f64()).collect();
    for _ in 0..MAX_SWEEPS {
        let next: Vec<f64> = (0..healthy.len())
            .map(|k| {
                if m[k] == 0.0 {
                    return 1.0;
                }
                let spread: f64 = g[k].iter().zip(&x).map(|(w, xv)| w * xv).sum();
                (tau[k] * (m[k] + spread) / m[k]).min(1.0).max(x[k])
            })
            .collect();
        let delta = next.iter().zip(&x).map(|(a, b)| a - b).fold(0.0, f64::max);
        x = next;
        if delta <= 1e-15 {
            break;
        }
    }
    x
}

fn solve_with_caps<S: Scalar>(
    cfg: &ModelConfig<S>,
    s: &State<S>,
    healthy: &[usize],
    infected_weight: &[S],
    capped: &[bool],
) -> Option<State<S>> {
    let free: Vec<usize> = (0..healthy.len()).filter(|&k| !capped[k]).collect();
    let solution = solve_free_block(cfg, healthy, infected_weight, capped, &free)?;
    let mut limit = s.clone();
    for (k, &u) in healthy.iter().enumerate() {
        if capped[k] {
            limit.actions[u] = S::one();
        }
    }
    for (&k, x) in free.iter().zip(solution) {
        let u = healthy[k];
        if x < s.actions[u] || x > S::one() {
            return None;
        }
        limit.actions[u] = x;
    }
    if S::ARITHMETIC == Arithmetic::Rational && !is_absorbing(cfg, &limit) {
        return None;
    }
    Some(limit)
}

fn solve_free_block<S: Scalar>(
    cfg: &ModelConfig<S>,
    healthy: &[usize],
    infected_weight: &[S],
    capped: &[bool],
    free: &[usize],
) -> Option<Vec<S>> {
    let size = free.len();
    if size == 0 {
        return Some(Vec::new());
    }
    // Row for healthy agent u:  m_u x_u − τ_u Σ_{v free} g_uv x_v = τ_u (m_u + Σ_{v capped} g_uv)
    let mut m: Vec<Vec<S>> = vec![vec![S::zero(); size + 1]; size];
    for (row, &k) in free.iter().enumerate() {
        let u = healthy[k];
        let tau = cfg.tau[u].clone();
        let mut rhs = infected_weight[k].clone();
        for (k2, &v) in healthy.iter().enumerate() {
            if k2 != k && capped[k2] {
                rhs = rhs + cfg.interaction.weight(u, v);
            }
        }
        m[row][size] = tau.clone() * rhs;
        for (col, &k2) in free.iter().enumerate() {
            m[row][col] = if col == row {
                infected_weight[k].clone()
            } else {
                S::zero() - tau.clone() * cfg.interaction.weight(u, healthy[k2])
            };
        }
    }
    gaussian_solve(m)
}

/// Solves an augmented system in place with partial pivoting.
pub(crate) fn gaussian_solve<S: Scalar>(mut m: Vec<Vec<S>>) -> Option<Vec<S>> {
    let size = m.len();
    for col in 0..size {
        let pivot = (col..size)
            .filter(|&r| !m[r][col].is_zero())
            .max_by(|&a, &b| {
                m[a][col]
                    .abs()
                    .partial_cmp(&m[b][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })?;
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for c in col..=size {
            m[col][c] = m[col][c].clone() / p.clone();
        }
        for r in 0..size {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone();
            for c in col..=size {
                let delta = factor.clone() * m[col][c].clone();
                m[r][c] = m[r][c].clone() - delta;
            }
        }
    }
    Some(m.into_iter().map(|row| row[size].clone()).collect())
}

/// Deterministic process driven by `seq`.
pub fn run_dvsp<S: Scalar>(
    cfg: &ModelConfig<S>,
    seq: &AgentSequence,
    opts: RunOptions,
) -> Result<Trajectory<S>> {
    seq.validate(cfg.n)?;
    let initial = cfg.initial_state();
    let mut state = initial.clone();
    let mut records = Vec::new();
    let mut absorbed_at = None;
    let mut first_hit = vec![None; cfg.n];
    let mut stream = seq.stream(cfg.n);
    let mut drawn = 0usize;

    while records.len() < opts.max_epochs {
        let Some(chosen) = stream.next() else { break };
        note_hit(&mut first_hit, chosen, drawn);
        drawn += 1;
        let mut rec = cfg.epoch_step(&state, chosen);
        rec.epoch = records.len();
        state = rec.next.clone();
        records.push(rec);
        if absorbed_at.is_none() && is_settled(cfg, &state) {
            absorbed_at = Some(records.len());
            if opts.stop_when_settled {
                break;
            }
        }
    }
    if records.is_empty() && is_settled(cfg, &initial) {
        absorbed_at = Some(0);
    }

    // t_i belongs to the sequence, not to the state: keep reading it past the
    // stopping point until every agent has shown up.
    match seq {
        AgentSequence::Explicit(_) => {
            for chosen in stream {
                note_hit(&mut first_hit, chosen, drawn);
                drawn += 1;
            }
        }
        AgentSequence::Seeded { .. } => {
            const EXTRA_DRAWS: usize = 1 << 20;
            for chosen in stream.take(EXTRA_DRAWS) {
                if first_hit.iter().all(Option::is_some) {
                    break;
                }
                note_hit(&mut first_hit, chosen, drawn);
                drawn += 1;
            }
        }
    }
    let n1 = first_hit[0].map(|t1| {
        AgentSet::from_agents(
            cfg.n,
            (0..cfg.n).filter(|&i| first_hit[i].is_some_and(|ti| ti < t1)),
        )
    });

    let limit = absorbed_at.and_then(|_| limit_state(cfg, &state));
    Ok(Trajectory {
        initial,
        records,
        absorbed: absorbed_at.is_some(),
        absorbed_at,
        first_hit,
        n1,
        limit,
    })
}

fn note_hit(first_hit: &mut [Option<usize>], agent: usize, epoch: usize) {
    if first_hit[agent].is_none() {
        first_hit[agent] = Some(epoch);
    }
}

/// Stochastic process: uniform agent choice per epoch.
pub fn run_svsp_sample<S: Scalar>(
    cfg: &ModelConfig<S>,
    seed: u64,
    stream: u64,
    opts: RunOptions,
) -> Result<Trajectory<S>> {
    run_dvsp(cfg, &AgentSequence::Seeded { seed, stream }, opts)
}

/// Frequencies of `|N₁|` over a batch of trajectories.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FirstHitStats {
    /// `counts[l]` trajectories had `|N₁| = l`.
    pub counts: Vec<u64>,
    /// Trajectories where agent 1 never moved.
    pub missing: u64,
}

impl FirstHitStats {
    pub fn new(n: usize) -> Self {
        FirstHitStats {
            counts: vec![0; n],
            missing: 0,
        }
    }

    pub fn observe(&mut self, n1: Option<&AgentSet>) {
        match n1 {
            Some(set) => self.counts[set.len()] += 1,
            None => self.missing += 1,
        }
    }

    pub fn merge(&mut self, other: &FirstHitStats) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.missing += other.missing;
    }

    pub fn observed(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let total = self.observed().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / total).collect()
    }
}

pub fn first_hit_stats<S: Scalar>(n: usize, trajectories: &[Trajectory<S>]) -> FirstHitStats {
    let mut stats = FirstHitStats::new(n);
    for t in trajectories {
        stats.observe(t.n1.as_ref());
    }
    stats
}

/// Empirical law of the limit over absorbed samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalLaw {
    pub n: usize,
    /// Absorbed samples that contribute to the law.
    pub samples: u64,
    /// `size_counts[m - 1]` samples ended with `m` infected agents.
    pub size_counts: Vec<u64>,
    pub infected_set_counts: BTreeMap<AgentSet, u64>,
    pub action_class_counts: BTreeMap<ClassLabel, u64>,
}

impl EmpiricalLaw {
    pub fn new(n: usize) -> Self {
        EmpiricalLaw {
            n,
            samples: 0,
            size_counts: vec![0; n],
            infected_set_counts: BTreeMap::new(),
            action_class_counts: BTreeMap::new(),
        }
    }

    pub fn observe(&mut self, infected: &AgentSet, class: ClassLabel) {
        self.samples += 1;
        self.size_counts[infected.len() - 1] += 1;
        *self.infected_set_counts.entry(infected.clone()).or_default() += 1;
        *self.action_class_counts.entry(class).or_default() += 1;
    }

    pub fn merge(&mut self, other: EmpiricalLaw) {
        self.samples += other.samples;
        for (a, b) in self.size_counts.iter_mut().zip(&other.size_counts) {
            *a += b;
        }
        for (k, v) in other.infected_set_counts {
            *self.infected_set_counts.entry(k).or_default() += v;
        }
        for (k, v) in other.action_class_counts {
            *self.action_class_counts.entry(k).or_default() += v;
        }
    }

    /// Exact `P(|I| = m)` for `m = 1..=n`.
    pub fn size_law(&self) -> Vec<Rational> {
        let total = Rational::from_integer(self.samples.max(1).into());
        self.size_counts
            .iter()
            .map(|&c| Rational::from_integer(c.into()) / total.clone())
            .collect()
    }

    pub fn size_law_f64(&self) -> Vec<f64> {
        let total = self.samples.max(1) as f64;
        self.size_counts.iter().map(|&c| c as f64 / total).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarloOptions {
    pub samples: u64,
    pub seed: u64,
    pub max_epochs: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonteCarloReport {
    pub law: EmpiricalLaw,
    /// Samples still unsettled at the horizon; excluded from `law`.
    pub non_absorbed: u64,
    pub first_hits: FirstHitStats,
}

impl MonteCarloReport {
    fn empty(n: usize) -> Self {
        MonteCarloReport {
            law: EmpiricalLaw::new(n),
            non_absorbed: 0,
            first_hits: FirstHitStats::new(n),
        }
    }

    fn merge(mut self, other: MonteCarloReport) -> Self {
        self.law.merge(other.law);
        self.non_absorbed += other.non_absorbed;
        self.first_hits.merge(&other.first_hits);
        self
    }
}

/// Runs `samples` independent trajectories on streams `0..samples`.
///
/// Each sample owns its stream, and aggregation is integer counting, so the
/// result does not depend on the number of workers.
pub fn monte_carlo<S: Scalar>(
    cfg: &ModelConfig<S>,
    opts: MonteCarloOptions,
) -> Result<MonteCarloReport> {
    if opts.samples == 0 {
        return Err(Error::InvalidConfig("monte carlo needs at least one sample".into()));
    }
    cfg.validate()?;
    let tolerance = match S::ARITHMETIC {
        Arithmetic::Rational => S::zero(),
        Arithmetic::Float => S::from_rational(&Rational::new(1.into(), 1_000_000_000.into())),
    };
    let run_opts = RunOptions::new(opts.max_epochs);
    let work = || {
        (0..opts.samples)
            .into_par_iter()
            .fold(
                || MonteCarloReport::empty(cfg.n),
                |mut acc, stream| {
                    let traj = run_svsp_sample(cfg, opts.seed, stream, run_opts)
                        .expect("config validated above");
                    acc.first_hits.observe(traj.n1.as_ref());
                    match &traj.limit {
                        Some(limit) => {
                            let class = classify_action_profile(cfg, limit, &tolerance);
                            acc.law.observe(&limit.infected, class);
                        }
                        None => acc.non_absorbed += 1,
                    }
                    acc
                },
            )
            .reduce(|| MonteCarloReport::empty(cfg.n), MonteCarloReport::merge)
    };
    with_threads(opts.threads, work)
}

/// Runs `work` on a dedicated pool of `threads` workers, or on the global
/// pool when `threads` is `None`.
pub fn with_threads<R: Send>(threads: Option<usize>, work: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

/// JSON form of a [`MonteCarloReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationExport {
    pub n: usize,
    pub seed: u64,
    pub samples: u64,
    pub max_epochs: usize,
    pub absorbed_samples: u64,
    pub non_absorbed: u64,
    pub size_counts: Vec<u64>,
    /// Over absorbed samples.
    pub size_law: Vec<RationalString>,
    pub size_law_decimal: Vec<String>,
    pub infected_sets: Vec<SetCount>,
    pub action_classes: Vec<ClassCount>,
    pub first_hit: FirstHitExport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetCount {
    pub infected: Vec<usize>,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCount {
    pub class: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub off_value: Option<RationalString>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub off_value_decimal: Option<String>,
    pub count: u64,
}

/// `|N₁|` histogram; `counts[l]` is the number of samples with `|N₁| = l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstHitExport {
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
    pub missing: u64,
}

impl MonteCarloReport {
    pub fn export(&self, opts: &MonteCarloOptions, precision: usize) -> SimulationExport {
        let law = self.law.size_law();
        SimulationExport {
            n: self.law.n,
            seed: opts.seed,
            samples: opts.samples,
            max_epochs: opts.max_epochs,
            absorbed_samples: self.law.samples,
            non_absorbed: self.non_absorbed,
            size_counts: self.law.size_counts.clone(),
            size_law_decimal: law.iter().map(|p| render_decimal(p, precision)).collect(),
            size_law: law.into_iter().map(RationalString).collect(),
            infected_sets: self
                .law
                .infected_set_counts
                .iter()
                .map(|(set, &count)| SetCount {
                    infected: set.to_labels(),
                    count,
                })
                .collect(),
            action_classes: self
                .law
                .action_class_counts
                .iter()
                .map(|(label, &count)| {
                    let off = match label {
                        ClassLabel::Class(c) => c.off_value(),
                        ClassLabel::Unclassified => None,
                    };
                    ClassCount {
                        class: label.label(),
                        off_value: off.cloned().map(RationalString),
                        off_value_decimal: off.map(|v| render_decimal(v, precision)),
                        count,
                    }
                })
                .collect(),
            first_hit: FirstHitExport {
                counts: self.first_hits.counts.clone(),
                frequencies: self.first_hits.frequencies(),
                missing: self.first_hits.missing,
            },
        }
    }
}
