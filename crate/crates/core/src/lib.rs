//! Best-response epidemic dynamics.
//!
//! A population of `n` agents each picks an activity level in `[0, 1]`. At
//! every epoch one agent, chosen uniformly or by an explicit sequence, moves
//! to its best response; afterwards every agent whose action times viral
//! exposure strictly exceeds its immunity becomes infected. This crate
//! provides:
//!
//! * [`model`]: states, exposure, utility, best response and the epoch step;
//! * [`dynamics`]: trajectories, absorption, limits and Monte Carlo;
//! * [`enumeration`]: the exact law of `S_T` by dynamic programming;
//! * [`theory`]: closed-form limit laws and their thresholds;
//! * [`report`]: comparison tables between the three.
//!
//! Everything is generic over [`Scalar`], implemented for exact
//! [`Rational`]s and for `f64`.
//!
//! ```
//! use epigame_core::{limit_law, rat};
//!
//! let law = limit_law(5, &rat("0"), &rat("0.25")).unwrap();
//! assert_eq!(law.size_law()[0], rat("2/5"));
//! ```

pub mod config;
pub mod dynamics;
pub mod enumeration;
pub mod error;
pub mod model;
pub mod numeric;
pub mod report;
pub mod theory;

pub use config::{AnyConfig, ConfigSpec};
pub use dynamics::{
    first_hit_stats, is_absorbing, is_settled, limit_state, monte_carlo, run_dvsp, run_svsp_sample, with_threads,
    AgentSequence, EmpiricalLaw, FirstHitStats, MonteCarloOptions, MonteCarloReport, RunOptions,
    SimulationExport, TraceLine, Trajectory,
};
pub use enumeration::{
    absorbed_mass, advance, enumerate_exact, marginal_infected_size, settled_mass, EnumerateOptions,
    StateDistribution, DEFAULT_SUPPORT_CAP,
};
pub use error::{Error, Result};
pub use model::{AgentSet, EpochRecord, Interaction, ModelConfig, State, StateView, UtilityCurve};
pub use numeric::{int, parse_rational, rat, render_decimal, render_rational, Arithmetic, Rational, Scalar};
pub use report::{
    build_table, classify_action_profile, classify_profile, tv_distance, tv_distance_exact, ClassLabel,
    ComparisonRow, GridPoint, Method,
};
pub use theory::{
    action_law, classify_regime, eta, infected_law, limit_law, predict_action_limit, stirling2, thresholds,
    ActionProfileClass, Law, LimitLaw, Regime, RegimeThresholds,
};
