//! Cutoff equilibria, reputational belief updates and contract calibration
//! for a static expert-advice model with career concerns, plus a seeded Monte
//! Carlo oracle for cross-checking the analytic quantities.

pub mod belief_engine;
pub mod cli;
pub mod committee;
pub mod config;
pub mod contract;
pub mod equilibrium;
pub mod error;
pub mod mc_oracle;
pub mod payoffs;
pub mod signal_model;

pub use belief_engine::{
    history_llr, history_partition, odds, odds_inv, outcome_llrs, posteriors, BeliefState,
    FrictionSpec, History, Llr, MisclassificationRule, OffPathPolicy, PosteriorSet,
};
pub use committee::{
    committee_cutoff, gatekeeping_sweep, overconfidence_wedge, pivotality, pivotality_enumerated,
    CommitteeSolution, CommitteeSpec, GatekeepingTable, OverconfidenceWedge,
};
pub use config::{ConfigError, ModelConfig};
pub use contract::{
    beta1_backout, calibrate, cutoff_for_target, drho_dbeta1, implementers_line, CalibrationRow,
    ImplementersLine,
};
pub use equilibrium::{
    advantage, best_response, conservatism_sweep, experimentation_rate, rd_derivative, sensitivity,
    solve_equilibrium, EquilibriumKind, EquilibriumSolution, Param, RateConvention, Response,
    Scenario, Sensitivity,
};
pub use error::{CornerDirection, Error, Result};
pub use mc_oracle::{compare, simulate, simulate_episodes, EpisodeRecord, SimSetup, SimSummary};
pub use payoffs::{eval_v, transfer_wedge, PayoffFamily, PayoffSpec, TransferSpec};
pub use signal_model::{
    normal_cdf, rec_frequency, success_prob_at, Ability, SignalFamily, SignalModel, State,
};
