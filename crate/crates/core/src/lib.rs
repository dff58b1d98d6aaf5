//! Simulation and analysis of large-population multi-agent bandit games with
//! mean-field rewards.
//!
//! Agents repeatedly pick arms with a Hedge policy over their learned reward
//! estimates; an arm's reward decreases with the fraction of the population
//! playing it. The crate simulates the stochastic game ([`sim`]), integrates
//! and solves its deterministic mean-field limit ([`meanfield`]) and checks
//! the contraction and regret-related inequalities the model admits
//! ([`analysis`]).
//!
//! ```
//! use mfbandit_core::{cumulative_reward, Game, GameConfig, RewardKind};
//!
//! let config = GameConfig::homogeneous(50, 4, 200, RewardKind::General, 0.5, 0.5, 0.2, 7);
//! let trace = Game::new(config).unwrap().run().unwrap();
//! assert!(cumulative_reward(&trace) > 100.0);
//! ```

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod export;
pub mod game;
pub mod meanfield;
pub mod policy;
pub mod profile;
pub mod reward;
pub mod rng;
pub mod sim;
pub mod stepsize;

pub use analysis::{
    contraction_check_general, contraction_check_heterogeneous, contraction_check_linear,
    empirical_contraction_estimate, population_variance_check, state_change_bound, ContractionCheck, EstimateMode,
};
pub use config::{validate_config, BetaSpec, EtaSpec, GameConfig, RewardConfig};
pub use error::{Error, Result};
pub use game::{init_state_profile, Game};
pub use meanfield::{integrate_ode, solve_mfe, solve_mfe_from, MfeOptions, MfeSolution, OdeTrajectory};
pub use policy::{hedge_probabilities, sample_arm, PolicyParams};
pub use profile::{PopulationProfile, StateProfile};
pub use reward::{CustomReward, RewardKind, RewardSpec};
pub use rng::SeedStreams;
pub use sim::{cumulative_reward, empirical_regret, mean_regret, RunTrace};
pub use stepsize::{stepsize, StepsizeSchedule};
