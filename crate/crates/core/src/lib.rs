//! Simulation lab for independent Q-learners that share rewards in teams.
//!
//! Modules, bottom up:
//! - [`game`]: agents, teams, joint states/actions, team reward, trajectories
//! - [`envs`]: the two-state signal game, its four-state slippery variant and
//!   the team prisoner's dilemma
//! - [`learners`]: tabular ε-greedy Q-learning
//! - [`infotheory`]: return-distribution information estimators
//! - [`oracle`]: exact joint models and closed-form checks
//! - [`harness`]: configs, seeded trials, metrics, CSV/SVG output

pub mod envs;
pub mod error;
pub mod game;
pub mod harness;
pub mod infotheory;
pub mod learners;
pub mod oracle;

pub use error::{Error, Result};
