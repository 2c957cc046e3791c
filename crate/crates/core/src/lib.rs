//! Numerical engine for a capacity-constrained hiring-competition game.
//!
//! N firms interview from a shared pool of applicants whose quality score
//! follows a common distribution with density `phi > 0` on `[0, 1]`. Every
//! firm sees the same score (all of them run the same screening model), each
//! firm may interview at most a mass `c` of applicants, and an interviewed
//! applicant passes with probability equal to their score. Pass outcomes
//! across firms are either perfectly correlated or independent. Applicants
//! holding several offers accept one uniformly at random.
//!
//! What the crate computes:
//!
//! - equal-utility Nash equilibria of the interview game (threshold
//!   structure, per-firm interval assignments) and verification of the
//!   equilibrium conditions for arbitrary profiles,
//! - social welfare of equilibrium, naive (everyone interviews the top
//!   scores), and centrally optimized solutions, and the ratios between
//!   them,
//! - best-response dynamics with an exact potential, and one-turn dynamics
//!   where firms enter the market sequentially,
//! - a Monte Carlo simulator of the hiring process with counter-based
//!   per-applicant randomness,
//! - exact sample counts needed to compare two applicant pools from
//!   hire/reject outcomes.
//!
//! ```
//! use hiregame::{equilibrium, market_model::DecisionScheme, score_dist::ScoreDistribution, Instance};
//!
//! let inst = Instance::new(2, 0.2, ScoreDistribution::uniform(), DecisionScheme::Correlated).unwrap();
//! let ts = equilibrium::solve_equal_utility_thresholds(&inst).unwrap();
//! assert!((ts.level - 0.6).abs() < 1e-9);
//! ```

pub mod dynamics;
pub mod equilibrium;
pub mod estimation;
pub mod market_model;
pub(crate) mod numeric;
pub mod numfmt;
pub mod score_dist;

pub use market_model::{DecisionScheme, Instance, Strategy, StrategyProfile};
pub use score_dist::ScoreDistribution;

/// Errors for every operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input violated an operation's domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A value fell outside the representable range of a curve or inverse.
    #[error("out of range: {0}")]
    OutOfRange(String),
    /// A profile or solution failed consistency checks against its instance.
    #[error("validation failed: {0}")]
    Validation(String),
    /// A model precondition does not hold; the message names the bound.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Quadrature, bracketing, or another numeric step failed.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// An iterative procedure stopped without reaching its target; carries
    /// the best profile found so far when one exists.
    #[error("did not converge: {message}")]
    NonConvergence {
        message: String,
        best: Option<Box<market_model::StrategyProfile>>,
    },
    /// A bounded scan ran out of budget; reports the best value achieved.
    #[error("no k <= {k_max} suffices: best probability {best_prob} at k = {best_k}")]
    SearchExhausted {
        k_max: u32,
        best_k: u32,
        best_prob: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
