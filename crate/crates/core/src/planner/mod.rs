//! The teacher: terminal costs, rollout action selection, baseline teachers,
//! the episode engine, experiment drivers and exhaustive verification of the
//! optimality/manipulation results on tiny instances.

mod cost;
mod episode;
mod experiment;
mod rollout;
mod session;
mod teachers;
mod verify;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefError, WeightGrid};
use crate::datagen::{DataError, Dataset};
use crate::learner::LearnerError;
use crate::scalar::Scalar;

pub use cost::{terminal_cost, FutureCosts, TerminalCost};
pub use episode::{run_episode, EpisodeLog, StepRecord, EPISODE_CSV_HEADER};
pub use experiment::{
    run_experiment, CurvePoint, ExperimentId, ExperimentSetup, ExperimentSummary, Stat,
    TeacherSummary, UnassistedRow, UnassistedTable, CURVES_CSV_HEADER,
};
pub use rollout::{rollout_action, rollout_scores};
pub use session::{replay_session, SessionStatus, TeachingSession};
pub use teachers::{base_policy, manipulative_teacher, random_teacher, TeacherKind};
pub use verify::{
    verify_propositions, CheckStatus, NoTutorCheck, PropositionReport, TinyInstance, TransferCheck,
    TutorCheck, MAX_VERIFY_DIM, MAX_VERIFY_HORIZON,
};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid teacher configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error("session: {0}")]
    Session(String),
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
}

/// How far each rollout continuation is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookahead {
    ToHorizon,
    Steps(usize),
}

impl fmt::Display for Lookahead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lookahead::ToHorizon => f.write_str("to-horizon"),
            Lookahead::Steps(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LookaheadRepr {
    Steps(usize),
    Named(String),
}

impl Serialize for Lookahead {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Lookahead::ToHorizon => LookaheadRepr::Named("to-horizon".into()),
            Lookahead::Steps(k) => LookaheadRepr::Steps(*k),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Lookahead {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match LookaheadRepr::deserialize(d)? {
            LookaheadRepr::Steps(0) => Err(serde::de::Error::custom("lookahead must be positive")),
            LookaheadRepr::Steps(k) => Ok(Lookahead::Steps(k)),
            LookaheadRepr::Named(s) if s == "to-horizon" => Ok(Lookahead::ToHorizon),
            LookaheadRepr::Named(s) => Err(serde::de::Error::custom(format!(
                "lookahead must be a positive integer or \"to-horizon\", got \"{s}\""
            ))),
        }
    }
}

/// Scalar teacher parameters; the datasets live in [`TeachingEnv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct TeacherConfig<F> {
    /// Weight of the current-dataset cost in the terminal cost.
    pub u1: F,
    /// Weight of the estimated unassisted cost on the auxiliary datasets.
    pub u2: F,
    pub stage_cost_suggest: F,
    pub stage_cost_tutor: F,
    pub horizon: usize,
    pub rollout_samples: usize,
    pub lookahead: Lookahead,
    /// Probability that a tutoring step switches a naive learner.
    pub eta: F,
    pub n_aux: usize,
    pub n_eval: usize,
}

impl<F: Scalar> Default for TeacherConfig<F> {
    fn default() -> Self {
        Self {
            u1: F::one(),
            u2: F::zero(),
            stage_cost_suggest: F::one(),
            stage_cost_tutor: F::lit(5.0),
            horizon: 30,
            rollout_samples: 32,
            lookahead: Lookahead::ToHorizon,
            eta: F::lit(0.5),
            n_aux: 10,
            n_eval: 10,
        }
    }
}

impl<F: Scalar> TeacherConfig<F> {
    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: &str| Err(PlanError::Config(m.to_owned()));
        if !(self.u1 >= F::zero() && self.u2 >= F::zero()) {
            return bad("u1 and u2 must be non-negative");
        }
        if !(self.u1 + self.u2 > F::zero()) {
            return bad("u1 + u2 must be positive");
        }
        if !(self.stage_cost_suggest > F::zero()) {
            return bad("stage_cost_suggest must be positive");
        }
        if !(self.stage_cost_tutor > self.stage_cost_suggest) {
            return bad("stage_cost_tutor must exceed stage_cost_suggest");
        }
        if self.rollout_samples == 0 {
            return bad("rollout_samples must be positive");
        }
        if !(self.eta >= F::zero() && self.eta <= F::one()) {
            return bad("eta must lie in [0, 1]");
        }
        if self.u2 > F::zero() && self.n_aux == 0 {
            return bad("n_aux must be positive when u2 > 0");
        }
        Ok(())
    }

    pub fn stage_cost(&self, action: crate::learner::Action) -> F {
        if action.is_tutor() {
            self.stage_cost_tutor
        } else {
            self.stage_cost_suggest
        }
    }
}

/// Everything the teacher knows: the teaching dataset (hence the target
/// model), the auxiliary datasets used to estimate unassisted performance,
/// the parametric learner model (bias and switch probability) and the weight
/// grid of its belief.
#[derive(Debug, Clone)]
pub struct TeachingEnv<F> {
    pub dataset: Arc<Dataset<F>>,
    pub aux: Arc<Vec<Dataset<F>>>,
    pub config: TeacherConfig<F>,
    pub grid: Arc<WeightGrid<F>>,
    /// Learner intercept `w0`, known to the teacher.
    pub bias: F,
}

impl<F: Scalar> TeachingEnv<F> {
    pub fn new(
        dataset: Arc<Dataset<F>>,
        aux: Arc<Vec<Dataset<F>>>,
        config: TeacherConfig<F>,
        grid: Arc<WeightGrid<F>>,
        bias: F,
    ) -> Result<Self, PlanError> {
        config.validate()?;
        if config.u2 > F::zero() && aux.is_empty() {
            return Err(PlanError::Config("auxiliary datasets required when u2 > 0".into()));
        }
        Ok(Self { dataset, aux, config, grid, bias })
    }

    pub fn dim(&self) -> usize {
        self.dataset.dim()
    }
}
