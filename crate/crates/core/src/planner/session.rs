use crate::belief::{Belief, Observation};
use crate::datagen::{feature_map, Model};
use crate::learner::{Action, InnerState, LearnerKind};
use crate::rng::{rng_from_seed, SimRng};
use crate::scalar::Scalar;

use super::cost::{terminal_cost, TerminalCost};
use super::episode::StepRecord;
use super::rollout::rollout_action;
use super::teachers::{manipulative_teacher, random_teacher, TeacherKind};
use super::{PlanError, TeachingEnv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Active,
    Finished,
}

/// Step-by-step teaching interaction driven by externally supplied learner
/// responses. The simulated episode engine, the session service and offline
/// replay all go through this type, so identical seeds and responses give
/// identical actions and beliefs.
#[derive(Debug, Clone)]
pub struct TeachingSession<F> {
    env: TeachingEnv<F>,
    teacher: TeacherKind,
    seed: u64,
    rng: SimRng,
    belief: Belief<F>,
    model: Model,
    t: usize,
    pending: Option<Action>,
    history: Vec<StepRecord<F>>,
    cum_stage: F,
    terminal: Option<TerminalCost<F>>,
}

impl<F: Scalar> TeachingSession<F> {
    pub fn new(env: TeachingEnv<F>, teacher: TeacherKind, seed: u64) -> Result<Self, PlanError> {
        env.config.validate()?;
        let belief = Belief::new(env.grid.clone(), env.config.eta, env.bias)?;
        let model = Model::empty(env.dim());
        let mut s = Self {
            env,
            teacher,
            seed,
            rng: rng_from_seed(seed),
            belief,
            model,
            t: 0,
            pending: None,
            history: Vec::new(),
            cum_stage: F::zero(),
            terminal: None,
        };
        s.pending = s.decide();
        Ok(s)
    }

    fn decide(&mut self) -> Option<Action> {
        if self.t >= self.env.config.horizon {
            return None;
        }
        let ds = &*self.env.dataset;
        match self.teacher {
            TeacherKind::Rollout => Some(rollout_action(&self.belief, &self.model, self.t, &self.env, &mut self.rng)),
            TeacherKind::Manipulative => manipulative_teacher(&self.model, ds, self.t),
            TeacherKind::Random => Some(random_teacher(ds, &mut self.rng)),
        }
    }

    pub fn env(&self) -> &TeachingEnv<F> {
        &self.env
    }

    pub fn teacher(&self) -> TeacherKind {
        self.teacher
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn belief(&self) -> &Belief<F> {
        &self.belief
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    /// Number of completed steps.
    pub fn step_index(&self) -> usize {
        self.t
    }

    pub fn pending(&self) -> Option<Action> {
        self.pending
    }

    /// Feature pair the learner sees for the outstanding suggestion.
    pub fn pending_features(&self) -> Option<(F, F)> {
        match self.pending? {
            Action::Suggest(i) => Some(feature_map(i, &self.model, &self.env.dataset)),
            Action::Tutor => None,
        }
    }

    pub fn history(&self) -> &[StepRecord<F>] {
        &self.history
    }

    pub fn cumulative_stage_cost(&self) -> F {
        self.cum_stage
    }

    pub fn status(&self) -> SessionStatus {
        if self.terminal.is_some() || self.pending.is_none() {
            SessionStatus::Finished
        } else {
            SessionStatus::Active
        }
    }

    pub fn terminal(&self) -> Option<&TerminalCost<F>> {
        self.terminal.as_ref()
    }

    /// Applies the learner's response to the outstanding action, updates the
    /// belief and returns the next action (`None` once the episode is over).
    /// `true_state` is the learner's type after the step when known.
    pub fn respond(&mut self, response: bool, true_state: Option<LearnerKind>) -> Result<Option<Action>, PlanError> {
        if self.terminal.is_some() {
            return Err(PlanError::Session("session already closed".into()));
        }
        let action = self
            .pending
            .ok_or_else(|| PlanError::Session("no outstanding action".into()))?;
        let phi = match action {
            Action::Suggest(i) => feature_map(i, &self.model, &self.env.dataset),
            Action::Tutor => (F::zero(), F::zero()),
        };
        self.belief.update_in_place(&Observation { action, response, phi })?;
        if let Action::Suggest(i) = action {
            self.model.set(i, response);
        }
        let stage_cost = self.env.config.stage_cost(action);
        self.cum_stage += stage_cost;
        self.t += 1;
        self.history.push(StepRecord {
            t: self.t,
            action,
            response,
            phi,
            model: self.model.clone(),
            true_state,
            posterior_enlightened: self.belief.enlightened_prob(),
            stage_cost,
            cum_cost: self.cum_stage,
        });
        self.pending = self.decide();
        Ok(self.pending)
    }

    /// Expected terminal cost when the learner's inner state is unobserved:
    /// the posterior-mean weights for each type, mixed by the posterior type
    /// probability.
    pub fn estimated_terminal(&self) -> TerminalCost<F> {
        let w = self.belief.mean_weights();
        let alpha = self.belief.enlightened_prob();
        let naive = InnerState::naive(w.w1, self.env.bias);
        let enl = InnerState::enlightened(w.w1, w.w2, self.env.bias).expect("grid w2 values are negative");
        let (ds, aux, cfg) = (&*self.env.dataset, &self.env.aux[..], &self.env.config);
        let a = terminal_cost(&self.model, &naive, ds, aux, cfg);
        let b = terminal_cost(&self.model, &enl, ds, aux, cfg);
        let mix = |x: F, y: F| (F::one() - alpha) * x + alpha * y;
        TerminalCost { current: a.current, future: mix(a.future, b.future), total: mix(a.total, b.total) }
    }

    /// Ends the session with the given terminal cost, which is added to the
    /// cumulative cost of the last step. Idempotent.
    pub fn close(&mut self, terminal: TerminalCost<F>) -> TerminalCost<F> {
        if let Some(t) = self.terminal {
            return t;
        }
        self.pending = None;
        if let Some(last) = self.history.last_mut() {
            last.cum_cost += terminal.total;
        }
        self.terminal = Some(terminal);
        terminal
    }
}

/// Replays recorded responses through a fresh session.
pub fn replay_session<F: Scalar>(
    env: TeachingEnv<F>,
    teacher: TeacherKind,
    seed: u64,
    responses: &[bool],
) -> Result<TeachingSession<F>, PlanError> {
    let mut s = TeachingSession::new(env, teacher, seed)?;
    for &b in responses {
        s.respond(b, None)?;
    }
    Ok(s)
}
