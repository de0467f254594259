use std::io::Write;

use serde::Serialize;

use crate::datagen::{hamming, Model};
use crate::learner::{manipulation_level, Action, InnerState, LearnerKind, LearnerSim};
use crate::rng::{derive_seed, rng_from_seed, tags};
use crate::scalar::Scalar;

use super::cost::{terminal_cost, TerminalCost};
use super::session::TeachingSession;
use super::teachers::TeacherKind;
use super::{PlanError, TeachingEnv};

/// One interaction step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord<F> {
    /// 1-based step number.
    pub t: usize,
    pub action: Action,
    pub response: bool,
    /// Features shown with a suggestion (zero for tutoring).
    pub phi: (F, F),
    /// Learner model after the step.
    pub model: Model,
    /// Learner type after the step; unknown for human learners.
    pub true_state: Option<LearnerKind>,
    pub posterior_enlightened: F,
    pub stage_cost: F,
    /// Stage costs so far; the last step also carries the terminal cost.
    pub cum_cost: F,
}

pub const EPISODE_CSV_HEADER: &str = "t,action,response,posterior_enlightened,true_state,cum_cost,model";

impl<F: Scalar> StepRecord<F> {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.t,
            self.action,
            self.response as u8,
            self.posterior_enlightened,
            self.true_state.map_or("unknown".to_string(), |k| k.to_string()),
            self.cum_cost,
            self.model
        )
    }
}

/// Writes steps in the episode CSV format.
pub fn write_steps_csv<F: Scalar, W: Write>(steps: &[StepRecord<F>], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{EPISODE_CSV_HEADER}")?;
    for s in steps {
        writeln!(w, "{}", s.csv_row())?;
    }
    Ok(())
}

/// Complete record of one simulated teaching episode.
#[derive(Debug, Clone, Serialize)]
pub struct EpisodeLog<F> {
    pub teacher: TeacherKind,
    pub seed: u64,
    pub steps: Vec<StepRecord<F>>,
    pub final_model: Model,
    pub final_state: InnerState<F>,
    /// Step number (1-based) after which the learner was enlightened.
    pub switched_at: Option<usize>,
    pub terminal: TerminalCost<F>,
    pub stage_total: F,
    /// Stage costs plus the terminal cost.
    pub total_cost: F,
    /// Manipulation level of the final inner state toward the final model.
    pub manipulation_level: usize,
    /// Raw Hamming distance of the final model to the fixed target.
    pub hamming_to_optimal: usize,
    pub tutor_count: usize,
}

impl<F: Scalar> EpisodeLog<F> {
    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        write_steps_csv(&self.steps, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii csv")
    }

    /// Cumulative cost after step `t` (0 ≤ t ≤ horizon), flat after the
    /// episode ended.
    pub fn cum_cost_at(&self, t: usize) -> F {
        if t == 0 {
            return if self.steps.is_empty() { self.terminal.total } else { F::zero() };
        }
        let k = t.min(self.steps.len());
        self.steps[k - 1].cum_cost
    }

    pub fn posterior_at(&self, t: usize) -> F {
        if t == 0 || self.steps.is_empty() {
            return F::zero();
        }
        self.steps[t.min(self.steps.len()) - 1].posterior_enlightened
    }

    pub fn enlightened_at(&self, t: usize) -> bool {
        self.switched_at.is_some_and(|s| s <= t)
    }
}

/// Plays one episode between a teacher and a simulated learner. The teacher
/// and the learner draw from independent streams derived from `seed`.
pub fn run_episode<F: Scalar>(
    teacher: TeacherKind,
    mut learner: LearnerSim<F>,
    env: &TeachingEnv<F>,
    seed: u64,
) -> Result<EpisodeLog<F>, PlanError> {
    let ds = env.dataset.clone();
    let mut session = TeachingSession::new(env.clone(), teacher, derive_seed(seed, tags::TEACHER, 0))?;
    let mut learner_rng = rng_from_seed(derive_seed(seed, tags::LEARNER, 0));
    let mut switched_at = (learner.state.kind() == LearnerKind::Enlightened).then_some(0);
    while let Some(action) = session.pending() {
        let b = learner.step(action, &ds, &mut learner_rng);
        let kind = learner.state.kind();
        if switched_at.is_none() && kind == LearnerKind::Enlightened {
            switched_at = Some(session.step_index() + 1);
        }
        session.respond(b, Some(kind))?;
        debug_assert_eq!(session.model(), &learner.model);
    }
    let terminal = terminal_cost(&learner.model, &learner.state, &ds, &env.aux, &env.config);
    session.close(terminal);
    let stage_total = session.cumulative_stage_cost();
    let steps = session.history().to_vec();
    Ok(EpisodeLog {
        teacher,
        seed,
        tutor_count: steps.iter().filter(|s| s.action.is_tutor()).count(),
        steps,
        manipulation_level: manipulation_level(&learner.state, &ds, &learner.model),
        hamming_to_optimal: hamming(&learner.model, ds.optimal())?,
        final_model: learner.model,
        final_state: learner.state,
        switched_at,
        terminal,
        stage_total,
        total_cost: stage_total + terminal.total,
    })
}
