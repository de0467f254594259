//! Teaching an online meta-learner: sine-regression tasks, a small tanh
//! network with hand-written backpropagation, first-order MAML for the
//! target initialization, follow-the-meta-leader rounds and a one-step
//! lookahead task-selection teacher.

mod meta;
mod net;
mod task;
mod teach;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use meta::{ftml_round, inner_adapt, maml_train, meta_gradient, meta_loss, task_loss};
pub use net::{loss_and_grad, mse, NetParams, NetShape};
pub use task::{read_task_pool, sample_tasks, write_task_pool, SineTask, AMPLITUDE_RANGE, INPUT_RANGE, PHASE_RANGE};
pub use teach::{
    distance, lookahead_score, prepare_replicates, prepare_replicates_cached, target_cache_path, run_meta_experiment, run_meta_on, run_teaching,
    teacher_select_task, two_shot_loss, HeldoutTask, MetaCurveRow, MetaReplicate, MetaSummary,
    MetaTeacher, MetaTeacherSummary, META_CSV_HEADER,
};

#[derive(Debug, Error)]
pub enum MetaError {
    #[error("invalid meta-teaching configuration: {0}")]
    Config(String),
    #[error("meta-training diverged at step {step} (loss {loss})")]
    Diverged { step: usize, loss: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct MetaConfig<F> {
    pub hidden: Vec<usize>,
    pub inner_lr: F,
    pub inner_steps: usize,
    pub meta_lr: F,
    pub meta_steps_per_round: usize,
    /// Tasks sampled per meta-gradient step.
    pub task_batch: usize,
    pub k_shots: usize,
    pub n_tasks: usize,
    pub rounds: usize,
    /// Meta-training steps for the target initialization.
    pub maml_steps: usize,
    pub n_heldout: usize,
    pub eval_shots: usize,
    pub eval_points: usize,
    pub seed: u64,
    pub n_seeds: usize,
}

impl<F: Scalar> Default for MetaConfig<F> {
    fn default() -> Self {
        Self {
            hidden: vec![32, 32],
            inner_lr: F::lit(0.01),
            inner_steps: 1,
            meta_lr: F::lit(0.001),
            meta_steps_per_round: 50,
            task_batch: 10,
            k_shots: 10,
            n_tasks: 100,
            rounds: 50,
            maml_steps: 5000,
            n_heldout: 20,
            eval_shots: 2,
            eval_points: 100,
            seed: 0,
            n_seeds: 5,
        }
    }
}

impl<F: Scalar> MetaConfig<F> {
    pub fn shape(&self) -> NetShape {
        NetShape { hidden: self.hidden.clone() }
    }

    /// The configuration with the teaching-only fields reset; two configs
    /// with equal keys train the same target initialization.
    pub fn training_key(&self) -> Self {
        Self { rounds: 0, meta_steps_per_round: 0, n_heldout: 1, eval_shots: 1, eval_points: 1, n_seeds: 0, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), MetaError> {
        let bad = |m: &str| Err(MetaError::Config(m.to_owned()));
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
        if !(self.inner_lr >= F::zero() && self.meta_lr >= F::zero()) {
            return bad("learning rates must be non-negative");
        }
        if self.inner_steps == 0 {
            return bad("inner_steps must be at least 1");
        }
        if self.task_batch == 0 || self.k_shots == 0 || self.eval_shots == 0 || self.eval_points == 0 {
            return bad("task_batch, k_shots, eval_shots and eval_points must be positive");
        }
        if self.n_tasks == 0 || self.n_seeds == 0 || self.n_heldout == 0 {
            return bad("n_tasks, n_seeds and n_heldout must be positive");
        }
        if self.rounds > self.n_tasks {
            return bad("rounds cannot exceed n_tasks: tasks are not repeated");
        }
        Ok(())
    }
}
