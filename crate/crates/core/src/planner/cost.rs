use crate::datagen::{selection_cost, Dataset, Model};
use crate::learner::{unassisted_learn, InnerState};
use crate::scalar::Scalar;

use super::TeacherConfig;

/// Terminal cost split into its two terms.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TerminalCost<F> {
    /// Selection cost of the final model on the teaching dataset.
    pub current: F,
    /// Summed selection cost of the learner's unassisted models on the
    /// auxiliary datasets.
    pub future: F,
    /// `u1·current + u2·future`.
    pub total: F,
}

/// `u1·selection_cost(θ_T, D) + u2·Σ_{D'} selection_cost(Alg_{z_T}(D'), D')`.
pub fn terminal_cost<F: Scalar>(
    theta: &Model,
    state: &InnerState<F>,
    ds: &Dataset<F>,
    aux: &[Dataset<F>],
    cfg: &TeacherConfig<F>,
) -> TerminalCost<F> {
    let current = selection_cost(theta, ds);
    let future = future_cost(state, aux);
    TerminalCost { current, future, total: cfg.u1 * current + cfg.u2 * future }
}

pub(crate) fn future_cost<F: Scalar>(state: &InnerState<F>, aux: &[Dataset<F>]) -> F {
    aux.iter().map(|d| selection_cost(&unassisted_learn(state, d), d)).sum()
}

/// Unassisted auxiliary costs of the two learner types at fixed weights,
/// computed once per rollout decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FutureCosts<F> {
    pub naive: F,
    pub enlightened: F,
}

impl<F: Scalar> FutureCosts<F> {
    pub fn compute(naive: &InnerState<F>, enlightened: &InnerState<F>, aux: &[Dataset<F>]) -> Self {
        Self { naive: future_cost(naive, aux), enlightened: future_cost(enlightened, aux) }
    }

    pub fn get(&self, enlightened: bool) -> F {
        if enlightened {
            self.enlightened
        } else {
            self.naive
        }
    }
}
