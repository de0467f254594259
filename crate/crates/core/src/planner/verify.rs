use serde::{Deserialize, Serialize};

use crate::datagen::{generate_dataset, feature_map, Dataset, DatasetSpec, Model};
use crate::learner::{manipulation_level, unassisted_learn, Action, InnerState, LearnerParams};
use crate::scalar::Scalar;

use super::PlanError;

pub const MAX_VERIFY_DIM: usize = 4;
pub const MAX_VERIFY_HORIZON: usize = 6;

/// A small teaching game solved exhaustively. The learner answers each
/// suggestion by thresholding its acceptance score at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct TinyInstance<F> {
    pub dataset: DatasetSpec<F>,
    /// Seed of the structurally identical dataset used for the corollary.
    pub second_seed: u64,
    pub learner: LearnerParams<F>,
    pub horizon: usize,
    pub eta: F,
}

impl<F: Scalar> Default for TinyInstance<F> {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec {
                n_samples: 500,
                n_independent: 1,
                n_collinear: 2,
                seed: 7,
                ..DatasetSpec::default()
            },
            second_seed: 8,
            learner: LearnerParams { w1: F::lit(10.0), w2_enlightened: F::lit(-10.0), w0: F::lit(-2.0) },
            horizon: 4,
            eta: F::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The premise of the statement does not hold on this instance.
    UnsatisfiedPremise,
}

impl CheckStatus {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NoTutorCheck {
    pub status: CheckStatus,
    pub policies_enumerated: u64,
    /// Policies ending at the optimal model.
    pub optimal: u64,
    /// Policies ending at the optimal model without manipulation.
    pub optimal_non_manipulative: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TutorCheck {
    pub status: CheckStatus,
    pub policies_enumerated: u64,
    pub witnesses: u64,
    /// Cheapest action sequence reaching the target when switching is certain.
    pub witness: Option<Vec<String>>,
    /// Best achievable probability of ending optimal and non-manipulated.
    pub success_probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransferCheck {
    pub status: CheckStatus,
    pub second_optimal: String,
    pub second_unassisted: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropositionReport {
    pub dim: usize,
    pub horizon: usize,
    pub eta: f64,
    pub optimal_model: String,
    pub naive_unassisted: String,
    pub enlightened_unassisted: String,
    pub no_tutor: NoTutorCheck,
    pub tutor: TutorCheck,
    pub transfer: TransferCheck,
}

impl PropositionReport {
    /// True unless some check failed outright.
    pub fn passed(&self) -> bool {
        [self.no_tutor.status, self.tutor.status, self.transfer.status]
            .iter()
            .all(|s| *s != CheckStatus::Fail)
    }

    pub fn report_text(&self) -> String {
        let mut out = format!(
            "instance: d = {}, horizon = {}, eta = {}\noptimal model {}; unassisted naive {}, enlightened {}\n",
            self.dim, self.horizon, self.eta, self.optimal_model, self.naive_unassisted, self.enlightened_unassisted
        );
        out += &format!(
            "never-tutor policies: {:?} ({} enumerated, {} optimal, {} optimal and non-manipulative)\n",
            self.no_tutor.status, self.no_tutor.policies_enumerated, self.no_tutor.optimal, self.no_tutor.optimal_non_manipulative
        );
        out += &format!(
            "tutoring policies: {:?} ({} enumerated, {} witnesses, success probability {:.6})\n",
            self.tutor.status, self.tutor.policies_enumerated, self.tutor.witnesses, self.tutor.success_probability
        );
        if let Some(w) = &self.tutor.witness {
            out += &format!("  witness: {}\n", w.join(" "));
        }
        out += &format!(
            "transfer to second dataset: {:?} (optimal {}, unassisted {})\n",
            self.transfer.status,
            self.transfer.second_optimal,
            self.transfer.second_unassisted.as_deref().unwrap_or("-")
        );
        out
    }
}

struct Game<'a, F> {
    ds: &'a Dataset<F>,
    naive: InnerState<F>,
    enlightened: InnerState<F>,
    horizon: usize,
}

impl<F: Scalar> Game<'_, F> {
    fn state(&self, enlightened: bool) -> &InnerState<F> {
        if enlightened {
            &self.enlightened
        } else {
            &self.naive
        }
    }

    fn suggest(&self, model: &Model, i: usize, enlightened: bool) -> Model {
        let accept = self.state(enlightened).score(feature_map(i, model, self.ds)) >= F::zero();
        let mut next = model.clone();
        next.set(i, accept);
        next
    }

    fn success(&self, model: &Model, enlightened: bool) -> bool {
        model == self.ds.optimal() && manipulation_level(self.state(enlightened), self.ds, model) == 0
    }

    /// Every never-tutor sequence: (count, optimal, optimal and non-manipulative).
    fn enumerate_no_tutor(&self, model: &Model, t: usize, acc: &mut (u64, u64, u64)) {
        if t == self.horizon {
            acc.0 += 1;
            if model == self.ds.optimal() {
                acc.1 += 1;
                if manipulation_level(&self.naive, self.ds, model) == 0 {
                    acc.2 += 1;
                }
            }
            return;
        }
        for i in 0..self.ds.dim() {
            self.enumerate_no_tutor(&self.suggest(model, i, false), t + 1, acc);
        }
    }

    /// Every sequence with a certain switch on tutoring; tracks the cheapest
    /// successful one.
    #[allow(clippy::too_many_arguments)]
    fn enumerate_certain(
        &self,
        model: &Model,
        enlightened: bool,
        path: &mut Vec<Action>,
        tutors: usize,
        acc: &mut (u64, u64),
        best: &mut Option<(usize, Vec<Action>, bool)>,
    ) {
        if path.len() == self.horizon {
            acc.0 += 1;
            if self.success(model, enlightened) {
                acc.1 += 1;
                if best.as_ref().map_or(true, |(k, _, _)| tutors < *k) {
                    *best = Some((tutors, path.clone(), enlightened));
                }
            }
            return;
        }
        for i in 0..self.ds.dim() {
            path.push(Action::Suggest(i));
            self.enumerate_certain(&self.suggest(model, i, enlightened), enlightened, path, tutors, acc, best);
            path.pop();
        }
        path.push(Action::Tutor);
        self.enumerate_certain(model, true, path, tutors + 1, acc, best);
        path.pop();
    }

    /// Maximal success probability over closed-loop policies when tutoring
    /// switches with probability `eta`.
    fn best_success(&self, model: &Model, enlightened: bool, t: usize, eta: f64, nodes: &mut u64) -> f64 {
        *nodes += 1;
        if t == self.horizon {
            return if self.success(model, enlightened) { 1.0 } else { 0.0 };
        }
        let mut best = 0.0_f64;
        for i in 0..self.ds.dim() {
            best = best.max(self.best_success(&self.suggest(model, i, enlightened), enlightened, t + 1, eta, nodes));
        }
        let tutor = if enlightened {
            self.best_success(model, true, t + 1, eta, nodes)
        } else {
            let on = if eta > 0.0 { self.best_success(model, true, t + 1, eta, nodes) } else { 0.0 };
            let off = if eta < 1.0 { self.best_success(model, false, t + 1, eta, nodes) } else { 0.0 };
            eta * on + (1.0 - eta) * off
        };
        best.max(tutor)
    }
}

/// Exhaustively checks, on a tiny instance, that (a) no teacher that never
/// tutors ends at the optimal model without manipulating the learner, (b) with
/// tutoring such a teacher exists and succeeds with probability at least
/// `eta`, and (c) the learner it produces selects the optimal model unassisted
/// on a second dataset drawn from the same family.
pub fn verify_propositions<F: Scalar>(inst: &TinyInstance<F>) -> Result<PropositionReport, PlanError> {
    let d = inst.dataset.dim();
    if d > MAX_VERIFY_DIM || inst.horizon > MAX_VERIFY_HORIZON {
        return Err(PlanError::TooLarge(format!(
            "d = {d}, horizon = {} (limits {MAX_VERIFY_DIM}, {MAX_VERIFY_HORIZON})",
            inst.horizon
        )));
    }
    inst.learner.validate()?;
    let eta = inst.eta.to_f64_lossy();
    if !(0.0..=1.0).contains(&eta) {
        return Err(PlanError::Config(format!("eta must lie in [0, 1], got {eta}")));
    }
    let ds = generate_dataset(&inst.dataset)?;
    let game = Game {
        ds: &ds,
        naive: inst.learner.naive_state(),
        enlightened: inst.learner.enlightened_state(),
        horizon: inst.horizon,
    };
    let naive_unassisted = unassisted_learn(&game.naive, &ds);
    let enlightened_unassisted = unassisted_learn(&game.enlightened, &ds);
    let empty = Model::empty(d);

    let mut acc = (0, 0, 0);
    game.enumerate_no_tutor(&empty, 0, &mut acc);
    let no_tutor = NoTutorCheck {
        status: if naive_unassisted == *ds.optimal() {
            CheckStatus::UnsatisfiedPremise
        } else {
            CheckStatus::from_bool(acc.2 == 0)
        },
        policies_enumerated: acc.0,
        optimal: acc.1,
        optimal_non_manipulative: acc.2,
    };

    let mut final_state = None;
    let tutor = if eta == 0.0 {
        TutorCheck {
            status: CheckStatus::UnsatisfiedPremise,
            policies_enumerated: 0,
            witnesses: 0,
            witness: None,
            success_probability: 0.0,
        }
    } else if eta == 1.0 {
        let mut acc = (0, 0);
        let mut best = None;
        game.enumerate_certain(&empty, false, &mut Vec::new(), 0, &mut acc, &mut best);
        final_state = best.as_ref().map(|(_, _, e)| *e);
        TutorCheck {
            status: CheckStatus::from_bool(acc.1 > 0),
            policies_enumerated: acc.0,
            witnesses: acc.1,
            witness: best.map(|(_, p, _)| p.iter().map(ToString::to_string).collect()),
            success_probability: if acc.1 > 0 { 1.0 } else { 0.0 },
        }
    } else {
        let mut nodes = 0;
        let p = game.best_success(&empty, false, 0, eta, &mut nodes);
        // Success requires an unassisted learner that reproduces the optimum;
        // when the naive learner cannot, every successful branch ends enlightened.
        if p > 0.0 {
            final_state = Some(naive_unassisted != *ds.optimal());
        }
        TutorCheck {
            status: CheckStatus::from_bool(p >= eta - 1e-12),
            policies_enumerated: nodes,
            witnesses: 0,
            witness: None,
            success_probability: p,
        }
    };

    let second = generate_dataset(&inst.dataset.clone().with_seed(inst.second_seed))?;
    let second_unassisted = final_state.map(|e| unassisted_learn(game.state(e), &second));
    let transfer = TransferCheck {
        status: match &second_unassisted {
            None if eta == 0.0 => CheckStatus::UnsatisfiedPremise,
            None => CheckStatus::Fail,
            Some(m) => CheckStatus::from_bool(m == second.optimal()),
        },
        second_optimal: second.optimal().to_string(),
        second_unassisted: second_unassisted.map(|m| m.to_string()),
    };

    Ok(PropositionReport {
        dim: d,
        horizon: inst.horizon,
        eta,
        optimal_model: ds.optimal().to_string(),
        naive_unassisted: naive_unassisted.to_string(),
        enlightened_unassisted: enlightened_unassisted.to_string(),
        no_tutor,
        tutor,
        transfer,
    })
}
