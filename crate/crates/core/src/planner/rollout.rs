use rand::Rng;
use rayon::prelude::*;

use crate::belief::Belief;
use crate::datagen::{feature_map, selection_cost, Model};
use crate::learner::{acceptance_prob, Action, InnerState};
use crate::rng::{derive_seed, rng_from_seed, tags};
use crate::scalar::Scalar;

use super::cost::FutureCosts;
use super::teachers::base_policy;
use super::{Lookahead, TeachingEnv};

/// Fully observed surrogate used inside rollouts: posterior-mean weights for
/// both types and the sampled current type.
struct Surrogate<F> {
    naive: InnerState<F>,
    enlightened: InnerState<F>,
    alpha: F,
    future: FutureCosts<F>,
}

impl<F: Scalar> Surrogate<F> {
    fn from_belief(belief: &Belief<F>, env: &TeachingEnv<F>) -> Self {
        let w = belief.mean_weights();
        let naive = InnerState::naive(w.w1, env.bias);
        let enlightened = InnerState::enlightened(w.w1, w.w2, env.bias)
            .expect("grid w2 values are negative");
        let future = if env.config.u2 > F::zero() {
            FutureCosts::compute(&naive, &enlightened, &env.aux)
        } else {
            FutureCosts { naive: F::zero(), enlightened: F::zero() }
        };
        Self { naive, enlightened, alpha: belief.enlightened_prob(), future }
    }
}

/// Simulated cost-to-go of taking `first` at step `t` and then following
/// [`base_policy`]. Every step consumes exactly one uniform draw so that
/// candidates sharing a seed see common random numbers.
fn simulate<F: Scalar>(
    first: Action,
    theta: &Model,
    t: usize,
    env: &TeachingEnv<F>,
    sur: &Surrogate<F>,
    seed: u64,
) -> F {
    let cfg = &env.config;
    let ds = &*env.dataset;
    let mut rng = rng_from_seed(seed);
    let mut enlightened = F::lit(rng.random::<f64>()) < sur.alpha;
    let end = match cfg.lookahead {
        Lookahead::ToHorizon => cfg.horizon,
        Lookahead::Steps(k) => cfg.horizon.min(t + k),
    };
    let mut model = theta.clone();
    let mut cost = F::zero();
    for s in t..end.max(t + 1) {
        let action = if s == t { first } else { base_policy(&model, ds) };
        cost += cfg.stage_cost(action);
        let u = F::lit(rng.random::<f64>());
        match action {
            Action::Suggest(i) => {
                let state = if enlightened { &sur.enlightened } else { &sur.naive };
                let p = acceptance_prob(state, feature_map(i, &model, ds));
                model.set(i, u < p);
            }
            Action::Tutor => {
                if !enlightened && u < cfg.eta {
                    enlightened = true;
                }
            }
        }
    }
    cost + cfg.u1 * selection_cost(&model, ds) + cfg.u2 * sur.future.get(enlightened)
}

/// Mean simulated cost-to-go of every candidate action, covariates in index
/// order followed by tutoring.
pub fn rollout_scores<F: Scalar, R: Rng + ?Sized>(
    belief: &Belief<F>,
    theta: &Model,
    t: usize,
    env: &TeachingEnv<F>,
    rng: &mut R,
) -> Vec<(Action, F)> {
    let sur = Surrogate::from_belief(belief, env);
    let base_seed: u64 = rng.random();
    let samples = env.config.rollout_samples;
    let d = env.dim();
    (0..=d)
        .into_par_iter()
        .map(|k| {
            let action = if k == d { Action::Tutor } else { Action::Suggest(k) };
            let total: F = (0..samples)
                .map(|r| simulate(action, theta, t, env, &sur, derive_seed(base_seed, tags::ROLLOUT, r as u64)))
                .sum();
            (action, total / F::from_usize_lossy(samples))
        })
        .collect()
}

/// Rollout teacher: the candidate with the lowest mean simulated cost-to-go.
/// Ties go to the lowest covariate index, and tutoring only wins strictly.
pub fn rollout_action<F: Scalar, R: Rng + ?Sized>(
    belief: &Belief<F>,
    theta: &Model,
    t: usize,
    env: &TeachingEnv<F>,
    rng: &mut R,
) -> Action {
    let scores = rollout_scores(belief, theta, t, env, rng);
    let mut best = scores[0];
    for &(a, c) in &scores[1..] {
        if c < best.1 {
            best = (a, c);
        }
    }
    best.0
}
