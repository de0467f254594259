//! Simulated learner: acceptance policy, inner-state dynamics under tutoring,
//! model updates, the unassisted learning algorithm and the manipulation level.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datagen::{feature_map, hamming, Dataset, Model};
use crate::scalar::{logistic, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum LearnerError {
    #[error("enlightened learners need w2 < 0, got {0}")]
    NonNegativeW2(f64),
    #[error("weights must be finite")]
    NonFinite,
    #[error("switch probability must lie in [0, 1], got {0}")]
    BadEta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    /// Ignores collinearity: `w2 = 0`.
    Naive,
    /// Penalises correlation with already included covariates: `w2 < 0`.
    Enlightened,
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LearnerKind::Naive => "naive",
            LearnerKind::Enlightened => "enlightened",
        })
    }
}

/// Learner type plus preference weights. The preference function is
/// `f(φ) = w1·φ1 + w2·φ2 + w0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnerState<F> {
    kind: LearnerKind,
    w1: F,
    w2: F,
    w0: F,
}

impl<F: Scalar> InnerState<F> {
    pub fn naive(w1: F, w0: F) -> Self {
        Self { kind: LearnerKind::Naive, w1, w2: F::zero(), w0 }
    }

    pub fn enlightened(w1: F, w2: F, w0: F) -> Result<Self, LearnerError> {
        if !(w1.is_finite() && w2.is_finite() && w0.is_finite()) {
            return Err(LearnerError::NonFinite);
        }
        if !(w2 < F::zero()) {
            return Err(LearnerError::NonNegativeW2(w2.to_f64_lossy()));
        }
        Ok(Self { kind: LearnerKind::Enlightened, w1, w2, w0 })
    }

    /// Same `w1` and `w0`, switched to the enlightened type with weight `w2`.
    pub fn enlighten(self, w2: F) -> Result<Self, LearnerError> {
        Self::enlightened(self.w1, w2, self.w0)
    }

    pub fn kind(&self) -> LearnerKind {
        self.kind
    }

    pub fn w1(&self) -> F {
        self.w1
    }

    pub fn w2(&self) -> F {
        self.w2
    }

    pub fn w0(&self) -> F {
        self.w0
    }

    pub fn is_naive(&self) -> bool {
        self.kind == LearnerKind::Naive
    }

    /// Decision score `w1·φ1 + w2·φ2 + w0`.
    #[inline]
    pub fn score(&self, phi: (F, F)) -> F {
        self.w1 * phi.0 + self.w2 * phi.1 + self.w0
    }
}

/// Teacher action: show a covariate (0-based index) or tutor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Suggest(usize),
    Tutor,
}

impl Action {
    pub fn is_tutor(&self) -> bool {
        matches!(self, Action::Tutor)
    }
}

/// `x<k>` with 1-based `k`, or `tutor`.
impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Suggest(i) => write!(f, "x{}", i + 1),
            Action::Tutor => f.write_str("tutor"),
        }
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "tutor" {
            return Ok(Action::Tutor);
        }
        s.strip_prefix('x')
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .map(|n| Action::Suggest(n - 1))
            .ok_or_else(|| format!("unrecognised action `{s}`"))
    }
}

impl Serialize for Action {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Simulated learner weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct LearnerParams<F> {
    pub w1: F,
    /// Weight on `φ2` once enlightened; must be negative.
    pub w2_enlightened: F,
    pub w0: F,
}

impl<F: Scalar> Default for LearnerParams<F> {
    fn default() -> Self {
        Self { w1: F::lit(5.0), w2_enlightened: F::lit(-5.0), w0: F::lit(-0.5) }
    }
}

impl<F: Scalar> LearnerParams<F> {
    pub fn validate(&self) -> Result<(), LearnerError> {
        InnerState::enlightened(self.w1, self.w2_enlightened, self.w0).map(|_| ())
    }

    pub fn naive_state(&self) -> InnerState<F> {
        InnerState::naive(self.w1, self.w0)
    }

    pub fn enlightened_state(&self) -> InnerState<F> {
        InnerState::enlightened(self.w1, self.w2_enlightened, self.w0)
            .expect("validated learner parameters")
    }
}

/// Acceptance probability `σ(w1·φ1 + w2·φ2 + w0)`.
pub fn acceptance_prob<F: Scalar>(state: &InnerState<F>, phi: (F, F)) -> F {
    logistic(state.score(phi))
}

/// Inner-state transition. Only tutoring can switch a naive learner, with
/// probability `eta`; the enlightened type is absorbing. On a switch `w2`
/// becomes `enlightened_w2` and `w1`, `w0` are kept.
pub fn transition<F: Scalar, R: Rng + ?Sized>(
    state: InnerState<F>,
    action: Action,
    eta: F,
    enlightened_w2: F,
    rng: &mut R,
) -> InnerState<F> {
    match (state.kind, action) {
        (LearnerKind::Naive, Action::Tutor) => {
            let u = F::lit(rng.random::<f64>());
            if u < eta {
                state.enlighten(enlightened_w2).expect("enlightened w2 is negative")
            } else {
                state
            }
        }
        _ => state,
    }
}

/// The learner's own algorithm: start from the empty model, visit covariates
/// in descending `|corr to Y|` and include each one whose decision score
/// against the current partial model is non-negative.
pub fn unassisted_learn<F: Scalar>(state: &InnerState<F>, ds: &Dataset<F>) -> Model {
    let mut model = Model::empty(ds.dim());
    for &i in ds.ranking() {
        if state.score(feature_map(i, &model, ds)) >= F::zero() {
            model.set(i, true);
        }
    }
    model
}

/// Hamming distance between the unassisted model and `theta`.
pub fn manipulation_level<F: Scalar>(state: &InnerState<F>, ds: &Dataset<F>, theta: &Model) -> usize {
    hamming(&unassisted_learn(state, ds), theta).expect("model length matches dataset")
}

pub fn is_enlightened<F: Scalar>(state: &InnerState<F>, ds: &Dataset<F>, theta: &Model) -> bool {
    manipulation_level(state, ds, theta) == 0
}

/// A simulated learner: inner state plus current model.
#[derive(Debug, Clone)]
pub struct LearnerSim<F> {
    pub state: InnerState<F>,
    pub model: Model,
    pub params: LearnerParams<F>,
    pub eta: F,
}

impl<F: Scalar> LearnerSim<F> {
    /// A naive learner with an empty model over `d` covariates.
    pub fn fresh(params: LearnerParams<F>, eta: F, d: usize) -> Result<Self, LearnerError> {
        params.validate()?;
        if !(eta >= F::zero() && eta <= F::one()) {
            return Err(LearnerError::BadEta(eta.to_f64_lossy()));
        }
        Ok(Self { state: params.naive_state(), model: Model::empty(d), params, eta })
    }

    /// Draws the response `b_t` and applies the model update. Tutoring is
    /// accepted with probability 1/2 and never touches the model.
    pub fn respond<R: Rng + ?Sized>(&mut self, action: Action, ds: &Dataset<F>, rng: &mut R) -> bool {
        match action {
            Action::Suggest(i) => {
                let p = acceptance_prob(&self.state, feature_map(i, &self.model, ds));
                let b = F::lit(rng.random::<f64>()) < p;
                self.model.set(i, b);
                b
            }
            Action::Tutor => rng.random::<f64>() < 0.5,
        }
    }

    pub fn transition<R: Rng + ?Sized>(&mut self, action: Action, rng: &mut R) {
        self.state = transition(self.state, action, self.eta, self.params.w2_enlightened, rng);
    }

    /// One full interaction step: response then inner-state transition.
    pub fn step<R: Rng + ?Sized>(&mut self, action: Action, ds: &Dataset<F>, rng: &mut R) -> bool {
        let b = self.respond(action, ds, rng);
        self.transition(action, rng);
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_dataset, optimal_model, selection_cost, DatasetSpec};
    use crate::rng::rng_from_seed;

    fn default_ds(seed: u64) -> Dataset<f64> {
        generate_dataset(&DatasetSpec::default().with_seed(seed)).unwrap()
    }

    #[test]
    fn acceptance_prob_examples() {
        let s = InnerState::enlightened(2.0, -4.0, 0.0).unwrap();
        assert_eq!(acceptance_prob(&s, (2.0, 1.0)), 0.5);
        let s = InnerState::enlightened(2.0, -4.0, -0.5).unwrap();
        let expected = 1.0 / (1.0 + 2.5_f64.exp());
        assert!((acceptance_prob(&s, (0.8, 0.9)) - expected).abs() < 1e-15);
        let n = InnerState::naive(3.0, -1.0);
        assert_eq!(acceptance_prob(&n, (0.4, 0.0)), acceptance_prob(&n, (0.4, 0.99)));
    }

    #[test]
    fn constructor_invariants() {
        assert!(InnerState::enlightened(1.0, 0.0, 0.0).is_err());
        assert!(InnerState::enlightened(1.0, f64::NAN, 0.0).is_err());
        assert_eq!(InnerState::naive(1.0_f64, 0.0).w2(), 0.0);
    }

    #[test]
    fn saturated_suggestion_is_accepted() {
        let ds = default_ds(1);
        let params = LearnerParams { w1: 1e3, w2_enlightened: -1.0, w0: 1e3 };
        let mut l = LearnerSim::fresh(params, 0.5, 25).unwrap();
        let mut rng = rng_from_seed(0);
        assert!(l.respond(Action::Suggest(4), &ds, &mut rng));
        assert!(l.model.includes(4));
    }

    #[test]
    fn tutoring_leaves_model_untouched() {
        let ds = default_ds(1);
        let mut l = LearnerSim::fresh(LearnerParams::default(), 1.0, 25).unwrap();
        l.model.set(3, true);
        let before = l.model.clone();
        let mut rng = rng_from_seed(5);
        for _ in 0..20 {
            l.step(Action::Tutor, &ds, &mut rng);
            assert_eq!(l.model, before);
        }
        assert_eq!(l.state.kind(), LearnerKind::Enlightened);
    }

    #[test]
    fn empirical_acceptance_matches_probability() {
        let ds = default_ds(2);
        let l0 = LearnerSim::fresh(LearnerParams::default(), 0.5, 25).unwrap();
        let i = ds.ranking()[12];
        let p = acceptance_prob(&l0.state, feature_map(i, &l0.model, &ds));
        let mut rng = rng_from_seed(99);
        let n = 100_000;
        let mut hits = 0;
        for _ in 0..n {
            let mut l = l0.clone();
            hits += l.respond(Action::Suggest(i), &ds, &mut rng) as usize;
        }
        let freq = hits as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "freq {freq} p {p}");
    }

    #[test]
    fn transition_rules() {
        let mut rng = rng_from_seed(1);
        let e = InnerState::enlightened(5.0, -5.0, -0.5).unwrap();
        for a in [Action::Tutor, Action::Suggest(0)] {
            assert_eq!(transition(e, a, 0.0, -3.0, &mut rng), e);
        }
        let n = InnerState::naive(5.0, -0.5);
        for _ in 0..1000 {
            assert_eq!(transition(n, Action::Suggest(2), 1.0, -5.0, &mut rng), n);
        }
        let trials = 100_000;
        let switched = (0..trials)
            .filter(|_| transition(n, Action::Tutor, 0.5, -5.0, &mut rng).kind() == LearnerKind::Enlightened)
            .count();
        assert!((switched as f64 / trials as f64 - 0.5).abs() < 0.01);
        let s = transition(n, Action::Tutor, 1.0, -5.0, &mut rng);
        assert_eq!((s.w1(), s.w2(), s.w0()), (5.0, -5.0, -0.5));
    }

    #[test]
    fn unassisted_learning_on_clean_data() {
        // Large sample keeps spurious correlations small.
        let spec = DatasetSpec { n_samples: 5000, ..DatasetSpec::default() }.with_seed(3);
        let ds = generate_dataset(&spec).unwrap();
        let enl = InnerState::enlightened(5.0, -8.0, -0.5).unwrap();
        let m = unassisted_learn(&enl, &ds);
        assert_eq!(selection_cost(&m, &ds), 0.0);
        assert_eq!(m, optimal_model(&ds));

        let naive = InnerState::naive(20.0, -1.0);
        let m = unassisted_learn(&naive, &ds);
        assert_eq!(m, Model::full(25));
        assert_eq!(selection_cost(&m, &ds), 14.0);
        assert_eq!(manipulation_level(&naive, &ds, &optimal_model(&ds)), 14);
        assert!(!is_enlightened(&naive, &ds, &optimal_model(&ds)));

        let silent = InnerState::naive(0.0, -0.1);
        assert_eq!(unassisted_learn(&silent, &ds), Model::empty(25));
    }

    #[test]
    fn manipulation_is_zero_on_own_model() {
        let ds = default_ds(4);
        for s in [InnerState::naive(5.0, -0.5), InnerState::enlightened(5.0, -5.0, -0.5).unwrap()] {
            let own = unassisted_learn(&s, &ds);
            assert_eq!(manipulation_level(&s, &ds, &own), 0);
            assert!(is_enlightened(&s, &ds, &own));
            let mut flipped = own.clone();
            flipped.set(0, !flipped.includes(0));
            assert_eq!(manipulation_level(&s, &ds, &flipped), 1);
            assert!(!is_enlightened(&s, &ds, &flipped));
        }
    }

    #[test]
    fn action_text_round_trip() {
        for a in [Action::Tutor, Action::Suggest(0), Action::Suggest(24)] {
            assert_eq!(a.to_string().parse::<Action>().unwrap(), a);
        }
        assert!("x0".parse::<Action>().is_err());
        assert!("y3".parse::<Action>().is_err());
    }
}
