//! Exact posterior over the learner's hidden switch time and preference
//! weights.
//!
//! The learner starts naive and can only switch right after a tutoring step,
//! so the hidden trajectory is fully described by the tutoring step at which
//! the switch happened (or none). Together with a finite grid over `(w1, w2)`
//! this gives a finite hypothesis space that is updated exactly in log space.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learner::Action;
use crate::scalar::{log_logistic, log_sum_exp, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum BeliefError {
    #[error("invalid weight grid: {0}")]
    InvalidGrid(String),
    #[error("switch probability must lie in [0, 1]")]
    InvalidEta,
    #[error("history impossible under grid")]
    ImpossibleHistory,
    #[error("brute-force enumeration limited to {max} steps, got {got}")]
    HistoryTooLong { max: usize, got: usize },
}

/// Finite grid over `(w1, w2)` with a prior mass per point.
/// Point `(i, j)` has prior `prior[i * w2_values.len() + j]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightGrid<F> {
    w1_values: Vec<F>,
    w2_values: Vec<F>,
    prior: Vec<F>,
}

fn linspace<F: Scalar>(lo: f64, hi: f64, n: usize) -> Vec<F> {
    if n == 1 {
        return vec![F::lit(lo)];
    }
    (0..n)
        .map(|k| F::lit(lo + (hi - lo) * k as f64 / (n - 1) as f64))
        .collect()
}

impl<F: Scalar> WeightGrid<F> {
    /// `prior = None` means uniform.
    pub fn new(w1_values: Vec<F>, w2_values: Vec<F>, prior: Option<Vec<F>>) -> Result<Self, BeliefError> {
        let bad = |m: &str| Err(BeliefError::InvalidGrid(m.to_owned()));
        if w1_values.is_empty() || w2_values.is_empty() {
            return bad("grid axes must be nonempty");
        }
        if w1_values.windows(2).any(|w| !(w[0] < w[1])) || w2_values.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("grid axes must be strictly increasing");
        }
        if w2_values.iter().any(|&w| !(w < F::zero())) {
            return bad("w2 values must be negative");
        }
        if w1_values.iter().any(|w| !w.is_finite()) {
            return bad("w1 values must be finite");
        }
        let n = w1_values.len() * w2_values.len();
        let prior = match prior {
            Some(p) => {
                if p.len() != n || p.iter().any(|&v| !(v >= F::zero())) {
                    return bad("prior must be a nonnegative vector with one entry per grid point");
                }
                let total: F = p.iter().copied().sum();
                if (total - F::one()).abs() > F::lit(1e-12) {
                    return bad("prior must sum to 1");
                }
                p
            }
            None => vec![F::one() / F::from_usize_lossy(n); n],
        };
        Ok(Self { w1_values, w2_values, prior })
    }

    /// Evenly spaced, uniform prior.
    pub fn uniform(w1: (f64, f64, usize), w2: (f64, f64, usize)) -> Result<Self, BeliefError> {
        Self::new(linspace(w1.0, w1.1, w1.2), linspace(w2.0, w2.1, w2.2), None)
    }

    pub fn w1_values(&self) -> &[F] {
        &self.w1_values
    }

    pub fn w2_values(&self) -> &[F] {
        &self.w2_values
    }

    pub fn prior(&self, i: usize, j: usize) -> F {
        self.prior[i * self.w2_values.len() + j]
    }

    pub fn len(&self) -> usize {
        self.prior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prior.is_empty()
    }

    fn points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n2 = self.w2_values.len();
        (0..self.w1_values.len()).flat_map(move |i| (0..n2).map(move |j| (i, j)))
    }

    /// Prior mean of `w2`.
    pub fn prior_mean_w2(&self) -> F {
        self.points().map(|(i, j)| self.prior(i, j) * self.w2_values[j]).sum()
    }
}

/// Axis specification for [`WeightGrid`], as found in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub w1_min: f64,
    pub w1_max: f64,
    pub w1_points: usize,
    pub w2_min: f64,
    pub w2_max: f64,
    pub w2_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { w1_min: 0.0, w1_max: 8.0, w1_points: 17, w2_min: -8.0, w2_max: -0.5, w2_points: 17 }
    }
}

impl GridSpec {
    pub fn build<F: Scalar>(&self) -> Result<WeightGrid<F>, BeliefError> {
        WeightGrid::uniform(
            (self.w1_min, self.w1_max, self.w1_points),
            (self.w2_min, self.w2_max, self.w2_points),
        )
    }
}

/// One joint hypothesis about the hidden trajectory and the weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hypothesis<F> {
    /// Step index (0-based) of the tutoring action after which the learner
    /// became enlightened; `None` while still naive.
    pub switch_at: Option<usize>,
    pub w1_index: usize,
    pub w2_index: usize,
    pub log_weight: F,
}

impl<F> Hypothesis<F> {
    fn key(&self) -> (Option<usize>, usize, usize) {
        (self.switch_at, self.w1_index, self.w2_index)
    }
}

/// One observed interaction: the action, the learner's response, and the
/// feature pair computed against the model before the response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observation<F> {
    pub action: Action,
    pub response: bool,
    pub phi: (F, F),
}

/// Posterior expectations of the preference weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PosteriorWeights<F> {
    pub w1: F,
    /// Expectation conditional on the enlightened type.
    pub w2: F,
    /// True when no posterior mass is enlightened and `w2` is the prior mean.
    pub w2_from_prior: bool,
}

/// Posterior over `(switch time, grid point)`. Immutable: updates return a
/// new value.
#[derive(Debug, Clone)]
pub struct Belief<F> {
    grid: Arc<WeightGrid<F>>,
    eta: F,
    bias: F,
    hypotheses: Vec<Hypothesis<F>>,
    history_len: usize,
}

impl<F: Scalar> Belief<F> {
    /// Prior belief: every grid point with no switch yet. `bias` is the
    /// learner's known intercept `w0`.
    pub fn new(grid: Arc<WeightGrid<F>>, eta: F, bias: F) -> Result<Self, BeliefError> {
        if !(eta >= F::zero() && eta <= F::one()) {
            return Err(BeliefError::InvalidEta);
        }
        let hypotheses = grid
            .points()
            .map(|(i, j)| Hypothesis {
                switch_at: None,
                w1_index: i,
                w2_index: j,
                log_weight: grid.prior(i, j).ln(),
            })
            .collect();
        Ok(Self { grid, eta, bias, hypotheses, history_len: 0 })
    }

    pub fn grid(&self) -> &WeightGrid<F> {
        &self.grid
    }

    pub fn eta(&self) -> F {
        self.eta
    }

    pub fn bias(&self) -> F {
        self.bias
    }

    pub fn hypotheses(&self) -> &[Hypothesis<F>] {
        &self.hypotheses
    }

    pub fn history_len(&self) -> usize {
        self.history_len
    }

    /// Bayes update with one observation.
    pub fn update(&self, obs: &Observation<F>) -> Result<Self, BeliefError> {
        let mut next = self.clone();
        next.update_in_place(obs)?;
        Ok(next)
    }

    pub fn update_in_place(&mut self, obs: &Observation<F>) -> Result<(), BeliefError> {
        let t = self.history_len;
        match obs.action {
            Action::Tutor => {
                // The tutoring response carries no information about the type.
                let (ln_switch, ln_stay) = (self.eta.ln(), (F::one() - self.eta).ln());
                let mut branched = Vec::with_capacity(self.hypotheses.len() + self.grid.len());
                for h in &self.hypotheses {
                    if h.switch_at.is_none() {
                        branched.push(Hypothesis { log_weight: h.log_weight + ln_stay, ..*h });
                    } else {
                        branched.push(*h);
                    }
                }
                for h in &self.hypotheses {
                    if h.switch_at.is_none() {
                        branched.push(Hypothesis {
                            switch_at: Some(t),
                            log_weight: h.log_weight + ln_switch,
                            ..*h
                        });
                    }
                }
                self.hypotheses = branched;
            }
            Action::Suggest(_) => {
                let (w1s, w2s) = (&self.grid.w1_values, &self.grid.w2_values);
                for h in &mut self.hypotheses {
                    let mut score = w1s[h.w1_index] * obs.phi.0 + self.bias;
                    if h.switch_at.is_some() {
                        score += w2s[h.w2_index] * obs.phi.1;
                    }
                    h.log_weight += if obs.response { log_logistic(score) } else { log_logistic(-score) };
                }
            }
        }
        self.history_len += 1;
        self.normalize()
    }

    fn normalize(&mut self) -> Result<(), BeliefError> {
        let lws: Vec<F> = self.hypotheses.iter().map(|h| h.log_weight).collect();
        let z = log_sum_exp(&lws);
        if !z.is_finite() {
            return Err(BeliefError::ImpossibleHistory);
        }
        for h in &mut self.hypotheses {
            h.log_weight -= z;
        }
        Ok(())
    }

    /// Folds a whole history into the prior.
    pub fn from_history(
        grid: Arc<WeightGrid<F>>,
        eta: F,
        bias: F,
        history: &[Observation<F>],
    ) -> Result<Self, BeliefError> {
        let mut b = Self::new(grid, eta, bias)?;
        for obs in history {
            b.update_in_place(obs)?;
        }
        Ok(b)
    }

    /// Posterior probability that the learner is currently enlightened.
    pub fn enlightened_prob(&self) -> F {
        self.hypotheses
            .iter()
            .filter(|h| h.switch_at.is_some())
            .map(|h| h.log_weight.exp())
            .sum()
    }

    pub fn mean_weights(&self) -> PosteriorWeights<F> {
        let (w1s, w2s) = (&self.grid.w1_values, &self.grid.w2_values);
        let mut w1 = F::zero();
        let (mut enl_mass, mut w2) = (F::zero(), F::zero());
        for h in &self.hypotheses {
            let p = h.log_weight.exp();
            w1 += p * w1s[h.w1_index];
            if h.switch_at.is_some() {
                enl_mass += p;
                w2 += p * w2s[h.w2_index];
            }
        }
        if enl_mass > F::zero() {
            PosteriorWeights { w1, w2: w2 / enl_mass, w2_from_prior: false }
        } else {
            PosteriorWeights { w1, w2: self.grid.prior_mean_w2(), w2_from_prior: true }
        }
    }

    /// Normalized probability per hypothesis key.
    pub fn distribution(&self) -> BTreeMap<(Option<usize>, usize, usize), F> {
        self.hypotheses.iter().map(|h| (h.key(), h.log_weight.exp())).collect()
    }

    pub fn snapshot(&self) -> BeliefSnapshot {
        BeliefSnapshot {
            eta: self.eta.to_f64_lossy(),
            bias: self.bias.to_f64_lossy(),
            history_len: self.history_len,
            enlightened_prob: self.enlightened_prob().to_f64_lossy(),
            hypotheses: self
                .hypotheses
                .iter()
                .map(|h| SnapshotEntry {
                    switch_at: h.switch_at,
                    w1: self.grid.w1_values[h.w1_index].to_f64_lossy(),
                    w2: self.grid.w2_values[h.w2_index].to_f64_lossy(),
                    weight: h.log_weight.exp().to_f64_lossy(),
                })
                .collect(),
        }
    }
}

/// Free-function form of [`Belief::new`].
pub fn belief_init<F: Scalar>(grid: Arc<WeightGrid<F>>, eta: F, bias: F) -> Result<Belief<F>, BeliefError> {
    Belief::new(grid, eta, bias)
}

pub fn belief_update<F: Scalar>(b: &Belief<F>, obs: &Observation<F>) -> Result<Belief<F>, BeliefError> {
    b.update(obs)
}

pub fn posterior_enlightened_prob<F: Scalar>(b: &Belief<F>) -> F {
    b.enlightened_prob()
}

pub fn posterior_mean_weights<F: Scalar>(b: &Belief<F>) -> PosteriorWeights<F> {
    b.mean_weights()
}

/// Serializable record of a belief.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefSnapshot {
    pub eta: f64,
    pub bias: f64,
    pub history_len: usize,
    pub enlightened_prob: f64,
    pub hypotheses: Vec<SnapshotEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub switch_at: Option<usize>,
    pub w1: f64,
    pub w2: f64,
    pub weight: f64,
}

/// Total-variation distance between two beliefs over the same grid,
/// matching hypotheses by key.
pub fn total_variation<F: Scalar>(a: &Belief<F>, b: &Belief<F>) -> F {
    let (da, db) = (a.distribution(), b.distribution());
    let mut tv = F::zero();
    for (k, &p) in &da {
        tv += (p - db.get(k).copied().unwrap_or(F::zero())).abs();
    }
    for (k, &q) in &db {
        if !da.contains_key(k) {
            tv += q.abs();
        }
    }
    tv / F::lit(2.0)
}

pub const BRUTEFORCE_MAX_STEPS: usize = 12;

/// Test oracle: enumerates every naive/enlightened type trajectory of the
/// history and every grid point, multiplies the exact transition and response
/// probabilities in linear space, and groups the joint mass by switch time.
pub fn belief_bruteforce<F: Scalar>(
    history: &[Observation<F>],
    grid: Arc<WeightGrid<F>>,
    eta: F,
    bias: F,
) -> Result<Belief<F>, BeliefError> {
    let n = history.len();
    if n > BRUTEFORCE_MAX_STEPS {
        return Err(BeliefError::HistoryTooLong { max: BRUTEFORCE_MAX_STEPS, got: n });
    }
    let sigmoid = |x: F| F::one() / (F::one() + (-x).exp());
    let mut mass: BTreeMap<(Option<usize>, usize, usize), F> = BTreeMap::new();
    // Every switch candidate is a tutoring step; seed the keys so that
    // zero-probability hypotheses are still represented.
    let tutor_steps: Vec<usize> = (0..n).filter(|&t| history[t].action.is_tutor()).collect();
    for (i, j) in grid.points() {
        mass.insert((None, i, j), F::zero());
        for &t in &tutor_steps {
            mass.insert((Some(t), i, j), F::zero());
        }
    }

    // Bit t of `traj` is the type after step t (1 = enlightened).
    for traj in 0u32..(1u32 << n) {
        let kind_after = |t: usize| (traj >> t) & 1 == 1;
        let mut p_path = F::one();
        let mut switch_at = None;
        for t in 0..n {
            let before = t > 0 && kind_after(t - 1);
            let after = kind_after(t);
            let p = match (before, after, history[t].action.is_tutor()) {
                (true, true, _) => F::one(),
                (true, false, _) => F::zero(),
                (false, false, true) => F::one() - eta,
                (false, true, true) => eta,
                (false, false, false) => F::one(),
                (false, true, false) => F::zero(),
            };
            if !before && after {
                switch_at = Some(t);
            }
            p_path *= p;
        }
        if p_path == F::zero() {
            continue;
        }
        for (i, j) in grid.points() {
            let (w1, w2) = (grid.w1_values[i], grid.w2_values[j]);
            let mut lik = F::one();
            for (t, obs) in history.iter().enumerate() {
                if let Action::Suggest(_) = obs.action {
                    let enlightened_now = t > 0 && kind_after(t - 1);
                    let s = w1 * obs.phi.0 + if enlightened_now { w2 * obs.phi.1 } else { F::zero() } + bias;
                    let p = sigmoid(s);
                    lik *= if obs.response { p } else { F::one() - p };
                }
            }
            *mass.get_mut(&(switch_at, i, j)).expect("seeded key") += grid.prior(i, j) * p_path * lik;
        }
    }

    let total: F = mass.values().copied().sum();
    if !(total > F::zero()) {
        return Err(BeliefError::ImpossibleHistory);
    }
    let hypotheses = mass
        .into_iter()
        .map(|((switch_at, w1_index, w2_index), m)| Hypothesis {
            switch_at,
            w1_index,
            w2_index,
            log_weight: (m / total).ln(),
        })
        .collect();
    Ok(Belief { grid, eta, bias, hypotheses, history_len: n })
}
