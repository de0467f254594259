use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::{Dataset, Model};
use crate::learner::Action;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TeacherKind {
    Rollout,
    Manipulative,
    Random,
}

impl TeacherKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TeacherKind::Rollout => "rollout",
            TeacherKind::Manipulative => "manipulative",
            TeacherKind::Random => "random",
        }
    }
}

impl fmt::Display for TeacherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TeacherKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rollout" => Ok(TeacherKind::Rollout),
            "manipulative" => Ok(TeacherKind::Manipulative),
            "random" => Ok(TeacherKind::Random),
            _ => Err(format!("unknown teacher `{s}`")),
        }
    }
}

/// Base heuristic followed by rollout continuations. Never tutors.
///
/// In order of priority: the highest-ranked target covariate that is not yet
/// included; the highest-ranked included covariate outside the target (a
/// learner that now rejects it drops it); otherwise a re-suggestion of the
/// target's collinear representative, whose removal costs nothing.
pub fn base_policy<F: Scalar>(theta: &Model, ds: &Dataset<F>) -> Action {
    let target = ds.optimal();
    let ranking = ds.ranking();
    if let Some(&i) = ranking.iter().find(|&&i| target.includes(i) && !theta.includes(i)) {
        return Action::Suggest(i);
    }
    if let Some(&i) = ranking.iter().find(|&&i| !target.includes(i) && theta.includes(i)) {
        return Action::Suggest(i);
    }
    let representative = ds
        .collinear_idx()
        .iter()
        .copied()
        .find(|&i| target.includes(i))
        .unwrap_or(ranking[0]);
    Action::Suggest(representative)
}

/// Target covariates in presentation order: independents by descending
/// `|corr to Y|`, then the best collinear covariate.
fn manipulation_script<F: Scalar>(ds: &Dataset<F>) -> Vec<usize> {
    let target = ds.optimal();
    let mut script: Vec<usize> = ds
        .ranking()
        .iter()
        .copied()
        .filter(|&i| target.includes(i) && !ds.is_collinear(i))
        .collect();
    script.extend(ds.collinear_idx().iter().copied().filter(|&i| target.includes(i)));
    script
}

/// Never-tutoring teacher that steers the learner to the target by never
/// showing a second collinear covariate.
///
/// Steps `0..k` walk the script of the `k` target covariates. Afterwards it
/// re-shows target covariates the learner rejected, in script order, and
/// returns `None` (stops) once the learner's model contains the whole target.
pub fn manipulative_teacher<F: Scalar>(theta: &Model, ds: &Dataset<F>, step: usize) -> Option<Action> {
    let script = manipulation_script(ds);
    if let Some(&i) = script.get(step) {
        return Some(Action::Suggest(i));
    }
    script.into_iter().find(|&i| !theta.includes(i)).map(Action::Suggest)
}

/// Uniform over all covariates and tutoring.
pub fn random_teacher<F: Scalar, R: Rng + ?Sized>(ds: &Dataset<F>, rng: &mut R) -> Action {
    let k = rng.random_range(0..=ds.dim());
    if k == ds.dim() {
        Action::Tutor
    } else {
        Action::Suggest(k)
    }
}
