use std::path::Path;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use enlighten_core::config::RunConfig;
use enlighten_core::datagen::{generate_dataset, DatasetSpec};
use enlighten_core::learner::{manipulation_level, Action, InnerState};
use enlighten_core::planner::{
    PlanError, StepRecord, TeacherConfig, TeacherKind, TeachingEnv, TeachingSession, EPISODE_CSV_HEADER,
};
use enlighten_core::rng::{derive_seed, tags};

use crate::error::ApiError;
use crate::tutor::{tutor_payload, TutorPayload};

pub const API_VERSION: u32 = 1;

/// Body of `POST /v1/sessions`. Omitted fields fall back to the server's
/// run configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CreateSession {
    pub seed: Option<u64>,
    pub teacher: Option<TeacherKind>,
    pub dataset: Option<DatasetSpec<f64>>,
    pub config: Option<TeacherConfig<f64>>,
}

/// Fully resolved session parameters; enough to rebuild the session offline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub seed: u64,
    pub teacher: TeacherKind,
    pub dataset: DatasetSpec<f64>,
    pub config: TeacherConfig<f64>,
    pub grid: enlighten_core::belief::GridSpec,
    pub bias: f64,
}

impl SessionSpec {
    pub fn resolve(req: &CreateSession, defaults: &RunConfig) -> Self {
        Self {
            seed: req.seed.unwrap_or(defaults.seed),
            teacher: req.teacher.unwrap_or(TeacherKind::Rollout),
            dataset: req.dataset.clone().unwrap_or_else(|| defaults.dataset.clone()),
            config: req.config.clone().unwrap_or_else(|| defaults.teacher.clone()),
            grid: defaults.grid.clone(),
            bias: defaults.learner.w0,
        }
    }

    /// Teaching environment of the session; the teaching dataset and the
    /// auxiliary datasets are derived from the session seed.
    pub fn build_env(&self) -> Result<TeachingEnv<f64>, PlanError> {
        self.config.validate()?;
        let spec = |tag, k| self.dataset.clone().with_seed(derive_seed(self.seed, tag, k));
        let ds = generate_dataset(&spec(tags::TEACHING_DATA, 0))?;
        let aux = if self.config.u2 > 0.0 {
            (0..self.config.n_aux as u64)
                .map(|k| generate_dataset(&spec(tags::AUX_DATA, k)))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            Vec::new()
        };
        let grid = self.grid.build::<f64>()?;
        TeachingEnv::new(Arc::new(ds), Arc::new(aux), self.config.clone(), Arc::new(grid), self.bias)
    }

    pub fn session_seed(&self) -> u64 {
        derive_seed(self.seed, tags::TEACHER, 0)
    }

    pub fn start(&self) -> Result<TeachingSession<f64>, PlanError> {
        TeachingSession::new(self.build_env()?, self.teacher, self.session_seed())
    }
}

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

/// One live session held by the registry.
pub struct Entry {
    pub id: String,
    pub spec: SessionSpec,
    pub session: TeachingSession<f64>,
    pub responses: Vec<bool>,
    pub created_at: u64,
    pub updated_at: u64,
    pub persisted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuggestionView {
    /// Step number to echo back with the response.
    pub step: usize,
    pub action: Action,
    pub kind: &'static str,
    /// 1-based covariate number for suggestions.
    pub variable: Option<usize>,
    pub corr_to_output: Option<f64>,
    pub phi1: Option<f64>,
    pub phi2: Option<f64>,
    pub tutor: Option<TutorPayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeliefView {
    pub enlightened_prob: f64,
    pub w1_mean: f64,
    pub w2_mean: f64,
    pub w2_from_prior: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableView {
    pub name: String,
    pub corr_to_output: f64,
    pub included: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepView {
    pub t: usize,
    pub action: Action,
    pub response: bool,
    pub phi1: f64,
    pub phi2: f64,
    pub posterior_enlightened: f64,
    pub stage_cost: f64,
    pub cum_cost: f64,
    pub model: String,
}

impl From<&StepRecord<f64>> for StepView {
    fn from(r: &StepRecord<f64>) -> Self {
        Self {
            t: r.t,
            action: r.action,
            response: r.response,
            phi1: r.phi.0,
            phi2: r.phi.1,
            posterior_enlightened: r.posterior_enlightened,
            stage_cost: r.stage_cost,
            cum_cost: r.cum_cost,
            model: r.model.to_string(),
        }
    }
}

/// Terminal cost components. The learner's inner state is never observed,
/// so the future term and the manipulation level are posterior estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TerminalView {
    pub current: f64,
    pub future_estimate: f64,
    pub total: f64,
    pub u1: f64,
    pub u2: f64,
    pub manipulation_estimate: f64,
    pub selection_errors: usize,
    pub optimal_model: String,
    pub estimated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub api_version: u32,
    pub id: String,
    pub status: enlighten_core::planner::SessionStatus,
    pub teacher: TeacherKind,
    pub seed: u64,
    pub step: usize,
    pub horizon: usize,
    pub model: String,
    pub suggestion: Option<SuggestionView>,
    pub belief: BeliefView,
    pub stage_cost_total: f64,
    pub cumulative_cost: f64,
    pub variables: Vec<VariableView>,
    pub history: Vec<StepView>,
    pub terminal: Option<TerminalView>,
    pub created_at: u64,
    pub updated_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndReport {
    pub session: SessionView,
    pub terminal: TerminalView,
    pub csv: String,
}

/// Expected manipulation level under the posterior: each type at its
/// posterior-mean weights, mixed by the type probability.
pub fn manipulation_estimate(s: &TeachingSession<f64>) -> f64 {
    let w = s.belief().mean_weights();
    let alpha = s.belief().enlightened_prob();
    let env = s.env();
    let naive = InnerState::naive(w.w1, env.bias);
    let enl = InnerState::enlightened(w.w1, w.w2, env.bias).expect("grid w2 values are negative");
    let m = |st: &InnerState<f64>| manipulation_level(st, &env.dataset, s.model()) as f64;
    (1.0 - alpha) * m(&naive) + alpha * m(&enl)
}

impl Entry {
    pub fn new(id: String, spec: SessionSpec) -> Result<Self, ApiError> {
        let session = spec.start().map_err(|e| ApiError::invalid(e.to_string()))?;
        let now = now_ms();
        let mut entry = Self { id, spec, session, responses: Vec::new(), created_at: now, updated_at: now, persisted: false };
        entry.close_if_done();
        Ok(entry)
    }

    /// Applies a response to the outstanding action numbered `step`.
    pub fn respond(&mut self, step: usize, response: bool) -> Result<(), ApiError> {
        if self.session.terminal().is_some() || self.session.pending().is_none() {
            return Err(ApiError::conflict("session is finished"));
        }
        let expected = self.session.step_index() + 1;
        if step != expected {
            return Err(ApiError::conflict(format!("response for step {step}, but the outstanding action is step {expected}")));
        }
        self.session.respond(response, None).map_err(|e| ApiError::conflict(e.to_string()))?;
        self.responses.push(response);
        self.updated_at = now_ms();
        self.close_if_done();
        Ok(())
    }

    fn close_if_done(&mut self) {
        if self.session.pending().is_none() {
            self.close();
        }
    }

    /// Closes the session with the posterior terminal estimate. Idempotent.
    pub fn close(&mut self) {
        if self.session.terminal().is_none() {
            let est = self.session.estimated_terminal();
            self.session.close(est);
            self.updated_at = now_ms();
        }
    }

    pub fn terminal_view(&self) -> TerminalView {
        let s = &self.session;
        let t = s.terminal().copied().unwrap_or_else(|| s.estimated_terminal());
        let ds = &s.env().dataset;
        TerminalView {
            current: t.current,
            future_estimate: t.future,
            total: t.total,
            u1: s.env().config.u1,
            u2: s.env().config.u2,
            manipulation_estimate: manipulation_estimate(s),
            selection_errors: enlighten_core::datagen::selection_errors(s.model(), ds),
            optimal_model: ds.optimal().to_string(),
            estimated: true,
        }
    }

    pub fn view(&self) -> SessionView {
        let s = &self.session;
        let ds = &s.env().dataset;
        let suggestion = s.pending().map(|action| {
            let step = s.step_index() + 1;
            match action {
                Action::Suggest(i) => {
                    let (p1, p2) = s.pending_features().expect("suggestion features");
                    SuggestionView {
                        step,
                        action,
                        kind: "suggest",
                        variable: Some(i + 1),
                        corr_to_output: Some(ds.corr_to_output(i)),
                        phi1: Some(p1),
                        phi2: Some(p2),
                        tutor: None,
                    }
                }
                Action::Tutor => SuggestionView {
                    step,
                    action,
                    kind: "tutor",
                    variable: None,
                    corr_to_output: None,
                    phi1: None,
                    phi2: None,
                    tutor: Some(tutor_payload(ds)),
                },
            }
        });
        let w = s.belief().mean_weights();
        let history: Vec<StepView> = s.history().iter().map(StepView::from).collect();
        SessionView {
            api_version: API_VERSION,
            id: self.id.clone(),
            status: s.status(),
            teacher: s.teacher(),
            seed: self.spec.seed,
            step: s.step_index(),
            horizon: s.env().config.horizon,
            model: s.model().to_string(),
            suggestion,
            belief: BeliefView {
                enlightened_prob: s.belief().enlightened_prob(),
                w1_mean: w.w1,
                w2_mean: w.w2,
                w2_from_prior: w.w2_from_prior,
            },
            stage_cost_total: s.cumulative_stage_cost(),
            cumulative_cost: history.last().map_or(0.0, |h| h.cum_cost),
            variables: (0..ds.dim())
                .map(|i| VariableView {
                    name: format!("x{}", i + 1),
                    corr_to_output: ds.corr_to_output(i),
                    included: s.model().includes(i),
                })
                .collect(),
            history,
            terminal: s.terminal().map(|_| self.terminal_view()),
            created_at: self.created_at,
            updated_at: self.updated_at,
        }
    }

    /// Session log in the episode CSV format.
    pub fn csv(&self) -> String {
        let mut out = String::from(EPISODE_CSV_HEADER);
        out.push('\n');
        for r in self.session.history() {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }

    /// Writes `session-<id>.csv` and `session-<id>.meta.json` into `dir`.
    pub fn persist(&mut self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("session-{}.csv", self.id)), self.csv())?;
        let meta = SessionMeta {
            format_version: 1,
            id: &self.id,
            spec: &self.spec,
            responses: &self.responses,
            status: self.session.status(),
            terminal: self.session.terminal().map(|_| self.terminal_view()),
            created_at: self.created_at,
            updated_at: self.updated_at,
        };
        std::fs::write(
            dir.join(format!("session-{}.meta.json", self.id)),
            serde_json::to_string_pretty(&meta).map_err(std::io::Error::other)?,
        )?;
        self.persisted = self.session.terminal().is_some();
        Ok(())
    }
}

#[derive(Serialize)]
struct SessionMeta<'a> {
    format_version: u32,
    id: &'a str,
    spec: &'a SessionSpec,
    responses: &'a [bool],
    status: enlighten_core::planner::SessionStatus,
    terminal: Option<TerminalView>,
    created_at: u64,
    updated_at: u64,
}

/// Offline counterpart used to check that a recorded session replays.
pub fn replay(spec: &SessionSpec, responses: &[bool]) -> Result<TeachingSession<f64>, PlanError> {
    enlighten_core::planner::replay_session(spec.build_env()?, spec.teacher, spec.session_seed(), responses)
}

