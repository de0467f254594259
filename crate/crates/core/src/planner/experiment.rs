use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::GridSpec;
use crate::datagen::{generate_dataset, selection_errors, Dataset, DatasetSpec};
use crate::learner::{unassisted_learn, LearnerParams, LearnerSim};
use crate::rng::{derive_seed, tags};
use crate::scalar::Scalar;

use super::episode::{run_episode, EpisodeLog};
use super::teachers::TeacherKind;
use super::{PlanError, TeachingEnv};
use super::TeacherConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExperimentId {
    /// Current-dataset cost only: rollout vs manipulative teacher.
    CurrentOnly = 1,
    /// Unassisted performance of the two learner types on held-out data.
    Unassisted = 2,
    /// Current and estimated future cost: rollout vs manipulative vs random.
    WithFuture = 3,
}

impl ExperimentId {
    pub fn from_number(id: u32) -> Option<Self> {
        match id {
            1 => Some(Self::CurrentOnly),
            2 => Some(Self::Unassisted),
            3 => Some(Self::WithFuture),
            _ => None,
        }
    }

    pub fn number(self) -> u32 {
        self as u32
    }

    fn teachers(self) -> &'static [TeacherKind] {
        match self {
            Self::CurrentOnly => &[TeacherKind::Rollout, TeacherKind::Manipulative],
            Self::Unassisted => &[],
            Self::WithFuture => &[TeacherKind::Rollout, TeacherKind::Manipulative, TeacherKind::Random],
        }
    }

    fn scalarization<F: Scalar>(self) -> (F, F) {
        match self {
            Self::CurrentOnly | Self::Unassisted => (F::one(), F::zero()),
            Self::WithFuture => (F::lit(0.5), F::lit(0.5)),
        }
    }
}

/// Everything needed to reproduce an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct ExperimentSetup<F> {
    /// Generation recipe; its `seed` is replaced by derived seeds.
    pub dataset: DatasetSpec<F>,
    pub learner: LearnerParams<F>,
    pub teacher: TeacherConfig<F>,
    pub grid: GridSpec,
    pub seed: u64,
    pub n_seeds: usize,
}

impl<F: Scalar> Default for ExperimentSetup<F> {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::default(),
            learner: LearnerParams::default(),
            teacher: TeacherConfig::default(),
            grid: GridSpec::default(),
            seed: 0,
            n_seeds: 10,
        }
    }
}

impl<F: Scalar> ExperimentSetup<F> {
    pub fn validate(&self) -> Result<(), PlanError> {
        self.dataset.validate()?;
        self.learner.validate()?;
        self.teacher.validate()?;
        self.grid.build::<F>()?;
        if self.n_seeds == 0 {
            return Err(PlanError::Config("n_seeds must be positive".into()));
        }
        Ok(())
    }

    fn spec_with(&self, tag: u64, index: usize) -> DatasetSpec<F> {
        self.dataset.clone().with_seed(derive_seed(self.seed, tag, index as u64))
    }

    /// Teaching dataset of replicate `r`.
    pub fn teaching_dataset(&self, r: usize) -> Result<Dataset<F>, PlanError> {
        Ok(generate_dataset(&self.spec_with(tags::TEACHING_DATA, r))?)
    }

    /// Datasets used to estimate the learner's unassisted performance.
    pub fn aux_datasets(&self) -> Result<Vec<Dataset<F>>, PlanError> {
        (0..self.teacher.n_aux)
            .map(|k| Ok(generate_dataset(&self.spec_with(tags::AUX_DATA, k))?))
            .collect()
    }

    /// Held-out datasets for unassisted evaluation.
    pub fn eval_datasets(&self) -> Result<Vec<Dataset<F>>, PlanError> {
        (0..self.teacher.n_eval)
            .map(|k| Ok(generate_dataset(&self.spec_with(tags::EVAL_DATA, k))?))
            .collect()
    }

    /// Per-replicate episode seed, shared by all teachers.
    pub fn episode_seed(&self, r: usize) -> u64 {
        derive_seed(self.seed, tags::LEARNER, r as u64)
    }
}

/// Mean with a normal-approximation 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub ci_half_width: f64,
    pub n: usize,
}

impl Stat {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN, ci_half_width: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std, ci_half_width: 1.96 * std / (n as f64).sqrt(), n }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub t: usize,
    pub cum_cost: Stat,
    pub posterior_enlightened: Stat,
    pub true_enlightened: Stat,
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = ""))]
pub struct TeacherSummary<F> {
    pub teacher: TeacherKind,
    pub curve: Vec<CurvePoint>,
    pub total_cost: Stat,
    pub stage_cost: Stat,
    pub terminal_cost: Stat,
    pub final_selection_cost: Stat,
    pub manipulation_level: Stat,
    pub tutor_count: Stat,
    /// Replicates in which the learner actually switched.
    pub switched: usize,
    /// Final posterior type probability over the switched replicates.
    pub final_posterior_when_switched: Option<Stat>,
    #[serde(skip)]
    pub episodes: Vec<EpisodeLog<F>>,
}

impl<F: Scalar> TeacherSummary<F> {
    fn from_episodes(teacher: TeacherKind, horizon: usize, episodes: Vec<EpisodeLog<F>>) -> Self {
        let collect = |f: &dyn Fn(&EpisodeLog<F>) -> f64| -> Stat {
            Stat::from_values(&episodes.iter().map(f).collect::<Vec<_>>())
        };
        let curve = (0..=horizon)
            .map(|t| CurvePoint {
                t,
                cum_cost: collect(&|e| e.cum_cost_at(t).to_f64_lossy()),
                posterior_enlightened: collect(&|e| e.posterior_at(t).to_f64_lossy()),
                true_enlightened: collect(&|e| e.enlightened_at(t) as u8 as f64),
            })
            .collect();
        let switched: Vec<f64> = episodes
            .iter()
            .filter(|e| e.switched_at.is_some())
            .map(|e| e.posterior_at(horizon).to_f64_lossy())
            .collect();
        Self {
            teacher,
            curve,
            total_cost: collect(&|e| e.total_cost.to_f64_lossy()),
            stage_cost: collect(&|e| e.stage_total.to_f64_lossy()),
            terminal_cost: collect(&|e| e.terminal.total.to_f64_lossy()),
            final_selection_cost: collect(&|e| e.terminal.current.to_f64_lossy()),
            manipulation_level: collect(&|e| e.manipulation_level as f64),
            tutor_count: collect(&|e| e.tutor_count as f64),
            switched: switched.len(),
            final_posterior_when_switched: (!switched.is_empty()).then(|| Stat::from_values(&switched)),
            episodes,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UnassistedRow {
    pub learner_type: String,
    pub dataset: usize,
    pub terminal_cost: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnassistedTable {
    pub naive: Stat,
    pub enlightened: Stat,
    pub rows: Vec<UnassistedRow>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = ""))]
pub struct ExperimentSummary<F> {
    pub experiment: ExperimentId,
    pub n_seeds: usize,
    pub horizon: usize,
    pub u1: f64,
    pub u2: f64,
    pub teachers: Vec<TeacherSummary<F>>,
    pub unassisted: Option<UnassistedTable>,
}

/// Runs one of the three variable-selection experiments. Replicates run in
/// parallel; each owns streams derived from `(setup.seed, replicate)` so the
/// result does not depend on scheduling.
pub fn run_experiment<F: Scalar>(id: ExperimentId, setup: &ExperimentSetup<F>) -> Result<ExperimentSummary<F>, PlanError> {
    setup.validate()?;
    let (u1, u2) = id.scalarization::<F>();
    let cfg = TeacherConfig { u1, u2, ..setup.teacher.clone() };
    cfg.validate()?;

    if id == ExperimentId::Unassisted {
        let eval = setup.eval_datasets()?;
        let mut rows = Vec::new();
        let mut per_type = |name: &str, state| -> Stat {
            let costs: Vec<f64> = eval
                .iter()
                .map(|d| selection_errors(&unassisted_learn(&state, d), d) as f64)
                .collect();
            for (k, &c) in costs.iter().enumerate() {
                rows.push(UnassistedRow { learner_type: name.into(), dataset: k, terminal_cost: c });
            }
            Stat::from_values(&costs)
        };
        let naive = per_type("naive", setup.learner.naive_state());
        let enlightened = per_type("enlightened", setup.learner.enlightened_state());
        return Ok(ExperimentSummary {
            experiment: id,
            n_seeds: setup.n_seeds,
            horizon: cfg.horizon,
            u1: u1.to_f64_lossy(),
            u2: u2.to_f64_lossy(),
            teachers: Vec::new(),
            unassisted: Some(UnassistedTable { naive, enlightened, rows }),
        });
    }

    let grid = Arc::new(setup.grid.build::<F>()?);
    let aux = Arc::new(if u2 > F::zero() { setup.aux_datasets()? } else { Vec::new() });
    let envs: Vec<TeachingEnv<F>> = (0..setup.n_seeds)
        .map(|r| {
            TeachingEnv::new(
                Arc::new(setup.teaching_dataset(r)?),
                aux.clone(),
                cfg.clone(),
                grid.clone(),
                setup.learner.w0,
            )
        })
        .collect::<Result<_, _>>()?;

    let mut teachers = Vec::new();
    for &kind in id.teachers() {
        let episodes = envs
            .par_iter()
            .enumerate()
            .map(|(r, env)| {
                let learner = LearnerSim::fresh(setup.learner, cfg.eta, env.dim())?;
                run_episode(kind, learner, env, setup.episode_seed(r))
            })
            .collect::<Result<Vec<_>, PlanError>>()?;
        teachers.push(TeacherSummary::from_episodes(kind, cfg.horizon, episodes));
    }
    Ok(ExperimentSummary {
        experiment: id,
        n_seeds: setup.n_seeds,
        horizon: cfg.horizon,
        u1: u1.to_f64_lossy(),
        u2: u2.to_f64_lossy(),
        teachers,
        unassisted: None,
    })
}

pub const CURVES_CSV_HEADER: &str = "experiment,teacher,t,metric,mean,ci_half_width,n";

impl<F: Scalar> ExperimentSummary<F> {
    pub fn teacher(&self, kind: TeacherKind) -> Option<&TeacherSummary<F>> {
        self.teachers.iter().find(|t| t.teacher == kind)
    }

    /// Long-format plot data.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from(CURVES_CSV_HEADER);
        out.push('\n');
        let id = self.experiment.number();
        for ts in &self.teachers {
            for p in &ts.curve {
                for (metric, s) in [
                    ("cum_cost", &p.cum_cost),
                    ("posterior_enlightened", &p.posterior_enlightened),
                    ("true_enlightened", &p.true_enlightened),
                ] {
                    let _ = writeln!(out, "{id},{},{},{metric},{},{},{}", ts.teacher, p.t, s.mean, s.ci_half_width, s.n);
                }
            }
        }
        out
    }

    pub fn unassisted_csv(&self) -> Option<String> {
        let table = self.unassisted.as_ref()?;
        let mut out = String::from("learner_type,dataset,terminal_cost\n");
        for r in &table.rows {
            let _ = writeln!(out, "{},{},{}", r.learner_type, r.dataset + 1, r.terminal_cost);
        }
        Some(out)
    }

    /// Human-readable report.
    pub fn report_text(&self) -> String {
        let mut out = String::new();
        let id = self.experiment.number();
        let _ = writeln!(out, "experiment {id}: {} seeds, horizon {}, u = ({}, {})", self.n_seeds, self.horizon, self.u1, self.u2);
        if let Some(t) = &self.unassisted {
            let _ = writeln!(out, "unassisted terminal cost over {} datasets", t.naive.n);
            for (name, s) in [("naive", &t.naive), ("enlightened", &t.enlightened)] {
                let _ = writeln!(out, "  {name:<12} mean {:.3}  stdev {:.3}", s.mean, s.std);
            }
        }
        for ts in &self.teachers {
            let _ = writeln!(out, "teacher {}", ts.teacher);
            for (name, s) in [
                ("total cost", &ts.total_cost),
                ("stage cost", &ts.stage_cost),
                ("terminal cost", &ts.terminal_cost),
                ("final selection cost", &ts.final_selection_cost),
                ("manipulation level", &ts.manipulation_level),
                ("tutor actions", &ts.tutor_count),
            ] {
                let _ = writeln!(out, "  {name:<22} {:.3} ± {:.3}", s.mean, s.ci_half_width);
            }
            let _ = writeln!(out, "  {:<22} {}/{}", "learner switched", ts.switched, ts.total_cost.n);
            if let Some(s) = &ts.final_posterior_when_switched {
                let _ = writeln!(out, "  {:<22} {:.3}", "P(enlightened) at end", s.mean);
            }
        }
        out
    }

    /// Writes curves, the structured summary, the text report and one CSV per
    /// episode into `dir`. Returns the written paths.
    pub fn write_outputs(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let id = self.experiment.number();
        let mut written = Vec::new();
        let mut put = |name: String, body: String| -> std::io::Result<()> {
            let p = dir.join(name);
            fs::write(&p, body)?;
            written.push(p);
            Ok(())
        };
        put(format!("exp{id}_summary.json"), serde_json::to_string_pretty(self).expect("serializable summary"))?;
        put(format!("exp{id}_summary.txt"), self.report_text())?;
        if let Some(csv) = self.unassisted_csv() {
            put(format!("exp{id}_unassisted.csv"), csv)?;
        } else {
            put(format!("exp{id}_curves.csv"), self.curves_csv())?;
        }
        for ts in &self.teachers {
            for (r, e) in ts.episodes.iter().enumerate() {
                put(format!("exp{id}_{}_seed{r}.csv", ts.teacher), e.to_csv())?;
            }
        }
        Ok(written)
    }
}
