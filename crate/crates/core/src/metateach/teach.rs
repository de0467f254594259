use std::fmt::Write as _;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::planner::Stat;
use crate::rng::{derive_seed, rng_from_seed, tags};
use crate::scalar::Scalar;

use super::meta::{inner_adapt, maml_train, meta_gradient, ftml_round};
use super::net::{mse, NetParams};
use super::task::{sample_tasks, SineTask};
use super::{MetaConfig, MetaError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetaTeacher {
    Lookahead,
    Random,
}

impl MetaTeacher {
    pub const ALL: [MetaTeacher; 2] = [MetaTeacher::Lookahead, MetaTeacher::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Lookahead => "lookahead",
            Self::Random => "random",
        }
    }
}

impl fmt::Display for MetaTeacher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetaTeacher {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lookahead" => Ok(Self::Lookahead),
            "random" => Ok(Self::Random),
            other => Err(format!("unknown meta teacher `{other}`")),
        }
    }
}

pub fn distance<F: Scalar>(a: &NetParams<F>, b: &NetParams<F>) -> F {
    a.theta.iter().zip(&b.theta).map(|(x, y)| (*x - *y).powi(2)).sum::<F>().sqrt()
}

/// `lr²‖g‖² − 2·lr·⟨g, θ − θ*⟩`: the change in squared distance to the
/// target after one step of size `lr` along `-g`.
pub fn lookahead_score<F: Scalar>(g: &[F], theta: &[F], target: &[F], lr: F) -> F {
    let difficulty = g.iter().map(|v| *v * *v).sum::<F>();
    let usefulness = g.iter().zip(theta.iter().zip(target)).map(|(gi, (t, s))| *gi * (*t - *s)).sum::<F>();
    lr * lr * difficulty - F::lit(2.0) * lr * usefulness
}

/// Index of the candidate whose first-order meta-gradient step moves the
/// learner closest to `target`; earlier candidates win ties.
pub fn teacher_select_task<F: Scalar>(
    net: &NetParams<F>,
    target: &NetParams<F>,
    candidates: &[&SineTask<F>],
    cfg: &MetaConfig<F>,
) -> Option<usize> {
    let scores: Vec<F> = candidates
        .par_iter()
        .map(|task| {
            let (_, g) = meta_gradient(net, task, cfg);
            lookahead_score(&g, &net.theta, &target.theta, cfg.meta_lr)
        })
        .collect();
    let mut best: Option<(usize, F)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| s < b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

/// A held-out task with a fixed pair of labelled shots and a dense grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct HeldoutTask<F> {
    pub task: SineTask<F>,
    pub shots: Vec<(F, F)>,
    pub grid: Vec<(F, F)>,
}

impl<F: Scalar> HeldoutTask<F> {
    pub fn sample<R: Rng + ?Sized>(cfg: &MetaConfig<F>, rng: &mut R) -> Self {
        let task = SineTask::sample(0, rng);
        let shots = task.sample_points(cfg.eval_shots, rng);
        let grid = task.grid(cfg.eval_points);
        Self { task, shots, grid }
    }
}

/// Grid error after adapting on the held-out shots.
pub fn two_shot_loss<F: Scalar>(net: &NetParams<F>, heldout: &HeldoutTask<F>, cfg: &MetaConfig<F>) -> F {
    mse(&inner_adapt(net, &heldout.shots, cfg), &heldout.grid)
}

fn mean_two_shot<F: Scalar>(net: &NetParams<F>, heldout: &[HeldoutTask<F>], cfg: &MetaConfig<F>) -> F {
    heldout.iter().map(|h| two_shot_loss(net, h, cfg)).sum::<F>() / F::from_usize_lossy(heldout.len())
}

/// Per-replicate material shared by both teachers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct MetaReplicate<F> {
    pub index: usize,
    pub tasks: Vec<SineTask<F>>,
    pub init: NetParams<F>,
    pub target: NetParams<F>,
    pub heldout: Vec<HeldoutTask<F>>,
}

impl<F: Scalar> MetaReplicate<F> {
    /// Samples the task pool, the shared initialization and the held-out set,
    /// then meta-trains the target initialization on the pool.
    pub fn prepare(cfg: &MetaConfig<F>, index: usize) -> Result<Self, MetaError> {
        Self::prepare_with_target(cfg, index, None)
    }

    /// As [`MetaReplicate::prepare`], reusing a previously trained target.
    pub fn prepare_with_target(cfg: &MetaConfig<F>, index: usize, target: Option<NetParams<F>>) -> Result<Self, MetaError> {
        let i = index as u64;
        let tasks = sample_tasks(cfg.n_tasks, cfg.k_shots, &mut rng_from_seed(derive_seed(cfg.seed, tags::TASKS, i)));
        let init = NetParams::init(cfg.shape(), &mut rng_from_seed(derive_seed(cfg.seed, tags::NET_INIT, i)));
        let mut held_rng = rng_from_seed(derive_seed(cfg.seed, tags::HELDOUT, i));
        let heldout = (0..cfg.n_heldout).map(|_| HeldoutTask::sample(cfg, &mut held_rng)).collect();
        let target = match target {
            Some(t) if t.shape == init.shape => t,
            Some(_) => return Err(MetaError::Config("cached target has the wrong network shape".into())),
            None => maml_train(&init, &tasks, cfg, &mut rng_from_seed(derive_seed(cfg.seed, tags::MAML, i)))?,
        };
        Ok(Self { index, tasks, init, target, heldout })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetaCurveRow {
    pub round: usize,
    pub teacher: MetaTeacher,
    pub seed: usize,
    pub distance: f64,
    pub two_shot_loss: f64,
    /// Pool index of the task taught this round.
    pub task: usize,
}

/// Teaches the online meta-learner for `cfg.rounds` rounds, one unseen task
/// per round, and records distance to the target and two-shot loss.
pub fn run_teaching<F: Scalar>(
    rep: &MetaReplicate<F>,
    teacher: MetaTeacher,
    cfg: &MetaConfig<F>,
) -> Result<Vec<MetaCurveRow>, MetaError> {
    let i = rep.index as u64;
    let mut ftml_rng = rng_from_seed(derive_seed(cfg.seed, tags::FTML, i));
    let mut choice_rng = rng_from_seed(derive_seed(cfg.seed, tags::TASK_CHOICE, i));
    let mut unseen: Vec<usize> = (0..rep.tasks.len()).collect();
    let mut pool = Vec::with_capacity(cfg.rounds);
    let mut net = rep.init.clone();
    let mut rows = Vec::with_capacity(cfg.rounds);
    for round in 1..=cfg.rounds {
        if unseen.is_empty() {
            break;
        }
        let pick = match teacher {
            MetaTeacher::Lookahead => {
                let cands: Vec<&SineTask<F>> = unseen.iter().map(|&k| &rep.tasks[k]).collect();
                teacher_select_task(&net, &rep.target, &cands, cfg).expect("nonempty candidates")
            }
            MetaTeacher::Random => choice_rng.random_range(0..unseen.len()),
        };
        let task = unseen.remove(pick);
        pool.push(rep.tasks[task].clone());
        net = ftml_round(&net, &pool, cfg, &mut ftml_rng)?;
        rows.push(MetaCurveRow {
            round,
            teacher,
            seed: rep.index,
            distance: distance(&net, &rep.target).to_f64_lossy(),
            two_shot_loss: mean_two_shot(&net, &rep.heldout, cfg).to_f64_lossy(),
            task,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct MetaTeacherSummary {
    pub teacher: MetaTeacher,
    pub final_distance: Stat,
    pub final_two_shot_loss: Stat,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetaSummary {
    pub n_seeds: usize,
    pub rounds: usize,
    pub initial_distance: Stat,
    pub target_two_shot_loss: Stat,
    pub teachers: Vec<MetaTeacherSummary>,
    #[serde(skip)]
    pub rows: Vec<MetaCurveRow>,
}

pub const META_CSV_HEADER: &str = "round,teacher,seed,distance,two_shot_loss";

impl MetaSummary {
    pub fn teacher(&self, t: MetaTeacher) -> Option<&MetaTeacherSummary> {
        self.teachers.iter().find(|s| s.teacher == t)
    }

    pub fn curves_csv(&self) -> String {
        let mut out = String::from(META_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.round, r.teacher, r.seed, r.distance, r.two_shot_loss);
        }
        out
    }

    /// Seed-mean curve of one teacher: `(round, distance, two_shot_loss)`.
    pub fn mean_curve(&self, t: MetaTeacher) -> Vec<(usize, f64, f64)> {
        (1..=self.rounds)
            .filter_map(|round| {
                let rows: Vec<&MetaCurveRow> = self.rows.iter().filter(|r| r.teacher == t && r.round == round).collect();
                (!rows.is_empty()).then(|| {
                    let n = rows.len() as f64;
                    (
                        round,
                        rows.iter().map(|r| r.distance).sum::<f64>() / n,
                        rows.iter().map(|r| r.two_shot_loss).sum::<f64>() / n,
                    )
                })
            })
            .collect()
    }

    pub fn report_text(&self) -> String {
        let mut out = format!(
            "meta-teaching: {} seeds, {} rounds\ninitial distance {:.4}, target two-shot loss {:.4}\n",
            self.n_seeds, self.rounds, self.initial_distance.mean, self.target_two_shot_loss.mean
        );
        for t in &self.teachers {
            let _ = writeln!(
                out,
                "  {:<10} final distance {:.4} ± {:.4}  final two-shot loss {:.4} ± {:.4}",
                t.teacher.as_str(),
                t.final_distance.mean,
                t.final_distance.ci_half_width,
                t.final_two_shot_loss.mean,
                t.final_two_shot_loss.ci_half_width
            );
        }
        out
    }
}

/// Prepares every replicate and runs both teachers on each. Replicates and
/// teachers run in parallel; rows are ordered by teacher, seed and round.
pub fn run_meta_experiment<F: Scalar>(cfg: &MetaConfig<F>) -> Result<MetaSummary, MetaError> {
    let reps = prepare_replicates(cfg)?;
    run_meta_on(cfg, &reps)
}

pub fn prepare_replicates<F: Scalar>(cfg: &MetaConfig<F>) -> Result<Vec<MetaReplicate<F>>, MetaError> {
    cfg.validate()?;
    (0..cfg.n_seeds).into_par_iter().map(|s| MetaReplicate::prepare(cfg, s)).collect()
}

#[derive(Serialize, Deserialize)]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
struct TargetCacheEntry<F> {
    config: MetaConfig<F>,
    replicate: usize,
    target: NetParams<F>,
}

/// Cached target initialization of replicate `index`, if one trained under
/// the same configuration exists in `dir`.
fn load_cached_target<F: Scalar + for<'de> Deserialize<'de>>(dir: &Path, cfg: &MetaConfig<F>, index: usize) -> Option<NetParams<F>> {
    let text = std::fs::read_to_string(target_cache_path(dir, index)).ok()?;
    let entry: TargetCacheEntry<F> = serde_json::from_str(&text).ok()?;
    (entry.config.training_key() == cfg.training_key() && entry.replicate == index).then_some(entry.target)
}

pub fn target_cache_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("target_seed{index}.json"))
}

/// Like [`prepare_replicates`] but reads trained targets from `cache_dir`
/// when present and writes newly trained ones back. Returns the replicates
/// and how many targets were trained.
pub fn prepare_replicates_cached<F: Scalar + Serialize + for<'de> Deserialize<'de>>(
    cfg: &MetaConfig<F>,
    cache_dir: &Path,
) -> Result<(Vec<MetaReplicate<F>>, usize), MetaError> {
    cfg.validate()?;
    std::fs::create_dir_all(cache_dir)?;
    let reps = (0..cfg.n_seeds)
        .into_par_iter()
        .map(|s| {
            let cached = load_cached_target(cache_dir, cfg, s);
            let trained = cached.is_none();
            let rep = MetaReplicate::prepare_with_target(cfg, s, cached)?;
            if trained {
                let entry = TargetCacheEntry { config: cfg.clone(), replicate: s, target: rep.target.clone() };
                std::fs::write(target_cache_path(cache_dir, s), serde_json::to_string(&entry)?)?;
            }
            Ok((rep, trained))
        })
        .collect::<Result<Vec<_>, MetaError>>()?;
    let trained = reps.iter().filter(|(_, t)| *t).count();
    Ok((reps.into_iter().map(|(r, _)| r).collect(), trained))
}

pub fn run_meta_on<F: Scalar>(cfg: &MetaConfig<F>, reps: &[MetaReplicate<F>]) -> Result<MetaSummary, MetaError> {
    let jobs: Vec<(MetaTeacher, &MetaReplicate<F>)> =
        MetaTeacher::ALL.iter().flat_map(|&t| reps.iter().map(move |r| (t, r))).collect();
    let runs = jobs
        .par_iter()
        .map(|(t, r)| run_teaching(r, *t, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<MetaCurveRow> = runs.into_iter().flatten().collect();
    let teachers = MetaTeacher::ALL
        .iter()
        .map(|&t| {
            let finals: Vec<&MetaCurveRow> = rows
                .iter()
                .filter(|r| r.teacher == t)
                .fold(Vec::<&MetaCurveRow>::new(), |mut acc, r| {
                    match acc.iter_mut().find(|a| a.seed == r.seed) {
                        Some(a) if r.round > a.round => *a = r,
                        Some(_) => {}
                        None => acc.push(r),
                    }
                    acc
                });
            MetaTeacherSummary {
                teacher: t,
                final_distance: Stat::from_values(&finals.iter().map(|r| r.distance).collect::<Vec<_>>()),
                final_two_shot_loss: Stat::from_values(&finals.iter().map(|r| r.two_shot_loss).collect::<Vec<_>>()),
            }
        })
        .collect();
    Ok(MetaSummary {
        n_seeds: reps.len(),
        rounds: cfg.rounds,
        initial_distance: Stat::from_values(
            &reps.iter().map(|r| distance(&r.init, &r.target).to_f64_lossy()).collect::<Vec<_>>(),
        ),
        target_two_shot_loss: Stat::from_values(
            &reps.iter().map(|r| mean_two_shot(&r.target, &r.heldout, cfg).to_f64_lossy()).collect::<Vec<_>>(),
        ),
        teachers,
        rows,
    })
}
