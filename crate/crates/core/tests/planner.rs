use std::collections::HashMap;
use std::sync::Arc;

use enlighten_core::belief::{Belief, GridSpec};
use enlighten_core::datagen::{generate_dataset, selection_cost, Dataset, DatasetSpec, Model};
use enlighten_core::learner::{Action, InnerState, LearnerKind, LearnerParams, LearnerSim};
use enlighten_core::planner::{
    rollout_action, run_episode, terminal_cost, Lookahead, TeacherConfig, TeacherKind, TeachingEnv,
};
use enlighten_core::rng::rng_from_seed;

fn grid() -> Arc<enlighten_core::belief::WeightGrid<f64>> {
    Arc::new(GridSpec { w1_points: 5, w2_points: 5, ..GridSpec::default() }.build().unwrap())
}

fn spec(ni: usize, nc: usize, seed: u64) -> DatasetSpec<f64> {
    DatasetSpec { n_independent: ni, n_collinear: nc, seed, ..DatasetSpec::default() }
}

fn aux(ni: usize, nc: usize, n: usize) -> Vec<Dataset<f64>> {
    (0..n).map(|k| generate_dataset(&spec(ni, nc, 1000 + k as u64)).unwrap()).collect()
}

fn env(ds: Dataset<f64>, aux: Vec<Dataset<f64>>, config: TeacherConfig<f64>, bias: f64) -> TeachingEnv<f64> {
    TeachingEnv::new(Arc::new(ds), Arc::new(aux), config, grid(), bias).unwrap()
}

/// Learner that accepts every suggestion with probability indistinguishable from 1.
fn accepting() -> LearnerParams<f64> {
    LearnerParams { w1: 5.0, w2_enlightened: -5.0, w0: 40.0 }
}

#[test]
fn terminal_cost_examples() {
    let ds = generate_dataset(&spec(10, 15, 1)).unwrap();
    let aux = aux(10, 15, 10);
    let naive_all = InnerState::naive(5.0, 40.0);
    let theta = Model::empty(25);

    let only_current = TeacherConfig { u1: 1.0, u2: 0.0, ..TeacherConfig::default() };
    let t = terminal_cost(&theta, &naive_all, &ds, &aux, &only_current);
    assert_eq!(t.total, selection_cost(&theta, &ds));

    let mixed = TeacherConfig { u1: 0.5, u2: 0.5, ..TeacherConfig::default() };
    let t = terminal_cost(&theta, &naive_all, &ds, &aux, &mixed);
    assert_eq!(t.future, 140.0);
    assert_eq!(t.total - 0.5 * t.current, 70.0);

    // With precise correlations this learner keeps every independent
    // covariate and exactly one collinear one.
    let precise: Vec<Dataset<f64>> = (0..10)
        .map(|k| generate_dataset(&DatasetSpec { n_samples: 5000, ..spec(10, 15, 2000 + k) }).unwrap())
        .collect();
    let sharp = InnerState::enlightened(20.0, -20.0, -3.0).unwrap();
    let t = terminal_cost(ds.optimal(), &sharp, &ds, &precise, &mixed);
    assert_eq!(t.future, 0.0);
    assert_eq!(t.total, 0.5 * t.current);
}

#[test]
fn zero_horizon_episode_is_empty() {
    let ds = generate_dataset(&spec(10, 15, 2)).unwrap();
    let cfg = TeacherConfig { horizon: 0, ..TeacherConfig::default() };
    let e = env(ds, Vec::new(), cfg, -0.5);
    let log = run_episode(TeacherKind::Rollout, LearnerSim::fresh(LearnerParams::default(), 0.5, 25).unwrap(), &e, 3).unwrap();
    assert!(log.steps.is_empty());
    assert_eq!(log.terminal.current, 10.0);
    assert_eq!(log.total_cost, 10.0);
    assert_eq!(log.final_model, Model::empty(25));
}

#[test]
fn manipulative_teacher_reaches_target_while_manipulating() {
    for seed in 0..3 {
        let ds = generate_dataset(&spec(10, 15, seed)).unwrap();
        let e = env(ds.clone(), Vec::new(), TeacherConfig::default(), 40.0);
        let log = run_episode(TeacherKind::Manipulative, LearnerSim::fresh(accepting(), 0.5, 25).unwrap(), &e, seed).unwrap();
        assert_eq!(&log.final_model, ds.optimal());
        assert_eq!(log.manipulation_level, 14);
        assert_eq!(log.tutor_count, 0);
        assert_eq!(log.steps.len(), 11);
        assert!(log.steps.len() <= e.config.horizon);
    }
}

#[test]
fn episode_logs_are_consistent_and_deterministic() {
    let ds = generate_dataset(&spec(3, 4, 5)).unwrap();
    let cfg = TeacherConfig { u1: 0.5, u2: 0.5, horizon: 10, rollout_samples: 8, n_aux: 3, ..TeacherConfig::default() };
    let e = env(ds, aux(3, 4, 3), cfg, -0.5);
    for teacher in [TeacherKind::Rollout, TeacherKind::Manipulative, TeacherKind::Random] {
        let learner = || LearnerSim::fresh(LearnerParams::default(), 0.5, 7).unwrap();
        let a = run_episode(teacher, learner(), &e, 9).unwrap();
        let b = run_episode(teacher, learner(), &e, 9).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.steps, b.steps);
        assert!(a.steps.len() <= 10);
        let mut stage = 0.0;
        for (k, s) in a.steps.iter().enumerate() {
            stage += s.stage_cost;
            let expected = if k + 1 == a.steps.len() { stage + a.terminal.total } else { stage };
            assert!((s.cum_cost - expected).abs() < 1e-12);
        }
        assert!(a.steps.windows(2).all(|w| w[1].cum_cost >= w[0].cum_cost));
        assert!((a.total_cost - (a.stage_total + a.terminal.total)).abs() < 1e-12);
    }
}

#[test]
fn rollout_enlightens_when_tutoring_always_works() {
    let spec25 = spec(10, 15, 0);
    let cfg = TeacherConfig { u1: 0.5, u2: 0.5, eta: 1.0, rollout_samples: 16, n_aux: 5, ..TeacherConfig::default() };
    for seed in 0..4 {
        let ds = generate_dataset(&spec25.clone().with_seed(seed)).unwrap();
        let e = env(ds, aux(10, 15, 5), cfg.clone(), -0.5);
        let log = run_episode(TeacherKind::Rollout, LearnerSim::fresh(LearnerParams::default(), 1.0, 25).unwrap(), &e, seed).unwrap();
        assert_eq!(log.final_state.kind(), LearnerKind::Enlightened, "seed {seed}");
    }
}

#[test]
fn rollout_tutors_when_only_future_matters() {
    let cfg = TeacherConfig { u1: 0.0, u2: 1.0, eta: 1.0, horizon: 8, rollout_samples: 8, n_aux: 3, ..TeacherConfig::default() };
    for seed in 0..5 {
        let ds = generate_dataset(&spec(3, 4, seed)).unwrap();
        let e = env(ds, aux(3, 4, 3), cfg.clone(), -0.5);
        let log = run_episode(TeacherKind::Rollout, LearnerSim::fresh(LearnerParams::default(), 1.0, 7).unwrap(), &e, seed).unwrap();
        assert!(log.tutor_count > 0, "seed {seed}");
    }
}

#[test]
fn ties_go_to_the_lowest_index() {
    let ds = generate_dataset(&spec(3, 4, 1)).unwrap();
    let cfg = TeacherConfig { lookahead: Lookahead::Steps(1), rollout_samples: 64, ..TeacherConfig::default() };
    // The learner never accepts, so every suggestion has the same outcome.
    let e = env(ds, Vec::new(), cfg, -1000.0);
    let belief = Belief::new(e.grid.clone(), e.config.eta, e.bias).unwrap();
    let mut rng = rng_from_seed(4);
    assert_eq!(rollout_action(&belief, &Model::empty(7), 0, &e, &mut rng), Action::Suggest(0));
}

/// Exact optimal cost-to-go for a learner that accepts every suggestion.
fn oracle(t: usize, theta: &Model, e: &TeachingEnv<f64>, memo: &mut HashMap<(usize, Model), f64>) -> f64 {
    let cfg = &e.config;
    if t == cfg.horizon {
        return cfg.u1 * selection_cost(theta, &e.dataset);
    }
    if let Some(v) = memo.get(&(t, theta.clone())) {
        return *v;
    }
    let v = candidates(e.dim())
        .map(|a| q_value(t, theta, a, e, memo))
        .fold(f64::INFINITY, f64::min);
    memo.insert((t, theta.clone()), v);
    v
}

fn q_value(t: usize, theta: &Model, a: Action, e: &TeachingEnv<f64>, memo: &mut HashMap<(usize, Model), f64>) -> f64 {
    let mut next = theta.clone();
    if let Action::Suggest(i) = a {
        next.set(i, true);
    }
    e.config.stage_cost(a) + oracle(t + 1, &next, e, memo)
}

fn candidates(d: usize) -> impl Iterator<Item = Action> {
    (0..d).map(Action::Suggest).chain(std::iter::once(Action::Tutor))
}

#[test]
fn rollout_matches_exhaustive_search_on_tiny_instance() {
    let ds = generate_dataset(&spec(2, 2, 3)).unwrap();
    let cfg = TeacherConfig { horizon: 4, rollout_samples: 8, ..TeacherConfig::default() };
    let e = env(ds, Vec::new(), cfg, 40.0);
    let belief = Belief::new(e.grid.clone(), e.config.eta, e.bias).unwrap();
    let mut memo = HashMap::new();
    let mut rng = rng_from_seed(1);
    for t in 0..4 {
        for bits in 0..16u32 {
            let theta = Model::from_bools((0..4).map(|i| bits >> i & 1 == 1).collect());
            let chosen = rollout_action(&belief, &theta, t, &e, &mut rng);
            let best = oracle(t, &theta, &e, &mut memo);
            assert_eq!(q_value(t, &theta, chosen, &e, &mut memo), best, "t {t} model {theta}");
            assert_ne!(chosen, Action::Tutor);
        }
    }
    // And along the rollout teacher's own episode: it never tutors.
    let log = run_episode(TeacherKind::Rollout, LearnerSim::fresh(accepting(), 0.5, 4).unwrap(), &e, 2).unwrap();
    assert_eq!(log.tutor_count, 0);
    assert_eq!(log.total_cost, oracle(0, &Model::empty(4), &e, &mut memo));
}

#[test]
fn tutoring_frequency_falls_with_its_cost() {
    let seeds = 0..6u64;
    let mut freq = Vec::new();
    for cost in [2.0, 5.0, 12.0] {
        let cfg = TeacherConfig {
            u1: 0.5,
            u2: 0.5,
            stage_cost_tutor: cost,
            horizon: 10,
            rollout_samples: 8,
            n_aux: 3,
            ..TeacherConfig::default()
        };
        let mut tutors = 0;
        for seed in seeds.clone() {
            let ds = generate_dataset(&spec(3, 4, seed)).unwrap();
            let e = env(ds, aux(3, 4, 3), cfg.clone(), -0.5);
            let log = run_episode(TeacherKind::Rollout, LearnerSim::fresh(LearnerParams::default(), 0.5, 7).unwrap(), &e, seed).unwrap();
            tutors += log.tutor_count;
        }
        freq.push(tutors as f64 / (seeds.end as f64 * 10.0));
    }
    assert!(freq[0] >= freq[1] && freq[1] >= freq[2], "{freq:?}");
    assert!(freq[0] > 0.0);
}

#[test]
fn single_precision_episode_runs() {
    let ds = generate_dataset(&DatasetSpec::<f32> { n_independent: 3, n_collinear: 4, ..DatasetSpec::default() }).unwrap();
    let cfg = TeacherConfig::<f32> { horizon: 6, rollout_samples: 4, ..TeacherConfig::default() };
    let grid = Arc::new(GridSpec { w1_points: 3, w2_points: 3, ..GridSpec::default() }.build::<f32>().unwrap());
    let e = TeachingEnv::new(Arc::new(ds), Arc::new(Vec::new()), cfg, grid, -0.5).unwrap();
    let log = run_episode(TeacherKind::Rollout, LearnerSim::fresh(LearnerParams::default(), 0.5, 7).unwrap(), &e, 1).unwrap();
    assert_eq!(log.steps.len(), 6);
}
