use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::MetaError;

pub const AMPLITUDE_RANGE: (f64, f64) = (0.1, 5.0);
pub const PHASE_RANGE: (f64, f64) = (0.0, PI);
pub const INPUT_RANGE: (f64, f64) = (-5.0, 5.0);

/// Noise-free sine regression task `y = A·sin(x + φ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct SineTask<F> {
    pub amplitude: F,
    pub phase: F,
    pub train: Vec<(F, F)>,
    pub test: Vec<(F, F)>,
}

impl<F: Scalar> SineTask<F> {
    pub fn eval(&self, x: F) -> F {
        self.amplitude * (x + self.phase).sin()
    }

    pub fn sample_points<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<(F, F)> {
        (0..k)
            .map(|_| {
                let x = F::lit(rng.random_range(INPUT_RANGE.0..INPUT_RANGE.1));
                (x, self.eval(x))
            })
            .collect()
    }

    /// Draws amplitude, phase and `k` train and `k` test points.
    pub fn sample<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let amplitude = F::lit(rng.random_range(AMPLITUDE_RANGE.0..=AMPLITUDE_RANGE.1));
        let phase = F::lit(rng.random_range(PHASE_RANGE.0..=PHASE_RANGE.1));
        let mut task = Self { amplitude, phase, train: Vec::new(), test: Vec::new() };
        task.train = task.sample_points(k, rng);
        task.test = task.sample_points(k, rng);
        task
    }

    /// `n` evenly spaced points over the input range.
    pub fn grid(&self, n: usize) -> Vec<(F, F)> {
        let (lo, hi) = INPUT_RANGE;
        (0..n)
            .map(|i| {
                let x = if n == 1 { F::zero() } else { F::lit(lo + (hi - lo) * i as f64 / (n - 1) as f64) };
                (x, self.eval(x))
            })
            .collect()
    }
}

pub fn sample_tasks<F: Scalar, R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<SineTask<F>> {
    (0..n).map(|_| SineTask::sample(k, rng)).collect()
}

#[derive(Serialize, Deserialize)]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
struct TaskPoolFile<F> {
    format_version: u32,
    tasks: Vec<SineTask<F>>,
}

pub fn write_task_pool<F: Scalar + Serialize>(tasks: &[SineTask<F>], path: &Path) -> Result<(), MetaError> {
    let file = TaskPoolFile { format_version: 1, tasks: tasks.to_vec() };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

pub fn read_task_pool<F: Scalar + for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<SineTask<F>>, MetaError> {
    let file: TaskPoolFile<F> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if file.format_version != 1 {
        return Err(MetaError::Config(format!("unsupported task pool version {}", file.format_version)));
    }
    Ok(file.tasks)
}
