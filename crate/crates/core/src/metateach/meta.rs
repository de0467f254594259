use rand::Rng;

use crate::scalar::Scalar;

use super::net::{loss_and_grad, mse, NetParams};
use super::task::SineTask;
use super::{MetaConfig, MetaError};

/// `inner_steps` gradient-descent steps on `data` at `inner_lr`.
pub fn inner_adapt<F: Scalar>(net: &NetParams<F>, data: &[(F, F)], cfg: &MetaConfig<F>) -> NetParams<F> {
    let mut out = net.clone();
    for _ in 0..cfg.inner_steps {
        let (_, g) = loss_and_grad(&out, data);
        out.theta.iter_mut().zip(&g).for_each(|(t, gi)| *t -= cfg.inner_lr * *gi);
    }
    out
}

/// Post-adaptation test loss of one task.
pub fn task_loss<F: Scalar>(net: &NetParams<F>, task: &SineTask<F>, cfg: &MetaConfig<F>) -> F {
    mse(&inner_adapt(net, &task.train, cfg), &task.test)
}

/// Mean post-adaptation test loss over `tasks`.
pub fn meta_loss<F: Scalar>(net: &NetParams<F>, tasks: &[SineTask<F>], cfg: &MetaConfig<F>) -> F {
    assert!(!tasks.is_empty(), "meta loss over no tasks");
    tasks.iter().map(|t| task_loss(net, t, cfg)).sum::<F>() / F::from_usize_lossy(tasks.len())
}

/// First-order meta-gradient of one task: the test-loss gradient taken at
/// the adapted parameters.
pub fn meta_gradient<F: Scalar>(net: &NetParams<F>, task: &SineTask<F>, cfg: &MetaConfig<F>) -> (F, Vec<F>) {
    loss_and_grad(&inner_adapt(net, &task.train, cfg), &task.test)
}

/// One batch of first-order meta-gradient descent; returns the batch loss.
fn meta_step<F: Scalar, R: Rng + ?Sized>(
    net: &mut NetParams<F>,
    tasks: &[SineTask<F>],
    cfg: &MetaConfig<F>,
    rng: &mut R,
) -> F {
    let batch: Vec<&SineTask<F>> = if tasks.len() <= cfg.task_batch {
        tasks.iter().collect()
    } else {
        (0..cfg.task_batch).map(|_| &tasks[rng.random_range(0..tasks.len())]).collect()
    };
    let scale = F::one() / F::from_usize_lossy(batch.len());
    let mut sum = vec![F::zero(); net.len()];
    let mut loss = F::zero();
    for task in batch {
        let (l, g) = meta_gradient(net, task, cfg);
        loss += l * scale;
        sum.iter_mut().zip(&g).for_each(|(s, gi)| *s += *gi * scale);
    }
    net.theta.iter_mut().zip(&sum).for_each(|(t, g)| *t -= cfg.meta_lr * *g);
    loss
}

/// Trains the target initialization by first-order meta-gradient descent on
/// all `tasks`, starting from `init`.
pub fn maml_train<F: Scalar, R: Rng + ?Sized>(
    init: &NetParams<F>,
    tasks: &[SineTask<F>],
    cfg: &MetaConfig<F>,
    rng: &mut R,
) -> Result<NetParams<F>, MetaError> {
    if tasks.is_empty() {
        return Err(MetaError::Config("meta-training needs at least one task".into()));
    }
    let mut net = init.clone();
    for step in 0..cfg.maml_steps {
        let loss = meta_step(&mut net, tasks, cfg, rng);
        if !loss.is_finite() || net.theta.iter().any(|v| !v.is_finite()) {
            return Err(MetaError::Diverged { step, loss: loss.to_f64_lossy() });
        }
    }
    Ok(net)
}

/// One follow-the-meta-leader round: `meta_steps_per_round` warm-started
/// meta-gradient steps on the pool seen so far.
pub fn ftml_round<F: Scalar, R: Rng + ?Sized>(
    net: &NetParams<F>,
    pool: &[SineTask<F>],
    cfg: &MetaConfig<F>,
    rng: &mut R,
) -> Result<NetParams<F>, MetaError> {
    if pool.is_empty() {
        return Err(MetaError::Config("empty task pool".into()));
    }
    let mut out = net.clone();
    for step in 0..cfg.meta_steps_per_round {
        let loss = meta_step(&mut out, pool, cfg, rng);
        if !loss.is_finite() {
            return Err(MetaError::Diverged { step, loss: loss.to_f64_lossy() });
        }
    }
    Ok(out)
}
