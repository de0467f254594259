use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Fully connected scalar-to-scalar network: tanh hidden layers and a
/// linear output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetShape {
    pub hidden: Vec<usize>,
}

impl Default for NetShape {
    fn default() -> Self {
        Self { hidden: vec![32, 32] }
    }
}

impl NetShape {
    /// Layer widths including the scalar input and output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(1);
        w.extend_from_slice(&self.hidden);
        w.push(1);
        w
    }

    /// Number of parameters: per layer an `out × in` weight block followed by
    /// `out` biases.
    pub fn n_params(&self) -> usize {
        self.widths().windows(2).map(|p| p[1] * p[0] + p[1]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct NetParams<F> {
    pub shape: NetShape,
    pub theta: Vec<F>,
}

impl<F: Scalar> NetParams<F> {
    pub fn zeros(shape: NetShape) -> Self {
        let n = shape.n_params();
        Self { shape, theta: vec![F::zero(); n] }
    }

    /// Weights drawn from N(0, 1/fan_in), zero biases.
    pub fn init<R: Rng + ?Sized>(shape: NetShape, rng: &mut R) -> Self {
        let mut theta = Vec::with_capacity(shape.n_params());
        for p in shape.widths().windows(2) {
            let (fan_in, out) = (p[0], p[1]);
            let std = 1.0 / (fan_in as f64).sqrt();
            for _ in 0..fan_in * out {
                let z: f64 = StandardNormal.sample(rng);
                theta.push(F::lit(z * std));
            }
            theta.extend(std::iter::repeat_n(F::zero(), out));
        }
        Self { shape, theta }
    }

    pub fn from_flat(shape: NetShape, theta: Vec<F>) -> Option<Self> {
        (theta.len() == shape.n_params()).then_some(Self { shape, theta })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Activations of every layer for input `x`, input first.
    fn activations(&self, x: F) -> Vec<Vec<F>> {
        let widths = self.shape.widths();
        let last = widths.len() - 2;
        let mut acts = Vec::with_capacity(widths.len());
        acts.push(vec![x]);
        let mut off = 0;
        for (l, p) in widths.windows(2).enumerate() {
            let (n_in, n_out) = (p[0], p[1]);
            let w = &self.theta[off..off + n_in * n_out];
            let b = &self.theta[off + n_in * n_out..off + n_in * n_out + n_out];
            off += n_in * n_out + n_out;
            let prev = &acts[l];
            let next: Vec<F> = (0..n_out)
                .map(|o| {
                    let z = w[o * n_in..(o + 1) * n_in].iter().zip(prev).fold(b[o], |s, (&wi, &ai)| s + wi * ai);
                    if l == last {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
            acts.push(next);
        }
        acts
    }

    pub fn forward(&self, x: F) -> F {
        self.activations(x).last().expect("output layer")[0]
    }
}

/// Mean squared error over `data` and its gradient with respect to the flat
/// parameter vector.
pub fn loss_and_grad<F: Scalar>(net: &NetParams<F>, data: &[(F, F)]) -> (F, Vec<F>) {
    assert!(!data.is_empty(), "loss over an empty point set");
    let widths = net.shape.widths();
    let n_layers = widths.len() - 1;
    let offsets: Vec<usize> = widths
        .windows(2)
        .scan(0, |off, p| {
            let o = *off;
            *off += p[0] * p[1] + p[1];
            Some(o)
        })
        .collect();
    let scale = F::lit(2.0) / F::from_usize_lossy(data.len());
    let mut grad = vec![F::zero(); net.len()];
    let mut loss = F::zero();
    for &(x, y) in data {
        let acts = net.activations(x);
        let err = acts[n_layers][0] - y;
        loss += err * err;
        let mut delta = vec![err * scale];
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (widths[l], widths[l + 1]);
            let off = offsets[l];
            let input = &acts[l];
            for o in 0..n_out {
                let d = delta[o];
                let row = off + o * n_in;
                for (i, &a) in input.iter().enumerate() {
                    grad[row + i] += d * a;
                }
                grad[off + n_in * n_out + o] += d;
            }
            if l > 0 {
                let w = &net.theta[off..off + n_in * n_out];
                delta = (0..n_in)
                    .map(|i| {
                        let back = (0..n_out).fold(F::zero(), |s, o| s + w[o * n_in + i] * delta[o]);
                        back * (F::one() - input[i] * input[i])
                    })
                    .collect();
            }
        }
    }
    (loss / F::from_usize_lossy(data.len()), grad)
}

pub fn mse<F: Scalar>(net: &NetParams<F>, data: &[(F, F)]) -> F {
    data.iter().map(|&(x, y)| (net.forward(x) - y).powi(2)).sum::<F>() / F::from_usize_lossy(data.len())
}
