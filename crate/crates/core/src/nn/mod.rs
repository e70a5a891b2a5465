//! Hand-written differentiable building blocks: dense nets, a stacked LSTM,
//! the two RMSProp variants and a binary parameter checkpoint format.

mod activation;
pub mod checkpoint;
mod dense;
mod lstm;
mod optim;
mod params;

pub use activation::Activation;
pub use dense::{dense_backward, dense_forward, DenseLayer, DenseNet, DenseTrace};
pub use lstm::{lstm_backward, lstm_forward, LstmLayer, LstmNet};
pub use optim::{rmsprop_step, RmsPropConfig, RmsPropState};
pub use params::{Gradients, Parameters};

use rand::Rng;

/// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
pub(crate) fn uniform_init<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, n: usize) -> Vec<f64> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    (0..n).map(|_| rng.random_range(-bound..=bound)).collect()
}

/// `out += W x` for row-major `W` with `x.len()` columns.
#[inline]
pub(crate) fn matvec_acc(w: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += W^T v` for row-major `W` with `out.len()` columns.
#[inline]
pub(crate) fn matvec_t_acc(w: &[f64], v: &[f64], out: &mut [f64]) {
    let cols = out.len();
    for (vi, row) in v.iter().zip(w.chunks_exact(cols)) {
        if *vi == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(row) {
            *o += vi * a;
        }
    }
}

/// `g += v ⊗ x` for row-major `g` with `x.len()` columns.
#[inline]
pub(crate) fn outer_acc(g: &mut [f64], v: &[f64], x: &[f64]) {
    let cols = x.len();
    for (vi, row) in v.iter().zip(g.chunks_exact_mut(cols)) {
        if *vi == 0.0 {
            continue;
        }
        for (gi, xi) in row.iter_mut().zip(x) {
            *gi += vi * xi;
        }
    }
}
