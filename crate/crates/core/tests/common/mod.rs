//! Reference models shared by the integration tests. Everything here is
//! written independently of the library's environment code.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeSet;

/// Explicit tabular model: `next[s][a] = (s', r, terminal)`.
pub struct TabularModel {
    pub next: Vec<Vec<(usize, f64, bool)>>,
}

impl TabularModel {
    pub fn chain(n: usize, reward: f64) -> Self {
        let next = (0..n)
            .map(|s| {
                let left = (s.saturating_sub(1), 0.0, false);
                let right = if s == n - 2 {
                    (n - 1, reward, true)
                } else {
                    ((s + 1).min(n - 1), 0.0, false)
                };
                vec![left, right]
            })
            .collect();
        TabularModel { next }
    }

    /// Actions up, down, left, right; cell index `y·w + x`.
    pub fn grid(w: usize, h: usize) -> Self {
        let goal = (w - 1, h - 1);
        let mut next = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let moves = [
                    (x, (y + 1).min(h - 1)),
                    (x, y.saturating_sub(1)),
                    (x.saturating_sub(1), y),
                    ((x + 1).min(w - 1), y),
                ];
                next.push(
                    moves
                        .iter()
                        .map(|&(nx, ny)| {
                            let term = (nx, ny) == goal;
                            (ny * w + nx, if term { 1.0 } else { 0.0 }, term)
                        })
                        .collect(),
                );
            }
        }
        TabularModel { next }
    }

    /// Q* by value iteration, terminal successors bootstrapping to 0.
    pub fn q_star(&self, gamma: f64) -> Vec<Vec<f64>> {
        let ns = self.next.len();
        let mut v = vec![0.0; ns];
        let mut q = vec![vec![0.0; self.next[0].len()]; ns];
        for _ in 0..10_000 {
            let mut delta: f64 = 0.0;
            for s in 0..ns {
                for (a, &(s2, r, term)) in self.next[s].iter().enumerate() {
                    q[s][a] = r + if term { 0.0 } else { gamma * v[s2] };
                }
            }
            for s in 0..ns {
                let best = q[s].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                delta = delta.max((best - v[s]).abs());
                v[s] = best;
            }
            if delta < 1e-15 {
                break;
            }
        }
        q
    }

    /// States reachable from `start` before termination.
    pub fn reachable(&self, start: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(s) = stack.pop() {
            for &(s2, _, term) in &self.next[s] {
                if !term && seen.insert(s2) {
                    stack.push(s2);
                }
            }
        }
        seen
    }

    /// Distinct `(s, a, r, s')` tuples an agent starting at `start` can see.
    pub fn distinct_transitions(&self, start: usize) -> usize {
        let mut tuples = BTreeSet::new();
        for s in self.reachable(start) {
            for (a, &(s2, r, _)) in self.next[s].iter().enumerate() {
                tuples.insert((s, a, r.to_bits(), s2));
            }
        }
        tuples.len()
    }

    /// Greedy actions of `q` with lowest-index tie breaking.
    pub fn greedy(q: &[Vec<f64>]) -> Vec<usize> {
        q.iter()
            .map(|row| {
                let mut best = 0;
                for (i, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = i;
                    }
                }
                best
            })
            .collect()
    }
}

/// Denominator floor for relative errors. Central differences at
/// `h = 1e-5` carry roughly 1e-11 of f64 round-off, so gradient entries far
/// below this are compared on an absolute scale instead.
pub const FD_FLOOR: f64 = 1e-6;

pub fn worst_relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(FD_FLOOR);
    (analytic - numeric).abs() / scale
}

use comper::nn::{Activation, DenseLayer, DenseNet, LstmLayer, LstmNet, Parameters};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Default, Clone, Copy)]
pub struct FdReport {
    pub worst: f64,
    pub checked: usize,
    /// Perturbations that moved a ReLU pre-activation across zero.
    pub skipped_kinks: usize,
    /// Entries smaller than [`FD_FLOOR`] in magnitude.
    pub floored: usize,
}

impl FdReport {
    fn merge(&mut self, o: FdReport) {
        self.worst = self.worst.max(o.worst);
        self.checked += o.checked;
        self.skipped_kinks += o.skipped_kinks;
        self.floored += o.floored;
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// A dense net with every activation kind represented.
pub fn random_dense(rng: &mut ChaCha8Rng) -> DenseNet {
    let acts = [Activation::Relu, Activation::Tanh, Activation::Sigmoid];
    let depth = rng.random_range(1..4);
    let mut widths = vec![rng.random_range(1..6)];
    for _ in 0..depth {
        widths.push(rng.random_range(1..6));
    }
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let act = if i + 2 == widths.len() {
                Activation::Linear
            } else {
                acts[rng.random_range(0..acts.len())]
            };
            DenseLayer::new(w[0], w[1], act, rng)
        })
        .collect();
    DenseNet::from_layers(layers).unwrap()
}

pub fn random_lstm(rng: &mut ChaCha8Rng) -> LstmNet {
    let input = rng.random_range(1..5);
    let lstm: Vec<usize> = (0..rng.random_range(1..4)).map(|_| rng.random_range(1..5)).collect();
    let dense: Vec<usize> = (0..rng.random_range(0..3)).map(|_| rng.random_range(1..5)).collect();
    let mut net = LstmNet::new(input, &lstm, &dense, rng);
    // larger weights than the default init exercise saturated gates too
    for t in net.tensors_mut() {
        for v in t.iter_mut() {
            *v *= 2.0;
        }
    }
    net
}

fn relu_signs(net: &DenseNet, x: &[f64]) -> Vec<bool> {
    let trace = net.forward_trace(x).unwrap();
    net.layers
        .iter()
        .zip(&trace.pre_activations)
        .filter(|(l, _)| l.activation == Activation::Relu)
        .flat_map(|(_, z)| z.iter().map(|v| *v > 0.0).collect::<Vec<_>>())
        .collect()
}

/// Finite-difference check of every dense parameter on a random
/// upstream-weighted sum of outputs.
pub fn dense_fd(seed: u64) -> FdReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = random_dense(&mut rng);
    let x = random_vec(&mut rng, net.input_width());
    let up = random_vec(&mut rng, net.output_width());
    let loss = |n: &DenseNet| -> f64 {
        n.forward(&x).unwrap().iter().zip(&up).map(|(a, b)| a * b).sum()
    };
    let trace = net.forward_trace(&x).unwrap();
    let (grads, _) = net.backward(&trace, &up).unwrap();
    let base_signs = relu_signs(&net, &x);
    let mut report = FdReport::default();
    for t in 0..grads.tensors.len() {
        for i in 0..grads.tensors[t].len() {
            let orig = net.tensors()[t][i];
            net.tensors_mut()[t][i] = orig + FD_STEP;
            let plus = loss(&net);
            let kink_p = relu_signs(&net, &x) != base_signs;
            net.tensors_mut()[t][i] = orig - FD_STEP;
            let minus = loss(&net);
            let kink_m = relu_signs(&net, &x) != base_signs;
            net.tensors_mut()[t][i] = orig;
            if kink_p || kink_m {
                report.skipped_kinks += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            report.floored += usize::from(grads.tensors[t][i].abs().max(numeric.abs()) < FD_FLOOR);
            report.worst = report.worst.max(worst_relative_error(grads.tensors[t][i], numeric));
            report.checked += 1;
        }
    }
    report
}

/// Finite-difference check of every LSTM parameter over sequences of
/// length 1 to 4.
pub fn lstm_fd(seed: u64) -> FdReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = random_lstm(&mut rng);
    let mut total = FdReport::default();
    for len in 1..=4 {
        let xs: Vec<Vec<f64>> = (0..len).map(|_| random_vec(&mut rng, net.input_width())).collect();
        let up = rng.random_range(-2.0..2.0);
        let (_, grads) = net.backward_sequence(&xs, up).unwrap();
        let mut report = FdReport::default();
        for t in 0..grads.tensors.len() {
            for i in 0..grads.tensors[t].len() {
                let orig = net.tensors()[t][i];
                net.tensors_mut()[t][i] = orig + FD_STEP;
                let plus = up * net.forward_sequence(&xs).unwrap();
                net.tensors_mut()[t][i] = orig - FD_STEP;
                let minus = up * net.forward_sequence(&xs).unwrap();
                net.tensors_mut()[t][i] = orig;
                // ReLU kinks in the head are possible but vanishingly rare
                // with these input ranges; they would show up as failures.
                let numeric = (plus - minus) / (2.0 * FD_STEP);
                report.floored += usize::from(grads.tensors[t][i].abs().max(numeric.abs()) < FD_FLOOR);
                report.worst = report.worst.max(worst_relative_error(grads.tensors[t][i], numeric));
                report.checked += 1;
            }
        }
        total.merge(report);
    }
    total
}

/// Straightforward dense forward pass.
pub fn oracle_dense(net: &DenseNet, x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    for l in &net.layers {
        let mut out = Vec::with_capacity(l.outputs);
        for r in 0..l.outputs {
            let mut z = l.bias[r];
            for c in 0..l.inputs {
                z += l.weights[r * l.inputs + c] * a[c];
            }
            out.push(match l.activation {
                Activation::Linear => z,
                Activation::Relu => z.max(0.0),
                Activation::Tanh => z.tanh(),
                Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            });
        }
        a = out;
    }
    a
}

fn sig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Straightforward stacked-LSTM forward pass over a sequence.
pub fn oracle_lstm(net: &LstmNet, xs: &[Vec<f64>]) -> f64 {
    let mut seq: Vec<Vec<f64>> = xs.to_vec();
    for layer in &net.lstm {
        let LstmLayer {
            inputs,
            hidden: hd,
            w_input,
            w_recurrent,
            bias,
        } = layer;
        let (n, hd) = (*inputs, *hd);
        let mut h = vec![0.0; hd];
        let mut c = vec![0.0; hd];
        let mut out = Vec::new();
        for x in &seq {
            let gate = |g: usize, j: usize| -> f64 {
                let row = g * hd + j;
                let mut z = bias[row];
                for k in 0..n {
                    z += w_input[row * n + k] * x[k];
                }
                for k in 0..hd {
                    z += w_recurrent[row * hd + k] * h[k];
                }
                z
            };
            let mut h_new = vec![0.0; hd];
            let mut c_new = vec![0.0; hd];
            for j in 0..hd {
                let i = sig(gate(0, j));
                let f = sig(gate(1, j));
                let g = gate(2, j).tanh();
                let o = sig(gate(3, j));
                c_new[j] = f * c[j] + i * g;
                h_new[j] = o * c_new[j].tanh();
            }
            h = h_new;
            c = c_new;
            out.push(h.clone());
        }
        seq = out;
    }
    oracle_dense(&net.head, seq.last().unwrap())[0]
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
