//! Stacked LSTM followed by a dense head with a single linear output.
//!
//! Per layer and time step, with gate rows ordered `[i, f, g, o]`:
//!
//! ```text
//! z = W_x x_t + W_h h_{t-1} + b
//! i = σ(z_i)  f = σ(z_f)  g = tanh(z_g)  o = σ(z_o)
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ```
//!
//! Initial hidden and cell states are zero. Every LSTM layer but the last
//! feeds its whole output sequence upward; the last hands only its final
//! hidden state to the head.

use rand::Rng;

use super::activation::sigmoid;
use super::{matvec_acc, matvec_t_acc, outer_acc, uniform_init, Activation, DenseLayer, DenseNet};
use super::{Gradients, Parameters};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    pub inputs: usize,
    pub hidden: usize,
    /// Row-major `4·hidden × inputs`.
    pub w_input: Vec<f64>,
    /// Row-major `4·hidden × hidden`.
    pub w_recurrent: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LstmLayer {
    pub fn new<R: Rng + ?Sized>(inputs: usize, hidden: usize, rng: &mut R) -> Self {
        let fan_in = inputs + hidden;
        LstmLayer {
            inputs,
            hidden,
            w_input: uniform_init(rng, fan_in, 4 * hidden * inputs),
            w_recurrent: uniform_init(rng, fan_in, 4 * hidden * hidden),
            bias: uniform_init(rng, fan_in, 4 * hidden),
        }
    }

    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        LstmLayer {
            inputs,
            hidden,
            w_input: vec![0.0; 4 * hidden * inputs],
            w_recurrent: vec![0.0; 4 * hidden * hidden],
            bias: vec![0.0; 4 * hidden],
        }
    }
}

struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates `[i, f, g, o]`.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl LstmLayer {
    fn run(&self, xs: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<StepCache>) {
        let h = self.hidden;
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        let mut outs = Vec::with_capacity(xs.len());
        let mut caches = Vec::with_capacity(xs.len());
        for x in xs {
            let mut z = self.bias.clone();
            matvec_acc(&self.w_input, x, &mut z);
            matvec_acc(&self.w_recurrent, &h_prev, &mut z);
            let mut gates = z;
            for (k, v) in gates.iter_mut().enumerate() {
                *v = if (2 * h..3 * h).contains(&k) {
                    v.tanh()
                } else {
                    sigmoid(*v)
                };
            }
            let (i, rest) = gates.split_at(h);
            let (f, rest) = rest.split_at(h);
            let (g, o) = rest.split_at(h);
            let c: Vec<f64> = (0..h).map(|j| f[j] * c_prev[j] + i[j] * g[j]).collect();
            let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
            let h_new: Vec<f64> = (0..h).map(|j| o[j] * tanh_c[j]).collect();
            caches.push(StepCache {
                x: x.clone(),
                h_prev: std::mem::replace(&mut h_prev, h_new.clone()),
                c_prev: std::mem::replace(&mut c_prev, c),
                gates,
                tanh_c,
            });
            outs.push(h_new);
        }
        (outs, caches)
    }

    /// BPTT given external gradients on each step's hidden output. Writes
    /// parameter gradients into `gw_in`, `gw_rec`, `gb` and returns the
    /// gradient with respect to each step's input.
    fn backprop(
        &self,
        caches: &[StepCache],
        dh_ext: &[Vec<f64>],
        gw_in: &mut [f64],
        gw_rec: &mut [f64],
        gb: &mut [f64],
    ) -> Vec<Vec<f64>> {
        let h = self.hidden;
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dxs = vec![Vec::new(); caches.len()];
        for t in (0..caches.len()).rev() {
            let s = &caches[t];
            let (i, rest) = s.gates.split_at(h);
            let (f, rest) = rest.split_at(h);
            let (g, o) = rest.split_at(h);
            let mut dz = vec![0.0; 4 * h];
            for j in 0..h {
                let dh = dh_ext[t][j] + dh_next[j];
                let tc = s.tanh_c[j];
                let dc = dc_next[j] + dh * o[j] * (1.0 - tc * tc);
                let d_o = dh * tc;
                let d_i = dc * g[j];
                let d_g = dc * i[j];
                let d_f = dc * s.c_prev[j];
                dz[j] = d_i * i[j] * (1.0 - i[j]);
                dz[h + j] = d_f * f[j] * (1.0 - f[j]);
                dz[2 * h + j] = d_g * (1.0 - g[j] * g[j]);
                dz[3 * h + j] = d_o * o[j] * (1.0 - o[j]);
                dc_next[j] = dc * f[j];
            }
            outer_acc(gw_in, &dz, &s.x);
            outer_acc(gw_rec, &dz, &s.h_prev);
            for (b, d) in gb.iter_mut().zip(&dz) {
                *b += d;
            }
            let mut dx = vec![0.0; self.inputs];
            matvec_t_acc(&self.w_input, &dz, &mut dx);
            dxs[t] = dx;
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            matvec_t_acc(&self.w_recurrent, &dz, &mut dh_next);
        }
        dxs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmNet {
    pub lstm: Vec<LstmLayer>,
    pub head: DenseNet,
}

impl LstmNet {
    /// `lstm_widths` are the stacked hidden sizes; `dense_widths` the ReLU
    /// layers of the head before its single linear output.
    pub fn new<R: Rng + ?Sized>(
        input: usize,
        lstm_widths: &[usize],
        dense_widths: &[usize],
        rng: &mut R,
    ) -> Self {
        assert!(!lstm_widths.is_empty(), "at least one LSTM layer");
        let mut lstm = Vec::with_capacity(lstm_widths.len());
        let mut prev = input;
        for &w in lstm_widths {
            lstm.push(LstmLayer::new(prev, w, rng));
            prev = w;
        }
        let mut head_widths = vec![prev];
        head_widths.extend_from_slice(dense_widths);
        head_widths.push(1);
        LstmNet {
            lstm,
            head: DenseNet::new(&head_widths, rng),
        }
    }

    pub fn zeros(input: usize, lstm_widths: &[usize], dense_widths: &[usize]) -> Self {
        let mut lstm = Vec::new();
        let mut prev = input;
        for &w in lstm_widths {
            lstm.push(LstmLayer::zeros(prev, w));
            prev = w;
        }
        let mut layers = Vec::new();
        for &w in dense_widths {
            layers.push(DenseLayer::zeros(prev, w, Activation::Relu));
            prev = w;
        }
        layers.push(DenseLayer::zeros(prev, 1, Activation::Linear));
        LstmNet {
            lstm,
            head: DenseNet { layers },
        }
    }

    pub fn from_parts(lstm: Vec<LstmLayer>, head: DenseNet) -> Result<Self> {
        if lstm.is_empty() {
            return Err(Error::shape("LSTM net without recurrent layers"));
        }
        for w in lstm.windows(2) {
            if w[0].hidden != w[1].inputs {
                return Err(Error::shape("LSTM layer widths do not chain"));
            }
        }
        for l in &lstm {
            let h4 = 4 * l.hidden;
            if l.w_input.len() != h4 * l.inputs
                || l.w_recurrent.len() != h4 * l.hidden
                || l.bias.len() != h4
            {
                return Err(Error::shape("LSTM parameter length does not match its widths"));
            }
        }
        if head.input_width() != lstm[lstm.len() - 1].hidden || head.output_width() != 1 {
            return Err(Error::shape("head must map the last hidden state to one output"));
        }
        Ok(LstmNet { lstm, head })
    }

    pub fn input_width(&self) -> usize {
        self.lstm[0].inputs
    }

    fn check(&self, xs: &[Vec<f64>]) -> Result<()> {
        if xs.is_empty() {
            return Err(Error::shape("empty input sequence"));
        }
        for x in xs {
            if x.len() != self.input_width() {
                return Err(Error::Dimension {
                    expected: self.input_width(),
                    got: x.len(),
                });
            }
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.forward_sequence(&[x.to_vec()])
    }

    pub fn forward_sequence(&self, xs: &[Vec<f64>]) -> Result<f64> {
        self.check(xs)?;
        let mut seq = xs.to_vec();
        for layer in &self.lstm {
            seq = layer.run(&seq).0;
        }
        let last = seq.pop().expect("non-empty sequence");
        Ok(self.head.forward(&last)?[0])
    }

    /// Forward value and parameter gradients of `upstream · output`.
    pub fn backward_sequence(&self, xs: &[Vec<f64>], upstream: f64) -> Result<(f64, Gradients)> {
        self.check(xs)?;
        let mut caches = Vec::with_capacity(self.lstm.len());
        let mut seq = xs.to_vec();
        for layer in &self.lstm {
            let (out, cache) = layer.run(&seq);
            caches.push(cache);
            seq = out;
        }
        let steps = xs.len();
        let trace = self.head.forward_trace(&seq[steps - 1])?;
        let output = trace.output[0];
        let (head_grads, d_last) = self.head.backward(&trace, &[upstream])?;

        let mut grads = Gradients::zeros_like(self);
        let n_lstm = self.lstm.len();
        for (k, g) in head_grads.tensors.into_iter().enumerate() {
            grads.tensors[3 * n_lstm + k] = g;
        }
        let mut dh_ext = vec![vec![0.0; self.lstm[n_lstm - 1].hidden]; steps];
        dh_ext[steps - 1] = d_last;
        for li in (0..n_lstm).rev() {
            let (gw_in, rest) = grads.tensors[3 * li..3 * li + 3].split_at_mut(1);
            let (gw_rec, gb) = rest.split_at_mut(1);
            dh_ext = self.lstm[li].backprop(&caches[li], &dh_ext, &mut gw_in[0], &mut gw_rec[0], &mut gb[0]);
        }
        Ok((output, grads))
    }

    pub fn backward(&self, x: &[f64], upstream: f64) -> Result<(f64, Gradients)> {
        self.backward_sequence(&[x.to_vec()], upstream)
    }
}

impl Parameters for LstmNet {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t: Vec<&[f64]> = self
            .lstm
            .iter()
            .flat_map(|l| [l.w_input.as_slice(), l.w_recurrent.as_slice(), l.bias.as_slice()])
            .collect();
        t.extend(self.head.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t: Vec<&mut [f64]> = self
            .lstm
            .iter_mut()
            .flat_map(|l| {
                [
                    l.w_input.as_mut_slice(),
                    l.w_recurrent.as_mut_slice(),
                    l.bias.as_mut_slice(),
                ]
            })
            .collect();
        t.extend(self.head.tensors_mut());
        t
    }

    fn shapes(&self) -> Vec<Vec<usize>> {
        let mut s: Vec<Vec<usize>> = self
            .lstm
            .iter()
            .flat_map(|l| {
                [
                    vec![4 * l.hidden, l.inputs],
                    vec![4 * l.hidden, l.hidden],
                    vec![4 * l.hidden],
                ]
            })
            .collect();
        s.extend(self.head.shapes());
        s
    }
}

pub fn lstm_forward(net: &LstmNet, x: &[f64]) -> Result<f64> {
    net.forward(x)
}

/// Parameter gradients of `upstream · lstm_forward(net, x)`.
pub fn lstm_backward(net: &LstmNet, x: &[f64], upstream: f64) -> Result<Gradients> {
    Ok(net.backward(x, upstream)?.1)
}
