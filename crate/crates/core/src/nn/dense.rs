use rand::Rng;

use super::{matvec_acc, matvec_t_acc, outer_acc, uniform_init, Activation, Gradients, Parameters};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        DenseLayer {
            inputs,
            outputs,
            weights: uniform_init(rng, inputs, inputs * outputs),
            bias: uniform_init(rng, inputs, outputs),
            activation,
        }
    }

    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        DenseLayer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            activation,
        }
    }

    fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.bias.clone();
        matvec_acc(&self.weights, x, &mut z);
        z
    }
}

/// Feed-forward net; ReLU on hidden layers and a linear output by default.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    pub layers: Vec<DenseLayer>,
}

/// Values kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct DenseTrace {
    /// Input to each layer; `inputs[0]` is the network input.
    pub inputs: Vec<Vec<f64>>,
    pub pre_activations: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

impl DenseNet {
    /// `widths = [input, hidden.., output]`.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Self {
        assert!(widths.len() >= 2, "a dense net needs input and output widths");
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last {
                    Activation::Linear
                } else {
                    Activation::Relu
                };
                DenseLayer::new(w[0], w[1], act, rng)
            })
            .collect();
        DenseNet { layers }
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::shape("dense net without layers"));
        }
        for w in layers.windows(2) {
            if w[0].outputs != w[1].inputs {
                return Err(Error::shape(format!(
                    "layer output {} feeds layer input {}",
                    w[0].outputs, w[1].inputs
                )));
            }
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::shape("layer parameter length does not match its widths"));
            }
        }
        Ok(DenseNet { layers })
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_width()];
        w.extend(self.layers.iter().map(|l| l.outputs));
        w
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_width() {
            return Err(Error::Dimension {
                expected: self.input_width(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        for layer in &self.layers {
            let mut z = layer.pre_activation(&a);
            for v in z.iter_mut() {
                *v = layer.activation.apply(*v);
            }
            a = z;
        }
        Ok(a)
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<DenseTrace> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_vec();
        for layer in &self.layers {
            let z = layer.pre_activation(&a);
            let next = z.iter().map(|&v| layer.activation.apply(v)).collect();
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        Ok(DenseTrace {
            inputs,
            pre_activations: pre,
            output: a,
        })
    }

    /// Back-propagates `upstream = dL/d(output)` through a recorded pass.
    /// Returns parameter gradients and `dL/d(input)`.
    pub fn backward(&self, trace: &DenseTrace, upstream: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        if upstream.len() != self.output_width() {
            return Err(Error::Dimension {
                expected: self.output_width(),
                got: upstream.len(),
            });
        }
        let mut grads = Gradients::zeros_like(self);
        let mut delta_out = upstream.to_vec();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let dz: Vec<f64> = delta_out
                .iter()
                .zip(&trace.pre_activations[li])
                .map(|(d, &z)| d * layer.activation.derivative(z))
                .collect();
            outer_acc(&mut grads.tensors[2 * li], &dz, &trace.inputs[li]);
            for (g, d) in grads.tensors[2 * li + 1].iter_mut().zip(&dz) {
                *g += d;
            }
            let mut dx = vec![0.0; layer.inputs];
            matvec_t_acc(&layer.weights, &dz, &mut dx);
            delta_out = dx;
        }
        Ok((grads, delta_out))
    }
}

impl Parameters for DenseNet {
    fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    fn shapes(&self) -> Vec<Vec<usize>> {
        self.layers
            .iter()
            .flat_map(|l| [vec![l.outputs, l.inputs], vec![l.outputs]])
            .collect()
    }
}

pub fn dense_forward(net: &DenseNet, x: &[f64]) -> Result<Vec<f64>> {
    net.forward(x)
}

pub fn dense_backward(net: &DenseNet, x: &[f64], upstream: &[f64]) -> Result<(Gradients, Vec<f64>)> {
    let trace = net.forward_trace(x)?;
    net.backward(&trace, upstream)
}
