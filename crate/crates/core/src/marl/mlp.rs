//! Fully connected networks with leaky-ReLU hidden layers and hand-written
//! backpropagation.

use std::fmt::Debug;

use ndarray::{Array1, Array2, ArrayView2, Axis, LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive};
use rand::Rng;
use rand_distr::uniform::SampleUniform;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Floating-point element type of a network.
pub trait Scalar:
    Float
    + FromPrimitive
    + LinalgScalar
    + ScalarOperand
    + SampleUniform
    + Serialize
    + DeserializeOwned
    + Debug
    + Default
    + Send
    + Sync
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + 'static
{
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Negative-side slope of the hidden activation.
pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum ShapeError {
    #[error("input has {actual} columns, network expects {expected}")]
    InputDim { expected: usize, actual: usize },
    #[error("parameter shapes differ: {0}")]
    Mismatch(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Tanh,
    Identity,
}

/// Affine layer `y = x W + b` with `W` stored input-major (`in × out`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense<F> {
    pub weight: Array2<F>,
    pub bias: Array1<F>,
}

impl<F: Scalar> Dense<F> {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            weight: Array2::zeros((n_in, n_out)),
            bias: Array1::zeros(n_out),
        }
    }

    /// Uniform `±1/sqrt(fan_in)` for weights and biases.
    pub fn init<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (n_in as f64).sqrt();
        let (lo, hi) = (F::lit(-bound), F::lit(bound));
        Self {
            weight: Array2::from_shape_simple_fn((n_in, n_out), || rng.random_range(lo..hi)),
            bias: Array1::from_shape_simple_fn(n_out, || rng.random_range(lo..hi)),
        }
    }

    fn same_shape(&self, other: &Dense<F>) -> bool {
        self.weight.dim() == other.weight.dim() && self.bias.dim() == other.bias.dim()
    }
}

/// Multi-layer perceptron. `layers.len() - 1` hidden layers, each followed by
/// a leaky ReLU; the last layer uses `output`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp<F> {
    layers: Vec<Dense<F>>,
    output: OutputActivation,
}

/// Intermediate values kept for the backward pass.
pub struct ForwardCache<F> {
    inputs: Vec<Array2<F>>,
    pre: Vec<Array2<F>>,
    pub output: Array2<F>,
}

/// Gradients, laid out like the network's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads<F> {
    pub layers: Vec<Dense<F>>,
}

impl<F: Scalar> MlpGrads<F> {
    pub fn global_norm(&self) -> F {
        let mut acc = F::zero();
        for l in &self.layers {
            acc += l.weight.iter().fold(F::zero(), |a, &g| a + g * g);
            acc += l.bias.iter().fold(F::zero(), |a, &g| a + g * g);
        }
        acc.sqrt()
    }

    pub fn scale(&mut self, s: F) {
        for l in &mut self.layers {
            l.weight.mapv_inplace(|g| g * s);
            l.bias.mapv_inplace(|g| g * s);
        }
    }

    /// Rescales to global norm `max_norm` if larger; returns whether it clipped.
    pub fn clip_global_norm(&mut self, max_norm: F) -> bool {
        let n = self.global_norm();
        if n > max_norm && n.is_finite() {
            self.scale(max_norm / n);
            true
        } else {
            false
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().all(|g| g.is_finite()) && l.bias.iter().all(|g| g.is_finite()))
    }
}

fn leaky<F: Scalar>(x: F) -> F {
    if x > F::zero() {
        x
    } else {
        x * F::lit(LEAKY_SLOPE)
    }
}

fn leaky_grad<F: Scalar>(x: F) -> F {
    if x > F::zero() {
        F::one()
    } else {
        F::lit(LEAKY_SLOPE)
    }
}

impl<F: Scalar> Mlp<F> {
    /// `sizes = [input, hidden.., output]`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], output: OutputActivation, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let layers = sizes.windows(2).map(|w| Dense::init(w[0], w[1], rng)).collect();
        Self { layers, output }
    }

    pub fn from_layers(layers: Vec<Dense<F>>, output: OutputActivation) -> Result<Self, ShapeError> {
        if layers.is_empty() {
            return Err(ShapeError::Mismatch("no layers".into()));
        }
        for (k, w) in layers.windows(2).enumerate() {
            if w[0].weight.ncols() != w[1].weight.nrows() {
                return Err(ShapeError::Mismatch(format!("layer {k} output does not feed layer {}", k + 1)));
            }
        }
        for (k, l) in layers.iter().enumerate() {
            if l.bias.len() != l.weight.ncols() {
                return Err(ShapeError::Mismatch(format!("layer {k} bias length")));
            }
        }
        Ok(Self { layers, output })
    }

    /// Same architecture, every parameter zero.
    pub fn zeroed(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.weight.nrows(), l.weight.ncols()))
                .collect(),
            output: self.output,
        }
    }

    pub fn layers(&self) -> &[Dense<F>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<F>] {
        &mut self.layers
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].weight.ncols()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().all(|w| w.is_finite()) && l.bias.iter().all(|b| b.is_finite()))
    }

    fn check_input(&self, x: &ArrayView2<F>) -> Result<(), ShapeError> {
        if x.ncols() != self.input_dim() {
            return Err(ShapeError::InputDim {
                expected: self.input_dim(),
                actual: x.ncols(),
            });
        }
        Ok(())
    }

    fn activate_output(&self, z: &mut Array2<F>) {
        if self.output == OutputActivation::Tanh {
            z.mapv_inplace(|v| v.tanh());
        }
    }

    /// Batch forward pass; rows are samples.
    pub fn forward(&self, x: ArrayView2<F>) -> Result<Array2<F>, ShapeError> {
        self.check_input(&x)?;
        let mut h = x.dot(&self.layers[0].weight) + &self.layers[0].bias;
        for layer in &self.layers[1..] {
            h.mapv_inplace(leaky);
            h = h.dot(&layer.weight) + &layer.bias;
        }
        self.activate_output(&mut h);
        Ok(h)
    }

    pub fn forward_cached(&self, x: ArrayView2<F>) -> Result<ForwardCache<F>, ShapeError> {
        self.check_input(&x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for (k, layer) in self.layers.iter().enumerate() {
            let z = h.dot(&layer.weight) + &layer.bias;
            inputs.push(h);
            h = if k + 1 < self.layers.len() { z.mapv(leaky) } else { z.clone() };
            pre.push(z);
        }
        self.activate_output(&mut h);
        Ok(ForwardCache { inputs, pre, output: h })
    }

    fn output_delta(&self, cache: &ForwardCache<F>, d_out: &Array2<F>) -> Array2<F> {
        match self.output {
            OutputActivation::Identity => d_out.clone(),
            OutputActivation::Tanh => {
                let mut d = d_out.clone();
                ndarray::Zip::from(&mut d)
                    .and(&cache.output)
                    .for_each(|g, &y| *g *= F::one() - y * y);
                d
            }
        }
    }

    /// Gradients of a scalar loss with respect to the parameters and the
    /// input, given `d_out = ∂loss/∂output`.
    pub fn backward(&self, cache: &ForwardCache<F>, d_out: &Array2<F>) -> (MlpGrads<F>, Array2<F>) {
        let mut delta = self.output_delta(cache, d_out);
        let mut grads = Vec::with_capacity(self.layers.len());
        for k in (0..self.layers.len()).rev() {
            let gw = cache.inputs[k].t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            grads.push(Dense { weight: gw, bias: gb });
            let mut d_in = delta.dot(&self.layers[k].weight.t());
            if k > 0 {
                ndarray::Zip::from(&mut d_in)
                    .and(&cache.pre[k - 1])
                    .for_each(|g, &z| *g *= leaky_grad(z));
            }
            delta = d_in;
        }
        grads.reverse();
        (MlpGrads { layers: grads }, delta)
    }

    /// Only `∂loss/∂input`; skips the weight gradients.
    pub fn input_grad(&self, cache: &ForwardCache<F>, d_out: &Array2<F>) -> Array2<F> {
        let mut delta = self.output_delta(cache, d_out);
        for k in (0..self.layers.len()).rev() {
            let mut d_in = delta.dot(&self.layers[k].weight.t());
            if k > 0 {
                ndarray::Zip::from(&mut d_in)
                    .and(&cache.pre[k - 1])
                    .for_each(|g, &z| *g *= leaky_grad(z));
            }
            delta = d_in;
        }
        delta
    }

    /// Plain gradient step `θ ← θ - lr g`.
    pub fn sgd_step(&mut self, grads: &MlpGrads<F>, lr: F) {
        for (p, g) in self.layers.iter_mut().zip(&grads.layers) {
            p.weight.scaled_add(-lr, &g.weight);
            p.bias.scaled_add(-lr, &g.bias);
        }
    }

    /// `self ← (1 - tau) self + tau source`.
    pub fn soft_update(&mut self, source: &Mlp<F>, tau: F) -> Result<(), ShapeError> {
        if self.layers.len() != source.layers.len()
            || self.layers.iter().zip(&source.layers).any(|(a, b)| !a.same_shape(b))
        {
            return Err(ShapeError::Mismatch("soft update between different architectures".into()));
        }
        let keep = F::one() - tau;
        for (t, s) in self.layers.iter_mut().zip(&source.layers) {
            ndarray::Zip::from(&mut t.weight)
                .and(&s.weight)
                .for_each(|t, &s| *t = keep * *t + tau * s);
            ndarray::Zip::from(&mut t.bias)
                .and(&s.bias)
                .for_each(|t, &s| *t = keep * *t + tau * s);
        }
        Ok(())
    }

    /// Flattened parameters in layer order (weights row-major, then bias).
    pub fn flat_params(&self) -> Vec<F> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend(l.weight.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[F]) {
        assert_eq!(flat.len(), self.n_params());
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            for w in l.weight.iter_mut() {
                *w = it.next().unwrap();
            }
            for b in l.bias.iter_mut() {
                *b = it.next().unwrap();
            }
        }
    }

    /// Converts the element type (used to check f32 networks in f64).
    pub fn cast<G: Scalar>(&self) -> Mlp<G> {
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weight: l.weight.mapv(|w| G::lit(w.to_f64().unwrap())),
                    bias: l.bias.mapv(|b| G::lit(b.to_f64().unwrap())),
                })
                .collect(),
            output: self.output,
        }
    }
}

impl<F: Scalar> MlpGrads<F> {
    pub fn flat(&self) -> Vec<F> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.weight.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out
    }
}

/// Adam optimizer state for one network.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Adam<F> {
    lr: F,
    beta1: F,
    beta2: F,
    eps: F,
    step: i32,
    m: Vec<Dense<F>>,
    v: Vec<Dense<F>>,
}

impl<F: Scalar> Adam<F> {
    pub fn new(net: &Mlp<F>, lr: F) -> Self {
        let zeros: Vec<Dense<F>> = net.zeroed().layers;
        Self {
            lr,
            beta1: F::lit(0.9),
            beta2: F::lit(0.999),
            eps: F::lit(1e-8),
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn lr(&self) -> F {
        self.lr
    }

    pub fn apply(&mut self, net: &mut Mlp<F>, grads: &MlpGrads<F>) {
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = F::one() - b1.powi(self.step);
        let c2 = F::one() - b2.powi(self.step);
        let step_size = self.lr / c1;
        let eps = self.eps;
        let one = F::one();
        for (((p, g), m), v) in net
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            ndarray::Zip::from(&mut p.weight)
                .and(&g.weight)
                .and(&mut m.weight)
                .and(&mut v.weight)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (one - b1) * g;
                    *v = b2 * *v + (one - b2) * g * g;
                    *p -= step_size * *m / ((*v / c2).sqrt() + eps);
                });
            ndarray::Zip::from(&mut p.bias)
                .and(&g.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (one - b1) * g;
                    *v = b2 * *v + (one - b2) * g * g;
                    *p -= step_size * *m / ((*v / c2).sqrt() + eps);
                });
        }
    }
}

#[cfg(test)]
mod tests {
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    /// Reference forward pass written with explicit loops.
    fn naive_forward(net: &Mlp<f64>, x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        let n = net.layers().len();
        for (k, l) in net.layers().iter().enumerate() {
            let mut z = vec![0.0; l.weight.ncols()];
            for (j, zj) in z.iter_mut().enumerate() {
                let mut s = l.bias[j];
                for (i, hi) in h.iter().enumerate() {
                    s += hi * l.weight[[i, j]];
                }
                *zj = s;
            }
            h = if k + 1 < n {
                z.into_iter().map(|v| if v > 0.0 { v } else { 0.01 * v }).collect()
            } else {
                z
            };
        }
        if net.output_activation() == OutputActivation::Tanh {
            h.iter_mut().for_each(|v| *v = v.tanh());
        }
        h
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let actor = Mlp::<f64>::new(&[5, 8, 8, 2], OutputActivation::Tanh, &mut rng).zeroed();
        let y = actor.forward(array![[1.0, -2.0, 3.0, 0.5, 0.1]].view()).unwrap();
        assert_eq!(y, array![[0.0, 0.0]]);
    }

    #[test]
    fn matches_loop_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for out in [OutputActivation::Tanh, OutputActivation::Identity] {
            let net = Mlp::<f64>::new(&[6, 7, 5, 3], out, &mut rng);
            let x: Array2<f64> = Array2::from_shape_fn((4, 6), |(i, j)| ((i * 6 + j) as f64 * 0.37).sin() * 2.0);
            let y = net.forward(x.view()).unwrap();
            for r in 0..4 {
                let expect = naive_forward(&net, x.row(r).as_slice().unwrap());
                for (a, b) in y.row(r).iter().zip(&expect) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
            let cached = net.forward_cached(x.view()).unwrap();
            assert_eq!(cached.output, y);
        }
    }

    #[test]
    fn tanh_output_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::<f64>::new(&[3, 4, 2], OutputActivation::Tanh, &mut rng);
        let x = array![[100.0, -300.0, 50.0], [1e-3, 0.0, -1e-3]];
        assert!(net.forward(x.view()).unwrap().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn rejects_wrong_input_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::<f64>::new(&[3, 4, 2], OutputActivation::Tanh, &mut rng);
        assert_eq!(
            net.forward(array![[1.0, 2.0]].view()).unwrap_err(),
            ShapeError::InputDim { expected: 3, actual: 2 }
        );
    }

    #[test]
    fn soft_update_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let src = Mlp::<f64>::new(&[3, 4, 1], OutputActivation::Identity, &mut rng);
        let mut tgt = src.zeroed();
        let before = tgt.clone();
        tgt.soft_update(&src, 0.0).unwrap();
        assert_eq!(tgt, before);
        tgt.soft_update(&src, 1.0).unwrap();
        assert_eq!(tgt, src);

        let one = Mlp::from_layers(vec![Dense { weight: array![[1.0]], bias: array![1.0] }], OutputActivation::Identity).unwrap();
        let mut zero = one.zeroed();
        zero.soft_update(&one, 0.01).unwrap();
        assert_eq!(zero.layers()[0].weight[[0, 0]], 0.01);

        let other = Mlp::<f64>::new(&[3, 5, 1], OutputActivation::Identity, &mut rng);
        assert!(tgt.soft_update(&other, 0.5).is_err());
    }

    #[test]
    fn clip_scales_to_max_norm() {
        let mut g = MlpGrads {
            layers: vec![Dense { weight: array![[3.0]], bias: array![4.0] }],
        };
        assert!(g.clip_global_norm(1.0));
        assert!((g.global_norm() - 1.0).abs() < 1e-12);
        assert!(!g.clip_global_norm(2.0));
    }

    #[test]
    fn adam_moves_against_gradient() {
        let mut net = Mlp::from_layers(vec![Dense { weight: array![[1.0]], bias: array![0.0] }], OutputActivation::Identity).unwrap();
        let mut opt = Adam::new(&net, 0.1);
        let g = MlpGrads {
            layers: vec![Dense { weight: array![[2.0]], bias: array![-1.0] }],
        };
        opt.apply(&mut net, &g);
        // First Adam step moves each coordinate by lr against the gradient sign.
        assert!((net.layers()[0].weight[[0, 0]] - 0.9).abs() < 1e-6);
        assert!((net.layers()[0].bias[0] - 0.1).abs() < 1e-6);
    }
}
