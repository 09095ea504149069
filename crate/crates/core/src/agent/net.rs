//! Fully connected policy/value network with hand-written backpropagation.
//!
//! The body is `L` ReLU layers of equal width; the policy head is linear over
//! the board cells (illegal cells are masked at the softmax) and the value
//! head is a single tanh unit.

use std::fmt::Debug;

use ndarray::{Array1, Array2, ArrayView2, Axis, LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::board::FeatureVector;
use crate::seed::rng_for;

/// Element type of a network: `f32` for training and play, `f64` for
/// gradient checks.
pub trait Scalar: Float + FromPrimitive + LinalgScalar + ScalarOperand + Debug + Send + Sync + 'static {}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub size: usize,
    pub layers: usize,
    pub width: usize,
    pub seed: u64,
    /// Coefficient `c` of the squared-norm penalty.
    pub l2: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self { size: 5, layers: 4, width: 128, seed: 0, l2: 1e-4, learning_rate: 1e-3, batch_size: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NetError {
    #[error("network config needs layers >= 1, width >= 1 and size >= 1")]
    BadConfig,
    #[error("input has length {got}, expected {expected}")]
    Shape { expected: usize, got: usize },
    #[error("target policy sums to {0}, expected 1")]
    PolicyNotNormalised(String),
    #[error("target policy puts mass on an occupied cell")]
    PolicyOnIllegalMove,
    #[error("value target {0} is not -1 or 1")]
    BadValueTarget(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense<F> {
    /// `out x in`.
    pub w: Array2<F>,
    pub b: Array1<F>,
}

impl<F: Scalar> Dense<F> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { w: Array2::zeros((outputs, inputs)), b: Array1::zeros(outputs) }
    }

    fn apply(&self, x: &ArrayView2<F>) -> Array2<F> {
        x.dot(&self.w.t()) + &self.b
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network<F> {
    pub size: usize,
    pub body: Vec<Dense<F>>,
    pub policy: Dense<F>,
    pub value: Dense<F>,
}

/// Body activations for one board: `layers[0]` is the input, `layers[l]` the
/// output of body layer `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationRecord {
    pub layers: Vec<Vec<f32>>,
}

pub struct ForwardOutput<F> {
    pub logits: Vec<F>,
    pub value: F,
    pub activations: ActivationRecord,
}

/// Everything kept from a batched forward pass for backpropagation.
struct Cache<F> {
    /// Input followed by every body layer's output.
    acts: Vec<Array2<F>>,
    logits: Array2<F>,
    values: Array1<F>,
}

/// One training example: canonical features, target policy over all cells
/// (zero on occupied cells) and the final outcome for the mover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f32>,
    pub policy: Vec<f32>,
    pub z: f32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossTerms<F> {
    pub total: F,
    pub value: F,
    pub policy: F,
    pub reg: F,
}

fn cast<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("representable")
}

/// Cells that are legal in a canonical feature vector: both planes empty.
pub fn legal_mask(features: &[f32], cells: usize) -> Vec<bool> {
    (0..cells).map(|i| features[i] == 0.0 && features[cells + i] == 0.0).collect()
}

/// Softmax over the unmasked entries; masked entries get probability zero.
pub fn masked_softmax<F: Scalar>(logits: &[F], mask: &[bool]) -> Vec<F> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&l, _)| l)
        .fold(F::neg_infinity(), F::max);
    if max == F::neg_infinity() {
        return vec![F::zero(); logits.len()];
    }
    let exps: Vec<F> = logits.iter().zip(mask).map(|(&l, &m)| if m { (l - max).exp() } else { F::zero() }).collect();
    let sum = exps.iter().fold(F::zero(), |a, &b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

impl<F: Scalar> Network<F> {
    pub fn input_len(&self) -> usize {
        2 * self.size * self.size
    }

    pub fn cells(&self) -> usize {
        self.size * self.size
    }

    pub fn zeros(cfg: &NetworkConfig) -> Result<Self, NetError> {
        if cfg.layers == 0 || cfg.width == 0 || cfg.size == 0 {
            return Err(NetError::BadConfig);
        }
        let cells = cfg.size * cfg.size;
        let mut body = vec![Dense::zeros(2 * cells, cfg.width)];
        body.extend((1..cfg.layers).map(|_| Dense::zeros(cfg.width, cfg.width)));
        Ok(Self { size: cfg.size, body, policy: Dense::zeros(cfg.width, cells), value: Dense::zeros(cfg.width, 1) })
    }

    /// He-normal body weights, scaled-down head weights, zero biases.
    pub fn init(cfg: &NetworkConfig) -> Result<Self, NetError> {
        let mut net = Self::zeros(cfg)?;
        let mut rng = rng_for(cfg.seed, "network-init", 0);
        let mut fill = |w: &mut Array2<F>, std: f64| {
            let normal = Normal::new(0.0, std).expect("positive std");
            w.mapv_inplace(|_| cast(normal.sample(&mut rng)));
        };
        for layer in &mut net.body {
            let fan_in = layer.w.ncols() as f64;
            fill(&mut layer.w, (2.0 / fan_in).sqrt());
        }
        let fan_in = cfg.width as f64;
        fill(&mut net.policy.w, (1.0 / fan_in).sqrt() * 0.1);
        fill(&mut net.value.w, (1.0 / fan_in).sqrt() * 0.1);
        Ok(net)
    }

    /// Parameter tensors in their fixed order: each body layer's weights and
    /// biases, then the policy head, then the value head.
    pub fn params(&self) -> Vec<&[F]> {
        let mut out = Vec::new();
        for d in self.body.iter().chain([&self.policy, &self.value]) {
            out.push(d.w.as_slice().expect("standard layout"));
            out.push(d.b.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [F]> {
        let mut out = Vec::new();
        for d in self.body.iter_mut().chain([&mut self.policy, &mut self.value]) {
            out.push(d.w.as_slice_mut().expect("standard layout"));
            out.push(d.b.as_slice_mut().expect("standard layout"));
        }
        out
    }

    /// Names and shapes matching [`Network::params`].
    pub fn shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        let mut push = |name: String, d: &Dense<F>| {
            out.push((format!("{name}.w"), d.w.shape().to_vec()));
            out.push((format!("{name}.b"), d.b.shape().to_vec()));
        };
        for (i, d) in self.body.iter().enumerate() {
            push(format!("body{}", i + 1), d);
        }
        push("policy".into(), &self.policy);
        push("value".into(), &self.value);
        out
    }

    pub fn zeros_like(&self) -> Self {
        let z = |d: &Dense<F>| Dense { w: Array2::zeros(d.w.raw_dim()), b: Array1::zeros(d.b.raw_dim()) };
        Self { size: self.size, body: self.body.iter().map(z).collect(), policy: z(&self.policy), value: z(&self.value) }
    }

    pub fn squared_norm(&self) -> F {
        self.params().iter().flat_map(|p| p.iter()).fold(F::zero(), |a, &x| a + x * x)
    }

    pub fn map<G: Scalar>(&self, f: impl Fn(F) -> G + Copy) -> Network<G> {
        let m = |d: &Dense<F>| Dense { w: d.w.mapv(f), b: d.b.mapv(f) };
        Network { size: self.size, body: self.body.iter().map(m).collect(), policy: m(&self.policy), value: m(&self.value) }
    }

    fn forward_batch(&self, x: Array2<F>) -> Cache<F> {
        let mut acts = vec![x];
        for layer in &self.body {
            let h = layer.apply(&acts.last().expect("input").view()).mapv(|v| v.max(F::zero()));
            acts.push(h);
        }
        let last = acts.last().expect("body output").view();
        let logits = self.policy.apply(&last);
        let values = self.value.apply(&last).column(0).mapv(F::tanh);
        Cache { acts, logits, values }
    }

    pub fn forward(&self, fv: &FeatureVector) -> Result<ForwardOutput<F>, NetError> {
        self.forward_slice(fv.as_slice())
    }

    pub fn forward_slice(&self, features: &[f32]) -> Result<ForwardOutput<F>, NetError> {
        if features.len() != self.input_len() {
            return Err(NetError::Shape { expected: self.input_len(), got: features.len() });
        }
        let x = Array2::from_shape_fn((1, features.len()), |(_, j)| cast::<F>(f64::from(features[j])));
        let cache = self.forward_batch(x);
        let layers = cache
            .acts
            .iter()
            .map(|a| a.row(0).iter().map(|v| v.to_f32().unwrap_or(f32::NAN)).collect())
            .collect();
        Ok(ForwardOutput {
            logits: cache.logits.row(0).to_vec(),
            value: cache.values[0],
            activations: ActivationRecord { layers },
        })
    }

    fn batch_inputs(&self, batch: &[Sample]) -> Result<Array2<F>, NetError> {
        let cells = self.cells();
        for s in batch {
            if s.features.len() != self.input_len() {
                return Err(NetError::Shape { expected: self.input_len(), got: s.features.len() });
            }
            if s.policy.len() != cells {
                return Err(NetError::Shape { expected: cells, got: s.policy.len() });
            }
            let sum: f64 = s.policy.iter().map(|&p| f64::from(p)).sum();
            if (sum - 1.0).abs() > 1e-4 || s.policy.iter().any(|&p| p < 0.0) {
                return Err(NetError::PolicyNotNormalised(format!("{sum}")));
            }
            let mask = legal_mask(&s.features, cells);
            if s.policy.iter().zip(&mask).any(|(&p, &m)| p > 0.0 && !m) {
                return Err(NetError::PolicyOnIllegalMove);
            }
            if s.z != 1.0 && s.z != -1.0 {
                return Err(NetError::BadValueTarget(format!("{}", s.z)));
            }
        }
        Ok(Array2::from_shape_fn((batch.len(), self.input_len()), |(i, j)| cast(f64::from(batch[i].features[j]))))
    }

    /// Mean over the batch of `(z - v)^2 - pi . log p`, plus `c |theta|^2`.
    pub fn loss(&self, batch: &[Sample], c: f64) -> Result<LossTerms<F>, NetError> {
        Ok(self.loss_and_grad(batch, c, false)?.0)
    }

    /// Loss and, when `want_grad`, its gradient with respect to every
    /// parameter (laid out like the network itself).
    pub fn loss_and_grad(&self, batch: &[Sample], c: f64, want_grad: bool) -> Result<(LossTerms<F>, Option<Network<F>>), NetError> {
        let x = self.batch_inputs(batch)?;
        let n = cast::<F>(batch.len() as f64);
        let cells = self.cells();
        let cache = self.forward_batch(x);
        let mut value_term = F::zero();
        let mut policy_term = F::zero();
        let mut d_logits = Array2::<F>::zeros((batch.len(), cells));
        let mut d_vpre = Array2::<F>::zeros((batch.len(), 1));
        for (i, s) in batch.iter().enumerate() {
            let mask = legal_mask(&s.features, cells);
            let logits: Vec<F> = cache.logits.row(i).to_vec();
            let p = masked_softmax(&logits, &mask);
            let z = cast::<F>(f64::from(s.z));
            let v = cache.values[i];
            value_term = value_term + (z - v) * (z - v);
            for a in 0..cells {
                let pi = cast::<F>(f64::from(s.policy[a]));
                if pi > F::zero() {
                    policy_term = policy_term - pi * p[a].ln();
                }
                if mask[a] {
                    d_logits[[i, a]] = (p[a] - pi) / n;
                }
            }
            d_vpre[[i, 0]] = cast::<F>(2.0) * (v - z) * (F::one() - v * v) / n;
        }
        let reg = cast::<F>(c) * self.squared_norm();
        let terms = LossTerms {
            total: value_term / n + policy_term / n + reg,
            value: value_term / n,
            policy: policy_term / n,
            reg,
        };
        if !want_grad {
            return Ok((terms, None));
        }
        let mut g = self.zeros_like();
        let last = cache.acts.last().expect("body output");
        g.policy.w = d_logits.t().dot(last);
        g.policy.b = d_logits.sum_axis(Axis(0));
        g.value.w = d_vpre.t().dot(last);
        g.value.b = d_vpre.sum_axis(Axis(0));
        let mut dh = d_logits.dot(&self.policy.w) + d_vpre.dot(&self.value.w);
        for l in (0..self.body.len()).rev() {
            let out = &cache.acts[l + 1];
            let dpre = ndarray::Zip::from(&dh).and(out).map_collect(|&d, &h| if h > F::zero() { d } else { F::zero() });
            let input = &cache.acts[l];
            g.body[l].w = dpre.t().dot(input);
            g.body[l].b = dpre.sum_axis(Axis(0));
            if l > 0 {
                dh = dpre.dot(&self.body[l].w);
            }
        }
        let two_c = cast::<F>(2.0 * c);
        for (gp, p) in g.params_mut().into_iter().zip(self.params()) {
            for (gi, &pi) in gp.iter_mut().zip(p) {
                *gi = *gi + two_c * pi;
            }
        }
        Ok((terms, Some(g)))
    }
}

/// Adam with the usual defaults for the moment decay rates.
#[derive(Clone, Debug)]
pub struct Adam<F> {
    pub lr: F,
    m: Network<F>,
    v: Network<F>,
    t: i32,
}

impl<F: Scalar> Adam<F> {
    pub fn new(net: &Network<F>, lr: f64) -> Self {
        Self { lr: cast(lr), m: net.zeros_like(), v: net.zeros_like(), t: 0 }
    }

    pub fn step(&mut self, net: &mut Network<F>, grad: &Network<F>) {
        let (b1, b2, eps) = (cast::<F>(0.9), cast::<F>(0.999), cast::<F>(1e-8));
        self.t += 1;
        let c1 = F::one() - b1.powi(self.t);
        let c2 = F::one() - b2.powi(self.t);
        let params = net.params_mut();
        let ms = self.m.params_mut();
        let vs = self.v.params_mut();
        for (((p, g), m), v) in params.into_iter().zip(grad.params()).zip(ms).zip(vs) {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (F::one() - b1) * g[i];
                v[i] = b2 * v[i] + (F::one() - b2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] = p[i] - self.lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::{Board, Player};

    fn tiny(seed: u64) -> NetworkConfig {
        NetworkConfig { size: 2, layers: 2, width: 8, seed, ..Default::default() }
    }

    #[test]
    fn zero_network_is_uniform_with_zero_value() {
        let net = Network::<f32>::zeros(&NetworkConfig { size: 3, layers: 1, width: 4, ..Default::default() }).unwrap();
        let b = Board::parse("B . .\n . W .\n  . . .\n").unwrap();
        let out = net.forward(&b.encode().unwrap()).unwrap();
        assert_eq!(out.value, 0.0);
        let p = masked_softmax(&out.logits, &legal_mask(b.encode().unwrap().as_slice(), 9));
        for (i, &pi) in p.iter().enumerate() {
            let expected = if i == 0 || i == 4 { 0.0 } else { 1.0 / 7.0 };
            assert!((pi - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn canonical_positions_give_identical_outputs() {
        let net = Network::<f32>::init(&NetworkConfig { size: 3, layers: 2, width: 6, ..Default::default() }).unwrap();
        let b = Board::parse("B . .\n . W .\n  B . .\n").unwrap();
        assert_eq!(b.to_move().unwrap(), Player::White);
        let swapped = b.transpose_swap();
        let a = net.forward(&b.encode().unwrap()).unwrap();
        let c = net.forward(&swapped.encode_as(Player::Black)).unwrap();
        assert_eq!(a.logits, c.logits);
        assert_eq!(a.value, c.value);
    }

    #[test]
    fn loss_matches_the_formula_by_hand() {
        // z = 1, v = tanh(atanh 0.5) = 0.5, pi = [1, 0] on two legal cells,
        // equal logits so p = [0.5, 0.5]: 0.25 + ln 2.
        let mut net = Network::<f64>::zeros(&NetworkConfig { size: 1, layers: 1, width: 1, ..Default::default() }).unwrap();
        net.size = 1;
        net.value.b[0] = 0.5f64.atanh();
        // A 1x1 board has a single cell, so use the value and policy terms
        // separately on a two-cell board below.
        let s = Sample { features: vec![0.0, 0.0], policy: vec![1.0], z: 1.0 };
        let l = net.loss(&[s], 0.0).unwrap();
        assert!((l.value - 0.25).abs() < 1e-12);
        assert!(l.policy.abs() < 1e-12);

        let cfg = NetworkConfig { size: 2, layers: 1, width: 1, ..Default::default() };
        let mut net = Network::<f64>::zeros(&cfg).unwrap();
        net.value.b[0] = 0.5f64.atanh();
        // Occupy two of the four cells so exactly two are legal.
        let mut features = vec![0.0; 8];
        features[2] = 1.0;
        features[4 + 3] = 1.0;
        let s = Sample { features, policy: vec![1.0, 0.0, 0.0, 0.0], z: 1.0 };
        let l = net.loss(&[s], 0.0).unwrap();
        assert!((l.total - (0.25 + 2f64.ln())).abs() < 1e-12, "{}", l.total);
        assert!((l.total - 0.9431).abs() < 1e-4);
    }

    #[test]
    fn perfect_prediction_has_zero_loss_and_zero_reg_for_zero_weights() {
        let cfg = NetworkConfig { size: 2, layers: 1, width: 1, ..Default::default() };
        let mut net = Network::<f64>::zeros(&cfg).unwrap();
        net.value.b[0] = 50.0;
        net.policy.b[0] = 1e3;
        let s = Sample { features: vec![0.0; 8], policy: vec![1.0, 0.0, 0.0, 0.0], z: 1.0 };
        let l = net.loss(&[s], 0.0).unwrap();
        assert!(l.total.abs() < 1e-12);
        let zero = Network::<f64>::zeros(&cfg).unwrap();
        let s = Sample { features: vec![0.0; 8], policy: vec![0.25; 4], z: -1.0 };
        assert_eq!(zero.loss(&[s], 0.5).unwrap().reg, 0.0);
    }

    #[test]
    fn rejects_bad_targets() {
        let net = Network::<f64>::zeros(&tiny(0)).unwrap();
        let s = Sample { features: vec![0.0; 8], policy: vec![0.5, 0.0, 0.0, 0.0], z: 1.0 };
        assert!(matches!(net.loss(&[s], 0.0), Err(NetError::PolicyNotNormalised(_))));
        let mut features = vec![0.0; 8];
        features[0] = 1.0;
        let s = Sample { features, policy: vec![1.0, 0.0, 0.0, 0.0], z: 1.0 };
        assert_eq!(net.loss(&[s], 0.0).unwrap_err(), NetError::PolicyOnIllegalMove);
    }

    /// Central finite differences on every parameter.
    pub(crate) fn max_relative_gradient_error(seed: u64) -> f64 {
        use rand::Rng;
        let cfg = tiny(seed);
        let net = Network::<f64>::init(&cfg).unwrap();
        let mut rng = rng_for(seed, "gradcheck", 0);
        let batch: Vec<Sample> = (0..4)
            .map(|_| {
                let mut features = vec![0.0f32; 8];
                let occupied = rng.random_range(0..4usize);
                features[occupied + 4 * rng.random_range(0..2usize)] = 1.0;
                let mut policy = vec![0.0f32; 4];
                let legal: Vec<usize> = (0..4).filter(|&i| i != occupied).collect();
                let weights: Vec<f32> = legal.iter().map(|_| rng.random_range(0.1..1.0)).collect();
                let sum: f32 = weights.iter().sum();
                for (&i, w) in legal.iter().zip(weights) {
                    policy[i] = w / sum;
                }
                let fix: f32 = 1.0 - policy.iter().sum::<f32>();
                policy[legal[0]] += fix;
                Sample { features, policy, z: if rng.random() { 1.0 } else { -1.0 } }
            })
            .collect();
        let c = 1e-3;
        let (_, grad) = net.loss_and_grad(&batch, c, true).unwrap();
        let grad = grad.unwrap();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        let tensors = net.params().len();
        for t in 0..tensors {
            for i in 0..net.params()[t].len() {
                let mut plus = net.clone();
                plus.params_mut()[t][i] += h;
                let mut minus = net.clone();
                minus.params_mut()[t][i] -= h;
                let numeric = (plus.loss(&batch, c).unwrap().total - minus.loss(&batch, c).unwrap().total) / (2.0 * h);
                let analytic = grad.params()[t][i];
                let scale = numeric.abs().max(analytic.abs()).max(1e-3);
                worst = worst.max((numeric - analytic).abs() / scale);
            }
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..5 {
            let err = max_relative_gradient_error(seed);
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn adam_reduces_the_loss_on_a_fixed_batch() {
        let cfg = NetworkConfig { size: 2, layers: 2, width: 8, ..Default::default() };
        let mut net = Network::<f32>::init(&cfg).unwrap();
        let s = Sample { features: vec![0.0; 8], policy: vec![0.0, 1.0, 0.0, 0.0], z: 1.0 };
        let before = net.loss(std::slice::from_ref(&s), 0.0).unwrap().total;
        let mut opt = Adam::new(&net, 1e-2);
        for _ in 0..100 {
            let (_, g) = net.loss_and_grad(std::slice::from_ref(&s), 0.0, true).unwrap();
            opt.step(&mut net, &g.unwrap());
        }
        let after = net.loss(&[s], 0.0).unwrap().total;
        assert!(after < before * 0.5, "{before} -> {after}");
    }
}
