//! Layerwise activation capture and logistic-regression probes.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::agent::Network;
use crate::board::{Board, BoardError};
use crate::seed::rng_for;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProbeError {
    #[error("board of size {got} given to a size-{expected} network")]
    SizeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Board(#[from] BoardError),
    #[error("split needs at least two examples of each class on both sides ({0})")]
    Degenerate(String),
    #[error("{rows} rows but {labels} labels")]
    Misaligned { rows: usize, labels: usize },
    #[error("missing control probes")]
    MissingControl,
}

/// `H^(0)` (raw features) and `H^(1..L)`, one row per board.
pub fn encode_dataset(net: &Network<f32>, boards: &[&Board]) -> Result<Vec<Array2<f32>>, ProbeError> {
    let mut rows: Vec<Vec<Vec<f32>>> = Vec::new();
    for b in boards {
        if b.size() != net.size {
            return Err(ProbeError::SizeMismatch { expected: net.size, got: b.size() });
        }
        let out = net.forward(&b.encode()?).expect("size checked");
        if rows.is_empty() {
            rows = vec![Vec::with_capacity(boards.len()); out.activations.layers.len()];
        }
        for (l, a) in out.activations.layers.into_iter().enumerate() {
            rows[l].push(a);
        }
    }
    if rows.is_empty() {
        let mut widths = vec![net.input_len()];
        widths.extend(net.body.iter().map(|d| d.b.len()));
        return Ok(widths.into_iter().map(|w| Array2::zeros((0, w))).collect());
    }
    Ok(rows
        .into_iter()
        .map(|layer| {
            let w = layer[0].len();
            Array2::from_shape_vec((layer.len(), w), layer.into_iter().flatten().collect()).expect("rectangular")
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Shuffled split with `test_fraction` of the rows held out.
    pub fn random(n: usize, test_fraction: f64, seed: u64) -> Self {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng_for(seed, "probe-split", n as u64));
        let n_test = ((n as f64) * test_fraction).round() as usize;
        let test = idx.split_off(n - n_test.min(n));
        Self { train: idx, test }
    }

    /// Like [`Split::random`], but each label class is split separately so
    /// both sides keep the dataset's class balance.
    pub fn stratified(labels: &[bool], test_fraction: f64, seed: u64) -> Self {
        let mut out = Split { train: Vec::new(), test: Vec::new() };
        for class in [false, true] {
            let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            let part = Split::random(rows.len(), test_fraction, seed ^ class as u64);
            out.train.extend(part.train.iter().map(|&i| rows[i]));
            out.test.extend(part.test.iter().map(|&i| rows[i]));
        }
        out.train.sort_unstable();
        out.test.sort_unstable();
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeHyper {
    pub l2: f64,
    pub iterations: usize,
    pub learning_rate: f64,
}

impl Default for ProbeHyper {
    fn default() -> Self {
        Self { l2: 1e-4, iterations: 300, learning_rate: 0.5 }
    }
}

/// Linear classifier over one layer. Inputs are standardised with the
/// training rows' mean and spread before the dot product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeModel {
    pub layer: usize,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

fn gather(x: &ArrayView2<f32>, rows: &[usize]) -> Array2<f64> {
    x.select(Axis(0), rows).mapv(f64::from)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl ProbeModel {
    pub fn predict(&self, row: &[f32]) -> bool {
        let z: f64 = row
            .iter()
            .zip(&self.weights)
            .zip(self.mean.iter().zip(&self.scale))
            .map(|((&x, w), (m, s))| w * (f64::from(x) - m) / s)
            .sum::<f64>()
            + self.bias;
        z > 0.0
    }

    pub fn accuracy(&self, x: &ArrayView2<f32>, labels: &[bool], rows: &[usize]) -> f64 {
        let hits = rows.iter().filter(|&&i| self.predict(x.row(i).as_slice().expect("contiguous")) == labels[i]).count();
        hits as f64 / rows.len().max(1) as f64
    }
}

/// Full-batch gradient descent on the mean logistic loss plus `l2 |w|^2`.
/// Only training rows are read while fitting.
pub fn train_probe(
    x: &ArrayView2<f32>,
    labels: &[bool],
    split: &Split,
    layer: usize,
    hyper: &ProbeHyper,
) -> Result<ProbeModel, ProbeError> {
    if x.nrows() != labels.len() {
        return Err(ProbeError::Misaligned { rows: x.nrows(), labels: labels.len() });
    }
    for (name, rows) in [("train", &split.train), ("test", &split.test)] {
        let pos = rows.iter().filter(|&&i| labels[i]).count();
        if pos < 2 || rows.len() - pos < 2 {
            return Err(ProbeError::Degenerate(format!("{name}: {pos} of {}", rows.len())));
        }
    }
    let xt = gather(x, &split.train);
    let y: Array1<f64> = split.train.iter().map(|&i| if labels[i] { 1.0 } else { 0.0 }).collect();
    let mean = xt.mean_axis(Axis(0)).expect("non-empty");
    let scale = xt.std_axis(Axis(0), 0.0).mapv(|s| if s > 1e-8 { s } else { 1.0 });
    let xs = (&xt - &mean) / &scale;
    let n = xs.nrows() as f64;
    let mut w = Array1::<f64>::zeros(xs.ncols());
    let mut b = 0.0;
    for _ in 0..hyper.iterations {
        let p = (xs.dot(&w) + b).mapv(sigmoid);
        let err = &p - &y;
        let gw = xs.t().dot(&err) / n + &w * (2.0 * hyper.l2);
        let gb = err.sum() / n;
        w = w - gw * hyper.learning_rate;
        b -= gb * hyper.learning_rate;
    }
    let mut model = ProbeModel {
        layer,
        weights: w.to_vec(),
        bias: b,
        mean: mean.to_vec(),
        scale: scale.to_vec(),
        train_accuracy: 0.0,
        test_accuracy: 0.0,
    };
    model.train_accuracy = model.accuracy(x, labels, &split.train);
    model.test_accuracy = model.accuracy(x, labels, &split.test);
    Ok(model)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectivityRecord {
    pub concept: String,
    pub horizon: String,
    pub layer: usize,
    pub checkpoint: usize,
    pub acc_real: f64,
    pub acc_control: f64,
    pub selectivity: f64,
}

/// Per-layer real minus control test accuracy.
pub fn selectivity(
    concept: &str,
    horizon: &str,
    checkpoint: usize,
    real: &[ProbeModel],
    control: &[ProbeModel],
) -> Result<Vec<SelectivityRecord>, ProbeError> {
    if control.len() != real.len() {
        return Err(ProbeError::MissingControl);
    }
    Ok(real
        .iter()
        .zip(control)
        .map(|(r, c)| SelectivityRecord {
            concept: concept.into(),
            horizon: horizon.into(),
            layer: r.layer,
            checkpoint,
            acc_real: r.test_accuracy,
            acc_control: c.test_accuracy,
            selectivity: r.test_accuracy - c.test_accuracy,
        })
        .collect())
}

/// Layer with the highest accuracy; the lower layer wins ties.
pub fn best_layer(accuracies: &[f64]) -> usize {
    let mut best = 0;
    for (i, &a) in accuracies.iter().enumerate() {
        if a > accuracies[best] {
            best = i;
        }
    }
    best
}
