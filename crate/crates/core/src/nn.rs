//! Dense feed-forward classifier: ReLU hidden layers, softmax output,
//! mean cross-entropy loss and mini-batch SGD with momentum.
//!
//! Every model role in the pipeline (target, ensemble member, shadow,
//! attack, teacher, student) is an [`MlpModel`].

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{PaseError, Result};
use crate::rng::SplitMix64;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Class-probability output of a model.
pub type ConfidenceVector = Vec<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layer_dims: Vec<usize>,
    /// Per layer, row-major `out x in`.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Parameter-shaped gradient (or momentum) buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(model: &MlpModel) -> Self {
        Self {
            weights: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn fill_zero(&mut self) {
        self.weights
            .iter_mut()
            .chain(self.biases.iter_mut())
            .for_each(|v| v.fill(0.0));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.05,
            momentum: 0.9,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(PaseError::Config("batch_size must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(PaseError::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(PaseError::Config(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// A trained model together with its per-epoch mean training loss.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    pub loss_history: Vec<f64>,
}

/// Scratch space for one forward/backward pass.
struct Workspace {
    /// `acts[0]` is the input, `acts[l+1]` the post-activation output of layer `l`
    /// (softmax probabilities for the last layer).
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Workspace {
    fn new(dims: &[usize]) -> Self {
        Self {
            acts: dims.iter().map(|&d| vec![0.0; d]).collect(),
            deltas: dims[1..].iter().map(|&d| vec![0.0; d]).collect(),
        }
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

impl MlpModel {
    /// Glorot-uniform weights from the seeded generator, zero biases.
    pub fn init(layer_dims: &[usize], seed: u64) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(PaseError::Config(format!(
                "need at least input and output dims, got {layer_dims:?}"
            )));
        }
        if layer_dims.contains(&0) {
            return Err(PaseError::Config(format!(
                "layer dims must be positive, got {layer_dims:?}"
            )));
        }
        let mut rng = SplitMix64::new(seed);
        let mut weights = Vec::with_capacity(layer_dims.len() - 1);
        let mut biases = Vec::with_capacity(layer_dims.len() - 1);
        for pair in layer_dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push((0..fan_in * fan_out).map(|_| rng.uniform(-limit, limit)).collect());
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
        })
    }

    /// Build from explicit parameters, checking shapes and finiteness.
    pub fn from_parts(layer_dims: Vec<usize>, weights: Vec<Vec<f64>>, biases: Vec<Vec<f64>>) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) {
            return Err(PaseError::Config(format!("invalid layer dims {layer_dims:?}")));
        }
        let layers = layer_dims.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(PaseError::Config(format!(
                "{} weight and {} bias arrays for {layers} layers",
                weights.len(),
                biases.len()
            )));
        }
        for l in 0..layers {
            if weights[l].len() != layer_dims[l] * layer_dims[l + 1] || biases[l].len() != layer_dims[l + 1] {
                return Err(PaseError::Config(format!("layer {l} parameter shape mismatch")));
            }
        }
        if weights.iter().chain(&biases).flatten().any(|v| !v.is_finite()) {
            return Err(PaseError::Config("non-finite parameter".into()));
        }
        Ok(Self {
            layer_dims,
            weights,
            biases,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn class_count(&self) -> usize {
        *self.layer_dims.last().expect("at least two dims")
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(PaseError::Input(format!(
                "input has dimension {}, model expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn forward_into(&self, x: &[f64], ws: &mut Workspace) {
        ws.acts[0].copy_from_slice(x);
        let last = self.weights.len() - 1;
        for l in 0..=last {
            let (before, after) = ws.acts.split_at_mut(l + 1);
            let input = &before[l];
            let out = &mut after[0];
            let n_in = self.layer_dims[l];
            for (o, (row, &b)) in out
                .iter_mut()
                .zip(self.weights[l].chunks_exact(n_in).zip(&self.biases[l]))
            {
                let z = b + row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>();
                *o = if l < last { z.max(0.0) } else { z };
            }
            if l == last {
                softmax_in_place(out);
            }
        }
    }

    /// Class probabilities for one input.
    pub fn forward(&self, x: &[f64]) -> Result<ConfidenceVector> {
        self.check_input(x)?;
        let mut ws = Workspace::new(&self.layer_dims);
        self.forward_into(x, &mut ws);
        Ok(ws.acts.pop().expect("output layer"))
    }

    /// Predicted class (argmax, lowest index on ties).
    pub fn predict_class(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Forward + backward for one sample, accumulating into `grads`.
    /// Returns the sample's cross-entropy.
    fn accumulate(&self, x: &[f64], y: usize, ws: &mut Workspace, grads: &mut Gradients) -> f64 {
        self.forward_into(x, ws);
        let layers = self.weights.len();
        let probs = &ws.acts[layers];
        let loss = -probs[y].max(f64::MIN_POSITIVE).ln();

        // Output delta for softmax + cross-entropy: p - onehot(y).
        let out_delta = &mut ws.deltas[layers - 1];
        out_delta.copy_from_slice(probs);
        out_delta[y] -= 1.0;

        for l in (0..layers).rev() {
            let n_in = self.layer_dims[l];
            let input = &ws.acts[l];
            {
                let delta = &ws.deltas[l];
                let gw = &mut grads.weights[l];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    grads.biases[l][o] += d;
                    for (g, &a) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
            }
            if l > 0 {
                let (lower, upper) = ws.deltas.split_at_mut(l);
                let delta = &upper[0];
                let prev = &mut lower[l - 1];
                prev.fill(0.0);
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for (p, &w) in prev.iter_mut().zip(&self.weights[l][o * n_in..(o + 1) * n_in]) {
                        *p += d * w;
                    }
                }
                // ReLU derivative on the hidden pre-activation.
                for (p, &a) in prev.iter_mut().zip(&ws.acts[l]) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
        }
        loss
    }

    /// Mean cross-entropy over a batch and its exact gradient.
    ///
    /// `batch_x` is row-major with `batch_y.len()` rows.
    pub fn loss_and_grad(&self, batch_x: &[f64], batch_y: &[usize]) -> Result<(f64, Gradients)> {
        if batch_y.is_empty() {
            return Err(PaseError::Input("empty batch".into()));
        }
        let d = self.input_dim();
        if batch_x.len() != batch_y.len() * d {
            return Err(PaseError::Input(format!(
                "batch of {} values does not hold {} rows of dimension {d}",
                batch_x.len(),
                batch_y.len()
            )));
        }
        if let Some(&bad) = batch_y.iter().find(|&&y| y >= self.class_count()) {
            return Err(PaseError::Input(format!(
                "label {bad} outside [0, {})",
                self.class_count()
            )));
        }
        let mut ws = Workspace::new(&self.layer_dims);
        let mut grads = Gradients::zeros_like(self);
        let mut loss = 0.0;
        for (x, &y) in batch_x.chunks_exact(d).zip(batch_y) {
            loss += self.accumulate(x, y, &mut ws, &mut grads);
        }
        let scale = 1.0 / batch_y.len() as f64;
        grads
            .weights
            .iter_mut()
            .chain(grads.biases.iter_mut())
            .flatten()
            .for_each(|g| *g *= scale);
        Ok((loss * scale, grads))
    }

    fn check_dataset(&self, data: &Dataset) -> Result<()> {
        if data.is_empty() {
            return Err(PaseError::Input("empty dataset".into()));
        }
        if data.dim() != self.input_dim() {
            return Err(PaseError::Input(format!(
                "dataset dimension {} does not match model input {}",
                data.dim(),
                self.input_dim()
            )));
        }
        if data.class_count() > self.class_count() {
            return Err(PaseError::Input(format!(
                "dataset has {} classes, model outputs {}",
                data.class_count(),
                self.class_count()
            )));
        }
        Ok(())
    }

    /// Mini-batch SGD with momentum. Sequential and deterministic for a fixed
    /// `cfg.seed`; the last batch of an epoch may be partial.
    pub fn train(mut self, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
        cfg.validate()?;
        self.check_dataset(data)?;
        let mut rng = SplitMix64::new(cfg.seed ^ 0x5348_5546_464C_4521);
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut ws = Workspace::new(&self.layer_dims);
        let mut grads = Gradients::zeros_like(&self);
        let mut velocity = Gradients::zeros_like(&self);
        let mut loss_history = Vec::with_capacity(cfg.epochs);

        for _ in 0..cfg.epochs {
            if cfg.shuffle {
                rng.shuffle(&mut order);
            }
            let mut epoch_loss = 0.0;
            for batch in order.chunks(cfg.batch_size) {
                grads.fill_zero();
                for &i in batch {
                    epoch_loss += self.accumulate(data.row(i), data.labels()[i], &mut ws, &mut grads);
                }
                let step = cfg.learning_rate / batch.len() as f64;
                let params = self.weights.iter_mut().chain(self.biases.iter_mut());
                let vels = velocity.weights.iter_mut().chain(velocity.biases.iter_mut());
                let gs = grads.weights.iter().chain(grads.biases.iter());
                for ((p, v), g) in params.zip(vels).zip(gs) {
                    for ((p, v), g) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                        *v = cfg.momentum * *v - step * g;
                        *p += *v;
                    }
                }
            }
            loss_history.push(epoch_loss / data.len() as f64);
        }
        if self
            .weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .any(|v| !v.is_finite())
        {
            return Err(PaseError::Config(
                "training diverged to non-finite parameters; lower the learning rate".into(),
            ));
        }
        Ok(TrainOutcome {
            model: self,
            loss_history,
        })
    }

    /// Fraction of argmax-correct predictions.
    pub fn evaluate(&self, data: &Dataset) -> Result<f64> {
        self.check_dataset(data)?;
        let mut ws = Workspace::new(&self.layer_dims);
        let last = self.layer_dims.len() - 1;
        let correct = data
            .rows()
            .zip(data.labels())
            .filter(|(x, &y)| {
                self.forward_into(x, &mut ws);
                argmax(&ws.acts[last]) == y
            })
            .count();
        Ok(correct as f64 / data.len() as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<ModelDocument>(text)?.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| PaseError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| PaseError::io(path, e))?;
        Self::from_json(&text).map_err(|e| PaseError::format(path, None, e.to_string()))
    }
}

/// On-disk model layout. Floats are written in shortest round-trip form,
/// so a load reproduces every parameter bit for bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl From<&MlpModel> for ModelDocument {
    fn from(m: &MlpModel) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            layer_dims: m.layer_dims.clone(),
            weights: m.weights.clone(),
            biases: m.biases.clone(),
        }
    }
}

impl TryFrom<ModelDocument> for MlpModel {
    type Error = PaseError;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(PaseError::Config(format!(
                "unsupported model format version {}",
                doc.format_version
            )));
        }
        MlpModel::from_parts(doc.layer_dims, doc.weights, doc.biases)
    }
}

impl Serialize for MlpModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelDocument::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for MlpModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = ModelDocument::deserialize(d)?;
        MlpModel::try_from(doc).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{apply_label_noise, gen_blobs};
    use proptest::prelude::*;

    fn zero_model(dims: &[usize]) -> MlpModel {
        let mut m = MlpModel::init(dims, 0).unwrap();
        m.weights_mut().iter_mut().flatten().for_each(|w| *w = 0.0);
        m
    }

    #[test]
    fn init_shapes_and_zero_bias() {
        let m = MlpModel::init(&[2, 3], 7).unwrap();
        assert_eq!(m.weights().len(), 1);
        assert_eq!(m.weights()[0].len(), 6);
        assert_eq!(m.biases(), &[vec![0.0, 0.0, 0.0]]);
        let limit = (6.0f64 / 5.0).sqrt();
        assert!(m.weights()[0].iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn init_is_seeded() {
        let a = MlpModel::init(&[4, 8, 3], 1).unwrap();
        assert_eq!(a, MlpModel::init(&[4, 8, 3], 1).unwrap());
        assert_ne!(a, MlpModel::init(&[4, 8, 3], 2).unwrap());
    }

    #[test]
    fn init_rejects_bad_dims() {
        assert!(matches!(MlpModel::init(&[], 0), Err(PaseError::Config(_))));
        assert!(matches!(MlpModel::init(&[3], 0), Err(PaseError::Config(_))));
        assert!(matches!(MlpModel::init(&[3, 0, 2], 0), Err(PaseError::Config(_))));
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = zero_model(&[4, 5, 3]);
        for p in m.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_rejects_wrong_dim() {
        let m = MlpModel::init(&[3, 2], 0).unwrap();
        assert!(matches!(m.forward(&[1.0]), Err(PaseError::Input(_))));
    }

    #[test]
    fn hand_evaluated_two_layer_softmax() {
        // 2 -> 2 hidden (ReLU) -> 2 output.
        let m = MlpModel::from_parts(
            vec![2, 2, 2],
            vec![vec![1.0, -1.0, 0.5, 2.0], vec![1.0, 0.0, -1.0, 1.0]],
            vec![vec![0.0, -1.0], vec![0.5, 0.0]],
        )
        .unwrap();
        let x = [1.0, 0.5];
        // hidden: relu(1 - 0.5 + 0) = 0.5 ; relu(0.5 + 1 - 1) = 0.5
        // logits: 0.5 + 0.5 = 1.0 ; -0.5 + 0.5 = 0.0
        let e = 1.0f64.exp();
        let expected = [e / (e + 1.0), 1.0 / (e + 1.0)];
        let p = m.forward(&x).unwrap();
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn uniform_loss_is_ln3() {
        let m = zero_model(&[2, 3]);
        let (loss, _) = m.loss_and_grad(&[1.0, 2.0, -1.0, 0.0, 3.0, 3.0], &[0, 1, 2]).unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn duplicated_batch_same_loss_and_grad() {
        let m = MlpModel::init(&[3, 4, 2], 5).unwrap();
        let x = [0.1, -0.3, 0.7, 1.2, 0.0, -0.5];
        let y = [1, 0];
        let mut x2 = x.to_vec();
        x2.extend_from_slice(&x);
        let (l1, g1) = m.loss_and_grad(&x, &y).unwrap();
        let (l2, g2) = m.loss_and_grad(&x2, &[1, 0, 1, 0]).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.weights.iter().flatten().zip(g2.weights.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_rejects_bad_labels_and_empty() {
        let m = MlpModel::init(&[2, 2], 0).unwrap();
        assert!(matches!(m.loss_and_grad(&[0.0, 0.0], &[2]), Err(PaseError::Input(_))));
        assert!(matches!(m.loss_and_grad(&[], &[]), Err(PaseError::Input(_))));
    }

    #[test]
    fn zero_epochs_is_noop() {
        let d = gen_blobs(2, 10, 2, 0.2, 0).unwrap();
        let m = MlpModel::init(&[2, 4, 2], 3).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let out = m.clone().train(&d, &cfg).unwrap();
        assert_eq!(out.model, m);
        assert!(out.loss_history.is_empty());
    }

    #[test]
    fn separable_blobs_are_fit() {
        let d = gen_blobs(2, 100, 2, 0.1, 11).unwrap();
        let cfg = TrainConfig {
            epochs: 30,
            ..TrainConfig::default()
        };
        let out = MlpModel::init(&[2, 16, 2], 1).unwrap().train(&d, &cfg).unwrap();
        assert!(out.model.evaluate(&d).unwrap() >= 0.99);
        assert!(out.loss_history.last() < out.loss_history.first());
    }

    #[test]
    fn training_is_deterministic() {
        let d = gen_blobs(3, 30, 4, 0.5, 2).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            seed: 42,
            ..TrainConfig::default()
        };
        let a = MlpModel::init(&[4, 8, 3], 1).unwrap().train(&d, &cfg).unwrap();
        let b = MlpModel::init(&[4, 8, 3], 1).unwrap().train(&d, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.loss_history, b.loss_history);
    }

    #[test]
    fn random_labels_can_be_memorized() {
        // Pure label noise: nothing to generalize, everything to memorize.
        let base = gen_blobs(4, 100, 10, 1.0, 8).unwrap();
        let d = apply_label_noise(&base, 0.75, 9).unwrap();
        let cfg = TrainConfig {
            epochs: 300,
            batch_size: 16,
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let out = MlpModel::init(&[10, 256, 4], 3).unwrap().train(&d, &cfg).unwrap();
        let acc = out.model.evaluate(&d).unwrap();
        assert!(acc >= 0.95, "train accuracy {acc}");
    }

    #[test]
    fn training_rejects_empty_or_mismatched() {
        let m = MlpModel::init(&[2, 2], 0).unwrap();
        let empty = Dataset::with_sequential_ids(vec![], 2, vec![], 2).unwrap();
        assert!(matches!(
            m.clone().train(&empty, &TrainConfig::default()),
            Err(PaseError::Input(_))
        ));
        assert!(matches!(m.evaluate(&empty), Err(PaseError::Input(_))));
        let wrong = gen_blobs(2, 3, 3, 1.0, 0).unwrap();
        assert!(matches!(m.evaluate(&wrong), Err(PaseError::Input(_))));
    }

    #[test]
    fn uniform_ties_go_to_class_zero() {
        let m = zero_model(&[2, 3]);
        let d = Dataset::with_sequential_ids(vec![1.0, 2.0, 3.0, 4.0], 2, vec![0, 0], 3).unwrap();
        assert_eq!(m.evaluate(&d).unwrap(), 1.0);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = MlpModel::init(&[5, 7, 3], 99).unwrap();
        let back = MlpModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
        let doc: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        assert_eq!(doc["format_version"], 1);
    }

    #[test]
    fn json_rejects_wrong_version_and_shape() {
        let m = MlpModel::init(&[2, 2], 0).unwrap();
        let mut doc: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        doc["format_version"] = 2.into();
        assert!(MlpModel::from_json(&doc.to_string()).is_err());
        doc["format_version"] = 1.into();
        doc["layer_dims"] = serde_json::json!([2, 3]);
        assert!(MlpModel::from_json(&doc.to_string()).is_err());
    }

    proptest! {
        #[test]
        fn softmax_normalized(seed: u64, x in proptest::collection::vec(-50.0f64..50.0, 6)) {
            let m = MlpModel::init(&[6, 9, 4], seed).unwrap();
            let p = m.forward(&x).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
