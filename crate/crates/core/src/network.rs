//! ReLU multilayer perceptron with softmax cross-entropy, manual
//! backpropagation and Adam.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::matrix::Matrix;
use crate::seed;

const CHECKPOINT_MAGIC: &[u8; 4] = b"GAML";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("need >=2 layers, got {0}")]
    TooFewLayers(usize),
    #[error("layer sizes must be positive")]
    ZeroWidth,
    #[error("dimension mismatch: expected {expected} columns, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("length mismatch: {rows} rows vs {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("non-finite logit")]
    NonFinite,
    #[error("empty train set")]
    EmptyTrainSet,
    #[error("at least one epoch is required")]
    ZeroEpochs,
    #[error("minibatch size must be positive")]
    ZeroMinibatch,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = NetworkError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpConfig {
    /// Input dim, hidden dims..., num_classes.
    pub layer_sizes: Vec<usize>,
    pub init_seed: u64,
}

impl MlpConfig {
    pub fn new(input_dim: usize, hidden: &[usize], num_classes: usize, init_seed: u64) -> Self {
        let mut layer_sizes = Vec::with_capacity(hidden.len() + 2);
        layer_sizes.push(input_dim);
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(num_classes);
        Self {
            layer_sizes,
            init_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(NetworkError::TooFewLayers(self.layer_sizes.len()));
        }
        if self.layer_sizes.contains(&0) {
            return Err(NetworkError::ZeroWidth);
        }
        Ok(())
    }
}

/// One affine layer; `weights` is `fan_in × fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros_like(&self) -> Dense {
        Dense {
            weights: Matrix::zeros(self.weights.rows(), self.weights.cols()),
            bias: vec![0.0; self.bias.len()],
        }
    }

    fn affine(&self, input: &Matrix) -> Matrix {
        let mut z = input.matmul(&self.weights);
        for r in 0..z.rows() {
            for (v, b) in z.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        z
    }
}

/// The classifier. Hidden layers use ReLU; the last layer emits logits.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Dense>,
}

/// Fresh model with weights ~ U(-1/√fan_in, 1/√fan_in) and zero biases.
pub fn init_model(config: &MlpConfig) -> Result<MlpModel> {
    config.validate()?;
    let mut rng = seed::rng(config.init_seed);
    let layers = config
        .layer_sizes
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| rng.gen_range(-bound..bound))
                .collect();
            Dense {
                weights: Matrix::from_vec(fan_in, fan_out, data),
                bias: vec![0.0; fan_out],
            }
        })
        .collect();
    Ok(MlpModel { layers })
}

impl MlpModel {
    /// Builds a model from explicit layers; shapes must chain.
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(NetworkError::TooFewLayers(1));
        }
        for l in &layers {
            if l.bias.len() != l.weights.cols() {
                return Err(NetworkError::DimensionMismatch {
                    expected: l.weights.cols(),
                    found: l.bias.len(),
                });
            }
        }
        for w in layers.windows(2) {
            if w[0].weights.cols() != w[1].weights.rows() {
                return Err(NetworkError::DimensionMismatch {
                    expected: w[0].weights.cols(),
                    found: w[1].weights.rows(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(|l| l.weights.cols()));
        sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].weights.cols()
    }

    fn check_input(&self, batch: &Matrix) -> Result<()> {
        if batch.cols() != self.input_dim() {
            return Err(NetworkError::DimensionMismatch {
                expected: self.input_dim(),
                found: batch.cols(),
            });
        }
        Ok(())
    }

    /// Activations of every layer: `trace[0]` is the input, `trace[l]` the
    /// post-ReLU output of hidden layer `l`, and the last entry the logits.
    pub fn forward_trace(&self, batch: &Matrix) -> Result<Vec<Matrix>> {
        self.check_input(batch)?;
        let mut trace = Vec::with_capacity(self.layers.len() + 1);
        trace.push(batch.clone());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.affine(&trace[l]);
            if l + 1 < self.layers.len() {
                z.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
            }
            trace.push(z);
        }
        Ok(trace)
    }

    pub fn forward(&self, batch: &Matrix) -> Result<Matrix> {
        self.check_input(batch)?;
        let mut act = batch.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            act = layer.affine(&act);
            if l + 1 < self.layers.len() {
                act.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        Ok(act)
    }

    /// Argmax class per row; ties go to the lowest class index.
    pub fn predict(&self, rows: &Matrix) -> Result<Vec<usize>> {
        Ok(self.forward(rows)?.iter_rows().map(argmax).collect())
    }

    /// Output of the last hidden layer, or the raw input for a model with no
    /// hidden layer.
    pub fn embed(&self, rows: &Matrix) -> Result<Matrix> {
        self.check_input(rows)?;
        let mut act = rows.clone();
        for layer in &self.layers[..self.layers.len() - 1] {
            act = layer.affine(&act);
            act.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
        }
        Ok(act)
    }

    /// Softmax probabilities per row.
    pub fn probabilities(&self, rows: &Matrix) -> Result<Matrix> {
        let mut logits = self.forward(rows)?;
        for r in 0..logits.rows() {
            let p = softmax(logits.row(r))?;
            logits.row_mut(r).copy_from_slice(&p);
        }
        Ok(logits)
    }

    pub fn accuracy(&self, rows: &Matrix, labels: &[usize]) -> Result<f64> {
        if rows.rows() != labels.len() {
            return Err(NetworkError::LengthMismatch {
                rows: rows.rows(),
                labels: labels.len(),
            });
        }
        let predictions = self.predict(rows)?;
        Ok(accuracy_of(&predictions, labels))
    }

    /// Writes the versioned little-endian checkpoint: magic `GAML`, version,
    /// layer count, layer sizes, then per layer the weights followed by the
    /// biases as raw `f64`.
    pub fn write_checkpoint(&self, mut w: impl Write) -> Result<()> {
        let sizes = self.layer_sizes();
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&(sizes.len() as u32).to_le_bytes())?;
        for s in &sizes {
            w.write_all(&(*s as u32).to_le_bytes())?;
        }
        for layer in &self.layers {
            for v in layer.weights.as_slice().iter().chain(&layer.bias) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_checkpoint(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(NetworkError::Checkpoint(format!("bad magic {magic:?}")));
        }
        let mut u32_buf = [0u8; 4];
        let mut read_u32 = |r: &mut dyn Read| -> Result<u32> {
            r.read_exact(&mut u32_buf)?;
            Ok(u32::from_le_bytes(u32_buf))
        };
        let version = read_u32(&mut r)?;
        if version != CHECKPOINT_VERSION {
            return Err(NetworkError::Checkpoint(format!("unsupported version {version}")));
        }
        let count = read_u32(&mut r)? as usize;
        let sizes = (0..count)
            .map(|_| read_u32(&mut r).map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        MlpConfig {
            layer_sizes: sizes.clone(),
            init_seed: 0,
        }
        .validate()?;
        let mut f64_buf = [0u8; 8];
        let mut read_vec = |r: &mut dyn Read, n: usize| -> Result<Vec<f64>> {
            (0..n)
                .map(|_| {
                    r.read_exact(&mut f64_buf)?;
                    Ok(f64::from_le_bytes(f64_buf))
                })
                .collect()
        };
        let layers = sizes
            .windows(2)
            .map(|w| {
                let weights = read_vec(&mut r, w[0] * w[1])?;
                let bias = read_vec(&mut r, w[1])?;
                Ok(Dense {
                    weights: Matrix::from_vec(w[0], w[1], weights),
                    bias,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub fn accuracy_of(predictions: &[usize], labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let correct = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    correct as f64 / labels.len() as f64
}

/// Numerically stable log-softmax (max subtraction).
pub fn log_softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(NetworkError::NonFinite);
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    Ok(logits.iter().map(|v| v - lse).collect())
}

pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(NetworkError::NonFinite);
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Mean cross-entropy of `model` on `(rows, labels)` and its gradient with
/// respect to every parameter.
pub fn loss_and_gradients(
    model: &MlpModel,
    rows: &Matrix,
    labels: &[usize],
) -> Result<(f64, Vec<Dense>)> {
    if rows.rows() != labels.len() {
        return Err(NetworkError::LengthMismatch {
            rows: rows.rows(),
            labels: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(NetworkError::EmptyTrainSet);
    }
    let classes = model.num_classes();
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(NetworkError::LabelOutOfRange { label, classes });
    }
    let trace = model.forward_trace(rows)?;
    let n = labels.len() as f64;
    let logits = &trace[trace.len() - 1];

    let mut loss = 0.0;
    let mut delta = Matrix::zeros(logits.rows(), classes);
    for (r, &label) in labels.iter().enumerate() {
        let log_p = log_softmax(logits.row(r))?;
        loss -= log_p[label];
        for (d, lp) in delta.row_mut(r).iter_mut().zip(&log_p) {
            *d = lp.exp() / n;
        }
        delta.row_mut(r)[label] -= 1.0 / n;
    }
    loss /= n;

    let mut grads: Vec<Dense> = model.layers.iter().map(Dense::zeros_like).collect();
    for l in (0..model.layers.len()).rev() {
        let input = &trace[l];
        grads[l].weights = input.t_matmul(&delta);
        for r in 0..delta.rows() {
            for (g, d) in grads[l].bias.iter_mut().zip(delta.row(r)) {
                *g += d;
            }
        }
        if l > 0 {
            let mut back = delta.matmul_t(&model.layers[l].weights);
            for (b, &a) in back.as_mut_slice().iter_mut().zip(input.as_slice()) {
                if a <= 0.0 {
                    *b = 0.0;
                }
            }
            delta = back;
        }
    }
    Ok((loss, grads))
}

pub fn mean_loss(model: &MlpModel, rows: &Matrix, labels: &[usize]) -> Result<f64> {
    let logits = model.forward(rows)?;
    let mut loss = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        loss -= log_softmax(logits.row(r))?[label];
    }
    Ok(loss / labels.len().max(1) as f64)
}

/// Adam moments mirroring the model parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    first_moment: Vec<Dense>,
    second_moment: Vec<Dense>,
    step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(model: &MlpModel, learning_rate: f64) -> Self {
        let zeros: Vec<Dense> = model.layers.iter().map(Dense::zeros_like).collect();
        Self {
            first_moment: zeros.clone(),
            second_moment: zeros,
            step_count: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn update(&mut self, model: &mut MlpModel, grads: &[Dense]) {
        self.step_count += 1;
        let t = self.step_count as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.epsilon);
        let apply = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        };
        for (l, layer) in model.layers.iter_mut().enumerate() {
            let m = &mut self.first_moment[l];
            let v = &mut self.second_moment[l];
            apply(
                layer.weights.as_mut_slice(),
                grads[l].weights.as_slice(),
                m.weights.as_mut_slice(),
                v.weights.as_mut_slice(),
            );
            apply(&mut layer.bias, &grads[l].bias, &mut m.bias, &mut v.bias);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs_per_round: usize,
    pub minibatch_size: usize,
    pub learning_rate: f64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs_per_round: 30,
            minibatch_size: 32,
            learning_rate: 1e-4,
            shuffle_seed: 0,
        }
    }
}

/// Minimizes mean cross-entropy with Adam, reshuffling every epoch. The final
/// partial minibatch is kept. `on_epoch(epoch, model)` runs after each
/// epoch's last update.
pub fn train_epochs(
    model: &mut MlpModel,
    rows: &Matrix,
    labels: &[usize],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, &MlpModel),
) -> Result<()> {
    if config.epochs_per_round == 0 {
        return Err(NetworkError::ZeroEpochs);
    }
    if config.minibatch_size == 0 {
        return Err(NetworkError::ZeroMinibatch);
    }
    if labels.is_empty() {
        return Err(NetworkError::EmptyTrainSet);
    }
    if rows.rows() != labels.len() {
        return Err(NetworkError::LengthMismatch {
            rows: rows.rows(),
            labels: labels.len(),
        });
    }
    model.check_input(rows)?;
    let batch = config.minibatch_size.min(labels.len());
    let mut rng = seed::rng(config.shuffle_seed);
    let mut adam = AdamState::new(model, config.learning_rate);
    let mut order: Vec<usize> = (0..labels.len()).collect();
    for epoch in 0..config.epochs_per_round {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let x = rows.select_rows(chunk);
            let y: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let (_, grads) = loss_and_gradients(model, &x, &y)?;
            adam.update(model, &grads);
        }
        on_epoch(epoch, model);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_blobs, BlobSpec};

    fn config(sizes: &[usize], seed: u64) -> MlpConfig {
        MlpConfig {
            layer_sizes: sizes.to_vec(),
            init_seed: seed,
        }
    }

    #[test]
    fn init_is_deterministic_and_shaped() {
        let a = init_model(&config(&[2, 3, 2], 1)).unwrap();
        assert_eq!(a, init_model(&config(&[2, 3, 2], 1)).unwrap());
        assert!(matches!(
            init_model(&config(&[2], 1)),
            Err(NetworkError::TooFewLayers(1))
        ));
        let big = init_model(&config(&[784, 256, 10], 1)).unwrap();
        let shapes: Vec<_> = big
            .layers()
            .iter()
            .map(|l| (l.weights.rows(), l.weights.cols()))
            .collect();
        assert_eq!(shapes, vec![(784, 256), (256, 10)]);
        let bound = 1.0 / 784f64.sqrt();
        assert!(big.layers()[0].weights.as_slice().iter().all(|w| w.abs() <= bound));
        assert!(big.layers()[0].bias.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn forward_edge_cases() {
        let mut m = init_model(&config(&[3, 4, 2], 5)).unwrap();
        for l in m.layers_mut() {
            l.weights.as_mut_slice().fill(0.0);
        }
        let x = Matrix::from_rows(&[vec![1.0, -2.0, 3.0]]);
        assert!(m.forward(&x).unwrap().as_slice().iter().all(|&v| v == 0.0));
        let empty = m.forward(&Matrix::zeros(0, 3)).unwrap();
        assert_eq!((empty.rows(), empty.cols()), (0, 2));
        assert!(m.forward(&Matrix::zeros(1, 2)).is_err());

        let w = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let single = MlpModel::from_layers(vec![Dense {
            weights: w,
            bias: vec![0.0, 0.0],
        }])
        .unwrap();
        let one_hot = Matrix::from_rows(&[vec![0.0, 1.0, 0.0]]);
        assert_eq!(single.forward(&one_hot).unwrap().row(0), &[3.0, 4.0]);
    }

    #[test]
    fn softmax_cases() {
        assert_eq!(softmax(&[0.0; 4]).unwrap(), vec![0.25; 4]);
        let p = softmax(&[1000.0, 0.0]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1] >= 0.0 && p[1] < 1e-300);
        let p = softmax(&[1f64.ln(), 3f64.ln()]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-12 && (p[1] - 0.75).abs() < 1e-12);
        assert!(softmax(&[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn argmax_ties_to_lowest() {
        assert_eq!(argmax(&[0.1, 0.9, 0.3]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }

    #[test]
    fn embed_shapes() {
        let m = init_model(&config(&[784, 256, 10], 2)).unwrap();
        assert_eq!(m.embed(&Matrix::zeros(3, 784)).unwrap().cols(), 256);
        assert!(m
            .embed(&Matrix::zeros(3, 784))
            .unwrap()
            .as_slice()
            .iter()
            .all(|&v| v == 0.0));
        let single = init_model(&config(&[3, 2], 2)).unwrap();
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]);
        assert_eq!(single.embed(&x).unwrap(), x);
    }

    #[test]
    fn accuracy_fractions() {
        assert_eq!(accuracy_of(&[1, 2, 3, 0], &[1, 2, 3, 1]), 0.75);
        assert_eq!(accuracy_of(&[1, 2], &[1, 2]), 1.0);
        assert_eq!(accuracy_of(&[0, 0], &[1, 1]), 0.0);
        let m = init_model(&config(&[2, 2], 1)).unwrap();
        assert!(m.accuracy(&Matrix::zeros(2, 2), &[0]).is_err());
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let mut m = init_model(&config(&[4, 5, 3], 9)).unwrap();
        let before = m.clone();
        let x = Matrix::from_vec(2, 4, vec![0.5, -1.0, 2.0, 0.1, 1.0, 1.0, -3.0, 0.2]);
        let (_, g) = loss_and_gradients(&m, &x, &[0, 2]).unwrap();
        let mut adam = AdamState::new(&m, 0.0);
        adam.update(&mut m, &g);
        adam.update(&mut m, &g);
        assert_eq!(adam.step_count(), 2);
        let bits = |m: &MlpModel| -> Vec<u64> {
            m.layers()
                .iter()
                .flat_map(|l| l.weights.as_slice().iter().chain(&l.bias))
                .map(|v| v.to_bits())
                .collect()
        };
        assert_eq!(bits(&m), bits(&before));
    }

    fn two_blobs() -> (Matrix, Vec<usize>) {
        let ds = synth_blobs(&BlobSpec {
            num_classes: 2,
            per_class: 50,
            feature_dim: 2,
            spread: 1.0,
            outlier_fraction: 0.0,
            seed: 11,
        })
        .unwrap();
        (ds.features().clone(), ds.labels().to_vec())
    }

    #[test]
    fn training_separates_blobs_and_is_deterministic() {
        let (x, y) = two_blobs();
        let cfg = TrainConfig {
            epochs_per_round: 20,
            minibatch_size: 32,
            learning_rate: 1e-2,
            shuffle_seed: 4,
        };
        let run = || {
            let mut m = init_model(&config(&[2, 8, 2], 3)).unwrap();
            let mut calls = 0;
            train_epochs(&mut m, &x, &y, &cfg, |_, _| calls += 1).unwrap();
            (m, calls)
        };
        let (a, calls) = run();
        assert_eq!(calls, 20);
        assert_eq!(a.accuracy(&x, &y).unwrap(), 1.0);
        assert_eq!(a, run().0);
    }

    #[test]
    fn training_preconditions() {
        let (x, y) = two_blobs();
        let mut m = init_model(&config(&[2, 2], 3)).unwrap();
        let cfg = TrainConfig {
            epochs_per_round: 0,
            ..TrainConfig::default()
        };
        let err = train_epochs(&mut m, &x, &y, &cfg, |_, _| {}).unwrap_err();
        assert!(err.to_string().contains("at least one epoch"));
        let err = train_epochs(
            &mut m,
            &Matrix::zeros(0, 2),
            &[],
            &TrainConfig::default(),
            |_, _| {},
        )
        .unwrap_err();
        assert!(matches!(err, NetworkError::EmptyTrainSet));
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = init_model(&config(&[3, 4, 2], 8)).unwrap();
        let mut bytes = Vec::new();
        m.write_checkpoint(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"GAML");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(bytes.len(), 4 + 4 + 4 + 3 * 4 + 8 * (12 + 4 + 8 + 2));
        // first weight follows the header directly
        let first = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
        assert_eq!(first, m.layers()[0].weights.get(0, 0));
        assert_eq!(MlpModel::read_checkpoint(bytes.as_slice()).unwrap(), m);
        bytes[0] = b'X';
        assert!(MlpModel::read_checkpoint(bytes.as_slice()).is_err());
    }
}
