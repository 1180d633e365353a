//! Dense classification head: one hidden layer of 32 ReLU units over the
//! pooled snippet representation, softmax output, trained by seeded
//! mini-batch gradient descent on the mean cross-entropy.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::embed::{EmbeddingBackend, EmbeddingVector};
use crate::error::{Error, Result};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Trained head parameters. `W1` is `D x H` row-major, `W2` is `H x C`
/// row-major; class labels fix the output order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub schema_version: u32,
    pub backend_name: String,
    #[serde(rename = "D")]
    pub dimension: usize,
    #[serde(rename = "H")]
    pub hidden_units: usize,
    pub class_labels: Vec<String>,
    #[serde(rename = "W1")]
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    #[serde(rename = "W2")]
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MlpModel {
    pub fn num_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let model: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        model.validate().map_err(|e| Error::InvalidModel {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let (d, h, c) = (self.dimension, self.hidden_units, self.num_classes());
        if c < 2 {
            return Err(Error::Config("model needs at least two classes".into()));
        }
        if self.w1.len() != d * h
            || self.b1.len() != h
            || self.w2.len() != h * c
            || self.b2.len() != c
        {
            return Err(Error::Config("parameter shapes are inconsistent".into()));
        }
        let finite = self
            .w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::Config("model holds non-finite parameters".into()));
        }
        Ok(())
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

fn hidden_and_logits(model: &MlpModel, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (d, h, c) = (model.dimension, model.hidden_units, model.num_classes());
    let mut z1 = model.b1.clone();
    for (i, &xi) in x.iter().enumerate().take(d) {
        if xi == 0.0 {
            continue;
        }
        let row = &model.w1[i * h..(i + 1) * h];
        for (j, w) in row.iter().enumerate() {
            z1[j] += xi * w;
        }
    }
    let a1: Vec<f64> = z1.iter().map(|&z| z.max(0.0)).collect();
    let mut logits = model.b2.clone();
    for (j, &aj) in a1.iter().enumerate() {
        if aj == 0.0 {
            continue;
        }
        let row = &model.w2[j * c..(j + 1) * c];
        for (k, w) in row.iter().enumerate() {
            logits[k] += aj * w;
        }
    }
    (z1, a1, logits)
}

/// Class probabilities for one representation.
pub fn mlp_forward(x: &[f64], model: &MlpModel) -> Result<Vec<f64>> {
    if x.len() != model.dimension {
        return Err(Error::DimensionMismatch {
            expected: model.dimension,
            actual: x.len(),
        });
    }
    let (_, _, logits) = hidden_and_logits(model, x);
    Ok(softmax(&logits))
}

/// Cross-entropy of one sample under the model.
fn sample_loss(model: &MlpModel, x: &[f64], label_index: usize) -> f64 {
    let (_, _, logits) = hidden_and_logits(model, x);
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln() + max;
    log_sum - logits[label_index]
}

fn mean_loss(model: &MlpModel, xs: &[&EmbeddingVector], ys: &[usize]) -> f64 {
    let total: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| sample_loss(model, x, y))
        .sum();
    total / xs.len() as f64
}

struct Grads {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

impl Grads {
    fn zeros(model: &MlpModel) -> Self {
        Self {
            w1: vec![0.0; model.w1.len()],
            b1: vec![0.0; model.b1.len()],
            w2: vec![0.0; model.w2.len()],
            b2: vec![0.0; model.b2.len()],
        }
    }
}

fn accumulate_gradients(model: &MlpModel, x: &[f64], label_index: usize, grads: &mut Grads) {
    let (h, c) = (model.hidden_units, model.num_classes());
    let (z1, a1, logits) = hidden_and_logits(model, x);
    let probs = softmax(&logits);

    // output layer: delta2 = p - onehot(y)
    let mut delta2 = probs;
    delta2[label_index] -= 1.0;
    for (j, &aj) in a1.iter().enumerate() {
        for (k, &d2) in delta2.iter().enumerate() {
            grads.w2[j * c + k] += aj * d2;
        }
    }
    for (k, &d2) in delta2.iter().enumerate() {
        grads.b2[k] += d2;
    }

    // hidden layer through the ReLU gate
    let mut delta1 = vec![0.0; h];
    for (j, d1) in delta1.iter_mut().enumerate() {
        if z1[j] > 0.0 {
            let row = &model.w2[j * c..(j + 1) * c];
            *d1 = row.iter().zip(&delta2).map(|(w, d2)| w * d2).sum();
        }
    }
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for (j, &d1) in delta1.iter().enumerate() {
            grads.w1[i * h + j] += xi * d1;
        }
    }
    for (j, &d1) in delta1.iter().enumerate() {
        grads.b1[j] += d1;
    }
}

fn glorot_init(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize, len: usize) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..len).map(|_| rng.random_range(-limit..limit)).collect()
}

/// Train the head on pooled representations.
///
/// Deterministic for a fixed seed: Glorot-uniform initialization and the
/// per-epoch shuffle both draw from one seeded generator. The returned model
/// is the epoch checkpoint with the lowest full-batch loss, so its training
/// loss never exceeds the initial loss.
pub fn mlp_train(
    reps: &[EmbeddingVector],
    labels: &[String],
    class_labels: &[String],
    config: &TrainConfig,
    backend_name: &str,
) -> Result<MlpModel> {
    config.validate()?;
    if reps.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: reps.len(),
            actual: labels.len(),
        });
    }
    let c = class_labels.len();
    if c < 2 {
        return Err(Error::Config("training needs at least two classes".into()));
    }
    if reps.len() < c {
        return Err(Error::LengthMismatch {
            expected: c,
            actual: reps.len(),
        });
    }
    let dimension = reps
        .first()
        .map(Vec::len)
        .ok_or(Error::EmptySample)?;
    for rep in reps {
        if rep.len() != dimension {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                actual: rep.len(),
            });
        }
    }
    let class_index = |label: &String| -> Result<usize> {
        class_labels
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::UnknownClassLabel {
                label: label.clone(),
            })
    };
    let ys: Vec<usize> = labels.iter().map(class_index).collect::<Result<_>>()?;
    for (k, class) in class_labels.iter().enumerate() {
        if !ys.contains(&k) {
            return Err(Error::MissingClass {
                class: class.clone(),
            });
        }
    }

    let h = config.hidden_units;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = MlpModel {
        schema_version: MODEL_SCHEMA_VERSION,
        backend_name: backend_name.to_string(),
        dimension,
        hidden_units: h,
        class_labels: class_labels.to_vec(),
        w1: glorot_init(&mut rng, dimension, h, dimension * h),
        b1: vec![0.0; h],
        w2: glorot_init(&mut rng, h, c, h * c),
        b2: vec![0.0; c],
    };

    let xs: Vec<&EmbeddingVector> = reps.iter().collect();
    let mut best_loss = mean_loss(&model, &xs, &ys);
    let mut best = model.clone();

    let mut order: Vec<usize> = (0..reps.len()).collect();
    for _epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut grads = Grads::zeros(&model);
            for &i in batch {
                accumulate_gradients(&model, &reps[i], ys[i], &mut grads);
            }
            let step = config.learning_rate / batch.len() as f64;
            for (w, g) in model.w1.iter_mut().zip(&grads.w1) {
                *w -= step * g;
            }
            for (w, g) in model.b1.iter_mut().zip(&grads.b1) {
                *w -= step * g;
            }
            for (w, g) in model.w2.iter_mut().zip(&grads.w2) {
                *w -= step * g;
            }
            for (w, g) in model.b2.iter_mut().zip(&grads.b2) {
                *w -= step * g;
            }
        }
        let loss = mean_loss(&model, &xs, &ys);
        if loss < best_loss {
            best_loss = loss;
            best = model.clone();
        }
    }
    Ok(best)
}

const GRAD_CHECK_STEP: f64 = 1e-5;
// Gradients this small sit at the finite-difference noise floor; comparing
// them relatively would only measure rounding error.
const GRAD_CHECK_FLOOR: f64 = 1e-7;

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    if analytic.abs() < GRAD_CHECK_FLOOR && numeric.abs() < GRAD_CHECK_FLOOR {
        0.0
    } else {
        (analytic - numeric).abs() / analytic.abs().max(numeric.abs())
    }
}

/// Compare analytic gradients against central finite differences for every
/// parameter; returns the maximum relative error.
pub fn mlp_grad_check(model: &MlpModel, sample: &[f64], label_index: usize) -> Result<f64> {
    if sample.len() != model.dimension {
        return Err(Error::DimensionMismatch {
            expected: model.dimension,
            actual: sample.len(),
        });
    }
    if label_index >= model.num_classes() {
        return Err(Error::Config(format!(
            "label index {label_index} out of range for {} classes",
            model.num_classes()
        )));
    }
    let mut analytic = Grads::zeros(model);
    accumulate_gradients(model, sample, label_index, &mut analytic);

    let mut probe = model.clone();
    let mut max_rel: f64 = 0.0;
    let groups: [(fn(&mut MlpModel) -> &mut Vec<f64>, &Vec<f64>); 4] = [
        (|m| &mut m.w1, &analytic.w1),
        (|m| &mut m.b1, &analytic.b1),
        (|m| &mut m.w2, &analytic.w2),
        (|m| &mut m.b2, &analytic.b2),
    ];
    for (field, grads) in groups {
        for i in 0..grads.len() {
            let original = field(&mut probe)[i];
            field(&mut probe)[i] = original + GRAD_CHECK_STEP;
            let plus = sample_loss(&probe, sample, label_index);
            field(&mut probe)[i] = original - GRAD_CHECK_STEP;
            let minus = sample_loss(&probe, sample, label_index);
            field(&mut probe)[i] = original;
            let numeric = (plus - minus) / (2.0 * GRAD_CHECK_STEP);
            max_rel = max_rel.max(relative_error(grads[i], numeric));
        }
    }
    Ok(max_rel)
}

/// Predicted label and its probability; ties break toward the lowest class
/// index.
pub fn mlp_predict_vector(x: &[f64], model: &MlpModel) -> Result<(String, f64)> {
    let probs = mlp_forward(x, model)?;
    let mut best = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = k;
        }
    }
    Ok((model.class_labels[best].clone(), probs[best]))
}

/// Classify a snippet end to end: pooled representation, then the head.
pub fn mlp_predict(
    snippet_id: &str,
    tokens: &[String],
    window_size: usize,
    backend: &dyn EmbeddingBackend,
    model: &MlpModel,
) -> Result<(String, f64)> {
    if backend.dimension() != model.dimension {
        return Err(Error::DimensionMismatch {
            expected: model.dimension,
            actual: backend.dimension(),
        });
    }
    if backend.name() != model.backend_name {
        log::warn!(
            "model was trained with backend {:?} but {:?} is in use",
            model.backend_name,
            backend.name()
        );
    }
    let rep = crate::embed::represent(snippet_id, tokens, window_size, backend)?;
    mlp_predict_vector(&rep, model)
}
