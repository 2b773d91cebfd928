//! Synthetic imbalanced probability-vector datasets.
//!
//! Rows imitate the per-class probability outputs of an upstream classifier:
//! for a sample of class `c`, a logit vector with 4.0 at position `c` and 0
//! elsewhere gets independent zero-mean Gaussian noise with standard
//! deviation `confusion_scale` on every coordinate, then a softmax puts the
//! row on the probability simplex. Higher `confusion_scale` means more class
//! overlap and a harder dataset.
//!
//! Gaussian draws use the Marsaglia polar transform over the seeded ChaCha8
//! stream, so generation is reproducible from the seed alone.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::substream;

/// Logit placed at the true-class coordinate before noise.
const CLASS_LOGIT: f64 = 4.0;

/// Parameters for the generator: per-class sample counts, overlap scale,
/// and the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub counts: Vec<usize>,
    pub confusion_scale: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.counts.len() < 2 {
            return Err(Error::Config("generator needs at least 2 classes".into()));
        }
        if self.counts.iter().any(|&n| n == 0) {
            return Err(Error::Config("every class count must be >= 1".into()));
        }
        if !(self.confusion_scale >= 0.0) || !self.confusion_scale.is_finite() {
            return Err(Error::Config("confusion_scale must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Named class-count presets.
///
/// `dr-like` has five classes with counts [1805, 370, 999, 193, 295] (a
/// heavily imbalanced retinopathy-severity distribution); `bt-like` has four
/// roughly balanced classes [1621, 1645, 2000, 1757]. Both default to
/// confusion_scale 2.0 and seed 0.
pub fn preset(name: &str) -> Result<GeneratorSpec> {
    let counts = match name {
        "dr-like" => vec![1805, 370, 999, 193, 295],
        "bt-like" => vec![1621, 1645, 2000, 1757],
        _ => {
            return Err(Error::Config(format!(
                "unknown preset '{name}' (expected dr-like or bt-like)"
            )))
        }
    };
    Ok(GeneratorSpec {
        counts,
        confusion_scale: 2.0,
        seed: 0,
    })
}

/// One Gaussian draw at a time from the Marsaglia polar transform.
///
/// Each acceptance of the rejection loop yields two independent N(0,1)
/// values; the second is held back for the next call.
struct PolarGaussian {
    spare: Option<f64>,
}

impl PolarGaussian {
    fn new() -> Self {
        Self { spare: None }
    }

    fn sample(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * rng.gen::<f64>() - 1.0;
            let v = 2.0 * rng.gen::<f64>() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * factor);
                return u * factor;
            }
        }
    }
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Generate the dataset described by `spec`. Rows are emitted class by class
/// (all of class 0, then class 1, ...), each class drawing noise from its own
/// substream of the seed. Class names are `c0..c{C-1}`, zero padded so the
/// lexicographic label encoding used by CSV ingestion preserves class order.
pub fn generate(spec: &GeneratorSpec) -> Result<Dataset> {
    spec.validate()?;
    let c = spec.counts.len();
    let m: usize = spec.counts.iter().sum();
    let mut features = Array2::zeros((m, c));
    let mut labels = Vec::with_capacity(m);
    let mut row_idx = 0;
    for (class, &n) in spec.counts.iter().enumerate() {
        let mut rng = substream(spec.seed, class as u64);
        let mut gauss = PolarGaussian::new();
        for _ in 0..n {
            let mut logits = vec![0.0; c];
            logits[class] = CLASS_LOGIT;
            if spec.confusion_scale > 0.0 {
                for l in logits.iter_mut() {
                    *l += spec.confusion_scale * gauss.sample(&mut rng);
                }
            }
            softmax_in_place(&mut logits);
            for (j, &p) in logits.iter().enumerate() {
                features[[row_idx, j]] = p;
            }
            labels.push(class);
            row_idx += 1;
        }
    }
    Dataset::new(features, labels, class_name_table(c))
}

/// Zero-padded class names `c0..c{C-1}`.
pub fn class_name_table(c: usize) -> Vec<String> {
    let width = (c.max(2) - 1).to_string().len();
    (0..c).map(|i| format!("c{i:0width$}")).collect()
}

/// Isotropic Gaussian point clouds, one cluster per class. Used as the
/// standard separable fixture for classifier tests: well-separated centers
/// with small sigma give a linearly separable dataset.
pub fn gaussian_blobs(centers: &[Vec<f64>], n_per_class: usize, sigma: f64, seed: u64) -> Result<Dataset> {
    if centers.len() < 2 {
        return Err(Error::Config("blobs need at least 2 centers".into()));
    }
    let d = centers[0].len();
    if d == 0 || centers.iter().any(|ctr| ctr.len() != d) {
        return Err(Error::Config("blob centers must share a positive dimension".into()));
    }
    if n_per_class == 0 {
        return Err(Error::Config("blobs need at least 1 point per class".into()));
    }
    let c = centers.len();
    let m = c * n_per_class;
    let mut features = Array2::zeros((m, d));
    let mut labels = Vec::with_capacity(m);
    let mut row_idx = 0;
    for (class, center) in centers.iter().enumerate() {
        let mut rng = substream(seed, class as u64);
        let mut gauss = PolarGaussian::new();
        for _ in 0..n_per_class {
            for (j, &cj) in center.iter().enumerate() {
                features[[row_idx, j]] = cj + sigma * gauss.sample(&mut rng);
            }
            labels.push(class);
            row_idx += 1;
        }
    }
    Dataset::new(features, labels, class_name_table(c))
}

/// Fraction of rows whose largest feature coordinate is the true class.
/// Feature rows must have one column per class.
pub fn argmax_accuracy(ds: &Dataset) -> f64 {
    let mut correct = 0;
    for (row, &label) in ds.features().rows().into_iter().zip(ds.labels()) {
        let mut best = 0;
        for (j, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = j;
            }
        }
        if best == label {
            correct += 1;
        }
    }
    correct as f64 / ds.n_samples() as f64
}
