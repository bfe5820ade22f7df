//! Dense softmax classifiers with hand-written gradients.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::mixers::LabelVector;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Linear,
    /// One tanh hidden layer.
    Mlp { hidden: usize },
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arch::Linear => write!(f, "linear"),
            Arch::Mlp { hidden } => write!(f, "mlp:{hidden}"),
        }
    }
}

impl FromStr for Arch {
    type Err = Error;

    /// `linear`, `mlp` (64 hidden units) or `mlp:<hidden>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "linear" => Ok(Arch::Linear),
            None if s == "mlp" => Ok(Arch::Mlp { hidden: 64 }),
            Some(("mlp", h)) => match h.parse::<usize>() {
                Ok(hidden) if hidden > 0 => Ok(Arch::Mlp { hidden }),
                _ => Err(Error::invalid(format!("bad hidden size {h:?}"))),
            },
            _ => Err(Error::invalid(format!("unknown architecture {s:?}"))),
        }
    }
}

/// A fully connected layer: `out = W x + b`, `W` row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }
}

/// Fixed input transform `(x - mean) * scale`, per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Smallest standard deviation used for scaling.
    pub const MIN_STD: f64 = 0.05;

    /// Per-feature mean of `images` and one shared scale, the inverse of the
    /// root-mean-square deviation over all features.
    pub fn fit(images: &[ImageBuffer]) -> Result<Self> {
        let first = images
            .first()
            .ok_or_else(|| Error::EmptyInput("no images to standardize".into()))?;
        let d = first.data().len();
        let n = images.len() as f64;
        let mut mean = vec![0.0; d];
        for im in images {
            mean.iter_mut().zip(im.data()).for_each(|(m, v)| *m += v / n);
        }
        let mut sq = 0.0;
        for im in images {
            sq += im.data().iter().zip(&mean).map(|(v, m)| (v - m) * (v - m)).sum::<f64>();
        }
        let std = (sq / (n * d as f64)).sqrt().max(Self::MIN_STD);
        Ok(Self {
            mean,
            scale: vec![1.0 / std; d],
        })
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) * s)
            .collect()
    }
}

/// Model parameters. Gradients use the same type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub arch: Arch,
    pub input_dim: usize,
    pub n_classes: usize,
    /// Applied to every input before the first layer; not trained.
    #[serde(default)]
    pub standardizer: Option<Standardizer>,
    /// Input layer first; hidden layers use tanh.
    pub layers: Vec<Dense>,
}

impl ModelParams {
    /// Xavier-uniform weights, zero biases.
    pub fn init(arch: Arch, input_dim: usize, n_classes: usize, seed: u64) -> Result<Self> {
        let mut params = Self::zeros(arch, input_dim, n_classes)?;
        let mut rng = RngStream::derive(seed, &[u64::MAX, 0]).rng();
        for layer in &mut params.layers {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(params)
    }

    pub fn zeros(arch: Arch, input_dim: usize, n_classes: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid("input dimension must be >= 1"));
        }
        if n_classes < 2 {
            return Err(Error::invalid("a classifier needs at least 2 classes"));
        }
        let layers = match arch {
            Arch::Linear => vec![Dense::zeros(input_dim, n_classes)],
            Arch::Mlp { hidden } => {
                if hidden == 0 {
                    return Err(Error::invalid("hidden size must be >= 1"));
                }
                vec![Dense::zeros(input_dim, hidden), Dense::zeros(hidden, n_classes)]
            }
        };
        Ok(Self {
            arch,
            input_dim,
            n_classes,
            standardizer: None,
            layers,
        })
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_parameters());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Inverse of [`ModelParams::flatten`].
    pub fn unflatten(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_parameters() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} parameters", self.num_parameters()),
                actual: format!("{} parameters", values.len()),
            });
        }
        let mut rest = values;
        for l in &mut self.layers {
            let (w, tail) = rest.split_at(l.weights.len());
            let (b, tail) = tail.split_at(l.bias.len());
            l.weights.copy_from_slice(w);
            l.bias.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// `self -= lr * grads`.
    pub fn sgd_step(&mut self, grads: &ModelParams, lr: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, gw) in l.weights.iter_mut().zip(&g.weights) {
                *w -= lr * gw;
            }
            for (b, gb) in l.bias.iter_mut().zip(&g.bias) {
                *b -= lr * gb;
            }
        }
    }

    /// Pre-activations of every layer (logits last) for one input vector.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        acts.push(match &self.standardizer {
            Some(s) => s.apply(x),
            None => x.to_vec(),
        });
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.apply(acts.last().expect("input pushed"));
            if i + 1 < self.layers.len() {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(z);
        }
        acts
    }

    /// Logits for one image.
    pub fn forward(&self, image: &ImageBuffer) -> Result<Vec<f64>> {
        self.check_input(image)?;
        Ok(self.activations(image.data()).pop().expect("at least one layer"))
    }

    fn check_input(&self, image: &ImageBuffer) -> Result<()> {
        if image.data().len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: format!("{} inputs", self.input_dim),
                actual: format!("{} inputs", image.data().len()),
            });
        }
        Ok(())
    }

    fn check_batch(&self, images: &[ImageBuffer], labels: &[LabelVector]) -> Result<()> {
        if images.is_empty() {
            return Err(Error::EmptyInput("empty batch".into()));
        }
        if images.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} labels", images.len()),
                actual: format!("{} labels", labels.len()),
            });
        }
        for (im, y) in images.iter().zip(labels) {
            self.check_input(im)?;
            if y.n_classes() != self.n_classes {
                return Err(Error::DimensionMismatch {
                    expected: format!("{} classes", self.n_classes),
                    actual: format!("{} classes", y.n_classes()),
                });
            }
        }
        Ok(())
    }
}

/// `log softmax(z)`.
pub fn log_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

/// Soft-target cross entropy `-sum_k y_k log p_k`; zero-weight terms contribute nothing.
pub fn soft_cross_entropy(logits: &[f64], target: &[f64]) -> f64 {
    log_softmax(logits)
        .iter()
        .zip(target)
        .filter(|(_, &y)| y != 0.0)
        .map(|(lp, y)| -y * lp)
        .sum()
}

/// Mean soft cross entropy over the batch, and the logits of every sample.
pub fn forward_loss(
    params: &ModelParams,
    images: &[ImageBuffer],
    labels: &[LabelVector],
) -> Result<(f64, Vec<Vec<f64>>)> {
    params.check_batch(images, labels)?;
    let logits: Vec<Vec<f64>> = images
        .iter()
        .map(|im| params.activations(im.data()).pop().expect("at least one layer"))
        .collect();
    let total: f64 = logits
        .iter()
        .zip(labels)
        .map(|(z, y)| soft_cross_entropy(z, y.weights()))
        .sum();
    Ok((total / images.len() as f64, logits))
}

/// Adds `scale * d loss_i / d params` for every sample to `grads`; returns the summed loss.
fn accumulate(
    params: &ModelParams,
    images: &[ImageBuffer],
    labels: &[LabelVector],
    scale: f64,
    grads: &mut ModelParams,
) -> f64 {
    let mut total = 0.0;
    for (im, y) in images.iter().zip(labels) {
        let acts = params.activations(im.data());
        let logits = acts.last().expect("at least one layer");
        total += soft_cross_entropy(logits, y.weights());
        // d loss / d logits = p - y
        let mut delta: Vec<f64> = log_softmax(logits)
            .iter()
            .zip(y.weights())
            .map(|(lp, t)| (lp.exp() - t) * scale)
            .collect();
        for (i, layer) in params.layers.iter().enumerate().rev() {
            let input = &acts[i];
            let g = &mut grads.layers[i];
            for (o, &d) in delta.iter().enumerate() {
                g.bias[o] += d;
                if d != 0.0 {
                    for (gw, x) in g.weights[o * layer.inputs..(o + 1) * layer.inputs].iter_mut().zip(input) {
                        *gw += d * x;
                    }
                }
            }
            if i > 0 {
                // back through W, then through tanh (input = tanh(z))
                let mut prev = vec![0.0; layer.inputs];
                for (o, &d) in delta.iter().enumerate() {
                    for (p, w) in prev.iter_mut().zip(&layer.weights[o * layer.inputs..(o + 1) * layer.inputs]) {
                        *p += d * w;
                    }
                }
                for (p, a) in prev.iter_mut().zip(input) {
                    *p *= 1.0 - a * a;
                }
                delta = prev;
            }
        }
    }
    total
}

/// Mean loss and its analytic gradient.
pub fn loss_and_gradients(
    params: &ModelParams,
    images: &[ImageBuffer],
    labels: &[LabelVector],
) -> Result<(f64, ModelParams)> {
    params.check_batch(images, labels)?;
    let n = images.len() as f64;
    let mut grads = ModelParams::zeros(params.arch, params.input_dim, params.n_classes)?;
    let total = accumulate(params, images, labels, 1.0 / n, &mut grads);
    Ok((total / n, grads))
}

/// Samples per partial sum in [`chunked_loss_and_gradients`].
pub const GRADIENT_CHUNK: usize = 16;

/// Like [`loss_and_gradients`], but sums fixed chunks of [`GRADIENT_CHUNK`]
/// samples (in parallel when a pool is given) and then adds the partial sums in
/// chunk order, so the result does not depend on the number of threads.
pub fn chunked_loss_and_gradients(
    params: &ModelParams,
    images: &[ImageBuffer],
    labels: &[LabelVector],
    pool: Option<&rayon::ThreadPool>,
) -> Result<(f64, ModelParams)> {
    params.check_batch(images, labels)?;
    let n = images.len() as f64;
    let chunk = |(ims, ys): (&[ImageBuffer], &[LabelVector])| -> Result<(f64, ModelParams)> {
        let mut g = ModelParams::zeros(params.arch, params.input_dim, params.n_classes)?;
        let loss = accumulate(params, ims, ys, 1.0 / n, &mut g);
        Ok((loss, g))
    };
    let pieces: Vec<(&[ImageBuffer], &[LabelVector])> = images
        .chunks(GRADIENT_CHUNK)
        .zip(labels.chunks(GRADIENT_CHUNK))
        .collect();
    let partial: Vec<(f64, ModelParams)> = match pool {
        Some(pool) => {
            use rayon::prelude::*;
            pool.install(|| pieces.into_par_iter().map(chunk).collect::<Result<_>>())?
        }
        None => pieces.into_iter().map(chunk).collect::<Result<_>>()?,
    };
    let mut iter = partial.into_iter();
    let (mut total, mut grads) = iter.next().expect("non-empty batch");
    for (loss, g) in iter {
        total += loss;
        for (acc, part) in grads.layers.iter_mut().zip(&g.layers) {
            acc.weights.iter_mut().zip(&part.weights).for_each(|(a, b)| *a += b);
            acc.bias.iter_mut().zip(&part.bias).for_each(|(a, b)| *a += b);
        }
    }
    Ok((total / n, grads))
}

/// Analytic gradient of the mean batch loss.
pub fn backward(params: &ModelParams, images: &[ImageBuffer], labels: &[LabelVector]) -> Result<ModelParams> {
    loss_and_gradients(params, images, labels).map(|(_, g)| g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_differences(params: &ModelParams, images: &[ImageBuffer], labels: &[LabelVector]) -> Vec<f64> {
        let step = 1e-5;
        let base = params.flatten();
        let mut probe = params.clone();
        (0..base.len())
            .map(|i| {
                let mut v = base.clone();
                v[i] = base[i] + step;
                probe.unflatten(&v).unwrap();
                let up = forward_loss(&probe, images, labels).unwrap().0;
                v[i] = base[i] - step;
                probe.unflatten(&v).unwrap();
                let down = forward_loss(&probe, images, labels).unwrap().0;
                (up - down) / (2.0 * step)
            })
            .collect()
    }

    fn instance(seed: u64) -> (Vec<ImageBuffer>, Vec<LabelVector>) {
        let mut rng = RngStream::new(seed, 1).rng();
        let images = (0..3)
            .map(|_| ImageBuffer::from_fn(1, 2, 3, |_, _, _| rng.random::<f64>()))
            .collect();
        let labels = (0..3)
            .map(|_| {
                let a: f64 = rng.random();
                LabelVector::new(vec![a, (1.0 - a) * 0.5, (1.0 - a) * 0.5]).unwrap()
            })
            .collect();
        (images, labels)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for arch in [Arch::Linear, Arch::Mlp { hidden: 4 }] {
            for seed in 0..5 {
                let (images, labels) = instance(seed);
                let params = ModelParams::init(arch, 6, 3, seed).unwrap();
                let analytic = backward(&params, &images, &labels).unwrap().flatten();
                let numeric = central_differences(&params, &images, &labels);
                for (a, n) in analytic.iter().zip(&numeric) {
                    let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
                    assert!(rel < 1e-4, "{arch}: {a} vs {n}");
                }
            }
        }
    }

    #[test]
    fn uniform_logits_cost_log_two() {
        let params = ModelParams::zeros(Arch::Linear, 2, 2).unwrap();
        let image = ImageBuffer::filled(1, 2, 1, 0.3);
        let label = LabelVector::new(vec![0.75, 0.25]).unwrap();
        let (loss, logits) = forward_loss(&params, &[image], &[label]).unwrap();
        assert_eq!(logits, vec![vec![0.0, 0.0]]);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn target_equal_to_prediction_gives_entropy() {
        let mut params = ModelParams::zeros(Arch::Linear, 1, 3).unwrap();
        params.layers[0].bias = vec![0.2, -1.0, 0.7];
        let p: Vec<f64> = log_softmax(&params.layers[0].bias).iter().map(|v| v.exp()).collect();
        let label = LabelVector::new(p.clone()).unwrap();
        let (loss, _) = forward_loss(&params, &[ImageBuffer::filled(1, 1, 1, 0.0)], &[label]).unwrap();
        let entropy: f64 = -p.iter().map(|q| q * q.ln()).sum::<f64>();
        assert!((loss - entropy).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_prediction_costs_nothing() {
        let mut params = ModelParams::zeros(Arch::Linear, 1, 2).unwrap();
        params.layers[0].bias = vec![800.0, -800.0];
        let (loss, _) = forward_loss(
            &params,
            &[ImageBuffer::filled(1, 1, 1, 0.0)],
            &[LabelVector::one_hot(0, 2)],
        )
        .unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn zero_input_linear_gradient() {
        let mut params = ModelParams::zeros(Arch::Linear, 4, 3).unwrap();
        params.layers[0].bias = vec![0.1, 0.5, -0.2];
        let y = LabelVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let g = backward(&params, &[ImageBuffer::filled(2, 2, 1, 0.0)], &[y.clone()]).unwrap();
        assert!(g.layers[0].weights.iter().all(|&w| w == 0.0));
        let p: Vec<f64> = log_softmax(&params.layers[0].bias).iter().map(|v| v.exp()).collect();
        for k in 0..3 {
            assert!((g.layers[0].bias[k] - (p[k] - y.weights()[k])).abs() < 1e-15);
        }
    }

    #[test]
    fn duplicated_sample_has_same_gradient() {
        let (images, labels) = instance(3);
        let params = ModelParams::init(Arch::Mlp { hidden: 5 }, 6, 3, 1).unwrap();
        let single = backward(&params, &images[..1], &labels[..1]).unwrap().flatten();
        let double = backward(
            &params,
            &[images[0].clone(), images[0].clone()],
            &[labels[0].clone(), labels[0].clone()],
        )
        .unwrap()
        .flatten();
        for (a, b) in single.iter().zip(&double) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_check_with_standardizer() {
        let (images, labels) = instance(11);
        let mut params = ModelParams::init(Arch::Mlp { hidden: 4 }, 6, 3, 2).unwrap();
        params.standardizer = Some(Standardizer::fit(&images).unwrap());
        let analytic = backward(&params, &images, &labels).unwrap().flatten();
        for (a, n) in analytic.iter().zip(central_differences(&params, &images, &labels)) {
            assert!((a - n).abs() / a.abs().max(n.abs()).max(1e-6) < 1e-4);
        }
    }

    #[test]
    fn standardizer_centres_features() {
        let images = vec![
            ImageBuffer::new(1, 2, 1, vec![0.2, 0.5]).unwrap(),
            ImageBuffer::new(1, 2, 1, vec![0.6, 0.5]).unwrap(),
        ];
        let s = Standardizer::fit(&images).unwrap();
        assert!((s.mean[0] - 0.4).abs() < 1e-15 && (s.mean[1] - 0.5).abs() < 1e-15);
        // squared deviations 0.04, 0, 0.04, 0 average to 0.02
        assert!(s.scale.iter().all(|k| (k - 1.0 / 0.02f64.sqrt()).abs() < 1e-9));
        let flat = Standardizer::fit(&[ImageBuffer::filled(1, 1, 1, 0.3)]).unwrap();
        assert_eq!(flat.scale, vec![1.0 / Standardizer::MIN_STD]);
    }

    #[test]
    fn chunked_gradient_is_thread_independent() {
        let mut rng = RngStream::new(4, 4).rng();
        let images: Vec<ImageBuffer> = (0..37)
            .map(|_| ImageBuffer::from_fn(2, 3, 1, |_, _, _| rng.random::<f64>()))
            .collect();
        let labels: Vec<LabelVector> = (0..37).map(|i| LabelVector::one_hot(i % 3, 3)).collect();
        let params = ModelParams::init(Arch::Mlp { hidden: 7 }, 6, 3, 2).unwrap();
        let inline = chunked_loss_and_gradients(&params, &images, &labels, None).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let pooled = chunked_loss_and_gradients(&params, &images, &labels, Some(&pool)).unwrap();
        assert_eq!(inline, pooled);
        let (loss, grads) = loss_and_gradients(&params, &images, &labels).unwrap();
        assert!((loss - inline.0).abs() < 1e-12);
        for (a, b) in grads.flatten().iter().zip(inline.1.flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn flatten_round_trip_and_arch_parsing() {
        let p = ModelParams::init(Arch::Mlp { hidden: 3 }, 4, 2, 9).unwrap();
        let mut q = ModelParams::zeros(p.arch, 4, 2).unwrap();
        q.unflatten(&p.flatten()).unwrap();
        assert_eq!(p, q);
        assert_eq!(p.num_parameters(), 4 * 3 + 3 + 3 * 2 + 2);
        assert_eq!("mlp:64".parse::<Arch>().unwrap(), Arch::Mlp { hidden: 64 });
        assert_eq!("linear".parse::<Arch>().unwrap(), Arch::Linear);
        assert!("mlp:0".parse::<Arch>().is_err());
        assert!("cnn".parse::<Arch>().is_err());
    }
}
