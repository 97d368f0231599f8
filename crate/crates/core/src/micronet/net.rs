use rand::Rng;

use super::adam::AdamState;
use super::batch::{NetInput, TrainItem};
use super::conv::{conv_backward, conv_forward};
use super::scalar::Scalar;
use super::{ConvSpec, MicroNetConfig};
use crate::cfa::CfaKind;
use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvParams<T> {
    /// `out x in x k x k`
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> ConvParams<T> {
    pub fn zeros(spec: &ConvSpec) -> Self {
        ConvParams { weight: vec![T::zero(); spec.weight_len()], bias: vec![T::zero(); spec.out_channels] }
    }
}

/// Every trainable tensor: trunk layers, then one head per CFA kind
/// (LatentHead only). Also used for gradients and optimizer moments.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights<T> {
    pub trunk: Vec<ConvParams<T>>,
    pub heads: Vec<ConvParams<T>>,
}

impl<T: Scalar> Weights<T> {
    pub fn zeros(config: &MicroNetConfig) -> Self {
        Weights {
            trunk: config.layers.iter().map(ConvParams::zeros).collect(),
            heads: config
                .head_spec()
                .map(|h| CfaKind::ALL.iter().map(|_| ConvParams::zeros(&h)).collect())
                .unwrap_or_default(),
        }
    }

    pub fn tensors(&self) -> Vec<&[T]> {
        self.trunk
            .iter()
            .chain(&self.heads)
            .flat_map(|p| [p.weight.as_slice(), p.bias.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        self.trunk
            .iter_mut()
            .chain(self.heads.iter_mut())
            .flat_map(|p| [p.weight.as_mut_slice(), p.bias.as_mut_slice()])
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn scale(&mut self, alpha: T) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v = *v * alpha);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors().iter().flat_map(|t| t.iter()).fold(0.0, |m, v| m.max(v.abs().as_f64()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MicroNetParams<T> {
    pub weights: Weights<T>,
    pub adam: AdamState<T>,
}

fn uniform_init<T: Scalar>(spec: &ConvSpec, rng: &mut rng::Rng) -> ConvParams<T> {
    let bound = (6.0 / spec.fan_in() as f64).sqrt();
    ConvParams {
        weight: (0..spec.weight_len()).map(|_| T::of(rng.random_range(-bound..bound))).collect(),
        bias: vec![T::zero(); spec.out_channels],
    }
}

impl<T: Scalar> MicroNetParams<T> {
    /// Fan-in uniform init for hidden layers and heads; the final layer is zero,
    /// so a fresh network outputs its residual baseline unchanged.
    pub fn init(config: &MicroNetConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::rng_for(config.seed, 0x1417);
        let last = config.layers.len() - 1;
        let trunk = config
            .layers
            .iter()
            .enumerate()
            .map(|(i, spec)| if i == last { ConvParams::zeros(spec) } else { uniform_init(spec, &mut rng) })
            .collect();
        let heads = config
            .head_spec()
            .map(|h| CfaKind::ALL.iter().map(|_| uniform_init(&h, &mut rng)).collect())
            .unwrap_or_default();
        Ok(Self::from_weights(config, Weights { trunk, heads }))
    }

    /// Every layer drawn at random, final layer included (for gradient checks).
    pub fn init_random(config: &MicroNetConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::rng_for(config.seed, 0x1418);
        let trunk = config.layers.iter().map(|s| uniform_init(s, &mut rng)).collect();
        let heads = config
            .head_spec()
            .map(|h| CfaKind::ALL.iter().map(|_| uniform_init(&h, &mut rng)).collect())
            .unwrap_or_default();
        let mut w = Weights { trunk, heads };
        for t in w.tensors_mut() {
            for v in t.iter_mut() {
                if *v == T::zero() {
                    *v = T::of(rng.random_range(-0.1..0.1));
                }
            }
        }
        Ok(Self::from_weights(config, w))
    }

    pub fn from_weights(config: &MicroNetConfig, weights: Weights<T>) -> Self {
        MicroNetParams { adam: AdamState::new(&Weights::zeros(config)), weights }
    }
}

struct Cache<T> {
    cols: Vec<Vec<T>>,
    outs: Vec<Vec<T>>,
}

fn kind_index(kind: CfaKind) -> usize {
    CfaKind::ALL.iter().position(|&k| k == kind).unwrap_or(0)
}

/// The ordered (spec, params) chain an input of `kind` passes through.
fn chain<'a, T: Scalar>(
    config: &'a MicroNetConfig,
    weights: &'a Weights<T>,
    kind: CfaKind,
) -> Vec<(ConvSpec, &'a ConvParams<T>)> {
    let mut out = Vec::with_capacity(config.layers.len() + 1);
    if let Some(h) = config.head_spec() {
        out.push((h, &weights.heads[kind_index(kind)]));
    }
    out.extend(config.layers.iter().copied().zip(&weights.trunk));
    out
}

fn check_input<T: Scalar>(config: &MicroNetConfig, input: &NetInput<T>) -> Result<()> {
    let hw = input.height * input.width;
    if input.channels != config.input_channels() || input.data.len() != input.channels * hw {
        return Err(Error::dims(format!(
            "{} network takes {} input channels, got {} ({} values)",
            config.strategy,
            config.input_channels(),
            input.channels,
            input.data.len()
        )));
    }
    if input.baseline.len() != 3 * hw {
        return Err(Error::dims("baseline must hold 3 channels"));
    }
    Ok(())
}

fn forward_cached<T: Scalar>(weights: &Weights<T>, config: &MicroNetConfig, input: &NetInput<T>) -> Result<(Vec<T>, Cache<T>)> {
    check_input(config, input)?;
    let (h, w) = (input.height, input.width);
    let layers = chain(config, weights, input.kind);
    let mut cache = Cache { cols: Vec::with_capacity(layers.len()), outs: Vec::with_capacity(layers.len()) };
    let mut x: Vec<T> = input.data.clone();
    for (spec, p) in &layers {
        let mut col = Vec::new();
        let y = conv_forward(spec, &p.weight, &p.bias, &x, h, w, &mut col);
        cache.cols.push(col);
        cache.outs.push(y.clone());
        x = y;
    }
    for (v, b) in x.iter_mut().zip(&input.baseline) {
        *v += *b;
    }
    Ok((x, cache))
}

/// Unclamped prediction (`3 x H x W`, channel-first) for one input.
pub fn forward_one<T: Scalar>(params: &MicroNetParams<T>, config: &MicroNetConfig, input: &NetInput<T>) -> Result<Vec<T>> {
    forward_cached(&params.weights, config, input).map(|(y, _)| y)
}

pub fn forward<T: Scalar>(params: &MicroNetParams<T>, config: &MicroNetConfig, inputs: &[NetInput<T>]) -> Result<Vec<Vec<T>>> {
    inputs.iter().map(|i| forward_one(params, config, i)).collect()
}

/// Mean squared error over batch, pixels and channels.
pub fn loss_mse<T: Scalar>(preds: &[Vec<T>], targets: &[Vec<T>]) -> Result<f64> {
    if preds.len() != targets.len() || preds.iter().zip(targets).any(|(p, t)| p.len() != t.len()) {
        return Err(Error::dims("prediction and target shapes differ"));
    }
    let n: usize = preds.iter().map(|p| p.len()).sum();
    if n == 0 {
        return Err(Error::dims("empty batch"));
    }
    let sum: f64 = preds
        .iter()
        .zip(targets)
        .flat_map(|(p, t)| p.iter().zip(t).map(|(a, b)| (a.as_f64() - b.as_f64()).powi(2)))
        .sum();
    Ok(sum / n as f64)
}

/// Loss and its exact gradient w.r.t. every weight and bias.
///
/// Items are processed one at a time in batch order, so the reduction order
/// (and the result) is fixed.
pub fn backward<T: Scalar>(
    params: &MicroNetParams<T>,
    config: &MicroNetConfig,
    batch: &[TrainItem<T>],
) -> Result<(f64, Weights<T>)> {
    let n: usize = batch.iter().map(|i| i.target.len()).sum();
    if n == 0 {
        return Err(Error::dims("empty batch"));
    }
    let scale = T::of(2.0 / n as f64);
    let mut grads = Weights::zeros(config);
    let mut loss = 0.0;
    for item in batch {
        let (pred, cache) = forward_cached(&params.weights, config, &item.input)?;
        if pred.len() != item.target.len() {
            return Err(Error::dims("target shape does not match prediction"));
        }
        let mut dout: Vec<T> = pred
            .iter()
            .zip(&item.target)
            .map(|(&p, &t)| {
                let d = p - t;
                loss += (d * d).as_f64();
                d * scale
            })
            .collect();
        let (h, w) = (item.input.height, item.input.width);
        let layers = chain(config, &params.weights, item.input.kind);
        let head_offset = usize::from(config.head_spec().is_some());
        for li in (0..layers.len()).rev() {
            let (spec, p) = &layers[li];
            let g = if li < head_offset {
                &mut grads.heads[kind_index(item.input.kind)]
            } else {
                &mut grads.trunk[li - head_offset]
            };
            let dx = conv_backward(
                spec,
                &p.weight,
                &cache.cols[li],
                &cache.outs[li],
                &mut dout,
                h,
                w,
                &mut g.weight,
                &mut g.bias,
                li > 0,
            );
            if let Some(dx) = dx {
                dout = dx;
            }
        }
    }
    Ok((loss / n as f64, grads))
}

fn chw_to_image<T: Scalar>(data: &[T], h: usize, w: usize) -> Result<RgbImage> {
    let hw = h * w;
    let mut out = vec![0.0; hw * 3];
    for ch in 0..3 {
        for i in 0..hw {
            out[i * 3 + ch] = data[ch * hw + i].as_f64();
        }
    }
    RgbImage::from_clamped(h, w, out)
}

/// Clamped RGB image from a prediction.
pub fn output_image<T: Scalar>(pred: &[T], height: usize, width: usize) -> Result<RgbImage> {
    chw_to_image(pred, height, width)
}

/// The residual baseline an input carries, as an image.
pub fn baseline_image<T: Scalar>(input: &NetInput<T>) -> Result<RgbImage> {
    chw_to_image(&input.baseline, input.height, input.width)
}
