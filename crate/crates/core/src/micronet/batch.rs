use rand::Rng;

use super::scalar::Scalar;
use super::{MicroNetConfig, Strategy};
use crate::cfa::{make_embedding, CfaKind};
use crate::demosaic::{channel_map, random_mask, tent_radius, tent_reconstruct};
use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::mining::{PatchSet, Split};
use crate::mosaic::{sample_mosaic, shuffle_remosaic, Mosaic};
use crate::noise::{synthesize, NoiseModel};
use crate::rng;

/// One network input: strategy-specific channels plus the residual baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct NetInput<T> {
    pub kind: CfaKind,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    /// `channels x H x W`
    pub data: Vec<T>,
    /// `3 x H x W` bilinear-style reconstruction of the same mosaic.
    pub baseline: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainItem<T> {
    pub input: NetInput<T>,
    /// Clean RGB, `3 x H x W`.
    pub target: Vec<T>,
    /// Pixels removed by maskout.
    pub dropped: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainBatch<T> {
    pub items: Vec<TrainItem<T>>,
}

impl<T> TrainBatch<T> {
    pub fn of_kind(&self, kind: CfaKind) -> impl Iterator<Item = &TrainItem<T>> {
        self.items.iter().filter(move |i| i.input.kind == kind)
    }
}

fn hwc_to_chw<T: Scalar>(data: &[f64], channels: usize) -> Vec<T> {
    let hw = data.len() / channels;
    let mut out = vec![T::zero(); data.len()];
    for i in 0..hw {
        for c in 0..channels {
            out[c * hw + i] = T::of(data[i * channels + c]);
        }
    }
    out
}

pub(crate) fn image_chw<T: Scalar>(image: &RgbImage) -> Vec<T> {
    hwc_to_chw(image.data(), 3)
}

/// Builds the input the given strategy feeds to the network. Dead pixels of
/// `mosaic` arrive as zeros (and, for the embedding, an all-zero code).
pub fn prepare_input<T: Scalar>(mosaic: &Mosaic, strategy: Strategy) -> Result<NetInput<T>> {
    let (h, w) = (mosaic.height(), mosaic.width());
    let kind = mosaic.kind();
    let (channels, data, baseline) = match strategy {
        Strategy::Embedding => {
            let e = make_embedding(mosaic)?;
            let base = tent_reconstruct(&e.intensities(), &e.channel_map(), h, w, tent_radius(kind));
            (4, hwc_to_chw(&e.data, 4), base)
        }
        Strategy::ShuffleHead => {
            let single = if kind == CfaKind::Single { mosaic.clone() } else { shuffle_remosaic(mosaic)? };
            let base = tent_reconstruct(single.data(), &channel_map(&single), h, w, 1);
            (1, single.data().iter().map(|&v| T::of(v)).collect(), base)
        }
        Strategy::LatentHead => {
            let base = tent_reconstruct(mosaic.data(), &channel_map(mosaic), h, w, tent_radius(kind));
            (1, mosaic.data().iter().map(|&v| T::of(v)).collect(), base)
        }
    };
    Ok(NetInput { kind, channels, height: h, width: w, data, baseline: hwc_to_chw(&baseline, 3) })
}

/// Clean patch -> mosaic -> noise -> maskout -> strategy input.
#[allow(clippy::too_many_arguments)]
pub(crate) fn make_item<T: Scalar>(
    clean: &RgbImage,
    kind: CfaKind,
    noise: &NoiseModel,
    strategy: Strategy,
    maskout_fraction: f64,
    seed: u64,
) -> Result<TrainItem<T>> {
    let mosaic = sample_mosaic(clean, &kind.layout())?;
    let mut noisy = synthesize(&mosaic, noise, rng::derive_seed(seed, 1))?;
    let n = clean.height() * clean.width();
    let dropped = (maskout_fraction * n as f64).round() as usize;
    if dropped > 0 {
        let mask = random_mask(clean.height(), clean.width(), dropped, &mut rng::rng_for(seed, 2));
        noisy = noisy.with_dead(mask)?;
    }
    Ok(TrainItem { input: prepare_input(&noisy, strategy)?, target: image_chw(clean), dropped })
}

/// `batch_per_pattern` items for each of Single, Quad and Nona, drawn from
/// the training split. Deterministic in `seed`.
pub fn build_batch<T: Scalar>(
    dataset: &PatchSet,
    noise: &NoiseModel,
    config: &MicroNetConfig,
    seed: u64,
) -> Result<TrainBatch<T>> {
    let records = dataset.records(Split::Train);
    if records.is_empty() {
        return Err(Error::invalid("training split is empty"));
    }
    let mut rng = rng::rng(seed);
    let (lo, hi) = config.maskout_range;
    let mut items = Vec::with_capacity(3 * config.batch_per_pattern);
    for kind in CfaKind::ALL {
        for _ in 0..config.batch_per_pattern {
            let rec = records[rng.random_range(0..records.len())];
            let fraction = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            let item_seed: u64 = rng.random();
            let clean = dataset.patch(rec)?;
            items.push(make_item(&clean, kind, noise, config.strategy, fraction, item_seed)?);
        }
    }
    Ok(TrainBatch { items })
}
