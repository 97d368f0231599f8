use std::io::Write;

use serde::Serialize;

use super::adam::{adam_step, AdamConfig};
use super::batch::{build_batch, prepare_input};
use super::net::{backward, baseline_image, forward_one, output_image, MicroNetParams};
use super::scalar::Scalar;
use super::MicroNetConfig;
use crate::cfa::CfaKind;
use crate::demosaic::{interpolate_dead, make_dead_mask};
use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::metrics::{self, MetricReport, DEFAULT_BORDER};
use crate::mining::{PatchSet, Split};
use crate::mosaic::sample_mosaic;
use crate::noise::{synthesize, NoiseModel};
use crate::rng;

/// How evaluation mosaics treat dead pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeadHandling {
    /// Zero the reading and clear its code; the network sees the gap.
    Mask,
    /// Fill with the 7x7 Gaussian same-channel interpolation first.
    Interpolate,
}

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub split: Split,
    pub dead_rate: f64,
    pub dead_handling: DeadHandling,
    pub seed: u64,
    pub border: usize,
    pub max_patches: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            split: Split::Val,
            dead_rate: 0.0,
            dead_handling: DeadHandling::Mask,
            seed: 0x5eed,
            border: DEFAULT_BORDER,
            max_patches: None,
        }
    }
}

/// Mean metrics of the network and of its residual baseline for one pattern.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalSummary {
    pub kind: CfaKind,
    pub count: usize,
    pub net: MetricReport,
    pub baseline: MetricReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRecord {
    pub iteration: usize,
    pub kind: CfaKind,
    pub report: MetricReport,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    pub params: MicroNetParams<T>,
    pub losses: Vec<f64>,
    pub history: Vec<EvalRecord>,
}

impl<T> TrainOutcome<T> {
    /// CSV log: iteration, pattern, psnr, ssim, delta_e.
    pub fn write_history_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iteration,pattern,psnr,ssim,delta_e")?;
        for r in &self.history {
            writeln!(
                out,
                "{},{},{:.6},{:.6},{:.6}",
                r.iteration, r.kind, r.report.psnr_db, r.report.ssim, r.report.delta_e
            )?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Accum {
    psnr: f64,
    ssim: f64,
    delta_e: f64,
    n: usize,
}

impl Accum {
    fn add(&mut self, r: &MetricReport) {
        self.psnr += r.psnr_db;
        self.ssim += r.ssim;
        self.delta_e += r.delta_e;
        self.n += 1;
    }

    fn mean(&self, border: usize) -> MetricReport {
        let n = self.n.max(1) as f64;
        MetricReport { psnr_db: self.psnr / n, ssim: self.ssim / n, delta_e: self.delta_e / n, crop_border: border }
    }
}

/// Evaluates on the mined patches of a split with fresh, seeded noise (and
/// optional dead pixels).
pub fn evaluate<T: Scalar>(
    params: &MicroNetParams<T>,
    config: &MicroNetConfig,
    dataset: &PatchSet,
    noise: &NoiseModel,
    opts: &EvalOptions,
) -> Result<Vec<EvalSummary>> {
    let mut records = dataset.records(opts.split);
    if records.is_empty() {
        return Err(Error::invalid(format!("{:?} split is empty", opts.split)));
    }
    if let Some(max) = opts.max_patches {
        records.truncate(max);
    }
    let patches = records.iter().map(|r| dataset.patch(r)).collect::<Result<Vec<_>>>()?;
    evaluate_images(params, config, &patches, noise, opts)
}

/// Evaluates on arbitrary clean images (`opts.split` and `max_patches` are
/// ignored). Every pattern sees the same images and the same noise seeds, so
/// two networks evaluated with equal options are compared pairwise.
pub fn evaluate_images<T: Scalar>(
    params: &MicroNetParams<T>,
    config: &MicroNetConfig,
    images: &[RgbImage],
    noise: &NoiseModel,
    opts: &EvalOptions,
) -> Result<Vec<EvalSummary>> {
    if images.is_empty() {
        return Err(Error::invalid("nothing to evaluate"));
    }
    let mut out = Vec::with_capacity(3);
    for (ki, kind) in CfaKind::ALL.into_iter().enumerate() {
        let (mut net, mut base) = (Accum::default(), Accum::default());
        for (ri, clean) in images.iter().enumerate() {
            let item_seed = rng::derive_seed(opts.seed, (ri * 3 + ki) as u64);
            let mosaic = sample_mosaic(clean, &kind.layout())?;
            let mut noisy = synthesize(&mosaic, noise, item_seed)?;
            if opts.dead_rate > 0.0 {
                let mask = make_dead_mask(clean.height(), clean.width(), opts.dead_rate, rng::derive_seed(item_seed, 7))?;
                noisy = match opts.dead_handling {
                    DeadHandling::Mask => noisy.with_dead(mask)?,
                    DeadHandling::Interpolate => interpolate_dead(&noisy, &mask)?,
                };
            }
            let input = prepare_input::<T>(&noisy, config.strategy)?;
            let pred = forward_one(params, config, &input)?;
            net.add(&metrics::evaluate(&output_image(&pred, input.height, input.width)?, clean, opts.border)?);
            base.add(&metrics::evaluate(&baseline_image(&input)?, clean, opts.border)?);
        }
        out.push(EvalSummary { kind, count: net.n, net: net.mean(opts.border), baseline: base.mean(opts.border) });
    }
    Ok(out)
}

/// Joint training over all three patterns: each iteration builds one batch
/// per pattern, takes one Adam step on the summed MSE, and every
/// `eval_every` iterations (0 = never) records validation metrics.
pub fn train<T: Scalar>(
    config: &MicroNetConfig,
    dataset: &PatchSet,
    noise: &NoiseModel,
    iterations: usize,
    eval_every: usize,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    if dataset.records(Split::Train).is_empty() {
        return Err(Error::invalid("training split is empty"));
    }
    if eval_every > 0 && dataset.records(Split::Val).is_empty() {
        return Err(Error::invalid("validation split is empty"));
    }
    let mut params = MicroNetParams::<T>::init(config)?;
    let mut history = Vec::new();
    let mut losses = Vec::with_capacity(iterations);
    let eval_opts = EvalOptions { seed: rng::derive_seed(config.seed, 0xe7a1), ..Default::default() };
    let record = |it: usize, p: &MicroNetParams<T>, history: &mut Vec<EvalRecord>| -> Result<()> {
        for s in evaluate(p, config, dataset, noise, &eval_opts)? {
            history.push(EvalRecord { iteration: it, kind: s.kind, report: s.net });
        }
        Ok(())
    };
    if eval_every > 0 {
        record(0, &params, &mut history)?;
    }
    for it in 0..iterations {
        let batch = build_batch::<T>(dataset, noise, config, rng::derive_seed(config.seed, 1 + it as u64))?;
        let (loss, grads) = backward(&params, config, &batch.items)?;
        if !loss.is_finite() || !grads.is_finite() {
            return Err(Error::Diverged { iteration: it, loss });
        }
        adam_step(&mut params.weights, &mut params.adam, &grads, config.learning_rate, AdamConfig::default());
        losses.push(loss);
        if eval_every > 0 && (it + 1) % eval_every == 0 {
            record(it + 1, &params, &mut history)?;
        }
    }
    Ok(TrainOutcome { params, losses, history })
}
