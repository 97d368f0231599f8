//! A small joint demosaicing/denoising CNN with hand-written backpropagation.
//!
//! Three ways of feeding all CFA patterns to one shared trunk:
//!
//! * [`Strategy::Embedding`]: intensity plus a per-pixel one-hot filter code
//!   (4 input channels); masked pixels get an all-zero code.
//! * [`Strategy::ShuffleHead`]: Quad/Nona mosaics are shuffle-remosaiced to
//!   Single-Bayer first, the trunk sees one channel.
//! * [`Strategy::LatentHead`]: a per-pattern convolution lifts the raw mosaic
//!   into a shared latent space before the trunk.
//!
//! The network predicts a correction on top of a fixed bilinear-style
//! reconstruction of its input, so a zero final layer reproduces that
//! baseline exactly.

mod adam;
mod batch;
mod conv;
mod net;
mod scalar;
mod serialize;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use batch::{build_batch, prepare_input, NetInput, TrainBatch, TrainItem};
pub use net::{
    backward, baseline_image, forward, forward_one, loss_mse, output_image, ConvParams, MicroNetParams, Weights,
};
pub use scalar::Scalar;
pub use serialize::{model_from_bytes, model_to_bytes, read_model, write_model};
pub use train::{evaluate, evaluate_images, train, DeadHandling, EvalOptions, EvalRecord, EvalSummary, TrainOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "esum")]
    Embedding,
    #[serde(rename = "srum")]
    ShuffleHead,
    #[serde(rename = "lsum")]
    LatentHead,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Embedding => "esum",
            Strategy::ShuffleHead => "srum",
            Strategy::LatentHead => "lsum",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "esum" => Ok(Strategy::Embedding),
            "srum" => Ok(Strategy::ShuffleHead),
            "lsum" => Ok(Strategy::LatentHead),
            other => Err(Error::invalid(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvSpec {
    pub kernel: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub activation: Activation,
}

impl ConvSpec {
    pub fn new(kernel: usize, in_channels: usize, out_channels: usize, activation: Activation) -> Self {
        ConvSpec { kernel, in_channels, out_channels, activation }
    }

    pub fn fan_in(&self) -> usize {
        self.in_channels * self.kernel * self.kernel
    }

    pub fn weight_len(&self) -> usize {
        self.out_channels * self.fan_in()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroNetConfig {
    pub strategy: Strategy,
    pub layers: Vec<ConvSpec>,
    /// Width of the shared latent space (LatentHead only).
    pub latent_channels: usize,
    pub learning_rate: f64,
    pub batch_per_pattern: usize,
    /// Fraction of pixels dropped per training mosaic, drawn uniformly in `[lo, hi]`.
    pub maskout_range: (f64, f64),
    pub seed: u64,
}

pub const DEFAULT_WIDTH: usize = 16;
pub const DEFAULT_DEPTH: usize = 5;
pub const DEFAULT_LATENT: usize = 16;

impl MicroNetConfig {
    /// Five 3x3 layers, 16 channels, ReLU between, linear RGB output.
    pub fn default_for(strategy: Strategy) -> Self {
        Self::plain(strategy, DEFAULT_DEPTH, DEFAULT_WIDTH, 3)
    }

    /// `depth` conv layers of `kernel x kernel`, `width` hidden channels.
    pub fn plain(strategy: Strategy, depth: usize, width: usize, kernel: usize) -> Self {
        let input = Self::trunk_input_channels(strategy, DEFAULT_LATENT);
        let mut layers = Vec::with_capacity(depth);
        for i in 0..depth {
            let cin = if i == 0 { input } else { width };
            let last = i + 1 == depth;
            let cout = if last { 3 } else { width };
            let act = if last { Activation::Identity } else { Activation::Relu };
            layers.push(ConvSpec::new(kernel, cin, cout, act));
        }
        MicroNetConfig {
            strategy,
            layers,
            latent_channels: DEFAULT_LATENT,
            learning_rate: 1e-4,
            batch_per_pattern: 16,
            maskout_range: (0.0, 0.0),
            seed: 0,
        }
    }

    pub fn trunk_input_channels(strategy: Strategy, latent: usize) -> usize {
        match strategy {
            Strategy::Embedding => 4,
            Strategy::ShuffleHead => 1,
            Strategy::LatentHead => latent,
        }
    }

    /// Raw channels the strategy feeds in (before any head).
    pub fn input_channels(&self) -> usize {
        match self.strategy {
            Strategy::Embedding => 4,
            Strategy::ShuffleHead | Strategy::LatentHead => 1,
        }
    }

    /// Per-pattern head layer (LatentHead only).
    pub fn head_spec(&self) -> Option<ConvSpec> {
        (self.strategy == Strategy::LatentHead)
            .then(|| ConvSpec::new(3, 1, self.latent_channels, Activation::Relu))
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.layers.first().ok_or_else(|| Error::invalid("network needs at least one layer"))?;
        let want = Self::trunk_input_channels(self.strategy, self.latent_channels);
        if first.in_channels != want {
            return Err(Error::invalid(format!(
                "{} trunk takes {want} input channels, first layer has {}",
                self.strategy, first.in_channels
            )));
        }
        if self.layers.last().map(|l| l.out_channels) != Some(3) {
            return Err(Error::invalid("final layer must output 3 channels"));
        }
        for pair in self.layers.windows(2) {
            if pair[0].out_channels != pair[1].in_channels {
                return Err(Error::invalid("consecutive layer channel counts disagree"));
            }
        }
        if self.layers.iter().any(|l| l.kernel % 2 == 0) {
            return Err(Error::invalid("kernels must be odd-sized"));
        }
        let (lo, hi) = self.maskout_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::invalid(format!("maskout range [{lo}, {hi}] is not a sub-interval of [0, 1]")));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.batch_per_pattern == 0 {
            return Err(Error::invalid("batch_per_pattern must be positive"));
        }
        Ok(())
    }
}
