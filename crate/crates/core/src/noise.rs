//! Heteroscedastic Poisson-Gaussian sensor noise: calibration from flat-field
//! stacks and synthesis of noisy mosaics.
//!
//! Noise variance at intensity `x` is either the line `shot * x + read`
//! (parametric) or a linear interpolation of a 32-bin variance table
//! (non-parametric). Synthesis uses a variance-matched Gaussian and clips the
//! result to `[0, 1]`.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mosaic::Mosaic;
use crate::rng;

pub const NUM_BINS: usize = 32;
pub const ISO_LEVELS: [u32; 6] = [400, 800, 1600, 3200, 6400, 12800];

#[derive(Clone, Debug, PartialEq)]
pub enum NoiseVariant {
    Parametric { shot: f64, read: f64 },
    Nonparametric { bin_centers: Vec<f64>, bin_variances: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNoiseModel", into = "RawNoiseModel")]
pub struct NoiseModel {
    iso: u32,
    variant: NoiseVariant,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum VariantTag {
    Parametric,
    Nonparametric,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoiseModel {
    iso: u32,
    variant: VariantTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shot: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    read: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bin_centers: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bin_variances: Option<Vec<f64>>,
}

impl TryFrom<RawNoiseModel> for NoiseModel {
    type Error = Error;

    fn try_from(raw: RawNoiseModel) -> Result<Self> {
        let variant = match (raw.variant, raw.shot, raw.read, raw.bin_centers, raw.bin_variances) {
            (VariantTag::Parametric, Some(shot), Some(read), None, None) => NoiseVariant::Parametric { shot, read },
            (VariantTag::Nonparametric, None, None, Some(bin_centers), Some(bin_variances)) => {
                NoiseVariant::Nonparametric { bin_centers, bin_variances }
            }
            (VariantTag::Parametric, ..) => {
                return Err(Error::invalid("parametric noise model takes exactly `shot` and `read`"))
            }
            (VariantTag::Nonparametric, ..) => {
                return Err(Error::invalid(
                    "non-parametric noise model takes exactly `bin_centers` and `bin_variances`",
                ))
            }
        };
        NoiseModel::new(raw.iso, variant)
    }
}

impl From<NoiseModel> for RawNoiseModel {
    fn from(m: NoiseModel) -> Self {
        match m.variant {
            NoiseVariant::Parametric { shot, read } => RawNoiseModel {
                iso: m.iso,
                variant: VariantTag::Parametric,
                shot: Some(shot),
                read: Some(read),
                bin_centers: None,
                bin_variances: None,
            },
            NoiseVariant::Nonparametric { bin_centers, bin_variances } => RawNoiseModel {
                iso: m.iso,
                variant: VariantTag::Nonparametric,
                shot: None,
                read: None,
                bin_centers: Some(bin_centers),
                bin_variances: Some(bin_variances),
            },
        }
    }
}

impl NoiseModel {
    pub fn new(iso: u32, variant: NoiseVariant) -> Result<Self> {
        if !ISO_LEVELS.contains(&iso) {
            return Err(Error::invalid(format!("unsupported ISO {iso}")));
        }
        match &variant {
            NoiseVariant::Parametric { shot, read } => {
                if !(shot.is_finite() && read.is_finite() && *shot >= 0.0 && *read >= 0.0) {
                    return Err(Error::invalid(format!(
                        "noise parameters must be finite and >= 0 (shot {shot}, read {read})"
                    )));
                }
            }
            NoiseVariant::Nonparametric { bin_centers, bin_variances } => {
                if bin_centers.len() != NUM_BINS || bin_variances.len() != NUM_BINS {
                    return Err(Error::invalid(format!("variance table needs {NUM_BINS} bins")));
                }
                if bin_centers.windows(2).any(|w| w[0] >= w[1])
                    || bin_centers.iter().any(|c| !(0.0..=1.0).contains(c))
                {
                    return Err(Error::invalid("bin centers must ascend strictly within [0, 1]"));
                }
                if bin_variances.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::invalid("bin variances must be finite and >= 0"));
                }
            }
        }
        Ok(NoiseModel { iso, variant })
    }

    pub fn parametric(iso: u32, shot: f64, read: f64) -> Result<Self> {
        Self::new(iso, NoiseVariant::Parametric { shot, read })
    }

    /// Synthetic parametric presets, anchored at ISO 3200 = (0.01, 1e-5).
    /// Shot variance scales with gain, read variance with gain squared.
    pub fn preset(iso: u32) -> Result<Self> {
        let gain = iso as f64 / 3200.0;
        Self::parametric(iso, 0.01 * gain, 1e-5 * gain * gain)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn iso(&self) -> u32 {
        self.iso
    }

    pub fn variant(&self) -> &NoiseVariant {
        &self.variant
    }

    /// Noise variance at intensity `x`.
    pub fn variance(&self, x: f64) -> f64 {
        match &self.variant {
            NoiseVariant::Parametric { shot, read } => (shot * x + read).max(0.0),
            NoiseVariant::Nonparametric { bin_centers, bin_variances } => {
                interpolate(bin_centers, bin_variances, x).max(0.0)
            }
        }
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let k = xs.partition_point(|&c| c <= x);
    let (x0, x1) = (xs[k - 1], xs[k]);
    let t = (x - x0) / (x1 - x0);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}

/// Repeated captures of one flat scene at a single exposure.
#[derive(Clone, Debug)]
pub struct FlatFieldStack {
    pub label: String,
    pub height: usize,
    pub width: usize,
    pub captures: Vec<Vec<f64>>,
}

impl FlatFieldStack {
    pub fn new(label: impl Into<String>, height: usize, width: usize, captures: Vec<Vec<f64>>) -> Result<Self> {
        if captures.len() < 4 {
            return Err(Error::Calibration("a stack needs at least 4 captures".into()));
        }
        if captures.iter().any(|c| c.len() != height * width) {
            return Err(Error::dims("captures in a stack must share dimensions"));
        }
        Ok(FlatFieldStack { label: label.into(), height, width, captures })
    }

    /// Per-pixel `(selection mean, mean, variance)` from split halves.
    ///
    /// The selection mean (first half of the captures) only picks the
    /// intensity bin. The reported mean comes from the second half and the
    /// variance is pooled within the halves, so neither depends on the bin
    /// choice and binning does not bias the fit.
    pub fn pixel_stats(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let (a, b) = self.captures.split_at(self.captures.len() / 2);
        (0..self.height * self.width).map(move |i| {
            let half = |caps: &[Vec<f64>]| {
                let n = caps.len() as f64;
                let mean = caps.iter().map(|c| c[i]).sum::<f64>() / n;
                (mean, caps.iter().map(|c| (c[i] - mean).powi(2)).sum::<f64>())
            };
            let ((ma, ssa), (mb, ssb)) = (half(a), half(b));
            (ma, mb, (ssa + ssb) / (self.captures.len() - 2) as f64)
        })
    }
}

/// Per-bin accumulation of (mean, variance) pairs.
#[derive(Clone, Debug)]
pub struct BinnedStats {
    pub mean_sum: [f64; NUM_BINS],
    pub var_sum: [f64; NUM_BINS],
    pub count: [usize; NUM_BINS],
}

impl BinnedStats {
    pub fn from_stacks(stacks: &[FlatFieldStack]) -> Self {
        let mut s = BinnedStats { mean_sum: [0.0; NUM_BINS], var_sum: [0.0; NUM_BINS], count: [0; NUM_BINS] };
        for stack in stacks {
            for (select, mean, var) in stack.pixel_stats() {
                let bin = ((select * NUM_BINS as f64).floor().max(0.0) as usize).min(NUM_BINS - 1);
                s.mean_sum[bin] += mean;
                s.var_sum[bin] += var;
                s.count[bin] += 1;
            }
        }
        s
    }

    /// (average intensity, average variance) of each populated bin.
    pub fn points(&self) -> Vec<(usize, f64, f64)> {
        (0..NUM_BINS)
            .filter(|&k| self.count[k] > 0)
            .map(|k| {
                let n = self.count[k] as f64;
                (k, self.mean_sum[k] / n, self.var_sum[k] / n)
            })
            .collect()
    }
}

/// Fits `variance = shot * mean + read` through the populated bins.
///
/// A sample variance scatters in proportion to the true variance, so bins are
/// weighted by `count / variance^2`, with the variance taken from the previous
/// fit (ordinary least squares first, then a few reweighting passes).
pub fn calibrate_parametric(iso: u32, stacks: &[FlatFieldStack]) -> Result<NoiseModel> {
    if stacks.len() < 2 {
        return Err(Error::Calibration("need at least 2 flat-field stacks".into()));
    }
    let stats = BinnedStats::from_stacks(stacks);
    let points = stats.points();
    if points.len() < 2 {
        return Err(Error::Calibration(format!(
            "stacks populate {} intensity bin(s); need 2 distinct levels",
            points.len()
        )));
    }
    let mut weights: Vec<f64> = vec![1.0; points.len()];
    let (mut slope, mut intercept) = (0.0, 0.0);
    for _ in 0..4 {
        (slope, intercept) = weighted_line(&points, &weights)?;
        let next: Vec<f64> = points
            .iter()
            .map(|&(k, mean, var)| {
                let fitted = slope * mean + intercept;
                let v = if fitted > 0.0 { fitted } else { var };
                stats.count[k] as f64 / (v * v)
            })
            .collect();
        // noiseless bins give infinite weights; the current fit is already exact
        if next.iter().any(|w| !w.is_finite()) {
            break;
        }
        weights = next;
    }
    NoiseModel::parametric(iso, slope.max(0.0), intercept.max(0.0))
}

fn weighted_line(points: &[(usize, f64, f64)], weights: &[f64]) -> Result<(f64, f64)> {
    let sw: f64 = weights.iter().sum();
    let mx = points.iter().zip(weights).map(|(p, w)| w * p.1).sum::<f64>() / sw;
    let my = points.iter().zip(weights).map(|(p, w)| w * p.2).sum::<f64>() / sw;
    let sxx: f64 = points.iter().zip(weights).map(|(p, w)| w * (p.1 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().zip(weights).map(|(p, w)| w * (p.1 - mx) * (p.2 - my)).sum();
    if sxx <= 0.0 || !sxx.is_finite() {
        return Err(Error::Calibration("degenerate intensity spread".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Stores per-bin average variance directly; empty bins are filled by linear
/// interpolation between populated neighbours and held constant past the ends.
///
/// A populated bin's center is the average intensity of its pixels; an empty
/// bin uses its geometric center.
pub fn calibrate_nonparametric(iso: u32, stacks: &[FlatFieldStack]) -> Result<NoiseModel> {
    let stats = BinnedStats::from_stacks(stacks);
    let points = stats.points();
    if points.is_empty() {
        return Err(Error::Calibration("all intensity bins are empty".into()));
    }
    let mut centers: Vec<f64> = (0..NUM_BINS).map(|k| (k as f64 + 0.5) / NUM_BINS as f64).collect();
    for &(k, mean, _) in &points {
        centers[k] = mean;
    }
    // Keep centers strictly ascending even when a bin mean sits on an edge.
    for k in 1..NUM_BINS {
        if centers[k] <= centers[k - 1] {
            centers[k] = f64::min(1.0, centers[k - 1] + 1e-9);
        }
    }
    let px: Vec<f64> = points.iter().map(|p| centers[p.0]).collect();
    let py: Vec<f64> = points.iter().map(|p| p.2).collect();
    let variances = centers.iter().map(|&c| interpolate(&px, &py, c)).collect();
    NoiseModel::new(iso, NoiseVariant::Nonparametric { bin_centers: centers, bin_variances: variances })
}

/// Adds seeded signal-dependent Gaussian noise and clips to `[0, 1]`.
/// Dead pixels stay at zero.
pub fn synthesize(clean: &Mosaic, model: &NoiseModel, seed: u64) -> Result<Mosaic> {
    let mut rng = rng::rng(seed);
    let data = clean
        .data()
        .iter()
        .map(|&x| {
            let z: f64 = rng.sample(StandardNormal);
            let var = model.variance(x);
            if var == 0.0 {
                x
            } else {
                (x + var.sqrt() * z).clamp(0.0, 1.0)
            }
        })
        .collect();
    clean.replace_data(data)
}

/// Flat-field stacks for closed-loop testing: `captures` noisy copies of a
/// constant `level` image per level.
pub fn synthetic_flat_stacks(
    model: &NoiseModel,
    levels: &[f64],
    captures: usize,
    height: usize,
    width: usize,
    seed: u64,
) -> Result<Vec<FlatFieldStack>> {
    let layout = crate::cfa::CfaKind::Single.layout();
    levels
        .iter()
        .enumerate()
        .map(|(li, &level)| {
            let clean = Mosaic::constant(layout.clone(), height, width, level)?;
            let caps = (0..captures)
                .map(|ci| {
                    let s = rng::derive_seed(seed, (li * captures + ci) as u64);
                    synthesize(&clean, model, s).map(|m| m.data().to_vec())
                })
                .collect::<Result<Vec<_>>>()?;
            FlatFieldStack::new(format!("level-{level}"), height, width, caps)
        })
        .collect()
}
