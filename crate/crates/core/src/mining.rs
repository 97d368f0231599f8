//! Synthetic high-frequency scenes, hard-patch mining and scene-level splits.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cfa::CfaKind;
use crate::demosaic::bilinear_demosaic;
use crate::error::{Error, Result};
use crate::image::{gaussian_blur, RgbImage};
use crate::metrics::{psnr, DEFAULT_BORDER};
use crate::mosaic::sample_mosaic;
use crate::rng;

pub const PATCH_SIZE: usize = 48;
/// Patch corners sit on multiples of every CFA period.
pub const PATCH_ALIGN: usize = 6;
pub const DEFAULT_HARD_FRACTION: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchRecord {
    #[serde(rename = "scene")]
    pub scene_id: u32,
    #[serde(rename = "view")]
    pub view_id: u32,
    pub y: usize,
    pub x: usize,
    pub size: usize,
    pub hardness_db: f64,
    pub split: Option<Split>,
}

impl PatchRecord {
    pub fn view_key(&self) -> (u32, u32) {
        (self.scene_id, self.view_id)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatchManifest {
    pub records: Vec<PatchRecord>,
    pub generator_seed: u64,
    pub fraction: f64,
}

impl PatchManifest {
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut records = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line)?);
        }
        Ok(PatchManifest { records, generator_seed: 0, fraction: 1.0 })
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &PatchRecord> {
        self.records.iter().filter(move |r| r.split == Some(split))
    }
}

/// A candidate patch with its location.
#[derive(Clone, Debug)]
pub struct PatchCandidate {
    pub scene_id: u32,
    pub view_id: u32,
    pub y: usize,
    pub x: usize,
    pub image: RgbImage,
}

fn lerp3(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [0, 1, 2].map(|k| a[k] + (b[k] - a[k]) * t)
}

fn random_color(rng: &mut rng::Rng) -> [f64; 3] {
    [0, 1, 2].map(|_| rng.random_range(0.05..0.95))
}

enum Texture {
    Flat([f64; 3]),
    Grating { a: [f64; 3], b: [f64; 3], fy: f64, fx: f64, phase: f64 },
    Checker { a: [f64; 3], b: [f64; 3], period: usize },
    Gradient { a: [f64; 3], b: [f64; 3], dy: f64, dx: f64 },
}

/// Two texture colors. Mostly a luminance pair (same hue, different
/// brightness, slight tint) as in natural images; sometimes unrelated hues.
fn color_pair(rng: &mut rng::Rng) -> ([f64; 3], [f64; 3]) {
    let a = random_color(rng);
    if rng.random_bool(0.2) {
        return (a, random_color(rng));
    }
    let gain = rng.random_range(0.2..1.8);
    let b = a.map(|v| (v * gain + rng.random_range(-0.05..0.05)).clamp(0.02, 0.98));
    (a, b)
}

impl Texture {
    fn random(rng: &mut rng::Rng) -> Self {
        let (a, b) = color_pair(rng);
        match rng.random_range(0..20) {
            0..=5 => Texture::Flat(a),
            6..=10 => {
                let theta = rng.random_range(0.0..2.0 * PI);
                Texture::Gradient { a, b, dy: theta.sin() / 64.0, dx: theta.cos() / 64.0 }
            }
            11..=15 => {
                // log-uniform from 0.02 cycles per pixel up to just below Nyquist
                let f = rng.random_range(0.02f64.ln()..0.45f64.ln()).exp();
                let theta = rng.random_range(0.0..PI);
                Texture::Grating { a, b, fy: f * theta.sin(), fx: f * theta.cos(), phase: rng.random_range(0.0..2.0 * PI) }
            }
            _ => Texture::Checker { a, b, period: rng.random_range(2..=12) },
        }
    }

    fn sample(&self, r: usize, c: usize) -> [f64; 3] {
        let (y, x) = (r as f64, c as f64);
        match *self {
            Texture::Flat(a) => a,
            Texture::Grating { a, b, fy, fx, phase } => {
                lerp3(a, b, 0.5 + 0.5 * (2.0 * PI * (fy * y + fx * x) + phase).sin())
            }
            Texture::Checker { a, b, period } => {
                if (r / period + c / period).is_multiple_of(2) { a } else { b }
            }
            Texture::Gradient { a, b, dy, dx } => {
                lerp3(a, b, (0.5 + dy * (y - 24.0) + dx * (x - 24.0)).clamp(0.0, 1.0))
            }
        }
    }
}

/// Lens blur applied to every generated scene, in pixels.
pub const OPTICS_SIGMA: f64 = 1.0;

/// Procedural scene: a smooth backdrop overlaid with flat, grating, checker
/// and gradient rectangles plus thin random line segments, seen through a
/// Gaussian lens blur of `OPTICS_SIGMA`.
pub fn generate_scene(seed: u64, height: usize, width: usize) -> Result<RgbImage> {
    if !height.is_multiple_of(12) || !width.is_multiple_of(12) || height == 0 || width == 0 {
        return Err(Error::dims(format!("scene size {height}x{width} must be a nonzero multiple of 12")));
    }
    let mut rng = rng::rng(seed);
    let (c0, c1) = (random_color(&mut rng), random_color(&mut rng));
    let mut px: Vec<[f64; 3]> = (0..height * width)
        .map(|i| {
            let (r, c) = (i / width, i % width);
            lerp3(c0, c1, 0.5 * (r as f64 / height as f64 + c as f64 / width as f64))
        })
        .collect();

    let rects = 2 * (height * width).div_ceil(PATCH_SIZE * PATCH_SIZE);
    for _ in 0..rects {
        let rh = rng.random_range(12..=height.min(72));
        let rw = rng.random_range(12..=width.min(72));
        let y0 = rng.random_range(0..=height - rh);
        let x0 = rng.random_range(0..=width - rw);
        let tex = Texture::random(&mut rng);
        for r in y0..y0 + rh {
            for c in x0..x0 + rw {
                px[r * width + c] = tex.sample(r, c);
            }
        }
    }

    let lines = (height * width).div_ceil(1024);
    for _ in 0..lines {
        let color = random_color(&mut rng);
        let (mut y, mut x) = (rng.random_range(0.0..height as f64), rng.random_range(0.0..width as f64));
        let theta = rng.random_range(0.0..2.0 * PI);
        let len = rng.random_range(8..40);
        for _ in 0..len {
            if y < 0.0 || x < 0.0 || y >= height as f64 || x >= width as f64 {
                break;
            }
            px[y as usize * width + x as usize] = color;
            y += theta.sin();
            x += theta.cos();
        }
    }
    gaussian_blur(&RgbImage::new(height, width, px.into_iter().flatten().collect())?, OPTICS_SIGMA)
}

/// Bilinear Single-Bayer reconstruction PSNR of a clean patch; lower is harder.
pub fn hardness(patch: &RgbImage) -> Result<f64> {
    let mosaic = sample_mosaic(patch, &CfaKind::Single.layout())?;
    psnr(&bilinear_demosaic(&mosaic)?, patch, DEFAULT_BORDER)
}

/// Non-overlapping (by default) aligned crops of one view.
pub fn extract_patches(
    scene_id: u32,
    view_id: u32,
    image: &RgbImage,
    size: usize,
    stride: usize,
) -> Result<Vec<PatchCandidate>> {
    if stride == 0 || !stride.is_multiple_of(PATCH_ALIGN) {
        return Err(Error::invalid(format!("stride {stride} must be a positive multiple of {PATCH_ALIGN}")));
    }
    let mut out = Vec::new();
    let mut y = 0;
    while y + size <= image.height() {
        let mut x = 0;
        while x + size <= image.width() {
            out.push(PatchCandidate { scene_id, view_id, y, x, image: image.crop(y, x, size, size)? });
            x += stride;
        }
        y += stride;
    }
    Ok(out)
}

/// Keeps the `floor(fraction * N)` lowest-PSNR patches of every view.
pub fn mine_hard(patches: &[PatchCandidate], fraction: f64, generator_seed: u64) -> Result<PatchManifest> {
    if patches.is_empty() {
        return Err(Error::invalid("no patches to mine"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("fraction {fraction} outside (0, 1]")));
    }
    let mut views: BTreeMap<(u32, u32), Vec<PatchRecord>> = BTreeMap::new();
    for p in patches {
        if p.y % PATCH_ALIGN != 0 || p.x % PATCH_ALIGN != 0 {
            return Err(Error::invalid(format!("patch corner ({}, {}) not aligned to {PATCH_ALIGN}", p.y, p.x)));
        }
        views.entry((p.scene_id, p.view_id)).or_default().push(PatchRecord {
            scene_id: p.scene_id,
            view_id: p.view_id,
            y: p.y,
            x: p.x,
            size: p.image.height(),
            hardness_db: hardness(&p.image)?,
            split: None,
        });
    }
    let mut records = Vec::new();
    for (_, mut recs) in views {
        recs.sort_by(|a, b| a.hardness_db.total_cmp(&b.hardness_db).then((a.y, a.x).cmp(&(b.y, b.x))));
        let keep = (fraction * recs.len() as f64).floor() as usize;
        recs.truncate(keep);
        recs.sort_by_key(|r| (r.y, r.x));
        records.extend(recs);
    }
    Ok(PatchManifest { records, generator_seed, fraction })
}

/// Scene-id sets for each split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitPlan {
    pub train: BTreeSet<u32>,
    pub val: BTreeSet<u32>,
    pub test: BTreeSet<u32>,
}

impl SplitPlan {
    /// Scenes 1-10 train, 11-12 validation, 13-17 test.
    pub fn standard() -> Self {
        SplitPlan { train: (1..=10).collect(), val: (11..=12).collect(), test: (13..=17).collect() }
    }

    pub fn split_of(&self, scene: u32) -> Option<Split> {
        if self.train.contains(&scene) {
            Some(Split::Train)
        } else if self.val.contains(&scene) {
            Some(Split::Val)
        } else if self.test.contains(&scene) {
            Some(Split::Test)
        } else {
            None
        }
    }
}

pub fn assign_splits(manifest: &PatchManifest, plan: &SplitPlan) -> Result<PatchManifest> {
    let overlap = plan
        .train
        .intersection(&plan.val)
        .chain(plan.train.intersection(&plan.test))
        .chain(plan.val.intersection(&plan.test))
        .next();
    if let Some(scene) = overlap {
        return Err(Error::invalid(format!("scene {scene} appears in more than one split")));
    }
    let mut out = manifest.clone();
    for r in &mut out.records {
        r.split = Some(
            plan.split_of(r.scene_id)
                .ok_or_else(|| Error::invalid(format!("scene {} is not covered by any split", r.scene_id)))?,
        );
    }
    Ok(out)
}

/// Scene images keyed by (scene, view) plus the manifest that indexes them.
#[derive(Clone, Debug)]
pub struct PatchSet {
    pub manifest: PatchManifest,
    pub views: BTreeMap<(u32, u32), RgbImage>,
}

impl PatchSet {
    pub fn patch(&self, record: &PatchRecord) -> Result<RgbImage> {
        let view = self
            .views
            .get(&record.view_key())
            .ok_or_else(|| Error::invalid(format!("no image for scene {} view {}", record.scene_id, record.view_id)))?;
        view.crop(record.y, record.x, record.size, record.size)
    }

    pub fn records(&self, split: Split) -> Vec<&PatchRecord> {
        self.manifest.split(split).collect()
    }

    /// Whole views of the scenes `plan` assigns to `split`, in key order.
    pub fn views_in(&self, plan: &SplitPlan, split: Split) -> Vec<&RgbImage> {
        self.views.iter().filter(|((scene, _), _)| plan.split_of(*scene) == Some(split)).map(|(_, v)| v).collect()
    }
}

/// Desk-scale dataset layout: scenes 1-17 with `views` generated views each.
#[derive(Clone, Debug)]
pub struct DatasetSpec {
    pub seed: u64,
    pub scenes: u32,
    pub views: u32,
    pub view_size: usize,
    pub stride: usize,
    pub fraction: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec { seed: 0, scenes: 17, views: 2, view_size: 240, stride: PATCH_SIZE, fraction: DEFAULT_HARD_FRACTION }
    }
}

/// Seed of one generated view; shared by the dataset builder and the CLI.
pub fn view_seed(seed: u64, scene: u32, view: u32) -> u64 {
    rng::derive_seed(seed, ((scene as u64) << 16) | view as u64)
}

/// Generates every view, mines the hard fraction and applies the standard split.
pub fn synthetic_dataset(spec: &DatasetSpec) -> Result<PatchSet> {
    let mut views = BTreeMap::new();
    let mut candidates = Vec::new();
    for scene in 1..=spec.scenes {
        for view in 0..spec.views {
            let img = generate_scene(view_seed(spec.seed, scene, view), spec.view_size, spec.view_size)?;
            candidates.extend(extract_patches(scene, view, &img, PATCH_SIZE, spec.stride)?);
            views.insert((scene, view), img);
        }
    }
    let mined = mine_hard(&candidates, spec.fraction, spec.seed)?;
    let manifest = assign_splits(&mined, &SplitPlan::standard())?;
    Ok(PatchSet { manifest, views })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::PSNR_CAP;

    fn candidate(view: u32, y: usize, x: usize, image: RgbImage) -> PatchCandidate {
        PatchCandidate { scene_id: 1, view_id: view, y, x, image }
    }

    fn checker(amplitude: f64) -> RgbImage {
        RgbImage::from_fn(48, 48, |r, c| {
            let v = if (r + c) % 2 == 0 { 0.5 + amplitude } else { 0.5 - amplitude };
            [v, 1.0 - v, v]
        })
        .unwrap()
    }

    #[test]
    fn scenes_are_deterministic_and_in_range() {
        let a = generate_scene(7, 48, 96).unwrap();
        assert_eq!(a, generate_scene(7, 48, 96).unwrap());
        assert_ne!(a, generate_scene(8, 48, 96).unwrap());
        assert!(generate_scene(1, 50, 48).is_err());
        for seed in 0..100 {
            let s = generate_scene(seed, 24, 36).unwrap();
            assert!(s.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn constant_patch_has_capped_hardness() {
        let flat = RgbImage::constant(48, 48, [0.3, 0.5, 0.7]).unwrap();
        assert_eq!(hardness(&flat).unwrap(), PSNR_CAP);
        assert!(hardness(&checker(0.4)).unwrap() < PSNR_CAP);
    }

    #[test]
    fn hardness_ordering_survives_scaling() {
        let a = checker(0.1);
        let b = checker(0.3);
        let (ha, hb) = (hardness(&a).unwrap(), hardness(&b).unwrap());
        let (sa, sb) = (hardness(&a.scaled(0.5).unwrap()).unwrap(), hardness(&b.scaled(0.5).unwrap()).unwrap());
        assert_eq!(ha < hb, sa < sb);
        assert!(hb < ha);
    }

    #[test]
    fn mining_keeps_exact_fraction() {
        let imgs = [checker(0.05), checker(0.2), checker(0.4), RgbImage::constant(48, 48, [0.5; 3]).unwrap()];
        let cands: Vec<_> = imgs.iter().enumerate().map(|(i, im)| candidate(0, 0, 48 * i, im.clone())).collect();
        let m = mine_hard(&cands, 0.25, 0).unwrap();
        assert_eq!(m.records.len(), 1);
        assert_eq!(m.records[0].x, 96);
        assert_eq!(mine_hard(&cands, 1.0, 0).unwrap().records.len(), 4);
        assert!(mine_hard(&[], 0.25, 0).is_err());
    }

    #[test]
    fn ties_break_by_coordinates() {
        let img = checker(0.2);
        let cands = vec![candidate(0, 6, 0, img.clone()), candidate(0, 0, 12, img.clone()), candidate(0, 0, 6, img)];
        let m = mine_hard(&cands, 0.34, 0).unwrap();
        assert_eq!((m.records[0].y, m.records[0].x), (0, 6));
    }

    #[test]
    fn mining_is_per_view() {
        let flat = RgbImage::constant(48, 48, [0.5; 3]).unwrap();
        let mut cands = Vec::new();
        for view in 0..2 {
            for i in 0..4 {
                let img = if i == 0 { checker(0.3) } else { flat.clone() };
                cands.push(candidate(view, 0, 48 * i, img));
            }
        }
        let m = mine_hard(&cands, 0.25, 0).unwrap();
        assert_eq!(m.records.len(), 2);
        assert!(m.records.iter().all(|r| r.x == 0));
    }

    #[test]
    fn misaligned_corner_rejected() {
        let cands = vec![candidate(0, 3, 0, checker(0.1))];
        assert!(mine_hard(&cands, 1.0, 0).is_err());
    }

    #[test]
    fn standard_split() {
        let rec = |scene| PatchRecord { scene_id: scene, view_id: 0, y: 0, x: 0, size: 48, hardness_db: 30.0, split: None };
        let m = PatchManifest { records: vec![rec(3), rec(11), rec(13)], generator_seed: 0, fraction: 0.25 };
        let out = assign_splits(&m, &SplitPlan::standard()).unwrap();
        let splits: Vec<_> = out.records.iter().map(|r| r.split.unwrap()).collect();
        assert_eq!(splits, vec![Split::Train, Split::Val, Split::Test]);

        let mut bad = SplitPlan::standard();
        bad.val.insert(3);
        assert!(assign_splits(&m, &bad).is_err());
        let mut partial = SplitPlan::standard();
        partial.test.remove(&13);
        assert!(assign_splits(&m, &partial).is_err());
    }

    #[test]
    fn jsonl_roundtrip() {
        let rec = PatchRecord { scene_id: 2, view_id: 1, y: 6, x: 12, size: 48, hardness_db: 31.5, split: Some(Split::Val) };
        let m = PatchManifest { records: vec![rec.clone()], generator_seed: 1, fraction: 0.25 };
        let mut buf = Vec::new();
        m.write_jsonl(&mut buf).unwrap();
        let line = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(line, "{\"scene\":2,\"view\":1,\"y\":6,\"x\":12,\"size\":48,\"hardness_db\":31.5,\"split\":\"val\"}\n");
        assert_eq!(PatchManifest::read_jsonl(&buf[..]).unwrap().records, vec![rec]);
    }
}
