//! `cfakit` command-line tool. Every command prints one JSON status line.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cfakit::cfa::CfaKind;
use cfakit::demosaic::{
    bilinear_demosaic, edge_aware_demosaic, interpolate_dead, make_dead_mask, tent_demosaic, DeadPixelMask,
};
use cfakit::image::{bicubic_upsample, RgbImage};
use cfakit::io::{self as cio, PipelineConfig, Seeds, TensorFile};
use cfakit::metrics::{self, MetricReport, DEFAULT_BORDER};
use cfakit::micronet::{self, MicroNetConfig, Strategy};
use cfakit::mining::{
    assign_splits, extract_patches, generate_scene, mine_hard, view_seed, PatchManifest, PatchSet, SplitPlan,
    DEFAULT_HARD_FRACTION, PATCH_SIZE,
};
use cfakit::mosaic::{self, sample_mosaic, shuffle_remosaic, Mosaic};
use cfakit::noise::{self, FlatFieldStack, NoiseModel};

#[derive(Parser)]
#[command(name = "cfakit", version, about = "Unified Single/Quad/Nona-Bayer demosaicing toolkit")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration JSON; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    cfa: Option<CfaKind>,
    #[arg(long, global = true)]
    iso: Option<u32>,
    #[arg(long = "noise-model", global = true)]
    noise_model: Option<PathBuf>,
    /// Seeds every random stream of the command.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    border: Option<usize>,
    /// Training maskout fraction range, `LO:HI`.
    #[arg(long, global = true, value_parser = parse_range)]
    maskout: Option<(f64, f64)>,
    #[arg(long = "dead-rate", global = true)]
    dead_rate: Option<f64>,
    #[arg(long, global = true)]
    strategy: Option<Strategy>,
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an RGB image into a CFA mosaic tensor.
    Mosaic(InOut),
    /// Shuffle-remosaic a Quad/Nona mosaic into Single-Bayer.
    Remosaic(InOut),
    /// Pack a mosaic into period x period tiles.
    Pack(InOut),
    /// Bin a Quad/Nona capture, add noise, demosaic and bicubic-upsample back.
    Bin {
        #[command(flatten)]
        io: InOut,
        /// Demosaic with a trained model (Single-Bayer mode) instead of bilinear.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Add Poisson-Gaussian noise to a mosaic.
    Addnoise(InOut),
    /// Reconstruct RGB from a mosaic.
    Demosaic {
        #[command(flatten)]
        io: InOut,
        #[arg(long, value_enum, default_value_t = Method::Bilinear)]
        method: Method,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Dead-pixel bitmap; interpolated first unless a model handles it.
        #[arg(long = "dead-mask")]
        dead_mask: Option<PathBuf>,
        /// Ground truth to score the result against.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Interpolate dead pixels from a bitmap or a random mask.
    Deadpix {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Where to write the generated mask.
        #[arg(long = "mask-out")]
        mask_out: Option<PathBuf>,
    },
    /// Mine the hardest patches of each view into a JSONL manifest.
    Mine {
        /// View images named `sceneNN_viewV.png`.
        #[arg(required = true)]
        views: Vec<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_HARD_FRACTION)]
        fraction: f64,
        #[arg(long, default_value_t = PATCH_SIZE)]
        stride: usize,
    },
    /// Score images against references.
    Eval {
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long = "reference", required = true)]
        references: Vec<PathBuf>,
        /// Append rows to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Fit a noise model to flat-field stacks (`N x H x W` tensors).
    Calibrate {
        #[arg(required = true)]
        stacks: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Variant::Parametric)]
        variant: Variant,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train a micronet on all three patterns.
    Train {
        /// Directory of `sceneNN_viewV.png` views referenced by `--manifest`;
        /// without a manifest a synthetic dataset is generated.
        #[arg(long)]
        scenes: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        iterations: usize,
        #[arg(long = "eval-every", default_value_t = 0)]
        eval_every: usize,
        #[arg(long)]
        output: Option<PathBuf>,
        /// CSV metrics log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Generate synthetic textured scenes as 16-bit PNGs.
    Genscenes {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 17)]
        scenes: u32,
        #[arg(long, default_value_t = 2)]
        views: u32,
        #[arg(long, default_value_t = 240)]
        size: usize,
    },
}

#[derive(Args)]
struct InOut {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Bilinear,
    Edge,
    Tent,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Parametric,
    Nonparametric,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got `{s}`"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(format!("[{lo}, {hi}] is not a sub-interval of [0, 1]"));
    }
    Ok((lo, hi))
}

/// Flags merged over the optional config file over defaults.
struct Settings {
    cfa: CfaKind,
    iso: u32,
    noise_model: Option<PathBuf>,
    seeds: Seeds,
    border: usize,
    maskout: (f64, f64),
    dead_rate: f64,
    strategy: Strategy,
    manifest: Option<PathBuf>,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
}

impl Settings {
    fn resolve(c: &Common) -> Result<Self> {
        let cfg = c.config.as_ref().map(PipelineConfig::read).transpose().context("reading --config")?;
        let seeds = match (c.seed, &cfg) {
            (Some(s), _) => Seeds { noise: s, dead: s, data: s, train: s },
            (None, Some(cfg)) => cfg.seeds,
            (None, None) => Seeds { noise: 0, dead: 0, data: 0, train: 0 },
        };
        let paths = cfg.as_ref().map(|c| c.paths.clone()).unwrap_or_default();
        let dead_rate = c.dead_rate.or(cfg.as_ref().map(|c| c.dead_rate)).unwrap_or(0.0);
        if !(0.0..=0.05).contains(&dead_rate) {
            bail!("dead-pixel rate {dead_rate} outside [0, 0.05]");
        }
        Ok(Settings {
            cfa: c.cfa.or(cfg.as_ref().map(|c| c.cfa)).unwrap_or(CfaKind::Single),
            iso: c.iso.or(cfg.as_ref().map(|c| c.iso)).unwrap_or(3200),
            noise_model: c.noise_model.clone().or(cfg.as_ref().and_then(|c| c.noise_model.clone())),
            seeds,
            border: c.border.unwrap_or(DEFAULT_BORDER),
            maskout: c.maskout.or(cfg.as_ref().map(|c| c.maskout)).unwrap_or((0.0, 0.0)),
            dead_rate,
            strategy: c.strategy.or(cfg.as_ref().map(|c| c.strategy)).unwrap_or(Strategy::Embedding),
            manifest: c.manifest.clone().or(paths.manifest),
            input: paths.input,
            output: paths.output,
        })
    }

    fn noise(&self) -> Result<NoiseModel> {
        match &self.noise_model {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Ok(serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?)
            }
            None => Ok(NoiseModel::preset(self.iso)?),
        }
    }

    fn input(&self, io: &InOut) -> Result<PathBuf> {
        io.input.clone().or(self.input.clone()).ok_or_else(|| anyhow!("--input is required"))
    }

    fn output(&self, io: &InOut) -> Result<PathBuf> {
        io.output.clone().or(self.output.clone()).ok_or_else(|| anyhow!("--output is required"))
    }
}

/// Output files created so far; removed again if the command fails.
#[derive(Default)]
struct Outputs {
    paths: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
}

impl Outputs {
    fn claim(&mut self, p: &Path) -> PathBuf {
        self.paths.push(p.to_path_buf());
        p.to_path_buf()
    }

    fn cleanup(&self) {
        for p in &self.paths {
            let _ = fs::remove_file(p);
        }
        for d in self.dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
    }

    fn list(&self) -> Vec<String> {
        self.paths.iter().map(|p| p.display().to_string()).collect()
    }
}

fn has_ext(p: &Path, ext: &str) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn load_image(p: &Path) -> Result<RgbImage> {
    let img = if has_ext(p, "png") { cio::read_png(p)? } else { cio::image_from_tensor(&TensorFile::read(p)?)? };
    Ok(img)
}

fn save_image(img: &RgbImage, p: &Path) -> Result<()> {
    if has_ext(p, "png") {
        cio::write_png(img, p)?;
    } else {
        cio::image_to_tensor(img).write(p)?;
    }
    Ok(())
}

/// A mosaic tensor, or a PNG sampled through the `kind` layout.
fn load_mosaic(p: &Path, kind: CfaKind) -> Result<Mosaic> {
    let m = if has_ext(p, "png") {
        sample_mosaic(&cio::read_png(p)?, &kind.layout())?
    } else {
        cio::mosaic_from_tensor(&TensorFile::read(p).with_context(|| format!("reading {}", p.display()))?, kind)?
    };
    Ok(m)
}

fn report_json(r: &MetricReport) -> Value {
    json!({ "psnr_db": r.psnr_db, "ssim": r.ssim, "delta_e": r.delta_e })
}

/// `sceneNN_viewV` file stems.
fn parse_view_name(p: &Path) -> Option<(u32, u32)> {
    let stem = p.file_stem()?.to_str()?;
    let rest = stem.strip_prefix("scene")?;
    let (scene, view) = rest.split_once("_view")?;
    Some((scene.parse().ok()?, view.parse().ok()?))
}

fn view_name(scene: u32, view: u32) -> String {
    format!("scene{scene:02}_view{view}.png")
}

/// Worker cap from `CFAKIT_THREADS` (default: available parallelism).
fn threads() -> usize {
    std::env::var("CFAKIT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Maps `f` over `items` on up to `threads()` workers, keeping input order.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> Result<R> + Sync) -> Result<Vec<R>> {
    let n = threads().min(items.len()).max(1);
    if n == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(n);
    let f = &f;
    let parts: Vec<Result<Vec<R>>> = std::thread::scope(|s| {
        let handles: Vec<_> =
            items.chunks(chunk).map(|c| s.spawn(move || c.iter().map(f).collect::<Result<Vec<R>>>())).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(anyhow!("worker panicked")))).collect()
    });
    let mut out = Vec::with_capacity(items.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn run_net(model: &Path, mosaic: &Mosaic) -> Result<RgbImage> {
    let (params, config) = micronet::read_model::<f32>(model)?;
    let input = micronet::prepare_input::<f32>(mosaic, config.strategy)?;
    let pred = micronet::forward_one(&params, &config, &input)?;
    Ok(micronet::output_image(&pred, input.height, input.width)?)
}

fn run(cli: &Cli, out: &mut Outputs) -> Result<Value> {
    let s = Settings::resolve(&cli.common)?;
    match &cli.command {
        Command::Mosaic(io) => {
            let img = load_image(&s.input(io)?)?;
            let m = sample_mosaic(&img, &s.cfa.layout())?;
            let p = out.claim(&s.output(io)?);
            cio::mosaic_to_tensor(&m).write(&p)?;
            Ok(json!({ "cfa": s.cfa, "height": m.height(), "width": m.width() }))
        }
        Command::Remosaic(io) => {
            let m = load_mosaic(&s.input(io)?, s.cfa)?;
            let r = shuffle_remosaic(&m)?;
            let p = out.claim(&s.output(io)?);
            cio::mosaic_to_tensor(&r).write(&p)?;
            Ok(json!({ "from": s.cfa, "cfa": CfaKind::Single }))
        }
        Command::Pack(io) => {
            let m = load_mosaic(&s.input(io)?, s.cfa)?;
            let packed = mosaic::pack(&m);
            let p = out.claim(&s.output(io)?);
            cio::packed_to_tensor(&packed).write(&p)?;
            Ok(json!({ "cfa": s.cfa, "dims": [packed.rows, packed.cols, packed.depth] }))
        }
        Command::Bin { io, model } => {
            let input = s.input(io)?;
            let m = load_mosaic(&input, s.cfa)?;
            let binned = mosaic::bin(&m)?;
            let noisy = noise::synthesize(&binned, &s.noise()?, s.seeds.noise)?;
            let small = match model {
                Some(path) => run_net(path, &noisy)?,
                None => bilinear_demosaic(&noisy)?,
            };
            let img = bicubic_upsample(&small, s.cfa.block_side())?;
            let p = out.claim(&s.output(io)?);
            save_image(&img, &p)?;
            let mut status = json!({ "cfa": s.cfa, "binned": [binned.height(), binned.width()] });
            if has_ext(&input, "png") {
                let reference = cio::read_png(&input)?;
                status["metrics"] = report_json(&metrics::evaluate(&img, &reference, s.border)?);
            }
            Ok(status)
        }
        Command::Addnoise(io) => {
            let m = load_mosaic(&s.input(io)?, s.cfa)?;
            let model = s.noise()?;
            let n = noise::synthesize(&m, &model, s.seeds.noise)?;
            let p = out.claim(&s.output(io)?);
            cio::mosaic_to_tensor(&n).write(&p)?;
            Ok(json!({ "iso": model.iso(), "seed": s.seeds.noise }))
        }
        Command::Demosaic { io, method, model, dead_mask, reference } => {
            let mut m = load_mosaic(&s.input(io)?, s.cfa)?;
            let mask = dead_mask.as_ref().map(cio::read_mask).transpose()?;
            let img = match model {
                Some(path) => {
                    if let Some(mask) = mask {
                        m = m.with_dead(mask)?;
                    }
                    run_net(path, &m)?
                }
                None => {
                    if let Some(mask) = mask {
                        m = interpolate_dead(&m, &mask)?;
                    }
                    match method {
                        Method::Bilinear => bilinear_demosaic(&m)?,
                        Method::Edge => edge_aware_demosaic(&m)?,
                        Method::Tent => tent_demosaic(&m)?,
                    }
                }
            };
            let p = out.claim(&s.output(io)?);
            save_image(&img, &p)?;
            let mut status = json!({ "cfa": s.cfa });
            if let Some(r) = reference {
                status["metrics"] = report_json(&metrics::evaluate(&img, &load_image(r)?, s.border)?);
            }
            Ok(status)
        }
        Command::Deadpix { io, mask, mask_out } => {
            let m = load_mosaic(&s.input(io)?, s.cfa)?;
            let mask: DeadPixelMask = match mask {
                Some(p) => cio::read_mask(p)?,
                None => make_dead_mask(m.height(), m.width(), s.dead_rate, s.seeds.dead)?,
            };
            let fixed = interpolate_dead(&m, &mask)?;
            let p = out.claim(&s.output(io)?);
            cio::mosaic_to_tensor(&fixed).write(&p)?;
            if let Some(mo) = mask_out {
                let mo = out.claim(mo);
                cio::write_mask(&mask, &mo)?;
            }
            Ok(json!({ "dead_pixels": mask.count() }))
        }
        Command::Mine { views, output, fraction, stride } => {
            let named: Vec<(u32, u32, &PathBuf)> = views
                .iter()
                .map(|p| {
                    parse_view_name(p)
                        .map(|(sc, v)| (sc, v, p))
                        .ok_or_else(|| anyhow!("{} is not named sceneNN_viewV.png", p.display()))
                })
                .collect::<Result<_>>()?;
            let per_view = par_map(&named, |(scene, view, p)| {
                Ok(extract_patches(*scene, *view, &cio::read_png(p)?, PATCH_SIZE, *stride)?)
            })?;
            let candidates: Vec<_> = per_view.into_iter().flatten().collect();
            let manifest = assign_splits(&mine_hard(&candidates, *fraction, s.seeds.data)?, &SplitPlan::standard())?;
            let path = output.clone().or(s.manifest.clone()).ok_or_else(|| anyhow!("--output is required"))?;
            let p = out.claim(&path);
            let mut w = BufWriter::new(File::create(&p)?);
            manifest.write_jsonl(&mut w)?;
            w.flush()?;
            Ok(json!({ "candidates": candidates.len(), "mined": manifest.records.len() }))
        }
        Command::Eval { inputs, references, csv } => {
            if inputs.len() != references.len() {
                bail!("{} inputs but {} references", inputs.len(), references.len());
            }
            let pairs: Vec<(&PathBuf, &PathBuf)> = inputs.iter().zip(references).collect();
            let reports = par_map(&pairs, |(a, b)| Ok(metrics::evaluate(&load_image(a)?, &load_image(b)?, s.border)?))?;
            if let Some(path) = csv {
                let fresh = !path.exists();
                if fresh {
                    out.claim(path);
                }
                let mut w = BufWriter::new(fs::OpenOptions::new().create(true).append(true).open(path)?);
                if fresh {
                    writeln!(w, "image_id,pattern,iso,psnr_db,ssim,delta_e")?;
                }
                for ((a, _), r) in pairs.iter().zip(&reports) {
                    let id = a.file_stem().and_then(|s| s.to_str()).unwrap_or("");
                    writeln!(w, "{id},{},{},{:.6},{:.6},{:.6}", s.cfa, s.iso, r.psnr_db, r.ssim, r.delta_e)?;
                }
                w.flush()?;
            }
            let rows: Vec<Value> = pairs
                .iter()
                .zip(&reports)
                .map(|((a, _), r)| {
                    let mut v = report_json(r);
                    v["image"] = json!(a.display().to_string());
                    v
                })
                .collect();
            let mut status = json!({ "images": rows });
            if reports.len() == 1 {
                status["metrics"] = report_json(&reports[0]);
            }
            Ok(status)
        }
        Command::Calibrate { stacks, variant, output } => {
            let flat: Vec<FlatFieldStack> = stacks
                .iter()
                .map(|p| {
                    let t = TensorFile::read(p).with_context(|| format!("reading {}", p.display()))?;
                    let &[n, h, w] = t.dims() else { bail!("{}: stack must be N x H x W", p.display()) };
                    let v = match t.data() {
                        cio::TensorData::U16(v) => v.iter().map(|&x| x as f64 / 65535.0).collect(),
                        d => d.to_f64(),
                    };
                    let caps = v.chunks_exact(h * w).take(n).map(<[f64]>::to_vec).collect();
                    Ok(FlatFieldStack::new(p.display().to_string(), h, w, caps)?)
                })
                .collect::<Result<_>>()?;
            let model = match variant {
                Variant::Parametric => noise::calibrate_parametric(s.iso, &flat)?,
                Variant::Nonparametric => noise::calibrate_nonparametric(s.iso, &flat)?,
            };
            let path = output.clone().or(s.output.clone()).ok_or_else(|| anyhow!("--output is required"))?;
            let p = out.claim(&path);
            fs::write(&p, serde_json::to_string_pretty(&model)? + "\n")?;
            Ok(json!({ "model": serde_json::to_value(&model)? }))
        }
        Command::Train { scenes, iterations, eval_every, output, log } => {
            let dataset = match (&s.manifest, scenes) {
                (Some(mpath), Some(dir)) => {
                    let manifest = PatchManifest::read_jsonl(BufReader::new(File::open(mpath)?))?;
                    let mut views = BTreeMap::new();
                    for r in &manifest.records {
                        if let std::collections::btree_map::Entry::Vacant(e) = views.entry(r.view_key()) {
                            e.insert(cio::read_png(dir.join(view_name(r.scene_id, r.view_id)))?);
                        }
                    }
                    PatchSet { manifest, views }
                }
                (Some(_), None) => bail!("--manifest needs --scenes"),
                (None, _) => cfakit::mining::synthetic_dataset(&cfakit::mining::DatasetSpec {
                    seed: s.seeds.data,
                    views: 4,
                    ..Default::default()
                })?,
            };
            let mut config = MicroNetConfig::default_for(s.strategy);
            config.maskout_range = s.maskout;
            config.seed = s.seeds.train;
            let noise = s.noise()?;
            let outcome = micronet::train::<f32>(&config, &dataset, &noise, *iterations, *eval_every)?;
            let path = output.clone().or(s.output.clone()).ok_or_else(|| anyhow!("--output is required"))?;
            let p = out.claim(&path);
            micronet::write_model(&outcome.params, &config, &p)?;
            if let Some(l) = log {
                let l = out.claim(l);
                outcome.write_history_csv(BufWriter::new(File::create(&l)?))?;
            }
            let final_loss = outcome.losses.last().copied();
            Ok(json!({
                "strategy": s.strategy,
                "iterations": iterations,
                "final_loss": final_loss,
                "parameters": outcome.params.weights.num_params(),
            }))
        }
        Command::Genscenes { output, scenes, views, size } => {
            if !output.exists() {
                fs::create_dir_all(output)?;
                out.dirs.push(output.clone());
            }
            for scene in 1..=*scenes {
                for view in 0..*views {
                    let img = generate_scene(view_seed(s.seeds.data, scene, view), *size, *size)?;
                    let p = out.claim(&output.join(view_name(scene, view)));
                    cio::write_png(&img, &p)?;
                }
            }
            Ok(json!({ "scenes": scenes, "views": views, "size": size }))
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Mosaic(_) => "mosaic",
        Command::Remosaic(_) => "remosaic",
        Command::Pack(_) => "pack",
        Command::Bin { .. } => "bin",
        Command::Addnoise(_) => "addnoise",
        Command::Demosaic { .. } => "demosaic",
        Command::Deadpix { .. } => "deadpix",
        Command::Mine { .. } => "mine",
        Command::Eval { .. } => "eval",
        Command::Calibrate { .. } => "calibrate",
        Command::Train { .. } => "train",
        Command::Genscenes { .. } => "genscenes",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            println!("{}", json!({ "status": "error", "error": msg.trim() }));
            return ExitCode::from(2);
        }
    };
    let name = command_name(&cli.command);
    let mut outputs = Outputs::default();
    match run(&cli, &mut outputs) {
        Ok(mut status) => {
            status["status"] = json!("ok");
            status["command"] = json!(name);
            status["outputs"] = json!(outputs.list());
            println!("{status}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            outputs.cleanup();
            println!("{}", json!({ "status": "error", "command": name, "error": format!("{e:#}") }));
            ExitCode::FAILURE
        }
    }
}
