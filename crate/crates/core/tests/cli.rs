use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use cfakit::io::{mosaic_from_tensor, write_png, TensorData, TensorFile};
use cfakit::mining::generate_scene;
use cfakit::noise::{synthetic_flat_stacks, NoiseModel};
use cfakit::{CfaKind, RgbImage};
use serde_json::Value;

struct Run {
    code: i32,
    json: Value,
}

fn cfakit(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_cfakit")).args(args).env("CFAKIT_THREADS", "2").output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let line = stdout.lines().last().unwrap_or_else(|| panic!("no output; stderr: {}", String::from_utf8_lossy(&out.stderr)));
    Run { code: out.status.code().unwrap(), json: serde_json::from_str(line).unwrap() }
}

fn ok(args: &[&str]) -> Value {
    let r = cfakit(args);
    assert_eq!(r.code, 0, "{args:?}: {}", r.json);
    assert_eq!(r.json["status"], "ok");
    r.json
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn scene_png(dir: &Path, name: &str) -> PathBuf {
    let p = dir.join(name);
    write_png(&generate_scene(42, 96, 96).unwrap(), &p).unwrap();
    p
}

#[test]
fn eval_of_identical_images_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let a = scene_png(dir.path(), "a.png");
    let csv = dir.path().join("m.csv");
    let j = ok(&["eval", "--input", s(&a), "--reference", s(&a), "--csv", s(&csv), "--cfa", "nona", "--iso", "800"]);
    assert_eq!(j["metrics"]["psnr_db"], 99.0);
    assert_eq!(j["metrics"]["ssim"], 1.0);
    assert_eq!(j["metrics"]["delta_e"], 0.0);
    ok(&["eval", "--input", s(&a), "--reference", s(&a), "--csv", s(&csv)]);
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "image_id,pattern,iso,psnr_db,ssim,delta_e");
    assert_eq!(lines[1], "a,nona,800,99.000000,1.000000,0.000000");
    assert_eq!(lines.len(), 3);
}

#[test]
fn constant_png_survives_mosaic_and_demosaic() {
    let dir = tempfile::tempdir().unwrap();
    let png = dir.path().join("flat.png");
    write_png(&RgbImage::constant(24, 24, [0.2, 0.6, 0.9]).unwrap(), &png).unwrap();
    let m = dir.path().join("m.cfkt");
    let out = dir.path().join("out.png");
    ok(&["mosaic", "--input", s(&png), "--output", s(&m)]);
    let j = ok(&["demosaic", "--input", s(&m), "--output", s(&out), "--reference", s(&png)]);
    assert_eq!(j["metrics"]["psnr_db"], 99.0);
    let j = ok(&["demosaic", "--input", s(&m), "--output", s(&out), "--reference", s(&png), "--method", "edge"]);
    assert_eq!(j["metrics"]["psnr_db"], 99.0);
}

#[test]
fn remosaicing_costs_quality() {
    let dir = tempfile::tempdir().unwrap();
    let png = scene_png(dir.path(), "scene.png");
    let (quad, shuffled, single) = (dir.path().join("q.cfkt"), dir.path().join("s.cfkt"), dir.path().join("d.cfkt"));
    let out = dir.path().join("o.png");
    ok(&["mosaic", "--cfa", "quad", "--input", s(&png), "--output", s(&quad)]);
    ok(&["remosaic", "--cfa", "quad", "--input", s(&quad), "--output", s(&shuffled)]);
    let remosaiced = ok(&["demosaic", "--input", s(&shuffled), "--output", s(&out), "--reference", s(&png)]);
    ok(&["mosaic", "--input", s(&png), "--output", s(&single)]);
    let direct = ok(&["demosaic", "--input", s(&single), "--output", s(&out), "--reference", s(&png)]);
    let (a, b) = (remosaiced["metrics"]["psnr_db"].as_f64().unwrap(), direct["metrics"]["psnr_db"].as_f64().unwrap());
    assert!(a < b, "remosaic {a} vs direct {b}");
}

#[test]
fn failures_report_json_and_remove_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let png = scene_png(dir.path(), "scene.png");
    let quad = dir.path().join("q.cfkt");
    ok(&["mosaic", "--cfa", "quad", "--input", s(&png), "--output", s(&quad)]);

    let out = dir.path().join("never.png");
    let r = cfakit(&["demosaic", "--cfa", "quad", "--input", s(&quad), "--output", s(&out)]);
    assert_eq!(r.code, 1);
    assert_eq!(r.json["status"], "error");
    assert_eq!(r.json["command"], "demosaic");
    assert!(r.json["error"].as_str().unwrap().contains("single-bayer"));
    assert!(!out.exists());

    // the mosaic is written, then the mask write fails: both must be gone
    let fixed = dir.path().join("fixed.cfkt");
    let bad_mask = dir.path().join("missing-dir").join("mask.bin");
    let r = cfakit(&[
        "deadpix", "--cfa", "quad", "--dead-rate", "0.01", "--input", s(&quad), "--output", s(&fixed), "--mask-out", s(&bad_mask),
    ]);
    assert_eq!(r.code, 1);
    assert!(!fixed.exists());

    let r = cfakit(&["genscenes", "--output", s(&dir.path().join("gen")), "--size", "50"]);
    assert_eq!(r.code, 1);
    assert!(!dir.path().join("gen").exists());

    let r = cfakit(&["mosaic", "--maskout", "0.5:0.1"]);
    assert_eq!(r.code, 2);
    assert_eq!(r.json["status"], "error");

    let r = cfakit(&["addnoise", "--input", s(&quad), "--output", s(&out), "--dead-rate", "0.2"]);
    assert_eq!(r.code, 1);
}

#[test]
fn commands_are_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let png = scene_png(dir.path(), "scene.png");
    let m = dir.path().join("m.cfkt");
    ok(&["mosaic", "--cfa", "nona", "--input", s(&png), "--output", s(&m)]);
    let run = |name: &str, args: &[&str]| {
        let p = dir.path().join(name);
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--output", s(&p)]);
        ok(&full);
        fs::read(&p).unwrap()
    };
    for args in [
        vec!["addnoise", "--cfa", "nona", "--seed", "5", "--input", s(&m)],
        vec!["deadpix", "--cfa", "nona", "--seed", "5", "--dead-rate", "0.02", "--input", s(&m)],
        vec!["bin", "--cfa", "nona", "--seed", "5", "--input", s(&png)],
        vec!["pack", "--cfa", "nona", "--input", s(&m)],
    ] {
        let ext = if args[0] == "bin" { "png" } else { "cfkt" };
        let a = run(&format!("{}-a.{ext}", args[0]), &args);
        let b = run(&format!("{}-b.{ext}", args[0]), &args);
        assert_eq!(a, b, "{}", args[0]);
    }
    let a = run("n1.cfkt", &["addnoise", "--cfa", "nona", "--seed", "5", "--input", s(&m)]);
    let b = run("n2.cfkt", &["addnoise", "--cfa", "nona", "--seed", "6", "--input", s(&m)]);
    assert_ne!(a, b);
}

#[test]
fn mosaic_tensor_holds_the_layout_samples() {
    let dir = tempfile::tempdir().unwrap();
    let png = scene_png(dir.path(), "scene.png");
    let m = dir.path().join("m.cfkt");
    ok(&["mosaic", "--cfa", "quad", "--input", s(&png), "--output", s(&m)]);
    let t = TensorFile::read(&m).unwrap();
    assert_eq!(t.dims(), &[96, 96]);
    let mosaic = mosaic_from_tensor(&t, CfaKind::Quad).unwrap();
    let img = cfakit::io::read_png(&png).unwrap();
    for (r, c) in [(0, 0), (1, 2), (5, 7), (95, 94)] {
        let ch = CfaKind::Quad.layout().channel_at(r, c).index();
        assert_eq!(mosaic.get(r, c), img.get(r, c, ch));
    }
}

#[test]
fn calibrate_reads_stacks_and_writes_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let truth = NoiseModel::preset(3200).unwrap();
    let stacks = synthetic_flat_stacks(&truth, &[0.1, 0.25, 0.4, 0.55, 0.7, 0.85], 30, 16, 16, 1).unwrap();
    let mut paths = Vec::new();
    for (i, st) in stacks.iter().enumerate() {
        let data: Vec<f64> = st.captures.iter().flatten().copied().collect();
        let p = dir.path().join(format!("stack{i}.cfkt"));
        TensorFile::new(vec![st.captures.len(), 16, 16], TensorData::F64(data)).unwrap().write(&p).unwrap();
        paths.push(p);
    }
    let model = dir.path().join("noise.json");
    let mut args = vec!["calibrate", "--iso", "3200", "--output", s(&model)];
    args.extend(paths.iter().map(|p| s(p)));
    ok(&args);
    let fit = NoiseModel::from_json(&fs::read_to_string(&model).unwrap()).unwrap();
    assert!((fit.variance(0.5) / truth.variance(0.5) - 1.0).abs() < 0.1);

    // the fitted model drives addnoise through --noise-model
    let png = scene_png(dir.path(), "scene.png");
    let m = dir.path().join("m.cfkt");
    ok(&["mosaic", "--input", s(&png), "--output", s(&m)]);
    let j = ok(&["addnoise", "--noise-model", s(&model), "--input", s(&m), "--output", s(&dir.path().join("n.cfkt"))]);
    assert_eq!(j["iso"], 3200);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let png = scene_png(dir.path(), "scene.png");
    let out = dir.path().join("m.cfkt");
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"cfa":"nona","iso":800,"maskout":[0,0.01],"dead_rate":0.01,"strategy":"esum",
               "seeds":{{"noise":1,"dead":2,"data":3,"train":4}},"paths":{{"input":"{}","output":"{}"}}}}"#,
            s(&png),
            s(&out)
        ),
    )
    .unwrap();
    let j = ok(&["mosaic", "--config", s(&cfg)]);
    assert_eq!(j["cfa"], "nona");
    let j = ok(&["mosaic", "--config", s(&cfg), "--cfa", "quad"]);
    assert_eq!(j["cfa"], "quad");

    let bad = dir.path().join("bad.json");
    fs::write(&bad, fs::read_to_string(&cfg).unwrap().replacen("\"iso\"", "\"isoo\"", 1)).unwrap();
    let r = cfakit(&["mosaic", "--config", s(&bad)]);
    assert_eq!(r.code, 1);
    assert!(r.json["error"].as_str().unwrap().contains("isoo"));
}

#[test]
fn genscenes_mine_and_train_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let views = dir.path().join("views");
    ok(&["genscenes", "--output", s(&views), "--scenes", "17", "--views", "1", "--size", "96", "--seed", "3"]);
    let mut pngs: Vec<PathBuf> = fs::read_dir(&views).unwrap().map(|e| e.unwrap().path()).collect();
    pngs.sort();
    assert_eq!(pngs.len(), 17);
    let (m1, m2) = (dir.path().join("m1.jsonl"), dir.path().join("m2.jsonl"));
    for m in [&m1, &m2] {
        let mut args = vec!["mine", "--output", s(m), "--stride", "24"];
        args.extend(pngs.iter().map(|p| s(p)));
        let j = ok(&args);
        assert_eq!(j["candidates"], 17 * 9);
    }
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());

    let model = dir.path().join("net.cfkm");
    let log = dir.path().join("log.csv");
    let j = ok(&[
        "train", "--scenes", s(&views), "--manifest", s(&m1), "--iterations", "2", "--eval-every", "1", "--output",
        s(&model), "--log", s(&log), "--maskout", "0:0.05",
    ]);
    assert_eq!(j["iterations"], 2);
    let csv = fs::read_to_string(&log).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 3);

    let png = &pngs[0];
    let quad = dir.path().join("q.cfkt");
    ok(&["mosaic", "--cfa", "quad", "--input", s(png), "--output", s(&quad)]);
    let j = ok(&[
        "demosaic", "--cfa", "quad", "--model", s(&model), "--input", s(&quad), "--output", s(&dir.path().join("o.png")),
        "--reference", s(png),
    ]);
    assert!(j["metrics"]["psnr_db"].as_f64().unwrap() > 15.0);
    let j = ok(&["bin", "--cfa", "quad", "--model", s(&model), "--input", s(png), "--output", s(&dir.path().join("b.png"))]);
    assert!(j["metrics"]["psnr_db"].as_f64().unwrap() > 10.0);
}
