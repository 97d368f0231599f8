use std::ffi::{CStr, CString};
use std::ptr;

use cfakit::micronet::{write_model, MicroNetConfig, MicroNetParams, Strategy};
use cfakit_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cfakit_last_error()) }.to_string_lossy().into_owned()
}

fn ramp(h: usize, w: usize) -> Vec<f64> {
    (0..h * w * 3).map(|i| (i % 97) as f64 / 96.0).collect()
}

unsafe fn image(h: usize, w: usize, data: &[f64]) -> *mut CfakitImage {
    let mut out = ptr::null_mut();
    assert_eq!(cfakit_image_new(h, w, data.as_ptr(), data.len(), &mut out), CfakitStatus::Ok);
    out
}

#[test]
fn image_roundtrip_and_dims() {
    unsafe {
        let data = ramp(6, 12);
        let img = image(6, 12, &data);
        assert_eq!(cfakit_image_height(img), 6);
        assert_eq!(cfakit_image_width(img), 12);
        let mut back = vec![0.0; data.len()];
        assert_eq!(cfakit_image_copy_data(img, back.as_mut_ptr(), back.len()), CfakitStatus::Ok);
        assert_eq!(back, data);
        let mut short = vec![0.0; 5];
        assert_eq!(cfakit_image_copy_data(img, short.as_mut_ptr(), 5), CfakitStatus::DimensionMismatch);
        cfakit_image_free(img);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut out = ptr::null_mut();
        let data = [0.5; 7];
        assert_eq!(cfakit_image_new(2, 2, data.as_ptr(), 7, &mut out), CfakitStatus::DimensionMismatch);
        assert!(out.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(cfakit_image_new(2, 2, ptr::null(), 12, &mut out), CfakitStatus::NullPointer);
        assert!(last_error().contains("null"));

        let mut noise = ptr::null_mut();
        assert_eq!(cfakit_noise_preset(1234, &mut noise), CfakitStatus::InvalidArgument);
        assert_eq!(cfakit_noise_preset(800, &mut noise), CfakitStatus::Ok);
        assert_eq!(last_error(), "");
        cfakit_noise_free(noise);

        assert_eq!(cfakit_image_height(ptr::null()), 0);
        cfakit_image_free(ptr::null_mut());
    }
}

#[test]
fn mosaic_rejects_bad_period() {
    unsafe {
        let data = ramp(8, 8);
        let img = image(8, 8, &data);
        let mut m = ptr::null_mut();
        assert_eq!(cfakit_mosaic_sample(img, CfakitCfa::Nona, &mut m), CfakitStatus::DimensionMismatch);
        assert_eq!(cfakit_mosaic_sample(img, CfakitCfa::Quad, &mut m), CfakitStatus::Ok);
        let mut kind = CfakitCfa::Single;
        assert_eq!(cfakit_mosaic_cfa(m, &mut kind), CfakitStatus::Ok);
        assert_eq!(kind, CfakitCfa::Quad);
        cfakit_mosaic_free(m);
        cfakit_image_free(img);
    }
}

#[test]
fn constant_image_survives_the_pipeline() {
    unsafe {
        let (h, w) = (24, 24);
        let data: Vec<f64> = (0..h * w).flat_map(|_| [0.3, 0.5, 0.7]).collect();
        let img = image(h, w, &data);
        for cfa in [CfakitCfa::Single, CfakitCfa::Quad, CfakitCfa::Nona] {
            let mut m = ptr::null_mut();
            assert_eq!(cfakit_mosaic_sample(img, cfa, &mut m), CfakitStatus::Ok);
            let mut single = ptr::null_mut();
            if cfa == CfakitCfa::Single {
                assert_eq!(cfakit_mosaic_shuffle(m, &mut single), CfakitStatus::UnsupportedLayout);
                assert_eq!(cfakit_mosaic_sample(img, cfa, &mut single), CfakitStatus::Ok);
            } else {
                assert_eq!(cfakit_mosaic_shuffle(m, &mut single), CfakitStatus::Ok);
                let mut rec = ptr::null_mut();
                assert_eq!(cfakit_demosaic(m, CfakitDemosaicMethod::Bilinear, &mut rec), CfakitStatus::UnsupportedLayout);
            }
            for (src, method) in [
                (single, CfakitDemosaicMethod::Bilinear),
                (single, CfakitDemosaicMethod::EdgeAware),
                (m, CfakitDemosaicMethod::Tent),
            ] {
                let mut rec = ptr::null_mut();
                assert_eq!(cfakit_demosaic(src, method, &mut rec), CfakitStatus::Ok);
                let mut r = CfakitMetrics::default();
                assert_eq!(cfakit_metrics(rec, img, 2, &mut r), CfakitStatus::Ok);
                assert_eq!(r.psnr_db, 99.0);
                assert!((r.ssim - 1.0).abs() < 1e-9);
                assert!(r.delta_e < 1e-9);
                cfakit_image_free(rec);
            }
            cfakit_mosaic_free(single);
            cfakit_mosaic_free(m);
        }
        cfakit_image_free(img);
    }
}

#[test]
fn bin_noise_and_dead_pixels() {
    unsafe {
        let data = ramp(12, 12);
        let img = image(12, 12, &data);
        let mut m = ptr::null_mut();
        assert_eq!(cfakit_mosaic_sample(img, CfakitCfa::Nona, &mut m), CfakitStatus::Ok);
        let mut binned = ptr::null_mut();
        assert_eq!(cfakit_mosaic_bin(m, &mut binned), CfakitStatus::Ok);
        assert_eq!((cfakit_mosaic_height(binned), cfakit_mosaic_width(binned)), (4, 4));

        let mut noise = ptr::null_mut();
        assert_eq!(cfakit_noise_preset(3200, &mut noise), CfakitStatus::Ok);
        assert!((cfakit_noise_variance(noise, 0.5) - (0.005 + 1e-5)).abs() < 1e-12);
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(cfakit_mosaic_add_noise(m, noise, 9, &mut a), CfakitStatus::Ok);
        assert_eq!(cfakit_mosaic_add_noise(m, noise, 9, &mut b), CfakitStatus::Ok);
        let (mut va, mut vb) = (vec![0.0; 144], vec![0.0; 144]);
        cfakit_mosaic_copy_data(a, va.as_mut_ptr(), 144);
        cfakit_mosaic_copy_data(b, vb.as_mut_ptr(), 144);
        assert_eq!(va, vb);

        let mut mask = ptr::null_mut();
        assert_eq!(cfakit_mask_random(12, 12, 0.05, 3, &mut mask), CfakitStatus::Ok);
        assert_eq!(cfakit_mask_count(mask), 7);
        let mut fixed = ptr::null_mut();
        assert_eq!(cfakit_mosaic_interpolate_dead(a, mask, &mut fixed), CfakitStatus::Ok);

        for p in [a, b, fixed, binned, m] {
            cfakit_mosaic_free(p);
        }
        cfakit_mask_free(mask);
        cfakit_noise_free(noise);
        cfakit_image_free(img);
    }
}

#[test]
fn noise_model_from_json() {
    unsafe {
        let ok = CString::new(r#"{"iso":800,"variant":"parametric","shot":0.002,"read":0.0001}"#).unwrap();
        let mut n = ptr::null_mut();
        assert_eq!(cfakit_noise_from_json(ok.as_ptr(), &mut n), CfakitStatus::Ok);
        assert!((cfakit_noise_variance(n, 0.5) - 0.0011).abs() < 1e-12);
        cfakit_noise_free(n);
        let bad = CString::new(r#"{"iso":800,"variant":"parametric"}"#).unwrap();
        let mut n = ptr::null_mut();
        assert_eq!(cfakit_noise_from_json(bad.as_ptr(), &mut n), CfakitStatus::Format);
        assert!(n.is_null());
    }
}

#[test]
fn png_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("x.png").to_str().unwrap()).unwrap();
    unsafe {
        let data = ramp(5, 7);
        let img = image(5, 7, &data);
        assert_eq!(cfakit_image_write_png(img, path.as_ptr()), CfakitStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(cfakit_image_read_png(path.as_ptr(), &mut back), CfakitStatus::Ok);
        let mut v = vec![0.0; data.len()];
        cfakit_image_copy_data(back, v.as_mut_ptr(), v.len());
        for (x, y) in v.iter().zip(&data) {
            assert!((x - y).abs() <= 0.5 / 65535.0 + 1e-12);
        }
        cfakit_image_free(back);
        cfakit_image_free(img);

        let missing = CString::new(dir.path().join("none.png").to_str().unwrap()).unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(cfakit_image_read_png(missing.as_ptr(), &mut out), CfakitStatus::Io);
    }
}

#[test]
fn zero_initialised_model_matches_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("m.cfkm");
    let config = MicroNetConfig::plain(Strategy::Embedding, 2, 4, 3);
    let params = MicroNetParams::<f32>::init(&config).unwrap();
    write_model(&params, &config, &file).unwrap();
    let path = CString::new(file.to_str().unwrap()).unwrap();
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(cfakit_model_read(path.as_ptr(), &mut model), CfakitStatus::Ok);
        let data = ramp(12, 12);
        let img = image(12, 12, &data);
        let mut m = ptr::null_mut();
        cfakit_mosaic_sample(img, CfakitCfa::Quad, &mut m);
        let (mut net, mut tent) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(cfakit_model_run(model, m, &mut net), CfakitStatus::Ok);
        assert_eq!(cfakit_demosaic(m, CfakitDemosaicMethod::Tent, &mut tent), CfakitStatus::Ok);
        let (mut a, mut b) = (vec![0.0; 432], vec![0.0; 432]);
        cfakit_image_copy_data(net, a.as_mut_ptr(), 432);
        cfakit_image_copy_data(tent, b.as_mut_ptr(), 432);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6);
        }
        for p in [net, tent, img] {
            cfakit_image_free(p);
        }
        cfakit_mosaic_free(m);
        cfakit_model_free(model);
    }
}

#[test]
fn version_and_header() {
    let v = unsafe { CStr::from_ptr(cfakit_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/cfakit.h")).unwrap();
    for sym in ["cfakit_image_new", "cfakit_demosaic", "cfakit_model_run", "CFAKIT_STATUS_NULL_POINTER", "typedef struct CfakitImage CfakitImage"] {
        assert!(header.contains(sym), "{sym} missing from header");
    }
}
