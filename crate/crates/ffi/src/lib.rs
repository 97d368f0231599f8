//! C ABI over `cfakit`.
//!
//! Objects are opaque heap handles created by `*_new`/`*_read`/operation
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`CfakitStatus`]; on failure a message for the calling thread
//! is available from [`cfakit_last_error`]. Image and mosaic samples are
//! `double`s in `[0, 1]`, row-major, channel-last.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cfakit::cfa::CfaKind;
use cfakit::demosaic::{self, DeadPixelMask};
use cfakit::image::RgbImage;
use cfakit::metrics;
use cfakit::micronet::{self, MicroNetConfig, MicroNetParams};
use cfakit::mosaic::{self, Mosaic};
use cfakit::noise::{self, NoiseModel};
use cfakit::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfakitStatus {
    Ok = 0,
    NullPointer = 1,
    DimensionMismatch = 2,
    UnsupportedLayout = 3,
    InvalidArgument = 4,
    Calibration = 5,
    NoDonor = 6,
    Diverged = 7,
    Format = 8,
    Io = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfakitCfa {
    Single = 0,
    Quad = 1,
    Nona = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfakitDemosaicMethod {
    Bilinear = 0,
    EdgeAware = 1,
    Tent = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CfakitMetrics {
    pub psnr_db: f64,
    pub ssim: f64,
    pub delta_e: f64,
}

pub struct CfakitImage(RgbImage);
pub struct CfakitMosaic(Mosaic);
pub struct CfakitNoiseModel(NoiseModel);
pub struct CfakitMask(DeadPixelMask);
pub struct CfakitModel {
    params: MicroNetParams<f32>,
    config: MicroNetConfig,
}

impl From<CfakitCfa> for CfaKind {
    fn from(k: CfakitCfa) -> Self {
        match k {
            CfakitCfa::Single => CfaKind::Single,
            CfakitCfa::Quad => CfaKind::Quad,
            CfakitCfa::Nona => CfaKind::Nona,
        }
    }
}

impl From<CfaKind> for CfakitCfa {
    fn from(k: CfaKind) -> Self {
        match k {
            CfaKind::Single => CfakitCfa::Single,
            CfaKind::Quad => CfakitCfa::Quad,
            CfaKind::Nona => CfakitCfa::Nona,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CfakitStatus {
    match e {
        Error::DimensionMismatch(_) => CfakitStatus::DimensionMismatch,
        Error::UnsupportedLayout(_) => CfakitStatus::UnsupportedLayout,
        Error::InvalidArgument(_) => CfakitStatus::InvalidArgument,
        Error::Calibration(_) => CfakitStatus::Calibration,
        Error::NoDonor { .. } => CfakitStatus::NoDonor,
        Error::Diverged { .. } => CfakitStatus::Diverged,
        Error::Format(_) | Error::Json(_) => CfakitStatus::Format,
        Error::Io(_) => CfakitStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

type FfiResult<T> = Result<T, Fail>;

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> CfakitStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CfakitStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            CfakitStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            CfakitStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &'static str) -> FfiResult<&'a T> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> FfiResult<&'a [f64]> {
    if p.is_null() {
        if len == 0 {
            return Ok(&[]);
        }
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Lib(Error::InvalidArgument(format!("{what} is not UTF-8"))))
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> FfiResult<()> {
    if len != src.len() {
        return Err(Fail::Lib(Error::DimensionMismatch(format!("buffer holds {len} values, need {}", src.len()))));
    }
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, len);
    Ok(())
}

/// Message of the last failed call on this thread ("" after a success).
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cfakit_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cfakit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- images ----

/// Copies `height * width * 3` samples into a new image.
///
/// # Safety
/// `data` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfakit_image_new(
    height: usize,
    width: usize,
    data: *const f64,
    len: usize,
    out: *mut *mut CfakitImage,
) -> CfakitStatus {
    guard(|| {
        let img = RgbImage::new(height, width, slice(data, len, "data")?.to_vec())?;
        put(out, CfakitImage(img))
    })
}

/// # Safety
/// `image` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cfakit_image_free(image: *mut CfakitImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// # Safety
/// `image` must be a valid handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn cfakit_image_height(image: *const CfakitImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.height())
}

/// # Safety
/// `image` must be a valid handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn cfakit_image_width(image: *const CfakitImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.width())
}

/// Copies the samples into `out`, which must hold exactly `height * width * 3`.
///
/// # Safety
/// `image` must be valid; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cfakit_image_copy_data(image: *const CfakitImage, out: *mut f64, len: usize) -> CfakitStatus {
    guard(|| copy_out(borrow(image, "image")?.0.data(), out, len))
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfakit_image_read_png(path: *const c_char, out: *mut *mut CfakitImage) -> CfakitStatus {
    guard(|| put(out, CfakitImage(cfakit::io::read_png(text(path, "path")?)?)))
}

/// Writes a 16-bit RGB PNG.
///
/// # Safety
/// `image` must be valid; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cfakit_image_write_png(image: *const CfakitImage, path: *const c_char) -> CfakitStatus {
    guard(|| Ok(cfakit::io::write_png(&borrow(image, "image")?.0, text(path, "path")?)?))
}

// ---- mosaics ----

/// # Safety
/// `data` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfakit_mosaic_new(
    cfa: CfakitCfa,
    height: usize,
    width: usize,
    data: *const f64,
    len: usize,
    out: *mut *mut CfakitMosaic,
) -> CfakitStatus {
    guard(|| {
        let m = Mosaic::new(CfaKind::from(cfa).layout(), height, width, slice(data, len, "data")?.to_vec())?;
        put(out, CfakitMosaic(m))
    })
}

/// # Safety
/// `mosaic` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cfakit_mosaic_free(mosaic: *mut CfakitMosaic) {
    if !mosaic.is_null() {
        drop(Box::from_raw(mosaic));
    }
}

/// # Safety
/// `mosaic` must be a valid handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn cfakit_mosaic_height(mosaic: *const CfakitMosaic) -> usize {
    mosaic.as_ref().map_or(0, |m| m.0.height())
}

/// # Safety
/// `mosaic` must be a valid handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn cfakit_mosaic_width(mosaic: *const CfakitMosaic) -> usize {
    mosaic.as_ref().map_or(0, |m| m.0.width())
}

/// # Safety
/// `mosaic` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfakit_mosaic_cfa(mosaic: *const CfakitMosaic, out: *mut CfakitCfa) -> CfakitStatus {
    guard(|| {
        let kind = borrow(mosaic, "mosaic")?.0.kind();
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        *out = kind.into();
        Ok(())
    })
}

/// # Safety
/// `mosaic` must be valid; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cfakit_mosaic_copy_data(mosaic: *const CfakitMosaic, out: *mut f64, len: usize) -> CfakitStatus {
    guard(|| copy_out(borrow(mosaic, "mosaic")?.0.data(), out, len))
}

/// Samples `image` through the `cfa` layout.
///
/// # Safety
/// `image` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfakit_mosaic_sample(
    image: *const CfakitImage,
    cfa: CfakitCfa,
    out: *mut *mut CfakitMosaic,
) -> CfakitStatus {
    guard(|| {
        let m = mosaic::sample_mosaic(&borrow(image, "image")?.0, &CfaKind::from(cfa).layout())?;
        put(out, CfakitMosaic(m))
    })
}

/// Quad/Nona to Single-Bayer by pixel shuffling.
///
/// # Safety
/// `mosaic` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfakit_mosaic_shuffle(mosaic: *const CfakitMosaic, out: *mut *mut CfakitMosaic) -> CfakitStatus {
    guard(|| put(out, CfakitMosaic(mosaic::shuffle_remosaic(&borrow(mosaic, "mosaic")?.0)?)))
}

/// Averages each same-color block into one Single-Bayer pixel.
///
/// # Safety
/// `mosaic` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfakit_mosaic_bin(mosaic: *const CfakitMosaic, out: *mut *mut CfakitMosaic) -> CfakitStatus {
    guard(|| put(out, CfakitMosaic(mosaic::bin(&borrow(mosaic, "mosaic")?.0)?)))
}

/// # Safety
/// `mosaic` and `model` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfakit_mosaic_add_noise(
    mosaic: *const CfakitMosaic,
    model: *const CfakitNoiseModel,
    seed: u64,
    out: *mut *mut CfakitMosaic,
) -> CfakitStatus {
    guard(|| {
        let n = noise::synthesize(&borrow(mosaic, "mosaic")?.0, &borrow(model, "model")?.0, seed)?;
        put(out, CfakitMosaic(n))
    })
}

/// Replaces the pixels of `mask` by same-channel Gaussian interpolation.
///
/// # Safety
/// `mosaic` and `mask` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfakit_mosaic_interpolate_dead(
    mosaic: *const CfakitMosaic,
    mask: *const CfakitMask,
    out: *mut *mut CfakitMosaic,
) -> CfakitStatus {
    guard(|| {
        let m = demosaic::interpolate_dead(&borrow(mosaic, "mosaic")?.0, &borrow(mask, "mask")?.0)?;
        put(out, CfakitMosaic(m))
    })
}

/// # Safety
/// `mosaic` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfakit_demosaic(
    mosaic: *const CfakitMosaic,
    method: CfakitDemosaicMethod,
    out: *mut *mut CfakitImage,
) -> CfakitStatus {
    guard(|| {
        let m = &borrow(mosaic, "mosaic")?.0;
        let img = match method {
            CfakitDemosaicMethod::Bilinear => demosaic::bilinear_demosaic(m)?,
            CfakitDemosaicMethod::EdgeAware => demosaic::edge_aware_demosaic(m)?,
            CfakitDemosaicMethod::Tent => demosaic::tent_demosaic(m)?,
        };
        put(out, CfakitImage(img))
    })
}

// ---- noise models and masks ----

/// Preset Poisson-Gaussian model for a supported ISO (400 ... 12800).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfakit_noise_preset(iso: u32, out: *mut *mut CfakitNoiseModel) -> CfakitStatus {
    guard(|| put(out, CfakitNoiseModel(NoiseModel::preset(iso)?)))
}

/// Parses a noise-model JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfakit_noise_from_json(json: *const c_char, out: *mut *mut CfakitNoiseModel) -> CfakitStatus {
    guard(|| {
        let text = text(json, "json")?;
        put(out, CfakitNoiseModel(NoiseModel::from_json(text)?))
    })
}

/// Noise variance the model predicts at intensity `x`; NaN for a null model.
///
/// # Safety
/// `model` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn cfakit_noise_variance(model: *const CfakitNoiseModel, x: f64) -> f64 {
    model.as_ref().map_or(f64::NAN, |m| m.0.variance(x))
}

/// # Safety
/// `model` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cfakit_noise_free(model: *mut CfakitNoiseModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Exactly `round(rate * height * width)` dead pixels at seeded positions.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfakit_mask_random(
    height: usize,
    width: usize,
    rate: f64,
    seed: u64,
    out: *mut *mut CfakitMask,
) -> CfakitStatus {
    guard(|| put(out, CfakitMask(demosaic::make_dead_mask(height, width, rate, seed)?)))
}

/// # Safety
/// `mask` must be a valid handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn cfakit_mask_count(mask: *const CfakitMask) -> usize {
    mask.as_ref().map_or(0, |m| m.0.count())
}

/// # Safety
/// `mask` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cfakit_mask_free(mask: *mut CfakitMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

// ---- metrics ----

/// PSNR, SSIM and CIE76 delta E of `a` against `b` after cropping `border`.
///
/// # Safety
/// `a`, `b` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfakit_metrics(
    a: *const CfakitImage,
    b: *const CfakitImage,
    border: usize,
    out: *mut CfakitMetrics,
) -> CfakitStatus {
    guard(|| {
        let r = metrics::evaluate(&borrow(a, "a")?.0, &borrow(b, "b")?.0, border)?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        *out = CfakitMetrics { psnr_db: r.psnr_db, ssim: r.ssim, delta_e: r.delta_e };
        Ok(())
    })
}

// ---- trained models ----

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfakit_model_read(path: *const c_char, out: *mut *mut CfakitModel) -> CfakitStatus {
    guard(|| {
        let (params, config) = micronet::read_model::<f32>(text(path, "path")?)?;
        put(out, CfakitModel { params, config })
    })
}

/// Demosaics and denoises `mosaic` with a trained network.
///
/// # Safety
/// `model` and `mosaic` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfakit_model_run(
    model: *const CfakitModel,
    mosaic: *const CfakitMosaic,
    out: *mut *mut CfakitImage,
) -> CfakitStatus {
    guard(|| {
        let model = borrow(model, "model")?;
        let input = micronet::prepare_input::<f32>(&borrow(mosaic, "mosaic")?.0, model.config.strategy)?;
        let pred = micronet::forward_one(&model.params, &model.config, &input)?;
        put(out, CfakitImage(micronet::output_image(&pred, input.height, input.width)?))
    })
}

/// # Safety
/// `model` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cfakit_model_free(model: *mut CfakitModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
