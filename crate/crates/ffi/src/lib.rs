//! C ABI for the spadsim toolkit.
//!
//! Every fallible function returns a [`SpadStatus`]; on failure a message is
//! available from [`spadsim_last_error`] on the calling thread. Images,
//! flux fields and count frames are opaque handles released with their
//! `*_free` function. Pointer arguments must be valid for the duration of
//! the call; null pointers are reported as `SPAD_STATUS_NULL_POINTER`.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use spadsim::hdr_io::{read_hdr_file, read_radiance_hdr, write_hdr_file, write_radiance_hdr, HdrImage};
use spadsim::metrics::{psnr, ssim, ImageView};
use spadsim::radiometry::{self, luminance, ExposureTargets, FluxField};
use spadsim::spad::{self, CountFrame, Sampler, SpadConfig};
use spadsim::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpadStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpadSampler {
    Exact = 0,
    Gaussian = 1,
}

/// Detector settings. Times are in seconds.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SpadDetectorConfig {
    pub quantum_efficiency: f64,
    pub dead_time: f64,
    pub exposure_time: f64,
    pub sampler: SpadSampler,
    pub seed: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SpadExposureTargets {
    pub target_x: f64,
    pub target_count: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SpadExposurePlan {
    pub exposure_time: f64,
    pub flux_scale: f64,
    pub median_flux: f64,
}

/// Linear RGB radiance image.
pub struct SpadHdrImage(HdrImage);

/// Per-pixel photon flux, photons per second.
pub struct SpadFluxField(FluxField);

/// Per-pixel detection counts.
pub struct SpadCountFrame(CountFrame);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> SpadStatus {
    match e {
        Error::Io { .. } => SpadStatus::Io,
        Error::MalformedHeader { .. }
        | Error::UnsupportedOrientation { .. }
        | Error::TruncatedScanline { .. }
        | Error::RunOverrun { .. }
        | Error::UnsupportedBitDepth(_)
        | Error::UnsupportedChannels(_)
        | Error::Png(_) => SpadStatus::Format,
        _ => SpadStatus::InvalidArgument,
    }
}

type Outcome = Result<(), SpadStatus>;

fn fail(status: SpadStatus, msg: impl Into<String>) -> SpadStatus {
    set_error(msg);
    status
}

impl From<Error> for SpadStatus {
    fn from(e: Error) -> Self {
        fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, converting panics to `Panic` and clearing the error slot on success.
fn guard(f: impl FnOnce() -> Outcome) -> SpadStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SpadStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(SpadStatus::Panic, "internal panic"),
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), SpadStatus> {
    if p.is_null() {
        Err(fail(SpadStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, SpadStatus> {
    non_null(p, "path")?;
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SpadStatus::InvalidArgument, "path is not UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

fn to_config(c: &SpadDetectorConfig) -> Result<SpadConfig, SpadStatus> {
    let config = SpadConfig {
        quantum_efficiency: c.quantum_efficiency,
        dead_time: c.dead_time,
        exposure_time: c.exposure_time,
        sampler: match c.sampler {
            SpadSampler::Exact => Sampler::Exact,
            SpadSampler::Gaussian => Sampler::Gaussian,
        },
        seed: c.seed,
        frames_to_average: 1,
    };
    config.validate()?;
    Ok(config)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spadsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. Valid until the next
/// call into the library from the same thread.
#[no_mangle]
pub extern "C" fn spadsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn spadsim_config_default() -> SpadDetectorConfig {
    let d = SpadConfig::default();
    SpadDetectorConfig {
        quantum_efficiency: d.quantum_efficiency,
        dead_time: d.dead_time,
        exposure_time: d.exposure_time,
        sampler: SpadSampler::Gaussian,
        seed: d.seed,
    }
}

#[no_mangle]
pub extern "C" fn spadsim_exposure_targets_default() -> SpadExposureTargets {
    let d = ExposureTargets::default();
    SpadExposureTargets {
        target_x: d.target_x,
        target_count: d.target_count,
    }
}

// ---- HDR images ----

#[no_mangle]
pub unsafe extern "C" fn spadsim_hdr_read(
    path: *const c_char,
    out: *mut *mut SpadHdrImage,
) -> SpadStatus {
    guard(|| {
        non_null(out, "out")?;
        let image = read_hdr_file(path_arg(path)?)?;
        put(out, SpadHdrImage(image));
        Ok(())
    })
}

/// Decodes an in-memory Radiance `.hdr` file.
#[no_mangle]
pub unsafe extern "C" fn spadsim_hdr_decode(
    data: *const u8,
    len: usize,
    out: *mut *mut SpadHdrImage,
) -> SpadStatus {
    guard(|| {
        non_null(data, "data")?;
        non_null(out, "out")?;
        let bytes = std::slice::from_raw_parts(data, len);
        put(out, SpadHdrImage(read_radiance_hdr(bytes)?));
        Ok(())
    })
}

/// Builds an image from `width * height * 3` interleaved RGB floats.
#[no_mangle]
pub unsafe extern "C" fn spadsim_hdr_new(
    width: usize,
    height: usize,
    rgb: *const f32,
    out: *mut *mut SpadHdrImage,
) -> SpadStatus {
    guard(|| {
        non_null(rgb, "rgb")?;
        non_null(out, "out")?;
        let n = width
            .checked_mul(height)
            .and_then(|p| p.checked_mul(3))
            .ok_or_else(|| fail(SpadStatus::InvalidArgument, "image size overflows"))?;
        let data = std::slice::from_raw_parts(rgb, n);
        let pixels = data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        put(out, SpadHdrImage(HdrImage::new(width, height, pixels)?));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn spadsim_hdr_write(
    image: *const SpadHdrImage,
    path: *const c_char,
) -> SpadStatus {
    guard(|| {
        non_null(image, "image")?;
        write_hdr_file(path_arg(path)?, &(*image).0)?;
        Ok(())
    })
}

/// Encodes to Radiance bytes; release the buffer with [`spadsim_bytes_free`].
#[no_mangle]
pub unsafe extern "C" fn spadsim_hdr_encode(
    image: *const SpadHdrImage,
    out_data: *mut *mut u8,
    out_len: *mut usize,
) -> SpadStatus {
    guard(|| {
        non_null(image, "image")?;
        non_null(out_data, "out_data")?;
        non_null(out_len, "out_len")?;
        let bytes = write_radiance_hdr(&(*image).0).into_boxed_slice();
        *out_len = bytes.len();
        *out_data = Box::into_raw(bytes).cast();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn spadsim_bytes_free(data: *mut u8, len: usize) {
    if !data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(data, len)));
    }
}

#[no_mangle]
pub unsafe extern "C" fn spadsim_hdr_dimensions(
    image: *const SpadHdrImage,
    width: *mut usize,
    height: *mut usize,
) -> SpadStatus {
    guard(|| {
        non_null(image, "image")?;
        non_null(width, "width")?;
        non_null(height, "height")?;
        (*width, *height) = (*image).0.dimensions();
        Ok(())
    })
}

/// Interleaved RGB floats, `width * height * 3` long, owned by the image.
#[no_mangle]
pub unsafe extern "C" fn spadsim_hdr_pixels(image: *const SpadHdrImage) -> *const f32 {
    if image.is_null() {
        return ptr::null();
    }
    (*image).0.pixels().as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn spadsim_hdr_free(image: *mut SpadHdrImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

// ---- Count statistics ----

/// Mean detections, `q phi T / (1 + q phi tau)`.
#[no_mangle]
pub extern "C" fn spadsim_expected_count(phi: f64, q: f64, exposure: f64, dead_time: f64) -> f64 {
    spad::expected_count(phi, q, exposure, dead_time)
}

/// Count variance, `q phi T / (1 + q phi tau)^3`.
#[no_mangle]
pub extern "C" fn spadsim_count_variance(phi: f64, q: f64, exposure: f64, dead_time: f64) -> f64 {
    spad::count_variance(phi, q, exposure, dead_time)
}

#[no_mangle]
pub extern "C" fn spadsim_snr(phi: f64, q: f64, exposure: f64, dead_time: f64) -> f64 {
    spad::snr_flux(phi, q, exposure, dead_time)
}

/// Flux from a count; `saturated` is set when the count was clamped below the ceiling.
#[no_mangle]
pub unsafe extern "C" fn spadsim_invert_count(
    count: f64,
    q: f64,
    exposure: f64,
    dead_time: f64,
    flux: *mut f64,
    saturated: *mut bool,
) -> SpadStatus {
    guard(|| {
        non_null(flux, "flux")?;
        let inv = spad::invert_count(count, q, exposure, dead_time);
        *flux = inv.flux;
        if !saturated.is_null() {
            *saturated = inv.saturated;
        }
        Ok(())
    })
}

// ---- Exposure and flux ----

/// Plans exposure time and flux scale from the image's luminance.
#[no_mangle]
pub unsafe extern "C" fn spadsim_plan_exposure(
    image: *const SpadHdrImage,
    config: *const SpadDetectorConfig,
    targets: *const SpadExposureTargets,
    out: *mut SpadExposurePlan,
) -> SpadStatus {
    guard(|| {
        non_null(image, "image")?;
        non_null(config, "config")?;
        non_null(targets, "targets")?;
        non_null(out, "out")?;
        let config = to_config(&*config)?;
        let t = &*targets;
        let targets = ExposureTargets {
            target_x: t.target_x,
            target_count: t.target_count,
        };
        let plan = radiometry::plan_exposure(&luminance(&(*image).0), &config, targets)?;
        *out = SpadExposurePlan {
            exposure_time: plan.exposure_time,
            flux_scale: plan.flux_scale,
            median_flux: plan.median_flux,
        };
        Ok(())
    })
}

/// Flux field `scale * luminance(image)`.
#[no_mangle]
pub unsafe extern "C" fn spadsim_flux_from_image(
    image: *const SpadHdrImage,
    scale: f64,
    out: *mut *mut SpadFluxField,
) -> SpadStatus {
    guard(|| {
        non_null(image, "image")?;
        non_null(out, "out")?;
        let flux = radiometry::flux_from_image(&luminance(&(*image).0), scale)?;
        put(out, SpadFluxField(flux));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn spadsim_flux_dimensions(
    flux: *const SpadFluxField,
    width: *mut usize,
    height: *mut usize,
) -> SpadStatus {
    guard(|| {
        non_null(flux, "flux")?;
        non_null(width, "width")?;
        non_null(height, "height")?;
        *width = (*flux).0.width;
        *height = (*flux).0.height;
        Ok(())
    })
}

/// Row-major flux values, owned by the field.
#[no_mangle]
pub unsafe extern "C" fn spadsim_flux_values(flux: *const SpadFluxField) -> *const f64 {
    if flux.is_null() {
        return ptr::null();
    }
    (*flux).0.phi.as_ptr()
}

#[no_mangle]
pub unsafe extern "C" fn spadsim_flux_free(flux: *mut SpadFluxField) {
    if !flux.is_null() {
        drop(Box::from_raw(flux));
    }
}

// ---- Frames ----

/// One exposure of `flux`. The result depends only on the config seed,
/// `frame_index` and the flux, never on threading.
#[no_mangle]
pub unsafe extern "C" fn spadsim_simulate_frame(
    flux: *const SpadFluxField,
    config: *const SpadDetectorConfig,
    frame_index: u64,
    out: *mut *mut SpadCountFrame,
) -> SpadStatus {
    guard(|| {
        non_null(flux, "flux")?;
        non_null(config, "config")?;
        non_null(out, "out")?;
        let config = to_config(&*config)?;
        put(out, SpadCountFrame(spad::simulate_frame(&(*flux).0, &config, frame_index)));
        Ok(())
    })
}

/// Per-pixel mean of `count` frames of equal size.
#[no_mangle]
pub unsafe extern "C" fn spadsim_average_frames(
    frames: *const *const SpadCountFrame,
    count: usize,
    out: *mut *mut SpadCountFrame,
) -> SpadStatus {
    guard(|| {
        non_null(frames, "frames")?;
        non_null(out, "out")?;
        if count == 0 {
            return Err(fail(SpadStatus::InvalidArgument, "no frames to average"));
        }
        let ptrs = std::slice::from_raw_parts(frames, count);
        let (w, h) = {
            non_null(ptrs[0], "frames[0]")?;
            (*ptrs[0]).0.dimensions()
        };
        let mut acc = spad::FrameAccumulator::new(w, h);
        for (i, &p) in ptrs.iter().enumerate() {
            non_null(p, &format!("frames[{i}]"))?;
            acc.add(&(*p).0)?;
        }
        put(out, SpadCountFrame(acc.mean()?));
        Ok(())
    })
}

/// Inverts every pixel's count to flux; `saturated` receives the number of clamped pixels.
#[no_mangle]
pub unsafe extern "C" fn spadsim_invert_frame(
    frame: *const SpadCountFrame,
    config: *const SpadDetectorConfig,
    out: *mut *mut SpadFluxField,
    saturated: *mut usize,
) -> SpadStatus {
    guard(|| {
        non_null(frame, "frame")?;
        non_null(config, "config")?;
        non_null(out, "out")?;
        let config = to_config(&*config)?;
        let inv = spad::invert_frame(&(*frame).0, &config);
        if !saturated.is_null() {
            *saturated = inv.saturated;
        }
        put(out, SpadFluxField(inv.flux));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn spadsim_frame_dimensions(
    frame: *const SpadCountFrame,
    width: *mut usize,
    height: *mut usize,
) -> SpadStatus {
    guard(|| {
        non_null(frame, "frame")?;
        non_null(width, "width")?;
        non_null(height, "height")?;
        (*width, *height) = (*frame).0.dimensions();
        Ok(())
    })
}

/// Row-major counts, owned by the frame.
#[no_mangle]
pub unsafe extern "C" fn spadsim_frame_counts(frame: *const SpadCountFrame) -> *const f64 {
    if frame.is_null() {
        return ptr::null();
    }
    (*frame).0.counts.as_ptr()
}

#[no_mangle]
pub unsafe extern "C" fn spadsim_frame_free(frame: *mut SpadCountFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

// ---- Metrics on raw buffers ----

unsafe fn views<'a>(
    a: *const f64,
    b: *const f64,
    width: usize,
    height: usize,
    channels: usize,
) -> Result<(ImageView<'a>, ImageView<'a>), SpadStatus> {
    non_null(a, "a")?;
    non_null(b, "b")?;
    let n = width
        .checked_mul(height)
        .and_then(|p| p.checked_mul(channels))
        .ok_or_else(|| fail(SpadStatus::InvalidArgument, "image size overflows"))?;
    let va = ImageView::new(width, height, channels, std::slice::from_raw_parts(a, n))?;
    let vb = ImageView::new(width, height, channels, std::slice::from_raw_parts(b, n))?;
    Ok((va, vb))
}

/// PSNR in dB of two interleaved images; identical inputs give +infinity.
#[no_mangle]
pub unsafe extern "C" fn spadsim_psnr(
    a: *const f64,
    b: *const f64,
    width: usize,
    height: usize,
    channels: usize,
    peak: f64,
    out: *mut f64,
) -> SpadStatus {
    guard(|| {
        non_null(out, "out")?;
        let (va, vb) = views(a, b, width, height, channels)?;
        *out = psnr(va, vb, peak)?;
        Ok(())
    })
}

/// Mean SSIM (11x11 Gaussian window, valid region; channel mean for RGB).
#[no_mangle]
pub unsafe extern "C" fn spadsim_ssim(
    a: *const f64,
    b: *const f64,
    width: usize,
    height: usize,
    channels: usize,
    peak: f64,
    out: *mut f64,
) -> SpadStatus {
    guard(|| {
        non_null(out, "out")?;
        let (va, vb) = views(a, b, width, height, channels)?;
        *out = ssim(va, vb, peak)?;
        Ok(())
    })
}
