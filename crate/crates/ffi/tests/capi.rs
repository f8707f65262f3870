use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use spadsim_ffi::*;

fn last_error() -> String {
    let p = spadsim_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn gradient(w: usize, h: usize) -> Vec<f32> {
    (0..w * h)
        .flat_map(|i| {
            let v = 0.05 + i as f32 / (w * h) as f32;
            [v, 0.5 * v, 2.0 * v]
        })
        .collect()
}

unsafe fn new_image(w: usize, h: usize, rgb: &[f32]) -> *mut SpadHdrImage {
    let mut img = ptr::null_mut();
    assert_eq!(spadsim_hdr_new(w, h, rgb.as_ptr(), &mut img), SpadStatus::Ok);
    img
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(spadsim_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn moments_and_inversion() {
    let (q, t, tau) = (1.0, 1e-3, 150e-9);
    let n = spadsim_expected_count(1e6, q, t, tau);
    assert!((n - 869.565).abs() < 1e-3);
    let v = spadsim_count_variance(1e6, q, t, tau);
    assert!((v - 869.565 / 1.15f64.powi(2)).abs() < 1e-3);
    assert!((spadsim_snr(1e6, q, t, tau) - n.sqrt()).abs() < 1e-12);

    let (mut flux, mut sat) = (0.0, true);
    let st = unsafe { spadsim_invert_count(n, q, t, tau, &mut flux, &mut sat) };
    assert_eq!(st, SpadStatus::Ok);
    assert!(((flux - 1e6) / 1e6).abs() < 1e-12);
    assert!(!sat);
    let st = unsafe { spadsim_invert_count(7000.0, q, t, tau, &mut flux, &mut sat) };
    assert_eq!(st, SpadStatus::Ok);
    assert!(sat && flux.is_finite());
    let st = unsafe { spadsim_invert_count(1.0, q, t, tau, ptr::null_mut(), &mut sat) };
    assert_eq!(st, SpadStatus::NullPointer);
    assert!(last_error().contains("flux"));
}

#[test]
fn hdr_encode_decode_and_files() {
    unsafe {
        let (w, h) = (40, 3);
        let rgb = gradient(w, h);
        let img = new_image(w, h, &rgb);

        let (mut data, mut len) = (ptr::null_mut(), 0usize);
        assert_eq!(spadsim_hdr_encode(img, &mut data, &mut len), SpadStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(spadsim_hdr_decode(data, len, &mut back), SpadStatus::Ok);
        spadsim_bytes_free(data, len);

        let (mut bw, mut bh) = (0, 0);
        assert_eq!(spadsim_hdr_dimensions(back, &mut bw, &mut bh), SpadStatus::Ok);
        assert_eq!((bw, bh), (w, h));
        let px = std::slice::from_raw_parts(spadsim_hdr_pixels(back), w * h * 3);
        for (i, (a, b)) in rgb.iter().zip(px).enumerate() {
            let m = rgb[i / 3 * 3..i / 3 * 3 + 3].iter().cloned().fold(0.0, f32::max);
            assert!((a - b).abs() <= m / 128.0, "{i}: {a} vs {b}");
        }

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("x.hdr").to_str().unwrap()).unwrap();
        assert_eq!(spadsim_hdr_write(back, path.as_ptr()), SpadStatus::Ok);
        let mut read = ptr::null_mut();
        assert_eq!(spadsim_hdr_read(path.as_ptr(), &mut read), SpadStatus::Ok);
        let rp = std::slice::from_raw_parts(spadsim_hdr_pixels(read), w * h * 3);
        assert_eq!(rp, px);

        spadsim_hdr_free(img);
        spadsim_hdr_free(back);
        spadsim_hdr_free(read);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut img = ptr::null_mut();
        let missing = CString::new("/definitely/not/here.hdr").unwrap();
        assert_eq!(spadsim_hdr_read(missing.as_ptr(), &mut img), SpadStatus::Io);
        assert!(img.is_null());

        let junk = b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n+Y 2 +X 2\n";
        assert_eq!(spadsim_hdr_decode(junk.as_ptr(), junk.len(), &mut img), SpadStatus::Format);
        assert!(last_error().contains("orientation"));

        assert_eq!(
            spadsim_hdr_read(ptr::null(), &mut img),
            SpadStatus::NullPointer
        );
        let bad = [f32::NAN, 0.0, 0.0];
        assert_eq!(spadsim_hdr_new(1, 1, bad.as_ptr(), &mut img), SpadStatus::InvalidArgument);

        // Success clears the error slot.
        let _ = new_image(1, 1, &[1.0, 1.0, 1.0]);
        assert!(spadsim_last_error().is_null());

        spadsim_hdr_free(ptr::null_mut());
        spadsim_flux_free(ptr::null_mut());
        spadsim_frame_free(ptr::null_mut());
        spadsim_bytes_free(ptr::null_mut(), 0);
    }
}

#[test]
fn plan_simulate_average_invert() {
    unsafe {
        let (w, h) = (64, 32);
        let img = new_image(w, h, &vec![1.0; w * h * 3]);
        let mut config = spadsim_config_default();
        let targets = spadsim_exposure_targets_default();
        let mut plan = SpadExposurePlan::default();
        assert_eq!(spadsim_plan_exposure(img, &config, &targets, &mut plan), SpadStatus::Ok);
        let n = spadsim_expected_count(
            plan.median_flux,
            config.quantum_efficiency,
            plan.exposure_time,
            config.dead_time,
        );
        assert!(((n - targets.target_count) / targets.target_count).abs() < 1e-9);

        let mut flux = ptr::null_mut();
        assert_eq!(spadsim_flux_from_image(img, plan.flux_scale, &mut flux), SpadStatus::Ok);
        config.exposure_time = plan.exposure_time;
        config.seed = 11;

        let mut frames = Vec::new();
        for k in 0..4 {
            let mut f = ptr::null_mut();
            assert_eq!(spadsim_simulate_frame(flux, &config, k, &mut f), SpadStatus::Ok);
            frames.push(f as *const SpadCountFrame);
        }
        let mut again = ptr::null_mut();
        assert_eq!(spadsim_simulate_frame(flux, &config, 0, &mut again), SpadStatus::Ok);
        let a = std::slice::from_raw_parts(spadsim_frame_counts(frames[0]), w * h);
        let b = std::slice::from_raw_parts(spadsim_frame_counts(again), w * h);
        assert_eq!(a, b);

        let mut avg = ptr::null_mut();
        assert_eq!(spadsim_average_frames(frames.as_ptr(), 4, &mut avg), SpadStatus::Ok);
        let counts = std::slice::from_raw_parts(spadsim_frame_counts(avg), w * h);
        let mean = counts.iter().sum::<f64>() / counts.len() as f64;
        assert!((mean - n).abs() < 0.01 * n);

        let (mut fw, mut fh) = (0, 0);
        assert_eq!(spadsim_frame_dimensions(avg, &mut fw, &mut fh), SpadStatus::Ok);
        assert_eq!((fw, fh), (w, h));

        let (mut est, mut sat) = (ptr::null_mut(), usize::MAX);
        assert_eq!(spadsim_invert_frame(avg, &config, &mut est, &mut sat), SpadStatus::Ok);
        assert_eq!(sat, 0);
        let phi = std::slice::from_raw_parts(spadsim_flux_values(est), w * h);
        let mean_phi = phi.iter().sum::<f64>() / phi.len() as f64;
        assert!((mean_phi / plan.median_flux - 1.0).abs() < 0.02);

        assert_eq!(
            spadsim_average_frames(frames.as_ptr(), 0, &mut avg),
            SpadStatus::InvalidArgument
        );
        config.quantum_efficiency = 2.0;
        assert_eq!(
            spadsim_simulate_frame(flux, &config, 0, &mut again),
            SpadStatus::InvalidArgument
        );

        for f in frames {
            spadsim_frame_free(f as *mut _);
        }
        spadsim_frame_free(again);
        spadsim_frame_free(avg);
        spadsim_flux_free(flux);
        spadsim_flux_free(est);
        spadsim_hdr_free(img);
    }
}

#[test]
fn metrics_on_buffers() {
    let a: Vec<f64> = vec![0.2; 16 * 16];
    let b: Vec<f64> = a.iter().map(|v| v + 0.5).collect();
    let mut out = 0.0;
    unsafe {
        assert_eq!(spadsim_psnr(a.as_ptr(), b.as_ptr(), 16, 16, 1, 1.0, &mut out), SpadStatus::Ok);
        assert!((out - 6.0206).abs() < 1e-4);
        assert_eq!(spadsim_ssim(a.as_ptr(), a.as_ptr(), 16, 16, 1, 1.0, &mut out), SpadStatus::Ok);
        assert_eq!(out, 1.0);
        assert_eq!(
            spadsim_ssim(a.as_ptr(), a.as_ptr(), 4, 4, 1, 1.0, &mut out),
            SpadStatus::InvalidArgument
        );
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("include/spadsim.h"),
    )
    .unwrap();
    let source = include_str!("../src/lib.rs");
    let exported: Vec<&str> = source
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exported.len() > 20);
    for name in exported {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct SpadHdrImage SpadHdrImage;"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"spadsim.h\"\nint main(void) { SpadDetectorConfig c = spadsim_config_default(); (void)c; return 0; }\n",
    )
    .unwrap();
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if std::process::Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc);
        }
    }
    Err(())
}
