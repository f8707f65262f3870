mod common;

use std::path::Path;
use std::process::{Command, Output};

use spadsim::hdr_io::write_hdr_file;
use spadsim::pipeline::{DatasetManifest, MANIFEST_FILE};

fn spadsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spadsim"))
        .args(args)
        .env_remove("SPADSIM_THREADS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&spadsim(&[])), 1);
    assert_eq!(code(&spadsim(&["frobnicate"])), 1);
    assert_eq!(code(&spadsim(&["dataset", "--resolution", "wide"])), 1);
    assert_eq!(
        code(&spadsim(&[
            "simulate",
            "--input",
            "x.hdr",
            "--sampler",
            "magic"
        ])),
        1
    );
    let o = spadsim(&[
        "export",
        "--manifest",
        "m",
        "--stage",
        "denoise",
        "--out",
        "o",
    ]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    for stage in ["colorization", "hdr_reconstruction", "single_stage"] {
        assert!(err.contains(stage), "{err}");
    }
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(code(&spadsim(&["--help"])), 0);
    assert_eq!(code(&spadsim(&["--version"])), 0);
    assert_eq!(code(&spadsim(&["dataset", "--help"])), 0);
}

#[test]
fn missing_input_exits_2() {
    let o = spadsim(&["simulate", "--input", "/no/such/file.hdr"]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&spadsim(&["inspect", "/no/such/file.hdr"])), 2);
}

#[test]
fn validation_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    common::write_scenes(&input, 1, 32, 16);
    let out = dir.path().join("out");
    let o = spadsim(&[
        "dataset",
        "--input",
        s(&input),
        "--out",
        s(&out),
        "--q",
        "1.5",
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[spad]\nquantum = 0.3\n").unwrap();
    let o = spadsim(&["dataset", "--config", s(&cfg), "--input", s(&input)]);
    assert_eq!(code(&o), 3);

    let garbage = dir.path().join("garbage.hdr");
    std::fs::write(
        &garbage,
        b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n+X 4 -Y 4\n",
    )
    .unwrap();
    assert_eq!(code(&spadsim(&["inspect", s(&garbage)])), 3);
}

#[test]
fn simulate_writes_four_files_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("room.hdr");
    write_hdr_file(&src, &common::scene(48, 24, 2)).unwrap();
    let out = dir.path().join("out");
    let o = spadsim(&[
        "simulate",
        "--input",
        s(&src),
        "--out",
        s(&out),
        "--frames",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(
        text.contains("exposure") && text.contains("saturated"),
        "{text}"
    );
    let files = common::snapshot(&out);
    assert_eq!(
        files.len(),
        4,
        "{:?}",
        files.iter().map(|f| &f.0).collect::<Vec<_>>()
    );
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    common::write_scenes(&input, 2, 32, 16);
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "[pipeline]\ninput_dir = {:?}\noutput_dir = {:?}\nresolutions = [\"16x8\"]\n\n[spad]\nframes = [2, 3]\nseed = 5\n",
            s(&input),
            s(&dir.path().join("from_file"))
        ),
    )
    .unwrap();
    let out = dir.path().join("from_flags");
    let o = spadsim(&[
        "dataset",
        "--config",
        s(&cfg),
        "--out",
        s(&out),
        "--frames",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(!dir.path().join("from_file").exists());
    let m = DatasetManifest::read(out.join(MANIFEST_FILE)).unwrap();
    assert_eq!(m.entries.len(), 2);
    assert!(m.entries.iter().all(|e| e.id.ends_with("_16x8_k1")));
}

#[test]
fn thread_env_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    common::write_scenes(&input, 3, 64, 32);
    let mut snaps = Vec::new();
    for threads in ["1", "2"] {
        let out = dir.path().join(format!("out{threads}"));
        let o = Command::new(env!("CARGO_BIN_EXE_spadsim"))
            .args([
                "dataset",
                "--input",
                s(&input),
                "--out",
                s(&out),
                "--resolution",
                "32x16",
            ])
            .env("SPADSIM_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        snaps.push(common::snapshot(&out));
    }
    assert_eq!(snaps[0], snaps[1]);
}

#[test]
fn export_score_and_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    common::write_scenes(&input, 2, 64, 32);
    let out = dir.path().join("data");
    let o = spadsim(&[
        "dataset",
        "--input",
        s(&input),
        "--out",
        s(&out),
        "--resolution",
        "32x16",
        "--frames",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest = DatasetManifest::read(out.join(MANIFEST_FILE)).unwrap();

    let exported = dir.path().join("export");
    let o = spadsim(&[
        "export",
        "--manifest",
        s(&out),
        "--stage",
        "colorization",
        "--out",
        s(&exported),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(exported.join("colorization").is_dir());

    let pred = dir.path().join("pred");
    std::fs::create_dir_all(&pred).unwrap();
    for e in &manifest.entries {
        std::fs::copy(
            out.join(&e.files.color_hdr),
            pred.join(format!("{}.hdr", e.id)),
        )
        .unwrap();
    }
    let ext = dir.path().join("vdp.csv");
    let rows: String = manifest
        .entries
        .iter()
        .map(|e| format!("{},9.5\n", e.id))
        .collect();
    std::fs::write(&ext, format!("id,q\n{rows}")).unwrap();
    let manifest_file = out.join(MANIFEST_FILE);
    let ext_arg = format!("hdrvdp={}", s(&ext));
    let o = spadsim(&[
        "score",
        "--manifest",
        s(&manifest_file),
        "--pred",
        s(&pred),
        "--which",
        "hdr",
        "--external",
        &ext_arg,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(pred.join("scores_hdr.csv")).unwrap();
    assert!(
        csv.starts_with("id,psnr_db,ssim,log_psnr_db,hdrvdp\n"),
        "{csv}"
    );
    assert!(std::fs::read_to_string(pred.join("scores_hdr.json"))
        .unwrap()
        .contains("aggregates"));

    // LDR predictions are absent: incomplete scoring is a validation failure.
    let o = spadsim(&[
        "score",
        "--manifest",
        s(&out),
        "--pred",
        s(&pred),
        "--which",
        "ldr",
    ]);
    assert_eq!(code(&o), 3);

    let o = spadsim(&["inspect", s(&input.join("scene00.hdr"))]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("size: 64x32"));
}
