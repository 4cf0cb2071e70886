//! End-to-end command tests against the real binary: exit statuses, report
//! shapes, checkpoint contents and resume equivalence.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_razn")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_spec(dir: &Path, finest: usize, tile: usize) -> PathBuf {
    let path = dir.join("spec.toml");
    std::fs::write(
        &path,
        format!("seed = 7\nfinest_dim = {finest}\nlevels = 3\nzoom_rate = 2\ntile_size = {tile}\n"),
    )
    .unwrap();
    path
}

/// Tiny nets keep these tests fast; the grid still has 64 patches.
fn write_tiny_config(dir: &Path) -> PathBuf {
    let path = dir.join("tiny.toml");
    std::fs::write(
        &path,
        r#"
[run]
batch_size = 2
checkpoint_interval = 5

[seg_net]
input_size = 32
widths = [4, 8, 8, 8]
blocks = [1, 1, 1, 1]

[policy_net]
input_size = 32
widths = [4, 4, 8, 8]
strides = [1, 2, 2, 1]
"#,
    )
    .unwrap();
    path
}

fn generate_data(dir: &Path) -> PathBuf {
    let spec = write_spec(dir, 1024, 128);
    let data = dir.join("data");
    let out = run(&[
        "generate",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    data
}

#[test]
fn generate_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_data(dir.path());

    // same directory again without --force
    let spec = dir.path().join("spec.toml");
    let again = run(&[
        "generate",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
    ]);
    assert_eq!(code(&again), 3);

    let forced = run(&[
        "generate",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
        "--force",
    ]);
    assert_eq!(code(&forced), 0);

    // indivisible dims are a configuration error
    let bad_spec = dir.path().join("bad.toml");
    std::fs::write(&bad_spec, "seed = 1\nfinest_dim = 1000\nlevels = 3\n").unwrap();
    let bad = run(&[
        "generate",
        "--spec",
        bad_spec.to_str().unwrap(),
        "--out",
        dir.path().join("nope").to_str().unwrap(),
    ]);
    assert_eq!(code(&bad), 2);

    // syntax errors carry a line anchor
    let syn_spec = dir.path().join("syn.toml");
    std::fs::write(&syn_spec, "seed = 1\nfinest_dimz = 512\n").unwrap();
    let syn = run(&[
        "generate",
        "--spec",
        syn_spec.to_str().unwrap(),
        "--out",
        dir.path().join("nope2").to_str().unwrap(),
    ]);
    assert_eq!(code(&syn), 2);
    assert!(String::from_utf8_lossy(&syn.stderr).contains("line"));
}

#[test]
fn baseline_smoke_run_writes_log_and_single_store() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_data(dir.path());
    let cfg = write_tiny_config(dir.path());
    let out_dir = dir.path().join("run");

    let out = run(&[
        "train",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--baseline",
        "scale1",
        "--steps",
        "10",
        "--seed",
        "3",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    // resolved config echoed before work
    assert!(out_dir.join("config.resolved.toml").exists());

    // parsable log with one line per step
    let log = std::fs::read_to_string(out_dir.join("train.log")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines.len(), 10);
    for (i, line) in lines.iter().enumerate() {
        assert!(line.starts_with(&format!("step={}", i + 1)), "line: {line}");
        assert!(line.contains("loss=") && line.contains("lr="), "line: {line}");
    }

    // baseline checkpoints hold exactly one store, no policy
    let (_, stores) =
        razn_autodiff::read_checkpoint(&out_dir.join("ckpt_final.rckpt")).unwrap();
    let names: Vec<&str> = stores.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["seg"]);
}

#[test]
fn resume_continues_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_data(dir.path());
    let cfg = write_tiny_config(dir.path());

    let full_dir = dir.path().join("full");
    let out = run(&[
        "train",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        full_dir.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--steps",
        "8",
        "--seed",
        "11",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let part_dir = dir.path().join("part");
    let out = run(&[
        "train",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        part_dir.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--steps",
        "5",
        "--seed",
        "11",
    ]);
    assert_eq!(code(&out), 0);

    let resumed_dir = dir.path().join("resumed");
    let out = run(&[
        "train",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        resumed_dir.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--steps",
        "8",
        "--seed",
        "11",
        "--resume",
        part_dir.join("ckpt_final.rckpt").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let full = std::fs::read(full_dir.join("ckpt_final.rckpt")).unwrap();
    let resumed = std::fs::read(resumed_dir.join("ckpt_final.rckpt")).unwrap();
    assert_eq!(full, resumed, "resumed training diverged from uninterrupted run");
}

#[test]
fn mismatched_resume_config_is_status_5() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_data(dir.path());
    let cfg = write_tiny_config(dir.path());

    let out_dir = dir.path().join("run");
    let out = run(&[
        "train",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--steps",
        "3",
        "--seed",
        "2",
    ]);
    assert_eq!(code(&out), 0);

    // resume under the desk preset (different net widths)
    let out = run(&[
        "train",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        dir.path().join("run2").to_str().unwrap(),
        "--steps",
        "6",
        "--seed",
        "2",
        "--resume",
        out_dir.join("ckpt_final.rckpt").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 5, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn eval_and_bench_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_data(dir.path());
    let cfg = write_tiny_config(dir.path());
    let run_dir = dir.path().join("run");

    let out = run(&[
        "train",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--steps",
        "6",
        "--seed",
        "4",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let ckpt = run_dir.join("ckpt_final.rckpt");

    let eval_dir = dir.path().join("eval");
    let out = run(&[
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
        "--split",
        "eval",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(eval_dir.join("eval_report.txt")).unwrap();
    for key in [
        "miou = ",
        "weighted_iou = ",
        "iou.non_carcinoma = ",
        "iou.carcinoma = ",
        "relative_time.mean = ",
    ] {
        assert!(report.contains(key), "missing `{key}` in:\n{report}");
    }

    // bench default patch count is 100; forced break costs exactly 1+ratio
    let bench_dir = dir.path().join("bench");
    let out = run(&[
        "bench",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        bench_dir.to_str().unwrap(),
        "--policy",
        "force-break",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(bench_dir.join("bench_report.txt")).unwrap();
    let get = |key: &str| -> f64 {
        report
            .lines()
            .find(|l| l.starts_with(key))
            .and_then(|l| l.split(" = ").nth(1))
            .and_then(|v| v.parse().ok())
            .unwrap_or_else(|| panic!("missing {key} in:\n{report}"))
    };
    assert_eq!(get("patches") as usize, 100);
    let ratio = get("policy_ratio");
    assert!((get("relative_time.mean") - (1.0 + ratio)).abs() < 1e-9);
    assert_eq!(get("relative_time.std"), 0.0);
    let trace = std::fs::read_to_string(bench_dir.join("trace.txt")).unwrap();
    assert_eq!(trace.lines().count(), 101); // header + one line per patch
    assert!(report.contains("wall_clock_ms.mean = "));

    // masks are emitted as single-channel rasters on request
    let eval_masks = dir.path().join("eval-masks");
    let out = run(&[
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        eval_masks.to_str().unwrap(),
        "--split",
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--save-masks",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let masks: Vec<_> = std::fs::read_dir(eval_masks.join("masks"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert!(!masks.is_empty());
    let decoder = png::Decoder::new(std::io::BufReader::new(
        std::fs::File::open(&masks[0]).unwrap(),
    ));
    let reader = decoder.read_info().unwrap();
    assert_eq!(reader.info().color_type, png::ColorType::Grayscale);
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_data(dir.path());
    let cfg = write_tiny_config(dir.path());

    let mut ckpts = Vec::new();
    for workers in ["1", "2"] {
        let out_dir = dir.path().join(format!("run-w{workers}"));
        let out = run(&[
            "train",
            "--dataset",
            data.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
            "--steps",
            "6",
            "--seed",
            "12",
            "--workers",
            workers,
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
        ckpts.push(std::fs::read(out_dir.join("ckpt_final.rckpt")).unwrap());
    }
    assert_eq!(ckpts[0], ckpts[1], "worker count changed training bytes");
}
