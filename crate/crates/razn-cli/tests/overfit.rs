//! Overfitting sanity run: on a small dataset whose classes are all
//! separable at the coarse level, a mildly-degraded baseline trained past
//! convergence must score near-perfect mean IOU on its own training split.

use std::process::Command;

use razn_synthwsi::{generate, ClassTexture, SynthSpec};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_razn")
}

#[test]
fn train_split_overfit_reaches_high_miou() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");

    // every class coarse-visible: distinct radii/densities, no displacement
    // trickery, crisp annotations
    let mut spec = SynthSpec {
        seed: 21,
        finest_dim: 1024,
        levels: 2,
        zoom_rate: 2,
        tile_size: 128,
        label_jitter_px: 0.0,
        ..SynthSpec::default()
    };
    spec.texture.in_situ = ClassTexture::random(6.0, 1.6);
    spec.texture.invasive = ClassTexture::random(1.0, 4.0);
    generate(&spec, &data).unwrap();

    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        "[run]\nbatch_size = 4\n\n[sampler]\noversample_abnormal = 0.6\n\n[seg_net]\ninput_size = 64\nwidths = [8,16,16,16]\nblocks = [1,1,1,1]\n",
    )
    .unwrap();

    let run_dir = dir.path().join("run");
    let out = Command::new(bin())
        .args([
            "train",
            "--dataset",
            data.to_str().unwrap(),
            "--out",
            run_dir.to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
            "--baseline",
            "scale2",
            "--steps",
            "700",
            "--seed",
            "3",
            "--checkpoint-interval",
            "0",
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "train: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let eval_dir = dir.path().join("eval");
    let out = Command::new(bin())
        .args([
            "eval",
            "--checkpoint",
            run_dir.join("ckpt_final.rckpt").to_str().unwrap(),
            "--dataset",
            data.to_str().unwrap(),
            "--out",
            eval_dir.to_str().unwrap(),
            "--split",
            "train",
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "eval: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = std::fs::read_to_string(eval_dir.join("eval_report.txt")).unwrap();
    let miou: f64 = report
        .lines()
        .find(|l| l.starts_with("miou = "))
        .and_then(|l| l.split(" = ").nth(1))
        .and_then(|v| v.parse().ok())
        .unwrap();
    assert!(miou > 0.9, "train-split miou {miou} (report:\n{report})");
}
