use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use razn_core::{infer_patch, policy_cost_ratio, PolicyOverride, TrainState};
use razn_metrics::CostLedger;
use razn_pyramid::{PatchRef, PyramidDataset};

use crate::exit::CliError;

pub fn parse_policy_override(s: &str) -> Result<PolicyOverride, CliError> {
    match s {
        "learned" => Ok(PolicyOverride::Learned),
        "force-break" => Ok(PolicyOverride::ForceBreak),
        "force-zoom" => Ok(PolicyOverride::ForceZoom),
        other => Err(CliError::Config(format!(
            "unknown policy mode `{other}` (want learned, force-break or force-zoom)"
        ))),
    }
}

/// Times `n_patches` seeded-random coarse-level patches in cost units of one
/// segmentation pass and writes the action trace.
pub fn cmd_bench(
    checkpoint: &Path,
    dataset_dir: &Path,
    out_dir: &Path,
    n_patches: usize,
    policy_mode: &str,
    seed: u64,
) -> Result<(), CliError> {
    let overide = parse_policy_override(policy_mode)?;
    let ds = PyramidDataset::open(dataset_dir)?;
    let state = TrainState::load(checkpoint)?;
    if state.kind != razn_core::ModelKind::Razn {
        return Err(CliError::Mismatch(
            "bench drives the zoom model; baseline checkpoints always cost one pass".into(),
        ));
    }
    if n_patches == 0 {
        return Err(CliError::Config("need at least one patch".into()));
    }

    let patch_size = state.seg_net.cfg.input_size;
    let (lh, lw) = ds.level_dims(0);
    let rows = lh / patch_size;
    let cols = lw / patch_size;
    if rows == 0 || cols == 0 {
        return Err(CliError::Config(format!(
            "patch size {patch_size} does not fit level 0 ({lh}x{lw})"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reader = ds.reader();
    let mut ledger = CostLedger::new();
    let mut zoomed = 0usize;
    let mut wall_ms: Vec<f64> = Vec::with_capacity(n_patches);

    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Other(format!("create {}: {e}", out_dir.display())))?;
    let trace_path = out_dir.join("trace.txt");
    let mut trace = std::fs::File::create(&trace_path)
        .map_err(|e| CliError::Other(format!("create {}: {e}", trace_path.display())))?;
    trace.write_all(b"# level row col h w p_tilde action seg_units policy_units\n")?;

    for _ in 0..n_patches {
        let pick: u64 = rng.random();
        let row = (pick % rows as u64) as usize;
        let col = ((pick >> 32) % cols as u64) as usize;
        let patch = PatchRef::new(0, row * patch_size, col * patch_size, patch_size, patch_size);
        let t0 = std::time::Instant::now();
        let outcome = infer_patch(&state, &mut reader, &patch, overide)?;
        wall_ms.push(t0.elapsed().as_secs_f64() * 1000.0);

        let (p_tilde, action) = match outcome.trace.first() {
            Some(t) => (
                t.decision.p_tilde,
                match t.decision.action {
                    razn_core::Action::Zoom => "zoom",
                    razn_core::Action::Break => "break",
                },
            ),
            None => (0.0, "none"),
        };
        if action == "zoom" {
            zoomed += 1;
        }
        writeln!(
            trace,
            "{} {} {} {} {} {p_tilde:.6} {action} {} {}",
            patch.level,
            patch.row,
            patch.col,
            patch.h,
            patch.w,
            outcome.cost.total_seg(),
            outcome.cost.policy_units
        )?;
        ledger.push(outcome.cost);
    }

    let ratio = policy_cost_ratio(&state, patch_size);
    let (mean, std) = ledger.relative_time(ratio);
    // wall clock is informative only: the analytic units are the metric
    let wc_mean = wall_ms.iter().sum::<f64>() / wall_ms.len() as f64;
    let wc_var =
        wall_ms.iter().map(|t| (t - wc_mean) * (t - wc_mean)).sum::<f64>() / wall_ms.len() as f64;
    let report = format!(
        "# bench report\nmodel = {}\npatches = {}\npolicy_mode = {policy_mode}\npolicy_ratio = {ratio:.6}\nrelative_time.mean = {mean:.6}\nrelative_time.std = {std:.6}\nzoom_fraction = {:.4}\nwall_clock_ms.mean = {wc_mean:.3}\nwall_clock_ms.std = {:.3}\n",
        state.kind.as_str(),
        n_patches,
        zoomed as f64 / n_patches as f64,
        wc_var.max(0.0).sqrt(),
    );
    let report_path = out_dir.join("bench_report.txt");
    std::fs::write(&report_path, &report)
        .map_err(|e| CliError::Other(format!("write {}: {e}", report_path.display())))?;
    print!("{report}");
    Ok(())
}
