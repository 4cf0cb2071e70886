use std::io::Write;
use std::path::Path;

use razn_core::{
    evaluate, infer_patch, infer_patch_baseline, EvalOutcome, GridSampler, ModelKind,
    PolicyOverride, Split, TrainState,
};
use razn_pyramid::PyramidDataset;

use crate::config::RunConfig;
use crate::exit::CliError;

pub fn format_eval_report(
    model: &str,
    dataset: &Path,
    split: &str,
    outcome: &razn_core::EvalReport,
) -> String {
    let mut s = String::new();
    s.push_str("# evaluation report\n");
    s.push_str(&format!("model = {model}\n"));
    s.push_str(&format!("dataset = {}\n", dataset.display()));
    s.push_str(&format!("split = {split}\n"));
    s.push_str(&format!("patches = {}\n", outcome.patches));
    for (c, iou) in outcome.per_class_iou.iter().enumerate() {
        match iou {
            Some(v) => s.push_str(&format!("iou.class{c} = {v:.4}\n")),
            None => s.push_str(&format!("iou.class{c} = n/a\n")),
        }
    }
    s.push_str(&format!("iou.non_carcinoma = {:.4}\n", outcome.non_carcinoma_iou));
    s.push_str(&format!("iou.carcinoma = {:.4}\n", outcome.carcinoma_iou));
    s.push_str(&format!("miou = {:.4}\n", outcome.miou));
    s.push_str(&format!("weighted_iou = {:.4}\n", outcome.weighted_iou));
    s.push_str(&format!("relative_time.mean = {:.4}\n", outcome.relative_time_mean));
    s.push_str(&format!("relative_time.std = {:.4}\n", outcome.relative_time_std));
    s.push_str(&format!("zoom_fraction = {:.4}\n", outcome.zoom_fraction));
    s.push_str(&format!("policy_ratio = {:.4}\n", outcome.policy_ratio));
    s.push('\n');
    s.push_str("model\tnon-carcinoma\tcarcinoma\tmiou\tweighted_iou\trel_time\n");
    s.push_str(&format!(
        "{model}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2} +/- {:.2}\n",
        outcome.non_carcinoma_iou,
        outcome.carcinoma_iou,
        outcome.miou,
        outcome.weighted_iou,
        outcome.relative_time_mean,
        outcome.relative_time_std,
    ));
    s
}

pub fn write_trace(path: &Path, outcome: &EvalOutcome) -> Result<(), CliError> {
    let mut f = std::fs::File::create(path)
        .map_err(|e| CliError::Other(format!("create {}: {e}", path.display())))?;
    f.write_all(b"# level row col h w p_tilde action\n")?;
    for t in &outcome.trace {
        let action = match t.decision.action {
            razn_core::Action::Zoom => "zoom",
            razn_core::Action::Break => "break",
        };
        writeln!(
            f,
            "{} {} {} {} {} {:.6} {action}",
            t.patch.level, t.patch.row, t.patch.col, t.patch.h, t.patch.w, t.decision.p_tilde
        )?;
    }
    Ok(())
}

/// Writes one single-channel index raster per patch, named by the patch's
/// coarse-grid position, at the finest level the inference touched.
fn save_masks(
    state: &TrainState,
    ds: &PyramidDataset,
    refs: &[razn_pyramid::PatchRef],
    dir: &Path,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Other(format!("create {}: {e}", dir.display())))?;
    let mut reader = ds.reader();
    for patch in refs {
        let outcome = match state.kind {
            ModelKind::Razn => infer_patch(state, &mut reader, patch, PolicyOverride::Learned)?,
            _ => infer_patch_baseline(state, &mut reader, patch)?,
        };
        let path = dir.join(format!(
            "pred_l{}_r{}_c{}.png",
            outcome.level, patch.row, patch.col
        ));
        let file = std::fs::File::create(&path)
            .map_err(|e| CliError::Other(format!("create {}: {e}", path.display())))?;
        let mut enc = png::Encoder::new(
            std::io::BufWriter::new(file),
            outcome.mask.w as u32,
            outcome.mask.h as u32,
        );
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        enc.write_header()
            .and_then(|mut w| w.write_image_data(&outcome.mask.data))
            .map_err(|e| CliError::Other(format!("write {}: {e}", path.display())))?;
    }
    Ok(())
}

pub fn cmd_eval(
    checkpoint: &Path,
    dataset_dir: &Path,
    out_dir: &Path,
    split_name: &str,
    cfg: &RunConfig,
    emit_masks: bool,
) -> Result<(), CliError> {
    let split = Split::parse(split_name)
        .ok_or_else(|| CliError::Config(format!("unknown split `{split_name}`")))?;
    let ds = PyramidDataset::open(dataset_dir)?;
    let state = TrainState::load(checkpoint)?;

    let patch_size = state.seg_net.cfg.input_size;
    let sampler = GridSampler::build(&ds, patch_size, cfg.sampler.eval_modulus, 0.0)?;
    let refs = sampler.refs_for(split);
    if refs.is_empty() {
        return Err(CliError::Config(format!("split `{split_name}` has no patches")));
    }

    let outcome = evaluate(&state, &ds, &refs, PolicyOverride::Learned)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Other(format!("create {}: {e}", out_dir.display())))?;

    let report = format_eval_report(state.kind.as_str(), dataset_dir, split_name, &outcome.report);
    let report_path = out_dir.join("eval_report.txt");
    std::fs::write(&report_path, &report)
        .map_err(|e| CliError::Other(format!("write {}: {e}", report_path.display())))?;
    write_trace(&out_dir.join("eval_trace.txt"), &outcome)?;
    if emit_masks {
        save_masks(&state, &ds, &refs, &out_dir.join("masks"))?;
    }
    print!("{report}");
    Ok(())
}
