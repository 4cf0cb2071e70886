use std::io::Write;
use std::path::Path;

use razn_core::{
    load_batch, train_step, train_step_baseline, GridSampler, ModelKind, TrainOptions, TrainState,
};
use razn_pyramid::PyramidDataset;

use crate::config::RunConfig;
use crate::exit::CliError;

pub fn cmd_train(
    cfg: &RunConfig,
    dataset_dir: &Path,
    out_dir: &Path,
    resume: Option<&Path>,
) -> Result<(), CliError> {
    cfg.validate()?;
    cfg.echo_into(out_dir)?;

    let ds = PyramidDataset::open(dataset_dir)?;
    let kind = cfg.model_kind();
    let patch_size = cfg.seg_net.input_size;
    let sampler = GridSampler::build(
        &ds,
        patch_size,
        cfg.sampler.eval_modulus,
        cfg.sampler.oversample_abnormal,
    )?;

    let mut state = match resume {
        Some(ckpt) => {
            let state = TrainState::load(ckpt)?;
            state.check_compatible(&cfg.seg_net, Some(&cfg.policy_net))?;
            if state.kind != kind {
                return Err(CliError::Mismatch(format!(
                    "checkpoint trains `{}`, configuration asks for `{}`",
                    state.kind.as_str(),
                    kind.as_str()
                )));
            }
            state
        }
        None => TrainState::with_policy_schedule(
            kind,
            cfg.run.seed,
            cfg.seg_net.clone(),
            cfg.policy_net.clone(),
            cfg.zoom_config(),
            cfg.schedule(),
            cfg.policy_schedule(),
            cfg.adam(),
        )?,
    };

    if state.step >= cfg.run.steps {
        return Err(CliError::Config(format!(
            "checkpoint is already at step {} >= requested {}",
            state.step, cfg.run.steps
        )));
    }

    let log_path = out_dir.join("train.log");
    let mut log = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)
        .map_err(|e| CliError::Other(format!("open {}: {e}", log_path.display())))?;

    let mut reader = ds.reader();
    let with_children = kind == ModelKind::Razn;
    let rate = state.zoom.zoom_rate;

    while state.step < cfg.run.steps {
        let refs = sampler.draw_batch(&mut state.rng, cfg.run.batch_size);
        let batch = load_batch(&mut reader, &refs, with_children, rate)?;

        let step_result = if with_children {
            train_step(&mut state, &batch, TrainOptions::default())
        } else {
            train_step_baseline(&mut state, &batch, None)
        };

        let report = match step_result {
            Ok(r) => r,
            Err(err) => {
                // keep the partial progress for post-mortem work
                let partial = out_dir.join("ckpt_partial.rckpt");
                let _ = state.save(&partial);
                return Err(err.into());
            }
        };

        let line = if with_children {
            format!(
                "step={} j0={:.6} j1={:.6} zoom_frac={:.4} r_mean={:.6} lr={:.6}\n",
                report.step,
                report.j0_mean,
                report.j1_mean,
                report.zoom_fraction,
                report.reward_mean,
                report.lr
            )
        } else {
            format!(
                "step={} loss={:.6} lr={:.6}\n",
                report.step, report.loss_mean, report.lr
            )
        };
        log.write_all(line.as_bytes())
            .map_err(|e| CliError::Other(format!("write {}: {e}", log_path.display())))?;

        if cfg.run.checkpoint_interval > 0 && state.step % cfg.run.checkpoint_interval == 0 {
            let path = out_dir.join(format!("ckpt_step{}.rckpt", state.step));
            state.save(&path)?;
            println!("step {} of {} (checkpoint written)", state.step, cfg.run.steps);
        }
    }

    let final_path = out_dir.join("ckpt_final.rckpt");
    state.save(&final_path)?;
    println!(
        "training finished at step {}; checkpoint {}",
        state.step,
        final_path.display()
    );
    Ok(())
}
