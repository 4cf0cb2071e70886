use std::path::Path;

use razn_pyramid::PyramidDataset;
use razn_synthwsi::{generate, output_occupied, SynthSpec};

use crate::exit::CliError;

pub fn cmd_generate(
    spec_path: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
    force: bool,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", spec_path.display())))?;
    let mut spec: SynthSpec = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", spec_path.display())))?;
    if let Some(seed) = seed_override {
        spec.seed = seed;
    }
    spec.validate()?;

    if out_dir.exists() && output_occupied(out_dir) {
        if !force {
            return Err(CliError::OverwriteRefused(format!(
                "{} already holds data (pass --force to replace it)",
                out_dir.display()
            )));
        }
        std::fs::remove_dir_all(out_dir)
            .map_err(|e| CliError::Other(format!("clear {}: {e}", out_dir.display())))?;
    }

    let ds = generate(&spec, out_dir)?;
    // re-open from disk to prove the written layout is self-consistent
    let reopened = PyramidDataset::open(out_dir)?;
    assert_eq!(reopened.levels(), ds.levels());

    println!(
        "generated pyramid: {} levels, coarsest {}x{}, seed {}",
        reopened.levels(),
        reopened.level_dims(0).0,
        reopened.level_dims(0).1,
        spec.seed,
    );
    Ok(())
}
