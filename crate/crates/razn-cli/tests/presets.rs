//! The shipped example configs stay in lock-step with the built-in presets.

use std::path::Path;

use razn_cli::config::RunConfig;

fn repo_config(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

#[test]
fn desk_config_file_matches_builtin_preset() {
    let from_file = RunConfig::load_file(&repo_config("desk.toml"), RunConfig::desk()).unwrap();
    assert_eq!(from_file.to_toml(), RunConfig::desk().to_toml());
}

#[test]
fn paper_config_file_matches_builtin_preset() {
    let from_file = RunConfig::load_file(&repo_config("paper.toml"), RunConfig::desk()).unwrap();
    assert_eq!(from_file.to_toml(), RunConfig::paper().to_toml());
}

#[test]
fn default_generator_spec_matches_builtin_defaults() {
    let text = std::fs::read_to_string(repo_config("synth-default.toml")).unwrap();
    let spec: razn_synthwsi::SynthSpec = toml::from_str(&text).unwrap();
    assert_eq!(spec, razn_synthwsi::SynthSpec::default());
}
