//! The shipped configuration files are the presets.

use std::path::PathBuf;

use spruce::config::SimConfig;
use spruce::diagnostics::solve_oracle;
use spruce::presets;

fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn preset_files_match_presets() {
    for name in presets::NAMES {
        let loaded = SimConfig::load(&config_dir().join(format!("{name}.toml"))).unwrap();
        assert_eq!(loaded, presets::by_name(name).unwrap(), "{name}");
    }
}

#[test]
fn every_shipped_config_has_an_oracle() {
    for entry in std::fs::read_dir(config_dir()).unwrap() {
        let path = entry.unwrap().path();
        let config = SimConfig::load(&path).unwrap();
        let oracle = solve_oracle(&config).unwrap();
        assert_eq!(oracle.arms.len(), config.k(), "{}", path.display());
    }
}

#[test]
fn beta_arms_discretize() {
    let config = SimConfig::load(&config_dir().join("beta.toml")).unwrap();
    let oracle = solve_oracle(&config).unwrap();
    // Beta(4, 2) has E[log Y] = ψ(4) − ψ(6) = −9/20, so going all in on
    // Y/μ₀ grows at log 2 − 0.45; the 2000-atom rule is close to that.
    assert_eq!(oracle.arms[0].portfolio, vec![0.0, 1.0]);
    assert!((oracle.arms[0].growth - (2f64.ln() - 0.45)).abs() < 1e-3);
    assert_eq!(oracle.arms[1].growth, 0.0);
    assert_eq!(oracle.best_arm, 0);
}
