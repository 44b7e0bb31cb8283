#![allow(dead_code)]

use ghg_nowcast::nowcast::ConfigOverrides;
use ghg_nowcast::PipelineConfig;
use std::path::{Path, PathBuf};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// The committed fixture config, writing to `out`.
pub fn fixture_config(out: &Path) -> PipelineConfig {
    let overrides = ConfigOverrides {
        output_dir: Some(out.to_path_buf()),
        ..Default::default()
    };
    PipelineConfig::load_with(&fixture_dir().join("config.toml"), &overrides).expect("fixture config")
}

/// A cheaper variant of the fixture config for tests that do not need the
/// full study.
pub fn quick_config(out: &Path) -> PipelineConfig {
    let mut c = fixture_config(out);
    c.simulations = 4;
    c.candidates = 3;
    c.hyperparameter_space.n_trees = (20, 29);
    c
}

/// Every file under `root`, as sorted relative paths.
pub fn tree_files(root: &Path) -> Vec<PathBuf> {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<PathBuf>) {
        for entry in std::fs::read_dir(dir).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                out.push(path.strip_prefix(root).expect("under root").to_path_buf());
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort();
    out
}

/// First difference between two output trees, if any.
pub fn tree_difference(a: &Path, b: &Path, skip: &[&str]) -> Option<String> {
    let keep = |p: &PathBuf| !skip.iter().any(|s| p == Path::new(s));
    let fa: Vec<PathBuf> = tree_files(a).into_iter().filter(keep).collect();
    let fb: Vec<PathBuf> = tree_files(b).into_iter().filter(keep).collect();
    if fa != fb {
        return Some(format!("file lists differ: {fa:?} vs {fb:?}"));
    }
    for f in fa {
        let x = std::fs::read(a.join(&f)).expect("readable");
        let y = std::fs::read(b.join(&f)).expect("readable");
        if x != y {
            return Some(format!("{} differs", f.display()));
        }
    }
    None
}
