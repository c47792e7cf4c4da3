#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use magl_core::datagen::{sample_data, GraphKind, GroundTruth};

/// Writes one price CSV per node whose log returns are samples from a
/// planted multi-attribute model. Returns the file paths and the truth.
pub fn price_fixture(dir: &Path, p: usize, m: usize, n: usize, seed: u64) -> (Vec<PathBuf>, GroundTruth) {
    let truth = GroundTruth::generate(GraphKind::Er { p_er: 0.3 }, p, m, seed).unwrap();
    let x = sample_data(&truth, n, seed + 1).unwrap();
    let mut paths = Vec::new();
    for k in 0..p {
        let mut text = String::from("Date");
        for f in 0..m {
            write!(text, ",f{f}").unwrap();
        }
        text.push('\n');
        let mut level = vec![100.0f64; m];
        for t in 0..=n {
            if t > 0 {
                for (f, l) in level.iter_mut().enumerate() {
                    *l *= (0.01 * x[(t - 1, k * m + f)]).exp();
                }
            }
            write!(text, "day{t:05}").unwrap();
            for l in &level {
                write!(text, ",{l:.12}").unwrap();
            }
            text.push('\n');
        }
        let path = dir.join(format!("node{k}.csv"));
        std::fs::write(&path, text).unwrap();
        paths.push(path);
    }
    (paths, truth)
}

pub fn features(m: usize) -> Vec<String> {
    (0..m).map(|f| format!("f{f}")).collect()
}
