//! Experiment configuration, read from a flat TOML file.
//!
//! Every key is optional. Unknown keys are an error.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `graph` | `"er"` | `"er"` or `"ba"` |
//! | `p_er` | `0.05` | ER edge probability |
//! | `mean_degree` | `2.0` | BA mean degree (even) |
//! | `p`, `m` | `100`, `4` | nodes, attributes per node |
//! | `n_list` | `[200, 400, 800]` | sample sizes |
//! | `penalties` | all three | `"lasso"`, `"log-sum"`, `"scad"` |
//! | `runs` | `10` | runs per sample size |
//! | `seed` | `1` | master seed |
//! | `selection` | `["f1_oracle"]` | any of `"f1_oracle"`, `"bic"` |
//! | `alpha` | `0.05` | element/group balance |
//! | `grid_size` | `15` | λ grid points |
//! | `output_dir` | `"out"` | |
//! | `jobs` | `1` | worker threads |
//! | `penalty`, `lambda` | `"lasso"`, none | single-fit penalty |
//! | `epsilon`, `scad_a` | `1e-4`, `3.7` | penalty shape |
//! | `theta` | `0.0` | edge threshold |
//! | `lla_rounds`, `lla_tol` | `2`, `1e-4` | |
//! | `warm_dual` | `true` | carry ρ and the dual across LLA rounds |
//! | `rho_init`, `phi` | `2.0`, `10.0` | ADMM penalty and balancing factor |
//! | `tau_abs`, `tau_rel`, `t_max` | `1e-4`, `1e-4`, `200` | ADMM stopping |

use std::path::{Path, PathBuf};

use serde::Deserialize;

use magl_core::datagen::GraphKind;
use magl_core::penalty::{DEFAULT_EPSILON, DEFAULT_SCAD_A};
use magl_core::select::PHASE_ONE_ALPHA;
use magl_core::{AdmmConfig, FitOptions, PenaltyKind, PenaltySpec};

use crate::error::{MaglError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SelectionMode {
    F1Oracle,
    Bic,
}

impl SelectionMode {
    pub fn name(self) -> &'static str {
        match self {
            SelectionMode::F1Oracle => "f1_oracle",
            SelectionMode::Bic => "bic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "f1_oracle" | "f1-oracle" | "oracle" => Some(SelectionMode::F1Oracle),
            "bic" => Some(SelectionMode::Bic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub graph: Option<String>,
    pub p_er: Option<f64>,
    pub mean_degree: Option<f64>,
    pub p: Option<usize>,
    pub m: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub penalties: Option<Vec<String>>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub selection: Option<Vec<String>>,
    pub alpha: Option<f64>,
    pub grid_size: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub penalty: Option<String>,
    pub lambda: Option<f64>,
    pub epsilon: Option<f64>,
    pub scad_a: Option<f64>,
    pub theta: Option<f64>,
    pub lla_rounds: Option<usize>,
    pub lla_tol: Option<f64>,
    pub warm_dual: Option<bool>,
    pub rho_init: Option<f64>,
    pub phi: Option<f64>,
    pub tau_abs: Option<f64>,
    pub tau_rel: Option<f64>,
    pub t_max: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| MaglError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| MaglError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn fit_options(&self) -> Result<FitOptions> {
        let d = FitOptions::default();
        let admm = AdmmConfig {
            rho_init: self.rho_init.unwrap_or(d.admm.rho_init),
            phi: self.phi.unwrap_or(d.admm.phi),
            tau_abs: self.tau_abs.unwrap_or(d.admm.tau_abs),
            tau_rel: self.tau_rel.unwrap_or(d.admm.tau_rel),
            t_max: self.t_max.unwrap_or(d.admm.t_max),
        };
        admm.validate().map_err(|e| MaglError::Usage(e.to_string()))?;
        let opts = FitOptions {
            admm,
            lla_rounds: self.lla_rounds.unwrap_or(d.lla_rounds),
            lla_tol: self.lla_tol.unwrap_or(d.lla_tol),
            theta: self.theta.unwrap_or(d.theta),
            warm_dual: self.warm_dual.unwrap_or(d.warm_dual),
        };
        if opts.lla_rounds == 0 || !(opts.theta >= 0.0) || !(opts.lla_tol >= 0.0) {
            return Err(MaglError::Usage("lla_rounds must be >= 1, theta and lla_tol >= 0".into()));
        }
        Ok(opts)
    }

    /// Penalty template with the shape parameters filled in; λ defaults to 1
    /// when absent.
    pub fn penalty_spec(&self, kind: PenaltyKind) -> PenaltySpec {
        PenaltySpec {
            kind,
            lambda: self.lambda.unwrap_or(1.0),
            alpha: self.alpha.unwrap_or(PHASE_ONE_ALPHA),
            epsilon: self.epsilon.unwrap_or(DEFAULT_EPSILON),
            a: self.scad_a.unwrap_or(DEFAULT_SCAD_A),
        }
    }

    pub fn penalty_kind(&self) -> Result<PenaltyKind> {
        match &self.penalty {
            None => Ok(PenaltyKind::Lasso),
            Some(s) => parse_penalty(s),
        }
    }
}

pub fn parse_penalty(s: &str) -> Result<PenaltyKind> {
    PenaltyKind::parse(s).ok_or_else(|| MaglError::Usage(format!("unknown penalty `{s}`")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphKind,
    pub p: usize,
    pub m: usize,
    pub n_list: Vec<usize>,
    pub penalties: Vec<PenaltyKind>,
    pub runs: usize,
    pub seed: u64,
    pub modes: Vec<SelectionMode>,
    pub alpha: f64,
    pub grid_size: usize,
    pub output_dir: PathBuf,
    pub jobs: usize,
    /// λ and α are overwritten per fit; ε and a are used as given.
    pub template: PenaltySpec,
    pub fit: FitOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::from_file(&ConfigFile::default()).expect("defaults are valid")
    }
}

impl ExperimentConfig {
    pub fn from_file(f: &ConfigFile) -> Result<Self> {
        let graph = match f.graph.as_deref().unwrap_or("er") {
            "er" => GraphKind::Er { p_er: f.p_er.unwrap_or(0.05) },
            "ba" => GraphKind::Ba { mean_degree: f.mean_degree.unwrap_or(2.0) },
            g => return Err(MaglError::Usage(format!("unknown graph `{g}`"))),
        };
        let penalties = match &f.penalties {
            None => PenaltyKind::ALL.to_vec(),
            Some(list) => list.iter().map(|s| parse_penalty(s)).collect::<Result<_>>()?,
        };
        let modes = match &f.selection {
            None => vec![SelectionMode::F1Oracle],
            Some(list) => list
                .iter()
                .map(|s| SelectionMode::parse(s).ok_or_else(|| MaglError::Usage(format!("unknown selection mode `{s}`"))))
                .collect::<Result<_>>()?,
        };
        let cfg = ExperimentConfig {
            graph,
            p: f.p.unwrap_or(100),
            m: f.m.unwrap_or(4),
            n_list: f.n_list.clone().unwrap_or_else(|| vec![200, 400, 800]),
            penalties,
            runs: f.runs.unwrap_or(10),
            seed: f.seed.unwrap_or(1),
            modes,
            alpha: f.alpha.unwrap_or(PHASE_ONE_ALPHA),
            grid_size: f.grid_size.unwrap_or(15),
            output_dir: f.output_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
            jobs: f.jobs.unwrap_or(1),
            template: f.penalty_spec(PenaltyKind::Lasso),
            fit: f.fit_options()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(MaglError::Usage(msg.to_string()));
        if self.runs == 0 {
            return bad("runs must be >= 1");
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return bad("n_list must be nonempty with positive entries");
        }
        if self.p == 0 || self.m == 0 {
            return bad("p and m must be >= 1");
        }
        if self.modes.is_empty() {
            return bad("selection must name at least one mode");
        }
        if self.grid_size < 2 {
            return bad("grid_size must be >= 2");
        }
        if self.jobs == 0 {
            return bad("jobs must be >= 1");
        }
        match self.graph {
            GraphKind::Er { p_er } if !(0.0..=1.0).contains(&p_er) => return bad("p_er must lie in [0, 1]"),
            _ => {}
        }
        for &kind in &self.penalties {
            PenaltySpec { kind, alpha: self.alpha, ..self.template }
                .validate()
                .map_err(|e| MaglError::Usage(e.to_string()))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ExperimentConfig::default();
        assert_eq!((c.p, c.m, c.runs, c.grid_size), (100, 4, 10, 15));
        assert_eq!(c.penalties.len(), 3);
        assert_eq!(c.fit, FitOptions::default());
    }

    #[test]
    fn parses_all_keys() {
        let text = r#"
            graph = "ba"
            mean_degree = 4.0
            p = 20
            m = 2
            n_list = [100]
            penalties = ["lasso", "scad"]
            runs = 3
            seed = 9
            selection = ["f1_oracle", "bic"]
            alpha = 0.1
            grid_size = 5
            output_dir = "x"
            jobs = 2
            penalty = "log-sum"
            lambda = 0.3
            epsilon = 0.01
            scad_a = 4.0
            theta = 0.001
            lla_rounds = 3
            lla_tol = 0.0
            warm_dual = false
            rho_init = 1.0
            phi = 5.0
            tau_abs = 1e-6
            tau_rel = 1e-6
            t_max = 50
        "#;
        let f = ConfigFile::parse(text).unwrap();
        let c = ExperimentConfig::from_file(&f).unwrap();
        assert_eq!(c.graph, GraphKind::Ba { mean_degree: 4.0 });
        assert_eq!(c.modes, vec![SelectionMode::F1Oracle, SelectionMode::Bic]);
        assert_eq!(c.fit.admm.t_max, 50);
        assert!(!c.fit.warm_dual);
        let spec = f.penalty_spec(f.penalty_kind().unwrap());
        assert_eq!(spec.kind, PenaltyKind::LogSum);
        assert_eq!((spec.lambda, spec.alpha, spec.epsilon, spec.a), (0.3, 0.1, 0.01, 4.0));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ConfigFile::parse("nonsense = 1").is_err());
        for text in ["runs = 0", "n_list = []", "p = 0", "graph = \"ws\"", "penalties = [\"ridge\"]", "phi = 0.5", "scad_a = 1.5"] {
            let f = ConfigFile::parse(text).unwrap();
            assert!(ExperimentConfig::from_file(&f).is_err(), "{text}");
        }
    }
}
