//! JSON shapes for estimates, ground truths and diagnostics.

use serde::Serialize;

use magl_core::datagen::GroundTruth;
use magl_core::diagnostics::{HessianCheck, IrrepReport, KktReport, TailBoundReport};
use magl_core::{EdgeSet, GraphEstimate, PenaltySpec, SolverResult};

#[derive(Debug, Clone, Serialize)]
pub struct SolverTelemetry {
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub rho: f64,
}

impl From<&SolverResult> for SolverTelemetry {
    fn from(r: &SolverResult) -> Self {
        SolverTelemetry {
            iterations: r.iterations,
            converged: r.converged,
            primal_residual: r.primal_residual,
            dual_residual: r.dual_residual,
            rho: r.rho,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PenaltyJson {
    pub penalty: String,
    pub lambda: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub scad_a: f64,
}

impl From<&PenaltySpec> for PenaltyJson {
    fn from(s: &PenaltySpec) -> Self {
        PenaltyJson {
            penalty: s.kind.name().to_string(),
            lambda: s.lambda,
            alpha: s.alpha,
            epsilon: s.epsilon,
            scad_a: s.a,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateJson {
    pub p: usize,
    pub m: usize,
    #[serde(flatten)]
    pub penalty: PenaltyJson,
    pub theta: f64,
    pub n_edges: usize,
    pub edges: Vec<[usize; 2]>,
    pub block_weights: Vec<Vec<f64>>,
    pub converged: bool,
    pub lla_rounds: usize,
    pub rounds: Vec<SolverTelemetry>,
}

pub fn edges_json(edges: &EdgeSet) -> Vec<[usize; 2]> {
    edges.iter().map(|(a, b)| [a, b]).collect()
}

impl EstimateJson {
    pub fn new(est: &GraphEstimate, spec: &PenaltySpec) -> Self {
        let w = &est.block_weights.values;
        EstimateJson {
            p: est.omega_hat.p(),
            m: est.omega_hat.m(),
            penalty: spec.into(),
            theta: est.theta,
            n_edges: est.edges.len(),
            edges: edges_json(&est.edges),
            block_weights: (0..w.rows()).map(|i| w.row(i).to_vec()).collect(),
            converged: est.converged(),
            lla_rounds: est.lla_rounds,
            rounds: est.solver_results.iter().map(SolverTelemetry::from).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundTruthJson {
    pub p: usize,
    pub m: usize,
    pub seed: u64,
    pub graph: Option<String>,
    pub graph_param: Option<f64>,
    pub delta: f64,
    pub n_edges: usize,
    pub edges: Vec<[usize; 2]>,
}

impl From<&GroundTruth> for GroundTruthJson {
    fn from(t: &GroundTruth) -> Self {
        use magl_core::datagen::GraphKind;
        GroundTruthJson {
            p: t.p,
            m: t.m,
            seed: t.seed,
            graph: t.graph_kind.map(|g| g.name().to_string()),
            graph_param: t.graph_kind.map(|g| match g {
                GraphKind::Er { p_er } => p_er,
                GraphKind::Ba { mean_degree } => mean_degree,
            }),
            delta: t.delta,
            n_edges: t.edges_star.len(),
            edges: edges_json(&t.edges_star),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KktJson {
    pub residual_inf: f64,
    pub max_violation_location: [usize; 2],
    pub max_infeasibility: f64,
    pub infeasible_location: [usize; 2],
    pub subgradient_feasible: bool,
}

impl From<&KktReport> for KktJson {
    fn from(r: &KktReport) -> Self {
        KktJson {
            residual_inf: r.residual_inf,
            max_violation_location: [r.max_violation_location.0, r.max_violation_location.1],
            max_infeasibility: r.max_infeasibility,
            infeasible_location: [r.infeasible_location.0, r.infeasible_location.1],
            subgradient_feasible: r.subgradient_feasible,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HessianJson {
    pub phi_min: f64,
    pub analytic: f64,
    pub consistent: bool,
    pub convex: bool,
}

impl From<&HessianCheck> for HessianJson {
    fn from(h: &HessianCheck) -> Self {
        HessianJson { phi_min: h.phi_min, analytic: h.analytic, consistent: h.consistent, convex: h.convex }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailBoundJson {
    pub c0_tilde: f64,
    pub c0: f64,
    pub threshold: f64,
    pub elementwise_threshold: f64,
    pub bound: f64,
    pub empirical_rate: f64,
    pub elementwise_rate: f64,
    pub passes: bool,
    pub trials: usize,
}

impl From<&TailBoundReport> for TailBoundJson {
    fn from(r: &TailBoundReport) -> Self {
        TailBoundJson {
            c0_tilde: r.c0_tilde,
            c0: r.c0,
            threshold: r.threshold,
            elementwise_threshold: r.elementwise_threshold,
            bound: r.bound,
            empirical_rate: r.empirical_rate,
            elementwise_rate: r.elementwise_rate,
            passes: r.passes,
            trials: r.deviations.len(),
        }
    }
}

pub fn tail_deviations_csv(r: &TailBoundReport) -> String {
    let mut s = String::from("trial,deviation,elementwise_deviation\n");
    for (i, (d, e)) in r.deviations.iter().zip(&r.elementwise_deviations).enumerate() {
        s.push_str(&format!("{i},{d},{e}\n"));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct IrrepJson {
    pub lhs_group: f64,
    pub lhs_element: f64,
    pub gamma_implied: f64,
}

impl From<&IrrepReport> for IrrepJson {
    fn from(r: &IrrepReport) -> Self {
        IrrepJson { lhs_group: r.lhs_group, lhs_element: r.lhs_element, gamma_implied: r.gamma_implied }
    }
}
