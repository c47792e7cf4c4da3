//! Outer estimation loop: initialization, LLA re-weighting rounds around the
//! ADMM solver, and edge extraction.

use alloc::vec::Vec;

use crate::admm::{AdmmConfig, AdmmSolver, AdmmStart, SolverResult};
use crate::eigen::{SymmetricEigensolver, TridiagonalQl};
use crate::error::{bail, Result};
use crate::graph::EdgeSet;
use crate::matrix::{block_norm_map, BlockMatrix, BlockNormMap, Matrix};
use crate::penalty::{lla_weights, PenaltySpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub admm: AdmmConfig,
    /// Upper bound on LLA rounds for log-sum and SCAD. Lasso always uses one.
    pub lla_rounds: usize,
    /// Stop LLA early once `‖Ω̂_r − Ω̂_{r−1}‖_F / ‖Ω̂_{r−1}‖_F` falls to this.
    pub lla_tol: f64,
    /// Edge threshold θ on block Frobenius norms.
    pub theta: f64,
    /// Carry ρ and the dual variable from one LLA round into the next.
    pub warm_dual: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            admm: AdmmConfig::default(),
            lla_rounds: 2,
            lla_tol: 1e-4,
            theta: 0.0,
            warm_dual: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEstimate {
    pub omega_hat: BlockMatrix,
    pub edges: EdgeSet,
    pub block_weights: BlockNormMap,
    pub theta: f64,
    /// Solver calls actually made.
    pub lla_rounds: usize,
    pub solver_results: Vec<SolverResult>,
}

impl GraphEstimate {
    pub fn converged(&self) -> bool {
        self.solver_results.iter().all(|r| r.converged)
    }

    pub fn iterations(&self) -> usize {
        self.solver_results.iter().map(|r| r.iterations).sum()
    }

    /// Solver state to warm-start a neighbouring fit from.
    pub fn warm_start(&self) -> Option<AdmmStart> {
        self.solver_results.last().map(AdmmStart::from)
    }
}

/// `Σ̂ = (1/n) Σ_t x(t) x(t)ᵀ` over the rows of `data`, without centering.
pub fn sample_covariance(data: &Matrix, p: usize, m: usize) -> Result<BlockMatrix> {
    let (n, d) = (data.rows(), data.cols());
    if n == 0 {
        bail!(InvalidInput, "sample covariance needs at least one sample");
    }
    if d != p * m {
        bail!(Shape, "data has {} columns, expected p*m = {}", d, p * m);
    }
    if !data.is_finite() {
        bail!(InvalidInput, "data has non-finite entries");
    }
    let mut s = Matrix::zeros(d, d);
    for t in 0..n {
        let x = data.row(t);
        for i in 0..d {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let row = &mut s.row_mut(i)[..=i];
            for (acc, &xj) in row.iter_mut().zip(x) {
                *acc += xi * xj;
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    for i in 0..d {
        for j in 0..=i {
            let v = s[(i, j)] * inv_n;
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    BlockMatrix::symmetric(s, p, m)
}

/// `(diag Σ̂)⁻¹`, the starting point of the outer loop.
pub fn initial_estimate(sigma_hat: &BlockMatrix) -> Result<BlockMatrix> {
    let diag = sigma_hat.matrix().diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0) || !d.is_finite()) {
        bail!(InvalidInput, "covariance diagonal entry {} is {}, not positive", i, diag[i]);
    }
    let inv: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    BlockMatrix::symmetric(Matrix::from_diag(&inv), sigma_hat.p(), sigma_hat.m())
}

/// `{(q, l) : q < l, ‖Ω̂^(ql)‖_F > θ}`.
pub fn extract_edges(omega_hat: &BlockMatrix, theta: f64) -> EdgeSet {
    let p = omega_hat.p();
    let mut edges = EdgeSet::new(p);
    for q in 0..p {
        for l in q + 1..p {
            if omega_hat.block_frobenius(q, l) > theta {
                edges.insert(q, l).expect("indices in range");
            }
        }
    }
    edges
}

/// Fits with the built-in eigensolver.
pub fn fit(sigma_hat: &BlockMatrix, spec: &PenaltySpec, options: &FitOptions) -> Result<GraphEstimate> {
    fit_with(&TridiagonalQl::default(), sigma_hat, spec, options, None)
}

/// Full outer loop: Ω̄ = (diag Σ̂)⁻¹, then one ADMM solve for lasso or up to
/// `lla_rounds` re-weighted solves for log-sum and SCAD.
///
/// `start` replaces the cold start of the first solve (its `V` stands in for
/// Ω̄ as the ADMM starting point; the LLA weights still come from Ω̄).
pub fn fit_with(
    eig: &dyn SymmetricEigensolver,
    sigma_hat: &BlockMatrix,
    spec: &PenaltySpec,
    options: &FitOptions,
    start: Option<AdmmStart>,
) -> Result<GraphEstimate> {
    spec.validate()?;
    validate_options(options)?;
    let omega_bar = initial_estimate(sigma_hat)?;
    let solver = AdmmSolver::with_eigensolver(options.admm, eig);
    let weights = lla_weights(spec, &omega_bar);
    let start = start.unwrap_or_else(|| AdmmStart::cold(omega_bar));
    let first = solver.solve_from(sigma_hat, &weights, spec.alpha, start, None)?;
    continue_lla(eig, sigma_hat, spec, options, first)
}

/// Runs the remaining LLA rounds after a first solve.
///
/// The first round of every penalty uses weights at the diagonal Ω̄, which
/// are λ on every penalized entry, so a lasso solve at the same (λ, α) is a
/// valid `first` for log-sum and SCAD as well.
pub fn continue_lla(
    eig: &dyn SymmetricEigensolver,
    sigma_hat: &BlockMatrix,
    spec: &PenaltySpec,
    options: &FitOptions,
    first: SolverResult,
) -> Result<GraphEstimate> {
    spec.validate()?;
    validate_options(options)?;
    let solver = AdmmSolver::with_eigensolver(options.admm, eig);
    let mut results = Vec::with_capacity(options.lla_rounds);
    results.push(first);
    if spec.kind.is_concave() {
        while results.len() < options.lla_rounds {
            let prev = results.last().expect("nonempty");
            let weights = lla_weights(spec, &prev.omega_hat);
            let start = if options.warm_dual {
                AdmmStart::from(prev)
            } else {
                AdmmStart::cold(prev.omega_hat.clone())
            };
            let next = solver.solve_from(sigma_hat, &weights, spec.alpha, start, None)?;
            let prev_norm = prev.omega_hat.matrix().frobenius_norm();
            let change = (next.omega_hat.matrix() - prev.omega_hat.matrix()).frobenius_norm();
            results.push(next);
            if change <= options.lla_tol * prev_norm {
                break;
            }
        }
    }
    let omega_hat = results.last().expect("nonempty").omega_hat.clone();
    Ok(GraphEstimate {
        edges: extract_edges(&omega_hat, options.theta),
        block_weights: block_norm_map(&omega_hat),
        theta: options.theta,
        lla_rounds: results.len(),
        solver_results: results,
        omega_hat,
    })
}

fn validate_options(options: &FitOptions) -> Result<()> {
    options.admm.validate()?;
    if options.lla_rounds == 0 {
        bail!(InvalidInput, "lla_rounds must be at least 1");
    }
    if !(options.theta >= 0.0) {
        bail!(InvalidInput, "theta must be nonnegative");
    }
    Ok(())
}
