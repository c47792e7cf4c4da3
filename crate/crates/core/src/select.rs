//! BIC scoring and (λ, α) selection.

use alloc::vec::Vec;

use crate::admm::soft_threshold;
use crate::eigen::SymmetricEigensolver;
use crate::error::{bail, Error, Result};
use crate::estimator::{fit_with, FitOptions, GraphEstimate};
use crate::matrix::BlockMatrix;
use crate::penalty::PenaltySpec;

/// Magnitude above which an entry of Ω̂ counts as nonzero.
pub const NONZERO_FLOOR: f64 = 1e-10;
/// α used while scanning λ.
pub const PHASE_ONE_ALPHA: f64 = 0.05;
pub const DEFAULT_ALPHA_GRID: [f64; 5] = [0.01, 0.05, 0.1, 0.2, 0.3];
pub const DEFAULT_GRID_SIZE: usize = 15;

/// Ordered off-diagonal entries of Ω̂ with magnitude above [`NONZERO_FLOOR`],
/// i.e. twice the edge count of the enlarged `mp`-node graph.
pub fn enlarged_edge_count(omega_hat: &BlockMatrix) -> usize {
    let a = omega_hat.matrix();
    let n = a.rows();
    (0..n)
        .map(|i| a.row(i).iter().enumerate().filter(|&(j, x)| j != i && x.abs() > NONZERO_FLOOR).count())
        .sum()
}

/// `tr(Σ̂Ω̂) − ln|Ω̂|`.
pub fn fit_term(sigma_hat: &BlockMatrix, omega_hat: &BlockMatrix) -> Result<f64> {
    if !sigma_hat.same_structure(omega_hat) {
        bail!(Shape, "covariance and estimate differ in structure");
    }
    let log_det = omega_hat.matrix().spd_log_det().map_err(|_| {
        Error::InvalidInput(alloc::string::String::from("estimate is not positive definite"))
    })?;
    let (s, o) = (sigma_hat.matrix(), omega_hat.matrix());
    let trace: f64 = s.as_slice().iter().zip(o.as_slice()).map(|(a, b)| a * b).sum();
    Ok(trace - log_det)
}

/// `tr(Σ̂Ω̂) − ln|Ω̂| + (ln n / n)·|Ē|/2`.
pub fn bic(sigma_hat: &BlockMatrix, omega_hat: &BlockMatrix, n: usize) -> Result<f64> {
    if n == 0 {
        bail!(InvalidInput, "BIC needs n >= 1");
    }
    let edges = enlarged_edge_count(omega_hat) as f64 / 2.0;
    let nf = n as f64;
    Ok(fit_term(sigma_hat, omega_hat)? + libm::log(nf) / nf * edges)
}

/// `(λ_ℓ, λ_u) = (λ_sm/20, λ_sm/2)`.
pub fn lambda_bounds(lambda_sm: f64) -> (f64, f64) {
    let upper = lambda_sm / 2.0;
    (upper / 10.0, upper)
}

/// `size` log-spaced points from `lo` to `hi` inclusive, ascending.
pub fn log_grid(lo: f64, hi: f64, size: usize) -> Result<Vec<f64>> {
    if size < 2 {
        bail!(InvalidInput, "grid needs at least 2 points, got {}", size);
    }
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        bail!(InvalidInput, "grid bounds must satisfy 0 < lo <= hi");
    }
    let (a, b) = (libm::log(lo), libm::log(hi));
    let last = (size - 1) as f64;
    Ok((0..size)
        .map(|k| match k {
            0 => lo,
            k if k == size - 1 => hi,
            k => libm::exp(a + (b - a) * k as f64 / last),
        })
        .collect())
}

/// True when the sparse-group lasso at (λ, α) has no edges.
///
/// With every off-diagonal block of Ω̂ zero, Ω̂ and Ω̂⁻¹ are block diagonal,
/// so the off-diagonal blocks of the gradient are exactly those of Σ̂ and the
/// zero-block subgradient condition reduces to
/// `‖T_st(Σ̂^(kl), αλ)‖_F ≤ (1−α)mλ` for every `k ≠ l`. The condition is
/// sufficient by convexity. Non-convex penalties share it, since their first
/// LLA round is this lasso and a block-diagonal estimate reproduces the same
/// off-diagonal weights.
pub fn no_edge_at(sigma_hat: &BlockMatrix, lambda: f64, alpha: f64) -> bool {
    let (p, m) = (sigma_hat.p(), sigma_hat.m());
    let s = sigma_hat.matrix();
    let beta = alpha * lambda;
    let limit = (1.0 - alpha) * m as f64 * lambda;
    for k in 0..p {
        for l in k + 1..p {
            let mut acc = 0.0;
            for u in 0..m {
                for v in 0..m {
                    let x = soft_threshold(s[(k * m + u, l * m + v)], beta);
                    acc += x * x;
                }
            }
            if libm::sqrt(acc) > limit {
                return false;
            }
        }
    }
    true
}

/// Bracketing parameters of the λ_sm search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSearch {
    pub lambda_init: f64,
    /// Relative width at which bisection stops.
    pub rel_tol: f64,
    /// Give up when doubling passes this without reaching a no-edge model.
    pub lambda_max: f64,
    /// Halving stops here; returned as λ_sm if the model is edgeless even there.
    pub lambda_floor: f64,
}

impl Default for LambdaSearch {
    fn default() -> Self {
        LambdaSearch {
            lambda_init: 1.0,
            rel_tol: 0.01,
            lambda_max: 1e6,
            lambda_floor: 1e-8,
        }
    }
}

/// Smallest λ (to `rel_tol`) whose model has no edges, given a predicate
/// that reports whether λ still yields edges.
pub fn find_lambda_sm(search: &LambdaSearch, mut has_edges: impl FnMut(f64) -> Result<bool>) -> Result<f64> {
    if !(search.lambda_init > 0.0 && search.rel_tol > 0.0 && search.lambda_floor > 0.0) {
        bail!(InvalidInput, "lambda search parameters must be positive");
    }
    let (mut lo, mut hi);
    if has_edges(search.lambda_init)? {
        lo = search.lambda_init;
        hi = 2.0 * lo;
        while has_edges(hi)? {
            lo = hi;
            hi *= 2.0;
            if hi > search.lambda_max {
                bail!(SearchFailed, "no edge-free model for lambda up to {:e}", search.lambda_max);
            }
        }
    } else {
        hi = search.lambda_init;
        lo = hi / 2.0;
        while !has_edges(lo)? {
            hi = lo;
            lo /= 2.0;
            if lo < search.lambda_floor {
                return Ok(hi);
            }
        }
    }
    while hi - lo > search.rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if has_edges(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// λ_sm, (λ_ℓ, λ_u) and the log-spaced grid between them, using the exact
/// no-edge test at the template's α.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    pub lambda_sm: f64,
    pub bounds: (f64, f64),
    pub grid: Vec<f64>,
}

pub fn lambda_grid(sigma_hat: &BlockMatrix, alpha: f64, grid_size: usize, search: &LambdaSearch) -> Result<LambdaGrid> {
    if grid_size < 2 {
        bail!(InvalidInput, "grid needs at least 2 points, got {}", grid_size);
    }
    let lambda_sm = find_lambda_sm(search, |lambda| Ok(!no_edge_at(sigma_hat, lambda, alpha)))?;
    let bounds = lambda_bounds(lambda_sm);
    Ok(LambdaGrid {
        lambda_sm,
        bounds,
        grid: log_grid(bounds.0, bounds.1, grid_size)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BicRecord {
    pub lambda: f64,
    pub alpha: f64,
    pub bic: f64,
    /// Ordered nonzero off-diagonal entries, [`enlarged_edge_count`].
    pub n_edges: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub grid_size: usize,
    /// α for the λ scan.
    pub phase_one_alpha: f64,
    /// α values scanned at the winning λ; empty skips the second phase.
    pub alpha_grid: Vec<f64>,
    pub search: LambdaSearch,
}

impl SelectionConfig {
    /// λ scan only, at α = 0.05.
    pub fn synthetic() -> Self {
        SelectionConfig {
            grid_size: DEFAULT_GRID_SIZE,
            phase_one_alpha: PHASE_ONE_ALPHA,
            alpha_grid: Vec::new(),
            search: LambdaSearch::default(),
        }
    }

    /// λ scan then α scan over the default grid.
    pub fn real_data() -> Self {
        SelectionConfig {
            alpha_grid: DEFAULT_ALPHA_GRID.to_vec(),
            ..Self::synthetic()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub best_lambda: f64,
    pub best_alpha: f64,
    pub bic_table: Vec<BicRecord>,
    pub lambda_sm: f64,
    pub lambda_bounds: (f64, f64),
    pub best: GraphEstimate,
}

/// Index of the minimum BIC; ties go to larger λ, then larger α.
pub fn best_record(table: &[BicRecord]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in table.iter().enumerate() {
        if r.bic.is_nan() {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) => {
                let cur = &table[b];
                let better = r.bic < cur.bic
                    || (r.bic == cur.bic && (r.lambda > cur.lambda || (r.lambda == cur.lambda && r.alpha > cur.alpha)));
                Some(if better { i } else { b })
            }
        };
    }
    best
}

/// Two-phase BIC selection: scan λ over the grid at the phase-one α, then
/// (if `alpha_grid` is nonempty) scan α at the winning λ.
///
/// λ is visited from largest to smallest, each fit warm-started from the
/// previous one. BIC is scored on the final LLA estimate.
pub fn select(
    eig: &dyn SymmetricEigensolver,
    sigma_hat: &BlockMatrix,
    n: usize,
    template: &PenaltySpec,
    options: &FitOptions,
    config: &SelectionConfig,
) -> Result<SelectionResult> {
    let grid = lambda_grid(sigma_hat, config.phase_one_alpha, config.grid_size, &config.search)?;
    let mut table = Vec::new();
    let mut fits = Vec::new();
    let mut start = None;
    for &lambda in grid.grid.iter().rev() {
        let spec = template.with_lambda(lambda).with_alpha(config.phase_one_alpha);
        let est = fit_with(eig, sigma_hat, &spec, options, start.take())?;
        start = est.solver_results.first().map(crate::admm::AdmmStart::from);
        table.push(record(sigma_hat, n, &spec, &est)?);
        fits.push(est);
    }
    let i = best_record(&table).ok_or_else(|| Error::Numeric("no finite BIC on the grid".into()))?;
    let best_lambda = table[i].lambda;
    let mut best_fit = fits.swap_remove(i);
    let mut best_bic = table[i];

    for &alpha in &config.alpha_grid {
        if alpha == config.phase_one_alpha {
            continue;
        }
        let spec = template.with_lambda(best_lambda).with_alpha(alpha);
        let est = fit_with(eig, sigma_hat, &spec, options, None)?;
        let rec = record(sigma_hat, n, &spec, &est)?;
        table.push(rec);
        if best_record(&[best_bic, rec]) == Some(1) {
            best_bic = rec;
            best_fit = est;
        }
    }

    table.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.lambda.total_cmp(&b.lambda)));
    Ok(SelectionResult {
        best_lambda: best_bic.lambda,
        best_alpha: best_bic.alpha,
        bic_table: table,
        lambda_sm: grid.lambda_sm,
        lambda_bounds: grid.bounds,
        best: best_fit,
    })
}

fn record(sigma_hat: &BlockMatrix, n: usize, spec: &PenaltySpec, est: &GraphEstimate) -> Result<BicRecord> {
    Ok(BicRecord {
        lambda: spec.lambda,
        alpha: spec.alpha,
        bic: bic(sigma_hat, &est.omega_hat, n)?,
        n_edges: enlarged_edge_count(&est.omega_hat),
        converged: est.converged(),
    })
}
