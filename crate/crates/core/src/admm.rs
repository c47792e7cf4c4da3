//! Scaled ADMM for the weighted sparse-group graphical lasso
//!
//! ```text
//! min  −ln|Ω| + tr(Σ̂Ω) + α Σ_{i≠j} λ_{e,ij}|Ω_ij| + (1−α) m Σ_{k≠l} λ_{g,kl}‖Ω^(kl)‖_F
//! ```
//!
//! split as `Ω = V` with an adaptive penalty parameter ρ.

use alloc::vec::Vec;

use crate::eigen::{SymmetricEigensolver, TridiagonalQl};
use crate::error::{bail, Error, Result};
use crate::matrix::{BlockMatrix, Matrix};
use crate::penalty::LlaWeights;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmConfig {
    /// Initial penalty parameter ρ̄.
    pub rho_init: f64,
    /// Residual-balancing factor φ.
    pub phi: f64,
    pub tau_abs: f64,
    pub tau_rel: f64,
    pub t_max: usize,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            rho_init: 2.0,
            phi: 10.0,
            tau_abs: 1e-4,
            tau_rel: 1e-4,
            t_max: 200,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.rho_init) || !positive(self.tau_abs) || !positive(self.tau_rel) {
            bail!(InvalidInput, "rho_init, tau_abs and tau_rel must be positive");
        }
        if !(self.phi > 1.0) {
            bail!(InvalidInput, "phi must exceed 1, got {}", self.phi);
        }
        if self.t_max == 0 {
            bail!(InvalidInput, "t_max must be at least 1");
        }
        Ok(())
    }
}

/// Iterates of the scaled ADMM.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub omega: BlockMatrix,
    pub v: BlockMatrix,
    /// Scaled dual variable.
    pub u: BlockMatrix,
    pub rho: f64,
    pub iteration: usize,
}

impl AdmmState {
    /// `Ω = V = v0`, `U = 0`.
    pub fn new(v0: BlockMatrix, rho: f64) -> Self {
        let u = BlockMatrix::zeros(v0.p(), v0.m());
        AdmmState {
            omega: v0.clone(),
            v: v0,
            u,
            rho,
            iteration: 0,
        }
    }
}

/// Starting point for a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmStart {
    pub v: BlockMatrix,
    /// Unscaled dual `ρU`; zero when absent.
    pub dual: Option<Matrix>,
    /// Starting ρ; the configured ρ̄ when absent.
    pub rho: Option<f64>,
}

impl AdmmStart {
    pub fn cold(v: BlockMatrix) -> Self {
        AdmmStart {
            v,
            dual: None,
            rho: None,
        }
    }
}

impl From<&SolverResult> for AdmmStart {
    fn from(r: &SolverResult) -> Self {
        AdmmStart {
            v: r.omega_hat.clone(),
            dual: Some(r.dual.clone()),
            rho: Some(r.rho),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    /// Final `V`.
    pub omega_hat: BlockMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// ρ at exit.
    pub rho: f64,
    /// Unscaled dual `ρU` at exit.
    pub dual: Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRecord {
    pub converged: bool,
    pub d_p: f64,
    pub d_d: f64,
    pub tau_pri: f64,
    pub tau_dual: f64,
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationTrace {
    pub iteration: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// ρ used during the iteration.
    pub rho: f64,
    /// Objective at `V`; NaN if `V` is not positive definite.
    pub objective: f64,
}

/// Positive root of `ρx² + dx − 1 = 0`.
#[inline]
pub fn shrink_eigenvalue(d: f64, rho: f64) -> f64 {
    let root = libm::hypot(d, 2.0 * libm::sqrt(rho));
    if d >= 0.0 {
        2.0 / (d + root)
    } else {
        (root - d) / (2.0 * rho)
    }
}

/// `T_st(a, β) = (1 − β/|a|)₊ · a`.
#[inline]
pub fn soft_threshold(a: f64, beta: f64) -> f64 {
    if a.abs() <= beta {
        0.0
    } else {
        a - beta.copysign(a)
    }
}

/// Ω-update: eigen-decompose `Σ̂ − ρ(V − U)` and map each eigenvalue through
/// [`shrink_eigenvalue`].
pub fn omega_update<E: SymmetricEigensolver + ?Sized>(
    eig: &E,
    sigma_hat: &BlockMatrix,
    state: &AdmmState,
) -> Result<BlockMatrix> {
    let rho = state.rho;
    let mut shifted = state.v.matrix() - state.u.matrix();
    shifted.scale_mut(-rho);
    for (s, &x) in shifted.as_mut_slice().iter_mut().zip(sigma_hat.matrix().as_slice()) {
        *s += x;
    }
    let omega = eig.spectral_map(&shifted, &|d| {
        let x = shrink_eigenvalue(d, rho);
        debug_assert!(x > 0.0, "non-positive eigenvalue {x} from d={d}, rho={rho}");
        x
    })?;
    BlockMatrix::symmetric(omega, sigma_hat.p(), sigma_hat.m())
}

/// V-update: element-wise soft thresholding of `A = Ω⁺ + U` everywhere off
/// the diagonal, followed by group shrinkage of the off-diagonal blocks.
/// Blocks shrunk to zero are exactly zero.
pub fn v_update(omega_next: &BlockMatrix, state: &AdmmState, weights: &LlaWeights, alpha: f64) -> BlockMatrix {
    let mut a = omega_next.matrix() + state.u.matrix();
    shrink_in_place(&mut a, omega_next.p(), omega_next.m(), weights, alpha, state.rho);
    BlockMatrix::symmetric(a, omega_next.p(), omega_next.m()).expect("shape preserved")
}

/// The proximal map behind [`v_update`], applied in place. Only the upper
/// block triangle is computed; the lower one is mirrored so the output is
/// exactly symmetric when the input is.
fn shrink_in_place(a: &mut Matrix, p: usize, m: usize, weights: &LlaWeights, alpha: f64, rho: f64) {
    let el = &weights.element;
    let scale = alpha / rho;
    let group_scale = (1.0 - alpha) * m as f64 / rho;
    let mut block: Vec<f64> = alloc::vec![0.0; m * m];
    for k in 0..p {
        for u in 0..m {
            for v in u + 1..m {
                let (i, j) = (k * m + u, k * m + v);
                let x = soft_threshold(a[(i, j)], scale * el[(i, j)]);
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        for l in k + 1..p {
            let mut norm2 = 0.0;
            for u in 0..m {
                for v in 0..m {
                    let (i, j) = (k * m + u, l * m + v);
                    let x = soft_threshold(a[(i, j)], scale * el[(i, j)]);
                    block[u * m + v] = x;
                    norm2 += x * x;
                }
            }
            let norm = libm::sqrt(norm2);
            let thresh = group_scale * weights.group[(k, l)];
            let factor = if norm == 0.0 || norm <= thresh {
                0.0
            } else {
                1.0 - thresh / norm
            };
            for u in 0..m {
                for v in 0..m {
                    let (i, j) = (k * m + u, l * m + v);
                    let x = if factor == 0.0 { 0.0 } else { block[u * m + v] * factor };
                    a[(i, j)] = x;
                    a[(j, i)] = x;
                }
            }
        }
    }
}

/// Residuals and tolerances after an iteration. `next` holds `Ω⁺`, `V⁺`,
/// `U⁺` and the ρ used to produce them; `v_prev` is `V` before the update.
pub fn convergence_check(next: &AdmmState, v_prev: &BlockMatrix, config: &AdmmConfig) -> ConvergenceRecord {
    let n = next.omega.dim() as f64;
    let rho = next.rho;
    let diff_norm = |a: &Matrix, b: &Matrix| -> f64 {
        libm::sqrt(a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum())
    };
    let d_p = diff_norm(next.omega.matrix(), next.v.matrix());
    let d_d = rho * diff_norm(next.v.matrix(), v_prev.matrix());
    let tau_pri = n * config.tau_abs
        + config.tau_rel * next.omega.matrix().frobenius_norm().max(next.v.matrix().frobenius_norm());
    let tau_dual = n * config.tau_abs + config.tau_rel * next.u.matrix().frobenius_norm() / rho;
    ConvergenceRecord {
        converged: d_p <= tau_pri && d_d <= tau_dual,
        d_p,
        d_d,
        tau_pri,
        tau_dual,
    }
}

/// Residual balancing: ρ doubles (U halves) when `d_p > φ·d_d`, ρ halves
/// (U doubles) when `d_d > φ·d_p`.
pub fn rho_update(d_p: f64, d_d: f64, state: &mut AdmmState, phi: f64) {
    let factor = if d_p > phi * d_d {
        2.0
    } else if d_d > phi * d_p {
        0.5
    } else {
        return;
    };
    state.rho *= factor;
    state.u.matrix_mut().scale_mut(1.0 / factor);
    state.u.enforce_symmetry();
}

/// `−ln|Ω| + tr(Σ̂Ω) + α Σ_{i≠j} λ_{e,ij}|Ω_ij| + (1−α) m Σ_{k≠l} λ_{g,kl}‖Ω^(kl)‖_F`.
pub fn objective(sigma_hat: &BlockMatrix, omega: &BlockMatrix, weights: &LlaWeights, alpha: f64) -> Result<f64> {
    let log_det = omega.matrix().spd_log_det()?;
    let (p, m) = (omega.p(), omega.m());
    let (s, o) = (sigma_hat.matrix(), omega.matrix());
    let n = omega.dim();
    let mut trace = 0.0;
    let mut element = 0.0;
    for i in 0..n {
        for (j, (&sv, &ov)) in s.row(i).iter().zip(o.row(i)).enumerate() {
            trace += sv * ov;
            if i != j {
                element += weights.element[(i, j)] * ov.abs();
            }
        }
    }
    let mut group = 0.0;
    for k in 0..p {
        for l in 0..p {
            if k != l {
                group += weights.group[(k, l)] * omega.block_frobenius(k, l);
            }
        }
    }
    Ok(-log_det + trace + alpha * element + (1.0 - alpha) * m as f64 * group)
}

/// Algorithm driver, generic over the eigensolver used in the Ω-update.
#[derive(Debug, Clone, Default)]
pub struct AdmmSolver<E = TridiagonalQl> {
    pub config: AdmmConfig,
    pub eigensolver: E,
}

impl AdmmSolver<TridiagonalQl> {
    pub fn new(config: AdmmConfig) -> Self {
        AdmmSolver {
            config,
            eigensolver: TridiagonalQl::default(),
        }
    }
}

impl<E: SymmetricEigensolver> AdmmSolver<E> {
    pub fn with_eigensolver(config: AdmmConfig, eigensolver: E) -> Self {
        AdmmSolver { config, eigensolver }
    }

    /// Runs from `V = omega_init`, `U = 0`, `ρ = ρ̄`.
    pub fn solve(
        &self,
        sigma_hat: &BlockMatrix,
        weights: &LlaWeights,
        alpha: f64,
        omega_init: &BlockMatrix,
    ) -> Result<SolverResult> {
        self.solve_from(sigma_hat, weights, alpha, AdmmStart::cold(omega_init.clone()), None)
    }

    /// Runs from an arbitrary start, optionally reporting every iteration.
    ///
    /// Reaching `t_max` is not an error: the result has `converged = false`.
    /// Non-finite iterates are.
    pub fn solve_from(
        &self,
        sigma_hat: &BlockMatrix,
        weights: &LlaWeights,
        alpha: f64,
        start: AdmmStart,
        mut trace: Option<&mut dyn FnMut(&IterationTrace)>,
    ) -> Result<SolverResult> {
        let cfg = &self.config;
        cfg.validate()?;
        check_inputs(sigma_hat, weights, alpha, &start)?;
        let (p, m) = (sigma_hat.p(), sigma_hat.m());

        let rho = start.rho.unwrap_or(cfg.rho_init);
        let mut state = AdmmState::new(start.v, rho);
        if let Some(dual) = start.dual {
            state.u = BlockMatrix::symmetric(dual.scaled(1.0 / rho), p, m)?;
        }

        let mut t = 0;
        let mut last;
        loop {
            let omega = omega_update(&self.eigensolver, sigma_hat, &state)?;
            let mut a = omega.matrix() + state.u.matrix();
            shrink_in_place(&mut a, p, m, weights, alpha, state.rho);
            let v_next = BlockMatrix::symmetric(a, p, m)?;
            let v_prev = core::mem::replace(&mut state.v, v_next);
            state.omega = omega;
            let u_next = &(state.u.matrix() + state.omega.matrix()) - state.v.matrix();
            state.u = BlockMatrix::symmetric(u_next, p, m)?;
            state.iteration = t + 1;

            if !state.omega.matrix().is_finite() || !state.v.matrix().is_finite() || !state.u.matrix().is_finite() {
                return Err(Error::Numeric(alloc::format!("non-finite ADMM iterate at iteration {}", t + 1)));
            }

            last = convergence_check(&state, &v_prev, cfg);
            if let Some(cb) = trace.as_deref_mut() {
                let objective = objective(sigma_hat, &state.v, weights, alpha).unwrap_or(f64::NAN);
                cb(&IterationTrace {
                    iteration: t + 1,
                    primal_residual: last.d_p,
                    dual_residual: last.d_d,
                    rho: state.rho,
                    objective,
                });
            }
            if last.converged {
                break;
            }
            rho_update(last.d_p, last.d_d, &mut state, cfg.phi);
            t += 1;
            if t > cfg.t_max {
                break;
            }
        }

        let rho = state.rho;
        Ok(SolverResult {
            omega_hat: state.v,
            iterations: state.iteration,
            converged: last.converged,
            primal_residual: last.d_p,
            dual_residual: last.d_d,
            rho,
            dual: state.u.into_matrix().scaled(rho),
        })
    }
}

fn check_inputs(sigma_hat: &BlockMatrix, weights: &LlaWeights, alpha: f64, start: &AdmmStart) -> Result<()> {
    let (p, m) = (sigma_hat.p(), sigma_hat.m());
    let n = p * m;
    if !(0.0..=1.0).contains(&alpha) {
        bail!(InvalidInput, "alpha must lie in [0, 1], got {}", alpha);
    }
    if !sigma_hat.matrix().is_finite() {
        bail!(InvalidInput, "covariance has non-finite entries");
    }
    sigma_hat.check_symmetric()?;
    if !start.v.same_structure(sigma_hat) {
        bail!(Shape, "initial estimate does not match the covariance structure");
    }
    if (weights.element.rows(), weights.element.cols()) != (n, n) || (weights.group.rows(), weights.group.cols()) != (p, p)
    {
        bail!(Shape, "weight matrices do not match p={} m={}", p, m);
    }
    if let Some(d) = &start.dual {
        if (d.rows(), d.cols()) != (n, n) {
            bail!(Shape, "initial dual does not match the covariance structure");
        }
    }
    if let Some(r) = start.rho {
        if !(r > 0.0 && r.is_finite()) {
            bail!(InvalidInput, "starting rho must be positive");
        }
    }
    Ok(())
}
