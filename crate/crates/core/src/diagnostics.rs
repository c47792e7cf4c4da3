//! Verification utilities: stationarity residuals, local convexity checks,
//! the sample-covariance tail bound and irrepresentability constants.
//!
//! Everything here is dense and capped to small dimensions.

use alloc::vec;
use alloc::vec::Vec;

use crate::admm::soft_threshold;
use crate::datagen::{sample_with_factor, GroundTruth};
use crate::eigen::sym_eig;
use crate::error::{bail, Error, Result};
use crate::estimator::sample_covariance;
use crate::matrix::{bvec_index, kron, operator_norm, tracy_singh, BlockMatrix, Matrix};
use crate::penalty::{LlaWeights, PenaltyKind, PenaltySpec};

/// Subgradient feasibility slack, in gradient units.
pub const KKT_FEASIBILITY_TOL: f64 = 1e-3;
/// Largest `mp` accepted by [`hessian_convexity_check`].
pub const HESSIAN_DIM_CAP: usize = 12;
/// Largest `mp` accepted by [`irrepresentability`].
pub const IRREP_DIM_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// Largest stationarity violation over entries whose subgradient is
    /// determined (diagonal entries and nonzero entries).
    pub residual_inf: f64,
    pub max_violation_location: (usize, usize),
    /// Largest amount by which a zero entry or zero block needs a
    /// subgradient outside its allowed set.
    pub max_infeasibility: f64,
    pub infeasible_location: (usize, usize),
    pub subgradient_feasible: bool,
}

/// Stationarity of `Ω̂` for `−ln|Ω| + tr(Σ̂Ω) + α Σ ρ(|Ω_ij|) + (1−α) m Σ ρ(‖Ω^(kl)‖_F)`.
///
/// For log-sum and SCAD this is the condition at a stationary point of the
/// non-convex objective; an LLA estimate meets it only at a fixed point. See
/// [`kkt_residual_weighted`] for the surrogate actually solved.
pub fn kkt_residual(omega_hat: &BlockMatrix, sigma_hat: &BlockMatrix, spec: &PenaltySpec) -> Result<KktReport> {
    spec.validate()?;
    kkt_core(
        omega_hat,
        sigma_hat,
        spec.alpha,
        |_, _, x| spec.gradient(x),
        |_, _, x| spec.gradient(x),
    )
}

/// Stationarity for fixed element weights `λ_{e,ij}` and group weights `λ_{g,kl}`.
pub fn kkt_residual_weighted(
    omega_hat: &BlockMatrix,
    sigma_hat: &BlockMatrix,
    weights: &LlaWeights,
    alpha: f64,
) -> Result<KktReport> {
    let n = omega_hat.dim();
    if (weights.element.rows(), weights.group.rows()) != (n, omega_hat.p()) {
        bail!(Shape, "weights do not match the estimate");
    }
    kkt_core(
        omega_hat,
        sigma_hat,
        alpha,
        |i, j, _| weights.element[(i, j)],
        |k, l, _| weights.group[(k, l)],
    )
}

fn kkt_core(
    omega_hat: &BlockMatrix,
    sigma_hat: &BlockMatrix,
    alpha: f64,
    element_slope: impl Fn(usize, usize, f64) -> f64,
    group_slope: impl Fn(usize, usize, f64) -> f64,
) -> Result<KktReport> {
    if !omega_hat.same_structure(sigma_hat) {
        bail!(Shape, "estimate and covariance differ in structure");
    }
    let inv = omega_hat
        .matrix()
        .spd_inverse()
        .map_err(|_| Error::InvalidInput("estimate is singular or not positive definite".into()))?;
    let g = sigma_hat.matrix() - &inv;
    let om = omega_hat.matrix();
    let (p, m) = (omega_hat.p(), omega_hat.m());
    let group_scale = (1.0 - alpha) * m as f64;

    let mut report = KktReport {
        residual_inf: 0.0,
        max_violation_location: (0, 0),
        max_infeasibility: 0.0,
        infeasible_location: (0, 0),
        subgradient_feasible: true,
    };
    let residual = |r: f64, at: (usize, usize), rep: &mut KktReport| {
        if r > rep.residual_inf {
            rep.residual_inf = r;
            rep.max_violation_location = at;
        }
    };
    let infeasible = |excess: f64, at: (usize, usize), rep: &mut KktReport| {
        if excess > rep.max_infeasibility {
            rep.max_infeasibility = excess;
            rep.infeasible_location = at;
        }
    };

    for k in 0..p {
        for l in 0..p {
            let norm = omega_hat.block_frobenius(k, l);
            if k != l && norm == 0.0 {
                // Smallest group subgradient given the best element one.
                let mut acc = 0.0;
                for u in 0..m {
                    for v in 0..m {
                        let (i, j) = (k * m + u, l * m + v);
                        let r = soft_threshold(g[(i, j)], alpha * element_slope(i, j, 0.0));
                        acc += r * r;
                    }
                }
                let excess = libm::sqrt(acc) - group_scale * group_slope(k, l, 0.0);
                infeasible(excess, (k * m, l * m), &mut report);
                continue;
            }
            let gslope = if k != l { group_slope(k, l, norm) } else { 0.0 };
            for u in 0..m {
                for v in 0..m {
                    let (i, j) = (k * m + u, l * m + v);
                    if i == j {
                        residual(g[(i, i)].abs(), (i, i), &mut report);
                        continue;
                    }
                    let x = om[(i, j)];
                    let group_term = if k != l { group_scale * gslope * x / norm } else { 0.0 };
                    if x != 0.0 {
                        let z = alpha * element_slope(i, j, x.abs()) * x.signum();
                        residual((g[(i, j)] + z + group_term).abs(), (i, j), &mut report);
                    } else {
                        let excess = g[(i, j)].abs() - alpha * element_slope(i, j, 0.0);
                        infeasible(excess, (i, j), &mut report);
                    }
                }
            }
        }
    }
    report.subgradient_feasible = report.max_infeasibility <= KKT_FEASIBILITY_TOL;
    Ok(report)
}

/// `μ̄`: ∞ for lasso, `√((a−1)/m)` for SCAD, `√(ε/(mλ))` for log-sum.
pub fn convexity_threshold(spec: &PenaltySpec, m: usize) -> f64 {
    let m = m as f64;
    match spec.kind {
        PenaltyKind::Lasso => f64::INFINITY,
        PenaltyKind::Scad => libm::sqrt((spec.a - 1.0) / m),
        PenaltyKind::LogSum => libm::sqrt(spec.epsilon / (m * spec.lambda)),
    }
}

/// `‖Ω‖ ≤ 0.99 μ̄`.
pub fn within_convexity_region(omega: &BlockMatrix, spec: &PenaltySpec) -> Result<bool> {
    let bound = convexity_threshold(spec, omega.m());
    Ok(bound.is_infinite() || operator_norm(omega.matrix())? <= 0.99 * bound)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianCheck {
    /// `φ_min(Ω⁻¹ ⊗ Ω⁻¹)` from the explicit Kronecker product.
    pub phi_min: f64,
    /// `1/‖Ω‖²`.
    pub analytic: f64,
    /// The two agree to `1e−8` relative.
    pub consistent: bool,
    /// `φ_min − μ ≥ −1e−10`.
    pub convex: bool,
}

pub fn hessian_convexity_check(omega: &BlockMatrix, mu: f64) -> Result<HessianCheck> {
    let n = omega.dim();
    if n > HESSIAN_DIM_CAP {
        bail!(Resource, "Hessian check capped at mp <= {}, got {}", HESSIAN_DIM_CAP, n);
    }
    omega.check_symmetric()?;
    let inv = omega
        .matrix()
        .spd_inverse()
        .map_err(|_| Error::InvalidInput("matrix is not positive definite".into()))?;
    let hessian = kron(&inv, &inv);
    let phi_min = sym_eig(&hessian)?.min_eigenvalue();
    let norm = operator_norm(omega.matrix())?;
    let analytic = 1.0 / (norm * norm);
    Ok(HessianCheck {
        phi_min,
        analytic,
        consistent: (phi_min - analytic).abs() <= 1e-8 * analytic,
        convex: phi_min - mu >= -1e-10,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailBoundReport {
    pub c0_tilde: f64,
    /// `C̃₀/m`.
    pub c0: f64,
    /// `C̃₀ √(ln p / n)`.
    pub threshold: f64,
    /// `C₀ √(ln p / n)`.
    pub elementwise_threshold: f64,
    /// `1/p^(τ−2)`.
    pub bound: f64,
    /// Fraction of trials with `‖C(Σ̂ − Σ*)‖_∞ > threshold`.
    pub empirical_rate: f64,
    /// Fraction of trials with `‖Σ̂ − Σ*‖_∞ > elementwise_threshold`.
    pub elementwise_rate: f64,
    pub passes: bool,
    /// `‖C(Σ̂ − Σ*)‖_∞` per trial.
    pub deviations: Vec<f64>,
    /// `‖Σ̂ − Σ*‖_∞` per trial.
    pub elementwise_deviations: Vec<f64>,
}

/// Monte Carlo check of the sample-covariance tail bound: draws `trials`
/// sample covariances of size `n` from `N(0, Σ*)`.
pub fn tail_bound_check(sigma_star: &BlockMatrix, n: usize, tau: f64, trials: usize, seed: u64) -> Result<TailBoundReport> {
    let (p, m) = (sigma_star.p(), sigma_star.m());
    if trials == 0 {
        bail!(InvalidInput, "need at least one trial");
    }
    if p < 2 {
        bail!(InvalidInput, "tail bound needs p >= 2");
    }
    if !(tau > 2.0) {
        bail!(InvalidInput, "tau must exceed 2, got {}", tau);
    }
    let (pf, mf, nf) = (p as f64, m as f64, n as f64);
    let log_term = libm::log(4.0 * mf * mf) + tau * libm::log(pf);
    if !(nf > 2.0 * log_term) {
        bail!(InvalidInput, "n = {} does not exceed 2 ln(4 m^2 p^tau) = {:.3}", n, 2.0 * log_term);
    }
    sigma_star.check_symmetric()?;
    let sigma_max = sigma_star.matrix().diagonal().into_iter().fold(f64::NEG_INFINITY, f64::max);
    let c0_tilde = 40.0 * mf * sigma_max * libm::sqrt(2.0 * log_term / libm::log(pf));
    let c0 = c0_tilde / mf;
    let rate = libm::sqrt(libm::log(pf) / nf);
    let (threshold, elementwise_threshold) = (c0_tilde * rate, c0 * rate);

    let factor = sigma_star.matrix().cholesky()?;
    let mut deviations = Vec::with_capacity(trials);
    let mut elementwise_deviations = Vec::with_capacity(trials);
    for trial in 0..trials {
        let trial_seed = seed ^ (trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let x = sample_with_factor(&factor, n, trial_seed)?;
        let s = sample_covariance(&x, p, m)?;
        let diff = BlockMatrix::new(s.matrix() - sigma_star.matrix(), p, m)?;
        let group = (0..p)
            .flat_map(|k| (0..p).map(move |l| (k, l)))
            .map(|(k, l)| diff.block_frobenius(k, l))
            .fold(0.0, f64::max);
        deviations.push(group);
        elementwise_deviations.push(diff.matrix().max_abs());
    }
    let frac = |v: &[f64], t: f64| v.iter().filter(|&&d| d > t).count() as f64 / trials as f64;
    let empirical_rate = frac(&deviations, threshold);
    let elementwise_rate = frac(&elementwise_deviations, elementwise_threshold);
    let bound = 1.0 / libm::pow(pf, tau - 2.0);
    Ok(TailBoundReport {
        c0_tilde,
        c0,
        threshold,
        elementwise_threshold,
        bound,
        empirical_rate,
        elementwise_rate,
        passes: empirical_rate <= bound && elementwise_rate <= bound,
        deviations,
        elementwise_deviations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrrepReport {
    /// `max_{f ∈ Sᶜ} ‖C(Γ*_{f,S} (Γ*_{S,S})⁻¹)‖₁`.
    pub lhs_group: f64,
    /// `max_{e_f ∈ f ∈ Sᶜ} ‖Γ*_{e_f,S} (Γ*_{S,S})⁻¹‖₁`.
    pub lhs_element: f64,
    /// `1 − max(lhs_group, lhs_element)`.
    pub gamma_implied: f64,
}

/// Ordered block pairs `(k, l)` in the support `S = E* ∪ {(k, k)}` and in
/// its complement, both in bvec order.
pub fn support_blocks(truth: &GroundTruth) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let p = truth.p;
    let (mut s, mut sc) = (Vec::new(), Vec::new());
    for l in 0..p {
        for k in 0..p {
            if k == l || truth.edges_star.contains(k, l) {
                s.push((k, l));
            } else {
                sc.push((k, l));
            }
        }
    }
    (s, sc)
}

/// bvec positions of the `m²` entries of block `(k, l)`.
fn block_positions(p: usize, m: usize, (k, l): (usize, usize)) -> Vec<usize> {
    let mut out = Vec::with_capacity(m * m);
    for t in 0..m {
        for s in 0..m {
            out.push(bvec_index(p, m, k * m + s, l * m + t));
        }
    }
    out
}

/// Irrepresentability constants of `Γ* = Σ* ⊠ Σ*` on the true support.
pub fn irrepresentability(truth: &GroundTruth) -> Result<IrrepReport> {
    let (p, m) = (truth.p, truth.m);
    if p * m > IRREP_DIM_CAP {
        bail!(Resource, "irrepresentability capped at mp <= {}, got {}", IRREP_DIM_CAP, p * m);
    }
    let sigma = truth.covariance()?;
    let gamma = tracy_singh(&sigma, &sigma)?;
    let (s_blocks, sc_blocks) = support_blocks(truth);
    let s_idx: Vec<usize> = s_blocks.iter().flat_map(|&b| block_positions(p, m, b)).collect();
    let gamma_ss = gamma.select(&s_idx, &s_idx);
    let chol = gamma_ss
        .cholesky()
        .map_err(|_| Error::Numeric("Gamma restricted to the support is singular".into()))?;
    let mm = m * m;
    let mut lhs_group: f64 = 0.0;
    let mut lhs_element: f64 = 0.0;
    for &f in &sc_blocks {
        let rows = block_positions(p, m, f);
        // Γ_{f,S} Γ_{S,S}⁻¹ = (Γ_{S,S}⁻¹ Γ_{S,f})ᵀ, one column per row of f.
        let mut product = Vec::with_capacity(mm);
        for &r in &rows {
            let b: Vec<f64> = s_idx.iter().map(|&c| gamma[(c, r)]).collect();
            product.push(cholesky_solve(&chol, &b));
        }
        let mut group_sum = 0.0;
        for g in 0..s_blocks.len() {
            let mut acc = 0.0;
            for row in &product {
                acc += row[g * mm..(g + 1) * mm].iter().map(|x| x * x).sum::<f64>();
            }
            group_sum += libm::sqrt(acc);
        }
        lhs_group = lhs_group.max(group_sum);
        for row in &product {
            lhs_element = lhs_element.max(row.iter().map(|x| x.abs()).sum());
        }
    }
    Ok(IrrepReport {
        lhs_group,
        lhs_element,
        gamma_implied: 1.0 - lhs_group.max(lhs_element),
    })
}

fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let row = l.row(i);
        let s: f64 = row[..i].iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
        y[i] = (b[i] - s) / row[i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[(k, i)] * x[k]).sum();
        x[i] = (y[i] - s) / l[(i, i)];
    }
    x
}
