//! Penalty functions ρ_λ, their derivatives, and the local linear
//! approximation (LLA) weights that turn a non-convex penalty into a
//! weighted lasso around a reference estimate.

use crate::error::{bail, Result};
use crate::matrix::{BlockMatrix, Matrix};

/// Default log-sum smoothing constant ε.
pub const DEFAULT_EPSILON: f64 = 1e-4;
/// Default SCAD shape parameter a.
pub const DEFAULT_SCAD_A: f64 = 3.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PenaltyKind {
    Lasso,
    LogSum,
    Scad,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 3] = [PenaltyKind::Lasso, PenaltyKind::LogSum, PenaltyKind::Scad];

    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::Lasso => "lasso",
            PenaltyKind::LogSum => "log-sum",
            PenaltyKind::Scad => "scad",
        }
    }

    /// Parses `lasso`, `log-sum`/`logsum`/`lsp`, `scad` (case-insensitive).
    pub fn parse(s: &str) -> Option<PenaltyKind> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("lasso") {
            Some(PenaltyKind::Lasso)
        } else if s.eq_ignore_ascii_case("log-sum")
            || s.eq_ignore_ascii_case("logsum")
            || s.eq_ignore_ascii_case("lsp")
        {
            Some(PenaltyKind::LogSum)
        } else if s.eq_ignore_ascii_case("scad") {
            Some(PenaltyKind::Scad)
        } else {
            None
        }
    }

    /// Whether the penalty needs LLA re-weighting rounds.
    pub fn is_concave(self) -> bool {
        !matches!(self, PenaltyKind::Lasso)
    }
}

impl core::fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Penalty kind and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    /// λ > 0
    pub lambda: f64,
    /// Balance between element-wise (α) and group-wise (1 − α) terms.
    pub alpha: f64,
    /// Log-sum ε > 0.
    pub epsilon: f64,
    /// SCAD a > 2.
    pub a: f64,
}

impl PenaltySpec {
    /// A spec with default ε and a; call [`PenaltySpec::validate`] before use
    /// if the numbers come from outside.
    pub fn new(kind: PenaltyKind, lambda: f64, alpha: f64) -> Self {
        PenaltySpec {
            kind,
            lambda,
            alpha,
            epsilon: DEFAULT_EPSILON,
            a: DEFAULT_SCAD_A,
        }
    }

    pub fn lasso(lambda: f64, alpha: f64) -> Self {
        Self::new(PenaltyKind::Lasso, lambda, alpha)
    }

    pub fn log_sum(lambda: f64, alpha: f64) -> Self {
        Self::new(PenaltyKind::LogSum, lambda, alpha)
    }

    pub fn scad(lambda: f64, alpha: f64) -> Self {
        Self::new(PenaltyKind::Scad, lambda, alpha)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            bail!(InvalidInput, "lambda must be positive, got {}", self.lambda);
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            bail!(InvalidInput, "alpha must lie in [0, 1], got {}", self.alpha);
        }
        match self.kind {
            PenaltyKind::LogSum if !(self.epsilon > 0.0) => {
                bail!(InvalidInput, "log-sum epsilon must be positive, got {}", self.epsilon)
            }
            PenaltyKind::Scad if !(self.a > 2.0) => {
                bail!(InvalidInput, "SCAD a must exceed 2, got {}", self.a)
            }
            _ => Ok(()),
        }
    }

    /// ρ_λ(|u|).
    pub fn value(&self, u: f64) -> f64 {
        let u = u.abs();
        let lambda = self.lambda;
        match self.kind {
            PenaltyKind::Lasso => lambda * u,
            PenaltyKind::LogSum => lambda * self.epsilon * libm::log1p(u / self.epsilon),
            PenaltyKind::Scad => {
                let a = self.a;
                if u <= lambda {
                    lambda * u
                } else if u < a * lambda {
                    (2.0 * a * lambda * u - u * u - lambda * lambda) / (2.0 * (a - 1.0))
                } else {
                    lambda * lambda * (a + 1.0) / 2.0
                }
            }
        }
    }

    /// ρ′_λ(|u0|), the LLA slope. Lies in `[0, λ]`; equals λ at zero.
    ///
    /// SCAD branch points belong to the left branch: `|u0| = λ` gives λ and
    /// `|u0| = aλ` gives 0.
    pub fn gradient(&self, u0: f64) -> f64 {
        let u0 = u0.abs();
        let lambda = self.lambda;
        match self.kind {
            PenaltyKind::Lasso => lambda,
            PenaltyKind::LogSum => lambda * self.epsilon / (u0 + self.epsilon),
            PenaltyKind::Scad => {
                let a = self.a;
                if u0 <= lambda {
                    lambda
                } else if u0 <= a * lambda {
                    (a * lambda - u0) / (a - 1.0)
                } else {
                    0.0
                }
            }
        }
    }

    /// The weakest curvature μ that makes `ρ_λ(u) + μu²/2` convex.
    pub fn amenability(&self) -> f64 {
        match self.kind {
            PenaltyKind::Lasso => 0.0,
            PenaltyKind::LogSum => self.lambda / self.epsilon,
            PenaltyKind::Scad => 1.0 / (self.a - 1.0),
        }
    }

    /// `(C_λ, δ_λ)` with `ρ_λ(u) ≥ C_λ|u|` for `|u| ≤ δ_λ`.
    pub fn lower_bound_constants(&self) -> (f64, f64) {
        let c = self.lambda / 2.0;
        match self.kind {
            PenaltyKind::Lasso => (c, f64::INFINITY),
            PenaltyKind::LogSum => (c, self.epsilon),
            PenaltyKind::Scad => (c, self.lambda),
        }
    }
}

/// Free-function form of [`PenaltySpec::value`].
pub fn penalty_value(spec: &PenaltySpec, u: f64) -> f64 {
    spec.value(u)
}

/// Free-function form of [`PenaltySpec::gradient`].
pub fn penalty_gradient(spec: &PenaltySpec, u0: f64) -> f64 {
    spec.gradient(u0)
}

/// Per-entry and per-block weights of a weighted sparse-group lasso.
#[derive(Debug, Clone, PartialEq)]
pub struct LlaWeights {
    /// `mp × mp` element weights λ_{e,ij}.
    pub element: Matrix,
    /// `p × p` group weights λ_{g,kl}.
    pub group: Matrix,
}

impl LlaWeights {
    /// Every weight equal to `lambda` (the lasso case).
    pub fn constant(p: usize, m: usize, lambda: f64) -> Self {
        let n = p * m;
        LlaWeights {
            element: Matrix::from_fn(n, n, |_, _| lambda),
            group: Matrix::from_fn(p, p, |_, _| lambda),
        }
    }

    pub fn p(&self) -> usize {
        self.group.rows()
    }
}

/// LLA weights around `omega_bar`: element weights `ρ′(|Ω̄_ij|)`, group
/// weights `ρ′(‖Ω̄^(kl)‖_F)`; constant λ for lasso.
pub fn lla_weights(spec: &PenaltySpec, omega_bar: &BlockMatrix) -> LlaWeights {
    let (p, m) = (omega_bar.p(), omega_bar.m());
    if spec.kind == PenaltyKind::Lasso {
        return LlaWeights::constant(p, m, spec.lambda);
    }
    let n = p * m;
    let om = omega_bar.matrix();
    let element = Matrix::from_fn(n, n, |i, j| spec.gradient(om[(i, j)]));
    let group = Matrix::from_fn(p, p, |k, l| spec.gradient(omega_bar.block_frobenius(k, l)));
    LlaWeights { element, group }
}
