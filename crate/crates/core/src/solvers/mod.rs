//! Sparse reconstruction of `α` from `y ≈ Aα`.
//!
//! * [`omp`]: orthogonal matching pursuit,
//! * [`smooth_l1_gd`]: gradient descent on `½‖Aα − y‖² + λ·ρ_ε(α)`,
//! * [`pnorm_gd`]: gradient descent on `½‖Aα − y‖² + λ·Σ|α_i|^p`, `1 < p ≤ 1.5`.
//!
//! Both penalties are convex and differentiable, so plain gradient descent
//! applies. The equality-constrained recovery program is relaxed to the
//! penalized form; small `λ` drives noiseless residuals toward zero.

mod gradient;
mod omp;
pub mod penalty;

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, CsError, Result};
use crate::model::CoefficientVector;

pub use gradient::{correlation_scale, lambda_path, pnorm_gd, smooth_l1_gd};
pub use omp::omp;
pub use penalty::{pnorm_penalty, pnorm_penalty_grad, smooth_l1, smooth_l1_grad};

/// Largest admissible order for the p-norm penalty.
pub const MAX_P: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Omp,
    SmoothL1Gd,
    PnormGd,
}

impl std::str::FromStr for SolverKind {
    type Err = CsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omp" => Ok(SolverKind::Omp),
            "sl1gd" | "smooth_l1_gd" => Ok(SolverKind::SmoothL1Gd),
            "pnormgd" | "pnorm_gd" => Ok(SolverKind::PnormGd),
            other => Err(CsError::invalid(format!(
                "unknown solver {other:?} (expected omp, sl1gd or pnormgd)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Constant step `1/L_F`, `L_F = σ_max(A)² + λ/ε`.
    FixedLipschitz,
    /// Armijo backtracking (halving, sufficient decrease 1e-4).
    Backtracking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// Gradient steps per stage (GD solvers).
    pub max_iters: usize,
    /// OMP: stop once `‖r‖₂ ≤ residual_tol`.
    /// GD: stop once `‖∇F‖₂ ≤ residual_tol·(1 + ‖y‖₂)`.
    pub residual_tol: f64,
    /// OMP atom budget; `None` means the number of measurements.
    pub k_max: Option<usize>,
    /// Smoothing width; `None` means `1e-3·‖Aᵀy‖∞`.
    pub epsilon: Option<f64>,
    pub p: f64,
    /// Penalty weight; `None` means `1e-3·‖Aᵀy‖∞`.
    pub lambda: Option<f64>,
    pub step_rule: StepRule,
    /// Smooth-ℓ1 only: run three stages `ε, ε/10, ε/100`, each warm-started.
    pub continuation: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kind: SolverKind::Omp,
            max_iters: 5000,
            residual_tol: 1e-9,
            k_max: None,
            epsilon: None,
            p: 1.05,
            lambda: None,
            step_rule: StepRule::Backtracking,
            continuation: false,
        }
    }
}

impl SolverConfig {
    pub fn omp() -> Self {
        Self::default()
    }

    pub fn smooth_l1() -> Self {
        Self {
            kind: SolverKind::SmoothL1Gd,
            ..Self::default()
        }
    }

    pub fn pnorm(p: f64) -> Self {
        Self {
            kind: SolverKind::PnormGd,
            p,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(CsError::invalid("max_iters must be at least 1"));
        }
        if !(self.residual_tol.is_finite() && self.residual_tol > 0.0) {
            return Err(CsError::invalid("residual_tol must be positive"));
        }
        if self.k_max == Some(0) {
            return Err(CsError::invalid("k_max must be at least 1"));
        }
        if let Some(eps) = self.epsilon {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(CsError::invalid("epsilon must be positive"));
            }
        }
        if let Some(lambda) = self.lambda {
            if !(lambda.is_finite() && lambda > 0.0) {
                return Err(CsError::invalid("lambda must be positive"));
            }
        }
        if self.kind == SolverKind::PnormGd {
            if self.p.is_nan() || self.p <= 1.0 {
                return Err(CsError::invalid(format!(
                    "p must exceed 1 (the penalty is not convex below 1), got {}",
                    self.p
                )));
            }
            if self.p > MAX_P {
                return Err(CsError::invalid(format!(
                    "p must be at most {MAX_P}, got {}",
                    self.p
                )));
            }
            if self.step_rule == StepRule::FixedLipschitz {
                return Err(CsError::invalid(
                    "fixed_lipschitz steps need a Lipschitz gradient; the p-norm penalty gradient is not Lipschitz at 0, use backtracking",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// OMP residual fell below tolerance.
    ResidualTolerance,
    /// Gradient norm fell below tolerance.
    GradientTolerance,
    /// OMP used its whole atom budget.
    MaxAtoms,
    MaxIterations,
    /// OMP active-set least squares lost rank.
    Degenerate,
    /// No remaining column correlates with the residual.
    NoCorrelation,
    /// Backtracking could not find a decreasing step.
    LineSearchStalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub alpha_star: CoefficientVector,
    /// `‖Aα* − y‖₂`, recomputed after the solve.
    pub residual_norm: f64,
    /// OMP: atoms selected. GD: accepted steps over all stages.
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// OMP: `½‖r‖²` after each selection. GD: objective after each step,
    /// starting with the initial point.
    pub objective_trace: Vec<f64>,
    pub residual_trace: Vec<f64>,
    /// Trace index where each continuation stage begins (`[0]` without
    /// continuation); the objective changes with `ε` at stage boundaries.
    pub stage_offsets: Vec<usize>,
    pub lambda: Option<f64>,
    /// Final smoothing width (smooth-ℓ1 only).
    pub epsilon: Option<f64>,
}

impl ReconstructionResult {
    /// Indices with `|α*_i| > threshold`.
    pub fn support_above(&self, threshold: f64) -> Vec<usize> {
        support_above(&self.alpha_star.values, threshold)
    }

    /// Support after relative thresholding `|α*_i| > rel·max|α*|`.
    pub fn relative_support(&self, rel: f64) -> Vec<usize> {
        self.support_above(rel * self.alpha_star.values.amax())
    }

    /// `iteration,objective,residual` CSV of the traces.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,objective,residual\n");
        for (i, (o, r)) in self
            .objective_trace
            .iter()
            .zip(&self.residual_trace)
            .enumerate()
        {
            let _ = writeln!(out, "{i},{},{}", crate::io::fmt_f64(*o), crate::io::fmt_f64(*r));
        }
        out
    }
}

pub fn support_above(values: &DVector<f64>, threshold: f64) -> Vec<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > threshold)
        .map(|(i, _)| i)
        .collect()
}

pub(crate) fn residual_norm(a: &DMatrix<f64>, alpha: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (a * alpha - y).norm()
}

/// Runs the solver selected by `config.kind`.
pub fn solve(a: &DMatrix<f64>, y: &DVector<f64>, config: &SolverConfig) -> Result<ReconstructionResult> {
    config.validate()?;
    check_dim("solve", a.nrows(), y.len())?;
    match config.kind {
        SolverKind::Omp => omp(a, y, config.k_max.unwrap_or(a.nrows()), config.residual_tol),
        SolverKind::SmoothL1Gd => smooth_l1_gd(a, y, config),
        SolverKind::PnormGd => pnorm_gd(a, y, config),
    }
}
