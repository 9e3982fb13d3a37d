//! Smooth convex sparsity penalties and their gradients.

/// `ρ_ε(x) = Σ (√(x_i² + ε²) − ε)`, a smooth convex surrogate for `‖x‖₁`
/// with `0 ≤ ‖x‖₁ − ρ_ε(x) ≤ n·ε`.
pub fn smooth_l1(x: &[f64], epsilon: f64) -> f64 {
    debug_assert!(epsilon > 0.0);
    // x²/(√(x²+ε²)+ε) is the same quantity without cancellation near 0
    x.iter()
        .map(|v| v * v / ((v * v + epsilon * epsilon).sqrt() + epsilon))
        .sum()
}

/// `∂ρ_ε/∂x_i = x_i / √(x_i² + ε²)`.
pub fn smooth_l1_grad(x: &[f64], epsilon: f64) -> Vec<f64> {
    debug_assert!(epsilon > 0.0);
    x.iter().map(|v| v / (v * v + epsilon * epsilon).sqrt()).collect()
}

/// `Σ |x_i|^p`; convex and differentiable for `p > 1`.
pub fn pnorm_penalty(x: &[f64], p: f64) -> f64 {
    debug_assert!(p > 1.0);
    x.iter().map(|v| v.abs().powf(p)).sum()
}

/// `p·|x_i|^{p−1}·sign(x_i)`, zero at `x_i = 0`.
pub fn pnorm_penalty_grad(x: &[f64], p: f64) -> Vec<f64> {
    debug_assert!(p > 1.0);
    x.iter().map(|v| pnorm_term_grad(*v, p)).collect()
}

pub(crate) fn pnorm_term_grad(v: f64, p: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        p * v.abs().powf(p - 1.0) * v.signum()
    }
}

/// Penalty selected by a gradient solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Penalty {
    SmoothL1 { epsilon: f64 },
    PNorm { p: f64 },
}

impl Penalty {
    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Penalty::SmoothL1 { epsilon } => smooth_l1(x, epsilon),
            Penalty::PNorm { p } => pnorm_penalty(x, p),
        }
    }

    pub(crate) fn add_scaled_grad(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        match *self {
            Penalty::SmoothL1 { epsilon } => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o += scale * v / (v * v + epsilon * epsilon).sqrt();
                }
            }
            Penalty::PNorm { p } => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o += scale * pnorm_term_grad(*v, p);
                }
            }
        }
    }

    /// Global Lipschitz constant of the penalty gradient, if one exists.
    pub(crate) fn grad_lipschitz(&self) -> Option<f64> {
        match *self {
            Penalty::SmoothL1 { epsilon } => Some(1.0 / epsilon),
            Penalty::PNorm { .. } => None,
        }
    }
}
