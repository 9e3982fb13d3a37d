//! Gradient descent on `F(α) = ½‖Aα − y‖² + λ·g(α)` for a smooth convex `g`.

use nalgebra::{DMatrix, DVector};

use super::penalty::Penalty;
use super::{residual_norm, ReconstructionResult, SolverConfig, SolverKind, StepRule, Termination};
use crate::error::{check_dim, CsError, Result};
use crate::model::CoefficientVector;

/// Relative default for `λ` and `ε`, applied to `‖Aᵀy‖∞`.
pub const DEFAULT_SCALE: f64 = 1e-3;
const ARMIJO_C: f64 = 1e-4;
const BACKTRACK_FACTOR: f64 = 0.5;
const MAX_BACKTRACKS: usize = 80;
const CONTINUATION_STAGES: usize = 3;

/// Minimizes `½‖Aα − y‖² + λ·ρ_ε(α)` from `α = 0`.
pub fn smooth_l1_gd(a: &DMatrix<f64>, y: &DVector<f64>, config: &SolverConfig) -> Result<ReconstructionResult> {
    expect_kind(config, SolverKind::SmoothL1Gd)?;
    run(a, y, config, None, DVector::zeros(a.ncols()))
}

/// Minimizes `½‖Aα − y‖² + λ·Σ|α_i|^p` from `α = 0`.
pub fn pnorm_gd(a: &DMatrix<f64>, y: &DVector<f64>, config: &SolverConfig) -> Result<ReconstructionResult> {
    expect_kind(config, SolverKind::PnormGd)?;
    run(a, y, config, None, DVector::zeros(a.ncols()))
}

/// Solves a sequence of penalty weights, warm-starting each solve from the
/// previous solution. Returns one result per entry of `lambdas`.
pub fn lambda_path(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    config: &SolverConfig,
    lambdas: &[f64],
) -> Result<Vec<ReconstructionResult>> {
    if config.kind == SolverKind::Omp {
        return Err(CsError::invalid("lambda_path needs a gradient solver"));
    }
    let mut start = DVector::zeros(a.ncols());
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(CsError::invalid(format!("lambda must be positive, got {lambda}")));
        }
        let res = run(a, y, config, Some(lambda), start)?;
        start = res.alpha_star.values.clone();
        out.push(res);
    }
    Ok(out)
}

/// `‖Aᵀy‖∞` with a fallback of 1 when it vanishes.
pub fn correlation_scale(a: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let s = a.tr_mul(y).amax();
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn expect_kind(config: &SolverConfig, kind: SolverKind) -> Result<()> {
    if config.kind != kind {
        return Err(CsError::invalid(format!(
            "solver config is for {:?}, expected {kind:?}",
            config.kind
        )));
    }
    Ok(())
}

fn run(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    config: &SolverConfig,
    lambda_override: Option<f64>,
    start: DVector<f64>,
) -> Result<ReconstructionResult> {
    config.validate()?;
    check_dim("gradient solver", a.nrows(), y.len())?;
    check_dim("gradient solver start", a.ncols(), start.len())?;

    let scale = correlation_scale(a, y);
    let lambda = lambda_override.or(config.lambda).unwrap_or(DEFAULT_SCALE * scale);
    let penalties: Vec<Penalty> = match config.kind {
        SolverKind::SmoothL1Gd => {
            let eps = config.epsilon.unwrap_or(DEFAULT_SCALE * scale);
            let stages = if config.continuation { CONTINUATION_STAGES } else { 1 };
            (0..stages)
                .map(|s| Penalty::SmoothL1 {
                    epsilon: eps / 10f64.powi(s as i32),
                })
                .collect()
        }
        SolverKind::PnormGd => vec![Penalty::PNorm { p: config.p }],
        SolverKind::Omp => unreachable!("checked by callers"),
    };

    let stop = config.residual_tol * (1.0 + y.norm());
    // backtracking only needs a starting guess; ‖A‖_F² ≥ σ_max(A)²
    let data_lipschitz = match config.step_rule {
        StepRule::FixedLipschitz => a.clone().singular_values().amax().powi(2),
        StepRule::Backtracking => a.norm_squared(),
    }
    .max(f64::MIN_POSITIVE);

    let mut state = Descent::new(a, y, lambda, start);
    let mut stage_offsets = Vec::with_capacity(penalties.len());
    let mut termination = Termination::MaxIterations;
    for penalty in &penalties {
        stage_offsets.push(state.objective_trace.len());
        state.set_penalty(*penalty);
        let fixed_step = match config.step_rule {
            StepRule::FixedLipschitz => {
                let lip = data_lipschitz + lambda * penalty.grad_lipschitz().unwrap_or(0.0);
                Some(1.0 / lip)
            }
            StepRule::Backtracking => None,
        };
        termination = state.descend(config.max_iters, stop, fixed_step, 1.0 / data_lipschitz);
    }

    let epsilon = match penalties.last() {
        Some(Penalty::SmoothL1 { epsilon }) => Some(*epsilon),
        _ => None,
    };
    let residual_norm = residual_norm(a, &state.alpha, y);
    Ok(ReconstructionResult {
        alpha_star: CoefficientVector { values: state.alpha },
        residual_norm,
        iterations: state.steps,
        converged: termination == Termination::GradientTolerance,
        termination,
        objective_trace: state.objective_trace,
        residual_trace: state.residual_trace,
        stage_offsets,
        lambda: Some(lambda),
        epsilon,
    })
}

struct Descent<'a> {
    a: &'a DMatrix<f64>,
    lambda: f64,
    penalty: Penalty,
    alpha: DVector<f64>,
    /// `Aα − y`
    residual: DVector<f64>,
    objective: f64,
    steps: usize,
    objective_trace: Vec<f64>,
    residual_trace: Vec<f64>,
}

/// Scratch vectors reused across iterations.
struct Buffers {
    grad: DVector<f64>,
    a_grad: DVector<f64>,
    trial: DVector<f64>,
    trial_residual: DVector<f64>,
    prev_alpha: DVector<f64>,
    prev_grad: DVector<f64>,
}

impl<'a> Descent<'a> {
    fn new(a: &'a DMatrix<f64>, y: &DVector<f64>, lambda: f64, alpha: DVector<f64>) -> Self {
        let residual = a * &alpha - y;
        Self {
            a,
            lambda,
            penalty: Penalty::PNorm { p: 2.0 },
            alpha,
            residual,
            objective: f64::NAN,
            steps: 0,
            objective_trace: Vec::new(),
            residual_trace: Vec::new(),
        }
    }

    fn set_penalty(&mut self, penalty: Penalty) {
        self.penalty = penalty;
        self.objective = self.objective_at(&self.alpha, &self.residual);
        self.record();
    }

    fn objective_at(&self, alpha: &DVector<f64>, residual: &DVector<f64>) -> f64 {
        0.5 * residual.norm_squared() + self.lambda * self.penalty.value(alpha.as_slice())
    }

    fn record(&mut self) {
        self.objective_trace.push(self.objective);
        self.residual_trace.push(self.residual.norm());
    }

    fn gradient_into(&self, out: &mut DVector<f64>) {
        out.gemv_tr(1.0, self.a, &self.residual, 0.0);
        self.penalty
            .add_scaled_grad(self.alpha.as_slice(), self.lambda, out.as_mut_slice());
    }

    fn descend(&mut self, max_iters: usize, stop: f64, fixed_step: Option<f64>, initial_step: f64) -> Termination {
        let (n, rows) = (self.alpha.len(), self.residual.len());
        let mut buf = Buffers {
            grad: DVector::zeros(n),
            a_grad: DVector::zeros(rows),
            trial: DVector::zeros(n),
            trial_residual: DVector::zeros(rows),
            prev_alpha: DVector::zeros(n),
            prev_grad: DVector::zeros(n),
        };
        let mut step = initial_step;
        let mut have_previous = false;
        for _ in 0..max_iters {
            self.gradient_into(&mut buf.grad);
            let gnorm2 = buf.grad.norm_squared();
            if gnorm2.sqrt() <= stop {
                return Termination::GradientTolerance;
            }
            buf.a_grad.gemv(1.0, self.a, &buf.grad, 0.0);
            match fixed_step {
                Some(t) => {
                    self.alpha.axpy(-t, &buf.grad, 1.0);
                    self.residual.axpy(-t, &buf.a_grad, 1.0);
                    self.objective = self.objective_at(&self.alpha, &self.residual);
                }
                None => {
                    // Barzilai-Borwein guess ⟨s,s⟩/⟨s,Δg⟩ when curvature is
                    // positive, else double the last accepted step; then halve
                    let mut t = 2.0 * step;
                    if have_previous {
                        let (mut ss, mut sy) = (0.0, 0.0);
                        for i in 0..n {
                            let s = self.alpha[i] - buf.prev_alpha[i];
                            ss += s * s;
                            sy += s * (buf.grad[i] - buf.prev_grad[i]);
                        }
                        if sy > 0.0 && ss > 0.0 {
                            t = ss / sy;
                        }
                    }
                    buf.prev_alpha.copy_from(&self.alpha);
                    buf.prev_grad.copy_from(&buf.grad);
                    have_previous = true;

                    let mut accepted = false;
                    for _ in 0..MAX_BACKTRACKS {
                        buf.trial.copy_from(&self.alpha);
                        buf.trial.axpy(-t, &buf.grad, 1.0);
                        buf.trial_residual.copy_from(&self.residual);
                        buf.trial_residual.axpy(-t, &buf.a_grad, 1.0);
                        let f = self.objective_at(&buf.trial, &buf.trial_residual);
                        if f <= self.objective - ARMIJO_C * t * gnorm2 {
                            std::mem::swap(&mut self.alpha, &mut buf.trial);
                            std::mem::swap(&mut self.residual, &mut buf.trial_residual);
                            self.objective = f;
                            accepted = true;
                            break;
                        }
                        t *= BACKTRACK_FACTOR;
                    }
                    if !accepted {
                        return Termination::LineSearchStalled;
                    }
                    step = t;
                }
            }
            self.steps += 1;
            self.record();
        }
        Termination::MaxIterations
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_sparse_coefficients, SparsityProfile};
    use crate::sensing::{make_measurement_matrix, MeasurementKind};

    fn planted(n: usize, l: usize, k: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>, Vec<usize>) {
        let a = make_measurement_matrix(MeasurementKind::Gaussian, l, n, seed)
            .unwrap()
            .matrix()
            .clone();
        let alpha = sample_sparse_coefficients(&SparsityProfile::new(k), n, seed + 1).unwrap();
        let y = &a * &alpha.values;
        (a, y, alpha.support())
    }

    fn monotone_within_stages(r: &ReconstructionResult) -> bool {
        let mut bounds = r.stage_offsets.clone();
        bounds.push(r.objective_trace.len());
        bounds
            .windows(2)
            .all(|w| r.objective_trace[w[0]..w[1]].windows(2).all(|p| p[1] <= p[0] + 1e-12))
    }

    #[test]
    fn zero_measurements_give_zero() {
        let (a, _, _) = planted(16, 8, 2, 3);
        let y = DVector::zeros(8);
        for cfg in [SolverConfig::smooth_l1(), SolverConfig::pnorm(1.01)] {
            let r = solve_gd(&a, &y, &cfg);
            assert!(r.alpha_star.values.iter().all(|v| *v == 0.0));
            assert!(r.converged);
        }
    }

    fn solve_gd(a: &DMatrix<f64>, y: &DVector<f64>, cfg: &SolverConfig) -> ReconstructionResult {
        match cfg.kind {
            SolverKind::SmoothL1Gd => smooth_l1_gd(a, y, cfg).unwrap(),
            _ => pnorm_gd(a, y, cfg).unwrap(),
        }
    }

    #[test]
    fn planted_support_small_instances() {
        let mut cfg = SolverConfig::smooth_l1();
        cfg.continuation = true;
        let hits = (0..10)
            .filter(|seed| {
                let (a, y, support) = planted(16, 8, 2, 100 * seed);
                solve_gd(&a, &y, &cfg).relative_support(1e-2) == support
            })
            .count();
        assert!(hits >= 8, "{hits}");
    }

    #[test]
    fn pnorm_planted_support() {
        // the p-norm minimizer is dense, so threshold relative to the peak
        let (a, y, support) = planted(16, 8, 2, 0);
        let r = solve_gd(&a, &y, &SolverConfig::pnorm(1.05));
        assert_eq!(r.relative_support(0.1), support);
    }

    #[test]
    fn backtracking_never_increases_objective() {
        for seed in 0..4 {
            let (a, y, _) = planted(32, 12, 3, seed);
            let mut cfg = SolverConfig::smooth_l1();
            cfg.continuation = true;
            cfg.max_iters = 300;
            let r = solve_gd(&a, &y, &cfg);
            assert_eq!(r.stage_offsets.len(), 3);
            assert!(monotone_within_stages(&r));
            let r = solve_gd(&a, &y, &SolverConfig::pnorm(1.2));
            assert!(monotone_within_stages(&r));
        }
    }

    #[test]
    fn fixed_step_descends() {
        let (a, y, _) = planted(32, 12, 3, 9);
        let mut cfg = SolverConfig::smooth_l1();
        cfg.step_rule = StepRule::FixedLipschitz;
        cfg.max_iters = 500;
        let r = solve_gd(&a, &y, &cfg);
        assert!(monotone_within_stages(&r));
        assert!(r.objective_trace.last().unwrap() < &r.objective_trace[0]);
    }

    #[test]
    fn continuation_shrinks_epsilon() {
        let (a, y, _) = planted(16, 8, 2, 5);
        let mut cfg = SolverConfig::smooth_l1();
        cfg.epsilon = Some(0.1);
        cfg.continuation = true;
        let r = solve_gd(&a, &y, &cfg);
        assert!((r.epsilon.unwrap() - 1e-3).abs() < 1e-15);
        assert_eq!(r.stage_offsets[0], 0);
        assert!(r.stage_offsets.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn defaults_scale_with_correlation() {
        let (a, y, _) = planted(16, 8, 2, 5);
        let r = solve_gd(&a, &y, &SolverConfig::smooth_l1());
        let scale = a.tr_mul(&y).amax();
        assert!((r.lambda.unwrap() - 1e-3 * scale).abs() <= 1e-15 * scale);
        assert!((r.epsilon.unwrap() - 1e-3 * scale).abs() <= 1e-15 * scale);
    }

    #[test]
    fn lambda_path_drives_residual_down() {
        let (a, y, _) = planted(32, 12, 2, 21);
        let cfg = SolverConfig::smooth_l1();
        let s = correlation_scale(&a, &y);
        let path = lambda_path(&a, &y, &cfg, &[1e-2 * s, 1e-4 * s, 1e-6 * s]).unwrap();
        assert!(path.windows(2).all(|w| w[1].residual_norm < w[0].residual_norm));
        assert!(path[2].residual_norm <= 1e-4 * y.norm());
        assert!(lambda_path(&a, &y, &cfg, &[0.0]).is_err());
        assert!(lambda_path(&a, &y, &SolverConfig::omp(), &[1.0]).is_err());
    }

    #[test]
    fn rejects_mismatched_configs() {
        let (a, y, _) = planted(16, 8, 2, 5);
        assert!(smooth_l1_gd(&a, &y, &SolverConfig::pnorm(1.1)).is_err());
        assert!(pnorm_gd(&a, &y, &SolverConfig::smooth_l1()).is_err());
        let mut cfg = SolverConfig::pnorm(1.1);
        cfg.step_rule = StepRule::FixedLipschitz;
        assert!(pnorm_gd(&a, &y, &cfg).is_err());
        let err = pnorm_gd(&a, &y, &SolverConfig::pnorm(0.9)).unwrap_err().to_string();
        assert!(err.contains("p must exceed 1"), "{err}");
        assert!(smooth_l1_gd(&a, &DVector::zeros(7), &SolverConfig::smooth_l1()).is_err());
    }
}
