use nalgebra::{DMatrix, DVector};

use super::{residual_norm, ReconstructionResult, Termination};
use crate::error::{check_dim, CsError, Result};
use crate::model::CoefficientVector;

/// Active-set pivots below this fraction of the largest active column norm
/// mark the least-squares problem as rank deficient.
const PIVOT_TOL: f64 = 1e-12;

/// Orthogonal matching pursuit.
///
/// Each step picks the unused column with the largest normalized correlation
/// `|a_jᵀr| / ‖a_j‖` (ties go to the lowest index), re-solves least squares
/// on the active set via QR and updates the residual. Stops when
/// `‖r‖₂ ≤ residual_tol` or after `k_max` atoms.
pub fn omp(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    k_max: usize,
    residual_tol: f64,
) -> Result<ReconstructionResult> {
    let (rows, n) = a.shape();
    check_dim("omp", rows, y.len())?;
    if k_max == 0 || k_max > rows {
        return Err(CsError::invalid(format!(
            "k_max must be in 1..={rows}, got {k_max}"
        )));
    }
    if residual_tol.is_nan() || residual_tol <= 0.0 {
        return Err(CsError::invalid("residual_tol must be positive"));
    }

    let col_norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let mut active: Vec<usize> = Vec::with_capacity(k_max);
    let mut used = vec![false; n];
    let mut coef = DVector::<f64>::zeros(0);
    let mut residual = y.clone();
    let mut rnorm = residual.norm();
    let mut objective_trace = vec![0.5 * rnorm * rnorm];
    let mut residual_trace = vec![rnorm];

    let termination = loop {
        if rnorm <= residual_tol {
            break Termination::ResidualTolerance;
        }
        if active.len() == k_max {
            break Termination::MaxAtoms;
        }

        let corr = a.tr_mul(&residual);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if used[j] || col_norms[j] == 0.0 {
                continue;
            }
            let c = corr[j].abs() / col_norms[j];
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((j, c));
            }
        }
        let Some((j, _)) = best.filter(|(_, c)| *c > 0.0) else {
            break Termination::NoCorrelation;
        };

        active.push(j);
        let sub = a.select_columns(&active);
        match least_squares(&sub, y, &active, &col_norms) {
            Some(x) => {
                used[j] = true;
                coef = x;
                residual = y - &sub * &coef;
                rnorm = residual.norm();
                objective_trace.push(0.5 * rnorm * rnorm);
                residual_trace.push(rnorm);
            }
            None => {
                active.pop();
                break Termination::Degenerate;
            }
        }
    };

    let mut alpha = DVector::zeros(n);
    for (slot, &j) in active.iter().enumerate() {
        alpha[j] = coef[slot];
    }
    let residual_norm = residual_norm(a, &alpha, y);
    Ok(ReconstructionResult {
        alpha_star: CoefficientVector { values: alpha },
        residual_norm,
        iterations: active.len(),
        converged: termination == Termination::ResidualTolerance,
        termination,
        objective_trace,
        residual_trace,
        stage_offsets: vec![0],
        lambda: None,
        epsilon: None,
    })
}

/// Least squares on the active columns by Householder QR; `None` when a
/// pivot of `R` is negligible.
fn least_squares(
    sub: &DMatrix<f64>,
    y: &DVector<f64>,
    active: &[usize],
    col_norms: &[f64],
) -> Option<DVector<f64>> {
    let scale = active.iter().map(|j| col_norms[*j]).fold(0.0, f64::max);
    let qr = sub.clone().qr();
    let r = qr.r();
    if r.diagonal().iter().any(|d| d.abs() <= PIVOT_TOL * scale) {
        return None;
    }
    let qty = qr.q().tr_mul(y);
    r.solve_upper_triangular(&qty)
}
