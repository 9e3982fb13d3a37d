//! Discrete compressive measurement `y = Φf + η` and the composed operator
//! `ΦΨ` acting directly on basis coefficients.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, CsError, Result};
use crate::model::{Basis, BasisMeta, CoefficientVector, SignalVector};
use crate::rng::seeded;

/// Singular values at or below this (relative to `max(1, σ_max)`) count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Regeneration attempts before giving up on a full-row-rank draw.
const MAX_RANK_RETRIES: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementKind {
    /// i.i.d. `N(0, 1/L)` entries.
    Gaussian,
    /// i.i.d. `±1/√L` entries with equal probability.
    Bernoulli,
}

impl std::str::FromStr for MeasurementKind {
    type Err = CsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(MeasurementKind::Gaussian),
            "bernoulli" => Ok(MeasurementKind::Bernoulli),
            other => Err(CsError::invalid(format!(
                "unknown measurement kind {other:?} (expected gaussian or bernoulli)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Gaussian,
    Bernoulli,
    Demodulator,
    Pscs,
}

impl From<MeasurementKind> for Provenance {
    fn from(kind: MeasurementKind) -> Self {
        match kind {
            MeasurementKind::Gaussian => Provenance::Gaussian,
            MeasurementKind::Bernoulli => Provenance::Bernoulli,
        }
    }
}

/// An `L × N` linear measurement operator with `L < N`.
///
/// When `composed` is set the operator maps basis coefficients (it already
/// includes `Ψ`); otherwise it maps grid signals.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOperator {
    matrix: DMatrix<f64>,
    provenance: Provenance,
    seed: u64,
    composed: Option<BasisMeta>,
}

/// JSON sidecar describing a serialized operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorMeta {
    pub kind: Provenance,
    pub l: usize,
    pub n: usize,
    pub seed: u64,
    pub noise_sigma: f64,
    /// Basis folded into the operator, if any.
    pub composed: Option<BasisMeta>,
}

impl MeasurementOperator {
    /// Wraps an externally built matrix (demodulator, PSCS, or loaded from disk).
    pub fn from_matrix(
        matrix: DMatrix<f64>,
        provenance: Provenance,
        seed: u64,
        composed: Option<BasisMeta>,
    ) -> Result<Self> {
        let (l, n) = matrix.shape();
        if l == 0 {
            return Err(CsError::invalid("operator needs at least one row"));
        }
        if l >= n {
            return Err(CsError::invalid(format!(
                "measurement count must satisfy L < N (got L={l}, N={n})"
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(CsError::invalid("operator has non-finite entries"));
        }
        Ok(Self {
            matrix,
            provenance,
            seed,
            composed,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn l(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Seed that actually produced the matrix (after any rank retries).
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn composed_with(&self) -> Option<BasisMeta> {
        self.composed
    }

    pub fn meta(&self, noise_sigma: f64) -> OperatorMeta {
        OperatorMeta {
            kind: self.provenance,
            l: self.l(),
            n: self.n(),
            seed: self.seed,
            noise_sigma,
            composed: self.composed,
        }
    }

    pub fn rank(&self) -> usize {
        numerical_rank(&self.matrix)
    }

    /// Mutual coherence diagnostic: largest `|⟨φ_r/‖φ_r‖, ψ_c⟩|` over rows
    /// of this operator and columns of `basis`.
    pub fn coherence(&self, basis: &Basis) -> Result<f64> {
        check_dim("coherence", self.n(), basis.n())?;
        let mut worst = 0.0f64;
        for r in 0..self.l() {
            let row = self.matrix.row(r);
            let norm = row.norm();
            if norm == 0.0 {
                continue;
            }
            let proj = row * basis.matrix();
            worst = worst.max(proj.amax() / norm);
        }
        Ok(worst)
    }
}

pub(crate) fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().singular_values();
    let scale = sv.iter().cloned().fold(1.0f64, f64::max);
    sv.iter().filter(|s| **s > RANK_TOL * scale).count()
}

pub fn make_measurement_matrix(
    kind: MeasurementKind,
    l: usize,
    n: usize,
    seed: u64,
) -> Result<MeasurementOperator> {
    if l == 0 || l >= n {
        return Err(CsError::invalid(format!(
            "measurement count must satisfy 1 <= L < N (got L={l}, N={n})"
        )));
    }
    let scale = 1.0 / (l as f64).sqrt();
    for attempt in 0..MAX_RANK_RETRIES {
        let s = seed.wrapping_add(attempt);
        let mut rng = seeded(s);
        let matrix = match kind {
            MeasurementKind::Gaussian => {
                DMatrix::from_fn(l, n, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
            }
            MeasurementKind::Bernoulli => DMatrix::from_fn(l, n, |_, _| {
                if rng.random::<bool>() {
                    scale
                } else {
                    -scale
                }
            }),
        };
        if numerical_rank(&matrix) == l {
            return MeasurementOperator::from_matrix(matrix, kind.into(), s, None);
        }
    }
    Err(CsError::invalid(format!(
        "no full-row-rank {kind:?} matrix found for L={l}, N={n} after {MAX_RANK_RETRIES} seeds"
    )))
}

/// Measurements together with everything that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionRecord {
    pub y: DVector<f64>,
    pub operator: MeasurementOperator,
    pub basis_meta: Option<BasisMeta>,
    pub noise_sigma: f64,
    pub noise_seed: u64,
}

fn apply_with_noise(
    op: &MeasurementOperator,
    x: &DVector<f64>,
    noise_sigma: f64,
    seed: u64,
) -> Result<DVector<f64>> {
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(CsError::invalid(format!(
            "noise sigma must be a nonnegative finite number, got {noise_sigma}"
        )));
    }
    let mut y = op.matrix() * x;
    add_noise(&mut y, noise_sigma, seed);
    Ok(y)
}

/// Adds seeded i.i.d. `N(0, σ²)` noise in place; a no-op when `σ = 0`.
pub fn add_noise(y: &mut DVector<f64>, noise_sigma: f64, seed: u64) {
    if noise_sigma > 0.0 {
        let mut rng = seeded(seed);
        for v in y.iter_mut() {
            *v += noise_sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
}

/// `y = Φf + η`, `η ~ N(0, σ²I)`; `η = 0` exactly when `σ = 0`.
pub fn measure(
    op: &MeasurementOperator,
    f: &SignalVector,
    noise_sigma: f64,
    seed: u64,
) -> Result<AcquisitionRecord> {
    check_dim("measure", op.n(), f.n())?;
    let y = apply_with_noise(op, &f.samples, noise_sigma, seed)?;
    Ok(AcquisitionRecord {
        y,
        operator: op.clone(),
        basis_meta: op.composed_with(),
        noise_sigma,
        noise_seed: seed,
    })
}

/// Measures coefficients directly through a composed operator `ΦΨ`.
pub fn measure_coefficients(
    op: &MeasurementOperator,
    alpha: &CoefficientVector,
    noise_sigma: f64,
    seed: u64,
) -> Result<AcquisitionRecord> {
    if op.composed_with().is_none() {
        return Err(CsError::invalid(
            "measure_coefficients requires an operator composed with a basis",
        ));
    }
    check_dim("measure_coefficients", op.n(), alpha.n())?;
    let y = apply_with_noise(op, &alpha.values, noise_sigma, seed)?;
    Ok(AcquisitionRecord {
        y,
        operator: op.clone(),
        basis_meta: op.composed_with(),
        noise_sigma,
        noise_seed: seed,
    })
}

/// `ΦΨ`, keeping the provenance and seed of `Φ`.
pub fn compose(op: &MeasurementOperator, basis: &Basis) -> Result<MeasurementOperator> {
    check_dim("compose", op.n(), basis.n())?;
    if op.composed_with().is_some() {
        return Err(CsError::invalid("operator is already composed with a basis"));
    }
    Ok(MeasurementOperator {
        matrix: op.matrix() * basis.matrix(),
        provenance: op.provenance,
        seed: op.seed,
        composed: Some(basis.meta()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_basis, BasisKind};

    #[test]
    fn bernoulli_entries_are_scaled_signs() {
        let op = make_measurement_matrix(MeasurementKind::Bernoulli, 2, 4, 3).unwrap();
        for v in op.matrix().iter() {
            assert!((v.abs() - 0.7071067811865475).abs() < 1e-16);
        }
    }

    #[test]
    fn gaussian_variance_matches_one_over_l() {
        let op = make_measurement_matrix(MeasurementKind::Gaussian, 32, 256, 5).unwrap();
        let m = op.matrix();
        let count = m.len() as f64;
        let mean = m.sum() / count;
        let var = m.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
        let target = 1.0 / 32.0;
        assert!(var >= 0.7 * target && var <= 1.3 * target, "var={var}");
    }

    #[test]
    fn square_and_empty_rejected() {
        assert!(make_measurement_matrix(MeasurementKind::Gaussian, 4, 4, 1).is_err());
        assert!(make_measurement_matrix(MeasurementKind::Gaussian, 5, 4, 1).is_err());
        assert!(make_measurement_matrix(MeasurementKind::Bernoulli, 0, 4, 1).is_err());
    }

    #[test]
    fn generated_matrices_have_full_row_rank() {
        for seed in 0..20 {
            let op = make_measurement_matrix(MeasurementKind::Bernoulli, 3, 5, seed).unwrap();
            assert_eq!(op.rank(), 3);
        }
    }

    #[test]
    fn measure_zero_and_spike() {
        let op = make_measurement_matrix(MeasurementKind::Bernoulli, 2, 4, 3).unwrap();
        let rec = measure(&op, &SignalVector::zeros(4), 0.0, 0).unwrap();
        assert!(rec.y.iter().all(|v| *v == 0.0));
        let mut spike = SignalVector::zeros(4);
        spike.samples[1] = 1.0;
        let rec = measure(&op, &spike, 0.0, 0).unwrap();
        assert_eq!(rec.y, op.matrix().column(1).into_owned());
        assert!(measure(&op, &SignalVector::zeros(5), 0.0, 0).is_err());
        assert!(measure(&op, &spike, -1.0, 0).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let op = make_measurement_matrix(MeasurementKind::Gaussian, 8, 16, 1).unwrap();
        let f = SignalVector::zeros(16);
        let a = measure(&op, &f, 0.1, 9).unwrap();
        let b = measure(&op, &f, 0.1, 9).unwrap();
        assert_eq!(a.y, b.y);
        assert!(a.y.amax() > 0.0);
    }

    #[test]
    fn compose_with_identity_is_exact() {
        let op = make_measurement_matrix(MeasurementKind::Gaussian, 5, 9, 2).unwrap();
        let id = make_basis(BasisKind::Identity, 9, 0).unwrap();
        let c = compose(&op, &id).unwrap();
        assert_eq!(c.matrix(), op.matrix());
        assert_eq!(c.provenance(), Provenance::Gaussian);
        assert_eq!(c.composed_with(), Some(id.meta()));
        assert!(compose(&c, &id).is_err());
    }

    #[test]
    fn compose_preserves_row_norms() {
        let op = make_measurement_matrix(MeasurementKind::Bernoulli, 2, 4, 3).unwrap();
        let psi = make_basis(BasisKind::RandomOrthonormal, 4, 1).unwrap();
        let c = compose(&op, &psi).unwrap();
        for r in 0..2 {
            assert!((c.matrix().row(r).norm() - op.matrix().row(r).norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn coherence_is_bounded() {
        let op = make_measurement_matrix(MeasurementKind::Gaussian, 16, 64, 4).unwrap();
        let psi = make_basis(BasisKind::DftReal, 64, 0).unwrap();
        let mu = op.coherence(&psi).unwrap();
        assert!(mu > 0.0 && mu <= 1.0 + 1e-12);
        // a row of the identity is maximally coherent with the identity basis
        let mut m = DMatrix::zeros(1, 4);
        m[(0, 2)] = 3.0;
        let op = MeasurementOperator::from_matrix(m, Provenance::Gaussian, 0, None).unwrap();
        let id = make_basis(BasisKind::Identity, 4, 0).unwrap();
        assert_eq!(op.coherence(&id).unwrap(), 1.0);
    }
}
