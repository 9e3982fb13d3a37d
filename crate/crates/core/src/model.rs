//! Signals, sparse coefficient vectors and orthonormal synthesis bases.
//!
//! A signal `f` of length `n` lives on the Nyquist grid and is synthesized
//! from a coefficient vector `α` as `f = Ψα`, where the columns of the
//! square orthonormal matrix `Ψ` are the discretized basis signals.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, CsError, Result};
use crate::rng::seeded;

/// Largest tolerated entry of `|ΨᵀΨ − I|`.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Identity,
    /// Real orthonormal Fourier basis: DC, then interleaved cosine/sine
    /// pairs by increasing frequency, then the alternating Nyquist column
    /// when `n` is even.
    DftReal,
    /// Q factor of a seeded Gaussian matrix.
    RandomOrthonormal,
}

impl std::str::FromStr for BasisKind {
    type Err = CsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(BasisKind::Identity),
            "dft_real" => Ok(BasisKind::DftReal),
            "random_orthonormal" => Ok(BasisKind::RandomOrthonormal),
            other => Err(CsError::invalid(format!(
                "unknown basis kind {other:?} (expected identity, dft_real or random_orthonormal)"
            ))),
        }
    }
}

/// Everything needed to regenerate a [`Basis`] bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisMeta {
    pub kind: BasisKind,
    pub n: usize,
    pub seed: u64,
}

impl BasisMeta {
    pub fn build(&self) -> Result<Basis> {
        make_basis(self.kind, self.n, self.seed)
    }
}

/// Square orthonormal synthesis basis; column `i` is the basis signal `ψ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    matrix: DMatrix<f64>,
    kind: BasisKind,
    seed: u64,
}

impl Basis {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn meta(&self) -> BasisMeta {
        BasisMeta {
            kind: self.kind,
            n: self.n(),
            seed: self.seed,
        }
    }

    /// Basis signal `ψ_i` as a grid signal.
    pub fn atom(&self, i: usize) -> SignalVector {
        SignalVector {
            samples: self.matrix.column(i).into_owned(),
        }
    }

    /// Maximum entry of `|ΨᵀΨ − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        gram_error(&self.matrix)
    }

    /// Coefficients of `f` in this basis, `Ψᵀf`.
    pub fn analyze(&self, f: &SignalVector) -> Result<CoefficientVector> {
        check_dim("analyze", self.n(), f.n())?;
        Ok(CoefficientVector {
            values: self.matrix.tr_mul(&f.samples),
        })
    }
}

pub(crate) fn gram_error(m: &DMatrix<f64>) -> f64 {
    let gram = m.tr_mul(m);
    let n = gram.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Coefficient vector `α` of a signal in some basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub values: DVector<f64>,
}

impl CoefficientVector {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(CsError::invalid("coefficient vector must be nonempty"));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: DVector::zeros(n),
        }
    }

    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        Self::new(DVector::from_vec(values))
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn sparsity(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    /// Indices of exactly-nonzero entries, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Nyquist-grid samples of a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalVector {
    pub samples: DVector<f64>,
}

impl SignalVector {
    pub fn new(samples: DVector<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(CsError::invalid("signal must be nonempty"));
        }
        Ok(Self { samples })
    }

    pub fn from_vec(samples: Vec<f64>) -> Result<Self> {
        Self::new(DVector::from_vec(samples))
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            samples: DVector::zeros(n),
        }
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparsityProfile {
    pub k: usize,
    /// Inclusive `[low, high]` range of nonzero magnitudes.
    pub amplitude_range: [f64; 2],
    /// Draw an independent fair sign for each nonzero.
    pub sign_symmetric: bool,
}

impl SparsityProfile {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(CsError::invalid("k must be at least 1"));
        }
        if self.k > n {
            return Err(CsError::invalid(format!(
                "k exceeds n (k={}, n={n})",
                self.k
            )));
        }
        let [low, high] = self.amplitude_range;
        if !(low.is_finite() && high.is_finite()) || low > high {
            return Err(CsError::invalid(format!(
                "amplitude range [{low}, {high}] is empty"
            )));
        }
        if low <= 0.0 {
            return Err(CsError::invalid(format!(
                "amplitude range must be strictly positive, got low={low}"
            )));
        }
        Ok(())
    }
}

impl Default for SparsityProfile {
    fn default() -> Self {
        Self {
            k: 1,
            amplitude_range: [1.0, 2.0],
            sign_symmetric: true,
        }
    }
}

pub fn make_basis(kind: BasisKind, n: usize, seed: u64) -> Result<Basis> {
    if n == 0 {
        return Err(CsError::invalid("basis dimension must be at least 1"));
    }
    let matrix = match kind {
        BasisKind::Identity => DMatrix::identity(n, n),
        BasisKind::DftReal => dft_real(n),
        BasisKind::RandomOrthonormal => random_orthonormal(n, seed),
    };
    Ok(Basis { matrix, kind, seed })
}

fn dft_real(n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    let dc = 1.0 / nf.sqrt();
    let pair = (2.0 / nf).sqrt();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        m[(j, 0)] = dc;
    }
    let pairs = (n - 1) / 2;
    for k in 1..=pairs {
        for j in 0..n {
            // reduce k·j mod n before scaling so large grids keep full accuracy
            let theta = 2.0 * PI * ((k * j) % n) as f64 / nf;
            m[(j, 2 * k - 1)] = pair * theta.cos();
            m[(j, 2 * k)] = pair * theta.sin();
        }
    }
    if n.is_multiple_of(2) && n > 1 {
        for j in 0..n {
            m[(j, n - 1)] = if j % 2 == 0 { dc } else { -dc };
        }
    }
    m
}

fn random_orthonormal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = seeded(seed);
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let (mut q, r) = g.qr().unpack();
    // sign-fix so the factorization is unique
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Draws a `k`-sparse coefficient vector: support uniform over all
/// `k`-subsets, magnitudes uniform over the profile's amplitude range.
pub fn sample_sparse_coefficients(
    profile: &SparsityProfile,
    n: usize,
    seed: u64,
) -> Result<CoefficientVector> {
    profile.validate(n)?;
    let mut rng = seeded(seed);
    let mut support = index::sample(&mut rng, n, profile.k).into_vec();
    support.sort_unstable();
    let [low, high] = profile.amplitude_range;
    let mut values = DVector::zeros(n);
    for &i in &support {
        let mag: f64 = rng.random_range(low..=high);
        let sign = if profile.sign_symmetric && rng.random::<bool>() {
            -1.0
        } else {
            1.0
        };
        values[i] = sign * mag;
    }
    Ok(CoefficientVector { values })
}

/// `f = Ψα`.
pub fn synthesize(basis: &Basis, alpha: &CoefficientVector) -> Result<SignalVector> {
    check_dim("synthesize", basis.n(), alpha.n())?;
    Ok(SignalVector {
        samples: basis.matrix() * &alpha.values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_basis() {
        let b = make_basis(BasisKind::Identity, 4, 99).unwrap();
        assert_eq!(b.matrix(), &DMatrix::<f64>::identity(4, 4));
    }

    #[test]
    fn zero_dimension_rejected() {
        for kind in [BasisKind::Identity, BasisKind::DftReal, BasisKind::RandomOrthonormal] {
            assert!(make_basis(kind, 0, 1).is_err());
        }
    }

    #[test]
    fn dft_real_orthonormal_for_odd_and_even() {
        for n in [1, 2, 3, 8, 9, 64, 257] {
            let b = make_basis(BasisKind::DftReal, n, 0).unwrap();
            assert!(b.orthonormality_error() < ORTHONORMALITY_TOL, "n={n}");
        }
    }

    #[test]
    fn dft_real_column_layout() {
        let b = make_basis(BasisKind::DftReal, 8, 0).unwrap();
        let m = b.matrix();
        let s = 1.0 / 8f64.sqrt();
        for j in 0..8 {
            assert!((m[(j, 0)] - s).abs() < 1e-15);
            let alt = if j % 2 == 0 { s } else { -s };
            assert!((m[(j, 7)] - alt).abs() < 1e-15);
        }
        // first sine column starts at zero
        assert_eq!(m[(0, 2)], 0.0);
    }

    #[test]
    fn random_orthonormal_checked_and_reproducible() {
        let a = make_basis(BasisKind::RandomOrthonormal, 16, 42).unwrap();
        let b = make_basis(BasisKind::RandomOrthonormal, 16, 42).unwrap();
        let c = make_basis(BasisKind::RandomOrthonormal, 16, 43).unwrap();
        assert!(a.orthonormality_error() < ORTHONORMALITY_TOL);
        assert_eq!(a, b);
        assert_ne!(a.matrix(), c.matrix());
    }

    #[test]
    fn sparse_sampling_rejects_bad_profiles() {
        let mut p = SparsityProfile::new(0);
        assert!(sample_sparse_coefficients(&p, 4, 1).is_err());
        p.k = 5;
        assert!(sample_sparse_coefficients(&p, 4, 1)
            .unwrap_err()
            .to_string()
            .contains("k exceeds n"));
        p.k = 2;
        p.amplitude_range = [2.0, 1.0];
        assert!(sample_sparse_coefficients(&p, 4, 1).is_err());
        p.amplitude_range = [f64::NAN, 1.0];
        assert!(sample_sparse_coefficients(&p, 4, 1).is_err());
    }

    #[test]
    fn fully_dense_degenerate_profile() {
        let p = SparsityProfile {
            k: 4,
            amplitude_range: [1.0, 1.0],
            sign_symmetric: false,
        };
        let a = sample_sparse_coefficients(&p, 4, 123).unwrap();
        assert_eq!(a.values.as_slice(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn sparse_sampling_deterministic() {
        let p = SparsityProfile::new(2);
        let a = sample_sparse_coefficients(&p, 16, 7).unwrap();
        let b = sample_sparse_coefficients(&p, 16, 7).unwrap();
        assert_eq!(a.sparsity(), 2);
        assert_eq!(a, b);
        for v in a.values.iter().filter(|v| **v != 0.0) {
            assert!((1.0..=2.0).contains(&v.abs()));
        }
    }

    #[test]
    fn synthesize_cases() {
        let id = make_basis(BasisKind::Identity, 4, 0).unwrap();
        let alpha = CoefficientVector::from_vec(vec![0.0, 3.0, 0.0, 0.0]).unwrap();
        assert_eq!(synthesize(&id, &alpha).unwrap().samples, alpha.values);

        let b = make_basis(BasisKind::RandomOrthonormal, 8, 1).unwrap();
        let f = synthesize(&b, &CoefficientVector::zeros(8)).unwrap();
        assert!(f.samples.iter().all(|v| *v == 0.0));

        let mut spike = CoefficientVector::zeros(8);
        spike.values[3] = 1.0;
        let f = synthesize(&b, &spike).unwrap();
        assert_eq!(f.samples, b.matrix().column(3).into_owned());

        assert!(synthesize(&b, &CoefficientVector::zeros(4)).is_err());
    }

    #[test]
    fn analyze_inverts_synthesize() {
        for seed in 0..100u64 {
            let n = 4 + (seed as usize % 29);
            let kind = [BasisKind::Identity, BasisKind::DftReal, BasisKind::RandomOrthonormal]
                [seed as usize % 3];
            let b = make_basis(kind, n, seed).unwrap();
            let p = SparsityProfile::new(1 + seed as usize % n);
            let alpha = sample_sparse_coefficients(&p, n, seed + 1000).unwrap();
            let back = b.analyze(&synthesize(&b, &alpha).unwrap()).unwrap();
            assert!((back.values - &alpha.values).amax() < 1e-10);
        }
    }
}
