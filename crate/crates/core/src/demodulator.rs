//! Serial random demodulator.
//!
//! The grid signal is multiplied by a ±1 chipping sequence (one chip per
//! grid sample), filtered, and sampled once every `m` grid samples. Output
//! sample `k` (0-based) is read at grid index `t_k = (k + 1)·m − 1`, the
//! last sample of block `k`:
//!
//! ```text
//! y[k] = Σ_j h[j] · p[t_k − j] · x[t_k − j]      (zero outside 0..n)
//! ```
//!
//! With integrate-and-dump (`h` = `m` ones) this is the block sum
//! `Σ_{j=k·m}^{(k+1)·m−1} p[j]·x[j]`. The pipeline is linear, so it is
//! equivalent to an `L × N` matrix `V` whose column `i` is the pipeline's
//! response to basis signal `ψ_i`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, CsError, Result};
use crate::model::{Basis, BasisMeta, CoefficientVector, SignalVector};
use crate::rng::seeded;
use crate::sensing::{MeasurementOperator, Provenance};
use crate::solvers::{self, ReconstructionResult, SolverConfig};

/// Pseudo-random ±1 sequence `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChippingSequence {
    chips: Vec<i8>,
    seed: Option<u64>,
}

impl ChippingSequence {
    /// Wraps explicit chips; every entry must be +1 or −1.
    pub fn from_chips(chips: Vec<i8>) -> Result<Self> {
        if chips.is_empty() {
            return Err(CsError::invalid("chipping sequence must be nonempty"));
        }
        if let Some(bad) = chips.iter().find(|c| **c != 1 && **c != -1) {
            return Err(CsError::invalid(format!("chip value {bad} is not ±1")));
        }
        Ok(Self { chips, seed: None })
    }

    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn slice(&self, start: usize, len: usize) -> ChippingSequence {
        ChippingSequence {
            chips: self.chips[start..start + len].to_vec(),
            seed: None,
        }
    }

    pub(crate) fn value(&self, i: usize) -> f64 {
        f64::from(self.chips[i])
    }
}

pub fn make_chips(n: usize, seed: u64) -> Result<ChippingSequence> {
    if n == 0 {
        return Err(CsError::invalid("chipping sequence length must be at least 1"));
    }
    let mut rng = seeded(seed);
    let chips = (0..n)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    Ok(ChippingSequence {
        chips,
        seed: Some(seed),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    IntegrateAndDump,
    Fir,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DemodFilter {
    /// Sums the `m` samples of each output block.
    IntegrateAndDump,
    /// Causal FIR impulse response `h[0..]`.
    Fir(Vec<f64>),
}

impl DemodFilter {
    pub fn kind(&self) -> FilterKind {
        match self {
            DemodFilter::IntegrateAndDump => FilterKind::IntegrateAndDump,
            DemodFilter::Fir(_) => FilterKind::Fir,
        }
    }

    /// Impulse response; integrate-and-dump is `m` ones.
    pub fn taps(&self, m: usize) -> Vec<f64> {
        match self {
            DemodFilter::IntegrateAndDump => vec![1.0; m],
            DemodFilter::Fir(taps) => taps.clone(),
        }
    }
}

/// Serializable demodulator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemodConfig {
    /// Nyquist-grid length.
    pub n: usize,
    /// Decimation factor: grid samples per output sample.
    pub m: usize,
    pub filter_kind: FilterKind,
    /// FIR impulse response, required iff `filter_kind` is `fir`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taps: Option<Vec<f64>>,
    pub chip_seed: u64,
}

impl DemodConfig {
    pub fn integrate_and_dump(n: usize, m: usize, chip_seed: u64) -> Self {
        Self {
            n,
            m,
            filter_kind: FilterKind::IntegrateAndDump,
            taps: None,
            chip_seed,
        }
    }

    pub fn fir(n: usize, m: usize, taps: Vec<f64>, chip_seed: u64) -> Self {
        Self {
            n,
            m,
            filter_kind: FilterKind::Fir,
            taps: Some(taps),
            chip_seed,
        }
    }

    /// Number of output samples `L = n / m`.
    pub fn l(&self) -> usize {
        self.n / self.m
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(CsError::invalid("grid length n must be at least 1"));
        }
        if self.m < 2 {
            return Err(CsError::invalid(format!(
                "decimation factor must be at least 2 so that L < n (got m={})",
                self.m
            )));
        }
        if !self.n.is_multiple_of(self.m) {
            return Err(CsError::invalid(format!(
                "decimation factor m={} does not divide n={}",
                self.m, self.n
            )));
        }
        self.filter().map(|_| ())
    }

    pub fn filter(&self) -> Result<DemodFilter> {
        match (self.filter_kind, &self.taps) {
            (FilterKind::IntegrateAndDump, None) => Ok(DemodFilter::IntegrateAndDump),
            (FilterKind::IntegrateAndDump, Some(_)) => Err(CsError::invalid(
                "taps are only accepted with filter_kind \"fir\"",
            )),
            (FilterKind::Fir, None) => Err(CsError::invalid("fir filter requires taps")),
            (FilterKind::Fir, Some(taps)) => {
                if taps.is_empty() {
                    return Err(CsError::invalid("fir taps must be nonempty"));
                }
                if taps.iter().any(|t| !t.is_finite()) {
                    return Err(CsError::invalid("fir taps must be finite"));
                }
                Ok(DemodFilter::Fir(taps.clone()))
            }
        }
    }
}

/// A configured demodulator with its realized chipping sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SerialDemodulator {
    config: DemodConfig,
    filter: DemodFilter,
    chips: ChippingSequence,
}

impl SerialDemodulator {
    /// Draws the chips from `config.chip_seed`.
    pub fn new(config: DemodConfig) -> Result<Self> {
        config.validate()?;
        let chips = make_chips(config.n, config.chip_seed)?;
        Self::with_chips(config, chips)
    }

    pub fn with_chips(config: DemodConfig, chips: ChippingSequence) -> Result<Self> {
        config.validate()?;
        check_dim("demodulator chips", config.n, chips.len())?;
        let filter = config.filter()?;
        Ok(Self {
            config,
            filter,
            chips,
        })
    }

    pub fn config(&self) -> &DemodConfig {
        &self.config
    }

    pub fn chips(&self) -> &ChippingSequence {
        &self.chips
    }

    pub fn l(&self) -> usize {
        self.config.l()
    }

    pub fn acquire(&self, x: &SignalVector) -> Result<DVector<f64>> {
        check_dim("acquire_serial", self.config.n, x.n())?;
        Ok(self.acquire_slice(x.samples.as_slice()))
    }

    fn acquire_slice(&self, x: &[f64]) -> DVector<f64> {
        let m = self.config.m;
        let l = self.config.l();
        match &self.filter {
            DemodFilter::IntegrateAndDump => DVector::from_fn(l, |k, _| {
                (k * m..(k + 1) * m)
                    .map(|j| self.chips.value(j) * x[j])
                    .sum()
            }),
            DemodFilter::Fir(taps) => DVector::from_fn(l, |k, _| {
                let t = (k + 1) * m - 1;
                taps.iter()
                    .enumerate()
                    .take(t + 1)
                    .map(|(j, h)| h * self.chips.value(t - j) * x[t - j])
                    .sum()
            }),
        }
    }
}

/// Runs the chip/filter/sample pipeline on `x`, drawing chips from the config.
pub fn acquire_serial(x: &SignalVector, config: &DemodConfig) -> Result<DVector<f64>> {
    SerialDemodulator::new(config.clone())?.acquire(x)
}

/// Equivalent matrix of the demodulator acting on basis coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct VMatrix {
    pub matrix: DMatrix<f64>,
    pub config: DemodConfig,
    pub basis_meta: BasisMeta,
}

impl VMatrix {
    pub fn l(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn to_operator(&self) -> Result<MeasurementOperator> {
        MeasurementOperator::from_matrix(
            self.matrix.clone(),
            Provenance::Demodulator,
            self.config.chip_seed,
            Some(self.basis_meta),
        )
    }
}

/// `V[k, i]` = pipeline output `k` for input `ψ_i`.
pub fn build_v_matrix(basis: &Basis, demod: &SerialDemodulator) -> Result<VMatrix> {
    check_dim("build_v_matrix", demod.config.n, basis.n())?;
    let n = basis.n();
    let mut matrix = DMatrix::zeros(demod.l(), n);
    for i in 0..n {
        let col = demod.acquire_slice(basis.matrix().column(i).as_slice());
        matrix.set_column(i, &col);
    }
    Ok(VMatrix {
        matrix,
        config: demod.config.clone(),
        basis_meta: basis.meta(),
    })
}

#[derive(Debug, Clone)]
pub struct SerialReconstruction {
    pub alpha: CoefficientVector,
    pub signal: SignalVector,
    pub result: ReconstructionResult,
}

/// Solves for `α*` from `y = Vα` and returns it with `x* = Ψα*`.
pub fn reconstruct_serial(
    y: &DVector<f64>,
    v: &VMatrix,
    basis: &Basis,
    solver: &SolverConfig,
) -> Result<SerialReconstruction> {
    check_dim("reconstruct_serial", v.l(), y.len())?;
    if basis.meta() != v.basis_meta {
        return Err(CsError::invalid(
            "basis does not match the one the V matrix was built from",
        ));
    }
    let result = solvers::solve(&v.matrix, y, solver)?;
    let alpha = result.alpha_star.clone();
    let signal = crate::model::synthesize(basis, &alpha)?;
    Ok(SerialReconstruction {
        alpha,
        signal,
        result,
    })
}
