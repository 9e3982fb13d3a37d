//! Recovery scoring, phase-transition sweeps and the transmit energy model.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demodulator::{build_v_matrix, DemodConfig, SerialDemodulator};
use crate::error::{check_dim, CsError, Result};
use crate::io::{extended_f64, fmt_f64};
use crate::model::{make_basis, sample_sparse_coefficients, synthesize, Basis, BasisKind, CoefficientVector, SparsityProfile};
use crate::pscs::{build_pscs_matrix, FingerBank, PscsSensor, WindowPlan};
use crate::rng::derive_seed;
use crate::sensing::{add_noise, compose, make_measurement_matrix, measure, MeasurementKind};
use crate::solvers::{self, support_above, ReconstructionResult, SolverConfig};

/// Estimated coefficients count as nonzero above this fraction of `max(1, max|α*|)`.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;
/// A sweep trial succeeds with exact support and `‖α* − α‖∞` below this.
pub const SUCCESS_COEFF_TOL: f64 = 1e-6;
/// Per-trial SNR is clipped here before averaging so exact recoveries
/// (infinite SNR) do not swamp the mean.
pub const SNR_MEAN_CEILING_DB: f64 = 300.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    pub support_exact: bool,
    pub coeff_err_inf: f64,
    /// `10·log10(‖x‖²/‖x − x*‖²)` in the signal domain; `"inf"` when exact.
    #[serde(with = "extended_f64")]
    pub reconstruction_snr_db: f64,
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
}

/// Thresholded support of an estimate, see [`SUPPORT_THRESHOLD`].
pub fn estimated_support(alpha: &DVector<f64>) -> Vec<usize> {
    support_above(alpha, SUPPORT_THRESHOLD * alpha.amax().max(1.0))
}

/// `10·log10(‖x‖²/‖x − x*‖²)`.
pub fn snr_db(x: &DVector<f64>, estimate: &DVector<f64>) -> f64 {
    let err = (x - estimate).norm_squared();
    let sig = x.norm_squared();
    if err == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (sig / err).log10()
    }
}

pub fn score(alpha_true: &CoefficientVector, result: &ReconstructionResult, basis: &Basis) -> Result<RecoveryMetrics> {
    check_dim("score", alpha_true.n(), result.alpha_star.n())?;
    check_dim("score basis", basis.n(), alpha_true.n())?;
    let est = &result.alpha_star.values;
    let x = synthesize(basis, alpha_true)?;
    let x_hat = synthesize(basis, &result.alpha_star)?;
    Ok(RecoveryMetrics {
        support_exact: estimated_support(est) == alpha_true.support(),
        coeff_err_inf: (est - &alpha_true.values).amax(),
        reconstruction_snr_db: snr_db(&x.samples, &x_hat.samples),
        iterations: result.iterations,
        residual_norm: result.residual_norm,
        converged: result.converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    /// Random `Φ` applied to the grid signal.
    Discrete,
    /// Random demodulator with integrate-and-dump, `m = n / l`.
    SerialDemod,
    /// Contiguous rectangular segments, `l / pscs_segments` fingers each.
    Pscs,
}

fn default_matrix_kind() -> MeasurementKind {
    MeasurementKind::Gaussian
}

fn default_amplitude() -> [f64; 2] {
    SparsityProfile::default().amplitude_range
}

fn default_true() -> bool {
    true
}

fn default_segments() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub n: usize,
    pub k_list: Vec<usize>,
    pub l_list: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub pipeline: Pipeline,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_matrix_kind")]
    pub matrix_kind: MeasurementKind,
    /// Sparsity basis; `None` picks identity for `discrete` and `dft_real`
    /// for the analog front ends.
    #[serde(default)]
    pub basis: Option<BasisKind>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude_range: [f64; 2],
    #[serde(default = "default_true")]
    pub sign_symmetric: bool,
    #[serde(default = "default_segments")]
    pub pscs_segments: usize,
}

impl SweepSpec {
    pub fn new(n: usize, k_list: Vec<usize>, l_list: Vec<usize>, trials: usize, base_seed: u64, pipeline: Pipeline) -> Self {
        Self {
            n,
            k_list,
            l_list,
            trials,
            base_seed,
            pipeline,
            solver: SolverConfig::default(),
            matrix_kind: default_matrix_kind(),
            basis: None,
            noise_sigma: 0.0,
            amplitude_range: default_amplitude(),
            sign_symmetric: true,
            pscs_segments: default_segments(),
        }
    }

    pub fn basis_kind(&self) -> BasisKind {
        self.basis.unwrap_or(match self.pipeline {
            Pipeline::Discrete => BasisKind::Identity,
            Pipeline::SerialDemod | Pipeline::Pscs => BasisKind::DftReal,
        })
    }

    /// The spec with every default made explicit.
    pub fn resolved(&self) -> Self {
        Self {
            basis: Some(self.basis_kind()),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(CsError::invalid("sweep needs n >= 2"));
        }
        if self.trials == 0 {
            return Err(CsError::invalid("trials must be at least 1"));
        }
        if self.k_list.is_empty() || self.l_list.is_empty() {
            return Err(CsError::invalid("k_list and l_list must be nonempty"));
        }
        for &k in &self.k_list {
            if k == 0 || k > self.n {
                return Err(CsError::invalid(format!("k={k} must be in 1..={}", self.n)));
            }
        }
        for &l in &self.l_list {
            if l == 0 || l >= self.n {
                return Err(CsError::invalid(format!(
                    "l={l} violates 1 <= L < N (N={})",
                    self.n
                )));
            }
            match self.pipeline {
                Pipeline::Discrete => {}
                Pipeline::SerialDemod => {
                    if !self.n.is_multiple_of(l) || self.n / l < 2 {
                        return Err(CsError::invalid(format!(
                            "serial demodulator needs l dividing n with n/l >= 2 (l={l}, n={})",
                            self.n
                        )));
                    }
                }
                Pipeline::Pscs => {
                    let s = self.pscs_segments;
                    if s == 0 || !self.n.is_multiple_of(s) || l % s != 0 {
                        return Err(CsError::invalid(format!(
                            "pscs needs {s} segments dividing both n={} and l={l}",
                            self.n
                        )));
                    }
                }
            }
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(CsError::invalid("noise_sigma must be nonnegative"));
        }
        SparsityProfile {
            k: 1,
            amplitude_range: self.amplitude_range,
            sign_symmetric: self.sign_symmetric,
        }
        .validate(self.n)?;
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: usize,
    pub l: usize,
    pub trials: usize,
    pub success_rate: f64,
    pub mean_snr_db: f64,
    pub mean_iters: f64,
}

pub const SWEEP_CSV_HEADER: &str = "k,l,trials,success_rate,mean_snr_db,mean_iters";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k,
            r.l,
            r.trials,
            fmt_f64(r.success_rate),
            fmt_f64(r.mean_snr_db),
            fmt_f64(r.mean_iters)
        );
    }
    out
}

/// Outcome of one seeded trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub success: bool,
    pub snr_db: f64,
    pub iterations: usize,
}

/// A planted problem `y = Aα + η` produced by one of the pipelines.
#[derive(Debug, Clone)]
pub struct Instance {
    pub basis: Basis,
    pub alpha: CoefficientVector,
    /// Operator acting on coefficients.
    pub a: DMatrix<f64>,
    pub y: DVector<f64>,
}

/// Builds the planted instance for trial seed `seed`. Sub-seeds for the
/// basis, coefficients, front end and noise are derived from it.
pub fn make_instance(spec: &SweepSpec, k: usize, l: usize, seed: u64) -> Result<Instance> {
    let n = spec.n;
    let basis = make_basis(spec.basis_kind(), n, derive_seed(seed, 1))?;
    let profile = SparsityProfile {
        k,
        amplitude_range: spec.amplitude_range,
        sign_symmetric: spec.sign_symmetric,
    };
    let alpha = sample_sparse_coefficients(&profile, n, derive_seed(seed, 2))?;
    let x = synthesize(&basis, &alpha)?;
    let front_seed = derive_seed(seed, 3);
    let noise_seed = derive_seed(seed, 4);
    let (a, y) = match spec.pipeline {
        Pipeline::Discrete => {
            let phi = make_measurement_matrix(spec.matrix_kind, l, n, front_seed)?;
            let rec = measure(&phi, &x, spec.noise_sigma, noise_seed)?;
            (compose(&phi, &basis)?.matrix().clone(), rec.y)
        }
        Pipeline::SerialDemod => {
            let demod = SerialDemodulator::new(DemodConfig::integrate_and_dump(n, n / l, front_seed))?;
            let mut y = demod.acquire(&x)?;
            add_noise(&mut y, spec.noise_sigma, noise_seed);
            (build_v_matrix(&basis, &demod)?.matrix, y)
        }
        Pipeline::Pscs => {
            let plan = WindowPlan::contiguous(n, spec.pscs_segments)?;
            let bank = FingerBank::sequential(l / spec.pscs_segments, front_seed);
            let sensor = PscsSensor::new(plan, &bank, n)?;
            let mut y = sensor.acquire(&x)?;
            add_noise(&mut y, spec.noise_sigma, noise_seed);
            (build_pscs_matrix(&basis, &sensor)?.matrix().clone(), y)
        }
    };
    Ok(Instance { basis, alpha, a, y })
}

/// Runs one trial; solver or setup failures count as an unsuccessful trial
/// with 0 dB (the SNR of the all-zero estimate).
pub fn run_trial(spec: &SweepSpec, k: usize, l: usize, seed: u64) -> TrialOutcome {
    let attempt = || -> Result<TrialOutcome> {
        let inst = make_instance(spec, k, l, seed)?;
        let res = solvers::solve(&inst.a, &inst.y, &spec.solver)?;
        let m = score(&inst.alpha, &res, &inst.basis)?;
        Ok(TrialOutcome {
            success: m.support_exact && m.coeff_err_inf < SUCCESS_COEFF_TOL,
            snr_db: m.reconstruction_snr_db,
            iterations: m.iterations,
        })
    };
    attempt().unwrap_or(TrialOutcome {
        success: false,
        snr_db: 0.0,
        iterations: 0,
    })
}

/// Success rate, mean SNR and mean iterations for every `(k, l)` pair in
/// lexicographic order. Trial `t` uses seed `base_seed + t`. Trials run in
/// parallel but are reduced in `(k, l, t)` order, so output is deterministic.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut ks = spec.k_list.clone();
    ks.sort_unstable();
    ks.dedup();
    let mut ls = spec.l_list.clone();
    ls.sort_unstable();
    ls.dedup();

    let jobs: Vec<(usize, usize, u64)> = ks
        .iter()
        .flat_map(|&k| ls.iter().map(move |&l| (k, l)))
        .flat_map(|(k, l)| (0..spec.trials as u64).map(move |t| (k, l, t)))
        .collect();
    let outcomes: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(k, l, t)| run_trial(spec, k, l, spec.base_seed.wrapping_add(t)))
        .collect();

    Ok(outcomes
        .chunks(spec.trials)
        .zip(ks.iter().flat_map(|&k| ls.iter().map(move |&l| (k, l))))
        .map(|(chunk, (k, l))| {
            let t = chunk.len() as f64;
            SweepRow {
                k,
                l,
                trials: chunk.len(),
                success_rate: chunk.iter().filter(|o| o.success).count() as f64 / t,
                mean_snr_db: chunk
                    .iter()
                    .map(|o| o.snr_db.min(SNR_MEAN_CEILING_DB))
                    .sum::<f64>()
                    / t,
                mean_iters: chunk.iter().map(|o| o.iterations as f64).sum::<f64>() / t,
            }
        })
        .collect())
}

/// CC2420 transmit current at 0 dBm output power.
pub const CC2420_TX_0DBM_MA: f64 = 17.4;
/// CC2420 transmit current at −10 dBm output power.
pub const CC2420_TX_MINUS_10DBM_MA: f64 = 11.0;

fn default_voltage() -> f64 {
    3.0
}

fn default_bitrate() -> f64 {
    250_000.0
}

fn default_bits() -> u32 {
    12
}

/// Radio transmit model: energy is current × voltage × airtime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyModel {
    pub current_ma: f64,
    #[serde(default = "default_voltage")]
    pub voltage_v: f64,
    #[serde(default = "default_bitrate")]
    pub bitrate_bps: f64,
    #[serde(default = "default_bits")]
    pub bits_per_sample: u32,
}

impl EnergyModel {
    /// Assumed supply and link defaults (3 V, 250 kbps, 12-bit samples) with
    /// the given transmit current.
    pub fn with_current(current_ma: f64) -> Self {
        Self {
            current_ma,
            voltage_v: default_voltage(),
            bitrate_bps: default_bitrate(),
            bits_per_sample: default_bits(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.current_ma) && ok(self.voltage_v) && ok(self.bitrate_bps)) || self.bits_per_sample == 0 {
            return Err(CsError::invalid("energy model fields must all be strictly positive"));
        }
        Ok(())
    }

    /// Transmit time for `samples` samples, in seconds.
    pub fn airtime_s(&self, samples: u64) -> f64 {
        samples as f64 * f64::from(self.bits_per_sample) / self.bitrate_bps
    }
}

/// Joules spent transmitting `samples_sent` samples.
pub fn estimate_energy(samples_sent: u64, model: &EnergyModel) -> Result<f64> {
    model.validate()?;
    Ok(model.current_ma / 1000.0 * model.voltage_v * model.airtime_s(samples_sent))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub n: usize,
    pub l: usize,
    pub compression_ratio: f64,
    pub raw_energy_j: f64,
    pub compressed_energy_j: f64,
    pub savings_fraction: f64,
    pub model: EnergyModel,
    pub assumptions: Vec<String>,
}

/// Energy per block of `n` raw samples versus `l` compressed measurements.
/// Processor energy spent on compression is not modeled.
pub fn rate_reduction_report(n: usize, l: usize, model: &EnergyModel) -> Result<RateReport> {
    if l == 0 || l >= n {
        return Err(CsError::invalid(format!(
            "compressed length must satisfy 1 <= l < n (got l={l}, n={n})"
        )));
    }
    let ratio = l as f64 / n as f64;
    Ok(RateReport {
        n,
        l,
        compression_ratio: ratio,
        raw_energy_j: estimate_energy(n as u64, model)?,
        compressed_energy_j: estimate_energy(l as u64, model)?,
        savings_fraction: 1.0 - ratio,
        model: *model,
        assumptions: vec![
            format!("supply voltage {} V", model.voltage_v),
            format!("radio bitrate {} bps", model.bitrate_bps),
            format!("{} bits per sample, no packet overhead", model.bits_per_sample),
            "radio transmit energy only; processor cost of compression excluded".to_string(),
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledModel {
    pub label: String,
    #[serde(flatten)]
    pub model: EnergyModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyComparison {
    pub label: String,
    pub report: RateReport,
    /// Compressed energy relative to the reference model's.
    pub energy_ratio_to_reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyStudy {
    pub reference: String,
    pub comparisons: Vec<EnergyComparison>,
}

/// Rate-reduction reports for several radio settings plus their energy
/// ratios against `reference` (the first model when `None`).
pub fn compare_energy(n: usize, l: usize, models: &[LabeledModel], reference: Option<&str>) -> Result<EnergyStudy> {
    let first = models
        .first()
        .ok_or_else(|| CsError::invalid("at least one energy model is required"))?;
    let reference = match reference {
        None => first,
        Some(name) => models
            .iter()
            .find(|m| m.label == name)
            .ok_or_else(|| CsError::invalid(format!("reference model {name:?} not found")))?,
    };
    let ref_energy = estimate_energy(l as u64, &reference.model)?;
    let comparisons = models
        .iter()
        .map(|m| {
            let report = rate_reduction_report(n, l, &m.model)?;
            Ok(EnergyComparison {
                label: m.label.clone(),
                energy_ratio_to_reference: report.compressed_energy_j / ref_energy,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnergyStudy {
        reference: reference.label.clone(),
        comparisons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::Termination;

    fn result_with(alpha: DVector<f64>) -> ReconstructionResult {
        ReconstructionResult {
            alpha_star: CoefficientVector { values: alpha },
            residual_norm: 0.0,
            iterations: 1,
            converged: true,
            termination: Termination::ResidualTolerance,
            objective_trace: vec![],
            residual_trace: vec![],
            stage_offsets: vec![0],
            lambda: None,
            epsilon: None,
        }
    }

    #[test]
    fn score_exact_and_zero_estimates() {
        let basis = make_basis(BasisKind::DftReal, 8, 0).unwrap();
        let truth = CoefficientVector::from_vec(vec![0.0, 1.5, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0]).unwrap();
        let m = score(&truth, &result_with(truth.values.clone()), &basis).unwrap();
        assert!(m.support_exact);
        assert_eq!(m.coeff_err_inf, 0.0);
        assert_eq!(m.reconstruction_snr_db, f64::INFINITY);

        let m = score(&truth, &result_with(DVector::zeros(8)), &basis).unwrap();
        assert!(!m.support_exact);
        assert_eq!(m.reconstruction_snr_db, 0.0);
        assert_eq!(m.coeff_err_inf, 2.0);
    }

    #[test]
    fn tiny_entries_do_not_count_as_support() {
        let truth = CoefficientVector::from_vec(vec![1.0, 0.0, 0.0]).unwrap();
        let basis = make_basis(BasisKind::Identity, 3, 0).unwrap();
        let est = DVector::from_vec(vec![1.0, 5e-7, 0.0]);
        assert!(score(&truth, &result_with(est), &basis).unwrap().support_exact);
        let est = DVector::from_vec(vec![1.0, 2e-6, 0.0]);
        assert!(!score(&truth, &result_with(est), &basis).unwrap().support_exact);
    }

    #[test]
    fn metrics_json_uses_inf_sentinel() {
        let m = RecoveryMetrics {
            support_exact: true,
            coeff_err_inf: 0.0,
            reconstruction_snr_db: f64::INFINITY,
            iterations: 2,
            residual_norm: 0.0,
            converged: true,
        };
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains(r#""reconstruction_snr_db":"inf""#));
        let back: RecoveryMetrics = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn energy_basics() {
        let model = EnergyModel::with_current(17.4);
        assert_eq!(estimate_energy(0, &model).unwrap(), 0.0);
        let e256 = estimate_energy(256, &model).unwrap();
        let e64 = estimate_energy(64, &model).unwrap();
        assert_eq!(e64 / e256, 0.25);
        let bad = EnergyModel {
            bits_per_sample: 0,
            ..model
        };
        assert!(estimate_energy(1, &bad).is_err());
        assert!(estimate_energy(1, &EnergyModel::with_current(-1.0)).is_err());
    }

    #[test]
    fn energy_hand_evaluation() {
        // 100 samples · 12 bit / 250 kbps = 4.8 ms; 17.4 mA · 3 V · 4.8 ms
        let model = EnergyModel::with_current(17.4);
        let r = rate_reduction_report(100, 50, &model).unwrap();
        assert!((r.raw_energy_j - 2.5056e-4).abs() < 1e-15);
        assert!((r.compressed_energy_j - 1.2528e-4).abs() < 1e-15);
        assert_eq!(r.compression_ratio, 0.5);
        assert_eq!(r.savings_fraction, 0.5);
    }

    #[test]
    fn report_rejects_expansion() {
        let model = EnergyModel::with_current(11.0);
        assert!(rate_reduction_report(64, 64, &model).is_err());
        assert!(rate_reduction_report(64, 0, &model).is_err());
        let r = rate_reduction_report(256, 64, &model).unwrap();
        assert_eq!(r.compression_ratio, 0.25);
        assert_eq!(r.savings_fraction, 0.75);
    }

    #[test]
    fn comparison_ratios() {
        let models = vec![
            LabeledModel {
                label: "0dBm".into(),
                model: EnergyModel::with_current(CC2420_TX_0DBM_MA),
            },
            LabeledModel {
                label: "-10dBm".into(),
                model: EnergyModel::with_current(CC2420_TX_MINUS_10DBM_MA),
            },
        ];
        let study = compare_energy(256, 64, &models, None).unwrap();
        assert_eq!(study.reference, "0dBm");
        assert_eq!(study.comparisons[0].energy_ratio_to_reference, 1.0);
        assert!((study.comparisons[1].energy_ratio_to_reference - 11.0 / 17.4).abs() < 1e-12);
        assert!(compare_energy(256, 64, &models, Some("5dBm")).is_err());
        assert!(compare_energy(256, 64, &[], None).is_err());
    }

    #[test]
    fn sweep_validation() {
        let mut s = SweepSpec::new(64, vec![2], vec![16], 1, 0, Pipeline::Discrete);
        assert!(s.validate().is_ok());
        s.l_list = vec![64];
        assert!(s.validate().is_err());
        s.l_list = vec![10];
        s.pipeline = Pipeline::SerialDemod;
        assert!(s.validate().is_err());
        s.pipeline = Pipeline::Pscs;
        assert!(s.validate().is_err());
        s.l_list = vec![16];
        assert!(s.validate().is_ok());
        s.k_list = vec![0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn sweep_rows_ordered_and_deterministic() {
        let spec = SweepSpec::new(32, vec![3, 1], vec![16, 8], 4, 11, Pipeline::Discrete);
        let a = run_sweep(&spec).unwrap();
        let keys: Vec<_> = a.iter().map(|r| (r.k, r.l)).collect();
        assert_eq!(keys, vec![(1, 8), (1, 16), (3, 8), (3, 16)]);
        assert_eq!(sweep_csv(&a), sweep_csv(&run_sweep(&spec).unwrap()));
        assert!(sweep_csv(&a).starts_with("k,l,trials,success_rate,mean_snr_db,mean_iters\n"));
    }

    #[test]
    fn all_pipelines_build_instances() {
        for pipeline in [Pipeline::Discrete, Pipeline::SerialDemod, Pipeline::Pscs] {
            let spec = SweepSpec::new(64, vec![2], vec![16], 1, 3, pipeline);
            let inst = make_instance(&spec, 2, 16, 3).unwrap();
            assert_eq!(inst.a.shape(), (16, 64));
            assert!(((&inst.a * &inst.alpha.values) - &inst.y).amax() < 1e-12);
        }
    }
}
