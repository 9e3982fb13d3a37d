use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use subnyquist::demodulator::{build_v_matrix, DemodConfig, FilterKind, SerialDemodulator};
use subnyquist::evaluation::{
    compare_energy, estimated_support, run_sweep, score, sweep_csv, EnergyModel, LabeledModel,
    CC2420_TX_0DBM_MA, CC2420_TX_MINUS_10DBM_MA,
};
use subnyquist::io::{self, extended_f64};
use subnyquist::model::{make_basis, sample_sparse_coefficients, synthesize};
use subnyquist::pscs::{build_pscs_matrix, FingerBank, PscsMeasurement, PscsSensor, WindowKind, WindowPlan};
use subnyquist::rng::derive_seed;
use subnyquist::sensing::{add_noise, compose, make_measurement_matrix, OperatorMeta};
use subnyquist::solvers::solve;
use subnyquist::{
    BasisKind, BasisMeta, CoefficientVector, MeasurementKind, MeasurementOperator, SignalVector,
    SolverConfig, SolverKind, SparsityProfile, Termination,
};

use crate::config::{DiscreteConfig, EnergyConfig, ExperimentConfig, GenerateConfig, PscsConfig, SerialConfig};
use crate::error::{CliError, CliResult};
use crate::{AcquireArgs, AcquireMode, Cli, Command, EnergyArgs, GenerateArgs, ReconstructArgs};

pub const SIGNAL_FILE: &str = "signal.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const BASIS_FILE: &str = "basis.json";
pub const CONFIG_FILE: &str = "config.json";
pub const MEASUREMENTS_FILE: &str = "measurements.csv";
pub const OPERATOR_FILE: &str = "operator.csv";
pub const OPERATOR_META_FILE: &str = "operator.json";

/// Planted coefficients written by `generate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truth {
    pub basis: BasisMeta,
    pub k: usize,
    pub seed: u64,
    pub coefficient_seed: u64,
    pub support: Vec<usize>,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct TruthMetrics {
    support_exact: bool,
    coeff_err_inf: f64,
    #[serde(with = "extended_f64")]
    reconstruction_snr_db: f64,
    true_support: Vec<usize>,
    estimated_support: Vec<usize>,
}

#[derive(Debug, Serialize)]
struct Metrics {
    solver: SolverKind,
    converged: bool,
    termination: Option<Termination>,
    iterations: usize,
    residual_norm: f64,
    relative_residual: f64,
    lambda: Option<f64>,
    epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    truth: Option<TruthMetrics>,
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let loaded = match &cli.config {
        Some(path) => Some(io::read_json::<ExperimentConfig>(path)?),
        None => None,
    };
    match &cli.command {
        Command::Generate(args) => generate(cli, args, loaded),
        Command::Acquire(args) => acquire(cli, args, loaded),
        Command::Reconstruct(args) => reconstruct(cli, args, loaded),
        Command::Sweep => sweep(cli, loaded),
        Command::Energy(args) => energy(cli, args, loaded),
    }
}

fn mode_mismatch(command: &str, cfg: &ExperimentConfig) -> CliError {
    CliError::usage(format!(
        "config mode {:?} cannot drive the {command} command",
        cfg.mode()
    ))
}

/// `--config` replaces mode flags; mixing the two is ambiguous.
fn reject_flags(given: &[(&str, bool)]) -> CliResult<()> {
    let names: Vec<&str> = given.iter().filter(|(_, set)| *set).map(|(n, _)| *n).collect();
    if names.is_empty() {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "--config cannot be combined with {}",
            names.join(", ")
        )))
    }
}

fn required<T>(value: Option<T>, flag: &str, command: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::usage(format!("{command} needs {flag} (or --config)")))
}

/// Parses a flag value by its JSON spelling, e.g. `dft_real`.
fn parse_name<T: DeserializeOwned>(flag: &str, value: &str) -> CliResult<T> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|e| CliError::usage(format!("invalid {flag} {value:?}: {e}")))
}

fn check_noise(sigma: f64) -> CliResult<()> {
    if sigma.is_finite() && sigma >= 0.0 {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "noise sigma must be a nonnegative finite number, got {sigma}"
        )))
    }
}

fn write_config(out: &Path, cfg: &ExperimentConfig) -> CliResult<()> {
    Ok(io::write_json(&out.join(CONFIG_FILE), cfg)?)
}

fn generate(cli: &Cli, args: &GenerateArgs, loaded: Option<ExperimentConfig>) -> CliResult<()> {
    let cfg = match loaded {
        Some(ExperimentConfig::Generate(cfg)) => {
            reject_flags(&[
                ("--seed", cli.seed.is_some()),
                ("--n", args.n.is_some()),
                ("--k", args.k.is_some()),
                ("--basis", args.basis.is_some()),
                ("--amp-min", args.amp_min.is_some()),
                ("--amp-max", args.amp_max.is_some()),
                ("--unsigned", args.unsigned),
            ])?;
            cfg
        }
        Some(other) => return Err(mode_mismatch("generate", &other)),
        None => {
            let defaults = SparsityProfile::default();
            GenerateConfig {
                n: required(args.n, "--n", "generate")?,
                k: required(args.k, "--k", "generate")?,
                basis: match &args.basis {
                    Some(b) => b.parse()?,
                    None => BasisKind::DftReal,
                },
                seed: cli.seed.unwrap_or(0),
                amplitude_range: [
                    args.amp_min.unwrap_or(defaults.amplitude_range[0]),
                    args.amp_max.unwrap_or(defaults.amplitude_range[1]),
                ],
                sign_symmetric: !args.unsigned,
            }
        }
    };

    let profile = SparsityProfile {
        k: cfg.k,
        amplitude_range: cfg.amplitude_range,
        sign_symmetric: cfg.sign_symmetric,
    };
    profile.validate(cfg.n)?;
    let basis = make_basis(cfg.basis, cfg.n, derive_seed(cfg.seed, 1))?;
    let coefficient_seed = derive_seed(cfg.seed, 2);
    let alpha = sample_sparse_coefficients(&profile, cfg.n, coefficient_seed)?;
    let x = synthesize(&basis, &alpha)?;

    let truth = Truth {
        basis: basis.meta(),
        k: cfg.k,
        seed: cfg.seed,
        coefficient_seed,
        support: alpha.support(),
        alpha: alpha.values.iter().copied().collect(),
    };
    let out = &cli.out;
    io::write_vector_csv(&out.join(SIGNAL_FILE), x.samples.as_slice())?;
    io::write_json(&out.join(TRUTH_FILE), &truth)?;
    io::write_json(&out.join(BASIS_FILE), &basis.meta())?;
    write_config(out, &ExperimentConfig::Generate(cfg.clone()))?;
    println!(
        "generated n={} k={} support={:?} in {}",
        cfg.n,
        cfg.k,
        truth.support,
        out.display()
    );
    Ok(())
}

fn acquire_config_from_flags(cli: &Cli, args: &AcquireArgs, n: usize) -> CliResult<ExperimentConfig> {
    let mode = required(args.mode, "--mode", "acquire")?;
    let seed = cli.seed.unwrap_or(0);
    let noise_sigma = args.noise_sigma.unwrap_or(0.0);
    let noise_seed = args.noise_seed.unwrap_or_else(|| derive_seed(seed, 4));
    let stray = |flags: &[(&str, bool)]| -> CliResult<()> {
        let names: Vec<&str> = flags.iter().filter(|(_, s)| *s).map(|(n, _)| *n).collect();
        if names.is_empty() {
            Ok(())
        } else {
            Err(CliError::usage(format!(
                "{} not valid with --mode {}",
                names.join(", "),
                mode.to_possible_value().expect("no skipped variants").get_name()
            )))
        }
    };
    let discrete_flags = [("--l", args.l.is_some()), ("--matrix-kind", args.matrix_kind.is_some())];
    let serial_flags = [
        ("--m", args.m.is_some()),
        ("--filter", args.filter.is_some()),
        ("--taps", args.taps.is_some()),
    ];
    let pscs_flags = [
        ("--segments", args.segments.is_some()),
        ("--fingers", args.fingers.is_some()),
        ("--overlap", args.overlap.is_some()),
        ("--window", args.window.is_some()),
        ("--chip-layout", args.chip_layout.is_some()),
    ];
    Ok(match mode {
        AcquireMode::Discrete => {
            stray(&serial_flags)?;
            stray(&pscs_flags)?;
            ExperimentConfig::Discrete(DiscreteConfig {
                l: required(args.l, "--l", "acquire --mode discrete")?,
                matrix_kind: match &args.matrix_kind {
                    Some(k) => k.parse()?,
                    None => MeasurementKind::Gaussian,
                },
                seed,
                noise_sigma,
                noise_seed,
            })
        }
        AcquireMode::Serial => {
            stray(&discrete_flags)?;
            stray(&pscs_flags)?;
            let m = required(args.m, "--m", "acquire --mode serial")?;
            let filter_kind = match &args.filter {
                Some(f) => parse_name("--filter", f)?,
                None if args.taps.is_some() => FilterKind::Fir,
                None => FilterKind::IntegrateAndDump,
            };
            ExperimentConfig::Serial(SerialConfig {
                demod: DemodConfig {
                    n,
                    m,
                    filter_kind,
                    taps: args.taps.clone(),
                    chip_seed: seed,
                },
                noise_sigma,
                noise_seed,
            })
        }
        AcquireMode::Pscs => {
            stray(&discrete_flags)?;
            stray(&serial_flags)?;
            let segments = required(args.segments, "--segments", "acquire --mode pscs")?;
            let fingers = required(args.fingers, "--fingers", "acquire --mode pscs")?;
            let overlap = args.overlap.unwrap_or(0);
            let window_kind = match &args.window {
                Some(w) => parse_name("--window", w)?,
                None => WindowKind::Rectangular,
            };
            let mut bank = FingerBank::sequential(fingers, seed);
            if let Some(layout) = &args.chip_layout {
                bank = bank.with_layout(parse_name("--chip-layout", layout)?);
            }
            ExperimentConfig::Pscs(PscsConfig {
                plan: plan_for(n, segments, overlap, window_kind)?,
                bank,
                noise_sigma,
                noise_seed,
            })
        }
    })
}

/// Segment length that makes `segments` windows with `overlap` tile `n`.
fn plan_for(n: usize, segments: usize, overlap: usize, window_kind: WindowKind) -> CliResult<WindowPlan> {
    if segments == 0 {
        return Err(CliError::usage("--segments must be at least 1"));
    }
    let covered = n + (segments - 1) * overlap;
    if !covered.is_multiple_of(segments) {
        return Err(CliError::usage(format!(
            "{segments} segments with overlap {overlap} cannot tile n={n} evenly"
        )));
    }
    let plan = WindowPlan {
        num_segments: segments,
        segment_len: covered / segments,
        overlap,
        window_kind,
    };
    plan.validate(n)?;
    Ok(plan)
}

fn acquire(cli: &Cli, args: &AcquireArgs, loaded: Option<ExperimentConfig>) -> CliResult<()> {
    let x = SignalVector::new(io::read_vector_csv(&args.input.join(SIGNAL_FILE))?)?;
    let basis_meta: BasisMeta = io::read_json(&args.input.join(BASIS_FILE))?;
    if basis_meta.n != x.n() {
        return Err(CliError::usage(format!(
            "basis.json has n={} but signal.csv has {} samples",
            basis_meta.n,
            x.n()
        )));
    }
    let basis = basis_meta.build()?;
    let n = x.n();

    let cfg = match loaded {
        Some(cfg @ (ExperimentConfig::Discrete(_) | ExperimentConfig::Serial(_) | ExperimentConfig::Pscs(_))) => {
            reject_flags(&[
                ("--seed", cli.seed.is_some()),
                ("--mode", args.mode.is_some()),
                ("--l", args.l.is_some()),
                ("--matrix-kind", args.matrix_kind.is_some()),
                ("--m", args.m.is_some()),
                ("--filter", args.filter.is_some()),
                ("--taps", args.taps.is_some()),
                ("--segments", args.segments.is_some()),
                ("--fingers", args.fingers.is_some()),
                ("--overlap", args.overlap.is_some()),
                ("--window", args.window.is_some()),
                ("--chip-layout", args.chip_layout.is_some()),
                ("--noise-sigma", args.noise_sigma.is_some()),
                ("--noise-seed", args.noise_seed.is_some()),
            ])?;
            cfg
        }
        Some(other) => return Err(mode_mismatch("acquire", &other)),
        None => acquire_config_from_flags(cli, args, n)?,
    };

    let (measurements, operator, noise_sigma): (String, MeasurementOperator, f64) = match &cfg {
        ExperimentConfig::Discrete(c) => {
            check_noise(c.noise_sigma)?;
            let phi = make_measurement_matrix(c.matrix_kind, c.l, n, c.seed)?;
            let mut y = phi.matrix() * &x.samples;
            add_noise(&mut y, c.noise_sigma, c.noise_seed);
            (io::vector_csv(y.as_slice()), compose(&phi, &basis)?, c.noise_sigma)
        }
        ExperimentConfig::Serial(c) => {
            check_noise(c.noise_sigma)?;
            if c.demod.n != n {
                return Err(CliError::usage(format!(
                    "demodulator configured for n={} but the signal has {n} samples",
                    c.demod.n
                )));
            }
            let demod = SerialDemodulator::new(c.demod.clone())?;
            let mut y = demod.acquire(&x)?;
            add_noise(&mut y, c.noise_sigma, c.noise_seed);
            let v = build_v_matrix(&basis, &demod)?;
            (io::vector_csv(y.as_slice()), v.to_operator()?, c.noise_sigma)
        }
        ExperimentConfig::Pscs(c) => {
            check_noise(c.noise_sigma)?;
            let sensor = PscsSensor::new(c.plan, &c.bank, n)?;
            let mut y = sensor.acquire(&x)?;
            add_noise(&mut y, c.noise_sigma, c.noise_seed);
            let measurement = PscsMeasurement {
                y_joint: y,
                plan: c.plan,
                fingers_per_segment: sensor.fingers(),
            };
            (measurement.to_csv(), build_pscs_matrix(&basis, &sensor)?, c.noise_sigma)
        }
        _ => unreachable!("acquire configs are filtered above"),
    };

    let out = &cli.out;
    io::write_text(&out.join(MEASUREMENTS_FILE), &measurements)?;
    io::write_matrix_csv(&out.join(OPERATOR_FILE), operator.matrix())?;
    io::write_json(&out.join(OPERATOR_META_FILE), &operator.meta(noise_sigma))?;
    // carry the planted coefficients along so reconstruct can score itself
    let truth = args.input.join(TRUTH_FILE);
    if truth.is_file() {
        io::write_text(&out.join(TRUTH_FILE), &io::read_text(&truth)?)?;
    }
    write_config(out, &cfg)?;
    println!(
        "acquired {} measurements of n={} ({}) in {}",
        operator.l(),
        n,
        cfg.mode(),
        out.display()
    );
    Ok(())
}

fn solver_config_from_flags(args: &ReconstructArgs) -> CliResult<SolverConfig> {
    let kind: SolverKind = match &args.solver {
        Some(s) => s.parse()?,
        None => SolverKind::Omp,
    };
    let mut cfg = SolverConfig {
        kind,
        ..SolverConfig::default()
    };
    if let Some(v) = args.kmax {
        cfg.k_max = Some(v);
    }
    if let Some(v) = args.tol {
        cfg.residual_tol = v;
    }
    if let Some(v) = args.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = args.p {
        cfg.p = v;
    }
    if let Some(s) = &args.step_rule {
        cfg.step_rule = parse_name("--step-rule", s)?;
    }
    cfg.epsilon = args.epsilon;
    cfg.lambda = args.lambda;
    cfg.continuation = args.continuation;
    Ok(cfg)
}

fn read_truth(path: &Path, n: usize) -> CliResult<Option<CoefficientVector>> {
    if !path.is_file() {
        eprintln!(
            "note: no truth file at {}; reporting residual metrics only",
            path.display()
        );
        return Ok(None);
    }
    let truth: Truth = io::read_json(path)?;
    if truth.alpha.len() != n {
        return Err(CliError::usage(format!(
            "truth has {} coefficients but the operator has {n} columns",
            truth.alpha.len()
        )));
    }
    Ok(Some(CoefficientVector::from_vec(truth.alpha)?))
}

fn reconstruct(cli: &Cli, args: &ReconstructArgs, loaded: Option<ExperimentConfig>) -> CliResult<()> {
    let cfg = match loaded {
        Some(ExperimentConfig::Reconstruct(cfg)) => {
            reject_flags(&[
                ("--seed", cli.seed.is_some()),
                ("--solver", args.solver.is_some()),
                ("--kmax", args.kmax.is_some()),
                ("--tol", args.tol.is_some()),
                ("--epsilon", args.epsilon.is_some()),
                ("--p", args.p.is_some()),
                ("--lambda", args.lambda.is_some()),
                ("--max-iters", args.max_iters.is_some()),
                ("--step-rule", args.step_rule.is_some()),
                ("--continuation", args.continuation),
            ])?;
            cfg
        }
        Some(other) => return Err(mode_mismatch("reconstruct", &other)),
        None => {
            if cli.seed.is_some() {
                return Err(CliError::usage("reconstruct is deterministic and takes no --seed"));
            }
            solver_config_from_flags(args)?
        }
    };
    cfg.validate()?;

    let y = io::read_vector_csv(&args.input.join(MEASUREMENTS_FILE))?;
    let a = io::read_matrix_csv(&args.input.join(OPERATOR_FILE))?;
    let meta: OperatorMeta = io::read_json(&args.input.join(OPERATOR_META_FILE))?;
    if a.shape() != (meta.l, meta.n) || y.len() != meta.l {
        return Err(CliError::usage(format!(
            "operator.json declares {}x{} but operator.csv is {}x{} with {} measurements",
            meta.l,
            meta.n,
            a.nrows(),
            a.ncols(),
            y.len()
        )));
    }
    let basis = meta
        .composed
        .ok_or_else(|| CliError::usage("operator.json has no composed basis; cannot map back to the signal grid"))?
        .build()?;
    let truth_path: PathBuf = args.truth.clone().unwrap_or_else(|| args.input.join(TRUTH_FILE));
    let alpha_true = read_truth(&truth_path, meta.n)?;

    let out = &cli.out;
    write_config(out, &ExperimentConfig::Reconstruct(cfg.clone()))?;
    let y_norm = y.norm();
    let relative = |r: f64| if y_norm > 0.0 { r / y_norm } else { r };

    let metrics = match solve(&a, &y, &cfg) {
        Ok(result) => {
            let xhat = synthesize(&basis, &result.alpha_star)?;
            io::write_vector_csv(&out.join("alpha_star.csv"), result.alpha_star.values.as_slice())?;
            io::write_vector_csv(&out.join("xhat.csv"), xhat.samples.as_slice())?;
            io::write_text(&out.join("trace.csv"), &result.trace_csv())?;
            let truth = match &alpha_true {
                Some(alpha) => {
                    let m = score(alpha, &result, &basis)?;
                    Some(TruthMetrics {
                        support_exact: m.support_exact,
                        coeff_err_inf: m.coeff_err_inf,
                        reconstruction_snr_db: m.reconstruction_snr_db,
                        true_support: alpha.support(),
                        estimated_support: estimated_support(&result.alpha_star.values),
                    })
                }
                None => None,
            };
            Metrics {
                solver: cfg.kind,
                converged: result.converged,
                termination: Some(result.termination),
                iterations: result.iterations,
                residual_norm: result.residual_norm,
                relative_residual: relative(result.residual_norm),
                lambda: result.lambda,
                epsilon: result.epsilon,
                error: None,
                truth,
            }
        }
        // a failed solve is a result: record it and exit cleanly
        Err(e) => Metrics {
            solver: cfg.kind,
            converged: false,
            termination: None,
            iterations: 0,
            residual_norm: y_norm,
            relative_residual: relative(y_norm),
            lambda: cfg.lambda,
            epsilon: cfg.epsilon,
            error: Some(e.to_string()),
            truth: None,
        },
    };
    io::write_json(&out.join("metrics.json"), &metrics)?;
    println!(
        "{}: converged={} iterations={} residual={:.3e}",
        serde_json::to_value(metrics.solver).expect("enum serializes").as_str().unwrap_or_default(), metrics.converged, metrics.iterations, metrics.residual_norm
    );
    Ok(())
}

fn sweep(cli: &Cli, loaded: Option<ExperimentConfig>) -> CliResult<()> {
    let mut spec = match loaded {
        Some(ExperimentConfig::Sweep(spec)) => spec,
        Some(other) => return Err(mode_mismatch("sweep", &other)),
        None => return Err(CliError::usage("sweep needs --config with mode \"sweep\"")),
    };
    if let Some(seed) = cli.seed {
        spec.base_seed = seed;
    }
    let spec = spec.resolved();
    spec.validate()?;
    let rows = run_sweep(&spec)?;
    io::write_text(&cli.out.join("sweep.csv"), &sweep_csv(&rows))?;
    write_config(&cli.out, &ExperimentConfig::Sweep(spec))?;
    println!("swept {} (k, l) cells into {}", rows.len(), cli.out.display());
    Ok(())
}

/// Radio settings used when no config is given.
fn default_models() -> Vec<LabeledModel> {
    vec![
        LabeledModel {
            label: "tx_0dbm".into(),
            model: EnergyModel::with_current(CC2420_TX_0DBM_MA),
        },
        LabeledModel {
            label: "tx_minus_10dbm".into(),
            model: EnergyModel::with_current(CC2420_TX_MINUS_10DBM_MA),
        },
    ]
}

fn energy(cli: &Cli, args: &EnergyArgs, loaded: Option<ExperimentConfig>) -> CliResult<()> {
    let cfg = match loaded {
        Some(ExperimentConfig::Energy(cfg)) => {
            reject_flags(&[
                ("--seed", cli.seed.is_some()),
                ("--n", args.n.is_some()),
                ("--l", args.l.is_some()),
            ])?;
            cfg
        }
        Some(other) => return Err(mode_mismatch("energy", &other)),
        None => EnergyConfig {
            n: required(args.n, "--n", "energy")?,
            l: required(args.l, "--l", "energy")?,
            models: default_models(),
            reference: None,
        },
    };
    let study = compare_energy(cfg.n, cfg.l, &cfg.models, cfg.reference.as_deref())?;
    let cfg = EnergyConfig {
        reference: Some(study.reference.clone()),
        ..cfg
    };
    io::write_json(&cli.out.join("energy.json"), &study)?;
    write_config(&cli.out, &ExperimentConfig::Energy(cfg))?;
    for c in &study.comparisons {
        println!(
            "{}: {:.6e} J per block, {:.4} of {}",
            c.label, c.report.compressed_energy_j, c.energy_ratio_to_reference, study.reference
        );
    }
    Ok(())
}
