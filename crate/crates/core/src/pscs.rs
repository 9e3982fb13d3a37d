//! Parallel segmented compressive sensing.
//!
//! The grid signal is cut into `num_segments` windowed segments of
//! `segment_len` samples (adjacent segments share `overlap` samples). Each
//! segment is fed to `F` parallel fingers; a finger multiplies the segment by
//! its own ±1 chips and integrates, yielding one scalar. Measurements are
//! stacked segment-major: `y[m·F + f]` is segment `m` seen by finger `f`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::demodulator::{make_chips, ChippingSequence};
use crate::error::{check_dim, CsError, Result};
use crate::io::fmt_f64;
use crate::model::{Basis, SignalVector};
use crate::sensing::{MeasurementOperator, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Rectangular,
    /// Triangle with nonzero end points, `w[j] = 1 − |2j − (len−1)| / len`
    /// for even `len` and `1 − |2j − (len−1)| / (len+1)` for odd `len`.
    Triangular,
}

impl WindowKind {
    pub fn taps(&self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Rectangular => vec![1.0; len],
            WindowKind::Triangular => {
                let denom = if len.is_multiple_of(2) { len } else { len + 1 } as f64;
                (0..len)
                    .map(|j| 1.0 - ((2 * j) as f64 - (len as f64 - 1.0)).abs() / denom)
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowPlan {
    pub num_segments: usize,
    pub segment_len: usize,
    pub overlap: usize,
    #[serde(default = "default_window")]
    pub window_kind: WindowKind,
}

fn default_window() -> WindowKind {
    WindowKind::Rectangular
}

impl WindowPlan {
    /// Non-overlapping rectangular plan of `num_segments` equal pieces of `n`.
    pub fn contiguous(n: usize, num_segments: usize) -> Result<Self> {
        if num_segments == 0 || !n.is_multiple_of(num_segments) {
            return Err(CsError::invalid(format!(
                "{num_segments} segments do not evenly divide n={n}"
            )));
        }
        let plan = Self {
            num_segments,
            segment_len: n / num_segments,
            overlap: 0,
            window_kind: WindowKind::Rectangular,
        };
        plan.validate(n)?;
        Ok(plan)
    }

    pub fn hop(&self) -> usize {
        self.segment_len - self.overlap
    }

    pub fn start(&self, segment: usize) -> usize {
        segment * self.hop()
    }

    /// Grid length the plan covers.
    pub fn span(&self) -> usize {
        (self.num_segments - 1) * self.hop() + self.segment_len
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.num_segments == 0 || self.segment_len == 0 {
            return Err(CsError::invalid(
                "window plan needs at least one segment of nonzero length",
            ));
        }
        if self.overlap >= self.segment_len {
            return Err(CsError::invalid(format!(
                "overlap {} must be smaller than segment length {}",
                self.overlap, self.segment_len
            )));
        }
        if self.span() != n {
            return Err(CsError::invalid(format!(
                "window plan covers {} samples but the signal has {n}",
                self.span()
            )));
        }
        Ok(())
    }
}

/// How a finger's chips relate across segments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChipLayout {
    /// Finger `f` applies the same `segment_len` chips, drawn from
    /// `chip_seeds[f]`, to every segment. With a Fourier basis and segments
    /// tiling the period, atoms whose frequencies agree modulo the segment
    /// count then get identical cross-segment phases, which hurts recovery.
    Repeated,
    /// Finger `f` runs one `n`-chip sequence from `chip_seeds[f]` across the
    /// whole grid; each segment sees the chips under its own samples.
    #[default]
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerBank {
    pub fingers_per_segment: usize,
    pub chip_seeds: Vec<u64>,
    #[serde(default)]
    pub chip_layout: ChipLayout,
}

impl FingerBank {
    /// `fingers` fingers with seeds `base_seed, base_seed + 1, …`.
    pub fn sequential(fingers: usize, base_seed: u64) -> Self {
        Self {
            fingers_per_segment: fingers,
            chip_seeds: (0..fingers as u64).map(|f| base_seed.wrapping_add(f)).collect(),
            chip_layout: ChipLayout::Continuous,
        }
    }

    pub fn with_layout(mut self, layout: ChipLayout) -> Self {
        self.chip_layout = layout;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.fingers_per_segment == 0 {
            return Err(CsError::invalid("finger bank needs at least one finger"));
        }
        check_dim(
            "finger bank chip seeds",
            self.fingers_per_segment,
            self.chip_seeds.len(),
        )?;
        let mut seen = self.chip_seeds.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(CsError::invalid("finger chip seeds must be pairwise distinct"));
        }
        Ok(())
    }
}

/// Window plan plus realized chips for every (segment, finger) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PscsSensor {
    plan: WindowPlan,
    n: usize,
    fingers: usize,
    window: Vec<f64>,
    /// `chips[m * fingers + f]` has `segment_len` entries.
    chips: Vec<ChippingSequence>,
    /// Seed of the first finger, recorded on the operator.
    seed: u64,
}

impl PscsSensor {
    pub fn new(plan: WindowPlan, bank: &FingerBank, n: usize) -> Result<Self> {
        plan.validate(n)?;
        bank.validate()?;
        let fingers = bank.fingers_per_segment;
        let mut chips = Vec::with_capacity(plan.num_segments * fingers);
        match bank.chip_layout {
            ChipLayout::Repeated => {
                let per_finger = bank
                    .chip_seeds
                    .iter()
                    .map(|s| make_chips(plan.segment_len, *s))
                    .collect::<Result<Vec<_>>>()?;
                for _ in 0..plan.num_segments {
                    chips.extend(per_finger.iter().cloned());
                }
            }
            ChipLayout::Continuous => {
                let global = bank
                    .chip_seeds
                    .iter()
                    .map(|s| make_chips(n, *s))
                    .collect::<Result<Vec<_>>>()?;
                for m in 0..plan.num_segments {
                    for g in &global {
                        chips.push(g.slice(plan.start(m), plan.segment_len));
                    }
                }
            }
        }
        Self::assemble(plan, n, fingers, chips, bank.chip_seeds[0])
    }

    /// Explicit chips, indexed `[segment][finger]`.
    pub fn with_chips(plan: WindowPlan, n: usize, chips: Vec<Vec<ChippingSequence>>) -> Result<Self> {
        plan.validate(n)?;
        check_dim("pscs chip segments", plan.num_segments, chips.len())?;
        let fingers = chips.first().map_or(0, Vec::len);
        if fingers == 0 {
            return Err(CsError::invalid("finger bank needs at least one finger"));
        }
        let mut flat = Vec::with_capacity(plan.num_segments * fingers);
        for seg in chips {
            check_dim("pscs fingers per segment", fingers, seg.len())?;
            for c in seg {
                check_dim("pscs finger chips", plan.segment_len, c.len())?;
                flat.push(c);
            }
        }
        let seed = flat[0].seed().unwrap_or(0);
        Self::assemble(plan, n, fingers, flat, seed)
    }

    fn assemble(plan: WindowPlan, n: usize, fingers: usize, chips: Vec<ChippingSequence>, seed: u64) -> Result<Self> {
        Ok(Self {
            window: plan.window_kind.taps(plan.segment_len),
            plan,
            n,
            fingers,
            chips,
            seed,
        })
    }

    pub fn plan(&self) -> &WindowPlan {
        &self.plan
    }

    pub fn fingers(&self) -> usize {
        self.fingers
    }

    pub fn measurement_count(&self) -> usize {
        self.plan.num_segments * self.fingers
    }

    pub fn chips(&self, segment: usize, finger: usize) -> &ChippingSequence {
        &self.chips[segment * self.fingers + finger]
    }

    pub fn acquire(&self, x: &SignalVector) -> Result<DVector<f64>> {
        check_dim("acquire_pscs", self.n, x.n())?;
        Ok(self.acquire_slice(x.samples.as_slice()))
    }

    fn acquire_slice(&self, x: &[f64]) -> DVector<f64> {
        let len = self.plan.segment_len;
        DVector::from_fn(self.measurement_count(), |row, _| {
            let m = row / self.fingers;
            let chips = &self.chips[row];
            let start = self.plan.start(m);
            (0..len)
                .map(|j| chips.value(j) * self.window[j] * x[start + j])
                .sum()
        })
    }
}

/// Splits `x` into windowed segments.
pub fn window_signal(x: &SignalVector, plan: &WindowPlan) -> Result<Vec<DVector<f64>>> {
    plan.validate(x.n())?;
    let w = plan.window_kind.taps(plan.segment_len);
    Ok((0..plan.num_segments)
        .map(|m| {
            let start = plan.start(m);
            DVector::from_fn(plan.segment_len, |j, _| w[j] * x.samples[start + j])
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PscsMeasurement {
    pub y_joint: DVector<f64>,
    pub plan: WindowPlan,
    pub fingers_per_segment: usize,
}

impl PscsMeasurement {
    pub fn value(&self, segment: usize, finger: usize) -> f64 {
        self.y_joint[segment * self.fingers_per_segment + finger]
    }

    /// Measurements of one segment, `Y_m`.
    pub fn segment(&self, segment: usize) -> DVector<f64> {
        let f = self.fingers_per_segment;
        self.y_joint.rows(segment * f, f).into_owned()
    }

    /// `(segment, finger, value)` triples in storage order.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let f = self.fingers_per_segment;
        self.y_joint
            .iter()
            .enumerate()
            .map(move |(i, v)| (i / f, i % f, *v))
    }

    /// `segment,finger,value` CSV text.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("segment,finger,value\n");
        for (m, f, v) in self.rows() {
            let _ = writeln!(out, "{m},{f},{}", fmt_f64(v));
        }
        out
    }
}

pub fn acquire_pscs(x: &SignalVector, plan: &WindowPlan, bank: &FingerBank) -> Result<PscsMeasurement> {
    let sensor = PscsSensor::new(*plan, bank, x.n())?;
    Ok(PscsMeasurement {
        y_joint: sensor.acquire(x)?,
        plan: *plan,
        fingers_per_segment: sensor.fingers,
    })
}

/// Joint reconstruction matrix: column `i` is the sensor's response to `ψ_i`.
pub fn build_pscs_matrix(basis: &Basis, sensor: &PscsSensor) -> Result<MeasurementOperator> {
    check_dim("build_pscs_matrix", sensor.n, basis.n())?;
    let n = basis.n();
    let mut matrix = DMatrix::zeros(sensor.measurement_count(), n);
    for i in 0..n {
        let col = sensor.acquire_slice(basis.matrix().column(i).as_slice());
        matrix.set_column(i, &col);
    }
    MeasurementOperator::from_matrix(matrix, Provenance::Pscs, sensor.seed, Some(basis.meta()))
}

/// Rows of a joint PSCS matrix that belong to one segment.
pub fn segment_rows(matrix: &DMatrix<f64>, fingers: usize, segment: usize) -> DMatrix<f64> {
    matrix.rows(segment * fingers, fingers).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_basis, BasisKind};

    fn ones(len: usize) -> ChippingSequence {
        ChippingSequence::from_chips(vec![1; len]).unwrap()
    }

    #[test]
    fn single_rectangular_segment_is_identity() {
        let x = SignalVector::from_vec(vec![1.0, -2.0, 0.5, 4.0, 3.0]).unwrap();
        let plan = WindowPlan::contiguous(5, 1).unwrap();
        let segs = window_signal(&x, &plan).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0], x.samples);
    }

    #[test]
    fn overlapping_segments() {
        let x = SignalVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let plan = WindowPlan {
            num_segments: 2,
            segment_len: 4,
            overlap: 2,
            window_kind: WindowKind::Rectangular,
        };
        let segs = window_signal(&x, &plan).unwrap();
        assert_eq!(segs[0].as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(segs[1].as_slice(), &[3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn triangular_window_on_constant_input() {
        let x = SignalVector::from_vec(vec![1.0; 4]).unwrap();
        let plan = WindowPlan {
            num_segments: 1,
            segment_len: 4,
            overlap: 0,
            window_kind: WindowKind::Triangular,
        };
        let segs = window_signal(&x, &plan).unwrap();
        assert_eq!(segs[0].as_slice(), WindowKind::Triangular.taps(4).as_slice());
        assert_eq!(WindowKind::Triangular.taps(4), vec![0.25, 0.75, 0.75, 0.25]);
        assert_eq!(WindowKind::Triangular.taps(3), vec![0.5, 1.0, 0.5]);
    }

    #[test]
    fn plan_must_tile() {
        let x = SignalVector::zeros(7);
        let plan = WindowPlan {
            num_segments: 2,
            segment_len: 4,
            overlap: 2,
            window_kind: WindowKind::Rectangular,
        };
        assert!(window_signal(&x, &plan).is_err());
        let bad = WindowPlan { overlap: 4, ..plan };
        assert!(bad.validate(4).is_err());
        assert!(WindowPlan::contiguous(10, 3).is_err());
    }

    #[test]
    fn bank_validation() {
        assert!(FingerBank::sequential(0, 1).validate().is_err());
        let mut b = FingerBank::sequential(3, 1);
        b.chip_seeds[2] = 1;
        assert!(b.validate().is_err());
        b.chip_seeds.pop();
        assert!(b.validate().is_err());
    }

    #[test]
    fn zero_input_and_plain_integration() {
        let plan = WindowPlan::contiguous(8, 2).unwrap();
        let m = acquire_pscs(&SignalVector::zeros(8), &plan, &FingerBank::sequential(3, 4)).unwrap();
        assert_eq!(m.y_joint.len(), 6);
        assert!(m.y_joint.iter().all(|v| *v == 0.0));

        let x = SignalVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let plan = WindowPlan::contiguous(4, 1).unwrap();
        let s = PscsSensor::with_chips(plan, 4, vec![vec![ones(4)]]).unwrap();
        assert_eq!(s.acquire(&x).unwrap().as_slice(), &[10.0]);
    }

    #[test]
    fn identity_matrix_single_row_of_ones() {
        let plan = WindowPlan::contiguous(6, 1).unwrap();
        let s = PscsSensor::with_chips(plan, 6, vec![vec![ones(6)]]).unwrap();
        let id = make_basis(BasisKind::Identity, 6, 0).unwrap();
        // a single row is L=1 < N=6
        let op = build_pscs_matrix(&id, &s).unwrap();
        assert_eq!(op.matrix().as_slice(), &[1.0; 6]);
        assert_eq!(op.provenance(), Provenance::Pscs);
    }

    #[test]
    fn layout_is_segment_major() {
        let plan = WindowPlan::contiguous(16, 4).unwrap();
        let bank = FingerBank::sequential(2, 100);
        let sensor = PscsSensor::new(plan, &bank, 16).unwrap();
        let mut x = SignalVector::zeros(16);
        // impulse inside segment 2 only
        x.samples[9] = 1.0;
        let y = sensor.acquire(&x).unwrap();
        for (row, v) in y.iter().enumerate() {
            let (m, f) = (row / 2, row % 2);
            if m == 2 {
                assert_eq!(*v, sensor.chips(2, f).value(1));
            } else {
                assert_eq!(*v, 0.0);
            }
        }
        let meas = acquire_pscs(&x, &plan, &bank).unwrap();
        assert_eq!(meas.segment(2), y.rows(4, 2).into_owned());
        let triples: Vec<_> = meas.rows().collect();
        assert_eq!(triples[5], (2, 1, meas.value(2, 1)));
        let csv = meas.to_csv();
        assert!(csv.starts_with("segment,finger,value\n0,0,"));
        assert_eq!(csv.lines().count(), 1 + y.len());
    }

    #[test]
    fn chip_layouts() {
        let plan = WindowPlan::contiguous(12, 3).unwrap();
        let bank = FingerBank::sequential(2, 7).with_layout(ChipLayout::Repeated);
        let s = PscsSensor::new(plan, &bank, 12).unwrap();
        assert_eq!(s.chips(0, 1), s.chips(2, 1));
        assert_ne!(s.chips(0, 0), s.chips(0, 1));
        let c = PscsSensor::new(plan, &FingerBank::sequential(2, 7), 12).unwrap();
        let global = make_chips(12, 8).unwrap();
        assert_eq!(c.chips(2, 1).chips(), &global.chips()[8..12]);
    }

    #[test]
    fn too_many_measurements_rejected() {
        let plan = WindowPlan::contiguous(8, 2).unwrap();
        let s = PscsSensor::new(plan, &FingerBank::sequential(4, 0), 8).unwrap();
        let id = make_basis(BasisKind::Identity, 8, 0).unwrap();
        assert!(build_pscs_matrix(&id, &s).is_err());
    }
}
