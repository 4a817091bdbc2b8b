//! Delay scans and their CSV form.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::table::read_columns;

/// Speed of light in µm/ps.
pub const SPEED_OF_LIGHT_UM_PER_PS: f64 = 299.792_458;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StagePass {
    /// Stage displacement equals the optical path change.
    #[default]
    Single,
    /// Retroreflector: optical path changes by twice the displacement.
    Double,
}

impl StagePass {
    pub fn factor(self) -> f64 {
        match self {
            StagePass::Single => 1.0,
            StagePass::Double => 2.0,
        }
    }
}

/// Conversion between stage position and relative photon delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayLine {
    pub pass: StagePass,
    /// Stage position of zero relative delay.
    pub zero_position_um: f64,
}

impl Default for DelayLine {
    fn default() -> Self {
        Self { pass: StagePass::Single, zero_position_um: 0.0 }
    }
}

impl DelayLine {
    pub fn new(pass: StagePass, zero_position_um: f64) -> Self {
        Self { pass, zero_position_um }
    }

    pub fn ps_per_um(&self) -> f64 {
        self.pass.factor() / SPEED_OF_LIGHT_UM_PER_PS
    }

    pub fn delay_ps(&self, stage_um: f64) -> f64 {
        (stage_um - self.zero_position_um) * self.ps_per_um()
    }

    pub fn stage_um(&self, delay_ps: f64) -> f64 {
        self.zero_position_um + delay_ps / self.ps_per_um()
    }

    /// Delays visited by a stage scan of `steps + 1` positions.
    pub fn stage_scan(&self, start_um: f64, step_um: f64, steps: usize) -> Vec<f64> {
        (0..=steps).map(|i| self.delay_ps(start_um + i as f64 * step_um)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Probability,
    Counts,
}

/// Coincidence values sampled on a strictly increasing delay axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayScan {
    pub delays_ps: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: ValueKind,
    pub normalized: bool,
    pub delay_line: DelayLine,
}

impl DelayScan {
    pub fn new(delays_ps: Vec<f64>, values: Vec<f64>, kind: ValueKind) -> Result<Self> {
        let scan = Self { delays_ps, values, kind, normalized: false, delay_line: DelayLine::default() };
        scan.validate()?;
        Ok(scan)
    }

    pub fn from_counts(delays_ps: Vec<f64>, counts: &[u64]) -> Result<Self> {
        Self::new(delays_ps, counts.iter().map(|&c| c as f64).collect(), ValueKind::Counts)
    }

    pub fn with_delay_line(mut self, line: DelayLine) -> Self {
        self.delay_line = line;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.delays_ps.len() != self.values.len() {
            return Err(Error::InvalidInput(format!(
                "{} delays but {} values",
                self.delays_ps.len(),
                self.values.len()
            )));
        }
        if self.delays_ps.iter().any(|d| !d.is_finite()) || self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry in delay scan".into()));
        }
        if self.delays_ps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("delays must be strictly increasing".into()));
        }
        if self.kind == ValueKind::Counts && self.values.iter().any(|&v| v < 0.0 || v.fract() != 0.0) {
            return Err(Error::InvalidInput("counts must be non-negative integers".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.delays_ps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays_ps.is_empty()
    }

    pub fn stage_positions_um(&self) -> Vec<f64> {
        self.delays_ps.iter().map(|&d| self.delay_line.stage_um(d)).collect()
    }

    /// Writes `delay_ps,stage_um,coincidences`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["delay_ps", "stage_um", "coincidences"])?;
        for (&d, &v) in self.delays_ps.iter().zip(&self.values) {
            let value = match self.kind {
                ValueKind::Counts => format!("{}", v as u64),
                ValueKind::Probability => format!("{v}"),
            };
            w.write_record([format!("{d}"), format!("{}", self.delay_line.stage_um(d)), value])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a scan written by [`DelayScan::write_csv`]. Integral,
    /// non-negative columns are read back as counts.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut cols = read_columns(reader, &["delay_ps", "stage_um", "coincidences"])?;
        let values = cols.pop().unwrap_or_default();
        let stages = cols.pop().unwrap_or_default();
        let delays = cols.pop().unwrap_or_default();
        let kind = if values.iter().all(|&v| v >= 0.0 && v.fract() == 0.0) {
            ValueKind::Counts
        } else {
            ValueKind::Probability
        };
        let mut scan = Self::new(delays, values, kind)?;
        if scan.len() >= 2 {
            let (d0, d1) = (scan.delays_ps[0], scan.delays_ps[scan.len() - 1]);
            let (s0, s1) = (stages[0], stages[stages.len() - 1]);
            let ratio = (d1 - d0) / (s1 - s0) * SPEED_OF_LIGHT_UM_PER_PS;
            let pass = if (ratio - 2.0).abs() < 1e-6 { StagePass::Double } else { StagePass::Single };
            let line = DelayLine { pass, zero_position_um: 0.0 };
            scan.delay_line = DelayLine { zero_position_um: s0 - line.stage_um(d0), ..line };
        }
        Ok(scan)
    }
}
