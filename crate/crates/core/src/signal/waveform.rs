use super::SignalError;

/// Uniformly sampled real-valued signal.
///
/// Baseband, carrier-free representation used for both transmitted pulses and
/// received records. Amplitudes are unit-free (volts-normalized).
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    sample_rate: f64,
    t0: f64,
    samples: Vec<f64>,
}

impl Waveform {
    /// Build a waveform from raw samples, checking the type invariants.
    pub fn new(sample_rate: f64, t0: f64, samples: Vec<f64>) -> Result<Self, SignalError> {
        if !(sample_rate > 0.0) {
            return Err(SignalError::NonPositiveSampleRate(sample_rate));
        }
        if samples.is_empty() {
            return Err(SignalError::Empty);
        }
        Ok(Self { sample_rate, t0, samples })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Time of the first sample, seconds.
    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Sample spacing, seconds.
    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    /// Record length in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Time of sample `i`, seconds.
    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.sample_rate
    }

    /// Signal energy ∫s²dt by the rectangle rule.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.sample_rate
    }

    /// Return a copy with every sample multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            sample_rate: self.sample_rate,
            t0: self.t0,
            samples: self.samples.iter().map(|s| s * factor).collect(),
        }
    }

    /// Return a copy with the time origin shifted by `shift` seconds.
    pub fn time_shifted(&self, shift: f64) -> Self {
        Self { sample_rate: self.sample_rate, t0: self.t0 + shift, samples: self.samples.clone() }
    }

    /// Write the waveform as two-column CSV: `time_s,amplitude`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time_s,amplitude")?;
        for (i, s) in self.samples.iter().enumerate() {
            writeln!(out, "{},{}", self.time_at(i), s)?;
        }
        Ok(())
    }
}
