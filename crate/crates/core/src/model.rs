//! Sampled-data model: evenly sampled series, the positive Fourier grid,
//! sinusoid sets, noise training sets and discrete-time noise spectra.
//!
//! All types are immutable after construction and every operation is a pure
//! function, so everything here is safe to share across threads.

use crate::error::{invalid, Result};

/// Evenly sampled real-valued observations.
///
/// Sample `j` (zero-based) is taken at `t_j = (j + 1) * dt`, i.e. instants
/// `dt, 2*dt, ..., n*dt`. Phase-sensitive quantities (sinusoid injection,
/// leakage noncentrality) rely on this origin.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
    dt: f64,
}

impl TimeSeries {
    /// Builds a series from `samples` spaced `dt` seconds apart.
    ///
    /// The length must be even and at least 4, `dt` strictly positive and
    /// every sample finite.
    pub fn new(samples: Vec<f64>, dt: f64) -> Result<Self> {
        let n = samples.len();
        if n < 4 || n % 2 != 0 {
            return Err(invalid(format!(
                "series length must be even and >= 4, got {n}"
            )));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid(format!(
                "sampling interval must be finite and > 0, got {dt}"
            )));
        }
        if let Some(j) = samples.iter().position(|s| !s.is_finite()) {
            return Err(invalid(format!("sample {j} is not finite")));
        }
        Ok(Self { samples, dt })
    }

    /// All-zero series of length `n`, convenient as a noise-free carrier.
    pub fn zeros(n: usize, dt: f64) -> Result<Self> {
        Self::new(vec![0.0; n], dt)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// The positive Fourier grid implied by this series.
    pub fn grid(&self) -> FourierGrid {
        FourierGrid::new(self.len(), self.dt).expect("series invariants imply a valid grid")
    }

    /// Subtracts the sample mean, returning a mean-free copy.
    pub fn detrended(&self) -> Self {
        let mean = self.samples.iter().sum::<f64>() / self.len() as f64;
        Self {
            samples: self.samples.iter().map(|s| s - mean).collect(),
            dt: self.dt,
        }
    }
}

/// The set `Ω = {1, ..., n/2 - 1}` of positive, non-DC, non-Nyquist Fourier
/// indices for an even-length series, with `ν_k = k / (n * dt)` in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierGrid {
    n: usize,
    dt: f64,
}

impl FourierGrid {
    /// Grid for a length-`n` series sampled every `dt` seconds.
    pub fn new(n: usize, dt: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(invalid(format!(
                "grid length must be even and >= 4, got {n}"
            )));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid(format!(
                "sampling interval must be finite and > 0, got {dt}"
            )));
        }
        Ok(Self { n, dt })
    }

    /// Series length `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Sampling interval in seconds.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of grid ordinates, `|Ω| = n/2 - 1`.
    pub fn len(&self) -> usize {
        self.n / 2 - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The indices `k = 1, ..., n/2 - 1`.
    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.len()
    }

    /// Frequency of index `k` in Hz.
    pub fn freq_hz(&self, k: usize) -> f64 {
        debug_assert!(k >= 1 && k <= self.len());
        k as f64 / (self.n as f64 * self.dt)
    }

    /// Frequencies over Ω, strictly increasing.
    pub fn freqs_hz(&self) -> impl Iterator<Item = f64> + '_ {
        self.indices().map(|k| self.freq_hz(k))
    }

    /// Nyquist frequency `1 / (2 dt)` in Hz.
    pub fn nyquist_hz(&self) -> f64 {
        0.5 / self.dt
    }

    /// Converts a frequency in Hz to cycles per sample.
    pub fn normalized(&self, f_hz: f64) -> f64 {
        f_hz * self.dt
    }
}

/// Builds the positive Fourier grid for a length-`n` series sampled every
/// `dt` seconds. Rejects odd or too-short lengths.
pub fn fourier_grid(n: usize, dt: f64) -> Result<FourierGrid> {
    FourierGrid::new(n, dt)
}

/// One sinusoidal component `alpha * sin(2π f t + phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub freq_hz: f64,
    pub phase_rad: f64,
}

impl Sinusoid {
    pub fn new(amplitude: f64, freq_hz: f64, phase_rad: f64) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(invalid(format!(
                "amplitude must be finite and >= 0, got {amplitude}"
            )));
        }
        if !(freq_hz > 0.0) || !freq_hz.is_finite() {
            return Err(invalid(format!(
                "frequency must be finite and > 0, got {freq_hz}"
            )));
        }
        if !phase_rad.is_finite() {
            return Err(invalid("phase must be finite"));
        }
        Ok(Self {
            amplitude,
            freq_hz,
            phase_rad,
        })
    }
}

/// The deterministic part of the alternative hypothesis: a (possibly empty)
/// collection of sinusoids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SinusoidSet {
    components: Vec<Sinusoid>,
}

impl SinusoidSet {
    pub fn new(components: Vec<Sinusoid>) -> Self {
        Self { components }
    }

    /// Builds a set from parallel amplitude/frequency/phase slices.
    pub fn from_parts(amplitudes: &[f64], freqs_hz: &[f64], phases_rad: &[f64]) -> Result<Self> {
        if amplitudes.len() != freqs_hz.len() || freqs_hz.len() != phases_rad.len() {
            return Err(invalid(format!(
                "amplitude/frequency/phase lists must have equal lengths, got {}/{}/{}",
                amplitudes.len(),
                freqs_hz.len(),
                phases_rad.len()
            )));
        }
        let components = amplitudes
            .iter()
            .zip(freqs_hz)
            .zip(phases_rad)
            .map(|((&a, &f), &p)| Sinusoid::new(a, f, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[Sinusoid] {
        &self.components
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sinusoid> {
        self.components.iter()
    }

    /// Checks every frequency against the grid's Nyquist limit.
    pub fn validate_against(&self, grid: &FourierGrid) -> Result<()> {
        for (i, s) in self.components.iter().enumerate() {
            if s.freq_hz >= grid.nyquist_hz() {
                return Err(invalid(format!(
                    "sinusoid {i} at {} Hz is at or above the Nyquist frequency {} Hz",
                    s.freq_hz,
                    grid.nyquist_hz()
                )));
            }
        }
        Ok(())
    }
}

/// Adds the sinusoids to a noise series, sample by sample, on the noise
/// series' own grid: `x_j = Σ_i α_i sin(2π f_i t_j + φ_i) + noise_j` with
/// `t_j = (j + 1) * dt`.
pub fn synthesize(sines: &SinusoidSet, noise: &TimeSeries) -> Result<TimeSeries> {
    sines.validate_against(&noise.grid())?;
    if sines.is_empty() {
        return Ok(noise.clone());
    }
    let dt = noise.dt();
    let samples = noise
        .samples()
        .iter()
        .enumerate()
        .map(|(j, &nj)| {
            let t = (j + 1) as f64 * dt;
            let signal: f64 = sines
                .iter()
                .map(|s| {
                    s.amplitude * (2.0 * std::f64::consts::PI * s.freq_hz * t + s.phase_rad).sin()
                })
                .sum();
            signal + nj
        })
        .collect();
    TimeSeries::new(samples, dt)
}

/// A set of `L` independent noise-only realizations sharing one grid,
/// used to calibrate the averaged periodogram.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    members: Vec<TimeSeries>,
}

impl TrainingSet {
    /// At least one member; all members must share length and sampling interval.
    pub fn new(members: Vec<TimeSeries>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| invalid("training set must contain at least one series"))?;
        let (n, dt) = (first.len(), first.dt());
        for (i, m) in members.iter().enumerate() {
            if m.len() != n || m.dt() != dt {
                return Err(invalid(format!(
                    "training member {i} has (n={}, dt={}) but member 0 has (n={n}, dt={dt})",
                    m.len(),
                    m.dt()
                )));
            }
        }
        Ok(Self { members })
    }

    /// Number of members, `L`.
    pub fn l(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[TimeSeries] {
        &self.members
    }

    pub fn grid(&self) -> FourierGrid {
        self.members[0].grid()
    }
}

/// Two-sided discrete-time noise PSD evaluated on a Fourier grid, in the
/// convention where it equals the asymptotic mean of the classical
/// periodogram, `E[P(ν_k)] = S(ν_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePsd {
    grid: FourierGrid,
    values: Vec<f64>,
}

impl NoisePsd {
    /// `values[k - 1]` is the PSD at grid index `k`; all values must be
    /// strictly positive and finite.
    pub fn new(values: Vec<f64>, grid: FourierGrid) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "PSD has {} values but the grid has {} ordinates",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(invalid(format!(
                "PSD must be strictly positive and finite everywhere, offending index {}",
                i + 1
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// PSD at physical grid index `k ∈ Ω`.
    pub fn value(&self, k: usize) -> f64 {
        self.values[k - 1]
    }
}
