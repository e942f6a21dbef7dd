//! Classical, training-averaged and standardized periodograms over the
//! positive Fourier grid.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::model::{FourierGrid, TimeSeries, TrainingSet};

// A denominator ordinate this far below the mean denominator marks the
// training data as pathological rather than merely small.
const DEGENERATE_RATIO: f64 = 1e-30;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan_forward(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

/// Which estimator produced a periodogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodogramKind {
    /// Single-series squared-magnitude Fourier statistic.
    Classical,
    /// Pointwise mean of `l` classical periodograms.
    Averaged { l: usize },
    /// Classical ordinates divided by averaged ordinates from `l` members.
    Standardized { l: usize },
}

impl std::fmt::Display for PeriodogramKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PeriodogramKind::Classical => write!(f, "classical"),
            PeriodogramKind::Averaged { l } => write!(f, "averaged(L={l})"),
            PeriodogramKind::Standardized { l } => write!(f, "standardized(L={l})"),
        }
    }
}

/// Periodogram ordinates over Ω, tagged by the estimator that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodogramVec {
    grid: FourierGrid,
    ordinates: Vec<f64>,
    kind: PeriodogramKind,
}

impl PeriodogramVec {
    /// Wraps externally computed ordinates. All must be finite and
    /// nonnegative, one per grid index.
    pub fn from_ordinates(
        grid: FourierGrid,
        kind: PeriodogramKind,
        ordinates: Vec<f64>,
    ) -> Result<Self> {
        if ordinates.len() != grid.len() {
            return Err(invalid(format!(
                "expected {} ordinates for the grid, got {}",
                grid.len(),
                ordinates.len()
            )));
        }
        if let Some(i) = ordinates.iter().position(|o| !o.is_finite() || *o < 0.0) {
            return Err(invalid(format!(
                "ordinate at index {} must be finite and >= 0",
                i + 1
            )));
        }
        if let PeriodogramKind::Averaged { l } | PeriodogramKind::Standardized { l } = kind {
            if l == 0 {
                return Err(invalid("periodogram kind requires L >= 1"));
            }
        }
        Ok(Self {
            grid,
            ordinates,
            kind,
        })
    }

    pub(crate) fn from_parts(
        grid: FourierGrid,
        kind: PeriodogramKind,
        ordinates: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(ordinates.len(), grid.len());
        Self {
            grid,
            ordinates,
            kind,
        }
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn kind(&self) -> PeriodogramKind {
        self.kind
    }

    /// Ordinates in grid order; slot `i` holds index `k = i + 1`.
    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    /// Ordinate at physical grid index `k ∈ Ω`.
    pub fn ordinate(&self, k: usize) -> f64 {
        self.ordinates[k - 1]
    }

    pub fn len(&self) -> usize {
        self.ordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordinates.is_empty()
    }

    /// Grid index of the largest ordinate; ties resolve to the lowest index.
    pub fn index_of_max(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.ordinates.iter().enumerate() {
            if v > self.ordinates[best] {
                best = i;
            }
        }
        best + 1
    }
}

/// Complex DFT of the series samples, full length `n`, sample `j` at
/// array slot `j`. The modulus is origin-independent, so periodogram
/// ordinates do not depend on the `t_j = (j + 1) dt` convention.
pub(crate) fn complex_spectrum(x: &TimeSeries) -> Vec<Complex<f64>> {
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = x.samples().iter().map(|&s| Complex::new(s, 0.0)).collect();
    plan_forward(n).process(&mut buf);
    buf
}

/// Squared-magnitude ordinates over Ω from a full complex spectrum.
pub(crate) fn ordinates_from_spectrum(spectrum: &[Complex<f64>]) -> Vec<f64> {
    let n = spectrum.len();
    (1..n / 2)
        .map(|k| spectrum[k].norm_sqr() / n as f64)
        .collect()
}

/// The classical periodogram `P(ν_k) = |Σ_j x_j e^{-i2πν_k t_j}|² / N`
/// over Ω, computed with a length-`N` fast transform. The DC and Nyquist
/// bins are discarded. The data mean is not subtracted.
pub fn classical_periodogram(x: &TimeSeries) -> PeriodogramVec {
    let spectrum = complex_spectrum(x);
    PeriodogramVec::from_parts(
        x.grid(),
        PeriodogramKind::Classical,
        ordinates_from_spectrum(&spectrum),
    )
}

// Pairwise tree sum of the members' periodogram ordinates. The reduction
// order is fixed by the member order, so results do not depend on how the
// caller schedules work.
fn pairwise_ordinate_sum(members: &[TimeSeries]) -> Vec<f64> {
    match members.len() {
        1 => {
            let spectrum = complex_spectrum(&members[0]);
            ordinates_from_spectrum(&spectrum)
        }
        len => {
            let (lo, hi) = members.split_at(len / 2);
            let mut acc = pairwise_ordinate_sum(lo);
            let right = pairwise_ordinate_sum(hi);
            for (a, r) in acc.iter_mut().zip(right) {
                *a += r;
            }
            acc
        }
    }
}

/// Pointwise mean of the members' classical periodograms.
pub fn averaged_periodogram(training: &TrainingSet) -> PeriodogramVec {
    let l = training.l();
    let mut sum = pairwise_ordinate_sum(training.members());
    for v in sum.iter_mut() {
        *v /= l as f64;
    }
    PeriodogramVec::from_parts(training.grid(), PeriodogramKind::Averaged { l }, sum)
}

/// The standardized periodogram: classical ordinates divided pointwise by
/// averaged ordinates on the same grid.
///
/// Fails with a degenerate-training error when any denominator ordinate is
/// zero or vanishingly small relative to the denominator mean, which signals
/// pathological training data rather than ordinary estimation noise.
pub fn standardized_periodogram(
    p: &PeriodogramVec,
    pbar: &PeriodogramVec,
) -> Result<PeriodogramVec> {
    if p.kind() != PeriodogramKind::Classical {
        return Err(invalid(format!(
            "numerator must be a classical periodogram, got {}",
            p.kind()
        )));
    }
    let l = match pbar.kind() {
        PeriodogramKind::Averaged { l } => l,
        other => {
            return Err(invalid(format!(
                "denominator must be an averaged periodogram, got {other}"
            )))
        }
    };
    if p.grid() != pbar.grid() {
        return Err(invalid("numerator and denominator grids differ"));
    }
    let mean_den = pbar.ordinates().iter().sum::<f64>() / pbar.len() as f64;
    if !(mean_den > 0.0) {
        return Err(Error::DegenerateTraining(
            "averaged periodogram is identically zero".into(),
        ));
    }
    let floor = DEGENERATE_RATIO * mean_den;
    let ordinates = p
        .ordinates()
        .iter()
        .zip(pbar.ordinates())
        .enumerate()
        .map(|(i, (&num, &den))| {
            if den < floor {
                Err(Error::DegenerateTraining(format!(
                    "denominator ordinate at index {} is {den:e}, below {floor:e}",
                    i + 1
                )))
            } else {
                Ok(num / den)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PeriodogramVec::from_parts(
        *p.grid(),
        PeriodogramKind::Standardized { l },
        ordinates,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{synthesize, SinusoidSet};

    // Direct O(N²) evaluation of the defining sum, the oracle for the fast path.
    fn slow_periodogram(x: &TimeSeries) -> Vec<f64> {
        let n = x.len();
        let dt = x.dt();
        x.grid()
            .indices()
            .map(|k| {
                let nu = k as f64 / (n as f64 * dt);
                let (mut re, mut im) = (0.0, 0.0);
                for (j, &s) in x.samples().iter().enumerate() {
                    let t = (j + 1) as f64 * dt;
                    let arg = -2.0 * std::f64::consts::PI * nu * t;
                    re += s * arg.cos();
                    im += s * arg.sin();
                }
                (re * re + im * im) / n as f64
            })
            .collect()
    }

    #[test]
    fn zero_series_gives_zero_ordinates() {
        let p = classical_periodogram(&TimeSeries::zeros(16, 1.0).unwrap());
        assert!(p.ordinates().iter().all(|&o| o == 0.0));
        assert_eq!(p.kind(), PeriodogramKind::Classical);
    }

    #[test]
    fn matches_direct_sum_on_random_series() {
        let samples: Vec<f64> = (0..64)
            .map(|i| ((i * 37 + 11) % 17) as f64 * 0.25 - 2.0)
            .collect();
        let x = TimeSeries::new(samples, 0.75).unwrap();
        let fast = classical_periodogram(&x);
        let slow = slow_periodogram(&x);
        let scale = slow.iter().cloned().fold(0.0, f64::max).max(1.0);
        for (f, s) in fast.ordinates().iter().zip(&slow) {
            assert!((f - s).abs() < 1e-9 * scale, "{f} vs {s}");
        }
    }

    #[test]
    fn on_grid_sine_concentrates_at_its_bin() {
        let n = 64;
        let dt = 2.0;
        let alpha = 1.5;
        let k0 = 9;
        let f = k0 as f64 / (n as f64 * dt);
        let sines = SinusoidSet::from_parts(&[alpha], &[f], &[0.8]).unwrap();
        let x = synthesize(&sines, &TimeSeries::zeros(n, dt).unwrap()).unwrap();
        let p = classical_periodogram(&x);
        let expected = n as f64 * alpha * alpha / 4.0;
        assert!(
            (p.ordinate(k0) - expected).abs() < 1e-9 * expected,
            "{} vs {expected}",
            p.ordinate(k0)
        );
        for k in p.grid().indices() {
            if k != k0 {
                assert!(
                    p.ordinate(k) < 1e-10 * expected,
                    "leak at k={k}: {}",
                    p.ordinate(k)
                );
            }
        }
        assert_eq!(p.index_of_max(), k0);
    }

    #[test]
    fn sign_flip_invariance_is_exact() {
        let samples: Vec<f64> = (0..32).map(|i| (i as f64 * 0.61).sin() + 0.1).collect();
        let flipped: Vec<f64> = samples.iter().map(|s| -s).collect();
        let a = classical_periodogram(&TimeSeries::new(samples, 1.0).unwrap());
        let b = classical_periodogram(&TimeSeries::new(flipped, 1.0).unwrap());
        assert_eq!(a.ordinates(), b.ordinates());
    }

    #[test]
    fn parseval_bound_and_mean_free_identity() {
        // Mean-free, Nyquist-free input: the Ω ordinates carry exactly half
        // the sample energy; in general they carry at most all of it.
        let n = 32;
        let sines =
            SinusoidSet::from_parts(&[1.0, 0.5], &[3.0 / n as f64, 7.0 / n as f64], &[0.4, 1.9])
                .unwrap();
        let x = synthesize(&sines, &TimeSeries::zeros(n, 1.0).unwrap()).unwrap();
        let p = classical_periodogram(&x);
        let energy: f64 = x.samples().iter().map(|s| s * s).sum();
        let psum: f64 = p.ordinates().iter().sum();
        assert!(psum <= energy * (1.0 + 1e-12));
        assert!((psum - energy / 2.0).abs() < 1e-9 * energy);
    }

    #[test]
    fn averaged_single_member_equals_classical() {
        let x = TimeSeries::new((0..16).map(|i| (i as f64).cos()).collect(), 1.0).unwrap();
        let t = TrainingSet::new(vec![x.clone()]).unwrap();
        let avg = averaged_periodogram(&t);
        let p = classical_periodogram(&x);
        assert_eq!(avg.ordinates(), p.ordinates());
        assert_eq!(avg.kind(), PeriodogramKind::Averaged { l: 1 });
    }

    #[test]
    fn averaged_identical_members_equals_classical() {
        let x = TimeSeries::new((0..16).map(|i| (i as f64 * 0.9).sin()).collect(), 1.0).unwrap();
        let t = TrainingSet::new(vec![x.clone(); 5]).unwrap();
        let avg = averaged_periodogram(&t);
        let p = classical_periodogram(&x);
        for (a, c) in avg.ordinates().iter().zip(p.ordinates()) {
            assert!((a - c).abs() <= 1e-12 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn standardized_identity_when_numerator_equals_denominator_mean() {
        let x =
            TimeSeries::new((0..16).map(|i| 1.0 + (i as f64 * 1.3).sin()).collect(), 1.0).unwrap();
        let p = classical_periodogram(&x);
        let t = TrainingSet::new(vec![x.clone()]).unwrap();
        let pbar = averaged_periodogram(&t);
        let tilde = standardized_periodogram(&p, &pbar).unwrap();
        for &o in tilde.ordinates() {
            assert!((o - 1.0).abs() < 1e-12);
        }
        assert_eq!(tilde.kind(), PeriodogramKind::Standardized { l: 1 });
    }

    #[test]
    fn standardized_rejects_zero_denominator() {
        let g = FourierGrid::new(8, 1.0).unwrap();
        let p = PeriodogramVec::from_ordinates(g, PeriodogramKind::Classical, vec![1.0, 1.0, 1.0])
            .unwrap();
        let pbar = PeriodogramVec::from_ordinates(
            g,
            PeriodogramKind::Averaged { l: 2 },
            vec![1.0, 0.0, 1.0],
        )
        .unwrap();
        match standardized_periodogram(&p, &pbar) {
            Err(Error::DegenerateTraining(_)) => {}
            other => panic!("expected degenerate-training error, got {other:?}"),
        }
    }

    #[test]
    fn standardized_rejects_kind_and_grid_mismatch() {
        let g = FourierGrid::new(8, 1.0).unwrap();
        let g2 = FourierGrid::new(8, 2.0).unwrap();
        let p =
            PeriodogramVec::from_ordinates(g, PeriodogramKind::Classical, vec![1.0; 3]).unwrap();
        let pbar =
            PeriodogramVec::from_ordinates(g2, PeriodogramKind::Averaged { l: 1 }, vec![1.0; 3])
                .unwrap();
        assert!(standardized_periodogram(&p, &pbar).is_err());
        let not_avg =
            PeriodogramVec::from_ordinates(g, PeriodogramKind::Classical, vec![1.0; 3]).unwrap();
        assert!(standardized_periodogram(&p, &not_avg).is_err());
    }
}
