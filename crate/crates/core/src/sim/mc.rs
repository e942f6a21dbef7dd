//! Monte Carlo estimation of null and alternative test statistics,
//! empirical threshold calibration, ROC curves and false-alarm frequency
//! histograms.
//!
//! Trials are independent work units scheduled by rayon; per-trial results
//! are collected in trial order and aggregated sequentially, so a summary
//! depends only on the configuration and master seed, never on the worker
//! count.

use rayon::prelude::*;
use rustfft::num_complex::Complex;

use crate::analytic::{RocCurve, RocMeta, RocPoint, RocSource};
use crate::detect::{evaluate, Evaluation, TestKind};
use crate::error::{invalid, Result};
use crate::model::{synthesize, FourierGrid, SinusoidSet, TimeSeries, TrainingSet};
use crate::periodogram::{
    averaged_periodogram, complex_spectrum, ordinates_from_spectrum, standardized_periodogram,
    PeriodogramKind, PeriodogramVec,
};
use crate::sim::ar::{ar_generate_with, ArModel};
use crate::sim::seed::stream_rng;

/// One test to run per trial, with the thresholds at which exceedances are
/// counted (may be empty when only statistics or argmax are wanted).
#[derive(Debug, Clone, PartialEq)]
pub struct McTest {
    pub kind: TestKind,
    pub gammas: Vec<f64>,
}

/// Full description of a Monte Carlo experiment. Identical configurations
/// produce identical summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub trials: usize,
    pub master_seed: u64,
    /// Series length; must be even and at least 4.
    pub n: usize,
    /// Sampling interval in seconds.
    pub dt: f64,
    /// Training-set size per trial.
    pub l: usize,
    /// Sinusoids injected under the alternative hypothesis.
    pub sines: SinusoidSet,
    /// Colored-noise model for both observation and training draws.
    pub noise: ArModel,
    pub tests: Vec<McTest>,
    /// Draw and score noise-only trials.
    pub run_h0: bool,
    /// Draw and score signal-plus-noise trials. These reuse the null
    /// hypothesis noise (common random numbers), which halves the variance
    /// of ROC comparisons.
    pub run_h1: bool,
    /// Retain per-trial statistics and argmax indices in the summary.
    pub keep_statistics: bool,
    /// Number of equal-width frequency bins for argmax histograms.
    pub histogram_bins: usize,
}

impl McConfig {
    /// Rejects inconsistent configurations before any trial runs.
    pub fn validate(&self) -> Result<FourierGrid> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        let grid = FourierGrid::new(self.n, self.dt)?;
        if self.l == 0 {
            return Err(invalid("training size L must be at least 1"));
        }
        self.sines.validate_against(&grid)?;
        if self.tests.is_empty() {
            return Err(invalid("at least one test must be configured"));
        }
        for t in &self.tests {
            t.kind.validate_for(grid.len())?;
            if let Some(g) = t.gammas.iter().find(|g| !g.is_finite()) {
                return Err(invalid(format!(
                    "threshold {g} for {} is not finite",
                    t.kind
                )));
            }
        }
        if !self.run_h0 && !self.run_h1 {
            return Err(invalid("at least one of the H0/H1 passes must be enabled"));
        }
        if self.histogram_bins == 0 || self.histogram_bins > grid.len() {
            return Err(invalid(format!(
                "histogram bins must be in [1, {}], got {}",
                grid.len(),
                self.histogram_bins
            )));
        }
        Ok(grid)
    }
}

/// Exceedance of one threshold: `count` trials had statistic > `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExceedancePoint {
    pub gamma: f64,
    pub count: usize,
    pub rate: f64,
    /// Binomial standard error `sqrt(rate (1 − rate) / trials)`.
    pub stderr: f64,
}

/// Per-test outcome of one hypothesis pass.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResults {
    pub kind: TestKind,
    pub exceedance: Vec<ExceedancePoint>,
    /// Histogram of the dominant-ordinate index over equal-width frequency
    /// bins; masses sum to the trial count.
    pub argmax_hist: Vec<u64>,
    /// Per-trial statistics in trial order (empty unless retained).
    pub statistics: Vec<f64>,
    /// Per-trial dominant-ordinate grid indices (empty unless retained).
    pub argmax: Vec<usize>,
}

/// All tests' outcomes under one hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisResults {
    pub tests: Vec<TestResults>,
}

/// Aggregated Monte Carlo outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub trials: usize,
    pub histogram_bins: usize,
    pub h0: Option<HypothesisResults>,
    pub h1: Option<HypothesisResults>,
}

impl McSummary {
    fn results(&self, h1: bool) -> Option<&HypothesisResults> {
        if h1 {
            self.h1.as_ref()
        } else {
            self.h0.as_ref()
        }
    }

    /// Results for `kind` under the requested hypothesis, if that pass ran
    /// and the test was configured.
    pub fn test_results(&self, kind: &TestKind, h1: bool) -> Option<&TestResults> {
        self.results(h1)?.tests.iter().find(|t| t.kind == *kind)
    }
}

/// Histogram bin (0-based) of grid index `k` among `bins` equal-width bins
/// over `eta` indices.
pub(crate) fn histogram_bin(k: usize, eta: usize, bins: usize) -> usize {
    debug_assert!(k >= 1 && k <= eta);
    (k - 1) * bins / eta
}

struct TrialStats {
    h0: Option<Vec<Evaluation>>,
    h1: Option<Vec<Evaluation>>,
}

fn run_trial(
    config: &McConfig,
    grid: FourierGrid,
    sine_spectrum: Option<&[Complex<f64>]>,
    needs_standardized: bool,
    trial: u64,
) -> Result<TrialStats> {
    let mut obs_rng = stream_rng(config.master_seed, trial, 0);
    let noise = ar_generate_with(&config.noise, config.n, config.dt, &mut obs_rng)?;
    let z = complex_spectrum(&noise);

    let pbar = if needs_standardized {
        let members = (0..config.l)
            .map(|m| {
                let mut rng = stream_rng(config.master_seed, trial, 1 + m as u64);
                ar_generate_with(&config.noise, config.n, config.dt, &mut rng)
            })
            .collect::<Result<Vec<TimeSeries>>>()?;
        Some(averaged_periodogram(&TrainingSet::new(members)?))
    } else {
        None
    };

    let score = |spectrum: &[Complex<f64>]| -> Result<Vec<Evaluation>> {
        let p = PeriodogramVec::from_parts(
            grid,
            PeriodogramKind::Classical,
            ordinates_from_spectrum(spectrum),
        );
        let p_tilde = match &pbar {
            Some(pb) => Some(standardized_periodogram(&p, pb)?),
            None => None,
        };
        config
            .tests
            .iter()
            .map(|t| {
                let input = if t.kind.uses_standardized() {
                    p_tilde
                        .as_ref()
                        .expect("standardized tests imply a training pass")
                } else {
                    &p
                };
                evaluate(&t.kind, input)
            })
            .collect()
    };

    let h0 = if config.run_h0 {
        Some(score(&z)?)
    } else {
        None
    };
    let h1 = if config.run_h1 {
        match sine_spectrum {
            Some(s) => {
                let z1: Vec<Complex<f64>> = z.iter().zip(s).map(|(a, b)| a + b).collect();
                Some(score(&z1)?)
            }
            None => Some(score(&z)?),
        }
    } else {
        None
    };
    Ok(TrialStats { h0, h1 })
}

fn aggregate(
    config: &McConfig,
    grid: &FourierGrid,
    per_trial: Vec<Option<Vec<Evaluation>>>,
) -> Option<HypothesisResults> {
    let rows: Vec<&Vec<Evaluation>> = per_trial.iter().filter_map(|t| t.as_ref()).collect();
    if rows.is_empty() {
        return None;
    }
    let trials = rows.len();
    let eta = grid.len();
    let tests = config
        .tests
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let stats: Vec<f64> = rows.iter().map(|r| r[i].statistic).collect();
            let argmax: Vec<usize> = rows.iter().map(|r| r[i].argmax_index).collect();
            let exceedance = t
                .gammas
                .iter()
                .map(|&gamma| {
                    let count = stats.iter().filter(|&&s| s > gamma).count();
                    let rate = count as f64 / trials as f64;
                    ExceedancePoint {
                        gamma,
                        count,
                        rate,
                        stderr: (rate * (1.0 - rate) / trials as f64).sqrt(),
                    }
                })
                .collect();
            let mut argmax_hist = vec![0u64; config.histogram_bins];
            for &k in &argmax {
                argmax_hist[histogram_bin(k, eta, config.histogram_bins)] += 1;
            }
            TestResults {
                kind: t.kind,
                exceedance,
                argmax_hist,
                statistics: if config.keep_statistics {
                    stats
                } else {
                    Vec::new()
                },
                argmax: if config.keep_statistics {
                    argmax
                } else {
                    Vec::new()
                },
            }
        })
        .collect();
    Some(HypothesisResults { tests })
}

/// Runs the configured experiment: per trial, draws `L` training series and
/// one observation series from the noise model, scores every configured
/// statistic under the enabled hypotheses, and aggregates exceedance counts
/// and argmax histograms. The result is independent of worker count.
pub fn run_mc(config: &McConfig) -> Result<McSummary> {
    let grid = config.validate()?;
    let needs_standardized = config.tests.iter().any(|t| t.kind.uses_standardized());
    let sine_spectrum: Option<Vec<Complex<f64>>> = if config.run_h1 && !config.sines.is_empty() {
        let carrier = TimeSeries::zeros(config.n, config.dt)?;
        Some(complex_spectrum(&synthesize(&config.sines, &carrier)?))
    } else {
        None
    };

    let trial_stats: Vec<TrialStats> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| {
            run_trial(
                config,
                grid,
                sine_spectrum.as_deref(),
                needs_standardized,
                t,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let h0 = aggregate(
        config,
        &grid,
        trial_stats.iter().map(|t| t.h0.clone()).collect(),
    );
    let h1 = aggregate(
        config,
        &grid,
        trial_stats.iter().map(|t| t.h1.clone()).collect(),
    );
    Ok(McSummary {
        trials: config.trials,
        histogram_bins: config.histogram_bins,
        h0,
        h1,
    })
}

/// An empirically calibrated threshold with its order-statistic confidence
/// interval (normal approximation to the quantile rank, 95% level).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibratedThreshold {
    pub threshold: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: usize,
    pub target_pfa: f64,
}

/// Calibrates the threshold for `test` at each target from one null Monte
/// Carlo pass: the empirical `(1 − target)` quantile of the statistic
/// distribution, with a 95% order-statistic confidence interval.
///
/// Every target requires `trials ≥ 100 / target` so its tail is resolved.
pub fn calibrate_thresholds(
    config: &McConfig,
    test: &TestKind,
    targets: &[f64],
) -> Result<Vec<CalibratedThreshold>> {
    if targets.is_empty() {
        return Err(invalid("at least one target P_FA is required"));
    }
    for &target in targets {
        if !(target > 0.0 && target < 1.0) {
            return Err(invalid(format!(
                "target P_FA must lie strictly in (0, 1), got {target}"
            )));
        }
        if (config.trials as f64) < 100.0 / target {
            return Err(invalid(format!(
                "calibrating P_FA = {target} needs at least {} trials, got {}",
                (100.0 / target).ceil(),
                config.trials
            )));
        }
    }
    let mut cfg = config.clone();
    cfg.tests = vec![McTest {
        kind: *test,
        gammas: Vec::new(),
    }];
    cfg.run_h0 = true;
    cfg.run_h1 = false;
    cfg.keep_statistics = true;
    let summary = run_mc(&cfg)?;
    let results = summary
        .test_results(test, false)
        .expect("requested test was configured");
    let mut stats = results.statistics.clone();
    stats.sort_by(f64::total_cmp);
    let n = stats.len();
    let nf = n as f64;
    Ok(targets
        .iter()
        .map(|&target| {
            let q = 1.0 - target;
            let rank = ((q * nf).ceil() as usize).clamp(1, n);
            let sd = (nf * target * q).sqrt();
            let lo_rank = ((q * nf - 1.96 * sd).floor() as usize).clamp(1, n);
            let hi_rank = ((q * nf + 1.96 * sd).ceil() as usize).clamp(1, n);
            CalibratedThreshold {
                threshold: stats[rank - 1],
                ci_low: stats[lo_rank - 1],
                ci_high: stats[hi_rank - 1],
                trials: n,
                target_pfa: target,
            }
        })
        .collect())
}

/// Single-target convenience wrapper around [`calibrate_thresholds`].
pub fn calibrate_threshold(
    config: &McConfig,
    test: &TestKind,
    target_pfa: f64,
) -> Result<CalibratedThreshold> {
    Ok(calibrate_thresholds(config, test, &[target_pfa])?.remove(0))
}

/// Builds the empirical ROC staircase from retained per-trial statistics:
/// thresholds sweep the pooled statistic range, each yielding one
/// `(P_FA, P_DET)` pair with binomial standard errors. Vertical runs are
/// collapsed so `P_FA` is strictly increasing.
pub fn roc_from_statistics(h0: &[f64], h1: &[f64], meta: RocMeta) -> Result<RocCurve> {
    if h0.is_empty() || h1.is_empty() {
        return Err(invalid(
            "ROC construction needs statistics from both hypotheses",
        ));
    }
    let mut pooled: Vec<f64> = h0.iter().chain(h1).copied().collect();
    pooled.sort_by(f64::total_cmp);
    pooled.dedup();

    let mut h0s = h0.to_vec();
    let mut h1s = h1.to_vec();
    h0s.sort_by(f64::total_cmp);
    h1s.sort_by(f64::total_cmp);
    let n0 = h0s.len() as f64;
    let n1 = h1s.len() as f64;

    // Sweep thresholds downward; partition_point gives #values <= gamma.
    let mut points: Vec<RocPoint> = Vec::with_capacity(pooled.len());
    for &gamma in pooled.iter().rev() {
        let pfa = (h0s.len() - h0s.partition_point(|&v| v <= gamma)) as f64 / n0;
        let pdet = (h1s.len() - h1s.partition_point(|&v| v <= gamma)) as f64 / n1;
        match points.last_mut() {
            Some(last) if last.pfa == pfa => {
                last.pdet = pdet;
                last.pdet_stderr = (pdet * (1.0 - pdet) / n1).sqrt();
            }
            _ => points.push(RocPoint {
                pfa,
                pdet,
                pfa_stderr: (pfa * (1.0 - pfa) / n0).sqrt(),
                pdet_stderr: (pdet * (1.0 - pdet) / n1).sqrt(),
            }),
        }
    }
    RocCurve::new(points, meta)
}

/// Empirical ROC for one test: runs both hypothesis passes under the
/// config's noise model and sweeps the pooled statistic range.
pub fn empirical_roc(config: &McConfig, test: &TestKind) -> Result<RocCurve> {
    let mut cfg = config.clone();
    cfg.tests = vec![McTest {
        kind: *test,
        gammas: Vec::new(),
    }];
    cfg.run_h0 = true;
    cfg.run_h1 = true;
    cfg.keep_statistics = true;
    let summary = run_mc(&cfg)?;
    let h0 = &summary
        .test_results(test, false)
        .expect("H0 pass ran")
        .statistics;
    let h1 = &summary
        .test_results(test, true)
        .expect("H1 pass ran")
        .statistics;
    roc_from_statistics(
        h0,
        h1,
        RocMeta {
            test: *test,
            l: cfg.l,
            n: cfg.n,
            source: RocSource::Empirical { trials: cfg.trials },
            description: format!(
                "{} sinusoid(s), AR({}) noise",
                cfg.sines.len(),
                cfg.noise.order()
            ),
        },
    )
}

/// One bin of a false-alarm frequency histogram; `lo_hz`/`hi_hz` are the
/// frequencies of the first and last grid index the bin covers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaBin {
    pub k_lo: usize,
    pub k_hi: usize,
    pub lo_hz: f64,
    pub hi_hz: f64,
    pub count: u64,
}

/// Histogram of where a test's dominant ordinate lands under the null.
#[derive(Debug, Clone, PartialEq)]
pub struct FaHistogram {
    pub test: TestKind,
    pub trials: usize,
    pub bins: Vec<FaBin>,
}

impl FaHistogram {
    /// Number of grid indices each bin covers (expected GOF masses are
    /// proportional to these, since bins may differ by one index).
    pub fn bin_widths(&self) -> Vec<usize> {
        self.bins.iter().map(|b| b.k_hi - b.k_lo + 1).collect()
    }
}

/// Builds the binned histogram from per-trial dominant-ordinate indices.
pub fn fa_histogram_from_argmax(
    grid: &FourierGrid,
    test: &TestKind,
    argmax: &[usize],
    bins: usize,
) -> Result<FaHistogram> {
    let eta = grid.len();
    if bins == 0 || bins > eta {
        return Err(invalid(format!(
            "histogram bins must be in [1, {eta}], got {bins}"
        )));
    }
    let mut counts = vec![0u64; bins];
    for &k in argmax {
        counts[histogram_bin(k, eta, bins)] += 1;
    }
    let bins_vec = (0..bins)
        .map(|b| {
            let k_lo = (1..=eta)
                .find(|&k| histogram_bin(k, eta, bins) == b)
                .expect("bins cover the grid");
            let k_hi = (1..=eta)
                .rev()
                .find(|&k| histogram_bin(k, eta, bins) == b)
                .expect("bins cover the grid");
            FaBin {
                k_lo,
                k_hi,
                lo_hz: grid.freq_hz(k_lo),
                hi_hz: grid.freq_hz(k_hi),
                count: counts[b],
            }
        })
        .collect();
    Ok(FaHistogram {
        test: *test,
        trials: argmax.len(),
        bins: bins_vec,
    })
}

/// Null-hypothesis frequency histogram of a test's dominant ordinate,
/// over the config's histogram bin count.
pub fn fa_frequency_histogram(config: &McConfig, test: &TestKind) -> Result<FaHistogram> {
    let mut cfg = config.clone();
    cfg.tests = vec![McTest {
        kind: *test,
        gammas: Vec::new(),
    }];
    cfg.run_h0 = true;
    cfg.run_h1 = false;
    cfg.keep_statistics = true;
    let grid = cfg.validate()?;
    let summary = run_mc(&cfg)?;
    let argmax = &summary
        .test_results(test, false)
        .expect("H0 pass ran")
        .argmax;
    fa_histogram_from_argmax(&grid, test, argmax, cfg.histogram_bins)
}

/// Probability that a statistic drawn under H1 exceeds one drawn under H0
/// (ties count half): the area under the empirical ROC curve.
pub fn mann_whitney_auc(h0: &[f64], h1: &[f64]) -> f64 {
    let mut h0s = h0.to_vec();
    h0s.sort_by(f64::total_cmp);
    let n0 = h0s.len() as f64;
    let n1 = h1.len() as f64;
    let mut total = 0.0;
    for &v in h1 {
        let less = h0s.partition_point(|&x| x < v) as f64;
        let leq = h0s.partition_point(|&x| x <= v) as f64;
        total += less + 0.5 * (leq - less);
    }
    total / (n0 * n1)
}

/// Hanley-McNeil standard error of an empirical AUC from `n0` null and
/// `n1` alternative trials.
pub fn auc_stderr_hanley_mcneil(auc: f64, n0: usize, n1: usize) -> f64 {
    let a2 = auc * auc;
    let q1 = auc / (2.0 - auc);
    let q2 = 2.0 * a2 / (1.0 + auc);
    let var = (auc * (1.0 - auc) + (n1 as f64 - 1.0) * (q1 - a2) + (n0 as f64 - 1.0) * (q2 - a2))
        / (n0 as f64 * n1 as f64);
    var.max(0.0).sqrt()
}
