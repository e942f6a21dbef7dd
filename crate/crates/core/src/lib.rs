//! Sinusoid detection in colored noise via training-set standardized
//! periodograms.
//!
//! When the noise spectrum is unknown but independent noise-only
//! realizations are available (a training set), dividing the observation's
//! periodogram by the training average yields ordinates whose null law is
//! free of the noise spectrum. Detection tests built on those ordinates
//! keep exact false-alarm control under any colored Gaussian noise, and
//! their detection rates admit closed forms through per-bin leakage
//! noncentralities.
//!
//! The crate provides:
//!
//! - [`model`]: time series, Fourier grids, sinusoid sets, training sets;
//! - [`periodogram`]: classical, averaged and standardized periodograms;
//! - [`prob`]: leakage kernels and the (noncentral) F-law machinery;
//! - [`detect`]: six test statistics and the threshold decision rule;
//! - [`analytic`]: closed-form false-alarm/detection rates, threshold
//!   inversion and analytic ROC curves;
//! - [`sim`]: an AR colored-noise Monte Carlo harness for validation and
//!   for calibrating tests that have no closed form.
//!
//! ```
//! use specdet::{
//!     analytic::{pfa_t_tilde, threshold_from_pfa, Eta},
//!     detect::t_tilde,
//!     model::TrainingSet,
//!     periodogram::{averaged_periodogram, classical_periodogram, standardized_periodogram},
//!     sim::{ar_generate, default_stellar_ar6},
//! };
//!
//! let noise = default_stellar_ar6();
//! let (n, dt, l) = (256, 60.0, 8usize);
//! let observation = ar_generate(&noise, n, dt, 1).unwrap();
//! let training = TrainingSet::new(
//!     (0..l).map(|i| ar_generate(&noise, n, dt, 100 + i as u64).unwrap()).collect(),
//! ).unwrap();
//!
//! let p = classical_periodogram(&observation);
//! let p_bar = averaged_periodogram(&training);
//! let p_tilde = standardized_periodogram(&p, &p_bar).unwrap();
//!
//! let eta = Eta::from_grid(p_tilde.grid());
//! let gamma = threshold_from_pfa(0.01, l, eta).unwrap();
//! let statistic = t_tilde(&p_tilde).unwrap();
//! assert!((pfa_t_tilde(gamma, l, eta).unwrap() - 0.01).abs() < 1e-12);
//! let _detected = statistic > gamma;
//! ```

pub mod analytic;
pub mod detect;
pub mod error;
pub mod model;
pub mod periodogram;
pub mod prob;
pub mod sim;

pub use analytic::{Eta, RocCurve, RocMeta, RocPoint, RocSource};
pub use detect::{Decision, TestKind, TestReport};
pub use error::{Error, Result};
pub use model::{FourierGrid, NoisePsd, Sinusoid, SinusoidSet, TimeSeries, TrainingSet};
pub use periodogram::{PeriodogramKind, PeriodogramVec};
pub use prob::NoncentralitySpectrum;
pub use sim::{ArModel, CalibratedThreshold, FaHistogram, McConfig, McSummary, McTest};

/// Sizes rayon's global worker pool. Call once, before any parallel work;
/// later calls are ignored if a pool already exists. `0` keeps the default
/// (one worker per core).
pub fn configure_threads(threads: usize) -> Result<()> {
    if threads == 0 {
        return Ok(());
    }
    match rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
    {
        Ok(()) => Ok(()),
        // A pool already exists (e.g. configured by the embedding process).
        Err(_) => Ok(()),
    }
}
