//! Experimental apparatus: AR colored-noise generation with an exact
//! spectrum, Monte Carlo estimation of test statistics, empirical threshold
//! calibration, ROC curves and false-alarm frequency histograms.

mod ar;
mod mc;
mod seed;

pub use ar::{ar_generate, ar_psd, default_stellar_ar6, ArModel};
pub use mc::{
    auc_stderr_hanley_mcneil, calibrate_threshold, calibrate_thresholds, empirical_roc,
    fa_frequency_histogram, fa_histogram_from_argmax, mann_whitney_auc, roc_from_statistics,
    run_mc, CalibratedThreshold, ExceedancePoint, FaBin, FaHistogram, HypothesisResults, McConfig,
    McSummary, McTest, TestResults,
};
