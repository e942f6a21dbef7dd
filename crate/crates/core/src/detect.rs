//! The six sinusoid-detection statistics and the threshold decision rule.
//!
//! Three classical tests run on the classical periodogram (Fisher, robust
//! Fisher, Chiu); their standardized counterparts run on the standardized
//! periodogram (max ordinate, Fisher ratio, Nc-th largest ordinate). Every
//! statistic is a ratio or an order statistic, so all are invariant under
//! positive rescaling of the input.

use crate::analytic::{pfa_t_tilde, pfa_t_tilde_nc, Eta};
use crate::error::{invalid, Error, Result};
use crate::periodogram::{PeriodogramKind, PeriodogramVec};

/// Which detection test to run, with the contamination count `N_c` where
/// the test needs one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    Fisher,
    RobustFisher { n_c: usize },
    Chiu { n_c: usize },
    TTilde,
    TTildeFisher,
    TTildeNc { n_c: usize },
}

impl TestKind {
    /// Stable token used in configs and CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            TestKind::Fisher => "fisher",
            TestKind::RobustFisher { .. } => "robust-fisher",
            TestKind::Chiu { .. } => "chiu",
            TestKind::TTilde => "t-tilde",
            TestKind::TTildeFisher => "t-tilde-fisher",
            TestKind::TTildeNc { .. } => "t-tilde-nc",
        }
    }

    pub fn n_c(&self) -> Option<usize> {
        match self {
            TestKind::RobustFisher { n_c }
            | TestKind::Chiu { n_c }
            | TestKind::TTildeNc { n_c } => Some(*n_c),
            _ => None,
        }
    }

    /// Whether the statistic runs on the standardized periodogram.
    pub fn uses_standardized(&self) -> bool {
        matches!(
            self,
            TestKind::TTilde | TestKind::TTildeFisher | TestKind::TTildeNc { .. }
        )
    }

    /// Whether a closed-form false-alarm probability exists for this test
    /// under colored noise.
    pub fn has_analytic_pfa(&self) -> bool {
        matches!(self, TestKind::TTilde | TestKind::TTildeNc { .. })
    }

    /// Checks `N_c` against the ordinate count `eta = |Ω|`.
    pub fn validate_for(&self, eta: usize) -> Result<()> {
        if let Some(n_c) = self.n_c() {
            if n_c == 0 || n_c + 1 > eta {
                return Err(invalid(format!(
                    "{} requires 1 <= N_c <= {}, got {n_c}",
                    self.name(),
                    eta - 1
                )));
            }
        }
        if eta < 2 {
            return Err(invalid("tests need at least two ordinates"));
        }
        Ok(())
    }
}

impl std::fmt::Display for TestKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.n_c() {
            Some(n_c) => write!(f, "{}(N_c={})", self.name(), n_c),
            None => write!(f, "{}", self.name()),
        }
    }
}

impl std::str::FromStr for TestKind {
    type Err = Error;

    /// Parses the bare test token; `N_c` is attached separately.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fisher" => Ok(TestKind::Fisher),
            "robust-fisher" => Ok(TestKind::RobustFisher { n_c: 1 }),
            "chiu" => Ok(TestKind::Chiu { n_c: 1 }),
            "t-tilde" => Ok(TestKind::TTilde),
            "t-tilde-fisher" => Ok(TestKind::TTildeFisher),
            "t-tilde-nc" => Ok(TestKind::TTildeNc { n_c: 1 }),
            other => Err(invalid(format!("unknown test kind '{other}'"))),
        }
    }
}

impl TestKind {
    /// Replaces the contamination count on kinds that carry one.
    pub fn with_n_c(self, n_c: usize) -> Self {
        match self {
            TestKind::RobustFisher { .. } => TestKind::RobustFisher { n_c },
            TestKind::Chiu { .. } => TestKind::Chiu { n_c },
            TestKind::TTildeNc { .. } => TestKind::TTildeNc { n_c },
            other => other,
        }
    }
}

/// Outcome of comparing a statistic against its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    /// Noise only.
    H0,
    /// At least one sinusoid present.
    H1,
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Decision::H0 => write!(f, "H0"),
            Decision::H1 => write!(f, "H1"),
        }
    }
}

/// A completed test: statistic, threshold, decision and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub kind: TestKind,
    pub statistic: f64,
    pub threshold: f64,
    pub decision: Decision,
    /// Grid index of the ordinate the statistic keys on.
    pub argmax_index: usize,
    /// Closed-form false-alarm probability at the threshold; present only
    /// for the tests that admit one (`t-tilde`, `t-tilde-nc`).
    pub analytic_pfa: Option<f64>,
}

/// Sorted copy of the ordinates, ascending. Ties keep their original
/// (frequency) order, which makes reports deterministic on synthetic inputs.
pub fn order_statistics(p: &PeriodogramVec) -> Vec<f64> {
    let mut v = p.ordinates().to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn require_kind(p: &PeriodogramVec, standardized: bool, what: &str) -> Result<()> {
    let ok = match p.kind() {
        PeriodogramKind::Classical => !standardized,
        PeriodogramKind::Standardized { .. } => standardized,
        PeriodogramKind::Averaged { .. } => false,
    };
    if ok {
        Ok(())
    } else {
        Err(invalid(format!(
            "{what} expects a {} periodogram, got {}",
            if standardized {
                "standardized"
            } else {
                "classical"
            },
            p.kind()
        )))
    }
}

fn max_over_sum(p: &PeriodogramVec, what: &str) -> Result<f64> {
    if p.len() < 2 {
        return Err(invalid(format!("{what} needs at least two ordinates")));
    }
    let sum: f64 = p.ordinates().iter().sum();
    if !(sum > 0.0) {
        return Err(Error::DegenerateInput(format!(
            "{what}: all ordinates are zero"
        )));
    }
    let max = p
        .ordinates()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(max / sum)
}

/// Fisher's statistic: largest classical ordinate over the sum of all of
/// them. Lies in `(0, 1]`.
pub fn fisher_stat(p: &PeriodogramVec) -> Result<f64> {
    require_kind(p, false, "fisher")?;
    max_over_sum(p, "fisher")
}

/// Correction factor `b_r = 1 + r⁻¹ (1 − r) log(1 − r)` for the truncated
/// ordinate sum, with `r = (η − N_c) / η`.
fn robust_fisher_constants(eta: usize, n_c: usize) -> (f64, f64) {
    let r = (eta - n_c) as f64 / eta as f64;
    let b_r = 1.0 + (1.0 - r) * (1.0 - r).ln() / r;
    (r, b_r)
}

/// Robust Fisher statistic: the largest ordinate against the sum of the
/// `η − N_c` smallest, scaled by `b_r · η · r`.
pub fn robust_fisher_stat(p: &PeriodogramVec, n_c: usize) -> Result<f64> {
    require_kind(p, false, "robust-fisher")?;
    TestKind::RobustFisher { n_c }.validate_for(p.len())?;
    let sorted = order_statistics(p);
    let eta = sorted.len();
    let trimmed_sum: f64 = sorted[..eta - n_c].iter().sum();
    if !(trimmed_sum > 0.0) {
        return Err(Error::DegenerateInput(
            "robust-fisher: trimmed ordinate sum is zero".into(),
        ));
    }
    let (r, b_r) = robust_fisher_constants(eta, n_c);
    Ok(b_r * eta as f64 * r * sorted[eta - 1] / trimmed_sum)
}

/// Chiu's statistic: the `N_c`-th largest ordinate against the sum of the
/// `η − N_c` smallest.
pub fn chiu_stat(p: &PeriodogramVec, n_c: usize) -> Result<f64> {
    require_kind(p, false, "chiu")?;
    TestKind::Chiu { n_c }.validate_for(p.len())?;
    let sorted = order_statistics(p);
    let eta = sorted.len();
    let trimmed_sum: f64 = sorted[..eta - n_c].iter().sum();
    if !(trimmed_sum > 0.0) {
        return Err(Error::DegenerateInput(
            "chiu: trimmed ordinate sum is zero".into(),
        ));
    }
    Ok(sorted[eta - n_c] / trimmed_sum)
}

/// The largest standardized ordinate.
pub fn t_tilde(p: &PeriodogramVec) -> Result<f64> {
    require_kind(p, true, "t-tilde")?;
    Ok(p.ordinates()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Fisher's ratio applied to the standardized periodogram. No closed-form
/// null law exists for it, so reports carry no analytic false-alarm rate.
pub fn t_tilde_fisher(p: &PeriodogramVec) -> Result<f64> {
    require_kind(p, true, "t-tilde-fisher")?;
    max_over_sum(p, "t-tilde-fisher")
}

/// The `N_c`-th largest standardized ordinate. `n_c = 1` coincides with
/// [`t_tilde`]; `n_c = |Ω|` is the minimum ordinate.
pub fn t_tilde_nc(p: &PeriodogramVec, n_c: usize) -> Result<f64> {
    require_kind(p, true, "t-tilde-nc")?;
    let eta = p.len();
    if n_c == 0 || n_c > eta {
        return Err(invalid(format!(
            "t-tilde-nc requires 1 <= N_c <= {eta}, got {n_c}"
        )));
    }
    let sorted = order_statistics(p);
    Ok(sorted[eta - n_c])
}

/// Statistic value plus the grid index of the ordinate it keys on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub statistic: f64,
    pub argmax_index: usize,
}

// Grid index of the m-th largest ordinate (1-based m), lowest index first
// among ties.
fn index_of_mth_largest(p: &PeriodogramVec, m: usize) -> usize {
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.sort_by(|&a, &b| {
        p.ordinates()[b]
            .total_cmp(&p.ordinates()[a])
            .then_with(|| a.cmp(&b))
    });
    idx[m - 1] + 1
}

/// Runs one statistic on the appropriate periodogram and reports the
/// dominant ordinate's index (the `N_c`-th largest for the order-statistic
/// tests, the maximum otherwise).
pub fn evaluate(kind: &TestKind, p: &PeriodogramVec) -> Result<Evaluation> {
    let statistic = match *kind {
        TestKind::Fisher => fisher_stat(p)?,
        TestKind::RobustFisher { n_c } => robust_fisher_stat(p, n_c)?,
        TestKind::Chiu { n_c } => chiu_stat(p, n_c)?,
        TestKind::TTilde => t_tilde(p)?,
        TestKind::TTildeFisher => t_tilde_fisher(p)?,
        TestKind::TTildeNc { n_c } => t_tilde_nc(p, n_c)?,
    };
    let argmax_index = match *kind {
        TestKind::Chiu { n_c } | TestKind::TTildeNc { n_c } => index_of_mth_largest(p, n_c),
        _ => p.index_of_max(),
    };
    Ok(Evaluation {
        statistic,
        argmax_index,
    })
}

/// Applies the decision rule: declare `H1` iff `statistic > threshold`
/// (strictly). `analytic_pfa` is kept only for test kinds that admit one.
pub fn decide(
    kind: TestKind,
    statistic: f64,
    threshold: f64,
    argmax_index: usize,
    analytic_pfa: Option<f64>,
) -> TestReport {
    TestReport {
        kind,
        statistic,
        threshold,
        decision: if statistic > threshold {
            Decision::H1
        } else {
            Decision::H0
        },
        argmax_index,
        analytic_pfa: if kind.has_analytic_pfa() {
            analytic_pfa
        } else {
            None
        },
    }
}

/// [`decide`] with the closed-form false-alarm probability attached for the
/// standardized max / order-statistic tests (`l` training members, `eta`
/// ordinates).
pub fn decide_with_analytic(
    kind: TestKind,
    statistic: f64,
    threshold: f64,
    argmax_index: usize,
    l: usize,
    eta: Eta,
) -> Result<TestReport> {
    let pfa = match kind {
        TestKind::TTilde => Some(pfa_t_tilde(threshold, l, eta)?),
        TestKind::TTildeNc { n_c } => Some(pfa_t_tilde_nc(threshold, l, eta, n_c)?),
        _ => None,
    };
    Ok(decide(kind, statistic, threshold, argmax_index, pfa))
}
