//! Closed-form false-alarm and detection rates for the standardized tests,
//! threshold inversion and analytic ROC curves.
//!
//! Everything here works per ordinate count `η = N/2 − 1` and training size
//! `L`; nothing depends on the (unknown) noise PSD except through the
//! leakage noncentralities under the alternative.

use crate::detect::TestKind;
use crate::error::{invalid, Error, Result};
use crate::model::FourierGrid;
use crate::prob::{
    binomial_range_sum, log_survival_one_bin, noncentral_f_cdf, NoncentralitySpectrum,
};

const BISECT_MAX_ITER: usize = 200;
const BISECT_PFA_TOL: f64 = 1e-10;

/// Number of Fourier ordinates in Ω, `η = N/2 − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Eta(usize);

impl Eta {
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(invalid("eta must be at least 1"));
        }
        Ok(Self(count))
    }

    pub fn from_grid(grid: &FourierGrid) -> Self {
        Self(grid.len())
    }

    pub fn get(&self) -> usize {
        self.0
    }
}

impl std::fmt::Display for Eta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn validate_l(l: usize) -> Result<f64> {
    if l == 0 || l > i32::MAX as usize {
        return Err(invalid(format!("L must be in [1, {}], got {l}", i32::MAX)));
    }
    Ok(l as f64)
}

fn validate_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0) || gamma.is_nan() {
        return Err(invalid(format!("gamma must be >= 0, got {gamma}")));
    }
    Ok(())
}

/// False-alarm probability of the standardized max test:
/// `P_FA(γ) = 1 − (1 − (L/(γ+L))^L)^η`.
pub fn pfa_t_tilde(gamma: f64, l: usize, eta: Eta) -> Result<f64> {
    validate_l(l)?;
    validate_gamma(gamma)?;
    if gamma == f64::INFINITY {
        return Ok(0.0);
    }
    // x = (L/(γ+L))^L is the single-bin exceedance probability.
    let x = log_survival_one_bin(gamma, l).exp();
    Ok(-f64::exp_m1(eta.get() as f64 * f64::ln_1p(-x)))
}

/// Exact inverse of [`pfa_t_tilde`]:
/// `γ = L [ (1 − (1 − P_FA)^{1/η})^{−1/L} − 1 ]`.
pub fn threshold_from_pfa(pfa: f64, l: usize, eta: Eta) -> Result<f64> {
    let lf = validate_l(l)?;
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(invalid(format!(
            "target P_FA must lie strictly in (0, 1), got {pfa}"
        )));
    }
    // q = 1 − (1 − pfa)^{1/η}, then γ = L (q^{-1/L} − 1).
    let q = -f64::exp_m1(f64::ln_1p(-pfa) / eta.get() as f64);
    Ok(lf * f64::exp_m1(-q.ln() / lf))
}

/// False-alarm probability of the `N_c`-th-largest standardized test: the
/// chance that at least `N_c` of the `η` independent ordinates exceed `γ`,
/// where each exceeds with probability `x = (L/(γ+L))^L`.
///
/// Computed as the upper binomial tail with the leading term in log space,
/// which stays accurate for `η` in the hundreds and tiny tail masses.
pub fn pfa_t_tilde_nc(gamma: f64, l: usize, eta: Eta, n_c: usize) -> Result<f64> {
    validate_l(l)?;
    validate_gamma(gamma)?;
    let eta_n = eta.get();
    if n_c == 0 || n_c > eta_n {
        return Err(invalid(format!("N_c must be in [1, {eta_n}], got {n_c}")));
    }
    if n_c == 1 {
        return pfa_t_tilde(gamma, l, eta);
    }
    if gamma == 0.0 {
        return Ok(1.0);
    }
    if gamma == f64::INFINITY {
        return Ok(0.0);
    }
    let log_x = log_survival_one_bin(gamma, l);
    let x = log_x.exp();
    if x >= 1.0 {
        return Ok(1.0);
    }
    let log_1mx = f64::ln_1p(-x);
    // Sum whichever binomial tail is smaller, so the complement never
    // cancels: above the mean the lower tail is the small one.
    if (n_c as f64) <= eta_n as f64 * x {
        Ok(1.0 - binomial_range_sum(eta_n, log_x, log_1mx, 0, n_c - 1))
    } else {
        Ok(binomial_range_sum(eta_n, log_x, log_1mx, n_c, eta_n))
    }
}

/// Threshold at which [`pfa_t_tilde_nc`] equals `pfa`, found by monotone
/// bisection (no closed form exists). Tolerance 1e-10 on the probability.
pub fn threshold_from_pfa_t_tilde_nc(pfa: f64, l: usize, eta: Eta, n_c: usize) -> Result<f64> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(invalid(format!(
            "target P_FA must lie strictly in (0, 1), got {pfa}"
        )));
    }
    if n_c == 1 {
        return threshold_from_pfa(pfa, l, eta);
    }
    // P(K ≥ N_c) ≤ P(K ≥ 1), so the max-test threshold brackets from above.
    let mut lo = 0.0;
    let mut hi = threshold_from_pfa(pfa, l, eta)?;
    let mut f_hi = pfa_t_tilde_nc(hi, l, eta, n_c)?;
    debug_assert!(f_hi <= pfa * (1.0 + 1e-9));
    if (f_hi - pfa).abs() <= BISECT_PFA_TOL {
        return Ok(hi);
    }
    for _ in 0..BISECT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let f_mid = pfa_t_tilde_nc(mid, l, eta, n_c)?;
        if (f_mid - pfa).abs() <= BISECT_PFA_TOL {
            return Ok(mid);
        }
        if f_mid > pfa {
            lo = mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    // The interval has collapsed to rounding; accept the conservative side.
    if (f_hi - pfa).abs() <= 1e2 * BISECT_PFA_TOL {
        Ok(hi)
    } else {
        Err(Error::Numeric(format!(
            "threshold bisection did not reach tolerance (pfa={pfa}, L={l}, eta={eta}, N_c={n_c})"
        )))
    }
}

/// Detection probability of the standardized max test under leakage
/// noncentralities `λ_k`: `1 − Π_k Φ_{F_{λ_k}}(γ, 2, 2L)`, with the product
/// accumulated in log space.
pub fn pdet_t_tilde(gamma: f64, lambdas: &NoncentralitySpectrum, l: usize) -> Result<f64> {
    validate_l(l)?;
    validate_gamma(gamma)?;
    let mut log_prod = 0.0;
    for &lambda in lambdas.lambdas() {
        let phi = noncentral_f_cdf(gamma, lambda, l)?;
        if phi == 0.0 {
            return Ok(1.0);
        }
        log_prod += phi.ln();
    }
    Ok(-f64::exp_m1(log_prod))
}

/// Detection probability at a prescribed false-alarm level: the threshold
/// comes from [`threshold_from_pfa`], then [`pdet_t_tilde`] is evaluated.
pub fn pdet_vs_pfa(pfa: f64, lambdas: &NoncentralitySpectrum, l: usize) -> Result<f64> {
    pdet_t_tilde(
        threshold_from_pfa(pfa, l, Eta::from_grid(lambdas.grid()))?,
        lambdas,
        l,
    )
}

// Lower-tail Poisson-binomial mass: c[i] = P(exactly i of the trials
// succeed) for i < n_c, folded one trial at a time in O(η·N_c).
fn poisson_binomial_lower(ps: &[f64], n_c: usize) -> Vec<f64> {
    let mut c = vec![0.0; n_c];
    c[0] = 1.0;
    for (t, &p) in ps.iter().enumerate() {
        // After folding trial t (0-based), counts up to t + 1 are reachable.
        let top = (t + 1).min(n_c - 1);
        for i in (0..=top).rev() {
            let carry = if i > 0 { c[i - 1] * p } else { 0.0 };
            c[i] = c[i] * (1.0 - p) + carry;
        }
    }
    c
}

/// Detection probability of the `N_c`-th-largest standardized test: the
/// chance that at least `N_c` ordinates exceed `γ` when ordinate `k`
/// exceeds independently with probability `1 − Φ_{F_{λ_k}}(γ, 2, 2L)`.
///
/// The exceedance count follows a Poisson-binomial law over the `η`
/// non-identical Bernoulli trials; the `O(η·N_c)` folding recursion
/// evaluates its lower tail exactly, which is algebraically the same sum
/// the combinatorial expansion over index subsets produces. When the
/// complement `1 − Σ` would be a small difference of near-equal numbers,
/// the upper tail is instead accumulated as the complement count's lower
/// tail, a direct sum of positive masses.
pub fn pdet_t_tilde_nc(
    gamma: f64,
    lambdas: &NoncentralitySpectrum,
    l: usize,
    n_c: usize,
) -> Result<f64> {
    validate_l(l)?;
    validate_gamma(gamma)?;
    let eta_n = lambdas.lambdas().len();
    if n_c == 0 || n_c > eta_n {
        return Err(invalid(format!("N_c must be in [1, {eta_n}], got {n_c}")));
    }
    if n_c == 1 {
        return pdet_t_tilde(gamma, lambdas, l);
    }
    let ps = lambdas
        .lambdas()
        .iter()
        .map(|&lambda| Ok(1.0 - noncentral_f_cdf(gamma, lambda, l)?))
        .collect::<Result<Vec<f64>>>()?;
    let lower = poisson_binomial_lower(&ps, n_c);
    let pdet = 1.0 - lower.iter().sum::<f64>();
    if pdet >= 0.5 {
        return Ok(pdet);
    }
    // P(K ≥ N_c) = P(η − K ≤ η − N_c), and η − K counts the complements.
    let qs: Vec<f64> = ps.iter().map(|p| 1.0 - p).collect();
    let lower_complement = poisson_binomial_lower(&qs, eta_n - n_c + 1);
    Ok(lower_complement.iter().sum())
}

/// How a ROC curve was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RocSource {
    /// Closed-form rates.
    Analytic,
    /// Monte Carlo rates over this many trials per hypothesis.
    Empirical { trials: usize },
}

/// One operating point; standard errors are zero on analytic curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub pfa: f64,
    pub pdet: f64,
    pub pfa_stderr: f64,
    pub pdet_stderr: f64,
}

/// Provenance of a ROC curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RocMeta {
    pub test: TestKind,
    pub l: usize,
    pub n: usize,
    pub source: RocSource,
    /// Free-form description of the signal/noise configuration.
    pub description: String,
}

/// A receiver operating characteristic: `(P_FA, P_DET)` points with
/// strictly increasing `P_FA` and nondecreasing `P_DET`.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    points: Vec<RocPoint>,
    meta: RocMeta,
}

impl RocCurve {
    pub fn new(points: Vec<RocPoint>, meta: RocMeta) -> Result<Self> {
        for w in points.windows(2) {
            if w[1].pfa <= w[0].pfa {
                return Err(invalid("ROC P_FA values must be strictly increasing"));
            }
            if w[1].pdet < w[0].pdet - 1e-12 {
                return Err(Error::Numeric(format!(
                    "ROC P_DET decreased from {} to {}",
                    w[0].pdet, w[1].pdet
                )));
            }
        }
        for p in &points {
            if !(0.0..=1.0).contains(&p.pfa) || !(0.0..=1.0).contains(&p.pdet) {
                return Err(invalid("ROC points must lie in [0, 1]²"));
            }
        }
        Ok(Self { points, meta })
    }

    pub fn points(&self) -> &[RocPoint] {
        &self.points
    }

    pub fn meta(&self) -> &RocMeta {
        &self.meta
    }

    /// Area under the curve by the trapezoid rule, with the curve closed at
    /// `(0, 0)` and `(1, 1)`.
    pub fn auc(&self) -> f64 {
        let mut prev = (0.0, 0.0);
        let mut area = 0.0;
        for p in &self.points {
            area += (p.pfa - prev.0) * 0.5 * (p.pdet + prev.1);
            prev = (p.pfa, p.pdet);
        }
        area += (1.0 - prev.0) * 0.5 * (1.0 + prev.1);
        area
    }

    /// Evenly thinned copy keeping at most `max_points` points (endpoints
    /// included). `0` keeps everything.
    pub fn thinned(&self, max_points: usize) -> Self {
        if max_points == 0 || self.points.len() <= max_points || max_points < 2 {
            return self.clone();
        }
        let n = self.points.len();
        let picked: Vec<RocPoint> = (0..max_points)
            .map(|i| self.points[i * (n - 1) / (max_points - 1)])
            .collect();
        Self {
            points: picked,
            meta: self.meta.clone(),
        }
    }
}

/// Analytic ROC curve for `t-tilde` or `t-tilde-nc` over a strictly
/// increasing grid of false-alarm targets: per point, the threshold is
/// inverted (closed form for the max test, bisection otherwise) and the
/// detection rate evaluated under the given noncentralities.
pub fn roc_curve_analytic(
    test: &TestKind,
    lambdas: &NoncentralitySpectrum,
    l: usize,
    pfa_grid: &[f64],
) -> Result<RocCurve> {
    if pfa_grid.is_empty() {
        return Err(invalid("P_FA grid must not be empty"));
    }
    if pfa_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("P_FA grid must be strictly increasing"));
    }
    let eta = Eta::from_grid(lambdas.grid());
    let points = pfa_grid
        .iter()
        .map(|&pfa| {
            let (gamma, pdet) = match *test {
                TestKind::TTilde => {
                    let g = threshold_from_pfa(pfa, l, eta)?;
                    (g, pdet_t_tilde(g, lambdas, l)?)
                }
                TestKind::TTildeNc { n_c } => {
                    let g = threshold_from_pfa_t_tilde_nc(pfa, l, eta, n_c)?;
                    (g, pdet_t_tilde_nc(g, lambdas, l, n_c)?)
                }
                other => {
                    return Err(invalid(format!(
                        "no analytic ROC exists for {other}; use the Monte Carlo harness"
                    )))
                }
            };
            let _ = gamma;
            Ok(RocPoint {
                pfa,
                pdet,
                pfa_stderr: 0.0,
                pdet_stderr: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    RocCurve::new(
        points,
        RocMeta {
            test: *test,
            l,
            n: lambdas.grid().n(),
            source: RocSource::Analytic,
            description: String::new(),
        },
    )
}
