//! Spectral-leakage kernels and the F-distribution machinery that governs
//! standardized periodogram ordinates.
//!
//! Frequencies here are normalized (cycles per sample); public entry points
//! taking Hz convert through the grid before calling down.

use crate::error::{invalid, Error, Result};
use crate::model::{FourierGrid, NoisePsd, SinusoidSet};

/// Maximum number of Poisson-mixture terms in the noncentral F CDF series.
const NONCENTRAL_TERM_CAP: usize = 100_000;
/// Stop expanding the Poisson mixture once the unexplored mass is below this.
const NONCENTRAL_TAIL_TOL: f64 = 1e-13;
/// Individual mixture weights below this cannot move the sum at the target
/// tolerance (the cumulative-mass gauge itself carries rounding noise of
/// order terms·ε, so it cannot serve as the only stop).
const NONCENTRAL_WEIGHT_FLOOR: f64 = 1e-22;

/// Signed Dirichlet ratio `sin(Nπν) / (N sin(πν))` with its analytic limit
/// `(-1)^{m(N-1)}` at integer `ν = m`.
pub fn dirichlet_ratio(nu: f64, n: usize) -> f64 {
    debug_assert!(n >= 1);
    let m = nu.round();
    let d = nu - m;
    // (-1)^{m(N-1)}: the ratio flips sign across each integer when N is even.
    let sign = if (n - 1) % 2 == 0 || (m as i64) % 2 == 0 {
        1.0
    } else {
        -1.0
    };
    if d.abs() < 1e-300 {
        return sign;
    }
    let nf = n as f64;
    let ratio = (nf * std::f64::consts::PI * d).sin() / (nf * (std::f64::consts::PI * d).sin());
    (sign * ratio).clamp(-1.0, 1.0)
}

/// Fejér kernel `K_N(ν) = (sin(Nπν) / (N sin(πν)))²`, with value 1 at
/// integer `ν`. Even and 1-periodic; range `[0, 1]`.
pub fn fejer_kernel(nu: f64, n: usize) -> f64 {
    let d = dirichlet_ratio(nu, n);
    (d * d).min(1.0)
}

/// Per-bin noncentrality `λ(ν_k)` over a Fourier grid: the signal energy
/// (relative to the noise PSD) leaked into each bin by every sinusoid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoncentralitySpectrum {
    grid: FourierGrid,
    lambda: Vec<f64>,
}

impl NoncentralitySpectrum {
    /// Wraps externally supplied noncentralities; one finite nonnegative
    /// value per grid index.
    pub fn new(grid: FourierGrid, lambda: Vec<f64>) -> Result<Self> {
        if lambda.len() != grid.len() {
            return Err(invalid(format!(
                "expected {} noncentralities for the grid, got {}",
                grid.len(),
                lambda.len()
            )));
        }
        if let Some(i) = lambda.iter().position(|l| !l.is_finite() || *l < 0.0) {
            return Err(invalid(format!(
                "noncentrality at index {} must be finite and >= 0",
                i + 1
            )));
        }
        Ok(Self { grid, lambda })
    }

    /// A spectrum that is identically zero (the null hypothesis).
    pub fn zero(grid: FourierGrid) -> Self {
        Self {
            grid,
            lambda: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    /// `λ_k` in grid order; slot `i` holds index `k = i + 1`.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    /// `λ` at physical grid index `k ∈ Ω`.
    pub fn lambda(&self, k: usize) -> f64 {
        self.lambda[k - 1]
    }

    pub fn is_all_zero(&self) -> bool {
        self.lambda.iter().all(|&l| l == 0.0)
    }
}

/// Evaluates the leakage noncentrality of every grid bin for a sinusoid set
/// against a noise PSD:
///
/// ```text
/// λ(ν_k) = N / (2 S(ν_k)) · Σ_i α_i² [ K_N(f_i − ν_k) + K_N(f_i + ν_k)
///          − 2 D_N(f_i − ν_k) D_N(f_i + ν_k) cos(2π(N+1) f_i + 2 φ_i) ]
/// ```
///
/// with all frequencies normalized and `t_j = (j + 1) dt`. The cross term
/// carries a minus sign in this time-origin convention; the unit oracle
/// below checks the whole expression against a direct DFT evaluation.
/// Rounding near kernel zeros can leave tiny negative residues, which are
/// clamped to zero.
pub fn noncentrality_lambda(
    sines: &SinusoidSet,
    psd: &NoisePsd,
    grid: &FourierGrid,
) -> Result<NoncentralitySpectrum> {
    if psd.grid() != grid {
        return Err(invalid("PSD grid does not match the requested grid"));
    }
    sines.validate_against(grid)?;
    let n = grid.n();
    let nf = n as f64;
    let lambda = grid
        .indices()
        .map(|k| {
            let nu = k as f64 / nf;
            let sum: f64 = sines
                .iter()
                .map(|s| {
                    let f = grid.normalized(s.freq_hz);
                    let dm = dirichlet_ratio(f - nu, n);
                    let dp = dirichlet_ratio(f + nu, n);
                    let cross =
                        (2.0 * std::f64::consts::PI * (nf + 1.0) * f + 2.0 * s.phase_rad).cos();
                    s.amplitude * s.amplitude * (dm * dm + dp * dp - 2.0 * dm * dp * cross)
                })
                .sum();
            (nf / (2.0 * psd.value(k)) * sum).max(0.0)
        })
        .collect();
    Ok(NoncentralitySpectrum {
        grid: *grid,
        lambda,
    })
}

fn validate_l(l: usize) -> Result<f64> {
    if l == 0 || l > i32::MAX as usize {
        return Err(invalid(format!("L must be in [1, {}], got {l}", i32::MAX)));
    }
    Ok(l as f64)
}

/// Density of a standardized ordinate under the null: `(1 + γ/L)^{-L-1}`.
pub fn f_pdf(gamma: f64, l: usize) -> Result<f64> {
    let lf = validate_l(l)?;
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(invalid(format!(
            "gamma must be finite and >= 0, got {gamma}"
        )));
    }
    Ok((1.0 + gamma / lf).powi(-(l as i32) - 1))
}

/// CDF of a standardized ordinate under the null:
/// `Φ_F(γ, 2, 2L) = 1 − (L / (γ + L))^L`.
pub fn f_cdf(gamma: f64, l: usize) -> Result<f64> {
    let lf = validate_l(l)?;
    if !(gamma >= 0.0) || gamma.is_nan() {
        return Err(invalid(format!("gamma must be >= 0, got {gamma}")));
    }
    if gamma == f64::INFINITY {
        return Ok(1.0);
    }
    // 1 - exp(-L ln(1 + γ/L)), accurate for both tiny and huge γ.
    Ok(-f64::exp_m1(-lf * f64::ln_1p(gamma / lf)))
}

/// Log of the single-bin exceedance probability `(L / (γ + L))^L`.
pub(crate) fn log_survival_one_bin(gamma: f64, l: usize) -> f64 {
    -(l as f64) * f64::ln_1p(gamma / l as f64)
}

/// Sum of `C(eta, i) x^i (1-x)^(eta-i)` over `i ∈ [from, to]`, with
/// `x`, `1-x` supplied as logs. Accumulated outward from the in-range mode,
/// so an underflowing edge term never swallows interior mass; terms away
/// from the mode shrink monotonically and are cut once negligible.
pub(crate) fn binomial_range_sum(
    eta: usize,
    log_x: f64,
    log_1mx: f64,
    from: usize,
    to: usize,
) -> f64 {
    debug_assert!(from <= to && to <= eta);
    let x = log_x.exp();
    let start = ((((eta + 1) as f64) * x).floor() as usize).clamp(from, to);
    let ln_term = |i: usize| {
        ln_binomial(eta as u64, i as u64) + i as f64 * log_x + (eta - i) as f64 * log_1mx
    };
    let t_start = ln_term(start).exp();
    let ratio_up = (log_x - log_1mx).exp();
    let mut sum = t_start;
    let mut t = t_start;
    let mut i = start;
    while i < to {
        t *= ratio_up * (eta - i) as f64 / (i + 1) as f64;
        i += 1;
        sum += t;
        if t < sum * 1e-18 {
            break;
        }
    }
    t = t_start;
    i = start;
    while i > from {
        t *= i as f64 / (ratio_up * (eta - i + 1) as f64);
        i -= 1;
        sum += t;
        if t < sum * 1e-18 {
            break;
        }
    }
    sum.min(1.0)
}

// Regularized incomplete beta I_z(a, b) for integer a >= 1, b >= 1:
// the binomial tail P(Bin(a+b-1, z) >= a).
fn reg_inc_beta_int(a: u64, b: u64, log_z: f64, log_w: f64) -> f64 {
    let n = (a + b - 1) as usize;
    binomial_range_sum(n, log_z, log_w, a as usize, n)
}

pub(crate) fn ln_binomial(n: u64, k: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// CDF at `gamma` of the ratio `(χ²_{2,λ}/2) / (χ²_{2L}/2L)`, the law of a
/// standardized ordinate carrying leakage `λ`.
///
/// Evaluated as a Poisson(λ/2)-weighted mixture of central terms
/// `I_z(j+1, L)` with `z = γ/(γ+L)`, expanded outward from the Poisson mode
/// until the unexplored mass is below 1e-13 (well under the 1e-12 budget).
/// Reduces exactly to [`f_cdf`] when `λ = 0`.
pub fn noncentral_f_cdf(gamma: f64, lambda: f64, l: usize) -> Result<f64> {
    let lf = validate_l(l)?;
    if !(gamma >= 0.0) || gamma.is_nan() {
        return Err(invalid(format!("gamma must be >= 0, got {gamma}")));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return f_cdf(gamma, l);
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    if gamma == f64::INFINITY {
        return Ok(1.0);
    }

    let z = gamma / (gamma + lf);
    let w = lf / (gamma + lf);
    let (log_z, log_w) = (z.ln(), w.ln());
    let h = lambda / 2.0;
    let mode = h.floor() as u64;
    if mode as usize >= NONCENTRAL_TERM_CAP {
        return Err(Error::Numeric(format!(
            "noncentral series needs more than {NONCENTRAL_TERM_CAP} terms (gamma={gamma}, lambda={lambda}, L={l})"
        )));
    }

    // Poisson(h) weight and beta tail at the mode, both from logs.
    let log_w_mode = if mode == 0 {
        -h
    } else {
        -h + mode as f64 * h.ln() - libm::lgamma(mode as f64 + 1.0)
    };
    let weight_mode = log_w_mode.exp();
    let beta_mode = reg_inc_beta_int(mode + 1, l as u64, log_z, log_w);
    // T_a = z^a w^L Γ(a+L) / (Γ(a+1) Γ(L)), the decrement I_z(a,L) − I_z(a+1,L).
    let log_t = |a: f64| -> f64 {
        a * log_z + lf * log_w + libm::lgamma(a + lf) - libm::lgamma(a + 1.0) - libm::lgamma(lf)
    };

    let mut total = weight_mode * beta_mode;
    let mut mass = weight_mode;
    let mut terms = 1usize;

    // Downward from the mode: B_{j-1} = B_j + T_j, weights shrink by j/h.
    {
        let mut j = mode;
        let mut weight = weight_mode;
        let mut beta = beta_mode;
        let mut t_j = log_t(mode as f64).exp();
        while j > 0 && 1.0 - mass > NONCENTRAL_TAIL_TOL && weight > NONCENTRAL_WEIGHT_FLOOR {
            weight *= j as f64 / h;
            beta = (beta + t_j).min(1.0);
            j -= 1;
            t_j *= (j + 1) as f64 / (z * (lf + j as f64));
            total += weight * beta;
            mass += weight;
            terms += 1;
            if terms > NONCENTRAL_TERM_CAP {
                return Err(Error::Numeric(format!(
                    "noncentral series exceeded {NONCENTRAL_TERM_CAP} terms (gamma={gamma}, lambda={lambda}, L={l})"
                )));
            }
        }
    }

    // Upward from the mode: B_{j+1} = B_j − T_{j+1}, weights shrink once past h.
    {
        let mut j = mode;
        let mut weight = weight_mode;
        let mut beta = beta_mode;
        let mut t_next = log_t(mode as f64 + 1.0).exp();
        while 1.0 - mass > NONCENTRAL_TAIL_TOL {
            weight *= h / (j + 1) as f64;
            beta = (beta - t_next).max(0.0);
            j += 1;
            t_next *= z * (lf + j as f64) / (j as f64 + 1.0);
            total += weight * beta;
            mass += weight;
            terms += 1;
            if weight < NONCENTRAL_WEIGHT_FLOOR && j as f64 > h {
                break;
            }
            if terms > NONCENTRAL_TERM_CAP {
                return Err(Error::Numeric(format!(
                    "noncentral series exceeded {NONCENTRAL_TERM_CAP} terms (gamma={gamma}, lambda={lambda}, L={l})"
                )));
            }
        }
    }

    Ok(total)
}
