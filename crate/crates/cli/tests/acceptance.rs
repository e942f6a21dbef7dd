//! End-to-end acceptance suite. Each test covers one numbered criterion and
//! prints a pass line; run with `--nocapture` to see them:
//!
//! ```text
//! cargo test -p specdet-cli --test acceptance -- --nocapture
//! ```
//!
//! A1  distribution identities (density norm, CDF vs quadrature)
//! A2  false-alarm control of the standardized tests vs closed forms
//! A3  detection-rate agreement vs closed forms (validates the leakage
//!     noncentralities end to end)
//! A4  combinatorial equivalence of the Poisson-binomial recursion
//! A5  ROC dominance of the standardized tests in the spectral valley
//! A6  false-alarm frequency uniformity (standardized) vs clustering (Fisher)
//! A7  byte-identical outputs across reruns and worker counts
//! A8  threshold inversion roundtrip and large-L limit

use std::process::Command;
use std::sync::OnceLock;

use specdet::analytic::{
    pdet_t_tilde, pdet_t_tilde_nc, pfa_t_tilde_nc, threshold_from_pfa,
    threshold_from_pfa_t_tilde_nc, Eta,
};
use specdet::detect::TestKind;
use specdet::model::{fourier_grid, FourierGrid, SinusoidSet};
use specdet::prob::{f_cdf, f_pdf, noncentral_f_cdf, noncentrality_lambda, NoncentralitySpectrum};
use specdet::sim::{
    ar_psd, auc_stderr_hanley_mcneil, default_stellar_ar6, mann_whitney_auc, run_mc, McConfig,
    McSummary, McTest,
};

const TRIALS: usize = 10_000;
const N: usize = 1024;
const DT: f64 = 60.0;
const HIST_BINS: usize = 50;
// Upper-tail 0.01 chi-square critical value, 49 degrees of freedom.
const CHI2_CRIT_99_DOF49: f64 = 74.9195;

// False-alarm targets whose threshold inversions form the γ grids: the
// first three are the A2 gate; all ten give the A3 detection grid.
const PFA_TARGETS: [f64; 10] = [0.2, 0.15, 0.1, 0.07, 0.05, 0.03, 0.02, 0.01, 0.005, 0.002];
const A2_TARGETS: [f64; 3] = [0.01, 0.05, 0.1];

fn sines_three() -> SinusoidSet {
    SinusoidSet::from_parts(
        &[0.1, 0.1, 0.1],
        &[5.0e-3, 5.75e-3, 6.5e-3],
        &[0.9, 2.3, 5.1],
    )
    .unwrap()
}

fn sines_valley() -> SinusoidSet {
    SinusoidSet::from_parts(
        &[0.08; 5],
        &[5.0e-3, 5.5e-3, 5.75e-3, 6.0e-3, 6.5e-3],
        &[0.3, 1.1, 2.0, 3.3, 4.6],
    )
    .unwrap()
}

fn grid() -> FourierGrid {
    fourier_grid(N, DT).unwrap()
}

// Ascending threshold grids for the standardized tests, from the target
// inversions (closed form for the max test, bisection for the N_c-th).
fn gamma_grid(l: usize, n_c: Option<usize>) -> Vec<f64> {
    let eta = Eta::from_grid(&grid());
    let mut gammas: Vec<f64> = PFA_TARGETS
        .iter()
        .map(|&p| match n_c {
            None => threshold_from_pfa(p, l, eta).unwrap(),
            Some(n_c) => threshold_from_pfa_t_tilde_nc(p, l, eta, n_c).unwrap(),
        })
        .collect();
    gammas.sort_by(f64::total_cmp);
    gammas
}

fn fig1_config(l: usize, master_seed: u64) -> McConfig {
    McConfig {
        trials: TRIALS,
        master_seed,
        n: N,
        dt: DT,
        l,
        sines: sines_three(),
        noise: default_stellar_ar6(),
        tests: vec![
            McTest {
                kind: TestKind::TTilde,
                gammas: gamma_grid(l, None),
            },
            McTest {
                kind: TestKind::TTildeNc { n_c: 3 },
                gammas: gamma_grid(l, Some(3)),
            },
            McTest {
                kind: TestKind::Fisher,
                gammas: vec![],
            },
        ],
        run_h0: true,
        run_h1: true,
        keep_statistics: false,
        histogram_bins: HIST_BINS,
    }
}

fn fig1_summary_l5() -> &'static McSummary {
    static RUN: OnceLock<McSummary> = OnceLock::new();
    RUN.get_or_init(|| run_mc(&fig1_config(5, 101)).unwrap())
}

fn fig1_summary_l100() -> &'static McSummary {
    static RUN: OnceLock<McSummary> = OnceLock::new();
    RUN.get_or_init(|| run_mc(&fig1_config(100, 102)).unwrap())
}

fn fig1_summary(l: usize) -> &'static McSummary {
    match l {
        5 => fig1_summary_l5(),
        100 => fig1_summary_l100(),
        _ => unreachable!(),
    }
}

#[test]
fn a1_distribution_identities() {
    // Substituting u = L/(L+γ) maps the density onto a polynomial and the
    // half-line onto (0, 1]; composite Simpson there is the quadrature
    // oracle for both the norm and the CDF.
    let panels = 1 << 15;
    let simpson = |lo: f64, hi: f64, f: &dyn Fn(f64) -> f64| -> f64 {
        let h = (hi - lo) / panels as f64;
        let mut acc = f(lo) + f(hi);
        for i in 1..panels {
            let x = lo + i as f64 * h;
            acc += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    };
    for l in [1usize, 2, 5, 20, 100] {
        let lf = l as f64;
        // dγ = L/u² du and f_pdf(γ(u)) = u^{L+1}, so the integrand is L·u^{L−1}.
        let transformed = |u: f64| -> f64 {
            let gamma = lf * (1.0 - u) / u;
            f_pdf(gamma, l).unwrap() * lf / (u * u)
        };
        let norm = simpson(1e-12, 1.0, &transformed);
        assert!((norm - 1.0).abs() < 1e-10, "L={l}: density norm {norm}");
        for i in 0..=100 {
            let gamma = i as f64;
            let u_lo = lf / (lf + gamma);
            let integral = simpson(u_lo, 1.0, &transformed);
            let cdf = f_cdf(gamma, l).unwrap();
            assert!(
                (cdf - integral).abs() < 1e-10,
                "L={l} γ={gamma}: CDF {cdf} vs quadrature {integral}"
            );
        }
    }
    println!(
        "[A1] PASS - density norm and CDF match quadrature within 1e-10 for L in {{1,2,5,20,100}}"
    );
}

#[test]
fn a2_false_alarm_control() {
    let eta = Eta::from_grid(&grid());
    for l in [5usize, 100] {
        let summary = fig1_summary(l);
        for (kind, n_c) in [
            (TestKind::TTilde, None),
            (TestKind::TTildeNc { n_c: 3 }, Some(3)),
        ] {
            let results = summary.test_results(&kind, false).unwrap();
            for &p in &A2_TARGETS {
                let gamma = match n_c {
                    None => threshold_from_pfa(p, l, eta).unwrap(),
                    Some(n_c) => threshold_from_pfa_t_tilde_nc(p, l, eta, n_c).unwrap(),
                };
                let point = results
                    .exceedance
                    .iter()
                    .find(|e| e.gamma == gamma)
                    .expect("A2 thresholds are in the gamma grid");
                let sigma = (p * (1.0 - p) / TRIALS as f64).sqrt();
                assert!(
                    (point.rate - p).abs() <= 3.0 * sigma,
                    "L={l} {kind} target {p}: empirical {} deviates {:+.2}σ",
                    point.rate,
                    (point.rate - p) / sigma
                );
            }
        }
    }
    println!("[A2] PASS - empirical false-alarm rates within 3σ of the closed forms (L in {{5,100}}, targets {{0.01,0.05,0.1}})");
}

#[test]
fn a3_detection_rate_agreement() {
    let g = grid();
    let psd = ar_psd(&default_stellar_ar6(), &g);
    let lambdas = noncentrality_lambda(&sines_three(), &psd, &g).unwrap();
    for l in [5usize, 100] {
        let summary = fig1_summary(l);
        for (kind, n_c) in [
            (TestKind::TTilde, None),
            (TestKind::TTildeNc { n_c: 3 }, Some(3)),
        ] {
            let results = summary.test_results(&kind, true).unwrap();
            let gammas = gamma_grid(l, n_c);
            assert_eq!(gammas.len(), 10);
            for (point, &gamma) in results.exceedance.iter().zip(&gammas) {
                assert_eq!(point.gamma, gamma);
                let pdet = match n_c {
                    None => pdet_t_tilde(gamma, &lambdas, l).unwrap(),
                    Some(n_c) => pdet_t_tilde_nc(gamma, &lambdas, l, n_c).unwrap(),
                };
                let sigma = (pdet * (1.0 - pdet) / TRIALS as f64).sqrt().max(1e-9);
                assert!(
                    (point.rate - pdet).abs() <= 3.0 * sigma,
                    "L={l} {kind} γ={gamma:.3}: empirical {} vs analytic {pdet} ({:+.2}σ)",
                    point.rate,
                    (point.rate - pdet) / sigma
                );
            }
        }
    }
    println!("[A3] PASS - empirical detection rates within 3σ of the closed forms over the 10-point γ grids (L in {{5,100}})");
}

// Direct expansion over index subsets of `Ω`, the combinatorial oracle.
fn at_least_by_enumeration(ps: &[f64], n_c: usize) -> f64 {
    let n = ps.len();
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        if (mask.count_ones() as usize) < n_c {
            continue;
        }
        let mut prob = 1.0;
        for (k, &p) in ps.iter().enumerate() {
            prob *= if mask & (1 << k) != 0 { p } else { 1.0 - p };
        }
        total += prob;
    }
    total
}

#[test]
fn a4_combinatorial_equivalence() {
    // Deterministic pseudo-random λ vectors via SplitMix64.
    let mut state = 0xA4A4_A4A4u64;
    let mut next_uniform = move || {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        (z ^ (z >> 31)) as f64 / u64::MAX as f64
    };
    let l = 5usize;
    let mut vectors = 0;
    let mut checks = 0;
    for eta_n in 1..=12usize {
        for _ in 0..9 {
            let lambdas: Vec<f64> = (0..eta_n).map(|_| 0.5 + 19.5 * next_uniform()).collect();
            let g = fourier_grid(2 * (eta_n + 1), 1.0).unwrap();
            let spectrum = NoncentralitySpectrum::new(g, lambdas.clone()).unwrap();
            vectors += 1;
            for n_c in 1..=4usize.min(eta_n) {
                for &gamma in &[0.5, 2.0, 8.0] {
                    let fast = pdet_t_tilde_nc(gamma, &spectrum, l, n_c).unwrap();
                    let ps: Vec<f64> = lambdas
                        .iter()
                        .map(|&lam| 1.0 - noncentral_f_cdf(gamma, lam, l).unwrap())
                        .collect();
                    let slow = at_least_by_enumeration(&ps, n_c);
                    assert!(
                        (fast - slow).abs() <= 1e-12 * slow.max(1e-300),
                        "η={eta_n} N_c={n_c} γ={gamma}: recursion {fast} vs enumeration {slow}"
                    );
                    checks += 1;
                }
            }
        }
    }
    assert!(vectors >= 100);
    println!("[A4] PASS - Poisson-binomial recursion equals subset enumeration within 1e-12 relative ({checks} checks, {vectors} λ vectors, η ≤ 12)");
}

#[test]
fn a5_roc_dominance_in_valley() {
    let cfg = McConfig {
        trials: TRIALS,
        master_seed: 505,
        n: N,
        dt: DT,
        l: 100,
        sines: sines_valley(),
        noise: default_stellar_ar6(),
        tests: vec![
            McTest {
                kind: TestKind::TTilde,
                gammas: vec![],
            },
            McTest {
                kind: TestKind::TTildeNc { n_c: 5 },
                gammas: vec![],
            },
            McTest {
                kind: TestKind::Fisher,
                gammas: vec![],
            },
            McTest {
                kind: TestKind::Chiu { n_c: 5 },
                gammas: vec![],
            },
        ],
        run_h0: true,
        run_h1: true,
        keep_statistics: true,
        histogram_bins: HIST_BINS,
    };
    let summary = run_mc(&cfg).unwrap();
    let auc_of = |kind: &TestKind| -> (f64, f64) {
        let h0 = &summary.test_results(kind, false).unwrap().statistics;
        let h1 = &summary.test_results(kind, true).unwrap().statistics;
        let auc = mann_whitney_auc(h0, h1);
        (auc, auc_stderr_hanley_mcneil(auc, h0.len(), h1.len()))
    };
    let standardized = [
        auc_of(&TestKind::TTilde),
        auc_of(&TestKind::TTildeNc { n_c: 5 }),
    ];
    let classical = [
        auc_of(&TestKind::Fisher),
        auc_of(&TestKind::Chiu { n_c: 5 }),
    ];
    for (i, &(auc_s, se_s)) in standardized.iter().enumerate() {
        for (j, &(auc_c, se_c)) in classical.iter().enumerate() {
            let pooled = (se_s * se_s + se_c * se_c).sqrt();
            assert!(
                auc_s - auc_c > 3.0 * pooled,
                "standardized[{i}] AUC {auc_s} does not dominate classical[{j}] AUC {auc_c} (3×pooled = {})",
                3.0 * pooled
            );
        }
    }
    println!(
        "[A5] PASS - valley AUCs: t-tilde {:.3}, t-tilde-nc {:.3} dominate fisher {:.3}, chiu {:.3} beyond 3 pooled SE",
        standardized[0].0, standardized[1].0, classical[0].0, classical[1].0
    );
}

fn gof_statistic(hist: &[u64], eta: usize, bins: usize) -> f64 {
    let trials: u64 = hist.iter().sum();
    (0..bins)
        .map(|b| {
            let width = (1..=eta).filter(|&k| (k - 1) * bins / eta == b).count();
            let expected = trials as f64 * width as f64 / eta as f64;
            let d = hist[b] as f64 - expected;
            d * d / expected
        })
        .sum()
}

#[test]
fn a6_false_alarm_frequency_uniformity() {
    let summary = fig1_summary(100);
    let h0_ttilde = summary.test_results(&TestKind::TTilde, false).unwrap();
    let h0_fisher = summary.test_results(&TestKind::Fisher, false).unwrap();
    let eta = grid().len();

    let gof_t = gof_statistic(&h0_ttilde.argmax_hist, eta, HIST_BINS);
    assert!(
        gof_t < CHI2_CRIT_99_DOF49,
        "standardized-max argmax rejects uniformity: χ² = {gof_t}"
    );
    let gof_f = gof_statistic(&h0_fisher.argmax_hist, eta, HIST_BINS);
    assert!(
        gof_f > CHI2_CRIT_99_DOF49,
        "fisher argmax fails to reject uniformity: χ² = {gof_f}"
    );

    // Fisher's modal bin must sit inside the top-PSD decile of frequencies.
    let psd = ar_psd(&default_stellar_ar6(), &grid());
    let mut by_power: Vec<usize> = (1..=eta).collect();
    by_power.sort_by(|&a, &b| psd.value(b).total_cmp(&psd.value(a)));
    let decile: std::collections::HashSet<usize> = by_power[..eta / 10].iter().copied().collect();
    let modal_bin = h0_fisher
        .argmax_hist
        .iter()
        .enumerate()
        .max_by_key(|(_, &c)| c)
        .unwrap()
        .0;
    for k in 1..=eta {
        if (k - 1) * HIST_BINS / eta == modal_bin {
            assert!(
                decile.contains(&k),
                "index {k} of fisher's modal bin {modal_bin} is outside the top-PSD decile"
            );
        }
    }
    println!(
        "[A6] PASS - argmax GOF over {HIST_BINS} bins: t-tilde χ² = {gof_t:.1} (uniform), fisher χ² = {gof_f:.1} (rejects; modal bin in top-PSD decile)"
    );
}

#[test]
fn a7_deterministic_reproducibility() {
    let tmp = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("a7");
    std::fs::create_dir_all(&tmp).unwrap();
    let config_path = tmp.join("repro.toml");
    std::fs::write(
        &config_path,
        r#"
schema = "specdet-config-v1"

[grid]
n = 64
dt_s = 1.0

[training]
mode = "synthetic-ar"
l = 3

[noise]
kind = "ar"
coeffs = [0.6]
sigma = 1.0

[signal]
amplitudes = [0.8]
frequencies_hz = [0.203]
phases_rad = [1.2]

[tests]
kinds = ["t-tilde", "t-tilde-nc", "t-tilde-fisher", "fisher", "robust-fisher", "chiu"]
n_c = 2

[mc]
trials = 1200
master_seed = 777

[detect]
pfa = 0.1
calibration_trials = 1000

[validate]
pfa_targets = [0.05, 0.1, 0.3]

[roc]
pfa_grid = [0.01, 0.05, 0.1, 0.3, 0.6]
max_points = 64

[histogram]
bins = 10

[calibrate]
pfa_targets = [0.1, 0.2]

[output]
dir = "unused"
"#,
    )
    .unwrap();

    let bin = env!("CARGO_BIN_EXE_specdet");
    let run = |command: &str, out: &std::path::Path, threads: &str| {
        let status = Command::new(bin)
            .args([
                command,
                "--config",
                config_path.to_str().unwrap(),
                "--threads",
                threads,
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .expect("binary runs");
        assert!(status.success(), "{command} failed");
    };
    for command in ["validate", "roc", "histogram", "calibrate", "detect"] {
        let d1 = tmp.join(format!("{command}-t1"));
        let d8 = tmp.join(format!("{command}-t8"));
        let d8b = tmp.join(format!("{command}-t8b"));
        run(command, &d1, "1");
        run(command, &d8, "8");
        run(command, &d8b, "8");
        let file = format!("{command}.csv");
        let b1 = std::fs::read(d1.join(&file)).unwrap();
        let b8 = std::fs::read(d8.join(&file)).unwrap();
        let b8b = std::fs::read(d8b.join(&file)).unwrap();
        assert!(!b1.is_empty());
        assert_eq!(b1, b8, "{command}: 1-thread vs 8-thread outputs differ");
        assert_eq!(b8, b8b, "{command}: repeated 8-thread outputs differ");
    }
    println!(
        "[A7] PASS - all five commands byte-identical across reruns and 1 vs 8 worker threads"
    );
}

#[test]
fn a8_threshold_roundtrip_and_limits() {
    for &l in &[1usize, 5, 100] {
        for &eta_n in &[7usize, 511] {
            let eta = Eta::new(eta_n).unwrap();
            for &p in &[1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.2, 0.5] {
                let gamma = threshold_from_pfa(p, l, eta).unwrap();
                let back = specdet::analytic::pfa_t_tilde(gamma, l, eta).unwrap();
                assert!(
                    (back - p).abs() < 1e-12 * p.max(1e-12),
                    "L={l} η={eta_n} p={p}: roundtrip {back}"
                );
            }
        }
    }
    // L → ∞: a standardized ordinate tends to Exp(1), so the threshold
    // tends to −log(1 − (1 − pfa)^{1/η}).
    let eta = Eta::new(511).unwrap();
    for &p in &[1e-3, 0.01, 0.1, 0.5] {
        let g = threshold_from_pfa(p, 1_000_000, eta).unwrap();
        let q = -f64::exp_m1(f64::ln_1p(-p) / 511.0);
        let limit = -q.ln();
        assert!(
            (g - limit).abs() / limit < 1e-3,
            "p={p}: {g} vs limit {limit}"
        );
    }
    // consistency of the N_c inversion at its extremes
    let g = threshold_from_pfa_t_tilde_nc(0.05, 5, eta, 3).unwrap();
    let back = pfa_t_tilde_nc(g, 5, eta, 3).unwrap();
    assert!((back - 0.05).abs() < 1e-9);
    println!("[A8] PASS - threshold roundtrip below 1e-12 relative; large-L threshold within 1e-3 of the exponential limit");
}
