//! The five batch commands: detect, validate, roc, histogram, calibrate.

use std::path::Path;

use specdet::analytic::{
    pdet_t_tilde, pdet_t_tilde_nc, pfa_t_tilde, pfa_t_tilde_nc, roc_curve_analytic,
    threshold_from_pfa, threshold_from_pfa_t_tilde_nc, Eta, RocMeta, RocSource,
};
use specdet::detect::{decide, decide_with_analytic, evaluate, TestKind, TestReport};
use specdet::model::{synthesize, FourierGrid, NoisePsd, SinusoidSet, TimeSeries, TrainingSet};
use specdet::periodogram::{averaged_periodogram, classical_periodogram, standardized_periodogram};
use specdet::prob::{noncentrality_lambda, NoncentralitySpectrum};
use specdet::sim::{
    ar_generate, ar_psd, calibrate_thresholds, fa_histogram_from_argmax, roc_from_statistics,
    run_mc, ArModel, McConfig, McTest,
};

use crate::config::{ExperimentConfig, TrainingMode};
use crate::error::{CliError, CliResult};
use crate::output::{fmt, fmt_opt, out_path, CsvTable};
use crate::series::load_series;

// Keeps detect's calibration noise draws disjoint from the synthetic
// observation / training streams derived from the same master seed.
const CALIBRATION_SEED_TAG: u64 = 0x5ca1_ab1e;
const DEFAULT_ROC_MAX_POINTS: usize = 512;

fn grid_of(cfg: &ExperimentConfig) -> CliResult<FourierGrid> {
    FourierGrid::new(cfg.grid.n, cfg.grid.dt_s).map_err(|e| CliError::config(e.to_string()))
}

fn require_pfa_in_unit(p: f64, what: &str) -> CliResult<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(CliError::config(format!(
            "{what} must lie strictly in (0, 1), got {p}"
        )));
    }
    Ok(())
}

fn lambdas_for(
    sines: &SinusoidSet,
    psd: &NoisePsd,
    grid: &FourierGrid,
) -> CliResult<NoncentralitySpectrum> {
    Ok(noncentrality_lambda(sines, psd, grid)?)
}

fn base_mc(
    cfg: &ExperimentConfig,
    noise: ArModel,
    l: usize,
    master_seed: u64,
    trials: usize,
    sines: SinusoidSet,
) -> McConfig {
    McConfig {
        trials,
        master_seed,
        n: cfg.grid.n,
        dt: cfg.grid.dt_s,
        l,
        sines,
        noise,
        tests: Vec::new(),
        run_h0: true,
        run_h1: false,
        keep_statistics: false,
        histogram_bins: cfg.histogram_bins(),
    }
}

/// `validate`: tabulates analytic vs empirical false-alarm and detection
/// rates for the standardized max / order-statistic tests over a threshold
/// grid derived from the configured targets.
pub fn cmd_validate(cfg: &ExperimentConfig, seed: Option<u64>, out_dir: &Path) -> CliResult<()> {
    let (noise, l) = cfg.require_synthetic()?;
    let mc = cfg.mc_section()?;
    let master_seed = seed.unwrap_or(mc.master_seed);
    let section = cfg
        .validate
        .as_ref()
        .ok_or_else(|| CliError::config("validate requires a [validate] section"))?;
    if section.pfa_targets.is_empty() {
        return Err(CliError::config("validate.pfa_targets must not be empty"));
    }
    for &p in &section.pfa_targets {
        require_pfa_in_unit(p, "validate.pfa_targets entry")?;
    }
    let grid = grid_of(cfg)?;
    let eta = Eta::from_grid(&grid);
    let sines = cfg.sines()?;
    let kinds: Vec<TestKind> = cfg
        .test_kinds()?
        .into_iter()
        .filter(|k| k.has_analytic_pfa())
        .collect();
    if kinds.is_empty() {
        return Err(CliError::config(
            "validate needs t-tilde or t-tilde-nc among tests.kinds",
        ));
    }
    let psd = ar_psd(&noise, &grid);
    let lambdas = lambdas_for(&sines, &psd, &grid)?;

    let mut gamma_lists: Vec<Vec<f64>> = Vec::with_capacity(kinds.len());
    for kind in &kinds {
        let mut gammas: Vec<f64> = section
            .pfa_targets
            .iter()
            .map(|&p| match *kind {
                TestKind::TTilde => Ok(threshold_from_pfa(p, l, eta)?),
                TestKind::TTildeNc { n_c } => Ok(threshold_from_pfa_t_tilde_nc(p, l, eta, n_c)?),
                _ => unreachable!("filtered to analytic kinds"),
            })
            .collect::<CliResult<_>>()?;
        gammas.extend_from_slice(&section.gamma_grid);
        gammas.sort_by(f64::total_cmp);
        gammas.dedup();
        gamma_lists.push(gammas);
    }

    let mut mc_cfg = base_mc(cfg, noise, l, master_seed, mc.trials, sines.clone());
    mc_cfg.tests = kinds
        .iter()
        .zip(&gamma_lists)
        .map(|(kind, gammas)| McTest {
            kind: *kind,
            gammas: gammas.clone(),
        })
        .collect();
    mc_cfg.run_h1 = !sines.is_empty();
    let summary = run_mc(&mc_cfg)?;

    let mut table = CsvTable::new(
        "specdet-validate-v1",
        vec![
            "test",
            "l",
            "gamma",
            "pfa_analytic",
            "pfa_empirical",
            "pfa_stderr",
            "pdet_analytic",
            "pdet_empirical",
            "pdet_stderr",
        ],
    );
    table
        .meta("command", "validate")
        .meta("n", cfg.grid.n)
        .meta("dt_s", cfg.grid.dt_s)
        .meta("l", l)
        .meta("trials", mc.trials)
        .meta("master_seed", master_seed);
    for (i, kind) in kinds.iter().enumerate() {
        let h0 = summary.test_results(kind, false).expect("H0 pass ran");
        let h1 = summary.test_results(kind, true);
        for (j, &gamma) in gamma_lists[i].iter().enumerate() {
            let pfa_analytic = match *kind {
                TestKind::TTilde => pfa_t_tilde(gamma, l, eta)?,
                TestKind::TTildeNc { n_c } => pfa_t_tilde_nc(gamma, l, eta, n_c)?,
                _ => unreachable!(),
            };
            let pdet_analytic = match *kind {
                TestKind::TTilde => pdet_t_tilde(gamma, &lambdas, l)?,
                TestKind::TTildeNc { n_c } => pdet_t_tilde_nc(gamma, &lambdas, l, n_c)?,
                _ => unreachable!(),
            };
            let e0 = &h0.exceedance[j];
            let (pdet_emp, pdet_se) = match h1 {
                Some(r) => {
                    let e1 = &r.exceedance[j];
                    (Some(e1.rate), Some(e1.stderr))
                }
                None => (None, None),
            };
            table.row(vec![
                kind.name().to_string(),
                l.to_string(),
                fmt(gamma),
                fmt(pfa_analytic),
                fmt(e0.rate),
                fmt(e0.stderr),
                fmt(pdet_analytic),
                fmt_opt(pdet_emp),
                fmt_opt(pdet_se),
            ]);
        }
    }
    table.write_to(&out_path(out_dir, "validate.csv"))
}

/// `roc`: emits analytic curves (where a closed form exists) and empirical
/// staircases from one Monte Carlo pass, in long format.
pub fn cmd_roc(cfg: &ExperimentConfig, seed: Option<u64>, out_dir: &Path) -> CliResult<()> {
    let (noise, l) = cfg.require_synthetic()?;
    let mc = cfg.mc_section()?;
    let master_seed = seed.unwrap_or(mc.master_seed);
    let section = cfg
        .roc
        .as_ref()
        .ok_or_else(|| CliError::config("roc requires a [roc] section"))?;
    if section.pfa_grid.is_empty() {
        return Err(CliError::config("roc.pfa_grid must not be empty"));
    }
    for &p in &section.pfa_grid {
        require_pfa_in_unit(p, "roc.pfa_grid entry")?;
    }
    if section.pfa_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::config("roc.pfa_grid must be strictly increasing"));
    }
    let max_points = section.max_points.unwrap_or(DEFAULT_ROC_MAX_POINTS);
    let grid = grid_of(cfg)?;
    let sines = cfg.sines()?;
    let kinds = cfg.test_kinds()?;
    let psd = ar_psd(&noise, &grid);
    let lambdas = lambdas_for(&sines, &psd, &grid)?;

    let mut mc_cfg = base_mc(cfg, noise, l, master_seed, mc.trials, sines.clone());
    mc_cfg.tests = kinds
        .iter()
        .map(|k| McTest {
            kind: *k,
            gammas: Vec::new(),
        })
        .collect();
    mc_cfg.run_h1 = true;
    mc_cfg.keep_statistics = true;
    let summary = run_mc(&mc_cfg)?;

    let mut table = CsvTable::new(
        "specdet-roc-v1",
        vec!["test", "l", "pfa", "pdet", "source", "stderr"],
    );
    table
        .meta("command", "roc")
        .meta("n", cfg.grid.n)
        .meta("dt_s", cfg.grid.dt_s)
        .meta("l", l)
        .meta("trials", mc.trials)
        .meta("master_seed", master_seed);

    for kind in &kinds {
        if kind.has_analytic_pfa() {
            let curve = roc_curve_analytic(kind, &lambdas, l, &section.pfa_grid)?;
            for p in curve.points() {
                table.row(vec![
                    kind.name().to_string(),
                    l.to_string(),
                    fmt(p.pfa),
                    fmt(p.pdet),
                    "analytic".to_string(),
                    fmt(0.0),
                ]);
            }
        }
    }
    for kind in &kinds {
        let h0 = &summary
            .test_results(kind, false)
            .expect("H0 pass ran")
            .statistics;
        let h1 = &summary
            .test_results(kind, true)
            .expect("H1 pass ran")
            .statistics;
        let curve = roc_from_statistics(
            h0,
            h1,
            RocMeta {
                test: *kind,
                l,
                n: cfg.grid.n,
                source: RocSource::Empirical { trials: mc.trials },
                description: String::new(),
            },
        )?;
        for p in curve.thinned(max_points).points() {
            table.row(vec![
                kind.name().to_string(),
                l.to_string(),
                fmt(p.pfa),
                fmt(p.pdet),
                "empirical".to_string(),
                fmt(p.pdet_stderr),
            ]);
        }
    }
    table.write_to(&out_path(out_dir, "roc.csv"))
}

/// `histogram`: bins the dominant-ordinate frequency of each configured
/// test across null trials.
pub fn cmd_histogram(cfg: &ExperimentConfig, seed: Option<u64>, out_dir: &Path) -> CliResult<()> {
    let (noise, l) = cfg.require_synthetic()?;
    let mc = cfg.mc_section()?;
    let master_seed = seed.unwrap_or(mc.master_seed);
    let grid = grid_of(cfg)?;
    let kinds = cfg.test_kinds()?;
    let bins = cfg.histogram_bins();

    let mut mc_cfg = base_mc(cfg, noise, l, master_seed, mc.trials, SinusoidSet::empty());
    mc_cfg.tests = kinds
        .iter()
        .map(|k| McTest {
            kind: *k,
            gammas: Vec::new(),
        })
        .collect();
    mc_cfg.keep_statistics = true;
    let summary = run_mc(&mc_cfg)?;

    let mut table = CsvTable::new(
        "specdet-histogram-v1",
        vec!["test", "bin_low_hz", "bin_high_hz", "count"],
    );
    table
        .meta("command", "histogram")
        .meta("n", cfg.grid.n)
        .meta("dt_s", cfg.grid.dt_s)
        .meta("l", l)
        .meta("trials", mc.trials)
        .meta("bins", bins)
        .meta("master_seed", master_seed);
    for kind in &kinds {
        let argmax = &summary
            .test_results(kind, false)
            .expect("H0 pass ran")
            .argmax;
        let hist = fa_histogram_from_argmax(&grid, kind, argmax, bins)?;
        for b in &hist.bins {
            table.row(vec![
                kind.name().to_string(),
                fmt(b.lo_hz),
                fmt(b.hi_hz),
                b.count.to_string(),
            ]);
        }
    }
    table.write_to(&out_path(out_dir, "histogram.csv"))
}

/// `calibrate`: empirical thresholds for every configured test at each
/// target false-alarm rate, one Monte Carlo pass per test.
pub fn cmd_calibrate(cfg: &ExperimentConfig, seed: Option<u64>, out_dir: &Path) -> CliResult<()> {
    let (noise, l) = cfg.require_synthetic()?;
    let mc = cfg.mc_section()?;
    let master_seed = seed.unwrap_or(mc.master_seed);
    let section = cfg
        .calibrate
        .as_ref()
        .ok_or_else(|| CliError::config("calibrate requires a [calibrate] section"))?;
    if section.pfa_targets.is_empty() {
        return Err(CliError::config("calibrate.pfa_targets must not be empty"));
    }
    let kinds = cfg.test_kinds()?;

    let mc_cfg = base_mc(cfg, noise, l, master_seed, mc.trials, SinusoidSet::empty());
    let mut table = CsvTable::new(
        "specdet-calibrate-v1",
        vec![
            "test",
            "n_c",
            "target_pfa",
            "threshold",
            "ci_low",
            "ci_high",
            "trials",
        ],
    );
    table
        .meta("command", "calibrate")
        .meta("n", cfg.grid.n)
        .meta("dt_s", cfg.grid.dt_s)
        .meta("l", l)
        .meta("trials", mc.trials)
        .meta("master_seed", master_seed);
    for kind in &kinds {
        let mut base = mc_cfg.clone();
        base.tests = vec![McTest {
            kind: *kind,
            gammas: Vec::new(),
        }];
        let calibrated = calibrate_thresholds(&base, kind, &section.pfa_targets)?;
        for c in calibrated {
            table.row(vec![
                kind.name().to_string(),
                kind.n_c().map(|v| v.to_string()).unwrap_or_default(),
                fmt(c.target_pfa),
                fmt(c.threshold),
                fmt(c.ci_low),
                fmt(c.ci_high),
                c.trials.to_string(),
            ]);
        }
    }
    table.write_to(&out_path(out_dir, "calibrate.csv"))
}

struct DetectInputs {
    observation: TimeSeries,
    training: TrainingSet,
    noise: Option<ArModel>,
    master_seed: Option<u64>,
}

fn detect_inputs(cfg: &ExperimentConfig, seed: Option<u64>) -> CliResult<DetectInputs> {
    match cfg.training.mode {
        TrainingMode::SyntheticAr => {
            let (noise, l) = cfg.require_synthetic()?;
            let mc = cfg.mc_section()?;
            let master_seed = seed.unwrap_or(mc.master_seed);
            let sines = cfg.sines()?;
            let noise_series = ar_generate(&noise, cfg.grid.n, cfg.grid.dt_s, master_seed)?;
            let observation = synthesize(&sines, &noise_series)?;
            let members = (0..l)
                .map(|i| {
                    ar_generate(
                        &noise,
                        cfg.grid.n,
                        cfg.grid.dt_s,
                        master_seed + 1 + i as u64,
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(DetectInputs {
                observation,
                training: TrainingSet::new(members)?,
                noise: Some(noise),
                master_seed: Some(master_seed),
            })
        }
        TrainingMode::ExternalFiles => {
            let files = cfg
                .training
                .files
                .as_ref()
                .filter(|f| !f.is_empty())
                .ok_or_else(|| CliError::config("training.files is required in external mode"))?;
            let obs_path = cfg.training.observation.as_ref().ok_or_else(|| {
                CliError::config("training.observation is required in external mode")
            })?;
            if let Some(l) = cfg.training.l {
                if l != files.len() {
                    return Err(CliError::config(format!(
                        "training.l = {l} disagrees with {} training files",
                        files.len()
                    )));
                }
            }
            let load = |path: &std::path::Path| -> CliResult<TimeSeries> {
                let s = load_series(path)?;
                if s.len() != cfg.grid.n {
                    return Err(CliError::config(format!(
                        "{} has {} samples but grid.n = {}",
                        path.display(),
                        s.len(),
                        cfg.grid.n
                    )));
                }
                if ((s.dt() - cfg.grid.dt_s) / cfg.grid.dt_s).abs() > 1e-9 {
                    return Err(CliError::config(format!(
                        "{} has dt = {} but grid.dt_s = {}",
                        path.display(),
                        s.dt(),
                        cfg.grid.dt_s
                    )));
                }
                Ok(if cfg.detrend { s.detrended() } else { s })
            };
            let observation = load(obs_path)?;
            let members = files
                .iter()
                .map(|p| load(p))
                .collect::<CliResult<Vec<_>>>()?;
            let seed_value = seed.or(cfg.mc.as_ref().map(|m| m.master_seed));
            Ok(DetectInputs {
                observation,
                training: TrainingSet::new(members)?,
                noise: cfg.noise_model()?,
                master_seed: seed_value,
            })
        }
    }
}

/// `detect`: scores every configured test on one observation against the
/// training set; thresholds come from the closed-form inversion where one
/// exists and from null Monte Carlo calibration otherwise.
pub fn cmd_detect(cfg: &ExperimentConfig, seed: Option<u64>, out_dir: &Path) -> CliResult<()> {
    let section = cfg
        .detect
        .as_ref()
        .ok_or_else(|| CliError::config("detect requires a [detect] section"))?;
    require_pfa_in_unit(section.pfa, "detect.pfa")?;
    let kinds = cfg.test_kinds()?;
    let inputs = detect_inputs(cfg, seed)?;
    let grid = inputs.observation.grid();
    let eta = Eta::from_grid(&grid);
    let l = inputs.training.l();
    for kind in &kinds {
        kind.validate_for(grid.len())
            .map_err(|e| CliError::config(e.to_string()))?;
    }

    // Calibration pass for the tests without closed-form thresholds.
    let needs_calibration: Vec<TestKind> = kinds
        .iter()
        .copied()
        .filter(|k| !k.has_analytic_pfa())
        .collect();
    let mut calibrated: Vec<(TestKind, f64)> = Vec::new();
    if !needs_calibration.is_empty() {
        let noise = inputs.noise.clone().ok_or_else(|| {
            CliError::config(
                "calibrating fisher/robust-fisher/chiu/t-tilde-fisher thresholds requires a [noise] section",
            )
        })?;
        let trials = section.calibration_trials.ok_or_else(|| {
            CliError::config(
                "detect.calibration_trials is required for tests without closed-form thresholds",
            )
        })?;
        let master_seed = inputs.master_seed.ok_or_else(|| {
            CliError::config("a master seed ([mc] or --seed) is required for calibration")
        })?;
        let base = base_mc(
            cfg,
            noise,
            l,
            master_seed ^ CALIBRATION_SEED_TAG,
            trials,
            SinusoidSet::empty(),
        );
        for kind in &needs_calibration {
            let mut one = base.clone();
            one.tests = vec![McTest {
                kind: *kind,
                gammas: Vec::new(),
            }];
            let c = calibrate_thresholds(&one, kind, &[section.pfa])?.remove(0);
            calibrated.push((*kind, c.threshold));
        }
    }

    let p = classical_periodogram(&inputs.observation);
    let p_tilde = if kinds.iter().any(|k| k.uses_standardized()) {
        let pbar = averaged_periodogram(&inputs.training);
        Some(standardized_periodogram(&p, &pbar)?)
    } else {
        None
    };

    let mut table = CsvTable::new(
        "specdet-detect-v1",
        vec![
            "test",
            "n_c",
            "statistic",
            "threshold",
            "decision",
            "pfa_kind",
            "pfa",
            "argmax_index",
            "argmax_freq_hz",
        ],
    );
    table
        .meta("command", "detect")
        .meta("n", cfg.grid.n)
        .meta("dt_s", cfg.grid.dt_s)
        .meta("l", l)
        .meta("pfa_target", section.pfa);
    if let Some(s) = inputs.master_seed {
        table.meta("master_seed", s);
    }

    for kind in &kinds {
        let input = if kind.uses_standardized() {
            p_tilde
                .as_ref()
                .expect("standardized periodogram was built")
        } else {
            &p
        };
        let ev = evaluate(kind, input)?;
        let report: TestReport = if kind.has_analytic_pfa() {
            let threshold = match *kind {
                TestKind::TTilde => threshold_from_pfa(section.pfa, l, eta)?,
                TestKind::TTildeNc { n_c } => {
                    threshold_from_pfa_t_tilde_nc(section.pfa, l, eta, n_c)?
                }
                _ => unreachable!(),
            };
            decide_with_analytic(*kind, ev.statistic, threshold, ev.argmax_index, l, eta)?
        } else {
            let threshold = calibrated
                .iter()
                .find(|(k, _)| k == kind)
                .map(|(_, t)| *t)
                .expect("calibration covered every non-analytic test");
            decide(*kind, ev.statistic, threshold, ev.argmax_index, None)
        };
        let (pfa_kind, pfa_value) = match report.analytic_pfa {
            Some(p) => ("analytic", p),
            None => ("calibrated", section.pfa),
        };
        table.row(vec![
            kind.name().to_string(),
            kind.n_c().map(|v| v.to_string()).unwrap_or_default(),
            fmt(report.statistic),
            fmt(report.threshold),
            report.decision.to_string(),
            pfa_kind.to_string(),
            fmt(pfa_value),
            report.argmax_index.to_string(),
            fmt(grid.freq_hz(report.argmax_index)),
        ]);
    }
    table.write_to(&out_path(out_dir, "detect.csv"))
}
