use std::ffi::OsString;
use std::path::{Path, PathBuf};

use lotap::data::{generate_syn, load_series, save_ground_truth, save_series, SynConfig};
use lotap::eval::{self, Refit};
use lotap::lotap::{fit as fit_model, load_model, save_model};
use lotap::tsvd;

use crate::args::{EvaluateArgs, FitArgs, ForecastArgs, GenerateArgs, RankArgs, RefitMode, StabilityArgs};
use crate::config::{fit_config, pick, FileConfig};
use crate::CliError;

const DEFAULT_THRESHOLD: f64 = 1e-2;
const DEFAULT_POINTS: usize = 50;

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = OsString::from(path.as_os_str());
    s.push(suffix);
    PathBuf::from(s)
}

/// Converts a library error, naming the file involved.
fn at(path: &Path) -> impl Fn(lotap::Error) -> CliError + '_ {
    move |e| match CliError::from(e) {
        CliError::Io(m) => CliError::Io(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn check_threshold(t: f64) -> Result<f64, CliError> {
    if t > 0.0 && t < 1.0 {
        Ok(t)
    } else {
        Err(CliError::Usage(format!("threshold {t} must lie in (0, 1)")))
    }
}

pub fn generate(a: &GenerateArgs, file: &FileConfig) -> Result<(), CliError> {
    let g = &file.generate;
    let d = SynConfig::default();
    let cfg = SynConfig {
        n1: pick("n1", a.n1, g.n1, d.n1),
        n2: pick("n2", a.n2, g.n2, d.n2),
        n3: pick("n3", a.n3, g.n3, d.n3),
        r: pick("rank", a.rank, g.rank, d.r),
        len: pick("length", a.length, g.length, d.len),
        ar_coeffs: pick("ar-coeffs", a.ar_coeffs.clone(), g.ar_coeffs.clone(), d.ar_coeffs),
        rho: pick("rho", a.rho, g.rho, d.rho),
        seed: pick("seed", a.seed, g.seed, d.seed),
        burn_in: pick("burn-in", a.burn_in, g.burn_in, d.burn_in),
    };
    cfg.validate()?;
    log::info!("generating {}x{}x{} x {} (r = {}, rho = {})", cfg.n1, cfg.n2, cfg.n3, cfg.len, cfg.r, cfg.rho);
    let (series, truth) = generate_syn(&cfg)?;
    save_series(&series, &a.out).map_err(at(&a.out))?;
    let truth_path = a.truth.clone().unwrap_or_else(|| with_suffix(&a.out, ".truth"));
    save_ground_truth(&truth, &truth_path).map_err(at(&truth_path))?;
    Ok(())
}

pub fn fit(a: &FitArgs, file: &FileConfig) -> Result<(), CliError> {
    let cfg = fit_config(&a.fit, &file.fit);
    let mut series = load_series(&a.input).map_err(at(&a.input))?;
    if let Some(n) = a.train {
        if n == 0 || n > series.len() {
            return Err(CliError::Usage(format!("--train {n} outside 1..={}", series.len())));
        }
        series = series.window(0..n)?;
    }
    cfg.validate(series.dims())?;
    let model = fit_model(&series, &cfg)?;
    save_model(&model, &a.model).map_err(at(&a.model))?;
    let trace = a.trace.clone().unwrap_or_else(|| with_suffix(&a.model, ".trace.csv"));
    eval::convergence_trace_csv(&model.report, &trace).map_err(at(&trace))?;
    let rep = &model.report;
    println!("iterations {} converged {} rel_change {:e}", rep.iterations_run, rep.converged, rep.rel_change_trace.last().copied().unwrap_or(f64::NAN));
    if rep.converged {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!("no convergence to rel_tol {} within {} iterations", cfg.rel_tol, cfg.max_iters)))
    }
}

pub fn evaluate(a: &EvaluateArgs, file: &FileConfig) -> Result<(), CliError> {
    let e = &file.evaluate;
    let cfg = fit_config(&a.fit, &file.fit);
    let mut series = load_series(&a.input).map_err(at(&a.input))?;
    let train = pick("train", a.train, e.train, series.len() * 4 / 5);
    let refit: Refit = pick("refit", a.refit, e.refit, RefitMode::Every).into();
    let origins = a.origins.is_some() || e.origins.is_some();
    if origins {
        let n = pick("origins", a.origins, e.origins, 0);
        let end = train.saturating_add(n);
        if n == 0 || end > series.len() {
            return Err(CliError::Usage(format!("{n} origins after a {train}-point window exceed the series length {}", series.len())));
        }
        series = series.window(0..end)?;
    }
    cfg.validate(series.dims())?;
    let rep = eval::rolling_evaluate(&series, train, &cfg, refit)?;
    eval::eval_csv(&rep, &a.out).map_err(at(&a.out))?;
    println!("mspe {} persistence_mspe {} origins {}", rep.mspe, rep.persistence_mspe, rep.origins.len());
    Ok(())
}

pub fn forecast(a: &ForecastArgs) -> Result<(), CliError> {
    if a.horizon == 0 {
        return Err(CliError::Usage("--horizon must be at least 1".into()));
    }
    let model = load_model(&a.model).map_err(at(&a.model))?;
    save_series(&model.forecast(a.horizon)?, &a.out).map_err(at(&a.out))?;
    Ok(())
}

pub fn rank_analysis(a: &RankArgs, file: &FileConfig) -> Result<(), CliError> {
    let threshold = check_threshold(pick("threshold", a.threshold, file.analysis.threshold, DEFAULT_THRESHOLD))?;
    let series = load_series(&a.input).map_err(at(&a.input))?;
    eval::rank_csv(&eval::rank_analysis(&series, threshold), &a.out).map_err(at(&a.out))?;
    Ok(())
}

pub fn subspace_stability(a: &StabilityArgs, file: &FileConfig) -> Result<(), CliError> {
    let threshold = check_threshold(pick("threshold", a.threshold, file.analysis.threshold, DEFAULT_THRESHOLD))?;
    let points = pick("points", a.points, file.analysis.points, DEFAULT_POINTS);
    if points == 0 {
        return Err(CliError::Usage("--points must be at least 1".into()));
    }
    let series = load_series(&a.input).map_err(at(&a.input))?;
    let n = points.min(series.len());
    if n < points {
        log::warn!("series has only {n} time points; analysing all of them");
    }
    let residuals = tsvd::subspace_stability(&series.slices()[..n], threshold)?;
    eval::subspace_stability_csv(&residuals, &a.out).map_err(at(&a.out))?;
    Ok(())
}
