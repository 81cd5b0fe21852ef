//! Forecast evaluation: relative errors, rolling-origin backtests, timing
//! grids and the CSV reports built on them.
//!
//! All CSV files are comma-separated with a header row, `.` decimals and LF
//! line endings, and are written atomically.

use std::path::Path;
use std::time::{Duration, Instant};

use crate::data::{atomic_write, generate_syn, SynConfig, TensorSeries};
use crate::error::{Error, Result};
use crate::lotap::{fit, FitConfig, FitReport, LotapModel};
use crate::parallel;
use crate::tensor::Tensor3;
use crate::tsvd::{avg_tucker_rank, tubal_rank};

/// `‖truth − pred‖_F / ‖truth‖_F`.
pub fn relative_error(truth: &Tensor3, pred: &Tensor3) -> Result<f64> {
    truth.dims().check_same(&pred.dims())?;
    let norm = truth.fro_norm();
    if norm == 0.0 {
        return Err(Error::ZeroNormTruth(0));
    }
    Ok(truth.sub(pred)?.fro_norm() / norm)
}

/// Per-slice relative errors of `pred` against `truth`.
pub fn relative_errors(truth: &TensorSeries, pred: &TensorSeries) -> Result<Vec<f64>> {
    if truth.len() != pred.len() {
        return Err(Error::DimensionMismatch {
            axis: crate::error::Axis::Length,
            left: truth.len(),
            right: pred.len(),
        });
    }
    truth
        .slices()
        .iter()
        .zip(pred.slices())
        .enumerate()
        .map(|(t, (x, p))| {
            relative_error(x, p).map_err(|e| match e {
                Error::ZeroNormTruth(_) => Error::ZeroNormTruth(t),
                e => e,
            })
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean relative Frobenius error over time.
pub fn mspe(truth: &TensorSeries, pred: &TensorSeries) -> Result<f64> {
    Ok(mean(&relative_errors(truth, pred)?))
}

/// How models are refreshed as the forecast origin advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Refit {
    /// A fresh fit on every window.
    #[default]
    Every,
    /// One fit on the first window; later windows keep its factors and only
    /// recompute cores and coefficients.
    Once,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Index of each forecast target in the input series.
    pub origins: Vec<usize>,
    pub per_point_errors: Vec<f64>,
    pub mspe: f64,
    /// Errors of predicting each target by the slice before it.
    pub persistence_errors: Vec<f64>,
    pub persistence_mspe: f64,
    pub mean_iteration_time: Duration,
    pub mean_forecast_time: Duration,
    pub train_count: usize,
    pub refit: Refit,
    pub config: FitConfig,
}

struct OriginResult {
    error: f64,
    iteration_time: Duration,
    forecast_time: Duration,
}

fn forecast_one(model: &LotapModel, target: &Tensor3) -> Result<(f64, Duration)> {
    let clock = Instant::now();
    let f = model.forecast(1)?;
    let elapsed = clock.elapsed();
    Ok((relative_error(target, f.get(0))?, elapsed))
}

/// One-step rolling-origin evaluation. For every target `t` in
/// `train_count..len` the model sees the `train_count` true slices before
/// `t`; forecasts are never fed back.
pub fn rolling_evaluate(
    series: &TensorSeries,
    train_count: usize,
    config: &FitConfig,
    refit: Refit,
) -> Result<EvalReport> {
    if train_count < config.p + 1 {
        return Err(Error::InsufficientData { needed: config.p + 1, got: train_count });
    }
    if train_count >= series.len() {
        return Err(Error::InvalidConfig(format!(
            "train count {train_count} leaves no test points in a series of length {}",
            series.len()
        )));
    }
    let origins: Vec<usize> = (train_count..series.len()).collect();
    let at = |origin: usize| move |e: Error| Error::AtOrigin { origin, source: Box::new(e) };

    let results: Vec<Result<OriginResult>> = match refit {
        Refit::Every => parallel::map_indices(origins.len(), |i| {
            let t = origins[i];
            let window = series.window(t - train_count..t).map_err(at(t))?;
            let model = fit(&window, config).map_err(at(t))?;
            let (error, forecast_time) = forecast_one(&model, series.get(t)).map_err(at(t))?;
            Ok(OriginResult { error, iteration_time: model.report.mean_iteration_time(), forecast_time })
        }),
        Refit::Once => {
            let first = origins[0];
            let base = fit(&series.window(0..train_count)?, config).map_err(at(first))?;
            let iteration_time = base.report.mean_iteration_time();
            parallel::map_indices(origins.len(), |i| {
                let t = origins[i];
                let window = series.window(t - train_count..t).map_err(at(t))?;
                let model = base.refit_cores(&window).map_err(at(t))?;
                let (error, forecast_time) = forecast_one(&model, series.get(t)).map_err(at(t))?;
                Ok(OriginResult { error, iteration_time, forecast_time })
            })
        }
    };
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let per_point_errors: Vec<f64> = results.iter().map(|r| r.error).collect();
    let persistence_errors = persistence_errors(series, train_count)?;
    let n = results.len() as u32;
    Ok(EvalReport {
        mspe: mean(&per_point_errors),
        persistence_mspe: mean(&persistence_errors),
        per_point_errors,
        persistence_errors,
        mean_iteration_time: results.iter().map(|r| r.iteration_time).sum::<Duration>() / n,
        mean_forecast_time: results.iter().map(|r| r.forecast_time).sum::<Duration>() / n,
        origins,
        train_count,
        refit,
        config: config.clone(),
    })
}

/// Relative errors of the persistence forecast `x̂_t = x_{t−1}` for every
/// target `t` in `from..len`.
pub fn persistence_errors(series: &TensorSeries, from: usize) -> Result<Vec<f64>> {
    if from == 0 || from >= series.len() {
        return Err(Error::InvalidConfig(format!("no persistence targets from index {from}")));
    }
    (from..series.len())
        .map(|t| {
            relative_error(series.get(t), series.get(t - 1)).map_err(|e| match e {
                Error::ZeroNormTruth(_) => Error::ZeroNormTruth(t),
                e => e,
            })
        })
        .collect()
}

/// Problem size for one timing measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimingCase {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub len: usize,
    pub r: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingRow {
    pub case: TimingCase,
    pub ms_per_iteration: f64,
}

/// Median per-iteration fit time for each case over `runs` fits after one
/// warm-up fit. Data come from the synthetic generator (default rank and
/// noise, `seed`); every fit runs exactly `config.max_iters` iterations.
pub fn timing_benchmark(grid: &[TimingCase], config: &FitConfig, runs: usize, seed: u64) -> Result<Vec<TimingRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("timing grid is empty".into()));
    }
    if runs == 0 {
        return Err(Error::InvalidConfig("at least one timed run is required".into()));
    }
    grid.iter()
        .map(|&case| {
            let syn = SynConfig {
                n1: case.n1,
                n2: case.n2,
                n3: case.n3,
                r: SynConfig::default().r.min(case.n1.min(case.n2)),
                len: case.len,
                seed,
                ..SynConfig::default()
            };
            let (series, _) = generate_syn(&syn)?;
            let cfg = FitConfig { r: case.r, rel_tol: f64::MIN_POSITIVE, ..config.clone() };
            fit(&series, &cfg)?;
            let mut ms = (0..runs)
                .map(|_| Ok(fit(&series, &cfg)?.report.mean_iteration_time().as_secs_f64() * 1e3))
                .collect::<Result<Vec<f64>>>()?;
            ms.sort_by(f64::total_cmp);
            let mid = ms.len() / 2;
            let median = if ms.len() % 2 == 1 { ms[mid] } else { 0.5 * (ms[mid - 1] + ms[mid]) };
            Ok(TimingRow { case, ms_per_iteration: median })
        })
        .collect()
}

/// Tubal rank and average Tucker rank of one slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankRow {
    pub time_index: usize,
    pub tubal_rank: usize,
    pub avg_tucker_rank: f64,
}

pub fn rank_analysis(series: &TensorSeries, rel_tol: f64) -> Vec<RankRow> {
    parallel::map_indices(series.len(), |t| RankRow {
        time_index: t + 1,
        tubal_rank: tubal_rank(series.get(t), rel_tol),
        avg_tucker_rank: avg_tucker_rank(series.get(t), rel_tol),
    })
}

fn write_csv<F>(path: &Path, header: &[&str], rows: F) -> Result<()>
where
    F: FnOnce(&mut dyn FnMut(Vec<String>) -> Result<()>) -> Result<()>,
{
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    atomic_write(path, |w| {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(header).map_err(csv_err)?;
        rows(&mut |rec| out.write_record(&rec).map_err(csv_err))?;
        out.flush()?;
        Ok(())
    })
}

/// Columns `iteration,rel_change,objective`, one row per iteration.
pub fn convergence_trace_csv(report: &FitReport, path: &Path) -> Result<()> {
    write_csv(path, &["iteration", "rel_change", "objective"], |row| {
        for (i, (rc, obj)) in report.rel_change_trace.iter().zip(&report.objective_trace).enumerate() {
            row(vec![(i + 1).to_string(), rc.to_string(), obj.to_string()])?;
        }
        Ok(())
    })
}

/// Columns `n1,n2,n3,T,r,ms_per_iteration`.
pub fn timing_csv(rows: &[TimingRow], path: &Path) -> Result<()> {
    write_csv(path, &["n1", "n2", "n3", "T", "r", "ms_per_iteration"], |row| {
        for r in rows {
            let c = r.case;
            row(vec![
                c.n1.to_string(),
                c.n2.to_string(),
                c.n3.to_string(),
                c.len.to_string(),
                c.r.to_string(),
                r.ms_per_iteration.to_string(),
            ])?;
        }
        Ok(())
    })
}

/// Columns `origin,error,persistence_error`.
pub fn eval_csv(report: &EvalReport, path: &Path) -> Result<()> {
    write_csv(path, &["origin", "error", "persistence_error"], |row| {
        for ((o, e), pe) in report.origins.iter().zip(&report.per_point_errors).zip(&report.persistence_errors) {
            row(vec![o.to_string(), e.to_string(), pe.to_string()])?;
        }
        Ok(())
    })
}

/// Columns `time_index,tubal_rank,avg_tucker_rank`.
pub fn rank_csv(rows: &[RankRow], path: &Path) -> Result<()> {
    write_csv(path, &["time_index", "tubal_rank", "avg_tucker_rank"], |row| {
        for r in rows {
            row(vec![r.time_index.to_string(), r.tubal_rank.to_string(), r.avg_tucker_rank.to_string()])?;
        }
        Ok(())
    })
}

/// Columns `time_index,residual`, with `time_index` starting at 1.
pub fn subspace_stability_csv(residuals: &[f64], path: &Path) -> Result<()> {
    write_csv(path, &["time_index", "residual"], |row| {
        for (t, r) in residuals.iter().enumerate() {
            row(vec![(t + 1).to_string(), r.to_string()])?;
        }
        Ok(())
    })
}
