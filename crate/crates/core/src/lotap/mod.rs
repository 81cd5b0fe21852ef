//! Alternating-minimization fit of the low-tubal-rank AR model and
//! recursive forecasting.
//!
//! The fit minimizes
//!
//! ```text
//! F = Σ_{t>p} ‖S_t − Σ_i a_i S_{t−i}‖²_F + φ Σ_t ‖X_t − U * S_t * V^H‖²_F
//! ```
//!
//! over column-orthogonal `U`, `V`, cores `S_t` and real coefficients `a`.
//! All block updates run on the Fourier slices of the factors. Inputs are
//! real, so only slices `0..=n3/2` are stored and updated; the remaining
//! slices are their complex conjugates.

mod kernels;
mod persist;
mod stream;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ar::{fit_yule_walker_with, predict_next, ArCoefficients, ArEstimator};
use crate::data::TensorSeries;
use crate::error::{Error, Result};
use crate::linalg::{orthonormalize_fourier_slices, polar_factor_in};
use crate::parallel;
use crate::tensor::{
    conj_mat, conj_transpose, fft_mode3, ifft_mode3_real, independent_slices, is_self_conjugate,
    t_product, CMat, Dims, FourierTensor3, Tensor3,
};

use stream::{axpy, dot_conj, Planar, Stacked};

pub use persist::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};

/// RNG stream ids for factor initialization.
const STREAM_INIT_U: u64 = 11;
const STREAM_INIT_V: u64 = 12;

pub const STEP_INIT: &str = "init";
pub const STEP_AR: &str = "ar";
pub const STEP_S: &str = "s";
pub const STEP_U: &str = "u";
pub const STEP_V: &str = "v";
pub const STEP_OBJECTIVE: &str = "objective";

/// Structure imposed on each Fourier core slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagMode {
    /// Off-diagonal entries are zeroed after every core update.
    Full,
    /// Cores are dense `r x r` matrices.
    #[default]
    Relaxed,
}

impl DiagMode {
    fn apply(self, mut m: CMat) -> CMat {
        if self == DiagMode::Full {
            let (rows, cols) = m.shape();
            for j in 0..cols {
                for i in 0..rows {
                    if i != j {
                        m[(i, j)] = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub r: usize,
    pub p: usize,
    pub phi: f64,
    pub diag_mode: DiagMode,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub ar_estimator: ArEstimator,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            r: 4,
            p: 2,
            phi: 10.0,
            diag_mode: DiagMode::Relaxed,
            max_iters: 10,
            rel_tol: 1e-3,
            seed: 0,
            ar_estimator: ArEstimator::LeastSquares,
        }
    }
}

impl FitConfig {
    pub fn new(r: usize, p: usize) -> Self {
        FitConfig { r, p, ..FitConfig::default() }
    }

    pub fn validate(&self, dims: Dims) -> Result<()> {
        let max = dims.n1.min(dims.n2);
        if self.r == 0 || self.r > max {
            return Err(Error::RankOutOfRange { rank: self.r, max });
        }
        if self.p == 0 {
            return Err(Error::InvalidConfig("AR order must be at least 1".into()));
        }
        if !(self.phi.is_finite() && self.phi > 0.0) {
            return Err(Error::InvalidConfig(format!("phi must be positive, got {}", self.phi)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitReport {
    pub iterations_run: usize,
    /// `(‖ΔU‖² + ‖ΔV‖²) / (‖U‖² + ‖V‖²)` after each iteration.
    pub rel_change_trace: Vec<f64>,
    /// Objective `F` after each iteration.
    pub objective_trace: Vec<f64>,
    /// Coefficients used by the core update of each iteration.
    pub coeff_trace: Vec<Vec<f64>>,
    /// Cumulative wall-clock time per step name (`STEP_*`).
    pub per_step_timings: BTreeMap<String, Duration>,
    pub converged: bool,
    /// Number of U/V slice updates whose accumulation matrix was rank
    /// deficient and needed an orthonormal completion.
    pub degenerate_updates: usize,
    /// Number of per-slice core sweeps undone because they raised the
    /// objective.
    pub rejected_core_sweeps: usize,
}

impl FitReport {
    fn time(&mut self, step: &str, since: Instant) {
        *self.per_step_timings.entry(step.to_string()).or_default() += since.elapsed();
    }

    /// Mean wall-clock time of one outer iteration, initialization excluded.
    pub fn mean_iteration_time(&self) -> Duration {
        if self.iterations_run == 0 {
            return Duration::ZERO;
        }
        let total: Duration = self
            .per_step_timings
            .iter()
            .filter(|(k, _)| k.as_str() != STEP_INIT)
            .map(|(_, d)| *d)
            .sum();
        total / self.iterations_run as u32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LotapModel {
    /// `n1 x r x n3`, column-orthogonal.
    pub u: Tensor3,
    /// `n2 x r x n3`, column-orthogonal.
    pub v: Tensor3,
    /// Fourier-domain cores `Ŝ_1..Ŝ_T`, each `r x r x n3`.
    pub s_hat: Vec<FourierTensor3>,
    pub coeffs: ArCoefficients,
    pub config: FitConfig,
    pub report: FitReport,
}

/// Which block was just updated when an observer is called.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Init,
    Ar,
    S,
    U,
    V,
}

/// Full iterate handed to a fit observer.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub iteration: usize,
    pub stage: Stage,
    pub u_hat: FourierTensor3,
    pub v_hat: FourierTensor3,
    pub s_hat: Vec<FourierTensor3>,
    pub coeffs: Vec<f64>,
}

/// Fourier slices `0..half` of every observation.
struct FourierData {
    /// `[X̂_1^(k) … X̂_T^(k)]`, one `n1 x (T·n2)` block per slice `k`.
    xcat: Vec<Stacked>,
    /// `Σ_t ‖X̂_t^(k)‖²` per slice.
    norm2: Vec<f64>,
}

impl FourierData {
    fn new(series: &TensorSeries) -> Self {
        let Dims { n1, n2, n3 } = series.dims();
        let half = independent_slices(n3).min(n3);
        let mut xcat: Vec<Stacked> = (0..half).map(|_| Stacked::zeros(n1, series.len() * n2)).collect();
        for (t, x) in series.slices().iter().enumerate() {
            for (k, s) in fft_mode3(x).slices().iter().take(half).enumerate() {
                xcat[k].set_block(t * n2, s);
            }
        }
        let norm2 = xcat.iter().map(|m| m.norm_squared()).collect();
        FourierData { xcat, norm2 }
    }
}

/// Per-Fourier-slice iterate.
struct SliceState {
    /// Slice is self-conjugate and therefore real.
    real: bool,
    /// 1 for self-conjugate slices, 2 for slices standing in for a mirror.
    weight: f64,
    u: CMat,
    v: CMat,
    s: Vec<CMat>,
    /// `Û^H X̂_t V̂` for the current `Û`, `V̂`.
    proj: Vec<CMat>,
    du2: f64,
    dv2: f64,
    degenerate: usize,
    rejected: usize,
}

impl SliceState {
    fn new(k: usize, n3: usize, u: CMat, v: CMat, xcat: &Stacked, mode: DiagMode) -> Self {
        let real = is_self_conjugate(k, n3);
        let n2 = v.nrows();
        let proj = project(&xcat.adj_times(&u), &v, xcat.cols / n2);
        let s = proj.iter().map(|m| mode.apply(m.clone())).collect();
        SliceState {
            real,
            weight: if real { 1.0 } else { 2.0 },
            u,
            v,
            s,
            proj,
            du2: 0.0,
            dv2: 0.0,
            degenerate: 0,
            rejected: 0,
        }
    }

    /// One Gauss-Seidel sweep of the core update. The sweep is not an exact
    /// block minimizer, so it is undone when it raises this slice's share of
    /// the objective; returns whether that happened.
    fn update_s(&mut self, x_norm2: f64, a: &[f64], phi: f64, mode: DiagMode) -> bool {
        let before = self.objective(x_norm2, a, phi);
        let previous = self.s.clone();
        for t in 0..self.s.len() {
            let next = blend_core(&self.s[..t], &self.proj[t], a, phi, t + 1, mode);
            self.s[t] = next;
        }
        if self.objective(x_norm2, a, phi) > before {
            self.s = previous;
            self.rejected += 1;
            return true;
        }
        false
    }

    fn update_u(&mut self, xcat: &Stacked) {
        let (n2, r) = self.v.shape();
        let v = Planar::from_cmat(&self.v);
        // w = [v s_1^H; …; v s_T^H]
        let mut w = Planar::zeros(self.s.len() * n2, r);
        for (t, s) in self.s.iter().enumerate() {
            for j in 0..r {
                for l in 0..r {
                    axpy(w.segment_mut(j, t * n2, n2), s[(j, l)].conj(), v.segment(l, 0, n2));
                }
            }
        }
        let m = xcat.times(&w);
        let (u, degenerate) = polar_factor_in(&m, self.real);
        self.du2 = (&u - &self.u).norm_squared();
        self.degenerate += degenerate as usize;
        self.u = u;
    }

    fn update_v(&mut self, xcat: &Stacked) {
        let (n2, r) = self.v.shape();
        // Block t of z is X̂_t^H u.
        let z = xcat.adj_times(&self.u);
        let mut n = Planar::zeros(n2, r);
        for (t, s) in self.s.iter().enumerate() {
            for j in 0..r {
                for l in 0..r {
                    axpy(n.segment_mut(j, 0, n2), s[(l, j)], z.segment(l, t * n2, n2));
                }
            }
        }
        let (v, degenerate) = polar_factor_in(&n.to_cmat(), self.real);
        self.dv2 = (&v - &self.v).norm_squared();
        self.degenerate += degenerate as usize;
        self.v = v;
        self.proj = project(&z, &self.v, self.s.len());
    }

    /// Unweighted contribution of this slice to `n3 · F`, using the
    /// expansion `‖X − U S V^H‖² = ‖X‖² − 2 Re tr(S^H U^H X V) + ‖S‖²`.
    fn objective(&self, x_norm2: f64, a: &[f64], phi: f64) -> f64 {
        let p = a.len();
        let mut ar = 0.0;
        for t in p..self.s.len() {
            let mut e = self.s[t].clone();
            for (i, &ai) in a.iter().enumerate() {
                e -= &self.s[t - 1 - i] * Complex64::new(ai, 0.0);
            }
            ar += e.norm_squared();
        }
        let mut fit = x_norm2;
        for (s, pr) in self.s.iter().zip(&self.proj) {
            fit += s.norm_squared() - 2.0 * kernels::re_inner(s, pr);
        }
        ar + phi * fit.max(0.0)
    }
}

/// Core update for time `t` (1-based). `history` holds the cores before
/// `t`, oldest first; for `t > p` its last `p` entries are the lags.
fn blend_core(history: &[CMat], projected: &CMat, a: &[f64], phi: f64, t: usize, mode: DiagMode) -> CMat {
    let p = a.len();
    if t <= p {
        return mode.apply(projected.clone());
    }
    let n = history.len();
    let mut acc = projected * Complex64::new(phi, 0.0);
    for (i, &ai) in a.iter().enumerate() {
        acc += &history[n - 1 - i] * Complex64::new(ai, 0.0);
    }
    mode.apply(acc * Complex64::new(1.0 / (1.0 + phi), 0.0))
}

/// One Fourier-slice core update.
///
/// For `t ≤ p` returns `Û^H X̂_t V̂`; otherwise
/// `(Σ_i a_i Ŝ_{t−i} + φ Û^H X̂_t V̂) / (1 + φ)`. In [`DiagMode::Full`] the
/// off-diagonal entries of the result are zeroed. `t` is 1-based and
/// `history` lists `Ŝ_1..Ŝ_{t−1}` (at least the last `p` of them).
#[allow(clippy::too_many_arguments)]
pub fn update_s_slice(
    history: &[CMat],
    u: &CMat,
    v: &CMat,
    x: &CMat,
    coeffs: &ArCoefficients,
    phi: f64,
    t: usize,
    mode: DiagMode,
) -> Result<CMat> {
    let p = coeffs.order();
    if t == 0 {
        return Err(Error::InvalidConfig("time index is 1-based".into()));
    }
    if t > p && history.len() < p {
        return Err(Error::InsufficientData { needed: p, got: history.len() });
    }
    let projected = u.adjoint() * x * v;
    Ok(blend_core(history, &projected, &coeffs.a, phi, t, mode))
}

/// Left-factor update: the polar factor of `Σ_t X̂_t V̂ Ŝ_t^H`.
pub fn update_u_slice(x: &[CMat], v: &CMat, s: &[CMat]) -> CMat {
    let mut m = CMat::zeros(x[0].nrows(), v.ncols());
    for (xt, st) in x.iter().zip(s) {
        m += xt * v * st.adjoint();
    }
    polar_factor_in(&m, false).0
}

/// Right-factor update: the polar factor of `Σ_t X̂_t^H Û Ŝ_t`.
pub fn update_v_slice(x: &[CMat], u: &CMat, s: &[CMat]) -> CMat {
    let mut n = CMat::zeros(x[0].ncols(), u.ncols());
    for (xt, st) in x.iter().zip(s) {
        n += xt.adjoint() * u * st;
    }
    polar_factor_in(&n, false).0
}

/// `z_t^H v` for each block `z_t` of `z = X̂^H Û`.
fn project(z: &Planar, v: &CMat, len: usize) -> Vec<CMat> {
    let (n2, r) = v.shape();
    let v = Planar::from_cmat(v);
    (0..len)
        .map(|t| CMat::from_fn(r, r, |a, b| dot_conj(z.segment(a, t * n2, n2), v.segment(b, 0, n2))))
        .collect()
}

fn mirror_full(half: impl Iterator<Item = CMat>, n3: usize) -> Vec<CMat> {
    let mut out: Vec<CMat> = half.collect();
    for k in out.len()..n3 {
        let m = conj_mat(&out[n3 - k]);
        out.push(m);
    }
    out
}

fn gaussian_factor(seed: u64, stream: u64, n: usize, r: usize, n3: usize) -> Result<FourierTensor3> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let values: Vec<f64> = (0..n * r * n3).map(|_| StandardNormal.sample(&mut rng)).collect();
    let g = Tensor3::from_real(Dims::new(n, r, n3)?, values)?;
    let slices = orthonormalize_fourier_slices(fft_mode3(&g).slices(), true);
    FourierTensor3::from_slices(slices)
}

/// Real-domain cores, flattened, for the coefficient fit.
fn real_cores(states: &[SliceState], n3: usize) -> Result<Vec<Vec<f64>>> {
    let t_len = states[0].s.len();
    (0..t_len)
        .map(|t| {
            let full = mirror_full(states.iter().map(|st| st.s[t].clone()), n3);
            Ok(ifft_mode3_real(&FourierTensor3::from_slices(full)?)?.real_part().to_vec())
        })
        .collect()
}

fn snapshot(states: &[SliceState], n3: usize, iteration: usize, stage: Stage, a: &[f64]) -> Result<Snapshot> {
    let t_len = states[0].s.len();
    Ok(Snapshot {
        iteration,
        stage,
        u_hat: FourierTensor3::from_slices(mirror_full(states.iter().map(|s| s.u.clone()), n3))?,
        v_hat: FourierTensor3::from_slices(mirror_full(states.iter().map(|s| s.v.clone()), n3))?,
        s_hat: (0..t_len)
            .map(|t| FourierTensor3::from_slices(mirror_full(states.iter().map(|s| s.s[t].clone()), n3)))
            .collect::<Result<_>>()?,
        coeffs: a.to_vec(),
    })
}

fn check_series(series: &TensorSeries, config: &FitConfig) -> Result<()> {
    config.validate(series.dims())?;
    if series.len() <= config.p {
        return Err(Error::InsufficientData { needed: config.p + 1, got: series.len() });
    }
    if !series.all_finite() {
        return Err(Error::NonFinite("input series".into()));
    }
    Ok(())
}

/// Fits the model by alternating minimization.
pub fn fit(series: &TensorSeries, config: &FitConfig) -> Result<LotapModel> {
    fit_inner(series, config, None)
}

/// [`fit`] calling `observer` after initialization and after every block
/// update. Building snapshots is expensive; intended for diagnostics.
pub fn fit_observed(
    series: &TensorSeries,
    config: &FitConfig,
    observer: &mut dyn FnMut(&Snapshot),
) -> Result<LotapModel> {
    fit_inner(series, config, Some(observer))
}

fn fit_inner(
    series: &TensorSeries,
    config: &FitConfig,
    mut observer: Option<&mut dyn FnMut(&Snapshot)>,
) -> Result<LotapModel> {
    check_series(series, config)?;
    let dims = series.dims();
    let n3 = dims.n3;
    let (r, p, phi, mode) = (config.r, config.p, config.phi, config.diag_mode);
    let mut report = FitReport::default();

    let clock = Instant::now();
    let data = FourierData::new(series);
    let u0 = gaussian_factor(config.seed, STREAM_INIT_U, dims.n1, r, n3)?;
    let v0 = gaussian_factor(config.seed, STREAM_INIT_V, dims.n2, r, n3)?;
    let mut states: Vec<SliceState> = parallel::map_indices(data.xcat.len(), |k| {
        SliceState::new(k, n3, u0.slice(k).clone(), v0.slice(k).clone(), &data.xcat[k], mode)
    });
    report.time(STEP_INIT, clock);
    let mut notify = |states: &[SliceState], it: usize, stage: Stage, a: &[f64]| -> Result<()> {
        if let Some(obs) = observer.as_mut() {
            obs(&snapshot(states, n3, it, stage, a)?);
        }
        Ok(())
    };
    notify(&states, 0, Stage::Init, &[])?;

    for it in 1..=config.max_iters {
        let clock = Instant::now();
        let coeffs = fit_yule_walker_with(&real_cores(&states, n3)?, p, config.ar_estimator)?;
        let a = coeffs.a;
        report.time(STEP_AR, clock);
        notify(&states, it, Stage::Ar, &a)?;

        let clock = Instant::now();
        parallel::for_each_indexed(&mut states, |k, st| {
            st.update_s(data.norm2[k], &a, phi, mode);
        });
        report.time(STEP_S, clock);
        notify(&states, it, Stage::S, &a)?;

        let clock = Instant::now();
        parallel::for_each_indexed(&mut states, |k, st| st.update_u(&data.xcat[k]));
        report.time(STEP_U, clock);
        notify(&states, it, Stage::U, &a)?;

        let clock = Instant::now();
        parallel::for_each_indexed(&mut states, |k, st| st.update_v(&data.xcat[k]));
        report.time(STEP_V, clock);
        notify(&states, it, Stage::V, &a)?;

        let clock = Instant::now();
        let mut change = 0.0;
        let mut size = 0.0;
        let mut objective = 0.0;
        for (k, st) in states.iter().enumerate() {
            change += st.weight * (st.du2 + st.dv2);
            size += st.weight * (st.u.norm_squared() + st.v.norm_squared());
            objective += st.weight * st.objective(data.norm2[k], &a, phi);
        }
        let rel_change = change / size;
        report.rel_change_trace.push(rel_change);
        report.objective_trace.push(objective / n3 as f64);
        report.coeff_trace.push(a);
        report.iterations_run = it;
        report.time(STEP_OBJECTIVE, clock);
        log::debug!("iteration {it}: rel_change {rel_change:.3e}, objective {:.6e}", objective / n3 as f64);
        if !rel_change.is_finite() {
            return Err(Error::NonFinite(format!("factor update at iteration {it}")));
        }
        if rel_change < config.rel_tol {
            report.converged = true;
            break;
        }
    }
    report.degenerate_updates = states.iter().map(|s| s.degenerate).sum();
    report.rejected_core_sweeps = states.iter().map(|s| s.rejected).sum();

    let coeffs = fit_yule_walker_with(&real_cores(&states, n3)?, p, config.ar_estimator)?;
    let u_hat = FourierTensor3::from_slices(mirror_full(states.iter().map(|s| s.u.clone()), n3))?;
    let v_hat = FourierTensor3::from_slices(mirror_full(states.iter().map(|s| s.v.clone()), n3))?;
    let t_len = series.len();
    let s_hat = (0..t_len)
        .map(|t| FourierTensor3::from_slices(mirror_full(states.iter().map(|s| s.s[t].clone()), n3)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LotapModel {
        u: ifft_mode3_real(&u_hat)?,
        v: ifft_mode3_real(&v_hat)?,
        s_hat,
        coeffs,
        config: config.clone(),
        report,
    })
}

/// Objective `F` evaluated directly in the original domain with t-products.
pub fn objective(
    series: &TensorSeries,
    u: &Tensor3,
    v: &Tensor3,
    cores: &[Tensor3],
    a: &[f64],
    phi: f64,
) -> Result<f64> {
    if cores.len() != series.len() {
        return Err(Error::InvalidDims("one core per observation required".into()));
    }
    let vh = conj_transpose(v);
    let mut ar = 0.0;
    for t in a.len()..cores.len() {
        let mut e = cores[t].clone();
        for (i, &ai) in a.iter().enumerate() {
            e = e.sub(&cores[t - 1 - i].scale(ai))?;
        }
        ar += e.fro_norm_sqr();
    }
    let mut fit = 0.0;
    for (x, s) in series.slices().iter().zip(cores) {
        let rec = t_product(&t_product(u, s)?, &vh)?;
        fit += x.sub(&rec)?.fro_norm_sqr();
    }
    Ok(ar + phi * fit)
}

impl LotapModel {
    pub fn dims(&self) -> Dims {
        let u = self.u.dims();
        Dims { n1: u.n1, n2: self.v.dims().n1, n3: u.n3 }
    }

    /// Real-domain cores `S_1..S_T`.
    pub fn cores(&self) -> Result<Vec<Tensor3>> {
        self.s_hat.iter().map(ifft_mode3_real).collect()
    }

    fn fourier_factors(&self) -> (FourierTensor3, FourierTensor3) {
        (fft_mode3(&self.u), fft_mode3(&self.v))
    }

    /// `U * S * V^H` for a Fourier-domain core.
    pub fn reconstruct_from(&self, s_hat: &FourierTensor3) -> Result<Tensor3> {
        let (uh, vh) = self.fourier_factors();
        reconstruct(&uh, &vh, s_hat)
    }

    /// In-sample reconstruction of observation `t` (0-based).
    pub fn reconstruct(&self, t: usize) -> Result<Tensor3> {
        let s = self
            .s_hat
            .get(t)
            .ok_or_else(|| Error::InvalidConfig(format!("no core at time index {t}")))?;
        self.reconstruct_from(s)
    }

    /// Forecasts the next `horizon` observations. Predicted cores are fed
    /// back as lags for the later steps.
    pub fn forecast(&self, horizon: usize) -> Result<TensorSeries> {
        if horizon == 0 {
            return Err(Error::InvalidConfig("forecast horizon must be at least 1".into()));
        }
        let (uh, vh) = self.fourier_factors();
        let p = self.coeffs.order();
        let mut history: Vec<Vec<CMat>> = self.s_hat.iter().map(|s| s.slices().to_vec()).collect();
        if history.len() < p {
            return Err(Error::InsufficientData { needed: p, got: history.len() });
        }
        let mut out = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let next = predict_next(&self.coeffs, &history[history.len() - p..])?;
            let next_hat = FourierTensor3::from_slices(next.clone())?;
            out.push(reconstruct(&uh, &vh, &next_hat)?);
            history.push(next);
        }
        TensorSeries::new(out)
    }

    /// Keeps `u` and `v` and recomputes cores and coefficients on `series`:
    /// cores start at `Û^H X̂_t V̂`, coefficients are fitted, one core sweep
    /// runs, and the coefficients are fitted again.
    pub fn refit_cores(&self, series: &TensorSeries) -> Result<LotapModel> {
        let dims = self.dims();
        dims.check_same(&series.dims())?;
        check_series(series, &self.config)?;
        let n3 = dims.n3;
        let (uh, vh) = self.fourier_factors();
        let data = FourierData::new(series);
        let mode = self.config.diag_mode;
        let mut states: Vec<SliceState> = parallel::map_indices(data.xcat.len(), |k| {
            SliceState::new(k, n3, uh.slice(k).clone(), vh.slice(k).clone(), &data.xcat[k], mode)
        });
        let (p, est) = (self.config.p, self.config.ar_estimator);
        let first = fit_yule_walker_with(&real_cores(&states, n3)?, p, est)?;
        parallel::for_each_indexed(&mut states, |k, st| {
            st.update_s(data.norm2[k], &first.a, self.config.phi, mode);
        });
        let coeffs = fit_yule_walker_with(&real_cores(&states, n3)?, p, est)?;
        let s_hat = (0..series.len())
            .map(|t| FourierTensor3::from_slices(mirror_full(states.iter().map(|s| s.s[t].clone()), n3)))
            .collect::<Result<Vec<_>>>()?;
        Ok(LotapModel { s_hat, coeffs, ..self.clone() })
    }
}

fn reconstruct(uh: &FourierTensor3, vh: &FourierTensor3, s_hat: &FourierTensor3) -> Result<Tensor3> {
    let slices: Vec<CMat> = uh
        .slices()
        .iter()
        .zip(vh.slices())
        .zip(s_hat.slices())
        .map(|((u, v), s)| u * s * v.adjoint())
        .collect();
    ifft_mode3_real(&FourierTensor3::from_slices(slices)?)
}
