//! Scalar AR(p) coefficients shared by a vector-valued series, estimated
//! from pooled Yule-Walker equations, and one-step linear prediction.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::{CMat, Tensor3};

/// Relative singular-value cutoff for the normal-equation solve.
const RCOND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ArCoefficients {
    /// `a[0]` multiplies the most recent lag.
    pub a: Vec<f64>,
    /// The autocovariance matrix was numerically singular; `a` is the
    /// minimum-norm least-squares solution.
    pub rank_deficient: bool,
    /// Whether every root of the characteristic polynomial lies strictly
    /// inside the unit circle. Coefficients are used regardless.
    pub stationary: bool,
}

impl ArCoefficients {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidConfig("AR order must be at least 1".into()));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("AR coefficients".into()));
        }
        let stationary = is_stationary(&a);
        Ok(ArCoefficients { a, rank_deficient: false, stationary })
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }
}

/// Spectral radius of the companion matrix below one.
pub fn is_stationary(a: &[f64]) -> bool {
    let p = a.len();
    let mut companion = DMatrix::<f64>::zeros(p, p);
    for (j, &v) in a.iter().enumerate() {
        companion[(0, j)] = v;
    }
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    companion.complex_eigenvalues().iter().all(|z| z.norm() < 1.0)
}

/// Pooled sample autocovariances `γ_0..=γ_max_lag`: each component is
/// centered by its own mean, lag products are divided by `T`, and the
/// result is averaged over components.
pub fn pooled_autocovariance(series: &[Vec<f64>], max_lag: usize) -> Vec<f64> {
    let t_len = series.len();
    let d = series.first().map_or(0, Vec::len);
    let mut gamma = vec![0.0; max_lag + 1];
    if t_len == 0 || d == 0 {
        return gamma;
    }
    let mut means = vec![0.0; d];
    for row in series {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= t_len as f64);
    let centered: Vec<Vec<f64>> = series
        .iter()
        .map(|row| row.iter().zip(&means).map(|(v, m)| v - m).collect())
        .collect();
    for (k, g) in gamma.iter_mut().enumerate() {
        let mut acc = 0.0;
        for t in k..t_len {
            acc += centered[t].iter().zip(&centered[t - k]).map(|(a, b)| a * b).sum::<f64>();
        }
        *g = acc / (t_len as f64 * d as f64);
    }
    gamma
}

/// How the pooled Yule-Walker system is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArEstimator {
    /// Normal equations of the pooled least-squares regression of each value
    /// on its `p` predecessors, on raw (uncentered) values:
    /// `Γ_ij = Σ_c Σ_t x_{t−i,c} x_{t−j,c}`, `γ_i = Σ_c Σ_t x_{t,c} x_{t−i,c}`
    /// with `t` running over `p..T`. Exact on noiseless AR data.
    #[default]
    LeastSquares,
    /// Classical autocorrelation form: per-component mean-centering, biased
    /// (`1/T`) autocovariances pooled over components, Toeplitz `Γ`.
    Toeplitz,
}

/// Fits a single set of AR(p) coefficients to a vector series (`series[t]`
/// holds the `d` components at time `t`) with the default estimator.
pub fn fit_yule_walker(series: &[Vec<f64>], p: usize) -> Result<ArCoefficients> {
    fit_yule_walker_with(series, p, ArEstimator::default())
}

pub fn fit_yule_walker_with(
    series: &[Vec<f64>],
    p: usize,
    estimator: ArEstimator,
) -> Result<ArCoefficients> {
    if p == 0 {
        return Err(Error::InvalidConfig("AR order must be at least 1".into()));
    }
    if series.len() <= p {
        return Err(Error::InsufficientData { needed: p + 1, got: series.len() });
    }
    let d = series[0].len();
    if d == 0 || series.iter().any(|row| row.len() != d) {
        return Err(Error::InvalidDims("series components must share a nonzero length".into()));
    }
    if series.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("AR input series".into()));
    }
    let (gram, rhs) = match estimator {
        ArEstimator::LeastSquares => lagged_normal_equations(series, p),
        ArEstimator::Toeplitz => {
            let gamma = pooled_autocovariance(series, p);
            (
                DMatrix::from_fn(p, p, |i, j| gamma[i.abs_diff(j)]),
                DVector::from_iterator(p, gamma[1..].iter().copied()),
            )
        }
    };
    solve_min_norm(gram, rhs)
}

/// Normal equations of `min_a Σ_t Σ_c (x_{t,c} − Σ_i a_i x_{t−i,c})²`.
fn lagged_normal_equations(series: &[Vec<f64>], p: usize) -> (DMatrix<f64>, DVector<f64>) {
    let t_len = series.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    for t in p..t_len {
        for i in 0..p {
            let lag_i = &series[t - 1 - i];
            rhs[i] += dot(&series[t], lag_i);
            for j in 0..=i {
                gram[(i, j)] += dot(lag_i, &series[t - 1 - j]);
            }
        }
    }
    for i in 0..p {
        for j in i + 1..p {
            gram[(i, j)] = gram[(j, i)];
        }
    }
    let scale = ((t_len - p) * series[0].len()) as f64;
    (gram / scale, rhs / scale)
}

fn solve_min_norm(gram: DMatrix<f64>, rhs: DVector<f64>) -> Result<ArCoefficients> {
    let p = rhs.len();
    let svd = gram.svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = smax * RCOND;
    let rank_deficient = smax == 0.0 || svd.singular_values.iter().any(|&s| s <= cutoff);
    let a: Vec<f64> = if smax == 0.0 {
        vec![0.0; p]
    } else {
        svd.solve(&rhs, cutoff)
            .map_err(|e| Error::InvalidConfig(format!("Yule-Walker solve failed: {e}")))?
            .iter()
            .copied()
            .collect()
    };
    let stationary = is_stationary(&a);
    if !stationary {
        log::debug!("fitted AR coefficients {a:?} are not stationary");
    }
    Ok(ArCoefficients { a, rank_deficient, stationary })
}

/// Values that support the linear combinations used in prediction.
pub trait Linear: Clone {
    fn scaled(&self, c: f64) -> Self;
    fn add_scaled(&mut self, c: f64, other: &Self);
}

impl Linear for f64 {
    fn scaled(&self, c: f64) -> Self {
        self * c
    }
    fn add_scaled(&mut self, c: f64, other: &Self) {
        *self += c * other;
    }
}

impl Linear for Vec<f64> {
    fn scaled(&self, c: f64) -> Self {
        self.iter().map(|v| v * c).collect()
    }
    fn add_scaled(&mut self, c: f64, other: &Self) {
        assert_eq!(self.len(), other.len(), "length mismatch");
        self.iter_mut().zip(other).for_each(|(a, b)| *a += c * b);
    }
}

impl Linear for CMat {
    fn scaled(&self, c: f64) -> Self {
        self * Complex64::new(c, 0.0)
    }
    fn add_scaled(&mut self, c: f64, other: &Self) {
        *self += other * Complex64::new(c, 0.0);
    }
}

impl Linear for Vec<CMat> {
    fn scaled(&self, c: f64) -> Self {
        self.iter().map(|m| m.scaled(c)).collect()
    }
    fn add_scaled(&mut self, c: f64, other: &Self) {
        assert_eq!(self.len(), other.len(), "length mismatch");
        self.iter_mut().zip(other).for_each(|(a, b)| a.add_scaled(c, b));
    }
}

impl Linear for Tensor3 {
    fn scaled(&self, c: f64) -> Self {
        self.scale(c)
    }
    fn add_scaled(&mut self, c: f64, other: &Self) {
        *self = self.add(&other.scale(c)).expect("tensor dims must match");
    }
}

/// `Σ_i a_i · history[len − i]`, i.e. the one-step AR prediction.
pub fn predict_next<T: Linear>(coeffs: &ArCoefficients, history: &[T]) -> Result<T> {
    let p = coeffs.order();
    if history.len() < p {
        return Err(Error::InsufficientData { needed: p, got: history.len() });
    }
    let n = history.len();
    let mut out = history[n - 1].scaled(coeffs.a[0]);
    for (i, &a) in coeffs.a.iter().enumerate().skip(1) {
        out.add_scaled(a, &history[n - 1 - i]);
    }
    Ok(out)
}
