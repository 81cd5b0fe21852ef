//! TOML defaults file. Every key is optional; a value given both here and as
//! a flag resolves to the flag, with a notice in the log.
//!
//! ```toml
//! threads = 1
//!
//! [generate]
//! n1 = 100
//! n2 = 100
//! n3 = 10
//! rank = 4
//! length = 1000
//! rho = 0.01
//! seed = 0
//! ar_coeffs = [0.5, -0.3, 0.1]
//! burn_in = 200
//!
//! [fit]
//! rank = 4
//! order = 2
//! phi = 10.0
//! diag = "relaxed"            # or "full"
//! max_iters = 10
//! rel_tol = 1e-3
//! seed = 0
//! estimator = "least-squares" # or "toeplitz"
//!
//! [evaluate]
//! train = 80
//! origins = 50
//! refit = "every"             # or "once"
//!
//! [analysis]
//! threshold = 1e-2
//! points = 50
//! ```

use std::fmt::Debug;
use std::path::Path;

use serde::Deserialize;

use crate::args::{Diag, Estimator, FitFlags, RefitMode};
use crate::CliError;

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub threads: Option<usize>,
    #[serde(default)]
    pub generate: GenerateFile,
    #[serde(default)]
    pub fit: FitFile,
    #[serde(default)]
    pub evaluate: EvaluateFile,
    #[serde(default)]
    pub analysis: AnalysisFile,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct GenerateFile {
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub n3: Option<usize>,
    pub rank: Option<usize>,
    pub length: Option<usize>,
    pub rho: Option<f64>,
    pub seed: Option<u64>,
    pub ar_coeffs: Option<Vec<f64>>,
    pub burn_in: Option<usize>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct FitFile {
    pub rank: Option<usize>,
    pub order: Option<usize>,
    pub phi: Option<f64>,
    pub diag: Option<Diag>,
    pub max_iters: Option<usize>,
    pub rel_tol: Option<f64>,
    pub seed: Option<u64>,
    pub estimator: Option<Estimator>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct EvaluateFile {
    pub train: Option<usize>,
    pub origins: Option<usize>,
    pub refit: Option<RefitMode>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct AnalysisFile {
    pub threshold: Option<f64>,
    pub points: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
        let Some(path) = path else { return Ok(FileConfig::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Flag, else file, else `default`. Logs when the flag overrides a
/// different file value.
pub fn pick<T: PartialEq + Debug>(name: &str, flag: Option<T>, file: Option<T>, default: T) -> T {
    match (flag, file) {
        (Some(f), Some(c)) => {
            if f != c {
                log::warn!("--{name} {f:?} overrides config value {c:?}");
            }
            f
        }
        (Some(f), None) => f,
        (None, Some(c)) => c,
        (None, None) => default,
    }
}

pub fn fit_config(flags: &FitFlags, file: &FitFile) -> lotap::lotap::FitConfig {
    let d = lotap::lotap::FitConfig::default();
    let diag_default = match d.diag_mode {
        lotap::lotap::DiagMode::Full => Diag::Full,
        lotap::lotap::DiagMode::Relaxed => Diag::Relaxed,
    };
    let est_default = match d.ar_estimator {
        lotap::ar::ArEstimator::LeastSquares => Estimator::LeastSquares,
        lotap::ar::ArEstimator::Toeplitz => Estimator::Toeplitz,
    };
    lotap::lotap::FitConfig {
        r: pick("rank", flags.rank, file.rank, d.r),
        p: pick("order", flags.order, file.order, d.p),
        phi: pick("phi", flags.phi, file.phi, d.phi),
        diag_mode: pick("diag", flags.diag, file.diag, diag_default).into(),
        max_iters: pick("max-iters", flags.max_iters, file.max_iters, d.max_iters),
        rel_tol: pick("rel-tol", flags.rel_tol, file.rel_tol, d.rel_tol),
        seed: pick("seed", flags.seed, file.seed, d.seed),
        ar_estimator: pick("estimator", flags.estimator, file.estimator, est_default).into(),
    }
}
