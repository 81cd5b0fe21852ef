//! Forecasting third-order tensor time series with a low-tubal-rank
//! autoregressive model.
//!
//! Each observation `X_t` (an `n1 x n2 x n3` tensor) is factored as
//! `U * S_t * V^H` under the t-product, with column-orthogonal `U`, `V`
//! shared across time and small cores `S_t` that follow a scalar AR(p)
//! recurrence. Fitting alternates closed-form updates on the Fourier slices
//! of the factors; forecasting extrapolates the cores and maps them back.

pub mod ar;
pub mod data;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod lotap;
pub mod parallel;
pub mod tensor;
pub mod tsvd;

pub use error::{Error, Result};
pub use tensor::{Dims, FourierTensor3, Tensor3};
