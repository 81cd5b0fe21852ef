//! Truncated t-SVD, tubal rank, matricization ranks and the subspace
//! stability residual.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, Svd};
use crate::parallel;
use crate::tensor::{
    conj_mat, fft_mode3, ifft_mode3, ifft_mode3_real, is_self_conjugate, map_fourier_slices,
    t_product, conj_transpose, CMat, Dims, FourierTensor3, Tensor3,
};

/// Default relative threshold for counting singular values.
pub const DEFAULT_RANK_TOL: f64 = 1e-2;

/// Rank-`r` truncated t-SVD `x ≈ u * s * v^H`.
///
/// Factors are unique only up to rotations inside blocks of tied singular
/// values; compare reconstructions and subspaces rather than raw entries.
#[derive(Debug, Clone)]
pub struct TruncatedTSVD {
    pub u: Tensor3,
    pub s: Tensor3,
    pub v: Tensor3,
    pub r: usize,
    /// Singular values of each Fourier slice, nonincreasing, length `r`.
    pub fourier_singular_values: Vec<Vec<f64>>,
}

impl TruncatedTSVD {
    pub fn reconstruct(&self) -> Result<Tensor3> {
        t_product(&t_product(&self.u, &self.s)?, &conj_transpose(&self.v))
    }
}

fn slice_svd(xh: &FourierTensor3, k: usize, real: bool) -> Svd {
    if real && is_self_conjugate(k, xh.dims().n3) {
        linalg::svd_of_real(xh.slice(k))
    } else {
        linalg::svd(xh.slice(k))
    }
}

fn mirror_svd(d: &Svd) -> Svd {
    Svd { u: conj_mat(&d.u), s: d.s.clone(), v: conj_mat(&d.v) }
}

/// Per-slice SVDs of the Fourier transform of `x`, exploiting conjugate
/// symmetry when `x` is real.
fn fourier_svds(x: &Tensor3) -> (FourierTensor3, Vec<Svd>) {
    let xh = fft_mode3(x);
    let real = x.is_real();
    let n3 = x.dims().n3;
    let svds = map_fourier_slices(n3, real, |k| slice_svd(&xh, k, real), mirror_svd);
    (xh, svds)
}

fn inverse(slices: Vec<CMat>, real: bool) -> Result<Tensor3> {
    let fh = FourierTensor3::from_slices(slices)?;
    if real { ifft_mode3_real(&fh) } else { Ok(ifft_mode3(&fh)) }
}

fn diag(values: &[f64]) -> CMat {
    CMat::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| Complex64::new(v, 0.0)),
    ))
}

/// Rank-`r` truncated t-SVD computed slice-wise in the Fourier domain.
pub fn truncated_tsvd(x: &Tensor3, r: usize) -> Result<TruncatedTSVD> {
    let Dims { n1, n2, .. } = x.dims();
    let max = n1.min(n2);
    if r == 0 || r > max {
        return Err(Error::RankOutOfRange { rank: r, max });
    }
    let (_, svds) = fourier_svds(x);
    let real = x.is_real();
    let u = svds.iter().map(|d| d.u.columns(0, r).into_owned()).collect();
    let s = svds.iter().map(|d| diag(&d.s[..r])).collect();
    let v = svds.iter().map(|d| d.v.columns(0, r).into_owned()).collect();
    let fourier_singular_values = svds.iter().map(|d| d.s[..r].to_vec()).collect();
    Ok(TruncatedTSVD {
        u: inverse(u, real)?,
        s: inverse(s, real)?,
        v: inverse(v, real)?,
        r,
        fourier_singular_values,
    })
}

/// Left factor of the full t-SVD with every column whose singular value
/// falls below `rel_tol` times the largest singular value (over all Fourier
/// slices) set to zero. Output is `n1 x min(n1, n2) x n3`.
pub fn thresholded_left_factor(x: &Tensor3, rel_tol: f64) -> Result<Tensor3> {
    let (_, svds) = fourier_svds(x);
    let smax = svds.iter().filter_map(|d| d.s.first().copied()).fold(0.0, f64::max);
    let cutoff = rel_tol * smax;
    let slices = svds
        .iter()
        .map(|d| {
            let mut u = d.u.clone();
            for (c, &sv) in d.s.iter().enumerate() {
                if smax == 0.0 || sv < cutoff {
                    u.column_mut(c).fill(Complex64::new(0.0, 0.0));
                }
            }
            u
        })
        .collect();
    inverse(slices, x.is_real())
}

/// Tubal rank: the largest count, over Fourier slices, of singular values at
/// or above `rel_tol` times the largest singular value of any slice.
pub fn tubal_rank(x: &Tensor3, rel_tol: f64) -> usize {
    let xh = fft_mode3(x);
    let n3 = x.dims().n3;
    let count = if x.is_real() { crate::tensor::independent_slices(n3).min(n3) } else { n3 };
    let spectra = parallel::map_indices(count, |k| linalg::singular_values(xh.slice(k)));
    let smax = spectra.iter().filter_map(|s| s.first().copied()).fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    spectra.iter().map(|s| linalg::count_at_least(s, rel_tol * smax)).max().unwrap_or(0)
}

/// Mode-`mode` matricization (`mode` in 1..=3): mode fibers become columns.
///
/// Column ordering follows the usual convention in which the lowest
/// remaining index varies fastest.
pub fn matricize(x: &Tensor3, mode: usize) -> CMat {
    let Dims { n1, n2, n3 } = x.dims();
    match mode {
        1 => CMat::from_fn(n1, n2 * n3, |i, c| x.get(i, c % n2, c / n2)),
        2 => CMat::from_fn(n2, n1 * n3, |j, c| x.get(c % n1, j, c / n1)),
        3 => CMat::from_fn(n3, n1 * n2, |k, c| x.get(c % n1, c / n1, k)),
        _ => panic!("mode must be 1, 2 or 3"),
    }
}

/// Rank of a matrix counting singular values at or above `rel_tol` times
/// its largest singular value.
pub fn matrix_rank(m: &CMat, rel_tol: f64) -> usize {
    let s = linalg::singular_values(m);
    match s.first() {
        Some(&smax) if smax > 0.0 => linalg::count_at_least(&s, rel_tol * smax),
        _ => 0,
    }
}

/// Ranks of the three matricizations.
pub fn tucker_ranks(x: &Tensor3, rel_tol: f64) -> [usize; 3] {
    [1, 2, 3].map(|mode| matrix_rank(&matricize(x, mode), rel_tol))
}

/// Mean of the three matricization ranks.
pub fn avg_tucker_rank(x: &Tensor3, rel_tol: f64) -> f64 {
    tucker_ranks(x, rel_tol).iter().sum::<usize>() as f64 / 3.0
}

/// Subspace discrepancy between two column-orthogonal tensors:
/// `min_Θ ‖u1 − ut * Θ‖_F / sqrt(2 c)` over column-orthogonal `Θ`, where
/// `c` is the column count of the factors. Solved per Fourier slice as an
/// orthogonal Procrustes problem. Zero columns are allowed in either
/// argument.
pub fn subspace_residual(u1: &Tensor3, ut: &Tensor3) -> Result<f64> {
    u1.dims().check_same(&ut.dims())?;
    let c = u1.dims().n2;
    let h1 = fft_mode3(u1);
    let ht = fft_mode3(ut);
    check_partial_isometry(&h1)?;
    check_partial_isometry(&ht)?;
    let n3 = u1.dims().n3;
    let per_slice = parallel::map_indices(n3, |k| {
        let a = h1.slice(k);
        let b = ht.slice(k);
        let theta = procrustes(b, a);
        (a - b * theta).norm_squared()
    });
    // Parseval: real-domain squared norm is the Fourier one divided by n3
    let sq: f64 = per_slice.iter().sum::<f64>() / n3 as f64;
    Ok((sq / (2.0 * c as f64)).sqrt())
}

/// Unitary `Θ` minimizing `‖target − basis Θ‖_F`: `A B^H` from the SVD of
/// `basis^H target`.
pub fn procrustes(basis: &CMat, target: &CMat) -> CMat {
    let m = basis.adjoint() * target;
    let d = linalg::svd(&m);
    &d.u * d.v.adjoint()
}

fn check_partial_isometry(h: &FourierTensor3) -> Result<()> {
    for (k, s) in h.slices().iter().enumerate() {
        let g = s.adjoint() * s;
        let mut off = 0.0;
        for ((i, j), z) in g.iter().enumerate().map(|(p, z)| ((p % g.nrows(), p / g.nrows()), z)) {
            let target = if i == j { z.re.round().clamp(0.0, 1.0) } else { 0.0 };
            off += (z - Complex64::new(target, 0.0)).norm_sqr();
        }
        if off.sqrt() > 1e-6 {
            return Err(Error::InvalidDims(format!(
                "factor is not column-orthogonal in Fourier slice {k} (defect {:.2e})",
                off.sqrt()
            )));
        }
    }
    Ok(())
}

/// Residuals `res_t` of each slice's thresholded left factor against the
/// first slice's, for `t = 1..=len`.
pub fn subspace_stability(slices: &[Tensor3], rel_tol: f64) -> Result<Vec<f64>> {
    let first = slices.first().ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
    for s in slices {
        if s.dims() != first.dims() {
            first.dims().check_same(&s.dims())?;
        }
    }
    let u1 = thresholded_left_factor(first, rel_tol)?;
    let factors: Vec<Result<Tensor3>> =
        parallel::map_indices(slices.len(), |t| thresholded_left_factor(&slices[t], rel_tol));
    factors.into_iter().map(|ut| subspace_residual(&u1, &ut?)).collect()
}
