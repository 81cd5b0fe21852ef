//! Dense third-order tensors, the mode-3 Fourier transform and t-product
//! algebra.
//!
//! Storage is frontal-slice-major: slice `k` occupies the contiguous range
//! `k*n1*n2 .. (k+1)*n1*n2`, column-major inside the slice. This matches
//! nalgebra's column-major matrices, so a frontal slice converts to a
//! `DMatrix` without reshuffling.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Axis, Error, Result};
use crate::parallel;

pub type CMat = DMatrix<Complex64>;

/// Relative imaginary residue tolerated before an inverse transform is
/// declared real.
pub const REAL_RESIDUE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
}

impl Dims {
    pub fn new(n1: usize, n2: usize, n3: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 || n3 == 0 {
            return Err(Error::InvalidDims(format!(
                "all dimensions must be positive, got {n1}x{n2}x{n3}"
            )));
        }
        Ok(Dims { n1, n2, n3 })
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2 * self.n3
    }

    pub fn slice_len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check_same(&self, other: &Dims) -> Result<()> {
        for (axis, a, b) in [
            (Axis::Rows, self.n1, other.n1),
            (Axis::Cols, self.n2, other.n2),
            (Axis::Tubes, self.n3, other.n3),
        ] {
            if a != b {
                return Err(Error::DimensionMismatch { axis, left: a, right: b });
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.n1, self.n2, self.n3)
    }
}

/// Dense complex-capable third-order tensor.
///
/// Real tensors carry no imaginary buffer at all, which is how the "real"
/// flag is represented: `is_real()` is exactly `im.is_none()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: Dims,
    re: Vec<f64>,
    im: Option<Vec<f64>>,
}

impl Tensor3 {
    pub fn zeros(dims: Dims) -> Self {
        Tensor3 { dims, re: vec![0.0; dims.len()], im: None }
    }

    pub fn from_real(dims: Dims, re: Vec<f64>) -> Result<Self> {
        if re.len() != dims.len() {
            return Err(Error::InvalidDims(format!(
                "buffer of {} values does not match {dims}",
                re.len()
            )));
        }
        Ok(Tensor3 { dims, re, im: None })
    }

    pub fn from_complex(dims: Dims, values: &[Complex64]) -> Result<Self> {
        if values.len() != dims.len() {
            return Err(Error::InvalidDims(format!(
                "buffer of {} values does not match {dims}",
                values.len()
            )));
        }
        Ok(Tensor3 {
            dims,
            re: values.iter().map(|z| z.re).collect(),
            im: Some(values.iter().map(|z| z.im).collect()),
        })
    }

    /// Builds a real tensor from complex values after checking that the
    /// imaginary part is negligible relative to the whole.
    pub fn from_complex_expect_real(dims: Dims, values: &[Complex64], tol: f64) -> Result<Self> {
        let total: f64 = values.iter().map(|z| z.norm_sqr()).sum();
        let imag: f64 = values.iter().map(|z| z.im * z.im).sum();
        if total > 0.0 && (imag / total).sqrt() >= tol {
            return Err(Error::ImaginaryResidue { residue: (imag / total).sqrt(), tolerance: tol });
        }
        Tensor3::from_real(dims, values.iter().map(|z| z.re).collect())
    }

    /// Builds a tensor from `n3` frontal slices of equal shape.
    pub fn from_slices(slices: &[CMat]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::InvalidDims("no frontal slices".into()))?;
        let dims = Dims::new(first.nrows(), first.ncols(), slices.len())?;
        let mut values = Vec::with_capacity(dims.len());
        for s in slices {
            if s.shape() != first.shape() {
                return Err(Error::InvalidDims("frontal slices differ in shape".into()));
            }
            values.extend_from_slice(s.as_slice());
        }
        Tensor3::from_complex(dims, &values)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn is_real(&self) -> bool {
        self.im.is_none()
    }

    pub fn real_part(&self) -> &[f64] {
        &self.re
    }

    pub fn imag_part(&self) -> Option<&[f64]> {
        self.im.as_deref()
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        k * self.dims.slice_len() + j * self.dims.n1 + i
    }

    /// Entry `X(i, j, k)`, zero-based.
    pub fn get(&self, i: usize, j: usize, k: usize) -> Complex64 {
        assert!(i < self.dims.n1 && j < self.dims.n2 && k < self.dims.n3, "index out of bounds");
        let o = self.offset(i, j, k);
        Complex64::new(self.re[o], self.im.as_ref().map_or(0.0, |im| im[o]))
    }

    pub fn to_complex_vec(&self) -> Vec<Complex64> {
        match &self.im {
            Some(im) => self.re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect(),
            None => self.re.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
        }
    }

    /// Frontal slice `k` as an `n1 x n2` complex matrix.
    pub fn frontal_slice(&self, k: usize) -> CMat {
        let n = self.dims.slice_len();
        let range = k * n..(k + 1) * n;
        let re = &self.re[range.clone()];
        match &self.im {
            Some(im) => CMat::from_iterator(
                self.dims.n1,
                self.dims.n2,
                re.iter().zip(&im[range]).map(|(&a, &b)| Complex64::new(a, b)),
            ),
            None => CMat::from_iterator(
                self.dims.n1,
                self.dims.n2,
                re.iter().map(|&a| Complex64::new(a, 0.0)),
            ),
        }
    }

    pub fn fro_norm(&self) -> f64 {
        self.fro_norm_sqr().sqrt()
    }

    pub fn fro_norm_sqr(&self) -> f64 {
        let re: f64 = self.re.iter().map(|v| v * v).sum();
        let im: f64 = self.im.as_ref().map_or(0.0, |im| im.iter().map(|v| v * v).sum());
        re + im
    }

    pub fn scale(&self, c: f64) -> Tensor3 {
        Tensor3 {
            dims: self.dims,
            re: self.re.iter().map(|v| v * c).collect(),
            im: self.im.as_ref().map(|im| im.iter().map(|v| v * c).collect()),
        }
    }

    fn zip_with(&self, other: &Tensor3, f: impl Fn(f64, f64) -> f64) -> Result<Tensor3> {
        self.dims.check_same(&other.dims)?;
        let re = self.re.iter().zip(&other.re).map(|(&a, &b)| f(a, b)).collect();
        let im = match (&self.im, &other.im) {
            (None, None) => None,
            (a, b) => {
                let zeros = vec![0.0; self.dims.len()];
                let a = a.as_ref().unwrap_or(&zeros);
                let b = b.as_ref().unwrap_or(&zeros);
                Some(a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            }
        };
        Ok(Tensor3 { dims: self.dims, re, im })
    }

    pub fn add(&self, other: &Tensor3) -> Result<Tensor3> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor3) -> Result<Tensor3> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn all_finite(&self) -> bool {
        self.re.iter().all(|v| v.is_finite())
            && self.im.as_ref().is_none_or(|im| im.iter().all(|v| v.is_finite()))
    }
}

/// Stack of Fourier-domain frontal slices `X̂^(k)`, `k = 0..n3`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierTensor3 {
    dims: Dims,
    slices: Vec<CMat>,
}

impl FourierTensor3 {
    pub fn from_slices(slices: Vec<CMat>) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::InvalidDims("no Fourier slices".into()))?;
        let dims = Dims::new(first.nrows(), first.ncols(), slices.len())?;
        if slices.iter().any(|s| s.shape() != first.shape()) {
            return Err(Error::InvalidDims("Fourier slices differ in shape".into()));
        }
        Ok(FourierTensor3 { dims, slices })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn slices(&self) -> &[CMat] {
        &self.slices
    }

    pub fn slice(&self, k: usize) -> &CMat {
        &self.slices[k]
    }

    pub fn into_slices(self) -> Vec<CMat> {
        self.slices
    }

    pub fn fro_norm(&self) -> f64 {
        self.slices.iter().map(|s| s.norm_squared()).sum::<f64>().sqrt()
    }
}

fn plan(n3: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n3)
    } else {
        planner.plan_fft_forward(n3)
    }
}

/// Transforms every tube of a slice-major buffer in place.
fn transform_tubes(values: &[Complex64], dims: Dims, inverse: bool) -> Vec<Complex64> {
    let n3 = dims.n3;
    let m = dims.slice_len();
    if n3 == 1 {
        return values.to_vec();
    }
    // tube-major copy: tube `p` occupies p*n3..(p+1)*n3
    let mut tubes = vec![Complex64::new(0.0, 0.0); values.len()];
    for k in 0..n3 {
        for p in 0..m {
            tubes[p * n3 + k] = values[k * m + p];
        }
    }
    let fft = plan(n3, inverse);
    let block = n3 * m.div_ceil(64).max(1);
    parallel::for_each_chunk(&mut tubes, block, |chunk| fft.process(chunk));
    let scale = if inverse { 1.0 / n3 as f64 } else { 1.0 };
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    for p in 0..m {
        for k in 0..n3 {
            out[k * m + p] = tubes[p * n3 + k] * scale;
        }
    }
    out
}

fn split_slices(values: &[Complex64], dims: Dims) -> Vec<CMat> {
    values
        .chunks(dims.slice_len())
        .map(|c| CMat::from_column_slice(dims.n1, dims.n2, c))
        .collect()
}

/// Unnormalized DFT along the third mode.
pub fn fft_mode3(x: &Tensor3) -> FourierTensor3 {
    let dims = x.dims();
    let out = transform_tubes(&x.to_complex_vec(), dims, false);
    FourierTensor3 { dims, slices: split_slices(&out, dims) }
}

/// Inverse DFT along the third mode, including the `1/n3` factor.
pub fn ifft_mode3(xh: &FourierTensor3) -> Tensor3 {
    let dims = xh.dims();
    let flat = flatten(xh);
    let out = transform_tubes(&flat, dims, true);
    Tensor3::from_complex(dims, &out).expect("dims preserved by transform")
}

/// Inverse transform that must produce a real tensor; fails when the
/// imaginary residue exceeds `REAL_RESIDUE_TOL` relative to the result.
pub fn ifft_mode3_real(xh: &FourierTensor3) -> Result<Tensor3> {
    let dims = xh.dims();
    let out = transform_tubes(&flatten(xh), dims, true);
    Tensor3::from_complex_expect_real(dims, &out, REAL_RESIDUE_TOL)
}

fn flatten(xh: &FourierTensor3) -> Vec<Complex64> {
    let mut flat = Vec::with_capacity(xh.dims.len());
    for s in &xh.slices {
        flat.extend_from_slice(s.as_slice());
    }
    flat
}

/// Number of Fourier slices that carry independent information for a real
/// tensor: slices `k` and `n3 - k` are complex conjugates of each other.
pub(crate) fn independent_slices(n3: usize) -> usize {
    n3 / 2 + 1
}

/// Evaluates per-slice work for `k = 0..n3`. When `real` is set only the
/// independent half is computed and the remainder is filled by `mirror`,
/// which must map the result for slice `k` to the result for `n3 - k`.
pub(crate) fn map_fourier_slices<T, F, M>(n3: usize, real: bool, f: F, mirror: M) -> Vec<T>
where
    T: Send + Clone,
    F: Fn(usize) -> T + Sync + Send,
    M: Fn(&T) -> T,
{
    if !real {
        return parallel::map_indices(n3, f);
    }
    let half = independent_slices(n3).min(n3);
    let mut out = parallel::map_indices(half, f);
    for k in half..n3 {
        let m = mirror(&out[n3 - k]);
        out.push(m);
    }
    out
}

/// True when Fourier slice `k` of a real tensor is itself real.
pub(crate) fn is_self_conjugate(k: usize, n3: usize) -> bool {
    k == 0 || 2 * k == n3
}

pub(crate) fn conj_mat(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

/// Checks the conjugate symmetry `X̂^(k) = conj(X̂^(n3-k))` (zero-based)
/// that the transform of a real tensor satisfies; returns the largest
/// entrywise violation.
pub fn conjugate_symmetry_defect(xh: &FourierTensor3) -> f64 {
    let n3 = xh.dims.n3;
    let mut worst: f64 = 0.0;
    for k in 1..n3 {
        let mirror = &xh.slices[n3 - k];
        for (a, b) in xh.slices[k].iter().zip(mirror.iter()) {
            worst = worst.max((a - b.conj()).norm());
        }
    }
    worst
}

fn check_conformable(x: Dims, y: Dims) -> Result<()> {
    if x.n2 != y.n1 {
        return Err(Error::DimensionMismatch { axis: Axis::Inner, left: x.n2, right: y.n1 });
    }
    if x.n3 != y.n3 {
        return Err(Error::DimensionMismatch { axis: Axis::Tubes, left: x.n3, right: y.n3 });
    }
    Ok(())
}

/// t-product `x * y` computed as slice-wise products in the Fourier domain.
pub fn t_product(x: &Tensor3, y: &Tensor3) -> Result<Tensor3> {
    check_conformable(x.dims(), y.dims())?;
    let xh = fft_mode3(x);
    let yh = fft_mode3(y);
    let slices = parallel::map_indices(x.dims().n3, |k| &xh.slices[k] * &yh.slices[k]);
    let zh = FourierTensor3::from_slices(slices)?;
    if x.is_real() && y.is_real() {
        ifft_mode3_real(&zh)
    } else {
        Ok(ifft_mode3(&zh))
    }
}

/// Slice-wise product of two Fourier-domain tensors.
pub fn fourier_product(xh: &FourierTensor3, yh: &FourierTensor3) -> Result<FourierTensor3> {
    check_conformable(xh.dims(), yh.dims())?;
    let slices = parallel::map_indices(xh.dims().n3, |k| &xh.slices[k] * &yh.slices[k]);
    FourierTensor3::from_slices(slices)
}

/// Block-circulant reference path for the t-product: materializes
/// `bcirc(x)` and `bvec(y)`, multiplies, and folds the result back.
/// Quadratic in `n3`; intended for verification.
pub fn bcirc_oracle(x: &Tensor3, y: &Tensor3) -> Result<Tensor3> {
    check_conformable(x.dims(), y.dims())?;
    let (n1, n2, n3) = (x.dims().n1, x.dims().n2, x.dims().n3);
    let n4 = y.dims().n2;
    let mut bcirc = CMat::zeros(n1 * n3, n2 * n3);
    for bi in 0..n3 {
        for bj in 0..n3 {
            let slice = x.frontal_slice((bi + n3 - bj) % n3);
            bcirc.view_mut((bi * n1, bj * n2), (n1, n2)).copy_from(&slice);
        }
    }
    let mut bvec = CMat::zeros(n2 * n3, n4);
    for k in 0..n3 {
        bvec.view_mut((k * n2, 0), (n2, n4)).copy_from(&y.frontal_slice(k));
    }
    let prod = bcirc * bvec;
    let slices: Vec<CMat> = (0..n3)
        .map(|k| prod.view((k * n1, 0), (n1, n4)).into_owned())
        .collect();
    let z = Tensor3::from_slices(&slices)?;
    if x.is_real() && y.is_real() {
        Tensor3::from_complex_expect_real(z.dims(), &z.to_complex_vec(), REAL_RESIDUE_TOL)
    } else {
        Ok(z)
    }
}

/// Conjugate transpose: slice 0 is conjugate-transposed in place, and the
/// order of slices `1..n3` is reversed.
pub fn conj_transpose(x: &Tensor3) -> Tensor3 {
    let Dims { n1, n2, n3 } = x.dims();
    let dims = Dims { n1: n2, n2: n1, n3 };
    let src_slice = |k: usize| if k == 0 { 0 } else { n3 - k };
    let mut re = vec![0.0; dims.len()];
    let mut im = x.imag_part().map(|_| vec![0.0; dims.len()]);
    for k in 0..n3 {
        let sk = src_slice(k);
        for j in 0..n1 {
            for i in 0..n2 {
                // result(i, j, k) = conj(x(j, i, sk))
                let dst = k * n1 * n2 + j * n2 + i;
                let src = sk * n1 * n2 + i * n1 + j;
                re[dst] = x.re[src];
                if let (Some(im), Some(src_im)) = (im.as_mut(), x.imag_part()) {
                    im[dst] = -src_im[src];
                }
            }
        }
    }
    Tensor3 { dims, re, im }
}

/// Identity tensor: first frontal slice `I_n`, remaining slices zero.
pub fn identity_tensor(n: usize, n3: usize) -> Result<Tensor3> {
    let dims = Dims::new(n, n, n3)?;
    let mut re = vec![0.0; dims.len()];
    for i in 0..n {
        re[i * n + i] = 1.0;
    }
    Tensor3::from_real(dims, re)
}

/// Frobenius norm.
pub fn fro_norm(x: &Tensor3) -> f64 {
    x.fro_norm()
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn random_real(rng: &mut impl Rng, n1: usize, n2: usize, n3: usize) -> Tensor3 {
        let dims = Dims::new(n1, n2, n3).unwrap();
        Tensor3::from_real(dims, (0..dims.len()).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap()
    }

    pub fn random_complex(rng: &mut impl Rng, n1: usize, n2: usize, n3: usize) -> Tensor3 {
        let dims = Dims::new(n1, n2, n3).unwrap();
        let v: Vec<Complex64> = (0..dims.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Tensor3::from_complex(dims, &v).unwrap()
    }

    pub fn rel_err(a: &Tensor3, b: &Tensor3) -> f64 {
        a.sub(b).unwrap().fro_norm() / b.fro_norm().max(1e-300)
    }
}
