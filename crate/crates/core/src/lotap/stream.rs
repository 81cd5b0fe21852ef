//! Streaming products against one Fourier slice's stacked data.
//!
//! The data `[X̂_1 … X̂_T]` (`n1 x K`, `K = T·n2`) is stored as separate real
//! and imaginary planes, column-major, with the row count padded to a
//! multiple of [`LANES`] (padding rows are zero). Both products read every
//! data entry once; `times` walks the columns in tiles that fit in L1 and
//! keeps a tile's accumulators in registers.

use num_complex::Complex64;

use crate::tensor::CMat;

/// Row padding and vector width of the kernels.
pub(crate) const LANES: usize = 8;

/// Columns per cache tile in `times`.
const TILE: usize = 32;

/// Largest `r` with a dedicated kernel; wider products take a generic path.
const MAX_FAST_R: usize = 8;

#[derive(Debug, Clone)]
pub(crate) struct Stacked {
    pub n1: usize,
    /// `n1` rounded up to a multiple of `LANES`.
    pub ld: usize,
    pub cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Stacked {
    pub fn zeros(n1: usize, cols: usize) -> Stacked {
        let ld = n1.div_ceil(LANES) * LANES;
        Stacked { n1, ld, cols, re: vec![0.0; ld * cols], im: vec![0.0; ld * cols] }
    }

    /// Copies `m` into columns `c0..c0 + m.ncols()`.
    pub fn set_block(&mut self, c0: usize, m: &CMat) {
        debug_assert_eq!(m.nrows(), self.n1);
        for j in 0..m.ncols() {
            let base = (c0 + j) * self.ld;
            for i in 0..self.n1 {
                let z = m[(i, j)];
                self.re[base + i] = z.re;
                self.im[base + i] = z.im;
            }
        }
    }

    pub fn norm_squared(&self) -> f64 {
        self.re.iter().chain(&self.im).map(|v| v * v).sum()
    }

    /// `X w` for `w` of shape `cols x r`.
    pub fn times(&self, w: &Planar) -> CMat {
        assert_eq!(w.rows, self.cols);
        let r = w.cols;
        let mut mr = vec![0.0; self.ld * r];
        let mut mi = vec![0.0; self.ld * r];
        dispatch_times(self, &w.re, &w.im, r, &mut mr, &mut mi);
        CMat::from_fn(self.n1, r, |i, j| Complex64::new(mr[j * self.ld + i], mi[j * self.ld + i]))
    }

    /// `X^H u` for `u` of shape `n1 x r`.
    pub fn adj_times(&self, u: &CMat) -> Planar {
        assert_eq!(u.nrows(), self.n1);
        let r = u.ncols();
        let mut ur = vec![0.0; self.ld * r];
        let mut ui = vec![0.0; self.ld * r];
        for j in 0..r {
            for i in 0..self.n1 {
                ur[j * self.ld + i] = u[(i, j)].re;
                ui[j * self.ld + i] = u[(i, j)].im;
            }
        }
        // The kernels write row-major; transpose into column-major planes.
        let mut zr = vec![0.0; self.cols * r];
        let mut zi = vec![0.0; self.cols * r];
        dispatch_adj(self, &ur, &ui, r, &mut zr, &mut zi);
        let mut z = Planar::zeros(self.cols, r);
        for (k, (zr_k, zi_k)) in zr.chunks_exact(r).zip(zi.chunks_exact(r)).enumerate() {
            for j in 0..r {
                z.re[j * self.cols + k] = zr_k[j];
                z.im[j * self.cols + k] = zi_k[j];
            }
        }
        z
    }
}

/// Column-major complex matrix with split real and imaginary planes.
#[derive(Debug, Clone)]
pub(crate) struct Planar {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl Planar {
    pub fn zeros(rows: usize, cols: usize) -> Planar {
        Planar { rows, cols, re: vec![0.0; rows * cols], im: vec![0.0; rows * cols] }
    }

    pub fn from_cmat(m: &CMat) -> Planar {
        let (re, im) = m.iter().map(|z| (z.re, z.im)).unzip();
        Planar { rows: m.nrows(), cols: m.ncols(), re, im }
    }

    pub fn to_cmat(&self) -> CMat {
        CMat::from_iterator(self.rows, self.cols, self.re.iter().zip(&self.im).map(|(&re, &im)| Complex64::new(re, im)))
    }

    /// Rows `r0..r0 + len` of column `j`.
    pub fn segment(&self, j: usize, r0: usize, len: usize) -> (&[f64], &[f64]) {
        let at = j * self.rows + r0;
        (&self.re[at..at + len], &self.im[at..at + len])
    }

    pub fn segment_mut(&mut self, j: usize, r0: usize, len: usize) -> (&mut [f64], &mut [f64]) {
        let at = j * self.rows + r0;
        (&mut self.re[at..at + len], &mut self.im[at..at + len])
    }
}

/// `y += a · x` on split planes.
#[inline]
pub(crate) fn axpy(y: (&mut [f64], &mut [f64]), a: Complex64, x: (&[f64], &[f64])) {
    let (yr, yi) = y;
    let (xr, xi) = x;
    for (((yr, yi), &xr), &xi) in yr.iter_mut().zip(yi.iter_mut()).zip(xr).zip(xi) {
        *yr += a.re * xr - a.im * xi;
        *yi += a.re * xi + a.im * xr;
    }
}

/// `Σ conj(a) · b` on split planes.
#[inline]
pub(crate) fn dot_conj(a: (&[f64], &[f64]), b: (&[f64], &[f64])) -> Complex64 {
    const W: usize = 4;
    let (ar, ai) = a;
    let (br, bi) = b;
    let (mut re, mut im) = ([0.0; W], [0.0; W]);
    let chunks = ar.chunks_exact(W).zip(ai.chunks_exact(W)).zip(br.chunks_exact(W)).zip(bi.chunks_exact(W));
    for (((ar, ai), br), bi) in chunks {
        for l in 0..W {
            re[l] += ar[l] * br[l] + ai[l] * bi[l];
            im[l] += ar[l] * bi[l] - ai[l] * br[l];
        }
    }
    let mut out = Complex64::new(re.iter().sum(), im.iter().sum());
    let n = ar.len() / W * W;
    for i in n..ar.len() {
        out += Complex64::new(ar[i] * br[i] + ai[i] * bi[i], ar[i] * bi[i] - ai[i] * br[i]);
    }
    out
}

// Kernel bodies. Generic over the register width `R` (columns of the
// narrow operand); `#[inline(always)]` lets each target-feature wrapper
// below compile its own vectorized copy.

#[inline(always)]
fn times_body<const R: usize>(x: &Stacked, wr: &[f64], wi: &[f64], mr: &mut [f64], mi: &mut [f64]) {
    let ld = x.ld;
    for k0 in (0..x.cols).step_by(TILE) {
        let k1 = (k0 + TILE).min(x.cols);
        for i0 in (0..ld).step_by(LANES) {
            // Narrow widths get a second accumulator set so the FMA chains
            // are long enough to hide latency.
            let mut ar = [[0.0f64; LANES]; R];
            let mut ai = [[0.0f64; LANES]; R];
            let mut br_ = [[0.0f64; LANES]; R];
            let mut bi_ = [[0.0f64; LANES]; R];
            for k in k0..k1 {
                let xr: &[f64; LANES] = x.re[k * ld + i0..k * ld + i0 + LANES].try_into().unwrap();
                let xi: &[f64; LANES] = x.im[k * ld + i0..k * ld + i0 + LANES].try_into().unwrap();
                for j in 0..R {
                    let (wre, wim) = (wr[j * x.cols + k], wi[j * x.cols + k]);
                    for l in 0..LANES {
                        if R <= 4 {
                            ar[j][l] = xr[l].mul_add(wre, ar[j][l]);
                            br_[j][l] = xi[l].mul_add(-wim, br_[j][l]);
                            ai[j][l] = xr[l].mul_add(wim, ai[j][l]);
                            bi_[j][l] = xi[l].mul_add(wre, bi_[j][l]);
                        } else {
                            ar[j][l] = xi[l].mul_add(-wim, xr[l].mul_add(wre, ar[j][l]));
                            ai[j][l] = xi[l].mul_add(wre, xr[l].mul_add(wim, ai[j][l]));
                        }
                    }
                }
            }
            for j in 0..R {
                for l in 0..LANES {
                    mr[j * ld + i0 + l] += ar[j][l] + br_[j][l];
                    mi[j * ld + i0 + l] += ai[j][l] + bi_[j][l];
                }
            }
        }
    }
}

#[inline(always)]
fn adj_body<const R: usize>(x: &Stacked, ur: &[f64], ui: &[f64], zr: &mut [f64], zi: &mut [f64]) {
    // Narrow widths take two columns per pass to share the loads of `u`.
    let step = if R <= 4 { 2 } else { 1 };
    let paired = x.cols / step * step;
    for k in (0..paired).step_by(step) {
        if step == 2 {
            adj_columns::<R, 2>(x, ur, ui, k, zr, zi);
        } else {
            adj_columns::<R, 1>(x, ur, ui, k, zr, zi);
        }
    }
    for k in paired..x.cols {
        adj_columns::<R, 1>(x, ur, ui, k, zr, zi);
    }
}

#[inline(always)]
fn adj_columns<const R: usize, const C: usize>(
    x: &Stacked,
    ur: &[f64],
    ui: &[f64],
    k0: usize,
    zr: &mut [f64],
    zi: &mut [f64],
) {
    let ld = x.ld;
    let mut ar = [[[0.0f64; LANES]; R]; C];
    let mut ai = [[[0.0f64; LANES]; R]; C];
    for i0 in (0..ld).step_by(LANES) {
        for j in 0..R {
            let vr: &[f64; LANES] = ur[j * ld + i0..j * ld + i0 + LANES].try_into().unwrap();
            let vi: &[f64; LANES] = ui[j * ld + i0..j * ld + i0 + LANES].try_into().unwrap();
            for c in 0..C {
                let k = k0 + c;
                let xr: &[f64; LANES] = x.re[k * ld + i0..k * ld + i0 + LANES].try_into().unwrap();
                let xi: &[f64; LANES] = x.im[k * ld + i0..k * ld + i0 + LANES].try_into().unwrap();
                for l in 0..LANES {
                    // conj(x) * u
                    ar[c][j][l] = xi[l].mul_add(vi[l], xr[l].mul_add(vr[l], ar[c][j][l]));
                    ai[c][j][l] = xi[l].mul_add(-vr[l], xr[l].mul_add(vi[l], ai[c][j][l]));
                }
            }
        }
    }
    for c in 0..C {
        for j in 0..R {
            zr[(k0 + c) * R + j] = lane_sum(&ar[c][j]);
            zi[(k0 + c) * R + j] = lane_sum(&ai[c][j]);
        }
    }
}

#[inline(always)]
fn lane_sum(a: &[f64; LANES]) -> f64 {
    let h: [f64; 4] = std::array::from_fn(|l| a[l] + a[l + 4]);
    (h[0] + h[2]) + (h[1] + h[3])
}

fn times_generic(x: &Stacked, wr: &[f64], wi: &[f64], r: usize, mr: &mut [f64], mi: &mut [f64]) {
    let ld = x.ld;
    for k in 0..x.cols {
        for j in 0..r {
            let (br, bi) = (wr[j * x.cols + k], wi[j * x.cols + k]);
            for i in 0..ld {
                let (xr, xi) = (x.re[k * ld + i], x.im[k * ld + i]);
                mr[j * ld + i] += xr * br - xi * bi;
                mi[j * ld + i] += xr * bi + xi * br;
            }
        }
    }
}

fn adj_generic(x: &Stacked, ur: &[f64], ui: &[f64], r: usize, zr: &mut [f64], zi: &mut [f64]) {
    let ld = x.ld;
    for k in 0..x.cols {
        for j in 0..r {
            let (mut sr, mut si) = (0.0, 0.0);
            for i in 0..ld {
                let (xr, xi) = (x.re[k * ld + i], x.im[k * ld + i]);
                let (vr, vi) = (ur[j * ld + i], ui[j * ld + i]);
                sr += xr * vr + xi * vi;
                si += xr * vi - xi * vr;
            }
            zr[k * r + j] = sr;
            zi[k * r + j] = si;
        }
    }
}

macro_rules! by_width {
    ($r:expr, $body:ident, $($arg:expr),*) => {
        match $r {
            1 => $body::<1>($($arg),*),
            2 => $body::<2>($($arg),*),
            3 => $body::<3>($($arg),*),
            4 => $body::<4>($($arg),*),
            5 => $body::<5>($($arg),*),
            6 => $body::<6>($($arg),*),
            7 => $body::<7>($($arg),*),
            8 => $body::<8>($($arg),*),
            _ => unreachable!(),
        }
    };
}

macro_rules! kernel_variants {
    ($name:ident, $body:ident) => {
        mod $name {
            use super::*;

            pub fn portable(x: &Stacked, a: &[f64], b: &[f64], r: usize, c: &mut [f64], d: &mut [f64]) {
                by_width!(r, $body, x, a, b, c, d)
            }

            #[cfg(target_arch = "x86_64")]
            #[target_feature(enable = "avx2,fma")]
            pub unsafe fn avx2(x: &Stacked, a: &[f64], b: &[f64], r: usize, c: &mut [f64], d: &mut [f64]) {
                by_width!(r, $body, x, a, b, c, d)
            }

            #[cfg(target_arch = "x86_64")]
            #[target_feature(enable = "avx512f,avx2,fma")]
            pub unsafe fn avx512(x: &Stacked, a: &[f64], b: &[f64], r: usize, c: &mut [f64], d: &mut [f64]) {
                by_width!(r, $body, x, a, b, c, d)
            }
        }
    };
}

kernel_variants!(times_k, times_body);
kernel_variants!(adj_k, adj_body);

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Isa {
    Portable,
    #[cfg(target_arch = "x86_64")]
    Avx2,
    #[cfg(target_arch = "x86_64")]
    Avx512,
}

fn isa() -> Isa {
    #[cfg(target_arch = "x86_64")]
    {
        static ISA: std::sync::OnceLock<Isa> = std::sync::OnceLock::new();
        *ISA.get_or_init(|| {
            if is_x86_feature_detected!("avx512f") && is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma") {
                Isa::Avx512
            } else if is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma") {
                Isa::Avx2
            } else {
                Isa::Portable
            }
        })
    }
    #[cfg(not(target_arch = "x86_64"))]
    Isa::Portable
}

fn dispatch_times(x: &Stacked, wr: &[f64], wi: &[f64], r: usize, mr: &mut [f64], mi: &mut [f64]) {
    if r > MAX_FAST_R {
        return times_generic(x, wr, wi, r, mr, mi);
    }
    match isa() {
        Isa::Portable => times_k::portable(x, wr, wi, r, mr, mi),
        // SAFETY: the features were detected at runtime.
        #[cfg(target_arch = "x86_64")]
        Isa::Avx2 => unsafe { times_k::avx2(x, wr, wi, r, mr, mi) },
        #[cfg(target_arch = "x86_64")]
        Isa::Avx512 => unsafe { times_k::avx512(x, wr, wi, r, mr, mi) },
    }
}

fn dispatch_adj(x: &Stacked, ur: &[f64], ui: &[f64], r: usize, zr: &mut [f64], zi: &mut [f64]) {
    if r > MAX_FAST_R {
        return adj_generic(x, ur, ui, r, zr, zi);
    }
    match isa() {
        Isa::Portable => adj_k::portable(x, ur, ui, r, zr, zi),
        // SAFETY: the features were detected at runtime.
        #[cfg(target_arch = "x86_64")]
        Isa::Avx2 => unsafe { adj_k::avx2(x, ur, ui, r, zr, zi) },
        #[cfg(target_arch = "x86_64")]
        Isa::Avx512 => unsafe { adj_k::avx512(x, ur, ui, r, zr, zi) },
    }
}
