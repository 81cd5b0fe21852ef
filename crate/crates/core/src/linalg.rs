//! Small dense complex linear-algebra helpers. Storage is nalgebra; SVDs
//! run through faer.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::tensor::CMat;

/// Thin SVD `a = u * diag(s) * v^H` with singular values in nonincreasing
/// order. Each left singular vector is rotated so that its largest-magnitude
/// entry is real and nonnegative; the matching right vector absorbs the same
/// phase, so the product is unchanged.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

pub fn svd(a: &CMat) -> Svd {
    let (m, n) = a.shape();
    if m.min(n) == 0 {
        return Svd { u: CMat::zeros(m, 0), s: vec![], v: CMat::zeros(n, 0) };
    }
    let fa = faer::Mat::<Complex64>::from_fn(m, n, |i, j| a[(i, j)]);
    let dec = fa.thin_svd().expect("svd did not converge");
    let k = m.min(n);
    let (fu, fv, fs) = (dec.U(), dec.V(), dec.S().column_vector());
    let u = CMat::from_fn(m, k, |i, j| fu[(i, j)]);
    let v = CMat::from_fn(n, k, |i, j| fv[(i, j)]);
    let s: Vec<f64> = (0..k).map(|i| fs[i].re).collect();
    normalize(u, &s, v)
}

/// Same contract as [`svd`] for a matrix known to be real: the factorization
/// runs in real arithmetic, so the returned vectors have exactly zero
/// imaginary parts.
pub fn svd_of_real(a: &CMat) -> Svd {
    let (m, n) = a.shape();
    if m.min(n) == 0 {
        return Svd { u: CMat::zeros(m, 0), s: vec![], v: CMat::zeros(n, 0) };
    }
    let fa = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)].re);
    let dec = fa.thin_svd().expect("svd did not converge");
    let k = m.min(n);
    let (fu, fv, fs) = (dec.U(), dec.V(), dec.S().column_vector());
    let u = CMat::from_fn(m, k, |i, j| Complex64::new(fu[(i, j)], 0.0));
    let v = CMat::from_fn(n, k, |i, j| Complex64::new(fv[(i, j)], 0.0));
    let s: Vec<f64> = (0..k).map(|i| fs[i]).collect();
    normalize(u, &s, v)
}

fn normalize(u_raw: CMat, s_raw: &[f64], v_raw: CMat) -> Svd {
    let k = s_raw.len();
    let mut order: Vec<usize> = (0..k).collect();
    // stable sort keeps the solver's order inside tied blocks
    order.sort_by(|&x, &y| s_raw[y].total_cmp(&s_raw[x]));

    let mut u = CMat::zeros(u_raw.nrows(), k);
    let mut v = CMat::zeros(v_raw.nrows(), k);
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let ucol = u_raw.column(src);
        let pivot = ucol
            .iter()
            .enumerate()
            .fold((0usize, -1.0f64), |best, (i, z)| {
                let mag = z.norm();
                if mag > best.1 { (i, mag) } else { best }
            })
            .0;
        let p = ucol[pivot];
        let phase = if p.norm() > 0.0 { p.conj() / p.norm() } else { Complex64::new(1.0, 0.0) };
        u.column_mut(dst).copy_from(&(ucol * phase));
        v.column_mut(dst).copy_from(&(v_raw.column(src) * phase));
        s.push(s_raw[src]);
    }
    Svd { u, s, v }
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    let (m, n) = a.shape();
    if m.min(n) == 0 {
        return vec![];
    }
    let fa = faer::Mat::<Complex64>::from_fn(m, n, |i, j| a[(i, j)]);
    let mut s: Vec<f64> = fa.singular_values().expect("svd did not converge");
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn singular_values_real(a: &DMatrix<f64>) -> Vec<f64> {
    let (m, n) = a.shape();
    if m.min(n) == 0 {
        return vec![];
    }
    let fa = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)]);
    let mut s: Vec<f64> = fa.singular_values().expect("svd did not converge");
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Polar factor of a tall matrix: the closest matrix with orthonormal
/// columns, `L * R^H` for the thin SVD `m = L Σ R^H`. The second value is
/// true when `m` was numerically rank-deficient; the null directions are
/// then filled with an arbitrary orthonormal completion.
pub fn polar_factor(m: &CMat) -> (CMat, bool) {
    polar_factor_in(m, false)
}

/// [`polar_factor`] with the option of treating `m` as real, in which case
/// the factor is computed in real arithmetic and is exactly real.
pub fn polar_factor_in(m: &CMat, real: bool) -> (CMat, bool) {
    let (rows, cols) = m.shape();
    assert!(rows >= cols, "polar factor needs a tall matrix");
    let dec = if real { svd_of_real(m) } else { svd(m) };
    let smax = dec.s.first().copied().unwrap_or(0.0);
    let cutoff = smax * f64::EPSILON * rows as f64;
    let degenerate = smax == 0.0 || dec.s.iter().any(|&x| x <= cutoff);
    let q = &dec.u * dec.v.adjoint();
    if degenerate || orthonormality_defect(&q) > 1e-10 {
        (complete_orthonormal(&q), degenerate)
    } else {
        (q, false)
    }
}

/// `‖Q^H Q − I‖_F`.
pub fn orthonormality_defect(q: &CMat) -> f64 {
    let g = q.adjoint() * q;
    (g - CMat::identity(q.ncols(), q.ncols())).norm()
}

/// Orthonormal basis of the column space via Householder QR (thin `Q`).
pub fn orthonormalize_columns(a: &CMat) -> CMat {
    let q = a.clone().qr().q();
    if orthonormality_defect(&q) > 1e-10 {
        complete_orthonormal(&q)
    } else {
        q
    }
}

/// Orthonormalizes the columns of every Fourier slice. With `real` set the
/// slices are assumed conjugate-symmetric: only the independent half is
/// factored, self-conjugate slices in real arithmetic, and the rest is
/// mirrored so that the inverse transform is exactly real.
pub fn orthonormalize_fourier_slices(slices: &[CMat], real: bool) -> Vec<CMat> {
    let n3 = slices.len();
    crate::tensor::map_fourier_slices(
        n3,
        real,
        |k| {
            if real && crate::tensor::is_self_conjugate(k, n3) {
                let re = slices[k].map(|z| Complex64::new(z.re, 0.0));
                orthonormalize_columns(&re).map(|z| Complex64::new(z.re, 0.0))
            } else {
                orthonormalize_columns(&slices[k])
            }
        },
        crate::tensor::conj_mat,
    )
}

/// Modified Gram-Schmidt over the columns of `a`; columns that collapse are
/// replaced by standard basis vectors orthogonalized against the rest.
pub fn complete_orthonormal(a: &CMat) -> CMat {
    let (rows, cols) = a.shape();
    let mut q = CMat::zeros(rows, cols);
    let mut next_basis = 0usize;
    for j in 0..cols {
        let original = a.column(j).into_owned();
        let floor = 1e-8 * original.norm().max(1.0);
        let mut col = original;
        loop {
            for _ in 0..2 {
                for p in 0..j {
                    let qp = q.column(p);
                    let proj = qp.dotc(&col);
                    col -= qp * proj;
                }
            }
            let nrm = col.norm();
            if nrm > floor {
                q.column_mut(j).copy_from(&(col / Complex64::new(nrm, 0.0)));
                break;
            }
            assert!(next_basis < rows, "cannot fit {cols} orthonormal columns in dimension {rows}");
            col = nalgebra::DVector::zeros(rows);
            col[next_basis] = Complex64::new(1.0, 0.0);
            next_basis += 1;
        }
    }
    q
}

/// Number of singular values at or above `threshold`.
pub fn count_at_least(s: &[f64], threshold: f64) -> usize {
    s.iter().filter(|&&x| x >= threshold && x > 0.0).count()
}
