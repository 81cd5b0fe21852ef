use crate::tensor::CMat;

/// `Re tr(a^H b)`.
pub(crate) fn re_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}
