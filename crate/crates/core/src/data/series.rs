use crate::error::{Error, Result};
use crate::tensor::{Dims, Tensor3};

/// Ordered sequence of real tensors sharing one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSeries {
    dims: Dims,
    slices: Vec<Tensor3>,
    labels: Option<Vec<String>>,
}

impl TensorSeries {
    pub fn new(slices: Vec<Tensor3>) -> Result<Self> {
        let first = slices.first().ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
        let dims = first.dims();
        for (t, s) in slices.iter().enumerate() {
            dims.check_same(&s.dims())?;
            if !s.is_real() {
                return Err(Error::InvalidDims(format!("slice {t} is not real")));
            }
        }
        Ok(TensorSeries { dims, slices, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.slices.len() {
            return Err(Error::DimensionMismatch {
                axis: crate::error::Axis::Length,
                left: self.slices.len(),
                right: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn slices(&self) -> &[Tensor3] {
        &self.slices
    }

    pub fn get(&self, t: usize) -> &Tensor3 {
        &self.slices[t]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn into_slices(self) -> Vec<Tensor3> {
        self.slices
    }

    /// Contiguous sub-series `range`, keeping the matching labels.
    pub fn window(&self, range: std::ops::Range<usize>) -> Result<TensorSeries> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::InvalidConfig(format!(
                "window {}..{} outside series of length {}",
                range.start,
                range.end,
                self.len()
            )));
        }
        Ok(TensorSeries {
            dims: self.dims,
            slices: self.slices[range.clone()].to_vec(),
            labels: self.labels.as_ref().map(|l| l[range].to_vec()),
        })
    }

    pub fn all_finite(&self) -> bool {
        self.slices.iter().all(Tensor3::all_finite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Split {
    Count(usize),
    Fraction(f64),
}

/// Splits into a training prefix and a test suffix.
pub fn split(series: &TensorSeries, at: Split) -> Result<(TensorSeries, TensorSeries)> {
    let len = series.len();
    let count = match at {
        Split::Count(c) => c,
        Split::Fraction(f) if f.is_finite() && f > 0.0 && f < 1.0 => (f * len as f64).round() as usize,
        Split::Fraction(f) => {
            return Err(Error::InvalidConfig(format!("train fraction {f} outside (0, 1)")))
        }
    };
    if count < 1 || count >= len {
        return Err(Error::InvalidConfig(format!(
            "train count {count} must lie in 1..{len}"
        )));
    }
    Ok((series.window(0..count)?, series.window(count..len)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(len: usize) -> TensorSeries {
        let d = Dims::new(2, 1, 1).unwrap();
        TensorSeries::new(
            (0..len).map(|t| Tensor3::from_real(d, vec![t as f64, -(t as f64)]).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn split_examples() {
        let s = series(1000);
        let (a, b) = split(&s, Split::Count(80)).unwrap();
        assert_eq!((a.len(), b.len()), (80, 920));
        let (a, b) = split(&s, Split::Count(999)).unwrap();
        assert_eq!((a.len(), b.len()), (999, 1));
        let (a, b) = split(&series(10), Split::Fraction(0.5)).unwrap();
        assert_eq!((a.len(), b.len()), (5, 5));
    }

    #[test]
    fn split_concatenation_restores_series() {
        let s = series(17).with_labels((0..17).map(|t| format!("t{t}")).collect()).unwrap();
        let (a, b) = split(&s, Split::Count(6)).unwrap();
        let mut joined = a.slices().to_vec();
        joined.extend_from_slice(b.slices());
        let mut labels = a.labels().unwrap().to_vec();
        labels.extend_from_slice(b.labels().unwrap());
        assert_eq!(TensorSeries::new(joined).unwrap().with_labels(labels).unwrap(), s);
    }

    #[test]
    fn split_out_of_range() {
        let s = series(5);
        assert!(split(&s, Split::Count(0)).is_err());
        assert!(split(&s, Split::Count(5)).is_err());
        assert!(split(&s, Split::Fraction(1.0)).is_err());
    }

    #[test]
    fn rejects_mixed_dims_and_complex() {
        let a = Tensor3::zeros(Dims::new(2, 2, 2).unwrap());
        let b = Tensor3::zeros(Dims::new(2, 2, 3).unwrap());
        assert!(TensorSeries::new(vec![a.clone(), b]).is_err());
        let c = Tensor3::from_complex(a.dims(), &a.to_complex_vec()).unwrap();
        assert!(TensorSeries::new(vec![c]).is_err());
        assert!(TensorSeries::new(vec![]).is_err());
    }
}
