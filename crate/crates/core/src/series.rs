//! The p x T observation panel.

use crate::error::{Error, Result};

/// A p-dimensional series of length T; column t is the observation vector
/// at time t. Stored row-major so each component series is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMatrix {
    p: usize,
    t_len: usize,
    values: Vec<f64>,
}

impl SeriesMatrix {
    /// Build a panel from row-major values (`values[i * t_len + t]`).
    /// Every entry must be finite.
    pub fn new(p: usize, t_len: usize, values: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidDimension);
        }
        if t_len == 0 {
            return Err(Error::EmptySample);
        }
        if values.len() != p * t_len {
            return Err(Error::LengthMismatch {
                expected: p * t_len,
                found: values.len(),
            });
        }
        for (idx, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    series: idx / t_len,
                    time: idx % t_len,
                });
            }
        }
        Ok(Self { p, t_len, values })
    }

    /// All-zero panel of the given shape.
    pub fn zeros(p: usize, t_len: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidDimension);
        }
        if t_len == 0 {
            return Err(Error::EmptySample);
        }
        Ok(Self {
            p,
            t_len,
            values: vec![0.0; p * t_len],
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    /// Component series i as a slice over t = 0..T (0-based storage).
    pub fn series(&self, i: usize) -> &[f64] {
        &self.values[i * self.t_len..(i + 1) * self.t_len]
    }

    pub fn series_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.t_len..(i + 1) * self.t_len]
    }

    /// Entry (series i, time t), both 0-based.
    pub fn get(&self, i: usize, t: usize) -> f64 {
        self.values[i * self.t_len + t]
    }

    pub fn set(&mut self, i: usize, t: usize, v: f64) {
        self.values[i * self.t_len + t] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Subtract each series' sample mean.
    pub fn demean(&mut self) {
        for i in 0..self.p {
            let row = self.series_mut(i);
            let mean = row.iter().sum::<f64>() / row.len() as f64;
            for v in row.iter_mut() {
                *v -= mean;
            }
        }
    }

    /// Divide each series by its sample standard deviation (population
    /// convention, computed around the series mean). Errors if some series
    /// is constant.
    pub fn scale_unit_sd(&mut self) -> Result<()> {
        for i in 0..self.p {
            let row = self.series(i);
            let n = row.len() as f64;
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            if var <= 0.0 {
                return Err(Error::ZeroVariance(i));
            }
            let sd = var.sqrt();
            for v in self.series_mut(i) {
                *v /= sd;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert_eq!(SeriesMatrix::new(0, 3, vec![]), Err(Error::InvalidDimension));
        assert_eq!(SeriesMatrix::new(2, 0, vec![]), Err(Error::EmptySample));
        assert!(matches!(
            SeriesMatrix::new(2, 2, vec![1.0; 3]),
            Err(Error::LengthMismatch { .. })
        ));
        let err = SeriesMatrix::new(2, 2, vec![0.0, 1.0, f64::NAN, 2.0]).unwrap_err();
        assert_eq!(err, Error::NonFinite { series: 1, time: 0 });
    }

    #[test]
    fn demean_and_scale() {
        let mut x = SeriesMatrix::new(1, 4, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        x.demean();
        assert!(x.series(0).iter().sum::<f64>().abs() < 1e-12);
        x.scale_unit_sd().unwrap();
        let var: f64 = x.series(0).iter().map(|v| v * v).sum::<f64>() / 4.0;
        assert!((var - 1.0).abs() < 1e-12);

        let mut flat = SeriesMatrix::new(1, 3, vec![2.0, 2.0, 2.0]).unwrap();
        assert_eq!(flat.scale_unit_sd(), Err(Error::ZeroVariance(0)));
    }
}
