use crate::error::{Error, Result};

/// Dense `channels x time` matrix of `f64`, stored row-major (one row per channel).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2D {
    channels: usize,
    time: usize,
    values: Vec<f64>,
}

impl Tensor2D {
    pub fn new(channels: usize, time: usize, values: Vec<f64>) -> Result<Self> {
        if channels == 0 || time == 0 {
            return Err(Error::shape(
                "tensor",
                format!("dimensions must be positive, got {channels}x{time}"),
            ));
        }
        if values.len() != channels * time {
            return Err(Error::shape(
                "tensor",
                format!(
                    "{} values do not fill a {channels}x{time} tensor",
                    values.len()
                ),
            ));
        }
        Ok(Tensor2D {
            channels,
            time,
            values,
        })
    }

    pub fn zeros(channels: usize, time: usize) -> Self {
        Self::filled(channels, time, 0.0)
    }

    pub fn filled(channels: usize, time: usize, value: f64) -> Self {
        assert!(
            channels > 0 && time > 0,
            "tensor dimensions must be positive"
        );
        Tensor2D {
            channels,
            time,
            values: vec![value; channels * time],
        }
    }

    /// Builds a tensor from per-channel rows of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let channels = rows.len();
        let time = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != time) {
            return Err(Error::shape("tensor", "rows have unequal lengths"));
        }
        Self::new(channels, time, rows.concat())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.channels, self.time)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row(&self, channel: usize) -> &[f64] {
        &self.values[channel * self.time..(channel + 1) * self.time]
    }

    pub fn row_mut(&mut self, channel: usize) -> &mut [f64] {
        &mut self.values[channel * self.time..(channel + 1) * self.time]
    }

    pub fn get(&self, channel: usize, t: usize) -> f64 {
        self.values[channel * self.time + t]
    }

    pub fn set(&mut self, channel: usize, t: usize, value: f64) {
        self.values[channel * self.time + t] = value;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor2D {
        Tensor2D {
            channels: self.channels,
            time: self.time,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Returns a copy restricted to time steps `[start, start + len)`, padding with zeros past the end.
    pub fn window(&self, start: usize, len: usize) -> Tensor2D {
        let mut out = Tensor2D::zeros(self.channels, len);
        for c in 0..self.channels {
            let src = self.row(c);
            let take = src.len().saturating_sub(start).min(len);
            out.row_mut(c)[..take].copy_from_slice(&src[start..start + take]);
        }
        out
    }

    pub(crate) fn same_shape(&self, other: &Tensor2D) -> bool {
        self.shape() == other.shape()
    }
}
