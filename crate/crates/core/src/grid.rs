use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform periodic grid `x_i = -L + i h`, `h = 2L/N`, on `[-L, L)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    half_width: f64,
    len: usize,
}

impl Grid {
    pub fn new(half_width: f64, len: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width must be positive, got {half_width}")));
        }
        if len < 16 || len % 2 != 0 {
            return Err(Error::InvalidGrid(format!("node count must be even and >= 16, got {len}")));
        }
        Ok(Grid { half_width, len })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.len as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.node(i)).collect()
    }

    /// Index of the node at `x = 0`.
    pub fn origin_index(&self) -> usize {
        self.len / 2
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.len as i64;
        let dk = PI / self.half_width;
        (0..n)
            .map(|j| {
                let jj = if j <= n / 2 { j } else { j - n };
                jj as f64 * dk
            })
            .collect()
    }

    /// Wavenumber index that holds the Nyquist mode.
    pub fn nyquist_index(&self) -> usize {
        self.len / 2
    }
}
