//! FFT helpers: planner cache, spectral derivative, Toeplitz products.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Unnormalized forward DFT in place.
pub fn forward(buf: &mut [C64]) {
    plan(buf.len(), false).process(buf);
}

/// Inverse DFT in place, normalized by `1/len`.
pub fn inverse(buf: &mut [C64]) {
    let n = buf.len();
    plan(n, true).process(buf);
    let s = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= s;
    }
}

/// Multiply by a Fourier symbol given in FFT order.
pub fn apply_multiplier(values: &[C64], symbol: &[C64]) -> Vec<C64> {
    let mut buf = values.to_vec();
    forward(&mut buf);
    for (b, s) in buf.iter_mut().zip(symbol) {
        *b *= s;
    }
    inverse(&mut buf);
    buf
}

/// Symbol of `d/dx` with the Nyquist mode dropped, so the matrix stays skew-Hermitian.
pub fn derivative_symbol(grid: &Grid) -> Vec<C64> {
    let mut s: Vec<C64> = grid.wavenumbers().into_iter().map(|k| C64::new(0.0, k)).collect();
    s[grid.nyquist_index()] = C64::new(0.0, 0.0);
    s
}

pub fn derivative(values: &[C64], grid: &Grid) -> Vec<C64> {
    apply_multiplier(values, &derivative_symbol(grid))
}

/// Discrete Toeplitz operator `out_i = sum_j c(i - j) g_j`, applied by zero-padded FFT.
#[derive(Clone, Debug)]
pub struct Toeplitz {
    n: usize,
    spectrum: Vec<C64>,
}

impl Toeplitz {
    /// `coeff(d)` is evaluated for every offset `d` in `-(n-1)..=(n-1)`.
    pub fn new(n: usize, coeff: impl Fn(i64) -> C64) -> Self {
        let m = (2 * n).next_power_of_two();
        let mut spectrum = vec![C64::new(0.0, 0.0); m];
        for d in -(n as i64 - 1)..=(n as i64 - 1) {
            spectrum[d.rem_euclid(m as i64) as usize] = coeff(d);
        }
        forward(&mut spectrum);
        Toeplitz { n, spectrum }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn apply(&self, g: &[C64]) -> Vec<C64> {
        let m = self.spectrum.len();
        let mut buf = vec![C64::new(0.0, 0.0); m];
        buf[..self.n].copy_from_slice(&g[..self.n]);
        forward(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        inverse(&mut buf);
        buf.truncate(self.n);
        buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_plane_wave() {
        let g = Grid::new(10.0, 64).unwrap();
        let k0 = 5.0 * std::f64::consts::PI / 10.0;
        let f: Vec<C64> = g.nodes().iter().map(|&x| C64::new(0.0, k0 * x).exp()).collect();
        let d = derivative(&f, &g);
        for (a, b) in d.iter().zip(&f) {
            assert!((a - C64::new(0.0, k0) * b).norm() < 1e-10);
        }
    }

    #[test]
    fn toeplitz_matches_direct_sum() {
        let n = 37;
        let c = |d: i64| C64::new((d as f64 * 0.3).sin(), 1.0 / (1.0 + d.abs() as f64));
        let g: Vec<C64> = (0..n).map(|i| C64::new(i as f64 * 0.1, -(i as f64).cos())).collect();
        let t = Toeplitz::new(n, c);
        let out = t.apply(&g);
        for i in 0..n {
            let direct: C64 = (0..n).map(|j| c(i as i64 - j as i64) * g[j]).sum();
            assert!((out[i] - direct).norm() < 1e-12);
        }
    }
}
