//! Gauge reduction: `C⁻¹ H C = H̃ = iα∂ + Ṽ` with off-diagonal `Ṽ`, and the squared
//! operator `(H̃ - ω)(H̃ + ω) = -∂² + V_sq - (ω² - m²)`.

use num_complex::Complex64 as C64;

use crate::dirac::apply_dirac;
use crate::error::Result;
use crate::field::{Mat2, SpinorField};
use crate::fourier;
use crate::grid::Grid;
use crate::potential::MatrixPotential;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Debug)]
pub struct GaugeData {
    /// Diagonal unimodular gauge matrix per node.
    pub c: Vec<Mat2>,
    /// Cumulative `∫_{-L}^{x} V₁₁` and `∫_{-L}^{x} V₂₂` (the lower limit stands in for `-∞`).
    pub phase_integrals: (Vec<f64>, Vec<f64>),
    /// Off-diagonal `Ṽ` with its derivative.
    pub tilde: MatrixPotential,
    pub squared: MatrixPotential,
}

/// `∫_{-L}^{x_i} v` computed spectrally: mean part integrated exactly, the periodic
/// remainder through the Fourier antiderivative. Consistent with the spectral derivative.
fn cumulative_integral(values: &[f64], grid: &Grid) -> Vec<f64> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<C64> = values.iter().map(|v| C64::new(v - mean, 0.0)).collect();
    fourier::forward(&mut buf);
    let ks = grid.wavenumbers();
    for (j, b) in buf.iter_mut().enumerate() {
        if j == 0 || j == grid.nyquist_index() {
            *b = C64::default();
        } else {
            *b /= I * ks[j];
        }
    }
    fourier::inverse(&mut buf);
    let p0 = buf[0].re;
    grid.nodes().iter().zip(&buf).map(|(x, p)| mean * (x + grid.half_width()) + p.re - p0).collect()
}

impl GaugeData {
    pub fn new(v: &MatrixPotential, m: f64) -> Self {
        let grid = *v.grid();
        let d11: Vec<f64> = v.entries().iter().map(|e| e[(0, 0)].re).collect();
        let d22: Vec<f64> = v.entries().iter().map(|e| e[(1, 1)].re).collect();
        let p11 = cumulative_integral(&d11, &grid);
        let p22 = cumulative_integral(&d22, &grid);
        let z = C64::default();
        let mut c = Vec::with_capacity(grid.len());
        let mut tilde = Vec::with_capacity(grid.len());
        let mut tilde_d = Vec::with_capacity(grid.len());
        let mut squared = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            c.push(Mat2::new((-I * p11[i]).exp(), z, z, (I * p22[i]).exp()));
            let phase = (I * (p11[i] + p22[i])).exp();
            let v12 = v.at(i)[(0, 1)];
            let t12 = phase * (v12 + m);
            // product rule: the phase need not be periodic on the grid
            let dt12 = phase * (I * (d11[i] + d22[i]) * (v12 + m) + v.derivative()[i][(0, 1)]);
            tilde.push(Mat2::new(z, t12, t12.conj(), z));
            tilde_d.push(Mat2::new(z, dt12, dt12.conj(), z));
            let diag = C64::new(2.0 * m * v12.re + v12.norm_sqr(), 0.0);
            squared.push(Mat2::new(diag, -I * dt12, I * dt12.conj(), diag));
        }
        let rate = v.decay_rate();
        GaugeData {
            c,
            phase_integrals: (p11, p22),
            tilde: MatrixPotential::from_parts(grid, tilde, tilde_d, rate),
            squared: MatrixPotential::from_parts(grid, squared, vec![Mat2::zeros(); grid.len()], rate),
        }
    }

    pub fn conjugate(&self, f: &SpinorField) -> SpinorField {
        f.apply_matrices(&self.c)
    }

    /// `C⁻¹ f`; `C` is diagonal unitary.
    pub fn conjugate_inverse(&self, f: &SpinorField) -> SpinorField {
        f.map_points(|i, u| self.c[i].adjoint() * u)
    }

    /// `H̃ f = iα f' + Ṽ f`.
    pub fn apply_tilde(&self, f: &SpinorField) -> SpinorField {
        let d = f.derivative();
        f.map_points(|i, u| {
            let du = d.at(i);
            let mut o = self.tilde.at(i) * u;
            o[0] += -I * du[0];
            o[1] += I * du[1];
            o
        })
    }

    /// `(-∂² + V_sq) f`.
    pub fn apply_squared(&self, f: &SpinorField) -> SpinorField {
        let lap = f.derivative().derivative();
        f.map_points(|i, u| self.squared.at(i) * u - lap.at(i))
    }
}

pub fn gauge_matrix(v: &MatrixPotential) -> Vec<Mat2> {
    GaugeData::new(v, 0.0).c
}

pub fn tilde_potential(v: &MatrixPotential, m: f64) -> MatrixPotential {
    GaugeData::new(v, m).tilde
}

pub fn squared_potential(v: &MatrixPotential, m: f64) -> MatrixPotential {
    GaugeData::new(v, m).squared
}

/// `||(H̃-ω)(H̃+ω)f - (-∂² + V_sq - (ω²-m²))f|| / ||f||`.
pub fn verify_factorization(v: &MatrixPotential, m: f64, omega: C64, f: &SpinorField) -> Result<f64> {
    f.same_grid(&SpinorField::zeros(*v.grid()))?;
    let g = GaugeData::new(v, m);
    let plus = &g.apply_tilde(f) + &f.scale(omega);
    let lhs = &g.apply_tilde(&plus) - &plus.scale(omega);
    let rhs = &g.apply_squared(f) - &f.scale(omega * omega - m * m);
    Ok(lhs.distance(&rhs) / f.norm())
}

/// `||C⁻¹ H (C f) - H̃ f|| / ||f||`.
pub fn gauge_conjugation_check(v: &MatrixPotential, m: f64, f: &SpinorField) -> Result<f64> {
    let g = GaugeData::new(v, m);
    let lhs = g.conjugate_inverse(&apply_dirac(&g.conjugate(f), v, m)?);
    Ok(lhs.distance(&g.apply_tilde(f)) / f.norm())
}
