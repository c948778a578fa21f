use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fourier;
use crate::grid::Grid;

pub type Spinor = Vector2<C64>;
pub type Mat2 = Matrix2<C64>;

/// Japanese bracket `<x> = sqrt(1 + x^2)`.
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Two-component complex field sampled on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    grid: Grid,
    comp: [Vec<C64>; 2],
}

impl SpinorField {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        SpinorField { grid, comp: [vec![C64::default(); n], vec![C64::default(); n]] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> [C64; 2]) -> Self {
        let (mut a, mut b) = (Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len()));
        for x in grid.nodes() {
            let [u, v] = f(x);
            a.push(u);
            b.push(v);
        }
        SpinorField { grid, comp: [a, b] }
    }

    pub fn from_components(grid: Grid, up: Vec<C64>, down: Vec<C64>) -> Result<Self> {
        if up.len() != grid.len() || down.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "component lengths {}/{} do not match grid size {}",
                up.len(),
                down.len(),
                grid.len()
            )));
        }
        Ok(SpinorField { grid, comp: [up, down] })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn component(&self, c: usize) -> &[C64] {
        &self.comp[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [C64] {
        &mut self.comp[c]
    }

    pub fn into_components(self) -> [Vec<C64>; 2] {
        self.comp
    }

    pub fn at(&self, i: usize) -> Spinor {
        Spinor::new(self.comp[0][i], self.comp[1][i])
    }

    pub fn set(&mut self, i: usize, v: Spinor) {
        self.comp[0][i] = v[0];
        self.comp[1][i] = v[1];
    }

    pub fn same_grid(&self, other: &SpinorField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `<self, other> = h sum conj(self) . other`.
    pub fn inner(&self, other: &SpinorField) -> Result<C64> {
        self.same_grid(other)?;
        let mut s = C64::default();
        for c in 0..2 {
            for (a, b) in self.comp[c].iter().zip(&other.comp[c]) {
                s += a.conj() * b;
            }
        }
        Ok(s * self.grid.spacing())
    }

    pub fn norm_sqr(&self) -> f64 {
        let s: f64 = self.comp.iter().flat_map(|v| v.iter()).map(|z| z.norm_sqr()).sum();
        s * self.grid.spacing()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        (0..self.len()).map(|i| self.at(i).norm()).fold(0.0, f64::max)
    }

    /// Multiply by `<x>^sigma` pointwise.
    pub fn weighted(&self, sigma: f64) -> SpinorField {
        let w: Vec<f64> = self.grid.nodes().into_iter().map(|x| bracket(x).powf(sigma)).collect();
        let mut out = self.clone();
        for c in 0..2 {
            for (v, wi) in out.comp[c].iter_mut().zip(&w) {
                *v *= wi;
            }
        }
        out
    }

    /// `|| <x>^sigma <D>^s u ||_{L^2}`.
    pub fn weighted_norm(&self, sigma: f64, s: f64) -> f64 {
        let base = if s == 0.0 {
            self.clone()
        } else {
            let sym: Vec<C64> = self
                .grid
                .wavenumbers()
                .into_iter()
                .map(|k| C64::new(bracket(k).powf(s), 0.0))
                .collect();
            self.map_components(|v| fourier::apply_multiplier(v, &sym))
        };
        if sigma == 0.0 {
            base.norm()
        } else {
            base.weighted(sigma).norm()
        }
    }

    pub fn map_components(&self, f: impl Fn(&[C64]) -> Vec<C64>) -> SpinorField {
        SpinorField { grid: self.grid, comp: [f(&self.comp[0]), f(&self.comp[1])] }
    }

    pub fn map_points(&self, f: impl Fn(usize, Spinor) -> Spinor) -> SpinorField {
        let mut out = SpinorField::zeros(self.grid);
        for i in 0..self.len() {
            out.set(i, f(i, self.at(i)));
        }
        out
    }

    /// Pointwise multiplication by a matrix field.
    pub fn apply_matrices(&self, mats: &[Mat2]) -> SpinorField {
        self.map_points(|i, v| mats[i] * v)
    }

    /// Spectral derivative of both components.
    pub fn derivative(&self) -> SpinorField {
        let sym = fourier::derivative_symbol(&self.grid);
        self.map_components(|v| fourier::apply_multiplier(v, &sym))
    }

    pub fn scale(&self, a: C64) -> SpinorField {
        self.map_components(|v| v.iter().map(|z| z * a).collect())
    }

    pub fn axpy(&mut self, a: C64, x: &SpinorField) {
        assert_eq!(self.grid, x.grid, "axpy on mismatched grids");
        for c in 0..2 {
            for (y, xv) in self.comp[c].iter_mut().zip(&x.comp[c]) {
                *y += a * xv;
            }
        }
    }

    pub fn distance(&self, other: &SpinorField) -> f64 {
        (self - other).norm()
    }
}

impl AddAssign<&SpinorField> for SpinorField {
    fn add_assign(&mut self, rhs: &SpinorField) {
        self.axpy(C64::new(1.0, 0.0), rhs);
    }
}

impl SubAssign<&SpinorField> for SpinorField {
    fn sub_assign(&mut self, rhs: &SpinorField) {
        self.axpy(C64::new(-1.0, 0.0), rhs);
    }
}

impl Add for &SpinorField {
    type Output = SpinorField;
    fn add(self, rhs: &SpinorField) -> SpinorField {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &SpinorField {
    type Output = SpinorField;
    fn sub(self, rhs: &SpinorField) -> SpinorField {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Neg for &SpinorField {
    type Output = SpinorField;
    fn neg(self) -> SpinorField {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul<C64> for &SpinorField {
    type Output = SpinorField;
    fn mul(self, a: C64) -> SpinorField {
        self.scale(a)
    }
}

impl Mul<f64> for &SpinorField {
    type Output = SpinorField;
    fn mul(self, a: f64) -> SpinorField {
        self.scale(C64::new(a, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(grid: Grid) -> SpinorField {
        SpinorField::from_fn(grid, |x| [C64::new((-x * x).exp(), 0.0), C64::new(0.0, x * (-x * x).exp())])
    }

    #[test]
    fn norm_of_gaussian() {
        let g = Grid::new(20.0, 512).unwrap();
        let f = SpinorField::from_fn(g, |x| [C64::new((-x * x / 2.0).exp(), 0.0), C64::default()]);
        // int e^{-x^2} dx = sqrt(pi)
        assert!((f.norm_sqr() - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn weighted_norm_monotone_in_sigma() {
        let g = Grid::new(20.0, 256).unwrap();
        let f = gauss(g);
        let mut prev = 0.0;
        for s in [-2.0, -1.0, 0.0, 1.0, 3.0] {
            let n = f.weighted_norm(s, 0.0);
            assert!(n > prev);
            prev = n;
        }
    }

    #[test]
    fn sobolev_weight_zero_is_plain_norm() {
        let g = Grid::new(20.0, 256).unwrap();
        let f = gauss(g);
        assert!((f.weighted_norm(0.0, 0.0) - f.norm()).abs() < 1e-14);
        // <D>^1 norm^2 = ||u||^2 + ||u'||^2
        let d = f.derivative();
        let expect = (f.norm_sqr() + d.norm_sqr()).sqrt();
        assert!((f.weighted_norm(0.0, 1.0) - expect).abs() < 1e-10);
    }

    #[test]
    fn inner_product_rejects_other_grid() {
        let f = gauss(Grid::new(20.0, 256).unwrap());
        let g = gauss(Grid::new(10.0, 256).unwrap());
        assert_eq!(f.inner(&g), Err(Error::GridMismatch));
    }
}
