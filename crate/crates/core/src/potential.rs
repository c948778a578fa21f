//! Hermitian 2x2 matrix potentials and the built-in families.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{bracket, Mat2};
use crate::fourier;
use crate::grid::Grid;

/// Default decay exponent recorded for potentials built from the catalog.
pub const DEFAULT_DECAY_RATE: f64 = 6.0;

const HERMITIAN_TOL: f64 = 1e-12;

/// Per-node 2x2 matrix field with its `x`-derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPotential {
    grid: Grid,
    entries: Vec<Mat2>,
    derivative: Vec<Mat2>,
    decay_rate: f64,
}

impl MatrixPotential {
    /// Validates Hermiticity and finiteness. When `derivative` is `None` it is
    /// computed spectrally, which assumes the entries decay towards `±L`.
    pub fn new(grid: Grid, entries: Vec<Mat2>, derivative: Option<Vec<Mat2>>, decay_rate: f64) -> Result<Self> {
        if entries.len() != grid.len() {
            return Err(Error::InvalidParameter("potential length does not match grid".into()));
        }
        for (i, v) in entries.iter().enumerate() {
            if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite potential entry at node {i}")));
            }
            let defect = (v - v.adjoint()).norm();
            if defect > HERMITIAN_TOL * (1.0 + v.norm()) {
                return Err(Error::NonHermitian { index: i, defect });
            }
        }
        let derivative = match derivative {
            Some(d) if d.len() == grid.len() => d,
            Some(_) => return Err(Error::InvalidParameter("derivative length does not match grid".into())),
            None => spectral_derivative(&grid, &entries),
        };
        Ok(MatrixPotential { grid, entries, derivative, decay_rate })
    }

    pub fn zero(grid: Grid) -> Self {
        let z = vec![Mat2::zeros(); grid.len()];
        MatrixPotential { grid, entries: z.clone(), derivative: z, decay_rate: f64::INFINITY }
    }

    /// Assemble without validation; used for derived potentials that are Hermitian by construction.
    pub(crate) fn from_parts(grid: Grid, entries: Vec<Mat2>, derivative: Vec<Mat2>, decay_rate: f64) -> Self {
        MatrixPotential { grid, entries, derivative, decay_rate }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn entries(&self) -> &[Mat2] {
        &self.entries
    }

    pub fn derivative(&self) -> &[Mat2] {
        &self.derivative
    }

    pub fn at(&self, i: usize) -> &Mat2 {
        &self.entries[i]
    }

    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    /// `max_i |V(x_i)| <x_i>^beta` with the spectral (operator 2-)norm replaced by Frobenius.
    pub fn decay_constant(&self) -> f64 {
        let b = if self.decay_rate.is_finite() { self.decay_rate } else { 0.0 };
        self.grid
            .nodes()
            .iter()
            .zip(&self.entries)
            .map(|(&x, v)| v.norm() * bracket(x).powf(b))
            .fold(0.0, f64::max)
    }

    pub fn max_norm(&self) -> f64 {
        self.entries.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.max_norm() == 0.0
    }

    /// Largest pointwise deviation from Hermiticity.
    pub fn hermitian_defect(&self) -> f64 {
        self.entries.iter().map(|v| (v - v.adjoint()).norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> MatrixPotential {
        MatrixPotential {
            grid: self.grid,
            entries: self.entries.iter().map(|v| v * C64::new(s, 0.0)).collect(),
            derivative: self.derivative.iter().map(|v| v * C64::new(s, 0.0)).collect(),
            decay_rate: self.decay_rate,
        }
    }

    /// Node indices where `|V| > rel_tol * max |V|`.
    pub fn support(&self, rel_tol: f64) -> Vec<usize> {
        let max = self.max_norm();
        if max == 0.0 {
            return Vec::new();
        }
        (0..self.grid.len()).filter(|&i| self.entries[i].norm() > rel_tol * max).collect()
    }
}

fn spectral_derivative(grid: &Grid, entries: &[Mat2]) -> Vec<Mat2> {
    let sym = fourier::derivative_symbol(grid);
    let mut out = vec![Mat2::zeros(); grid.len()];
    for r in 0..2 {
        for c in 0..2 {
            let col: Vec<C64> = entries.iter().map(|v| v[(r, c)]).collect();
            let d = fourier::apply_multiplier(&col, &sym);
            for (o, di) in out.iter_mut().zip(d) {
                o[(r, c)] = di;
            }
        }
    }
    out
}

/// Closed-form potential families.
///
/// All profiles are `g(x) = exp(-(x/w)^2)` or `sech^2(x/w)`, so any polynomial decay rate holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// `V12 = a e^{i phase} exp(-(x/w)^2)`, zero diagonal.
    GaussianOffdiag { amplitude: f64, width: f64, phase: f64 },
    /// `V12 = a e^{i phase} sech^2(x/w)`, zero diagonal.
    Sech2Offdiag { amplitude: f64, width: f64, phase: f64 },
    /// `V11 = a11 g`, `V22 = a22 g`, zero off-diagonal.
    DiagGaussian { upper: f64, lower: f64, width: f64 },
    /// All entries Gaussian: `V11 = a11 g`, `V22 = a22 g`, `V12 = a12 e^{i phase} g`.
    FullHermitianGaussian { upper: f64, lower: f64, coupling: f64, phase: f64, width: f64 },
}

impl PotentialSpec {
    pub fn gaussian_offdiag(amplitude: f64) -> Self {
        PotentialSpec::GaussianOffdiag { amplitude, width: 1.0, phase: 0.0 }
    }

    pub fn family(&self) -> &'static str {
        match self {
            PotentialSpec::GaussianOffdiag { .. } => "gaussian_offdiag",
            PotentialSpec::Sech2Offdiag { .. } => "sech2_offdiag",
            PotentialSpec::DiagGaussian { .. } => "diag_gaussian",
            PotentialSpec::FullHermitianGaussian { .. } => "full_hermitian_gaussian",
        }
    }

    fn width(&self) -> f64 {
        match *self {
            PotentialSpec::GaussianOffdiag { width, .. }
            | PotentialSpec::Sech2Offdiag { width, .. }
            | PotentialSpec::DiagGaussian { width, .. }
            | PotentialSpec::FullHermitianGaussian { width, .. } => width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.width();
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::InvalidParameter(format!("potential width must be positive, got {w}")));
        }
        Ok(())
    }

    /// Profile value and derivative at `x`.
    fn profile(&self, x: f64) -> (f64, f64) {
        let w = self.width();
        let u = x / w;
        match self {
            PotentialSpec::Sech2Offdiag { .. } => {
                let s = 1.0 / u.cosh();
                let s2 = s * s;
                (s2, -2.0 * s2 * u.tanh() / w)
            }
            _ => {
                let g = (-u * u).exp();
                (g, -2.0 * u / w * g)
            }
        }
    }

    /// Matrix value and derivative at `x`.
    pub fn evaluate(&self, x: f64) -> (Mat2, Mat2) {
        let (g, dg) = self.profile(x);
        let z = C64::default();
        let offdiag = |a: f64, phase: f64, p: f64| {
            let c = C64::from_polar(a * p, phase);
            Mat2::new(z, c, c.conj(), z)
        };
        let diag = |a11: f64, a22: f64, p: f64| Mat2::new(C64::new(a11 * p, 0.0), z, z, C64::new(a22 * p, 0.0));
        match *self {
            PotentialSpec::GaussianOffdiag { amplitude, phase, .. }
            | PotentialSpec::Sech2Offdiag { amplitude, phase, .. } => {
                (offdiag(amplitude, phase, g), offdiag(amplitude, phase, dg))
            }
            PotentialSpec::DiagGaussian { upper, lower, .. } => (diag(upper, lower, g), diag(upper, lower, dg)),
            PotentialSpec::FullHermitianGaussian { upper, lower, coupling, phase, .. } => (
                diag(upper, lower, g) + offdiag(coupling, phase, g),
                diag(upper, lower, dg) + offdiag(coupling, phase, dg),
            ),
        }
    }

    pub fn build(&self, grid: Grid) -> Result<MatrixPotential> {
        self.validate()?;
        let (mut v, mut d) = (Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len()));
        for x in grid.nodes() {
            let (a, b) = self.evaluate(x);
            v.push(a);
            d.push(b);
        }
        MatrixPotential::new(grid, v, Some(d), DEFAULT_DECAY_RATE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_hermitian() {
        let g = Grid::new(5.0, 16).unwrap();
        let mut e = vec![Mat2::zeros(); 16];
        e[3][(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(MatrixPotential::new(g, e, None, 6.0), Err(Error::NonHermitian { index: 3, .. })));
    }

    #[test]
    fn catalog_derivatives_match_finite_differences() {
        let specs = [
            PotentialSpec::GaussianOffdiag { amplitude: 0.4, width: 1.3, phase: 0.7 },
            PotentialSpec::Sech2Offdiag { amplitude: -0.5, width: 0.8, phase: 0.0 },
            PotentialSpec::DiagGaussian { upper: 0.3, lower: -0.2, width: 1.0 },
            PotentialSpec::FullHermitianGaussian { upper: 0.1, lower: 0.2, coupling: 0.3, phase: 1.1, width: 1.5 },
        ];
        let eta = 1e-5;
        for s in specs {
            for x in [-1.7, -0.2, 0.0, 0.9, 2.4] {
                let fd = (s.evaluate(x + eta).0 - s.evaluate(x - eta).0) / C64::new(2.0 * eta, 0.0);
                assert!((fd - s.evaluate(x).1).norm() < 1e-8, "{s:?} at {x}");
                let v = s.evaluate(x).0;
                assert!((v - v.adjoint()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn spectral_derivative_fallback() {
        let g = Grid::new(20.0, 256).unwrap();
        let spec = PotentialSpec::gaussian_offdiag(0.5);
        let built = spec.build(g).unwrap();
        let fallback = MatrixPotential::new(g, built.entries().to_vec(), None, 6.0).unwrap();
        for (a, b) in built.derivative().iter().zip(fallback.derivative()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn support_of_zero_is_empty() {
        let g = Grid::new(5.0, 32).unwrap();
        assert!(MatrixPotential::zero(g).support(1e-15).is_empty());
        let v = PotentialSpec::gaussian_offdiag(1.0).build(g).unwrap();
        let s = v.support(1e-15);
        assert!(s.contains(&g.origin_index()));
    }
}
