//! The Dirac operator `iα∂ + mβ + V`, linear-operator plumbing and weighted operator norms.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::field::{Mat2, SpinorField};
use crate::potential::MatrixPotential;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `α = diag(-1, 1)`.
pub fn alpha() -> Mat2 {
    Mat2::new(-ONE, ZERO, ZERO, ONE)
}

/// `β = σ_x`.
pub fn beta() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

/// Fourier symbol of the free operator at wavenumber `k`: `[[k, m], [m, -k]]`.
pub fn free_symbol(k: f64, m: f64) -> Mat2 {
    Mat2::new(C64::new(k, 0.0), C64::new(m, 0.0), C64::new(m, 0.0), C64::new(-k, 0.0))
}

/// `iα f' + mβ f + V f` with a spectral derivative.
pub fn apply_dirac(f: &SpinorField, v: &MatrixPotential, m: f64) -> Result<SpinorField> {
    if f.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    let d = f.derivative();
    Ok(f.map_points(|i, u| {
        let du = d.at(i);
        let mut out = v.at(i) * u;
        out[0] += -I * du[0] + m * u[1];
        out[1] += I * du[1] + m * u[0];
        out
    }))
}

/// Linear map on spinor fields with access to its `L^2` adjoint.
pub trait LinearOperator {
    fn apply(&self, f: &SpinorField) -> Result<SpinorField>;
    fn apply_adjoint(&self, f: &SpinorField) -> Result<SpinorField>;
}

/// Operator assembled from a pair of closures.
pub struct FnOperator<F, G> {
    forward: F,
    adjoint: G,
}

impl<F, G> FnOperator<F, G>
where
    F: Fn(&SpinorField) -> Result<SpinorField>,
    G: Fn(&SpinorField) -> Result<SpinorField>,
{
    pub fn new(forward: F, adjoint: G) -> Self {
        FnOperator { forward, adjoint }
    }
}

impl<F, G> LinearOperator for FnOperator<F, G>
where
    F: Fn(&SpinorField) -> Result<SpinorField>,
    G: Fn(&SpinorField) -> Result<SpinorField>,
{
    fn apply(&self, f: &SpinorField) -> Result<SpinorField> {
        (self.forward)(f)
    }
    fn apply_adjoint(&self, f: &SpinorField) -> Result<SpinorField> {
        (self.adjoint)(f)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PowerIteration {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration { rel_tol: 1e-6, max_iter: 500 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
}

fn start_vector(f: &SpinorField) -> SpinorField {
    let g = *f.grid();
    let mut v = SpinorField::from_fn(g, |x| {
        let e = (-x * x / 8.0).exp();
        let wiggle = 1e-3 * (1.3 * x).sin() / (1.0 + x * x);
        [C64::new(e + wiggle, 0.0), C64::new(0.5 * e, 0.3 * e - wiggle)]
    });
    let n = v.norm();
    v = v.scale(C64::new(1.0 / n, 0.0));
    v
}

/// `||A||_{L^2_σ -> L^2_{-σ}}`: power iteration on `(W A W)^* (W A W)`, `W = <x>^{-σ}`.
///
/// `probe` only supplies the grid.
pub fn weighted_operator_norm(
    op: &dyn LinearOperator,
    probe: &SpinorField,
    sigma: f64,
    opts: PowerIteration,
) -> Result<NormEstimate> {
    let mut v = start_vector(probe);
    let mut last = f64::NAN;
    for it in 1..=opts.max_iter {
        let w = op.apply(&v.weighted(-sigma))?.weighted(-sigma);
        let lambda = w.norm_sqr();
        if lambda == 0.0 {
            return Ok(NormEstimate { value: 0.0, iterations: it });
        }
        if (lambda - last).abs() <= opts.rel_tol * lambda {
            return Ok(NormEstimate { value: lambda.sqrt(), iterations: it });
        }
        last = lambda;
        let back = op.apply_adjoint(&w.weighted(-sigma))?.weighted(-sigma);
        let n = back.norm();
        if n == 0.0 {
            return Ok(NormEstimate { value: 0.0, iterations: it });
        }
        v = back.scale(C64::new(1.0 / n, 0.0));
    }
    Err(Error::NotConverged { what: "weighted operator norm", iterations: opts.max_iter, last: last.sqrt() })
}

/// Extract the value from a norm estimate, accepting the last iterate on non-convergence.
pub fn norm_value(r: Result<NormEstimate>) -> Result<f64> {
    match r {
        Ok(e) => Ok(e.value),
        Err(Error::NotConverged { last, .. }) => Ok(last),
        Err(e) => Err(e),
    }
}
