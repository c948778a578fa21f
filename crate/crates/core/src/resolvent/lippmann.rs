//! Lippmann–Schwinger solve for `R(ζ) = (-∂² + V_sq - ζ)⁻¹`.

use faer::prelude::*;
use faer::solvers::PartialPivLu;
use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::field::{Mat2, Spinor, SpinorField};
use crate::free::SchrodingerKernel;
use crate::potential::MatrixPotential;
use crate::special::{branch_sqrt, Side};

/// Pivot-ratio condition estimate above which a solve is treated as sitting on an eigenvalue.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Entries below this fraction of the largest one are dropped from the support.
pub const SUPPORT_TOL: f64 = 1e-15;

/// `(I + R₀ V)` restricted to the support nodes, with `2×2` blocks in node order.
pub fn system_matrix(kernel: &SchrodingerKernel, v: &MatrixPotential, support: &[usize]) -> Mat<C64> {
    let n = support.len();
    Mat::from_fn(2 * n, 2 * n, |r, col| {
        let (a, ca) = (r / 2, r % 2);
        let (b, cb) = (col / 2, col % 2);
        let mut e = kernel.value_entry(support[a], support[b]) * v.at(support[b])[(ca, cb)];
        if r == col {
            e += 1.0;
        }
        e
    })
}

/// `R(ζ)` through `(I + R₀V) u = R₀ f`.
///
/// `V` vanishes off its support `S`, so only `u` on `S` is unknown: the `2|S|` system is
/// factorized once, and `R f = R₀ (f - V u)` is then evaluated with the fast kernel.
pub struct LippmannSchwinger {
    kernel: SchrodingerKernel,
    blocks: Vec<Mat2>,
    support: Vec<usize>,
    lu: Option<PartialPivLu<C64>>,
    condition: f64,
}

impl LippmannSchwinger {
    pub fn new(kernel: SchrodingerKernel, v: &MatrixPotential, support: &[usize]) -> Result<Self> {
        if kernel.grid() != v.grid() {
            return Err(Error::GridMismatch);
        }
        let blocks: Vec<Mat2> = support.iter().map(|&i| *v.at(i)).collect();
        if support.is_empty() {
            return Ok(LippmannSchwinger { kernel, blocks, support: Vec::new(), lu: None, condition: 1.0 });
        }
        let a = system_matrix(&kernel, v, support);
        let lu = a.partial_piv_lu();
        let u = lu.compute_u();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..u.nrows() {
            let d = u.read(i, i).norm();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition <= CONDITION_LIMIT) {
            return Err(Error::IllConditioned { condition });
        }
        Ok(LippmannSchwinger { kernel, blocks, support: support.to_vec(), lu: Some(lu), condition })
    }

    pub fn kernel(&self) -> &SchrodingerKernel {
        &self.kernel
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// `V u` with `V` restricted to the support.
    pub fn apply_potential(&self, u: &SpinorField) -> SpinorField {
        let mut out = SpinorField::zeros(*u.grid());
        for (b, &i) in self.blocks.iter().zip(&self.support) {
            out.set(i, b * u.at(i));
        }
        out
    }

    /// `g = f - V R(ζ) f`, so that `R(ζ) f = R₀(ζ) g`.
    pub fn effective_source(&self, f: &SpinorField) -> SpinorField {
        let Some(lu) = &self.lu else {
            return f.clone();
        };
        let r0f = self.kernel.apply_field(f);
        let rhs = Mat::from_fn(2 * self.support.len(), 1, |r, _| r0f.at(self.support[r / 2])[r % 2]);
        let x = lu.solve(&rhs);
        let mut g = f.clone();
        for (a, (&i, b)) in self.support.iter().zip(&self.blocks).enumerate() {
            let ua = Spinor::new(x.read(2 * a, 0), x.read(2 * a + 1, 0));
            g.set(i, g.at(i) - b * ua);
        }
        g
    }

    pub fn apply(&self, f: &SpinorField) -> SpinorField {
        self.kernel.apply_field(&self.effective_source(f))
    }

    /// `(R f, ∂ₓ R f)`, the derivative falling on the kernel.
    pub fn apply_with_derivative(&self, f: &SpinorField) -> (SpinorField, SpinorField) {
        let g = self.effective_source(f);
        (self.kernel.apply_field(&g), self.kernel.apply_field_derivative(&g))
    }
}

#[derive(Clone, Debug)]
pub struct LsSolution {
    pub u: SpinorField,
    /// `||(-∂² + V_sq - ζ)u - f|| / ||f||` with spectral derivatives. Only meaningful when
    /// `u` decays inside the grid (`ζ` off the positive axis).
    pub residual: f64,
    pub condition: f64,
}

/// `||(-∂² + V - ζ)u - f|| / ||f||`.
pub fn schrodinger_residual(v: &MatrixPotential, zeta: C64, u: &SpinorField, f: &SpinorField) -> f64 {
    let lap = u.derivative().derivative();
    let lhs = u.map_points(|i, w| v.at(i) * w - lap.at(i) - w * zeta);
    lhs.distance(f) / f.norm()
}

fn kernel_for(zeta: C64, side: Side, v: &MatrixPotential) -> Result<SchrodingerKernel> {
    let root = branch_sqrt(zeta, side)?;
    if root.at_edge {
        return Err(Error::AtThreshold);
    }
    SchrodingerKernel::new(*v.grid(), root.value)
}

/// `u = R(ζ) f` for the matrix Schrödinger operator `-∂² + V_sq`.
pub fn lippmann_schwinger_solve(zeta: C64, side: Side, v_sq: &MatrixPotential, f: &SpinorField) -> Result<LsSolution> {
    f.same_grid(&SpinorField::zeros(*v_sq.grid()))?;
    let ls = LippmannSchwinger::new(kernel_for(zeta, side, v_sq)?, v_sq, &v_sq.support(SUPPORT_TOL))?;
    let u = ls.apply(f);
    let residual = schrodinger_residual(v_sq, zeta, &u, f);
    Ok(LsSolution { u, residual, condition: ls.condition })
}

/// Reference route: the full `2N × 2N` system `(I + R₀V) u = R₀ f` without support reduction.
pub fn lippmann_schwinger_dense(zeta: C64, side: Side, v_sq: &MatrixPotential, f: &SpinorField) -> Result<SpinorField> {
    let kernel = kernel_for(zeta, side, v_sq)?;
    let all: Vec<usize> = (0..f.len()).collect();
    let a = system_matrix(&kernel, v_sq, &all);
    let r0f = kernel.apply_field(f);
    let rhs = Mat::from_fn(2 * f.len(), 1, |r, _| r0f.at(r / 2)[r % 2]);
    let x = a.partial_piv_lu().solve(&rhs);
    let mut u = SpinorField::zeros(*f.grid());
    for i in 0..f.len() {
        u.set(i, Spinor::new(x.read(2 * i, 0), x.read(2 * i + 1, 0)));
    }
    Ok(u)
}
