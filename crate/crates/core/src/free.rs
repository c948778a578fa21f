//! Free Schrödinger/Dirac resolvents, Klein–Gordon kernel, free propagators and edge expansions.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dirac::{self, FnOperator, PowerIteration};
use crate::error::{Error, Result};
use crate::field::{Mat2, SpinorField};
use crate::fourier::{self, Toeplitz};
use crate::grid::Grid;
use crate::special::{branch_sqrt, j0_unchecked, j1_over_u, Band, CutoffSpec, Side};

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// A frequency `ω` together with the way the real axis is approached on `Γ = (-∞,-m) ∪ (m,∞)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub omega: C64,
    pub side: Side,
}

impl SpectralPoint {
    pub fn interior(omega: C64) -> Self {
        SpectralPoint { omega, side: Side::Interior }
    }

    /// Real `ω` with `|ω| > m`, approached as `ω ± i0`.
    pub fn boundary(omega: f64, side: Side) -> Self {
        SpectralPoint { omega: c(omega), side }
    }

    pub fn conj(&self) -> SpectralPoint {
        SpectralPoint { omega: self.omega.conj(), side: self.side.flipped() }
    }

    pub fn zeta(&self, m: f64) -> C64 {
        self.omega * self.omega - m * m
    }

    /// Side from which `ζ = ω² - m²` approaches `[0, ∞)`.
    pub fn zeta_side(&self) -> Side {
        if self.omega.re < 0.0 {
            self.side.flipped()
        } else {
            self.side
        }
    }

    /// `√ζ` on the physical branch (`Im ≥ 0`, boundary values by side).
    pub fn root(&self, m: f64) -> Result<C64> {
        let on_axis = self.omega.im == 0.0;
        if on_axis && (self.omega.re.abs() - m).abs() == 0.0 {
            return Err(Error::AtThreshold);
        }
        if on_axis && self.omega.re.abs() > m && self.side == Side::Interior {
            return Err(Error::AmbiguousBranch);
        }
        let r = branch_sqrt(self.zeta(m), self.zeta_side())?;
        if r.at_edge {
            return Err(Error::AtThreshold);
        }
        Ok(r.value)
    }
}

/// `R₀(ζ)(r) = -e^{i√ζ r}/(2i√ζ)` for `r ≥ 0`.
pub fn free_schrodinger_kernel(zeta: C64, side: Side, r: f64) -> Result<C64> {
    if r < 0.0 {
        return Err(Error::InvalidParameter(format!("distance must be >= 0, got {r}")));
    }
    let root = branch_sqrt(zeta, side)?;
    if root.at_edge {
        return Err(Error::AtThreshold);
    }
    let q = root.value;
    Ok(I / (2.0 * q) * (I * q * r).exp())
}

/// Discretized `R₀(ζ)` and `∂ₓR₀(ζ)` on a grid, as Toeplitz convolutions.
///
/// The trapezoid rule is corrected at the kink of `e^{i√ζ|r|}` with short local stencils,
/// which makes both kernels sixth-order accurate for smooth sources.
#[derive(Clone, Debug)]
pub struct SchrodingerKernel {
    grid: Grid,
    q: C64,
    value_coeff: Vec<C64>,
    deriv_coeff: Vec<C64>,
    value_op: Toeplitz,
    deriv_op: Toeplitz,
}

impl SchrodingerKernel {
    /// Kernel for `√ζ = q` with `Im q ≥ 0`, `q ≠ 0`.
    pub fn new(grid: Grid, q: C64) -> Result<Self> {
        if q == C64::default() {
            return Err(Error::AtThreshold);
        }
        let n = grid.len();
        let h = grid.spacing();
        let zeta = q * q;
        let base = I / (2.0 * q);
        let exps: Vec<C64> = (0..n).map(|d| (I * q * (d as f64 * h)).exp()).collect();
        // offsets -(n-1)..=(n-1) stored at index d + n - 1
        let mut value_coeff = vec![C64::default(); 2 * n - 1];
        let mut deriv_coeff = vec![C64::default(); 2 * n - 1];
        for d in -(n as i64 - 1)..=(n as i64 - 1) {
            let e = exps[d.unsigned_abs() as usize];
            let idx = (d + n as i64 - 1) as usize;
            value_coeff[idx] = h * base * e;
            deriv_coeff[idx] = -0.5 * h * (d.signum() as f64) * e;
        }
        let at = |d: i64| (d + n as i64 - 1) as usize;
        value_coeff[at(0)] += -h * h / 12.0 - zeta * h.powi(4) / 720.0 - h * h / 120.0;
        value_coeff[at(1)] += c(h * h / 240.0);
        value_coeff[at(-1)] += c(h * h / 240.0);
        // (h²/12 + ζh⁴/240) δ₁ - (11h⁴/720) δ₃ with out_i = Σ c(i-j) g_j
        let first = (h * h / 12.0 + zeta * h.powi(4) / 240.0) / (2.0 * h);
        deriv_coeff[at(-1)] += first;
        deriv_coeff[at(1)] -= first;
        let third = 11.0 * h.powi(4) / 720.0 / (2.0 * h.powi(3));
        deriv_coeff[at(-2)] -= third;
        deriv_coeff[at(-1)] += 2.0 * third;
        deriv_coeff[at(1)] -= 2.0 * third;
        deriv_coeff[at(2)] += third;
        let value_op = Toeplitz::new(n, |d| value_coeff[(d + n as i64 - 1) as usize]);
        let deriv_op = Toeplitz::new(n, |d| deriv_coeff[(d + n as i64 - 1) as usize]);
        Ok(SchrodingerKernel { grid, q, value_coeff, deriv_coeff, value_op, deriv_op })
    }

    pub fn for_point(grid: Grid, point: &SpectralPoint, m: f64) -> Result<Self> {
        SchrodingerKernel::new(grid, point.root(m)?)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn root(&self) -> C64 {
        self.q
    }

    /// Matrix entry `(R₀)_{ij}` of the discretized resolvent.
    pub fn value_entry(&self, i: usize, j: usize) -> C64 {
        self.value_coeff[i + self.grid.len() - 1 - j]
    }

    pub fn deriv_entry(&self, i: usize, j: usize) -> C64 {
        self.deriv_coeff[i + self.grid.len() - 1 - j]
    }

    pub fn apply(&self, g: &[C64]) -> Vec<C64> {
        self.value_op.apply(g)
    }

    pub fn apply_derivative(&self, g: &[C64]) -> Vec<C64> {
        self.deriv_op.apply(g)
    }

    pub fn apply_field(&self, f: &SpinorField) -> SpinorField {
        f.map_components(|v| self.apply(v))
    }

    pub fn apply_field_derivative(&self, f: &SpinorField) -> SpinorField {
        f.map_components(|v| self.apply_derivative(v))
    }
}

/// `u = R₀(ζ) f` componentwise.
pub fn free_schrodinger_resolvent_apply(zeta: C64, side: Side, f: &SpinorField) -> Result<SpinorField> {
    let root = branch_sqrt(zeta, side)?;
    if root.at_edge {
        return Err(Error::AtThreshold);
    }
    Ok(SchrodingerKernel::new(*f.grid(), root.value)?.apply_field(f))
}

/// `(iα∂ + mβ + ω)` applied to `u`, given `u` and `∂u`.
pub(crate) fn first_order(u: &SpinorField, du: &SpinorField, offdiag: impl Fn(usize) -> (C64, C64), omega: C64) -> SpinorField {
    let mut out = SpinorField::zeros(*u.grid());
    for i in 0..u.len() {
        let (a, b) = (u.at(i), du.at(i));
        let (v12, v21) = offdiag(i);
        let mut o = a * omega;
        o[0] += -I * b[0] + v12 * a[1];
        o[1] += I * b[1] + v21 * a[0];
        out.set(i, o);
    }
    out
}

/// `𝓡₀(ω) = (iα∂ₓ + mβ + ω) R₀(ω² - m²)`, with `∂ₓ` falling on the kernel.
pub fn free_dirac_resolvent_apply(point: &SpectralPoint, f: &SpinorField, m: f64) -> Result<SpinorField> {
    let k = SchrodingerKernel::for_point(*f.grid(), point, m)?;
    Ok(free_dirac_with_kernel(&k, point.omega, f, m))
}

pub(crate) fn free_dirac_with_kernel(k: &SchrodingerKernel, omega: C64, f: &SpinorField, m: f64) -> SpinorField {
    let u = k.apply_field(f);
    let du = k.apply_field_derivative(f);
    first_order(&u, &du, |_| (c(m), c(m)), omega)
}

/// `G(x,t) = ½ θ(t - |x|) J₀(m √(t² - x²))`.
pub fn kg_fundamental(x: f64, t: f64, m: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("time must be >= 0, got {t}")));
    }
    if x.abs() > t {
        return Ok(0.0);
    }
    Ok(0.5 * j0_unchecked(m * (t * t - x * x).max(0.0).sqrt()))
}

/// `g(H₀) ψ` for a scalar function `g` of the free operator, per Fourier mode.
pub fn free_functional_calculus(psi: &SpinorField, m: f64, g: impl Fn(f64) -> C64) -> SpinorField {
    let grid = *psi.grid();
    let mut a = psi.component(0).to_vec();
    let mut b = psi.component(1).to_vec();
    fourier::forward(&mut a);
    fourier::forward(&mut b);
    // same symbol as `apply_dirac`: the Nyquist mode carries k = 0
    for (j, k) in fourier::derivative_symbol(&grid).into_iter().map(|s| s.im).enumerate() {
        let e = (k * k + m * m).sqrt();
        let (gp, gm) = (g(e), g(-e));
        // g(M) = (g(E)+g(-E))/2 I + (g(E)-g(-E))/(2E) M
        let s = 0.5 * (gp + gm);
        let d = 0.5 * (gp - gm) / e;
        let (u, v) = (a[j], b[j]);
        a[j] = s * u + d * (k * u + m * v);
        b[j] = s * v + d * (m * u - k * v);
    }
    fourier::inverse(&mut a);
    fourier::inverse(&mut b);
    SpinorField::from_components(grid, a, b).expect("grid sizes preserved")
}

/// `e^{-itH₀} ψ₀` by exact diagonalization of the symbol.
pub fn free_evolve_fourier(psi0: &SpinorField, t: f64, m: f64) -> SpinorField {
    free_functional_calculus(psi0, m, |l| (-I * l * t).exp())
}

/// `w(H₀) e^{-itH₀} ψ₀` with `w` the band weight.
pub fn free_band_propagator(psi0: &SpinorField, t: f64, spec: &CutoffSpec, band: Band) -> SpinorField {
    free_functional_calculus(psi0, spec.m, |l| band.weight(spec, l) * (-I * l * t).exp())
}

/// Shift `ψ(x) ↦ ψ(x - a)` by a Fourier phase.
fn spectral_shift(v: &[C64], grid: &Grid, a: f64) -> Vec<C64> {
    let sym: Vec<C64> = grid.wavenumbers().into_iter().map(|k| (-I * k * a).exp()).collect();
    fourier::apply_multiplier(v, &sym)
}

/// Regular interior kernel of `𝒰(t)` at displacement `r`, `|r| ≤ t`, as `(a, b, c)` in `aI + bα + cβ`.
fn regular_kernel(r: f64, t: f64, m: f64) -> (f64, f64, C64) {
    let rho = (t * t - r * r).max(0.0).sqrt();
    let j1r = m * j1_over_u(m * rho);
    (-0.5 * m * t * j1r, 0.5 * m * r * j1r, -0.5 * I * m * j0_unchecked(m * rho))
}

/// Weights for `∫_{-t}^{t} g(r) dr` from samples at `r = dh`, `|d| ≤ nmax`, and at `r = ±t`,
/// where `t = nmax h + θ`. Gregory end weights on the aligned part, cubic interpolation on the
/// fractional cells. Returns per-|d| weights and the weight of each cone sample.
fn cone_quadrature(nmax: i64, theta: f64, h: f64) -> (Vec<f64>, f64) {
    let n = nmax.max(0) as usize;
    let mut w = vec![h; n + 1];
    if n < 3 {
        // plain trapezoid
        if n == 0 {
            return (vec![theta], theta);
        }
        w[n] = 0.5 * h + 0.5 * theta;
        return (w, 0.5 * theta);
    }
    for (k, g) in [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0].iter().enumerate() {
        w[n - k] = g * h;
    }
    if theta == 0.0 {
        return (w, 0.0);
    }
    // Lagrange nodes relative to nmax·h: -2h, -h, 0, θ; exact 3-point Gauss on [0, θ]
    let nodes = [-2.0 * h, -h, 0.0, theta];
    let gl = [(-(0.6f64).sqrt(), 5.0 / 9.0), (0.0, 8.0 / 9.0), ((0.6f64).sqrt(), 5.0 / 9.0)];
    let mut frac = [0.0; 4];
    for (xi, wi) in gl {
        let s = 0.5 * theta * (xi + 1.0);
        for k in 0..4 {
            let mut l = 1.0;
            for j in 0..4 {
                if j != k {
                    l *= (s - nodes[j]) / (nodes[k] - nodes[j]);
                }
            }
            frac[k] += 0.5 * theta * wi * l;
        }
    }
    w[n - 2] += frac[0];
    w[n - 1] += frac[1];
    w[n] += frac[2];
    (w, frac[3])
}

/// `𝒰(t)ψ₀ = ∫ (∂ₜ + α∂ₓ - imβ) G(x - y, t) ψ₀(y) dy` from the light-cone split of `G`.
pub fn free_propagator_kernel_apply(psi0: &SpinorField, t: f64, m: f64) -> Result<SpinorField> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("propagation time must be > 0, got {t}")));
    }
    let grid = *psi0.grid();
    let n = grid.len();
    let h = grid.spacing();
    let right = spectral_shift(psi0.component(0), &grid, t);
    let left = spectral_shift(psi0.component(1), &grid, -t);
    let right2 = spectral_shift(psi0.component(1), &grid, t);
    let left1 = spectral_shift(psi0.component(0), &grid, -t);

    let nmax = (((t / h) * (1.0 + 1e-14)).floor() as i64).min(n as i64 - 1);
    let theta = (t - nmax as f64 * h).max(0.0);
    let (weights, cone_weight) = cone_quadrature(nmax, theta, h);
    let weight = |d: i64| weights.get(d.unsigned_abs() as usize).copied().unwrap_or(0.0);
    let kern = |d: i64| {
        let w = weight(d);
        if w == 0.0 {
            (C64::default(), C64::default(), C64::default())
        } else {
            let (a, b, cc) = regular_kernel(d as f64 * h, t, m);
            (c(w * (a - b)), c(w * (a + b)), w * cc)
        }
    };
    let t_up = Toeplitz::new(n, |d| kern(d).0);
    let t_down = Toeplitz::new(n, |d| kern(d).1);
    let t_off = Toeplitz::new(n, |d| kern(d).2);
    let (p1, p2) = (psi0.component(0), psi0.component(1));
    let (uu, ud, o1, o2) = (t_up.apply(p1), t_down.apply(p2), t_off.apply(p2), t_off.apply(p1));

    // cone values: r = t uses ψ(x - t), r = -t uses ψ(x + t)
    let (ap, bp, cp) = regular_kernel(t, t, m);
    let (am, bm, cm) = regular_kernel(-t, t, m);
    let half = cone_weight;
    let mut up = Vec::with_capacity(n);
    let mut down = Vec::with_capacity(n);
    for i in 0..n {
        let cone1 = half * ((ap - bp) * right[i] + cp * right2[i] + (am - bm) * left1[i] + cm * left[i]);
        let cone2 = half * ((ap + bp) * right2[i] + cp * right[i] + (am + bm) * left[i] + cm * left1[i]);
        up.push(right[i] + uu[i] + o1[i] + cone1);
        down.push(left[i] + ud[i] + o2[i] + cone2);
    }
    SpinorField::from_components(grid, up, down)
}

/// Which threshold `±m` an edge expansion refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Plus,
    Minus,
}

impl Edge {
    pub fn sign(self) -> f64 {
        match self {
            Edge::Plus => 1.0,
            Edge::Minus => -1.0,
        }
    }

    /// The spinor spanning the range of the leading edge coefficient.
    pub fn resonance_vector(self) -> [f64; 2] {
        match self {
            Edge::Plus => [1.0, 1.0],
            Edge::Minus => [1.0, -1.0],
        }
    }
}

/// Measured kernel coefficients of `𝓡₀(ω) ≈ A₀ (ω∓m)^{-1/2} + A₁(r) + …` near `±m`,
/// with `A₁(r) = a1_abs |r| + a1_sgn sgn(r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeExpansion {
    pub edge: Edge,
    pub a0: Mat2,
    pub a1_abs: Mat2,
    pub a1_sgn: Mat2,
    pub fit_residual: f64,
}

impl EdgeExpansion {
    pub fn a1(&self, r: f64) -> Mat2 {
        self.a1_abs * c(r.abs()) + self.a1_sgn * c(if r > 0.0 { 1.0 } else if r < 0.0 { -1.0 } else { 0.0 })
    }
}

/// Matrix kernel `𝓡₀(ω)(x_i, x_j)` read off the discrete operator.
fn dirac_kernel_entry(k: &SchrodingerKernel, omega: C64, m: f64, i: usize, j: usize) -> Mat2 {
    let kv = k.value_entry(i, j) / k.grid().spacing();
    let kd = k.deriv_entry(i, j) / k.grid().spacing();
    let a = dirac::alpha();
    let b = dirac::beta();
    a * (I * kd) + (b * c(m) + Mat2::identity() * omega) * kv
}

fn richardson(values: &[Mat2]) -> (Mat2, f64) {
    // values[k] at s_k = s_0 / 2^k, model A + B s + C s² + …
    let mut table: Vec<Mat2> = values.to_vec();
    let mut last_change = f64::INFINITY;
    let mut p = 2.0;
    for _ in 1..values.len() {
        let next: Vec<Mat2> = table.windows(2).map(|w| (w[1] * c(p) - w[0]) / c(p - 1.0)).collect();
        if next.len() >= 2 {
            last_change = (next[next.len() - 1] - next[next.len() - 2]).norm();
        }
        table = next;
        p *= 2.0;
    }
    (table[0], last_change)
}

/// Extract `A₀` and the `A₁` kernel at the threshold `edge·m` from `𝓡₀(±(m + s²) + i0)`.
pub fn edge_expansion_free(edge: Edge, m: f64, sigma: f64) -> Result<EdgeExpansion> {
    if !(sigma > 2.5) {
        return Err(Error::InvalidParameter(format!("edge expansion needs sigma > 5/2, got {sigma}")));
    }
    let grid = Grid::new(8.0, 64)?;
    let h = grid.spacing();
    let o = grid.origin_index();
    let offsets = [4usize, 8];
    let s_values: Vec<f64> = (0..6).map(|k| 0.05 / 2f64.powi(k)).collect();
    let mut scaled: Vec<Vec<Mat2>> = vec![Vec::new(); 2 * offsets.len()];
    let mut raw: Vec<Vec<Mat2>> = vec![Vec::new(); 2 * offsets.len()];
    for &s in &s_values {
        let omega = edge.sign() * (m + s * s);
        let point = SpectralPoint::boundary(omega, Side::Above);
        let k = SchrodingerKernel::for_point(grid, &point, m)?;
        for (slot, &d) in offsets.iter().enumerate() {
            for (sgn, idx) in [(1usize, 2 * slot), (0usize, 2 * slot + 1)] {
                let i = if sgn == 1 { o + d } else { o - d };
                let e = dirac_kernel_entry(&k, c(omega), m, i, o);
                scaled[idx].push(e * c(s));
                raw[idx].push(e);
            }
        }
    }
    let a0_fits: Vec<(Mat2, f64)> = scaled.iter().map(|v| richardson(v)).collect();
    let a0 = a0_fits.iter().fold(Mat2::zeros(), |acc, (a, _)| acc + a) / c(a0_fits.len() as f64);
    let mut spread = a0_fits.iter().map(|(a, _)| (a - a0).norm()).fold(0.0, f64::max);
    let b: Vec<Mat2> = raw
        .iter()
        .map(|v| {
            let rem: Vec<Mat2> = v.iter().zip(&s_values).map(|(e, &s)| e - a0 / c(s)).collect();
            richardson(&rem).0
        })
        .collect();
    let r1 = offsets[0] as f64 * h;
    let a1_sgn = (b[0] - b[1]) / c(2.0);
    let a1_abs = (b[0] + b[1]) / c(2.0 * r1);
    let r2 = offsets[1] as f64 * h;
    let model = |r: f64| a1_abs * c(r.abs()) + a1_sgn * c(r.signum());
    spread = spread.max((b[2] - model(r2)).norm()).max((b[3] - model(-r2)).norm());
    Ok(EdgeExpansion { edge, a0, a1_abs, a1_sgn, fit_residual: spread })
}

/// Least-squares slope of `log y` against `log x`.
pub(crate) fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Fitted exponent of `||𝓡₀(±(m + s²) + i0)||_{σ→-σ}` against `s`.
pub fn free_edge_power(edge: Edge, m: f64, sigma: f64, grid: Grid, s_values: &[f64]) -> Result<(f64, Vec<f64>)> {
    let probe = SpinorField::zeros(grid);
    let mut norms = Vec::with_capacity(s_values.len());
    for &s in s_values {
        let p = SpectralPoint::boundary(edge.sign() * (m + s * s), Side::Above);
        let fwd = SchrodingerKernel::for_point(grid, &p, m)?;
        let adj = SchrodingerKernel::for_point(grid, &p.conj(), m)?;
        let (w_f, w_a) = (p.omega, p.conj().omega);
        let op = FnOperator::new(
            |f: &SpinorField| Ok(free_dirac_with_kernel(&fwd, w_f, f, m)),
            |f: &SpinorField| Ok(free_dirac_with_kernel(&adj, w_a, f, m)),
        );
        norms.push(dirac::norm_value(dirac::weighted_operator_norm(&op, &probe, sigma, PowerIteration::default()))?);
    }
    Ok((loglog_slope(s_values, &norms), norms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::MatrixPotential;

    fn gaussian(grid: Grid) -> SpinorField {
        SpinorField::from_fn(grid, |x| [c((-x * x).exp()), C64::new(0.0, 0.5) * (-(x - 0.5).powi(2)).exp()])
    }

    /// Exact periodic solution of `(-∂² - ζ) u = f` for `ζ` off `[0, ∞)`.
    fn spectral_inverse(f: &[C64], grid: &Grid, zeta: C64) -> Vec<C64> {
        let sym: Vec<C64> = grid.wavenumbers().iter().map(|&k| 1.0 / (k * k - zeta)).collect();
        fourier::apply_multiplier(f, &sym)
    }

    #[test]
    fn kernel_examples() {
        let z = c(-1.0);
        assert!((free_schrodinger_kernel(z, Side::Interior, 0.0).unwrap() - c(0.5)).norm() < 1e-15);
        assert!((free_schrodinger_kernel(z, Side::Interior, 2.0).unwrap() - c((-2.0f64).exp() / 2.0)).norm() < 1e-15);
        for r in [0.0, 0.7, 3.0, 11.0] {
            assert!((free_schrodinger_kernel(c(1.0), Side::Above, r).unwrap().norm() - 0.5).abs() < 1e-15);
        }
        assert_eq!(free_schrodinger_kernel(c(0.0), Side::Above, 1.0), Err(Error::AtThreshold));
    }

    #[test]
    fn corrected_kernel_is_sixth_order() {
        let zeta = C64::new(-1.0, 0.3);
        let err = |n: usize| {
            let g = Grid::new(20.0, n).unwrap();
            let f: Vec<C64> = g.nodes().iter().map(|&x| c((-x * x).exp() * (1.0 + x))).collect();
            let k = SchrodingerKernel::new(g, branch_sqrt(zeta, Side::Interior).unwrap().value).unwrap();
            let got = k.apply(&f);
            let want = spectral_inverse(&f, &g, zeta);
            let dgot = k.apply_derivative(&f);
            let dwant = fourier::derivative(&want, &g);
            let e1 = got.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            let e2 = dgot.iter().zip(&dwant).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            (e1, e2)
        };
        let (a1, a2) = err(80);
        let (b1, b2) = err(160);
        assert!(a1 / b1 > 40.0 && a2 / b2 > 40.0, "{a1} {b1} {a2} {b2}");
        assert!(b1 < 1e-5 && b2 < 1e-4, "{a1} {b1} {a2} {b2}");
    }

    #[test]
    fn point_source_limit() {
        let g = Grid::new(20.0, 800).unwrap();
        let h = g.spacing();
        let mut f = SpinorField::zeros(g);
        let o = g.origin_index();
        f.component_mut(0)[o] = c(1.0 / h);
        let u = free_schrodinger_resolvent_apply(c(-1.0), Side::Interior, &f).unwrap();
        for (i, x) in g.nodes().into_iter().enumerate() {
            if x.abs() > 0.5 && x.abs() < 10.0 {
                assert!((u.component(0)[i] - c((-x.abs()).exp() / 2.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn schrodinger_residual() {
        let g = Grid::new(20.0, 256).unwrap();
        let f = gaussian(g);
        let zeta = c(-2.0);
        let u = free_schrodinger_resolvent_apply(zeta, Side::Interior, &f).unwrap();
        let lap = u.derivative().derivative();
        let res = &(&(-&lap) - &u.scale(zeta)) - &f;
        assert!(res.norm() / f.norm() < 1e-3);
    }

    #[test]
    fn boundary_sides_conjugate() {
        let g = Grid::new(20.0, 256).unwrap();
        let f = SpinorField::from_fn(g, |x| [c((-x * x).exp()), c(x * (-x * x).exp())]);
        let a = free_schrodinger_resolvent_apply(c(4.0), Side::Above, &f).unwrap();
        let b = free_schrodinger_resolvent_apply(c(4.0), Side::Below, &f).unwrap();
        let bc = b.map_components(|v| v.iter().map(|z| z.conj()).collect());
        assert!(a.distance(&bc) < 1e-13);
    }

    #[test]
    fn dirac_resolvent_in_gap() {
        let g = Grid::new(20.0, 256).unwrap();
        let f = SpinorField::from_fn(g, |x| [c((-x * x).exp()), c(0.3 * (-(x + 1.0).powi(2)).exp())]);
        let p = SpectralPoint::interior(c(0.0));
        let u = free_dirac_resolvent_apply(&p, &f, 1.0).unwrap();
        let hu = dirac::apply_dirac(&u, &MatrixPotential::zero(g), 1.0).unwrap();
        assert!((&hu - &f).norm() / f.norm() < 1e-3);
        assert!(u.inner(&f).unwrap().im.abs() < 1e-8);
    }

    #[test]
    fn dirac_resolvent_continuity_and_identity() {
        let g = Grid::new(25.0, 512).unwrap();
        let f = gaussian(g);
        let w1 = SpectralPoint::interior(C64::new(0.0, 0.3));
        let w2 = SpectralPoint::interior(C64::new(1e-4, 0.3));
        let a = free_dirac_resolvent_apply(&w1, &f, 1.0).unwrap();
        let b = free_dirac_resolvent_apply(&w2, &f, 1.0).unwrap();
        let d = a.distance(&b);
        assert!(d > 1e-6 && d < 1e-3, "{d}");
        let w3 = SpectralPoint::interior(C64::new(0.4, 0.8));
        let r3 = free_dirac_resolvent_apply(&w3, &f, 1.0).unwrap();
        let lhs = &a - &r3;
        let rhs = free_dirac_resolvent_apply(&w1, &r3, 1.0).unwrap().scale(w1.omega - w3.omega);
        assert!(lhs.distance(&rhs) < 1e-6 * lhs.norm(), "{}", lhs.distance(&rhs) / lhs.norm());
    }

    #[test]
    fn kg_values() {
        assert_eq!(kg_fundamental(3.0, 2.0, 1.0).unwrap(), 0.0);
        assert!((kg_fundamental(0.0, 1e-9, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((kg_fundamental(2.0, 2.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((kg_fundamental(0.0, 3.0, 2.0).unwrap() - 0.5 * j0_unchecked(6.0)).abs() < 1e-15);
        assert!(kg_fundamental(0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn fourier_flow_basics() {
        let g = Grid::new(30.0, 256).unwrap();
        let f = gaussian(g);
        assert!(free_evolve_fourier(&f, 0.0, 1.0).distance(&f) < 1e-14);
        let n0 = f.norm();
        assert!((free_evolve_fourier(&f, 50.0, 1.0).norm() - n0).abs() < 1e-12 * n0);
        // positive-energy plane wave
        let k = 4.0 * std::f64::consts::PI / 30.0;
        let e = (k * k + 1.0).sqrt();
        let u = [c(k + e), c(1.0)];
        let pw = SpinorField::from_fn(g, |x| {
            let p = C64::new(0.0, k * x).exp();
            [u[0] * p, u[1] * p]
        });
        let t = 3.7;
        let out = free_evolve_fourier(&pw, t, 1.0);
        let want = pw.scale((-I * e * t).exp());
        assert!(out.distance(&want) < 1e-11 * pw.norm());
    }

    #[test]
    fn kernel_route_massless_transport() {
        let g = Grid::new(30.0, 512).unwrap();
        let f = gaussian(g);
        let out = free_propagator_kernel_apply(&f, 5.0, 0.0).unwrap();
        let want = SpinorField::from_fn(g, |x| [c((-(x - 5.0).powi(2)).exp()), C64::new(0.0, 0.5) * (-(x + 5.0 - 0.5).powi(2)).exp()]);
        assert!(out.distance(&want) < 1e-10);
    }

    #[test]
    fn kernel_route_matches_fourier() {
        let g = Grid::new(40.0, 1600).unwrap();
        let f = gaussian(g);
        for t in [1.0, 10.0, 7.333, 0.07] {
            let a = free_propagator_kernel_apply(&f, t, 1.0).unwrap();
            let b = free_evolve_fourier(&f, t, 1.0);
            assert!(a.distance(&b) / f.norm() < 1e-4, "t={t}: {}", a.distance(&b) / f.norm());
        }
    }

    #[test]
    fn band_split_is_complete() {
        let g = Grid::new(30.0, 256).unwrap();
        let f = gaussian(g);
        let spec = CutoffSpec::new(1.0, 0.5).unwrap();
        let l = free_band_propagator(&f, 4.0, &spec, Band::Low);
        let h = free_band_propagator(&f, 4.0, &spec, Band::High);
        assert!((&l + &h).distance(&free_evolve_fourier(&f, 4.0, 1.0)) < 1e-12);
        let k = 24.0 * std::f64::consts::PI / 30.0;
        let pw = SpinorField::from_fn(g, |x| [C64::new(0.0, k * x).exp(), c(0.0)]);
        assert!(free_band_propagator(&pw, 2.0, &spec, Band::Low).norm() < 1e-12);
    }

    #[test]
    fn edge_constants() {
        let m = 1.3;
        let plus = edge_expansion_free(Edge::Plus, m, 3.0).unwrap();
        let gamma = plus.a0[(0, 0)];
        assert!(gamma.re.abs() < 1e-6 * gamma.norm());
        let pattern = Mat2::new(c(1.0), c(1.0), c(1.0), c(1.0)) * gamma;
        assert!((plus.a0 - pattern).norm() < 1e-3 * gamma.norm());
        assert!((gamma - I * m.sqrt() / (2.0 * 2f64.sqrt())).norm() < 1e-5);
        let minus = edge_expansion_free(Edge::Minus, m, 3.0).unwrap();
        let gm = minus.a0[(0, 1)];
        let pattern = Mat2::new(c(-1.0), c(1.0), c(1.0), c(-1.0)) * gm;
        assert!((minus.a0 - pattern).norm() < 1e-3 * gm.norm());
        let want_abs = (dirac::beta() + Mat2::identity()) * c(-m / 2.0);
        let want_sgn = dirac::alpha() * (-0.5 * I);
        assert!((plus.a1_abs - want_abs).norm() < 1e-4, "{}", plus.a1_abs);
        assert!((plus.a1_sgn - want_sgn).norm() < 1e-4, "{}", plus.a1_sgn);
        assert!(plus.fit_residual < 1e-4);
    }
}
