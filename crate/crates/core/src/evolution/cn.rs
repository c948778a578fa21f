//! Crank–Nicolson stepping of `i∂ₜψ = Hψ`.
//!
//! `(I + iδH) ψⁿ⁺¹ = (I - iδH) ψⁿ` with `δ = dt/2`. The free part `I + iδH₀` is diagonal in
//! Fourier space with inverse `(I - iδM(k)) / (1 + δ²E²)`, so the full system is solved by the
//! fixed point `ψ ← (I + iδH₀)⁻¹ (b - iδVψ)`, a contraction with factor `δ·max|V|`.

use num_complex::Complex64 as C64;

use crate::dirac::apply_dirac;
use crate::error::{Error, Result};
use crate::field::SpinorField;
use crate::fourier;
use crate::free::free_functional_calculus;
use crate::grid::Grid;
use crate::potential::MatrixPotential;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Relative change at which the inner fixed point stops.
pub const INNER_TOL: f64 = 1e-15;
pub const MAX_INNER: usize = 200;
/// Largest admissible contraction factor `δ·max|V|`.
pub const MAX_CONTRACTION: f64 = 0.5;

pub struct CnStepper {
    potential: MatrixPotential,
    mass: f64,
    dt: f64,
    k: Vec<f64>,
}

impl CnStepper {
    /// `dt` may be negative (backward flow).
    pub fn new(v: &MatrixPotential, m: f64, dt: f64) -> Result<Self> {
        if !(dt != 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be finite and nonzero, got {dt}")));
        }
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass must be >= 0, got {m}")));
        }
        let q = 0.5 * dt.abs() * v.max_norm();
        if q >= MAX_CONTRACTION {
            return Err(Error::InvalidParameter(format!("dt·max|V|/2 = {q:.3} too large for the inner iteration")));
        }
        let k = fourier::derivative_symbol(v.grid()).into_iter().map(|s| s.im).collect();
        Ok(CnStepper { potential: v.clone(), mass: m, dt, k })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        self.potential.grid()
    }

    /// `(I + iδH₀)⁻¹ f`.
    fn solve_free(&self, f: &SpinorField) -> SpinorField {
        let d = 0.5 * self.dt;
        let m = self.mass;
        let mut a = f.component(0).to_vec();
        let mut b = f.component(1).to_vec();
        fourier::forward(&mut a);
        fourier::forward(&mut b);
        for (j, &k) in self.k.iter().enumerate() {
            let s = 1.0 / (1.0 + d * d * (k * k + m * m));
            let (u, v) = (a[j], b[j]);
            a[j] = s * (u - I * d * (k * u + m * v));
            b[j] = s * (v - I * d * (m * u - k * v));
        }
        fourier::inverse(&mut a);
        fourier::inverse(&mut b);
        SpinorField::from_components(*f.grid(), a, b).expect("grid sizes preserved")
    }

    fn potential_term(&self, f: &SpinorField) -> SpinorField {
        let c = I * (0.5 * self.dt);
        f.map_points(|i, u| self.potential.at(i) * u * c)
    }

    /// One step in place; returns the number of inner iterations.
    pub fn step(&self, psi: &mut SpinorField) -> Result<usize> {
        let h = apply_dirac(psi, &self.potential, self.mass)?;
        let mut b = psi.clone();
        b.axpy(-I * (0.5 * self.dt), &h);
        let scale = b.norm().max(f64::MIN_POSITIVE);
        let mut x = psi.clone();
        if self.potential.is_zero() {
            *psi = self.solve_free(&b);
            return Ok(1);
        }
        let mut last = f64::INFINITY;
        for it in 1..=MAX_INNER {
            let next = self.solve_free(&(&b - &self.potential_term(&x)));
            let change = next.distance(&x) / scale;
            x = next;
            // stop at tolerance, or once rounding noise stops the contraction
            if change <= INNER_TOL || (change < 1e-13 && change >= 0.5 * last) {
                *psi = x;
                return Ok(it);
            }
            last = change;
        }
        Err(Error::SolverFailure(format!("inner iteration stalled at relative change {last:.3e}")))
    }

    /// Advance `steps` steps, calling `visit(n, ψₙ)` for `n = 0..=steps`.
    pub fn run(&self, psi0: &SpinorField, steps: usize, mut visit: impl FnMut(usize, &SpinorField) -> Result<()>) -> Result<SpinorField> {
        psi0.same_grid(&SpinorField::zeros(*self.grid()))?;
        let mut psi = psi0.clone();
        visit(0, &psi)?;
        for n in 1..=steps {
            self.step(&mut psi)?;
            visit(n, &psi)?;
        }
        Ok(psi)
    }
}

/// Step indices for `times`, which must be non-negative multiples of `|dt|`.
pub fn step_indices(times: &[f64], dt: f64) -> Result<Vec<usize>> {
    times
        .iter()
        .map(|&t| {
            let n = (t / dt.abs()).round();
            if t < 0.0 || (n * dt.abs() - t).abs() > 1e-9 * t.abs().max(1.0) {
                Err(Error::InvalidParameter(format!("sample time {t} is not a multiple of dt = {}", dt.abs())))
            } else {
                Ok(n as usize)
            }
        })
        .collect()
}

/// States at the sample times with norm diagnostics.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpinorField>,
    /// `max_n |‖ψₙ‖ - ‖ψ₀‖| / ‖ψ₀‖` over every step.
    pub norm_drift: f64,
    pub max_inner_iterations: usize,
}

impl Trajectory {
    pub fn weighted_norms(&self, sigma: f64) -> Vec<f64> {
        self.states.iter().map(|s| s.weighted_norm(-sigma, 0.0)).collect()
    }
}

/// `ψ(t)` at `times` (multiples of `dt`, any order).
pub fn evolve_crank_nicolson(psi0: &SpinorField, v: &MatrixPotential, m: f64, dt: f64, times: &[f64]) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let stepper = CnStepper::new(v, m, dt)?;
    let idx = step_indices(times, dt)?;
    let steps = idx.iter().copied().max().unwrap_or(0);
    let n0 = psi0.norm();
    let mut states = vec![SpinorField::zeros(*psi0.grid()); times.len()];
    let mut drift = 0.0f64;
    let mut psi = psi0.clone();
    let mut max_it = 0;
    for n in 0..=steps {
        if n > 0 {
            max_it = max_it.max(stepper.step(&mut psi)?);
        }
        if n0 > 0.0 {
            drift = drift.max((psi.norm() - n0).abs() / n0);
        }
        for (k, &i) in idx.iter().enumerate() {
            if i == n {
                states[k] = psi.clone();
            }
        }
    }
    Ok(Trajectory { times: times.to_vec(), states, norm_drift: drift, max_inner_iterations: max_it })
}

/// Phase `θ(λ)` with `e^{-iθ}` the Crank–Nicolson amplification over time `t`:
/// `(2/dt)·atan(λdt/2)·t`.
pub fn cn_phase(lambda: f64, t: f64, dt: f64) -> f64 {
    2.0 / dt * (0.5 * lambda * dt).atan() * t
}

/// The free flow exactly as Crank–Nicolson with step `dt` produces it at time `t`
/// (a multiple of `dt`). Negative `t` runs backward.
pub fn free_evolve_cn(psi: &SpinorField, t: f64, m: f64, dt: f64) -> SpinorField {
    free_functional_calculus(psi, m, |l| (-I * cn_phase(l, t, dt)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free::free_evolve_fourier;
    use crate::potential::PotentialSpec;

    fn packet(grid: Grid) -> SpinorField {
        SpinorField::from_fn(grid, |x| {
            let g = (-x * x / 8.0).exp();
            [C64::new(g, 0.0), C64::new(0.0, 0.5 * g) * C64::from_polar(1.0, 0.5 * x)]
        })
    }

    #[test]
    fn free_matches_cn_symbol_exactly() {
        let grid = Grid::new(40.0, 512).unwrap();
        let psi = packet(grid);
        let tr = evolve_crank_nicolson(&psi, &MatrixPotential::zero(grid), 1.0, 0.05, &[10.0]).unwrap();
        let exact = free_evolve_cn(&psi, 10.0, 1.0, 0.05);
        assert!(tr.states[0].distance(&exact) < 1e-11 * psi.norm());
    }

    #[test]
    fn second_order_in_dt() {
        let grid = Grid::new(40.0, 512).unwrap();
        let psi = packet(grid);
        let exact = free_evolve_fourier(&psi, 10.0, 1.0);
        let err = |dt: f64| {
            let tr = evolve_crank_nicolson(&psi, &MatrixPotential::zero(grid), 1.0, dt, &[10.0]).unwrap();
            tr.states[0].distance(&exact)
        };
        let ratio = err(0.04) / err(0.02);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn perturbed_flow_conserves_charge() {
        let grid = Grid::new(40.0, 512).unwrap();
        let v = PotentialSpec::FullHermitianGaussian { upper: 0.3, lower: -0.2, coupling: 0.5, phase: 0.7, width: 1.0 }
            .build(grid)
            .unwrap();
        let tr = evolve_crank_nicolson(&packet(grid), &v, 1.0, 0.02, &[0.0, 5.0, 20.0]).unwrap();
        assert!(tr.norm_drift < 1e-12, "{}", tr.norm_drift);
        assert_eq!(tr.states[0], packet(grid));
    }

    #[test]
    fn backward_step_inverts_forward() {
        let grid = Grid::new(20.0, 256).unwrap();
        let v = PotentialSpec::gaussian_offdiag(0.6).build(grid).unwrap();
        let f = CnStepper::new(&v, 1.0, 0.05).unwrap();
        let b = CnStepper::new(&v, 1.0, -0.05).unwrap();
        let psi = packet(grid);
        let mut x = psi.clone();
        for _ in 0..20 {
            f.step(&mut x).unwrap();
        }
        for _ in 0..20 {
            b.step(&mut x).unwrap();
        }
        assert!(x.distance(&psi) < 1e-12);
    }

    #[test]
    fn rejects_bad_steps() {
        let grid = Grid::new(20.0, 128).unwrap();
        let v = PotentialSpec::gaussian_offdiag(0.6).build(grid).unwrap();
        assert!(CnStepper::new(&v, 1.0, 0.0).is_err());
        assert!(CnStepper::new(&v, 1.0, 2.0).is_err());
        assert!(evolve_crank_nicolson(&packet(grid), &v, 1.0, 0.1, &[0.25]).is_err());
        assert!(step_indices(&[0.3, 0.6], 0.1).unwrap() == vec![3, 6]);
    }
}
