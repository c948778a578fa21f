//! Scattering states `φ± = ψ₀ - i ∫₀^{±T} 𝒰(-τ) V ψ(τ) dτ` from one Crank–Nicolson pass.
//!
//! The free flow is the one the stepper itself produces (`e^{-it(2/dt)atan(H₀dt/2)}`), so the
//! remainder `ψ(t) - 𝒰(t)φ` does not pick up the stepper's phase error.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::cn::{free_evolve_cn, step_indices, CnStepper};
use crate::error::{Error, Result};
use crate::field::SpinorField;
use crate::fit::power_law_fit;
use crate::potential::MatrixPotential;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Plus,
    Minus,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Plus => 1.0,
            Direction::Minus => -1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScatteringState {
    pub direction: Direction,
    pub t_max: f64,
    /// `φ` at `T = t_max`.
    pub phi: SpinorField,
    /// Horizons `T` with `‖φ(T) - φ(T/2)‖`.
    pub tail_horizons: Vec<f64>,
    pub tail: Vec<f64>,
    /// `|τ|` and `‖V ψ(τ)‖ = ‖𝒰(-τ)Vψ(τ)‖` at the sample times.
    pub sample_times: Vec<f64>,
    pub integrand_norms: Vec<f64>,
    /// `‖ψ(τ) - 𝒰(τ)φ‖` at the sample times.
    pub remainder_norms: Vec<f64>,
    /// Log-log slope of the integrand norms over the second half of the samples.
    pub integrand_slope: Option<f64>,
    pub diagnostic: Option<String>,
}

/// Duhamel scattering state for data `ψ₀` (project onto the continuous subspace first).
///
/// `sample_times` are positive multiples of `dt`; `tail_horizons` are horizons `T ≤ t_max`
/// whose halves are also multiples of `dt`. The trapezoid in `τ` uses the step `dt`.
pub fn scattering_state(
    psi0: &SpinorField,
    v: &MatrixPotential,
    m: f64,
    direction: Direction,
    t_max: f64,
    dt: f64,
    sample_times: &[f64],
    tail_horizons: &[f64],
) -> Result<ScatteringState> {
    if !(dt > 0.0 && t_max > 0.0) {
        return Err(Error::InvalidParameter(format!("need dt > 0 and t_max > 0, got {dt}, {t_max}")));
    }
    if sample_times.iter().chain(tail_horizons).any(|&t| !(t > 0.0 && t <= t_max * (1.0 + 1e-12))) {
        return Err(Error::InvalidParameter("sample times and horizons must lie in (0, t_max]".into()));
    }
    let sgn = direction.sign();
    let stepper = CnStepper::new(v, m, sgn * dt)?;
    let steps = step_indices(&[t_max], dt)?[0];
    let sample_idx = step_indices(sample_times, dt)?;
    let half: Vec<f64> = tail_horizons.iter().map(|t| 0.5 * t).collect();
    let horizon_idx = step_indices(tail_horizons, dt)?;
    let half_idx = step_indices(&half, dt)?;

    let mut snapshots: Vec<(usize, SpinorField)> = Vec::new();
    let mut states = vec![SpinorField::zeros(*psi0.grid()); sample_times.len()];
    let mut integrand_norms = vec![0.0; sample_times.len()];
    let grid = *psi0.grid();
    let mut first = SpinorField::zeros(grid);
    let mut last = SpinorField::zeros(grid);
    let mut running = SpinorField::zeros(grid);
    let phi_at = |running: &SpinorField, first: &SpinorField, last: &SpinorField| {
        let mut trap = running.clone();
        trap.axpy(C64::new(-0.5, 0.0), first);
        trap.axpy(C64::new(-0.5, 0.0), last);
        let mut phi = psi0.clone();
        phi.axpy(-I * (sgn * dt), &trap);
        phi
    };
    stepper.run(psi0, steps, |n, psi| {
        let tau = sgn * n as f64 * dt;
        let vpsi = psi.map_points(|i, u| v.at(i) * u);
        let g = free_evolve_cn(&vpsi, -tau, m, dt);
        if n == 0 {
            first = g.clone();
        }
        running += &g;
        last = g;
        for (k, &i) in sample_idx.iter().enumerate() {
            if i == n {
                states[k] = psi.clone();
                integrand_norms[k] = vpsi.norm();
            }
        }
        if horizon_idx.contains(&n) || half_idx.contains(&n) {
            snapshots.push((n, phi_at(&running, &first, &last)));
        }
        Ok(())
    })?;
    let phi = phi_at(&running, &first, &last);
    let snap = |i: usize| snapshots.iter().find(|(n, _)| *n == i).map(|(_, f)| f);
    let tail: Vec<f64> = horizon_idx
        .iter()
        .zip(&half_idx)
        .map(|(&a, &b)| snap(a).expect("horizon recorded").distance(snap(b).unwrap_or(psi0)))
        .collect();
    let remainder_norms: Vec<f64> = sample_times
        .iter()
        .zip(&states)
        .map(|(&t, s)| s.distance(&free_evolve_cn(&phi, sgn * t, m, dt)))
        .collect();

    let pos: Vec<(f64, f64)> =
        sample_times.iter().zip(&integrand_norms).filter(|(_, n)| **n > 0.0).map(|(t, n)| (*t, *n)).collect();
    let integrand_slope = if pos.len() >= 6 {
        let tail_half = &pos[pos.len() / 2..];
        let (x, y): (Vec<f64>, Vec<f64>) = tail_half.iter().cloned().unzip();
        power_law_fit(&x, &y).ok().map(|f| f.exponent)
    } else {
        None
    };
    let diagnostic = match integrand_slope {
        Some(p) if p > -1.0 => Some(format!(
            "integrand ‖Vψ(τ)‖ decays like τ^{p:.2}, not integrably: singular case or t_max too short"
        )),
        _ => None,
    };
    Ok(ScatteringState {
        direction,
        t_max,
        phi,
        tail_horizons: tail_horizons.to_vec(),
        tail,
        sample_times: sample_times.to_vec(),
        integrand_norms,
        remainder_norms,
        integrand_slope,
        diagnostic,
    })
}

/// `r(t) = ψ(t) - Σ_j e^{-iω_j t} P_jψ₀ - 𝒰(t)φ`, with `𝒰` the Crank–Nicolson free flow.
pub fn scattering_remainder(
    psi_t: &SpinorField,
    t: f64,
    discrete: &[(f64, SpinorField)],
    phi: &SpinorField,
    m: f64,
    dt: f64,
) -> SpinorField {
    let mut r = psi_t - &free_evolve_cn(phi, t, m, dt);
    for (w, p) in discrete {
        r.axpy(-(-I * w * t).exp(), p);
    }
    r
}
