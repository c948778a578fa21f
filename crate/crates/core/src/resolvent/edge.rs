//! Threshold asymptotics of the perturbed resolvent in the nonsingular case.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{Frame, PerturbedDirac, ResolventCombination};
use crate::dirac::{norm_value, weighted_operator_norm, PowerIteration};
use crate::error::{Error, Result};
use crate::field::SpinorField;
use crate::fit::power_law_fit;
use crate::free::{Edge, SpectralPoint};

/// Fitted exponents of `𝓡` and its first two derivatives near `±m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeExponents {
    pub edge: Edge,
    pub sigma: f64,
    /// Distances `δ` from the threshold, approached from inside the gap.
    pub deltas: Vec<f64>,
    /// `||𝓡(ω_k) - 𝓡(ω_{k+1})||` for consecutive `δ`.
    pub increments: Vec<f64>,
    pub first_derivative: Vec<f64>,
    pub second_derivative: Vec<f64>,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    /// RMS log residuals of the three fits.
    pub residuals: [f64; 3],
}

/// Approach distances used by [`edge_asymptotics_perturbed`].
pub fn default_deltas() -> Vec<f64> {
    (0..5).map(|k| 0.02 / 4f64.powi(k)).collect()
}

fn gap_point(edge: Edge, m: f64, delta: f64) -> SpectralPoint {
    SpectralPoint::interior(C64::new(edge.sign() * (m - delta), 0.0))
}

fn weighted_norm_of(ctx: &PerturbedDirac, terms: &[(C64, SpectralPoint)], sigma: f64) -> Result<f64> {
    let op = ResolventCombination::new(ctx, terms, Frame::Original)?;
    let probe = SpinorField::zeros(*ctx.grid());
    norm_value(weighted_operator_norm(&op, &probe, sigma, PowerIteration::default()))
}

/// Exponents of `||𝓡(ω) - 𝓡(±m)||`, `||𝓡'(ω)||`, `||𝓡''(ω)||` in `L²_σ → L²_{-σ}` against
/// `δ = |ω ∓ m|`, along real `ω` in the gap.
///
/// The threshold value itself is never evaluated: the first exponent comes from the Cauchy
/// differences between consecutive `δ` (same power), the derivatives from central differences
/// with step `δ/10`.
pub fn edge_asymptotics_perturbed(ctx: &PerturbedDirac, edge: Edge, sigma: f64, deltas: &[f64]) -> Result<EdgeExponents> {
    if !(sigma > 2.5) {
        return Err(Error::InvalidParameter(format!("edge asymptotics need sigma > 5/2, got {sigma}")));
    }
    if deltas.len() < 3 || deltas.windows(2).any(|w| !(w[1] < w[0])) || deltas[0] >= ctx.mass() {
        return Err(Error::InvalidParameter("deltas must be decreasing, at least three, below m".into()));
    }
    let m = ctx.mass();
    let one = C64::new(1.0, 0.0);
    let mut increments = Vec::new();
    for w in deltas.windows(2) {
        increments.push(weighted_norm_of(ctx, &[(one, gap_point(edge, m, w[0])), (-one, gap_point(edge, m, w[1]))], sigma)?);
    }
    let mut first = Vec::new();
    let mut second = Vec::new();
    for &d in deltas {
        let eta = d / 10.0;
        let (lo, mid, hi) = (gap_point(edge, m, d + eta), gap_point(edge, m, d), gap_point(edge, m, d - eta));
        let c1 = C64::new(1.0 / (2.0 * eta), 0.0);
        first.push(weighted_norm_of(ctx, &[(c1, hi), (-c1, lo)], sigma)?);
        let c2 = C64::new(1.0 / (eta * eta), 0.0);
        second.push(weighted_norm_of(ctx, &[(c2, hi), (-2.0 * c2, mid), (c2, lo)], sigma)?);
    }
    let f0 = power_law_fit(&deltas[..deltas.len() - 1], &increments)?;
    let f1 = power_law_fit(deltas, &first)?;
    let f2 = power_law_fit(deltas, &second)?;
    Ok(EdgeExponents {
        edge,
        sigma,
        deltas: deltas.to_vec(),
        increments,
        first_derivative: first,
        second_derivative: second,
        p0: f0.exponent,
        p1: f1.exponent,
        p2: f2.exponent,
        residuals: [f0.residual, f1.residual, f2.residual],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::potential::PotentialSpec;

    #[test]
    fn rejects_bad_input() {
        let grid = Grid::new(20.0, 128).unwrap();
        let v = PotentialSpec::gaussian_offdiag(0.3).build(grid).unwrap();
        let ctx = PerturbedDirac::new(&v, 1.0).unwrap();
        assert!(edge_asymptotics_perturbed(&ctx, Edge::Plus, 2.0, &default_deltas()).is_err());
        assert!(edge_asymptotics_perturbed(&ctx, Edge::Plus, 3.0, &[0.1, 0.2, 0.05]).is_err());
    }
}
