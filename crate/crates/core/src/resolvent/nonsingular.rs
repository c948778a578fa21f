//! Detection of threshold resonances at `±m` (the nonsingular condition `M± = 0`).

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{Frame, PerturbedDirac, ResolventCombination};
use crate::dirac::{norm_value, weighted_operator_norm, PowerIteration};
use crate::error::{Error, Result};
use crate::field::{Mat2, SpinorField};
use crate::free::{edge_expansion_free, Edge, EdgeExpansion, SpectralPoint};

/// Consecutive norm ratio below which the resolvent counts as bounded at the edge.
pub const BOUNDED_RATIO: f64 = 2.0;
/// Scaled smallest singular value above which the edge system has only the trivial solution.
pub const SIGMA_MIN_TOL: f64 = 1e-6;
pub const PROBE_EPS: [f64; 3] = [1e-1, 1e-2, 1e-3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Nonsingular,
    Singular,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Nonsingular => "NONSINGULAR",
            Verdict::Singular => "SINGULAR",
            Verdict::Indeterminate => "INDETERMINATE",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeProbe {
    pub edge: Edge,
    pub eps: Vec<f64>,
    /// `||𝓡(±m + iε)||_{σ→-σ}` per `ε`.
    pub norms: Vec<f64>,
    pub ratios: Vec<f64>,
    pub bounded: bool,
    /// Smallest singular value of the scaled edge system.
    pub sigma_min: f64,
    pub trivial_kernel: bool,
    pub edge_fit_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonsingularReport {
    pub verdict: Verdict,
    pub sigma: f64,
    pub boundedness_nonsingular: bool,
    pub algebraic_nonsingular: bool,
    pub edges: Vec<EdgeProbe>,
    pub diagnostic: Option<String>,
}

fn boundedness(ctx: &PerturbedDirac, edge: Edge, sigma: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let probe = SpinorField::zeros(*ctx.grid());
    let mut norms = Vec::with_capacity(PROBE_EPS.len());
    for &e in &PROBE_EPS {
        let p = SpectralPoint::interior(C64::new(edge.sign() * ctx.mass(), e));
        let op = ResolventCombination::single(ctx, p, Frame::Original)?;
        norms.push(norm_value(weighted_operator_norm(&op, &probe, sigma, PowerIteration::default()))?);
    }
    let ratios = norms.windows(2).map(|w| w[1] / w[0]).collect();
    Ok((norms, ratios))
}

/// Smallest singular value of the system for `(ψ|_S, c)`:
/// `ψ(x_a) + Σ_b h A₁(x_a - x_b) V_b ψ_b - c v = 0`, `A₀ Σ_b h V_b ψ_b = 0`,
/// rows of the constraint and all columns scaled to unit norm.
fn edge_system_sigma_min(ctx: &PerturbedDirac, ex: &EdgeExpansion) -> f64 {
    let v = ctx.potential();
    let grid = v.grid();
    let h = grid.spacing();
    let s = v.support(super::lippmann::SUPPORT_TOL);
    let n = s.len();
    let rv = ex.edge.resonance_vector();
    let rows = 2 * n + 2;
    let cols = 2 * n + 1;
    let mut a = Mat::<C64>::zeros(rows, cols);
    for (ia, &xa) in s.iter().enumerate() {
        for (ib, &xb) in s.iter().enumerate() {
            let blk: Mat2 = ex.a1(grid.node(xa) - grid.node(xb)) * v.at(xb) * C64::new(h, 0.0);
            for r in 0..2 {
                for c in 0..2 {
                    let mut e = blk[(r, c)];
                    if ia == ib && r == c {
                        e += 1.0;
                    }
                    a.write(2 * ia + r, 2 * ib + c, e);
                }
            }
        }
        for r in 0..2 {
            a.write(2 * ia + r, 2 * n, C64::new(-rv[r], 0.0));
        }
    }
    for (ib, &xb) in s.iter().enumerate() {
        let blk: Mat2 = ex.a0 * v.at(xb) * C64::new(h, 0.0);
        for r in 0..2 {
            for c in 0..2 {
                a.write(2 * n + r, 2 * ib + c, blk[(r, c)]);
            }
        }
    }
    for r in 2 * n..rows {
        let norm: f64 = (0..cols).map(|c| a.read(r, c).norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for c in 0..cols {
                a.write(r, c, a.read(r, c) / norm);
            }
        }
    }
    for c in 0..cols {
        let norm: f64 = (0..rows).map(|r| a.read(r, c).norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for r in 0..rows {
            a.write(r, c, a.read(r, c) / norm);
        }
    }
    a.singular_values().into_iter().fold(f64::INFINITY, f64::min)
}

/// Two independent probes of the edge condition at both thresholds: growth of the weighted
/// resolvent norm as `ε → 0`, and the algebraic edge system built from the measured free
/// edge coefficients. The verdict is `Indeterminate` when they disagree.
pub fn check_nonsingular(ctx: &PerturbedDirac, sigma: f64) -> Result<NonsingularReport> {
    if !(sigma > 1.5) {
        return Err(Error::InvalidParameter(format!("nonsingularity check needs sigma > 3/2, got {sigma}")));
    }
    let mut edges = Vec::with_capacity(2);
    for edge in [Edge::Plus, Edge::Minus] {
        let (norms, ratios) = boundedness(ctx, edge, sigma)?;
        let bounded = ratios.iter().all(|&r| r < BOUNDED_RATIO);
        let ex = edge_expansion_free(edge, ctx.mass(), sigma.max(3.0))?;
        let sigma_min = edge_system_sigma_min(ctx, &ex);
        edges.push(EdgeProbe {
            edge,
            eps: PROBE_EPS.to_vec(),
            norms,
            ratios,
            bounded,
            sigma_min,
            trivial_kernel: sigma_min > SIGMA_MIN_TOL,
            edge_fit_residual: ex.fit_residual,
        });
    }
    let a = edges.iter().all(|e| e.bounded);
    let b = edges.iter().all(|e| e.trivial_kernel);
    let (verdict, diagnostic) = match (a, b) {
        (true, true) => (Verdict::Nonsingular, None),
        (false, false) => (Verdict::Singular, None),
        _ => (
            Verdict::Indeterminate,
            Some(format!("probes disagree: boundedness says {}, edge system says {}", nonsingular_word(a), nonsingular_word(b))),
        ),
    };
    Ok(NonsingularReport { verdict, sigma, boundedness_nonsingular: a, algebraic_nonsingular: b, edges, diagnostic })
}

fn nonsingular_word(ok: bool) -> &'static str {
    if ok {
        "nonsingular"
    } else {
        "singular"
    }
}
