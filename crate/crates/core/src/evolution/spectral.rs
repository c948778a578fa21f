//! `e^{-itH}ψ₀` from the spectral representation: discrete part through the Riesz projectors,
//! continuous part as a frequency integral of the resolvent jump across `Γ`.

use gauss_quad::GaussLegendre;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpinorField;
use crate::fourier;
use crate::grid::Grid;
use crate::resolvent::{boundary, Frame, PerturbedDirac, SpectralData};
use crate::special::{CutoffSpec, Side};

const I: C64 = C64 { re: 0.0, im: 1.0 };
const GL_ORDER: usize = 10;

/// Frequency quadrature on `Γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Truncation `|ω| ≤ omega_max`; derived from the Fourier content of `ψ₀` when absent.
    pub omega_max: Option<f64>,
    /// Fixed node density per unit `ω`; when absent, panels adapt to the phase of `e^{-iωt}`
    /// and of the outgoing waves `e^{ik|x|}` across the grid.
    pub nodes_per_unit: Option<f64>,
    /// `ω = ±(m + s²)` on `m ≤ |ω| ≤ m + edge_window`.
    pub edge_substitution: bool,
    pub edge_window: f64,
    /// Largest phase change of the integrand across one 10-node panel.
    pub phase_per_panel: f64,
    /// Repeat at half density and report the relative change.
    pub check: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            omega_max: None,
            nodes_per_unit: None,
            edge_substitution: true,
            edge_window: 0.25,
            phase_per_panel: 8.0,
            check: false,
        }
    }
}

impl QuadratureConfig {
    fn halved(&self) -> Self {
        QuadratureConfig {
            nodes_per_unit: self.nodes_per_unit.map(|n| 0.5 * n),
            phase_per_panel: 2.0 * self.phase_per_panel,
            check: false,
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyNode {
    pub omega: f64,
    pub weight: f64,
}

fn gl_panel(out: &mut Vec<(f64, f64)>, rule: &GaussLegendre, a: f64, b: f64) {
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    for &(x, w) in rule.as_node_weight_pairs() {
        out.push((c + r * x, r * w));
    }
}

/// Nodes on `start ≤ |ω| ≤ omega_max` for both signs. `reach` is the largest `|t| + |x|` the
/// integrand must resolve. The edge substitution is only used when `start == m`.
pub fn frequency_nodes(m: f64, start: f64, omega_max: f64, reach: f64, cfg: &QuadratureConfig) -> Result<Vec<FrequencyNode>> {
    if !(start >= m && omega_max > start) {
        return Err(Error::InvalidParameter(format!("frequency range [{start}, {omega_max}] must lie above m = {m}")));
    }
    if !(cfg.phase_per_panel > 0.0) || cfg.nodes_per_unit.is_some_and(|n| !(n > 0.0)) {
        return Err(Error::InvalidParameter("quadrature density must be positive".into()));
    }
    let rule = GaussLegendre::new(GL_ORDER.try_into().expect("nonzero order"));
    let mut pos: Vec<(f64, f64)> = Vec::new();
    let mut lo = start;
    if start == m && cfg.edge_substitution {
        let a = cfg.edge_window.min(omega_max - m);
        let sa = a.sqrt();
        let panels = match cfg.nodes_per_unit {
            Some(n) => (2.0 * a * n / GL_ORDER as f64).ceil(),
            None => {
                // phase rate in s: 2s·t from the time factor, dk/ds·|x| from the outgoing wave
                let rate = 2.0 * sa * reach + reach * ((2.0 * m + a).sqrt() + a / (2.0 * m).sqrt());
                (sa * rate / cfg.phase_per_panel).ceil()
            }
        }
        .max(1.0) as usize;
        let mut s_nodes = Vec::new();
        for p in 0..panels {
            gl_panel(&mut s_nodes, &rule, sa * p as f64 / panels as f64, sa * (p + 1) as f64 / panels as f64);
        }
        pos.extend(s_nodes.into_iter().map(|(s, w)| (m + s * s, 2.0 * s * w)));
        lo = m + a;
    }
    while lo < omega_max * (1.0 - 1e-14) {
        let width = match cfg.nodes_per_unit {
            Some(n) => GL_ORDER as f64 / n,
            None => {
                let k = (lo * lo - m * m).sqrt().max(1e-3 * m);
                cfg.phase_per_panel / (reach * (1.0 + lo / k))
            }
        };
        let hi = (lo + width).min(omega_max);
        gl_panel(&mut pos, &rule, lo, hi);
        lo = hi;
    }
    let mut nodes: Vec<FrequencyNode> = pos.iter().rev().map(|&(o, w)| FrequencyNode { omega: -o, weight: w }).collect();
    nodes.extend(pos.iter().map(|&(o, w)| FrequencyNode { omega: o, weight: w }));
    Ok(nodes)
}

/// Smallest `|ω|` beyond which `ψ₀` has no Fourier content above `1e-12` of its peak,
/// plus a unit margin, capped at the grid's resolution.
pub fn default_omega_max(psi0: &SpinorField, m: f64) -> f64 {
    let grid = psi0.grid();
    let ks = grid.wavenumbers();
    let mut amp = vec![0.0f64; ks.len()];
    for c in 0..2 {
        let mut buf = psi0.component(c).to_vec();
        fourier::forward(&mut buf);
        for (a, b) in amp.iter_mut().zip(&buf) {
            *a = a.max(b.norm());
        }
    }
    let peak = amp.iter().cloned().fold(0.0, f64::max);
    let kc = ks.iter().zip(&amp).filter(|(_, a)| **a > 1e-12 * peak).map(|(k, _)| k.abs()).fold(0.0, f64::max);
    let knyq = std::f64::consts::PI / grid.spacing();
    ((kc * kc + m * m).sqrt() + 1.0).min((knyq * knyq + m * m).sqrt())
}

/// `Σ_nodes w·c_j(ω)·e^{-iωt}/(2πi) · J_j(ω)` for every channel `j` and time.
pub(crate) fn integrate_channels(
    grid: Grid,
    nodes: &[FrequencyNode],
    times: &[f64],
    channels: usize,
    weight: impl Fn(usize, f64) -> f64,
    mut jumps: impl FnMut(f64) -> Result<Vec<SpinorField>>,
) -> Result<Vec<Vec<SpinorField>>> {
    let mut out = vec![vec![SpinorField::zeros(grid); times.len()]; channels];
    let norm = 1.0 / (2.0 * std::f64::consts::PI) * -I;
    for node in nodes {
        let js = jumps(node.omega)?;
        debug_assert_eq!(js.len(), channels);
        for (c, j) in js.iter().enumerate() {
            let w = node.weight * weight(c, node.omega);
            if w == 0.0 {
                continue;
            }
            for (ti, &t) in times.iter().enumerate() {
                out[c][ti].axpy(norm * w * (-I * node.omega * t).exp(), j);
            }
        }
    }
    Ok(out)
}

/// Band-resolved spectral evolution.
#[derive(Clone, Debug)]
pub struct SpectralEvolution {
    pub times: Vec<f64>,
    /// Discrete plus continuous part.
    pub full: Vec<SpinorField>,
    /// Continuous part weighted by `l(ω)`.
    pub low: Vec<SpinorField>,
    /// Continuous part weighted by `h(ω)`.
    pub high: Vec<SpinorField>,
    /// `Σ e^{-iω_j t} P_j ψ₀`.
    pub discrete: Vec<SpinorField>,
    pub omega_max: f64,
    pub node_count: usize,
    /// Largest relative change of `full` when the node density is halved.
    pub quadrature_change: Option<f64>,
}

impl SpectralEvolution {
    pub fn continuous(&self) -> Vec<SpinorField> {
        self.full.iter().zip(&self.discrete).map(|(f, d)| f - d).collect()
    }
}

fn continuous_integral(
    ctx: &PerturbedDirac,
    psi0: &SpinorField,
    cutoff: &CutoffSpec,
    times: &[f64],
    omega_max: f64,
    quad: &QuadratureConfig,
) -> Result<(Vec<Vec<SpinorField>>, usize)> {
    let m = ctx.mass();
    let reach = times.iter().fold(0.0f64, |a, t| a.max(t.abs())) + ctx.grid().half_width();
    let nodes = frequency_nodes(m, m, omega_max, reach, quad)?;
    let out = integrate_channels(
        *psi0.grid(),
        &nodes,
        times,
        3,
        |c, w| match c {
            0 => 1.0,
            1 => cutoff.l(w),
            _ => cutoff.h(w),
        },
        |w| {
            let up = ctx.at(boundary(w, Side::Above))?.apply(psi0, Frame::Original);
            let down = ctx.at(boundary(w, Side::Below))?.apply(psi0, Frame::Original);
            let j = &up - &down;
            Ok(vec![j.clone(), j.clone(), j])
        },
    )?;
    Ok((out, nodes.len()))
}

/// `ψ(t) = Σ_j e^{-iω_j t} P_j ψ₀ + (1/2πi) ∫_Γ w(ω) e^{-iωt} [𝓡(ω+i0) - 𝓡(ω-i0)] ψ₀ dω`
/// for `w ∈ {1, l, h}` at once.
pub fn evolve_spectral(
    ctx: &PerturbedDirac,
    data: &SpectralData,
    psi0: &SpinorField,
    cutoff: &CutoffSpec,
    times: &[f64],
    quad: &QuadratureConfig,
) -> Result<SpectralEvolution> {
    psi0.same_grid(&SpinorField::zeros(*ctx.grid()))?;
    let m = ctx.mass();
    if (cutoff.m - m).abs() > 1e-12 * m {
        return Err(Error::InvalidParameter(format!("cutoff mass {} differs from m = {m}", cutoff.m)));
    }
    let omega_max = quad.omega_max.unwrap_or_else(|| default_omega_max(psi0, m).max(m + 4.0 * cutoff.eps + 1.0));
    if !(omega_max > m + 4.0 * cutoff.eps) {
        return Err(Error::InvalidParameter(format!("omega_max = {omega_max} must exceed m + 4ε = {}", m + 4.0 * cutoff.eps)));
    }
    let (cont, node_count) = continuous_integral(ctx, psi0, cutoff, times, omega_max, quad)?;
    let projected: Vec<(f64, SpinorField)> = data.projectors.iter().map(|p| (p.omega, p.apply(psi0))).collect();
    let discrete: Vec<SpinorField> = times
        .iter()
        .map(|&t| {
            let mut d = SpinorField::zeros(*psi0.grid());
            for (w, p) in &projected {
                d.axpy((-I * w * t).exp(), p);
            }
            d
        })
        .collect();
    let [full_c, low, high]: [Vec<SpinorField>; 3] = cont.try_into().expect("three channels");
    let full: Vec<SpinorField> = full_c.iter().zip(&discrete).map(|(c, d)| c + d).collect();
    let quadrature_change = if quad.check {
        let (coarse, _) = continuous_integral(ctx, psi0, cutoff, times, omega_max, &quad.halved())?;
        Some(
            full_c
                .iter()
                .zip(&coarse[0])
                .zip(&full)
                .map(|((a, b), f)| a.distance(b) / f.norm().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max),
        )
    } else {
        None
    };
    Ok(SpectralEvolution { times: times.to_vec(), full, low, high, discrete, omega_max, node_count, quadrature_change })
}
