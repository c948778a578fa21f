//! Eigenvalues in the gap `(-m, m)`, Riesz projectors and the continuous-spectrum projector.

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::lippmann::system_matrix;
use super::nonsingular::NonsingularReport;
use super::{DiracResolvent, Frame, PerturbedDirac};
use crate::error::{Error, Result};
use crate::field::{Mat2, SpinorField};
use crate::fourier;
use crate::free::{SchrodingerKernel, SpectralPoint};
use crate::grid::Grid;
use crate::potential::MatrixPotential;

/// Target window and spacing of the dense eigensolve.
pub const SPECTRUM_HALF_WIDTH: f64 = 80.0;
pub const SPECTRUM_SPACING: f64 = 0.2;
/// Localization threshold: `||ψ||_{|x| > L/2} / ||ψ||`.
pub const LOCALIZATION_TOL: f64 = 1e-6;
/// Candidates below this ratio but above [`LOCALIZATION_TOL`] are reported as marginal.
pub const MARGINAL_TOL: f64 = 5e-2;
/// Allowed disagreement between the eigensolve and the Fredholm root.
pub const FREDHOLM_TOL: f64 = 1e-4;

/// A centred window of the main grid, possibly subsampled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subgrid {
    pub grid: Grid,
    pub first: usize,
    pub stride: usize,
}

/// Window used for the dense eigensolve: half width up to 80, spacing about 0.2 (never finer
/// than the main grid's own spacing allows).
pub fn spectrum_subgrid(grid: &Grid) -> Result<Subgrid> {
    let h = grid.spacing();
    let stride = ((SPECTRUM_SPACING / h).floor() as usize).max(1);
    let hs = stride as f64 * h;
    let half_nodes = ((SPECTRUM_HALF_WIDTH / hs).round() as usize).min(grid.len() / 2 / stride).max(8);
    let sub = Grid::new(half_nodes as f64 * hs, 2 * half_nodes)?;
    Ok(Subgrid { grid: sub, first: grid.origin_index() - half_nodes * stride, stride })
}

fn restrict(v: &MatrixPotential, sub: &Subgrid) -> Result<MatrixPotential> {
    let idx: Vec<usize> = (0..sub.grid.len()).map(|j| sub.first + j * sub.stride).collect();
    let entries: Vec<Mat2> = idx.iter().map(|&i| *v.at(i)).collect();
    let deriv: Vec<Mat2> = idx.iter().map(|&i| v.derivative()[i]).collect();
    MatrixPotential::new(sub.grid, entries, Some(deriv), v.decay_rate())
}

/// Fourier interpolation of a window field back onto the main grid (zero outside the window).
fn embed(f: &SpinorField, sub: &Subgrid, main: &Grid) -> SpinorField {
    let n = f.len();
    let big = n * sub.stride;
    let mut out = SpinorField::zeros(*main);
    for c in 0..2 {
        let mut spec = f.component(c).to_vec();
        fourier::forward(&mut spec);
        let mut padded = vec![C64::default(); big];
        let half = n / 2;
        for k in 0..half {
            padded[k] = spec[k];
        }
        // split the Nyquist coefficient symmetrically
        padded[half] = spec[half] * 0.5;
        if big > n {
            padded[big - half] = spec[half] * 0.5;
        } else {
            padded[half] = spec[half];
        }
        for k in half + 1..n {
            padded[big - n + k] = spec[k];
        }
        fourier::inverse(&mut padded);
        let dst = out.component_mut(c);
        for (j, p) in padded.into_iter().enumerate() {
            dst[sub.first + j] = p * sub.stride as f64;
        }
    }
    out
}

/// Dense matrix of `iα∂ + mβ + V` with the spectral differentiation matrix, blocks
/// `[component 1 nodes; component 2 nodes]`.
pub fn dense_dirac_matrix(v: &MatrixPotential, m: f64) -> Mat<C64> {
    let grid = v.grid();
    let n = grid.len();
    let period = 2.0 * grid.half_width();
    let d = |j: usize, l: usize| -> f64 {
        if j == l {
            return 0.0;
        }
        let diff = j as i64 - l as i64;
        let sign = if diff.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        std::f64::consts::PI / period * sign / (std::f64::consts::PI * diff as f64 / n as f64).tan()
    };
    let i = C64::new(0.0, 1.0);
    Mat::from_fn(2 * n, 2 * n, |r, c| {
        let (cr, jr) = (r / n, r % n);
        let (cc, jc) = (c / n, c % n);
        let mut e = C64::default();
        if cr == cc {
            let s = if cr == 0 { -1.0 } else { 1.0 };
            e += i * s * d(jr, jc);
        } else if jr == jc {
            e += m;
        }
        if jr == jc {
            e += v.at(jr)[(cr, cc)];
        }
        e
    })
}

/// Fredholm cross-check of one eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FredholmCheck {
    pub eigensolve: f64,
    pub fredholm: f64,
    /// Smallest singular value of `I + R₀V_sq` at the located root.
    pub sigma_min: f64,
    pub agrees: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenSearch {
    pub subgrid: Subgrid,
    pub delta_gap: f64,
    pub eigenvalues: Vec<f64>,
    /// Unit-norm eigenfunctions on the main grid.
    #[serde(skip)]
    pub eigenfunctions: Vec<SpinorField>,
    pub localization: Vec<f64>,
    pub fredholm: Vec<FredholmCheck>,
    /// Gap eigenvalues that are localized only marginally or sit inside the edge band.
    pub near_edge: Vec<f64>,
}

impl EigenSearch {
    pub fn consistent(&self) -> bool {
        self.fredholm.iter().all(|c| c.agrees)
    }
}

/// `σ_min(I + R₀(ω² - m²) V_sq)` at a real gap frequency, in the gauge frame.
pub fn fredholm_sigma_min(ctx: &PerturbedDirac, omega: f64) -> Result<f64> {
    let p = SpectralPoint::interior(C64::new(omega, 0.0));
    let k = SchrodingerKernel::for_point(*ctx.grid(), &p, ctx.mass())?;
    if ctx.support().is_empty() {
        return Ok(1.0);
    }
    let a = system_matrix(&k, &ctx.gauge().squared, ctx.support());
    Ok(a.singular_values().into_iter().fold(f64::INFINITY, f64::min))
}

fn golden_min(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while b - a > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 < f2 { (x1, f1) } else { (x2, f2) })
}

/// Eigenvalues of `H` in the gap from a dense Hermitian eigensolve on a centred window,
/// retaining localized eigenpairs away from the edges, each cross-checked by minimizing the
/// smallest singular value of the Lippmann–Schwinger system on the main grid.
pub fn find_eigenvalues(ctx: &PerturbedDirac) -> Result<EigenSearch> {
    let m = ctx.mass();
    let main = *ctx.grid();
    let sub = spectrum_subgrid(&main)?;
    let v = restrict(ctx.potential(), &sub)?;
    let n = sub.grid.len();
    let lw = sub.grid.half_width();
    let delta_gap = 10.0 * (std::f64::consts::PI / lw).powi(2) / (2.0 * m);
    let mut found: Vec<(f64, SpinorField, f64)> = Vec::new();
    let mut near_edge = Vec::new();
    if !v.is_zero() {
        let mat = dense_dirac_matrix(&v, m);
        let evd = mat.selfadjoint_eigendecomposition(faer::Side::Lower);
        let s = evd.s().column_vector();
        let u = evd.u();
        let h = sub.grid.spacing();
        let outer: Vec<bool> = sub.grid.nodes().iter().map(|x| x.abs() > lw / 2.0).collect();
        for k in 0..2 * n {
            let w = s.read(k).re;
            if !(w.abs() < m) {
                continue;
            }
            let (mut total, mut tail) = (0.0, 0.0);
            for j in 0..n {
                let p = u.read(j, k).norm_sqr() + u.read(n + j, k).norm_sqr();
                total += p;
                if outer[j] {
                    tail += p;
                }
            }
            let ratio = (tail / total).sqrt();
            if ratio >= MARGINAL_TOL {
                continue;
            }
            if ratio >= LOCALIZATION_TOL || w.abs() >= m - delta_gap {
                near_edge.push(w);
                continue;
            }
            let up: Vec<C64> = (0..n).map(|j| u.read(j, k) / h.sqrt()).collect();
            let down: Vec<C64> = (0..n).map(|j| u.read(n + j, k) / h.sqrt()).collect();
            let f = SpinorField::from_components(sub.grid, up, down)?;
            let mut g = embed(&f, &sub, &main);
            let peak = (0..g.len()).flat_map(|i| [g.at(i)[0], g.at(i)[1]]).fold(C64::default(), |a, b| {
                if b.norm() > a.norm() {
                    b
                } else {
                    a
                }
            });
            let norm = g.norm();
            g = g.scale(peak.conj() / (peak.norm() * norm));
            found.push((w, g, ratio));
        }
    }
    let mut fredholm = Vec::with_capacity(found.len());
    for (w, _, _) in &found {
        let half = (1e-2f64).min((m - w.abs()) / 2.0);
        let (root, smin) = golden_min(w - half, w + half, 1e-9, |x| fredholm_sigma_min(ctx, x))?;
        fredholm.push(FredholmCheck { eigensolve: *w, fredholm: root, sigma_min: smin, agrees: (root - w).abs() <= FREDHOLM_TOL });
    }
    Ok(EigenSearch {
        subgrid: sub,
        delta_gap,
        eigenvalues: found.iter().map(|e| e.0).collect(),
        localization: found.iter().map(|e| e.2).collect(),
        eigenfunctions: found.into_iter().map(|e| e.1).collect(),
        fredholm,
        near_edge,
    })
}

/// `P_j = -(1/2πi) ∮_{|ω-ω_j|=δ} 𝓡(ω) dω` by the trapezoid rule on `M` nodes.
pub struct RieszProjector {
    pub omega: f64,
    pub radius: f64,
    nodes: Vec<(C64, DiracResolvent)>,
}

impl RieszProjector {
    pub fn apply(&self, f: &SpinorField) -> SpinorField {
        let mut out = SpinorField::zeros(*f.grid());
        for (w, r) in &self.nodes {
            out.axpy(*w, &r.apply(f, Frame::Original));
        }
        out
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// Build the projector for `ω_j`. `others` are the remaining eigenvalues, which must lie
/// outside the circle; the circle must stay inside the gap.
pub fn riesz_projector(ctx: &PerturbedDirac, omega_j: f64, radius: f64, nodes: usize, others: &[f64]) -> Result<RieszProjector> {
    let m = ctx.mass();
    if nodes < 16 {
        return Err(Error::InvalidContour(format!("need at least 16 nodes, got {nodes}")));
    }
    if !(radius > 0.0) || omega_j.abs() + radius >= m {
        return Err(Error::InvalidContour(format!("circle |ω - {omega_j}| = {radius} meets the continuous spectrum")));
    }
    if let Some(o) = others.iter().find(|&&o| (o - omega_j).abs() <= radius && o != omega_j) {
        return Err(Error::InvalidContour(format!("circle around {omega_j} encloses eigenvalue {o}")));
    }
    let mut list = Vec::with_capacity(nodes);
    for k in 0..nodes {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / nodes as f64;
        let e = C64::from_polar(1.0, theta);
        let p = SpectralPoint::interior(omega_j + radius * e);
        list.push((-(radius / nodes as f64) * e, ctx.at(p)?));
    }
    Ok(RieszProjector { omega: omega_j, radius, nodes: list })
}

#[derive(Clone, Copy, Debug)]
pub struct SpectralOptions {
    pub riesz_nodes: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions { riesz_nodes: 32 }
    }
}

/// Eigenvalues, eigenfunctions, projectors and (optionally) the nonsingularity verdict.
pub struct SpectralData {
    pub search: EigenSearch,
    pub projectors: Vec<RieszProjector>,
    pub nonsingular: Option<NonsingularReport>,
}

impl SpectralData {
    /// Refuses (`EigenvalueTooCloseToEdge`) when a localized eigenvalue sits so close to `±m`
    /// that no admissible contour exists.
    pub fn compute(ctx: &PerturbedDirac, opts: SpectralOptions) -> Result<Self> {
        let search = find_eigenvalues(ctx)?;
        if let Some(&w) = search.near_edge.first() {
            return Err(Error::EigenvalueTooCloseToEdge { omega: w });
        }
        let m = ctx.mass();
        let ev = &search.eigenvalues;
        let mut projectors = Vec::with_capacity(ev.len());
        for (j, &w) in ev.iter().enumerate() {
            let gap = ev.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, o)| (o - w).abs()).fold(f64::INFINITY, f64::min);
            let radius = (0.5 * (m - w.abs())).min(0.5 * gap).min(0.25 * m);
            projectors.push(riesz_projector(ctx, w, radius, opts.riesz_nodes, ev)?);
        }
        Ok(SpectralData { search, projectors, nonsingular: None })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.search.eigenvalues
    }

    pub fn eigenfunctions(&self) -> &[SpinorField] {
        &self.search.eigenfunctions
    }

    /// `𝒫_d f = Σ P_j f`.
    pub fn discrete_part(&self, f: &SpinorField) -> SpinorField {
        let mut out = SpinorField::zeros(*f.grid());
        for p in &self.projectors {
            out += &p.apply(f);
        }
        out
    }

    /// `𝒫_c f = f - 𝒫_d f`.
    pub fn continuous_part(&self, f: &SpinorField) -> SpinorField {
        f - &self.discrete_part(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;

    fn well(grid: Grid, scale: f64) -> PerturbedDirac {
        let v = PotentialSpec::Sech2Offdiag { amplitude: -0.5 * scale, width: 1.0, phase: 0.0 }.build(grid).unwrap();
        PerturbedDirac::new(&v, 1.0).unwrap()
    }

    #[test]
    fn differentiation_matrix_matches_fft() {
        let grid = Grid::new(6.0, 32).unwrap();
        let v = MatrixPotential::zero(grid);
        let a = dense_dirac_matrix(&v, 0.0);
        let f: Vec<C64> = grid.nodes().iter().map(|x| C64::new((-x * x).exp(), 0.2 * x.sin())).collect();
        let d = fourier::derivative(&f, &grid);
        for j in 0..32 {
            let row: C64 = (0..32).map(|l| a.read(j, l) * f[l]).sum();
            // first block is -i∂
            assert!((row - C64::new(0.0, -1.0) * d[j]).norm() < 1e-12);
        }
    }

    #[test]
    fn free_has_no_eigenvalues() {
        let grid = Grid::new(40.0, 512).unwrap();
        let ctx = PerturbedDirac::new(&MatrixPotential::zero(grid), 1.0).unwrap();
        let s = find_eigenvalues(&ctx).unwrap();
        assert!(s.eigenvalues.is_empty() && s.near_edge.is_empty());
    }

    #[test]
    fn attractive_well_binds_and_fredholm_agrees() {
        let grid = Grid::new(60.0, 768).unwrap();
        let s = find_eigenvalues(&well(grid, 1.0)).unwrap();
        assert!(!s.eigenvalues.is_empty(), "{s:?}");
        assert!(s.eigenvalues.iter().all(|w| w.abs() < 1.0));
        assert!(s.consistent(), "{:?}", s.fredholm);
        for f in &s.eigenfunctions {
            assert!((f.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn weak_coupling_stays_near_edges() {
        let grid = Grid::new(40.0, 512).unwrap();
        let s = find_eigenvalues(&well(grid, 1e-3)).unwrap();
        assert!(s.eigenvalues.iter().chain(&s.near_edge).all(|w| 1.0 - w.abs() < 1e-2), "{s:?}");
    }

    #[test]
    fn eigenfunction_satisfies_equation() {
        let grid = Grid::new(60.0, 768).unwrap();
        let ctx = well(grid, 1.0);
        let s = find_eigenvalues(&ctx).unwrap();
        for (w, f) in s.eigenvalues.iter().zip(&s.eigenfunctions) {
            let hf = crate::dirac::apply_dirac(f, ctx.potential(), 1.0).unwrap();
            assert!((&hf - &f.scale(C64::new(*w, 0.0))).norm() < 1e-8);
        }
    }

    #[test]
    fn projectors() {
        let grid = Grid::new(60.0, 768).unwrap();
        let ctx = well(grid, 1.0);
        let data = SpectralData::compute(&ctx, SpectralOptions::default()).unwrap();
        let f = SpinorField::from_fn(grid, |x| [C64::new((-(x - 1.0).powi(2)).exp(), 0.3), C64::new(0.0, (-x * x / 3.0).exp())]);
        let f = f.map_points(|i, u| u * C64::new((-(grid.node(i) / 10.0).powi(2)).exp(), 0.0));
        for (p, psi) in data.projectors.iter().zip(data.eigenfunctions()) {
            assert!(p.apply(psi).distance(psi) < 1e-4);
            let pf = p.apply(&f);
            assert!(p.apply(&pf).distance(&pf) < 1e-4 * f.norm());
            assert!(data.continuous_part(&pf).norm() < 1e-4 * f.norm());
        }
        for (j, p) in data.projectors.iter().enumerate() {
            for (k, q) in data.projectors.iter().enumerate() {
                if j != k {
                    assert!(p.apply(&q.apply(&f)).norm() < 1e-4 * f.norm());
                }
            }
        }
        // a fast packet far from the well carries no bound-state weight
        let packet = SpinorField::from_fn(grid, |x| {
            let e = (-(x - 25.0).powi(2) / 4.0).exp() * C64::from_polar(1.0, 4.0 * x);
            [e, C64::default()]
        });
        for p in &data.projectors {
            assert!(p.apply(&packet).norm() < 1e-4 * packet.norm());
        }
    }

    #[test]
    fn contour_rejections() {
        let grid = Grid::new(20.0, 256).unwrap();
        let ctx = well(grid, 1.0);
        assert!(matches!(riesz_projector(&ctx, 0.9, 0.2, 32, &[]), Err(Error::InvalidContour(_))));
        assert!(matches!(riesz_projector(&ctx, 0.0, 0.3, 32, &[0.1]), Err(Error::InvalidContour(_))));
        assert!(matches!(riesz_projector(&ctx, 0.0, 0.3, 8, &[]), Err(Error::InvalidContour(_))));
    }
}
