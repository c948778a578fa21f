//! Perturbed resolvents `𝓡(ω) = (H - ω)⁻¹`.
//!
//! Everything is computed in the gauge frame, `𝓡̃(ω) = (iα∂ + Ṽ + ω) R(ω² - m²)` with `R` the
//! matrix Schrödinger resolvent of `-∂² + V_sq`, and conjugated back with `𝓡 = C 𝓡̃ C⁻¹`.

pub mod edge;
pub mod lippmann;
pub mod nonsingular;
pub mod spectrum;

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dirac::{apply_dirac, LinearOperator};
use crate::error::{Error, Result};
use crate::field::SpinorField;
use crate::free::{first_order, SchrodingerKernel, SpectralPoint};
use crate::gauge::GaugeData;
use crate::grid::Grid;
use crate::potential::MatrixPotential;
use crate::special::Side;

pub use edge::{edge_asymptotics_perturbed, EdgeExponents};
pub use lippmann::{lippmann_schwinger_dense, lippmann_schwinger_solve, LippmannSchwinger, LsSolution};
pub use nonsingular::{check_nonsingular, NonsingularReport, Verdict};
pub use spectrum::{find_eigenvalues, riesz_projector, EigenSearch, RieszProjector, SpectralData};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Tilde,
    Original,
}

struct Inner {
    potential: MatrixPotential,
    mass: f64,
    gauge: GaugeData,
    support: Vec<usize>,
}

/// `H = iα∂ + mβ + V` prepared for resolvent evaluation. Cheap to clone.
#[derive(Clone)]
pub struct PerturbedDirac {
    inner: Arc<Inner>,
}

impl PerturbedDirac {
    pub fn new(v: &MatrixPotential, m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {m}")));
        }
        let gauge = GaugeData::new(v, m);
        let support = gauge.squared.support(lippmann::SUPPORT_TOL);
        Ok(PerturbedDirac { inner: Arc::new(Inner { potential: v.clone(), mass: m, gauge, support }) })
    }

    pub fn potential(&self) -> &MatrixPotential {
        &self.inner.potential
    }

    pub fn mass(&self) -> f64 {
        self.inner.mass
    }

    pub fn grid(&self) -> &Grid {
        self.inner.potential.grid()
    }

    pub fn gauge(&self) -> &GaugeData {
        &self.inner.gauge
    }

    /// Nodes where `V_sq` is retained in the Lippmann–Schwinger system.
    pub fn support(&self) -> &[usize] {
        &self.inner.support
    }

    /// Factorize the resolvent at `point`.
    pub fn at(&self, point: SpectralPoint) -> Result<DiracResolvent> {
        let kernel = SchrodingerKernel::for_point(*self.grid(), &point, self.mass())?;
        let ls = LippmannSchwinger::new(kernel, &self.inner.gauge.squared, &self.inner.support)?;
        Ok(DiracResolvent { ctx: self.clone(), point, ls })
    }

    pub fn apply(&self, point: SpectralPoint, f: &SpinorField, frame: Frame) -> Result<SpinorField> {
        f.same_grid(&SpinorField::zeros(*self.grid()))?;
        Ok(self.at(point)?.apply(f, frame))
    }

    /// `||(H - ω) u - f|| / ||f||` in the original frame.
    pub fn residual(&self, omega: C64, u: &SpinorField, f: &SpinorField) -> Result<f64> {
        let hu = apply_dirac(u, self.potential(), self.mass())?;
        Ok((&hu - &u.scale(omega)).distance(f) / f.norm())
    }
}

/// The factorized resolvent at one spectral point.
pub struct DiracResolvent {
    ctx: PerturbedDirac,
    point: SpectralPoint,
    ls: LippmannSchwinger,
}

impl DiracResolvent {
    pub fn point(&self) -> SpectralPoint {
        self.point
    }

    pub fn condition(&self) -> f64 {
        self.ls.condition()
    }

    pub fn schrodinger(&self) -> &LippmannSchwinger {
        &self.ls
    }

    fn first_order(&self, u: &SpinorField, du: &SpinorField) -> SpinorField {
        let t = &self.ctx.inner.gauge.tilde;
        first_order(u, du, |i| (t.at(i)[(0, 1)], t.at(i)[(1, 0)]), self.point.omega)
    }

    /// `𝓡̃(ω) f`.
    pub fn apply_tilde(&self, f: &SpinorField) -> SpinorField {
        let (u, du) = self.ls.apply_with_derivative(f);
        self.first_order(&u, &du)
    }

    pub fn apply(&self, f: &SpinorField, frame: Frame) -> SpinorField {
        match frame {
            Frame::Tilde => self.apply_tilde(f),
            Frame::Original => {
                let g = &self.ctx.inner.gauge;
                g.conjugate(&self.apply_tilde(&g.conjugate_inverse(f)))
            }
        }
    }

    /// Tilde-frame Born pieces of `𝓡̃ f`: with `T = iα∂ + Ṽ + ω`,
    /// `[T R₀ f, -T R₀VR₀ f, T R₀VR₀V R f]`, summing to `𝓡̃ f`.
    pub fn born_terms(&self, f: &SpinorField) -> [SpinorField; 3] {
        let k = self.ls.kernel();
        let with_kernel = |g: &SpinorField| self.first_order(&k.apply_field(g), &k.apply_field_derivative(g));
        let r0f = k.apply_field(f);
        let v_r0f = self.ls.apply_potential(&r0f);
        let rf = self.ls.apply(f);
        let vr0vr = self.ls.apply_potential(&k.apply_field(&self.ls.apply_potential(&rf)));
        [with_kernel(f), -&with_kernel(&v_r0f), with_kernel(&vr0vr)]
    }
}

/// Output of [`dirac_resolvent_apply`].
#[derive(Clone, Debug)]
pub struct ResolventOutput {
    pub u: SpinorField,
    /// `||(H - ω)u - f|| / ||f||` (original frame; tilde frame uses `H̃`).
    pub residual: f64,
    pub condition: f64,
}

/// `u = 𝓡(ω) f` (or `𝓡̃(ω) f`), with the residual of `(H - ω) u = f` reported.
pub fn dirac_resolvent_apply(
    point: SpectralPoint,
    v: &MatrixPotential,
    m: f64,
    f: &SpinorField,
    frame: Frame,
) -> Result<ResolventOutput> {
    let ctx = PerturbedDirac::new(v, m)?;
    f.same_grid(&SpinorField::zeros(*ctx.grid()))?;
    let r = ctx.at(point)?;
    let u = r.apply(f, frame);
    let residual = match frame {
        Frame::Original => ctx.residual(point.omega, &u, f)?,
        Frame::Tilde => {
            let hu = ctx.gauge().apply_tilde(&u);
            (&hu - &u.scale(point.omega)).distance(f) / f.norm()
        }
    };
    Ok(ResolventOutput { u, residual, condition: r.condition() })
}

/// `Σ c_k 𝓡(ω_k)` as an operator with its adjoint `Σ c̄_k 𝓡(ω̄_k)`.
pub struct ResolventCombination {
    forward: Vec<(C64, DiracResolvent)>,
    adjoint: Vec<(C64, DiracResolvent)>,
    frame: Frame,
}

impl ResolventCombination {
    pub fn new(ctx: &PerturbedDirac, terms: &[(C64, SpectralPoint)], frame: Frame) -> Result<Self> {
        let mut forward = Vec::with_capacity(terms.len());
        let mut adjoint = Vec::with_capacity(terms.len());
        for &(c, p) in terms {
            forward.push((c, ctx.at(p)?));
            adjoint.push((c.conj(), ctx.at(p.conj())?));
        }
        Ok(ResolventCombination { forward, adjoint, frame })
    }

    pub fn single(ctx: &PerturbedDirac, point: SpectralPoint, frame: Frame) -> Result<Self> {
        ResolventCombination::new(ctx, &[(C64::new(1.0, 0.0), point)], frame)
    }

    fn sum(terms: &[(C64, DiracResolvent)], f: &SpinorField, frame: Frame) -> SpinorField {
        let mut out = SpinorField::zeros(*f.grid());
        for (c, r) in terms {
            out.axpy(*c, &r.apply(f, frame));
        }
        out
    }
}

impl LinearOperator for ResolventCombination {
    fn apply(&self, f: &SpinorField) -> Result<SpinorField> {
        Ok(Self::sum(&self.forward, f, self.frame))
    }
    fn apply_adjoint(&self, f: &SpinorField) -> Result<SpinorField> {
        Ok(Self::sum(&self.adjoint, f, self.frame))
    }
}

/// Cauchy increments of `𝓡(ω + iε_k) f` in `L²_{-σ}` as `ε_k` decreases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LapReport {
    pub omega: f64,
    pub sigma: f64,
    pub eps: Vec<f64>,
    pub increments: Vec<f64>,
    pub converged: bool,
    pub diagnostic: Option<String>,
}

/// Threshold on the last Cauchy increment.
pub const LAP_TOL: f64 = 1e-4;

/// Limiting-absorption probe at real `ω ∈ Γ` from above.
pub fn lap_probe(ctx: &PerturbedDirac, omega: f64, sigma: f64, eps: &[f64], probe: &SpinorField) -> Result<LapReport> {
    let m = ctx.mass();
    if !(omega.abs() > m) {
        return Err(Error::InvalidParameter(format!("LAP probe needs |ω| > m, got {omega}")));
    }
    if eps.len() < 2 || eps.windows(2).any(|w| !(w[1] < w[0] && w[1] > 0.0)) {
        return Err(Error::InvalidParameter("eps sequence must be positive and strictly decreasing".into()));
    }
    let values: Vec<SpinorField> = eps
        .iter()
        .map(|&e| ctx.apply(SpectralPoint::interior(C64::new(omega, e)), probe, Frame::Original))
        .collect::<Result<_>>()?;
    let increments: Vec<f64> = values.windows(2).map(|w| (&w[0] - &w[1]).weighted_norm(-sigma, 0.0)).collect();
    let monotone = increments.windows(2).all(|w| w[1] < w[0]);
    let last = *increments.last().unwrap();
    let converged = monotone && last < LAP_TOL;
    let diagnostic = if converged {
        None
    } else if !monotone {
        Some("LAP failure: non-monotone increments (embedded eigenvalue or under-resolved grid)".into())
    } else {
        Some(format!("LAP failure: last increment {last:.3e} above {LAP_TOL:.0e}"))
    };
    Ok(LapReport { omega, sigma, eps: eps.to_vec(), increments, converged, diagnostic })
}

/// Boundary value `ω ± i0` on `Γ`.
pub fn boundary(omega: f64, side: Side) -> SpectralPoint {
    SpectralPoint::boundary(omega, side)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::{norm_value, weighted_operator_norm, PowerIteration};
    use crate::free::free_dirac_resolvent_apply;
    use crate::potential::PotentialSpec;

    fn fixture(n: usize, half: f64, a: f64) -> (PerturbedDirac, SpinorField) {
        let grid = Grid::new(half, n).unwrap();
        let v = PotentialSpec::FullHermitianGaussian { upper: 0.2, lower: -0.1, coupling: a, phase: 0.4, width: 1.0 }
            .build(grid)
            .unwrap();
        let f = SpinorField::from_fn(grid, |x| {
            [C64::new(1.0, 0.1) * (-x * x).exp(), C64::new(0.3, -0.2) * (-(x - 1.0).powi(2)).exp()]
        });
        (PerturbedDirac::new(&v, 1.0).unwrap(), f)
    }

    #[test]
    fn zero_potential_reduces_to_free() {
        let grid = Grid::new(16.0, 256).unwrap();
        let ctx = PerturbedDirac::new(&MatrixPotential::zero(grid), 1.0).unwrap();
        let f = SpinorField::from_fn(grid, |x| [C64::new((-x * x).exp(), 0.0), C64::new(0.0, 0.5 * (-x * x).exp())]);
        for frame in [Frame::Tilde, Frame::Original] {
            let p = SpectralPoint::interior(C64::default());
            let u = ctx.apply(p, &f, frame).unwrap();
            let free = free_dirac_resolvent_apply(&p, &f, 1.0).unwrap();
            assert!(u.distance(&free) < 1e-8 * free.norm());
        }
    }

    #[test]
    fn residual_off_axis() {
        let (ctx, f) = fixture(512, 24.0, 0.4);
        let out = dirac_resolvent_apply(
            SpectralPoint::interior(C64::new(0.0, 0.5)),
            ctx.potential(),
            1.0,
            &f,
            Frame::Original,
        )
        .unwrap();
        assert!(out.residual < 1e-3, "residual {}", out.residual);
        let tilde = dirac_resolvent_apply(SpectralPoint::interior(C64::new(0.3, 0.5)), ctx.potential(), 1.0, &f, Frame::Tilde)
            .unwrap();
        assert!(tilde.residual < 1e-3, "tilde residual {}", tilde.residual);
    }

    #[test]
    fn symmetric_at_real_gap_point() {
        let (ctx, f) = fixture(256, 16.0, 0.4);
        let g = SpinorField::from_fn(*ctx.grid(), |x| [C64::new(0.2, 1.0) * (-(x + 1.0).powi(2)).exp(), C64::new((-x * x / 2.0).exp(), 0.0)]);
        let r = ctx.at(SpectralPoint::interior(C64::new(0.4, 0.0))).unwrap();
        let lhs = r.apply(&f, Frame::Original).inner(&g).unwrap();
        let rhs = f.inner(&r.apply(&g, Frame::Original)).unwrap();
        assert!((lhs - rhs).norm() < 1e-6, "{lhs} vs {rhs}");
    }

    #[test]
    fn first_resolvent_identity() {
        let (ctx, f) = fixture(512, 24.0, 0.4);
        let (w1, w2) = (C64::new(0.2, 0.4), C64::new(-0.5, 0.7));
        let r1 = ctx.at(SpectralPoint::interior(w1)).unwrap();
        let r2 = ctx.at(SpectralPoint::interior(w2)).unwrap();
        let lhs = &r1.apply(&f, Frame::Original) - &r2.apply(&f, Frame::Original);
        let rhs = r1.apply(&r2.apply(&f, Frame::Original), Frame::Original).scale(w1 - w2);
        assert!(lhs.distance(&rhs) < 1e-6 * lhs.norm(), "{}", lhs.distance(&rhs) / lhs.norm());
    }

    #[test]
    fn adjoint_is_conjugate_point() {
        let (ctx, f) = fixture(256, 16.0, 0.3);
        let g = SpinorField::from_fn(*ctx.grid(), |x| [C64::new(0.0, (-(x - 0.5).powi(2)).exp()), C64::new(1.0, 0.3) * (-x * x).exp()]);
        let p = boundary(1.7, Side::Above);
        let r = ctx.at(p).unwrap();
        let ra = ctx.at(p.conj()).unwrap();
        let lhs = r.apply(&f, Frame::Original).inner(&g).unwrap();
        let rhs = f.inner(&ra.apply(&g, Frame::Original)).unwrap();
        // holds up to the kernel quadrature error
        assert!((lhs - rhs).norm() < 1e-6 * lhs.norm(), "{lhs} vs {rhs}");
    }

    #[test]
    fn born_terms_sum_to_resolvent() {
        let (ctx, f) = fixture(256, 16.0, 0.5);
        let r = ctx.at(boundary(2.0, Side::Above)).unwrap();
        let [a, b, c] = r.born_terms(&f);
        let sum = &(&a + &b) + &c;
        let full = r.apply_tilde(&f);
        assert!(sum.distance(&full) < 1e-12 * full.norm());
    }

    #[test]
    fn lap_converges_weighted_only() {
        let (ctx, f) = fixture(1024, 64.0, 0.4);
        // increments shrink like ε, so the sequence must go deep enough to fall below LAP_TOL
        let eps = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
        let rep = lap_probe(&ctx, 2.0, 2.0, &eps, &f).unwrap();
        assert!(rep.converged, "{rep:?}");
        let free = PerturbedDirac::new(&MatrixPotential::zero(*ctx.grid()), 1.0).unwrap();
        assert!(lap_probe(&free, 2.0, 2.0, &eps, &f).unwrap().converged);
        let flat = lap_probe(&ctx, 2.0, 0.0, &eps, &f).unwrap();
        assert!(!flat.converged, "{flat:?}");
    }

    #[test]
    fn bounded_at_high_energy() {
        let (ctx, f) = fixture(2048, 32.0, 0.4);
        let norms: Vec<f64> = [5.0, 20.0, 80.0]
            .iter()
            .map(|&w| {
                let op = ResolventCombination::single(&ctx, boundary(w, Side::Above), Frame::Original).unwrap();
                norm_value(weighted_operator_norm(&op, &f, 1.0, PowerIteration::default())).unwrap()
            })
            .collect();
        assert!(norms.iter().all(|&n| n < 2.0 * norms[0]), "{norms:?}");
    }
}
