//! Born splitting of the high-energy flow and the two routes to its `φ₂` piece.
//!
//! All fields live in the gauge frame (`ψ̃₀ = C⁻¹ψ₀`, `V = V_sq`); `C` is unitary pointwise, so
//! every weighted norm is frame independent.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::spectral::{default_omega_max, frequency_nodes, integrate_channels, QuadratureConfig};
use crate::error::{Error, Result};
use crate::field::SpinorField;
use crate::free::{free_dirac_with_kernel, free_functional_calculus};
use crate::resolvent::{boundary, PerturbedDirac};
use crate::special::{CutoffSpec, Side};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// High-band flow `ψ_h = ψ_h1 + ψ_h2 + ψ_h3` with `ψ_h2 = φ₁ + φ₂`.
#[derive(Clone, Debug)]
pub struct BornDecomposition {
    pub times: Vec<f64>,
    /// Free term `T R₀ ψ̃₀`, `T = iα∂ + Ṽ + ω`.
    pub psi_h1: Vec<SpinorField>,
    /// One insertion, `-T R₀VR₀ ψ̃₀`.
    pub psi_h2: Vec<SpinorField>,
    /// Two insertions and the full resolvent, `T R₀VR₀V R ψ̃₀`.
    pub psi_h3: Vec<SpinorField>,
    /// `-(Ṽ - mβ) R₀VR₀ ψ̃₀`.
    pub phi1: Vec<SpinorField>,
    /// `-𝓡₀ V R₀ ψ̃₀` with the weight `h(ω)` outside.
    pub phi2: Vec<SpinorField>,
    /// `-h₁(H₀) 𝓡₀ V h₁(|D|) R₀ ψ̃₀`: the cutoff split as operator multipliers on both factors.
    pub phi2_filtered: Vec<SpinorField>,
    /// `𝓡̃ ψ̃₀` directly, for the sum identity.
    pub psi_h: Vec<SpinorField>,
    pub omega_max: f64,
    pub node_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BornNorms {
    pub times: Vec<f64>,
    pub psi_h1: Vec<f64>,
    pub psi_h2: Vec<f64>,
    pub psi_h3: Vec<f64>,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub phi2_filtered: Vec<f64>,
    pub psi_h: Vec<f64>,
    /// `‖ψ_h1 + ψ_h2 + ψ_h3 - ψ_h‖ / ‖ψ_h‖` per time.
    pub sum_defect: Vec<f64>,
}

impl BornDecomposition {
    pub fn norms(&self, sigma: f64) -> BornNorms {
        let w = |v: &[SpinorField]| v.iter().map(|f| f.weighted_norm(-sigma, 0.0)).collect();
        BornNorms {
            times: self.times.clone(),
            psi_h1: w(&self.psi_h1),
            psi_h2: w(&self.psi_h2),
            psi_h3: w(&self.psi_h3),
            phi1: w(&self.phi1),
            phi2: w(&self.phi2),
            phi2_filtered: w(&self.phi2_filtered),
            psi_h: w(&self.psi_h),
            sum_defect: self.sum_defect(),
        }
    }

    pub fn sum_defect(&self) -> Vec<f64> {
        (0..self.times.len())
            .map(|k| {
                let s = &(&self.psi_h1[k] + &self.psi_h2[k]) + &self.psi_h3[k];
                s.distance(&self.psi_h[k]) / self.psi_h[k].norm().max(f64::MIN_POSITIVE)
            })
            .collect()
    }
}

/// `h₁(E(k))` as a Fourier multiplier.
fn h1_multiplier(f: &SpinorField, cutoff: &CutoffSpec) -> SpinorField {
    free_functional_calculus(f, cutoff.m, |l| C64::new(cutoff.h1(l), 0.0))
}

fn check_inputs(ctx: &PerturbedDirac, psi0: &SpinorField, cutoff: &CutoffSpec) -> Result<()> {
    psi0.same_grid(&SpinorField::zeros(*ctx.grid()))?;
    if (cutoff.m - ctx.mass()).abs() > 1e-12 * ctx.mass() {
        return Err(Error::InvalidParameter(format!("cutoff mass {} differs from m = {}", cutoff.m, ctx.mass())));
    }
    Ok(())
}

/// The three Born terms of the high-band flow, integrated on `m ≤ |ω| ≤ omega_max`.
///
/// `h` vanishes below `m + ε`, but the filtered channel does not: the truncated free kernel's
/// jump is not exactly on shell, so its weight-1 integrand has content down to the edge.
pub fn born_decomposition(
    ctx: &PerturbedDirac,
    psi0: &SpinorField,
    cutoff: &CutoffSpec,
    times: &[f64],
    quad: &QuadratureConfig,
) -> Result<BornDecomposition> {
    check_inputs(ctx, psi0, cutoff)?;
    let m = ctx.mass();
    let omega_max = quad.omega_max.unwrap_or_else(|| default_omega_max(psi0, m).max(m + 4.0 * cutoff.eps + 1.0));
    if !(omega_max > m + 4.0 * cutoff.eps) {
        return Err(Error::InvalidParameter(format!("omega_max = {omega_max} must exceed m + 4ε = {}", m + 4.0 * cutoff.eps)));
    }
    let reach = times.iter().fold(0.0f64, |a, t| a.max(t.abs())) + ctx.grid().half_width();
    let nodes = frequency_nodes(m, m, omega_max, reach, quad)?;
    let f = ctx.gauge().conjugate_inverse(psi0);
    let tilde = &ctx.gauge().tilde;
    let free_side = |w: f64, side: Side| -> Result<Vec<SpinorField>> {
        let r = ctx.at(boundary(w, side))?;
        let [t1, t2, t3] = r.born_terms(&f);
        let ls = r.schrodinger();
        let k = ls.kernel();
        let r0f = k.apply_field(&f);
        let vr0vr0f = k.apply_field(&ls.apply_potential(&r0f));
        // (Ṽ - mβ) only keeps the off-diagonal difference
        let phi1 = vr0vr0f.map_points(|i, u| {
            let t = tilde.at(i);
            let (a, b) = (t[(0, 1)] - m, t[(1, 0)] - m);
            -crate::field::Spinor::new(a * u[1], b * u[0])
        });
        let phi2 = -&free_dirac_with_kernel(k, C64::new(w, 0.0), &ls.apply_potential(&r0f), m);
        let filtered = {
            let g = ls.apply_potential(&h1_multiplier(&r0f, cutoff));
            -&h1_multiplier(&free_dirac_with_kernel(k, C64::new(w, 0.0), &g, m), cutoff)
        };
        let full = r.apply_tilde(&f);
        Ok(vec![t1, t2, t3, phi1, phi2, filtered, full])
    };
    let out = integrate_channels(
        *psi0.grid(),
        &nodes,
        times,
        7,
        |c, w| if c == 5 { 1.0 } else { cutoff.h(w) },
        |w| {
            let up = free_side(w, Side::Above)?;
            let down = free_side(w, Side::Below)?;
            Ok(up.iter().zip(&down).map(|(a, b)| a - b).collect())
        },
    )?;
    let [psi_h1, psi_h2, psi_h3, phi1, phi2, phi2_filtered, psi_h]: [Vec<SpinorField>; 7] =
        out.try_into().expect("seven channels");
    Ok(BornDecomposition {
        times: times.to_vec(),
        psi_h1,
        psi_h2,
        psi_h3,
        phi1,
        phi2,
        phi2_filtered,
        psi_h,
        omega_max,
        node_count: nodes.len(),
    })
}

/// `φ₂(t) = -i ∫₀ᵗ 𝒰_{h1}(t - τ) V φ_{h1}(τ) dτ` with `φ_{h1}(τ) = -i h₁(E) sin(Eτ)/E ψ̃₀`
/// (componentwise), by the trapezoid rule with step `dtau`. `times` must be multiples of `dtau`.
///
/// Uses `𝒰_{h1}(t - τ) = h₁(H₀) e^{-iH₀t} e^{iH₀τ}`, so one pass serves every output time.
pub fn convolution_phi2(
    ctx: &PerturbedDirac,
    psi0: &SpinorField,
    cutoff: &CutoffSpec,
    times: &[f64],
    dtau: f64,
) -> Result<Vec<SpinorField>> {
    check_inputs(ctx, psi0, cutoff)?;
    if !(dtau > 0.0) {
        return Err(Error::InvalidParameter(format!("dtau must be positive, got {dtau}")));
    }
    let idx = super::cn::step_indices(times, dtau)?;
    let steps = idx.iter().copied().max().unwrap_or(0);
    let m = ctx.mass();
    let f = ctx.gauge().conjugate_inverse(psi0);
    let vsq = &ctx.gauge().squared;
    // h₁(E) ψ̃₀ once; sin(Eτ)/E acts on each component separately
    let fh = h1_multiplier(&f, cutoff);
    let integrand = |tau: f64| -> SpinorField {
        let phi_h1 = fh.map_components(|v| {
            let sym: Vec<C64> = crate::fourier::derivative_symbol(f.grid())
                .into_iter()
                .map(|s| {
                    let e = (s.im * s.im + m * m).sqrt();
                    -I * (e * tau).sin() / e
                })
                .collect();
            crate::fourier::apply_multiplier(v, &sym)
        });
        let vphi = phi_h1.map_points(|i, u| vsq.at(i) * u);
        free_functional_calculus(&vphi, m, |l| (I * l * tau).exp())
    };
    let mut out = vec![SpinorField::zeros(*psi0.grid()); times.len()];
    let first = integrand(0.0);
    let mut running = first.clone();
    let mut last = first.clone();
    for n in 0..=steps {
        if n > 0 {
            last = integrand(n as f64 * dtau);
            running += &last;
        }
        for (k, &i) in idx.iter().enumerate() {
            if i == n {
                let t = n as f64 * dtau;
                let mut trap = running.clone();
                trap.axpy(C64::new(-0.5, 0.0), &first);
                trap.axpy(C64::new(-0.5, 0.0), &last);
                let acc = trap.scale(C64::new(dtau, 0.0) * -I);
                out[k] = free_functional_calculus(&acc, m, |l| cutoff.h1(l) * (-I * l * t).exp());
            }
        }
    }
    Ok(out)
}
