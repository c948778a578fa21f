//! Branch-respecting square root, Bessel `J0`/`J1`, and smooth spectral cutoffs.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// How a point on (or near) the positive real `ζ`-axis is approached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Above,
    Below,
    Interior,
}

impl Side {
    pub fn flipped(self) -> Side {
        match self {
            Side::Above => Side::Below,
            Side::Below => Side::Above,
            Side::Interior => Side::Interior,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchRoot {
    pub value: C64,
    /// Set when `ζ = 0`, where the branch point sits.
    pub at_edge: bool,
}

/// Square root with `Im > 0` off `[0, ∞)`; on `(0, ∞)` the sign follows the approach side.
pub fn branch_sqrt(zeta: C64, side: Side) -> Result<BranchRoot> {
    if zeta == C64::new(0.0, 0.0) {
        return Ok(BranchRoot { value: zeta, at_edge: true });
    }
    let on_cut = zeta.im == 0.0 && zeta.re > 0.0;
    let value = if on_cut {
        let r = zeta.re.sqrt();
        match side {
            Side::Above => C64::new(r, 0.0),
            Side::Below => C64::new(-r, 0.0),
            Side::Interior => return Err(Error::AmbiguousBranch),
        }
    } else {
        let s = zeta.sqrt();
        if s.im < 0.0 {
            -s
        } else {
            s
        }
    };
    Ok(BranchRoot { value, at_edge: false })
}

const SERIES_LIMIT: f64 = 12.0;
const ASYMPTOTIC_LIMIT: f64 = 40.0;

fn check_arg(u: f64) -> Result<()> {
    if u.is_nan() || u < 0.0 {
        Err(Error::InvalidParameter(format!("Bessel argument must be >= 0, got {u}")))
    } else {
        Ok(())
    }
}

pub fn bessel_j0(u: f64) -> Result<f64> {
    check_arg(u)?;
    Ok(j0_unchecked(u))
}

pub fn bessel_j1(u: f64) -> Result<f64> {
    check_arg(u)?;
    Ok(j1_unchecked(u))
}

/// `J0` for `u >= 0` (callers guarantee the sign).
pub(crate) fn j0_unchecked(u: f64) -> f64 {
    if u <= SERIES_LIMIT {
        series(u, 0)
    } else if u <= ASYMPTOTIC_LIMIT {
        miller(u).0
    } else {
        hankel(u, 0)
    }
}

pub(crate) fn j1_unchecked(u: f64) -> f64 {
    if u <= SERIES_LIMIT {
        series(u, 1)
    } else if u <= ASYMPTOTIC_LIMIT {
        miller(u).1
    } else {
        hankel(u, 1)
    }
}

/// `J1(u)/u`, finite at the origin.
pub(crate) fn j1_over_u(u: f64) -> f64 {
    if u < 1e-3 {
        let q = u * u / 4.0;
        0.5 * (1.0 - q / 2.0 + q * q / 12.0)
    } else {
        j1_unchecked(u) / u
    }
}

fn series(u: f64, order: u32) -> f64 {
    let q = -u * u / 4.0;
    let mut term = if order == 0 { 1.0 } else { u / 2.0 };
    let mut sum = term;
    let nu = order as f64;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && kf > u {
            break;
        }
    }
    sum
}

/// Backward recurrence normalized by `J0 + 2 Σ J_{2k} = 1`.
fn miller(u: f64) -> (f64, f64) {
    let mut n = (u + 30.0 + 8.0 * u.sqrt()) as usize;
    n += n % 2;
    let (mut jp, mut j) = (0.0_f64, 1e-30_f64);
    let (mut j0, mut j1) = (0.0, 0.0);
    let mut norm = 0.0;
    for k in (1..=n).rev() {
        let jm = 2.0 * k as f64 / u * j - jp;
        jp = j;
        j = jm;
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j;
        }
        if k - 1 == 1 {
            j1 = j;
        }
        if k - 1 == 0 {
            j0 = j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            norm *= 1e-250;
            j1 *= 1e-250;
        }
    }
    norm += j0;
    (j0 / norm, j1 / norm)
}

fn hankel(u: f64, order: u32) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let (mut p, mut q) = (1.0, 0.0);
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        term *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * u);
        if term.abs() >= prev {
            break;
        }
        prev = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = u - (order as f64 / 2.0 + 0.25) * PI;
    (2.0 / (PI * u)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Smooth partition `l + h = 1` of the frequency axis around the gap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub m: f64,
    pub eps: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffKind {
    L,
    H,
    H1,
}

fn rho(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

impl CutoffSpec {
    pub fn new(m: f64, eps: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) || !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("cutoff needs m > 0 and eps > 0, got m={m}, eps={eps}")));
        }
        Ok(CutoffSpec { m, eps })
    }

    fn argument(&self, omega: f64) -> f64 {
        (self.m + 2.0 * self.eps - omega.abs()) / self.eps
    }

    /// Low-energy cutoff: 1 on `|ω| <= m + ε`, 0 on `|ω| >= m + 2ε`.
    pub fn l(&self, omega: f64) -> f64 {
        let u = self.argument(omega);
        let (a, b) = (rho(u), rho(1.0 - u));
        a / (a + b)
    }

    /// `1 - l`, evaluated directly so tiny values keep relative accuracy.
    pub fn h(&self, omega: f64) -> f64 {
        let u = self.argument(omega);
        let (a, b) = (rho(u), rho(1.0 - u));
        b / (a + b)
    }

    pub fn h1(&self, omega: f64) -> f64 {
        self.h(omega).sqrt()
    }

    pub fn value(&self, omega: f64, which: CutoffKind) -> f64 {
        match which {
            CutoffKind::L => self.l(omega),
            CutoffKind::H => self.h(omega),
            CutoffKind::H1 => self.h1(omega),
        }
    }
}

/// Spectral band selector used by propagators and the spectral representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Full,
    Low,
    High,
    HighH1,
}

impl Band {
    pub fn weight(self, spec: &CutoffSpec, omega: f64) -> f64 {
        match self {
            Band::Full => 1.0,
            Band::Low => spec.l(omega),
            Band::High => spec.h(omega),
            Band::HighH1 => spec.h1(omega),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// `J_n(u) = (1/2π) ∫ cos(nθ - u sin θ) dθ`, trapezoid over a full period.
    fn bessel_oracle(n: u32, u: f64) -> f64 {
        let m = 4 * (u as usize + 64);
        let h = 2.0 * PI / m as f64;
        (0..m).map(|k| (n as f64 * k as f64 * h - u * (k as f64 * h).sin()).cos()).sum::<f64>() / m as f64
    }

    #[test]
    fn sqrt_examples() {
        let r = branch_sqrt(C64::new(-1.0, 0.0), Side::Interior).unwrap();
        assert!((r.value - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(branch_sqrt(C64::new(4.0, 0.0), Side::Above).unwrap().value, C64::new(2.0, 0.0));
        assert_eq!(branch_sqrt(C64::new(4.0, 0.0), Side::Below).unwrap().value, C64::new(-2.0, 0.0));
        let r = branch_sqrt(C64::new(0.0, 2.0), Side::Interior).unwrap();
        assert!((r.value - C64::new(1.0, 1.0)).norm() < 1e-15);
        let e = branch_sqrt(C64::new(0.0, 0.0), Side::Above).unwrap();
        assert!(e.at_edge && e.value == C64::new(0.0, 0.0));
        assert_eq!(branch_sqrt(C64::new(3.0, 0.0), Side::Interior), Err(Error::AmbiguousBranch));
    }

    #[test]
    fn bessel_values_at_origin() {
        assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
        assert_eq!(bessel_j1(0.0).unwrap(), 0.0);
        assert!(bessel_j0(-1.0).is_err());
    }

    #[test]
    fn first_zero_of_j0_by_bisection() {
        let (mut a, mut b) = (2.0, 3.0);
        for _ in 0..100 {
            let c = 0.5 * (a + b);
            if bessel_j0(a).unwrap() * bessel_j0(c).unwrap() <= 0.0 {
                b = c
            } else {
                a = c
            }
        }
        assert!((0.5 * (a + b) - 2.404825557695773).abs() < 1e-12);
    }

    #[test]
    fn matches_integral_representation() {
        let mut u = 0.0;
        while u < 120.0 {
            for n in 0..2 {
                let got = if n == 0 { bessel_j0(u) } else { bessel_j1(u) }.unwrap();
                let want = bessel_oracle(n, u);
                assert!((got - want).abs() < 1e-12, "J{n}({u}): {got} vs {want}");
            }
            u += 0.173;
        }
    }

    #[test]
    fn large_argument_envelope() {
        // The leading Hankel term is off by at most the first neglected term, 1/(8u) of the envelope.
        let u = 50.0;
        let env = (2.0 / (PI * u)).sqrt();
        let lead = env * (u - PI / 4.0).cos();
        let err = (bessel_j0(u).unwrap() - lead).abs() / env;
        assert!(err < 1.0 / (8.0 * u), "{err}");
        let two_term = env * ((u - PI / 4.0).cos() + (u - PI / 4.0).sin() / (8.0 * u));
        assert!((bessel_j0(u).unwrap() - two_term).abs() < 1e-4 * env);
    }

    #[test]
    fn bessel_ode_residual() {
        let d = 1e-3;
        let mut u = 0.5;
        while u < 60.0 {
            let (jm, j, jp) = (bessel_j0(u - d).unwrap(), bessel_j0(u).unwrap(), bessel_j0(u + d).unwrap());
            let jpp = (jp - 2.0 * j + jm) / (d * d);
            let jd = (jp - jm) / (2.0 * d);
            assert!((u * jpp + jd + u * j).abs() < 1e-5 * u.max(1.0), "u={u}");
            assert!((jd + bessel_j1(u).unwrap()).abs() < 1e-6);
            u += 0.37;
        }
    }

    #[test]
    fn cutoff_examples() {
        let c = CutoffSpec::new(1.0, 0.5).unwrap();
        assert_eq!((c.l(1.0), c.h(1.0), c.h1(1.0)), (1.0, 0.0, 0.0));
        assert_eq!((c.l(2.0), c.h(2.0), c.h1(2.0)), (0.0, 1.0, 1.0));
        assert_eq!((c.l(-2.0), c.h(-2.0)), (0.0, 1.0));
        let mid = c.l(1.75);
        assert!((mid - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cutoff_fourth_differences_settle() {
        let c = CutoffSpec::new(1.0, 0.5).unwrap();
        let max_fourth = |d: f64| {
            let mut worst = 0.0_f64;
            let mut w = 1.3;
            while w < 2.2 {
                let v: Vec<f64> = (0..5).map(|j| c.l(w + j as f64 * d)).collect();
                let q = (v[0] - 4.0 * v[1] + 6.0 * v[2] - 4.0 * v[3] + v[4]) / d.powi(4);
                worst = worst.max(q.abs());
                w += 1e-3;
            }
            worst
        };
        let (a, b) = (max_fourth(1e-2), max_fourth(5e-3));
        assert!(b < 1e5 && (a - b).abs() < 0.15 * b, "{a} {b}");
    }

    proptest! {
        #[test]
        fn sqrt_squares_back(re in -1e3..1e3f64, im in -1e3..1e3f64) {
            let z = C64::new(re, im);
            prop_assume!(z.norm() > 1e-12);
            for side in [Side::Above, Side::Below, Side::Interior] {
                if let Ok(r) = branch_sqrt(z, side) {
                    prop_assert!((r.value * r.value - z).norm() <= 1e-14 * z.norm());
                    if !(im == 0.0 && re > 0.0) {
                        prop_assert!(r.value.im > 0.0);
                    }
                }
            }
        }

        #[test]
        fn cutoff_partition(omega in -10.0..10.0f64, m in 0.1..3.0f64, eps in 0.05..2.0f64) {
            let c = CutoffSpec::new(m, eps).unwrap();
            let (l, h, h1) = (c.l(omega), c.h(omega), c.h1(omega));
            prop_assert!((l + h - 1.0).abs() < 1e-15);
            prop_assert!((h1 * h1 - h).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&l) && (0.0..=1.0).contains(&h));
            prop_assert_eq!(l, c.l(-omega));
        }
    }
}
