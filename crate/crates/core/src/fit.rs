//! Power-law fits of sampled norms.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Minimum number of samples inside a decay-fit window.
pub const MIN_SAMPLES: usize = 8;

/// Sampled norms with an optional fitted exponent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
}

impl DecaySeries {
    pub fn new(times: Vec<f64>, norms: Vec<f64>) -> Result<Self> {
        if times.len() != norms.len() {
            return Err(Error::InvalidParameter(format!("{} times but {} norms", times.len(), norms.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("times must be strictly increasing".into()));
        }
        Ok(DecaySeries { times, norms, ..Default::default() })
    }

    /// Fit on `window` and record the result in the series.
    pub fn fit(&mut self, window: (f64, f64)) -> Result<PowerFit> {
        let f = fit_decay_exponent(self, window)?;
        self.fitted_exponent = Some(f.exponent);
        self.fit_residual = Some(f.residual);
        self.window = Some(window);
        Ok(f)
    }
}

/// `y ≈ c·x^p` fitted on `log y` against `log x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// RMS of the log residuals.
    pub residual: f64,
    /// 95% confidence interval of the exponent.
    pub ci95: (f64, f64),
    pub samples: usize,
}

/// Least-squares power law through at least three positive samples.
pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<PowerFit> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::DegenerateWindow(format!("need >= 3 paired samples, got {}", x.len().min(y.len()))));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::DegenerateWindow("power-law fit needs positive finite samples".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateWindow("all abscissae coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let p = sxy / sxx;
    let b = my - p * mx;
    let ss: f64 = lx.iter().zip(&ly).map(|(a, c)| (c - b - p * a).powi(2)).sum();
    let dof = n - 2.0;
    let se = (ss / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).map(|d| d.inverse_cdf(0.975)).unwrap_or(f64::NAN);
    Ok(PowerFit {
        exponent: p,
        prefactor: b.exp(),
        residual: (ss / n).sqrt(),
        ci95: (p - t * se, p + t * se),
        samples: lx.len(),
    })
}

/// Decay exponent of `series` over the closed window `[t0, t1]`.
pub fn fit_decay_exponent(series: &DecaySeries, window: (f64, f64)) -> Result<PowerFit> {
    let (t0, t1) = window;
    if !(t0 > 0.0 && t1 > t0) {
        return Err(Error::DegenerateWindow(format!("window [{t0}, {t1}] must satisfy 0 < t0 < t1")));
    }
    let (x, y): (Vec<f64>, Vec<f64>) =
        series.times.iter().zip(&series.norms).filter(|(t, _)| **t >= t0 && **t <= t1).map(|(t, v)| (*t, *v)).unzip();
    if x.len() < MIN_SAMPLES {
        return Err(Error::DegenerateWindow(format!("{} samples in [{t0}, {t1}], need {MIN_SAMPLES}", x.len())));
    }
    if y.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::DegenerateWindow("norms must be positive".into()));
    }
    power_law_fit(&x, &y)
}

/// `count` geometrically spaced times covering `[t0, t1]`.
pub fn log_times(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| t0 * (t1 / t0).powf(k as f64 / (count - 1) as f64)).collect()
}
