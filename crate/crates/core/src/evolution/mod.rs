//! Time evolution: Crank–Nicolson, the spectral representation with its low/high split, the Born
//! splitting of the high band, and Duhamel scattering states.

pub mod born;
pub mod cn;
pub mod scattering;
pub mod spectral;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use born::{born_decomposition, convolution_phi2, BornDecomposition, BornNorms};
pub use cn::{evolve_crank_nicolson, free_evolve_cn, CnStepper, Trajectory};
pub use scattering::{scattering_remainder, scattering_state, Direction, ScatteringState};
pub use spectral::{evolve_spectral, frequency_nodes, QuadratureConfig, SpectralEvolution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    CrankNicolson,
    SpectralRep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_max: f64,
    pub sample_times: Vec<f64>,
    pub method: Method,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_max must be positive, got {}", self.t_max)));
        }
        if let Some(t) = self.sample_times.iter().find(|t| !(**t >= 0.0 && **t <= self.t_max)) {
            return Err(Error::InvalidParameter(format!("sample time {t} outside [0, {}]", self.t_max)));
        }
        Ok(())
    }

    /// Sample times rounded onto the time grid and deduplicated.
    pub fn grid_times(&self) -> Vec<f64> {
        let mut n: Vec<u64> = self.sample_times.iter().map(|t| (t / self.dt).round() as u64).collect();
        n.sort_unstable();
        n.dedup();
        n.into_iter().map(|k| k as f64 * self.dt).collect()
    }
}
