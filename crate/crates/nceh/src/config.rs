//! Run configuration shared by the CLI commands.

use crate::errors::NcehError;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct GridSpec {
    pub n_r: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    pub n_psi: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { n_r: 32, n_theta: 24, n_phi: 16, n_psi: 16 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub a: f64,
    pub theta_def: f64,
    pub grid: GridSpec,
    pub tolerances: BTreeMap<String, f64>,
    pub rng_seed: u64,
    pub mode_cutoff: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

pub fn default_tolerances() -> BTreeMap<String, f64> {
    let mut t = BTreeMap::new();
    t.insert("exact_deriv".into(), 1e-9);
    t.insert("curvature".into(), 1e-6);
    t.insert("transport_eval".into(), 1e-7);
    t.insert("unitarity".into(), 1e-8);
    t.insert("quadrature".into(), 1e-5);
    t.insert("coefficient".into(), 1e-12);
    t.insert("dirac".into(), 1e-8);
    t.insert("oscillatory".into(), 1e-3);
    t.insert("roundtrip".into(), 1e-10);
    t.insert("chain_zero".into(), 1e-10);
    t.insert("orientation".into(), 1e-8);
    t.insert("cosphere".into(), 1e-6);
    t.insert("projection".into(), 1e-12);
    t.insert("dv_commutator".into(), 1e-6);
    t.insert("frame".into(), 1e-10);
    t.insert("cocycle".into(), 1e-12);
    t.insert("killing".into(), 1e-10);
    t
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            a: 1.0,
            theta_def: 0.25,
            grid: GridSpec::default(),
            tolerances: default_tolerances(),
            rng_seed: 42,
            mode_cutoff: 3,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) {
            return Err(NcehError::Config(format!("a must be positive, got {}", self.a)));
        }
        for (name, n) in [
            ("n_r", self.grid.n_r),
            ("n_theta", self.grid.n_theta),
            ("n_phi", self.grid.n_phi),
            ("n_psi", self.grid.n_psi),
        ] {
            if n < 8 {
                return Err(NcehError::Config(format!("grid {name} must be >= 8, got {n}")));
            }
        }
        let nyquist = ((self.grid.n_phi.min(self.grid.n_psi) - 1) / 2) as u32;
        if self.mode_cutoff > nyquist {
            return Err(NcehError::AliasError { cutoff: self.mode_cutoff, nyquist });
        }
        for (k, v) in &self.tolerances {
            if !(*v > 0.0) {
                return Err(NcehError::Config(format!("tolerance {k} must be positive")));
            }
        }
        Ok(())
    }

    pub fn tol(&self, key: &str) -> f64 {
        self.tolerances
            .get(key)
            .copied()
            .unwrap_or_else(|| *default_tolerances().get(key).expect("known tolerance key"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn bad_configs_rejected() {
        let mut c = RunConfig::default();
        c.grid.n_phi = 4;
        assert!(c.validate().is_err());
        let mut c2 = RunConfig::default();
        c2.mode_cutoff = 20;
        assert!(c2.validate().is_err());
        let mut c3 = RunConfig::default();
        c3.a = -1.0;
        assert!(c3.validate().is_err());
    }
}
