//! Run descriptions and recorded time series shared by both dynamics engines.
//!
//! A [`TrajectoryRecord`] couples the measured observable series with a full
//! [`RunConfig`] snapshot so that downstream analysis can check comparability
//! (e.g. a melting curve requires records that differ only in temperature)
//! and so that CSV/JSON exports are self-describing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{BathConfig, SpinModel};
use crate::tensor::CVec;

/// Which dynamics engine produced a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Stochastic repeated-interaction simulation.
    Collision,
    /// Deterministic master-equation integration.
    Lindblad,
}

/// Damping parameters of the master-equation engine: overall rate Γ and
/// thermal occupation n̄ of the effective bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingConfig {
    pub rate: f64,
    pub n_bar: f64,
}

impl DampingConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.rate.is_finite() || self.rate < 0.0 {
            return Err(Error::InvalidValue(format!(
                "damping rate must be finite and ≥ 0, got {}",
                self.rate
            )));
        }
        if !self.n_bar.is_finite() || self.n_bar < 0.0 {
            return Err(Error::InvalidValue(format!(
                "thermal occupation must be finite and ≥ 0, got {}",
                self.n_bar
            )));
        }
        Ok(())
    }
}

/// Everything needed to reproduce a run. Engine-specific fields are optional
/// and validated by the engine that consumes them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub engine: Engine,
    /// Model descriptor when the run was built from one; `None` for runs
    /// constructed from a raw operator specification.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<SpinModel>,
    /// Collision-engine bath (ancilla temperature, splitting, τ, γ).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<BathConfig>,
    /// Master-equation damping (Γ, n̄).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<DampingConfig>,
    /// Initial pure-state amplitudes as (re, im) pairs in the computational
    /// basis; empty when the run started from a general density matrix.
    #[serde(default)]
    pub initial_state: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_collisions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_substeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub seed: u64,
}

impl RunConfig {
    /// Store a state vector as serializable amplitude pairs.
    pub fn amplitudes_of(psi: &CVec) -> Vec<(f64, f64)> {
        psi.iter().map(|a| (a.re, a.im)).collect()
    }

    /// The configuration with temperature-like fields cleared, used to decide
    /// whether two runs are comparable apart from bath temperature.
    fn temperature_blind(&self) -> Self {
        let mut cfg = self.clone();
        if let Some(bath) = cfg.bath.as_mut() {
            bath.beta = 0.0;
        }
        if let Some(damping) = cfg.damping.as_mut() {
            damping.n_bar = 0.0;
        }
        cfg
    }
}

/// True when the two configurations agree in every respect except bath
/// temperature (collision-engine β and/or master-equation n̄).
pub fn same_except_temperature(a: &RunConfig, b: &RunConfig) -> bool {
    a.temperature_blind() == b.temperature_blind()
}

/// A simulated time series: strictly increasing times, one named real series
/// per observable, and the full configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub config: RunConfig,
    pub seed: u64,
    pub collision_count: usize,
    pub times: Vec<f64>,
    /// Named observable series, in recording order; each series has one value
    /// per entry of `times`.
    pub observables: Vec<(String, Vec<f64>)>,
}

/// Expectation bound for single-site Pauli observables, with numerical slack.
const PAULI_BOUND: f64 = 1.0 + 1e-8;

impl TrajectoryRecord {
    /// The series recorded under `name`, if present.
    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.observables
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn names(&self) -> Vec<&str> {
        self.observables.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Structural checks: nonempty strictly-increasing times, equal series
    /// lengths, finite values, and the |⟨σ⟩| ≤ 1 bound for series whose names
    /// mark them as single-site Pauli expectations (`sx*`, `sy*`, `sz*`).
    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() {
            return Err(Error::InvalidState("record has no time points".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidState("times are not strictly increasing".into()));
        }
        if !self.times.iter().all(|t| t.is_finite()) {
            return Err(Error::Numerical("non-finite time in record".into()));
        }
        for (name, series) in &self.observables {
            if series.len() != self.times.len() {
                return Err(Error::InvalidState(format!(
                    "series {name:?} has {} points for {} times",
                    series.len(),
                    self.times.len()
                )));
            }
            if !series.iter().all(|v| v.is_finite()) {
                return Err(Error::Numerical(format!("non-finite value in series {name:?}")));
            }
            let is_pauli = name.starts_with("sx") || name.starts_with("sy") || name.starts_with("sz");
            if is_pauli && series.iter().any(|v| v.abs() > PAULI_BOUND) {
                return Err(Error::Numerical(format!(
                    "series {name:?} exceeds the Pauli expectation bound"
                )));
            }
        }
        Ok(())
    }

    /// CSV rendering: header `t,<name>,...`, one row per time point, floats
    /// in shortest round-trip form so identical runs are byte-identical.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for (name, _) in &self.observables {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (row, t) in self.times.iter().enumerate() {
            out.push_str(&format!("{t}"));
            for (_, series) in &self.observables {
                out.push_str(&format!(",{}", series[row]));
            }
            out.push('\n');
        }
        out
    }

    /// JSON sidecar describing the run: full configuration, seed, series
    /// names, point/collision counts, and the library version.
    pub fn sidecar_json(&self) -> Result<String> {
        let sidecar = serde_json::json!({
            "config": self.config,
            "seed": self.seed,
            "collision_count": self.collision_count,
            "points": self.times.len(),
            "t_final": self.final_time(),
            "observables": self.names(),
            "version": env!("CARGO_PKG_VERSION"),
        });
        serde_json::to_string_pretty(&sidecar)
            .map_err(|e| Error::InvalidValue(format!("sidecar serialization failed: {e}")))
    }
}
