//! Run configuration: a JSON file merged with command-line overrides.

use std::path::Path;

use circle_qm::husimi::{BargmannFunction, CylinderGrid};
use circle_qm::semiclassics::{HolomorphicHamiltonian, PropagatorOptions};
use circle_qm::states::{coherent_state, Representation, StateVector, DEFAULT_TOL};
use circle_qm::Complex64;
use serde::Deserialize;

use crate::CliError;

/// State input for the single-state commands.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    /// Truncated coherent state `|z⟩`.
    Coherent {
        z: Complex64,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Basis {
        n: i64,
    },
    Vector {
        n_min: i64,
        coeffs: Vec<Complex64>,
    },
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

impl StateSpec {
    /// Coherent states are truncated series with a finite safe band; the
    /// other kinds are exact.
    pub fn bargmann(&self, rep: Representation) -> Result<BargmannFunction, CliError> {
        Ok(match self {
            StateSpec::Coherent { z, tol } => BargmannFunction::truncated(rep, coherent_state(&rep, *z, *tol)?, *tol),
            StateSpec::Basis { n } => BargmannFunction::new(rep, StateVector::basis(*n)),
            StateSpec::Vector { n_min, coeffs } => BargmannFunction::new(rep, StateVector::new(*n_min, coeffs.clone())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoints {
    pub z_i: Complex64,
    pub z_f: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZeroSearch {
    /// Half-height of the searched band; derived from the state when absent.
    pub im_cutoff: Option<f64>,
    pub tol: f64,
}

impl Default for ZeroSearch {
    fn default() -> Self {
        ZeroSearch { im_cutoff: None, tol: 1e-11 }
    }
}

/// Comparison grid for `reconstruct`: `phi_points × im_points` over the strip.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructSpec {
    pub phi_points: usize,
    pub im_points: usize,
    pub im_max: f64,
}

impl Default for ReconstructSpec {
    fn default() -> Self {
        ReconstructSpec { phi_points: 10, im_points: 10, im_max: 2.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub representation: Option<Representation>,
    pub hamiltonian: Option<HolomorphicHamiltonian>,
    pub state: Option<StateSpec>,
    pub endpoints: Option<Endpoints>,
    pub tau: Option<f64>,
    pub grid: Option<CylinderGrid>,
    #[serde(default)]
    pub zeros: ZeroSearch,
    #[serde(default)]
    pub reconstruct: ReconstructSpec,
    #[serde(default)]
    pub propagator: PropagatorOptions,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn representation(&self) -> Result<Representation, CliError> {
        let rep = self
            .representation
            .ok_or_else(|| CliError::Config("representation is required (--delta, --s or config)".into()))?;
        rep.validate()?;
        Ok(rep)
    }

    pub fn state(&self) -> Result<&StateSpec, CliError> {
        self.state.as_ref().ok_or_else(|| CliError::Config("a state is required (--z, --basis or config)".into()))
    }

    pub fn endpoints(&self) -> Result<Endpoints, CliError> {
        self.endpoints.ok_or_else(|| CliError::Config("endpoints are required (--zI and --zF or config)".into()))
    }

    pub fn hamiltonian(&self) -> Result<HolomorphicHamiltonian, CliError> {
        let h = self.hamiltonian.unwrap_or(HolomorphicHamiltonian::FreeRotor);
        h.validate()?;
        Ok(h)
    }
}

/// A real number, optionally written with the token `pi`: `pi`, `-pi`,
/// `0.5pi`, `2*pi`, `pi/4`, `-3*pi/2`.
pub fn parse_real(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let bad = || format!("cannot parse '{text}' as a number");
    let Some(at) = t.find("pi") else {
        return t.parse().map_err(|_| bad());
    };
    let factor = match t[..at].trim_end_matches('*').trim() {
        "" | "+" => 1.0,
        "-" => -1.0,
        f => f.parse::<f64>().map_err(|_| bad())?,
    };
    let rest = t[at + 2..].trim();
    let divisor = if rest.is_empty() {
        1.0
    } else {
        rest.strip_prefix('/').ok_or_else(bad)?.trim().parse::<f64>().map_err(|_| bad())?
    };
    Ok(factor * std::f64::consts::PI / divisor)
}

/// A complex number written as `re,im`.
pub fn parse_complex(text: &str) -> Result<Complex64, String> {
    let (re, im) = text.split_once(',').ok_or_else(|| format!("expected 're,im', got '{text}'"))?;
    Ok(Complex64::new(parse_real(re)?, parse_real(im)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pi_forms() {
        assert_eq!(parse_real("pi").unwrap(), PI);
        assert_eq!(parse_real("-pi").unwrap(), -PI);
        assert_eq!(parse_real("0.5pi").unwrap(), 0.5 * PI);
        assert_eq!(parse_real("2*pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_real("pi/4").unwrap(), PI / 4.0);
        assert_eq!(parse_real("-3*pi/2").unwrap(), -3.0 * PI / 2.0);
        assert_eq!(parse_real(" 1.25 ").unwrap(), 1.25);
        assert!(parse_real("2pie").is_err());
        assert!(parse_real("x").is_err());
    }

    #[test]
    fn complex_pairs() {
        assert_eq!(parse_complex("pi,0").unwrap(), Complex64::new(PI, 0.0));
        assert_eq!(parse_complex("-0.5,1e-3").unwrap(), Complex64::new(-0.5, 1e-3));
        assert!(parse_complex("1").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{"representation": {"delta": 0, "s": 1, "hbar": 1, "extra": 2}}"#;
        assert!(serde_json::from_str::<RunConfig>(bad).is_err());
        let bad = r#"{"representaton": {"delta": 0, "s": 1}}"#;
        assert!(serde_json::from_str::<RunConfig>(bad).is_err());
        let bad = r#"{"zeros": {"tol": 1e-10, "cutoff": 2}}"#;
        assert!(serde_json::from_str::<RunConfig>(bad).is_err());
    }

    #[test]
    fn full_config_parses() {
        let text = r#"{
            "representation": {"delta": 0.3, "s": 0.5},
            "hamiltonian": {"kind": "pendulum", "k_pend": 0.1},
            "state": {"kind": "vector", "n_min": 0, "coeffs": [[1, 0], [1, 0]]},
            "endpoints": {"z_i": [0.2, 0.1], "z_f": [0.5, -0.2]},
            "tau": 0.25,
            "grid": {"phi_count": 8, "p_min": -1, "p_max": 1, "p_count": 5},
            "zeros": {"im_cutoff": 2.0},
            "propagator": {"winding_budget": 8, "bvp": {"initial_steps": 200}}
        }"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.representation().unwrap().hbar, 1.0);
        assert_eq!(cfg.hamiltonian().unwrap().coupling(), 0.1);
        assert_eq!(cfg.zeros.tol, 1e-11);
        assert_eq!(cfg.propagator.bvp.initial_steps, 200);
        assert_eq!(cfg.propagator.ring_seeds, 8);
    }
}
