//! Run configuration: one TOML file with sections, overridden by flags.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use srb_core::flow::CocycleConfig;

/// Commands a configuration file may name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    Validate,
    Census,
    Domain,
    Orbit,
    Sweep,
    Count,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Informational; the subcommand on the command line decides what runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandName>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub family: FamilySection,
    pub domain: DomainSection,
    pub cocycle: CocycleSection,
    pub orbits: OrbitSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilySection {
    pub p: u32,
    pub q: u32,
    pub r: u32,
    /// Deformation parameter for single-point commands.
    pub tau: f64,
    /// Grid for `sweep`.
    pub taus: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainSection {
    /// Rotation length of the word ball used for the limit set.
    #[serde(rename = "L")]
    pub rotation_length: usize,
    /// Rotation length of the counting census; omitted to skip counting.
    #[serde(rename = "count_L", skip_serializing_if = "Option::is_none")]
    pub count_length: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CocycleSection {
    pub eps: f64,
    pub delta: f64,
    #[serde(rename = "T")]
    pub t_total: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub burn_in: f64,
    pub batch_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitSection {
    pub n_orbits: usize,
    /// Orbit index used by the `orbit` command.
    pub index: u64,
    /// Trace every n-th step of a single orbit (0 disables the trace).
    pub trace_stride: usize,
}

impl Default for FamilySection {
    fn default() -> Self {
        FamilySection {
            p: 3,
            q: 3,
            r: 4,
            tau: 0.0,
            taus: Vec::new(),
        }
    }
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection {
            rotation_length: 12,
            count_length: None,
        }
    }
}

impl Default for CocycleSection {
    fn default() -> Self {
        let c = CocycleConfig::default();
        CocycleSection {
            eps: c.eps,
            delta: c.delta,
            t_total: c.t_total,
            radius: c.radius,
            burn_in: c.burn_in,
            batch_length: c.batch_length,
        }
    }
}

impl Default for OrbitSection {
    fn default() -> Self {
        OrbitSection {
            n_orbits: 16,
            index: 0,
            trace_stride: 0,
        }
    }
}

/// A configuration problem, naming the offending key.
#[derive(Debug, thiserror::Error)]
#[error("invalid configuration key `{key}`: {reason}")]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        reason: reason.into(),
    }
}

impl RunConfig {
    /// Parse TOML text; unknown keys are rejected with their name.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            // serde reports unknown fields as "unknown field `name`, expected ...".
            let key = msg
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "<file>".to_string());
            invalid(&key, msg)
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn cocycle(&self) -> CocycleConfig {
        CocycleConfig {
            eps: self.cocycle.eps,
            delta: self.cocycle.delta,
            t_total: self.cocycle.t_total,
            radius: self.cocycle.radius,
            seed: self.seed,
            burn_in: self.cocycle.burn_in,
            batch_length: self.cocycle.batch_length,
        }
    }

    /// Range checks on every field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let f = &self.family;
        for (key, v) in [("family.p", f.p), ("family.q", f.q), ("family.r", f.r)] {
            if !(2..=1000).contains(&v) {
                return Err(invalid(key, format!("{v} is not in 2..=1000")));
            }
        }
        if !f.tau.is_finite() || f.tau.abs() > 5.0 {
            return Err(invalid("family.tau", "must be finite with |tau| <= 5"));
        }
        if f.taus.iter().any(|t| !t.is_finite() || t.abs() > 5.0) {
            return Err(invalid(
                "family.taus",
                "entries must be finite with |tau| <= 5",
            ));
        }
        if !(4..=16).contains(&self.domain.rotation_length) {
            return Err(invalid("domain.L", "must lie in 4..=16"));
        }
        if let Some(l) = self.domain.count_length {
            if !(8..=16).contains(&l) {
                return Err(invalid("domain.count_L", "must lie in 8..=16"));
            }
        }
        let c = &self.cocycle;
        let checks = [
            (
                "cocycle.eps",
                c.eps > 0.0 && c.eps <= 1e-4,
                "must lie in (0, 1e-4]",
            ),
            (
                "cocycle.delta",
                c.delta > 0.0 && c.delta <= 2.0,
                "must lie in (0, 2]",
            ),
            (
                "cocycle.T",
                c.t_total > 0.0 && c.t_total.is_finite(),
                "must be positive",
            ),
            (
                "cocycle.burn_in",
                c.burn_in >= 0.0 && c.burn_in.is_finite(),
                "must be non-negative",
            ),
            (
                "cocycle.batch_length",
                c.batch_length > 0.0 && c.batch_length.is_finite(),
                "must be positive",
            ),
            (
                "cocycle.radius",
                c.radius.is_none_or(|r| r > 0.0 && r.is_finite()),
                "must be positive",
            ),
            (
                "orbits.n_orbits",
                self.orbits.n_orbits >= 1,
                "must be at least 1",
            ),
        ];
        for (key, ok, reason) in checks {
            if !ok {
                return Err(invalid(key, reason));
            }
        }
        Ok(())
    }

    /// The sweep grid, which must be non-empty.
    pub fn sweep_grid(&self) -> Result<&[f64], ConfigError> {
        if self.family.taus.is_empty() {
            return Err(invalid("family.taus", "the tau grid is empty"));
        }
        Ok(&self.family.taus)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::parse("[cocycle]\nepsilon = 1e-6\n").unwrap_err();
        assert_eq!(err.key, "epsilon");
        let err = RunConfig::parse("colour = 3\n").unwrap_err();
        assert_eq!(err.key, "colour");
    }

    #[test]
    fn defaults_validate_and_roundtrip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let text = c.to_toml();
        assert_eq!(RunConfig::parse(&text).unwrap(), c);
    }

    #[test]
    fn out_of_range_field() {
        let c = RunConfig::parse("[cocycle]\ndelta = 5.0\n").unwrap();
        assert_eq!(c.validate().unwrap_err().key, "cocycle.delta");
        let c = RunConfig::parse("[domain]\nL = 40\n").unwrap();
        assert_eq!(c.validate().unwrap_err().key, "domain.L");
    }

    #[test]
    fn empty_grid_is_rejected() {
        let c = RunConfig::default();
        assert_eq!(c.sweep_grid().unwrap_err().key, "family.taus");
    }
}
