//! TOML scenario files.
//!
//! ```toml
//! [system]
//! v = 0.5
//!
//! [du]
//! position = [0.0, 0.0]
//! workload = 0.6
//!
//! [[su]]
//! id = 1
//! position = [-20.0, 20.0]
//! workload = 0.15
//!
//! [solver]
//! mode = "cig"
//! epsilon = 1e-3
//!
//! [experiment]
//! mode = "sweep"
//! variable = "su.1.workload"
//! start = 0.0
//! stop = 0.15
//! step = 0.05
//! ```
//!
//! Every omitted field takes its reference-setup default. Unknown keys are
//! rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::{defaults, DeviceId, DeviceParams, Position, SuBaseline, SystemParams};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::solver::{
    InitialPrices, LearningRates, SolverConfig, SolverMode, UpdateOrder, DEFAULT_EPSILON,
    DEFAULT_LEARNING_RATE, DEFAULT_MAX_ITERATIONS, DEFAULT_PROBE_DELTA,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub du: DuSection,
    #[serde(default, rename = "su")]
    pub sus: Vec<SuSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub slot_length: f64,
    pub bandwidth: f64,
    pub noise_power: f64,
    pub max_tx_power: f64,
    pub pathloss_constant: f64,
    pub pathloss_exponent: f64,
    pub v: f64,
    pub su_baseline: BaselineName,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            slot_length: defaults::SLOT_LENGTH,
            bandwidth: defaults::BANDWIDTH,
            noise_power: defaults::NOISE_POWER,
            max_tx_power: defaults::MAX_TX_POWER,
            pathloss_constant: defaults::PATHLOSS_CONSTANT,
            pathloss_exponent: defaults::PATHLOSS_EXPONENT,
            v: defaults::SUBSTITUTABILITY,
            su_baseline: BaselineName::Own,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineName {
    Own,
    Du,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DuSection {
    pub position: [f64; 2],
    pub kappa: f64,
    pub cycles_per_mb: f64,
    pub f_max: f64,
    pub workload: f64,
}

impl Default for DuSection {
    fn default() -> Self {
        Self {
            position: [0.0, 0.0],
            kappa: defaults::KAPPA,
            cycles_per_mb: defaults::CYCLES_PER_MB,
            f_max: defaults::DU_F_MAX,
            workload: defaults::DU_WORKLOAD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuSection {
    /// Defaults to the 1-based position in the file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u32>,
    pub position: [f64; 2],
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_cycles")]
    pub cycles_per_mb: f64,
    #[serde(default = "default_su_f_max")]
    pub f_max: f64,
    #[serde(default = "default_p_rec")]
    pub p_rec: f64,
    #[serde(default)]
    pub workload: f64,
}

fn default_kappa() -> f64 {
    defaults::KAPPA
}
fn default_cycles() -> f64 {
    defaults::CYCLES_PER_MB
}
fn default_su_f_max() -> f64 {
    defaults::SU_F_MAX
}
fn default_p_rec() -> f64 {
    defaults::SU_P_REC
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub mode: ModeName,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub probe_delta: f64,
    /// One number for every SU or one per SU in file order.
    pub learning_rate: RateSpec,
    /// `"midpoint"` or one price per SU.
    pub initial_prices: PriceSpec,
    pub update_order: OrderName,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            mode: ModeName::Cig,
            epsilon: DEFAULT_EPSILON,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            probe_delta: DEFAULT_PROBE_DELTA,
            learning_rate: RateSpec::Uniform(DEFAULT_LEARNING_RATE),
            initial_prices: PriceSpec::Directive(PriceDirective::Midpoint),
            update_order: OrderName::Jacobi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Cig,
    Icig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderName {
    Jacobi,
    GaussSeidel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateSpec {
    Uniform(f64),
    PerSu(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriceSpec {
    Directive(PriceDirective),
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceDirective {
    Midpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub mode: ExperimentMode,
    /// Dotted override path varied by a sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentMode {
    Solve,
    Sweep,
}

/// A sweep resolved to its points.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: String,
    pub values: Vec<f64>,
}

impl ExperimentSection {
    pub fn sweep(&self) -> Result<SweepSpec> {
        if self.mode != ExperimentMode::Sweep {
            return Err(Error::invalid("experiment.mode", "not a sweep"));
        }
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::invalid(format!("experiment.{name}"), "required for a sweep"))
        };
        let variable = self
            .variable
            .clone()
            .ok_or_else(|| Error::invalid("experiment.variable", "required for a sweep"))?;
        let (start, stop, step) = (
            need(self.start, "start")?,
            need(self.stop, "stop")?,
            need(self.step, "step")?,
        );
        if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::invalid(
                "experiment",
                "need finite start <= stop and step > 0",
            ));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // Rounded to 12 decimals so 0.05 steps land on 0.15, not 0.15000000000000002.
        let values = (0..count)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect();
        Ok(SweepSpec { variable, values })
    }
}

impl ScenarioFile {
    /// Parses and normalizes without validating the physics.
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        let mut file: ScenarioFile = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        file.normalize();
        Ok(file)
    }

    /// Parses `text` after applying `key=value` overrides.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        Self::from_table(table)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        Self::parse_with_overrides(&text, overrides)
    }

    /// Fills in implied SU ids.
    fn normalize(&mut self) {
        for (i, su) in self.sus.iter_mut().enumerate() {
            su.id.get_or_insert(i as u32 + 1);
        }
    }

    /// Normalized TOML; parsing it again gives back `self`.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(format!("serialize scenario: {e}")))
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let s = &self.system;
        let system = SystemParams {
            slot_length: s.slot_length,
            bandwidth: s.bandwidth,
            noise_power: s.noise_power,
            max_tx_power: s.max_tx_power,
            pathloss_constant: s.pathloss_constant,
            pathloss_exponent: s.pathloss_exponent,
            substitutability: s.v,
            su_baseline: match s.su_baseline {
                BaselineName::Own => SuBaseline::OwnWorkload,
                BaselineName::Du => SuBaseline::DuWorkload,
            },
        };
        let d = &self.du;
        let du = DeviceParams {
            kappa: d.kappa,
            cycles_per_mb: d.cycles_per_mb,
            f_max: d.f_max,
            ..DeviceParams::du(Position::new(d.position[0], d.position[1]), d.workload)
        };
        let sus = self
            .sus
            .iter()
            .enumerate()
            .map(|(i, su)| DeviceParams {
                id: DeviceId::Su(su.id.unwrap_or(i as u32 + 1)),
                kappa: su.kappa,
                cycles_per_mb: su.cycles_per_mb,
                f_max: su.f_max,
                p_rec: su.p_rec,
                position: Position::new(su.position[0], su.position[1]),
                workload: su.workload,
            })
            .collect();
        Scenario::new(system, du, sus)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let config = SolverConfig {
            mode: match s.mode {
                ModeName::Cig => SolverMode::Cig,
                ModeName::Icig => SolverMode::Icig,
            },
            initial_prices: match &s.initial_prices {
                PriceSpec::Directive(PriceDirective::Midpoint) => InitialPrices::Midpoint,
                PriceSpec::Fixed(q) => InitialPrices::Fixed(q.clone()),
            },
            epsilon: s.epsilon,
            max_iterations: s.max_iterations,
            probe_delta: s.probe_delta,
            learning_rates: match &s.learning_rate {
                RateSpec::Uniform(a) => LearningRates::Uniform(*a),
                RateSpec::PerSu(a) => LearningRates::PerSu(a.clone()),
            },
            update_order: match s.update_order {
                OrderName::Jacobi => UpdateOrder::Jacobi,
                OrderName::GaussSeidel => UpdateOrder::GaussSeidel,
            },
        };
        config.validate()?;
        Ok(config)
    }

    /// Scenario and solver settings, validated; sweep points are checked too
    /// so an infeasible sweep fails before anything runs.
    pub fn validate(&self) -> Result<()> {
        self.scenario()?;
        self.solver_config()?;
        if let Some(exp) = &self.experiment {
            if exp.mode == ExperimentMode::Sweep {
                for point in self.sweep_points()? {
                    point.1.scenario()?;
                }
            }
        }
        Ok(())
    }

    /// Every sweep point as `(value, file with the override applied)`.
    pub fn sweep_points(&self) -> Result<Vec<(f64, ScenarioFile)>> {
        let exp = self
            .experiment
            .as_ref()
            .ok_or_else(|| Error::invalid("experiment", "missing [experiment] section"))?;
        let spec = exp.sweep()?;
        let text = self.to_toml()?;
        spec.values
            .iter()
            .map(|&value| {
                let o = format!("{}={}", spec.variable, toml_number(value));
                Ok((value, Self::parse_with_overrides(&text, &[o])?))
            })
            .collect()
    }
}

/// `value` as a TOML float literal.
fn toml_number(value: f64) -> String {
    toml::Value::Float(value).to_string()
}

/// Loads a scenario file, applies overrides and validates everything.
pub fn load_scenario(path: &Path, overrides: &[String]) -> Result<(Scenario, ScenarioFile)> {
    let file = ScenarioFile::load(path, overrides)?;
    file.validate()?;
    Ok((file.scenario()?, file))
}

/// [`load_scenario`] from text.
pub fn load_scenario_str(text: &str, overrides: &[String]) -> Result<(Scenario, ScenarioFile)> {
    let file = ScenarioFile::parse_with_overrides(text, overrides)?;
    file.validate()?;
    Ok((file.scenario()?, file))
}

const SECTION_KEYS: [(&str, &[&str]); 4] = [
    (
        "system",
        &[
            "slot_length",
            "bandwidth",
            "noise_power",
            "max_tx_power",
            "pathloss_constant",
            "pathloss_exponent",
            "v",
            "su_baseline",
        ],
    ),
    (
        "du",
        &["position", "kappa", "cycles_per_mb", "f_max", "workload"],
    ),
    (
        "solver",
        &[
            "mode",
            "epsilon",
            "max_iterations",
            "probe_delta",
            "learning_rate",
            "initial_prices",
            "update_order",
        ],
    ),
    ("experiment", &["mode", "variable", "start", "stop", "step"]),
];

const SU_KEYS: [&str; 7] = [
    "id",
    "position",
    "kappa",
    "cycles_per_mb",
    "f_max",
    "p_rec",
    "workload",
];

/// Applies one `path=value` override to a parsed scenario table.
///
/// Paths are `section.key`, `su.<id>.key` or a bare key that belongs to
/// exactly one section. Values are TOML literals; anything that does not
/// parse as one is taken as a string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::invalid(spec, "override must look like key=value"))?;
    let path = path.trim();
    let value = parse_literal(raw.trim());
    let parts: Vec<&str> = path.split('.').collect();
    match parts.as_slice() {
        ["su", id, key] => {
            if !SU_KEYS.contains(key) {
                return Err(Error::invalid(path, "unknown SU key"));
            }
            let id: u32 = id
                .parse()
                .map_err(|_| Error::invalid(path, "SU id must be a number"))?;
            let sus = table
                .get_mut("su")
                .and_then(|v| v.as_array_mut())
                .ok_or_else(|| Error::invalid(path, "scenario has no [[su]] entries"))?;
            let mut found = None;
            for (i, entry) in sus.iter_mut().enumerate() {
                let entry_id = entry
                    .get("id")
                    .and_then(|v| v.as_integer())
                    .unwrap_or(i as i64 + 1);
                if entry_id == id as i64 {
                    found = Some(entry);
                    break;
                }
            }
            let entry = found
                .and_then(|e| e.as_table_mut())
                .ok_or_else(|| Error::invalid(path, format!("no SU with id {id}")))?;
            entry.insert(key.to_string(), value);
        }
        [section, key] => {
            let known = SECTION_KEYS
                .iter()
                .find(|(s, _)| s == section)
                .ok_or_else(|| Error::invalid(path, "unknown section"))?;
            if !known.1.contains(key) {
                return Err(Error::invalid(path, "unknown key"));
            }
            section_table(table, section)?.insert(key.to_string(), value);
        }
        [key] => {
            let owners: Vec<&str> = SECTION_KEYS
                .iter()
                .filter(|(_, keys)| keys.contains(key))
                .map(|(s, _)| *s)
                .collect();
            match owners.as_slice() {
                [section] => {
                    section_table(table, section)?.insert(key.to_string(), value);
                }
                [] => return Err(Error::invalid(path, "unknown key")),
                _ => {
                    return Err(Error::invalid(
                        path,
                        format!("ambiguous; qualify with one of {}", owners.join(", ")),
                    ))
                }
            }
        }
        _ => return Err(Error::invalid(path, "unrecognized override path")),
    }
    Ok(())
}

fn section_table<'t>(table: &'t mut toml::Table, section: &str) -> Result<&'t mut toml::Table> {
    table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()))
        .as_table_mut()
        .ok_or_else(|| Error::invalid(section, "is not a table"))
}

fn parse_literal(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("x = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("x"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[[su]]
position = [-20.0, 20.0]
workload = 0.15

[[su]]
position = [20, 20]
"#;

    #[test]
    fn minimal_file_gets_reference_defaults() {
        let (s, _) = load_scenario_str(MINIMAL, &[]).unwrap();
        assert_eq!(s, Scenario::two_su_reference());
    }

    #[test]
    fn normalized_text_round_trips() {
        let file = ScenarioFile::parse(MINIMAL).unwrap();
        let text = file.to_toml().unwrap();
        let again = ScenarioFile::parse(&text).unwrap();
        assert_eq!(again, file);
        assert_eq!(again.to_toml().unwrap(), text);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\n[system]\nbandwith = 2.0\n");
        assert!(matches!(ScenarioFile::parse(&text), Err(Error::Parse(_))));
    }

    #[test]
    fn parse_errors_point_at_the_line() {
        let err = ScenarioFile::parse("[system]\nv = = 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn empty_su_list_is_invalid() {
        assert!(load_scenario_str("[system]\nv = 0.3\n", &[]).is_err());
    }

    #[test]
    fn overrides_by_path_id_and_bare_key() {
        let o = [
            "system.bandwidth=2".to_string(),
            "su.2.workload=0.1".to_string(),
            "v=0".to_string(),
            "mode=icig".to_string(),
        ];
        let err = ScenarioFile::parse_with_overrides(MINIMAL, &o).unwrap_err();
        assert!(err.to_string().contains("ambiguous"), "{err}");
        let file = ScenarioFile::parse_with_overrides(MINIMAL, &o[..3]).unwrap();
        assert_eq!(file.system.bandwidth, 2.0);
        assert_eq!(file.system.v, 0.0);
        assert_eq!(file.sus[1].workload, 0.1);
        let file =
            ScenarioFile::parse_with_overrides(MINIMAL, &["solver.mode=icig".into()]).unwrap();
        assert_eq!(file.solver.mode, ModeName::Icig);
    }

    #[test]
    fn bad_overrides_are_rejected() {
        for o in [
            "system.nope=1",
            "su.9.workload=0",
            "nothing",
            "su.1.speed=2",
            "zzz=1",
        ] {
            assert!(
                ScenarioFile::parse_with_overrides(MINIMAL, &[o.to_string()]).is_err(),
                "{o}"
            );
        }
    }

    #[test]
    fn solver_section_variants() {
        let text = format!(
            "{MINIMAL}\n[solver]\nlearning_rate = [0.1, 0.3]\ninitial_prices = [0.2, 0.2]\nupdate_order = \"gauss_seidel\"\n"
        );
        let config = ScenarioFile::parse(&text).unwrap().solver_config().unwrap();
        assert_eq!(config.learning_rates, LearningRates::PerSu(vec![0.1, 0.3]));
        assert_eq!(config.initial_prices, InitialPrices::Fixed(vec![0.2, 0.2]));
        assert_eq!(config.update_order, UpdateOrder::GaussSeidel);
    }

    #[test]
    fn sweep_points_cover_the_range() {
        let text = format!(
            "{MINIMAL}\n[experiment]\nmode = \"sweep\"\nvariable = \"su.2.workload\"\nstart = 0.0\nstop = 0.15\nstep = 0.05\n"
        );
        let file = ScenarioFile::parse(&text).unwrap();
        file.validate().unwrap();
        let points = file.sweep_points().unwrap();
        assert_eq!(points.len(), 4);
        assert_eq!(points[2].1.sus[1].workload, 0.1);
        assert_eq!(points[3].0, 0.15);
    }

    #[test]
    fn infeasible_sweep_fails_at_load() {
        let text = format!(
            "{MINIMAL}\n[experiment]\nmode = \"sweep\"\nvariable = \"su.1.workload\"\nstart = 0.0\nstop = 0.5\nstep = 0.25\n"
        );
        let err = load_scenario_str(&text, &[]).unwrap_err();
        assert!(matches!(err, Error::FrequencyInfeasible { .. }), "{err}");
    }
}
