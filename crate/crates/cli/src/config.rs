//! Experiment configuration (TOML). Every table rejects unknown keys.

use std::path::PathBuf;

use dualmod::modsolve::Tolerances;
use dualmod::presets::{CondenserSpec, DomainPreset, Region};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Modulus,
    Duality,
    Refine,
    Coarea,
    Loewner,
    Qc,
    Thinness,
}

impl Command {
    pub const ALL: [Command; 7] =
        [Command::Modulus, Command::Duality, Command::Refine, Command::Coarea, Command::Loewner, Command::Qc, Command::Thinness];

    pub fn name(self) -> &'static str {
        match self {
            Command::Modulus => "modulus",
            Command::Duality => "duality",
            Command::Refine => "refine",
            Command::Coarea => "coarea",
            Command::Loewner => "loewner",
            Command::Qc => "qc",
            Command::Thinness => "thinness",
        }
    }
}

/// A preset domain, or a graph in the plain-text node/edge format.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Rectangle {
        width: f64,
        height: f64,
        #[serde(default)]
        origin: [f64; 2],
    },
    Annulus {
        inner: f64,
        outer: f64,
    },
    WeightedGrid {
        width: f64,
        height: f64,
        alpha: f64,
        center: [f64; 2],
    },
    GraphFile {
        path: PathBuf,
    },
}

impl DomainConfig {
    /// `None` for graph files, which carry their own spacing.
    pub fn preset(&self) -> Option<DomainPreset> {
        Some(match *self {
            DomainConfig::Rectangle { width, height, origin } => DomainPreset::Rectangle { width, height, origin },
            DomainConfig::Annulus { inner, outer } => DomainPreset::Annulus { inner, outer },
            DomainConfig::WeightedGrid { width, height, alpha, center } => DomainPreset::WeightedGrid { width, height, alpha, center },
            DomainConfig::GraphFile { .. } => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[default]
    Curve,
    Cut,
    Both,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub feasibility: Option<f64>,
    pub objective: Option<f64>,
    pub max_iterations: Option<usize>,
}

impl ToleranceConfig {
    pub fn resolve(cfg: Option<&Self>) -> Tolerances<f64> {
        let mut tol = Tolerances::default();
        if let Some(c) = cfg {
            tol.feasibility = c.feasibility.unwrap_or(tol.feasibility);
            tol.objective = c.objective.unwrap_or(tol.objective);
            tol.max_iterations = c.max_iterations.unwrap_or(tol.max_iterations);
        }
        tol
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// File names relative to the output directory; default `<command>.csv`
    /// and `<command>.json`.
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QcConfig {
    /// Image grid spacing; defaults to the source spacing.
    pub target_spacing: Option<f64>,
    /// Dilatation radii; defaults to twice the spacing.
    pub radii: Option<Vec<f64>>,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_min_center")]
    pub min_center: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// At least three condensers; defaults to left/right, top/bottom and a
    /// ring pair about the bounding-box centre.
    pub configs: Option<Vec<CondenserSpec>>,
}

fn default_margin() -> f64 {
    0.25
}

fn default_min_center() -> f64 {
    0.2
}

fn default_stride() -> usize {
    2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub e: Region,
    pub f: Region,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoewnerConfig {
    pub pairs: Vec<PairConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThinnessConfig {
    pub set: Region,
    /// Base point; snapped to the nearest node.
    pub point: [f64; 2],
    /// Dyadic decreasing radii.
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoareaConfig {
    #[serde(default = "default_graphs")]
    pub graphs: usize,
    #[serde(default = "default_max_nodes")]
    pub max_nodes: usize,
}

fn default_graphs() -> usize {
    100
}

fn default_max_nodes() -> usize {
    500
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub domain: Option<DomainConfig>,
    pub condenser: Option<CondenserSpec>,
    #[serde(default)]
    pub exponents: Vec<f64>,
    #[serde(default)]
    pub spacings: Vec<f64>,
    #[serde(default)]
    pub family: Family,
    pub seed: Option<u64>,
    pub tolerances: Option<ToleranceConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub maps: Vec<MapConfig>,
    pub qc: Option<QcConfig>,
    pub loewner: Option<LoewnerConfig>,
    pub thinness: Option<ThinnessConfig>,
    pub coarea: Option<CoareaConfig>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Schema checks that need more than one field; run before any compute.
    fn validate(&self) -> Result<(), CliError> {
        let parse = |msg: &str| Err(CliError::Parse(msg.into()));
        let needs_domain = self.command != Command::Coarea;
        if needs_domain && self.domain.is_none() {
            return parse("missing [domain]");
        }
        if needs_domain && self.exponents.is_empty() {
            return parse("`exponents` must list at least one exponent");
        }
        if self.exponents.iter().any(|&p| !(p > 1.0 && p.is_finite())) {
            return parse("every exponent must satisfy 1 < p < ∞");
        }
        if self.spacings.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return parse("every spacing must be positive");
        }
        let preset = self.domain.as_ref().is_some_and(|d| d.preset().is_some());
        if preset && self.spacings.is_empty() {
            return parse("preset domains need `spacings`");
        }
        let needs_condenser = matches!(self.command, Command::Modulus | Command::Duality | Command::Refine);
        if needs_condenser && self.condenser.is_none() {
            return parse("missing [condenser]");
        }
        match self.command {
            Command::Refine if self.spacings.len() < 2 => parse("`refine` needs at least two spacings"),
            Command::Qc if self.maps.is_empty() => parse("`qc` needs at least one [[maps]] entry"),
            Command::Loewner if self.loewner.as_ref().is_none_or(|l| l.pairs.is_empty()) => parse("`loewner` needs [[loewner.pairs]]"),
            Command::Thinness if self.thinness.is_none() => parse("`thinness` needs a [thinness] table"),
            Command::Coarea if self.seed.is_none() => parse("`coarea` needs an explicit `seed`"),
            _ => Ok(()),
        }
    }

    pub fn tolerances(&self) -> Tolerances<f64> {
        ToleranceConfig::resolve(self.tolerances.as_ref())
    }

    pub fn csv_name(&self) -> PathBuf {
        self.output.csv.clone().unwrap_or_else(|| format!("{}.csv", self.command.name()).into())
    }

    pub fn json_name(&self) -> PathBuf {
        self.output.json.clone().unwrap_or_else(|| format!("{}.json", self.command.name()).into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
command = "duality"
exponents = [2.0]
spacings = [0.25]
[domain]
kind = "rectangle"
width = 1.0
height = 1.0
[condenser]
preset = "left_right"
"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::parse(BASE).unwrap();
        assert_eq!(cfg.command, Command::Duality);
        assert_eq!(cfg.csv_name(), PathBuf::from("duality.csv"));
        assert_eq!(cfg.tolerances(), Tolerances::default());
    }

    #[test]
    fn rejects_unknown_keys_everywhere() {
        for extra in ["colour = 1\n", "[domain]\nkind = \"annulus\"\ninner = 1.0\nouter = 2.0\nholes = 3\n"] {
            let text = if extra.starts_with('[') {
                BASE.replace("[domain]\nkind = \"rectangle\"\nwidth = 1.0\nheight = 1.0\n", extra)
            } else {
                format!("{extra}{BASE}")
            };
            assert!(matches!(ExperimentConfig::parse(&text), Err(CliError::Parse(_))), "{text}");
        }
        let bad = BASE.replace("preset = \"left_right\"", "preset = \"left_right\"\nextra = 1");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn rejects_inconsistent_configs() {
        assert!(ExperimentConfig::parse(&BASE.replace("[2.0]", "[1.0]")).is_err());
        assert!(ExperimentConfig::parse(&BASE.replace("spacings = [0.25]", "spacings = []")).is_err());
        assert!(ExperimentConfig::parse(&BASE.replace("\"duality\"", "\"refine\"")).is_err());
        assert!(ExperimentConfig::parse(&BASE.replace("\"duality\"", "\"qc\"")).is_err());
        assert!(ExperimentConfig::parse("command = \"coarea\"").is_err());
        assert!(ExperimentConfig::parse("command = \"coarea\"\nseed = 3").is_ok());
    }
}
