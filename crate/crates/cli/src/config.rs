//! Experiment configuration, read from a TOML file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rwlm::forest::EnumerationCap;
use rwlm::mechanism::{
    mech_aldous_broder, mech_aldous_broder_finite, mech_custom, mech_cyclic_rotor, mech_hidden_triangular, mech_hv,
    mech_p_rotor_1d, mech_p_rotor_zd, mech_pq_rotor, mech_rotor_perm, mech_triangular, HiddenMechanism, Mechanism,
};
use rwlm::network::{FiniteNetwork, Network, Vertex};

use crate::CliError;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub network: NetworkSection,
    pub mechanism: Option<MechanismSection>,
    pub hidden: Option<HiddenSection>,
    pub environment: Option<EnvironmentSection>,
    pub run: Option<RunSection>,
    pub forest: Option<ForestSection>,
    pub enumeration: Option<EnumerationSection>,
    pub stats: Option<StatsSection>,
    pub verify: Option<VerifySection>,
    pub output: OutputSection,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkSection {
    Lattice { dim: usize, conductances: Vec<f64> },
    Triangular,
    Cycle { n: i64 },
    Torus { a: i64, b: i64 },
    Complete4,
    Complete { n: usize },
    Edges { vertices: usize, edges: Vec<(usize, usize, f64)> },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MechanismSection {
    AldousBroder,
    PRotor { p: f64 },
    PqRotor { p: f64, q: f64 },
    CyclicRotor { p: f64, q: f64 },
    Hv { flip: f64 },
    Triangular,
    RotorPerm { perm: Vec<usize> },
    Custom { rows: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct HiddenSection {
    /// `"triangular"`, or `"degenerate"` to wrap the `[mechanism]` section.
    pub preset: Option<String>,
    pub states: Option<Vec<String>>,
    pub kernel: Option<Vec<Vec<f64>>>,
    pub jump: Option<BTreeMap<String, Vec<f64>>>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentKindName {
    WsfPlus,
    AllEast,
    IidUniform,
    File,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSection {
    pub kind: EnvironmentKindName,
    pub root: Vec<i64>,
    /// Rotor file for `kind = "file"`: lines `x1 .. xd slot`.
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub n_steps: usize,
    pub trials: usize,
    pub radius: u32,
    pub margin: u32,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ForestKind {
    Tree,
    WsfPlus,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ForestSection {
    pub kind: ForestKind,
    pub samples: usize,
    /// Number of sampled forests written out as edge lists.
    pub write_edge_lists: usize,
    /// Window radius, for lattices only.
    pub radius: Option<u32>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EnumerationSection {
    pub max_vertices: usize,
    pub max_configs: u64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StatsSection {
    pub frobenius_tolerance: f64,
    pub max_abort_rate: f64,
    /// Predicates on the used rotor: `"axis<i>"`, `"horizontal"`, `"vertical"`.
    pub ergodic: Vec<String>,
    pub normality: bool,
    pub drift: bool,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    T1,
    Elliptic,
    Mg1,
    Mg2,
    Stationarity,
    Emulation,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub checks: Vec<CheckName>,
    pub tolerance: f64,
    pub stationarity_steps: Vec<usize>,
    pub stationarity_tolerance: f64,
    pub emulation_seeds: u64,
    pub emulation_steps: usize,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: PathBuf,
    pub format: Format,
}

fn bad(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

/// Looks up a section that the current command needs.
pub fn need<'a, T>(section: &'a Option<T>, key: &str) -> Result<&'a T, CliError> {
    section.as_ref().ok_or_else(|| bad(key, "missing section"))
}

/// The network of a config: a Cayley graph, a finite network, or both.
pub struct BuiltNetwork {
    pub cayley: Option<Network>,
    pub finite: Option<FiniteNetwork>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if let Some(run) = &self.run {
            if run.trials == 0 {
                return Err(bad("run.trials", "must be positive"));
            }
            if run.margin > run.radius {
                return Err(bad("run.margin", "exceeds run.radius"));
            }
        }
        if let Some(f) = &self.forest {
            if f.samples == 0 {
                return Err(bad("forest.samples", "must be positive"));
            }
        }
        if let Some(s) = &self.stats {
            if s.frobenius_tolerance.is_nan() || s.frobenius_tolerance < 0.0 {
                return Err(bad("stats.frobenius_tolerance", "must be non-negative"));
            }
            if !(0.0..=1.0).contains(&s.max_abort_rate) {
                return Err(bad("stats.max_abort_rate", "must lie in [0, 1]"));
            }
        }
        if let Some(env) = &self.environment {
            if env.kind == EnvironmentKindName::File && env.path.is_none() {
                return Err(bad("environment.path", "required when environment.kind = \"file\""));
            }
        }
        Ok(())
    }

    pub fn build_network(&self) -> Result<BuiltNetwork, CliError> {
        let key = "network";
        let cayley = match &self.network {
            NetworkSection::Lattice { dim, conductances } => Some(Network::make_lattice(*dim, conductances)),
            NetworkSection::Triangular => Some(Ok(Network::make_triangular())),
            NetworkSection::Cycle { n } => Some(Network::cycle(*n)),
            NetworkSection::Torus { a, b } => Some(Network::torus(*a, *b)),
            NetworkSection::Complete4 => Some(Ok(Network::complete4())),
            NetworkSection::Complete { .. } | NetworkSection::Edges { .. } => None,
        }
        .transpose()
        .map_err(|e| bad(key, e))?;
        let finite = match (&self.network, &cayley) {
            (NetworkSection::Complete { n }, _) => Some(FiniteNetwork::complete(*n)),
            (NetworkSection::Edges { vertices, edges }, _) => Some(FiniteNetwork::from_edges(*vertices, edges)),
            (_, Some(net)) if net.group().is_finite() => Some(net.finite()),
            _ => None,
        }
        .transpose()
        .map_err(|e| bad(key, e))?;
        Ok(BuiltNetwork { cayley, finite })
    }

    pub fn build_mechanism(&self, built: &BuiltNetwork) -> Result<Mechanism, CliError> {
        let key = "mechanism";
        let section = need(&self.mechanism, key)?;
        let Some(net) = &built.cayley else {
            return match section {
                MechanismSection::AldousBroder => Ok(mech_aldous_broder_finite(built.finite.as_ref().unwrap())),
                _ => Err(bad("mechanism.kind", "only aldous_broder is defined on non-Cayley networks")),
            };
        };
        let m = match section {
            MechanismSection::AldousBroder => Ok(mech_aldous_broder(net)),
            MechanismSection::PRotor { p } if net.degree() == 2 => mech_p_rotor_1d(*p),
            MechanismSection::PRotor { p } => mech_p_rotor_zd(net, *p),
            MechanismSection::PqRotor { p, q } => mech_pq_rotor(net, *p, *q),
            MechanismSection::CyclicRotor { p, q } => mech_cyclic_rotor(net, *p, *q),
            MechanismSection::Hv { flip } => mech_hv(net, *flip),
            MechanismSection::Triangular => mech_triangular(net),
            MechanismSection::RotorPerm { perm } => mech_rotor_perm(net, perm),
            MechanismSection::Custom { rows } => mech_custom(net, rows.clone()),
        };
        m.map_err(|e| bad(key, e))
    }

    pub fn build_hidden(&self, built: &BuiltNetwork) -> Result<HiddenMechanism, CliError> {
        let h = need(&self.hidden, "hidden")?;
        match h.preset.as_deref() {
            Some("triangular") => return Ok(mech_hidden_triangular()),
            Some("degenerate") => {
                let mech = self.build_mechanism(built)?;
                return HiddenMechanism::degenerate(&mech).map_err(|e| bad("hidden.preset", e));
            }
            Some(other) => return Err(bad("hidden.preset", format!("unknown preset `{other}`"))),
            None => {}
        }
        let states = h.states.clone().ok_or_else(|| bad("hidden.states", "missing"))?;
        let kernel = h.kernel.clone().ok_or_else(|| bad("hidden.kernel", "missing"))?;
        let jump_rows = h.jump.as_ref().ok_or_else(|| bad("hidden.jump", "missing"))?;
        if let Some(extra) = jump_rows.keys().find(|k| !states.contains(k)) {
            return Err(bad(&format!("hidden.jump.{extra}"), "not a declared state"));
        }
        let jump = states
            .iter()
            .map(|s| {
                jump_rows
                    .get(s)
                    .cloned()
                    .ok_or_else(|| bad(&format!("hidden.jump.{s}"), format!("missing jump rule for state `{s}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        HiddenMechanism::new(states, kernel, jump).map_err(|e| bad("hidden", e))
    }

    pub fn root(&self) -> Result<Vertex, CliError> {
        Ok(Vertex(need(&self.environment, "environment")?.root.clone()))
    }

    pub fn enumeration_cap(&self) -> Option<EnumerationCap> {
        self.enumeration.as_ref().map(|e| EnumerationCap { max_vertices: e.max_vertices, max_configs: e.max_configs })
    }
}
