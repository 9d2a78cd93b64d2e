use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use raqst::simulator::{random_mes, random_pure_state, singlet, werner_state, ProtocolKind, SimRng, MIN_COPIES};
use raqst::quantum::DensityMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Half-decade copy budgets 10^2.5 … 10^4.5.
pub const DEFAULT_N_GRID: [u64; 5] = [316, 1000, 3162, 10000, 31623];
pub const DEFAULT_PURITIES: [f64; 8] = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
pub const DEFAULT_REPS: u64 = 100;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_HISTOGRAM_STATES: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    SweepN,
    SweepPurity,
    Histogram,
    Single,
}

/// The true state. Written in config files as `singlet`, `maximally_mixed`,
/// `werner(p)`, `random_pure` or `random_mes`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateSpec {
    Singlet,
    MaximallyMixed,
    Werner(f64),
    RandomPure,
    RandomMes,
}

impl StateSpec {
    pub fn is_random(self) -> bool {
        matches!(self, StateSpec::RandomPure | StateSpec::RandomMes)
    }

    /// Builds the state; random specs consume draws from `rng`.
    pub fn realize(self, rng: &mut SimRng) -> raqst::Result<DensityMatrix> {
        Ok(match self {
            StateSpec::Singlet => singlet(),
            StateSpec::MaximallyMixed => DensityMatrix::maximally_mixed(4),
            StateSpec::Werner(p) => werner_state(p)?,
            StateSpec::RandomPure => random_pure_state(4, rng),
            StateSpec::RandomMes => random_mes(rng),
        })
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Singlet => f.write_str("singlet"),
            StateSpec::MaximallyMixed => f.write_str("maximally_mixed"),
            StateSpec::Werner(p) => write!(f, "werner({p})"),
            StateSpec::RandomPure => f.write_str("random_pure"),
            StateSpec::RandomMes => f.write_str("random_mes"),
        }
    }
}

impl FromStr for StateSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "singlet" => return Ok(StateSpec::Singlet),
            "maximally_mixed" | "mixed" => return Ok(StateSpec::MaximallyMixed),
            "random_pure" => return Ok(StateSpec::RandomPure),
            "random_mes" => return Ok(StateSpec::RandomMes),
            _ => {}
        }
        let p = t
            .strip_prefix("werner(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| format!("unknown state {s:?}"))?;
        let p: f64 = p.trim().parse().map_err(|_| format!("bad Werner weight in {s:?}"))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(format!("Werner weight {p} outside [0, 1]"));
        }
        Ok(StateSpec::Werner(p))
    }
}

impl Serialize for StateSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StateSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub protocols: Vec<ProtocolKind>,
    pub n_list: Vec<u64>,
    pub reps: u64,
    pub state: StateSpec,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// 0 means one worker per core.
    pub workers: usize,
    /// Target purities for `sweep_purity`.
    pub purities: Vec<f64>,
    /// Random states drawn for `histogram`.
    pub histogram_states: u64,
}

/// Keys accepted in a config file; everything is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    experiment: Option<Experiment>,
    protocols: Option<Vec<String>>,
    protocol: Option<String>,
    n_list: Option<Vec<u64>>,
    n: Option<u64>,
    reps: Option<u64>,
    state: Option<StateSpec>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    workers: Option<usize>,
    purities: Option<Vec<f64>>,
    histogram_states: Option<u64>,
}

/// Command-line values; each one set here replaces the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub reps: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub protocols: Option<Vec<ProtocolKind>>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_protocols(names: &[String]) -> Result<Vec<ProtocolKind>, CliError> {
    names.iter().map(|n| n.parse().map_err(|e: raqst::Error| config_err(e.to_string()))).collect()
}

/// Parses config text (TOML) and applies `overrides`.
pub fn parse_config_str(text: &str, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let file: FileConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
    build(file, overrides)
}

/// Reads the config file if given; otherwise starts from defaults.
pub fn parse_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
            parse_config_str(&text, overrides).map_err(|e| match e {
                CliError::Config(m) => config_err(format!("{}: {m}", p.display())),
                other => other,
            })
        }
        None => build(FileConfig::default(), overrides),
    }
}

fn build(file: FileConfig, ov: &Overrides) -> Result<RunConfig, CliError> {
    let experiment = ov.experiment.or(file.experiment).unwrap_or(Experiment::Single);

    let file_protocols = match (file.protocols, file.protocol) {
        (Some(_), Some(_)) => return Err(config_err("give either `protocols` or `protocol`, not both")),
        (Some(list), None) => Some(parse_protocols(&list)?),
        (None, Some(one)) => Some(parse_protocols(&[one])?),
        (None, None) => None,
    };
    let protocols = ov.protocols.clone().or(file_protocols).unwrap_or_else(|| match experiment {
        Experiment::SweepN => ProtocolKind::ALL.to_vec(),
        Experiment::SweepPurity => vec![ProtocolKind::Mub, ProtocolKind::Raqst1, ProtocolKind::Raqst2],
        Experiment::Histogram => vec![ProtocolKind::Raqst2],
        Experiment::Single => vec![ProtocolKind::Cube],
    });

    let n_list = match (file.n_list, file.n) {
        (Some(_), Some(_)) => return Err(config_err("give either `n_list` or `n`, not both")),
        (Some(list), None) => list,
        (None, Some(n)) => vec![n],
        (None, None) if experiment == Experiment::SweepN => DEFAULT_N_GRID.to_vec(),
        (None, None) => vec![10_000],
    };

    let default_state = match experiment {
        Experiment::Histogram => StateSpec::RandomMes,
        _ => StateSpec::Singlet,
    };
    let cfg = RunConfig {
        experiment,
        protocols,
        n_list,
        reps: ov.reps.or(file.reps).unwrap_or(DEFAULT_REPS),
        state: file.state.unwrap_or(default_state),
        seed: ov.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        out_dir: ov.out_dir.clone().or(file.out_dir).unwrap_or_else(|| PathBuf::from("results")),
        workers: ov.workers.or(file.workers).unwrap_or(0),
        purities: file.purities.unwrap_or_else(|| DEFAULT_PURITIES.to_vec()),
        histogram_states: file.histogram_states.unwrap_or(DEFAULT_HISTOGRAM_STATES),
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.reps == 0 {
        return Err(config_err("reps must be at least 1"));
    }
    if cfg.n_list.is_empty() {
        return Err(config_err("n_list must not be empty"));
    }
    if let Some(n) = cfg.n_list.iter().find(|&&n| n < MIN_COPIES) {
        return Err(config_err(format!("copy budget {n} is below the minimum of {MIN_COPIES}")));
    }
    if cfg.protocols.is_empty() {
        return Err(config_err("protocols must not be empty"));
    }
    for (i, p) in cfg.protocols.iter().enumerate() {
        if cfg.protocols[..i].contains(p) {
            return Err(config_err(format!("protocol {p} listed twice")));
        }
    }
    match cfg.experiment {
        Experiment::SweepPurity => {
            if cfg.purities.is_empty() {
                return Err(config_err("purities must not be empty"));
            }
            if let Some(p) = cfg.purities.iter().find(|p| !(0.25..=1.0).contains(*p)) {
                return Err(config_err(format!("two-qubit purity {p} outside [0.25, 1]")));
            }
        }
        Experiment::Histogram => {
            if !cfg.state.is_random() {
                return Err(config_err("histogram needs state = random_mes or random_pure"));
            }
            if cfg.histogram_states == 0 {
                return Err(config_err("histogram_states must be at least 1"));
            }
        }
        Experiment::SweepN | Experiment::Single => {}
    }
    Ok(())
}

/// Werner weight p with purity (1 + 3p²)/4 equal to `purity`.
pub fn werner_weight_for_purity(purity: f64) -> f64 {
    ((4.0 * purity - 1.0) / 3.0).max(0.0).sqrt()
}
