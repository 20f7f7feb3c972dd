//! Pipeline configuration: a flat `key = value` file with every key
//! overridable by a CLI flag (flags win).

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;

use netvuln::evaluation::MapVariant;
use netvuln::graph::EdgeListFormat;
use netvuln::roles::EdgeSemantics;
use netvuln::trust::TsmParams;
use netvuln::{Error, Result};

/// `pipeline` flags. Everything except `--config` mirrors a config key;
/// unset flags fall back to the file, then to the documented default.
#[derive(Args)]
pub struct PipelineArgs {
    /// Flat key=value config file
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// tsv or csv
    #[arg(long)]
    pub format: Option<String>,
    /// Ground-truth spreader list; omit to skip the evaluation stage
    #[arg(long)]
    pub spreaders: Option<PathBuf>,
    /// External assignment, required with --detector file
    #[arg(long)]
    pub communities_file: Option<PathBuf>,
    /// louvain, lpa, or file
    #[arg(long)]
    pub detector: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub resolution: Option<f64>,
    #[arg(long)]
    pub max_sweeps: Option<u32>,
    #[arg(long)]
    pub involvement: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<u32>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub log_floor: Option<f64>,
    /// follow-out or any
    #[arg(long)]
    pub edge_semantics: Option<String>,
    /// Comma-separated ascending precision cutoffs
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    #[arg(long)]
    pub map_k: Option<usize>,
    /// standard or literal
    #[arg(long)]
    pub map_variant: Option<String>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    Louvain,
    Lpa,
    File,
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "louvain" => Ok(Self::Louvain),
            "lpa" => Ok(Self::Lpa),
            "file" => Ok(Self::File),
            other => Err(Error::InvalidParams {
                message: format!("unknown detector '{other}' (expected louvain, lpa, or file)"),
            }),
        }
    }
}

impl std::fmt::Display for Detector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Louvain => "louvain",
            Self::Lpa => "lpa",
            Self::File => "file",
        })
    }
}

/// Fully resolved pipeline configuration.
pub struct PipelineConfig {
    pub edges: PathBuf,
    pub format: EdgeListFormat,
    pub spreaders: Option<PathBuf>,
    pub communities_file: Option<PathBuf>,
    pub detector: Detector,
    pub seed: u64,
    pub resolution: f64,
    pub max_sweeps: u32,
    pub tsm: TsmParams,
    pub edge_semantics: EdgeSemantics,
    pub ks: Vec<usize>,
    pub map_k: usize,
    pub map_variant: MapVariant,
    pub out_dir: PathBuf,
}

const KNOWN_KEYS: &[&str] = &[
    "edges",
    "format",
    "spreaders",
    "communities_file",
    "detector",
    "seed",
    "resolution",
    "max_sweeps",
    "involvement",
    "max_iters",
    "epsilon",
    "log_floor",
    "edge_semantics",
    "ks",
    "map_k",
    "map_variant",
    "out_dir",
];

fn load_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: lineno + 1,
            message: format!("expected key = value, got '{line}'"),
        })?;
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("unknown config key '{key}'"),
            });
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("duplicate config key '{key}'"),
            });
        }
    }
    Ok(map)
}

fn parse_str<T: FromStr>(s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse()
        .map_err(|e: T::Err| Error::InvalidParams { message: e.to_string() })
}

fn parsed<T: FromStr>(file: &HashMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match file.get(key) {
        None => Ok(None),
        Some(raw) => raw.parse::<T>().map(Some).map_err(|e| Error::InvalidParams {
            message: format!("config key '{key}': {e}"),
        }),
    }
}

impl PipelineArgs {
    /// Merge flags over the config file over defaults and validate.
    pub fn resolve(self) -> Result<PipelineConfig> {
        let file = match &self.config {
            Some(path) => load_file(path)?,
            None => HashMap::new(),
        };

        let edges = self
            .edges
            .or_else(|| file.get("edges").map(PathBuf::from))
            .ok_or_else(|| Error::InvalidParams {
                message: "'edges' is required (flag --edges or config key)".into(),
            })?;
        let out_dir = self
            .out_dir
            .or_else(|| file.get("out_dir").map(PathBuf::from))
            .ok_or_else(|| Error::InvalidParams {
                message: "'out_dir' is required (flag --out-dir or config key)".into(),
            })?;

        let format = match self.format {
            Some(s) => parse_str(&s)?,
            None => parsed(&file, "format")?.unwrap_or(EdgeListFormat::Tsv),
        };
        let detector = match self.detector {
            Some(s) => parse_str(&s)?,
            None => parsed(&file, "detector")?.unwrap_or(Detector::Louvain),
        };
        let edge_semantics = match self.edge_semantics {
            Some(s) => parse_str(&s)?,
            None => parsed(&file, "edge_semantics")?.unwrap_or(EdgeSemantics::FollowOut),
        };
        let map_variant = match self.map_variant {
            Some(s) => parse_str(&s)?,
            None => parsed(&file, "map_variant")?.unwrap_or(MapVariant::Standard),
        };

        let ks = match self.ks {
            Some(ks) => ks,
            None => match file.get("ks") {
                None => vec![1, 5, 10, 15],
                Some(raw) => raw
                    .split(',')
                    .map(|t| {
                        t.trim().parse::<usize>().map_err(|e| Error::InvalidParams {
                            message: format!("config key 'ks': {e}"),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            },
        };
        if ks.is_empty() || ks.windows(2).any(|w| w[0] >= w[1]) || ks[0] == 0 {
            return Err(Error::InvalidParams {
                message: "ks must be nonempty, positive, strictly ascending".into(),
            });
        }

        let defaults = TsmParams::default();
        let tsm = TsmParams {
            involvement: self
                .involvement
                .or(parsed(&file, "involvement")?)
                .unwrap_or(defaults.involvement),
            max_iterations: self
                .max_iters
                .or(parsed(&file, "max_iters")?)
                .unwrap_or(defaults.max_iterations),
            convergence_epsilon: self
                .epsilon
                .or(parsed(&file, "epsilon")?)
                .unwrap_or(defaults.convergence_epsilon),
            log_floor: self
                .log_floor
                .or(parsed(&file, "log_floor")?)
                .unwrap_or(defaults.log_floor),
        };
        tsm.validate()?;

        let communities_file = self
            .communities_file
            .or_else(|| file.get("communities_file").map(PathBuf::from));
        if detector == Detector::File && communities_file.is_none() {
            return Err(Error::InvalidParams {
                message: "detector 'file' needs 'communities_file'".into(),
            });
        }

        Ok(PipelineConfig {
            edges,
            format,
            spreaders: self.spreaders.or_else(|| file.get("spreaders").map(PathBuf::from)),
            communities_file,
            detector,
            seed: self.seed.or(parsed(&file, "seed")?).unwrap_or(0),
            resolution: self.resolution.or(parsed(&file, "resolution")?).unwrap_or(1.0),
            max_sweeps: self.max_sweeps.or(parsed(&file, "max_sweeps")?).unwrap_or(100),
            tsm,
            edge_semantics,
            ks,
            map_k: self.map_k.or(parsed(&file, "map_k")?).unwrap_or(15),
            map_variant,
            out_dir,
        })
    }
}
