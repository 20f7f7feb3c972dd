//! Stage execution: shared loaders, stage-tagged failures, atomic report
//! writing, per-stage wall-time logging, and the community statistics
//! table.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use netvuln::community::{label_propagation, load_assignment, louvain, CommunityAssignment};
use netvuln::evaluation::{evaluate, EvalReport, MapVariant, SpreaderSet};
use netvuln::graph::{load_edge_list, DirectedGraph, EdgeListFormat, NodeId};
use netvuln::roles::{classify_roles, write_neighbors_csv, write_roles_csv, EdgeSemantics, RoleSet};
use netvuln::synth::{generate_sbm, plant_spreaders, PlantingStrategy, SbmParams};
use netvuln::trust::{compute_tsm, normalize_scores, TrustScores, TsmParams};
use netvuln::util::fmt_f64;
use netvuln::vulnerability::{assess, AssessParams, VulnerabilityReport};
use netvuln::{Error, Result};

use crate::config::{Detector, PipelineConfig};
use crate::{Command, EdgesArgs, SynthCommand, TsmArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Input,
    Trust,
    Community,
    Roles,
    Vulnerability,
    Evaluation,
}

impl Stage {
    pub fn exit_code(self) -> u8 {
        match self {
            Stage::Input => 2,
            Stage::Trust => 3,
            Stage::Community => 4,
            Stage::Roles => 5,
            Stage::Vulnerability => 6,
            Stage::Evaluation => 7,
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Input => "input",
            Stage::Trust => "trust",
            Stage::Community => "community",
            Stage::Roles => "roles",
            Stage::Vulnerability => "vulnerability",
            Stage::Evaluation => "evaluate",
        })
    }
}

pub struct StageFailure {
    pub stage: Stage,
    pub error: Error,
}

trait Tag<T> {
    fn stage(self, stage: Stage) -> std::result::Result<T, StageFailure>;
}

impl<T> Tag<T> for Result<T> {
    fn stage(self, stage: Stage) -> std::result::Result<T, StageFailure> {
        self.map_err(|error| StageFailure { stage, error })
    }
}

type StageResult<T> = std::result::Result<T, StageFailure>;

/// Thread count comes from the flag, then $NETVULN_THREADS, then 1. All
/// stages are sequential and seeded, so any value yields identical
/// output; the knob is validated and reserved.
pub fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    let threads = match flag {
        Some(n) => n,
        None => match std::env::var("NETVULN_THREADS") {
            Err(_) => 1,
            Ok(raw) => raw.parse().map_err(|_| Error::InvalidParams {
                message: format!("NETVULN_THREADS must be a positive integer, got '{raw}'"),
            })?,
        },
    };
    if threads == 0 {
        return Err(Error::InvalidParams {
            message: "thread count must be at least 1".into(),
        });
    }
    Ok(threads)
}

/// Write through a `.partial` file renamed into place on success; an
/// aborted stage leaves its flushed partial output behind for debugging.
fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut partial = path.as_os_str().to_os_string();
    partial.push(".partial");
    let partial = PathBuf::from(partial);
    let mut w = BufWriter::new(File::create(&partial)?);
    let outcome = fill(&mut w);
    w.flush()?;
    outcome?;
    std::fs::rename(&partial, path)?;
    Ok(())
}

fn timed<T>(name: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    eprintln!(
        "netvuln: stage {name}: {:.1} ms",
        start.elapsed().as_secs_f64() * 1e3
    );
    out
}

fn load_graph(path: &Path, format: EdgeListFormat) -> Result<DirectedGraph> {
    let file = File::open(path)?;
    load_edge_list(BufReader::new(file), format)
}

fn load_communities(path: &Path, g: &DirectedGraph) -> Result<CommunityAssignment> {
    let file = File::open(path)?;
    load_assignment(BufReader::new(file), g)
}

fn load_spreaders(path: &Path, g: &DirectedGraph) -> Result<SpreaderSet> {
    let file = File::open(path)?;
    SpreaderSet::from_reader(BufReader::new(file), g)
}

fn trust_stage(g: &DirectedGraph, tsm: &TsmParams) -> Result<TrustScores> {
    Ok(normalize_scores(&compute_tsm(g, tsm)?, tsm))
}

fn parse_edges(args: &EdgesArgs) -> StageResult<DirectedGraph> {
    let format: EdgeListFormat = parse_input(&args.format)?;
    timed("input", || load_graph(&args.edges, format)).stage(Stage::Input)
}

fn parse_input<T: std::str::FromStr>(s: &str) -> StageResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>()
        .map_err(|e| Error::InvalidParams { message: e.to_string() })
        .stage(Stage::Input)
}

impl TsmArgs {
    fn to_params(&self) -> TsmParams {
        TsmParams {
            involvement: self.involvement,
            max_iterations: self.max_iters,
            convergence_epsilon: self.epsilon,
            log_floor: self.log_floor,
        }
    }
}

pub fn dispatch(command: Command) -> StageResult<()> {
    match command {
        Command::Trust { edges, tsm, out } => {
            let g = parse_edges(&edges)?;
            let params = tsm.to_params();
            let ts = timed("trust", || trust_stage(&g, &params)).stage(Stage::Trust)?;
            write_atomic(&out, |w| ts.write_csv(&g, w)).stage(Stage::Trust)
        }

        Command::Communities {
            edges,
            algo,
            seed,
            resolution,
            max_sweeps,
            assignment,
            out,
        } => {
            let detector: Detector = parse_input(&algo)?;
            let g = parse_edges(&edges)?;
            let a = timed("community", || {
                detect(&g, detector, seed, resolution, max_sweeps, assignment.as_deref())
            })
            .stage(Stage::Community)?;
            write_atomic(&out, |w| a.write_tsv(&g, w)).stage(Stage::Community)
        }

        Command::Roles {
            edges,
            communities,
            edge_semantics,
            out_roles,
            out_neighbors,
        } => {
            let semantics: EdgeSemantics = parse_input(&edge_semantics)?;
            let g = parse_edges(&edges)?;
            let a = load_communities(&communities, &g).stage(Stage::Input)?;
            let roles =
                timed("roles", || classify_roles(&g, &a, semantics)).stage(Stage::Roles)?;
            write_atomic(&out_roles, |w| write_roles_csv(&roles, &g, w)).stage(Stage::Roles)?;
            write_atomic(&out_neighbors, |w| write_neighbors_csv(&roles, &g, w))
                .stage(Stage::Roles)
        }

        Command::Vulnerability {
            edges,
            tsm,
            communities,
            edge_semantics,
            infected_only,
            out_json,
            out_nodes,
            out_communities,
        } => {
            let semantics: EdgeSemantics = parse_input(&edge_semantics)?;
            let g = parse_edges(&edges)?;
            let a = load_communities(&communities, &g).stage(Stage::Input)?;
            let params = tsm.to_params();
            let ts = timed("trust", || trust_stage(&g, &params)).stage(Stage::Trust)?;
            let roles =
                timed("roles", || classify_roles(&g, &a, semantics)).stage(Stage::Roles)?;
            let infected = match infected_only {
                None => None,
                Some(path) => Some(
                    load_spreaders(&path, &g)
                        .stage(Stage::Input)?
                        .as_set()
                        .clone(),
                ),
            };
            let assess_params = AssessParams {
                involvement: params.involvement,
                edge_semantics: semantics,
                detector: "file".to_string(),
                infected_only: infected,
            };
            let report = timed("vulnerability", || {
                assess(&g, &ts, &a, &roles, &assess_params)
            })
            .stage(Stage::Vulnerability)?;
            write_report(&report, &g, &out_json, out_nodes.as_deref(), out_communities.as_deref())
        }

        Command::Evaluate {
            edges,
            tsm,
            communities,
            edge_semantics,
            spreaders,
            k,
            map_k,
            map_variant,
            out_json,
            out_csv,
        } => {
            let semantics: EdgeSemantics = parse_input(&edge_semantics)?;
            let variant: MapVariant = parse_input(&map_variant)?;
            let g = parse_edges(&edges)?;
            let a = load_communities(&communities, &g).stage(Stage::Input)?;
            let params = tsm.to_params();
            let ts = timed("trust", || trust_stage(&g, &params)).stage(Stage::Trust)?;
            let roles =
                timed("roles", || classify_roles(&g, &a, semantics)).stage(Stage::Roles)?;
            let assess_params = AssessParams {
                involvement: params.involvement,
                edge_semantics: semantics,
                detector: "file".to_string(),
                infected_only: None,
            };
            let report = timed("vulnerability", || {
                assess(&g, &ts, &a, &roles, &assess_params)
            })
            .stage(Stage::Vulnerability)?;
            let truth = load_spreaders(&spreaders, &g).stage(Stage::Evaluation)?;
            let eval = timed("evaluate", || {
                evaluate(&report, &roles, &truth, &k, map_k, variant)
            })
            .stage(Stage::Evaluation)?;
            write_atomic(&out_json, |w| eval.write_json(w)).stage(Stage::Evaluation)?;
            if let Some(path) = out_csv {
                let network = network_name(&edges.edges);
                write_atomic(&path, |w| eval.write_csv_summary(&network, w))
                    .stage(Stage::Evaluation)?;
            }
            Ok(())
        }

        Command::Synth { cmd } => synth(cmd),

        Command::Pipeline(args) => {
            let cfg = args.resolve().stage(Stage::Input)?;
            run_pipeline(&cfg)
        }
    }
}

fn detect(
    g: &DirectedGraph,
    detector: Detector,
    seed: u64,
    resolution: f64,
    max_sweeps: u32,
    assignment: Option<&Path>,
) -> Result<CommunityAssignment> {
    match detector {
        Detector::Louvain => louvain(&g.symmetrize(), seed, resolution),
        Detector::Lpa => label_propagation(&g.symmetrize(), seed, max_sweeps),
        Detector::File => {
            let path = assignment.ok_or_else(|| Error::InvalidParams {
                message: "detector 'file' needs an assignment path".into(),
            })?;
            load_communities(path, g)
        }
    }
}

fn write_report(
    report: &VulnerabilityReport,
    g: &DirectedGraph,
    out_json: &Path,
    out_nodes: Option<&Path>,
    out_communities: Option<&Path>,
) -> StageResult<()> {
    write_atomic(out_json, |w| report.write_json(g, w)).stage(Stage::Vulnerability)?;
    if let Some(path) = out_nodes {
        write_atomic(path, |w| report.write_nodes_csv(g, w)).stage(Stage::Vulnerability)?;
    }
    if let Some(path) = out_communities {
        write_atomic(path, |w| report.write_communities_csv(w)).stage(Stage::Vulnerability)?;
    }
    Ok(())
}

fn network_name(edges: &Path) -> String {
    edges
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "network".to_string())
}

fn synth(cmd: SynthCommand) -> StageResult<()> {
    match cmd {
        SynthCommand::Sbm {
            blocks,
            p_in,
            p_out,
            seed,
            undirected,
            out,
            truth,
        } => {
            let params = SbmParams {
                block_sizes: blocks,
                p_in,
                p_out,
                seed,
                directed: !undirected,
            };
            let (g, assignment) =
                timed("synth", || generate_sbm(&params)).stage(Stage::Input)?;
            write_atomic(&out, |w| write_edge_list(&g, w)).stage(Stage::Input)?;
            if let Some(path) = truth {
                write_atomic(&path, |w| assignment.write_tsv(&g, w)).stage(Stage::Input)?;
            }
            Ok(())
        }

        SynthCommand::Plant {
            edges,
            tsm,
            strategy,
            rate,
            seed,
            communities,
            edge_semantics,
            out,
        } => {
            let g = parse_edges(&edges)?;
            let params = tsm.to_params();
            let ts = timed("trust", || trust_stage(&g, &params)).stage(Stage::Trust)?;
            let strategy = match strategy.as_str() {
                "uniform" => PlantingStrategy::UniformRandom { rate },
                "trust" => PlantingStrategy::TrustWeighted { rate },
                "boundary" => PlantingStrategy::BoundaryBiased { rate },
                other => {
                    return Err(Error::InvalidParams {
                        message: format!(
                            "unknown strategy '{other}' (expected uniform, trust, or boundary)"
                        ),
                    })
                    .stage(Stage::Input)
                }
            };
            let boundary: Option<Vec<NodeId>> = match (&strategy, communities) {
                (PlantingStrategy::BoundaryBiased { .. }, Some(path)) => {
                    let semantics: EdgeSemantics = parse_input(&edge_semantics)?;
                    let a = load_communities(&path, &g).stage(Stage::Input)?;
                    let roles = classify_roles(&g, &a, semantics).stage(Stage::Roles)?;
                    let set: BTreeSet<NodeId> = roles
                        .iter()
                        .flat_map(|r| r.boundary.iter().copied())
                        .collect();
                    Some(set.into_iter().collect())
                }
                (PlantingStrategy::BoundaryBiased { .. }, None) => {
                    return Err(Error::InvalidParams {
                        message: "strategy 'boundary' needs --communities".into(),
                    })
                    .stage(Stage::Input)
                }
                _ => None,
            };
            let set = timed("synth", || {
                plant_spreaders(&g, &ts, strategy, seed, boundary.as_deref())
            })
            .stage(Stage::Input)?;
            write_atomic(&out, |w| set.write(&g, w)).stage(Stage::Input)
        }
    }
}

fn write_edge_list(g: &DirectedGraph, w: &mut impl Write) -> Result<()> {
    for u in g.nodes() {
        for &(v, _) in g.out(u) {
            writeln!(w, "{}\t{}", g.external_id(u), g.external_id(v))?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// pipeline

pub fn run_pipeline(cfg: &PipelineConfig) -> StageResult<()> {
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(Error::from)
        .stage(Stage::Input)?;
    let path = |name: &str| cfg.out_dir.join(name);

    let g = timed("input", || load_graph(&cfg.edges, cfg.format)).stage(Stage::Input)?;

    let ts = timed("trust", || trust_stage(&g, &cfg.tsm)).stage(Stage::Trust)?;
    write_atomic(&path("trust.csv"), |w| ts.write_csv(&g, w)).stage(Stage::Trust)?;

    let a = timed("community", || {
        detect(
            &g,
            cfg.detector,
            cfg.seed,
            cfg.resolution,
            cfg.max_sweeps,
            cfg.communities_file.as_deref(),
        )
    })
    .stage(Stage::Community)?;
    write_atomic(&path("communities.tsv"), |w| a.write_tsv(&g, w)).stage(Stage::Community)?;

    let roles = timed("roles", || classify_roles(&g, &a, cfg.edge_semantics))
        .stage(Stage::Roles)?;
    write_atomic(&path("roles.csv"), |w| write_roles_csv(&roles, &g, w)).stage(Stage::Roles)?;
    write_atomic(&path("neighbors.csv"), |w| write_neighbors_csv(&roles, &g, w))
        .stage(Stage::Roles)?;

    let assess_params = AssessParams {
        involvement: cfg.tsm.involvement,
        edge_semantics: cfg.edge_semantics,
        detector: cfg.detector.to_string(),
        infected_only: None,
    };
    let report = timed("vulnerability", || {
        assess(&g, &ts, &a, &roles, &assess_params)
    })
    .stage(Stage::Vulnerability)?;
    write_report(
        &report,
        &g,
        &path("vulnerability.json"),
        Some(&path("vulnerability_nodes.csv")),
        Some(&path("vulnerability_communities.csv")),
    )?;

    let truth = match &cfg.spreaders {
        None => None,
        Some(spreaders) => {
            let truth = load_spreaders(spreaders, &g).stage(Stage::Evaluation)?;
            let eval: EvalReport = timed("evaluate", || {
                evaluate(&report, &roles, &truth, &cfg.ks, cfg.map_k, cfg.map_variant)
            })
            .stage(Stage::Evaluation)?;
            write_atomic(&path("eval.json"), |w| eval.write_json(w)).stage(Stage::Evaluation)?;
            let network = network_name(&cfg.edges);
            write_atomic(&path("eval_summary.csv"), |w| {
                eval.write_csv_summary(&network, w)
            })
            .stage(Stage::Evaluation)?;
            Some(truth)
        }
    };

    let stats = community_stats(&g, &a, &roles, &cfg.detector.to_string(), truth.as_ref());
    write_atomic(&path("stats.csv"), |w| stats.write_csv(w)).stage(Stage::Evaluation)?;
    print!("{stats}");
    Ok(())
}

// ---------------------------------------------------------------------------
// community statistics table

/// Per-community averages over the final assignment: member counts,
/// boundary structure, and (when ground truth is present) infected
/// counts at each level.
pub struct CommunityStats {
    pub detector: String,
    pub communities: usize,
    pub avg_nodes: f64,
    pub avg_boundary_edges: f64,
    pub avg_boundary_nodes: f64,
    pub avg_neighbor_nodes: f64,
    pub infected: Option<InfectedStats>,
}

pub struct InfectedStats {
    pub avg_infected_nodes: f64,
    pub avg_infected_boundary: f64,
    pub avg_infected_neighbors: f64,
}

pub fn community_stats(
    g: &DirectedGraph,
    a: &CommunityAssignment,
    roles: &[RoleSet],
    detector: &str,
    truth: Option<&SpreaderSet>,
) -> CommunityStats {
    let c = roles.len().max(1) as f64;
    let total_boundary: usize = roles.iter().map(|r| r.boundary.len()).sum();
    let total_edges: usize = roles.iter().map(|r| r.boundary_edges.len()).sum();
    let total_neighbors: usize = roles.iter().map(|r| r.neighbor_set.len()).sum();
    let infected = truth.map(|t| {
        let infected_members = g.nodes().filter(|&v| t.contains(v)).count();
        let infected_boundary: usize = roles
            .iter()
            .map(|r| r.boundary.iter().filter(|&&b| t.contains(b)).count())
            .sum();
        let infected_neighbors: usize = roles
            .iter()
            .map(|r| r.neighbor_set.iter().filter(|&&n| t.contains(n)).count())
            .sum();
        InfectedStats {
            avg_infected_nodes: infected_members as f64 / c,
            avg_infected_boundary: infected_boundary as f64 / c,
            avg_infected_neighbors: infected_neighbors as f64 / c,
        }
    });
    CommunityStats {
        detector: detector.to_string(),
        communities: roles.len(),
        avg_nodes: a.node_count() as f64 / c,
        avg_boundary_edges: total_edges as f64 / c,
        avg_boundary_nodes: total_boundary as f64 / c,
        avg_neighbor_nodes: total_neighbors as f64 / c,
        infected,
    }
}

impl CommunityStats {
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(
            w,
            "detector,communities,avg_nodes_per_community,avg_infected_per_community,\
             avg_boundary_edges,avg_boundary_nodes,avg_neighbor_nodes,\
             avg_infected_boundary_nodes,avg_infected_neighbor_nodes"
        )?;
        let inf = |f: fn(&InfectedStats) -> f64| {
            self.infected.as_ref().map(|i| fmt_f64(f(i))).unwrap_or_default()
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            self.detector,
            self.communities,
            fmt_f64(self.avg_nodes),
            inf(|i| i.avg_infected_nodes),
            fmt_f64(self.avg_boundary_edges),
            fmt_f64(self.avg_boundary_nodes),
            fmt_f64(self.avg_neighbor_nodes),
            inf(|i| i.avg_infected_boundary),
            inf(|i| i.avg_infected_neighbors),
        )?;
        Ok(())
    }
}

impl std::fmt::Display for CommunityStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "community statistics ({} detection)", self.detector)?;
        writeln!(f, "  communities:                {}", self.communities)?;
        writeln!(f, "  avg nodes / community:      {:.3}", self.avg_nodes)?;
        writeln!(f, "  avg boundary edges:         {:.3}", self.avg_boundary_edges)?;
        writeln!(f, "  avg boundary nodes:         {:.3}", self.avg_boundary_nodes)?;
        writeln!(f, "  avg neighbor nodes:         {:.3}", self.avg_neighbor_nodes)?;
        if let Some(i) = &self.infected {
            writeln!(f, "  avg infected / community:   {:.3}", i.avg_infected_nodes)?;
            writeln!(f, "  avg infected boundary:      {:.3}", i.avg_infected_boundary)?;
            writeln!(f, "  avg infected neighbors:     {:.3}", i.avg_infected_neighbors)?;
        }
        Ok(())
    }
}
