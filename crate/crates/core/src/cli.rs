//! Command-line front end. Results are JSON reports on stdout (or `-o`);
//! human summaries go to stderr. Exit status: 0 ok, 1 contract error, 2 usage.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::balls::{greedy_balls, homogeneous_dominating_subset};
use crate::cp::{
    dyadic_witness, eval_dual_average, eval_dual_max, eval_dual_tree, solve_cp, CpInstance, Mode,
    Program,
};
use crate::error::{Error, Result};
use crate::generators;
use crate::graph::{combinatorial_thinness, graph_expansion, min_edge_connectivity, MultiGraph};
use crate::io::{self, InputDigest, SolutionFile, WitnessFile};
use crate::lch::{general_lch, planar_lch, validate_lch, Hierarchy};
use crate::pipeline::{certify_pipeline, extract_good_edges_with, PipelineOptions, PipelineTrace};
use crate::spectral::{edge_resistances, spectral_thinness, SpectralView};
use crate::{EXHAUSTIVE_MAX_N, VERSION};

#[derive(Parser, Debug)]
#[command(name = "thintree", version, about = "Shortcut matrices, hierarchies and good-edge extraction")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, env = "THINTREE_SEED", default_value_t = 0)]
    seed: u64,
    /// Write the report (or artifact) here instead of stdout.
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a graph in the text format.
    Gen(GenArgs),
    /// Resistances, connectivity and expansion of a graph.
    Analyze { graph: PathBuf },
    /// Build or validate locally connected hierarchies
    #[command(subcommand)]
    Lch(LchCommand),
    /// Solve shortcut programs and evaluate dual witnesses
    #[command(subcommand)]
    Cp(CpCommand),
    /// Run or certify good-edge extraction
    #[command(subcommand)]
    Pipeline(PipelineCommand),
    /// Thinness of a spanning tree
    #[command(subcommand)]
    Thin(ThinCommand),
    /// Greedy disjoint balls and homogeneous bucketing
    #[command(subcommand)]
    Balls(BallsCommand),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Family {
    Hypercube,
    Ladder,
    Dyadic,
    RandomRegular,
    CycleExpander,
    Random,
}

#[derive(Args, Debug)]
struct GenArgs {
    family: Family,
    #[arg(long)]
    h: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Parallel copies per hypercube edge.
    #[arg(long, default_value_t = 1)]
    mult: usize,
    /// Extra random edges for `random`.
    #[arg(long, default_value_t = 0)]
    extra: usize,
    /// Add the shortcut edges to a ladder.
    #[arg(long)]
    shortcuts: bool,
    /// Replicate every edge this many times.
    #[arg(long)]
    amplify: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LchMethod {
    Star,
    Planar,
    General,
}

#[derive(Subcommand, Debug)]
enum LchCommand {
    /// Build a hierarchy and write it as JSON.
    Build {
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "general")]
        method: LchMethod,
        /// Connectivity for the general construction (default: edge connectivity).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 2.0)]
        log_base: f64,
    },
    /// Validate a hierarchy against the three conditions.
    Check {
        graph: PathBuf,
        #[arg(long)]
        lch: PathBuf,
        #[arg(long)]
        k: f64,
        #[arg(long)]
        lambda: f64,
        /// Check the ratio condition on every node instead of the marked ones.
        #[arg(long)]
        all_nodes: bool,
    },
}

#[derive(Subcommand, Debug)]
enum CpCommand {
    /// Solve one of the three programs.
    Solve {
        graph: PathBuf,
        #[arg(long, default_value = "max")]
        program: Program,
        #[arg(long, default_value = "box")]
        mode: Mode,
        /// Hierarchy for the tree program. Without `--nodes` its marked nodes
        /// are used, or all non-root nodes if none are marked.
        #[arg(long)]
        lch: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        nodes: Vec<usize>,
        #[arg(long)]
        floor: Option<f64>,
    },
    /// Evaluate a dual witness.
    Dual {
        graph: PathBuf,
        #[arg(long)]
        witness: PathBuf,
        #[arg(long, default_value = "average")]
        program: Program,
        #[arg(long)]
        lch: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        nodes: Vec<usize>,
    },
    /// Write the Haar-type witness for the dyadic path.
    Witness {
        #[arg(long)]
        h: usize,
        #[arg(long)]
        k: usize,
    },
}

#[derive(Subcommand, Debug)]
enum PipelineCommand {
    /// Run good-edge extraction; prints one JSON line per iteration on stderr.
    Run {
        graph: PathBuf,
        #[arg(long)]
        lch: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long, default_value = "box")]
        mode: Mode,
    },
    /// Recompute every claim of a trace.
    Certify {
        graph: PathBuf,
        #[arg(long)]
        trace: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum ThinCommand {
    /// Spectral and (for small graphs) combinatorial thinness of an edge set.
    Check {
        graph: PathBuf,
        /// File of whitespace-separated edge ids.
        #[arg(long)]
        tree: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum BallsCommand {
    /// Greedy disjoint balls around the endpoints of an edge set.
    Greedy {
        graph: PathBuf,
        /// Matrix file with one row per edge and one column per vertex.
        #[arg(long)]
        embedding: PathBuf,
        /// File of edge ids (default: all edges).
        #[arg(long)]
        edges: Option<PathBuf>,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
    },
    /// Homogeneous dominating subset of `(a, b)` pairs.
    Bucket {
        /// Matrix file with two columns `a b`.
        #[arg(long)]
        values: PathBuf,
        #[arg(long)]
        alpha: f64,
    },
}

/// Runs the CLI with the process's stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", e.name());
            1
        }
    }
}

struct Ctx<'a> {
    cli: &'a Cli,
    inputs: Vec<InputDigest>,
}

impl Ctx<'_> {
    fn graph(&mut self, path: &Path) -> Result<MultiGraph> {
        self.inputs.push(io::digest_file(path)?);
        io::read_graph(path)
    }

    fn hierarchy(&mut self, path: &Path) -> Result<Hierarchy> {
        self.inputs.push(io::digest_file(path)?);
        io::read_json(path)
    }

    fn digest(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(io::digest_file(path)?);
        Ok(())
    }

    fn report(&self, command: &str, result: impl Serialize) -> Result<Value> {
        Ok(json!({
            "format": 1,
            "version": VERSION,
            "command": command,
            "seed": self.cli.seed,
            "inputs": self.inputs,
            "result": serde_json::to_value(result)?,
        }))
    }
}

fn emit(cli: &Cli, out: &mut dyn Write, text: &str) -> Result<()> {
    match &cli.output {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn edge_list(path: &Path, m: usize) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.display().to_string()),
        _ => Error::Io(e),
    })?;
    let mut ids = Vec::new();
    for (i, line) in text.lines().enumerate() {
        for tok in line.split_whitespace() {
            let e: usize =
                tok.parse().map_err(|_| Error::Parse { line: i + 1, msg: format!("cannot parse {tok:?}") })?;
            if e >= m {
                return Err(Error::Parse { line: i + 1, msg: format!("edge {e} outside 0..{m}") });
            }
            ids.push(e);
        }
    }
    Ok(ids)
}

/// Marked nodes, or every non-root node when none are marked.
fn default_nodes(h: &Hierarchy) -> Vec<usize> {
    if h.marked().is_empty() {
        h.non_root_nodes()
    } else {
        h.marked().to_vec()
    }
}

fn need(v: Option<usize>, flag: &str) -> Result<usize> {
    v.ok_or_else(|| Error::InvalidArgument(format!("missing --{flag}")))
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let mut ctx = Ctx { cli, inputs: Vec::new() };
    let seed = cli.seed;
    match &cli.command {
        Command::Gen(a) => {
            let mut marked = serde_json::Map::new();
            let mut g = match a.family {
                Family::Hypercube => generators::hypercube(need(a.d, "d")?, a.mult)?,
                Family::Ladder => {
                    let l = generators::ladder(need(a.n, "n")?, need(a.k, "k")?, a.shortcuts)?;
                    marked.insert("shortcuts".into(), json!(l.shortcuts));
                    marked.insert("verticals".into(), json!(l.verticals));
                    l.graph
                }
                Family::Dyadic => generators::dyadic(need(a.h, "h")?, need(a.k, "k")?)?,
                Family::RandomRegular => generators::random_regular(need(a.m, "m")?, need(a.k, "k")?, seed)?,
                Family::CycleExpander => generators::cycle_expander(need(a.m, "m")?, need(a.k, "k")?, seed)?,
                Family::Random => generators::random_connected(need(a.n, "n")?, a.extra, seed),
            };
            if let Some(c) = a.amplify {
                if !marked.is_empty() {
                    // copies of edge e occupy ids e*c..(e+1)*c
                    for v in marked.values_mut() {
                        let ids: Vec<usize> = serde_json::from_value(v.clone())?;
                        *v = json!(ids.iter().flat_map(|&e| e * c..(e + 1) * c).collect::<Vec<_>>());
                    }
                }
                g = generators::amplify(&g, c)?;
            }
            emit(cli, out, &io::format_graph(&g))?;
            if let (Some(p), false) = (&cli.output, marked.is_empty()) {
                let mut side = p.clone().into_os_string();
                side.push(".edges.json");
                marked.insert("format".into(), json!(1));
                io::write_json(Path::new(&side), &Value::Object(marked))?;
            }
            writeln!(err, "generated n = {} m = {}", g.n(), g.m())?;
        }
        Command::Analyze { graph } => {
            let g = ctx.graph(graph)?;
            let view = SpectralView::of_graph(&g);
            let reff = if g.is_connected() { Some(edge_resistances(&g, &view)?) } else { None };
            let (conn, cut) = min_edge_connectivity(&g);
            let exp = if g.n() >= 2 { Some(graph_expansion(&g)?) } else { None };
            let result = json!({
                "n": g.n(),
                "m": g.m(),
                "connected": g.is_connected(),
                "edgeConnectivity": if g.n() >= 2 { json!(conn) } else { Value::Null },
                "minCut": cut,
                "reffSum": reff.as_ref().map(|r| r.iter().sum::<f64>()),
                "reffMax": reff.as_ref().map(|r| r.iter().cloned().fold(0.0, f64::max)),
                "edgeReff": reff,
                "expansion": exp.as_ref().map(|e| e.phi),
                "expansionWitness": exp.as_ref().map(|e| &e.witness),
                "expansionHeuristic": exp.as_ref().map(|e| e.heuristic),
            });
            writeln!(err, "n = {} m = {} connectivity = {conn}", g.n(), g.m())?;
            emit(cli, out, &io::to_json(&ctx.report("analyze", result)?)?)?;
        }
        Command::Lch(LchCommand::Build { graph, method, k, log_base }) => {
            let g = ctx.graph(graph)?;
            let h = match method {
                LchMethod::Star => Hierarchy::star(g.n())?,
                LchMethod::Planar => planar_lch(&g)?,
                LchMethod::General => {
                    let k = match k {
                        Some(k) => *k,
                        None => min_edge_connectivity(&g).0,
                    };
                    general_lch(&g, k, *log_base)?
                }
            };
            writeln!(err, "hierarchy with {} nodes", h.node_count())?;
            emit(cli, out, &io::to_json(&h)?)?;
        }
        Command::Lch(LchCommand::Check { graph, lch, k, lambda, all_nodes }) => {
            let g = ctx.graph(graph)?;
            let h = ctx.hierarchy(lch)?;
            let tset = if *all_nodes { (0..h.node_count()).collect() } else { h.marked().to_vec() };
            let rep = validate_lch(&g, &h, *k, *lambda, &tset)?;
            writeln!(err, "valid = {} ({} violations)", rep.is_valid(), rep.violations.len())?;
            emit(cli, out, &io::to_json(&ctx.report("lch check", json!({ "valid": rep.is_valid(), "report": rep }))?)?)?;
        }
        Command::Cp(CpCommand::Solve { graph, program, mode, lch, nodes, floor }) => {
            let g = ctx.graph(graph)?;
            let mut inst = match program {
                Program::Tree => {
                    let path = lch.as_ref().ok_or_else(|| Error::InvalidArgument("tree program needs --lch".into()))?;
                    let h = ctx.hierarchy(path)?;
                    let nodes = if nodes.is_empty() { default_nodes(&h) } else { nodes.clone() };
                    CpInstance::tree(g, h, nodes, *mode)
                }
                p => CpInstance::new(g, *p, *mode),
            };
            inst.floor = *floor;
            inst.seed = seed;
            let sol = solve_cp(&inst)?;
            writeln!(err, "objective = {:.9} after {} rounds", sol.objective, sol.rounds.len())?;
            emit(cli, out, &io::to_json(&ctx.report("cp solve", SolutionFile::from(&sol))?)?)?;
        }
        Command::Cp(CpCommand::Dual { graph, witness, program, lch, nodes }) => {
            let g = ctx.graph(graph)?;
            ctx.digest(witness)?;
            let w = io::read_witness(witness)?;
            w.validate(&g)?;
            let result = match program {
                Program::Average => json!({ "ratio": eval_dual_average(&g, &w)? }),
                Program::Max => json!({ "ratio": eval_dual_max(&g, &w)? }),
                Program::Tree => {
                    let path = lch.as_ref().ok_or_else(|| Error::InvalidArgument("tree program needs --lch".into()))?;
                    let h = ctx.hierarchy(path)?;
                    let nodes = if nodes.is_empty() { default_nodes(&h) } else { nodes.clone() };
                    let d = eval_dual_tree(&g, &h, &nodes, &w)?;
                    json!({ "ratio": d.ratio, "nuclear": d.nuclear })
                }
            };
            writeln!(err, "dual ratio = {}", result["ratio"])?;
            emit(cli, out, &io::to_json(&ctx.report("cp dual", result)?)?)?;
        }
        Command::Cp(CpCommand::Witness { h, k }) => {
            let w = dyadic_witness(*h, *k)?;
            emit(cli, out, &io::to_json(&WitnessFile::from(&w))?)?;
        }
        Command::Pipeline(PipelineCommand::Run { graph, lch, k, max_iters, mode }) => {
            let g = ctx.graph(graph)?;
            let h = ctx.hierarchy(lch)?;
            let opts = PipelineOptions { k: *k, max_iters: *max_iters, mode: *mode, seed };
            let mut progress = Ok(());
            let trace = extract_good_edges_with(&g, &h, &opts, |r| {
                let line = json!({
                    "iteration": r.iteration,
                    "epsilon": r.epsilon,
                    "threshold": r.threshold,
                    "goodEdges": r.good_edges.len(),
                    "active": r.active,
                    "treeNodes": r.tree_nodes.len(),
                    "markovFailures": r.markov_failures(),
                });
                if progress.is_ok() {
                    progress = writeln!(err, "{line}");
                }
            })?;
            progress?;
            emit(cli, out, &io::to_json(&ctx.report("pipeline run", &trace)?)?)?;
        }
        Command::Pipeline(PipelineCommand::Certify { graph, trace }) => {
            let g = ctx.graph(graph)?;
            ctx.digest(trace)?;
            let doc: Value = io::read_json(trace)?;
            // accept either a bare trace or a report wrapping one
            let body = doc.get("result").cloned().unwrap_or(doc);
            let trace: PipelineTrace = serde_json::from_value(body)?;
            let rep = certify_pipeline(&g, &trace)?;
            writeln!(err, "certified: connectivity {} over {} iterations", rep.connectivity, rep.iterations)?;
            emit(cli, out, &io::to_json(&ctx.report("pipeline certify", rep)?)?)?;
        }
        Command::Thin(ThinCommand::Check { graph, tree }) => {
            let g = ctx.graph(graph)?;
            ctx.digest(tree)?;
            let t = edge_list(tree, g.m())?;
            let spectral = spectral_thinness(&g, &t)?;
            let view = SpectralView::of_graph(&g);
            let reff = edge_resistances(&g, &view)?;
            let max_reff = t.iter().map(|&e| reff[e]).fold(0.0, f64::max);
            let comb = if g.n() <= EXHAUSTIVE_MAX_N { Some(combinatorial_thinness(&g, &t)?) } else { None };
            let result = json!({
                "spectral": spectral,
                "maxReff": max_reff,
                "combinatorial": comb.as_ref().map(|c| c.0),
                "combinatorialWitness": comb.as_ref().map(|c| &c.1),
            });
            writeln!(err, "spectral thinness = {spectral:.6}")?;
            emit(cli, out, &io::to_json(&ctx.report("thin check", result)?)?)?;
        }
        Command::Balls(BallsCommand::Greedy { graph, embedding, edges, eps }) => {
            let g = ctx.graph(graph)?;
            ctx.digest(embedding)?;
            let y = io::read_matrix(embedding)?;
            let f = match edges {
                Some(p) => {
                    ctx.digest(p)?;
                    edge_list(p, g.m())?
                }
                None => (0..g.m()).collect(),
            };
            let res = greedy_balls(&g, &y, &f, *eps)?;
            writeln!(err, "b = {} r = {:.6e} claim holds = {}", res.b, res.r, res.claim_holds)?;
            emit(cli, out, &io::to_json(&ctx.report("balls greedy", res)?)?)?;
        }
        Command::Balls(BallsCommand::Bucket { values, alpha }) => {
            ctx.digest(values)?;
            let m = io::read_matrix(values)?;
            if m.ncols() != 2 {
                return Err(Error::InvalidArgument("values need two columns".into()));
            }
            let pairs: Vec<(f64, f64)> = m.row_iter().map(|r| (r[0], r[1])).collect();
            let res = homogeneous_dominating_subset(&pairs, *alpha)?;
            writeln!(err, "subset of {} / {}", res.subset.len(), pairs.len())?;
            emit(cli, out, &io::to_json(&ctx.report("balls bucket", res)?)?)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(std::iter::once("thintree").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_error_exit_two() {
        let (code, _, err) = run_capture(&["gen", "dyadic", "--bogus"]);
        assert_eq!(code, 2);
        assert!(err.contains("--bogus"));
    }

    #[test]
    fn missing_file_exit_one() {
        let (code, _, err) = run_capture(&["thin", "check", "/nonexistent/g.txt", "--tree", "/nonexistent/t.txt"]);
        assert_eq!(code, 1);
        assert!(err.contains("FileNotFound"), "{err}");
    }

    #[test]
    fn gen_to_stdout() {
        let (code, out, _) = run_capture(&["gen", "dyadic", "--h", "1", "--k", "2"]);
        assert_eq!(code, 0);
        assert_eq!(out, "3 5\n0 1\n0 1\n1 2\n1 2\n0 2\n");
    }
}
