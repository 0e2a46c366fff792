//! Convex programs over cut-dominated matrices: minimize the worst, the worst
//! cut-average or the worst hierarchy-node-average effective resistance,
//! measured as `x' D^{-1} x`, over `D` with `1_S' D 1_S <= 1_S' L 1_S` for
//! every `S` (box mode) or `D <= L` in the Loewner order (psd mode).

mod barrier;
pub mod dual;
pub mod witness;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{gray_scan, lex_less, local_edge_connectivity, Cut, MultiGraph};
use crate::lch::Hierarchy;
use crate::spectral::{spectral_partition, PsdMatrix};
use crate::EXHAUSTIVE_MAX_N;

pub use dual::{
    eval_dual_average, eval_dual_max, eval_dual_tree, weighted_tree_form, DualWitness, TreeDual,
};
pub use witness::dyadic_witness;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Program {
    Max,
    Average,
    Tree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Box,
    Psd,
}

impl std::str::FromStr for Program {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Program::Max),
            "average" | "avg" => Ok(Program::Average),
            "tree" => Ok(Program::Tree),
            _ => Err(Error::InvalidArgument(format!("unknown program {s:?}"))),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "box" => Ok(Mode::Box),
            "psd" => Ok(Mode::Psd),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?}"))),
        }
    }
}

/// Cuts added per separation round.
pub const SEPARATION_BATCH: usize = 32;
/// Rounds without a 1% drop in the worst violation before giving up.
pub const STALL_ROUNDS: usize = 50;
pub const MAX_ROUNDS: usize = 400;
/// Random restarts of the local-search separation used above the exhaustive limit.
pub const LOCAL_SEARCH_RESTARTS: usize = 20;

#[derive(Clone, Debug)]
pub struct CpInstance {
    pub graph: MultiGraph,
    pub program: Program,
    pub mode: Mode,
    /// Hierarchy and node set, Tree program only.
    pub hierarchy: Option<Hierarchy>,
    pub nodes: Vec<usize>,
    pub tol_feas: f64,
    pub tol_obj: f64,
    /// Relative cut violation below which separation stops; the final
    /// rescaling then restores every cut exactly.
    pub tol_cut: f64,
    /// Lower bound on the spectrum of `D`. `None` selects `1e-6 trace(L)/n`.
    pub floor: Option<f64>,
    pub seed: u64,
}

impl CpInstance {
    pub fn new(graph: MultiGraph, program: Program, mode: Mode) -> CpInstance {
        CpInstance {
            graph,
            program,
            mode,
            hierarchy: None,
            nodes: Vec::new(),
            tol_feas: 1e-9,
            tol_obj: 1e-7,
            tol_cut: 1e-6,
            floor: None,
            seed: 0,
        }
    }

    pub fn tree(graph: MultiGraph, hierarchy: Hierarchy, nodes: Vec<usize>, mode: Mode) -> CpInstance {
        CpInstance { hierarchy: Some(hierarchy), nodes, ..CpInstance::new(graph, Program::Tree, mode) }
    }

    pub fn pd_floor(&self) -> f64 {
        self.floor.unwrap_or_else(|| {
            let l = self.graph.laplacian();
            1e-6 * l.trace() / self.graph.n() as f64
        })
    }
}

/// What a reported constraint value measures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constraint {
    /// Resistance between two endpoints (all parallel copies share it).
    Pair { u: usize, v: usize },
    /// Average resistance over the edges of a cut.
    Cut { side: Vec<usize> },
    /// Average resistance over the outgoing edges of a hierarchy node.
    Node { node: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstraintValue {
    pub constraint: Constraint,
    pub value: f64,
}

/// One lazy-constraint round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Round {
    pub round: usize,
    pub objective: f64,
    pub max_violation: f64,
    pub cuts_added: usize,
    pub newton_steps: usize,
}

#[derive(Clone, Debug)]
pub struct CpSolution {
    pub d: PsdMatrix,
    pub objective: f64,
    pub floor: f64,
    /// Dominance cuts imposed, in the order they were added.
    pub active_cuts: Vec<Vec<usize>>,
    /// Cuts whose average was imposed as an objective row (Average program).
    pub objective_cuts: Vec<Vec<usize>>,
    /// Smallest `1_S' L 1_S - 1_S' D 1_S` found by the final separation scan.
    pub feasibility_margin: f64,
    pub margin_side: Vec<usize>,
    /// True when the final scans were local searches rather than exhaustive.
    pub heuristic: bool,
    pub edge_reff: Vec<f64>,
    pub per_constraint: Vec<ConstraintValue>,
    pub rounds: Vec<Round>,
}

impl CpSolution {
    /// Average of `edge_reff` over the given edges.
    pub fn average_reff(&self, edges: &[usize]) -> f64 {
        edges.iter().map(|&e| self.edge_reff[e]).sum::<f64>() / edges.len() as f64
    }
}

/// `x_e' D^{-1} x_e` for every edge.
pub fn reff_under(g: &MultiGraph, d: &DMatrix<f64>) -> Result<Vec<f64>> {
    let inv = d
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("matrix is not positive definite".into()))?
        .inverse();
    Ok(g.edges().iter().map(|&(u, v)| inv[(u, u)] + inv[(v, v)] - 2.0 * inv[(u, v)]).collect())
}

fn side_of(bits: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&v| bits >> v & 1 == 1).collect()
}

/// Keeps the `cap` best `(score, bits)` entries, ties broken by side order.
struct TopK {
    cap: usize,
    items: Vec<(f64, u64)>,
}

impl TopK {
    fn offer(&mut self, score: f64, bits: u64) {
        let before = |a: &(f64, u64), b: &(f64, u64)| a.0 > b.0 || (a.0 == b.0 && lex_less(a.1, b.1));
        if self.items.len() == self.cap && !before(&(score, bits), self.items.last().unwrap()) {
            return;
        }
        let pos = self.items.iter().position(|x| before(&(score, bits), x)).unwrap_or(self.items.len());
        self.items.insert(pos, (score, bits));
        self.items.truncate(self.cap);
    }
}

/// Maximizes `score(1_S' A 1_S, 1_S' B 1_S)` over proper subsets `S` by
/// single-vertex flips from seeded random starts.
fn local_search(
    n: usize,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    score: impl Fn(f64, f64) -> f64,
    seed: u64,
    top: &mut TopK,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..LOCAL_SEARCH_RESTARTS {
        let mut inside: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let size = inside.iter().filter(|&&x| x).count();
        if size == 0 {
            inside[rng.random_range(0..n)] = true;
        } else if size == n {
            inside[rng.random_range(0..n)] = false;
        }
        let mut size = inside.iter().filter(|&&x| x).count();
        let mut ya = vec![0.0; n];
        let mut yb = vec![0.0; n];
        let (mut qa, mut qb) = (0.0, 0.0);
        for v in (0..n).filter(|&v| inside[v]) {
            qa += 2.0 * ya[v] + a[(v, v)];
            qb += 2.0 * yb[v] + b[(v, v)];
            for j in 0..n {
                ya[j] += a[(j, v)];
                yb[j] += b[(j, v)];
            }
        }
        loop {
            let current = score(qa, qb);
            let mut best: Option<(f64, usize, f64, f64)> = None;
            for v in 0..n {
                let (na, nb) = if inside[v] {
                    if size == 1 {
                        continue;
                    }
                    (qa - 2.0 * ya[v] + a[(v, v)], qb - 2.0 * yb[v] + b[(v, v)])
                } else {
                    if size == n - 1 {
                        continue;
                    }
                    (qa + 2.0 * ya[v] + a[(v, v)], qb + 2.0 * yb[v] + b[(v, v)])
                };
                let s = score(na, nb);
                if s > current + 1e-12 && best.is_none_or(|x| s > x.0) {
                    best = Some((s, v, na, nb));
                }
            }
            let Some((_, v, na, nb)) = best else { break };
            let sign = if inside[v] { -1.0 } else { 1.0 };
            inside[v] = !inside[v];
            size = if inside[v] { size + 1 } else { size - 1 };
            for j in 0..n {
                ya[j] += sign * a[(j, v)];
                yb[j] += sign * b[(j, v)];
            }
            qa = na;
            qb = nb;
        }
        let bits = (0..n).filter(|&v| inside[v]).fold(0u64, |acc, v| acc | 1 << v);
        if !top.items.iter().any(|x| x.1 == bits) {
            top.offer(score(qa, qb), bits);
        }
    }
}

/// Most violated dominance cuts of `D` against `L`, best first, along with
/// whether the scan was exhaustive.
fn violated_cuts(g: &MultiGraph, d: &DMatrix<f64>, cap: usize, seed: u64) -> (Vec<(f64, u64)>, bool) {
    let n = g.n();
    let m = d - g.laplacian();
    let mut top = TopK { cap, items: Vec::new() };
    if n <= EXHAUSTIVE_MAX_N {
        let rows: Vec<f64> = (0..n).map(|i| m.row(i).sum()).collect();
        let total: f64 = rows.iter().sum();
        let full = (1u64 << n) - 1;
        gray_scan(n, &[&m], &[&rows], |bits, q, l| {
            top.offer(q[0], bits);
            top.offer(total - 2.0 * l[0] + q[0], full ^ bits);
        });
        (top.items, false)
    } else {
        let zero = DMatrix::zeros(n, n);
        local_search(n, &m, &zero, |a, _| a, seed, &mut top);
        (top.items, true)
    }
}

/// Result of a dominance separation call.
#[derive(Clone, Debug, PartialEq)]
pub struct Separation {
    /// Side maximizing `1_S' (D - L) 1_S`, reported when that exceeds `tol_feas`.
    pub cut: Option<Cut>,
    pub violation: f64,
    pub heuristic: bool,
}

/// Looks for a cut with `1_S' D 1_S > 1_S' L 1_S + tol_feas`. In psd mode the
/// Loewner constraint is enforced exactly by the solver, so nothing is
/// separated.
pub fn separation_oracle(g: &MultiGraph, d: &DMatrix<f64>, mode: Mode, tol_feas: f64, seed: u64) -> Result<Separation> {
    if d.shape() != (g.n(), g.n()) {
        return Err(Error::InvalidArgument("matrix and graph sizes differ".into()));
    }
    if mode == Mode::Psd || g.n() < 2 {
        return Ok(Separation { cut: None, violation: 0.0, heuristic: false });
    }
    let (items, heuristic) = violated_cuts(g, d, 1, seed);
    let (violation, bits) = items[0];
    let cut = (violation > tol_feas).then(|| {
        let side = side_of(bits, g.n());
        let value = crate::graph::cut_edges(g, &side).expect("side in range").len();
        Cut { side, value }
    });
    Ok(Separation { cut, violation, heuristic })
}

/// Cuts whose edge-average resistance under `reff` is largest, best first.
fn worst_average_cuts(g: &MultiGraph, reff: &[f64], cap: usize, seed: u64) -> (Vec<(f64, u64)>, bool) {
    let n = g.n();
    let weighted = g.laplacian_weighted(reff);
    let l = g.laplacian();
    let mut top = TopK { cap, items: Vec::new() };
    let ratio = |a: f64, b: f64| if b > 0.5 { a / b } else { f64::NEG_INFINITY };
    if n <= EXHAUSTIVE_MAX_N {
        gray_scan(n, &[&weighted, &l], &[], |bits, q, _| top.offer(ratio(q[0], q[1]), bits));
        (top.items, false)
    } else {
        local_search(n, &weighted, &l, ratio, seed, &mut top);
        (top.items, true)
    }
}

/// Largest `s <= 1` such that `floor I + s (D - floor I)` satisfies every
/// dominance cut, checking both sides of every cut.
fn dominance_scale(g: &MultiGraph, d: &DMatrix<f64>, floor: f64, seed: u64) -> (f64, bool) {
    let n = g.n();
    let l = g.laplacian();
    let mut scale: f64 = 1.0;
    let mut offer = |qd: f64, ql: f64, size: f64| {
        let excess = qd - floor * size;
        let room = ql - floor * size;
        if qd > ql && excess > 0.0 {
            scale = scale.min((room / excess).max(0.0));
        }
    };
    if n <= EXHAUSTIVE_MAX_N {
        let rows: Vec<f64> = (0..n).map(|i| d.row(i).sum()).collect();
        let total: f64 = rows.iter().sum();
        let ones = vec![1.0; n];
        gray_scan(n, &[d, &l], &[&rows, &ones], |_, q, lin| {
            offer(q[0], q[1], lin[1]);
            offer(total - 2.0 * lin[0] + q[0], q[1], n as f64 - lin[1]);
        });
        (scale, false)
    } else {
        let (items, _) = violated_cuts(g, d, SEPARATION_BATCH, seed);
        for (_, bits) in items {
            let side = side_of(bits, n);
            offer(barrier::quad_side(d, &side), barrier::quad_side(&l, &side), side.len() as f64);
        }
        (scale, true)
    }
}

fn initial_box(l: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let n = l.nrows();
    let nf = n as f64;
    let mut d = l * 0.5 + DMatrix::from_element(n, n, 1.0 / (6.0 * nf * nf));
    let diag = (1.0 / (6.0 * nf)).max(1.5 * floor);
    for i in 0..n {
        d[(i, i)] += diag;
    }
    d
}

/// Upper matrix used in psd mode: `L + (2 floor / n) J`. It agrees with `L` on
/// the range of `L` and leaves room for `D >= floor I` along the all-ones
/// direction, so its resistances are those of `L`.
fn psd_upper(l: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let n = l.nrows();
    l + DMatrix::from_element(n, n, 2.0 * floor / n as f64)
}

fn check_instance(inst: &CpInstance) -> Result<Vec<(Constraint, Vec<usize>)>> {
    let g = &inst.graph;
    if g.n() < 2 {
        return Err(Error::InvalidGraph("need at least two vertices".into()));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    match inst.program {
        Program::Max => {
            let mut pairs: Vec<(usize, usize)> =
                g.edges().iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
            pairs.sort();
            pairs.dedup();
            Ok(pairs
                .into_iter()
                .map(|(u, v)| {
                    let ids = (0..g.m())
                        .filter(|&e| {
                            let (a, b) = g.edge(e);
                            (a.min(b), a.max(b)) == (u, v)
                        })
                        .take(1)
                        .collect();
                    (Constraint::Pair { u, v }, ids)
                })
                .collect())
        }
        Program::Average => Ok(Vec::new()),
        Program::Tree => {
            let h = inst
                .hierarchy
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("tree program needs a hierarchy".into()))?;
            if h.vertex_count() != g.n() {
                return Err(Error::InconsistentLeafMap(format!(
                    "hierarchy has {} leaves, graph has {} vertices",
                    h.vertex_count(),
                    g.n()
                )));
            }
            if inst.nodes.is_empty() {
                return Err(Error::InvalidArgument("empty node set".into()));
            }
            let mut nodes = inst.nodes.clone();
            nodes.sort();
            nodes.dedup();
            nodes
                .into_iter()
                .map(|t| {
                    let out = h.outgoing(g, t)?;
                    if out.is_empty() {
                        return Err(Error::InvalidArgument(format!("node {t} has no outgoing edges")));
                    }
                    Ok((Constraint::Node { node: t }, out))
                })
                .collect()
        }
    }
}

fn average_matrix(g: &MultiGraph, ids: &[usize]) -> DMatrix<f64> {
    g.laplacian_of(ids.iter().copied()) / ids.len() as f64
}

/// Solves the instance by a barrier method with lazily generated cut rows.
pub fn solve_cp(inst: &CpInstance) -> Result<CpSolution> {
    let fixed = check_instance(inst)?;
    let g = &inst.graph;
    let n = g.n();
    let l = g.laplacian();
    let floor = inst.pd_floor();
    let sweep = spectral_partition(g)?;
    let mut seed_sides: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    if sweep.side.len() > 1 {
        seed_sides.push(sweep.side.clone());
    }

    let cut_bound = |side: &[usize]| barrier::quad_side(&l, side);
    let mut prob = barrier::Problem {
        n,
        objective: fixed.iter().map(|(_, ids)| average_matrix(g, ids)).collect(),
        cuts: Vec::new(),
        cut_bounds: Vec::new(),
        floor,
        upper: None,
    };
    let mut objective_cuts: Vec<Vec<usize>> = Vec::new();
    let d_init = match inst.mode {
        Mode::Box => {
            for s in &seed_sides {
                prob.cuts.push(s.clone());
                prob.cut_bounds.push(cut_bound(s));
            }
            initial_box(&l, floor)
        }
        Mode::Psd => {
            let c = psd_upper(&l, floor);
            let d0 = (&c + DMatrix::identity(n, n) * floor) * 0.5;
            prob.upper = Some(c);
            d0
        }
    };
    if inst.program == Program::Average {
        for s in &seed_sides {
            let ids = crate::graph::cut_edges(g, s)?;
            prob.objective.push(average_matrix(g, &ids));
            objective_cuts.push(s.clone());
        }
    }

    let mut rounds: Vec<Round> = Vec::new();
    let mut start = d_init.clone();
    let mut t0 = 1.0;
    let mut best_violation = f64::INFINITY;
    let mut since_progress = 0;
    let mut heuristic = false;
    let d = loop {
        let opts = barrier::Options { tol_gap: inst.tol_obj, t0, ..Default::default() };
        let mut out = prob.solve(&start, opts)?;
        if !out.converged && t0 > 1.0 {
            // warm start went astray: redo from the analytic start
            let cold = prob.solve(&d_init, barrier::Options { t0: 1.0, ..opts })?;
            let steps = out.newton_steps + cold.newton_steps;
            out = barrier::Outcome { newton_steps: steps, ..cold };
        }
        let d = out.d;
        let values = prob.objective_values(&d);
        let mut objective = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let round_no = rounds.len();
        let seed = inst.seed.wrapping_add(round_no as u64);

        let mut new_dom: Vec<Vec<usize>> = Vec::new();
        let mut violation = 0.0f64;
        if inst.mode == Mode::Box {
            let (items, heur) = violated_cuts(g, &d, SEPARATION_BATCH, seed);
            heuristic |= heur;
            for &(v, bits) in &items {
                let side = side_of(bits, n);
                let rel = v / cut_bound(&side);
                if v > inst.tol_feas && rel > inst.tol_cut && !prob.cuts.contains(&side) {
                    violation = violation.max(rel);
                    new_dom.push(side);
                }
            }
        }
        let mut new_obj: Vec<Vec<usize>> = Vec::new();
        if inst.program == Program::Average {
            let reff = reff_under(g, &d)?;
            let (items, heur) = worst_average_cuts(g, &reff, SEPARATION_BATCH, seed);
            heuristic |= heur;
            let current = objective;
            if let Some(&(v, _)) = items.first() {
                objective = objective.max(v);
            }
            for &(v, bits) in &items {
                let rel = (v - current) / current.max(1e-300);
                if rel > inst.tol_cut {
                    let side = side_of(bits, n);
                    if !objective_cuts.contains(&side) {
                        violation = violation.max(rel);
                        new_obj.push(side);
                    }
                }
            }
        }
        rounds.push(Round {
            round: round_no,
            objective,
            max_violation: violation,
            cuts_added: new_dom.len() + new_obj.len(),
            newton_steps: out.newton_steps,
        });
        if new_dom.is_empty() && new_obj.is_empty() {
            break d;
        }
        if violation < 0.99 * best_violation {
            best_violation = violation;
            since_progress = 0;
        } else {
            since_progress += 1;
        }
        if since_progress >= STALL_ROUNDS || rounds.len() >= MAX_ROUNDS {
            return Err(Error::SolverStalled(format!(
                "{} rounds, worst relative violation {violation:.3e}",
                rounds.len()
            )));
        }

        // Pull the iterate toward the strictly feasible start so every new
        // dominance row has positive slack, then warm start.
        let mut theta: f64 = 0.0;
        for side in &new_dom {
            let b = cut_bound(side);
            let here = b - barrier::quad_side(&d, side);
            let there = b - barrier::quad_side(&d_init, side);
            if here <= 0.0 {
                theta = theta.max(-here / (there - here));
            }
        }
        for side in new_dom {
            prob.cut_bounds.push(cut_bound(&side));
            prob.cuts.push(side);
        }
        for side in new_obj {
            let ids = crate::graph::cut_edges(g, &side)?;
            prob.objective.push(average_matrix(g, &ids));
            objective_cuts.push(side);
        }
        theta = (theta + 0.1 * (1.0 - theta)).min(1.0);
        start = &d * (1.0 - theta) + &d_init * theta;
        t0 = (out.t * 1e-6).max(1.0);
    };

    // Cuts left out carry relative violations below tol_cut. Shrinking D
    // toward the floor by the worst ratio makes every cut hold.
    let d = match inst.mode {
        Mode::Box => {
            let (scale, heur) = dominance_scale(g, &d, floor, inst.seed);
            heuristic |= heur;
            let shift = DMatrix::identity(n, n) * floor;
            (&d - &shift) * scale.min(1.0) + shift
        }
        Mode::Psd => d,
    };
    let (margin, margin_bits) = {
        let (items, heur) = violated_cuts(g, &d, 1, inst.seed);
        heuristic |= heur;
        items.first().map(|&(v, b)| (-v, b)).unwrap_or((f64::INFINITY, 0))
    };
    let edge_reff = reff_under(g, &d)?;
    let per_constraint: Vec<ConstraintValue> = match inst.program {
        Program::Max | Program::Tree => fixed
            .iter()
            .map(|(c, ids)| ConstraintValue {
                constraint: c.clone(),
                value: ids.iter().map(|&e| edge_reff[e]).sum::<f64>() / ids.len() as f64,
            })
            .collect(),
        Program::Average => objective_cuts
            .iter()
            .map(|side| {
                let ids = crate::graph::cut_edges(g, side).expect("side in range");
                ConstraintValue {
                    constraint: Constraint::Cut { side: side.clone() },
                    value: ids.iter().map(|&e| edge_reff[e]).sum::<f64>() / ids.len() as f64,
                }
            })
            .collect(),
    };
    let objective = match inst.program {
        Program::Average => {
            let (items, heur) = worst_average_cuts(g, &edge_reff, 1, inst.seed);
            heuristic |= heur;
            items[0].0.max(per_constraint.iter().map(|c| c.value).fold(0.0, f64::max))
        }
        _ => per_constraint.iter().map(|c| c.value).fold(0.0, f64::max),
    };
    let matrix = PsdMatrix::new((&d + d.transpose()) * 0.5, floor * (1.0 - 1e-9))?;
    Ok(CpSolution {
        d: matrix,
        objective,
        floor,
        active_cuts: prob.cuts,
        objective_cuts,
        feasibility_margin: margin,
        margin_side: side_of(margin_bits, n),
        heuristic,
        edge_reff,
        per_constraint,
        rounds,
    })
}

/// Shortcut matrix `k L_{a,b}` for a single pair, `k` being the local edge
/// connectivity. Its resistance between `a` and `b` is `1/k` and it is cut
/// dominated by `L` since every cut separating `a` from `b` has at least `k`
/// edges.
pub fn single_pair_shortcut(g: &MultiGraph, a: usize, b: usize) -> Result<(DMatrix<f64>, usize)> {
    if a == b || a >= g.n() || b >= g.n() {
        return Err(Error::InvalidArgument(format!("need two distinct vertices, got {a} and {b}")));
    }
    let (k, _) = local_edge_connectivity(g, a, b)?;
    if k == 0 {
        return Err(Error::Disconnected);
    }
    let mut d = DMatrix::zeros(g.n(), g.n());
    let kf = k as f64;
    d[(a, a)] = kf;
    d[(b, b)] = kf;
    d[(a, b)] = -kf;
    d[(b, a)] = -kf;
    Ok((d, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::dyadic;
    use crate::graph::tests::{cycle, dumbbell, two_triangles};
    use crate::spectral::{cut_dominance, edge_resistances, reff_in, SpectralView};

    #[test]
    fn dumbbell_max_box() {
        let sol = solve_cp(&CpInstance::new(dumbbell(5), Program::Max, Mode::Box)).unwrap();
        assert!((sol.objective - 0.2).abs() < 1e-4, "{}", sol.objective);
        assert!(sol.objective >= 0.2 - 1e-9);
        assert!(sol.feasibility_margin >= -1e-9);
    }

    #[test]
    fn psd_mode_recovers_laplacian_resistances() {
        for g in [cycle(5), two_triangles()] {
            let sol = solve_cp(&CpInstance::new(g.clone(), Program::Max, Mode::Psd)).unwrap();
            let view = SpectralView::of_graph(&g);
            let worst = edge_resistances(&g, &view).unwrap().into_iter().fold(0.0, f64::max);
            assert!((sol.objective - worst).abs() < 1e-5 * worst, "{} vs {worst}", sol.objective);
            let g_n = g.n();
            let boxed = solve_cp(&CpInstance::new(g, Program::Max, Mode::Box)).unwrap();
            // the floor forces mass n*floor onto the all-ones direction in box mode
            let slack = sol.objective * g_n as f64 * boxed.floor;
            assert!(boxed.objective <= sol.objective + slack, "{} {}", boxed.objective, sol.objective);
        }
    }

    #[test]
    fn box_solutions_dominated_and_consistent() {
        let g = two_triangles();
        for program in [Program::Max, Program::Average] {
            let sol = solve_cp(&CpInstance::new(g.clone(), program, Mode::Box)).unwrap();
            let dom = cut_dominance(&sol.d.matrix, &g.laplacian()).unwrap();
            assert!(dom.margin >= -1e-9, "{program:?} {}", dom.margin);
            let recomputed = sol.per_constraint.iter().map(|c| c.value).fold(0.0, f64::max);
            assert!((recomputed - sol.objective).abs() < 1e-7, "{program:?}");
            assert!(sol.d.min_eigenvalue >= sol.floor * (1.0 - 1e-6));
        }
    }

    #[test]
    fn deterministic() {
        let g = dyadic(2, 3).unwrap();
        let a = solve_cp(&CpInstance::new(g.clone(), Program::Average, Mode::Box)).unwrap();
        let b = solve_cp(&CpInstance::new(g, Program::Average, Mode::Box)).unwrap();
        assert_eq!(a.active_cuts, b.active_cuts);
        assert_eq!(a.objective_cuts, b.objective_cuts);
        assert!((a.objective - b.objective).abs() < 1e-12);
    }

    #[test]
    fn oracle_examples() {
        let g = two_triangles();
        let l = g.laplacian();
        assert!(separation_oracle(&g, &l, Mode::Box, 1e-9, 0).unwrap().cut.is_none());
        let s = separation_oracle(&g, &(&l * 2.0), Mode::Box, 1e-9, 0).unwrap();
        let cut = s.cut.unwrap();
        assert!((s.violation - cut.value as f64).abs() < 1e-9);
    }

    #[test]
    fn local_search_agrees_on_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = crate::generators::random_connected(8, 6, 3);
        for trial in 0..10 {
            let mut d = DMatrix::from_fn(8, 8, |_, _| rng.random_range(-1.0..1.0));
            d = (&d + d.transpose()) * 0.5 + g.laplacian() * rng.random_range(0.3..1.2);
            let (exact, _) = violated_cuts(&g, &d, 1, trial);
            let m = &d - g.laplacian();
            let mut top = TopK { cap: 1, items: Vec::new() };
            local_search(8, &m, &DMatrix::zeros(8, 8), |a, _| a, trial, &mut top);
            assert_eq!(exact[0].0 > 1e-9, top.items[0].0 > 1e-9, "trial {trial}");
        }
    }

    #[test]
    fn shortcut_examples() {
        let tri = MultiGraph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        let (d, k) = single_pair_shortcut(&tri, 0, 2).unwrap();
        assert_eq!(k, 2);
        assert!((reff_in(&d, 0, 2).unwrap() - 0.5).abs() < 1e-12);
        assert!(cut_dominance(&d, &tri.laplacian()).unwrap().holds);
        let (d, k) = single_pair_shortcut(&dumbbell(5), 0, 1).unwrap();
        assert_eq!(k, 5);
        assert_eq!(d, dumbbell(5).laplacian());
        let split = MultiGraph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        assert!(matches!(single_pair_shortcut(&split, 0, 3), Err(Error::Disconnected)));
    }
}
