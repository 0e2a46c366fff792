//! File formats: graph text, matrix text, and the JSON documents for
//! hierarchies, dual witnesses, solutions and pipeline traces. Every JSON
//! document carries `"format": 1`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cp::{ConstraintValue, CpSolution, DualWitness, Round};
use crate::error::{Error, Result};
use crate::graph::MultiGraph;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.display().to_string()),
        _ => Error::Io(e),
    })
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

fn parse_fields<T: std::str::FromStr>(line: usize, s: &str, want: Option<usize>) -> Result<Vec<T>> {
    let out = s
        .split_whitespace()
        .map(|tok| tok.parse::<T>().map_err(|_| parse_err(line, format!("cannot parse {tok:?}"))))
        .collect::<Result<Vec<T>>>()?;
    if let Some(w) = want {
        if out.len() != w {
            return Err(parse_err(line, format!("expected {w} fields, found {}", out.len())));
        }
    }
    Ok(out)
}

/// Parses `n m` followed by `m` lines `u v`. Line order defines edge ids.
pub fn parse_graph(text: &str) -> Result<MultiGraph> {
    let mut lines = content_lines(text);
    let (line, header) = lines.next().ok_or_else(|| parse_err(1, "missing header `n m`"))?;
    let hv = parse_fields::<usize>(line, header, Some(2))?;
    let (n, m) = (hv[0], hv[1]);
    let mut edges = Vec::with_capacity(m);
    let mut last = line;
    for (line, body) in lines {
        if edges.len() == m {
            return Err(parse_err(line, format!("more than {m} edge lines")));
        }
        let uv = parse_fields::<usize>(line, body, Some(2))?;
        let (u, v) = (uv[0], uv[1]);
        if u >= n || v >= n {
            return Err(parse_err(line, format!("endpoint out of range 0..{n}")));
        }
        if u == v {
            return Err(parse_err(line, format!("self-loop at vertex {u}")));
        }
        edges.push((u, v));
        last = line;
    }
    if edges.len() != m {
        return Err(parse_err(last, format!("expected {m} edges, found {}", edges.len())));
    }
    MultiGraph::new(n, edges)
}

pub fn format_graph(g: &MultiGraph) -> String {
    let mut s = format!("{} {}\n", g.n(), g.m());
    for &(u, v) in g.edges() {
        s.push_str(&format!("{u} {v}\n"));
    }
    s
}

pub fn read_graph(path: &Path) -> Result<MultiGraph> {
    parse_graph(&read_text(path)?)
}

pub fn write_graph(path: &Path, g: &MultiGraph) -> Result<()> {
    Ok(fs::write(path, format_graph(g))?)
}

/// Parses `r c` followed by `r` rows of `c` reals.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = content_lines(text);
    let (line, header) = lines.next().ok_or_else(|| parse_err(1, "missing header `rows cols`"))?;
    let hv = parse_fields::<usize>(line, header, Some(2))?;
    let (r, c) = (hv[0], hv[1]);
    let mut data = Vec::with_capacity(r * c);
    let mut rows = 0;
    for (line, body) in lines {
        if rows == r {
            return Err(parse_err(line, format!("more than {r} rows")));
        }
        let vals = parse_fields::<f64>(line, body, Some(c))?;
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(parse_err(line, "non-finite entry"));
        }
        data.extend(vals);
        rows += 1;
    }
    if rows != r {
        return Err(parse_err(line + rows, format!("expected {r} rows, found {rows}")));
    }
    Ok(DMatrix::from_row_slice(r, c, &data))
}

/// Shortest round-tripping decimal form of every entry.
pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut s = format!("{} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix(&read_text(path)?)
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    Ok(fs::write(path, format_matrix(m))?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    Ok(fs::write(path, to_json(value)?)?)
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of an input file as embedded in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

pub fn digest_file(path: &Path) -> Result<InputDigest> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.display().to_string()),
        _ => Error::Io(e),
    })?;
    Ok(InputDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) })
}

/// Serde adapter storing a matrix as a list of rows.
pub mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        s.collect_seq(rows)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != c) {
            return Err(D::Error::custom("matrix rows have different lengths"));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        Ok(DMatrix::from_row_slice(data.len() / c.max(1), c, &data))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CutWeight {
    pub side: Vec<usize>,
    pub w: f64,
}

/// JSON form of a dual witness. `U` and `lambdaNodes` are keyed by id.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WitnessFile {
    pub format: u32,
    #[serde(rename = "X", with = "matrix_rows")]
    pub x: DMatrix<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_weights: Option<Vec<f64>>,
    #[serde(rename = "U")]
    pub u: BTreeMap<usize, Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub lambda_nodes: BTreeMap<usize, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambda_cuts: Vec<CutWeight>,
}

impl From<&DualWitness> for WitnessFile {
    fn from(w: &DualWitness) -> Self {
        WitnessFile {
            format: 1,
            x: w.x.clone(),
            row_weights: w.row_weights.clone(),
            u: w.u.iter().map(|(e, r)| (*e, r.iter().copied().collect())).collect(),
            lambda_nodes: w.lambda_nodes.iter().copied().collect(),
            lambda_cuts: w.lambda_cuts.iter().map(|(s, w)| CutWeight { side: s.clone(), w: *w }).collect(),
        }
    }
}

impl TryFrom<WitnessFile> for DualWitness {
    type Error = Error;
    fn try_from(f: WitnessFile) -> Result<DualWitness> {
        if f.format != 1 {
            return Err(Error::InvalidArgument(format!("unsupported witness format {}", f.format)));
        }
        Ok(DualWitness {
            x: f.x,
            row_weights: f.row_weights,
            u: f.u.into_iter().map(|(e, r)| (e, DVector::from_vec(r))).collect(),
            lambda_nodes: f.lambda_nodes.into_iter().collect(),
            lambda_cuts: f.lambda_cuts.into_iter().map(|c| (c.side, c.w)).collect(),
        })
    }
}

pub fn read_witness(path: &Path) -> Result<DualWitness> {
    read_json::<WitnessFile>(path)?.try_into()
}

/// JSON form of a solved program. The matrix is stored inline.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolutionFile {
    pub format: u32,
    pub objective: f64,
    pub floor: f64,
    #[serde(rename = "D", with = "matrix_rows")]
    pub d: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub active_cuts: Vec<Vec<usize>>,
    pub objective_cuts: Vec<Vec<usize>>,
    pub feasibility_margin: f64,
    pub margin_side: Vec<usize>,
    pub heuristic: bool,
    pub edge_reff: Vec<f64>,
    pub per_constraint: Vec<ConstraintValue>,
    pub rounds: Vec<Round>,
}

impl From<&CpSolution> for SolutionFile {
    fn from(s: &CpSolution) -> Self {
        SolutionFile {
            format: 1,
            objective: s.objective,
            floor: s.floor,
            d: s.d.matrix.clone(),
            min_eigenvalue: s.d.min_eigenvalue,
            active_cuts: s.active_cuts.clone(),
            objective_cuts: s.objective_cuts.clone(),
            feasibility_margin: s.feasibility_margin,
            margin_side: s.margin_side.clone(),
            heuristic: s.heuristic,
            edge_reff: s.edge_reff.clone(),
            per_constraint: s.per_constraint.clone(),
            rounds: s.rounds.clone(),
        }
    }
}
