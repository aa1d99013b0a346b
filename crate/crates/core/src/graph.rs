//! Weighted epidemic graphs: the data model with per-entry weight intervals,
//! adjacency distance, seeded random generation, flow symmetrization, and
//! file I/O in edge-list CSV and dense JSON formats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numerics::SeededRng;

/// On-disk graph encodings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphFormat {
    /// Header `n,<count>`, optional `bounds,<lower>,<upper>`, then rows
    /// `i,j,w[,lower,upper]` with each undirected edge listed once (i ≤ j).
    /// Symmetric graphs only.
    EdgeListCsv,
    /// Object with fields `n`, `symmetric`, `weights`, `lower`, `upper`;
    /// the only format that can carry directed graphs.
    DenseJson,
}

impl GraphFormat {
    /// Picks the format from a file extension (`csv` or `json`).
    pub fn from_extension(ext: &str) -> Option<GraphFormat> {
        match ext.to_ascii_lowercase().as_str() {
            "csv" => Some(GraphFormat::EdgeListCsv),
            "json" => Some(GraphFormat::DenseJson),
            _ => None,
        }
    }
}

/// A weighted graph on `n` nodes. Entry `w_ij ≥ 0` is the transmission-to-
/// recovery ratio along the edge; a zero entry means no edge. Directed
/// graphs carry `symmetric = false`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    weights: Matrix,
    symmetric: bool,
}

impl WeightedGraph {
    pub fn new(weights: Matrix, symmetric: bool) -> Result<Self> {
        if !weights.is_square() {
            return Err(Error::validation("weight matrix must be square"));
        }
        if !weights.is_finite() {
            return Err(Error::validation("weight matrix has non-finite entries"));
        }
        if weights.as_slice().iter().any(|&w| w < 0.0) {
            return Err(Error::validation("weight matrix has negative entries"));
        }
        if symmetric && !weights.is_symmetric() {
            return Err(Error::validation("graph tagged symmetric but w_ij != w_ji"));
        }
        Ok(WeightedGraph { weights, symmetric })
    }

    pub fn n(&self) -> usize {
        self.weights.n()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    /// Count of strictly positive entries of the weight matrix.
    pub fn n_w(&self) -> usize {
        self.weights.as_slice().iter().filter(|&&w| w > 0.0).count()
    }

    /// All positions with positive weight, row-major.
    pub fn positive_entries(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.weights.get(i, j) > 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Positions that receive independent noise draws: the upper triangle
    /// (i ≤ j) for symmetric graphs, every positive entry otherwise.
    pub fn privatized_entries(&self) -> Vec<(usize, usize)> {
        if self.symmetric {
            let n = self.n();
            let mut out = Vec::new();
            for i in 0..n {
                for j in i..n {
                    if self.weights.get(i, j) > 0.0 {
                        out.push((i, j));
                    }
                }
            }
            out
        } else {
            self.positive_entries()
        }
    }

    /// Number of undirected off-diagonal edges (positions i < j with w > 0).
    pub fn edge_count(&self) -> usize {
        let n = self.n();
        let mut count = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if self.weights.get(i, j) > 0.0 || self.weights.get(j, i) > 0.0 {
                    count += 1;
                }
            }
        }
        count
    }

    /// Connectivity of the sub-graph on positive off-diagonal weights,
    /// ignoring edge direction.
    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if !seen[v]
                    && v != u
                    && (self.weights.get(u, v) > 0.0 || self.weights.get(v, u) > 0.0)
                {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Replaces the weight matrix, revalidating all invariants.
    pub fn with_weights(&self, weights: Matrix) -> Result<WeightedGraph> {
        if weights.n() != self.n() {
            return Err(Error::validation("replacement weights have a different node count"));
        }
        WeightedGraph::new(weights, self.symmetric)
    }
}

/// Per-entry weight intervals: the sensitive value `w_ij` of every edge lies
/// in `(lower_ij, upper_ij]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightBounds {
    lower: Matrix,
    upper: Matrix,
}

impl WeightBounds {
    pub fn new(lower: Matrix, upper: Matrix) -> Result<Self> {
        if (lower.rows(), lower.cols()) != (upper.rows(), upper.cols()) {
            return Err(Error::validation("bound matrices have mismatched shapes"));
        }
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::validation("bound matrices have non-finite entries"));
        }
        if lower.as_slice().iter().any(|&v| v < 0.0) {
            return Err(Error::validation("lower bounds must be nonnegative"));
        }
        if lower.as_slice().iter().zip(upper.as_slice()).any(|(&lo, &hi)| hi < lo) {
            return Err(Error::validation("upper bounds must not fall below lower bounds"));
        }
        Ok(WeightBounds { lower, upper })
    }

    /// One interval `(lower, upper]` applied to every positive entry of the
    /// graph; non-edges get the empty interval [0, 0].
    pub fn global(graph: &WeightedGraph, lower: f64, upper: f64) -> Result<Self> {
        let n = graph.n();
        let mut lo = Matrix::zeros(n, n);
        let mut hi = Matrix::zeros(n, n);
        for (i, j) in graph.positive_entries() {
            lo.set(i, j, lower);
            hi.set(i, j, upper);
        }
        let b = WeightBounds::new(lo, hi)?;
        b.validate_for(graph)?;
        Ok(b)
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    pub fn upper(&self) -> &Matrix {
        &self.upper
    }

    /// Interval of entry (i, j).
    pub fn interval(&self, i: usize, j: usize) -> (f64, f64) {
        (self.lower.get(i, j), self.upper.get(i, j))
    }

    /// Checks every invariant tying these bounds to a graph: shape, symmetry
    /// where the graph is symmetric, and `lower < w ≤ upper` on every edge.
    pub fn validate_for(&self, graph: &WeightedGraph) -> Result<()> {
        let n = graph.n();
        if self.lower.rows() != n || self.lower.cols() != n {
            return Err(Error::validation(format!(
                "bounds are {}x{} but the graph has {n} nodes",
                self.lower.rows(),
                self.lower.cols()
            )));
        }
        if graph.symmetric() && (!self.lower.is_symmetric() || !self.upper.is_symmetric()) {
            return Err(Error::validation("graph is symmetric but its bounds are not"));
        }
        for (i, j) in graph.positive_entries() {
            let w = graph.weights().get(i, j);
            let (lo, hi) = self.interval(i, j);
            if lo >= hi {
                return Err(Error::validation(format!(
                    "entry ({i},{j}): bound interval ({lo}, {hi}] is empty"
                )));
            }
            if w <= lo || w > hi {
                return Err(Error::validation(format!(
                    "entry ({i},{j}): weight {w} outside its interval ({lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// Frobenius distance `‖W − W'‖_F` between two graphs with the same node
/// count and edge set.
pub fn weight_distance(a: &WeightedGraph, b: &WeightedGraph) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::argument(format!(
            "node counts differ: {} vs {}",
            a.n(),
            b.n()
        )));
    }
    let (wa, wb) = (a.weights().as_slice(), b.weights().as_slice());
    if wa.iter().zip(wb).any(|(&x, &y)| (x > 0.0) != (y > 0.0)) {
        return Err(Error::argument("graphs have different edge sets"));
    }
    Ok(wa.iter().zip(wb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Whether `b` lies within Frobenius distance `k` of `a`.
pub fn is_adjacent(a: &WeightedGraph, b: &WeightedGraph, k: f64) -> Result<bool> {
    Ok(weight_distance(a, b)? <= k)
}

/// Random connected symmetric graph: a uniform spanning tree from a
/// loop-erased random walk, extra edges drawn uniformly from the remaining
/// non-edges up to `n_e` total, a self loop on every node, and weights
/// uniform on `(0, w_max]`.
pub fn random_connected_graph(
    n: usize,
    n_e: usize,
    w_max: f64,
    seed: u64,
) -> Result<WeightedGraph> {
    if n < 2 {
        return Err(Error::argument(format!("need at least 2 nodes, got {n}")));
    }
    if !(w_max.is_finite() && w_max > 0.0) {
        return Err(Error::argument(format!("w_max must be positive, got {w_max}")));
    }
    let max_edges = n * (n - 1) / 2;
    if n_e < n - 1 || n_e > max_edges {
        return Err(Error::argument(format!(
            "edge count {n_e} outside [{}, {max_edges}] for {n} nodes",
            n - 1
        )));
    }
    let mut rng = SeededRng::from_seed(seed);

    let mut in_tree = vec![false; n];
    let mut next = vec![usize::MAX; n];
    in_tree[0] = true;
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n_e);
    for start in 1..n {
        if in_tree[start] {
            continue;
        }
        let mut u = start;
        while !in_tree[u] {
            // uniform neighbor on the complete graph, skipping u itself
            let mut v = rng.below(n - 1);
            if v >= u {
                v += 1;
            }
            next[u] = v;
            u = v;
        }
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            let v = next[u];
            edges.push((u.min(v), u.max(v)));
            u = v;
        }
    }

    let extra = n_e - (n - 1);
    if extra > 0 {
        let mut on_tree = vec![false; n * n];
        for &(i, j) in &edges {
            on_tree[i * n + j] = true;
        }
        let mut candidates: Vec<(usize, usize)> = Vec::with_capacity(max_edges - (n - 1));
        for i in 0..n {
            for j in (i + 1)..n {
                if !on_tree[i * n + j] {
                    candidates.push((i, j));
                }
            }
        }
        for k in 0..extra {
            let pick = k + rng.below(candidates.len() - k);
            candidates.swap(k, pick);
            edges.push(candidates[k]);
        }
    }

    edges.sort_unstable();
    let mut w = Matrix::zeros(n, n);
    for &(i, j) in &edges {
        let value = w_max * (1.0 - rng.uniform());
        w.set(i, j, value);
        w.set(j, i, value);
    }
    for i in 0..n {
        w.set(i, i, w_max * (1.0 - rng.uniform()));
    }
    WeightedGraph::new(w, true)
}

/// Symmetrizes a directed flow matrix into a transmission matrix:
/// off-diagonals become `(f_ij + f_ji)/n` and each diagonal becomes
/// `|row sum − column sum|/n` for that node.
pub fn symmetrize_flows(f: &Matrix) -> Result<Matrix> {
    if !f.is_square() {
        return Err(Error::validation("flow matrix must be square"));
    }
    if !f.is_finite() {
        return Err(Error::validation("flow matrix has non-finite entries"));
    }
    if f.as_slice().iter().any(|&v| v < 0.0) {
        return Err(Error::validation("flow matrix has negative entries"));
    }
    let n = f.n();
    let scale = n as f64;
    let mut b = Matrix::zeros(n, n);
    for i in 0..n {
        let row: f64 = (0..n).map(|j| f.get(i, j)).sum();
        let col: f64 = (0..n).map(|j| f.get(j, i)).sum();
        b.set(i, i, (row - col).abs() / scale);
        for j in (i + 1)..n {
            let v = (f.get(i, j) + f.get(j, i)) / scale;
            b.set(i, j, v);
            b.set(j, i, v);
        }
    }
    Ok(b)
}

#[derive(Serialize, Deserialize)]
struct DenseGraphFile {
    n: usize,
    symmetric: bool,
    weights: Vec<Vec<f64>>,
    lower: Vec<Vec<f64>>,
    upper: Vec<Vec<f64>>,
}

/// Parses a graph and its weight bounds from text in the given format.
pub fn parse_graph(text: &str, format: GraphFormat) -> Result<(WeightedGraph, WeightBounds)> {
    match format {
        GraphFormat::EdgeListCsv => parse_edge_list(text),
        GraphFormat::DenseJson => parse_dense_json(text),
    }
}

/// Renders a graph and its bounds to text in the given format. Output is
/// canonical: parsing it and serializing again reproduces identical bytes.
pub fn serialize_graph(
    graph: &WeightedGraph,
    bounds: &WeightBounds,
    format: GraphFormat,
) -> Result<String> {
    bounds.validate_for(graph)?;
    match format {
        GraphFormat::EdgeListCsv => serialize_edge_list(graph, bounds),
        GraphFormat::DenseJson => serialize_dense_json(graph, bounds),
    }
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, what: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {what} from {field:?}"),
    })
}

fn parse_edge_list(text: &str) -> Result<(WeightedGraph, WeightBounds)> {
    let mut n: Option<usize> = None;
    let mut global: Option<(f64, f64)> = None;
    let mut weights: Option<Matrix> = None;
    let mut lower = Matrix::zeros(0, 0);
    let mut upper = Matrix::zeros(0, 0);
    let mut listed = std::collections::HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        match fields[0].trim() {
            "n" => {
                if n.is_some() {
                    return Err(Error::Parse { line, msg: "duplicate n header".into() });
                }
                if fields.len() != 2 {
                    return Err(Error::Parse { line, msg: "expected n,<count>".into() });
                }
                let count: usize = parse_field(fields[1], line, "node count")?;
                if count == 0 {
                    return Err(Error::Parse { line, msg: "node count must be positive".into() });
                }
                n = Some(count);
                weights = Some(Matrix::zeros(count, count));
                lower = Matrix::zeros(count, count);
                upper = Matrix::zeros(count, count);
            }
            "bounds" => {
                if fields.len() != 3 {
                    return Err(Error::Parse { line, msg: "expected bounds,<lower>,<upper>".into() });
                }
                let lo: f64 = parse_field(fields[1], line, "lower bound")?;
                let hi: f64 = parse_field(fields[2], line, "upper bound")?;
                global = Some((lo, hi));
            }
            _ => {
                let n = n.ok_or(Error::Parse {
                    line,
                    msg: "edge row before n,<count> header".into(),
                })?;
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(Error::Parse {
                        line,
                        msg: format!("expected i,j,w or i,j,w,lower,upper, got {} fields", fields.len()),
                    });
                }
                let i: usize = parse_field(fields[0], line, "node index")?;
                let j: usize = parse_field(fields[1], line, "node index")?;
                let w: f64 = parse_field(fields[2], line, "weight")?;
                if i >= n || j >= n {
                    return Err(Error::Parse {
                        line,
                        msg: format!("edge ({i},{j}) out of range for n={n}"),
                    });
                }
                if i > j {
                    return Err(Error::Parse {
                        line,
                        msg: format!("edge ({i},{j}) must be listed with i <= j"),
                    });
                }
                if !listed.insert((i, j)) {
                    return Err(Error::Parse { line, msg: format!("duplicate edge ({i},{j})") });
                }
                if !(w.is_finite() && w > 0.0) {
                    return Err(Error::Parse { line, msg: format!("edge weight must be positive, got {w}") });
                }
                let (lo, hi) = if fields.len() == 5 {
                    (
                        parse_field::<f64>(fields[3], line, "lower bound")?,
                        parse_field::<f64>(fields[4], line, "upper bound")?,
                    )
                } else {
                    global.ok_or(Error::Parse {
                        line,
                        msg: "3-field edge row but no bounds header declared".into(),
                    })?
                };
                let weights = weights.as_mut().expect("n parsed");
                weights.set(i, j, w);
                weights.set(j, i, w);
                lower.set(i, j, lo);
                lower.set(j, i, lo);
                upper.set(i, j, hi);
                upper.set(j, i, hi);
            }
        }
    }

    let weights = weights.ok_or(Error::Parse { line: 1, msg: "missing n,<count> header".into() })?;
    let graph = WeightedGraph::new(weights, true)?;
    let bounds = WeightBounds::new(lower, upper)?;
    bounds.validate_for(&graph)?;
    Ok((graph, bounds))
}

fn serialize_edge_list(graph: &WeightedGraph, bounds: &WeightBounds) -> Result<String> {
    if !graph.symmetric() {
        return Err(Error::argument("edge-list CSV carries symmetric graphs only"));
    }
    let entries = graph.privatized_entries();
    let uniform = {
        let first = entries.first().map(|&(i, j)| bounds.interval(i, j));
        first.filter(|&b| entries.iter().all(|&(i, j)| bounds.interval(i, j) == b))
    };
    let mut out = format!("n,{}\n", graph.n());
    if let Some((lo, hi)) = uniform {
        out.push_str(&format!("bounds,{lo},{hi}\n"));
        for (i, j) in entries {
            out.push_str(&format!("{i},{j},{}\n", graph.weights().get(i, j)));
        }
    } else {
        for (i, j) in entries {
            let (lo, hi) = bounds.interval(i, j);
            out.push_str(&format!("{i},{j},{},{lo},{hi}\n", graph.weights().get(i, j)));
        }
    }
    Ok(out)
}

fn parse_dense_json(text: &str) -> Result<(WeightedGraph, WeightBounds)> {
    let file: DenseGraphFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    let check_shape = |m: &Matrix, what: &str| -> Result<()> {
        if m.rows() != file.n || m.cols() != file.n {
            return Err(Error::validation(format!(
                "{what} matrix is {}x{} but n = {}",
                m.rows(),
                m.cols(),
                file.n
            )));
        }
        Ok(())
    };
    let weights = Matrix::from_rows(file.weights)?;
    check_shape(&weights, "weights")?;
    let graph = WeightedGraph::new(weights, file.symmetric)?;
    let lower = Matrix::from_rows(file.lower)?;
    let upper = Matrix::from_rows(file.upper)?;
    check_shape(&lower, "lower")?;
    check_shape(&upper, "upper")?;
    let bounds = WeightBounds::new(lower, upper)?;
    bounds.validate_for(&graph)?;
    Ok((graph, bounds))
}

fn serialize_dense_json(graph: &WeightedGraph, bounds: &WeightBounds) -> Result<String> {
    let file = DenseGraphFile {
        n: graph.n(),
        symmetric: graph.symmetric(),
        weights: graph.weights().to_rows(),
        lower: bounds.lower().to_rows(),
        upper: bounds.upper().to_rows(),
    };
    let mut text = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::validation(format!("JSON serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_node_graph(w: f64) -> (WeightedGraph, WeightBounds) {
        let mut m = Matrix::zeros(2, 2);
        m.set(0, 1, w);
        m.set(1, 0, w);
        let g = WeightedGraph::new(m, true).unwrap();
        let b = WeightBounds::global(&g, 0.2, 0.3).unwrap();
        (g, b)
    }

    #[test]
    fn single_edge_csv_round_trip() {
        let text = "n,2\nbounds,0.2,0.3\n0,1,0.25\n";
        let (g, b) = parse_graph(text, GraphFormat::EdgeListCsv).unwrap();
        assert_eq!(g.n(), 2);
        assert!(g.symmetric());
        assert_eq!(g.weights().get(0, 1), 0.25);
        assert_eq!(g.weights().get(1, 0), 0.25);
        assert_eq!(g.n_w(), 2);
        assert_eq!(serialize_graph(&g, &b, GraphFormat::EdgeListCsv).unwrap(), text);
    }

    #[test]
    fn complete_graph_json_has_all_entries_positive() {
        let w = Matrix::from_rows(vec![vec![0.25; 15]; 15]).unwrap();
        let g = WeightedGraph::new(w, true).unwrap();
        let b = WeightBounds::global(&g, 0.2, 0.3).unwrap();
        let text = serialize_graph(&g, &b, GraphFormat::DenseJson).unwrap();
        let (parsed, _) = parse_graph(&text, GraphFormat::DenseJson).unwrap();
        assert_eq!(parsed.n_w(), 225);
        assert_eq!(parsed, g);
    }

    #[test]
    fn random_graph_file_round_trips_both_formats() {
        let g = random_connected_graph(20, 100, 3.0, 99).unwrap();
        let b = WeightBounds::global(&g, 0.0, 3.0).unwrap();
        for format in [GraphFormat::EdgeListCsv, GraphFormat::DenseJson] {
            let text = serialize_graph(&g, &b, format).unwrap();
            let (g2, b2) = parse_graph(&text, format).unwrap();
            assert_eq!(serialize_graph(&g2, &b2, format).unwrap(), text);
            assert_eq!(g2, g);
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad_weight = "n,2\nbounds,0.2,0.3\n0,1,zero\n";
        match parse_graph(bad_weight, GraphFormat::EdgeListCsv) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let dup = "n,2\nbounds,0.2,0.3\n0,1,0.25\n0,1,0.26\n";
        match parse_graph(dup, GraphFormat::EdgeListCsv) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        let out_of_range = "n,2\nbounds,0.2,0.3\n0,5,0.25\n";
        assert!(matches!(
            parse_graph(out_of_range, GraphFormat::EdgeListCsv),
            Err(Error::Parse { line: 3, .. })
        ));
        let no_bounds = "n,2\n0,1,0.25\n";
        assert!(matches!(
            parse_graph(no_bounds, GraphFormat::EdgeListCsv),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn weight_on_interval_edge_is_validated() {
        // exactly the lower bound: outside the half-open interval
        let at_lower = "n,2\nbounds,0.25,0.3\n0,1,0.25\n";
        assert!(matches!(
            parse_graph(at_lower, GraphFormat::EdgeListCsv),
            Err(Error::Validation(_))
        ));
        // exactly the upper bound: allowed
        let at_upper = "n,2\nbounds,0.2,0.25\n0,1,0.25\n";
        assert!(parse_graph(at_upper, GraphFormat::EdgeListCsv).is_ok());
        let above = "n,2\nbounds,0.1,0.2\n0,1,0.25\n";
        assert!(matches!(parse_graph(above, GraphFormat::EdgeListCsv), Err(Error::Validation(_))));
    }

    #[test]
    fn asymmetric_json_under_symmetric_flag_rejected() {
        let text = r#"{"n":2,"symmetric":true,"weights":[[0.0,0.25],[0.24,0.0]],
                       "lower":[[0.0,0.2],[0.2,0.0]],"upper":[[0.0,0.3],[0.3,0.0]]}"#;
        assert!(matches!(parse_graph(text, GraphFormat::DenseJson), Err(Error::Validation(_))));
    }

    #[test]
    fn directed_json_round_trips() {
        let text = concat!(
            r#"{"n":2,"symmetric":false,"weights":[[0.0,0.25],[0.24,0.0]],"#,
            r#""lower":[[0.0,0.2],[0.2,0.0]],"upper":[[0.0,0.3],[0.3,0.0]]}"#
        );
        let (g, b) = parse_graph(text, GraphFormat::DenseJson).unwrap();
        assert!(!g.symmetric());
        assert_eq!(g.privatized_entries(), vec![(0, 1), (1, 0)]);
        let out = serialize_graph(&g, &b, GraphFormat::DenseJson).unwrap();
        let (g2, _) = parse_graph(&out, GraphFormat::DenseJson).unwrap();
        assert_eq!(g2, g);
        assert!(serialize_graph(&g, &b, GraphFormat::EdgeListCsv).is_err());
    }

    #[test]
    fn generated_graph_has_requested_shape() {
        let g = random_connected_graph(20, 100, 3.0, 7).unwrap();
        assert_eq!(g.n(), 20);
        assert!(g.symmetric());
        assert_eq!(g.edge_count(), 100);
        assert!((0..20).all(|i| g.weights().get(i, i) > 0.0));
        assert!(g.is_connected());
        assert!(g.weights().as_slice().iter().all(|&w| w <= 3.0));
        assert_eq!(g.n_w(), 2 * 100 + 20);
    }

    #[test]
    fn two_node_generation_is_forced() {
        let g = random_connected_graph(2, 1, 1.0, 3).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert!(g.weights().get(0, 1) > 0.0);
        assert!(g.weights().get(0, 0) > 0.0 && g.weights().get(1, 1) > 0.0);
    }

    #[test]
    fn generation_is_deterministic_in_seed() {
        let a = random_connected_graph(12, 40, 2.0, 11).unwrap();
        let b = random_connected_graph(12, 40, 2.0, 11).unwrap();
        let c = random_connected_graph(12, 40, 2.0, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn generated_graphs_always_connected() {
        for seed in 0..100 {
            let g = random_connected_graph(10, 9, 1.0, seed).unwrap();
            assert!(g.is_connected(), "seed {seed} produced a disconnected tree");
        }
    }

    #[test]
    fn edge_count_bounds_enforced() {
        assert!(random_connected_graph(1, 0, 1.0, 0).is_err());
        assert!(random_connected_graph(5, 3, 1.0, 0).is_err());
        assert!(random_connected_graph(5, 11, 1.0, 0).is_err());
        assert!(random_connected_graph(5, 10, 1.0, 0).is_ok());
    }

    #[test]
    fn weight_distance_basics() {
        let (g, _) = two_node_graph(0.25);
        assert_eq!(weight_distance(&g, &g).unwrap(), 0.0);
        let (g2, _) = two_node_graph(0.27);
        let d = weight_distance(&g, &g2).unwrap();
        assert!((d - 0.02 * 2f64.sqrt()).abs() < 1e-15);
        assert!(is_adjacent(&g, &g2, 0.03).unwrap());
        assert!(!is_adjacent(&g, &g2, 0.02).unwrap());
    }

    #[test]
    fn weight_distance_rejects_mismatched_patterns() {
        let (g, _) = two_node_graph(0.25);
        let mut m = Matrix::zeros(2, 2);
        m.set(0, 1, 0.25);
        m.set(1, 0, 0.25);
        m.set(0, 0, 0.1);
        let g2 = WeightedGraph::new(m, true).unwrap();
        assert!(weight_distance(&g, &g2).is_err());
        let g3 = random_connected_graph(3, 2, 1.0, 0).unwrap();
        assert!(weight_distance(&g, &g3).is_err());
    }

    #[test]
    fn weight_distance_matches_double_loop_oracle() {
        let mut rng = SeededRng::from_seed(64);
        for _ in 0..20 {
            let mut a = Matrix::zeros(4, 4);
            let mut b = Matrix::zeros(4, 4);
            for i in 0..4 {
                for j in 0..4 {
                    a.set(i, j, 0.1 + rng.uniform());
                    b.set(i, j, 0.1 + rng.uniform());
                }
            }
            let ga = WeightedGraph::new(a.clone(), false).unwrap();
            let gb = WeightedGraph::new(b.clone(), false).unwrap();
            let mut acc = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    let d = a.get(i, j) - b.get(i, j);
                    acc += d * d;
                }
            }
            assert!((weight_distance(&ga, &gb).unwrap() - acc.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetrize_flows_hand_example() {
        let f = Matrix::from_rows(vec![vec![0.0, 4.0], vec![2.0, 0.0]]).unwrap();
        let b = symmetrize_flows(&f).unwrap();
        assert_eq!(b.get(0, 1), 3.0);
        assert_eq!(b.get(1, 0), 3.0);
        assert_eq!(b.get(0, 0), 1.0);
        assert_eq!(b.get(1, 1), 1.0);
    }

    #[test]
    fn symmetrize_flows_fixed_points() {
        let zero = Matrix::zeros(3, 3);
        assert_eq!(symmetrize_flows(&zero).unwrap(), zero);
        let f = Matrix::from_rows(vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 0.5],
            vec![2.0, 0.5, 0.0],
        ])
        .unwrap();
        let b = symmetrize_flows(&f).unwrap();
        assert!(b.is_symmetric());
        for i in 0..3 {
            assert_eq!(b.get(i, i), 0.0);
        }
        let neg = Matrix::from_rows(vec![vec![0.0, -1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(symmetrize_flows(&neg), Err(Error::Validation(_))));
    }

    proptest! {
        #[test]
        fn weight_distance_is_a_metric(
            xs in proptest::collection::vec(0.0f64..1.0, 3),
            ys in proptest::collection::vec(0.0f64..1.0, 3),
            zs in proptest::collection::vec(0.0f64..1.0, 3),
        ) {
            let build = |v: &[f64]| {
                let mut m = Matrix::zeros(2, 2);
                m.set(0, 1, 0.2 + 0.6 * v[0]);
                m.set(1, 0, 0.2 + 0.6 * v[0]);
                m.set(0, 0, 0.2 + 0.6 * v[1]);
                m.set(1, 1, 0.2 + 0.6 * v[2]);
                WeightedGraph::new(m, true).unwrap()
            };
            let (a, b, c) = (build(&xs), build(&ys), build(&zs));
            let dab = weight_distance(&a, &b).unwrap();
            let dba = weight_distance(&b, &a).unwrap();
            let dac = weight_distance(&a, &c).unwrap();
            let dcb = weight_distance(&c, &b).unwrap();
            prop_assert!(dab >= 0.0);
            prop_assert_eq!(dab, dba);
            prop_assert!((dab == 0.0) == (a == b));
            prop_assert!(dab <= dac + dcb + 1e-12);
        }

        #[test]
        fn csv_round_trip_identity(us in proptest::collection::vec(0.0f64..1.0, 6)) {
            let mut m = Matrix::zeros(3, 3);
            let mut k = 0;
            for i in 0..3 {
                for j in i..3 {
                    let w = 0.3 - 0.09 * us[k];
                    m.set(i, j, w);
                    m.set(j, i, w);
                    k += 1;
                }
            }
            let g = WeightedGraph::new(m, true).unwrap();
            let b = WeightBounds::global(&g, 0.2, 0.3).unwrap();
            let text = serialize_graph(&g, &b, GraphFormat::EdgeListCsv).unwrap();
            let (g2, b2) = parse_graph(&text, GraphFormat::EdgeListCsv).unwrap();
            prop_assert_eq!(&g2, &g);
            prop_assert_eq!(serialize_graph(&g2, &b2, GraphFormat::EdgeListCsv).unwrap(), text);
        }
    }
}
