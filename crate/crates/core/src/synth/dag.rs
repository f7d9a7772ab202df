use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// JSON form of a [`CausalDag`]. `cpts[v][row][k]` is the probability of
/// category `k` of node `v` given the parent configuration `row`, where
/// rows enumerate parent values in mixed radix over the parents in
/// ascending node order, first parent most significant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DagSpec {
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String)>,
    pub cards: Vec<u32>,
    pub cpts: Vec<Vec<Vec<f64>>>,
}

/// A DAG over categorical nodes with a conditional probability table per
/// node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DagSpec", into = "DagSpec")]
pub struct CausalDag {
    nodes: Vec<String>,
    cards: Vec<u32>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    cpts: Vec<Vec<Vec<f64>>>,
    order: Vec<usize>,
}

impl CausalDag {
    /// Validates acyclicity, table shapes and that every table row sums
    /// to 1 within 1e-9.
    pub fn new(nodes: Vec<String>, cards: Vec<u32>, edges: &[(usize, usize)], cpts: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let n = nodes.len();
        if cards.len() != n || cpts.len() != n {
            return Err(Error::InvalidDag("nodes, cardinalities and tables differ in length".into()));
        }
        let mut sorted = nodes.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidDag("duplicate node name".into()));
        }
        if let Some(i) = cards.iter().position(|&c| c == 0) {
            return Err(Error::InvalidDag(format!("node `{}` has no categories", nodes[i])));
        }
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidDag(format!("bad edge ({a}, {b})")));
            }
            if !parents[b].contains(&a) {
                parents[b].push(a);
                children[a].push(b);
            }
        }
        parents.iter_mut().for_each(|p| p.sort_unstable());
        children.iter_mut().for_each(|c| c.sort_unstable());
        let order = topological_order(&parents, &children).ok_or_else(|| Error::InvalidDag("graph has a cycle".into()))?;
        for v in 0..n {
            let rows: usize = parents[v].iter().map(|&p| cards[p] as usize).product();
            if cpts[v].len() != rows {
                return Err(Error::InvalidDag(format!("table of `{}` has {} rows, expected {rows}", nodes[v], cpts[v].len())));
            }
            for row in &cpts[v] {
                if row.len() != cards[v] as usize {
                    return Err(Error::InvalidDag(format!("table row of `{}` has wrong arity", nodes[v])));
                }
                if row.iter().any(|&p| !(p >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidDag(format!("table row of `{}` is not a distribution", nodes[v])));
                }
            }
        }
        Ok(Self { nodes, cards, parents, children, cpts, order })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node(&self, name: &str) -> Result<usize> {
        self.nodes.iter().position(|n| n == name).ok_or_else(|| Error::UnknownNode(name.to_owned()))
    }

    pub fn cards(&self) -> &[u32] {
        &self.cards
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn cpt(&self, v: usize) -> &[Vec<f64>] {
        &self.cpts[v]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = (0..self.len()).flat_map(|b| self.parents[b].iter().map(move |&a| (a, b))).collect();
        e.sort_unstable();
        e
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.parents[a].contains(&b) || self.parents[b].contains(&a)
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    /// Whether `x` and `y` are d-separated by `z`.
    pub fn d_separated(&self, x: usize, y: usize, z: &[usize]) -> Result<bool> {
        let n = self.len();
        if x >= n || y >= n || z.iter().any(|&v| v >= n) {
            return Err(Error::UnknownNode(format!("index out of range for {n} nodes")));
        }
        if x == y || z.contains(&x) || z.contains(&y) {
            return Err(Error::Overlap("x, y and z must be disjoint".into()));
        }
        let mut observed = vec![false; n];
        z.iter().for_each(|&v| observed[v] = true);
        // Nodes with an observed descendant (observed nodes included).
        let mut has_observed_desc = vec![false; n];
        let mut stack: Vec<usize> = z.to_vec();
        while let Some(v) = stack.pop() {
            if !has_observed_desc[v] {
                has_observed_desc[v] = true;
                stack.extend(&self.parents[v]);
            }
        }
        // (node, arrived from a child) pairs.
        let mut visited = vec![[false; 2]; n];
        let mut queue = VecDeque::from([(x, true)]);
        while let Some((v, up)) = queue.pop_front() {
            if visited[v][up as usize] {
                continue;
            }
            visited[v][up as usize] = true;
            if v == y {
                return Ok(false);
            }
            if up {
                if !observed[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, true)));
                    queue.extend(self.children[v].iter().map(|&c| (c, false)));
                }
            } else {
                if !observed[v] {
                    queue.extend(self.children[v].iter().map(|&c| (c, false)));
                }
                if has_observed_desc[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, true)));
                }
            }
        }
        Ok(true)
    }

    fn row_index(&self, v: usize, values: &[u32]) -> usize {
        self.parents[v].iter().fold(0usize, |acc, &p| acc * self.cards[p] as usize + values[p] as usize)
    }
}

fn topological_order(parents: &[Vec<usize>], children: &[Vec<usize>]) -> Option<Vec<usize>> {
    let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: VecDeque<usize> = (0..parents.len()).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(parents.len());
    while let Some(v) = ready.pop_front() {
        order.push(v);
        for &c in &children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.push_back(c);
            }
        }
    }
    (order.len() == parents.len()).then_some(order)
}

impl TryFrom<DagSpec> for CausalDag {
    type Error = Error;

    fn try_from(spec: DagSpec) -> Result<Self> {
        let index = |name: &str| spec.nodes.iter().position(|n| n == name).ok_or_else(|| Error::UnknownNode(name.to_owned()));
        let edges = spec.edges.iter().map(|(a, b)| Ok((index(a)?, index(b)?))).collect::<Result<Vec<_>>>()?;
        CausalDag::new(spec.nodes, spec.cards, &edges, spec.cpts)
    }
}

impl From<CausalDag> for DagSpec {
    fn from(dag: CausalDag) -> Self {
        let edges = dag.edges().into_iter().map(|(a, b)| (dag.nodes[a].clone(), dag.nodes[b].clone())).collect();
        DagSpec { nodes: dag.nodes, edges, cards: dag.cards, cpts: dag.cpts }
    }
}

/// Parameters of [`random_dag`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomDagConfig {
    pub nodes: usize,
    /// Probability of each undirected edge of the skeleton.
    pub edge_prob: f64,
    pub min_categories: u32,
    pub max_categories: u32,
    /// Symmetric Dirichlet concentration of every table row.
    pub concentration: f64,
}

impl Default for RandomDagConfig {
    fn default() -> Self {
        Self { nodes: 8, edge_prob: 0.3, min_categories: 2, max_categories: 20, concentration: 1.0 }
    }
}

impl RandomDagConfig {
    /// Edge probability giving `edges` expected edges in total.
    pub fn total_edges(nodes: usize, edges: f64) -> f64 {
        let pairs = (nodes * nodes.saturating_sub(1)) as f64 / 2.0;
        if pairs == 0.0 {
            0.0
        } else {
            (edges / pairs).clamp(0.0, 1.0)
        }
    }

    /// Edge probability giving each node `degree` expected children on
    /// average.
    pub fn mean_out_degree(nodes: usize, degree: f64) -> f64 {
        Self::total_edges(nodes, degree * nodes as f64)
    }

    /// Concentration for near-deterministic tables.
    pub const STRONG_EDGES: f64 = 0.25;

    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::InvalidConfig("a DAG needs at least one node".into()));
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(Error::InvalidConfig(format!("edge probability {} outside [0, 1]", self.edge_prob)));
        }
        if self.min_categories < 1 || self.max_categories < self.min_categories {
            return Err(Error::InvalidConfig("category range is empty".into()));
        }
        if !(self.concentration > 0.0) {
            return Err(Error::InvalidConfig("concentration must be positive".into()));
        }
        Ok(())
    }
}

/// Largest number of parent configurations a generated node may have.
pub const MAX_CPT_ROWS: usize = 1 << 20;

/// Erdős–Rényi skeleton oriented along a random node order, with category
/// counts uniform in the configured range and Dirichlet table rows.
pub fn random_dag<R: Rng + ?Sized>(cfg: &RandomDagConfig, rng: &mut R) -> Result<CausalDag> {
    cfg.validate()?;
    let n = cfg.nodes;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < cfg.edge_prob {
                edges.push((order[i], order[j]));
            }
        }
    }
    let cards: Vec<u32> = (0..n).map(|_| rng.random_range(cfg.min_categories..=cfg.max_categories)).collect();
    let gamma = Gamma::new(cfg.concentration, 1.0).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut parents = vec![Vec::new(); n];
    for &(a, b) in &edges {
        parents[b].push(a);
    }
    let mut cpts = Vec::with_capacity(n);
    for v in 0..n {
        let rows = parents[v]
            .iter()
            .try_fold(1usize, |acc, &p| acc.checked_mul(cards[p] as usize).filter(|&r| r <= MAX_CPT_ROWS))
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "node V{v} has {} parents; its table exceeds {MAX_CPT_ROWS} parent configurations",
                    parents[v].len()
                ))
            })?;
        cpts.push((0..rows).map(|_| dirichlet_row(&gamma, cards[v] as usize, rng)).collect());
    }
    let nodes = (0..n).map(|i| format!("V{i}")).collect();
    CausalDag::new(nodes, cards, &edges, cpts)
}

fn dirichlet_row<R: Rng + ?Sized>(gamma: &Gamma<f64>, k: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && total.is_finite() {
            let mut row: Vec<f64> = draws.iter().map(|d| d / total).collect();
            // Put the rounding residue on the largest entry so the row sums to 1.
            let residue = 1.0 - row.iter().sum::<f64>();
            let big = (0..k).max_by(|&a, &b| row[a].total_cmp(&row[b])).expect("k >= 1");
            row[big] += residue;
            return row;
        }
    }
}

/// Ancestral sampling of `n_rows` rows. Column values are the category
/// indices as strings.
pub fn sample_dataset<R: Rng + ?Sized>(dag: &CausalDag, n_rows: usize, rng: &mut R) -> Result<Dataset> {
    if n_rows == 0 {
        return Err(Error::InvalidConfig("at least one row is required".into()));
    }
    let n = dag.len();
    let cumulative: Vec<Vec<Vec<f64>>> = dag
        .cpts
        .iter()
        .map(|rows| {
            rows.iter()
                .map(|row| {
                    row.iter()
                        .scan(0.0, |acc, &p| {
                            *acc += p;
                            Some(*acc)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut columns = vec![Vec::with_capacity(n_rows); n];
    let mut values = vec![0u32; n];
    for _ in 0..n_rows {
        for &v in &dag.order {
            let cum = &cumulative[v][dag.row_index(v, &values)];
            let u: f64 = rng.random();
            // A zero-probability category never satisfies `u < c` first;
            // the fallback covers u landing in the rounding gap below 1.
            let k = cum
                .iter()
                .position(|&c| u < c)
                .unwrap_or_else(|| dag.cpts[v][dag.row_index(v, &values)].iter().rposition(|&p| p > 0.0).unwrap_or(0));
            values[v] = k as u32;
            columns[v].push(k as u32);
        }
    }
    Dataset::from_codes(&dag.nodes, columns, &dag.cards)
}

/// Named-node d-separation query.
pub fn dsep_oracle(dag: &CausalDag, x: &str, y: &str, z: &[&str]) -> Result<bool> {
    let zs = z.iter().map(|v| dag.node(v)).collect::<Result<Vec<_>>>()?;
    dag.d_separated(dag.node(x)?, dag.node(y)?, &zs)
}
