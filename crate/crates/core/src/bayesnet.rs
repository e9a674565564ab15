//! Discrete Bayesian networks: DAG + CPTs, exact joints, conditional slices,
//! ancestral sampling, and the benchmark networks.
//!
//! CPT rows are indexed by the mixed-radix encoding of the parent
//! configuration with parents in ascending node order and the last parent
//! varying fastest, matching the row-major layout of [`JointTable`].

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{JointTable, Stratum};
use crate::error::{Error, Result};

/// Default cap on exact-joint state space.
pub const DEFAULT_STATE_CAP: usize = 1 << 20;

/// Directed acyclic graph over nodes `0..num_nodes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    num_nodes: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Dag {
    pub fn new(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (from, to) in edges {
            if from >= num_nodes || to >= num_nodes {
                return Err(Error::Graph(format!(
                    "edge ({from}, {to}) out of range for {num_nodes} nodes"
                )));
            }
            if from == to {
                return Err(Error::Graph(format!("self-loop at node {from}")));
            }
            if !set.insert((from, to)) {
                return Err(Error::Graph(format!("duplicate edge ({from}, {to})")));
            }
        }
        let dag = Self {
            num_nodes,
            edges: set,
        };
        dag.topological_order()?;
        Ok(dag)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Parents of `node` in ascending order.
    pub fn parents(&self, node: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(_, to)| to == node)
            .map(|&(from, _)| from)
            .collect()
    }

    /// Kahn's algorithm, smallest index first; errors if a cycle exists.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let mut indegree = vec![0usize; self.num_nodes];
        for &(_, to) in &self.edges {
            indegree[to] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..self.num_nodes)
            .filter(|&v| indegree[v] == 0)
            .collect();
        let mut order = Vec::with_capacity(self.num_nodes);
        while let Some(&v) = ready.iter().next() {
            ready.remove(&v);
            order.push(v);
            for &(from, to) in &self.edges {
                if from == v {
                    indegree[to] -= 1;
                    if indegree[to] == 0 {
                        ready.insert(to);
                    }
                }
            }
        }
        if order.len() != self.num_nodes {
            return Err(Error::Graph("graph contains a cycle".into()));
        }
        Ok(order)
    }
}

/// Undirected edge set over node indices, stored with endpoints ordered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    num_nodes: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Skeleton {
    pub fn new(num_nodes: usize) -> Self {
        Self {
            num_nodes,
            edges: BTreeSet::new(),
        }
    }

    /// Complete graph on `num_nodes` nodes.
    pub fn complete(num_nodes: usize) -> Self {
        let mut sk = Self::new(num_nodes);
        for a in 0..num_nodes {
            for b in (a + 1)..num_nodes {
                sk.edges.insert((a, b));
            }
        }
        sk
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        if a == b || a >= self.num_nodes || b >= self.num_nodes {
            return Err(Error::Graph(format!("bad undirected edge ({a}, {b})")));
        }
        self.edges.insert((a.min(b), a.max(b)));
        Ok(())
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) {
        self.edges.remove(&(a.min(b), a.max(b)));
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Neighbors of `node` in ascending order.
    pub fn neighbors(&self, node: usize) -> Vec<usize> {
        (0..self.num_nodes)
            .filter(|&other| other != node && self.contains(node, other))
            .collect()
    }
}

/// Undirected projection of a DAG's edge set.
pub fn true_skeleton(dag: &Dag) -> Skeleton {
    let mut sk = Skeleton::new(dag.num_nodes());
    for (from, to) in dag.edges() {
        sk.add_edge(from, to).expect("dag edges are valid");
    }
    sk
}

/// Conditional probability table for one node.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    /// `rows[r][v] = P(node = v | parent config r)`.
    rows: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("CPT needs ≥ 1 row"));
        }
        let card = rows[0].len();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != card {
                return Err(Error::DimensionMismatch(format!(
                    "CPT row {r} has {} entries, expected {card}",
                    row.len()
                )));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 || row.iter().any(|&p| p < 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "CPT row {r} sums to {total}"
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// DAG + per-node CPTs over finite alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    names: Vec<String>,
    dag: Dag,
    cardinalities: Vec<usize>,
    cpts: Vec<Cpt>,
}

/// Serialized form: nodes, cardinalities, edges, and CPT rows (row-major by
/// mixed-radix parent configuration, parents ascending, last fastest).
#[derive(Serialize, Deserialize)]
struct NetSchema {
    nodes: Vec<String>,
    cardinalities: Vec<usize>,
    edges: Vec<(usize, usize)>,
    cpts: Vec<Vec<Vec<f64>>>,
}

impl BayesNet {
    pub fn new(
        names: Vec<String>,
        dag: Dag,
        cardinalities: Vec<usize>,
        cpts: Vec<Cpt>,
    ) -> Result<Self> {
        let n = dag.num_nodes();
        if names.len() != n || cardinalities.len() != n || cpts.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected {n} names/cards/CPTs"
            )));
        }
        for v in 0..n {
            let expected_rows: usize = dag
                .parents(v)
                .iter()
                .map(|&p| cardinalities[p])
                .product();
            if cpts[v].rows.len() != expected_rows {
                return Err(Error::DimensionMismatch(format!(
                    "node {v}: {} CPT rows, expected {expected_rows}",
                    cpts[v].rows.len()
                )));
            }
            if cpts[v].rows[0].len() != cardinalities[v] {
                return Err(Error::DimensionMismatch(format!(
                    "node {v}: CPT width {} ≠ cardinality {}",
                    cpts[v].rows[0].len(),
                    cardinalities[v]
                )));
            }
        }
        Ok(Self {
            names,
            dag,
            cardinalities,
            cpts,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.dag.num_nodes()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn cpt(&self, node: usize) -> &Cpt {
        &self.cpts[node]
    }

    /// CPT row index for `node` given a full configuration.
    fn cpt_row(&self, node: usize, config: &[usize]) -> usize {
        let mut row = 0;
        for &p in &self.dag.parents(node) {
            row = row * self.cardinalities[p] + config[p];
        }
        row
    }

    /// Exact joint as a table over all nodes in index order.
    pub fn exact_joint(&self) -> Result<JointTable> {
        self.exact_joint_capped(DEFAULT_STATE_CAP)
    }

    pub fn exact_joint_capped(&self, cap: usize) -> Result<JointTable> {
        let cells: usize = self.cardinalities.iter().product();
        if cells > cap {
            return Err(Error::StateSpaceTooLarge { cells, cap });
        }
        let n = self.num_nodes();
        let mut probs = Vec::with_capacity(cells);
        let mut config = vec![0usize; n];
        loop {
            let mut p = 1.0;
            for v in 0..n {
                p *= self.cpts[v].rows[self.cpt_row(v, &config)][config[v]];
                if p == 0.0 {
                    break;
                }
            }
            probs.push(p);
            // advance mixed-radix counter, last node fastest
            let mut i = n;
            loop {
                if i == 0 {
                    return JointTable::new(probs, self.cardinalities.clone());
                }
                i -= 1;
                config[i] += 1;
                if config[i] < self.cardinalities[i] {
                    break;
                }
                config[i] = 0;
            }
        }
    }

    /// Ancestral (forward) sampling of full configurations.
    pub fn ancestral_sample(&self, n_samples: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
        let sampler = ForwardSampler::new(self);
        let mut out = Vec::with_capacity(n_samples);
        let mut config = vec![0usize; self.num_nodes()];
        for _ in 0..n_samples {
            sampler.draw_config(rng, &mut config);
            out.push(config.clone());
        }
        out
    }

    pub fn to_json_string(&self) -> Result<String> {
        let schema = NetSchema {
            nodes: self.names.clone(),
            cardinalities: self.cardinalities.clone(),
            edges: self.dag.edges().collect(),
            cpts: self.cpts.iter().map(|c| c.rows.clone()).collect(),
        };
        Ok(serde_json::to_string_pretty(&schema)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let schema: NetSchema = serde_json::from_str(text)?;
        let dag = Dag::new(schema.nodes.len(), schema.edges)?;
        let cpts = schema
            .cpts
            .into_iter()
            .map(Cpt::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(schema.nodes, dag, schema.cardinalities, cpts)
    }
}

/// Per-stratum conditional view for a CI test on variables (x, y | z_vars):
/// weight p(z), conditional joint p(X,Y|z), product p(X|z)p(Y|z).
pub fn conditional_slice(
    joint: &JointTable,
    x: usize,
    y: usize,
    z_vars: &[usize],
) -> Result<Vec<Stratum>> {
    joint.regroup_xyz(x, y, z_vars)?.strata()
}

/// Prepared forward sampler: topological order and cumulative CPT rows.
#[derive(Debug, Clone)]
pub struct ForwardSampler {
    order: Vec<usize>,
    parents: Vec<Vec<usize>>,
    cards: Vec<usize>,
    /// Cumulative distribution per CPT row, flattened per node.
    cum_rows: Vec<Vec<f64>>,
}

impl ForwardSampler {
    pub fn new(net: &BayesNet) -> Self {
        let n = net.num_nodes();
        let order = net.dag.topological_order().expect("net DAG is acyclic");
        let parents: Vec<Vec<usize>> = (0..n).map(|v| net.dag.parents(v)).collect();
        let cum_rows: Vec<Vec<f64>> = (0..n)
            .map(|v| {
                let card = net.cardinalities[v];
                let mut flat = Vec::with_capacity(net.cpts[v].rows.len() * card);
                for row in &net.cpts[v].rows {
                    let mut acc = 0.0;
                    for &p in row {
                        acc += p;
                        flat.push(acc);
                    }
                }
                flat
            })
            .collect();
        Self {
            order,
            parents,
            cards: net.cardinalities.to_vec(),
            cum_rows,
        }
    }

    /// Draws one configuration in topological order into `config`.
    pub fn draw_config(&self, rng: &mut impl Rng, config: &mut [usize]) {
        for &v in &self.order {
            let mut row = 0usize;
            for &p in &self.parents[v] {
                row = row * self.cards[p] + config[p];
            }
            let card = self.cards[v];
            let cum = &self.cum_rows[v][row * card..(row + 1) * card];
            let u: f64 = rng.random();
            let mut val = 0usize;
            while val + 1 < card && u >= cum[val] {
                val += 1;
            }
            config[v] = val;
        }
    }

    /// Draws `n` samples projected to (x, y, z-composite), where the
    /// conditioning variables are flattened mixed-radix in ascending order.
    pub fn sample_xyz(
        &self,
        x: usize,
        y: usize,
        z_vars: &[usize],
        n: usize,
        rng: &mut impl Rng,
    ) -> Vec<(usize, usize, usize)> {
        let mut zs = z_vars.to_vec();
        zs.sort_unstable();
        let mut out = Vec::with_capacity(n);
        let mut config = vec![0usize; self.cards.len()];
        for _ in 0..n {
            self.draw_config(rng, &mut config);
            let mut z = 0usize;
            for &v in &zs {
                z = z * self.cards[v] + config[v];
            }
            out.push((config[x], config[y], z));
        }
        out
    }
}

/// The 8-node chest-clinic network with its standard CPTs.
///
/// Node order: Smoking, VisitAsia, Tuberculosis, LungCancer, Bronchitis,
/// TbOrCa, XRay, Dyspnea. TbOrCa is the deterministic OR of Tuberculosis and
/// LungCancer. CPT values follow Lauritzen & Spiegelhalter (1988).
pub fn asia_network() -> BayesNet {
    let names: Vec<String> = [
        "Smoking",
        "VisitAsia",
        "Tuberculosis",
        "LungCancer",
        "Bronchitis",
        "TbOrCa",
        "XRay",
        "Dyspnea",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    const S: usize = 0;
    const A: usize = 1;
    const T: usize = 2;
    const L: usize = 3;
    const B: usize = 4;
    const E: usize = 5;
    const X: usize = 6;
    const D: usize = 7;
    let dag = Dag::new(
        8,
        [
            (A, T),
            (S, L),
            (S, B),
            (T, E),
            (L, E),
            (E, X),
            (E, D),
            (B, D),
        ],
    )
    .expect("asia DAG is valid");
    let row = |p1: f64| vec![1.0 - p1, p1];
    let cpts = vec![
        Cpt::new(vec![row(0.5)]).unwrap(),  // P(Smoking)
        Cpt::new(vec![row(0.01)]).unwrap(), // P(VisitAsia)
        Cpt::new(vec![row(0.01), row(0.05)]).unwrap(), // P(T | A=0/1)
        Cpt::new(vec![row(0.01), row(0.10)]).unwrap(), // P(L | S=0/1)
        Cpt::new(vec![row(0.30), row(0.60)]).unwrap(), // P(B | S=0/1)
        // rows over (T, L) = 00, 01, 10, 11: deterministic OR
        Cpt::new(vec![row(0.0), row(1.0), row(1.0), row(1.0)]).unwrap(),
        Cpt::new(vec![row(0.05), row(0.98)]).unwrap(), // P(X | E=0/1)
        // rows over (B, E) = 00, 01, 10, 11
        Cpt::new(vec![row(0.1), row(0.7), row(0.8), row(0.9)]).unwrap(),
    ];
    BayesNet::new(names, dag, vec![2; 8], cpts).expect("asia net is consistent")
}

/// Random DAG: a uniformly random topological order, then each forward pair
/// included independently with `edge_prob`.
pub fn random_dag(n: usize, edge_prob: f64, rng: &mut impl Rng) -> Result<Dag> {
    if n == 0 {
        return Err(Error::InvalidParameter("need ≥ 1 node".into()));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::InvalidParameter(format!(
            "edge probability {edge_prob} outside [0, 1]"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < edge_prob {
                edges.push((order[i], order[j]));
            }
        }
    }
    Dag::new(n, edges)
}

/// Random binary CPTs for a DAG: each row's P(node = 1 | parents) is drawn
/// uniformly and clamped to [0.05, 0.95] to keep rows away from determinism.
pub fn random_cpts(dag: &Dag, rng: &mut impl Rng) -> Result<BayesNet> {
    let n = dag.num_nodes();
    let names = (0..n).map(|i| format!("X{i}")).collect();
    let mut cpts = Vec::with_capacity(n);
    for v in 0..n {
        let rows_count = 1usize << dag.parents(v).len();
        let rows: Vec<Vec<f64>> = (0..rows_count)
            .map(|_| {
                let p1 = rng.random::<f64>().clamp(0.05, 0.95);
                vec![1.0 - p1, p1]
            })
            .collect();
        cpts.push(Cpt::new(rows)?);
    }
    BayesNet::new(names, dag.clone(), vec![2; n], cpts)
}
