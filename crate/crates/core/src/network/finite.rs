use std::collections::{HashMap, VecDeque};
use std::fmt;

use super::{Group, Network, Topology, Vertex, Window};
use crate::rng::cumulative;
use crate::{Error, Result};

/// Vertex of a finite network: a site of the parent graph, or the wired
/// vertex `z` standing for everything outside a window.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Site(Vertex),
    Wired,
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Site(v) => write!(f, "{v}"),
            Node::Wired => write!(f, "z"),
        }
    }
}

/// Group tables of a finite Cayley graph, indexed like the network vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct CayleyTables {
    pub group: Group,
    pub identity: usize,
    /// `shift[k][x]` is the index of `x + s_k`.
    pub shift: Vec<Vec<usize>>,
    pub neg: Vec<usize>,
}

impl CayleyTables {
    /// Index of `x + y`.
    pub fn add(&self, x: usize, y: usize) -> usize {
        let g = &self.group;
        g.index_of(&g.add(&g.element(x).unwrap(), &g.element(y).unwrap())).unwrap()
    }
}

/// A finite, simple, connected network with explicit adjacency.
#[derive(Clone, Debug)]
pub struct FiniteNetwork {
    nodes: Vec<Node>,
    adjacency: Vec<Vec<(usize, f64)>>,
    reverse: Vec<Vec<usize>>,
    cdf: Vec<Vec<f64>>,
    wired: Option<usize>,
    cayley: Option<CayleyTables>,
    index: HashMap<Node, usize>,
}

impl FiniteNetwork {
    fn assemble(
        nodes: Vec<Node>,
        adjacency: Vec<Vec<(usize, f64)>>,
        wired: Option<usize>,
        cayley: Option<CayleyTables>,
    ) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return Err(Error::Empty("network has no vertices"));
        }
        let mut reverse = Vec::with_capacity(n);
        for (x, adj) in adjacency.iter().enumerate() {
            if adj.len() > u8::MAX as usize && wired != Some(x) {
                return Err(Error::Network(format!("vertex {x} has degree {} > 255", adj.len())));
            }
            let mut rev = Vec::with_capacity(adj.len());
            for &(y, c) in adj {
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::Network(format!("edge {x}-{y} has conductance {c}")));
                }
                let back = adjacency[y]
                    .iter()
                    .position(|&(w, cb)| w == x && (cb - c).abs() <= crate::EPS)
                    .ok_or_else(|| Error::Network(format!("edge {x}-{y} is not symmetric")))?;
                rev.push(back);
            }
            reverse.push(rev);
        }
        let cdf = adjacency
            .iter()
            .map(|adj| {
                let total: f64 = adj.iter().map(|e| e.1).sum();
                cumulative(&adj.iter().map(|e| e.1 / total).collect::<Vec<_>>())
            })
            .collect();
        let index = nodes.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        let net = FiniteNetwork { nodes, adjacency, reverse, cdf, wired, cayley, index };
        if !net.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(net)
    }

    /// Simple network on vertices `0..n` from an undirected edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b, c) in edges {
            if a >= n || b >= n {
                return Err(Error::Network(format!("edge {a}-{b} references a missing vertex")));
            }
            if a == b {
                return Err(Error::Network(format!("loop at vertex {a}")));
            }
            if adjacency[a].iter().any(|&(y, _)| y == b) {
                return Err(Error::Network(format!("edge {a}-{b} listed twice")));
            }
            adjacency[a].push((b, c));
            adjacency[b].push((a, c));
        }
        let nodes = (0..n).map(|i| Node::Site(Vertex(vec![i as i64]))).collect();
        Self::assemble(nodes, adjacency, None, None)
    }

    /// Complete graph on `n` vertices with unit conductances.
    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push((a, b, 1.0));
            }
        }
        Self::from_edges(n, &edges)
    }

    pub(super) fn from_cayley(net: &Network) -> Result<Self> {
        let group = net.group();
        let order = group.order().ok_or_else(|| Error::Network("lattices are infinite; use a window".into()))?;
        if net.is_multigraph() {
            return Err(Error::Network("finite networks must be simple graphs".into()));
        }
        let elements: Vec<Vertex> = (0..order).map(|i| group.element(i).unwrap()).collect();
        let idx = |v: &Vertex| group.index_of(v).unwrap();
        let shift: Vec<Vec<usize>> =
            net.generators().iter().map(|g| elements.iter().map(|x| idx(&group.add(x, g))).collect()).collect();
        let neg = elements.iter().map(|x| idx(&group.neg(x))).collect();
        let adjacency =
            (0..order).map(|x| shift.iter().zip(net.conductances()).map(|(s, &c)| (s[x], c)).collect()).collect();
        let identity = idx(&group.identity());
        let nodes = elements.into_iter().map(Node::Site).collect();
        Self::assemble(nodes, adjacency, None, Some(CayleyTables { group: group.clone(), identity, shift, neg }))
    }

    pub(super) fn wire(net: &Network, window: &Window) -> Result<Self> {
        if net.is_multigraph() {
            return Err(Error::Network("cannot wire a multigraph".into()));
        }
        let inside = window.vertices(net)?;
        if inside.is_empty() {
            return Err(Error::Empty("window"));
        }
        if net.group().order() == Some(inside.len()) {
            return Self::from_cayley(net);
        }
        let index: HashMap<&Vertex, usize> = inside.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let z = inside.len();
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); z + 1];
        for (i, x) in inside.iter().enumerate() {
            let mut to_z = 0.0;
            for (y, c) in net.neighbors(x)? {
                match index.get(&y) {
                    Some(&j) => adjacency[i].push((j, c)),
                    None => to_z += c,
                }
            }
            if to_z > 0.0 {
                adjacency[i].push((z, to_z));
                adjacency[z].push((i, to_z));
            }
        }
        let mut nodes: Vec<Node> = inside.into_iter().map(Node::Site).collect();
        nodes.push(Node::Wired);
        Self::assemble(nodes, adjacency, Some(z), None)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn index_of(&self, node: &Node) -> Option<usize> {
        self.index.get(node).copied()
    }

    pub fn site_index(&self, v: &Vertex) -> Result<usize> {
        self.index_of(&Node::Site(v.clone())).ok_or_else(|| Error::OutOfScope(v.to_string()))
    }

    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adjacency[x]
    }

    pub fn conductance(&self, x: usize, y: usize) -> Option<f64> {
        self.adjacency.get(x)?.iter().find(|&&(w, _)| w == y).map(|&(_, c)| c)
    }

    /// Conductance-proportional distribution over the neighbor slots of `x`.
    pub fn mu(&self, x: usize) -> Vec<f64> {
        let total: f64 = self.adjacency[x].iter().map(|e| e.1).sum();
        self.adjacency[x].iter().map(|e| e.1 / total).collect()
    }

    /// Undirected edges `(x, y, c)` with `x < y`, in adjacency order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (x, adj) in self.adjacency.iter().enumerate() {
            for &(y, c) in adj {
                if x < y {
                    out.push((x, y, c));
                }
            }
        }
        out
    }

    pub fn wired(&self) -> Option<usize> {
        self.wired
    }

    pub fn cayley(&self) -> Option<&CayleyTables> {
        self.cayley.as_ref()
    }

    /// Slot of `y` among the neighbors of `x`.
    pub fn slot_of(&self, x: usize, y: usize) -> Option<usize> {
        self.adjacency[x].iter().position(|&(w, _)| w == y)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &self.adjacency[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        count == n
    }
}

impl Topology for FiniteNetwork {
    fn num_sites(&self) -> usize {
        self.len()
    }

    fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    #[inline]
    fn neighbor(&self, v: usize, slot: usize) -> Option<usize> {
        Some(self.adjacency[v][slot].0)
    }

    fn reverse_slot(&self, v: usize, slot: usize) -> usize {
        self.reverse[v][slot]
    }

    fn mu_cdf(&self, v: usize) -> &[f64] {
        &self.cdf[v]
    }

    fn is_site(&self, _v: usize) -> bool {
        true
    }

    fn is_interior(&self, _v: usize) -> bool {
        true
    }

    fn has_exterior(&self) -> bool {
        false
    }
}
