//! Loop erasure, Wilson's method and the WSF⁺ environment.
//!
//! Vertices are dense indices into a [`FiniteNetwork`] (or cells of a
//! [`Topology`] for the lazy sampler). Rotor configurations store, for each
//! vertex, the slot of its chosen neighbor.

mod exact;
mod lazy;

pub use exact::{
    enumerate_spanning_trees, exact_wsf_plus, wsf_plus_tree_route, wsf_plus_unicycle_route, EnumerationCap,
    ExactDistribution,
};
pub use lazy::{reveal, wsf_plus_root, RotorField};

use std::collections::HashMap;
use std::hash::Hash;

use rand::RngCore;

use crate::network::{FiniteNetwork, Network, Topology, Vertex, Window};
use crate::rng::sample_cdf;
use crate::{Error, Result};

/// Index of a neighbor slot. Degrees never exceed 255.
pub type Slot = u8;

/// One outgoing neighbor slot per vertex.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RotorConfig(pub Vec<Slot>);

impl RotorConfig {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn slot(&self, x: usize) -> usize {
        self.0[x] as usize
    }

    /// Neighbor the rotor at `x` points to (`None` for the wired exterior).
    pub fn target<T: Topology>(&self, topo: &T, x: usize) -> Option<usize> {
        topo.neighbor(x, self.slot(x))
    }

    /// Every rotor names an existing slot.
    pub fn validate<T: Topology>(&self, topo: &T) -> Result<()> {
        if self.len() != topo.num_sites() {
            return Err(Error::Precondition(format!(
                "configuration covers {} vertices, expected {}",
                self.len(),
                topo.num_sites()
            )));
        }
        for (x, &s) in self.0.iter().enumerate() {
            if s as usize >= topo.degree(x) {
                return Err(Error::Precondition(format!("rotor at {x} names missing slot {s}")));
            }
        }
        Ok(())
    }

    /// Whether following rotors from every vertex reaches `r`.
    pub fn all_reach(&self, fnet: &FiniteNetwork, r: usize) -> bool {
        let n = self.len();
        let mut state = vec![0u8; n]; // 0 unknown, 1 reaches r, 2 does not
        state[r] = 1;
        let mut path = Vec::new();
        for x in 0..n {
            let mut cur = x;
            while state[cur] == 0 && path.len() <= n {
                path.push(cur);
                state[cur] = 3;
                cur = fnet.neighbors(cur)[self.slot(cur)].0;
            }
            let verdict = if state[cur] == 1 { 1 } else { 2 };
            for &p in &path {
                state[p] = verdict;
            }
            path.clear();
            if verdict == 2 {
                return false;
            }
        }
        true
    }
}

/// Loop erasure of a finite walk: `y₀ = x₀` and `y_{i+1} = x_{j+1}` for the
/// last index `j` with `x_j = y_i`.
pub fn loop_erase<T: Eq + Hash + Clone>(walk: &[T]) -> Result<Vec<T>> {
    if walk.is_empty() {
        return Err(Error::Empty("walk"));
    }
    let mut last = HashMap::with_capacity(walk.len());
    for (i, x) in walk.iter().enumerate() {
        last.insert(x, i);
    }
    let mut out = vec![walk[0].clone()];
    let mut j = last[&walk[0]];
    while j + 1 < walk.len() {
        let y = &walk[j + 1];
        out.push(y.clone());
        j = last[y];
    }
    Ok(out)
}

/// Oriented forest over the vertices of a finite network: `out[x]` is the
/// head of the unique edge leaving `x`, if any.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrientedForest {
    root: usize,
    out: Vec<Option<usize>>,
}

impl OrientedForest {
    pub fn new(root: usize, out: Vec<Option<usize>>) -> Self {
        OrientedForest { root, out }
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn out(&self, x: usize) -> Option<usize> {
        self.out[x]
    }

    pub fn len(&self) -> usize {
        self.out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out.is_empty()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.out.iter().enumerate().filter_map(|(x, y)| y.map(|y| (x, y))).collect()
    }

    /// Vertices without an outgoing edge.
    pub fn sinks(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.out[x].is_none()).collect()
    }

    /// Checks edges against `fnet` and that following out-edges from any
    /// vertex ends at a sink without repeating a vertex. Returns the sinks.
    pub fn validate(&self, fnet: &FiniteNetwork) -> Result<Vec<usize>> {
        if self.len() != fnet.len() {
            return Err(Error::Precondition("forest and network sizes differ".into()));
        }
        if self.out[self.root].is_some() {
            return Err(Error::Precondition("the root has an outgoing edge".into()));
        }
        for (x, y) in self.edges() {
            if fnet.conductance(x, y).is_none() {
                return Err(Error::Precondition(format!("{x} -> {y} is not an edge")));
            }
        }
        // a directed cycle is the only way an out-degree-1 graph fails to be a forest
        let mut state = vec![0u8; self.len()];
        for x in 0..self.len() {
            let mut cur = x;
            let mut path = Vec::new();
            while state[cur] == 0 {
                state[cur] = 1;
                path.push(cur);
                match self.out[cur] {
                    Some(y) => cur = y,
                    None => break,
                }
            }
            if state[cur] == 1 && self.out[cur].is_some() {
                return Err(Error::Precondition(format!("directed cycle through {cur}")));
            }
            for p in path {
                state[p] = 2;
            }
        }
        Ok(self.sinks())
    }

    /// A spanning tree oriented toward the root.
    pub fn validate_tree(&self, fnet: &FiniteNetwork) -> Result<()> {
        let sinks = self.validate(fnet)?;
        if sinks != [self.root] {
            return Err(Error::Precondition(format!("vertices {sinks:?} do not reach the root")));
        }
        Ok(())
    }

    /// Adds the root edge through `slot` and returns the rotor configuration.
    pub fn with_root_slot(&self, fnet: &FiniteNetwork, slot: usize) -> Result<RotorConfig> {
        let slots = (0..self.len())
            .map(|x| match self.out[x] {
                Some(y) => fnet
                    .slot_of(x, y)
                    .map(|s| s as Slot)
                    .ok_or_else(|| Error::Precondition(format!("{x} -> {y} is not an edge"))),
                None if x == self.root => Ok(slot as Slot),
                None => Err(Error::Precondition(format!("vertex {x} has no outgoing edge"))),
            })
            .collect::<Result<_>>()?;
        Ok(RotorConfig(slots))
    }

    /// One `x -> y` line per edge, in vertex order.
    pub fn to_edge_list(&self, fnet: &FiniteNetwork) -> String {
        self.edges().into_iter().map(|(x, y)| format!("{} -> {}\n", fnet.node(x), fnet.node(y))).collect()
    }
}

/// Ξ(H): product of the conductances of the (undirected) edges.
pub fn tree_weight(edges: &[(usize, usize)], fnet: &FiniteNetwork) -> Result<f64> {
    edges.iter().try_fold(1.0, |acc, &(x, y)| {
        fnet.conductance(x, y)
            .map(|c| acc * c)
            .ok_or_else(|| Error::Precondition(format!("{x} -> {y} is not an edge of the network")))
    })
}

/// One step of the network random walk. One variate.
#[inline]
pub fn network_step<R: RngCore + ?Sized>(fnet: &FiniteNetwork, x: usize, rng: &mut R) -> usize {
    fnet.neighbors(x)[sample_cdf(fnet.mu_cdf(x), rng)].0
}

fn check_ordering(n: usize, r: usize, ordering: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    seen[r] = true;
    for &x in ordering {
        if x >= n || std::mem::replace(&mut seen[x], true) {
            return Err(Error::Precondition(format!("ordering repeats or misplaces vertex {x}")));
        }
    }
    if seen.iter().all(|&s| s) {
        Ok(())
    } else {
        Err(Error::Precondition("ordering does not cover every non-root vertex".into()))
    }
}

/// Wilson's method rooted at `r`: walks from each vertex of `ordering` (by
/// default the canonical order) run until they hit the current tree and are
/// loop-erased onto it.
pub fn wilson_rooted<R: RngCore + ?Sized>(
    fnet: &FiniteNetwork,
    r: usize,
    ordering: Option<&[usize]>,
    rng: &mut R,
) -> Result<OrientedForest> {
    let n = fnet.len();
    if r >= n {
        return Err(Error::OutOfScope(format!("vertex index {r}")));
    }
    if !fnet.is_connected() {
        return Err(Error::Disconnected);
    }
    let canonical: Vec<usize>;
    let order = match ordering {
        Some(o) => {
            check_ordering(n, r, o)?;
            o
        }
        None => {
            canonical = (0..n).filter(|&x| x != r).collect();
            &canonical
        }
    };
    let mut in_tree = vec![false; n];
    in_tree[r] = true;
    let mut out = vec![None; n];
    let mut walk = Vec::new();
    for &x in order {
        if in_tree[x] {
            continue;
        }
        walk.clear();
        walk.push(x);
        let mut cur = x;
        while !in_tree[cur] {
            cur = network_step(fnet, cur, rng);
            walk.push(cur);
        }
        let path = loop_erase(&walk)?;
        for e in path.windows(2) {
            out[e[0]] = Some(e[1]);
            in_tree[e[0]] = true;
        }
    }
    Ok(OrientedForest::new(r, out))
}

/// Output of the windowed transient Wilson method.
#[derive(Clone, Debug)]
pub struct TransientForest {
    /// The wired network the algorithm ran on; `z` is its last vertex.
    pub network: FiniteNetwork,
    /// Forest on the window with edges into `z` removed.
    pub forest: OrientedForest,
    /// Loop erasure of the root walk, from `r` to `z`.
    pub root_branch: Vec<usize>,
    /// Window vertices whose out-edge went to `z`.
    pub z_attached: Vec<usize>,
}

impl TransientForest {
    pub fn z_attached_fraction(&self) -> f64 {
        self.z_attached.len() as f64 / (self.network.len() - 1) as f64
    }
}

/// Transient Wilson method on the wired window: the walk from `r` is
/// stopped at `z`, loop-erased and reversed so that it points toward `r`;
/// later walks attach forward to the tree or to `z`.
pub fn wilson_transient_window<R: RngCore + ?Sized>(
    net: &Network,
    r: &Vertex,
    window: &Window,
    rng: &mut R,
) -> Result<TransientForest> {
    if !net.is_lattice() {
        return Err(Error::Precondition("the transient method needs an infinite lattice".into()));
    }
    if window.radius == 0 {
        return Err(Error::Precondition("a window of radius 0 has no interior".into()));
    }
    match window.lattice_distance(net, r) {
        Some(d) if d < window.radius as u64 => {}
        _ => return Err(Error::Precondition(format!("root {r} is not in the window interior"))),
    }
    let fnet = net.wire(window)?;
    let z = fnet.wired().expect("a lattice window is wired");
    let root = fnet.site_index(r)?;
    let n = fnet.len();

    let mut walk = vec![root];
    let mut cur = root;
    while cur != z {
        cur = network_step(&fnet, cur, rng);
        walk.push(cur);
    }
    let root_branch = loop_erase(&walk)?;
    let mut out = vec![None; n];
    let mut in_tree = vec![false; n];
    for e in root_branch.windows(2) {
        if e[1] != z {
            out[e[1]] = Some(e[0]);
        }
        in_tree[e[0]] = true;
    }
    in_tree[z] = true;

    let mut z_attached = Vec::new();
    for x in 0..z {
        if in_tree[x] {
            continue;
        }
        walk.clear();
        walk.push(x);
        let mut cur = x;
        while !in_tree[cur] {
            cur = network_step(&fnet, cur, rng);
            walk.push(cur);
        }
        for e in loop_erase(&walk)?.windows(2) {
            in_tree[e[0]] = true;
            if e[1] == z {
                z_attached.push(e[0]);
            } else {
                out[e[0]] = Some(e[1]);
            }
        }
    }
    z_attached.sort_unstable();
    Ok(TransientForest { forest: OrientedForest::new(root, out), root_branch, z_attached, network: fnet })
}

/// WSF⁺ rooted at `r` on a finite network: Wilson's tree plus one root edge
/// drawn from μ_r. Variates: the Wilson walks, then one for the root edge.
pub fn sample_wsf_plus<R: RngCore + ?Sized>(fnet: &FiniteNetwork, r: usize, rng: &mut R) -> Result<RotorConfig> {
    let tree = wilson_rooted(fnet, r, None, rng)?;
    let slot = sample_cdf(fnet.mu_cdf(r), rng);
    tree.with_root_slot(fnet, slot)
}
