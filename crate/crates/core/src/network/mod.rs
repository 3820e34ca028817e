//! Weighted Cayley graphs, windows and wired finite networks.
//!
//! All groups handled here are abelian (ℤᵈ, the triangular lattice viewed as
//! ℤ² with six generators, and products of cyclic groups), so the group
//! operation is coordinate-wise addition, reduced modulo the factor orders in
//! the finite case.

mod bits;
mod finite;
mod grid;
mod hidden;

pub use bits::Bitset;
pub use finite::{CayleyTables, FiniteNetwork, Node};
pub use grid::WindowGrid;
pub use hidden::{expand_hidden, Expansion};

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, EPS};

/// Group element given by integer coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex(pub Vec<i64>);

impl Vertex {
    pub fn zero(dim: usize) -> Self {
        Vertex(vec![0; dim])
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<i64>> for Vertex {
    fn from(v: Vec<i64>) -> Self {
        Vertex(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Group {
    /// ℤᵈ embedded as itself.
    Integer { dim: usize },
    /// The triangular lattice; `(a, b)` stands for `a·(1,0) + b·(1/2, √3/2)`.
    Triangular,
    /// ℤ_{n₁} × … × ℤ_{n_k}.
    Cyclic { moduli: Vec<i64> },
}

impl Group {
    pub fn dim(&self) -> usize {
        match self {
            Group::Integer { dim } => *dim,
            Group::Triangular => 2,
            Group::Cyclic { moduli } => moduli.len(),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Group::Cyclic { .. })
    }

    pub fn order(&self) -> Option<usize> {
        match self {
            Group::Cyclic { moduli } => Some(moduli.iter().product::<i64>() as usize),
            _ => None,
        }
    }

    pub fn identity(&self) -> Vertex {
        Vertex::zero(self.dim())
    }

    fn reduce(&self, mut v: Vec<i64>) -> Vec<i64> {
        if let Group::Cyclic { moduli } = self {
            for (c, m) in v.iter_mut().zip(moduli) {
                *c = c.rem_euclid(*m);
            }
        }
        v
    }

    pub fn add(&self, x: &Vertex, y: &Vertex) -> Vertex {
        let v = x.0.iter().zip(&y.0).map(|(a, b)| a + b).collect();
        Vertex(self.reduce(v))
    }

    pub fn neg(&self, x: &Vertex) -> Vertex {
        Vertex(self.reduce(x.0.iter().map(|a| -a).collect()))
    }

    /// Canonical representative, or `None` if the coordinate count is wrong
    /// or a finite coordinate is out of range.
    pub fn contains(&self, x: &Vertex) -> bool {
        if x.0.len() != self.dim() {
            return false;
        }
        match self {
            Group::Cyclic { moduli } => x.0.iter().zip(moduli).all(|(c, m)| (0..*m).contains(c)),
            _ => true,
        }
    }

    /// Embedding into ℝᵈ for lattice groups.
    pub fn embed(&self, x: &Vertex) -> Option<Vec<f64>> {
        match self {
            Group::Integer { .. } => Some(x.0.iter().map(|&c| c as f64).collect()),
            Group::Triangular => {
                let (a, b) = (x.0[0] as f64, x.0[1] as f64);
                Some(vec![a + 0.5 * b, b * 3f64.sqrt() / 2.0])
            }
            Group::Cyclic { .. } => None,
        }
    }

    /// Index of a finite group element in mixed radix (first coordinate
    /// most significant).
    pub fn index_of(&self, x: &Vertex) -> Option<usize> {
        match self {
            Group::Cyclic { moduli } if self.contains(x) => {
                let mut idx = 0usize;
                for (c, m) in x.0.iter().zip(moduli) {
                    idx = idx * (*m as usize) + *c as usize;
                }
                Some(idx)
            }
            _ => None,
        }
    }

    pub fn element(&self, mut idx: usize) -> Option<Vertex> {
        let Group::Cyclic { moduli } = self else {
            return None;
        };
        let mut coords = vec![0i64; moduli.len()];
        for (c, m) in coords.iter_mut().zip(moduli).rev() {
            *c = (idx % *m as usize) as i64;
            idx /= *m as usize;
        }
        Some(Vertex(coords))
    }
}

/// A weighted Cayley graph, possibly with parallel edges.
///
/// The neighbor slots of a vertex are ordered by generator; in multigraph
/// mode each generator carries `multiplicity` parallel labels and slot
/// `k * multiplicity + s` is the edge through generator `k` with label `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    group: Group,
    generators: Vec<Vertex>,
    conductances: Vec<f64>,
    inverse: Vec<usize>,
    multiplicity: usize,
    multigraph: bool,
}

impl Network {
    fn build(group: Group, generators: Vec<Vertex>, conductances: Vec<f64>, multigraph: bool) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::Network("generator set is empty".into()));
        }
        if generators.len() != conductances.len() {
            return Err(Error::Network(format!(
                "{} generators but {} conductances",
                generators.len(),
                conductances.len()
            )));
        }
        let generators: Vec<Vertex> = generators
            .into_iter()
            .map(|g| {
                if g.0.len() != group.dim() {
                    Err(Error::Network(format!("generator {g} has wrong dimension")))
                } else {
                    Ok(Vertex(group.reduce(g.0)))
                }
            })
            .collect::<Result<_>>()?;
        let id = group.identity();
        for (g, c) in generators.iter().zip(&conductances) {
            if *g == id {
                return Err(Error::Network("identity is not allowed as a generator".into()));
            }
            if !(c.is_finite() && *c > 0.0) {
                return Err(Error::Network(format!("conductance {c} of generator {g} is not positive")));
            }
        }
        let distinct: BTreeSet<&Vertex> = generators.iter().collect();
        if distinct.len() != generators.len() && !multigraph {
            return Err(Error::Network("generator list repeats an element, which would double an edge".into()));
        }
        // pair each generator with an inverse; repeated elements pair off
        // among themselves so the pairing is an involution
        let n = generators.len();
        let mut inverse = vec![usize::MAX; n];
        for k in 0..n {
            if inverse[k] != usize::MAX {
                continue;
            }
            let target = group.neg(&generators[k]);
            let partner = (0..n)
                .find(|&j| j != k && inverse[j] == usize::MAX && generators[j] == target)
                .or_else(|| (generators[k] == target).then_some(k))
                .ok_or_else(|| {
                    Error::Network(format!("generator set is not symmetric: {} has no inverse", generators[k]))
                })?;
            inverse[k] = partner;
            inverse[partner] = k;
        }
        for k in 0..n {
            let j = inverse[k];
            if (conductances[k] - conductances[j]).abs() > EPS {
                return Err(Error::Network(format!(
                    "conductance of {} differs from that of its inverse",
                    generators[k]
                )));
            }
        }
        let net = Network { group, generators, conductances, inverse, multiplicity: 1, multigraph };
        if net.group.is_finite() && !net.generates() {
            return Err(Error::Network("generators do not generate the group".into()));
        }
        Ok(net)
    }

    fn generates(&self) -> bool {
        let order = self.group.order().unwrap_or(0);
        let mut seen = vec![false; order];
        let id = self.group.identity();
        let mut queue = VecDeque::from([id.clone()]);
        seen[self.group.index_of(&id).unwrap()] = true;
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for g in &self.generators {
                let y = self.group.add(&x, g);
                let i = self.group.index_of(&y).unwrap();
                if !seen[i] {
                    seen[i] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        count == order
    }

    /// ℤᵈ with generators `+e₁, −e₁, …, +e_d, −e_d` in that order and the
    /// given conductance for each.
    pub fn make_lattice(dim: usize, conductances: &[f64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Network("dimension must be at least 1".into()));
        }
        if conductances.len() != 2 * dim {
            return Err(Error::Network(format!(
                "expected {} conductances for dimension {dim}, got {}",
                2 * dim,
                conductances.len()
            )));
        }
        let mut generators = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            for sign in [1, -1] {
                let mut e = vec![0; dim];
                e[i] = sign;
                generators.push(Vertex(e));
            }
        }
        Self::build(Group::Integer { dim }, generators, conductances.to_vec(), false)
    }

    /// ℤᵈ with unit conductances.
    pub fn unit_lattice(dim: usize) -> Result<Self> {
        Self::make_lattice(dim, &vec![1.0; 2 * dim])
    }

    /// Triangular lattice with unit conductances. Generator `k` sits at
    /// angle `k·60°`.
    pub fn make_triangular() -> Self {
        let generators =
            [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)].into_iter().map(|(a, b)| Vertex(vec![a, b])).collect();
        Self::build(Group::Triangular, generators, vec![1.0; 6], false).expect("triangular lattice is a valid network")
    }

    /// Finite Cayley graph on ℤ_{n₁} × … × ℤ_{n_k}.
    ///
    /// An involutive generator listed once gives one edge per pair. Listing an
    /// element twice (for instance `2` and `−2` in ℤ₄) doubles an edge and is
    /// accepted only when `multigraph` is set.
    pub fn make_finite_cayley(
        moduli: &[i64],
        generators: Vec<Vertex>,
        conductances: Vec<f64>,
        multigraph: bool,
    ) -> Result<Self> {
        if moduli.is_empty() || moduli.iter().any(|&m| m < 2) {
            return Err(Error::Network("cyclic factors must have order at least 2".into()));
        }
        if moduli.len() == 1 && moduli[0] < 3 {
            return Err(Error::Network("cycles need at least 3 vertices".into()));
        }
        let order: i64 = moduli.iter().product();
        if order > 1 << 24 {
            return Err(Error::Network(format!("group of order {order} is too large")));
        }
        Self::build(Group::Cyclic { moduli: moduli.to_vec() }, generators, conductances, multigraph)
    }

    /// The n-cycle ℤ_n with generators `+1, −1`.
    pub fn cycle(n: i64) -> Result<Self> {
        Self::make_finite_cayley(&[n], vec![Vertex(vec![1]), Vertex(vec![-1])], vec![1.0; 2], false)
    }

    /// The a×b torus with generators `(±1,0), (0,±1)` in lattice order.
    pub fn torus(a: i64, b: i64) -> Result<Self> {
        let gens = [(1, 0), (-1, 0), (0, 1), (0, -1)].into_iter().map(|(x, y)| Vertex(vec![x, y])).collect();
        Self::make_finite_cayley(&[a, b], gens, vec![1.0; 4], false)
    }

    /// K₄ as the Cayley graph of ℤ₄ with generators `1, −1, 2`.
    pub fn complete4() -> Self {
        Self::make_finite_cayley(&[4], vec![Vertex(vec![1]), Vertex(vec![-1]), Vertex(vec![2])], vec![1.0; 3], false)
            .expect("K4 is a valid Cayley graph")
    }

    pub(crate) fn with_multiplicity(&self, multiplicity: usize) -> Self {
        let mut net = self.clone();
        net.multiplicity = multiplicity;
        net.multigraph = true;
        net
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.group.dim()
    }

    pub fn generators(&self) -> &[Vertex] {
        &self.generators
    }

    pub fn conductances(&self) -> &[f64] {
        &self.conductances
    }

    /// Index of the inverse of generator `k`.
    pub fn inverse_generator(&self, k: usize) -> usize {
        self.inverse[k]
    }

    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    pub fn is_multigraph(&self) -> bool {
        self.multigraph
    }

    /// Number of neighbor slots at every vertex.
    pub fn degree(&self) -> usize {
        self.generators.len() * self.multiplicity
    }

    /// Generator used by a slot.
    pub fn slot_generator(&self, slot: usize) -> usize {
        slot / self.multiplicity
    }

    /// Hidden label carried by a slot (always 0 for simple graphs).
    pub fn slot_label(&self, slot: usize) -> usize {
        slot % self.multiplicity
    }

    pub fn is_lattice(&self) -> bool {
        !self.group.is_finite()
    }

    pub fn identity(&self) -> Vertex {
        self.group.identity()
    }

    fn check(&self, x: &Vertex) -> Result<()> {
        if self.group.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfScope(x.to_string()))
        }
    }

    /// Neighbors of `x` in slot order with their conductances.
    pub fn neighbors(&self, x: &Vertex) -> Result<Vec<(Vertex, f64)>> {
        self.check(x)?;
        Ok((0..self.degree())
            .map(|slot| {
                let k = self.slot_generator(slot);
                (self.group.add(x, &self.generators[k]), self.conductances[k])
            })
            .collect())
    }

    /// Conductance-proportional distribution over the slots of `x`.
    pub fn mu(&self, x: &Vertex) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(self.mu_id())
    }

    /// μ at the identity (equal to μ at every vertex by translation).
    pub fn mu_id(&self) -> Vec<f64> {
        let total: f64 = self.conductances.iter().sum::<f64>() * self.multiplicity as f64;
        (0..self.degree()).map(|slot| self.conductances[self.slot_generator(slot)] / total).collect()
    }

    /// Left multiplication `τ_g(x) = g·x`.
    pub fn translate(&self, g: &Vertex, x: &Vertex) -> Vertex {
        self.group.add(g, x)
    }

    pub fn embed(&self, x: &Vertex) -> Option<Vec<f64>> {
        self.group.embed(x)
    }

    /// Embedded vector of each slot's generator.
    pub fn slot_vectors(&self) -> Result<Vec<Vec<f64>>> {
        (0..self.degree())
            .map(|slot| {
                let g = &self.generators[self.slot_generator(slot)];
                self.embed(g).ok_or_else(|| Error::NotEmbeddable("finite cyclic groups carry no embedding".into()))
            })
            .collect()
    }

    /// The finite network underlying a finite Cayley graph.
    pub fn finite(&self) -> Result<FiniteNetwork> {
        FiniteNetwork::from_cayley(self)
    }

    /// Wired network of a window: vertices outside the window collapse to a
    /// single vertex `z`. A window that covers a finite group is returned
    /// unchanged.
    pub fn wire(&self, window: &Window) -> Result<FiniteNetwork> {
        FiniteNetwork::wire(self, window)
    }
}

/// A finite window around `center`.
///
/// For ℤᵈ the window is the ℓ∞ box of the given radius; for the triangular
/// lattice and for finite groups it is the graph-distance ball. The outer
/// `margin` layers are reserved for abort detection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: Vertex,
    pub radius: u32,
    pub margin: u32,
}

impl Window {
    pub fn new(center: Vertex, radius: u32, margin: u32) -> Result<Self> {
        if margin > radius {
            return Err(Error::Precondition(format!("window margin {margin} exceeds radius {radius}")));
        }
        Ok(Window { center, radius, margin })
    }

    pub fn centered(dim: usize, radius: u32, margin: u32) -> Result<Self> {
        Self::new(Vertex::zero(dim), radius, margin)
    }

    /// Distance of `x` from the center in the window's metric; `None` for
    /// finite groups, whose windows are graph-distance balls computed by
    /// breadth-first search.
    pub fn lattice_distance(&self, net: &Network, x: &Vertex) -> Option<u64> {
        let d: Vec<i64> = x.0.iter().zip(&self.center.0).map(|(a, b)| a - b).collect();
        match net.group() {
            Group::Integer { .. } => Some(d.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)),
            Group::Triangular => Some(hex_norm(d[0], d[1])),
            Group::Cyclic { .. } => None,
        }
    }

    /// Vertices of the window in canonical order.
    pub fn vertices(&self, net: &Network) -> Result<Vec<Vertex>> {
        if !net.group().contains(&self.center) {
            return Err(Error::OutOfScope(self.center.to_string()));
        }
        let r = self.radius as i64;
        match net.group() {
            Group::Cyclic { .. } => {
                let mut seen = BTreeSet::from([self.center.clone()]);
                let mut frontier = vec![self.center.clone()];
                for _ in 0..self.radius {
                    let mut next = Vec::new();
                    for x in &frontier {
                        for (y, _) in net.neighbors(x)? {
                            if seen.insert(y.clone()) {
                                next.push(y);
                            }
                        }
                    }
                    frontier = next;
                }
                Ok(seen.into_iter().collect())
            }
            _ => {
                let dim = net.dim();
                let mut out = Vec::new();
                let mut offs = vec![-r; dim];
                loop {
                    let v = Vertex(offs.iter().zip(&self.center.0).map(|(o, c)| o + c).collect());
                    if self.lattice_distance(net, &v).unwrap() <= self.radius as u64 {
                        out.push(v);
                    }
                    // odometer increment, last coordinate fastest
                    let mut i = dim;
                    loop {
                        if i == 0 {
                            return Ok(out);
                        }
                        i -= 1;
                        if offs[i] < r {
                            offs[i] += 1;
                            break;
                        }
                        offs[i] = -r;
                    }
                }
            }
        }
    }
}

/// Graph distance on the triangular lattice in `(a, b)` coordinates.
pub fn hex_norm(a: i64, b: i64) -> u64 {
    a.unsigned_abs().max(b.unsigned_abs()).max((a + b).unsigned_abs())
}

/// Anything the walk and forest engines can run on: sites indexed densely,
/// with a fixed slot order at each site. A neighbor of `None` is the wired
/// exterior.
pub trait Topology: Sync {
    fn num_sites(&self) -> usize;
    fn degree(&self, v: usize) -> usize;
    fn neighbor(&self, v: usize, slot: usize) -> Option<usize>;
    /// Slot at `neighbor(v, slot)` that points back to `v`.
    fn reverse_slot(&self, v: usize, slot: usize) -> usize;
    /// Cumulative conductance-proportional table over the slots of `v`.
    fn mu_cdf(&self, v: usize) -> &[f64];
    /// Whether `v` is a site of the represented vertex set.
    fn is_site(&self, v: usize) -> bool;
    /// Whether a walker may stand on `v` without being flagged truncated.
    fn is_interior(&self, v: usize) -> bool;
    /// Whether some neighbor is the wired exterior.
    fn has_exterior(&self) -> bool;
}
