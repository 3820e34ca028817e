//! Walk mechanisms: per-vertex Markov kernels on neighbor slots.
//!
//! Kernels are dense row-stochastic matrices in the network's slot order.
//! A transitive mechanism stores the kernel at the identity; the kernel at
//! `x` is obtained by transport, `p_x(y, y') = p_id(x⁻¹y, x⁻¹y')`, which in
//! slot coordinates is the same matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::RngCore;
use serde::{Serialize, Serializer};

use crate::network::{FiniteNetwork, Group, Network, Vertex};
use crate::rng::{cumulative, sample_cdf};
use crate::{Error, Result, EPS};

/// Default absolute tolerance of the structural checks.
pub const CHECK_TOL: f64 = 1e-9;

/// Dense row-stochastic matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    size: usize,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl Kernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::Kernel("kernel has no rows".into()));
        }
        let mut probs = Vec::with_capacity(size * size);
        let mut cdf = Vec::with_capacity(size * size);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::Kernel(format!("row {i} has {} entries, expected {size}", row.len())));
            }
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::Kernel(format!("row {i} has entry {p} outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > EPS {
                return Err(Error::Kernel(format!("row {i} sums to {sum}")));
            }
            probs.extend_from_slice(row);
            cdf.extend(cumulative(row));
        }
        Ok(Kernel { size, probs, cdf })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.probs[from * self.size + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.probs[from * self.size..(from + 1) * self.size]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.size).map(|i| self.row(i).to_vec()).collect()
    }

    /// Draws the next state from row `from` with one variate.
    #[inline]
    pub fn sample<R: RngCore + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        sample_cdf(&self.cdf[from * self.size..(from + 1) * self.size], rng)
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &Kernel) -> Kernel {
        let n = self.size;
        let rows = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| self.prob(i, k) * other.prob(k, j)).sum()).collect())
            .collect();
        Kernel::new(rows).expect("product of stochastic matrices is stochastic")
    }

    /// `w·self + (1 − w)·other`.
    fn mix(&self, w: f64, other: &Kernel) -> Kernel {
        let rows = (0..self.size)
            .map(|i| (0..self.size).map(|j| w * self.prob(i, j) + (1.0 - w) * other.prob(i, j)).collect())
            .collect();
        Kernel::new(rows).expect("mixture of stochastic matrices is stochastic")
    }

    fn uniform(size: usize) -> Kernel {
        Kernel::new(vec![vec![1.0 / size as f64; size]; size]).unwrap()
    }
}

impl Serialize for Kernel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tables {
    /// One kernel at the identity, transported to every vertex.
    Transitive(Kernel),
    /// One kernel per vertex of a finite network.
    PerVertex(Vec<Kernel>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mechanism {
    name: String,
    tables: Tables,
    factor: Option<Box<HiddenMechanism>>,
}

impl Mechanism {
    pub fn transitive(name: impl Into<String>, kernel: Kernel) -> Self {
        Mechanism { name: name.into(), tables: Tables::Transitive(kernel), factor: None }
    }

    pub fn per_vertex(name: impl Into<String>, kernels: Vec<Kernel>) -> Self {
        Mechanism { name: name.into(), tables: Tables::PerVertex(kernels), factor: None }
    }

    pub(crate) fn with_factor(mut self, hidden: HiddenMechanism) -> Self {
        self.factor = Some(Box::new(hidden));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tables(&self) -> &Tables {
        &self.tables
    }

    /// Kernel at the identity of a transitive mechanism.
    pub fn identity_kernel(&self) -> Option<&Kernel> {
        match &self.tables {
            Tables::Transitive(k) => Some(k),
            Tables::PerVertex(_) => None,
        }
    }

    #[inline]
    pub fn kernel_at(&self, v: usize) -> &Kernel {
        match &self.tables {
            Tables::Transitive(k) => k,
            Tables::PerVertex(ks) => &ks[v],
        }
    }

    fn kernels(&self) -> Box<dyn Iterator<Item = &Kernel> + '_> {
        match &self.tables {
            Tables::Transitive(k) => Box::new(std::iter::once(k)),
            Tables::PerVertex(ks) => Box::new(ks.iter()),
        }
    }

    /// Hidden factorisation when the mechanism lives on a `G×` expansion.
    pub fn factor(&self) -> Option<&HiddenMechanism> {
        self.factor.as_deref()
    }

    /// `p_x(y, y')` for vertices of a Cayley graph, through the transport rule.
    pub fn prob(&self, net: &Network, x: &Vertex, y: &Vertex, y2: &Vertex) -> Result<f64> {
        let kernel = self
            .identity_kernel()
            .ok_or_else(|| Error::Precondition("transport needs a transitive mechanism".into()))?;
        let slot_of = |y: &Vertex| -> Result<usize> {
            let rel = net.translate(&net.group().neg(x), y);
            net.generators()
                .iter()
                .position(|g| *g == rel)
                .ok_or_else(|| Error::Precondition(format!("{y} is not a neighbor of {x}")))
        };
        Ok(kernel.prob(slot_of(y)?, slot_of(y2)?))
    }

    /// Next rotor slot at site `v` given the current slot. One variate.
    pub fn step_kernel<R: RngCore + ?Sized>(&self, v: usize, current: usize, rng: &mut R) -> Result<usize> {
        let k = self.kernel_at(v);
        if current >= k.size() {
            return Err(Error::Precondition(format!("slot {current} is not a neighbor slot")));
        }
        Ok(k.sample(current, rng))
    }

    /// Vertex-level step: next rotor of `x` on a Cayley graph.
    pub fn step<R: RngCore + ?Sized>(
        &self,
        net: &Network,
        x: &Vertex,
        current: &Vertex,
        rng: &mut R,
    ) -> Result<Vertex> {
        let rel = net.translate(&net.group().neg(x), current);
        let slot = net
            .generators()
            .iter()
            .position(|g| *g == rel)
            .ok_or_else(|| Error::Precondition(format!("{current} is not a neighbor of {x}")))?;
        let next = self.step_kernel(0, slot, rng)?;
        Ok(net.translate(x, &net.generators()[next]))
    }

    /// Two-stage draw on a `G×` expansion: hidden state first, then the jump.
    /// Falls back to a single dense draw when there is no factorisation.
    #[inline]
    pub fn sample_factored<R: RngCore + ?Sized>(&self, v: usize, current: usize, rng: &mut R) -> usize {
        match &self.factor {
            Some(h) => {
                let m = h.num_states();
                let state = h.kernel().sample(current % m, rng);
                let generator = h.sample_jump(state, rng);
                generator * m + state
            }
            None => self.kernel_at(v).sample(current, rng),
        }
    }

    pub fn degree(&self) -> usize {
        match &self.tables {
            Tables::Transitive(k) => k.size(),
            Tables::PerVertex(ks) => ks.first().map_or(0, Kernel::size),
        }
    }
}

fn check_degree(net: &Network, kernel: &Kernel) -> Result<()> {
    if kernel.size() != net.degree() {
        return Err(Error::Kernel(format!(
            "kernel has {} states but the network has {} neighbor slots",
            kernel.size(),
            net.degree()
        )));
    }
    Ok(())
}

/// Wraps a kernel for `net` after checking its size.
pub fn mech_custom(net: &Network, rows: Vec<Vec<f64>>) -> Result<Mechanism> {
    let kernel = Kernel::new(rows)?;
    check_degree(net, &kernel)?;
    Ok(Mechanism::transitive("custom", kernel))
}

/// Simple random walk: every row is μ_id.
pub fn mech_aldous_broder(net: &Network) -> Mechanism {
    let mu = net.mu_id();
    Mechanism::transitive("aldous_broder", Kernel::new(vec![mu; net.degree()]).unwrap())
}

/// Aldous–Broder on an arbitrary finite network (rows are μ at each vertex).
pub fn mech_aldous_broder_finite(fnet: &FiniteNetwork) -> Mechanism {
    let kernels = (0..fnet.len())
        .map(|x| {
            let mu = fnet.mu(x);
            Kernel::new(vec![mu.clone(); mu.len()]).unwrap()
        })
        .collect();
    Mechanism::per_vertex("aldous_broder", kernels)
}

/// Deterministic rotor walk: slot `k` always moves to slot `perm[k]`.
pub fn mech_rotor_perm(net: &Network, perm: &[usize]) -> Result<Mechanism> {
    let n = net.degree();
    if perm.len() != n {
        return Err(Error::Kernel(format!("permutation has {} entries, expected {n}", perm.len())));
    }
    let mut hit = vec![false; n];
    for &k in perm {
        if k >= n || std::mem::replace(&mut hit[k], true) {
            return Err(Error::Kernel("rotor map is not a bijection".into()));
        }
    }
    let rows = perm
        .iter()
        .map(|&k| {
            let mut r = vec![0.0; n];
            r[k] = 1.0;
            r
        })
        .collect();
    Ok(Mechanism::transitive("rotor_perm", Kernel::new(rows)?))
}

/// Dimension `d` when the generators are `+e₁, −e₁, …, +e_d, −e_d` in order.
fn axis_dimension(net: &Network) -> Option<usize> {
    if net.is_multigraph() {
        return None;
    }
    let d = net.dim();
    let group = net.group();
    if matches!(group, Group::Triangular) || net.generators().len() != 2 * d {
        return None;
    }
    for i in 0..d {
        let mut e = vec![0i64; d];
        e[i] = 1;
        let plus = Vertex(e);
        let minus = group.neg(&plus);
        let plus = group.add(&group.identity(), &plus);
        if net.generators()[2 * i] != plus || net.generators()[2 * i + 1] != minus {
            return None;
        }
    }
    Some(d)
}

fn p_rotor_kernel(d: usize, p: f64) -> Kernel {
    let n = 2 * d;
    let w = 1.0 / (d - 1) as f64;
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..d {
        for sign in 0..2 {
            let row = &mut rows[2 * i + sign];
            for j in (0..d).filter(|&j| j != i) {
                let same = 2 * j + sign;
                let flip = 2 * j + 1 - sign;
                let (to_same, to_flip) = if i < j { (p, 1.0 - p) } else { (1.0 - p, p) };
                row[same] += to_same * w;
                row[flip] += to_flip * w;
            }
        }
    }
    Kernel::new(rows).unwrap()
}

fn check_p(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Kernel(format!("{name} = {p} is not in [0, 1]")))
    }
}

/// p-rotor walk on ℤᵈ, d ≥ 2 (also on tori with the same generators). From
/// `±eᵢ` the walker picks `j ≠ i` uniformly and rotates in the
/// `{min(i,j), max(i,j)}`-plane, counterclockwise with probability `p`.
pub fn mech_p_rotor_zd(net: &Network, p: f64) -> Result<Mechanism> {
    check_p("p", p)?;
    match axis_dimension(net) {
        Some(d) if d >= 2 => Ok(Mechanism::transitive("p_rotor", p_rotor_kernel(d, p))),
        Some(_) => Err(Error::Precondition("the p-rotor walk on Z^d needs d >= 2; use the 1-d kernel".into())),
        None => Err(Error::Precondition("p-rotor walk needs generators +e1, -e1, ..., +ed, -ed".into())),
    }
}

/// p-rotor walk on ℤ, in slot order `(+1, −1)`.
pub fn mech_p_rotor_1d(p: f64) -> Result<Mechanism> {
    check_p("p", p)?;
    let k = Kernel::new(vec![vec![p, 1.0 - p], vec![1.0 - p, p]])?;
    Ok(Mechanism::transitive("p_rotor", k))
}

/// p,q-rotor walk: Aldous–Broder rows with probability `q`, p-rotor rows
/// otherwise. On two-slot networks (ℤ, cycles) the 1-d p-rotor kernel is used.
pub fn mech_pq_rotor(net: &Network, p: f64, q: f64) -> Result<Mechanism> {
    check_p("q", q)?;
    let base = if net.degree() == 2 && !net.is_multigraph() { mech_p_rotor_1d(p)? } else { mech_p_rotor_zd(net, p)? };
    let rotor = base.identity_kernel().unwrap();
    let k = Kernel::uniform(rotor.size()).mix(q, rotor);
    Ok(Mechanism::transitive("pq_rotor", k))
}

/// Cyclic analogue of the p,q-rotor walk on any Cayley graph: with
/// probability `1 − q` the rotor moves to the next slot (probability `p`) or
/// the previous one, otherwise it is resampled uniformly.
pub fn mech_cyclic_rotor(net: &Network, p: f64, q: f64) -> Result<Mechanism> {
    check_p("p", p)?;
    check_p("q", q)?;
    let n = net.degree();
    let rows = (0..n)
        .map(|k| {
            let mut r = vec![q / n as f64; n];
            r[(k + 1) % n] += (1.0 - q) * p;
            r[(k + n - 1) % n] += (1.0 - q) * (1.0 - p);
            r
        })
        .collect();
    Ok(Mechanism::transitive("cyclic_rotor", Kernel::new(rows)?))
}

/// H,V-walk on ℤ²: the axis of the rotor flips with probability `flip`,
/// then the sign along the new axis is a fair coin.
pub fn mech_hv(net: &Network, flip: f64) -> Result<Mechanism> {
    check_p("flip", flip)?;
    if axis_dimension(net) != Some(2) {
        return Err(Error::Precondition("the H,V-walk needs the square lattice generators".into()));
    }
    let rows = (0..4)
        .map(|k| {
            let axis = k / 2;
            (0..4).map(|j| if j / 2 == axis { (1.0 - flip) / 2.0 } else { flip / 2.0 }).collect()
        })
        .collect();
    Ok(Mechanism::transitive("hv", Kernel::new(rows)?))
}

fn is_triangular(net: &Network) -> bool {
    matches!(net.group(), Group::Triangular)
        && !net.is_multigraph()
        && net.generators() == Network::make_triangular().generators()
}

/// Triangular walk: the rotor turns counterclockwise by 60°, 180° or 300°,
/// each with probability 1/3.
pub fn mech_triangular(net: &Network) -> Result<Mechanism> {
    if !is_triangular(net) {
        return Err(Error::Precondition("the triangular walk needs the triangular lattice".into()));
    }
    let rows = (0..6)
        .map(|k| {
            let mut r = vec![0.0; 6];
            for turn in [1, 3, 5] {
                r[(k + turn) % 6] = 1.0 / 3.0;
            }
            r
        })
        .collect();
    Ok(Mechanism::transitive("triangular", Kernel::new(rows)?))
}

/// Hidden mechanism, defined at the identity and transported: a Markov
/// kernel on hidden states plus a jump distribution over neighbor slots for
/// each state.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenMechanism {
    states: Vec<String>,
    kernel: Kernel,
    jump: Vec<Vec<f64>>,
    jump_cdf: Vec<Vec<f64>>,
}

impl HiddenMechanism {
    pub fn new(states: Vec<String>, kernel: Vec<Vec<f64>>, jump: Vec<Vec<f64>>) -> Result<Self> {
        let kernel = Kernel::new(kernel)?;
        if kernel.size() != states.len() {
            return Err(Error::Kernel(format!(
                "hidden kernel has {} states but {} names",
                kernel.size(),
                states.len()
            )));
        }
        if jump.len() != states.len() {
            return Err(Error::Kernel(format!("jump rule has {} rows for {} states", jump.len(), states.len())));
        }
        let degree = jump[0].len();
        for (name, row) in states.iter().zip(&jump) {
            if row.len() != degree || row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Kernel(format!("jump rule of state `{name}` is malformed")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > EPS {
                return Err(Error::Kernel(format!("jump rule of state `{name}` sums to {sum}")));
            }
        }
        let jump_cdf = jump.iter().map(|r| cumulative(r)).collect();
        Ok(HiddenMechanism { states, kernel, jump, jump_cdf })
    }

    /// A plain mechanism seen as a hidden one: one state per neighbor slot,
    /// jumping deterministically to that slot.
    pub fn degenerate(mech: &Mechanism) -> Result<Self> {
        let k = mech
            .identity_kernel()
            .ok_or_else(|| Error::Precondition("degenerate lift needs a transitive mechanism".into()))?;
        let n = k.size();
        let states = (0..n).map(|i| format!("slot{i}")).collect();
        let jump = (0..n)
            .map(|i| {
                let mut r = vec![0.0; n];
                r[i] = 1.0;
                r
            })
            .collect();
        Self::new(states, k.rows(), jump)
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn jump(&self, state: usize) -> &[f64] {
        &self.jump[state]
    }

    /// Number of neighbor slots the jump rule ranges over.
    pub fn degree(&self) -> usize {
        self.jump[0].len()
    }

    #[inline]
    pub fn sample_jump<R: RngCore + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        sample_cdf(&self.jump_cdf[state], rng)
    }
}

/// Hidden triangular walk: states `s1 → {s2, s3}` evenly, `s2 → s3`,
/// `s3 → s1`; `s1` jumps uniformly to the neighbors at 0°, 120°, 240° and
/// `s2`, `s3` uniformly to those at 60°, 180°, 300°.
pub fn mech_hidden_triangular() -> HiddenMechanism {
    let third = 1.0 / 3.0;
    let n1 = vec![third, 0.0, third, 0.0, third, 0.0];
    let n2 = vec![0.0, third, 0.0, third, 0.0, third];
    HiddenMechanism::new(
        vec!["s1".into(), "s2".into(), "s3".into()],
        vec![vec![0.0, 0.5, 0.5], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]],
        vec![n1, n2.clone(), n2],
    )
    .unwrap()
}

fn t1_defect(kernel: &Kernel, mu: &[f64]) -> f64 {
    (0..kernel.size())
        .map(|j| {
            let flowed: f64 = (0..kernel.size()).map(|i| mu[i] * kernel.prob(i, j)).sum();
            (flowed - mu[j]).abs()
        })
        .fold(0.0, f64::max)
}

/// (T1): μ_id is stationary for the local chain at the identity.
pub fn check_t1(mech: &Mechanism, net: &Network, tol: f64) -> Result<bool> {
    let kernel = mech
        .identity_kernel()
        .ok_or_else(|| Error::Precondition("check_T1 on a Cayley graph needs a transitive mechanism".into()))?;
    check_degree(net, kernel)?;
    Ok(t1_defect(kernel, &net.mu_id()) <= tol)
}

/// (T1) vertex by vertex on a finite network.
pub fn check_t1_finite(mech: &Mechanism, fnet: &FiniteNetwork, tol: f64) -> Result<bool> {
    for x in 0..fnet.len() {
        let mu = fnet.mu(x);
        let k = mech.kernel_at(x);
        if k.size() != mu.len() {
            return Err(Error::Kernel(format!("kernel at vertex {x} has the wrong size")));
        }
        if t1_defect(k, &mu) > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// (ELL): every kernel entry is strictly positive.
pub fn check_elliptic(mech: &Mechanism) -> bool {
    mech.kernels().all(|k| (0..k.size()).all(|i| k.row(i).iter().all(|&p| p > 0.0)))
}

fn lattice_vectors(mech: &Mechanism, net: &Network) -> Result<Vec<Vec<f64>>> {
    if !net.is_lattice() {
        return Err(Error::NotEmbeddable("finite cyclic groups carry no embedding".into()));
    }
    let kernel = mech
        .identity_kernel()
        .ok_or_else(|| Error::Precondition("lattice checks need a transitive mechanism".into()))?;
    check_degree(net, kernel)?;
    net.slot_vectors()
}

/// (MG1): each kernel row has mean displacement zero.
pub fn check_mg1(mech: &Mechanism, net: &Network, tol: f64) -> Result<bool> {
    let vecs = lattice_vectors(mech, net)?;
    let kernel = mech.identity_kernel().unwrap();
    let d = net.dim();
    for i in 0..kernel.size() {
        let mut mean = vec![0.0; d];
        for (j, v) in vecs.iter().enumerate() {
            for (m, c) in mean.iter_mut().zip(v) {
                *m += kernel.prob(i, j) * c;
            }
        }
        if mean.iter().map(|m| m * m).sum::<f64>().sqrt() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// (MG2): the second moment of a kernel row does not depend on the row.
/// Returns the common matrix, or `None` when rows disagree beyond `tol` in
/// Frobenius norm.
pub fn check_mg2(mech: &Mechanism, net: &Network, tol: f64) -> Result<Option<GammaMatrix>> {
    let vecs = lattice_vectors(mech, net)?;
    let kernel = mech.identity_kernel().unwrap();
    let rows: Vec<GammaMatrix> =
        (0..kernel.size()).map(|i| GammaMatrix::weighted_outer(net.dim(), kernel.row(i), &vecs)).collect();
    let first = &rows[0];
    if rows.iter().all(|g| g.frobenius_distance(first) <= tol) {
        Ok(Some(first.clone()))
    } else {
        Ok(None)
    }
}

/// Γ = Σ_y μ_0(y) y yᵀ over the embedded neighbors of the origin.
pub fn gamma_matrix(net: &Network) -> Result<GammaMatrix> {
    if !net.is_lattice() {
        return Err(Error::NotEmbeddable("finite cyclic groups carry no embedding".into()));
    }
    Ok(GammaMatrix::weighted_outer(net.dim(), &net.mu_id(), &net.slot_vectors()?))
}

/// Symmetric d×d matrix, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl GammaMatrix {
    pub fn zeros(dim: usize) -> Self {
        GammaMatrix { dim, entries: vec![0.0; dim * dim] }
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut g = Self::zeros(dim);
        for i in 0..dim {
            g.entries[i * dim + i] = s;
        }
        g
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.len();
        GammaMatrix { dim, entries: rows.iter().flatten().copied().collect() }
    }

    /// Σ_k w_k v_k v_kᵀ.
    pub fn weighted_outer(dim: usize, weights: &[f64], vectors: &[Vec<f64>]) -> Self {
        let mut g = Self::zeros(dim);
        for (w, v) in weights.iter().zip(vectors) {
            g.add_outer(*w, v);
        }
        g
    }

    pub fn add_outer(&mut self, w: f64, v: &[f64]) {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.entries[i * self.dim + j] += w * v[i] * v[j];
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.entries.iter_mut().for_each(|e| *e *= s);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_distance(&self, other: &GammaMatrix) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = self.to_matrix();
        let sym = (&m + m.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

impl Serialize for GammaMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}
