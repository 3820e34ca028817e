//! Exhaustive oracles for small networks.

use std::collections::{BTreeMap, VecDeque};

use super::{tree_weight, OrientedForest, RotorConfig, Slot};
use crate::network::FiniteNetwork;
use crate::{Error, Result};

/// Limits on exhaustive enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationCap {
    pub max_vertices: usize,
    /// Bound on the number of edge subsets or rotor configurations visited.
    pub max_configs: u64,
}

impl Default for EnumerationCap {
    fn default() -> Self {
        EnumerationCap { max_vertices: 10, max_configs: 2_000_000 }
    }
}

/// Finite law with distinct, sorted outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution<K> {
    entries: Vec<(K, f64)>,
}

impl<K: Ord + Clone> ExactDistribution<K> {
    /// Normalizes positive weights. Zero weights are dropped.
    pub fn from_weights(weights: BTreeMap<K, f64>) -> Result<Self> {
        let total: f64 = weights.values().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::Empty("distribution has no mass"));
        }
        let entries = weights.into_iter().filter(|(_, w)| *w > 0.0).map(|(k, w)| (k, w / total)).collect();
        Ok(ExactDistribution { entries })
    }

    pub fn entries(&self) -> &[(K, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn prob(&self, key: &K) -> f64 {
        self.entries.binary_search_by(|(k, _)| k.cmp(key)).map_or(0.0, |i| self.entries[i].1)
    }

    fn paired(&self, other: &Self) -> Vec<(f64, f64)> {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        let mut out = Vec::with_capacity(a.len().max(b.len()));
        while i < a.len() || j < b.len() {
            let ord = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) => x.0.cmp(&y.0),
                (Some(_), None) => std::cmp::Ordering::Less,
                _ => std::cmp::Ordering::Greater,
            };
            match ord {
                std::cmp::Ordering::Less => {
                    out.push((a[i].1, 0.0));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push((0.0, b[j].1));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].1, b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out
    }

    pub fn total_variation(&self, other: &Self) -> f64 {
        0.5 * self.paired(other).iter().map(|(p, q)| (p - q).abs()).sum::<f64>()
    }

    /// Largest pointwise difference, outcomes missing on one side counting
    /// with probability zero.
    pub fn max_abs_difference(&self, other: &Self) -> f64 {
        self.paired(other).iter().map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// All spanning trees, oriented toward `r`, weighted by Ξ. Brute force over
/// the edge subsets of size `|V| − 1`.
pub fn enumerate_spanning_trees(
    fnet: &FiniteNetwork,
    r: usize,
    cap: EnumerationCap,
) -> Result<ExactDistribution<OrientedForest>> {
    let n = fnet.len();
    if r >= n {
        return Err(Error::OutOfScope(format!("vertex index {r}")));
    }
    if n > cap.max_vertices {
        return Err(Error::CapExceeded(format!("{n} vertices exceed the limit of {}", cap.max_vertices)));
    }
    let edges = fnet.edges();
    let k = n - 1;
    let subsets = binomial(edges.len() as u64, k as u64);
    if subsets > cap.max_configs as u128 {
        return Err(Error::CapExceeded(format!("{subsets} edge subsets exceed the limit of {}", cap.max_configs)));
    }
    let mut weights = BTreeMap::new();
    if k == 0 {
        weights.insert(OrientedForest::new(r, vec![None]), 1.0);
        return ExactDistribution::from_weights(weights);
    }
    let mut pick: Vec<usize> = (0..k).collect();
    let mut parent = vec![0; n];
    loop {
        parent.iter_mut().enumerate().for_each(|(i, p)| *p = i);
        let acyclic = pick.iter().all(|&e| {
            let (a, b) = (find(&mut parent, edges[e].0), find(&mut parent, edges[e].1));
            parent[a] = b;
            a != b
        });
        if acyclic {
            let mut adj = vec![Vec::new(); n];
            for &e in &pick {
                adj[edges[e].0].push(edges[e].1);
                adj[edges[e].1].push(edges[e].0);
            }
            let mut out = vec![None; n];
            let mut seen = vec![false; n];
            seen[r] = true;
            let mut queue = VecDeque::from([r]);
            while let Some(x) = queue.pop_front() {
                for &y in &adj[x] {
                    if !seen[y] {
                        seen[y] = true;
                        out[y] = Some(x);
                        queue.push_back(y);
                    }
                }
            }
            let tree = OrientedForest::new(r, out);
            let w = tree_weight(&tree.edges(), fnet)?;
            weights.insert(tree, w);
        }
        // next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return ExactDistribution::from_weights(weights);
            }
            i -= 1;
            if pick[i] < edges.len() - k + i {
                break;
            }
        }
        pick[i] += 1;
        for j in i + 1..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

/// WSF⁺ as the product of the exact tree law and μ_r.
pub fn wsf_plus_tree_route(
    fnet: &FiniteNetwork,
    r: usize,
    cap: EnumerationCap,
) -> Result<ExactDistribution<RotorConfig>> {
    let trees = enumerate_spanning_trees(fnet, r, cap)?;
    let mu = fnet.mu(r);
    let mut weights = BTreeMap::new();
    for (tree, p) in trees.entries() {
        for (slot, m) in mu.iter().enumerate() {
            weights.insert(tree.with_root_slot(fnet, slot)?, p * m);
        }
    }
    ExactDistribution::from_weights(weights)
}

/// WSF⁺ as the Ξ-weighted law of spanning unicycles through `r`: every
/// rotor configuration in which all vertices reach `r`, weighted by the
/// product of the conductances of its rotors.
pub fn wsf_plus_unicycle_route(
    fnet: &FiniteNetwork,
    r: usize,
    cap: EnumerationCap,
) -> Result<ExactDistribution<RotorConfig>> {
    let n = fnet.len();
    if r >= n {
        return Err(Error::OutOfScope(format!("vertex index {r}")));
    }
    let total = (0..n).try_fold(1u64, |acc, x| acc.checked_mul(fnet.neighbors(x).len() as u64));
    match total {
        Some(t) if t <= cap.max_configs => {}
        _ => return Err(Error::CapExceeded(format!("rotor configurations exceed the limit of {}", cap.max_configs))),
    }
    let mut weights = BTreeMap::new();
    let mut config = RotorConfig(vec![0 as Slot; n]);
    loop {
        if config.all_reach(fnet, r) {
            let w: f64 = (0..n).map(|x| fnet.neighbors(x)[config.slot(x)].1).product();
            weights.insert(config.clone(), w);
        }
        let mut x = n;
        loop {
            if x == 0 {
                return ExactDistribution::from_weights(weights);
            }
            x -= 1;
            if (config.0[x] as usize) + 1 < fnet.neighbors(x).len() {
                config.0[x] += 1;
                break;
            }
            config.0[x] = 0;
        }
    }
}

/// Exact WSF⁺ law. Both routes are computed and must agree term by term
/// within 1e-12.
pub fn exact_wsf_plus(fnet: &FiniteNetwork, r: usize, cap: EnumerationCap) -> Result<ExactDistribution<RotorConfig>> {
    let trees = wsf_plus_tree_route(fnet, r, cap)?;
    let unicycles = wsf_plus_unicycle_route(fnet, r, cap)?;
    let gap = trees.max_abs_difference(&unicycles);
    if trees.len() != unicycles.len() || gap > 1e-12 {
        return Err(Error::Precondition(format!(
            "tree and unicycle laws disagree by {gap:e} over {} vs {} outcomes",
            trees.len(),
            unicycles.len()
        )));
    }
    Ok(trees)
}
