use super::{Bitset, Group, Network, Topology, Vertex, Window};
use crate::rng::cumulative;
use crate::{Error, Result};

/// Dense cell array over a lattice window, padded by one layer of exterior
/// cells so every neighbor of a window cell has an index.
///
/// Cells are addressed by `Σ (xᵢ − cᵢ + R + 1) · strideᵢ` with the last
/// coordinate fastest.
#[derive(Clone, Debug)]
pub struct WindowGrid {
    net: Network,
    window: Window,
    half: i64,
    side: usize,
    strides: Vec<usize>,
    offsets: Vec<isize>,
    reverse: Vec<usize>,
    cdf: Vec<f64>,
    inside: Bitset,
    interior: Bitset,
    sites: usize,
}

impl WindowGrid {
    pub fn new(net: &Network, window: &Window) -> Result<Self> {
        if net.group().is_finite() {
            return Err(Error::Network("window grids need a lattice".into()));
        }
        if window.center.0.len() != net.dim() {
            return Err(Error::OutOfScope(window.center.to_string()));
        }
        if net.degree() > u8::MAX as usize {
            return Err(Error::Network(format!("degree {} exceeds the rotor slot range", net.degree())));
        }
        let dim = net.dim();
        let half = window.radius as i64 + 1;
        let side = 2 * half as usize + 1;
        let cells = side
            .checked_pow(dim as u32)
            .filter(|&c| c <= 1 << 31)
            .ok_or_else(|| Error::Precondition(format!("window of radius {} is too large", window.radius)))?;
        let mut strides = vec![1usize; dim];
        for i in (0..dim.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * side;
        }
        let offsets = net
            .generators()
            .iter()
            .map(|g| g.0.iter().zip(&strides).map(|(&c, &s)| c as isize * s as isize).sum())
            .collect();
        let m = net.multiplicity();
        let reverse = (0..net.degree()).map(|slot| net.inverse_generator(slot / m) * m + slot % m).collect();
        let cdf = cumulative(&net.mu_id());
        let mut inside = Bitset::new(cells);
        let mut interior = Bitset::new(cells);
        let limit = window.radius as u64;
        let inner = (window.radius - window.margin) as u64;
        let mut offs = vec![-half; dim];
        let mut sites = 0;
        for cell in 0..cells {
            let dist = match net.group() {
                Group::Triangular => super::hex_norm(offs[0], offs[1]),
                _ => offs.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0),
            };
            if dist <= limit {
                inside.set(cell);
                sites += 1;
                if dist <= inner {
                    interior.set(cell);
                }
            }
            for i in (0..dim).rev() {
                if offs[i] < half {
                    offs[i] += 1;
                    break;
                }
                offs[i] = -half;
            }
        }
        Ok(WindowGrid {
            net: net.clone(),
            window: window.clone(),
            half,
            side,
            strides,
            offsets,
            reverse,
            cdf,
            inside,
            interior,
            sites,
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    /// Number of window vertices (padding excluded).
    pub fn site_count(&self) -> usize {
        self.sites
    }

    /// Total number of cells including padding.
    pub fn cells(&self) -> usize {
        self.inside.len()
    }

    pub fn cell_of(&self, v: &Vertex) -> Option<usize> {
        if v.0.len() != self.strides.len() {
            return None;
        }
        let mut cell = 0;
        for ((x, c), s) in v.0.iter().zip(&self.window.center.0).zip(&self.strides) {
            let o = x - c + self.half;
            if !(0..self.side as i64).contains(&o) {
                return None;
            }
            cell += o as usize * s;
        }
        Some(cell)
    }

    pub fn vertex_of(&self, mut cell: usize) -> Vertex {
        let mut coords = vec![0i64; self.strides.len()];
        for (i, s) in self.strides.iter().enumerate() {
            coords[i] = (cell / s) as i64 - self.half + self.window.center.0[i];
            cell %= s;
        }
        Vertex(coords)
    }

    pub fn center_cell(&self) -> usize {
        self.cell_of(&self.window.center).unwrap()
    }

    /// Cell one step along generator `k`, ignoring whether it is inside.
    #[inline]
    pub fn shifted(&self, cell: usize, generator: usize) -> usize {
        (cell as isize + self.offsets[generator]) as usize
    }

    /// Window cells in increasing index order.
    pub fn site_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.cells()).filter(|&c| self.inside.get(c))
    }
}

impl Topology for WindowGrid {
    fn num_sites(&self) -> usize {
        self.cells()
    }

    fn degree(&self, _v: usize) -> usize {
        self.net.degree()
    }

    #[inline]
    fn neighbor(&self, v: usize, slot: usize) -> Option<usize> {
        let w = self.shifted(v, slot / self.net.multiplicity());
        self.inside.get(w).then_some(w)
    }

    fn reverse_slot(&self, _v: usize, slot: usize) -> usize {
        self.reverse[slot]
    }

    fn mu_cdf(&self, _v: usize) -> &[f64] {
        &self.cdf
    }

    fn is_site(&self, v: usize) -> bool {
        self.inside.get(v)
    }

    #[inline]
    fn is_interior(&self, v: usize) -> bool {
        self.interior.get(v)
    }

    fn has_exterior(&self) -> bool {
        true
    }
}
