//! WSF⁺ sampled on demand.
//!
//! Wilson's method may choose its next starting vertex as a function of the
//! part of the forest already built, so the forest can be revealed exactly
//! where a walker asks for it. The root branch is built first (the walk from
//! `r` to the exterior, loop-erased and reversed, then one μ_r edge at `r`);
//! every later request at an unrevealed vertex runs a network random walk
//! until it hits the revealed set or the exterior and attaches its loop
//! erasure. Loop erasure uses last-exit pointers: each visited vertex keeps
//! the slot it was last left through, and the path is read off by following
//! them from the start.

use rand::RngCore;

use super::Slot;
use crate::network::{Bitset, Topology};
use crate::rng::sample_cdf;

/// Dense rotor storage with a revealed mask and cheap reset.
#[derive(Clone, Debug)]
pub struct RotorField {
    slot: Vec<Slot>,
    revealed: Bitset,
    touched: Vec<usize>,
}

impl RotorField {
    pub fn new(cells: usize) -> Self {
        RotorField { slot: vec![0; cells], revealed: Bitset::new(cells), touched: Vec::new() }
    }

    pub fn cells(&self) -> usize {
        self.slot.len()
    }

    /// Forgets every revealed rotor.
    pub fn reset(&mut self) {
        for &c in &self.touched {
            self.revealed.clear(c);
        }
        self.touched.clear();
    }

    #[inline]
    pub fn is_revealed(&self, cell: usize) -> bool {
        self.revealed.get(cell)
    }

    #[inline]
    pub fn get(&self, cell: usize) -> Option<Slot> {
        self.revealed.get(cell).then(|| self.slot[cell])
    }

    #[inline]
    pub fn set(&mut self, cell: usize, slot: Slot) {
        if !self.revealed.get(cell) {
            self.revealed.set(cell);
            self.touched.push(cell);
        }
        self.slot[cell] = slot;
    }

    /// Writes a pointer without revealing the cell.
    #[inline]
    fn scratch(&mut self, cell: usize, slot: Slot) {
        self.slot[cell] = slot;
    }

    #[inline]
    fn raw(&self, cell: usize) -> usize {
        self.slot[cell] as usize
    }

    pub fn revealed_count(&self) -> usize {
        self.touched.len()
    }

    /// Revealed cells in the order they were revealed.
    pub fn revealed_cells(&self) -> &[usize] {
        &self.touched
    }
}

/// Starts a WSF⁺ at `r`: on a topology with an exterior, the loop-erased
/// walk from `r` to the exterior is revealed with reversed orientation;
/// then `r` gets a μ_r edge. Returns the loop-erased root walk (without the
/// exterior). Expects a freshly reset field.
pub fn wsf_plus_root<T: Topology, R: RngCore + ?Sized>(
    topo: &T,
    field: &mut RotorField,
    r: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut branch = vec![r];
    if topo.has_exterior() {
        let mut cur = r;
        loop {
            let s = sample_cdf(topo.mu_cdf(cur), rng);
            field.scratch(cur, s as Slot);
            match topo.neighbor(cur, s) {
                Some(y) => cur = y,
                None => break,
            }
        }
        let mut x = r;
        while let Some(y) = topo.neighbor(x, field.raw(x)) {
            branch.push(y);
            x = y;
        }
        // orient toward r: the vertex after x points back at x
        for i in 1..branch.len() {
            let (prev, next) = (branch[i - 1], branch[i]);
            let back = topo.reverse_slot(prev, field.raw(prev));
            field.set(next, back as Slot);
        }
    }
    let s = sample_cdf(topo.mu_cdf(r), rng);
    field.set(r, s as Slot);
    branch
}

/// Reveals the rotor at `v` by one Wilson walk. No-op if already revealed.
pub fn reveal<T: Topology, R: RngCore + ?Sized>(topo: &T, field: &mut RotorField, v: usize, rng: &mut R) -> Slot {
    if let Some(s) = field.get(v) {
        return s;
    }
    let mut cur = v;
    loop {
        let s = sample_cdf(topo.mu_cdf(cur), rng);
        field.scratch(cur, s as Slot);
        match topo.neighbor(cur, s) {
            Some(y) if !field.is_revealed(y) => cur = y,
            _ => break,
        }
    }
    let mut x = v;
    loop {
        let s = field.raw(x) as Slot;
        field.set(x, s);
        match topo.neighbor(x, s as usize) {
            Some(y) if !field.is_revealed(y) => x = y,
            _ => break,
        }
    }
    field.get(v).unwrap()
}
