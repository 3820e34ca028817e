//! Walk engines: the RWLM itself, the scenery process and the hidden-memory
//! walk.
//!
//! Walks run on any [`Topology`]. Rotors come from an [`Environment`] that
//! reveals them on first use. Every kernel draw consumes one variate; a
//! factorised mechanism on a `G×` expansion consumes two (hidden state,
//! then jump), the same as [`rwhlm_step`].

mod scenery;

pub(crate) use scenery::scenery_apply;
pub use scenery::{recentered_view, scenery_step, translate_config};

use std::sync::Arc;

use rand::RngCore;
use rayon::prelude::*;

use crate::forest::{reveal, wsf_plus_root, RotorConfig, RotorField, Slot};
use crate::mechanism::{HiddenMechanism, Mechanism};
use crate::network::{expand_hidden, Network, Topology, Window, WindowGrid};
use crate::rng::{sample_cdf, trial_stream};
use crate::{Error, Result};

/// Law of the initial rotor configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum EnvironmentKind {
    /// WSF⁺ rooted at the walker's start.
    WsfPlus,
    /// Every rotor in the same slot (slot 0 is `+e₁`, "all east").
    Constant(Slot),
    /// Independent μ-distributed rotors.
    IidMu,
    /// A fixed configuration over all sites.
    Explicit(Arc<RotorConfig>),
}

/// Rotor configuration of one trial, revealed lazily.
pub struct Environment<'t, T: Topology> {
    topo: &'t T,
    kind: EnvironmentKind,
    field: RotorField,
    root_branch: Vec<usize>,
}

impl<'t, T: Topology> Environment<'t, T> {
    pub fn new(topo: &'t T, kind: EnvironmentKind) -> Result<Self> {
        match &kind {
            EnvironmentKind::Explicit(c) => c.validate(topo)?,
            EnvironmentKind::Constant(s)
                if (0..topo.num_sites()).any(|v| topo.is_site(v) && *s as usize >= topo.degree(v)) =>
            {
                return Err(Error::Precondition(format!("constant rotor slot {s} is out of range")));
            }
            _ => {}
        }
        Ok(Environment { topo, kind, field: RotorField::new(topo.num_sites()), root_branch: Vec::new() })
    }

    pub fn topology(&self) -> &'t T {
        self.topo
    }

    /// Starts a fresh configuration; for WSF⁺, `root` is the root.
    pub fn start<R: RngCore + ?Sized>(&mut self, root: usize, rng: &mut R) {
        self.field.reset();
        self.root_branch.clear();
        if self.kind == EnvironmentKind::WsfPlus {
            self.root_branch = wsf_plus_root(self.topo, &mut self.field, root, rng);
        }
    }

    /// Rotor at `cell`, revealing it if needed.
    #[inline]
    pub fn rotor<R: RngCore + ?Sized>(&mut self, cell: usize, rng: &mut R) -> Slot {
        if let Some(s) = self.field.get(cell) {
            return s;
        }
        let s = match &self.kind {
            EnvironmentKind::WsfPlus => return reveal(self.topo, &mut self.field, cell, rng),
            EnvironmentKind::Constant(s) => *s,
            EnvironmentKind::IidMu => sample_cdf(self.topo.mu_cdf(cell), rng) as Slot,
            EnvironmentKind::Explicit(c) => c.0[cell],
        };
        self.field.set(cell, s);
        s
    }

    #[inline]
    pub fn set(&mut self, cell: usize, slot: Slot) {
        self.field.set(cell, slot);
    }

    pub fn field(&self) -> &RotorField {
        &self.field
    }

    /// Loop-erased root walk of the current WSF⁺ (empty for other kinds).
    pub fn root_branch(&self) -> &[usize] {
        &self.root_branch
    }

    /// Reveals every site and returns the full configuration.
    pub fn reveal_all<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> RotorConfig {
        let n = self.topo.num_sites();
        let mut out = vec![0; n];
        for (v, slot) in out.iter_mut().enumerate() {
            if self.topo.is_site(v) {
                *slot = self.rotor(v, rng);
            }
        }
        RotorConfig(out)
    }
}

/// Result of one step: the new rotor at the departed vertex and the new
/// position, `None` when the walker left the window interior.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub slot: Slot,
    pub next: Option<usize>,
}

/// One RWLM step from `pos`: `ρ'(X) ~ p_X(ρ(X), ·)`, `X' = ρ'(X)`.
#[inline]
pub fn rwlm_step<T: Topology, R: RngCore + ?Sized>(
    env: &mut Environment<'_, T>,
    mech: &Mechanism,
    pos: usize,
    rng: &mut R,
) -> Step {
    let current = env.rotor(pos, rng) as usize;
    let slot = mech.sample_factored(pos, current, rng);
    env.set(pos, slot as Slot);
    let topo = env.topology();
    let next = topo.neighbor(pos, slot).filter(|&y| topo.is_interior(y));
    Step { slot: slot as Slot, next }
}

/// Start vertex and used rotors of one walk. The used rotor of step `i` is
/// the new rotor `ρ_{i+1}(X_i)`, i.e. the slot of the step taken.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub start: usize,
    pub slots: Vec<Slot>,
    /// The walker tried to leave the window interior; `slots` stops before it.
    pub truncated: bool,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.slots.len()
    }

    /// `X₀, …, X_n` as topology indices.
    pub fn positions<T: Topology>(&self, topo: &T) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.slots.len() + 1);
        let mut x = self.start;
        out.push(x);
        for &s in &self.slots {
            x = topo.neighbor(x, s as usize).expect("recorded steps stay inside");
            out.push(x);
        }
        out
    }

    /// `X_n − X₀` in embedded coordinates, given the vector of each slot.
    pub fn displacement(&self, vectors: &[Vec<f64>]) -> Vec<f64> {
        let mut d = vec![0.0; vectors.first().map_or(0, Vec::len)];
        for &s in &self.slots {
            for (a, b) in d.iter_mut().zip(&vectors[s as usize]) {
                *a += b;
            }
        }
        d
    }
}

/// `n_steps` RWLM steps from `start`, stopping early on truncation.
pub fn run_rwlm<T: Topology, R: RngCore + ?Sized>(
    env: &mut Environment<'_, T>,
    mech: &Mechanism,
    start: usize,
    n_steps: usize,
    rng: &mut R,
) -> Trajectory {
    let mut slots = Vec::with_capacity(n_steps);
    let mut pos = start;
    for _ in 0..n_steps {
        let step = rwlm_step(env, mech, pos, rng);
        match step.next {
            Some(y) => {
                slots.push(step.slot);
                pos = y;
            }
            None => return Trajectory { start, slots, truncated: true },
        }
    }
    Trajectory { start, slots, truncated: false }
}

/// Independent trials: trial `t` draws its environment and its walk from
/// `trial_stream(seed, t)`. Results are in trial order.
pub fn run_trials<T: Topology>(
    topo: &T,
    kind: &EnvironmentKind,
    mech: &Mechanism,
    start: usize,
    n_steps: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    if !topo.is_interior(start) {
        return Err(Error::Precondition("the walk must start in the window interior".into()));
    }
    Environment::new(topo, kind.clone())?;
    Ok((0..trials)
        .into_par_iter()
        .map_init(
            || Environment::new(topo, kind.clone()).expect("validated above"),
            |env, t| {
                let mut rng = trial_stream(seed, t as u64);
                env.start(start, &mut rng);
                run_rwlm(env, mech, start, n_steps, &mut rng)
            },
        )
        .collect())
}

/// One hidden-memory step: `K ~ p(κ(X), ·)`, `Y ~ f(K)`, then `κ'(X) = K`,
/// `ρ'(X) = Y`, `X' = Y`. Two variates, hidden draw first.
#[inline]
pub fn rwhlm_step<T: Topology, R: RngCore + ?Sized>(
    env: &mut Environment<'_, T>,
    kappa: &mut [Slot],
    hidden: &HiddenMechanism,
    pos: usize,
    rng: &mut R,
) -> Step {
    let state = hidden.kernel().sample(kappa[pos] as usize, rng);
    let slot = hidden.sample_jump(state, rng);
    kappa[pos] = state as Slot;
    env.set(pos, slot as Slot);
    let topo = env.topology();
    let next = topo.neighbor(pos, slot).filter(|&y| topo.is_interior(y));
    Step { slot: slot as Slot, next }
}

/// Runs the hidden walk and the RWLM on `G×` side by side from the lifted
/// initial state (`ρ₀ ≡ generator`, `κ₀ ≡ state`), each on its own copy of
/// `trial_stream(seed, 0)`, and reports whether positions, projected rotors
/// and hidden labels agree after every step.
pub fn emulate_equivalence(
    net: &Network,
    hidden: &HiddenMechanism,
    init_generator: usize,
    init_state: usize,
    n_steps: usize,
    seed: u64,
) -> Result<bool> {
    let expansion = expand_hidden(net, hidden)?;
    if init_generator >= net.degree() || init_state >= hidden.num_states() {
        return Err(Error::Precondition("initial rotor or hidden state out of range".into()));
    }
    let window = Window::centered(net.dim(), n_steps as u32 + 1, 0)?;
    let base = WindowGrid::new(net, &window)?;
    let lifted = WindowGrid::new(&expansion.network, &window)?;
    let lift = expansion.lift(init_generator, init_state) as Slot;
    let mut env = Environment::new(&base, EnvironmentKind::Constant(init_generator as Slot))?;
    let mut env_x = Environment::new(&lifted, EnvironmentKind::Constant(lift))?;
    let mut kappa = vec![init_state as Slot; base.cells()];
    let mut rng = trial_stream(seed, 0);
    let mut rng_x = trial_stream(seed, 0);
    let (mut pos, mut pos_x) = (base.center_cell(), lifted.center_cell());
    for _ in 0..n_steps {
        let a = rwhlm_step(&mut env, &mut kappa, hidden, pos, &mut rng);
        let b = rwlm_step(&mut env_x, &expansion.mechanism, pos_x, &mut rng_x);
        if a.next != b.next
            || expansion.project(b.slot as usize) != a.slot as usize
            || expansion.label(b.slot as usize) != kappa[pos] as usize
        {
            return Ok(false);
        }
        match (a.next, b.next) {
            (Some(x), Some(y)) => (pos, pos_x) = (x, y),
            _ => return Ok(false),
        }
    }
    for &cell in env_x.field().revealed_cells() {
        let s = env_x.field().get(cell).unwrap() as usize;
        let rotor = env.field().get(cell).unwrap_or(init_generator as Slot) as usize;
        if expansion.project(s) != rotor || expansion.label(s) != kappa[cell] as usize {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests;
