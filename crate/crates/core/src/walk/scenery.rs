use rand::RngCore;

use crate::forest::{RotorConfig, RotorField, Slot};
use crate::mechanism::Mechanism;
use crate::network::{CayleyTables, FiniteNetwork, Vertex, Window, WindowGrid};
use crate::{Error, Result};

fn tables(fnet: &FiniteNetwork) -> Result<&CayleyTables> {
    fnet.cayley().ok_or_else(|| Error::Precondition("the scenery process needs a finite Cayley graph".into()))
}

/// `τ_{g⁻¹}ρ` in slot form: the rotor of `x` is the rotor of `g + x`.
pub fn translate_config(fnet: &FiniteNetwork, g: usize, rho: &RotorConfig) -> Result<RotorConfig> {
    let t = tables(fnet)?;
    Ok(RotorConfig((0..fnet.len()).map(|x| rho.0[t.add(g, x)]).collect()))
}

/// One scenery step. With `Y = g_k` drawn from `p_id(rel(id), ·)`, the new
/// configuration is `rel'(−Y) = k` and `rel'(x) = rel(Y + x)` elsewhere.
/// One variate.
pub fn scenery_step<R: RngCore + ?Sized>(
    fnet: &FiniteNetwork,
    rel: &RotorConfig,
    mech: &Mechanism,
    rng: &mut R,
) -> Result<RotorConfig> {
    let t = tables(fnet)?;
    let kernel = mech
        .identity_kernel()
        .ok_or_else(|| Error::Precondition("the scenery process needs a transitive mechanism".into()))?;
    let id = t.identity;
    let k = kernel.sample(rel.slot(id), rng);
    Ok(scenery_apply(t, rel, k))
}

/// Deterministic part of a scenery step once the new slot `k` at the
/// identity is known.
pub(crate) fn scenery_apply(t: &CayleyTables, rel: &RotorConfig, k: usize) -> RotorConfig {
    let shift = &t.shift[k];
    let back = t.neg[shift[t.identity]];
    let mut out: Vec<Slot> = shift.iter().map(|&y| rel.0[y]).collect();
    out[back] = k as Slot;
    RotorConfig(out)
}

/// Rotors seen from the walker at `pos` on a lattice window: entry `i` is
/// the rotor of `pos + vᵢ` for the vertices `vᵢ` of the centered window of
/// radius `radius`, or `None` when that vertex was never revealed or lies
/// outside the grid. The flag is true when every entry is present.
pub fn recentered_view(
    grid: &WindowGrid,
    field: &RotorField,
    pos: usize,
    radius: u32,
) -> Result<(Vec<Option<Slot>>, bool)> {
    let net = grid.network();
    let here = grid.vertex_of(pos);
    let offsets = Window::centered(net.dim(), radius, 0)?.vertices(net)?;
    let view: Vec<Option<Slot>> = offsets
        .iter()
        .map(|v| {
            let x = Vertex(v.0.iter().zip(&here.0).map(|(a, b)| a + b).collect());
            grid.cell_of(&x).and_then(|c| field.get(c))
        })
        .collect();
    let complete = view.iter().all(Option::is_some);
    Ok((view, complete))
}
