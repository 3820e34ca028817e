use super::Network;
use crate::mechanism::{HiddenMechanism, Kernel, Mechanism};
use crate::{Error, Result};

/// The multigraph `G×` of a hidden mechanism together with its emulating
/// mechanism. Slot `k·|S| + s` at `x` is the edge `e(x, x + g_k, s)`.
#[derive(Clone, Debug)]
pub struct Expansion {
    pub network: Network,
    pub mechanism: Mechanism,
    states: usize,
}

impl Expansion {
    pub fn num_states(&self) -> usize {
        self.states
    }

    /// `h`: the generator (neighbor slot of `G`) an expanded slot projects to.
    pub fn project(&self, slot: usize) -> usize {
        slot / self.states
    }

    /// Hidden state carried by an expanded slot.
    pub fn label(&self, slot: usize) -> usize {
        slot % self.states
    }

    /// Expanded slot of the edge to neighbor slot `generator` with label `state`.
    pub fn lift(&self, generator: usize, state: usize) -> usize {
        generator * self.states + state
    }

    /// `h` as a table over all expanded slots.
    pub fn label_map(&self) -> Vec<usize> {
        (0..self.network.degree()).map(|s| self.project(s)).collect()
    }
}

/// Builds `G×` and the kernel `p×((k,s), (k',s')) = p(s,s') · f(s')(k')`.
pub fn expand_hidden(net: &Network, hidden: &HiddenMechanism) -> Result<Expansion> {
    if net.is_multigraph() {
        return Err(Error::Network("the base graph of an expansion must be simple".into()));
    }
    if hidden.degree() != net.degree() {
        return Err(Error::Kernel(format!(
            "jump rule covers {} neighbors but the network has {}",
            hidden.degree(),
            net.degree()
        )));
    }
    let m = hidden.num_states();
    let n = net.degree() * m;
    let kernel = hidden.kernel();
    let rows = (0..n)
        .map(|from| {
            let s = from % m;
            (0..n)
                .map(|to| {
                    let (k2, s2) = (to / m, to % m);
                    kernel.prob(s, s2) * hidden.jump(s2)[k2]
                })
                .collect()
        })
        .collect();
    let mechanism = Mechanism::transitive("hidden_expansion", Kernel::new(rows)?).with_factor(hidden.clone());
    Ok(Expansion { network: net.with_multiplicity(m), mechanism, states: m })
}
