use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rwlm::forest::Slot;
use rwlm::forest::{enumerate_spanning_trees, exact_wsf_plus, sample_wsf_plus, wilson_rooted, EnumerationCap};
use rwlm::mechanism::mech_hidden_triangular;
use rwlm::network::{expand_hidden, FiniteNetwork, Network, Window, WindowGrid};
use rwlm::rng::trial_stream;
use rwlm::stats::{chi_square_exact, chi_square_samples, tally};
use rwlm::walk::{run_rwlm, rwhlm_step, Environment, EnvironmentKind};

const SAMPLES: usize = 100_000;

fn graphs() -> Vec<(&'static str, FiniteNetwork)> {
    vec![
        ("K3", FiniteNetwork::complete(3).unwrap()),
        ("K4", FiniteNetwork::complete(4).unwrap()),
        ("C5", Network::cycle(5).unwrap().finite().unwrap()),
        ("weighted K3", FiniteNetwork::from_edges(3, &[(0, 1, 1.0), (1, 2, 2.0), (0, 2, 5.0)]).unwrap()),
    ]
}

#[test]
fn wilson_matches_enumeration() {
    for (name, g) in graphs() {
        let law = enumerate_spanning_trees(&g, 0, EnumerationCap::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let counts = tally((0..SAMPLES).map(|_| wilson_rooted(&g, 0, None, &mut rng).unwrap()));
        let c = chi_square_exact(&counts, &law).unwrap();
        assert!(c.passes(), "{name}: {c:?}");
    }
}

#[test]
fn wilson_ordering_invariance() {
    for (name, g) in graphs() {
        let n = g.len();
        let forward: Vec<usize> = (1..n).collect();
        let backward: Vec<usize> = (1..n).rev().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = tally((0..SAMPLES).map(|_| wilson_rooted(&g, 0, Some(&forward), &mut rng).unwrap()));
        let b = tally((0..SAMPLES).map(|_| wilson_rooted(&g, 0, Some(&backward), &mut rng).unwrap()));
        let c = chi_square_samples(&a, &b).unwrap();
        assert!(c.passes(), "{name}: {c:?}");
    }
}

#[test]
fn wsf_plus_samplers_match_exact_law() {
    for (name, g) in graphs() {
        let law = exact_wsf_plus(&g, 0, EnumerationCap::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let eager = tally((0..SAMPLES).map(|_| sample_wsf_plus(&g, 0, &mut rng).unwrap()));
        assert!(chi_square_exact(&eager, &law).unwrap().passes(), "{name} eager");
        let mut env = Environment::new(&g, EnvironmentKind::WsfPlus).unwrap();
        let lazy = tally((0..SAMPLES).map(|_| {
            env.start(0, &mut rng);
            env.reveal_all(&mut rng)
        }));
        assert!(chi_square_exact(&lazy, &law).unwrap().passes(), "{name} lazy");
    }
}

#[test]
fn expanded_walk_matches_hidden_walk_in_law() {
    let tri = Network::make_triangular();
    let hidden = mech_hidden_triangular();
    let ex = expand_hidden(&tri, &hidden).unwrap();
    let window = Window::centered(2, 5, 0).unwrap();
    let base = WindowGrid::new(&tri, &window).unwrap();
    let lifted = WindowGrid::new(&ex.network, &window).unwrap();
    let n = 5;
    let trials = 50_000u64;

    let mut env = Environment::new(&base, EnvironmentKind::Constant(0)).unwrap();
    let hidden_ends = tally((0..trials).map(|t| {
        let mut rng = trial_stream(1, t);
        env.start(base.center_cell(), &mut rng);
        let mut kappa = vec![0 as Slot; base.cells()];
        let mut pos = base.center_cell();
        for _ in 0..n {
            pos = rwhlm_step(&mut env, &mut kappa, &hidden, pos, &mut rng).next.unwrap();
        }
        base.vertex_of(pos)
    }));

    let lift = ex.lift(0, 0) as Slot;
    let mut env_x = Environment::new(&lifted, EnvironmentKind::Constant(lift)).unwrap();
    let dense_ends = tally((0..trials).map(|t| {
        let mut rng = trial_stream(2, t);
        env_x.start(lifted.center_cell(), &mut rng);
        let tr = run_rwlm(&mut env_x, &ex.mechanism, lifted.center_cell(), n, &mut rng);
        assert!(!tr.truncated);
        lifted.vertex_of(*tr.positions(&lifted).last().unwrap())
    }));
    let c = chi_square_samples(&hidden_ends, &dense_ends).unwrap();
    assert!(c.passes(), "{c:?}");
}
