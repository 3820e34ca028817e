use std::collections::HashSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rwlm::forest::{loop_erase, sample_wsf_plus, wilson_rooted};
use rwlm::mechanism::{
    check_mg1, check_t1_finite, mech_aldous_broder, mech_custom, mech_p_rotor_zd, mech_pq_rotor, CHECK_TOL,
};
use rwlm::network::{FiniteNetwork, Network, Topology, Vertex, Window};

const STEPS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

fn lattice_walk(moves: &[usize]) -> Vec<(i64, i64)> {
    let mut p = (0, 0);
    let mut out = vec![p];
    for &m in moves {
        p = (p.0 + STEPS[m].0, p.1 + STEPS[m].1);
        out.push(p);
    }
    out
}

fn adjacent(a: (i64, i64), b: (i64, i64)) -> bool {
    (a.0 - b.0).abs() + (a.1 - b.1).abs() == 1
}

/// Connected simple graph on `n` vertices: a path plus extra weighted edges.
fn connected_graph() -> impl Strategy<Value = FiniteNetwork> {
    (3usize..7).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 2..n).map(move |b| (a, b))).collect();
        let m = pairs.len();
        (proptest::collection::vec(0.1f64..5.0, n - 1), proptest::collection::vec(proptest::option::of(0.1f64..5.0), m))
            .prop_map(move |(path, extra)| {
                let mut edges: Vec<_> = path.iter().enumerate().map(|(i, &c)| (i, i + 1, c)).collect();
                edges.extend(pairs.iter().zip(&extra).filter_map(|(&(a, b), c)| c.map(|c| (a, b, c))));
                FiniteNetwork::from_edges(n, &edges).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn loop_erasure_is_a_simple_adjacent_path(moves in proptest::collection::vec(0usize..4, 0..400)) {
        let walk = lattice_walk(&moves);
        let path = loop_erase(&walk).unwrap();
        prop_assert_eq!(path[0], walk[0]);
        prop_assert_eq!(path.last(), walk.last());
        prop_assert_eq!(path.iter().collect::<HashSet<_>>().len(), path.len());
        prop_assert!(path.windows(2).all(|e| adjacent(e[0], e[1])));
        prop_assert_eq!(loop_erase(&path).unwrap(), path);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn forests_have_the_required_shape(g in connected_graph(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = seed as usize % g.len();
        let tree = wilson_rooted(&g, r, None, &mut rng).unwrap();
        prop_assert!(tree.validate_tree(&g).is_ok());
        prop_assert_eq!(tree.edges().len(), g.len() - 1);
        let plus = sample_wsf_plus(&g, r, &mut rng).unwrap();
        prop_assert!(plus.validate(&g).is_ok());
        prop_assert!(plus.all_reach(&g, r));
    }

    #[test]
    fn mu_is_a_distribution(a in 0.01f64..10.0, b in 0.01f64..10.0, c in 0.01f64..10.0) {
        let net = Network::make_lattice(3, &[a, a, b, b, c, c]).unwrap();
        let mu = net.mu_id();
        prop_assert!((mu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((mu[0] - a / (2.0 * (a + b + c))).abs() < 1e-12);
        let g = FiniteNetwork::from_edges(3, &[(0, 1, a), (1, 2, b), (0, 2, c)]).unwrap();
        for x in 0..3 {
            prop_assert!((g.mu(x).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn neighborhoods_are_translation_invariant(x in (-50i64..50, -50i64..50), g in (-50i64..50, -50i64..50)) {
        let net = Network::make_triangular();
        let (x, g) = (Vertex(vec![x.0, x.1]), Vertex(vec![g.0, g.1]));
        let moved: Vec<_> = net.neighbors(&x).unwrap().into_iter().map(|(y, c)| (net.translate(&g, &y), c)).collect();
        prop_assert_eq!(net.neighbors(&net.translate(&g, &x)).unwrap(), moved);
        let mech = mech_pq_rotor(&Network::unit_lattice(2).unwrap(), 0.3, 0.6).unwrap();
        let z2 = Network::unit_lattice(2).unwrap();
        for (y, _) in z2.neighbors(&x).unwrap() {
            for (y2, _) in z2.neighbors(&x).unwrap() {
                let p = mech.prob(&z2, &x, &y, &y2).unwrap();
                let q = mech.prob(&z2, &z2.translate(&g, &x), &z2.translate(&g, &y), &z2.translate(&g, &y2)).unwrap();
                prop_assert_eq!(p, q);
            }
        }
    }

    #[test]
    fn wiring_conserves_conductance(a in 0.1f64..5.0, b in 0.1f64..5.0, radius in 1u32..5) {
        let net = Network::make_lattice(2, &[a, a, b, b]).unwrap();
        let g = net.wire(&Window::centered(2, radius, 0).unwrap()).unwrap();
        let z = g.wired().unwrap();
        for x in (0..g.len()).filter(|&x| x != z) {
            let total: f64 = g.neighbors(x).iter().map(|e| e.1).sum();
            prop_assert!((total - 2.0 * (a + b)).abs() < 1e-12);
        }
        // z carries exactly what crosses the boundary
        let boundary = 2.0 * (2 * radius as usize + 1) as f64 * (a + b);
        let at_z: f64 = g.neighbors(z).iter().map(|e| e.1).sum();
        prop_assert!((at_z - boundary).abs() < 1e-9);
    }

    #[test]
    fn kernels_are_row_stochastic(raw in proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, 2), 2)) {
        let rows: Vec<Vec<f64>> = raw.iter().map(|r| { let s: f64 = r.iter().sum(); r.iter().map(|v| v / s).collect() }).collect();
        let c5 = Network::cycle(5).unwrap();
        let mech = mech_custom(&c5, rows).unwrap();
        let k = mech.identity_kernel().unwrap();
        let k2 = k.compose(k);
        for i in 0..2 {
            prop_assert!((k2.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        // the uniform law is stationary iff columns also sum to one
        let doubly = (0..2).all(|j| ((0..2).map(|i| k.prob(i, j)).sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert_eq!(check_t1_finite(&mech, &c5.finite().unwrap(), 1e-9).unwrap(), doubly);
    }

    #[test]
    fn mg1_holds_only_at_one_half(p in 0.0f64..=1.0) {
        let z2 = Network::unit_lattice(2).unwrap();
        let mech = mech_p_rotor_zd(&z2, p).unwrap();
        prop_assert_eq!(check_mg1(&mech, &z2, CHECK_TOL).unwrap(), (p - 0.5).abs() < 1e-9);
    }
}

#[test]
fn aldous_broder_is_stationary_everywhere() {
    for net in [Network::cycle(5).unwrap(), Network::torus(3, 3).unwrap(), Network::complete4()] {
        let g = net.finite().unwrap();
        assert!(check_t1_finite(&mech_aldous_broder(&net), &g, CHECK_TOL).unwrap());
        assert!(!g.is_empty() && g.num_sites() == g.len());
    }
}
