use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::forest::sample_wsf_plus;
use crate::mechanism::{
    gamma_matrix, mech_aldous_broder, mech_hidden_triangular, mech_pq_rotor, mech_rotor_perm, HiddenMechanism,
};
use crate::network::Vertex;
use crate::rng::ReplayRng;

fn grid(net: &Network, r: u32) -> WindowGrid {
    WindowGrid::new(net, &Window::centered(net.dim(), r, 0).unwrap()).unwrap()
}

#[test]
fn swap_rotor_step_on_z() {
    let z = Network::unit_lattice(1).unwrap();
    let g = grid(&z, 3);
    let mech = mech_rotor_perm(&z, &[1, 0]).unwrap();
    let mut env = Environment::new(&g, EnvironmentKind::Constant(0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let o = g.center_cell();
    let step = rwlm_step(&mut env, &mech, o, &mut rng);
    assert_eq!(step.slot, 1);
    assert_eq!(g.vertex_of(step.next.unwrap()), Vertex(vec![-1]));
    assert_eq!(env.field().get(o), Some(1));
}

#[test]
fn aldous_broder_first_step_is_uniform() {
    let z2 = Network::unit_lattice(2).unwrap();
    let g = grid(&z2, 2);
    let mech = mech_aldous_broder(&z2);
    let mut env = Environment::new(&g, EnvironmentKind::Constant(0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 100_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        env.start(g.center_cell(), &mut rng);
        counts[rwlm_step(&mut env, &mech, g.center_cell(), &mut rng).slot as usize] += 1;
    }
    let band = 3.0 * (0.25f64 * 0.75 / n as f64).sqrt();
    assert!(counts.iter().all(|&c| (c as f64 / n as f64 - 0.25).abs() <= band), "{counts:?}");
}

#[test]
fn zero_steps_and_adjacency() {
    let z2 = Network::unit_lattice(2).unwrap();
    let g = grid(&z2, 30);
    let mech = mech_pq_rotor(&z2, 0.5, 0.5).unwrap();
    let mut env = Environment::new(&g, EnvironmentKind::WsfPlus).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    env.start(g.center_cell(), &mut rng);
    let t = run_rwlm(&mut env, &mech, g.center_cell(), 0, &mut rng);
    assert_eq!(t.positions(&g), vec![g.center_cell()]);
    env.start(g.center_cell(), &mut rng);
    let t = run_rwlm(&mut env, &mech, g.center_cell(), 200, &mut rng);
    let pos = t.positions(&g);
    for w in pos.windows(2) {
        let (a, b) = (g.vertex_of(w[0]), g.vertex_of(w[1]));
        let dist: i64 = a.0.iter().zip(&b.0).map(|(x, y)| (x - y).abs()).sum();
        assert_eq!(dist, 1);
    }
}

#[test]
fn one_rotor_changes_and_points_at_the_walker() {
    let tri = Network::make_triangular();
    let g = grid(&tri, 40);
    let mech = crate::mechanism::mech_triangular(&tri).unwrap();
    let mut env = Environment::new(&g, EnvironmentKind::WsfPlus).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    env.start(g.center_cell(), &mut rng);
    let mut pos = g.center_cell();
    let mut visited = vec![pos];
    for _ in 0..400 {
        // reveal first so the snapshot compares like with like
        env.rotor(pos, &mut rng);
        let before: Vec<Option<u8>> = (0..g.cells()).map(|c| env.field().get(c)).collect();
        let step = rwlm_step(&mut env, &mech, pos, &mut rng);
        let next = step.next.unwrap();
        for (c, b) in before.iter().enumerate() {
            let after = env.field().get(c);
            if c == pos {
                assert_eq!(g.neighbor(pos, after.unwrap() as usize), Some(next));
            } else if b.is_some() {
                assert_eq!(after, *b);
            }
        }
        pos = next;
        if !visited.contains(&pos) {
            visited.push(pos);
        }
        // rotors at visited vertices lead to the walker without repeats
        for &v in &visited {
            let mut x = v;
            let mut seen = vec![x];
            while x != pos {
                x = g.neighbor(x, env.field().get(x).unwrap() as usize).unwrap();
                assert!(!seen.contains(&x), "rotor cycle avoids the walker");
                seen.push(x);
            }
        }
    }
}

#[test]
fn pq_rotor_mean_position_is_near_origin() {
    let z2 = Network::unit_lattice(2).unwrap();
    let g = grid(&z2, 150);
    let mech = mech_pq_rotor(&z2, 0.5, 0.5).unwrap();
    let (n, trials) = (1000, 1000);
    let trajs = run_trials(&g, &EnvironmentKind::WsfPlus, &mech, g.center_cell(), n, trials, 99).unwrap();
    assert!(trajs.iter().all(|t| !t.truncated));
    let vecs = z2.slot_vectors().unwrap();
    let mut mean = [0.0; 2];
    for t in &trajs {
        let d = t.displacement(&vecs);
        mean[0] += d[0] / trials as f64;
        mean[1] += d[1] / trials as f64;
    }
    let band = 3.0 * (gamma_matrix(&z2).unwrap().trace() * n as f64 / trials as f64).sqrt();
    assert!(mean.iter().all(|m| m.abs() <= band), "{mean:?} vs {band}");
}

#[test]
fn trials_are_reproducible_and_independent_of_count() {
    let z2 = Network::unit_lattice(2).unwrap();
    let g = grid(&z2, 60);
    let mech = mech_pq_rotor(&z2, 0.5, 0.5).unwrap();
    let a = run_trials(&g, &EnvironmentKind::WsfPlus, &mech, g.center_cell(), 300, 8, 5).unwrap();
    let b = run_trials(&g, &EnvironmentKind::WsfPlus, &mech, g.center_cell(), 300, 12, 5).unwrap();
    assert_eq!(a[..], b[..8]);
}

#[test]
fn truncation_is_flagged() {
    let z = Network::unit_lattice(1).unwrap();
    let g = WindowGrid::new(&z, &Window::centered(1, 5, 2).unwrap()).unwrap();
    // keep rotor +1 forever: the walker marches right and hits the margin
    let mech = mech_rotor_perm(&z, &[0, 1]).unwrap();
    let trajs = run_trials(&g, &EnvironmentKind::Constant(0), &mech, g.center_cell(), 10, 1, 0).unwrap();
    assert!(trajs[0].truncated);
    assert_eq!(trajs[0].steps(), 3);
}

#[test]
fn scenery_matches_translated_rotors() {
    for net in [Network::torus(3, 3).unwrap(), Network::cycle(5).unwrap(), Network::complete4()] {
        let f = net.finite().unwrap();
        let id = f.cayley().unwrap().identity;
        let mech = match net.degree() {
            3 => crate::mechanism::mech_cyclic_rotor(&net, 0.3, 0.5).unwrap(),
            _ => mech_pq_rotor(&net, 0.3, 0.5).unwrap(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..50 {
            let rho0 = sample_wsf_plus(&f, id, &mut rng).unwrap();
            let mut env = Environment::new(&f, EnvironmentKind::Explicit(Arc::new(rho0.clone()))).unwrap();
            let mut walk_rng = trial_stream(trial, 0);
            let mut scen_rng = trial_stream(trial, 0);
            let mut rel = rho0;
            let mut pos = id;
            let t = f.cayley().unwrap();
            for _ in 0..30 {
                let prev = pos;
                pos = rwlm_step(&mut env, &mech, pos, &mut walk_rng).next.unwrap();
                rel = scenery_step(&f, &rel, &mech, &mut scen_rng).unwrap();
                let rho = RotorConfig((0..f.len()).map(|x| env.rotor(x, &mut walk_rng)).collect());
                assert_eq!(translate_config(&f, pos, &rho).unwrap(), rel);
                // rel'(−Y) is the identity, with −Y = X_n − X_{n+1}
                let back = t.add(prev, t.neg[pos]);
                assert_eq!(f.neighbors(back)[rel.slot(back)].0, id);
            }
        }
    }
}

#[test]
fn scenery_needs_cayley_tables() {
    let f = crate::network::FiniteNetwork::complete(3).unwrap();
    let m = mech_aldous_broder(&Network::cycle(3).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(scenery_step(&f, &RotorConfig(vec![0; 3]), &m, &mut rng).is_err());
}

#[test]
fn hidden_step_from_s2() {
    let tri = Network::make_triangular();
    let g = grid(&tri, 3);
    let h = mech_hidden_triangular();
    let mut env = Environment::new(&g, EnvironmentKind::Constant(0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..300 {
        let mut kappa = vec![1u8; g.cells()];
        let step = rwhlm_step(&mut env, &mut kappa, &h, g.center_cell(), &mut rng);
        assert_eq!(kappa[g.center_cell()], 2);
        assert_eq!(step.slot % 2, 1);
        assert!(kappa.iter().enumerate().all(|(c, &k)| c == g.center_cell() || k == 1));
    }
}

#[test]
fn degenerate_hidden_reproduces_rwlm() {
    let z2 = Network::unit_lattice(2).unwrap();
    let n = 1000;
    let g = grid(&z2, n as u32 + 1);
    let mech = mech_pq_rotor(&z2, 0.3, 0.4).unwrap();
    let h = HiddenMechanism::degenerate(&mech).unwrap();
    let mut source = ChaCha8Rng::seed_from_u64(77);
    let words: Vec<u64> = (0..2 * n).map(|_| source.next_u64()).collect();
    let mut hidden_rng = ReplayRng::new(words.clone());
    let mut plain_rng = ReplayRng::new(words.iter().step_by(2).copied().collect());
    let mut env_h = Environment::new(&g, EnvironmentKind::Constant(2)).unwrap();
    let mut env_p = Environment::new(&g, EnvironmentKind::Constant(2)).unwrap();
    let mut kappa = vec![2u8; g.cells()];
    let (mut a, mut b) = (g.center_cell(), g.center_cell());
    for _ in 0..n {
        let sh = rwhlm_step(&mut env_h, &mut kappa, &h, a, &mut hidden_rng);
        let sp = rwlm_step(&mut env_p, &mech, b, &mut plain_rng);
        assert_eq!(sh, sp);
        a = sh.next.unwrap();
        b = sp.next.unwrap();
    }
    assert_eq!(hidden_rng.consumed(), 2 * n);
}

#[test]
fn emulation_holds_for_hidden_and_degenerate_mechanisms() {
    let tri = Network::make_triangular();
    for seed in 0..50 {
        assert!(emulate_equivalence(&tri, &mech_hidden_triangular(), 0, 0, 50, seed).unwrap());
    }
    let z2 = Network::unit_lattice(2).unwrap();
    let h = HiddenMechanism::degenerate(&mech_pq_rotor(&z2, 0.5, 0.5).unwrap()).unwrap();
    for seed in 0..20 {
        assert!(emulate_equivalence(&z2, &h, 1, 1, 50, seed).unwrap());
    }
    assert!(emulate_equivalence(&tri, &mech_hidden_triangular(), 6, 0, 5, 0).is_err());
}

#[test]
fn recentered_view_flags_missing_rotors() {
    let z2 = Network::unit_lattice(2).unwrap();
    let g = grid(&z2, 10);
    let mut env = Environment::new(&g, EnvironmentKind::IidMu).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    env.start(g.center_cell(), &mut rng);
    let (view, complete) = recentered_view(&g, env.field(), g.center_cell(), 1).unwrap();
    assert!(!complete && view.iter().all(Option::is_none));
    env.reveal_all(&mut rng);
    let here = g.cell_of(&Vertex(vec![3, -2])).unwrap();
    let (view, complete) = recentered_view(&g, env.field(), here, 2).unwrap();
    assert!(complete);
    assert_eq!(view[12], env.field().get(here));
}
