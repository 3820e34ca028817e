//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances are fixed below.

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rwlm::forest::{
    enumerate_spanning_trees, loop_erase, sample_wsf_plus, wilson_rooted, wsf_plus_tree_route, wsf_plus_unicycle_route,
    EnumerationCap,
};
use rwlm::mechanism::{
    check_elliptic, check_mg1, check_mg2, gamma_matrix, mech_aldous_broder, mech_custom, mech_cyclic_rotor,
    mech_hidden_triangular, mech_p_rotor_zd, mech_pq_rotor, mech_rotor_perm, mech_triangular, GammaMatrix,
    HiddenMechanism, Mechanism, CHECK_TOL,
};
use rwlm::network::{expand_hidden, FiniteNetwork, Network, Window, WindowGrid};
use rwlm::stats::{
    abort_rate, chi_square_exact, chi_square_samples, estimate_diffusion, normality_surrogate, stationarity_exact,
    tally, ErgodicTarget, StatsReport,
};
use rwlm::walk::{emulate_equivalence, run_trials, EnvironmentKind, Trajectory};

const STATIONARITY_TV: f64 = 1e-10;
const ROUTE_AGREEMENT: f64 = 1e-12;
const WILSON_SAMPLES: usize = 100_000;
const FROBENIUS_TOL: f64 = 0.05;
const MAX_ABORT: f64 = 0.01;
const ERGODIC_TOL: f64 = 0.02;
const BIASED_TV_MIN: f64 = 0.01;

struct Suite {
    failed: usize,
}

impl Suite {
    fn report(&mut self, id: u32, name: &str, pass: bool, detail: String, started: Instant) {
        if !pass {
            self.failed += 1;
        }
        println!(
            "{} [{id}] {name}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
}

fn finite(net: &Network) -> FiniteNetwork {
    net.finite().unwrap()
}

fn small_graphs() -> Vec<(&'static str, FiniteNetwork)> {
    vec![
        ("K3", FiniteNetwork::complete(3).unwrap()),
        ("K4", FiniteNetwork::complete(4).unwrap()),
        ("C5", finite(&Network::cycle(5).unwrap())),
        ("weighted K3", FiniteNetwork::from_edges(3, &[(0, 1, 1.0), (1, 2, 2.0), (0, 2, 5.0)]).unwrap()),
    ]
}

fn c1_stationarity(s: &mut Suite) {
    let t = Instant::now();
    let c5 = Network::cycle(5).unwrap();
    let torus = Network::torus(3, 3).unwrap();
    let k4 = Network::complete4();
    let cases: Vec<(&str, &Network, Mechanism)> = vec![
        ("C5 aldous_broder", &c5, mech_aldous_broder(&c5)),
        ("C5 pq(1/2,1/2)", &c5, mech_pq_rotor(&c5, 0.5, 0.5).unwrap()),
        ("C5 pq(0.3,0.6)", &c5, mech_pq_rotor(&c5, 0.3, 0.6).unwrap()),
        ("torus3x3 aldous_broder", &torus, mech_aldous_broder(&torus)),
        ("torus3x3 pq(1/2,1/2)", &torus, mech_pq_rotor(&torus, 0.5, 0.5).unwrap()),
        ("torus3x3 pq(0.3,0.6)", &torus, mech_pq_rotor(&torus, 0.3, 0.6).unwrap()),
        ("K4 aldous_broder", &k4, mech_aldous_broder(&k4)),
        ("K4 cyclic(1/2,1/2)", &k4, mech_cyclic_rotor(&k4, 0.5, 0.5).unwrap()),
        ("K4 cyclic(0.3,0.6)", &k4, mech_cyclic_rotor(&k4, 0.3, 0.6).unwrap()),
    ];
    let mut worst = (0.0f64, String::new());
    let mut errors = Vec::new();
    for (name, net, mech) in &cases {
        let g = finite(net);
        for k in 1..=3 {
            match stationarity_exact(&g, mech, k, EnumerationCap::default()) {
                Ok(tv) if tv >= worst.0 => worst = (tv, format!("{name} k={k}")),
                Ok(_) => {}
                Err(e) => errors.push(format!("{name} k={k}: {e}")),
            }
        }
    }
    let pass = errors.is_empty() && worst.0 <= STATIONARITY_TV;
    let detail = format!(
        "{} mechanism/graph pairs x k=1..3, max TV {:.2e} at {} (limit {STATIONARITY_TV:e}){}",
        cases.len(),
        worst.0,
        worst.1,
        if errors.is_empty() { String::new() } else { format!("; errors {errors:?}") }
    );
    s.report(1, "exact stationarity of WSF+", pass, detail, t);
}

fn c2_wilson(s: &mut Suite) -> usize {
    let t = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    let mut checked = 0;
    for (i, (name, g)) in small_graphs().into_iter().enumerate() {
        let law = enumerate_spanning_trees(&g, 0, EnumerationCap::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let mut sample = |order: Option<&[usize]>| {
            let f = wilson_rooted(&g, 0, order, &mut rng).unwrap();
            assert!(f.validate_tree(&g).is_ok(), "invalid tree on {name}");
            f
        };
        let canonical = tally((0..WILSON_SAMPLES).map(|_| sample(None)));
        let reversed: Vec<usize> = (1..g.len()).rev().collect();
        let other = tally((0..WILSON_SAMPLES).map(|_| sample(Some(&reversed))));
        checked += 2 * WILSON_SAMPLES;
        let gof = chi_square_exact(&canonical, &law).unwrap();
        let inv = chi_square_samples(&canonical, &other).unwrap();
        pass &= gof.passes() && inv.passes();
        lines.push(format!("{name} p={:.3}/order p={:.3}", gof.p_value, inv.p_value));
    }
    s.report(2, "Wilson vs enumeration, ordering invariance", pass, format!("alpha 1e-3; {}", lines.join(", ")), t);
    checked
}

fn c3_routes(s: &mut Suite) {
    let t = Instant::now();
    let mut graphs = small_graphs();
    graphs.push(("K5", FiniteNetwork::complete(5).unwrap()));
    graphs.push(("C4", finite(&Network::cycle(4).unwrap())));
    graphs.push(("torus3x3", finite(&Network::torus(3, 3).unwrap())));
    graphs.push(("K4 (Cayley)", finite(&Network::complete4())));
    graphs.push((
        "weighted K4",
        FiniteNetwork::from_edges(4, &[(0, 1, 0.5), (0, 2, 1.5), (0, 3, 2.0), (1, 2, 3.0), (1, 3, 0.25), (2, 3, 1.0)])
            .unwrap(),
    ));
    let mut worst = 0.0f64;
    let mut pass = true;
    for (_, g) in &graphs {
        for r in 0..g.len() {
            let a = wsf_plus_tree_route(g, r, EnumerationCap::default()).unwrap();
            let b = wsf_plus_unicycle_route(g, r, EnumerationCap::default()).unwrap();
            pass &= a.len() == b.len();
            worst = worst.max(a.max_abs_difference(&b));
        }
    }
    pass &= worst <= ROUTE_AGREEMENT;
    let detail =
        format!("{} graphs, every root, max term difference {worst:.2e} (limit {ROUTE_AGREEMENT:e})", graphs.len());
    s.report(3, "WSF+ tree x mu equals unicycle law", pass, detail, t);
}

struct Diffusion {
    frobenius: f64,
    /// Informational: error of the endpoint covariance.
    endpoint: f64,
    abort: f64,
}

fn diffusion_run(
    net: &Network,
    mech: &Mechanism,
    kind: &EnvironmentKind,
    radius: u32,
    n: usize,
    trials: usize,
    seed: u64,
) -> (Diffusion, Vec<Trajectory>) {
    let grid = WindowGrid::new(net, &Window::centered(net.dim(), radius, 0).unwrap()).unwrap();
    let trajs = run_trials(&grid, kind, mech, grid.center_cell(), n, trials, seed).unwrap();
    let est = estimate_diffusion(&trajs, &net.slot_vectors().unwrap(), &gamma_matrix(net).unwrap()).unwrap();
    let endpoint = est.endpoint_covariance.frobenius_distance(&est.target);
    (Diffusion { frobenius: est.frobenius_error, endpoint, abort: abort_rate(&trajs) }, trajs)
}

fn c4_diffusion(s: &mut Suite) {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for d in [2usize, 3] {
        let net = Network::unit_lattice(d).unwrap();
        let mech = mech_pq_rotor(&net, 0.5, 0.5).unwrap();
        let target = GammaMatrix::scaled_identity(d, 1.0 / d as f64);
        pass &= gamma_matrix(&net).unwrap().frobenius_distance(&target) < 1e-15;
        let mut radius = 200;
        let (mut run, _) = diffusion_run(&net, &mech, &EnvironmentKind::WsfPlus, radius, 10_000, 1000, 40 + d as u64);
        let mut text = format!("Z^{d} R={radius}: frob {:.4}, abort {:.2}%", run.frobenius, 100.0 * run.abort);
        // abort policy: grow the window until the abort rate is within bounds
        while run.abort > MAX_ABORT && radius < 400 {
            radius += 60;
            run = diffusion_run(&net, &mech, &EnvironmentKind::WsfPlus, radius, 10_000, 1000, 40 + d as u64).0;
            text += &format!(" -> resized R={radius}: frob {:.4}, abort {:.2}%", run.frobenius, 100.0 * run.abort);
        }
        pass &= run.frobenius <= FROBENIUS_TOL && run.abort <= MAX_ABORT;
        text += &format!(" (endpoint covariance frob {:.4})", run.endpoint);
        parts.push(text);
    }
    let detail = format!("n=1e4, T=1e3, limit {FROBENIUS_TOL}; {}", parts.join("; "));
    s.report(4, "diffusion matrix (1/d)I of the pq-rotor walk", pass, detail, t);
}

fn c5_ergodic(s: &mut Suite) {
    let t = Instant::now();
    let net = Network::unit_lattice(2).unwrap();
    let mech = mech_pq_rotor(&net, 0.5, 0.5).unwrap();
    let grid = WindowGrid::new(&net, &Window::centered(2, 1200, 0).unwrap()).unwrap();
    let trajs = run_trials(&grid, &EnvironmentKind::WsfPlus, &mech, grid.center_cell(), 100_000, 100, 50).unwrap();
    let vertical = ErgodicTarget::along_axis(&net, 1).unwrap();
    let mut report = StatsReport::new(50, &trajs, 100_000);
    let entry = report.add_ergodic(&trajs, &vertical).unwrap().clone();
    let pass = entry.error <= ERGODIC_TOL && report.truncated == 0;
    let detail = format!(
        "mean vertical fraction {:.4} vs target {:.4} (from mu), |error| {:.4} <= {ERGODIC_TOL}, 100 starts, {} truncated",
        entry.mean_fraction, entry.target, entry.error, report.truncated
    );
    s.report(5, "ergodic fraction of vertical rotors", pass, detail, t);
}

fn c6_triangular(s: &mut Suite) {
    let t = Instant::now();
    let tri = Network::make_triangular();
    let mech = mech_triangular(&tri).unwrap();
    let computed = check_mg2(&mech, &tri, CHECK_TOL).unwrap().unwrap();
    let half = GammaMatrix::scaled_identity(2, 0.5);
    let (run, trajs) = diffusion_run(&tri, &mech, &EnvironmentKind::Constant(0), 400, 10_000, 1000, 60);
    let vecs = tri.slot_vectors().unwrap();
    let ends: Vec<Vec<f64>> = trajs.iter().filter(|t| !t.truncated).map(|t| t.displacement(&vecs)).collect();
    let normal = normality_surrogate(&ends).unwrap();
    let pass = computed.frobenius_distance(&half) < 1e-12
        && run.frobenius <= FROBENIUS_TOL
        && run.abort <= MAX_ABORT
        && normal.pass;
    let detail = format!(
        "all-0 start, frob {:.4} vs (1/2)I, abort {:.2}%, skewness {:?}, excess kurtosis {:?}",
        run.frobenius,
        100.0 * run.abort,
        normal.skewness.iter().map(|x| (x * 1e3).round() / 1e3).collect::<Vec<_>>(),
        normal.excess_kurtosis.iter().map(|x| (x * 1e3).round() / 1e3).collect::<Vec<_>>()
    );
    s.report(6, "environment-free CLT of the triangular walk", pass, detail, t);
}

fn c7_emulation(s: &mut Suite) {
    let t = Instant::now();
    let tri = Network::make_triangular();
    let hidden = mech_hidden_triangular();
    let agree = (0..1000u64).filter(|&seed| emulate_equivalence(&tri, &hidden, 0, 0, 50, seed).unwrap()).count();

    let z2 = Network::unit_lattice(2).unwrap();
    let mech = mech_pq_rotor(&z2, 0.3, 0.6).unwrap();
    let degenerate = HiddenMechanism::degenerate(&mech).unwrap();
    let ex = expand_hidden(&z2, &degenerate).unwrap();
    let (k, kx) = (mech.identity_kernel().unwrap(), ex.mechanism.identity_kernel().unwrap());
    let mut gap = 0.0f64;
    for a in (0..kx.size()).filter(|&a| ex.label(a) == ex.project(a)) {
        let mut pushed = vec![0.0; k.size()];
        for b in 0..kx.size() {
            pushed[ex.project(b)] += kx.prob(a, b);
        }
        for (j, p) in pushed.iter().enumerate() {
            gap = gap.max((p - k.prob(ex.project(a), j)).abs());
        }
    }
    let reduced = (0..100u64).filter(|&seed| emulate_equivalence(&z2, &degenerate, 1, 0, 50, seed).unwrap()).count();
    let pass = agree == 1000 && gap == 0.0 && reduced == 100;
    let detail = format!(
        "hidden triangular: {agree}/1000 seeds identical over 50 steps; degenerate: kernel gap under h {gap:e}, {reduced}/100 coupled runs identical"
    );
    s.report(7, "hidden-memory emulation", pass, detail, t);
}

fn c8_negative(s: &mut Suite) {
    let t = Instant::now();
    let z2 = Network::unit_lattice(2).unwrap();
    let mg1_fair = check_mg1(&mech_p_rotor_zd(&z2, 0.5).unwrap(), &z2, CHECK_TOL).unwrap();
    let mg1_biased = check_mg1(&mech_p_rotor_zd(&z2, 0.7).unwrap(), &z2, CHECK_TOL).unwrap();
    let c5 = Network::cycle(5).unwrap();
    let biased = mech_custom(&c5, vec![vec![0.9, 0.1], vec![0.9, 0.1]]).unwrap();
    let tv = stationarity_exact(&finite(&c5), &biased, 1, EnumerationCap::default()).unwrap();
    let rotor = mech_rotor_perm(&z2, &[2, 3, 1, 0]).unwrap();
    let elliptic = check_elliptic(&rotor);
    let pass = mg1_fair && !mg1_biased && tv > BIASED_TV_MIN && !elliptic;
    let detail = format!(
        "p-rotor p=0.7 MG1={mg1_biased} (p=1/2: {mg1_fair}); biased kernel TV {tv:.4} > {BIASED_TV_MIN}; deterministic rotor elliptic={elliptic}"
    );
    s.report(8, "negative controls", pass, detail, t);
}

fn c9_properties(s: &mut Suite, wilson_checked: usize) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    const STEPS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
    let mut bad_erasures = 0;
    for _ in 0..10_000 {
        let len = rng.random_range(0..1000);
        let mut p = (0i64, 0i64);
        let mut walk = vec![p];
        for _ in 0..len {
            let (dx, dy) = STEPS[rng.random_range(0..4)];
            p = (p.0 + dx, p.1 + dy);
            walk.push(p);
        }
        let path = loop_erase(&walk).unwrap();
        let ok = path[0] == walk[0]
            && path.last() == walk.last()
            && path.iter().collect::<HashSet<_>>().len() == path.len()
            && path.windows(2).all(|e| (e[0].0 - e[1].0).abs() + (e[0].1 - e[1].1).abs() == 1)
            && loop_erase(&path).unwrap() == path;
        bad_erasures += usize::from(!ok);
    }

    let mut bad_forests = 0;
    let mut forests = 0;
    for (_, g) in small_graphs() {
        for r in 0..g.len() {
            for _ in 0..2000 {
                let c = sample_wsf_plus(&g, r, &mut rng).unwrap();
                forests += 1;
                let out_degree_one = c.len() == g.len() && (0..g.len()).all(|x| c.slot(x) < g.neighbors(x).len());
                bad_forests += usize::from(!(out_degree_one && c.all_reach(&g, r)));
            }
        }
    }

    let identical = determinism();
    let pass = bad_erasures == 0 && bad_forests == 0 && identical.is_ok();
    let detail = format!(
        "loop erasure 10000 walks, {bad_erasures} violations; forest invariants on {} sampled forests, {bad_forests} violations; rerun byte equality: {}",
        forests + wilson_checked,
        match &identical {
            Ok(n) => format!("{n} files identical"),
            Err(e) => e.clone(),
        }
    );
    s.report(9, "property suites", pass, detail, t);
}

/// Runs the CLI twice per command with the same config and compares every
/// output except the timing sidecar.
fn determinism() -> Result<usize, String> {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let runs: [(&str, &str, &[&str]); 2] = [
        ("sample-forest", "k3_forest.toml", &["--trials", "5000"]),
        ("run-walk", "pq_rotor_z2.toml", &["--trials", "50", "--steps", "500", "--emit-trajectories"]),
    ];
    let mut compared = 0;
    for (cmd, cfg, extra) in runs {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for d in &dirs {
            let status = Command::new(env!("CARGO_BIN_EXE_rwlm"))
                .args([cmd, "--config", configs.join(cfg).to_str().unwrap(), "--out", d.path().to_str().unwrap()])
                .args(extra)
                .output()
                .map_err(|e| e.to_string())?
                .status;
            if status.code().is_none_or(|c| c > 1) {
                return Err(format!("{cmd} exited with {status}"));
            }
        }
        let mut stack = vec![dirs[0].path().to_path_buf()];
        while let Some(p) = stack.pop() {
            for e in fs::read_dir(&p).map_err(|e| e.to_string())? {
                let a = e.map_err(|e| e.to_string())?.path();
                if a.is_dir() {
                    stack.push(a);
                    continue;
                }
                if a.file_name().unwrap() == "timing.json" {
                    continue;
                }
                let b = dirs[1].path().join(a.strip_prefix(dirs[0].path()).unwrap());
                if fs::read(&a).ok() != fs::read(&b).ok() {
                    return Err(format!("{} differs", a.display()));
                }
                compared += 1;
            }
        }
    }
    Ok(compared)
}

fn main() {
    let mut s = Suite { failed: 0 };
    c1_stationarity(&mut s);
    let wilson_checked = c2_wilson(&mut s);
    c3_routes(&mut s);
    c4_diffusion(&mut s);
    c5_ergodic(&mut s);
    c6_triangular(&mut s);
    c7_emulation(&mut s);
    c8_negative(&mut s);
    c9_properties(&mut s, wilson_checked);
    println!("acceptance: {} of 9 criteria passed", 9 - s.failed);
    if s.failed > 0 {
        std::process::exit(1);
    }
}
