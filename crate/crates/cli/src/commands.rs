//! The four subcommands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use rwlm::forest::{
    enumerate_spanning_trees, exact_wsf_plus, sample_wsf_plus, wilson_rooted, wilson_transient_window, RotorConfig,
};
use rwlm::mechanism::{check_elliptic, check_mg1, check_mg2, check_t1, check_t1_finite, gamma_matrix, CHECK_TOL};
use rwlm::network::{expand_hidden, FiniteNetwork, Network, Topology, Vertex, Window, WindowGrid};
use rwlm::rng::trial_stream;
use rwlm::stats::{
    chi_square_gof, estimate_diffusion, martingale_drift, normality_surrogate, ChiSquare, ErgodicTarget, StatsReport,
};
use rwlm::walk::{emulate_equivalence, run_trials, EnvironmentKind, Trajectory};
use rwlm::Error;

use crate::config::{need, CheckName, EnvironmentKindName, ExperimentConfig, ForestKind, Format, StatsSection};
use crate::output::{flatten_csv, write_bundle, AbortCounts, Bundle, Content, TrialStreams};
use crate::CliError;

/// Command-line overrides of config values.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub emit_trajectories: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), CliError> {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            if t == 0 {
                return Err(CliError::Config("--trials: must be positive".into()));
            }
            if let Some(run) = cfg.run.as_mut() {
                run.trials = t;
            }
            if let Some(f) = cfg.forest.as_mut() {
                f.samples = t;
            }
        }
        if let Some(n) = self.steps {
            if let Some(run) = cfg.run.as_mut() {
                run.n_steps = n;
            }
        }
        if let Some(out) = &self.out {
            cfg.output.path = out.clone();
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub pass: bool,
    pub manifest_hash: String,
    pub dir: PathBuf,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
}

impl Check {
    fn bound(name: &str, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            pass: value <= threshold,
            value: Some(value),
            threshold: Some(threshold),
            detail: String::new(),
        }
    }

    fn flag(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), pass, value: None, threshold: None, detail: detail.into() }
    }
}

fn report_file(bundle: &mut Bundle, format: Format, stem: &str, value: &impl Serialize) -> Result<(), CliError> {
    match format {
        Format::Json => bundle.json(format!("{stem}.json"), value),
        Format::Csv => {
            let v = serde_json::to_value(value).map_err(|e| CliError::Output(e.to_string()))?;
            bundle.text(format!("{stem}.csv"), flatten_csv(&v));
            Ok(())
        }
    }
}

fn finish(cfg: &ExperimentConfig, bundle: Bundle, pass: bool) -> Result<Outcome, CliError> {
    let dir = cfg.output.path.clone();
    let manifest_hash = write_bundle(&dir, cfg, bundle)?;
    Ok(Outcome { pass, manifest_hash, dir })
}

fn lattice(net: Option<Network>, what: &str) -> Result<Network, CliError> {
    match net {
        Some(n) if n.is_lattice() => Ok(n),
        _ => Err(CliError::Config(format!("network.kind: {what} needs an infinite lattice"))),
    }
}

fn forest_key(fnet: &FiniteNetwork, edges: impl IntoIterator<Item = (usize, usize)>) -> String {
    edges.into_iter().map(|(x, y)| format!("{}>{}", fnet.node(x), fnet.node(y))).collect::<Vec<_>>().join(";")
}

fn rotor_edges(fnet: &FiniteNetwork, c: &RotorConfig) -> Vec<(usize, usize)> {
    (0..c.len()).map(|x| (x, c.target(fnet, x).unwrap())).collect()
}

#[derive(Serialize)]
struct ForestReport {
    kind: ForestKind,
    samples: usize,
    root: Vertex,
    distinct_outcomes: usize,
    exact: Option<String>,
    chi_square: Option<ChiSquare>,
    mean_z_attached_fraction: Option<f64>,
    mean_root_branch_length: Option<f64>,
    pass: bool,
}

pub fn sample_forest(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let fs = need(&cfg.forest, "forest")?;
    let built = cfg.build_network()?;
    let root = cfg.root()?;
    let mut bundle = Bundle::new("sample-forest");
    bundle.streams = Some(TrialStreams::new(cfg.seed, fs.samples));
    let mut edge_lists = String::new();
    let report = if let Some(fnet) = &built.finite {
        let r = fnet.site_index(&root).map_err(|e| CliError::Config(format!("environment.root: {e}")))?;
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for i in 0..fs.samples {
            let mut rng = trial_stream(cfg.seed, i as u64);
            let (key, text) = match fs.kind {
                ForestKind::Tree => {
                    let t = wilson_rooted(fnet, r, None, &mut rng)?;
                    t.validate_tree(fnet)?;
                    (forest_key(fnet, t.edges()), t.to_edge_list(fnet))
                }
                ForestKind::WsfPlus => {
                    let c = sample_wsf_plus(fnet, r, &mut rng)?;
                    if !c.all_reach(fnet, r) {
                        return Err(Error::Precondition(format!("sample {i} does not reach the root")).into());
                    }
                    let edges = rotor_edges(fnet, &c);
                    let text = edges.iter().map(|&(x, y)| format!("{} -> {}\n", fnet.node(x), fnet.node(y))).collect();
                    (forest_key(fnet, edges), text)
                }
            };
            if i < fs.write_edge_lists {
                let _ = write!(edge_lists, "## sample {i}\n{text}");
            }
            *counts.entry(key).or_default() += 1;
        }
        let exact = match cfg.enumeration_cap() {
            None => Err("no [enumeration] section".to_string()),
            Some(cap) => {
                let law = match fs.kind {
                    ForestKind::Tree => enumerate_spanning_trees(fnet, r, cap)
                        .map(|d| d.entries().iter().map(|(t, p)| (forest_key(fnet, t.edges()), *p)).collect()),
                    ForestKind::WsfPlus => exact_wsf_plus(fnet, r, cap).map(|d| {
                        d.entries().iter().map(|(c, p)| (forest_key(fnet, rotor_edges(fnet, c)), *p)).collect()
                    }),
                };
                match law {
                    Ok(l) => Ok::<BTreeMap<String, f64>, String>(l),
                    Err(Error::CapExceeded(m)) => Err(m),
                    Err(e) => return Err(e.into()),
                }
            }
        };
        let n = fs.samples as f64;
        let mut table = String::from("outcome,count,empirical,exact\n");
        let chi = match &exact {
            Ok(law) => {
                let mut keys: Vec<&String> = law.keys().collect();
                keys.extend(counts.keys().filter(|k| !law.contains_key(*k)));
                let c: Vec<u64> = keys.iter().map(|k| counts.get(*k).copied().unwrap_or(0)).collect();
                let p: Vec<f64> = keys.iter().map(|k| law.get(*k).copied().unwrap_or(0.0)).collect();
                for ((k, c), p) in keys.iter().zip(&c).zip(&p) {
                    let _ = writeln!(table, "{k},{c},{},{p}", *c as f64 / n);
                }
                Some(chi_square_gof(&c, &p)?)
            }
            Err(_) => {
                for (k, c) in &counts {
                    let _ = writeln!(table, "{k},{c},{},", *c as f64 / n);
                }
                None
            }
        };
        bundle.text("frequencies.csv", table);
        ForestReport {
            kind: fs.kind,
            samples: fs.samples,
            root,
            distinct_outcomes: counts.len(),
            exact: Some(match &exact {
                Ok(_) => "computed".into(),
                Err(m) => format!("skipped: {m}"),
            }),
            pass: chi.is_none_or(|c| c.passes()),
            chi_square: chi,
            mean_z_attached_fraction: None,
            mean_root_branch_length: None,
        }
    } else {
        let net = lattice(built.cayley, "sample-forest")?;
        if fs.kind != ForestKind::Tree {
            return Err(CliError::Config("forest.kind: lattice windows support \"tree\" only".into()));
        }
        let radius = fs.radius.ok_or_else(|| CliError::Config("forest.radius: required on lattices".into()))?;
        let window =
            Window::new(root.clone(), radius, 0).map_err(|e| CliError::Config(format!("forest.radius: {e}")))?;
        let (mut z_frac, mut branch) = (0.0, 0.0);
        for i in 0..fs.samples {
            let mut rng = trial_stream(cfg.seed, i as u64);
            let tf = wilson_transient_window(&net, &root, &window, &mut rng)?;
            tf.forest.validate(&tf.network)?;
            z_frac += tf.z_attached_fraction();
            branch += tf.root_branch.len() as f64;
            if i < fs.write_edge_lists {
                let _ = write!(edge_lists, "## sample {i}\n{}", tf.forest.to_edge_list(&tf.network));
            }
        }
        let n = fs.samples as f64;
        ForestReport {
            kind: fs.kind,
            samples: fs.samples,
            root,
            distinct_outcomes: 0,
            exact: None,
            chi_square: None,
            mean_z_attached_fraction: Some(z_frac / n),
            mean_root_branch_length: Some(branch / n),
            pass: true,
        }
    };
    if fs.write_edge_lists > 0 {
        bundle.text("forests.txt", edge_lists);
    }
    let pass = report.pass;
    report_file(&mut bundle, cfg.output.format, "report", &report)?;
    bundle.timing.insert("total".into(), started.elapsed().as_secs_f64());
    finish(cfg, bundle, pass)
}

fn read_rotor_file(path: &Path, grid: &WindowGrid) -> Result<RotorConfig, CliError> {
    let key = "environment.path";
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{key}: cannot read {}: {e}", path.display())))?;
    let d = grid.network().dim();
    let mut slots: Vec<Option<u8>> = vec![None; grid.cells()];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<i64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("{key}: line {}: {e}", lineno + 1)))?;
        if nums.len() != d + 1 || !(0..grid.network().degree() as i64).contains(&nums[d]) {
            return Err(CliError::Config(format!("{key}: line {}: expected {d} coordinates and a slot", lineno + 1)));
        }
        let v = Vertex(nums[..d].to_vec());
        let cell = grid
            .cell_of(&v)
            .filter(|&c| grid.is_site(c))
            .ok_or_else(|| CliError::Config(format!("{key}: line {}: vertex {v} is outside the window", lineno + 1)))?;
        slots[cell] = Some(nums[d] as u8);
    }
    let mut out = vec![0u8; grid.cells()];
    for c in grid.site_cells() {
        out[c] =
            slots[c].ok_or_else(|| CliError::Config(format!("{key}: no rotor for vertex {}", grid.vertex_of(c))))?;
    }
    Ok(RotorConfig(out))
}

fn trajectory_csv(grid: &WindowGrid, t: &Trajectory) -> String {
    let d = grid.network().dim();
    let mut s = String::from("step");
    for i in 1..=d {
        let _ = write!(s, ",x{i}");
    }
    s.push_str(",used_rotor_index\n");
    for (i, p) in t.positions(grid).into_iter().enumerate() {
        let _ = write!(s, "{i}");
        for c in grid.vertex_of(p).coords() {
            let _ = write!(s, ",{c}");
        }
        match t.slots.get(i) {
            Some(k) => {
                let _ = writeln!(s, ",{k}");
            }
            None => s.push_str(",\n"),
        }
    }
    s
}

fn ergodic_target(net: &Network, name: &str) -> Result<ErgodicTarget, CliError> {
    let axis = match name {
        "horizontal" => Some(0),
        "vertical" => Some(1),
        _ => name.strip_prefix("axis").and_then(|i| i.parse().ok()),
    };
    let axis = axis.ok_or_else(|| CliError::Config(format!("stats.ergodic: unknown predicate `{name}`")))?;
    ErgodicTarget::along_axis(net, axis).map_err(|e| CliError::Config(format!("stats.ergodic: {name}: {e}")))
}

#[derive(Serialize)]
struct WalkReport {
    mechanism: String,
    environment: EnvironmentKindName,
    target_source: &'static str,
    stats: StatsReport,
    checks: Vec<Check>,
    pass: bool,
}

fn walk_checks(st: &StatsSection, report: &StatsReport) -> Vec<Check> {
    let mut checks = vec![Check::bound("abort_rate", report.abort_rate, st.max_abort_rate)];
    match &report.diffusion {
        Some(d) => checks.push(Check::bound("diffusion_frobenius", d.frobenius_error, st.frobenius_tolerance)),
        None => checks.push(Check::flag("diffusion_frobenius", false, "no complete trials")),
    }
    if st.drift {
        checks.push(Check::flag("martingale_drift", report.drift.as_ref().is_some_and(|d| d.pass), ""));
    }
    if st.normality {
        checks.push(Check::flag("normality", report.normality.as_ref().is_some_and(|n| n.pass), ""));
    }
    checks
}

pub fn run_walk(cfg: &ExperimentConfig, emit_trajectories: bool) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let run = need(&cfg.run, "run")?;
    let st = need(&cfg.stats, "stats")?;
    let env = need(&cfg.environment, "environment")?;
    let built = cfg.build_network()?;
    let mech = cfg.build_mechanism(&built)?;
    let net = lattice(built.cayley, "run-walk")?;
    let root = cfg.root()?;
    let window =
        Window::new(root.clone(), run.radius, run.margin).map_err(|e| CliError::Config(format!("run.radius: {e}")))?;
    let grid = WindowGrid::new(&net, &window).map_err(|e| CliError::Config(format!("run: {e}")))?;
    let start = grid
        .cell_of(&root)
        .filter(|&c| grid.is_interior(c))
        .ok_or_else(|| CliError::Config("environment.root: not in the window interior".into()))?;
    let kind = match env.kind {
        EnvironmentKindName::WsfPlus => EnvironmentKind::WsfPlus,
        EnvironmentKindName::AllEast => EnvironmentKind::Constant(0),
        EnvironmentKindName::IidUniform => EnvironmentKind::IidMu,
        EnvironmentKindName::File => {
            EnvironmentKind::Explicit(Arc::new(read_rotor_file(env.path.as_ref().unwrap(), &grid)?))
        }
    };
    let trajs = run_trials(&grid, &kind, &mech, start, run.n_steps, run.trials, cfg.seed)?;
    let simulated = started.elapsed().as_secs_f64();

    let vectors = net.slot_vectors()?;
    let (target, target_source) = match check_mg2(&mech, &net, CHECK_TOL) {
        Ok(Some(g)) => (g, "mg2"),
        _ => (gamma_matrix(&net)?, "mu"),
    };
    let mut report = StatsReport::new(cfg.seed, &trajs, run.n_steps);
    report.window_radius = Some(run.radius);
    report.window_margin = Some(run.margin);
    report.diffusion = match estimate_diffusion(&trajs, &vectors, &target) {
        Ok(d) => Some(d),
        Err(Error::Empty(_)) => None,
        Err(e) => return Err(e.into()),
    };
    for name in &st.ergodic {
        let target = ergodic_target(&net, name)?;
        if report.truncated < report.trials {
            report.add_ergodic(&trajs, &target)?;
        }
    }
    if st.drift && report.truncated < report.trials {
        report.drift = Some(martingale_drift(&trajs, &vectors, &target)?);
    }
    if st.normality {
        let ends: Vec<Vec<f64>> = trajs.iter().filter(|t| !t.truncated).map(|t| t.displacement(&vectors)).collect();
        report.normality = match normality_surrogate(&ends) {
            Ok(n) => Some(n),
            Err(Error::Singular | Error::Precondition(_)) => None,
            Err(e) => return Err(e.into()),
        };
    }
    let checks = walk_checks(st, &report);
    let pass = checks.iter().all(|c| c.pass);

    let mut bundle = Bundle::new("run-walk");
    bundle.streams = Some(TrialStreams::new(cfg.seed, run.trials));
    bundle.aborts = Some(AbortCounts { trials: report.trials, truncated: report.truncated });
    if emit_trajectories {
        for (i, t) in trajs.iter().enumerate() {
            bundle.text(format!("trajectories/trial_{i:06}.csv"), trajectory_csv(&grid, t));
        }
    }
    let walk = WalkReport {
        mechanism: mech.name().to_string(),
        environment: env.kind,
        target_source,
        stats: report,
        checks,
        pass,
    };
    report_file(&mut bundle, cfg.output.format, "report", &walk)?;
    bundle.timing.insert("simulation".into(), simulated);
    bundle.timing.insert("total".into(), started.elapsed().as_secs_f64());
    finish(cfg, bundle, pass)
}

#[derive(Serialize)]
struct VerifyReport {
    checks: Vec<Check>,
    pass: bool,
}

fn shrink(e: Error) -> CliError {
    match e {
        Error::CapExceeded(m) => CliError::Config(format!(
            "enumeration: {m}; shrink the graph or raise enumeration.max_vertices / enumeration.max_configs"
        )),
        other => other.into(),
    }
}

pub fn verify(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let vs = need(&cfg.verify, "verify")?;
    if vs.checks.is_empty() {
        return Err(CliError::Config("verify.checks: empty".into()));
    }
    let built = cfg.build_network()?;
    let mut checks = Vec::new();
    for &c in &vs.checks {
        let mech = || cfg.build_mechanism(&built);
        let lat = || {
            built
                .cayley
                .clone()
                .filter(Network::is_lattice)
                .ok_or_else(|| CliError::Config(format!("verify.checks: {c:?} needs an infinite lattice")))
        };
        match c {
            CheckName::T1 => {
                let m = mech()?;
                let ok = match (&built.finite, &built.cayley) {
                    (Some(f), _) => check_t1_finite(&m, f, vs.tolerance)?,
                    (None, Some(n)) => check_t1(&m, n, vs.tolerance)?,
                    (None, None) => unreachable!(),
                };
                checks.push(Check::flag("t1", ok, ""));
            }
            CheckName::Elliptic => checks.push(Check::flag("elliptic", check_elliptic(&mech()?), "")),
            CheckName::Mg1 => checks.push(Check::flag("mg1", check_mg1(&mech()?, &lat()?, vs.tolerance)?, "")),
            CheckName::Mg2 => {
                let g = check_mg2(&mech()?, &lat()?, vs.tolerance)?;
                let detail = g.as_ref().map(|g| format!("{:?}", g.rows())).unwrap_or_default();
                checks.push(Check::flag("mg2", g.is_some(), detail));
            }
            CheckName::Stationarity => {
                let m = mech()?;
                let fnet = built
                    .finite
                    .as_ref()
                    .ok_or_else(|| CliError::Config("verify.checks: stationarity needs a finite network".into()))?;
                let cap = cfg
                    .enumeration_cap()
                    .ok_or_else(|| CliError::Config("enumeration: section required for stationarity".into()))?;
                for &k in &vs.stationarity_steps {
                    let tv = rwlm::stats::stationarity_exact(fnet, &m, k, cap).map_err(shrink)?;
                    checks.push(Check::bound(&format!("stationarity_k{k}"), tv, vs.stationarity_tolerance));
                }
            }
            CheckName::Emulation => {
                let net = lat()?;
                let hidden = cfg.build_hidden(&built)?;
                let mut failed = Vec::new();
                for s in 0..vs.emulation_seeds {
                    let seed = cfg.seed.wrapping_add(s);
                    if !emulate_equivalence(&net, &hidden, 0, 0, vs.emulation_steps, seed)? {
                        failed.push(seed);
                    }
                }
                let detail = format!(
                    "{} seeds (master seed + i) x {} steps; failing seeds {:?}",
                    vs.emulation_seeds, vs.emulation_steps, failed
                );
                checks.push(Check::flag("emulation", failed.is_empty(), detail));
            }
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    let mut bundle = Bundle::new("verify");
    report_file(&mut bundle, cfg.output.format, "verify", &VerifyReport { checks, pass })?;
    bundle.timing.insert("total".into(), started.elapsed().as_secs_f64());
    finish(cfg, bundle, pass)
}

#[derive(Serialize)]
struct ExpansionReport {
    states: Vec<String>,
    base_degree: usize,
    labels_per_vertex: usize,
    /// Generator of each expanded slot.
    generators: Vec<Vertex>,
    conductances: Vec<f64>,
    /// `h`: base neighbor slot of each expanded slot.
    label_map: Vec<usize>,
    /// Hidden state carried by each expanded slot.
    hidden_label: Vec<usize>,
    kernel: Vec<Vec<f64>>,
}

pub fn convert_hidden(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let built = cfg.build_network()?;
    let net = built
        .cayley
        .clone()
        .ok_or_else(|| CliError::Config("network.kind: convert-hidden needs a Cayley graph".into()))?;
    let hidden = cfg.build_hidden(&built)?;
    let ex = expand_hidden(&net, &hidden).map_err(|e| CliError::Config(format!("hidden: {e}")))?;
    let degree = ex.network.degree();
    let report = ExpansionReport {
        states: hidden.states().to_vec(),
        base_degree: net.degree(),
        labels_per_vertex: degree,
        generators: (0..degree).map(|s| ex.network.generators()[ex.network.slot_generator(s)].clone()).collect(),
        conductances: (0..degree).map(|s| ex.network.conductances()[ex.network.slot_generator(s)]).collect(),
        label_map: ex.label_map(),
        hidden_label: (0..degree).map(|s| ex.label(s)).collect(),
        kernel: ex.mechanism.identity_kernel().expect("expansions are transitive").rows(),
    };
    let mut bundle = Bundle::new("convert-hidden");
    bundle.files.push((
        "expansion.json".into(),
        Content::Json(serde_json::to_value(&report).map_err(|e| CliError::Output(e.to_string()))?),
    ));
    bundle.timing.insert("total".into(), started.elapsed().as_secs_f64());
    finish(cfg, bundle, true)
}
