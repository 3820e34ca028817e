//! Estimators and hypothesis checks over walk outputs.
//!
//! Reductions run over trials in index order, so results do not depend on
//! how the trials were scheduled.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::forest::{exact_wsf_plus, EnumerationCap, ExactDistribution, RotorConfig};
use crate::mechanism::{GammaMatrix, Mechanism};
use crate::network::{FiniteNetwork, Network};
use crate::walk::{scenery_apply, Trajectory};
use crate::{Error, Result};

/// Significance level of every chi-square test.
pub const SIGNIFICANCE: f64 = 1e-3;

/// Normality thresholds on whitened endpoint moments.
pub const MAX_ABS_SKEWNESS: f64 = 0.2;
pub const MAX_ABS_EXCESS_KURTOSIS: f64 = 0.4;

/// Smallest trial count accepted by [`normality_surrogate`].
pub const MIN_NORMALITY_TRIALS: usize = 500;

/// Fraction of truncated trials.
pub fn abort_rate(trajectories: &[Trajectory]) -> f64 {
    if trajectories.is_empty() {
        return 0.0;
    }
    trajectories.iter().filter(|t| t.truncated).count() as f64 / trajectories.len() as f64
}

fn complete(trajectories: &[Trajectory]) -> Result<(Vec<&Trajectory>, usize)> {
    let kept: Vec<&Trajectory> = trajectories.iter().filter(|t| !t.truncated).collect();
    let n = kept.first().ok_or(Error::Empty("no complete trajectories"))?.steps();
    if kept.iter().any(|t| t.steps() != n) {
        return Err(Error::Precondition("trajectories have different lengths".into()));
    }
    Ok((kept, n))
}

#[derive(Clone, Debug, Serialize)]
pub struct DiffusionEstimate {
    pub gamma_hat: GammaMatrix,
    pub target: GammaMatrix,
    pub frobenius_error: f64,
    /// `(1/(nT)) Σ X_n X_nᵀ`, reported alongside; noisier than `gamma_hat`.
    pub endpoint_covariance: GammaMatrix,
    pub trials: usize,
    pub steps: usize,
}

/// Γ̂ = (1/(nT)) Σ_trials Σ_i V_i V_iᵀ over the steps `V_i` of the complete
/// trajectories. `vectors[s]` is the embedded vector of slot `s`.
pub fn estimate_diffusion(
    trajectories: &[Trajectory],
    vectors: &[Vec<f64>],
    target: &GammaMatrix,
) -> Result<DiffusionEstimate> {
    let (kept, n) = complete(trajectories)?;
    if n == 0 {
        return Err(Error::Empty("trajectories have no steps"));
    }
    let d = target.dim();
    let mut counts = vec![0u64; vectors.len()];
    let mut endpoint = GammaMatrix::zeros(d);
    for t in &kept {
        for &s in &t.slots {
            counts[s as usize] += 1;
        }
        endpoint.add_outer(1.0, &t.displacement(vectors));
    }
    let scale = 1.0 / (n as f64 * kept.len() as f64);
    let mut gamma_hat = GammaMatrix::zeros(d);
    for (c, v) in counts.iter().zip(vectors) {
        gamma_hat.add_outer(*c as f64, v);
    }
    gamma_hat.scale(scale);
    endpoint.scale(scale);
    Ok(DiffusionEstimate {
        frobenius_error: gamma_hat.frobenius_distance(target),
        gamma_hat,
        target: target.clone(),
        endpoint_covariance: endpoint,
        trials: kept.len(),
        steps: n,
    })
}

/// Predicate over used rotors with its limiting frequency Σ μ₀ over the
/// slots satisfying it.
#[derive(Clone, Debug, Serialize)]
pub struct ErgodicTarget {
    pub name: String,
    pub slots: Vec<bool>,
    pub target: f64,
}

impl ErgodicTarget {
    pub fn new(name: impl Into<String>, slots: Vec<bool>, mu: &[f64]) -> Result<Self> {
        if slots.len() != mu.len() {
            return Err(Error::Precondition("predicate and μ cover different slots".into()));
        }
        let target = slots.iter().zip(mu).filter(|(s, _)| **s).map(|(_, m)| m).sum();
        Ok(ErgodicTarget { name: name.into(), slots, target })
    }

    /// Rotors along the `axis`-th coordinate (0-based) of a lattice.
    pub fn along_axis(net: &Network, axis: usize) -> Result<Self> {
        let slots =
            net.slot_vectors()?.iter().map(|v| v.iter().enumerate().all(|(i, c)| (i == axis) == (*c != 0.0))).collect();
        Self::new(format!("axis{}", axis + 1), slots, &net.mu_id())
    }

    pub fn always(net: &Network) -> Result<Self> {
        Self::new("always", vec![true; net.degree()], &net.mu_id())
    }
}

/// Fraction of steps whose used rotor satisfies the predicate.
pub fn ergodic_fraction(trajectory: &Trajectory, target: &ErgodicTarget) -> Result<f64> {
    if trajectory.slots.is_empty() {
        return Err(Error::Empty("no used rotors recorded"));
    }
    let hits = trajectory.slots.iter().filter(|&&s| target.slots[s as usize]).count();
    Ok(hits as f64 / trajectory.slots.len() as f64)
}

/// Pushes the exact WSF⁺ law at the identity through `k_steps` scenery
/// steps and returns the total variation distance to WSF⁺.
pub fn stationarity_exact(fnet: &FiniteNetwork, mech: &Mechanism, k_steps: usize, cap: EnumerationCap) -> Result<f64> {
    let t = fnet.cayley().ok_or_else(|| Error::Precondition("stationarity needs a finite Cayley graph".into()))?;
    let kernel = mech
        .identity_kernel()
        .ok_or_else(|| Error::Precondition("stationarity needs a transitive mechanism".into()))?;
    let id = t.identity;
    if kernel.size() != fnet.neighbors(id).len() {
        return Err(Error::Kernel("kernel size differs from the degree".into()));
    }
    let law = exact_wsf_plus(fnet, id, cap)?;
    let mut current: BTreeMap<RotorConfig, f64> = law.entries().iter().cloned().collect();
    for _ in 0..k_steps {
        let mut next = BTreeMap::new();
        for (cfg, p) in &current {
            for (k, &q) in kernel.row(cfg.slot(id)).iter().enumerate() {
                if q > 0.0 {
                    *next.entry(scenery_apply(t, cfg, k)).or_insert(0.0) += p * q;
                }
            }
        }
        current = next;
    }
    Ok(ExactDistribution::from_weights(current)?.total_variation(&law))
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftReport {
    pub mean: Vec<f64>,
    pub bound: Vec<f64>,
    pub trials: usize,
    pub steps: usize,
    pub pass: bool,
}

/// Mean of `X_n − X₀` over complete trials; passes iff every coordinate is
/// within `4·√(Γ_ii·n/T)`.
pub fn martingale_drift(trajectories: &[Trajectory], vectors: &[Vec<f64>], gamma: &GammaMatrix) -> Result<DriftReport> {
    let (kept, n) = complete(trajectories)?;
    let d = gamma.dim();
    let trials = kept.len();
    let mut mean = vec![0.0; d];
    for t in &kept {
        for (m, x) in mean.iter_mut().zip(t.displacement(vectors)) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= trials as f64);
    let bound: Vec<f64> = (0..d).map(|i| 4.0 * (gamma.get(i, i) * n as f64 / trials as f64).sqrt()).collect();
    let pass = mean.iter().zip(&bound).all(|(m, b)| m.abs() <= *b);
    Ok(DriftReport { mean, bound, trials, steps: n, pass })
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalityReport {
    pub skewness: Vec<f64>,
    pub excess_kurtosis: Vec<f64>,
    pub samples: usize,
    pub pass: bool,
}

/// Standardized skewness and excess kurtosis of the endpoints after
/// whitening by their sample covariance.
pub fn normality_surrogate(endpoints: &[Vec<f64>]) -> Result<NormalityReport> {
    let t = endpoints.len();
    if t < MIN_NORMALITY_TRIALS {
        return Err(Error::Precondition(format!("normality needs at least {MIN_NORMALITY_TRIALS} samples, got {t}")));
    }
    let d = endpoints[0].len();
    let rows: Vec<DVector<f64>> = endpoints.iter().map(|e| DVector::from_column_slice(e)).collect();
    let mean = rows.iter().fold(DVector::zeros(d), |acc, r| acc + r) / t as f64;
    let mut cov = DMatrix::zeros(d, d);
    for r in &rows {
        let c = r - &mean;
        cov += &c * c.transpose();
    }
    cov /= t as f64;
    let eig = SymmetricEigen::new(cov);
    let largest = eig.eigenvalues.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if eig.eigenvalues.iter().any(|&l| l <= 1e-12 * largest.max(1.0)) {
        return Err(Error::Singular);
    }
    let inv_sqrt = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * eig.eigenvectors.transpose();
    let mut m3 = vec![0.0; d];
    let mut m4 = vec![0.0; d];
    for r in &rows {
        let w = &inv_sqrt * (r - &mean);
        for i in 0..d {
            m3[i] += w[i].powi(3);
            m4[i] += w[i].powi(4);
        }
    }
    let skewness: Vec<f64> = m3.iter().map(|m| m / t as f64).collect();
    let excess_kurtosis: Vec<f64> = m4.iter().map(|m| m / t as f64 - 3.0).collect();
    let pass = skewness.iter().all(|s| s.abs() <= MAX_ABS_SKEWNESS)
        && excess_kurtosis.iter().all(|k| k.abs() <= MAX_ABS_EXCESS_KURTOSIS);
    Ok(NormalityReport { skewness, excess_kurtosis, samples: t, pass })
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquare {
    /// Not rejected at [`SIGNIFICANCE`].
    pub fn passes(&self) -> bool {
        self.p_value >= SIGNIFICANCE
    }
}

fn chi_square(statistic: f64, dof: usize) -> ChiSquare {
    let p_value = if dof == 0 {
        if statistic == 0.0 {
            1.0
        } else {
            0.0
        }
    } else if statistic.is_infinite() {
        0.0
    } else {
        ChiSquared::new(dof as f64).expect("positive degrees of freedom").sf(statistic)
    };
    ChiSquare { statistic, dof, p_value }
}

/// Goodness of fit of counts to probabilities. A count in a zero-probability
/// cell makes the statistic infinite.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> Result<ChiSquare> {
    if counts.len() != probs.len() {
        return Err(Error::Precondition("counts and probabilities differ in length".into()));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Empty("no samples"));
    }
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&c, &p) in counts.iter().zip(probs) {
        if p > 0.0 {
            let e = p * total as f64;
            stat += (c as f64 - e).powi(2) / e;
            cells += 1;
        } else if c > 0 {
            stat = f64::INFINITY;
        }
    }
    Ok(chi_square(stat, cells.saturating_sub(1)))
}

/// Two-sample homogeneity over common categories.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> Result<ChiSquare> {
    if a.len() != b.len() {
        return Err(Error::Precondition("samples cover different categories".into()));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Empty("no samples"));
    }
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        let pooled = (x + y) as f64 / (na + nb);
        if pooled == 0.0 {
            continue;
        }
        cells += 1;
        for (obs, n) in [(x as f64, na), (y as f64, nb)] {
            let e = pooled * n;
            stat += (obs - e).powi(2) / e;
        }
    }
    Ok(chi_square(stat, cells.saturating_sub(1)))
}

/// Counts of each outcome.
pub fn tally<K: Ord, I: IntoIterator<Item = K>>(samples: I) -> BTreeMap<K, u64> {
    let mut out = BTreeMap::new();
    for s in samples {
        *out.entry(s).or_insert(0) += 1;
    }
    out
}

/// Goodness of fit of sampled outcomes to an exact law. Outcomes outside
/// the support fail the test.
pub fn chi_square_exact<K: Ord + Clone>(counts: &BTreeMap<K, u64>, law: &ExactDistribution<K>) -> Result<ChiSquare> {
    let mut obs: Vec<u64> = law.entries().iter().map(|(k, _)| counts.get(k).copied().unwrap_or(0)).collect();
    let mut probs: Vec<f64> = law.entries().iter().map(|e| e.1).collect();
    let stray: u64 = counts.iter().filter(|(k, _)| law.prob(k) == 0.0).map(|e| e.1).sum();
    obs.push(stray);
    probs.push(0.0);
    chi_square_gof(&obs, &probs)
}

/// Two-sample homogeneity of sampled outcomes.
pub fn chi_square_samples<K: Ord + Clone>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> Result<ChiSquare> {
    let keys: std::collections::BTreeSet<&K> = a.keys().chain(b.keys()).collect();
    let ca: Vec<u64> = keys.iter().map(|k| a.get(*k).copied().unwrap_or(0)).collect();
    let cb: Vec<u64> = keys.iter().map(|k| b.get(*k).copied().unwrap_or(0)).collect();
    chi_square_homogeneity(&ca, &cb)
}

/// Everything a run reports, with what is needed to rerun it.
#[derive(Clone, Debug, Default, Serialize)]
pub struct StatsReport {
    pub seed: u64,
    pub trials: usize,
    pub steps: usize,
    pub window_radius: Option<u32>,
    pub window_margin: Option<u32>,
    pub truncated: usize,
    pub abort_rate: f64,
    pub diffusion: Option<DiffusionEstimate>,
    pub ergodic: Vec<ErgodicEntry>,
    pub drift: Option<DriftReport>,
    pub normality: Option<NormalityReport>,
    pub tv_distances: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErgodicEntry {
    pub name: String,
    pub target: f64,
    pub mean_fraction: f64,
    pub error: f64,
}

impl StatsReport {
    pub fn new(seed: u64, trajectories: &[Trajectory], steps: usize) -> Self {
        StatsReport {
            seed,
            trials: trajectories.len(),
            steps,
            truncated: trajectories.iter().filter(|t| t.truncated).count(),
            abort_rate: abort_rate(trajectories),
            ..Default::default()
        }
    }

    /// Adds the mean ergodic fraction over complete trajectories.
    pub fn add_ergodic(&mut self, trajectories: &[Trajectory], target: &ErgodicTarget) -> Result<&ErgodicEntry> {
        let (kept, _) = complete(trajectories)?;
        let fractions = kept.iter().map(|t| ergodic_fraction(t, target)).collect::<Result<Vec<_>>>()?;
        let mean_fraction = fractions.iter().sum::<f64>() / fractions.len() as f64;
        self.ergodic.push(ErgodicEntry {
            name: target.name.clone(),
            target: target.target,
            mean_fraction,
            error: (mean_fraction - target.target).abs(),
        });
        Ok(self.ergodic.last().unwrap())
    }
}
