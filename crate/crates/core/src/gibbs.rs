//! Metropolis sampling of the Gibbs measure `mu_N ∝ exp(-N H_N^eps)` and the
//! estimators built on its samples: one-particle radial/grid densities,
//! scaled potential energies, and the trial-state free-energy upper bound.
//!
//! One chain step is a sweep of N single-particle Gaussian moves accepted
//! with probability `min(1, exp(-N ΔH))`. Chains are bit-reproducible for a
//! fixed seed; the proposal scale is tuned towards acceptance 0.3 during
//! burn-in only, so detailed balance holds over the measurement phase.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    energy_of_points, point_terms, Configuration, CorrelationFactor, PlasmaParams, Point2,
    Potential,
};
use crate::seed::split_seed;

const TUNE_INTERVAL: usize = 50;
const TARGET_ACCEPTANCE: f64 = 0.3;

/// Options of a Metropolis run.
#[derive(Clone, Debug, Serialize)]
pub struct ChainOptions {
    /// Total sweeps, including burn-in.
    pub n_steps: usize,
    pub burn_in: usize,
    /// Keep every `thinning`-th post-burn-in sweep.
    pub thinning: usize,
    /// Scale of the single-particle Gaussian proposal (tuned during burn-in).
    pub proposal_sigma: f64,
    pub seed: u64,
    pub n_chains: usize,
}

impl ChainOptions {
    /// Defaults: `sigma = 0.6 sqrt(T l)`, 20% burn-in, one chain.
    pub fn default_for(p: &PlasmaParams, n_steps: usize) -> Self {
        ChainOptions {
            n_steps,
            burn_in: n_steps / 5,
            thinning: 10,
            proposal_sigma: 0.6 * (p.temperature() * f64::from(p.ell)).sqrt(),
            seed: 0,
            n_chains: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps <= self.burn_in {
            return Err(Error::InvalidParams(format!(
                "n_steps ({}) must exceed burn_in ({})",
                self.n_steps, self.burn_in
            )));
        }
        if self.thinning < 1 {
            return Err(Error::InvalidParams("thinning must be >= 1".into()));
        }
        if !(self.proposal_sigma > 0.0) {
            return Err(Error::InvalidParams(format!(
                "proposal_sigma must be > 0, got {}",
                self.proposal_sigma
            )));
        }
        if self.n_chains < 1 {
            return Err(Error::InvalidParams("n_chains must be >= 1".into()));
        }
        Ok(())
    }
}

/// Output of one chain.
#[derive(Clone, Debug)]
pub struct ChainOutput {
    /// Post-burn-in configurations, every `thinning`-th sweep;
    /// `floor((n_steps - burn_in) / thinning)` of them.
    pub samples: Vec<Configuration>,
    /// Accepted fraction of the post-burn-in proposals.
    pub acceptance_rate: f64,
    /// Total energy after each post-burn-in sweep.
    pub energy_trace: Vec<f64>,
    pub seed: u64,
    /// Proposal scale in effect after burn-in tuning froze.
    pub tuned_sigma: f64,
}

impl ChainOutput {
    /// Flags chains mixing too slowly or too noisily for reliable estimates.
    pub fn acceptance_warning(&self) -> bool {
        !(0.1..=0.7).contains(&self.acceptance_rate)
    }
}

/// Runs one Metropolis chain targeting `exp(-N H)`. Errors if `init` has
/// infinite energy (zero Gibbs weight).
pub fn sample(
    p: &PlasmaParams,
    f: &dyn CorrelationFactor,
    init: &Configuration,
    opts: &ChainOptions,
) -> Result<ChainOutput> {
    opts.validate()?;
    assert_eq!(init.len(), p.n, "initial configuration length must equal params.n");
    if !energy_of_points(init.points(), p, f).total.is_finite() {
        return Err(Error::InfiniteInitialEnergy);
    }

    let n = p.n;
    let nf = n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut pts = init.points().to_vec();
    let mut sigma = opts.proposal_sigma;

    let kept = (opts.n_steps - opts.burn_in) / opts.thinning;
    let mut samples = Vec::with_capacity(kept);
    let mut energy_trace = Vec::with_capacity(opts.n_steps - opts.burn_in);
    let mut accepted: u64 = 0;
    let mut proposals: u64 = 0;
    let mut tune_accepted: usize = 0;
    let mut tune_proposals: usize = 0;

    for sweep in 0..opts.n_steps {
        let tuning = sweep < opts.burn_in;
        for j in 0..n {
            let old = pts[j];
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            let t_old = point_terms(&pts, j, p, f);
            pts[j] = Point2::new(old.x + sigma * dx, old.y + sigma * dy);
            let t_new = point_terms(&pts, j, p, f);
            let dh = t_new - t_old;
            let accept = dh <= 0.0 || rng.random::<f64>() < (-nf * dh).exp();
            if !accept {
                pts[j] = old;
            }
            if tuning {
                tune_proposals += 1;
                tune_accepted += accept as usize;
            } else {
                proposals += 1;
                accepted += accept as u64;
            }
        }
        if tuning && (sweep + 1) % TUNE_INTERVAL == 0 {
            let rate = tune_accepted as f64 / tune_proposals as f64;
            if rate > TARGET_ACCEPTANCE + 0.05 {
                sigma *= 1.1;
            } else if rate < TARGET_ACCEPTANCE - 0.05 {
                sigma /= 1.1;
            }
            tune_accepted = 0;
            tune_proposals = 0;
        }
        if sweep >= opts.burn_in {
            energy_trace.push(energy_of_points(&pts, p, f).total);
            if (sweep - opts.burn_in + 1) % opts.thinning == 0 {
                samples.push(Configuration::new(pts.clone())?);
            }
        }
    }

    Ok(ChainOutput {
        samples,
        acceptance_rate: accepted as f64 / proposals as f64,
        energy_trace,
        seed: opts.seed,
        tuned_sigma: sigma,
    })
}

/// Runs `opts.n_chains` chains in parallel with seeds split from `opts.seed`.
/// Output order is by chain index, independent of scheduling.
pub fn run_chains(
    p: &PlasmaParams,
    f: &dyn CorrelationFactor,
    init: &Configuration,
    opts: &ChainOptions,
) -> Result<Vec<ChainOutput>> {
    opts.validate()?;
    (0..opts.n_chains)
        .into_par_iter()
        .map(|c| {
            let mut o = opts.clone();
            o.seed = split_seed(opts.seed, c as u64);
            sample(p, f, init, &o)
        })
        .collect()
}

/// Histogram estimate of the one-particle marginal.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityEstimate {
    /// Rotation-averaged density over radial bins.
    Radial {
        bin_edges: Vec<f64>,
        counts: Vec<u64>,
        /// Density per unit area in each annulus.
        values: Vec<f64>,
        /// Binomial standard error of each value (autocorrelation ignored).
        standard_errors: Vec<f64>,
        total_mass: f64,
    },
    /// Plain 2D cell histogram.
    Grid {
        x_min: f64,
        y_min: f64,
        cell: f64,
        nx: usize,
        ny: usize,
        counts: Vec<u64>,
        values: Vec<f64>,
        total_mass: f64,
    },
}

impl DensityEstimate {
    pub fn total_mass(&self) -> f64 {
        match self {
            DensityEstimate::Radial { total_mass, .. } => *total_mass,
            DensityEstimate::Grid { total_mass, .. } => *total_mass,
        }
    }
}

fn pooled_points(samples: &[Configuration]) -> Result<impl Iterator<Item = Point2> + '_> {
    if samples.is_empty() {
        return Err(Error::InvalidParams("no samples to estimate from".into()));
    }
    Ok(samples.iter().flat_map(|c| c.points().iter().copied()))
}

/// Radial histogram of all points pooled across samples, normalized so that
/// `sum_k value_k * area_k = 1`. Errors if more than 0.1% of the points fall
/// beyond `r_max`.
pub fn estimate_radial_density(
    samples: &[Configuration],
    bins: usize,
    r_max: f64,
) -> Result<DensityEstimate> {
    if bins < 1 || !(r_max > 0.0) {
        return Err(Error::InvalidParams(
            "radial histogram needs bins >= 1 and r_max > 0".into(),
        ));
    }
    let mut counts = vec![0u64; bins];
    let mut excluded: u64 = 0;
    let mut total: u64 = 0;
    let dr = r_max / bins as f64;
    for z in pooled_points(samples)? {
        total += 1;
        let r = z.norm();
        if r > r_max {
            excluded += 1;
        } else {
            counts[((r / dr) as usize).min(bins - 1)] += 1;
        }
    }
    let excluded_fraction = excluded as f64 / total as f64;
    if excluded_fraction > 1e-3 {
        return Err(Error::RangeExcludesPoints { excluded_fraction });
    }

    let included = (total - excluded) as f64;
    let bin_edges: Vec<f64> = (0..=bins).map(|k| k as f64 * dr).collect();
    let mut values = Vec::with_capacity(bins);
    let mut standard_errors = Vec::with_capacity(bins);
    let mut total_mass = 0.0;
    for k in 0..bins {
        let area = std::f64::consts::PI * (bin_edges[k + 1].powi(2) - bin_edges[k].powi(2));
        let p_hat = counts[k] as f64 / included;
        values.push(p_hat / area);
        standard_errors.push((p_hat * (1.0 - p_hat) / included).sqrt() / area);
        total_mass += p_hat;
    }
    Ok(DensityEstimate::Radial {
        bin_edges,
        counts,
        values,
        standard_errors,
        total_mass,
    })
}

/// 2D cell histogram over `[x_min, x_min + nx h] x [y_min, y_min + ny h]`,
/// normalized so that `sum values * h^2 = 1`. Same exclusion rule as the
/// radial estimator.
pub fn estimate_grid_density(
    samples: &[Configuration],
    x_min: f64,
    y_min: f64,
    cell: f64,
    nx: usize,
    ny: usize,
) -> Result<DensityEstimate> {
    if nx < 1 || ny < 1 || !(cell > 0.0) {
        return Err(Error::InvalidParams(
            "grid histogram needs nx, ny >= 1 and cell > 0".into(),
        ));
    }
    let mut counts = vec![0u64; nx * ny];
    let mut excluded: u64 = 0;
    let mut total: u64 = 0;
    for z in pooled_points(samples)? {
        total += 1;
        let fx = (z.x - x_min) / cell;
        let fy = (z.y - y_min) / cell;
        if fx < 0.0 || fy < 0.0 || fx >= nx as f64 || fy >= ny as f64 {
            excluded += 1;
        } else {
            counts[fy as usize * nx + fx as usize] += 1;
        }
    }
    let excluded_fraction = excluded as f64 / total as f64;
    if excluded_fraction > 1e-3 {
        return Err(Error::RangeExcludesPoints { excluded_fraction });
    }
    let included = (total - excluded) as f64;
    let values: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / included / (cell * cell))
        .collect();
    let total_mass = values.iter().map(|v| v * cell * cell).sum();
    Ok(DensityEstimate::Grid {
        x_min,
        y_min,
        cell,
        nx,
        ny,
        counts,
        values,
        total_mass,
    })
}

/// Mean of `xs` and its batch-means standard error.
pub fn mean_and_batch_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len();
    assert!(m > 0, "empty series");
    let mean = xs.iter().sum::<f64>() / m as f64;
    if m < 4 {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m.max(2) - 1) as f64;
        return (mean, (var / m as f64).sqrt());
    }
    let n_batches = (m as f64).sqrt().floor() as usize;
    let batch = m / n_batches;
    let batch_means: Vec<f64> = (0..n_batches)
        .map(|b| xs[b * batch..(b + 1) * batch].iter().sum::<f64>() / batch as f64)
        .collect();
    let bm = batch_means.iter().sum::<f64>() / n_batches as f64;
    let var = batch_means.iter().map(|x| (x - bm).powi(2)).sum::<f64>() / (n_batches - 1) as f64;
    (mean, (var / n_batches as f64).sqrt())
}

/// Monte Carlo estimate of `int V d(mu_N^(1))`: chain average of
/// `(1/N) sum_j V(z_j)` with a batch-means standard error.
pub fn estimate_scaled_energy(samples: &[Configuration], v: &Potential) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidParams("no samples to estimate from".into()));
    }
    let stats: Vec<f64> = samples
        .iter()
        .map(|c| {
            c.points().iter().map(|&z| v.value(z)).sum::<f64>() / c.len() as f64
        })
        .collect();
    Ok(mean_and_batch_se(&stats))
}

/// Free-energy upper bound from the trial state that smears a configuration
/// `z0` over disks of radius `eta`:
///
/// ```text
/// F_N <= sum_j (|z_j|^2 + eta^2/2 + eps U(z_j)) + coulomb(z0) + corr(z0)
///        - log(pi eta^2)
/// ```
///
/// The `eps U` term is evaluated at the disk centers; the smearing correction
/// is `O(eps eta^2 ||ΔU||)`, inside the `O(log N)` slack of the bound.
#[derive(Clone, Debug, Serialize)]
pub struct FreeEnergyBound {
    pub eta: f64,
    /// `-log(pi eta^2)`, the `-TS` term at `T = 1/N`.
    pub entropy_term: f64,
    /// One-body part: confinement of the smeared disks plus the `eps U` term.
    pub confinement_term: f64,
    /// Coulomb plus correlation energy of the centers (superharmonicity makes
    /// smearing only lower these).
    pub interaction_term: f64,
    pub upper_bound: f64,
}

/// `eta = (2N)^{-1/2}`, the scale balancing smearing energy against entropy.
pub fn default_eta(n: usize) -> f64 {
    1.0 / (2.0 * n as f64).sqrt()
}

pub fn trial_free_energy_upper_bound(
    z0: &Configuration,
    p: &PlasmaParams,
    f: &dyn CorrelationFactor,
    eta: f64,
) -> Result<FreeEnergyBound> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParams(format!("eta must be > 0, got {eta}")));
    }
    assert_eq!(z0.len(), p.n, "configuration length must equal params.n");
    let eb = energy_of_points(z0.points(), p, f);
    if !eb.total.is_finite() {
        return Err(Error::InfiniteInitialEnergy);
    }
    let n = p.n as f64;
    let confinement_term = eb.confinement + eb.perturbation + n * eta * eta / 2.0;
    let interaction_term = eb.coulomb + eb.correlation;
    let entropy_term = -(std::f64::consts::PI * eta * eta).ln();
    Ok(FreeEnergyBound {
        eta,
        entropy_term,
        confinement_term,
        interaction_term,
        upper_bound: confinement_term + interaction_term + entropy_term,
    })
}

/// True iff the chain's mean energy is consistent with `e_min` being a lower
/// bound: `mean >= e_min - 3 se`. The only computable piece of the
/// free-energy lower-bound chain.
pub fn ground_state_energy_gap_check(chain: &ChainOutput, e_min: f64) -> bool {
    let (mean, se) = mean_and_batch_se(&chain.energy_trace);
    mean >= e_min - 3.0 * se
}
