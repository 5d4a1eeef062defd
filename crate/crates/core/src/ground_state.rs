//! Ground-state search and audits: finds (approximate) minimizers of the
//! plasma Hamiltonian, checks the minimal-separation lower bound
//! `min dist >= sqrt(l/(N-1)) (1 - 4 eps^{1/2} ||ΔU||^{1/2})` against them,
//! and builds the smeared one-particle density whose sup realizes the weak
//! incompressibility bound.
//!
//! Global minimality is never certified (2D Coulomb crystallization is out of
//! reach); audits are reported against the best local minimum over all
//! restarts, with the restart count recorded.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    energy_of_points, gradient_of_points, point_terms, Configuration, CorrelationFactor,
    EnergyBreakdown, PlasmaParams, Point2,
};
use crate::seed::split_seed;

/// Options of the multi-start descent.
#[derive(Clone, Debug, Serialize)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    /// Convergence threshold on `max_j |grad_j H|`.
    pub gradient_tolerance: f64,
    /// Number of independent Gaussian-cloud starts.
    pub restarts: usize,
    /// Enable single-point relocation sweeps between descent phases.
    pub relocation_moves: bool,
    pub seed: u64,
}

impl MinimizeOptions {
    /// Defaults: gradient tolerance `1e-8 * N`, 8 restarts, relocation on.
    pub fn for_params(p: &PlasmaParams) -> Self {
        MinimizeOptions {
            max_iterations: 50_000,
            gradient_tolerance: 1e-8 * p.n as f64,
            restarts: 8,
            relocation_moves: true,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidParams("max_iterations must be >= 1".into()));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::InvalidParams(
                "gradient_tolerance must be > 0".into(),
            ));
        }
        if self.restarts < 1 {
            return Err(Error::InvalidParams("restarts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Result of a minimization: best configuration over all restarts plus
/// optimizer metadata. `converged = false` flags a best run that stalled
/// before reaching the gradient tolerance; the best-so-far configuration is
/// still returned.
#[derive(Clone, Debug, Serialize)]
pub struct MinimizeOutcome {
    pub configuration: Configuration,
    pub energy: EnergyBreakdown,
    pub converged: bool,
    pub gradient_sup_norm: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub best_seed: u64,
    /// Energies of the accepted steps of the best run, strictly decreasing.
    #[serde(skip)]
    pub energy_trace: Vec<f64>,
}

/// i.i.d. Gaussian cloud with per-coordinate variance `variance`.
pub fn gaussian_cloud(n: usize, variance: f64, seed: u64) -> Configuration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = variance.sqrt();
    let points = (0..n)
        .map(|_| {
            let x: f64 = rng.sample(StandardNormal);
            let y: f64 = rng.sample(StandardNormal);
            Point2::new(std * x, std * y)
        })
        .collect();
    Configuration::new(points).expect("gaussian cloud is finite and nonempty")
}

struct SingleRun {
    points: Vec<Point2>,
    total: f64,
    converged: bool,
    gradient_sup_norm: f64,
    iterations: usize,
    seed: u64,
    trace: Vec<f64>,
}

/// Minimizes `H` by multi-start gradient descent with Armijo backtracking
/// (factor 0.5, slope 1e-4) and optional relocation sweeps. Restarts run in
/// parallel with seeds split from `opts.seed`; the winner is selected by
/// lexicographic `(energy, seed)` order, independent of thread scheduling.
pub fn minimize(
    p: &PlasmaParams,
    f: &dyn CorrelationFactor,
    opts: &MinimizeOptions,
) -> Result<MinimizeOutcome> {
    opts.validate()?;
    let runs: Vec<SingleRun> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| minimize_single(p, f, opts, split_seed(opts.seed, r as u64)))
        .collect::<Result<Vec<_>>>()?;

    let best = runs
        .into_iter()
        .min_by(|a, b| a.total.total_cmp(&b.total).then(a.seed.cmp(&b.seed)))
        .expect("restarts >= 1");

    let configuration = Configuration::new(best.points)?;
    let energy = energy_of_points(configuration.points(), p, f);
    Ok(MinimizeOutcome {
        configuration,
        energy,
        converged: best.converged,
        gradient_sup_norm: best.gradient_sup_norm,
        iterations: best.iterations,
        restarts: opts.restarts,
        best_seed: best.seed,
        energy_trace: best.trace,
    })
}

fn minimize_single(
    p: &PlasmaParams,
    f: &dyn CorrelationFactor,
    opts: &MinimizeOptions,
    seed: u64,
) -> Result<SingleRun> {
    let n = p.n;
    let mut pts = {
        // resample the start until the energy is finite (coincidences and
        // factor zeros have probability zero, but stay safe)
        let mut attempt = 0;
        loop {
            let cloud = gaussian_cloud(n, f64::from(p.ell) / 2.0, split_seed(seed, attempt));
            if energy_of_points(cloud.points(), p, f).total.is_finite() {
                break cloud.into_points();
            }
            attempt += 1;
            if attempt > 64 {
                return Err(Error::InfiniteInitialEnergy);
            }
        }
    };

    let mut e = energy_of_points(&pts, p, f).total;
    let mut trace = vec![e];
    let mut step = 0.25f64;
    let mut iterations = 0;
    let mut grad_sup;
    let mut relocation_rounds = 0;

    'outer: loop {
        // descent phase
        let mut stalled = false;
        loop {
            let grads = gradient_of_points(&pts, p, f)?;
            grad_sup = grads.iter().map(|g| g.norm()).fold(0.0, f64::max);
            if grad_sup <= opts.gradient_tolerance || iterations >= opts.max_iterations {
                break;
            }
            let g2: f64 = grads.iter().map(|g| g.norm_sq()).sum();
            let mut t = (step * 2.0).min(10.0);
            let mut accepted = false;
            while t >= 1e-18 {
                let trial: Vec<Point2> = pts
                    .iter()
                    .zip(&grads)
                    .map(|(z, g)| *z - *g * t)
                    .collect();
                let et = energy_of_points(&trial, p, f).total;
                if et < e && et <= e - 1e-4 * t * g2 {
                    pts = trial;
                    e = et;
                    step = t;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            iterations += 1;
            if accepted {
                trace.push(e);
            } else {
                stalled = true;
                break;
            }
        }

        if !opts.relocation_moves || n < 2 || iterations >= opts.max_iterations {
            break 'outer;
        }
        relocation_rounds += 1;
        if relocation_rounds > 50 {
            break 'outer;
        }
        if !relocation_sweep(&mut pts, &mut e, p, f, &mut trace) {
            break 'outer;
        }
        let _ = stalled; // a successful relocation restarts the descent
    }

    Ok(SingleRun {
        total: e,
        converged: grad_sup <= opts.gradient_tolerance,
        gradient_sup_norm: grad_sup,
        iterations,
        seed,
        trace,
        points: pts,
    })
}

/// One sweep of single-point relocation moves: each point in turn is tested
/// on 16 equally spaced positions of the ring of radius `L0 = sqrt(l/(N-1))`
/// around its nearest neighbor (the current position competes as well) and
/// moved there if the energy strictly decreases. Returns whether any move
/// was accepted.
fn relocation_sweep(
    pts: &mut [Point2],
    e: &mut f64,
    p: &PlasmaParams,
    f: &dyn CorrelationFactor,
    trace: &mut Vec<f64>,
) -> bool {
    let n = pts.len();
    let l0 = (f64::from(p.ell) / (n - 1) as f64).sqrt();
    let mut improved = false;
    for j in 0..n {
        let mut nearest = usize::MAX;
        let mut best_d2 = f64::INFINITY;
        for (i, &zi) in pts.iter().enumerate() {
            if i != j {
                let d2 = (zi - pts[j]).norm_sq();
                if d2 < best_d2 {
                    best_d2 = d2;
                    nearest = i;
                }
            }
        }
        let center = pts[nearest];
        let base = point_terms(pts, j, p, f);
        let old = pts[j];
        let mut best_delta = 0.0;
        let mut best_pos = None;
        for a in 0..16 {
            let theta = 2.0 * std::f64::consts::PI * a as f64 / 16.0;
            let cand = center + Point2::new(l0 * theta.cos(), l0 * theta.sin());
            pts[j] = cand;
            let delta = point_terms(pts, j, p, f) - base;
            if delta < best_delta {
                best_delta = delta;
                best_pos = Some(cand);
            }
        }
        pts[j] = old;
        if let Some(pos) = best_pos {
            pts[j] = pos;
            *e += best_delta;
            trace.push(*e);
            improved = true;
        }
    }
    improved
}

/// Exact minimum over all pairwise distances.
pub fn min_pairwise_distance(cfg: &Configuration) -> Result<f64> {
    let pts = cfg.points();
    if pts.len() < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            got: pts.len(),
        });
    }
    let mut min_d2 = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            min_d2 = min_d2.min((pts[i] - pts[j]).norm_sq());
        }
    }
    Ok(min_d2.sqrt())
}

/// Outcome of checking the minimal-separation bound on a configuration.
#[derive(Clone, Debug, Serialize)]
pub struct SeparationAudit {
    pub min_distance: f64,
    /// `L0 = sqrt(l/(N-1))`.
    pub bound_l0: f64,
    /// `L_delta = L0 (1 - 4 eps^{1/2} ||ΔU||_inf^{1/2})`.
    pub bound_l_delta: f64,
    /// Multiplicative tolerance absorbing finite optimizer accuracy.
    pub slack: f64,
    pub passed: bool,
}

/// Checks `min dist >= L_delta (1 - slack)` on `cfg`, which is expected to be
/// a minimizer of the Hamiltonian for `p`. Errors when the perturbation is so
/// large that the bound is vacuous (`delta >= 1`).
pub fn audit_separation(cfg: &Configuration, p: &PlasmaParams, slack: f64) -> Result<SeparationAudit> {
    if !(0.0..1.0).contains(&slack) {
        return Err(Error::InvalidParams(format!(
            "slack must lie in [0, 1), got {slack}"
        )));
    }
    let min_distance = min_pairwise_distance(cfg)?;
    let delta = 4.0 * p.epsilon.sqrt() * p.u.laplacian_sup_norm().sqrt();
    if delta >= 1.0 {
        return Err(Error::VacuousBound { delta });
    }
    let bound_l0 = (f64::from(p.ell) / (p.n - 1) as f64).sqrt();
    let bound_l_delta = bound_l0 * (1.0 - delta);
    Ok(SeparationAudit {
        min_distance,
        bound_l0,
        bound_l_delta,
        slack,
        passed: min_distance >= bound_l_delta * (1.0 - slack),
    })
}

/// The empirical measure of `centers` with each point mass replaced by a
/// normalized indicator of the closed disk of radius `radius`:
/// `(1/N) sum_j (pi L^2)^{-1} 1_{B(z_j, L)}`. Its integral is 1 by
/// construction.
#[derive(Clone, Debug, Serialize)]
pub struct SmearedDensity {
    centers: Configuration,
    radius: f64,
}

impl SmearedDensity {
    pub fn new(centers: Configuration, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParams(format!(
                "smearing radius must be > 0, got {radius}"
            )));
        }
        Ok(SmearedDensity { centers, radius })
    }

    pub fn centers(&self) -> &Configuration {
        &self.centers
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn peak(&self) -> f64 {
        let n = self.centers.len() as f64;
        1.0 / (n * std::f64::consts::PI * self.radius * self.radius)
    }

    pub fn value(&self, z: Point2) -> f64 {
        let l2 = self.radius * self.radius;
        let overlap = self
            .centers
            .points()
            .iter()
            .filter(|c| (z - **c).norm_sq() <= l2)
            .count();
        overlap as f64 * self.peak()
    }

    /// Essential sup of the density, computed exactly: the maximal disk
    /// overlap depth is attained at a center or at an intersection point of
    /// two disk boundaries, so it suffices to scan those candidates. Touching
    /// disks (distance exactly `2L`) overlap on a null set and do not count.
    pub fn sup_bound(&self) -> f64 {
        let pts = self.centers.points();
        let l = self.radius;
        let l2_closed = l * l * (1.0 + 1e-12);
        let count_at = |z: Point2| {
            pts.iter()
                .filter(|c| (z - **c).norm_sq() <= l2_closed)
                .count()
        };

        let mut max_depth = pts.iter().map(|&c| count_at(c)).max().unwrap_or(0);
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let d = (pts[i] - pts[j]).norm();
                if d <= 0.0 || d >= 2.0 * l * (1.0 - 1e-12) {
                    continue;
                }
                let mid = (pts[i] + pts[j]) * 0.5;
                let h = (l * l - d * d / 4.0).sqrt();
                let dir = (pts[j] - pts[i]) * (1.0 / d);
                let perp = Point2::new(-dir.y, dir.x);
                for sign in [-1.0, 1.0] {
                    // nudge the boundary vertex into the open lens
                    let vertex = mid + perp * (h * sign);
                    let inside = vertex + (mid - vertex) * 1e-9;
                    max_depth = max_depth.max(count_at(inside));
                }
            }
        }
        max_depth as f64 * self.peak()
    }
}

/// Smeared density of Corollary-type radius
/// `L = (1/2) sqrt(l/(N-1)) (1 - 4 eps^{1/2} ||ΔU||^{1/2})`,
/// with `eps = epsilon_for_radius` and `U` taken from `p`.
pub fn smeared_density(
    cfg: &Configuration,
    p: &PlasmaParams,
    epsilon_for_radius: f64,
) -> Result<SmearedDensity> {
    if cfg.len() < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            got: cfg.len(),
        });
    }
    let delta = 4.0 * epsilon_for_radius.sqrt() * p.u.laplacian_sup_norm().sqrt();
    if delta >= 1.0 {
        return Err(Error::VacuousBound { delta });
    }
    let l = 0.5 * (f64::from(p.ell) / (cfg.len() - 1) as f64).sqrt() * (1.0 - delta);
    SmearedDensity::new(cfg.clone(), l)
}
