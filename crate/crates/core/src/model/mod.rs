//! Domain types and the (perturbed) plasma Hamiltonian
//!
//! ```text
//! H_N(Z) = sum_j (|z_j|^2 + eps U(z_j))
//!        + (2 l / (N-1)) sum_{i<j} w(z_i - z_j)
//!        + (1 / (N-1)) W(Z),          w(z) = -log|z|
//! ```
//!
//! in plasma-scaled coordinates: the `sqrt(N-1)` rescaling lives entirely
//! inside the evaluation of `W`, and the Gibbs temperature is `T = 1/N`.

mod factor;
mod point;
mod potential;

pub use factor::{Composite, CorrelationFactor, OneBodyPolynomial, PairPolynomial, Trivial};
pub use point::{Configuration, Point2};
pub use potential::{GridPotential, Potential};

use serde::Serialize;

use crate::error::{Error, Result};

/// Parameters of the plasma: particle number, Laughlin exponent, perturbation
/// strength and perturbing potential. The temperature is not free: `T = 1/N`.
#[derive(Clone, Debug)]
pub struct PlasmaParams {
    pub n: usize,
    pub ell: u32,
    pub epsilon: f64,
    pub u: Potential,
}

impl PlasmaParams {
    pub fn new(n: usize, ell: u32, epsilon: f64, u: Potential) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParams("particle number must be >= 1".into()));
        }
        if ell < 1 {
            return Err(Error::InvalidParams("exponent ell must be >= 1".into()));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "epsilon must be >= 0, got {epsilon}"
            )));
        }
        Ok(PlasmaParams { n, ell, epsilon, u })
    }

    /// Unperturbed plasma (`eps = 0`, `U ≡ 0`).
    pub fn unperturbed(n: usize, ell: u32) -> Result<Self> {
        PlasmaParams::new(n, ell, 0.0, Potential::Zero)
    }

    pub fn temperature(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Coupling `2 l / (N-1)` of the Coulomb pair sum; zero for `N = 1`.
    pub fn coulomb_coupling(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            2.0 * f64::from(self.ell) / (self.n - 1) as f64
        }
    }
}

/// The four terms of the Hamiltonian plus their sum.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnergyBreakdown {
    pub confinement: f64,
    pub coulomb: f64,
    pub correlation: f64,
    pub perturbation: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn new(confinement: f64, coulomb: f64, correlation: f64, perturbation: f64) -> Self {
        EnergyBreakdown {
            confinement,
            coulomb,
            correlation,
            perturbation,
            total: confinement + coulomb + correlation + perturbation,
        }
    }
}

/// 2D Coulomb kernel `w(z) = -log |z|`, `+inf` at the origin.
pub fn coulomb_kernel(z: Point2) -> f64 {
    let r2 = z.norm_sq();
    if r2 == 0.0 {
        f64::INFINITY
    } else {
        -0.5 * r2.ln()
    }
}

/// Evaluates the Hamiltonian on `cfg`. Coincident points or a vanishing
/// factor give `+inf` rather than an error: such configurations carry zero
/// Gibbs weight and minimizers treat them as infinitely unfavorable.
pub fn energy(cfg: &Configuration, p: &PlasmaParams, f: &dyn CorrelationFactor) -> EnergyBreakdown {
    assert_eq!(cfg.len(), p.n, "configuration length must equal params.n");
    energy_of_points(cfg.points(), p, f)
}

pub(crate) fn energy_of_points(
    points: &[Point2],
    p: &PlasmaParams,
    f: &dyn CorrelationFactor,
) -> EnergyBreakdown {
    let n = points.len();
    let mut confinement = 0.0;
    let mut perturbation = 0.0;
    for &z in points {
        confinement += z.norm_sq();
        if p.epsilon != 0.0 {
            perturbation += p.epsilon * p.u.value(z);
        }
    }

    // index-ascending pair order keeps summation deterministic
    let mut coulomb = 0.0;
    let mut correlation = 0.0;
    if n >= 2 {
        let mut pair_sum = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                pair_sum += coulomb_kernel(points[i] - points[j]);
            }
        }
        coulomb = p.coulomb_coupling() * pair_sum;
        correlation = f.w_value(points) / (n - 1) as f64;
    }
    EnergyBreakdown::new(confinement, coulomb, correlation, perturbation)
}

/// Analytic gradient `dH/dz_j`. Errors on coincident points or factor zeros,
/// where the Hamiltonian is singular.
pub fn gradient(
    cfg: &Configuration,
    p: &PlasmaParams,
    f: &dyn CorrelationFactor,
) -> Result<Vec<Point2>> {
    assert_eq!(cfg.len(), p.n, "configuration length must equal params.n");
    gradient_of_points(cfg.points(), p, f)
}

pub(crate) fn gradient_of_points(
    points: &[Point2],
    p: &PlasmaParams,
    f: &dyn CorrelationFactor,
) -> Result<Vec<Point2>> {
    let n = points.len();
    let mut grads: Vec<Point2> = points.iter().map(|&z| z * 2.0).collect();
    if p.epsilon != 0.0 {
        for (g, &z) in grads.iter_mut().zip(points) {
            *g += p.u.gradient(z) * p.epsilon;
        }
    }
    if n >= 2 {
        let coupling = p.coulomb_coupling();
        for i in 0..n {
            for j in i + 1..n {
                let d = points[i] - points[j];
                let r2 = d.norm_sq();
                if r2 == 0.0 {
                    return Err(Error::SingularConfiguration);
                }
                // grad_i of -coupling * log|z_i - z_j|
                let g = d * (coupling / r2);
                grads[i] += -g;
                grads[j] += g;
            }
        }
        let w_grads = f.w_gradient(points);
        let inv = 1.0 / (n - 1) as f64;
        for (g, wg) in grads.iter_mut().zip(w_grads) {
            *g += wg * inv;
        }
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::SingularConfiguration);
    }
    Ok(grads)
}

/// Sum of every Hamiltonian term involving point `j` (its one-body terms plus
/// all pair and correlation terms containing it, each counted once).
///
/// The difference of this quantity under a single-point move equals the full
/// energy difference, which is what the Metropolis sampler and the relocation
/// sweeps evaluate.
pub(crate) fn point_terms(
    points: &[Point2],
    j: usize,
    p: &PlasmaParams,
    f: &dyn CorrelationFactor,
) -> f64 {
    let n = points.len();
    let z = points[j];
    let mut t = z.norm_sq();
    if p.epsilon != 0.0 {
        t += p.epsilon * p.u.value(z);
    }
    if n >= 2 {
        let mut pair_sum = 0.0;
        for (i, &zi) in points.iter().enumerate() {
            if i != j {
                pair_sum += coulomb_kernel(z - zi);
            }
        }
        t += p.coulomb_coupling() * pair_sum;
        t += f.w_point_terms(points, j) / (n - 1) as f64;
    }
    t
}

/// Wraps `v` in the truncation `V_B = min{V, B}`.
pub fn truncate_potential(v: Potential, cap: f64) -> Result<Potential> {
    if !cap.is_finite() {
        return Err(Error::InvalidParams(format!(
            "truncation cap must be finite, got {cap}"
        )));
    }
    Ok(Potential::Truncated {
        inner: Box::new(v),
        cap,
    })
}

/// Configuration-independent constant by which the Hamiltonian with the pair
/// factor `prod_{i<j}(z_i - z_j)` at exponent `l` differs from the trivial
/// factor at exponent `l + 1`:
///
/// ```text
/// (1/(N-1)) W(Z) = (2/(N-1)) sum_{i<j} w(z_i - z_j) - (N/2) log(N-1)
/// ```
pub fn pair_factor_shift_constant(p: &PlasmaParams) -> f64 {
    assert!(p.n >= 2, "pair factor shift needs n >= 2");
    -(p.n as f64 / 2.0) * ((p.n - 1) as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn cfg(points: &[(f64, f64)]) -> Configuration {
        Configuration::new(points.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    fn random_cfg(n: usize, seed: u64) -> Configuration {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Configuration::new(
            (0..n)
                .map(|_| Point2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn coulomb_kernel_examples() {
        assert_eq!(coulomb_kernel(Point2::new(1.0, 0.0)), 0.0);
        assert_relative_eq!(
            coulomb_kernel(Point2::new(std::f64::consts::E, 0.0)),
            -1.0,
            epsilon = 1e-14
        );
        assert_eq!(coulomb_kernel(Point2::ZERO), f64::INFINITY);
    }

    #[test]
    fn temperature_is_exactly_one_over_n() {
        for n in [1usize, 2, 7, 100] {
            let p = PlasmaParams::unperturbed(n, 2).unwrap();
            assert_eq!(p.temperature(), 1.0 / n as f64);
        }
    }

    #[test]
    fn params_validation() {
        assert!(PlasmaParams::new(0, 2, 0.0, Potential::Zero).is_err());
        assert!(PlasmaParams::new(2, 0, 0.0, Potential::Zero).is_err());
        assert!(PlasmaParams::new(2, 2, -0.5, Potential::Zero).is_err());
        assert!(PlasmaParams::new(2, 2, f64::NAN, Potential::Zero).is_err());
    }

    #[test]
    fn energy_single_particle_at_origin_is_zero() {
        let p = PlasmaParams::unperturbed(1, 2).unwrap();
        let e = energy(&cfg(&[(0.0, 0.0)]), &p, &Trivial);
        assert_eq!(e.total, 0.0);
        assert_eq!(e.coulomb, 0.0);
        assert_eq!(e.correlation, 0.0);
    }

    #[test]
    fn energy_two_point_examples() {
        let p = PlasmaParams::unperturbed(2, 2).unwrap();
        let e = energy(&cfg(&[(-1.0, 0.0), (1.0, 0.0)]), &p, &Trivial);
        assert_relative_eq!(e.confinement, 2.0);
        assert_relative_eq!(e.coulomb, -4.0 * 2.0f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(e.total, 2.0 - 4.0 * 2.0f64.ln(), epsilon = 1e-12);

        let e = energy(&cfg(&[(0.0, 0.0), (std::f64::consts::E, 0.0)]), &p, &Trivial);
        assert_relative_eq!(
            e.total,
            std::f64::consts::E.powi(2) - 4.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn coincident_points_give_infinite_coulomb() {
        let p = PlasmaParams::unperturbed(3, 2).unwrap();
        let e = energy(&cfg(&[(0.5, 0.5), (0.5, 0.5), (1.0, 0.0)]), &p, &Trivial);
        assert_eq!(e.coulomb, f64::INFINITY);
        assert_eq!(e.total, f64::INFINITY);
        assert!(gradient(&cfg(&[(0.5, 0.5), (0.5, 0.5), (1.0, 0.0)]), &p, &Trivial).is_err());
    }

    #[test]
    fn gradient_single_particle() {
        let p = PlasmaParams::unperturbed(1, 2).unwrap();
        let g = gradient(&cfg(&[(3.0, 4.0)]), &p, &Trivial).unwrap();
        assert_relative_eq!(g[0].x, 6.0);
        assert_relative_eq!(g[0].y, 8.0);
    }

    #[test]
    fn gradient_vanishes_at_symmetric_pair() {
        let p = PlasmaParams::unperturbed(2, 2).unwrap();
        let g = gradient(&cfg(&[(-1.0, 0.0), (1.0, 0.0)]), &p, &Trivial).unwrap();
        for gi in g {
            assert!(gi.norm() < 1e-14, "stationary pair has gradient {gi:?}");
        }
    }

    fn finite_difference_gradient(
        c: &Configuration,
        p: &PlasmaParams,
        f: &dyn CorrelationFactor,
        h: f64,
    ) -> Vec<Point2> {
        let pts = c.points();
        (0..pts.len())
            .map(|j| {
                let mut xp = pts.to_vec();
                let mut xm = pts.to_vec();
                xp[j].x += h;
                xm[j].x -= h;
                let gx = (energy_of_points(&xp, p, f).total - energy_of_points(&xm, p, f).total)
                    / (2.0 * h);
                let mut yp = pts.to_vec();
                let mut ym = pts.to_vec();
                yp[j].y += h;
                ym[j].y -= h;
                let gy = (energy_of_points(&yp, p, f).total - energy_of_points(&ym, p, f).total)
                    / (2.0 * h);
                Point2::new(gx, gy)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences_n5() {
        let c = random_cfg(5, 99);
        let p = PlasmaParams::new(5, 2, 0.3, Potential::Quadratic).unwrap();
        let factor = Composite::new(
            OneBodyPolynomial::new(vec![Point2::new(8.0, 8.0)]),
            PairPolynomial::difference(),
        );
        let g = gradient(&c, &p, &factor).unwrap();
        let fd = finite_difference_gradient(&c, &p, &factor, 1e-5);
        let num: f64 = g
            .iter()
            .zip(&fd)
            .map(|(a, b)| (*a - *b).norm_sq())
            .sum::<f64>()
            .sqrt();
        let den: f64 = g.iter().map(|a| a.norm_sq()).sum::<f64>().sqrt();
        assert!(num / den < 1e-6, "relative error {}", num / den);
    }

    #[test]
    fn point_terms_reproduce_energy_differences() {
        let p = PlasmaParams::new(6, 3, 0.2, Potential::Quadratic).unwrap();
        let factor = PairPolynomial::new(vec![Point2::new(7.0, -7.0)]);
        let c = random_cfg(6, 5);
        let mut pts = c.points().to_vec();
        let before = energy_of_points(&pts, &p, &factor).total;
        let t_before = point_terms(&pts, 3, &p, &factor);
        pts[3] = Point2::new(0.21, 0.84);
        let after = energy_of_points(&pts, &p, &factor).total;
        let t_after = point_terms(&pts, 3, &p, &factor);
        assert_relative_eq!(after - before, t_after - t_before, epsilon = 1e-10);
    }

    #[test]
    fn truncate_potential_examples() {
        let v = truncate_potential(Potential::radial_power(2.0).unwrap(), 4.0).unwrap();
        assert_relative_eq!(v.value(Point2::new(1.0, 0.0)), 1.0);
        assert_relative_eq!(v.value(Point2::new(3.0, 0.0)), 4.0);
        assert!(truncate_potential(Potential::Zero, f64::INFINITY).is_err());
    }

    #[test]
    fn pair_factor_shift_constant_examples() {
        let p2 = PlasmaParams::unperturbed(2, 2).unwrap();
        assert_eq!(pair_factor_shift_constant(&p2), 0.0);
        let p5 = PlasmaParams::unperturbed(5, 2).unwrap();
        assert_relative_eq!(
            pair_factor_shift_constant(&p5),
            -2.5 * 4.0f64.ln(),
            epsilon = 1e-12
        );
        assert_relative_eq!(pair_factor_shift_constant(&p5), -3.465736, epsilon = 1e-6);
    }

    #[test]
    fn pair_factor_equals_ell_plus_one_up_to_constant() {
        // H(l, pair factor) - H(l+1, trivial) is configuration independent
        let mut diffs = Vec::new();
        for seed in 0..20 {
            let c = random_cfg(7, 1000 + seed);
            let p_pair = PlasmaParams::unperturbed(7, 2).unwrap();
            let p_triv = PlasmaParams::unperturbed(7, 3).unwrap();
            let e_pair = energy(&c, &p_pair, &PairPolynomial::difference()).total;
            let e_triv = energy(&c, &p_triv, &Trivial).total;
            diffs.push(e_pair - e_triv);
        }
        let spread = diffs.iter().cloned().fold(f64::MIN, f64::max)
            - diffs.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-9, "spread {spread}");
        let expected = pair_factor_shift_constant(&PlasmaParams::unperturbed(7, 2).unwrap());
        assert_relative_eq!(diffs[0], expected, epsilon = 1e-9);
    }

    #[test]
    fn energy_permutation_invariance() {
        let p = PlasmaParams::new(6, 2, 0.1, Potential::Quadratic).unwrap();
        let factor = PairPolynomial::difference();
        let c = random_cfg(6, 17);
        let e = energy(&c, &p, &factor).total;

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut permuted = c.points().to_vec();
        permuted.shuffle(&mut rng);
        let e_perm = energy_of_points(&permuted, &p, &factor).total;
        // raw permutation changes the summation order, so only near-exact
        assert_relative_eq!(e, e_perm, max_relative = 1e-12);

        // with a canonical point order the sum is bit-identical
        let canonical = |pts: &[Point2]| {
            let mut v = pts.to_vec();
            v.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
            v
        };
        let e_canon = energy_of_points(&canonical(c.points()), &p, &factor).total;
        let e_perm_canon = energy_of_points(&canonical(&permuted), &p, &factor).total;
        assert_eq!(e_canon.to_bits(), e_perm_canon.to_bits());
    }

    #[test]
    fn energy_rotation_invariance() {
        // trivial factor and radial U: simultaneous rotation is a symmetry
        let p = PlasmaParams::new(5, 3, 0.4, Potential::radial_power(4.0).unwrap()).unwrap();
        let c = random_cfg(5, 29);
        let e = energy(&c, &p, &Trivial).total;
        for theta in [0.3, 1.7, std::f64::consts::PI] {
            let rotated = Configuration::new(
                c.points().iter().map(|z| z.rotated(theta)).collect(),
            )
            .unwrap();
            let e_rot = energy(&rotated, &p, &Trivial).total;
            assert!(
                (e - e_rot).abs() <= 1e-10 * e.abs().max(1.0),
                "rotation by {theta} changed energy by {}",
                e - e_rot
            );
        }
    }
}
