//! Bathtub variational problem: minimize `int V rho` over densities with
//! `0 <= rho <= m` and `int rho = 1`. The minimizer fills the sublevel sets
//! of `V` at density `m` up to a fill level `lambda`. Radial power-law wells
//! are solved in closed form; arbitrary potentials by a level-set fill on a
//! grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Point2, Potential};

/// Regular cell grid over `[x_min, x_min + nx h] x [y_min, y_min + ny h]`,
/// potentials sampled at cell centers.
#[derive(Clone, Debug, Serialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub y_min: f64,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn from_bounds(x_min: f64, x_max: f64, y_min: f64, y_max: f64, cell: f64) -> Result<Self> {
        if !(cell > 0.0) || !(x_max > x_min) || !(y_max > y_min) {
            return Err(Error::InvalidParams(
                "grid needs cell > 0 and a nonempty bounding box".into(),
            ));
        }
        Ok(GridSpec {
            x_min,
            y_min,
            cell,
            nx: ((x_max - x_min) / cell).ceil() as usize,
            ny: ((y_max - y_min) / cell).ceil() as usize,
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn center(&self, idx: usize) -> Point2 {
        let ix = idx % self.nx;
        let iy = idx / self.nx;
        Point2::new(
            self.x_min + (ix as f64 + 0.5) * self.cell,
            self.y_min + (iy as f64 + 0.5) * self.cell,
        )
    }

    fn is_boundary(&self, idx: usize) -> bool {
        let ix = idx % self.nx;
        let iy = idx / self.nx;
        ix == 0 || iy == 0 || ix == self.nx - 1 || iy == self.ny - 1
    }
}

/// Grid bathtub problem: potential, density cap and discretization.
#[derive(Clone, Debug)]
pub struct BathtubProblem {
    pub potential: Potential,
    pub max_density: f64,
    pub grid: GridSpec,
}

impl BathtubProblem {
    pub fn new(potential: Potential, max_density: f64, grid: GridSpec) -> Result<Self> {
        if !(max_density > 0.0) {
            return Err(Error::InvalidParams(format!(
                "density cap must be > 0, got {max_density}"
            )));
        }
        Ok(BathtubProblem {
            potential,
            max_density,
            grid,
        })
    }
}

/// Optimal density: a closed-form plateau on a disk, or grid cell values.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BathtubDensity {
    ClosedFormDisk { radius: f64, plateau: f64 },
    Grid { grid: GridSpec, values: Vec<f64> },
}

#[derive(Clone, Debug, Serialize)]
pub struct BathtubResult {
    pub energy: f64,
    /// Fill level `lambda`: the potential value at the filling boundary.
    pub fill_level: f64,
    pub mass: f64,
    pub density: BathtubDensity,
}

/// Closed form for `V = |x|^s` with density cap `1/(pi ell_eff)`: the optimal
/// density is the plateau on the disk of radius `sqrt(ell_eff)` and
///
/// ```text
/// E_V = 2/(s+2) ell_eff^{s/2},    lambda = ell_eff^{s/2}.
/// ```
pub fn bathtub_radial_power(s: f64, ell_eff: f64) -> Result<BathtubResult> {
    if !(s > 0.0) || !(ell_eff > 0.0) {
        return Err(Error::InvalidParams(format!(
            "bathtub closed form needs s > 0 and ell_eff > 0, got s = {s}, ell_eff = {ell_eff}"
        )));
    }
    let energy = 2.0 / (s + 2.0) * ell_eff.powf(s / 2.0);
    Ok(BathtubResult {
        energy,
        fill_level: ell_eff.powf(s / 2.0),
        mass: 1.0,
        density: BathtubDensity::ClosedFormDisk {
            radius: ell_eff.sqrt(),
            plateau: 1.0 / (std::f64::consts::PI * ell_eff),
        },
    })
}

/// Level-set fill on the grid: cells sorted by potential value are filled at
/// density `m` in ascending order until the mass reaches one, the last cell
/// fractionally. Ties are broken in lexicographic cell order (any tie-break
/// gives the same energy). Errors if the grid cannot hold unit mass or if the
/// filled sublevel set touches the domain boundary.
pub fn bathtub_solve_grid(prob: &BathtubProblem) -> Result<BathtubResult> {
    solve_grid_impl(prob, false)
}

pub(crate) fn solve_grid_impl(prob: &BathtubProblem, reverse_ties: bool) -> Result<BathtubResult> {
    let grid = &prob.grid;
    let m = prob.max_density;
    let cell_area = grid.cell * grid.cell;
    let cell_mass = m * cell_area;
    let fillable = cell_mass * grid.len() as f64;
    if fillable < 1.0 {
        return Err(Error::DomainTooSmall { fillable });
    }

    let potential_values: Vec<f64> = (0..grid.len())
        .map(|idx| prob.potential.value(grid.center(idx)))
        .collect();
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        let cmp = potential_values[a].total_cmp(&potential_values[b]);
        if reverse_ties {
            cmp.then(b.cmp(&a))
        } else {
            cmp.then(a.cmp(&b))
        }
    });

    let mut values = vec![0.0; grid.len()];
    let mut remaining = 1.0f64;
    let mut energy = 0.0;
    let mut mass = 0.0;
    let mut fill_level = f64::NEG_INFINITY;
    for &idx in &order {
        if remaining <= 0.0 {
            break;
        }
        let take = remaining.min(cell_mass);
        let rho = take / cell_area;
        values[idx] = rho;
        energy += potential_values[idx] * take;
        mass += take;
        fill_level = potential_values[idx];
        remaining -= take;
    }

    // a posteriori: the strict sublevel set of the fill level must fit inside
    let tol = 1e-12 * fill_level.abs().max(1.0);
    for (idx, &v) in potential_values.iter().enumerate() {
        if values[idx] > 0.0 && grid.is_boundary(idx) && v < fill_level - tol {
            return Err(Error::SublevelExceedsDomain { fill_level });
        }
    }

    Ok(BathtubResult {
        energy,
        fill_level,
        mass,
        density: BathtubDensity::Grid {
            grid: grid.clone(),
            values,
        },
    })
}

/// Grid solve with an automatically chosen discretization: the cell size puts
/// at least 10^4 cells inside the filled region and the domain is expanded
/// until the fill fits. `cell` overrides the default size.
pub fn bathtub_solve_auto(
    potential: &Potential,
    max_density: f64,
    cell: Option<f64>,
) -> Result<BathtubResult> {
    if !(max_density > 0.0) {
        return Err(Error::InvalidParams(format!(
            "density cap must be > 0, got {max_density}"
        )));
    }
    let h = match cell {
        Some(h) if h > 0.0 => h,
        Some(h) => {
            return Err(Error::InvalidParams(format!(
                "cell size must be > 0, got {h}"
            )))
        }
        // 1/m of filled area split into >= 1e4 cells
        None => (1.0 / (1e4 * max_density)).sqrt(),
    };
    // disk holding unit mass at the cap has radius sqrt(1/(pi m))
    let mut r = 1.2 * (1.0 / (std::f64::consts::PI * max_density)).sqrt();
    for _ in 0..12 {
        let grid = GridSpec::from_bounds(-r, r, -r, r, h)?;
        if grid.len() > 16_000_000 {
            return Err(Error::InvalidParams(format!(
                "auto grid for cell {h} grew past 16M cells; pass an explicit grid"
            )));
        }
        let prob = BathtubProblem::new(potential.clone(), max_density, grid)?;
        match solve_grid_impl(&prob, false) {
            Ok(res) => return Ok(res),
            Err(Error::DomainTooSmall { .. }) | Err(Error::SublevelExceedsDomain { .. }) => {
                r *= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::InvalidParams(
        "auto domain expansion failed to contain the bathtub fill".into(),
    ))
}

/// Bathtub energies under the truncations `V_B = min{V, B}` for each cap.
/// The sequence is non-decreasing in `B` and becomes constant once `B`
/// exceeds the fill level of the untruncated problem.
pub fn bathtub_continuity_check(
    v: &Potential,
    max_density: f64,
    caps: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if caps.is_empty() {
        return Err(Error::InvalidParams("caps list is empty".into()));
    }
    if caps.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams("caps must be ascending".into()));
    }
    caps.iter()
        .map(|&cap| {
            let truncated = crate::model::truncate_potential(v.clone(), cap)?;
            let res = bathtub_solve_auto(&truncated, max_density, None)?;
            Ok((cap, res.energy))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GridPotential;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_form_examples() {
        assert_relative_eq!(bathtub_radial_power(2.0, 1.0).unwrap().energy, 0.5);
        assert_relative_eq!(bathtub_radial_power(2.0, 4.0).unwrap().energy, 2.0);
        assert_relative_eq!(bathtub_radial_power(1.0, 1.0).unwrap().energy, 2.0 / 3.0);
        assert!(bathtub_radial_power(0.0, 1.0).is_err());
        assert!(bathtub_radial_power(2.0, -1.0).is_err());
    }

    #[test]
    fn closed_form_fill_level_and_plateau() {
        let r = bathtub_radial_power(2.0, 4.0).unwrap();
        assert_relative_eq!(r.fill_level, 4.0);
        let BathtubDensity::ClosedFormDisk { radius, plateau } = r.density else {
            panic!()
        };
        assert_relative_eq!(radius, 2.0);
        assert_relative_eq!(plateau, 1.0 / (4.0 * std::f64::consts::PI));
    }

    #[test]
    fn closed_form_scaling_law() {
        for s in [1.0, 2.0, 4.0] {
            let base = bathtub_radial_power(s, 1.0).unwrap().energy;
            for ell in [0.5, 2.0, 4.0] {
                let scaled = bathtub_radial_power(s, ell).unwrap().energy;
                assert_eq!(scaled, ell.powf(s / 2.0) * base);
            }
        }
    }

    #[test]
    fn grid_constant_potential() {
        let constant = Potential::CustomGrid(
            GridPotential::tabulate(|_| 3.0, -3.0, -3.0, 1.0, 7, 7).unwrap(),
        );
        let res = bathtub_solve_auto(&constant, 1.0 / std::f64::consts::PI, None).unwrap();
        assert_relative_eq!(res.energy, 3.0, epsilon = 1e-9);
        assert_relative_eq!(res.mass, 1.0, epsilon = 1e-9);
        assert_relative_eq!(res.fill_level, 3.0);
    }

    #[test]
    fn grid_matches_closed_form_quadratic() {
        let m = 1.0 / std::f64::consts::PI;
        let grid = GridSpec::from_bounds(-2.0, 2.0, -2.0, 2.0, 0.01).unwrap();
        let prob = BathtubProblem::new(Potential::Quadratic, m, grid).unwrap();
        let res = bathtub_solve_grid(&prob).unwrap();
        assert!((res.energy - 0.5).abs() < 0.01, "energy {}", res.energy);
        assert!((res.mass - 1.0).abs() < 1e-6);
        assert!((res.fill_level - 1.0).abs() < 0.02);

        // theorem constant m = 4/(pi l) with l = 2 gives the l/4 energy
        let res = bathtub_solve_auto(&Potential::Quadratic, 4.0 / (2.0 * std::f64::consts::PI), None)
            .unwrap();
        assert!((res.energy - 0.25).abs() < 0.005, "energy {}", res.energy);
    }

    #[test]
    fn grid_density_respects_cap_and_level_structure() {
        let m = 1.0 / std::f64::consts::PI;
        let res = bathtub_solve_auto(&Potential::Quadratic, m, None).unwrap();
        let BathtubDensity::Grid { grid, values } = &res.density else {
            panic!()
        };
        for (idx, &rho) in values.iter().enumerate() {
            assert!(rho <= m * (1.0 + 1e-12));
            let v = Potential::Quadratic.value(grid.center(idx));
            if v < res.fill_level - 1e-9 {
                assert!(rho > 0.0, "unfilled cell below the fill level");
            }
            if v > res.fill_level + 1e-9 {
                assert_eq!(rho, 0.0, "filled cell above the fill level");
            }
        }
    }

    #[test]
    fn grid_errors_when_domain_cannot_hold_unit_mass() {
        let grid = GridSpec::from_bounds(-0.5, 0.5, -0.5, 0.5, 0.05).unwrap();
        let prob = BathtubProblem::new(Potential::Quadratic, 0.1, grid).unwrap();
        assert!(matches!(
            bathtub_solve_grid(&prob),
            Err(Error::DomainTooSmall { .. })
        ));
    }

    #[test]
    fn grid_errors_when_sublevel_set_leaks() {
        // holds unit mass only by filling up to the boundary rows
        let grid = GridSpec::from_bounds(-0.5, 0.5, -0.5, 0.5, 0.01).unwrap();
        let prob = BathtubProblem::new(Potential::Quadratic, 1.0, grid).unwrap();
        assert!(matches!(
            bathtub_solve_grid(&prob),
            Err(Error::SublevelExceedsDomain { .. })
        ));
    }

    #[test]
    fn tie_break_direction_does_not_change_energy() {
        let constant = Potential::CustomGrid(
            GridPotential::tabulate(|_| 2.0, -3.0, -3.0, 1.0, 7, 7).unwrap(),
        );
        let grid = GridSpec::from_bounds(-2.0, 2.0, -2.0, 2.0, 0.05).unwrap();
        let prob = BathtubProblem::new(constant, 0.5, grid).unwrap();
        let asc = solve_grid_impl(&prob, false).unwrap();
        let desc = solve_grid_impl(&prob, true).unwrap();
        assert_relative_eq!(asc.energy, desc.energy, epsilon = 1e-12);
    }

    #[test]
    fn energy_is_monotone_in_density_cap() {
        let mut last = f64::INFINITY;
        for k in 1..=6 {
            let m = 0.2 * k as f64;
            let res = bathtub_solve_auto(&Potential::Quadratic, m, Some(0.02)).unwrap();
            assert!(
                res.energy <= last + 1e-12,
                "energy increased with cap m = {m}"
            );
            last = res.energy;
        }
    }

    #[test]
    fn truncation_continuity() {
        let m = 1.0 / std::f64::consts::PI;
        let caps = [0.5, 1.0, 2.0, 3.0];
        let energies = bathtub_continuity_check(&Potential::Quadratic, m, &caps).unwrap();
        for w in energies.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-12, "not monotone: {w:?}");
        }
        // strictly below the untruncated energy while the cap binds
        assert!(energies[0].1 < 0.5 - 0.05);
        // settled once the cap exceeds the fill level lambda = 1
        assert!((energies[2].1 - 0.5).abs() < 0.01);
        assert_eq!(energies[2].1, energies[3].1);

        // cap below min V: V_B is constant, energy equals the cap
        let trunc = crate::model::truncate_potential(Potential::Quadratic, -1.0).unwrap();
        let res = bathtub_solve_auto(&trunc, m, None).unwrap();
        assert_relative_eq!(res.energy, -1.0, epsilon = 1e-9);

        assert!(bathtub_continuity_check(&Potential::Quadratic, m, &[2.0, 1.0]).is_err());
        assert!(bathtub_continuity_check(&Potential::Quadratic, m, &[]).is_err());
    }

    #[test]
    fn exchange_optimality_on_random_pairs() {
        let m = 1.0 / std::f64::consts::PI;
        let res = bathtub_solve_auto(&Potential::Quadratic, m, None).unwrap();
        let BathtubDensity::Grid { grid, values } = &res.density else {
            panic!()
        };
        let v_at = |idx: usize| Potential::Quadratic.value(grid.center(idx));
        let filled: Vec<usize> = (0..values.len()).filter(|&i| values[i] > 0.0).collect();
        let unfilled: Vec<usize> = (0..values.len())
            .filter(|&i| values[i] < m * (1.0 - 1e-9))
            .collect();
        let cell_area = grid.cell * grid.cell;
        let base_energy: f64 = (0..values.len())
            .map(|i| v_at(i) * values[i] * cell_area)
            .sum();

        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..100 {
            let from = filled[rng.random_range(0..filled.len())];
            let to = unfilled[rng.random_range(0..unfilled.len())];
            if from == to {
                continue;
            }
            // optimality certificate: no mass sits above an emptier cell
            assert!(
                v_at(to) >= v_at(from) - 1e-9,
                "filled cell {from} has higher V than unfilled {to}"
            );
            if v_at(to) > v_at(from) {
                let delta = values[from].min(m - values[to]) * cell_area;
                let mut moved = values.clone();
                moved[from] -= delta / cell_area;
                moved[to] += delta / cell_area;
                let new_energy: f64 = (0..moved.len())
                    .map(|i| v_at(i) * moved[i] * cell_area)
                    .sum();
                assert!(
                    new_energy > base_energy,
                    "moving mass {from} -> {to} did not increase energy"
                );
            }
        }
    }
}
