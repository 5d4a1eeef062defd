use crate::error::{Error, Result};
use crate::model::point::Point2;

/// One-body potential, used both as confining well `V` and as perturbation `U`.
#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    /// `V ≡ 0`.
    Zero,
    /// `V(z) = |z|^s`, `s > 0`.
    RadialPower { s: f64 },
    /// `V(z) = |z|^2`.
    Quadratic,
    /// Tabulated values on a regular grid, bilinear interpolation in between.
    CustomGrid(GridPotential),
    /// `V_B(z) = min{V(z), B}`.
    Truncated { inner: Box<Potential>, cap: f64 },
}

impl Potential {
    pub fn radial_power(s: f64) -> Result<Potential> {
        if !(s > 0.0) {
            return Err(Error::InvalidParams(format!(
                "radial power exponent must be positive, got {s}"
            )));
        }
        Ok(Potential::RadialPower { s })
    }

    pub fn value(&self, z: Point2) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::RadialPower { s } => z.norm_sq().powf(s / 2.0),
            Potential::Quadratic => z.norm_sq(),
            Potential::CustomGrid(grid) => grid.value(z),
            Potential::Truncated { inner, cap } => inner.value(z).min(*cap),
        }
    }

    pub fn gradient(&self, z: Point2) -> Point2 {
        match self {
            Potential::Zero => Point2::ZERO,
            Potential::RadialPower { s } => {
                let r2 = z.norm_sq();
                if r2 == 0.0 {
                    // grad |z|^s vanishes at the origin for s > 1 and is taken
                    // as zero for the (non-differentiable) s <= 1 cases
                    return Point2::ZERO;
                }
                z * (s * r2.powf(s / 2.0 - 1.0))
            }
            Potential::Quadratic => z * 2.0,
            Potential::CustomGrid(grid) => grid.gradient(z),
            Potential::Truncated { inner, cap } => {
                // flat on {V > B}; the kink set {V = B} gets the inner gradient
                if inner.value(z) <= *cap {
                    inner.gradient(z)
                } else {
                    Point2::ZERO
                }
            }
        }
    }

    /// Sup norm of the Laplacian, analytic where known.
    ///
    /// `zero` and `|z|^2` are exact; other radial powers and grids are
    /// estimated with the 5-point stencil (`h = 1/64` over `[-4, 4]^2` for
    /// radial powers, the native grid for tabulated potentials). Truncated
    /// potentials report the inner potential's bound: the kink on `{V = B}`
    /// is not differentiable and is deliberately left out of the estimate.
    pub fn laplacian_sup_norm(&self) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Quadratic => 4.0,
            Potential::RadialPower { s } if (*s - 2.0).abs() < 1e-12 => 4.0,
            Potential::RadialPower { .. } => {
                stencil_sup(|z| self.value(z), -4.0, -4.0, 1.0 / 64.0, 513, 513)
            }
            Potential::CustomGrid(grid) => grid.laplacian_sup_norm(),
            Potential::Truncated { inner, .. } => inner.laplacian_sup_norm(),
        }
    }
}

/// Max of |5-point discrete Laplacian| over the interior nodes of a grid,
/// skipping nodes where the stencil is not finite.
fn stencil_sup(
    f: impl Fn(Point2) -> f64,
    x0: f64,
    y0: f64,
    h: f64,
    nx: usize,
    ny: usize,
) -> f64 {
    let mut sup: f64 = 0.0;
    for iy in 1..ny - 1 {
        for ix in 1..nx - 1 {
            let x = x0 + ix as f64 * h;
            let y = y0 + iy as f64 * h;
            let lap = (f(Point2::new(x + h, y))
                + f(Point2::new(x - h, y))
                + f(Point2::new(x, y + h))
                + f(Point2::new(x, y - h))
                - 4.0 * f(Point2::new(x, y)))
                / (h * h);
            if lap.is_finite() {
                sup = sup.max(lap.abs());
            }
        }
    }
    sup
}

/// Potential values tabulated on a regular node grid with spacing `h`,
/// bilinear interpolation inside, clamped to the boundary outside.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPotential {
    x0: f64,
    y0: f64,
    h: f64,
    nx: usize,
    ny: usize,
    /// Row-major: `values[iy * nx + ix]` at node `(x0 + ix h, y0 + iy h)`.
    values: Vec<f64>,
}

impl GridPotential {
    pub fn new(x0: f64, y0: f64, h: f64, nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidParams(
                "grid potential needs at least 2x2 nodes".into(),
            ));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidParams(format!(
                "grid spacing must be positive, got {h}"
            )));
        }
        if values.len() != nx * ny {
            return Err(Error::InvalidParams(format!(
                "grid potential expects {} values, got {}",
                nx * ny,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(
                "grid potential contains non-finite values".into(),
            ));
        }
        Ok(GridPotential {
            x0,
            y0,
            h,
            nx,
            ny,
            values,
        })
    }

    /// Tabulate `f` on the given grid.
    pub fn tabulate(
        f: impl Fn(Point2) -> f64,
        x0: f64,
        y0: f64,
        h: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                values.push(f(Point2::new(x0 + ix as f64 * h, y0 + iy as f64 * h)));
            }
        }
        GridPotential::new(x0, y0, h, nx, ny, values)
    }

    fn node(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    /// Cell index and local coordinates in [0, 1]^2, clamped to the grid.
    fn locate(&self, z: Point2) -> (usize, usize, f64, f64) {
        let fx = ((z.x - self.x0) / self.h).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((z.y - self.y0) / self.h).clamp(0.0, (self.ny - 1) as f64);
        let ix = (fx.floor() as usize).min(self.nx - 2);
        let iy = (fy.floor() as usize).min(self.ny - 2);
        (ix, iy, fx - ix as f64, fy - iy as f64)
    }

    pub fn value(&self, z: Point2) -> f64 {
        let (ix, iy, tx, ty) = self.locate(z);
        let v00 = self.node(ix, iy);
        let v10 = self.node(ix + 1, iy);
        let v01 = self.node(ix, iy + 1);
        let v11 = self.node(ix + 1, iy + 1);
        // incremental form keeps constant grids exact
        v00 + tx * (v10 - v00) + ty * (v01 - v00) + tx * ty * (v11 - v10 - v01 + v00)
    }

    /// Gradient of the bilinear patch containing `z` (piecewise defined;
    /// outside the grid the clamped coordinate contributes zero slope).
    pub fn gradient(&self, z: Point2) -> Point2 {
        let (ix, iy, tx, ty) = self.locate(z);
        let inside_x = z.x >= self.x0 && z.x <= self.x0 + (self.nx - 1) as f64 * self.h;
        let inside_y = z.y >= self.y0 && z.y <= self.y0 + (self.ny - 1) as f64 * self.h;
        let v00 = self.node(ix, iy);
        let v10 = self.node(ix + 1, iy);
        let v01 = self.node(ix, iy + 1);
        let v11 = self.node(ix + 1, iy + 1);
        let gx = ((v10 - v00) * (1.0 - ty) + (v11 - v01) * ty) / self.h;
        let gy = ((v01 - v00) * (1.0 - tx) + (v11 - v10) * tx) / self.h;
        Point2::new(
            if inside_x { gx } else { 0.0 },
            if inside_y { gy } else { 0.0 },
        )
    }

    pub fn laplacian_sup_norm(&self) -> f64 {
        let mut sup: f64 = 0.0;
        for iy in 1..self.ny - 1 {
            for ix in 1..self.nx - 1 {
                let lap = (self.node(ix + 1, iy)
                    + self.node(ix - 1, iy)
                    + self.node(ix, iy + 1)
                    + self.node(ix, iy - 1)
                    - 4.0 * self.node(ix, iy))
                    / (self.h * self.h);
                sup = sup.max(lap.abs());
            }
        }
        sup
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn radial_power_vanishes_at_origin() {
        for s in [0.5, 1.0, 2.0, 4.0] {
            let v = Potential::radial_power(s).unwrap();
            assert_eq!(v.value(Point2::ZERO), 0.0);
        }
        assert!(Potential::radial_power(0.0).is_err());
        assert!(Potential::radial_power(-1.0).is_err());
    }

    #[test]
    fn truncation_caps_values() {
        let v = Potential::Truncated {
            inner: Box::new(Potential::radial_power(2.0).unwrap()),
            cap: 4.0,
        };
        assert_relative_eq!(v.value(Point2::new(1.0, 0.0)), 1.0);
        assert_relative_eq!(v.value(Point2::new(3.0, 0.0)), 4.0);
    }

    proptest! {
        #[test]
        fn truncated_never_exceeds_cap(x in -50.0..50.0f64, y in -50.0..50.0f64, cap in -1.0..10.0f64) {
            let v = Potential::Truncated {
                inner: Box::new(Potential::Quadratic),
                cap,
            };
            prop_assert!(v.value(Point2::new(x, y)) <= cap + 1e-15);
        }
    }

    #[test]
    fn laplacian_sup_norms() {
        assert_eq!(Potential::Zero.laplacian_sup_norm(), 0.0);
        assert_eq!(Potential::Quadratic.laplacian_sup_norm(), 4.0);
        assert_eq!(
            Potential::radial_power(2.0).unwrap().laplacian_sup_norm(),
            4.0
        );
        // truncated reports the inner bound
        let t = Potential::Truncated {
            inner: Box::new(Potential::Quadratic),
            cap: 1.0,
        };
        assert_eq!(t.laplacian_sup_norm(), 4.0);
        // |z|^4 has laplacian 16 r^2, about 512 at the corner of [-4,4]^2
        let quartic = Potential::radial_power(4.0).unwrap().laplacian_sup_norm();
        assert!(quartic > 400.0 && quartic < 600.0, "got {quartic}");
    }

    #[test]
    fn potential_gradients_match_finite_differences() {
        let grid = GridPotential::tabulate(|z| z.norm_sq(), -3.0, -3.0, 0.05, 121, 121).unwrap();
        let pots = [
            Potential::Quadratic,
            Potential::radial_power(1.0).unwrap(),
            Potential::radial_power(3.0).unwrap(),
            Potential::Truncated {
                inner: Box::new(Potential::Quadratic),
                cap: 2.0,
            },
            Potential::CustomGrid(grid),
        ];
        let h = 1e-6;
        for v in &pots {
            for &(x, y) in &[(0.73, -0.41), (1.9, 0.33), (-0.5, -1.21)] {
                let z = Point2::new(x, y);
                let g = v.gradient(z);
                let fx = (v.value(Point2::new(x + h, y)) - v.value(Point2::new(x - h, y)))
                    / (2.0 * h);
                let fy = (v.value(Point2::new(x, y + h)) - v.value(Point2::new(x, y - h)))
                    / (2.0 * h);
                assert_relative_eq!(g.x, fx, epsilon = 1e-4, max_relative = 1e-4);
                assert_relative_eq!(g.y, fy, epsilon = 1e-4, max_relative = 1e-4);
            }
        }
    }

    #[test]
    fn grid_interpolates_nodes_exactly() {
        let grid = GridPotential::tabulate(|z| 1.0 + z.x + 2.0 * z.y, 0.0, 0.0, 0.5, 5, 5).unwrap();
        assert_relative_eq!(grid.value(Point2::new(1.0, 1.5)), 1.0 + 1.0 + 3.0);
        // bilinear reproduces affine functions everywhere
        assert_relative_eq!(grid.value(Point2::new(0.77, 1.13)), 1.0 + 0.77 + 2.26);
    }
}
