use std::fmt::Debug;

use crate::model::point::Point2;

/// Holomorphic symmetric prefactor `F` entering the plasma Hamiltonian through
/// `W(Z) = -2 log |F(sqrt(N-1) Z)|`.
///
/// Implementations never expand polynomial products: every factor is kept as a
/// list of linear terms and `W` is accumulated as a sum of logs, which stays
/// stable up to N ~ 10^3. Points act as complex numbers; all terms are linear
/// so only moduli are needed.
pub trait CorrelationFactor: Send + Sync + Debug {
    /// `W(Z)`; `+inf` at zeros of `F`.
    fn w_value(&self, points: &[Point2]) -> f64;

    /// `grad_{z_j} W(Z)` for every `j`. Non-finite at zeros of `F`.
    fn w_gradient(&self, points: &[Point2]) -> Vec<Point2>;

    /// Sum of the terms of `W` that involve point `j` (each pair term counted
    /// once). The difference of this quantity under a single-point move equals
    /// the change of `W`.
    fn w_point_terms(&self, points: &[Point2], j: usize) -> f64;
}

/// `sqrt(N - 1)` rescaling applied to the argument of `F`.
fn scale(points: &[Point2]) -> f64 {
    ((points.len() - 1) as f64).sqrt()
}

fn log_modulus(zeta: Point2) -> f64 {
    0.5 * zeta.norm_sq().ln()
}

/// `grad_z log |c z - a|` evaluated from `zeta = c z - a`.
fn log_modulus_gradient(zeta: Point2, c: f64) -> Point2 {
    zeta * (c / zeta.norm_sq())
}

/// `F ≡ 1`, the bare Laughlin state.
#[derive(Clone, Copy, Debug, Default)]
pub struct Trivial;

impl CorrelationFactor for Trivial {
    fn w_value(&self, _points: &[Point2]) -> f64 {
        0.0
    }

    fn w_gradient(&self, points: &[Point2]) -> Vec<Point2> {
        vec![Point2::ZERO; points.len()]
    }

    fn w_point_terms(&self, _points: &[Point2], _j: usize) -> f64 {
        0.0
    }
}

/// `F(Z) = prod_j f1(z_j)` with `f1(z) = prod_k (z - a_k)` given by its roots.
#[derive(Clone, Debug)]
pub struct OneBodyPolynomial {
    roots: Vec<Point2>,
}

impl OneBodyPolynomial {
    pub fn new(roots: Vec<Point2>) -> Self {
        OneBodyPolynomial { roots }
    }

    pub fn roots(&self) -> &[Point2] {
        &self.roots
    }

    fn terms_for_point(&self, z: Point2, c: f64) -> f64 {
        let mut sum = 0.0;
        for &a in &self.roots {
            sum += log_modulus(z * c - a);
        }
        -2.0 * sum
    }
}

impl CorrelationFactor for OneBodyPolynomial {
    fn w_value(&self, points: &[Point2]) -> f64 {
        let c = scale(points);
        points.iter().map(|&z| self.terms_for_point(z, c)).sum()
    }

    fn w_gradient(&self, points: &[Point2]) -> Vec<Point2> {
        let c = scale(points);
        points
            .iter()
            .map(|&z| {
                let mut g = Point2::ZERO;
                for &a in &self.roots {
                    g += log_modulus_gradient(z * c - a, c);
                }
                g * -2.0
            })
            .collect()
    }

    fn w_point_terms(&self, points: &[Point2], j: usize) -> f64 {
        self.terms_for_point(points[j], scale(points))
    }
}

/// `F(Z) = prod_{i<j} f2(z_i, z_j)` with `f2(z, w) = prod_k ((z - w) - b_k)`
/// given by the roots of the difference polynomial. The default root list
/// `{0}` gives the plain pair factor `prod_{i<j} (z_i - z_j)`.
#[derive(Clone, Debug)]
pub struct PairPolynomial {
    roots: Vec<Point2>,
}

impl PairPolynomial {
    pub fn new(roots: Vec<Point2>) -> Self {
        PairPolynomial { roots }
    }

    /// The pair factor `prod_{i<j} (z_i - z_j)`.
    pub fn difference() -> Self {
        PairPolynomial::new(vec![Point2::ZERO])
    }

    pub fn roots(&self) -> &[Point2] {
        &self.roots
    }

    fn terms_for_pair(&self, zi: Point2, zj: Point2, c: f64) -> f64 {
        let d = (zi - zj) * c;
        let mut sum = 0.0;
        for &b in &self.roots {
            sum += log_modulus(d - b);
        }
        -2.0 * sum
    }
}

impl CorrelationFactor for PairPolynomial {
    fn w_value(&self, points: &[Point2]) -> f64 {
        let c = scale(points);
        let mut w = 0.0;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                w += self.terms_for_pair(points[i], points[j], c);
            }
        }
        w
    }

    fn w_gradient(&self, points: &[Point2]) -> Vec<Point2> {
        let c = scale(points);
        let mut grads = vec![Point2::ZERO; points.len()];
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let d = (points[i] - points[j]) * c;
                for &b in &self.roots {
                    let g = log_modulus_gradient(d - b, c) * -2.0;
                    grads[i] += g;
                    grads[j] += -g;
                }
            }
        }
        grads
    }

    fn w_point_terms(&self, points: &[Point2], j: usize) -> f64 {
        let c = scale(points);
        let mut sum = 0.0;
        for i in 0..points.len() {
            if i == j {
                continue;
            }
            // keep the i < j argument order of the full product
            if i < j {
                sum += self.terms_for_pair(points[i], points[j], c);
            } else {
                sum += self.terms_for_pair(points[j], points[i], c);
            }
        }
        sum
    }
}

/// Product of a one-body and a pair polynomial: the two-factor class
/// `prod f1(z_j) prod f2(z_i, z_j)`.
#[derive(Clone, Debug)]
pub struct Composite {
    pub one_body: OneBodyPolynomial,
    pub pair: PairPolynomial,
}

impl Composite {
    pub fn new(one_body: OneBodyPolynomial, pair: PairPolynomial) -> Self {
        Composite { one_body, pair }
    }
}

impl CorrelationFactor for Composite {
    fn w_value(&self, points: &[Point2]) -> f64 {
        self.one_body.w_value(points) + self.pair.w_value(points)
    }

    fn w_gradient(&self, points: &[Point2]) -> Vec<Point2> {
        let mut g = self.one_body.w_gradient(points);
        for (gi, pi) in g.iter_mut().zip(self.pair.w_gradient(points)) {
            *gi += pi;
        }
        g
    }

    fn w_point_terms(&self, points: &[Point2], j: usize) -> f64 {
        self.one_body.w_point_terms(points, j) + self.pair.w_point_terms(points, j)
    }
}
