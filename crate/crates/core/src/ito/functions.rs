use crate::error::{Error, Result};
use crate::phi::StepFunction;
use crate::wick::{levels_on_grid, poly_derivative, Cylinder};
use crate::fbm::TimeGrid;
use std::fmt;
use std::str::FromStr;

/// `f(s, x)` with exact `∂_s f`, `∂_x f`, `∂²_x f`.
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceTimeFn {
    /// `Σ_k p_k(s) x^k` with `p_k(s) = Σ_j c[k][j] s^j`.
    Polynomial(Vec<Vec<f64>>),
    /// Time-constant `h(x)`.
    Space(Cylinder),
}

impl SpaceTimeFn {
    fn x_coeffs(c: &[Vec<f64>], s: f64) -> Vec<f64> {
        c.iter().map(|p| poly_derivative(p, 0, s)).collect()
    }

    fn x_coeffs_ds(c: &[Vec<f64>], s: f64) -> Vec<f64> {
        c.iter().map(|p| poly_derivative(p, 1, s)).collect()
    }

    /// `∂_x^order f(s, x)`
    pub fn dx_n(&self, order: u32, s: f64, x: f64) -> f64 {
        match self {
            SpaceTimeFn::Polynomial(c) => poly_derivative(&Self::x_coeffs(c, s), order, x),
            SpaceTimeFn::Space(h) => h.derivative(order, x),
        }
    }

    pub fn eval(&self, s: f64, x: f64) -> f64 {
        self.dx_n(0, s, x)
    }

    pub fn ds(&self, s: f64, x: f64) -> f64 {
        match self {
            SpaceTimeFn::Polynomial(c) => poly_derivative(&Self::x_coeffs_ds(c, s), 0, x),
            SpaceTimeFn::Space(_) => 0.0,
        }
    }

    pub fn dx(&self, s: f64, x: f64) -> f64 {
        self.dx_n(1, s, x)
    }

    pub fn dxx(&self, s: f64, x: f64) -> f64 {
        self.dx_n(2, s, x)
    }

    /// `f(s, x + d) − f(s, x)`; summed from the finite Taylor series for
    /// polynomials so that cancellations are exact.
    pub fn x_increment(&self, s: f64, x: f64, d: f64) -> f64 {
        let coeffs = match self {
            SpaceTimeFn::Polynomial(c) => Self::x_coeffs(c, s),
            SpaceTimeFn::Space(Cylinder::Polynomial(c)) => c.clone(),
            SpaceTimeFn::Space(h) => return h.eval(x + d) - h.eval(x),
        };
        let mut acc = 0.0;
        let mut dm = 1.0;
        let mut fact = 1.0;
        for m in 1..coeffs.len() {
            dm *= d;
            fact *= m as f64;
            acc += poly_derivative(&coeffs, m as u32, x) * dm / fact;
        }
        acc
    }

    /// Compares the symbolic derivatives with central differences on a fixed
    /// probe set.
    pub fn check_derivatives(&self) -> Result<()> {
        let e = 1e-5;
        for s in [0.15, 0.5, 0.85] {
            for x in [-1.3, -0.2, 0.4, 1.7] {
                let checks = [
                    ("d/ds", self.ds(s, x), (self.eval(s + e, x) - self.eval(s - e, x)) / (2.0 * e)),
                    ("d/dx", self.dx(s, x), (self.eval(s, x + e) - self.eval(s, x - e)) / (2.0 * e)),
                    ("d2/dx2", self.dxx(s, x), (self.dx(s, x + e) - self.dx(s, x - e)) / (2.0 * e)),
                ];
                for (name, exact, fd) in checks {
                    if (exact - fd).abs() > 1e-6 * exact.abs().max(1.0) {
                        return Err(Error::Domain(format!(
                            "{name} of {self} at (s={s}, x={x}): symbolic {exact}, finite difference {fd}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

impl From<Cylinder> for SpaceTimeFn {
    fn from(h: Cylinder) -> Self {
        SpaceTimeFn::Space(h)
    }
}

impl fmt::Display for SpaceTimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceTimeFn::Space(h) => write!(f, "{h}"),
            SpaceTimeFn::Polynomial(c) => {
                let mut terms = Vec::new();
                for (k, p) in c.iter().enumerate() {
                    for (j, v) in p.iter().enumerate() {
                        if *v != 0.0 {
                            terms.push(format!("{v}*s^{j}*x^{k}"));
                        }
                    }
                }
                if terms.is_empty() {
                    f.write_str("0")
                } else {
                    f.write_str(&terms.join("+"))
                }
            }
        }
    }
}

impl FromStr for SpaceTimeFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<Cylinder>().map(SpaceTimeFn::Space)
    }
}

/// A coefficient that is constant or piecewise constant in time.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Const(f64),
    Step(StepFunction),
}

impl Coefficient {
    pub fn levels(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        match self {
            Coefficient::Const(c) => Ok(vec![*c; grid.n_intervals()]),
            Coefficient::Step(f) => levels_on_grid(f, grid),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coefficient::Const(c) => *c == 0.0,
            Coefficient::Step(f) => f.levels().iter().all(|v| *v == 0.0),
        }
    }
}

/// `X_t = X_0 + ∫_0^t A ds + ∫_0^t B dW` with deterministic `A`, `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftDiffusion {
    pub x0: f64,
    pub drift: Coefficient,
    pub diffusion: Coefficient,
}

impl DriftDiffusion {
    pub fn new(x0: f64, drift: Coefficient, diffusion: Coefficient) -> Self {
        Self { x0, drift, diffusion }
    }

    /// `W` itself.
    pub fn fbm() -> Self {
        Self::new(0.0, Coefficient::Const(0.0), Coefficient::Const(1.0))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(c, Coefficient::Const(0.0), Coefficient::Const(0.0))
    }

    /// `t ↦ x0 + t`
    pub fn time() -> Self {
        Self::new(0.0, Coefficient::Const(1.0), Coefficient::Const(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_space_time_derivatives() {
        // f = s x^2 + (1 + s^2) x^3 − 2
        let f = SpaceTimeFn::Polynomial(vec![vec![-2.0], vec![], vec![0.0, 1.0], vec![1.0, 0.0, 1.0]]);
        f.check_derivatives().unwrap();
        assert!((f.eval(0.5, 2.0) - (0.5 * 4.0 + 1.25 * 8.0 - 2.0)).abs() < 1e-14);
        assert!((f.ds(0.5, 2.0) - (4.0 + 2.0 * 0.5 * 8.0)).abs() < 1e-14);
    }

    #[test]
    fn family_passes_the_derivative_check() {
        for s in ["x", "x^2", "x^3", "x^4", "exp(0.7x)", "sin(1.5x)", "cos(x)"] {
            s.parse::<SpaceTimeFn>().unwrap().check_derivatives().unwrap();
        }
    }

    #[test]
    fn taylor_increment_matches_difference() {
        let f = SpaceTimeFn::Polynomial(vec![vec![1.0], vec![0.3, 2.0], vec![-1.0], vec![0.0, 0.5], vec![0.25]]);
        for (x, d) in [(0.3, 0.01), (-1.2, 0.5), (2.0, -0.7)] {
            let a = f.x_increment(0.4, x, d);
            let b = f.eval(0.4, x + d) - f.eval(0.4, x);
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let id: SpaceTimeFn = "x".parse().unwrap();
        assert_eq!(id.x_increment(0.0, 0.123456789, 1e-3 / 7.0), 1e-3 / 7.0);
    }
}
