use super::functions::DriftDiffusion;
use crate::error::{Error, Result};
use crate::wick::poly_derivative;
use std::fmt;

/// Composition `F_t(X_t)` of the random field
/// `F_t(x) = F_0(x) + ∫_0^t G(x) ds + ∫_0^t H(x) dW = F_0(x) + t G(x) + W_t H(x)`
/// with a drift–diffusion process `X`. `F_0`, `G`, `H` are polynomials of
/// degree at most 2 given by ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct WentzellCase {
    pub x: DriftDiffusion,
    pub f0: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

impl WentzellCase {
    pub fn new(x: DriftDiffusion, f0: Vec<f64>, g: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        for (name, c) in [("F_0", &f0), ("G", &g), ("H", &h)] {
            if c.len() > 3 {
                return Err(Error::UnsupportedCase(format!(
                    "{name} has degree {} (at most 2 supported)",
                    c.len() - 1
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::UnsupportedCase(format!("{name} has non-finite coefficients")));
            }
        }
        Ok(Self { x, f0, g, h })
    }

    /// `F_t(x) = x W_t` composed with `X = W`.
    pub fn x_times_w() -> Self {
        Self::new(DriftDiffusion::fbm(), vec![], vec![], vec![0.0, 1.0]).unwrap()
    }

    /// Deterministic field `F_0` composed with deterministic `X_t = x0 + A t`.
    pub fn deterministic(f0: Vec<f64>, x0: f64, a: f64) -> Result<Self> {
        use super::functions::Coefficient;
        Self::new(
            DriftDiffusion::new(x0, Coefficient::Const(a), Coefficient::Const(0.0)),
            f0,
            vec![],
            vec![],
        )
    }

    /// `F ≡ c` composed with `X = W`.
    pub fn constant(c: f64) -> Self {
        Self::new(DriftDiffusion::fbm(), vec![c], vec![], vec![]).unwrap()
    }

    fn p(c: &[f64], order: u32, x: f64) -> f64 {
        if c.is_empty() {
            0.0
        } else {
            poly_derivative(c, order, x)
        }
    }

    /// `∂_x^order F_t(x)` given `W_t = w`.
    pub fn field_dx(&self, order: u32, t: f64, w: f64, x: f64) -> f64 {
        Self::p(&self.f0, order, x) + t * Self::p(&self.g, order, x) + w * Self::p(&self.h, order, x)
    }

    pub fn field(&self, t: f64, w: f64, x: f64) -> f64 {
        self.field_dx(0, t, w, x)
    }

    pub fn field_d1(&self, t: f64, w: f64, x: f64) -> f64 {
        self.field_dx(1, t, w, x)
    }

    pub fn field_d2(&self, t: f64, w: f64, x: f64) -> f64 {
        self.field_dx(2, t, w, x)
    }

    pub fn g_eval(&self, order: u32, x: f64) -> f64 {
        Self::p(&self.g, order, x)
    }

    pub fn h_eval(&self, order: u32, x: f64) -> f64 {
        Self::p(&self.h, order, x)
    }

    /// Static status of the sixteen integrability hypotheses of the
    /// Itô–Wentzell theorem for this case. Informational only.
    pub fn hypotheses(&self) -> Vec<Hypothesis> {
        let deg = |c: &[f64]| c.iter().rposition(|v| *v != 0.0);
        let (df, dg, dh) = (deg(&self.f0), deg(&self.g), deg(&self.h));
        let le = |d: Option<usize>, k: usize| d.map_or(true, |d| d <= k);
        let zero = |d: Option<usize>| d.is_none();
        use HypothesisStatus::*;
        let st = |ok: bool| if ok { Satisfied } else { NotSatisfied };
        let h_is_zero = zero(dh);
        let table = [
            ("X in L^{1,4}", Satisfied),
            ("A in L^4", Satisfied),
            ("B in L^8", Satisfied),
            ("F in L^{1,4}(L^2(R))", st(zero(df) && zero(dg) && zero(dh))),
            ("F in C^2", Satisfied),
            ("G in L^2([0,T]; L^2(R))", st(zero(dg))),
            ("H in L^{1,4}([0,T]; L^2(R))", st(zero(dh))),
            ("sup |F'|^4 integrable", st(le(df, 1) && le(dg, 1) && le(dh, 1))),
            ("sup |F''|^4 integrable", Satisfied),
            ("sup |D F'|^2 integrable", if h_is_zero { NotApplicable } else { st(le(dh, 1)) }),
            ("sup |(D F)'|^4 integrable", if h_is_zero { NotApplicable } else { st(le(dh, 1)) }),
            ("sup |G|^2 integrable", st(le(dg, 0))),
            ("sup |H|^4 integrable", st(le(dh, 0))),
            ("sup |H'|^4 integrable", st(le(dh, 1))),
            ("sup |D H|^4 integrable", Satisfied),
            ("sup |D X|^4 integrable", Satisfied),
        ];
        table
            .iter()
            .enumerate()
            .map(|(k, (condition, status))| Hypothesis {
                index: k + 1,
                condition,
                status: *status,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypothesisStatus {
    Satisfied,
    NotSatisfied,
    NotApplicable,
}

impl fmt::Display for HypothesisStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HypothesisStatus::Satisfied => "satisfied",
            HypothesisStatus::NotSatisfied => "not satisfied",
            HypothesisStatus::NotApplicable => "not applicable",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hypothesis {
    pub index: usize,
    pub condition: &'static str,
    pub status: HypothesisStatus,
}
