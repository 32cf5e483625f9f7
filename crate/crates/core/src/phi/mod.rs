//! The phi-kernel `φ(s,t) = H(2H−1)|s−t|^{2H−2}` and its exact integrals.
//!
//! Every double integral of `φ` over a rectangle is evaluated through the
//! covariance `R`, using `∂²R/∂s∂t = φ`; the diagonal singularity never has to
//! be integrated numerically.

mod cells;
mod step;

pub use cells::CellKernels;
pub use step::{inner_product_pc, phi_norm_sq, phi_operator, StepFunction};

use crate::error::{Error, Result};
use crate::fbm::HurstParameter;

/// A Hurst parameter known to satisfy `H > 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiKernelContext {
    hurst: HurstParameter,
}

impl PhiKernelContext {
    pub fn new(hurst: HurstParameter) -> Result<Self> {
        if hurst.requires_long_memory() {
            Ok(Self { hurst })
        } else {
            Err(Error::LongMemoryRequired(hurst.value()))
        }
    }

    pub fn from_value(h: f64) -> Result<Self> {
        Self::new(HurstParameter::new(h)?)
    }

    pub fn hurst(&self) -> HurstParameter {
        self.hurst
    }

    pub fn h(&self) -> f64 {
        self.hurst.value()
    }

    pub fn two_h(&self) -> f64 {
        self.hurst.two_h()
    }

    /// `|x|^{2H}`
    #[inline]
    pub(crate) fn pow2h(&self, x: f64) -> f64 {
        x.abs().powf(self.two_h())
    }

    /// `R(s, t)` without domain checks.
    #[inline]
    #[cfg(test)]
    pub(crate) fn r(&self, s: f64, t: f64) -> f64 {
        crate::fbm::covariance_unchecked(s, t, self.two_h())
    }

    /// `∫_a^b ∫_c^d φ` without domain checks.
    #[inline]
    pub(crate) fn rect(&self, a: f64, b: f64, c: f64, d: f64) -> f64 {
        if a == b || c == d {
            return 0.0;
        }
        // R(b,d) − R(a,d) − R(b,c) + R(a,c); the t^{2H} terms cancel identically.
        0.5 * (self.pow2h(b - c) + self.pow2h(a - d) - self.pow2h(b - d) - self.pow2h(a - c))
    }

    /// `K(s, t) = ∫_0^t φ(s, v) dv` without domain checks.
    #[inline]
    pub(crate) fn k(&self, s: f64, t: f64) -> f64 {
        let e = self.two_h() - 1.0;
        let diff = s - t;
        let tail = if diff == 0.0 { 0.0 } else { diff.signum() * diff.abs().powf(e) };
        self.h() * (s.powf(e) - tail)
    }
}

pub fn phi(s: f64, t: f64, ctx: &PhiKernelContext) -> Result<f64> {
    if s == t {
        return Err(Error::DiagonalSingularity(s));
    }
    let h = ctx.h();
    Ok(h * (2.0 * h - 1.0) * (s - t).abs().powf(2.0 * h - 2.0))
}

/// `∫_a^b ∫_c^d φ(u, v) dv du`, exact.
pub fn phi_rect_integral(a: f64, b: f64, c: f64, d: f64, ctx: &PhiKernelContext) -> Result<f64> {
    if !(0.0 <= a && a <= b && 0.0 <= c && c <= d) {
        return Err(Error::Domain(format!(
            "rectangle needs 0 <= a <= b and 0 <= c <= d, got [{a}, {b}] x [{c}, {d}]"
        )));
    }
    Ok(ctx.rect(a, b, c, d))
}

/// `K(s, t) = ∫_0^t φ(s, v) dv = H(s^{2H−1} − sign(s−t)|s−t|^{2H−1})`.
///
/// This is also `∂R/∂s (s, t)` and the phi-derivative `D_s^φ W_t`.
#[allow(non_snake_case)]
pub fn kernel_K(s: f64, t: f64, ctx: &PhiKernelContext) -> Result<f64> {
    if !(s >= 0.0 && t >= 0.0) {
        return Err(Error::Domain(format!("kernel_K needs s, t >= 0, got ({s}, {t})")));
    }
    Ok(ctx.k(s, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(h: f64) -> PhiKernelContext {
        PhiKernelContext::from_value(h).unwrap()
    }

    #[test]
    fn context_rejects_short_memory() {
        assert!(matches!(PhiKernelContext::from_value(0.5), Err(Error::LongMemoryRequired(_))));
        assert!(matches!(PhiKernelContext::from_value(0.3), Err(Error::LongMemoryRequired(_))));
        assert!(PhiKernelContext::from_value(0.5001).is_ok());
    }

    #[test]
    fn phi_values() {
        let c = ctx(0.75);
        assert!((phi(0.0, 1.0, &c).unwrap() - 0.375).abs() < 1e-15);
        assert_eq!(phi(0.2, 0.9, &c).unwrap(), phi(0.9, 0.2, &c).unwrap());
        assert!(matches!(phi(0.4, 0.4, &c), Err(Error::DiagonalSingularity(_))));
        let near = ctx(0.5001);
        let v = phi(0.0, 1.0, &near).unwrap();
        assert!((v - 0.5001 * 0.0002).abs() < 1e-15);
        assert!((v - 1e-4).abs() < 1e-6);
    }

    #[test]
    fn rect_examples() {
        let c = ctx(0.75);
        assert!((phi_rect_integral(0.0, 0.5, 0.0, 1.0, &c).unwrap() - 0.5).abs() < 1e-15);
        let v = phi_rect_integral(0.0, 0.5, 0.5, 1.0, &c).unwrap();
        assert!((v - (0.5 - 0.5f64.powf(1.5))).abs() < 1e-15);
        assert!((v - 0.146447).abs() < 1e-6);
        assert_eq!(phi_rect_integral(0.3, 0.3, 0.0, 1.0, &c).unwrap(), 0.0);
        assert!(phi_rect_integral(0.5, 0.2, 0.0, 1.0, &c).is_err());
        assert!(phi_rect_integral(-0.1, 0.2, 0.0, 1.0, &c).is_err());
    }

    #[test]
    fn rect_equals_covariance_inclusion_exclusion() {
        let c = ctx(0.66);
        let h = c.hurst();
        let r = |s, t| crate::fbm::covariance(s, t, h).unwrap();
        for &(a, b, cc, d) in &[(0.1, 0.4, 0.2, 0.9), (0.0, 1.0, 0.0, 1.0), (0.5, 0.7, 0.1, 0.2)] {
            let ie = r(b, d) - r(a, d) - r(b, cc) + r(a, cc);
            assert!((phi_rect_integral(a, b, cc, d, &c).unwrap() - ie).abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_k_examples() {
        let c = ctx(0.75);
        assert!((kernel_K(1.0, 1.0, &c).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(kernel_K(0.7, 0.0, &c).unwrap(), 0.0);
        let v = kernel_K(0.5, 1.0, &c).unwrap();
        assert!((v - 0.75 * 2.0 * 0.5f64.sqrt()).abs() < 1e-15);
        assert!((v - 1.060660).abs() < 1e-6);
        assert!(kernel_K(-1.0, 1.0, &c).is_err());
    }

    #[test]
    fn kernel_k_is_continuous_and_matches_covariance_derivative() {
        let c = ctx(0.8);
        let t = 0.6;
        let eps = 1e-14;
        assert!((c.k(t - eps, t) - c.k(t + eps, t)).abs() < 1e-7);
        // ∂R/∂s by central differences
        for s in [0.2, 0.9, 1.4] {
            let hh = 1e-6;
            let fd = (c.r(s + hh, t) - c.r(s - hh, t)) / (2.0 * hh);
            assert!((fd - c.k(s, t)).abs() < 1e-7, "s={s}");
        }
    }
}
