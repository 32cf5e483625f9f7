use crate::error::{Error, Result};
use crate::rng::SeedSpec;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::fmt;
use std::sync::Arc;

type DriftFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// Drift `b(t, x)`.
#[derive(Clone)]
pub enum Drift {
    Zero,
    /// `b(t, x) = −λ x`
    Ou { lambda: f64 },
    Custom { name: String, f: Arc<DriftFn> },
}

impl Drift {
    pub fn custom(name: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Drift::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    #[inline]
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match self {
            Drift::Zero => 0.0,
            Drift::Ou { lambda } => -lambda * x,
            Drift::Custom { f, .. } => f(t, x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Drift::Zero)
    }
}

impl fmt::Debug for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Drift::Zero => f.write_str("Zero"),
            Drift::Ou { lambda } => write!(f, "Ou {{ lambda: {lambda} }}"),
            Drift::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl fmt::Display for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Drift::Zero => f.write_str("0"),
            Drift::Ou { lambda } => write!(f, "-{lambda}*x"),
            Drift::Custom { name, .. } => f.write_str(name),
        }
    }
}

/// `dX = b(t, X) dt + σ dW`, `X_0 = x0` on `[0, horizon]`, with declared
/// Lipschitz constant `L` and linear-growth constant `C` for `b`.
#[derive(Debug, Clone)]
pub struct SdeSpec {
    pub drift: Drift,
    pub sigma: f64,
    pub x0: f64,
    pub horizon: f64,
    pub lipschitz: f64,
    pub growth: f64,
}

/// A sampled point where a declared constant is exceeded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstantViolation {
    Lipschitz { t: f64, x: f64, y: f64, ratio: f64 },
    Growth { t: f64, x: f64, ratio: f64 },
}

impl SdeSpec {
    pub fn new(drift: Drift, sigma: f64, x0: f64, horizon: f64, lipschitz: f64, growth: f64) -> Result<Self> {
        if !sigma.is_finite() || !x0.is_finite() {
            return Err(Error::Domain(format!("sigma and x0 must be finite, got {sigma}, {x0}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite() && growth > 0.0 && growth.is_finite()) {
            return Err(Error::Domain(format!(
                "declared constants must be positive, got L = {lipschitz}, C = {growth}"
            )));
        }
        if let Drift::Ou { lambda } = drift {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::Domain(format!("OU rate must be positive, got {lambda}")));
            }
        }
        Ok(Self {
            drift,
            sigma,
            x0,
            horizon,
            lipschitz,
            growth,
        })
    }

    /// Fractional Ornstein–Uhlenbeck `dX = −λX dt + σ dW`, with `L = C = λ`.
    pub fn ou(lambda: f64, sigma: f64, x0: f64, horizon: f64) -> Result<Self> {
        Self::new(Drift::Ou { lambda }, sigma, x0, horizon, lambda, lambda)
    }

    /// `dX = σ dW`. The constants are nominal.
    pub fn pure_noise(sigma: f64, x0: f64, horizon: f64) -> Result<Self> {
        Self::new(Drift::Zero, sigma, x0, horizon, 1.0, 1.0)
    }

    /// Samples `(t, x, y)` triples and reports where the declared Lipschitz
    /// or growth constant is exceeded. The constants are otherwise trusted.
    pub fn audit_constants(&self, samples: usize, x_scale: f64, seed: u64) -> Vec<ConstantViolation> {
        let mut z = SeedSpec::new(seed, 0).normals();
        let mut times = ChaCha20Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for _ in 0..samples {
            let t = (times.next_u64() >> 11) as f64 * f64::EPSILON / 2.0 * self.horizon;
            let x = x_scale * z.next_normal();
            let y = x_scale * z.next_normal();
            let (bx, by) = (self.drift.eval(t, x), self.drift.eval(t, y));
            if x != y {
                let ratio = (bx - by).abs() / (self.lipschitz * (x - y).abs());
                if ratio > 1.0 + 1e-12 {
                    out.push(ConstantViolation::Lipschitz { t, x, y, ratio });
                }
            }
            let ratio = bx.abs() / (self.growth * (1.0 + x.abs()));
            if ratio > 1.0 + 1e-12 {
                out.push(ConstantViolation::Growth { t, x, ratio });
            }
        }
        out
    }
}
