//! Circulant embedding (Davies–Harte / Wood–Chan) of fractional Gaussian noise.

use super::{fgn_autocovariance, HurstParameter, SamplePath, TimeGrid};
use crate::error::{Error, Result};
use crate::rng::SeedSpec;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

const NEGATIVE_EIGEN_RTOL: f64 = 1e-9;

/// Uniform-grid sampler with cached embedding eigenvalues. Cost per path is
/// one FFT of length `2m`, `m` the next power of two at or above `n`.
pub struct CirculantSampler {
    grid: Arc<TimeGrid>,
    n: usize,
    half: usize,
    // sqrt(λ_k / M)
    amplitudes: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl CirculantSampler {
    pub fn new(n: usize, horizon: f64, hurst: HurstParameter) -> Result<Self> {
        let grid = Arc::new(TimeGrid::uniform(n, horizon)?);
        let two_h = hurst.two_h();
        let half = n.next_power_of_two();
        let size = 2 * half;

        let mut row: Vec<Complex<f64>> = (0..size)
            .map(|k| {
                let lag = if k <= half { k } else { size - k };
                Complex::new(fgn_autocovariance(lag, two_h), 0.0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(size);
        fft.process(&mut row);

        let max = row.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
        let min = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        if min < -NEGATIVE_EIGEN_RTOL * max {
            return Err(Error::EmbeddingFailure {
                min_eigenvalue: min,
                relative: min / max,
            });
        }
        let amplitudes = row
            .iter()
            .map(|c| (c.re.max(0.0) / size as f64).sqrt())
            .collect();
        Ok(Self {
            grid,
            n,
            half,
            amplitudes,
            fft,
            scale: (horizon / n as f64).powf(hurst.value()),
        })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    /// Unit-spacing fGn sample of length `n` (before the `(T/n)^H` scaling).
    fn noise(&self, seed: SeedSpec) -> Vec<f64> {
        let m = self.half;
        let size = 2 * m;
        let mut z = seed.normals();
        let mut w = vec![Complex::new(0.0, 0.0); size];
        w[0] = Complex::new(self.amplitudes[0] * z.next_normal(), 0.0);
        w[m] = Complex::new(self.amplitudes[m] * z.next_normal(), 0.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for k in 1..m {
            let xi = Complex::new(r * z.next_normal(), r * z.next_normal());
            w[k] = xi * self.amplitudes[k];
            w[size - k] = xi.conj() * self.amplitudes[size - k];
        }
        self.fft.process(&mut w);
        w[..self.n].iter().map(|c| c.re).collect()
    }

    pub fn sample(&self, seed: SeedSpec) -> SamplePath {
        let fgn = self.noise(seed);
        let mut values = Vec::with_capacity(self.n + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for x in fgn {
            acc += x * self.scale;
            values.push(acc);
        }
        SamplePath {
            grid: self.grid.clone(),
            values,
            label: format!("circulant/{}", seed.stream_index),
        }
    }
}

pub fn generate_path_circulant(n: usize, horizon: f64, hurst: HurstParameter, seed: SeedSpec) -> Result<SamplePath> {
    Ok(CirculantSampler::new(n, horizon, hurst)?.sample(seed))
}
