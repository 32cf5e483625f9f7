use super::{covariance_unchecked, HurstParameter, SamplePath, TimeGrid};
use crate::error::{Error, Result};
use crate::rng::SeedSpec;
use nalgebra::{DMatrix, SymmetricEigen};
use std::sync::Arc;

const JITTER_START: f64 = 1e-12;
const JITTER_MAX: f64 = 1e-8;

/// `R_H(t_i, t_j)` over the non-zero grid points `t_1..t_n`, with its lower
/// Cholesky factor.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    grid: Arc<TimeGrid>,
    hurst: HurstParameter,
    matrix: DMatrix<f64>,
    factor: DMatrix<f64>,
    jitter: f64,
}

impl CovarianceMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn hurst(&self) -> HurstParameter {
        self.hurst
    }

    /// Diagonal jitter that was needed for the factorization (0 if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.factor
    }
}

pub fn build_covariance_matrix(grid: &TimeGrid, hurst: HurstParameter) -> Result<CovarianceMatrix> {
    build_shared(Arc::new(grid.clone()), hurst)
}

fn build_shared(grid: Arc<TimeGrid>, hurst: HurstParameter) -> Result<CovarianceMatrix> {
    let pts = &grid.points()[1..];
    let n = pts.len();
    let two_h = hurst.two_h();
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            pts[i].powf(two_h)
        } else {
            covariance_unchecked(pts[i], pts[j], two_h)
        }
    });
    let max_diag = (0..n).map(|i| matrix[(i, i)]).fold(0.0, f64::max);

    let mut jitter = 0.0;
    loop {
        let mut m = matrix.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(ch) = m.cholesky() {
            return Ok(CovarianceMatrix {
                grid,
                hurst,
                matrix,
                factor: ch.l(),
                jitter,
            });
        }
        jitter = if jitter == 0.0 {
            JITTER_START * max_diag
        } else {
            jitter * 10.0
        };
        if jitter > JITTER_MAX * max_diag * (1.0 + 1e-9) {
            let eig = SymmetricEigen::new(matrix.clone());
            let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            return Err(Error::SingularCovariance { min_eigenvalue });
        }
    }
}

/// Exact sampler on an arbitrary grid; the factorization is reused across paths.
#[derive(Debug, Clone)]
pub struct CholeskySampler {
    cov: CovarianceMatrix,
    // Row-major lower triangle, row i holds i + 1 entries.
    rows: Vec<f64>,
}

impl CholeskySampler {
    pub fn new(grid: Arc<TimeGrid>, hurst: HurstParameter) -> Result<Self> {
        let cov = build_shared(grid, hurst)?;
        let n = cov.dim();
        let mut rows = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                rows.push(cov.factor[(i, j)]);
            }
        }
        Ok(Self { cov, rows })
    }

    pub fn covariance(&self) -> &CovarianceMatrix {
        &self.cov
    }

    pub fn sample(&self, seed: SeedSpec) -> SamplePath {
        let n = self.cov.dim();
        let z = seed.normals().take_vec(n);
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        let mut offset = 0;
        for i in 0..n {
            let row = &self.rows[offset..offset + i + 1];
            values.push(row.iter().zip(&z).map(|(l, z)| l * z).sum());
            offset += i + 1;
        }
        SamplePath {
            grid: self.cov.grid.clone(),
            values,
            label: format!("cholesky/{}", seed.stream_index),
        }
    }
}

pub fn generate_path_cholesky(grid: &TimeGrid, hurst: HurstParameter, seed: SeedSpec) -> Result<SamplePath> {
    Ok(CholeskySampler::new(Arc::new(grid.clone()), hurst)?.sample(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(v: f64) -> HurstParameter {
        HurstParameter::new(v).unwrap()
    }

    #[test]
    fn small_matrices() {
        let m = build_covariance_matrix(&TimeGrid::uniform(1, 1.0).unwrap(), h(0.3)).unwrap();
        assert_eq!(m.dim(), 1);
        assert!((m.entry(0, 0) - 1.0).abs() < 1e-15);

        let m = build_covariance_matrix(&TimeGrid::uniform(2, 1.0).unwrap(), h(0.75)).unwrap();
        let expect = [[0.353553, 0.5], [0.5, 1.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m.entry(i, j) - expect[i][j]).abs() < 1e-6);
            }
        }
        assert!((m.entry(0, 0) - 0.5f64.powf(1.5)).abs() < 1e-15);

        let m = build_covariance_matrix(&TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap(), h(0.5)).unwrap();
        let expect = [[1.0, 1.0], [1.0, 2.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m.entry(i, j) - expect[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn matrix_is_symmetric_with_power_diagonal() {
        let g = TimeGrid::new(vec![0.0, 0.1, 0.25, 0.7, 1.3]).unwrap();
        let m = build_covariance_matrix(&g, h(0.8)).unwrap();
        for i in 0..m.dim() {
            assert_eq!(m.entry(i, i), g.points()[i + 1].powf(1.6));
            for j in 0..m.dim() {
                assert_eq!(m.entry(i, j), m.entry(j, i));
            }
        }
        assert_eq!(m.jitter(), 0.0);
    }

    #[test]
    fn near_degenerate_grid_uses_jitter_or_reports() {
        // Two nearly coincident points make the matrix numerically singular.
        let g = TimeGrid::new(vec![0.0, 1.0, 1.0 + 1e-13]).unwrap();
        match build_covariance_matrix(&g, h(0.9)) {
            Ok(m) => assert!(m.jitter() > 0.0 && m.jitter() <= 1e-8 * 1.0001 * m.entry(1, 1)),
            Err(Error::SingularCovariance { min_eigenvalue }) => assert!(min_eigenvalue < 1e-8),
            Err(e) => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn deterministic_and_starts_at_zero() {
        let g = TimeGrid::uniform(16, 2.0).unwrap();
        let s = SeedSpec::new(3, 4);
        let a = generate_path_cholesky(&g, h(0.7), s).unwrap();
        let b = generate_path_cholesky(&g, h(0.7), s).unwrap();
        assert_eq!(a.values[0], 0.0);
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn unit_variance_at_one() {
        let g = Arc::new(TimeGrid::uniform(1, 1.0).unwrap());
        let sampler = CholeskySampler::new(g, h(0.7)).unwrap();
        let n = 10_000;
        let xs: Vec<f64> = (0..n)
            .map(|k| sampler.sample(SeedSpec::new(77, k as u64)).terminal())
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt(), "var {var}");
    }

    #[test]
    fn brownian_increments_uncorrelated() {
        let g = Arc::new(TimeGrid::uniform(4, 1.0).unwrap());
        let sampler = CholeskySampler::new(g, h(0.5)).unwrap();
        let n = 10_000;
        let prods: Vec<f64> = (0..n)
            .map(|k| {
                let p = sampler.sample(SeedSpec::new(78, k as u64));
                p.increment(0) * p.increment(2)
            })
            .collect();
        let m = crate::stats::MeanEstimate::from_samples(&prods);
        assert!(m.mean.abs() < 4.0 * m.stderr);
    }
}
