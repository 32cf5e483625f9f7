use super::{SamplePath, TimeGrid};
use crate::error::{Error, Result};
use crate::stats::CompensatedSum;
use std::sync::Arc;

/// Entrywise `E[W(t_i) W(t_j)]` estimate over all grid points (including `t_0`).
#[derive(Debug, Clone)]
pub struct EmpiricalCovariance {
    pub grid: Arc<TimeGrid>,
    pub n_paths: usize,
    dim: usize,
    mean: Vec<f64>,
    stderr: Vec<f64>,
}

impl EmpiricalCovariance {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self, i: usize, j: usize) -> f64 {
        self.mean[i * self.dim + j]
    }

    /// Jackknife standard error of [`EmpiricalCovariance::mean`].
    pub fn stderr(&self, i: usize, j: usize) -> f64 {
        self.stderr[i * self.dim + j]
    }
}

/// Sample means of `W(t_i) W(t_j)` with jackknife standard errors.
///
/// For a sample mean the delete-one jackknife variance reduces to
/// `s² / N`, which is what is computed here.
pub fn empirical_covariance(paths: &[SamplePath]) -> Result<EmpiricalCovariance> {
    if paths.len() < 2 {
        return Err(Error::Domain(format!("need at least 2 paths, got {}", paths.len())));
    }
    for p in &paths[1..] {
        paths[0].ensure_same_grid(p)?;
    }
    let dim = paths[0].values.len();
    let n = paths.len() as f64;

    let mut sums = vec![CompensatedSum::new(); dim * dim];
    for p in paths {
        let v = &p.values;
        for i in 0..dim {
            for j in i..dim {
                sums[i * dim + j].add(v[i] * v[j]);
            }
        }
    }
    let mut mean = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let m = sums[i * dim + j].value() / n;
            mean[i * dim + j] = m;
            mean[j * dim + i] = m;
        }
    }

    let mut ss = vec![CompensatedSum::new(); dim * dim];
    for p in paths {
        let v = &p.values;
        for i in 0..dim {
            for j in i..dim {
                let d = v[i] * v[j] - mean[i * dim + j];
                ss[i * dim + j].add(d * d);
            }
        }
    }
    let mut stderr = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let se = (ss[i * dim + j].value() / (n - 1.0) / n).sqrt();
            stderr[i * dim + j] = se;
            stderr[j * dim + i] = se;
        }
    }
    Ok(EmpiricalCovariance {
        grid: paths[0].grid.clone(),
        n_paths: paths.len(),
        dim,
        mean,
        stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{covariance, CholeskySampler, HurstParameter};
    use crate::rng::SeedSpec;

    #[test]
    fn zero_paths_give_zero_matrix() {
        let g = Arc::new(TimeGrid::uniform(3, 1.0).unwrap());
        let paths: Vec<_> = (0..5)
            .map(|_| SamplePath::new(g.clone(), vec![0.0; 4], "z").unwrap())
            .collect();
        let c = empirical_covariance(&paths).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(c.mean(i, j), 0.0);
                assert_eq!(c.stderr(i, j), 0.0);
            }
        }
    }

    #[test]
    fn rejects_mismatched_grids_and_tiny_ensembles() {
        let g1 = Arc::new(TimeGrid::uniform(2, 1.0).unwrap());
        let g2 = Arc::new(TimeGrid::uniform(2, 2.0).unwrap());
        let a = SamplePath::new(g1, vec![0.0; 3], "a").unwrap();
        let b = SamplePath::new(g2, vec![0.0; 3], "b").unwrap();
        assert!(matches!(empirical_covariance(&[a.clone(), b]), Err(Error::GridMismatch(_))));
        assert!(empirical_covariance(&[a]).is_err());
    }

    #[test]
    fn jackknife_matches_leave_one_out() {
        let g = Arc::new(TimeGrid::uniform(1, 1.0).unwrap());
        let xs = [0.3, -1.2, 0.8, 2.0, -0.4];
        let paths: Vec<_> = xs
            .iter()
            .map(|&x| SamplePath::new(g.clone(), vec![0.0, x], "p").unwrap())
            .collect();
        let c = empirical_covariance(&paths).unwrap();
        let y: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let n = y.len() as f64;
        let total: f64 = y.iter().sum();
        let loo: Vec<f64> = y.iter().map(|v| (total - v) / (n - 1.0)).collect();
        let lbar = loo.iter().sum::<f64>() / n;
        let jk = ((n - 1.0) / n * loo.iter().map(|l| (l - lbar).powi(2)).sum::<f64>()).sqrt();
        assert!((c.stderr(1, 1) - jk).abs() < 1e-12);
    }

    #[test]
    fn cholesky_ensemble_matches_closed_form() {
        let h = HurstParameter::new(0.7).unwrap();
        let g = Arc::new(TimeGrid::uniform(2, 1.0).unwrap());
        let s = CholeskySampler::new(g, h).unwrap();
        let paths: Vec<_> = (0..10_000).map(|k| s.sample(SeedSpec::new(31, k))).collect();
        let c = empirical_covariance(&paths).unwrap();
        assert!((c.mean(1, 2) - 0.5).abs() < 4.0 * c.stderr(1, 2));
        assert!((c.mean(2, 2) - 1.0).abs() < 4.0 * c.stderr(2, 2));
        assert!((c.mean(1, 1) - covariance(0.5, 0.5, h).unwrap()).abs() < 4.0 * c.stderr(1, 1));
    }
}
