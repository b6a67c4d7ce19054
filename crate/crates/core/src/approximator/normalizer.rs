use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};

/// Raw inputs are clipped to this range before statistics and normalization.
pub const OBSERVATION_CLIP: f64 = 200.0;
/// Normalized outputs are clipped to this range.
pub const NORMALIZED_CLIP: f64 = 5.0;

/// Running per-dimension mean/std standardizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
    pub count: u64,
    pub eps_std: f64,
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Normalizer {
    pub fn new(dim: usize) -> Self {
        Self::with_eps(dim, 0.01)
    }

    pub fn with_eps(dim: usize, eps_std: f64) -> Self {
        Self {
            sum: vec![0.0; dim],
            sum_sq: vec![0.0; dim],
            count: 0,
            eps_std,
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.sum.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    /// Ingest row-major `batch` (any number of rows of `dim` values).
    pub fn update(&mut self, batch: &[f64]) -> Result<()> {
        let dim = self.dim();
        check_dim("normalizer batch", 0, batch.len() % dim.max(1))?;
        for row in batch.chunks_exact(dim) {
            for (k, &x) in row.iter().enumerate() {
                let x = x.clamp(-OBSERVATION_CLIP, OBSERVATION_CLIP);
                self.sum[k] += x;
                self.sum_sq[k] += x * x;
            }
            self.count += 1;
        }
        if self.count > 0 {
            let n = self.count as f64;
            for k in 0..dim {
                let mean = self.sum[k] / n;
                let var = (self.sum_sq[k] / n - mean * mean).max(0.0);
                self.mean[k] = mean;
                self.std[k] = var.sqrt().max(self.eps_std);
            }
        }
        Ok(())
    }

    pub fn normalize(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("normalizer input", self.dim(), x.len())?;
        let mut out = x.to_vec();
        self.normalize_rows_in_place(&mut out);
        Ok(out)
    }

    /// Normalize every row of a row-major buffer in place.
    pub fn normalize_rows_in_place(&self, rows: &mut [f64]) {
        let dim = self.dim();
        for row in rows.chunks_exact_mut(dim) {
            for (k, v) in row.iter_mut().enumerate() {
                let x = v.clamp(-OBSERVATION_CLIP, OBSERVATION_CLIP);
                *v = ((x - self.mean[k]) / self.std[k]).clamp(-NORMALIZED_CLIP, NORMALIZED_CLIP);
            }
        }
    }
}
