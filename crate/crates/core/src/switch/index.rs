//! Exact L2 nearest-neighbour search over the training set.
//!
//! Distances are screened with the cached-norm expansion
//! `|x|^2 + |y|^2 - 2 x.y`, which is cheap but carries rounding error. Every
//! point whose screened distance could still be the minimum (given a
//! rigorous error bound) is then re-scored with the direct sum of squared
//! differences, so the reported distance and tie-break are exactly those of
//! a plain linear scan.

use crate::data::Dataset;
use crate::error::{PaseError, Result};

/// Result of a nearest-neighbour query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: u64,
    /// Row of the neighbour in the indexed matrix.
    pub position: usize,
    pub squared_distance: f64,
}

/// Anything that can answer exact nearest-neighbour queries over the
/// training features.
pub trait NearestIndex: Send + Sync {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Minimum squared L2 distance; ties go to the lowest id.
    fn nearest(&self, x: &[f64]) -> Result<Neighbor>;
}

/// Direct squared distance, summed in coordinate order.
#[inline]
pub fn squared_l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone)]
pub struct BruteForceL2 {
    features: Vec<f64>,
    ids: Vec<u64>,
    dim: usize,
    norms: Vec<f64>,
}

impl BruteForceL2 {
    pub fn build(data: &Dataset) -> Result<Self> {
        Self::from_raw(data.features().to_vec(), data.ids().to_vec(), data.dim())
    }

    pub fn from_raw(features: Vec<f64>, ids: Vec<u64>, dim: usize) -> Result<Self> {
        if dim == 0 || features.len() != ids.len() * dim {
            return Err(PaseError::Input(format!(
                "{} values cannot hold {} rows of dimension {dim}",
                features.len(),
                ids.len()
            )));
        }
        if ids.is_empty() {
            return Err(PaseError::Input("cannot index an empty training set".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(PaseError::Input("non-finite training feature".into()));
        }
        let norms = features.chunks_exact(dim).map(|r| dot(r, r)).collect();
        Ok(Self {
            features,
            ids,
            dim,
            norms,
        })
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Upper bound on |screened - direct| for a pair with squared norms
    /// `nx`, `ny`. Each of the dot products carries at most `d u` relative
    /// error on the sum of absolute products, which is bounded by the
    /// norms; a generous constant covers the final additions.
    fn slack(&self, nx: f64, ny: f64) -> f64 {
        4.0 * (self.dim as f64 + 4.0) * f64::EPSILON * (nx + ny) + f64::MIN_POSITIVE
    }
}

impl NearestIndex for BruteForceL2 {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.ids.len()
    }

    fn nearest(&self, x: &[f64]) -> Result<Neighbor> {
        if x.len() != self.dim {
            return Err(PaseError::Input(format!(
                "query has dimension {}, index holds dimension {}",
                x.len(),
                self.dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(PaseError::Input("non-finite query".into()));
        }
        let nx = dot(x, x);

        // Screening pass: smallest upper bound on the true distance.
        let mut screened = Vec::with_capacity(self.len());
        let mut best_upper = f64::INFINITY;
        for (i, &ny) in self.norms.iter().enumerate() {
            let approx = nx + ny - 2.0 * dot(x, self.row(i));
            let slack = self.slack(nx, ny);
            best_upper = best_upper.min(approx + slack);
            screened.push((approx, slack));
        }

        // Exact pass over the survivors.
        let mut best: Option<Neighbor> = None;
        for (i, &(approx, slack)) in screened.iter().enumerate() {
            if approx - slack > best_upper {
                continue;
            }
            let d = squared_l2(x, self.row(i));
            let id = self.ids[i];
            let better = match best {
                None => true,
                Some(b) => d < b.squared_distance || (d == b.squared_distance && id < b.id),
            };
            if better {
                best = Some(Neighbor {
                    id,
                    position: i,
                    squared_distance: d,
                });
            }
        }
        Ok(best.expect("non-empty index always has a survivor"))
    }
}
