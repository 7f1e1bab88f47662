use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prior hyperparameters.
///
/// `a`, `b` are the shape and rate of the Gamma prior on the noise precision,
/// `r` the precision of latent vectors relative to the noise precision,
/// `gamma` the Dirichlet-process concentration and `k` the latent
/// dimensionality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub gamma: f64,
    pub k: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            r: 1.0,
            gamma: 1.0,
            k: 5,
        }
    }
}

impl Hyperparameters {
    pub fn new(a: f64, b: f64, r: f64, gamma: f64, k: usize) -> Result<Self> {
        let hyper = Self { a, b, r, gamma, k };
        hyper.validate()?;
        Ok(hyper)
    }

    pub fn with_k(self, k: usize) -> Self {
        Self { k, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("a", self.a), ("b", self.b), ("r", self.r), ("gamma", self.gamma)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidHyperparameter(format!(
                    "{name} must be a positive finite number, got {value}"
                )));
            }
        }
        if self.k == 0 {
            return Err(Error::InvalidHyperparameter(
                "latent dimensionality k must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// View-specific linear maps `W_d` (`M_d x K`) from the latent space to each
/// observation space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    mats: Vec<DMatrix<f64>>,
}

impl ProjectionSet {
    pub fn new(mats: Vec<DMatrix<f64>>) -> Result<Self> {
        let k = mats
            .first()
            .ok_or_else(|| Error::InvalidProjection("no views".into()))?
            .ncols();
        if k == 0 {
            return Err(Error::InvalidProjection("zero latent columns".into()));
        }
        for (d, w) in mats.iter().enumerate() {
            if w.ncols() != k {
                return Err(Error::InvalidProjection(format!(
                    "view {d} has {} columns, expected {k}",
                    w.ncols()
                )));
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidProjection(format!(
                    "view {d} has non-finite entries"
                )));
            }
        }
        Ok(Self { mats })
    }

    pub fn zeros(dims: &[usize], k: usize) -> Self {
        Self {
            mats: dims.iter().map(|&m| DMatrix::zeros(m, k)).collect(),
        }
    }

    /// i.i.d. `N(0, scale^2)` entries.
    pub fn random<R: Rng + ?Sized>(dims: &[usize], k: usize, scale: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, scale).expect("finite scale");
        let mats = dims
            .iter()
            .map(|&m| {
                // Row-major draw order so the stream does not depend on storage layout.
                let mut w = DMatrix::zeros(m, k);
                for i in 0..m {
                    for c in 0..k {
                        w[(i, c)] = normal.sample(rng);
                    }
                }
                w
            })
            .collect();
        Self { mats }
    }

    pub fn n_views(&self) -> usize {
        self.mats.len()
    }

    pub fn k(&self) -> usize {
        self.mats[0].ncols()
    }

    pub fn view(&self, d: usize) -> &DMatrix<f64> {
        &self.mats[d]
    }

    pub fn views(&self) -> &[DMatrix<f64>] {
        &self.mats
    }

    pub fn view_mut(&mut self, d: usize) -> &mut DMatrix<f64> {
        &mut self.mats[d]
    }

    pub fn n_params(&self) -> usize {
        self.mats.iter().map(|w| w.len()).sum()
    }

    /// Flattens all matrices into one parameter vector (column-major per view).
    pub fn to_flat(&self) -> Vec<f64> {
        self.mats.iter().flat_map(|w| w.iter().copied()).collect()
    }

    pub fn from_flat_like(&self, flat: &[f64]) -> Self {
        let mut offset = 0;
        let mats = self
            .mats
            .iter()
            .map(|w| {
                let len = w.len();
                let m = DMatrix::from_column_slice(w.nrows(), w.ncols(), &flat[offset..offset + len]);
                offset += len;
                m
            })
            .collect();
        Self { mats }
    }

    pub(crate) fn check_against(&self, dims: &[usize], k: usize) -> Result<()> {
        if self.mats.len() != dims.len() {
            return Err(Error::InvalidProjection(format!(
                "{} projection matrices for {} views",
                self.mats.len(),
                dims.len()
            )));
        }
        for (d, (w, &m)) in self.mats.iter().zip(dims).enumerate() {
            if w.nrows() != m || w.ncols() != k {
                return Err(Error::InvalidProjection(format!(
                    "view {d}: projection is {}x{}, expected {m}x{k}",
                    w.nrows(),
                    w.ncols()
                )));
            }
        }
        Ok(())
    }
}

/// Per-instance partition of views into latent vectors.
///
/// Labels are zero-based and compact: instance `n` uses latent vectors
/// `0..J_n`, each holding at least one view.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssignmentState {
    assignments: Vec<Vec<usize>>,
    counts: Vec<Vec<usize>>,
}

impl AssignmentState {
    /// Every view of every instance shares one latent vector.
    pub fn single(n_instances: usize, n_views: usize) -> Self {
        Self {
            assignments: vec![vec![0; n_views]; n_instances],
            counts: vec![vec![n_views]; n_instances],
        }
    }

    /// Every view of every instance has its own latent vector.
    pub fn all_distinct(n_instances: usize, n_views: usize) -> Self {
        Self {
            assignments: vec![(0..n_views).collect(); n_instances],
            counts: vec![vec![1; n_views]; n_instances],
        }
    }

    /// Builds a state from arbitrary labels, relabelling each instance's
    /// blocks in order of first appearance.
    pub fn from_labels(labels: Vec<Vec<usize>>) -> Result<Self> {
        let n_views = labels.first().map_or(0, Vec::len);
        let mut assignments = Vec::with_capacity(labels.len());
        let mut counts = Vec::with_capacity(labels.len());
        for (n, row) in labels.into_iter().enumerate() {
            if row.len() != n_views || n_views == 0 {
                return Err(Error::InvalidAssignment(format!(
                    "instance {n} has {} views, expected {n_views} (>= 1)",
                    row.len()
                )));
            }
            let mut seen: Vec<usize> = Vec::new();
            let mut compact = Vec::with_capacity(row.len());
            let mut cnt: Vec<usize> = Vec::new();
            for label in row {
                let j = match seen.iter().position(|&s| s == label) {
                    Some(j) => j,
                    None => {
                        seen.push(label);
                        cnt.push(0);
                        seen.len() - 1
                    }
                };
                cnt[j] += 1;
                compact.push(j);
            }
            assignments.push(compact);
            counts.push(cnt);
        }
        Ok(Self {
            assignments,
            counts,
        })
    }

    pub fn n_instances(&self) -> usize {
        self.assignments.len()
    }

    pub fn n_views(&self) -> usize {
        self.assignments.first().map_or(0, Vec::len)
    }

    /// `s_nd`, zero-based.
    pub fn assignment(&self, n: usize, d: usize) -> usize {
        self.assignments[n][d]
    }

    pub fn assignments(&self, n: usize) -> &[usize] {
        &self.assignments[n]
    }

    pub fn all_assignments(&self) -> &[Vec<usize>] {
        &self.assignments
    }

    /// `J_n`.
    pub fn n_latent(&self, n: usize) -> usize {
        self.counts[n].len()
    }

    /// `N_nj`.
    pub fn counts(&self, n: usize) -> &[usize] {
        &self.counts[n]
    }

    pub fn latent_counts(&self) -> Vec<usize> {
        self.counts.iter().map(Vec::len).collect()
    }

    pub fn total_latent(&self) -> usize {
        self.counts.iter().map(Vec::len).sum()
    }

    /// Views assigned to latent vector `j` of instance `n`, ascending.
    pub fn members(&self, n: usize, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignments[n]
            .iter()
            .enumerate()
            .filter(move |(_, &s)| s == j)
            .map(|(d, _)| d)
    }

    /// Checks compactness and count bookkeeping.
    pub fn validate(&self) -> Result<()> {
        let d_total = self.n_views();
        for (n, (row, cnt)) in self.assignments.iter().zip(&self.counts).enumerate() {
            if row.len() != d_total {
                return Err(Error::InvalidAssignment(format!("instance {n}: ragged row")));
            }
            if cnt.is_empty() || cnt.len() > d_total {
                return Err(Error::InvalidAssignment(format!(
                    "instance {n}: J_n = {} outside 1..={d_total}",
                    cnt.len()
                )));
            }
            let mut tally = vec![0usize; cnt.len()];
            for &s in row {
                if s >= cnt.len() {
                    return Err(Error::InvalidAssignment(format!(
                        "instance {n}: label {s} >= J_n = {}",
                        cnt.len()
                    )));
                }
                tally[s] += 1;
            }
            if tally != *cnt || cnt.contains(&0) {
                return Err(Error::InvalidAssignment(format!(
                    "instance {n}: counts {cnt:?} do not match labels {row:?}"
                )));
            }
        }
        Ok(())
    }

    /// Detaches view `d` of instance `n`, deleting its latent vector if it
    /// becomes empty. Returns the label it held. The state is left with one
    /// unassigned view until [`Self::attach`] is called.
    pub(crate) fn detach(&mut self, n: usize, d: usize) -> (usize, bool) {
        let j = self.assignments[n][d];
        self.counts[n][j] -= 1;
        let emptied = self.counts[n][j] == 0;
        if emptied {
            self.counts[n].remove(j);
            for s in self.assignments[n].iter_mut() {
                if *s > j {
                    *s -= 1;
                }
            }
        }
        self.assignments[n][d] = usize::MAX;
        (j, emptied)
    }

    /// Attaches view `d` of instance `n` to latent vector `j`; `j == J_n`
    /// opens a new one.
    pub(crate) fn attach(&mut self, n: usize, d: usize, j: usize) {
        if j == self.counts[n].len() {
            self.counts[n].push(1);
        } else {
            self.counts[n][j] += 1;
        }
        self.assignments[n][d] = j;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperparameters_reject_nonpositive() {
        assert!(Hyperparameters::new(1.0, 1.0, 1.0, 1.0, 2).is_ok());
        assert!(Hyperparameters::new(0.0, 1.0, 1.0, 1.0, 2).is_err());
        assert!(Hyperparameters::new(1.0, -1.0, 1.0, 1.0, 2).is_err());
        assert!(Hyperparameters::new(1.0, 1.0, 0.0, 1.0, 2).is_err());
        assert!(Hyperparameters::new(1.0, 1.0, 1.0, 0.0, 2).is_err());
        assert!(Hyperparameters::new(1.0, 1.0, 1.0, 1.0, 0).is_err());
        assert!(Hyperparameters::new(f64::NAN, 1.0, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn projection_checks_columns() {
        let ok = ProjectionSet::new(vec![DMatrix::zeros(3, 2), DMatrix::zeros(4, 2)]);
        assert!(ok.is_ok());
        let bad = ProjectionSet::new(vec![DMatrix::zeros(3, 2), DMatrix::zeros(4, 3)]);
        assert!(bad.is_err());
        let mut w = DMatrix::zeros(2, 2);
        w[(0, 0)] = f64::INFINITY;
        assert!(ProjectionSet::new(vec![w]).is_err());
    }

    #[test]
    fn flat_roundtrip_preserves_layout() {
        let w = ProjectionSet::new(vec![
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
            DMatrix::from_row_slice(1, 2, &[5.0, 6.0]),
        ])
        .unwrap();
        let flat = w.to_flat();
        assert_eq!(flat.len(), 6);
        assert_eq!(w.from_flat_like(&flat), w);
    }

    #[test]
    fn from_labels_compacts() {
        let s = AssignmentState::from_labels(vec![vec![7, 3, 7, 9], vec![2, 2, 2, 2]]).unwrap();
        assert_eq!(s.assignments(0), &[0, 1, 0, 2]);
        assert_eq!(s.counts(0), &[2, 1, 1]);
        assert_eq!(s.n_latent(1), 1);
        s.validate().unwrap();
    }

    #[test]
    fn detach_attach_keeps_compact_labels() {
        let mut s = AssignmentState::from_labels(vec![vec![0, 1, 2]]).unwrap();
        let (j, emptied) = s.detach(0, 1);
        assert_eq!((j, emptied), (1, true));
        assert_eq!(s.counts(0), &[1, 1]);
        assert_eq!(s.assignment(0, 2), 1);
        s.attach(0, 1, 0);
        s.validate().unwrap();
        assert_eq!(s.assignments(0), &[0, 0, 1]);
    }
}
