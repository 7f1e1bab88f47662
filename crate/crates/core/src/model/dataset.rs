use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// One view of every instance: an `N x M_d` block of observations and its
/// observation mask. Cells whose mask is `false` are missing and never enter
/// any likelihood computation; their stored value is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewBlock {
    values: DMatrix<f64>,
    observed: DMatrix<bool>,
}

impl ViewBlock {
    pub fn new(mut values: DMatrix<f64>, observed: DMatrix<bool>) -> Result<Self> {
        if values.shape() != observed.shape() {
            return Err(Error::InvalidDataset(format!(
                "values shape {:?} does not match mask shape {:?}",
                values.shape(),
                observed.shape()
            )));
        }
        values.zip_apply(&observed, |v, o| {
            if !o {
                *v = 0.0;
            }
        });
        Ok(Self { values, observed })
    }

    /// A block with every cell observed.
    pub fn fully_observed(values: DMatrix<f64>) -> Self {
        let observed = DMatrix::from_element(values.nrows(), values.ncols(), true);
        Self { values, observed }
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    /// Feature dimensionality `M_d`.
    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn mask(&self) -> &DMatrix<bool> {
        &self.observed
    }

    pub fn is_observed(&self, n: usize, m: usize) -> bool {
        self.observed[(n, m)]
    }

    pub fn value(&self, n: usize, m: usize) -> f64 {
        self.values[(n, m)]
    }

    pub fn row_fully_observed(&self, n: usize) -> bool {
        self.observed.row(n).iter().all(|&o| o)
    }

    pub fn observed_in_row(&self, n: usize) -> usize {
        self.observed.row(n).iter().filter(|&&o| o).count()
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn set_missing(&mut self, n: usize, m: usize) {
        self.observed[(n, m)] = false;
        self.values[(n, m)] = 0.0;
    }

    pub fn set_value(&mut self, n: usize, m: usize, value: f64) {
        self.values[(n, m)] = value;
        self.observed[(n, m)] = true;
    }

    pub(crate) fn values_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.values
    }

    pub(crate) fn mask_mut(&mut self) -> &mut DMatrix<bool> {
        &mut self.observed
    }
}

/// `N` instances observed through `D` views, with optional ground-truth
/// anomaly labels used only for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    n_instances: usize,
    views: Vec<ViewBlock>,
    labels: Option<Vec<bool>>,
}

impl MultiViewDataset {
    pub fn new(views: Vec<ViewBlock>, labels: Option<Vec<bool>>) -> Result<Self> {
        let first = views
            .first()
            .ok_or_else(|| Error::InvalidDataset("a dataset needs at least one view".into()))?;
        let n = first.n_rows();
        for (d, view) in views.iter().enumerate() {
            if view.n_rows() != n {
                return Err(Error::InvalidDataset(format!(
                    "view {d} has {} rows, expected {n}",
                    view.n_rows()
                )));
            }
            if view.dim() == 0 {
                return Err(Error::InvalidDataset(format!("view {d} has no features")));
            }
            for i in 0..n {
                for m in 0..view.dim() {
                    if view.is_observed(i, m) && !view.value(i, m).is_finite() {
                        return Err(Error::InvalidDataset(format!(
                            "observed cell ({i}, {d}, {m}) is not finite"
                        )));
                    }
                }
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::InvalidDataset(format!(
                    "{} labels for {n} instances",
                    labels.len()
                )));
            }
        }
        Ok(Self {
            n_instances: n,
            views,
            labels,
        })
    }

    /// Builds a fully observed dataset from dense `N x M_d` blocks.
    pub fn from_dense(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        Self::new(
            blocks.into_iter().map(ViewBlock::fully_observed).collect(),
            None,
        )
    }

    pub fn n_instances(&self) -> usize {
        self.n_instances
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn views(&self) -> &[ViewBlock] {
        &self.views
    }

    pub fn view(&self, d: usize) -> &ViewBlock {
        &self.views[d]
    }

    pub fn view_dims(&self) -> Vec<usize> {
        self.views.iter().map(ViewBlock::dim).collect()
    }

    pub fn labels(&self) -> Option<&[bool]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != self.n_instances {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {} instances",
                labels.len(),
                self.n_instances
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn observed_count(&self) -> usize {
        self.views.iter().map(ViewBlock::observed_count).sum()
    }

    pub fn has_missing(&self) -> bool {
        self.views
            .iter()
            .any(|v| v.observed_count() != v.n_rows() * v.dim())
    }

    /// Marks a single cell missing; its stored value is kept but ignored.
    pub fn set_missing(&mut self, n: usize, d: usize, m: usize) {
        self.views[d].set_missing(n, m);
    }

    pub(crate) fn view_mut(&mut self, d: usize) -> &mut ViewBlock {
        &mut self.views[d]
    }
}
