//! Versioned JSON files for datasets, fitted models and Gibbs traces.
//!
//! Matrices are stored with explicit `rows`/`cols` and row-major `data`.
//! Missing dataset cells are written as `null`.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::GibbsTrace;
use crate::model::{Hyperparameters, MultiViewDataset, ProjectionSet, ViewBlock};

pub const FORMAT_VERSION: u32 = 1;
pub const DATASET_FORMAT: &str = "mvad-dataset";
pub const MODEL_FORMAT: &str = "mvad-model";
pub const TRACE_FORMAT: &str = "mvad-trace";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Clone> MatrixJson<T> {
    fn check(&self, what: &str) -> Result<()> {
        if self.rows.checked_mul(self.cols) != Some(self.data.len()) {
            return Err(Error::Format(format!(
                "{what}: {}x{} matrix with {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(())
    }
}

fn matrix_to_json(m: &DMatrix<f64>) -> MatrixJson<f64> {
    MatrixJson {
        rows: m.nrows(),
        cols: m.ncols(),
        data: m.transpose().iter().copied().collect(),
    }
}

fn matrix_from_json(m: &MatrixJson<f64>, what: &str) -> Result<DMatrix<f64>> {
    m.check(what)?;
    Ok(DMatrix::from_row_slice(m.rows, m.cols, &m.data))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

impl Header {
    fn new(format: &str) -> Self {
        Self {
            format: format.into(),
            version: FORMAT_VERSION,
        }
    }

    fn expect(&self, format: &str) -> Result<()> {
        if self.format != format {
            return Err(Error::Format(format!("expected {format:?}, found {:?}", self.format)));
        }
        if self.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported {format} version {} (expected {FORMAT_VERSION})",
                self.version
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    #[serde(flatten)]
    header: Header,
    n_instances: usize,
    views: Vec<MatrixJson<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<bool>>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    #[serde(flatten)]
    header: Header,
    hyperparameters: Hyperparameters,
    views: Vec<MatrixJson<f64>>,
}

#[derive(Serialize, Deserialize)]
struct TraceFile {
    #[serde(flatten)]
    header: Header,
    trace: GibbsTrace,
}

/// A fitted model: hyperparameters and projection matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub hyper: Hyperparameters,
    pub projections: ProjectionSet,
}

pub fn dataset_to_json(data: &MultiViewDataset) -> Result<String> {
    let views = data
        .views()
        .iter()
        .map(|v| {
            let mut cells = Vec::with_capacity(v.n_rows() * v.dim());
            for n in 0..v.n_rows() {
                for m in 0..v.dim() {
                    cells.push(v.is_observed(n, m).then(|| v.value(n, m)));
                }
            }
            MatrixJson {
                rows: v.n_rows(),
                cols: v.dim(),
                data: cells,
            }
        })
        .collect();
    let file = DatasetFile {
        header: Header::new(DATASET_FORMAT),
        n_instances: data.n_instances(),
        views,
        labels: data.labels().map(<[bool]>::to_vec),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn dataset_from_json(text: &str) -> Result<MultiViewDataset> {
    let file: DatasetFile = parse(text)?;
    file.header.expect(DATASET_FORMAT)?;
    let mut blocks = Vec::with_capacity(file.views.len());
    for (d, v) in file.views.iter().enumerate() {
        v.check(&format!("view {d}"))?;
        if v.rows != file.n_instances {
            return Err(Error::Format(format!(
                "view {d} has {} rows, expected {}",
                v.rows, file.n_instances
            )));
        }
        let values = DMatrix::from_row_iterator(v.rows, v.cols, v.data.iter().map(|c| c.unwrap_or(0.0)));
        let observed = DMatrix::from_row_iterator(v.rows, v.cols, v.data.iter().map(Option::is_some));
        blocks.push(ViewBlock::new(values, observed)?);
    }
    MultiViewDataset::new(blocks, file.labels)
}

pub fn model_to_json(model: &ModelArtifact) -> Result<String> {
    let file = ModelFile {
        header: Header::new(MODEL_FORMAT),
        hyperparameters: model.hyper,
        views: model.projections.views().iter().map(matrix_to_json).collect(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn model_from_json(text: &str) -> Result<ModelArtifact> {
    let file: ModelFile = parse(text)?;
    file.header.expect(MODEL_FORMAT)?;
    file.hyperparameters.validate()?;
    let mats = file
        .views
        .iter()
        .enumerate()
        .map(|(d, m)| matrix_from_json(m, &format!("projection {d}")))
        .collect::<Result<Vec<_>>>()?;
    let projections = ProjectionSet::new(mats)?;
    if projections.k() != file.hyperparameters.k {
        return Err(Error::Format(format!(
            "projections have {} columns but k = {}",
            projections.k(),
            file.hyperparameters.k
        )));
    }
    Ok(ModelArtifact {
        hyper: file.hyperparameters,
        projections,
    })
}

pub fn trace_to_json(trace: &GibbsTrace) -> Result<String> {
    let file = TraceFile {
        header: Header::new(TRACE_FORMAT),
        trace: trace.clone(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn trace_from_json(text: &str) -> Result<GibbsTrace> {
    let file: TraceFile = parse(text)?;
    file.header.expect(TRACE_FORMAT)?;
    let t = &file.trace;
    if t.sweeps.iter().any(|s| s.latent_counts.len() != t.n_instances) {
        return Err(Error::Format("trace sweep length differs from instance count".into()));
    }
    Ok(file.trace)
}

fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

fn read(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

fn write(path: &Path, text: &str) -> Result<()> {
    let mut text = text.to_owned();
    text.push('\n');
    Ok(fs::write(path, text)?)
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<MultiViewDataset> {
    dataset_from_json(&read(path.as_ref())?)
}

pub fn write_dataset(path: impl AsRef<Path>, data: &MultiViewDataset) -> Result<()> {
    write(path.as_ref(), &dataset_to_json(data)?)
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelArtifact> {
    model_from_json(&read(path.as_ref())?)
}

pub fn write_model(path: impl AsRef<Path>, model: &ModelArtifact) -> Result<()> {
    write(path.as_ref(), &model_to_json(model)?)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<GibbsTrace> {
    trace_from_json(&read(path.as_ref())?)
}

pub fn write_trace(path: impl AsRef<Path>, trace: &GibbsTrace) -> Result<()> {
    write(path.as_ref(), &trace_to_json(trace)?)
}
