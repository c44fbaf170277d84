//! Ensemble directory layout:
//!
//! ```text
//! <dir>/member_0.json .. member_{k-1}.json   model documents
//! <dir>/folds.json                           id -> fold manifest
//! <dir>/index.json                           index manifest (ids, labels, matrix file)
//! <dir>/train_features.f64                   u64 LE rows, u64 LE cols, then rows*cols f64 LE
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FoldAssignment, SwitchEnsemble};
use crate::data::Dataset;
use crate::error::{PaseError, Result};
use crate::nn::MlpModel;

const MATRIX_FILE: &str = "train_features.f64";

#[derive(Serialize, Deserialize)]
struct FoldManifest {
    k: usize,
    /// Pairs of (sample id, fold).
    folds: Vec<(u64, usize)>,
}

#[derive(Serialize, Deserialize)]
struct IndexManifest {
    metric: String,
    matrix_file: String,
    rows: usize,
    cols: usize,
    class_count: usize,
    ids: Vec<u64>,
    labels: Vec<usize>,
}

pub(crate) fn write_matrix(path: &Path, rows: usize, cols: usize, values: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + values.len() * 8);
    bytes.extend_from_slice(&(rows as u64).to_le_bytes());
    bytes.extend_from_slice(&(cols as u64).to_le_bytes());
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| PaseError::io(path, e))
}

pub(crate) fn read_matrix(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| PaseError::io(path, e))?;
    if bytes.len() < 16 {
        return Err(PaseError::format(path, None, "missing shape header"));
    }
    let rows = u64::from_le_bytes(bytes[0..8].try_into().expect("8 bytes")) as usize;
    let cols = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = &bytes[16..];
    if body.len() != rows * cols * 8 {
        return Err(PaseError::format(
            path,
            None,
            format!(
                "shape {rows}x{cols} needs {} bytes, found {}",
                rows * cols * 8,
                body.len()
            ),
        ));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((rows, cols, values))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string(value)?).map_err(|e| PaseError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| PaseError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PaseError::format(path, None, e.to_string()))
}

pub fn save_ensemble(ens: &SwitchEnsemble, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| PaseError::io(dir, e))?;
    for (j, m) in ens.models().iter().enumerate() {
        m.save(dir.join(format!("member_{j}.json")))?;
    }
    write_json(
        &dir.join("folds.json"),
        &FoldManifest {
            k: ens.k(),
            folds: ens.folds().iter().collect(),
        },
    )?;
    let train = ens.train_data();
    write_matrix(&dir.join(MATRIX_FILE), train.len(), train.dim(), train.features())?;
    write_json(
        &dir.join("index.json"),
        &IndexManifest {
            metric: "squared_l2".into(),
            matrix_file: MATRIX_FILE.into(),
            rows: train.len(),
            cols: train.dim(),
            class_count: train.class_count(),
            ids: train.ids().to_vec(),
            labels: train.labels().to_vec(),
        },
    )
}

pub fn load_ensemble(dir: impl AsRef<Path>) -> Result<SwitchEnsemble> {
    let dir = dir.as_ref();
    let folds: FoldManifest = read_json(&dir.join("folds.json"))?;
    let index: IndexManifest = read_json(&dir.join("index.json"))?;
    if index.metric != "squared_l2" {
        return Err(PaseError::format(
            dir.join("index.json"),
            None,
            format!("unknown metric {}", index.metric),
        ));
    }
    let matrix_path = dir.join(&index.matrix_file);
    let (rows, cols, values) = read_matrix(&matrix_path)?;
    if rows != index.rows || cols != index.cols {
        return Err(PaseError::format(
            matrix_path,
            None,
            "matrix shape disagrees with index manifest",
        ));
    }
    let train = Dataset::new(values, cols, index.labels, index.ids, index.class_count)?;
    let fold_map: BTreeMap<u64, usize> = folds.folds.into_iter().collect();
    let assignment = FoldAssignment::new(folds.k, fold_map)?;
    let models = (0..folds.k)
        .map(|j| MlpModel::load(dir.join(format!("member_{j}.json"))))
        .collect::<Result<Vec<_>>>()?;
    SwitchEnsemble::from_parts(models, assignment, train)
}
