//! Datasets, loaders, synthetic generators, the disjoint re-partitioning
//! protocol and exact-duplicate grouping.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{PaseError, Result};
use crate::rng::SplitMix64;

/// Row-major feature matrix with integer labels and stable sample ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    ids: Vec<u64>,
    class_count: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, dim: usize, labels: Vec<usize>, ids: Vec<u64>, class_count: usize) -> Result<Self> {
        if dim == 0 {
            return Err(PaseError::Input("feature dimension must be positive".into()));
        }
        if class_count == 0 {
            return Err(PaseError::Input("class count must be positive".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(PaseError::Input(format!(
                "{} feature values do not form {} rows of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        if ids.len() != labels.len() {
            return Err(PaseError::Input(format!("{} ids for {} rows", ids.len(), labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(PaseError::Input(format!("label {bad} outside [0, {class_count})")));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        if let Some(dup) = ids.iter().find(|id| !seen.insert(**id)) {
            return Err(PaseError::Input(format!("duplicate sample id {dup}")));
        }
        Ok(Self {
            features,
            dim,
            labels,
            ids,
            class_count,
        })
    }

    /// Build with ids `0..n`.
    pub fn with_sequential_ids(features: Vec<f64>, dim: usize, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        let ids = (0..labels.len() as u64).collect();
        Self::new(features, dim, labels, ids, class_count)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.dim)
    }

    /// Position of each id, for id-keyed lookups.
    pub fn position_map(&self) -> HashMap<u64, usize> {
        self.ids.iter().enumerate().map(|(i, &id)| (id, i)).collect()
    }

    /// Rows at the given positions, in that order. Ids are preserved.
    pub fn select(&self, positions: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(positions.len() * self.dim);
        let mut labels = Vec::with_capacity(positions.len());
        let mut ids = Vec::with_capacity(positions.len());
        for &p in positions {
            features.extend_from_slice(self.row(p));
            labels.push(self.labels[p]);
            ids.push(self.ids[p]);
        }
        Dataset {
            features,
            dim: self.dim,
            labels,
            ids,
            class_count: self.class_count,
        }
    }

    /// Rows with the given ids, in the order given.
    pub fn select_ids(&self, ids: &[u64]) -> Result<Dataset> {
        let pos = self.position_map();
        let positions = ids
            .iter()
            .map(|id| {
                pos.get(id)
                    .copied()
                    .ok_or_else(|| PaseError::Input(format!("unknown sample id {id}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select(&positions))
    }

    /// Same rows with replacement labels (used for teacher-labelled student data).
    pub fn relabel(&self, labels: Vec<usize>) -> Result<Dataset> {
        Dataset::new(
            self.features.clone(),
            self.dim,
            labels,
            self.ids.clone(),
            self.class_count,
        )
    }

    /// Concatenate two datasets with disjoint ids.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.dim != other.dim || self.class_count != other.class_count {
            return Err(PaseError::Input(
                "cannot concatenate datasets of different shape".into(),
            ));
        }
        let mut features = self.features.clone();
        features.extend_from_slice(&other.features);
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        let mut ids = self.ids.clone();
        ids.extend_from_slice(&other.ids);
        Dataset::new(features, self.dim, labels, ids, self.class_count)
    }
}

/// Load a comma-separated file of decimal features with one integer label column.
///
/// `label_column` may be negative-free only; pass `None` for the final column.
/// Ids are assigned `0..n` in file order and the class count is `max label + 1`.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool, label_column: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| PaseError::format(path, None, e.to_string()))?;

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut dim = None;
    for (i, record) in reader.records().enumerate() {
        // 1-based file line numbers, counting the header.
        let row = i + 1 + usize::from(has_header);
        let record = record.map_err(|e| PaseError::format(path, Some(row), e.to_string()))?;
        if record.len() < 2 {
            return Err(PaseError::format(
                path,
                Some(row),
                "need at least one feature and a label",
            ));
        }
        let label_at = label_column.unwrap_or(record.len() - 1);
        if label_at >= record.len() {
            return Err(PaseError::format(
                path,
                Some(row),
                format!("label column {label_at} out of range for {} fields", record.len()),
            ));
        }
        match dim {
            None => dim = Some(record.len() - 1),
            Some(d) if d != record.len() - 1 => {
                return Err(PaseError::format(
                    path,
                    Some(row),
                    format!("expected {} fields, found {}", d + 1, record.len()),
                ))
            }
            Some(_) => {}
        }
        for (j, field) in record.iter().enumerate() {
            if j == label_at {
                let label: usize = field.parse().map_err(|_| {
                    PaseError::format(
                        path,
                        Some(row),
                        format!("label `{field}` is not a non-negative integer"),
                    )
                })?;
                labels.push(label);
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| PaseError::format(path, Some(row), format!("feature `{field}` is not a number")))?;
                features.push(v);
            }
        }
    }
    let Some(dim) = dim else {
        return Err(PaseError::format(path, None, "file contains no data rows"));
    };
    let class_count = labels.iter().max().map_or(1, |m| m + 1);
    Dataset::with_sequential_ids(features, dim, labels, class_count)
}

/// Write a dataset as CSV with the label in the final column.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| PaseError::format(path, None, e.to_string()))?;
    for (row, &label) in data.rows().zip(data.labels()) {
        let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        fields.push(label.to_string());
        w.write_record(&fields)
            .map_err(|e| PaseError::format(path, None, e.to_string()))?;
    }
    w.flush().map_err(|e| PaseError::io(path, e))
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| PaseError::format(path, None, "truncated header"))
}

/// Load an IDX image/label file pair (the MNIST distribution format).
///
/// Pixels are scaled by 1/255 and each image is flattened row-major.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let images = fs::read(images_path).map_err(|e| PaseError::io(images_path, e))?;
    let labels = fs::read(labels_path).map_err(|e| PaseError::io(labels_path, e))?;

    let magic = be_u32(&images, 0, images_path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(PaseError::format(
            images_path,
            None,
            format!("bad image magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"),
        ));
    }
    let count = be_u32(&images, 4, images_path)? as usize;
    let rows = be_u32(&images, 8, images_path)? as usize;
    let cols = be_u32(&images, 12, images_path)? as usize;
    let dim = rows * cols;
    let body = &images[16..];
    if body.len() != count * dim {
        return Err(PaseError::format(
            images_path,
            None,
            format!(
                "expected {} pixel bytes for {count} images of {rows}x{cols}, found {}",
                count * dim,
                body.len()
            ),
        ));
    }

    let magic = be_u32(&labels, 0, labels_path)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(PaseError::format(
            labels_path,
            None,
            format!("bad label magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"),
        ));
    }
    let label_count = be_u32(&labels, 4, labels_path)? as usize;
    let label_body = &labels[8..];
    if label_body.len() != label_count {
        return Err(PaseError::format(
            labels_path,
            None,
            format!("header says {label_count} labels, found {}", label_body.len()),
        ));
    }
    if label_count != count {
        return Err(PaseError::format(
            labels_path,
            None,
            format!("{label_count} labels for {count} images"),
        ));
    }

    let features = body.iter().map(|&b| f64::from(b) / 255.0).collect();
    let labels: Vec<usize> = label_body.iter().map(|&b| usize::from(b)).collect();
    let class_count = labels.iter().max().map_or(1, |m| m + 1).max(10);
    if dim == 0 {
        return Err(PaseError::format(images_path, None, "zero-sized images"));
    }
    Dataset::with_sequential_ids(features, dim, labels, class_count)
}

/// Isotropic Gaussian blobs, one per class, around seeded uniform centers in
/// `[-1, 1]^dim`. Samples are ordered class by class.
pub fn gen_blobs(class_count: usize, per_class: usize, dim: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if class_count == 0 || per_class == 0 || dim == 0 {
        return Err(PaseError::Config("blob counts and dimension must be positive".into()));
    }
    if !(spread.is_finite() && spread >= 0.0) {
        return Err(PaseError::Config(format!(
            "spread must be finite and non-negative, got {spread}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let centers: Vec<Vec<f64>> = (0..class_count)
        .map(|_| (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect())
        .collect();
    let n = class_count * per_class;
    let mut features = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for (class, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            for &c in center {
                features.push(if spread == 0.0 { c } else { c + spread * rng.normal() });
            }
            labels.push(class);
        }
    }
    Dataset::with_sequential_ids(features, dim, labels, class_count)
}

/// Replace exactly `round(fraction * n)` labels, chosen by seeded shuffle,
/// with a uniformly drawn *different* class.
pub fn apply_label_noise(data: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(PaseError::Config(format!(
            "label noise fraction {fraction} outside [0, 1]"
        )));
    }
    if fraction > 0.0 && data.class_count() < 2 {
        return Err(PaseError::Config("label noise needs at least two classes".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    rng.shuffle(&mut order);
    let flips = (fraction * data.len() as f64).round() as usize;
    let mut labels = data.labels().to_vec();
    for &i in &order[..flips] {
        let shift = 1 + rng.below(data.class_count() - 1);
        labels[i] = (labels[i] + shift) % data.class_count();
    }
    data.relabel(labels)
}

/// The three disjoint parts of the experiment protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitBundle {
    pub target_train: Dataset,
    pub target_test: Dataset,
    pub attack_pool: Dataset,
}

/// Id lists of a [`SplitBundle`], persisted so runs can resume.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub target_train: Vec<u64>,
    pub target_test: Vec<u64>,
    pub attack_pool: Vec<u64>,
}

impl SplitBundle {
    pub fn manifest(&self) -> SplitManifest {
        SplitManifest {
            target_train: self.target_train.ids().to_vec(),
            target_test: self.target_test.ids().to_vec(),
            attack_pool: self.attack_pool.ids().to_vec(),
        }
    }

    /// Rebuild the bundle from the full dataset and a stored manifest.
    pub fn from_manifest(full: &Dataset, manifest: &SplitManifest) -> Result<Self> {
        Ok(Self {
            target_train: full.select_ids(&manifest.target_train)?,
            target_test: full.select_ids(&manifest.target_test)?,
            attack_pool: full.select_ids(&manifest.attack_pool)?,
        })
    }
}

/// Merge-then-split: a seeded shuffle, the first `target_fraction` going to
/// the target side (split again by `train_fraction`) and the rest to the
/// attacker's pool.
pub fn repartition(full: &Dataset, target_fraction: f64, train_fraction: f64, seed: u64) -> Result<SplitBundle> {
    for (name, f) in [("target_fraction", target_fraction), ("train_fraction", train_fraction)] {
        if !(f > 0.0 && f < 1.0) {
            return Err(PaseError::Config(format!("{name} must be in (0, 1), got {f}")));
        }
    }
    let n = full.len();
    let mut order: Vec<usize> = (0..n).collect();
    SplitMix64::new(seed).shuffle(&mut order);

    let n_target = (target_fraction * n as f64).round() as usize;
    let n_train = (train_fraction * n_target as f64).round() as usize;
    let (target, pool) = order.split_at(n_target.min(n));
    let (train, test) = target.split_at(n_train.min(target.len()));
    if train.is_empty() || test.is_empty() || pool.is_empty() {
        return Err(PaseError::Config(format!(
            "split of {n} samples leaves an empty part ({}/{}/{})",
            train.len(),
            test.len(),
            pool.len()
        )));
    }
    Ok(SplitBundle {
        target_train: full.select(train),
        target_test: full.select(test),
        attack_pool: full.select(pool),
    })
}

/// Exact-duplicate grouping: rows whose features are bit-identical share a group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateGroups {
    group_of: BTreeMap<u64, usize>,
    group_count: usize,
}

impl DuplicateGroups {
    pub fn group_of(&self, id: u64) -> Option<usize> {
        self.group_of.get(&id).copied()
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, usize)> + '_ {
        self.group_of.iter().map(|(&id, &g)| (id, g))
    }

    /// Member ids of each group, groups in id order of first appearance.
    pub fn members(&self) -> Vec<Vec<u64>> {
        let mut out = vec![Vec::new(); self.group_count];
        for (&id, &g) in &self.group_of {
            out[g].push(id);
        }
        out
    }

    pub fn largest_group(&self) -> usize {
        self.members().iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Group ids are assigned in order of first appearance in `data`.
pub fn find_duplicates(data: &Dataset) -> DuplicateGroups {
    let mut by_bits: HashMap<Vec<u64>, usize> = HashMap::with_capacity(data.len());
    let mut group_of = BTreeMap::new();
    for (row, &id) in data.rows().zip(data.ids()) {
        // Normalize -0.0 to 0.0 so that numerically equal rows group together.
        let key: Vec<u64> = row.iter().map(|v| (v + 0.0).to_bits()).collect();
        let next = by_bits.len();
        let g = *by_bits.entry(key).or_insert(next);
        group_of.insert(id, g);
    }
    DuplicateGroups {
        group_count: by_bits.len(),
        group_of,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn write_tmp(contents: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents).unwrap();
        f
    }

    #[test]
    fn csv_three_rows() {
        let f = write_tmp(b"1,2,0\n3,4,1\n5,6,0\n");
        let d = load_csv(f.path(), false, None).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.labels(), &[0, 1, 0]);
        assert_eq!(d.ids(), &[0, 1, 2]);
        assert_eq!(d.row(2), &[5.0, 6.0]);
    }

    #[test]
    fn csv_header_is_skipped() {
        let f = write_tmp(b"a,b,label\n1,2,0\n3,4,1\n5,6,0\n");
        let d = load_csv(f.path(), true, None).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.labels(), &[0, 1, 0]);
    }

    #[test]
    fn csv_indexed_label_column() {
        let f = write_tmp(b"1,0.5,2\n0,1.5,3\n");
        let d = load_csv(f.path(), false, Some(0)).unwrap();
        assert_eq!(d.labels(), &[1, 0]);
        assert_eq!(d.row(0), &[0.5, 2.0]);
    }

    #[test]
    fn csv_empty_file_rejected() {
        let f = write_tmp(b"");
        assert!(matches!(load_csv(f.path(), false, None), Err(PaseError::Format { .. })));
    }

    #[test]
    fn csv_errors_carry_row() {
        let f = write_tmp(b"1,2,0\n3,x,1\n");
        match load_csv(f.path(), false, None) {
            Err(PaseError::Format { row: Some(2), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let f = write_tmp(b"1,2,0\n3,4,1.5\n");
        match load_csv(f.path(), false, None) {
            Err(PaseError::Format {
                row: Some(2), message, ..
            }) => assert!(message.contains("label")),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn idx_images(count: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        for x in [IDX_IMAGES_MAGIC, count, rows, cols] {
            v.extend_from_slice(&x.to_be_bytes());
        }
        v.extend_from_slice(pixels);
        v
    }

    fn idx_labels(labels: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        v.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
        v.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        v.extend_from_slice(labels);
        v
    }

    #[test]
    fn idx_scaling() {
        let img = write_tmp(&idx_images(1, 2, 2, &[0, 255, 0, 255]));
        let lab = write_tmp(&idx_labels(&[7]));
        let d = load_idx(img.path(), lab.path()).unwrap();
        assert_eq!(d.dim(), 4);
        assert_eq!(d.row(0), &[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(d.labels(), &[7]);
        assert_eq!(d.class_count(), 10);
    }

    #[test]
    fn idx_rejects_bad_files() {
        let lab = write_tmp(&idx_labels(&[1]));
        // truncated pixel body
        let img = write_tmp(&idx_images(1, 2, 2, &[0, 1, 2]));
        assert!(load_idx(img.path(), lab.path()).is_err());
        // truncated header
        let img = write_tmp(&[0, 0, 8]);
        assert!(load_idx(img.path(), lab.path()).is_err());
        // swapped magic
        let img = write_tmp(&idx_images(1, 2, 2, &[0, 1, 2, 3]));
        assert!(load_idx(lab.path(), img.path()).is_err());
        // count mismatch
        let lab2 = write_tmp(&idx_labels(&[1, 2]));
        assert!(load_idx(img.path(), lab2.path()).is_err());
    }

    #[test]
    fn blob_counts_and_determinism() {
        let d = gen_blobs(2, 10, 2, 0.3, 4).unwrap();
        assert_eq!(d.len(), 20);
        assert_eq!(d.labels().iter().filter(|&&l| l == 0).count(), 10);
        assert_eq!(d, gen_blobs(2, 10, 2, 0.3, 4).unwrap());
        assert_ne!(d, gen_blobs(2, 10, 2, 0.3, 5).unwrap());
    }

    #[test]
    fn zero_spread_blobs_collapse_to_centers() {
        let d = gen_blobs(3, 5, 4, 0.0, 1).unwrap();
        for c in 0..3 {
            let first = d.row(c * 5);
            for i in 0..5 {
                assert_eq!(d.row(c * 5 + i), first);
            }
        }
        // One duplicate group per class.
        let g = find_duplicates(&d);
        assert_eq!(g.group_count(), 3);
        for (id, group) in g.iter() {
            assert_eq!(group, d.labels()[id as usize]);
        }
    }

    #[test]
    fn repartition_sizes() {
        let d = gen_blobs(2, 50, 3, 1.0, 0).unwrap();
        let s = repartition(&d, 0.5, 0.5, 9).unwrap();
        assert_eq!(
            (s.target_train.len(), s.target_test.len(), s.attack_pool.len()),
            (25, 25, 50)
        );
    }

    #[test]
    fn repartition_rejects_empty_parts() {
        let d = gen_blobs(1, 3, 1, 1.0, 0).unwrap();
        assert!(matches!(repartition(&d, 0.5, 0.1, 0), Err(PaseError::Config(_))));
        assert!(matches!(repartition(&d, 1.0, 0.5, 0), Err(PaseError::Config(_))));
    }

    #[test]
    fn manifest_round_trip() {
        let d = gen_blobs(2, 20, 2, 1.0, 0).unwrap();
        let s = repartition(&d, 0.5, 0.5, 1).unwrap();
        let m: SplitManifest = serde_json::from_str(&serde_json::to_string(&s.manifest()).unwrap()).unwrap();
        assert_eq!(SplitBundle::from_manifest(&d, &m).unwrap(), s);
    }

    #[test]
    fn duplicates_detected() {
        let mut features: Vec<f64> = (0..12).map(f64::from).collect();
        // row 5 := row 0
        features[10] = 0.0;
        features[11] = 1.0;
        let d = Dataset::with_sequential_ids(features, 2, vec![0; 6], 1).unwrap();
        let g = find_duplicates(&d);
        assert_eq!(g.group_of(0), g.group_of(5));
        assert_eq!(g.group_count(), 5);
        let unique = gen_blobs(2, 10, 3, 1.0, 2).unwrap();
        assert_eq!(find_duplicates(&unique).group_count(), 20);
    }

    #[test]
    fn label_noise_flips_exact_count() {
        let d = gen_blobs(3, 100, 2, 1.0, 0).unwrap();
        let noisy = apply_label_noise(&d, 0.1, 7).unwrap();
        let flipped = d.labels().iter().zip(noisy.labels()).filter(|(a, b)| a != b).count();
        assert_eq!(flipped, 30);
    }

    #[test]
    fn dataset_rejects_bad_shapes() {
        assert!(Dataset::new(vec![0.0; 4], 2, vec![0, 1], vec![0, 0], 2).is_err());
        assert!(Dataset::new(vec![0.0; 4], 2, vec![0, 2], vec![0, 1], 2).is_err());
        assert!(Dataset::new(vec![0.0; 3], 2, vec![0, 1], vec![0, 1], 2).is_err());
    }

    proptest! {
        #[test]
        fn repartition_is_a_partition(n in 4usize..300, tf in 0.05f64..0.95, rf in 0.05f64..0.95, seed: u64) {
            let d = gen_blobs(1, n, 1, 1.0, 0).unwrap();
            if let Ok(s) = repartition(&d, tf, rf, seed) {
                let mut all: Vec<u64> = s.target_train.ids().iter()
                    .chain(s.target_test.ids())
                    .chain(s.attack_pool.ids())
                    .copied()
                    .collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..n as u64).collect::<Vec<_>>());
            }
        }

        #[test]
        fn duplicate_structure_survives_permutation(rows in proptest::collection::vec(0u8..4, 2..40), seed: u64) {
            // Small value alphabet forces plenty of duplicates.
            let n = rows.len();
            let features: Vec<f64> = rows.iter().map(|&v| f64::from(v)).collect();
            let d = Dataset::with_sequential_ids(features, 1, vec![0; n], 1).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            SplitMix64::new(seed).shuffle(&mut perm);
            let p = d.select(&perm);
            let a = find_duplicates(&d);
            let b = find_duplicates(&p);
            prop_assert_eq!(a.group_count(), b.group_count());
            for i in 0..n as u64 {
                for j in 0..n as u64 {
                    prop_assert_eq!(a.group_of(i) == a.group_of(j), b.group_of(i) == b.group_of(j));
                }
            }
        }
    }
}
