//! Dataset containers, synthetic Gaussian-blob generation, and the IDX /
//! CSV loaders.
//!
//! Features are stored as an n × d matrix of `f64` in [0, 1] (the loaders
//! rescale), labels as 1-based class indices.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::TrainerError;

/// Which role a split plays in the train/validate/test protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitTag {
    Train,
    Validation,
    Test,
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitTag::Train => write!(f, "train"),
            SplitTag::Validation => write!(f, "validation"),
            SplitTag::Test => write!(f, "test"),
        }
    }
}

/// One labeled dataset split: an n × d feature matrix plus n class labels
/// in [1, m].
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub features: Array2<f64>,
    /// 1-based class labels, one per feature row.
    pub labels: Vec<usize>,
    /// Number of classes m (labels range over [1, m]).
    pub num_classes: usize,
    pub tag: SplitTag,
}

impl DatasetSplit {
    /// Validates and wraps a split: at least one sample, one label per row,
    /// every label in [1, m], finite features.
    pub fn new(
        features: Array2<f64>,
        labels: Vec<usize>,
        num_classes: usize,
        tag: SplitTag,
    ) -> Result<Self, TrainerError> {
        if labels.is_empty() {
            return Err(TrainerError::InvalidConfig(format!(
                "{tag} split must contain at least one sample"
            )));
        }
        if features.nrows() != labels.len() {
            return Err(TrainerError::InvalidConfig(format!(
                "{tag} split has {} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if num_classes < 2 {
            return Err(TrainerError::InvalidConfig(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        for (i, &y) in labels.iter().enumerate() {
            if y < 1 || y > num_classes {
                return Err(TrainerError::InvalidConfig(format!(
                    "{tag} split row {i}: label {y} outside [1, {num_classes}]"
                )));
            }
        }
        if let Some(bad) = features.iter().find(|v| !v.is_finite()) {
            return Err(TrainerError::InvalidConfig(format!(
                "{tag} split contains a non-finite feature value {bad}"
            )));
        }
        Ok(Self {
            features,
            labels,
            num_classes,
            tag,
        })
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature dimension d.
    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Per-class sample counts (index j holds the count of label j+1).
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_classes];
        for &y in &self.labels {
            counts[y - 1] += 1;
        }
        counts
    }
}

/// The train/validation/test triple produced by generators and loaders.
#[derive(Debug, Clone)]
pub struct SplitTriple {
    pub train: DatasetSplit,
    pub validation: DatasetSplit,
    pub test: DatasetSplit,
}

impl SplitTriple {
    /// Validates that the three splits agree on dimension and class count.
    pub fn new(
        train: DatasetSplit,
        validation: DatasetSplit,
        test: DatasetSplit,
    ) -> Result<Self, TrainerError> {
        for s in [&validation, &test] {
            if s.dim() != train.dim() {
                return Err(TrainerError::InvalidConfig(format!(
                    "{} split dimension {} does not match train dimension {}",
                    s.tag,
                    s.dim(),
                    train.dim()
                )));
            }
            if s.num_classes != train.num_classes {
                return Err(TrainerError::InvalidConfig(format!(
                    "{} split has {} classes but train has {}",
                    s.tag,
                    s.num_classes,
                    train.num_classes
                )));
            }
        }
        Ok(Self {
            train,
            validation,
            test,
        })
    }
}

/// Generates m Gaussian clusters and splits them 70/15/15, stratified per
/// class.
///
/// Class j (1-based) is centered at (cos 2πj/m, sin 2πj/m, 0, …, 0) with
/// isotropic standard deviation 1/separation, so larger `separation` means
/// more separable classes. Per class, the validation and test splits each
/// take max(1, round(0.15 · n_j)) samples and train keeps the rest, which
/// keeps every split's class proportions within two samples of the global
/// proportion. Deterministic given the seed.
pub fn synth_blobs(
    m: usize,
    n_per_class: &[usize],
    d: usize,
    separation: f64,
    seed: u64,
) -> Result<SplitTriple, TrainerError> {
    if m < 2 {
        return Err(TrainerError::InvalidConfig(format!(
            "need at least 2 classes, got {m}"
        )));
    }
    if n_per_class.len() != m {
        return Err(TrainerError::InvalidConfig(format!(
            "expected {m} per-class counts, got {}",
            n_per_class.len()
        )));
    }
    if d < 2 {
        return Err(TrainerError::InvalidConfig(format!(
            "feature dimension must be at least 2, got {d}"
        )));
    }
    if !(separation.is_finite() && separation > 0.0) {
        return Err(TrainerError::InvalidConfig(format!(
            "separation must be a positive real, got {separation}"
        )));
    }
    for (j, &n) in n_per_class.iter().enumerate() {
        if n < 3 {
            return Err(TrainerError::InvalidConfig(format!(
                "class {} has only {n} samples; need at least 3 to populate every split",
                j + 1
            )));
        }
    }

    let std = 1.0 / separation;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [(Vec<f64>, Vec<usize>); 3] =
        [(Vec::new(), Vec::new()), (Vec::new(), Vec::new()), (Vec::new(), Vec::new())];

    for (j, &n_j) in n_per_class.iter().enumerate() {
        let angle = 2.0 * std::f64::consts::PI * (j as f64 + 1.0) / m as f64;
        let mut center = vec![0.0; d];
        center[0] = angle.cos();
        center[1] = angle.sin();

        let held = ((0.15 * n_j as f64).round() as usize).max(1);
        let counts = [n_j - 2 * held, held, held];
        for (part, &count) in parts.iter_mut().zip(&counts) {
            for _ in 0..count {
                for &c in &center {
                    let z: f64 = rng.sample(StandardNormal);
                    part.0.push(c + std * z);
                }
                part.1.push(j + 1);
            }
        }
    }

    let [train, validation, test] = parts;
    let build = |(flat, labels): (Vec<f64>, Vec<usize>), tag| {
        let n = labels.len();
        let features = Array2::from_shape_vec((n, d), flat)
            .expect("generated feature counts match the split shape");
        DatasetSplit::new(features, labels, m, tag)
    };
    SplitTriple::new(
        build(train, SplitTag::Train)?,
        build(validation, SplitTag::Validation)?,
        build(test, SplitTag::Test)?,
    )
}

/// Reads a big-endian u32 from `bytes` at `offset`.
fn be_u32(bytes: &[u8], offset: usize) -> u32 {
    u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ])
}

const IDX_IMAGES_MAGIC: u32 = 2051;
const IDX_LABELS_MAGIC: u32 = 2049;

/// Loads an IDX image/label pair (the standard big-endian handwritten-digit
/// format: magic 2051 for images, 2049 for labels).
///
/// Pixels are scaled from [0, 255] to [0, 1]; raw 0-based labels become
/// 1-based, with the class count inferred from the largest label.
pub fn load_idx(
    images_path: &Path,
    labels_path: &Path,
    tag: SplitTag,
) -> Result<DatasetSplit, TrainerError> {
    let img = fs::read(images_path).map_err(|source| TrainerError::Io {
        path: images_path.to_path_buf(),
        source,
    })?;
    let lab = fs::read(labels_path).map_err(|source| TrainerError::Io {
        path: labels_path.to_path_buf(),
        source,
    })?;

    if img.len() < 16 {
        return Err(TrainerError::Format(format!(
            "{}: image header needs 16 bytes, found {}",
            images_path.display(),
            img.len()
        )));
    }
    let magic = be_u32(&img, 0);
    if magic != IDX_IMAGES_MAGIC {
        return Err(TrainerError::Format(format!(
            "{}: image magic number {magic} != {IDX_IMAGES_MAGIC}",
            images_path.display()
        )));
    }
    let n = be_u32(&img, 4) as usize;
    let rows = be_u32(&img, 8) as usize;
    let cols = be_u32(&img, 12) as usize;
    let d = rows * cols;
    let expected = 16 + n * d;
    if img.len() != expected {
        return Err(TrainerError::Format(format!(
            "{}: expected {expected} bytes for {n} images of {rows}x{cols}, found {}",
            images_path.display(),
            img.len()
        )));
    }

    if lab.len() < 8 {
        return Err(TrainerError::Format(format!(
            "{}: label header needs 8 bytes, found {}",
            labels_path.display(),
            lab.len()
        )));
    }
    let magic = be_u32(&lab, 0);
    if magic != IDX_LABELS_MAGIC {
        return Err(TrainerError::Format(format!(
            "{}: label magic number {magic} != {IDX_LABELS_MAGIC}",
            labels_path.display()
        )));
    }
    let n_lab = be_u32(&lab, 4) as usize;
    let expected = 8 + n_lab;
    if lab.len() != expected {
        return Err(TrainerError::Format(format!(
            "{}: expected {expected} bytes for {n_lab} labels, found {}",
            labels_path.display(),
            lab.len()
        )));
    }
    if n_lab != n {
        return Err(TrainerError::Format(format!(
            "image file has {n} samples but label file has {n_lab}"
        )));
    }

    let flat: Vec<f64> = img[16..].iter().map(|&b| f64::from(b) / 255.0).collect();
    let features = Array2::from_shape_vec((n, d), flat)
        .expect("byte count was checked against the header");
    let labels: Vec<usize> = lab[8..].iter().map(|&b| b as usize + 1).collect();
    let num_classes = labels.iter().copied().max().unwrap_or(0).max(2);
    DatasetSplit::new(features, labels, num_classes, tag)
}

/// Loads a dataset CSV with header `x1,...,xd,y` (1-based integer labels).
///
/// Each feature column is rescaled to [0, 1] by its own min/max (a constant
/// column maps to 0), matching the loaders' common contract.
pub fn load_csv(path: &Path, tag: SplitTag) -> Result<DatasetSplit, TrainerError> {
    let text = fs::read_to_string(path).map_err(|source| TrainerError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| {
        TrainerError::Format(format!("{}: empty file", path.display()))
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols.last() != Some(&"y") {
        return Err(TrainerError::Format(format!(
            "{}: expected header x1,...,xd,y with d >= 2, got {header:?}",
            path.display()
        )));
    }
    let d = cols.len() - 1;
    for (i, col) in cols[..d].iter().enumerate() {
        let want = format!("x{}", i + 1);
        if *col != want {
            return Err(TrainerError::Format(format!(
                "{}: header column {} is {col:?}, expected {want:?}",
                path.display(),
                i + 1
            )));
        }
    }

    let mut flat: Vec<f64> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != d + 1 {
            return Err(TrainerError::Format(format!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                idx + 1,
                fields.len(),
                d + 1
            )));
        }
        for f in &fields[..d] {
            let v: f64 = f.parse().map_err(|_| {
                TrainerError::Format(format!(
                    "{}: row {}: cannot parse feature value {f:?}",
                    path.display(),
                    idx + 1
                ))
            })?;
            flat.push(v);
        }
        let y: usize = fields[d].parse().map_err(|_| {
            TrainerError::Format(format!(
                "{}: row {}: cannot parse label {:?} as a positive integer",
                path.display(),
                idx + 1,
                fields[d]
            ))
        })?;
        if y < 1 {
            return Err(TrainerError::Format(format!(
                "{}: row {}: labels are 1-based, got {y}",
                path.display(),
                idx + 1
            )));
        }
        labels.push(y);
    }
    if labels.is_empty() {
        return Err(TrainerError::Format(format!(
            "{}: no data rows",
            path.display()
        )));
    }

    let n = labels.len();
    let mut features = Array2::from_shape_vec((n, d), flat)
        .expect("every row contributed exactly d features");
    for mut col in features.columns_mut() {
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        if span > 0.0 {
            col.mapv_inplace(|v| (v - lo) / span);
        } else {
            col.fill(0.0);
        }
    }
    let num_classes = labels.iter().copied().max().unwrap().max(2);
    DatasetSplit::new(features, labels, num_classes, tag)
}

/// Writes a split as a dataset CSV (`x1,...,xd,y`), reals with 17
/// significant digits so a reload reproduces the same values.
pub fn save_csv(split: &DatasetSplit, path: &Path) -> Result<(), TrainerError> {
    let io_err = |source| TrainerError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = Vec::with_capacity(split.len() * split.dim() * 26);
    for i in 0..split.dim() {
        write!(out, "x{},", i + 1).map_err(io_err)?;
    }
    writeln!(out, "y").map_err(io_err)?;
    for (row, &y) in split.features.rows().into_iter().zip(&split.labels) {
        for v in row.iter() {
            write!(out, "{v:.16e},").map_err(io_err)?;
        }
        writeln!(out, "{y}").map_err(io_err)?;
    }
    fs::write(path, out).map_err(io_err)
}

/// Splits the last `n_val` samples off as a validation set (the
/// conventional hold-out for the 60000-sample digit corpus: 50000/10000).
pub fn split_off_validation(
    split: &DatasetSplit,
    n_val: usize,
) -> Result<(DatasetSplit, DatasetSplit), TrainerError> {
    let n = split.len();
    if n_val == 0 || n_val >= n {
        return Err(TrainerError::InvalidConfig(format!(
            "cannot hold out {n_val} of {n} samples for validation"
        )));
    }
    let cut = n - n_val;
    let train = DatasetSplit::new(
        split.features.slice(ndarray::s![..cut, ..]).to_owned(),
        split.labels[..cut].to_vec(),
        split.num_classes,
        SplitTag::Train,
    )?;
    let validation = DatasetSplit::new(
        split.features.slice(ndarray::s![cut.., ..]).to_owned(),
        split.labels[cut..].to_vec(),
        split.num_classes,
        SplitTag::Validation,
    )?;
    Ok((train, validation))
}
