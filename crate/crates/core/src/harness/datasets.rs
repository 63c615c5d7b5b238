//! Labeled data sources: synthetic generators, IDX files and CSV files.

use std::path::PathBuf;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, derive_seed};

/// Samples as rows plus one target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub points: DMatrix<f64>,
    pub labels: Vec<f64>,
}

impl LabeledData {
    pub fn new(points: DMatrix<f64>, labels: Vec<f64>) -> Result<Self> {
        if points.nrows() != labels.len() {
            return Err(Error::DimensionMismatch { expected: points.nrows(), got: labels.len() });
        }
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(Error::InvalidDimensions("dataset is empty".into()));
        }
        Ok(LabeledData { points, labels })
    }

    pub fn samples(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    /// Scale every non-zero row to unit ℓ₂ norm.
    pub fn normalize_rows(&mut self) {
        for mut row in self.points.row_iter_mut() {
            let norm = row.norm();
            if norm > 0.0 {
                row /= norm;
            }
        }
    }

    /// Smallest `b_i a_iᵀx` over the samples.
    pub fn min_margin(&self, x: &[f64]) -> f64 {
        self.points
            .row_iter()
            .zip(&self.labels)
            .map(|(r, l)| l * r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }
}

fn default_true() -> bool {
    true
}

/// Where a dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Two Gaussian classes with identity covariance and means
    /// `±mean_norm·(1,…,1)/√dim`. Labels alternate `+1, −1`.
    GaussianClasses { samples: usize, dim: usize, mean_norm: f64, seed: u64 },
    /// Regression data: entries of `A` are cubes of standard normals and the
    /// targets are standard normal.
    GaussianCubed { samples: usize, dim: usize, seed: u64 },
    /// IDX image and label files; two digits are kept and mapped to `±1`.
    /// Pixels are scaled to `[0, 1]`.
    Idx {
        images: PathBuf,
        labels: PathBuf,
        positive: u8,
        negative: u8,
        #[serde(default)]
        limit: Option<usize>,
        #[serde(default = "default_true")]
        normalize: bool,
    },
    /// Numeric CSV, one sample per row, the last column is the target.
    Csv {
        path: PathBuf,
        #[serde(default)]
        normalize: bool,
    },
}

impl DatasetSource {
    /// A copy whose synthetic generator seed is mixed with `realization`.
    /// File sources are returned unchanged.
    pub fn for_realization(&self, realization: u64) -> DatasetSource {
        let mut out = self.clone();
        match &mut out {
            DatasetSource::GaussianClasses { seed, .. } | DatasetSource::GaussianCubed { seed, .. } => {
                *seed = derive_seed(*seed, &[realization]);
            }
            DatasetSource::Idx { .. } | DatasetSource::Csv { .. } => {}
        }
        out
    }
}

pub fn load_dataset(source: &DatasetSource) -> Result<LabeledData> {
    match source {
        DatasetSource::GaussianClasses { samples, dim, mean_norm, seed } => {
            gaussian_classes(*samples, *dim, *mean_norm, *seed)
        }
        DatasetSource::GaussianCubed { samples, dim, seed } => gaussian_cubed(*samples, *dim, *seed),
        DatasetSource::Idx { images, labels, positive, negative, limit, normalize } => {
            let images = parse_idx(&std::fs::read(images)?)?;
            let labels = parse_idx(&std::fs::read(labels)?)?;
            let mut data = idx_binary(&images, &labels, *positive, *negative, *limit)?;
            if *normalize {
                data.normalize_rows();
            }
            Ok(data)
        }
        DatasetSource::Csv { path, normalize } => {
            let mut data = parse_csv_dataset(&std::fs::read_to_string(path)?)?;
            if *normalize {
                data.normalize_rows();
            }
            Ok(data)
        }
    }
}

pub fn gaussian_classes(samples: usize, dim: usize, mean_norm: f64, seed: u64) -> Result<LabeledData> {
    if samples == 0 || dim == 0 {
        return Err(Error::InvalidDimensions(format!("{samples} samples of dimension {dim}")));
    }
    if !mean_norm.is_finite() {
        return Err(Error::InvalidDimensions(format!("mean norm {mean_norm}")));
    }
    let shift = mean_norm / (dim as f64).sqrt();
    let mut r = rng::seeded(seed);
    let mut points = DMatrix::zeros(samples, dim);
    let mut labels = Vec::with_capacity(samples);
    for i in 0..samples {
        let label = if i % 2 == 0 { 1.0 } else { -1.0 };
        let z = rng::normal_vec(&mut r, dim);
        for (j, zj) in z.into_iter().enumerate() {
            points[(i, j)] = zj + label * shift;
        }
        labels.push(label);
    }
    LabeledData::new(points, labels)
}

pub fn gaussian_cubed(samples: usize, dim: usize, seed: u64) -> Result<LabeledData> {
    if samples == 0 || dim == 0 {
        return Err(Error::InvalidDimensions(format!("{samples} samples of dimension {dim}")));
    }
    let mut r = rng::seeded(seed);
    let entries = rng::gaussian_cubed(&mut r, samples * dim);
    let points = DMatrix::from_row_slice(samples, dim, &entries);
    let labels = rng::normal_vec(&mut r, samples);
    LabeledData::new(points, labels)
}

/// Cap on the element count of a parsed IDX array.
pub const MAX_IDX_ELEMENTS: usize = 1 << 28;

/// A decoded IDX array in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub values: Vec<f64>,
}

/// Parse the big-endian IDX format: two zero bytes, a type code, the rank,
/// one `u32` per dimension, then the elements.
pub fn parse_idx(bytes: &[u8]) -> Result<IdxArray> {
    if bytes.len() < 4 {
        return Err(Error::Parse("IDX header is shorter than 4 bytes".into()));
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(Error::Parse(format!("bad IDX magic {:02x}{:02x}", bytes[0], bytes[1])));
    }
    let width = match bytes[2] {
        0x08 | 0x09 => 1,
        0x0B => 2,
        0x0C | 0x0D => 4,
        0x0E => 8,
        t => return Err(Error::Parse(format!("unknown IDX element type 0x{t:02x}"))),
    };
    let rank = bytes[3] as usize;
    if rank == 0 {
        return Err(Error::Parse("IDX rank 0".into()));
    }
    let header = 4 + 4 * rank;
    if bytes.len() < header {
        return Err(Error::Parse("IDX dimension table is truncated".into()));
    }
    let mut dims = Vec::with_capacity(rank);
    let mut count = 1usize;
    for d in bytes[4..header].chunks_exact(4) {
        let dim = u32::from_be_bytes([d[0], d[1], d[2], d[3]]) as usize;
        count = count
            .checked_mul(dim)
            .filter(|&c| c <= MAX_IDX_ELEMENTS)
            .ok_or_else(|| Error::Parse("IDX array is too large".into()))?;
        dims.push(dim);
    }
    let body = &bytes[header..];
    if body.len() != count * width {
        return Err(Error::Parse(format!("IDX body has {} bytes, expected {}", body.len(), count * width)));
    }
    let values = body
        .chunks_exact(width)
        .map(|c| match bytes[2] {
            0x08 => c[0] as f64,
            0x09 => c[0] as i8 as f64,
            0x0B => i16::from_be_bytes([c[0], c[1]]) as f64,
            0x0C => i32::from_be_bytes([c[0], c[1], c[2], c[3]]) as f64,
            0x0D => f32::from_be_bytes([c[0], c[1], c[2], c[3]]) as f64,
            _ => f64::from_be_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]),
        })
        .collect();
    Ok(IdxArray { dims, values })
}

/// Keep the samples labeled `positive` (→ +1) or `negative` (→ −1).
/// Each image is flattened and divided by 255.
pub fn idx_binary(
    images: &IdxArray,
    labels: &IdxArray,
    positive: u8,
    negative: u8,
    limit: Option<usize>,
) -> Result<LabeledData> {
    if positive == negative {
        return Err(Error::Parse("positive and negative digits coincide".into()));
    }
    let count = *images.dims.first().unwrap_or(&0);
    if labels.dims.len() != 1 || labels.dims[0] != count {
        return Err(Error::DimensionMismatch { expected: count, got: labels.dims.first().copied().unwrap_or(0) });
    }
    let features: usize = images.dims[1..].iter().product();
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for (i, &l) in labels.values.iter().enumerate() {
        if limit.is_some_and(|m| targets.len() >= m) {
            break;
        }
        let target = if l == positive as f64 {
            1.0
        } else if l == negative as f64 {
            -1.0
        } else {
            continue;
        };
        rows.extend(images.values[i * features..(i + 1) * features].iter().map(|v| v / 255.0));
        targets.push(target);
    }
    if targets.is_empty() {
        return Err(Error::Parse(format!("no samples labeled {positive} or {negative}")));
    }
    LabeledData::new(DMatrix::from_row_slice(targets.len(), features, &rows), targets)
}

fn parse_number(field: &str) -> Option<f64> {
    field.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Numeric CSV with the target in the last column. A first row that does
/// not parse as numbers is treated as a header.
pub fn parse_csv_dataset(text: &str) -> Result<LabeledData> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("CSV: {e}")))?;
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let parsed: Option<Vec<f64>> = record.iter().map(parse_number).collect();
        match parsed {
            Some(v) => rows.push(v),
            None if line == 0 => continue,
            None => return Err(Error::Parse(format!("CSV row {}: non-numeric field", line + 1))),
        }
    }
    let width = rows.first().map_or(0, |r| r.len());
    if width < 2 {
        return Err(Error::Parse("CSV needs at least one feature column and a label column".into()));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
        return Err(Error::Parse(format!("CSV data row {} has {} fields, expected {width}", i + 1, r.len())));
    }
    let mut flat = Vec::with_capacity(rows.len() * (width - 1));
    let mut labels = Vec::with_capacity(rows.len());
    for r in &rows {
        flat.extend_from_slice(&r[..width - 1]);
        labels.push(r[width - 1]);
    }
    LabeledData::new(DMatrix::from_row_slice(rows.len(), width - 1, &flat), labels)
}

/// A vector written as one value per line or as a single comma-separated row.
/// Blank lines are ignored.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let fields: Vec<&str> = match lines.as_slice() {
        [] => return Err(Error::Parse("empty vector".into())),
        [single] => single.split(',').collect(),
        many => {
            if many.iter().any(|l| l.contains(',')) {
                return Err(Error::Parse("expected one value per line or a single CSV row".into()));
            }
            many.to_vec()
        }
    };
    fields
        .iter()
        .enumerate()
        .map(|(i, f)| parse_number(f).ok_or_else(|| Error::Parse(format!("entry {}: `{}` is not a finite number", i + 1, f.trim()))))
        .collect()
}

/// Inverse of [`parse_vector`]: one value per line, shortest round-trip form.
pub fn format_vector(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}\n")).collect()
}
