//! Dataset representation, CSV ingestion, splitting, and seed derivation.
//!
//! Every stochastic operation in the toolkit draws its randomness from a
//! [`SeedTree`]: a master seed plus a path of 32-bit labels (universe
//! index, tree index, fold index, ...). Derivation is a pure, documented
//! mixing function, so parallel workers get independent streams and the
//! same configuration replays bit-identically on any platform.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Environment variable naming the default dataset search directory.
pub const DATA_DIR_ENV: &str = "RAREKIT_DATA_DIR";

/// Response attached to the feature rows: ±1 class labels or reals.
#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Class(Vec<i8>),
    Real(Vec<f64>),
}

impl Response {
    pub fn len(&self) -> usize {
        match self {
            Response::Class(v) => v.len(),
            Response::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An immutable numeric dataset: an n×d feature matrix with a response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    response: Response,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: DMatrix<f64>,
        response: Response,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let (n, d) = features.shape();
        if n == 0 || d == 0 {
            return Err(Error::InvalidParameter(
                "dataset needs n >= 1 and d >= 1".into(),
            ));
        }
        if feature_names.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: feature_names.len(),
            });
        }
        for j in 0..d {
            for k in (j + 1)..d {
                if feature_names[j] == feature_names[k] {
                    return Err(Error::DuplicateColumn(feature_names[j].clone()));
                }
            }
        }
        if response.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: response.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "feature matrix contains NaN or Inf".into(),
            ));
        }
        if let Response::Class(labels) = &response {
            if labels.iter().any(|&y| y != -1 && y != 1) {
                return Err(Error::InvalidParameter(
                    "class labels must be -1 or +1".into(),
                ));
            }
        }
        Ok(Dataset {
            features,
            response,
            feature_names,
        })
    }

    /// Convenience constructor with generated column names `x1..xd`.
    pub fn from_parts(features: DMatrix<f64>, response: Response) -> Result<Self> {
        let names = (1..=features.ncols()).map(|j| format!("x{j}")).collect();
        Dataset::new(features, response, names)
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn response(&self) -> &Response {
        &self.response
    }

    pub fn labels(&self) -> Result<&[i8]> {
        match &self.response {
            Response::Class(v) => Ok(v),
            Response::Real(_) => Err(Error::NotClassification),
        }
    }

    pub fn reals(&self) -> Result<&[f64]> {
        match &self.response {
            Response::Real(v) => Ok(v),
            Response::Class(_) => Err(Error::NotRegression),
        }
    }

    /// Row `i` as an owned vector.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.features.row(i).iter().copied().collect()
    }

    /// New dataset from the given row indices (duplicates allowed).
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter("empty row selection".into()));
        }
        let d = self.d();
        let features = DMatrix::from_fn(indices.len(), d, |i, j| self.features[(indices[i], j)]);
        let response = match &self.response {
            Response::Class(v) => Response::Class(indices.iter().map(|&i| v[i]).collect()),
            Response::Real(v) => Response::Real(indices.iter().map(|&i| v[i]).collect()),
        };
        Dataset::new(features, response, self.feature_names.clone())
    }
}

/// How to map raw label cells onto ±1 (or keep them real).
#[derive(Debug, Clone)]
pub enum LabelCoding {
    /// `{0 -> -1, 1 -> +1}` plus identity on `{-1, +1}`.
    Default,
    /// Explicit mapping from the raw (trimmed) cell text.
    Map(BTreeMap<String, i8>),
    /// Keep the response real-valued (regression use).
    Real,
}

impl LabelCoding {
    fn decode(&self, raw: &str) -> Result<i8> {
        let raw = raw.trim();
        match self {
            LabelCoding::Default => match raw {
                "0" => Ok(-1),
                "1" | "+1" => Ok(1),
                "-1" => Ok(-1),
                other => Err(Error::UnknownLabel(other.to_string())),
            },
            LabelCoding::Map(map) => map
                .get(raw)
                .copied()
                .ok_or_else(|| Error::UnknownLabel(raw.to_string())),
            LabelCoding::Real => unreachable!("decode is not used for real responses"),
        }
    }
}

/// Resolve a dataset path, falling back to `$RAREKIT_DATA_DIR`.
pub fn resolve_data_path(path: &Path) -> PathBuf {
    if path.exists() {
        return path.to_path_buf();
    }
    if let Ok(dir) = std::env::var(DATA_DIR_ENV) {
        let candidate = Path::new(&dir).join(path);
        if candidate.exists() {
            return candidate;
        }
    }
    path.to_path_buf()
}

/// Load a headered CSV, pulling `label_column` out as the response.
///
/// Remaining columns keep their file order as features.
pub fn load_csv(path: &Path, label_column: &str, coding: &LabelCoding) -> Result<Dataset> {
    let path = resolve_data_path(path);
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(&path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|s| s.trim().to_string()).collect();
    for j in 0..headers.len() {
        for k in (j + 1)..headers.len() {
            if headers[j] == headers[k] {
                return Err(Error::DuplicateColumn(headers[j].clone()));
            }
        }
    }
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingColumn(label_column.to_string()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<i8> = Vec::new();
    let mut reals: Vec<f64> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                match coding {
                    LabelCoding::Real => {
                        reals.push(parse_cell(cell, i, &headers[j])?);
                    }
                    _ => labels.push(coding.decode(cell)?),
                }
            } else {
                row.push(parse_cell(cell, i, &headers[j])?);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidParameter("CSV has no data rows".into()));
    }
    let n = rows.len();
    let d = feature_names.len();
    let features = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    let response = match coding {
        LabelCoding::Real => Response::Real(reals),
        _ => Response::Class(labels),
    };
    Dataset::new(features, response, feature_names)
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| Error::NonNumericCell {
        row,
        column: column.to_string(),
        value: cell.to_string(),
    })?;
    if !v.is_finite() {
        return Err(Error::NonNumericCell {
            row,
            column: column.to_string(),
            value: cell.to_string(),
        });
    }
    Ok(v)
}

/// Write a dataset back to CSV with the response as a final `label` column.
///
/// Floats use Rust's shortest round-trip formatting, so
/// `load_csv(write_csv(ds))` reproduces values exactly.
pub fn write_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ds.feature_names().to_vec();
    header.push("label".to_string());
    writer.write_record(&header)?;
    for i in 0..ds.n() {
        let mut record: Vec<String> =
            (0..ds.d()).map(|j| format!("{}", ds.features()[(i, j)])).collect();
        match ds.response() {
            Response::Class(v) => record.push(format!("{}", v[i])),
            Response::Real(v) => record.push(format!("{}", v[i])),
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Train fraction plus seed for a reproducible two-way split.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

/// Split into (train, test) with train size = round(fraction · n).
///
/// The row permutation is a seeded shuffle, so identical `(ds, spec)`
/// always produce identical index sets. Sampling is unstratified.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train_idx, test_idx) = split_indices(ds.n(), spec)?;
    Ok((ds.subset(&train_idx)?, ds.subset(&test_idx)?))
}

/// Index form of [`split`], exposed for harness code that needs the sets.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidParameter(
            "train_fraction must be in (0, 1)".into(),
        ));
    }
    if n < 2 {
        return Err(Error::InvalidParameter("split needs n >= 2".into()));
    }
    let n_train = (spec.train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::DegenerateSplit);
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    indices.shuffle(&mut rng);
    let test = indices.split_off(n_train);
    Ok((indices, test))
}

/// Master seed plus a path of 32-bit labels identifying a task.
#[derive(Debug, Clone)]
pub struct SeedTree {
    pub master: u64,
    pub path: Vec<u32>,
}

impl SeedTree {
    pub fn new(master: u64) -> Self {
        SeedTree {
            master,
            path: Vec::new(),
        }
    }

    pub fn child(&self, label: u32) -> SeedTree {
        let mut path = self.path.clone();
        path.push(label);
        SeedTree {
            master: self.master,
            path,
        }
    }

    pub fn seed(&self) -> u64 {
        derive_seed(self.master, &self.path)
    }

    /// ChaCha8 stream for this node of the tree.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed())
    }
}

/// Derive a child seed from `(master, path)`.
///
/// The empty path returns the master itself. Otherwise the path is
/// folded through the SplitMix64 finalizer [`mix64`], starting from
/// `master XOR mix64(path length)`:
///
/// ```text
/// s = master ^ mix64(len)
/// for label in path { s = mix64(s ^ label) }
/// ```
///
/// This is stateless and platform-independent; distinct paths give
/// distinct streams (verified by brute force over short paths).
pub fn derive_seed(master: u64, path: &[u32]) -> u64 {
    if path.is_empty() {
        return master;
    }
    let mut s = master ^ mix64(path.len() as u64);
    for &label in path {
        s = mix64(s ^ u64::from(label));
    }
    s
}

/// SplitMix64 finalizer (constants from Steele, Lea & Flood).
pub fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58476d1ce4e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d049bb133111eb);
    z ^= z >> 31;
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;
    use std::io::Write;

    fn tiny_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_csv_maps_labels() {
        let f = tiny_csv("a,b,y\n1.0,2.0,0\n3.5,4.5,1\n-1.0,0.0,1\n");
        let ds = load_csv(f.path(), "y", &LabelCoding::Default).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.d(), 2);
        assert_eq!(ds.labels().unwrap(), &[-1, 1, 1]);
        assert_eq!(ds.feature_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(ds.features()[(1, 1)], 4.5);
    }

    #[test]
    fn load_csv_rejects_non_numeric() {
        let f = tiny_csv("a,y\n1.0,0\nabc,1\n");
        let err = load_csv(f.path(), "y", &LabelCoding::Default).unwrap_err();
        assert!(matches!(err, Error::NonNumericCell { row: 1, .. }));
    }

    #[test]
    fn load_csv_rejects_unknown_label() {
        let f = tiny_csv("a,y\n1.0,2\n");
        let err = load_csv(f.path(), "y", &LabelCoding::Default).unwrap_err();
        assert!(matches!(err, Error::UnknownLabel(_)));
    }

    #[test]
    fn load_csv_rejects_duplicate_columns() {
        let f = tiny_csv("a,a,y\n1.0,2.0,0\n");
        let err = load_csv(f.path(), "y", &LabelCoding::Default).unwrap_err();
        assert!(matches!(err, Error::DuplicateColumn(_)));
    }

    #[test]
    fn load_csv_missing_file() {
        let err = load_csv(Path::new("/nonexistent/x.csv"), "y", &LabelCoding::Default)
            .unwrap_err();
        assert!(matches!(err, Error::Csv(_) | Error::Io(_)));
    }

    #[test]
    fn csv_round_trip_exact() {
        let features = DMatrix::from_row_slice(
            3,
            2,
            &[0.1, -2.5e-7, std::f64::consts::PI, 1.0 / 3.0, 4e12, -0.0],
        );
        let ds = Dataset::from_parts(features, Response::Real(vec![1.25, -0.75, 1e-300])).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_csv(&ds, f.path()).unwrap();
        let back = load_csv(f.path(), "label", &LabelCoding::Real).unwrap();
        assert_eq!(back.features(), ds.features());
        assert_eq!(back.reals().unwrap(), ds.reals().unwrap());
    }

    #[test]
    fn split_partitions_and_is_deterministic() {
        for n in [2usize, 3, 10, 57, 200] {
            for seed in 0..100u64 {
                let frac = 0.5;
                let spec = SplitSpec {
                    train_fraction: frac,
                    seed,
                };
                let (train, test) = split_indices(n, &spec).unwrap();
                let (train2, test2) = split_indices(n, &spec).unwrap();
                assert_eq!(train, train2);
                assert_eq!(test, test2);
                assert_eq!(train.len(), (frac * n as f64).round() as usize);
                let mut all: Vec<usize> = train.iter().chain(test.iter()).copied().collect();
                all.sort_unstable();
                assert_eq!(all, (0..n).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn split_sizes_match_fraction() {
        let spec = SplitSpec {
            train_fraction: 1536.0 / 4601.0,
            seed: 11,
        };
        let (train, test) = split_indices(4601, &spec).unwrap();
        assert_eq!(train.len(), 1536);
        assert_eq!(test.len(), 3065);
    }

    #[test]
    fn split_rejects_degenerate() {
        let spec = SplitSpec {
            train_fraction: 0.01,
            seed: 0,
        };
        assert!(matches!(
            split_indices(3, &spec).unwrap_err(),
            Error::DegenerateSplit
        ));
    }

    #[test]
    fn derive_seed_identity_on_empty_path() {
        assert_eq!(derive_seed(12345, &[]), 12345);
        assert_eq!(derive_seed(u64::MAX, &[]), u64::MAX);
    }

    #[test]
    fn derive_seed_is_pure() {
        assert_eq!(derive_seed(7, &[1, 2, 3]), derive_seed(7, &[1, 2, 3]));
        assert_ne!(derive_seed(7, &[1]), derive_seed(7, &[2]));
    }

    #[test]
    fn derive_seed_no_collisions_short_paths() {
        // All paths of length <= 2 with labels < 256 under one master.
        let master = 0x9e3779b97f4a7c15;
        let mut seen = HashSet::new();
        assert!(seen.insert(derive_seed(master, &[])));
        for a in 0..256u32 {
            assert!(seen.insert(derive_seed(master, &[a])), "collision at [{a}]");
        }
        for a in 0..256u32 {
            for b in 0..256u32 {
                assert!(
                    seen.insert(derive_seed(master, &[a, b])),
                    "collision at [{a}, {b}]"
                );
            }
        }
    }

    #[test]
    fn dataset_rejects_bad_labels() {
        let features = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let err = Dataset::from_parts(features, Response::Class(vec![0, 1])).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn dataset_rejects_non_finite() {
        let features = DMatrix::from_row_slice(2, 1, &[1.0, f64::NAN]);
        let err = Dataset::from_parts(features, Response::Class(vec![1, -1])).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }
}
