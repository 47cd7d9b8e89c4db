//! Dataset loading and preprocessing.
//!
//! CSV input is comma separated UTF-8 with an optional header row. Missing
//! feature cells are written as an empty string or `?` and held as `NaN`
//! until [`impute_missing`] fills them.

use std::collections::HashMap;
use std::io;
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Last,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// Row-major features; missing cells are `NaN`.
    pub points: Vec<Vec<f64>>,
    /// Class id per point, numbered by first appearance.
    pub labels: Option<Vec<usize>>,
    /// Original text of each class id.
    pub label_names: Vec<String>,
    /// Number of clusters the merge step aims for.
    pub preset_clusters: usize,
    /// Feature names from the header, if there was one.
    pub feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds an unlabelled dataset.
    pub fn from_points(name: impl Into<String>, points: Vec<Vec<f64>>, preset_clusters: usize) -> Result<Self> {
        let ds = Dataset {
            name: name.into(),
            points,
            labels: None,
            label_names: Vec::new(),
            preset_clusters,
            feature_names: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Attaches class labels, renumbering them by first appearance.
    pub fn with_labels(mut self, labels: &[usize]) -> Result<Self> {
        if labels.len() != self.points.len() {
            return Err(Error::domain(format!(
                "{} labels for {} points",
                labels.len(),
                self.points.len()
            )));
        }
        let mut ids = HashMap::new();
        let mut names = Vec::new();
        let mapped = labels
            .iter()
            .map(|l| {
                *ids.entry(*l).or_insert_with(|| {
                    names.push(l.to_string());
                    names.len() - 1
                })
            })
            .collect();
        self.labels = Some(mapped);
        self.label_names = names;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn class_count(&self) -> Option<usize> {
        self.labels.as_ref().map(|_| self.label_names.len())
    }

    pub fn missing_count(&self) -> usize {
        self.points.iter().flatten().filter(|v| v.is_nan()).count()
    }

    fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if let Some(bad) = self.points.iter().position(|p| p.len() != dim) {
            return Err(Error::domain(format!("point {bad} has {} features, expected {dim}", self.points[bad].len())));
        }
        if self.preset_clusters == 0 {
            return Err(Error::domain("preset cluster count must be at least 1"));
        }
        Ok(())
    }
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c == "?"
}

/// Reads a dataset from CSV. Row numbers in errors count physical records,
/// header included, starting at 1.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool, label_column: Option<LabelColumn>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(file, name, has_header, label_column)
}

pub fn read_csv<R: io::Read>(
    reader: R,
    name: String,
    has_header: bool,
    label_column: Option<LabelColumn>,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut width: Option<usize> = None;
    let mut header: Option<Vec<String>> = None;
    let mut points = Vec::new();
    let mut raw_labels = Vec::new();
    let mut label_idx = None;

    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record?;
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Parse {
                row,
                msg: format!("expected {w} fields, found {}", record.len()),
            });
        }
        let li = *label_idx.get_or_insert(match label_column {
            None => None,
            Some(LabelColumn::Last) => Some(w - 1),
            Some(LabelColumn::Index(i)) if i < w => Some(i),
            Some(LabelColumn::Index(i)) => {
                return Err(Error::Parse { row, msg: format!("label column {i} out of range (width {w})") })
            }
        });
        if has_header && header.is_none() {
            header = Some(
                record
                    .iter()
                    .enumerate()
                    .filter(|&(c, _)| Some(c) != li)
                    .map(|(_, s)| s.to_string())
                    .collect(),
            );
            continue;
        }
        let mut features = Vec::with_capacity(w);
        for (c, cell) in record.iter().enumerate() {
            if Some(c) == li {
                raw_labels.push(cell.to_string());
            } else if is_missing(cell) {
                features.push(f64::NAN);
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row,
                    msg: format!("column {c}: {cell:?} is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse { row, msg: format!("column {c}: non-finite value {cell:?}") });
                }
                features.push(v);
            }
        }
        points.push(features);
    }
    if points.is_empty() {
        return Err(Error::domain("dataset has no rows"));
    }

    let (labels, label_names) = if label_idx.flatten().is_some() {
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut names = Vec::new();
        let labels = raw_labels
            .into_iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l.clone()).or_insert_with(|| {
                    names.push(l);
                    next
                })
            })
            .collect();
        (Some(labels), names)
    } else {
        (None, Vec::new())
    };
    let preset_clusters = label_names.len().max(1);
    Ok(Dataset {
        name,
        points,
        labels,
        label_names,
        preset_clusters,
        feature_names: header,
    })
}

/// Writes features (and labels, as the last column) back out as CSV with a
/// header. Missing cells are written as `?`.
pub fn write_csv<W: io::Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = match &ds.feature_names {
        Some(names) => names.clone(),
        None => (0..ds.dim()).map(|c| format!("x{c}")).collect(),
    };
    if ds.labels.is_some() {
        header.push("class".into());
    }
    w.write_record(&header)?;
    for (p, row) in ds.points.iter().enumerate() {
        let mut rec: Vec<String> = row
            .iter()
            .map(|v| if v.is_nan() { "?".to_string() } else { v.to_string() })
            .collect();
        if let Some(labels) = &ds.labels {
            rec.push(ds.label_names[labels[p]].clone());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Replaces each missing cell with a uniform draw from its column's observed
/// `[min, max]`. Cells are visited row by row, so the result depends only on
/// the input and `seed`.
pub fn impute_missing(ds: &Dataset, seed: u64) -> Result<Dataset> {
    if ds.missing_count() == 0 {
        return Ok(ds.clone());
    }
    let dim = ds.dim();
    let mut ranges = Vec::with_capacity(dim);
    for c in 0..dim {
        let observed = ds.points.iter().map(|p| p[c]).filter(|v| !v.is_nan());
        let (lo, hi) = observed.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo > hi {
            return Err(Error::domain(format!("column {c} has no observed values")));
        }
        ranges.push((lo, hi));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ds.clone();
    for row in &mut out.points {
        for (v, &(lo, hi)) in row.iter_mut().zip(&ranges) {
            if v.is_nan() {
                *v = if lo == hi { lo } else { rng.random_range(lo..=hi) };
            }
        }
    }
    Ok(out)
}

/// Centres every column and scales it to unit sample standard deviation.
/// Constant columns are left as they are.
pub fn standardize(ds: &Dataset) -> Dataset {
    let mut out = ds.clone();
    let n = ds.n();
    if n < 2 {
        return out;
    }
    for c in 0..ds.dim() {
        let mean = ds.points.iter().map(|p| p[c]).sum::<f64>() / n as f64;
        let var = ds.points.iter().map(|p| (p[c] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        if !(sd > 0.0) {
            continue;
        }
        for row in &mut out.points {
            row[c] = (row[c] - mean) / sd;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str, header: bool, label: Option<LabelColumn>) -> Result<Dataset> {
        read_csv(text.as_bytes(), "t".into(), header, label)
    }

    #[test]
    fn toy_file() {
        let ds = parse("a,b,c\n1,2,x\n3,4,y\n5,6,x\n7,8,z\n", true, Some(LabelColumn::Last)).unwrap();
        assert_eq!(ds.n(), 4);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.labels, Some(vec![0, 1, 0, 2]));
        assert_eq!(ds.label_names, vec!["x", "y", "z"]);
        assert_eq!(ds.preset_clusters, 3);
        assert_eq!(ds.feature_names, Some(vec!["a".to_string(), "b".to_string()]));
    }

    #[test]
    fn label_in_first_column() {
        let ds = parse("1,0.5,0.25\n2,1.5,2.5\n", false, Some(LabelColumn::Index(0))).unwrap();
        assert_eq!(ds.points, vec![vec![0.5, 0.25], vec![1.5, 2.5]]);
        assert_eq!(ds.label_names, vec!["1", "2"]);
    }

    #[test]
    fn missing_cells_flagged() {
        let ds = parse("1,?,0\n2,,1\n3,4,0\n", false, Some(LabelColumn::Last)).unwrap();
        assert_eq!(ds.missing_count(), 2);
        assert!(ds.points[0][1].is_nan());
    }

    #[test]
    fn parse_errors_carry_row() {
        match parse("1,2\n3,4,5\n", false, None) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse("h1,h2\n1,2\n3,abc\n", true, None) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("", false, None).is_err());
    }

    #[test]
    fn imputation() {
        let ds = parse("1,10\n?,20\n3,?\n", false, None).unwrap();
        let a = impute_missing(&ds, 7).unwrap();
        let b = impute_missing(&ds, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.missing_count(), 0);
        assert!((1.0..=3.0).contains(&a.points[1][0]));
        assert!((10.0..=20.0).contains(&a.points[2][1]));
        let clean = parse("1,2\n3,4\n", false, None).unwrap();
        assert_eq!(impute_missing(&clean, 1).unwrap(), clean);
        let hopeless = parse("?,1\n?,2\n", false, None).unwrap();
        assert!(impute_missing(&hopeless, 1).is_err());
    }

    #[test]
    fn standardize_examples() {
        let ds = Dataset::from_points("s", vec![vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]], 1).unwrap();
        let s = standardize(&ds);
        let col: Vec<f64> = s.points.iter().map(|p| p[0]).collect();
        assert_eq!(col, vec![-1.0, 0.0, 1.0]);
        assert!(s.points.iter().all(|p| p[1] == 5.0));
    }

    #[test]
    fn write_read_round_trip() {
        let ds = parse("a,b,c\n0.1,2e-7,x\n-3.5,?,y\n", true, Some(LabelColumn::Last)).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), "t".into(), true, Some(LabelColumn::Last)).unwrap();
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.points[0], ds.points[0]);
        assert!(back.points[1][1].is_nan());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_identical(rows in prop::collection::vec(prop::collection::vec(-1e6..1e6_f64, 3), 1..20),
                                       labels in prop::collection::vec(0usize..4, 20)) {
            let n = rows.len();
            let ds = Dataset::from_points("p", rows, 1).unwrap().with_labels(&labels[..n]).unwrap();
            let mut buf = Vec::new();
            write_csv(&ds, &mut buf).unwrap();
            let back = read_csv(buf.as_slice(), "p".into(), true, Some(LabelColumn::Last)).unwrap();
            for (a, b) in ds.points.iter().flatten().zip(back.points.iter().flatten()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(back.labels, ds.labels);
        }

        #[test]
        fn standardized_moments(rows in prop::collection::vec(prop::collection::vec(-100.0..100.0_f64, 2), 3..40)) {
            let ds = Dataset::from_points("p", rows, 1).unwrap();
            let s = standardize(&ds);
            let n = s.n() as f64;
            for c in 0..2 {
                let orig_const = ds.points.iter().all(|p| p[c] == ds.points[0][c]);
                if orig_const { continue; }
                let mean = s.points.iter().map(|p| p[c]).sum::<f64>() / n;
                let var = s.points.iter().map(|p| (p[c] - mean).powi(2)).sum::<f64>() / (n - 1.0);
                prop_assert!(mean.abs() < 1e-9);
                prop_assert!((var.sqrt() - 1.0).abs() < 1e-9);
            }
            let twice = standardize(&s);
            for (a, b) in s.points.iter().flatten().zip(twice.points.iter().flatten()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
